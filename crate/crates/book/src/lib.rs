//! Compiles every code listing in the guide as a doc-test.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/basis.md")]
pub mod basis {}
#[doc = include_str!("../../../book/src/branches.md")]
pub mod branches {}
#[doc = include_str!("../../../book/src/corrections.md")]
pub mod corrections {}
#[doc = include_str!("../../../book/src/success.md")]
pub mod success {}
#[doc = include_str!("../../../book/src/circuits.md")]
pub mod circuits {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
