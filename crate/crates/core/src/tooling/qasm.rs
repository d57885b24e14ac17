//! OpenQASM 3 export and a parser for exactly the subset the exporter writes.
//!
//! Lowering, with `rz`/`crz`/`cu` meaning the `stdgates.inc` gates:
//!
//! | gate | text |
//! |------|------|
//! | `Rz(ξ)` | `rz(ξ) q[t]; gphase(ξ/2);` |
//! | `C-Rz(ξ)` | `crz(ξ) q[c], q[t]; rz(ξ/2) q[c]; gphase(ξ/4);` |
//! | `C-U` | `cu(γ, β, δ, α − (β+δ)/2) q[c], q[t];` from the ZYZ angles of `U` |
//! | 2×2 `Custom` | `gphase(α); rz(δ) q[t]; ry(γ) q[t]; rz(β) q[t];` |
//! | post-selection, `N(0)` | `c[k] = measure q[k]; // postselect c[k] == 0` |
//!
//! Every lowering is exact including global phase, so a parsed program has
//! the same matrix as its source circuit. Parsed programs come back in the
//! `Qasm*` gate kinds and re-emit to identical text.

use std::collections::HashMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt::{self, Write as _};

use thiserror::Error;

use crate::circuit::{Circuit, Op};
use crate::error::{Error, Result};
use crate::gates::{GateKind, GateSpec};
use crate::qmath::zyz_decompose;

const POSTSELECT_MARK: &str = "postselect";

#[derive(Debug, Clone, PartialEq)]
pub struct QasmProgram {
    pub source_text: String,
    /// Gate statements, `gphase` included, measurements excluded.
    pub gate_count: usize,
    pub declared_qubits: usize,
}

impl fmt::Display for QasmProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source_text)
    }
}

struct Emitter {
    text: String,
    gate_count: usize,
}

impl Emitter {
    fn gate(&mut self, name: &str, params: &[f64], qubits: &[usize]) {
        self.text.push_str(name);
        if !params.is_empty() {
            let ps: Vec<String> = params.iter().map(|p| p.to_string()).collect();
            let _ = write!(self.text, "({})", ps.join(", "));
        }
        if !qubits.is_empty() {
            let qs: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
            let _ = write!(self.text, " {}", qs.join(", "));
        }
        self.text.push_str(";\n");
        self.gate_count += 1;
    }

    fn measure(&mut self, q: usize, postselect: bool) {
        let _ = write!(self.text, "c[{q}] = measure q[{q}];");
        if postselect {
            let _ = write!(self.text, " // {POSTSELECT_MARK} c[{q}] == 0");
        }
        self.text.push('\n');
    }
}

fn check_finite(g: &GateSpec, params: &[f64]) -> Result<()> {
    if params.iter().all(|p| p.is_finite()) {
        Ok(())
    } else {
        Err(Error::Unsupported(format!("{g}: non-finite angle")))
    }
}

/// Lowers a circuit to OpenQASM 3 text.
pub fn emit_qasm(circuit: &Circuit) -> Result<QasmProgram> {
    let n = circuit.n_qubits();
    let mut e = Emitter {
        text: format!("OPENQASM 3.0;\ninclude \"stdgates.inc\";\nqubit[{n}] q;\nbit[{n}] c;\n"),
        gate_count: 0,
    };
    for op in circuit.ops() {
        match op {
            Op::Gate(g) => emit_gate(&mut e, g)?,
            Op::Measure(q) => e.measure(*q, false),
            Op::PostSelect(q) => e.measure(*q, true),
        }
    }
    Ok(QasmProgram {
        source_text: e.text,
        gate_count: e.gate_count,
        declared_qubits: n,
    })
}

fn emit_gate(e: &mut Emitter, g: &GateSpec) -> Result<()> {
    use GateKind::*;
    let t = g.targets.first().copied();
    let c = g.controls.first().copied();
    let unsupported = |why: &str| Error::Unsupported(format!("{g}: {why}"));
    match &g.kind {
        H => e.gate("h", &[], &[t.unwrap()]),
        S => e.gate("s", &[], &[t.unwrap()]),
        X => e.gate("x", &[], &[t.unwrap()]),
        Y => e.gate("y", &[], &[t.unwrap()]),
        Z => e.gate("z", &[], &[t.unwrap()]),
        Cnot => e.gate("cx", &[], &[c.unwrap(), t.unwrap()]),
        Ry(a) => {
            check_finite(g, &[*a])?;
            e.gate("ry", &[*a], &[t.unwrap()]);
        }
        Rz(a) => {
            check_finite(g, &[*a])?;
            e.gate("rz", &[*a], &[t.unwrap()]);
            e.gate("gphase", &[a / 2.0], &[]);
        }
        ControlledRz(a) => {
            check_finite(g, &[*a])?;
            e.gate("crz", &[*a], &[c.unwrap(), t.unwrap()]);
            e.gate("rz", &[a / 2.0], &[c.unwrap()]);
            e.gate("gphase", &[a / 4.0], &[]);
        }
        QasmRz(a) => {
            check_finite(g, &[*a])?;
            e.gate("rz", &[*a], &[t.unwrap()]);
        }
        QasmCrz(a) => {
            check_finite(g, &[*a])?;
            e.gate("crz", &[*a], &[c.unwrap(), t.unwrap()]);
        }
        QasmCu {
            theta,
            phi,
            lambda,
            gamma,
        } => {
            let ps = [*theta, *phi, *lambda, *gamma];
            check_finite(g, &ps)?;
            e.gate("cu", &ps, &[c.unwrap(), t.unwrap()]);
        }
        GlobalPhase(a) => {
            check_finite(g, &[*a])?;
            e.gate("gphase", &[*a], &[]);
        }
        ControlledU(m) => {
            let z = zyz_decompose(m).map_err(|err| unsupported(&err.to_string()))?;
            let gamma = z.alpha - (z.beta + z.delta) / 2.0;
            e.gate(
                "cu",
                &[z.gamma, z.beta, z.delta, gamma],
                &[c.unwrap(), t.unwrap()],
            );
        }
        Custom(m) => {
            if m.rows() != 2 {
                return Err(unsupported(
                    "only single-qubit custom gates can be exported",
                ));
            }
            let z = zyz_decompose(m).map_err(|err| unsupported(&err.to_string()))?;
            let q = t.unwrap();
            e.gate("gphase", &[z.alpha], &[]);
            e.gate("rz", &[z.delta], &[q]);
            e.gate("ry", &[z.gamma], &[q]);
            e.gate("rz", &[z.beta], &[q]);
        }
        N(d) if *d == 0.0 => e.measure(t.unwrap(), true),
        N(_) => return Err(unsupported("only N(0) has a post-selection form")),
    }
    Ok(())
}

/// Angle of the controlled rotation inside the EJM circuit for `θ`.
pub fn ejm_crz_angle(theta: f64) -> f64 {
    FRAC_PI_2 - theta
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("unknown token `{0}`")]
    UnknownToken(String),
    #[error("`{gate}` takes {expected} {what}, got {found}")]
    ArityMismatch {
        gate: String,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("undeclared register `{0}`")]
    UndeclaredRegister(String),
    #[error("index {index} out of range for register `{register}` of size {size}")]
    IndexOutOfRange {
        register: String,
        index: usize,
        size: usize,
    },
    #[error("malformed angle `{0}`")]
    MalformedAngle(String),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("{0}")]
    InvalidGate(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Punct(char),
    Comment(String),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) | Tok::Number(s) => write!(f, "`{s}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Punct(c) => write!(f, "`{c}`"),
            Tok::Comment(_) => f.write_str("comment"),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn lex(text: &str) -> std::result::Result<Vec<Spanned>, ParseError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let (l, col) = (li + 1, i + 1);
            let push = |out: &mut Vec<Spanned>, tok| out.push(Spanned { tok, line: l, col });
            if c.is_whitespace() {
                i += 1;
            } else if c == '/' && chars.get(i + 1) == Some(&'/') {
                let rest: String = chars[i + 2..].iter().collect();
                push(&mut out, Tok::Comment(rest.trim().to_string()));
                break;
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                push(&mut out, Tok::Ident(chars[start..i].iter().collect()));
            } else if c.is_ascii_digit() || c == '.' {
                let start = i;
                while i < chars.len() {
                    let d = chars[i];
                    let exp_sign = (d == '+' || d == '-') && matches!(chars[i - 1], 'e' | 'E');
                    if d.is_ascii_alphanumeric() || d == '.' || exp_sign {
                        i += 1;
                    } else {
                        break;
                    }
                }
                push(&mut out, Tok::Number(chars[start..i].iter().collect()));
            } else if c == '"' {
                let end = chars[i + 1..]
                    .iter()
                    .position(|&d| d == '"')
                    .ok_or(ParseError {
                        line: l,
                        col,
                        kind: ParseErrorKind::UnknownToken("unterminated string".into()),
                    })?;
                push(
                    &mut out,
                    Tok::Str(chars[i + 1..i + 1 + end].iter().collect()),
                );
                i += end + 2;
            } else if ";,()[]=-+".contains(c) {
                push(&mut out, Tok::Punct(c));
                i += 1;
            } else {
                return Err(ParseError {
                    line: l,
                    col,
                    kind: ParseErrorKind::UnknownToken(c.to_string()),
                });
            }
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    qregs: HashMap<String, (usize, usize)>,
    bregs: HashMap<String, usize>,
    n_qubits: usize,
    ops: Vec<Op>,
}

/// `(parameters, qubits)` of each gate the parser accepts.
fn gate_arity(name: &str) -> Option<(usize, usize)> {
    Some(match name {
        "h" | "s" | "x" | "y" | "z" => (0, 1),
        "ry" | "rz" => (1, 1),
        "cx" => (0, 2),
        "crz" => (1, 2),
        "cu" => (4, 2),
        "gphase" => (1, 0),
        _ => return None,
    })
}

impl Parser {
    fn err_at(&self, at: usize, kind: ParseErrorKind) -> ParseError {
        let (line, col) = match self.toks.get(at) {
            Some(s) => (s.line, s.col),
            None => self.toks.last().map_or((1, 1), |s| (s.line, s.col + 1)),
        };
        ParseError { line, col, kind }
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let found = self
            .peek()
            .map_or("end of input".to_string(), |t| t.to_string());
        self.err_at(
            self.pos,
            ParseErrorKind::Unexpected {
                expected: expected.into(),
                found,
            },
        )
    }

    fn punct(&mut self, c: char) -> std::result::Result<(), ParseError> {
        if self.peek() == Some(&Tok::Punct(c)) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{c}`")))
        }
    }

    fn ident(&mut self) -> std::result::Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn integer(&mut self) -> std::result::Result<usize, ParseError> {
        match self.peek() {
            Some(Tok::Number(s)) => {
                let v = s.parse().map_err(|_| self.unexpected("integer"))?;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.unexpected("integer")),
        }
    }

    fn angle(&mut self) -> std::result::Result<f64, ParseError> {
        let at = self.pos;
        let negative = match self.peek() {
            Some(Tok::Punct('-')) => {
                self.pos += 1;
                true
            }
            Some(Tok::Punct('+')) => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let malformed =
            |p: &Parser, text: String| p.err_at(at, ParseErrorKind::MalformedAngle(text));
        match self.toks.get(self.pos).map(|s| s.tok.clone()) {
            Some(Tok::Number(s)) => {
                let v: f64 = s.parse().map_err(|_| malformed(self, s.clone()))?;
                self.pos += 1;
                Ok(if negative { -v } else { v })
            }
            Some(Tok::Ident(s)) => Err(malformed(self, s)),
            _ => Err(self.unexpected("angle")),
        }
    }

    fn qubit_ref(&mut self) -> std::result::Result<usize, ParseError> {
        let at = self.pos;
        let name = self.ident()?;
        let &(offset, size) = self
            .qregs
            .get(&name)
            .ok_or_else(|| self.err_at(at, ParseErrorKind::UndeclaredRegister(name.clone())))?;
        self.punct('[')?;
        let index = self.integer()?;
        self.punct(']')?;
        if index >= size {
            return Err(self.err_at(
                at,
                ParseErrorKind::IndexOutOfRange {
                    register: name,
                    index,
                    size,
                },
            ));
        }
        Ok(offset + index)
    }

    fn bit_ref(&mut self) -> std::result::Result<(), ParseError> {
        let at = self.pos;
        let name = self.ident()?;
        let size = *self
            .bregs
            .get(&name)
            .ok_or_else(|| self.err_at(at, ParseErrorKind::UndeclaredRegister(name.clone())))?;
        self.punct('[')?;
        let index = self.integer()?;
        self.punct(']')?;
        if index >= size {
            return Err(self.err_at(
                at,
                ParseErrorKind::IndexOutOfRange {
                    register: name,
                    index,
                    size,
                },
            ));
        }
        Ok(())
    }

    fn skip_comments(&mut self) {
        while matches!(self.peek(), Some(Tok::Comment(_))) {
            self.pos += 1;
        }
    }

    fn statement(&mut self) -> std::result::Result<(), ParseError> {
        let start = self.pos;
        let head = self.ident()?;
        match head.as_str() {
            "OPENQASM" => {
                match self.peek() {
                    Some(Tok::Number(_)) => self.pos += 1,
                    _ => return Err(self.unexpected("version number")),
                }
                self.punct(';')
            }
            "include" => {
                match self.peek() {
                    Some(Tok::Str(_)) => self.pos += 1,
                    _ => return Err(self.unexpected("file name")),
                }
                self.punct(';')
            }
            "qubit" | "bit" => {
                self.punct('[')?;
                let size = self.integer()?;
                self.punct(']')?;
                let name = self.ident()?;
                self.punct(';')?;
                if head == "qubit" {
                    self.qregs.insert(name, (self.n_qubits, size));
                    self.n_qubits += size;
                } else {
                    self.bregs.insert(name, size);
                }
                Ok(())
            }
            _ if self.peek() == Some(&Tok::Punct('[')) => {
                self.pos = start;
                self.measurement()
            }
            _ => self.gate(start, head),
        }
    }

    fn measurement(&mut self) -> std::result::Result<(), ParseError> {
        self.bit_ref()?;
        self.punct('=')?;
        let at = self.pos;
        match self.ident()?.as_str() {
            "measure" => {}
            other => return Err(self.err_at(at, ParseErrorKind::UnknownToken(other.into()))),
        }
        let q = self.qubit_ref()?;
        let line = self.toks[self.pos.saturating_sub(1)].line;
        self.punct(';')?;
        let postselect = match self.toks.get(self.pos) {
            Some(Spanned {
                tok: Tok::Comment(text),
                line: l,
                ..
            }) if *l == line => text.starts_with(POSTSELECT_MARK),
            _ => false,
        };
        self.ops.push(if postselect {
            Op::PostSelect(q)
        } else {
            Op::Measure(q)
        });
        Ok(())
    }

    fn gate(&mut self, at: usize, name: String) -> std::result::Result<(), ParseError> {
        let (n_params, n_qubits) = gate_arity(&name)
            .ok_or_else(|| self.err_at(at, ParseErrorKind::UnknownToken(name.clone())))?;
        let mut params = Vec::new();
        if self.peek() == Some(&Tok::Punct('(')) {
            self.pos += 1;
            loop {
                params.push(self.angle()?);
                if self.peek() == Some(&Tok::Punct(',')) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            self.punct(')')?;
        }
        let mut qubits = Vec::new();
        if matches!(self.peek(), Some(Tok::Ident(_))) {
            loop {
                qubits.push(self.qubit_ref()?);
                if self.peek() == Some(&Tok::Punct(',')) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.punct(';')?;
        let arity = |what, expected, found| {
            self.err_at(
                at,
                ParseErrorKind::ArityMismatch {
                    gate: name.clone(),
                    what,
                    expected,
                    found,
                },
            )
        };
        if params.len() != n_params {
            return Err(arity("parameter(s)", n_params, params.len()));
        }
        if qubits.len() != n_qubits {
            return Err(arity("qubit(s)", n_qubits, qubits.len()));
        }
        let p = |k: usize| params[k];
        let (kind, targets, controls) = match name.as_str() {
            "h" => (GateKind::H, qubits, vec![]),
            "s" => (GateKind::S, qubits, vec![]),
            "x" => (GateKind::X, qubits, vec![]),
            "y" => (GateKind::Y, qubits, vec![]),
            "z" => (GateKind::Z, qubits, vec![]),
            "ry" => (GateKind::Ry(p(0)), qubits, vec![]),
            "rz" => (GateKind::QasmRz(p(0)), qubits, vec![]),
            "cx" => (GateKind::Cnot, vec![qubits[1]], vec![qubits[0]]),
            "crz" => (GateKind::QasmCrz(p(0)), vec![qubits[1]], vec![qubits[0]]),
            "cu" => (
                GateKind::QasmCu {
                    theta: p(0),
                    phi: p(1),
                    lambda: p(2),
                    gamma: p(3),
                },
                vec![qubits[1]],
                vec![qubits[0]],
            ),
            "gphase" => (GateKind::GlobalPhase(p(0)), vec![], vec![]),
            _ => unreachable!("arity table and constructor table list the same gates"),
        };
        let g = GateSpec::new(kind, targets, controls)
            .map_err(|e| self.err_at(at, ParseErrorKind::InvalidGate(e.to_string())))?;
        self.ops.push(Op::Gate(g));
        Ok(())
    }
}

/// Parses text in the emitted subset back into a circuit.
pub fn parse_qasm_subset(text: &str) -> std::result::Result<Circuit, ParseError> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        qregs: HashMap::new(),
        bregs: HashMap::new(),
        n_qubits: 0,
        ops: Vec::new(),
    };
    loop {
        p.skip_comments();
        if p.pos >= p.toks.len() {
            break;
        }
        p.statement()?;
    }
    let n = p.n_qubits;
    let ops = std::mem::take(&mut p.ops);
    Circuit::from_ops(n, ops).map_err(|e| ParseError {
        line: 1,
        col: 1,
        kind: ParseErrorKind::InvalidGate(e.to_string()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ejm::{ejm_circuit, Label};
    use crate::qmath::{ComplexMatrix, C64};
    use crate::sim::{correction_circuit, singlet_circuit};

    fn roundtrip(c: &Circuit) -> String {
        let first = emit_qasm(c).unwrap();
        let parsed = parse_qasm_subset(&first.source_text).unwrap();
        let second = emit_qasm(&parsed).unwrap();
        assert_eq!(first.source_text, second.source_text);
        first.source_text
    }

    #[test]
    fn singlet_is_two_gates() {
        let p = emit_qasm(&singlet_circuit(2, 0, 1)).unwrap();
        assert_eq!(p.gate_count, 2);
        assert_eq!(p.declared_qubits, 2);
        assert_eq!(
            p.source_text,
            "OPENQASM 3.0;\ninclude \"stdgates.inc\";\nqubit[2] q;\nbit[2] c;\nh q[0];\ncx q[0], q[1];\n"
        );
    }

    #[test]
    fn ejm_circuit_has_one_crz() {
        let theta = 0.4;
        let c = Circuit::from_gates(2, ejm_circuit(theta).unwrap()).unwrap();
        let text = emit_qasm(&c).unwrap().source_text;
        let crz: Vec<&str> = text.lines().filter(|l| l.starts_with("crz(")).collect();
        assert_eq!(crz.len(), 1);
        assert_eq!(crz[0], format!("crz({}) q[0], q[1];", ejm_crz_angle(theta)));
        roundtrip(&c);
    }

    #[test]
    fn correction_circuits_round_trip() {
        for l in Label::ALL {
            let text = roundtrip(&correction_circuit(0.7, l).unwrap());
            assert!(text.ends_with("c[3] = measure q[3]; // postselect c[3] == 0\n"));
        }
    }

    #[test]
    fn malformed_angle_has_position() {
        let text = "OPENQASM 3.0;\nqubit[1] q;\nry(0.3.1) q[0];\n";
        let e = parse_qasm_subset(text).unwrap_err();
        assert_eq!((e.line, e.col), (3, 4));
        assert_eq!(e.kind, ParseErrorKind::MalformedAngle("0.3.1".into()));
        let e = parse_qasm_subset("qubit[1] q;\nrz(pi) q[0];").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::MalformedAngle(_)));
    }

    #[test]
    fn diagnostics_are_distinct() {
        let unknown = parse_qasm_subset("qubit[1] q;\nt q[0];").unwrap_err();
        assert_eq!(unknown.kind, ParseErrorKind::UnknownToken("t".into()));
        assert_eq!((unknown.line, unknown.col), (2, 1));

        let stray = parse_qasm_subset("qubit[1] q;\nh q[0]; @").unwrap_err();
        assert_eq!(stray.kind, ParseErrorKind::UnknownToken("@".into()));
        assert_eq!(stray.col, 9);

        let arity = parse_qasm_subset("qubit[2] q;\ncx q[0];").unwrap_err();
        assert!(matches!(
            arity.kind,
            ParseErrorKind::ArityMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
        let params = parse_qasm_subset("qubit[1] q;\nry(1, 2) q[0];").unwrap_err();
        assert!(matches!(
            params.kind,
            ParseErrorKind::ArityMismatch {
                expected: 1,
                found: 2,
                ..
            }
        ));

        let undeclared = parse_qasm_subset("qubit[1] q;\nh r[0];").unwrap_err();
        assert_eq!(
            undeclared.kind,
            ParseErrorKind::UndeclaredRegister("r".into())
        );
        let bits = parse_qasm_subset("qubit[1] q;\nc[0] = measure q[0];").unwrap_err();
        assert_eq!(bits.kind, ParseErrorKind::UndeclaredRegister("c".into()));
    }

    #[test]
    fn unsupported_gates_are_named() {
        let mut c = Circuit::new(1);
        c.gate(GateSpec::single(GateKind::N(0.5), 0)).unwrap();
        let e = emit_qasm(&c).unwrap_err().to_string();
        assert!(e.contains("N(0.5)"), "{e}");

        let mut c = Circuit::new(1);
        let m = ComplexMatrix::real2(1.0, 0.0, 0.0, 0.5);
        c.gate(GateSpec::single(GateKind::Custom(m), 0)).unwrap();
        assert!(matches!(emit_qasm(&c), Err(Error::Unsupported(_))));
    }

    #[test]
    fn n_zero_exports_as_postselection() {
        let mut c = Circuit::new(1);
        c.gate(GateSpec::single(GateKind::N(0.0), 0)).unwrap();
        let parsed = parse_qasm_subset(&emit_qasm(&c).unwrap().source_text).unwrap();
        assert_eq!(parsed.ops(), &[Op::PostSelect(0)]);
    }

    #[test]
    fn plain_measure_is_not_postselection() {
        let text = "qubit[1] q;\nbit[1] c;\nc[0] = measure q[0];\n// postselect c[0] == 0\n";
        assert_eq!(parse_qasm_subset(text).unwrap().ops(), &[Op::Measure(0)]);
    }

    #[test]
    fn negative_and_exponent_angles_parse() {
        let c = parse_qasm_subset("qubit[1] q;\nry(-1.5e-3) q[0];\nrz(2E+1) q[0];").unwrap();
        let g: Vec<_> = c.gates().map(|g| g.kind.clone()).collect();
        assert_eq!(g, vec![GateKind::Ry(-1.5e-3), GateKind::QasmRz(20.0)]);
    }

    #[test]
    fn phase_faithful_lowering() {
        let mut c = Circuit::new(2);
        c.gate(GateSpec::single(GateKind::Rz(0.8), 1)).unwrap();
        c.gate(GateSpec::controlled(GateKind::ControlledRz(-1.1), 1, 0))
            .unwrap();
        let u = ComplexMatrix::mat2(
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.8),
            C64::new(0.6, 0.0),
        );
        c.gate(GateSpec::controlled(GateKind::ControlledU(u.clone()), 0, 1))
            .unwrap();
        c.gate(GateSpec::single(GateKind::Custom(u), 0)).unwrap();
        let parsed = parse_qasm_subset(&emit_qasm(&c).unwrap().source_text).unwrap();
        let unitary = |c: &Circuit| {
            c.gates().fold(ComplexMatrix::identity(4), |acc, g| {
                &crate::sim::expand(g, 2).unwrap() * &acc
            })
        };
        assert!(unitary(&c).max_abs_diff(&unitary(&parsed)) < 1e-12);
    }
}
