//! The `ejm` command line.
//!
//! Exit codes: 0 on success, 1 when `verify` finds a failing invariant or a
//! command hits a runtime error (for example an unwritable output path), 2 on
//! usage errors. The default seed comes from `EJM_SEED` when set; `--seed`
//! overrides it.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fs;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand};

use crate::ejm::{build_basis, concurrence, reduced_tetrahedron, Label, TraceOut};
use crate::error::Result;
use crate::sim::{monte_carlo, run_teleportation, ProtocolCircuits};
use crate::teleport::{total_success_probability, InputState};
use crate::tooling::qasm::emit_qasm;
use crate::tooling::sweep::{self, theta_grid, zeta_grid, SweepConfig};
use crate::tooling::verify::{run_all, VerifyConfig};

pub const SEED_ENV: &str = "EJM_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "ejm",
    version,
    about = "Teleportation through the elegant joint measurement"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One seeded end-to-end run, or a batch with --shots.
    Teleport(TeleportArgs),
    /// Success probability over a (θ, ζ) grid as CSV.
    Sweep(SweepArgs),
    /// Run the invariant suite; exit 0 only if every check passes.
    Verify(VerifyArgs),
    /// Write the protocol circuits as OpenQASM 3 files.
    Export(ExportArgs),
    /// Print the EJM basis and its tetrahedron report.
    Basis(BasisArgs),
}

fn parse_theta(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=FRAC_PI_2).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, π/2]"))
    }
}

fn parse_zeta(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=2.0 * PI).contains(&v) {
        Ok(v)
    } else {
        Err(format!("{v} is outside [0, 2π]"))
    }
}

fn parse_finite(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err("angle must be finite".into())
    }
}

#[derive(Debug, Args)]
pub struct Seed {
    /// ChaCha8 seed; run k of a batch uses stream k.
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TeleportArgs {
    #[arg(long, value_parser = parse_theta)]
    pub theta: f64,
    /// Input polar angle: cos(ζ/2)|0⟩ + e^{iξ} sin(ζ/2)|1⟩.
    #[arg(long, value_parser = parse_zeta, default_value_t = 0.0)]
    pub zeta: f64,
    #[arg(long, value_parser = parse_finite, default_value_t = 0.0)]
    pub xi: f64,
    /// Run a seeded batch and print frequencies instead of one record.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub shots: Option<u64>,
    #[command(flatten)]
    pub seed: Seed,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Single θ; otherwise --theta-grid points on [0, π/2].
    #[arg(long, value_parser = parse_theta, conflicts_with = "theta_grid")]
    pub theta: Option<f64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = sweep::DEFAULT_THETA_POINTS as u64)]
    pub theta_grid: u64,
    /// Number of ζ intervals on [0, 2π].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = sweep::DEFAULT_ZETA_STEPS as u64)]
    pub zeta_steps: u64,
    #[arg(long, value_parser = parse_finite, default_value_t = 0.0)]
    pub xi: f64,
    /// Restrict to one outcome (00, 01, 10 or 11).
    #[arg(long)]
    pub branch: Option<Label>,
    /// Also sample each cell this many times.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub shots: Option<u64>,
    #[command(flatten)]
    pub seed: Seed,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Number of θ points on [0, π/2].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = crate::tooling::verify::DEFAULT_THETA_POINTS as u64)]
    pub theta_grid: u64,
    #[command(flatten)]
    pub seed: Seed,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[arg(long, value_parser = parse_theta)]
    pub theta: f64,
    #[arg(long, value_parser = parse_zeta, default_value_t = 0.0)]
    pub zeta: f64,
    #[arg(long, value_parser = parse_finite, default_value_t = 0.0)]
    pub xi: f64,
    /// Directory for prep.qasm, ejm.qasm and correction_XX.qasm.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BasisArgs {
    #[arg(long, value_parser = parse_theta)]
    pub theta: f64,
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                let _ = write!(err, "\n{}", Cli::command().render_help());
            } else {
                let _ = write!(out, "{}", e.render());
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            1
        }
    }
}

fn execute(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Teleport(a) => teleport(a, out),
        Command::Sweep(a) => sweep_cmd(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Export(a) => export(a, out),
        Command::Basis(a) => basis(a, out),
    }
}

fn teleport(a: TeleportArgs, out: &mut dyn Write) -> Result<i32> {
    let input = InputState::from_angles(a.zeta, a.xi);
    let seed = a.seed.seed;
    match a.shots {
        None => {
            let r = run_teleportation(&input, a.theta, seed)?;
            writeln!(out, "seed={}", r.seed)?;
            writeln!(out, "stream={}", r.stream)?;
            writeln!(out, "theta={}", r.theta)?;
            writeln!(out, "zeta={}", r.zeta)?;
            writeln!(out, "xi={}", r.xi)?;
            writeln!(out, "ejm_outcome={}", r.ejm_outcome)?;
            writeln!(out, "ancilla_outcome={}", r.ancilla_outcome)?;
            writeln!(out, "success={}", r.success)?;
            writeln!(out, "fidelity={}", round_display(r.output_fidelity))?;
        }
        Some(shots) => {
            let s = monte_carlo(&input, a.theta, shots, seed)?;
            writeln!(out, "seed={seed}")?;
            writeln!(out, "shots={}", s.shots)?;
            for l in Label::ALL {
                writeln!(
                    out,
                    "branch_{l}: count={} frequency={:.6} stderr={:.6} successes={}",
                    s.branch_counts[l.index()],
                    s.branch_frequency(l),
                    s.branch_stderr(l),
                    s.success_counts[l.index()],
                )?;
            }
            writeln!(
                out,
                "success_rate={:.6} stderr={:.6} exact={:.6}",
                s.success_rate(),
                s.success_stderr(),
                total_success_probability(a.theta)?
            )?;
            writeln!(out, "imperfect_successes={}", s.imperfect_successes)?;
        }
    }
    Ok(0)
}

/// Twelve decimals, trailing zeros dropped, so a fidelity within 1e-13 of
/// one prints as `1`.
fn round_display(x: f64) -> String {
    let s = format!("{x:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn sweep_cmd(a: SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let config = SweepConfig {
        theta_grid: match a.theta {
            Some(t) => vec![t],
            None => theta_grid(a.theta_grid as usize),
        },
        zeta_grid: zeta_grid(a.zeta_steps as usize),
        xi: a.xi,
        branch: a.branch,
        shots: a.shots,
        seed: a.seed.seed,
        output_path: a.out,
    };
    let report = sweep::sweep(&config)?;
    writeln!(
        out,
        "wrote {} rows to {}",
        report.rows.len(),
        config.output_path.display()
    )?;
    writeln!(out, "extremes in {}", config.extremes_path().display())?;
    writeln!(out, "theta,branch,p_min,zeta_at_min,p_max,zeta_at_max")?;
    for e in &report.extremes {
        writeln!(
            out,
            "{:.6},{},{:.6},{:.6},{:.6},{:.6}",
            e.theta, e.branch, e.p_min, e.zeta_at_min, e.p_max, e.zeta_at_max
        )?;
    }
    Ok(0)
}

fn verify(a: VerifyArgs, out: &mut dyn Write) -> Result<i32> {
    let config = VerifyConfig {
        theta_grid: theta_grid(a.theta_grid as usize),
        seed: a.seed.seed,
    };
    let results = run_all(&config);
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        writeln!(out, "{r}")?;
    }
    writeln!(out, "{} checks, {} failed", results.len(), failed)?;
    Ok(if failed == 0 { 0 } else { 1 })
}

fn export(a: ExportArgs, out: &mut dyn Write) -> Result<i32> {
    let input = InputState::from_angles(a.zeta, a.xi);
    let circuits = ProtocolCircuits::new(&input, a.theta)?;
    fs::create_dir_all(&a.out)?;
    let mut files = vec![
        ("prep.qasm".to_string(), &circuits.prep),
        ("ejm.qasm".to_string(), &circuits.alice),
    ];
    for l in Label::ALL {
        files.push((
            format!("correction_{l}.qasm"),
            &circuits.corrections[l.index()],
        ));
    }
    for (name, circuit) in files {
        let program = emit_qasm(circuit)?;
        let path = a.out.join(&name);
        fs::write(&path, &program.source_text)?;
        writeln!(
            out,
            "{}: {} gates on {} qubits",
            path.display(),
            program.gate_count,
            program.declared_qubits
        )?;
    }
    Ok(0)
}

fn basis(a: BasisArgs, out: &mut dyn Write) -> Result<i32> {
    let b = build_basis(a.theta)?;
    writeln!(out, "theta={}", a.theta)?;
    writeln!(out, "r+={}  r-={}", b.r_plus, b.r_minus)?;
    for l in Label::ALL {
        let e = b.state(l);
        writeln!(out, "|e{l}> = {e}  concurrence={:.12}", concurrence(e)?)?;
    }
    writeln!(out, "gram_deviation={:.3e}", b.gram_deviation())?;
    writeln!(
        out,
        "completeness_deviation={:.3e}",
        b.completeness_deviation()
    )?;
    for side in [TraceOut::First, TraceOut::Second] {
        let t = reduced_tetrahedron(&b, side);
        writeln!(out, "reduced tetrahedron, traced out {side:?} qubit:")?;
        for (l, v) in Label::ALL.iter().zip(t.bloch_vectors) {
            writeln!(out, "  {l}: ({:+.12}, {:+.12}, {:+.12})", v[0], v[1], v[2])?;
        }
        writeln!(out, "  radius={:.12}", t.common_radius)?;
        match t.pairwise_cosines {
            Some(cs) => {
                let cs: Vec<String> = cs.iter().map(|c| format!("{c:.12}")).collect();
                writeln!(out, "  pairwise_cosines={}", cs.join(","))?;
            }
            None => writeln!(out, "  pairwise_cosines=undefined (vectors vanish)")?,
        }
    }
    Ok(0)
}
