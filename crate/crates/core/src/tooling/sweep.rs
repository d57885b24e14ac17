//! Success probability over a (θ, ζ) grid, written as CSV.
//!
//! Main file columns: `theta, zeta, branch, p_analytic, p_empirical, stderr`.
//! Empirical columns are empty unless shots were requested. Rows are ordered
//! by θ index, then ζ index, then branch. A second file next to it,
//! `<stem>.extremes.csv`, holds the minimum and maximum over ζ for every
//! (θ, branch): `theta, branch, p_min, zeta_at_min, p_max, zeta_at_max`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::ejm::Label;
use crate::error::{Error, Result};
use crate::sim::{binomial_stderr, sample_branch_success};
use crate::teleport::{success_probability_closed_form, InputState};

pub const DEFAULT_ZETA_STEPS: usize = 629;
pub const DEFAULT_THETA_POINTS: usize = 50;

pub const CSV_HEADER: [&str; 6] = [
    "theta",
    "zeta",
    "branch",
    "p_analytic",
    "p_empirical",
    "stderr",
];
pub const EXTREMES_HEADER: [&str; 6] = [
    "theta",
    "branch",
    "p_min",
    "zeta_at_min",
    "p_max",
    "zeta_at_max",
];

/// `points` evenly spaced values on `[lo, hi]`, both ends included.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let last = (points - 1) as f64;
            (0..points)
                .map(|k| {
                    if k == points - 1 {
                        hi
                    } else {
                        lo + (hi - lo) * k as f64 / last
                    }
                })
                .collect()
        }
    }
}

/// `points` values on `[0, π/2]`.
pub fn theta_grid(points: usize) -> Vec<f64> {
    linspace(0.0, FRAC_PI_2, points)
}

/// `steps` equal intervals on `[0, 2π]`, so `steps + 1` values.
pub fn zeta_grid(steps: usize) -> Vec<f64> {
    linspace(0.0, 2.0 * PI, steps + 1)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub theta_grid: Vec<f64>,
    pub zeta_grid: Vec<f64>,
    pub xi: f64,
    /// Only this branch, or all four.
    pub branch: Option<Label>,
    pub shots: Option<u64>,
    pub seed: u64,
    pub output_path: PathBuf,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.theta_grid.is_empty() || self.zeta_grid.is_empty() {
            return Err(Error::Domain {
                name: "grid size",
                value: 0.0,
                domain: "at least one point",
            });
        }
        if let Some(&t) = self
            .theta_grid
            .iter()
            .find(|t| !(0.0..=FRAC_PI_2).contains(*t))
        {
            return Err(Error::Domain {
                name: "theta",
                value: t,
                domain: "[0, π/2]",
            });
        }
        if let Some(&z) = self
            .zeta_grid
            .iter()
            .find(|z| !(0.0..=2.0 * PI).contains(*z))
        {
            return Err(Error::Domain {
                name: "zeta",
                value: z,
                domain: "[0, 2π]",
            });
        }
        if !self.xi.is_finite() {
            return Err(Error::Domain {
                name: "xi",
                value: self.xi,
                domain: "finite",
            });
        }
        if self.shots == Some(0) {
            return Err(Error::Domain {
                name: "shots",
                value: 0.0,
                domain: "≥ 1",
            });
        }
        Ok(())
    }

    fn branches(&self) -> Vec<Label> {
        match self.branch {
            Some(l) => vec![l],
            None => Label::ALL.to_vec(),
        }
    }

    /// `<dir>/<stem>.extremes.csv` beside the main output.
    pub fn extremes_path(&self) -> PathBuf {
        let stem = self
            .output_path
            .file_stem()
            .map_or_else(|| "sweep".into(), |s| s.to_string_lossy().into_owned());
        self.output_path
            .with_file_name(format!("{stem}.extremes.csv"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub zeta: f64,
    pub branch: Label,
    pub p_analytic: f64,
    /// `(frequency, standard error)` when shots were requested.
    pub empirical: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extremes {
    pub theta: f64,
    pub branch: Label,
    pub p_min: f64,
    pub zeta_at_min: f64,
    pub p_max: f64,
    pub zeta_at_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub extremes: Vec<Extremes>,
}

/// Evaluates the grid without writing anything.
pub fn evaluate(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let branches = config.branches();
    let nz = config.zeta_grid.len();
    let cells: Vec<(usize, usize)> = (0..config.theta_grid.len())
        .flat_map(|t| (0..nz).map(move |z| (t, z)))
        .collect();
    let rows: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(ti, zi)| {
            let theta = config.theta_grid[ti];
            let zeta = config.zeta_grid[zi];
            let input = InputState::from_angles(zeta, config.xi);
            branches
                .iter()
                .map(|&l| {
                    let p_analytic = success_probability_closed_form(&input, theta, l)?;
                    let empirical = match config.shots {
                        Some(shots) => {
                            let stream = ((ti * nz + zi) * 4 + l.index()) as u64;
                            let k = sample_branch_success(
                                &input,
                                theta,
                                l,
                                shots,
                                config.seed,
                                stream,
                            )?;
                            let p = k as f64 / shots as f64;
                            Some((p, binomial_stderr(p, shots)))
                        }
                        None => None,
                    };
                    Ok(SweepRow {
                        theta,
                        zeta,
                        branch: l,
                        p_analytic,
                        empirical,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let rows: Vec<SweepRow> = rows.into_iter().flatten().collect();

    let mut extremes = Vec::new();
    let per_theta = nz * branches.len();
    for (ti, &theta) in config.theta_grid.iter().enumerate() {
        let block = &rows[ti * per_theta..(ti + 1) * per_theta];
        for &l in &branches {
            let mut it = block.iter().filter(|r| r.branch == l);
            let first = it.next().expect("zeta grid is nonempty");
            let (mut lo, mut hi) = (first, first);
            for r in it {
                if r.p_analytic < lo.p_analytic {
                    lo = r;
                }
                if r.p_analytic > hi.p_analytic {
                    hi = r;
                }
            }
            extremes.push(Extremes {
                theta,
                branch: l,
                p_min: lo.p_analytic,
                zeta_at_min: lo.zeta,
                p_max: hi.p_analytic,
                zeta_at_max: hi.zeta,
            });
        }
    }
    Ok(SweepReport { rows, extremes })
}

fn num(x: f64) -> String {
    format!("{x:.14e}")
}

/// Evaluates the grid and writes both CSV files.
pub fn sweep(config: &SweepConfig) -> Result<SweepReport> {
    let report = evaluate(config)?;
    write_csv(&config.output_path, &report.rows)?;
    write_extremes(&config.extremes_path(), &report.extremes)?;
    Ok(report)
}

pub fn write_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for r in rows {
        let (pe, se) = r
            .empirical
            .map_or((String::new(), String::new()), |(p, s)| (num(p), num(s)));
        w.write_record([
            num(r.theta),
            num(r.zeta),
            r.branch.to_string(),
            num(r.p_analytic),
            pe,
            se,
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_extremes(path: &Path, extremes: &[Extremes]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(EXTREMES_HEADER)?;
    for e in extremes {
        w.write_record([
            num(e.theta),
            e.branch.to_string(),
            num(e.p_min),
            num(e.zeta_at_min),
            num(e.p_max),
            num(e.zeta_at_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}
