use std::time::Instant;

use coulomb_core::kinematics::{build_frame, MassCharge};
use coulomb_core::stability::{critical_charge_atomic, trace_border, Budget, RayOutcome, Sector, StabilityDiagram, VerdictState};
use coulomb_core::Error;
use serde::Serialize;

use crate::config::{Format, RunConfig, SectorArg};
use crate::output::{border_rows, border_svg, csv_row, diagram_svg, json};
use crate::verify::{self, SuiteParams};

/// Why a command did not produce a clean result.
#[derive(Debug)]
pub enum Failure {
    /// Bad configuration or input; exit code 2.
    Config(String),
    /// Solver, bracket or budget failure; exit code 3.
    Solver(String),
    /// The command ran but some verification check failed; exit code 1.
    Checks(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Solver(_) => 3,
            Self::Checks(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Solver(m) | Self::Checks(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidInput(_) => Self::Config(e.to_string()),
            _ => Self::Solver(e.to_string()),
        }
    }
}

/// Rendered output plus an optional failure raised after rendering, so a
/// failing verification still writes its report.
pub struct Outcome {
    pub body: String,
    pub failure: Option<Failure>,
}

impl From<String> for Outcome {
    fn from(body: String) -> Self {
        Self { body, failure: None }
    }
}

fn budget(cfg: &RunConfig) -> Result<Budget, Failure> {
    let mut b = Budget::new(cfg.basis, cfg.trials, cfg.seed().map_err(Failure::Config)?);
    b.refine_cycles = cfg.refine;
    Ok(b)
}

fn frame(cfg: &RunConfig) -> Result<coulomb_core::JacobiFrame, Failure> {
    let masses = cfg.masses.triple().map_err(Failure::Config)?;
    Ok(build_frame(&MassCharge::new(masses, 0.0, 0.0)?)?)
}

fn reject_format(cfg: &RunConfig, allowed: &[Format], command: &str) -> Result<(), Failure> {
    if allowed.contains(&cfg.format) {
        Ok(())
    } else {
        Err(Failure::Config(format!("{command} cannot write {} output", cfg.format)))
    }
}

pub fn scan(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let frame = frame(cfg)?;
    let budget = budget(cfg)?;
    let q1s = cfg.q1.points(cfg.grid);
    let q2s = cfg.q2.points(cfg.grid);
    let grid: Vec<(f64, f64)> = q1s.iter().flat_map(|&a| q2s.iter().map(move |&b| (a, b))).collect();
    let t0 = Instant::now();
    let diagram = StabilityDiagram::scan(&frame, &grid, &budget)?;
    let count = |s: VerdictState| diagram.points.iter().filter(|p| p.state == s).count();
    eprintln!(
        "scan: {} points in {:.1?}: {} certified stable, {} criterion unstable, {} undecided",
        grid.len(),
        t0.elapsed(),
        count(VerdictState::CertifiedStable),
        count(VerdictState::CriterionUnstable),
        count(VerdictState::Undecided)
    );
    Ok(match cfg.format {
        Format::Csv => diagram.to_csv(),
        Format::Json => json(&diagram),
        Format::Svg => diagram_svg(&diagram),
    }
    .into())
}

#[derive(Serialize)]
struct BorderReport<'a> {
    masses: [f64; 3],
    sector: SectorArg,
    budget: &'a Budget,
    resolution: f64,
    coarse: usize,
    rays: &'a [RayOutcome],
}

pub fn border(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let frame = frame(cfg)?;
    let budget = budget(cfg)?;
    let (sector, fixed) = match cfg.sector {
        SectorArg::Upper => (Sector::Upper, cfg.q2.points(cfg.grid)),
        SectorArg::Lower => (Sector::Lower, cfg.q1.points(cfg.grid)),
    };
    let t0 = Instant::now();
    let rays = trace_border(&frame, sector, &fixed, &budget, cfg.coarse, cfg.tol)?;
    let found = rays.iter().filter(|r| matches!(r, RayOutcome::Border(_))).count();
    eprintln!("trace-border: {found} of {} rays bracketed in {:.1?}", rays.len(), t0.elapsed());
    Ok(match cfg.format {
        Format::Csv => {
            let mut out = String::from("fixed,kind,unstable_side,stable_side,margin_unstable_side,margin_stable_side\n");
            for row in border_rows(&rays) {
                out.push_str(&csv_row(&row));
            }
            out
        }
        Format::Json => json(&BorderReport {
            masses: frame.masses,
            sector: cfg.sector,
            budget: &budget,
            resolution: cfg.tol,
            coarse: cfg.coarse,
            rays: &rays,
        }),
        Format::Svg => {
            let segs: Vec<_> = rays
                .iter()
                .filter_map(|r| match r {
                    RayOutcome::Border(b) => Some(match sector {
                        Sector::Upper => (b.unstable_side, b.fixed, b.stable_side, b.fixed),
                        Sector::Lower => (b.fixed, b.unstable_side, b.fixed, b.stable_side),
                    }),
                    RayOutcome::NoBorderOnRay { .. } => None,
                })
                .collect();
            border_svg(&segs)
        }
    }
    .into())
}

pub fn critical(cfg: &RunConfig) -> Result<Outcome, Failure> {
    reject_format(cfg, &[Format::Json, Format::Csv], "critical-charge")?;
    let nuclear = cfg.masses.nuclear().map_err(Failure::Config)?;
    let budget = budget(cfg)?;
    let t0 = Instant::now();
    let report = critical_charge_atomic(nuclear, &budget, cfg.tol).map_err(|e| match e {
        Error::InvalidInput(_) => Failure::Config(e.to_string()),
        _ => Failure::Solver(format!("bracket failure: {e}")),
    })?;
    eprintln!(
        "critical-charge: bracket [{}, {}] after {} probes in {:.1?}",
        report.bracket[0],
        report.bracket[1],
        report.probes.len(),
        t0.elapsed()
    );
    Ok(match cfg.format {
        Format::Csv => {
            let mut out = String::from("z,E0,E_thr,margin,stable,residual\n");
            for p in &report.probes {
                out.push_str(&csv_row(&[
                    p.z.to_string(),
                    format!("{:.12e}", p.e0),
                    format!("{:.12e}", p.e_thr),
                    format!("{:e}", p.margin),
                    p.stable.to_string(),
                    format!("{:e}", p.residual),
                ]));
            }
            out
        }
        _ => json(&report),
    }
    .into())
}

pub fn verify(cfg: &RunConfig, suite: &str) -> Result<Outcome, Failure> {
    reject_format(cfg, &[Format::Json, Format::Csv], "verify")?;
    if !verify::SUITES.contains(&suite) {
        return Err(Failure::Config(format!("unknown suite '{suite}' (expected one of {})", verify::SUITES.join(", "))));
    }
    // the state-count suite is deterministic and needs no seed
    let seed = if suite == "clr" { cfg.seed.unwrap_or(0) } else { cfg.seed().map_err(Failure::Config)? };
    let params = SuiteParams { seed, samples: cfg.samples, families: cfg.families, basis: cfg.basis, trials: cfg.trials };
    let t0 = Instant::now();
    let mut report = verify::run(suite, &params)?;
    if suite == "clr" {
        report.seed = cfg.seed;
    }
    for c in &report.checks {
        eprintln!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    eprintln!("verify {suite}: {} checks in {:.1?}", report.checks.len(), t0.elapsed());
    let body = match cfg.format {
        Format::Csv => report.to_csv(),
        _ => json(&report),
    };
    let failure = (!report.pass).then(|| {
        let failed: Vec<_> = report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
        Failure::Checks(format!("failed checks: {}", failed.join(", ")))
    });
    Ok(Outcome { body, failure })
}
