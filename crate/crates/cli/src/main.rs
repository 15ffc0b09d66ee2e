//! `coulomb-lab`: stability scans, border tracing, critical charges and
//! bound-verification suites.
//!
//! Settings come from an optional `key = value` file (`--config`), overlaid
//! by flags. Exit codes: 0 ok, 1 a verification check failed, 2 invalid
//! configuration, 3 solver or bracket failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use coulomb_cli::commands::{self, Failure, Outcome};
use coulomb_cli::config::{Defaults, Format, RunConfig, Settings};
use coulomb_cli::output;

#[derive(Parser)]
#[command(name = "coulomb-lab", version, about = "Few-body Coulomb stability and bound-verification laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify every point of a (q1, q2) grid.
    Scan(Flags),
    /// Bisect the stability border along rays of fixed q2 (upper sector) or q1 (lower).
    TraceBorder(Flags),
    /// Bracket the two-electron critical nuclear charge.
    CriticalCharge(Flags),
    /// Run a verification suite: greens, decay, clr, spreading or inequalities.
    Verify {
        suite: String,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// key = value settings file; flags override it
    #[arg(long, allow_hyphen_values = true)]
    config: Option<PathBuf>,
    /// m1,m2,m3; for critical-charge a nuclear mass M, M,1,1 or inf
    #[arg(long, allow_hyphen_values = true)]
    masses: Option<String>,
    /// value or lo:hi
    #[arg(long, allow_hyphen_values = true)]
    q1: Option<String>,
    /// value or lo:hi
    #[arg(long, allow_hyphen_values = true)]
    q2: Option<String>,
    /// charge grid step
    #[arg(long, allow_hyphen_values = true)]
    grid: Option<String>,
    /// basis size
    #[arg(long, allow_hyphen_values = true)]
    basis: Option<String>,
    /// random trials per basis slot
    #[arg(long, allow_hyphen_values = true)]
    trials: Option<String>,
    /// refinement sweeps after basis growth
    #[arg(long, allow_hyphen_values = true)]
    refine: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    seed: Option<String>,
    /// border resolution or bracket width
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<String>,
    /// worker threads (0 = all cores)
    #[arg(long, allow_hyphen_values = true)]
    jobs: Option<String>,
    /// output file; stdout when absent
    #[arg(long, allow_hyphen_values = true)]
    out: Option<String>,
    /// csv, json or svg
    #[arg(long, allow_hyphen_values = true)]
    format: Option<String>,
    /// upper or lower (trace-border)
    #[arg(long, allow_hyphen_values = true)]
    sector: Option<String>,
    /// coarse samples per ray (trace-border)
    #[arg(long, allow_hyphen_values = true)]
    coarse: Option<String>,
    /// random samples per sampled check (verify)
    #[arg(long, allow_hyphen_values = true)]
    samples: Option<String>,
    /// generated families (verify spreading)
    #[arg(long, allow_hyphen_values = true)]
    families: Option<String>,
}

impl Flags {
    fn settings(self) -> Result<Settings, String> {
        let mut s = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        s.set("masses", self.masses);
        s.set("q1", self.q1);
        s.set("q2", self.q2);
        s.set("grid", self.grid);
        s.set("basis", self.basis);
        s.set("trials", self.trials);
        s.set("refine", self.refine);
        s.set("seed", self.seed);
        s.set("tol", self.tol);
        s.set("jobs", self.jobs);
        s.set("out", self.out);
        s.set("format", self.format);
        s.set("sector", self.sector);
        s.set("coarse", self.coarse);
        s.set("samples", self.samples);
        s.set("families", self.families);
        Ok(s)
    }
}

const SCAN: Defaults = Defaults {
    masses: "1,1,1",
    q1: "0.1:1.5",
    q2: "0.1:1.5",
    grid: 0.1,
    basis: 24,
    trials: 30,
    refine: 1,
    tol: 1e-2,
    format: Format::Csv,
    samples: 0,
};

const BORDER: Defaults = Defaults { q1: "1", q2: "1", ..SCAN };

const CRITICAL: Defaults = Defaults { masses: "inf", basis: 80, trials: 100, tol: 5e-3, format: Format::Json, ..SCAN };

const VERIFY: Defaults = Defaults { basis: 40, trials: 40, format: Format::Json, samples: 10_000, ..SCAN };

enum Kind {
    Scan,
    Border,
    Critical,
    Verify(String),
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (flags, kind) = match cli.command {
        Command::Scan(f) => (f, Kind::Scan),
        Command::TraceBorder(f) => (f, Kind::Border),
        Command::CriticalCharge(f) => (f, Kind::Critical),
        Command::Verify { suite, flags } => (flags, Kind::Verify(suite)),
    };
    let defaults = match kind {
        Kind::Scan => &SCAN,
        Kind::Border => &BORDER,
        Kind::Critical => &CRITICAL,
        Kind::Verify(_) => &VERIFY,
    };
    let settings = flags.settings().map_err(Failure::Config)?;
    let cfg = RunConfig::resolve(&settings, defaults).map_err(Failure::Config)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Config(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    let outcome: Outcome = pool.install(|| match &kind {
        Kind::Scan => commands::scan(&cfg),
        Kind::Border => commands::border(&cfg),
        Kind::Critical => commands::critical(&cfg),
        Kind::Verify(suite) => commands::verify(&cfg, suite),
    })?;
    output::emit(cfg.out.as_deref(), &outcome.body).map_err(|e| Failure::Config(format!("cannot write output: {e}")))?;
    match outcome.failure {
        Some(f) => Err(f),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code() as u8)
        }
    }
}
