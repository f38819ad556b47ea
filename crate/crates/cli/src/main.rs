// SPDX-License-Identifier: MIT OR Apache-2.0

//! `hetcusum`: CUSUM change-point tests under heteroskedasticity.
//!
//! Exit codes: 0 on success, 2 on degenerate input (e.g. a constant
//! series), 1 on any other error. Data goes to stdout, diagnostics to stderr.

mod input;
mod output;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hetcusum::kernel_cov::{
    ad_weight_kernel, empirical_kernel_correlated, empirical_kernel_uncorrelated, CovKernel,
};
use hetcusum::lrv::{KernelKind, LrvConfig};
use hetcusum::montecarlo::{
    classical_limit_spectrum, critical_value, sample_weighted_chisq, vs_limit_spectrum, Functional,
    REPORT_LEVELS,
};
use hetcusum::sim::{run_grid, GridConfig};
use hetcusum::spectrum::{eigenvalues, Spectrum, SpectrumSource, Truncation};
use hetcusum::{run_tests, Error, MethodId, Spectrum64, TestConfig64};

use input::{read_columns, Column};
use output::{write_critical_values, write_reports, Format};

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    /// A core error raised while processing the named column.
    Column(String, Error),
    Usage(String),
    Parse(String),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Column(c, e) => write!(f, "column '{c}': {e}"),
            CliError::Usage(m) | CliError::Parse(m) | CliError::Io(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) | CliError::Column(_, e) if e.is_degenerate() => 2,
            _ => 1,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "hetcusum",
    version,
    about = "CUSUM change-point tests under heteroskedasticity"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run tests on the columns of a delimited file.
    Test(TestArgs),
    /// Estimate rejection rates over a grid described by a TOML file.
    Simulate(SimulateArgs),
    /// Critical values of a classical or data-driven limit.
    CriticalValues(CriticalArgs),
    /// Dump the eigenvalues or the covariance kernel of a limit.
    Eigen(EigenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum HacKernel {
    Bartlett,
    Parzen,
}

/// Tuning knobs shared by the subcommands.
#[derive(Args, Debug, Clone)]
struct Knobs {
    /// Size G of the kernel grid [default: min(N, 256)].
    #[arg(long = "grid", short = 'G')]
    grid: Option<usize>,
    /// Keep exactly this many eigenvalues.
    #[arg(long, short = 'm', conflicts_with_all = ["mass", "cap"])]
    terms: Option<usize>,
    /// Keep the smallest number of eigenvalues reaching this fraction of the mass [default: 0.999].
    #[arg(long)]
    mass: Option<f64>,
    /// Upper bound on the retained eigenvalues under --mass [default: 100].
    #[arg(long)]
    cap: Option<usize>,
    /// HAC bandwidth h [default: floor(N^(1/3))].
    #[arg(long, short = 'H')]
    bandwidth: Option<f64>,
    /// HAC kernel.
    #[arg(long, value_enum, default_value = "bartlett")]
    kernel: HacKernel,
    /// Monte Carlo draws per limit distribution [default: 10000].
    #[arg(long, short = 'R')]
    replications: Option<usize>,
    /// Terms of the closed-form classical and VS limits.
    #[arg(long, default_value_t = 200)]
    classical_terms: usize,
    /// Report (1 + #exceedances)/(R + 1) instead of #exceedances/R.
    #[arg(long)]
    pvalue_correction: bool,
    /// Random seed [default: 0].
    #[arg(long, env = "HETCUSUM_SEED")]
    seed: Option<u64>,
}

impl Knobs {
    fn truncation(&self) -> Result<Truncation, CliError> {
        if let Some(m) = self.terms {
            if m == 0 {
                return Err(CliError::Usage("--terms must be positive".into()));
            }
            return Ok(Truncation::Fixed(m));
        }
        let Truncation::Mass { fraction, cap } = Truncation::default() else {
            unreachable!("default truncation is mass based")
        };
        let fraction = self.mass.unwrap_or(fraction);
        let cap = self.cap.unwrap_or(cap);
        if !(fraction > 0.0 && fraction <= 1.0) || cap == 0 {
            return Err(CliError::Usage(
                "--mass must lie in (0, 1] and --cap must be positive".into(),
            ));
        }
        Ok(Truncation::Mass { fraction, cap })
    }

    /// Resolved configuration for a series of length `n`.
    fn config(&self, n: usize) -> Result<TestConfig64, CliError> {
        let defaults = TestConfig64::default();
        let lrv = match (self.bandwidth, self.kernel) {
            (None, HacKernel::Bartlett) => None,
            (h, k) => {
                let h = h.unwrap_or_else(|| LrvConfig::<f64>::default_for(n).bandwidth());
                let kind = match k {
                    HacKernel::Bartlett => KernelKind::Bartlett,
                    HacKernel::Parzen => KernelKind::Parzen,
                };
                Some(LrvConfig::new(kind, h)?)
            }
        };
        Ok(TestConfig64 {
            grid: self.grid,
            truncation: self.truncation()?,
            lrv,
            replications: self.replications.unwrap_or(defaults.replications),
            classical_terms: self.classical_terms,
            pvalue_correction: self.pvalue_correction,
        })
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

fn parse_methods(s: &str) -> Result<MethodId, String> {
    s.parse::<MethodId>().map_err(|e| e.to_string())
}

#[derive(Args, Debug)]
struct TestArgs {
    /// CSV/TSV input file.
    input: PathBuf,
    /// Column to test, by header name or 0-based index; repeatable [default: all].
    #[arg(long, short = 'c')]
    column: Vec<String>,
    /// Methods to run [default: all ten].
    #[arg(long, short = 'M', value_delimiter = ',', value_parser = parse_methods)]
    methods: Vec<MethodId>,
    #[arg(long, short = 'f', value_enum, default_value = "json")]
    format: Format,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    /// TOML grid file.
    config: PathBuf,
    /// Write the CSV here instead of stdout.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Classical {
    Cm,
    Ad,
    Vs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Source {
    Uncorrelated,
    Correlated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Weighting {
    Cm,
    Ad,
}

/// Which limit to use: a closed-form one or the spectrum of a data file.
#[derive(Args, Debug)]
struct LimitArgs {
    /// Closed-form limit.
    #[arg(
        long,
        value_enum,
        conflicts_with = "input",
        required_unless_present = "input"
    )]
    classical: Option<Classical>,
    /// Data file whose empirical kernel defines the limit.
    #[arg(long, short = 'i')]
    input: Option<PathBuf>,
    /// Column of the data file, by name or 0-based index [default: first].
    #[arg(long, short = 'c', requires = "input")]
    column: Option<String>,
    /// Empirical kernel built from the partial variance or the partial HAC path.
    #[arg(long, value_enum, default_value = "uncorrelated")]
    source: Source,
    /// Functional of the limit process.
    #[arg(long, value_enum, default_value = "cm")]
    weighting: Weighting,
}

#[derive(Args, Debug)]
struct CriticalArgs {
    #[command(flatten)]
    limit: LimitArgs,
    /// Significance levels.
    #[arg(long, short = 'a', value_delimiter = ',', default_values_t = REPORT_LEVELS)]
    alphas: Vec<f64>,
    #[arg(long, short = 'f', value_enum, default_value = "table")]
    format: Format,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Dump {
    Spectrum,
    Kernel,
}

#[derive(Args, Debug)]
struct EigenArgs {
    #[command(flatten)]
    limit: LimitArgs,
    #[arg(long, value_enum, default_value = "spectrum")]
    dump: Dump,
    #[command(flatten)]
    knobs: Knobs,
}

fn load_series(path: &Path, column: Option<&String>) -> Result<Column, CliError> {
    let select: Vec<String> = column.cloned().into_iter().collect();
    let mut cols = read_columns(path, &select)?;
    Ok(cols.remove(0))
}

fn empirical_kernel(
    col: &Column,
    limit: &LimitArgs,
    knobs: &Knobs,
) -> Result<CovKernel<f64>, CliError> {
    let s = &col.series;
    let cfg = knobs.config(s.len())?;
    let g = cfg.grid_for(s.len());
    let kernel = match limit.source {
        Source::Uncorrelated => empirical_kernel_uncorrelated(s, g)?,
        Source::Correlated => {
            let (k, floored) = empirical_kernel_correlated(s, &cfg.lrv_for(s.len()), g)?;
            if floored > 0 {
                eprintln!("warning: {floored} non-positive partial HAC values floored");
            }
            k
        }
    };
    Ok(match limit.weighting {
        Weighting::Cm => kernel,
        Weighting::Ad => ad_weight_kernel(&kernel)?,
    })
}

fn limit_spectrum(limit: &LimitArgs, knobs: &Knobs) -> Result<Spectrum64, CliError> {
    if let Some(c) = limit.classical {
        let m = knobs.terms.unwrap_or(knobs.classical_terms);
        return Ok(match c {
            Classical::Cm => classical_limit_spectrum(Functional::Cm, m)?,
            Classical::Ad => classical_limit_spectrum(Functional::Ad, m)?,
            Classical::Vs => vs_limit_spectrum(m)?,
        });
    }
    let path = limit
        .input
        .as_ref()
        .expect("clap requires input or classical");
    let col = load_series(path, limit.column.as_ref())?;
    let kernel = empirical_kernel(&col, limit, knobs)?;
    let source = match limit.source {
        Source::Uncorrelated => SpectrumSource::EmpiricalUncorrelated,
        Source::Correlated => SpectrumSource::EmpiricalCorrelated,
    };
    let sp: Spectrum<f64> = eigenvalues(&kernel, knobs.truncation()?, source)?;
    if sp.is_zero() {
        return Err(Error::Degenerate("empirical spectrum is identically zero".into()).into());
    }
    Ok(sp)
}

fn cmd_test(args: &TestArgs) -> Result<(), CliError> {
    let cols = read_columns(&args.input, &args.column)?;
    let methods: Vec<MethodId> = if args.methods.is_empty() {
        MethodId::ALL.to_vec()
    } else {
        args.methods.clone()
    };
    let mut reports = Vec::new();
    for col in &cols {
        let cfg = args.knobs.config(col.series.len())?;
        let batch = run_tests(&col.series, &methods, &cfg, args.knobs.seed())
            .map_err(|e| CliError::Column(col.name.clone(), e))?;
        for mut r in batch {
            for w in &r.warnings {
                eprintln!("warning: {} {}: {w}", col.name, r.method);
            }
            r.label = Some(col.name.clone());
            reports.push(r);
        }
    }
    let stdout = io::stdout().lock();
    write_reports(stdout, &reports, args.format)
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", args.config.display())))?;
    let grid: GridConfig = toml::from_str(&text)
        .map_err(|e| CliError::Parse(format!("{}: {e}", args.config.display())))?;
    // bandwidth and grid resolve per cell from N when unset
    if args.knobs.bandwidth.is_none() && args.knobs.kernel != HacKernel::Bartlett {
        return Err(CliError::Usage(
            "simulate with a non-Bartlett kernel needs an explicit --bandwidth".into(),
        ));
    }
    let seed = args.knobs.seed.or(grid.seed).unwrap_or(0);
    let mut cfg = args.knobs.config(0)?;
    if args.knobs.replications.is_none() {
        if let Some(r) = grid.replications {
            cfg.replications = r;
        }
    }
    eprintln!("seed: {seed}, replications: {}", cfg.replications);
    let out = run_grid(&grid, seed, &cfg)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    let mut buf = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        for row in &out.rows {
            w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    match &args.output {
        Some(p) => fs::write(p, &buf)
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", p.display()))),
        None => io::stdout()
            .lock()
            .write_all(&buf)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn cmd_critical_values(args: &CriticalArgs) -> Result<(), CliError> {
    let sp = limit_spectrum(&args.limit, &args.knobs)?;
    let r = args
        .knobs
        .replications
        .unwrap_or(TestConfig64::default().replications);
    let ls = sample_weighted_chisq(&sp, r, sp.dof(), args.knobs.seed())?;
    let values = args
        .alphas
        .iter()
        .map(|&a| Ok((a, critical_value(&ls, a)?)))
        .collect::<Result<Vec<_>, Error>>()?;
    write_critical_values(io::stdout().lock(), &values, args.format)
}

fn cmd_eigen(args: &EigenArgs) -> Result<(), CliError> {
    let stdout = io::stdout().lock();
    let err = |e: io::Error| CliError::Io(format!("cannot write output: {e}"));
    match args.dump {
        Dump::Kernel => {
            let path = args
                .limit
                .input
                .as_ref()
                .ok_or_else(|| CliError::Usage("--dump kernel needs --input".into()))?;
            let col = load_series(path, args.limit.column.as_ref())?;
            empirical_kernel(&col, &args.limit, &args.knobs)?
                .write_csv(stdout)
                .map_err(err)
        }
        Dump::Spectrum => {
            let sp = limit_spectrum(&args.limit, &args.knobs)?;
            let mut w = csv::Writer::from_writer(stdout);
            w.write_record(["k", "weight"])
                .map_err(|e| CliError::Io(e.to_string()))?;
            for (k, v) in sp.weights().iter().enumerate() {
                w.write_record([(k + 1).to_string(), format!("{v:e}")])
                    .map_err(|e| CliError::Io(e.to_string()))?;
            }
            w.flush().map_err(err)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Test(a) => cmd_test(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::CriticalValues(a) => cmd_critical_values(a),
        Command::Eigen(a) => cmd_eigen(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
