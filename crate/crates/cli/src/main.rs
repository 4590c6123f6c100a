use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use zeno_core::criterion::{boundary_find, classify};
use zeno_core::sweep::{run, ConfigFile, SweepSpec, TauGrid};
use zeno_core::{Method, ZenoError};

#[derive(Parser)]
#[command(name = "zeno", version, about = "Measurement-modified decay rates and Zeno/anti-Zeno classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate every requested method over the configured τ grid.
    Sweep(SweepArgs),
    /// Print the Zeno/anti-Zeno verdict. Exit status 10 = QZE, 11 = QAZE, 12 = indeterminate.
    Classify(CommonArgs),
    /// Locate the parameter value where G″(Δ) changes sign.
    Boundary(BoundaryArgs),
    /// Volterra-oracle rates at the given intervals.
    Oracle(OracleArgs),
    /// Print the Zeno time and total spectral weight.
    ZenoTime(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// JSON configuration document.
    #[arg(long)]
    config: PathBuf,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Replace Δ by its Lamb-shifted value before evaluating.
    #[arg(long)]
    apply_lamb_shift: bool,
    /// Relative tolerance of the filter quadrature.
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Volterra step size.
    #[arg(long)]
    dt: Option<f64>,
    /// Worker threads (all cores by default).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated method tokens, e.g. ut_quadrature,exact_lorentzian.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated intervals, in the units of the config's sweep section.
    #[arg(long, value_delimiter = ',')]
    taus: Option<Vec<f64>>,
    /// Volterra integration horizon.
    #[arg(long)]
    t_max: Option<f64>,
}

#[derive(Args)]
struct BoundaryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// "delta" or a spectrum field such as omega_c.
    #[arg(long)]
    param: Option<String>,
    /// Bracket as lo,hi.
    #[arg(long, value_delimiter = ',')]
    range: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug)]
enum CliError {
    Core(ZenoError),
    Io(String),
}

impl From<ZenoError> for CliError {
    fn from(e: ZenoError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn record(&self) -> serde_json::Value {
        let (code, message) = match self {
            CliError::Core(e) => (e.code(), e.to_string()),
            CliError::Io(m) => ("IO", m.clone()),
        };
        json!({ "error": { "code": code, "message": message } })
    }
}

type CliResult<T> = Result<T, CliError>;

fn load(path: &Path) -> CliResult<ConfigFile> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(ConfigFile::from_json(&text)?)
}

fn emit(out: Option<&Path>, text: &str) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => io::stdout().lock().write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn apply_overrides(spec: &mut SweepSpec, args: &RunArgs) {
    if args.apply_lamb_shift {
        spec.apply_lamb_shift = true;
    }
    if let Some(r) = args.rel_tol {
        spec.quadrature.rel_tol = r;
    }
    if let Some(dt) = args.dt {
        spec.volterra.dt = Some(dt);
    }
}

fn execute(spec: SweepSpec, common: &CommonArgs, args: &RunArgs) -> CliResult<u8> {
    spec.validate()?;
    let result = run(&spec.normalized(), args.threads)?;
    let text = match args.format {
        Format::Csv => result.to_csv(),
        Format::Json => result.to_json(),
    };
    emit(common.out.as_deref(), &text)?;
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> CliResult<u8> {
    let file = load(&args.common.config)?;
    let mut spec = file.sweep_spec()?;
    if let Some(m) = args.methods {
        spec.methods = m;
    }
    apply_overrides(&mut spec, &args.run);
    execute(spec, &args.common, &args.run)
}

fn cmd_oracle(args: OracleArgs) -> CliResult<u8> {
    let mut file = load(&args.common.config)?;
    match (&mut file.sweep, args.taus) {
        (Some(section), Some(taus)) => section.tau = TauGrid::List(taus),
        (None, Some(taus)) => {
            file.sweep = Some(zeno_core::sweep::SweepSection {
                tau: TauGrid::List(taus),
                units: Default::default(),
                methods: None,
            })
        }
        (Some(_), None) => {}
        (None, None) => {
            return Err(ZenoError::InvalidConfig("no intervals: pass --taus or add a sweep section".into()).into())
        }
    }
    let mut spec = file.sweep_spec()?;
    spec.methods = vec![Method::VolterraOracle];
    if args.t_max.is_some() {
        spec.volterra.t_max = args.t_max;
    }
    apply_overrides(&mut spec, &args.run);
    execute(spec, &args.common, &args.run)
}

fn cmd_classify(args: CommonArgs) -> CliResult<u8> {
    let file = load(&args.config)?;
    let mut config = file.system()?;
    if file.settings.apply_lamb_shift {
        config = config.with_lamb_shift()?;
    }
    let c = classify(&config, file.settings.g2_eps)?;
    let doc = json!({ "delta": config.delta, "spectrum": config.spectrum, "classification": c });
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
    Ok(c.verdict.exit_code() as u8)
}

fn cmd_boundary(args: BoundaryArgs) -> CliResult<u8> {
    let file = load(&args.common.config)?;
    let config = file.system()?;
    let section = file.settings.boundary.as_ref();
    let param = args
        .param
        .or_else(|| section.map(|b| b.parameter.clone()))
        .ok_or_else(|| ZenoError::InvalidConfig("no boundary parameter: pass --param".into()))?;
    let [lo, hi] = match (args.range, section) {
        (Some(r), _) if r.len() == 2 => [r[0], r[1]],
        (Some(r), _) => {
            return Err(ZenoError::InvalidConfig(format!("--range takes lo,hi, got {} values", r.len())).into())
        }
        (None, Some(b)) => b.range,
        (None, None) => return Err(ZenoError::InvalidConfig("no boundary range: pass --range lo,hi".into()).into()),
    };
    let root = boundary_find(&config, &param, lo, hi)?;
    let doc = json!({ "parameter": param, "range": [lo, hi], "root": root, "root_over_delta": root / config.delta });
    emit(args.common.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
    Ok(0)
}

fn cmd_zeno_time(args: CommonArgs) -> CliResult<u8> {
    let file = load(&args.config)?;
    let config = file.system()?;
    let doc = json!({
        "zeno_time": config.spectrum.zeno_time()?,
        "total_weight": config.spectrum.total_weight()?,
        "gamma0": config.free_decay_rate(),
    });
    emit(args.out.as_deref(), &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()))?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Sweep(a) => cmd_sweep(a),
        Command::Classify(a) => cmd_classify(a),
        Command::Boundary(a) => cmd_boundary(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::ZenoTime(a) => cmd_zeno_time(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(1)
        }
    }
}
