use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info};

use hubmagic::scan::{self, Catalogs, GridSpec, OutputFormat, ScanConfig, ScanKind, ScanTable};
use hubmagic::stabilizer::{default_cache_dir, load_or_build_a_matrix};
use hubmagic::{Error, MixingPair, QuantumState};

#[derive(Parser, Debug)]
#[command(name = "hubmagic", version, about = "Magic and fermionic resources of the two-site Hubbard model")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    #[command(flatten)]
    opts: Overrides,

    /// More log output (repeat for debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ground-state observables over U.
    Ground,
    /// Thermal observables over U x T, or T_c(U) with --boundary.
    ThermalScan,
    /// Time series after a quench Ui -> Uf with dephasing gamma.
    Quench,
    /// Robustness at gamma*t = 10 over the Ui x Uf grid.
    QuenchScan,
    /// Robustness along a two-state mixing family.
    Mix {
        /// plus-minus | doublon-minus
        #[arg(long)]
        pair: Option<MixingPair>,
    },
    /// Magic report for a density matrix stored as JSON.
    Rom {
        #[arg(long)]
        state: PathBuf,
    },
    /// Build (or load) the stabilizer catalog and print its summary.
    Catalog {
        #[arg(long, value_name = "N")]
        build: usize,
    },
}

#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML file with scan settings; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long = "t", global = true)]
    t: Option<f64>,
    #[arg(long = "U", global = true)]
    u: Option<f64>,
    #[arg(long = "T", global = true)]
    temperature: Option<f64>,
    #[arg(long, global = true)]
    gamma: Option<f64>,
    #[arg(long = "Ui", global = true)]
    u_i: Option<f64>,
    #[arg(long = "Uf", global = true)]
    u_f: Option<f64>,
    #[arg(long = "U-grid", value_name = "MIN:MAX:N[:log]", global = true)]
    u_grid: Option<GridSpec>,
    #[arg(long = "T-grid", value_name = "MIN:MAX:N[:log]", global = true)]
    t_grid: Option<GridSpec>,
    #[arg(long = "lambda-grid", value_name = "MIN:MAX:N[:log]", global = true)]
    lambda_grid: Option<GridSpec>,
    #[arg(long = "time-grid", value_name = "MIN:MAX:N[:log]", global = true)]
    time_grid: Option<GridSpec>,
    #[arg(long = "Ui-grid", value_name = "MIN:MAX:N[:log]", global = true)]
    ui_grid: Option<GridSpec>,
    #[arg(long = "Uf-grid", value_name = "MIN:MAX:N[:log]", global = true)]
    uf_grid: Option<GridSpec>,
    /// Report zero boundaries (T_c or lambda crossings) instead of the grid.
    #[arg(long, global = true)]
    boundary: bool,
    #[arg(long = "boundary-tol", global = true)]
    boundary_tol: Option<f64>,
    /// Comma-separated subset of observables.
    #[arg(long, value_delimiter = ',', global = true)]
    observables: Option<Vec<String>>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// csv | records
    #[arg(long, global = true)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long = "lp-tol", global = true)]
    lp_tol: Option<f64>,
    /// Catalog cache directory (default: $HUBMAGIC_CACHE_DIR).
    #[arg(long = "cache-dir", global = true)]
    cache_dir: Option<PathBuf>,
}

/// Anything that stops a run before output is complete; exit code 1.
struct Failure(String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(e.to_string())
    }
}

fn load_config(opts: &Overrides) -> Result<ScanConfig, Failure> {
    let mut cfg = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure(format!("cannot read {}: {e}", path.display())))?;
            toml::from_str(&text).map_err(|e| Failure(format!("{}: {e}", path.display())))?
        }
        None => ScanConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = opts.$field.clone() {
                cfg.$field = Some(v);
            }
        )*};
    }
    set!(u, temperature, gamma, u_i, u_f, u_grid, t_grid, lambda_grid, time_grid, ui_grid, uf_grid, out, cache_dir);
    if let Some(t) = opts.t {
        cfg.t = t;
    }
    if opts.boundary {
        cfg.boundary = true;
    }
    if let Some(v) = opts.boundary_tol {
        cfg.boundary_tol = v;
    }
    if let Some(v) = &opts.observables {
        cfg.observables = v.clone();
    }
    if let Some(v) = opts.format {
        cfg.format = v;
    }
    if let Some(v) = opts.workers {
        cfg.workers = v;
    }
    if let Some(v) = opts.lp_tol {
        cfg.lp_tol = v;
    }
    if cfg.cache_dir.is_none() {
        cfg.cache_dir = default_cache_dir();
    }
    Ok(cfg)
}

fn emit(table: &ScanTable, cfg: &ScanConfig) -> Result<(), Failure> {
    let io_err = |e: Error| Failure(e.to_string());
    match &cfg.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            table.write(cfg.format, &mut w).map_err(io_err)?;
            w.flush().map_err(|e| Failure(e.to_string()))?;
            info!("wrote {} records to {}", table.records.len(), path.display());
        }
        None => table.write(cfg.format, io::stdout().lock()).map_err(io_err)?,
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let mut cfg = load_config(&cli.opts)?;
    let kind = match &cli.command {
        Command::Ground => ScanKind::Ground,
        Command::ThermalScan => ScanKind::Thermal,
        Command::Quench => ScanKind::Quench,
        Command::QuenchScan => ScanKind::QuenchSaturation,
        Command::Mix { pair } => {
            if pair.is_some() {
                cfg.pair = *pair;
            }
            ScanKind::Mix
        }
        Command::Rom { state } => return rom(state, &cfg),
        Command::Catalog { build } => return catalog(*build, &cfg),
    };
    cfg.validate(kind)?;
    let catalogs = Catalogs::load(cfg.cache_dir.as_deref())?;
    let table = scan::run(kind, &cfg, &catalogs)?;
    emit(&table, &cfg)?;
    Ok(report_failures(&table))
}

fn report_failures(table: &ScanTable) -> bool {
    let n = table.failures();
    if n > 0 {
        error!("{n} of {} records carry errors", table.records.len());
    }
    n == 0
}

fn rom(path: &Path, cfg: &ScanConfig) -> Result<bool, Failure> {
    let rho = QuantumState::load(path).map_err(|e| Failure(format!("{}: {e}", path.display())))?;
    let catalog = load_or_build_a_matrix(rho.n_qubits(), cfg.cache_dir.as_deref())?;
    let table = scan::state_report(&rho, &catalog, cfg.lp_tol);
    emit(&table, cfg)?;
    Ok(report_failures(&table))
}

fn catalog(n: usize, cfg: &ScanConfig) -> Result<bool, Failure> {
    let a = load_or_build_a_matrix(n, cfg.cache_dir.as_deref())?;
    a.validate()?;
    let checksum: String = a.checksum().iter().map(|b| format!("{b:02x}")).collect();
    let mut out = io::stdout().lock();
    writeln!(out, "n_qubits,states,rows,nonzeros,sha256")
        .and_then(|_| writeln!(out, "{},{},{},{},{checksum}", a.n_qubits(), a.n_states(), a.n_rows(), a.matrix().nnz()))
        .map_err(|e| Failure(e.to_string()))?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
