use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rabi_spectrum::determinant::determinant_w;
use rabi_spectrum::error::{Error, Result};
use rabi_spectrum::fock;
use rabi_spectrum::holonomy::{self, DEFAULT_TOL};
use rabi_spectrum::mellin::MellinSystem;
use rabi_spectrum::params::{Coupling, PhysicalParams, Sector};
use rabi_spectrum::scan::{self, ScanConfig};

/// Spectrum of the two-photon quantum Rabi model.
#[derive(Parser)]
#[command(name = "rabi2p", version)]
struct Cli {
    /// key=value file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Model {
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    /// Physical input instead of --kappa/--mu: field frequency.
    #[arg(long)]
    omega: Option<f64>,
    /// Physical input: qubit splitting.
    #[arg(long)]
    omega0: Option<f64>,
    /// Physical input: two-photon coupling.
    #[arg(long)]
    g: Option<f64>,
    /// even or odd.
    #[arg(long)]
    sector: Option<String>,
}

#[derive(Args, Clone, Default)]
struct Point {
    #[arg(long)]
    chi: Option<f64>,
    /// Dimensionless energy, converted to χ.
    #[arg(long)]
    energy: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args, Clone, Default)]
struct Range {
    #[arg(long = "chi-min")]
    chi_min: Option<f64>,
    #[arg(long = "chi-max")]
    chi_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
    /// Comma-separated subset of holonomy,factorial,oracle.
    #[arg(long)]
    methods: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "eps-root")]
    eps_root: Option<f64>,
    #[arg(long = "eps-rank")]
    eps_rank: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// One determinant sample as JSON.
    Det {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        point: Point,
    },
    /// Sampled W(χ) as CSV plus a JSON roots file.
    Scan {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        range: Range,
        /// CSV destination, `-` for standard output.
        #[arg(long)]
        csv: Option<String>,
        /// Roots JSON destination.
        #[arg(long)]
        roots: Option<PathBuf>,
    },
    /// Truncated-Fock spectrum as CSV.
    Oracle {
        #[command(flatten)]
        model: Model,
        #[arg(long)]
        count: Option<usize>,
    },
    /// Cross-method discrepancy report as JSON.
    Compare {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        range: Range,
    },
    /// Holonomy matrix, eigenpairs and classification as JSON.
    Holonomy {
        #[command(flatten)]
        model: Model,
        #[command(flatten)]
        point: Point,
    },
}

struct Settings {
    file: HashMap<String, String>,
}

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        let mut file = HashMap::new();
        if let Some(p) = path {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", p.display())))?;
            for (i, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| Error::InvalidConfig(format!("{}:{}: expected key=value", p.display(), i + 1)))?;
                file.insert(k.trim().replace('-', "_"), v.trim().to_string());
            }
        }
        Ok(Self { file })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        self.file
            .get(key)
            .map(|v| v.parse::<T>().map_err(|_| Error::InvalidConfig(format!("config value {key}={v} does not parse"))))
            .transpose()
    }

    fn require<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?.ok_or_else(|| Error::InvalidConfig(format!("missing --{}", key.replace('_', "-"))))
    }

    fn coupling(&self, m: &Model) -> Result<Coupling> {
        let kappa = self.get(m.kappa, "kappa")?;
        let mu = self.get(m.mu, "mu")?;
        let omega = self.get(m.omega, "omega")?;
        let omega0 = self.get(m.omega0, "omega0")?;
        let g = self.get(m.g, "g")?;
        match (kappa, mu, omega, omega0, g) {
            (Some(k), Some(mu), None, None, None) => Coupling::new(k, mu),
            (None, None, Some(omega), Some(omega0), Some(g)) => Coupling::from_physical(&PhysicalParams { omega, omega0, g }),
            _ => Err(Error::InvalidConfig("give either --kappa and --mu, or --omega, --omega0 and --g".into())),
        }
    }

    fn sector(&self, m: &Model) -> Result<Sector> {
        Ok(self.get(m.sector.clone(), "sector")?.map(|s| s.parse()).transpose()?.unwrap_or(Sector::Even))
    }

    fn chi(&self, p: &Point, coupling: &Coupling) -> Result<f64> {
        match (self.get(p.chi, "chi")?, self.get(p.energy, "energy")?) {
            (Some(chi), None) => Ok(chi),
            (None, Some(e)) => Ok(coupling.chi_from_energy(e)),
            _ => Err(Error::InvalidConfig("give exactly one of --chi and --energy".into())),
        }
    }

    fn scan_config(&self, m: &Model, r: &Range, default_methods: &str) -> Result<ScanConfig> {
        let c = self.coupling(m)?;
        let range = (self.require(r.chi_min, "chi_min")?, self.require(r.chi_max, "chi_max")?);
        let points = self.get(r.points, "points")?.unwrap_or(500);
        let mut cfg = ScanConfig::new(c.kappa, c.mu, self.sector(m)?, range, points);
        cfg.methods = scan::parse_methods(&self.get(r.methods.clone(), "methods")?.unwrap_or(default_methods.into()))?;
        cfg.tol_ode = self.get(r.tol, "tol")?.unwrap_or(cfg.tol_ode);
        cfg.eps_root = self.get(r.eps_root, "eps_root")?.unwrap_or(cfg.eps_root);
        cfg.eps_rank = self.get(r.eps_rank, "eps_rank")?.unwrap_or(cfg.eps_rank);
        Ok(cfg)
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let out = io::stdout().lock();
    serde_json::to_writer_pretty(out, value).map_err(|e| Error::InvalidConfig(format!("json write failed: {e}")))?;
    println!();
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::InvalidConfig(format!("cannot create {}: {e}", path.display())))
}

fn run(cli: Cli) -> Result<()> {
    let s = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Det { model, point } => {
            let c = s.coupling(&model)?;
            let params = c.at(s.chi(&point, &c)?, s.sector(&model)?);
            print_json(&determinant_w(&params, s.get(point.tol, "tol")?.unwrap_or(DEFAULT_TOL))?)
        }
        Command::Holonomy { model, point } => {
            let c = s.coupling(&model)?;
            let params = c.at(s.chi(&point, &c)?, s.sector(&model)?);
            print_json(&holonomy::holonomy(&MellinSystem::new(params), s.get(point.tol, "tol")?.unwrap_or(DEFAULT_TOL))?)
        }
        Command::Scan { model, range, csv, roots } => {
            let cfg = s.scan_config(&model, &range, "holonomy")?;
            let report = scan::scan(&cfg)?;
            match s.get(csv, "csv")?.unwrap_or("-".into()).as_str() {
                "-" => scan::write_samples_csv(&report.samples, io::stdout().lock())?,
                path => scan::write_samples_csv(&report.samples, create(Path::new(path))?)?,
            }
            let roots = s.get(roots, "roots")?.unwrap_or_else(|| PathBuf::from("roots.json"));
            let mut out = create(&roots)?;
            scan::write_roots_json(&report, &mut out)?;
            out.flush().map_err(|e| Error::InvalidConfig(format!("cannot write {}: {e}", roots.display())))
        }
        Command::Compare { model, range } => {
            let cfg = s.scan_config(&model, &range, "holonomy,factorial,oracle")?;
            let report = scan::compare_methods(&cfg)?;
            scan::write_roots_json(&report, io::stdout().lock())?;
            println!();
            Ok(())
        }
        Command::Oracle { model, count } => {
            let c = s.coupling(&model)?;
            let count = s.get(count, "count")?.unwrap_or(10);
            let sectors = match s.get(model.sector.clone(), "sector")? {
                Some(name) => vec![name.parse::<Sector>()?],
                None => vec![Sector::Even, Sector::Odd],
            };
            let spectra = sectors.into_iter().map(|sec| fock::eigen_chis(&c, sec, count)).collect::<Result<Vec<_>>>()?;
            fock::write_csv(&spectra, io::stdout().lock())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
