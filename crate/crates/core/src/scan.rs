//! χ scans of the spectral determinant, root lists from the three methods
//! and their comparison.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::determinant::{determinant_w, Branch, DeterminantSample};
use crate::error::{Error, Result};
use crate::factorial;
use crate::fock;
use crate::holonomy::DEFAULT_TOL;
use crate::params::{Coupling, ModelParams, Sector};
use crate::recurrence::Parity;

pub const DEFAULT_EPS_ROOT: f64 = 1e-7;
/// Cross-method differences above this are flagged.
pub const DISCREPANCY_FLAG: f64 = 1e-4;
/// Offsets from integer (half-integer) χ probed on both sides.
pub const PROBE_OFFSETS: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
/// Neighbouring samples whose `W` differ by more than this are bisected.
const MAX_JUMP: f64 = 0.25;
const MAX_REFINE_PASSES: usize = 40;
const MIN_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Holonomy,
    Factorial,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Holonomy => "holonomy",
            Method::Factorial => "factorial",
            Method::Oracle => "oracle",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "holonomy" => Ok(Method::Holonomy),
            "factorial" => Ok(Method::Factorial),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::InvalidConfig(format!("unknown method '{other}' (expected holonomy, factorial or oracle)"))),
        }
    }
}

/// Parses a comma-separated method list, dropping duplicates.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    let set: BTreeSet<Method> = list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    Ok(set.into_iter().collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanConfig {
    pub kappa: f64,
    pub mu: f64,
    pub sector: Sector,
    pub chi_range: (f64, f64),
    pub grid_points: usize,
    pub tol_ode: f64,
    pub eps_root: f64,
    pub eps_rank: f64,
    pub methods: Vec<Method>,
}

impl ScanConfig {
    pub fn new(kappa: f64, mu: f64, sector: Sector, chi_range: (f64, f64), grid_points: usize) -> Self {
        Self {
            kappa,
            mu,
            sector,
            chi_range,
            grid_points,
            tol_ode: DEFAULT_TOL,
            eps_root: DEFAULT_EPS_ROOT,
            eps_rank: factorial::DEFAULT_EPS_RANK,
            methods: vec![Method::Holonomy],
        }
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    /// Checks the configuration. A range with `lo == hi` is allowed and
    /// yields an empty report.
    pub fn validate(&self) -> Result<Coupling> {
        let coupling = Coupling::new(self.kappa, self.mu)?;
        let (lo, hi) = self.chi_range;
        if !lo.is_finite() || !hi.is_finite() || lo > hi {
            return Err(Error::InvalidConfig(format!("chi range [{lo}, {hi}] must be finite with lo <= hi")));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidConfig(format!("grid_points = {} must be at least 2", self.grid_points)));
        }
        for (name, v) in [("tol_ode", self.tol_ode), ("eps_root", self.eps_root), ("eps_rank", self.eps_rank)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidConfig(format!("{name} = {v} must be positive")));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidConfig("no method enabled".into()));
        }
        Ok(coupling)
    }

    fn params(&self, chi: f64) -> ModelParams {
        Coupling { kappa: self.kappa, mu: self.mu }.at(chi, self.sector)
    }

    fn is_empty_range(&self) -> bool {
        self.chi_range.0 == self.chi_range.1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Root {
    pub chi: f64,
    pub method: Method,
    /// `|W|` (holonomy), largest rank minor (factorial) or truncation
    /// stability bound (oracle).
    pub residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parity: Option<Parity>,
    pub emary_bishop: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmaryBishopFlag {
    pub chi: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Discrepancy {
    pub method_a: Method,
    pub method_b: Method,
    pub chi_a: f64,
    pub chi_b: Option<f64>,
    pub delta: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleError {
    pub chi: f64,
    pub message: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanReport {
    pub config: ScanConfig,
    pub samples: Vec<DeterminantSample>,
    pub roots: Vec<Root>,
    pub emary_bishop_flags: Vec<EmaryBishopFlag>,
    pub method_discrepancies: Vec<Discrepancy>,
    pub errors: Vec<SampleError>,
}

impl ScanReport {
    fn empty(cfg: &ScanConfig) -> Self {
        Self {
            config: cfg.clone(),
            samples: Vec::new(),
            roots: Vec::new(),
            emary_bishop_flags: Vec::new(),
            method_discrepancies: Vec::new(),
            errors: Vec::new(),
        }
    }

    pub fn roots_of(&self, method: Method) -> Vec<f64> {
        self.roots.iter().filter(|r| r.method == method).map(|r| r.chi).collect()
    }

    pub fn max_discrepancy(&self, a: Method, b: Method) -> Option<f64> {
        self.method_discrepancies
            .iter()
            .filter(|d| d.method_a == a && d.method_b == b)
            .map(|d| d.delta.unwrap_or(f64::INFINITY))
            .reduce(f64::max)
    }
}

/// Resonant χ (integers, or half-integers in the odd sector) inside `[lo, hi]`.
pub fn resonant_points(sector: Sector, lo: f64, hi: f64) -> Vec<f64> {
    let off = sector.resonance_offset();
    let first = (lo - off).ceil() as i64;
    let last = (hi - off).floor() as i64;
    (first..=last).map(|k| k as f64 + off).collect()
}

/// Grid nodes at half-step phase plus the probes around resonant points.
fn initial_nodes(cfg: &ScanConfig) -> Vec<f64> {
    let (lo, hi) = cfg.chi_range;
    let step = (hi - lo) / cfg.grid_points as f64;
    let mut nodes: Vec<f64> = (0..cfg.grid_points).map(|i| lo + (i as f64 + 0.5) * step).collect();
    for r in resonant_points(cfg.sector, lo, hi) {
        nodes.push(r);
        for d in PROBE_OFFSETS {
            nodes.extend([r - d, r + d].into_iter().filter(|c| *c > lo && *c < hi));
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

fn evaluate(cfg: &ScanConfig, chis: &[f64]) -> Vec<(f64, Result<DeterminantSample>)> {
    chis.par_iter().map(|&chi| (chi, determinant_w(&cfg.params(chi), cfg.tol_ode))).collect()
}

fn is_resonant_value(sector: Sector, chi: f64) -> bool {
    let off = sector.resonance_offset();
    ((chi - off) - (chi - off).round()).abs() < 1e-12
}

/// Samples `W` on the grid, bisects cells where it varies quickly, and
/// refines every sign change of `Re W` with Brent's method. Identity
/// holonomies at resonant χ are reported as Emary-Bishop flags; the
/// positive-χ ones are also roots.
pub fn scan_determinant(cfg: &ScanConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let mut report = ScanReport::empty(cfg);
    if cfg.is_empty_range() {
        return Ok(report);
    }
    let mut samples: Vec<DeterminantSample> = Vec::new();
    let record = |batch: Vec<(f64, Result<DeterminantSample>)>, samples: &mut Vec<DeterminantSample>, errors: &mut Vec<SampleError>| {
        for (chi, r) in batch {
            match r {
                Ok(s) => samples.push(s),
                Err(e) => errors.push(SampleError { chi, message: e.to_string() }),
            }
        }
        samples.sort_by(|a, b| a.chi.total_cmp(&b.chi));
    };
    record(evaluate(cfg, &initial_nodes(cfg)), &mut samples, &mut report.errors);

    for _ in 0..MAX_REFINE_PASSES {
        let mids: Vec<f64> = samples
            .windows(2)
            .filter(|w| (w[1].w - w[0].w).norm() > MAX_JUMP && w[1].chi - w[0].chi > MIN_GAP)
            .map(|w| 0.5 * (w[0].chi + w[1].chi))
            .filter(|c| !is_resonant_value(cfg.sector, *c))
            .collect();
        if mids.is_empty() {
            break;
        }
        record(evaluate(cfg, &mids), &mut samples, &mut report.errors);
    }

    for s in &samples {
        if matches!(s.branch, Branch::IdentityPositive | Branch::IdentityNegative) {
            report.emary_bishop_flags.push(EmaryBishopFlag { chi: s.chi, branch: s.branch });
            if s.branch == Branch::IdentityPositive {
                report.roots.push(Root { chi: s.chi, method: Method::Holonomy, residual: 0.0, parity: None, emary_bishop: true });
            }
        }
    }

    let brackets: Vec<(f64, f64)> = samples
        .windows(2)
        .filter(|w| {
            let generic = |s: &DeterminantSample| !matches!(s.branch, Branch::IdentityPositive | Branch::IdentityNegative);
            generic(&w[0]) && generic(&w[1]) && w[0].w.re.signum() != w[1].w.re.signum()
        })
        .map(|w| (w[0].chi, w[1].chi))
        .collect();
    let refined: Vec<Option<Root>> = brackets.par_iter().map(|&(a, b)| refine_holonomy_root(cfg, a, b)).collect();
    for root in refined.into_iter().flatten() {
        let near_flag = report.emary_bishop_flags.iter().any(|f| (f.chi - root.chi).abs() < 1e-7);
        if !near_flag {
            report.roots.push(root);
        }
    }
    report.roots.sort_by(|a, b| a.chi.total_cmp(&b.chi));
    report.samples = samples;
    Ok(report)
}

fn refine_holonomy_root(cfg: &ScanConfig, a: f64, b: f64) -> Option<Root> {
    let re_w = |chi: f64| determinant_w(&cfg.params(chi), cfg.tol_ode).map(|s| s.w.re).unwrap_or(f64::NAN);
    let mut conv = SimpleConvergency { eps: 1e-15, max_iter: 200 };
    let chi = find_root_brent(a, b, re_w, &mut conv).ok()?;
    let s = determinant_w(&cfg.params(chi), cfg.tol_ode).ok()?;
    let residual = s.w.norm();
    (residual < cfg.eps_root).then_some(Root { chi, method: Method::Holonomy, residual, parity: None, emary_bishop: false })
}

/// Rank-condition roots over the configured range.
pub fn factorial_roots(cfg: &ScanConfig) -> Result<Vec<Root>> {
    cfg.validate()?;
    if cfg.is_empty_range() {
        return Ok(Vec::new());
    }
    let (lo, hi) = cfg.chi_range;
    let found =
        factorial::rank_roots(&cfg.params(lo), lo, hi, cfg.grid_points, factorial::DEFAULT_N0, factorial::SECOND_N0, cfg.eps_rank)?;
    Ok(found
        .into_iter()
        .map(|r| Root { chi: r.chi, method: Method::Factorial, residual: r.max_minor(), parity: Some(r.parity), emary_bishop: false })
        .collect())
}

/// Truncated-Fock eigenvalues in the configured range.
pub fn oracle_roots(cfg: &ScanConfig) -> Result<Vec<Root>> {
    let coupling = cfg.validate()?;
    if cfg.is_empty_range() {
        return Ok(Vec::new());
    }
    let (lo, hi) = cfg.chi_range;
    let mut count = 8;
    let spectrum = loop {
        let s = fock::eigen_chis(&coupling, cfg.sector, count)?;
        if s.chis.last().is_some_and(|c| *c > hi) {
            break s;
        }
        count *= 2;
    };
    Ok(spectrum
        .chis
        .into_iter()
        .filter(|c| *c >= lo && *c <= hi)
        .map(|chi| Root { chi, method: Method::Oracle, residual: fock::STABILITY_TOL, parity: None, emary_bishop: false })
        .collect())
}

/// Pairs every root of `a` with the nearest root of `b`.
pub fn pair_roots(a: Method, ra: &[f64], b: Method, rb: &[f64]) -> Vec<Discrepancy> {
    ra.iter()
        .map(|&x| {
            let nearest = rb.iter().copied().min_by(|p, q| (p - x).abs().total_cmp(&(q - x).abs()));
            let delta = nearest.map(|y| (y - x).abs());
            Discrepancy { method_a: a, method_b: b, chi_a: x, chi_b: nearest, delta, flagged: delta.is_none_or(|d| d > DISCREPANCY_FLAG) }
        })
        .collect()
}

fn run_methods(cfg: &ScanConfig) -> Result<ScanReport> {
    let mut report = if cfg.methods.contains(&Method::Holonomy) {
        scan_determinant(cfg)?
    } else {
        cfg.validate()?;
        ScanReport::empty(cfg)
    };
    if cfg.methods.contains(&Method::Factorial) {
        report.roots.extend(factorial_roots(cfg)?);
    }
    if cfg.methods.contains(&Method::Oracle) {
        report.roots.extend(oracle_roots(cfg)?);
    }
    report.roots.sort_by(|a, b| a.chi.total_cmp(&b.chi).then(a.method.cmp(&b.method)));
    let methods: Vec<Method> = cfg.methods.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    for (i, &a) in methods.iter().enumerate() {
        for &b in &methods[i + 1..] {
            let ra = report.roots_of(a);
            let rb = report.roots_of(b);
            report.method_discrepancies.extend(pair_roots(a, &ra, b, &rb));
            report.method_discrepancies.extend(pair_roots(b, &rb, a, &ra));
        }
    }
    Ok(report)
}

/// Runs every enabled method and fills in the cross-method discrepancies.
pub fn scan(cfg: &ScanConfig) -> Result<ScanReport> {
    run_methods(cfg)
}

/// As [`scan`], but requires at least two methods.
pub fn compare_methods(cfg: &ScanConfig) -> Result<ScanReport> {
    let distinct: BTreeSet<Method> = cfg.methods.iter().copied().collect();
    if distinct.len() < 2 {
        let listed: Vec<String> = distinct.iter().map(Method::to_string).collect();
        return Err(Error::InvalidConfig(format!(
            "comparison needs at least two methods; enabled: [{}]",
            listed.join(", ")
        )));
    }
    run_methods(cfg)
}

fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// CSV with columns `chi,re_w,im_w,abs_w,branch`.
pub fn write_samples_csv<W: Write>(samples: &[DeterminantSample], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::InvalidConfig(format!("csv write failed: {e}"));
    w.write_record(["chi", "re_w", "im_w", "abs_w", "branch"]).map_err(io)?;
    for s in samples {
        w.write_record([sig12(s.chi), sig12(s.w.re), sig12(s.w.im), sig12(s.w.norm()), s.branch.as_str().to_string()]).map_err(io)?;
    }
    w.flush().map_err(|e| Error::InvalidConfig(format!("csv flush failed: {e}")))?;
    Ok(())
}

#[derive(Serialize)]
struct RootsFile<'a> {
    kappa: f64,
    mu: f64,
    sector: Sector,
    roots: &'a [Root],
    emary_bishop_flags: &'a [EmaryBishopFlag],
    method_discrepancies: &'a [Discrepancy],
    errors: &'a [SampleError],
}

/// JSON with the roots, flags, discrepancies and per-sample errors.
pub fn write_roots_json<W: Write>(report: &ScanReport, out: W) -> Result<()> {
    let file = RootsFile {
        kappa: report.config.kappa,
        mu: report.config.mu,
        sector: report.config.sector,
        roots: &report.roots,
        emary_bishop_flags: &report.emary_bishop_flags,
        method_discrepancies: &report.method_discrepancies,
        errors: &report.errors,
    };
    serde_json::to_writer_pretty(out, &file).map_err(|e| Error::InvalidConfig(format!("json write failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resonant_points_per_sector() {
        assert_eq!(resonant_points(Sector::Even, 0.9, 4.0), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(resonant_points(Sector::Odd, 0.9, 3.0), vec![1.5, 2.5]);
    }

    #[test]
    fn grid_avoids_resonances_except_probes() {
        let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (1.0, 3.0), 20);
        let nodes = initial_nodes(&cfg);
        let exact: Vec<f64> = nodes.iter().copied().filter(|c| is_resonant_value(Sector::Even, *c)).collect();
        assert_eq!(exact, vec![1.0, 2.0, 3.0]);
        assert!(nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn empty_range_gives_empty_report() {
        let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (2.0, 2.0), 10);
        let r = scan_determinant(&cfg).unwrap();
        assert!(r.samples.is_empty() && r.roots.is_empty());
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (3.0, 2.0), 10);
        assert!(cfg.validate().is_err());
        cfg.chi_range = (1.0, 2.0);
        cfg.grid_points = 1;
        assert!(cfg.validate().is_err());
        cfg.grid_points = 10;
        cfg.kappa = 1.2;
        assert!(matches!(cfg.validate(), Err(Error::RejectedParameters(_))));
    }

    #[test]
    fn compare_needs_two_methods() {
        let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (1.0, 2.0), 10).with_methods(&[Method::Oracle, Method::Oracle]);
        let err = compare_methods(&cfg).unwrap_err().to_string();
        assert!(err.contains("oracle"), "{err}");
    }

    #[test]
    fn method_parsing() {
        assert_eq!(parse_methods("oracle, holonomy,oracle").unwrap(), vec![Method::Holonomy, Method::Oracle]);
        assert!(parse_methods("holonomy,magic").is_err());
    }

    #[test]
    fn short_scan_finds_lowest_pair() {
        let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (0.8, 1.3), 40).with_methods(&[Method::Holonomy, Method::Oracle]);
        let r = compare_methods(&cfg).unwrap();
        assert_eq!(r.roots_of(Method::Holonomy).len(), 2);
        assert!(r.max_discrepancy(Method::Holonomy, Method::Oracle).unwrap() < 1e-6);
        assert!(r.max_discrepancy(Method::Oracle, Method::Holonomy).unwrap() < 1e-6);
    }

    #[test]
    fn csv_and_json_outputs() {
        let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (0.8, 1.0), 8);
        let r = scan_determinant(&cfg).unwrap();
        let mut buf = Vec::new();
        write_samples_csv(&r.samples, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "chi,re_w,im_w,abs_w,branch");
        assert_eq!(lines.count(), r.samples.len());
        let mut json = Vec::new();
        write_roots_json(&r, &mut json).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert!(v["roots"].is_array());
    }
}
