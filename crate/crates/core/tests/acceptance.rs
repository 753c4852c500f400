//! One PASS/FAIL line per primary acceptance criterion. Exits non-zero if
//! any criterion fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rabi_spectrum::determinant::{determinant_w, wronskian_crosscheck, Branch};
use rabi_spectrum::fock::eigen_chis;
use rabi_spectrum::holonomy::{integrate_fundamental, integrate_minus_loop, reflect, ContourPath, DEFAULT_TOL};
use rabi_spectrum::linalg;
use rabi_spectrum::mellin::MellinSystem;
use rabi_spectrum::params::{Coupling, ModelParams, Sector};
use rabi_spectrum::scan::{self, Method, ScanConfig, ScanReport};
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};

type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn holonomy_identity() -> Outcome {
    let (mut det_dev, mut refl_dev, mut radius_dev, mut slowest) = (0.0f64, 0.0f64, 0.0f64, Duration::ZERO);
    for kappa in [0.3, 0.5, 0.8] {
        for mu in [1.0 / 3.0, 1.0] {
            for chi in [1.2, 1.7, 2.3] {
                let start = Instant::now();
                let sys = MellinSystem::new(ModelParams::new(chi, kappa, mu, Sector::Even).map_err(err)?);
                let f_plus = integrate_fundamental(&sys, &ContourPath::default_loop(&sys), DEFAULT_TOL).map_err(err)?;
                let expected = (Complex64::i() * 2.0 * PI * sys.resonant_exponent()).exp();
                det_dev = det_dev.max((f_plus.determinant() - expected).norm());

                let f_minus = integrate_minus_loop(&sys, DEFAULT_TOL).map_err(err)?;
                refl_dev = refl_dev.max(linalg::norm(&(f_minus - reflect(&f_plus))));

                let (a, b) = (0.5 * kappa, 0.5 / kappa);
                for frac in [0.25, 0.75] {
                    let path = ContourPath::loop_with_radius(&sys, 0.5 * (a + frac * (b - a))).map_err(err)?;
                    let f = integrate_fundamental(&sys, &path, DEFAULT_TOL).map_err(err)?;
                    radius_dev = radius_dev.max(linalg::norm(&(f - f_plus)));
                }
                slowest = slowest.max(start.elapsed());
            }
        }
    }
    check(
        det_dev <= 1e-8 && refl_dev <= 1e-8 && radius_dev <= 1e-9 && slowest < Duration::from_secs(1),
        format!(
            "|det F+ - exp(2πiν)| ≤ {det_dev:.1e}, |F- - σxF+σx| ≤ {refl_dev:.1e}, radius drift ≤ {radius_dev:.1e}, slowest point {:.2} s",
            slowest.as_secs_f64()
        ),
    )
}

fn mu_to_zero() -> Outcome {
    let report = scan::scan(&ScanConfig::new(0.5, 1e-3, Sector::Even, (0.9, 4.1), 500)).map_err(err)?;
    let roots = report.roots_of(Method::Holonomy);
    let targets = [1.0, 2.0, 3.0, 4.0];
    let near = |c: f64| targets.iter().map(|t| (c - t).abs()).fold(f64::INFINITY, f64::min);
    let worst_root = roots.iter().map(|&c| near(c)).fold(0.0, f64::max);
    let all_hit = targets.iter().all(|t| roots.iter().any(|c| (c - t).abs() <= 5e-3));

    let free = Coupling::new(0.5, 0.0).map_err(err)?;
    let mut oracle_dev = 0.0f64;
    for sector in [Sector::Even, Sector::Odd] {
        let spectrum = eigen_chis(&free, sector, 8).map_err(err)?;
        for &c in &spectrum.chis {
            let n = ((c - 1.0) * 2.0).round();
            oracle_dev = oracle_dev.max((c - (1.0 + 0.5 * n)).abs());
        }
    }
    check(
        !roots.is_empty() && worst_root <= 5e-3 && all_hit && oracle_dev <= 1e-9,
        format!(
            "{} roots, max distance to {{1,2,3,4}} {worst_root:.1e}; oracle at μ=0 off 1+n/2 by ≤ {oracle_dev:.1e}",
            roots.len()
        ),
    )
}

/// Every oracle value in `[lo, hi]` has exactly one holonomy root within `tol`,
/// and every holonomy root has an oracle partner.
fn one_to_one(report: &ScanReport, lo: f64, hi: f64, tol: f64) -> (bool, usize, f64) {
    let roots = report.roots_of(Method::Holonomy);
    let oracle: Vec<f64> = report.roots_of(Method::Oracle).into_iter().filter(|c| (lo..=hi).contains(c)).collect();
    let mut ok = true;
    let mut worst = 0.0f64;
    for &o in &oracle {
        let close: Vec<f64> = roots.iter().copied().filter(|r| (r - o).abs() <= tol).collect();
        ok &= close.len() == 1;
        worst = worst.max(close.iter().map(|r| (r - o).abs()).fold(0.0, f64::max));
    }
    ok &= roots.iter().all(|r| oracle.iter().any(|o| (r - o).abs() <= tol));
    (ok, oracle.len(), worst)
}

fn generic_coupling_scenario() -> Outcome {
    let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Even, (0.9, 4.0), 500).with_methods(&[Method::Holonomy, Method::Oracle]);
    let report = scan::scan(&cfg).map_err(err)?;
    let (matched, count, worst) = one_to_one(&report, 0.9, 4.0, 1e-6);

    // Continuity at the resonant points: the jump of |W| straddling n must be
    // no larger than the local slope predicts, both at 1e-6 and at one grid step.
    let step = (cfg.chi_range.1 - cfg.chi_range.0) / cfg.grid_points as f64;
    let abs_w = |chi: f64| -> Result<f64, String> {
        let p = ModelParams::new(chi, 0.5, 1.0 / 3.0, Sector::Even).map_err(err)?;
        Ok(determinant_w(&p, DEFAULT_TOL).map_err(err)?.w.norm())
    };
    let mut worst_jump = 0.0f64;
    let mut continuous = true;
    for n in [2.0, 3.0] {
        let across = (abs_w(n - 1e-6)? - abs_w(n + 1e-6)?).abs();
        let grid_change = (abs_w(n - step)? - abs_w(n)?).abs().max((abs_w(n + step)? - abs_w(n)?).abs());
        let local_slope = (abs_w(n - 2.0 * step)? - abs_w(n - step)?).abs();
        continuous &= across <= 20.0 * 1e-6 * local_slope / step + 1e-9 && grid_change <= 3.0 * local_slope + 1e-6;
        worst_jump = worst_jump.max(across);
    }
    check(
        matched && count > 0 && continuous,
        format!("{count} oracle values matched one-to-one (max |Δχ| {worst:.1e}); |W| jump across 2, 3 ≤ {worst_jump:.1e}"),
    )
}

fn degenerate_scenario() -> Outcome {
    let cfg = ScanConfig::new(0.5, 1.0, Sector::Even, (0.9, 4.0), 500).with_methods(&[Method::Holonomy, Method::Oracle]);
    let report = scan::scan(&cfg).map_err(err)?;
    let oracle = report.roots_of(Method::Oracle);
    let hits: Vec<String> = report
        .emary_bishop_flags
        .iter()
        .filter(|f| (f.chi - f.chi.round()).abs() < 1e-9)
        .filter(|f| oracle.iter().filter(|c| (*c - f.chi).abs() < 1e-3).count() >= 2)
        .map(|f| format!("χ = {} ({:?})", f.chi, f.branch))
        .collect();
    check(!hits.is_empty(), format!("identity-holonomy flags with an oracle pair: [{}]", hits.join(", ")))
}

fn cross_method() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (kappa, range) in [(0.5, (0.9, 4.0)), (0.8, (0.5, 3.5))] {
        let cfg = ScanConfig::new(kappa, 1.0 / 3.0, Sector::Even, range, 500).with_methods(&[Method::Holonomy, Method::Factorial]);
        let report = scan::scan(&cfg).map_err(err)?;
        let h = report.roots_of(Method::Holonomy);
        let f = report.roots_of(Method::Factorial);
        let paired = h.len() == f.len() && h.iter().all(|a| f.iter().any(|b| (a - b).abs() <= 1e-5));
        let delta = report.max_discrepancy(Method::Holonomy, Method::Factorial).unwrap_or(f64::INFINITY);
        ok &= paired && !h.is_empty() && delta <= 1e-5;
        lines.push(format!("κ={kappa}: {} holonomy / {} factorial roots, max |Δχ| {delta:.1e}", h.len(), f.len()));
    }
    check(ok, lines.join("; "))
}

fn odd_sector() -> Outcome {
    let cfg = ScanConfig::new(0.5, 1.0 / 3.0, Sector::Odd, (0.9, 4.1), 500).with_methods(&[Method::Holonomy, Method::Oracle]);
    let report = scan::scan(&cfg).map_err(err)?;
    let (matched, count, worst) = one_to_one(&report, 0.9, 4.1, 1e-6);

    let half_integer = |c: f64| ((c - 0.5) - (c - 0.5).round()).abs() < 1e-9;
    let stray: Vec<f64> = report.samples.iter().filter(|s| s.branch != Branch::Generic && !half_integer(s.chi)).map(|s| s.chi).collect();
    let mut integers_generic = true;
    let mut half_special = 0;
    for n in 1..=4 {
        let at = |chi: f64| ModelParams::new(chi, 0.5, 1.0 / 3.0, Sector::Odd).map_err(err);
        integers_generic &= determinant_w(&at(n as f64)?, DEFAULT_TOL).map_err(err)?.branch == Branch::Generic;
        if determinant_w(&at(n as f64 + 0.5)?, DEFAULT_TOL).map_err(err)?.branch != Branch::Generic {
            half_special += 1;
        }
    }
    check(
        matched && count > 0 && stray.is_empty() && integers_generic && half_special == 4,
        format!(
            "{count} odd oracle values matched (max |Δχ| {worst:.1e}); non-generic branches off half-integers: {}; integers generic: {integers_generic}",
            stray.len()
        ),
    )
}

fn validation() -> Outcome {
    let cases: [&[&str]; 4] = [
        &["det", "--kappa", "1.0", "--mu", "0.3", "--chi", "1.5"],
        &["det", "--kappa", "1.4", "--mu", "0.3", "--chi", "1.5"],
        &["scan", "--kappa", "1.2", "--mu", "1", "--chi-min", "1", "--chi-max", "2", "--points", "10"],
        &["det", "--omega", "1", "--omega0", "0.5", "--g", "0.3", "--chi", "1.5"],
    ];
    let mut codes = Vec::new();
    for args in cases {
        let out = Command::new(env!("CARGO_BIN_EXE_rabi2p")).args(args).output().map_err(err)?;
        codes.push(out.status.code().unwrap_or(-1));
    }
    check(codes.iter().all(|&c| c == 2), format!("exit codes {codes:?} for x ≤ 1 inputs"))
}

fn wronskian() -> Outcome {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let kappa = rng.random_range(0.2..0.9);
        let mu = rng.random_range(0.1..1.5);
        let chi = rng.random_range(1.05..3.95);
        let params = ModelParams::new(chi, kappa, mu, Sector::Even).map_err(err)?;
        let sample = determinant_w(&params, DEFAULT_TOL).map_err(err)?;
        for _ in 0..3 {
            let u = rng.random_range(-0.45 * kappa..0.45 * kappa);
            worst = worst.max(wronskian_crosscheck(&params, &sample, u, DEFAULT_TOL).map_err(err)?);
        }
    }
    check(worst <= 1e-7, format!("max residual {worst:.1e} over 3 parameter points × 3 interior u"))
}

fn main() {
    let criteria = [
        Criterion { name: "holonomy determinant identity", budget: Duration::from_secs(18), run: holonomy_identity },
        Criterion { name: "mu -> 0 limit", budget: Duration::from_secs(30), run: mu_to_zero },
        Criterion { name: "kappa=1/2 mu=1/3 scenario", budget: Duration::from_secs(120), run: generic_coupling_scenario },
        Criterion { name: "kappa=1/2 mu=1 Emary-Bishop scenario", budget: Duration::from_secs(120), run: degenerate_scenario },
        Criterion { name: "cross-method factorial vs holonomy", budget: Duration::from_secs(300), run: cross_method },
        Criterion { name: "odd sector", budget: Duration::from_secs(120), run: odd_sector },
        Criterion { name: "validation x <= 1 exit code", budget: Duration::from_secs(60), run: validation },
        Criterion { name: "wronskian cross-check", budget: Duration::from_secs(60), run: wronskian },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (pass, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => (true, d),
            Ok(d) => (false, format!("{d}; over budget {:.0} s", c.budget.as_secs_f64())),
            Err(d) => (false, d),
        };
        failed += usize::from(!pass);
        println!("{} [{}] {detail} ({:.2} s)", if pass { "PASS" } else { "FAIL" }, c.name, elapsed.as_secs_f64());
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
