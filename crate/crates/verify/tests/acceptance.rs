//! Acceptance criteria for the solver. Runs sequentially so the timed
//! criteria are measured without contention, prints one PASS/FAIL line per
//! criterion and exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use layersolve::painleve::{difference_profile, scan_slopes};
use layersolve::spectrum::{eigen_scaling_check, eta_linearization_spectrum, halfline_spectrum};
use layersolve::theory::{delta_threshold, energy_curve, eta_slope_scan, ETA_SCAN_RANGE, ETA_SCAN_SAMPLES};
use layersolve::Branch;
use layersolve_cli::report::write_sweep;
use layersolve_cli::sweep::{spread, CellMetrics, Profiles};
use layersolve_cli::{fit_exponent, run_sweep, Config, Pair, SweepReport};

const S_MAX: f64 = 40.0;
const PROFILE_RESIDUAL_MAX: f64 = 1e-8;
const TAIL_WINDOW: (f64, f64) = (25.0, 40.0);
const TAIL_TARGET: f64 = -0.25;
const TAIL_TOL: f64 = 1e-2;
const PROFILE_TIME: Duration = Duration::from_secs(5);

const SCAN_RANGE: (f64, f64) = (-3.0, 3.0);
const SCAN_SAMPLES: usize = 2000;
const SCAN_TIME: Duration = Duration::from_secs(30);

const SPECTRUM_K: usize = 4;
const SPECTRUM_MARGIN: f64 = 1e-2;
const ETA_MATCH_TOL: f64 = 1e-8;

const SWEEP_POINTS: usize = 7;
const RESIDUAL_SLOPE: f64 = 0.60;
const RESIDUAL_SLOPE_TOL: f64 = 0.05;
const R_SQUARED_MIN: f64 = 0.995;
const BOUNDED_SPREAD: f64 = 3.0;
const SEED_FACTOR: f64 = 10.0;
const CORRECTION_SLOPE_MAX: f64 = 0.20 + 0.05;
const MORSE_A: [f64; 2] = [1e4, 1e5];
const EIGEN_SLOPE: f64 = -0.40;
const EIGEN_SLOPE_TOL: f64 = 0.05;
const EIGEN_CONSTANT_REL: f64 = 0.10;
const APRIORI_SPREAD: f64 = 2.0;
const APRIORI_SLOPE: f64 = -0.40;
const APRIORI_SLOPE_TOL: f64 = 0.05;
const SWEEP_TIME: Duration = Duration::from_secs(600);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn profiles() -> &'static Profiles {
    static P: OnceLock<Profiles> = OnceLock::new();
    P.get_or_init(|| Profiles::solve(S_MAX).expect("profiles solve"))
}

/// The default sweep on one worker, with its wall time.
fn timed_sweep() -> &'static (SweepReport, Duration) {
    static R: OnceLock<(SweepReport, Duration)> = OnceLock::new();
    R.get_or_init(|| {
        let start = Instant::now();
        let r = run_sweep(&Config::default(), Some(1)).expect("default sweep runs");
        (r, start.elapsed())
    })
}

fn sweep() -> &'static SweepReport {
    &timed_sweep().0
}

fn series(pair: Pair) -> Result<Vec<(f64, &'static CellMetrics)>, String> {
    sweep().series(pair).ok_or_else(|| format!("{pair}: a cell failed"))
}

fn a_index(a: f64) -> Result<usize, String> {
    sweep().a_values.iter().position(|&v| (v / a - 1.0).abs() < 1e-9).ok_or_else(|| format!("A={a:e} not in the sweep"))
}

fn criteria_profiles() -> Outcome {
    let start = Instant::now();
    let p = Profiles::solve(S_MAX).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();

    let increasing = p.plus.y().windows(2).all(|w| w[1] > w[0]);
    let yp = p.minus.yp();
    let turns = yp.windows(2).filter(|w| (w[0] < 0.0) != (w[1] < 0.0)).count();
    let minus_ok = yp[0] < 0.0 && turns == 1;

    let mut tails = Vec::new();
    for sol in [&p.plus, &p.minus] {
        // least squares for c in Y - sqrt(s) = c s^-2 on the window
        let (mut num, mut den) = (0.0, 0.0);
        for (&s, &y) in sol.grid().nodes().iter().zip(sol.y()) {
            if (TAIL_WINDOW.0..=TAIL_WINDOW.1).contains(&s) {
                let basis = s.powi(-2);
                num += basis * (y - s.sqrt());
                den += basis * basis;
            }
        }
        tails.push(num / den);
    }
    let tails_ok = tails.iter().all(|c| (c - TAIL_TARGET).abs() <= TAIL_TOL);
    let residuals = [p.plus.residual_sup(), p.minus.residual_sup()];
    let res_ok = residuals.iter().all(|&r| r <= PROFILE_RESIDUAL_MAX);
    verdict(
        res_ok && increasing && minus_ok && tails_ok && elapsed < PROFILE_TIME,
        format!(
            "residuals {:.2e}/{:.2e}, Y+ increasing {increasing}, Y-'(0) {:.6} with {turns} turning point(s), tail coefficients {tails:.5?}, {:.2} s",
            residuals[0],
            residuals[1],
            yp[0],
            elapsed.as_secs_f64()
        ),
    )
}

fn criteria_uniqueness_scans() -> Outcome {
    let start = Instant::now();
    let scan = scan_slopes(SCAN_RANGE, SCAN_SAMPLES).map_err(|e| e.to_string())?;
    let eta = eta_slope_scan(&profiles().plus, ETA_SCAN_RANGE, ETA_SCAN_SAMPLES).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let found: Vec<String> = scan.transitions.iter().map(|(a, b)| format!("({a:.4}, {b:.4})")).collect();
    verdict(
        scan.transitions.len() == 2 && eta.count == 1 && elapsed < SCAN_TIME,
        format!(
            "connecting slopes in [{}, {}]: {} {found:?} (Y-'(0) = {:.4}), decaying eta solutions: {}, {:.2} s",
            SCAN_RANGE.0,
            SCAN_RANGE.1,
            scan.transitions.len(),
            profiles().minus.slope_at_origin(),
            eta.count,
            elapsed.as_secs_f64()
        ),
    )
}

fn criteria_halfline_spectra() -> Outcome {
    let p = profiles();
    let plus = halfline_spectrum(&p.plus, SPECTRUM_K, S_MAX).map_err(|e| e.to_string())?;
    let minus = halfline_spectrum(&p.minus, SPECTRUM_K, S_MAX).map_err(|e| e.to_string())?;
    let phi = difference_profile(&p.plus, &p.minus).map_err(|e| e.to_string())?;
    let eta = eta_linearization_spectrum(&p.plus, &phi, SPECTRUM_K, S_MAX).map_err(|e| e.to_string())?;
    let (mp, mm) = (&plus.eigenvalues, &minus.eigenvalues);
    let gap = eta.eigenvalues.iter().zip(mm).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let signs = mp[0] > SPECTRUM_MARGIN && mm[0] < -SPECTRUM_MARGIN && mm[1] > SPECTRUM_MARGIN;
    verdict(signs && eta.eigenvalues.len() == mm.len() && gap <= ETA_MATCH_TOL, format!("mu+ {mp:.7?}, mu- {mm:.7?}, eta vs minus gap {gap:.2e}"))
}

fn criteria_residual_exponent() -> Outcome {
    let mut ok = sweep().a_values.len() == SWEEP_POINTS;
    let mut parts = Vec::new();
    for pair in Pair::ALL {
        let s = series(pair)?;
        let fit = fit_exponent(&s.iter().map(|(a, m)| (*a, m.residual.e_sup)).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        let b = spread(&s.iter().map(|(_, m)| m.residual.boundary_norm_sup).collect::<Vec<_>>());
        let mid = spread(&s.iter().map(|(_, m)| m.residual.middle_norm_sup).collect::<Vec<_>>());
        ok &= (fit.slope - RESIDUAL_SLOPE).abs() <= RESIDUAL_SLOPE_TOL && fit.r_squared >= R_SQUARED_MIN;
        ok &= b <= BOUNDED_SPREAD && mid <= BOUNDED_SPREAD;
        parts.push(format!("{pair} slope {:.4} r^2 {:.5} spreads {b:.2}/{mid:.2}", fit.slope, fit.r_squared));
    }
    verdict(ok, parts.join("; "))
}

fn criteria_newton() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in Pair::ALL {
        let s = series(pair)?;
        let conv = s.iter().all(|(_, m)| m.final_residual <= m.tol && m.quadratic_tail);
        let seed = s.iter().map(|(_, m)| m.seed_gap / m.tol).fold(0.0, f64::max);
        ok &= conv && seed <= SEED_FACTOR;
        parts.push(format!("{pair} converged {conv}, worst seed gap {seed:.2e} tol"));
    }
    verdict(ok, parts.join("; "))
}

fn criteria_correction() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in Pair::ALL {
        let s = series(pair)?;
        let fit = fit_exponent(&s.iter().map(|(a, m)| (*a, m.correction.phi_sup)).collect::<Vec<_>>()).map_err(|e| e.to_string())?;
        let b = spread(&s.iter().map(|(_, m)| m.correction.boundary_sup).collect::<Vec<_>>());
        let mid = spread(&s.iter().map(|(_, m)| m.correction.middle_sup).collect::<Vec<_>>());
        ok &= fit.slope <= CORRECTION_SLOPE_MAX && b <= BOUNDED_SPREAD && mid <= BOUNDED_SPREAD;
        parts.push(format!("{pair} slope {:.4} spreads {b:.2}/{mid:.2}", fit.slope));
    }
    verdict(ok, parts.join("; "))
}

fn criteria_theorem_regions() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in Pair::ALL {
        let s = series(pair)?;
        let col = |f: fn(&CellMetrics) -> f64| spread(&s.iter().map(|(_, m)| f(m)).collect::<Vec<_>>());
        let spreads =
            [col(|m| m.region_sups.r1), col(|m| m.region_sups.r2), col(|m| m.region_sups.r3), col(|m| m.region_sups.r4), col(|m| m.region_sups.mid)];
        ok &= spreads.iter().all(|&v| v <= BOUNDED_SPREAD);
        parts.push(format!("{pair} {spreads:.2?}"));
    }
    verdict(ok, parts.join("; "))
}

fn criteria_morse() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for a in MORSE_A {
        let i = a_index(a)?;
        for pair in Pair::ALL {
            let expected = [pair.0, pair.1].iter().filter(|&&b| b == Branch::Minus).count();
            let got = sweep().cell(i, pair).ok_or_else(|| format!("A={a:e} {pair}: cell failed"))?.spectrum.morse_index;
            ok &= got == expected;
            parts.push(format!("A={a:e} {pair} {got}/{expected}"));
        }
    }
    verdict(ok, parts.join(", "))
}

fn criteria_eigen_scaling() -> Outcome {
    let pair = Pair(Branch::Minus, Branch::Minus);
    let spectra: Vec<_> = series(pair)?.iter().map(|(_, m)| m.spectrum.clone()).collect();
    let mu = profiles_halfline_minus_first()?;
    let c = eigen_scaling_check(&spectra, 1, Some(mu)).map_err(|e| e.to_string())?;
    let rel = c.constant_rel_error.unwrap_or(f64::INFINITY);
    verdict(
        (c.fitted_exponent - EIGEN_SLOPE).abs() <= EIGEN_SLOPE_TOL && rel <= EIGEN_CONSTANT_REL && c.gap_ratio_decreasing,
        format!(
            "MM lambda1 exponent {:.4}, constant {:.4} vs |mu1-| {:.4} (rel error {rel:.3}), gap ratio decreasing {}",
            c.fitted_exponent,
            c.fitted_constant,
            mu.abs(),
            c.gap_ratio_decreasing
        ),
    )
}

fn profiles_halfline_minus_first() -> Result<f64, String> {
    let r = halfline_spectrum(&profiles().minus, SPECTRUM_K, S_MAX).map_err(|e| e.to_string())?;
    r.eigenvalues.first().copied().ok_or_else(|| "empty spectrum".into())
}

fn criteria_apriori() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for pair in Pair::ALL {
        let s = series(pair)?;
        let sp = spread(&s.iter().map(|(_, m)| m.apriori.max_ratio).collect::<Vec<_>>());
        let constant: Option<Vec<(f64, f64)>> =
            s.iter().map(|(a, m)| m.apriori.per_probe.iter().find(|p| p.probe == "constant").map(|p| (*a, p.phi_sup))).collect();
        let fit = fit_exponent(&constant.ok_or("no constant probe")?).map_err(|e| e.to_string())?;
        ok &= sp <= APRIORI_SPREAD && (fit.slope - APRIORI_SLOPE).abs() <= APRIORI_SLOPE_TOL;
        parts.push(format!("{pair} max_ratio spread {sp:.3}, f=1 slope {:.4}", fit.slope));
    }
    verdict(ok, parts.join("; "))
}

fn criteria_energy() -> Outcome {
    let p = profiles();
    let phi = difference_profile(&p.plus, &p.minus).map_err(|e| e.to_string())?;
    let e = energy_curve(&phi, &p.plus).map_err(|e| e.to_string())?;
    let d = delta_threshold(&p.plus, &phi).map_err(|e| e.to_string())?;
    let (pos, dis) = (e.positive(), e.dissipative());
    verdict(
        pos && dis && d.delta_max > 0.0 && d.delta_max.is_finite() && d.holds_at_half,
        format!(
            "E > 0 {pos}, dE < 0 {dis} over {} nodes, delta_max {:.10}, inequality at delta_max/2 {}",
            e.window_end, d.delta_max, d.holds_at_half
        ),
    )
}

fn criteria_full_sweep() -> Outcome {
    let (first, first_time) = timed_sweep();
    let start = Instant::now();
    let second = run_sweep(&Config::default(), Some(2)).map_err(|e| e.to_string())?;
    let second_time = start.elapsed();
    let dirs = [tempfile::tempdir().map_err(|e| e.to_string())?, tempfile::tempdir().map_err(|e| e.to_string())?];
    write_sweep(dirs[0].path(), first, true).map_err(|e| e.to_string())?;
    write_sweep(dirs[1].path(), &second, true).map_err(|e| e.to_string())?;
    let mut names: Vec<_> = std::fs::read_dir(dirs[0].path()).map_err(|e| e.to_string())?.map(|e| e.unwrap().file_name()).collect();
    names.sort();
    let mut differing = Vec::new();
    for name in &names {
        let a = std::fs::read(dirs[0].path().join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dirs[1].path().join(name)).ok();
        if b.as_deref() != Some(a.as_slice()) {
            differing.push(name.to_string_lossy().into_owned());
        }
    }
    let cells = first.per_a.iter().map(|p| p.cells.len()).sum::<usize>();
    verdict(
        *first_time < SWEEP_TIME && cells == SWEEP_POINTS * 4 && names.iter().any(|n| n == "sweep.json") && differing.is_empty(),
        format!(
            "{cells} cells, {:.1} s on 1 thread, rerun on 2 threads {:.1} s, {} artifacts, differing {differing:?}",
            first_time.as_secs_f64(),
            second_time.as_secs_f64(),
            names.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("C1 profile well-posedness", criteria_profiles),
        ("C2 uniqueness scans", criteria_uniqueness_scans),
        ("C3 half-line spectra", criteria_halfline_spectra),
        ("C4 residual exponent", criteria_residual_exponent),
        ("C5 Newton convergence", criteria_newton),
        ("C6 correction exponents", criteria_correction),
        ("C7 theorem regions", criteria_theorem_regions),
        ("C8 Morse indices", criteria_morse),
        ("C9 eigenvalue scaling", criteria_eigen_scaling),
        ("C10 a-priori estimate", criteria_apriori),
        ("C11 energy identity", criteria_energy),
        ("C12 full sweep", criteria_full_sweep),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("PASS {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
