//! The full harness: per `(A, pair)` cell it assembles, corrects, reports and
//! analyses the solution, then fits exponents and checks thresholds.

use std::collections::BTreeMap;

use layersolve::bvp::{
    correction_region_report, mesh_independence, mirror_distance, newton_solve, refined_residual, reflection_gap, seed_independence,
    theorem_region_report, CorrectionReport, TheoremRegions,
};
use layersolve::composite::{assemble, residual_region_report, Mesh, ResidualRegionReport};
use layersolve::painleve::{refine_collocation, shoot, ProfileMeta};
use layersolve::scalar::sup_abs;
use layersolve::spectrum::{
    apriori_ratio, default_probes, eigen_scaling_check, halfline_spectrum, interval_spectrum, paired_halfline_index, AprioriReport, Probe,
    ScalingCheck,
};
use layersolve::{Branch, BvpSolution, PainleveSolution, SpectrumReport};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, Pair};
use crate::error::{CliError, CliResult};
use crate::fit::{fit_exponent, Fit};

/// Version of the sweep report layout (see `schemas/sweep_report.schema.json`).
pub const SCHEMA_VERSION: &str = "1.0.0";
/// Bisection tolerance for the connecting slopes.
pub const SHOOT_TOL: f64 = 1e-12;
/// Far-field order imposed at `s_max`.
pub const FAR_FIELD_ORDER: usize = 2;

/// The two boundary-layer profiles every stage shares.
#[derive(Debug, Clone)]
pub struct Profiles {
    pub plus: PainleveSolution,
    pub minus: PainleveSolution,
}

impl Profiles {
    pub fn solve(s_max: f64) -> layersolve::Result<Self> {
        let one = |b: Branch| -> layersolve::Result<PainleveSolution> {
            let seed = shoot(b, s_max, b.default_bracket(), SHOOT_TOL)?;
            refine_collocation(&seed, s_max, FAR_FIELD_ORDER)
        };
        let (plus, minus) = rayon::join(|| one(Branch::Plus), || one(Branch::Minus));
        Ok(Self { plus: plus?, minus: minus? })
    }

    pub fn get(&self, b: Branch) -> &PainleveSolution {
        match b {
            Branch::Plus => &self.plus,
            Branch::Minus => &self.minus,
        }
    }
}

/// Everything measured for one `(A, pair)`.
#[derive(Debug, Clone, Serialize)]
pub struct CellMetrics {
    pub residual: ResidualRegionReport,
    pub newton_iters: usize,
    pub final_residual: f64,
    pub tol: f64,
    pub quadratic_tail: bool,
    pub quadratic_ratios: Vec<f64>,
    pub roundoff_floor: f64,
    /// Residual on the doubled mesh after cubic interpolation.
    pub refined_residual: f64,
    /// `sup |u_1 - u_2|` between the solutions from `u_ap` and a perturbed seed.
    pub seed_gap: f64,
    /// `| ||u_fine|| - ||u|| | / ||u||` after halving every cell.
    pub mesh_gap: f64,
    /// `sup |u(x) - u(-x)|` for even pairs.
    pub reflection_gap: Option<f64>,
    pub correction: CorrectionReport,
    pub region_sups: TheoremRegions,
    pub spectrum: SpectrumReport,
    pub apriori: AprioriReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CellReport {
    pub pair: Pair,
    pub metrics: Option<CellMetrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerA {
    #[serde(rename = "A")]
    pub a: f64,
    pub cells: Vec<CellReport>,
    /// `sup |u_PM(x) - u_MP(-x)|` when both mixed pairs converged.
    pub mixed_mirror_gap: Option<f64>,
    /// Smallest pairwise `sup |u_i - u_j|` over `A^{2/5}` among converged pairs.
    pub min_pair_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub schema_version: String,
    pub seed: u64,
    #[serde(rename = "A_values")]
    pub a_values: Vec<f64>,
    pub pairs: Vec<Pair>,
    pub config: Config,
    pub profiles: Vec<ProfileMeta>,
    pub halfline: Vec<SpectrumReport>,
    pub probes: Vec<Probe>,
    #[serde(rename = "per_A")]
    pub per_a: Vec<PerA>,
    pub fits: BTreeMap<String, Fit>,
    pub fit_errors: BTreeMap<String, String>,
    pub scaling: BTreeMap<String, ScalingCheck>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SweepReport {
    pub fn cell(&self, a_index: usize, pair: Pair) -> Option<&CellMetrics> {
        self.per_a.get(a_index)?.cells.iter().find(|c| c.pair == pair)?.metrics.as_ref()
    }

    /// Metrics of `pair` at every A, `None` if any cell failed.
    pub fn series(&self, pair: Pair) -> Option<Vec<(f64, &CellMetrics)>> {
        self.per_a.iter().enumerate().map(|(i, p)| Some((p.a, self.cell(i, pair)?))).collect()
    }

    pub fn failed_cells(&self) -> usize {
        self.per_a.iter().flat_map(|p| &p.cells).filter(|c| c.metrics.is_none()).count()
    }
}

/// Seed for the perturbed Newton start of one cell.
pub fn cell_seed(seed: u64, a_index: usize, pair: Pair) -> u64 {
    let pair_index = Pair::ALL.iter().position(|&p| p == pair).unwrap_or(0) as u64;
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(16 * a_index as u64 + pair_index)
}

/// Runs every stage for one cell and keeps the solution for cross-pair checks.
pub fn run_cell(
    cfg: &Config,
    profiles: &Profiles,
    a: f64,
    pair: Pair,
    seed: u64,
    probes: &[Probe],
) -> layersolve::Result<(CellMetrics, BvpSolution)> {
    let comp_cfg = cfg.composite_config(a);
    let (y, z) = (profiles.get(pair.0), profiles.get(pair.1));
    let mesh = Mesh::graded(comp_cfg.k(), &cfg.mesh)?;
    let comp = assemble(&comp_cfg, y, z, &mesh)?;
    let residual = residual_region_report(&comp, y, z)?;
    let sol = newton_solve(&comp, cfg.bvp.tol * a, cfg.bvp.max_iters)?;
    let fine = assemble(&comp_cfg, y, z, &mesh.refined())?;
    let metrics = CellMetrics {
        residual,
        newton_iters: sol.newton_iters,
        final_residual: sol.final_residual,
        tol: sol.tol,
        quadratic_tail: sol.quadratic_tail(),
        quadratic_ratios: sol.quadratic_ratios(),
        roundoff_floor: sol.roundoff_floor(),
        refined_residual: refined_residual(&sol),
        seed_gap: seed_independence(&sol, seed)?,
        mesh_gap: mesh_independence(&fine, &sol)?,
        reflection_gap: pair.is_even().then(|| reflection_gap(&sol.u)),
        correction: correction_region_report(&sol, comp_cfg.big_d),
        region_sups: theorem_region_report(&sol, y, z, comp_cfg.delta, comp_cfg.big_d)?,
        spectrum: interval_spectrum(&sol, cfg.spectrum.k)?,
        apriori: apriori_ratio(&sol, probes)?,
    };
    Ok((metrics, sol))
}

fn thread_pool(threads: Option<usize>) -> CliResult<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| CliError::Config(format!("cannot build thread pool: {e}")))
}

/// Solves the profiles and runs the sweep on a pool of at most `threads` workers.
pub fn run_sweep(cfg: &Config, threads: Option<usize>) -> CliResult<SweepReport> {
    cfg.validate()?;
    let pool = thread_pool(threads)?;
    pool.install(|| {
        let profiles = Profiles::solve(cfg.composite.s_max)?;
        run_sweep_with(cfg, &profiles)
    })
}

/// Runs the sweep with precomputed profiles on the current rayon pool.
pub fn run_sweep_with(cfg: &Config, profiles: &Profiles) -> CliResult<SweepReport> {
    cfg.validate()?;
    let seed = cfg.sweep.seed;
    let probes = default_probes(seed);
    let halfline = [Branch::Plus, Branch::Minus]
        .par_iter()
        .map(|&b| halfline_spectrum(profiles.get(b), cfg.spectrum.k, cfg.composite.s_max))
        .collect::<layersolve::Result<Vec<_>>>()?;
    let tasks: Vec<(usize, f64, Pair)> =
        cfg.sweep.a_list.iter().enumerate().flat_map(|(i, &a)| cfg.sweep.branches.iter().map(move |&p| (i, a, p))).collect();
    let outcomes: Vec<layersolve::Result<(CellMetrics, BvpSolution)>> =
        tasks.par_iter().map(|&(i, a, p)| run_cell(cfg, profiles, a, p, cell_seed(seed, i, p), &probes)).collect();

    let mut per_a: Vec<PerA> =
        cfg.sweep.a_list.iter().map(|&a| PerA { a, cells: Vec::new(), mixed_mirror_gap: None, min_pair_distance: None }).collect();
    let mut solutions: Vec<Vec<(Pair, BvpSolution)>> = vec![Vec::new(); per_a.len()];
    for (&(i, _, pair), out) in tasks.iter().zip(outcomes) {
        match out {
            Ok((m, s)) => {
                per_a[i].cells.push(CellReport { pair, metrics: Some(m), error: None });
                solutions[i].push((pair, s));
            }
            Err(e) => per_a[i].cells.push(CellReport { pair, metrics: None, error: Some(e.to_string()) }),
        }
    }
    for (entry, sols) in per_a.iter_mut().zip(&solutions) {
        let find = |p: Pair| sols.iter().find(|s| s.0 == p).map(|s| &s.1);
        let pm = Pair(Branch::Plus, Branch::Minus);
        if let (Some(a), Some(b)) = (find(pm), find(pm.mirrored())) {
            entry.mixed_mirror_gap = Some(mirror_distance(&a.u, &b.u));
        }
        let a25 = entry.a.powf(0.4);
        let mut dist: Option<f64> = None;
        for i in 0..sols.len() {
            for j in i + 1..sols.len() {
                let d: Vec<f64> = sols[i].1.u.iter().zip(&sols[j].1.u).map(|(p, q)| p - q).collect();
                let v = sup_abs(&d) / a25;
                dist = Some(dist.map_or(v, |m| m.min(v)));
            }
        }
        entry.min_pair_distance = dist;
    }

    let mut report = SweepReport {
        schema_version: SCHEMA_VERSION.into(),
        seed,
        a_values: cfg.sweep.a_list.clone(),
        pairs: cfg.sweep.branches.clone(),
        config: cfg.clone(),
        profiles: vec![ProfileMeta::from(&profiles.plus), ProfileMeta::from(&profiles.minus)],
        halfline,
        probes,
        per_a,
        fits: BTreeMap::new(),
        fit_errors: BTreeMap::new(),
        scaling: BTreeMap::new(),
        checks: Vec::new(),
        pass: false,
    };
    fit_all(&mut report);
    report.checks = evaluate_checks(&report, cfg);
    report.pass = report.checks.iter().all(|c| c.status == Status::Pass);
    Ok(report)
}

/// Name of a fitted metric for one pair.
pub fn fit_name(metric: &str, pair: Pair) -> String {
    format!("{metric}/{pair}")
}

/// Value of `probe` in an a-priori report, as `||phi|| / ||f||`.
pub fn probe_phi_sup(ap: &AprioriReport, probe: &str) -> Option<f64> {
    ap.per_probe.iter().find(|p| p.probe == probe).map(|p| p.phi_sup)
}

type Extractor = fn(&CellMetrics) -> Option<f64>;

/// The per-pair metrics that get power-law fits.
pub const FIT_METRICS: [(&str, Extractor); 4] = [
    ("E_sup", |m| Some(m.residual.e_sup)),
    ("phi_sup", |m| Some(m.correction.phi_sup)),
    ("lambda1", |m| m.spectrum.eigenvalues.first().map(|l| l.abs())),
    ("apriori_constant", |m| probe_phi_sup(&m.apriori, "constant")),
];

fn fit_all(report: &mut SweepReport) {
    let mut fits = Vec::new();
    let mut scaling = Vec::new();
    for &pair in &report.pairs {
        let series = report.series(pair);
        let failed = || "a cell of this pair failed".to_string();
        for (name, get) in FIT_METRICS {
            let points: Option<Vec<(f64, f64)>> = series.as_ref().and_then(|s| s.iter().map(|(a, m)| get(m).map(|v| (*a, v))).collect());
            let fit = points.ok_or_else(failed).and_then(|p| fit_exponent(&p).map_err(|e| e.to_string()));
            fits.push((fit_name(name, pair), fit));
        }
        if pair.is_even() {
            let spectra: Option<Vec<SpectrumReport>> = series.as_ref().map(|s| s.iter().map(|(_, m)| m.spectrum.clone()).collect());
            let mu = paired_halfline_index(pair.tuple(), 1).and_then(|(b, j)| {
                let op = report.halfline.get(if b == Branch::Plus { 0 } else { 1 })?;
                op.eigenvalues.get(j - 1).copied()
            });
            let check = spectra.ok_or_else(failed).and_then(|s| eigen_scaling_check(&s, 1, mu).map_err(|e| e.to_string()));
            scaling.push((fit_name("lambda1_scaling", pair), check));
        }
    }
    for (key, fit) in fits {
        match fit {
            Ok(f) => report.fits.insert(key, f).map(|_| ()),
            Err(e) => report.fit_errors.insert(key, e).map(|_| ()),
        };
    }
    for (key, check) in scaling {
        match check {
            Ok(c) => report.scaling.insert(key, c).map(|_| ()),
            Err(e) => report.fit_errors.insert(key, e).map(|_| ()),
        };
    }
}

/// `max / min` of positive values; infinite if any is not positive.
pub fn spread(values: &[f64]) -> f64 {
    if values.iter().any(|&v| !(v > 0.0)) {
        return f64::INFINITY;
    }
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    max / min
}

/// Morse index the linearization at the solution of `pair` should have.
pub fn expected_morse(pair: Pair) -> usize {
    [pair.0, pair.1].iter().filter(|&&b| b == Branch::Minus).count()
}

fn check(name: String, ok: Option<bool>, detail: String) -> Check {
    let status = match ok {
        Some(true) => Status::Pass,
        Some(false) => Status::Fail,
        None => Status::Skipped,
    };
    Check { name, status, detail }
}

/// Compares the sweep against the configured thresholds.
pub fn evaluate_checks(report: &SweepReport, cfg: &Config) -> Vec<Check> {
    let t = &cfg.thresholds;
    let mut out = Vec::new();
    for &pair in &report.pairs {
        let series = report.series(pair);
        let fit = |m: &str| report.fits.get(&fit_name(m, pair));
        let col = |f: &dyn Fn(&CellMetrics) -> f64| series.as_ref().map(|s| s.iter().map(|(_, m)| f(m)).collect::<Vec<f64>>());

        let ok = fit("E_sup").map(|f| (f.slope - t.residual_exponent).abs() <= t.residual_exponent_tol && f.r_squared >= t.r_squared_min);
        let detail = fit("E_sup").map_or("no fit".into(), |f| format!("slope {:.4}, r^2 {:.5}", f.slope, f.r_squared));
        out.push(check(fit_name("residual_exponent", pair), ok, detail));

        let sp = col(&|m| m.residual.boundary_norm_sup).zip(col(&|m| m.residual.middle_norm_sup)).map(|(b, mid)| (spread(&b), spread(&mid)));
        out.push(check(
            fit_name("residual_regions_bounded", pair),
            sp.map(|(b, m)| b <= t.bounded_ratio_max && m <= t.bounded_ratio_max),
            sp.map_or("cell failed".into(), |(b, m)| format!("boundary spread {b:.3}, middle spread {m:.3}")),
        ));

        let newton =
            series.as_ref().map(|s| s.iter().all(|(_, m)| m.final_residual <= m.tol && m.quadratic_tail && m.seed_gap <= t.seed_factor * m.tol));
        let worst_seed = col(&|m| m.seed_gap / m.tol).map(|v| v.into_iter().fold(0.0, f64::max));
        out.push(check(fit_name("newton", pair), newton, worst_seed.map_or("cell failed".into(), |w| format!("worst seed gap / tol {w:.3e}"))));

        let ok = fit("phi_sup").map(|f| f.slope <= t.correction_exponent_max);
        let detail = fit("phi_sup").map_or("no fit".into(), |f| format!("slope {:.4}", f.slope));
        out.push(check(fit_name("correction_exponent", pair), ok, detail));

        let sp = col(&|m| m.correction.boundary_sup).zip(col(&|m| m.correction.middle_sup)).map(|(b, m)| (spread(&b), spread(&m)));
        out.push(check(
            fit_name("correction_regions_bounded", pair),
            sp.map(|(b, m)| b <= t.bounded_ratio_max && m <= t.bounded_ratio_max),
            sp.map_or("cell failed".into(), |(b, m)| format!("boundary spread {b:.3}, middle spread {m:.3}")),
        ));

        let regions: Option<Vec<f64>> = series.as_ref().map(|_| {
            let get: [fn(&TheoremRegions) -> f64; 5] = [|r| r.r1, |r| r.r2, |r| r.r3, |r| r.r4, |r| r.mid];
            get.iter().map(|g| spread(&col(&|m| g(&m.region_sups)).unwrap_or_default())).collect()
        });
        out.push(check(
            fit_name("theorem_regions_bounded", pair),
            regions.as_ref().map(|r| r.iter().all(|&v| v <= t.bounded_ratio_max)),
            regions.map_or("cell failed".into(), |r| format!("spreads r1..mid {r:.3?}")),
        ));

        let morse: Option<Vec<usize>> = series.as_ref().map(|s| s.iter().map(|(_, m)| m.spectrum.morse_index).collect());
        out.push(check(
            fit_name("morse_index", pair),
            morse.as_ref().map(|v| v.iter().all(|&i| i == expected_morse(pair))),
            morse.map_or("cell failed".into(), |v| format!("expected {}, got {v:?}", expected_morse(pair))),
        ));

        let ap = col(&|m| m.apriori.max_ratio).map(|v| spread(&v));
        let ok =
            ap.zip(fit("apriori_constant")).map(|(s, f)| s <= t.apriori_ratio_max && (f.slope - t.apriori_exponent).abs() <= t.apriori_exponent_tol);
        let detail = match (ap, fit("apriori_constant")) {
            (Some(s), Some(f)) => format!("max_ratio spread {s:.3}, f=1 slope {:.4}", f.slope),
            _ => "no fit".into(),
        };
        out.push(check(fit_name("apriori", pair), ok, detail));

        if pair == Pair(Branch::Minus, Branch::Minus) {
            let sc = report.scaling.get(&fit_name("lambda1_scaling", pair));
            let ok = sc.map(|c| {
                (c.fitted_exponent - t.eigen_exponent).abs() <= t.eigen_exponent_tol
                    && c.constant_rel_error.is_some_and(|e| e <= t.eigen_constant_rel)
                    && c.gap_ratio_decreasing
            });
            let detail = sc.map_or("no fit".into(), |c| {
                format!(
                    "exponent {:.4}, constant error {:?}, gap ratio decreasing {}",
                    c.fitted_exponent, c.constant_rel_error, c.gap_ratio_decreasing
                )
            });
            out.push(check(fit_name("eigen_scaling", pair), ok, detail));
        }
    }
    out
}
