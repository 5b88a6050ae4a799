//! One function per subcommand. Each writes its artifacts and says whether
//! the checks it owns passed.

use std::path::{Path, PathBuf};

use layersolve::bvp::{correction_region_report, newton_solve, theorem_region_report};
use layersolve::composite::{assemble, residual_region_report, Mesh};
use layersolve::painleve::{difference_profile, ProfileMeta};
use layersolve::spectrum::{eta_linearization_spectrum, halfline_spectrum, interval_spectrum};
use layersolve::theory::theory_report;
use layersolve::SpectrumReport;
use rayon::prelude::*;

use crate::config::{Config, Pair};
use crate::error::CliResult;
use crate::report::{a_label, branch_label, ensure_dir, write_composite, write_json, write_profile, write_solution, write_sweep, BvpReport};
use crate::sweep::{expected_morse, run_sweep_with, Profiles};

/// Largest Painleve residual accepted.
pub const PROFILE_RESIDUAL_MAX: f64 = 1e-8;
/// Largest deviation of the fitted tail coefficient from `-1/4`.
pub const TAIL_COEFFICIENT_TOL: f64 = 1e-3;

/// What a subcommand produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
}

impl Outcome {
    fn new() -> Self {
        Self { pass: true, files: Vec::new(), lines: Vec::new() }
    }

    fn record(&mut self, ok: bool, line: String) {
        self.pass &= ok;
        self.lines.push(format!("[{}] {line}", if ok { "ok" } else { "FAIL" }));
    }
}

/// Flag overrides applied on top of the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub a_list: Option<Vec<f64>>,
    pub branches: Option<Vec<Pair>>,
    pub delta: Option<f64>,
    pub big_d: Option<f64>,
    pub s_max: Option<f64>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut Config) {
        if let Some(v) = &self.a_list {
            cfg.sweep.a_list = v.clone();
        }
        if let Some(v) = &self.branches {
            cfg.sweep.branches = v.clone();
        }
        if let Some(v) = self.delta {
            cfg.composite.delta = v;
        }
        if let Some(v) = self.big_d {
            cfg.composite.big_d = v;
        }
        if let Some(v) = self.s_max {
            cfg.composite.s_max = v;
        }
        if let Some(v) = self.tol {
            cfg.bvp.tol = v;
        }
        if let Some(v) = self.seed {
            cfg.sweep.seed = v;
        }
    }
}

pub fn painleve(cfg: &Config, out: &Path, plots: bool) -> CliResult<Outcome> {
    ensure_dir(out)?;
    let profiles = Profiles::solve(cfg.composite.s_max)?;
    let mut o = Outcome::new();
    for p in [&profiles.plus, &profiles.minus] {
        let meta = ProfileMeta::from(p);
        let ok = meta.residual_sup <= PROFILE_RESIDUAL_MAX && (meta.tail_coefficient + 0.25).abs() <= TAIL_COEFFICIENT_TOL;
        o.record(
            ok,
            format!(
                "{:?}: slope {:.10}, tail coefficient {:.6}, residual {:.2e}",
                meta.branch, meta.slope_at_origin, meta.tail_coefficient, meta.residual_sup
            ),
        );
        o.files.push(write_profile(out, p, plots)?);
        let json = out.join(format!("painleve_{}.json", branch_label(p.branch())));
        write_json(&json, &meta)?;
        o.files.push(json);
    }
    Ok(o)
}

fn cells(cfg: &Config) -> Vec<(f64, Pair)> {
    cfg.sweep.a_list.iter().flat_map(|&a| cfg.sweep.branches.iter().map(move |&p| (a, p))).collect()
}

pub fn composite(cfg: &Config, out: &Path, plots: bool) -> CliResult<Outcome> {
    cfg.validate()?;
    ensure_dir(out)?;
    let profiles = Profiles::solve(cfg.composite.s_max)?;
    let mut o = Outcome::new();
    for (a, pair) in cells(cfg) {
        let c = cfg.composite_config(a);
        let (y, z) = (profiles.get(pair.0), profiles.get(pair.1));
        let sol = assemble(&c, y, z, &Mesh::graded(c.k(), &cfg.mesh)?)?;
        let rep = residual_region_report(&sol, y, z)?;
        o.record(
            rep.lower_bound_c > 0.0,
            format!(
                "A={a:e} {pair}: |E|={:.4e}, boundary {:.4}, middle {:.4}, c={:.4}",
                rep.e_sup, rep.boundary_norm_sup, rep.middle_norm_sup, rep.lower_bound_c
            ),
        );
        o.files.push(write_composite(out, &sol, plots)?);
        let json = out.join(format!("composite_{}_{pair}.json", a_label(a)));
        write_json(&json, &rep)?;
        o.files.push(json);
    }
    Ok(o)
}

pub fn solve(cfg: &Config, out: &Path, plots: bool) -> CliResult<Outcome> {
    cfg.validate()?;
    ensure_dir(out)?;
    let profiles = Profiles::solve(cfg.composite.s_max)?;
    let results = cells(cfg)
        .into_par_iter()
        .map(|(a, pair)| {
            let c = cfg.composite_config(a);
            let (y, z) = (profiles.get(pair.0), profiles.get(pair.1));
            let comp = assemble(&c, y, z, &Mesh::graded(c.k(), &cfg.mesh)?)?;
            let sol = newton_solve(&comp, cfg.bvp.tol * a, cfg.bvp.max_iters)?;
            let rep = BvpReport {
                a,
                branches: pair,
                newton_iters: sol.newton_iters,
                final_residual: sol.final_residual,
                tol: sol.tol,
                quadratic_tail: sol.quadratic_tail(),
                region_sups: theorem_region_report(&sol, y, z, c.delta, c.big_d)?,
                correction: correction_region_report(&sol, c.big_d),
            };
            Ok((sol, rep))
        })
        .collect::<layersolve::Result<Vec<_>>>()?;
    let mut o = Outcome::new();
    for (sol, rep) in results {
        o.record(
            rep.final_residual <= rep.tol && rep.quadratic_tail,
            format!(
                "A={:e} {}: {} iterations, residual {:.3e} (tol {:.1e}), |phi|={:.4}",
                rep.a, rep.branches, rep.newton_iters, rep.final_residual, rep.tol, rep.correction.phi_sup
            ),
        );
        o.files.push(write_solution(out, &sol, plots)?);
        let json = out.join(format!("solve_{}_{}.json", a_label(rep.a), rep.branches));
        write_json(&json, &rep)?;
        o.files.push(json);
    }
    Ok(o)
}

/// Which operator the `spectrum` subcommand analyses: a half-line operator,
/// the linearization of the difference equation, or the interval operator at
/// each solved `(A, pair)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SpectrumTarget {
    Plus,
    Minus,
    Eta,
    Interval,
}

fn spectrum_line(r: &SpectrumReport) -> String {
    let head: Vec<String> = r.eigenvalues.iter().map(|l| format!("{l:.7}")).collect();
    format!("{:?}: eigenvalues [{}], morse index {}", r.operator, head.join(", "), r.morse_index)
}

pub fn spectrum(cfg: &Config, out: &Path, target: SpectrumTarget) -> CliResult<Outcome> {
    cfg.validate()?;
    ensure_dir(out)?;
    let profiles = Profiles::solve(cfg.composite.s_max)?;
    let k = cfg.spectrum.k;
    let s_max = cfg.composite.s_max;
    let mut o = Outcome::new();
    let emit = |o: &mut Outcome, r: &SpectrumReport, ok: bool, name: String| -> CliResult<()> {
        o.record(ok, spectrum_line(r));
        let path = out.join(name);
        write_json(&path, r)?;
        o.files.push(path);
        Ok(())
    };
    match target {
        SpectrumTarget::Plus => {
            let r = halfline_spectrum(&profiles.plus, k, s_max)?;
            emit(&mut o, &r, r.eigenvalues[0] > 0.0, "spectrum_plus.json".into())?;
        }
        SpectrumTarget::Minus => {
            let r = halfline_spectrum(&profiles.minus, k, s_max)?;
            emit(&mut o, &r, r.eigenvalues[0] < 0.0 && r.eigenvalues[1] > 0.0, "spectrum_minus.json".into())?;
        }
        SpectrumTarget::Eta => {
            let phi = difference_profile(&profiles.plus, &profiles.minus)?;
            let r = eta_linearization_spectrum(&profiles.plus, &phi, k, s_max)?;
            emit(&mut o, &r, r.morse_index == 1, "spectrum_eta.json".into())?;
        }
        SpectrumTarget::Interval => {
            let reps = cells(cfg)
                .into_par_iter()
                .map(|(a, pair)| {
                    let c = cfg.composite_config(a);
                    let comp = assemble(&c, profiles.get(pair.0), profiles.get(pair.1), &Mesh::graded(c.k(), &cfg.mesh)?)?;
                    let sol = newton_solve(&comp, cfg.bvp.tol * a, cfg.bvp.max_iters)?;
                    Ok((a, pair, interval_spectrum(&sol, k)?))
                })
                .collect::<layersolve::Result<Vec<_>>>()?;
            for (a, pair, r) in reps {
                emit(&mut o, &r, r.morse_index == expected_morse(pair), format!("spectrum_interval_{}_{pair}.json", a_label(a)))?;
            }
        }
    }
    Ok(o)
}

pub fn theory(cfg: &Config, out: &Path) -> CliResult<Outcome> {
    ensure_dir(out)?;
    let profiles = Profiles::solve(cfg.composite.s_max)?;
    let phi = difference_profile(&profiles.plus, &profiles.minus)?;
    let r = theory_report(&profiles.plus, &phi)?;
    let mut o = Outcome::new();
    o.record(r.e_positive && r.de_negative, format!("energy positive {}, dissipative {}", r.e_positive, r.de_negative));
    o.record(r.delta_max > 0.0, format!("delta_max {:.6}", r.delta_max));
    o.record(
        r.eta_solution_count == 1,
        format!("decaying solutions found {}, transition slope {:?}, phi'(0) {:.11}", r.eta_solution_count, r.transition_slope, r.phi_slope),
    );
    o.lines.push(format!("I = {:.8}, J_delta = {:.8}", r.i, r.j_delta));
    let path = out.join("theory.json");
    write_json(&path, &r)?;
    o.files.push(path);
    Ok(o)
}

pub fn sweep(cfg: &Config, out: &Path, plots: bool) -> CliResult<Outcome> {
    cfg.validate()?;
    let profiles = Profiles::solve(cfg.composite.s_max)?;
    let report = run_sweep_with(cfg, &profiles)?;
    let mut o = Outcome::new();
    for p in &report.per_a {
        for c in &p.cells {
            if let Some(e) = &c.error {
                o.record(false, format!("A={:e} {}: {e}", p.a, c.pair));
            }
        }
    }
    for c in &report.checks {
        let status = format!("{:?}", c.status).to_lowercase();
        o.lines.push(format!("[{status}] {}: {}", c.name, c.detail));
    }
    o.pass &= report.pass;
    o.files = write_sweep(out, &report, plots)?;
    Ok(o)
}
