//! End-to-end checks: profiles, composite approximation, Newton correction,
//! spectra and the energy analysis of the difference profile.

use std::sync::OnceLock;

use approx::assert_abs_diff_eq;
use layersolve::bvp::{correction_region_report, discrete_residual, mirror_distance, newton_solve, reflection_gap};
use layersolve::composite::{assemble, residual_region_report, Mesh, MeshSpec};
use layersolve::painleve::{difference_profile, refine_collocation, shoot, DEFAULT_S_MAX};
use layersolve::spectrum::{eigen_scaling_check, halfline_spectrum, interval_spectrum};
use layersolve::theory::theory_report;
use layersolve::{Branch, BvpSolution, CompositeConfig, Error, PainleveSolution};

const S_MAX: f64 = DEFAULT_S_MAX;

fn profile(b: Branch) -> &'static PainleveSolution {
    static P: OnceLock<(PainleveSolution, PainleveSolution)> = OnceLock::new();
    let (plus, minus) = P.get_or_init(|| {
        let solve = |b: Branch| refine_collocation(&shoot(b, S_MAX, b.default_bracket(), 1e-12).unwrap(), S_MAX, 2).unwrap();
        (solve(Branch::Plus), solve(Branch::Minus))
    });
    match b {
        Branch::Plus => plus,
        Branch::Minus => minus,
    }
}

fn solve(a: f64, left: Branch, right: Branch) -> BvpSolution {
    let cfg = CompositeConfig::new(a);
    let comp = assemble(&cfg, profile(left), profile(right), &Mesh::graded(cfg.k(), &MeshSpec::default()).unwrap()).unwrap();
    newton_solve(&comp, 1e-8 * a, 50).unwrap()
}

#[test]
fn connecting_slopes() {
    assert_abs_diff_eq!(profile(Branch::Plus).slope_at_origin(), 0.8047156, epsilon = 1e-6);
    assert_abs_diff_eq!(profile(Branch::Minus).slope_at_origin(), -3.3011196, epsilon = 1e-6);
    for b in [Branch::Plus, Branch::Minus] {
        let p = profile(b);
        assert_eq!(p.y()[0], 0.0);
        assert!(p.residual_sup() < 1e-8);
        assert_abs_diff_eq!(p.tail_coefficient(), -0.25, epsilon = 1e-3);
    }
    let (s, y) = profile(Branch::Minus).minimum().unwrap();
    assert!((1.3..1.5).contains(&s) && y < -3.0);
    assert!(profile(Branch::Plus).minimum().is_none());
}

#[test]
fn composite_matches_outer_and_walls() {
    let cfg = CompositeConfig::new(1e5);
    let (y, z) = (profile(Branch::Plus), profile(Branch::Plus));
    let comp = assemble(&cfg, y, z, &Mesh::graded(cfg.k(), &MeshSpec::default()).unwrap()).unwrap();
    let x = comp.mesh.nodes();
    let n = x.len();
    assert!(comp.u[0].abs() < 1e-9 && comp.u[n - 1].abs() < 1e-9);
    assert!(reflection_gap(&comp.u) < 1e-9 * comp.u[n / 2]);
    // E is the defect of the values reported alongside it
    for i in (0..n).step_by(97) {
        let e = 2.0 * comp.upp[i] - comp.u[i] * comp.u[i] + cfg.a * (1.0 - x[i] * x[i]);
        assert_abs_diff_eq!(comp.e[i], e, epsilon = 1e-9 * cfg.a);
    }
    let mid = n / 2;
    assert!((comp.u[mid] / cfg.a.sqrt() - 1.0).abs() < 1e-2);
    let rep = residual_region_report(&comp, y, z).unwrap();
    assert!(rep.lower_bound_c > 0.0 && rep.e_sup > 0.0);
}

#[test]
fn infeasible_configuration_is_rejected() {
    let mut cfg = CompositeConfig::new(1e3);
    cfg.delta = 0.1;
    cfg.big_d = 10.0;
    assert!(matches!(cfg.validate(), Err(Error::ConfigInfeasible(_))));
    let mesh = Mesh::uniform(64).unwrap();
    assert!(assemble(&cfg, profile(Branch::Plus), profile(Branch::Plus), &mesh).is_err());
}

#[test]
fn newton_corrects_every_pair() {
    let a = 1e4;
    let sols: Vec<BvpSolution> =
        [(Branch::Plus, Branch::Plus), (Branch::Plus, Branch::Minus), (Branch::Minus, Branch::Plus), (Branch::Minus, Branch::Minus)]
            .iter()
            .map(|&(l, r)| solve(a, l, r))
            .collect();
    for s in &sols {
        assert!(s.final_residual <= s.tol && s.quadratic_tail());
        let x = s.mesh.nodes();
        let r = discrete_residual(a, x, &s.u);
        assert!(r.iter().fold(0.0f64, |m, v| m.max(v.abs())) <= s.tol);
        let c = correction_region_report(s, 1.5);
        // the correction grows no faster than A^{1/5}
        assert!(c.phi_sup < 5.0 * a.powf(0.2), "phi_sup {}", c.phi_sup);
    }
    assert!(reflection_gap(&sols[0].u) < 1e-6);
    assert!(reflection_gap(&sols[3].u) < 1e-6);
    assert!(mirror_distance(&sols[1].u, &sols[2].u) < 1e-6);
    assert!(mirror_distance(&sols[0].u, &sols[3].u) > 1.0);
}

#[test]
fn spectra_and_morse_indices() {
    let plus = halfline_spectrum(profile(Branch::Plus), 4, S_MAX).unwrap();
    let minus = halfline_spectrum(profile(Branch::Minus), 4, S_MAX).unwrap();
    assert_abs_diff_eq!(plus.eigenvalues[0], 1.7036635, epsilon = 1e-5);
    assert_abs_diff_eq!(minus.eigenvalues[0], -1.8395687, epsilon = 1e-5);
    assert_eq!((plus.morse_index, minus.morse_index), (0, 1));

    let expected = [((Branch::Plus, Branch::Plus), 0), ((Branch::Plus, Branch::Minus), 1), ((Branch::Minus, Branch::Minus), 2)];
    for ((l, r), m) in expected {
        let rep = interval_spectrum(&solve(1e4, l, r), 4).unwrap();
        assert_eq!(rep.morse_index, m, "{l:?}{r:?}");
        assert!(rep.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }
    let few = vec![interval_spectrum(&solve(1e4, Branch::Plus, Branch::Plus), 2).unwrap(); 3];
    assert!(matches!(eigen_scaling_check(&few, 1, None), Err(Error::NoFitPossible(3))));
}

#[test]
fn difference_profile_analysis() {
    let (p, m) = (profile(Branch::Plus), profile(Branch::Minus));
    let phi = difference_profile(p, m).unwrap();
    assert!(phi.phi()[1..].iter().take_while(|v| **v > 1e-12).count() > 100);
    let r = theory_report(p, &phi).unwrap();
    assert!(r.e_positive && r.de_negative);
    assert_abs_diff_eq!(r.delta_max, 0.3179459787, epsilon = 1e-6);
    assert_eq!(r.eta_solution_count, 1);
    assert_abs_diff_eq!(r.transition_slope.unwrap(), r.phi_slope, epsilon = 1e-6);
    assert!(r.dissipation_gap < 1e-5);
    assert!(r.i > 0.0);
}
