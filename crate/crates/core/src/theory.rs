//! Checks on the difference profile `phi = Y+ - Y-`, which solves
//! `2u'' - 2Y+ u + u^2 = 0`, `u(0) = 0`, `u > 0`, `u -> 0`: energy
//! dissipation, the comparison function `F`, the threshold for
//! `2Y+' + delta phi' > 0`, the functionals `I` and `J_delta`, and a shooting
//! scan for uniqueness.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{gradient, simpson};
use crate::ode::{Control, Dopri};
use crate::painleve::{DifferenceProfile, HalfLineGrid, PainleveSolution};
use crate::scalar::Real;

/// Diagnostics stop where the profile drops below this value.
pub const UNDERFLOW_WINDOW: f64 = 1e-12;
/// Integration limit for classifying trajectories of the difference equation.
pub const ETA_CLASSIFY_LIMIT: f64 = 30.0;
/// Largest integrand magnitude at `s_max` accepted as a negligible tail.
pub const TAIL_TOL: f64 = 1e-10;

/// Index of the first node past the maximum where `u < UNDERFLOW_WINDOW`
/// (the grid length when there is none).
pub fn window_end<T: Real>(u: &[T]) -> usize {
    let peak = (0..u.len()).fold(0, |b, i| if u[i] > u[b] { i } else { b });
    (peak..u.len()).find(|&i| u[i] < T::lit(UNDERFLOW_WINDOW)).unwrap_or(u.len())
}

fn energy<T: Real>(u: T, up: T, y: T) -> T {
    up * up - y * u * u + u * u * u / T::lit(3.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyCurve<T> {
    pub grid: HalfLineGrid<T>,
    #[serde(rename = "E")]
    pub e: Vec<T>,
    /// `-Y+' u^2`.
    #[serde(rename = "dE")]
    pub de: Vec<T>,
    /// Finite-difference derivative of `E`.
    pub de_differenced: Vec<T>,
    /// Nodes before this index lie in the diagnostic window.
    pub window_end: usize,
}

impl<T: Real> EnergyCurve<T> {
    /// `E > 0` at every interior node of the window.
    pub fn positive(&self) -> bool {
        (1..self.window_end).all(|i| self.e[i] > T::zero())
    }
    /// `dE < 0` at every interior node of the window.
    pub fn dissipative(&self) -> bool {
        (1..self.window_end).all(|i| self.de[i] < T::zero())
    }
    /// `sup |dE - dE_differenced|` over the window.
    pub fn derivative_gap(&self) -> T {
        (0..self.window_end).fold(T::zero(), |m, i| m.max((self.de[i] - self.de_differenced[i]).abs()))
    }
    /// `sup |E(s_j) - E(s_0) + int_{s_0}^{s_j} Y+' u^2|` over the window.
    pub fn dissipation_identity_gap(&self) -> T {
        let s = self.grid.nodes();
        let mut worst = T::zero();
        for j in 1..self.window_end {
            let exact = simpson(&s[..=j], &self.de[..=j]);
            worst = worst.max((self.e[j] - self.e[0] - exact).abs());
        }
        worst
    }
}

/// Energy `E = u'^2 - Y+ u^2 + u^3/3` and its derivative along a profile.
pub fn energy_curve<T: Real>(u: &DifferenceProfile<T>, yplus: &PainleveSolution<T>) -> Result<EnergyCurve<T>> {
    if u.grid() != yplus.grid() {
        return Err(Error::GridMismatch);
    }
    let s = u.grid().nodes();
    let (y, yp) = (yplus.y(), yplus.yp());
    let e: Vec<T> = (0..s.len()).map(|i| energy(u.phi()[i], u.phip()[i], y[i])).collect();
    let de: Vec<T> = (0..s.len()).map(|i| -yp[i] * u.phi()[i] * u.phi()[i]).collect();
    let de_differenced = gradient(s, &e);
    Ok(EnergyCurve { grid: u.grid().clone(), window_end: window_end(u.phi()), e, de, de_differenced })
}

#[derive(Debug, Clone, Serialize)]
pub struct YotsutaniF<T> {
    pub s: Vec<T>,
    #[serde(rename = "F")]
    pub f: Vec<T>,
    /// `-d/ds[(u2/u1)^2] E(s; u1)`.
    pub f_prime_identity: Vec<T>,
    pub f_prime_differenced: Vec<T>,
}

/// `F = E(u2) - (u2/u1)^2 E(u1)` up to the underflow window of `u1`, with
/// `F(0)` from the slope ratio `u2'(0)/u1'(0)`.
pub fn yotsutani_f<T: Real>(u1: &DifferenceProfile<T>, u2: &DifferenceProfile<T>, yplus: &PainleveSolution<T>) -> Result<YotsutaniF<T>> {
    if u1.grid() != yplus.grid() || u2.grid() != yplus.grid() {
        return Err(Error::GridMismatch);
    }
    let nodes = u1.grid().nodes();
    let end = window_end(u1.phi()).min(window_end(u2.phi()));
    if end < 3 {
        return Err(Error::DivisionUnstable { s: 0.0 });
    }
    let y = yplus.y();
    let (a, ap) = (u1.phi(), u1.phip());
    let (b, bp) = (u2.phi(), u2.phip());
    if ap[0] == T::zero() {
        return Err(Error::DivisionUnstable { s: 0.0 });
    }
    let mut ratio = Vec::with_capacity(end);
    let mut ratio_p = Vec::with_capacity(end);
    for i in 0..end {
        if i == 0 {
            ratio.push(bp[0] / ap[0]);
            // derivative of u2/u1 at 0 by l'Hopital: (u2'' u1' - u2' u1'') / (2 u1'^2)
            let app = u1.phipp()[0];
            let bpp = u2.phipp()[0];
            ratio_p.push((bpp * ap[0] - bp[0] * app) / (T::lit(2.0) * ap[0] * ap[0]));
        } else {
            if !(a[i] > T::zero()) {
                return Err(Error::DivisionUnstable { s: nodes[i].as_f64() });
            }
            ratio.push(b[i] / a[i]);
            ratio_p.push((bp[i] * a[i] - b[i] * ap[i]) / (a[i] * a[i]));
        }
    }
    let e1: Vec<T> = (0..end).map(|i| energy(a[i], ap[i], y[i])).collect();
    let f: Vec<T> = (0..end).map(|i| energy(b[i], bp[i], y[i]) - ratio[i] * ratio[i] * e1[i]).collect();
    let f_prime_identity = (0..end).map(|i| -T::lit(2.0) * ratio[i] * ratio_p[i] * e1[i]).collect();
    let s = nodes[..end].to_vec();
    let f_prime_differenced = gradient(&s, &f);
    Ok(YotsutaniF { s, f, f_prime_identity, f_prime_differenced })
}

#[derive(Debug, Clone, Serialize)]
pub struct DeltaThreshold {
    /// `inf 2Y+'/(-phi')` over nodes with `phi' < 0`; infinite when there are none.
    pub delta_max: f64,
    /// `2Y+' + (delta_max/2) phi' > 0` at every node.
    pub holds_at_half: bool,
}

/// Largest `delta` keeping `2Y+' + delta phi' > 0` on the grid.
pub fn delta_threshold<T: Real>(yplus: &PainleveSolution<T>, phi: &DifferenceProfile<T>) -> Result<DeltaThreshold> {
    if phi.grid() != yplus.grid() {
        return Err(Error::GridMismatch);
    }
    let yp = yplus.yp();
    let dp = phi.phip();
    let two = T::lit(2.0);
    let delta_max = (0..yp.len()).filter(|&i| dp[i] < T::zero()).fold(T::infinity(), |m, i| m.min(two * yp[i] / -dp[i]));
    let half = delta_max * T::lit(0.5);
    let holds_at_half =
        if delta_max.is_finite() { (0..yp.len()).all(|i| two * yp[i] + half * dp[i] > T::zero()) } else { yp.iter().all(|&v| v > T::zero()) };
    Ok(DeltaThreshold { delta_max: delta_max.as_f64(), holds_at_half })
}

#[derive(Debug, Clone, Serialize)]
pub struct Functionals {
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J_delta")]
    pub j_delta: f64,
    pub delta: f64,
    /// Largest integrand magnitude at the truncation point.
    pub tail_bound: f64,
}

/// `I(u) = int (u'^2 + Y+ u^2 - u_+^3/3)` and
/// `J_delta(u) = I(u) - delta int (u_+^3/3 - phi u^2/2)` on `[0, s_max]`.
pub fn functional_values<T: Real>(
    u: &DifferenceProfile<T>,
    yplus: &PainleveSolution<T>,
    phi: &DifferenceProfile<T>,
    delta: T,
) -> Result<Functionals> {
    if u.grid() != yplus.grid() || phi.grid() != yplus.grid() {
        return Err(Error::GridMismatch);
    }
    let s = u.grid().nodes();
    let y = yplus.y();
    let three = T::lit(3.0);
    let cube = |v: T| {
        let p = v.max(T::zero());
        p * p * p
    };
    let fi: Vec<T> = (0..s.len()).map(|j| u.phip()[j] * u.phip()[j] + y[j] * u.phi()[j] * u.phi()[j] - cube(u.phi()[j]) / three).collect();
    let fj: Vec<T> = (0..s.len()).map(|j| cube(u.phi()[j]) / three - phi.phi()[j] * u.phi()[j] * u.phi()[j] * T::lit(0.5)).collect();
    let n = s.len() - 1;
    let tail = fi[n].abs().max(fj[n].abs());
    if tail > T::lit(TAIL_TOL) {
        return Err(Error::TailNotNegligible { integrand: tail.as_f64() });
    }
    let i = simpson(s, &fi);
    let j = i - delta * simpson(s, &fj);
    Ok(Functionals { i: i.as_f64(), j_delta: j.as_f64(), delta: delta.as_f64(), tail_bound: tail.as_f64() })
}

/// `int_0^{s_max} u^3`, which equals `6 I(phi)` for the solution.
pub fn cubic_moment<T: Real>(u: &DifferenceProfile<T>) -> T {
    let c: Vec<T> = u.phi().iter().map(|&v| v * v * v).collect();
    simpson(u.grid().nodes(), &c)
}

/// Fate of a trajectory of `u'' = Y+ u - u^2/2` from `u(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EtaFate {
    /// Becomes negative.
    Crossing,
    /// Reaches a positive local minimum and stays trapped above zero.
    Rebound,
}

fn eta_rhs<'a, T: Real>(yplus: &'a PainleveSolution<T>) -> impl Fn(T, &[T; 2]) -> [T; 2] + 'a {
    move |s, y| [y[1], yplus.potential(s) * y[0] - T::lit(0.5) * y[0] * y[0]]
}

/// Classifies the trajectory leaving the origin with slope `sigma`.
pub fn classify_eta<T: Real>(yplus: &PainleveSolution<T>, sigma: T) -> Result<EtaFate> {
    let limit = T::lit(ETA_CLASSIFY_LIMIT).min(yplus.s_max());
    let mut fate = None;
    let mut prev = sigma;
    let run = Dopri::new(T::lit(1e-12), T::lit(1e-14)).run(eta_rhs(yplus), T::zero(), [T::zero(), sigma], limit, |_, y| {
        if y[0] < T::zero() {
            fate = Some(EtaFate::Crossing);
            return Control::Stop;
        }
        if prev < T::zero() && y[1] >= T::zero() {
            fate = Some(EtaFate::Rebound);
            return Control::Stop;
        }
        prev = y[1];
        Control::Continue
    });
    match (run, fate) {
        (_, Some(f)) => Ok(f),
        (Err(b), None) => Err(Error::BlowupBeforeClassification { slope: sigma.as_f64(), s: b.s.as_f64() }),
        (Ok(_), None) => Err(Error::ClassificationAmbiguous { slope: sigma.as_f64(), s_end: limit.as_f64() }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaScan {
    pub samples: usize,
    pub range: (f64, f64),
    /// Number of fate changes, each a decaying positive solution.
    pub count: usize,
    /// Transition slopes refined by bisection.
    pub transition_slopes: Vec<f64>,
}

/// Classifies `n` equally spaced slopes on `range` and refines every fate change.
pub fn eta_slope_scan<T: Real>(yplus: &PainleveSolution<T>, range: (T, T), n: usize) -> Result<EtaScan> {
    if n < 2 {
        return Err(Error::InvalidInput("scan needs at least two samples".into()));
    }
    let step = (range.1 - range.0) / T::from_count(n - 1);
    let slopes: Vec<T> = (0..n).map(|i| range.0 + step * T::from_count(i)).collect();
    let fates = slopes.par_iter().map(|&s| classify_eta(yplus, s)).collect::<Result<Vec<_>>>()?;
    let mut transition_slopes = Vec::new();
    for i in 1..n {
        if fates[i] != fates[i - 1] {
            transition_slopes.push(refine_eta_transition(yplus, (slopes[i - 1], slopes[i]), fates[i - 1])?.as_f64());
        }
    }
    Ok(EtaScan { samples: n, range: (range.0.as_f64(), range.1.as_f64()), count: transition_slopes.len(), transition_slopes })
}

fn refine_eta_transition<T: Real>(yplus: &PainleveSolution<T>, bracket: (T, T), fate_lo: EtaFate) -> Result<T> {
    let (mut lo, mut hi) = bracket;
    let tol = T::lit(1e-11);
    while hi - lo > tol {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        match classify_eta(yplus, mid) {
            Ok(f) if f == fate_lo => lo = mid,
            Ok(_) => hi = mid,
            Err(Error::ClassificationAmbiguous { .. }) => return Ok(mid),
            Err(e) => return Err(e),
        }
    }
    Ok((lo + hi) * T::lit(0.5))
}

/// Trajectory of the difference equation from slope `sigma`, sampled on the
/// nodes of `yplus` up to `s_end` (stops early, truncating, if it leaves the
/// positive region or breaks down).
pub fn eta_trajectory<T: Real>(yplus: &PainleveSolution<T>, sigma: T, s_end: T) -> Result<DifferenceProfile<T>> {
    let grid = yplus.grid().prefix(s_end)?;
    let nodes = grid.nodes();
    let rhs = eta_rhs(yplus);
    let dopri = Dopri::new(T::lit(1e-12), T::lit(1e-14));
    let mut u = vec![T::zero()];
    let mut up = vec![sigma];
    let mut state = [T::zero(), sigma];
    for w in nodes.windows(2) {
        match dopri.run(&rhs, w[0], state, w[1], |_, _| Control::Continue) {
            Ok(end) if end.y[0].is_finite() => {
                state = end.y;
                u.push(state[0]);
                up.push(state[1]);
            }
            _ => break,
        }
    }
    let m = u.len();
    let grid = HalfLineGrid::new(nodes[..m].to_vec())?;
    let upp = (0..m).map(|i| yplus.y()[i] * u[i] - T::lit(0.5) * u[i] * u[i]).collect();
    DifferenceProfile::from_samples(grid, u, up, upp)
}

/// `u1 / u2` is strictly increasing on the nodes where both are above the
/// underflow window. For `u1 = phi` and `u2` the trajectory with slope above
/// `phi'(0)`, the Wronskian `u1' u2 - u1 u2'` starts at zero and grows like
/// `int u1 u2 (u2 - u1) / 2 > 0`, so the ratio increases; below `phi'(0)` it
/// decreases instead.
pub fn ratio_increasing<T: Real>(u1: &[T], u2: &[T]) -> bool {
    let end = window_end(u1).min(window_end(u2)).min(u1.len()).min(u2.len());
    let r: Vec<T> = (1..end).map(|i| u1[i] / u2[i]).collect();
    r.windows(2).all(|w| w[1] > w[0])
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoryReport {
    #[serde(rename = "E_positive")]
    pub e_positive: bool,
    #[serde(rename = "dE_negative")]
    pub de_negative: bool,
    pub delta_max: f64,
    #[serde(rename = "I")]
    pub i: f64,
    #[serde(rename = "J_delta")]
    pub j_delta: f64,
    pub eta_solution_count: usize,
    pub transition_slope: Option<f64>,
    /// `phi'(0)`, the slope the single transition should reproduce.
    pub phi_slope: f64,
    /// Dissipation identity `E(s) - E(0) = -int Y+' phi^2` worst gap.
    pub dissipation_gap: f64,
}

/// Default slope window and sample count for the uniqueness scan.
pub const ETA_SCAN_RANGE: (f64, f64) = (0.01, 5.0);
pub const ETA_SCAN_SAMPLES: usize = 500;

/// Every check on `phi = Y+ - Y-`, with `J_delta` taken at `delta_max / 2`.
pub fn theory_report<T: Real>(yplus: &PainleveSolution<T>, phi: &DifferenceProfile<T>) -> Result<TheoryReport> {
    let energy = energy_curve(phi, yplus)?;
    let threshold = delta_threshold(yplus, phi)?;
    let delta = if threshold.delta_max.is_finite() { threshold.delta_max * 0.5 } else { 1.0 };
    let f = functional_values(phi, yplus, phi, T::lit(delta))?;
    let scan = eta_slope_scan(yplus, (T::lit(ETA_SCAN_RANGE.0), T::lit(ETA_SCAN_RANGE.1)), ETA_SCAN_SAMPLES)?;
    Ok(TheoryReport {
        e_positive: energy.positive(),
        de_negative: energy.dissipative(),
        delta_max: threshold.delta_max,
        i: f.i,
        j_delta: f.j_delta,
        eta_solution_count: scan.count,
        transition_slope: scan.transition_slopes.first().copied(),
        phi_slope: phi.phip()[0].as_f64(),
        dissipation_gap: energy.dissipation_identity_gap().as_f64(),
    })
}
