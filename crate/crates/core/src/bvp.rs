//! Newton correction of `u_ap` to a solution of `2u'' = u^2 - A(1 - x^2)`,
//! `u(+-1) = 0`, and the region diagnostics of the corrected solution.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::composite::{CompositeSolution, Mesh};
use crate::error::{Error, Result};
use crate::numerics::{gradient, solve_tridiagonal};
use crate::painleve::{evaluate, Branch, PainleveSolution};
use crate::scalar::{sup_abs, Real};

/// Default tolerance factor: the residual tolerance is `TOL_FACTOR * A`.
pub const TOL_FACTOR: f64 = 1e-8;
pub const MAX_ITERS: usize = 50;
/// Smallest damping factor tried before a step is accepted regardless.
const MIN_DAMPING: f64 = 1.0 / 64.0;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NewtonStep {
    pub residual: f64,
    pub step: f64,
    pub damping: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BvpSolution<T> {
    #[serde(rename = "A")]
    pub a: T,
    pub branches: Option<(Branch, Branch)>,
    pub mesh: Mesh<T>,
    pub u: Vec<T>,
    pub u_ap: Vec<T>,
    pub phi: Vec<T>,
    pub newton_iters: usize,
    pub final_residual: T,
    pub tol: T,
    /// Residual before each step and the step taken.
    pub trace: Vec<NewtonStep>,
}

/// Quadratic-convergence constant: a step passes when
/// `r_next / A <= QUADRATIC_CONSTANT * (r / A)^2`.
pub const QUADRATIC_CONSTANT: f64 = 100.0;

impl<T: Real> BvpSolution<T> {
    /// Size of the residual that rounding of the stored values alone produces,
    /// `eps * max 4 |u| / (h_- h_+)`; Newton cannot push below it.
    pub fn roundoff_floor(&self) -> T {
        residual_floor(self.mesh.nodes(), &self.u)
    }

    /// Residuals before each step followed by the final one.
    pub fn residual_history(&self) -> Vec<f64> {
        self.trace.iter().map(|s| s.residual).chain([self.final_residual.as_f64()]).collect()
    }

    /// Ratios `(r_next / A) / (r / A)^2` for every step.
    pub fn quadratic_ratios(&self) -> Vec<f64> {
        let a = self.a.as_f64().max(1.0);
        self.residual_history().windows(2).map(|w| (w[1] / a) / (w[0] / a).powi(2)).collect()
    }

    /// The last two steps were undamped and each either obeyed the quadratic
    /// law or landed on the rounding floor.
    pub fn quadratic_tail(&self) -> bool {
        let floor = self.roundoff_floor().as_f64();
        let r = self.residual_history();
        let q = self.quadratic_ratios();
        let steps = self.trace.len();
        (steps.saturating_sub(2)..steps).all(|j| self.trace[j].damping == 1.0 && (q[j] <= QUADRATIC_CONSTANT || r[j + 1] <= floor))
    }
}

/// See [`BvpSolution::roundoff_floor`].
pub fn residual_floor<T: Real>(x: &[T], u: &[T]) -> T {
    let mut m = T::zero();
    for i in 1..x.len().saturating_sub(1) {
        m = m.max(T::lit(4.0) * u[i].abs() / ((x[i] - x[i - 1]) * (x[i + 1] - x[i])));
    }
    m * T::epsilon()
}

/// Three-point compact stencil at an interior node with spacings `h0`, `h1`:
/// `2 (u_+ - u)/h1 - (u - u_-)/h0) / (h0 + h1)` approximates `u''` and the
/// weights `(w_-, w, w_+)` average the right-hand side so the scheme is exact
/// for quartics on uniform meshes (Numerov) and third order on graded ones.
#[derive(Debug, Clone, Copy)]
struct Stencil<T> {
    /// coefficients of `u_-`, `u`, `u_+` in the second difference
    d: [T; 3],
    w: [T; 3],
}

impl<T: Real> Stencil<T> {
    fn at(x: &[T], i: usize) -> Self {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let hs = h0 + h1;
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let wl = (h0 * h0 + h0 * h1 - h1 * h1) / (six * h0 * hs);
        let wr = (h1 * h1 + h0 * h1 - h0 * h0) / (six * h1 * hs);
        Self { d: [two / (h0 * hs), -two / (h0 * h1), two / (h1 * hs)], w: [wl, T::one() - wl - wr, wr] }
    }

    fn second(&self, v: &[T], i: usize) -> T {
        // grouped as a difference of slopes to keep rounding proportional to |v'|
        let [dl, _, dr] = self.d;
        dr * (v[i + 1] - v[i]) - dl * (v[i] - v[i - 1])
    }

    fn average(&self, f: &[T], i: usize) -> T {
        self.w[0] * f[i - 1] + self.w[1] * f[i] + self.w[2] * f[i + 1]
    }
}

/// Discrete residual of `2u'' - u^2 + A(1 - x^2)` at interior nodes (zero at
/// the ends), using the compact stencil on the right-hand side.
pub fn discrete_residual<T: Real>(a: T, x: &[T], u: &[T]) -> Vec<T> {
    let n = x.len();
    let f: Vec<T> = u.iter().zip(x).map(|(&v, &t)| v * v - a * (T::one() - t * t)).collect();
    let mut r = vec![T::zero(); n];
    for i in 1..n - 1 {
        let st = Stencil::at(x, i);
        r[i] = T::lit(2.0) * st.second(u, i) - st.average(&f, i);
    }
    r
}

struct Correction<'a, T> {
    u_ap: &'a [T],
    stencils: Vec<Stencil<T>>,
    /// Discrete residual of `u_ap`, computed once so that rounding in the
    /// large values of `u_ap` does not re-enter every iterate.
    e_ap: Vec<T>,
}

impl<T: Real> Correction<'_, T> {
    fn residual(&self, phi: &[T]) -> Vec<T> {
        let n = phi.len();
        let two = T::lit(2.0);
        let q: Vec<T> = phi.iter().zip(self.u_ap).map(|(&p, &u)| (two * u + p) * p).collect();
        let mut r = vec![T::zero(); n];
        for i in 1..n - 1 {
            let st = &self.stencils[i - 1];
            r[i] = self.e_ap[i] + two * st.second(phi, i) - st.average(&q, i);
        }
        r
    }

    fn step(&self, phi: &[T], r: &[T]) -> Option<Vec<T>> {
        let n = phi.len();
        let m = n - 2;
        let two = T::lit(2.0);
        let dq: Vec<T> = phi.iter().zip(self.u_ap).map(|(&p, &u)| two * (u + p)).collect();
        let mut sub = vec![T::zero(); m.saturating_sub(1)];
        let mut sup = vec![T::zero(); m.saturating_sub(1)];
        let mut diag = vec![T::zero(); m];
        let mut rhs = vec![T::zero(); m];
        for i in 1..n - 1 {
            let st = &self.stencils[i - 1];
            diag[i - 1] = two * st.d[1] - st.w[1] * dq[i];
            if i > 1 {
                sub[i - 2] = two * st.d[0] - st.w[0] * dq[i - 1];
            }
            if i < n - 2 {
                sup[i - 1] = two * st.d[2] - st.w[2] * dq[i + 1];
            }
            rhs[i - 1] = -r[i];
        }
        let d = solve_tridiagonal(&sub, &diag, &sup, &rhs)?;
        let mut out = vec![T::zero(); n];
        out[1..n - 1].copy_from_slice(&d);
        Some(out)
    }
}

/// Damped Newton on the correction `phi = u - u_ap` starting from `phi0`.
pub fn solve_correction<T: Real>(
    a: T,
    branches: Option<(Branch, Branch)>,
    mesh: &Mesh<T>,
    u_ap: &[T],
    phi0: &[T],
    tol: T,
    max_iters: usize,
) -> Result<BvpSolution<T>> {
    let x = mesh.nodes();
    let n = x.len();
    if u_ap.len() != n || phi0.len() != n {
        return Err(Error::InvalidInput("values do not match the mesh".into()));
    }
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let stencils = (1..n - 1).map(|i| Stencil::at(x, i)).collect();
    let sys = Correction { u_ap, stencils, e_ap: discrete_residual(a, x, u_ap) };
    let mut phi = phi0.to_vec();
    phi[0] = T::zero();
    phi[n - 1] = T::zero();
    let mut r = sys.residual(&phi);
    let mut norm = sup_abs(&r);
    let mut trace = Vec::new();
    let mut iters = 0;
    while norm > tol {
        if iters >= max_iters {
            return Err(Error::MaxItersExceeded { iters, residual: norm.as_f64() });
        }
        let fail = |trace: &Vec<NewtonStep>| Error::NewtonDiverged { trace: trace.iter().map(|s| s.residual).collect() };
        let d = sys.step(&phi, &r).ok_or_else(|| fail(&trace))?;
        let mut lambda = T::one();
        let (cand, cand_r, cand_norm) = loop {
            let c: Vec<T> = phi.iter().zip(&d).map(|(&p, &q)| p + lambda * q).collect();
            let cr = sys.residual(&c);
            let cn = sup_abs(&cr);
            if (cn.is_finite() && cn < norm) || lambda <= T::lit(MIN_DAMPING) {
                break (c, cr, cn);
            }
            lambda *= T::lit(0.5);
        };
        trace.push(NewtonStep { residual: norm.as_f64(), step: (sup_abs(&d) * lambda).as_f64(), damping: lambda.as_f64() });
        if !cand_norm.is_finite() {
            return Err(fail(&trace));
        }
        phi = cand;
        r = cand_r;
        norm = cand_norm;
        iters += 1;
    }
    let u: Vec<T> = u_ap.iter().zip(&phi).map(|(&p, &q)| p + q).collect();
    Ok(BvpSolution { a, branches, mesh: mesh.clone(), u, u_ap: u_ap.to_vec(), phi, newton_iters: iters, final_residual: norm, tol, trace })
}

/// Newton correction of an assembled composite.
pub fn newton_solve<T: Real>(comp: &CompositeSolution<T>, tol: T, max_iters: usize) -> Result<BvpSolution<T>> {
    let zero = vec![T::zero(); comp.mesh.len()];
    solve_correction(comp.config.a, Some(comp.branches), &comp.mesh, &comp.u, &zero, tol, max_iters)
}

/// Smooth random perturbation vanishing at `+-1` with sup norm `amplitude`.
pub fn random_perturbation<T: Real>(mesh: &Mesh<T>, amplitude: T, seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (1..=8).map(|m| rng.gen_range(-1.0..1.0) / m as f64).collect();
    let pi = T::PI();
    let raw: Vec<T> = mesh
        .nodes()
        .iter()
        .map(|&x| {
            coeffs
                .iter()
                .enumerate()
                .fold(T::zero(), |acc, (m, &c)| acc + T::lit(c) * (T::from_count(m + 1) * pi * (x + T::one()) * T::lit(0.5)).sin())
        })
        .collect();
    let peak = sup_abs(&raw);
    let n = raw.len();
    let mut out: Vec<T> = raw.into_iter().map(|v| amplitude * v / peak).collect();
    out[0] = T::zero();
    out[n - 1] = T::zero();
    out
}

/// Re-solves from `u_ap + A^{1/5} * 0.1 * p` for a seeded perturbation `p`
/// and returns the sup distance to `sol`.
pub fn seed_independence<T: Real>(sol: &BvpSolution<T>, seed: u64) -> Result<T> {
    let amp = sol.a.powf(T::lit(0.2)) * T::lit(0.1);
    let p = random_perturbation(&sol.mesh, amp, seed);
    let other = solve_correction(sol.a, sol.branches, &sol.mesh, &sol.u_ap, &p, sol.tol, MAX_ITERS)?;
    Ok(sol.u.iter().zip(&other.u).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs())))
}

/// Node slopes accurate to third order, from the cell differences corrected
/// with `u'' = (u^2 - A(1 - x^2)) / 2` and averaged over the two adjacent cells.
pub fn node_slopes<T: Real>(a: T, x: &[T], u: &[T]) -> Vec<T> {
    let n = x.len();
    let six = T::lit(6.0);
    let g: Vec<T> = u.iter().zip(x).map(|(&v, &t)| (v * v - a * (T::one() - t * t)) * T::lit(0.5)).collect();
    // slope at the left and right end of each cell
    let left = |i: usize| {
        let h = x[i + 1] - x[i];
        (u[i + 1] - u[i]) / h - h * (T::lit(2.0) * g[i] + g[i + 1]) / six
    };
    let right = |i: usize| {
        let h = x[i + 1] - x[i];
        (u[i + 1] - u[i]) / h + h * (g[i] + T::lit(2.0) * g[i + 1]) / six
    };
    (0..n)
        .map(|i| {
            if i == 0 {
                left(0)
            } else if i == n - 1 {
                right(n - 2)
            } else {
                (left(i) + right(i - 1)) * T::lit(0.5)
            }
        })
        .collect()
}

/// Residual of the solution after piecewise cubic Hermite interpolation onto
/// the mesh with every cell halved.
pub fn refined_residual<T: Real>(sol: &BvpSolution<T>) -> T {
    let x = sol.mesh.nodes();
    let u = &sol.u;
    let d = node_slopes(sol.a, x, u);
    let fine = sol.mesh.refined();
    let mut v = Vec::with_capacity(fine.len());
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        v.push(u[i]);
        // cubic Hermite at the midpoint
        v.push((u[i] + u[i + 1]) * T::lit(0.5) + h * (d[i] - d[i + 1]) / T::lit(8.0));
    }
    v.push(u[x.len() - 1]);
    sup_abs(&discrete_residual(sol.a, fine.nodes(), &v))
}

/// Re-solves on the mesh with every cell halved and returns
/// `max |u_fine - u| / max |u|` over the shared nodes. The fine solve uses the
/// larger of the tolerance and the fine mesh's rounding floor.
pub fn mesh_independence<T: Real>(comp_fine: &CompositeSolution<T>, sol: &BvpSolution<T>) -> Result<T> {
    let floor = residual_floor(comp_fine.mesh.nodes(), &comp_fine.u) * T::lit(2.0);
    let fine = newton_solve(comp_fine, sol.tol.max(floor), MAX_ITERS)?;
    if fine.mesh.len() != 2 * sol.mesh.len() - 1 {
        return Err(Error::GridMismatch);
    }
    let d = (0..sol.mesh.len()).fold(T::zero(), |m, j| m.max((fine.u[2 * j] - sol.u[j]).abs()));
    Ok(d / sup_abs(&sol.u))
}

/// `max |u(x) - u(-x)|` on a symmetric mesh.
pub fn reflection_gap<T: Real>(u: &[T]) -> T {
    let n = u.len();
    (0..n).fold(T::zero(), |m, i| m.max((u[i] - u[n - 1 - i]).abs()))
}

/// `max |u(x) - v(-x)|` on a symmetric mesh.
pub fn mirror_distance<T: Real>(u: &[T], v: &[T]) -> T {
    let n = u.len();
    (0..n).fold(T::zero(), |m, i| m.max((u[i] - v[n - 1 - i]).abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrectionReport {
    pub phi_sup: f64,
    /// `sup |phi| / (A^{2/5} (1 - x^2))` over the inner zones.
    pub boundary_sup: f64,
    /// `sup |phi| (1 - x^2)` over the middle.
    pub middle_sup: f64,
    /// `sup |phi'| / A^{2/5}` over the inner zones.
    pub derivative_sup: f64,
}

fn in_inner_zone<T: Real>(x: T, width: T) -> bool {
    T::one() - x.abs() <= width
}

/// Region-normalized suprema of the correction. `big_d` sets the inner zone width `D (2A)^{-1/5}`.
pub fn correction_region_report<T: Real>(sol: &BvpSolution<T>, big_d: T) -> CorrectionReport {
    let x = sol.mesh.nodes();
    let n = x.len();
    let a = sol.a;
    let k = (T::lit(2.0) * a).powf(T::lit(0.2));
    let width = big_d / k;
    let a25 = a.powf(T::lit(0.4));
    let dphi = gradient(x, &sol.phi);
    let mut b = T::zero();
    let mut m = T::zero();
    let mut d = T::zero();
    for i in 0..n {
        let j = if i == 0 {
            1
        } else if i == n - 1 {
            n - 2
        } else {
            i
        };
        let w = T::one() - x[j] * x[j];
        if in_inner_zone(x[i], width) {
            b = b.max(sol.phi[j].abs() / (a25 * w));
            d = d.max(dphi[i].abs() / a25);
        } else {
            m = m.max(sol.phi[i].abs() * w);
        }
    }
    CorrectionReport { phi_sup: sup_abs(&sol.phi).as_f64(), boundary_sup: b.as_f64(), middle_sup: m.as_f64(), derivative_sup: d.as_f64() }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremRegions {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub mid: f64,
}

/// The five region quantities comparing `u` with the rescaled profiles near
/// each wall and with `sqrt(A(1-x^2))` in the middle.
pub fn theorem_region_report<T: Real>(
    sol: &BvpSolution<T>,
    y: &PainleveSolution<T>,
    z: &PainleveSolution<T>,
    delta: T,
    big_d: T,
) -> Result<TheoremRegions> {
    let a = sol.a;
    let k = (T::lit(2.0) * a).powf(T::lit(0.2));
    let width = big_d / k;
    if width >= delta {
        return Err(Error::RegionEmpty(format!("D (2A)^(-1/5) = {} is not below delta = {}", width.as_f64(), delta.as_f64())));
    }
    let x = sol.mesh.nodes();
    let n = x.len();
    let a25 = a.powf(T::lit(0.4));
    let a12 = a.sqrt();
    let k2 = k * k;
    let mut r = [T::zero(); 5];
    for i in 0..n {
        let xi = x[i];
        let dl = T::one() + xi;
        let dr = T::one() - xi;
        if dl <= delta {
            // at the wall itself the quotient is replaced by the one-sided difference (value at the neighbour)
            let j = if i == 0 { 1 } else { i };
            let dj = T::one() + x[j];
            let (yv, _, _) = evaluate(y, k * dj)?;
            let diff = (sol.u[j] - k2 * yv).abs();
            if dl <= width {
                r[0] = r[0].max(diff / (a25 * dj));
            } else {
                r[1] = r[1].max(diff / (a12 * dj.powf(T::lit(1.5))));
            }
        }
        if dr <= delta {
            let j = if i == n - 1 { n - 2 } else { i };
            let dj = T::one() - x[j];
            let (zv, _, _) = evaluate(z, k * dj)?;
            let diff = (sol.u[j] - k2 * zv).abs();
            if dr <= width {
                r[2] = r[2].max(diff / (a25 * dj));
            } else {
                r[3] = r[3].max(diff / (a12 * dj.powf(T::lit(1.5))));
            }
        }
        if dl >= width && dr >= width {
            let w = T::one() - xi * xi;
            r[4] = r[4].max(w * w * (sol.u[i] - (a * w).sqrt()).abs());
        }
    }
    Ok(TheoremRegions { r1: r[0].as_f64(), r2: r[1].as_f64(), r3: r[2].as_f64(), r4: r[3].as_f64(), mid: r[4].as_f64() })
}
