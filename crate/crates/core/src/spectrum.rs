//! Dirichlet spectra of `-psi'' + V psi` on the half-line (`V = Y+-`, or the
//! linearization of the difference equation) and on `(-1, 1)` (`V = u`), plus
//! the linear a-priori estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bvp::BvpSolution;
use crate::composite::{CompositeSolution, Mesh};
use crate::error::{Error, Result};
use crate::numerics::{cubic_interpolate, linear_fit, solve_tridiagonal};
use crate::painleve::{Branch, DifferenceProfile, PainleveSolution};
use crate::scalar::{sup_abs, Real};

/// Coarse half-line spacing; the fine one is half of it.
pub const HALFLINE_SPACING: f64 = 0.01;
/// Extra length used by the truncation check.
pub const TRUNCATION_PROBE: f64 = 10.0;
/// Largest eigenvalue shift tolerated under the truncation check.
pub const TRUNCATION_TOL: f64 = 1e-4;
/// Eigenvalues closer than this to zero make the operator numerically singular.
pub const ZERO_EIGENVALUE: f64 = 1e-8;
/// Relative separation below which two computed eigenvalues are not resolved.
pub const CLUSTER_RESOLUTION: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Operator {
    HalfLinePlus,
    HalfLineMinus,
    IntervalL,
    EtaLinearization,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumReport {
    pub operator: Operator,
    pub eigenvalues: Vec<f64>,
    pub morse_index: usize,
    /// Eigenfunction parities, present for even potentials.
    pub parity: Vec<Parity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_max: Option<f64>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branches: Option<(Branch, Branch)>,
    pub mesh_size: usize,
    /// Estimated absolute eigenvalue error.
    pub error_estimate: f64,
    /// For even potentials, `log10(lambda_{2m} - lambda_{2m-1})` per cluster,
    /// from the Green identity between the even and odd eigenvectors.
    pub log10_gaps: Vec<f64>,
}

impl SpectrumReport {
    /// `(lambda_2 - lambda_1) / |lambda_1|` from the resolved cluster gap when
    /// available, otherwise from the eigenvalues.
    pub fn gap_ratio(&self) -> Option<f64> {
        let l1 = *self.eigenvalues.first()?;
        let gap = match self.log10_gaps.first() {
            Some(g) => 10f64.powf(*g),
            None => self.eigenvalues.get(1)? - l1,
        };
        Some(gap / l1.abs())
    }
}

/// Symmetric tridiagonal matrix.
#[derive(Debug, Clone)]
pub struct SymTridiag<T> {
    pub diag: Vec<T>,
    pub off: Vec<T>,
}

impl<T: Real> SymTridiag<T> {
    pub fn new(diag: Vec<T>, off: Vec<T>) -> Result<Self> {
        if diag.is_empty() || off.len() + 1 != diag.len() {
            return Err(Error::InvalidInput("off-diagonal must be one shorter than the diagonal".into()));
        }
        Ok(Self { diag, off })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }
    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `lambda` (Sturm count of the
    /// negative pivots of `T - lambda`).
    pub fn count_below(&self, lambda: T) -> usize {
        let tiny = T::min_positive_value().sqrt();
        let mut count = 0;
        let mut q = T::one();
        for i in 0..self.diag.len() {
            let coupling = if i == 0 { T::zero() } else { self.off[i - 1] * self.off[i - 1] / q };
            q = self.diag[i] - lambda - coupling;
            if q == T::zero() {
                q = -tiny;
            }
            if q < T::zero() {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (T, T) {
        let n = self.diag.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { T::zero() } + if i + 1 < n { self.off[i].abs() } else { T::zero() };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `j`-th smallest eigenvalue (0-based) by bisection.
    pub fn eigenvalue(&self, j: usize) -> T {
        let (mut lo, mut hi) = self.gershgorin();
        let eps = T::epsilon();
        for _ in 0..300 {
            let mid = (lo + hi) * T::lit(0.5);
            if hi - lo <= T::lit(4.0) * eps * (lo.abs().max(hi.abs())) + T::min_positive_value() || mid == lo || mid == hi {
                break;
            }
            if self.count_below(mid) > j {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (lo + hi) * T::lit(0.5)
    }

    /// The `k` smallest eigenvalues in ascending order.
    pub fn lowest(&self, k: usize) -> Vec<T> {
        (0..k.min(self.len())).map(|j| self.eigenvalue(j)).collect()
    }

    /// Normalized eigenvector for an eigenvalue estimate, by inverse iteration.
    pub fn eigenvector(&self, lambda: T) -> Result<Vec<T>> {
        let n = self.len();
        let scale = self.diag.iter().fold(T::one(), |m, d| m.max(d.abs()));
        let shift = lambda + scale * T::epsilon() * T::lit(8.0);
        let diag: Vec<T> = self.diag.iter().map(|&d| d - shift).collect();
        let mut v: Vec<T> = (0..n).map(|i| T::one() + T::lit(0.01) * T::from_count(i % 7)).collect();
        for _ in 0..4 {
            let w = solve_tridiagonal(&self.off, &diag, &self.off, &v).ok_or(Error::NearSingular { eigenvalue: lambda.as_f64() })?;
            let norm = w.iter().map(|&x| x * x).sum::<T>().sqrt();
            if !(norm.is_finite() && norm > T::zero()) {
                return Err(Error::NearSingular { eigenvalue: lambda.as_f64() });
            }
            v = w.into_iter().map(|x| x / norm).collect();
        }
        Ok(v)
    }
}

/// Number of sign changes, ignoring entries below `1e-8` of the sup norm.
pub fn sign_changes<T: Real>(v: &[T]) -> usize {
    let floor = sup_abs(v) * T::lit(1e-8);
    let mut last = 0i8;
    let mut count = 0;
    for &x in v {
        let s = if x > floor {
            1
        } else if x < -floor {
            -1
        } else {
            0
        };
        if s != 0 {
            if last != 0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Symmetrized Dirichlet discretization of `-v'' + V v` on the interior nodes
/// of `x`: with `w_i = (h_{i-1} + h_i)/2`, the unknown is `sqrt(w) v`.
pub fn dirichlet_operator<T: Real>(x: &[T], potential: &[T]) -> Result<SymTridiag<T>> {
    let n = x.len();
    if n < 3 || potential.len() != n {
        return Err(Error::GridMismatch);
    }
    let h: Vec<T> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let w: Vec<T> = (1..n - 1).map(|i| (h[i - 1] + h[i]) * T::lit(0.5)).collect();
    let diag = (1..n - 1).map(|i| (T::one() / h[i - 1] + T::one() / h[i]) / w[i - 1] + potential[i]).collect();
    let off = (1..n - 2).map(|i| -T::one() / (h[i] * (w[i - 1] * w[i]).sqrt())).collect();
    SymTridiag::new(diag, off)
}

/// First `k` eigenvalues of `-psi'' + V psi`, `psi(0) = psi(s_max) = 0`, on a
/// uniform grid of spacing `h`.
fn halfline_eigenvalues<T: Real>(potential: &dyn Fn(T) -> T, s_max: T, h: T, k: usize) -> Result<Vec<T>> {
    let cells = (s_max / h).round().to_usize().ok_or_else(|| Error::InvalidInput("bad half-line spacing".into()))?;
    let x: Vec<T> = (0..=cells).map(|i| s_max * T::from_count(i) / T::from_count(cells)).collect();
    let v: Vec<T> = x.iter().map(|&s| potential(s)).collect();
    Ok(dirichlet_operator(&x, &v)?.lowest(k))
}

/// Richardson-extrapolated half-line eigenvalues with error estimate and the
/// truncation check at `s_max + TRUNCATION_PROBE`.
fn halfline_generic<T: Real>(potential: &dyn Fn(T) -> T, k: usize, s_max: T, operator: Operator) -> Result<SpectrumReport> {
    if k < 1 {
        return Err(Error::InvalidInput("need at least one eigenvalue".into()));
    }
    let h = T::lit(HALFLINE_SPACING);
    let extrapolated = |length: T| -> Result<(Vec<T>, T)> {
        let coarse = halfline_eigenvalues(potential, length, h, k)?;
        let fine = halfline_eigenvalues(potential, length, h * T::lit(0.5), k)?;
        let three = T::lit(3.0);
        let err = coarse.iter().zip(&fine).fold(T::zero(), |m, (c, f)| m.max((*f - *c).abs() / three));
        Ok((coarse.iter().zip(&fine).map(|(c, f)| (T::lit(4.0) * *f - *c) / three).collect(), err))
    };
    let (mu, err) = extrapolated(s_max)?;
    let (longer, _) = extrapolated(s_max + T::lit(TRUNCATION_PROBE))?;
    for (i, (a, b)) in mu.iter().zip(&longer).enumerate() {
        let shift = (*a - *b).abs();
        if shift > T::lit(TRUNCATION_TOL) {
            return Err(Error::TruncationSensitive { index: i + 1, shift: shift.as_f64() });
        }
    }
    let eigenvalues: Vec<f64> = mu.iter().map(|v| v.as_f64()).collect();
    Ok(SpectrumReport {
        operator,
        morse_index: eigenvalues.iter().filter(|&&v| v < 0.0).count(),
        eigenvalues,
        parity: Vec::new(),
        s_max: Some(s_max.as_f64()),
        a: None,
        branches: None,
        mesh_size: (s_max / (h * T::lit(0.5))).round().to_usize().unwrap_or(0) + 1,
        error_estimate: err.as_f64(),
        log10_gaps: Vec::new(),
    })
}

/// Spectrum of `M = -psi'' + Y psi` for a Painleve profile.
pub fn halfline_spectrum<T: Real>(profile: &PainleveSolution<T>, k: usize, s_max: T) -> Result<SpectrumReport> {
    let op = match profile.branch() {
        Branch::Plus => Operator::HalfLinePlus,
        Branch::Minus => Operator::HalfLineMinus,
    };
    halfline_generic(&|s| profile.potential(s), k, s_max, op)
}

/// Spectrum of the linearization `-psi'' + (Y+ - phi) psi` of the difference
/// equation at `phi`.
pub fn eta_linearization_spectrum<T: Real>(yplus: &PainleveSolution<T>, phi: &DifferenceProfile<T>, k: usize, s_max: T) -> Result<SpectrumReport> {
    halfline_generic(&|s| yplus.potential(s) - phi.evaluate(s).0, k, s_max, Operator::EtaLinearization)
}

/// `min |mu_i|` over the first four half-line eigenvalues.
pub fn nondegeneracy_margin<T: Real>(profile: &PainleveSolution<T>, s_max: T) -> Result<f64> {
    let rep = halfline_spectrum(profile, 4, s_max)?;
    Ok(rep.eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(v.abs())))
}

/// A potential on `[-1, 1]` sampled on a mesh.
pub trait IntervalPotential<T: Real> {
    fn parameter(&self) -> T;
    fn branches(&self) -> Option<(Branch, Branch)>;
    fn mesh(&self) -> &Mesh<T>;
    fn values(&self) -> &[T];
}

impl<T: Real> IntervalPotential<T> for BvpSolution<T> {
    fn parameter(&self) -> T {
        self.a
    }
    fn branches(&self) -> Option<(Branch, Branch)> {
        self.branches
    }
    fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }
    fn values(&self) -> &[T] {
        &self.u
    }
}

impl<T: Real> IntervalPotential<T> for CompositeSolution<T> {
    fn parameter(&self) -> T {
        self.config.a
    }
    fn branches(&self) -> Option<(Branch, Branch)> {
        Some(self.branches)
    }
    fn mesh(&self) -> &Mesh<T> {
        &self.mesh
    }
    fn values(&self) -> &[T] {
        &self.u
    }
}

/// True when the mesh is symmetric and the potential even to `1e-10` relative.
pub fn is_even<T: Real>(mesh: &Mesh<T>, v: &[T]) -> bool {
    let n = v.len();
    let gap = (0..n).fold(T::zero(), |m, i| m.max((v[i] - v[n - 1 - i]).abs()));
    mesh.is_symmetric() && gap <= T::lit(1e-10) * sup_abs(v).max(T::one())
}

/// Even and odd half-interval reductions of the symmetrized operator of an
/// even potential: the odd one is Dirichlet at the centre node, the even one
/// keeps the centre node with half its cell weight.
fn half_operators<T: Real>(x: &[T], v: &[T]) -> Result<(SymTridiag<T>, SymTridiag<T>)> {
    let full = dirichlet_operator(x, v)?;
    let c = x.len() / 2; // centre node
                         // interior index of node i is i - 1
    let odd = SymTridiag::new(full.diag[..c - 1].to_vec(), full.off[..c - 2].to_vec())?;
    let mut diag = full.diag[..c].to_vec();
    let mut off = full.off[..c - 1].to_vec();
    let h = x[c] - x[c - 1];
    diag[c - 1] = T::lit(2.0) / (h * h) + v[c];
    off[c - 2] = full.off[c - 2] * T::SQRT_2();
    Ok((SymTridiag::new(diag, off)?, odd))
}

/// Solution of rows `1..n` of `(T - lambda) y = 0` recursed from the last
/// entry toward the first, with `y[n-1] = 1`. Entries are stored rescaled:
/// the true vector is `y[i] * exp(logs[i])`.
fn recurse_from_end<T: Real>(t: &SymTridiag<T>, lambda: T) -> (Vec<T>, Vec<T>) {
    let n = t.len();
    let mut y = vec![T::zero(); n];
    let mut logs = vec![T::zero(); n];
    y[n - 1] = T::one();
    y[n - 2] = -(t.diag[n - 1] - lambda) / t.off[n - 2];
    let mut log = T::zero();
    for i in (1..n - 1).rev() {
        // row i: off[i-1] y[i-1] + (d_i - lambda) y[i] + off[i] y[i+1] = 0
        y[i - 1] = -((t.diag[i] - lambda) * y[i] + t.off[i] * y[i + 1]) / t.off[i - 1];
        logs[i - 1] = log;
        let m = y[i - 1].abs().max(y[i].abs());
        if m > T::lit(1e100) {
            y[i - 1] /= m;
            y[i] /= m;
            log += m.ln();
            logs[i - 1] = log;
            logs[i] = log;
        }
    }
    (y, logs)
}

/// `lambda_odd - lambda_even` for one cluster from the Green identity
/// `(lambda_o - lambda_e) <o, e> = -b e_c o_{c-1}`, returned as `log10`.
fn cluster_gap_log10<T: Real>(even: &SymTridiag<T>, odd: &SymTridiag<T>, le: T, lo: T) -> Option<f64> {
    let m = odd.len();
    let b = even.off[m - 1];
    // both vectors are recursed from the centre, where the wall-side
    // eigenvectors are exponentially small, out toward the wall; the wall row
    // is left unenforced, which perturbs the ratio only by the relative
    // eigenvalue error
    let (e, el) = recurse_from_end(even, le);
    let (o, ol) = recurse_from_end(odd, lo);
    // <o, e> over the shared entries, in a common log scale
    let mut terms: Vec<(T, T)> = (0..m).map(|i| (o[i] * e[i], ol[i] + el[i])).collect();
    let top = terms.iter().fold(T::neg_infinity(), |mx, t| if t.0 != T::zero() { mx.max(t.1) } else { mx });
    let dot = terms.drain(..).fold(T::zero(), |acc, (v, l)| acc + v * (l - top).exp());
    let numer = -b * e[m] * o[m - 1];
    let ratio = numer / dot;
    if !(ratio > T::zero()) {
        return None;
    }
    let log = ratio.ln() + el[m] + ol[m - 1] - top;
    Some(log.as_f64() / std::f64::consts::LN_10)
}

/// First `k` Dirichlet eigenvalues of `L = -v'' + u v` on `(-1, 1)`.
pub fn interval_spectrum<T: Real, P: IntervalPotential<T>>(sol: &P, k: usize) -> Result<SpectrumReport> {
    if k < 2 {
        return Err(Error::InvalidInput("interval spectrum needs k >= 2".into()));
    }
    let mesh = sol.mesh();
    let v = sol.values();
    let coarse = interval_eigen(mesh.nodes(), v, k)?;
    // stability under halving every cell
    let fine = mesh.refined();
    let fv: Vec<T> =
        fine.nodes().iter().enumerate().map(|(j, &t)| if j % 2 == 0 { v[j / 2] } else { cubic_interpolate(mesh.nodes(), v, t) }).collect();
    let check = interval_eigen(fine.nodes(), &fv, k)?;
    if check.morse != coarse.morse || check.parity != coarse.parity {
        return Err(Error::MeshTooCoarse(format!("morse {} vs {}, parity {:?} vs {:?}", coarse.morse, check.morse, coarse.parity, check.parity)));
    }
    let err = coarse.values.iter().zip(&check.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(SpectrumReport {
        operator: Operator::IntervalL,
        eigenvalues: coarse.values,
        morse_index: coarse.morse,
        parity: coarse.parity,
        s_max: None,
        a: Some(sol.parameter().as_f64()),
        branches: sol.branches(),
        mesh_size: mesh.len(),
        error_estimate: err,
        log10_gaps: coarse.gaps,
    })
}

struct IntervalEigen {
    values: Vec<f64>,
    morse: usize,
    parity: Vec<Parity>,
    gaps: Vec<f64>,
}

fn interval_eigen<T: Real>(x: &[T], v: &[T], k: usize) -> Result<IntervalEigen> {
    let mesh = Mesh::from_nodes(x.to_vec())?;
    if !is_even(&mesh, v) {
        let op = dirichlet_operator(x, v)?;
        let values: Vec<f64> = op.lowest(k).iter().map(|l| l.as_f64()).collect();
        return Ok(IntervalEigen { values, morse: op.count_below(T::zero()), parity: Vec::new(), gaps: Vec::new() });
    }
    let (even, odd) = half_operators(x, v)?;
    let ke = even.lowest(k);
    let ko = odd.lowest(k);
    let mut merged: Vec<(T, Parity)> = ke.iter().map(|&l| (l, Parity::Even)).chain(ko.iter().map(|&l| (l, Parity::Odd))).collect();
    // cluster members closer than the eigenvalue resolution are ordered by
    // the sign of the resolved gap, which puts the even one first
    let tie = |a: T, b: T| (a - b).abs() <= T::lit(CLUSTER_RESOLUTION) * a.abs().max(b.abs()).max(T::one());
    merged.sort_by(|a, b| {
        if tie(a.0, b.0) {
            (a.1 == Parity::Odd).cmp(&(b.1 == Parity::Odd))
        } else {
            a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal)
        }
    });
    merged.truncate(k);
    let gaps = (0..k / 2).filter_map(|m| cluster_gap_log10(&even, &odd, ke[m], ko[m])).collect();
    Ok(IntervalEigen {
        values: merged.iter().map(|p| p.0.as_f64()).collect(),
        morse: even.count_below(T::zero()) + odd.count_below(T::zero()),
        parity: merged.iter().map(|p| p.1).collect(),
        gaps,
    })
}

/// Eigenvalues of the full operator against the union of the two half-interval
/// reductions; returns the largest mismatch over the first `k`.
pub fn reduction_mismatch<T: Real>(mesh: &Mesh<T>, v: &[T], k: usize) -> Result<f64> {
    let full = dirichlet_operator(mesh.nodes(), v)?.lowest(k);
    let (even, odd) = half_operators(mesh.nodes(), v)?;
    let mut union: Vec<T> = even.lowest(k).into_iter().chain(odd.lowest(k)).collect();
    union.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(full.iter().zip(&union).fold(0.0f64, |m, (a, b)| m.max((*a - *b).abs().as_f64())))
}

/// Eigenvectors of the first `k` interval eigenvalues, as nodal values `v`.
pub fn interval_eigenvectors<T: Real>(mesh: &Mesh<T>, v: &[T], k: usize) -> Result<Vec<Vec<T>>> {
    let x = mesh.nodes();
    let op = dirichlet_operator(x, v)?;
    let n = x.len();
    let w: Vec<T> = (1..n - 1).map(|i| (x[i + 1] - x[i - 1]) * T::lit(0.5)).collect();
    op.lowest(k)
        .into_iter()
        .map(|l| {
            let y = op.eigenvector(l)?;
            Ok(y.iter().zip(&w).map(|(a, b)| *a / b.sqrt()).collect())
        })
        .collect()
}

/// Half-line eigenvector samples on the coarse grid.
pub fn halfline_eigenvectors<T: Real>(profile: &PainleveSolution<T>, k: usize, s_max: T) -> Result<Vec<Vec<T>>> {
    let h = T::lit(HALFLINE_SPACING);
    let cells = (s_max / h).round().to_usize().unwrap_or(0);
    let x: Vec<T> = (0..=cells).map(|i| s_max * T::from_count(i) / T::from_count(cells)).collect();
    let v: Vec<T> = x.iter().map(|&s| profile.potential(s)).collect();
    let op = dirichlet_operator(&x, &v)?;
    op.lowest(k).into_iter().map(|l| op.eigenvector(l)).collect()
}

/// Which half-line eigenvalue governs `lambda_i` of the interval operator: for
/// even pairs both members of the `m`-th cluster come from `mu_m`; for mixed
/// pairs the interleaving is not known in general and `None` is returned.
pub fn paired_halfline_index(branches: (Branch, Branch), i: usize) -> Option<(Branch, usize)> {
    (branches.0 == branches.1 && i >= 1).then(|| (branches.0, i.div_ceil(2)))
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingCheck {
    pub index: usize,
    pub fitted_exponent: f64,
    pub fitted_constant: f64,
    pub r_squared: f64,
    pub residuals: Vec<f64>,
    /// Matching half-line eigenvalue, when one is paired.
    pub mu_reference: Option<f64>,
    /// `|fitted_constant - |mu|| / |mu|`.
    pub constant_rel_error: Option<f64>,
    pub gap_ratios: Vec<f64>,
    pub gap_ratio_decreasing: bool,
}

/// Log-log fit of `|lambda_i|` against `A` over precomputed interval spectra.
pub fn eigen_scaling_check(spectra: &[SpectrumReport], i: usize, mu_reference: Option<f64>) -> Result<ScalingCheck> {
    if spectra.len() < 4 {
        return Err(Error::NoFitPossible(spectra.len()));
    }
    let mut la = Vec::new();
    let mut ll = Vec::new();
    for s in spectra {
        let a = s.a.ok_or_else(|| Error::InvalidInput("interval spectrum without A".into()))?;
        let l = *s.eigenvalues.get(i - 1).ok_or_else(|| Error::InvalidInput(format!("eigenvalue {i} not computed")))?;
        if l == 0.0 {
            return Err(Error::NonPositiveValue { a, value: 0.0 });
        }
        la.push(a.ln());
        ll.push(l.abs().ln());
    }
    let (slope, intercept, r2) = linear_fit(&la, &ll);
    if r2 < 0.99 {
        return Err(Error::FitUnstable { r_squared: r2 });
    }
    let residuals = la.iter().zip(&ll).map(|(x, y)| y - (slope * x + intercept)).collect();
    let constant = intercept.exp();
    let gap_ratios: Vec<f64> = spectra.iter().filter_map(|s| s.gap_ratio()).collect();
    let gap_ratio_decreasing = gap_ratios.len() == spectra.len() && gap_ratios.windows(2).all(|w| w[1] < w[0]);
    Ok(ScalingCheck {
        index: i,
        fitted_exponent: slope,
        fitted_constant: constant,
        r_squared: r2,
        residuals,
        mu_reference,
        constant_rel_error: mu_reference.map(|m| (constant - m.abs()).abs() / m.abs()),
        gap_ratios,
        gap_ratio_decreasing,
    })
}

/// Forcing functions for the a-priori estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    Zero,
    Constant,
    Cosine,
    /// Sign-alternating Gaussian bumps.
    BumpTrain,
    /// Random Fourier series with the given seed.
    Random(u64),
}

impl Probe {
    pub fn name(&self) -> String {
        match self {
            Probe::Zero => "zero".into(),
            Probe::Constant => "constant".into(),
            Probe::Cosine => "cosine".into(),
            Probe::BumpTrain => "bump_train".into(),
            Probe::Random(s) => format!("random_{s}"),
        }
    }

    pub fn sample<T: Real>(&self, x: &[T]) -> Vec<T> {
        match self {
            Probe::Zero => vec![T::zero(); x.len()],
            Probe::Constant => vec![T::one(); x.len()],
            Probe::Cosine => x.iter().map(|&t| (T::FRAC_PI_2() * t).cos()).collect(),
            Probe::BumpTrain => {
                let width = T::lit(0.08);
                x.iter()
                    .map(|&t| {
                        (0..8).fold(T::zero(), |acc, j| {
                            let c = T::lit(-0.875 + 0.25 * j as f64);
                            let sign = if j % 2 == 0 { T::one() } else { -T::one() };
                            let z = (t - c) / width;
                            acc + sign * (-z * z).exp()
                        })
                    })
                    .collect()
            }
            Probe::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let modes: Vec<(f64, f64)> = (1..=6).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))).collect();
                x.iter()
                    .map(|&t| {
                        modes.iter().enumerate().fold(T::zero(), |acc, (m, &(c, p))| {
                            acc + T::lit(c / (m + 1) as f64) * (T::from_count(m + 1) * T::PI() * t + T::lit(p)).cos()
                        })
                    })
                    .collect()
            }
        }
    }
}

/// Default probe set: constant, cosine, bump train and five random probes
/// whose seeds derive from `seed`.
pub fn default_probes(seed: u64) -> Vec<Probe> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![Probe::Constant, Probe::Cosine, Probe::BumpTrain];
    v.extend((0..5).map(|_| Probe::Random(rng.gen())));
    v
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeRatio {
    pub probe: String,
    /// `||phi|| A^{2/5} / ||f||` (zero for the zero probe).
    pub ratio: f64,
    pub phi_sup: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AprioriReport {
    pub max_ratio: f64,
    pub per_probe: Vec<ProbeRatio>,
}

/// Solves `-phi'' + u phi = f`, `phi(+-1) = 0` for each probe.
pub fn apriori_ratio<T: Real, P: IntervalPotential<T>>(sol: &P, probes: &[Probe]) -> Result<AprioriReport> {
    let x = sol.mesh().nodes();
    let v = sol.values();
    let op = dirichlet_operator(x, v)?;
    let z = T::lit(ZERO_EIGENVALUE);
    if op.count_below(z) != op.count_below(-z) {
        let near = op.eigenvalue(op.count_below(-z));
        return Err(Error::NearSingular { eigenvalue: near.as_f64() });
    }
    let n = x.len();
    let w: Vec<T> = (1..n - 1).map(|i| (x[i + 1] - x[i - 1]) * T::lit(0.5)).collect();
    let a25 = sol.parameter().powf(T::lit(0.4));
    let mut per_probe = Vec::new();
    for p in probes {
        let f = p.sample(x);
        let fs = sup_abs(&f[1..n - 1]);
        // symmetric form: (W^{-1/2} A W^{-1/2}) y = W^{1/2} f with y = W^{1/2} phi
        let rhs: Vec<T> = (1..n - 1).map(|i| f[i] * w[i - 1].sqrt()).collect();
        let y = solve_tridiagonal(&op.off, &op.diag, &op.off, &rhs).ok_or(Error::NearSingular { eigenvalue: 0.0 })?;
        let phi: Vec<T> = y.iter().zip(&w).map(|(a, b)| *a / b.sqrt()).collect();
        let ps = sup_abs(&phi);
        let ratio = if fs > T::zero() { ps * a25 / fs } else { T::zero() };
        per_probe.push(ProbeRatio { probe: p.name(), ratio: ratio.as_f64(), phi_sup: ps.as_f64() });
    }
    let max_ratio = per_probe.iter().fold(0.0f64, |m, r| m.max(r.ratio));
    Ok(AprioriReport { max_ratio, per_probe })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sturm_count_matches_known_spectrum() {
        // -v'' on (0, pi) with n interior nodes: 4/h^2 sin^2(j h / 2)
        let n = 200;
        let h = std::f64::consts::PI / (n + 1) as f64;
        let x: Vec<f64> = (0..n + 2).map(|i| i as f64 * h).collect();
        let op = dirichlet_operator(&x, &vec![0.0; n + 2]).unwrap();
        for j in 1..=5 {
            let exact = 4.0 / (h * h) * (j as f64 * h / 2.0).sin().powi(2);
            assert_relative_eq!(op.eigenvalue(j - 1), exact, max_relative = 1e-12);
        }
        assert_eq!(op.count_below(1.5), 1);
    }

    #[test]
    fn eigenvectors_oscillate_by_index() {
        let x: Vec<f64> = (0..=400).map(|i| -1.0 + i as f64 / 200.0).collect();
        let v: Vec<f64> = x.iter().map(|t| 5.0 * t * t + t).collect();
        let mesh = Mesh::from_nodes(x).unwrap();
        let vecs = interval_eigenvectors(&mesh, &v, 4).unwrap();
        for (i, e) in vecs.iter().enumerate() {
            assert_eq!(sign_changes(e), i);
        }
    }

    #[test]
    fn reductions_reproduce_full_spectrum() {
        let mesh = Mesh::<f64>::uniform(600).unwrap();
        let v: Vec<f64> = mesh.nodes().iter().map(|t| 40.0 * (1.0 - t * t) - 30.0 * (-(t.abs() - 0.9).powi(2) * 200.0).exp()).collect();
        assert!(reduction_mismatch(&mesh, &v, 6).unwrap() < 1e-9);
    }

    #[test]
    fn green_identity_gap_matches_direct_difference() {
        // a double well with a gap well above rounding
        let mesh = Mesh::<f64>::uniform(2000).unwrap();
        let v: Vec<f64> = mesh.nodes().iter().map(|t| 60.0 * (1.0 - t * t) - 60.0 * (-(t.abs() - 0.8).powi(2) * 100.0).exp()).collect();
        let (even, odd) = half_operators(mesh.nodes(), &v).unwrap();
        let le = even.eigenvalue(0);
        let lo = odd.eigenvalue(0);
        let g = cluster_gap_log10(&even, &odd, le, lo).unwrap();
        assert_relative_eq!(10f64.powf(g), lo - le, max_relative = 1e-6);
    }

    #[test]
    fn zero_probe_gives_zero() {
        let mesh = Mesh::<f64>::uniform(100).unwrap();
        let u = vec![10.0; mesh.len()];
        let zero = vec![0.0; mesh.len()];
        let sol = BvpSolution {
            a: 10.0,
            branches: None,
            mesh,
            u: u.clone(),
            u_ap: u,
            phi: zero,
            newton_iters: 0,
            final_residual: 0.0,
            tol: 1.0,
            trace: vec![],
        };
        let rep = apriori_ratio(&sol, &[Probe::Zero, Probe::Constant]).unwrap();
        assert_eq!(rep.per_probe[0].phi_sup, 0.0);
        assert!(rep.per_probe[1].ratio > 0.0);
    }

    #[test]
    fn probes_are_deterministic() {
        assert_eq!(default_probes(3), default_probes(3));
        assert_eq!(default_probes(3).len(), 8);
    }
}
