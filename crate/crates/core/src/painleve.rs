//! Half-line profiles of `2y'' = y^2 - s`, `y(0) = 0`, `y ~ sqrt(s)`.
//!
//! The two connecting slopes are located by bisection on trajectory fate and
//! the profiles are then recomputed globally with a fourth-order Numerov
//! discretization, which is immune to the exponential growth that ruins
//! forward integration past `s ~ 20`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{linear_fit, locate, quintic_hermite, solve_tridiagonal};
use crate::ode::{Control, Dopri};
use crate::scalar::Real;

/// Smallest truncation accepted for a stored profile.
pub const MIN_S_MAX: f64 = 30.0;
/// Default truncation of the half line.
pub const DEFAULT_S_MAX: f64 = 40.0;
/// Default Numerov spacing.
pub const DEFAULT_SPACING: f64 = 0.005;
/// Fate of a trajectory is decided before this stretched coordinate.
const CLASSIFY_LIMIT: f64 = 30.0;
/// Forward-integrated seeds are trusted up to here.
const SEED_END: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    /// Bracket known to contain exactly one connecting slope.
    pub fn default_bracket<T: Real>(self) -> (T, T) {
        match self {
            Branch::Plus => (T::zero(), T::lit(2.0)),
            Branch::Minus => (T::lit(-5.0), T::lit(-2.0)),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Branch::Plus => 'P',
            Branch::Minus => 'M',
        }
    }
}

/// Far-field expansion `sqrt(s) - s^-2/4 - 49/32 s^-9/2`, truncated after `order` corrections.
pub fn far_field<T: Real>(s: T, order: usize) -> T {
    let mut v = s.sqrt();
    if order >= 1 {
        v -= T::lit(0.25) / (s * s);
    }
    if order >= 2 {
        v -= T::lit(49.0 / 32.0) * s.powf(T::lit(-4.5));
    }
    v
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HalfLineGrid<T> {
    nodes: Vec<T>,
}

impl<T: Real> HalfLineGrid<T> {
    pub fn new(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 3 || nodes[0] != T::zero() {
            return Err(Error::InvalidInput("grid must start at 0 with at least 3 nodes".into()));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("grid nodes must increase strictly".into()));
        }
        Ok(Self { nodes })
    }

    pub fn uniform(s_max: T, cells: usize) -> Result<Self> {
        if !(s_max > T::zero()) || cells < 2 {
            return Err(Error::InvalidInput("uniform grid needs s_max > 0 and 2+ cells".into()));
        }
        let h = s_max / T::from_count(cells);
        let mut nodes: Vec<T> = (0..=cells).map(|i| h * T::from_count(i)).collect();
        nodes[cells] = s_max;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn s_max(&self) -> T {
        self.nodes[self.nodes.len() - 1]
    }

    /// Common spacing when the grid is uniform to rounding.
    pub fn uniform_spacing(&self) -> Option<T> {
        let n = self.nodes.len() - 1;
        let h = self.s_max() / T::from_count(n);
        let tol = h * T::lit(1e-9);
        self.nodes.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= tol).then_some(h)
    }

    /// Prefix of the grid ending at the last node not beyond `s_end`.
    pub fn prefix(&self, s_end: T) -> Result<Self> {
        let count = self.nodes.partition_point(|&s| s <= s_end);
        Self::new(self.nodes[..count].to_vec())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PainleveSolution<T> {
    branch: Branch,
    grid: HalfLineGrid<T>,
    y: Vec<T>,
    yp: Vec<T>,
    slope_at_origin: T,
    shooting_slope: Option<T>,
    tail_coefficient: T,
    residual_sup: T,
    far_field_order: usize,
}

impl<T: Real> PainleveSolution<T> {
    pub fn branch(&self) -> Branch {
        self.branch
    }
    pub fn grid(&self) -> &HalfLineGrid<T> {
        &self.grid
    }
    pub fn y(&self) -> &[T] {
        &self.y
    }
    pub fn yp(&self) -> &[T] {
        &self.yp
    }
    pub fn slope_at_origin(&self) -> T {
        self.slope_at_origin
    }
    /// Slope returned by the bisection stage, when the profile came from `shoot`.
    pub fn shooting_slope(&self) -> Option<T> {
        self.shooting_slope
    }
    pub fn tail_coefficient(&self) -> T {
        self.tail_coefficient
    }
    pub fn residual_sup(&self) -> T {
        self.residual_sup
    }
    pub fn s_max(&self) -> T {
        self.grid.s_max()
    }
    pub fn far_field_order(&self) -> usize {
        self.far_field_order
    }

    /// Location of the interior minimum of a Minus profile.
    pub fn minimum(&self) -> Option<(T, T)> {
        let s = self.grid.nodes();
        (1..self.yp.len()).find(|&i| self.yp[i - 1] < T::zero() && self.yp[i] >= T::zero()).map(|i| {
            let (a, b) = (self.yp[i - 1], self.yp[i]);
            let t = a / (a - b);
            let at = s[i - 1] + t * (s[i] - s[i - 1]);
            let (y, _, _) = evaluate(self, at).expect("inside grid");
            (at, y)
        })
    }

    /// Interpolated value; beyond the grid the far-field expansion is used.
    pub fn potential(&self, s: T) -> T {
        if s <= self.s_max() {
            evaluate(self, s).map(|v| v.0).unwrap_or_else(|_| far_field(s, 2))
        } else {
            far_field(s, 2)
        }
    }
}

/// Metadata record for export.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileMeta {
    pub branch: Branch,
    pub slope_at_origin: f64,
    pub tail_coefficient: f64,
    pub residual_sup: f64,
    pub s_max: f64,
}

impl<T: Real> From<&PainleveSolution<T>> for ProfileMeta {
    fn from(p: &PainleveSolution<T>) -> Self {
        Self {
            branch: p.branch,
            slope_at_origin: p.slope_at_origin.as_f64(),
            tail_coefficient: p.tail_coefficient.as_f64(),
            residual_sup: p.residual_sup.as_f64(),
            s_max: p.s_max().as_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Fate {
    /// Rises more than one unit above `sqrt(s)`; blows up afterwards.
    Overshoot,
    /// Turns over below `sqrt(s)` and falls into the oscillatory regime around `-sqrt(s)`.
    Undershoot,
}

fn painleve_rhs<T: Real>(s: T, y: &[T; 2]) -> [T; 2] {
    [y[1], T::lit(0.5) * (y[0] * y[0] - s)]
}

fn shooting_integrator<T: Real>() -> Dopri<T> {
    Dopri::new(T::lit(1e-12), T::lit(1e-14))
}

/// Classifies the trajectory leaving the origin with `slope`.
pub fn classify<T: Real>(slope: T) -> Result<Fate> {
    let mut fate = None;
    let mut prev = slope;
    let limit = T::lit(CLASSIFY_LIMIT);
    let run = shooting_integrator().run(painleve_rhs, T::zero(), [T::zero(), slope], limit, |s, y| {
        if y[0] - s.sqrt() > T::one() {
            fate = Some(Fate::Overshoot);
            return Control::Stop;
        }
        if prev > T::zero() && y[1] <= T::zero() {
            fate = Some(Fate::Undershoot);
            return Control::Stop;
        }
        prev = y[1];
        Control::Continue
    });
    match (run, fate) {
        (_, Some(f)) => Ok(f),
        (Err(b), None) => Err(Error::BlowupBeforeClassification { slope: slope.as_f64(), s: b.s.as_f64() }),
        (Ok(_), None) => Err(Error::ClassificationAmbiguous { slope: slope.as_f64(), s_end: CLASSIFY_LIMIT }),
    }
}

/// Bisection on trajectory fate. Returns the midpoint of the final bracket.
pub fn bisect_slope<T: Real>(bracket: (T, T), tol: T) -> Result<T> {
    let (mut lo, mut hi) = if bracket.0 <= bracket.1 { bracket } else { (bracket.1, bracket.0) };
    if !(tol > T::zero()) {
        return Err(Error::InvalidInput("bisection tolerance must be positive".into()));
    }
    let f_lo = classify(lo)?;
    let f_hi = classify(hi)?;
    if f_lo == f_hi {
        return Err(Error::BracketNotSeparating { lo: lo.as_f64(), hi: hi.as_f64(), fate: format!("{f_lo:?}") });
    }
    let half = T::lit(0.5);
    while hi - lo > tol {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        match classify(mid) {
            Ok(f) if f == f_lo => lo = mid,
            Ok(_) => hi = mid,
            // Fate undecidable within the window: the slope is as close as the integrator can resolve.
            Err(Error::ClassificationAmbiguous { .. }) => return Ok(mid),
            Err(e) => return Err(e),
        }
    }
    Ok((lo + hi) * half)
}

/// Fate changes along an evenly sampled slope interval.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeScan<T> {
    pub samples: usize,
    pub range: (T, T),
    /// Sample pairs straddling a change of fate.
    pub transitions: Vec<(T, T)>,
}

/// Classifies `n` equally spaced slopes on `range` (endpoints included).
pub fn scan_slopes<T: Real>(range: (T, T), n: usize) -> Result<SlopeScan<T>> {
    if n < 2 {
        return Err(Error::InvalidInput("scan needs at least two samples".into()));
    }
    let step = (range.1 - range.0) / T::from_count(n - 1);
    let slopes: Vec<T> = (0..n).map(|i| range.0 + step * T::from_count(i)).collect();
    let fates = slopes.par_iter().map(|&a| classify(a)).collect::<Result<Vec<_>>>()?;
    let transitions = (1..n).filter(|&i| fates[i] != fates[i - 1]).map(|i| (slopes[i - 1], slopes[i])).collect();
    Ok(SlopeScan { samples: n, range, transitions })
}

/// Bisection for the connecting slope followed by global collocation on `[0, s_max]`.
pub fn shoot<T: Real>(branch: Branch, s_max: T, slope_bracket: (T, T), tol: T) -> Result<PainleveSolution<T>> {
    let slope = bisect_slope(slope_bracket, tol)?;
    let seed_end = s_max.min(T::lit(SEED_END));
    let h = T::lit(DEFAULT_SPACING);
    let cells = (seed_end / h).round().to_usize().unwrap_or(1).max(2);
    let seed_grid = HalfLineGrid::uniform(seed_end, cells)?;
    let (y, yp) = integrate_on(&seed_grid, slope)?;
    let seed = move |s: T| -> T {
        if s <= seed_end {
            let i = locate(seed_grid.nodes(), s);
            let nodes = seed_grid.nodes();
            let hh = nodes[i + 1] - nodes[i];
            let t = (s - nodes[i]) / hh;
            let c = |j: usize| [y[j], yp[j], T::lit(0.5) * (y[j] * y[j] - nodes[j])];
            quintic_hermite(hh, c(i), c(i + 1), t)[0]
        } else {
            far_field(s, 1)
        }
    };
    collocate(branch, &seed, s_max, 1, T::lit(DEFAULT_SPACING), Some(slope))
}

/// Integrates forward node by node on `grid` starting from slope `slope`.
fn integrate_on<T: Real>(grid: &HalfLineGrid<T>, slope: T) -> Result<(Vec<T>, Vec<T>)> {
    let nodes = grid.nodes();
    let ode = shooting_integrator();
    let mut y = vec![T::zero(); nodes.len()];
    let mut yp = vec![T::zero(); nodes.len()];
    yp[0] = slope;
    let mut state = [T::zero(), slope];
    for i in 1..nodes.len() {
        let end = ode
            .run(painleve_rhs, nodes[i - 1], state, nodes[i], |_, _| Control::Continue)
            .map_err(|b| Error::BlowupBeforeClassification { slope: slope.as_f64(), s: b.s.as_f64() })?;
        state = end.y;
        y[i] = state[0];
        yp[i] = state[1];
    }
    Ok((y, yp))
}

/// Recomputes a profile on `[0, s_max]` by Newton–Numerov collocation seeded
/// with `seed` (trusted up to `min(15, seed.s_max)`, far field beyond).
pub fn refine_collocation<T: Real>(seed: &PainleveSolution<T>, s_max: T, far_field_order: usize) -> Result<PainleveSolution<T>> {
    let trust = seed.s_max().min(T::lit(15.0));
    let f = |s: T| if s <= trust { seed.potential(s) } else { far_field(s, far_field_order.max(1)) };
    collocate(seed.branch, &f, s_max, far_field_order, T::lit(DEFAULT_SPACING), seed.shooting_slope)
}

/// Like [`refine_collocation`] with an explicit Numerov spacing.
pub fn refine_with_spacing<T: Real>(seed: &PainleveSolution<T>, s_max: T, far_field_order: usize, spacing: T) -> Result<PainleveSolution<T>> {
    let trust = seed.s_max().min(T::lit(15.0));
    let f = |s: T| if s <= trust { seed.potential(s) } else { far_field(s, far_field_order.max(1)) };
    collocate(seed.branch, &f, s_max, far_field_order, spacing, seed.shooting_slope)
}

/// Solves `y'' = g` with Numerov's stencil on a uniform grid by Newton iteration.
/// `g` returns the right-hand side and its derivative in `y` at node `i`.
pub(crate) fn numerov_newton<T, G>(h: T, y: &mut [T], g: G) -> Result<usize>
where
    T: Real,
    G: Fn(usize, T) -> (T, T),
{
    let n = y.len() - 1;
    let c = h * h / T::lit(12.0);
    let ten = T::lit(10.0);
    let m = n - 1;
    let mut trace = Vec::new();
    for it in 0..60 {
        let gv: Vec<(T, T)> = (0..=n).map(|i| g(i, y[i])).collect();
        let mut rhs = vec![T::zero(); m];
        let mut diag = vec![T::zero(); m];
        let mut sub = vec![T::zero(); m.saturating_sub(1)];
        let mut sup = vec![T::zero(); m.saturating_sub(1)];
        for i in 1..n {
            let r = y[i + 1] - T::lit(2.0) * y[i] + y[i - 1] - c * (gv[i + 1].0 + ten * gv[i].0 + gv[i - 1].0);
            rhs[i - 1] = -r;
            diag[i - 1] = -T::lit(2.0) - ten * c * gv[i].1;
            if i > 1 {
                sub[i - 2] = T::one() - c * gv[i - 1].1;
            }
            if i < n - 1 {
                sup[i - 1] = T::one() - c * gv[i + 1].1;
            }
        }
        let delta = solve_tridiagonal(&sub, &diag, &sup, &rhs).ok_or_else(|| Error::NewtonDiverged { trace: trace.clone() })?;
        let mut step = T::zero();
        let mut scale = T::one();
        for i in 1..n {
            y[i] += delta[i - 1];
            step = step.max(delta[i - 1].abs());
            scale = scale.max(y[i].abs());
        }
        trace.push(step.as_f64());
        if !step.is_finite() {
            return Err(Error::NewtonDiverged { trace });
        }
        if step <= T::lit(1e-13) * scale {
            return Ok(it + 1);
        }
    }
    Err(Error::NewtonDiverged { trace })
}

/// Fourth-order node derivatives on a uniform grid given `y` and `g = y''`.
pub(crate) fn numerov_slopes<T: Real>(h: T, y: &[T], g: &[T]) -> Vec<T> {
    let n = y.len() - 1;
    let mut d = vec![T::zero(); n + 1];
    let two = T::lit(2.0);
    let twelve = T::lit(12.0);
    let tf = T::lit(24.0);
    for i in 1..n {
        d[i] = (y[i + 1] - y[i - 1]) / (two * h) - h * (g[i + 1] - g[i - 1]) / twelve;
    }
    d[0] = (y[1] - y[0]) / h - h * (T::lit(7.0) * g[0] + T::lit(6.0) * g[1] - g[2]) / tf;
    d[n] = (y[n] - y[n - 1]) / h + h * (T::lit(7.0) * g[n] + T::lit(6.0) * g[n - 1] - g[n - 2]) / tf;
    d
}

fn collocate<T: Real>(
    branch: Branch,
    seed: &dyn Fn(T) -> T,
    s_max: T,
    far_field_order: usize,
    spacing: T,
    shooting_slope: Option<T>,
) -> Result<PainleveSolution<T>> {
    if s_max < T::lit(MIN_S_MAX) {
        return Err(Error::InvalidInput(format!("s_max must be at least {MIN_S_MAX}")));
    }
    let cells = (s_max / spacing).round().to_usize().unwrap_or(0).max(16);
    let grid = HalfLineGrid::uniform(s_max, cells)?;
    let h = grid.uniform_spacing().expect("uniform by construction");
    let s = grid.nodes().to_vec();
    let mut y: Vec<T> = s.iter().map(|&v| seed(v)).collect();
    y[0] = T::zero();
    y[cells] = far_field(s_max, far_field_order.max(1));
    let half = T::lit(0.5);
    numerov_newton(h, &mut y, |i, v| (half * (v * v - s[i]), v))?;
    let g: Vec<T> = y.iter().zip(&s).map(|(&v, &si)| half * (v * v - si)).collect();
    let yp = numerov_slopes(h, &y, &g);
    finish(branch, grid, y, yp, far_field_order, shooting_slope)
}

fn finish<T: Real>(
    branch: Branch,
    grid: HalfLineGrid<T>,
    y: Vec<T>,
    yp: Vec<T>,
    far_field_order: usize,
    shooting_slope: Option<T>,
) -> Result<PainleveSolution<T>> {
    let s = grid.nodes();
    let half = T::lit(0.5);
    // residual of the ODE at cell midpoints of the Hermite representation
    let mut residual_sup = T::zero();
    for i in 0..s.len() - 1 {
        let h = s[i + 1] - s[i];
        let c = |j: usize| [y[j], yp[j], half * (y[j] * y[j] - s[j])];
        let p = quintic_hermite(h, c(i), c(i + 1), half);
        let mid = s[i] + half * h;
        let r = T::lit(2.0) * p[2] - p[0] * p[0] + mid;
        residual_sup = residual_sup.max(r.abs());
    }
    // tail fit of (Y - sqrt s) s^2 = c + b s^{-5/2} on [20, s_max]
    let (xs, qs): (Vec<T>, Vec<T>) =
        s.iter().zip(&y).filter(|(&si, _)| si >= T::lit(20.0)).map(|(&si, &yi)| (si.powf(T::lit(-2.5)), (yi - si.sqrt()) * si * si)).unzip();
    let (_, tail_coefficient, _) = linear_fit(&xs, &qs);
    let sol = PainleveSolution { branch, slope_at_origin: yp[0], grid, y, yp, shooting_slope, tail_coefficient, residual_sup, far_field_order };
    check_invariants(&sol)?;
    Ok(sol)
}

fn check_invariants<T: Real>(sol: &PainleveSolution<T>) -> Result<()> {
    let bad = |m: &str| Err(Error::InvariantViolated(format!("{:?}: {m}", sol.branch)));
    if sol.y[0] != T::zero() {
        return bad("y(0) != 0");
    }
    match sol.branch {
        Branch::Plus => {
            if sol.yp.iter().any(|&d| d <= T::zero()) {
                return bad("slope not positive everywhere");
            }
        }
        Branch::Minus => {
            if sol.slope_at_origin >= T::zero() {
                return bad("slope at origin not negative");
            }
            let minima = (1..sol.yp.len()).filter(|&i| sol.yp[i - 1] < T::zero() && sol.yp[i] >= T::zero()).count();
            let maxima = (1..sol.yp.len()).filter(|&i| sol.yp[i - 1] > T::zero() && sol.yp[i] <= T::zero()).count();
            if minima != 1 || maxima != 0 {
                return bad("profile does not have exactly one interior minimum");
            }
        }
    }
    if (sol.tail_coefficient + T::lit(0.25)).abs() > T::lit(1e-3) {
        return bad("tail coefficient away from -1/4");
    }
    if sol.residual_sup > T::lit(1e-8) {
        return bad("collocation residual above 1e-8");
    }
    Ok(())
}

/// Value, slope and `(y^2 - s)/2` at `s`.
pub fn evaluate<T: Real>(sol: &PainleveSolution<T>, s: T) -> Result<(T, T, T)> {
    let nodes = sol.grid.nodes();
    let hi = sol.s_max();
    if !(s >= T::zero() && s <= hi) {
        return Err(Error::OutOfDomain { at: s.as_f64(), lo: 0.0, hi: hi.as_f64() });
    }
    let i = locate(nodes, s);
    let h = nodes[i + 1] - nodes[i];
    let t = (s - nodes[i]) / h;
    let half = T::lit(0.5);
    let c = |j: usize| [sol.y[j], sol.yp[j], half * (sol.y[j] * sol.y[j] - nodes[j])];
    let p = quintic_hermite(h, c(i), c(i + 1), t);
    Ok((p[0], p[1], half * (p[0] * p[0] - s)))
}

/// `phi = Y+ - Y-` together with slope and ODE curvature on the shared grid.
#[derive(Debug, Clone, Serialize)]
pub struct DifferenceProfile<T> {
    grid: HalfLineGrid<T>,
    phi: Vec<T>,
    phip: Vec<T>,
    phipp: Vec<T>,
    residual_sup: T,
}

impl<T: Real> DifferenceProfile<T> {
    /// Wraps sampled data; `phipp` is the curvature used for interpolation.
    pub fn from_samples(grid: HalfLineGrid<T>, phi: Vec<T>, phip: Vec<T>, phipp: Vec<T>) -> Result<Self> {
        let n = grid.len();
        if phi.len() != n || phip.len() != n || phipp.len() != n {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, phi, phip, phipp, residual_sup: T::zero() })
    }

    pub fn grid(&self) -> &HalfLineGrid<T> {
        &self.grid
    }
    pub fn phi(&self) -> &[T] {
        &self.phi
    }
    pub fn phip(&self) -> &[T] {
        &self.phip
    }
    pub fn phipp(&self) -> &[T] {
        &self.phipp
    }
    /// Sup of `2 phi'' - 2 Y+ phi + phi^2` at cell midpoints.
    pub fn residual_sup(&self) -> T {
        self.residual_sup
    }

    /// Multiplies the profile by a constant (diagnostic inputs that are not solutions).
    pub fn scaled(&self, c: T) -> Self {
        let m = |v: &Vec<T>| v.iter().map(|&x| x * c).collect();
        Self { grid: self.grid.clone(), phi: m(&self.phi), phip: m(&self.phip), phipp: m(&self.phipp), residual_sup: T::nan() }
    }

    /// Restriction to the nodes `s <= s_end`.
    pub fn truncated(&self, s_end: T) -> Result<Self> {
        let grid = self.grid.prefix(s_end)?;
        let n = grid.len();
        Ok(Self {
            grid,
            phi: self.phi[..n].to_vec(),
            phip: self.phip[..n].to_vec(),
            phipp: self.phipp[..n].to_vec(),
            residual_sup: self.residual_sup,
        })
    }

    /// Hermite interpolation `(phi, phi')` at `s`; zero beyond the grid.
    pub fn evaluate(&self, s: T) -> (T, T) {
        let nodes = self.grid.nodes();
        if s > self.grid.s_max() || s < T::zero() {
            return (T::zero(), T::zero());
        }
        let i = locate(nodes, s);
        let h = nodes[i + 1] - nodes[i];
        let c = |j: usize| [self.phi[j], self.phip[j], self.phipp[j]];
        let p = quintic_hermite(h, c(i), c(i + 1), (s - nodes[i]) / h);
        (p[0], p[1])
    }
}

/// Builds `Y+ - Y-`, polished by solving `phi'' = Y+ phi - phi^2/2`,
/// `phi(0) = phi(s_max) = 0` so that the super-exponential tail is resolved
/// below the cancellation noise of the raw difference.
pub fn difference_profile<T: Real>(plus: &PainleveSolution<T>, minus: &PainleveSolution<T>) -> Result<DifferenceProfile<T>> {
    if plus.grid != minus.grid {
        return Err(Error::GridMismatch);
    }
    if plus.branch != Branch::Plus || minus.branch != Branch::Minus {
        return Err(Error::InvalidInput("difference profile needs (Plus, Minus)".into()));
    }
    let grid = plus.grid.clone();
    let h = grid.uniform_spacing().ok_or_else(|| Error::InvalidInput("difference profile needs a uniform grid".into()))?;
    let yp = &plus.y;
    let mut phi: Vec<T> = plus.y.iter().zip(&minus.y).map(|(a, b)| *a - *b).collect();
    let n = phi.len() - 1;
    phi[0] = T::zero();
    phi[n] = T::zero();
    let half = T::lit(0.5);
    numerov_newton(h, &mut phi, |i, v| (yp[i] * v - half * v * v, yp[i] - v))?;
    let phipp: Vec<T> = phi.iter().zip(yp).map(|(&v, &y)| y * v - half * v * v).collect();
    let phip = numerov_slopes(h, &phi, &phipp);
    let s = grid.nodes();
    let mut residual_sup = T::zero();
    for i in 0..n {
        let c = |j: usize| [phi[j], phip[j], phipp[j]];
        let p = quintic_hermite(h, c(i), c(i + 1), half);
        let (ym, _, _) = evaluate(plus, s[i] + half * h)?;
        let r = T::lit(2.0) * p[2] - T::lit(2.0) * ym * p[0] + p[0] * p[0];
        residual_sup = residual_sup.max(r.abs());
    }
    if phi[1..n].iter().any(|&v| v <= T::zero()) {
        return Err(Error::InvariantViolated("difference profile not positive".into()));
    }
    Ok(DifferenceProfile { grid, phi, phip, phipp, residual_sup })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn far_field_orders() {
        let s = 36.0_f64;
        assert_eq!(far_field(s, 0), 6.0);
        assert!((far_field(s, 1) - (6.0 - 0.25 / 1296.0)).abs() < 1e-15);
        assert!(far_field(s, 2) < far_field(s, 1));
    }

    #[test]
    fn classification_brackets() {
        assert_eq!(classify(0.0_f64).unwrap(), Fate::Undershoot);
        assert_eq!(classify(2.0_f64).unwrap(), Fate::Overshoot);
        assert_eq!(classify(-2.0_f64).unwrap(), Fate::Undershoot);
        assert_eq!(classify(-5.0_f64).unwrap(), Fate::Overshoot);
    }

    #[test]
    fn bracket_must_separate() {
        let e = bisect_slope((0.0_f64, 0.5), 1e-8).unwrap_err();
        assert!(matches!(e, Error::BracketNotSeparating { .. }));
    }

    #[test]
    fn grid_rejects_bad_nodes() {
        assert!(HalfLineGrid::new(vec![0.1_f64, 0.2, 0.3]).is_err());
        assert!(HalfLineGrid::new(vec![0.0_f64, 0.2, 0.2]).is_err());
        let g = HalfLineGrid::uniform(40.0_f64, 8000).unwrap();
        assert_eq!(g.len(), 8001);
        assert!(g.uniform_spacing().is_some());
    }

    #[test]
    fn numerov_slopes_are_fourth_order() {
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let x: Vec<f64> = (0..=n).map(|i| i as f64 * h).collect();
            let y: Vec<f64> = x.iter().map(|v| v.sin()).collect();
            let g: Vec<f64> = x.iter().map(|v| -v.sin()).collect();
            let d = numerov_slopes(h, &y, &g);
            d.iter().zip(&x).map(|(a, v)| (a - v.cos()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(20) / err(40);
        assert!(ratio > 14.0, "ratio {ratio}");
    }
}
