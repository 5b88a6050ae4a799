//! Glued approximation `u_ap` built from the two inner profiles and the
//! modified outer solution, with analytic derivatives and residual.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::painleve::{evaluate, Branch, PainleveSolution};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeConfig<T> {
    #[serde(rename = "A")]
    pub a: T,
    /// Half-width of the outer correction cutoff in `x`.
    pub delta: T,
    /// Width of the inner/outer interpolation cutoff in the stretched variable.
    pub inner_width: T,
    /// Inner-zone constant: the zone is `1 - |x| <= D (2A)^{-1/5}`.
    #[serde(rename = "D")]
    pub big_d: T,
    pub s_max: T,
}

impl<T: Real> CompositeConfig<T> {
    pub const DEFAULT_DELTA: f64 = 0.45;
    pub const DEFAULT_INNER_WIDTH: f64 = 4.0;
    pub const DEFAULT_BIG_D: f64 = 1.5;

    pub fn new(a: T) -> Self {
        Self {
            a,
            delta: T::lit(Self::DEFAULT_DELTA),
            inner_width: T::lit(Self::DEFAULT_INNER_WIDTH),
            big_d: T::lit(Self::DEFAULT_BIG_D),
            s_max: T::lit(crate::painleve::DEFAULT_S_MAX),
        }
    }

    /// Stretching factor `(2A)^{1/5}`.
    pub fn k(&self) -> T {
        (T::lit(2.0) * self.a).powf(T::lit(0.2))
    }

    /// Checks that every region is nonempty and every stretched evaluation stays on the profile grid.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInfeasible(m));
        if !(self.a > T::zero()) || !self.a.is_finite() {
            return bad(format!("A must be positive, got {}", self.a));
        }
        if !(self.delta > T::zero() && self.delta < T::lit(0.5)) {
            return bad(format!("delta must lie in (0, 1/2), got {}", self.delta));
        }
        if !(self.inner_width > T::zero()) || !(self.big_d > T::zero()) {
            return bad("inner_width and D must be positive".into());
        }
        let k = self.k();
        if self.big_d / k >= self.delta {
            return bad(format!("D (2A)^(-1/5) = {} is not below delta = {}", self.big_d / k, self.delta));
        }
        if self.inner_width >= k {
            return bad(format!("inner_width = {} must be below (2A)^(1/5) = {}", self.inner_width, k));
        }
        let reach = (T::lit(2.0) * self.delta * k).max(T::lit(2.0) * self.inner_width);
        if reach > self.s_max {
            return bad(format!("stretched reach {reach} exceeds s_max = {}", self.s_max));
        }
        Ok(())
    }
}

/// Mesh refinement parameters. Spacing is `1 / (layer_cells k)` for
/// `k (1 - |x|) <= layer_extent`, then grows geometrically by `growth` up to
/// `1 / interior_cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshSpec<T> {
    pub layer_cells: usize,
    pub layer_extent: T,
    pub growth: T,
    pub interior_cells: usize,
}

impl<T: Real> Default for MeshSpec<T> {
    fn default() -> Self {
        Self { layer_cells: 2048, layer_extent: T::lit(12.0), growth: T::lit(0.02), interior_cells: 2048 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mesh<T> {
    nodes: Vec<T>,
    h_min: T,
    h_max: T,
}

impl<T: Real> Mesh<T> {
    pub fn from_nodes(nodes: Vec<T>) -> Result<Self> {
        if nodes.len() < 3 || nodes[0] != -T::one() || nodes[nodes.len() - 1] != T::one() {
            return Err(Error::InvalidInput("mesh must start at -1, end at 1 and have 3+ nodes".into()));
        }
        let mut h_min = T::infinity();
        let mut h_max = T::zero();
        for w in nodes.windows(2) {
            let h = w[1] - w[0];
            if !(h > T::zero()) {
                return Err(Error::InvalidInput("mesh nodes must increase strictly".into()));
            }
            h_min = h_min.min(h);
            h_max = h_max.max(h);
        }
        Ok(Self { nodes, h_min, h_max })
    }

    pub fn uniform(cells: usize) -> Result<Self> {
        let cells = cells.max(2);
        let h = T::lit(2.0) / T::from_count(cells);
        let mut nodes: Vec<T> = (0..=cells).map(|i| -T::one() + h * T::from_count(i)).collect();
        nodes[cells] = T::one();
        Self::from_nodes(nodes)
    }

    /// Symmetric mesh refined toward both endpoints for layer width `1/k`.
    pub fn graded(k: T, spec: &MeshSpec<T>) -> Result<Self> {
        let h_min = T::one() / (T::from_count(spec.layer_cells.max(1)) * k);
        let h_max = T::one() / T::from_count(spec.interior_cells.max(1));
        if h_min > h_max {
            return Self::uniform(2 * spec.interior_cells);
        }
        let fine_end = spec.layer_extent / k;
        // spacings from the left endpoint to the midpoint: a fine block, then
        // geometric growth capped at h_max
        let fine_cells = (fine_end / h_min).ceil().to_usize().unwrap_or(usize::MAX);
        let mut steps = Vec::new();
        let mut total = T::zero();
        while steps.len() < fine_cells && total + h_min < T::one() {
            steps.push(h_min);
            total += h_min;
        }
        let fine_len = total;
        let mut h = h_min;
        loop {
            if steps.len() >= fine_cells {
                h = (h * (T::one() + spec.growth)).min(h_max);
            }
            if total + T::lit(0.5) * h >= T::one() {
                break;
            }
            steps.push(h);
            total += h;
        }
        // stretch the cells after the fine block so the half mesh closes at 0
        // without a stub cell; the fine block is stretched only if it is all there is
        let split = if steps.len() > fine_cells { fine_cells } else { 0 };
        let fixed = if split == 0 { T::zero() } else { fine_len };
        let loose: T = steps[split..].iter().copied().sum();
        let scale = (T::one() - fixed) / loose;
        for s in &mut steps[split..] {
            *s *= scale;
        }
        let mut d = vec![T::zero()];
        for s in &steps {
            let last = d[d.len() - 1];
            d.push(last + *s);
        }
        let mut nodes: Vec<T> = d.iter().map(|&v| v - T::one()).collect();
        let m = nodes.len() - 1;
        nodes[m] = T::zero();
        for i in (0..m).rev() {
            nodes.push(T::one() - d[i]);
        }
        let n = nodes.len() - 1;
        nodes[0] = -T::one();
        nodes[n] = T::one();
        Self::from_nodes(nodes)
    }

    /// Inserts every cell midpoint, halving all spacings.
    pub fn refined(&self) -> Self {
        let mut nodes = Vec::with_capacity(2 * self.nodes.len() - 1);
        for w in self.nodes.windows(2) {
            nodes.push(w[0]);
            nodes.push(T::lit(0.5) * (w[0] + w[1]));
        }
        nodes.push(T::one());
        Self::from_nodes(nodes).expect("refinement keeps ordering")
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
    pub fn h_min(&self) -> T {
        self.h_min
    }
    pub fn h_max(&self) -> T {
        self.h_max
    }

    /// True when the nodes are mirror images about 0 (with a node at 0).
    pub fn is_symmetric(&self) -> bool {
        let n = self.nodes.len();
        if n.is_multiple_of(2) {
            return false;
        }
        let tol = T::lit(1e-14);
        (0..n / 2).all(|i| (self.nodes[i] + self.nodes[n - 1 - i]).abs() <= tol) && self.nodes[n / 2].abs() <= tol
    }

    /// Largest spacing among cells touching the zone `1 - |x| <= width`.
    pub fn max_spacing_within(&self, width: T) -> T {
        self.nodes
            .windows(2)
            .filter(|w| T::one() - w[0].abs() <= width || T::one() - w[1].abs() <= width)
            .map(|w| w[1] - w[0])
            .fold(T::zero(), T::max)
    }
}

/// Quintic smoothstep cutoff `n_d(r)` and its first two derivatives in `r`.
pub fn cutoff_eval<T: Real>(d: T, r: T) -> (T, T, T) {
    let a = r.abs();
    if a <= d {
        return (T::one(), T::zero(), T::zero());
    }
    if a >= T::lit(2.0) * d {
        return (T::zero(), T::zero(), T::zero());
    }
    let t = (a - d) / d;
    let t2 = t * t;
    let t3 = t2 * t;
    let n = T::one() - (T::lit(6.0) * t3 * t2 - T::lit(15.0) * t2 * t2 + T::lit(10.0) * t3);
    let dn = -(T::lit(30.0) * t2 * t2 - T::lit(60.0) * t3 + T::lit(30.0) * t2) / d;
    let ddn = -(T::lit(120.0) * t3 - T::lit(180.0) * t2 + T::lit(60.0) * t) / (d * d);
    let sign = if r < T::zero() { -T::one() } else { T::one() };
    (n, sign * dn, ddn)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// Rescaled profile `(2A)^{2/5} Y((2A)^{1/5}(1 +- x))` with derivatives in `x`.
pub fn inner_eval<T: Real>(cfg: &CompositeConfig<T>, side: Side, profile: &PainleveSolution<T>, x: T) -> Result<(T, T, T)> {
    let k = cfg.k();
    let (s, sign) = match side {
        Side::Left => (k * (T::one() + x), T::one()),
        Side::Right => (k * (T::one() - x), -T::one()),
    };
    let (y, yp, ypp) = evaluate(profile, s)?;
    let k2 = k * k;
    Ok((k2 * y, sign * k2 * k * yp, k2 * k2 * ypp))
}

/// Radicand `R` of the modified outer solution and its first two derivatives.
fn radicand<T: Real>(cfg: &CompositeConfig<T>, y: &PainleveSolution<T>, z: &PainleveSolution<T>, x: T) -> Result<[T; 3]> {
    let k = cfg.k();
    let k4 = k.powi(4);
    let a = cfg.a;
    let two = T::lit(2.0);
    let mut r = [a * (T::one() - x * x), -two * a * x, -two * a];
    // left correction (s - Y^2) n_delta(1 + x)
    let (nl, nlp, nlpp) = cutoff_eval(cfg.delta, T::one() + x);
    if nl > T::zero() {
        let s = k * (T::one() + x);
        let (yv, yd, ydd) = evaluate(y, s)?;
        let g = s - yv * yv;
        let gp = k * (T::one() - two * yv * yd);
        let gpp = k * k * (-two * yd * yd - two * yv * ydd);
        r[0] -= k4 * g * nl;
        r[1] -= k4 * (gp * nl + g * nlp);
        r[2] -= k4 * (gpp * nl + two * gp * nlp + g * nlpp);
    }
    let (nr, nrp_raw, nrpp) = cutoff_eval(cfg.delta, T::one() - x);
    if nr > T::zero() {
        let nrp = -nrp_raw;
        let t = k * (T::one() - x);
        let (zv, zd, zdd) = evaluate(z, t)?;
        let h = t - zv * zv;
        let hp = -k * (T::one() - two * zv * zd);
        let hpp = k * k * (-two * zd * zd - two * zv * zdd);
        r[0] -= k4 * h * nr;
        r[1] -= k4 * (hp * nr + h * nrp);
        r[2] -= k4 * (hpp * nr + two * hp * nrp + h * nrpp);
    }
    Ok(r)
}

/// Modified outer solution `sqrt(R)` with exact chain-rule derivatives.
pub fn outer_eval<T: Real>(cfg: &CompositeConfig<T>, y: &PainleveSolution<T>, z: &PainleveSolution<T>, x: T) -> Result<(T, T, T)> {
    let [r, rp, rpp] = radicand(cfg, y, z, x)?;
    if !(r > T::zero()) {
        if r == T::zero() && (x.abs() == T::one()) {
            return Ok((T::zero(), T::zero(), T::zero()));
        }
        return Err(Error::NegativeRadicand { x: x.as_f64(), value: r.as_f64() });
    }
    let u = r.sqrt();
    let up = rp / (T::lit(2.0) * u);
    let upp = rpp / (T::lit(2.0) * u) - rp * rp / (T::lit(4.0) * u * u * u);
    Ok((u, up, upp))
}

/// Interpolation weights of the two inner solutions with derivatives.
/// The product form reduces to the plain cutoffs whenever the two windows
/// do not overlap and keeps the outer weight `(1 - cL)(1 - cR)` nonnegative otherwise.
fn weights<T: Real>(cfg: &CompositeConfig<T>, x: T) -> ([T; 3], [T; 3], [T; 3]) {
    let k = cfg.k();
    let (cl, clp, clpp) = cutoff_eval(cfg.inner_width, k * (T::one() + x));
    let (cr, crp, crpp) = cutoff_eval(cfg.inner_width, k * (T::one() - x));
    let cl = [cl, k * clp, k * k * clpp];
    let cr = [cr, -k * crp, k * k * crpp];
    let half = T::lit(0.5);
    let wl = [
        cl[0] * (T::one() - half * cr[0]),
        cl[1] * (T::one() - half * cr[0]) - half * cl[0] * cr[1],
        cl[2] * (T::one() - half * cr[0]) - cl[1] * cr[1] - half * cl[0] * cr[2],
    ];
    let wr = [
        cr[0] * (T::one() - half * cl[0]),
        cr[1] * (T::one() - half * cl[0]) - half * cr[0] * cl[1],
        cr[2] * (T::one() - half * cl[0]) - cr[1] * cl[1] - half * cr[0] * cl[2],
    ];
    (wl, wr, [cl[0], cr[0], T::zero()])
}

/// `u_ap`, `u_ap'`, `u_ap''` at one point.
pub fn composite_eval<T: Real>(cfg: &CompositeConfig<T>, y: &PainleveSolution<T>, z: &PainleveSolution<T>, x: T) -> Result<[T; 3]> {
    let (wl, wr, raw) = weights(cfg, x);
    let (cl, cr) = (raw[0], raw[1]);
    let outer = if cl < T::one() && cr < T::one() {
        let (u, up, upp) = outer_eval(cfg, y, z, x)?;
        [u, up, upp]
    } else {
        [T::zero(); 3]
    };
    let mut u = outer;
    let two = T::lit(2.0);
    if wl[0] > T::zero() || wl[1] != T::zero() || wl[2] != T::zero() {
        let (a, b, c) = inner_eval(cfg, Side::Left, y, x)?;
        let d = [a - outer[0], b - outer[1], c - outer[2]];
        u[0] += wl[0] * d[0];
        u[1] += wl[1] * d[0] + wl[0] * d[1];
        u[2] += wl[2] * d[0] + two * wl[1] * d[1] + wl[0] * d[2];
    }
    if wr[0] > T::zero() || wr[1] != T::zero() || wr[2] != T::zero() {
        let (a, b, c) = inner_eval(cfg, Side::Right, z, x)?;
        let d = [a - outer[0], b - outer[1], c - outer[2]];
        u[0] += wr[0] * d[0];
        u[1] += wr[1] * d[0] + wr[0] * d[1];
        u[2] += wr[2] * d[0] + two * wr[1] * d[1] + wr[0] * d[2];
    }
    Ok(u)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompositeSolution<T> {
    pub config: CompositeConfig<T>,
    pub branches: (Branch, Branch),
    pub mesh: Mesh<T>,
    pub u: Vec<T>,
    pub up: Vec<T>,
    pub upp: Vec<T>,
    #[serde(rename = "E")]
    pub e: Vec<T>,
}

/// Evaluates `u_ap` and its residual `2u'' - u^2 + A(1 - x^2)` on `mesh`.
pub fn assemble<T: Real>(cfg: &CompositeConfig<T>, y: &PainleveSolution<T>, z: &PainleveSolution<T>, mesh: &Mesh<T>) -> Result<CompositeSolution<T>> {
    cfg.validate()?;
    let reach = (T::lit(2.0) * cfg.delta * cfg.k()).max(T::lit(2.0) * cfg.inner_width);
    if y.s_max() < reach || z.s_max() < reach {
        return Err(Error::ConfigInfeasible("profiles do not cover the stretched reach".into()));
    }
    let n = mesh.len();
    let mut u = Vec::with_capacity(n);
    let mut up = Vec::with_capacity(n);
    let mut upp = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for &x in mesh.nodes() {
        let v = composite_eval(cfg, y, z, x)?;
        u.push(v[0]);
        up.push(v[1]);
        upp.push(v[2]);
        e.push(T::lit(2.0) * v[2] - v[0] * v[0] + cfg.a * (T::one() - x * x));
    }
    let last = n - 1;
    u[0] = T::zero();
    u[last] = T::zero();
    Ok(CompositeSolution { config: *cfg, branches: (y.branch(), z.branch()), mesh: mesh.clone(), u, up, upp, e })
}

/// Per-term suprema of the residual split on the left interpolation window.
#[derive(Debug, Clone, Serialize)]
pub struct LedgerTerms {
    pub outer_residual: f64,
    pub chi_second: f64,
    pub chi_first: f64,
    pub chi_zeroth: f64,
    pub nonlinear: f64,
    pub residual: f64,
    /// `sup|E|` over the sum of the term suprema (in `(0, 1]`).
    pub ledger_ratio: f64,
    /// Largest pointwise mismatch between `E` and the sum of the terms.
    pub identity_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualRegionReport {
    #[serde(rename = "A")]
    pub a: f64,
    pub delta: f64,
    #[serde(rename = "D")]
    pub big_d: f64,
    pub inner_width: f64,
    pub e_sup: f64,
    pub boundary_norm_sup: f64,
    pub middle_norm_sup: f64,
    pub matching_sup_0: Option<f64>,
    pub matching_sup_1: Option<f64>,
    pub matching_sup_2: Option<f64>,
    pub lower_bound_c: f64,
    /// `sup |u_ap - sqrt(A(1-x^2))|` over the exact-middle zone, when nonempty.
    pub exact_middle_gap: Option<f64>,
    pub ledger: Option<LedgerTerms>,
}

/// Where `u_ap` is a single inner solution (left or right), in stretched terms.
fn pure_inner<T: Real>(cfg: &CompositeConfig<T>, x: T) -> bool {
    let k = cfg.k();
    let w = cfg.inner_width;
    let s = k * (T::one() + x);
    let t = k * (T::one() - x);
    (s <= w && t >= T::lit(2.0) * w) || (t <= w && s >= T::lit(2.0) * w)
}

/// Region-normalized residual suprema plus the matching and lower-bound diagnostics.
pub fn residual_region_report<T: Real>(sol: &CompositeSolution<T>, y: &PainleveSolution<T>, z: &PainleveSolution<T>) -> Result<ResidualRegionReport> {
    let cfg = &sol.config;
    let a = cfg.a;
    let k = cfg.k();
    let x = sol.mesh.nodes();
    let n = x.len();
    let mut e_sup = T::zero();
    let mut bsup = T::zero();
    let mut msup = T::zero();
    for i in 0..n {
        e_sup = e_sup.max(sol.e[i].abs());
        // one-sided limit at the endpoints: take the neighbouring node
        let j = if i == 0 {
            1
        } else if i == n - 1 {
            n - 2
        } else {
            i
        };
        let w = T::one() - x[j] * x[j];
        if pure_inner(cfg, x[i]) {
            bsup = bsup.max(sol.e[j].abs() / (a * w * w));
        } else {
            msup = msup.max(sol.e[i].abs() * w.sqrt() / a.sqrt());
        }
    }
    // matching window [-1 + inner_width/k, -1 + delta] (left side only, mirror is symmetric in construction)
    let lo = -T::one() + cfg.inner_width / k;
    let hi = -T::one() + cfg.delta;
    let mut m = [T::zero(); 3];
    let mut any = false;
    for &xi in x.iter().filter(|&&v| v >= lo && v <= hi) {
        any = true;
        let (uo, uop, uopp) = outer_eval(cfg, y, z, xi)?;
        let (ui, uip, uipp) = inner_eval(cfg, Side::Left, y, xi)?;
        let w = T::one() - xi * xi;
        let sa = a.sqrt();
        m[0] = m[0].max((uo - ui).abs() / (sa * w.powf(T::lit(1.5))));
        m[1] = m[1].max((uop - uip).abs() / (sa * w.sqrt()));
        m[2] = m[2].max((uopp - uipp).abs() * w.sqrt() / sa);
    }
    let opt = |v: T| any.then(|| v.as_f64());
    // lower bound on the middle zone
    let d = cfg.big_d / k;
    let mut c = T::infinity();
    for (i, &xi) in x.iter().enumerate() {
        if xi >= -T::one() + d && xi <= T::one() - d {
            c = c.min(sol.u[i] / ((a / T::lit(2.0)).sqrt() * (T::one() - xi * xi).sqrt()));
        }
    }
    // exact-middle zone: both outer corrections and both interpolation weights vanish
    let edge = (T::lit(2.0) * cfg.delta).max(T::lit(2.0) * cfg.inner_width / k);
    let mut gap = T::zero();
    let mut exact_any = false;
    for (i, &xi) in x.iter().enumerate() {
        if T::one() - xi.abs() >= edge {
            exact_any = true;
            gap = gap.max((sol.u[i] - (a * (T::one() - xi * xi)).sqrt()).abs());
        }
    }
    Ok(ResidualRegionReport {
        a: a.as_f64(),
        delta: cfg.delta.as_f64(),
        big_d: cfg.big_d.as_f64(),
        inner_width: cfg.inner_width.as_f64(),
        e_sup: e_sup.as_f64(),
        boundary_norm_sup: bsup.as_f64(),
        middle_norm_sup: msup.as_f64(),
        matching_sup_0: opt(m[0]),
        matching_sup_1: opt(m[1]),
        matching_sup_2: opt(m[2]),
        lower_bound_c: c.as_f64(),
        exact_middle_gap: exact_any.then(|| gap.as_f64()),
        ledger: ledger_terms(sol, y, z)?,
    })
}

/// Splits `E` on the clean part of the left interpolation window into the
/// outer residual, the three cutoff-derivative terms and the nonlinear term.
pub fn ledger_terms<T: Real>(sol: &CompositeSolution<T>, y: &PainleveSolution<T>, z: &PainleveSolution<T>) -> Result<Option<LedgerTerms>> {
    let cfg = &sol.config;
    let k = cfg.k();
    let two = T::lit(2.0);
    let mut sups = [T::zero(); 6];
    let mut gap = T::zero();
    let mut any = false;
    for (i, &x) in sol.mesh.nodes().iter().enumerate() {
        let s = k * (T::one() + x);
        let t = k * (T::one() - x);
        let clean = s > cfg.inner_width && s < two * cfg.inner_width && t >= two * cfg.inner_width && T::one() - x >= two * cfg.delta;
        if !clean {
            continue;
        }
        any = true;
        let (chi, chip, chipp) = cutoff_eval(cfg.inner_width, s);
        let (chip, chipp) = (k * chip, k * k * chipp);
        let (uo, uop, uopp) = outer_eval(cfg, y, z, x)?;
        let (ui, uip, uipp) = inner_eval(cfg, Side::Left, y, x)?;
        let (d, dp, dpp) = (ui - uo, uip - uop, uipp - uopp);
        let terms = [
            two * uopp - uo * uo + cfg.a * (T::one() - x * x),
            two * chipp * d,
            T::lit(4.0) * chip * dp,
            two * chi * dpp,
            -two * uo * chi * d - chi * chi * d * d,
        ];
        let total = terms.iter().copied().sum::<T>();
        for (m, v) in sups.iter_mut().zip(terms.iter()) {
            *m = m.max(v.abs());
        }
        sups[5] = sups[5].max(sol.e[i].abs());
        gap = gap.max((total - sol.e[i]).abs());
    }
    if !any {
        return Ok(None);
    }
    let sum: T = sups[..5].iter().copied().sum();
    Ok(Some(LedgerTerms {
        outer_residual: sups[0].as_f64(),
        chi_second: sups[1].as_f64(),
        chi_first: sups[2].as_f64(),
        chi_zeroth: sups[3].as_f64(),
        nonlinear: sups[4].as_f64(),
        residual: sups[5].as_f64(),
        ledger_ratio: (sups[5] / sum).as_f64(),
        identity_gap: gap.as_f64(),
    }))
}

/// The problem rescaled to `eps^2 v'' = v^2 - (1 - x^2)` with `v = u / sqrt(A)`.
#[derive(Debug, Clone, Serialize)]
pub struct ScaledProblem<T> {
    pub epsilon: T,
    pub v: Vec<T>,
    /// Sup of the discrete residual `eps^2 v'' - v^2 + (1 - x^2)` at interior nodes.
    pub residual_sup: T,
}

/// Rescales nodal values `u` of a solution for parameter `a`.
///
/// With `v = u / sqrt(A)` the equation `2u'' = u^2 - A(1-x^2)` becomes
/// `eps^2 v'' = v^2 - (1-x^2)` exactly when `eps^2 = 2 / sqrt(A)`; the
/// residual is then the original discrete residual divided by `A`.
pub fn to_singular_form<T: Real>(a: T, mesh: &Mesh<T>, u: &[T]) -> Result<ScaledProblem<T>> {
    if !(a > T::zero()) {
        return Err(Error::InvalidInput("A must be positive".into()));
    }
    let root = a.sqrt();
    let epsilon = (T::lit(2.0) / root).sqrt();
    let v: Vec<T> = u.iter().map(|&w| w / root).collect();
    let x = mesh.nodes();
    let eps2 = epsilon * epsilon;
    let mut residual_sup = T::zero();
    for i in 1..x.len() - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        let d2 = T::lit(2.0) * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0) / (h0 + h1);
        let r = eps2 * d2 - v[i] * v[i] + (T::one() - x[i] * x[i]);
        residual_sup = residual_sup.max(r.abs());
    }
    Ok(ScaledProblem { epsilon, v, residual_sup })
}
