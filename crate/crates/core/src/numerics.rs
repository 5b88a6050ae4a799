//! Small numerical kernels: Hermite interpolation, banded solves, quadrature
//! and differencing on nonuniform grids.

use crate::scalar::Real;

/// Value and first two derivatives of the quintic Hermite interpolant on a
/// cell of width `h` at local coordinate `t in [0, 1]`.
/// Node data are `(value, slope, curvature)` at the left and right ends.
pub fn quintic_hermite<T: Real>(h: T, left: [T; 3], right: [T; 3], t: T) -> [T; 3] {
    let l = T::lit;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    let half = l(0.5);
    let b = [
        T::one() - l(10.0) * t3 + l(15.0) * t4 - l(6.0) * t5,
        t - l(6.0) * t3 + l(8.0) * t4 - l(3.0) * t5,
        half * (t2 - l(3.0) * t3 + l(3.0) * t4 - t5),
        half * (t3 - l(2.0) * t4 + t5),
        -l(4.0) * t3 + l(7.0) * t4 - l(3.0) * t5,
        l(10.0) * t3 - l(15.0) * t4 + l(6.0) * t5,
    ];
    let db = [
        -l(30.0) * t2 + l(60.0) * t3 - l(30.0) * t4,
        T::one() - l(18.0) * t2 + l(32.0) * t3 - l(15.0) * t4,
        half * (l(2.0) * t - l(9.0) * t2 + l(12.0) * t3 - l(5.0) * t4),
        half * (l(3.0) * t2 - l(8.0) * t3 + l(5.0) * t4),
        -l(12.0) * t2 + l(28.0) * t3 - l(15.0) * t4,
        l(30.0) * t2 - l(60.0) * t3 + l(30.0) * t4,
    ];
    let ddb = [
        -l(60.0) * t + l(180.0) * t2 - l(120.0) * t3,
        -l(36.0) * t + l(96.0) * t2 - l(60.0) * t3,
        half * (l(2.0) - l(18.0) * t + l(36.0) * t2 - l(20.0) * t3),
        half * (l(6.0) * t - l(24.0) * t2 + l(20.0) * t3),
        -l(24.0) * t + l(84.0) * t2 - l(60.0) * t3,
        l(60.0) * t - l(180.0) * t2 + l(120.0) * t3,
    ];
    let c = [left[0], h * left[1], h * h * left[2], h * h * right[2], h * right[1], right[0]];
    let dot = |w: &[T; 6]| w.iter().zip(c.iter()).fold(T::zero(), |acc, (a, b)| acc + *a * *b);
    [dot(&b), dot(&db) / h, dot(&ddb) / (h * h)]
}

/// Index `i` with `nodes[i] <= x <= nodes[i + 1]`; `x` must lie inside the range.
pub fn locate<T: Real>(nodes: &[T], x: T) -> usize {
    let n = nodes.len();
    let i = nodes.partition_point(|&v| v <= x);
    i.saturating_sub(1).min(n - 2)
}

/// Solves a general tridiagonal system with partial pivoting.
/// `sub[i]` couples row `i + 1` to column `i`, `sup[i]` couples row `i` to column `i + 1`.
/// Returns `None` when a pivot vanishes.
pub fn solve_tridiagonal<T: Real>(sub: &[T], diag: &[T], sup: &[T], rhs: &[T]) -> Option<Vec<T>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let mut dl = sub.to_vec();
    let mut d = diag.to_vec();
    let mut du = sup.to_vec();
    let mut du2 = vec![T::zero(); n.saturating_sub(2)];
    let mut b = rhs.to_vec();
    for i in 0..n - 1 {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == T::zero() {
                return None;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            let bi = b[i];
            b[i + 1] -= fact * bi;
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let tmp = d[i + 1];
            d[i + 1] = du[i] - fact * tmp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = tmp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
        dl[i] = T::zero();
    }
    if d[n - 1] == T::zero() {
        return None;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = b[n - 1] / d[n - 1];
    if n > 1 {
        x[n - 2] = (b[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (b[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    if x.iter().all(|v| v.is_finite()) {
        Some(x)
    } else {
        None
    }
}

/// Second-order first derivative on a nonuniform grid (one-sided at the ends).
pub fn gradient<T: Real>(x: &[T], f: &[T]) -> Vec<T> {
    let n = x.len();
    let mut g = vec![T::zero(); n];
    if n < 3 {
        if n == 2 {
            let d = (f[1] - f[0]) / (x[1] - x[0]);
            g[0] = d;
            g[1] = d;
        }
        return g;
    }
    for i in 1..n - 1 {
        let h0 = x[i] - x[i - 1];
        let h1 = x[i + 1] - x[i];
        g[i] = (h0 * h0 * f[i + 1] - h1 * h1 * f[i - 1] + (h1 * h1 - h0 * h0) * f[i]) / (h0 * h1 * (h0 + h1));
    }
    // derivative at the first point of the quadratic through three points
    let end = |i0: usize, i1: usize, i2: usize| {
        let (a, b, c) = (x[i0], x[i1], x[i2]);
        f[i0] * (T::lit(2.0) * a - b - c) / ((a - b) * (a - c)) + f[i1] * (a - c) / ((b - a) * (b - c)) + f[i2] * (a - b) / ((c - a) * (c - b))
    };
    g[0] = end(0, 1, 2);
    g[n - 1] = end(n - 1, n - 2, n - 3);
    g
}

/// Composite Simpson rule on an arbitrary grid: pairs of cells use the exact
/// quadratic weights; an odd trailing cell is closed with the three-point
/// quadratic over the last two cells restricted to the final one.
pub fn simpson<T: Real>(x: &[T], f: &[T]) -> T {
    let n = x.len();
    if n < 2 {
        return T::zero();
    }
    if n == 2 {
        return (x[1] - x[0]) * (f[0] + f[1]) * T::lit(0.5);
    }
    let six = T::lit(6.0);
    let mut sum = T::zero();
    let mut i = 0;
    while i + 2 < n {
        let h0 = x[i + 1] - x[i];
        let h1 = x[i + 2] - x[i + 1];
        let hs = h0 + h1;
        sum += hs / six * ((T::lit(2.0) - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (T::lit(2.0) - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if i + 1 == n - 1 {
        // last cell [x[n-2], x[n-1]] from the quadratic through the last three points
        let (a, b, c) = (x[n - 3], x[n - 2], x[n - 1]);
        let (fa, fb, fc) = (f[n - 3], f[n - 2], f[n - 1]);
        let h0 = b - a;
        let h1 = c - b;
        let wa = -h1 * h1 * h1 / (six * h0 * (h0 + h1));
        let wb = h1 * (T::lit(3.0) * h0 + h1) / (six * h0);
        let wc = h1 * (T::lit(3.0) * h0 + T::lit(2.0) * h1) / (six * (h0 + h1));
        sum += wa * fa + wb * fb + wc * fc;
    }
    sum
}

/// Cubic Lagrange interpolation through the four grid points nearest to `t`.
pub fn cubic_interpolate<T: Real>(x: &[T], f: &[T], t: T) -> T {
    let n = x.len();
    let i = locate(x, t);
    let start = i.saturating_sub(1).min(n.saturating_sub(4));
    let idx = start..(start + 4).min(n);
    let mut acc = T::zero();
    for j in idx.clone() {
        let mut w = T::one();
        for m in idx.clone() {
            if m != j {
                w = w * (t - x[m]) / (x[j] - x[m]);
            }
        }
        acc += w * f[j];
    }
    acc
}

/// Ordinary least squares of `y` on `x`: returns `(slope, intercept, r_squared)`.
pub fn linear_fit<T: Real>(x: &[T], y: &[T]) -> (T, T, T) {
    let n = T::from_count(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    let mut syy = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
        syy += (b - my) * (b - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == T::zero() { T::one() } else { (sxy * sxy / (sxx * syy)).min(T::one()) };
    (slope, intercept, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_reproduces_quintics() {
        let p = |s: f64| 1.0 + s - 2.0 * s.powi(3) + 0.5 * s.powi(5);
        let dp = |s: f64| 1.0 - 6.0 * s * s + 2.5 * s.powi(4);
        let ddp = |s: f64| -12.0 * s + 10.0 * s.powi(3);
        let (a, b) = (0.3, 0.8);
        let h = b - a;
        for &t in &[0.0, 0.25, 0.5, 0.9, 1.0] {
            let s = a + t * h;
            let r = quintic_hermite(h, [p(a), dp(a), ddp(a)], [p(b), dp(b), ddp(b)], t);
            assert_relative_eq!(r[0], p(s), epsilon = 1e-13);
            assert_relative_eq!(r[1], dp(s), epsilon = 1e-12);
            assert_relative_eq!(r[2], ddp(s), epsilon = 1e-11);
        }
    }

    #[test]
    fn pivoted_tridiagonal_handles_zero_leading_pivot() {
        // [[0,1,0],[1,0,1],[0,1,1]] x = [1,2,2] -> x = [1,1,1]
        let x = solve_tridiagonal(&[1.0, 1.0], &[0.0, 0.0, 1.0], &[1.0, 1.0], &[1.0, 2.0, 2.0]).unwrap();
        assert_relative_eq!(x[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(x[2], 1.0, epsilon = 1e-14);
    }

    #[test]
    fn tridiagonal_matches_dense_product() {
        let n = 7;
        let sub: Vec<f64> = (0..n - 1).map(|i| 0.3 + i as f64).collect();
        let sup: Vec<f64> = (0..n - 1).map(|i| -1.0 + 0.1 * i as f64).collect();
        let diag: Vec<f64> = (0..n).map(|i| if i % 3 == 0 { 0.01 } else { -2.0 }).collect();
        let xs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = diag[i] * xs[i];
            if i > 0 {
                b[i] += sub[i - 1] * xs[i - 1];
            }
            if i + 1 < n {
                b[i] += sup[i] * xs[i + 1];
            }
        }
        let x = solve_tridiagonal(&sub, &diag, &sup, &b).unwrap();
        for i in 0..n {
            assert_relative_eq!(x[i], xs[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn simpson_exact_for_quadratics_on_uneven_grid() {
        let x = [0.0, 0.1, 0.35, 0.5, 0.9, 1.0];
        let f: Vec<f64> = x.iter().map(|&s| s * s).collect();
        assert_relative_eq!(simpson(&x, &f), 1.0 / 3.0, epsilon = 1e-14);
        let x2 = [0.0, 0.2, 0.5, 0.7, 1.0];
        let f2: Vec<f64> = x2.iter().map(|&s| 3.0 * s * s - s).collect();
        assert_relative_eq!(simpson(&x2, &f2), 0.5, epsilon = 1e-14);
    }

    #[test]
    fn gradient_exact_for_quadratics() {
        let x = [0.0, 0.1, 0.3, 0.35, 0.8];
        let f: Vec<f64> = x.iter().map(|&s| 3.0 * s * s - s).collect();
        let g = gradient(&x, &f);
        for (i, &s) in x.iter().enumerate() {
            assert_relative_eq!(g[i], 6.0 * s - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn cubic_interpolation_exact_for_cubics() {
        let x = [0.0, 0.2, 0.3, 0.7, 1.0, 1.1];
        let p = |s: f64| s * s * s - 2.0 * s + 1.0;
        let f: Vec<f64> = x.iter().map(|&s| p(s)).collect();
        for &t in &[0.05, 0.25, 0.5, 0.95, 1.05] {
            assert_relative_eq!(cubic_interpolate(&x, &f, t), p(t), epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_fit_recovers_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 0.6 * v - 1.0).collect();
        let (m, c, r2) = linear_fit(&x, &y);
        assert_relative_eq!(m, 0.6, epsilon = 1e-14);
        assert_relative_eq!(c, -1.0, epsilon = 1e-14);
        assert_relative_eq!(r2, 1.0, epsilon = 1e-14);
    }
}
