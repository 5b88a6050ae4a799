//! Adaptive Dormand–Prince 5(4) integrator for planar first-order systems.

use crate::scalar::Real;

pub type State<T> = [T; 2];

/// What the observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri<T> {
    pub rtol: T,
    pub atol: T,
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Endpoint<T> {
    pub s: T,
    pub y: State<T>,
    pub stopped: bool,
}

/// The integrator could not continue: step size collapsed or the state went non-finite.
#[derive(Debug, Clone, Copy)]
pub struct Breakdown<T> {
    pub s: T,
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const ERR: [f64; 7] = [71.0 / 57600.0, 0.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0];

impl<T: Real> Default for Dopri<T> {
    fn default() -> Self {
        Self { rtol: T::lit(1e-10), atol: T::lit(1e-12), max_steps: 2_000_000 }
    }
}

impl<T: Real> Dopri<T> {
    pub fn new(rtol: T, atol: T) -> Self {
        Self { rtol, atol, ..Self::default() }
    }

    /// Integrates `y' = f(s, y)` from `s0` to `s1 > s0`. `observe` sees every
    /// accepted step and may stop the integration early.
    pub fn run<F, O>(&self, f: F, s0: T, y0: State<T>, s1: T, mut observe: O) -> Result<Endpoint<T>, Breakdown<T>>
    where
        F: Fn(T, &State<T>) -> State<T>,
        O: FnMut(T, &State<T>) -> Control,
    {
        let span = s1 - s0;
        if span <= T::zero() {
            return Ok(Endpoint { s: s0, y: y0, stopped: false });
        }
        let mut s = s0;
        let mut y = y0;
        let mut h = (span * T::lit(1e-3)).min(T::lit(1e-2));
        let h_floor = span * T::epsilon() * T::lit(16.0);
        let mut k = [[T::zero(); 2]; 7];
        k[0] = f(s, &y);
        let mut steps = 0usize;
        while s < s1 {
            if steps >= self.max_steps || h < h_floor {
                return Err(Breakdown { s });
            }
            steps += 1;
            let last = s + h >= s1;
            if last {
                h = s1 - s;
            }
            for st in 1..7 {
                let mut yt = y;
                for (j, kj) in k.iter().enumerate().take(st) {
                    let a = T::lit(A[st][j]);
                    if a != T::zero() {
                        yt[0] += h * a * kj[0];
                        yt[1] += h * a * kj[1];
                    }
                }
                k[st] = f(s + T::lit(C[st]) * h, &yt);
            }
            let mut yn = y;
            let mut err = [T::zero(); 2];
            for (j, kj) in k.iter().enumerate() {
                let b = T::lit(B[j]);
                let e = T::lit(ERR[j]);
                for c in 0..2 {
                    yn[c] += h * b * kj[c];
                    err[c] += h * e * kj[c];
                }
            }
            if !(yn[0].is_finite() && yn[1].is_finite()) {
                h *= T::lit(0.25);
                continue;
            }
            let mut norm = T::zero();
            for c in 0..2 {
                let sc = self.atol + self.rtol * y[c].abs().max(yn[c].abs());
                norm += (err[c] / sc).powi(2);
            }
            let norm = (norm * T::lit(0.5)).sqrt();
            if norm <= T::one() {
                s = if last { s1 } else { s + h };
                y = yn;
                k[0] = k[6];
                if observe(s, &y) == Control::Stop {
                    return Ok(Endpoint { s, y, stopped: true });
                }
                let grow = if norm == T::zero() { T::lit(5.0) } else { (T::lit(0.9) * norm.powf(T::lit(-0.2))).min(T::lit(5.0)) };
                h *= grow.max(T::one());
            } else {
                let shrink = (T::lit(0.9) * norm.powf(T::lit(-0.2))).max(T::lit(0.1));
                h *= shrink;
            }
        }
        Ok(Endpoint { s, y, stopped: false })
    }
}
