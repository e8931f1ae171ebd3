//! Embedded Dormand-Prince 5(4) integrator for small complex systems.
//!
//! Steps are clipped so that every call ends exactly on the requested
//! abscissa; callers march node to node and read samples off the endpoints.

use num_complex::Complex64;

use crate::error::{PtError, Result};

type C64 = Complex64;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub rtol: f64,
    pub atol: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-15,
        }
    }
}

/// Adaptive integrator with a persistent step-size suggestion.
pub struct Dopri5<const M: usize> {
    pub tol: Tolerance,
    h: f64,
    pub steps: usize,
    /// Solutions leaving this ball are reported as an integration error.
    pub max_norm: f64,
}

fn axpy<const M: usize>(y: &[C64; M], terms: &[(f64, &[C64; M])], h: f64) -> [C64; M] {
    let mut out = *y;
    for i in 0..M {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += *c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

const MAX_STEPS: usize = 20_000;

impl<const M: usize> Dopri5<M> {
    pub fn new(tol: Tolerance, initial_step: f64) -> Self {
        Self {
            tol,
            h: initial_step,
            steps: 0,
            max_norm: 1e150,
        }
    }

    /// Advances `y` from `x0` to `x1` (either direction). Gives up after
    /// `MAX_STEPS` attempted steps, which only happens on wildly oscillating
    /// trial solutions far from a root.
    pub fn integrate<F>(&mut self, f: &F, x0: f64, x1: f64, y: &mut [C64; M]) -> Result<()>
    where
        F: Fn(f64, &[C64; M]) -> [C64; M],
    {
        let span = x1 - x0;
        if span == 0.0 {
            return Ok(());
        }
        let dir = span.signum();
        let mut x = x0;
        let mut h = self.h.abs().min(span.abs());
        let mut k1 = f(x, y);
        for _ in 0..MAX_STEPS {
            let remaining = (x1 - x) * dir;
            if remaining <= 1e-14 * span.abs() {
                break;
            }
            let last = h >= remaining;
            let hs = if last { remaining } else { h } * dir;

            let k2 = f(x + 0.2 * hs, &axpy(y, &[(A21, &k1)], hs));
            let k3 = f(x + 0.3 * hs, &axpy(y, &[(A31, &k1), (A32, &k2)], hs));
            let k4 = f(x + 0.8 * hs, &axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
            let k5 = f(
                x + 8.0 / 9.0 * hs,
                &axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
            );
            let k6 = f(
                x + hs,
                &axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs),
            );
            let ynew = axpy(y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
            let k7 = f(x + hs, &ynew);

            let mut err = 0.0f64;
            for i in 0..M {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.tol.atol + self.tol.rtol * y[i].norm().max(ynew[i].norm());
                err = err.max(e.norm() / sc);
            }
            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite() || v.norm() > self.max_norm) {
                return Err(PtError::Integration { x: x + hs });
            }
            if err <= 1.0 {
                x = if last { x1 } else { x + hs };
                *y = ynew;
                k1 = k7;
                self.steps += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // keep the unclipped step as the suggestion for the next call
                h = hs.abs().max(if last { h } else { 0.0 }) * fac;
                if last {
                    break;
                }
            } else {
                h = hs.abs() * (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            }
            if h < 1e-13 * span.abs().max(1e-3) {
                return Err(PtError::StepUnderflow { x });
            }
        }
        if (x1 - x) * dir > 1e-14 * span.abs() {
            return Err(PtError::Integration { x });
        }
        self.h = h;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        // y'' = -y written as a first-order system
        let f = |_x: f64, y: &[C64; 2]| [y[1], -y[0]];
        let mut y = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let mut ode = Dopri5::<2>::new(Tolerance::default(), 0.01);
        let n = 100;
        for i in 0..n {
            let x0 = i as f64 * 0.1;
            ode.integrate(&f, x0, x0 + 0.1, &mut y).unwrap();
        }
        assert!((y[0].re - 10f64.cos()).abs() < 1e-10);
        assert!((y[1].re + 10f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn backwards_integration() {
        let f = |_x: f64, y: &[C64; 1]| [y[0]];
        let mut y = [C64::new(1.0, 0.0)];
        let mut ode = Dopri5::<1>::new(Tolerance::default(), 0.1);
        ode.integrate(&f, 0.0, -2.0, &mut y).unwrap();
        assert!((y[0].re - (-2f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn blow_up_is_reported() {
        let f = |_x: f64, y: &[C64; 1]| [y[0] * y[0]];
        let mut y = [C64::new(1.0, 0.0)];
        let mut ode = Dopri5::<1>::new(Tolerance::default(), 0.1);
        let r = ode.integrate(&f, 0.0, 2.0, &mut y);
        assert!(r.is_err());
    }
}
