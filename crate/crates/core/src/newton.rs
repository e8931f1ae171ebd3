//! Damped Newton iteration with a forward-difference Jacobian for the small
//! real root searches (three to six unknowns).

use nalgebra::{DMatrix, DVector};

use crate::error::{PtError, Result};

#[derive(Debug, Clone, Copy)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Component-relative finite-difference step.
    pub fd_step: f64,
    /// Jacobians with a larger condition estimate are reported as singular.
    pub max_condition: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 100,
            fd_step: 1e-7,
            max_condition: 1e13,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NewtonReport {
    pub x: DVector<f64>,
    pub residual: DVector<f64>,
    pub iterations: usize,
    /// Max-norm of the final residual.
    pub residual_norm: f64,
    /// Condition estimate of the last Jacobian.
    pub condition: f64,
}

pub fn fd_jacobian<F>(f: &F, x: &DVector<f64>, fx: &DVector<f64>, rel_step: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(fx.len(), n);
    for j in 0..n {
        let h = rel_step * x[j].abs().max(1e-2);
        let mut xp = x.clone();
        xp[j] += h;
        let fp = f(&xp)?;
        jac.set_column(j, &((fp - fx) / h));
    }
    Ok(jac)
}

pub fn condition_estimate(jac: &DMatrix<f64>) -> f64 {
    let sv = jac.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Solves `f(x) = 0` from `x0`. `feasible` rejects trial points (for example
/// `Re(kappa) <= 0`); rejected trials shorten the step like a failed
/// descent test.
pub fn solve<F, P>(f: F, x0: DVector<f64>, opts: NewtonOptions, feasible: P) -> Result<NewtonReport>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    P: Fn(&DVector<f64>) -> bool,
{
    let mut x = x0;
    let mut r = f(&x)?;
    let mut cond = f64::NAN;
    for it in 0..opts.max_iter {
        let rn = inf_norm(&r);
        if rn < opts.tol {
            return Ok(NewtonReport {
                x,
                residual_norm: rn,
                residual: r,
                iterations: it,
                condition: cond,
            });
        }
        let jac = fd_jacobian(&f, &x, &r, opts.fd_step)?;
        cond = condition_estimate(&jac);
        if !cond.is_finite() || cond > opts.max_condition {
            return Err(PtError::SingularJacobian { condition: cond });
        }
        let step = jac
            .lu()
            .solve(&(-&r))
            .ok_or(PtError::SingularJacobian { condition: cond })?;

        let r2 = r.norm();
        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let trial = &x + lambda * &step;
            if feasible(&trial) {
                if let Ok(rt) = f(&trial) {
                    if rt.iter().all(|v| v.is_finite()) && rt.norm() <= (1.0 - 1e-4 * lambda) * r2 {
                        accepted = Some((trial, rt));
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((xt, rt)) => {
                x = xt;
                r = rt;
            }
            None => {
                return Err(PtError::Newton {
                    reason: "line search failed".into(),
                    iterations: it,
                    residual: rn,
                });
            }
        }
    }
    let rn = inf_norm(&r);
    if rn < opts.tol {
        return Ok(NewtonReport {
            x,
            residual_norm: rn,
            residual: r,
            iterations: opts.max_iter,
            condition: cond,
        });
    }
    Err(PtError::Newton {
        reason: "maximum iterations exceeded".into(),
        iterations: opts.max_iter,
        residual: rn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_a_small_nonlinear_system() {
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            Ok(DVector::from_vec(vec![
                x[0] * x[0] + x[1] * x[1] - 4.0,
                x[0] - x[1].exp() + 1.0,
            ]))
        };
        let rep = solve(f, DVector::from_vec(vec![1.0, 1.0]), NewtonOptions::default(), |_| true).unwrap();
        assert!(rep.residual_norm < 1e-10);
    }

    #[test]
    fn infeasible_trial_is_shortened() {
        // the full first step lands on the excluded point x = 2.5
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> { Ok(DVector::from_vec(vec![x[0] * x[0] - 4.0])) };
        let rep = solve(f, DVector::from_vec(vec![1.0]), NewtonOptions::default(), |x| x[0] < 2.5).unwrap();
        assert!((rep.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn singular_jacobian_is_flagged() {
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> { Ok(DVector::from_vec(vec![x[0] + x[1] - 1.0, x[0] + x[1] - 1.0 + 1e-3])) };
        let r = solve(f, DVector::from_vec(vec![0.0, 0.0]), NewtonOptions::default(), |_| true);
        assert!(matches!(r, Err(PtError::SingularJacobian { .. })));
    }
}
