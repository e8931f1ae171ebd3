//! Stationary states beyond the coalescence of the real pair, from the
//! analytically continued nonlinearity `g Psi(x) Psi(-x) Psi(x)`.
//!
//! The full line is folded onto `r >= 0` with `u(r) = Psi(r)` and
//! `v(r) = Psi(-r)`, which obey
//!
//! ```text
//! u'' = kappa^2 u - g u^2 v,    v'' = kappa^2 v - g v^2 u,
//! ```
//!
//! with `u(0) = v(0)`, `v'(0) = -u'(0)` and the jumps `(1 - i gamma)` on `u`
//! and `(1 + i gamma)` on `v` at `r = a/2`. The norm condition
//! `int Psi(x) Psi(-x) dx = 1` is complex and fixes the global phase.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{PtError, Result};
use crate::model::{Branch, Eigenvalue, Grid, GridState, ModelParams, PhaseConvention};
use crate::newton::{self, NewtonOptions};
use crate::stationary::{
    assemble, march, ConvergenceReport, Layout, NonlinearState, RealLoop, StateUnknowns, REAL_KAPPA_TOL,
};

type C64 = Complex64;

/// Mirror-field samples on the half line, ordered outward from the origin.
#[derive(Debug, Clone)]
pub struct MirrorPair {
    /// Samples of `Psi(x)`, `x > 0`.
    pub u: Vec<C64>,
    /// Samples of `Psi(-x)`, `x > 0`.
    pub v: Vec<C64>,
    /// Node positions `r_k = (k + 1/2) dx`.
    pub r: Vec<f64>,
    pub kappa: C64,
    pub psi0: C64,
}

impl MirrorPair {
    /// Full-line samples `Psi(x)` on the grid.
    pub fn assemble(&self) -> Vec<C64> {
        assemble(&self.v, &self.u)
    }
}

/// Six real unknowns: `Psi(0)`, `Psi'(0)` and `kappa`, all complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContinuationUnknowns {
    pub psi0: C64,
    pub dpsi0: C64,
    pub kappa: C64,
}

impl ContinuationUnknowns {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.psi0.re,
            self.psi0.im,
            self.dpsi0.re,
            self.dpsi0.im,
            self.kappa.re,
            self.kappa.im,
        ])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            psi0: C64::new(v[0], v[1]),
            dpsi0: C64::new(v[2], v[3]),
            kappa: C64::new(v[4], v[5]),
        }
    }

    /// Image under `Psi(x) -> Psi*(-x)`.
    pub fn pt_partner(&self) -> Self {
        Self {
            psi0: self.psi0.conj(),
            dpsi0: -self.dpsi0.conj(),
            kappa: self.kappa.conj(),
        }
    }
}

struct Mirror {
    params: ModelParams,
    grid: Grid,
    layout: Layout,
}

struct Folded {
    u: Vec<C64>,
    v: Vec<C64>,
    residuals: [C64; 3],
    /// Ordinary `int |Psi|^2 dx`.
    l2: f64,
}

impl Mirror {
    fn new(params: &ModelParams, kappa_re: f64) -> Result<Self> {
        let grid = Grid::new(params)?;
        let layout = Layout::new(&grid, params.b(), kappa_re).with_width(params.well_width);
        Ok(Self {
            params: *params,
            grid,
            layout,
        })
    }

    fn run(&self, c: &ContinuationUnknowns) -> Result<Folded> {
        let kappa = c.kappa;
        if !(kappa.re > 0.0) || !kappa.is_finite() {
            return Err(PtError::KappaConstraint(kappa));
        }
        let g = self.params.g;
        let k2 = kappa * kappa;
        let wu = self.params.kappa0().conj();
        let wv = self.params.kappa0();
        let lay = &self.layout;
        let f = |r: f64, y: &[C64; 6]| {
            let (gn, gf) = lay.profiles(r);
            let vu = k2 - wu * gn - wv * gf;
            let vv = k2 - wv * gn - wu * gf;
            [
                y[1],
                vu * y[0] - g * y[0] * y[0] * y[2],
                y[3],
                vv * y[2] - g * y[2] * y[2] * y[0],
                y[0] * y[2],
                C64::new(y[0].norm_sqr() + y[2].norm_sqr(), 0.0),
            ]
        };
        let jump = |y: &mut [C64; 6]| {
            y[1] -= wu * y[0];
            y[3] -= wv * y[2];
        };
        let zero = C64::new(0.0, 0.0);
        let s = march(lay, [c.psi0, c.dpsi0, c.psi0, -c.dpsi0, zero, zero], f, jump)?;
        let [um, dum, vm, dvm, pm, lm] = s[lay.k_match];
        let scale = lay.decay_scale(kappa.re);
        let ru = (dum + kappa * um - g * um * um * vm / (4.0 * kappa)) * scale;
        let rv = (dvm + kappa * vm - g * vm * vm * um / (4.0 * kappa)) * scale;

        let mut u: Vec<C64> = s.iter().map(|y| y[0]).collect();
        let mut v: Vec<C64> = s.iter().map(|y| y[2]).collect();
        // decaying exterior xi - g xi^2 eta / (8 kappa^2) with xi, eta ~ exp(-kappa r)
        let c3 = g / (8.0 * k2);
        let (mut xu, mut xv) = (um, vm);
        for _ in 0..4 {
            let nu = um + c3 * xu * xu * xv;
            let nv = vm + c3 * xv * xv * xu;
            xu = nu;
            xv = nv;
        }
        let rm = lay.r_match();
        for k in lay.k_match + 1..lay.n_half {
            let e = (-kappa * (lay.r(k) - rm)).exp();
            let (a, b) = (xu * e, xv * e);
            u.push(a - c3 * a * a * b);
            v.push(b - c3 * b * b * a);
        }
        let ab = xu * xv;
        let cn = 2.0 * (pm + ab / (2.0 * kappa) - 2.0 * c3 * ab * ab / (4.0 * kappa));
        let l2 = lm.re + (xu.norm_sqr() + xv.norm_sqr()) / (2.0 * kappa.re);
        Ok(Folded {
            u,
            v,
            residuals: [ru, rv, cn - 1.0],
            l2,
        })
    }

    fn residual_vector(&self, c: &ContinuationUnknowns) -> Result<DVector<f64>> {
        let r = self.run(c)?.residuals;
        Ok(DVector::from_vec(vec![r[0].re, r[0].im, r[1].re, r[1].im, r[2].re, r[2].im]))
    }
}

pub fn integrate_mirror_system(c: &ContinuationUnknowns, params: &ModelParams) -> Result<MirrorPair> {
    let m = Mirror::new(params, c.kappa.re)?;
    let f = m.run(c)?;
    Ok(MirrorPair {
        r: (0..m.layout.n_half).map(|k| m.layout.r(k)).collect(),
        u: f.u,
        v: f.v,
        kappa: c.kappa,
        psi0: c.psi0,
    })
}

/// Scaled decay defects of `u` and `v` and the continued norm defect
/// `int Psi(x) Psi(-x) dx - 1`, as six reals.
pub fn continuation_residuals(c: &ContinuationUnknowns, params: &ModelParams) -> Result<[f64; 6]> {
    let m = Mirror::new(params, c.kappa.re)?;
    let v = m.residual_vector(c)?;
    Ok([v[0], v[1], v[2], v[3], v[4], v[5]])
}

/// Damped Newton search on the six unknowns.
pub fn solve_continuation(guess: &ContinuationUnknowns, params: &ModelParams) -> Result<NonlinearState> {
    let m = Mirror::new(params, guess.kappa.re)?;
    let f = |x: &DVector<f64>| m.residual_vector(&ContinuationUnknowns::from_vector(x));
    let rep = newton::solve(f, guess.to_vector(), NewtonOptions::default(), |x| x[4] > 0.0)?;
    let c = ContinuationUnknowns::from_vector(&rep.x);
    let folded = m.run(&c)?;
    let psi = assemble(&folded.v, &folded.u);
    let branch = if c.kappa.im.abs() > REAL_KAPPA_TOL {
        Branch::complex_for(c.kappa, true)
    } else {
        crate::stationary::real_branch_label(&psi)
    };
    Ok(NonlinearState {
        state: GridState {
            psi,
            kappa: Eigenvalue::new(c.kappa, branch)?,
            params: *params,
            phase_convention: PhaseConvention::ContinuationNorm,
            grid: m.grid,
        },
        unknowns: StateUnknowns::Continuation(c),
        report: ConvergenceReport {
            iterations: rep.iterations,
            residual_norm: rep.residual_norm,
            condition: rep.condition,
        },
    })
}

/// `int Psi(x) Psi(-x) dx` and `int |Psi|^2 dx` of a continued state,
/// integrated with the state rather than by grid quadrature.
pub fn integrated_norms(s: &NonlinearState) -> Result<(C64, f64)> {
    let c = unknowns_of(s);
    let m = Mirror::new(s.params(), c.kappa.re)?;
    let f = m.run(&c)?;
    Ok((f.residuals[2] + 1.0, f.l2))
}

/// Continuation unknowns of a converged state of any formulation. States
/// from the shooting search already satisfy the continued norm when PT
/// symmetric.
pub fn unknowns_of(s: &NonlinearState) -> ContinuationUnknowns {
    ContinuationUnknowns {
        psi0: s.psi0(),
        dpsi0: s.dpsi0(),
        kappa: s.kappa(),
    }
}

/// Seeds for the two continued states just above the coalescence at
/// `gamma > gamma_cr`.
///
/// The real loop near its turning point is a smooth function of `kappa`;
/// a quadratic through the turning point and its neighbours is evaluated at
/// the complex `kappa` solving `gamma(kappa) = gamma`. Returns the decaying
/// seed first.
pub fn seeds_above_coalescence(lp: &RealLoop, gamma: f64) -> Result<[ContinuationUnknowns; 2]> {
    let f = lp.fold;
    if f == 0 || f + 1 >= lp.points.len() {
        return Err(PtError::Diagnostic("turning point at the end of the traced loop".into()));
    }
    let pts = [lp.points[f - 1], lp.points[f], lp.points[f + 1]];
    let kc = pts[1].kappa;
    // quadratic interpolation in d = kappa - kc through three points
    let quad = |vals: [f64; 3]| -> [f64; 3] {
        let d: Vec<f64> = pts.iter().map(|p| p.kappa - kc).collect();
        let m = nalgebra::Matrix3::new(1.0, d[0], d[0] * d[0], 1.0, d[1], d[1] * d[1], 1.0, d[2], d[2] * d[2]);
        let c = m.lu().solve(&nalgebra::Vector3::new(vals[0], vals[1], vals[2])).unwrap_or_default();
        [c[0], c[1], c[2]]
    };
    let gq = quad([pts[0].gamma, pts[1].gamma, pts[2].gamma]);
    let pq = quad([pts[0].psi0, pts[1].psi0, pts[2].psi0]);
    let dq = quad([pts[0].dpsi0_im, pts[1].dpsi0_im, pts[2].dpsi0_im]);
    if !(gq[2] < 0.0) {
        return Err(PtError::Diagnostic("turning point is not a maximum of gamma(kappa)".into()));
    }
    let disc = C64::new(gq[1] * gq[1] - 4.0 * gq[2] * (gq[0] - gamma), 0.0).sqrt();
    let eval = |c: [f64; 3], d: C64| c[0] + c[1] * d + c[2] * d * d;
    let mut out = Vec::new();
    for sgn in [1.0, -1.0] {
        let d = (-gq[1] + sgn * disc) / (2.0 * gq[2]);
        let kappa = kc + d;
        out.push(ContinuationUnknowns {
            psi0: eval(pq, d),
            dpsi0: C64::new(0.0, 1.0) * eval(dq, d),
            kappa,
        });
    }
    out.sort_by(|a, b| b.kappa.im.partial_cmp(&a.kappa.im).unwrap());
    Ok([out[0], out[1]])
}

/// The two continued states at `gamma` just above the coalescence. The
/// quadratic seed is tried first, then the coalesced state at
/// `gamma_cr - 1e-3` with `Im(kappa)` nudged by `+-1e-3`.
pub fn emerging_pair(lp: &RealLoop, gamma: f64) -> Result<[NonlinearState; 2]> {
    if gamma <= lp.gamma_cr {
        return Err(PtError::Domain(format!(
            "continuation pair needs gamma > gamma_cr = {:.8}",
            lp.gamma_cr
        )));
    }
    let params = lp.params.with_gamma(gamma);
    let want = |s: &NonlinearState, sign: f64| s.kappa().im * sign > REAL_KAPPA_TOL;
    let mut found: [Option<NonlinearState>; 2] = [None, None];
    if let Ok(seeds) = seeds_above_coalescence(lp, gamma) {
        for (i, seed) in seeds.iter().enumerate() {
            let sign = if i == 0 { 1.0 } else { -1.0 };
            if let Ok(s) = solve_continuation(seed, &params) {
                if want(&s, sign) {
                    found[i] = Some(s);
                }
            }
        }
    }
    if found.iter().any(|f| f.is_none()) {
        let base = lp.state(Branch::GroundReal, lp.gamma_cr - 1e-3)?;
        for (i, sign) in [1.0, -1.0].into_iter().enumerate() {
            if found[i].is_some() {
                continue;
            }
            let mut seed = unknowns_of(&base);
            seed.kappa.im = sign * 1e-3;
            if let Ok(s) = solve_continuation(&seed, &params) {
                if want(&s, sign) {
                    found[i] = Some(s);
                }
            }
        }
    }
    match found {
        [Some(a), Some(b)] => Ok([a, b]),
        _ => Err(PtError::Diagnostic(format!(
            "continued pair not found at gamma = {gamma} (gamma_cr = {:.8})",
            lp.gamma_cr
        ))),
    }
}

/// Continued states at `gamma` above the coalescence, by `gamma`
/// continuation from the emerging pair at `gamma_cr + 1e-3`.
pub fn continued_pair(lp: &RealLoop, gamma: f64) -> Result<[NonlinearState; 2]> {
    let start = lp.gamma_cr + 1e-3;
    if gamma <= start {
        return emerging_pair(lp, gamma);
    }
    let pair = emerging_pair(lp, start)?;
    let steps = ((gamma - start) / 0.01).ceil().max(1.0) as usize;
    let mut out = Vec::new();
    for s in pair {
        let tr = crate::stationary::continue_branch(&s, crate::stationary::Homotopy::Gamma, gamma, steps);
        match tr.termination {
            None => out.push(tr.states.into_iter().last().unwrap()),
            Some(t) => return Err(PtError::Diagnostic(t)),
        }
    }
    let b = out.pop().unwrap();
    let a = out.pop().unwrap();
    Ok([a, b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear;
    use crate::stationary::{trace_real_loop, ShootingUnknowns};

    fn params(gamma: f64, g: f64) -> ModelParams {
        ModelParams::new(2.2, gamma, g).with_grid(20.0, 2048)
    }

    #[test]
    fn zero_state_has_unit_norm_defect() {
        let c = ContinuationUnknowns {
            psi0: C64::new(0.0, 0.0),
            dpsi0: C64::new(0.0, 0.0),
            kappa: C64::new(0.4, 0.1),
        };
        let r = continuation_residuals(&c, &params(0.5, 0.5)).unwrap();
        assert_eq!(r[4], -1.0);
        assert_eq!(r[5], 0.0);
    }

    #[test]
    fn mirror_initial_conditions_hold() {
        let c = ContinuationUnknowns {
            psi0: C64::new(0.5, 0.1),
            dpsi0: C64::new(0.02, 0.1),
            kappa: C64::new(0.4, 0.05),
        };
        let m = integrate_mirror_system(&c, &params(0.5, 0.5)).unwrap();
        // first nodes at r = dx/2 straddle the origin symmetrically
        let dx = 2.0 * m.r[0];
        let du = (m.u[0] - m.v[0]) / dx;
        assert!((du - c.dpsi0).norm() < 1e-3);
    }

    #[test]
    fn zero_g_continuation_matches_linear_complex_root() {
        let p = params(0.5, 0.0);
        let e = linear::principal_pair(&p)
            .unwrap()
            .into_iter()
            .find(|e| e.branch == Branch::ComplexDecaying)
            .unwrap();
        let ls = linear::build_linear_state(e, &p).unwrap();
        // rescale so that int Psi(x) Psi(-x) dx = 1
        let st = ls.sample(&Grid::new(&p).unwrap());
        let s = crate::model::continuation_norm(&st).sqrt();
        let seed = ContinuationUnknowns {
            psi0: ls.psi0() / s,
            dpsi0: ls.dpsi0() / s,
            kappa: e.kappa + 1e-4,
        };
        let sol = solve_continuation(&seed, &p).unwrap();
        assert!((sol.kappa() - e.kappa).norm() < 1e-8);
        assert_eq!(sol.branch(), Branch::ContinuationDecaying);
    }

    #[test]
    fn agrees_with_shooting_below_coalescence() {
        let p = params(0.3, 0.5);
        let lp = trace_real_loop(&p).unwrap();
        let s = lp.state(Branch::GroundReal, 0.3).unwrap();
        let c = solve_continuation(&unknowns_of(&s), &p).unwrap();
        assert!((c.kappa() - s.kappa()).norm() < 1e-9);
        let d = c
            .state
            .psi
            .iter()
            .zip(&s.state.psi)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(d < 1e-7, "{d}");
        let _ = ShootingUnknowns::from_vector(&s.unknown_vector(crate::stationary::SolverKind::Full));
    }

    #[test]
    fn pair_emerges_above_coalescence() {
        let p = params(0.0, 0.5);
        let lp = trace_real_loop(&p).unwrap();
        let [d, g] = emerging_pair(&lp, lp.gamma_cr + 1e-3).unwrap();
        assert!((d.kappa() - g.kappa().conj()).norm() < 1e-8);
        assert!(d.psi0().im.abs() > 1e-6);
        let (cn, l2) = integrated_norms(&d).unwrap();
        assert!((cn - 1.0).norm() < 1e-10);
        assert!((l2 - 1.0).abs() > 1e-6);
        // grid quadrature agrees to second order in dx
        assert!((crate::model::continuation_norm(&d.state) - 1.0).norm() < 1e-3);
    }
}
