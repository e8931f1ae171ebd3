//! Nonlinear stationary states by shooting from the origin.
//!
//! The wave function is integrated outward from `x = 0` on both half lines
//! with the well jumps applied exactly at the nodes `x = +-a/2`. Outward
//! integration amplifies the growing exterior solution, so the integration
//! stops at a matching radius a few decay lengths past the well and the
//! remaining nodes are filled with the decaying exterior solution. The
//! decay defects are nonlinear Robin combinations evaluated at the matching
//! radius and rescaled to the well, which keeps them of order one.

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::continuation::{self, ContinuationUnknowns};
use crate::error::{PtError, Result};
use crate::linear::{self, LinearState};
use crate::model::{gaussian, Branch, Eigenvalue, Grid, GridState, ModelParams, PhaseConvention};
use crate::newton::{self, NewtonOptions};
use crate::ode::{Dopri5, Tolerance};

type C64 = Complex64;

/// Decay exponent, in units of `Re(kappa)`, between the well and the
/// matching radius.
pub const MATCH_DECAY: f64 = 4.6;
/// States with `|Im(kappa)|` below this count as real.
pub const REAL_KAPPA_TOL: f64 = 1e-8;

/// Node bookkeeping on the half line `r = |x|`; node `k` sits at `(k + 1/2) dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Layout {
    pub dx: f64,
    pub b: f64,
    pub k_well: usize,
    pub k_match: usize,
    pub n_half: usize,
    /// Gaussian well width; exact jumps when `None`.
    pub width: Option<f64>,
}

impl Layout {
    pub fn new(grid: &Grid, b: f64, kappa_re: f64) -> Self {
        let n_half = grid.len() / 2;
        let dx = grid.dx;
        let k_well = grid.well_indices[1] - n_half;
        let r_m = (b + MATCH_DECAY / kappa_re.max(1e-6)).min(grid.half_width());
        let k_match = ((r_m / dx - 0.5).floor().max(0.0) as usize).clamp(k_well + 2, n_half - 1);
        Self {
            dx,
            b,
            k_well,
            k_match,
            n_half,
            width: None,
        }
    }

    pub fn with_width(mut self, width: Option<f64>) -> Self {
        self.width = width;
        self
    }

    /// Profiles of the near (`r = b`) and far (`r = -b`) Gaussian wells.
    pub fn profiles(&self, r: f64) -> (f64, f64) {
        match self.width {
            Some(w) => (gaussian(r - self.b, w), gaussian(r + self.b, w)),
            None => (0.0, 0.0),
        }
    }

    pub fn r(&self, k: usize) -> f64 {
        (k as f64 + 0.5) * self.dx
    }

    pub fn r_match(&self) -> f64 {
        self.r(self.k_match)
    }

    /// Factor mapping a defect at the matching radius back to the well.
    pub fn decay_scale(&self, kappa_re: f64) -> f64 {
        (-kappa_re * (self.r_match() - self.b)).exp()
    }
}

/// Integrates node to node from `r = 0` to the matching node, applying
/// `jump` on arrival at the well node unless the wells are Gaussian.
/// Returns the post-jump samples.
pub(crate) fn march<const M: usize, F, J>(layout: &Layout, y0: [C64; M], rhs: F, jump: J) -> Result<Vec<[C64; M]>>
where
    F: Fn(f64, &[C64; M]) -> [C64; M],
    J: Fn(&mut [C64; M]),
{
    let mut ode = Dopri5::<M>::new(Tolerance::default(), 0.5 * layout.dx);
    // the matching radius keeps honest trial solutions within a few hundred
    // times their starting size
    ode.max_norm = 1e8 * y0.iter().fold(1.0f64, |m, v| m.max(v.norm()));
    let mut y = y0;
    let mut out = Vec::with_capacity(layout.k_match + 1);
    let mut r0 = 0.0;
    for k in 0..=layout.k_match {
        let r1 = layout.r(k);
        ode.integrate(&rhs, r0, r1, &mut y)?;
        if k == layout.k_well && layout.width.is_none() {
            jump(&mut y);
        }
        out.push(y);
        r0 = r1;
    }
    Ok(out)
}

/// Leading amplitude `xi` with `psi_m = xi - c |xi|^2 xi`.
pub(crate) fn leading_amplitude(psi_m: C64, c: C64) -> C64 {
    let mut xi = psi_m;
    for _ in 0..4 {
        xi = psi_m + c * xi.norm_sqr() * xi;
    }
    xi
}

/// Decaying exterior solution `xi - c |xi|^2 xi`, `xi ~ exp(-kappa r)`,
/// continued from the value `psi_m` a distance `dr` further out.
pub(crate) fn exterior_tail(psi_m: C64, kappa: C64, c: C64, dr: f64) -> C64 {
    let x = leading_amplitude(psi_m, c) * (-kappa * dr).exp();
    x - c * x.norm_sqr() * x
}

/// Coefficient of the cubic correction of the decaying exterior solution.
pub(crate) fn tail_coefficient(g: f64, kappa: C64) -> C64 {
    let kr = kappa.re;
    g / (4.0 * kr * (kr + kappa))
}

struct HalfLine {
    psi: Vec<C64>,
    /// Scaled decay defect `Psi' + kappa Psi - g |Psi|^2 Psi / (2 (kr + kappa))`.
    defect: C64,
    /// Derivative just outside the well.
    dpsi_well: C64,
    /// `int_0^inf |Psi|^2 dr`, integrated alongside the state.
    norm: f64,
}

/// `well` is the strength of the well on this half line; the far well has
/// the conjugate strength.
fn half_line(layout: &Layout, psi0: C64, dpsi0: C64, kappa: C64, g: f64, well: C64) -> Result<HalfLine> {
    let k2 = kappa * kappa;
    let far = well.conj();
    let f = |r: f64, y: &[C64; 3]| {
        let d = y[0].norm_sqr();
        let (gn, gf) = layout.profiles(r);
        let v = k2 - g * d - well * gn - far * gf;
        [y[1], v * y[0], C64::new(d, 0.0)]
    };
    let jump = |y: &mut [C64; 3]| y[1] -= well * y[0];
    let s = march(layout, [psi0, dpsi0, C64::new(0.0, 0.0)], f, jump)?;
    let [pm, dpm, nm] = s[layout.k_match];
    let c = tail_coefficient(g, kappa);
    let defect = (dpm + kappa * pm - 2.0 * kappa.re * c * pm.norm_sqr() * pm) * layout.decay_scale(kappa.re);
    let mut psi: Vec<C64> = s.iter().map(|y| y[0]).collect();
    let rm = layout.r_match();
    for k in layout.k_match + 1..layout.n_half {
        psi.push(exterior_tail(pm, kappa, c, layout.r(k) - rm));
    }
    let d = leading_amplitude(pm, c).norm_sqr();
    let kr = kappa.re;
    let tail = d / (2.0 * kr) - 2.0 * c.re * d * d / (4.0 * kr);
    Ok(HalfLine {
        psi,
        defect,
        dpsi_well: s[layout.k_well][1],
        norm: nm.re + tail,
    })
}

/// Full-line samples from half-line samples ordered outward from the origin.
pub(crate) fn assemble(left: &[C64], right: &[C64]) -> Vec<C64> {
    let n_half = right.len();
    let mut psi = vec![C64::new(0.0, 0.0); 2 * n_half];
    for k in 0..n_half {
        psi[n_half + k] = right[k];
        psi[n_half - 1 - k] = left[k];
    }
    psi
}

/// The five real shooting unknowns with `Psi(0)` real.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingUnknowns {
    pub psi0_re: f64,
    pub dpsi0: C64,
    pub kappa: C64,
}

impl ShootingUnknowns {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.psi0_re,
            self.dpsi0.re,
            self.dpsi0.im,
            self.kappa.re,
            self.kappa.im,
        ])
    }

    pub fn from_vector(v: &DVector<f64>) -> Self {
        Self {
            psi0_re: v[0],
            dpsi0: C64::new(v[1], v[2]),
            kappa: C64::new(v[3], v[4]),
        }
    }

    /// Initial data of a linear state, rotated so that `Psi(0)` is real.
    pub fn from_linear(s: &LinearState) -> Self {
        let p = s.psi0();
        let rot = if p.norm() > 1e-12 { p.conj() / p.norm() } else { C64::new(1.0, 0.0) };
        Self {
            psi0_re: (p * rot).re,
            dpsi0: s.dpsi0() * rot,
            kappa: s.kappa.kappa,
        }
    }

    /// Image under `Psi(x) -> Psi*(-x)`, which maps solutions to solutions.
    pub fn pt_partner(&self) -> Self {
        Self {
            psi0_re: self.psi0_re,
            dpsi0: -self.dpsi0.conj(),
            kappa: self.kappa.conj(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingResiduals {
    pub decay_plus: C64,
    pub decay_minus: C64,
    pub norm_defect: f64,
}

impl ShootingResiduals {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_vec(vec![
            self.decay_plus.re,
            self.decay_plus.im,
            self.decay_minus.re,
            self.decay_minus.im,
            self.norm_defect,
        ])
    }

    pub fn max_abs(&self) -> f64 {
        self.to_vector().amax()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub condition: f64,
}

/// Which unknowns produced a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateUnknowns {
    Shooting(ShootingUnknowns),
    Continuation(ContinuationUnknowns),
}

/// Root-search formulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    /// Three unknowns `(Psi(0), Im Psi'(0), kappa)` restricted to PT-symmetric states.
    PtReduced,
    /// Five unknowns with `Psi(0)` real.
    Full,
    /// Six unknowns of the analytically continued problem.
    Continuation,
}

/// Converged stationary state with its unknowns and convergence report.
#[derive(Debug, Clone)]
pub struct NonlinearState {
    pub state: GridState,
    pub unknowns: StateUnknowns,
    pub report: ConvergenceReport,
}

impl NonlinearState {
    pub fn kappa(&self) -> C64 {
        self.state.kappa.kappa
    }

    pub fn branch(&self) -> Branch {
        self.state.kappa.branch
    }

    pub fn params(&self) -> &ModelParams {
        &self.state.params
    }

    pub fn psi0(&self) -> C64 {
        match self.unknowns {
            StateUnknowns::Shooting(u) => C64::new(u.psi0_re, 0.0),
            StateUnknowns::Continuation(c) => c.psi0,
        }
    }

    pub fn dpsi0(&self) -> C64 {
        match self.unknowns {
            StateUnknowns::Shooting(u) => u.dpsi0,
            StateUnknowns::Continuation(c) => c.dpsi0,
        }
    }

    /// Formulation that continues this state most robustly.
    pub fn solver_kind(&self) -> SolverKind {
        match self.unknowns {
            StateUnknowns::Continuation(_) => SolverKind::Continuation,
            StateUnknowns::Shooting(_) if self.branch().is_real() => SolverKind::PtReduced,
            StateUnknowns::Shooting(_) => SolverKind::Full,
        }
    }

    pub fn unknown_vector(&self, kind: SolverKind) -> DVector<f64> {
        let (p, d, k) = (self.psi0(), self.dpsi0(), self.kappa());
        match kind {
            SolverKind::PtReduced => DVector::from_vec(vec![p.re, d.im, k.re]),
            SolverKind::Full => DVector::from_vec(vec![p.re, d.re, d.im, k.re, k.im]),
            SolverKind::Continuation => DVector::from_vec(vec![p.re, p.im, d.re, d.im, k.re, k.im]),
        }
    }
}

/// Real-branch label from the weight of the even real part: the ground state
/// is cosh-like in `Re(Psi)`, the excited state sinh-like in `Im(Psi)`.
pub fn real_branch_label(psi: &[C64]) -> Branch {
    let (re, im) = psi
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.re * p.re, b + p.im * p.im));
    if re >= im {
        Branch::GroundReal
    } else {
        Branch::ExcitedReal
    }
}

fn label_for(kappa: C64, psi: &[C64], hint: Option<Branch>, continuation: bool) -> Branch {
    if kappa.im.abs() > REAL_KAPPA_TOL {
        return Branch::complex_for(kappa, continuation);
    }
    match hint {
        Some(b) if b.is_real() => b,
        _ => real_branch_label(psi),
    }
}

/// Residual evaluator bound to one grid and matching layout.
pub(crate) struct Shooter {
    pub params: ModelParams,
    pub grid: Grid,
    pub layout: Layout,
}

impl Shooter {
    pub fn new(params: &ModelParams, kappa_re: f64) -> Result<Self> {
        let grid = Grid::new(params)?;
        let layout = Layout::new(&grid, params.b(), kappa_re).with_width(params.well_width);
        Ok(Self {
            params: *params,
            grid,
            layout,
        })
    }


    pub fn relayout(&mut self, kappa_re: f64) {
        self.layout = Layout::new(&self.grid, self.params.b(), kappa_re).with_width(self.params.well_width);
    }

    fn check_kappa(kappa: C64) -> Result<()> {
        if kappa.re > 0.0 && kappa.is_finite() {
            Ok(())
        } else {
            Err(PtError::KappaConstraint(kappa))
        }
    }

    pub fn full(&self, u: &ShootingUnknowns) -> Result<(Vec<C64>, ShootingResiduals)> {
        Self::check_kappa(u.kappa)?;
        let p = &self.params;
        let psi0 = C64::new(u.psi0_re, 0.0);
        let right = half_line(&self.layout, psi0, u.dpsi0, u.kappa, p.g, p.kappa0().conj())?;
        let left = half_line(&self.layout, psi0, -u.dpsi0, u.kappa, p.g, p.kappa0())?;
        let psi = assemble(&left.psi, &right.psi);
        let norm = left.norm + right.norm;
        Ok((
            psi,
            ShootingResiduals {
                decay_plus: right.defect,
                decay_minus: -left.defect,
                norm_defect: norm - 1.0,
            },
        ))
    }

    /// PT-symmetric residuals at gain/loss `gamma`: the right decay defect
    /// and the norm defect, with the left half line the PT image.
    pub fn reduced(&self, p0: f64, dpi: f64, kappa: f64, gamma: f64) -> Result<(Vec<C64>, [f64; 3])> {
        let k = C64::new(kappa, 0.0);
        Self::check_kappa(k)?;
        let well = C64::new(1.0, -gamma);
        let right = half_line(&self.layout, C64::new(p0, 0.0), C64::new(0.0, dpi), k, self.params.g, well)?;
        let left: Vec<C64> = right.psi.iter().map(|z| z.conj()).collect();
        let psi = assemble(&left, &right.psi);
        let norm = 2.0 * right.norm;
        Ok((psi, [right.defect.re, right.defect.im, norm - 1.0]))
    }

    fn grid_state(&self, psi: Vec<C64>, kappa: Eigenvalue, phase: PhaseConvention) -> GridState {
        GridState {
            psi,
            kappa,
            params: self.params,
            phase_convention: phase,
            grid: self.grid.clone(),
        }
    }
}

fn newton_opts() -> NewtonOptions {
    NewtonOptions::default()
}

/// Samples the state defined by shooting unknowns on the parameter grid.
pub fn integrate_piecewise(u: &ShootingUnknowns, params: &ModelParams) -> Result<GridState> {
    let sh = Shooter::new(params, u.kappa.re)?;
    let (psi, _) = sh.full(u)?;
    let branch = label_for(u.kappa, &psi, None, false);
    let kappa = Eigenvalue::new(u.kappa, branch)?;
    Ok(sh.grid_state(psi, kappa, PhaseConvention::RealAtOrigin))
}

/// `int |Psi|^2 dx` integrated alongside the state (exact up to the
/// integrator tolerance, unlike the grid quadrature).
pub fn integrated_norm2(s: &NonlinearState) -> Result<f64> {
    match s.unknowns {
        StateUnknowns::Shooting(u) => Ok(shoot_residuals(&u, s.params())?.norm_defect + 1.0),
        StateUnknowns::Continuation(_) => Ok(continuation::integrated_norms(s)?.1),
    }
}

pub fn shoot_residuals(u: &ShootingUnknowns, params: &ModelParams) -> Result<ShootingResiduals> {
    let sh = Shooter::new(params, u.kappa.re)?;
    Ok(sh.full(u)?.1)
}

pub(crate) fn solve_full_with(sh: &Shooter, guess: &ShootingUnknowns, hint: Option<Branch>) -> Result<NonlinearState> {
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(sh.full(&ShootingUnknowns::from_vector(x))?.1.to_vector())
    };
    let rep = newton::solve(f, guess.to_vector(), newton_opts(), |x| x[3] > 0.0)?;
    let u = ShootingUnknowns::from_vector(&rep.x);
    let (psi, _) = sh.full(&u)?;
    let branch = label_for(u.kappa, &psi, hint, false);
    Ok(NonlinearState {
        state: sh.grid_state(psi, Eigenvalue::new(u.kappa, branch)?, PhaseConvention::RealAtOrigin),
        unknowns: StateUnknowns::Shooting(u),
        report: ConvergenceReport {
            iterations: rep.iterations,
            residual_norm: rep.residual_norm,
            condition: rep.condition,
        },
    })
}

/// Damped Newton search on the five shooting unknowns.
pub fn solve_stationary(guess: &ShootingUnknowns, params: &ModelParams) -> Result<NonlinearState> {
    let sh = Shooter::new(params, guess.kappa.re)?;
    solve_full_with(&sh, guess, None)
}

pub(crate) fn solve_reduced_with(sh: &Shooter, x0: [f64; 3], hint: Option<Branch>) -> Result<NonlinearState> {
    let gamma = sh.params.gamma;
    let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
        Ok(DVector::from_row_slice(&sh.reduced(x[0], x[1], x[2], gamma)?.1))
    };
    let rep = newton::solve(f, DVector::from_row_slice(&x0), newton_opts(), |x| x[2] > 0.0)?;
    let (p0, dpi, k) = (rep.x[0], rep.x[1], rep.x[2]);
    let (psi, _) = sh.reduced(p0, dpi, k, gamma)?;
    let kappa = C64::new(k, 0.0);
    let branch = label_for(kappa, &psi, hint, false);
    Ok(NonlinearState {
        state: sh.grid_state(psi, Eigenvalue::new(kappa, branch)?, PhaseConvention::RealAtOrigin),
        unknowns: StateUnknowns::Shooting(ShootingUnknowns {
            psi0_re: p0,
            dpsi0: C64::new(0.0, dpi),
            kappa,
        }),
        report: ConvergenceReport {
            iterations: rep.iterations,
            residual_norm: rep.residual_norm,
            condition: rep.condition,
        },
    })
}

/// Newton search restricted to PT-symmetric states (`Psi'(0)` imaginary,
/// `kappa` real). Regular at the symmetry-breaking bifurcation, where the
/// five-dimensional search is singular.
pub fn solve_pt_symmetric(guess: &ShootingUnknowns, params: &ModelParams) -> Result<NonlinearState> {
    let sh = Shooter::new(params, guess.kappa.re)?;
    solve_reduced_with(&sh, [guess.psi0_re, guess.dpsi0.im, guess.kappa.re], None)
}

/// Re-solves `x` (in the layout of `kind`) at `params`.
pub fn resolve(kind: SolverKind, x: &DVector<f64>, params: &ModelParams, hint: Option<Branch>) -> Result<NonlinearState> {
    match kind {
        SolverKind::PtReduced => {
            let sh = Shooter::new(params, x[2])?;
            solve_reduced_with(&sh, [x[0], x[1], x[2]], hint)
        }
        SolverKind::Full => {
            let u = ShootingUnknowns::from_vector(x);
            let sh = Shooter::new(params, u.kappa.re)?;
            solve_full_with(&sh, &u, hint)
        }
        SolverKind::Continuation => continuation::solve_continuation(&ContinuationUnknowns::from_vector(x), params),
    }
}

/// Nonlinear state seeded directly from a linear state at `g = 0`.
pub fn from_linear(s: &LinearState, params: &ModelParams) -> Result<NonlinearState> {
    let p = params.with_g(0.0).with_gamma(s.params.gamma);
    let u = ShootingUnknowns::from_linear(s);
    if s.kappa.branch.is_real() {
        let sh = Shooter::new(&p, u.kappa.re)?;
        solve_reduced_with(&sh, [u.psi0_re, u.dpsi0.im, u.kappa.re], Some(s.kappa.branch))
    } else {
        let sh = Shooter::new(&p, u.kappa.re)?;
        solve_full_with(&sh, &u, Some(s.kappa.branch))
    }
}

/// Continuation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Homotopy {
    Gamma,
    G,
}

impl Homotopy {
    fn get(self, p: &ModelParams) -> f64 {
        match self {
            Homotopy::Gamma => p.gamma,
            Homotopy::G => p.g,
        }
    }

    fn set(self, p: &ModelParams, v: f64) -> ModelParams {
        match self {
            Homotopy::Gamma => p.with_gamma(v),
            Homotopy::G => p.with_g(v),
        }
    }
}

/// Result of a parameter continuation. `termination` explains an early stop.
#[derive(Debug, Clone)]
pub struct BranchTrace {
    pub states: Vec<NonlinearState>,
    pub termination: Option<String>,
}

impl BranchTrace {
    pub fn last(&self) -> Option<&NonlinearState> {
        self.states.last()
    }

    pub fn reached(&self, target: f64, param: Homotopy) -> bool {
        self.termination.is_none()
            && self
                .last()
                .map(|s| (param.get(s.params()) - target).abs() < 1e-12)
                .unwrap_or(false)
    }
}

/// Parameter homotopy from `start` towards `target` in `steps` nominal
/// steps. Each solve is seeded by secant extrapolation of the previous two
/// solutions; failed steps are halved until they fall below `1e-7`.
pub fn continue_branch(start: &NonlinearState, param: Homotopy, target: f64, steps: usize) -> BranchTrace {
    let kind = start.solver_kind();
    let base = *start.params();
    let p_start = param.get(&base);
    let h0 = (target - p_start) / steps.max(1) as f64;
    let mut states = vec![start.clone()];
    if h0 == 0.0 {
        return BranchTrace {
            states,
            termination: None,
        };
    }
    let mut hist: Vec<(f64, DVector<f64>)> = vec![(p_start, start.unknown_vector(kind))];
    let mut h = h0;
    let mut current = p_start;
    let dir = h0.signum();
    while (target - current) * dir > 1e-13 {
        let next = if (current + h - target) * dir > -1e-9 * h.abs() { target } else { current + h };
        let guess = match hist.len() {
            1 => hist[0].1.clone(),
            n => {
                let (pa, xa) = &hist[n - 2];
                let (pb, xb) = &hist[n - 1];
                xb + (xb - xa) * ((next - pb) / (pb - pa))
            }
        };
        let params = param.set(&base, next);
        let prev = states.last().unwrap();
        let hint = Some(prev.branch());
        let attempt = resolve(kind, &guess, &params, hint).or_else(|_| {
            // a secant predictor can overshoot near turning points
            resolve(kind, &hist.last().unwrap().1, &params, hint)
        });
        match attempt {
            Ok(s) if (s.kappa() - prev.kappa()).norm() < 0.2 => {
                hist.push((next, s.unknown_vector(kind)));
                states.push(s);
                current = next;
                if h.abs() < h0.abs() {
                    h = (h * 1.5).abs().min(h0.abs()) * dir;
                }
            }
            _ => {
                h *= 0.5;
                if h.abs() < 1e-7 {
                    return BranchTrace {
                        states,
                        termination: Some(format!(
                            "step underflow at {param:?} = {current:.8}: no convergence towards {target}"
                        )),
                    };
                }
            }
        }
    }
    BranchTrace {
        states,
        termination: None,
    }
}

fn require(trace: BranchTrace, what: &str) -> Result<NonlinearState> {
    match trace.termination {
        None => Ok(trace.states.into_iter().last().unwrap()),
        Some(t) => Err(PtError::Diagnostic(format!("{what}: {t}"))),
    }
}

/// Ground (or excited) PT-symmetric state at `gamma = 0`, obtained from the
/// linear state by continuation in `g`.
pub fn real_state_at_zero_gamma(params: &ModelParams, branch: Branch) -> Result<NonlinearState> {
    let p0 = params.with_gamma(0.0);
    let lin = linear::principal_pair(&p0.with_g(0.0))?;
    let e = lin
        .into_iter()
        .find(|e| e.branch == branch)
        .ok_or_else(|| PtError::Diagnostic(format!("no linear {branch} state at a = {}", params.a)))?;
    let ls = linear::build_linear_state(e, &p0.with_g(0.0))?;
    let s = from_linear(&ls, &p0)?;
    let steps = (params.g.abs() / 0.1).ceil().max(1.0) as usize;
    require(continue_branch(&s, Homotopy::G, params.g, steps), "g continuation at gamma = 0")
}

/// Gain/loss at which the decaying complex branch is seeded from the linear
/// problem: safely above the linear exceptional point.
pub fn complex_seed_gamma(a: f64) -> Result<f64> {
    Ok(linear::linear_exceptional_point(a, 1e-8)? + 0.05)
}

/// Decaying complex-`kappa` state at `params`, continued in `g` from the
/// linear complex root at a seed gain/loss and then in `gamma`.
pub fn complex_state(params: &ModelParams) -> Result<NonlinearState> {
    let gs = complex_seed_gamma(params.a)?.max(params.gamma);
    let lin_params = params.with_g(0.0).with_gamma(gs);
    let pair = linear::principal_pair(&lin_params)?;
    let e = pair
        .into_iter()
        .find(|e| e.branch == Branch::ComplexDecaying)
        .ok_or_else(|| PtError::Diagnostic(format!("no linear complex pair at gamma = {gs}")))?;
    let ls = linear::build_linear_state(e, &lin_params)?;
    let s = from_linear(&ls, &params.with_gamma(gs))?;
    let steps = (params.g.abs() / 0.05).ceil().max(1.0) as usize;
    let s = require(continue_branch(&s, Homotopy::G, params.g, steps), "g continuation of the complex branch")?;
    let steps = ((gs - params.gamma).abs() / 0.01).ceil().max(1.0) as usize;
    require(continue_branch(&s, Homotopy::Gamma, params.gamma, steps), "gamma continuation of the complex branch")
}

/// Solves for the PT partner `Psi*(-x)` of a full shooting solution, seeded
/// with the mapped unknowns.
pub fn pt_partner(s: &NonlinearState) -> Result<NonlinearState> {
    match s.unknowns {
        StateUnknowns::Shooting(u) => {
            let sh = Shooter::new(s.params(), u.kappa.re)?;
            solve_full_with(&sh, &u.pt_partner(), None)
        }
        StateUnknowns::Continuation(c) => continuation::solve_continuation(&c.pt_partner(), s.params()),
    }
}

/// One point of the traced real loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopPoint {
    pub gamma: f64,
    pub kappa: f64,
    pub psi0: f64,
    pub dpsi0_im: f64,
}

impl LoopPoint {
    fn from_vec(v: &DVector<f64>) -> Self {
        Self {
            psi0: v[0],
            dpsi0_im: v[1],
            kappa: v[2],
            gamma: v[3],
        }
    }
}

/// The connected pair of real branches from the ground state at `gamma = 0`
/// through their coalescence back to the excited state at `gamma = 0`.
#[derive(Debug, Clone)]
pub struct RealLoop {
    pub params: ModelParams,
    pub points: Vec<LoopPoint>,
    /// Index of the turning point in `gamma`; the ground branch is
    /// `points[..=fold]`, the excited branch `points[fold..]`.
    pub fold: usize,
    pub gamma_cr: f64,
}

struct Arc {
    sh: std::cell::RefCell<Shooter>,
    opts: NewtonOptions,
}

impl Arc {
    fn residual(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        let sh = self.sh.borrow();
        Ok(DVector::from_row_slice(&sh.reduced(z[0], z[1], z[2], z[3])?.1))
    }

    fn tangent(&self, z: &DVector<f64>, prev: &DVector<f64>) -> Result<DVector<f64>> {
        let f = |x: &DVector<f64>| self.residual(x);
        let fz = f(z)?;
        let jac = newton::fd_jacobian(&f, z, &fz, 1e-7)?;
        let mut m = nalgebra::DMatrix::zeros(4, 4);
        m.view_mut((0, 0), (3, 4)).copy_from(&jac);
        m.set_row(3, &prev.transpose());
        let rhs = DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]);
        let t = m
            .lu()
            .solve(&rhs)
            .ok_or(PtError::SingularJacobian { condition: f64::INFINITY })?;
        let t = t.normalize();
        Ok(if t.dot(prev) < 0.0 { -t } else { t })
    }

    fn correct(&self, z: &DVector<f64>, t: &DVector<f64>, s: f64) -> Result<DVector<f64>> {
        let zp = z + t * s;
        self.sh.borrow_mut().relayout(zp[2]);
        let f = |x: &DVector<f64>| -> Result<DVector<f64>> {
            let r = self.residual(x)?;
            Ok(DVector::from_vec(vec![r[0], r[1], r[2], t.dot(&(x - &zp))]))
        };
        Ok(newton::solve(f, zp.clone(), self.opts, |x| x[2] > 0.0)?.x)
    }
}

/// Traces the real loop at `(a, g)` by pseudo-arclength continuation of the
/// PT-symmetric problem with `gamma` as a free unknown. The turning point is
/// refined by bisection on the sign of the tangent's `gamma` component.
pub fn trace_real_loop(params: &ModelParams) -> Result<RealLoop> {
    let ground = real_state_at_zero_gamma(params, Branch::GroundReal)?;
    let base = params.with_gamma(0.0);
    let sh = Shooter::new(&base, ground.kappa().re)?;
    let arc = Arc {
        sh: std::cell::RefCell::new(sh),
        opts: NewtonOptions {
            max_iter: 30,
            ..NewtonOptions::default()
        },
    };
    let g0 = ground.unknown_vector(SolverKind::PtReduced);
    let mut z = DVector::from_vec(vec![g0[0], g0[1], g0[2], 0.0]);
    let mut t = arc.tangent(&z, &DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0]))?;
    let mut points = vec![LoopPoint::from_vec(&z)];
    let (h_min, h_max) = (1e-6, 0.04);
    let mut h = 0.01;
    let mut fold: Option<(usize, f64)> = None;
    for _ in 0..5000 {
        let step = arc.correct(&z, &t, h).and_then(|zn| arc.tangent(&zn, &t).map(|tn| (zn, tn)));
        let (zn, tn) = match step {
            Ok(v) if (&v.0 - &z).norm() < 3.0 * h => v,
            _ => {
                h *= 0.5;
                if h < h_min {
                    return Err(PtError::Diagnostic(format!(
                        "real loop continuation stalled at gamma = {:.6}, kappa = {:.6}",
                        z[3], z[2]
                    )));
                }
                continue;
            }
        };
        if fold.is_none() && t[3] > 0.0 && tn[3] <= 0.0 {
            // bisect the step length for the sign change of d gamma / ds
            let (mut lo, mut hi) = (0.0, h);
            let mut best = zn.clone();
            while hi - lo > 1e-9 {
                let mid = 0.5 * (lo + hi);
                let zm = arc.correct(&z, &t, mid)?;
                let tm = arc.tangent(&zm, &t)?;
                if tm[3] > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                best = zm;
            }
            points.push(LoopPoint::from_vec(&best));
            fold = Some((points.len() - 1, best[3]));
        }
        if zn[3] < 0.0 {
            // close the loop exactly at gamma = 0 on the excited side
            let mut sh = Shooter::new(&base, zn[2])?;
            sh.relayout(zn[2]);
            let s = solve_reduced_with(&sh, [zn[0], zn[1], zn[2]], Some(Branch::ExcitedReal))
                .or_else(|_| real_state_at_zero_gamma(params, Branch::ExcitedReal));
            if let Ok(s) = s {
                let v = s.unknown_vector(SolverKind::PtReduced);
                points.push(LoopPoint {
                    psi0: v[0],
                    // the odd state has a free sign; keep the loop continuous
                    dpsi0_im: v[1].abs().copysign(zn[1]),
                    kappa: v[2],
                    gamma: 0.0,
                });
            }
            break;
        }
        if zn[2] < 1e-3 {
            break;
        }
        points.push(LoopPoint::from_vec(&zn));
        z = zn;
        t = tn;
        h = (h * 1.3).min(h_max);
    }
    let (fold, gamma_cr) = fold.ok_or_else(|| PtError::Diagnostic("real branches never coalesce".into()))?;
    Ok(RealLoop {
        params: *params,
        points,
        fold,
        gamma_cr,
    })
}

impl RealLoop {
    pub fn ground_branch(&self) -> &[LoopPoint] {
        &self.points[..=self.fold]
    }

    pub fn excited_branch(&self) -> &[LoopPoint] {
        &self.points[self.fold..]
    }

    /// Interpolated reduced unknowns on one side of the loop at `gamma`.
    fn seed(side: &[LoopPoint], gamma: f64) -> Option<[f64; 3]> {
        side.windows(2).find_map(|w| {
            let (p, q) = (w[0], w[1]);
            let (lo, hi) = if p.gamma <= q.gamma { (p, q) } else { (q, p) };
            if gamma >= lo.gamma && gamma <= hi.gamma {
                let s = if hi.gamma > lo.gamma { (gamma - lo.gamma) / (hi.gamma - lo.gamma) } else { 0.0 };
                let l = |a: f64, b: f64| a + s * (b - a);
                Some([l(lo.psi0, hi.psi0), l(lo.dpsi0_im, hi.dpsi0_im), l(lo.kappa, hi.kappa)])
            } else {
                None
            }
        })
    }

    /// Converged real state of the given branch at `gamma`, if it exists.
    pub fn state(&self, branch: Branch, gamma: f64) -> Result<NonlinearState> {
        let side = match branch {
            Branch::GroundReal => self.ground_branch(),
            Branch::ExcitedReal => self.excited_branch(),
            _ => return Err(PtError::Domain(format!("{branch} is not a real branch"))),
        };
        let x0 = Self::seed(side, gamma).ok_or_else(|| {
            PtError::Diagnostic(format!("no {branch} state at gamma = {gamma} (gamma_cr = {:.6})", self.gamma_cr))
        })?;
        let params = self.params.with_gamma(gamma);
        let sh = Shooter::new(&params, x0[2])?;
        solve_reduced_with(&sh, x0, Some(branch))
    }
}

/// Ground and excited states at `params` (empty above the coalescence).
pub fn real_states(params: &ModelParams) -> Result<Vec<NonlinearState>> {
    let lp = trace_real_loop(params)?;
    let mut out = Vec::new();
    for b in [Branch::GroundReal, Branch::ExcitedReal] {
        if params.gamma <= lp.gamma_cr {
            out.push(lp.state(b, params.gamma)?);
        }
    }
    Ok(out)
}

/// All stationary states at `params`: the real pair where it exists and the
/// complex pair where it exists, each complex state paired with its PT
/// partner.
pub fn stationary_solutions(params: &ModelParams) -> Result<Vec<NonlinearState>> {
    let (reals, complex) = rayon::join(|| real_states(params), || complex_state(params));
    let mut out = reals?;
    if let Ok(c) = complex {
        if c.kappa().im.abs() > REAL_KAPPA_TOL {
            let partner = pt_partner(&c)?;
            out.push(c);
            out.push(partner);
        }
    }
    Ok(out)
}

/// Located critical gain/loss values at `(a, g)`.
#[derive(Debug, Clone)]
pub struct CriticalPoints {
    pub a: f64,
    pub g: f64,
    /// Where the complex pair branches off the ground state.
    pub gamma_bifurcation: f64,
    /// Where the two real states coalesce.
    pub gamma_cr: f64,
    /// Independent estimate of the bifurcation from the sign change of the
    /// symmetry-breaking block of the shooting Jacobian along the ground branch.
    pub gamma_bifurcation_pitchfork: Option<f64>,
    pub tolerance: f64,
    /// `(gamma, complex state found)` pairs visited by the existence bisection.
    pub trace: Vec<(f64, bool)>,
}

/// Determinant of the symmetry-breaking block of the five-dimensional
/// shooting Jacobian at a PT-symmetric state: the derivative of
/// `R+ + conj(R-)` with respect to `Re Psi'(0)` and `Im kappa`.
pub fn pitchfork_determinant(s: &NonlinearState) -> Result<f64> {
    let StateUnknowns::Shooting(u) = s.unknowns else {
        return Err(PtError::Domain("needs a shooting state".into()));
    };
    let sh = Shooter::new(s.params(), u.kappa.re)?;
    let anti = |u: &ShootingUnknowns| -> Result<C64> {
        let r = sh.full(u)?.1;
        Ok(r.decay_plus + r.decay_minus.conj())
    };
    let e0 = anti(&u)?;
    let h = 1e-6;
    let mut a = u;
    a.dpsi0.re += h;
    let d1 = (anti(&a)? - e0) / h;
    let mut b = u;
    b.kappa.im += h;
    let d2 = (anti(&b)? - e0) / h;
    Ok(d1.re * d2.im - d1.im * d2.re)
}

fn complex_exists(s: &NonlinearState) -> bool {
    s.kappa().im.abs() > REAL_KAPPA_TOL
}

/// Locates the bifurcation of the complex pair and the coalescence of the
/// real pair at `(a, g)` on the default grid.
pub fn locate_critical_points(a: f64, g: f64) -> Result<CriticalPoints> {
    locate_critical_points_with(&ModelParams::new(a, 0.0, g))
}

pub fn locate_critical_points_with(params: &ModelParams) -> Result<CriticalPoints> {
    let tol = 1e-5;
    let (a, g) = (params.a, params.g);
    if g == 0.0 {
        let ep = linear::linear_exceptional_point(a, 1e-9)?;
        return Ok(CriticalPoints {
            a,
            g,
            gamma_bifurcation: ep,
            gamma_cr: ep,
            gamma_bifurcation_pitchfork: Some(ep),
            tolerance: 1e-9,
            trace: Vec::new(),
        });
    }
    let (lp, seed) = rayon::join(
        || trace_real_loop(params),
        || {
            let gs = complex_seed_gamma(a)?;
            complex_state(&params.with_gamma(gs))
        },
    );
    let lp = lp?;
    let seed = seed?;

    // march the complex branch down in gamma until it disappears
    let mut trace = Vec::new();
    let mut hi_state = seed;
    let mut lo;
    let dgamma = 0.01;
    loop {
        let gamma_hi = hi_state.params().gamma;
        trace.push((gamma_hi, true));
        let next = gamma_hi - dgamma;
        if next <= 0.0 {
            return Err(PtError::Bracket(format!("complex pair persists down to gamma = 0; trace {trace:?}")));
        }
        let tr = continue_branch(&hi_state, Homotopy::Gamma, next, 1);
        match tr.states.last() {
            Some(s) if tr.termination.is_none() && complex_exists(s) => hi_state = s.clone(),
            _ => {
                // the step halving may have got part of the way
                if let Some(s) = tr.states.iter().rev().find(|s| complex_exists(s)) {
                    if s.params().gamma < gamma_hi {
                        hi_state = s.clone();
                    }
                }
                lo = next;
                break;
            }
        }
    }
    let mut hi = hi_state.params().gamma;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let x = hi_state.unknown_vector(SolverKind::Full);
        let found = resolve(SolverKind::Full, &x, &hi_state.params().with_gamma(mid), None)
            .ok()
            .filter(complex_exists);
        trace.push((mid, found.is_some()));
        match found {
            Some(s) => {
                hi = mid;
                hi_state = s;
            }
            None => lo = mid,
        }
    }
    let gamma_bifurcation = 0.5 * (lo + hi);

    let pitchfork = pitchfork_crossing(&lp, gamma_bifurcation).ok();
    Ok(CriticalPoints {
        a,
        g,
        gamma_bifurcation,
        gamma_cr: lp.gamma_cr,
        gamma_bifurcation_pitchfork: pitchfork,
        tolerance: tol,
        trace,
    })
}

/// Sign change of [`pitchfork_determinant`] along the ground branch, bracketed
/// near `guess` and refined by bisection.
pub fn pitchfork_crossing(lp: &RealLoop, guess: f64) -> Result<f64> {
    let det = |gamma: f64| -> Result<f64> { pitchfork_determinant(&lp.state(Branch::GroundReal, gamma)?) };
    let gmax = lp.gamma_cr - 1e-4;
    let mut samples: Vec<f64> = (0..=20).map(|i| (guess - 0.05 + 0.005 * i as f64).min(gmax)).collect();
    samples.dedup();
    let values: Vec<(f64, f64)> = samples
        .par_iter()
        .filter_map(|&gm| if gm > 0.0 { det(gm).ok().map(|d| (gm, d)) } else { None })
        .collect();
    let w = values
        .windows(2)
        .find(|w| w[0].1.signum() != w[1].1.signum())
        .ok_or_else(|| PtError::Bracket("Jacobian block keeps its sign along the ground branch".into()))?;
    let (mut lo, mut hi) = (w[0].0, w[1].0);
    let s_lo = w[0].1.signum();
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if det(mid)?.signum() == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Least-squares fit of an exterior modulus to `c sech(kappa (x - x0))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SechFit {
    pub amplitude: f64,
    pub x0: f64,
    /// Largest absolute deviation over the fitted window.
    pub max_residual: f64,
    pub points: usize,
}

/// Fits `|Psi(x)|` for `a/2 < x <= r_match` on the right half line.
pub fn sech_tail_fit(s: &NonlinearState) -> Result<SechFit> {
    let k = s.kappa();
    if k.im.abs() > REAL_KAPPA_TOL {
        return Err(PtError::Domain("sech exterior only applies to real kappa".into()));
    }
    let kappa = k.re;
    let grid = &s.state.grid;
    let layout = Layout::new(grid, s.params().b(), kappa);
    let h = grid.first_positive();
    let idx: Vec<usize> = (layout.k_well + 1..=layout.k_match).map(|k| h + k).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| grid.x[i]).collect();
    let ys: Vec<f64> = idx.iter().map(|&i| s.state.psi[i].norm()).collect();
    // 1/|Psi| = P e^{kx} + Q e^{-kx} is linear in (P, Q)
    let a = nalgebra::DMatrix::from_fn(xs.len(), 2, |i, j| if j == 0 { (kappa * xs[i]).exp() } else { (-kappa * xs[i]).exp() });
    let w = DVector::from_iterator(ys.len(), ys.iter().map(|y| 1.0 / y));
    // weight rows by |Psi|^2 so the fit is uniform in |Psi|
    let wt = DVector::from_iterator(ys.len(), ys.iter().map(|y| y * y));
    let aw = nalgebra::DMatrix::from_fn(xs.len(), 2, |i, j| a[(i, j)] * wt[i]);
    let bw = w.component_mul(&wt);
    let pq = aw.svd(true, true).solve(&bw, 1e-300).map_err(|e| PtError::Diagnostic(e.into()))?;
    let (p, q) = (pq[0], pq[1]);
    if !(p > 0.0 && q > 0.0) {
        return Err(PtError::Diagnostic("exterior is not sech shaped".into()));
    }
    let amplitude = 1.0 / (2.0 * (p * q).sqrt());
    let x0 = (q / p).ln() / (2.0 * kappa);
    let max_residual = xs
        .iter()
        .zip(&ys)
        .map(|(&x, &y)| (amplitude / (kappa * (x - x0)).cosh() - y).abs())
        .fold(0.0, f64::max);
    Ok(SechFit {
        amplitude,
        x0,
        max_residual,
        points: xs.len(),
    })
}

/// Largest central-difference residual of the stationary equation
/// `-Psi'' - g |Psi|^2 Psi + kappa^2 Psi = 0` over nodes at least
/// `margin` nodes away from the wells.
pub fn stationarity_residual(s: &NonlinearState, margin: usize) -> f64 {
    let psi = &s.state.psi;
    let grid = &s.state.grid;
    let [l, r] = grid.well_indices;
    let k2 = s.kappa() * s.kappa();
    let g = s.params().g;
    let dx2 = grid.dx * grid.dx;
    (1..psi.len() - 1)
        .filter(|&i| i.abs_diff(l) > margin && i.abs_diff(r) > margin)
        .map(|i| {
            let lap = (psi[i + 1] - 2.0 * psi[i] + psi[i - 1]) / dx2;
            (-lap - g * psi[i].norm_sqr() * psi[i] + k2 * psi[i]).norm()
        })
        .fold(0.0, f64::max)
}

/// Derivative jump across the well at `+a/2` recovered by one-sided
/// integration, for diagnostics: returns `Psi'(b+) - Psi'(b-) + (1 - i gamma) Psi(b)`.
pub fn jump_defect_right(s: &NonlinearState) -> Result<C64> {
    let sh = Shooter::new(s.params(), s.kappa().re)?;
    let p = s.params();
    let before = half_line(&sh.layout, s.psi0(), s.dpsi0(), s.kappa(), p.g, C64::new(0.0, 0.0))?;
    let after = half_line(&sh.layout, s.psi0(), s.dpsi0(), s.kappa(), p.g, p.kappa0().conj())?;
    let psi_b = before.psi[sh.layout.k_well];
    Ok(after.dpsi_well - before.dpsi_well + p.kappa0().conj() * psi_b)
}
