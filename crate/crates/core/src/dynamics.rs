//! Split-operator propagation of the time-dependent equation
//! `i Psi_t = -Psi'' + V(x) Psi - g |Psi|^2 Psi` on a periodic grid, with the
//! point wells replaced by unit-weight Gaussians.
//!
//! The potential substep is integrated exactly: the density at each node
//! evolves as `rho0 exp(2 Im V t)` and the phase picks up the integral of the
//! instantaneous nonlinear term, so the scheme is the standard second-order
//! Strang splitting with no inner iteration.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{PtError, Result};
use crate::model::{gaussian, Grid, GridState, ModelParams};
use crate::stationary::{self, NonlinearState, REAL_KAPPA_TOL};

type C64 = Complex64;

/// Smallest admissible well width in grid units.
pub const MIN_WIDTH_CELLS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Gaussian well width in units of `dx`.
    #[serde(default = "default_width")]
    pub delta_width: f64,
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
    /// Abort once the edge density exceeds this fraction of the norm.
    #[serde(default = "default_boundary")]
    pub boundary_tolerance: f64,
    /// Truncate once `||Psi||^2` exceeds this.
    #[serde(default = "default_max_norm")]
    pub max_norm: f64,
    /// Keep full density frames (the scalar series are always kept).
    #[serde(default = "default_true")]
    pub store_densities: bool,
}

fn default_width() -> f64 {
    MIN_WIDTH_CELLS
}
fn default_stride() -> usize {
    100
}
fn default_boundary() -> f64 {
    1e-12
}
fn default_max_norm() -> f64 {
    1e6
}
fn default_true() -> bool {
    true
}

impl PropagationConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            delta_width: default_width(),
            snapshot_stride: default_stride(),
            boundary_tolerance: default_boundary(),
            max_norm: default_max_norm(),
            store_densities: true,
        }
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.snapshot_stride = stride;
        self
    }

    pub fn with_width(mut self, cells: f64) -> Self {
        self.delta_width = cells;
        self
    }

    pub fn without_densities(mut self) -> Self {
        self.store_densities = false;
        self
    }

    pub fn n_steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PtError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(PtError::Config(format!("t_final must be >= 0, got {}", self.t_final)));
        }
        let q = self.t_final / self.dt;
        let n = q.round();
        if (q - n).abs() > 1e-6 * q.max(1.0) {
            return Err(PtError::Config(format!(
                "t_final = {} is not a whole number of steps dt = {}",
                self.t_final, self.dt
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(PtError::Config("snapshot_stride must be >= 1".into()));
        }
        Ok(n as usize)
    }

    /// Absolute well width on `grid`.
    pub fn sigma(&self, grid: &Grid) -> f64 {
        self.delta_width * grid.dx
    }
}

/// Complex potential samples `V = Re + i Im` on a grid.
#[derive(Debug, Clone)]
pub struct Potential {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub sigma: f64,
}

/// Wells `-(1 +- i gamma) delta(x -+ a/2)` replaced by Gaussians of width
/// `sigma` centred on the well nodes, each rescaled so that its grid sum is
/// exactly one.
pub fn regularized_potential(params: &ModelParams, sigma: f64) -> Result<Potential> {
    let grid = Grid::new(params)?;
    potential_on(&grid, params, sigma)
}

pub(crate) fn potential_on(grid: &Grid, params: &ModelParams, sigma: f64) -> Result<Potential> {
    if !(sigma >= MIN_WIDTH_CELLS * grid.dx * (1.0 - 1e-12)) {
        return Err(PtError::Config(format!(
            "well width {sigma:.3e} is below {MIN_WIDTH_CELLS} dx = {:.3e}",
            MIN_WIDTH_CELLS * grid.dx
        )));
    }
    let lobe = |centre: f64| {
        let v: Vec<f64> = grid.x.iter().map(|&x| gaussian(x - centre, sigma)).collect();
        let s: f64 = v.iter().sum::<f64>() * grid.dx;
        v.into_iter().map(move |y| y / s)
    };
    let b = params.b();
    let (loss, gain): (Vec<f64>, Vec<f64>) = (lobe(-b).collect(), lobe(b).collect());
    let re = loss.iter().zip(&gain).map(|(l, r)| -(l + r)).collect();
    let im = loss.iter().zip(&gain).map(|(l, r)| params.gamma * (r - l)).collect();
    Ok(Potential { re, im, sigma })
}

/// Half-step factors and FFT plans for one grid, potential and step.
pub struct Propagator {
    n: usize,
    dx: f64,
    g: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    kinetic: Vec<C64>,
    /// Linear potential factor and nonlinear phase weight for a half step.
    half: (Vec<C64>, Vec<f64>),
    full: (Vec<C64>, Vec<f64>),
    scratch: Vec<C64>,
}

fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let l = n as f64 * dx;
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            2.0 * std::f64::consts::PI * m / l
        })
        .collect()
}

fn potential_factors(pot: &Potential, h: f64) -> (Vec<C64>, Vec<f64>) {
    pot.re
        .iter()
        .zip(&pot.im)
        .map(|(&vr, &vi)| {
            let lin = C64::from_polar((vi * h).exp(), -vr * h);
            let w = if (vi * h).abs() < 1e-12 { h } else { (2.0 * vi * h).exp_m1() / (2.0 * vi) };
            (lin, w)
        })
        .unzip()
}

impl Propagator {
    pub fn new(grid: &Grid, pot: &Potential, g: f64, dt: f64) -> Self {
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scale = 1.0 / n as f64;
        let kinetic = wavenumbers(n, grid.dx)
            .into_iter()
            .map(|k| C64::from_polar(scale, -k * k * dt))
            .collect();
        let scratch = vec![C64::new(0.0, 0.0); forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len())];
        Self {
            n,
            dx: grid.dx,
            g,
            forward,
            inverse,
            kinetic,
            half: potential_factors(pot, 0.5 * dt),
            full: potential_factors(pot, dt),
            scratch,
        }
    }

    fn potential(&self, psi: &mut [C64], full: bool) {
        let (lin, w) = if full { &self.full } else { &self.half };
        if self.g == 0.0 {
            psi.iter_mut().zip(lin).for_each(|(p, l)| *p *= l);
        } else {
            let g = self.g;
            for ((p, l), w) in psi.iter_mut().zip(lin).zip(w) {
                let ph = g * p.norm_sqr() * w;
                *p *= l * C64::new(ph.cos(), ph.sin());
            }
        }
    }

    fn kinetic(&mut self, psi: &mut [C64]) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        psi.iter_mut().zip(&self.kinetic).for_each(|(p, k)| *p *= k);
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }

    /// Advances `steps` Strang steps, fusing the interior potential halves.
    pub fn advance(&mut self, psi: &mut [C64], steps: usize) {
        if steps == 0 {
            return;
        }
        self.potential(psi, false);
        for s in 0..steps {
            self.kinetic(psi);
            self.potential(psi, s + 1 < steps);
        }
    }

    pub fn norm2(&self, psi: &[C64]) -> f64 {
        psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * self.dx
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// `|Psi(x, t)|^2` per frame; empty unless densities are stored.
    pub density_snapshots: Vec<Vec<f64>>,
    pub norm_history: Vec<f64>,
    /// Integrated density on `x < 0` and `x > 0` per frame.
    pub left_right_density: Vec<(f64, f64)>,
    /// Largest edge density relative to the norm seen at any frame.
    pub max_boundary_density: f64,
    pub overflow: bool,
    pub boundary_exceeded: bool,
    pub steps_taken: usize,
    #[serde(skip)]
    pub final_psi: Vec<C64>,
}

impl TrajectoryRecord {
    pub fn truncated(&self) -> bool {
        self.overflow || self.boundary_exceeded
    }

    /// `L - R` per frame.
    pub fn imbalance(&self) -> Vec<f64> {
        self.left_right_density.iter().map(|(l, r)| l - r).collect()
    }

    /// Fraction of the density in the gain well (`x > 0`) per frame.
    pub fn gain_fraction(&self) -> Vec<f64> {
        self.left_right_density.iter().map(|(l, r)| r / (l + r)).collect()
    }
}

fn edge_density(psi: &[C64], norm: f64, dx: f64) -> f64 {
    let n = psi.len();
    psi[0].norm_sqr().max(psi[n - 1].norm_sqr()) * dx / norm
}

fn half_densities(psi: &[C64], dx: f64) -> (f64, f64) {
    let h = psi.len() / 2;
    let l: f64 = psi[..h].iter().map(|p| p.norm_sqr()).sum();
    let r: f64 = psi[h..].iter().map(|p| p.norm_sqr()).sum();
    (l * dx, r * dx)
}

/// Propagates `initial` under the regularized potential of `params`.
pub fn propagate(initial: &GridState, config: &PropagationConfig, params: &ModelParams) -> Result<TrajectoryRecord> {
    let grid = Grid::new(params)?;
    if !grid.same_as(&initial.grid) {
        return Err(PtError::GridMismatch);
    }
    propagate_samples(&grid, initial.psi.clone(), config, params)
}

pub fn propagate_samples(grid: &Grid, mut psi: Vec<C64>, config: &PropagationConfig, params: &ModelParams) -> Result<TrajectoryRecord> {
    let steps = config.n_steps()?;
    if psi.len() != grid.len() {
        return Err(PtError::GridMismatch);
    }
    let pot = potential_on(grid, params, config.sigma(grid))?;
    let mut prop = Propagator::new(grid, &pot, params.g, config.dt);
    let mut rec = TrajectoryRecord::default();
    let dx = grid.dx;
    let frame = |rec: &mut TrajectoryRecord, psi: &[C64], step: usize| -> bool {
        let norm = prop_norm(psi, dx);
        rec.times.push(step as f64 * config.dt);
        rec.norm_history.push(norm);
        rec.left_right_density.push(half_densities(psi, dx));
        if config.store_densities {
            rec.density_snapshots.push(psi.iter().map(|p| p.norm_sqr()).collect());
        }
        let edge = edge_density(psi, norm, dx);
        rec.max_boundary_density = rec.max_boundary_density.max(edge);
        rec.steps_taken = step;
        if !norm.is_finite() || norm > config.max_norm {
            rec.overflow = true;
        }
        if edge > config.boundary_tolerance {
            rec.boundary_exceeded = true;
        }
        !rec.truncated()
    };
    if frame(&mut rec, &psi, 0) {
        let mut done = 0;
        while done < steps {
            let chunk = config.snapshot_stride.min(steps - done);
            prop.advance(&mut psi, chunk);
            done += chunk;
            if chunk < config.snapshot_stride {
                // the trailing partial stride is not a frame
                rec.steps_taken = done;
                break;
            }
            if !frame(&mut rec, &psi, done) {
                break;
            }
        }
    }
    rec.final_psi = psi;
    Ok(rec)
}

fn prop_norm(psi: &[C64], dx: f64) -> f64 {
    psi.iter().map(|p| p.norm_sqr()).sum::<f64>() * dx
}

/// Spectral derivative of periodic samples.
fn derivative(psi: &[C64], dx: f64) -> Vec<C64> {
    let n = psi.len();
    let mut planner = FftPlanner::new();
    let mut buf = psi.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    for (b, k) in buf.iter_mut().zip(wavenumbers(n, dx)) {
        *b *= C64::new(0.0, k / n as f64);
    }
    if n % 2 == 0 {
        buf[n / 2] = C64::new(0.0, 0.0);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf
}

/// Max-norm of `-Psi'' + V Psi - g |Psi|^2 Psi + kappa^2 Psi` with the
/// spectral second derivative and the regularized potential.
pub fn stationarity_defect(psi: &[C64], kappa: C64, grid: &Grid, params: &ModelParams, sigma: f64) -> Result<f64> {
    let pot = potential_on(grid, params, sigma)?;
    let d2 = derivative(&derivative(psi, grid.dx), grid.dx);
    let k2 = kappa * kappa;
    Ok((0..psi.len())
        .map(|i| {
            let v = C64::new(pot.re[i], pot.im[i]) - params.g * psi[i].norm_sqr();
            (-d2[i] + v * psi[i] + k2 * psi[i]).norm()
        })
        .fold(0.0, f64::max))
}

/// `E = int |Psi'|^2 + V |Psi|^2 - (g/2) |Psi|^4 dx` with the regularized
/// potential; real in the Hermitian limit.
pub fn energy(psi: &[C64], grid: &Grid, params: &ModelParams, sigma: f64) -> Result<C64> {
    let pot = potential_on(grid, params, sigma)?;
    let d = derivative(psi, grid.dx);
    let mut e = C64::new(0.0, 0.0);
    for i in 0..psi.len() {
        let rho = psi[i].norm_sqr();
        e += d[i].norm_sqr() + C64::new(pot.re[i], pot.im[i]) * rho - 0.5 * params.g * rho * rho;
    }
    Ok(e * grid.dx)
}

/// Re-solves a stationary state with Gaussian wells of width `sigma`, so
/// that it is stationary under the regularized propagation. The width is
/// raised from zero by an adaptive homotopy when the direct solve fails.
pub fn relax(state: &NonlinearState, sigma: f64) -> Result<NonlinearState> {
    let kind = state.solver_kind();
    let base = state.params().with_well_width(None);
    let hint = Some(state.branch());
    let mut cur = state.clone();
    let mut w = 0.0;
    let mut h = sigma;
    while w < sigma {
        let trial = (w + h).min(sigma);
        match stationary::resolve(kind, &cur.unknown_vector(kind), &base.with_well_width(Some(trial)), hint) {
            Ok(s) if layout_independent(&s) => {
                cur = s;
                w = trial;
                h *= 1.5;
            }
            r => {
                h *= 0.5;
                if h < 1e-4 * sigma {
                    return Err(r.err().unwrap_or_else(|| {
                        PtError::Diagnostic(format!("relaxation to sigma = {sigma} left the localized branch"))
                    }));
                }
            }
        }
    }
    Ok(cur)
}

/// A well-localized state still satisfies its matching conditions when the
/// matching radius is recomputed from the converged `kappa`; solutions that
/// pile up outside the wells do not.
fn layout_independent(s: &NonlinearState) -> bool {
    match s.unknowns {
        stationary::StateUnknowns::Shooting(u) => stationary::shoot_residuals(&u, s.params())
            .map(|r| r.max_abs() < 1e-8)
            .unwrap_or(false),
        stationary::StateUnknowns::Continuation(_) => true,
    }
}

/// Observed growth of `||Psi||^2` over a short window against the
/// eigenvalue prediction `-2 Im(kappa^2)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModeCheck {
    pub rate: f64,
    pub expected: f64,
    pub fit_residual: f64,
    pub t_window: f64,
}

/// Least-squares slope, intercept and max residual of `y` against `t`.
pub(crate) fn linear_fit(t: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let ym = y.iter().sum::<f64>() / n;
    let sxy: f64 = t.iter().zip(y).map(|(a, b)| (a - tm) * (b - ym)).sum();
    let sxx: f64 = t.iter().map(|a| (a - tm).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = ym - slope * tm;
    let res = t.iter().zip(y).map(|(a, b)| (b - icpt - slope * a).abs()).fold(0.0, f64::max);
    (slope, icpt, res)
}

/// Propagates a relaxed stationary state over `|Im(kappa^2)| t <= 0.1` (at
/// least `t_min`) and fits `log ||Psi(t)||^2`.
pub fn short_time_mode_check(state: &NonlinearState, config: &PropagationConfig, t_min: f64) -> Result<ModeCheck> {
    let params = state.params().with_well_width(None);
    let grid = Grid::new(&params)?;
    let relaxed = relax(state, config.sigma(&grid))?;
    let k2 = relaxed.kappa() * relaxed.kappa();
    let t = if k2.im.abs() > 0.0 { (0.1 / k2.im.abs()).min(10.0 * t_min.max(config.dt)) } else { t_min };
    let t = t.max(t_min);
    let stride = ((t / config.dt / 50.0).floor() as usize).max(1);
    let steps = ((t / config.dt) / stride as f64).floor() as usize * stride;
    let cfg = PropagationConfig {
        t_final: steps as f64 * config.dt,
        snapshot_stride: stride,
        store_densities: false,
        ..*config
    };
    let rec = propagate_samples(&grid, relaxed.state.psi.clone(), &cfg, &params)?;
    let logs: Vec<f64> = rec.norm_history.iter().map(|n| n.ln()).collect();
    let (rate, _, res) = linear_fit(&rec.times, &logs);
    let expected = -2.0 * k2.im;
    let scale = (expected.abs() * cfg.t_final).max(1e-6);
    if res > 0.05 * scale + 1e-8 {
        return Err(PtError::Diagnostic(format!(
            "norm growth is not exponential over the window (fit residual {res:.3e})"
        )));
    }
    Ok(ModeCheck {
        rate,
        expected,
        fit_residual: res,
        t_window: cfg.t_final,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    Centre,
    Saddle,
    Sink,
    Source,
    Indeterminate,
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Stability::Centre => "Centre",
            Stability::Saddle => "Saddle",
            Stability::Sink => "Sink",
            Stability::Source => "Source",
            Stability::Indeterminate => "Indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityConfig {
    pub dt: f64,
    /// Observation window.
    pub t_final: f64,
    pub delta_width: f64,
    /// Relative perturbation size.
    pub epsilon: f64,
    pub seeds: usize,
    pub seed: u64,
    /// Deviation growth factor that counts as unstable.
    pub growth_factor: f64,
    /// Deviation growth factor still counted as bounded.
    pub bounded_factor: f64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_final: 60.0,
            delta_width: MIN_WIDTH_CELLS,
            epsilon: 1e-4,
            seeds: 2,
            seed: 0,
            growth_factor: 20.0,
            bounded_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub tag: Stability,
    pub kappa: C64,
    /// Fitted exponential rate of the deviation, per seed.
    pub rates: Vec<f64>,
    /// Final over initial deviation, per seed.
    pub growth: Vec<f64>,
    pub times: Vec<f64>,
    /// Phase-aligned deviation from the unperturbed run, first seed.
    pub deviation: Vec<f64>,
}

/// Smooth random perturbation localized around the wells, unit norm.
pub fn smooth_perturbation(grid: &Grid, a: f64, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eta = vec![C64::new(0.0, 0.0); grid.len()];
    for _ in 0..6 {
        let centre = rng.gen_range(-a..a);
        let width = rng.gen_range(0.5..1.5);
        let c = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        for (e, &x) in eta.iter_mut().zip(&grid.x) {
            *e += c * (-0.5 * ((x - centre) / width).powi(2)).exp();
        }
    }
    let n = prop_norm(&eta, grid.dx).sqrt();
    eta.iter_mut().for_each(|e| *e /= n);
    eta
}

/// `min_phi ||u - exp(i phi) v|| / ||v||`.
fn aligned_deviation(u: &[C64], v: &[C64]) -> f64 {
    let mut uu = 0.0;
    let mut vv = 0.0;
    let mut uv = C64::new(0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        uu += a.norm_sqr();
        vv += b.norm_sqr();
        uv += b.conj() * a;
    }
    ((uu + vv - 2.0 * uv.norm()).max(0.0) / vv).sqrt()
}

fn lockstep(
    grid: &Grid,
    params: &ModelParams,
    cfg: &StabilityConfig,
    reference: &[C64],
    perturbed: &[C64],
    frames: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let pot = potential_on(grid, params, cfg.delta_width * grid.dx)?;
    let mut p_ref = Propagator::new(grid, &pot, params.g, cfg.dt);
    let mut p_per = Propagator::new(grid, &pot, params.g, cfg.dt);
    let steps = (cfg.t_final / cfg.dt).round() as usize;
    let stride = (steps / frames).max(1);
    let (mut a, mut b) = (reference.to_vec(), perturbed.to_vec());
    let mut times = vec![0.0];
    let mut dev = vec![aligned_deviation(&b, &a)];
    let mut done = 0;
    while done + stride <= steps {
        p_ref.advance(&mut a, stride);
        p_per.advance(&mut b, stride);
        done += stride;
        times.push(done as f64 * cfg.dt);
        let d = aligned_deviation(&b, &a);
        dev.push(d);
        if !d.is_finite() || d > 0.3 {
            break;
        }
    }
    Ok((times, dev))
}

/// Empirical stability of a stationary state. Complex eigenvalues are
/// tagged directly; real ones by propagating seeded perturbations of the
/// relaxed state next to the unperturbed state.
pub fn classify_stability(state: &NonlinearState, cfg: &StabilityConfig) -> Result<StabilityReport> {
    let kappa = state.kappa();
    let direct = |tag| StabilityReport {
        tag,
        kappa,
        rates: vec![],
        growth: vec![],
        times: vec![],
        deviation: vec![],
    };
    if kappa.im > REAL_KAPPA_TOL {
        return Ok(direct(Stability::Sink));
    }
    if kappa.im < -REAL_KAPPA_TOL {
        return Ok(direct(Stability::Source));
    }
    let params = state.params().with_well_width(None);
    let grid = Grid::new(&params)?;
    let relaxed = relax(state, cfg.delta_width * grid.dx)?;
    let base = &relaxed.state.psi;
    let scale = prop_norm(base, grid.dx).sqrt() * cfg.epsilon;
    let mut rates = Vec::new();
    let mut growth = Vec::new();
    let mut first = None;
    for k in 0..cfg.seeds {
        let eta = smooth_perturbation(&grid, params.a, cfg.seed.wrapping_add(k as u64));
        let pert: Vec<C64> = base.iter().zip(&eta).map(|(p, e)| p + scale * e).collect();
        let (t, d) = lockstep(&grid, &params, cfg, base, &pert, 300)?;
        let d0 = d[0];
        let gmax = d.iter().fold(0.0f64, |m, x| m.max(*x)) / d0;
        let half = t.len() / 2;
        let logs: Vec<f64> = d[half..].iter().map(|x| x.ln()).collect();
        let (rate, _, _) = linear_fit(&t[half..], &logs);
        rates.push(rate);
        growth.push(gmax);
        if first.is_none() {
            first = Some((t, d));
        }
    }
    let unstable = growth.iter().zip(&rates).all(|(g, r)| *g > cfg.growth_factor && *r > 0.0);
    let bounded = growth.iter().all(|g| *g < cfg.bounded_factor);
    let tag = if unstable {
        Stability::Saddle
    } else if bounded {
        Stability::Centre
    } else {
        Stability::Indeterminate
    };
    let (times, deviation) = first.unwrap_or_default();
    Ok(StabilityReport {
        tag,
        kappa,
        rates,
        growth,
        times,
        deviation,
    })
}

/// Mean spacing of upward zero crossings of `y(t)` after removing its mean,
/// with linear interpolation between frames.
pub fn measure_period(t: &[f64], y: &[f64]) -> Option<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let mut crossings = Vec::new();
    for i in 1..y.len() {
        let (a, b) = (y[i - 1] - mean, y[i] - mean);
        if a < 0.0 && b >= 0.0 {
            crossings.push(t[i - 1] + (t[i] - t[i - 1]) * a / (a - b));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    Some((crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64)
}

/// `(psi1 + e^{i phi} psi2) / sqrt(2)` with the relative phase chosen to put
/// the largest fraction of the density into the loss well (`x < 0`).
pub fn superposition(psi1: &[C64], psi2: &[C64]) -> Vec<C64> {
    let h = psi1.len() / 2;
    let parts = |r: std::ops::Range<usize>| {
        let (mut a, mut b, mut c) = (0.0, 0.0, C64::new(0.0, 0.0));
        for i in r {
            a += psi1[i].norm_sqr();
            b += psi2[i].norm_sqr();
            c += psi1[i].conj() * psi2[i];
        }
        (a, b, c)
    };
    let (la, lb, lc) = parts(0..h);
    let (ra, rb, rc) = parts(h..psi1.len());
    let fraction = |phi: f64| {
        let z = C64::from_polar(1.0, phi);
        let l = la + lb + 2.0 * (z * lc).re;
        let r = ra + rb + 2.0 * (z * rc).re;
        l / (l + r)
    };
    let tau = std::f64::consts::TAU;
    let mut best = (0..720).map(|k| k as f64 * tau / 720.0).max_by(|x, y| fraction(*x).total_cmp(&fraction(*y))).unwrap();
    // golden-section polish inside the winning cell
    let (mut lo, mut hi) = (best - tau / 720.0, best + tau / 720.0);
    for _ in 0..40 {
        let m1 = lo + 0.382 * (hi - lo);
        let m2 = lo + 0.618 * (hi - lo);
        if fraction(m1) < fraction(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    best = 0.5 * (lo + hi);
    let z = C64::from_polar(std::f64::consts::FRAC_1_SQRT_2, best);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    psi1.iter().zip(psi2).map(|(a, b)| a * s + z * b).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_packet(grid: &Grid) -> Vec<C64> {
        grid.x
            .iter()
            .map(|&x| C64::from_polar((-(x - 0.7).powi(2)).exp(), 0.8 * x))
            .collect()
    }

    #[test]
    fn potential_integrals() {
        let p = ModelParams::new(2.2, 0.3, 0.0).with_grid(20.0, 1024);
        let grid = Grid::new(&p).unwrap();
        let v = regularized_potential(&p, 2.0 * grid.dx).unwrap();
        let sr: f64 = v.re.iter().sum::<f64>() * grid.dx;
        let si: f64 = v.im.iter().sum::<f64>() * grid.dx;
        assert!((sr + 2.0).abs() < 1e-12);
        assert!(si.abs() < 1e-12);
        // loss well on the left
        assert!(v.im[grid.well_indices[0]] < 0.0);
    }

    #[test]
    fn narrow_width_rejected() {
        let p = ModelParams::new(2.2, 0.0, 0.0).with_grid(20.0, 1024);
        let grid = Grid::new(&p).unwrap();
        assert!(regularized_potential(&p, 1.5 * grid.dx).is_err());
    }

    #[test]
    fn free_packet_matches_exact_spectral_solution() {
        let grid = Grid::with_bounds(-20.0, 20.0, 512, 2.2).unwrap();
        let psi = gaussian_packet(&grid);
        let mut buf = psi.clone();
        let pot = Potential {
            re: vec![0.0; 512],
            im: vec![0.0; 512],
            sigma: 0.0,
        };
        let mut prop = Propagator::new(&grid, &pot, 0.0, 0.01);
        prop.advance(&mut buf, 100);
        // exact: each Fourier mode picks up exp(-i k^2 t)
        let mut planner = FftPlanner::new();
        let mut hat = psi;
        planner.plan_fft_forward(512).process(&mut hat);
        for (h, k) in hat.iter_mut().zip(wavenumbers(512, grid.dx)) {
            *h *= C64::from_polar(1.0 / 512.0, -k * k);
        }
        planner.plan_fft_inverse(512).process(&mut hat);
        let err = buf.iter().zip(&hat).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-11, "{err}");
    }

    #[test]
    fn frame_count_follows_stride() {
        let p = ModelParams::new(2.2, 0.0, 0.0).with_grid(20.0, 512);
        let grid = Grid::new(&p).unwrap();
        let mut cfg = PropagationConfig::new(0.01, 1.0).with_stride(7);
        cfg.boundary_tolerance = 1.0;
        let rec = propagate_samples(&grid, gaussian_packet(&grid), &cfg, &p).unwrap();
        assert_eq!(rec.times.len(), 100 / 7 + 1);
        assert_eq!(rec.density_snapshots.len(), rec.times.len());
    }

    #[test]
    fn fractional_step_count_rejected() {
        assert!(PropagationConfig::new(0.3, 1.0).n_steps().is_err());
    }

    #[test]
    fn pointwise_flow_is_exact_in_time() {
        // two half steps of the potential flow equal one full step
        let p = ModelParams::new(2.2, 0.4, 0.7).with_grid(20.0, 512);
        let grid = Grid::new(&p).unwrap();
        let pot = potential_on(&grid, &p, 2.0 * grid.dx).unwrap();
        let a = Propagator::new(&grid, &pot, p.g, 0.02);
        let mut u = gaussian_packet(&grid);
        let mut v = u.clone();
        a.potential(&mut u, false);
        a.potential(&mut u, false);
        a.potential(&mut v, true);
        let err = u.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    fn mirror_conj(psi: &[C64]) -> Vec<C64> {
        let n = psi.len();
        (0..n).map(|j| psi[n - 1 - j].conj()).collect()
    }

    #[test]
    fn pt_conjugate_runs_the_trajectory_backwards() {
        let p = ModelParams::new(2.2, 0.25, 0.5).with_grid(20.0, 512);
        let grid = Grid::new(&p).unwrap();
        assert!((grid.x[0] + grid.x[511]).abs() < 1e-12);
        let mut cfg = PropagationConfig::new(0.01, 2.0).with_stride(10);
        cfg.boundary_tolerance = 1.0;
        let fwd = propagate_samples(&grid, gaussian_packet(&grid), &cfg, &p).unwrap();
        let back = propagate_samples(&grid, mirror_conj(&fwd.final_psi), &cfg, &p).unwrap();
        let n = fwd.times.len();
        for k in 0..n {
            let a = &fwd.density_snapshots[n - 1 - k];
            let b = &back.density_snapshots[k];
            let err = (0..512).map(|j| (a[511 - j] - b[j]).abs()).fold(0.0, f64::max);
            assert!(err < 1e-8, "frame {k}: {err}");
        }
    }

    #[test]
    fn strang_splitting_is_second_order() {
        let p = ModelParams::new(2.2, 0.2, 0.5).with_grid(16.0, 256);
        let grid = Grid::new(&p).unwrap();
        let pot = potential_on(&grid, &p, 4.0 * grid.dx).unwrap();
        let run = |dt: f64| {
            let mut psi = gaussian_packet(&grid);
            let mut prop = Propagator::new(&grid, &pot, p.g, dt);
            prop.advance(&mut psi, (0.5 / dt).round() as usize);
            psi
        };
        let reference = run(0.5 / 3200.0);
        let err = |psi: Vec<C64>| psi.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let e1 = err(run(0.5 / 50.0));
        let e2 = err(run(0.5 / 100.0));
        let e3 = err(run(0.5 / 200.0));
        assert!(e1 / e2 >= 3.5 && e2 / e3 >= 3.5, "{e1} {e2} {e3}");
    }

    #[test]
    fn superposition_favours_the_loss_well() {
        let p = ModelParams::new(2.2, 0.0, 0.0).with_grid(20.0, 512);
        let grid = Grid::new(&p).unwrap();
        let even: Vec<C64> = grid.x.iter().map(|&x| C64::new((-4.0 * (x - 1.1).powi(2)).exp() + (-4.0 * (x + 1.1).powi(2)).exp(), 0.0)).collect();
        let odd: Vec<C64> = grid.x.iter().map(|&x| C64::new(0.0, (-4.0 * (x - 1.1).powi(2)).exp() - (-4.0 * (x + 1.1).powi(2)).exp())).collect();
        let s = superposition(&even, &odd);
        let left: f64 = s[..256].iter().map(|z| z.norm_sqr()).sum();
        let right: f64 = s[256..].iter().map(|z| z.norm_sqr()).sum();
        assert!(left / (left + right) > 0.99, "{left} {right}");
    }

    #[test]
    fn relaxed_excited_state_stays_localized() {
        // a single full-width Newton step lands on a state bunched far
        // outside the wells; the relaxation must not accept it
        let p = ModelParams::new(2.2, 0.3, 0.5).with_grid(40.0, 2048);
        let grid = Grid::new(&p).unwrap();
        let lp = stationary::trace_real_loop(&p).unwrap();
        let s = lp.state(crate::Branch::ExcitedReal, 0.3).unwrap();
        let r = relax(&s, 4.0 * grid.dx).unwrap();
        let n: f64 = r.state.psi.iter().map(|v| v.norm_sqr()).sum::<f64>() * grid.dx;
        assert!((n - 1.0).abs() < 1e-4, "{n}");
        assert!((r.kappa().re - s.kappa().re).abs() < 0.1);
    }

    #[test]
    fn period_of_a_sine() {
        let t: Vec<f64> = (0..2000).map(|i| i as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|t| (2.0 * std::f64::consts::PI * t / 3.3).sin()).collect();
        assert!((measure_period(&t, &y).unwrap() - 3.3).abs() < 1e-4);
    }

    #[test]
    fn perturbation_is_seeded_and_normalized() {
        let grid = Grid::with_bounds(-20.0, 20.0, 512, 2.2).unwrap();
        let a = smooth_perturbation(&grid, 2.2, 5);
        let b = smooth_perturbation(&grid, 2.2, 5);
        let c = smooth_perturbation(&grid, 2.2, 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!((prop_norm(&a, grid.dx) - 1.0).abs() < 1e-12);
    }
}
