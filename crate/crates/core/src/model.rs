//! Shared domain types: model parameters, eigenvalues, the aligned grid and
//! sampled wave functions with their quadratures.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PtError, Result};

/// Sign of the well that loses density under `exp(i kappa^2 t)` time dependence.
///
/// The well at `x = -a/2` carries `-(1 + i gamma)`; in `i dPsi/dt = H Psi` that
/// imaginary part `-i gamma` removes density. The well at `+a/2` gains.
pub const LOSS_WELL_SIGN: f64 = -1.0;
/// Sign of the well that gains density.
pub const GAIN_WELL_SIGN: f64 = 1.0;

pub const DEFAULT_X_MAX: f64 = 24.0;
pub const DEFAULT_N_GRID: usize = 4096;

/// Unit-weight Gaussian of width `sigma` centred at the origin.
pub fn gaussian(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * std::f64::consts::PI).sqrt())
}

/// Dimensionless configuration of the double well plus grid controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Well separation; wells sit at `x = +-a/2`.
    pub a: f64,
    /// Gain/loss strength.
    pub gamma: f64,
    /// Nonlinearity, attractive for `g > 0`.
    pub g: f64,
    /// Requested domain half-width (the aligned grid may shrink it slightly).
    #[serde(default = "default_x_max")]
    pub x_max: f64,
    #[serde(default = "default_n_grid")]
    pub n_grid: usize,
    /// Accept `g < 0`. The repulsive exterior branches are not covered.
    #[serde(default)]
    pub experimental_negative_g: bool,
    /// Gaussian width replacing the point wells; `None` keeps exact deltas.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub well_width: Option<f64>,
}

fn default_x_max() -> f64 {
    DEFAULT_X_MAX
}

fn default_n_grid() -> usize {
    DEFAULT_N_GRID
}

impl ModelParams {
    pub fn new(a: f64, gamma: f64, g: f64) -> Self {
        Self {
            a,
            gamma,
            g,
            x_max: DEFAULT_X_MAX,
            n_grid: DEFAULT_N_GRID,
            experimental_negative_g: false,
            well_width: None,
        }
    }

    pub fn with_well_width(mut self, sigma: Option<f64>) -> Self {
        self.well_width = sigma;
        self
    }

    pub fn with_grid(mut self, x_max: f64, n_grid: usize) -> Self {
        self.x_max = x_max;
        self.n_grid = n_grid;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    /// Half the well separation.
    pub fn b(&self) -> f64 {
        0.5 * self.a
    }

    /// Complex strength `1 + i gamma` of the well at `-a/2`.
    pub fn kappa0(&self) -> Complex64 {
        Complex64::new(1.0, self.gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(PtError::Domain(format!("well separation must be positive, got {}", self.a)));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(PtError::Domain(format!("gamma must be >= 0, got {}", self.gamma)));
        }
        if !self.g.is_finite() {
            return Err(PtError::Domain("g must be finite".into()));
        }
        if self.g < 0.0 && !self.experimental_negative_g {
            return Err(PtError::Domain(
                "g < 0 requires experimental_negative_g = true".into(),
            ));
        }
        if !(self.x_max > self.b() + 5.0) {
            return Err(PtError::Config(format!(
                "x_max = {} leaves no room for the tails (need > a/2 + 5 = {})",
                self.x_max,
                self.b() + 5.0
            )));
        }
        if let Some(w) = self.well_width {
            if !(w.is_finite() && w > 0.0 && w < 0.25 * self.b()) {
                return Err(PtError::Domain(format!("well width must lie in (0, a/8), got {w}")));
            }
        }
        if self.n_grid < 256 || self.n_grid % 2 != 0 {
            return Err(PtError::Config(format!(
                "n_grid must be even and >= 256, got {}",
                self.n_grid
            )));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let p: ModelParams = serde_json::from_str(&text)?;
        p.validate()?;
        Ok(p)
    }
}

/// Branch label attached to every eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Branch {
    GroundReal,
    ExcitedReal,
    ComplexDecaying,
    ComplexGrowing,
    ContinuationDecaying,
    ContinuationGrowing,
}

impl Branch {
    pub fn is_real(self) -> bool {
        matches!(self, Branch::GroundReal | Branch::ExcitedReal)
    }

    pub fn is_continuation(self) -> bool {
        matches!(self, Branch::ContinuationDecaying | Branch::ContinuationGrowing)
    }

    /// Complex label fixed by the sign of `Im(kappa)`: positive decays.
    pub fn complex_for(kappa: Complex64, continuation: bool) -> Self {
        match (continuation, kappa.im > 0.0) {
            (false, true) => Branch::ComplexDecaying,
            (false, false) => Branch::ComplexGrowing,
            (true, true) => Branch::ContinuationDecaying,
            (true, false) => Branch::ContinuationGrowing,
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Branch::GroundReal => "GroundReal",
            Branch::ExcitedReal => "ExcitedReal",
            Branch::ComplexDecaying => "ComplexDecaying",
            Branch::ComplexGrowing => "ComplexGrowing",
            Branch::ContinuationDecaying => "ContinuationDecaying",
            Branch::ContinuationGrowing => "ContinuationGrowing",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for Branch {
    type Err = PtError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "GroundReal" => Branch::GroundReal,
            "ExcitedReal" => Branch::ExcitedReal,
            "ComplexDecaying" => Branch::ComplexDecaying,
            "ComplexGrowing" => Branch::ComplexGrowing,
            "ContinuationDecaying" => Branch::ContinuationDecaying,
            "ContinuationGrowing" => Branch::ContinuationGrowing,
            other => return Err(PtError::Config(format!("unknown branch {other:?}"))),
        })
    }
}

/// Eigenvalue `kappa` with `Re(kappa) > 0`; the energy is `-kappa^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub kappa: Complex64,
    pub energy: Complex64,
    pub branch: Branch,
}

impl Eigenvalue {
    pub fn new(kappa: Complex64, branch: Branch) -> Result<Self> {
        if !(kappa.re > 0.0) {
            return Err(PtError::KappaConstraint(kappa));
        }
        let complex_label = matches!(
            branch,
            Branch::ComplexDecaying
                | Branch::ComplexGrowing
                | Branch::ContinuationDecaying
                | Branch::ContinuationGrowing
        );
        if complex_label && Branch::complex_for(kappa, branch.is_continuation()) != branch {
            return Err(PtError::Domain(format!(
                "branch {branch} inconsistent with Im(kappa) = {:e}",
                kappa.im
            )));
        }
        Ok(Self {
            kappa,
            energy: -kappa * kappa,
            branch,
        })
    }
}

/// Physical parameters of the double well in arbitrary consistent units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct PhysicalParams {
    /// Real well strength (energy x length).
    pub V0: f64,
    /// Gain/loss amplitude (energy x length).
    pub Gamma: f64,
    /// Contact-interaction amplitude for a wave function normalized to one
    /// (energy x length); positive is attractive.
    pub G: f64,
    pub m: f64,
    pub hbar: f64,
}

/// Dimensionless parameters together with the length and energy scales.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionlessParams {
    pub gamma: f64,
    pub g: f64,
    pub length_scale: f64,
    pub energy_scale: f64,
}

/// Maps the physical equation onto the dimensionless one.
///
/// With `x = L xi`, `L = hbar^2 / (2 m V0)`, `E0 = 2 m V0^2 / hbar^2` and
/// `Psi(x) = phi(xi) / sqrt(L)` (both normalized to one), every term divided
/// by `E0 / sqrt(L)` gives unit kinetic and well strengths,
/// `gamma = Gamma / V0` and `g = G / (E0 L) = G / V0`. For a condensate of `N`
/// atoms normalized to `N`, pass `G = N g_1D`.
pub fn physical_to_dimensionless(p: &PhysicalParams) -> Result<DimensionlessParams> {
    if !(p.V0 > 0.0) {
        return Err(PtError::Domain(format!("V0 must be positive, got {}", p.V0)));
    }
    if !(p.m > 0.0) {
        return Err(PtError::Domain(format!("m must be positive, got {}", p.m)));
    }
    if !(p.hbar > 0.0) {
        return Err(PtError::Domain(format!("hbar must be positive, got {}", p.hbar)));
    }
    let length_scale = p.hbar * p.hbar / (2.0 * p.m * p.V0);
    let energy_scale = 2.0 * p.m * p.V0 * p.V0 / (p.hbar * p.hbar);
    Ok(DimensionlessParams {
        gamma: p.Gamma / p.V0,
        g: p.G / p.V0,
        length_scale,
        energy_scale,
    })
}

/// Inverse of [`physical_to_dimensionless`] for given `V0`, `m`, `hbar`.
#[allow(non_snake_case)]
pub fn dimensionless_to_physical(gamma: f64, g: f64, V0: f64, m: f64, hbar: f64) -> Result<PhysicalParams> {
    if !(V0 > 0.0 && m > 0.0 && hbar > 0.0) {
        return Err(PtError::Domain("V0, m and hbar must be positive".into()));
    }
    Ok(PhysicalParams {
        V0,
        Gamma: gamma * V0,
        G: g * V0,
        m,
        hbar,
    })
}

/// Uniform grid symmetric about the origin with both wells on nodes.
///
/// Nodes sit at `x_i = (i - (n-1)/2) dx`, so the origin lies midway between
/// the two central nodes and `a/2 = (m + 1/2) dx` for an integer `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub x: Vec<f64>,
    pub dx: f64,
    /// Indices of `x = -a/2` and `x = +a/2`.
    pub well_indices: [usize; 2],
}

impl Grid {
    pub fn new(params: &ModelParams) -> Result<Self> {
        params.validate()?;
        Self::aligned(params.a, params.x_max, params.n_grid)
    }

    /// Builds a grid from explicit bounds; only symmetric bounds are accepted.
    pub fn with_bounds(x_min: f64, x_max: f64, n: usize, a: f64) -> Result<Self> {
        if (x_min + x_max).abs() > 1e-12 * x_max.abs().max(1.0) {
            return Err(PtError::Config(format!(
                "grid bounds must be symmetric about 0, got [{x_min}, {x_max}]"
            )));
        }
        Self::aligned(a, x_max, n)
    }

    fn aligned(a: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 4 || n % 2 != 0 {
            return Err(PtError::Config(format!("grid point count must be even, got {n}")));
        }
        let b = 0.5 * a;
        let dx_nominal = 2.0 * x_max / (n as f64 - 1.0);
        let m = (b / dx_nominal - 0.5).round();
        if m < 1.0 {
            return Err(PtError::Config(format!(
                "grid too coarse to put the wells on nodes (dx = {dx_nominal:.4}, a/2 = {b})"
            )));
        }
        let dx = b / (m + 0.5);
        let half = (n as f64 - 1.0) / 2.0;
        let x = (0..n).map(|i| (i as f64 - half) * dx).collect();
        let m = m as usize;
        let right = n / 2 + m;
        let left = n / 2 - 1 - m;
        Ok(Self {
            x,
            dx,
            well_indices: [left, right],
        })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Actual half-width after alignment.
    pub fn half_width(&self) -> f64 {
        *self.x.last().unwrap()
    }

    /// Index of the reflected node `x -> -x`.
    pub fn mirror_index(&self, i: usize) -> usize {
        self.len() - 1 - i
    }

    /// Index of the first node with `x > 0`.
    pub fn first_positive(&self) -> usize {
        self.len() / 2
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        self.len() == other.len() && self.dx == other.dx && self.x[0] == other.x[0]
    }

    /// Trapezoidal integral of sampled values.
    pub fn trapezoid(&self, f: impl Fn(usize) -> Complex64) -> Complex64 {
        let n = self.len();
        let mut s = Complex64::new(0.0, 0.0);
        for i in 0..n {
            s += f(i);
        }
        s -= 0.5 * (f(0) + f(n - 1));
        s * self.dx
    }
}

/// Global phase convention of a sampled state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseConvention {
    /// `Psi(0)` real.
    RealAtOrigin,
    /// Phase fixed by `int Psi(x) Psi(-x) dx = 1`.
    ContinuationNorm,
}

impl fmt::Display for PhaseConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhaseConvention::RealAtOrigin => f.write_str("RealAtOrigin"),
            PhaseConvention::ContinuationNorm => f.write_str("ContinuationNorm"),
        }
    }
}

/// Complex wave function sampled on a [`Grid`].
#[derive(Debug, Clone)]
pub struct GridState {
    pub psi: Vec<Complex64>,
    pub kappa: Eigenvalue,
    pub params: ModelParams,
    pub phase_convention: PhaseConvention,
    pub grid: Grid,
}

impl GridState {
    /// Reflected state `x -> -x` (no conjugation).
    pub fn mirror(&self) -> GridState {
        let n = self.psi.len();
        let psi = (0..n).map(|i| self.psi[n - 1 - i]).collect();
        GridState { psi, ..self.clone() }
    }

    /// PT image `Psi*(-x)`.
    pub fn pt_image(&self) -> GridState {
        let n = self.psi.len();
        let psi = (0..n).map(|i| self.psi[n - 1 - i].conj()).collect();
        GridState { psi, ..self.clone() }
    }

    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|p| p.norm_sqr()).collect()
    }

    /// `max_x |Psi*(x) - Psi(-x)|`.
    pub fn pt_defect(&self) -> f64 {
        let n = self.psi.len();
        (0..n)
            .map(|i| (self.psi[i].conj() - self.psi[n - 1 - i]).norm())
            .fold(0.0, f64::max)
    }

    /// `max_x ||Psi(x)| - |Psi(-x)||`.
    pub fn modulus_asymmetry(&self) -> f64 {
        let n = self.psi.len();
        (0..n)
            .map(|i| (self.psi[i].norm() - self.psi[n - 1 - i].norm()).abs())
            .fold(0.0, f64::max)
    }

    /// Integrated density on the negative and positive half lines.
    pub fn left_right_density(&self) -> (f64, f64) {
        half_line_densities(&self.grid, &self.psi)
    }
}

pub(crate) fn half_line_densities(grid: &Grid, psi: &[Complex64]) -> (f64, f64) {
    let h = grid.first_positive();
    let dx = grid.dx;
    let mut left = 0.0;
    let mut right = 0.0;
    for (i, p) in psi.iter().enumerate() {
        let w = if i == 0 || i + 1 == psi.len() { 0.5 } else { 1.0 };
        if i < h {
            left += w * p.norm_sqr();
        } else {
            right += w * p.norm_sqr();
        }
    }
    (left * dx, right * dx)
}

/// Exponential closure of `int_{edge}^{inf} u v dx` for tails `~ exp(-k x)`.
fn tail(prod: Complex64, decay: Complex64) -> Complex64 {
    if decay.re > 0.0 {
        prod / decay
    } else {
        Complex64::new(0.0, 0.0)
    }
}

/// Squared L2 norm of raw samples: trapezoid plus the exponential tail
/// beyond both edges for decay constant `kappa`.
pub(crate) fn sampled_norm2(grid: &Grid, psi: &[Complex64], kappa: Complex64) -> f64 {
    let n = psi.len();
    let body = grid.trapezoid(|i| Complex64::new(psi[i].norm_sqr(), 0.0)).re;
    let k2 = Complex64::new(2.0 * kappa.re, 0.0);
    body + tail(Complex64::new(psi[0].norm_sqr(), 0.0), k2).re
        + tail(Complex64::new(psi[n - 1].norm_sqr(), 0.0), k2).re
}

/// `int u v dx` of raw samples with tails decaying at rate `decay`.
pub(crate) fn sampled_bilinear(grid: &Grid, u: &[Complex64], v: &[Complex64], decay: Complex64) -> Complex64 {
    let n = u.len();
    let body = grid.trapezoid(|i| u[i] * v[i]);
    body + tail(u[0] * v[0], decay) + tail(u[n - 1] * v[n - 1], decay)
}

/// Squared L2 norm: trapezoid on the grid plus the exponential tail beyond
/// both edges. The tail term vanishes for states that decay inside the box.
pub fn norm2(state: &GridState) -> f64 {
    sampled_norm2(&state.grid, &state.psi, state.kappa.kappa)
}

/// Conjugating inner product `int conj(u) v dx`.
pub fn overlap(u: &GridState, v: &GridState) -> Result<Complex64> {
    if !u.grid.same_as(&v.grid) {
        return Err(PtError::GridMismatch);
    }
    let n = u.psi.len();
    let body = u.grid.trapezoid(|i| u.psi[i].conj() * v.psi[i]);
    let decay = u.kappa.kappa.conj() + v.kappa.kappa;
    Ok(body
        + tail(u.psi[0].conj() * v.psi[0], decay)
        + tail(u.psi[n - 1].conj() * v.psi[n - 1], decay))
}

/// Bilinear product `int u v dx` without conjugation, used by the
/// analytically continued norm.
pub fn bilinear_overlap(u: &GridState, v: &GridState) -> Result<Complex64> {
    if !u.grid.same_as(&v.grid) {
        return Err(PtError::GridMismatch);
    }
    Ok(sampled_bilinear(&u.grid, &u.psi, &v.psi, u.kappa.kappa + v.kappa.kappa))
}

/// `int Psi(x) Psi(-x) dx`.
pub fn continuation_norm(state: &GridState) -> Complex64 {
    bilinear_overlap(state, &state.mirror()).expect("mirror shares the grid")
}
