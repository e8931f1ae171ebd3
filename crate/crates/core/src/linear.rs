//! Closed-form treatment of the linear (`g = 0`) double well: secular
//! equation, coefficient reconstruction and two-mode beating.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{PtError, Result};
use crate::model::{Branch, Eigenvalue, Grid, GridState, ModelParams, PhaseConvention};

type C64 = Complex64;

/// Roots closer than this to the origin are the trivial `kappa = 0` solution.
const TRIVIAL_ROOT: f64 = 1e-7;
const ROOT_TOL: f64 = 1e-12;
const SEARCH_RE_MAX: f64 = 2.0;
const SEARCH_IM_MAX: f64 = 2.0;

/// Left-hand side of the secular equation
/// `(1 + gamma^2) exp(-2 kappa a) - (1 + gamma^2 + 4 kappa^2 - 4 kappa)`.
pub fn secular_residual(kappa: C64, params: &ModelParams) -> C64 {
    let s = 1.0 + params.gamma * params.gamma;
    s * (-2.0 * kappa * params.a).exp() - (s + 4.0 * kappa * kappa - 4.0 * kappa)
}

/// Analytic derivative of [`secular_residual`] with respect to `kappa`.
pub fn secular_derivative(kappa: C64, params: &ModelParams) -> C64 {
    let s = 1.0 + params.gamma * params.gamma;
    -2.0 * params.a * s * (-2.0 * kappa * params.a).exp() - (8.0 * kappa - 4.0)
}

/// The real secular function divided by `kappa`, which removes the trivial
/// root at the origin. At `kappa = 0` it equals `4 - 2 a (1 + gamma^2)`.
fn reduced_real(kappa: f64, a: f64, gamma: f64) -> f64 {
    let s = 1.0 + gamma * gamma;
    if kappa.abs() < 1e-8 {
        return 4.0 - 2.0 * a * s + (2.0 * a * a * s - 4.0) * kappa;
    }
    (s * (-2.0 * kappa * a).exp_m1() - 4.0 * kappa * kappa + 4.0 * kappa) / kappa
}

/// Newton iteration on the secular residual from a single seed.
pub fn newton_root(seed: C64, params: &ModelParams) -> Result<(C64, usize)> {
    let mut k = seed;
    for it in 1..=80 {
        let f = secular_residual(k, params);
        let df = secular_derivative(k, params);
        if df.norm() == 0.0 || !f.is_finite() {
            break;
        }
        let step = f / df;
        k -= step;
        if !k.is_finite() || k.norm() > 50.0 {
            break;
        }
        if step.norm() <= 1e-15 * k.norm().max(1.0) {
            if secular_residual(k, params).norm() < ROOT_TOL {
                return Ok((k, it));
            }
            break;
        }
    }
    Err(PtError::RootNotConverged {
        last: k,
        iterations: 80,
    })
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 * hi.abs().max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn golden_max(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo < 1e-14 {
            break;
        }
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

const SCAN_POINTS: usize = 4000;

/// Positive real roots by a sign-change scan, with local maxima refined so
/// that nearly coalesced pairs next to the exceptional point are not missed.
fn real_roots(params: &ModelParams) -> Vec<f64> {
    let (a, gamma) = (params.a, params.gamma);
    let q = |k: f64| reduced_real(k, a, gamma);
    let h = SEARCH_RE_MAX / SCAN_POINTS as f64;
    let xs: Vec<f64> = (0..=SCAN_POINTS).map(|i| i as f64 * h).collect();
    let vals: Vec<f64> = xs.iter().map(|&k| q(k)).collect();
    let mut roots = Vec::new();
    for i in 0..SCAN_POINTS {
        let (f0, f1) = (vals[i], vals[i + 1]);
        if f0 == 0.0 && i > 0 {
            roots.push(xs[i]);
        } else if (f0 < 0.0) != (f1 < 0.0) && f1 != 0.0 {
            roots.push(bisect(xs[i], xs[i + 1], q));
        }
    }
    // hidden pairs: a local maximum of q that is negative on the scan but
    // positive once refined
    for i in 1..SCAN_POINTS {
        let (fl, fm, fr) = (vals[i - 1], vals[i], vals[i + 1]);
        if fm >= fl && fm >= fr && fl < 0.0 && fm < 0.0 && fr < 0.0 {
            let (xm, fmax) = golden_max(xs[i - 1], xs[i + 1], q);
            if fmax > 0.0 {
                roots.push(bisect(xs[i - 1], xm, q));
                roots.push(bisect(xm, xs[i + 1], q));
            }
        }
    }
    roots.retain(|&k| k > TRIVIAL_ROOT);
    roots.sort_by(|x, y| y.partial_cmp(x).unwrap());
    roots
}

fn in_search_box(k: C64) -> bool {
    k.re > TRIVIAL_ROOT && k.re <= SEARCH_RE_MAX && k.im.abs() <= SEARCH_IM_MAX
}

/// All roots with `Re(kappa) > 0` in the rectangle `Re in (0, 2]`,
/// `Im in [-2, 2]`, sorted by real part.
pub fn solve_linear_spectrum(params: &ModelParams) -> Result<Vec<Eigenvalue>> {
    let mut reals: Vec<f64> = Vec::new();
    for k in real_roots(params) {
        // near the exceptional point the roots are nearly double and Newton
        // stalls; the bisected root is already at machine precision
        let r = match newton_root(C64::new(k, 0.0), params) {
            Ok((root, _)) if root.im.abs() < 1e-12 => root.re,
            _ => k,
        };
        if reals.iter().all(|&x| (x - r).abs() > 1e-10) {
            reals.push(r);
        }
    }

    let mut complex: Vec<C64> = Vec::new();
    for i in 0..20 {
        for j in 0..=20 {
            let seed = C64::new(0.05 + 0.1 * i as f64, -2.0 + 0.2 * j as f64);
            let Ok((k, _)) = newton_root(seed, params) else {
                continue;
            };
            if !in_search_box(k) || k.im.abs() < 1e-10 {
                continue;
            }
            for cand in [k, k.conj()] {
                if complex.iter().all(|c| (c - cand).norm() > 1e-8) {
                    let polished = newton_root(cand, params).map(|r| r.0).unwrap_or(cand);
                    complex.push(polished);
                }
            }
        }
    }

    let mut out = Vec::with_capacity(reals.len() + complex.len());
    reals.sort_by(|x, y| y.partial_cmp(x).unwrap());
    for (idx, &k) in reals.iter().enumerate() {
        let branch = if idx == 0 {
            Branch::GroundReal
        } else {
            Branch::ExcitedReal
        };
        out.push(Eigenvalue::new(C64::new(k, 0.0), branch)?);
    }
    for k in complex {
        out.push(Eigenvalue::new(k, Branch::complex_for(k, false))?);
    }
    out.sort_by(|x, y| {
        x.kappa
            .re
            .partial_cmp(&y.kappa.re)
            .unwrap()
            .then(x.kappa.im.partial_cmp(&y.kappa.im).unwrap())
    });
    Ok(out)
}

/// Number of proper real bound states (excluding the threshold root).
pub fn count_real_roots(params: &ModelParams) -> usize {
    real_roots(params).len()
}

/// Value of the reduced secular function at `kappa = 0`. It vanishes exactly
/// where an excited state sits at threshold.
pub fn threshold_defect(params: &ModelParams) -> f64 {
    reduced_real(0.0, params.a, params.gamma)
}

/// Smallest gain/loss above which an excited real state exists, by
/// bisection on its existence. Zero for `a >= 2`.
pub fn excited_state_threshold(a: f64, tol: f64) -> Result<f64> {
    let has_excited = |gamma: f64| count_real_roots(&ModelParams::new(a, gamma, 0.0)) >= 2;
    if a >= 2.0 || has_excited(0.0) {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut found = false;
    while hi < 3.0 {
        hi += 0.01;
        if has_excited(hi) {
            found = true;
            break;
        }
        lo = hi;
    }
    if !found {
        return Err(PtError::Bracket(format!("no excited state for a = {a} up to gamma = 3")));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if has_excited(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Maximum of the reduced secular function over real `kappa`; positive while
/// two real roots exist above the excited-state threshold.
fn discriminant_proxy(a: f64, gamma: f64) -> f64 {
    let q = |k: f64| reduced_real(k, a, gamma);
    let h = SEARCH_RE_MAX / SCAN_POINTS as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 1..SCAN_POINTS {
        let v = q(i as f64 * h);
        if v > best.1 {
            best = (i, v);
        }
    }
    let i = best.0;
    golden_max((i - 1) as f64 * h, (i + 1) as f64 * h, q).1
}

/// Linear exceptional point `gamma_cr,lin(a)` where the two real roots merge.
pub fn linear_exceptional_point(a: f64, tol: f64) -> Result<f64> {
    let start = excited_state_threshold(a, 1e-10)?;
    let two_real = |gamma: f64| {
        reduced_real(0.0, a, gamma) < 0.0 && discriminant_proxy(a, gamma) > 0.0
    };
    let mut lo = start + 1e-9;
    if !two_real(lo) {
        lo = start + 1e-4;
        if !two_real(lo) {
            return Err(PtError::Bracket(format!("no two-root window above gamma = {start}")));
        }
    }
    let mut hi = lo;
    loop {
        hi += 0.01;
        if !two_real(hi) {
            break;
        }
        lo = hi;
        if hi > 5.0 {
            return Err(PtError::Bracket("exceptional point beyond gamma = 5".into()));
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if two_real(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Piecewise state `A e^{kx}` (x < -b), `C e^{kx} + D e^{-kx}` (|x| < b),
/// `B e^{-kx}` (x > b), normalized to unit L2 norm.
#[derive(Debug, Clone)]
pub struct LinearState {
    pub kappa: Eigenvalue,
    /// `A`, amplitude left of the wells.
    pub left: C64,
    /// `C`, coefficient of `e^{kappa x}` between the wells.
    pub c: C64,
    /// `D`, coefficient of `e^{-kappa x}` between the wells.
    pub d: C64,
    /// `B`, amplitude right of the wells.
    pub right: C64,
    pub params: ModelParams,
}

impl LinearState {
    pub fn eval(&self, x: f64) -> C64 {
        let k = self.kappa.kappa;
        let b = self.params.b();
        if x < -b {
            self.left * (k * x).exp()
        } else if x > b {
            self.right * (-k * x).exp()
        } else {
            self.c * (k * x).exp() + self.d * (-k * x).exp()
        }
    }

    /// Derivative, one-sided limits taken from the region containing `x`.
    pub fn eval_derivative(&self, x: f64) -> C64 {
        let k = self.kappa.kappa;
        let b = self.params.b();
        if x < -b {
            k * self.left * (k * x).exp()
        } else if x > b {
            -k * self.right * (-k * x).exp()
        } else {
            k * (self.c * (k * x).exp() - self.d * (-k * x).exp())
        }
    }

    pub fn ratio(&self) -> C64 {
        self.d / self.c
    }

    pub fn psi0(&self) -> C64 {
        self.c + self.d
    }

    pub fn dpsi0(&self) -> C64 {
        self.kappa.kappa * (self.c - self.d)
    }

    pub fn sample(&self, grid: &Grid) -> GridState {
        GridState {
            psi: grid.x.iter().map(|&x| self.eval(x)).collect(),
            kappa: self.kappa,
            params: self.params,
            phase_convention: PhaseConvention::RealAtOrigin,
            grid: grid.clone(),
        }
    }
}

fn analytic_norm2(k: C64, b: f64, left: C64, c: C64, d: C64, right: C64) -> f64 {
    let kr = k.re;
    let ki = k.im;
    let outer = (left.norm_sqr() + right.norm_sqr()) * (-2.0 * kr * b).exp() / (2.0 * kr);
    let inner_diag = (c.norm_sqr() + d.norm_sqr()) * (2.0 * kr * b).sinh() / kr;
    let cross_int = if ki.abs() < 1e-14 {
        2.0 * b
    } else {
        (2.0 * ki * b).sin() / ki
    };
    let inner_cross = 2.0 * (c * d.conj()).re * cross_int;
    outer + inner_diag + inner_cross
}

/// Reconstructs the normalized state for a root of the secular equation.
///
/// The global phase makes `Psi(0)` real and positive; when `Psi(0)` vanishes
/// (the antisymmetric state at `gamma = 0`) `Psi'(0)` is made positive
/// imaginary instead, which keeps the state PT symmetric.
pub fn build_linear_state(kappa: Eigenvalue, params: &ModelParams) -> Result<LinearState> {
    let k = kappa.kappa;
    let res = secular_residual(k, params).norm();
    if res > 1e-8 {
        return Err(PtError::NotARoot {
            kappa: k,
            residual: res,
        });
    }
    let b = params.b();
    let k0 = params.kappa0();
    let ep = (k * b).exp();
    let em = (-k * b).exp();
    // rows of the 2x2 continuity system acting on (C, D)
    let r1 = (k0 * em, (k0 - 2.0 * k) * ep);
    let r2 = ((k0.conj() - 2.0 * k) * ep, k0.conj() * em);
    let (c, d) = if r1.0.norm() + r1.1.norm() >= r2.0.norm() + r2.1.norm() {
        (r1.1, -r1.0)
    } else {
        (r2.1, -r2.0)
    };
    let left = c + d * (2.0 * k * b).exp();
    let right = c * (2.0 * k * b).exp() + d;

    let n = analytic_norm2(k, b, left, c, d, right).sqrt();
    let psi0 = c + d;
    let dpsi0 = k * (c - d);
    let phase = if psi0.norm() > 1e-9 * (c.norm() + d.norm()) {
        psi0.conj() / psi0.norm()
    } else {
        // rotate Psi'(0) onto the positive imaginary axis
        C64::new(0.0, 1.0) * dpsi0.conj() / dpsi0.norm()
    };
    let scale = phase / n;
    Ok(LinearState {
        kappa,
        left: left * scale,
        c: c * scale,
        d: d * scale,
        right: right * scale,
        params: *params,
    })
}

/// One point of the coefficient-ratio curve `D/C`.
#[derive(Debug, Clone, Copy)]
pub struct RatioPoint {
    pub gamma: f64,
    /// Index of the branch followed by continuity (0 starts on the ground
    /// state, 1 on the excited state).
    pub track: usize,
    pub branch: Branch,
    pub kappa: C64,
    pub modulus: f64,
    /// Phase of `D/C`, unwrapped along the track.
    pub phase: f64,
}

/// Matches `next` onto `prev` by nearest neighbour in the complex plane.
pub(crate) fn match_by_continuity(prev: &[C64], next: &[C64]) -> Vec<Option<usize>> {
    let mut used = vec![false; next.len()];
    let mut out = vec![None; prev.len()];
    // greedily assign globally closest pairs first
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), i, j));
        }
    }
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    for (_, i, j) in pairs {
        if out[i].is_none() && !used[j] {
            out[i] = Some(j);
            used[j] = true;
        }
    }
    out
}

/// The two principal eigenvalues at `params`: both real roots below the
/// exceptional point, the conjugate pair above it.
pub fn principal_pair(params: &ModelParams) -> Result<Vec<Eigenvalue>> {
    let spec = solve_linear_spectrum(params)?;
    let mut reals: Vec<Eigenvalue> = spec.iter().copied().filter(|e| e.branch.is_real()).collect();
    if reals.len() >= 2 {
        reals.sort_by(|x, y| y.kappa.re.partial_cmp(&x.kappa.re).unwrap());
        reals.truncate(2);
        return Ok(reals);
    }
    let mut complex: Vec<Eigenvalue> = spec.into_iter().filter(|e| !e.branch.is_real()).collect();
    // the pair closest to the real axis
    complex.sort_by(|x, y| x.kappa.im.abs().partial_cmp(&y.kappa.im.abs()).unwrap());
    complex.truncate(2);
    if reals.len() == 1 && complex.is_empty() {
        return Ok(reals);
    }
    Ok(complex)
}

/// `|D/C|` and `arg(D/C)` of the two principal states across `gammas`.
pub fn coefficient_ratio_curve(a: f64, gammas: &[f64]) -> Result<Vec<RatioPoint>> {
    if gammas.windows(2).any(|w| w[1] < w[0]) {
        return Err(PtError::Config("gamma range must be ascending".into()));
    }
    let per_gamma: Vec<Vec<Eigenvalue>> = gammas
        .par_iter()
        .map(|&gamma| principal_pair(&ModelParams::new(a, gamma, 0.0)))
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    let mut prev: Vec<C64> = Vec::new();
    let mut last_phase = [0.0f64, PI];
    for (gi, (&gamma, eigs)) in gammas.iter().zip(&per_gamma).enumerate() {
        let ks: Vec<C64> = eigs.iter().map(|e| e.kappa).collect();
        let order: Vec<usize> = if gi == 0 || prev.len() != ks.len() {
            (0..ks.len()).collect()
        } else {
            match_by_continuity(&prev, &ks)
                .into_iter()
                .enumerate()
                .map(|(i, j)| j.unwrap_or(i))
                .collect()
        };
        for (track, &j) in order.iter().enumerate() {
            let e = eigs[j];
            let st = build_linear_state(e, &ModelParams::new(a, gamma, 0.0))?;
            let r = st.ratio();
            let mut phase = r.arg();
            let reference = last_phase[track.min(1)];
            while phase - reference > PI {
                phase -= 2.0 * PI;
            }
            while phase - reference < -PI {
                phase += 2.0 * PI;
            }
            last_phase[track.min(1)] = phase;
            out.push(RatioPoint {
                gamma,
                track,
                branch: e.branch,
                kappa: e.kappa,
                modulus: r.norm(),
                phase,
            });
        }
        prev = order.iter().map(|&j| ks[j]).collect();
    }
    Ok(out)
}

/// Density `|psi1 e^{i k1^2 t} + psi2 e^{i k2^2 t}|^2` of the two-mode
/// superposition; only defined for real eigenvalues.
pub fn linear_superposition_density(s1: &LinearState, s2: &LinearState, t: f64, x: f64) -> Result<f64> {
    if s1.params.a != s2.params.a || s1.params.gamma != s2.params.gamma {
        return Err(PtError::Config("states belong to different parameters".into()));
    }
    for s in [s1, s2] {
        if s.kappa.kappa.im.abs() > 1e-12 {
            return Err(PtError::Domain(format!(
                "superposition formula needs real eigenvalues, got kappa = {}",
                s.kappa.kappa
            )));
        }
    }
    let k1 = s1.kappa.kappa;
    let k2 = s2.kappa.kappa;
    let i = C64::new(0.0, 1.0);
    let v = s1.eval(x) * (i * k1 * k1 * t).exp() + s2.eval(x) * (i * k2 * k2 * t).exp();
    Ok(v.norm_sqr())
}

/// Beat period `2 pi / |k1^2 - k2^2|`.
pub fn beat_period(k1: C64, k2: C64) -> f64 {
    2.0 * PI / (k1 * k1 - k2 * k2).norm()
}
