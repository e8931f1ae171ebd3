//! End-to-end acceptance checks. Prints one line per criterion and exits
//! non-zero if any criterion fails outside the documented known failures.

use std::time::Instant;

use num_complex::Complex64 as C64;

use ptgpe::continuation::{continued_pair, integrated_norms};
use ptgpe::dynamics::{
    classify_stability, measure_period, propagate, propagate_samples, relax, short_time_mode_check, superposition,
    PropagationConfig, Stability, StabilityConfig,
};
use ptgpe::linear::{
    beat_period, build_linear_state, count_real_roots, excited_state_threshold, linear_exceptional_point,
    principal_pair, solve_linear_spectrum, threshold_defect,
};
use ptgpe::stationary::{
    complex_state, continue_branch, from_linear, locate_critical_points, pt_partner, sech_tail_fit,
    stationary_solutions, trace_real_loop, Homotopy, NonlinearState, RealLoop,
};
use ptgpe::{Branch, Grid, ModelParams};

type Check = Result<(bool, String), String>;

enum Verdict {
    Pass,
    Fail,
    Known,
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed on [{lo}, {hi}]");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

fn real_kappas(p: &ModelParams) -> Result<Vec<f64>, String> {
    let mut k: Vec<f64> = solve_linear_spectrum(p)
        .map_err(|e| e.to_string())?
        .iter()
        .filter(|e| e.kappa.im == 0.0)
        .map(|e| e.kappa.re)
        .collect();
    k.sort_by(f64::total_cmp);
    Ok(k)
}

fn within_budget(secs: f64, budget: f64) -> Result<(), String> {
    if secs > budget {
        Err(format!("took {secs:.2} s, budget {budget} s"))
    } else {
        Ok(())
    }
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

fn c1() -> Check {
    let (a, t) = (2.2, Instant::now());
    let k = real_kappas(&ModelParams::new(a, 0.0, 0.0))?;
    let ground = bisect(|k| (-k * a).exp() - (2.0 * k - 1.0), 0.5, 2.0);
    let excited = bisect(|k| (-k * a).exp() + (2.0 * k - 1.0), 1e-6, 0.5);
    within_budget(t.elapsed().as_secs_f64(), 1.0)?;
    if k.len() != 2 {
        return Ok((false, format!("{} real roots", k.len())));
    }
    let err = (k[0] - excited).abs().max((k[1] - ground).abs());
    Ok((err < 1e-10, format!("kappa = {:.12}, {:.12}; oracle error {err:.1e}", k[1], k[0])))
}

fn c2() -> Check {
    let t = Instant::now();
    let k = real_kappas(&ModelParams::new(20.0, 0.0, 0.0))?;
    within_budget(t.elapsed().as_secs_f64(), 1.0)?;
    let err = k.iter().map(|k| (k - 0.5).abs()).fold(0.0, f64::max);
    Ok((k.len() == 2 && err < 1e-4, format!("{} roots, max |kappa - 1/2| = {err:.1e}", k.len())))
}

fn c3() -> Check {
    let n = |a: f64| count_real_roots(&ModelParams::new(a, 0.0, 0.0));
    let at_threshold = threshold_defect(&ModelParams::new(2.0, 0.0, 0.0)).abs();
    // excited state leaves kappa = 0 where the secular slopes match:
    // 2 a (1 + gamma^2) = 4
    let oracle = (2.0 / 1.8 - 1.0f64).sqrt();
    let th = excited_state_threshold(1.8, 1e-6).map_err(|e| e.to_string())?;
    let ok = n(2.2) == 2 && n(2.0) == 1 && at_threshold < 1e-12 && n(1.8) == 1 && (th - oracle).abs() < 1e-4;
    Ok((
        ok,
        format!(
            "real roots a=2.2/2.0/1.8: {}/{}/{}; threshold defect at a=2 {at_threshold:.1e}; a=1.8 excited above gamma = {th:.6} (oracle {oracle:.6})",
            n(2.2),
            n(2.0),
            n(1.8)
        ),
    ))
}

fn c4() -> Check {
    let (a, t) = (2.2, Instant::now());
    let ep = linear_exceptional_point(a, 1e-10).map_err(|e| e.to_string())?;
    // double root of (2k-1)^2 + gamma^2 = (1 + gamma^2) e^{-2ka}: with
    // u = 2k - 1 the slope condition gives gamma^2 = -2u/a - u^2
    let u = bisect(|u| -2.0 * u / a - (1.0 - 2.0 * u / a - u * u) * (-a * (u + 1.0)).exp(), -2.0 / a + 1e-9, -1e-9);
    let oracle = (-2.0 * u / a - u * u).sqrt();
    let mut scan_ok = true;
    for i in 0..=60 {
        let gamma = 0.01 * i as f64;
        if (gamma - ep).abs() < 1e-3 {
            continue;
        }
        let roots = principal_pair(&ModelParams::new(a, gamma, 0.0)).map_err(|e| e.to_string())?;
        let real = roots.iter().filter(|e| e.branch.is_real()).count();
        let pair = roots.len() == 2 && (roots[0].kappa - roots[1].kappa.conj()).norm() < 1e-10 && roots[0].kappa.im != 0.0;
        scan_ok &= if gamma < ep { real == 2 } else { pair };
    }
    within_budget(t.elapsed().as_secs_f64(), 5.0)?;
    let ok = scan_ok && (0.39..=0.41).contains(&ep) && (ep - oracle).abs() < 1e-8;
    Ok((ok, format!("gamma_cr,lin = {ep:.10} (oracle {oracle:.10}); scan structure {}", if scan_ok { "ok" } else { "wrong" })))
}

fn c5() -> Check {
    let t = Instant::now();
    let cp = locate_critical_points(2.2, 0.5).map_err(|e| e.to_string())?;
    let mid = 0.5 * (cp.gamma_bifurcation + cp.gamma_cr);
    let sols = stationary_solutions(&ModelParams::new(2.2, mid, 0.5)).map_err(|e| e.to_string())?;
    within_budget(t.elapsed().as_secs_f64(), 60.0)?;
    let real = sols.iter().filter(|s| s.branch().is_real()).count();
    let cx: Vec<C64> = sols.iter().filter(|s| !s.branch().is_real()).map(|s| s.kappa()).collect();
    let pair = cx.len() == 2 && (cx[0] - cx[1].conj()).norm() < 1e-8 && cx[0].im.abs() > 1e-8;
    let ok = (cp.gamma_cr - 0.40).abs() <= 0.02 && (cp.gamma_bifurcation - 0.38).abs() <= 0.02 && real == 2 && pair;
    Ok((
        ok,
        format!(
            "gamma_bif = {:.6}, gamma_cr = {:.6}; at gamma = {mid:.4}: {real} real + {} complex",
            cp.gamma_bifurcation,
            cp.gamma_cr,
            cx.len()
        ),
    ))
}

fn c6(loops: &[(f64, RealLoop)]) -> Check {
    let t = Instant::now();
    let mut bif = Vec::new();
    for g in [0.1, 0.5, 1.0] {
        bif.push(locate_critical_points(2.2, g).map_err(|e| e.to_string())?.gamma_bifurcation);
    }
    let mut ordered = true;
    let mut kap = Vec::new();
    for b in [Branch::GroundReal, Branch::ExcitedReal] {
        let k: Vec<f64> = loops
            .iter()
            .map(|(_, lp)| lp.state(b, 0.2).map(|s| s.kappa().re))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ordered &= k[0] < k[1] && k[1] < k[2];
        kap.push(k);
    }
    within_budget(t.elapsed().as_secs_f64(), 120.0)?;
    let ok = bif[2] < bif[1] && bif[1] < bif[0] && ordered;
    Ok((
        ok,
        format!(
            "gamma_bif(g=0.1/0.5/1) = {:.5}/{:.5}/{:.5}; kappa at gamma=0.2 ground {:.5}<{:.5}<{:.5}, excited {:.5}<{:.5}<{:.5}",
            bif[0], bif[1], bif[2], kap[0][0], kap[0][1], kap[0][2], kap[1][0], kap[1][1], kap[1][2]
        ),
    ))
}

fn real_states(loops: &[(f64, RealLoop)]) -> Result<Vec<NonlinearState>, String> {
    let mut out = Vec::new();
    for (_, lp) in loops {
        for gamma in [0.0, 0.1, 0.2, 0.3, 0.38] {
            for b in [Branch::GroundReal, Branch::ExcitedReal] {
                out.push(lp.state(b, gamma).map_err(|e| e.to_string())?);
            }
        }
    }
    Ok(out)
}

/// `int ||Psi(x)|^2 - |Psi(-x)|^2| dx / int |Psi|^2 dx`.
fn integrated_asymmetry(s: &NonlinearState) -> f64 {
    let g = &s.state.grid;
    let psi = &s.state.psi;
    let d = g.trapezoid(|i| C64::new((psi[i].norm_sqr() - psi[g.mirror_index(i)].norm_sqr()).abs(), 0.0)).re;
    d / g.trapezoid(|i| C64::new(psi[i].norm_sqr(), 0.0)).re
}

fn c7(states: &[NonlinearState]) -> Check {
    let t = Instant::now();
    let pt = states.iter().map(|s| s.state.pt_defect()).fold(0.0, f64::max);
    let md = states.iter().map(|s| s.state.modulus_asymmetry()).fold(0.0, f64::max);
    let c = complex_state(&ModelParams::new(2.2, 0.5, 0.5)).map_err(|e| e.to_string())?;
    let q = pt_partner(&c).map_err(|e| e.to_string())?;
    let asym = integrated_asymmetry(&c).min(integrated_asymmetry(&q));
    within_budget(t.elapsed().as_secs_f64(), 30.0)?;
    Ok((
        pt < 1e-8 && md < 1e-8 && asym > 1e-3,
        format!(
            "{} real states: max PT defect {pt:.1e}, max modulus asymmetry {md:.1e}; complex pair at gamma=0.5 integrated asymmetry {asym:.3}",
            states.len()
        ),
    ))
}

fn c8(states: &[NonlinearState]) -> Check {
    let mut worst = 0.0f64;
    for s in states {
        worst = worst.max(sech_tail_fit(s).map_err(|e| format!("{} at gamma {}: {e}", s.branch(), s.params().gamma))?.max_residual);
    }
    Ok((worst < 1e-6, format!("{} states, max sech residual {worst:.1e}", states.len())))
}

fn c9() -> Check {
    let lp = trace_real_loop(&ModelParams::new(2.2, 0.0, 0.5)).map_err(|e| e.to_string())?;
    let mut ok = true;
    let mut worst_norm = 0.0f64;
    let mut min_im = f64::INFINITY;
    let mut conj = 0.0f64;
    for gamma in [lp.gamma_cr + 1e-3, 0.45, 0.5] {
        let [s, t] = continued_pair(&lp, gamma).map_err(|e| format!("gamma {gamma}: {e}"))?;
        conj = conj.max((s.kappa() - t.kappa().conj()).norm());
        for x in [&s, &t] {
            let (cn, _) = integrated_norms(x).map_err(|e| e.to_string())?;
            worst_norm = worst_norm.max((cn - 1.0).norm());
            min_im = min_im.min(x.psi0().im.abs());
        }
    }
    ok &= conj < 1e-8 && worst_norm < 1e-10 && min_im > 1e-8;

    // follow the gamma = 0.5 pair down to g = 0
    let [s, _] = continued_pair(&lp, 0.5).map_err(|e| e.to_string())?;
    let tr = continue_branch(&s, Homotopy::G, 0.0, 20);
    if !tr.reached(0.0, Homotopy::G) {
        return Ok((false, format!("g homotopy stopped: {:?}", tr.termination)));
    }
    let k0 = tr.last().unwrap().kappa();
    let lin = principal_pair(&ModelParams::new(2.2, 0.5, 0.0)).map_err(|e| e.to_string())?;
    let dk = lin.iter().map(|e| (e.kappa - k0).norm()).fold(f64::INFINITY, f64::min);
    ok &= dk < 1e-8;
    Ok((
        ok,
        format!(
            "pair at gamma_cr+1e-3 ({:.6}) exists; conj defect {conj:.1e}; norm defect {worst_norm:.1e}; min |Im Psi(0)| {min_im:.1e}; g->0 kappa {k0:.10} vs linear {dk:.1e}",
            lp.gamma_cr + 1e-3
        ),
    ))
}

fn dynamics_grid(gamma: f64, x_max: f64, cells: f64) -> (ModelParams, Grid, PropagationConfig) {
    let p = ModelParams::new(2.2, gamma, 0.5).with_grid(x_max, 2048);
    let grid = Grid::new(&p).unwrap();
    let mut cfg = PropagationConfig::new(1e-3, 10.0).with_stride(100).with_width(cells);
    cfg.boundary_tolerance = 1e-6;
    (p, grid, cfg)
}

/// Norm conservation at gamma = 0 for a beating superposition.
fn c10a() -> Check {
    let (p, grid, cfg) = dynamics_grid(0.0, 40.0, 4.0);
    let (r, secs) = timed(|| -> Result<_, String> {
        let lp = trace_real_loop(&p).map_err(|e| e.to_string())?;
        let sigma = cfg.sigma(&grid);
        let g = relax(&lp.state(Branch::GroundReal, 0.0).map_err(|e| e.to_string())?, sigma).map_err(|e| e.to_string())?;
        let x = relax(&lp.state(Branch::ExcitedReal, 0.0).map_err(|e| e.to_string())?, sigma).map_err(|e| e.to_string())?;
        let rec = propagate_samples(&grid, superposition(&g.state.psi, &x.state.psi), &cfg, &p).map_err(|e| e.to_string())?;
        let n0 = rec.norm_history[0];
        let dev = rec.norm_history.iter().map(|n| (n - n0).abs() / n0).fold(0.0, f64::max);
        Ok((rec, dev))
    });
    let (rec, dev) = r?;
    within_budget(secs, 60.0)?;
    let swing = rec.imbalance().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((dev < 1e-8 && !rec.truncated(), format!("a: max relative norm change {dev:.1e} (imbalance swing {swing:.2}, {secs:.0} s)")))
}

/// Density drift of relaxed ground states.
fn c10b() -> Check {
    let mut worst = 0.0f64;
    let mut secs_max = 0.0f64;
    for gamma in [0.0, 0.2] {
        let (p, grid, cfg) = dynamics_grid(gamma, 24.0, 8.0);
        let (drift, secs) = timed(|| -> Result<f64, String> {
            let lp = trace_real_loop(&p).map_err(|e| e.to_string())?;
            let g = relax(&lp.state(Branch::GroundReal, gamma).map_err(|e| e.to_string())?, cfg.sigma(&grid))
                .map_err(|e| e.to_string())?;
            let rec = propagate(&g.state, &cfg, &p).map_err(|e| e.to_string())?;
            if rec.truncated() {
                return Err("run truncated".into());
            }
            let d0 = &rec.density_snapshots[0];
            Ok(rec
                .density_snapshots
                .iter()
                .map(|d| d.iter().zip(d0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
                .fold(0.0, f64::max))
        });
        worst = worst.max(drift?);
        secs_max = secs_max.max(secs);
    }
    within_budget(secs_max, 60.0)?;
    Ok((worst < 1e-5, format!("b: max density drift {worst:.1e} at gamma 0, 0.2")))
}

/// Linear beat period on a fine grid, for two well widths.
fn c10c() -> Check {
    let p = ModelParams::new(2.2, 0.0, 0.0).with_grid(180.0, 32768);
    let grid = Grid::new(&p).map_err(|e| e.to_string())?;
    let ev = principal_pair(&p).map_err(|e| e.to_string())?;
    let t_an = beat_period(ev[0].kappa, ev[1].kappa);
    let mut errs = Vec::new();
    for cells in [4.0, 2.0] {
        let (err, secs) = timed(|| -> Result<f64, String> {
            let mut cfg = PropagationConfig::new(1e-3, (2.3 * t_an / 1e-3).round() * 1e-3)
                .with_stride(10)
                .with_width(cells)
                .without_densities();
            cfg.boundary_tolerance = 1e-6;
            let sigma = cfg.sigma(&grid);
            let st: Vec<NonlinearState> = ev
                .iter()
                .map(|e| {
                    let ls = build_linear_state(*e, &p).map_err(|e| e.to_string())?;
                    relax(&from_linear(&ls, &p).map_err(|e| e.to_string())?, sigma).map_err(|e| e.to_string())
                })
                .collect::<Result<_, _>>()?;
            let rec = propagate_samples(&grid, superposition(&st[0].state.psi, &st[1].state.psi), &cfg, &p)
                .map_err(|e| e.to_string())?;
            if rec.truncated() {
                return Err("run truncated".into());
            }
            let tm = measure_period(&rec.times, &rec.imbalance()).ok_or("no beat detected")?;
            Ok((tm - t_an).abs() / t_an)
        });
        within_budget(secs, 60.0)?;
        errs.push(err?);
    }
    Ok((
        errs[1] < 0.02 && errs[1] < errs[0],
        format!("c: beat period {t_an:.4}, error {:.2}% (sigma = 4dx) -> {:.2}% (sigma = 2dx)", 100.0 * errs[0], 100.0 * errs[1]),
    ))
}

/// Late-time takeover of the gain well at gamma = 0.3.
fn c10d() -> Check {
    let p = ModelParams::new(2.2, 0.3, 0.5).with_grid(40.0, 2048);
    let grid = Grid::new(&p).map_err(|e| e.to_string())?;
    let mut cfg = PropagationConfig::new(1e-3, 60.0).with_stride(500).with_width(2.0).without_densities();
    cfg.boundary_tolerance = 1e-4;
    let (rec, secs) = timed(|| -> Result<_, String> {
        let lp = trace_real_loop(&p).map_err(|e| e.to_string())?;
        let sigma = cfg.sigma(&grid);
        let g = relax(&lp.state(Branch::GroundReal, 0.3).map_err(|e| e.to_string())?, sigma).map_err(|e| e.to_string())?;
        let x = relax(&lp.state(Branch::ExcitedReal, 0.3).map_err(|e| e.to_string())?, sigma).map_err(|e| e.to_string())?;
        propagate_samples(&grid, superposition(&g.state.psi, &x.state.psi), &cfg, &p).map_err(|e| e.to_string())
    });
    let rec = rec?;
    within_budget(secs, 60.0)?;
    let frac = rec.gain_fraction();
    let late = &frac[2 * frac.len() / 3..];
    let norms = &rec.norm_history[2 * frac.len() / 3..];
    let monotone = late.windows(2).all(|w| w[1] >= w[0]) && late.last().copied().unwrap_or(0.0) > 0.5;
    let growing = norms.windows(2).all(|w| w[1] >= w[0]) && norms.last() > norms.first();
    let (lo, hi) = late.iter().fold((1.0f64, 0.0f64), |(a, b), v| (a.min(*v), b.max(*v)));
    Ok((
        monotone && growing,
        format!(
            "d: late gain fraction in [{lo:.3}, {hi:.3}], monotone {monotone}; norm {:.3} -> {:.3}, growing {growing}",
            norms.first().unwrap_or(&f64::NAN),
            norms.last().unwrap_or(&f64::NAN)
        ),
    ))
}

fn c11() -> Check {
    let cfg = StabilityConfig::default();
    let mut tags = Vec::new();
    for gamma in [0.2, 0.39] {
        let p = ModelParams::new(2.2, gamma, 0.5).with_grid(20.5, 8192);
        let lp = trace_real_loop(&p).map_err(|e| e.to_string())?;
        for b in [Branch::GroundReal, Branch::ExcitedReal] {
            let s = lp.state(b, gamma).map_err(|e| e.to_string())?;
            tags.push(classify_stability(&s, &cfg).map_err(|e| e.to_string())?.tag);
        }
    }
    let c = complex_state(&ModelParams::new(2.2, 0.5, 0.5).with_grid(30.0, 2048)).map_err(|e| e.to_string())?;
    let q = pt_partner(&c).map_err(|e| e.to_string())?;
    let (dec, gro) = if c.branch() == Branch::ComplexDecaying { (c, q) } else { (q, c) };
    let rd = classify_stability(&dec, &cfg).map_err(|e| e.to_string())?;
    let rg = classify_stability(&gro, &cfg).map_err(|e| e.to_string())?;
    let again = classify_stability(&dec, &cfg).map_err(|e| e.to_string())?;
    let deterministic = again.growth == rd.growth && again.rates == rd.rates;
    tags.push(rd.tag);
    tags.push(rg.tag);
    use Stability::*;
    let want = [Centre, Centre, Saddle, Centre, Sink, Source];
    let show = |t: &[Stability]| t.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(", ");
    Ok((
        tags == want && deterministic,
        format!("gamma 0.2 / 0.39 / 0.5 pair: {} (expected {}); repeat run identical: {deterministic}", show(&tags), show(&want)),
    ))
}

fn c12() -> Check {
    let c = complex_state(&ModelParams::new(2.2, 0.5, 0.5).with_grid(30.0, 2048)).map_err(|e| e.to_string())?;
    let q = pt_partner(&c).map_err(|e| e.to_string())?;
    let cfg = PropagationConfig::new(1e-3, 1.0).with_width(4.0);
    let mut worst = 0.0f64;
    let mut detail = Vec::new();
    for s in [&c, &q] {
        let m = short_time_mode_check(s, &cfg, 0.05).map_err(|e| e.to_string())?;
        let rel = (m.rate - m.expected).abs() / m.expected.abs();
        worst = worst.max(rel);
        detail.push(format!("{}: rate {:.5} vs {:.5}", s.branch(), m.rate, m.expected));
    }
    Ok((worst < 0.05, format!("{}; max relative error {:.2}%", detail.join(", "), 100.0 * worst)))
}

fn report(id: &str, verdict: &Verdict, secs: f64, detail: &str) {
    let v = match verdict {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Known => "FAIL (known)",
    };
    println!("criterion {id:>2}: {v} [{secs:.1} s] {detail}");
}

fn run(id: &str, f: impl FnOnce() -> Check) -> Verdict {
    let (r, secs) = timed(f);
    let (v, d) = match r {
        Ok((true, d)) => (Verdict::Pass, d),
        Ok((false, d)) => (Verdict::Fail, d),
        Err(e) => (Verdict::Fail, format!("error: {e}")),
    };
    report(id, &v, secs, &d);
    v
}

fn main() {
    let mut verdicts = Vec::new();
    verdicts.push(run("1", c1));
    verdicts.push(run("2", c2));
    verdicts.push(run("3", c3));
    verdicts.push(run("4", c4));
    verdicts.push(run("5", c5));

    let loops: Vec<(f64, RealLoop)> = [0.1, 0.5, 1.0]
        .iter()
        .map(|&g| (g, trace_real_loop(&ModelParams::new(2.2, 0.0, g)).expect("real loop")))
        .collect();
    verdicts.push(run("6", || c6(&loops)));
    let states = real_states(&loops);
    verdicts.push(run("7", || c7(&states.clone()?)));
    verdicts.push(run("8", || c8(&states.clone()?)));
    verdicts.push(run("9", c9));

    // criterion 10: (a)-(c) are required, (d) is a documented known failure
    let (parts, secs) = timed(|| [c10a(), c10b(), c10c(), c10d()]);
    let mut hard_ok = true;
    let mut d_ok = true;
    let mut detail = Vec::new();
    for (i, r) in parts.into_iter().enumerate() {
        let (ok, d) = r.unwrap_or_else(|e| (false, format!("{}: error: {e}", ["a", "b", "c", "d"][i])));
        if i < 3 {
            hard_ok &= ok;
        } else {
            d_ok = ok;
        }
        detail.push(d);
    }
    let v = match (hard_ok, d_ok) {
        (true, true) => Verdict::Pass,
        (true, false) => Verdict::Known,
        _ => Verdict::Fail,
    };
    report("10", &v, secs, &detail.join("; "));
    verdicts.push(v);

    verdicts.push(run("11", c11));
    verdicts.push(run("12", c12));

    let pass = verdicts.iter().filter(|v| matches!(v, Verdict::Pass)).count();
    let known = verdicts.iter().filter(|v| matches!(v, Verdict::Known)).count();
    let fail = verdicts.len() - pass - known;
    println!("acceptance: {pass} passed, {known} known failure(s), {fail} failed");
    if fail > 0 {
        std::process::exit(1);
    }
}
