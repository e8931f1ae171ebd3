//! Linear spectrum of the double well as a function of gain/loss, with the
//! exceptional point and the beat period of the principal pair.

use ptgpe::linear::{beat_period, linear_exceptional_point, principal_pair, solve_linear_spectrum};
use ptgpe::ModelParams;

fn main() -> ptgpe::Result<()> {
    let a = 2.2;
    let ep = linear_exceptional_point(a, 1e-10)?;
    println!("exceptional point at gamma = {ep:.8}");
    println!("{:>6} {:>16} {:>16} {:>10}", "gamma", "kappa_1", "kappa_2", "beat");
    for i in 0..=10 {
        let gamma = 0.05 * i as f64;
        let p = ModelParams::new(a, gamma, 0.0);
        let pair = principal_pair(&p)?;
        let fmt = |k: num_complex::Complex64| format!("{:.5}{:+.5}i", k.re, k.im);
        let beat = if gamma < ep { format!("{:.3}", beat_period(pair[0].kappa, pair[1].kappa)) } else { "-".into() };
        println!("{gamma:>6.2} {:>16} {:>16} {beat:>10}", fmt(pair[0].kappa), fmt(pair[1].kappa));
    }
    let all = solve_linear_spectrum(&ModelParams::new(a, 0.5, 0.0))?;
    println!("all roots at gamma = 0.5:");
    for e in all {
        println!("  {} {:.10}", e.branch, e.kappa);
    }
    Ok(())
}
