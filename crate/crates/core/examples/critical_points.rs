//! Bifurcation and coalescence gain/loss values for a few nonlinearities.

use std::time::Instant;

use ptgpe::stationary::locate_critical_points;

fn main() -> ptgpe::Result<()> {
    let a = 2.2;
    println!("{:>5} {:>12} {:>12} {:>12} {:>8}", "g", "gamma_bif", "gamma_cr", "pitchfork", "secs");
    for g in [0.0, 0.1, 0.5, 1.0] {
        let t = Instant::now();
        let cp = locate_critical_points(a, g)?;
        println!(
            "{g:>5.2} {:>12.6} {:>12.6} {:>12} {:>8.2}",
            cp.gamma_bifurcation,
            cp.gamma_cr,
            cp.gamma_bifurcation_pitchfork.map(|v| format!("{v:.6}")).unwrap_or("-".into()),
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
