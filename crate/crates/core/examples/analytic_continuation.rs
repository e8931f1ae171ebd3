//! States beyond the coalescence of the real pair, obtained with the
//! analytically continued nonlinearity.

use ptgpe::continuation::{continued_pair, integrated_norms};
use ptgpe::stationary::trace_real_loop;
use ptgpe::ModelParams;

fn main() -> ptgpe::Result<()> {
    let lp = trace_real_loop(&ModelParams::new(2.2, 0.0, 0.5))?;
    println!("real pair coalesces at gamma = {:.6}", lp.gamma_cr);
    for gamma in [lp.gamma_cr + 1e-3, 0.42, 0.5] {
        for s in continued_pair(&lp, gamma)? {
            let (cn, l2) = integrated_norms(&s)?;
            println!(
                "gamma {gamma:.4} {:<22} kappa = {:.8}  psi(0) = {:.6}  int psi(x)psi(-x) = {:.3e}  |psi|^2 = {l2:.6}",
                s.branch().to_string(),
                s.kappa(),
                s.psi0(),
                cn,
            );
        }
    }
    Ok(())
}
