//! Real and complex stationary branches of the nonlinear problem at fixed
//! nonlinearity, with the PT diagnostics of each state.

use ptgpe::stationary::{sech_tail_fit, stationary_solutions};
use ptgpe::ModelParams;

fn main() -> ptgpe::Result<()> {
    let (a, g) = (2.2, 0.5);
    for gamma in [0.2, 0.385, 0.45] {
        println!("gamma = {gamma}");
        for s in stationary_solutions(&ModelParams::new(a, gamma, g))? {
            let tail = if s.branch().is_real() {
                sech_tail_fit(&s).map(|f| format!("sech residual {:.1e}", f.max_residual)).unwrap_or_default()
            } else {
                String::new()
            };
            println!(
                "  {:<16} kappa = {:.8}  pt defect {:.1e}  asymmetry {:.1e}  {tail}",
                s.branch().to_string(),
                s.kappa(),
                s.state.pt_defect(),
                s.state.modulus_asymmetry(),
            );
        }
    }
    Ok(())
}
