//! Split-operator propagation of a ground/excited superposition. Prints the
//! populations of the loss (left) and gain (right) wells over time.

use ptgpe::dynamics::{propagate_samples, relax, superposition, PropagationConfig};
use ptgpe::stationary::trace_real_loop;
use ptgpe::{Branch, Grid, ModelParams};

fn main() -> ptgpe::Result<()> {
    let gamma: f64 = std::env::args().nth(1).map(|s| s.parse().expect("gamma")).unwrap_or(0.2);
    let params = ModelParams::new(2.2, gamma, 0.5).with_grid(80.0, 8192);
    let grid = Grid::new(&params)?;
    let mut cfg = PropagationConfig::new(1e-3, 40.0).with_stride(1000).with_width(4.0).without_densities();
    cfg.boundary_tolerance = 1e-6;
    let sigma = cfg.sigma(&grid);
    let lp = trace_real_loop(&params)?;
    let ground = relax(&lp.state(Branch::GroundReal, gamma)?, sigma)?;
    let excited = relax(&lp.state(Branch::ExcitedReal, gamma)?, sigma)?;
    let rec = propagate_samples(&grid, superposition(&ground.state.psi, &excited.state.psi), &cfg, &params)?;
    println!("{:>6} {:>8} {:>8} {:>8}", "t", "norm", "loss", "gain");
    for (i, t) in rec.times.iter().enumerate() {
        let (l, r) = rec.left_right_density[i];
        println!("{t:>6.1} {:>8.4} {l:>8.4} {r:>8.4}", rec.norm_history[i]);
    }
    if rec.truncated() {
        println!("truncated (overflow {}, edge {})", rec.overflow, rec.boundary_exceeded);
    }
    Ok(())
}
