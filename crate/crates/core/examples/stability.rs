//! Empirical stability tags of the stationary states, and the short-time
//! growth rate of a complex state compared with its eigenvalue.

use ptgpe::dynamics::{classify_stability, short_time_mode_check, PropagationConfig, StabilityConfig};
use ptgpe::stationary::{complex_state, trace_real_loop};
use ptgpe::{Branch, ModelParams};

fn main() -> ptgpe::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("number")).collect();
    let p = ModelParams::new(2.2, args.first().copied().unwrap_or(0.39), 0.5).with_grid(args.get(1).copied().unwrap_or(20.5), 8192);
    let cfg = StabilityConfig {
        t_final: args.get(2).copied().unwrap_or(60.0),
        ..StabilityConfig::default()
    };
    let lp = trace_real_loop(&p)?;
    for b in [Branch::GroundReal, Branch::ExcitedReal] {
        let r = classify_stability(&lp.state(b, p.gamma)?, &cfg)?;
        let growth = r.growth.iter().map(|g| format!("{g:.1}")).collect::<Vec<_>>().join(", ");
        println!("gamma {}: {b} -> {} (deviation growth {growth})", p.gamma, r.tag);
    }
    let c = complex_state(&p.with_gamma(0.5).with_grid(30.0, 2048))?;
    println!("gamma 0.5: {} -> {}", c.branch(), classify_stability(&c, &cfg)?.tag);
    let m = short_time_mode_check(&c, &PropagationConfig::new(1e-3, 1.0).with_width(4.0), 0.05)?;
    println!("norm growth rate {:.5}, expected {:.5} over t = {:.3}", m.rate, m.expected, m.t_window);
    Ok(())
}
