//! Converting physical well and interaction strengths to the dimensionless
//! parameters and back.

use ptgpe::model::{dimensionless_to_physical, physical_to_dimensionless, PhysicalParams};

fn main() -> ptgpe::Result<()> {
    // a 1D condensate of N atoms: G = N g_1D
    let p = PhysicalParams {
        V0: 2.0,
        Gamma: 0.6,
        G: 1000.0 * 1e-3,
        m: 1.0,
        hbar: 1.0,
    };
    let d = physical_to_dimensionless(&p)?;
    println!("gamma = {}, g = {}", d.gamma, d.g);
    println!("length scale {}, energy scale {}", d.length_scale, d.energy_scale);
    println!("a = 2.2 corresponds to a well separation of {}", 2.2 * d.length_scale);
    let back = dimensionless_to_physical(d.gamma, d.g, p.V0, p.m, p.hbar)?;
    println!("round trip: {back:?}");
    Ok(())
}
