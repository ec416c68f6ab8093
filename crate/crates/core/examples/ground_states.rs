//! Ground states of the spin-chain models and a few reference probes.
use critsense::models::{ghz_state, luttinger_k, optimal_oat_twist, solve, ModelSpec};

fn main() -> critsense::Result<()> {
    for spec in [
        ModelSpec::tfim(12, 1.0, 1.0),
        ModelSpec::xxz(12, -0.5),
        ModelSpec::rydberg(12, 1.0, 0.6734, 50.0, 0.0),
        ModelSpec::cluster_ladder(5),
    ] {
        let g = solve(&spec)?;
        println!("{:?}: E0 = {:.10}, gap = {:.6}", spec.kind, g.energy, g.gap);
    }
    println!("Luttinger K at Δ = -0.5: {}", luttinger_k(-0.5)?);
    let oat = optimal_oat_twist(10)?;
    println!("OAT L=10: twist {:.4}, ξ² = {:.4}", oat.twist_time, oat.squeezing);
    println!("GHZ(3) amplitudes: {:?}", ghz_state(3)?.amplitudes().iter().map(|a| a.re).collect::<Vec<_>>());
    Ok(())
}
