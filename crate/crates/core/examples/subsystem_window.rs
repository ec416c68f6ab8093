//! Precision of a parity readout restricted to a subregion of the chain.
use critsense::models::{solve, Boundary, ModelSpec};
use critsense::subsys::{default_grid, parity_theta_curve, window_report, SubsystemProtocol};

fn main() -> critsense::Result<()> {
    let l = 12;
    let psi = solve(&ModelSpec::tfim(l, 1.0, 1.0))?.state;
    let thetas = default_grid();
    for l_sub in [4, 6, 8] {
        let protocol = SubsystemProtocol::parity(l, l_sub, Boundary::Periodic)?;
        let curve = parity_theta_curve(&psi, &protocol, &thetas)?;
        let r = window_report(&curve, l_sub)?;
        println!(
            "L_sub = {l_sub}: δθ_min = {:.4} at θ = {:.4}, SQL {:.4}, interior {}",
            r.delta_min,
            r.theta_min.unwrap_or(f64::NAN),
            r.sql_reference,
            r.interior
        );
    }
    Ok(())
}
