//! Quantum Fisher information of reference probes and parity error propagation.
use critsense::metrology::{error_propagation, qfi_pure};
use critsense::models::{ghz_state, solve, spin_coherent_state, ModelSpec};
use critsense::qcore::{Letter, PauliOperator};

fn main() -> critsense::Result<()> {
    println!("{:>3} {:>10} {:>10} {:>10}", "L", "GHZ", "critical", "coherent");
    for l in (4..=12).step_by(2) {
        let o = PauliOperator::sum_of(l, Letter::Z);
        let crit = solve(&ModelSpec::tfim(l, 1.0, 1.0))?.state;
        println!(
            "{l:>3} {:>10.3} {:>10.3} {:>10.3}",
            qfi_pure(&ghz_state(l)?, &o)?,
            qfi_pure(&crit, &o)?,
            qfi_pure(&spin_coherent_state(l)?, &o)?
        );
    }
    let l = 10;
    let psi = solve(&ModelSpec::tfim(l, 1.0, 1.0))?.state;
    let o = PauliOperator::sum_of(l, Letter::Z);
    let parity = PauliOperator::product_of(l, Letter::X, 0..l);
    let e = error_propagation(&psi, &o, &parity, 1e-3)?;
    println!("parity readout δθ = {:.6}, bound 1/√F = {:.6}", e.delta_theta, 1.0 / qfi_pure(&psi, &o)?.sqrt());
    Ok(())
}
