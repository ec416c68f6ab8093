//! Hadamard-test readout of a lattice symmetry on the antiferromagnetic chain.
use critsense::metrology::qfi_pure;
use critsense::models::{solve, Boundary, ModelSpec};
use critsense::qcore::{Letter, PauliOperator};
use critsense::symmetry::{build_symmetry, hadamard_cfi, hadamard_test, SymmetryKind};

fn main() -> critsense::Result<()> {
    let l = 10;
    let psi = solve(&ModelSpec::tfim(l, -1.0, 1.0))?.state;
    let stag = PauliOperator::weighted_sum(l, Letter::Z, |j| if j % 2 == 0 { 1.0 } else { -1.0 });
    let t = build_symmetry(SymmetryKind::Translation, l, None, Boundary::Periodic)?;
    let h = hadamard_test(&psi, &t)?;
    println!("⟨T⟩ = {:.6} using {} controlled swaps", h.value, h.controlled_swaps);
    for theta in [1e-3, 0.05, 0.1] {
        println!("θ = {theta}: CFI = {:.4}", hadamard_cfi(&psi, &t, &stag, theta)?);
    }
    println!("QFI = {:.4}", qfi_pure(&psi, &stag)?);
    Ok(())
}
