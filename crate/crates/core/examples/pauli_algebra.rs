//! Build a Hamiltonian from Pauli strings and inspect products and commutation.
use critsense::models::{build_hamiltonian, ModelSpec};
use critsense::qcore::{Letter, PauliOperator, PauliString};

fn main() -> critsense::Result<()> {
    let x0 = PauliString::from_sites(3, &[(0, Letter::X)]);
    let y0 = PauliString::from_sites(3, &[(0, Letter::Y)]);
    let (phase, z) = x0.mul(&y0);
    println!("X0·Y0 = {phase} {}", z.to_letters(3));
    println!("X0 commutes with Y0: {}", x0.commutes_with(&y0));

    let h = build_hamiltonian(&ModelSpec::tfim(4, 1.0, 1.0))?;
    println!("TFIM(L=4) has {} terms", h.num_terms());
    let sz = PauliOperator::sum_of(4, Letter::Z);
    let sq = &sz * &sz;
    println!("(ΣZ)² has {} terms", sq.num_terms());
    Ok(())
}
