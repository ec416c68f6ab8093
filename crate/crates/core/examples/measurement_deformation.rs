//! Outcome-averaged decoded correlators and QFI on the cluster ladder.
use critsense::deformed::{
    averaged_qfi, averaged_qfi_from_decoded, decoded_correlator, decoded_correlator_sampled, enumerate_outcomes,
    sample_outcomes, uniform_outcome_lro_check, Strength,
};
use critsense::models::{ladder_qubit, solve, ModelSpec};
use critsense::qcore::{Letter, PauliOperator};

fn main() -> critsense::Result<()> {
    let rungs = 4;
    let psi = solve(&ModelSpec::cluster_ladder(rungs))?.state;
    let ops: Vec<PauliOperator> = (0..rungs).map(|j| PauliOperator::single(2 * rungs, ladder_qubit(j, 1), Letter::X)).collect();
    for beta in [Strength::Finite(0.5), Strength::Projective] {
        let ens = enumerate_outcomes(&psi, &ops, beta)?;
        let samples = sample_outcomes(&psi, &ops, beta, 7, 5000)?;
        let est = decoded_correlator_sampled(&psi, &ops, beta, &samples, 0, rungs - 1)?;
        println!(
            "β = {:?}: decoded ⟨ZZ⟩ exact {:.5}, sampled {:.5} ± {:.5}; averaged QFI {:.6} / {:.6}",
            beta,
            decoded_correlator(&ens, 0, rungs - 1)?,
            est.mean,
            est.stderr,
            averaged_qfi(&ens)?,
            averaged_qfi_from_decoded(&ens)?
        );
    }
    let lro = uniform_outcome_lro_check(5, &[0.0, 0.5, 1.0, 2.0], 1)?;
    println!("uniform-outcome ⟨Z0,2 Z4,2⟩: {:?} (monotone {})", lro.correlators, lro.monotone);
    Ok(())
}
