//! QFI under bit flips and dephasing against the closed forms.
use critsense::channels::{apply_channel, bitflip_qfi_formula, ghz_dephased_delta_theta, ChannelSpec};
use critsense::metrology::qfi_mixed;
use critsense::models::{ghz_state, solve, ModelSpec};
use critsense::numeric::TOL;
use critsense::qcore::{Letter, MixedState, PauliOperator};

fn main() -> critsense::Result<()> {
    let l = 6;
    let o = PauliOperator::sum_of(l, Letter::Z);
    let psi = solve(&ModelSpec::tfim(l, 1.0, 1.0))?.state;
    let o2 = psi.expectation(&(&o * &o))?.re;
    let rho = MixedState::from_pure(&psi)?;
    for p in [0.0, 0.1, 0.3] {
        let f = qfi_mixed(&apply_channel(&rho, &ChannelSpec::bitflip(p))?, &o, TOL.spectral_cutoff)?.value;
        println!("bitflip p={p}: QFI {f:.8}, formula {:.8}", bitflip_qfi_formula(l, p, o2));
    }
    let ghz = MixedState::from_pure(&ghz_state(l)?)?;
    for p in [0.05, 0.2] {
        let f = qfi_mixed(&apply_channel(&ghz, &ChannelSpec::dephase(p))?, &o, TOL.spectral_cutoff)?.value;
        let d = ghz_dephased_delta_theta(l, p)?;
        println!("dephased GHZ p={p}: QFI {f:.6}, 4/δθ² {:.6}", 4.0 / (d * d));
    }
    Ok(())
}
