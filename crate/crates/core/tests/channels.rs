use approx::assert_abs_diff_eq;
use critsense::channels::*;
use critsense::fermion::fit_power_law;
use critsense::metrology::{qfi_mixed, qfi_mixed_with_symmetry, small_angle_inverse_variance};
use critsense::models::{ghz_state, solve, ModelSpec};
use critsense::qcore::{Letter, MixedState, PauliOperator, PauliString, PureState};
use critsense::Error;

const CUT: f64 = 1e-12;

fn critical(l: usize) -> PureState {
    solve(&ModelSpec::tfim(l, 1.0, 1.0)).unwrap().state
}

fn sum_z(l: usize) -> PauliOperator {
    PauliOperator::sum_of(l, Letter::Z)
}

fn parity_x(l: usize) -> PauliString {
    PauliString::from_sites(l, &(0..l).map(|j| (j, Letter::X)).collect::<Vec<_>>())
}

fn max_diff(a: &faer::Mat<critsense::C64>, b: &faer::Mat<critsense::C64>) -> f64 {
    let mut m = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            m = m.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    m
}

#[test]
fn zero_probability_is_identity() {
    let rho = MixedState::from_pure(&critical(4)).unwrap();
    for spec in [ChannelSpec::bitflip(0.0), ChannelSpec::dephase(0.0), ChannelSpec::zz(0.0, true)] {
        let out = apply_channel(&rho, &spec).unwrap();
        assert!(max_diff(out.matrix(), rho.matrix()) < 1e-14);
    }
}

#[test]
fn full_bitflip_flips() {
    let rho = MixedState::from_pure(&PureState::basis(1, 0).unwrap()).unwrap();
    let out = apply_channel(&rho, &ChannelSpec::bitflip(1.0)).unwrap();
    assert_abs_diff_eq!(out.matrix()[(1, 1)].re, 1.0, epsilon = 1e-14);
    assert_abs_diff_eq!(out.matrix()[(0, 0)].re, 0.0, epsilon = 1e-14);
}

#[test]
fn bitflip_commutes_with_parity_conjugation() {
    let l = 4;
    let psi = critical(l);
    let rot = psi.evolve_phase(&sum_z(l), 0.3).unwrap();
    let rho = MixedState::from_pure(&rot).unwrap();
    let p = PauliOperator::product_of(l, Letter::X, 0..l).to_matrix().unwrap();
    let conj = |m: &faer::Mat<critsense::C64>| &p * m * &p;
    let spec = ChannelSpec::bitflip(0.27);
    let a = conj(apply_channel(&rho, &spec).unwrap().matrix());
    let b = apply_channel_to_matrix(&conj(rho.matrix()), l, &spec).unwrap();
    assert!(max_diff(&a, &b) < 1e-12);
}

#[test]
fn trace_hermiticity_and_complete_positivity() {
    let rho = MixedState::from_pure(&critical(5).evolve_phase(&sum_z(5), 0.2).unwrap()).unwrap();
    let specs = [
        ChannelSpec::bitflip(0.3),
        ChannelSpec::dephase(0.45),
        ChannelSpec::zz(0.2, false),
        ChannelSpec::zz(0.2, true),
        ChannelSpec::global_dephase(0.4, 1.0),
    ];
    for spec in &specs {
        let out = apply_channel(&rho, spec).unwrap();
        let tr: f64 = (0..out.dim()).map(|i| out.matrix()[(i, i)].re).sum();
        assert_abs_diff_eq!(tr, 1.0, epsilon = 1e-12);
        assert!(critsense::qcore::hermiticity_deviation(out.matrix()) < 1e-12);
        assert!(out.spectrum().min_eigenvalue() > -1e-10);
        if spec.kind != ChannelKind::GlobalDephase {
            assert!(kraus_completeness_deviation(spec).unwrap() < 1e-12);
            assert!(choi_min_eigenvalue(spec).unwrap() > -1e-10);
        }
    }
}

#[test]
fn invalid_probability_rejected() {
    let rho = MixedState::from_pure(&PureState::basis(2, 0).unwrap()).unwrap();
    assert!(apply_channel(&rho, &ChannelSpec::bitflip(1.2)).is_err());
    assert!(apply_channel(&rho, &ChannelSpec::global_dephase(-0.1, 1.0)).is_err());
}

#[test]
fn bitflip_formula_limits_and_ghz2() {
    assert_abs_diff_eq!(bitflip_qfi_formula(6, 0.0, 13.0), 52.0, epsilon = 1e-12);
    assert_abs_diff_eq!(bitflip_qfi_formula(6, 0.5, 13.0), 24.0, epsilon = 1e-12);
    assert_abs_diff_eq!(bitflip_qfi_formula(2, 0.25, 4.0), 10.0, epsilon = 1e-12);
    let rho = apply_channel(&MixedState::from_pure(&ghz_state(2).unwrap()).unwrap(), &ChannelSpec::bitflip(0.25)).unwrap();
    assert_abs_diff_eq!(qfi_mixed(&rho, &sum_z(2), CUT).unwrap().value, 10.0, epsilon = 1e-8);
}

#[test]
fn bitflip_qfi_matches_formula() {
    for l in [2usize, 4, 6, 8] {
        for psi in [critical(l), ghz_state(l).unwrap()] {
            let o = sum_z(l);
            let o2 = psi.expectation(&(&o * &o)).unwrap().re;
            let rho = MixedState::from_pure(&psi).unwrap();
            for p in [0.1, 0.3, 0.49] {
                let noisy = apply_channel(&rho, &ChannelSpec::bitflip(p)).unwrap();
                let f = qfi_mixed_with_symmetry(&noisy, &o, &parity_x(l), CUT).unwrap().value;
                assert_abs_diff_eq!(f, bitflip_qfi_formula(l, p, o2), epsilon = 1e-8 * f.max(1.0));
            }
        }
    }
}

#[test]
fn parity_readout_saturates_bitflip_qfi() {
    for l in [3usize, 5, 8] {
        let rho = MixedState::from_pure(&critical(l)).unwrap();
        let parity = PauliOperator::product_of(l, Letter::X, 0..l);
        for p in [0.1, 0.35] {
            let noisy = apply_channel(&rho, &ChannelSpec::bitflip(p)).unwrap();
            let f = qfi_mixed(&noisy, &sum_z(l), CUT).unwrap().value;
            let inv = small_angle_inverse_variance(&noisy, &sum_z(l), &parity).unwrap();
            assert_abs_diff_eq!(inv, f, epsilon = 1e-8 * f);
        }
    }
}

#[test]
fn conjugate_coefficients_closed_form() {
    assert_eq!(conjugate_collective_action(&ChannelSpec::dephase(0.1), CollectiveObservable::Spin, 6).unwrap(), (0.8, 0.0));
    let (a, b) = conjugate_collective_action(&ChannelSpec::dephase(0.1), CollectiveObservable::SpinSquared, 6).unwrap();
    assert_abs_diff_eq!(a, 0.64, epsilon = 1e-15);
    assert_abs_diff_eq!(b, 0.54, epsilon = 1e-15);
    assert_eq!(conjugate_collective_action(&ChannelSpec::dephase(0.0), CollectiveObservable::Spin, 4).unwrap(), (1.0, 0.0));
    assert!(conjugate_collective_action(&ChannelSpec::bitflip(0.1), CollectiveObservable::Spin, 4).is_err());
}

#[test]
fn conjugate_coefficients_match_bruteforce() {
    for l in [2usize, 4, 6, 8] {
        for p in [0.05, 0.2, 0.45] {
            let spec = ChannelSpec::dephase(p);
            for obs in [CollectiveObservable::Spin, CollectiveObservable::SpinSquared] {
                let (a, b) = conjugate_collective_action(&spec, obs, l).unwrap();
                let fit = conjugate_action_bruteforce(&spec, obs, l, 0.7).unwrap();
                assert_abs_diff_eq!(fit.a, a, epsilon = 1e-10);
                assert_abs_diff_eq!(fit.b, b, epsilon = 1e-10);
                assert!(fit.residual < 1e-10, "L={l} p={p} {obs:?}: residual {}", fit.residual);
            }
        }
    }
}

#[test]
fn dephasing_formula_limits() {
    let c = 0.21;
    assert_abs_diff_eq!(dephased_delta_theta_critical(100, 0.0, c).unwrap(), std::f64::consts::PI * (c / 100.0).sqrt(), epsilon = 1e-15);
    assert_abs_diff_eq!(ghz_dephased_delta_theta(7, 0.0).unwrap(), 1.0 / 7.0, epsilon = 1e-15);
    assert!(matches!(dephased_delta_theta_critical(10, 0.5, c), Err(Error::Domain { .. })));
    assert!(matches!(ghz_dephased_delta_theta(10, 0.7), Err(Error::Domain { .. })));
}

#[test]
fn dephased_readout_matches_dense_channel() {
    // the conjugate-channel shortcut against a full density-matrix evaluation
    let l = 6;
    let psi = critical(l);
    let p = 0.2;
    let rho = apply_channel(&MixedState::from_pure(&psi).unwrap(), &ChannelSpec::dephase(p)).unwrap();
    let sx = PauliOperator::sum_of(l, Letter::X) * 0.5;
    let sy = PauliOperator::sum_of(l, Letter::Y) * 0.5;
    let dense = rho.variance(&sy).unwrap().sqrt() / rho.expectation(&sx).unwrap().re.abs();
    assert_abs_diff_eq!(dephased_delta_theta_ed(&psi, p).unwrap(), dense, epsilon = 1e-10);
}

#[test]
fn dephased_critical_readout_matches_formula_with_fitted_cy() {
    let p = 0.2;
    let ls = [8usize, 10, 12, 14];
    let ed: Vec<f64> = ls.iter().map(|&l| dephased_delta_theta_ed(&critical(l), p).unwrap()).collect();
    // one C_y for all sizes: least squares on δθ²·L/π² − p(1−p)/(1−2p)²
    let shift = p * (1.0 - p) / (1.0 - 2.0 * p).powi(2);
    let pi2 = std::f64::consts::PI.powi(2);
    let c_y = ls.iter().zip(&ed).map(|(&l, d)| d * d * l as f64 / pi2 - shift).sum::<f64>() / ls.len() as f64;
    assert!(c_y > 0.0);
    for (&l, d) in ls.iter().zip(&ed) {
        let f = dephased_delta_theta_critical(l, p, c_y).unwrap();
        assert!((f - d).abs() < 0.1 * d, "L={l}: formula {f}, ED {d}");
    }
}

#[test]
fn dephased_critical_qfi_scales_linearly() {
    let ls = [6usize, 8, 10, 12];
    let f: Vec<f64> = ls
        .iter()
        .map(|&l| {
            let rho = apply_channel(&MixedState::from_pure(&critical(l)).unwrap(), &ChannelSpec::dephase(0.3)).unwrap();
            qfi_mixed_with_symmetry(&rho, &sum_z(l), &parity_x(l), CUT).unwrap().value
        })
        .collect();
    let xs: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let slope = fit_power_law(&xs, &f, None).unwrap().exponent;
    assert!((0.8..=1.2).contains(&slope), "slope {slope}");
}

#[test]
fn dephased_ghz_decays_exponentially() {
    let p = 0.3;
    let rate = 2.0 * (1.0f64 - 2.0 * p).ln().abs();
    let f: Vec<(usize, f64)> = (4..=10)
        .map(|l| {
            let rho = apply_channel(&MixedState::from_pure(&ghz_state(l).unwrap()).unwrap(), &ChannelSpec::dephase(p)).unwrap();
            (l, qfi_mixed(&rho, &sum_z(l), CUT).unwrap().value)
        })
        .collect();
    for w in f.windows(2) {
        assert!(w[1].1 < w[0].1);
        // δθ⁻² = L² e^{−2L|ln(1−2p)|}: per-site decay after removing the L² prefactor
        let (l0, l1) = (w[0].0 as f64, w[1].0 as f64);
        let measured = -((w[1].1 / (l1 * l1)) / (w[0].1 / (l0 * l0))).ln();
        assert!((measured - rate).abs() < 0.15 * rate, "L={}: rate {measured} vs {rate}", w[1].0);
        let closed = ghz_dephased_delta_theta(w[1].0, p).unwrap();
        assert_abs_diff_eq!(w[1].1, 4.0 / (closed * closed), epsilon = 1e-8 * w[1].1);
    }
}

#[test]
fn zz_channel_leaves_qfi_unchanged() {
    let ghz = MixedState::from_pure(&ghz_state(4).unwrap()).unwrap();
    let r = zz_channel_invariance_check(&ghz, &sum_z(4), 0.3).unwrap();
    assert_abs_diff_eq!(r.before, r.after, epsilon = 1e-8);
    let crit = MixedState::from_pure(&critical(8)).unwrap();
    let r = zz_channel_invariance_check(&crit, &sum_z(8), 0.4).unwrap();
    assert_abs_diff_eq!(r.before, r.after, epsilon = 1e-8);
    let r = zz_channel_invariance_check(&crit, &sum_z(8), 0.0).unwrap();
    assert_eq!(r.before, r.after);
    assert!(zz_channel_invariance_check(&crit, &PauliOperator::sum_of(8, Letter::X), 0.1).is_err());
}

#[test]
fn global_dephasing_closed_form_properties() {
    let (l, t, cx, cy) = (12, 1.5, 0.9, 0.2f64);
    let base = std::f64::consts::PI / (t * (l as f64).sqrt()) * cy.sqrt();
    assert_abs_diff_eq!(global_dephasing_sensitivity(l, t, 0.0, cx, cy).unwrap(), base, epsilon = 1e-15);
    let mut prev = 0.0;
    for k in 0..20 {
        let v = global_dephasing_sensitivity(l, t, 0.05 * k as f64, cx, cy).unwrap();
        assert!(v > prev);
        prev = v;
    }
}

#[test]
fn global_dephasing_ed_matches_mixture_and_formula() {
    let l = 6;
    let psi = critical(l);
    let (t, chi) = (1.0, 0.08);
    let rho = apply_channel(&MixedState::from_pure(&psi).unwrap(), &ChannelSpec::global_dephase(chi, t)).unwrap();
    let sx = PauliOperator::sum_of(l, Letter::X) * 0.5;
    let sy = PauliOperator::sum_of(l, Letter::Y) * 0.5;
    let dense = rho.variance(&sy).unwrap().sqrt() / (t * rho.expectation(&sx).unwrap().re.abs());
    assert_abs_diff_eq!(global_dephasing_sensitivity_ed(&psi, t, chi).unwrap(), dense, epsilon = 1e-10);

    let l = 12;
    let psi = critical(l);
    let sx = PauliOperator::sum_of(l, Letter::X) * 0.5;
    let sy = PauliOperator::sum_of(l, Letter::Y) * 0.5;
    let cx = psi.expectation(&(&sx * &sx)).unwrap().re / l as f64;
    let cy = psi.expectation(&(&sy * &sy)).unwrap().re / l as f64;
    for chi in [0.0, 0.01, 0.03, 0.05] {
        let ed = global_dephasing_sensitivity_ed(&psi, 1.0, chi).unwrap();
        let f = global_dephasing_sensitivity(l, 1.0, chi, cx, cy).unwrap();
        assert!((ed - f).abs() < 0.1 * ed, "χ={chi}: ED {ed}, formula {f}");
    }
}

#[test]
fn noise_kernel_chi() {
    let k = NoiseKernel::Exponential { strength: 0.7, correlation_time: 0.4 };
    assert_eq!(k.chi(0.0).unwrap(), 0.0);
    let mut prev = 0.0;
    for i in 1..30 {
        let t = 0.1 * i as f64;
        let v = k.chi(t).unwrap();
        assert_abs_diff_eq!(v, chi_exponential(0.7, 0.4, t), epsilon = 1e-11);
        assert!(v >= prev);
        prev = v;
    }
    // white-noise limit of a flat kernel: χ = s t²/2
    let flat = NoiseKernel::tabulated(vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]).unwrap();
    assert_abs_diff_eq!(flat.chi(1.5).unwrap(), 1.125, epsilon = 1e-12);
    assert!(flat.chi(3.0).is_err());
    assert!(NoiseKernel::tabulated(vec![0.5, 1.0], vec![1.0, 1.0]).is_err());
    let custom = NoiseKernel::Custom(std::sync::Arc::new(|tau: f64| (-tau * tau).exp()));
    assert!(custom.chi(1.0).unwrap() > 0.0);
}

#[test]
fn channel_spec_serializes() {
    let spec = ChannelSpec::zz(0.2, true);
    let back: ChannelSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
    assert_eq!(back.kind, ChannelKind::Zz);
    let parsed: ChannelSpec = serde_json::from_str(r#"{"kind":"dephase_z","p":0.1}"#).unwrap();
    assert_eq!(parsed.kind, ChannelKind::DephaseZ);
    assert_eq!(parsed.order, ChannelOrder::BeforeImprint);
}
