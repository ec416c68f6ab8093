use approx::assert_abs_diff_eq;
use critsense::fermion::fit_power_law;
use critsense::metrology::qfi_pure;
use critsense::models::{ghz_state, solve, spin_coherent_state, Boundary, ModelSpec};
use critsense::qcore::{LinearOp, Letter, PauliOperator, PureState};
use critsense::symmetry::*;
use critsense::C64;

fn staggered_z(l: usize) -> PauliOperator {
    PauliOperator::weighted_sum(l, Letter::Z, |j| if j % 2 == 0 { 1.0 } else { -1.0 })
}

fn afm_critical(l: usize) -> PureState {
    solve(&ModelSpec::tfim(l, -1.0, 1.0)).unwrap().state
}

fn fm_critical(l: usize) -> PureState {
    solve(&ModelSpec::tfim(l, 1.0, 1.0)).unwrap().state
}

fn translation(l: usize) -> SymmetryOperator {
    build_symmetry(SymmetryKind::Translation, l, None, Boundary::Periodic).unwrap()
}

#[test]
fn translation_moves_sites() {
    let t = translation(2);
    let v = PureState::basis(2, 0b01).unwrap();
    let out = t.apply(v.amplitudes());
    assert_abs_diff_eq!(out[0b10].re, 1.0, epsilon = 1e-15);
    let t4 = translation(4);
    let psi = PureState::normalize(4, critsense::qcore::seeded_vector(16, 3)).unwrap();
    let mut v = psi.amplitudes().to_vec();
    for _ in 0..4 {
        v = t4.apply(&v);
    }
    for (a, b) in v.iter().zip(psi.amplitudes()) {
        assert!((a - b).norm() < 1e-14);
    }
    assert!(build_symmetry(SymmetryKind::Translation, 4, None, Boundary::Open).is_err());
}

#[test]
fn reflection_fixes_palindromes_and_squares_to_one() {
    let r = build_symmetry(SymmetryKind::Reflection, 4, Some(1), Boundary::Open).unwrap();
    assert!(r.is_hermitian());
    let v = PureState::basis(4, 0b0110).unwrap();
    assert_abs_diff_eq!(r.apply(v.amplitudes())[0b0110].re, 1.0, epsilon = 1e-15);
    let w = PureState::basis(4, 0b0010).unwrap();
    assert_abs_diff_eq!(r.apply(w.amplitudes())[0b0100].re, 1.0, epsilon = 1e-15);
    let psi = critsense::qcore::seeded_vector(16, 9);
    let back = r.apply(&r.apply(&psi));
    assert!(psi.iter().zip(&back).all(|(a, b)| (a - b).norm() < 1e-14));
    assert!(build_symmetry(SymmetryKind::Reflection, 4, None, Boundary::Open).is_err());
    assert!(build_symmetry(SymmetryKind::Reflection, 5, Some(1), Boundary::Open).unwrap().flagged);
}

#[test]
fn matrices_are_unitary_permutations() {
    for s in [translation(5), build_symmetry(SymmetryKind::Reflection, 5, Some(2), Boundary::Periodic).unwrap()] {
        let m = s.to_matrix().unwrap();
        let prod = m.adjoint() * &m;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((prod[(i, j)] - C64::new(e, 0.0)).norm() < 1e-14);
            }
        }
    }
}

#[test]
fn anticommutation_recipe() {
    let l = 6;
    let px = build_symmetry(SymmetryKind::ParityX, l, None, Boundary::Periodic).unwrap();
    assert!(anticommutes(&px, &PauliOperator::sum_of(l, Letter::Z)).unwrap());
    assert!(!anticommutes(&px, &PauliOperator::sum_of(l, Letter::X)).unwrap());
    assert!(anticommutes(&translation(l), &staggered_z(l)).unwrap());
    assert!(!anticommutes(&translation(5), &staggered_z(5)).unwrap());
    let refl = build_symmetry(SymmetryKind::Reflection, l, Some(2), Boundary::Periodic).unwrap();
    assert!(anticommutes(&refl, &staggered_z(l)).unwrap());
}

#[test]
fn eigenvalues_of_probes() {
    let px = build_symmetry(SymmetryKind::ParityX, 8, None, Boundary::Periodic).unwrap();
    let (eig, s) = symmetry_eigenvalue(&fm_critical(8), &px).unwrap();
    assert!(eig);
    assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
    let (eig, s) = symmetry_eigenvalue(&ghz_state(8).unwrap(), &px).unwrap();
    assert!(eig);
    assert_abs_diff_eq!(s, 1.0, epsilon = 1e-12);
    let tilted = spin_coherent_state(8).unwrap().evolve_phase(&PauliOperator::sum_of(8, Letter::Z), 0.1).unwrap();
    assert!(!symmetry_eigenvalue(&tilted, &px).unwrap().0);
}

#[test]
fn rydberg_order_parameter_structure() {
    let o = rydberg_order_parameter(4, Boundary::Periodic).unwrap();
    assert!(o.terms().all(|(p, _)| p.weight() == 1 && p.is_diagonal()));
    assert!(o.is_hermitian());
    assert_eq!(o.coefficient(&critsense::qcore::PauliString::from_sites(4, &[])), C64::default());
    assert!(anticommutes(&translation(4), &o).unwrap());
    let sym = PureState::normalize(4, vec![C64::new(1.0, 0.0); 16]).unwrap();
    assert_abs_diff_eq!(sym.expectation(&o).unwrap().re, 0.0, epsilon = 1e-14);
    assert!(rydberg_order_parameter(2, Boundary::Open).is_err());
}

#[test]
fn hadamard_test_basics() {
    let psi = afm_critical(6);
    let t = translation(6);
    let r = hadamard_test(&psi, &t).unwrap();
    assert_abs_diff_eq!(r.p_plus + r.p_minus, 1.0, epsilon = 1e-12);
    assert_eq!(r.controlled_swaps, 5);
    assert_eq!(r.toffolis, 15);
    // T-eigenstate with eigenvalue −1
    let mut a = vec![C64::default(); 4];
    a[0b01] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    a[0b10] = C64::new(-std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let anti = PureState::new(2, a).unwrap();
    assert_abs_diff_eq!(hadamard_test(&anti, &translation(2)).unwrap().p_plus, 0.0, epsilon = 1e-14);
    let id = build_symmetry(SymmetryKind::ParityX, 2, None, Boundary::Periodic).unwrap();
    let plus = PureState::normalize(2, vec![C64::new(1.0, 0.0); 4]).unwrap();
    assert_abs_diff_eq!(hadamard_test(&plus, &id).unwrap().p_plus, 1.0, epsilon = 1e-14);
    // phased variant reads the imaginary part
    let v = psi.evolve_phase(&staggered_z(6), 0.2).unwrap();
    let exact = v.inner(&PureState::new(6, t.apply(v.amplitudes())).unwrap());
    assert_abs_diff_eq!(hadamard_test_phased(&v, &t, true).unwrap().value, exact.im, epsilon = 1e-12);
    assert_abs_diff_eq!(hadamard_test(&v, &t).unwrap().value, exact.re, epsilon = 1e-12);
}

#[test]
fn symmetry_curvature_and_variance_near_zero() {
    for l in [6usize, 8, 10, 12] {
        let psi = fm_critical(l);
        let o = PauliOperator::sum_of(l, Letter::Z);
        let a = PauliOperator::product_of(l, Letter::X, 0..l);
        let var = psi.variance(&o).unwrap();
        let h = 1e-3;
        let mean = |t: f64| psi.evolve_phase(&o, t).unwrap().expectation(&a).unwrap().re;
        // ⟨A⟩_θ = s(1 − 2θ²Var O) + O(θ⁴)
        let curv = (mean(h) - 2.0 * mean(0.0) + mean(-h)) / (h * h);
        assert!((curv + 4.0 * var).abs() < 0.02 * 4.0 * var, "L={l}: {curv} vs {}", -4.0 * var);
        let v = psi.evolve_phase(&o, h).unwrap().variance(&a).unwrap();
        assert!((v / (h * h) - 4.0 * var).abs() < 0.02 * 4.0 * var);
    }
}

#[test]
fn translation_cfi_grows_superlinearly() {
    let ls = [8usize, 10, 12];
    let mut cfi = Vec::new();
    for &l in &ls {
        let psi = afm_critical(l);
        let o = staggered_z(l);
        let f = hadamard_cfi(&psi, &translation(l), &o, 1e-3).unwrap();
        let q = qfi_pure(&psi, &o).unwrap();
        assert!((f - q).abs() < 1e-3 * q, "L={l}: CFI {f}, QFI {q}");
        cfi.push(f);
    }
    let xs: Vec<f64> = ls.iter().map(|&l| l as f64).collect();
    let slope = fit_power_law(&xs, &cfi, None).unwrap().exponent;
    assert!((1.5..=2.0).contains(&slope), "slope {slope}");
}

#[test]
fn theta_curves_collapse() {
    let l = 10;
    let thetas: Vec<f64> = (-20..=20).map(|k| 0.01 * k as f64).collect();
    let fm = fm_critical(l);
    let afm = afm_critical(l);
    let px = build_symmetry(SymmetryKind::ParityX, l, None, Boundary::Periodic).unwrap();
    let refl = build_symmetry(SymmetryKind::Reflection, l, Some(4), Boundary::Periodic).unwrap();
    let t = translation(l);
    let curve = |psi: &PureState, u: &SymmetryOperator, o: &PauliOperator| {
        let c = symmetry_theta_curve(psi, u, o, &thetas).unwrap();
        let s = c[20];
        c.iter().map(|x| x / s).collect::<Vec<_>>()
    };
    let cp = curve(&fm, &px, &PauliOperator::sum_of(l, Letter::Z));
    let cr = curve(&afm, &refl, &staggered_z(l));
    let ct = curve(&afm, &t, &staggered_z(l));
    for c in [&cp, &cr, &ct] {
        assert_abs_diff_eq!(c[20], 1.0, epsilon = 1e-12);
        for k in 0..20 {
            assert_abs_diff_eq!(c[k], c[40 - k], epsilon = 1e-10);
        }
    }
    for k in 0..thetas.len() {
        let scale = cp[k].abs().max(0.05);
        assert!((cp[k] - cr[k]).abs() < 0.05 * scale && (cp[k] - ct[k]).abs() < 0.05 * scale, "θ={}", thetas[k]);
    }
}
