use approx::assert_abs_diff_eq;
use critsense::fermion::{
    dispersion, fit_power_law, qfi_scaling_tfim, solve_tfim_fermion, tfim_qfi, ChainSize, FermionSolution,
};
use critsense::metrology::qfi_pure;
use critsense::models::{build_hamiltonian, ground_state, solve, Boundary, ModelSpec, Sector};
use critsense::qcore::{Letter, PauliOperator};
use rand::{Rng, SeedableRng};

fn ed_zz(l: usize, j: f64, h: f64, b: Boundary) -> (f64, Vec<Vec<f64>>) {
    let sol = solve(&ModelSpec::tfim(l, j, h).with_boundary(b)).unwrap();
    let mut m = vec![vec![1.0; l]; l];
    for p in 0..l {
        for q in p + 1..l {
            let zz = PauliOperator::term(l, 1.0, &[(p, Letter::Z), (q, Letter::Z)]);
            m[p][q] = sol.state.expectation(&zz).unwrap().re;
            m[q][p] = m[p][q];
        }
    }
    (sol.energy, m)
}

fn finite(l: usize, j: f64, h: f64, b: Boundary) -> FermionSolution {
    solve_tfim_fermion(ChainSize::Finite(l), j, h, b).unwrap()
}

#[test]
fn matches_exact_diagonalization() {
    for &(j, h) in &[(1.0, 1.0), (1.0, 0.4), (0.5, 1.3), (-0.7, 1.0), (1.0, -0.6)] {
        for &b in &[Boundary::Periodic, Boundary::Open] {
            for l in [4usize, 7, 10] {
                let (e, zz) = ed_zz(l, j, h, b);
                let f = finite(l, j, h, b);
                assert_abs_diff_eq!(f.energy, e, epsilon = 1e-8);
                for p in 0..l {
                    for q in p + 1..l {
                        let v = f.zz_pair(p, q).unwrap();
                        assert!((v - zz[p][q]).abs() < 1e-8, "J={j} h={h} {b:?} L={l} ({p},{q}): {v} vs {}", zz[p][q]);
                    }
                }
            }
        }
    }
}

#[test]
fn twelve_site_chain_all_separations() {
    let (e, zz) = ed_zz(12, 1.0, 1.0, Boundary::Periodic);
    let f = finite(12, 1.0, 1.0, Boundary::Periodic);
    assert_abs_diff_eq!(f.energy, e, epsilon = 1e-8);
    for r in 1..12 {
        assert_abs_diff_eq!(f.zz_correlator(r).unwrap(), zz[0][r], epsilon = 1e-8);
        // reflection symmetry of the ring
        assert_abs_diff_eq!(f.zz_correlator(r).unwrap(), f.zz_correlator(12 - r).unwrap(), epsilon = 1e-10);
    }
}

#[test]
fn majorana_matrix_is_antisymmetric() {
    for b in [Boundary::Periodic, Boundary::Open] {
        let g = finite(9, 1.0, 0.8, b).majorana_matrix().unwrap();
        for i in 0..18 {
            for k in 0..18 {
                assert!((g[(i, k)] + g[(k, i)]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn paramagnetic_limit_is_a_product_state() {
    let f = finite(8, 1.0, 1e4, Boundary::Periodic);
    // ⟨X_j⟩ = ⟨i a_j b_j⟩ → 1, everything else → 0
    for p in 0..8 {
        for q in 0..8 {
            let want = if p == q { 1.0 } else { 0.0 };
            assert!((f.contraction(p, q) - want).abs() < 1e-3);
        }
    }
}

#[test]
fn ferromagnetic_limit_orders() {
    let f = finite(16, 1.0, 1e-3, Boundary::Periodic);
    for r in 1..16 {
        assert!(f.zz_correlator(r).unwrap() > 1.0 - 1e-5);
    }
    let t = solve_tfim_fermion(ChainSize::Thermodynamic { max_separation: 20 }, 1.0, 1e-3, Boundary::Periodic).unwrap();
    assert!(t.zz_correlator(20).unwrap() > 1.0 - 1e-5);
}

#[test]
fn critical_dispersion_matches_ed_gaps() {
    for l in [8usize, 10, 12] {
        let h = build_hamiltonian(&ModelSpec::tfim(l, 1.0, 1.0)).unwrap();
        let gap = ground_state(&h, Some(&Sector::parity_x(l, 1.0))).unwrap().gap;
        // lowest parity-preserving excitation occupies k = ±π/L
        let k = std::f64::consts::PI / l as f64;
        assert_abs_diff_eq!(gap, 2.0 * dispersion(1.0, 1.0, k), epsilon = 1e-7);
        assert_abs_diff_eq!(dispersion(1.0, 1.0, k), 4.0 * (k / 2.0).sin(), epsilon = 1e-14);
        let f = finite(l, 1.0, 1.0, Boundary::Periodic);
        assert_abs_diff_eq!(f.spectrum[0] + f.spectrum[1], gap, epsilon = 1e-7);
    }
}

#[test]
fn energy_is_extensive() {
    let mut prev = f64::INFINITY;
    for l in [8usize, 16, 32, 64] {
        let d = (finite(2 * l, 1.0, 1.0, Boundary::Periodic).energy / 2.0 - finite(l, 1.0, 1.0, Boundary::Periodic).energy).abs();
        assert!(d < prev);
        prev = d;
    }
    // conformal finite-size correction falls off as 1/L
    assert!(prev < 1e-2);
    let t = solve_tfim_fermion(ChainSize::Thermodynamic { max_separation: 1 }, 1.0, 1.0, Boundary::Periodic).unwrap();
    assert_abs_diff_eq!(t.energy, -4.0 / std::f64::consts::PI, epsilon = 1e-12);
    assert_abs_diff_eq!(finite(400, 1.0, 1.0, Boundary::Periodic).energy / 400.0, t.energy, epsilon = 1e-5);
}

#[test]
fn nearest_neighbour_critical_correlator_from_extrapolation() {
    let t = solve_tfim_fermion(ChainSize::Thermodynamic { max_separation: 4 }, 1.0, 1.0, Boundary::Periodic).unwrap();
    assert_abs_diff_eq!(t.zz_correlator(1).unwrap(), 2.0 / std::f64::consts::PI, epsilon = 1e-10);
    // finite-size values approach the thermodynamic one as 1/L²
    let ls = [8usize, 10, 12, 14];
    let v: Vec<f64> = ls.iter().map(|&l| ed_zz(l, 1.0, 1.0, Boundary::Periodic).1[0][1]).collect();
    // Richardson on the two largest sizes in 1/L²
    let (a, b) = ((12.0f64).powi(2), (14.0f64).powi(2));
    let extrap = (b * v[3] - a * v[2]) / (b - a);
    assert!((extrap - t.zz_correlator(1).unwrap()).abs() < 1e-4, "extrapolated {extrap}");
}

#[test]
fn critical_decay_exponent() {
    let t = solve_tfim_fermion(ChainSize::Thermodynamic { max_separation: 128 }, 1.0, 1.0, Boundary::Periodic).unwrap();
    let rs: Vec<f64> = (8..=128).map(|r| r as f64).collect();
    let c: Vec<f64> = (8..=128).map(|r| t.zz_correlator(r).unwrap()).collect();
    let fit = fit_power_law(&rs, &c, Some((8.0, 128.0))).unwrap();
    assert!((-fit.exponent - 0.25).abs() < 0.02, "exponent {}", fit.exponent);
}

#[test]
fn qfi_matches_ed_and_scales() {
    for l in [6usize, 8, 10] {
        let psi = solve(&ModelSpec::tfim(l, 1.0, 1.0)).unwrap().state;
        let ed = qfi_pure(&psi, &PauliOperator::sum_of(l, Letter::Z)).unwrap();
        assert!((tfim_qfi(l, 1.0, 1.0).unwrap() - ed).abs() < 1e-8 * ed);
    }
    let s = qfi_scaling_tfim(&[64, 128, 256, 512], 1.0, 1.0).unwrap();
    assert!((s.fit.exponent - 1.75).abs() < 0.05, "exponent {}", s.fit.exponent);
    assert!(s.qfi.windows(2).all(|w| w[1] >= w[0]));
    let para = qfi_scaling_tfim(&[64, 128, 256, 512], 1.0, 3.0).unwrap();
    assert!((para.fit.exponent - 1.0).abs() < 0.05, "exponent {}", para.fit.exponent);
}

#[test]
fn fitter_self_tests() {
    let xs: Vec<f64> = (1..20).map(|x| x as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|x| x.powf(1.75)).collect();
    let f = fit_power_law(&xs, &ys, None).unwrap();
    assert_abs_diff_eq!(f.exponent, 1.75, epsilon = 1e-12);
    assert_abs_diff_eq!(f.r_squared, 1.0, epsilon = 1e-12);
    assert!(fit_power_law(&xs[..2], &ys[..2], None).is_err());
    assert!(fit_power_law(&[1.0, 2.0, 3.0], &[1.0, -1.0, 2.0], None).is_err());
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    let xs: Vec<f64> = (0..60).map(|k| 2.0 * 1.08f64.powi(k)).collect();
    let noisy: Vec<f64> = xs.iter().map(|x| 3.0 * x.powf(-0.6) * (1.0 + 0.01 * (2.0 * rng.gen::<f64>() - 1.0))).collect();
    let f = fit_power_law(&xs, &noisy, None).unwrap();
    assert!((f.exponent + 0.6).abs() < 0.02);
}

#[test]
fn scaling_rejects_narrow_size_range() {
    assert!(qfi_scaling_tfim(&[64, 80, 96], 1.0, 1.0).is_err());
}
