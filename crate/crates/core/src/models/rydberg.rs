use super::{build_hamiltonian, ground_state, Boundary, ModelSpec};
use crate::qcore::{Letter, PauliOperator, PureState};
use crate::{Error, Result};

/// Scaled structure factor `⟨O²⟩ / L^{7/4}` of the staggered density order parameter.
///
/// At an Ising transition this is size independent, so curves for different
/// sizes cross at the critical detuning.
pub fn rydberg_scaled_order(omega: f64, v1: f64, v2: f64, l: usize, detuning: f64) -> Result<f64> {
    let psi = rydberg_ground(omega, v1, v2, l, detuning)?;
    let o = PauliOperator::weighted_sum(l, Letter::Z, |j| if j % 2 == 0 { 1.0 } else { -1.0 });
    let v = psi.variance(&o)? + psi.expectation(&o)?.re.powi(2);
    Ok(v / (l as f64).powf(1.75))
}

fn rydberg_ground(omega: f64, v1: f64, v2: f64, l: usize, detuning: f64) -> Result<PureState> {
    let spec = ModelSpec::rydberg(l, omega, detuning, v1, v2).with_boundary(Boundary::Periodic);
    let h = build_hamiltonian(&spec)?;
    Ok(ground_state(&h, None)?.state)
}

/// `2(1 − |⟨ψ(Δ−δ)|ψ(Δ+δ)⟩|)/δ²`, the ground-state fidelity susceptibility.
pub fn rydberg_fidelity_susceptibility(omega: f64, v1: f64, v2: f64, l: usize, detuning: f64, step: f64) -> Result<f64> {
    let a = rydberg_ground(omega, v1, v2, l, detuning - step)?;
    let b = rydberg_ground(omega, v1, v2, l, detuning + step)?;
    let f = a.inner(&b).norm();
    Ok(2.0 * (1.0 - f) / (step * step) / l as f64)
}

#[derive(Clone, Debug)]
pub struct RydbergCriticalReport {
    /// Crossing of the two largest sizes.
    pub detuning: f64,
    /// `(L₁, L₂, crossing)` for each consecutive pair.
    pub crossings: Vec<(usize, usize, f64)>,
    pub bracket_width: f64,
}

/// Critical detuning from crossings of the scaled order parameter for consecutive sizes.
pub fn locate_rydberg_critical_detuning(
    omega: f64,
    v1: f64,
    v2: f64,
    sizes: &[usize],
    window: (f64, f64),
) -> Result<RydbergCriticalReport> {
    if sizes.len() < 2 {
        return Err(Error::arg("sizes", "need at least two system sizes"));
    }
    if !(omega > 0.0) {
        return Err(Error::arg("omega", "Rabi frequency must be positive"));
    }
    let (lo, hi) = window;
    if !(lo < hi) {
        return Err(Error::arg("window", "lower edge must be below upper edge"));
    }
    let tol = 1e-2 * omega;
    let mut crossings = Vec::new();
    let mut width = 0.0;
    for pair in sizes.windows(2) {
        let (la, lb) = (pair[0], pair[1]);
        let diff = |d: f64| -> Result<f64> {
            Ok(rydberg_scaled_order(omega, v1, v2, lb, d)? - rydberg_scaled_order(omega, v1, v2, la, d)?)
        };
        let scan = 12;
        let mut prev = (lo, diff(lo)?);
        let mut bracket = None;
        for k in 1..=scan {
            let d = lo + (hi - lo) * k as f64 / scan as f64;
            let v = diff(d)?;
            if prev.1.signum() != v.signum() {
                bracket = Some((prev, (d, v)));
                break;
            }
            prev = (d, v);
        }
        let ((mut a, fa), (mut b, _)) = bracket.ok_or(Error::NoCrossing { lo, hi })?;
        while b - a > tol {
            let m = 0.5 * (a + b);
            let fm = diff(m)?;
            if fm.signum() == fa.signum() {
                a = m;
            } else {
                b = m;
            }
        }
        width = b - a;
        crossings.push((la, lb, 0.5 * (a + b)));
    }
    let detuning = crossings.last().unwrap().2;
    Ok(RydbergCriticalReport { detuning, crossings, bracket_width: width })
}
