use crate::qcore::{Letter, PauliOperator, PureState};
use crate::{Error, Result, C64};

/// `(|0…0⟩ + |1…1⟩)/√2`.
pub fn ghz_state(l: usize) -> Result<PureState> {
    let dim = 1usize << l;
    let mut amps = vec![C64::default(); dim];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    amps[0] = C64::new(s, 0.0);
    amps[dim - 1] += C64::new(s, 0.0);
    PureState::new(l, amps)
}

/// `|+⟩^{⊗L}`.
pub fn spin_coherent_state(l: usize) -> Result<PureState> {
    let one = C64::new(1.0, 0.0);
    PureState::product(&vec![(one, one); l])
}

/// `e^{−it(ΣZ/2)²}|+⟩^{⊗L}`.
pub fn oat_squeezed_state(l: usize, twist_time: f64) -> Result<PureState> {
    if !(twist_time >= 0.0 && twist_time.is_finite()) {
        return Err(Error::arg("twist_time", "must be finite and non-negative"));
    }
    let sc = spin_coherent_state(l)?;
    let amps = sc
        .amplitudes()
        .iter()
        .enumerate()
        .map(|(b, a)| {
            let m = l as f64 - 2.0 * (b.count_ones() as f64);
            a * C64::from_polar(1.0, -twist_time * (m / 2.0).powi(2))
        })
        .collect();
    PureState::new(l, amps)
}

fn collective(l: usize, letter: Letter) -> PauliOperator {
    PauliOperator::sum_of(l, letter) * 0.5
}

/// Rotation angle φ about x maximizing `Var(ΣZ)` of `e^{−iφS_x}ψ`.
///
/// The variance is `A + B cos 2φ + C sin 2φ`; three samples fix it exactly.
fn best_x_rotation(psi: &PureState) -> Result<(f64, f64)> {
    let l = psi.n_qubits();
    let sx = collective(l, Letter::X);
    let z = PauliOperator::sum_of(l, Letter::Z);
    let var_at = |phi: f64| -> Result<f64> { psi.evolve_phase(&sx, -phi)?.variance(&z) };
    let (v0, v1, v2) = (var_at(0.0)?, var_at(std::f64::consts::FRAC_PI_4)?, var_at(std::f64::consts::FRAC_PI_2)?);
    let a = 0.5 * (v0 + v2);
    let b = 0.5 * (v0 - v2);
    let c = v1 - a;
    let phi = 0.5 * c.atan2(b);
    Ok((phi, a + (b * b + c * c).sqrt()))
}

/// OAT state rotated about x so its anti-squeezed quadrature lies along z.
pub fn oat_aligned_state(l: usize, twist_time: f64) -> Result<PureState> {
    let psi = oat_squeezed_state(l, twist_time)?;
    let (phi, _) = best_x_rotation(&psi)?;
    psi.evolve_phase(&collective(l, Letter::X), -phi)
}

/// Wineland parameter `ξ² = L·min Var(S_⊥)/⟨S_x⟩²` over directions in the y–z plane.
pub fn squeezing_parameter(psi: &PureState) -> Result<f64> {
    let l = psi.n_qubits();
    let sy = collective(l, Letter::Y);
    let sz = collective(l, Letter::Z);
    let sx = collective(l, Letter::X);
    let vyy = psi.variance(&sy)?;
    let vzz = psi.variance(&sz)?;
    let my = psi.expectation(&sy)?.re;
    let mz = psi.expectation(&sz)?.re;
    let cyz = 0.5 * psi.expectation(&(&(&sy * &sz) + &(&sz * &sy)))?.re - my * mz;
    let tr = vyy + vzz;
    let det = vyy * vzz - cyz * cyz;
    let vmin = 0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt());
    let mx = psi.expectation(&sx)?.re;
    Ok(l as f64 * vmin / (mx * mx))
}

#[derive(Clone, Debug)]
pub struct OatOptimum {
    pub twist_time: f64,
    pub squeezing: f64,
    /// `qfi_pure` with generator `ΣZ` of the aligned state at this twist time.
    pub qfi: f64,
}

/// Twist time minimizing the squeezing parameter, with the in-plane QFI there.
pub fn optimal_oat_twist(l: usize) -> Result<OatOptimum> {
    if l < 2 {
        return Err(Error::arg("l", "squeezing needs at least two qubits"));
    }
    let f = |t: f64| -> Result<f64> { squeezing_parameter(&oat_squeezed_state(l, t)?) };
    let grid = 400;
    let t_hi = 1.0;
    let mut best = (f64::INFINITY, 0.0);
    for k in 1..=grid {
        let t = t_hi * k as f64 / grid as f64;
        let v = f(t)?;
        if v < best.0 {
            best = (v, t);
        }
    }
    // golden-section refinement inside the neighbouring grid cells
    let step = t_hi / grid as f64;
    let (mut a, mut b) = ((best.1 - step).max(1e-9), best.1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let psi = oat_squeezed_state(l, t)?;
    let (_, vmax) = best_x_rotation(&psi)?;
    Ok(OatOptimum { twist_time: t, squeezing: f(t)?, qfi: 4.0 * vmax })
}
