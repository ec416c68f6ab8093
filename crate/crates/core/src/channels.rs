//! Decoherence channels, their conjugate actions on collective spins, and
//! closed-form noisy precision bounds.

use std::sync::Arc;

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::metrology::qfi_mixed;
use crate::numeric::{integrate, TOL};
use crate::qcore::{eigh, Letter, MixedState, PauliOperator, PauliString, PureState};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    BitflipX,
    DephaseZ,
    Zz,
    GlobalDephase,
}

/// Whether the channel acts on the probe before or after the phase is imprinted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelOrder {
    #[default]
    BeforeImprint,
    AfterImprint,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    pub kind: ChannelKind,
    /// Per-site flip probability for the local kinds.
    #[serde(default)]
    pub p: f64,
    /// Accumulated phase variance `χ(t)` for the global kind.
    #[serde(default)]
    pub chi: f64,
    /// Interrogation time for the global kind.
    #[serde(default)]
    pub t: f64,
    /// Sites (or, for `zz`, left ends of bonds) the channel acts on; all when absent.
    #[serde(default)]
    pub site_mask: Option<Vec<usize>>,
    /// Include the wrap-around bond for `zz`.
    #[serde(default)]
    pub periodic: bool,
    #[serde(default)]
    pub order: ChannelOrder,
}

/// Gauss–Hermite nodes used to average over the random global phase.
pub const GAUSS_HERMITE_NODES: usize = 48;

impl ChannelSpec {
    pub fn local(kind: ChannelKind, p: f64) -> Self {
        ChannelSpec { kind, p, chi: 0.0, t: 0.0, site_mask: None, periodic: false, order: ChannelOrder::BeforeImprint }
    }

    pub fn bitflip(p: f64) -> Self {
        Self::local(ChannelKind::BitflipX, p)
    }

    pub fn dephase(p: f64) -> Self {
        Self::local(ChannelKind::DephaseZ, p)
    }

    pub fn zz(p: f64, periodic: bool) -> Self {
        ChannelSpec { periodic, ..Self::local(ChannelKind::Zz, p) }
    }

    pub fn global_dephase(chi: f64, t: f64) -> Self {
        ChannelSpec { chi, t, ..Self::local(ChannelKind::GlobalDephase, 0.0) }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.kind {
            ChannelKind::GlobalDephase => {
                if !(self.chi >= 0.0 && self.chi.is_finite()) {
                    return Err(Error::arg("chi", "must be finite and non-negative"));
                }
                if !(self.t >= 0.0 && self.t.is_finite()) {
                    return Err(Error::arg("t", "must be finite and non-negative"));
                }
            }
            _ => {
                if !(0.0..=1.0).contains(&self.p) {
                    return Err(Error::arg("p", "probability must lie in [0, 1]"));
                }
            }
        }
        if let Some(mask) = &self.site_mask {
            if let Some(&bad) = mask.iter().find(|&&s| s >= n) {
                return Err(Error::arg("site_mask", format!("site {bad} outside a {n}-site register")));
            }
        }
        Ok(())
    }

    /// Pauli strings `P_j` whose local channels `(1−p)ρ + pP_jρP_j` compose the map.
    pub fn pauli_factors(&self, n: usize) -> Result<Vec<PauliString>> {
        let sites: Vec<usize> = match &self.site_mask {
            Some(m) => m.clone(),
            None => (0..n).collect(),
        };
        Ok(match self.kind {
            ChannelKind::BitflipX => sites.iter().map(|&j| PauliString::from_sites(n, &[(j, Letter::X)])).collect(),
            ChannelKind::DephaseZ => sites.iter().map(|&j| PauliString::from_sites(n, &[(j, Letter::Z)])).collect(),
            ChannelKind::Zz => sites
                .iter()
                .filter(|&&j| j + 1 < n || (self.periodic && n > 2))
                .map(|&j| PauliString::from_sites(n, &[(j, Letter::Z), ((j + 1) % n, Letter::Z)]))
                .collect(),
            ChannelKind::GlobalDephase => return Err(Error::arg("kind", "global dephasing is not a product of Pauli channels")),
        })
    }
}

/// `ρ ↦ PρP` for a Pauli string, in place of a fresh matrix.
fn conjugate_by_pauli(m: &Mat<C64>, p: &PauliString) -> Mat<C64> {
    let d = m.nrows();
    let act: Vec<(C64, usize)> = (0..d as u64)
        .map(|b| {
            let (ph, r) = p.act(b);
            (ph, r as usize)
        })
        .collect();
    // (PρP†)[r_a, r_b] = ph_a ρ[a, b] ph_b*
    let mut out = Mat::<C64>::zeros(d, d);
    for b in 0..d {
        let (pb, rb) = act[b];
        let pbc = pb.conj();
        for a in 0..d {
            let (pa, ra) = act[a];
            out[(ra, rb)] = pa * m[(a, b)] * pbc;
        }
    }
    out
}

/// Apply the channel to an arbitrary operator (Pauli channels are self-dual).
pub fn apply_channel_to_matrix(m: &Mat<C64>, n: usize, spec: &ChannelSpec) -> Result<Mat<C64>> {
    spec.validate(n)?;
    let d = 1usize << n;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: m.nrows() });
    }
    if spec.kind == ChannelKind::GlobalDephase {
        let nodes = gauss_hermite(GAUSS_HERMITE_NODES)?;
        let sigma = (0.5 * spec.chi).sqrt();
        // factor depends only on the magnetization difference m_a − m_b ∈ [−2n, 2n]
        let factors: Vec<C64> = (0..=4 * n)
            .map(|k| {
                let dm = k as f64 - 2.0 * n as f64;
                nodes.iter().map(|&(x, w)| C64::from_polar(w, -std::f64::consts::SQRT_2 * sigma * x * dm)).sum()
            })
            .collect();
        let mag = |b: usize| n as i64 - 2 * b.count_ones() as i64;
        return Ok(Mat::from_fn(d, d, |a, b| m[(a, b)] * factors[(mag(a) - mag(b) + 2 * n as i64) as usize]));
    }
    let p = spec.p;
    let mut cur = m.clone();
    if p == 0.0 {
        return Ok(cur);
    }
    for ps in spec.pauli_factors(n)? {
        let flipped = conjugate_by_pauli(&cur, &ps);
        cur = Mat::from_fn(d, d, |i, j| cur[(i, j)] * (1.0 - p) + flipped[(i, j)] * p);
    }
    Ok(cur)
}

pub fn apply_channel(rho: &MixedState, spec: &ChannelSpec) -> Result<MixedState> {
    let out = apply_channel_to_matrix(rho.matrix(), rho.n_qubits(), spec)?;
    MixedState::from_matrix_unchecked_psd(rho.n_qubits(), out)
}

/// Noisy imprinting `θ ↦ E(U_θ ρ U_θ†)` or `U_θ E(ρ) U_θ†` depending on `spec.order`.
pub fn noisy_imprint(rho: &MixedState, o: &PauliOperator, theta: f64, spec: &ChannelSpec) -> Result<MixedState> {
    match spec.order {
        ChannelOrder::BeforeImprint => apply_channel(rho, spec)?.evolve_phase(o, theta),
        ChannelOrder::AfterImprint => apply_channel(&rho.evolve_phase(o, theta)?, spec),
    }
}

/// Kraus operators of one local factor (one site, or one bond for `zz`).
pub fn local_kraus(spec: &ChannelSpec) -> Result<Vec<Mat<C64>>> {
    spec.validate(usize::MAX)?;
    let one = C64::new(1.0, 0.0);
    let (n, letters): (usize, &[(usize, Letter)]) = match spec.kind {
        ChannelKind::BitflipX => (1, &[(0, Letter::X)]),
        ChannelKind::DephaseZ => (1, &[(0, Letter::Z)]),
        ChannelKind::Zz => (2, &[(0, Letter::Z), (1, Letter::Z)]),
        ChannelKind::GlobalDephase => {
            let sigma = (0.5 * spec.chi).sqrt();
            return Ok(gauss_hermite(GAUSS_HERMITE_NODES)?
                .into_iter()
                .map(|(x, w)| {
                    let phi = std::f64::consts::SQRT_2 * sigma * x;
                    Mat::from_fn(2, 2, |i, j| match (i, j) {
                        (0, 0) => C64::from_polar(w.sqrt(), -phi),
                        (1, 1) => C64::from_polar(w.sqrt(), phi),
                        _ => C64::default(),
                    })
                })
                .collect());
        }
    };
    let p = PauliOperator::term(n, 1.0, letters).to_matrix()?;
    let d = 1 << n;
    let id = Mat::from_fn(d, d, |i, j| if i == j { one } else { C64::default() });
    Ok(vec![
        Mat::from_fn(d, d, |i, j| id[(i, j)] * (1.0 - spec.p).sqrt()),
        Mat::from_fn(d, d, |i, j| p[(i, j)] * spec.p.sqrt()),
    ])
}

/// `‖Σ K†K − I‖_max` for the local Kraus family.
pub fn kraus_completeness_deviation(spec: &ChannelSpec) -> Result<f64> {
    let ks = local_kraus(spec)?;
    let d = ks[0].nrows();
    let mut acc = Mat::<C64>::zeros(d, d);
    for k in &ks {
        acc += k.adjoint() * k;
    }
    let mut dev = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let t = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((acc[(i, j)] - C64::new(t, 0.0)).norm());
        }
    }
    Ok(dev)
}

/// Smallest eigenvalue of the Choi matrix `Σ_k vec(K_k) vec(K_k)†` of the local factor.
pub fn choi_min_eigenvalue(spec: &ChannelSpec) -> Result<f64> {
    let ks = local_kraus(spec)?;
    let d = ks[0].nrows();
    let mut choi = Mat::<C64>::zeros(d * d, d * d);
    for k in &ks {
        for a in 0..d * d {
            for b in 0..d * d {
                choi[(a, b)] += k[(a / d, a % d)] * k[(b / d, b % d)].conj();
            }
        }
    }
    let (vals, _) = eigh(&choi)?;
    Ok(vals.into_iter().fold(f64::INFINITY, f64::min))
}

/// Gauss–Hermite rule for `E[f(X)]`, `X ~ N(0, 1/2)`: nodes `x_k` and weights summing to one.
///
/// Golub–Welsch: eigen-decomposition of the Jacobi matrix with off-diagonals `√(k/2)`.
pub fn gauss_hermite(n: usize) -> Result<Vec<(f64, f64)>> {
    if n == 0 {
        return Err(Error::arg("n", "need at least one node"));
    }
    let jac = Mat::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            C64::new((i.max(j) as f64 / 2.0).sqrt(), 0.0)
        } else {
            C64::default()
        }
    });
    let (vals, vecs) = eigh(&jac)?;
    Ok(vals.into_iter().enumerate().map(|(k, x)| (x, vecs[(0, k)].norm_sqr())).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollectiveObservable {
    /// `S_θ = ½(cos θ ΣY + sin θ ΣX)`.
    Spin,
    /// `S_θ²`.
    SpinSquared,
}

/// `S_θ` on `l` sites.
pub fn collective_spin(l: usize, theta: f64) -> PauliOperator {
    let y = PauliOperator::sum_of(l, Letter::Y) * (0.5 * theta.cos());
    let x = PauliOperator::sum_of(l, Letter::X) * (0.5 * theta.sin());
    let mut s = &y + &x;
    s.prune(1e-15);
    s
}

/// `(a, b)` with `E*[obs] = a·obs + b·I` under local dephasing.
pub fn conjugate_collective_action(spec: &ChannelSpec, obs: CollectiveObservable, l: usize) -> Result<(f64, f64)> {
    if spec.kind != ChannelKind::DephaseZ || spec.site_mask.is_some() {
        return Err(Error::arg("kind", "closed form holds for uniform dephase_z only"));
    }
    spec.validate(l)?;
    let q = 1.0 - 2.0 * spec.p;
    Ok(match obs {
        CollectiveObservable::Spin => (q, 0.0),
        CollectiveObservable::SpinSquared => (q * q, spec.p * (1.0 - spec.p) * l as f64),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConjugateFit {
    pub a: f64,
    pub b: f64,
    /// `‖E*[obs] − a·obs − b·I‖_max`.
    pub residual: f64,
}

/// Apply the channel to the dense observable and project onto `span{obs, I}`.
pub fn conjugate_action_bruteforce(spec: &ChannelSpec, obs: CollectiveObservable, l: usize, theta: f64) -> Result<ConjugateFit> {
    let s = collective_spin(l, theta);
    let o = match obs {
        CollectiveObservable::Spin => s,
        CollectiveObservable::SpinSquared => &s * &s,
    };
    let m = o.to_matrix()?;
    let e = apply_channel_to_matrix(&m, l, spec)?;
    let d = m.nrows();
    // Hilbert–Schmidt normal equations
    let (mut oo, mut oi, mut eo, mut ei) = (0.0, 0.0, 0.0, 0.0);
    for j in 0..d {
        for i in 0..d {
            oo += m[(i, j)].norm_sqr();
            eo += (m[(i, j)].conj() * e[(i, j)]).re;
        }
        oi += m[(j, j)].re;
        ei += e[(j, j)].re;
    }
    let dd = d as f64;
    let det = oo * dd - oi * oi;
    if det.abs() < 1e-12 {
        return Err(Error::domain("conjugate_action_bruteforce", "observable is proportional to the identity"));
    }
    let a = (eo * dd - oi * ei) / det;
    let b = (oo * ei - oi * eo) / det;
    let mut residual = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            let id = if i == j { b } else { 0.0 };
            residual = residual.max((e[(i, j)] - m[(i, j)] * a - C64::new(id, 0.0)).norm());
        }
    }
    Ok(ConjugateFit { a, b, residual })
}

/// `4(1−2p)²⟨O²⟩ + 16p(1−p)L` for `O = ΣZ` under bit flips of a parity eigenstate with `⟨O⟩ = 0`.
pub fn bitflip_qfi_formula(l: usize, p: f64, o2_pristine: f64) -> f64 {
    let q = 1.0 - 2.0 * p;
    4.0 * q * q * o2_pristine + 16.0 * p * (1.0 - p) * l as f64
}

fn check_dephasing_p(p: f64) -> Result<()> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::domain("dephasing", "formula requires 0 ≤ p < 1/2"));
    }
    Ok(())
}

/// `(π/√L)·√(C_y + p(1−p)/(1−2p)²)`.
pub fn dephased_delta_theta_critical(l: usize, p: f64, c_y: f64) -> Result<f64> {
    check_dephasing_p(p)?;
    if !(c_y > 0.0) {
        return Err(Error::arg("c_y", "must be positive"));
    }
    let q = 1.0 - 2.0 * p;
    Ok(std::f64::consts::PI / (l as f64).sqrt() * (c_y + p * (1.0 - p) / (q * q)).sqrt())
}

/// `δθ` of the `S_y` readout at `θ = 0` for a pure probe under local dephasing,
/// imprinter generator `S_z = ½ΣZ`. Uses the exact conjugate-channel moments, so no
/// density matrix is formed.
pub fn dephased_delta_theta_ed(psi: &PureState, p: f64) -> Result<f64> {
    check_dephasing_p(p)?;
    let l = psi.n_qubits();
    let sx = PauliOperator::sum_of(l, Letter::X) * 0.5;
    let sy = PauliOperator::sum_of(l, Letter::Y) * 0.5;
    let q = 1.0 - 2.0 * p;
    let var = q * q * psi.variance(&sy)? + p * (1.0 - p) * l as f64;
    let slope = q * psi.expectation(&sx)?.re.abs();
    if slope < TOL.derivative_floor {
        return Err(Error::domain("dephased_delta_theta_ed", "mean transverse spin vanishes"));
    }
    Ok(var.sqrt() / slope)
}

/// `e^{L|ln(1−2p)|}/L`.
pub fn ghz_dephased_delta_theta(l: usize, p: f64) -> Result<f64> {
    check_dephasing_p(p)?;
    Ok((l as f64 * (1.0 - 2.0 * p).ln().abs()).exp() / l as f64)
}

/// `(π/(t√L))·√(e^{−2χ}C_y + ½(e^{2χ}−e^{−2χ})(C_x+C_y))`.
pub fn global_dephasing_sensitivity(l: usize, t: f64, chi: f64, c_x: f64, c_y: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::arg("t", "must be positive"));
    }
    if !(chi >= 0.0) {
        return Err(Error::arg("chi", "must be non-negative"));
    }
    let inner = (-2.0 * chi).exp() * c_y + 0.5 * ((2.0 * chi).exp() - (-2.0 * chi).exp()) * (c_x + c_y);
    Ok(std::f64::consts::PI / (t * (l as f64).sqrt()) * inner.sqrt())
}

/// Sensitivity `√Var(S_y)/(t|⟨S_x⟩|)` of the globally dephased probe, averaging the
/// pure-state moments over Gauss–Hermite nodes of the random phase.
pub fn global_dephasing_sensitivity_ed(psi: &PureState, t: f64, chi: f64) -> Result<f64> {
    if !(t > 0.0) || !(chi >= 0.0) {
        return Err(Error::arg("t", "need t > 0 and χ ≥ 0"));
    }
    let l = psi.n_qubits();
    let sx = PauliOperator::sum_of(l, Letter::X) * 0.5;
    let sy = PauliOperator::sum_of(l, Letter::Y) * 0.5;
    let sz = PauliOperator::sum_of(l, Letter::Z);
    let sy2 = &sy * &sy;
    let sigma = (0.5 * chi).sqrt();
    let (mut mx, mut my, mut my2) = (0.0, 0.0, 0.0);
    for (x, w) in gauss_hermite(GAUSS_HERMITE_NODES)? {
        let phi = std::f64::consts::SQRT_2 * sigma * x;
        let s = psi.evolve_phase(&sz, -phi)?;
        mx += w * s.expectation(&sx)?.re;
        my += w * s.expectation(&sy)?.re;
        my2 += w * s.expectation(&sy2)?.re;
    }
    if mx.abs() < TOL.derivative_floor {
        return Err(Error::domain("global_dephasing_sensitivity_ed", "mean spin vanishes"));
    }
    Ok((my2 - my * my).max(0.0).sqrt() / (t * mx.abs()))
}

/// Correlation function `C(τ)` of the classical field noise.
#[derive(Clone)]
pub enum NoiseKernel {
    /// `C(τ) = s·e^{−τ/τ_c}`.
    Exponential { strength: f64, correlation_time: f64 },
    /// Piecewise-linear interpolation of samples; times strictly increasing from 0.
    Tabulated { times: Vec<f64>, values: Vec<f64> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for NoiseKernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            NoiseKernel::Exponential { strength, correlation_time } => {
                write!(f, "Exponential({strength}, {correlation_time})")
            }
            NoiseKernel::Tabulated { times, .. } => write!(f, "Tabulated({} points)", times.len()),
            NoiseKernel::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl NoiseKernel {
    pub fn tabulated(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::arg("times", "need at least two samples with matching values"));
        }
        if times[0] != 0.0 || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("times", "must start at 0 and increase strictly"));
        }
        Ok(NoiseKernel::Tabulated { times, values })
    }

    pub fn correlation(&self, tau: f64) -> f64 {
        match self {
            NoiseKernel::Exponential { strength, correlation_time } => strength * (-tau / correlation_time).exp(),
            NoiseKernel::Tabulated { times, values } => {
                let k = times.partition_point(|&x| x <= tau).clamp(1, times.len() - 1);
                let (t0, t1) = (times[k - 1], times[k]);
                let w = ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0);
                values[k - 1] * (1.0 - w) + values[k] * w
            }
            NoiseKernel::Custom(f) => f(tau),
        }
    }

    /// `χ(t) = ∫₀ᵗ (t−τ) C(τ) dτ` by adaptive quadrature.
    pub fn chi(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::arg("t", "must be finite and non-negative"));
        }
        if let NoiseKernel::Tabulated { times, .. } = self {
            if t > *times.last().unwrap() {
                return Err(Error::arg("t", "beyond the tabulated range"));
            }
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let f = |tau: f64| (t - tau) * self.correlation(tau);
        // split at the knots so each panel integrates a smooth piece
        let mut edges = vec![0.0];
        if let NoiseKernel::Tabulated { times, .. } = self {
            edges.extend(times.iter().copied().filter(|&x| x > 0.0 && x < t));
        }
        edges.push(t);
        let scale = t * t * self.correlation(0.0).abs().max(1e-300);
        Ok(edges.windows(2).map(|w| integrate(&f, w[0], w[1], 1e-13 * scale)).sum())
    }
}

/// Closed form of `χ(t)` for the exponential kernel.
pub fn chi_exponential(strength: f64, correlation_time: f64, t: f64) -> f64 {
    let tc = correlation_time;
    strength * (tc * t - tc * tc * (1.0 - (-t / tc).exp()))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ZzInvarianceReport {
    pub before: f64,
    pub after: f64,
}

/// QFI with `O = ΣZ` before and after the nearest-neighbour ZZ channel.
pub fn zz_channel_invariance_check(rho: &MixedState, o: &PauliOperator, p: f64) -> Result<ZzInvarianceReport> {
    let l = rho.n_qubits();
    if *o != PauliOperator::sum_of(l, Letter::Z) {
        return Err(Error::arg("o", "invariance is checked for O = ΣZ"));
    }
    let spec = ChannelSpec::zz(p, true);
    let before = qfi_mixed(rho, o, TOL.spectral_cutoff)?.value;
    let after = qfi_mixed(&apply_channel(rho, &spec)?, o, TOL.spectral_cutoff)?.value;
    if (before - after).abs() > 1e-8 * before.abs().max(1.0) {
        return Err(Error::InvarianceViolated { before, after });
    }
    Ok(ZzInvarianceReport { before, after })
}
