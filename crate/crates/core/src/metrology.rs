//! Fisher-information kernels and precision estimators.

use faer::Mat;
use serde::Serialize;

use crate::numeric::TOL;
use crate::qcore::{centered_norm_sqr, inner, seeded_vector, LinearOp, MixedState, PauliOperator, PauliString, PureState, Spectrum};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum QfiMethod {
    PureVariance,
    MixedSpectral,
    FormulaBitflip,
    LowerBoundFn,
    OutcomeAveraged,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QfiReport {
    pub value: f64,
    pub method: QfiMethod,
    pub spectral_cutoff_used: f64,
}

/// `4·Var(O)`.
pub fn qfi_pure(state: &PureState, o: &PauliOperator) -> Result<f64> {
    Ok(4.0 * state.variance(o)?)
}

/// `2 Σ_{λi+λj>cutoff} (λi−λj)²/(λi+λj) |⟨i|O|j⟩|²`.
pub fn qfi_mixed(rho: &MixedState, o: &PauliOperator, cutoff: f64) -> Result<QfiReport> {
    o.require_hermitian()?;
    qfi_from_spectrum(rho.spectrum(), o, cutoff)
}

/// Same as [`qfi_mixed`] but diagonalizes block-wise in the sectors of a
/// commuting X-type or Z-type Pauli string.
pub fn qfi_mixed_with_symmetry(rho: &MixedState, o: &PauliOperator, sym: &PauliString, cutoff: f64) -> Result<QfiReport> {
    o.require_hermitian()?;
    let spec = rho.spectrum_with_symmetry(sym)?;
    qfi_from_spectrum(&spec, o, cutoff)
}

pub fn qfi_from_spectrum(spec: &Spectrum, o: &PauliOperator, cutoff: f64) -> Result<QfiReport> {
    let value = spec.weighted_pair_sum(o, |a, b| {
        let s = a + b;
        if s > cutoff {
            2.0 * (a - b) * (a - b) / s
        } else {
            0.0
        }
    })?;
    Ok(QfiReport { value: value.max(0.0), method: QfiMethod::MixedSpectral, spectral_cutoff_used: cutoff })
}

/// `∂θρ_θ = i[O, ρ_θ]` for the family `ρ_θ = e^{iθO} ρ e^{−iθO}`.
pub fn unitary_derivative(rho: &MixedState, o: &PauliOperator) -> Result<Mat<C64>> {
    let om = o.to_matrix()?;
    let r = rho.matrix();
    let a = &om * r;
    let b = r * &om;
    Ok(Mat::from_fn(r.nrows(), r.ncols(), |i, j| C64::new(0.0, 1.0) * (a[(i, j)] - b[(i, j)])))
}

fn eigenbasis(rho: &MixedState) -> (Vec<f64>, Mat<C64>) {
    let pairs = rho.spectrum().eigenpairs();
    let d = rho.dim();
    let values = pairs.iter().map(|p| p.0).collect();
    let v = Mat::from_fn(d, d, |i, k| pairs[k].1[i]);
    (values, v)
}

/// Symmetric logarithmic derivative solving `∂θρ = ½{L, ρ}` on the support.
pub fn sld(rho: &MixedState, drho: &Mat<C64>, cutoff: f64) -> Result<Mat<C64>> {
    let d = rho.dim();
    if drho.nrows() != d || drho.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: drho.nrows() });
    }
    let h = crate::qcore::hermiticity_deviation(drho);
    if h > TOL.hermiticity {
        return Err(Error::NotHermitian { deviation: h });
    }
    let (lam, v) = eigenbasis(rho);
    let dd = v.adjoint() * drho * &v;
    let l = Mat::from_fn(d, d, |i, j| {
        let s = lam[i] + lam[j];
        if s > cutoff {
            dd[(i, j)] * (2.0 / s)
        } else {
            C64::default()
        }
    });
    Ok(&v * &l * v.adjoint())
}

/// `θ·I + L_θ/F_Q`.
pub fn optimal_observable(rho: &MixedState, drho: &Mat<C64>, theta: f64, qfi: f64) -> Result<Mat<C64>> {
    if !(qfi.abs() > 0.0) {
        return Err(Error::domain("optimal_observable", "quantum Fisher information is zero"));
    }
    let l = sld(rho, drho, TOL.spectral_cutoff)?;
    let d = rho.dim();
    Ok(Mat::from_fn(d, d, |i, j| l[(i, j)] / qfi + if i == j { C64::new(theta, 0.0) } else { C64::default() }))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorPropagation {
    pub theta: f64,
    pub mean: f64,
    pub variance: f64,
    pub derivative: f64,
    pub derivative_fd: f64,
    /// `√Var/|∂θ⟨A⟩|`, or `+∞` when the signal slope vanishes.
    pub delta_theta: f64,
}

/// Error-propagation precision for a Hermitian Pauli observable.
pub fn error_propagation(state: &PureState, o: &PauliOperator, a: &PauliOperator, theta: f64) -> Result<ErrorPropagation> {
    a.require_hermitian()?;
    error_propagation_op(state, o, a, theta)
}

/// As [`error_propagation`] for any observable the caller guarantees Hermitian.
pub fn error_propagation_op(state: &PureState, o: &PauliOperator, a: &dyn LinearOp, theta: f64) -> Result<ErrorPropagation> {
    let psi = state.evolve_phase(o, theta)?;
    let av = psi.apply_operator(a)?;
    let ov = psi.apply_operator(o)?;
    let mean = inner(psi.amplitudes(), &av).re;
    let variance = centered_norm_sqr(psi.amplitudes(), &av, mean);
    let derivative = 2.0 * inner(&ov, &av).im;
    let h = TOL.fd_step;
    let mp = state.evolve_phase(o, theta + h)?.expectation(a)?.re;
    let mm = state.evolve_phase(o, theta - h)?.expectation(a)?.re;
    let derivative_fd = (mp - mm) / (2.0 * h);
    let delta_theta = if derivative.abs() < TOL.derivative_floor { f64::INFINITY } else { variance.sqrt() / derivative.abs() };
    Ok(ErrorPropagation { theta, mean, variance, derivative, derivative_fd, delta_theta })
}

/// Error propagation for `ρ_θ = e^{iθO}ρe^{−iθO}` and a Pauli observable.
pub fn error_propagation_mixed(rho: &MixedState, o: &PauliOperator, a: &PauliOperator, theta: f64) -> Result<ErrorPropagation> {
    a.require_hermitian()?;
    o.require_hermitian()?;
    let r = rho.evolve_phase(o, theta)?;
    let mean = r.expectation(a)?.re;
    let variance = (r.expectation(&(a * a))?.re - mean * mean).max(0.0);
    let derivative = trace_product(a, &unitary_derivative(&r, o)?).re;
    let h = TOL.fd_step;
    let mp = rho.evolve_phase(o, theta + h)?.expectation(a)?.re;
    let mm = rho.evolve_phase(o, theta - h)?.expectation(a)?.re;
    let derivative_fd = (mp - mm) / (2.0 * h);
    let delta_theta = if derivative.abs() < TOL.derivative_floor { f64::INFINITY } else { variance.sqrt() / derivative.abs() };
    Ok(ErrorPropagation { theta, mean, variance, derivative, derivative_fd, delta_theta })
}

/// `lim_{θ→0} δθ^{-2}` when both the slope and the variance of `A` vanish at θ=0.
///
/// Uses `∂²_θ Tr(Xρ_θ) = −Tr([[X,O],O]ρ)` for `X = A, A²`.
pub fn small_angle_inverse_variance(rho: &MixedState, o: &PauliOperator, a: &PauliOperator) -> Result<f64> {
    a.require_hermitian()?;
    let second = |x: &PauliOperator| -> Result<f64> {
        let c1 = &(x * o) - &(o * x);
        let c2 = &(&c1 * o) - &(o * &c1);
        Ok(-rho.expectation(&c2)?.re)
    };
    let a2 = a * a;
    let mean = rho.expectation(a)?.re;
    let s1 = second(a)?;
    let var2 = second(&a2)? - 2.0 * mean * s1;
    if !(var2.abs() > TOL.derivative_floor) {
        return Err(Error::domain("small_angle_inverse_variance", "variance does not grow quadratically"));
    }
    Ok(s1 * s1 / (0.5 * var2))
}

/// Signal, variance and precision of an observable over a θ grid.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrecisionCurve {
    pub thetas: Vec<f64>,
    pub signal: Vec<f64>,
    pub variance: Vec<f64>,
    pub delta_theta: Vec<f64>,
}

impl PrecisionCurve {
    pub fn new(thetas: Vec<f64>, signal: Vec<f64>, variance: Vec<f64>, delta_theta: Vec<f64>) -> Result<Self> {
        let n = thetas.len();
        if signal.len() != n || variance.len() != n || delta_theta.len() != n {
            return Err(Error::arg("curve", "column lengths differ"));
        }
        if thetas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::arg("thetas", "grid must be strictly increasing"));
        }
        if delta_theta.iter().any(|d| d.is_nan() || *d < 0.0) {
            return Err(Error::arg("delta_theta", "entries must be non-negative"));
        }
        Ok(PrecisionCurve { thetas, signal, variance, delta_theta })
    }
}

pub fn precision_curve(state: &PureState, o: &PauliOperator, a: &dyn LinearOp, thetas: &[f64]) -> Result<PrecisionCurve> {
    let mut s = Vec::with_capacity(thetas.len());
    let mut v = Vec::with_capacity(thetas.len());
    let mut d = Vec::with_capacity(thetas.len());
    for &t in thetas {
        let e = error_propagation_op(state, o, a, t)?;
        s.push(e.mean);
        v.push(e.variance);
        d.push(e.delta_theta);
    }
    PrecisionCurve::new(thetas.to_vec(), s, v, d)
}

/// A one-parameter family of states `θ ↦ ρ_θ`.
pub enum StateFamily<'a> {
    /// `e^{iθO}|ψ⟩`, differentiated analytically.
    UnitaryPure { probe: &'a PureState, generator: &'a PauliOperator },
    /// `e^{iθO}ρe^{−iθO}`, differentiated analytically.
    UnitaryMixed { rho: &'a MixedState, generator: &'a PauliOperator },
    /// Arbitrary pure family, differentiated by Richardson-extrapolated central differences.
    Custom(Box<dyn Fn(f64) -> Result<PureState> + Sync + 'a>),
}

fn trace_product(e: &dyn LinearOp, m: &Mat<C64>) -> C64 {
    let d = m.nrows();
    let mut acc = C64::default();
    for j in 0..d {
        let col: Vec<C64> = (0..d).map(|i| m[(i, j)]).collect();
        acc += e.apply(&col)[j];
    }
    acc
}

/// Probabilities and their θ-derivatives for each effect.
pub fn outcome_statistics(povm: &[&dyn LinearOp], family: &StateFamily, theta: f64) -> Result<Vec<(f64, f64)>> {
    let dim = povm.first().ok_or_else(|| Error::arg("povm", "no effects"))?.dim();
    check_povm(povm, dim)?;
    match family {
        StateFamily::UnitaryPure { probe, generator } => {
            let psi = probe.evolve_phase(generator, theta)?;
            let ov = psi.apply_operator(*generator)?;
            povm.iter()
                .map(|e| {
                    let ev = psi.apply_operator(*e)?;
                    let p = if e.is_projector() {
                        ev.iter().map(|x| x.norm_sqr()).sum()
                    } else {
                        inner(psi.amplitudes(), &ev).re
                    };
                    Ok((p, 2.0 * inner(&ov, &ev).im))
                })
                .collect()
        }
        StateFamily::UnitaryMixed { rho, generator } => {
            let r = rho.evolve_phase(generator, theta)?;
            let dr = unitary_derivative(&r, generator)?;
            Ok(povm.iter().map(|e| (trace_product(*e, r.matrix()).re, trace_product(*e, &dr).re)).collect())
        }
        StateFamily::Custom(f) => {
            let p = |t: f64| -> Result<Vec<f64>> {
                let s = f(t)?;
                povm.iter().map(|e| Ok(s.expectation(*e)?.re)).collect()
            };
            let h = TOL.fd_step * 10.0;
            let c = |h: f64| -> Result<Vec<f64>> {
                let (a, b) = (p(theta + h)?, p(theta - h)?);
                Ok(a.iter().zip(&b).map(|(x, y)| (x - y) / (2.0 * h)).collect())
            };
            let (d1, d2) = (c(h)?, c(h / 2.0)?);
            let p0 = p(theta)?;
            Ok(p0.into_iter().zip(d1.iter().zip(&d2)).map(|(pk, (a, b))| (pk, (4.0 * b - a) / 3.0)).collect())
        }
    }
}

fn check_povm(povm: &[&dyn LinearOp], dim: usize) -> Result<()> {
    let mut worst = 0.0f64;
    for seed in 0..3u64 {
        let v = seeded_vector(dim, 0xc0ffee + seed);
        let mut acc = vec![C64::default(); dim];
        for e in povm {
            if e.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: e.dim() });
            }
            let ev = e.apply(&v);
            if inner(&v, &ev).re < -TOL.hermiticity * inner(&v, &v).re {
                return Err(Error::arg("povm", "effect is not positive"));
            }
            for (a, b) in acc.iter_mut().zip(ev) {
                *a += b;
            }
        }
        let dev = acc.iter().zip(&v).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(dev);
    }
    if worst > TOL.hermiticity {
        return Err(Error::PovmIncomplete { deviation: worst });
    }
    Ok(())
}

/// `Σ_k (∂θP_k)²/P_k` over outcomes with `P_k > 1e-14`.
pub fn classical_fisher(povm: &[&dyn LinearOp], family: &StateFamily, theta: f64) -> Result<f64> {
    let stats = outcome_statistics(povm, family, theta)?;
    Ok(stats.iter().filter(|(p, _)| *p > TOL.probability_floor).map(|(p, d)| d * d / p).sum())
}

/// Effect `(I + s·A)/2` for a ±1-valued observable `A`.
pub struct BinaryEffect<'a> {
    pub observable: &'a dyn LinearOp,
    pub sign: f64,
}

impl LinearOp for BinaryEffect<'_> {
    fn dim(&self) -> usize {
        self.observable.dim()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let a = self.observable.apply(v);
        v.iter().zip(a).map(|(x, y)| (x + y * self.sign) * 0.5).collect()
    }
    fn is_projector(&self) -> bool {
        true
    }
}

/// Projective measurement onto the columns of a unitary.
pub struct BasisProjector {
    pub vector: Vec<C64>,
}

impl LinearOp for BasisProjector {
    fn dim(&self) -> usize {
        self.vector.len()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let c = inner(&self.vector, v);
        self.vector.iter().map(|x| x * c).collect()
    }
    fn is_projector(&self) -> bool {
        true
    }
}

/// Eigenvalues and the operator `O` written in the eigenbasis of `ρ`.
fn operator_in_eigenbasis(rho: &MixedState, o: &PauliOperator) -> Result<(Vec<f64>, Mat<C64>)> {
    let (lam, v) = eigenbasis(rho);
    let om = o.to_matrix()?;
    Ok((lam, v.adjoint() * &om * &v))
}

/// `F_n = 2 Σ_{i,j} Σ_{l=0}^{n} (λi−λj)² (1−λi−λj)^l |O_ij|²` for `n = 0..=n_max`.
pub fn fn_sequence(rho: &MixedState, o: &PauliOperator, n_max: usize) -> Result<Vec<f64>> {
    o.require_hermitian()?;
    let (lam, m) = operator_in_eigenbasis(rho, o)?;
    let d = lam.len();
    let mut out = vec![0.0; n_max + 1];
    for i in 0..d {
        for j in 0..d {
            let s = lam[i] + lam[j];
            if s > 1.0 + 1e-10 {
                return Err(Error::InvalidDensity(format!("eigenvalue pair sums to {s}")));
            }
            let base = 2.0 * (lam[i] - lam[j]).powi(2) * m[(i, j)].norm_sqr();
            let q = (1.0 - s).max(0.0);
            let mut acc = 0.0;
            let mut pw = 1.0;
            for item in out.iter_mut() {
                acc += base * pw;
                *item += acc;
                pw *= q;
            }
        }
    }
    Ok(out)
}

/// `4 Tr{ρ[ρ,O]O} / Tr ρ²`.
pub fn d2(rho: &MixedState, o: &PauliOperator) -> Result<f64> {
    o.require_hermitian()?;
    let om = o.to_matrix()?;
    let a = rho.matrix() * &om;
    let d = rho.dim();
    let mut t1 = 0.0;
    let mut t2 = C64::default();
    for i in 0..d {
        for j in 0..d {
            t1 += a[(i, j)].norm_sqr();
            t2 += a[(i, j)] * a[(j, i)];
        }
    }
    let p = rho.purity();
    if !(p > 0.0) {
        return Err(Error::InvalidDensity("vanishing purity".into()));
    }
    Ok(4.0 * (t1 - t2.re) / p)
}

fn mat_power(m: &Mat<C64>, k: usize) -> Mat<C64> {
    let d = m.nrows();
    let mut r = Mat::from_fn(d, d, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::default() });
    for _ in 0..k {
        r = &r * m;
    }
    r
}

fn trace_of_product(a: &Mat<C64>, b: &Mat<C64>) -> f64 {
    let d = a.nrows();
    let mut t = C64::default();
    for i in 0..d {
        for k in 0..d {
            t += a[(i, k)] * b[(k, i)];
        }
    }
    t.re
}

/// n-th Jeffreys distance
/// `[log Tr ρⁿ + log Tr σⁿ − log Tr ρσ^{n−1} − log Tr σρ^{n−1}]/(n−1)`.
pub fn jeffreys_n(rho: &MixedState, sigma: &MixedState, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::arg("n", "order must be at least 2"));
    }
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    let (r, s) = (rho.matrix(), sigma.matrix());
    let rn1 = mat_power(r, n - 1);
    let sn1 = mat_power(s, n - 1);
    let trn = trace_of_product(&rn1, r);
    let tsn = trace_of_product(&sn1, s);
    let trs = trace_of_product(r, &sn1);
    let tsr = trace_of_product(s, &rn1);
    if trs <= 0.0 || tsr <= 0.0 {
        return Err(Error::domain("jeffreys_n", "states have orthogonal support"));
    }
    Ok((trn.ln() + tsn.ln() - trs.ln() - tsr.ln()) / (n - 1) as f64)
}
