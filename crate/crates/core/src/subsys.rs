//! Qubit loss: parity measurements restricted to a contiguous subregion.
//!
//! Only the sites of the region are imprinted and measured. The resulting
//! precision curve `δθ(θ)` has an optimum away from `θ = 0`; [`window_report`]
//! extracts it together with the interval where `δθ` beats the reference
//! `1/√(2 L_sub)`.

use rayon::prelude::*;
use serde::Serialize;

use crate::metrology::{error_propagation_op, PrecisionCurve};
use crate::models::{luttinger_k, solve, Boundary, ModelSpec};
use crate::qcore::{inner, permute_amplitudes, Letter, LinearOp, PauliOperator, PureState};
use crate::{Error, Result, C64};

pub const DEFAULT_GRID_POINTS: usize = 256;
/// Minimum grid size accepted by [`window_report`].
pub const MIN_WINDOW_POINTS: usize = 200;

/// `n` log-spaced points in `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && n >= 2) {
        return Err(Error::arg("grid", "need 0 < lo < hi and at least two points"));
    }
    let (a, b) = (lo.ln(), hi.ln());
    Ok((0..n).map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp()).collect())
}

/// Default grid: 256 points log-spaced in `[10⁻³, 1]`.
pub fn default_grid() -> Vec<f64> {
    log_grid(1e-3, 1.0, DEFAULT_GRID_POINTS).expect("static grid")
}

fn check_sizes(l: usize, l_sub: usize) -> Result<()> {
    if l_sub == 0 || l_sub > l {
        return Err(Error::arg("l_sub", format!("need 1 ≤ L_sub ≤ L = {l}, got {l_sub}")));
    }
    Ok(())
}

/// Sites `offset, offset+1, …` of a region of length `l_sub`, wrapped modulo `l`.
pub fn region_sites(l: usize, l_sub: usize, offset: usize) -> Result<Vec<usize>> {
    check_sizes(l, l_sub)?;
    Ok((0..l_sub).map(|k| (offset + k) % l).collect())
}

/// `∏_{j<L_sub} X_j`.
pub fn subsystem_parity(l: usize, l_sub: usize) -> Result<PauliOperator> {
    check_sizes(l, l_sub)?;
    Ok(PauliOperator::product_of(l, Letter::X, 0..l_sub))
}

/// Jordan–Wigner Majorana `γ_{j,1} = X_j∏_{i<j}(−Z_i)` or `γ_{j,2} = Y_j∏_{i<j}(−Z_i)`.
pub fn majorana(l: usize, j: usize, alpha: u8) -> Result<PauliOperator> {
    let head = match alpha {
        1 => Letter::X,
        2 => Letter::Y,
        _ => return Err(Error::arg("alpha", "Majorana flavour must be 1 or 2")),
    };
    if j >= l {
        return Err(Error::arg("j", "site out of range"));
    }
    let mut letters: Vec<_> = (0..j).map(|i| (i, Letter::Z)).collect();
    letters.push((j, head));
    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
    Ok(PauliOperator::term(l, sign, &letters))
}

/// String parity `iγ_{0,α}γ_{L_sub,β}`.
pub fn xxz_string_parity(l: usize, l_sub: usize, alpha: u8, beta: u8) -> Result<PauliOperator> {
    if l_sub == 0 || l_sub >= l {
        return Err(Error::arg("l_sub", format!("string endpoints need 1 ≤ L_sub < L = {l}")));
    }
    let p = (&majorana(l, 0, alpha)? * &majorana(l, l_sub, beta)?).scaled(C64::i());
    let mut p = p;
    p.prune(1e-15);
    Ok(p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsystemMeasurement {
    Parity,
    StringParity { alpha: u8, beta: u8 },
}

/// Imprinter and ±1 observable both supported on an accessible region.
#[derive(Clone, Debug)]
pub struct SubsystemProtocol {
    pub l: usize,
    pub l_sub: usize,
    pub sites: Vec<usize>,
    pub measurement_kind: SubsystemMeasurement,
    pub imprinter: PauliOperator,
    pub measurement: PauliOperator,
}

impl SubsystemProtocol {
    /// `Π_sub = ∏X`, `O_sub = ½ΣZ` on the region; centred on periodic chains, at the left edge on open ones.
    pub fn parity(l: usize, l_sub: usize, boundary: Boundary) -> Result<Self> {
        let offset = match boundary {
            Boundary::Periodic => (l - l_sub.min(l)) / 2,
            Boundary::Open => 0,
        };
        Self::parity_at(l, l_sub, offset)
    }

    pub fn parity_at(l: usize, l_sub: usize, offset: usize) -> Result<Self> {
        let sites = region_sites(l, l_sub, offset)?;
        let measurement = PauliOperator::product_of(l, Letter::X, sites.iter().copied());
        let imprinter = sites.iter().fold(PauliOperator::zero(l), |acc, &s| &acc + &PauliOperator::term(l, 0.5, &[(s, Letter::Z)]));
        let p = SubsystemProtocol { l, l_sub, sites, measurement_kind: SubsystemMeasurement::Parity, imprinter, measurement };
        p.validate()?;
        Ok(p)
    }

    /// `Π^{(α,β)}` on sites `0..=L_sub` with `O_sub = ½Σ_{0<j<L_sub} X_j`.
    pub fn string_parity(l: usize, l_sub: usize, alpha: u8, beta: u8) -> Result<Self> {
        let measurement = xxz_string_parity(l, l_sub, alpha, beta)?;
        let imprinter = (1..l_sub).fold(PauliOperator::zero(l), |acc, s| &acc + &PauliOperator::term(l, 0.5, &[(s, Letter::X)]));
        let p = SubsystemProtocol {
            l,
            l_sub,
            sites: (0..=l_sub).collect(),
            measurement_kind: SubsystemMeasurement::StringParity { alpha, beta },
            imprinter,
            measurement,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_sizes(self.l, self.l_sub)?;
        let mask: u64 = self.sites.iter().fold(0, |m, &s| m | crate::qcore::site_bit(self.l, s));
        for op in [&self.imprinter, &self.measurement] {
            if op.terms().any(|(p, _)| (p.x | p.z) & !mask != 0) {
                return Err(Error::arg("imprinter", "operator support leaves the accessible region"));
            }
        }
        self.measurement.require_hermitian()?;
        if !self.measurement.anticommutes_with(&self.imprinter) {
            return Err(Error::arg("measurement", "observable must anticommute with the imprinter"));
        }
        Ok(())
    }
}

/// `⟨U†ΠU⟩` via the pull-through `U†ΠU = Π e^{2iθO}`.
pub fn pulled_through_signal(psi: &PureState, protocol: &SubsystemProtocol, theta: f64) -> Result<f64> {
    let v = psi.evolve_phase(&protocol.imprinter, 2.0 * theta)?;
    let pv = protocol.measurement.apply(v.amplitudes());
    let z = inner(psi.amplitudes(), &pv);
    if z.im.abs() > 1e-9 {
        return Err(Error::domain("pulled_through_signal", format!("imaginary part {:.3e}", z.im)));
    }
    Ok(z.re)
}

/// Signal, variance and δθ of the subsystem observable over a θ grid.
pub fn parity_theta_curve(psi: &PureState, protocol: &SubsystemProtocol, thetas: &[f64]) -> Result<PrecisionCurve> {
    if psi.n_qubits() != protocol.l {
        return Err(Error::DimensionMismatch { expected: protocol.l, got: psi.n_qubits() });
    }
    let rows: Vec<_> = thetas
        .par_iter()
        .map(|&t| error_propagation_op(psi, &protocol.imprinter, &protocol.measurement, t))
        .collect::<Result<_>>()?;
    PrecisionCurve::new(
        thetas.to_vec(),
        rows.iter().map(|r| r.mean).collect(),
        rows.iter().map(|r| r.variance).collect(),
        rows.iter().map(|r| r.delta_theta).collect(),
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WindowReport {
    pub l_sub: usize,
    pub theta_l: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_r: Option<f64>,
    /// Smallest δθ on the grid (refined when interior).
    pub delta_min: f64,
    pub sql_reference: f64,
    /// The minimum lies strictly inside the grid and below both ends.
    pub interior: bool,
    /// `δθ_min` is below the reference and both crossings were found.
    pub window: bool,
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<(f64, f64)> {
    let d = (x[0] - x[1]) * (x[0] - x[2]) * (x[1] - x[2]);
    let a = (x[2] * (y[1] - y[0]) + x[1] * (y[0] - y[2]) + x[0] * (y[2] - y[1])) / d;
    let b = (x[2] * x[2] * (y[0] - y[1]) + x[1] * x[1] * (y[2] - y[0]) + x[0] * x[0] * (y[1] - y[2])) / d;
    if !(a > 0.0) {
        return None;
    }
    let c = y[0] - a * x[0] * x[0] - b * x[0];
    let xv = -b / (2.0 * a);
    (xv > x[0] && xv < x[2]).then(|| (xv, c - b * b / (4.0 * a)))
}

fn crossing(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if !y0.is_finite() || !y1.is_finite() {
        return if y0.is_finite() { x0 } else { x1 };
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}

/// Optimal angle and sub-reference window of a precision curve.
pub fn window_report(curve: &PrecisionCurve, l_sub: usize) -> Result<WindowReport> {
    let n = curve.thetas.len();
    if n < MIN_WINDOW_POINTS {
        return Err(Error::arg("curve", format!("need at least {MIN_WINDOW_POINTS} grid points, got {n}")));
    }
    if l_sub == 0 {
        return Err(Error::arg("l_sub", "must be positive"));
    }
    let sql = 1.0 / (2.0 * l_sub as f64).sqrt();
    let d = &curve.delta_theta;
    let t = &curve.thetas;
    let (k, &dmin) = d
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::arg("curve", "empty"))?;
    let edge = d[0].min(d[n - 1]);
    let interior = k > 0 && k < n - 1 && dmin < (1.0 - 1e-6) * edge;
    let (theta_min, delta_min) = if interior {
        parabola_vertex([t[k - 1], t[k], t[k + 1]], [d[k - 1], d[k], d[k + 1]])
            .filter(|&(_, y)| y <= dmin)
            .map(|(x, y)| (Some(x), y))
            .unwrap_or((Some(t[k]), dmin))
    } else {
        (None, dmin)
    };
    let (mut theta_l, mut theta_r) = (None, None);
    if interior && delta_min < sql {
        theta_l = (1..=k).rev().find(|&i| !(d[i - 1] < sql)).map(|i| crossing(t[i - 1], d[i - 1], t[i], d[i], sql));
        theta_r = (k..n - 1).find(|&i| !(d[i + 1] < sql)).map(|i| crossing(t[i], d[i], t[i + 1], d[i + 1], sql));
    }
    Ok(WindowReport {
        l_sub,
        theta_l,
        theta_min,
        theta_r,
        delta_min,
        sql_reference: sql,
        interior,
        window: theta_l.is_some() && theta_r.is_some(),
    })
}

/// `(θ·L_sub^{7/8}, ⟨Π⟩·L_sub^{1/4})`.
pub fn rescaled_curve(curve: &PrecisionCurve, l_sub: usize) -> (Vec<f64>, Vec<f64>) {
    let ls = l_sub as f64;
    (
        curve.thetas.iter().map(|t| t * ls.powf(0.875)).collect(),
        curve.signal.iter().map(|s| s * ls.powf(0.25)).collect(),
    )
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let i = xs.partition_point(|&v| v < x).clamp(1, xs.len() - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    ys[i - 1] + (ys[i] - ys[i - 1]) * (x - x0) / (x1 - x0)
}

/// Sup-distance of two sampled curves over the overlap of their ranges.
pub fn collapse_distance(a: (&[f64], &[f64]), b: (&[f64], &[f64])) -> Result<f64> {
    let lo = a.0[0].max(b.0[0]);
    let hi = a.0[a.0.len() - 1].min(b.0[b.0.len() - 1]);
    if !(hi > lo) {
        return Err(Error::arg("curves", "ranges do not overlap"));
    }
    let sup = a.0.iter().chain(b.0).filter(|&&x| x >= lo && x <= hi).fold(0.0f64, |m, &x| {
        m.max((interpolate(a.0, a.1, x) - interpolate(b.0, b.1, x)).abs())
    });
    Ok(sup)
}

/// Window exponents for a Luttinger liquid with parameter `K`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PredictedExponents {
    pub k: f64,
    pub delta_min: f64,
    pub theta_l: f64,
    pub theta_min: f64,
    pub theta_r: f64,
    /// `K > 3/2`: the window opens with growing `L_sub`.
    pub window_predicted: bool,
}

pub const K_THRESHOLD: f64 = 1.5;

pub fn predicted_exponents(k: f64) -> PredictedExponents {
    PredictedExponents {
        k,
        delta_min: -1.0 + 3.0 / (4.0 * k),
        theta_l: -1.5 + 1.0 / k,
        theta_min: -1.0 + 1.0 / (4.0 * k),
        theta_r: -0.5 - 1.0 / (2.0 * k),
        window_predicted: k > K_THRESHOLD * (1.0 + 1e-12),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct XxzWindowTable {
    pub anisotropy: f64,
    pub l: usize,
    pub alpha: u8,
    pub beta: u8,
    pub predicted: PredictedExponents,
    pub rows: Vec<WindowReport>,
}

/// Measured windows of the string-parity protocol on the periodic XXZ ground state.
pub fn xxz_window_scaling(anisotropy: f64, l: usize, l_subs: &[usize], alpha: u8, beta: u8, thetas: &[f64]) -> Result<XxzWindowTable> {
    let k = luttinger_k(anisotropy)?;
    let psi = solve(&ModelSpec::xxz(l, anisotropy))?.state;
    let rows = l_subs
        .iter()
        .map(|&ls| {
            let p = SubsystemProtocol::string_parity(l, ls, alpha, beta)?;
            window_report(&parity_theta_curve(&psi, &p, thetas)?, ls)
        })
        .collect::<Result<_>>()?;
    Ok(XxzWindowTable { anisotropy, l, alpha, beta, predicted: predicted_exponents(k), rows })
}

/// Mean Rydberg occupation `(1/L)Σ⟨n_j⟩`, `n = (1 − Z)/2`.
pub fn mean_occupation(psi: &PureState) -> Result<f64> {
    let l = psi.n_qubits();
    let z = psi.expectation(&PauliOperator::sum_of(l, Letter::Z))?.re;
    Ok((0.5 * (1.0 - z / l as f64)).clamp(0.0, 1.0))
}

/// `μ_j = S_{1/2}⋯S_{j−1/2} ζ_j` with `ζ_j = |0⟩(√(1−n)⟨0| − √n⟨1|)`.
///
/// The swap string carries site `j` to site 0 and shifts sites `0..j` right by one.
#[derive(Clone, Debug)]
pub struct DisorderOperator {
    pub l: usize,
    pub site: usize,
    pub occupation: f64,
    perm: Vec<usize>,
    inverse: Vec<usize>,
}

pub fn rydberg_disorder_operator(l: usize, j: usize, mean_occupation: f64) -> Result<DisorderOperator> {
    if !(mean_occupation > 0.0 && mean_occupation < 1.0) {
        return Err(Error::arg("mean_occupation", "must lie strictly between 0 and 1"));
    }
    DisorderOperator::new(l, j, mean_occupation)
}

impl DisorderOperator {
    /// As [`rydberg_disorder_operator`] but admitting the closed interval `[0, 1]`.
    pub fn new(l: usize, j: usize, occupation: f64) -> Result<Self> {
        if j >= l {
            return Err(Error::arg("j", "site out of range"));
        }
        if !(0.0..=1.0).contains(&occupation) {
            return Err(Error::arg("mean_occupation", "must lie in [0, 1]"));
        }
        let perm: Vec<usize> = (0..l).map(|i| if i == j { 0 } else if i < j { i + 1 } else { i }).collect();
        let mut inverse = vec![0; l];
        for (i, &p) in perm.iter().enumerate() {
            inverse[p] = i;
        }
        Ok(DisorderOperator { l, site: j, occupation, perm, inverse })
    }

    fn weights(&self) -> (f64, f64) {
        ((1.0 - self.occupation).sqrt(), self.occupation.sqrt())
    }

    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        let w = permute_amplitudes(self.l, v, &self.inverse);
        let (c0, c1) = self.weights();
        let bit = 1usize << (self.l - 1 - self.site);
        let mut out = vec![C64::default(); w.len()];
        for b in (0..w.len()).filter(|b| b & bit == 0) {
            out[b] = w[b] * c0;
            out[b | bit] = -w[b] * c1;
        }
        out
    }
}

impl LinearOp for DisorderOperator {
    fn dim(&self) -> usize {
        1 << self.l
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let (c0, c1) = self.weights();
        let bit = 1usize << (self.l - 1 - self.site);
        let mut z = vec![C64::default(); v.len()];
        for b in (0..v.len()).filter(|b| b & bit == 0) {
            z[b] = v[b] * c0 - v[b | bit] * c1;
        }
        permute_amplitudes(self.l, &z, &self.perm)
    }
}

/// `μ_a† μ_b`.
pub struct DisorderCorrelator<'a> {
    pub left: &'a DisorderOperator,
    pub right: &'a DisorderOperator,
}

impl LinearOp for DisorderCorrelator<'_> {
    fn dim(&self) -> usize {
        self.right.dim()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.left.apply_adjoint(&self.right.apply(v))
    }
}

/// `½Σ_{0<j<L_sub} σ_j` with `σ_j = (−1)^j (n_{j+1} − n_j)`.
pub fn rydberg_subsystem_imprinter(l: usize, l_sub: usize) -> Result<PauliOperator> {
    if l_sub < 2 || l_sub >= l {
        return Err(Error::arg("l_sub", format!("need 2 ≤ L_sub < L = {l}")));
    }
    let mut o = PauliOperator::zero(l);
    for j in 1..l_sub {
        let s = if j % 2 == 0 { 0.25 } else { -0.25 };
        o = &o + &PauliOperator::term(l, s, &[(j, Letter::Z)]);
        o = &o + &PauliOperator::term(l, -s, &[(j + 1, Letter::Z)]);
    }
    o.prune(1e-15);
    Ok(o)
}

/// `⟨ψ_θ|μ₀†μ_{L_sub}|ψ_θ⟩` with `ψ_θ = e^{iθO_sub}ψ`.
pub fn disorder_theta_curve(psi: &PureState, l_sub: usize, occupation: f64, thetas: &[f64]) -> Result<Vec<C64>> {
    let l = psi.n_qubits();
    let o = rydberg_subsystem_imprinter(l, l_sub)?;
    let m0 = rydberg_disorder_operator(l, 0, occupation)?;
    let m1 = rydberg_disorder_operator(l, l_sub, occupation)?;
    let c = DisorderCorrelator { left: &m0, right: &m1 };
    thetas.par_iter().map(|&t| psi.evolve_phase(&o, t)?.expectation(&c)).collect()
}
