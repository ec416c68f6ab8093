//! Free-fermion solution of the transverse-field Ising chain
//! `H = −J Σ Z_j Z_{j+1} − h Σ X_j`.
//!
//! Majoranas `a_j = (∏_{i<j} X_i) Z_j`, `b_j = (∏_{i<j} X_i) Y_j` give `X_j = i a_j b_j`
//! and `Z_j Z_{j+1} = i b_j a_{j+1}`. The ground state is fixed by the real matrix
//! `G_{jk} = ⟨i a_j b_k⟩`; all other Majorana contractions vanish.

use faer::linalg::solvers::DenseSolveCore;
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::Boundary;
use crate::numeric::integrate;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainSize {
    Finite(usize),
    /// Infinite chain; correlators are available up to `max_separation`.
    Thermodynamic { max_separation: usize },
}

#[derive(Clone, Debug)]
enum Contractions {
    /// Full `L×L` matrix `⟨i a_j b_k⟩`.
    Dense(Mat<f64>),
    /// `⟨i a_{l+d} b_l⟩ = c[d + offset]`.
    Toeplitz { c: Vec<f64>, offset: usize },
}

#[derive(Clone, Debug)]
pub struct FermionSolution {
    pub size: ChainSize,
    pub j: f64,
    pub h: f64,
    pub boundary: Boundary,
    /// Total ground energy, or energy per site in the thermodynamic limit.
    pub energy: f64,
    /// Single-particle energies, ascending (finite chains only).
    pub spectrum: Vec<f64>,
    /// `⟨∏X⟩` of the returned state.
    pub parity: f64,
    contractions: Contractions,
}

/// `ε(k) = 2√(h² + J² − 2hJ cos k)`.
pub fn dispersion(j: f64, h: f64, k: f64) -> f64 {
    2.0 * half_dispersion(j, h, k)
}

/// `√((h−J)² + 4hJ sin²(k/2))`, free of cancellation near `k = 0`.
fn half_dispersion(j: f64, h: f64, k: f64) -> f64 {
    ((h - j).powi(2) + 4.0 * h * j * (0.5 * k).sin().powi(2)).max(0.0).sqrt()
}

/// `⟨i a_{l+d} b_l⟩ = (1/π)∫₀^π [h cos kd − J cos k(d−1)] / √(h²+J²−2hJ cos k) dk`.
fn thermodynamic_contraction(j: f64, h: f64, d: i64) -> f64 {
    let f = move |k: f64| {
        let den = half_dispersion(j, h, k);
        if den == 0.0 {
            return 0.0;
        }
        let d = d as f64;
        // h cos kd − J cos k(d−1) = (h−J) cos kd − 2J sin(k(2d−1)/2) sin(k/2)
        ((h - j) * (k * d).cos() - 2.0 * j * (0.5 * k * (2.0 * d - 1.0)).sin() * (0.5 * k).sin()) / den
    };
    // split the oscillatory integrand into panels of roughly one period
    let panels = (d.unsigned_abs() as usize + 1).clamp(1, 512);
    let w = std::f64::consts::PI / panels as f64;
    (0..panels).map(|p| integrate(&f, p as f64 * w, (p + 1) as f64 * w, 1e-13 / panels as f64)).sum::<f64>()
        / std::f64::consts::PI
}

pub fn solve_tfim_fermion(size: ChainSize, j: f64, h: f64, boundary: Boundary) -> Result<FermionSolution> {
    if !(j.is_finite() && h.is_finite()) || j == 0.0 || h == 0.0 {
        return Err(Error::arg("j", "couplings must be finite and non-zero"));
    }
    match size {
        ChainSize::Thermodynamic { max_separation } => {
            let m = max_separation as i64;
            let offset = max_separation;
            let c: Vec<f64> =
                (-m..=m + 1).collect::<Vec<_>>().par_iter().map(|&d| thermodynamic_contraction(j, h, d)).collect();
            let e = -integrate(&|k| dispersion(j, h, k), 0.0, std::f64::consts::PI, 1e-13) / (2.0 * std::f64::consts::PI);
            Ok(FermionSolution {
                size,
                j,
                h,
                boundary,
                energy: e,
                spectrum: Vec::new(),
                parity: 1.0,
                contractions: Contractions::Toeplitz { c, offset },
            })
        }
        ChainSize::Finite(l) => {
            if l < 2 {
                return Err(Error::arg("l", "need at least two sites"));
            }
            if boundary == Boundary::Periodic {
                if let Some(s) = periodic_fourier(l, j, h) {
                    return Ok(s);
                }
            }
            dense_solution(l, j, h, boundary)
        }
    }
}

/// Antiperiodic momenta `k = π(2n+1)/L`: the `∏X = +1` sector of the periodic chain.
fn antiperiodic_momenta(l: usize) -> impl Iterator<Item = f64> {
    (0..l).map(move |n| std::f64::consts::PI * (2 * n + 1) as f64 / l as f64)
}

/// Translation-invariant solution; `None` when the filled Fermi sea has odd parity.
fn periodic_fourier(l: usize, j: f64, h: f64) -> Option<FermionSolution> {
    // m(k) = −2h + 2J e^{−ik};  ⟨i a_{l+d} b_l⟩ = −(1/L) Σ_k Re[e^{ikd} m(k)]/|m(k)|
    let mut parity = if l % 2 == 0 { 1.0 } else { -1.0 };
    if l % 2 == 1 {
        // the self-conjugate momentum k = π contributes m(π)/|m(π)| = −sign(h + J)
        parity *= -(h + j).signum();
    }
    if parity < 0.0 {
        return None;
    }
    let ks: Vec<f64> = antiperiodic_momenta(l).collect();
    let mut spectrum: Vec<f64> = ks.iter().map(|&k| dispersion(j, h, k)).collect();
    if spectrum.iter().any(|&e| e == 0.0) {
        return None;
    }
    let offset = l - 1;
    let c: Vec<f64> = (-(l as i64 - 1)..=(l as i64 - 1))
        .map(|d| {
            let s: f64 = ks
                .iter()
                .zip(&spectrum)
                .map(|(&k, &e)| (-2.0 * h * (k * d as f64).cos() + 2.0 * j * (k * (d - 1) as f64).cos()) / e)
                .sum();
            -s / l as f64
        })
        .collect();
    let energy = -0.5 * spectrum.iter().sum::<f64>();
    spectrum.sort_by(|a, b| a.total_cmp(b));
    Some(FermionSolution {
        size: ChainSize::Finite(l),
        j,
        h,
        boundary: Boundary::Periodic,
        energy,
        spectrum,
        parity,
        contractions: Contractions::Toeplitz { c, offset },
    })
}

/// General finite chain through the singular-value decomposition of the coupling matrix.
fn dense_solution(l: usize, j: f64, h: f64, boundary: Boundary) -> Result<FermionSolution> {
    // H = (i/4) Σ A_{kl} γ_k γ_l with A[a_j, b_k] = M_{jk}
    let mut m = Mat::<f64>::zeros(l, l);
    for s in 0..l {
        m[(s, s)] = -2.0 * h;
    }
    for s in 0..l - 1 {
        m[(s + 1, s)] = 2.0 * j;
    }
    if boundary == Boundary::Periodic {
        // boundary bond picks up −∏X; even sector
        m[(0, l - 1)] += -2.0 * j;
    }
    let svd = m.svd().map_err(|_| Error::Eigen)?;
    let (u, v) = (svd.U(), svd.V());
    let sigma: Vec<f64> = (0..l).map(|k| svd.S()[k]).collect();
    let mut g = Mat::from_fn(l, l, |a, b| -(0..l).map(|k| u[(a, k)] * v[(b, k)]).sum::<f64>());
    let sign_l = if l % 2 == 0 { 1.0 } else { -1.0 };
    let mut parity = sign_l * u.determinant() * v.determinant();
    parity = parity.signum();
    let mut energy = -0.5 * sigma.iter().sum::<f64>();
    if parity < 0.0 {
        // occupy the softest mode to land in the ∏X = +1 sector
        let k = l - 1;
        for a in 0..l {
            for b in 0..l {
                g[(a, b)] += 2.0 * u[(a, k)] * v[(b, k)];
            }
        }
        energy += sigma[k];
        parity = 1.0;
    }
    let mut spectrum = sigma;
    spectrum.sort_by(|a, b| a.total_cmp(b));
    Ok(FermionSolution { size: ChainSize::Finite(l), j, h, boundary, energy, spectrum, parity, contractions: Contractions::Dense(g) })
}

impl FermionSolution {
    pub fn sites(&self) -> Option<usize> {
        match self.size {
            ChainSize::Finite(l) => Some(l),
            ChainSize::Thermodynamic { .. } => None,
        }
    }

    /// `⟨i a_p b_q⟩`.
    pub fn contraction(&self, p: usize, q: usize) -> f64 {
        match &self.contractions {
            Contractions::Dense(g) => g[(p, q)],
            Contractions::Toeplitz { c, offset } => c[(p as i64 - q as i64 + *offset as i64) as usize],
        }
    }

    /// `Γ_{kl} = ⟨iγ_kγ_l⟩` for `k ≠ l` in the interleaved order `(a_0, b_0, a_1, b_1, …)`.
    pub fn majorana_matrix(&self) -> Result<Mat<f64>> {
        let l = self.sites().ok_or_else(|| Error::arg("size", "Majorana matrix needs a finite chain"))?;
        let mut g = Mat::<f64>::zeros(2 * l, 2 * l);
        for p in 0..l {
            for q in 0..l {
                let x = self.contraction(p, q);
                g[(2 * p, 2 * q + 1)] = x;
                g[(2 * q + 1, 2 * p)] = -x;
            }
        }
        Ok(g)
    }

    /// `⟨Z_p Z_q⟩` for `p < q` as the determinant of `⟨i b_{p+m} a_{p+n+1}⟩`.
    pub fn zz_pair(&self, p: usize, q: usize) -> Result<f64> {
        if !(p < q) {
            return Err(Error::arg("q", "need p < q"));
        }
        let ok = match self.size {
            ChainSize::Finite(l) => q < l,
            ChainSize::Thermodynamic { max_separation } => q - p <= max_separation,
        };
        if !ok {
            return Err(Error::arg("r", "separation outside the solved range"));
        }
        let r = q - p;
        let p_eff = match self.contractions {
            Contractions::Toeplitz { .. } => 0,
            Contractions::Dense(_) => p,
        };
        let hm = Mat::from_fn(r, r, |m, n| -self.contraction(p_eff + n + 1, p_eff + m));
        determinant_checked(&hm)
    }

    /// `⟨Z_0 Z_r⟩`; `r = 0` gives 1.
    pub fn zz_correlator(&self, r: usize) -> Result<f64> {
        if r == 0 {
            return Ok(1.0);
        }
        self.zz_pair(0, r)
    }
}

/// Determinant by partial-pivoting LU, rejecting results whose error bound
/// `κ₁·ε·|det|` exceeds `1e-10`.
pub fn determinant_checked(m: &Mat<f64>) -> Result<f64> {
    let r = m.nrows();
    if r == 0 {
        return Ok(1.0);
    }
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let mut det = 1.0;
    for i in 0..r {
        det *= u[(i, i)];
    }
    let (fwd, _) = lu.P().arrays();
    det *= permutation_sign(fwd);
    if det == 0.0 {
        return Err(Error::IllConditioned { condition: f64::INFINITY });
    }
    let inv = lu.inverse();
    let norm1 = |a: faer::MatRef<'_, f64>| (0..r).map(|j| (0..r).map(|i| a[(i, j)].abs()).sum::<f64>()).fold(0.0, f64::max);
    let cond = norm1(m.as_ref()) * norm1(inv.as_ref());
    if !(cond.is_finite()) || cond * f64::EPSILON * det.abs() > 1e-10 {
        return Err(Error::IllConditioned { condition: cond });
    }
    Ok(det)
}

fn permutation_sign(p: &[usize]) -> f64 {
    let mut seen = vec![false; p.len()];
    let mut sign = 1.0;
    for s in 0..p.len() {
        if seen[s] {
            continue;
        }
        let mut len = 0;
        let mut i = s;
        while !seen[i] {
            seen[i] = true;
            i = p[i];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerLawFit {
    /// Slope of `log y` against `log x`.
    pub exponent: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    pub window: (f64, f64),
}

/// Least squares on `(log x, log y)` restricted to `window` (inclusive).
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: Option<(f64, f64)>) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch { expected: xs.len(), got: ys.len() });
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, _)| window.is_none_or(|(lo, hi)| **x >= lo && **x <= hi))
        .map(|(x, y)| (*x, *y))
        .collect();
    if pts.len() < 3 {
        return Err(Error::arg("xs", "need at least three points in the fit window"));
    }
    if pts.iter().any(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::arg("ys", "power-law fits need positive data"));
    }
    let n = pts.len() as f64;
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ly.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::arg("xs", "degenerate fit window"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    let lo = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    Ok(PowerLawFit { exponent: slope, prefactor: intercept.exp(), r_squared, window: (lo, hi) })
}

/// `F_Q = 4 Σ_{ij} ⟨Z_i Z_j⟩_c` of the periodic chain, `= 4L Σ_r C(r)`.
pub fn tfim_qfi(l: usize, j: f64, h: f64) -> Result<f64> {
    let sol = solve_tfim_fermion(ChainSize::Finite(l), j, h, Boundary::Periodic)?;
    let half = l / 2;
    let c: Vec<f64> = (1..=half).collect::<Vec<_>>().par_iter().map(|&r| sol.zz_correlator(r)).collect::<Result<_>>()?;
    // C(r) = C(L − r)
    let mut total = 1.0;
    for (i, v) in c.iter().enumerate() {
        let r = i + 1;
        total += if 2 * r == l { *v } else { 2.0 * v };
    }
    Ok(4.0 * l as f64 * total)
}

#[derive(Clone, Debug, Serialize)]
pub struct QfiScaling {
    pub sizes: Vec<usize>,
    pub qfi: Vec<f64>,
    pub fit: PowerLawFit,
}

/// QFI of the periodic ground state for each size, with a log–log fit.
pub fn qfi_scaling_tfim(sizes: &[usize], j: f64, h: f64) -> Result<QfiScaling> {
    let lo = sizes.iter().copied().min().unwrap_or(0);
    let hi = sizes.iter().copied().max().unwrap_or(0);
    if sizes.len() < 3 || lo == 0 || (hi as f64) < 4.0 * lo as f64 {
        return Err(Error::arg("sizes", "need three or more sizes spanning at least a factor of four"));
    }
    let qfi: Vec<f64> = sizes.iter().map(|&l| tfim_qfi(l, j, h)).collect::<Result<_>>()?;
    let xs: Vec<f64> = sizes.iter().map(|&l| l as f64).collect();
    let fit = fit_power_law(&xs, &qfi, None)?;
    Ok(QfiScaling { sizes: sizes.to_vec(), qfi, fit })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critical_contractions_have_closed_form() {
        for d in -3i64..6 {
            let want = -2.0 / (std::f64::consts::PI * (2 * d - 1) as f64);
            assert!((thermodynamic_contraction(1.0, 1.0, d) - want).abs() < 1e-11, "d={d}");
        }
    }

    #[test]
    fn permutation_signs() {
        assert_eq!(permutation_sign(&[0, 1, 2]), 1.0);
        assert_eq!(permutation_sign(&[1, 0, 2]), -1.0);
        assert_eq!(permutation_sign(&[1, 2, 0]), 1.0);
    }
}
