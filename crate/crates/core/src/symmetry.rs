//! Symmetry generators used as measurement observables, and the Hadamard test.

use serde::{Deserialize, Serialize};

use crate::models::Boundary;
use crate::qcore::{inner, norm, permute_amplitudes, Letter, LinearOp, PauliOperator, PauliString, PureState};
use crate::metrology::{classical_fisher, StateFamily};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryKind {
    ParityX,
    ParityZ,
    Translation,
    Reflection,
}

#[derive(Clone, Debug)]
enum Repr {
    Pauli(PauliOperator),
    /// Site permutation: the content of site `j` moves to `perm[j]`.
    Permutation { perm: Vec<usize>, swaps: Vec<(usize, usize)> },
}

#[derive(Clone, Debug)]
pub struct SymmetryOperator {
    pub kind: SymmetryKind,
    pub l: usize,
    /// Bond `(center, center+1)` for reflections.
    pub center: Option<usize>,
    /// Set for reflections of odd open chains, which do not anticommute with staggered imprinters.
    pub flagged: bool,
    repr: Repr,
}

/// Build a symmetry operator on `l` sites.
pub fn build_symmetry(kind: SymmetryKind, l: usize, center: Option<usize>, boundary: Boundary) -> Result<SymmetryOperator> {
    if l < 2 {
        return Err(Error::arg("l", "symmetries need at least two sites"));
    }
    let (repr, flagged) = match kind {
        SymmetryKind::ParityX => (Repr::Pauli(PauliOperator::product_of(l, Letter::X, 0..l)), false),
        SymmetryKind::ParityZ => (Repr::Pauli(PauliOperator::product_of(l, Letter::Z, 0..l)), false),
        SymmetryKind::Translation => {
            if boundary != Boundary::Periodic {
                return Err(Error::arg("boundary", "translation requires a periodic chain"));
            }
            let swaps: Vec<_> = (0..l - 1).map(|k| (k, k + 1)).collect();
            (Repr::Permutation { perm: permutation_of_swaps(l, &swaps), swaps }, false)
        }
        SymmetryKind::Reflection => {
            let j = center.ok_or_else(|| Error::arg("center", "reflection needs a bond center"))?;
            if j >= l {
                return Err(Error::arg("center", "bond center out of range"));
            }
            let mut swaps = Vec::new();
            match boundary {
                Boundary::Periodic => {
                    for i in 0..l {
                        let r = (2 * j + 1 + l - i % l) % l;
                        if i < r {
                            swaps.push((i, r));
                        }
                    }
                }
                Boundary::Open => {
                    let mut k = 0;
                    while k <= j && j + 1 + k < l {
                        swaps.push((j - k, j + 1 + k));
                        k += 1;
                    }
                }
            }
            let flagged = boundary == Boundary::Open && l % 2 == 1;
            (Repr::Permutation { perm: permutation_of_swaps(l, &swaps), swaps }, flagged)
        }
    };
    Ok(SymmetryOperator { kind, l, center, flagged, repr })
}

/// Permutation realized by the operator product `S_{a1} S_{a2} ⋯` (rightmost acts first).
fn permutation_of_swaps(l: usize, swaps: &[(usize, usize)]) -> Vec<usize> {
    // content[s] = original site whose state sits at s
    let mut content: Vec<usize> = (0..l).collect();
    for &(a, b) in swaps.iter().rev() {
        content.swap(a, b);
    }
    let mut perm = vec![0; l];
    for (s, &orig) in content.iter().enumerate() {
        perm[orig] = s;
    }
    perm
}

impl SymmetryOperator {
    pub fn swaps(&self) -> &[(usize, usize)] {
        match &self.repr {
            Repr::Permutation { swaps, .. } => swaps,
            Repr::Pauli(_) => &[],
        }
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.repr {
            Repr::Permutation { perm, .. } => Some(perm),
            Repr::Pauli(_) => None,
        }
    }

    pub fn pauli(&self) -> Option<&PauliOperator> {
        match &self.repr {
            Repr::Pauli(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        match &self.repr {
            Repr::Pauli(_) => true,
            Repr::Permutation { perm, .. } => perm.iter().enumerate().all(|(i, &p)| perm[p] == i),
        }
    }

    /// `U†|v⟩`.
    pub fn apply_adjoint(&self, v: &[C64]) -> Vec<C64> {
        match &self.repr {
            Repr::Pauli(p) => p.apply(v),
            Repr::Permutation { perm, .. } => {
                let mut inv = vec![0; perm.len()];
                for (i, &p) in perm.iter().enumerate() {
                    inv[p] = i;
                }
                permute_amplitudes(self.l, v, &inv)
            }
        }
    }

    /// `U O U†` for a Pauli operator.
    pub fn conjugate(&self, o: &PauliOperator) -> Result<PauliOperator> {
        if o.n_qubits() != self.l {
            return Err(Error::DimensionMismatch { expected: self.l, got: o.n_qubits() });
        }
        Ok(match &self.repr {
            Repr::Pauli(p) => p * &(o * p),
            Repr::Permutation { perm, .. } => {
                let n = self.l;
                let mut out = PauliOperator::zero(n);
                for (s, &c) in o.terms() {
                    let letters: Vec<_> = (0..n).map(|j| (perm[j], s.letter(n, j))).filter(|x| x.1 != Letter::I).collect();
                    out.add_term(PauliString::from_sites(n, &letters), c);
                }
                out
            }
        })
    }

    pub fn to_matrix(&self) -> Result<faer::Mat<C64>> {
        let d = 1usize << self.l;
        if self.l > crate::numeric::DENSE_QUBIT_CAP {
            return Err(Error::Capacity { what: "symmetry matrix", n: self.l, cap: crate::numeric::DENSE_QUBIT_CAP });
        }
        let mut m = faer::Mat::zeros(d, d);
        for b in 0..d {
            let mut e = vec![C64::default(); d];
            e[b] = C64::new(1.0, 0.0);
            for (i, x) in self.apply(&e).into_iter().enumerate() {
                m[(i, b)] = x;
            }
        }
        Ok(m)
    }
}

impl LinearOp for SymmetryOperator {
    fn dim(&self) -> usize {
        1 << self.l
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        match &self.repr {
            Repr::Pauli(p) => p.apply(v),
            Repr::Permutation { perm, .. } => permute_amplitudes(self.l, v, perm),
        }
    }
}

/// True iff `‖AO + OA‖_max < 1e-10`.
pub fn anticommutes(a: &SymmetryOperator, o: &PauliOperator) -> Result<bool> {
    let conj = a.conjugate(o)?;
    // AO + OA = (AOA† + O) A
    let s = &conj + o;
    let ok = s.terms().all(|(_, c)| c.norm() < 1e-10);
    Ok(ok)
}

/// `(is_eigenstate, Re s)` with `s = ⟨ψ|A|ψ⟩`.
pub fn symmetry_eigenvalue(state: &PureState, a: &dyn LinearOp) -> Result<(bool, f64)> {
    let av = state.apply_operator(a)?;
    let s = inner(state.amplitudes(), &av);
    let r: Vec<C64> = av.iter().zip(state.amplitudes()).map(|(x, y)| x - y * s).collect();
    Ok((norm(&r) < crate::numeric::TOL.eigenstate, s.re))
}

/// `Σ_j (−1)^j (n_{j+1} − n_j)` with `n = (I − Z)/2`.
pub fn rydberg_order_parameter(l: usize, boundary: Boundary) -> Result<PauliOperator> {
    if l < 3 {
        return Err(Error::arg("l", "order parameter needs at least three sites"));
    }
    let last = if boundary == Boundary::Periodic { l } else { l - 1 };
    let mut o = PauliOperator::zero(l);
    for j in 0..last {
        let sgn = if j % 2 == 0 { 1.0 } else { -1.0 };
        // n_{j+1} − n_j = (Z_j − Z_{j+1})/2
        o = &o + &(&PauliOperator::single(l, j, Letter::Z) * (0.5 * sgn));
        o = &o + &(&PauliOperator::single(l, (j + 1) % l, Letter::Z) * (-0.5 * sgn));
    }
    o.prune(1e-15);
    Ok(o)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HadamardTestResult {
    pub p_plus: f64,
    pub p_minus: f64,
    /// `Re⟨U⟩ = 2·p_plus − 1`, or `Im⟨U⟩` for the phased variant.
    pub value: f64,
    pub controlled_swaps: usize,
    pub toffolis: usize,
}

/// Ancilla-controlled `U` on `|+⟩|ψ⟩` followed by an ancilla Hadamard; with
/// `phased` an `S†` on the ancilla turns the statistics into `Im⟨U⟩`.
pub fn hadamard_test_phased(state: &PureState, u: &SymmetryOperator, phased: bool) -> Result<HadamardTestResult> {
    let d = state.dim();
    if u.dim() != d {
        return Err(Error::DimensionMismatch { expected: u.dim(), got: d });
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    // doubled register, ancilla is the most significant qubit
    let mut reg = vec![C64::default(); 2 * d];
    let psi = state.amplitudes();
    for i in 0..d {
        reg[i] = psi[i] * s;
        reg[d + i] = psi[i] * s;
    }
    let upper = u.apply(&reg[d..]);
    reg[d..].copy_from_slice(&upper);
    if phased {
        for x in &mut reg[d..] {
            *x *= C64::new(0.0, -1.0);
        }
    }
    for i in 0..d {
        let (a, b) = (reg[i], reg[d + i]);
        reg[i] = (a + b) * s;
        reg[d + i] = (a - b) * s;
    }
    let p_plus: f64 = reg[..d].iter().map(|x| x.norm_sqr()).sum();
    let p_minus: f64 = reg[d..].iter().map(|x| x.norm_sqr()).sum();
    let controlled_swaps = u.swaps().len();
    Ok(HadamardTestResult { p_plus, p_minus, value: p_plus - p_minus, controlled_swaps, toffolis: 3 * controlled_swaps })
}

pub fn hadamard_test(state: &PureState, u: &SymmetryOperator) -> Result<HadamardTestResult> {
    hadamard_test_phased(state, u, false)
}

/// Effect `(I ± Re U)/2` with `Re U = (U + U†)/2`: the Hadamard-test outcome statistics.
pub struct HadamardEffect<'a> {
    pub u: &'a SymmetryOperator,
    pub sign: f64,
}

impl LinearOp for HadamardEffect<'_> {
    fn dim(&self) -> usize {
        self.u.dim()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let a = self.u.apply(v);
        let b = self.u.apply_adjoint(v);
        v.iter().zip(a.iter().zip(&b)).map(|(x, (y, z))| (x + (y + z) * (0.5 * self.sign)) * 0.5).collect()
    }
}

/// `Re U` as a Hermitian observable.
pub struct RealPart<'a>(pub &'a SymmetryOperator);

impl LinearOp for RealPart<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let a = self.0.apply(v);
        let b = self.0.apply_adjoint(v);
        a.iter().zip(&b).map(|(x, y)| (x + y) * 0.5).collect()
    }
}

/// Classical Fisher information of the Hadamard-test outcomes on `e^{iθO}|ψ⟩`.
pub fn hadamard_cfi(probe: &PureState, u: &SymmetryOperator, generator: &PauliOperator, theta: f64) -> Result<f64> {
    let plus = HadamardEffect { u, sign: 1.0 };
    let minus = HadamardEffect { u, sign: -1.0 };
    let family = StateFamily::UnitaryPure { probe, generator };
    classical_fisher(&[&plus, &minus], &family, theta)
}

/// `Re⟨U⟩` on `e^{iθO}|ψ⟩` for each θ, read from simulated Hadamard tests.
pub fn symmetry_theta_curve(probe: &PureState, u: &SymmetryOperator, generator: &PauliOperator, thetas: &[f64]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    thetas
        .par_iter()
        .map(|&t| Ok(hadamard_test(&probe.evolve_phase(generator, t)?, u)?.value))
        .collect()
}
