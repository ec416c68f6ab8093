use std::sync::OnceLock;

use faer::{Mat, Side};

use super::pauli::{PauliOperator, PauliString};
use super::state::{LinearOp, PureState};
use crate::numeric::{DENSE_QUBIT_CAP, TOL};
use crate::{Error, Result, C64};

/// Density matrix with a lazily computed spectral decomposition.
#[derive(Debug)]
pub struct MixedState {
    n: usize,
    matrix: Mat<C64>,
    spectrum: OnceLock<Spectrum>,
}

impl Clone for MixedState {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        MixedState { n: self.n, matrix: self.matrix.clone(), spectrum }
    }
}

/// One symmetry block of a spectral decomposition, expressed in the rotated basis.
#[derive(Clone, Debug)]
pub struct SpectralBlock {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
    pub vectors: Mat<C64>,
}

/// Eigen-decomposition split into blocks of a Pauli-string symmetry.
///
/// For an X-type symmetry the basis is first rotated by Hadamards on the masked
/// sites so the symmetry becomes diagonal; `rotation` records that mask.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub n: usize,
    pub rotation: u64,
    pub parity_mask: u64,
    pub blocks: Vec<SpectralBlock>,
}

fn check_cap(n: usize) -> Result<()> {
    if n > DENSE_QUBIT_CAP {
        Err(Error::Capacity { what: "density matrix", n, cap: DENSE_QUBIT_CAP })
    } else {
        Ok(())
    }
}

pub fn hermiticity_deviation(m: &Mat<C64>) -> f64 {
    let d = m.nrows();
    let mut dev = 0.0f64;
    for j in 0..d {
        for i in j..d {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn trace(m: &Mat<C64>) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

impl MixedState {
    /// Validated constructor: Hermitian, unit trace and positive semidefinite.
    pub fn new(n: usize, matrix: Mat<C64>) -> Result<Self> {
        let s = Self::from_matrix_unchecked_psd(n, matrix)?;
        let min = s.spectrum().min_eigenvalue();
        if min < TOL.min_eigenvalue {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(s)
    }

    /// Hermiticity and trace are checked; positivity is trusted (e.g. CPTP output).
    pub fn from_matrix_unchecked_psd(n: usize, matrix: Mat<C64>) -> Result<Self> {
        check_cap(n)?;
        let d = 1usize << n;
        if matrix.nrows() != d || matrix.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: matrix.nrows() });
        }
        let h = hermiticity_deviation(&matrix);
        if h > TOL.hermiticity {
            return Err(Error::InvalidDensity(format!("not Hermitian (deviation {h:.3e})")));
        }
        let tr = trace(&matrix);
        if (tr - C64::new(1.0, 0.0)).norm() > TOL.trace {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        Ok(MixedState { n, matrix, spectrum: OnceLock::new() })
    }

    pub fn from_pure(psi: &PureState) -> Result<Self> {
        check_cap(psi.n_qubits())?;
        let m = psi.density_matrix()?;
        Ok(MixedState { n: psi.n_qubits(), matrix: m, spectrum: OnceLock::new() })
    }

    pub fn maximally_mixed(n: usize) -> Result<Self> {
        check_cap(n)?;
        let d = 1usize << n;
        let m = Mat::from_fn(d, d, |i, j| if i == j { C64::new(1.0 / d as f64, 0.0) } else { C64::default() });
        Ok(MixedState { n, matrix: m, spectrum: OnceLock::new() })
    }

    /// Weighted mixture `Σ w_k |ψ_k⟩⟨ψ_k|` with weights summing to one.
    pub fn mixture(states: &[(f64, PureState)]) -> Result<Self> {
        let first = states.first().ok_or_else(|| Error::arg("states", "empty mixture"))?;
        let n = first.1.n_qubits();
        check_cap(n)?;
        let d = 1usize << n;
        let mut m = Mat::<C64>::zeros(d, d);
        for (w, s) in states {
            if s.n_qubits() != n {
                return Err(Error::DimensionMismatch { expected: n, got: s.n_qubits() });
            }
            let a = s.amplitudes();
            for j in 0..d {
                let cj = a[j].conj() * *w;
                if cj == C64::default() {
                    continue;
                }
                for i in 0..d {
                    m[(i, j)] += a[i] * cj;
                }
            }
        }
        Self::from_matrix_unchecked_psd(n, m)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Mat<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    /// `Tr(ρ·op)`.
    pub fn expectation(&self, op: &PauliOperator) -> Result<C64> {
        if op.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: op.n_qubits() });
        }
        let mut acc = C64::default();
        for (p, &c) in op.terms() {
            for b in 0..self.dim() as u64 {
                let (ph, r) = p.act(b);
                acc += c * ph * self.matrix[(b as usize, r as usize)];
            }
        }
        Ok(acc)
    }

    pub fn variance(&self, op: &PauliOperator) -> Result<f64> {
        op.require_hermitian()?;
        let m = self.expectation(op)?.re;
        let sq = self.expectation(&(op * op))?.re;
        Ok(sq - m * m)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        let d = self.dim();
        let mut s = 0.0;
        for j in 0..d {
            for i in 0..d {
                s += self.matrix[(i, j)].norm_sqr();
            }
        }
        s
    }

    /// `U ρ U†` for `U = e^{iθO}`.
    pub fn evolve_phase(&self, op: &PauliOperator, theta: f64) -> Result<MixedState> {
        op.require_hermitian()?;
        let d = self.dim();
        let mut cols = Mat::<C64>::zeros(d, d);
        // U ρ: evolve each column; then (U (Uρ)†)† = U ρ U†
        let evolve = |v: Vec<C64>| -> Result<Vec<C64>> {
            let nv = super::state::norm(&v);
            if nv == 0.0 {
                return Ok(v);
            }
            let s = PureState::normalize(self.n, v)?;
            Ok(s.evolve_phase(op, theta)?.into_amplitudes().into_iter().map(|x| x * nv).collect())
        };
        for j in 0..d {
            let v: Vec<C64> = (0..d).map(|i| self.matrix[(i, j)]).collect();
            for (i, x) in evolve(v)?.into_iter().enumerate() {
                cols[(i, j)] = x;
            }
        }
        let mut out = Mat::<C64>::zeros(d, d);
        for i in 0..d {
            let v: Vec<C64> = (0..d).map(|j| cols[(i, j)].conj()).collect();
            for (j, x) in evolve(v)?.into_iter().enumerate() {
                out[(i, j)] = x.conj();
            }
        }
        let mut s = MixedState { n: self.n, matrix: out, spectrum: OnceLock::new() };
        s.symmetrize();
        Ok(s)
    }

    /// Replace the matrix by its Hermitian part.
    pub(crate) fn symmetrize(&mut self) {
        let d = self.dim();
        for j in 0..d {
            for i in j..d {
                let a = (self.matrix[(i, j)] + self.matrix[(j, i)].conj()) * 0.5;
                self.matrix[(i, j)] = a;
                self.matrix[(j, i)] = a.conj();
            }
        }
        self.spectrum = OnceLock::new();
    }

    /// Full spectral decomposition, computed once and cached.
    pub fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            decompose(self.n, &self.matrix, 0, 0).expect("eigendecomposition of a Hermitian matrix")
        })
    }

    /// Spectral decomposition split by a commuting X-type or Z-type Pauli string.
    pub fn spectrum_with_symmetry(&self, sym: &PauliString) -> Result<Spectrum> {
        let (rotation, mask) = if sym.z == 0 {
            (sym.x, sym.x)
        } else if sym.x == 0 {
            (0, sym.z)
        } else {
            return Err(Error::arg("symmetry", "block decomposition needs an X-type or Z-type string"));
        };
        decompose(self.n, &self.matrix, rotation, mask)
    }

    /// Reduced state on `kept` sites (listed in the order they should appear).
    pub fn partial_trace(&self, kept: &[usize]) -> Result<MixedState> {
        let n = self.n;
        let mut seen = vec![false; n];
        for &k in kept {
            if k >= n || seen[k] {
                return Err(Error::arg("kept_sites", "sites must be distinct and in range"));
            }
            seen[k] = true;
        }
        if kept.is_empty() {
            return Err(Error::arg("kept_sites", "at least one site must be kept"));
        }
        let traced: Vec<usize> = (0..n).filter(|s| !seen[*s]).collect();
        let nk = kept.len();
        let dk = 1usize << nk;
        let dt = 1usize << traced.len();
        let compose = |a: usize, e: usize| -> usize {
            let mut idx = 0usize;
            for (pos, &s) in kept.iter().enumerate() {
                if a >> (nk - 1 - pos) & 1 == 1 {
                    idx |= 1 << (n - 1 - s);
                }
            }
            for (pos, &s) in traced.iter().enumerate() {
                if e >> (traced.len() - 1 - pos) & 1 == 1 {
                    idx |= 1 << (n - 1 - s);
                }
            }
            idx
        };
        let mut out = Mat::<C64>::zeros(dk, dk);
        for e in 0..dt {
            let rows: Vec<usize> = (0..dk).map(|a| compose(a, e)).collect();
            for (b, &cb) in rows.iter().enumerate() {
                for (a, &ca) in rows.iter().enumerate() {
                    out[(a, b)] += self.matrix[(ca, cb)];
                }
            }
        }
        MixedState::from_matrix_unchecked_psd(nk, out)
    }
}

impl Spectrum {
    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.blocks.iter().flat_map(|b| b.values.iter().copied()).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// Eigenpairs in the computational basis.
    pub fn eigenpairs(&self) -> Vec<(f64, Vec<C64>)> {
        let d = 1usize << self.n;
        let mut out = Vec::with_capacity(d);
        for b in &self.blocks {
            for c in 0..b.values.len() {
                let mut v = vec![C64::default(); d];
                for (r, &idx) in b.indices.iter().enumerate() {
                    v[idx] = b.vectors[(r, c)];
                }
                hadamard_transform(&mut v, self.rotation);
                out.push((b.values[c], v));
            }
        }
        out
    }

    /// `Σ_{i,j} w(λ_i, λ_j)·|⟨i|O|j⟩|²`, skipping block pairs that `O` does not connect.
    pub fn weighted_pair_sum(&self, op: &PauliOperator, w: impl Fn(f64, f64) -> f64) -> Result<f64> {
        if op.n_qubits() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: op.n_qubits() });
        }
        let rot = rotate_operator(op, self.rotation);
        let nb = self.blocks.len();
        let block_of = |idx: usize| -> usize {
            if nb == 1 {
                0
            } else {
                ((idx as u64 & self.parity_mask).count_ones() & 1) as usize
            }
        };
        let mut total = 0.0;
        for b in 0..nb {
            let blk = &self.blocks[b];
            if blk.values.is_empty() {
                continue;
            }
            // G_a = O V_b gathered on the rows of each block a
            let d = 1usize << self.n;
            let mut gathered: Vec<Mat<C64>> =
                self.blocks.iter().map(|a| Mat::zeros(a.indices.len(), blk.values.len())).collect();
            let mut touched = vec![false; nb];
            let mut local = vec![0usize; d];
            for a in &self.blocks {
                for (r, &idx) in a.indices.iter().enumerate() {
                    local[idx] = r;
                }
            }
            for c in 0..blk.values.len() {
                let mut v = vec![C64::default(); d];
                for (r, &idx) in blk.indices.iter().enumerate() {
                    v[idx] = blk.vectors[(r, c)];
                }
                let w = rot.apply(&v);
                for (idx, x) in w.into_iter().enumerate() {
                    if x != C64::default() {
                        let a = block_of(idx);
                        touched[a] = true;
                        gathered[a][(local[idx], c)] = x;
                    }
                }
            }
            for a in 0..nb {
                if !touched[a] {
                    continue;
                }
                let ablk = &self.blocks[a];
                let m = ablk.vectors.adjoint() * gathered[a].as_ref();
                for c in 0..blk.values.len() {
                    let lj = blk.values[c];
                    for r in 0..ablk.values.len() {
                        let x = m[(r, c)].norm_sqr();
                        if x != 0.0 {
                            total += w(ablk.values[r], lj) * x;
                        }
                    }
                }
            }
        }
        Ok(total)
    }
}

/// In-place `⊗ H` on the basis bits in `mask`.
pub fn hadamard_transform(v: &mut [C64], mask: u64) {
    if mask == 0 {
        return;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut m = mask;
    while m != 0 {
        let bit = m & m.wrapping_neg();
        m ^= bit;
        let bit = bit as usize;
        for b in 0..v.len() {
            if b & bit == 0 {
                let (x, y) = (v[b], v[b | bit]);
                v[b] = (x + y) * s;
                v[b | bit] = (x - y) * s;
            }
        }
    }
}

/// `H O H` with Hadamards on `mask`: X↔Z and Y→−Y on masked bits.
pub fn rotate_operator(op: &PauliOperator, mask: u64) -> PauliOperator {
    if mask == 0 {
        return op.clone();
    }
    let mut out = PauliOperator::zero(op.n_qubits());
    for (p, &c) in op.terms() {
        let x = (p.x & !mask) | (p.z & mask);
        let z = (p.z & !mask) | (p.x & mask);
        let ny = (p.x & p.z & mask).count_ones();
        let sign = if ny % 2 == 1 { -1.0 } else { 1.0 };
        out.add_term(PauliString { x, z }, c * sign);
    }
    out
}

fn decompose(n: usize, m: &Mat<C64>, rotation: u64, parity_mask: u64) -> Result<Spectrum> {
    let d = m.nrows();
    let mut work = m.clone();
    if rotation != 0 {
        for j in 0..d {
            let mut col: Vec<C64> = (0..d).map(|i| work[(i, j)]).collect();
            hadamard_transform(&mut col, rotation);
            for (i, x) in col.into_iter().enumerate() {
                work[(i, j)] = x;
            }
        }
        for i in 0..d {
            let mut row: Vec<C64> = (0..d).map(|j| work[(i, j)]).collect();
            hadamard_transform(&mut row, rotation);
            for (j, x) in row.into_iter().enumerate() {
                work[(i, j)] = x;
            }
        }
    }
    let groups: Vec<Vec<usize>> = if parity_mask == 0 {
        vec![(0..d).collect()]
    } else {
        let mut g = vec![Vec::new(), Vec::new()];
        for i in 0..d {
            g[((i as u64 & parity_mask).count_ones() & 1) as usize].push(i);
        }
        // off-block elements must vanish for the split to be exact
        let mut leak = 0.0f64;
        for &i in &g[0] {
            for &j in &g[1] {
                leak = leak.max(work[(i, j)].norm());
            }
        }
        if leak > TOL.hermiticity {
            return Err(Error::arg("symmetry", format!("state does not commute with symmetry (leak {leak:.3e})")));
        }
        g
    };
    let mut blocks = Vec::with_capacity(groups.len());
    for idx in groups {
        let k = idx.len();
        if k == 0 {
            blocks.push(SpectralBlock { indices: idx, values: vec![], vectors: Mat::zeros(0, 0) });
            continue;
        }
        let sub = Mat::<C64>::from_fn(k, k, |a, b| work[(idx[a], idx[b])]);
        let (values, vectors) = eigh(&sub)?;
        blocks.push(SpectralBlock { indices: idx, values, vectors });
    }
    Ok(Spectrum { n, rotation, parity_mask, blocks })
}

/// Hermitian eigendecomposition with a real-arithmetic path for real matrices.
pub fn eigh(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let k = m.nrows();
    let mut max_im = 0.0f64;
    for j in 0..k {
        for i in 0..k {
            max_im = max_im.max(m[(i, j)].im.abs());
        }
    }
    if max_im <= 1e-15 {
        let r = Mat::<f64>::from_fn(k, k, |i, j| m[(i, j)].re);
        let e = r.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let s = e.S();
        let u = e.U();
        let values = (0..k).map(|i| s[i]).collect();
        let vectors = Mat::from_fn(k, k, |i, j| C64::new(u[(i, j)], 0.0));
        Ok((values, vectors))
    } else {
        let e = m.self_adjoint_eigen(Side::Lower).map_err(|_| Error::Eigen)?;
        let s = e.S();
        let values = (0..k).map(|i| s[i].re).collect();
        Ok((values, e.U().to_owned()))
    }
}

impl LinearOp for MixedState {
    fn dim(&self) -> usize {
        self.dim()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        self.matrix.apply(v)
    }
}
