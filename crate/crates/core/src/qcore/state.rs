use faer::Mat;

use super::pauli::{Letter, PauliOperator, PauliString};
use crate::numeric::{DENSE_QUBIT_CAP, SPARSE_QUBIT_CAP, TOL};
use crate::{Error, Result, C64};

/// Anything that acts linearly on a state vector of a fixed dimension.
pub trait LinearOp: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, v: &[C64]) -> Vec<C64>;
    /// `E² = E`; probabilities are then taken as `‖Eψ‖²`, which keeps relative accuracy for tiny outcomes.
    fn is_projector(&self) -> bool {
        false
    }
}

impl LinearOp for PauliOperator {
    fn dim(&self) -> usize {
        PauliOperator::dim(self)
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        PauliOperator::apply(self, v)
    }
}

impl LinearOp for Mat<C64> {
    fn dim(&self) -> usize {
        self.nrows()
    }
    fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); self.nrows()];
        for j in 0..self.ncols() {
            let a = v[j];
            if a == C64::default() {
                continue;
            }
            let col = self.col(j);
            for (i, o) in out.iter_mut().enumerate() {
                *o += col[i] * a;
            }
        }
        out
    }
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Normalized state vector over the `2^n` computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    n: usize,
    amps: Vec<C64>,
}

fn check_register(n: usize, len: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::arg("n_qubits", "must be at least 1"));
    }
    if n > SPARSE_QUBIT_CAP {
        return Err(Error::Capacity { what: "state vector", n, cap: SPARSE_QUBIT_CAP });
    }
    if len != 1usize << n {
        return Err(Error::DimensionMismatch { expected: 1 << n, got: len });
    }
    Ok(())
}

impl PureState {
    /// Wrap an already normalized vector.
    pub fn new(n: usize, amps: Vec<C64>) -> Result<Self> {
        check_register(n, amps.len())?;
        let nv = norm(&amps);
        if (nv - 1.0).abs() > TOL.norm {
            return Err(Error::arg("amplitudes", format!("norm {nv} differs from 1")));
        }
        Ok(PureState { n, amps })
    }

    /// Rescale to unit norm; errors on the zero vector.
    pub fn normalize(n: usize, mut amps: Vec<C64>) -> Result<Self> {
        check_register(n, amps.len())?;
        let nv = norm(&amps);
        if nv < 1e-14 {
            return Err(Error::ZeroNorm);
        }
        for a in &mut amps {
            *a /= nv;
        }
        Ok(PureState { n, amps })
    }

    /// Normalize and fix the global phase so the largest amplitude is real and positive.
    pub fn dephase_normalize(n: usize, amps: Vec<C64>) -> Result<Self> {
        let mut s = Self::normalize(n, amps)?;
        s.fix_global_phase();
        Ok(s)
    }

    pub fn fix_global_phase(&mut self) {
        let mut best = 0usize;
        let mut bm = -1.0;
        for (i, a) in self.amps.iter().enumerate() {
            // strict comparison with a small margin keeps the choice stable under rounding
            if a.norm() > bm + 1e-12 {
                bm = a.norm();
                best = i;
            }
        }
        if bm > 0.0 {
            let ph = self.amps[best].conj() / bm;
            for a in &mut self.amps {
                *a *= ph;
            }
        }
    }

    pub fn basis(n: usize, index: usize) -> Result<Self> {
        check_register(n, 1 << n)?;
        if index >= 1 << n {
            return Err(Error::arg("index", "basis index out of range"));
        }
        let mut amps = vec![C64::default(); 1 << n];
        amps[index] = C64::new(1.0, 0.0);
        Ok(PureState { n, amps })
    }

    /// Product state `⊗_j (a_j|0⟩ + b_j|1⟩)`, each factor normalized.
    pub fn product(factors: &[(C64, C64)]) -> Result<Self> {
        let n = factors.len();
        check_register(n, 1 << n.min(62))?;
        let mut amps = vec![C64::new(1.0, 0.0)];
        for &(a, b) in factors {
            let nv = (a.norm_sqr() + b.norm_sqr()).sqrt();
            if nv < 1e-14 {
                return Err(Error::ZeroNorm);
            }
            let (a, b) = (a / nv, b / nv);
            let mut next = Vec::with_capacity(amps.len() * 2);
            for &x in &amps {
                next.push(x * a);
                next.push(x * b);
            }
            amps = next;
        }
        Ok(PureState { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        inner(&self.amps, &other.amps)
    }

    pub fn fidelity(&self, other: &PureState) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.amps.len() {
            Err(Error::DimensionMismatch { expected: self.amps.len(), got: d })
        } else {
            Ok(())
        }
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, op: &dyn LinearOp) -> Result<C64> {
        self.check_dim(op.dim())?;
        Ok(inner(&self.amps, &op.apply(&self.amps)))
    }

    /// `⟨A²⟩ − ⟨A⟩²` for Hermitian `A`, computed as `‖(A − ⟨A⟩)ψ‖²`.
    pub fn variance(&self, op: &PauliOperator) -> Result<f64> {
        op.require_hermitian()?;
        self.variance_of(op)
    }

    /// Variance of an operator the caller guarantees to be Hermitian.
    pub fn variance_of(&self, op: &dyn LinearOp) -> Result<f64> {
        self.check_dim(op.dim())?;
        let a = op.apply(&self.amps);
        let m = inner(&self.amps, &a).re;
        Ok(centered_norm_sqr(&self.amps, &a, m))
    }

    /// `e^{iθO}|ψ⟩`.
    pub fn evolve_phase(&self, op: &PauliOperator, theta: f64) -> Result<PureState> {
        op.require_hermitian()?;
        self.check_dim(op.dim())?;
        if theta == 0.0 {
            return Ok(self.clone());
        }
        let amps = if let Some(d) = op.diagonal() {
            self.amps
                .iter()
                .zip(&d)
                .map(|(a, e)| a * C64::from_polar(1.0, theta * e.re))
                .collect()
        } else if mutually_commuting(op) {
            // e^{iθΣc_k P_k} = ∏_k (cos θc_k + i sin θc_k P_k) for commuting strings
            let mut v = self.amps.clone();
            for (p, c) in op.terms() {
                let a = theta * c.re;
                let single = {
                    let mut o = PauliOperator::zero(self.n);
                    o.add_term(*p, C64::new(1.0, 0.0));
                    o
                };
                let pv = single.apply(&v);
                let (s, co) = a.sin_cos();
                for (x, y) in v.iter_mut().zip(pv) {
                    *x = *x * co + C64::new(0.0, s) * y;
                }
            }
            v
        } else {
            taylor_expi(op, theta, &self.amps)
        };
        Ok(PureState { n: self.n, amps })
    }

    /// `op|ψ⟩`, not normalized.
    pub fn apply_operator(&self, op: &dyn LinearOp) -> Result<Vec<C64>> {
        self.check_dim(op.dim())?;
        Ok(op.apply(&self.amps))
    }

    /// Relabel sites: the amplitude of site `j` moves to site `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> PureState {
        PureState { n: self.n, amps: permute_amplitudes(self.n, &self.amps, perm) }
    }

    pub fn to_density(&self) -> Result<super::MixedState> {
        super::MixedState::from_pure(self)
    }

    pub fn density_matrix(&self) -> Result<Mat<C64>> {
        if self.n > DENSE_QUBIT_CAP {
            return Err(Error::Capacity { what: "density matrix", n: self.n, cap: DENSE_QUBIT_CAP });
        }
        let d = self.dim();
        Ok(Mat::from_fn(d, d, |i, j| self.amps[i] * self.amps[j].conj()))
    }

    /// `⟨σ^a_j σ^b_k⟩` shortcut for two-site correlators.
    pub fn two_point(&self, a: (usize, Letter), b: (usize, Letter)) -> Result<f64> {
        let op = PauliOperator::term(self.n, 1.0, &[a, b]);
        Ok(self.expectation(&op)?.re)
    }
}

/// Move the bit of site `j` to site `perm[j]`.
pub fn permute_amplitudes(n: usize, v: &[C64], perm: &[usize]) -> Vec<C64> {
    assert_eq!(perm.len(), n);
    let mut out = vec![C64::default(); v.len()];
    for (b, &a) in v.iter().enumerate() {
        let mut nb = 0usize;
        for (j, &pj) in perm.iter().enumerate() {
            if b >> (n - 1 - j) & 1 == 1 {
                nb |= 1 << (n - 1 - pj);
            }
        }
        out[nb] = a;
    }
    out
}

fn mutually_commuting(op: &PauliOperator) -> bool {
    let ps: Vec<PauliString> = op.terms().map(|(p, _)| *p).collect();
    ps.iter().enumerate().all(|(i, p)| ps[i + 1..].iter().all(|q| p.commutes_with(q)))
}

/// Scaled Taylor series for `e^{iθO}v` with `O` Hermitian.
fn taylor_expi(op: &PauliOperator, theta: f64, v: &[C64]) -> Vec<C64> {
    let bound: f64 = op.terms().map(|(_, c)| c.norm()).sum::<f64>() * theta.abs();
    let steps = (bound / 0.5).ceil().max(1.0) as usize;
    let dt = theta / steps as f64;
    let mut x = v.to_vec();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..60 {
            let t = op.apply(&term);
            let f = C64::new(0.0, dt / k as f64);
            term = t.into_iter().map(|y| y * f).collect();
            let tn = norm(&term);
            for (a, t) in acc.iter_mut().zip(&term) {
                *a += t;
            }
            if tn < 1e-17 {
                break;
            }
        }
        x = acc;
    }
    x
}

/// `‖a − m·ψ‖²`, free of the cancellation in `‖a‖² − m²` when the variance is tiny.
pub fn centered_norm_sqr(psi: &[C64], a: &[C64], m: f64) -> f64 {
    psi.iter().zip(a).map(|(x, y)| (y - x * m).norm_sqr()).sum()
}
