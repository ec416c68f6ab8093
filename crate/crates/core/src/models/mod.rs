//! Spin-chain Hamiltonians, reference probe states and ground-state solves.

pub mod lanczos;
mod probes;
mod rydberg;

use serde::{Deserialize, Serialize};

use crate::numeric::{DENSE_QUBIT_CAP, SPARSE_QUBIT_CAP, TOL};
use crate::qcore::{norm, seeded_vector, site_bit, Letter, PauliOperator, PauliString, PureState};
use crate::{Error, Result, C64};

pub use probes::{
    ghz_state, oat_aligned_state, oat_squeezed_state, optimal_oat_twist, spin_coherent_state, squeezing_parameter,
    OatOptimum,
};
pub use rydberg::{
    locate_rydberg_critical_detuning, rydberg_fidelity_susceptibility, rydberg_scaled_order, RydbergCriticalReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// Extra Pauli term given as a letter string, site 0 first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliTermSpec {
    pub coeff: f64,
    pub letters: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelKind {
    Tfim {
        j: f64,
        h: f64,
    },
    Xxz {
        anisotropy: f64,
    },
    Rydberg {
        omega: f64,
        detuning: f64,
        #[serde(default = "default_v1")]
        v1: f64,
        #[serde(default)]
        v2: f64,
        #[serde(default)]
        constrained: bool,
    },
    ClusterLadder {
        #[serde(default)]
        extra_terms: Vec<PauliTermSpec>,
    },
}

fn default_v1() -> f64 {
    50.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(flatten)]
    pub kind: ModelKind,
    /// Sites per chain (rungs for the ladder).
    pub sites: usize,
    #[serde(default)]
    pub boundary: Boundary,
}

impl ModelSpec {
    pub fn tfim(sites: usize, j: f64, h: f64) -> Self {
        ModelSpec { kind: ModelKind::Tfim { j, h }, sites, boundary: Boundary::Periodic }
    }

    pub fn xxz(sites: usize, anisotropy: f64) -> Self {
        ModelSpec { kind: ModelKind::Xxz { anisotropy }, sites, boundary: Boundary::Periodic }
    }

    pub fn rydberg(sites: usize, omega: f64, detuning: f64, v1: f64, v2: f64) -> Self {
        ModelSpec {
            kind: ModelKind::Rydberg { omega, detuning, v1, v2, constrained: false },
            sites,
            boundary: Boundary::Periodic,
        }
    }

    pub fn cluster_ladder(rungs: usize) -> Self {
        ModelSpec { kind: ModelKind::ClusterLadder { extra_terms: vec![] }, sites: rungs, boundary: Boundary::Open }
    }

    pub fn with_boundary(mut self, b: Boundary) -> Self {
        self.boundary = b;
        self
    }

    pub fn n_qubits(&self) -> usize {
        match self.kind {
            ModelKind::ClusterLadder { .. } => 2 * self.sites,
            _ => self.sites,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_qubits();
        if self.sites < 2 {
            return Err(Error::arg("sites", "need at least 2 sites"));
        }
        if n > SPARSE_QUBIT_CAP {
            return Err(Error::Capacity { what: "model", n, cap: SPARSE_QUBIT_CAP });
        }
        match &self.kind {
            ModelKind::Tfim { j, h } => {
                if *j == 0.0 || !j.is_finite() {
                    return Err(Error::arg("j", "coupling must be finite and non-zero"));
                }
                if *h == 0.0 || !h.is_finite() {
                    return Err(Error::arg("h", "field must be finite and non-zero"));
                }
            }
            ModelKind::Xxz { anisotropy } => {
                if !anisotropy.is_finite() {
                    return Err(Error::arg("anisotropy", "must be finite"));
                }
            }
            ModelKind::Rydberg { omega, detuning, v1, v2, .. } => {
                if !(omega.is_finite() && detuning.is_finite() && v2.is_finite()) {
                    return Err(Error::arg("omega", "parameters must be finite"));
                }
                if !(*v1 > 0.0 && v1.is_finite()) {
                    return Err(Error::arg("v1", "nearest-neighbour repulsion must be positive"));
                }
            }
            ModelKind::ClusterLadder { extra_terms } => {
                for t in extra_terms {
                    if t.letters.chars().count() != n {
                        return Err(Error::arg("extra_terms", format!("term `{}` must have {n} letters", t.letters)));
                    }
                    PauliOperator::from_letters(C64::new(t.coeff, 0.0), &t.letters)?;
                }
            }
        }
        Ok(())
    }

    /// XXZ anisotropy inside the critical window `(-1, 1]`.
    pub fn is_critical_xxz(&self) -> bool {
        matches!(self.kind, ModelKind::Xxz { anisotropy } if anisotropy > -1.0 && anisotropy <= 1.0)
    }

    /// Sector used when none is requested: `∏X = +1` for the Ising chain.
    pub fn default_sector(&self) -> Option<Sector> {
        match (&self.kind, self.n_qubits()) {
            (ModelKind::Tfim { .. }, n) => Some(Sector::parity_x(n, 1.0)),
            (ModelKind::Rydberg { constrained: true, .. }, _) => {
                Some(Sector::Blockade { periodic: self.boundary == Boundary::Periodic })
            }
            (ModelKind::ClusterLadder { .. }, n) => Some(Sector::All(vec![
                Sector::Parity { string: ladder_chain_parity(n / 2, 1), eigenvalue: 1.0 },
                Sector::Parity { string: ladder_chain_parity(n / 2, 2), eigenvalue: 1.0 },
            ])),
            _ => None,
        }
    }
}

/// Qubit index of ladder site `(rung, chain)` with `chain ∈ {1, 2}`.
pub fn ladder_qubit(rung: usize, chain: usize) -> usize {
    debug_assert!(chain == 1 || chain == 2);
    2 * rung + (chain - 1)
}

/// `∏_j X_{j,chain}` on a ladder with `rungs` rungs.
pub fn ladder_chain_parity(rungs: usize, chain: usize) -> PauliString {
    let n = 2 * rungs;
    let sites: Vec<_> = (0..rungs).map(|j| (ladder_qubit(j, chain), Letter::X)).collect();
    PauliString::from_sites(n, &sites)
}

fn bonds(l: usize, boundary: Boundary, range: usize) -> Vec<(usize, usize)> {
    let last = match boundary {
        Boundary::Periodic => l,
        Boundary::Open => l.saturating_sub(range),
    };
    (0..last).map(|j| (j, (j + range) % l)).collect()
}

pub fn build_hamiltonian(spec: &ModelSpec) -> Result<PauliOperator> {
    spec.validate()?;
    let n = spec.n_qubits();
    let l = spec.sites;
    let mut h = PauliOperator::zero(n);
    let add = |h: &mut PauliOperator, c: f64, letters: &[(usize, Letter)]| {
        h.add_term(PauliString::from_sites(n, letters), C64::new(c, 0.0));
    };
    match &spec.kind {
        ModelKind::Tfim { j, h: field } => {
            for (a, b) in bonds(l, spec.boundary, 1) {
                add(&mut h, -j, &[(a, Letter::Z), (b, Letter::Z)]);
            }
            for s in 0..l {
                add(&mut h, -field, &[(s, Letter::X)]);
            }
        }
        ModelKind::Xxz { anisotropy } => {
            for (a, b) in bonds(l, spec.boundary, 1) {
                add(&mut h, 1.0, &[(a, Letter::X), (b, Letter::X)]);
                add(&mut h, 1.0, &[(a, Letter::Y), (b, Letter::Y)]);
                add(&mut h, *anisotropy, &[(a, Letter::Z), (b, Letter::Z)]);
            }
        }
        ModelKind::Rydberg { omega, detuning, v1, v2, .. } => {
            // n = (I - Z)/2
            for s in 0..l {
                add(&mut h, omega / 2.0, &[(s, Letter::X)]);
                add(&mut h, -detuning / 2.0, &[]);
                add(&mut h, detuning / 2.0, &[(s, Letter::Z)]);
            }
            for (range, v) in [(1usize, *v1), (2usize, *v2)] {
                if v == 0.0 || range >= l {
                    continue;
                }
                for (a, b) in bonds(l, spec.boundary, range) {
                    add(&mut h, v / 4.0, &[]);
                    add(&mut h, -v / 4.0, &[(a, Letter::Z)]);
                    add(&mut h, -v / 4.0, &[(b, Letter::Z)]);
                    add(&mut h, v / 4.0, &[(a, Letter::Z), (b, Letter::Z)]);
                }
            }
        }
        ModelKind::ClusterLadder { extra_terms } => {
            let q = ladder_qubit;
            for (j, k) in bonds(l, spec.boundary, 1) {
                use Letter::{X, Z};
                add(&mut h, -1.0, &[(q(j, 1), Z), (q(j, 2), X), (q(k, 1), Z)]);
                add(&mut h, -1.0, &[(q(j, 2), Z), (q(k, 1), X), (q(k, 2), Z)]);
                add(&mut h, -1.0, &[(q(j, 2), Z), (q(j, 1), X), (q(k, 2), Z)]);
                add(&mut h, -1.0, &[(q(j, 1), Z), (q(k, 2), X), (q(k, 1), Z)]);
            }
            for t in extra_terms {
                h = &h + &PauliOperator::from_letters(C64::new(t.coeff, 0.0), &t.letters)?;
            }
        }
    }
    h.prune(0.0);
    Ok(h)
}

/// Symmetry sector restricting a ground-state search.
#[derive(Clone, Debug, PartialEq)]
pub enum Sector {
    /// Eigenspace of a Pauli string with eigenvalue ±1.
    Parity { string: PauliString, eigenvalue: f64 },
    /// No two neighbouring sites both in `|1⟩`.
    Blockade { periodic: bool },
    /// Intersection of commuting sectors.
    All(Vec<Sector>),
}

impl Sector {
    pub fn parity_x(n: usize, eigenvalue: f64) -> Sector {
        let sites: Vec<_> = (0..n).map(|j| (j, Letter::X)).collect();
        Sector::Parity { string: PauliString::from_sites(n, &sites), eigenvalue }
    }

    pub fn project(&self, n: usize, v: &mut [C64]) {
        match self {
            Sector::Parity { string, eigenvalue } => {
                let mut op = PauliOperator::zero(n);
                op.add_term(*string, C64::new(1.0, 0.0));
                let pv = op.apply(v);
                for (x, y) in v.iter_mut().zip(pv) {
                    *x = (*x + y * *eigenvalue) * 0.5;
                }
            }
            Sector::Blockade { periodic } => {
                for (b, x) in v.iter_mut().enumerate() {
                    if !blockade_allowed(n, b as u64, *periodic) {
                        *x = C64::default();
                    }
                }
            }
            Sector::All(list) => {
                for s in list {
                    s.project(n, v);
                }
            }
        }
    }
}

fn blockade_allowed(n: usize, b: u64, periodic: bool) -> bool {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    // site j is bit n-1-j; neighbours are adjacent bits
    if b & (b >> 1) != 0 {
        return false;
    }
    if periodic && n > 2 {
        let first = b & site_bit(n, 0) != 0;
        let last = b & site_bit(n, n - 1) != 0;
        if first && last {
            return false;
        }
    }
    b & !mask == 0
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorLabels {
    /// `⟨∏X⟩` when the model has that symmetry.
    pub parity: Option<f64>,
    /// `⟨T⟩` for periodic chains.
    pub momentum: Option<C64>,
}

#[derive(Clone, Debug)]
pub struct GroundSolution {
    pub energy: f64,
    pub state: PureState,
    /// `E₁ − E₀` within the searched sector.
    pub gap: f64,
    pub sector_labels: Option<SectorLabels>,
}

/// Lowest eigenpair of `h` inside `sector` (the full space when `None`).
pub fn ground_state(h: &PauliOperator, sector: Option<&Sector>) -> Result<GroundSolution> {
    h.require_hermitian()?;
    let n = h.n_qubits();
    if n > SPARSE_QUBIT_CAP {
        return Err(Error::Capacity { what: "ground state", n, cap: SPARSE_QUBIT_CAP });
    }
    let dim = 1usize << n;
    let start: Vec<C64> = seeded_vector(dim, 0x5eed_0001).into_iter().map(|x| C64::new(x.re, 0.0)).collect();
    let project = |v: &mut [C64]| {
        if let Some(s) = sector {
            s.project(n, v);
        }
    };
    let apply = |v: &[C64]| {
        let mut w = h.apply(v);
        project(&mut w);
        w
    };
    let max_krylov = ((1usize << 28) / (16 * dim)).clamp(24, 240).min(dim.max(2));
    let opts = lanczos::LanczosOptions { max_krylov, ..Default::default() };
    let res = lanczos::lowest(apply, project, start, &opts)?;
    let energy = res.values[0];
    let gap = if res.values.len() > 1 { res.values[1] - energy } else { f64::INFINITY };
    let mut state = PureState::dephase_normalize(n, res.vectors.into_iter().next().unwrap())?;
    // clean up rounding-level imaginary parts for real Hamiltonians
    if h.terms().all(|(p, c)| c.im == 0.0 && (p.x & p.z).count_ones() % 2 == 0) {
        let amps: Vec<C64> = state.amplitudes().iter().map(|a| C64::new(a.re, 0.0)).collect();
        state = PureState::dephase_normalize(n, amps)?;
    }
    let mut hv = h.apply(state.amplitudes());
    project(&mut hv);
    let r: Vec<C64> = hv.iter().zip(state.amplitudes()).map(|(a, b)| a - b * energy).collect();
    let resid = norm(&r);
    if resid > TOL.eigen_residual * energy.abs().max(1.0) {
        return Err(Error::Convergence { op: "ground_state", message: format!("residual {resid:.3e}") });
    }
    Ok(GroundSolution { energy, state, gap, sector_labels: None })
}

/// Ground state of a model in its default sector, with symmetry labels attached.
pub fn solve(spec: &ModelSpec) -> Result<GroundSolution> {
    let h = build_hamiltonian(spec)?;
    let sector = spec.default_sector();
    let mut sol = ground_state(&h, sector.as_ref())?;
    let n = spec.n_qubits();
    let parity = match spec.kind {
        ModelKind::Tfim { .. } => {
            let p = PauliOperator::product_of(n, Letter::X, 0..n);
            Some(sol.state.expectation(&p)?.re)
        }
        _ => None,
    };
    let momentum = if spec.boundary == Boundary::Periodic && !matches!(spec.kind, ModelKind::ClusterLadder { .. }) {
        let perm: Vec<usize> = (0..n).map(|j| (j + 1) % n).collect();
        Some(sol.state.inner(&sol.state.permuted(&perm)))
    } else {
        None
    };
    sol.sector_labels = Some(SectorLabels { parity, momentum });
    Ok(sol)
}

/// Dense eigendecomposition, for cross-checks on small registers.
pub fn dense_spectrum(h: &PauliOperator) -> Result<(Vec<f64>, faer::Mat<C64>)> {
    if h.n_qubits() > DENSE_QUBIT_CAP {
        return Err(Error::Capacity { what: "dense spectrum", n: h.n_qubits(), cap: DENSE_QUBIT_CAP });
    }
    crate::qcore::eigh(&h.to_matrix()?)
}

/// `K = π / (2(π − arccos Δ))` for `−1 < Δ ≤ 1`.
pub fn luttinger_k(anisotropy: f64) -> Result<f64> {
    if !(anisotropy > -1.0 && anisotropy <= 1.0) {
        return Err(Error::domain("luttinger_k", format!("anisotropy {anisotropy} outside (-1, 1]")));
    }
    let pi = std::f64::consts::PI;
    Ok(pi / (2.0 * (pi - anisotropy.acos())))
}
