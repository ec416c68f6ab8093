//! Non-unitarily deformed states, outcome ensembles, decoded correlators and
//! outcome-dependent imprinting on the cluster ladder.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::models::{ladder_qubit, solve, ModelSpec};
use crate::qcore::{Letter, PauliOperator, PauliString, PureState};
use crate::{Error, Result, C64};

/// Largest number of measured observables enumerated exhaustively.
pub const EXHAUSTIVE_CAP: usize = 16;

/// Deformation strength `β`; `Projective` is the `β → ∞` limit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Strength {
    Finite(f64),
    Projective,
}

impl Strength {
    pub fn new(beta: f64) -> Result<Self> {
        if beta == f64::INFINITY {
            Ok(Strength::Projective)
        } else if beta.is_finite() && beta >= 0.0 {
            Ok(Strength::Finite(beta))
        } else {
            Err(Error::arg("beta", format!("must be ≥ 0, got {beta}")))
        }
    }

    pub fn beta(self) -> f64 {
        match self {
            Strength::Finite(b) => b,
            Strength::Projective => f64::INFINITY,
        }
    }

    /// `e^{βsP} ∝ a + b·s·P` for `P² = I`, scaled by `e^{−β}` so that both limits stay finite.
    fn weights(self) -> (f64, f64) {
        match self {
            Strength::Finite(b) => {
                let e = (-2.0 * b).exp();
                ((1.0 + e) / 2.0, (1.0 - e) / 2.0)
            }
            Strength::Projective => (0.5, 0.5),
        }
    }

    /// `Σ_s K_s†K_s` per site in the scaled convention, `(a² + b²)·2`.
    fn completeness(self) -> f64 {
        let (a, b) = self.weights();
        2.0 * (a * a + b * b)
    }
}

// JSON has no infinity, so the projective limit is written as a string.
impl Serialize for Strength {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Strength::Finite(b) => s.serialize_f64(*b),
            Strength::Projective => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Strength {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(b) => Strength::new(b).map_err(serde::de::Error::custom),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "projective") => Ok(Strength::Projective),
            Raw::Text(t) => Err(serde::de::Error::custom(format!("unknown strength `{t}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcomes {
    Fixed(Vec<i8>),
    Sample { seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationSpec {
    pub beta: Strength,
    /// One letter per target site, or a single letter shared by all.
    pub gamma: Vec<Letter>,
    pub sites: Vec<usize>,
    pub outcomes: Outcomes,
}

impl DeformationSpec {
    pub fn uniform(beta: Strength, gamma: Letter, sites: Vec<usize>, sign: i8) -> Self {
        let m = sites.len();
        DeformationSpec { beta, gamma: vec![gamma], sites, outcomes: Outcomes::Fixed(vec![sign; m]) }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.gamma.len() != 1 && self.gamma.len() != self.sites.len() {
            return Err(Error::arg("gamma", "need one letter or one per target site"));
        }
        if self.gamma.contains(&Letter::I) {
            return Err(Error::arg("gamma", "deformation letters must be X, Y or Z"));
        }
        let mut seen = vec![false; n];
        for &s in &self.sites {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::arg("sites", format!("site {s} out of range or repeated")));
            }
        }
        if let Outcomes::Fixed(s) = &self.outcomes {
            if s.len() != self.sites.len() {
                return Err(Error::arg("outcomes", "length differs from the number of target sites"));
            }
            if s.iter().any(|&x| x != 1 && x != -1) {
                return Err(Error::arg("outcomes", "entries must be ±1"));
            }
        }
        Ok(())
    }

    /// Measured observables `Γ_j` as Pauli operators on `n` qubits.
    pub fn observables(&self, n: usize) -> Vec<PauliOperator> {
        self.sites
            .iter()
            .enumerate()
            .map(|(i, &s)| PauliOperator::single(n, s, self.gamma[if self.gamma.len() == 1 { 0 } else { i }]))
            .collect()
    }
}

/// Pauli string and sign of an operator that must be `±P`.
fn signed_string(op: &PauliOperator) -> Result<(PauliString, f64)> {
    op.as_signed_string()
        .ok_or_else(|| Error::arg("measured_ops", "each observable must be a single Pauli string with coefficient ±1"))
}

fn check_ops(n: usize, ops: &[PauliOperator]) -> Result<Vec<(PauliString, f64)>> {
    let mut out = Vec::with_capacity(ops.len());
    for op in ops {
        if op.n_qubits() != n {
            return Err(Error::DimensionMismatch { expected: n, got: op.n_qubits() });
        }
        out.push(signed_string(op)?);
    }
    for (i, a) in out.iter().enumerate() {
        if out[..i].iter().any(|b| !a.0.commutes_with(&b.0)) {
            return Err(Error::NonCommuting);
        }
    }
    Ok(out)
}

/// `∏_i (a + b s_i P_i)|v⟩`, unnormalized.
fn apply_kraus(v: &[C64], ops: &[(PauliString, f64)], s: &[i8], strength: Strength) -> Vec<C64> {
    let (a, b) = strength.weights();
    let mut v = v.to_vec();
    for ((p, sign), &si) in ops.iter().zip(s) {
        let c = b * sign * si as f64;
        let mut w = vec![C64::default(); v.len()];
        for (idx, x) in v.iter().enumerate() {
            let (ph, j) = p.act(idx as u64);
            w[j as usize] += ph * x * c;
        }
        for (x, y) in v.iter_mut().zip(w) {
            *x = *x * a + y;
        }
    }
    v
}

/// `e^{βΣ s_jΓ_j}|ψ⟩` normalized; the projective limit applies `∏(I + s_jΓ_j)/2`.
pub fn deform(psi: &PureState, spec: &DeformationSpec) -> Result<PureState> {
    let n = psi.n_qubits();
    spec.validate(n)?;
    let s = match &spec.outcomes {
        Outcomes::Fixed(s) => s.clone(),
        Outcomes::Sample { seed } => {
            let samples = sample_outcomes(psi, &spec.observables(n), spec.beta, *seed, 1)?;
            samples.samples.into_iter().next().unwrap()
        }
    };
    deform_with(psi, &spec.observables(n), &s, spec.beta)
}

fn deform_with(psi: &PureState, ops: &[PauliOperator], s: &[i8], strength: Strength) -> Result<PureState> {
    if strength == Strength::Finite(0.0) {
        return Ok(psi.clone());
    }
    let strings = check_ops(psi.n_qubits(), ops)?;
    let v = apply_kraus(psi.amplitudes(), &strings, s, strength);
    PureState::normalize(psi.n_qubits(), v).map_err(|e| match e {
        Error::ZeroNorm => Error::domain("deform", "the deformation annihilates the state"),
        e => e,
    })
}

/// Outcome vector with index bit `i` (MSB first) selecting `s_i = −1`.
fn outcome_of(index: usize, m: usize) -> Vec<i8> {
    (0..m).map(|i| if index >> (m - 1 - i) & 1 == 1 { -1 } else { 1 }).collect()
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub s: Vec<i8>,
    pub probability: f64,
}

/// All `2^m` outcomes of measuring commuting `±1` observables on a state.
///
/// Post-measurement states are produced on demand by [`OutcomeEnsemble::post_state`].
#[derive(Clone, Debug)]
pub struct OutcomeEnsemble {
    pub state: PureState,
    pub ops: Vec<PauliOperator>,
    pub strength: Strength,
    pub branches: Vec<Branch>,
}

impl OutcomeEnsemble {
    pub fn total_probability(&self) -> f64 {
        self.branches.iter().map(|b| b.probability).sum()
    }

    pub fn post_state(&self, s: &[i8]) -> Result<PureState> {
        deform_with(&self.state, &self.ops, s, self.strength)
    }

    /// `Σ_s p_s f(s, ψ_s)` over branches with nonzero weight, summed in outcome order.
    pub fn average<F>(&self, f: F) -> Result<f64>
    where
        F: Fn(&[i8], &PureState) -> Result<f64> + Sync,
    {
        let parts: Vec<f64> = self
            .branches
            .par_iter()
            .map(|b| {
                if b.probability < 1e-15 {
                    return Ok(0.0);
                }
                Ok(b.probability * f(&b.s, &self.post_state(&b.s)?)?)
            })
            .collect::<Result<_>>()?;
        Ok(parts.iter().sum())
    }
}

/// Exhaustive Born-rule enumeration.
pub fn enumerate_outcomes(psi: &PureState, ops: &[PauliOperator], strength: Strength) -> Result<OutcomeEnsemble> {
    let strings = check_ops(psi.n_qubits(), ops)?;
    let m = ops.len();
    if m > EXHAUSTIVE_CAP {
        return Err(Error::Capacity { what: "exhaustive outcome enumeration", n: m, cap: EXHAUSTIVE_CAP });
    }
    let scale = strength.completeness().powi(m as i32);
    let branches = (0..1usize << m)
        .into_par_iter()
        .map(|idx| {
            let s = outcome_of(idx, m);
            let v = apply_kraus(psi.amplitudes(), &strings, &s, strength);
            let probability = v.iter().map(|x| x.norm_sqr()).sum::<f64>() / scale;
            Branch { s, probability }
        })
        .collect();
    Ok(OutcomeEnsemble { state: psi.clone(), ops: ops.to_vec(), strength, branches })
}

#[derive(Clone, Debug, Serialize)]
pub struct OutcomeSamples {
    pub seed: u64,
    pub samples: Vec<Vec<i8>>,
}

/// Born-rule samples drawn one observable at a time with a seeded ChaCha stream.
pub fn sample_outcomes(
    psi: &PureState,
    ops: &[PauliOperator],
    strength: Strength,
    seed: u64,
    n_samples: usize,
) -> Result<OutcomeSamples> {
    let strings = check_ops(psi.n_qubits(), ops)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = strength.completeness().sqrt();
    let mut samples = Vec::with_capacity(n_samples);
    // Conditional branches are cached by prefix so repeated paths cost nothing.
    let mut cache: HashMap<Vec<i8>, (f64, Vec<C64>)> = HashMap::new();
    for _ in 0..n_samples {
        let mut prefix: Vec<i8> = Vec::with_capacity(ops.len());
        let mut v = psi.amplitudes().to_vec();
        let mut weight = 1.0;
        for i in 0..ops.len() {
            let mut plus = prefix.clone();
            plus.push(1);
            let (w_plus, v_plus) = cache
                .entry(plus.clone())
                .or_insert_with(|| {
                    let u: Vec<C64> = apply_kraus(&v, &strings[i..=i], &[1], strength).iter().map(|x| x / scale).collect();
                    (u.iter().map(|x| x.norm_sqr()).sum::<f64>(), u)
                })
                .clone();
            let p_plus = w_plus / weight;
            if rng.gen::<f64>() < p_plus {
                prefix = plus;
                v = v_plus;
                weight = w_plus;
            } else {
                prefix.push(-1);
                let u: Vec<C64> = apply_kraus(&v, &strings[i..=i], &[-1], strength).iter().map(|x| x / scale).collect();
                weight = u.iter().map(|x| x.norm_sqr()).sum::<f64>();
                v = u;
            }
        }
        samples.push(prefix);
    }
    Ok(OutcomeSamples { seed, samples })
}

fn ladder_rungs(psi: &PureState, m: usize) -> Result<usize> {
    let n = psi.n_qubits();
    if n % 2 != 0 || n / 2 != m {
        return Err(Error::arg("ensemble", "expected one measured observable per ladder rung"));
    }
    Ok(n / 2)
}

fn zz_chain2(rungs: usize, j: usize, k: usize) -> PauliOperator {
    let n = 2 * rungs;
    PauliOperator::term(n, 1.0, &[(ladder_qubit(j, 2), Letter::Z), (ladder_qubit(k, 2), Letter::Z)])
}

fn sign_product(s: &[i8], range: std::ops::RangeInclusive<usize>) -> f64 {
    s[range].iter().map(|&x| x as f64).product()
}

fn check_pair(rungs: usize, j: usize, k: usize) -> Result<()> {
    if j >= k || k >= rungs {
        return Err(Error::arg("j,k", format!("need j < k < {rungs}, got ({j}, {k})")));
    }
    Ok(())
}

/// `Σ_s p_s ⟨Z_{j,2}Z_{k,2}⟩_s s_{j+1}⋯s_k` over the full ensemble.
pub fn decoded_correlator(ens: &OutcomeEnsemble, j: usize, k: usize) -> Result<f64> {
    let rungs = ladder_rungs(&ens.state, ens.ops.len())?;
    check_pair(rungs, j, k)?;
    let zz = zz_chain2(rungs, j, k);
    ens.average(|s, post| Ok(post.expectation(&zz)?.re * sign_product(s, j + 1..=k)))
}

/// The same correlator with the signs replaced by the measured operators:
/// `⟨ψ|Z_{j,2}Z_{k,2} ∏_{i=j+1}^{k} X_{i,1}|ψ⟩`. Exact for projective chain-1 measurements.
pub fn decoded_correlator_inserted(psi: &PureState, j: usize, k: usize) -> Result<f64> {
    let rungs = ladder_rungs(psi, psi.n_qubits() / 2)?;
    check_pair(rungs, j, k)?;
    let mut letters = vec![(ladder_qubit(j, 2), Letter::Z), (ladder_qubit(k, 2), Letter::Z)];
    letters.extend((j + 1..=k).map(|i| (ladder_qubit(i, 1), Letter::X)));
    Ok(psi.expectation(&PauliOperator::term(2 * rungs, 1.0, &letters))?.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub n: usize,
}

/// Monte Carlo estimate of the decoded correlator from sampled outcomes.
pub fn decoded_correlator_sampled(
    psi: &PureState,
    ops: &[PauliOperator],
    strength: Strength,
    samples: &OutcomeSamples,
    j: usize,
    k: usize,
) -> Result<Estimate> {
    let rungs = ladder_rungs(psi, ops.len())?;
    check_pair(rungs, j, k)?;
    let n = samples.samples.len();
    if n < 2 {
        return Err(Error::arg("samples", "need at least two samples for an error bar"));
    }
    let zz = zz_chain2(rungs, j, k);
    let mut cache: HashMap<&[i8], f64> = HashMap::new();
    let mut xs = Vec::with_capacity(n);
    for s in &samples.samples {
        let v = match cache.get(s.as_slice()) {
            Some(v) => *v,
            None => {
                let v = deform_with(psi, ops, s, strength)?.expectation(&zz)?.re;
                cache.insert(s, v);
                v
            }
        };
        xs.push(v * sign_product(s, j + 1..=k));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    Ok(Estimate { mean, stderr: (var / n as f64).sqrt(), n })
}

/// `Σ_j s_1⋯s_j Z_{j,2}`, the generator of the outcome-dependent imprinter.
pub fn outcome_generator(rungs: usize, s: &[i8]) -> Result<PauliOperator> {
    if s.len() != rungs {
        return Err(Error::DimensionMismatch { expected: rungs, got: s.len() });
    }
    let mut sign = 1.0;
    let mut signs = Vec::with_capacity(rungs);
    for &x in s {
        sign *= x as f64;
        signs.push(sign);
    }
    let n = 2 * rungs;
    let mut g = PauliOperator::zero(n);
    for (j, c) in signs.into_iter().enumerate() {
        g.add_term(PauliString::from_sites(n, &[(ladder_qubit(j, 2), Letter::Z)]), C64::new(c, 0.0));
    }
    Ok(g)
}

/// `∏_j e^{iθ s_1⋯s_j Z_{j,2}}` realized as `X_S e^{iθΣZ_{j,2}} X_S` with `S` the negative-sign sites.
pub fn outcome_imprint(state: &PureState, s: &[i8], theta: f64) -> Result<PureState> {
    let rungs = state.n_qubits() / 2;
    let g = outcome_generator(rungs, s)?;
    let n = 2 * rungs;
    let flips: Vec<(usize, Letter)> = (0..rungs)
        .filter(|&j| g.coefficient(&PauliString::from_sites(n, &[(ladder_qubit(j, 2), Letter::Z)])).re < 0.0)
        .map(|j| (ladder_qubit(j, 2), Letter::X))
        .collect();
    let xs = PauliOperator::term(n, 1.0, &flips);
    let mut uniform = PauliOperator::weighted_sum(n, Letter::Z, |q| (q % 2) as f64);
    uniform.prune(0.0);
    let flipped = PureState::new(n, xs.apply(state.amplitudes()))?;
    let imprinted = flipped.evolve_phase(&uniform, theta)?;
    PureState::new(n, xs.apply(imprinted.amplitudes()))
}

/// `4·Var_{ψ_s}(Σ_j s_1⋯s_j Z_{j,2})`.
pub fn outcome_qfi(post: &PureState, s: &[i8]) -> Result<f64> {
    let g = outcome_generator(post.n_qubits() / 2, s)?;
    Ok(4.0 * post.variance(&g)?)
}

/// `Σ_s p_s F_Q^s` by explicit enumeration.
pub fn averaged_qfi(ens: &OutcomeEnsemble) -> Result<f64> {
    ladder_rungs(&ens.state, ens.ops.len())?;
    ens.average(|s, post| outcome_qfi(post, s))
}

/// The averaged QFI assembled from decoded correlators:
/// `4[L + 2Σ_{j<k} ⟨Z_{j,2}Z_{k,2}⟩_d − Σ_s p_s ⟨G_s⟩²]`.
pub fn averaged_qfi_from_decoded(ens: &OutcomeEnsemble) -> Result<f64> {
    let rungs = ladder_rungs(&ens.state, ens.ops.len())?;
    let pairs: Vec<(usize, usize)> = (0..rungs).flat_map(|j| (j + 1..rungs).map(move |k| (j, k))).collect();
    let zd: Vec<f64> = pairs.par_iter().map(|&(j, k)| decoded_correlator(ens, j, k)).collect::<Result<_>>()?;
    let mean_sq = ens.average(|s, post| {
        let g = outcome_generator(rungs, s)?;
        Ok(post.expectation(&g)?.re.powi(2))
    })?;
    Ok(4.0 * (rungs as f64 + 2.0 * zd.iter().sum::<f64>() - mean_sq))
}

#[derive(Clone, Debug, Serialize)]
pub struct LroReport {
    pub rungs: usize,
    pub betas: Vec<f64>,
    /// `⟨Z_{0,2}Z_{L−1,2}⟩` on the uniformly deformed state.
    pub correlators: Vec<f64>,
    pub monotone: bool,
    /// Ratio of the value at the largest `β` to `|value at β = 0|`.
    pub enhancement: f64,
    /// Largest-`β` value exceeds three times `|value at β = 0|`.
    pub threefold: bool,
}

/// Long-range order on chain 2 after a uniform `e^{β s ΣX_{j,1}}` deformation of the ladder ground state.
///
/// The ground state has `∏X_{j,1} = +1`, so `s = −1` on an odd number of rungs
/// drives it towards zero rather than towards an ordered state.
pub fn uniform_outcome_lro_check(rungs: usize, betas: &[f64], sign: i8) -> Result<LroReport> {
    if rungs < 2 {
        return Err(Error::arg("rungs", "need at least two rungs"));
    }
    if betas.is_empty() {
        return Err(Error::arg("betas", "empty grid"));
    }
    let psi = solve(&ModelSpec::cluster_ladder(rungs))?.state;
    let sites: Vec<usize> = (0..rungs).map(|j| ladder_qubit(j, 1)).collect();
    let zz = zz_chain2(rungs, 0, rungs - 1);
    let correlators: Vec<f64> = betas
        .par_iter()
        .map(|&b| {
            let spec = DeformationSpec::uniform(Strength::new(b)?, Letter::X, sites.clone(), sign);
            Ok(deform(&psi, &spec)?.expectation(&zz)?.re)
        })
        .collect::<Result<_>>()?;
    // the sign of the order depends on s; growth is judged on magnitudes
    let monotone = correlators.windows(2).all(|w| w[1].abs() >= w[0].abs() - 1e-12);
    let base = psi.expectation(&zz)?.re;
    let last = correlators.last().unwrap().abs();
    let enhancement = last / base.abs();
    let threefold = last > 3.0 * base.abs();
    Ok(LroReport { rungs, betas: betas.to_vec(), correlators, monotone, enhancement, threefold })
}

/// Connected `⟨Z_0Z_r⟩ − ⟨Z_0⟩⟨Z_r⟩` on a chain, for `r = 1, …, r_max`.
pub fn connected_zz(psi: &PureState, r_max: usize) -> Result<Vec<f64>> {
    let n = psi.n_qubits();
    if r_max >= n {
        return Err(Error::arg("r_max", "separation exceeds the chain"));
    }
    let z0 = psi.expectation(&PauliOperator::single(n, 0, Letter::Z))?.re;
    (1..=r_max)
        .map(|r| {
            let zr = psi.expectation(&PauliOperator::single(n, r, Letter::Z))?.re;
            let zz = psi.expectation(&PauliOperator::term(n, 1.0, &[(0, Letter::Z), (r, Letter::Z)]))?.re;
            Ok(zz - z0 * zr)
        })
        .collect()
}
