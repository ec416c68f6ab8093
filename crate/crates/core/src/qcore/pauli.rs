use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use faer::Mat;

use crate::numeric::{DENSE_QUBIT_CAP, TOL};
use crate::{Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    pub fn from_char(c: char) -> Option<Letter> {
        match c.to_ascii_uppercase() {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }
}

/// Bit of the basis index that belongs to `site` in an `n`-qubit register.
#[inline]
pub fn site_bit(n: usize, site: usize) -> u64 {
    1u64 << (n - 1 - site)
}

/// A Pauli string stored as flip (`x`) and phase (`z`) masks over basis-index bits.
/// `Y` sets both bits; the string denotes `i^{|x&z|} X^x Z^z`, i.e. plain `⊗ σ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    pub x: u64,
    pub z: u64,
}

impl PauliString {
    pub const IDENTITY: PauliString = PauliString { x: 0, z: 0 };

    pub fn from_sites(n: usize, letters: &[(usize, Letter)]) -> PauliString {
        let mut p = PauliString::IDENTITY;
        for &(site, l) in letters {
            assert!(site < n, "site {site} out of range for {n} qubits");
            let b = site_bit(n, site);
            let (fx, fz) = l.bits();
            // a repeated site multiplies letters; we only use distinct sites here
            if fx {
                p.x ^= b;
            }
            if fz {
                p.z ^= b;
            }
        }
        p
    }

    pub fn letter(&self, n: usize, site: usize) -> Letter {
        let b = site_bit(n, site);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    pub fn weight(&self) -> u32 {
        (self.x | self.z).count_ones()
    }

    pub fn is_diagonal(&self) -> bool {
        self.x == 0
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        ((self.x & other.z).count_ones() + (self.z & other.x).count_ones()) % 2 == 0
    }

    /// Phase `c` and basis image of `P|b⟩ = c|b ^ x⟩`.
    #[inline]
    pub fn act(&self, b: u64) -> (C64, u64) {
        let ny = (self.x & self.z).count_ones();
        let sign = (b & self.z).count_ones() & 1;
        (phase_i(ny + 2 * sign), b ^ self.x)
    }

    /// `self · other = phase · result`.
    pub fn mul(&self, other: &PauliString) -> (C64, PauliString) {
        // σ = i^{|x&z|} X^x Z^z ; Z^z X^{x'} = (-1)^{|z&x'|} X^{x'} Z^z
        let k = (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones();
        let r = PauliString { x: self.x ^ other.x, z: self.z ^ other.z };
        let kr = (r.x & r.z).count_ones();
        // i^{k} X^{x^x'} Z^{z^z'} = i^{k - kr} σ_r
        (phase_i(k + 4 * 64 - kr), r)
    }

    pub fn to_letters(&self, n: usize) -> String {
        (0..n)
            .map(|s| match self.letter(n, s) {
                Letter::I => 'I',
                Letter::X => 'X',
                Letter::Y => 'Y',
                Letter::Z => 'Z',
            })
            .collect()
    }
}

#[inline]
fn phase_i(k: u32) -> C64 {
    match k % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, 1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, -1.0),
    }
}

/// Weighted sum of Pauli strings on `n` qubits, merged by string.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliOperator {
    n: usize,
    terms: BTreeMap<PauliString, C64>,
}

impl PauliOperator {
    pub fn zero(n: usize) -> Self {
        assert!((1..=63).contains(&n), "register size {n} unsupported");
        PauliOperator { n, terms: BTreeMap::new() }
    }

    pub fn identity(n: usize) -> Self {
        let mut op = Self::zero(n);
        op.add_term(PauliString::IDENTITY, C64::new(1.0, 0.0));
        op
    }

    pub fn term(n: usize, coeff: f64, letters: &[(usize, Letter)]) -> Self {
        let mut op = Self::zero(n);
        op.add_term(PauliString::from_sites(n, letters), C64::new(coeff, 0.0));
        op
    }

    pub fn single(n: usize, site: usize, l: Letter) -> Self {
        Self::term(n, 1.0, &[(site, l)])
    }

    /// Parse a letter string such as `"XIZ"` (site 0 first).
    pub fn from_letters(coeff: C64, letters: &str) -> Result<Self> {
        let n = letters.chars().count();
        if n == 0 {
            return Err(Error::arg("letters", "empty Pauli string"));
        }
        let mut sites = Vec::with_capacity(n);
        for (i, c) in letters.chars().enumerate() {
            let l = Letter::from_char(c)
                .ok_or_else(|| Error::arg("letters", format!("unknown Pauli letter `{c}`")))?;
            sites.push((i, l));
        }
        let mut op = Self::zero(n);
        op.add_term(PauliString::from_sites(n, &sites), coeff);
        Ok(op)
    }

    /// `Σ_j w_j σ^l_j`.
    pub fn weighted_sum(n: usize, l: Letter, weights: impl Fn(usize) -> f64) -> Self {
        let mut op = Self::zero(n);
        for j in 0..n {
            op.add_term(PauliString::from_sites(n, &[(j, l)]), C64::new(weights(j), 0.0));
        }
        op.prune(0.0);
        op
    }

    pub fn sum_of(n: usize, l: Letter) -> Self {
        Self::weighted_sum(n, l, |_| 1.0)
    }

    /// `∏_j σ^l_j` over the given sites.
    pub fn product_of(n: usize, l: Letter, sites: impl IntoIterator<Item = usize>) -> Self {
        let s: Vec<_> = sites.into_iter().map(|j| (j, l)).collect();
        Self::term(n, 1.0, &s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&PauliString, &C64)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, p: &PauliString) -> C64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, p: PauliString, c: C64) {
        let e = self.terms.entry(p).or_default();
        *e += c;
    }

    /// Drop terms with `|c| <= tol`.
    pub fn prune(&mut self, tol: f64) {
        self.terms.retain(|_, c| c.norm() > tol);
    }

    pub fn scaled(&self, s: C64) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c *= s;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        let mut out = self.clone();
        for c in out.terms.values_mut() {
            *c = c.conj();
        }
        out
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_deviation() <= 1e-12
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let d = self.hermiticity_deviation();
        if d > 1e-12 {
            Err(Error::NotHermitian { deviation: d })
        } else {
            Ok(())
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.terms.keys().all(|p| p.is_diagonal())
    }

    /// Single string with unit-modulus real coefficient, i.e. a ±1-valued observable.
    pub fn as_signed_string(&self) -> Option<(PauliString, f64)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (p, c) = self.terms.iter().next().unwrap();
        if c.im.abs() < 1e-12 && (c.re.abs() - 1.0).abs() < 1e-12 {
            Some((*p, c.re.signum()))
        } else {
            None
        }
    }

    pub fn commutes_with(&self, other: &PauliOperator) -> bool {
        let c = self * other - other * self;
        c.terms.values().all(|v| v.norm() < TOL.commutator)
    }

    pub fn anticommutes_with(&self, other: &PauliOperator) -> bool {
        let c = self * other + other * self;
        c.terms.values().all(|v| v.norm() < TOL.commutator)
    }

    /// Diagonal of an `{I,Z}`-only operator.
    pub fn diagonal(&self) -> Option<Vec<C64>> {
        if !self.is_diagonal() {
            return None;
        }
        let dim = self.dim();
        let mut d = vec![C64::default(); dim];
        for (p, &c) in &self.terms {
            for (b, v) in d.iter_mut().enumerate() {
                if (b as u64 & p.z).count_ones() & 1 == 1 {
                    *v -= c;
                } else {
                    *v += c;
                }
            }
        }
        Some(d)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::default(); v.len()];
        self.apply_add(v, &mut out);
        out
    }

    /// `out += self · v`.
    pub fn apply_add(&self, v: &[C64], out: &mut [C64]) {
        assert_eq!(v.len(), self.dim(), "vector length does not match operator");
        for (p, &c) in &self.terms {
            let base = c * phase_i((p.x & p.z).count_ones());
            let neg = -base;
            for (b, &a) in v.iter().enumerate() {
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let b = b as u64;
                let w = if (b & p.z).count_ones() & 1 == 1 { neg } else { base };
                out[(b ^ p.x) as usize] += w * a;
            }
        }
    }

    pub fn to_matrix(&self) -> Result<Mat<C64>> {
        self.to_matrix_capped(DENSE_QUBIT_CAP)
    }

    pub fn to_matrix_capped(&self, cap: usize) -> Result<Mat<C64>> {
        if self.n > cap {
            return Err(Error::Capacity { what: "dense operator", n: self.n, cap });
        }
        let dim = self.dim();
        let mut m = Mat::<C64>::zeros(dim, dim);
        for (p, &c) in &self.terms {
            for b in 0..dim as u64 {
                let (ph, r) = p.act(b);
                m[(r as usize, b as usize)] += c * ph;
            }
        }
        Ok(m)
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (p, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if c.im == 0.0 {
                write!(f, "{}·{}", c.re, p.to_letters(self.n))?;
            } else {
                write!(f, "({})·{}", c, p.to_letters(self.n))?;
            }
        }
        Ok(())
    }
}

impl Add<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;
    fn add(self, rhs: &PauliOperator) -> PauliOperator {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (p, &c) in &rhs.terms {
            out.add_term(*p, c);
        }
        out.prune(0.0);
        out
    }
}

impl Sub<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;
    fn sub(self, rhs: &PauliOperator) -> PauliOperator {
        self + &(-rhs)
    }
}

impl Neg for &PauliOperator {
    type Output = PauliOperator;
    fn neg(self) -> PauliOperator {
        self.scaled(C64::new(-1.0, 0.0))
    }
}

impl Mul<&PauliOperator> for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: &PauliOperator) -> PauliOperator {
        assert_eq!(self.n, rhs.n);
        let mut out = PauliOperator::zero(self.n);
        for (p, &a) in &self.terms {
            for (q, &b) in &rhs.terms {
                let (ph, r) = p.mul(q);
                out.add_term(r, a * b * ph);
            }
        }
        out.prune(0.0);
        out
    }
}

impl Mul<f64> for &PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: f64) -> PauliOperator {
        self.scaled(C64::new(rhs, 0.0))
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<PauliOperator> for PauliOperator {
            type Output = PauliOperator;
            fn $m(self, rhs: PauliOperator) -> PauliOperator {
                (&self).$m(&rhs)
            }
        }
        impl $tr<&PauliOperator> for PauliOperator {
            type Output = PauliOperator;
            fn $m(self, rhs: &PauliOperator) -> PauliOperator {
                (&self).$m(rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Mul<f64> for PauliOperator {
    type Output = PauliOperator;
    fn mul(self, rhs: f64) -> PauliOperator {
        (&self) * rhs
    }
}

impl Neg for PauliOperator {
    type Output = PauliOperator;
    fn neg(self) -> PauliOperator {
        -(&self)
    }
}
