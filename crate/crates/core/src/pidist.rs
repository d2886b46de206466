//! Balanced pairwise-independent distributions supported on parity predicates.
//!
//! Every distribution used on the Sherali-Adams side is symmetric: its
//! probability of a tuple depends only on how many coordinates are `0`. Such a
//! distribution is a [`WeightDistribution`] (mass per zero count) lifted to
//! alphabet `q` by spreading each nonzero coordinate uniformly over
//! `1..q`. Large lifts are never materialized; marginals of symmetric
//! distributions are computed combinatorially, and [`AtomDistribution`]
//! gives the explicit path for small cases so the two can be compared.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exactlp::{self, FarkasCertificate, Feasibility, LinearProgram, Relation};
use crate::rational::{self, int, ratio, Rational};

/// Atom-count above which distributions are checked through weight classes only.
pub const MAX_ATOMS: u64 = 1_000_000;
/// Above this many atoms `verify` switches from enumeration to the
/// weight-class computation; both are exact.
pub const ENUMERATION_LIMIT: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PredicateKind {
    #[serde(rename = "odd")]
    Odd,
    #[serde(rename = "even")]
    Even,
    #[serde(rename = "geq1zero")]
    AtLeastOneZero,
}

impl PredicateKind {
    /// Whether a tuple with `count` marked coordinates is accepted.
    pub fn accepts(self, count: usize) -> bool {
        match self {
            PredicateKind::Odd => count % 2 == 1,
            PredicateKind::Even => count.is_multiple_of(2),
            PredicateKind::AtLeastOneZero => count >= 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PredicateKind::Odd => "odd",
            PredicateKind::Even => "even",
            PredicateKind::AtLeastOneZero => "geq1zero",
        }
    }

    /// Parity of a direct sum: odd ⊕ odd = even, odd ⊕ even = odd.
    pub fn combine(self, other: PredicateKind) -> Option<PredicateKind> {
        use PredicateKind::*;
        match (self, other) {
            (Odd, Odd) | (Even, Even) => Some(Even),
            (Odd, Even) | (Even, Odd) => Some(Odd),
            _ => None,
        }
    }
}

impl fmt::Display for PredicateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PredicateKind {
    type Err = PiError;

    fn from_str(s: &str) -> Result<Self, PiError> {
        match s {
            "odd" => Ok(PredicateKind::Odd),
            "even" => Ok(PredicateKind::Even),
            "geq1zero" => Ok(PredicateKind::AtLeastOneZero),
            other => Err(PiError::UnknownKind(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PiError {
    #[error("unknown predicate kind `{0}`")]
    UnknownKind(String),
    #[error("no construction for k={k}, q={q}, {kind}")]
    Uncovered { k: usize, q: u32, kind: PredicateKind },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("invalid distribution: {0}")]
    Invalid(String),
    #[error("distribution has {0} atoms, above the materialization cap")]
    TooManyAtoms(u64),
}

pub fn zero_count(tuple: &[u32]) -> usize {
    tuple.iter().filter(|&&g| g == 0).count()
}

fn binomial(n: usize, r: usize) -> BigInt {
    if r > n {
        return BigInt::zero();
    }
    let mut acc = BigInt::one();
    for i in 0..r {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

// ---------------------------------------------------------------------------
// Explicit atom distributions
// ---------------------------------------------------------------------------

/// Exact distribution on `{0..q}^k` stored by support.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomDistribution {
    q: u32,
    k: usize,
    atoms: BTreeMap<Vec<u32>, Rational>,
}

#[derive(Serialize, Deserialize)]
struct AtomDoc {
    tuple: Vec<u32>,
    #[serde(with = "rational::serde_str")]
    prob: Rational,
}

#[derive(Serialize, Deserialize)]
struct DistributionDoc {
    q: u32,
    k: usize,
    atoms: Vec<AtomDoc>,
}

impl AtomDistribution {
    /// Validates distinct in-range tuples of length `k`, nonnegative masses
    /// and total mass exactly 1. Zero-mass atoms are dropped.
    pub fn new(q: u32, k: usize, atoms: Vec<(Vec<u32>, Rational)>) -> Result<Self, PiError> {
        if q < 2 {
            return Err(PiError::Parameter(format!("alphabet size {q} < 2")));
        }
        let mut map = BTreeMap::new();
        let mut total = Rational::zero();
        for (t, p) in atoms {
            if t.len() != k {
                return Err(PiError::Invalid(format!("tuple of length {} in arity {k}", t.len())));
            }
            if t.iter().any(|&g| g >= q) {
                return Err(PiError::Invalid(format!("symbol out of range in {t:?}")));
            }
            if p.is_negative() {
                return Err(PiError::Invalid(format!("negative mass on {t:?}")));
            }
            total += &p;
            if map.insert(t.clone(), p).is_some() {
                return Err(PiError::Invalid(format!("repeated atom {t:?}")));
            }
        }
        if total != Rational::one() {
            return Err(PiError::Invalid(format!("total mass {}", rational::format_rational(&total))));
        }
        map.retain(|_, p| !p.is_zero());
        Ok(AtomDistribution { q, k, atoms: map })
    }

    pub fn uniform(q: u32, k: usize) -> Result<Self, PiError> {
        let count = (q as u64).checked_pow(k as u32).filter(|&c| c <= MAX_ATOMS);
        let count = count.ok_or(PiError::TooManyAtoms(u64::MAX))?;
        let p = Rational::new(BigInt::one(), BigInt::from(count));
        let atoms = (0..count)
            .map(|mut idx| {
                let mut t = vec![0u32; k];
                for slot in t.iter_mut().rev() {
                    *slot = (idx % q as u64) as u32;
                    idx /= q as u64;
                }
                (t, p.clone())
            })
            .collect();
        Self::new(q, k, atoms)
    }

    pub fn point_mass(q: u32, tuple: Vec<u32>) -> Result<Self, PiError> {
        let k = tuple.len();
        Self::new(q, k, vec![(tuple, Rational::one())])
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn atoms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.atoms.iter()
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn prob(&self, tuple: &[u32]) -> Rational {
        self.atoms.get(tuple).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn to_json(&self) -> String {
        let doc = DistributionDoc {
            q: self.q,
            k: self.k,
            atoms: self
                .atoms
                .iter()
                .map(|(t, p)| AtomDoc {
                    tuple: t.clone(),
                    prob: p.clone(),
                })
                .collect(),
        };
        serde_json::to_string(&doc).expect("distribution serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, PiError> {
        let doc: DistributionDoc = serde_json::from_str(text).map_err(|e| PiError::Invalid(e.to_string()))?;
        Self::new(doc.q, doc.k, doc.atoms.into_iter().map(|a| (a.tuple, a.prob)).collect())
    }
}

/// Failed marginal: coordinates `i` (and `j`), symbols `g` (and `h`), and the
/// observed probability.
#[derive(Debug, Clone, PartialEq)]
pub struct PiWitness {
    pub i: usize,
    pub j: Option<usize>,
    pub g: u32,
    pub h: Option<u32>,
    pub value: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiReport {
    pub balanced: bool,
    pub pairwise: bool,
    pub witness: Option<PiWitness>,
}

impl PiReport {
    pub fn ok(&self) -> bool {
        self.balanced && self.pairwise
    }
}

/// Exact single and pair marginals from the atoms.
pub fn verify_pi(dist: &AtomDistribution) -> PiReport {
    let (q, k) = (dist.q as usize, dist.k);
    let target1 = ratio(1, q as i64);
    let target2 = ratio(1, (q * q) as i64);
    let mut single = vec![vec![Rational::zero(); q]; k];
    let mut pair = vec![Rational::zero(); k * k * q * q];
    for (t, p) in &dist.atoms {
        for i in 0..k {
            single[i][t[i] as usize] += p;
            for j in i + 1..k {
                pair[((i * k + j) * q + t[i] as usize) * q + t[j] as usize] += p;
            }
        }
    }
    let mut report = PiReport {
        balanced: true,
        pairwise: true,
        witness: None,
    };
    'single: for (i, row) in single.iter().enumerate() {
        for (g, v) in row.iter().enumerate() {
            if *v != target1 {
                report.balanced = false;
                report.witness = Some(PiWitness {
                    i,
                    j: None,
                    g: g as u32,
                    h: None,
                    value: v.clone(),
                });
                break 'single;
            }
        }
    }
    'pair: for i in 0..k {
        for j in i + 1..k {
            for g in 0..q {
                for h in 0..q {
                    let v = &pair[((i * k + j) * q + g) * q + h];
                    if *v != target2 {
                        report.pairwise = false;
                        if report.witness.is_none() {
                            report.witness = Some(PiWitness {
                                i,
                                j: Some(j),
                                g: g as u32,
                                h: Some(h as u32),
                                value: v.clone(),
                            });
                        }
                        break 'pair;
                    }
                }
            }
        }
    }
    report
}

/// First atom whose zero count is rejected by `kind`, if any.
pub fn parity_violation(dist: &AtomDistribution, kind: PredicateKind) -> Option<Vec<u32>> {
    dist.atoms
        .keys()
        .find(|t| !kind.accepts(zero_count(t)))
        .cloned()
}

pub fn verify_parity_support(dist: &AtomDistribution, kind: PredicateKind) -> bool {
    parity_violation(dist, kind).is_none()
}

/// Replaces every nonzero coordinate of a binary distribution by a uniform
/// symbol in `1..q`. An x-atom with `w` ones becomes `(q−1)^w` atoms.
pub fn lift_atoms(x: &AtomDistribution, q: u32) -> Result<AtomDistribution, PiError> {
    if x.q != 2 {
        return Err(PiError::Parameter("lift expects a binary distribution".into()));
    }
    if q < 2 {
        return Err(PiError::Parameter(format!("alphabet size {q} < 2")));
    }
    let mut total: u64 = 0;
    for t in x.atoms.keys() {
        let w = t.len() - zero_count(t);
        total = total.saturating_add((q as u64 - 1).saturating_pow(w as u32));
    }
    if total > MAX_ATOMS {
        return Err(PiError::TooManyAtoms(total));
    }
    let mut out = Vec::new();
    for (t, p) in &x.atoms {
        let ones: Vec<usize> = (0..t.len()).filter(|&i| t[i] != 0).collect();
        let count = (q as u64 - 1).pow(ones.len() as u32);
        let share = p / Rational::from_integer(BigInt::from(count));
        for mut idx in 0..count {
            let mut y = vec![0u32; t.len()];
            for &i in ones.iter().rev() {
                y[i] = 1 + (idx % (q as u64 - 1)) as u32;
                idx /= q as u64 - 1;
            }
            out.push((y, share.clone()));
        }
    }
    AtomDistribution::new(q, x.k, out)
}

// ---------------------------------------------------------------------------
// Symmetric distributions
// ---------------------------------------------------------------------------

/// Mass per number of zero coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightDistribution {
    k: usize,
    weights: BTreeMap<usize, Rational>,
}

impl WeightDistribution {
    /// Masses for equal zero counts are summed; zero masses dropped.
    pub fn new(k: usize, entries: impl IntoIterator<Item = (usize, Rational)>) -> Result<Self, PiError> {
        let mut weights: BTreeMap<usize, Rational> = BTreeMap::new();
        for (r, a) in entries {
            if r > k {
                return Err(PiError::Invalid(format!("zero count {r} exceeds arity {k}")));
            }
            *weights.entry(r).or_insert_with(Rational::zero) += a;
        }
        if let Some((r, _)) = weights.iter().find(|(_, a)| a.is_negative()) {
            return Err(PiError::Invalid(format!("negative mass at zero count {r}")));
        }
        let total: Rational = weights.values().sum();
        if total != Rational::one() {
            return Err(PiError::Invalid(format!("total mass {}", rational::format_rational(&total))));
        }
        weights.retain(|_, a| !a.is_zero());
        Ok(WeightDistribution { k, weights })
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn weight(&self, r: usize) -> Rational {
        self.weights.get(&r).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn weights(&self) -> &BTreeMap<usize, Rational> {
        &self.weights
    }

    /// The binary distribution that is uniform within each zero-count class.
    pub fn to_binary_atoms(&self) -> Result<AtomDistribution, PiError> {
        if self.k >= 20 {
            return Err(PiError::TooManyAtoms(1 << self.k.min(63)));
        }
        let mut atoms = Vec::new();
        for mask in 0u32..(1 << self.k) {
            let t: Vec<u32> = (0..self.k).map(|i| (mask >> i) & 1).collect();
            let r = zero_count(&t);
            if let Some(a) = self.weights.get(&r) {
                atoms.push((t, a / Rational::from_integer(binomial(self.k, r))));
            }
        }
        AtomDistribution::new(2, self.k, atoms)
    }

    pub fn lift(&self, q: u32) -> SymmetricDistribution {
        SymmetricDistribution { q, weights: self.clone() }
    }
}

/// A [`WeightDistribution`] lifted to alphabet `q`:
/// `μ(y) = a_r / (C(k,r) (q−1)^{k−r})` with `r` the zero count of `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricDistribution {
    q: u32,
    weights: WeightDistribution,
}

impl SymmetricDistribution {
    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn arity(&self) -> usize {
        self.weights.k
    }

    pub fn weights(&self) -> &WeightDistribution {
        &self.weights
    }

    pub fn prob(&self, tuple: &[u32]) -> Rational {
        let k = self.weights.k;
        debug_assert_eq!(tuple.len(), k);
        let r = zero_count(tuple);
        match self.weights.weights.get(&r) {
            None => Rational::zero(),
            Some(a) => {
                let den = binomial(k, r) * BigInt::from(self.q - 1).pow((k - r) as u32);
                a / Rational::from_integer(den)
            }
        }
    }

    /// Whether a tuple has positive probability.
    pub fn supports(&self, tuple: &[u32]) -> bool {
        self.weights.weights.contains_key(&zero_count(tuple))
    }

    pub fn atom_count(&self) -> u64 {
        let k = self.weights.k;
        self.weights
            .weights
            .keys()
            .map(|&r| {
                let c: u64 = binomial(k, r).try_into().unwrap_or(u64::MAX);
                c.saturating_mul((self.q as u64 - 1).saturating_pow((k - r) as u32))
            })
            .fold(0u64, u64::saturating_add)
    }

    pub fn to_atoms(&self) -> Result<AtomDistribution, PiError> {
        let count = self.atom_count();
        if count > MAX_ATOMS {
            return Err(PiError::TooManyAtoms(count));
        }
        lift_atoms(&self.weights.to_binary_atoms()?, self.q)
    }

    pub fn zero_counts_match(&self, kind: PredicateKind) -> bool {
        self.weights.weights.keys().all(|&r| kind.accepts(r))
    }

    /// Single and pair marginals from the weight classes alone. By symmetry
    /// every coordinate (pair) has the same marginal, so five numbers decide.
    pub fn verify_symmetric(&self) -> PiReport {
        let k = self.weights.k as i64;
        let q = self.q as i64;
        let qm1 = int(q - 1);
        let mut p0 = Rational::zero();
        let mut p00 = Rational::zero();
        let mut p0g = Rational::zero();
        let mut pgh = Rational::zero();
        for (&r, a) in &self.weights.weights {
            let r = r as i64;
            p0 += a * ratio(r, k);
            if k >= 2 {
                let pairs = k * (k - 1);
                p00 += a * ratio(r * (r - 1), pairs);
                p0g += a * ratio(r * (k - r), pairs);
                pgh += a * ratio((k - r) * (k - r - 1), pairs);
            }
        }
        let pg = (Rational::one() - &p0) / &qm1;
        let p0g = p0g / &qm1;
        let pgh = pgh / (&qm1 * &qm1);
        let t1 = ratio(1, q);
        let t2 = ratio(1, q * q);
        let mut report = PiReport {
            balanced: true,
            pairwise: true,
            witness: None,
        };
        for (g, v) in [(0u32, &p0), (1, &pg)] {
            if *v != t1 && report.balanced {
                report.balanced = false;
                report.witness = Some(PiWitness {
                    i: 0,
                    j: None,
                    g,
                    h: None,
                    value: v.clone(),
                });
            }
        }
        if k >= 2 {
            for (g, h, v) in [(0u32, 0u32, &p00), (0, 1, &p0g), (1, 1, &pgh)] {
                if *v != t2 && report.pairwise {
                    report.pairwise = false;
                    if report.witness.is_none() {
                        report.witness = Some(PiWitness {
                            i: 0,
                            j: Some(1),
                            g,
                            h: Some(h),
                            value: v.clone(),
                        });
                    }
                }
            }
        }
        report
    }

    /// Verification through atoms when there are few, else through weight
    /// classes.
    pub fn verify(&self) -> PiReport {
        if self.atom_count() > ENUMERATION_LIMIT {
            return self.verify_symmetric();
        }
        match self.to_atoms() {
            Ok(atoms) => verify_pi(&atoms),
            Err(_) => self.verify_symmetric(),
        }
    }
}

// ---------------------------------------------------------------------------
// Constructions with q = k − 1
// ---------------------------------------------------------------------------

/// Odd k ≥ 3, q = k − 1, p = 1/q: the all-zero x with probability p², and
/// each `1 − e_i` with probability (1 − p²)/k.
pub fn odd_weights_q_eq_kminus1(k: usize) -> Result<WeightDistribution, PiError> {
    if k < 3 || k.is_multiple_of(2) {
        return Err(PiError::Parameter(format!("odd construction needs odd k >= 3, got {k}")));
    }
    let p2 = ratio(1, ((k - 1) * (k - 1)) as i64);
    WeightDistribution::new(k, [(k, p2.clone()), (1, Rational::one() - p2)])
}

/// k ≥ 3, q = k − 1: each `1 − e_i − e_j` with probability p², and the
/// all-one x with probability (1 − p)/2.
pub fn even_weights_q_eq_kminus1(k: usize) -> Result<WeightDistribution, PiError> {
    if k < 3 {
        return Err(PiError::Parameter(format!("even construction needs k >= 3, got {k}")));
    }
    let q = (k - 1) as i64;
    let pairs = (k * (k - 1) / 2) as i64;
    WeightDistribution::new(k, [(2, ratio(pairs, q * q)), (0, ratio(q - 1, 2 * q))])
}

pub fn odd_dist_q_eq_kminus1(k: usize) -> Result<SymmetricDistribution, PiError> {
    Ok(odd_weights_q_eq_kminus1(k)?.lift((k - 1) as u32))
}

pub fn even_dist_q_eq_kminus1(k: usize) -> Result<SymmetricDistribution, PiError> {
    Ok(even_weights_q_eq_kminus1(k)?.lift((k - 1) as u32))
}

// ---------------------------------------------------------------------------
// Closed-form families
// ---------------------------------------------------------------------------

fn poly(k: i64, coeffs: &[i64]) -> i64 {
    coeffs.iter().fold(0, |acc, &c| acc * k + c)
}

fn frac(k: i64, num: &[i64], den: &[i64]) -> Rational {
    ratio(poly(k, num), poly(k, den))
}

/// Zero-count masses of the three closed-form families (coefficients listed
/// from the highest power of k down):
///
/// * even k, q = k − 2: odd on zero counts {1, 3, k−1}, even on {0, 2, 4};
/// * odd k, q = k − 3: odd on {1, 3, k}, even on {0, 2, 4};
/// * even k, q = k − 4: odd on {1, 3, k−1}, even on {0, 2, 4}.
///
/// At k = 4 in the first family the classes 3 and k−1 coincide and their
/// masses are added.
pub fn closed_form_weights(k: usize, q: u32, kind: PredicateKind) -> Result<WeightDistribution, PiError> {
    let ki = k as i64;
    let qi = q as i64;
    let uncovered = PiError::Uncovered { k, q, kind };
    let entries: Vec<(usize, Rational)> = match (k % 2, ki - qi, kind) {
        (0, 2, PredicateKind::Odd) if k >= 4 => vec![
            (1, frac(ki, &[2, -13, 25, -12], &[2, -12, 24, -16])),
            (3, frac(ki, &[1, -1], &[2, -8, 8])),
            (k - 1, frac(ki, &[1, -3], &[1, -6, 12, -8])),
        ],
        (0, 2, PredicateKind::Even) if k >= 4 => vec![
            (0, frac(ki, &[4, -23, 32], &[8, -32, 32])),
            (2, frac(ki, &[2, -5, 0], &[4, -16, 16])),
            (4, frac(ki, &[1, 0], &[8, -32, 32])),
        ],
        (1, 3, PredicateKind::Odd) if k >= 5 => vec![
            (1, frac(ki, &[1, -8, 16, 0], &[1, -7, 15, -9])),
            (3, frac(ki, &[1, -4, 0], &[1, -9, 27, -27])),
            (k, frac(ki, &[1, -10, 27], &[1, -10, 36, -54, 27])),
        ],
        (1, 3, PredicateKind::Even) if k >= 5 => vec![
            (0, frac(ki, &[2, -17, 36], &[4, -24, 36])),
            (2, frac(ki, &[1, -4, 0], &[2, -12, 18])),
            (4, frac(ki, &[1, 0], &[4, -24, 36])),
        ],
        (0, 4, PredicateKind::Odd) if k >= 6 => vec![
            (1, frac(ki, &[2, -23, 75, -48], &[2, -20, 64, -64])),
            (3, frac(ki, &[3, -19, 16], &[2, -24, 96, -128])),
            (k - 1, frac(ki, &[1, -13, 48], &[1, -14, 72, -160, 128])),
        ],
        (0, 4, PredicateKind::Even) if k >= 6 => vec![
            (0, frac(ki, &[4, -45, 128], &[8, -64, 128])),
            (2, frac(ki, &[2, -11, 0], &[4, -32, 64])),
            (4, frac(ki, &[3, 0], &[8, -64, 128])),
        ],
        _ => return Err(uncovered),
    };
    WeightDistribution::new(k, entries)
}

pub fn dist_from_closed_form(k: usize, q: u32, kind: PredicateKind) -> Result<SymmetricDistribution, PiError> {
    Ok(closed_form_weights(k, q, kind)?.lift(q))
}

// ---------------------------------------------------------------------------
// Feasibility oracle
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum PiFeasibility {
    Feasible(SymmetricDistribution),
    /// Certificate for the weight-class program; `classes[i]` is the zero
    /// count of LP variable `i`.
    Infeasible {
        program: LinearProgram,
        classes: Vec<usize>,
        certificate: FarkasCertificate,
    },
}

/// The weight-class program: variables `a_r ≥ 0` for zero counts `r`
/// accepted by `kind`, with `Σ a_r = 1`, `Σ r a_r = k/q` and
/// `Σ r(r−1) a_r = k(k−1)/q²`.
pub fn weight_class_program(k: usize, q: u32, kind: PredicateKind) -> (LinearProgram, Vec<usize>) {
    let mut lp = LinearProgram::new();
    let classes: Vec<usize> = (0..=k).filter(|&r| kind.accepts(r)).collect();
    for &r in &classes {
        lp.add_nonneg(format!("a{r}"));
    }
    let (ki, qi) = (k as i64, q as i64);
    let rows: [(Box<dyn Fn(i64) -> i64>, Rational); 3] = [
        (Box::new(|_| 1), Rational::one()),
        (Box::new(|r| r), ratio(ki, qi)),
        (Box::new(|r| r * (r - 1)), ratio(ki * (ki - 1), qi * qi)),
    ];
    for (f, rhs) in rows {
        let terms = classes.iter().enumerate().map(|(v, &r)| (v, int(f(r as i64)))).collect();
        lp.add_constraint(terms, Relation::Eq, rhs).expect("indices in range");
    }
    (lp, classes)
}

/// Whether a balanced pairwise-independent distribution on `{0..q}^k` is
/// supported on `kind`. Symmetrizing any such distribution over coordinate
/// permutations and nonzero relabelings keeps it valid, so the weight-class
/// program is exact.
pub fn pi_feasibility(k: usize, q: u32, kind: PredicateKind) -> Result<PiFeasibility, PiError> {
    if k < 2 || q < 2 {
        return Err(PiError::Parameter(format!("need k >= 2 and q >= 2, got k={k}, q={q}")));
    }
    let (lp, classes) = weight_class_program(k, q, kind);
    match exactlp::feasible(&lp) {
        Feasibility::Feasible(a) => {
            let w = WeightDistribution::new(k, classes.iter().copied().zip(a))?;
            Ok(PiFeasibility::Feasible(w.lift(q)))
        }
        Feasibility::Infeasible(certificate) => Ok(PiFeasibility::Infeasible {
            program: lp,
            classes,
            certificate,
        }),
    }
}

// ---------------------------------------------------------------------------
// Predicate table for the Sherali-Adams construction
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Construction {
    #[serde(rename = "q=k-1")]
    Direct,
    #[serde(rename = "even-k,q=k-2")]
    CaseI,
    #[serde(rename = "odd-k,q=k-3")]
    CaseII,
    #[serde(rename = "even-k,q=k-4")]
    CaseIII,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaPredicate {
    pub arity: usize,
    pub kind: PredicateKind,
    pub construction: Construction,
    pub dist: SymmetricDistribution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaPredicates {
    pub d_c: usize,
    pub q: u32,
    pub entries: Vec<SaPredicate>,
}

impl SaPredicates {
    pub fn get(&self, arity: usize, kind: PredicateKind) -> Option<&SaPredicate> {
        self.entries.iter().find(|e| e.arity == arity && e.kind == kind)
    }
}

/// `q = d_c − 3` for odd `d_c`, `q = d_c − 4` for even `d_c`, with
/// distributions for arities `d_c` and `d_c − 2` and both parities. Every
/// entry is verified before returning.
pub fn select_sa_predicates(d_c: usize) -> Result<SaPredicates, PiError> {
    if d_c < 5 {
        return Err(PiError::Parameter(format!("d_c must be at least 5, got {d_c}")));
    }
    let mut entries = Vec::new();
    let q = if d_c % 2 == 1 { d_c - 3 } else { d_c - 4 } as u32;
    for kind in [PredicateKind::Odd, PredicateKind::Even] {
        let (top, top_c, low, low_c) = if d_c % 2 == 1 {
            let low = match kind {
                PredicateKind::Odd => odd_dist_q_eq_kminus1(d_c - 2)?,
                _ => even_dist_q_eq_kminus1(d_c - 2)?,
            };
            (dist_from_closed_form(d_c, q, kind)?, Construction::CaseII, low, Construction::Direct)
        } else {
            (
                dist_from_closed_form(d_c, q, kind)?,
                Construction::CaseIII,
                dist_from_closed_form(d_c - 2, q, kind)?,
                Construction::CaseI,
            )
        };
        for (arity, construction, dist) in [(d_c, top_c, top), (d_c - 2, low_c, low)] {
            debug_assert_eq!(dist.q(), q);
            let report = dist.verify();
            if !report.ok() || !dist.zero_counts_match(kind) {
                return Err(PiError::Invalid(format!(
                    "arity {arity} {kind} distribution failed certification: {report:?}"
                )));
            }
            entries.push(SaPredicate {
                arity,
                kind,
                construction,
                dist,
            });
        }
    }
    Ok(SaPredicates { d_c, q, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn atoms(pairs: &[(&[u32], Rational)]) -> Vec<(Vec<u32>, Rational)> {
        pairs.iter().map(|(t, p)| (t.to_vec(), p.clone())).collect()
    }

    #[test]
    fn k3_constructions() {
        let odd = odd_dist_q_eq_kminus1(3).unwrap().to_atoms().unwrap();
        let quarter = ratio(1, 4);
        let expect = AtomDistribution::new(
            2,
            3,
            atoms(&[
                (&[0, 0, 0], quarter.clone()),
                (&[0, 1, 1], quarter.clone()),
                (&[1, 0, 1], quarter.clone()),
                (&[1, 1, 0], quarter.clone()),
            ]),
        )
        .unwrap();
        assert_eq!(odd, expect);
        assert!(verify_pi(&odd).ok());
        assert!(verify_parity_support(&odd, PredicateKind::Odd));

        let even = even_dist_q_eq_kminus1(3).unwrap().to_atoms().unwrap();
        let expect = AtomDistribution::new(
            2,
            3,
            atoms(&[
                (&[1, 0, 0], quarter.clone()),
                (&[0, 1, 0], quarter.clone()),
                (&[0, 0, 1], quarter.clone()),
                (&[1, 1, 1], quarter.clone()),
            ]),
        )
        .unwrap();
        assert_eq!(even, expect);
        assert_eq!(even.prob(&[0, 0, 1]), quarter);
        assert!(verify_parity_support(&even, PredicateKind::Even));
    }

    #[test]
    fn lift_examples() {
        let x = AtomDistribution::new(
            2,
            3,
            atoms(&[(&[0, 1, 1], ratio(1, 4)), (&[0, 0, 0], ratio(3, 4))]),
        )
        .unwrap();
        let same = lift_atoms(&x, 2).unwrap();
        assert_eq!(same.prob(&[0, 1, 1]), ratio(1, 4));
        let lifted = lift_atoms(&x, 3).unwrap();
        for t in [[0, 1, 1], [0, 1, 2], [0, 2, 1], [0, 2, 2]] {
            assert_eq!(lifted.prob(&t), ratio(1, 16));
        }
        assert_eq!(lifted.len(), 5);
    }

    #[test]
    fn verify_pi_failures() {
        let point = AtomDistribution::point_mass(2, vec![0, 0, 0]).unwrap();
        let r = verify_pi(&point);
        assert!(!r.balanced);
        let w = r.witness.unwrap();
        assert_eq!((w.i, w.g, w.value), (0, 0, Rational::one()));

        let uni = AtomDistribution::uniform(3, 3).unwrap();
        assert!(verify_pi(&uni).ok());
        assert!(!verify_parity_support(&uni, PredicateKind::Odd));
        assert_eq!(parity_violation(&uni, PredicateKind::Odd), Some(vec![0, 0, 1]));
    }

    #[test]
    fn rejects_malformed_distributions() {
        assert!(AtomDistribution::new(2, 2, atoms(&[(&[0, 1], ratio(1, 2))])).is_err());
        assert!(AtomDistribution::new(2, 2, atoms(&[(&[0, 2], Rational::one())])).is_err());
        assert!(AtomDistribution::new(2, 2, atoms(&[(&[0], Rational::one())])).is_err());
        assert!(AtomDistribution::new(
            2,
            1,
            atoms(&[(&[0], ratio(3, 2)), (&[1], ratio(-1, 2))])
        )
        .is_err());
        assert!(AtomDistribution::from_json(r#"{"q":2,"k":1,"atoms":[{"tuple":[0],"prob":"1/2"},{"tuple":[0],"prob":"1/2"}]}"#).is_err());
        let d = odd_dist_q_eq_kminus1(3).unwrap().to_atoms().unwrap();
        assert_eq!(AtomDistribution::from_json(&d.to_json()).unwrap(), d);
    }

    /// Solve the 3×3 moment system on the given zero counts by Cramer's rule.
    fn solve_moments(k: usize, q: u32, classes: [usize; 3]) -> [Rational; 3] {
        let (ki, qi) = (k as i64, q as i64);
        let rows: Vec<[Rational; 3]> = vec![
            [int(1), int(1), int(1)],
            classes.map(|r| int(r as i64)),
            classes.map(|r| int(r as i64 * (r as i64 - 1))),
        ];
        let rhs = [int(1), ratio(ki, qi), ratio(ki * (ki - 1), qi * qi)];
        let det = |m: &Vec<[Rational; 3]>| -> Rational {
            &m[0][0] * (&m[1][1] * &m[2][2] - &m[1][2] * &m[2][1])
                - &m[0][1] * (&m[1][0] * &m[2][2] - &m[1][2] * &m[2][0])
                + &m[0][2] * (&m[1][0] * &m[2][1] - &m[1][1] * &m[2][0])
        };
        let d = det(&rows);
        std::array::from_fn(|c| {
            let mut m = rows.clone();
            for r in 0..3 {
                m[r][c] = rhs[r].clone();
            }
            det(&m) / &d
        })
    }

    #[test]
    fn closed_forms_solve_their_systems() {
        for k in 4..=20usize {
            let cases: Vec<(u32, PredicateKind, [usize; 3])> = if k % 2 == 0 {
                let mut v = vec![(k as u32 - 2, PredicateKind::Even, [0, 2, 4])];
                if k > 4 {
                    v.push((k as u32 - 2, PredicateKind::Odd, [1, 3, k - 1]));
                }
                if k >= 6 {
                    v.push((k as u32 - 4, PredicateKind::Even, [0, 2, 4]));
                    v.push((k as u32 - 4, PredicateKind::Odd, [1, 3, k - 1]));
                }
                v
            } else if k >= 5 {
                vec![
                    (k as u32 - 3, PredicateKind::Even, [0, 2, 4]),
                    (k as u32 - 3, PredicateKind::Odd, [1, 3, k]),
                ]
            } else {
                vec![]
            };
            for (q, kind, classes) in cases {
                let w = closed_form_weights(k, q, kind).unwrap();
                let sol = solve_moments(k, q, classes);
                for (r, a) in classes.iter().zip(sol) {
                    assert_eq!(w.weight(*r), a, "k={k} q={q} {kind} r={r}");
                }
            }
        }
    }

    #[test]
    fn closed_form_spot_values() {
        let w = closed_form_weights(4, 2, PredicateKind::Odd).unwrap();
        assert_eq!(w.weight(1), ratio(1, 2));
        assert_eq!(w.weight(3), ratio(3, 8) + ratio(1, 8));
        let w = closed_form_weights(4, 2, PredicateKind::Even).unwrap();
        assert_eq!([w.weight(0), w.weight(2), w.weight(4)], [ratio(1, 8), ratio(3, 4), ratio(1, 8)]);
        let w = closed_form_weights(5, 2, PredicateKind::Even).unwrap();
        assert_eq!([w.weight(0), w.weight(2), w.weight(4)], [ratio(1, 16), ratio(5, 8), ratio(5, 16)]);
        let w = closed_form_weights(5, 2, PredicateKind::Odd).unwrap();
        assert_eq!([w.weight(1), w.weight(3), w.weight(5)], [ratio(5, 16), ratio(5, 8), ratio(1, 16)]);
        assert!(closed_form_weights(5, 3, PredicateKind::Odd).is_err());
        assert!(closed_form_weights(6, 2, PredicateKind::AtLeastOneZero).is_err());
    }

    #[test]
    fn symmetric_and_atom_paths_agree() {
        let mut cases = vec![];
        for k in [3usize, 5, 7] {
            cases.push(odd_dist_q_eq_kminus1(k).unwrap());
            cases.push(even_dist_q_eq_kminus1(k).unwrap());
        }
        cases.push(dist_from_closed_form(4, 2, PredicateKind::Odd).unwrap());
        cases.push(dist_from_closed_form(5, 2, PredicateKind::Even).unwrap());
        cases.push(dist_from_closed_form(6, 4, PredicateKind::Odd).unwrap());
        // A deliberately unbalanced one.
        cases.push(WeightDistribution::new(4, [(0, ratio(1, 2)), (4, ratio(1, 2))]).unwrap().lift(3));
        for d in cases {
            let atoms = d.to_atoms().unwrap();
            assert_eq!(verify_pi(&atoms).ok(), d.verify_symmetric().ok());
            for (t, p) in atoms.atoms() {
                assert_eq!(d.prob(t), *p);
            }
        }
    }

    #[test]
    fn oracle_verdicts() {
        assert!(matches!(pi_feasibility(3, 3, PredicateKind::AtLeastOneZero).unwrap(), PiFeasibility::Infeasible { .. }));
        assert!(matches!(pi_feasibility(3, 2, PredicateKind::Odd).unwrap(), PiFeasibility::Feasible(_)));
        for k in 3..=12usize {
            let verdict = pi_feasibility(k, k as u32 - 1, PredicateKind::Odd).unwrap();
            match verdict {
                PiFeasibility::Feasible(d) => {
                    assert_eq!(k % 2, 1, "k={k}");
                    assert!(d.verify_symmetric().ok());
                    assert!(d.zero_counts_match(PredicateKind::Odd));
                }
                PiFeasibility::Infeasible { program, certificate, .. } => {
                    assert_eq!(k % 2, 0, "k={k}");
                    certificate.verify(&program).unwrap();
                }
            }
        }
    }

    #[test]
    fn table_dispatch() {
        let t = select_sa_predicates(7).unwrap();
        assert_eq!(t.q, 4);
        assert_eq!(t.get(7, PredicateKind::Odd).unwrap().construction, Construction::CaseII);
        assert_eq!(t.get(5, PredicateKind::Even).unwrap().construction, Construction::Direct);
        let t = select_sa_predicates(8).unwrap();
        assert_eq!(t.q, 4);
        assert_eq!(t.get(8, PredicateKind::Even).unwrap().construction, Construction::CaseIII);
        assert_eq!(t.get(6, PredicateKind::Odd).unwrap().construction, Construction::CaseI);
        let t = select_sa_predicates(5).unwrap();
        assert_eq!(t.q, 2);
        assert_eq!(
            t.get(3, PredicateKind::Odd).unwrap().dist.to_atoms().unwrap(),
            odd_dist_q_eq_kminus1(3).unwrap().to_atoms().unwrap()
        );
        assert!(select_sa_predicates(4).is_err());
    }

    // For even d_c the next larger alphabet, d_c − 3, already fails: the
    // odd predicate of arity d_c − 2 has no distribution there.
    #[test]
    fn even_dc_alphabet_is_tight() {
        for d_c in [6usize, 8, 10, 12] {
            let q = (d_c - 3) as u32;
            match pi_feasibility(d_c - 2, q, PredicateKind::Odd).unwrap() {
                PiFeasibility::Infeasible { program, certificate, .. } => assert!(certificate.verify(&program).is_ok()),
                PiFeasibility::Feasible(_) => panic!("d_c={d_c}: odd arity {} feasible at q={q}", d_c - 2),
            }
            assert!(matches!(pi_feasibility(d_c, q, PredicateKind::Odd).unwrap(), PiFeasibility::Feasible(_)));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        /// The zero marginal of a lift equals the zero marginal of the binary source.
        #[test]
        fn lift_preserves_zero_marginals(
            k in 2usize..5,
            q in 2u32..5,
            raw in prop::collection::vec(0u32..6, 16),
        ) {
            let total: u32 = raw.iter().take(1 << k).sum::<u32>().max(1);
            let mut entries = Vec::new();
            let mut acc = 0u32;
            for mask in 0..(1u32 << k) {
                let w = if mask + 1 == 1 << k { total - acc } else { raw[mask as usize].min(total - acc) };
                acc += w;
                let t: Vec<u32> = (0..k).map(|i| (mask >> i) & 1).collect();
                entries.push((t, ratio(w as i64, total as i64)));
            }
            let x = AtomDistribution::new(2, k, entries).unwrap();
            let y = lift_atoms(&x, q).unwrap();
            for i in 0..k {
                let px: Rational = x.atoms().filter(|(t, _)| t[i] == 0).map(|(_, p)| p.clone()).sum();
                let py: Rational = y.atoms().filter(|(t, _)| t[i] == 0).map(|(_, p)| p.clone()).sum();
                prop_assert_eq!(px, py);
            }
            for (t, _) in y.atoms() {
                let back: Vec<u32> = t.iter().map(|&g| (g != 0) as u32).collect();
                prop_assert!(x.prob(&back) > Rational::zero());
            }
        }
    }
}
