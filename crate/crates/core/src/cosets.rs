//! Cosets of balanced pairwise-independent subgroups of `G^k`, `G = GF(q)`.
//!
//! A subgroup is given by an evaluation set `E ⊂ F_q^d`: its elements are the
//! tuples `(L(e))_{e ∈ E}` for every linear form `L` on `F_q^d`. When no point
//! of `E` is a scalar multiple of another, every pair of coordinates is
//! uniform on `G²` over the subgroup, and so is every coset.
//!
//! Each [`CosetPredicate`] also keeps an explicit GF(p)-basis of its
//! subgroup and the dual basis under the trace pairing; the Lasserre
//! construction reads its character equations from the latter.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::gf::{FieldDescriptor, FieldSpec, GfError};
use crate::pidist::{zero_count, PredicateKind};

/// Largest coset that [`verify_coset`] will enumerate.
pub const MAX_COSET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CosetError {
    #[error(transparent)]
    Field(#[from] GfError),
    #[error("{0} is not a power of 2")]
    NotPowerOfTwo(u32),
    #[error("{0} is not a prime power")]
    NotPrimePower(u32),
    #[error("d_c = {0} is not of the form 3·2^i + 3 with i >= 1")]
    BadDegree(usize),
    #[error("cosets over different fields")]
    FieldMismatch,
    #[error("coset of size {0} exceeds the enumeration bound")]
    TooLarge(u64),
    #[error("invalid coset: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvaluationSet {
    pub dim: usize,
    pub points: Vec<Vec<u32>>,
}

impl EvaluationSet {
    pub fn new(dim: usize, points: Vec<Vec<u32>>) -> Result<Self, CosetError> {
        if points.iter().any(|p| p.len() != dim) {
            return Err(CosetError::Invalid("point of wrong dimension".into()));
        }
        let distinct: HashSet<&Vec<u32>> = points.iter().collect();
        if distinct.len() != points.len() {
            return Err(CosetError::Invalid("repeated evaluation point".into()));
        }
        Ok(EvaluationSet { dim, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// First pair `(i, j)` with `points[j] = λ·points[i]` for some scalar `λ`
    /// (including the zero point, which is a multiple of everything).
    pub fn scalar_multiple_pair(&self, field: &FieldSpec) -> Option<(usize, usize)> {
        let n = self.points.len();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let multiple = (0..field.order()).any(|lambda| {
                    self.points[i]
                        .iter()
                        .zip(&self.points[j])
                        .all(|(&a, &b)| field.mul_raw(lambda, a) == b)
                });
                if multiple {
                    return Some((i.min(j), i.max(j)));
                }
            }
        }
        None
    }

    /// Evaluations of the linear form with coefficient vector `form`.
    pub fn evaluate(&self, field: &FieldSpec, form: &[u32]) -> Vec<u32> {
        self.points.iter().map(|e| field.dot_raw(form, e)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalBlock {
    pub offset: usize,
    pub set: EvaluationSet,
}

#[derive(Debug, Clone)]
pub struct CosetPredicate {
    field: FieldSpec,
    k: usize,
    blocks: Vec<EvalBlock>,
    generators: Vec<Vec<u32>>,
    dual: Vec<Vec<u32>>,
    shift: Vec<u32>,
    kind: PredicateKind,
    label: String,
}

impl PartialEq for CosetPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.field == other.field
            && self.k == other.k
            && self.generators == other.generators
            && self.shift == other.shift
            && self.kind == other.kind
    }
}

/// Reduces vectors of `G^k` to a GF(p)-basis of their span.
fn prime_basis(field: &FieldSpec, k: usize, vectors: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let fp = field.prime_field();
    let mut rows: Vec<Vec<u32>> = vectors.iter().map(|v| field.expand_to_prime(v)).collect();
    fp.rref(&mut rows, k * field.m() as usize);
    rows.iter().map(|r| field.collapse_from_prime(r)).collect()
}

impl CosetPredicate {
    /// Subgroup spanned over GF(p) by `generators`, translated by `shift`.
    pub fn from_generators(
        field: &FieldSpec,
        generators: &[Vec<u32>],
        shift: Vec<u32>,
        kind: PredicateKind,
        label: impl Into<String>,
    ) -> Result<Self, CosetError> {
        let k = shift.len();
        for v in generators.iter().chain(std::iter::once(&shift)) {
            if v.len() != k || v.iter().any(|&x| x >= field.order()) {
                return Err(CosetError::Invalid("generator or shift outside G^k".into()));
            }
        }
        let generators = prime_basis(field, k, generators);
        let dual = field.annihilator(k, &generators)?;
        Ok(CosetPredicate {
            field: field.clone(),
            k,
            blocks: Vec::new(),
            generators,
            dual,
            shift,
            kind,
            label: label.into(),
        })
    }

    /// Subgroup of evaluations of all linear forms on `set`.
    pub fn from_eval_set(
        field: &FieldSpec,
        set: EvaluationSet,
        shift: Vec<u32>,
        kind: PredicateKind,
        label: impl Into<String>,
    ) -> Result<Self, CosetError> {
        if shift.len() != set.len() {
            return Err(CosetError::Invalid("shift length differs from |E|".into()));
        }
        let mut gens = Vec::new();
        for a in 0..set.dim {
            for i in 0..field.m() {
                let mut form = vec![0u32; set.dim];
                form[a] = field.basis_raw(i);
                gens.push(set.evaluate(field, &form));
            }
        }
        let mut c = Self::from_generators(field, &gens, shift, kind, label)?;
        c.blocks.push(EvalBlock { offset: 0, set });
        Ok(c)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    pub fn kind(&self) -> PredicateKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn shift(&self) -> &[u32] {
        &self.shift
    }

    pub fn blocks(&self) -> &[EvalBlock] {
        &self.blocks
    }

    /// GF(p)-basis of the subgroup.
    pub fn generators(&self) -> &[Vec<u32>] {
        &self.generators
    }

    /// GF(p)-basis of `{c : Σ Tr(c_v h_v) = 0 for all h in the subgroup}`.
    pub fn dual(&self) -> &[Vec<u32>] {
        &self.dual
    }

    pub fn with_kind(mut self, kind: PredicateKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Replaces the shift (used to inject faults in tests).
    pub fn with_shift(mut self, shift: Vec<u32>) -> Result<Self, CosetError> {
        if shift.len() != self.k || shift.iter().any(|&x| x >= self.field.order()) {
            return Err(CosetError::Invalid("shift outside G^k".into()));
        }
        self.shift = shift;
        Ok(self)
    }

    /// `p^dim`.
    pub fn size(&self) -> u64 {
        (self.field.p() as u64)
            .checked_pow(self.generators.len() as u32)
            .unwrap_or(u64::MAX)
    }

    pub fn contains(&self, tuple: &[u32]) -> bool {
        if tuple.len() != self.k || tuple.iter().any(|&x| x >= self.field.order()) {
            return false;
        }
        let diff: Vec<u32> = tuple
            .iter()
            .zip(&self.shift)
            .map(|(&a, &s)| self.field.sub_raw(a, s))
            .collect();
        self.dual.iter().all(|c| self.field.trace_pairing(c, &diff) == 0)
    }

    /// All coset elements, by an odometer over GF(p)-coordinates.
    pub fn elements(&self) -> Result<Vec<Vec<u32>>, CosetError> {
        let size = self.size();
        if size > MAX_COSET {
            return Err(CosetError::TooLarge(size));
        }
        let f = &self.field;
        let p = f.p();
        let dim = self.generators.len();
        let mut out = Vec::with_capacity(size as usize);
        let mut cur = self.shift.clone();
        let mut digits = vec![0u32; dim];
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                if i == dim {
                    return Ok(out);
                }
                digits[i] += 1;
                for (x, &g) in cur.iter_mut().zip(&self.generators[i]) {
                    *x = f.add_raw(*x, g);
                }
                if digits[i] < p {
                    break;
                }
                digits[i] = 0;
                i += 1;
            }
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&CosetDocument::from(self)).expect("coset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CosetError> {
        let doc: CosetDocument = serde_json::from_str(text).map_err(|e| CosetError::Invalid(e.to_string()))?;
        doc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct BlockDoc {
    offset: usize,
    eval_set: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct CosetDocument {
    field: FieldDescriptor,
    k: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    blocks: Vec<BlockDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    generators: Option<Vec<Vec<u32>>>,
    shift: Vec<u32>,
    kind: PredicateKind,
    #[serde(default)]
    label: String,
}

impl From<&CosetPredicate> for CosetDocument {
    fn from(c: &CosetPredicate) -> Self {
        CosetDocument {
            field: c.field.descriptor(),
            k: c.k,
            blocks: c
                .blocks
                .iter()
                .map(|b| BlockDoc {
                    offset: b.offset,
                    eval_set: b.set.points.clone(),
                })
                .collect(),
            generators: c.blocks.is_empty().then(|| c.generators.clone()),
            shift: c.shift.clone(),
            kind: c.kind,
            label: c.label.clone(),
        }
    }
}

impl TryFrom<CosetDocument> for CosetPredicate {
    type Error = CosetError;

    fn try_from(doc: CosetDocument) -> Result<Self, CosetError> {
        let field = FieldSpec::from_descriptor(&doc.field)?;
        if doc.shift.len() != doc.k {
            return Err(CosetError::Invalid("shift length differs from k".into()));
        }
        if doc.k > 4096 {
            return Err(CosetError::Invalid("arity too large".into()));
        }
        if let Some(gens) = doc.generators {
            if !doc.blocks.is_empty() {
                return Err(CosetError::Invalid("both blocks and generators given".into()));
            }
            return CosetPredicate::from_generators(&field, &gens, doc.shift, doc.kind, doc.label);
        }
        let mut parts = Vec::new();
        let mut expected = 0;
        for b in doc.blocks {
            if b.offset != expected {
                return Err(CosetError::Invalid("blocks must tile 0..k in order".into()));
            }
            let dim = b.eval_set.first().map_or(0, |p| p.len());
            if dim == 0 || dim > 8 {
                return Err(CosetError::Invalid("bad evaluation-set dimension".into()));
            }
            if b.eval_set.iter().flatten().any(|&x| x >= field.order()) {
                return Err(CosetError::Invalid("evaluation point outside the field".into()));
            }
            let set = EvaluationSet::new(dim, b.eval_set)?;
            expected += set.len();
            let shift = doc.shift.get(b.offset..expected).ok_or_else(|| CosetError::Invalid("blocks exceed k".into()))?;
            parts.push(CosetPredicate::from_eval_set(&field, set, shift.to_vec(), doc.kind, "")?);
        }
        if expected != doc.k {
            return Err(CosetError::Invalid("blocks do not cover k coordinates".into()));
        }
        let refs: Vec<&CosetPredicate> = parts.iter().collect();
        let sum = direct_sum(&refs)?;
        Ok(sum.with_kind(doc.kind).with_label(doc.label))
    }
}

// ---------------------------------------------------------------------------
// The three subgroups
// ---------------------------------------------------------------------------

fn field_of_order(q: u32) -> Result<FieldSpec, CosetError> {
    if crate::gf::prime_power(q).is_none() {
        return Err(CosetError::NotPrimePower(q));
    }
    Ok(FieldSpec::of_order(q)?)
}

fn char2_field(q: u32) -> Result<FieldSpec, CosetError> {
    if q < 2 || !q.is_power_of_two() {
        return Err(CosetError::NotPowerOfTwo(q));
    }
    field_of_order(q)
}

/// `E = {(0,1)} ∪ {(1,a) : a ∈ F_q}`, arity `q + 1`, shift 0. Every element
/// has at least one zero; for `q = 2^i` the zero count is always odd.
pub fn build_h1(q: u32) -> Result<CosetPredicate, CosetError> {
    let f = field_of_order(q)?;
    build_h1_in(&f)
}

fn build_h1_in(f: &FieldSpec) -> Result<CosetPredicate, CosetError> {
    let q = f.order();
    let mut pts = vec![vec![0, 1]];
    pts.extend((0..q).map(|a| vec![1, a]));
    let kind = if f.is_char2() { PredicateKind::Odd } else { PredicateKind::AtLeastOneZero };
    let set = EvaluationSet::new(2, pts)?;
    CosetPredicate::from_eval_set(f, set, vec![0; q as usize + 1], kind, "H1")
}

/// The point set with `(0,0)` such that every line of `F_q²` meets it in 0
/// or 2 points: `{(0,0), (0,1)} ∪ {f(a)(1,a)}` with
/// `f(a) = (a² + a + η)⁻¹` for the smallest `η` making `a² + a + η` rootless.
pub fn build_even_point_set(q: u32) -> Result<(FieldSpec, EvaluationSet, u32), CosetError> {
    let f = char2_field(q)?;
    let (set, eta) = even_point_set_in(&f)?;
    Ok((f, set, eta))
}

fn even_point_set_in(f: &FieldSpec) -> Result<(EvaluationSet, u32), CosetError> {
    let q = f.order();
    let g = |a: u32, eta: u32| f.add_raw(f.add_raw(f.mul_raw(a, a), a), eta);
    let eta = (0..q)
        .find(|&eta| (0..q).all(|a| g(a, eta) != 0))
        .expect("a rootless a² + a + η exists in characteristic 2");
    let mut pts = vec![vec![0, 0], vec![0, 1]];
    for a in 0..q {
        let fa = f.inv_raw(g(a, eta)).expect("rootless");
        pts.push(vec![fa, f.mul_raw(fa, a)]);
    }
    Ok((EvaluationSet::new(2, pts)?, eta))
}

/// Number of points of `set` on every line of `F_q²`: the `q` vertical lines
/// `x = c` followed by the `q²` lines `y = αx + β`.
pub fn line_incidences(f: &FieldSpec, set: &EvaluationSet) -> Vec<usize> {
    let q = f.order();
    let mut counts = Vec::with_capacity((q * q + q) as usize);
    for c in 0..q {
        counts.push(set.points.iter().filter(|p| p[0] == c).count());
    }
    for alpha in 0..q {
        for beta in 0..q {
            counts.push(
                set.points
                    .iter()
                    .filter(|p| p[1] == f.add_raw(f.mul_raw(alpha, p[0]), beta))
                    .count(),
            );
        }
    }
    counts
}

/// `E' = E ∖ {0}` from [`build_even_point_set`], shifted by `−𝟏`; even zero counts.
pub fn build_h2(q: u32) -> Result<CosetPredicate, CosetError> {
    let f = char2_field(q)?;
    build_h2_in(&f)
}

fn build_h2_in(f: &FieldSpec) -> Result<CosetPredicate, CosetError> {
    let (set, _) = even_point_set_in(f)?;
    let pts: Vec<Vec<u32>> = set.points.into_iter().filter(|p| p.iter().any(|&x| x != 0)).collect();
    let k = pts.len();
    let shift = vec![f.neg_raw(1); k];
    CosetPredicate::from_eval_set(f, EvaluationSet::new(2, pts)?, shift, PredicateKind::Even, "H2")
}

/// `E = {(1,a,a) : a ∈ F_q} ∪ {(0,b,b+1) : b ∈ F_q}` in `F_q³`, arity `2q`,
/// shift 0, even zero counts.
///
/// The first half is sometimes written `(1,a,a+1)`; this module uses
/// `(1,a,a)` and certifies the resulting subgroup by enumeration.
pub fn build_h3(q: u32) -> Result<CosetPredicate, CosetError> {
    let f = char2_field(q)?;
    build_h3_in(&f)
}

pub fn h3_points(f: &FieldSpec) -> EvaluationSet {
    let q = f.order();
    let mut pts: Vec<Vec<u32>> = (0..q).map(|a| vec![1, a, a]).collect();
    pts.extend((0..q).map(|b| vec![0, b, f.add_raw(b, 1)]));
    EvaluationSet::new(3, pts).expect("distinct points")
}

fn build_h3_in(f: &FieldSpec) -> Result<CosetPredicate, CosetError> {
    let set = h3_points(f);
    let k = set.len();
    CosetPredicate::from_eval_set(f, set, vec![0; k], PredicateKind::Even, "H3")
}

/// Root counts of every trivariate form `αx + βy + γz` on the H3 point set.
pub fn h3_root_counts(f: &FieldSpec) -> Vec<usize> {
    let set = h3_points(f);
    let q = f.order();
    let mut out = Vec::with_capacity((q * q * q) as usize);
    for a in 0..q {
        for b in 0..q {
            for c in 0..q {
                out.push(set.evaluate(f, &[a, b, c]).iter().filter(|&&v| v == 0).count());
            }
        }
    }
    out
}

/// For every `(c1, c0)`, whether `a² + c1·a + c0` has a double root (a common
/// root with its derivative `2a + c1`).
pub fn double_root_table(f: &FieldSpec) -> Vec<(u32, u32, bool)> {
    let q = f.order();
    let mut out = Vec::new();
    for c1 in 0..q {
        for c0 in 0..q {
            let double = (0..q).any(|a| {
                let val = f.add_raw(f.add_raw(f.mul_raw(a, a), f.mul_raw(c1, a)), c0);
                let der = f.add_raw(f.scale_raw(a, 2), c1);
                val == 0 && der == 0
            });
            out.push((c1, c0, double));
        }
    }
    out
}

/// Concatenation of cosets: generators padded with zeros, shifts joined,
/// parity by the odd/even addition rule.
pub fn direct_sum(parts: &[&CosetPredicate]) -> Result<CosetPredicate, CosetError> {
    let Some(first) = parts.first() else {
        return Err(CosetError::Invalid("empty direct sum".into()));
    };
    let field = first.field.clone();
    if parts.iter().any(|c| c.field != field) {
        return Err(CosetError::FieldMismatch);
    }
    let k: usize = parts.iter().map(|c| c.k).sum();
    let mut gens = Vec::new();
    let mut shift = Vec::with_capacity(k);
    let mut blocks = Vec::new();
    let mut kind: Option<PredicateKind> = None;
    let mut offset = 0;
    let mut all_blocks = true;
    for c in parts {
        for g in &c.generators {
            let mut v = vec![0u32; k];
            v[offset..offset + c.k].copy_from_slice(g);
            gens.push(v);
        }
        shift.extend_from_slice(&c.shift);
        if c.blocks.is_empty() && c.k > 0 {
            all_blocks = false;
        }
        for b in &c.blocks {
            blocks.push(EvalBlock {
                offset: offset + b.offset,
                set: b.set.clone(),
            });
        }
        if c.k > 0 {
            kind = Some(match kind {
                None => c.kind,
                Some(prev) => prev.combine(c.kind).unwrap_or(PredicateKind::AtLeastOneZero),
            });
        }
        offset += c.k;
    }
    let label = parts
        .iter()
        .filter(|c| c.k > 0)
        .map(|c| c.label.as_str())
        .collect::<Vec<_>>()
        .join("+");
    let mut out = CosetPredicate::from_generators(
        &field,
        &gens,
        shift,
        kind.unwrap_or(PredicateKind::Even),
        label,
    )?;
    if all_blocks {
        out.blocks = blocks;
    }
    Ok(out)
}

/// The empty coset of arity 0 (identity for [`direct_sum`]).
pub fn trivial(field: &FieldSpec) -> CosetPredicate {
    CosetPredicate::from_generators(field, &[], Vec::new(), PredicateKind::Even, "")
        .expect("empty coset")
}

/// The full group `G^k` as a degenerate coset.
pub fn full_group(field: &FieldSpec, k: usize, kind: PredicateKind) -> CosetPredicate {
    let gens: Vec<Vec<u32>> = (0..k)
        .flat_map(|v| {
            (0..field.m()).map(move |i| {
                let mut g = vec![0u32; k];
                g[v] = field.basis_raw(i);
                g
            })
        })
        .collect();
    CosetPredicate::from_generators(field, &gens, vec![0; k], kind, "G^k").expect("valid generators")
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CosetWitness {
    NotClosed { element: Vec<u32>, generator: usize },
    Pair { i: usize, j: usize, g: u32, h: u32, count: u64 },
    Single { i: usize, g: u32, count: u64 },
    Parity { element: Vec<u32> },
    ScalarMultiple { block: usize, i: usize, j: usize },
    EvalMismatch { block: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CosetReport {
    pub size: u64,
    pub subgroup_closed: bool,
    pub pairwise_independent: bool,
    pub parity_ok: bool,
    /// No evaluation point is a scalar multiple of another, and the
    /// evaluation-set form agrees with the generator form.
    pub eval_sets_ok: bool,
    pub min_zero_count: usize,
    pub witnesses: Vec<CosetWitness>,
}

impl CosetReport {
    pub fn ok(&self) -> bool {
        self.subgroup_closed && self.pairwise_independent && self.parity_ok && self.eval_sets_ok
    }
}

pub fn verify_coset(c: &CosetPredicate) -> Result<CosetReport, CosetError> {
    let elements = c.elements()?;
    let f = &c.field;
    let (q, k) = (f.order() as usize, c.k);
    let size = elements.len() as u64;
    let mut witnesses = Vec::new();

    // Closure of coset − shift under adding each generator.
    let shifted: HashSet<Vec<u32>> = elements
        .iter()
        .map(|e| e.iter().zip(&c.shift).map(|(&a, &s)| f.sub_raw(a, s)).collect())
        .collect();
    let mut closed = shifted.len() as u64 == size && shifted.contains(&vec![0u32; k]);
    'closure: for h in &shifted {
        for (gi, g) in c.generators.iter().enumerate() {
            let sum: Vec<u32> = h.iter().zip(g).map(|(&a, &b)| f.add_raw(a, b)).collect();
            if !shifted.contains(&sum) {
                closed = false;
                witnesses.push(CosetWitness::NotClosed {
                    element: h.clone(),
                    generator: gi,
                });
                break 'closure;
            }
        }
    }

    // Exact pair counts, one table per coordinate pair.
    let pairs: Vec<(usize, usize)> = (0..k).flat_map(|i| (i + 1..k).map(move |j| (i, j))).collect();
    let pair_fail = pairs.par_iter().find_map_first(|&(i, j)| {
        let mut counts = vec![0u64; q * q];
        for e in &elements {
            counts[e[i] as usize * q + e[j] as usize] += 1;
        }
        let target = size / (q * q) as u64;
        counts.iter().enumerate().find_map(|(cell, &n)| {
            (n != target || target * (q * q) as u64 != size).then_some(CosetWitness::Pair {
                i,
                j,
                g: (cell / q) as u32,
                h: (cell % q) as u32,
                count: n,
            })
        })
    });
    let single_fail = (0..k).find_map(|i| {
        let mut counts = vec![0u64; q];
        for e in &elements {
            counts[e[i] as usize] += 1;
        }
        counts.iter().enumerate().find_map(|(g, &n)| {
            (n * q as u64 != size).then_some(CosetWitness::Single { i, g: g as u32, count: n })
        })
    });
    let pairwise_independent = pair_fail.is_none() && single_fail.is_none();
    witnesses.extend(single_fail);
    witnesses.extend(pair_fail);

    let parity_fail = elements.iter().find(|e| !c.kind.accepts(zero_count(e)));
    if let Some(e) = parity_fail {
        witnesses.push(CosetWitness::Parity { element: e.clone() });
    }
    let min_zero_count = elements.iter().map(|e| zero_count(e)).min().unwrap_or(0);

    let mut eval_sets_ok = true;
    for (bi, b) in c.blocks.iter().enumerate() {
        if let Some((i, j)) = b.set.scalar_multiple_pair(f) {
            eval_sets_ok = false;
            witnesses.push(CosetWitness::ScalarMultiple { block: bi, i, j });
        }
        // Every linear form's evaluation, shifted, must be a coset element
        // restricted to the block, and the block must see q^d distinct values.
        let d = b.set.dim;
        let forms = (q as u64).pow(d as u32);
        let mut seen = HashSet::new();
        for idx in 0..forms {
            let mut form = vec![0u32; d];
            let mut x = idx;
            for slot in form.iter_mut() {
                *slot = (x % q as u64) as u32;
                x /= q as u64;
            }
            seen.insert(b.set.evaluate(f, &form));
        }
        let restricted: HashSet<Vec<u32>> = shifted
            .iter()
            .map(|h| h[b.offset..b.offset + b.set.len()].to_vec())
            .collect();
        if seen != restricted {
            eval_sets_ok = false;
            witnesses.push(CosetWitness::EvalMismatch { block: bi });
        }
    }
    if !c.blocks.is_empty() {
        let total: u64 = c.blocks.iter().map(|b| (q as u64).pow(b.set.dim as u32)).product();
        if total != size {
            eval_sets_ok = false;
            witnesses.push(CosetWitness::EvalMismatch { block: usize::MAX });
        }
    }

    Ok(CosetReport {
        size,
        subgroup_closed: closed,
        pairwise_independent,
        parity_ok: parity_fail.is_none(),
        eval_sets_ok,
        min_zero_count,
        witnesses,
    })
}

// ---------------------------------------------------------------------------
// Predicate tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct LasserreEntry {
    pub arity: usize,
    pub kind: PredicateKind,
    pub coset: CosetPredicate,
}

#[derive(Debug, Clone)]
pub struct LasserrePredicates {
    pub d_c: usize,
    pub q: u32,
    pub entries: Vec<LasserreEntry>,
}

impl LasserrePredicates {
    pub fn get(&self, arity: usize, kind: PredicateKind) -> Option<&CosetPredicate> {
        self.entries
            .iter()
            .find(|e| e.arity == arity && e.kind == kind)
            .map(|e| &e.coset)
    }
}

/// `q` with `d_c = 3q + 3`, `q = 2^i`, `i >= 1`.
pub fn lasserre_q(d_c: usize) -> Result<u32, CosetError> {
    if d_c < 9 || !(d_c - 3).is_multiple_of(3) {
        return Err(CosetError::BadDegree(d_c));
    }
    let q = (d_c - 3) / 3;
    if !q.is_power_of_two() || q > 1 << 16 {
        return Err(CosetError::BadDegree(d_c));
    }
    Ok(q as u32)
}

/// For `d_c = 3q + 3`: arity `d_c` uses H1³ (odd) and H1²⊕H2 (even); arity
/// `d_c − 2` uses H1⊕H3 (odd) and H2⊕H3 (even).
pub fn select_lasserre_predicates(d_c: usize) -> Result<LasserrePredicates, CosetError> {
    let q = lasserre_q(d_c)?;
    let f = char2_field(q)?;
    let h1 = build_h1_in(&f)?;
    let h2 = build_h2_in(&f)?;
    let h3 = build_h3_in(&f)?;
    let table = [
        (d_c, PredicateKind::Odd, vec![&h1, &h1, &h1]),
        (d_c, PredicateKind::Even, vec![&h1, &h1, &h2]),
        (d_c - 2, PredicateKind::Odd, vec![&h1, &h3]),
        (d_c - 2, PredicateKind::Even, vec![&h2, &h3]),
    ];
    let mut entries = Vec::new();
    for (arity, kind, parts) in table {
        let coset = direct_sum(&parts)?;
        if coset.arity() != arity || coset.kind() != kind {
            return Err(CosetError::Invalid(format!("table entry {arity}/{kind} has wrong shape")));
        }
        entries.push(LasserreEntry { arity, kind, coset });
    }
    Ok(LasserrePredicates { d_c, q, entries })
}

/// H1 over `F_q` with the "at least one zero" kind, arity `q + 1`.
pub fn hvc_predicate(q: u32) -> Result<CosetPredicate, CosetError> {
    Ok(build_h1(q)?.with_kind(PredicateKind::AtLeastOneZero).with_label("HVC"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<Vec<u32>>) -> Vec<Vec<u32>> {
        v.sort();
        v
    }

    #[test]
    fn h1_over_gf2() {
        let h1 = build_h1(2).unwrap();
        assert_eq!(
            sorted(h1.elements().unwrap()),
            vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]]
        );
        let zeros: Vec<usize> = sorted(h1.elements().unwrap()).iter().map(|e| zero_count(e)).collect();
        assert_eq!(zeros, vec![3, 1, 1, 1]);
        let r = verify_coset(&h1).unwrap();
        assert!(r.ok(), "{r:?}");
    }

    #[test]
    fn corrupted_shift_breaks_parity() {
        let bad = build_h1(2).unwrap().with_shift(vec![1, 0, 0]).unwrap();
        let mut zeros: Vec<usize> = bad.elements().unwrap().iter().map(|e| zero_count(e)).collect();
        zeros.sort();
        assert_eq!(zeros, vec![0, 2, 2, 2]);
        let r = verify_coset(&bad).unwrap();
        assert!(!r.parity_ok && r.subgroup_closed && r.pairwise_independent);
    }

    #[test]
    fn even_point_set_examples() {
        let (f, set, eta) = build_even_point_set(2).unwrap();
        assert_eq!(eta, 1);
        assert_eq!(sorted(set.points.clone()), vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        assert!(line_incidences(&f, &set).iter().all(|&c| c == 2));
        let (_, set4, _) = build_even_point_set(4).unwrap();
        assert_eq!(set4.len(), 6);
        assert!(set4.points.contains(&vec![0, 0]));
        assert!(build_even_point_set(3).is_err());
    }

    #[test]
    fn h2_over_gf2() {
        let h2 = build_h2(2).unwrap();
        assert_eq!(
            sorted(h2.elements().unwrap()),
            vec![vec![0, 0, 1], vec![0, 1, 0], vec![1, 0, 0], vec![1, 1, 1]]
        );
        assert!(verify_coset(&h2).unwrap().ok());
    }

    #[test]
    fn h3_over_gf2() {
        let h3 = build_h3(2).unwrap();
        assert_eq!(
            h3_points(h3.field()).points,
            vec![vec![1, 0, 0], vec![1, 1, 1], vec![0, 0, 1], vec![0, 1, 0]]
        );
        let els = h3.elements().unwrap();
        assert_eq!(els.len(), 8);
        for e in &els {
            assert_eq!(e[1], e[0] ^ e[2] ^ e[3]);
            assert_eq!(zero_count(e) % 2, 0);
        }
        assert!(verify_coset(&h3).unwrap().ok());
    }

    #[test]
    fn direct_sums() {
        let f = FieldSpec::new(2, 1).unwrap();
        let h1 = build_h1(2).unwrap();
        let h2 = build_h2(2).unwrap();
        let h3 = build_h3(2).unwrap();
        let s = direct_sum(&[&h1, &h1, &h1]).unwrap();
        assert_eq!((s.arity(), s.kind()), (9, PredicateKind::Odd));
        let s = direct_sum(&[&h2, &h3]).unwrap();
        assert_eq!((s.arity(), s.kind()), (7, PredicateKind::Even));
        let same = direct_sum(&[&h1, &trivial(&f)]).unwrap();
        assert_eq!(same, h1.clone().with_label("H1"));
        let f4 = build_h1(4).unwrap();
        assert_eq!(direct_sum(&[&h1, &f4]).unwrap_err(), CosetError::FieldMismatch);
    }

    #[test]
    fn table_two_dispatch() {
        let t = select_lasserre_predicates(9).unwrap();
        assert_eq!(t.q, 2);
        assert_eq!(t.get(9, PredicateKind::Odd).unwrap().arity(), 9);
        assert_eq!(t.get(7, PredicateKind::Even).unwrap().arity(), 7);
        assert_eq!(select_lasserre_predicates(15).unwrap().q, 4);
        assert_eq!(select_lasserre_predicates(8).unwrap_err(), CosetError::BadDegree(8));
        assert!(select_lasserre_predicates(6).is_err());
        for e in &t.entries {
            assert!(verify_coset(&e.coset).unwrap().ok(), "{}", e.coset.label());
        }
    }

    #[test]
    fn hvc_predicates() {
        let h = hvc_predicate(2).unwrap();
        assert_eq!(verify_coset(&h).unwrap().min_zero_count, 1);
        let h = hvc_predicate(3).unwrap();
        let r = verify_coset(&h).unwrap();
        assert_eq!(r.size, 9);
        assert!(r.ok() && r.min_zero_count >= 1);
        assert!(hvc_predicate(6).is_err());
    }

    #[test]
    fn full_group_is_pairwise_independent() {
        let f = FieldSpec::new(3, 1).unwrap();
        let g = full_group(&f, 3, PredicateKind::AtLeastOneZero);
        let r = verify_coset(&g).unwrap();
        assert!(r.pairwise_independent && r.subgroup_closed && !r.parity_ok);
        assert!(g.dual().is_empty());
    }

    #[test]
    fn membership_matches_enumeration() {
        for c in [build_h1(3).unwrap(), build_h2(4).unwrap(), build_h3(2).unwrap()] {
            let els: HashSet<Vec<u32>> = c.elements().unwrap().into_iter().collect();
            let q = c.field().order();
            let k = c.arity();
            let total = (q as u64).pow(k as u32);
            for mut idx in 0..total.min(1 << 16) {
                let mut t = vec![0u32; k];
                for s in t.iter_mut() {
                    *s = (idx % q as u64) as u32;
                    idx /= q as u64;
                }
                assert_eq!(c.contains(&t), els.contains(&t));
            }
        }
    }

    #[test]
    fn json_roundtrip() {
        let t = select_lasserre_predicates(9).unwrap();
        for e in &t.entries {
            let back = CosetPredicate::from_json(&e.coset.to_json()).unwrap();
            assert_eq!(back, e.coset);
        }
        let f = FieldSpec::new(3, 1).unwrap();
        let g = full_group(&f, 2, PredicateKind::Even);
        assert_eq!(CosetPredicate::from_json(&g.to_json()).unwrap(), g);
        assert!(CosetPredicate::from_json(r#"{"field":{"p":2,"m":1,"modulus":[0,1]},"k":2,"shift":[0],"kind":"odd"}"#).is_err());
    }

    #[test]
    fn lines_roots_and_double_roots() {
        for q in [2u32, 4, 8, 16] {
            let (f, set, _) = build_even_point_set(q).unwrap();
            let inc = line_incidences(&f, &set);
            assert_eq!(inc.len() as u32, q * q + q);
            assert!(inc.iter().all(|&c| c == 0 || c == 2), "q={q}");
            for (c1, _, double) in double_root_table(&f) {
                assert_eq!(double, c1 == 0);
            }
        }
        for q in [2u32, 4, 8] {
            let f = FieldSpec::of_order(q).unwrap();
            let qs = q as usize;
            assert!(h3_root_counts(&f).iter().all(|&r| [0, 2, qs, 2 * qs].contains(&r)));
        }
    }
}
