//! Min-Ones CSP instances, Nearest Codeword construction, alphabet stretching
//! and collapsing of fractional solutions.
//!
//! Parity and "at least one" predicates count *marked* symbols: `1` in a
//! binary instance, `0` after stretching (the unique preimage of `1` under
//! φ). The Min-Ones objective counts marked symbols in either case.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::cosets::CosetPredicate;
use crate::ensembles::ParityCheckGraph;
use crate::gf::FieldSpec;
use crate::local::{LocalDistributionFamily, LocalError, MomentMatrix, Table};
use crate::pidist::PredicateKind;
use crate::rational::Rational;

/// Largest `q^n` scanned by plain enumeration.
pub const MAX_ENUMERATION: u64 = 10_000_000;
/// Largest binary `n` scanned by Gray code.
pub const MAX_GRAY_N: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CspError {
    #[error("assignment or word has length {found}, expected {expected}")]
    Length { expected: usize, found: usize },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("unknown constraint type `{0}`")]
    UnknownType(String),
    #[error("search space too large: {0}")]
    TooLarge(String),
    #[error("stretching needs a binary instance with kind-based constraints")]
    NotStretchable,
    #[error(transparent)]
    Local(#[from] LocalError),
    #[error("json: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConstraintType {
    Kind(PredicateKind),
    Coset(String),
    Tuples(String),
}

impl fmt::Display for ConstraintType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintType::Kind(k) => write!(f, "{k}"),
            ConstraintType::Coset(id) => write!(f, "coset:{id}"),
            ConstraintType::Tuples(id) => write!(f, "tuples:{id}"),
        }
    }
}

impl FromStr for ConstraintType {
    type Err = CspError;

    fn from_str(s: &str) -> Result<Self, CspError> {
        if let Some(id) = s.strip_prefix("coset:") {
            return Ok(ConstraintType::Coset(id.to_string()));
        }
        if let Some(id) = s.strip_prefix("tuples:") {
            return Ok(ConstraintType::Tuples(id.to_string()));
        }
        s.parse::<PredicateKind>()
            .map(ConstraintType::Kind)
            .map_err(|_| CspError::UnknownType(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Constraint {
    pub ty: ConstraintType,
    pub vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CspInstance {
    pub n: usize,
    pub q: u32,
    pub marked: u32,
    pub constraints: Vec<Constraint>,
    pub cosets: BTreeMap<String, CosetPredicate>,
    pub tuples: BTreeMap<String, BTreeSet<Vec<u32>>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub satisfied: bool,
    pub ones: usize,
    /// First violated constraint.
    pub violated: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Optimum {
    pub ones: usize,
    pub assignment: Vec<u32>,
}

impl CspInstance {
    pub fn new(n: usize, q: u32, marked: u32, constraints: Vec<Constraint>) -> Result<Self, CspError> {
        let inst = CspInstance {
            n,
            q,
            marked,
            constraints,
            cosets: BTreeMap::new(),
            tuples: BTreeMap::new(),
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn with_coset(mut self, id: impl Into<String>, coset: CosetPredicate) -> Result<Self, CspError> {
        self.cosets.insert(id.into(), coset);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CspError> {
        let bad = |m: String| Err(CspError::Invalid(m));
        if self.q < 2 {
            return bad(format!("alphabet size {} below 2", self.q));
        }
        if self.marked >= self.q {
            return bad(format!("marked symbol {} outside alphabet", self.marked));
        }
        for (id, c) in &self.cosets {
            if c.field().order() != self.q {
                return bad(format!("coset `{id}` lives over a field of order {}", c.field().order()));
            }
        }
        for (id, set) in &self.tuples {
            let mut lens = set.iter().map(Vec::len);
            let first = lens.next();
            if lens.any(|l| Some(l) != first) || set.iter().flatten().any(|&g| g >= self.q) {
                return bad(format!("tuple set `{id}` is malformed"));
            }
        }
        for (i, c) in self.constraints.iter().enumerate() {
            let mut seen = BTreeSet::new();
            if c.vars.iter().any(|&v| v >= self.n || !seen.insert(v)) {
                return bad(format!("constraint {i} repeats a variable or is out of range"));
            }
            let arity = match &c.ty {
                ConstraintType::Kind(_) => None,
                ConstraintType::Coset(id) => {
                    Some(self.cosets.get(id).ok_or_else(|| CspError::UnknownType(c.ty.to_string()))?.arity())
                }
                ConstraintType::Tuples(id) => {
                    let set = self.tuples.get(id).ok_or_else(|| CspError::UnknownType(c.ty.to_string()))?;
                    set.iter().next().map(Vec::len)
                }
            };
            if let Some(a) = arity {
                if a != c.vars.len() {
                    return bad(format!("constraint {i} has {} variables, predicate arity {a}", c.vars.len()));
                }
            }
        }
        Ok(())
    }

    pub fn accepts(&self, ty: &ConstraintType, values: &[u32]) -> bool {
        match ty {
            ConstraintType::Kind(k) => k.accepts(values.iter().filter(|&&g| g == self.marked).count()),
            ConstraintType::Coset(id) => self.cosets[id].contains(values),
            ConstraintType::Tuples(id) => self.tuples[id].contains(values),
        }
    }

    pub fn constraint_satisfied(&self, i: usize, assignment: &[u32]) -> bool {
        let c = &self.constraints[i];
        let values: Vec<u32> = c.vars.iter().map(|&v| assignment[v]).collect();
        self.accepts(&c.ty, &values)
    }

    pub fn variable_constraints(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (i, c) in self.constraints.iter().enumerate() {
            for &v in &c.vars {
                out[v].push(i);
            }
        }
        out
    }

    pub fn max_arity(&self) -> usize {
        self.constraints.iter().map(|c| c.vars.len()).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceDocument::from(self)).expect("instance serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, CspError> {
        let doc: InstanceDocument = serde_json::from_str(text).map_err(|e| CspError::Json(e.to_string()))?;
        doc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintDocument {
    #[serde(rename = "type")]
    ty: String,
    vars: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDocument {
    n: usize,
    q: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    marked: Option<u32>,
    constraints: Vec<ConstraintDocument>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    cosets: BTreeMap<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    tuples: BTreeMap<String, BTreeSet<Vec<u32>>>,
}

impl From<&CspInstance> for InstanceDocument {
    fn from(inst: &CspInstance) -> Self {
        InstanceDocument {
            n: inst.n,
            q: inst.q,
            marked: Some(inst.marked),
            constraints: inst
                .constraints
                .iter()
                .map(|c| ConstraintDocument {
                    ty: c.ty.to_string(),
                    vars: c.vars.clone(),
                })
                .collect(),
            cosets: inst
                .cosets
                .iter()
                .map(|(id, c)| (id.clone(), serde_json::from_str(&c.to_json()).expect("coset json")))
                .collect(),
            tuples: inst.tuples.clone(),
        }
    }
}

impl TryFrom<InstanceDocument> for CspInstance {
    type Error = CspError;

    fn try_from(doc: InstanceDocument) -> Result<Self, CspError> {
        // Binary instances count ones; larger alphabets default to counting zeros.
        let marked = doc.marked.unwrap_or(if doc.q == 2 { 1 } else { 0 });
        let constraints = doc
            .constraints
            .into_iter()
            .map(|c| Ok(Constraint { ty: c.ty.parse()?, vars: c.vars }))
            .collect::<Result<Vec<_>, CspError>>()?;
        let mut cosets = BTreeMap::new();
        for (id, v) in doc.cosets {
            let c = CosetPredicate::from_json(&v.to_string()).map_err(|e| CspError::Invalid(format!("coset `{id}`: {e}")))?;
            cosets.insert(id, c);
        }
        let inst = CspInstance {
            n: doc.n,
            q: doc.q,
            marked,
            constraints,
            cosets,
            tuples: doc.tuples,
        };
        inst.validate()?;
        Ok(inst)
    }
}

/// One constraint per check; odd exactly when the received bits in the check
/// sum to one. `f(v) = 1` flips bit `v`.
pub fn build_nearest_codeword(g: &ParityCheckGraph, received: &[u8]) -> Result<CspInstance, CspError> {
    if received.len() != g.n {
        return Err(CspError::Length {
            expected: g.n,
            found: received.len(),
        });
    }
    let syndrome = g.syndrome(received);
    let constraints = g
        .checks
        .iter()
        .zip(syndrome)
        .map(|(c, s)| Constraint {
            ty: ConstraintType::Kind(if s == 1 { PredicateKind::Odd } else { PredicateKind::Even }),
            vars: c.clone(),
        })
        .collect();
    CspInstance::new(g.n, 2, 1, constraints)
}

/// φ from `{0..q}` to `{0,1}` with `φ(0) = 1` and `φ(g) = 0` otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StretchMap {
    pub q: u32,
}

impl StretchMap {
    pub fn phi(&self, g: u32) -> u32 {
        u32::from(g == 0)
    }

    pub fn apply(&self, assignment: &[u32]) -> Vec<u32> {
        assignment.iter().map(|&g| self.phi(g)).collect()
    }

    /// Number of symbols in `φ⁻¹(b)`.
    pub fn preimage_size(&self, b: u32) -> u32 {
        if b == 1 {
            1
        } else {
            self.q - 1
        }
    }
}

pub fn stretch(instance: &CspInstance, q: u32) -> Result<(CspInstance, StretchMap), CspError> {
    if q < 2 {
        return Err(CspError::Invalid(format!("cannot stretch to alphabet {q}")));
    }
    if instance.q != 2 || instance.marked != 1 || instance.constraints.iter().any(|c| !matches!(c.ty, ConstraintType::Kind(_))) {
        return Err(CspError::NotStretchable);
    }
    let out = CspInstance::new(instance.n, q, 0, instance.constraints.clone())?;
    Ok((out, StretchMap { q }))
}

/// `X_S(β) = Σ_{α ∈ φ⁻¹(β)} X'_S(α)`.
pub fn collapse_local(family: &LocalDistributionFamily, phi: &StretchMap) -> Result<LocalDistributionFamily, CspError> {
    let report = family.check_consistency();
    if !report.ok() {
        return Err(CspError::Local(LocalError::Invalid(format!("input family fails consistency: {report:?}"))));
    }
    if family.q != phi.q {
        return Err(CspError::Invalid(format!("family alphabet {} but map alphabet {}", family.q, phi.q)));
    }
    let mut out = LocalDistributionFamily::new(2, family.t);
    for (s, table) in family.tables() {
        let mut t = Table::new();
        for (a, p) in table {
            *t.entry(phi.apply(a)).or_insert_with(Rational::zero) += p;
        }
        out.insert(s.clone(), t);
    }
    out.closures = family.closures.clone();
    Ok(out)
}

/// Sums blocks of the stretched moment matrix by φ-image of the row and
/// column assignments (the Gram matrix of the summed vectors).
pub fn collapse_moment(mm: &MomentMatrix, phi: &StretchMap) -> Result<MomentMatrix, CspError> {
    if mm.q != phi.q {
        return Err(CspError::Invalid(format!("matrix alphabet {} but map alphabet {}", mm.q, phi.q)));
    }
    let mut counts: BTreeMap<&Vec<usize>, u64> = BTreeMap::new();
    for (s, _) in &mm.index {
        *counts.entry(s).or_insert(0) += 1;
    }
    if counts.iter().any(|(s, &c)| c != (mm.q as u64).pow(s.len() as u32)) {
        return Err(CspError::Invalid("moment index must list every assignment of each set".into()));
    }
    let mut binary_index: Vec<(Vec<usize>, Vec<u32>)> = Vec::new();
    let mut position: BTreeMap<(Vec<usize>, Vec<u32>), usize> = BTreeMap::new();
    let map: Vec<usize> = mm
        .index
        .iter()
        .map(|(s, a)| {
            let key = (s.clone(), phi.apply(a));
            *position.entry(key.clone()).or_insert_with(|| {
                binary_index.push(key);
                binary_index.len() - 1
            })
        })
        .collect();
    let nb = binary_index.len();
    let mut entries = vec![vec![Rational::zero(); nb]; nb];
    for (i, row) in mm.entries.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            if !x.is_zero() {
                entries[map[i]][map[j]] += x;
            }
        }
    }
    Ok(MomentMatrix {
        q: 2,
        t: mm.t,
        index: binary_index,
        entries,
        family: collapse_local(&mm.family, phi)?,
    })
}

pub fn evaluate(instance: &CspInstance, assignment: &[u32]) -> Result<Evaluation, CspError> {
    if assignment.len() != instance.n {
        return Err(CspError::Length {
            expected: instance.n,
            found: assignment.len(),
        });
    }
    if assignment.iter().any(|&g| g >= instance.q) {
        return Err(CspError::Invalid("assignment value outside alphabet".into()));
    }
    let violated = (0..instance.constraints.len()).find(|&i| !instance.constraint_satisfied(i, assignment));
    Ok(Evaluation {
        satisfied: violated.is_none(),
        ones: assignment.iter().filter(|&&g| g == instance.marked).count(),
        violated,
    })
}

/// Exact Min-Ones optimum, or `None` when nothing satisfies the instance.
///
/// Parity-only binary instances are solved over GF(2) and the solution space
/// scanned by Gray code (kernel dimension at most 24); otherwise binary
/// instances with `n <= 24` are Gray-code scanned and the rest enumerated up
/// to `q^n <= 10^7`.
pub fn brute_force_optimum(instance: &CspInstance) -> Result<Option<Optimum>, CspError> {
    let parity_only = instance.q == 2
        && instance
            .constraints
            .iter()
            .all(|c| matches!(c.ty, ConstraintType::Kind(PredicateKind::Odd | PredicateKind::Even)));
    if parity_only {
        if let Some(r) = parity_optimum(instance)? {
            return Ok(r);
        }
    }
    if instance.q == 2 && instance.n <= MAX_GRAY_N {
        return Ok(gray_scan(instance));
    }
    let space = (instance.q as u64).checked_pow(instance.n as u32);
    if space.is_none_or(|s| s > MAX_ENUMERATION) {
        return Err(CspError::TooLarge(format!("{}^{} assignments", instance.q, instance.n)));
    }
    let mut best: Option<Optimum> = None;
    let mut a = vec![0u32; instance.n];
    loop {
        let e = evaluate(instance, &a)?;
        if e.satisfied && best.as_ref().is_none_or(|b| e.ones < b.ones) {
            best = Some(Optimum {
                ones: e.ones,
                assignment: a.clone(),
            });
        }
        let mut i = 0;
        while i < a.len() {
            a[i] += 1;
            if a[i] < instance.q {
                break;
            }
            a[i] = 0;
            i += 1;
        }
        if i == a.len() {
            break;
        }
    }
    Ok(best)
}

/// `Ok(None)` when the solution space is too large for this path.
fn parity_optimum(instance: &CspInstance) -> Result<Option<Option<Optimum>>, CspError> {
    let f2 = FieldSpec::new(2, 1).expect("GF(2)");
    let rows: Vec<Vec<u32>> = instance
        .constraints
        .iter()
        .map(|c| {
            let mut r = vec![0u32; instance.n];
            for &v in &c.vars {
                r[v] = 1;
            }
            r
        })
        .collect();
    let rhs: Vec<u32> = instance
        .constraints
        .iter()
        .map(|c| {
            let odd = u32::from(c.ty == ConstraintType::Kind(PredicateKind::Odd));
            // With zeros marked, an odd zero count means the sum of the bits
            // has parity |C| + 1.
            if instance.marked == 1 {
                odd
            } else {
                (odd + c.vars.len() as u32) % 2
            }
        })
        .collect();
    let sol = f2
        .solve_linear_cols(&rows, &rhs, instance.n)
        .map_err(|e| CspError::Invalid(e.to_string()))?;
    let Some(sol) = sol else { return Ok(Some(None)) };
    if sol.dimension() > MAX_GRAY_N {
        return Ok(None);
    }
    let words = instance.n.div_ceil(64);
    let pack = |v: &[u32]| {
        let mut w = vec![0u64; words];
        for (i, &b) in v.iter().enumerate() {
            if b == 1 {
                w[i / 64] |= 1 << (i % 64);
            }
        }
        w
    };
    let basis: Vec<Vec<u64>> = sol.kernel.iter().map(|k| pack(k)).collect();
    let mut cur = pack(&sol.particular);
    let ones = |w: &[u64]| -> usize {
        let pop: usize = w.iter().map(|x| x.count_ones() as usize).sum();
        if instance.marked == 1 {
            pop
        } else {
            instance.n - pop
        }
    };
    let mut best = (ones(&cur), cur.clone());
    for step in 1u64..(1u64 << basis.len()) {
        let bit = step.trailing_zeros() as usize;
        for (c, b) in cur.iter_mut().zip(&basis[bit]) {
            *c ^= b;
        }
        let o = ones(&cur);
        if o < best.0 {
            best = (o, cur.clone());
        }
    }
    let assignment: Vec<u32> = (0..instance.n).map(|i| (best.1[i / 64] >> (i % 64) & 1) as u32).collect();
    debug_assert!(evaluate(instance, &assignment).is_ok_and(|e| e.satisfied && e.ones == best.0));
    Ok(Some(Some(Optimum {
        ones: best.0,
        assignment,
    })))
}

fn gray_scan(instance: &CspInstance) -> Option<Optimum> {
    let touching = instance.variable_constraints();
    let mut a = vec![0u32; instance.n];
    let mut sat: Vec<bool> = (0..instance.constraints.len()).map(|i| instance.constraint_satisfied(i, &a)).collect();
    let mut unsat = sat.iter().filter(|s| !**s).count();
    let mut ones = a.iter().filter(|&&g| g == instance.marked).count();
    let mut best = (unsat == 0).then(|| Optimum {
        ones,
        assignment: a.clone(),
    });
    for step in 1u64..(1u64 << instance.n) {
        let v = step.trailing_zeros() as usize;
        a[v] ^= 1;
        if a[v] == instance.marked {
            ones += 1;
        } else {
            ones -= 1;
        }
        for &i in &touching[v] {
            let now = instance.constraint_satisfied(i, &a);
            if now != sat[i] {
                if now {
                    unsat -= 1;
                } else {
                    unsat += 1;
                }
                sat[i] = now;
            }
        }
        if unsat == 0 && best.as_ref().is_none_or(|b| ones < b.ones) {
            best = Some(Optimum {
                ones,
                assignment: a.clone(),
            });
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::local::all_assignments;
    use crate::rational::ratio;

    fn single_check(received: &[u8]) -> CspInstance {
        let g = ParityCheckGraph::new(3, 1, 3, vec![vec![0, 1, 2]]).unwrap();
        build_nearest_codeword(&g, received).unwrap()
    }

    #[test]
    fn nearest_codeword_types() {
        assert_eq!(single_check(&[1, 0, 0]).constraints[0].ty, ConstraintType::Kind(PredicateKind::Odd));
        assert_eq!(single_check(&[1, 1, 0]).constraints[0].ty, ConstraintType::Kind(PredicateKind::Even));
        let g = ParityCheckGraph::new(3, 1, 3, vec![vec![0, 1, 2]]).unwrap();
        assert!(matches!(build_nearest_codeword(&g, &[1, 0]), Err(CspError::Length { .. })));
    }

    #[test]
    fn brute_force_examples() {
        let inst = single_check(&[1, 0, 0]);
        let best = brute_force_optimum(&inst).unwrap().unwrap();
        assert_eq!(best.ones, 1);
        assert!(evaluate(&inst, &best.assignment).unwrap().satisfied);
        assert_eq!(brute_force_optimum(&single_check(&[0, 0, 0])).unwrap().unwrap().ones, 0);

        let contradictory = CspInstance::new(
            3,
            2,
            1,
            vec![
                Constraint { ty: ConstraintType::Kind(PredicateKind::Odd), vars: vec![0, 1, 2] },
                Constraint { ty: ConstraintType::Kind(PredicateKind::Even), vars: vec![0, 1, 2] },
            ],
        )
        .unwrap();
        assert_eq!(brute_force_optimum(&contradictory).unwrap(), None);
        assert_eq!(gray_scan(&contradictory), None);
    }

    #[test]
    fn parity_path_matches_gray_scan() {
        for seed in 0..15 {
            let g = crate::ensembles::sample_ldpc(16, 3, 6, seed).unwrap();
            let mut rng = crate::rng::DetRng::new(seed);
            let received: Vec<u8> = (0..16).map(|_| rng.bernoulli(1, 4) as u8).collect();
            let inst = build_nearest_codeword(&g, &received).unwrap();
            let fast = brute_force_optimum(&inst).unwrap().map(|o| o.ones);
            assert_eq!(fast, gray_scan(&inst).map(|o| o.ones), "seed {seed}");
            let (st, _) = stretch(&inst, 2).unwrap();
            let s = brute_force_optimum(&st).unwrap().map(|o| o.ones);
            assert_eq!(s, gray_scan(&st).map(|o| o.ones), "seed {seed}");
            assert_eq!(s, fast);
        }
    }

    #[test]
    fn evaluate_reports_witness() {
        let inst = single_check(&[1, 0, 0]);
        let e = evaluate(&inst, &[0, 0, 0]).unwrap();
        assert_eq!(e, Evaluation { satisfied: false, ones: 0, violated: Some(0) });
        assert_eq!(evaluate(&inst, &[1, 0, 0]).unwrap().ones, 1);
    }

    #[test]
    fn stretched_predicate_counts() {
        let (st, phi) = stretch(&single_check(&[1, 0, 0]), 4).unwrap();
        let accepted = all_assignments(4, 3).into_iter().filter(|a| st.accepts(&st.constraints[0].ty, a)).count();
        assert_eq!(accepted, 28);
        let (s2, _) = stretch(&single_check(&[1, 0, 0]), 2).unwrap();
        // q = 2 swaps the symbols.
        assert!(s2.accepts(&s2.constraints[0].ty, &[0, 1, 1]));
        assert!(!s2.accepts(&s2.constraints[0].ty, &[1, 0, 0]));
        // Collapsed satisfying assignments satisfy the binary instance.
        let binary = single_check(&[1, 0, 0]);
        for a in all_assignments(4, 3) {
            if st.accepts(&st.constraints[0].ty, &a) {
                assert!(evaluate(&binary, &phi.apply(&a)).unwrap().satisfied);
            }
        }
        assert!(matches!(stretch(&st, 3), Err(CspError::NotStretchable)));
    }

    fn uniform_family(q: u32, vars: &[usize]) -> LocalDistributionFamily {
        let mut f = LocalDistributionFamily::new(q, vars.len());
        for s in crate::local::subsets_up_to(vars, vars.len()).into_iter().skip(1) {
            let p = Rational::new(1.into(), num_bigint::BigInt::from(q).pow(s.len() as u32));
            f.insert(s.clone(), all_assignments(q, s.len()).into_iter().map(|a| (a, p.clone())).collect());
        }
        f
    }

    #[test]
    fn collapse_examples() {
        let c = collapse_local(&uniform_family(4, &[0]), &StretchMap { q: 4 }).unwrap();
        assert_eq!(c.prob(&[0], &[1]).unwrap(), ratio(1, 4));
        let c = collapse_local(&uniform_family(3, &[0, 1]), &StretchMap { q: 3 }).unwrap();
        assert_eq!(c.prob(&[0, 1], &[1, 1]).unwrap(), ratio(1, 9));
        assert_eq!(c.prob(&[0, 1], &[0, 0]).unwrap(), ratio(4, 9));
        assert!(c.check_consistency().ok());

        let mm = MomentMatrix::from_family(uniform_family(4, &[0]), &[0], 1).unwrap();
        let b = collapse_moment(&mm, &StretchMap { q: 4 }).unwrap();
        assert_eq!(b.dim(), 3);
        let diag: Vec<Rational> = (0..3).map(|i| b.entries[i][i].clone()).collect();
        assert_eq!(diag, vec![ratio(1, 1), ratio(1, 4), ratio(3, 4)]);
        // The collapsed entries agree with the collapsed family.
        let rebuilt = MomentMatrix::with_index(b.family.clone(), b.index.clone(), 1).unwrap();
        assert_eq!(rebuilt.entries, b.entries);

        let mut bad = uniform_family(2, &[0]);
        bad.insert(vec![0], Table::from([(vec![0], ratio(3, 2)), (vec![1], ratio(-1, 2))]));
        assert!(collapse_local(&bad, &StretchMap { q: 2 }).is_err());
    }

    #[test]
    fn instance_json_roundtrip() {
        let inst = single_check(&[1, 0, 0]);
        assert_eq!(CspInstance::from_json(&inst.to_json()).unwrap(), inst);
        let h1 = crate::cosets::build_h1(4).unwrap();
        let with = CspInstance::new(
            5,
            4,
            0,
            vec![Constraint { ty: ConstraintType::Coset("h1".into()), vars: vec![0, 2, 4, 1, 3] }],
        );
        assert!(with.is_err());
        let with = CspInstance {
            n: 5,
            q: 4,
            marked: 0,
            constraints: vec![Constraint { ty: ConstraintType::Coset("h1".into()), vars: vec![0, 2, 4, 1, 3] }],
            cosets: BTreeMap::from([("h1".to_string(), h1)]),
            tuples: BTreeMap::new(),
        };
        assert!(with.validate().is_ok());
        assert_eq!(CspInstance::from_json(&with.to_json()).unwrap(), with);
        assert!(CspInstance::from_json(r#"{"n":2,"q":2,"constraints":[{"type":"odd","vars":[0,0]}]}"#).is_err());
        assert!(CspInstance::from_json(r#"{"n":2,"q":2,"constraints":[{"type":"weird","vars":[0]}]}"#).is_err());
        let t = CspInstance::from_json(r#"{"n":2,"q":3,"constraints":[{"type":"tuples:a","vars":[1,0]}],"tuples":{"a":[[1,2],[0,0]]}}"#).unwrap();
        assert_eq!(brute_force_optimum(&t).unwrap().unwrap(), Optimum { ones: 0, assignment: vec![2, 1] });
    }
}
