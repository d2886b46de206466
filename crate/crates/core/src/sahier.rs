//! Sherali-Adams solutions from canonical product distributions, family
//! verification, and the Feldman LP.
//!
//! Every predicate distribution is symmetric: its mass depends only on which
//! coordinates are zero. Canonical distributions are therefore computed on
//! binary zero-patterns (bit 1 = symbol 0), where a pattern with `j` nonzero
//! positions stands for `(q−1)^j` equally likely assignments.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csp::{ConstraintType, CspInstance};
use crate::ensembles::ParityCheckGraph;
use crate::exactlp::{self, LinearProgram, LpOutcome, Relation};
use crate::local::{self, ConsistencyReport, LocalDistributionFamily, Table};
use crate::pidist::{PredicateKind, SaPredicates, SymmetricDistribution};
use crate::rational::{self, int, Rational};

/// Largest number of sets materialized by [`build_sa_solution`].
pub const MAX_QUERY_SETS: usize = 200_000;
/// Largest q-ary table materialized for a single set.
pub const MAX_TABLE: u64 = 1_000_000;
/// Largest check degree accepted by the Feldman LP.
pub const MAX_FELDMAN_DEGREE: usize = 14;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SaError {
    #[error("closure of {set:?} reached {size} variables, above the budget {budget}")]
    Budget { set: Vec<usize>, size: usize, budget: usize },
    #[error("canonical distribution on {0:?} has zero normalizer")]
    ZeroNormalizer(Vec<usize>),
    #[error("no distribution for arity {arity}, {kind}")]
    MissingPredicate { arity: usize, kind: PredicateKind },
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("family lacks {0:?}")]
    Missing(Vec<usize>),
    #[error("invalid input: {0}")]
    Invalid(String),
}

// ---------------------------------------------------------------------------
// Predicate distributions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct SaPredicateTable {
    pub q: u32,
    entries: BTreeMap<(usize, PredicateKind), SymmetricDistribution>,
}

impl SaPredicateTable {
    pub fn new(q: u32) -> Self {
        SaPredicateTable {
            q,
            entries: BTreeMap::new(),
        }
    }

    pub fn from_sa(p: &SaPredicates) -> Self {
        let mut t = SaPredicateTable::new(p.q);
        for e in &p.entries {
            t.insert(e.arity, e.kind, e.dist.clone());
        }
        t
    }

    pub fn insert(&mut self, arity: usize, kind: PredicateKind, dist: SymmetricDistribution) {
        assert_eq!(dist.q(), self.q, "distribution alphabet mismatch");
        self.entries.insert((arity, kind), dist);
    }

    pub fn get(&self, arity: usize, kind: PredicateKind) -> Option<&SymmetricDistribution> {
        self.entries.get(&(arity, kind))
    }
}

// ---------------------------------------------------------------------------
// Closure
// ---------------------------------------------------------------------------

/// Greedy closure: while some constraint not inside `S̄` has at most two
/// variables outside it, add those variables.
pub fn expansion_closure(set: &[usize], instance: &CspInstance, budget: usize) -> Result<Vec<usize>, SaError> {
    let mut inside = vec![false; instance.n];
    for &v in set {
        inside[v] = true;
    }
    let mut size = set.len();
    let mut absorbed = vec![false; instance.constraints.len()];
    loop {
        let mut changed = false;
        for (i, c) in instance.constraints.iter().enumerate() {
            if absorbed[i] {
                continue;
            }
            let outside: Vec<usize> = c.vars.iter().copied().filter(|&v| !inside[v]).collect();
            if outside.len() <= 2 {
                absorbed[i] = true;
                for v in outside {
                    inside[v] = true;
                    size += 1;
                    changed = true;
                }
            }
        }
        if size > budget {
            let mut s = set.to_vec();
            s.sort_unstable();
            return Err(SaError::Budget { set: s, size, budget });
        }
        if !changed {
            break;
        }
    }
    Ok((0..instance.n).filter(|&v| inside[v]).collect())
}

/// Constraints with every variable inside the sorted set `base`.
pub fn constraints_inside(base: &[usize], instance: &CspInstance) -> Vec<usize> {
    (0..instance.constraints.len())
        .filter(|&i| instance.constraints[i].vars.iter().all(|v| base.binary_search(v).is_ok()))
        .collect()
}

/// Constraints outside `base`, restricted to their variables outside it,
/// checked for `(2, α)`-boundary expansion on singletons and pairs.
pub fn removal_spot_check(base: &[usize], instance: &CspInstance, alpha: &Rational) -> bool {
    let rest: Vec<Vec<usize>> = instance
        .constraints
        .iter()
        .map(|c| c.vars.iter().copied().filter(|v| base.binary_search(v).is_err()).collect::<Vec<_>>())
        .filter(|vars| !vars.is_empty())
        .collect();
    for i in 0..rest.len() {
        for j in i + 1..rest.len() {
            let shared = rest[i].iter().filter(|v| rest[j].contains(v)).count();
            let total = rest[i].len() + rest[j].len();
            let boundary = total - 2 * shared;
            if Rational::from_integer(boundary.into()) < Rational::from_integer(total.into()) - alpha * int(2) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Canonical distributions by variable elimination over zero-patterns
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Factor {
    vars: Vec<usize>,
    vals: Vec<Rational>,
}

impl Factor {
    fn value_at(&self, global: &BTreeMap<usize, bool>) -> &Rational {
        let mut idx = 0;
        for (i, v) in self.vars.iter().enumerate() {
            if global[v] {
                idx |= 1 << i;
            }
        }
        &self.vals[idx]
    }

    fn product(parts: &[Factor]) -> Factor {
        let mut vars: Vec<usize> = parts.iter().flat_map(|f| f.vars.iter().copied()).collect();
        vars.sort_unstable();
        vars.dedup();
        assert!(vars.len() <= 24, "factor over {} variables", vars.len());
        let maps: Vec<Vec<usize>> = parts
            .iter()
            .map(|f| f.vars.iter().map(|v| vars.binary_search(v).unwrap()).collect())
            .collect();
        let vals = (0..1usize << vars.len())
            .map(|idx| {
                let mut acc = Rational::one();
                for (f, map) in parts.iter().zip(&maps) {
                    let mut j = 0;
                    for (bit, &pos) in map.iter().enumerate() {
                        if idx >> pos & 1 == 1 {
                            j |= 1 << bit;
                        }
                    }
                    let x = &f.vals[j];
                    if x.is_zero() {
                        return Rational::zero();
                    }
                    acc *= x;
                }
                acc
            })
            .collect();
        Factor { vars, vals }
    }

    fn sum_out(&self, v: usize) -> Factor {
        let pos = self.vars.binary_search(&v).unwrap();
        let vars: Vec<usize> = self.vars.iter().copied().filter(|&x| x != v).collect();
        let vals = (0..1usize << vars.len())
            .map(|idx| {
                let low = idx & ((1 << pos) - 1);
                let high = (idx >> pos) << (pos + 1);
                &self.vals[low | high] + &self.vals[low | high | 1 << pos]
            })
            .collect();
        Factor { vars, vals }
    }
}

fn binomial(n: usize, r: usize) -> BigInt {
    (0..r).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

/// Pattern weight of one constraint: `a_r / (C(k,r) (q−1)^{k−r})` for `r`
/// zeros.
fn constraint_factor(vars: &[usize], dist: &SymmetricDistribution) -> Factor {
    let k = vars.len();
    let q1 = BigInt::from(dist.q() - 1);
    let per_r: Vec<Rational> = (0..=k)
        .map(|r| {
            let a = dist.weights().weight(r);
            if a.is_zero() {
                a
            } else {
                a / Rational::from_integer(binomial(k, r) * q1.pow((k - r) as u32))
            }
        })
        .collect();
    let mut sorted = vars.to_vec();
    sorted.sort_unstable();
    let vals = (0..1usize << k).map(|idx| per_r[idx.count_ones() as usize].clone()).collect();
    Factor { vars: sorted, vals }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalDistribution {
    pub base: Vec<usize>,
    pub constraints: Vec<usize>,
    pub normalizer: Rational,
    /// Marginal on the requested subset, as a q-ary table.
    pub marginal: Table,
    pub subset: Vec<usize>,
}

/// Marginal on `subset ⊆ base` of the product of the constraint
/// distributions inside `base`, normalized, and uniform on variables no
/// constraint touches.
pub fn canonical_distribution(
    base: &[usize],
    subset: &[usize],
    instance: &CspInstance,
    table: &SaPredicateTable,
) -> Result<CanonicalDistribution, SaError> {
    let q = table.q;
    if (q as u64).checked_pow(subset.len() as u32).is_none_or(|s| s > MAX_TABLE) {
        return Err(SaError::TooLarge(format!("table over {} variables with q = {q}", subset.len())));
    }
    let cons = constraints_inside(base, instance);
    let mut factors: Vec<Factor> = Vec::new();
    let q1 = Rational::from_integer(BigInt::from(q - 1));
    for &v in base {
        factors.push(Factor {
            vars: vec![v],
            vals: vec![q1.clone(), Rational::one()],
        });
    }
    for &i in &cons {
        let c = &instance.constraints[i];
        let ConstraintType::Kind(kind) = c.ty else {
            return Err(SaError::Unsupported("canonical distributions need kind-typed constraints".into()));
        };
        let dist = table.get(c.vars.len(), kind).ok_or(SaError::MissingPredicate {
            arity: c.vars.len(),
            kind,
        })?;
        factors.push(constraint_factor(&c.vars, dist));
    }
    let mut pending: Vec<usize> = base.iter().copied().filter(|v| subset.binary_search(v).is_err()).collect();
    while !pending.is_empty() {
        // Min-degree order: eliminate the variable whose merged scope is smallest.
        let (best, _) = pending
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let mut scope: Vec<usize> = factors
                    .iter()
                    .filter(|f| f.vars.contains(&v))
                    .flat_map(|f| f.vars.iter().copied())
                    .collect();
                scope.sort_unstable();
                scope.dedup();
                (i, scope.len())
            })
            .min_by_key(|&(i, w)| (w, pending[i]))
            .unwrap();
        let v = pending.swap_remove(best);
        let (touch, keep): (Vec<Factor>, Vec<Factor>) = factors.into_iter().partition(|f| f.vars.contains(&v));
        factors = keep;
        factors.push(Factor::product(&touch).sum_out(v));
    }
    let joint = Factor::product(&factors);
    let normalizer: Rational = joint.vals.iter().sum();
    if normalizer.is_zero() {
        return Err(SaError::ZeroNormalizer(base.to_vec()));
    }
    // The joint scope is `subset` (every base variable has a unary factor).
    debug_assert_eq!(joint.vars, subset);
    let mut marginal = Table::new();
    for alpha in local::all_assignments(q, subset.len()) {
        let pattern: BTreeMap<usize, bool> = subset.iter().zip(&alpha).map(|(&v, &g)| (v, g == 0)).collect();
        let nonzero = alpha.iter().filter(|&&g| g != 0).count() as u32;
        let p = joint.value_at(&pattern) / &normalizer / q1.pow(nonzero as i32);
        if !p.is_zero() {
            marginal.insert(alpha, p);
        }
    }
    Ok(CanonicalDistribution {
        base: base.to_vec(),
        constraints: cons,
        normalizer,
        marginal,
        subset: subset.to_vec(),
    })
}

/// Enumerated zero-pattern support of a canonical distribution whose
/// constraints are all parity predicates. The patterns satisfying every
/// parity condition form an affine space over GF(2); each point carries an
/// exact integer weight proportional to its probability.
#[derive(Debug, Clone)]
pub struct PatternSupport {
    base: Vec<usize>,
    q: u32,
    points: Vec<u64>,
    weights: Vec<u128>,
    total: u128,
}

/// Largest affine dimension enumerated by [`PatternSupport`].
pub const MAX_SUPPORT_DIM: usize = 20;

impl PatternSupport {
    /// `Ok(None)` when this representation does not apply (non-parity
    /// constraints, too many points, or weights beyond 128 bits).
    pub fn build(base: &[usize], instance: &CspInstance, table: &SaPredicateTable) -> Result<Option<Self>, SaError> {
        if base.len() > 64 {
            return Ok(None);
        }
        let cons = constraints_inside(base, instance);
        let mut masks = Vec::new();
        let mut rows = Vec::new();
        let mut rhs = Vec::new();
        let mut scaled: Vec<Vec<u128>> = Vec::new();
        for &i in &cons {
            let c = &instance.constraints[i];
            let kind = match c.ty {
                ConstraintType::Kind(k @ (PredicateKind::Odd | PredicateKind::Even)) => k,
                _ => return Ok(None),
            };
            let dist = table.get(c.vars.len(), kind).ok_or(SaError::MissingPredicate {
                arity: c.vars.len(),
                kind,
            })?;
            let mut row = vec![0u32; base.len()];
            let mut mask = 0u64;
            for v in &c.vars {
                let pos = base.binary_search(v).expect("constraint inside base");
                row[pos] = 1;
                mask |= 1 << pos;
            }
            rows.push(row);
            rhs.push(u32::from(kind == PredicateKind::Odd));
            masks.push(mask);
            let f = constraint_factor(&c.vars, dist);
            let per_r: Vec<Rational> = (0..=c.vars.len()).map(|r| f.vals[(1usize << r) - 1].clone()).collect();
            let lcm = per_r
                .iter()
                .fold(BigInt::one(), |l, x| num_integer::Integer::lcm(&l, x.denom()));
            let ints: Option<Vec<u128>> = per_r
                .iter()
                .map(|x| {
                    use num_traits::ToPrimitive;
                    (x * Rational::from_integer(lcm.clone())).to_integer().to_u128()
                })
                .collect();
            match ints {
                Some(v) => scaled.push(v),
                None => return Ok(None),
            }
        }
        let f2 = crate::gf::FieldSpec::new(2, 1).expect("GF(2)");
        let sol = f2
            .solve_linear_cols(&rows, &rhs, base.len())
            .map_err(|e| SaError::Invalid(e.to_string()))?;
        let Some(sol) = sol else {
            return Err(SaError::ZeroNormalizer(base.to_vec()));
        };
        if sol.dimension() > MAX_SUPPORT_DIM {
            return Ok(None);
        }
        let pack = |v: &[u32]| v.iter().enumerate().fold(0u64, |m, (i, &b)| m | (u64::from(b) << i));
        let kernel: Vec<u64> = sol.kernel.iter().map(|k| pack(k)).collect();
        let q1 = u128::from(table.q - 1);
        let mut point = pack(&sol.particular);
        let mut points = Vec::with_capacity(1 << kernel.len());
        let mut weights = Vec::with_capacity(1 << kernel.len());
        let mut total: u128 = 0;
        for step in 0u64..(1u64 << kernel.len()) {
            if step > 0 {
                point ^= kernel[step.trailing_zeros() as usize];
            }
            let nonzero = base.len() as u32 - point.count_ones();
            let mut w = q1.checked_pow(nonzero);
            for (mask, ints) in masks.iter().zip(&scaled) {
                w = w.and_then(|w| w.checked_mul(ints[(point & mask).count_ones() as usize]));
            }
            let Some(w) = w else { return Ok(None) };
            let Some(t) = total.checked_add(w) else { return Ok(None) };
            total = t;
            points.push(point);
            weights.push(w);
        }
        if total == 0 {
            return Err(SaError::ZeroNormalizer(base.to_vec()));
        }
        Ok(Some(PatternSupport {
            base: base.to_vec(),
            q: table.q,
            points,
            weights,
            total,
        }))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// q-ary marginal on `subset ⊆ base`.
    pub fn marginal(&self, subset: &[usize]) -> Result<Table, SaError> {
        if (self.q as u64).checked_pow(subset.len() as u32).is_none_or(|s| s > MAX_TABLE) {
            return Err(SaError::TooLarge(format!("table over {} variables with q = {}", subset.len(), self.q)));
        }
        let pos: Vec<usize> = subset
            .iter()
            .map(|v| self.base.binary_search(v).map_err(|_| SaError::Invalid(format!("{v} not in base"))))
            .collect::<Result<_, _>>()?;
        let mut counts = vec![0u128; 1 << subset.len()];
        for (&p, &w) in self.points.iter().zip(&self.weights) {
            let idx = pos.iter().enumerate().fold(0usize, |acc, (i, &b)| acc | ((p >> b & 1) as usize) << i);
            counts[idx] += w;
        }
        let total = Rational::from_integer(BigInt::from(self.total));
        let q1 = Rational::from_integer(BigInt::from(self.q - 1));
        let mut out = Table::new();
        for alpha in local::all_assignments(self.q, subset.len()) {
            let idx = alpha.iter().enumerate().fold(0usize, |acc, (i, &g)| acc | usize::from(g == 0) << i);
            if counts[idx] == 0 {
                continue;
            }
            let nonzero = alpha.iter().filter(|&&g| g != 0).count() as i32;
            out.insert(alpha, Rational::from_integer(BigInt::from(counts[idx])) / &total / q1.pow(nonzero));
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Solutions
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    table: Table,
    closure: Vec<usize>,
}

/// Lazily evaluated family: `X_S` is the marginal of the canonical
/// distribution on the closure of `S`. Results are memoized.
pub struct SaBuilder<'a> {
    instance: &'a CspInstance,
    table: &'a SaPredicateTable,
    pub t: usize,
    pub budget: usize,
    memo: Mutex<HashMap<Vec<usize>, Result<Entry, SaError>>>,
    supports: Mutex<HashMap<Vec<usize>, Option<Arc<PatternSupport>>>>,
}

impl<'a> SaBuilder<'a> {
    pub fn new(instance: &'a CspInstance, table: &'a SaPredicateTable, t: usize, budget: usize) -> Result<Self, SaError> {
        if instance.q != table.q || instance.marked != 0 {
            return Err(SaError::Unsupported(format!(
                "need a stretched instance over q = {} (got q = {}, marked = {})",
                table.q, instance.q, instance.marked
            )));
        }
        Ok(SaBuilder {
            instance,
            table,
            t,
            budget,
            memo: Mutex::new(HashMap::new()),
            supports: Mutex::new(HashMap::new()),
        })
    }

    pub fn query(&self, set: &[usize]) -> Result<(Table, Vec<usize>), SaError> {
        if let Some(r) = self.memo.lock().unwrap().get(set) {
            return r.clone().map(|e| (e.table, e.closure));
        }
        let result = expansion_closure(set, self.instance, self.budget).and_then(|closure| {
            let table = match self.support(&closure)? {
                Some(sup) => sup.marginal(set)?,
                None => canonical_distribution(&closure, set, self.instance, self.table)?.marginal,
            };
            Ok(Entry { table, closure })
        });
        self.memo.lock().unwrap().insert(set.to_vec(), result.clone());
        result.map(|e| (e.table, e.closure))
    }

    fn support(&self, base: &[usize]) -> Result<Option<Arc<PatternSupport>>, SaError> {
        if let Some(s) = self.supports.lock().unwrap().get(base) {
            return Ok(s.clone());
        }
        let built = PatternSupport::build(base, self.instance, self.table)?.map(Arc::new);
        self.supports.lock().unwrap().insert(base.to_vec(), built.clone());
        Ok(built)
    }

    /// Evaluates `sets` in parallel into a family; deterministic in content.
    pub fn materialize(&self, sets: &[Vec<usize>]) -> Result<LocalDistributionFamily, SaError> {
        let results: Vec<Result<(Table, Vec<usize>), SaError>> = sets.par_iter().map(|s| self.query(s)).collect();
        let mut family = LocalDistributionFamily::new(self.table.q, self.t);
        for (s, r) in sets.iter().zip(results) {
            let (table, closure) = r?;
            family.insert(s.clone(), table);
            family.closures.insert(s.clone(), closure);
        }
        Ok(family)
    }
}

/// Every set of at most `t` variables, plus every constraint's variable set
/// and all of its subsets.
pub fn query_sets(instance: &CspInstance, t: usize) -> Vec<Vec<usize>> {
    let vars: Vec<usize> = (0..instance.n).collect();
    let mut sets: std::collections::BTreeSet<Vec<usize>> = local::subsets_up_to(&vars, t).into_iter().collect();
    for c in &instance.constraints {
        let mut vs = c.vars.clone();
        vs.sort_unstable();
        sets.extend(local::subsets_up_to(&vs, vs.len()));
    }
    sets.into_iter().collect()
}

fn count_query_sets(n: usize, t: usize) -> u64 {
    let mut total = 0u64;
    let mut c = 1u64;
    for s in 0..=t.min(n) {
        total = total.saturating_add(c);
        c = c.saturating_mul((n - s) as u64) / (s as u64 + 1);
    }
    total
}

#[derive(Debug, Clone)]
pub struct SaSolution {
    pub family: LocalDistributionFamily,
    pub max_closure: usize,
    /// Closures whose removal instance failed the pairwise boundary check.
    pub removal_failures: usize,
}

pub fn build_sa_solution(instance: &CspInstance, table: &SaPredicateTable, t: usize, budget: usize) -> Result<SaSolution, SaError> {
    if count_query_sets(instance.n, t) > MAX_QUERY_SETS as u64 {
        return Err(SaError::TooLarge(format!("all sets of size <= {t} over {} variables", instance.n)));
    }
    let builder = SaBuilder::new(instance, table, t, budget)?;
    let sets = query_sets(instance, t);
    let family = builder.materialize(&sets)?;
    let alpha = rational::ratio(9, 4);
    let closures: std::collections::BTreeSet<&Vec<usize>> = family.closures.values().collect();
    let removal_failures = closures.iter().filter(|c| !removal_spot_check(c, instance, &alpha)).count();
    let max_closure = family.closures.values().map(Vec::len).max().unwrap_or(0);
    Ok(SaSolution {
        family,
        max_closure,
        removal_failures,
    })
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportWitness {
    pub constraint: usize,
    pub alpha: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyReport {
    pub consistency: ConsistencyReport,
    pub constraints_checked: usize,
    pub support_ok: bool,
    pub support_witness: Option<SupportWitness>,
    /// Every variable has a stored, uniform singleton marginal.
    pub balanced: bool,
    /// Common value of `X_v(marked)` when every singleton agrees.
    #[serde(with = "rational::serde_opt")]
    pub bias: Option<Rational>,
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    #[serde(with = "rational::serde_str")]
    pub normalized_value: Rational,
}

impl FamilyReport {
    pub fn ok(&self) -> bool {
        self.consistency.ok() && self.support_ok
    }
}

pub fn verify_family(family: &LocalDistributionFamily, instance: &CspInstance) -> FamilyReport {
    let consistency = family.check_consistency();
    let mut support_witness = None;
    let mut constraints_checked = 0;
    'cons: for (i, c) in instance.constraints.iter().enumerate() {
        let mut sorted = c.vars.clone();
        sorted.sort_unstable();
        let Some(table) = family.table(&sorted) else { continue };
        constraints_checked += 1;
        let pos: Vec<usize> = c.vars.iter().map(|v| sorted.binary_search(v).unwrap()).collect();
        for (alpha, p) in table {
            if p.is_positive() {
                let ordered: Vec<u32> = pos.iter().map(|&j| alpha[j]).collect();
                if !instance.accepts(&c.ty, &ordered) {
                    support_witness = Some(SupportWitness { constraint: i, alpha: ordered });
                    break 'cons;
                }
            }
        }
    }
    let uniform = Rational::new(1.into(), family.q.into());
    let singles: Vec<Option<&Table>> = (0..instance.n).map(|v| family.table(&[v])).collect();
    let balanced = family.q == instance.q
        && singles
            .iter()
            .all(|t| t.is_some_and(|t| (0..family.q).all(|g| t.get(&vec![g]).is_some_and(|p| *p == uniform))));
    let marks: Vec<Rational> = singles
        .iter()
        .map(|t| t.and_then(|t| t.get(&vec![instance.marked]).cloned()).unwrap_or_default())
        .collect();
    let value: Rational = marks.iter().sum();
    let bias = (singles.iter().all(Option::is_some) && marks.windows(2).all(|w| w[0] == w[1]))
        .then(|| marks.first().cloned().unwrap_or_default());
    let normalized_value = if instance.n == 0 {
        Rational::zero()
    } else {
        &value / Rational::from_integer(instance.n.into())
    };
    FamilyReport {
        support_ok: support_witness.is_none(),
        consistency,
        constraints_checked,
        support_witness,
        balanced,
        bias,
        value,
        normalized_value,
    }
}

// ---------------------------------------------------------------------------
// Feldman LP
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FeldmanLp {
    pub lp: LinearProgram,
    pub n: usize,
    /// Per check: (subset as a bitmask over the check's sorted variables, LP column).
    pub w: Vec<Vec<(u32, usize)>>,
}

/// Variables `f_i ∈ [0,1]` and `w_{j,S} >= 0` for `S ∈ E_j` (subsets of
/// `N(j)` whose size has the parity of the received syndrome bit), with
/// `Σ_S w_{j,S} = 1` and `f_i = Σ_{S ∋ i} w_{j,S}`. Objective `(1/n) Σ f_i`.
pub fn feldman_lp(g: &ParityCheckGraph, received: &[u8]) -> Result<FeldmanLp, SaError> {
    if received.len() != g.n {
        return Err(SaError::Invalid(format!("received word has length {}, expected {}", received.len(), g.n)));
    }
    if let Some(d) = g.checks.iter().map(Vec::len).find(|&d| d > MAX_FELDMAN_DEGREE) {
        return Err(SaError::TooLarge(format!("check degree {d} above {MAX_FELDMAN_DEGREE}")));
    }
    let syndrome = g.syndrome(received);
    let mut lp = LinearProgram::new();
    let inv_n = Rational::new(1.into(), BigInt::from(g.n.max(1)));
    for i in 0..g.n {
        let f = lp.add_variable(format!("f{i}"), Some(Rational::zero()), Some(Rational::one()));
        lp.set_objective(f, inv_n.clone());
    }
    let mut w = Vec::new();
    for (j, check) in g.checks.iter().enumerate() {
        let d = check.len();
        let cols: Vec<(u32, usize)> = (0u32..1 << d)
            .filter(|m| m.count_ones() % 2 == u32::from(syndrome[j]))
            .map(|m| (m, lp.add_nonneg(format!("w{j}_{m}"))))
            .collect();
        lp.add_constraint(cols.iter().map(|&(_, c)| (c, Rational::one())).collect(), Relation::Eq, Rational::one())
            .expect("valid row");
        for (pos, &v) in check.iter().enumerate() {
            let mut terms: Vec<(usize, Rational)> = vec![(v, Rational::one())];
            terms.extend(cols.iter().filter(|(m, _)| m >> pos & 1 == 1).map(|&(_, c)| (c, -Rational::one())));
            lp.add_constraint(terms, Relation::Eq, Rational::zero()).expect("valid row");
        }
        w.push(cols);
    }
    Ok(FeldmanLp { lp, n: g.n, w })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeResult {
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    #[serde(with = "rational::serde_vec")]
    pub flips: Vec<Rational>,
    pub integral: bool,
    pub unique: bool,
    /// `received + f` when the optimum is integral and unique.
    pub codeword: Option<Vec<u8>>,
}

impl DecodeResult {
    pub fn success(&self) -> bool {
        self.codeword.is_some()
    }
}

/// Solves the Feldman LP. Uniqueness of an integral optimum `f*` is probed by
/// a second LP that fixes the objective and maximizes `Σ_i |f_i − f*_i|`
/// (linear because `f*` is 0/1); the optimum is unique iff that maximum is 0.
pub fn lp_decode(g: &ParityCheckGraph, received: &[u8]) -> Result<DecodeResult, SaError> {
    let fl = feldman_lp(g, received)?;
    let sol = match exactlp::solve(&fl.lp) {
        LpOutcome::Optimal(s) => s,
        other => return Err(SaError::Invalid(format!("Feldman LP is always feasible and bounded, got {other:?}"))),
    };
    let flips: Vec<Rational> = sol.assignment[..g.n].to_vec();
    let integral = flips.iter().all(|x| x.is_integer());
    let mut unique = false;
    if integral {
        let mut probe = fl.lp.clone();
        for j in 0..probe.num_variables() {
            probe.set_objective(j, Rational::zero());
        }
        probe
            .add_constraint((0..g.n).map(|i| (i, Rational::one())).collect(), Relation::Eq, flips.iter().sum())
            .expect("valid row");
        for (i, x) in flips.iter().enumerate() {
            // Minimize −Σ|f_i − f*_i|: coefficient −1 where f*_i = 0, +1 where f*_i = 1.
            probe.set_objective(i, if x.is_zero() { -Rational::one() } else { Rational::one() });
        }
        unique = match exactlp::solve(&probe) {
            LpOutcome::Optimal(p) => {
                let ones: Rational = flips.iter().sum();
                // Objective equals Σ_{f*=1} f_i − Σ_{f*=0} f_i = |f*| − distance.
                p.value == ones
            }
            _ => false,
        };
    }
    let codeword = (integral && unique).then(|| {
        received
            .iter()
            .zip(&flips)
            .map(|(&r, f)| r ^ u8::from(f.is_one()))
            .collect()
    });
    Ok(DecodeResult {
        value: sol.value,
        flips,
        integral,
        unique,
        codeword,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeldmanPoint {
    pub point: Vec<Rational>,
    pub objective: Rational,
    /// Why the point is not feasible, if it is not.
    pub violation: Option<String>,
}

/// `f_i = X_{i}(1)`, `w_{j,S} = X_{N(j)}(1_S)` from a binary family.
pub fn sa_to_feldman(family: &LocalDistributionFamily, g: &ParityCheckGraph, received: &[u8]) -> Result<FeldmanPoint, SaError> {
    if family.q != 2 {
        return Err(SaError::Invalid("family must be binary".into()));
    }
    let fl = feldman_lp(g, received)?;
    let mut point = vec![Rational::zero(); fl.lp.num_variables()];
    for (i, x) in point.iter_mut().enumerate().take(g.n) {
        *x = family.prob(&[i], &[1]).map_err(|_| SaError::Missing(vec![i]))?;
    }
    let mut violation = None;
    for (j, check) in g.checks.iter().enumerate() {
        let table = family.table(check).ok_or_else(|| SaError::Missing(check.clone()))?;
        for (alpha, p) in table {
            let mask = alpha.iter().enumerate().fold(0u32, |m, (i, &b)| m | (b << i));
            match fl.w[j].iter().find(|(m, _)| *m == mask) {
                Some(&(_, col)) => point[col] = p.clone(),
                None if p.is_zero() => {}
                None => {
                    violation.get_or_insert_with(|| format!("check {j} puts mass {} on wrong-parity pattern {alpha:?}", rational::Display(p)));
                }
            }
        }
    }
    if violation.is_none() {
        if let Err(v) = fl.lp.check_assignment(&point) {
            violation = Some(format!("{v:?}"));
        }
    }
    Ok(FeldmanPoint {
        objective: fl.lp.objective_value(&point),
        point,
        violation,
    })
}
