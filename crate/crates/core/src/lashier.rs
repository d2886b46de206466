//! Lasserre solutions for coset-predicate instances: character equations,
//! width-bounded resolution, the affine sets `H_S`, and exact PSD
//! certification of the moment matrix.
//!
//! A character of `G^V` is stored in exponent form: a frequency `c_v ∈ G` per
//! variable, acting by `f ↦ Σ_v Tr(c_v · f(v)) ∈ GF(p)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cosets::{CosetPredicate, LasserrePredicates};
use crate::csp::{collapse_moment, stretch, Constraint, ConstraintType, CspInstance, StretchMap};
use crate::ensembles::Hypergraph;
use crate::gf::{AffineSolution, FieldSpec};
use crate::local::{self, ConsistencyReport, LocalDistributionFamily, MomentMatrix, Table};
use crate::pidist::PredicateKind;
use crate::rational::{self, Rational};
use crate::rng::DetRng;

/// Hard cap on stored resolution equations.
pub const MAX_EQUATIONS: usize = 1_000_000;
/// Largest annihilator group expanded into explicit equations per constraint.
pub const MAX_DUAL_GROUP: u64 = 100_000;
/// Largest moment matrix assembled.
pub const MAX_MOMENT_DIM: usize = 4_000;
pub const EIGEN_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LasserreError {
    #[error("resolution refutes the system: {0:?}")]
    Refuted(Box<ResolutionWitness>),
    #[error("resolution fixes variable {var}: {witness:?}")]
    Fixed { var: usize, witness: Box<ResolutionWitness> },
    #[error("resolution exceeded {0} equations")]
    TooManyEquations(usize),
    #[error("too large: {0}")]
    TooLarge(String),
    #[error("unsupported instance: {0}")]
    Unsupported(String),
    #[error("no placement among {0} attempts avoids refutation and fixing")]
    NoPlacement(usize),
    #[error("invalid input: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharacterEquation {
    /// Sorted `(variable, nonzero frequency)` pairs.
    pub freq: Vec<(usize, u32)>,
    /// Value of `Σ_v Tr(c_v f(v))` in GF(p).
    pub rhs: u32,
}

impl CharacterEquation {
    pub fn weight(&self) -> usize {
        self.freq.len()
    }

    pub fn support(&self) -> Vec<usize> {
        self.freq.iter().map(|&(v, _)| v).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.freq.is_empty() && self.rhs == 0
    }

    pub fn satisfied_by(&self, field: &FieldSpec, assignment: &BTreeMap<usize, u32>) -> bool {
        let p = field.p();
        let lhs = self
            .freq
            .iter()
            .fold(0, |acc, &(v, c)| (acc + field.trace_raw(field.mul_raw(c, assignment[&v]))) % p);
        lhs == self.rhs
    }

    /// `self + a·other` (with `a ∈ GF(p)`).
    fn combine(&self, other: &CharacterEquation, a: u32, field: &FieldSpec) -> CharacterEquation {
        let p = field.p();
        let mut freq = Vec::with_capacity(self.freq.len() + other.freq.len());
        let (mut i, mut j) = (0, 0);
        while i < self.freq.len() || j < other.freq.len() {
            let take_left = j == other.freq.len() || (i < self.freq.len() && self.freq[i].0 < other.freq[j].0);
            let take_right = i == self.freq.len() || (j < other.freq.len() && other.freq[j].0 < self.freq[i].0);
            if take_left {
                freq.push(self.freq[i]);
                i += 1;
            } else if take_right {
                freq.push((other.freq[j].0, field.scale_raw(other.freq[j].1, a)));
                j += 1;
            } else {
                let c = field.add_raw(self.freq[i].1, field.scale_raw(other.freq[j].1, a));
                if c != 0 {
                    freq.push((self.freq[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
        CharacterEquation {
            freq,
            rhs: (self.rhs + a * other.rhs) % p,
        }
    }

    /// Representative of `{(aχ, az) : a ∈ GF(p)*}`: the first frequency has
    /// leading base-p digit 1.
    pub fn canonical(mut self, field: &FieldSpec) -> CharacterEquation {
        let p = field.p();
        if p == 2 {
            return self;
        }
        let lead = match self.freq.first() {
            Some(&(_, c)) => *field.digits(c).iter().find(|&&d| d != 0).expect("nonzero frequency"),
            None => self.rhs,
        };
        if lead == 0 || lead == 1 {
            return self;
        }
        let inv = (1..p).find(|&a| a * lead % p == 1).expect("unit");
        for (_, c) in self.freq.iter_mut() {
            *c = field.scale_raw(*c, inv);
        }
        self.rhs = self.rhs * inv % p;
        self
    }
}

/// Every nonzero element of the annihilator of the coset's subgroup, placed
/// on `vars`, with right-hand side the pairing against the shift.
pub fn constraint_equations(c: &CosetPredicate, vars: &[usize]) -> Result<Vec<CharacterEquation>, LasserreError> {
    if vars.len() != c.arity() {
        return Err(LasserreError::Invalid(format!("{} variables for arity {}", vars.len(), c.arity())));
    }
    let field = c.field();
    let p = field.p() as u64;
    let dual = c.dual();
    if p.checked_pow(dual.len() as u32).is_none_or(|s| s > MAX_DUAL_GROUP) {
        return Err(LasserreError::TooLarge(format!("annihilator of dimension {} over GF({p})", dual.len())));
    }
    let mut out = BTreeSet::new();
    let mut coeffs = vec![0u32; dual.len()];
    loop {
        // Odometer over GF(p) combinations of the basis.
        let mut i = 0;
        while i < coeffs.len() {
            coeffs[i] += 1;
            if (coeffs[i] as u64) < p {
                break;
            }
            coeffs[i] = 0;
            i += 1;
        }
        if i == coeffs.len() {
            break;
        }
        let mut h = vec![0u32; c.arity()];
        for (a, b) in coeffs.iter().zip(dual) {
            for (x, &y) in h.iter_mut().zip(b) {
                *x = field.add_raw(*x, field.scale_raw(y, *a));
            }
        }
        let rhs = field.trace_pairing(&h, c.shift());
        let mut freq: Vec<(usize, u32)> = vars.iter().copied().zip(h).filter(|&(_, x)| x != 0).collect();
        freq.sort_unstable();
        out.insert(CharacterEquation { freq, rhs }.canonical(field));
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolutionWitness {
    pub equation: CharacterEquation,
    /// Derivation steps `(result, left, right, scalar)` leading to it, by
    /// index into the closure.
    pub steps: Vec<(usize, usize, usize, u32)>,
    /// Original equations used, by index into the closure.
    pub sources: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct ResolutionSystem {
    pub field: FieldSpec,
    pub width: usize,
    pub equations: Vec<CharacterEquation>,
    /// For derived equations: `(left, right, scalar)` with result `left + scalar·right`.
    pub parents: Vec<Option<(usize, usize, u32)>>,
    by_var: HashMap<usize, Vec<usize>>,
}

impl ResolutionSystem {
    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    /// Equations whose support lies inside the sorted set `s`.
    pub fn supported_in(&self, s: &[usize]) -> Vec<&CharacterEquation> {
        let mut cands: BTreeSet<usize> = BTreeSet::new();
        for v in s {
            if let Some(list) = self.by_var.get(v) {
                cands.extend(list.iter().copied());
            }
        }
        cands
            .into_iter()
            .map(|i| &self.equations[i])
            .filter(|e| e.weight() <= s.len() && e.freq.iter().all(|(v, _)| s.binary_search(v).is_ok()))
            .collect()
    }

    pub fn witness(&self, idx: usize) -> ResolutionWitness {
        let mut steps = Vec::new();
        let mut sources = BTreeSet::new();
        let mut stack = vec![idx];
        let mut seen = BTreeSet::new();
        while let Some(i) = stack.pop() {
            if !seen.insert(i) {
                continue;
            }
            match self.parents[i] {
                Some((l, r, a)) => {
                    steps.push((i, l, r, a));
                    stack.push(l);
                    stack.push(r);
                }
                None => {
                    sources.insert(i);
                }
            }
        }
        steps.sort_unstable();
        ResolutionWitness {
            equation: self.equations[idx].clone(),
            steps,
            sources: sources.into_iter().collect(),
        }
    }
}

fn symmetric_difference_size(a: &[(usize, u32)], b: &[(usize, u32)]) -> usize {
    let (mut i, mut j, mut d) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                d += 1;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                d += 1;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    d + (a.len() - i) + (b.len() - j)
}

/// Closes `equations` under `(χ, z), (ψ, y) ↦ (χ − aψ, z − ay)` whenever the
/// result has weight at most `width`. Fails on a refutation (empty support,
/// nonzero right-hand side) or a weight-one equation.
pub fn resolve(field: &FieldSpec, equations: &[CharacterEquation], width: usize) -> Result<ResolutionSystem, LasserreError> {
    let p = field.p();
    let mut rs = ResolutionSystem {
        field: field.clone(),
        width,
        equations: Vec::new(),
        parents: Vec::new(),
        by_var: HashMap::new(),
    };
    let mut index: HashMap<CharacterEquation, usize> = HashMap::new();
    let mut small: Vec<usize> = Vec::new();
    let mut queue = std::collections::VecDeque::new();

    fn check(rs: &ResolutionSystem, i: usize) -> Result<(), LasserreError> {
        let e = &rs.equations[i];
        match e.weight() {
            0 if e.rhs != 0 => Err(LasserreError::Refuted(Box::new(rs.witness(i)))),
            1 => Err(LasserreError::Fixed {
                var: e.freq[0].0,
                witness: Box::new(rs.witness(i)),
            }),
            _ => Ok(()),
        }
    }

    let push = |rs: &mut ResolutionSystem,
                    index: &mut HashMap<CharacterEquation, usize>,
                    small: &mut Vec<usize>,
                    queue: &mut std::collections::VecDeque<usize>,
                    e: CharacterEquation,
                    parent: Option<(usize, usize, u32)>|
     -> Result<(), LasserreError> {
        if e.is_trivial() {
            return Ok(());
        }
        let e = e.canonical(field);
        if index.contains_key(&e) {
            return Ok(());
        }
        if rs.equations.len() >= MAX_EQUATIONS {
            return Err(LasserreError::TooManyEquations(MAX_EQUATIONS));
        }
        let i = rs.equations.len();
        for &(v, _) in &e.freq {
            rs.by_var.entry(v).or_default().push(i);
        }
        if e.weight() <= width {
            small.push(i);
        }
        index.insert(e.clone(), i);
        rs.equations.push(e);
        rs.parents.push(parent);
        queue.push_back(i);
        check(rs, i)
    };

    for e in equations {
        push(&mut rs, &mut index, &mut small, &mut queue, e.clone(), None)?;
    }
    while let Some(i) = queue.pop_front() {
        let e = rs.equations[i].clone();
        // Partners either share a variable with `e` or are light enough that
        // the disjoint union stays within the width.
        let mut partners: BTreeSet<usize> = BTreeSet::new();
        for (v, _) in &e.freq {
            partners.extend(rs.by_var[v].iter().copied());
        }
        if e.weight() < width {
            partners.extend(small.iter().copied().filter(|&j| rs.equations[j].weight() + e.weight() <= width));
        }
        for j in partners {
            if j == i {
                continue;
            }
            let f = rs.equations[j].clone();
            if symmetric_difference_size(&e.freq, &f.freq) > width {
                continue;
            }
            for a in 1..p {
                // χ − aψ
                let neg = (p - a) % p;
                let d = e.combine(&f, neg, field);
                if d.weight() <= width {
                    push(&mut rs, &mut index, &mut small, &mut queue, d, Some((i, j, neg)))?;
                }
            }
        }
    }
    Ok(rs)
}

// ---------------------------------------------------------------------------
// H_S
// ---------------------------------------------------------------------------

/// Solutions on `vars` of the closure equations supported inside `vars`,
/// as an affine space over GF(p) in digit coordinates (`m` digits per variable).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSet {
    pub vars: Vec<usize>,
    pub field: FieldSpec,
    pub solution: AffineSolution,
}

impl AffineSet {
    pub fn dimension(&self) -> usize {
        self.solution.dimension()
    }

    pub fn size(&self) -> u64 {
        (self.field.p() as u64).pow(self.dimension() as u32)
    }

    pub fn contains(&self, alpha: &[u32]) -> bool {
        // Membership: alpha − particular lies in the kernel span.
        let fp = self.field.prime_field();
        let digits = self.field.expand_to_prime(alpha);
        let diff: Vec<u32> = digits.iter().zip(&self.solution.particular).map(|(&a, &b)| fp.sub_raw(a, b)).collect();
        let mut rows = self.solution.kernel.clone();
        let r0 = fp.rank(&rows, diff.len());
        rows.push(diff);
        fp.rank(&rows, rows[0].len()) == r0
    }

    pub fn elements(&self) -> Vec<Vec<u32>> {
        let fp = self.field.prime_field();
        let p = self.field.p();
        let dim = self.dimension();
        let mut out = Vec::with_capacity(self.size() as usize);
        let mut coeffs = vec![0u32; dim];
        loop {
            let mut v = self.solution.particular.clone();
            for (a, k) in coeffs.iter().zip(&self.solution.kernel) {
                for (x, &y) in v.iter_mut().zip(k) {
                    *x = fp.add_raw(*x, fp.scale_raw(y, *a));
                }
            }
            out.push(self.field.collapse_from_prime(&v));
            let mut i = 0;
            while i < dim {
                coeffs[i] += 1;
                if coeffs[i] < p {
                    break;
                }
                coeffs[i] = 0;
                i += 1;
            }
            if i == dim {
                break;
            }
        }
        out.sort();
        out
    }
}

/// `H_S`: assignments on the sorted set `s` satisfying every closure equation
/// supported inside `s`.
pub fn compute_h_s(rs: &ResolutionSystem, s: &[usize]) -> Result<AffineSet, LasserreError> {
    let field = &rs.field;
    let m = field.m() as usize;
    let fp = field.prime_field();
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for e in rs.supported_in(s) {
        let mut row = vec![0u32; m * s.len()];
        for &(v, c) in &e.freq {
            let pos = s.binary_search(&v).unwrap();
            for i in 0..m {
                row[pos * m + i] = field.trace_raw(field.mul_raw(c, field.basis_raw(i as u32)));
            }
        }
        rows.push(row);
        rhs.push(e.rhs);
    }
    let solution = fp
        .solve_linear_cols(&rows, &rhs, m * s.len())
        .map_err(|e| LasserreError::Invalid(e.to_string()))?
        .ok_or_else(|| LasserreError::Invalid(format!("equations inside {s:?} are inconsistent")))?;
    Ok(AffineSet {
        vars: s.to_vec(),
        field: field.clone(),
        solution,
    })
}

// ---------------------------------------------------------------------------
// Coset instances and solutions
// ---------------------------------------------------------------------------

/// Attaches a coset type to each constraint of a stretched instance by arity
/// and kind. `orders[i]` optionally reorders constraint `i`'s variables, which
/// decides the coordinate of the coset each variable takes.
pub fn attach_cosets(
    stretched: &CspInstance,
    cosets: &BTreeMap<(usize, PredicateKind), CosetPredicate>,
    orders: Option<&[Vec<usize>]>,
) -> Result<CspInstance, LasserreError> {
    let mut out = CspInstance {
        n: stretched.n,
        q: stretched.q,
        marked: stretched.marked,
        constraints: Vec::new(),
        cosets: BTreeMap::new(),
        tuples: BTreeMap::new(),
    };
    for (i, c) in stretched.constraints.iter().enumerate() {
        let ConstraintType::Kind(kind) = c.ty else {
            return Err(LasserreError::Unsupported("expected kind-typed constraints".into()));
        };
        let coset = cosets
            .get(&(c.vars.len(), kind))
            .ok_or_else(|| LasserreError::Unsupported(format!("no coset for arity {}, {kind}", c.vars.len())))?;
        if coset.kind() != kind {
            return Err(LasserreError::Invalid(format!("coset for {kind} carries kind {}", coset.kind())));
        }
        let id = format!("{}-{}", kind.name(), c.vars.len());
        out.cosets.entry(id.clone()).or_insert_with(|| coset.clone());
        let vars = match orders {
            Some(o) => {
                let mut a = o[i].clone();
                let mut b = c.vars.clone();
                a.sort_unstable();
                b.sort_unstable();
                if a != b {
                    return Err(LasserreError::Invalid(format!("order {i} is not a permutation of the constraint")));
                }
                o[i].clone()
            }
            None => c.vars.clone(),
        };
        out.constraints.push(Constraint { ty: ConstraintType::Coset(id), vars });
    }
    out.validate().map_err(|e| LasserreError::Invalid(e.to_string()))?;
    Ok(out)
}

pub fn table_cosets(preds: &LasserrePredicates) -> BTreeMap<(usize, PredicateKind), CosetPredicate> {
    preds.entries.iter().map(|e| ((e.arity, e.kind), e.coset.clone())).collect()
}

pub fn instance_equations(instance: &CspInstance) -> Result<Vec<CharacterEquation>, LasserreError> {
    let mut all = Vec::new();
    for c in &instance.constraints {
        let ConstraintType::Coset(id) = &c.ty else {
            return Err(LasserreError::Unsupported("expected coset-typed constraints".into()));
        };
        all.extend(constraint_equations(&instance.cosets[id], &c.vars)?);
    }
    Ok(all)
}

fn instance_field(instance: &CspInstance) -> Result<FieldSpec, LasserreError> {
    match instance.cosets.values().next() {
        Some(c) => Ok(c.field().clone()),
        None => FieldSpec::of_order(instance.q).map_err(|e| LasserreError::Invalid(e.to_string())),
    }
}

#[derive(Debug, Clone)]
pub struct LasserreSolution {
    pub moment: MomentMatrix,
    pub resolution_size: usize,
    pub width: usize,
}

/// `X_S(α) = 1/|H_S|` on `H_S` for every `|S| <= 2t`, with the moment matrix
/// over all `(S, α)`, `|S| <= t`. Resolution runs at width `2t`.
pub fn build_lasserre_solution(instance: &CspInstance, t: usize) -> Result<LasserreSolution, LasserreError> {
    let field = instance_field(instance)?;
    if field.order() != instance.q {
        return Err(LasserreError::Invalid("coset field does not match the alphabet".into()));
    }
    let width = 2 * t;
    let rs = resolve(&field, &instance_equations(instance)?, width)?;
    let vars: Vec<usize> = (0..instance.n).collect();
    let sets = local::subsets_up_to(&vars, width);
    let index_dim: u64 = local::subsets_up_to(&vars, t)
        .iter()
        .map(|s| (instance.q as u64).pow(s.len() as u32))
        .sum();
    if index_dim > MAX_MOMENT_DIM as u64 {
        return Err(LasserreError::TooLarge(format!("moment matrix of dimension {index_dim}")));
    }
    let tables: Vec<Result<Table, LasserreError>> = sets
        .par_iter()
        .map(|s| {
            let h = compute_h_s(&rs, s)?;
            let p = Rational::new(BigInt::one(), BigInt::from(h.size()));
            Ok(h.elements().into_iter().map(|a| (a, p.clone())).collect())
        })
        .collect();
    let mut family = LocalDistributionFamily::new(instance.q, width);
    for (s, t) in sets.into_iter().zip(tables) {
        family.insert(s, t?);
    }
    let moment = MomentMatrix::from_family(family, &vars, t).map_err(|e| LasserreError::Invalid(e.to_string()))?;
    Ok(LasserreSolution {
        moment,
        resolution_size: rs.len(),
        width,
    })
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub instance: CspInstance,
    pub attempt: usize,
}

/// Tries the given variable order first, then seeded shuffles of every
/// constraint's variable order, until resolution at width `2t` neither
/// refutes nor fixes.
pub fn place_cosets(
    stretched: &CspInstance,
    cosets: &BTreeMap<(usize, PredicateKind), CosetPredicate>,
    t: usize,
    seed: u64,
    attempts: usize,
) -> Result<Placement, LasserreError> {
    let field = match cosets.values().next() {
        Some(c) => c.field().clone(),
        None => return Err(LasserreError::Invalid("empty coset table".into())),
    };
    let rng = DetRng::new(seed).substream("coset-placement");
    for attempt in 0..attempts.max(1) {
        let orders: Vec<Vec<usize>> = stretched
            .constraints
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut v = c.vars.clone();
                if attempt > 0 {
                    rng.substream(&format!("{attempt}/{i}")).shuffle(&mut v);
                }
                v
            })
            .collect();
        let inst = attach_cosets(stretched, cosets, Some(&orders))?;
        match resolve(&field, &instance_equations(&inst)?, 2 * t) {
            Ok(_) => return Ok(Placement { instance: inst, attempt }),
            Err(LasserreError::Refuted(_) | LasserreError::Fixed { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(LasserreError::NoPlacement(attempts.max(1)))
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PsdCertificate {
    pub psd: bool,
    pub rank: usize,
    /// Row and explanation for the first failure.
    pub witness: Option<(usize, String)>,
}

/// Exact PSD test by symmetric fraction-free elimination: entries are scaled
/// to integers, then Bareiss steps with diagonal pivoting. A negative pivot,
/// or a zero diagonal with a nonzero entry in its row, refutes PSD.
pub fn exact_psd(entries: &[Vec<Rational>]) -> PsdCertificate {
    let n = entries.len();
    let lcm = entries
        .iter()
        .flatten()
        .fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let mut a: Vec<Vec<BigInt>> = entries
        .iter()
        .map(|r| r.iter().map(|x| (x * Rational::from_integer(lcm.clone())).to_integer()).collect())
        .collect();
    let mut alive: Vec<usize> = (0..n).collect();
    let mut prev = BigInt::one();
    let mut rank = 0;
    loop {
        // Zero diagonals must have zero rows.
        let mut keep = Vec::with_capacity(alive.len());
        for &i in &alive {
            if a[i][i].is_zero() {
                if let Some(&j) = alive.iter().find(|&&j| !a[i][j].is_zero()) {
                    return PsdCertificate {
                        psd: false,
                        rank,
                        witness: Some((i, format!("zero diagonal with nonzero entry in column {j}"))),
                    };
                }
            } else if a[i][i].is_negative() {
                return PsdCertificate {
                    psd: false,
                    rank,
                    witness: Some((i, "negative pivot".into())),
                };
            } else {
                keep.push(i);
            }
        }
        alive = keep;
        let Some(pos) = (0..alive.len()).min_by_key(|&k| a[alive[k]][alive[k]].bits()) else {
            break;
        };
        let piv = alive.swap_remove(pos);
        rank += 1;
        let pv = a[piv][piv].clone();
        let col: Vec<BigInt> = alive.iter().map(|&j| a[j][piv].clone()).collect();
        let updates: Vec<(usize, Vec<BigInt>)> = alive
            .par_iter()
            .enumerate()
            .map(|(x, &j)| {
                let row: Vec<BigInt> = alive
                    .iter()
                    .enumerate()
                    .map(|(y, &k)| {
                        let v = &pv * &a[j][k] - &col[x] * &col[y];
                        let (qt, r) = v.div_rem(&prev);
                        debug_assert!(r.is_zero(), "Bareiss division is exact");
                        qt
                    })
                    .collect();
                (j, row)
            })
            .collect();
        for (j, row) in updates {
            for (&k, v) in alive.iter().zip(row) {
                a[j][k] = v;
            }
        }
        prev = pv;
    }
    PsdCertificate {
        psd: true,
        rank,
        witness: None,
    }
}

pub fn min_eigenvalue(entries: &[Vec<Rational>]) -> f64 {
    let n = entries.len();
    if n == 0 {
        return 0.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| rational::to_f64(&entries[i][j]));
    m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasserreReport {
    pub dimension: usize,
    pub symmetric: bool,
    pub consistency: ConsistencyReport,
    /// Every entry equals the value the inner-product rule reads from the family.
    pub entries_match: bool,
    pub psd_exact: PsdCertificate,
    pub min_eigenvalue: f64,
    pub psd_float: bool,
    pub constraint_support: bool,
    pub support_witness: Option<(usize, Vec<usize>, Vec<u32>)>,
    pub balanced: bool,
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    #[serde(with = "rational::serde_str")]
    pub normalized_value: Rational,
}

impl LasserreReport {
    pub fn ok(&self) -> bool {
        self.symmetric
            && self.consistency.ok()
            && self.entries_match
            && self.psd_exact.psd
            && self.psd_float
            && self.constraint_support
    }
}

/// Exact checks of a moment matrix against `instance`; support is checked by
/// projecting each constraint's coset (or predicate) onto every stored subset
/// of its variables.
pub fn verify_lasserre(mm: &MomentMatrix, instance: &CspInstance) -> LasserreReport {
    let n = mm.dim();
    let symmetric = (0..n).all(|i| (0..i).all(|j| mm.entries[i][j] == mm.entries[j][i]));
    let consistency = mm.family.check_consistency();
    let entries_match = mm.entries.len() == n
        && (0..n).into_par_iter().all(|i| {
            (0..n).all(|j| {
                let (s, a) = &mm.index[i];
                let (u, b) = &mm.index[j];
                let want = match local::join(s, a, u, b) {
                    Some((set, val)) => match mm.family.prob(&set, &val) {
                        Ok(p) => p,
                        Err(_) => return false,
                    },
                    None => Rational::zero(),
                };
                mm.entries[i][j] == want
            })
        })
        && mm.index.first().is_some_and(|(s, _)| s.is_empty())
        && (1..n).all(|i| {
            let (s, a) = &mm.index[i];
            s.len() != 1 || mm.entries[0][i] == mm.family.prob(s, a).unwrap_or_default()
        });
    let psd_exact = exact_psd(&mm.entries);
    let min_eig = min_eigenvalue(&mm.entries);
    let (constraint_support, support_witness) = check_projected_support(&mm.family, instance);
    let uniform = Rational::new(BigInt::one(), BigInt::from(mm.q));
    let balanced = mm.q == instance.q
        && (0..instance.n).all(|v| (0..mm.q).all(|g| mm.family.prob(&[v], &[g]).is_ok_and(|p| p == uniform)));
    let value: Rational = (0..instance.n)
        .map(|v| mm.family.prob(&[v], &[instance.marked]).unwrap_or_default())
        .sum();
    let normalized_value = if instance.n == 0 {
        Rational::zero()
    } else {
        &value / Rational::from_integer(instance.n.into())
    };
    LasserreReport {
        dimension: n,
        symmetric,
        consistency,
        entries_match,
        psd_exact,
        min_eigenvalue: min_eig,
        psd_float: min_eig >= -EIGEN_TOLERANCE,
        constraint_support,
        support_witness,
        balanced,
        value,
        normalized_value,
    }
}

fn check_projected_support(
    family: &LocalDistributionFamily,
    instance: &CspInstance,
) -> (bool, Option<(usize, Vec<usize>, Vec<u32>)>) {
    for (ci, c) in instance.constraints.iter().enumerate() {
        let members: Vec<Vec<u32>> = match &c.ty {
            ConstraintType::Coset(id) => match instance.cosets[id].elements() {
                Ok(e) => e,
                Err(_) => continue,
            },
            ConstraintType::Tuples(id) => instance.tuples[id].iter().cloned().collect(),
            ConstraintType::Kind(_) => {
                if (instance.q as u64).pow(c.vars.len() as u32) > 1_000_000 {
                    continue;
                }
                local::all_assignments(instance.q, c.vars.len())
                    .into_iter()
                    .filter(|a| instance.accepts(&c.ty, a))
                    .collect()
            }
        };
        let mut sorted = c.vars.clone();
        sorted.sort_unstable();
        for (s, table) in family.tables() {
            if s.is_empty() || !s.iter().all(|v| sorted.binary_search(v).is_ok()) {
                continue;
            }
            let pos: Vec<usize> = s.iter().map(|v| c.vars.iter().position(|x| x == v).unwrap()).collect();
            let proj: BTreeSet<Vec<u32>> = members.iter().map(|m| pos.iter().map(|&i| m[i]).collect()).collect();
            for (alpha, p) in table {
                if p.is_positive() && !proj.contains(alpha) {
                    return (false, Some((ci, s.clone(), alpha.clone())));
                }
            }
        }
    }
    (true, None)
}

// ---------------------------------------------------------------------------
// Hypergraph vertex cover
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct HvcSolution {
    pub binary: CspInstance,
    pub coset_instance: CspInstance,
    pub solution: LasserreSolution,
    pub report: LasserreReport,
    pub collapsed: MomentMatrix,
    /// `Σ_v X_v(1)` of the collapsed solution.
    pub value: Rational,
    pub normalized_value: Rational,
}

/// Vertex cover of a `k`-uniform hypergraph as binary Min-Ones ("at least one
/// endpoint in the cover").
pub fn hvc_instance(h: &Hypergraph) -> Result<CspInstance, LasserreError> {
    let constraints = h
        .edges
        .iter()
        .map(|e| Constraint {
            ty: ConstraintType::Kind(PredicateKind::AtLeastOneZero),
            vars: e.clone(),
        })
        .collect();
    CspInstance::new(h.n, 2, 1, constraints).map_err(|e| LasserreError::Invalid(e.to_string()))
}

pub fn hvc_lasserre(h: &Hypergraph, t: usize, seed: u64) -> Result<HvcSolution, LasserreError> {
    if h.k < 3 {
        return Err(LasserreError::Invalid(format!("need k >= 3, got {}", h.k)));
    }
    let q = (h.k - 1) as u32;
    let pred = crate::cosets::hvc_predicate(q).map_err(|e| LasserreError::Invalid(e.to_string()))?;
    let binary = hvc_instance(h)?;
    let (stretched, phi) = stretch(&binary, q).map_err(|e| LasserreError::Invalid(e.to_string()))?;
    let cosets = BTreeMap::from([((h.k, PredicateKind::AtLeastOneZero), pred)]);
    let coset_instance = if h.edges.is_empty() {
        attach_cosets(&stretched, &cosets, None)?
    } else {
        place_cosets(&stretched, &cosets, t, seed, 64)?.instance
    };
    let solution = build_lasserre_solution(&coset_instance, t)?;
    let report = verify_lasserre(&solution.moment, &coset_instance);
    let collapsed = collapse_moment(&solution.moment, &StretchMap { q }).map_err(|e| LasserreError::Invalid(e.to_string()))?;
    debug_assert_eq!(phi.q, q);
    let value: Rational = (0..h.n)
        .map(|v| collapsed.family.prob(&[v], &[1]).unwrap_or_default())
        .sum();
    let normalized_value = if h.n == 0 {
        Rational::zero()
    } else {
        &value / Rational::from_integer(h.n.into())
    };
    Ok(HvcSolution {
        binary,
        coset_instance,
        solution,
        report,
        collapsed,
        value,
        normalized_value,
    })
}
