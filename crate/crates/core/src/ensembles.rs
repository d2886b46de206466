//! Random parity-check graphs, random hypergraphs, and expansion certificates.
//!
//! Codes come from the socket model: `n·d_v` sockets on each side, matched by
//! a uniform permutation, with an edge kept exactly when a variable-check pair
//! is matched an odd number of times.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_traits::{Signed, ToPrimitive};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};
use crate::rng::DetRng;

pub const MAX_EXHAUSTIVE_SUBSETS: u64 = 10_000_000;
pub const MAX_EXHAUSTIVE_S: usize = 12;
/// Hypergraphs up to this many vertices are scanned exhaustively.
pub const MAX_EXHAUSTIVE_VERTICES: usize = 25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EnsembleError {
    #[error("n·d_v = {0} is not divisible by d_c = {1}")]
    Divisibility(usize, usize),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("exhaustive scan needs {0} subsets, above the cap")]
    TooManySubsets(u64),
    #[error("alist parse error on line {line}: {msg}")]
    Alist { line: usize, msg: String },
    #[error("invalid hypergraph: {0}")]
    Hypergraph(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityCheckGraph {
    pub n: usize,
    pub d_v: usize,
    pub d_c: usize,
    /// Sorted variable lists, one per check.
    pub checks: Vec<Vec<usize>>,
    pub seed: Option<u64>,
}

impl ParityCheckGraph {
    pub fn new(n: usize, d_v: usize, d_c: usize, mut checks: Vec<Vec<usize>>) -> Result<Self, EnsembleError> {
        for c in checks.iter_mut() {
            c.sort_unstable();
            if c.windows(2).any(|w| w[0] == w[1]) {
                return Err(EnsembleError::Parameter("repeated variable in a check".into()));
            }
            if c.last().is_some_and(|&v| v >= n) {
                return Err(EnsembleError::Parameter("variable index out of range".into()));
            }
        }
        Ok(ParityCheckGraph {
            n,
            d_v,
            d_c,
            checks,
            seed: None,
        })
    }

    pub fn m(&self) -> usize {
        self.checks.len()
    }

    pub fn variable_neighbors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (j, c) in self.checks.iter().enumerate() {
            for &v in c {
                out[v].push(j);
            }
        }
        out
    }

    pub fn syndrome(&self, word: &[u8]) -> Vec<u8> {
        self.checks
            .iter()
            .map(|c| c.iter().fold(0u8, |acc, &v| acc ^ (word[v] & 1)))
            .collect()
    }

    pub fn is_codeword(&self, word: &[u8]) -> bool {
        self.syndrome(word).iter().all(|&s| s == 0)
    }

    /// Sparse alist text: `n m`, `d_v d_c`, the per-node degrees, then the
    /// 1-based neighbor lists of every variable and every check, each padded
    /// with zeros to the design degree.
    pub fn to_alist(&self) -> String {
        let vn = self.variable_neighbors();
        let mut s = String::new();
        let wv = vn.iter().map(Vec::len).max().unwrap_or(0).max(self.d_v);
        let wc = self.checks.iter().map(Vec::len).max().unwrap_or(0).max(self.d_c);
        writeln!(s, "{} {}", self.n, self.m()).unwrap();
        writeln!(s, "{} {}", wv, wc).unwrap();
        let join = |v: Vec<String>| v.join(" ");
        writeln!(s, "{}", join(vn.iter().map(|l| l.len().to_string()).collect())).unwrap();
        writeln!(s, "{}", join(self.checks.iter().map(|l| l.len().to_string()).collect())).unwrap();
        for (lists, width) in [(&vn, wv), (&self.checks, wc)] {
            for l in lists {
                let mut items: Vec<String> = l.iter().map(|x| (x + 1).to_string()).collect();
                items.resize(width.max(1), "0".to_string());
                writeln!(s, "{}", join(items)).unwrap();
            }
        }
        s
    }

    pub fn parse_alist(text: &str) -> Result<Self, EnsembleError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next_nums = |want: Option<usize>| -> Result<(usize, Vec<usize>), EnsembleError> {
            let (no, l) = lines.next().ok_or(EnsembleError::Alist {
                line: 0,
                msg: "unexpected end of file".into(),
            })?;
            let nums = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| EnsembleError::Alist { line: no, msg: e.to_string() })?;
            if let Some(w) = want {
                if nums.len() != w {
                    return Err(EnsembleError::Alist {
                        line: no,
                        msg: format!("expected {w} numbers, found {}", nums.len()),
                    });
                }
            }
            Ok((no, nums))
        };
        let (no, head) = next_nums(Some(2))?;
        let (n, m) = (head[0], head[1]);
        if n > 1_000_000 || m > 1_000_000 {
            return Err(EnsembleError::Alist { line: no, msg: "dimensions too large".into() });
        }
        let (_, widths) = next_nums(Some(2))?;
        let (d_v, d_c) = (widths[0], widths[1]);
        let (no_v, vdeg) = next_nums(Some(n))?;
        let (no_c, cdeg) = next_nums(Some(m))?;
        if let Some(&d) = vdeg.iter().find(|&&d| d > d_v) {
            return Err(EnsembleError::Alist { line: no_v, msg: format!("degree {d} above width {d_v}") });
        }
        if let Some(&d) = cdeg.iter().find(|&&d| d > d_c) {
            return Err(EnsembleError::Alist { line: no_c, msg: format!("degree {d} above width {d_c}") });
        }
        let mut read_lists = |count: usize, degs: &[usize], bound: usize| -> Result<Vec<Vec<usize>>, EnsembleError> {
            let mut out = Vec::with_capacity(count);
            for &deg in degs.iter().take(count) {
                let (no, nums) = next_nums(None)?;
                let items: Vec<usize> = nums.into_iter().filter(|&x| x != 0).collect();
                if items.len() != deg || items.iter().any(|&x| x > bound) {
                    return Err(EnsembleError::Alist { line: no, msg: "neighbor list disagrees with degree".into() });
                }
                out.push(items.into_iter().map(|x| x - 1).collect());
            }
            Ok(out)
        };
        let vlists = read_lists(n, &vdeg, m)?;
        let clists = read_lists(m, &cdeg, n)?;
        let g = ParityCheckGraph::new(n, d_v, d_c, clists).map_err(|e| EnsembleError::Alist {
            line: 0,
            msg: e.to_string(),
        })?;
        let mut vn = g.variable_neighbors();
        for l in vn.iter_mut() {
            l.sort_unstable();
        }
        let mut vlists = vlists;
        for l in vlists.iter_mut() {
            l.sort_unstable();
        }
        if vn != vlists {
            return Err(EnsembleError::Alist { line: 0, msg: "variable and check lists disagree".into() });
        }
        Ok(g)
    }
}

/// The matching behind a sampled graph: variable socket `s` (owned by
/// variable `s / d_v`) is joined to check socket `perm[s]` (owned by check
/// `perm[s] / d_c`).
#[derive(Debug, Clone)]
pub struct SocketMatching {
    pub n: usize,
    pub d_v: usize,
    pub d_c: usize,
    pub perm: Vec<usize>,
}

impl SocketMatching {
    pub fn multiplicities(&self) -> BTreeMap<(usize, usize), usize> {
        let mut mult = BTreeMap::new();
        for (s, &t) in self.perm.iter().enumerate() {
            *mult.entry((s / self.d_v, t / self.d_c)).or_insert(0) += 1;
        }
        mult
    }

    pub fn collapse(&self) -> ParityCheckGraph {
        let m = self.perm.len() / self.d_c;
        let mut checks = vec![Vec::new(); m];
        for ((v, c), k) in self.multiplicities() {
            if k % 2 == 1 {
                checks[c].push(v);
            }
        }
        ParityCheckGraph::new(self.n, self.d_v, self.d_c, checks).expect("collapsed graph is simple")
    }
}

pub fn sample_sockets(n: usize, d_v: usize, d_c: usize, seed: u64) -> Result<SocketMatching, EnsembleError> {
    if n == 0 || d_v == 0 || d_c == 0 {
        return Err(EnsembleError::Parameter("n, d_v and d_c must be positive".into()));
    }
    if !(n * d_v).is_multiple_of(d_c) {
        return Err(EnsembleError::Divisibility(n * d_v, d_c));
    }
    let mut perm: Vec<usize> = (0..n * d_v).collect();
    DetRng::new(seed).substream("ldpc-sockets").shuffle(&mut perm);
    Ok(SocketMatching { n, d_v, d_c, perm })
}

pub fn sample_ldpc(n: usize, d_v: usize, d_c: usize, seed: u64) -> Result<ParityCheckGraph, EnsembleError> {
    let mut g = sample_sockets(n, d_v, d_c, seed)?.collapse();
    g.seed = Some(seed);
    Ok(g)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegreeProfile {
    pub variable: BTreeMap<usize, usize>,
    pub check: BTreeMap<usize, usize>,
    /// Every variable degree is `d_v` or `d_v − 2` and every check degree is
    /// `d_c` or `d_c − 2`.
    pub conformant: bool,
}

pub fn degree_profile(g: &ParityCheckGraph) -> DegreeProfile {
    let mut variable = BTreeMap::new();
    for l in g.variable_neighbors() {
        *variable.entry(l.len()).or_insert(0) += 1;
    }
    let mut check = BTreeMap::new();
    for c in &g.checks {
        *check.entry(c.len()).or_insert(0) += 1;
    }
    let ok = |d: usize, target: usize| d == target || d + 2 == target;
    let conformant = variable.keys().all(|&d| ok(d, g.d_v)) && check.keys().all(|&d| ok(d, g.d_c));
    DegreeProfile {
        variable,
        check,
        conformant,
    }
}

// ---------------------------------------------------------------------------
// Expansion
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExpansionMode {
    #[serde(rename = "exhaustive")]
    Exhaustive,
    #[serde(rename = "randomized")]
    Randomized { seed: u64, restarts: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExpansionViolation {
    pub constraints: Vec<usize>,
    /// Union size, or the number of variables covered exactly once in the
    /// boundary variant.
    pub covered: usize,
    pub total_arity: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub s_max: usize,
    pub mode: ExpansionMode,
    #[serde(with = "rational::serde_str")]
    pub alpha: Rational,
    pub boundary: bool,
    pub violations: Vec<ExpansionViolation>,
    pub subsets_checked: u64,
}

impl ExpansionReport {
    /// Exhaustive and violation-free.
    pub fn certified(&self) -> bool {
        self.mode == ExpansionMode::Exhaustive && self.violations.is_empty()
    }
}

/// Whether `covered >= total − α·s`.
fn expands(covered: usize, total: usize, s: usize, alpha: &Rational) -> bool {
    let rhs = Rational::from_integer(total.into()) - alpha * Rational::from_integer(s.into());
    Rational::from_integer(covered.into()) >= rhs
}

/// Replays a violation exactly.
pub fn replay_violation(sets: &[Vec<usize>], v: &ExpansionViolation, alpha: &Rational, boundary: bool) -> bool {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    let mut total = 0;
    for &i in &v.constraints {
        total += sets[i].len();
        for &x in &sets[i] {
            *count.entry(x).or_insert(0) += 1;
        }
    }
    let covered = if boundary {
        count.values().filter(|&&c| c == 1).count()
    } else {
        count.len()
    };
    covered == v.covered && total == v.total_arity && !expands(covered, total, v.constraints.len(), alpha)
}

fn binomial_u64(n: u64, r: u64) -> u64 {
    if r > n {
        return 0;
    }
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Checks every set of at most `s_max` constraints (exhaustive) or runs a
/// seeded greedy search for dense clusters (randomized, one-sided).
pub fn check_expansion(
    sets: &[Vec<usize>],
    alpha: &Rational,
    s_max: usize,
    mode: ExpansionMode,
    boundary: bool,
) -> Result<ExpansionReport, EnsembleError> {
    if s_max > sets.len() {
        return Err(EnsembleError::Parameter(format!("s_max {s_max} exceeds constraint count {}", sets.len())));
    }
    if alpha.is_negative() {
        return Err(EnsembleError::Parameter("alpha must be nonnegative".into()));
    }
    let n_vars = sets.iter().flatten().max().map_or(0, |&v| v + 1);
    let (violations, checked) = match mode {
        ExpansionMode::Exhaustive => {
            if s_max > MAX_EXHAUSTIVE_S {
                return Err(EnsembleError::TooManySubsets(u64::MAX));
            }
            let m = sets.len() as u64;
            let total: u64 = (1..=s_max as u64).map(|s| binomial_u64(m, s)).fold(0, u64::saturating_add);
            if total > MAX_EXHAUSTIVE_SUBSETS {
                return Err(EnsembleError::TooManySubsets(total));
            }
            exhaustive_scan(sets, n_vars, alpha, s_max, boundary)
        }
        ExpansionMode::Randomized { seed, restarts } => randomized_scan(sets, n_vars, alpha, s_max, boundary, seed, restarts),
    };
    Ok(ExpansionReport {
        s_max,
        mode,
        alpha: alpha.clone(),
        boundary,
        violations,
        subsets_checked: checked,
    })
}

/// Keeps at most this many violations per report.
const MAX_REPORTED: usize = 16;

struct Cover<'a> {
    sets: &'a [Vec<usize>],
    count: Vec<u32>,
    union: usize,
    ones: usize,
    total: usize,
}

impl<'a> Cover<'a> {
    fn new(sets: &'a [Vec<usize>], n: usize) -> Self {
        Cover {
            sets,
            count: vec![0; n],
            union: 0,
            ones: 0,
            total: 0,
        }
    }

    fn add(&mut self, i: usize) {
        self.total += self.sets[i].len();
        for &x in &self.sets[i] {
            match self.count[x] {
                0 => {
                    self.union += 1;
                    self.ones += 1;
                }
                1 => self.ones -= 1,
                _ => {}
            }
            self.count[x] += 1;
        }
    }

    fn remove(&mut self, i: usize) {
        self.total -= self.sets[i].len();
        for &x in &self.sets[i] {
            self.count[x] -= 1;
            match self.count[x] {
                0 => {
                    self.union -= 1;
                    self.ones -= 1;
                }
                1 => self.ones += 1,
                _ => {}
            }
        }
    }

    fn covered(&self, boundary: bool) -> usize {
        if boundary {
            self.ones
        } else {
            self.union
        }
    }
}

fn exhaustive_scan(
    sets: &[Vec<usize>],
    n: usize,
    alpha: &Rational,
    s_max: usize,
    boundary: bool,
) -> (Vec<ExpansionViolation>, u64) {
    fn dfs(
        cover: &mut Cover,
        chosen: &mut Vec<usize>,
        start: usize,
        s_max: usize,
        alpha: &Rational,
        boundary: bool,
        out: &mut Vec<ExpansionViolation>,
        checked: &mut u64,
    ) {
        *checked += 1;
        let covered = cover.covered(boundary);
        if !expands(covered, cover.total, chosen.len(), alpha) {
            let v = ExpansionViolation {
                constraints: chosen.clone(),
                covered,
                total_arity: cover.total,
            };
            // Keep the smallest violations: DFS reaches deep sets first.
            if out.len() < MAX_REPORTED {
                out.push(v);
            } else if let Some(worst) = (0..out.len()).max_by_key(|&k| out[k].constraints.len()) {
                if out[worst].constraints.len() > chosen.len() {
                    out[worst] = v;
                }
            }
        }
        if chosen.len() == s_max {
            return;
        }
        for i in start..cover.sets.len() {
            cover.add(i);
            chosen.push(i);
            dfs(cover, chosen, i + 1, s_max, alpha, boundary, out, checked);
            chosen.pop();
            cover.remove(i);
        }
    }
    if s_max == 0 {
        return (Vec::new(), 0);
    }
    let per_root: Vec<(Vec<ExpansionViolation>, u64)> = (0..sets.len())
        .into_par_iter()
        .map(|first| {
            let mut cover = Cover::new(sets, n);
            let mut out = Vec::new();
            let mut checked = 0;
            cover.add(first);
            let mut chosen = vec![first];
            dfs(&mut cover, &mut chosen, first + 1, s_max, alpha, boundary, &mut out, &mut checked);
            (out, checked)
        })
        .collect();
    let checked = per_root.iter().map(|(_, c)| c).sum();
    let mut all: Vec<ExpansionViolation> = per_root.into_iter().flat_map(|(v, _)| v).collect();
    all.sort_by(|a, b| (a.constraints.len(), &a.constraints).cmp(&(b.constraints.len(), &b.constraints)));
    all.truncate(MAX_REPORTED);
    (all, checked)
}

fn randomized_scan(
    sets: &[Vec<usize>],
    n: usize,
    alpha: &Rational,
    s_max: usize,
    boundary: bool,
    seed: u64,
    restarts: usize,
) -> (Vec<ExpansionViolation>, u64) {
    let mut rng = DetRng::new(seed).substream("expansion-search");
    let mut out: Vec<ExpansionViolation> = Vec::new();
    let mut checked = 0u64;
    if sets.is_empty() || s_max == 0 {
        return (out, 0);
    }
    for _ in 0..restarts {
        let mut cover = Cover::new(sets, n);
        let first = rng.index(sets.len());
        let mut chosen = vec![first];
        cover.add(first);
        loop {
            checked += 1;
            let covered = cover.covered(boundary);
            if !expands(covered, cover.total, chosen.len(), alpha) {
                let mut c = chosen.clone();
                c.sort_unstable();
                if !out.iter().any(|v| v.constraints == c) && out.len() < MAX_REPORTED {
                    out.push(ExpansionViolation {
                        constraints: c,
                        covered,
                        total_arity: cover.total,
                    });
                }
            }
            if chosen.len() == s_max {
                break;
            }
            // Add the constraint with the largest overlap, ties broken at random.
            let mut best: Vec<usize> = Vec::new();
            let mut best_overlap = 0usize;
            for i in 0..sets.len() {
                if chosen.contains(&i) {
                    continue;
                }
                let overlap = sets[i].iter().filter(|&&x| cover.count[x] > 0).count();
                if overlap > best_overlap || best.is_empty() {
                    if overlap > best_overlap {
                        best.clear();
                    }
                    best_overlap = overlap;
                }
                if overlap == best_overlap {
                    best.push(i);
                }
            }
            let Some(&pick) = best.get(rng.index(best.len().max(1)).min(best.len().saturating_sub(1))) else {
                break;
            };
            cover.add(pick);
            chosen.push(pick);
        }
    }
    out.sort_by(|a, b| (a.constraints.len(), &a.constraints).cmp(&(b.constraints.len(), &b.constraints)));
    (out, checked)
}

/// Largest `s <= cap` for which exhaustive checking finds no violation.
pub fn largest_certified_s(sets: &[Vec<usize>], alpha: &Rational, cap: usize, boundary: bool) -> Result<usize, EnsembleError> {
    let cap = cap.min(sets.len());
    let report = check_expansion(sets, alpha, cap, ExpansionMode::Exhaustive, boundary)?;
    Ok(report
        .violations
        .iter()
        .map(|v| v.constraints.len() - 1)
        .min()
        .unwrap_or(cap))
}

// ---------------------------------------------------------------------------
// Hypergraphs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hypergraph {
    pub n: usize,
    pub k: usize,
    pub edges: Vec<Vec<usize>>,
}

impl Hypergraph {
    pub fn new(n: usize, k: usize, edges: Vec<Vec<usize>>) -> Result<Self, EnsembleError> {
        let mut edges = edges;
        for e in edges.iter_mut() {
            e.sort_unstable();
            if e.len() != k || e.windows(2).any(|w| w[0] == w[1]) || e.last().is_some_and(|&v| v >= n) {
                return Err(EnsembleError::Hypergraph(format!("bad edge {e:?}")));
            }
        }
        Ok(Hypergraph { n, k, edges })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("hypergraph serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, EnsembleError> {
        let h: Hypergraph = serde_json::from_str(text).map_err(|e| EnsembleError::Hypergraph(e.to_string()))?;
        Hypergraph::new(h.n, h.k, h.edges)
    }

    /// Whether `set` (sorted) contains no edge.
    pub fn is_independent(&self, set: &[usize]) -> bool {
        let mut member = vec![false; self.n];
        for &v in set {
            member[v] = true;
        }
        !self.edges.iter().any(|e| e.iter().all(|&v| member[v]))
    }
}

/// `⌊β n⌋` edges, each a uniform `k`-subset, drawn with replacement.
pub fn sample_hypergraph(n: usize, beta: &Rational, k: usize, seed: u64) -> Result<Hypergraph, EnsembleError> {
    if k > n || k == 0 {
        return Err(EnsembleError::Parameter(format!("need 1 <= k <= n, got k={k}, n={n}")));
    }
    if beta.is_negative() {
        return Err(EnsembleError::Parameter("beta must be nonnegative".into()));
    }
    let count = (beta * Rational::from_integer(n.into())).floor().to_integer();
    let count = count.to_usize().ok_or_else(|| EnsembleError::Parameter("edge count too large".into()))?;
    let mut rng = DetRng::new(seed).substream("hypergraph-edges");
    let edges = (0..count).map(|_| rng.sample_subset(n, k)).collect();
    Hypergraph::new(n, k, edges)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub subset_size: usize,
    pub exhaustive: bool,
    /// Every subset of `subset_size` vertices contains an edge.
    pub all_contain_edge: bool,
    /// An edge-free subset of `subset_size` vertices, when one was found.
    pub witness: Option<Vec<usize>>,
    /// Size of the largest edge-free set (exhaustive mode only).
    pub max_independent: Option<usize>,
}

/// Whether every `⌈ε n⌉`-subset contains an edge; exact for `n <= 25`.
pub fn min_uncovered_subset(h: &Hypergraph, epsilon: &Rational, seed: u64) -> CoverageReport {
    let size = (epsilon * Rational::from_integer(h.n.into()))
        .ceil()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX);
    if h.n <= MAX_EXHAUSTIVE_VERTICES {
        let best = maximum_independent_set(h);
        let ok = best.len() < size;
        let witness = (!ok).then(|| best[..size.min(best.len())].to_vec());
        CoverageReport {
            subset_size: size,
            exhaustive: true,
            all_contain_edge: ok,
            witness,
            max_independent: Some(best.len()),
        }
    } else {
        let mut rng = DetRng::new(seed).substream("coverage-search");
        let mut witness = None;
        for _ in 0..200 {
            let mut order: Vec<usize> = (0..h.n).collect();
            rng.shuffle(&mut order);
            let mut set: Vec<usize> = Vec::new();
            for v in order {
                let mut trial = set.clone();
                trial.push(v);
                trial.sort_unstable();
                if h.is_independent(&trial) {
                    set = trial;
                }
            }
            if set.len() >= size {
                set.truncate(size);
                witness = Some(set);
                break;
            }
        }
        CoverageReport {
            subset_size: size,
            exhaustive: false,
            all_contain_edge: witness.is_none(),
            witness,
            max_independent: None,
        }
    }
}

/// Exact maximum edge-free vertex set by branch and bound over bitmasks.
pub fn maximum_independent_set(h: &Hypergraph) -> Vec<usize> {
    assert!(h.n <= 63, "bitmask search supports n <= 63");
    let edges: Vec<u64> = h.edges.iter().map(|e| e.iter().fold(0u64, |m, &v| m | 1 << v)).collect();
    let mut best = 0u64;
    fn go(v: usize, n: usize, chosen: u64, edges: &[u64], best: &mut u64) {
        if chosen.count_ones() + (n - v) as u32 <= best.count_ones() {
            return;
        }
        if v == n {
            *best = chosen;
            return;
        }
        let with = chosen | 1 << v;
        if !edges.iter().any(|&e| e & with == e && e >> v & 1 == 1) {
            go(v + 1, n, with, edges, best);
        }
        go(v + 1, n, chosen, edges, best);
    }
    go(0, h.n, 0, &edges, &mut best);
    (0..h.n).filter(|&v| best >> v & 1 == 1).collect()
}

/// Size of a minimum vertex cover (`n` minus the maximum independent set).
pub fn min_vertex_cover_size(h: &Hypergraph) -> usize {
    h.n - maximum_independent_set(h).len()
}

pub fn alpha_default() -> Rational {
    // 1 + δ with δ = 1/4.
    rational::ratio(5, 4)
}
