//! Local distribution families and moment matrices, shared by both hierarchies.

use std::collections::BTreeMap;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LocalError {
    #[error("set {0:?} is not stored")]
    Missing(Vec<usize>),
    #[error("invalid family: {0}")]
    Invalid(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Table = BTreeMap<Vec<u32>, Rational>;

/// Exact marginals `X_S(α)` on a collection of variable sets. Sets are sorted
/// variable lists; assignments list values in the same order. Missing
/// assignments have probability zero.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocalDistributionFamily {
    pub q: u32,
    pub t: usize,
    tables: BTreeMap<Vec<usize>, Table>,
    /// Closure set used to produce each entry, when one was used.
    pub closures: BTreeMap<Vec<usize>, Vec<usize>>,
}

/// Sums `table` (over the sorted set `from`) down to the sorted subset `to`.
pub fn marginalize(table: &Table, from: &[usize], to: &[usize]) -> Table {
    let pos: Vec<usize> = to
        .iter()
        .map(|v| from.binary_search(v).expect("marginal target must be a subset"))
        .collect();
    let mut out = Table::new();
    for (alpha, p) in table {
        if p.is_zero() {
            continue;
        }
        let key: Vec<u32> = pos.iter().map(|&i| alpha[i]).collect();
        *out.entry(key).or_insert_with(Rational::zero) += p;
    }
    out
}

fn tables_equal(a: &Table, b: &Table) -> bool {
    let nz = |t: &Table| t.iter().filter(|(_, p)| !p.is_zero()).map(|(k, p)| (k.clone(), p.clone())).collect::<Vec<_>>();
    nz(a) == nz(b)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyWitness {
    #[serde(rename = "S")]
    pub s: Vec<usize>,
    #[serde(rename = "T")]
    pub t: Vec<usize>,
    pub alpha: Vec<u32>,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyReport {
    pub empty_set_ok: bool,
    pub nonnegative: bool,
    pub normalized: bool,
    pub pairs_checked: usize,
    pub witness: Option<ConsistencyWitness>,
}

impl ConsistencyReport {
    pub fn ok(&self) -> bool {
        self.empty_set_ok && self.nonnegative && self.normalized && self.witness.is_none()
    }
}

impl LocalDistributionFamily {
    pub fn new(q: u32, t: usize) -> Self {
        let mut f = LocalDistributionFamily {
            q,
            t,
            ..Default::default()
        };
        f.tables.insert(Vec::new(), Table::from([(Vec::new(), Rational::one())]));
        f
    }

    pub fn insert(&mut self, set: Vec<usize>, table: Table) {
        debug_assert!(set.windows(2).all(|w| w[0] < w[1]));
        let table = table.into_iter().filter(|(_, p)| !p.is_zero()).collect();
        self.tables.insert(set, table);
    }

    pub fn contains(&self, set: &[usize]) -> bool {
        self.tables.contains_key(set)
    }

    pub fn table(&self, set: &[usize]) -> Option<&Table> {
        self.tables.get(set)
    }

    pub fn table_mut(&mut self, set: &[usize]) -> Option<&mut Table> {
        self.tables.get_mut(set)
    }

    pub fn sets(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.tables.keys()
    }

    pub fn tables(&self) -> impl Iterator<Item = (&Vec<usize>, &Table)> {
        self.tables.iter()
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    pub fn prob(&self, set: &[usize], alpha: &[u32]) -> Result<Rational, LocalError> {
        let t = self.tables.get(set).ok_or_else(|| LocalError::Missing(set.to_vec()))?;
        Ok(t.get(alpha).cloned().unwrap_or_else(Rational::zero))
    }

    /// `X_S` for a stored superset, marginalized; errors if no stored set
    /// contains `set`.
    pub fn marginal(&self, set: &[usize]) -> Result<Table, LocalError> {
        if let Some(t) = self.tables.get(set) {
            return Ok(t.clone());
        }
        self.tables
            .iter()
            .filter(|(s, _)| set.iter().all(|v| s.binary_search(v).is_ok()))
            .min_by_key(|(s, _)| s.len())
            .map(|(s, t)| marginalize(t, s, set))
            .ok_or_else(|| LocalError::Missing(set.to_vec()))
    }

    /// `Σ_v X_{v}(g)` over stored singletons.
    pub fn singleton_mass(&self, symbol: u32) -> Rational {
        self.tables
            .iter()
            .filter(|(s, _)| s.len() == 1)
            .map(|(_, t)| t.get(&vec![symbol]).cloned().unwrap_or_else(Rational::zero))
            .sum()
    }

    /// `X_∅ = 1`, nonnegativity, every table summing to one, and exact
    /// marginalization between every stored pair `S ⊂ T` (tested through all
    /// stored subsets of each stored set).
    pub fn check_consistency(&self) -> ConsistencyReport {
        let empty_set_ok = self
            .tables
            .get(&Vec::new())
            .is_some_and(|t| t.len() == 1 && t.get(&Vec::new()).is_some_and(|p| p.is_one()));
        let nonnegative = self.tables.values().all(|t| t.values().all(|p| !p.is_negative()));
        let normalized = self.tables.values().all(|t| t.values().sum::<Rational>().is_one());
        let mut pairs_checked = 0;
        let mut witness = None;
        'outer: for (tset, ttab) in &self.tables {
            if tset.len() > 20 {
                continue;
            }
            for mask in 0u32..(1u32 << tset.len()) - 1 {
                let sub: Vec<usize> = (0..tset.len()).filter(|&i| mask >> i & 1 == 1).map(|i| tset[i]).collect();
                let Some(stab) = self.tables.get(&sub) else { continue };
                pairs_checked += 1;
                let m = marginalize(ttab, tset, &sub);
                if !tables_equal(&m, stab) {
                    let alpha = m
                        .keys()
                        .chain(stab.keys())
                        .find(|a| m.get(*a).cloned().unwrap_or_default() != stab.get(*a).cloned().unwrap_or_default())
                        .cloned()
                        .unwrap_or_default();
                    witness = Some(ConsistencyWitness {
                        s: sub,
                        t: tset.clone(),
                        expected: rational::format_rational(&stab.get(&alpha).cloned().unwrap_or_default()),
                        found: rational::format_rational(&m.get(&alpha).cloned().unwrap_or_default()),
                        alpha,
                    });
                    break 'outer;
                }
            }
        }
        ConsistencyReport {
            empty_set_ok,
            nonnegative,
            normalized,
            pairs_checked,
            witness,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&FamilyDocument::from(self)).expect("family serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LocalError> {
        let doc: FamilyDocument = serde_json::from_str(text).map_err(|e| LocalError::Json(e.to_string()))?;
        doc.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryDocument {
    #[serde(rename = "S")]
    s: Vec<usize>,
    alpha: Vec<u32>,
    #[serde(with = "rational::serde_str")]
    prob: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyDocument {
    q: u32,
    t: usize,
    entries: Vec<EntryDocument>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    sets: Vec<Vec<usize>>,
}

impl From<&LocalDistributionFamily> for FamilyDocument {
    fn from(f: &LocalDistributionFamily) -> Self {
        let mut entries = Vec::new();
        let mut sets = Vec::new();
        for (s, t) in &f.tables {
            if t.is_empty() {
                sets.push(s.clone());
            }
            for (a, p) in t {
                entries.push(EntryDocument {
                    s: s.clone(),
                    alpha: a.clone(),
                    prob: p.clone(),
                });
            }
        }
        FamilyDocument {
            q: f.q,
            t: f.t,
            entries,
            sets,
        }
    }
}

impl TryFrom<FamilyDocument> for LocalDistributionFamily {
    type Error = LocalError;

    fn try_from(doc: FamilyDocument) -> Result<Self, LocalError> {
        if doc.q < 2 {
            return Err(LocalError::Invalid("alphabet must have at least two symbols".into()));
        }
        let mut f = LocalDistributionFamily {
            q: doc.q,
            t: doc.t,
            ..Default::default()
        };
        for s in doc.sets {
            f.tables.entry(s).or_default();
        }
        for e in doc.entries {
            if !e.s.windows(2).all(|w| w[0] < w[1]) {
                return Err(LocalError::Invalid(format!("set {:?} is not strictly increasing", e.s)));
            }
            if e.alpha.len() != e.s.len() || e.alpha.iter().any(|&g| g >= doc.q) {
                return Err(LocalError::Invalid(format!("bad assignment {:?} on {:?}", e.alpha, e.s)));
            }
            let table = f.tables.entry(e.s).or_default();
            if table.insert(e.alpha, e.prob).is_some() {
                return Err(LocalError::Invalid("duplicate entry".into()));
            }
        }
        Ok(f)
    }
}

// ---------------------------------------------------------------------------
// Moment matrices
// ---------------------------------------------------------------------------

/// Rows and columns indexed by `(S, α)` with `|S| <= t` and `α ∈ G^S`; entry
/// `X_{S∪T}(α∘β)` when `α` and `β` agree on `S ∩ T`, zero otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentMatrix {
    pub q: u32,
    pub t: usize,
    pub index: Vec<(Vec<usize>, Vec<u32>)>,
    pub entries: Vec<Vec<Rational>>,
    /// The `2t`-local distribution the entries are read from.
    pub family: LocalDistributionFamily,
}

/// Joins two partial assignments, or `None` if they disagree.
pub fn join(s: &[usize], a: &[u32], t: &[usize], b: &[u32]) -> Option<(Vec<usize>, Vec<u32>)> {
    let (mut i, mut j) = (0, 0);
    let mut set = Vec::with_capacity(s.len() + t.len());
    let mut val = Vec::with_capacity(s.len() + t.len());
    while i < s.len() || j < t.len() {
        if j == t.len() || (i < s.len() && s[i] < t[j]) {
            set.push(s[i]);
            val.push(a[i]);
            i += 1;
        } else if i == s.len() || t[j] < s[i] {
            set.push(t[j]);
            val.push(b[j]);
            j += 1;
        } else {
            if a[i] != b[j] {
                return None;
            }
            set.push(s[i]);
            val.push(a[i]);
            i += 1;
            j += 1;
        }
    }
    Some((set, val))
}

/// All assignments in `{0..q}^len`, lexicographic.
pub fn all_assignments(q: u32, len: usize) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..q).map(move |g| {
                    let mut v = p.clone();
                    v.push(g);
                    v
                })
            })
            .collect();
    }
    out
}

/// Sorted subsets of `vars` of size at most `t`, by size then lexicographic.
pub fn subsets_up_to(vars: &[usize], t: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![(Vec::new(), 0usize)];
    for _ in 0..t {
        let mut next = Vec::new();
        for (s, start) in &layer {
            for i in *start..vars.len() {
                let mut u: Vec<usize> = s.clone();
                u.push(vars[i]);
                next.push((u, i + 1));
            }
        }
        out.extend(next.iter().map(|(s, _)| s.clone()));
        layer = next;
    }
    out
}

impl MomentMatrix {
    /// Index over every `(S, α)` with `S ⊆ vars`, `|S| <= t`.
    pub fn from_family(family: LocalDistributionFamily, vars: &[usize], t: usize) -> Result<Self, LocalError> {
        let q = family.q;
        let mut index = Vec::new();
        for s in subsets_up_to(vars, t) {
            for a in all_assignments(q, s.len()) {
                index.push((s.clone(), a));
            }
        }
        Self::with_index(family, index, t)
    }

    pub fn with_index(family: LocalDistributionFamily, index: Vec<(Vec<usize>, Vec<u32>)>, t: usize) -> Result<Self, LocalError> {
        let n = index.len();
        let mut entries = vec![vec![Rational::zero(); n]; n];
        for i in 0..n {
            for j in i..n {
                let (s, a) = &index[i];
                let (u, b) = &index[j];
                let v = match join(s, a, u, b) {
                    Some((set, val)) => family.prob(&set, &val)?,
                    None => Rational::zero(),
                };
                entries[i][j] = v.clone();
                entries[j][i] = v;
            }
        }
        Ok(MomentMatrix {
            q: family.q,
            t,
            index,
            entries,
            family,
        })
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn to_json(&self) -> String {
        let doc = MomentDocument {
            q: self.q,
            t: self.t,
            index: self.index.iter().map(|(s, a)| IndexDocument { s: s.clone(), alpha: a.clone() }).collect(),
            entries: self
                .entries
                .iter()
                .map(|r| r.iter().map(rational::format_rational).collect())
                .collect(),
            family: serde_json::from_str(&self.family.to_json()).expect("family json"),
        };
        serde_json::to_string(&doc).expect("moment matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LocalError> {
        let doc: MomentDocument = serde_json::from_str(text).map_err(|e| LocalError::Json(e.to_string()))?;
        let n = doc.index.len();
        if doc.entries.len() != n || doc.entries.iter().any(|r| r.len() != n) {
            return Err(LocalError::Invalid("entry matrix does not match index".into()));
        }
        let entries = doc
            .entries
            .iter()
            .map(|r| r.iter().map(|x| rational::parse_rational(x).map_err(|e| LocalError::Json(e.to_string()))).collect())
            .collect::<Result<Vec<Vec<Rational>>, _>>()?;
        let index = doc
            .index
            .into_iter()
            .map(|d| {
                if d.s.len() != d.alpha.len() {
                    Err(LocalError::Invalid("index entry length mismatch".into()))
                } else {
                    Ok((d.s, d.alpha))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(MomentMatrix {
            q: doc.q,
            t: doc.t,
            index,
            entries,
            family: doc.family.try_into()?,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IndexDocument {
    #[serde(rename = "S")]
    s: Vec<usize>,
    alpha: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MomentDocument {
    q: u32,
    t: usize,
    index: Vec<IndexDocument>,
    entries: Vec<Vec<String>>,
    family: FamilyDocument,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn uniform_pair() -> LocalDistributionFamily {
        let mut f = LocalDistributionFamily::new(2, 2);
        for v in [0, 1] {
            f.insert(vec![v], all_assignments(2, 1).into_iter().map(|a| (a, ratio(1, 2))).collect());
        }
        f.insert(vec![0, 1], all_assignments(2, 2).into_iter().map(|a| (a, ratio(1, 4))).collect());
        f
    }

    #[test]
    fn consistency_detects_perturbation() {
        let mut f = uniform_pair();
        let r = f.check_consistency();
        assert!(r.ok(), "{r:?}");
        assert_eq!(r.pairs_checked, 2 + 3);
        *f.table_mut(&[0, 1]).unwrap().get_mut(&vec![1, 1]).unwrap() += ratio(1, 1000);
        *f.table_mut(&[0, 1]).unwrap().get_mut(&vec![1, 0]).unwrap() -= ratio(1, 1000);
        let r = f.check_consistency();
        assert!(!r.ok());
        let w = r.witness.unwrap();
        assert_eq!(w.t, vec![0, 1]);
    }

    #[test]
    fn join_and_subsets() {
        assert_eq!(join(&[1, 3], &[0, 1], &[2, 3], &[5, 1]), Some((vec![1, 2, 3], vec![0, 5, 1])));
        assert_eq!(join(&[1], &[0], &[1], &[1]), None);
        assert_eq!(subsets_up_to(&[4, 5, 6], 2).len(), 7);
        assert_eq!(all_assignments(3, 2).len(), 9);
    }

    #[test]
    fn moment_matrix_of_uniform_pair() {
        let m = MomentMatrix::from_family(uniform_pair(), &[0, 1], 1).unwrap();
        assert_eq!(m.dim(), 5);
        assert_eq!(m.entries[0][0], ratio(1, 1));
        assert_eq!(m.entries[1][1], ratio(1, 2));
        assert_eq!(m.entries[1][2], ratio(0, 1));
        assert_eq!(m.entries[1][3], ratio(1, 4));
        let back = MomentMatrix::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn family_json_roundtrip_and_errors() {
        let f = uniform_pair();
        assert_eq!(LocalDistributionFamily::from_json(&f.to_json()).unwrap(), f);
        assert!(LocalDistributionFamily::from_json(r#"{"q":2,"t":1,"entries":[{"S":[1,0],"alpha":[0,0],"prob":"1"}]}"#).is_err());
        assert!(LocalDistributionFamily::from_json(r#"{"q":2,"t":1,"entries":[{"S":[0],"alpha":[2],"prob":"1"}]}"#).is_err());
    }
}
