//! Exact-rational linear programming.
//!
//! A dense two-phase simplex over [`Rational`] with Bland's rule. Every
//! optimum is re-checked by substitution into the original program before it
//! is returned, and every infeasibility verdict carries a Farkas certificate
//! that is checked the same way.
//!
//! Internally the program is rewritten over nonnegative variables: a finite
//! lower bound is shifted to zero, an upper-only variable is negated, a free
//! variable is split into two parts, and the upper bound of a doubly bounded
//! variable becomes an extra row.

use std::fmt;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::rational::{self, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: Option<Rational>,
    pub upper: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse `(variable, coefficient)` terms, one per variable at most.
    pub terms: Vec<(usize, Rational)>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl Constraint {
    pub fn lhs(&self, x: &[Rational]) -> Rational {
        self.terms.iter().map(|(j, a)| a * &x[*j]).sum()
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => lhs <= self.rhs,
            Relation::Eq => lhs == self.rhs,
            Relation::Ge => lhs >= self.rhs,
        }
    }
}

/// Minimize `objective · x` subject to the constraints and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub objective: Vec<Rational>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("coefficient vector has length {got}, expected {expected}")]
    Length { got: usize, expected: usize },
    #[error("variable index {0} out of range")]
    BadIndex(usize),
    #[error("variable {0} appears twice in one constraint")]
    DuplicateTerm(usize),
    #[error("invalid LP document: {0}")]
    Json(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Length,
    Bound { variable: usize },
    Constraint { row: usize },
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    /// Adds a variable with objective coefficient 0.
    pub fn add_variable(&mut self, name: impl Into<String>, lower: Option<Rational>, upper: Option<Rational>) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
        });
        self.objective.push(Rational::zero());
        self.variables.len() - 1
    }

    /// Variable with bounds `0 <= x`.
    pub fn add_nonneg(&mut self, name: impl Into<String>) -> usize {
        self.add_variable(name, Some(Rational::zero()), None)
    }

    pub fn set_objective(&mut self, j: usize, coef: Rational) {
        self.objective[j] = coef;
    }

    pub fn add_constraint(
        &mut self,
        terms: Vec<(usize, Rational)>,
        relation: Relation,
        rhs: Rational,
    ) -> Result<usize, LpError> {
        let mut seen = std::collections::HashSet::new();
        for (j, _) in &terms {
            if *j >= self.variables.len() {
                return Err(LpError::BadIndex(*j));
            }
            if !seen.insert(*j) {
                return Err(LpError::DuplicateTerm(*j));
            }
        }
        let terms = terms.into_iter().filter(|(_, a)| !a.is_zero()).collect();
        self.constraints.push(Constraint { terms, relation, rhs });
        Ok(self.constraints.len() - 1)
    }

    pub fn add_dense_constraint(&mut self, coeffs: &[Rational], relation: Relation, rhs: Rational) -> Result<usize, LpError> {
        if coeffs.len() != self.variables.len() {
            return Err(LpError::Length {
                got: coeffs.len(),
                expected: self.variables.len(),
            });
        }
        let terms = coeffs.iter().cloned().enumerate().collect();
        self.add_constraint(terms, relation, rhs)
    }

    pub fn objective_value(&self, x: &[Rational]) -> Rational {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// First violated bound or constraint, if any.
    pub fn check_assignment(&self, x: &[Rational]) -> Result<(), Violation> {
        if x.len() != self.variables.len() {
            return Err(Violation::Length);
        }
        for (j, (v, xv)) in self.variables.iter().zip(x).enumerate() {
            let low_ok = v.lower.as_ref().is_none_or(|l| xv >= l);
            let up_ok = v.upper.as_ref().is_none_or(|u| xv <= u);
            if !(low_ok && up_ok) {
                return Err(Violation::Bound { variable: j });
            }
        }
        match self.constraints.iter().position(|c| !c.holds(x)) {
            Some(row) => Err(Violation::Constraint { row }),
            None => Ok(()),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&LpDocument::from(self)).expect("LP serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LpError> {
        let doc: LpDocument = serde_json::from_str(text).map_err(|e| LpError::Json(e.to_string()))?;
        doc.try_into()
    }
}

// ---------------------------------------------------------------------------
// JSON form: dense coefficient vectors, rationals as strings.
// ---------------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct VariableDoc {
    name: String,
    #[serde(with = "rational::serde_opt", default)]
    lower: Option<Rational>,
    #[serde(with = "rational::serde_opt", default)]
    upper: Option<Rational>,
}

#[derive(Serialize, Deserialize)]
struct ConstraintDoc {
    #[serde(with = "rational::serde_vec")]
    coeffs: Vec<Rational>,
    relation: Relation,
    #[serde(with = "rational::serde_str")]
    rhs: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpDocument {
    variables: Vec<VariableDoc>,
    #[serde(with = "rational::serde_vec")]
    objective: Vec<Rational>,
    constraints: Vec<ConstraintDoc>,
}

impl From<&LinearProgram> for LpDocument {
    fn from(lp: &LinearProgram) -> Self {
        let n = lp.num_variables();
        LpDocument {
            variables: lp
                .variables
                .iter()
                .map(|v| VariableDoc {
                    name: v.name.clone(),
                    lower: v.lower.clone(),
                    upper: v.upper.clone(),
                })
                .collect(),
            objective: lp.objective.clone(),
            constraints: lp
                .constraints
                .iter()
                .map(|c| {
                    let mut coeffs = vec![Rational::zero(); n];
                    for (j, a) in &c.terms {
                        coeffs[*j] = a.clone();
                    }
                    ConstraintDoc {
                        coeffs,
                        relation: c.relation,
                        rhs: c.rhs.clone(),
                    }
                })
                .collect(),
        }
    }
}

impl TryFrom<LpDocument> for LinearProgram {
    type Error = LpError;

    fn try_from(doc: LpDocument) -> Result<Self, LpError> {
        let mut lp = LinearProgram::new();
        for v in doc.variables {
            lp.add_variable(v.name, v.lower, v.upper);
        }
        if doc.objective.len() != lp.num_variables() {
            return Err(LpError::Length {
                got: doc.objective.len(),
                expected: lp.num_variables(),
            });
        }
        lp.objective = doc.objective;
        for c in doc.constraints {
            lp.add_dense_constraint(&c.coeffs, c.relation, c.rhs)?;
        }
        Ok(lp)
    }
}

// ---------------------------------------------------------------------------
// Outcomes and certificates
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: Rational,
    pub assignment: Vec<Rational>,
}

/// Proof of infeasibility.
///
/// With `g_i(x) = a_i·x − b_i`, the combination
/// `Σ_i row_i g_i(x) + Σ_j lower_j (x_j − l_j) + Σ_j upper_j (u_j − x_j)`
/// has every variable coefficient equal to zero and a negative constant.
/// Row multipliers are `<= 0` on `<=` rows, `>= 0` on `>=` rows and free on
/// equalities; bound multipliers are nonnegative. For any `x` satisfying the
/// program every term would be nonnegative, which is a contradiction.
#[derive(Debug, Clone, PartialEq)]
pub struct FarkasCertificate {
    pub row: Vec<Rational>,
    pub lower: Vec<Rational>,
    pub upper: Vec<Rational>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CertificateError {
    #[error("certificate has the wrong shape")]
    Shape,
    #[error("multiplier on row {0} has the wrong sign")]
    RowSign(usize),
    #[error("bound multiplier on variable {0} is negative or refers to a missing bound")]
    BoundSign(usize),
    #[error("combined coefficient of variable {0} is nonzero")]
    Residual(usize),
    #[error("combined constant is not negative")]
    Constant,
}

impl FarkasCertificate {
    pub fn verify(&self, lp: &LinearProgram) -> Result<(), CertificateError> {
        let n = lp.num_variables();
        if self.row.len() != lp.constraints.len() || self.lower.len() != n || self.upper.len() != n {
            return Err(CertificateError::Shape);
        }
        let mut coef = vec![Rational::zero(); n];
        let mut constant = Rational::zero();
        for (i, (c, y)) in lp.constraints.iter().zip(&self.row).enumerate() {
            let sign_ok = match c.relation {
                Relation::Le => !y.is_positive(),
                Relation::Ge => !y.is_negative(),
                Relation::Eq => true,
            };
            if !sign_ok {
                return Err(CertificateError::RowSign(i));
            }
            if y.is_zero() {
                continue;
            }
            for (j, a) in &c.terms {
                coef[*j] += y * a;
            }
            constant -= y * &c.rhs;
        }
        for (j, v) in lp.variables.iter().enumerate() {
            for (mult, bound, sign) in [(&self.lower[j], &v.lower, 1), (&self.upper[j], &v.upper, -1)] {
                if mult.is_negative() {
                    return Err(CertificateError::BoundSign(j));
                }
                if mult.is_zero() {
                    continue;
                }
                let Some(b) = bound else {
                    return Err(CertificateError::BoundSign(j));
                };
                if sign == 1 {
                    coef[j] += mult;
                    constant -= mult * b;
                } else {
                    coef[j] -= mult;
                    constant += mult * b;
                }
            }
        }
        if let Some(j) = coef.iter().position(|c| !c.is_zero()) {
            return Err(CertificateError::Residual(j));
        }
        if !constant.is_negative() {
            return Err(CertificateError::Constant);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible(FarkasCertificate),
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible(Vec<Rational>),
    Infeasible(FarkasCertificate),
}

pub fn solve(lp: &LinearProgram) -> LpOutcome {
    Simplex::new(lp).run(lp, true)
}

/// Phase 1 only.
pub fn feasible(lp: &LinearProgram) -> Feasibility {
    match Simplex::new(lp).run(lp, false) {
        LpOutcome::Optimal(sol) => Feasibility::Feasible(sol.assignment),
        LpOutcome::Infeasible(cert) => Feasibility::Infeasible(cert),
        LpOutcome::Unbounded => unreachable!("phase 1 is bounded"),
    }
}

// ---------------------------------------------------------------------------
// Standard form and tableau
// ---------------------------------------------------------------------------

/// How an original variable is recovered from nonnegative columns.
#[derive(Debug, Clone)]
enum VarMap {
    /// x = l + y
    Shift { col: usize, lower: Rational },
    /// x = u − y
    Negate { col: usize, upper: Rational },
    /// x = y⁺ − y⁻
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy)]
enum RowSource {
    Constraint(usize),
    Upper(usize),
}

struct Simplex {
    maps: Vec<VarMap>,
    structural: usize,
    /// Row coefficients over structural columns, normalized to rhs >= 0.
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    relations: Vec<Relation>,
    /// +1 or −1: the standard row is `sign · (original row expression)`.
    signs: Vec<i8>,
    sources: Vec<RowSource>,
    costs: Vec<Rational>,
}

impl Simplex {
    fn new(lp: &LinearProgram) -> Self {
        let mut maps = Vec::with_capacity(lp.num_variables());
        let mut next = 0usize;
        for v in &lp.variables {
            let map = match (&v.lower, &v.upper) {
                (Some(l), _) => {
                    next += 1;
                    VarMap::Shift { col: next - 1, lower: l.clone() }
                }
                (None, Some(u)) => {
                    next += 1;
                    VarMap::Negate { col: next - 1, upper: u.clone() }
                }
                (None, None) => {
                    next += 2;
                    VarMap::Split { pos: next - 2, neg: next - 1 }
                }
            };
            maps.push(map);
        }
        let structural = next;

        let mut costs = vec![Rational::zero(); structural];
        for (j, c) in lp.objective.iter().enumerate() {
            match &maps[j] {
                VarMap::Shift { col, .. } => costs[*col] += c,
                VarMap::Negate { col, .. } => costs[*col] -= c,
                VarMap::Split { pos, neg } => {
                    costs[*pos] += c;
                    costs[*neg] -= c;
                }
            }
        }

        let mut s = Simplex {
            maps,
            structural,
            rows: Vec::new(),
            rhs: Vec::new(),
            relations: Vec::new(),
            signs: Vec::new(),
            sources: Vec::new(),
            costs,
        };
        for (i, c) in lp.constraints.iter().enumerate() {
            let mut row = vec![Rational::zero(); structural];
            let mut rhs = c.rhs.clone();
            for (j, a) in &c.terms {
                match &s.maps[*j] {
                    VarMap::Shift { col, lower } => {
                        row[*col] += a;
                        rhs -= a * lower;
                    }
                    VarMap::Negate { col, upper } => {
                        row[*col] -= a;
                        rhs -= a * upper;
                    }
                    VarMap::Split { pos, neg } => {
                        row[*pos] += a;
                        row[*neg] -= a;
                    }
                }
            }
            s.push_row(row, c.relation, rhs, RowSource::Constraint(i));
        }
        for (j, v) in lp.variables.iter().enumerate() {
            if let (Some(l), Some(u), VarMap::Shift { col, .. }) = (&v.lower, &v.upper, &s.maps[j]) {
                let mut row = vec![Rational::zero(); structural];
                row[*col] = Rational::one();
                s.push_row(row, Relation::Le, u - l, RowSource::Upper(j));
            }
        }
        s
    }

    fn push_row(&mut self, mut row: Vec<Rational>, mut rel: Relation, mut rhs: Rational, src: RowSource) {
        let mut sign = 1i8;
        if rhs.is_negative() {
            for a in row.iter_mut() {
                *a = -a.clone();
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            sign = -1;
        }
        self.rows.push(row);
        self.rhs.push(rhs);
        self.relations.push(rel);
        self.signs.push(sign);
        self.sources.push(src);
    }

    fn run(self, lp: &LinearProgram, optimize: bool) -> LpOutcome {
        let m = self.rows.len();
        let ns = self.structural;
        // Column layout: structural | slacks | artificials.
        let slack_cols: Vec<Option<usize>> = {
            let mut next = ns;
            self.relations
                .iter()
                .map(|r| match r {
                    Relation::Eq => None,
                    _ => {
                        next += 1;
                        Some(next - 1)
                    }
                })
                .collect()
        };
        let n_slack = slack_cols.iter().flatten().count();
        let first_art = ns + n_slack;
        let mut art_of_row = vec![None; m];
        let mut next_art = first_art;
        for (i, rel) in self.relations.iter().enumerate() {
            if *rel != Relation::Le {
                art_of_row[i] = Some(next_art);
                next_art += 1;
            }
        }
        let total = next_art;

        let mut t = Tableau {
            a: Vec::with_capacity(m),
            b: self.rhs.clone(),
            basis: Vec::with_capacity(m),
            ident: Vec::with_capacity(m),
            cols: total,
        };
        for i in 0..m {
            let mut row = self.rows[i].clone();
            row.resize(total, Rational::zero());
            if let Some(sc) = slack_cols[i] {
                row[sc] = match self.relations[i] {
                    Relation::Le => Rational::one(),
                    _ => -Rational::one(),
                };
            }
            match art_of_row[i] {
                Some(ac) => {
                    row[ac] = Rational::one();
                    t.basis.push(ac);
                }
                None => t.basis.push(slack_cols[i].expect("<= rows have slacks")),
            }
            t.ident.push(t.basis[i]);
            t.a.push(row);
        }

        // Phase 1: minimize the sum of artificials.
        let mut phase1 = vec![Rational::zero(); total];
        for c in phase1.iter_mut().skip(first_art) {
            *c = Rational::one();
        }
        let bounded = t.optimize(&phase1, total);
        debug_assert!(bounded);
        let w: Rational = t
            .basis
            .iter()
            .zip(&t.b)
            .filter(|(c, _)| **c >= first_art)
            .map(|(_, v)| v.clone())
            .sum();
        if w.is_positive() {
            let duals = t.duals(&phase1);
            let cert = self.certificate(&duals, lp.constraints.len());
            cert.verify(lp).expect("Farkas certificate verifies");
            return LpOutcome::Infeasible(cert);
        }

        // Drive zero-level artificials out of the basis; drop redundant rows.
        let mut i = 0;
        while i < t.a.len() {
            if t.basis[i] >= first_art {
                match (0..first_art).find(|&c| !t.a[i][c].is_zero()) {
                    Some(c) => t.pivot(i, c, None),
                    None => {
                        t.a.remove(i);
                        t.b.remove(i);
                        t.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }

        if optimize {
            let mut costs = self.costs.clone();
            costs.resize(total, Rational::zero());
            if !t.optimize(&costs, first_art) {
                return LpOutcome::Unbounded;
            }
        }

        let mut y = vec![Rational::zero(); total];
        for (c, v) in t.basis.iter().zip(&t.b) {
            y[*c] = v.clone();
        }
        let x: Vec<Rational> = self
            .maps
            .iter()
            .map(|map| match map {
                VarMap::Shift { col, lower } => lower + &y[*col],
                VarMap::Negate { col, upper } => upper - &y[*col],
                VarMap::Split { pos, neg } => &y[*pos] - &y[*neg],
            })
            .collect();
        if let Err(v) = lp.check_assignment(&x) {
            panic!("simplex produced an assignment violating {v:?}");
        }
        LpOutcome::Optimal(LpSolution {
            value: lp.objective_value(&x),
            assignment: x,
        })
    }

    /// Translates phase-1 duals into multipliers on the original program.
    fn certificate(&self, duals: &[Rational], n_constraints: usize) -> FarkasCertificate {
        let n = self.maps.len();
        let mut cert = FarkasCertificate {
            row: vec![Rational::zero(); n_constraints],
            lower: vec![Rational::zero(); n],
            upper: vec![Rational::zero(); n],
        };
        for (r, lambda) in duals.iter().enumerate() {
            let scaled = if self.signs[r] < 0 { -lambda.clone() } else { lambda.clone() };
            match self.sources[r] {
                RowSource::Constraint(i) => cert.row[i] += &scaled,
                // λσ(x − u) = −λσ(u − x)
                RowSource::Upper(j) => cert.upper[j] -= &scaled,
            }
        }
        // ν = −λᵀA_col >= 0 multiplies the sign constraint of each column.
        let nu = |col: usize| -> Rational {
            -self
                .rows
                .iter()
                .zip(duals)
                .filter(|(row, _)| !row[col].is_zero())
                .map(|(row, l)| l * &row[col])
                .sum::<Rational>()
        };
        for (j, map) in self.maps.iter().enumerate() {
            match map {
                VarMap::Shift { col, .. } => cert.lower[j] += nu(*col),
                VarMap::Negate { col, .. } => cert.upper[j] += nu(*col),
                VarMap::Split { .. } => {}
            }
        }
        cert
    }
}

struct Tableau {
    a: Vec<Vec<Rational>>,
    b: Vec<Rational>,
    basis: Vec<usize>,
    /// Column that formed the identity for each row at the start.
    ident: Vec<usize>,
    cols: usize,
}

impl Tableau {
    /// Pivots on `(r, c)`, applying the same row operation to `obj` if given.
    fn pivot(&mut self, r: usize, c: usize, obj: Option<&mut Vec<Rational>>) {
        let inv = self.a[r][c].recip();
        let nz: Vec<usize> = (0..self.cols).filter(|&j| !self.a[r][j].is_zero()).collect();
        for &j in &nz {
            self.a[r][j] *= &inv;
        }
        self.b[r] *= &inv;
        let prow: Vec<(usize, Rational)> = nz.iter().map(|&j| (j, self.a[r][j].clone())).collect();
        let pb = self.b[r].clone();
        for i in 0..self.a.len() {
            if i == r || self.a[i][c].is_zero() {
                continue;
            }
            let f = self.a[i][c].clone();
            for (j, v) in &prow {
                self.a[i][*j] -= &f * v;
            }
            if !pb.is_zero() {
                self.b[i] -= &f * &pb;
            }
        }
        if let Some(d) = obj {
            if !d[c].is_zero() {
                let f = d[c].clone();
                for (j, v) in &prow {
                    d[*j] -= &f * v;
                }
            }
        }
        self.basis[r] = c;
    }

    fn reduced_costs(&self, costs: &[Rational]) -> Vec<Rational> {
        let mut d = costs.to_vec();
        for (row, &bc) in self.a.iter().zip(&self.basis) {
            let cb = &costs[bc];
            if cb.is_zero() {
                continue;
            }
            for (j, v) in row.iter().enumerate() {
                if !v.is_zero() {
                    d[j] -= cb * v;
                }
            }
        }
        d
    }

    /// Minimizes `costs` over columns `0..allowed` with Bland's rule: the
    /// entering column is the lowest-index improving one, and ratio ties
    /// leave by lowest basic column. Returns false when unbounded.
    fn optimize(&mut self, costs: &[Rational], allowed: usize) -> bool {
        let mut d = self.reduced_costs(costs);
        loop {
            let Some(c) = (0..allowed).find(|&j| d[j].is_negative()) else {
                return true;
            };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.a.len() {
                if !self.a[i][c].is_positive() {
                    continue;
                }
                let ratio = &self.b[i] / &self.a[i][c];
                let better = match &best {
                    None => true,
                    Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c, Some(&mut d)),
                None => return false,
            }
        }
    }

    /// Simplex multipliers `c_B B⁻¹`; column `ident[r]` of the current
    /// tableau is column `r` of `B⁻¹`.
    fn duals(&self, costs: &[Rational]) -> Vec<Rational> {
        self.ident
            .iter()
            .map(|&col| {
                self.a
                    .iter()
                    .zip(&self.basis)
                    .filter(|(row, &bc)| !row[col].is_zero() && !costs[bc].is_zero())
                    .map(|(row, &bc)| &costs[bc] * &row[col])
                    .sum()
            })
            .collect()
    }
}
