//! Finite fields GF(p^m) with exact arithmetic, trace, and linear algebra.
//!
//! An element is stored as the integer `c_0 + c_1 p + ... + c_{m-1} p^{m-1}`
//! of its coefficients in the polynomial basis `1, x, ..., x^{m-1}` modulo the
//! field's defining polynomial. Multiplication goes through log/antilog tables
//! built once per field.
//!
//! Two layers are exposed. [`FieldElement`] carries the identity of its field
//! and every typed operation rejects mixed fields. The `*_raw` methods work
//! on bare `u32` values and are what the constructions use in inner loops;
//! callers are responsible for keeping raw values below `q`.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Largest supported field order.
pub const MAX_ORDER: u64 = 1 << 16;

pub type FieldId = u64;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GfError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("extension degree must be at least 1")]
    ZeroDegree,
    #[error("field order {p}^{m} exceeds 2^16")]
    OrderTooLarge { p: u32, m: u32 },
    #[error("modulus is not a monic irreducible polynomial of the stated degree")]
    NotIrreducible,
    #[error("operands belong to different fields")]
    FieldMismatch,
    #[error("inverse of zero")]
    DivisionByZero,
    #[error("value {value} is not an element of a field of order {q}")]
    OutOfRange { value: u32, q: u32 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FieldElement {
    field: FieldId,
    value: u32,
}

impl FieldElement {
    pub fn value(self) -> u32 {
        self.value
    }

    pub fn field_id(self) -> FieldId {
        self.field
    }

    pub fn is_zero(self) -> bool {
        self.value == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}

/// JSON shape `{"p":…, "m":…, "modulus":[…]}`; modulus coefficients low to high.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub p: u32,
    pub m: u32,
    pub modulus: Vec<u32>,
}

#[derive(Clone)]
pub struct FieldSpec {
    p: u32,
    m: u32,
    q: u32,
    modulus: Vec<u32>,
    id: FieldId,
    exp: Vec<u32>,
    log: Vec<u32>,
    trace: Vec<u32>,
    pow_p: Vec<u32>,
}

impl fmt::Debug for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSpec")
            .field("p", &self.p)
            .field("m", &self.m)
            .field("modulus", &self.modulus)
            .finish()
    }
}

impl PartialEq for FieldSpec {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id && self.p == other.p && self.modulus == other.modulus
    }
}

impl Eq for FieldSpec {}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// `Some((p, m))` when `q = p^m` for a prime `p`.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q.is_multiple_of(*d))?;
    let mut rest = q;
    let mut m = 0;
    while rest.is_multiple_of(p) {
        rest /= p;
        m += 1;
    }
    (rest == 1).then_some((p, m))
}

// ---------------------------------------------------------------------------
// Polynomials over GF(p), coefficients low to high, used only at setup.
// ---------------------------------------------------------------------------

fn poly_trim(mut a: Vec<u32>) -> Vec<u32> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_mod(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let b = poly_trim(b.to_vec());
    let mut r = poly_trim(a.to_vec());
    let lead_inv = mod_inv(*b.last().expect("nonzero divisor"), p);
    while r.len() >= b.len() {
        let shift = r.len() - b.len();
        let factor = (*r.last().unwrap() as u64 * lead_inv as u64 % p as u64) as u32;
        for (i, &bc) in b.iter().enumerate() {
            let sub = (factor as u64 * bc as u64 % p as u64) as u32;
            r[shift + i] = (r[shift + i] + p - sub) % p;
        }
        r = poly_trim(r);
    }
    r
}

fn mod_inv(a: u32, p: u32) -> u32 {
    mod_pow(a, p - 2, p)
}

fn mod_pow(mut base: u32, mut exp: u32, p: u32) -> u32 {
    let mut acc = 1u64;
    let mut b = base as u64 % p as u64;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = acc * b % p as u64;
        }
        b = b * b % p as u64;
        exp >>= 1;
    }
    base = acc as u32;
    base
}

fn digits_of(mut v: u32, p: u32, m: u32) -> Vec<u32> {
    let mut out = Vec::with_capacity(m as usize);
    for _ in 0..m {
        out.push(v % p);
        v /= p;
    }
    out
}

fn value_of(digits: &[u32], p: u32) -> u32 {
    digits.iter().rev().fold(0u32, |acc, &d| acc * p + d)
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let deg = modulus.len() - 1;
    if deg == 0 || *modulus.last().unwrap() != 1 {
        return false;
    }
    if deg == 1 {
        return true;
    }
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for low in 0..count {
            let mut divisor = digits_of(low as u32, p, d as u32);
            divisor.push(1);
            if poly_mod(modulus, &divisor, p).is_empty() {
                return false;
            }
        }
    }
    true
}

/// Multiplication of raw values through polynomial arithmetic; table setup only.
fn slow_mul(a: u32, b: u32, p: u32, modulus: &[u32]) -> u32 {
    let m = modulus.len() - 1;
    let da = digits_of(a, p, m as u32);
    let db = digits_of(b, p, m as u32);
    let mut prod = vec![0u32; 2 * m];
    for (i, &x) in da.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in db.iter().enumerate() {
            prod[i + j] = ((prod[i + j] as u64 + x as u64 * y as u64) % p as u64) as u32;
        }
    }
    let mut r = poly_mod(&prod, modulus, p);
    r.resize(m, 0);
    value_of(&r, p)
}

impl FieldSpec {
    /// GF(p^m) with the lexicographically first monic irreducible modulus,
    /// where the non-leading coefficients are read as base-p digits `c_0 + c_1 p + ...`.
    pub fn new(p: u32, m: u32) -> Result<Self, GfError> {
        Self::check_params(p, m)?;
        let count = (p as u64).pow(m);
        for low in 0..count {
            let mut modulus = digits_of(low as u32, p, m);
            modulus.push(1);
            if is_irreducible(&modulus, p) {
                return Self::build(p, m, modulus);
            }
        }
        unreachable!("an irreducible polynomial of every degree exists")
    }

    pub fn with_modulus(p: u32, modulus: Vec<u32>) -> Result<Self, GfError> {
        if modulus.len() < 2 {
            return Err(GfError::ZeroDegree);
        }
        let m = (modulus.len() - 1) as u32;
        Self::check_params(p, m)?;
        if modulus.iter().any(|&c| c >= p) || !is_irreducible(&modulus, p) {
            return Err(GfError::NotIrreducible);
        }
        Self::build(p, m, modulus)
    }

    /// Field of order `q`, which must be a prime power.
    pub fn of_order(q: u32) -> Result<Self, GfError> {
        let (p, m) = prime_power(q).ok_or(GfError::NotPrime(q))?;
        Self::new(p, m)
    }

    pub fn from_descriptor(d: &FieldDescriptor) -> Result<Self, GfError> {
        let f = Self::with_modulus(d.p, d.modulus.clone())?;
        if f.m != d.m {
            return Err(GfError::Dimension(format!(
                "descriptor says m={} but modulus has degree {}",
                d.m, f.m
            )));
        }
        Ok(f)
    }

    fn check_params(p: u32, m: u32) -> Result<(), GfError> {
        if !is_prime(p) {
            return Err(GfError::NotPrime(p));
        }
        if m == 0 {
            return Err(GfError::ZeroDegree);
        }
        match (p as u64).checked_pow(m) {
            Some(q) if q <= MAX_ORDER => Ok(()),
            _ => Err(GfError::OrderTooLarge { p, m }),
        }
    }

    fn build(p: u32, m: u32, modulus: Vec<u32>) -> Result<Self, GfError> {
        let q = p.pow(m);
        let mut id = crate::rng::fnv1a64(&p.to_le_bytes());
        for c in &modulus {
            id = crate::rng::splitmix64(id ^ *c as u64);
        }
        let (exp, log) = Self::log_tables(p, q, &modulus);
        let mut field = FieldSpec {
            p,
            m,
            q,
            modulus,
            id,
            exp,
            log,
            trace: Vec::new(),
            pow_p: Vec::new(),
        };
        field.pow_p = (0..q).map(|a| field.pow_raw(a, p as u64)).collect();
        field.trace = (0..q)
            .map(|a| {
                let mut acc = 0u32;
                let mut x = a;
                for _ in 0..m {
                    acc = field.add_raw(acc, x);
                    x = field.pow_p[x as usize];
                }
                acc
            })
            .collect();
        debug_assert!(field.trace.iter().all(|&t| t < p));
        Ok(field)
    }

    fn log_tables(p: u32, q: u32, modulus: &[u32]) -> (Vec<u32>, Vec<u32>) {
        let order = q - 1;
        for g in 1..q {
            let mut exp = Vec::with_capacity(order as usize);
            let mut x = 1u32;
            let mut primitive = true;
            for i in 0..order {
                if i > 0 && x == 1 {
                    primitive = false;
                    break;
                }
                exp.push(x);
                x = slow_mul(x, g, p, modulus);
            }
            if primitive && x == 1 {
                let mut log = vec![0u32; q as usize];
                for (i, &v) in exp.iter().enumerate() {
                    log[v as usize] = i as u32;
                }
                return (exp, log);
            }
        }
        // q == 2: the only nonzero element is 1.
        (vec![1], vec![0, 0])
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn id(&self) -> FieldId {
        self.id
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    pub fn descriptor(&self) -> FieldDescriptor {
        FieldDescriptor {
            p: self.p,
            m: self.m,
            modulus: self.modulus.clone(),
        }
    }

    pub fn is_char2(&self) -> bool {
        self.p == 2
    }

    // ----- typed elements -----

    pub fn element(&self, value: u32) -> Result<FieldElement, GfError> {
        if value >= self.q {
            return Err(GfError::OutOfRange { value, q: self.q });
        }
        Ok(FieldElement {
            field: self.id,
            value,
        })
    }

    pub fn zero(&self) -> FieldElement {
        FieldElement {
            field: self.id,
            value: 0,
        }
    }

    pub fn one(&self) -> FieldElement {
        FieldElement {
            field: self.id,
            value: 1,
        }
    }

    /// The generator `x` of the polynomial basis (equal to `p` as a raw value
    /// when `m > 1`).
    pub fn generator(&self) -> FieldElement {
        let value = if self.m > 1 { self.p } else { self.exp[1 % self.exp.len()] };
        FieldElement {
            field: self.id,
            value,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElement> + '_ {
        (0..self.q).map(move |value| FieldElement {
            field: self.id,
            value,
        })
    }

    fn check(&self, a: FieldElement) -> Result<u32, GfError> {
        if a.field != self.id {
            return Err(GfError::FieldMismatch);
        }
        Ok(a.value)
    }

    fn wrap(&self, value: u32) -> FieldElement {
        FieldElement {
            field: self.id,
            value,
        }
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.wrap(self.add_raw(self.check(a)?, self.check(b)?)))
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.wrap(self.sub_raw(self.check(a)?, self.check(b)?)))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.wrap(self.mul_raw(self.check(a)?, self.check(b)?)))
    }

    pub fn neg(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.wrap(self.neg_raw(self.check(a)?)))
    }

    pub fn inv(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        let v = self.check(a)?;
        self.inv_raw(v).map(|x| self.wrap(x)).ok_or(GfError::DivisionByZero)
    }

    pub fn pow(&self, a: FieldElement, e: u64) -> Result<FieldElement, GfError> {
        Ok(self.wrap(self.pow_raw(self.check(a)?, e)))
    }

    /// Absolute trace to GF(p), returned as an element of the prime subfield.
    pub fn trace(&self, a: FieldElement) -> Result<FieldElement, GfError> {
        Ok(self.wrap(self.trace_raw(self.check(a)?)))
    }

    // ----- raw values -----

    #[inline]
    pub fn add_raw(&self, a: u32, b: u32) -> u32 {
        if self.p == 2 {
            return a ^ b;
        }
        let (p, mut a, mut b) = (self.p, a, b);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.m {
            let d = (a % p + b % p) % p;
            out += d * place;
            place = place.wrapping_mul(p);
            a /= p;
            b /= p;
        }
        out
    }

    #[inline]
    pub fn neg_raw(&self, a: u32) -> u32 {
        if self.p == 2 {
            return a;
        }
        let (p, mut a) = (self.p, a);
        let mut out = 0u32;
        let mut place = 1u32;
        for _ in 0..self.m {
            let d = (p - a % p) % p;
            out += d * place;
            place = place.wrapping_mul(p);
            a /= p;
        }
        out
    }

    #[inline]
    pub fn sub_raw(&self, a: u32, b: u32) -> u32 {
        self.add_raw(a, self.neg_raw(b))
    }

    #[inline]
    pub fn mul_raw(&self, a: u32, b: u32) -> u32 {
        if a == 0 || b == 0 {
            return 0;
        }
        let order = self.q - 1;
        let e = (self.log[a as usize] as u64 + self.log[b as usize] as u64) % order as u64;
        self.exp[e as usize]
    }

    pub fn inv_raw(&self, a: u32) -> Option<u32> {
        if a == 0 {
            return None;
        }
        let order = self.q - 1;
        let e = (order - self.log[a as usize]) % order;
        Some(self.exp[e as usize])
    }

    pub fn div_raw(&self, a: u32, b: u32) -> Option<u32> {
        self.inv_raw(b).map(|ib| self.mul_raw(a, ib))
    }

    pub fn pow_raw(&self, a: u32, e: u64) -> u32 {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = (self.q - 1) as u64;
        let idx = (self.log[a as usize] as u64 * (e % order)) % order;
        self.exp[idx as usize]
    }

    #[inline]
    pub fn trace_raw(&self, a: u32) -> u32 {
        self.trace[a as usize]
    }

    /// Multiplication by an integer of the prime subfield.
    pub fn scale_raw(&self, a: u32, k: u32) -> u32 {
        let k = k % self.p;
        if k == 0 {
            return 0;
        }
        if k == 1 {
            return a;
        }
        let digits: Vec<u32> = self.digits(a).iter().map(|d| d * k % self.p).collect();
        self.from_digits(&digits)
    }

    /// Coordinates over GF(p) in the polynomial basis.
    pub fn digits(&self, a: u32) -> Vec<u32> {
        digits_of(a, self.p, self.m)
    }

    pub fn from_digits(&self, digits: &[u32]) -> u32 {
        value_of(digits, self.p)
    }

    /// Raw value of the basis element `x^i`.
    pub fn basis_raw(&self, i: u32) -> u32 {
        self.p.pow(i)
    }

    /// `Σ_v Tr(c_v h_v)`, the GF(p)-valued pairing between `G^k` and its dual.
    pub fn trace_pairing(&self, c: &[u32], h: &[u32]) -> u32 {
        c.iter().zip(h).fold(0u32, |acc, (&cv, &hv)| {
            (acc + self.trace_raw(self.mul_raw(cv, hv))) % self.p
        })
    }

    fn check_values(&self, values: &[u32]) -> Result<(), GfError> {
        match values.iter().find(|&&v| v >= self.q) {
            Some(&value) => Err(GfError::OutOfRange { value, q: self.q }),
            None => Ok(()),
        }
    }

    // ----- linear algebra over this field -----

    /// Reduced row echelon form in place; returns pivot columns.
    pub fn rref(&self, rows: &mut Vec<Vec<u32>>, cols: usize) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..cols {
            if r == rows.len() {
                break;
            }
            let Some(sel) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
                continue;
            };
            rows.swap(r, sel);
            let inv = self.inv_raw(rows[r][c]).expect("nonzero pivot");
            for x in rows[r].iter_mut() {
                *x = self.mul_raw(*x, inv);
            }
            let pivot_row = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i == r || row[c] == 0 {
                    continue;
                }
                let f = row[c];
                for (x, &pv) in row.iter_mut().zip(&pivot_row) {
                    if pv != 0 {
                        *x = self.sub_raw(*x, self.mul_raw(f, pv));
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        rows.truncate(r);
        pivots
    }

    pub fn rank(&self, rows: &[Vec<u32>], cols: usize) -> usize {
        let mut work = rows.to_vec();
        self.rref(&mut work, cols).len()
    }

    /// Solves `A x = b` exactly. `Ok(None)` means the system is inconsistent.
    /// The returned kernel basis spans the null space of `A`, and the
    /// particular solution is checked by substitution before returning.
    pub fn solve_linear(&self, a: &[Vec<u32>], b: &[u32]) -> Result<Option<AffineSolution>, GfError> {
        if a.len() != b.len() {
            return Err(GfError::Dimension(format!("{} rows but {} right-hand sides", a.len(), b.len())));
        }
        let cols = a.first().map_or(0, |r| r.len());
        self.solve_linear_cols(a, b, cols)
    }

    /// As [`solve_linear`](Self::solve_linear) with an explicit column count,
    /// so that a system with zero rows still has a well-defined unknown count.
    pub fn solve_linear_cols(
        &self,
        a: &[Vec<u32>],
        b: &[u32],
        cols: usize,
    ) -> Result<Option<AffineSolution>, GfError> {
        if a.len() != b.len() {
            return Err(GfError::Dimension(format!("{} rows but {} right-hand sides", a.len(), b.len())));
        }
        for row in a {
            if row.len() != cols {
                return Err(GfError::Dimension("ragged matrix".into()));
            }
            self.check_values(row)?;
        }
        self.check_values(b)?;
        let mut aug: Vec<Vec<u32>> = a
            .iter()
            .zip(b)
            .map(|(row, &rhs)| {
                let mut r = row.clone();
                r.push(rhs);
                r
            })
            .collect();
        let pivots = self.rref(&mut aug, cols + 1);
        if pivots.last() == Some(&cols) {
            return Ok(None);
        }
        let mut particular = vec![0u32; cols];
        for (row, &pc) in aug.iter().zip(&pivots) {
            particular[pc] = row[cols];
        }
        let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
        let kernel = free
            .iter()
            .map(|&f| {
                let mut v = vec![0u32; cols];
                v[f] = 1;
                for (row, &pc) in aug.iter().zip(&pivots) {
                    v[pc] = self.neg_raw(row[f]);
                }
                v
            })
            .collect();
        let sol = AffineSolution { particular, kernel };
        for (row, &rhs) in a.iter().zip(b) {
            assert_eq!(self.dot_raw(row, &sol.particular), rhs, "substitution check failed");
            for k in &sol.kernel {
                assert_eq!(self.dot_raw(row, k), 0, "kernel check failed");
            }
        }
        Ok(Some(sol))
    }

    pub fn dot_raw(&self, a: &[u32], b: &[u32]) -> u32 {
        a.iter()
            .zip(b)
            .fold(0, |acc, (&x, &y)| self.add_raw(acc, self.mul_raw(x, y)))
    }

    /// Expands vectors of `G^k` into `GF(p)^{mk}` coordinates (field-major per entry).
    pub fn expand_to_prime(&self, v: &[u32]) -> Vec<u32> {
        v.iter().flat_map(|&x| self.digits(x)).collect()
    }

    pub fn collapse_from_prime(&self, coords: &[u32]) -> Vec<u32> {
        coords
            .chunks(self.m as usize)
            .map(|c| self.from_digits(c))
            .collect()
    }

    /// The prime subfield GF(p) as its own [`FieldSpec`].
    pub fn prime_field(&self) -> FieldSpec {
        if self.m == 1 {
            return self.clone();
        }
        FieldSpec::new(self.p, 1).expect("prime subfield")
    }

    /// Dimension over GF(p) of the span of `vectors` in `G^k`.
    pub fn prime_rank(&self, vectors: &[Vec<u32>], k: usize) -> usize {
        let fp = self.prime_field();
        let rows: Vec<Vec<u32>> = vectors.iter().map(|v| self.expand_to_prime(v)).collect();
        fp.rank(&rows, k * self.m as usize)
    }

    /// A GF(p)-basis of `{c ∈ G^k : Σ_v Tr(c_v h_v) = 0 for every generator h}`.
    pub fn annihilator(&self, k: usize, generators: &[Vec<u32>]) -> Result<Vec<Vec<u32>>, GfError> {
        for g in generators {
            if g.len() != k {
                return Err(GfError::Dimension(format!("generator of length {} in G^{}", g.len(), k)));
            }
            self.check_values(g)?;
        }
        let m = self.m as usize;
        let fp = self.prime_field();
        // Pairing of basis elements: Tr(x^a h) is linear in the digits of c.
        let rows: Vec<Vec<u32>> = generators
            .iter()
            .map(|h| {
                let mut row = Vec::with_capacity(k * m);
                for &hv in h {
                    for a in 0..m as u32 {
                        row.push(self.trace_raw(self.mul_raw(self.basis_raw(a), hv)));
                    }
                }
                row
            })
            .collect();
        let zeros = vec![0u32; rows.len()];
        let sol = fp
            .solve_linear_cols(&rows, &zeros, k * m)?
            .expect("homogeneous systems are consistent");
        Ok(sol
            .kernel
            .iter()
            .map(|c| self.collapse_from_prime(c))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineSolution {
    pub particular: Vec<u32>,
    pub kernel: Vec<Vec<u32>>,
}

impl AffineSolution {
    pub fn dimension(&self) -> usize {
        self.kernel.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_moduli() {
        assert_eq!(FieldSpec::new(2, 2).unwrap().modulus(), &[1, 1, 1]);
        assert_eq!(FieldSpec::new(2, 3).unwrap().modulus(), &[1, 1, 0, 1]);
        assert_eq!(FieldSpec::new(2, 1).unwrap().order(), 2);
        assert_eq!(FieldSpec::new(3, 2).unwrap().order(), 9);
    }

    #[test]
    fn moduli_match_exhaustive_search() {
        // Oracle: enumerate all monic degree-m polynomials and test for roots
        // / factors by brute-force multiplication of candidate factor pairs.
        for (p, m) in [(2u32, 2u32), (2, 3), (2, 4), (3, 2), (5, 2)] {
            let f = FieldSpec::new(p, m).unwrap();
            let mut first = None;
            for low in 0..p.pow(m) {
                let mut cand = digits_of(low, p, m);
                cand.push(1);
                let reducible = (1..=m / 2).any(|d| {
                    (0..p.pow(d)).any(|x| {
                        let mut div = digits_of(x, p, d);
                        div.push(1);
                        (0..p.pow(m - d)).any(|y| {
                            let mut other = digits_of(y, p, m - d);
                            other.push(1);
                            let mut prod = vec![0u32; m as usize + 1];
                            for (i, a) in div.iter().enumerate() {
                                for (j, b) in other.iter().enumerate() {
                                    prod[i + j] = (prod[i + j] + a * b) % p;
                                }
                            }
                            prod == cand
                        })
                    })
                });
                if !reducible {
                    first = Some(cand);
                    break;
                }
            }
            assert_eq!(first.as_deref(), Some(f.modulus()), "p={p} m={m}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert_eq!(FieldSpec::new(4, 1).unwrap_err(), GfError::NotPrime(4));
        assert_eq!(FieldSpec::new(2, 0).unwrap_err(), GfError::ZeroDegree);
        assert!(matches!(FieldSpec::new(2, 17), Err(GfError::OrderTooLarge { .. })));
        assert!(matches!(FieldSpec::new(3, 11), Err(GfError::OrderTooLarge { .. })));
        assert_eq!(FieldSpec::with_modulus(2, vec![1, 0, 1]).unwrap_err(), GfError::NotIrreducible);
    }

    #[test]
    fn small_field_examples() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        assert_eq!(f2.add(f2.one(), f2.one()).unwrap(), f2.zero());
        assert_eq!(f2.trace(f2.one()).unwrap(), f2.one());

        let f4 = FieldSpec::new(2, 2).unwrap();
        let g = f4.generator();
        let g_plus_1 = f4.add(g, f4.one()).unwrap();
        assert_eq!(f4.mul(g, g).unwrap(), g_plus_1);
        assert_eq!(f4.trace(g).unwrap(), f4.one());
        assert_eq!(f4.trace(f4.one()).unwrap(), f4.zero());
        assert_eq!(f4.inv(f4.zero()).unwrap_err(), GfError::DivisionByZero);
    }

    #[test]
    fn mixing_fields_is_an_error() {
        let f4 = FieldSpec::new(2, 2).unwrap();
        let f8 = FieldSpec::new(2, 3).unwrap();
        assert_eq!(f4.add(f4.one(), f8.one()).unwrap_err(), GfError::FieldMismatch);
        assert_eq!(f8.mul(f4.one(), f8.one()).unwrap_err(), GfError::FieldMismatch);
    }

    #[test]
    fn trace_linear_and_onto() {
        for q in [2u32, 3, 4, 8, 9, 16, 25, 27, 32, 64, 81, 128, 256] {
            let f = FieldSpec::of_order(q).unwrap();
            let mut hits = vec![0u32; f.p() as usize];
            for a in 0..q {
                hits[f.trace_raw(a) as usize] += 1;
                for b in (0..q).step_by(((q / 16).max(1)) as usize) {
                    assert_eq!(
                        f.trace_raw(f.add_raw(a, b)),
                        (f.trace_raw(a) + f.trace_raw(b)) % f.p()
                    );
                }
            }
            // Onto, and each fibre has q/p elements.
            assert!(hits.iter().all(|&h| h == q / f.p()), "q={q}");
        }
    }

    #[test]
    fn linear_solver_examples() {
        let f = FieldSpec::new(2, 2).unwrap();
        let id = vec![vec![1, 0], vec![0, 1]];
        let sol = f.solve_linear(&id, &[3, 2]).unwrap().unwrap();
        assert_eq!(sol.particular, vec![3, 2]);
        assert!(sol.kernel.is_empty());

        let zero = vec![vec![0, 0, 0]];
        let sol = f.solve_linear(&zero, &[0]).unwrap().unwrap();
        assert_eq!(sol.dimension(), 3);
        assert!(f.solve_linear(&zero, &[1]).unwrap().is_none());

        // Two evaluation points not on a common line through the origin give a
        // unique (α1, α2) for every right-hand side.
        let f8 = FieldSpec::new(2, 3).unwrap();
        let (b1, b2, c1, c2) = (1u32, 5, 0, 1);
        assert_ne!(f8.mul_raw(b1, c2), f8.mul_raw(b2, c1));
        for beta in 0..8 {
            for gamma in 0..8 {
                let sol = f8
                    .solve_linear(&[vec![b1, b2], vec![c1, c2]], &[beta, gamma])
                    .unwrap()
                    .unwrap();
                assert!(sol.kernel.is_empty());
            }
        }
    }

    fn enumerate_span(f: &FieldSpec, gens: &[Vec<u32>], k: usize) -> std::collections::BTreeSet<Vec<u32>> {
        let mut set = std::collections::BTreeSet::new();
        set.insert(vec![0u32; k]);
        loop {
            let mut grew = false;
            let current: Vec<Vec<u32>> = set.iter().cloned().collect();
            for v in &current {
                for g in gens {
                    let w: Vec<u32> = v.iter().zip(g).map(|(&a, &b)| f.add_raw(a, b)).collect();
                    grew |= set.insert(w);
                }
            }
            if !grew {
                return set;
            }
        }
    }

    #[test]
    fn annihilator_examples() {
        let f2 = FieldSpec::new(2, 1).unwrap();
        // Even-weight code of length 3: oracle = exhaustive scan of 8 candidates.
        let gens = vec![vec![1, 1, 0], vec![0, 1, 1]];
        let ann = f2.annihilator(3, &gens).unwrap();
        let brute: Vec<Vec<u32>> = (0..8u32)
            .map(|x| vec![x & 1, (x >> 1) & 1, (x >> 2) & 1])
            .filter(|c| c.iter().any(|&v| v != 0))
            .filter(|c| gens.iter().all(|h| f2.trace_pairing(c, h) == 0))
            .collect();
        assert_eq!(brute, vec![vec![1, 1, 1]]);
        assert_eq!(ann, brute);

        let full: Vec<Vec<u32>> = (0..3).map(|i| (0..3).map(|j| (i == j) as u32).collect()).collect();
        assert!(f2.annihilator(3, &full).unwrap().is_empty());
        assert_eq!(f2.annihilator(3, &[]).unwrap().len(), 3);
    }

    #[test]
    fn annihilator_is_an_involution() {
        let f4 = FieldSpec::new(2, 2).unwrap();
        let f3 = FieldSpec::new(3, 1).unwrap();
        let cases: Vec<(&FieldSpec, Vec<Vec<u32>>, usize)> = vec![
            (&f4, vec![vec![1, 2, 3]], 3),
            (&f4, vec![vec![0, 1, 1], vec![1, 0, 2]], 3),
            (&f3, vec![vec![1, 2, 0, 1]], 4),
            (&f3, vec![vec![1, 1, 1, 0], vec![0, 1, 2, 1]], 4),
        ];
        for (f, gens, k) in cases {
            let ann = f.annihilator(k, &gens).unwrap();
            let back = f.annihilator(k, &ann).unwrap();
            assert_eq!(enumerate_span(f, &gens, k), enumerate_span(f, &back, k));
            let dim = f.prime_rank(&gens, k);
            assert_eq!(ann.len(), f.m() as usize * k - dim);
        }
    }

    fn field_strategy() -> impl Strategy<Value = (u32, u32)> {
        prop::sample::select(vec![(2u32, 1u32), (2, 2), (2, 3), (2, 4), (2, 8), (3, 1), (3, 2), (5, 1), (5, 2), (7, 1), (3, 3)])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn field_axioms((p, m) in field_strategy(), a in any::<u32>(), b in any::<u32>(), c in any::<u32>()) {
            let f = FieldSpec::new(p, m).unwrap();
            let q = f.order();
            let (a, b, c) = (f.element(a % q).unwrap(), f.element(b % q).unwrap(), f.element(c % q).unwrap());
            let bc = f.add(b, c).unwrap();
            prop_assert_eq!(f.mul(a, bc).unwrap(), f.add(f.mul(a, b).unwrap(), f.mul(a, c).unwrap()).unwrap());
            prop_assert_eq!(f.mul(f.mul(a, b).unwrap(), c).unwrap(), f.mul(a, f.mul(b, c).unwrap()).unwrap());
            prop_assert_eq!(f.add(a, f.neg(a).unwrap()).unwrap(), f.zero());
            if !a.is_zero() {
                prop_assert_eq!(f.mul(a, f.inv(a).unwrap()).unwrap(), f.one());
            }
            // Frobenius is additive.
            let lhs = f.pow(f.add(a, b).unwrap(), p as u64).unwrap();
            let rhs = f.add(f.pow(a, p as u64).unwrap(), f.pow(b, p as u64).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn solver_solutions_satisfy_system(seed in any::<u64>(), rows in 1usize..5, cols in 1usize..5) {
            let f = FieldSpec::new(3, 2).unwrap();
            let mut r = crate::rng::DetRng::new(seed);
            let a: Vec<Vec<u32>> = (0..rows).map(|_| (0..cols).map(|_| r.below(9) as u32).collect()).collect();
            let x: Vec<u32> = (0..cols).map(|_| r.below(9) as u32).collect();
            let b: Vec<u32> = a.iter().map(|row| f.dot_raw(row, &x)).collect();
            let sol = f.solve_linear(&a, &b).unwrap();
            prop_assert!(sol.is_some());
            let sol = sol.unwrap();
            prop_assert_eq!(sol.dimension(), cols - f.rank(&a, cols));
        }
    }
}
