//! Arithmetic in GF(p^k).
//!
//! A field is described by a [`FieldSpec`] (prime, degree, monic modulus) and
//! realised as a [`GaloisField`], which validates the spec once and then
//! serves every operation from precomputed tables. Elements travel through
//! the hot paths as bare integer codes ([`Elem`]): the little-endian base-p
//! reading of the coefficient vector. [`FieldElement`] wraps a code together
//! with its field for the checked, self-describing API.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer code of a field element: `Σ coeffs[i] · p^i`.
pub type Elem = u16;

/// Largest field order accepted.
pub const MAX_ORDER: u32 = 128;

/// Prime, extension degree and modulus of a finite field.
///
/// `modulus` holds `k + 1` coefficients, constant term first, and must be
/// monic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FieldSpec {
    pub p: u32,
    pub k: u32,
    pub modulus: Vec<u32>,
}

// Built-in moduli, constant term first. Every entry is checked for
// irreducibility when a field is constructed from it.
const DEFAULT_MODULI: &[(u32, &[u32])] = &[
    (2, &[1, 1, 1]),
    (2, &[1, 1, 0, 1]),
    (2, &[1, 1, 0, 0, 1]),
    (2, &[1, 0, 1, 0, 0, 1]),
    (2, &[1, 1, 0, 0, 0, 0, 1]),
    (2, &[1, 1, 0, 0, 0, 0, 0, 1]),
    (3, &[1, 0, 1]),
    (3, &[1, 2, 0, 1]),
    (3, &[2, 0, 0, 1, 1]),
    (5, &[2, 0, 1]),
    (5, &[1, 1, 0, 1]),
    (7, &[1, 0, 1]),
    (7, &[5, 0, 0, 1]),
    (11, &[1, 0, 1]),
];

impl FieldSpec {
    pub fn new(p: u32, k: u32, modulus: Vec<u32>) -> Self {
        FieldSpec { p, k, modulus }
    }

    /// The prime field F_p, with modulus `x`.
    pub fn prime(p: u32) -> Self {
        FieldSpec { p, k: 1, modulus: vec![0, 1] }
    }

    /// Spec with a modulus taken from the built-in table.
    pub fn with_default_modulus(p: u32, k: u32) -> Result<Self> {
        if k == 1 {
            return Ok(Self::prime(p));
        }
        DEFAULT_MODULI
            .iter()
            .find(|(pp, m)| *pp == p && m.len() as u32 == k + 1)
            .map(|(_, m)| FieldSpec { p, k, modulus: m.to_vec() })
            .ok_or_else(|| {
                Error::InvalidField(format!(
                    "no built-in modulus for GF({p}^{k}); supply one explicitly"
                ))
            })
    }

    /// Field order `p^k`, saturating on absurd inputs.
    pub fn order(&self) -> u64 {
        (self.p as u64).saturating_pow(self.k)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidField(m));
        if self.p < 2 || !is_prime(self.p) {
            return bad(format!("{} is not prime", self.p));
        }
        if self.k == 0 {
            return bad("extension degree must be at least 1".into());
        }
        if self.order() > MAX_ORDER as u64 {
            return bad(format!("field order {}^{} exceeds {MAX_ORDER}", self.p, self.k));
        }
        if self.modulus.len() != self.k as usize + 1 {
            return bad(format!(
                "modulus needs {} coefficients, got {}",
                self.k + 1,
                self.modulus.len()
            ));
        }
        if let Some(c) = self.modulus.iter().find(|&&c| c >= self.p) {
            return bad(format!("modulus coefficient {c} is not reduced mod {}", self.p));
        }
        if self.modulus[self.k as usize] != 1 {
            return bad("modulus is not monic".into());
        }
        if !is_irreducible(&self.modulus, self.p) {
            return bad(format!("modulus {:?} is reducible over F_{}", self.modulus, self.p));
        }
        Ok(())
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Remainder of `num` modulo the monic polynomial `den` over F_p.
fn poly_rem(num: &[u32], den: &[u32], p: u32) -> Vec<u32> {
    let mut r = num.to_vec();
    let dd = den.len() - 1;
    while r.len() > dd {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dd;
        if lead != 0 {
            for (i, &c) in den.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Exhaustive search for a monic factor of degree `1..=deg/2`.
fn is_irreducible(modulus: &[u32], p: u32) -> bool {
    let deg = modulus.len() - 1;
    for d in 1..=deg / 2 {
        let count = (p as u64).pow(d as u32);
        for code in 0..count {
            let mut cand = digits(code, p, d);
            cand.push(1);
            if poly_rem(modulus, &cand, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

fn digits(mut code: u64, p: u32, len: usize) -> Vec<u32> {
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push((code % p as u64) as u32);
        code /= p as u64;
    }
    out
}

struct Tables {
    spec: FieldSpec,
    q: usize,
    add: Vec<Elem>,
    mul: Vec<Elem>,
    neg: Vec<Elem>,
    inv: Vec<Elem>,
    // frob[j][a] = a^(p^j)
    frob: Vec<Vec<Elem>>,
}

/// A validated finite field with precomputed operation tables.
///
/// Cloning is cheap; clones share the tables.
#[derive(Clone)]
pub struct GaloisField(Arc<Tables>);

impl GaloisField {
    pub fn new(spec: FieldSpec) -> Result<Self> {
        spec.validate()?;
        let p = spec.p;
        let k = spec.k as usize;
        let q = spec.order() as usize;
        let encode = |ds: &[u32]| ds.iter().rev().fold(0u32, |acc, &d| acc * p + d) as Elem;
        let digs: Vec<Vec<u32>> = (0..q as u64).map(|c| digits(c, p, k)).collect();

        let mut add = vec![0; q * q];
        let mut mul = vec![0; q * q];
        for a in 0..q {
            for b in 0..q {
                let s: Vec<u32> = (0..k).map(|i| (digs[a][i] + digs[b][i]) % p).collect();
                add[a * q + b] = encode(&s);

                let mut prod = vec![0u32; 2 * k - 1];
                for i in 0..k {
                    for j in 0..k {
                        prod[i + j] = (prod[i + j] + digs[a][i] * digs[b][j]) % p;
                    }
                }
                let mut r = poly_rem(&prod, &spec.modulus, p);
                r.resize(k, 0);
                mul[a * q + b] = encode(&r);
            }
        }
        let neg: Vec<Elem> = (0..q)
            .map(|a| (0..q).find(|&b| add[a * q + b] == 0).unwrap() as Elem)
            .collect();
        let mut inv = vec![0; q];
        for a in 1..q {
            inv[a] = (1..q)
                .find(|&b| mul[a * q + b] == 1)
                .ok_or_else(|| Error::InvalidField("modulus does not give a field".into()))?
                as Elem;
        }
        let pth: Vec<Elem> = (0..q)
            .map(|a| (1..p).fold(a as Elem, |acc, _| mul[acc as usize * q + a]))
            .collect();
        let mut frob = vec![(0..q as Elem).collect::<Vec<_>>()];
        for j in 1..k {
            let prev = &frob[j - 1];
            frob.push(prev.iter().map(|&a| pth[a as usize]).collect());
        }

        Ok(GaloisField(Arc::new(Tables { spec, q, add, mul, neg, inv, frob })))
    }

    /// Field built from the built-in modulus table.
    pub fn with_default_modulus(p: u32, k: u32) -> Result<Self> {
        Self::new(FieldSpec::with_default_modulus(p, k)?)
    }

    pub fn spec(&self) -> &FieldSpec {
        &self.0.spec
    }

    pub fn order(&self) -> usize {
        self.0.q
    }

    pub fn characteristic(&self) -> u32 {
        self.0.spec.p
    }

    pub fn degree(&self) -> u32 {
        self.0.spec.k
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        self.0.add[a as usize * self.0.q + b as usize]
    }

    #[inline]
    pub fn sub(&self, a: Elem, b: Elem) -> Elem {
        self.add(a, self.0.neg[b as usize])
    }

    #[inline]
    pub fn neg(&self, a: Elem) -> Elem {
        self.0.neg[a as usize]
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.0.mul[a as usize * self.0.q + b as usize]
    }

    /// Multiplicative inverse.
    ///
    /// The zero element maps to zero; use [`GaloisField::checked_inv`] where
    /// zero must be rejected.
    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        self.0.inv[a as usize]
    }

    pub fn checked_inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            Err(Error::ZeroInverse)
        } else {
            Ok(self.inv(a))
        }
    }

    #[inline]
    pub fn div(&self, a: Elem, b: Elem) -> Elem {
        self.mul(a, self.inv(b))
    }

    /// `a^(p^j)`.
    #[inline]
    pub fn frobenius(&self, j: u32, a: Elem) -> Elem {
        self.0.frob[(j % self.0.spec.k) as usize][a as usize]
    }

    pub fn contains(&self, a: Elem) -> bool {
        (a as usize) < self.0.q
    }

    /// Little-endian coefficient vector of a code.
    pub fn coeffs(&self, a: Elem) -> Vec<u32> {
        digits(a as u64, self.0.spec.p, self.0.spec.k as usize)
    }

    pub fn element(&self, code: Elem) -> Result<FieldElement> {
        FieldElement::new(self, code)
    }

    /// All elements in increasing code order.
    pub fn enumerate_elements(&self) -> Vec<FieldElement> {
        (0..self.0.q as Elem)
            .map(|code| FieldElement { field: self.clone(), code })
            .collect()
    }
}

impl PartialEq for GaloisField {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.spec == other.0.spec
    }
}

impl Eq for GaloisField {}

impl fmt::Debug for GaloisField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = self.spec();
        write!(f, "GF({}^{}, modulus={:?})", s.p, s.k, s.modulus)
    }
}

/// A field element bound to its field.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElement {
    field: GaloisField,
    code: Elem,
}

impl FieldElement {
    pub fn new(field: &GaloisField, code: Elem) -> Result<Self> {
        if !field.contains(code) {
            return Err(Error::invalid(format!(
                "code {code} out of range for a field of order {}",
                field.order()
            )));
        }
        Ok(FieldElement { field: field.clone(), code })
    }

    pub fn from_coeffs(field: &GaloisField, coeffs: &[u32]) -> Result<Self> {
        let spec = field.spec();
        if coeffs.len() != spec.k as usize || coeffs.iter().any(|&c| c >= spec.p) {
            return Err(Error::invalid(format!(
                "expected {} coefficients in [0, {})",
                spec.k, spec.p
            )));
        }
        let code = coeffs.iter().rev().fold(0u32, |acc, &d| acc * spec.p + d);
        Self::new(field, code as Elem)
    }

    pub fn zero(field: &GaloisField) -> Self {
        FieldElement { field: field.clone(), code: 0 }
    }

    pub fn one(field: &GaloisField) -> Self {
        FieldElement { field: field.clone(), code: 1 }
    }

    pub fn code(&self) -> Elem {
        self.code
    }

    pub fn field(&self) -> &GaloisField {
        &self.field
    }

    pub fn coeffs(&self) -> Vec<u32> {
        self.field.coeffs(self.code)
    }

    pub fn is_zero(&self) -> bool {
        self.code == 0
    }

    fn same_field(&self, other: &Self) -> Result<()> {
        if self.field == other.field {
            Ok(())
        } else {
            Err(Error::FieldMismatch)
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_code(self.field.add(self.code, other.code)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_code(self.field.sub(self.code, other.code)))
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_field(other)?;
        Ok(self.with_code(self.field.mul(self.code, other.code)))
    }

    pub fn inv(&self) -> Result<Self> {
        Ok(self.with_code(self.field.checked_inv(self.code)?))
    }

    pub fn neg(&self) -> Self {
        self.with_code(self.field.neg(self.code))
    }

    fn with_code(&self, code: Elem) -> Self {
        FieldElement { field: self.field.clone(), code }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Renders the element as a polynomial in `x`, e.g. `x+1`.
impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let cs = self.coeffs();
        let terms: Vec<String> = cs
            .iter()
            .enumerate()
            .rev()
            .filter(|(_, &c)| c != 0)
            .map(|(i, &c)| match (i, c) {
                (0, c) => c.to_string(),
                (1, 1) => "x".to_string(),
                (1, c) => format!("{c}x"),
                (i, 1) => format!("x^{i}"),
                (i, c) => format!("{c}x^{i}"),
            })
            .collect();
        if terms.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", terms.join("+"))
        }
    }
}

/// The automorphism `x ↦ x^(p^exponent)`.
///
/// Over GF(p^k) these `k` maps are all the field automorphisms there are.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frobenius {
    exponent: u32,
}

impl Frobenius {
    pub fn identity() -> Self {
        Frobenius { exponent: 0 }
    }

    /// Exponent reduced modulo the field's extension degree.
    pub fn new(exponent: u32, field: &GaloisField) -> Self {
        Frobenius { exponent: exponent % field.degree() }
    }

    pub fn exponent(self) -> u32 {
        self.exponent
    }

    pub fn compose(self, other: Frobenius, field: &GaloisField) -> Self {
        Frobenius::new(self.exponent + other.exponent, field)
    }

    #[inline]
    pub fn apply_code(self, field: &GaloisField, a: Elem) -> Elem {
        field.frobenius(self.exponent, a)
    }

    pub fn apply(self, a: &FieldElement) -> FieldElement {
        a.with_code(a.field.frobenius(self.exponent, a.code))
    }
}
