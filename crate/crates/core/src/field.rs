//! Runtime-selected exact coefficient fields: ℚ, GF(p), and small extensions GF(p^k).
//!
//! A [`FieldCtx`] fixes the field once; every [`FieldElem`] carries its context
//! and refuses to mix with elements of another context (hard error, no
//! coercion). Representations are canonical — reduced fractions with positive
//! denominator, residues in `[0, p)` — so equality is representation equality.
//!
//! Extension fields store their modulus as the coefficient vector
//! `c_0, …, c_{k-1}` of the monic polynomial `t^k + c_{k-1} t^{k-1} + … + c_0`,
//! chosen deterministically (smallest in the graded candidate enumeration), so
//! results are reproducible across runs.

use std::fmt;
use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// u64 modular arithmetic (intermediates widened to u128/i128)
// ---------------------------------------------------------------------------

#[inline]
fn addm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 + b as u128) % p as u128) as u64
}

#[inline]
fn subm(a: u64, b: u64, p: u64) -> u64 {
    ((a as i128 - b as i128).rem_euclid(p as i128)) as u64
}

#[inline]
fn mulm(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

fn powm(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    a %= p;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulm(acc, a, p);
        }
        a = mulm(a, a, p);
        e >>= 1;
    }
    acc
}

/// Inverse of `a` mod prime `p`, `a` in `(0, p)`.
fn invm(a: u64, p: u64) -> u64 {
    debug_assert!(a != 0 && a < p);
    let (mut t, mut new_t): (i128, i128) = (0, 1);
    let (mut r, mut new_r): (i128, i128) = (p as i128, a as i128);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    debug_assert_eq!(r, 1, "modulus not prime or a not a unit");
    t.rem_euclid(p as i128) as u64
}

/// Deterministic Miller–Rabin, exact for all u64.
fn is_prime_u64(n: u64) -> bool {
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &w in &WITNESSES {
        if n % w == 0 {
            return n == w;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d % 2 == 0 {
        d /= 2;
        s += 1;
    }
    'witness: for &w in &WITNESSES {
        let mut x = powm(w, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulm(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// ---------------------------------------------------------------------------
// GF(p)[t] helpers on little-endian coefficient vectors (trimmed)
// ---------------------------------------------------------------------------

fn ptrim(v: &mut Vec<u64>) {
    while v.last() == Some(&0) {
        v.pop();
    }
}

fn pmul(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] = addm(out[i + j], mulm(ai, bj, p), p);
        }
    }
    ptrim(&mut out);
    out
}

fn psub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let mut out = vec![0u64; a.len().max(b.len())];
    for (i, o) in out.iter_mut().enumerate() {
        let x = a.get(i).copied().unwrap_or(0);
        let y = b.get(i).copied().unwrap_or(0);
        *o = subm(x, y, p);
    }
    ptrim(&mut out);
    out
}

/// Division with remainder in GF(p)[t]; `den` nonzero.
fn pdivrem(num: &[u64], den: &[u64], p: u64) -> (Vec<u64>, Vec<u64>) {
    debug_assert!(!den.is_empty());
    let mut rem = num.to_vec();
    ptrim(&mut rem);
    let dd = den.len() - 1;
    let lead_inv = invm(den[dd], p);
    if rem.len() <= dd {
        return (vec![], rem);
    }
    let mut quo = vec![0u64; rem.len() - dd];
    while rem.len() > dd {
        let shift = rem.len() - 1 - dd;
        let coef = mulm(*rem.last().unwrap(), lead_inv, p);
        quo[shift] = coef;
        for (j, &dj) in den.iter().enumerate() {
            rem[shift + j] = subm(rem[shift + j], mulm(coef, dj, p), p);
        }
        ptrim(&mut rem);
        if rem.is_empty() {
            break;
        }
    }
    ptrim(&mut quo);
    (quo, rem)
}

/// Inverse of `a` modulo the irreducible monic `m` (both trimmed, a ≠ 0 mod m).
fn pinv_mod(a: &[u64], m: &[u64], p: u64) -> Vec<u64> {
    let (mut r, mut new_r) = (m.to_vec(), a.to_vec());
    let (mut t, mut new_t): (Vec<u64>, Vec<u64>) = (vec![], vec![1]);
    while !new_r.is_empty() {
        let (q, rem) = pdivrem(&r, &new_r, p);
        let next_t = psub(&t, &pmul(&q, &new_t, p), p);
        r = std::mem::replace(&mut new_r, rem);
        t = std::mem::replace(&mut new_t, next_t);
    }
    // r is a nonzero constant gcd; scale t by its inverse and reduce mod m.
    debug_assert_eq!(r.len(), 1, "modulus reducible or a ≡ 0");
    let scale = invm(r[0], p);
    let scaled: Vec<u64> = t.iter().map(|&c| mulm(c, scale, p)).collect();
    pdivrem(&scaled, m, p).1
}

/// Is the monic polynomial t^k + Σ coeffs[i]·t^i irreducible over GF(p)?
/// Trial division by every monic polynomial of degree ≤ k/2 (k is small).
fn is_irreducible(coeffs: &[u64], p: u64) -> bool {
    let k = coeffs.len();
    let mut f = coeffs.to_vec();
    f.push(1);
    if coeffs[0] == 0 {
        return false; // divisible by t
    }
    for d in 1..=k / 2 {
        let count = (p as u128).pow(d as u32);
        for v in 0..count {
            let mut g = decode_digits(v, p, d);
            g.push(1);
            if pdivrem(&f, &g, p).1.is_empty() {
                return false;
            }
        }
    }
    true
}

/// Little-endian base-p digits of v, padded to `len`.
fn decode_digits(mut v: u128, p: u64, len: usize) -> Vec<u64> {
    let mut out = vec![0u64; len];
    for o in out.iter_mut() {
        *o = (v % p as u128) as u64;
        v /= p as u128;
    }
    out
}

// ---------------------------------------------------------------------------
// Field context
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldKind {
    Rationals,
    /// Prime field GF(p).
    Prime { p: u64 },
    /// GF(p^k) = GF(p)[t] / (t^k + Σ modulus[i]·t^i), modulus irreducible.
    Ext { p: u64, k: usize, modulus: Vec<u64> },
}

#[derive(Debug)]
struct FieldInner {
    kind: FieldKind,
}

/// Immutable, shareable field context. Cheap to clone.
#[derive(Clone)]
pub struct FieldCtx(Arc<FieldInner>);

impl PartialEq for FieldCtx {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.kind == other.0.kind
    }
}
impl Eq for FieldCtx {}

impl fmt::Debug for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FieldCtx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0.kind {
            FieldKind::Rationals => write!(f, "Q"),
            FieldKind::Prime { p } => write!(f, "GF({p})"),
            FieldKind::Ext { p, k, .. } => write!(f, "GF({p},{k})"),
        }
    }
}

/// Parse a field descriptor: `Q`, `GF(p)`, `GF(p,k)`, or `GF(p^k)`.
pub fn make_field(spec: &str) -> Result<FieldCtx> {
    let s: String = spec.chars().filter(|c| !c.is_whitespace()).collect();
    if s == "Q" {
        return Ok(FieldCtx::rationals());
    }
    let inner = s
        .strip_prefix("GF(")
        .and_then(|r| r.strip_suffix(')'))
        .ok_or_else(|| Error::Parse(format!("unknown field descriptor `{spec}`")))?;
    let parts: Vec<&str> = inner.split([',', '^']).collect();
    let parse_num = |t: &str| {
        t.parse::<u64>()
            .map_err(|_| Error::Parse(format!("bad number `{t}` in field descriptor `{spec}`")))
    };
    match parts.as_slice() {
        [ps] => FieldCtx::prime(parse_num(ps)?),
        [ps, ks] => {
            let (p, k) = (parse_num(ps)?, parse_num(ks)? as usize);
            if k == 1 {
                FieldCtx::prime(p)
            } else {
                FieldCtx::ext(p, k)
            }
        }
        _ => Err(Error::Parse(format!("unknown field descriptor `{spec}`"))),
    }
}

impl FieldCtx {
    pub fn rationals() -> FieldCtx {
        FieldCtx(Arc::new(FieldInner {
            kind: FieldKind::Rationals,
        }))
    }

    pub fn prime(p: u64) -> Result<FieldCtx> {
        if !is_prime_u64(p) {
            return Err(Error::NonPrimeModulus(p));
        }
        Ok(FieldCtx(Arc::new(FieldInner {
            kind: FieldKind::Prime { p },
        })))
    }

    /// GF(p^k), k ≥ 2, with the deterministically chosen irreducible modulus:
    /// candidates t^k + Σ c_i t^i are enumerated by the integer Σ c_i p^i and
    /// the first irreducible one wins.
    pub fn ext(p: u64, k: usize) -> Result<FieldCtx> {
        if !is_prime_u64(p) {
            return Err(Error::NonPrimeModulus(p));
        }
        if k < 2 {
            return Err(Error::Parse(format!(
                "extension degree must be ≥ 2, got {k}"
            )));
        }
        let total = (p as u128)
            .checked_pow(k as u32)
            .ok_or(Error::NoIrreducible { p, k })?;
        for v in 0..total {
            let coeffs = decode_digits(v, p, k);
            if is_irreducible(&coeffs, p) {
                return Ok(FieldCtx(Arc::new(FieldInner {
                    kind: FieldKind::Ext {
                        p,
                        k,
                        modulus: coeffs,
                    },
                })));
            }
        }
        Err(Error::NoIrreducible { p, k })
    }

    pub fn kind(&self) -> &FieldKind {
        &self.0.kind
    }

    /// 0 for ℚ, p otherwise.
    pub fn characteristic(&self) -> u64 {
        match &self.0.kind {
            FieldKind::Rationals => 0,
            FieldKind::Prime { p } | FieldKind::Ext { p, .. } => *p,
        }
    }

    /// `None` means infinite. Finite cardinalities beyond u128 also yield
    /// `None`; callers only compare against small bounds.
    pub fn cardinality(&self) -> Option<u128> {
        match &self.0.kind {
            FieldKind::Rationals => None,
            FieldKind::Prime { p } => Some(*p as u128),
            FieldKind::Ext { p, k, .. } => (*p as u128).checked_pow(*k as u32),
        }
    }

    pub fn zero(&self) -> FieldElem {
        self.from_i64(0)
    }

    pub fn one(&self) -> FieldElem {
        self.from_i64(1)
    }

    pub fn from_i64(&self, v: i64) -> FieldElem {
        let val = match &self.0.kind {
            FieldKind::Rationals => Val::Rat(BigRational::from_integer(BigInt::from(v))),
            FieldKind::Prime { p } => Val::Mod((v as i128).rem_euclid(*p as i128) as u64),
            FieldKind::Ext { p, k, .. } => {
                let mut c = vec![0u64; *k];
                c[0] = (v as i128).rem_euclid(*p as i128) as u64;
                Val::Poly(c)
            }
        };
        FieldElem {
            ctx: self.clone(),
            val,
        }
    }

    /// a/b as a field element; panics if b maps to zero.
    pub fn from_ratio(&self, a: i64, b: i64) -> FieldElem {
        assert!(b != 0, "zero denominator");
        if let FieldKind::Rationals = self.0.kind {
            return FieldElem {
                ctx: self.clone(),
                val: Val::Rat(BigRational::new(BigInt::from(a), BigInt::from(b))),
            };
        }
        self.from_i64(a).div(&self.from_i64(b))
    }

    /// Canonical element enumeration. Finite fields: index decodes base-p
    /// digits (requires i < cardinality). ℚ: 0, 1, −1, 2, −2, … .
    pub fn element_from_index(&self, i: u128) -> FieldElem {
        match &self.0.kind {
            FieldKind::Rationals => {
                let n = i.div_ceil(2) as i64;
                self.from_i64(if i % 2 == 0 { -n } else { n })
            }
            FieldKind::Prime { p } => {
                assert!(i < *p as u128, "element index out of range");
                FieldElem {
                    ctx: self.clone(),
                    val: Val::Mod(i as u64),
                }
            }
            FieldKind::Ext { p, k, .. } => {
                assert!(
                    self.cardinality().is_none_or(|q| i < q),
                    "element index out of range"
                );
                FieldElem {
                    ctx: self.clone(),
                    val: Val::Poly(decode_digits(i, *p, *k)),
                }
            }
        }
    }

    /// All elements of a finite field, in canonical index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        let q = self
            .cardinality()
            .expect("elements(): field must be finite");
        (0..q).map(move |i| self.element_from_index(i))
    }

    /// Parse one element in the context's textual syntax.
    pub fn parse_elem(&self, text: &str) -> Result<FieldElem> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty field element".into()));
        }
        match &self.0.kind {
            FieldKind::Rationals => {
                let (num, den) = match s.split_once('/') {
                    Some((a, b)) => (a, b),
                    None => (s.as_str(), "1"),
                };
                let pn: BigInt = num
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad rational `{text}`")))?;
                let pd: BigInt = den
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad rational `{text}`")))?;
                if pd.is_zero() {
                    return Err(Error::Parse(format!("zero denominator in `{text}`")));
                }
                Ok(FieldElem {
                    ctx: self.clone(),
                    val: Val::Rat(BigRational::new(pn, pd)),
                })
            }
            FieldKind::Prime { p } => {
                let n: BigInt = s
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad residue `{text}`")))?;
                let r = ((n % BigInt::from(*p)) + BigInt::from(*p)) % BigInt::from(*p);
                let (_, digits) = r.to_u64_digits();
                Ok(FieldElem {
                    ctx: self.clone(),
                    val: Val::Mod(digits.first().copied().unwrap_or(0)),
                })
            }
            FieldKind::Ext { p, k, .. } => {
                let coeffs = parse_t_poly(&s, *p, *k)?;
                Ok(FieldElem {
                    ctx: self.clone(),
                    val: Val::Poly(coeffs),
                })
            }
        }
    }
}

/// Parse "2*t^3+t+1"-style syntax over GF(p), reduced representation of
/// degree < k expected (higher powers are reduced only by error, not modulus).
fn parse_t_poly(s: &str, p: u64, k: usize) -> Result<Vec<u64>> {
    let mut out = vec![0u64; k];
    let bytes = s.as_bytes();
    let mut pos = 0usize;
    let mut sign_neg = false;
    if bytes[0] == b'+' || bytes[0] == b'-' {
        sign_neg = bytes[0] == b'-';
        pos = 1;
    }
    loop {
        // term: [digits] [*] [t [^ digits]]
        let start = pos;
        let mut coef: Option<u64> = None;
        let dstart = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos > dstart {
            let v: u128 = s[dstart..pos]
                .parse()
                .map_err(|_| Error::Parse(format!("bad coefficient in `{s}`")))?;
            coef = Some((v % p as u128) as u64);
        }
        if pos < bytes.len() && bytes[pos] == b'*' {
            pos += 1;
        }
        let mut exp = 0usize;
        if pos < bytes.len() && bytes[pos] == b't' {
            pos += 1;
            exp = 1;
            if pos < bytes.len() && bytes[pos] == b'^' {
                pos += 1;
                let estart = pos;
                while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                    pos += 1;
                }
                exp = s[estart..pos]
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad exponent in `{s}`")))?;
            }
        }
        if pos == start && coef.is_none() {
            return Err(Error::Parse(format!("bad extension element `{s}`")));
        }
        if exp >= k {
            return Err(Error::Parse(format!(
                "exponent {exp} not reduced modulo the degree-{k} modulus in `{s}`"
            )));
        }
        let mut c = coef.unwrap_or(1);
        if sign_neg {
            c = subm(0, c, p);
        }
        out[exp] = addm(out[exp], c, p);
        if pos == bytes.len() {
            break;
        }
        match bytes[pos] {
            b'+' => sign_neg = false,
            b'-' => sign_neg = true,
            _ => return Err(Error::Parse(format!("unexpected `{}` in `{s}`", s[pos..].chars().next().unwrap()))),
        }
        pos += 1;
        if pos == bytes.len() {
            return Err(Error::Parse(format!("trailing operator in `{s}`")));
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Field elements
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq)]
enum Val {
    Rat(BigRational),
    Mod(u64),
    /// Little-endian residue vector of length exactly k.
    Poly(Vec<u64>),
}

/// An element of the field described by its context. Immutable value type.
#[derive(Clone, PartialEq, Eq)]
pub struct FieldElem {
    ctx: FieldCtx,
    val: Val,
}

impl FieldElem {
    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn is_zero(&self) -> bool {
        match &self.val {
            Val::Rat(r) => r.is_zero(),
            Val::Mod(v) => *v == 0,
            Val::Poly(c) => c.iter().all(|&x| x == 0),
        }
    }

    pub fn is_one(&self) -> bool {
        match &self.val {
            Val::Rat(r) => r.is_one(),
            Val::Mod(v) => *v == 1,
            Val::Poly(c) => c[0] == 1 && c[1..].iter().all(|&x| x == 0),
        }
    }

    /// True only for negative rationals (finite-field residues are canonical).
    pub fn is_negative(&self) -> bool {
        match &self.val {
            Val::Rat(r) => r.is_negative(),
            _ => false,
        }
    }

    fn check_ctx(&self, other: &FieldElem) {
        assert!(
            self.ctx == other.ctx,
            "field context mismatch: {} vs {}",
            self.ctx,
            other.ctx
        );
    }

    fn p(&self) -> u64 {
        self.ctx.characteristic()
    }

    pub fn add(&self, other: &FieldElem) -> FieldElem {
        self.check_ctx(other);
        let val = match (&self.val, &other.val) {
            (Val::Rat(a), Val::Rat(b)) => Val::Rat(a + b),
            (Val::Mod(a), Val::Mod(b)) => Val::Mod(addm(*a, *b, self.p())),
            (Val::Poly(a), Val::Poly(b)) => Val::Poly(
                a.iter()
                    .zip(b)
                    .map(|(&x, &y)| addm(x, y, self.p()))
                    .collect(),
            ),
            _ => unreachable!("context equality guarantees matching variants"),
        };
        FieldElem {
            ctx: self.ctx.clone(),
            val,
        }
    }

    pub fn sub(&self, other: &FieldElem) -> FieldElem {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FieldElem {
        let val = match &self.val {
            Val::Rat(a) => Val::Rat(-a),
            Val::Mod(a) => Val::Mod(subm(0, *a, self.p())),
            Val::Poly(a) => Val::Poly(a.iter().map(|&x| subm(0, x, self.p())).collect()),
        };
        FieldElem {
            ctx: self.ctx.clone(),
            val,
        }
    }

    pub fn mul(&self, other: &FieldElem) -> FieldElem {
        self.check_ctx(other);
        let val = match (&self.val, &other.val) {
            (Val::Rat(a), Val::Rat(b)) => Val::Rat(a * b),
            (Val::Mod(a), Val::Mod(b)) => Val::Mod(mulm(*a, *b, self.p())),
            (Val::Poly(a), Val::Poly(b)) => {
                let FieldKind::Ext { p, k, modulus } = self.ctx.kind() else {
                    unreachable!()
                };
                let mut prod = vec![0u64; 2 * k - 1];
                for (i, &ai) in a.iter().enumerate() {
                    if ai == 0 {
                        continue;
                    }
                    for (j, &bj) in b.iter().enumerate() {
                        prod[i + j] = addm(prod[i + j], mulm(ai, bj, *p), *p);
                    }
                }
                // Fold t^d for d ≥ k via t^k = −Σ modulus[j]·t^j.
                for d in (*k..=2 * k - 2).rev() {
                    let c = prod[d];
                    if c == 0 {
                        continue;
                    }
                    prod[d] = 0;
                    for (j, &mj) in modulus.iter().enumerate() {
                        prod[d - k + j] = subm(prod[d - k + j], mulm(c, mj, *p), *p);
                    }
                }
                prod.truncate(*k);
                Val::Poly(prod)
            }
            _ => unreachable!("context equality guarantees matching variants"),
        };
        FieldElem {
            ctx: self.ctx.clone(),
            val,
        }
    }

    /// Multiplicative inverse; panics on zero (callers must guard).
    pub fn inv(&self) -> FieldElem {
        assert!(!self.is_zero(), "inverse of zero");
        let val = match &self.val {
            Val::Rat(a) => Val::Rat(a.recip()),
            Val::Mod(a) => Val::Mod(invm(*a, self.p())),
            Val::Poly(a) => {
                let FieldKind::Ext { p, k, modulus } = self.ctx.kind() else {
                    unreachable!()
                };
                let mut m = modulus.clone();
                m.push(1);
                let mut at = a.clone();
                ptrim(&mut at);
                let mut r = pinv_mod(&at, &m, *p);
                r.resize(*k, 0);
                Val::Poly(r)
            }
        };
        FieldElem {
            ctx: self.ctx.clone(),
            val,
        }
    }

    pub fn div(&self, other: &FieldElem) -> FieldElem {
        self.mul(&other.inv())
    }

    pub fn pow(&self, mut e: u64) -> FieldElem {
        let mut acc = self.ctx.one();
        let mut base = self.clone();
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            e >>= 1;
        }
        acc
    }

    /// Exact square root if one exists: over the rationals via integer
    /// square roots of the reduced numerator and denominator, over a finite
    /// field by enumeration in the canonical element order (so the result is
    /// deterministic).
    pub fn sqrt(&self) -> Option<FieldElem> {
        if self.is_zero() {
            return Some(self.ctx.zero());
        }
        match &self.val {
            Val::Rat(a) => {
                use num::Signed;
                if a.is_negative() {
                    return None;
                }
                let (n, d) = (a.numer(), a.denom());
                let (sn, sd) = (n.sqrt(), d.sqrt());
                if &(&sn * &sn) == n && &(&sd * &sd) == d {
                    Some(FieldElem {
                        ctx: self.ctx.clone(),
                        val: Val::Rat(BigRational::new(sn, sd)),
                    })
                } else {
                    None
                }
            }
            _ => self
                .ctx
                .elements()
                .find(|x| x.mul(x) == *self),
        }
    }
}

impl fmt::Display for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.val {
            Val::Rat(r) => {
                if r.denom().is_one() {
                    write!(f, "{}", r.numer())
                } else {
                    write!(f, "{}/{}", r.numer(), r.denom())
                }
            }
            Val::Mod(v) => write!(f, "{v}"),
            Val::Poly(c) => {
                let mut first = true;
                for (e, &ce) in c.iter().enumerate().rev() {
                    if ce == 0 {
                        continue;
                    }
                    if !first {
                        write!(f, "+")?;
                    }
                    first = false;
                    match (ce, e) {
                        (_, 0) => write!(f, "{ce}")?,
                        (1, 1) => write!(f, "t")?,
                        (1, _) => write!(f, "t^{e}")?,
                        (_, 1) => write!(f, "{ce}*t")?,
                        (_, _) => write!(f, "{ce}*t^{e}")?,
                    }
                }
                if first {
                    write!(f, "0")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self, self.ctx)
    }
}

macro_rules! elem_binop {
    ($trait:ident, $method:ident) => {
        impl std::ops::$trait<&FieldElem> for &FieldElem {
            type Output = FieldElem;
            fn $method(self, rhs: &FieldElem) -> FieldElem {
                FieldElem::$method(self, rhs)
            }
        }
    };
}
elem_binop!(Add, add);
elem_binop!(Sub, sub);
elem_binop!(Mul, mul);

impl std::ops::Neg for &FieldElem {
    type Output = FieldElem;
    fn neg(self) -> FieldElem {
        FieldElem::neg(self)
    }
}

// ---------------------------------------------------------------------------
// Field extension with explicit embedding
// ---------------------------------------------------------------------------

/// An embedding K ↪ L produced by [`extend`]. `project` inverts it on the
/// image by exhaustive search (the supported fields are small).
pub struct FieldEmbedding {
    src: FieldCtx,
    dst: FieldCtx,
    /// Image of the source generator t (for prime sources: unused).
    gen_image: FieldElem,
}

impl FieldEmbedding {
    pub fn src(&self) -> &FieldCtx {
        &self.src
    }

    pub fn dst(&self) -> &FieldCtx {
        &self.dst
    }

    pub fn embed(&self, a: &FieldElem) -> FieldElem {
        assert!(a.ctx == self.src, "embed: element not from source field");
        match &a.val {
            Val::Mod(v) => self.dst.from_i64(*v as i64),
            Val::Poly(c) => {
                // Horner at the image of t; prime-field coefficients embed as constants.
                let mut acc = self.dst.zero();
                for &ci in c.iter().rev() {
                    acc = acc.mul(&self.gen_image);
                    acc = acc.add(&self.dst.from_i64(ci as i64));
                }
                acc
            }
            Val::Rat(_) => unreachable!("extend rejects ℚ"),
        }
    }

    pub fn project(&self, a: &FieldElem) -> Option<FieldElem> {
        assert!(a.ctx == self.dst, "project: element not from target field");
        self.src
            .elements()
            .find(|cand| &self.embed(cand) == a)
    }
}

/// Build the degree-k extension L of a finite field K together with an
/// embedding K ↪ L. The image of the source generator is the first root of
/// the source modulus in L's canonical element order.
pub fn extend(ctx: &FieldCtx, k: usize) -> Result<FieldEmbedding> {
    if k < 2 {
        return Err(Error::Parse(format!(
            "extension degree must be ≥ 2, got {k}"
        )));
    }
    match ctx.kind() {
        FieldKind::Rationals => Err(Error::UnsupportedExtension(
            "ℚ has no finite extensions here (and |ℚ| = ∞ never needs one)".into(),
        )),
        FieldKind::Prime { p } => {
            let dst = FieldCtx::ext(*p, k)?;
            let gen_image = dst.zero();
            Ok(FieldEmbedding {
                src: ctx.clone(),
                dst,
                gen_image,
            })
        }
        FieldKind::Ext {
            p,
            k: j,
            modulus,
        } => {
            let dst = FieldCtx::ext(*p, j * k)?;
            // Find a root of the source modulus in dst (exists since j | jk).
            let eval = |x: &FieldElem| {
                let mut acc = dst.one(); // leading monic coefficient
                for &ci in modulus.iter().rev() {
                    acc = acc.mul(x);
                    acc = acc.add(&dst.from_i64(ci as i64));
                }
                acc
            };
            let gen_image = dst
                .elements()
                .find(|x| eval(x).is_zero())
                .ok_or_else(|| {
                    Error::UnsupportedExtension("no root of source modulus found".into())
                })?;
            Ok(FieldEmbedding {
                src: ctx.clone(),
                dst,
                gen_image,
            })
        }
    }
}

/// Scalar `s` that puts a coefficient family into canonical form when every
/// member is multiplied by it: over ℚ, `s` clears denominators and divides by
/// the integer content, with the first nonzero coefficient made positive;
/// over a finite field, `s` is the inverse of the first nonzero coefficient.
/// Returns `None` when all coefficients are zero.
pub fn content_normalizer<'a, I>(coeffs: I) -> Option<FieldElem>
where
    I: IntoIterator<Item = &'a FieldElem>,
{
    use num::Integer;
    let mut first_nonzero: Option<FieldElem> = None;
    let mut gcd_num = BigInt::zero();
    let mut lcm_den = BigInt::one();
    for c in coeffs {
        if c.is_zero() {
            continue;
        }
        if first_nonzero.is_none() {
            first_nonzero = Some(c.clone());
        }
        if let Val::Rat(r) = &c.val {
            gcd_num = gcd_num.gcd(r.numer());
            lcm_den = lcm_den.lcm(r.denom());
        }
    }
    let first = first_nonzero?;
    match &first.val {
        Val::Rat(_) => {
            let mut content = BigRational::new(gcd_num, lcm_den);
            if first.is_negative() {
                content = -content;
            }
            Some(FieldElem {
                ctx: first.ctx.clone(),
                val: Val::Rat(content.recip()),
            })
        }
        _ => Some(first.inv()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationals_basics() {
        let q = make_field("Q").unwrap();
        assert_eq!(q.characteristic(), 0);
        assert_eq!(q.cardinality(), None);
        let a = q.from_ratio(3, 2);
        let b = q.from_ratio(1, 2);
        assert_eq!(a.add(&b), q.from_i64(2));
        // canonical form: representation equality
        assert_eq!(q.from_ratio(2, 4), q.from_ratio(1, 2));
        assert_eq!(q.from_ratio(-1, -2), q.from_ratio(1, 2));
        assert_eq!(a.to_string(), "3/2");
        assert_eq!(q.from_i64(-7).to_string(), "-7");
        assert_eq!(q.parse_elem("-3/6").unwrap(), q.from_ratio(-1, 2));
    }

    #[test]
    fn prime_field_basics() {
        let f2 = make_field("GF(2)").unwrap();
        assert_eq!(f2.characteristic(), 2);
        assert_eq!(f2.cardinality(), Some(2));
        assert!(f2.one().add(&f2.one()).is_zero());
        let f7 = make_field("GF(7)").unwrap();
        assert_eq!(f7.from_i64(-1), f7.from_i64(6));
        assert_eq!(f7.from_i64(3).inv(), f7.from_i64(5)); // 3·5 = 15 ≡ 1
        assert_eq!(f7.parse_elem("-9").unwrap(), f7.from_i64(5));
    }

    #[test]
    fn exact_square_roots() {
        let q = make_field("Q").unwrap();
        let x = q.from_ratio(49, 4);
        let r = x.sqrt().unwrap();
        assert_eq!(r.mul(&r), x);
        assert!(q.from_i64(2).sqrt().is_none());
        assert!(q.from_i64(-4).sqrt().is_none());
        assert_eq!(q.zero().sqrt().unwrap(), q.zero());
        let f7 = make_field("GF(7)").unwrap();
        for e in f7.elements() {
            let sq = e.mul(&e);
            let r = sq.sqrt().expect("squares have roots");
            assert_eq!(r.mul(&r), sq);
        }
        assert!(f7.from_i64(3).sqrt().is_none()); // 3 is not a square mod 7
        let f4 = make_field("GF(2,2)").unwrap();
        for e in f4.elements() {
            // char 2: squaring is a bijection, every element has a root
            let r = e.sqrt().expect("frobenius is onto");
            assert_eq!(r.mul(&r), e);
        }
    }

    #[test]
    fn nonprime_modulus_rejected() {
        assert_eq!(make_field("GF(4)").unwrap_err(), Error::NonPrimeModulus(4));
        assert_eq!(make_field("GF(1)").unwrap_err(), Error::NonPrimeModulus(1));
    }

    /// Independent oracle: a monic quadratic/cubic over GF(p) is irreducible
    /// iff it has no roots. Enumerate candidates in the same integer order and
    /// take the first.
    fn first_irreducible_by_roots(p: u64, k: usize) -> Vec<u64> {
        assert!(k == 2 || k == 3);
        'cand: for v in 0..(p as u128).pow(k as u32) {
            let c = decode_digits(v, p, k);
            for x in 0..p {
                // evaluate t^k + Σ c_i t^i at x
                let mut acc = powm(x, k as u64, p);
                for (i, &ci) in c.iter().enumerate() {
                    acc = addm(acc, mulm(ci, powm(x, i as u64, p), p), p);
                }
                if acc == 0 {
                    continue 'cand;
                }
            }
            return c;
        }
        unreachable!("an irreducible of degree {k} over GF({p}) always exists")
    }

    #[test]
    fn extension_modulus_is_deterministic_minimum() {
        for (p, k) in [(2u64, 2usize), (3, 2), (2, 3), (5, 2)] {
            let ctx = FieldCtx::ext(p, k).unwrap();
            let FieldKind::Ext { modulus, .. } = ctx.kind() else {
                panic!()
            };
            assert_eq!(modulus, &first_irreducible_by_roots(p, k), "GF({p},{k})");
        }
        // frozen values: t^2+t+1 over GF(2), t^2+1 over GF(3)
        let f4 = make_field("GF(2,2)").unwrap();
        assert!(matches!(f4.kind(), FieldKind::Ext { modulus, .. } if modulus == &vec![1, 1]));
        assert_eq!(f4.cardinality(), Some(4));
        let f9 = make_field("GF(3^2)").unwrap();
        assert!(matches!(f9.kind(), FieldKind::Ext { modulus, .. } if modulus == &vec![1, 0]));
    }

    #[test]
    fn gf4_arithmetic() {
        let f4 = make_field("GF(2,2)").unwrap();
        let t = f4.parse_elem("t").unwrap();
        let t1 = f4.parse_elem("t+1").unwrap();
        assert_eq!(t.mul(&t), t1); // t² = t+1 mod t²+t+1
        assert_eq!(t.inv(), t1); // t(t+1) = t²+t = 1
        assert!(t.mul(&t1).is_one());
        assert_eq!(t1.to_string(), "t+1");
        assert_eq!(f4.parse_elem("t^1+1").unwrap(), t1);
        assert_eq!(f4.parse_elem("1+t").unwrap(), t1);
    }

    #[test]
    fn ext_inverses_exhaustive() {
        for spec in ["GF(2,2)", "GF(3,2)", "GF(2,3)", "GF(5,2)"] {
            let f = make_field(spec).unwrap();
            for a in f.elements().skip(1) {
                assert!(a.mul(&a.inv()).is_one(), "{spec}: {a}");
            }
        }
    }

    #[test]
    fn element_enumeration() {
        let q = FieldCtx::rationals();
        let got: Vec<_> = (0..5).map(|i| q.element_from_index(i).to_string()).collect();
        assert_eq!(got, ["0", "1", "-1", "2", "-2"]);
        let f4 = FieldCtx::ext(2, 2).unwrap();
        let got: Vec<_> = f4.elements().map(|e| e.to_string()).collect();
        assert_eq!(got, ["0", "1", "t", "t+1"]);
    }

    #[test]
    fn extend_prime_to_ext() {
        let f2 = FieldCtx::prime(2).unwrap();
        let emb = extend(&f2, 2).unwrap();
        assert_eq!(emb.dst().cardinality(), Some(4));
        assert!(emb.embed(&f2.one()).is_one());
        for a in f2.elements() {
            assert_eq!(emb.project(&emb.embed(&a)), Some(a.clone()));
        }
        let f3 = FieldCtx::prime(3).unwrap();
        assert_eq!(extend(&f3, 2).unwrap().dst().cardinality(), Some(9));
    }

    #[test]
    fn extend_ext_to_ext_is_ring_hom() {
        let f4 = FieldCtx::ext(2, 2).unwrap();
        let emb = extend(&f4, 2).unwrap();
        assert_eq!(emb.dst().cardinality(), Some(16));
        for a in f4.elements() {
            for b in f4.elements() {
                assert_eq!(emb.embed(&a.add(&b)), emb.embed(&a).add(&emb.embed(&b)));
                assert_eq!(emb.embed(&a.mul(&b)), emb.embed(&a).mul(&emb.embed(&b)));
            }
            assert_eq!(emb.project(&emb.embed(&a)), Some(a));
        }
    }

    #[test]
    fn extend_rationals_rejected() {
        assert!(matches!(
            extend(&FieldCtx::rationals(), 2),
            Err(Error::UnsupportedExtension(_))
        ));
    }

    #[test]
    #[should_panic(expected = "field context mismatch")]
    fn mixing_contexts_panics() {
        let a = FieldCtx::prime(2).unwrap().one();
        let b = FieldCtx::prime(3).unwrap().one();
        let _ = a.add(&b);
    }

    #[cfg(test)]
    mod axioms {
        use super::*;
        use proptest::prelude::*;

        fn fields() -> Vec<FieldCtx> {
            vec![
                FieldCtx::rationals(),
                FieldCtx::prime(2).unwrap(),
                FieldCtx::prime(5).unwrap(),
                FieldCtx::ext(2, 2).unwrap(),
                FieldCtx::ext(3, 2).unwrap(),
            ]
        }

        fn pick(ctx: &FieldCtx, seed: i64) -> FieldElem {
            match ctx.cardinality() {
                Some(q) => ctx.element_from_index((seed.unsigned_abs() as u128) % q),
                None => ctx.from_ratio(seed % 20, 1 + (seed % 7).abs()),
            }
        }

        proptest! {
            #[test]
            fn field_axioms(sa in -1000i64..1000, sb in -1000i64..1000, sc in -1000i64..1000) {
                for ctx in fields() {
                    let (a, b, c) = (pick(&ctx, sa), pick(&ctx, sb), pick(&ctx, sc));
                    prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
                    prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                    prop_assert_eq!(a.add(&b), b.add(&a));
                    prop_assert_eq!(a.mul(&b), b.mul(&a));
                    prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
                    prop_assert_eq!(a.sub(&a), ctx.zero());
                    if !a.is_zero() {
                        prop_assert!(a.mul(&a.inv()).is_one());
                    }
                }
            }

            #[test]
            fn frobenius(sa in -1000i64..1000, sb in -1000i64..1000) {
                for ctx in fields() {
                    let p = ctx.characteristic();
                    if p == 0 { continue; }
                    let (a, b) = (pick(&ctx, sa), pick(&ctx, sb));
                    prop_assert_eq!(a.add(&b).pow(p), a.pow(p).add(&b.pow(p)));
                }
            }

            #[test]
            fn display_parse_roundtrip(sa in -1000i64..1000) {
                for ctx in fields() {
                    let a = pick(&ctx, sa);
                    prop_assert_eq!(ctx.parse_elem(&a.to_string()).unwrap(), a);
                }
            }
        }
    }
}
