//! Sparse multivariate polynomials K[x₁,…,xₙ] over a runtime field context.
//!
//! Terms are kept in a BTreeMap under graded-lexicographic order (degree
//! first, then exponent vectors with x₁ heaviest), with no stored zero
//! coefficients — equality is representation equality, printing is
//! deterministic (leading term first).
//!
//! The text grammar used by the CLI reads terms like `3/2*x1^2 + x2*x3 - x4`;
//! extension-field coefficients appear parenthesized, e.g. `(t+1)*x1*x2`.
//! Variables are 1-based in text (`x1`), 0-based in the API.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem, FieldKind};

// ---------------------------------------------------------------------------
// Monomials
// ---------------------------------------------------------------------------

/// Exponent vector of length nvars; total degree = sum of entries.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn one(nvars: usize) -> Monomial {
        Monomial(vec![0; nvars])
    }

    /// The monomial x_i (0-based).
    pub fn var(nvars: usize, i: usize) -> Monomial {
        assert!(i < nvars);
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn from_exponents(e: Vec<u32>) -> Monomial {
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Componentwise division; None if any exponent would go negative.
    pub fn try_div(&self, other: &Monomial) -> Option<Monomial> {
        debug_assert_eq!(self.0.len(), other.0.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<u32>>>()
            .map(Monomial)
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // graded lex: degree first, then lexicographic (x₁ heaviest)
        (self.degree(), &self.0).cmp(&(other.degree(), &other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        if first {
            write!(f, "1")?;
        }
        Ok(())
    }
}

/// Degree with a distinguished −∞ for the zero polynomial; the derived order
/// puts NegInf below every finite degree.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum Degree {
    NegInf,
    Finite(u32),
}

// ---------------------------------------------------------------------------
// Polynomials
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq)]
pub struct Poly {
    ctx: FieldCtx,
    nvars: usize,
    terms: BTreeMap<Monomial, FieldElem>,
}

impl Poly {
    pub fn zero(ctx: &FieldCtx, nvars: usize) -> Poly {
        Poly {
            ctx: ctx.clone(),
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(ctx: &FieldCtx, nvars: usize, c: FieldElem) -> Poly {
        let mut p = Poly::zero(ctx, nvars);
        p.insert_add(Monomial::one(nvars), c);
        p
    }

    pub fn one(ctx: &FieldCtx, nvars: usize) -> Poly {
        Poly::constant(ctx, nvars, ctx.one())
    }

    /// The variable x_i (0-based).
    pub fn var(ctx: &FieldCtx, nvars: usize, i: usize) -> Poly {
        let mut p = Poly::zero(ctx, nvars);
        p.insert_add(Monomial::var(nvars, i), ctx.one());
        p
    }

    /// Build from (monomial, coefficient) pairs, summing duplicates.
    /// Panics on mismatched contexts or exponent lengths (internal API).
    pub fn from_terms(
        ctx: &FieldCtx,
        nvars: usize,
        terms: impl IntoIterator<Item = (Monomial, FieldElem)>,
    ) -> Poly {
        let mut p = Poly::zero(ctx, nvars);
        for (m, c) in terms {
            assert_eq!(m.nvars(), nvars, "monomial arity mismatch");
            assert!(c.ctx() == ctx, "coefficient context mismatch");
            p.insert_add(m, c);
        }
        p
    }

    fn insert_add(&mut self, m: Monomial, c: FieldElem) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let s = e.get().add(&c);
                if s.is_zero() {
                    e.remove();
                } else {
                    e.insert(s);
                }
            }
        }
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> Degree {
        match self.terms.last_key_value() {
            None => Degree::NegInf,
            Some((m, _)) => Degree::Finite(m.degree()),
        }
    }

    /// Largest term under graded lex, None for the zero polynomial.
    pub fn leading_term(&self) -> Option<(&Monomial, &FieldElem)> {
        self.terms.last_key_value()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &FieldElem)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, m: &Monomial) -> FieldElem {
        self.terms.get(m).cloned().unwrap_or_else(|| self.ctx.zero())
    }

    fn check_compat(&self, other: &Poly) {
        assert!(self.ctx == other.ctx, "polynomial context mismatch");
        assert_eq!(self.nvars, other.nvars, "polynomial arity mismatch");
    }

    pub fn add(&self, other: &Poly) -> Poly {
        self.check_compat(other);
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_add(m.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly {
            ctx: self.ctx.clone(),
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &FieldElem) -> Poly {
        if c.is_zero() {
            return Poly::zero(&self.ctx, self.nvars);
        }
        Poly {
            ctx: self.ctx.clone(),
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k.mul(c)))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        self.check_compat(other);
        let mut out = Poly::zero(&self.ctx, self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.insert_add(ma.mul(mb), ca.mul(cb));
            }
        }
        out
    }

    /// Exact quotient self / divisor in K[x]; panics if the division is not
    /// exact (internal invariant of fraction-free elimination).
    pub fn div_exact(&self, divisor: &Poly) -> Poly {
        self.check_compat(divisor);
        assert!(!divisor.is_zero(), "division by zero polynomial");
        let (dm, dc) = divisor.leading_term().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let mut rem = self.clone();
        let mut quo = Poly::zero(&self.ctx, self.nvars);
        while let Some((rm, rc)) = rem.leading_term().map(|(m, c)| (m.clone(), c.clone())) {
            let qm = rm
                .try_div(&dm)
                .expect("inexact polynomial division (leading monomial)");
            let qc = rc.div(&dc);
            let t = Poly::from_terms(&self.ctx, self.nvars, [(qm, qc)]);
            quo = quo.add(&t);
            rem = rem.sub(&t.mul(divisor));
            if let (Some((m, _)), true) = (rem.leading_term(), true) {
                assert!(m < &rm, "inexact polynomial division (no progress)");
            }
        }
        quo
    }

    /// Formal partial derivative ∂/∂x_i (0-based); in characteristic p the
    /// exponent multiple can vanish.
    pub fn differentiate(&self, i: usize) -> Result<Poly> {
        if i >= self.nvars {
            return Err(Error::IndexOutOfRange(i));
        }
        let mut out = Poly::zero(&self.ctx, self.nvars);
        for (m, c) in &self.terms {
            let e = m.exponents()[i];
            if e == 0 {
                continue;
            }
            let k = c.mul(&self.ctx.from_i64(e as i64));
            let mut exps = m.exponents().to_vec();
            exps[i] -= 1;
            out.insert_add(Monomial(exps), k);
        }
        Ok(out)
    }

    pub fn evaluate(&self, point: &[FieldElem]) -> Result<FieldElem> {
        if point.len() != self.nvars {
            return Err(Error::ShapeMismatch(format!(
                "evaluate: {} values for {} variables",
                point.len(),
                self.nvars
            )));
        }
        for v in point {
            if v.ctx() != &self.ctx {
                return Err(Error::CtxMismatch);
            }
        }
        let mut acc = self.ctx.zero();
        for (m, c) in &self.terms {
            let mut t = c.clone();
            for (i, &e) in m.exponents().iter().enumerate() {
                if e > 0 {
                    t = t.mul(&point[i].pow(e as u64));
                }
            }
            acc = acc.add(&t);
        }
        Ok(acc)
    }

    /// Substitute a subset of variables; ambient arity is kept.
    pub fn partial_evaluate(&self, bindings: &[(usize, FieldElem)]) -> Result<Poly> {
        for (i, v) in bindings {
            if *i >= self.nvars {
                return Err(Error::IndexOutOfRange(*i));
            }
            if v.ctx() != &self.ctx {
                return Err(Error::CtxMismatch);
            }
        }
        let mut out = Poly::zero(&self.ctx, self.nvars);
        for (m, c) in &self.terms {
            let mut coeff = c.clone();
            let mut exps = m.exponents().to_vec();
            for (i, v) in bindings {
                let e = exps[*i];
                if e > 0 {
                    coeff = coeff.mul(&v.pow(e as u64));
                    exps[*i] = 0;
                }
            }
            out.insert_add(Monomial(exps), coeff);
        }
        Ok(out)
    }

    /// Full substitution x_i ↦ args[i]; the result lives in the args' arity.
    pub fn substitute(&self, args: &[Poly]) -> Result<Poly> {
        if args.len() != self.nvars {
            return Err(Error::ShapeMismatch(format!(
                "substitute: {} arguments for {} variables",
                args.len(),
                self.nvars
            )));
        }
        let out_nvars = args.first().map_or(self.nvars, |a| a.nvars());
        for a in args {
            if a.ctx() != &self.ctx {
                return Err(Error::CtxMismatch);
            }
            if a.nvars() != out_nvars {
                return Err(Error::ShapeMismatch("substitute: ragged arguments".into()));
            }
        }
        let mut out = Poly::zero(&self.ctx, out_nvars);
        for (m, c) in &self.terms {
            let mut t = Poly::constant(&self.ctx, out_nvars, c.clone());
            for (i, &e) in m.exponents().iter().enumerate() {
                for _ in 0..e {
                    t = t.mul(&args[i]);
                }
            }
            out = out.add(&t);
        }
        Ok(out)
    }

    /// Map every coefficient through a field embedding; monomials unchanged.
    pub fn embed(&self, emb: &crate::field::FieldEmbedding) -> Poly {
        Poly::from_terms(
            emb.dst(),
            self.nvars,
            self.terms.iter().map(|(m, c)| (m.clone(), emb.embed(c))),
        )
    }

    /// Sum of the total-degree-d terms.
    pub fn homogeneous_component(&self, d: u32) -> Poly {
        Poly {
            ctx: self.ctx.clone(),
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.degree() == d)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn is_homogeneous_of_degree(&self, d: u32) -> bool {
        self.terms.keys().all(|m| m.degree() == d)
    }

    /// Zero or homogeneous of degree 2.
    pub fn is_quadratic_homogeneous(&self) -> bool {
        self.is_homogeneous_of_degree(2)
    }

    /// Split a quadratic homogeneous polynomial in characteristic 2 into
    /// (square-free part, square part Σ c·x_i²). The square part has
    /// identically zero Jacobian in characteristic 2.
    pub fn square_split(&self) -> Result<(Poly, Poly)> {
        if self.ctx.characteristic() != 2 {
            return Err(Error::WrongCharacteristic {
                expected: 2,
                found: self.ctx.characteristic(),
            });
        }
        if !self.is_quadratic_homogeneous() {
            return Err(Error::NotQuadraticHomogeneous);
        }
        let mut square_free = Poly::zero(&self.ctx, self.nvars);
        let mut square = Poly::zero(&self.ctx, self.nvars);
        for (m, c) in &self.terms {
            if m.exponents().iter().any(|&e| e == 2) {
                square.insert_add(m.clone(), c.clone());
            } else {
                square_free.insert_add(m.clone(), c.clone());
            }
        }
        Ok((square_free, square))
    }

    /// Parse the CLI text grammar.
    pub fn parse(ctx: &FieldCtx, nvars: usize, text: &str) -> Result<Poly> {
        parse_poly(ctx, nvars, text)
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in self.terms.iter().rev() {
            let (neg, cabs) = if c.is_negative() {
                (true, c.neg())
            } else {
                (false, c.clone())
            };
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            first = false;
            let is_const = m.degree() == 0;
            let cs = cabs.to_string();
            let simple = cs.chars().all(|ch| ch.is_ascii_digit() || ch == '/');
            if is_const {
                if simple {
                    write!(f, "{cs}")?;
                } else {
                    write!(f, "({cs})")?;
                }
            } else if cabs.is_one() {
                write!(f, "{m}")?;
            } else if simple {
                write!(f, "{cs}*{m}")?;
            } else {
                write!(f, "({cs})*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

// ---------------------------------------------------------------------------
// Linear forms
// ---------------------------------------------------------------------------

/// A polynomial all of whose terms have total degree exactly 1 (the zero
/// polynomial qualifies).
#[derive(Clone, PartialEq, Eq)]
pub struct LinearForm(Poly);

impl LinearForm {
    pub fn new(p: Poly) -> Result<LinearForm> {
        if !p.is_homogeneous_of_degree(1) {
            return Err(Error::Parse(format!("not a linear form: {p}")));
        }
        Ok(LinearForm(p))
    }

    pub fn zero(ctx: &FieldCtx, nvars: usize) -> LinearForm {
        LinearForm(Poly::zero(ctx, nvars))
    }

    pub fn from_coeffs(ctx: &FieldCtx, coeffs: &[FieldElem]) -> LinearForm {
        let n = coeffs.len();
        LinearForm(Poly::from_terms(
            ctx,
            n,
            coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (Monomial::var(n, i), c.clone())),
        ))
    }

    pub fn coeffs(&self) -> Vec<FieldElem> {
        let ctx = self.0.ctx();
        let n = self.0.nvars();
        let mut out = vec![ctx.zero(); n];
        for (m, c) in self.0.terms() {
            let i = m.exponents().iter().position(|&e| e == 1).unwrap();
            out[i] = c.clone();
        }
        out
    }

    pub fn as_poly(&self) -> &Poly {
        &self.0
    }

    pub fn into_poly(self) -> Poly {
        self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn evaluate(&self, point: &[FieldElem]) -> Result<FieldElem> {
        self.0.evaluate(point)
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Text grammar
// ---------------------------------------------------------------------------

struct Parser<'a> {
    ctx: &'a FieldCtx,
    nvars: usize,
    src: Vec<char>,
    pos: usize,
}

fn parse_poly(ctx: &FieldCtx, nvars: usize, text: &str) -> Result<Poly> {
    let src: Vec<char> = text.chars().filter(|c| !c.is_whitespace()).collect();
    if src.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut p = Parser {
        ctx,
        nvars,
        src,
        pos: 0,
    };
    let poly = p.expression()?;
    if p.pos != p.src.len() {
        return Err(Error::Parse(format!(
            "unexpected `{}` at offset {} in `{text}`",
            p.src[p.pos], p.pos
        )));
    }
    Ok(poly)
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.src.get(self.pos).copied()
    }

    fn expression(&mut self) -> Result<Poly> {
        let mut neg = false;
        match self.peek() {
            Some('+') => {
                self.pos += 1;
            }
            Some('-') => {
                neg = true;
                self.pos += 1;
            }
            _ => {}
        }
        let mut acc = self.term()?;
        if neg {
            acc = acc.neg();
        }
        while let Some(op) = self.peek() {
            if op != '+' && op != '-' {
                break;
            }
            self.pos += 1;
            let t = self.term()?;
            acc = if op == '+' { acc.add(&t) } else { acc.sub(&t) };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.factor()?;
        while self.peek() == Some('*') {
            self.pos += 1;
            let f = self.factor()?;
            acc = acc.mul(&f);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Poly> {
        match self.peek() {
            Some('x') => {
                self.pos += 1;
                let idx = self.number_u32()? as usize;
                if idx == 0 || idx > self.nvars {
                    return Err(Error::Parse(format!(
                        "variable x{idx} out of range (1..={})",
                        self.nvars
                    )));
                }
                let mut exp = 1u32;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    exp = self.number_u32()?;
                }
                let mut e = vec![0u32; self.nvars];
                e[idx - 1] = exp;
                Ok(Poly::from_terms(
                    self.ctx,
                    self.nvars,
                    [(Monomial::from_exponents(e), self.ctx.one())],
                ))
            }
            Some('(') => {
                // parenthesized field element, e.g. (t+1)
                let close = self.src[self.pos..]
                    .iter()
                    .position(|&c| c == ')')
                    .ok_or_else(|| Error::Parse("unbalanced parenthesis".into()))?;
                let inner: String = self.src[self.pos + 1..self.pos + close].iter().collect();
                self.pos += close + 1;
                let c = self.ctx.parse_elem(&inner)?;
                Ok(Poly::constant(self.ctx, self.nvars, c))
            }
            Some(c) if c.is_ascii_digit() => {
                let num = self.digits()?;
                let mut elem = self.ctx.parse_elem(&num)?;
                if self.peek() == Some('/') {
                    self.pos += 1;
                    let den = self.ctx.parse_elem(&self.digits()?)?;
                    if den.is_zero() {
                        return Err(Error::Parse("zero denominator".into()));
                    }
                    elem = elem.div(&den);
                }
                Ok(Poly::constant(self.ctx, self.nvars, elem))
            }
            Some(c) if c == 't' && matches!(self.ctx.kind(), FieldKind::Ext { .. }) => {
                // bare generator without parentheses: accept a single t-power
                self.pos += 1;
                let mut exp = 1u32;
                if self.peek() == Some('^') {
                    self.pos += 1;
                    exp = self.number_u32()?;
                }
                let c = self.ctx.parse_elem(&format!("t^{exp}"))?;
                Ok(Poly::constant(self.ctx, self.nvars, c))
            }
            Some(c) => Err(Error::Parse(format!(
                "unexpected `{c}` at offset {}",
                self.pos
            ))),
            None => Err(Error::Parse("unexpected end of input".into())),
        }
    }

    fn digits(&mut self) -> Result<String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::Parse(format!("expected digits at offset {start}")));
        }
        Ok(self.src[start..self.pos].iter().collect())
    }

    fn number_u32(&mut self) -> Result<u32> {
        let d = self.digits()?;
        d.parse()
            .map_err(|_| Error::Parse(format!("number `{d}` too large")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    fn q() -> FieldCtx {
        make_field("Q").unwrap()
    }

    fn p(ctx: &FieldCtx, nvars: usize, s: &str) -> Poly {
        Poly::parse(ctx, nvars, s).unwrap()
    }

    #[test]
    fn differentiation() {
        let q = q();
        let f = p(&q, 4, "x1*x3 + 2*x2*x4");
        assert_eq!(f.differentiate(0).unwrap(), p(&q, 4, "x3"));
        let f2 = make_field("GF(2)").unwrap();
        let g = p(&f2, 1, "x1^2");
        assert!(g.differentiate(0).unwrap().is_zero());
        let h = p(&q, 2, "1/2*x2^2");
        assert_eq!(h.differentiate(1).unwrap(), p(&q, 2, "x2"));
        assert!(matches!(
            h.differentiate(5),
            Err(Error::IndexOutOfRange(5))
        ));
    }

    #[test]
    fn evaluation() {
        let q = q();
        let f = p(&q, 3, "x1*x3 - x2^2");
        let pt = |a: i64, b: i64, c: i64| vec![q.from_i64(a), q.from_i64(b), q.from_i64(c)];
        assert!(f.evaluate(&pt(1, 1, 1)).unwrap().is_zero());
        assert_eq!(f.evaluate(&pt(2, 1, 3)).unwrap(), q.from_i64(5));
        let g = p(&q, 3, "x1*x2 + x3");
        assert_eq!(
            g.partial_evaluate(&[(0, q.one())]).unwrap(),
            p(&q, 3, "x2 + x3")
        );
    }

    #[test]
    fn homogeneous_components() {
        let q = q();
        let f = p(&q, 2, "x1 + x1*x2");
        assert_eq!(f.homogeneous_component(2), p(&q, 2, "x1*x2"));
        assert_eq!(f.homogeneous_component(1), p(&q, 2, "x1"));
        assert_eq!(
            f,
            f.homogeneous_component(1).add(&f.homogeneous_component(2))
        );
        // scaling oracle: component(p,2)=p ⟹ p(λx) = λ²p(x)
        let h = p(&q, 2, "1/2*x1^2 + 3*x1*x2");
        assert!(h.is_quadratic_homogeneous());
        for lam in [2i64, -3, 5] {
            let l = q.from_i64(lam);
            let scaled = h
                .substitute(&[
                    Poly::var(&q, 2, 0).scale(&l),
                    Poly::var(&q, 2, 1).scale(&l),
                ])
                .unwrap();
            assert_eq!(scaled, h.scale(&l.mul(&l)));
        }
    }

    #[test]
    fn square_split_char2() {
        let f2 = make_field("GF(2)").unwrap();
        let f = p(&f2, 2, "x1^2 + x1*x2");
        let (sf, sq) = f.square_split().unwrap();
        assert_eq!(sf, p(&f2, 2, "x1*x2"));
        assert_eq!(sq, p(&f2, 2, "x1^2"));
        let g = p(&f2, 3, "x1*x2 + x2*x3");
        let (sf, sq) = g.square_split().unwrap();
        assert_eq!(sf, g);
        assert!(sq.is_zero());
        // Jacobian of a square part vanishes in characteristic 2
        for i in 0..3 {
            assert!(p(&f2, 3, "x1^2 + x3^2").square_split().unwrap().1
                .differentiate(i)
                .unwrap()
                .is_zero());
        }
        assert!(matches!(
            p(&q(), 2, "x1^2").square_split(),
            Err(Error::WrongCharacteristic { .. })
        ));
        assert!(matches!(
            p(&f2, 2, "x1^2 + x2").square_split(),
            Err(Error::NotQuadraticHomogeneous)
        ));
    }

    #[test]
    fn degree_marker() {
        let q = q();
        assert_eq!(Poly::zero(&q, 2).degree(), Degree::NegInf);
        assert!(Degree::NegInf < Degree::Finite(0));
        assert_eq!(p(&q, 2, "3").degree(), Degree::Finite(0));
        assert_eq!(p(&q, 2, "x1*x2^2").degree(), Degree::Finite(3));
    }

    #[test]
    fn grlex_ordering_and_printing() {
        let q = q();
        let f = p(&q, 3, "x3 + x1 - 2*x2^2 + x1*x2 + 1/3");
        // descending graded-lex: x1*x2 > x2^2 > x1 > x3 > const
        assert_eq!(f.to_string(), "x1*x2 - 2*x2^2 + x1 + x3 + 1/3");
        let g = p(&q, 3, "-x1 + x2");
        assert_eq!(g.to_string(), "-x1 + x2");
    }

    #[test]
    fn parse_format_roundtrip() {
        let q = q();
        for s in ["3/2*x1^2 + x2*x3 - x4", "-x1 - 1/2", "0"] {
            let f = p(&q, 4, s);
            assert_eq!(Poly::parse(&q, 4, &f.to_string()).unwrap(), f);
        }
        let f4 = make_field("GF(2,2)").unwrap();
        for s in ["(t+1)*x1*x2 + x3^2", "t*x1 + (t^1+1)*x2", "(t)*x1^2"] {
            let f = p(&f4, 3, s);
            assert_eq!(Poly::parse(&f4, 3, &f.to_string()).unwrap(), f);
        }
        assert!(Poly::parse(&q, 2, "x1**2").is_err());
        assert!(Poly::parse(&q, 2, "x0").is_err());
        assert!(Poly::parse(&q, 2, "x3").is_err());
        assert!(Poly::parse(&q, 2, "").is_err());
        assert!(Poly::parse(&q, 2, "x1 +").is_err());
    }

    #[test]
    fn exact_division() {
        let q = q();
        let a = p(&q, 2, "x1^2 - x2^2");
        let b = p(&q, 2, "x1 - x2");
        assert_eq!(a.div_exact(&b), p(&q, 2, "x1 + x2"));
        let f2 = make_field("GF(2)").unwrap();
        let a2 = p(&f2, 2, "x1^2 + x2^2");
        assert_eq!(a2.div_exact(&p(&f2, 2, "x1 + x2")), p(&f2, 2, "x1 + x2"));
    }

    #[test]
    fn linear_forms() {
        let q = q();
        let l = LinearForm::new(p(&q, 3, "2*x1 - x3")).unwrap();
        let cs = l.coeffs();
        assert_eq!(cs[0], q.from_i64(2));
        assert_eq!(cs[1], q.zero());
        assert_eq!(cs[2], q.from_i64(-1));
        assert_eq!(LinearForm::from_coeffs(&q, &cs), l);
        assert!(LinearForm::new(p(&q, 3, "x1^2")).is_err());
        assert!(LinearForm::new(p(&q, 3, "x1 + 1")).is_err());
        assert!(LinearForm::zero(&q, 3).is_zero());
    }

    #[cfg(test)]
    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn fields() -> Vec<FieldCtx> {
            vec![
                make_field("Q").unwrap(),
                make_field("GF(2)").unwrap(),
                make_field("GF(5)").unwrap(),
                make_field("GF(2,2)").unwrap(),
            ]
        }

        /// Deterministic small polynomial from integer seeds.
        fn sample(ctx: &FieldCtx, nvars: usize, seeds: &[i64], maxdeg: u32) -> Poly {
            let mut out = Poly::zero(ctx, nvars);
            for (k, &s) in seeds.iter().enumerate() {
                let mut exps = vec![0u32; nvars];
                let mut v = s.unsigned_abs() as u128 + k as u128;
                let mut total = 0;
                for e in exps.iter_mut() {
                    let d = (v % (maxdeg as u128 + 1)) as u32;
                    let d = d.min(maxdeg - total.min(maxdeg));
                    *e = d;
                    total += d;
                    v /= maxdeg as u128 + 1;
                }
                let c = match ctx.cardinality() {
                    Some(q) => ctx.element_from_index((s.unsigned_abs() as u128) % q),
                    None => ctx.from_ratio(s % 9, 1 + (s % 4).abs()),
                };
                out = out.add(&Poly::from_terms(
                    ctx,
                    nvars,
                    [(Monomial::from_exponents(exps), c)],
                ));
            }
            out
        }

        proptest! {
            #[test]
            fn ring_axioms(sa in proptest::collection::vec(-100i64..100, 3),
                           sb in proptest::collection::vec(-100i64..100, 3),
                           sc in proptest::collection::vec(-100i64..100, 3)) {
                for ctx in fields() {
                    let a = sample(&ctx, 3, &sa, 2);
                    let b = sample(&ctx, 3, &sb, 2);
                    let c = sample(&ctx, 3, &sc, 2);
                    prop_assert_eq!(a.add(&b).add(&c), a.add(&b.add(&c)));
                    prop_assert_eq!(a.mul(&b), b.mul(&a));
                    prop_assert_eq!(a.mul(&b.add(&c)), a.mul(&b).add(&a.mul(&c)));
                    prop_assert_eq!(a.mul(&b).mul(&c), a.mul(&b.mul(&c)));
                    if !b.is_zero() {
                        prop_assert_eq!(a.mul(&b).div_exact(&b), a.clone());
                    }
                }
            }

            #[test]
            fn euler_identity_quadratic(seeds in proptest::collection::vec(-100i64..100, 4)) {
                for ctx in fields() {
                    let f = sample(&ctx, 3, &seeds, 2).homogeneous_component(2);
                    let mut acc = Poly::zero(&ctx, 3);
                    for i in 0..3 {
                        acc = acc.add(&Poly::var(&ctx, 3, i).mul(&f.differentiate(i).unwrap()));
                    }
                    prop_assert_eq!(acc, f.scale(&ctx.from_i64(2)));
                }
            }

            #[test]
            fn mixed_partials_commute(seeds in proptest::collection::vec(-100i64..100, 4)) {
                for ctx in fields() {
                    let f = sample(&ctx, 3, &seeds, 3);
                    for i in 0..3 {
                        for j in 0..3 {
                            prop_assert_eq!(
                                f.differentiate(i).unwrap().differentiate(j).unwrap(),
                                f.differentiate(j).unwrap().differentiate(i).unwrap()
                            );
                        }
                    }
                }
            }

            #[test]
            fn parse_roundtrip_random(seeds in proptest::collection::vec(-100i64..100, 5)) {
                for ctx in fields() {
                    let f = sample(&ctx, 4, &seeds, 3);
                    prop_assert_eq!(Poly::parse(&ctx, 4, &f.to_string()).unwrap(), f);
                }
            }
        }
    }
}
