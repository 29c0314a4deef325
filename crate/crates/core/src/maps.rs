//! Polynomial maps and the automorphism toolkit: Jacobians and Hessians,
//! composition and linear conjugation, elementary/affine automorphisms, and
//! tame certificates with exact verification.
//!
//! Composition convention throughout: `compose(F, G)` is F∘G, i.e. F(G(x)),
//! and a certificate lists its factors left to right with the *rightmost*
//! applied first.

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem, FieldEmbedding};
use crate::matpoly::{ConstMatrix, PolyMatrix};
use crate::poly::{Degree, Poly};

// ---------------------------------------------------------------------------
// Polynomial maps
// ---------------------------------------------------------------------------

/// A list of m polynomials in n shared variables over one field context.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMap {
    ctx: FieldCtx,
    n: usize,
    comps: Vec<Poly>,
}

impl PolyMap {
    pub fn new(ctx: &FieldCtx, n: usize, comps: Vec<Poly>) -> Result<PolyMap> {
        for c in &comps {
            if c.ctx() != ctx {
                return Err(Error::CtxMismatch);
            }
            if c.nvars() != n {
                return Err(Error::ShapeMismatch(format!(
                    "component in {} variables, map declares {n}",
                    c.nvars()
                )));
            }
        }
        Ok(PolyMap {
            ctx: ctx.clone(),
            n,
            comps,
        })
    }

    pub fn parse(ctx: &FieldCtx, n: usize, comps: &[&str]) -> Result<PolyMap> {
        let comps = comps
            .iter()
            .map(|s| Poly::parse(ctx, n, s))
            .collect::<Result<Vec<_>>>()?;
        PolyMap::new(ctx, n, comps)
    }

    pub fn identity(ctx: &FieldCtx, n: usize) -> PolyMap {
        PolyMap {
            ctx: ctx.clone(),
            n,
            comps: (0..n).map(|i| Poly::var(ctx, n, i)).collect(),
        }
    }

    pub fn zero(ctx: &FieldCtx, n: usize, m: usize) -> PolyMap {
        PolyMap {
            ctx: ctx.clone(),
            n,
            comps: vec![Poly::zero(ctx, n); m],
        }
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    /// Number of source variables.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of components.
    pub fn m(&self) -> usize {
        self.comps.len()
    }

    pub fn comps(&self) -> &[Poly] {
        &self.comps
    }

    pub fn comp(&self, i: usize) -> &Poly {
        &self.comps[i]
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.m() == self.n && self.comps
            .iter()
            .enumerate()
            .all(|(i, c)| c == &Poly::var(&self.ctx, self.n, i))
    }

    /// Every component zero or homogeneous of degree 2.
    pub fn is_quadratic_homogeneous(&self) -> bool {
        self.comps.iter().all(|c| c.is_quadratic_homogeneous())
    }

    pub fn degree(&self) -> Degree {
        self.comps
            .iter()
            .map(|c| c.degree())
            .max()
            .unwrap_or(Degree::NegInf)
    }

    /// Componentwise degree-d part.
    pub fn homogeneous_component(&self, d: u32) -> PolyMap {
        PolyMap {
            ctx: self.ctx.clone(),
            n: self.n,
            comps: self
                .comps
                .iter()
                .map(|c| c.homogeneous_component(d))
                .collect(),
        }
    }

    pub fn add(&self, other: &PolyMap) -> PolyMap {
        assert_eq!((self.n, self.m()), (other.n, other.m()), "map shape mismatch");
        PolyMap {
            ctx: self.ctx.clone(),
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &PolyMap) -> PolyMap {
        assert_eq!((self.n, self.m()), (other.n, other.m()), "map shape mismatch");
        PolyMap {
            ctx: self.ctx.clone(),
            n: self.n,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn evaluate(&self, point: &[FieldElem]) -> Result<Vec<FieldElem>> {
        self.comps.iter().map(|c| c.evaluate(point)).collect()
    }

    /// x + H for a square-shaped H (m = n).
    pub fn plus_identity(&self) -> Result<PolyMap> {
        if self.m() != self.n {
            return Err(Error::NotSquareMap {
                m: self.m(),
                n: self.n,
            });
        }
        Ok(PolyMap::identity(&self.ctx, self.n).add(self))
    }

    /// Coefficientwise image under a field embedding.
    pub fn embed(&self, emb: &FieldEmbedding) -> PolyMap {
        PolyMap {
            ctx: emb.dst().clone(),
            n: self.n,
            comps: self.comps.iter().map(|c| c.embed(emb)).collect(),
        }
    }
}

impl std::fmt::Display for PolyMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

impl std::fmt::Debug for PolyMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self}")
    }
}

// ---------------------------------------------------------------------------
// Jacobian, Hessian, composition, conjugation
// ---------------------------------------------------------------------------

/// m×n matrix of partials ∂Fᵢ/∂xⱼ.
pub fn jacobian(f: &PolyMap) -> PolyMatrix {
    PolyMatrix::from_fn(f.ctx(), f.n(), f.m(), f.n(), |i, j| {
        f.comp(i).differentiate(j).unwrap()
    })
}

/// Jacobian restricted to the listed variables (columns in the given order).
pub fn jacobian_wrt(f: &PolyMap, vars: &[usize]) -> Result<PolyMatrix> {
    for &v in vars {
        if v >= f.n() {
            return Err(Error::IndexOutOfRange(v));
        }
    }
    Ok(PolyMatrix::from_fn(
        f.ctx(),
        f.n(),
        f.m(),
        vars.len(),
        |i, j| f.comp(i).differentiate(vars[j]).unwrap(),
    ))
}

/// Symmetric n×n matrix of second partials of one polynomial. For quadratic
/// f the entries are constants; in characteristic 2 the diagonal ∂²f/∂xᵢ² is
/// identically zero.
pub fn hessian(f: &Poly) -> PolyMatrix {
    let n = f.nvars();
    let firsts: Vec<Poly> = (0..n).map(|i| f.differentiate(i).unwrap()).collect();
    PolyMatrix::from_fn(f.ctx(), n, n, n, |i, j| firsts[i].differentiate(j).unwrap())
}

/// F∘G, i.e. x ↦ F(G(x)). G must produce as many values as F consumes.
pub fn compose(f: &PolyMap, g: &PolyMap) -> Result<PolyMap> {
    if g.m() != f.n() {
        return Err(Error::ShapeMismatch(format!(
            "compose: inner map yields {} values, outer expects {}",
            g.m(),
            f.n()
        )));
    }
    if f.ctx() != g.ctx() {
        return Err(Error::CtxMismatch);
    }
    let comps = f
        .comps()
        .iter()
        .map(|c| c.substitute(g.comps()))
        .collect::<Result<Vec<_>>>()?;
    PolyMap::new(g.ctx(), g.n(), comps)
}

/// S·H(T·x) for invertible constant S (m×m) and T (n×n).
pub fn conjugate(h: &PolyMap, s: &ConstMatrix, t: &ConstMatrix) -> Result<PolyMap> {
    if s.rows() != s.cols() || s.rows() != h.m() || t.rows() != t.cols() || t.rows() != h.n() {
        return Err(Error::ShapeMismatch(format!(
            "conjugate: S is {}×{}, T is {}×{}, map is {}→{}",
            s.rows(),
            s.cols(),
            t.rows(),
            t.cols(),
            h.n(),
            h.m()
        )));
    }
    if h.ctx() != s.ctx() || h.ctx() != t.ctx() {
        return Err(Error::CtxMismatch);
    }
    if !s.is_invertible() || !t.is_invertible() {
        return Err(Error::Singular);
    }
    let ctx = h.ctx().clone();
    let n = h.n();
    let tx: Vec<Poly> = (0..n)
        .map(|i| {
            (0..n).fold(Poly::zero(&ctx, n), |acc, j| {
                acc.add(&Poly::var(&ctx, n, j).scale(t.get(i, j)))
            })
        })
        .collect();
    let substituted: Vec<Poly> = h
        .comps()
        .iter()
        .map(|c| c.substitute(&tx))
        .collect::<Result<Vec<_>>>()?;
    let comps: Vec<Poly> = (0..h.m())
        .map(|i| {
            (0..h.m()).fold(Poly::zero(&ctx, n), |acc, j| {
                acc.add(&substituted[j].scale(s.get(i, j)))
            })
        })
        .collect();
    PolyMap::new(&ctx, n, comps)
}

// ---------------------------------------------------------------------------
// Elementary and affine automorphisms
// ---------------------------------------------------------------------------

/// E_{i,a}: adds a(x) — which must not involve xᵢ — to the i-th coordinate.
/// Inverse: E_{i,−a}.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ElementaryAuto {
    n: usize,
    i: usize,
    a: Poly,
}

impl ElementaryAuto {
    pub fn new(n: usize, i: usize, a: Poly) -> Result<ElementaryAuto> {
        if i >= n {
            return Err(Error::IndexOutOfRange(i));
        }
        if a.nvars() != n {
            return Err(Error::ShapeMismatch(format!(
                "elementary: polynomial in {} variables, automorphism on {n}",
                a.nvars()
            )));
        }
        if a.terms().any(|(m, _)| m.exponents()[i] > 0) {
            return Err(Error::PreconditionViolated(format!(
                "elementary: added polynomial involves x{}",
                i + 1
            )));
        }
        Ok(ElementaryAuto { n, i, a })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Target coordinate, 0-based.
    pub fn i(&self) -> usize {
        self.i
    }

    pub fn a(&self) -> &Poly {
        &self.a
    }

    pub fn as_map(&self) -> PolyMap {
        let ctx = self.a.ctx().clone();
        let comps = (0..self.n)
            .map(|k| {
                let xk = Poly::var(&ctx, self.n, k);
                if k == self.i {
                    xk.add(&self.a)
                } else {
                    xk
                }
            })
            .collect();
        PolyMap::new(&ctx, self.n, comps).unwrap()
    }

    pub fn inverse(&self) -> ElementaryAuto {
        ElementaryAuto {
            n: self.n,
            i: self.i,
            a: self.a.neg(),
        }
    }
}

/// x ↦ A·x + b with A invertible.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct AffineAuto {
    a: ConstMatrix,
    b: Vec<FieldElem>,
}

impl AffineAuto {
    pub fn new(a: ConstMatrix, b: Vec<FieldElem>) -> Result<AffineAuto> {
        if a.rows() != a.cols() || a.rows() != b.len() {
            return Err(Error::ShapeMismatch(format!(
                "affine: {}×{} matrix with offset of length {}",
                a.rows(),
                a.cols(),
                b.len()
            )));
        }
        if !a.is_invertible() {
            return Err(Error::Singular);
        }
        Ok(AffineAuto { a, b })
    }

    /// Pure linear automorphism x ↦ A·x.
    pub fn linear(a: ConstMatrix) -> Result<AffineAuto> {
        let b = vec![a.ctx().zero(); a.rows()];
        AffineAuto::new(a, b)
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn matrix(&self) -> &ConstMatrix {
        &self.a
    }

    pub fn offset(&self) -> &[FieldElem] {
        &self.b
    }

    pub fn as_map(&self) -> PolyMap {
        let ctx = self.a.ctx().clone();
        let n = self.n();
        let comps = (0..n)
            .map(|i| {
                let mut p = Poly::constant(&ctx, n, self.b[i].clone());
                for j in 0..n {
                    p = p.add(&Poly::var(&ctx, n, j).scale(self.a.get(i, j)));
                }
                p
            })
            .collect();
        PolyMap::new(&ctx, n, comps).unwrap()
    }

    pub fn inverse(&self) -> AffineAuto {
        let inv = self.a.inverse().expect("affine automorphism is invertible");
        let nb: Vec<FieldElem> = inv.mul_vec(&self.b).into_iter().map(|e| e.neg()).collect();
        AffineAuto { a: inv, b: nb }
    }
}

/// One factor of a tame certificate.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum TameFactor {
    Elem(ElementaryAuto),
    Affine(AffineAuto),
}

impl TameFactor {
    pub fn n(&self) -> usize {
        match self {
            TameFactor::Elem(e) => e.n(),
            TameFactor::Affine(a) => a.n(),
        }
    }

    pub fn as_map(&self) -> PolyMap {
        match self {
            TameFactor::Elem(e) => e.as_map(),
            TameFactor::Affine(a) => a.as_map(),
        }
    }

    pub fn inverse(&self) -> TameFactor {
        match self {
            TameFactor::Elem(e) => TameFactor::Elem(e.inverse()),
            TameFactor::Affine(a) => TameFactor::Affine(a.inverse()),
        }
    }
}

/// An ordered product of elementary and affine automorphisms of Kⁿ. The
/// factor list reads left to right as f₁ ∘ f₂ ∘ … ∘ f_k: the rightmost
/// factor is applied to the input first.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TameCertificate {
    n: usize,
    factors: Vec<TameFactor>,
}

impl TameCertificate {
    pub fn new(n: usize, factors: Vec<TameFactor>) -> Result<TameCertificate> {
        for f in &factors {
            if f.n() != n {
                return Err(Error::ShapeMismatch(format!(
                    "certificate on {n} variables contains a factor on {}",
                    f.n()
                )));
            }
        }
        Ok(TameCertificate { n, factors })
    }

    pub fn empty(n: usize) -> TameCertificate {
        TameCertificate {
            n,
            factors: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> &[TameFactor] {
        &self.factors
    }

    pub fn len(&self) -> usize {
        self.factors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    /// Append a factor on the right (applied before everything pushed so far).
    pub fn push_right(&mut self, f: TameFactor) {
        assert_eq!(f.n(), self.n, "certificate factor size mismatch");
        self.factors.push(f);
    }

    /// Append a factor on the left (applied after everything pushed so far).
    pub fn push_left(&mut self, f: TameFactor) {
        assert_eq!(f.n(), self.n, "certificate factor size mismatch");
        self.factors.insert(0, f);
    }

    /// Concatenate: self ∘ other (other applied first).
    pub fn then(&self, other: &TameCertificate) -> TameCertificate {
        assert_eq!(self.n, other.n);
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        TameCertificate {
            n: self.n,
            factors,
        }
    }

    /// Formal inverse: reversed factor order, each factor inverted.
    pub fn inverse(&self) -> TameCertificate {
        TameCertificate {
            n: self.n,
            factors: self.factors.iter().rev().map(|f| f.inverse()).collect(),
        }
    }

    /// Expand the certificate into the map it denotes.
    pub fn compose_all(&self, ctx: &FieldCtx) -> PolyMap {
        let mut acc = PolyMap::identity(ctx, self.n);
        for f in self.factors.iter().rev() {
            acc = compose(&f.as_map(), &acc).expect("certificate factors compose");
        }
        acc
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let factors: Vec<serde_json::Value> = self
            .factors
            .iter()
            .map(|f| match f {
                TameFactor::Elem(e) => serde_json::json!({
                    "kind": "elem",
                    "i": e.i() + 1,
                    "a": e.a().to_string(),
                }),
                TameFactor::Affine(a) => serde_json::json!({
                    "kind": "affine",
                    "A": (0..a.n())
                        .map(|i| {
                            (0..a.n())
                                .map(|j| a.matrix().get(i, j).to_string())
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>(),
                    "b": a.offset().iter().map(|e| e.to_string()).collect::<Vec<_>>(),
                }),
            })
            .collect();
        serde_json::json!({
            "n": self.n,
            "factors": factors,
            "order": "right-to-left",
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("certificate serializes")
    }

    /// Parse the JSON produced by [`to_json_value`]; coordinates in the JSON
    /// are 1-based like the polynomial grammar.
    pub fn from_json_value(ctx: &FieldCtx, v: &serde_json::Value) -> Result<TameCertificate> {
        let obj = v
            .as_object()
            .ok_or_else(|| Error::Parse("certificate: expected JSON object".into()))?;
        let n = obj
            .get("n")
            .and_then(|x| x.as_u64())
            .ok_or_else(|| Error::Parse("certificate: missing n".into()))? as usize;
        match obj.get("order").and_then(|x| x.as_str()) {
            Some("right-to-left") => {}
            other => {
                return Err(Error::Parse(format!(
                    "certificate: order must be \"right-to-left\", got {other:?}"
                )))
            }
        }
        let raw_factors = obj
            .get("factors")
            .and_then(|x| x.as_array())
            .ok_or_else(|| Error::Parse("certificate: missing factors".into()))?;
        let mut factors = Vec::with_capacity(raw_factors.len());
        for rf in raw_factors {
            let kind = rf
                .get("kind")
                .and_then(|x| x.as_str())
                .ok_or_else(|| Error::Parse("certificate factor: missing kind".into()))?;
            match kind {
                "elem" => {
                    let i = rf
                        .get("i")
                        .and_then(|x| x.as_u64())
                        .ok_or_else(|| Error::Parse("elem factor: missing i".into()))?
                        as usize;
                    if i == 0 {
                        return Err(Error::Parse("elem factor: i is 1-based".into()));
                    }
                    let a = rf
                        .get("a")
                        .and_then(|x| x.as_str())
                        .ok_or_else(|| Error::Parse("elem factor: missing a".into()))?;
                    let a = Poly::parse(ctx, n, a)?;
                    factors.push(TameFactor::Elem(ElementaryAuto::new(n, i - 1, a)?));
                }
                "affine" => {
                    let rows = rf
                        .get("A")
                        .and_then(|x| x.as_array())
                        .ok_or_else(|| Error::Parse("affine factor: missing A".into()))?;
                    if rows.len() != n {
                        return Err(Error::Parse("affine factor: A has wrong size".into()));
                    }
                    let mut mat = ConstMatrix::zero(ctx, n, n);
                    for (i, row) in rows.iter().enumerate() {
                        let row = row
                            .as_array()
                            .ok_or_else(|| Error::Parse("affine factor: ragged A".into()))?;
                        if row.len() != n {
                            return Err(Error::Parse("affine factor: ragged A".into()));
                        }
                        for (j, cell) in row.iter().enumerate() {
                            let s = cell
                                .as_str()
                                .ok_or_else(|| Error::Parse("affine factor: A entries are strings".into()))?;
                            mat.set(i, j, ctx.parse_elem(s)?);
                        }
                    }
                    let b = rf
                        .get("b")
                        .and_then(|x| x.as_array())
                        .ok_or_else(|| Error::Parse("affine factor: missing b".into()))?
                        .iter()
                        .map(|cell| {
                            cell.as_str()
                                .ok_or_else(|| {
                                    Error::Parse("affine factor: b entries are strings".into())
                                })
                                .and_then(|s| ctx.parse_elem(s))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    factors.push(TameFactor::Affine(AffineAuto::new(mat, b)?));
                }
                other => {
                    return Err(Error::Parse(format!(
                        "certificate factor: unknown kind `{other}`"
                    )))
                }
            }
        }
        TameCertificate::new(n, factors)
    }

    pub fn from_json_str(ctx: &FieldCtx, s: &str) -> Result<TameCertificate> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| Error::Parse(format!("certificate JSON: {e}")))?;
        TameCertificate::from_json_value(ctx, &v)
    }
}

// ---------------------------------------------------------------------------
// Certificate verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyMode {
    Exact,
    /// Characteristic 2 only: the square parts Σ cᵢxᵢ² of the quadratic
    /// components may differ; they are reported, never silently dropped.
    UpToSquarePart,
}

#[derive(Debug, Clone)]
pub struct VerifyOutcome {
    pub ok: bool,
    /// composed − target, present when verification fails.
    pub discrepancy: Option<PolyMap>,
    /// Square parts split off (composed side, target side) per component in
    /// UpToSquarePart mode.
    pub square_parts: Option<(Vec<Poly>, Vec<Poly>)>,
}

/// Expand the certificate and compare with the target map.
pub fn verify_certificate(
    cert: &TameCertificate,
    target: &PolyMap,
    mode: VerifyMode,
) -> Result<VerifyOutcome> {
    if target.m() != target.n() {
        return Err(Error::NotSquareMap {
            m: target.m(),
            n: target.n(),
        });
    }
    if cert.n() != target.n() {
        return Err(Error::ShapeMismatch(format!(
            "certificate on {} variables, map on {}",
            cert.n(),
            target.n()
        )));
    }
    let ctx = target.ctx().clone();
    let composed = cert.compose_all(&ctx);
    match mode {
        VerifyMode::Exact => {
            if composed == *target {
                Ok(VerifyOutcome {
                    ok: true,
                    discrepancy: None,
                    square_parts: None,
                })
            } else {
                Ok(VerifyOutcome {
                    ok: false,
                    discrepancy: Some(composed.sub(target)),
                    square_parts: None,
                })
            }
        }
        VerifyMode::UpToSquarePart => {
            if ctx.characteristic() != 2 {
                return Err(Error::WrongCharacteristic {
                    expected: 2,
                    found: ctx.characteristic(),
                });
            }
            let mut ok = true;
            let mut sq_composed = Vec::with_capacity(target.m());
            let mut sq_target = Vec::with_capacity(target.m());
            for i in 0..target.m() {
                let c = composed.comp(i);
                let t = target.comp(i);
                let (_, c_sq) = c.homogeneous_component(2).square_split()?;
                let (_, t_sq) = t.homogeneous_component(2).square_split()?;
                // everything except the square parts must agree exactly
                if c.sub(&c_sq) != t.sub(&t_sq) {
                    ok = false;
                }
                sq_composed.push(c_sq);
                sq_target.push(t_sq);
            }
            Ok(VerifyOutcome {
                ok,
                discrepancy: if ok {
                    None
                } else {
                    Some(composed.sub(target))
                },
                square_parts: Some((sq_composed, sq_target)),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::matpoly::rank_kx;

    fn sample_quadratic_map(
        ctx: &FieldCtx,
        n: usize,
        m: usize,
        seed: u64,
    ) -> PolyMap {
        let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(99);
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            state >> 33
        };
        let comps = (0..m)
            .map(|_| {
                let mut p = Poly::zero(ctx, n);
                for i in 0..n {
                    for j in i..n {
                        let c = match ctx.cardinality() {
                            Some(card) => ctx.element_from_index((next() as u128) % card),
                            None => ctx.from_i64((next() % 5) as i64 - 2),
                        };
                        if c.is_zero() {
                            continue;
                        }
                        let mono = Poly::var(ctx, n, i).mul(&Poly::var(ctx, n, j));
                        p = p.add(&mono.scale(&c));
                    }
                }
                p
            })
            .collect();
        PolyMap::new(ctx, n, comps).unwrap()
    }

    #[test]
    fn jacobian_of_identity() {
        let q = make_field("Q").unwrap();
        let id = PolyMap::identity(&q, 4);
        assert!(jacobian(&id)
            .evaluate(&vec![q.zero(); 4])
            .unwrap()
            .is_identity());
        assert_eq!(jacobian(&id), PolyMatrix::identity(&q, 4, 4));
    }

    #[test]
    fn jacobian_of_rank3_family() {
        let q = make_field("Q").unwrap();
        let c = 3i64;
        let comps = [
            format!("x1*x3 + {c}*x2*x4"),
            "x2*x3 - x1*x4".to_string(),
            format!("1/2*x3^2 + {c}/2*x4^2"),
            format!("1/2*x1^2 + {c}/2*x2^2"),
        ];
        let refs: Vec<&str> = comps.iter().map(|s| s.as_str()).collect();
        let h = PolyMap::parse(&q, 4, &refs).unwrap();
        let expect = PolyMatrix::parse(
            &q,
            4,
            &[
                &["x3", "3*x4", "x1", "3*x2"],
                &["-x4", "x3", "x2", "-x1"],
                &["0", "0", "x3", "3*x4"],
                &["x1", "3*x2", "0", "0"],
            ],
        )
        .unwrap();
        assert_eq!(jacobian(&h), expect);
        // restriction to a variable subset picks those columns
        let sub = jacobian_wrt(&h, &[0, 2]).unwrap();
        assert_eq!(sub.cols(), 2);
        assert_eq!(sub.get(0, 1), expect.get(0, 2));
    }

    #[test]
    fn chain_rule_holds() {
        for spec in ["Q", "GF(5)", "GF(2)"] {
            let ctx = make_field(spec).unwrap();
            for seed in 0..8u64 {
                let f = sample_quadratic_map(&ctx, 3, 3, seed);
                let g = sample_quadratic_map(&ctx, 3, 3, seed + 50);
                let fg = compose(&f, &g).unwrap();
                let jf_at_g = jacobian(&f).substitute(g.comps()).unwrap();
                let chain = jf_at_g.mul(&jacobian(&g));
                assert_eq!(jacobian(&fg), chain, "{spec} seed {seed}");
            }
        }
    }

    #[test]
    fn euler_identity_for_quadratic_maps() {
        for spec in ["Q", "GF(3)", "GF(2)"] {
            let ctx = make_field(spec).unwrap();
            for seed in 0..8u64 {
                let h = sample_quadratic_map(&ctx, 4, 3, seed);
                let x: Vec<Poly> = (0..4).map(|i| Poly::var(&ctx, 4, i)).collect();
                let jx = jacobian(&h).mul_vec(&x);
                let two = ctx.from_i64(2);
                for (i, entry) in jx.iter().enumerate() {
                    assert_eq!(entry, &h.comp(i).scale(&two), "{spec} seed {seed}");
                }
            }
        }
    }

    #[test]
    fn hessian_examples() {
        let f2 = make_field("GF(2)").unwrap();
        let h1 = hessian(&Poly::parse(&f2, 2, "x1*x2").unwrap());
        assert_eq!(
            h1,
            PolyMatrix::parse(&f2, 2, &[&["0", "1"], &["1", "0"]]).unwrap()
        );
        let h2 = hessian(&Poly::parse(&f2, 2, "x1^2").unwrap());
        assert!(h2.is_zero());
        let q = make_field("Q").unwrap();
        let h3 = hessian(&Poly::parse(&q, 2, "1/2*x1^2 + 1/2*x2^2").unwrap());
        assert_eq!(h3, PolyMatrix::identity(&q, 2, 2));
        // symmetry on a general quadratic
        let h4 = hessian(&Poly::parse(&q, 3, "x1*x2 + 3*x2*x3 + x3^2").unwrap());
        assert_eq!(h4, h4.transpose());
    }

    #[test]
    fn compose_with_identity_and_associativity() {
        let q = make_field("Q").unwrap();
        let f = sample_quadratic_map(&q, 3, 3, 7);
        let id = PolyMap::identity(&q, 3);
        assert_eq!(compose(&f, &id).unwrap(), f);
        assert_eq!(compose(&id, &f).unwrap(), f);
        for seed in 0..5u64 {
            let a = sample_quadratic_map(&q, 2, 2, seed);
            let b = sample_quadratic_map(&q, 2, 2, seed + 9);
            let c = sample_quadratic_map(&q, 2, 2, seed + 21);
            let left = compose(&compose(&a, &b).unwrap(), &c).unwrap();
            let right = compose(&a, &compose(&b, &c).unwrap()).unwrap();
            assert_eq!(left, right, "seed {seed}");
        }
    }

    #[test]
    fn elementary_composition_example() {
        let q = make_field("Q").unwrap();
        let e2 = ElementaryAuto::new(5, 1, Poly::parse(&q, 5, "x1*x4 - x3*x5").unwrap()).unwrap();
        let e3 = ElementaryAuto::new(5, 2, Poly::parse(&q, 5, "x2*x4").unwrap()).unwrap();
        let e1 = ElementaryAuto::new(5, 0, Poly::parse(&q, 5, "x2*x5").unwrap()).unwrap();
        let total = compose(
            &e2.as_map(),
            &compose(&e3.as_map(), &e1.as_map()).unwrap(),
        )
        .unwrap();
        let expect = PolyMap::parse(
            &q,
            5,
            &[
                "x1 + x2*x5",
                "x2 + x1*x4 - x3*x5",
                "x3 + x2*x4",
                "x4",
                "x5",
            ],
        )
        .unwrap();
        assert_eq!(total, expect);
    }

    #[test]
    fn conjugate_basics() {
        let q = make_field("Q").unwrap();
        let h = sample_quadratic_map(&q, 3, 3, 5);
        let id = ConstMatrix::identity(&q, 3);
        assert_eq!(conjugate(&h, &id, &id).unwrap(), h);
        // jacobian(S·H(Tx)) = S·JH(Tx)·T
        let s = ConstMatrix::from_i64(&q, vec![vec![1, 1, 0], vec![0, 1, 0], vec![2, 0, 1]]);
        let t = ConstMatrix::from_i64(&q, vec![vec![1, 0, 2], vec![0, 1, 0], vec![0, 0, 1]]);
        let conj = conjugate(&h, &s, &t).unwrap();
        let tx: Vec<Poly> = (0..3)
            .map(|i| {
                (0..3).fold(Poly::zero(&q, 3), |acc, j| {
                    acc.add(&Poly::var(&q, 3, j).scale(t.get(i, j)))
                })
            })
            .collect();
        let expect = jacobian(&h)
            .substitute(&tx)
            .unwrap()
            .mul_const_left(&s)
            .mul_const_right(&t);
        assert_eq!(jacobian(&conj), expect);
        assert_eq!(rank_kx(&jacobian(&conj)), rank_kx(&jacobian(&h)));
        // singular S rejected
        let sing = ConstMatrix::from_i64(&q, vec![vec![1, 1, 0], vec![1, 1, 0], vec![0, 0, 1]]);
        assert!(matches!(
            conjugate(&h, &sing, &id),
            Err(Error::Singular)
        ));
    }

    #[test]
    fn elementary_invariants() {
        let q = make_field("Q").unwrap();
        // adding a polynomial that involves the target variable is rejected
        assert!(matches!(
            ElementaryAuto::new(3, 0, Poly::parse(&q, 3, "x1*x2").unwrap()),
            Err(Error::PreconditionViolated(_))
        ));
        let e = ElementaryAuto::new(3, 1, Poly::parse(&q, 3, "x1^2 - x3").unwrap()).unwrap();
        let round = compose(&e.as_map(), &e.inverse().as_map()).unwrap();
        assert!(round.is_identity());
    }

    #[test]
    fn certificate_verifies_paper_compositions() {
        // 6-factor shape with the three trivial factors omitted (u = 0)
        let q = make_field("Q").unwrap();
        let cert = TameCertificate::new(
            5,
            vec![
                TameFactor::Elem(
                    ElementaryAuto::new(5, 1, Poly::parse(&q, 5, "x1*x4 - x3*x5").unwrap())
                        .unwrap(),
                ),
                TameFactor::Elem(
                    ElementaryAuto::new(5, 2, Poly::parse(&q, 5, "x2*x4").unwrap()).unwrap(),
                ),
                TameFactor::Elem(
                    ElementaryAuto::new(5, 0, Poly::parse(&q, 5, "x2*x5").unwrap()).unwrap(),
                ),
            ],
        )
        .unwrap();
        let target = PolyMap::parse(
            &q,
            5,
            &[
                "x1 + x2*x5",
                "x2 + x1*x4 - x3*x5",
                "x3 + x2*x4",
                "x4",
                "x5",
            ],
        )
        .unwrap();
        let out = verify_certificate(&cert, &target, VerifyMode::Exact).unwrap();
        assert!(out.ok);
        assert!(out.discrepancy.is_none());

        // 4-factor certificate over GF(2)
        let f2 = make_field("GF(2)").unwrap();
        let cert2 = TameCertificate::new(
            6,
            vec![
                TameFactor::Elem(
                    ElementaryAuto::new(6, 3, Poly::parse(&f2, 6, "x5*x6").unwrap()).unwrap(),
                ),
                TameFactor::Elem(
                    ElementaryAuto::new(6, 1, Poly::parse(&f2, 6, "x1*x5 - x3*x6").unwrap())
                        .unwrap(),
                ),
                TameFactor::Elem(
                    ElementaryAuto::new(6, 0, Poly::parse(&f2, 6, "x2*x6").unwrap()).unwrap(),
                ),
                TameFactor::Elem(
                    ElementaryAuto::new(6, 2, Poly::parse(&f2, 6, "x2*x5").unwrap()).unwrap(),
                ),
            ],
        )
        .unwrap();
        let target2 = PolyMap::parse(
            &f2,
            6,
            &[
                "x1 + x2*x6",
                "x2 + x1*x5 - x3*x6",
                "x3 + x2*x5",
                "x4 + x5*x6",
                "x5",
                "x6",
            ],
        )
        .unwrap();
        let out2 = verify_certificate(&cert2, &target2, VerifyMode::Exact).unwrap();
        assert!(out2.ok);
    }

    #[test]
    fn empty_certificate_is_identity() {
        let q = make_field("Q").unwrap();
        let cert = TameCertificate::empty(3);
        let out = verify_certificate(&cert, &PolyMap::identity(&q, 3), VerifyMode::Exact).unwrap();
        assert!(out.ok);
        let not_id = PolyMap::parse(&q, 3, &["x1 + x2^2", "x2", "x3"]).unwrap();
        let bad = verify_certificate(&cert, &not_id, VerifyMode::Exact).unwrap();
        assert!(!bad.ok);
        let diff = bad.discrepancy.unwrap();
        assert_eq!(diff.comp(0), &Poly::parse(&q, 3, "-x2^2").unwrap());
    }

    #[test]
    fn square_part_mode() {
        let f2 = make_field("GF(2)").unwrap();
        // target has an extra square term x2² on the first coordinate
        let cert = TameCertificate::new(
            2,
            vec![TameFactor::Elem(
                ElementaryAuto::new(2, 0, Poly::parse(&f2, 2, "x2^2").unwrap()).unwrap(),
            )],
        )
        .unwrap();
        let plain = PolyMap::identity(&f2, 2);
        let exact = verify_certificate(&cert, &plain, VerifyMode::Exact).unwrap();
        assert!(!exact.ok);
        let relaxed = verify_certificate(&cert, &plain, VerifyMode::UpToSquarePart).unwrap();
        assert!(relaxed.ok);
        let (sq_c, sq_t) = relaxed.square_parts.unwrap();
        assert_eq!(sq_c[0], Poly::parse(&f2, 2, "x2^2").unwrap());
        assert!(sq_t[0].is_zero());
        // a square-free mismatch still fails in relaxed mode
        let off = PolyMap::parse(&f2, 2, &["x1 + x1*x2", "x2"]).unwrap();
        let still_bad = verify_certificate(&cert, &off, VerifyMode::UpToSquarePart).unwrap();
        assert!(!still_bad.ok);
        // relaxed mode is characteristic-2 only
        let q = make_field("Q").unwrap();
        assert!(matches!(
            verify_certificate(
                &TameCertificate::empty(2),
                &PolyMap::identity(&q, 2),
                VerifyMode::UpToSquarePart
            ),
            Err(Error::WrongCharacteristic { .. })
        ));
    }

    #[test]
    fn certificate_json_roundtrip() {
        let f3 = make_field("GF(3)").unwrap();
        let mut cert = TameCertificate::empty(3);
        cert.push_right(TameFactor::Elem(
            ElementaryAuto::new(3, 2, Poly::parse(&f3, 3, "x1*x2 + 2*x1^2").unwrap()).unwrap(),
        ));
        cert.push_right(TameFactor::Affine(
            AffineAuto::new(
                ConstMatrix::from_i64(&f3, vec![vec![1, 1, 0], vec![0, 1, 0], vec![0, 0, 2]]),
                vec![f3.from_i64(1), f3.zero(), f3.from_i64(2)],
            )
            .unwrap(),
        ));
        let json = cert.to_json_string();
        assert!(json.contains("right-to-left"));
        let back = TameCertificate::from_json_str(&f3, &json).unwrap();
        assert_eq!(back, cert);
        assert_eq!(
            back.compose_all(&f3),
            cert.compose_all(&f3)
        );
    }

    #[test]
    fn certificate_inverse_cancels() {
        let q = make_field("Q").unwrap();
        let mut cert = TameCertificate::empty(3);
        cert.push_right(TameFactor::Elem(
            ElementaryAuto::new(3, 0, Poly::parse(&q, 3, "x2*x3").unwrap()).unwrap(),
        ));
        cert.push_right(TameFactor::Affine(
            AffineAuto::new(
                ConstMatrix::from_i64(&q, vec![vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 1]]),
                vec![q.zero(); 3],
            )
            .unwrap(),
        ));
        let round = cert.then(&cert.inverse());
        assert!(round.compose_all(&q).is_identity());
    }

    #[test]
    fn embedded_maps_keep_constant_kernels() {
        use crate::field::extend;
        use crate::matpoly::{constant_kernel, KernelSide};
        let f2 = make_field("GF(2)").unwrap();
        let h = PolyMap::parse(&f2, 3, &["x1*x2", "x1*x2 + x2*x3", "x2*x3"]).unwrap();
        let j = jacobian(&h);
        let basis = constant_kernel(&j, KernelSide::Left);
        assert!(!basis.is_empty());
        let emb = extend(&f2, 2).unwrap();
        let j4 = PolyMatrix::from_fn(emb.dst(), 3, j.rows(), j.cols(), |r, c| {
            j.get(r, c).embed(&emb)
        });
        for u in &basis {
            let lifted: Vec<FieldElem> = u.iter().map(|e| emb.embed(e)).collect();
            // u·J = 0 must persist after embedding
            for col in 0..j4.cols() {
                let mut acc = Poly::zero(emb.dst(), 3);
                for row in 0..j4.rows() {
                    acc = acc.add(&j4.get(row, col).scale(&lifted[row]));
                }
                assert!(acc.is_zero());
            }
        }
    }
}
