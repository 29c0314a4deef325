//! Keller maps x + H and their constructive tame factorization at Jacobian
//! rank ≤ 3.
//!
//! The entry point is [`tame_decompose`]: it recognizes the Keller property,
//! triangularizes the nilpotent Jacobian by a constant similarity whenever
//! one exists, and otherwise routes rank-3 maps through the six-case
//! classifier into one of two constructive normal forms that factor into
//! elementary automorphisms.  Every certificate is re-verified by exact
//! composition before it is returned.  In characteristic 2 the split-off
//! square part Σ cᵢxᵢ² is reported separately, never silently merged.

use serde_json::{json, Value};

use crate::classify::{classify_rk3, CaseReport};
use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::maps::{
    conjugate, hessian, jacobian, verify_certificate, AffineAuto, ElementaryAuto, PolyMap,
    TameCertificate, TameFactor, VerifyMode,
};
use crate::matpoly::{
    constant_kernel, det, is_nilpotent, kernel_kx, rank_kx, symmetric_reduce, ConstMatrix,
    KernelSide, PolyMatrix,
};
use crate::poly::{Degree, LinearForm, Monomial, Poly};

// ---------------------------------------------------------------------------
// Small helpers
// ---------------------------------------------------------------------------

fn mono_pair(n: usize, i: usize, j: usize) -> Monomial {
    let mut e = vec![0u32; n];
    e[i] += 1;
    e[j] += 1;
    Monomial::from_exponents(e)
}

fn coeff_pair(p: &Poly, i: usize, j: usize) -> FieldElem {
    p.coefficient(&mono_pair(p.nvars(), i, j))
}

fn pair_poly(ctx: &FieldCtx, n: usize, i: usize, j: usize) -> Poly {
    Poly::var(ctx, n, i).mul(&Poly::var(ctx, n, j))
}

/// Square-free part of a quadratic homogeneous component: in characteristic 2
/// the xᵢ²-terms are split off (they carry no Jacobian information there); in
/// any other characteristic the component is returned unchanged.
fn sqfree_part(p: &Poly) -> Result<Poly> {
    if p.ctx().characteristic() == 2 {
        Ok(p.square_split()?.0)
    } else {
        Ok(p.clone())
    }
}

fn supported_within(p: &Poly, allowed: impl Fn(usize) -> bool) -> bool {
    p.terms().all(|(m, _)| {
        m.exponents()
            .iter()
            .enumerate()
            .all(|(v, &e)| e == 0 || allowed(v))
    })
}

/// Pure matrix similarity t⁻¹·m·t (no variable substitution).
fn conj_sim(m: &PolyMatrix, t: &ConstMatrix) -> Result<PolyMatrix> {
    Ok(m.mul_const_left(&t.inverse()?).mul_const_right(t))
}

fn diag_matrix(ctx: &FieldCtx, entries: &[FieldElem]) -> ConstMatrix {
    ConstMatrix::from_fn(ctx, entries.len(), entries.len(), |i, j| {
        if i == j {
            entries[i].clone()
        } else {
            ctx.zero()
        }
    })
}

fn inverse_perm(perm: &[usize]) -> Vec<usize> {
    let mut inv = vec![0usize; perm.len()];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    inv
}

fn is_identity_matrix(m: &ConstMatrix) -> bool {
    m.rows() == m.cols() && *m == ConstMatrix::identity(m.ctx(), m.rows())
}

/// Entries of a constant polynomial matrix as field elements.
fn const_entries(m: &PolyMatrix) -> Result<ConstMatrix> {
    let one = Monomial::one(m.get(0, 0).nvars());
    let mut out = ConstMatrix::zero(m.ctx(), m.rows(), m.cols());
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            let p = m.get(i, j);
            match p.degree() {
                Degree::NegInf | Degree::Finite(0) => out.set(i, j, p.coefficient(&one)),
                _ => {
                    return Err(Error::ContractViolation(
                        "expected a constant matrix entry".into(),
                    ))
                }
            }
        }
    }
    Ok(out)
}

fn cv(msg: impl Into<String>) -> Error {
    Error::ContractViolation(msg.into())
}

// ---------------------------------------------------------------------------
// Keller property
// ---------------------------------------------------------------------------

/// Exact Keller test: the Jacobian determinant is a nonzero constant.
pub fn is_keller(f: &PolyMap) -> Result<bool> {
    if f.m() != f.n() {
        return Err(Error::NotSquareMap {
            m: f.m(),
            n: f.n(),
        });
    }
    let d = det(&jacobian(f))?;
    Ok(matches!(d.degree(), Degree::Finite(0)))
}

// ---------------------------------------------------------------------------
// Constant triangularization of nilpotent polynomial matrices
// ---------------------------------------------------------------------------

/// Outcome of normalizing a nilpotent Jacobian block by a constant
/// similarity.
#[derive(Debug, Clone)]
pub enum TriangularizationResult {
    /// T⁻¹·N·T is strictly lower triangular after reordering the coordinates
    /// by `permutation`: entry (permutation[i], permutation[j]) vanishes for
    /// every j ≥ i.
    Triangular {
        t: ConstMatrix,
        permutation: Vec<usize>,
    },
    /// The non-triangularizable 3×3 normal form
    /// T⁻¹·N·T = [[0, f, 0], [b, 0, f], [0, −b, 0]] with `f`, `b` independent
    /// linear forms in the variables past the third.
    SpecialFB {
        t: ConstMatrix,
        f: LinearForm,
        b: LinearForm,
    },
}

/// Greedy kernel peeling: repeatedly splits off a coordinate that carries a
/// constant right kernel vector (goes to the back of the order) or a constant
/// left kernel vector (goes to the front).  A matrix similar over K to a
/// strictly triangular one never gets stuck: quotienting by a constant kernel
/// vector preserves that property, so some constant kernel must exist at
/// every stage.
fn greedy_triangularize(m: &PolyMatrix) -> Result<(ConstMatrix, Vec<usize>)> {
    let n = m.rows();
    let ctx = m.ctx().clone();
    let mut cur = m.clone();
    let mut t = ConstMatrix::identity(&ctx, n);
    let mut active: Vec<usize> = (0..n).collect();
    let mut front: Vec<usize> = Vec::new();
    let mut back_rev: Vec<usize> = Vec::new();

    while !active.is_empty() {
        let sub = cur.submatrix(&active, &active);
        let right = constant_kernel(&sub, KernelSide::Right);
        let left;
        let (w, is_right) = if let Some(w) = right.first() {
            (w, true)
        } else {
            left = constant_kernel(&sub, KernelSide::Left);
            if let Some(w) = left.first() {
                (w, false)
            } else {
                return Err(Error::TriangularizationStuck(format!(
                    "no constant kernel on coordinates {:?}; residual block:\n{}",
                    active.iter().map(|i| i + 1).collect::<Vec<_>>(),
                    sub
                )));
            }
        };
        let pl = w
            .iter()
            .rposition(|c| !c.is_zero())
            .expect("kernel basis vector is nonzero");
        let p = active[pl];
        let needs_update = w.iter().enumerate().any(|(k, c)| k != pl && !c.is_zero());
        if needs_update {
            // Basis change supported on the active coordinates only; column p
            // (right) or row p (left) carries the scattered kernel vector.
            let mut u = ConstMatrix::identity(&ctx, n);
            if is_right {
                u.set(p, p, w[pl].clone());
                for (k, c) in w.iter().enumerate() {
                    if k != pl {
                        u.set(active[k], p, c.clone());
                    }
                }
                let uinv = u.inverse()?;
                cur = cur.mul_const_left(&uinv).mul_const_right(&u);
                t = t.mul(&u);
            } else {
                // u plays the role of V⁻¹ here.
                u.set(p, p, w[pl].clone());
                for (k, c) in w.iter().enumerate() {
                    if k != pl {
                        u.set(p, active[k], c.clone());
                    }
                }
                let v = u.inverse()?;
                cur = cur.mul_const_left(&u).mul_const_right(&v);
                t = t.mul(&v);
            }
        }
        active.remove(pl);
        if is_right {
            back_rev.push(p);
        } else {
            front.push(p);
        }
    }

    let mut permutation = front;
    permutation.extend(back_rev.iter().rev());
    let check = conj_sim(m, &t)?;
    for i in 0..n {
        for j in i..n {
            if !check.get(permutation[i], permutation[j]).is_zero() {
                return Err(cv(format!(
                    "triangularization lost strictness at reordered entry ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    Ok((t, permutation))
}

/// Constant similarity bringing a nilpotent polynomial matrix to strictly
/// triangular shape, when one exists.
pub fn triangularize_nilpotent(n_mat: &PolyMatrix) -> Result<TriangularizationResult> {
    if n_mat.rows() != n_mat.cols() {
        return Err(Error::NotSquare {
            rows: n_mat.rows(),
            cols: n_mat.cols(),
        });
    }
    let (t, permutation) = greedy_triangularize(n_mat)?;
    Ok(TriangularizationResult::Triangular { t, permutation })
}

// ---------------------------------------------------------------------------
// Normal form for maps with three nonzero Jacobian rows
// ---------------------------------------------------------------------------

/// Normalize the leading 3×3 Jacobian block of a quadratic homogeneous map
/// whose Jacobian is nonzero only in the first three rows.  Either the block
/// triangularizes over K, or it is brought to the special non-triangularizable
/// form recorded in [`TriangularizationResult::SpecialFB`].
pub fn lem3_normal_form(h: &PolyMap) -> Result<TriangularizationResult> {
    if !h.is_quadratic_homogeneous() {
        return Err(Error::PreconditionViolated(
            "map is not quadratic homogeneous".into(),
        ));
    }
    if h.m() < 3 {
        return Err(Error::PreconditionViolated(
            "need at least three components".into(),
        ));
    }
    if h.n() < 3 {
        return Err(Error::PreconditionViolated(
            "need at least three variables".into(),
        ));
    }
    let j = jacobian(h);
    for i in 3..h.m() {
        for c in 0..h.n() {
            if !j.get(i, c).is_zero() {
                return Err(Error::PreconditionViolated(format!(
                    "Jacobian row {} is nonzero",
                    i + 1
                )));
            }
        }
    }
    let n3 = j.submatrix(&[0, 1, 2], &[0, 1, 2]);
    if !is_nilpotent(&n3)? {
        return Err(Error::PreconditionViolated(
            "leading 3×3 Jacobian block is not nilpotent".into(),
        ));
    }
    match greedy_triangularize(&n3) {
        Ok((t, permutation)) => Ok(TriangularizationResult::Triangular { t, permutation }),
        Err(Error::TriangularizationStuck(_)) => special_fb(&n3),
        Err(e) => Err(e),
    }
}

/// Rational construction of the special frame: solves for the 2-dimensional
/// space of pairs (v, ℓ) with N·v = ℓ·u₂, where u₂ spans the annihilator of
/// the coefficient span of the left K(x)-kernel of N, then rescales one frame
/// column so both off-diagonal pairs of the conjugated matrix agree.
fn special_fb(n3: &PolyMatrix) -> Result<TriangularizationResult> {
    let ctx = n3.ctx().clone();
    let nvars = n3.get(0, 0).nvars();
    if rank_kx(n3) != 2 {
        return Err(cv(format!(
            "non-triangularizable 3×3 block must have rank 2 over K(x), found {}",
            rank_kx(n3)
        )));
    }
    let lk = kernel_kx(&n3.transpose());
    if lk.len() != 1 {
        return Err(cv("left kernel over K(x) is not one-dimensional"));
    }
    let l = &lk[0];

    // Coefficient span of the left kernel vector; its annihilator gives u₂.
    let mut support: Vec<Monomial> = Vec::new();
    for p in l {
        for (m, _) in p.terms() {
            if !support.contains(m) {
                support.push(m.clone());
            }
        }
    }
    let span_rows: Vec<Vec<FieldElem>> = support
        .iter()
        .map(|m| l.iter().map(|p| p.coefficient(m)).collect())
        .collect();
    let span = ConstMatrix::from_rows(&ctx, span_rows);
    let ann = span.kernel();
    if ann.len() != 1 {
        return Err(cv(format!(
            "coefficient span of the left kernel has dimension {}, expected 2",
            3 - ann.len()
        )));
    }
    let u2 = &ann[0];

    // Linear system over K for (v, ℓ) ∈ K³ × Kⁿ with N·v = (Σ ℓⱼxⱼ)·u₂.
    let mut rows: Vec<Vec<FieldElem>> = Vec::new();
    for i in 0..3 {
        for var in 0..nvars {
            let xv = Monomial::var(nvars, var);
            let mut row = vec![ctx.zero(); 3 + nvars];
            for (k, cell) in row.iter_mut().enumerate().take(3) {
                *cell = n3.get(i, k).coefficient(&xv);
            }
            row[3 + var] = u2[i].neg();
            rows.push(row);
        }
    }
    let sols = ConstMatrix::from_rows(&ctx, rows).kernel();
    if sols.len() != 2 {
        return Err(cv(format!(
            "frame system has solution dimension {}, expected 2",
            sols.len()
        )));
    }
    let v1: Vec<FieldElem> = sols[0][..3].to_vec();
    let v2: Vec<FieldElem> = sols[1][..3].to_vec();

    let u0 = ConstMatrix::from_fn(&ctx, 3, 3, |i, j| match j {
        0 => v1[i].clone(),
        1 => u2[i].clone(),
        _ => v2[i].clone(),
    });
    if !u0.is_invertible() {
        return Err(cv("frame columns are dependent"));
    }
    let m = conj_sim(n3, &u0)?;
    for (i, j) in [(0, 0), (0, 2), (2, 0), (2, 2), (1, 1)] {
        if !m.get(i, j).is_zero() {
            return Err(cv(format!(
                "frame conjugate has unexpected entry at ({}, {})",
                i + 1,
                j + 1
            )));
        }
    }
    let w1 = m.get(0, 1).clone();
    let w3 = m.get(2, 1).clone();
    let l1 = m.get(1, 0).clone();
    let l2 = m.get(1, 2).clone();
    if w1.is_zero() || w3.is_zero() || l1.is_zero() || l2.is_zero() {
        return Err(cv("frame conjugate has a vanishing coupling entry"));
    }

    // w1 must be a constant multiple of l2 (and then w3 of −l1 automatically).
    let (lead, c) = w1.leading_term().expect("nonzero entry");
    let denom = l2.coefficient(lead);
    if denom.is_zero() {
        return Err(cv("coupling entries are not proportional"));
    }
    let rho = c.div(&denom);
    if w1 != l2.scale(&rho) || w3 != l1.scale(&rho).neg() {
        return Err(cv("coupling entries are not proportional"));
    }

    let u = u0.mul(&diag_matrix(&ctx, &[rho.clone(), ctx.one(), ctx.one()]));
    let f = l2;
    let b = l1.scale(&rho);

    // Final shape check: U⁻¹·N·U = [[0, f, 0], [b, 0, f], [0, −b, 0]].
    let mfin = conj_sim(n3, &u)?;
    let zero = Poly::zero(&ctx, nvars);
    let target = [
        [zero.clone(), f.clone(), zero.clone()],
        [b.clone(), zero.clone(), f.clone()],
        [zero.clone(), b.neg(), zero.clone()],
    ];
    for (i, row) in target.iter().enumerate() {
        for (j, want) in row.iter().enumerate() {
            if mfin.get(i, j) != want {
                return Err(cv("frame conjugate missed the special shape"));
            }
        }
    }
    if !supported_within(&f, |v| v >= 3) || !supported_within(&b, |v| v >= 3) {
        return Err(cv(
            "special-form entries involve the first three variables",
        ));
    }
    let fcoef = LinearForm::new(f)?;
    let bcoef = LinearForm::new(b)?;
    // Independence of f and b.
    let fc = fcoef.coeffs();
    let bc = bcoef.coeffs();
    let dep = ConstMatrix::from_rows(&ctx, vec![fc, bc]);
    if dep.kernel().len() + 2 != dep.cols() + 1 && dep.rank() != 2 {
        return Err(cv("special-form entries are dependent"));
    }
    if dep.rank() != 2 {
        return Err(cv("special-form entries are dependent"));
    }
    Ok(TriangularizationResult::SpecialFB {
        t: u,
        f: fcoef,
        b: bcoef,
    })
}

// ---------------------------------------------------------------------------
// Principal-minor normal form
// ---------------------------------------------------------------------------

/// Nonzero principal minors of the normalized Jacobian, with the pairing
/// between determinant-negated partners.  Coordinate sets are 1-based and
/// sorted by (size, indices).
#[derive(Debug, Clone, PartialEq)]
pub struct MinorReport {
    pub nonzero: Vec<(Vec<usize>, Poly)>,
    /// Positions into `nonzero`: each unordered partner pair listed once.
    pub pairs: Vec<(usize, usize)>,
}

impl MinorReport {
    pub fn is_empty(&self) -> bool {
        self.nonzero.is_empty()
    }
}

fn position_k(j: &PolyMatrix, char2: bool) -> Option<usize> {
    let mut k2 = true;
    let mut k3 = true;
    for i in 0..j.rows() {
        for c in 0..j.cols() {
            if j.get(i, c).is_zero() || i == 0 {
                continue;
            }
            if c > 1 {
                k2 = false;
            }
            if c > 2 {
                k3 = false;
            }
        }
    }
    if k2 {
        Some(2)
    } else if k3 && char2 {
        Some(3)
    } else {
        None
    }
}

fn perm_diag_shape(m: &ConstMatrix) -> bool {
    for i in 0..m.rows() {
        if (0..m.cols()).filter(|&j| !m.get(i, j).is_zero()).count() > 1 {
            return false;
        }
    }
    for j in 0..m.cols() {
        if (0..m.rows()).filter(|&i| !m.get(i, j).is_zero()).count() > 1 {
            return false;
        }
    }
    true
}

fn leading_minors_zero(j: &PolyMatrix, k: usize) -> Result<bool> {
    let idx: Vec<usize> = (0..k).collect();
    for mask in 1u32..(1 << k) {
        let sel: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| mask & (1 << i) != 0)
            .collect();
        if !det(&j.submatrix(&sel, &sel))?.is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Normalize a quadratic homogeneous map whose nilpotent Jacobian is nonzero
/// only in the first row and the first two columns (or the first three
/// columns in characteristic 2): the returned T keeps that support shape,
/// makes the Hessian of the leading part of the first component a permutation
/// times a diagonal, and zeroes every principal minor of the leading block.
/// The report enumerates the nonzero principal minors of the full normalized
/// Jacobian and checks that they come in determinant-negated pairs of size 2
/// containing the first coordinate, with determinants divisible by x₂x₃.
pub fn principal_minor_normalize(h: &PolyMap) -> Result<(ConstMatrix, MinorReport)> {
    let ctx = h.ctx().clone();
    let n = h.n();
    if h.m() != n {
        return Err(Error::PreconditionViolated(format!(
            "map must be square, got {} components in {} variables",
            h.m(),
            n
        )));
    }
    if !h.is_quadratic_homogeneous() {
        return Err(Error::PreconditionViolated(
            "map is not quadratic homogeneous".into(),
        ));
    }
    let j0 = jacobian(h);
    if !is_nilpotent(&j0)? {
        return Err(Error::PreconditionViolated(
            "Jacobian is not nilpotent".into(),
        ));
    }
    let char2 = ctx.characteristic() == 2;
    let Some(k) = position_k(&j0, char2) else {
        return Err(Error::PreconditionViolated(
            "Jacobian support is not confined to the first row and leading columns".into(),
        ));
    };
    let k = k.min(n);

    let mut t_total = ConstMatrix::identity(&ctx, n);
    let mut cur = h.clone();
    let mut settled = false;
    for _ in 0..3 {
        // (b): Hessian of the leading part of the first component.
        let lead = cur.comp(0).partial_evaluate(&[(0, ctx.zero())])?;
        let hess = const_entries(&hessian(&lead))?;
        let idx: Vec<usize> = (1..n).collect();
        let sub = hess.submatrix(&idx, &idx);
        if !perm_diag_shape(&sub) {
            let red = symmetric_reduce(&sub)?;
            let one = ConstMatrix::identity(&ctx, 1);
            let tstep = ConstMatrix::block_diag(&ctx, &[&one, &red.t]);
            t_total = t_total.mul(&tstep);
            cur = conjugate(&cur, &tstep.inverse()?, &tstep)?;
        }
        let jc = jacobian(&cur);
        if position_k(&jc, char2) != Some(k) {
            return Err(cv("normalization left the required support shape"));
        }
        // (c): principal minors of the leading k×k block.
        if leading_minors_zero(&jc, k)? {
            let lead2 = cur.comp(0).partial_evaluate(&[(0, ctx.zero())])?;
            let hess2 = const_entries(&hessian(&lead2))?;
            if perm_diag_shape(&hess2.submatrix(&idx, &idx)) {
                settled = true;
                break;
            }
            continue;
        }
        // Adjustment: the leading block must be nilpotent of rank 1 with
        // K-dependent rows; zero all rows but one pivot row by component
        // operations that only ever add a later component to an earlier one
        // or mix components past the first.
        let sel: Vec<usize> = (0..k).collect();
        let nblk = jc.submatrix(&sel, &sel);
        if !is_nilpotent(&nblk)? {
            return Err(cv(
                "leading block has a nonzero principal minor but is not nilpotent",
            ));
        }
        if rank_kx(&nblk) != 1 {
            return Err(cv(
                "leading block rank is outside the adjustable range",
            ));
        }
        let row_nonzero =
            |r: usize| -> bool { (0..k).any(|c| !nblk.get(r, c).is_zero()) };
        let Some(p) = (1..k).find(|&r| row_nonzero(r)) else {
            return Err(cv(
                "single nonzero leading row should already have zero minors",
            ));
        };
        let (plead, _) = nblk.get(p, (0..k).find(|&c| !nblk.get(p, c).is_zero()).unwrap())
            .leading_term()
            .map(|(m, c)| (m.clone(), c.clone()))
            .expect("nonzero pivot row");
        let pcol = (0..k).find(|&c| !nblk.get(p, c).is_zero()).unwrap();
        let pc = nblk.get(p, pcol).coefficient(&plead);
        let mut mstep = ConstMatrix::identity(&ctx, n);
        let mut adjusted = false;
        for q in 0..k {
            if q == p || !row_nonzero(q) {
                continue;
            }
            let lam = nblk.get(q, pcol).coefficient(&plead).div(&pc);
            for c in 0..k {
                if *nblk.get(q, c) != nblk.get(p, c).scale(&lam) {
                    return Err(cv("leading block rows are not aligned"));
                }
            }
            mstep.set(q, p, lam);
            adjusted = true;
        }
        if !adjusted {
            return Err(cv("leading block admits no zeroing adjustment"));
        }
        t_total = t_total.mul(&mstep);
        cur = conjugate(&cur, &mstep.inverse()?, &mstep)?;
    }
    if !settled {
        return Err(cv("principal-minor normal form did not stabilize"));
    }

    // Enumerate all nonzero principal minors of the full normalized Jacobian.
    let jfin = jacobian(&cur);
    let mut nonzero: Vec<(Vec<usize>, Poly)> = Vec::new();
    for mask in 1u64..(1u64 << n) {
        let sel: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
        let d = det(&jfin.submatrix(&sel, &sel))?;
        if !d.is_zero() {
            nonzero.push((sel.iter().map(|i| i + 1).collect(), d));
        }
    }
    nonzero.sort_by(|a, b| (a.0.len(), &a.0).cmp(&(b.0.len(), &b.0)));

    // Pairing checks: size 2, containing coordinate 1, determinant a multiple
    // of x₂x₃, and a unique determinant-negated partner.
    if !nonzero.is_empty() {
        if n < 3 {
            return Err(cv(
                "nonzero principal minors need at least three coordinates to pair",
            ));
        }
        let x2x3 = mono_pair(n, 1, 2);
        for (sel, d) in &nonzero {
            if sel.len() != 2 || sel[0] != 1 {
                return Err(cv(format!(
                    "nonzero principal minor on coordinates {:?} is outside the paired family",
                    sel
                )));
            }
            if d.terms().any(|(m, _)| *m != x2x3) {
                return Err(cv(format!(
                    "minor determinant {} is not a multiple of x2*x3",
                    d
                )));
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (a, (_, da)) in nonzero.iter().enumerate() {
        let partners: Vec<usize> = nonzero
            .iter()
            .enumerate()
            .filter(|&(b, (_, db))| b != a && *db == da.neg())
            .map(|(b, _)| b)
            .collect();
        if partners.len() != 1 {
            return Err(cv(format!(
                "minor {} has {} determinant-negated partners, expected exactly one",
                a,
                partners.len()
            )));
        }
        if a < partners[0] {
            pairs.push((a, partners[0]));
        }
    }
    Ok((t_total, MinorReport { nonzero, pairs }))
}

// ---------------------------------------------------------------------------
// Translation degeneration for the four-variable quartet family
// ---------------------------------------------------------------------------

/// For the quartet family Ht and a constant matrix M with
/// deg det(JHt + M) ≤ 2, produce the translation G with
/// Ht(G(x)) − (Ht(x) + M·x) constant, and verify det(JHt + M) = 0.
pub fn lem4_translation(ht: &PolyMap, m: &ConstMatrix) -> Result<AffineAuto> {
    let ctx = ht.ctx().clone();
    if ht.n() != 4 || ht.m() != 4 {
        return Err(Error::PreconditionViolated(
            "quartet family lives on four variables and four components".into(),
        ));
    }
    if ctx.characteristic() == 2 {
        return Err(Error::PreconditionViolated(
            "quartet family needs characteristic ≠ 2".into(),
        ));
    }
    let c = coeff_pair(ht.comp(0), 1, 3);
    if c.is_zero() {
        return Err(Error::PreconditionViolated(
            "family parameter read from the first component is zero".into(),
        ));
    }
    if *ht != crate::generators::quartet_family(&ctx, &c) {
        return Err(Error::PreconditionViolated(
            "map is not the quartet family".into(),
        ));
    }
    if m.rows() != 4 || m.cols() != 4 {
        return Err(Error::ShapeMismatch(format!(
            "expected a 4×4 matrix, got {}×{}",
            m.rows(),
            m.cols()
        )));
    }
    let jht = jacobian(ht);
    let sum = jht.add(&m.to_poly(4));
    let d = det(&sum)?;
    if let Degree::Finite(deg) = d.degree() {
        if deg > 2 {
            return Err(Error::DegreeTooHigh);
        }
    }

    // JHt is linear in its argument: solve JHt(g) = M entrywise for g ∈ K⁴.
    let mut rows: Vec<Vec<FieldElem>> = Vec::new();
    let mut rhs: Vec<FieldElem> = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            rows.push(
                (0..4)
                    .map(|v| jht.get(i, j).coefficient(&Monomial::var(4, v)))
                    .collect(),
            );
            rhs.push(m.get(i, j).clone());
        }
    }
    let Some(g) = ConstMatrix::from_rows(&ctx, rows).solve(&rhs) else {
        return Err(cv(
            "no translation produces the requested linear perturbation",
        ));
    };

    // Verify: Ht(x + g) − Ht(x) − M·x is constant, and det(JHt + M) = 0.
    let args: Vec<Poly> = (0..4)
        .map(|i| Poly::var(&ctx, 4, i).add(&Poly::constant(&ctx, 4, g[i].clone())))
        .collect();
    for i in 0..4 {
        let shifted = ht.comp(i).substitute(&args)?;
        let mx = (0..4).fold(Poly::zero(&ctx, 4), |acc, j| {
            acc.add(&Poly::var(&ctx, 4, j).scale(m.get(i, j)))
        });
        let diff = shifted.sub(ht.comp(i)).sub(&mx);
        if !matches!(diff.degree(), Degree::NegInf | Degree::Finite(0)) {
            return Err(cv("translation residual is not constant"));
        }
    }
    if !d.is_zero() {
        return Err(cv(
            "perturbed Jacobian determinant is nonzero despite a valid translation",
        ));
    }
    AffineAuto::new(ConstMatrix::identity(&ctx, 4), g)
}

// ---------------------------------------------------------------------------
// Tame decomposition
// ---------------------------------------------------------------------------

/// A verified factorization of a Keller map x + H into elementary and affine
/// automorphisms, with the split-off square part in characteristic 2.
#[derive(Debug, Clone)]
pub struct TameDecomposition {
    pub certificate: TameCertificate,
    pub rank: usize,
    /// Six-case classification, when the rank-3 classifier ran.
    pub case: Option<u8>,
    /// target − composed certificate: a map whose components are sums of
    /// xᵢ²-terms (characteristic 2 only; `None` when the match is exact).
    pub square_part: Option<PolyMap>,
}

impl TameDecomposition {
    pub fn to_json_value(&self, verified: bool) -> Value {
        json!({
            "rank": self.rank,
            "case": self.case,
            "certificate": self.certificate.to_json_value(),
            "square_part": self.square_part.as_ref().map(|sp| {
                sp.comps().iter().map(|p| p.to_string()).collect::<Vec<_>>()
            }),
            "verified": verified,
        })
    }
}

/// Elementary factors of a map whose Jacobian is strictly triangular in the
/// coordinate order `order`: component order[k] (square-free part in
/// characteristic 2) depends only on variables earlier in the order, so the
/// factors compose exactly when applied from the last coordinate upward.
fn factor_triangular(hbar: &PolyMap, order: &[usize]) -> Result<Vec<TameFactor>> {
    let n = hbar.n();
    let mut seen = vec![false; n];
    let mut factors = Vec::new();
    for &i in order {
        let rest = sqfree_part(hbar.comp(i))?;
        if !rest.is_zero() {
            if !supported_within(&rest, |v| seen[v]) {
                return Err(cv(format!(
                    "component {} of the triangular form depends on a later variable",
                    i + 1
                )));
            }
            factors.push(TameFactor::Elem(ElementaryAuto::new(n, i, rest)?));
        }
        seen[i] = true;
    }
    Ok(factors)
}

/// Match H ≡ (x₂x₅ + u₁, x₁x₄ − x₃x₅ + u₂, x₂x₄ + u₃, 0, …) modulo squares,
/// with u₁, u₂, u₃ ∈ K[x₄..xₙ]; on success emit the six-step elementary
/// factorization (zero u-factors skipped).
fn try_form2_factor(hm: &PolyMap) -> Result<Option<Vec<TameFactor>>> {
    let ctx = hm.ctx().clone();
    let n = hm.n();
    if hm.m() != n || n < 5 {
        return Ok(None);
    }
    let rest: Vec<Poly> = hm
        .comps()
        .iter()
        .map(sqfree_part)
        .collect::<Result<_>>()?;
    let p1 = pair_poly(&ctx, n, 1, 4);
    let p2 = pair_poly(&ctx, n, 0, 3).sub(&pair_poly(&ctx, n, 2, 4));
    let p3 = pair_poly(&ctx, n, 1, 3);
    let u1 = rest[0].sub(&p1);
    let u2 = rest[1].sub(&p2);
    let u3 = rest[2].sub(&p3);
    let tail_only = |p: &Poly| supported_within(p, |v| v >= 3);
    if !tail_only(&u1) || !tail_only(&u2) || !tail_only(&u3) {
        return Ok(None);
    }
    if rest[3..].iter().any(|p| !p.is_zero()) {
        return Ok(None);
    }
    let mut factors = Vec::new();
    for (i, u) in [(0usize, &u1), (1, &u2), (2, &u3)] {
        if !u.is_zero() {
            factors.push(TameFactor::Elem(ElementaryAuto::new(n, i, u.clone())?));
        }
    }
    factors.push(TameFactor::Elem(ElementaryAuto::new(n, 1, p2)?));
    factors.push(TameFactor::Elem(ElementaryAuto::new(n, 2, p3)?));
    factors.push(TameFactor::Elem(ElementaryAuto::new(n, 0, p1)?));
    Ok(Some(factors))
}

/// Match H ≡ (x₂x₆, x₁x₅ + x₃x₆ + a·x₄x₅ + b·x₄x₆ + u₂, x₂x₅, x₅x₆, 0, …)
/// modulo squares in characteristic 2, with u₂ ∈ K[x₄, x₇, …]; on success
/// emit the four-step elementary factorization.
fn try_form3_factor(hm: &PolyMap) -> Result<Option<Vec<TameFactor>>> {
    let ctx = hm.ctx().clone();
    let n = hm.n();
    if ctx.characteristic() != 2 || hm.m() != n || n < 6 {
        return Ok(None);
    }
    let rest: Vec<Poly> = hm
        .comps()
        .iter()
        .map(sqfree_part)
        .collect::<Result<_>>()?;
    if rest[0] != pair_poly(&ctx, n, 1, 5)
        || rest[2] != pair_poly(&ctx, n, 1, 4)
        || rest[3] != pair_poly(&ctx, n, 4, 5)
    {
        return Ok(None);
    }
    if rest[4..].iter().any(|p| !p.is_zero()) {
        return Ok(None);
    }
    let h2 = rest[1].clone();
    let w = h2
        .sub(&pair_poly(&ctx, n, 0, 4))
        .sub(&pair_poly(&ctx, n, 2, 5));
    let m45 = mono_pair(n, 3, 4);
    let m46 = mono_pair(n, 3, 5);
    let ok = w.terms().all(|(m, _)| {
        *m == m45
            || *m == m46
            || m.exponents()
                .iter()
                .enumerate()
                .all(|(v, &e)| e == 0 || v == 3 || v >= 6)
    });
    if !ok {
        return Ok(None);
    }
    Ok(Some(vec![
        TameFactor::Elem(ElementaryAuto::new(n, 3, pair_poly(&ctx, n, 4, 5))?),
        TameFactor::Elem(ElementaryAuto::new(n, 1, h2)?),
        TameFactor::Elem(ElementaryAuto::new(n, 0, pair_poly(&ctx, n, 1, 5))?),
        TameFactor::Elem(ElementaryAuto::new(n, 2, pair_poly(&ctx, n, 1, 4))?),
    ]))
}

/// Factor a map whose Jacobian is nonzero only in the first three rows:
/// either it matches the five-variable form directly, or the special 3×3
/// normal form is completed to a coordinate frame sending b ↦ x₄ and f ↦ x₅,
/// after which the form must match.  Returns (L, factors) with the factors
/// valid for L⁻¹·H(L·x).
fn row3_route(hm: &PolyMap) -> Result<(ConstMatrix, Vec<TameFactor>)> {
    let ctx = hm.ctx().clone();
    let n = hm.n();
    if let Some(factors) = try_form2_factor(hm)? {
        return Ok((ConstMatrix::identity(&ctx, n), factors));
    }
    match lem3_normal_form(hm)? {
        TriangularizationResult::Triangular { .. } => Err(cv(
            "three-row map with triangularizable leading block escaped the greedy pass",
        )),
        TriangularizationResult::SpecialFB { t: u3, f, b } => {
            // Sign twist: conjugating the special form by diag(1, 1, −1)
            // moves it to the pattern [[0, f, 0], [b, 0, −f], [0, b, 0]]
            // that the five-variable form realizes with f = x₅, b = x₄.
            let d = diag_matrix(&ctx, &[ctx.one(), ctx.one(), ctx.one().neg()]);
            let c3 = u3.mul(&d);
            let fc = f.coeffs();
            let bc = b.coeffs();
            if fc[..3].iter().any(|c| !c.is_zero()) || bc[..3].iter().any(|c| !c.is_zero()) {
                return Err(cv("special-form entries touch the leading block"));
            }
            // Complete rows (b, f) to an invertible matrix on the tail.
            let mut wrows: Vec<Vec<FieldElem>> = vec![bc[3..].to_vec(), fc[3..].to_vec()];
            for i in 0..n - 3 {
                if wrows.len() == n - 3 {
                    break;
                }
                let mut unit = vec![ctx.zero(); n - 3];
                unit[i] = ctx.one();
                let mut cand = wrows.clone();
                cand.push(unit);
                let cm = ConstMatrix::from_rows(&ctx, cand.clone());
                if cm.rank() == cand.len() {
                    wrows = cand;
                }
            }
            let wmat = ConstMatrix::from_rows(&ctx, wrows);
            if wmat.rows() != n - 3 || !wmat.is_invertible() {
                return Err(cv("tail frame completion failed"));
            }
            let vtail = wmat.inverse()?;
            let i3 = ConstMatrix::identity(&ctx, 3);
            let itail = ConstMatrix::identity(&ctx, n - 3);
            let chat = ConstMatrix::block_diag(&ctx, &[&c3, &itail]);
            let vhat = ConstMatrix::block_diag(&ctx, &[&i3, &vtail]);
            let l = chat.mul(&vhat);
            let h2 = conjugate(hm, &l.inverse()?, &l)?;
            match try_form2_factor(&h2)? {
                Some(factors) => Ok((l, factors)),
                None => Err(cv(
                    "special normal form did not reach the five-variable shape",
                )),
            }
        }
    }
}

/// Case-1 route: move the three nonzero Jacobian rows to the top with the
/// classifier's row operation, then factor through the three-row route.
fn case1_route(h: &PolyMap, report: &CaseReport) -> Result<(ConstMatrix, Vec<TameFactor>)> {
    let ctx = h.ctx().clone();
    if let Some(factors) = try_form2_factor(h)? {
        return Ok((ConstMatrix::identity(&ctx, h.n()), factors));
    }
    let sinv = report.s.inverse()?;
    let ht = conjugate(h, &report.s, &sinv)?;
    let j = jacobian(&ht);
    for i in 3..ht.m() {
        for c in 0..ht.n() {
            if !j.get(i, c).is_zero() {
                return Err(cv(format!(
                    "case-1 row operation left Jacobian row {} nonzero",
                    i + 1
                )));
            }
        }
    }
    let (l_loc, factors) = row3_route(&ht)?;
    Ok((sinv.mul(&l_loc), factors))
}

/// State for the case-3 pipeline: the current conjugate cur = L⁻¹·H(L·x).
struct ConjState {
    cur: PolyMap,
    l: ConstMatrix,
}

impl ConjState {
    fn apply(&mut self, m: &ConstMatrix) -> Result<()> {
        self.l = self.l.mul(m);
        self.cur = conjugate(&self.cur, &m.inverse()?, m)?;
        Ok(())
    }
}

/// Mixed monomials of `p` that involve a variable past the third.
fn tail_mixed(p: &Poly) -> Poly {
    let n = p.nvars();
    let mut out = Poly::zero(p.ctx(), n);
    for (m, c) in p.terms() {
        let e = m.exponents();
        let mixed = e.iter().filter(|&&v| v > 0).count() == 2;
        let has_tail = e.iter().enumerate().any(|(v, &ev)| v >= 3 && ev > 0);
        if mixed && has_tail {
            out = out.add(&Poly::from_terms(p.ctx(), n, vec![(m.clone(), c.clone())]));
        }
    }
    out
}

/// Disjoint pairing of the mixed part: partner[v] = w when x_v·x_w appears.
/// Errors when some variable occurs in two distinct mixed monomials.
fn mixed_pairing(p: &Poly) -> Result<Vec<Option<usize>>> {
    let n = p.nvars();
    let mut partner: Vec<Option<usize>> = vec![None; n];
    for (m, _) in p.terms() {
        let vars: Vec<usize> = m
            .exponents()
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(v, _)| v)
            .collect();
        if vars.len() != 2 {
            continue;
        }
        let (a, b) = (vars[0], vars[1]);
        for (x, y) in [(a, b), (b, a)] {
            match partner[x] {
                None => partner[x] = Some(y),
                Some(z) if z == y => {}
                Some(_) => {
                    return Err(cv(
                        "mixed part of the pivot component is not a disjoint pairing",
                    ))
                }
            }
        }
    }
    Ok(partner)
}

/// x₁-cross structure of a component: coefficients of x₁x₂ and x₁x₃, with a
/// check that no other x₁-mixed monomial occurs.
fn x1_cross(p: &Poly) -> Result<(FieldElem, FieldElem)> {
    for (m, _) in p.terms() {
        let e = m.exponents();
        if e[0] == 1 && e.iter().enumerate().any(|(v, &ev)| v >= 3 && ev > 0) {
            return Err(cv(
                "component has an x1-cross term with a tail variable",
            ));
        }
    }
    Ok((coeff_pair(p, 0, 1), coeff_pair(p, 0, 2)))
}

/// Case-3 route (characteristic 2): conjugate with the classifier's variable
/// operation, concentrate the mixed tail in the first component, normalize
/// its Hessian pairing, rescale the carrier components, clean the remaining
/// rows, and land on the six-variable shape; when the x₂x₃-carrier vanishes
/// entirely the map has only three nonzero rows and falls through to the
/// three-row route.
fn case3_route(h: &PolyMap, report: &CaseReport) -> Result<(ConstMatrix, Vec<TameFactor>)> {
    let ctx = h.ctx().clone();
    let n = h.n();
    if let Some(factors) = try_form3_factor(h)? {
        return Ok((ConstMatrix::identity(&ctx, n), factors));
    }
    let mut st = ConjState {
        cur: conjugate(h, &report.t.inverse()?, &report.t)?,
        l: report.t.clone(),
    };

    // Mixed tail parts of all components must be aligned to a single shape.
    let collect_alpha = |cur: &PolyMap| -> Result<(Vec<FieldElem>, Poly)> {
        let tms: Vec<Poly> = cur.comps().iter().map(tail_mixed).collect();
        let Some(rix) = tms.iter().position(|p| !p.is_zero()) else {
            return Err(cv(
                "rank-3 case-3 map has no mixed tail part in any component",
            ));
        };
        let tau = tms[rix].clone();
        let (lead, lc) = tau.leading_term().map(|(m, c)| (m.clone(), c.clone())).unwrap();
        let mut alpha = Vec::with_capacity(tms.len());
        for tm in &tms {
            if tm.is_zero() {
                alpha.push(ctx.zero());
                continue;
            }
            let a = tm.coefficient(&lead).div(&lc);
            if *tm != tau.scale(&a) {
                return Err(cv("mixed tail parts are not aligned"));
            }
            alpha.push(a);
        }
        Ok((alpha, tau))
    };

    // Pivot the mixed tail into the first component.
    let (alpha, _) = collect_alpha(&st.cur)?;
    let Some(p) = (0..3).find(|&i| !alpha[i].is_zero()) else {
        return Err(cv(
            "mixed tail avoids the leading components; this shape triangularizes",
        ));
    };
    if p != 0 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(0, p);
        st.apply(&ConstMatrix::permutation(&ctx, &perm))?;
    }
    let (alpha, _) = collect_alpha(&st.cur)?;
    let mut estep = ConstMatrix::identity(&ctx, n);
    let mut any = false;
    for (i, a) in alpha.iter().enumerate().skip(1) {
        if !a.is_zero() {
            estep.set(i, 0, a.div(&alpha[0]));
            any = true;
        }
    }
    if any {
        st.apply(&estep)?;
    }
    for (i, c) in st.cur.comps().iter().enumerate() {
        if i > 0 && !tail_mixed(c).is_zero() {
            return Err(cv("mixed tail survived outside the first component"));
        }
    }

    // Normalize the Hessian pairing of the first component off x₁.
    let lead = st.cur.comp(0).partial_evaluate(&[(0, ctx.zero())])?;
    let hess = const_entries(&hessian(&lead))?;
    let idx: Vec<usize> = (1..n).collect();
    let red = crate::matpoly::evenrk_reduce(&hess.submatrix(&idx, &idx))?;
    let one = ConstMatrix::identity(&ctx, 1);
    st.apply(&ConstMatrix::block_diag(&ctx, &[&one, &red.t]))?;

    // The normalized shape must satisfy the paired-minor structure.
    let v = st.cur.comp(0).clone();
    if !v.differentiate(0)?.is_zero() {
        return Err(cv("pivot component still depends on x1"));
    }
    for i in [1usize, 2] {
        if !sqfree_part(st.cur.comp(i))?.is_zero() {
            return Err(cv(format!(
                "component {} should be a pure square part",
                i + 1
            )));
        }
    }
    let partner = mixed_pairing(&sqfree_part(&v)?)?;
    let (pi, pi2) = match (partner[1], partner[2]) {
        (Some(a), Some(b)) if a >= 3 && b >= 3 && a != b => (a, b),
        _ => {
            return Err(cv(
                "x2 and x3 are not paired with distinct tail variables",
            ))
        }
    };
    let (a_i, b_i) = x1_cross(&sqfree_part(st.cur.comp(pi))?)?;
    if !a_i.is_zero() || b_i.is_zero() {
        return Err(cv("x2-partner component has the wrong x1-cross"));
    }
    let (a_j, b_j) = x1_cross(&sqfree_part(st.cur.comp(pi2))?)?;
    if a_j.is_zero() || !b_j.is_zero() {
        return Err(cv("x3-partner component has the wrong x1-cross"));
    }
    for j in 3..n {
        if j == pi || j == pi2 {
            continue;
        }
        let (aj, bj) = x1_cross(&sqfree_part(st.cur.comp(j))?)?;
        if (!aj.is_zero() || !bj.is_zero()) && partner[j].is_some() {
            return Err(cv(format!(
                "coordinate {} carries both a pairing and an x1-cross",
                j + 1
            )));
        }
    }
    let d = coeff_pair(&v, 1, pi).mul(&b_i);
    let d2 = coeff_pair(&v, 2, pi2).mul(&a_j);
    if d != d2 {
        return Err(cv("determinant scalars of the minor pair disagree"));
    }

    // Move the partners to coordinates 4 and 5 (1-based).
    let mut order: Vec<usize> = vec![0, 1, 2, pi, pi2];
    order.extend((3..n).filter(|&j| j != pi && j != pi2));
    st.apply(&ConstMatrix::permutation(&ctx, &inverse_perm(&order)))?;

    // Rescale so that v ⊇ x₂x₄ + x₃x₅ and the carriers read x₃·x₁, x₂·x₁.
    let v = st.cur.comp(0).clone();
    let m24 = coeff_pair(&v, 1, 3);
    let b4 = coeff_pair(st.cur.comp(3), 0, 2);
    let a5 = coeff_pair(st.cur.comp(4), 0, 1);
    if m24.is_zero() || b4.is_zero() || a5.is_zero() {
        return Err(cv("carrier coefficients vanished after reordering"));
    }
    let dscale = m24.mul(&b4);
    let mut scales = vec![ctx.one(); n];
    scales[2] = dscale.inv();
    scales[3] = m24.inv();
    scales[4] = a5;
    st.apply(&diag_matrix(&ctx, &scales))?;
    let v = st.cur.comp(0).clone();
    if !coeff_pair(&v, 1, 3).is_one()
        || !coeff_pair(&v, 2, 4).is_one()
        || !coeff_pair(st.cur.comp(3), 0, 2).is_one()
        || !coeff_pair(st.cur.comp(4), 0, 1).is_one()
    {
        return Err(cv("carrier rescaling did not normalize"));
    }

    // Clean the x₁-crosses of the remaining rows with the two carriers.
    let mut cstep = ConstMatrix::identity(&ctx, n);
    let mut any = false;
    for j in 5..n {
        let (aj, bj) = x1_cross(&sqfree_part(st.cur.comp(j))?)?;
        if aj.is_zero() && bj.is_zero() {
            continue;
        }
        if partner[order[j]].is_some() {
            return Err(cv(format!(
                "coordinate {} carries both a pairing and an x1-cross",
                j + 1
            )));
        }
        cstep.set(j, 3, bj);
        cstep.set(j, 4, aj);
        any = true;
    }
    if any {
        st.apply(&cstep)?;
        for j in 5..n {
            let (aj, bj) = x1_cross(&sqfree_part(st.cur.comp(j))?)?;
            if !aj.is_zero() || !bj.is_zero() {
                return Err(cv("x1-cross cleanup did not converge"));
            }
        }
    }

    // Locate the x₂x₃-carrier among the remaining rows.
    let carriers: Vec<usize> = (5..n)
        .filter(|&j| !coeff_pair(st.cur.comp(j), 1, 2).is_zero())
        .collect();
    if carriers.is_empty() {
        // Only three nonzero rows remain: reorder and use the three-row route.
        let mut order: Vec<usize> = vec![0, 3, 4];
        order.extend([1usize, 2]);
        order.extend(5..n);
        st.apply(&ConstMatrix::permutation(&ctx, &inverse_perm(&order)))?;
        let (l_loc, factors) = row3_route(&st.cur)?;
        return Ok((st.l.mul(&l_loc), factors));
    }
    let j0 = carriers[0];
    if carriers.len() > 1 {
        let c0 = coeff_pair(st.cur.comp(j0), 1, 2);
        let mut mstep = ConstMatrix::identity(&ctx, n);
        for &j in &carriers[1..] {
            mstep.set(j, j0, coeff_pair(st.cur.comp(j), 1, 2).div(&c0));
        }
        st.apply(&mstep)?;
    }
    if j0 != 5 {
        let mut perm: Vec<usize> = (0..n).collect();
        perm.swap(5, j0);
        st.apply(&ConstMatrix::permutation(&ctx, &perm))?;
    }
    let c6 = coeff_pair(st.cur.comp(5), 1, 2);
    let mut scales = vec![ctx.one(); n];
    scales[5] = c6;
    st.apply(&diag_matrix(&ctx, &scales))?;

    // The shape now reads (x₂x₄ + x₃x₅ + u₁, 0, 0, x₃(x₁ + a·x₂),
    // x₂(x₁ + b·x₃), x₂x₃, 0, …) modulo squares, u₁ ∈ K[x₆..].
    let a = coeff_pair(st.cur.comp(3), 1, 2);
    let b = coeff_pair(st.cur.comp(4), 1, 2);
    let want3 = pair_poly(&ctx, n, 0, 2).add(&pair_poly(&ctx, n, 1, 2).scale(&a));
    let want4 = pair_poly(&ctx, n, 0, 1).add(&pair_poly(&ctx, n, 1, 2).scale(&b));
    if sqfree_part(st.cur.comp(3))? != want3
        || sqfree_part(st.cur.comp(4))? != want4
        || sqfree_part(st.cur.comp(5))? != pair_poly(&ctx, n, 1, 2)
    {
        return Err(cv("carrier components missed the target shape"));
    }
    for j in 6..n {
        if !sqfree_part(st.cur.comp(j))?.is_zero() {
            return Err(cv(format!("component {} should be a square part", j + 1)));
        }
    }
    let u1 = sqfree_part(st.cur.comp(0))?
        .sub(&pair_poly(&ctx, n, 1, 3))
        .sub(&pair_poly(&ctx, n, 2, 4));
    if !supported_within(&u1, |v| v >= 5) {
        return Err(cv("tail part of the first component leaks forward"));
    }

    // Absorb a and b into the carriers: x₄ ← x₄ + a·x₆, x₅ ← x₅ + b·x₆.
    if !a.is_zero() || !b.is_zero() {
        let mut sstep = ConstMatrix::identity(&ctx, n);
        sstep.set(3, 5, a);
        sstep.set(4, 5, b);
        st.apply(&sstep)?;
        if sqfree_part(st.cur.comp(3))? != pair_poly(&ctx, n, 0, 2)
            || sqfree_part(st.cur.comp(4))? != pair_poly(&ctx, n, 0, 1)
        {
            return Err(cv("carrier absorption did not normalize"));
        }
    }

    // Final reordering onto the six-variable shape.
    let mut perm: Vec<usize> = vec![1, 4, 5, 0, 2, 3];
    perm.extend(6..n);
    st.apply(&ConstMatrix::permutation(&ctx, &perm))?;
    match try_form3_factor(&st.cur)? {
        Some(factors) => Ok((st.l, factors)),
        None => Err(cv(
            "case-3 pipeline did not reach the six-variable shape",
        )),
    }
}

/// Factor the Keller map f = x + H (Jacobian rank ≤ 3) into a verified
/// composition of elementary and affine automorphisms.
pub fn tame_decompose(f: &PolyMap) -> Result<TameDecomposition> {
    let ctx = f.ctx().clone();
    let n = f.n();
    if f.m() != n {
        return Err(Error::NotSquareMap { m: f.m(), n });
    }
    let h = f.sub(&PolyMap::identity(&ctx, n));
    if !h.is_quadratic_homogeneous() {
        return Err(Error::NotQuadraticHomogeneous);
    }
    if !is_keller(f)? {
        return Err(Error::NotKeller);
    }
    let jh = jacobian(&h);
    let r = rank_kx(&jh);
    if r > 3 {
        return Err(Error::RankTooHigh(r));
    }

    let (l, inner, case) = match greedy_triangularize(&jh) {
        Ok((t, permutation)) => {
            let hbar = conjugate(&h, &t.inverse()?, &t)?;
            let jb = jacobian(&hbar);
            for i in 0..n {
                for j in i..n {
                    if !jb.get(permutation[i], permutation[j]).is_zero() {
                        return Err(cv("conjugate is not strictly triangular in order"));
                    }
                }
            }
            (t, factor_triangular(&hbar, &permutation)?, None)
        }
        Err(stuck @ Error::TriangularizationStuck(_)) => {
            if r <= 2 {
                return Err(stuck);
            }
            let report = classify_rk3(&h)?;
            match report.case {
                1 => {
                    let (l, fs) = case1_route(&h, &report)?;
                    (l, fs, Some(1))
                }
                3 => {
                    let (l, fs) = case3_route(&h, &report)?;
                    (l, fs, Some(3))
                }
                2 | 5 | 6 => {
                    return Err(cv(format!(
                        "case-{} shape triangularizes, yet no constant triangularization was found",
                        report.case
                    )))
                }
                4 => {
                    return Err(cv(
                        "the quartet family admits no Keller member",
                    ))
                }
                c => return Err(cv(format!("classifier returned unknown case {}", c))),
            }
        }
        Err(e) => return Err(e),
    };

    let mut factors: Vec<TameFactor> = Vec::new();
    let wrap = !is_identity_matrix(&l);
    if wrap {
        factors.push(TameFactor::Affine(AffineAuto::linear(l.clone())?));
    }
    factors.extend(inner);
    if wrap {
        factors.push(TameFactor::Affine(AffineAuto::linear(l.inverse()?)?));
    }
    let certificate = TameCertificate::new(n, factors)?;

    let mode = if ctx.characteristic() == 2 {
        VerifyMode::UpToSquarePart
    } else {
        VerifyMode::Exact
    };
    let outcome = verify_certificate(&certificate, f, mode)?;
    if !outcome.ok {
        return Err(cv(format!(
            "internal certificate failed verification; discrepancy: {:?}",
            outcome.discrepancy.map(|d| format!("{}", d))
        )));
    }
    let square_part = if ctx.characteristic() == 2 {
        let diff = f.sub(&certificate.compose_all(&ctx));
        if diff.is_zero() {
            None
        } else {
            for c in diff.comps() {
                if !sqfree_part(c)?.is_zero() {
                    return Err(cv("residual of a verified certificate has a square-free part"));
                }
            }
            Some(diff)
        }
    } else {
        None
    };

    Ok(TameDecomposition {
        certificate,
        rank: r,
        case,
        square_part,
    })
}

// ---------------------------------------------------------------------------
