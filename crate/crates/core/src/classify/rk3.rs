//! Six-case classification at Jacobian rank 3. `classify_rk3` conjugates a
//! quadratic homogeneous map by invertible constant S, T until it satisfies
//! one of six structural shapes, dispatching on the positioned block form
//! [[A, B], [C, 0]] of the Jacobian: a constant vector in the column space of
//! B splits off a rank-2 tail, pairwise-dependent columns of B funnel into
//! the single-column reductions, and independent columns force the trailing
//! rows to vanish. The report carries (S, T), the case number (the lowest
//! applicable one), the family parameter c in case 4 and the witnesses
//! consumed along the way; it is re-verified before being returned.

use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::maps::{conjugate, hessian, jacobian, PolyMap};
use crate::matpoly::{
    columns_pairwise_dependent_over_k, constant_kernel, constant_vectors_in_colspace,
    diagonalize_symmetric, irlem_decompose, rank_kx, rows_pairwise_dependent_over_k,
    ConstMatrix, KernelSide,
};
use crate::poly::{Monomial, Poly};

use super::calc::rk3calc_normalize;
use super::rkr::{classify_rkr, single_column_reducer};
use super::{
    case_shape, coeff_vector, front_col_perm, front_row_perm, jrow_coeffs, nonzero_cols,
    nonzero_rows, row_reduce_transform, row_replacement, smul, sym2_monomials, CaseReport,
    CaseWitnesses, RkrForm,
};

/// Classify a quadratic homogeneous map of Jacobian rank 3 into one of the
/// six cases. Errors with `RankMismatch` when the rank is not 3, with
/// `FieldTooSmall` when the positioning lemma cannot act (only possible over
/// GF(3)), and with `ContractViolation` when an internal invariant fails.
pub fn classify_rk3(h: &PolyMap) -> Result<CaseReport> {
    if !h.is_quadratic_homogeneous() {
        return Err(Error::NotQuadraticHomogeneous);
    }
    let ctx = h.ctx();
    let r = rank_kx(&jacobian(h));
    if r != 3 {
        return Err(Error::RankMismatch {
            expected: 3,
            found: r,
        });
    }
    let wit = CaseWitnesses::default();
    let s0 = ConstMatrix::identity(ctx, h.m());
    let t0 = ConstMatrix::identity(ctx, h.n());
    if let Some(rep) = case1_if_few_rows(h, &s0, &t0, &wit)? {
        return Ok(rep);
    }
    // small fields first eliminate constant row dependencies; over GF(2) the
    // remaining four active rows always yield a column-space vector
    let mut s_acc = s0;
    let t_acc = t0;
    let mut wit = wit;
    if let Some(card) = ctx.cardinality() {
        if card <= 3 {
            s_acc = eliminate_dependent_rows(h, s_acc, &mut wit)?;
            if let Some(rep) = case1_if_few_rows(h, &s_acc, &t_acc, &wit)? {
                return Ok(rep);
            }
            if card == 2 {
                return gf2_split(h, s_acc, t_acc, wit);
            }
        }
    }
    main_dispatch(h, s_acc, t_acc, wit)
}

/// Case 1 applies as soon as at most three Jacobian rows are nonzero: a row
/// permutation moves them to the front.
fn case1_if_few_rows(
    h: &PolyMap,
    s_acc: &ConstMatrix,
    t_acc: &ConstMatrix,
    wit: &CaseWitnesses,
) -> Result<Option<CaseReport>> {
    let cur = conjugate(h, s_acc, t_acc)?;
    let nz = nonzero_rows(&jacobian(&cur));
    if nz.len() > 3 {
        return Ok(None);
    }
    let mut wit = wit.clone();
    wit.branch("at most three nonzero rows");
    let s = front_row_perm(h.ctx(), h.m(), &nz).mul(s_acc);
    finalize(h, 1, s, t_acc.clone(), None, wit).map(Some)
}

/// Repeatedly replace a component whose Jacobian row depends K-linearly on
/// the other active rows; the replacement has a zero row and drops out of the
/// active block. Stops when no constant left kernel remains.
fn eliminate_dependent_rows(
    h: &PolyMap,
    mut s_acc: ConstMatrix,
    wit: &mut CaseWitnesses,
) -> Result<ConstMatrix> {
    let ctx = h.ctx();
    let m = h.m();
    loop {
        let cur = smul(&s_acc, h);
        let j = jacobian(&cur);
        let nz = nonzero_rows(&j);
        if nz.len() <= 3 {
            return Ok(s_acc);
        }
        let all_cols: Vec<usize> = (0..j.cols()).collect();
        let sub = j.submatrix(&nz, &all_cols);
        let Some(u) = constant_kernel(&sub, KernelSide::Left).into_iter().next() else {
            return Ok(s_acc);
        };
        let mut ufull = vec![ctx.zero(); m];
        for (k, &row) in nz.iter().enumerate() {
            ufull[row] = u[k].clone();
        }
        let p = ufull
            .iter()
            .rposition(|e| !e.is_zero())
            .expect("kernel vector is nonzero");
        wit.kernel_vectors.push(ufull.clone());
        wit.branch("constant row dependency eliminated");
        s_acc = row_replacement(ctx, m, p, &ufull).mul(&s_acc);
    }
}

/// Over GF(2) a rank-3 Jacobian with four K-independent rows always has a
/// constant vector in the column space of the active block; splitting along
/// it reduces to the rank-2 engine.
fn gf2_split(
    h: &PolyMap,
    s_acc: ConstMatrix,
    t_acc: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let cur = conjugate(h, &s_acc, &t_acc)?;
    let j = jacobian(&cur);
    let nz = nonzero_rows(&j);
    if nz.len() != 4 {
        return Err(Error::ContractViolation(format!(
            "{} K-independent rows of a rank-3 Jacobian over GF(2)",
            nz.len()
        )));
    }
    let all_cols: Vec<usize> = (0..j.cols()).collect();
    let sub = j.submatrix(&nz, &all_cols);
    let u = constant_vectors_in_colspace(&sub)
        .into_iter()
        .next()
        .ok_or_else(|| {
            Error::ContractViolation(
                "four dependent rows over GF(2) without a constant column-space vector".into(),
            )
        })?;
    let mut ufull = vec![ctx.zero(); h.m()];
    for (k, &row) in nz.iter().enumerate() {
        ufull[row] = u[k].clone();
    }
    wit.kernel_vectors.push(ufull.clone());
    wit.branch("column-space vector of the active block");
    alpha_split(h, s_acc, t_acc, ufull, wit)
}

/// Position the Jacobian with the rank-3 decomposition and dispatch on the
/// trailing block B: split (α), reduce to a single column (β) or conclude
/// that the trailing rows vanish (γ).
fn main_dispatch(
    h: &PolyMap,
    s_acc: ConstMatrix,
    t_acc: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let m = h.m();
    let cur = conjugate(h, &s_acc, &t_acc)?;
    let dec = irlem_decompose(&jacobian(&cur))?;
    let s1 = dec.s.mul(&s_acc);
    let t1 = t_acc.mul(&dec.t);
    let pos = conjugate(h, &s1, &t1)?;
    let bl = jacobian(&pos).block_split(3);
    if !bl.d.is_zero() {
        return Err(Error::ContractViolation(
            "positioned Jacobian has a nonzero lower-right block".into(),
        ));
    }
    if !bl.c.mul(&bl.b).is_zero() {
        return Err(Error::ContractViolation(
            "positioned Jacobian violates C·B = 0".into(),
        ));
    }
    if let Some(u) = constant_vectors_in_colspace(&bl.b).into_iter().next() {
        let mut ufull = u;
        ufull.resize(m, ctx.zero());
        wit.kernel_vectors.push(ufull.clone());
        wit.branch("constant vector in the column space of B");
        return alpha_split(h, s1, t1, ufull, wit);
    }
    if columns_pairwise_dependent_over_k(&bl.b).all_dependent {
        wit.branch("pairwise-dependent columns of B");
        // the positioned point: J(pos) evaluates to [[I₃,0],[0,0]] at T⁻¹·v
        let v0 = dec.t.inverse()?.mul_vec(&dec.v);
        return beta_branch(h, s1, t1, v0, wit);
    }
    wit.branch("independent columns in B");
    if rank_kx(&bl.b) < 2 {
        return Err(Error::ContractViolation(
            "columns fail pairwise dependence yet B has rank at most one".into(),
        ));
    }
    if bl.c.is_zero() {
        return finalize(h, 1, s1, t1, None, wit);
    }
    Err(Error::ContractViolation(
        "nonzero trailing rows alongside an independent pair of B-columns".into(),
    ))
}

/// A constant vector û in the column space of the Jacobian splits the map:
/// after mixing û into the first component, the remaining components form a
/// rank-2 map and the rank-2 normal forms lift back.
fn alpha_split(
    h: &PolyMap,
    s_acc: ConstMatrix,
    t_acc: ConstMatrix,
    uhat: Vec<FieldElem>,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let m = h.m();
    let cur = conjugate(h, &s_acc, &t_acc)?;
    let p = uhat
        .iter()
        .position(|e| !e.is_zero())
        .expect("column-space vector is nonzero");
    let mut vmat = ConstMatrix::zero(ctx, m, m);
    for (i, e) in uhat.iter().enumerate() {
        vmat.set(i, 0, e.clone());
    }
    for (col, jj) in (0..m).filter(|&jj| jj != p).enumerate() {
        vmat.set(jj, col + 1, ctx.one());
    }
    let uinv = vmat.inverse()?;
    let mixed = smul(&uinv, &cur);
    let tail = PolyMap::new(ctx, h.n(), mixed.comps()[1..].to_vec())?;
    if rank_kx(&jacobian(&tail)) != 2 {
        return Err(Error::ContractViolation(
            "splitting off a column-space vector did not leave a rank-2 tail".into(),
        ));
    }
    let rec = classify_rkr(&tail)?;
    let one = ConstMatrix::identity(ctx, 1);
    let s2 = ConstMatrix::block_diag(ctx, &[&one, &rec.s])
        .mul(&uinv)
        .mul(&s_acc);
    let t2 = t_acc.mul(&rec.t);
    match rec.form {
        RkrForm::RowBound => {
            wit.branch("rank-2 tail met its row bound");
            let g = conjugate(h, &s2, &t2)?;
            let nz = nonzero_rows(&jacobian(&g));
            if nz.len() > 3 {
                return Err(Error::ContractViolation(
                    "row-bounded rank-2 tail left more than three rows".into(),
                ));
            }
            finalize(h, 1, front_row_perm(ctx, m, &nz).mul(&s2), t2, None, wit)
        }
        RkrForm::ColsNonzeroR => {
            wit.branch("rank-2 tail lives on two variables");
            case2_from_column_form(h, s2, t2, wit)
        }
        RkrForm::ColsNonzeroRp1Char2 => {
            wit.branch("rank-2 tail lives on three variables");
            case3_from_column_form(h, s2, t2, wit)
        }
    }
}

/// All components after the first lie in K[x₁, x₂]; reduce their coefficient
/// rows and either fall back to case 1 or mix the top three onto the exact
/// triple (½x₁², x₁x₂, ½x₂²) of case 2.
fn case2_from_column_form(
    h: &PolyMap,
    s: ConstMatrix,
    t: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let m = h.m();
    let cur = conjugate(h, &s, &t)?;
    let mons = sym2_monomials(h.n(), 2, false);
    let mut rows = Vec::with_capacity(m - 1);
    for p in &cur.comps()[1..] {
        let Some(rowv) = coeff_vector(p, &mons) else {
            return Err(Error::ContractViolation(
                "tail component leaves the two-variable space".into(),
            ));
        };
        rows.push(rowv);
    }
    let (e, d) = row_reduce_transform(ctx, &rows);
    let one = ConstMatrix::identity(ctx, 1);
    let s_red = ConstMatrix::block_diag(ctx, &[&one, &e]).mul(&s);
    if d <= 2 {
        wit.branch("two-variable span is degenerate");
        let g = conjugate(h, &s_red, &t)?;
        let nz = nonzero_rows(&jacobian(&g));
        if nz.len() > 3 {
            return Err(Error::ContractViolation(
                "degenerate two-variable span left more than three rows".into(),
            ));
        }
        return finalize(h, 1, front_row_perm(ctx, m, &nz).mul(&s_red), t, None, wit);
    }
    // three independent quadratics on x₁, x₂: mix them onto the triple
    let rmat = ConstMatrix::from_rows(ctx, rows);
    let ered = e.mul(&rmat);
    let idx = [0usize, 1, 2];
    let m3 = ered.submatrix(&idx, &idx);
    let half = ctx.from_ratio(1, 2);
    let mut nmat = ConstMatrix::identity(ctx, 3);
    nmat.set(0, 0, half.clone());
    nmat.set(2, 2, half);
    let s3 = nmat.mul(&m3.inverse()?);
    let rest = ConstMatrix::identity(ctx, m - 4);
    let s_fin = ConstMatrix::block_diag(ctx, &[&one, &s3, &rest]).mul(&s_red);
    finalize(h, 2, s_fin, t, None, wit)
}

/// Characteristic 2: mixed terms of the tail live on x₁, x₂, x₃ (squares are
/// invisible to the Jacobian and ride along); reduce the mixed coefficient
/// rows and either fall back to case 1 or invert onto the Jacobian rows of
/// (x₁x₂, x₁x₃, x₂x₃) for case 3.
fn case3_from_column_form(
    h: &PolyMap,
    s: ConstMatrix,
    t: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let m = h.m();
    let cur = conjugate(h, &s, &t)?;
    let mons = sym2_monomials(h.n(), 3, true);
    let mut rows = Vec::with_capacity(m - 1);
    for p in &cur.comps()[1..] {
        for (mon, _) in p.terms() {
            let exps = mon.exponents();
            let mixed = exps.iter().all(|&e| e <= 1);
            if mixed && exps.iter().skip(3).any(|&e| e > 0) {
                return Err(Error::ContractViolation(
                    "tail component has a mixed term off the three-variable space".into(),
                ));
            }
        }
        rows.push(mons.iter().map(|mo| p.coefficient(mo)).collect());
    }
    let (e, d) = row_reduce_transform(ctx, &rows);
    let one = ConstMatrix::identity(ctx, 1);
    let s_red = ConstMatrix::block_diag(ctx, &[&one, &e]).mul(&s);
    if d <= 2 {
        wit.branch("mixed three-variable span is degenerate");
        let g = conjugate(h, &s_red, &t)?;
        let nz = nonzero_rows(&jacobian(&g));
        if nz.len() > 3 {
            return Err(Error::ContractViolation(
                "degenerate mixed span left more than three rows".into(),
            ));
        }
        return finalize(h, 1, front_row_perm(ctx, m, &nz).mul(&s_red), t, None, wit);
    }
    let rmat = ConstMatrix::from_rows(ctx, rows);
    let ered = e.mul(&rmat);
    let idx = [0usize, 1, 2];
    let m3 = ered.submatrix(&idx, &idx);
    let s3 = m3.inverse()?;
    let rest = ConstMatrix::identity(ctx, m - 4);
    let s_fin = ConstMatrix::block_diag(ctx, &[&one, &s3, &rest]).mul(&s_red);
    finalize(h, 3, s_fin, t, None, wit)
}

/// Pairwise-dependent columns of B: either B vanishes (cases 5/6 directly),
/// or a constant column operation concentrates B on the fourth variable. In
/// characteristic ≠ 2 the trailing rows then collapse to a single component
/// ½·q(x₁,x₂,x₃) whose diagonalized form decides between the four-variable
/// family (case 4) and the degenerate continuation.
fn beta_branch(
    h: &PolyMap,
    s1: ConstMatrix,
    t1: ConstMatrix,
    mut v: Vec<FieldElem>,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let char2 = ctx.characteristic() == 2;
    let (m, n) = (h.m(), h.n());
    let cur = conjugate(h, &s1, &t1)?;
    let bl = jacobian(&cur).block_split(3);
    if bl.b.is_zero() {
        wit.branch("no trailing columns");
        let case = if char2 { 6 } else { 5 };
        return finalize(h, case, s1, t1, None, wit);
    }
    let u2 = single_column_reducer(&bl.b)?;
    let i3 = ConstMatrix::identity(ctx, 3);
    let tau = ConstMatrix::block_diag(ctx, &[&i3, &u2]);
    let t2 = t1.mul(&tau);
    v = tau.inverse()?.mul_vec(&v);
    if char2 {
        wit.branch("single trailing column in characteristic 2");
        return finalize(h, 6, s1, t2, None, wit);
    }
    wit.branch("single trailing column");
    let cur2 = conjugate(h, &s1, &t2)?;
    let bl2 = jacobian(&cur2).block_split(3);
    if bl2.c.is_zero() {
        wit.branch("trailing rows vanish");
        return finalize(h, 1, s1, t2, None, wit);
    }
    if rank_kx(&bl2.c) >= 2 {
        return Err(Error::ContractViolation(
            "trailing rows of rank two alongside a single-column B".into(),
        ));
    }
    if !rows_pairwise_dependent_over_k(&bl2.c).all_dependent {
        return Err(Error::ContractViolation(
            "rank-1 trailing rows fail pairwise dependence over K".into(),
        ));
    }
    let crows: Vec<Vec<FieldElem>> = (0..bl2.c.rows()).map(|i| jrow_coeffs(&bl2.c, i)).collect();
    let (e3, d3) = row_reduce_transform(ctx, &crows);
    if d3 != 1 {
        return Err(Error::ContractViolation(
            "pairwise-dependent trailing rows with K-rank other than one".into(),
        ));
    }
    let s3 = ConstMatrix::block_diag(ctx, &[&i3, &e3]).mul(&s1);
    let cur3 = conjugate(h, &s3, &t2)?;
    for i in 4..m {
        if !cur3.comp(i).is_zero() {
            return Err(Error::ContractViolation(
                "a component beyond the fourth survived the trailing reduction".into(),
            ));
        }
    }
    // the fourth component is a quadratic in x₁, x₂, x₃ alone; diagonalize it
    let h4 = cur3.comp(3);
    for (mon, _) in h4.terms() {
        if mon.exponents().iter().skip(3).any(|&e| e > 0) {
            return Err(Error::ContractViolation(
                "fourth component leaves the three-variable space".into(),
            ));
        }
    }
    let hm = hessian(h4);
    let one_mon = Monomial::one(n);
    let mut corner = ConstMatrix::zero(ctx, 3, 3);
    for i in 0..3 {
        for jj in 0..3 {
            corner.set(i, jj, hm.get(i, jj).coefficient(&one_mon));
        }
    }
    let (q, dvec) = diagonalize_symmetric(&corner)?;
    let nzidx: Vec<usize> = (0..3).filter(|&i| !dvec[i].is_zero()).collect();
    let k = nzidx.len();
    if k == 0 || k == 3 {
        return Err(Error::ContractViolation(format!(
            "fourth component has a rank-{} Hessian corner",
            k
        )));
    }
    // reorder so the nonzero diagonal entries come first; conjugating by the
    // same R on both sides keeps the positioned identity and the fourth row
    let order: Vec<usize> = nzidx
        .iter()
        .copied()
        .chain((0..3).filter(|i| !nzidx.contains(i)))
        .collect();
    let mut perm = vec![0usize; 3];
    for (i, &o) in order.iter().enumerate() {
        perm[o] = i;
    }
    let pmat = ConstMatrix::permutation(ctx, &perm);
    let rmat = q.mul(&pmat);
    let rinv = rmat.inverse()?;
    let im3 = ConstMatrix::identity(ctx, m - 3);
    let in3 = ConstMatrix::identity(ctx, n - 3);
    let s5 = ConstMatrix::block_diag(ctx, &[&rinv, &im3]).mul(&s3);
    let t5 = t2.mul(&ConstMatrix::block_diag(ctx, &[&rmat, &in3]));
    v = ConstMatrix::block_diag(ctx, &[&rinv, &in3]).mul_vec(&v);
    let d1 = dvec[order[0]].clone();
    let c = dvec[order[1]].div(&d1);
    let mut scale = ConstMatrix::identity(ctx, m);
    scale.set(3, 3, d1.inv());
    let s6 = scale.mul(&s5);
    let cur6 = conjugate(h, &s6, &t5)?;
    let half = ctx.from_ratio(1, 2);
    let x1 = Poly::var(ctx, n, 0);
    let x2 = Poly::var(ctx, n, 1);
    let want4 = x1
        .mul(&x1)
        .scale(&half)
        .add(&x2.mul(&x2).scale(&half.mul(&c)));
    if cur6.comp(3) != &want4 {
        return Err(Error::ContractViolation(
            "fourth component refuses its diagonal form".into(),
        ));
    }
    let j6v = jacobian(&cur6).evaluate(&v)?;
    let mut posid = ConstMatrix::zero(ctx, m, n);
    for i in 0..3 {
        posid.set(i, i, ctx.one());
    }
    if j6v != posid {
        return Err(Error::ContractViolation(
            "positioned identity was lost along the way".into(),
        ));
    }
    wit.v = Some(v.clone());
    if !c.is_zero() {
        wit.branch("nondegenerate diagonal: four-variable family");
        let comps4: Vec<Poly> = (0..4)
            .map(|i| restrict_poly(cur6.comp(i), 4))
            .collect::<Result<_>>()?;
        let h4map = PolyMap::new(ctx, 4, comps4)?;
        let v4: Vec<FieldElem> = v[..4].to_vec();
        let out = rk3calc_normalize(&h4map, &v4)?;
        let im4 = ConstMatrix::identity(ctx, m - 4);
        let in4 = ConstMatrix::identity(ctx, n - 4);
        let s_fin = ConstMatrix::block_diag(ctx, &[&out.s, &im4]).mul(&s6);
        let t_fin = t5.mul(&ConstMatrix::block_diag(ctx, &[&out.t, &in4]));
        return finalize(h, 4, s_fin, t_fin, Some(out.c), wit);
    }
    wit.branch("degenerate diagonal");
    beta8(h, s6, t5, wit)
}

/// Degenerate continuation: components are (f₁, f₂, f₃, ½x₁², 0, …). Four
/// exits, tried in order: a constant dependency among the leading rows gives
/// case 1; a constant relation among the four leading columns gives case 5;
/// a rank-2 leading trio reduces through the rank-2 engine; a rank-3 trio
/// forces a second square ½z² into the span, which yields case 2.
fn beta8(
    h: &PolyMap,
    s6: ConstMatrix,
    t5: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let (m, n) = (h.m(), h.n());
    let cur = conjugate(h, &s6, &t5)?;
    let j = jacobian(&cur);
    let all_cols: Vec<usize> = (0..n).collect();
    let top = j.submatrix(&[0, 1, 2], &all_cols);
    if let Some(u) = constant_kernel(&top, KernelSide::Left).into_iter().next() {
        wit.branch("leading rows admit a constant dependency");
        let p = u
            .iter()
            .rposition(|e| !e.is_zero())
            .expect("kernel vector is nonzero");
        let mut ufull = u;
        ufull.resize(m, ctx.zero());
        wit.kernel_vectors.push(ufull.clone());
        let s7 = row_replacement(ctx, m, p, &ufull).mul(&s6);
        let g = conjugate(h, &s7, &t5)?;
        let nz = nonzero_rows(&jacobian(&g));
        if nz.len() > 3 {
            return Err(Error::ContractViolation(
                "row dependency did not reduce to three rows".into(),
            ));
        }
        return finalize(h, 1, front_row_perm(ctx, m, &nz).mul(&s7), t5, None, wit);
    }
    let all_rows: Vec<usize> = (0..m).collect();
    let lead = j.submatrix(&all_rows, &[0, 1, 2, 3]);
    if let Some(w) = constant_kernel(&lead, KernelSide::Right).into_iter().next() {
        wit.branch("leading columns admit a constant relation");
        if !w[0].is_zero() {
            // row four reads x₁·w₁ = 0
            return Err(Error::ContractViolation(
                "column relation touches the first variable".into(),
            ));
        }
        let p = w
            .iter()
            .rposition(|e| !e.is_zero())
            .expect("kernel vector is nonzero");
        let mut wfull = w;
        wfull.resize(n, ctx.zero());
        wit.kernel_vectors.push(wfull.clone());
        let mut tp = ConstMatrix::identity(ctx, n);
        for (row, val) in wfull.iter().enumerate() {
            tp.set(row, p, val.clone());
        }
        let t7 = t5.mul(&tp);
        let g = conjugate(h, &s6, &t7)?;
        let nzc = nonzero_cols(&jacobian(&g));
        if nzc.len() > 3 {
            return Err(Error::ContractViolation(
                "column relation did not reduce to three columns".into(),
            ));
        }
        let t_fin = t7.mul(&front_col_perm(ctx, n, &nzc));
        return finalize(h, 5, s6, t_fin, None, wit);
    }
    let trio = PolyMap::new(ctx, n, cur.comps()[..3].to_vec())?;
    let rho = rank_kx(&jacobian(&trio));
    match rho {
        2 => beta8_low_trio(h, trio, s6, t5, wit),
        3 => beta8_full_trio(h, &cur, s6, t5, wit),
        _ => Err(Error::ContractViolation(format!(
            "leading trio has rank {} after the degenerate diagonal",
            rho
        ))),
    }
}

/// Leading trio of rank 2: run the rank-2 engine on it. Its row bound gives
/// case 1; the two-variable column form leaves the fourth component as
/// ½ℓ′(x)², which a final substitution sends to ½x₃² for case 5.
fn beta8_low_trio(
    h: &PolyMap,
    trio: PolyMap,
    s6: ConstMatrix,
    t5: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let (m, n) = (h.m(), h.n());
    let rec = classify_rkr(&trio)?;
    let rest = ConstMatrix::identity(ctx, m - 3);
    let s8 = ConstMatrix::block_diag(ctx, &[&rec.s, &rest]).mul(&s6);
    let t8 = t5.mul(&rec.t);
    match rec.form {
        RkrForm::RowBound => {
            wit.branch("rank-2 leading trio met its row bound");
            let g = conjugate(h, &s8, &t8)?;
            let nz = nonzero_rows(&jacobian(&g));
            if nz.len() > 3 {
                return Err(Error::ContractViolation(
                    "row-bounded trio left more than three rows".into(),
                ));
            }
            finalize(h, 1, front_row_perm(ctx, m, &nz).mul(&s8), t8, None, wit)
        }
        RkrForm::ColsNonzeroR => {
            wit.branch("rank-2 leading trio lives on two variables");
            // the fourth component became ½ℓ′², ℓ′ the first row of rec.t
            let lprime: Vec<FieldElem> = rec.t.row(0).to_vec();
            match (2..n).find(|&jj| !lprime[jj].is_zero()) {
                None => finalize(h, 5, s8, t8, None, wit),
                Some(j0) => {
                    // send ℓ′ to x₃ while fixing x₁ and x₂
                    let mut lam = ConstMatrix::zero(ctx, n, n);
                    lam.set(0, 0, ctx.one());
                    lam.set(1, 1, ctx.one());
                    for (jj, val) in lprime.iter().enumerate() {
                        lam.set(2, jj, val.clone());
                    }
                    let mut rr = 3;
                    for jj in (2..n).filter(|&jj| jj != j0) {
                        lam.set(rr, jj, ctx.one());
                        rr += 1;
                    }
                    finalize(h, 5, s8, t8.mul(&lam.inverse()?), None, wit)
                }
            }
        }
        RkrForm::ColsNonzeroRp1Char2 => Err(Error::ContractViolation(
            "characteristic-2 column form reached in odd characteristic".into(),
        )),
    }
}

/// Leading trio of rank 3: W = ⟨f₁, f₂, f₃, x₁²⟩ is four-dimensional. The
/// space Z = {ℓ linear in x₁…x₄ : x₁·ℓ ∈ W} contains x₁ and at least one
/// further direction; searching the quotient for a z with z² ∈ W completes
/// (½x₁², x₁z, ½z²) inside W and a final mix lands in case 2.
fn beta8_full_trio(
    h: &PolyMap,
    cur: &PolyMap,
    s6: ConstMatrix,
    t5: ConstMatrix,
    mut wit: CaseWitnesses,
) -> Result<CaseReport> {
    let ctx = h.ctx();
    let (m, n) = (h.m(), h.n());
    wit.branch("leading trio has full rank");
    let mons = sym2_monomials(n, 4, false);
    let nm = mons.len();
    let mut wrows: Vec<Vec<FieldElem>> = Vec::with_capacity(4);
    for i in 0..3 {
        let Some(rowv) = coeff_vector(cur.comp(i), &mons) else {
            return Err(Error::ContractViolation(
                "a leading component leaves the four-variable space".into(),
            ));
        };
        wrows.push(rowv);
    }
    let x1 = Poly::var(ctx, n, 0);
    let x1sq = x1.mul(&x1);
    wrows.push(coeff_vector(&x1sq, &mons).expect("x₁² lies in the basis"));
    let (ew, dw) = row_reduce_transform(ctx, &wrows);
    if dw < 4 {
        // x₁² already lies in the span of the trio: clear the fourth component
        wit.branch("fourth component is redundant");
        let amat = ConstMatrix::from_fn(ctx, nm, 3, |i, jj| wrows[jj][i].clone());
        let lam = amat.solve(&wrows[3]).ok_or_else(|| {
            Error::ContractViolation("dependent span without an explicit combination".into())
        })?;
        let minus_half = ctx.from_ratio(-1, 2);
        let mut u = vec![ctx.zero(); m];
        for i in 0..3 {
            u[i] = lam[i].mul(&minus_half);
        }
        u[3] = ctx.one();
        let s9 = row_replacement(ctx, m, 3, &u).mul(&s6);
        let g = conjugate(h, &s9, &t5)?;
        let nz = nonzero_rows(&jacobian(&g));
        if nz.len() > 3 {
            return Err(Error::ContractViolation(
                "clearing the redundant square left more than three rows".into(),
            ));
        }
        return finalize(h, 1, front_row_perm(ctx, m, &nz).mul(&s9), t5, None, wit);
    }
    // Z as the kernel of (ℓ, μ) ↦ x₁·ℓ − Σ μ_k·w_k, projected to its ℓ-part
    let mut zsys = ConstMatrix::zero(ctx, nm, 8);
    for jj in 0..4 {
        let prod = x1.mul(&Poly::var(ctx, n, jj));
        let col = coeff_vector(&prod, &mons).expect("x₁xⱼ lies in the basis");
        for i in 0..nm {
            zsys.set(i, jj, col[i].clone());
        }
    }
    for kk in 0..4 {
        for i in 0..nm {
            zsys.set(i, 4 + kk, wrows[kk][i].neg());
        }
    }
    let zraw: Vec<Vec<FieldElem>> = zsys
        .kernel()
        .into_iter()
        .map(|kv| kv[..4].to_vec())
        .collect();
    if zraw.is_empty() {
        return Err(Error::ContractViolation(
            "multiplier space lost the first variable".into(),
        ));
    }
    let (ez, dz) = row_reduce_transform(ctx, &zraw);
    if dz == 0 || dz > 3 {
        return Err(Error::ContractViolation(format!(
            "multiplier space has dimension {}",
            dz
        )));
    }
    let zmat = ConstMatrix::from_rows(ctx, zraw);
    let zred = ez.mul(&zmat);
    // quotient representatives modulo ⟨x₁⟩: reduce {e₁} ∪ Z-basis together
    let mut qrows: Vec<Vec<FieldElem>> = vec![{
        let mut e1 = vec![ctx.zero(); 4];
        e1[0] = ctx.one();
        e1
    }];
    for i in 0..dz {
        qrows.push(zred.row(i).to_vec());
    }
    let (eq, dq) = row_reduce_transform(ctx, &qrows);
    if dq != dz {
        return Err(Error::ContractViolation(
            "first variable fell out of the multiplier space".into(),
        ));
    }
    let qmat = ConstMatrix::from_rows(ctx, qrows);
    let qred = eq.mul(&qmat);
    let reps: Vec<Vec<FieldElem>> = (1..dq).map(|i| qred.row(i).to_vec()).collect();
    if reps.is_empty() {
        return Err(Error::ContractViolation(
            "no multiplier candidate besides the first variable".into(),
        ));
    }
    // residuals modulo W through the echelon rows of the reduced W-basis
    let wmat = ConstMatrix::from_rows(ctx, wrows.clone());
    let wred = ew.mul(&wmat);
    let mut pivots = Vec::with_capacity(4);
    for i in 0..4 {
        let pc = (0..nm)
            .find(|&cc| !wred.get(i, cc).is_zero())
            .ok_or_else(|| Error::ContractViolation("echelon row of W vanished".into()))?;
        pivots.push(pc);
    }
    let residual = |qv: &[FieldElem]| -> Vec<FieldElem> {
        let mut r = qv.to_vec();
        for (i, &pc) in pivots.iter().enumerate() {
            if r[pc].is_zero() {
                continue;
            }
            let f = r[pc].div(wred.get(i, pc)).neg();
            for kk in 0..nm {
                r[kk] = r[kk].add(&wred.get(i, kk).mul(&f));
            }
        }
        r
    };
    let lin = |zv: &[FieldElem]| -> Poly {
        let mut acc = Poly::zero(ctx, n);
        for (i, cval) in zv.iter().enumerate() {
            if !cval.is_zero() {
                acc = acc.add(&Poly::var(ctx, n, i).scale(cval));
            }
        }
        acc
    };
    let sq_coeffs = |zv: &[FieldElem]| -> Vec<FieldElem> {
        let p = lin(zv);
        coeff_vector(&p.mul(&p), &mons).expect("squares of x₁…x₄ forms lie in the basis")
    };
    let z: Vec<FieldElem> = if reps.len() == 1 {
        let q0 = residual(&sq_coeffs(&reps[0]));
        if q0.iter().all(|e| e.is_zero()) {
            reps[0].clone()
        } else {
            return Err(Error::ContractViolation(
                "single multiplier direction has no square in W".into(),
            ));
        }
    } else {
        let z1p = lin(&reps[0]);
        let z2p = lin(&reps[1]);
        let two = ctx.from_i64(2);
        let q1 = residual(&coeff_vector(&z1p.mul(&z1p), &mons).expect("basis"));
        let q2 = residual(&coeff_vector(&z1p.mul(&z2p).scale(&two), &mons).expect("basis"));
        let q3 = residual(&coeff_vector(&z2p.mul(&z2p), &mons).expect("basis"));
        let check = |t: &FieldElem| -> bool {
            (0..nm).all(|i| {
                q1[i]
                    .mul(t)
                    .mul(t)
                    .add(&q2[i].mul(t))
                    .add(&q3[i])
                    .is_zero()
            })
        };
        let combine = |t: &FieldElem| -> Vec<FieldElem> {
            (0..4)
                .map(|i| reps[0][i].mul(t).add(&reps[1][i]))
                .collect()
        };
        if q1.iter().all(|e| e.is_zero()) {
            reps[0].clone()
        } else if ctx.cardinality().is_some() {
            match ctx.elements().find(|t| check(t)) {
                Some(t) => combine(&t),
                None => {
                    return Err(Error::ContractViolation(
                        "no multiplier combination has its square in W".into(),
                    ))
                }
            }
        } else {
            let i0 = (0..nm).position(|i| !q1[i].is_zero()).expect("q1 nonzero");
            let b = q2[i0].div(&q1[i0]);
            let c0 = q3[i0].div(&q1[i0]);
            let disc = b.mul(&b).sub(&c0.mul(&ctx.from_i64(4)));
            let half = ctx.from_ratio(1, 2);
            let root = disc.sqrt().and_then(|sq| {
                let r1 = b.neg().add(&sq).mul(&half);
                let r2 = b.neg().sub(&sq).mul(&half);
                if check(&r1) {
                    Some(r1)
                } else if check(&r2) {
                    Some(r2)
                } else {
                    None
                }
            });
            match root {
                Some(t) => combine(&t),
                None => {
                    return Err(Error::ContractViolation(
                        "no multiplier combination has its square in W".into(),
                    ))
                }
            }
        }
    };
    let mut zfull = z.clone();
    zfull.resize(n, ctx.zero());
    wit.kernel_vectors.push(zfull);
    wit.branch("second square found in W");
    // coordinates of (½x₁², x₁z, ½z²) in the component basis (f₁, f₂, f₃, ½x₁²)
    let half = ctx.from_ratio(1, 2);
    let amat = ConstMatrix::from_fn(ctx, nm, 4, |i, jj| wrows[jj][i].clone());
    let zp = lin(&z);
    let targets = [
        coeff_vector(&x1sq.scale(&half), &mons).expect("basis"),
        coeff_vector(&x1.mul(&zp), &mons).expect("basis"),
        coeff_vector(&zp.mul(&zp).scale(&half), &mons).expect("basis"),
    ];
    let mut s4 = ConstMatrix::zero(ctx, 4, 4);
    for (row, tv) in targets.iter().enumerate() {
        let lam = amat.solve(tv).ok_or_else(|| {
            Error::ContractViolation("a pencil member escaped the span of W".into())
        })?;
        for jj in 0..3 {
            s4.set(row + 1, jj, lam[jj].clone());
        }
        s4.set(row + 1, 3, lam[3].add(&lam[3]));
    }
    let mut completed = false;
    for i in 0..4 {
        s4.set(0, i, ctx.one());
        if s4.is_invertible() {
            completed = true;
            break;
        }
        s4.set(0, i, ctx.zero());
    }
    if !completed {
        return Err(Error::ContractViolation(
            "no unit vector completes the pencil mix".into(),
        ));
    }
    let im4 = ConstMatrix::identity(ctx, m - 4);
    let s9 = ConstMatrix::block_diag(ctx, &[&s4, &im4]).mul(&s6);
    // substitution fixing x₁ and pulling z back to x₂
    let j0 = match (1..4).find(|&i| !z[i].is_zero()) {
        Some(j0) => j0,
        None => {
            return Err(Error::ContractViolation(
                "multiplier representative collapsed onto x₁".into(),
            ))
        }
    };
    let mut lam2 = ConstMatrix::zero(ctx, n, n);
    lam2.set(0, 0, ctx.one());
    for (i, val) in z.iter().enumerate() {
        lam2.set(1, i, val.clone());
    }
    let mut rr = 2;
    for jj in (1..n).filter(|&jj| jj != j0) {
        lam2.set(rr, jj, ctx.one());
        rr += 1;
    }
    let t9 = t5.mul(&lam2.inverse()?);
    finalize(h, 2, s9, t9, None, wit)
}

/// Truncate a polynomial to its first `new_n` variables; errors if any term
/// actually uses a later variable.
fn restrict_poly(p: &Poly, new_n: usize) -> Result<Poly> {
    let mut terms = Vec::with_capacity(p.num_terms());
    for (mon, c) in p.terms() {
        let exps = mon.exponents();
        if exps.iter().skip(new_n).any(|&e| e > 0) {
            return Err(Error::ContractViolation(
                "restriction dropped a used variable".into(),
            ));
        }
        terms.push((Monomial::from_exponents(exps[..new_n].to_vec()), c.clone()));
    }
    Ok(Poly::from_terms(p.ctx(), new_n, terms))
}

/// Build the report, relabelling to the lowest case whose predicate the
/// final conjugate satisfies, and re-verify everything before returning.
fn finalize(
    h: &PolyMap,
    case: u8,
    s: ConstMatrix,
    t: ConstMatrix,
    c: Option<FieldElem>,
    witnesses: CaseWitnesses,
) -> Result<CaseReport> {
    let ht = conjugate(h, &s, &t)?;
    let j = jacobian(&ht);
    let mut chosen = case;
    for k in 1..=case {
        let cc = if k == 4 { c.as_ref() } else { None };
        if case_shape(&ht, &j, k, cc).is_ok() {
            chosen = k;
            break;
        }
    }
    let report = CaseReport {
        case: chosen,
        s,
        t,
        c: if chosen == 4 { c } else { None },
        witnesses,
    };
    report.verify(h)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::generators::{quartet_family, random_conjugate, random_map_of_rank};
    use crate::matpoly::PolyMatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    // independent rank oracle: cofactor-expansion determinants of all k×k
    // submatrices, largest k with a nonvanishing minor
    fn det_poly(m: &PolyMatrix, rows: &[usize], cols: &[usize]) -> Poly {
        let ctx = m.ctx();
        if rows.is_empty() {
            return Poly::from_terms(ctx, m.nvars(), [(Monomial::one(m.nvars()), ctx.one())]);
        }
        let mut acc = Poly::zero(ctx, m.nvars());
        for (k, &c) in cols.iter().enumerate() {
            let entry = m.get(rows[0], c);
            if entry.is_zero() {
                continue;
            }
            let rest_cols: Vec<usize> = cols.iter().copied().filter(|&cc| cc != c).collect();
            let term = entry.mul(&det_poly(m, &rows[1..], &rest_cols));
            acc = if k % 2 == 0 {
                acc.add(&term)
            } else {
                acc.sub(&term)
            };
        }
        acc
    }

    fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
        if k > n {
            return vec![];
        }
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.clone());
            let mut i = k;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                if idx[i] != i + n - k {
                    idx[i] += 1;
                    for jj in i + 1..k {
                        idx[jj] = idx[jj - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn rank_by_minors(m: &PolyMatrix) -> usize {
        let rmax = m.rows().min(m.cols());
        for k in (1..=rmax).rev() {
            for rows in combinations(m.rows(), k) {
                for cols in combinations(m.cols(), k) {
                    if !det_poly(m, &rows, &cols).is_zero() {
                        return k;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn quartet_family_lands_in_case_four() {
        let ctx = make_field("Q").unwrap();
        let h = quartet_family(&ctx, &ctx.from_i64(2));
        let rep = classify_rk3(&h).unwrap();
        assert_eq!(rep.case, 4);
        assert!(!rep.c.clone().unwrap().is_zero());
        assert_eq!(rep, classify_rk3(&h).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let (g, _, _) = random_conjugate(&h, &mut rng);
        assert_eq!(classify_rk3(&g).unwrap().case, 4);
    }

    #[test]
    fn quartet_family_over_gf7() {
        let ctx = make_field("GF(7)").unwrap();
        let h = quartet_family(&ctx, &ctx.from_i64(3));
        let rep = classify_rk3(&h).unwrap();
        assert_eq!(rep.case, 4);
    }

    #[test]
    fn three_active_rows_report_case_one() {
        let ctx = make_field("Q").unwrap();
        let v = |i: usize| Poly::var(&ctx, 6, i);
        let z = || Poly::zero(&ctx, 6);
        let comps = vec![v(3).mul(&v(3)), v(4).mul(&v(4)), v(5).mul(&v(5)), z(), z(), z()];
        let h = PolyMap::new(&ctx, 6, comps).unwrap();
        let rep = classify_rk3(&h).unwrap();
        assert_eq!(rep.case, 1);
    }

    #[test]
    fn column_pair_shape_reports_case_two() {
        let ctx = make_field("Q").unwrap();
        let half = ctx.from_ratio(1, 2);
        let v = |i: usize| Poly::var(&ctx, 4, i);
        let comps = vec![
            v(2).mul(&v(3)),
            v(0).mul(&v(0)).scale(&half),
            v(0).mul(&v(1)),
            v(1).mul(&v(1)).scale(&half),
        ];
        let h = PolyMap::new(&ctx, 4, comps).unwrap();
        assert_eq!(rank_by_minors(&jacobian(&h)), 3);
        assert_eq!(classify_rk3(&h).unwrap().case, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (g, _, _) = random_conjugate(&h, &mut rng);
        assert_eq!(classify_rk3(&g).unwrap().case, 2);
    }

    #[test]
    fn wrong_rank_is_rejected() {
        let ctx = make_field("Q").unwrap();
        let v = |i: usize| Poly::var(&ctx, 4, i);
        let low = PolyMap::new(
            &ctx,
            4,
            vec![v(0).mul(&v(0)), v(1).mul(&v(1)), Poly::zero(&ctx, 4)],
        )
        .unwrap();
        match classify_rk3(&low) {
            Err(Error::RankMismatch {
                expected: 3,
                found: 2,
            }) => {}
            other => panic!("expected rank mismatch, got {:?}", other),
        }
        let high = PolyMap::new(
            &ctx,
            4,
            vec![
                v(0).mul(&v(0)),
                v(1).mul(&v(1)),
                v(2).mul(&v(2)),
                v(3).mul(&v(3)),
            ],
        )
        .unwrap();
        match classify_rk3(&high) {
            Err(Error::RankMismatch {
                expected: 3,
                found: 4,
            }) => {}
            other => panic!("expected rank mismatch, got {:?}", other),
        }
    }

    #[test]
    fn gf2_mixed_trio_with_squares_reports_case_three() {
        let ctx = make_field("GF(2)").unwrap();
        let v = |i: usize| Poly::var(&ctx, 4, i);
        let comps = vec![
            v(0).mul(&v(3)),
            v(0).mul(&v(1)).add(&v(3).mul(&v(3))),
            v(0).mul(&v(2)),
            v(1).mul(&v(2)).add(&v(0).mul(&v(0))),
        ];
        let h = PolyMap::new(&ctx, 4, comps).unwrap();
        assert_eq!(rank_by_minors(&jacobian(&h)), 3);
        let rep = classify_rk3(&h).unwrap();
        assert_eq!(rep.case, 3);
    }

    #[test]
    fn three_essential_variables_report_case_five() {
        for name in ["Q", "GF(7)"] {
            let ctx = make_field(name).unwrap();
            let half = ctx.from_ratio(1, 2);
            let v = |i: usize| Poly::var(&ctx, 3, i);
            let comps = vec![
                v(0).mul(&v(0)).scale(&half),
                v(1).mul(&v(2)),
                v(0).mul(&v(2)),
                v(0).mul(&v(1)).add(&v(2).mul(&v(2)).scale(&half)),
            ];
            let h = PolyMap::new(&ctx, 3, comps).unwrap();
            assert_eq!(rank_by_minors(&jacobian(&h)), 3);
            assert_eq!(classify_rk3(&h).unwrap().case, 5, "field {}", name);
        }
    }

    #[test]
    fn gf4_char_two_flow_succeeds() {
        let ctx = make_field("GF(2,2)").unwrap();
        let v = |i: usize| Poly::var(&ctx, 4, i);
        let comps = vec![
            v(0).mul(&v(1)),
            v(2).mul(&v(3)),
            v(0).mul(&v(3)).add(&v(1).mul(&v(2))),
            v(0).mul(&v(2)),
        ];
        let h = PolyMap::new(&ctx, 4, comps).unwrap();
        assert_eq!(rank_by_minors(&jacobian(&h)), 3);
        let rep = classify_rk3(&h).unwrap();
        assert!(matches!(rep.case, 1 | 3 | 6), "case {}", rep.case);
        assert_eq!(rep, classify_rk3(&h).unwrap());
    }

    #[test]
    fn gf2_redundant_rows_are_eliminated() {
        let ctx = make_field("GF(2)").unwrap();
        let v = |i: usize| Poly::var(&ctx, 4, i);
        let comps = vec![
            v(0).mul(&v(1)),
            v(0).mul(&v(2)),
            v(1).mul(&v(2)),
            v(0).mul(&v(1)).add(&v(1).mul(&v(2))),
            v(0).mul(&v(3)),
            v(3).mul(&v(3)),
        ];
        let h = PolyMap::new(&ctx, 4, comps).unwrap();
        assert_eq!(rank_by_minors(&jacobian(&h)), 3);
        let rep = classify_rk3(&h).unwrap();
        assert!(matches!(rep.case, 1 | 3 | 6), "case {}", rep.case);
    }

    #[test]
    fn random_rank_three_maps_classify_everywhere() {
        for name in ["GF(2)", "GF(5)", "Q"] {
            let ctx = make_field(name).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(1729);
            for m in 4..=6 {
                let h = random_map_of_rank(&ctx, 5, m, 3, &mut rng);
                let rep = classify_rk3(&h)
                    .unwrap_or_else(|e| panic!("field {} m {}: {}", name, m, e));
                assert_eq!(rep, classify_rk3(&h).unwrap(), "field {} m {}", name, m);
            }
        }
    }

    #[test]
    fn gf3_narrow_maps_classify_or_report_small_field() {
        let ctx = make_field("GF(3)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..6 {
            let h = random_map_of_rank(&ctx, 4, 4, 3, &mut rng);
            match classify_rk3(&h) {
                Ok(rep) => assert!(matches!(rep.case, 1..=6)),
                Err(Error::FieldTooSmall { .. }) => {}
                Err(e) => panic!("unexpected error: {}", e),
            }
        }
    }
}
