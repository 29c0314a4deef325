//! General-rank normalization. `classify_rkr` conjugates a quadratic
//! homogeneous map by invertible constant S, T so that the Jacobian of
//! S·H(T·x) either has at most r(r−1)/2 + 1 nonzero rows, or is supported on
//! the first r columns (characteristic ≠ 2), or on the first r+1 columns
//! (characteristic 2); in every branch the number of nonzero rows is at most
//! r(r+1)/2. Fields too small for the positioning lemma are handled by an
//! elimination descent that never extends the field.

use crate::error::{Error, Result};
use crate::maps::{conjugate, jacobian, PolyMap};
use crate::matpoly::{
    columns_pairwise_dependent_over_k, constant_kernel, constant_vectors_in_colspace,
    irlem_decompose, rank_kx, rows_pairwise_dependent_over_k, ConstMatrix, KernelSide,
    PolyMatrix,
};

use super::{
    bound_form1, bound_universal, coeff_vector, jrow_coeffs, nonzero_rows,
    row_reduce_transform, row_replacement, smul, sym2_monomials, RkrForm, RkrReport,
};

/// Normalize a quadratic homogeneous map according to its Jacobian rank.
/// The returned report is fully re-verified before being handed back.
pub fn classify_rkr(h: &PolyMap) -> Result<RkrReport> {
    if !h.is_quadratic_homogeneous() {
        return Err(Error::NotQuadraticHomogeneous);
    }
    let ctx = h.ctx();
    let j = jacobian(h);
    let r = rank_kx(&j);
    let (s, t, form) = if r == 0 {
        // zero Jacobian: nothing to move
        (
            ConstMatrix::identity(ctx, h.m()),
            ConstMatrix::identity(ctx, h.n()),
            RkrForm::RowBound,
        )
    } else if r == 1 {
        // gradients of quadratics that are dependent over K(x) are already
        // dependent over K (degree-0 ratios are constant), so plain row
        // reduction of the Jacobian rows reaches the single-row bound
        let rows: Vec<Vec<_>> = (0..h.m()).map(|i| jrow_coeffs(&j, i)).collect();
        let (e, rank) = row_reduce_transform(ctx, &rows);
        if rank != 1 {
            return Err(Error::ContractViolation(
                "rank-1 Jacobian with K-independent rows".into(),
            ));
        }
        (e, ConstMatrix::identity(ctx, h.n()), RkrForm::RowBound)
    } else {
        match main_flow(h, r) {
            Ok(st) => st,
            Err(Error::FieldTooSmall { .. }) => descent_flow(h, r)?,
            Err(e) => return Err(e),
        }
    };
    finish(h, r, s, t, form)
}

/// Assemble and verify the report.
fn finish(
    h: &PolyMap,
    r: usize,
    s: ConstMatrix,
    t: ConstMatrix,
    form: RkrForm,
) -> Result<RkrReport> {
    let ht = conjugate(h, &s, &t)?;
    let count = nonzero_rows(&jacobian(&ht)).len();
    let report = RkrReport {
        r,
        s,
        t,
        form,
        nonzero_row_count: count,
    };
    report.verify(h)?;
    Ok(report)
}

/// Position the Jacobian with the rank lemma, then dispatch on the shape of
/// the off-diagonal blocks.
fn main_flow(h: &PolyMap, r: usize) -> Result<(ConstMatrix, ConstMatrix, RkrForm)> {
    let j = jacobian(h);
    let dec = irlem_decompose(&j)?;
    debug_assert_eq!(dec.r, r);
    let ht = conjugate(h, &dec.s, &dec.t)?;
    let (s2, t2, form) = position_flow(&ht, r)?;
    Ok((s2.mul(&dec.s), dec.t.mul(&t2), form))
}

/// Dispatch for a map whose Jacobian is in the positioned block form
/// [[A, B], [C, D]] with D = 0 and C·B = 0 (A is r×r and invertible over
/// K(x)).
fn position_flow(ht: &PolyMap, r: usize) -> Result<(ConstMatrix, ConstMatrix, RkrForm)> {
    let ctx = ht.ctx();
    let (m, n) = (ht.m(), ht.n());
    let char2 = ctx.characteristic() == 2;
    let j = jacobian(ht);
    let bl = j.block_split(r);
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

    // (A) a constant vector u in the column space of B lifts to (u; 0) in the
    // column space of the whole Jacobian because D = 0; splitting it off into
    // the first component leaves a tail of rank r−1.
    if let Some(u) = constant_vectors_in_colspace(&bl.b).into_iter().next() {
        let mut uhat: Vec<_> = u.clone();
        uhat.resize(m, ctx.zero());
        let p = uhat
            .iter()
            .position(|e| !e.is_zero())
            .expect("column-space vector is nonzero");
        // V = [û | e_j (j ≠ p)], so V⁻¹·û = e₁
        let mut v = ConstMatrix::zero(ctx, m, m);
        for (i, e) in uhat.iter().enumerate() {
            v.set(i, 0, e.clone());
        }
        for (col, jj) in (0..m).filter(|&jj| jj != p).enumerate() {
            v.set(jj, col + 1, ctx.one());
        }
        let uinv = v.inverse()?;
        let mixed = smul(&uinv, ht);
        let tail = PolyMap::new(ctx, n, mixed.comps()[1..].to_vec())?;
        if rank_kx(&jacobian(&tail)) != r - 1 {
            return Err(Error::ContractViolation(
                "splitting off a column-space vector did not drop the rank by one".into(),
            ));
        }
        let rec = classify_rkr(&tail)?;
        if rec.nonzero_row_count > bound_universal(r - 1) {
            return Err(Error::ContractViolation(
                "tail normalization exceeds its universal row bound".into(),
            ));
        }
        let one = ConstMatrix::identity(ctx, 1);
        let s2 = ConstMatrix::block_diag(ctx, &[&one, &rec.s]).mul(&uinv);
        return Ok((s2, rec.t, RkrForm::RowBound));
    }

    // (B) rows of B pairwise dependent over K: a nonzero such B would put a
    // constant vector in its column space, so B = 0 here; with D = 0 the
    // Jacobian is supported on the first r columns.
    if rows_pairwise_dependent_over_k(&bl.b).all_dependent {
        if !bl.b.is_zero() {
            return Err(Error::ContractViolation(
                "pairwise-dependent nonzero B should have produced a constant column-space vector"
                    .into(),
            ));
        }
        if char2 {
            // impossible: J·x = 2H = 0 would force A·(x₁..x_r) = 0 with A
            // invertible over K(x)
            return Err(Error::ContractViolation(
                "characteristic 2 forbids a zero B block in position".into(),
            ));
        }
        let s2 = component_span_reducer(ht, r, false)?;
        return Ok((s2, ConstMatrix::identity(ctx, n), RkrForm::ColsNonzeroR));
    }

    // (C) characteristic 2 with rank B ≤ 1: the columns of B are pairwise
    // dependent over K, so constant column operations leave a single nonzero
    // trailing column.
    if char2 && rank_kx(&bl.b) <= 1 {
        let coldep = columns_pairwise_dependent_over_k(&bl.b);
        if !coldep.all_dependent {
            return Err(Error::ContractViolation(
                "rank ≤ 1 B block without pairwise-dependent columns".into(),
            ));
        }
        let u2 = single_column_reducer(&bl.b)?;
        let ir = ConstMatrix::identity(ctx, r);
        let t2 = ConstMatrix::block_diag(ctx, &[&ir, &u2]);
        let moved = conjugate(ht, &ConstMatrix::identity(ctx, m), &t2)?;
        let s2 = component_span_reducer(&moved, r + 1, true)?;
        return Ok((s2, t2, RkrForm::ColsNonzeroRp1Char2));
    }

    // (D) otherwise the tail components have rank ≤ r−2 and recursion on them
    // meets the row bound exactly.
    if m == r {
        // no tail at all; r rows satisfy the row bound for every r
        return Ok((
            ConstMatrix::identity(ctx, m),
            ConstMatrix::identity(ctx, n),
            RkrForm::RowBound,
        ));
    }
    let rc = rank_kx(&bl.c);
    if rc + 2 > r {
        return Err(Error::ContractViolation(format!(
            "tail block of rank {} is too large for the recursion at rank {}",
            rc, r
        )));
    }
    let tail = PolyMap::new(ctx, n, ht.comps()[r..].to_vec())?;
    let rec = classify_rkr(&tail)?;
    if rec.nonzero_row_count > bound_universal(rc) {
        return Err(Error::ContractViolation(
            "tail normalization exceeds its universal row bound".into(),
        ));
    }
    let ir = ConstMatrix::identity(ctx, r);
    let s2 = ConstMatrix::block_diag(ctx, &[&ir, &rec.s]);
    Ok((s2, rec.t, RkrForm::RowBound))
}

/// Row-reduce the components of a map supported on the first `active`
/// variables so that all dependent components become zero. With
/// `jacobian_basis` the reduction works on the Jacobian-visible coefficients
/// (mixed monomials only, characteristic 2), leaving squares behind.
fn component_span_reducer(ht: &PolyMap, active: usize, jacobian_basis: bool) -> Result<ConstMatrix> {
    let ctx = ht.ctx();
    let mons = sym2_monomials(ht.n(), active, jacobian_basis);
    let rows: Vec<Vec<_>> = ht
        .comps()
        .iter()
        .map(|p| {
            if jacobian_basis {
                // squares may live outside the basis; project instead of
                // demanding full support
                Ok(mons.iter().map(|mo| p.coefficient(mo)).collect())
            } else {
                coeff_vector(p, &mons).ok_or_else(|| {
                    Error::ContractViolation(
                        "component has support outside the claimed variables".into(),
                    )
                })
            }
        })
        .collect::<Result<_>>()?;
    let (e, _rank) = row_reduce_transform(ctx, &rows);
    Ok(e)
}

/// For a block with pairwise K-dependent columns, build an invertible
/// constant U with B·U nonzero only in its first column: every nonzero
/// column is a constant multiple μ_c of the first nonzero one, so U's
/// columns are e_pivot followed by e_c − μ_c·e_pivot.
pub(super) fn single_column_reducer(b: &PolyMatrix) -> Result<ConstMatrix> {
    let ctx = b.ctx();
    let w = b.cols();
    let Some(pivot) = (0..w).find(|&c| !b.col(c).iter().all(|p| p.is_zero())) else {
        return Ok(ConstMatrix::identity(ctx, w)); // zero block: nothing to move
    };
    let dep = columns_pairwise_dependent_over_k(b);
    let mut mu = vec![ctx.zero(); w];
    for (c, slot) in mu.iter_mut().enumerate() {
        if c == pivot || b.col(c).iter().all(|p| p.is_zero()) {
            continue;
        }
        let (i, _, a, bb) = dep
            .witnesses
            .iter()
            .find(|(i, jj, _, _)| (*i == pivot && *jj == c) || (*i == c && *jj == pivot))
            .cloned()
            .ok_or_else(|| {
                Error::ContractViolation("missing pairwise dependence witness".into())
            })?;
        // a·col_i + bb·col_j ≡ 0 with both columns nonzero forces a, bb ≠ 0
        if a.is_zero() || bb.is_zero() {
            return Err(Error::ContractViolation(
                "degenerate pairwise dependence witness".into(),
            ));
        }
        // col_c = μ_c · col_pivot
        *slot = if i == pivot { a.div(&bb).neg() } else { bb.div(&a).neg() };
    }
    let mut u = ConstMatrix::zero(ctx, w, w);
    u.set(pivot, 0, ctx.one());
    for (slot, c) in (0..w).filter(|&c| c != pivot).enumerate() {
        u.set(c, slot + 1, ctx.one());
        u.set(pivot, slot + 1, mu[c].neg());
    }
    let moved = b.mul_const_right(&u);
    if (1..w).any(|c| !moved.col(c).iter().all(|p| p.is_zero())) {
        return Err(Error::ContractViolation(
            "column reduction left a trailing nonzero column".into(),
        ));
    }
    Ok(u)
}

/// Elimination descent for fields too small for the positioning lemma:
/// repeatedly kill K-dependent Jacobian rows (component mixes) and K-kernel
/// columns (variable mixes); at termination one of the three shapes must
/// hold because the active rows and columns stay independent over every
/// extension.
fn descent_flow(h: &PolyMap, r: usize) -> Result<(ConstMatrix, ConstMatrix, RkrForm)> {
    let ctx = h.ctx();
    let (m, n) = (h.m(), h.n());
    let char2 = ctx.characteristic() == 2;
    let mut s = ConstMatrix::identity(ctx, m);
    let mut t = ConstMatrix::identity(ctx, n);
    let mut m_act = m;
    let mut n_act = n;
    loop {
        let cur = conjugate(h, &s, &t)?;
        let j = jacobian(&cur);
        // rows: constant left kernel of the active row block
        let row_block = j.submatrix(&(0..m_act).collect::<Vec<_>>(), &(0..n).collect::<Vec<_>>());
        if let Some(u) = constant_kernel(&row_block, KernelSide::Left).into_iter().next() {
            let p = u
                .iter()
                .position(|e| !e.is_zero())
                .expect("kernel vector is nonzero");
            let mut full = u.clone();
            full.resize(m, ctx.zero());
            let e = row_replacement(ctx, m, p, &full);
            let mut perm: Vec<usize> = (0..m).collect();
            perm.swap(p, m_act - 1);
            let pm = ConstMatrix::permutation(ctx, &perm);
            s = pm.mul(&e).mul(&s);
            m_act -= 1;
            if m_act == 0 {
                break;
            }
            continue;
        }
        // columns: constant right kernel of the active column block
        let col_block = j.submatrix(&(0..m).collect::<Vec<_>>(), &(0..n_act).collect::<Vec<_>>());
        if let Some(w) = constant_kernel(&col_block, KernelSide::Right).into_iter().next() {
            let p = w
                .iter()
                .position(|e| !e.is_zero())
                .expect("kernel vector is nonzero");
            let mut tp = ConstMatrix::identity(ctx, n);
            for (row, val) in w.iter().enumerate() {
                tp.set(row, p, val.clone());
            }
            let mut perm: Vec<usize> = (0..n).collect();
            perm.swap(p, n_act - 1);
            let pc = ConstMatrix::permutation(ctx, &perm).transpose();
            t = t.mul(&tp).mul(&pc);
            n_act -= 1;
            if n_act == 0 {
                break;
            }
            continue;
        }
        break;
    }
    if m_act <= bound_form1(r) {
        return Ok((s, t, RkrForm::RowBound));
    }
    if !char2 && n_act <= r {
        return Ok((s, t, RkrForm::ColsNonzeroR));
    }
    if char2 && n_act <= r + 1 {
        return Ok((s, t, RkrForm::ColsNonzeroRp1Char2));
    }
    Err(Error::ContractViolation(format!(
        "small-field descent stalled with {} active rows and {} active columns at rank {}",
        m_act, n_act, r
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::generators::{random_conjugate, random_map_of_rank};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn parse_map(field: &str, n: usize, comps: &[&str]) -> PolyMap {
        let ctx = make_field(field).unwrap();
        let polys = comps
            .iter()
            .map(|s| crate::poly::Poly::parse(&ctx, n, s).unwrap())
            .collect();
        PolyMap::new(&ctx, n, polys).unwrap()
    }

    #[test]
    fn squares_in_two_variables_reach_the_column_form() {
        // independently derived oracle: Jacobian rows (x₁,0),(x₂,x₁),(0,x₂)
        // span rank 2, the map lives in x₁, x₂ only
        let h = parse_map("Q", 2, &["1/2*x1^2", "x1*x2", "1/2*x2^2", "0"]);
        let rep = classify_rkr(&h).unwrap();
        assert_eq!(rep.r, 2);
        assert_eq!(rep.form, RkrForm::ColsNonzeroR);
        assert!(rep.nonzero_row_count <= 3);
        rep.verify(&h).unwrap();
    }

    #[test]
    fn zero_padded_rank_one_map_meets_the_single_row_bound() {
        let h = parse_map("Q", 3, &["x1*x2", "0", "0"]);
        let rep = classify_rkr(&h).unwrap();
        assert_eq!(rep.r, 1);
        assert!(rep.nonzero_row_count <= 1);
        rep.verify(&h).unwrap();
    }

    #[test]
    fn squares_only_in_characteristic_two_have_rank_zero() {
        let h = parse_map("GF(2)", 3, &["x1^2", "x2^2 + x3^2", "x1^2 + x3^2"]);
        let rep = classify_rkr(&h).unwrap();
        assert_eq!(rep.r, 0);
        assert_eq!(rep.nonzero_row_count, 0);
        rep.verify(&h).unwrap();
    }

    #[test]
    fn conjugation_preserves_the_reported_rank() {
        for field in ["GF(5)", "Q"] {
            let ctx = make_field(field).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(17);
            for round in 0..25 {
                let r = round % 4;
                let h = random_map_of_rank(&ctx, 5, 4, r, &mut rng);
                let (hc, _, _) = random_conjugate(&h, &mut rng);
                let rep_a = classify_rkr(&h).unwrap();
                let rep_b = classify_rkr(&hc).unwrap();
                assert_eq!(rep_a.r, r);
                assert_eq!(rep_b.r, r);
            }
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let ctx = make_field("GF(5)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let h = random_map_of_rank(&ctx, 5, 5, 3, &mut rng);
            let rep_a = classify_rkr(&h).unwrap();
            let rep_b = classify_rkr(&h).unwrap();
            assert_eq!(rep_a, rep_b);
        }
    }

    #[test]
    fn small_field_descent_agrees_with_an_extension() {
        let ctx2 = make_field("GF(2)").unwrap();
        let ctx4 = make_field("GF(2,2)").unwrap();
        let emb = crate::field::extend(&ctx2, 2).unwrap();
        assert_eq!(emb.dst().cardinality(), ctx4.cardinality());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for round in 0..20 {
            let r = 1 + round % 3;
            let h = random_map_of_rank(&ctx2, 5, 5, r, &mut rng);
            let rep = classify_rkr(&h).unwrap();
            assert_eq!(rep.r, r);
            rep.verify(&h).unwrap();
            let hbig = h.embed(&emb);
            let rep_big = classify_rkr(&hbig).unwrap();
            assert_eq!(rep_big.r, r);
            rep_big.verify(&hbig).unwrap();
        }
    }

    #[test]
    fn random_maps_over_gf2_normalize() {
        let ctx = make_field("GF(2)").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for round in 0..30 {
            let r = round % 4;
            let h = random_map_of_rank(&ctx, 6, 5, r, &mut rng);
            let rep = classify_rkr(&h).unwrap();
            assert_eq!(rep.r, r);
            rep.verify(&h).unwrap();
        }
    }
}
