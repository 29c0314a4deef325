//! Rank factorization of a matrix of linear forms: invertible constant S, T
//! and a basis L of linear forms such that S·M·T = Σₖ coeffMats[k]·Lₖ with
//! coeffMats[0] = [[I_r, 0], [0, 0]], where r = rank over K(x).
//!
//! The construction picks the lexicographically first r×r submatrix with
//! nonvanishing determinant f, a point v with f(v) ≠ 0, and block-Gaussian
//! eliminates the evaluated matrix; the basis L is adapted to v so that
//! L₁(v) = 1 and Lₖ(v) = 0 for k ≥ 2. Every claimed identity is re-verified
//! before the result is returned.

use crate::error::{Error, Result};
use crate::field::FieldElem;
use crate::poly::LinearForm;

use super::bareiss::{det, rank_kx};
use super::kernel::find_nonvanishing_point;
use super::{ConstMatrix, PolyMatrix};

/// Output of [`irlem_decompose`]; see the module docs for the identities.
#[derive(Debug, Clone)]
pub struct IrlemDecomposition {
    pub r: usize,
    pub s: ConstMatrix,
    pub t: ConstMatrix,
    /// Basis of linear forms; forms[0](v) = 1, forms[k](v) = 0 for k ≥ 1.
    pub forms: Vec<LinearForm>,
    /// coeff_mats[k] is the constant coefficient of forms[k] in S·M·T.
    pub coeff_mats: Vec<ConstMatrix>,
    pub v: Vec<FieldElem>,
}

impl IrlemDecomposition {
    /// Re-check every invariant against the original matrix.
    pub fn verify(&self, m: &PolyMatrix) -> Result<()> {
        let ctx = m.ctx().clone();
        let nvars = m.nvars();
        let (rows, cols) = (m.rows(), m.cols());
        if !self.s.is_invertible() || !self.t.is_invertible() {
            return Err(Error::ContractViolation("S or T not invertible".into()));
        }
        if self.forms.len() != nvars || self.coeff_mats.len() != nvars {
            return Err(Error::ContractViolation("basis size mismatch".into()));
        }
        // forms evaluate correctly at v and are independent
        for (k, form) in self.forms.iter().enumerate() {
            let val = form.evaluate(&self.v)?;
            let ok = if k == 0 { val.is_one() } else { val.is_zero() };
            if !ok {
                return Err(Error::ContractViolation(format!(
                    "form {k} misvaluates at v"
                )));
            }
        }
        let lambda = ConstMatrix::from_rows(
            &ctx,
            self.forms.iter().map(|f| f.coeffs()).collect(),
        );
        if !lambda.is_invertible() {
            return Err(Error::ContractViolation("forms not independent".into()));
        }
        // coeff_mats[0] = [[I_r, 0], [0, 0]]
        let mut lead = ConstMatrix::zero(&ctx, rows, cols);
        lead.set_block(0, 0, &ConstMatrix::identity(&ctx, self.r));
        if self.coeff_mats[0] != lead {
            return Err(Error::ContractViolation(
                "leading coefficient matrix is not [[I,0],[0,0]]".into(),
            ));
        }
        // S·M·T = Σ coeff_mats[k]·forms[k]
        let smt = m.mul_const_left(&self.s).mul_const_right(&self.t);
        let mut sum = PolyMatrix::zero(&ctx, nvars, rows, cols);
        for (k, cm) in self.coeff_mats.iter().enumerate() {
            let fp = self.forms[k].as_poly();
            for i in 0..rows {
                for j in 0..cols {
                    if cm.get(i, j).is_zero() {
                        continue;
                    }
                    let entry = sum.get(i, j).add(&fp.scale(cm.get(i, j)));
                    sum.set(i, j, entry);
                }
            }
        }
        if sum != smt {
            return Err(Error::ContractViolation(
                "S·M·T does not match its coefficient expansion".into(),
            ));
        }
        // block structure: D = 0 and C·B = 0
        let blocks = smt.block_split(self.r);
        if !blocks.d.is_zero() {
            return Err(Error::ContractViolation("block D of S·M·T nonzero".into()));
        }
        if !blocks.c.mul(&blocks.b).is_zero() {
            return Err(Error::ContractViolation("block product C·B nonzero".into()));
        }
        Ok(())
    }
}

/// Greedy lexicographically-first index set of the given target size whose
/// prefix ranks strictly increase; `rank_of` scores a candidate prefix.
fn greedy_first(limit: usize, target: usize, mut rank_of: impl FnMut(&[usize]) -> usize) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(target);
    for i in 0..limit {
        if chosen.len() == target {
            break;
        }
        chosen.push(i);
        if rank_of(&chosen) < chosen.len() {
            chosen.pop();
        }
    }
    chosen
}

/// Decompose a nonzero matrix of linear forms as S·M·T = Σₖ coeffMats[k]·Lₖ.
pub fn irlem_decompose(m: &PolyMatrix) -> Result<IrlemDecomposition> {
    if !m.is_linear_form_matrix() {
        return Err(Error::PreconditionViolated(
            "irlem_decompose: entries must be linear forms".into(),
        ));
    }
    if m.is_zero() {
        return Err(Error::ZeroMatrix);
    }
    let ctx = m.ctx().clone();
    let nvars = m.nvars();
    let (rows, cols) = (m.rows(), m.cols());
    let r = rank_kx(m);

    // lexicographically first row set, then first column set
    let all_cols: Vec<usize> = (0..cols).collect();
    let row_set = greedy_first(rows, r, |rs| rank_kx(&m.submatrix(rs, &all_cols)));
    debug_assert_eq!(row_set.len(), r);
    let col_set = greedy_first(cols, r, |cs| rank_kx(&m.submatrix(&row_set, cs)));
    debug_assert_eq!(col_set.len(), r);

    let perm_r: Vec<usize> = row_set
        .iter()
        .copied()
        .chain((0..rows).filter(|i| !row_set.contains(i)))
        .collect();
    let perm_c: Vec<usize> = col_set
        .iter()
        .copied()
        .chain((0..cols).filter(|j| !col_set.contains(j)))
        .collect();
    let p_r = ConstMatrix::permutation(&ctx, &perm_r);
    let q_c = ConstMatrix::permutation(&ctx, &perm_c).transpose();
    let mp = m.mul_const_left(&p_r).mul_const_right(&q_c);

    let lead_idx: Vec<usize> = (0..r).collect();
    let f = det(&mp.submatrix(&lead_idx, &lead_idx))?;
    debug_assert!(!f.is_zero());
    let v = find_nonvanishing_point(&f)?;

    let mhat = mp.evaluate(&v)?;
    let a0 = mhat.submatrix(&lead_idx, &lead_idx);
    let a0_inv = a0
        .inverse()
        .expect("leading minor vanishes at its own nonvanishing point (internal bug)");
    let rest_rows: Vec<usize> = (r..rows).collect();
    let rest_cols: Vec<usize> = (r..cols).collect();
    let b0 = mhat.submatrix(&lead_idx, &rest_cols);
    let c0 = mhat.submatrix(&rest_rows, &lead_idx);
    let d0 = mhat.submatrix(&rest_rows, &rest_cols);
    if d0 != c0.mul(&a0_inv).mul(&b0) {
        return Err(Error::ContractViolation(
            "evaluated matrix exceeds rank r (internal bug)".into(),
        ));
    }

    let mut s1 = ConstMatrix::identity(&ctx, rows);
    s1.set_block(0, 0, &a0_inv);
    s1.set_block(r, 0, &c0.mul(&a0_inv).neg());
    let mut t1 = ConstMatrix::identity(&ctx, cols);
    t1.set_block(0, r, &a0_inv.mul(&b0).neg());
    let s = s1.mul(&p_r);
    let t = q_c.mul(&t1);

    // basis of forms adapted to v
    let j0 = v
        .iter()
        .position(|e| !e.is_zero())
        .expect("nonvanishing point of a homogeneous form cannot be zero");
    let vj_inv = v[j0].inv();
    let mut forms: Vec<LinearForm> = Vec::with_capacity(nvars);
    let mut first = vec![ctx.zero(); nvars];
    first[j0] = vj_inv.clone();
    forms.push(LinearForm::from_coeffs(&ctx, &first));
    for i in (0..nvars).filter(|&i| i != j0) {
        let mut c = vec![ctx.zero(); nvars];
        c[i] = ctx.one();
        c[j0] = v[i].mul(&vj_inv).neg();
        forms.push(LinearForm::from_coeffs(&ctx, &c));
    }

    // x_j = Σ_k (Λ⁻¹)[j][k]·L_k, so the L_k-coefficient of M is Σ_j C_j·(Λ⁻¹)[j][k]
    let lambda = ConstMatrix::from_rows(&ctx, forms.iter().map(|f| f.coeffs()).collect());
    let lambda_inv = lambda
        .inverse()
        .expect("adapted basis of forms is singular (internal bug)");
    let mut coeff_mats = Vec::with_capacity(nvars);
    for k in 0..nvars {
        let mut mk = ConstMatrix::zero(&ctx, rows, cols);
        for j in 0..nvars {
            let lij = lambda_inv.get(j, k);
            if lij.is_zero() {
                continue;
            }
            mk = mk.add(&m.coeff_matrix(j).scale(lij));
        }
        coeff_mats.push(s.mul(&mk).mul(&t));
    }

    let out = IrlemDecomposition {
        r,
        s,
        t,
        forms,
        coeff_mats,
        v,
    };
    out.verify(m)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;
    use crate::poly::Poly;

    #[test]
    fn fixed_point_matrix_is_untouched() {
        let q = make_field("Q").unwrap();
        // M = I_2·x1 padded with a zero row and column
        let m = PolyMatrix::parse(
            &q,
            3,
            &[&["x1", "0", "0"], &["0", "x1", "0"], &["0", "0", "0"]],
        )
        .unwrap();
        let dec = irlem_decompose(&m).unwrap();
        assert_eq!(dec.r, 2);
        assert!(dec.s.is_identity());
        assert!(dec.t.is_identity());
        assert_eq!(dec.forms[0].as_poly(), &Poly::parse(&q, 3, "x1").unwrap());
        dec.verify(&m).unwrap();
    }

    #[test]
    fn jacobian_of_three_forms_in_two_vars() {
        // rows: gradients of ½x1², x1x2, ½x2² → [[x1,0],[x2,x1],[0,x2]]
        let q = make_field("Q").unwrap();
        let m = PolyMatrix::parse(&q, 2, &[&["x1", "0"], &["x2", "x1"], &["0", "x2"]]).unwrap();
        let dec = irlem_decompose(&m).unwrap();
        assert_eq!(dec.r, 2);
        dec.verify(&m).unwrap();
        let expect = ConstMatrix::from_i64(&q, vec![vec![1, 0], vec![0, 1], vec![0, 0]]);
        assert_eq!(dec.coeff_mats[0], expect);
    }

    #[test]
    fn rank3_family_jacobian_decomposes() {
        for spec in ["Q", "GF(5)"] {
            let ctx = make_field(spec).unwrap();
            let m = PolyMatrix::parse(
                &ctx,
                4,
                &[
                    &["x3", "x4", "x1", "x2"],
                    &["-x4", "x3", "x2", "-x1"],
                    &["0", "0", "x3", "x4"],
                    &["x1", "x2", "0", "0"],
                ],
            )
            .unwrap();
            let dec = irlem_decompose(&m).unwrap();
            assert_eq!(dec.r, 3, "{spec}");
            dec.verify(&m).unwrap();
        }
    }

    #[test]
    fn zero_and_nonlinear_inputs_rejected() {
        let q = make_field("Q").unwrap();
        assert!(matches!(
            irlem_decompose(&PolyMatrix::zero(&q, 2, 2, 2)),
            Err(Error::ZeroMatrix)
        ));
        let bad = PolyMatrix::parse(&q, 2, &[&["x1^2"]]).unwrap();
        assert!(matches!(
            irlem_decompose(&bad),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn scrambled_inputs_still_verify() {
        let q = make_field("Q").unwrap();
        let base = PolyMatrix::parse(
            &q,
            3,
            &[&["x1", "0", "0"], &["0", "x2", "0"], &["0", "0", "0"]],
        )
        .unwrap();
        let s0 = ConstMatrix::from_i64(
            &q,
            vec![vec![1, 1, 0], vec![0, 1, 2], vec![1, 0, 1]],
        );
        let t0 = ConstMatrix::from_i64(
            &q,
            vec![vec![2, 0, 1], vec![1, 1, 0], vec![0, 0, 1]],
        );
        assert!(s0.is_invertible() && t0.is_invertible());
        let m = base.mul_const_left(&s0).mul_const_right(&t0);
        let dec = irlem_decompose(&m).unwrap();
        assert_eq!(dec.r, 2);
        dec.verify(&m).unwrap();
    }

    #[test]
    fn small_field_decomposition() {
        let f2 = make_field("GF(2)").unwrap();
        let m = PolyMatrix::parse(
            &f2,
            3,
            &[&["x1", "0", "x2"], &["0", "x2", "x3"], &["x1", "x2", "0"]],
        )
        .unwrap();
        let dec = irlem_decompose(&m).unwrap();
        dec.verify(&m).unwrap();
    }
}
