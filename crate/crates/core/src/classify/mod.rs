//! Classification of quadratic homogeneous maps by Jacobian rank: a
//! constructive normalization valid for every rank, and the full six-case
//! classification at rank 3. All results come with invertible constant
//! witnesses S, T such that S·H(T·x) is in the claimed shape, and every
//! report re-verifies its own claims before it is returned.

mod calc;
mod rk3;
mod rkr;

pub use calc::{ccoldep_witness, rk3calc_normalize, Rk3CalcOutcome};
pub use rk3::classify_rk3;
pub use rkr::classify_rkr;

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::maps::{conjugate, jacobian, PolyMap};
use crate::matpoly::{rank_kx, ConstMatrix, PolyMatrix};
use crate::poly::{Monomial, Poly};

/// Shape reached by [`classify_rkr`] for a map of Jacobian rank r.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RkrForm {
    /// At most r(r−1)/2 + 1 components of S·H(T·x) have a nonzero Jacobian
    /// row.
    RowBound,
    /// Only the first r columns of the Jacobian of S·H(T·x) are nonzero;
    /// characteristic ≠ 2, so the components involve only x₁..x_r.
    ColsNonzeroR,
    /// Only the first r+1 columns of the Jacobian are nonzero;
    /// characteristic 2 (squares are invisible to the Jacobian there).
    ColsNonzeroRp1Char2,
}

impl RkrForm {
    /// 1-based index used in reports.
    pub fn index(self) -> u8 {
        match self {
            RkrForm::RowBound => 1,
            RkrForm::ColsNonzeroR => 2,
            RkrForm::ColsNonzeroRp1Char2 => 3,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            RkrForm::RowBound => "row-bound",
            RkrForm::ColsNonzeroR => "cols-r",
            RkrForm::ColsNonzeroRp1Char2 => "cols-r-plus-1",
        }
    }
}

/// Row bound claimed by [`RkrForm::RowBound`]: r(r−1)/2 + 1.
pub(crate) fn bound_form1(r: usize) -> usize {
    (r * r - r) / 2 + 1
}

/// Row bound every normalization satisfies: r(r+1)/2.
pub(crate) fn bound_universal(r: usize) -> usize {
    (r * r + r) / 2
}

/// Certificate of the general-rank normalization H̃ = S·H(T·x).
#[derive(Debug, Clone, PartialEq)]
pub struct RkrReport {
    pub r: usize,
    pub s: ConstMatrix,
    pub t: ConstMatrix,
    pub form: RkrForm,
    /// Number of nonzero Jacobian rows of H̃ (components that are squares of
    /// linear forms in characteristic 2 do not count).
    pub nonzero_row_count: usize,
}

impl RkrReport {
    /// The normalized map S·H(T·x).
    pub fn normal_form(&self, h: &PolyMap) -> Result<PolyMap> {
        conjugate(h, &self.s, &self.t)
    }

    /// Re-check every claim against the original map.
    pub fn verify(&self, h: &PolyMap) -> Result<()> {
        let bad = |msg: String| Err(Error::ContractViolation(msg));
        if !self.s.is_invertible() || !self.t.is_invertible() {
            return bad("rank report witness matrix is singular".into());
        }
        let ht = self.normal_form(h)?;
        let j = jacobian(&ht);
        let r = rank_kx(&j);
        if r != self.r {
            return bad(format!("rank report claims r = {} but finds {}", self.r, r));
        }
        let count = nonzero_rows(&j).len();
        if count != self.nonzero_row_count {
            return bad(format!(
                "rank report counts {} nonzero rows but finds {}",
                self.nonzero_row_count, count
            ));
        }
        if count > bound_universal(r) {
            return bad(format!("{} nonzero rows exceed the universal bound", count));
        }
        let char2 = h.ctx().characteristic() == 2;
        match self.form {
            RkrForm::RowBound => {
                if count > bound_form1(r) {
                    return bad(format!("{} nonzero rows exceed the row-bound form", count));
                }
            }
            RkrForm::ColsNonzeroR => {
                if char2 {
                    return bad("cols-r form claimed in characteristic 2".into());
                }
                if nonzero_cols(&j).into_iter().any(|c| c >= r) {
                    return bad("cols-r form has a nonzero column past r".into());
                }
            }
            RkrForm::ColsNonzeroRp1Char2 => {
                if !char2 {
                    return bad("cols-r-plus-1 form claimed outside characteristic 2".into());
                }
                if nonzero_cols(&j).into_iter().any(|c| c >= r + 1) {
                    return bad("cols-r-plus-1 form has a nonzero column past r+1".into());
                }
            }
        }
        Ok(())
    }

    pub fn to_json_value(&self, verified: bool) -> Value {
        json!({
            "rank": self.r,
            "form": self.form.index(),
            "form_label": self.form.label(),
            "S": const_matrix_json(&self.s),
            "T": const_matrix_json(&self.t),
            "nonzero_rows": self.nonzero_row_count,
            "verified": verified,
        })
    }
}

/// Constructive by-products recorded while classifying at rank 3.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CaseWitnesses {
    /// Point v with J(H̃)(v) = [[I₃,0],[0,0]] when the flow solved for one.
    pub v: Option<Vec<FieldElem>>,
    /// Constant kernel / column-space vectors consumed by the dispatch.
    pub kernel_vectors: Vec<Vec<FieldElem>>,
    /// Dispatch branches taken, outermost first.
    pub branches: Vec<String>,
}

impl CaseWitnesses {
    pub(crate) fn branch(&mut self, label: &str) {
        self.branches.push(label.to_string());
    }
}

/// Six-case certificate at rank 3: H̃ = S·H(T·x) satisfies the structural
/// predicate of `case`; `c` is the parameter of the four-variable family in
/// case 4 and is `None` otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseReport {
    pub case: u8,
    pub s: ConstMatrix,
    pub t: ConstMatrix,
    pub c: Option<FieldElem>,
    pub witnesses: CaseWitnesses,
}

impl CaseReport {
    pub fn normal_form(&self, h: &PolyMap) -> Result<PolyMap> {
        conjugate(h, &self.s, &self.t)
    }

    /// Re-check the structural predicate; wraps the textual reason.
    pub fn verify(&self, h: &PolyMap) -> Result<()> {
        verify_case_predicate(h, self).map_err(Error::ContractViolation)
    }

    pub fn to_json_value(&self, verified: bool) -> Value {
        json!({
            "rank": 3,
            "case": self.case,
            "S": const_matrix_json(&self.s),
            "T": const_matrix_json(&self.t),
            "c": self.c.as_ref().map(|c| c.to_string()),
            "witnesses": {
                "v": self.witnesses.v.as_ref().map(|v| elem_vec_json(v)),
                "kernel_vectors": self.witnesses.kernel_vectors.iter()
                    .map(|v| elem_vec_json(v)).collect::<Vec<_>>(),
                "branches": self.witnesses.branches,
            },
            "verified": verified,
        })
    }
}

/// Check that H̃ = S·H(T·x) satisfies the shape of the claimed case exactly;
/// on failure the returned string names the first violated condition.
pub fn verify_case_predicate(h: &PolyMap, report: &CaseReport) -> std::result::Result<(), String> {
    if !(1..=6).contains(&report.case) {
        return Err(format!("case {} is out of range", report.case));
    }
    if !report.s.is_invertible() || !report.t.is_invertible() {
        return Err("witness matrix is singular".into());
    }
    let ht = conjugate(h, &report.s, &report.t).map_err(|e| e.to_string())?;
    let j = jacobian(&ht);
    if rank_kx(&j) != 3 {
        return Err("conjugated map does not have Jacobian rank 3".into());
    }
    case_shape(&ht, &j, report.case, report.c.as_ref())
}

/// The structural predicate of a single case, applied to an already
/// conjugated map and its Jacobian.
pub(crate) fn case_shape(
    ht: &PolyMap,
    j: &PolyMatrix,
    case: u8,
    c: Option<&FieldElem>,
) -> std::result::Result<(), String> {
    let ctx = ht.ctx();
    let char2 = ctx.characteristic() == 2;
    let rows_zero_from = |k: usize| -> std::result::Result<(), String> {
        match nonzero_rows(j).into_iter().find(|&i| i >= k) {
            Some(i) => Err(format!("Jacobian row {} is nonzero", i + 1)),
            None => Ok(()),
        }
    };
    let cols_zero_from = |k: usize| -> std::result::Result<(), String> {
        match nonzero_cols(j).into_iter().find(|&i| i >= k) {
            Some(i) => Err(format!("Jacobian column {} is nonzero", i + 1)),
            None => Ok(()),
        }
    };
    match case {
        1 => rows_zero_from(3),
        2 => {
            if char2 {
                return Err("case 2 requires characteristic ≠ 2".into());
            }
            rows_zero_from(4)?;
            if ht.m() < 4 {
                return Err("case 2 needs at least 4 components".into());
            }
            let half = ctx.from_ratio(1, 2);
            let x1 = Poly::var(ctx, ht.n(), 0);
            let x2 = Poly::var(ctx, ht.n(), 1);
            let want = [
                x1.mul(&x1).scale(&half),
                x1.mul(&x2),
                x2.mul(&x2).scale(&half),
            ];
            for (k, w) in want.iter().enumerate() {
                if ht.comp(k + 1) != w {
                    return Err(format!("component {} is not the case-2 form", k + 2));
                }
            }
            Ok(())
        }
        3 => {
            if !char2 {
                return Err("case 3 requires characteristic 2".into());
            }
            rows_zero_from(4)?;
            if ht.m() < 4 {
                return Err("case 3 needs at least 4 components".into());
            }
            let n = ht.n();
            let pairs = [(0usize, 1usize), (0, 2), (1, 2)];
            for (k, (a, b)) in pairs.iter().enumerate() {
                let prod = Poly::var(ctx, n, *a).mul(&Poly::var(ctx, n, *b));
                let grad = jacobian(&PolyMap::new(ctx, n, vec![prod]).map_err(|e| e.to_string())?);
                for col in 0..n {
                    if j.get(k + 1, col) != grad.get(0, col) {
                        return Err(format!(
                            "Jacobian row {} does not match the case-3 form",
                            k + 2
                        ));
                    }
                }
            }
            Ok(())
        }
        4 => {
            if char2 {
                return Err("case 4 requires characteristic ≠ 2".into());
            }
            let c = match c {
                Some(c) if !c.is_zero() => c,
                Some(_) => return Err("case 4 parameter c is zero".into()),
                None => return Err("case 4 report is missing the parameter c".into()),
            };
            if ht.m() < 4 || ht.n() < 4 {
                return Err("case 4 needs at least 4 components and 4 variables".into());
            }
            rows_zero_from(4)?;
            let want = quartet_comps(ctx, ht.n(), c).map_err(|e| e.to_string())?;
            for (k, w) in want.iter().enumerate() {
                if ht.comp(k) != w {
                    return Err(format!("component {} is not the case-4 form", k + 1));
                }
            }
            // defining relation H̃₁² + c·H̃₂² − 4·H̃₃·H̃₄ = 0
            let four = ctx.from_i64(4);
            let rel = ht
                .comp(0)
                .mul(ht.comp(0))
                .add(&ht.comp(1).mul(ht.comp(1)).scale(c))
                .sub(&ht.comp(2).mul(ht.comp(3)).scale(&four));
            if !rel.is_zero() {
                return Err("case-4 defining relation fails".into());
            }
            Ok(())
        }
        5 => {
            if char2 {
                return Err("case 5 requires characteristic ≠ 2".into());
            }
            cols_zero_from(3)
        }
        6 => {
            if !char2 {
                return Err("case 6 requires characteristic 2".into());
            }
            cols_zero_from(4)
        }
        _ => unreachable!(),
    }
}

/// Components of the four-variable rank-3 family with parameter c ≠ 0,
/// written in n ≥ 4 variables:
/// (x₁x₃ + c·x₂x₄, x₂x₃ − x₁x₄, ½x₃² + (c/2)x₄², ½x₁² + (c/2)x₂²).
pub(crate) fn quartet_comps(ctx: &FieldCtx, n: usize, c: &FieldElem) -> Result<Vec<Poly>> {
    if ctx.characteristic() == 2 {
        return Err(Error::WrongCharacteristic { expected: 0, found: 2 });
    }
    if c.is_zero() {
        return Err(Error::ContractViolation("family parameter c must be nonzero".into()));
    }
    let v = |i: usize| Poly::var(ctx, n, i);
    let half = ctx.from_ratio(1, 2);
    let ch = c.mul(&half);
    Ok(vec![
        v(0).mul(&v(2)).add(&v(1).mul(&v(3)).scale(c)),
        v(1).mul(&v(2)).sub(&v(0).mul(&v(3))),
        v(2).mul(&v(2)).scale(&half).add(&v(3).mul(&v(3)).scale(&ch)),
        v(0).mul(&v(0)).scale(&half).add(&v(1).mul(&v(1)).scale(&ch)),
    ])
}

/// Indices of nonzero rows of a polynomial matrix.
pub(crate) fn nonzero_rows(j: &PolyMatrix) -> Vec<usize> {
    (0..j.rows())
        .filter(|&i| (0..j.cols()).any(|k| !j.get(i, k).is_zero()))
        .collect()
}

/// Indices of nonzero columns of a polynomial matrix.
pub(crate) fn nonzero_cols(j: &PolyMatrix) -> Vec<usize> {
    (0..j.cols())
        .filter(|&k| (0..j.rows()).any(|i| !j.get(i, k).is_zero()))
        .collect()
}

/// Left-multiply a map by a constant matrix (mix components, no
/// substitution). `s` must be m'×m for a map with m components.
pub(crate) fn smul(s: &ConstMatrix, h: &PolyMap) -> PolyMap {
    let ctx = h.ctx();
    let comps = (0..s.rows())
        .map(|i| {
            let mut acc = Poly::zero(ctx, h.n());
            for k in 0..h.m() {
                let coeff = s.get(i, k);
                if !coeff.is_zero() {
                    acc = acc.add(&h.comp(k).scale(coeff));
                }
            }
            acc
        })
        .collect();
    PolyMap::new(ctx, h.n(), comps).expect("component mix keeps the context")
}

/// Permutation matrix P such that P·M moves the rows listed in `front`
/// (ascending) to the top, preserving the relative order of the rest.
pub(crate) fn front_row_perm(ctx: &FieldCtx, len: usize, front: &[usize]) -> ConstMatrix {
    let mut perm: Vec<usize> = front.to_vec();
    perm.extend((0..len).filter(|i| !front.contains(i)));
    ConstMatrix::permutation(ctx, &perm)
}

/// Permutation matrix Q such that M·Q moves the columns listed in `front`
/// (ascending) to the left, preserving the relative order of the rest.
/// (M·Q) col j = M col perm[j] requires Q[perm[j]][j] = 1, the transpose of
/// the row-permutation convention.
pub(crate) fn front_col_perm(ctx: &FieldCtx, len: usize, front: &[usize]) -> ConstMatrix {
    front_row_perm(ctx, len, front).transpose()
}

/// Monomial basis xᵢxⱼ with i ≤ j < active (mixed_only drops the squares,
/// the Jacobian-visible basis in characteristic 2).
pub(crate) fn sym2_monomials(nvars: usize, active: usize, mixed_only: bool) -> Vec<Monomial> {
    let mut mons = Vec::new();
    for i in 0..active {
        for jj in i..active {
            if mixed_only && i == jj {
                continue;
            }
            let mut e = vec![0u32; nvars];
            e[i] += 1;
            e[jj] += 1;
            mons.push(Monomial::from_exponents(e));
        }
    }
    mons
}

/// Flatten row `i` of a matrix of linear forms into one constant vector
/// (entry-major, variable-minor).
pub(crate) fn jrow_coeffs(j: &PolyMatrix, i: usize) -> Vec<FieldElem> {
    let n = j.nvars();
    let mut out = Vec::with_capacity(j.cols() * n);
    for k in 0..j.cols() {
        let p = j.get(i, k);
        for v in 0..n {
            out.push(p.coefficient(&Monomial::var(n, v)));
        }
    }
    out
}

/// Coefficient vector of `p` over `mons`; `None` if `p` has support outside.
pub(crate) fn coeff_vector(p: &Poly, mons: &[Monomial]) -> Option<Vec<FieldElem>> {
    let mut seen = 0usize;
    let out: Vec<FieldElem> = mons
        .iter()
        .map(|m| {
            let c = p.coefficient(m);
            if !c.is_zero() {
                seen += 1;
            }
            c
        })
        .collect();
    if seen == p.num_terms() {
        Some(out)
    } else {
        None
    }
}

/// Gaussian elimination over K on the given coefficient rows: returns an
/// invertible E with E·rows in row echelon form (first `rank` rows
/// independent, the rest zero) and the rank. First-index pivoting throughout.
pub(crate) fn row_reduce_transform(
    ctx: &FieldCtx,
    rows: &[Vec<FieldElem>],
) -> (ConstMatrix, usize) {
    let m = rows.len();
    let width = rows.first().map_or(0, |r| r.len());
    let mut work: Vec<Vec<FieldElem>> = rows.to_vec();
    let mut e = ConstMatrix::identity(ctx, m);
    let mut pivot_row = 0usize;
    for col in 0..width {
        if pivot_row == m {
            break;
        }
        let Some(p) = (pivot_row..m).find(|&i| !work[i][col].is_zero()) else {
            continue;
        };
        work.swap(pivot_row, p);
        e.swap_rows(pivot_row, p);
        let inv = work[pivot_row][col].inv();
        for i in 0..m {
            if i == pivot_row || work[i][col].is_zero() {
                continue;
            }
            let factor = work[i][col].mul(&inv).neg();
            for k in col..width {
                let add = work[pivot_row][k].mul(&factor);
                work[i][k] = work[i][k].add(&add);
            }
            for k in 0..m {
                let add = e.get(pivot_row, k).mul(&factor);
                e.set(i, k, e.get(i, k).add(&add));
            }
        }
        pivot_row += 1;
    }
    (e, pivot_row)
}

/// Identity matrix with row `p` replaced by `u` (requires u[p] ≠ 0 for
/// invertibility; the caller guarantees it).
pub(crate) fn row_replacement(ctx: &FieldCtx, len: usize, p: usize, u: &[FieldElem]) -> ConstMatrix {
    let mut e = ConstMatrix::identity(ctx, len);
    for (k, val) in u.iter().enumerate() {
        e.set(p, k, val.clone());
    }
    e
}

pub(crate) fn const_matrix_json(m: &ConstMatrix) -> Value {
    Value::Array(
        (0..m.rows())
            .map(|i| elem_vec_json(&m.row(i)))
            .collect(),
    )
}

pub(crate) fn elem_vec_json(v: &[FieldElem]) -> Value {
    Value::Array(v.iter().map(|e| Value::String(e.to_string())).collect())
}
