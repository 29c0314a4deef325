//! Kernels of polynomial matrices: constant kernels over K, polynomial
//! kernel bases over K(x), constant vectors inside a K(x)-column space,
//! pairwise K-dependence of rows/columns, and a deterministic search for a
//! point where a polynomial does not vanish.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::field::{content_normalizer, FieldCtx, FieldElem};
use crate::poly::{Degree, Monomial, Poly};

use super::{ConstMatrix, PolyMatrix};

/// Which kernel of `M` is meant: vectors `u` with `u·M = 0` (left) or
/// `M·w = 0` (right).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSide {
    Left,
    Right,
}

/// Basis over K of the constant vectors annihilating `M` identially from the
/// requested side. The system flattens each polynomial condition into one
/// scalar row per monomial; the basis is the canonical reduced-echelon one.
pub fn constant_kernel(m: &PolyMatrix, side: KernelSide) -> Vec<Vec<FieldElem>> {
    let mm = match side {
        KernelSide::Right => m.clone(),
        KernelSide::Left => m.transpose(),
    };
    let ctx = mm.ctx().clone();
    let unknowns = mm.cols();
    let mut rows: Vec<Vec<FieldElem>> = Vec::new();
    for i in 0..mm.rows() {
        let mut support: BTreeSet<Monomial> = BTreeSet::new();
        for j in 0..unknowns {
            support.extend(mm.get(i, j).terms().map(|(mono, _)| mono.clone()));
        }
        for mono in support {
            rows.push(
                (0..unknowns)
                    .map(|j| mm.get(i, j).coefficient(&mono))
                    .collect(),
            );
        }
    }
    let system = if rows.is_empty() {
        ConstMatrix::zero(&ctx, 0, unknowns)
    } else {
        ConstMatrix::from_rows(&ctx, rows)
    };
    system.kernel()
}

/// Basis of the right kernel of `M` over K(x), returned as polynomial
/// vectors with normalized scalar content (over ℚ: coprime integer
/// coefficients, first nonzero entry with positive leading coefficient; over
/// finite fields: first nonzero entry monic). One basis vector per free
/// column of the echelon form, in ascending column order.
pub fn kernel_kx(m: &PolyMatrix) -> Vec<Vec<Poly>> {
    let ctx = m.ctx().clone();
    let nvars = m.nvars();
    let (rows, cols) = (m.rows(), m.cols());
    let mut w: Vec<Vec<Poly>> = (0..rows).map(|i| m.row(i).to_vec()).collect();
    // scalar row normalization (kernel-preserving)
    for row in w.iter_mut() {
        if let Some(lead) = row.iter().find(|p| !p.is_zero()) {
            let c = lead.leading_term().unwrap().1.clone();
            if !c.is_one() {
                let cinv = c.inv();
                for p in row.iter_mut() {
                    *p = p.scale(&cinv);
                }
            }
        }
    }
    // fraction-free row echelon; columns stay in place
    let mut prev = Poly::one(&ctx, nvars);
    let mut pivots: Vec<usize> = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        if r == rows {
            break;
        }
        let Some(pi) = (r..rows).find(|&i| !w[i][col].is_zero()) else {
            continue;
        };
        w.swap(r, pi);
        for i in r + 1..rows {
            for j in col + 1..cols {
                let num = w[r][col].mul(&w[i][j]).sub(&w[i][col].mul(&w[r][j]));
                w[i][j] = num.div_exact(&prev);
            }
            w[i][col] = Poly::zero(&ctx, nvars);
        }
        prev = w[r][col].clone();
        pivots.push(col);
        r += 1;
    }
    let pivot_set: BTreeSet<usize> = pivots.iter().copied().collect();
    let mut basis = Vec::new();
    for g in (0..cols).filter(|c| !pivot_set.contains(c)) {
        let mut v: Vec<Poly> = vec![Poly::zero(&ctx, nvars); cols];
        v[g] = Poly::one(&ctx, nvars);
        // back-substitute bottom-up; rows with pivot right of g vanish on v
        for i in (0..pivots.len()).rev() {
            let p = pivots[i];
            if p > g {
                continue;
            }
            let mut rho = Poly::zero(&ctx, nvars);
            for j in p + 1..cols {
                if !v[j].is_zero() {
                    rho = rho.add(&w[i][j].mul(&v[j]));
                }
            }
            if rho.is_zero() {
                continue;
            }
            let piv = w[i][p].clone();
            for entry in v.iter_mut() {
                *entry = entry.mul(&piv);
            }
            v[p] = rho.neg();
        }
        normalize_vector_content(&mut v);
        basis.push(v);
    }
    basis
}

/// Divide a polynomial vector by its scalar content (see [`kernel_kx`]).
fn normalize_vector_content(v: &mut [Poly]) {
    let coeffs: Vec<FieldElem> = v
        .iter()
        .flat_map(|p| p.terms().map(|(_, c)| c.clone()))
        .collect();
    if let Some(s) = content_normalizer(coeffs.iter()) {
        if !s.is_one() {
            for p in v.iter_mut() {
                *p = p.scale(&s);
            }
        }
    }
}

/// Basis over K of the constant vectors lying in the K(x)-column space of
/// `B`: a constant u is in the column space iff every left-kernel vector of
/// `B` annihilates it, which flattens to one scalar condition per monomial.
pub fn constant_vectors_in_colspace(b: &PolyMatrix) -> Vec<Vec<FieldElem>> {
    let ctx = b.ctx().clone();
    let rows = b.rows();
    let left_kernel = kernel_kx(&b.transpose());
    let mut conditions: Vec<Vec<FieldElem>> = Vec::new();
    for u in &left_kernel {
        let mut support: BTreeSet<Monomial> = BTreeSet::new();
        for p in u {
            support.extend(p.terms().map(|(mono, _)| mono.clone()));
        }
        for mono in support {
            conditions.push((0..rows).map(|i| u[i].coefficient(&mono)).collect());
        }
    }
    let system = if conditions.is_empty() {
        ConstMatrix::zero(&ctx, 0, rows)
    } else {
        ConstMatrix::from_rows(&ctx, conditions)
    };
    system.kernel()
}

/// Outcome of the pairwise K-dependence test: either every pair of lines is
/// K-dependent (with one witness combination per pair) or the first
/// independent pair is reported.
#[derive(Debug, Clone)]
pub struct PairwiseDependence {
    pub all_dependent: bool,
    /// (i, j, a, b) with a·line_i + b·line_j ≡ 0, (a, b) ≠ 0, for i < j.
    pub witnesses: Vec<(usize, usize, FieldElem, FieldElem)>,
    pub failing_pair: Option<(usize, usize)>,
}

fn pairwise_dependent(lines: Vec<Vec<Poly>>, ctx: &FieldCtx) -> PairwiseDependence {
    let n = lines.len();
    let mut witnesses = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let mut support: BTreeSet<Monomial> = BTreeSet::new();
            for p in lines[i].iter().chain(lines[j].iter()) {
                support.extend(p.terms().map(|(mono, _)| mono.clone()));
            }
            let mut rows: Vec<Vec<FieldElem>> = Vec::new();
            for (li, lj) in lines[i].iter().zip(lines[j].iter()) {
                for mono in &support {
                    rows.push(vec![li.coefficient(mono), lj.coefficient(mono)]);
                }
            }
            let system = if rows.is_empty() {
                ConstMatrix::zero(ctx, 0, 2)
            } else {
                ConstMatrix::from_rows(ctx, rows)
            };
            let kern = system.kernel();
            match kern.first() {
                Some(v) => witnesses.push((i, j, v[0].clone(), v[1].clone())),
                None => {
                    return PairwiseDependence {
                        all_dependent: false,
                        witnesses,
                        failing_pair: Some((i, j)),
                    }
                }
            }
        }
    }
    PairwiseDependence {
        all_dependent: true,
        witnesses,
        failing_pair: None,
    }
}

/// Are the columns of `M` K-dependent in pairs? Vacuously true for fewer
/// than two columns.
pub fn columns_pairwise_dependent_over_k(m: &PolyMatrix) -> PairwiseDependence {
    let lines = (0..m.cols()).map(|j| m.col(j)).collect();
    pairwise_dependent(lines, m.ctx())
}

/// Row variant of [`columns_pairwise_dependent_over_k`].
pub fn rows_pairwise_dependent_over_k(m: &PolyMatrix) -> PairwiseDependence {
    let lines = (0..m.rows()).map(|i| m.row(i).to_vec()).collect();
    pairwise_dependent(lines, m.ctx())
}

/// Deterministic point v ∈ Kⁿ with f(v) ≠ 0 for a nonzero homogeneous f.
///
/// Finite fields: exhaustive odometer enumeration, first coordinate varying
/// fastest. ℚ: graded enumeration over the growing value pool 0, 1, −1, 2, …
/// (a pool of deg f + 1 values always suffices, since the degree of f in each
/// variable is at most deg f). Errors with FieldTooSmall only when the whole
/// finite field is exhausted, which requires |K| ≤ deg f.
pub fn find_nonvanishing_point(f: &Poly) -> Result<Vec<FieldElem>> {
    let ctx = f.ctx().clone();
    let n = f.nvars();
    let deg = match f.degree() {
        Degree::NegInf => {
            return Err(Error::PreconditionViolated(
                "find_nonvanishing_point: zero polynomial".into(),
            ))
        }
        Degree::Finite(d) => d,
    };
    if !f.is_homogeneous_of_degree(deg) {
        return Err(Error::PreconditionViolated(
            "find_nonvanishing_point: polynomial is not homogeneous".into(),
        ));
    }
    match ctx.cardinality() {
        Some(card) => {
            // odometer over all of Kⁿ, coordinate 0 fastest
            let mut digits = vec![0u128; n];
            loop {
                let point: Vec<FieldElem> = digits
                    .iter()
                    .map(|&d| ctx.element_from_index(d))
                    .collect();
                if !f.evaluate(&point).unwrap().is_zero() {
                    return Ok(point);
                }
                let mut i = 0;
                loop {
                    if i == n {
                        return Err(Error::FieldTooSmall {
                            card,
                            need: deg as u128 + 1,
                        });
                    }
                    digits[i] += 1;
                    if digits[i] < card {
                        break;
                    }
                    digits[i] = 0;
                    i += 1;
                }
            }
        }
        None => {
            // growing pool over ℚ: at stage s enumerate {0,…,s−1}ⁿ minus the
            // points already tried at earlier stages
            for s in 1..=(deg as u128 + 2) {
                let mut digits = vec![0u128; n];
                loop {
                    if digits.iter().any(|&d| d == s - 1) {
                        let point: Vec<FieldElem> = digits
                            .iter()
                            .map(|&d| ctx.element_from_index(d))
                            .collect();
                        if !f.evaluate(&point).unwrap().is_zero() {
                            return Ok(point);
                        }
                    }
                    let mut i = 0;
                    loop {
                        if i == n {
                            break;
                        }
                        digits[i] += 1;
                        if digits[i] < s {
                            break;
                        }
                        digits[i] = 0;
                        i += 1;
                    }
                    if digits.iter().all(|&d| d == 0) {
                        break;
                    }
                }
            }
            unreachable!("pool of deg+1 values must contain a nonvanishing point");
        }
    }
}
