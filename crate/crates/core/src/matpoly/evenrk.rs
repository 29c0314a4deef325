//! Congruence reduction of symmetric matrices by unit-lower-triangular
//! transformations: TᵗMT = P·D with P a symmetric permutation matrix and D
//! diagonal. Works column by column from the last one, pivoting at the
//! lowest nonzero entry of the active column.
//!
//! In characteristic 2 a zero diagonal is preserved by every step, so only
//! pair pivots occur and the rank comes out even. Away from characteristic 2
//! a zero diagonal does *not* force even rank ([[0,1,1],[1,0,1],[1,1,0]] has
//! rank 3); the reduction itself is still exact.

use crate::error::{Error, Result};
use crate::field::FieldElem;

use super::ConstMatrix;

/// Result of [`symmetric_reduce`]: TᵗMT = P·D with T unit lower triangular,
/// P the permutation matrix of the involution `perm`, and D = diag(`diag`).
/// `rank` counts the nonzero diagonal values and equals rank(M).
#[derive(Debug, Clone)]
pub struct EvenRkReduction {
    pub t: ConstMatrix,
    /// Involution as an index array: entry c names the row carrying column c.
    pub perm: Vec<usize>,
    pub diag: Vec<FieldElem>,
    pub rank: usize,
}

impl EvenRkReduction {
    pub fn p_matrix(&self) -> ConstMatrix {
        let ctx = self.t.ctx();
        let n = self.perm.len();
        let mut p = ConstMatrix::zero(ctx, n, n);
        for (c, &r) in self.perm.iter().enumerate() {
            p.set(r, c, ctx.one());
        }
        p
    }

    pub fn d_matrix(&self) -> ConstMatrix {
        let ctx = self.t.ctx();
        let n = self.diag.len();
        let mut d = ConstMatrix::zero(ctx, n, n);
        for (i, v) in self.diag.iter().enumerate() {
            d.set(i, i, v.clone());
        }
        d
    }

    pub fn pd(&self) -> ConstMatrix {
        self.p_matrix().mul(&self.d_matrix())
    }

    /// Re-check every structural invariant against the original matrix.
    pub fn verify(&self, m: &ConstMatrix) -> Result<()> {
        let n = self.perm.len();
        if m.rows() != n || m.cols() != n {
            return Err(Error::ShapeMismatch("reduction size mismatch".into()));
        }
        for i in 0..n {
            if !self.t.get(i, i).is_one() {
                return Err(Error::ContractViolation("T diagonal not unit".into()));
            }
            for j in i + 1..n {
                if !self.t.get(i, j).is_zero() {
                    return Err(Error::ContractViolation("T not lower triangular".into()));
                }
            }
            if self.perm[self.perm[i]] != i {
                return Err(Error::ContractViolation("perm not an involution".into()));
            }
        }
        let lhs = self.t.transpose().mul(m).mul(&self.t);
        if lhs != self.pd() {
            return Err(Error::ContractViolation("TᵗMT ≠ PD".into()));
        }
        let nonzero = self.diag.iter().filter(|d| !d.is_zero()).count();
        if nonzero != self.rank || m.rank() != self.rank {
            return Err(Error::ContractViolation("rank bookkeeping wrong".into()));
        }
        Ok(())
    }
}

/// Reduce a symmetric matrix by the congruence TᵗMT = P·D.
///
/// Handles every symmetric matrix away from characteristic 2, and symmetric
/// matrices with zero diagonal in characteristic 2. The one unservable
/// configuration — characteristic 2 with a nonzero diagonal entry blocking a
/// pair pivot — reports NonzeroDiagonal.
pub fn symmetric_reduce(m: &ConstMatrix) -> Result<EvenRkReduction> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        });
    }
    if m != &m.transpose() {
        return Err(Error::NotSymmetric);
    }
    let ctx = m.ctx().clone();
    let char2 = ctx.characteristic() == 2;
    let mut w = m.clone();
    let mut t = ConstMatrix::identity(&ctx, n);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut diag: Vec<FieldElem> = vec![ctx.zero(); n];
    let mut active = vec![true; n];

    // W ← FᵗWF and T ← T·F for F = I + c·E_{k,j} with k > j (unit lower)
    let apply = |w: &mut ConstMatrix, t: &mut ConstMatrix, c: &FieldElem, k: usize, j: usize| {
        debug_assert!(k > j);
        for col in 0..n {
            let v = w.get(j, col).add(&c.mul(w.get(k, col)));
            w.set(j, col, v);
        }
        for row in 0..n {
            let v = w.get(row, j).add(&c.mul(w.get(row, k)));
            w.set(row, j, v);
            let tv = t.get(row, j).add(&c.mul(t.get(row, k)));
            t.set(row, j, tv);
        }
    };

    for h in (0..n).rev() {
        if !active[h] {
            continue;
        }
        // lowest nonzero entry of column h among active rows
        let pivot = (0..=h).rev().find(|&i| active[i] && !w.get(i, h).is_zero());
        let Some(i) = pivot else {
            active[h] = false;
            continue; // zero column: perm[h] = h, diag[h] = 0 already
        };
        if i == h {
            // diagonal pivot
            let d = w.get(h, h).clone();
            for j in 0..h {
                if active[j] && !w.get(j, h).is_zero() {
                    let c = w.get(j, h).div(&d).neg();
                    apply(&mut w, &mut t, &c, h, j);
                }
            }
            diag[h] = d;
            active[h] = false;
        } else {
            // pair pivot at (i, h); w[h][h] = 0 here by maximality of i
            let a = w.get(i, h).clone();
            for j in 0..i {
                if active[j] && !w.get(j, h).is_zero() {
                    let c = w.get(j, h).div(&a).neg();
                    apply(&mut w, &mut t, &c, i, j);
                }
            }
            for j in 0..h {
                if j != i && active[j] && !w.get(j, i).is_zero() {
                    let c = w.get(j, i).div(&a).neg();
                    apply(&mut w, &mut t, &c, h, j);
                }
            }
            if !w.get(i, i).is_zero() {
                if char2 {
                    return Err(Error::NonzeroDiagonal(i));
                }
                let two_a = a.add(&a);
                let c = w.get(i, i).div(&two_a).neg();
                apply(&mut w, &mut t, &c, h, i);
            }
            perm[i] = h;
            perm[h] = i;
            diag[i] = a.clone();
            diag[h] = a;
            active[i] = false;
            active[h] = false;
        }
    }

    let rank = diag.iter().filter(|d| !d.is_zero()).count();
    let red = EvenRkReduction {
        t,
        perm,
        diag,
        rank,
    };
    red.verify(m)
        .expect("symmetric reduction failed its own invariants (internal bug)");
    Ok(red)
}

/// [`symmetric_reduce`] specialized to the zero-diagonal symmetric shape.
/// Checks the diagonal up front and reports the first offending index.
pub fn evenrk_reduce(m: &ConstMatrix) -> Result<EvenRkReduction> {
    if m.rows() == m.cols() {
        for i in 0..m.rows() {
            if !m.get(i, i).is_zero() {
                return Err(Error::NonzeroDiagonal(i));
            }
        }
    }
    symmetric_reduce(m)
}

/// Full diagonalization QᵗMQ = diag(d) away from characteristic 2: run the
/// congruence reduction, then split every 2×2 pair block [[0,a],[a,0]] into
/// diag(2a, −2a) with the block congruence [[1,1],[1,−1]].
pub fn diagonalize_symmetric(m: &ConstMatrix) -> Result<(ConstMatrix, Vec<FieldElem>)> {
    let ctx = m.ctx().clone();
    if ctx.characteristic() == 2 {
        return Err(Error::WrongCharacteristic {
            expected: 0,
            found: 2,
        });
    }
    let red = symmetric_reduce(m)?;
    let n = red.perm.len();
    let mut r = ConstMatrix::identity(&ctx, n);
    let mut d = red.diag.clone();
    for i in 0..n {
        let h = red.perm[i];
        if h > i {
            r.set(i, h, ctx.one());
            r.set(h, i, ctx.one());
            r.set(h, h, ctx.from_i64(-1));
            let two_a = red.diag[i].add(&red.diag[i]);
            d[i] = two_a.clone();
            d[h] = two_a.neg();
        }
    }
    let q = red.t.mul(&r);
    let check = q.transpose().mul(m).mul(&q);
    for i in 0..n {
        for j in 0..n {
            let expect = if i == j { d[i].clone() } else { ctx.zero() };
            assert!(
                check.get(i, j) == &expect,
                "diagonalization failed (internal bug)"
            );
        }
    }
    Ok((q, d))
}
