//! Exact linear algebra over K and over K[x].
//!
//! [`ConstMatrix`] holds field elements (the S, T, U, M⁽ⁱ⁾ of the conjugation
//! machinery); [`PolyMatrix`] holds polynomials (Jacobians and their blocks).
//! Rank and determinant of polynomial matrices are taken over the fraction
//! field K(x) by fraction-free elimination — see [`bareiss`]. Kernel and
//! column-space computations that quantify over *constant* vectors live in
//! [`kernel`]; the generic-point decomposition in [`irlem`]; the symmetric
//! pivot-pair reduction in [`evenrk`].

pub mod bareiss;
pub mod evenrk;
pub mod irlem;
pub mod kernel;

pub use bareiss::{det, is_nilpotent, rank_kx};
pub use evenrk::{diagonalize_symmetric, evenrk_reduce, symmetric_reduce, EvenRkReduction};
pub use irlem::{irlem_decompose, IrlemDecomposition};
pub use kernel::{
    columns_pairwise_dependent_over_k, constant_kernel, constant_vectors_in_colspace,
    find_nonvanishing_point, kernel_kx, rows_pairwise_dependent_over_k, KernelSide,
    PairwiseDependence,
};

use std::fmt;

use crate::error::{Error, Result};
use crate::field::{FieldCtx, FieldElem};
use crate::poly::Poly;

// ---------------------------------------------------------------------------
// Constant matrices
// ---------------------------------------------------------------------------

/// Dense matrix of field elements, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct ConstMatrix {
    ctx: FieldCtx,
    rows: usize,
    cols: usize,
    entries: Vec<FieldElem>,
}

impl ConstMatrix {
    pub fn zero(ctx: &FieldCtx, rows: usize, cols: usize) -> ConstMatrix {
        ConstMatrix {
            ctx: ctx.clone(),
            rows,
            cols,
            entries: vec![ctx.zero(); rows * cols],
        }
    }

    pub fn identity(ctx: &FieldCtx, n: usize) -> ConstMatrix {
        let mut m = ConstMatrix::zero(ctx, n, n);
        for i in 0..n {
            m.set(i, i, ctx.one());
        }
        m
    }

    pub fn from_rows(ctx: &FieldCtx, rows: Vec<Vec<FieldElem>>) -> ConstMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for e in row {
                assert!(e.ctx() == ctx, "entry context mismatch");
                entries.push(e);
            }
        }
        ConstMatrix {
            ctx: ctx.clone(),
            rows: r,
            cols: c,
            entries,
        }
    }

    pub fn from_fn(
        ctx: &FieldCtx,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> FieldElem,
    ) -> ConstMatrix {
        let mut m = ConstMatrix::zero(ctx, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// From integer entries, mapped through the field.
    pub fn from_i64(ctx: &FieldCtx, rows: Vec<Vec<i64>>) -> ConstMatrix {
        ConstMatrix::from_rows(
            ctx,
            rows.into_iter()
                .map(|r| r.into_iter().map(|v| ctx.from_i64(v)).collect())
                .collect(),
        )
    }

    /// Permutation matrix P with (P·x)_i = x_{perm[i]}, i.e. P[i][perm[i]] = 1.
    pub fn permutation(ctx: &FieldCtx, perm: &[usize]) -> ConstMatrix {
        let n = perm.len();
        let mut m = ConstMatrix::zero(ctx, n, n);
        for (i, &j) in perm.iter().enumerate() {
            m.set(i, j, ctx.one());
        }
        m
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &FieldElem {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: FieldElem) {
        assert!(v.ctx() == &self.ctx, "entry context mismatch");
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[FieldElem] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<FieldElem> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    if i == j {
                        self.get(i, j).is_one()
                    } else {
                        self.get(i, j).is_zero()
                    }
                })
            })
    }

    pub fn transpose(&self) -> ConstMatrix {
        ConstMatrix::from_fn(&self.ctx, self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn add(&self, other: &ConstMatrix) -> ConstMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ConstMatrix::from_fn(&self.ctx, self.rows, self.cols, |i, j| {
            self.get(i, j).add(other.get(i, j))
        })
    }

    pub fn sub(&self, other: &ConstMatrix) -> ConstMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        ConstMatrix::from_fn(&self.ctx, self.rows, self.cols, |i, j| {
            self.get(i, j).sub(other.get(i, j))
        })
    }

    pub fn neg(&self) -> ConstMatrix {
        ConstMatrix::from_fn(&self.ctx, self.rows, self.cols, |i, j| self.get(i, j).neg())
    }

    pub fn scale(&self, c: &FieldElem) -> ConstMatrix {
        ConstMatrix::from_fn(&self.ctx, self.rows, self.cols, |i, j| self.get(i, j).mul(c))
    }

    pub fn mul(&self, other: &ConstMatrix) -> ConstMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        ConstMatrix::from_fn(&self.ctx, self.rows, other.cols, |i, j| {
            let mut acc = self.ctx.zero();
            for k in 0..self.cols {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[FieldElem]) -> Vec<FieldElem> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = self.ctx.zero();
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> ConstMatrix {
        ConstMatrix::from_fn(&self.ctx, rows.len(), cols.len(), |i, j| {
            self.get(rows[i], cols[j]).clone()
        })
    }

    pub fn set_block(&mut self, i0: usize, j0: usize, block: &ConstMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(i0 + i, j0 + j, block.get(i, j).clone());
            }
        }
    }

    pub fn block_diag(ctx: &FieldCtx, blocks: &[&ConstMatrix]) -> ConstMatrix {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = ConstMatrix::zero(ctx, n, m);
        let (mut i0, mut j0) = (0, 0);
        for b in blocks {
            out.set_block(i0, j0, b);
            i0 += b.rows;
            j0 += b.cols;
        }
        out
    }

    pub fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.entries.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.entries.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// Row-echelon rank by Gaussian elimination over the field.
    pub fn rank(&self) -> usize {
        let mut w = self.clone();
        let mut rank = 0;
        for col in 0..w.cols {
            let Some(piv) = (rank..w.rows).find(|&i| !w.get(i, col).is_zero()) else {
                continue;
            };
            w.swap_rows(rank, piv);
            let inv = w.get(rank, col).inv();
            for i in rank + 1..w.rows {
                if w.get(i, col).is_zero() {
                    continue;
                }
                let f = w.get(i, col).mul(&inv);
                for j in col..w.cols {
                    let v = w.get(i, j).sub(&f.mul(w.get(rank, j)));
                    w.set(i, j, v);
                }
            }
            rank += 1;
            if rank == w.rows {
                break;
            }
        }
        rank
    }

    pub fn det(&self) -> FieldElem {
        assert_eq!(self.rows, self.cols, "determinant of nonsquare matrix");
        let mut w = self.clone();
        let mut acc = self.ctx.one();
        for col in 0..w.cols {
            let Some(piv) = (col..w.rows).find(|&i| !w.get(i, col).is_zero()) else {
                return self.ctx.zero();
            };
            if piv != col {
                w.swap_rows(col, piv);
                acc = acc.neg();
            }
            acc = acc.mul(w.get(col, col));
            let inv = w.get(col, col).inv();
            for i in col + 1..w.rows {
                if w.get(i, col).is_zero() {
                    continue;
                }
                let f = w.get(i, col).mul(&inv);
                for j in col..w.cols {
                    let v = w.get(i, j).sub(&f.mul(w.get(col, j)));
                    w.set(i, j, v);
                }
            }
        }
        acc
    }

    pub fn is_invertible(&self) -> bool {
        self.rows == self.cols && !self.det().is_zero()
    }

    pub fn inverse(&self) -> Result<ConstMatrix> {
        if self.rows != self.cols {
            return Err(Error::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        let n = self.rows;
        let mut w = self.clone();
        let mut inv = ConstMatrix::identity(&self.ctx, n);
        for col in 0..n {
            let Some(piv) = (col..n).find(|&i| !w.get(i, col).is_zero()) else {
                return Err(Error::Singular);
            };
            w.swap_rows(col, piv);
            inv.swap_rows(col, piv);
            let d = w.get(col, col).inv();
            for j in 0..n {
                w.set(col, j, w.get(col, j).mul(&d));
                inv.set(col, j, inv.get(col, j).mul(&d));
            }
            for i in 0..n {
                if i == col || w.get(i, col).is_zero() {
                    continue;
                }
                let f = w.get(i, col).clone();
                for j in 0..n {
                    let wv = w.get(i, j).sub(&f.mul(w.get(col, j)));
                    w.set(i, j, wv);
                    let iv = inv.get(i, j).sub(&f.mul(inv.get(col, j)));
                    inv.set(i, j, iv);
                }
            }
        }
        Ok(inv)
    }

    /// Basis of the right null space {v : M·v = 0}, deterministic
    /// (reduced row echelon, free columns in ascending order, pivot entries
    /// back-substituted; each vector is scaled so its first nonzero
    /// coordinate is 1).
    pub fn kernel(&self) -> Vec<Vec<FieldElem>> {
        let mut w = self.clone();
        let mut pivots: Vec<(usize, usize)> = vec![]; // (row, col)
        let mut rank = 0;
        for col in 0..w.cols {
            let Some(piv) = (rank..w.rows).find(|&i| !w.get(i, col).is_zero()) else {
                continue;
            };
            w.swap_rows(rank, piv);
            let d = w.get(rank, col).inv();
            for j in 0..w.cols {
                w.set(rank, j, w.get(rank, j).mul(&d));
            }
            for i in 0..w.rows {
                if i == rank || w.get(i, col).is_zero() {
                    continue;
                }
                let f = w.get(i, col).clone();
                for j in 0..w.cols {
                    let v = w.get(i, j).sub(&f.mul(w.get(rank, j)));
                    w.set(i, j, v);
                }
            }
            pivots.push((rank, col));
            rank += 1;
            if rank == w.rows {
                break;
            }
        }
        let pivot_cols: Vec<usize> = pivots.iter().map(|&(_, c)| c).collect();
        let mut basis = vec![];
        for free in 0..w.cols {
            if pivot_cols.contains(&free) {
                continue;
            }
            let mut v = vec![self.ctx.zero(); w.cols];
            v[free] = self.ctx.one();
            for &(r, c) in &pivots {
                v[c] = w.get(r, free).neg();
            }
            let lead = v.iter().find(|e| !e.is_zero()).unwrap().inv();
            if !lead.is_one() {
                for e in v.iter_mut() {
                    *e = e.mul(&lead);
                }
            }
            basis.push(v);
        }
        basis
    }

    /// One solution of M·x = rhs if consistent (deterministic: free variables
    /// set to zero).
    pub fn solve(&self, rhs: &[FieldElem]) -> Option<Vec<FieldElem>> {
        assert_eq!(rhs.len(), self.rows);
        let mut w = ConstMatrix::from_fn(&self.ctx, self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self.get(i, j).clone()
            } else {
                rhs[i].clone()
            }
        });
        let mut pivots: Vec<(usize, usize)> = vec![];
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(piv) = (rank..w.rows).find(|&i| !w.get(i, col).is_zero()) else {
                continue;
            };
            w.swap_rows(rank, piv);
            let d = w.get(rank, col).inv();
            for j in 0..w.cols {
                w.set(rank, j, w.get(rank, j).mul(&d));
            }
            for i in 0..w.rows {
                if i == rank || w.get(i, col).is_zero() {
                    continue;
                }
                let f = w.get(i, col).clone();
                for j in 0..w.cols {
                    let v = w.get(i, j).sub(&f.mul(w.get(rank, j)));
                    w.set(i, j, v);
                }
            }
            pivots.push((rank, col));
            rank += 1;
        }
        // inconsistent iff a zero row has nonzero rhs
        for i in rank..self.rows {
            if !w.get(i, self.cols).is_zero() {
                return None;
            }
        }
        let mut x = vec![self.ctx.zero(); self.cols];
        for &(r, c) in &pivots {
            x[c] = w.get(r, self.cols).clone();
        }
        Some(x)
    }

    /// Lift into a polynomial matrix with constant entries.
    pub fn to_poly(&self, nvars: usize) -> PolyMatrix {
        PolyMatrix::from_fn(&self.ctx, nvars, self.rows, self.cols, |i, j| {
            Poly::constant(&self.ctx, nvars, self.get(i, j).clone())
        })
    }
}

impl fmt::Display for ConstMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for ConstMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

// ---------------------------------------------------------------------------
// Polynomial matrices
// ---------------------------------------------------------------------------

/// Dense matrix of polynomials sharing one context and ambient arity.
#[derive(Clone, PartialEq, Eq)]
pub struct PolyMatrix {
    ctx: FieldCtx,
    nvars: usize,
    rows: usize,
    cols: usize,
    entries: Vec<Poly>,
}

impl PolyMatrix {
    pub fn zero(ctx: &FieldCtx, nvars: usize, rows: usize, cols: usize) -> PolyMatrix {
        PolyMatrix {
            ctx: ctx.clone(),
            nvars,
            rows,
            cols,
            entries: vec![Poly::zero(ctx, nvars); rows * cols],
        }
    }

    pub fn identity(ctx: &FieldCtx, nvars: usize, n: usize) -> PolyMatrix {
        let mut m = PolyMatrix::zero(ctx, nvars, n, n);
        for i in 0..n {
            m.set(i, i, Poly::one(ctx, nvars));
        }
        m
    }

    pub fn from_rows(ctx: &FieldCtx, nvars: usize, rows: Vec<Vec<Poly>>) -> PolyMatrix {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut entries = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            for e in row {
                assert!(e.ctx() == ctx && e.nvars() == nvars, "entry mismatch");
                entries.push(e);
            }
        }
        PolyMatrix {
            ctx: ctx.clone(),
            nvars,
            rows: r,
            cols: c,
            entries,
        }
    }

    pub fn from_fn(
        ctx: &FieldCtx,
        nvars: usize,
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Poly,
    ) -> PolyMatrix {
        let mut m = PolyMatrix::zero(ctx, nvars, rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Parse entries in the polynomial text grammar.
    pub fn parse(ctx: &FieldCtx, nvars: usize, rows: &[&[&str]]) -> Result<PolyMatrix> {
        let mut out = vec![];
        for row in rows {
            let mut r = vec![];
            for s in *row {
                r.push(Poly::parse(ctx, nvars, s)?);
            }
            out.push(r);
        }
        Ok(PolyMatrix::from_rows(ctx, nvars, out))
    }

    pub fn ctx(&self) -> &FieldCtx {
        &self.ctx
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &Poly {
        &self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Poly) {
        assert!(
            v.ctx() == &self.ctx && v.nvars() == self.nvars,
            "entry mismatch"
        );
        self.entries[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Poly] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Poly> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|e| e.is_zero())
    }

    /// Every entry zero or homogeneous of degree 1.
    pub fn is_linear_form_matrix(&self) -> bool {
        self.entries.iter().all(|e| e.is_homogeneous_of_degree(1))
    }

    pub fn transpose(&self) -> PolyMatrix {
        PolyMatrix::from_fn(&self.ctx, self.nvars, self.cols, self.rows, |i, j| {
            self.get(j, i).clone()
        })
    }

    pub fn add(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        PolyMatrix::from_fn(&self.ctx, self.nvars, self.rows, self.cols, |i, j| {
            self.get(i, j).add(other.get(i, j))
        })
    }

    pub fn sub(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        PolyMatrix::from_fn(&self.ctx, self.nvars, self.rows, self.cols, |i, j| {
            self.get(i, j).sub(other.get(i, j))
        })
    }

    pub fn neg(&self) -> PolyMatrix {
        PolyMatrix::from_fn(&self.ctx, self.nvars, self.rows, self.cols, |i, j| {
            self.get(i, j).neg()
        })
    }

    pub fn mul(&self, other: &PolyMatrix) -> PolyMatrix {
        assert_eq!(self.cols, other.rows, "matrix product shape mismatch");
        PolyMatrix::from_fn(&self.ctx, self.nvars, self.rows, other.cols, |i, j| {
            let mut acc = Poly::zero(&self.ctx, self.nvars);
            for k in 0..self.cols {
                acc = acc.add(&self.get(i, k).mul(other.get(k, j)));
            }
            acc
        })
    }

    pub fn mul_vec(&self, v: &[Poly]) -> Vec<Poly> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Poly::zero(&self.ctx, self.nvars);
                for k in 0..self.cols {
                    acc = acc.add(&self.get(i, k).mul(&v[k]));
                }
                acc
            })
            .collect()
    }

    pub fn mul_const_left(&self, s: &ConstMatrix) -> PolyMatrix {
        assert_eq!(s.cols(), self.rows, "left factor shape mismatch");
        PolyMatrix::from_fn(&self.ctx, self.nvars, s.rows(), self.cols, |i, j| {
            let mut acc = Poly::zero(&self.ctx, self.nvars);
            for k in 0..self.rows {
                acc = acc.add(&self.get(k, j).scale(s.get(i, k)));
            }
            acc
        })
    }

    pub fn mul_const_right(&self, t: &ConstMatrix) -> PolyMatrix {
        assert_eq!(self.cols, t.rows(), "right factor shape mismatch");
        PolyMatrix::from_fn(&self.ctx, self.nvars, self.rows, t.cols(), |i, j| {
            let mut acc = Poly::zero(&self.ctx, self.nvars);
            for k in 0..self.cols {
                acc = acc.add(&self.get(i, k).scale(t.get(k, j)));
            }
            acc
        })
    }

    pub fn evaluate(&self, point: &[FieldElem]) -> Result<ConstMatrix> {
        let mut out = ConstMatrix::zero(&self.ctx, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).evaluate(point)?);
            }
        }
        Ok(out)
    }

    /// Entrywise substitution x_i ↦ args[i].
    pub fn substitute(&self, args: &[Poly]) -> Result<PolyMatrix> {
        let nv = args.first().map_or(self.nvars, |a| a.nvars());
        let mut out = PolyMatrix::zero(&self.ctx, nv, self.rows, self.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.set(i, j, self.get(i, j).substitute(args)?);
            }
        }
        Ok(out)
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> PolyMatrix {
        PolyMatrix::from_fn(&self.ctx, self.nvars, rows.len(), cols.len(), |i, j| {
            self.get(rows[i], cols[j]).clone()
        })
    }

    pub fn set_block(&mut self, i0: usize, j0: usize, block: &PolyMatrix) {
        for i in 0..block.rows {
            for j in 0..block.cols {
                self.set(i0 + i, j0 + j, block.get(i, j).clone());
            }
        }
    }

    /// Constant coefficient matrix of x_var across all entries (entries must
    /// have no monomial containing x_var together with other variables unless
    /// linear; intended for linear-form matrices).
    pub fn coeff_matrix(&self, var: usize) -> ConstMatrix {
        use crate::poly::Monomial;
        let m = Monomial::var(self.nvars, var);
        ConstMatrix::from_fn(&self.ctx, self.rows, self.cols, |i, j| {
            self.get(i, j).coefficient(&m)
        })
    }

    /// Split into blocks [[A,B],[C,D]] with A square of size r.
    pub fn block_split(&self, r: usize) -> BlockView {
        assert!(r <= self.rows && r <= self.cols, "split index too large");
        let rs: Vec<usize> = (0..r).collect();
        let rrest: Vec<usize> = (r..self.rows).collect();
        let cs: Vec<usize> = (0..r).collect();
        let crest: Vec<usize> = (r..self.cols).collect();
        BlockView {
            r,
            a: self.submatrix(&rs, &cs),
            b: self.submatrix(&rs, &crest),
            c: self.submatrix(&rrest, &cs),
            d: self.submatrix(&rrest, &crest),
        }
    }
}

impl fmt::Display for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            write!(f, "[")?;
            for j in 0..self.cols {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.get(i, j))?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

impl fmt::Debug for PolyMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Owned block decomposition at split index r: [[A,B],[C,D]], A is r×r.
pub struct BlockView {
    pub r: usize,
    pub a: PolyMatrix,
    pub b: PolyMatrix,
    pub c: PolyMatrix,
    pub d: PolyMatrix,
}

impl BlockView {
    pub fn reassemble(&self) -> PolyMatrix {
        let rows = self.a.rows() + self.c.rows();
        let cols = self.a.cols() + self.b.cols();
        let mut out = PolyMatrix::zero(self.a.ctx(), self.a.nvars(), rows, cols);
        out.set_block(0, 0, &self.a);
        out.set_block(0, self.r, &self.b);
        out.set_block(self.r, 0, &self.c);
        out.set_block(self.r, self.r, &self.d);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::make_field;

    #[test]
    fn const_matrix_inverse_roundtrip() {
        let q = make_field("Q").unwrap();
        let m = ConstMatrix::from_i64(&q, vec![vec![2, 1, 0], vec![1, 1, 0], vec![3, 0, 1]]);
        let inv = m.inverse().unwrap();
        assert!(m.mul(&inv).is_identity());
        assert!(inv.mul(&m).is_identity());
        assert_eq!(m.det(), q.from_i64(1));
        let sing = ConstMatrix::from_i64(&q, vec![vec![1, 2], vec![2, 4]]);
        assert!(matches!(sing.inverse(), Err(Error::Singular)));
        assert_eq!(sing.rank(), 1);
    }

    #[test]
    fn const_matrix_kernel_and_solve() {
        let f5 = make_field("GF(5)").unwrap();
        let m = ConstMatrix::from_i64(&f5, vec![vec![1, 2, 3], vec![2, 4, 6]]);
        let ker = m.kernel();
        assert_eq!(ker.len(), 2);
        for v in &ker {
            assert!(m.mul_vec(v).iter().all(|e| e.is_zero()));
        }
        let rhs = vec![f5.from_i64(1), f5.from_i64(2)];
        let x = m.solve(&rhs).unwrap();
        assert_eq!(m.mul_vec(&x), rhs);
        let bad = vec![f5.from_i64(1), f5.from_i64(3)];
        assert!(m.solve(&bad).is_none());
    }

    #[test]
    fn block_split_reassembles() {
        let q = make_field("Q").unwrap();
        let m = PolyMatrix::parse(
            &q,
            3,
            &[
                &["x1", "x2", "x3"],
                &["x2", "x3", "x1"],
                &["0", "x1", "x2"],
            ],
        )
        .unwrap();
        let b = m.block_split(2);
        assert_eq!(b.a.rows(), 2);
        assert_eq!(b.d.rows(), 1);
        assert_eq!(b.d.cols(), 1);
        assert_eq!(b.reassemble(), m);
    }

    #[test]
    fn poly_matrix_products() {
        let q = make_field("Q").unwrap();
        let m = PolyMatrix::parse(&q, 2, &[&["x1", "x2"], &["x2", "x1"]]).unwrap();
        let s = ConstMatrix::from_i64(&q, vec![vec![0, 1], vec![1, 0]]);
        let left = m.mul_const_left(&s);
        assert_eq!(left.get(0, 0), m.get(1, 0));
        let right = m.mul_const_right(&s);
        assert_eq!(right.get(0, 0), m.get(0, 1));
        let pt = vec![q.from_i64(2), q.from_i64(3)];
        let ev = m.evaluate(&pt).unwrap();
        assert_eq!(ev.get(0, 0), &q.from_i64(2));
        assert_eq!(ev.get(0, 1), &q.from_i64(3));
    }
}
