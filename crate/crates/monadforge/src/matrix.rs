//! Exact sparse/dense matrices over a [`Field`]: rank, kernel bases, solving.
//!
//! These kernels sit under every cohomology computation in the crate, so the
//! rank path has to survive the large, very sparse matrices produced by the
//! Cech oracle as well as the small dense ones produced by section models.

use crate::error::{Error, Result};
use crate::field::Field;

/// Controls the sparse/dense elimination dispatch.
#[derive(Clone, Copy, Debug)]
pub struct EliminationOptions {
    /// Density at or above which a small matrix is eliminated densely.
    pub dense_threshold: f64,
    /// Never densify matrices with more cells than this.
    pub dense_max_cells: usize,
}

impl Default for EliminationOptions {
    fn default() -> Self {
        EliminationOptions {
            dense_threshold: 0.25,
            dense_max_cells: 1 << 22,
        }
    }
}

/// A matrix of exact scalars, stored sparsely row-major.
///
/// Entries are kept sorted by column and nonzero; the zero matrix has empty
/// rows. All scalars belong to the field carried by the matrix.
#[derive(Clone, Debug)]
pub struct ExactMatrix<F: Field> {
    field: F,
    nrows: usize,
    ncols: usize,
    rows: Vec<Vec<(usize, F::Elem)>>,
}

impl<F: Field> ExactMatrix<F> {
    pub fn zero(field: F, nrows: usize, ncols: usize) -> Self {
        ExactMatrix {
            field,
            nrows,
            ncols,
            rows: vec![Vec::new(); nrows],
        }
    }

    pub fn identity(field: F, n: usize) -> Self {
        let one = field.one();
        let rows = (0..n).map(|i| vec![(i, one.clone())]).collect();
        ExactMatrix {
            field,
            nrows: n,
            ncols: n,
            rows,
        }
    }

    /// Builds from (row, col, value) triplets; later duplicates are summed.
    pub fn from_triplets(
        field: F,
        nrows: usize,
        ncols: usize,
        triplets: impl IntoIterator<Item = (usize, usize, F::Elem)>,
    ) -> Self {
        let mut m = Self::zero(field, nrows, ncols);
        for (r, c, v) in triplets {
            m.add_to(r, c, v);
        }
        m
    }

    pub fn field(&self) -> &F {
        &self.field
    }
    pub fn nrows(&self) -> usize {
        self.nrows
    }
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn density(&self) -> f64 {
        let cells = self.nrows * self.ncols;
        if cells == 0 {
            0.0
        } else {
            self.nnz() as f64 / cells as f64
        }
    }

    /// Adds `v` into entry (r, c), dropping it if the sum is zero.
    pub fn add_to(&mut self, r: usize, c: usize, v: F::Elem) {
        assert!(r < self.nrows && c < self.ncols, "entry out of range");
        if self.field.is_zero(&v) {
            return;
        }
        let row = &mut self.rows[r];
        match row.binary_search_by_key(&c, |(j, _)| *j) {
            Ok(i) => {
                let s = self.field.add(&row[i].1, &v);
                if self.field.is_zero(&s) {
                    row.remove(i);
                } else {
                    row[i].1 = s;
                }
            }
            Err(i) => row.insert(i, (c, v)),
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: F::Elem) {
        assert!(r < self.nrows && c < self.ncols, "entry out of range");
        let row = &mut self.rows[r];
        match row.binary_search_by_key(&c, |(j, _)| *j) {
            Ok(i) => {
                if self.field.is_zero(&v) {
                    row.remove(i);
                } else {
                    row[i].1 = v;
                }
            }
            Err(i) => {
                if !self.field.is_zero(&v) {
                    row.insert(i, (c, v));
                }
            }
        }
    }

    pub fn get(&self, r: usize, c: usize) -> F::Elem {
        match self.rows[r].binary_search_by_key(&c, |(j, _)| *j) {
            Ok(i) => self.rows[r][i].1.clone(),
            Err(_) => self.field.zero(),
        }
    }

    pub fn row(&self, r: usize) -> &[(usize, F::Elem)] {
        &self.rows[r]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero(self.field.clone(), self.ncols, self.nrows);
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                t.rows[*c].push((r, v.clone()));
            }
        }
        // Row-major sweep already visits each target row in ascending column
        // order, so rows stay sorted.
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows, "matmul shape mismatch");
        let f = &self.field;
        let mut out = Self::zero(self.field.clone(), self.nrows, other.ncols);
        for (r, row) in self.rows.iter().enumerate() {
            let mut acc: Vec<Option<F::Elem>> = vec![None; other.ncols];
            for (k, v) in row {
                for (c, w) in &other.rows[*k] {
                    let add = f.mul(v, w);
                    acc[*c] = Some(match &acc[*c] {
                        None => add,
                        Some(cur) => f.add(cur, &add),
                    });
                }
            }
            out.rows[r] = acc
                .into_iter()
                .enumerate()
                .filter_map(|(c, v)| v.filter(|x| !f.is_zero(x)).map(|x| (c, x)))
                .collect();
        }
        out
    }

    pub fn mul_vec(&self, v: &[F::Elem]) -> Vec<F::Elem> {
        assert_eq!(v.len(), self.ncols);
        let f = &self.field;
        self.rows
            .iter()
            .map(|row| {
                let mut s = f.zero();
                for (c, w) in row {
                    s = f.fma(&s, w, &v[*c]);
                }
                s
            })
            .collect()
    }

    /// Stacks `self` on top of `other`.
    pub fn vcat(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.ncols);
        let mut rows = self.rows.clone();
        rows.extend(other.rows.iter().cloned());
        ExactMatrix {
            field: self.field.clone(),
            nrows: self.nrows + other.nrows,
            ncols: self.ncols,
            rows,
        }
    }

    /// Copies `block` into `self` with its (0,0) at (r0, c0).
    pub fn paste(&mut self, r0: usize, c0: usize, block: &Self) {
        assert!(r0 + block.nrows <= self.nrows && c0 + block.ncols <= self.ncols);
        for (r, row) in block.rows.iter().enumerate() {
            for (c, v) in row {
                self.set(r0 + r, c0 + *c, v.clone());
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.rank_with(&EliminationOptions::default())
    }

    pub fn rank_with(&self, opts: &EliminationOptions) -> usize {
        let cells = self.nrows * self.ncols;
        if cells == 0 {
            return 0;
        }
        let dense = cells <= 1 << 16
            || (cells <= opts.dense_max_cells && self.density() >= opts.dense_threshold);
        if dense {
            self.to_dense().rank()
        } else {
            sparse_rank(self.field.clone(), self.rows.clone())
        }
    }

    /// Canonical basis of the right kernel, one dense column per free column
    /// of the RREF. Deterministic: free columns ascending, unit coordinate at
    /// the free column.
    pub fn kernel_basis(&self) -> Vec<Vec<F::Elem>> {
        self.to_dense().kernel_basis()
    }

    /// Solves `self * x = b`; `None` when inconsistent.
    pub fn solve(&self, b: &[F::Elem]) -> Option<Vec<F::Elem>> {
        assert_eq!(b.len(), self.nrows);
        self.to_dense().solve(b)
    }

    pub fn is_zero_matrix(&self) -> bool {
        self.rows.iter().all(Vec::is_empty)
    }

    fn to_dense(&self) -> DenseMat<F> {
        let f = &self.field;
        let mut data = vec![f.zero(); self.nrows * self.ncols];
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row {
                data[r * self.ncols + c] = v.clone();
            }
        }
        DenseMat {
            field: self.field.clone(),
            nrows: self.nrows,
            ncols: self.ncols,
            data,
        }
    }
}

struct DenseMat<F: Field> {
    field: F,
    nrows: usize,
    ncols: usize,
    data: Vec<F::Elem>,
}

impl<F: Field> DenseMat<F> {
    fn at(&self, r: usize, c: usize) -> &F::Elem {
        &self.data[r * self.ncols + c]
    }

    /// Row-reduces in place to RREF; returns the pivot columns in order.
    fn rref(&mut self) -> Vec<usize> {
        let f = self.field.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.ncols {
            if r == self.nrows {
                break;
            }
            // First nonzero entry in this column at or below r: deterministic.
            let Some(pr) = (r..self.nrows).find(|&i| !f.is_zero(self.at(i, c))) else {
                continue;
            };
            if pr != r {
                for j in 0..self.ncols {
                    self.data.swap(pr * self.ncols + j, r * self.ncols + j);
                }
            }
            let inv = f.inv(self.at(r, c));
            for j in c..self.ncols {
                let v = f.mul(self.at(r, j), &inv);
                self.data[r * self.ncols + j] = v;
            }
            for i in 0..self.nrows {
                if i != r && !f.is_zero(self.at(i, c)) {
                    let factor = self.at(i, c).clone();
                    for j in c..self.ncols {
                        let sub = f.mul(&factor, self.at(r, j));
                        let v = f.sub(self.at(i, j), &sub);
                        self.data[i * self.ncols + j] = v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn rank(mut self) -> usize {
        self.rref().len()
    }

    fn kernel_basis(mut self) -> Vec<Vec<F::Elem>> {
        let f = self.field.clone();
        let pivots = self.rref();
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.ncols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        let mut basis = Vec::new();
        for fc in 0..self.ncols {
            if is_pivot[fc] {
                continue;
            }
            let mut v = vec![f.zero(); self.ncols];
            v[fc] = f.one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = f.neg(self.at(row, fc));
            }
            basis.push(v);
        }
        basis
    }

    fn solve(mut self, b: &[F::Elem]) -> Option<Vec<F::Elem>> {
        let f = self.field.clone();
        let ncols = self.ncols;
        // Augment and reduce.
        let mut aug = DenseMat {
            field: f.clone(),
            nrows: self.nrows,
            ncols: ncols + 1,
            data: Vec::with_capacity(self.nrows * (ncols + 1)),
        };
        for r in 0..self.nrows {
            for c in 0..ncols {
                aug.data.push(std::mem::replace(
                    &mut self.data[r * ncols + c],
                    f.zero(),
                ));
            }
            aug.data.push(b[r].clone());
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&ncols) {
            return None; // pivot in the augmented column
        }
        let mut x = vec![f.zero(); ncols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = aug.at(row, ncols).clone();
        }
        Some(x)
    }
}

/// Markowitz-flavoured sparse elimination, rank only. Deterministic pivoting:
/// lowest active-column count first, then lowest column index, then the row
/// with fewest entries, then lowest row index.
fn sparse_rank<F: Field>(field: F, rows: Vec<Vec<(usize, F::Elem)>>) -> usize {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let f = field;
    let mut rows: Vec<Option<Vec<(usize, F::Elem)>>> = rows
        .into_iter()
        .map(|r| if r.is_empty() { None } else { Some(r) })
        .collect();

    let ncols = rows
        .iter()
        .flatten()
        .flat_map(|r| r.iter().map(|(c, _)| *c + 1))
        .max()
        .unwrap_or(0);
    let mut col_count = vec![0usize; ncols];
    let mut col_rows: Vec<Vec<usize>> = vec![Vec::new(); ncols];
    for (i, row) in rows.iter().enumerate() {
        if let Some(row) = row {
            for (c, _) in row {
                col_count[*c] += 1;
                col_rows[*c].push(i);
            }
        }
    }

    let mut heap: BinaryHeap<Reverse<(usize, usize)>> = (0..ncols)
        .filter(|&c| col_count[c] > 0)
        .map(|c| Reverse((col_count[c], c)))
        .collect();

    let row_has = |row: &[(usize, F::Elem)], c: usize| -> Option<usize> {
        row.binary_search_by_key(&c, |(j, _)| *j).ok()
    };

    let mut rank = 0usize;
    while let Some(Reverse((cnt, c))) = heap.pop() {
        if col_count[c] != cnt || cnt == 0 {
            continue; // stale heap entry
        }
        // Pick the sparsest live row containing column c.
        let mut pivot_row = None;
        let mut best = usize::MAX;
        col_rows[c].retain(|&i| {
            let Some(row) = &rows[i] else { return false };
            if row_has(row, c).is_none() {
                return false;
            }
            if row.len() < best {
                best = row.len();
                pivot_row = Some(i);
            }
            true
        });
        let Some(pi) = pivot_row else {
            col_count[c] = 0;
            continue;
        };

        let pivot = rows[pi].take().expect("live pivot row");
        rank += 1;
        // Pivot row leaves the active set.
        for (pc, _) in &pivot {
            col_count[*pc] -= 1;
            if col_count[*pc] > 0 {
                heap.push(Reverse((col_count[*pc], *pc)));
            }
        }
        let pk = row_has(&pivot, c).expect("pivot entry");
        let pinv = f.inv(&pivot[pk].1);

        let targets: Vec<usize> = col_rows[c].iter().copied().filter(|&i| i != pi).collect();
        for i in targets {
            let Some(row) = rows[i].take() else { continue };
            let Some(k) = row_has(&row, c) else {
                rows[i] = Some(row);
                continue;
            };
            let factor = f.mul(&row[k].1, &pinv);
            // row := row - factor * pivot, merged by column.
            let mut merged: Vec<(usize, F::Elem)> =
                Vec::with_capacity(row.len() + pivot.len());
            let (mut a, mut b) = (0usize, 0usize);
            while a < row.len() || b < pivot.len() {
                let ca = row.get(a).map(|(j, _)| *j).unwrap_or(usize::MAX);
                let cb = pivot.get(b).map(|(j, _)| *j).unwrap_or(usize::MAX);
                if ca < cb {
                    merged.push(row[a].clone());
                    a += 1;
                } else if cb < ca {
                    let v = f.neg(&f.mul(&factor, &pivot[b].1));
                    if !f.is_zero(&v) {
                        col_count[cb] += 1;
                        col_rows[cb].push(i);
                        heap.push(Reverse((col_count[cb], cb)));
                        merged.push((cb, v));
                    }
                    b += 1;
                } else {
                    let v = f.sub(&row[a].1, &f.mul(&factor, &pivot[b].1));
                    if f.is_zero(&v) {
                        col_count[ca] -= 1;
                        if col_count[ca] > 0 {
                            heap.push(Reverse((col_count[ca], ca)));
                        }
                    } else {
                        merged.push((ca, v));
                    }
                    a += 1;
                    b += 1;
                }
            }
            if merged.is_empty() {
                // Row died; its entries were already accounted for above.
            } else {
                rows[i] = Some(merged);
            }
        }
    }
    rank
}

/// A growing subspace of `F^ambient` kept in reduced column echelon form.
///
/// Supports membership reduction and extraction of coordinates on the
/// complement of the pivot positions, which is how quotient-space bases are
/// realized throughout the crate.
#[derive(Clone, Debug)]
pub struct Subspace<F: Field> {
    field: F,
    ambient: usize,
    /// Normalized columns, each with leading 1 at its pivot position; kept
    /// mutually reduced.
    cols: Vec<Vec<(usize, F::Elem)>>,
    pivot_of_col: Vec<usize>,
    pivot_set: Vec<bool>,
}

impl<F: Field> Subspace<F> {
    pub fn new(field: F, ambient: usize) -> Self {
        Subspace {
            field,
            ambient,
            cols: Vec::new(),
            pivot_of_col: Vec::new(),
            pivot_set: vec![false; ambient],
        }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    /// Reduces `v` modulo the subspace in place; afterwards `v` vanishes on
    /// all pivot positions.
    pub fn reduce_in_place(&self, v: &mut [F::Elem]) {
        let f = &self.field;
        for (k, col) in self.cols.iter().enumerate() {
            let p = self.pivot_of_col[k];
            if f.is_zero(&v[p]) {
                continue;
            }
            let c = v[p].clone();
            for (i, w) in col {
                let sub = f.mul(&c, w);
                v[*i] = f.sub(&v[*i], &sub);
            }
        }
    }

    /// Inserts `v` (consumed) if independent; returns true when dim grew.
    pub fn insert(&mut self, mut v: Vec<F::Elem>) -> bool {
        assert_eq!(v.len(), self.ambient);
        let f = self.field.clone();
        self.reduce_in_place(&mut v);
        let Some(p) = v.iter().position(|x| !f.is_zero(x)) else {
            return false;
        };
        let inv = f.inv(&v[p]);
        let mut col: Vec<(usize, F::Elem)> = v
            .iter()
            .enumerate()
            .filter(|(_, x)| !f.is_zero(x))
            .map(|(i, x)| (i, f.mul(x, &inv)))
            .collect();
        // Keep existing columns reduced against the new pivot.
        for old in self.cols.iter_mut() {
            if let Ok(idx) = old.binary_search_by_key(&p, |(i, _)| *i) {
                let c = old[idx].1.clone();
                let mut merged: Vec<(usize, F::Elem)> = Vec::with_capacity(old.len() + col.len());
                let (mut a, mut b) = (0usize, 0usize);
                while a < old.len() || b < col.len() {
                    let ia = old.get(a).map(|(i, _)| *i).unwrap_or(usize::MAX);
                    let ib = col.get(b).map(|(i, _)| *i).unwrap_or(usize::MAX);
                    if ia < ib {
                        merged.push(old[a].clone());
                        a += 1;
                    } else if ib < ia {
                        let v = f.neg(&f.mul(&c, &col[b].1));
                        if !f.is_zero(&v) {
                            merged.push((ib, v));
                        }
                        b += 1;
                    } else {
                        let v = f.sub(&old[a].1, &f.mul(&c, &col[b].1));
                        if !f.is_zero(&v) {
                            merged.push((ia, v));
                        }
                        a += 1;
                        b += 1;
                    }
                }
                *old = merged;
            }
        }
        col.sort_by_key(|(i, _)| *i);
        self.cols.push(col);
        self.pivot_of_col.push(p);
        self.pivot_set[p] = true;
        true
    }

    /// Ambient positions not used as pivots, ascending. These index a basis of
    /// the quotient `F^ambient / self`.
    pub fn complement_positions(&self) -> Vec<usize> {
        (0..self.ambient).filter(|&i| !self.pivot_set[i]).collect()
    }

    /// Coordinates of `v + self` on the complement basis.
    pub fn quotient_coords(&self, mut v: Vec<F::Elem>, complement: &[usize]) -> Vec<F::Elem> {
        self.reduce_in_place(&mut v);
        complement.iter().map(|&i| v[i].clone()).collect()
    }

    pub fn contains(&self, v: &[F::Elem]) -> bool {
        let mut w = v.to_vec();
        self.reduce_in_place(&mut w);
        w.iter().all(|x| self.field.is_zero(x))
    }
}

/// Convenience: dimension check `rank + |kernel| = cols` used by tests.
pub fn rank_nullity_holds<F: Field>(m: &ExactMatrix<F>) -> bool {
    m.rank() + m.kernel_basis().len() == m.ncols()
}

impl<F: Field> ExactMatrix<F> {
    /// Verifies `self * v = 0` for each column `v`.
    pub fn kills<'a>(&self, vs: impl IntoIterator<Item = &'a Vec<F::Elem>>) -> bool
    where
        F::Elem: 'a,
    {
        vs.into_iter().all(|v| {
            self.mul_vec(v)
                .iter()
                .all(|x| self.field.is_zero(x))
        })
    }

    /// Entry-by-entry equality (shapes must match).
    pub fn equals(&self, other: &Self) -> Result<bool> {
        if self.nrows != other.nrows || self.ncols != other.ncols {
            return Err(Error::Shape("matrix comparison shape mismatch".into()));
        }
        Ok(self.rows == other.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PrimeField, Rationals};
    use proptest::prelude::*;

    fn fp() -> PrimeField {
        PrimeField::new(32003).unwrap()
    }

    #[test]
    fn empty_matrix_has_rank_zero() {
        let m = ExactMatrix::zero(fp(), 0, 0);
        assert_eq!(m.rank(), 0);
        assert!(m.kernel_basis().is_empty());
    }

    #[test]
    fn identity_rank() {
        let q = Rationals;
        let m = ExactMatrix::identity(q, 3);
        assert_eq!(m.rank(), 3);
        assert!(m.kernel_basis().is_empty());
    }

    #[test]
    fn proportional_rows_rank_one() {
        let q = Rationals;
        let f = |n: i64| Rationals.from_i64(n);
        let m = ExactMatrix::from_triplets(
            q,
            2,
            2,
            vec![(0, 0, f(1)), (0, 1, f(2)), (1, 0, f(2)), (1, 1, f(4))],
        );
        assert_eq!(m.rank(), 1);
        assert_eq!(m.kernel_basis().len(), 1);
    }

    #[test]
    fn explicit_kernel() {
        // [[1,1,0],[0,0,1]] has kernel spanned by (1,-1,0).
        let q = Rationals;
        let f = |n: i64| Rationals.from_i64(n);
        let m = ExactMatrix::from_triplets(
            q,
            2,
            3,
            vec![(0, 0, f(1)), (0, 1, f(1)), (1, 2, f(1))],
        );
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        assert_eq!(k[0], vec![f(-1), f(1), f(0)]);
        assert!(m.kills(&k));
    }

    #[test]
    fn zero_matrix_kernel_is_everything() {
        let m = ExactMatrix::zero(fp(), 2, 3);
        assert_eq!(m.rank(), 0);
        assert_eq!(m.kernel_basis().len(), 3);
    }

    #[test]
    fn solve_roundtrip() {
        let q = Rationals;
        let f = |n: i64| Rationals.from_i64(n);
        let m = ExactMatrix::from_triplets(
            q,
            2,
            2,
            vec![(0, 0, f(2)), (0, 1, f(1)), (1, 1, f(3))],
        );
        let x = m.solve(&[f(5), f(9)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![f(5), f(9)]);
        // Inconsistent system.
        let s = ExactMatrix::from_triplets(Rationals, 2, 1, vec![(0, 0, f(1)), (1, 0, f(2))]);
        assert!(s.solve(&[f(1), f(3)]).is_none());
    }

    #[test]
    fn subspace_quotient_coords() {
        let f = fp();
        let mut s = Subspace::new(f, 3);
        assert!(s.insert(vec![1, 2, 0]));
        assert!(!s.insert(vec![2, 4, 0]));
        let comp = s.complement_positions();
        assert_eq!(comp.len(), 2);
        assert!(s.contains(&[3, 6, 0]));
        assert!(!s.contains(&[0, 1, 0]));
        let coords = s.quotient_coords(vec![1, 0, 5], &comp);
        assert_eq!(coords.len(), 2);
    }

    fn arb_matrix() -> impl Strategy<Value = ExactMatrix<PrimeField>> {
        (1usize..8, 1usize..8).prop_flat_map(|(r, c)| {
            proptest::collection::vec(0i64..7, r * c).prop_map(move |vals| {
                let f = fp();
                ExactMatrix::from_triplets(
                    f,
                    r,
                    c,
                    vals.iter()
                        .enumerate()
                        .map(|(i, &v)| (i / c, i % c, f.from_i64(v))),
                )
            })
        })
    }

    proptest! {
        #[test]
        fn rank_plus_nullity_is_cols(m in arb_matrix()) {
            prop_assert!(rank_nullity_holds(&m));
        }

        #[test]
        fn rank_equals_rank_of_transpose(m in arb_matrix()) {
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn kernel_vectors_are_killed(m in arb_matrix()) {
            let k = m.kernel_basis();
            prop_assert!(m.kills(&k));
        }

        #[test]
        fn sparse_and_dense_ranks_agree(m in arb_matrix()) {
            let dense = m.rank_with(&EliminationOptions { dense_threshold: 0.0, dense_max_cells: 1 << 30 });
            let sparse = m.rank_with(&EliminationOptions { dense_threshold: 2.0, dense_max_cells: 0 });
            prop_assert_eq!(dense, sparse);
        }
    }
}
