//! Compressed sparse column storage.
//!
//! A [`SparseMat`] holds three arrays: the nonzero values in column-major
//! order, their row indices, and one pointer per column into those arrays
//! (plus a trailing pointer equal to `nnz`). Every public constructor and
//! operation returns a matrix in canonical form: row indices strictly
//! increasing inside each column and no explicitly stored zeros.
//!
//! Column access is `O(1)` and column permutations cost `O(nnz + ncols)`,
//! independent of the number of rows. The algebra layer leans on this: the
//! coefficient matrices it stores are tall (one row per decision variable)
//! and comparatively narrow.

use std::fmt::Debug;
use std::ops::{Add, Mul};

use crate::error::{Error, Result};

/// Element type of a [`SparseMat`].
pub trait Scalar: Copy + PartialEq + Debug + Add<Output = Self> + Mul<Output = Self> + 'static {
    const ZERO: Self;
    const ONE: Self;

    #[inline]
    fn is_zero(&self) -> bool {
        *self == Self::ZERO
    }
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
}

impl Scalar for u32 {
    const ZERO: Self = 0;
    const ONE: Self = 1;
}

/// Sparse matrix in canonical CSC form.
#[derive(Clone, PartialEq)]
pub struct SparseMat<T = f64> {
    nrows: usize,
    ncols: usize,
    colptr: Vec<usize>,
    rowidx: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Scalar> Debug for SparseMat<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SparseMat({}x{}, nnz={}) [", self.nrows, self.ncols, self.nnz())?;
        for (k, (i, j, v)) in self.triplets().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if k == 32 {
                write!(f, "...")?;
                break;
            }
            write!(f, "({i},{j})={v:?}")?;
        }
        write!(f, "]")
    }
}

fn is_strictly_increasing(map: &[usize]) -> bool {
    map.windows(2).all(|w| w[0] < w[1])
}

impl<T: Scalar> SparseMat<T> {
    /// All-zero matrix of the given shape.
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self { nrows, ncols, colptr: vec![0; ncols + 1], rowidx: Vec::new(), vals: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self { nrows: n, ncols: n, colptr: (0..=n).collect(), rowidx: (0..n).collect(), vals: vec![T::ONE; n] }
    }

    /// Builds a matrix from raw CSC arrays, checking every canonical-form
    /// invariant.
    pub fn from_csc(nrows: usize, ncols: usize, colptr: Vec<usize>, rowidx: Vec<usize>, vals: Vec<T>) -> Result<Self> {
        if colptr.len() != ncols + 1 || colptr[0] != 0 {
            return Err(Error::Dimension(format!(
                "column pointer array has length {} for {} columns",
                colptr.len(),
                ncols
            )));
        }
        if rowidx.len() != vals.len() || colptr[ncols] != vals.len() {
            return Err(Error::Dimension("row index / value arrays disagree with column pointers".into()));
        }
        for j in 0..ncols {
            let (lo, hi) = (colptr[j], colptr[j + 1]);
            if lo > hi {
                return Err(Error::Argument(format!("column pointers decrease at column {j}")));
            }
            let rows = &rowidx[lo..hi];
            if !is_strictly_increasing(rows) || rows.last().is_some_and(|&r| r >= nrows) {
                return Err(Error::Argument(format!("column {j} is not canonical")));
            }
        }
        if vals.iter().any(Scalar::is_zero) {
            return Err(Error::Argument("explicit zero stored".into()));
        }
        Ok(Self { nrows, ncols, colptr, rowidx, vals })
    }

    /// Assembles a matrix from coordinate triplets. Entries sharing a
    /// position are summed; resulting zeros are dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, rows: &[usize], cols: &[usize], vals: &[T]) -> Result<Self> {
        if rows.len() != cols.len() || rows.len() != vals.len() {
            return Err(Error::Dimension(format!(
                "triplet arrays have lengths {}, {}, {}",
                rows.len(),
                cols.len(),
                vals.len()
            )));
        }
        for (&i, &j) in rows.iter().zip(cols) {
            if i >= nrows || j >= ncols {
                return Err(Error::Dimension(format!("entry ({i},{j}) outside {nrows}x{ncols}")));
            }
        }
        Ok(Self::assemble(nrows, ncols, rows.iter().copied().zip(cols.iter().copied()).zip(vals.iter().copied())))
    }

    /// Counting sort on columns, then per-column sort on rows with
    /// duplicate summation. Indices must already be in range.
    pub(crate) fn assemble<I>(nrows: usize, ncols: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), T)>,
    {
        let entries: Vec<((usize, usize), T)> = entries.into_iter().filter(|(_, v)| !v.is_zero()).collect();
        let mut counts = vec![0usize; ncols + 1];
        for &((_, j), _) in &entries {
            counts[j + 1] += 1;
        }
        for j in 0..ncols {
            counts[j + 1] += counts[j];
        }
        let mut next = counts.clone();
        let mut bucket: Vec<(usize, T)> = vec![(0, T::ZERO); entries.len()];
        for ((i, j), v) in entries {
            bucket[next[j]] = (i, v);
            next[j] += 1;
        }
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowidx = Vec::with_capacity(bucket.len());
        let mut vals = Vec::with_capacity(bucket.len());
        colptr.push(0);
        for j in 0..ncols {
            let col = &mut bucket[counts[j]..counts[j + 1]];
            if !col.windows(2).all(|w| w[0].0 < w[1].0) {
                col.sort_by_key(|e| e.0);
            }
            let mut k = 0;
            while k < col.len() {
                let row = col[k].0;
                let mut acc = col[k].1;
                k += 1;
                while k < col.len() && col[k].0 == row {
                    acc = acc + col[k].1;
                    k += 1;
                }
                if !acc.is_zero() {
                    rowidx.push(row);
                    vals.push(acc);
                }
            }
            colptr.push(rowidx.len());
        }
        Self { nrows, ncols, colptr, rowidx, vals }
    }

    #[inline]
    pub fn nrows(&self) -> usize {
        self.nrows
    }

    #[inline]
    pub fn ncols(&self) -> usize {
        self.ncols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.nrows, self.ncols)
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn colptr(&self) -> &[usize] {
        &self.colptr
    }

    pub fn rowidx(&self) -> &[usize] {
        &self.rowidx
    }

    pub fn vals(&self) -> &[T] {
        &self.vals
    }

    /// Row indices and values of column `j`.
    #[inline]
    pub fn col(&self, j: usize) -> (&[usize], &[T]) {
        let (lo, hi) = (self.colptr[j], self.colptr[j + 1]);
        (&self.rowidx[lo..hi], &self.vals[lo..hi])
    }

    #[inline]
    pub fn col_nnz(&self, j: usize) -> usize {
        self.colptr[j + 1] - self.colptr[j]
    }

    /// Entry `(i, j)`, zero when not stored. Binary search within the column.
    pub fn get(&self, i: usize, j: usize) -> T {
        let (rows, vals) = self.col(j);
        match rows.binary_search(&i) {
            Ok(k) => vals[k],
            Err(_) => T::ZERO,
        }
    }

    /// Iterates `(row, col, value)` in column-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.ncols).flat_map(move |j| {
            let (rows, vals) = self.col(j);
            rows.iter().zip(vals).map(move |(&i, &v)| (i, j, v))
        })
    }

    /// Dense row-major copy. Intended for tests and debugging.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut out = vec![vec![T::ZERO; self.ncols]; self.nrows];
        for (i, j, v) in self.triplets() {
            out[i][j] = v;
        }
        out
    }

    /// Kronecker product `self ⊗ other`. Work is `O(nnz(self)·nnz(other))`.
    pub fn kron(&self, other: &Self) -> Self {
        let nrows = self.nrows * other.nrows;
        let ncols = self.ncols * other.ncols;
        let mut colptr = Vec::with_capacity(ncols + 1);
        let mut rowidx = Vec::with_capacity(self.nnz() * other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() * other.nnz());
        colptr.push(0);
        for ja in 0..self.ncols {
            let (ra, va) = self.col(ja);
            for jb in 0..other.ncols {
                let (rb, vb) = other.col(jb);
                // rows ia*nb + ib are increasing for increasing (ia, ib)
                for (&ia, &a) in ra.iter().zip(va) {
                    for (&ib, &b) in rb.iter().zip(vb) {
                        let v = a * b;
                        if !v.is_zero() {
                            rowidx.push(ia * other.nrows + ib);
                            vals.push(v);
                        }
                    }
                }
                colptr.push(rowidx.len());
            }
        }
        Self { nrows, ncols, colptr, rowidx, vals }
    }

    /// Column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_cols(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.ncols)?;
        Ok(self.gather_cols_unchecked(perm))
    }

    /// Selects columns `idx[0], idx[1], ...` (repetition allowed).
    pub fn gather_cols(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&j| j >= self.ncols) {
            return Err(Error::Argument(format!("column {bad} out of range for {} columns", self.ncols)));
        }
        Ok(self.gather_cols_unchecked(idx))
    }

    fn gather_cols_unchecked(&self, idx: &[usize]) -> Self {
        let mut colptr = Vec::with_capacity(idx.len() + 1);
        let total: usize = idx.iter().map(|&j| self.col_nnz(j)).sum();
        let mut rowidx = Vec::with_capacity(total);
        let mut vals = Vec::with_capacity(total);
        colptr.push(0);
        for &j in idx {
            let (r, v) = self.col(j);
            rowidx.extend_from_slice(r);
            vals.extend_from_slice(v);
            colptr.push(rowidx.len());
        }
        Self { nrows: self.nrows, ncols: idx.len(), colptr, rowidx, vals }
    }

    /// Row `i` of the result is row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.nrows)?;
        let mut inv = vec![0; perm.len()];
        for (i, &p) in perm.iter().enumerate() {
            inv[p] = i;
        }
        Ok(self.remap_unchecked(&inv, None, self.nrows, self.ncols))
    }

    /// Scatters entry `(i, j)` to `(rowmap[i], colmap[j])` in a matrix of the
    /// given shape, summing collisions. `None` for `colmap` keeps columns.
    pub fn remap(&self, rowmap: &[usize], colmap: Option<&[usize]>, nrows: usize, ncols: usize) -> Result<Self> {
        if rowmap.len() != self.nrows || rowmap.iter().any(|&i| i >= nrows) {
            return Err(Error::Dimension("row map does not fit".into()));
        }
        match colmap {
            Some(cm) if cm.len() != self.ncols || cm.iter().any(|&j| j >= ncols) => {
                return Err(Error::Dimension("column map does not fit".into()))
            }
            None if ncols != self.ncols => return Err(Error::Dimension("column count changed without a map".into())),
            _ => {}
        }
        Ok(self.remap_unchecked(rowmap, colmap, nrows, ncols))
    }

    pub(crate) fn remap_unchecked(
        &self,
        rowmap: &[usize],
        colmap: Option<&[usize]>,
        nrows: usize,
        ncols: usize,
    ) -> Self {
        let rows_monotone = is_strictly_increasing(rowmap);
        let cols_monotone = colmap.is_none_or(is_strictly_increasing);
        if rows_monotone && cols_monotone {
            // order preserved: write columns straight into place
            let mut colptr = vec![0usize; ncols + 1];
            for j in 0..self.ncols {
                let dst = colmap.map_or(j, |m| m[j]);
                colptr[dst + 1] = self.col_nnz(j);
            }
            for j in 0..ncols {
                colptr[j + 1] += colptr[j];
            }
            let rowidx = self.rowidx.iter().map(|&i| rowmap[i]).collect();
            return Self { nrows, ncols, colptr, rowidx, vals: self.vals.clone() };
        }
        Self::assemble(nrows, ncols, self.triplets().map(|(i, j, v)| ((rowmap[i], colmap.map_or(j, |m| m[j])), v)))
    }

    /// Elementwise sum of two matrices of identical shape.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.nrows, self.ncols, other.nrows, other.ncols
            )));
        }
        let mut colptr = Vec::with_capacity(self.ncols + 1);
        let mut rowidx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        colptr.push(0);
        for j in 0..self.ncols {
            let (ra, va) = self.col(j);
            let (rb, vb) = other.col(j);
            let (mut a, mut b) = (0, 0);
            while a < ra.len() || b < rb.len() {
                let (row, v) = if b == rb.len() || (a < ra.len() && ra[a] < rb[b]) {
                    a += 1;
                    (ra[a - 1], va[a - 1])
                } else if a == ra.len() || rb[b] < ra[a] {
                    b += 1;
                    (rb[b - 1], vb[b - 1])
                } else {
                    a += 1;
                    b += 1;
                    (ra[a - 1], va[a - 1] + vb[b - 1])
                };
                if !v.is_zero() {
                    rowidx.push(row);
                    vals.push(v);
                }
            }
            colptr.push(rowidx.len());
        }
        Ok(Self { nrows: self.nrows, ncols: self.ncols, colptr, rowidx, vals })
    }

    /// `[self other]`.
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.nrows != other.nrows {
            return Err(Error::Dimension(format!("hcat: {} rows vs {} rows", self.nrows, other.nrows)));
        }
        let mut colptr = self.colptr.clone();
        colptr.extend(other.colptr[1..].iter().map(|&p| p + self.nnz()));
        let mut rowidx = self.rowidx.clone();
        rowidx.extend_from_slice(&other.rowidx);
        let mut vals = self.vals.clone();
        vals.extend_from_slice(&other.vals);
        Ok(Self { nrows: self.nrows, ncols: self.ncols + other.ncols, colptr, rowidx, vals })
    }

    /// `[self; other]`.
    pub fn vcat(&self, other: &Self) -> Result<Self> {
        if self.ncols != other.ncols {
            return Err(Error::Dimension(format!("vcat: {} cols vs {} cols", self.ncols, other.ncols)));
        }
        let mut colptr = Vec::with_capacity(self.ncols + 1);
        let mut rowidx = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        colptr.push(0);
        for j in 0..self.ncols {
            let (ra, va) = self.col(j);
            let (rb, vb) = other.col(j);
            rowidx.extend_from_slice(ra);
            vals.extend_from_slice(va);
            rowidx.extend(rb.iter().map(|&i| i + self.nrows));
            vals.extend_from_slice(vb);
            colptr.push(rowidx.len());
        }
        Ok(Self { nrows: self.nrows + other.nrows, ncols: self.ncols, colptr, rowidx, vals })
    }

    /// Multiplies column `j` by `factor`; a zero factor empties the column.
    pub fn scale_col(&self, j: usize, factor: T) -> Result<Self> {
        if j >= self.ncols {
            return Err(Error::Index(format!("column {j} of {}", self.ncols)));
        }
        let mut factors = vec![T::ONE; self.ncols];
        factors[j] = factor;
        Ok(self.scale_cols(&factors))
    }

    /// Multiplies every column by its factor, pruning what becomes zero.
    pub fn scale_cols(&self, factors: &[T]) -> Self {
        assert_eq!(factors.len(), self.ncols, "one factor per column");
        let mut colptr = Vec::with_capacity(self.ncols + 1);
        let mut rowidx = Vec::with_capacity(self.nnz());
        let mut vals = Vec::with_capacity(self.nnz());
        colptr.push(0);
        for (j, &f) in factors.iter().enumerate() {
            if !f.is_zero() {
                let (r, v) = self.col(j);
                for (&i, &x) in r.iter().zip(v) {
                    let y = x * f;
                    if !y.is_zero() {
                        rowidx.push(i);
                        vals.push(y);
                    }
                }
            }
            colptr.push(rowidx.len());
        }
        Self { nrows: self.nrows, ncols: self.ncols, colptr, rowidx, vals }
    }

    /// Multiplies every entry by `factor`.
    pub fn scale(&self, factor: T) -> Self {
        self.scale_cols(&vec![factor; self.ncols])
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.nrows + 1];
        for &i in &self.rowidx {
            counts[i + 1] += 1;
        }
        for i in 0..self.nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut rowidx = vec![0; self.nnz()];
        let mut vals = vec![T::ZERO; self.nnz()];
        for j in 0..self.ncols {
            let (r, v) = self.col(j);
            for (&i, &x) in r.iter().zip(v) {
                rowidx[next[i]] = j;
                vals[next[i]] = x;
                next[i] += 1;
            }
        }
        Self { nrows: self.ncols, ncols: self.nrows, colptr: counts, rowidx, vals }
    }

    /// Keeps only the listed rows, renumbered in the given order.
    pub fn select_rows(&self, keep: &[usize]) -> Result<Self> {
        let mut map = vec![usize::MAX; self.nrows];
        for (new, &old) in keep.iter().enumerate() {
            if old >= self.nrows || map[old] != usize::MAX {
                return Err(Error::Argument(format!("row {old} invalid or repeated")));
            }
            map[old] = new;
        }
        let monotone = is_strictly_increasing(keep);
        let entries = self.triplets().filter(|&(i, _, _)| map[i] != usize::MAX).map(|(i, j, v)| ((map[i], j), v));
        if monotone {
            let mut colptr = Vec::with_capacity(self.ncols + 1);
            let mut rowidx = Vec::new();
            let mut vals = Vec::new();
            colptr.push(0);
            for j in 0..self.ncols {
                let (r, v) = self.col(j);
                for (&i, &x) in r.iter().zip(v) {
                    if map[i] != usize::MAX {
                        rowidx.push(map[i]);
                        vals.push(x);
                    }
                }
                colptr.push(rowidx.len());
            }
            return Ok(Self { nrows: keep.len(), ncols: self.ncols, colptr, rowidx, vals });
        }
        Ok(Self::assemble(keep.len(), self.ncols, entries))
    }

    /// Whether the stored arrays satisfy every canonical-form invariant.
    pub fn is_canonical(&self) -> bool {
        self.colptr.len() == self.ncols + 1
            && self.colptr[0] == 0
            && self.colptr[self.ncols] == self.nnz()
            && self.colptr.windows(2).all(|w| w[0] <= w[1])
            && (0..self.ncols).all(|j| {
                let (r, _) = self.col(j);
                is_strictly_increasing(r) && r.last().is_none_or(|&i| i < self.nrows)
            })
            && !self.vals.iter().any(Scalar::is_zero)
    }

    /// Applies `f` to every stored value, pruning zeros.
    pub fn map_values<U: Scalar>(&self, f: impl Fn(T) -> U) -> SparseMat<U> {
        SparseMat::<U>::assemble(self.nrows, self.ncols, self.triplets().map(|(i, j, v)| ((i, j), f(v))))
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::Argument(format!("permutation of length {} for {} entries", perm.len(), n)));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::Argument(format!("not a permutation: index {p}")));
        }
    }
    Ok(())
}
