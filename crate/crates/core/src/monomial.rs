//! Monomial bases stored as degree matrices.
//!
//! Row `k` of a [`DegreeMatrix`] holds the exponents of monomial `k`, one
//! column per variable of its [`VarSet`]. Rows are kept distinct and sorted
//! ascending in lexicographic order with the first variable most
//! significant, so the full degree-2 basis in `(x1, x2)` reads
//! `1, x2, x2², x1, x1·x2, x1²`.
//!
//! Merging follows the classic sort-based recipe: map both bases onto the
//! union of their variables, give each row an integer weight from a
//! radix-`(d+1)` encoding of its exponents, sort the weights and drop
//! neighbouring duplicates. When `(d+1)^p` no longer fits the exact range of
//! a double the weight is split into several stages, each covering a group
//! of columns, and compared stage by stage.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::sparse::SparseMat;

/// Sorted set of distinct variable names.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct VarSet {
    names: Arc<Vec<String>>,
}

impl fmt::Debug for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.names.iter()).finish()
    }
}

impl VarSet {
    /// Collects names into a set, sorting and removing repeats.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Self { names: Arc::new(names) }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, k: usize) -> &str {
        &self.names[k]
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.binary_search_by(|n| n.as_str().cmp(name)).ok()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.position(name).is_some()
    }

    /// Same set, cheap identity check first.
    fn same_as(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.names, &other.names) || self.names == other.names
    }

    pub fn without(&self, name: &str) -> Self {
        Self { names: Arc::new(self.names.iter().filter(|n| n.as_str() != name).cloned().collect()) }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.names.iter().all(|n| other.contains(n))
    }
}

/// Sorted union of two variable sets, plus the column each input variable
/// lands in.
pub fn merge_vars(a: &VarSet, b: &VarSet) -> (VarSet, Vec<usize>, Vec<usize>) {
    if a.same_as(b) {
        let id: Vec<usize> = (0..a.len()).collect();
        return (a.clone(), id.clone(), id);
    }
    let (na, nb) = (a.names(), b.names());
    let mut merged = Vec::with_capacity(na.len() + nb.len());
    let mut inj_a = Vec::with_capacity(na.len());
    let mut inj_b = Vec::with_capacity(nb.len());
    let (mut i, mut j) = (0, 0);
    while i < na.len() || j < nb.len() {
        let ord = match (na.get(i), nb.get(j)) {
            (Some(x), Some(y)) => x.cmp(y),
            (Some(_), None) => Ordering::Less,
            _ => Ordering::Greater,
        };
        match ord {
            Ordering::Less => {
                inj_a.push(merged.len());
                merged.push(na[i].clone());
                i += 1;
            }
            Ordering::Greater => {
                inj_b.push(merged.len());
                merged.push(nb[j].clone());
                j += 1;
            }
            Ordering::Equal => {
                inj_a.push(merged.len());
                inj_b.push(merged.len());
                merged.push(na[i].clone());
                i += 1;
                j += 1;
            }
        }
    }
    (VarSet { names: Arc::new(merged) }, inj_a, inj_b)
}

/// Canonical monomial basis: distinct exponent rows in ascending
/// lexicographic order.
#[derive(Clone, PartialEq)]
pub struct DegreeMatrix {
    vars: VarSet,
    /// `n × p` exponents.
    degs: SparseMat<u32>,
    /// `p × n`; column `k` lists the nonzero exponents of monomial `k`.
    by_row: SparseMat<u32>,
}

impl fmt::Debug for DegreeMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DegreeMatrix{:?}", self.vars)?;
        f.debug_list().entries(self.to_dense()).finish()
    }
}

impl DegreeMatrix {
    /// Basis holding only the constant monomial.
    pub fn constant(vars: VarSet) -> Self {
        let p = vars.len();
        Self::from_sorted_rows(vars, p, &[Vec::new()])
    }

    /// Basis with no monomials at all.
    pub fn empty(vars: VarSet) -> Self {
        let p = vars.len();
        Self::from_sorted_rows(vars, p, &[])
    }

    /// Accepts an exponent matrix that must already be canonical.
    pub fn new(vars: VarSet, degs: SparseMat<u32>) -> Result<Self> {
        if degs.ncols() != vars.len() {
            return Err(Error::Dimension(format!("{} degree columns for {} variables", degs.ncols(), vars.len())));
        }
        let by_row = degs.transpose();
        let z = Self { vars, degs, by_row };
        if (1..z.nrows()).any(|k| cmp_rows(z.row(k - 1), z.row(k)) != Ordering::Less) {
            return Err(Error::Argument("degree matrix rows are not sorted and distinct".into()));
        }
        Ok(z)
    }

    /// Canonicalizes arbitrary dense exponent rows.
    pub fn from_dense_rows(vars: VarSet, rows: &[Vec<u32>]) -> Result<(Self, Vec<usize>)> {
        let p = vars.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != p) {
            return Err(Error::Dimension(format!("row of length {} for {} variables", bad.len(), p)));
        }
        let sparse_rows: Vec<Vec<(usize, u32)>> =
            rows.iter().map(|r| r.iter().enumerate().filter(|(_, &d)| d > 0).map(|(k, &d)| (k, d)).collect()).collect();
        Ok(canonicalize_rows(vars, &sparse_rows))
    }

    /// Rows given as sorted `(column, exponent)` lists, already canonical.
    pub(crate) fn from_sorted_rows(vars: VarSet, p: usize, rows: &[Vec<(usize, u32)>]) -> Self {
        let by_row = rows_to_csc(p, rows);
        let degs = by_row.transpose();
        Self { vars, degs, by_row }
    }

    pub fn vars(&self) -> &VarSet {
        &self.vars
    }

    /// Exponents as an `n × p` sparse matrix.
    pub fn degs(&self) -> &SparseMat<u32> {
        &self.degs
    }

    pub fn nrows(&self) -> usize {
        self.degs.nrows()
    }

    pub fn nvars(&self) -> usize {
        self.vars.len()
    }

    /// Number of stored nonzero exponents.
    pub fn nnz(&self) -> usize {
        self.degs.nnz()
    }

    /// Nonzero `(column, exponent)` pairs of monomial `k`.
    pub fn row(&self, k: usize) -> RowRef<'_> {
        let (cols, degs) = self.by_row.col(k);
        RowRef { cols, degs }
    }

    pub fn row_owned(&self, k: usize) -> Vec<(usize, u32)> {
        self.row(k).iter().collect()
    }

    pub fn total_degree(&self, k: usize) -> u32 {
        self.row(k).degs.iter().sum()
    }

    pub fn max_total_degree(&self) -> u32 {
        (0..self.nrows()).map(|k| self.total_degree(k)).max().unwrap_or(0)
    }

    pub fn max_entry(&self) -> u32 {
        self.degs.vals().iter().copied().max().unwrap_or(0)
    }

    pub fn degree_of(&self, k: usize, var: usize) -> u32 {
        self.by_row.get(var, k)
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        self.degs.to_dense()
    }

    /// Row index of a monomial given as sorted `(column, exponent)` pairs.
    pub fn find(&self, row: &[(usize, u32)]) -> Option<usize> {
        let probe = RowRef::from_pairs(row);
        let (cols, degs) = probe;
        let probe = RowRef { cols: &cols, degs: &degs };
        let mut lo = 0;
        let mut hi = self.nrows();
        while lo < hi {
            let mid = (lo + hi) / 2;
            match cmp_rows(self.row(mid), probe) {
                Ordering::Less => lo = mid + 1,
                Ordering::Greater => hi = mid,
                Ordering::Equal => return Some(mid),
            }
        }
        None
    }

    /// Value of every monomial at a point given in variable order.
    pub fn eval(&self, point: &[f64]) -> Vec<f64> {
        assert_eq!(point.len(), self.nvars());
        (0..self.nrows())
            .map(|k| {
                let r = self.row(k);
                r.cols.iter().zip(r.degs).map(|(&c, &d)| point[c].powi(d as i32)).product()
            })
            .collect()
    }

    /// Re-expresses the basis over a superset of its variables; `inj` maps
    /// each current column to its column in `vars`. Row order is unchanged.
    pub fn embed(&self, vars: &VarSet, inj: &[usize]) -> Self {
        if vars.same_as(&self.vars) {
            return self.clone();
        }
        let rows: Vec<Vec<(usize, u32)>> =
            (0..self.nrows()).map(|k| self.row(k).iter().map(|(c, d)| (inj[c], d)).collect()).collect();
        Self::from_sorted_rows(vars.clone(), vars.len(), &rows)
    }

    /// Keeps the listed rows (ascending indices keep the basis canonical).
    pub fn select_rows(&self, keep: &[usize]) -> Self {
        let rows: Vec<Vec<(usize, u32)>> = keep.iter().map(|&k| self.row_owned(k)).collect();
        let z = Self::from_sorted_rows(self.vars.clone(), self.nvars(), &rows);
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        z
    }
}

/// Borrowed sparse exponent row.
#[derive(Clone, Copy, Debug)]
pub struct RowRef<'a> {
    pub cols: &'a [usize],
    pub degs: &'a [u32],
}

impl<'a> RowRef<'a> {
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32)> + 'a {
        self.cols.iter().copied().zip(self.degs.iter().copied())
    }

    fn from_pairs(row: &[(usize, u32)]) -> (Vec<usize>, Vec<u32>) {
        row.iter().filter(|p| p.1 > 0).map(|&(c, d)| (c, d)).unzip()
    }
}

fn rows_to_csc(p: usize, rows: &[Vec<(usize, u32)>]) -> SparseMat<u32> {
    let mut colptr = Vec::with_capacity(rows.len() + 1);
    let total: usize = rows.iter().map(Vec::len).sum();
    let mut rowidx = Vec::with_capacity(total);
    let mut vals = Vec::with_capacity(total);
    colptr.push(0);
    for r in rows {
        for &(c, d) in r {
            if d > 0 {
                rowidx.push(c);
                vals.push(d);
            }
        }
        colptr.push(rowidx.len());
    }
    SparseMat::from_csc(p, rows.len(), colptr, rowidx, vals).expect("rows must hold sorted in-range columns")
}

/// Direct lexicographic comparison of two sparse rows (first column most
/// significant). A row with a nonzero where the other has a zero is larger.
pub fn cmp_rows(a: RowRef<'_>, b: RowRef<'_>) -> Ordering {
    let (mut i, mut j) = (0, 0);
    loop {
        match (a.cols.get(i), b.cols.get(j)) {
            (None, None) => return Ordering::Equal,
            (Some(_), None) => return Ordering::Greater,
            (None, Some(_)) => return Ordering::Less,
            (Some(&ca), Some(&cb)) => match ca.cmp(&cb) {
                Ordering::Less => return Ordering::Greater,
                Ordering::Greater => return Ordering::Less,
                Ordering::Equal => {
                    match a.degs[i].cmp(&b.degs[j]) {
                        Ordering::Equal => {}
                        o => return o,
                    }
                    i += 1;
                    j += 1;
                }
            },
        }
    }
}

/// Radix-encoded sort keys for the rows of a degree matrix.
///
/// With radix `r = dmax + 1` and `p` columns, row `j` gets the weight
/// `Σ_k Z[j,k]·r^(p−1−k)`. When `r^p ≥ 2^53` the columns are split into
/// groups of `width` columns (the largest `width` with `r^width < 2^53`);
/// each group yields one stage key and rows compare stage by stage. Only
/// nonzero stages are stored.
#[derive(Clone, Debug)]
pub struct LexKeys {
    radix: u64,
    width: usize,
    stages: usize,
    ptr: Vec<usize>,
    entries: Vec<(u32, u64)>,
}

/// Exclusive upper bound on each stage key: exactly representable in an f64.
const KEY_LIMIT: u64 = 1 << 53;

impl LexKeys {
    pub fn radix(&self) -> u64 {
        self.radix
    }

    /// Columns per stage.
    pub fn stage_width(&self) -> usize {
        self.width
    }

    pub fn stages(&self) -> usize {
        self.stages
    }

    pub fn len(&self) -> usize {
        self.ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Nonzero `(stage, key)` pairs of row `j`.
    pub fn key(&self, j: usize) -> &[(u32, u64)] {
        &self.entries[self.ptr[j]..self.ptr[j + 1]]
    }

    /// Key of row `j` when a single stage suffices.
    pub fn single(&self, j: usize) -> Option<u64> {
        (self.stages <= 1).then(|| self.key(j).first().map_or(0, |e| e.1))
    }

    /// Full key of row `j` with zero stages filled in.
    pub fn dense_key(&self, j: usize) -> Vec<u64> {
        let mut out = vec![0; self.stages.max(1)];
        for &(s, k) in self.key(j) {
            out[s as usize] = k;
        }
        out
    }

    pub fn cmp(&self, a: usize, b: usize) -> Ordering {
        let (ka, kb) = (self.key(a), self.key(b));
        let (mut i, mut j) = (0, 0);
        loop {
            match (ka.get(i), kb.get(j)) {
                (None, None) => return Ordering::Equal,
                (Some(_), None) => return Ordering::Greater,
                (None, Some(_)) => return Ordering::Less,
                (Some(&(sa, va)), Some(&(sb, vb))) => match sa.cmp(&sb) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => {
                        if va != vb {
                            return va.cmp(&vb);
                        }
                        i += 1;
                        j += 1;
                    }
                },
            }
        }
    }
}

fn stage_width(radix: u64, p: usize) -> usize {
    if radix <= 1 {
        return p.max(1);
    }
    let mut width = 0;
    let mut pow: u64 = 1;
    while let Some(next) = pow.checked_mul(radix).filter(|&v| v < KEY_LIMIT) {
        pow = next;
        width += 1;
    }
    width.max(1)
}

fn keys_for_rows<'a, I>(rows: I, nrows: usize, p: usize, dmax: u32) -> LexKeys
where
    I: IntoIterator<Item = RowRef<'a>>,
{
    let radix = u64::from(dmax) + 1;
    let width = stage_width(radix, p);
    let stages = p.div_ceil(width).max(1);
    // powers[i] = radix^i for the positions inside one group
    let mut powers = vec![1u64; width];
    for i in 1..width {
        powers[i] = powers[i - 1].saturating_mul(radix);
    }
    let mut ptr = Vec::with_capacity(nrows + 1);
    let mut entries = Vec::new();
    ptr.push(0);
    for row in rows {
        let mut current: Option<(u32, u64)> = None;
        for (c, d) in row.iter() {
            let stage = (c / width) as u32;
            let group_end = ((stage as usize + 1) * width).min(p);
            let w = u64::from(d) * powers[group_end - 1 - c];
            match current.as_mut() {
                Some((s, acc)) if *s == stage => *acc += w,
                _ => {
                    if let Some(done) = current.take() {
                        entries.push(done);
                    }
                    current = Some((stage, w));
                }
            }
        }
        if let Some(done) = current {
            entries.push(done);
        }
        ptr.push(entries.len());
    }
    LexKeys { radix, width, stages, ptr, entries }
}

/// Sort keys for the rows of `z`; `dmax` must bound every exponent.
pub fn lex_keys(z: &DegreeMatrix, dmax: u32) -> LexKeys {
    assert!(dmax >= z.max_entry(), "dmax {} below largest exponent {}", dmax, z.max_entry());
    keys_for_rows((0..z.nrows()).map(|k| z.row(k)), z.nrows(), z.nvars(), dmax)
}

/// Sorts and deduplicates arbitrary exponent rows.
///
/// Returns the canonical basis and, for every input row, the index of the
/// canonical row holding it.
pub fn canonicalize(vars: &VarSet, degs: &SparseMat<u32>) -> Result<(DegreeMatrix, Vec<usize>)> {
    if degs.ncols() != vars.len() {
        return Err(Error::Dimension(format!("{} degree columns for {} variables", degs.ncols(), vars.len())));
    }
    let by_row = degs.transpose();
    let rows: Vec<Vec<(usize, u32)>> = (0..by_row.ncols())
        .map(|k| {
            let (c, d) = by_row.col(k);
            c.iter().copied().zip(d.iter().copied()).collect()
        })
        .collect();
    Ok(canonicalize_rows(vars.clone(), &rows))
}

pub(crate) fn canonicalize_rows(vars: VarSet, rows: &[Vec<(usize, u32)>]) -> (DegreeMatrix, Vec<usize>) {
    let p = vars.len();
    let dmax = rows.iter().flat_map(|r| r.iter().map(|e| e.1)).max().unwrap_or(0);
    let refs = rows.iter().map(|r| {
        // callers hand over sorted columns; RowRef borrows split slices
        r.as_slice()
    });
    let split: Vec<(Vec<usize>, Vec<u32>)> = refs.map(RowRef::from_pairs).collect();
    let keys = keys_for_rows(split.iter().map(|(c, d)| RowRef { cols: c, degs: d }), rows.len(), p, dmax);

    let mut order: Vec<usize> = (0..rows.len()).collect();
    if !(1..rows.len()).all(|j| keys.cmp(j - 1, j) == Ordering::Less) {
        order.sort_by(|&a, &b| keys.cmp(a, b));
    }
    let mut rowmap = vec![0; rows.len()];
    let mut unique: Vec<Vec<(usize, u32)>> = Vec::with_capacity(rows.len());
    let mut last: Option<usize> = None;
    for &i in &order {
        if last.is_none_or(|l| keys.cmp(l, i) != Ordering::Equal) {
            let (c, d) = &split[i];
            unique.push(c.iter().copied().zip(d.iter().copied()).collect());
            last = Some(i);
        }
        rowmap[i] = unique.len() - 1;
    }
    (DegreeMatrix::from_sorted_rows(vars, p, &unique), rowmap)
}

/// Every monomial in `vars` of total degree at most `dmax`, in canonical
/// order. There are `(p+dmax)!/(p!·dmax!)` of them.
pub fn full_basis(vars: &VarSet, dmax: u32) -> DegreeMatrix {
    let p = vars.len();
    let mut rows = Vec::new();
    let mut current = Vec::with_capacity(p);
    fn walk(var: usize, p: usize, budget: u32, current: &mut Vec<(usize, u32)>, rows: &mut Vec<Vec<(usize, u32)>>) {
        if var == p {
            rows.push(current.clone());
            return;
        }
        for d in 0..=budget {
            if d > 0 {
                current.push((var, d));
            }
            walk(var + 1, p, budget - d, current, rows);
            if d > 0 {
                current.pop();
            }
        }
    }
    walk(0, p, dmax, &mut current, &mut rows);
    DegreeMatrix::from_sorted_rows(vars.clone(), p, &rows)
}

/// Union of two bases. `map1[j]` / `map2[j]` give the merged row of row `j`
/// of the respective input.
pub fn merge_bases(z1: &DegreeMatrix, z2: &DegreeMatrix) -> (DegreeMatrix, Vec<usize>, Vec<usize>) {
    if z1 == z2 {
        let id: Vec<usize> = (0..z1.nrows()).collect();
        return (z1.clone(), id.clone(), id);
    }
    let (vars, inj1, inj2) = merge_vars(&z1.vars, &z2.vars);
    let mut rows = Vec::with_capacity(z1.nrows() + z2.nrows());
    rows.extend((0..z1.nrows()).map(|k| z1.row(k).iter().map(|(c, d)| (inj1[c], d)).collect::<Vec<_>>()));
    rows.extend((0..z2.nrows()).map(|k| z2.row(k).iter().map(|(c, d)| (inj2[c], d)).collect::<Vec<_>>()));
    let (z3, rowmap) = canonicalize_rows(vars, &rows);
    let map2 = rowmap[z1.nrows()..].to_vec();
    let mut map1 = rowmap;
    map1.truncate(z1.nrows());
    (z3, map1, map2)
}

fn add_rows(a: impl Iterator<Item = (usize, u32)>, b: impl Iterator<Item = (usize, u32)>) -> Vec<(usize, u32)> {
    let mut out = Vec::new();
    let mut a = a.peekable();
    let mut b = b.peekable();
    loop {
        match (a.peek().copied(), b.peek().copied()) {
            (None, None) => return out,
            (Some(x), None) => {
                out.push(x);
                a.next();
            }
            (None, Some(y)) => {
                out.push(y);
                b.next();
            }
            (Some(x), Some(y)) => match x.0.cmp(&y.0) {
                Ordering::Less => {
                    out.push(x);
                    a.next();
                }
                Ordering::Greater => {
                    out.push(y);
                    b.next();
                }
                Ordering::Equal => {
                    out.push((x.0, x.1 + y.1));
                    a.next();
                    b.next();
                }
            },
        }
    }
}

/// All pairwise products of two bases. Raw product `i·n2 + j` has exponents
/// `Z1[i] + Z2[j]`; `prodmap` sends it to its row in the canonical result.
pub fn kron_bases(z1: &DegreeMatrix, z2: &DegreeMatrix) -> (DegreeMatrix, Vec<usize>) {
    let (vars, inj1, inj2) = merge_vars(&z1.vars, &z2.vars);
    let (n1, n2) = (z1.nrows(), z2.nrows());
    if n2 == 1 && z2.nnz() == 0 {
        return (z1.embed(&vars, &inj1), (0..n1).collect());
    }
    if n1 == 1 && z1.nnz() == 0 {
        return (z2.embed(&vars, &inj2), (0..n2).collect());
    }
    let left: Vec<Vec<(usize, u32)>> = (0..n1).map(|i| z1.row(i).iter().map(|(c, d)| (inj1[c], d)).collect()).collect();
    let right: Vec<Vec<(usize, u32)>> =
        (0..n2).map(|j| z2.row(j).iter().map(|(c, d)| (inj2[c], d)).collect()).collect();
    let mut rows = Vec::with_capacity(n1 * n2);
    for a in &left {
        for b in &right {
            rows.push(add_rows(a.iter().copied(), b.iter().copied()));
        }
    }
    canonicalize_rows(vars, &rows)
}
