//! Matrix-valued polynomials that are affine in decision variables.
//!
//! A [`DPoly`] of size `m1 × m2` with `q` decision variables and an
//! `n`-monomial basis stores a coefficient matrix `C` of shape
//! `m1·(q+1) × m2·n`. Row block `i` / column block `j` hold entry `(i, j)`;
//! inside a block, row `0` is the part without decision variables and row
//! `1+k` multiplies decision variable `k`, while column `t` multiplies
//! monomial `t` of the basis.
//!
//! Because a block always has exactly `q+1` rows, no operation can produce a
//! product of two decision variables. Products with other polynomials are
//! only allowed when one side is known ([`PPoly`]).

use std::collections::HashMap;
use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::monomial::{self, DegreeMatrix, VarSet};
use crate::sparse::SparseMat;

type PowerGroup = (Vec<usize>, Vec<Vec<(usize, u32)>>);

/// Which side a known polynomial multiplies from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Polynomial matrix affine in decision variables.
#[derive(Clone, PartialEq)]
pub struct DPoly {
    rows: usize,
    cols: usize,
    dvars: VarSet,
    basis: DegreeMatrix,
    coeffs: SparseMat,
}

/// One term of a polynomial entry, used to build [`DPoly`] values by hand.
#[derive(Clone, Debug, PartialEq)]
pub struct Term {
    pub row: usize,
    pub col: usize,
    pub coeff: f64,
    pub dvar: Option<String>,
    pub monomial: Vec<(String, u32)>,
}

impl Term {
    pub fn new(coeff: f64) -> Self {
        Self { row: 0, col: 0, coeff, dvar: None, monomial: Vec::new() }
    }

    pub fn at(mut self, row: usize, col: usize) -> Self {
        self.row = row;
        self.col = col;
        self
    }

    pub fn dvar(mut self, name: impl Into<String>) -> Self {
        self.dvar = Some(name.into());
        self
    }

    pub fn pow(mut self, var: impl Into<String>, deg: u32) -> Self {
        self.monomial.push((var.into(), deg));
        self
    }
}

impl DPoly {
    /// Validating constructor from the raw representation.
    pub fn new(rows: usize, cols: usize, dvars: VarSet, basis: DegreeMatrix, coeffs: SparseMat) -> Result<Self> {
        let want = (rows * (dvars.len() + 1), cols * basis.nrows());
        if coeffs.shape() != want {
            return Err(Error::Dimension(format!(
                "coefficients are {}x{}, expected {}x{}",
                coeffs.nrows(),
                coeffs.ncols(),
                want.0,
                want.1
            )));
        }
        if let Some(clash) = dvars.names().iter().find(|n| basis.vars().contains(n)) {
            return Err(Error::Argument(format!("{clash} is both a decision and an independent variable")));
        }
        Ok(Self { rows, cols, dvars, basis, coeffs })
    }

    fn from_parts(rows: usize, cols: usize, dvars: VarSet, basis: DegreeMatrix, coeffs: SparseMat) -> Self {
        debug_assert_eq!(coeffs.nrows(), rows * (dvars.len() + 1), "block row count must stay q+1");
        debug_assert_eq!(coeffs.ncols(), cols * basis.nrows());
        Self { rows, cols, dvars, basis, coeffs }
    }

    /// The `rows × cols` zero matrix with no variables.
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_parts(rows, cols, VarSet::empty(), DegreeMatrix::empty(VarSet::empty()), SparseMat::zeros(rows, 0))
    }

    /// Constant matrix.
    pub fn constant(values: &[Vec<f64>]) -> Result<Self> {
        let rows = values.len();
        let cols = values.first().map_or(0, Vec::len);
        if values.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged constant matrix".into()));
        }
        let mut trip = Vec::new();
        for (i, r) in values.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                trip.push(((i, j), v));
            }
        }
        let basis = DegreeMatrix::constant(VarSet::empty());
        Ok(Self::from_parts(rows, cols, VarSet::empty(), basis, SparseMat::assemble(rows, cols, trip)))
    }

    pub fn scalar(value: f64) -> Self {
        Self::constant(&[vec![value]]).expect("1x1")
    }

    /// `value · I_n`.
    pub fn identity(n: usize, value: f64) -> Self {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { value } else { 0.0 }).collect()).collect();
        Self::constant(&rows).expect("square")
    }

    /// The independent variable `name` as a 1×1 polynomial.
    pub fn ivar(name: &str) -> Self {
        Self::from_terms(1, 1, &[Term::new(1.0).pow(name, 1)]).expect("single term")
    }

    /// The decision variable `name` as a 1×1 polynomial.
    pub fn dvar(name: &str) -> Self {
        Self::from_terms(1, 1, &[Term::new(1.0).dvar(name)]).expect("single term")
    }

    /// Builds a polynomial from explicit terms. Like terms are summed.
    pub fn from_terms(rows: usize, cols: usize, terms: &[Term]) -> Result<Self> {
        let dvars = VarSet::new(terms.iter().filter_map(|t| t.dvar.clone()));
        let ivars = VarSet::new(terms.iter().flat_map(|t| t.monomial.iter().filter(|m| m.1 > 0).map(|m| m.0.clone())));
        Self::from_terms_over(rows, cols, dvars, ivars, terms)
    }

    /// Like [`DPoly::from_terms`] but with explicitly given variable sets,
    /// which may include variables no term uses.
    pub fn from_terms_over(rows: usize, cols: usize, dvars: VarSet, ivars: VarSet, terms: &[Term]) -> Result<Self> {
        let mut raw_rows = Vec::with_capacity(terms.len());
        for t in terms {
            if t.row >= rows || t.col >= cols {
                return Err(Error::Index(format!("term at ({},{}) in a {rows}x{cols} matrix", t.row, t.col)));
            }
            let mut mono: Vec<(usize, u32)> = Vec::new();
            for (name, deg) in t.monomial.iter().filter(|m| m.1 > 0) {
                let c = ivars
                    .position(name)
                    .ok_or_else(|| Error::Argument(format!("unknown independent variable {name}")))?;
                mono.push((c, *deg));
            }
            mono.sort_by_key(|e| e.0);
            mono.dedup_by(|b, a| {
                if a.0 == b.0 {
                    a.1 += b.1;
                    true
                } else {
                    false
                }
            });
            raw_rows.push(mono);
        }
        let (basis, rowmap) = monomial::canonicalize_rows(ivars, &raw_rows);
        let n = basis.nrows();
        let q = dvars.len();
        let mut trip = Vec::with_capacity(terms.len());
        for (t, &k) in terms.iter().zip(&rowmap) {
            let a = match &t.dvar {
                None => 0,
                Some(d) => {
                    1 + dvars.position(d).ok_or_else(|| Error::Argument(format!("unknown decision variable {d}")))?
                }
            };
            trip.push(((t.row * (q + 1) + a, t.col * n + k), t.coeff));
        }
        Self::new(rows, cols, dvars, basis, SparseMat::assemble(rows * (q + 1), cols * n, trip))
    }

    pub fn matdim(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn dvars(&self) -> &VarSet {
        &self.dvars
    }

    pub fn ivars(&self) -> &VarSet {
        self.basis.vars()
    }

    pub fn basis(&self) -> &DegreeMatrix {
        &self.basis
    }

    pub fn coeffs(&self) -> &SparseMat {
        &self.coeffs
    }

    /// Number of decision variables `q`.
    pub fn ndvars(&self) -> usize {
        self.dvars.len()
    }

    /// Number of monomials `n` in the basis.
    pub fn nmonomials(&self) -> usize {
        self.basis.nrows()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.nnz() == 0
    }

    /// Rows of `C` per matrix entry; always `q + 1`.
    pub fn block_rows(&self) -> usize {
        self.dvars.len() + 1
    }

    /// Highest total degree among monomials carrying a nonzero coefficient.
    pub fn degree(&self) -> u32 {
        let n = self.nmonomials();
        (0..self.coeffs.ncols())
            .filter(|&c| self.coeffs.col_nnz(c) > 0)
            .map(|c| self.basis.total_degree(c % n))
            .max()
            .unwrap_or(0)
    }

    /// Evaluates the matrix at the given independent and decision variable
    /// values.
    pub fn eval(&self, x: &HashMap<String, f64>, xi: &HashMap<String, f64>) -> Result<DMatrix<f64>> {
        let point = self
            .ivars()
            .names()
            .iter()
            .map(|n| x.get(n).copied().ok_or_else(|| Error::Argument(format!("no value for independent variable {n}"))))
            .collect::<Result<Vec<f64>>>()?;
        let mut z1 = Vec::with_capacity(self.dvars.len() + 1);
        z1.push(1.0);
        for n in self.dvars.names() {
            z1.push(xi.get(n).copied().ok_or_else(|| Error::Argument(format!("no value for decision variable {n}")))?);
        }
        let mono = self.basis.eval(&point);
        let (q1, n) = (self.block_rows(), self.nmonomials());
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for (r, c, v) in self.coeffs.triplets() {
            out[(r / q1, c / n)] += v * z1[r % q1] * mono[c % n];
        }
        Ok(out)
    }

    /// Coefficient matrix re-expressed over larger decision/monomial sets.
    /// `dinj` maps decision variables and `bmap` basis rows into the targets.
    fn lift(&self, q_new: usize, dinj: &[usize], n_new: usize, bmap: &[usize]) -> SparseMat {
        let q1 = self.block_rows();
        let n = self.nmonomials();
        if q_new + 1 == q1 && n_new == n {
            return self.coeffs.clone();
        }
        let rowmap: Vec<usize> = (0..self.coeffs.nrows())
            .map(|r| {
                let (i, a) = (r / q1, r % q1);
                i * (q_new + 1) + if a == 0 { 0 } else { 1 + dinj[a - 1] }
            })
            .collect();
        let colmap: Vec<usize> = (0..self.coeffs.ncols()).map(|c| (c / n) * n_new + bmap[c % n]).collect();
        self.coeffs.remap_unchecked(&rowmap, Some(&colmap), self.rows * (q_new + 1), self.cols * n_new)
    }

    /// Common decision variables and basis for two polynomials, with both
    /// coefficient matrices rewritten over them.
    fn align(&self, other: &Self) -> (VarSet, DegreeMatrix, SparseMat, SparseMat) {
        let (dvars, dinj1, dinj2) = monomial::merge_vars(&self.dvars, &other.dvars);
        let (basis, map1, map2) = monomial::merge_bases(&self.basis, &other.basis);
        let q = dvars.len();
        let n = basis.nrows();
        let c1 = self.lift(q, &dinj1, n, &map1);
        let c2 = other.lift(q, &dinj2, n, &map2);
        (dvars, basis, c1, c2)
    }

    /// Sum of two polynomials of equal size: decision variables are merged,
    /// then the monomial bases, then the coefficients are scattered into the
    /// merged layout and added.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.matdim() != other.matdim() {
            return Err(Error::Dimension(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let (dvars, basis, c1, c2) = self.align(other);
        Ok(Self::from_parts(self.rows, self.cols, dvars, basis, c1.add(&c2)?))
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self { coeffs: self.coeffs.scale(factor), ..self.clone() }
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    /// Product with a known polynomial from the given side. A 1×1 factor on
    /// either side multiplies every entry.
    pub fn mul_poly(&self, p: &PPoly, side: Side) -> Result<Self> {
        let p = p.as_dpoly();
        let (kbasis, prodmap) = monomial::kron_bases(&p.basis, &self.basis);
        let (q1, ns, np, n3) = (self.block_rows(), self.nmonomials(), p.nmonomials(), kbasis.nrows());
        let pscalar = p.matdim() == (1, 1);
        let sscalar = self.matdim() == (1, 1);

        if pscalar && sscalar {
            // (bᵀ ⊗ C) with columns kp·ns + ks, then collapse equal monomials
            let k = p.coeffs.kron(&self.coeffs);
            let coeffs = k.remap_unchecked(&(0..q1).collect::<Vec<_>>(), Some(&prodmap), q1, n3);
            return Ok(Self::from_parts(1, 1, self.dvars.clone(), kbasis, coeffs));
        }

        let (out_rows, out_cols) = if pscalar {
            self.matdim()
        } else if sscalar {
            p.matdim()
        } else {
            match side {
                Side::Right if self.cols == p.rows => (self.rows, p.cols),
                Side::Left if p.cols == self.rows => (p.rows, self.cols),
                _ => {
                    return Err(Error::Dimension(format!(
                        "cannot multiply {}x{} by {}x{} on the {:?}",
                        self.rows, self.cols, p.rows, p.cols, side
                    )))
                }
            }
        };

        let mut trip = Vec::with_capacity(self.coeffs.nnz() * p.coeffs.nnz().min(64));
        if pscalar || sscalar {
            // broadcast: entry (h, k) of one factor times every entry of the other
            for (r, c, v) in self.coeffs.triplets() {
                let (i, a, j, ks) = (r / q1, r % q1, c / ns, c % ns);
                for (h, cp, b) in p.coeffs.triplets() {
                    let (k, kp) = (cp / np, cp % np);
                    let (oi, oj) = if pscalar { (i, j) } else { (h, k) };
                    trip.push(((oi * q1 + a, oj * n3 + prodmap[kp * ns + ks]), v * b));
                }
            }
        } else if side == Side::Right {
            // (S·P)(i,k) = Σ_j S(i,j) P(j,k); walk P by rows
            let pt = p.coeffs.transpose();
            for (r, c, v) in self.coeffs.triplets() {
                let (i, a, j, ks) = (r / q1, r % q1, c / ns, c % ns);
                let (pcols, pvals) = pt.col(j);
                for (&cp, &b) in pcols.iter().zip(pvals) {
                    let (k, kp) = (cp / np, cp % np);
                    trip.push(((i * q1 + a, k * n3 + prodmap[kp * ns + ks]), v * b));
                }
            }
        } else {
            // (P·S)(h,j) = Σ_i P(h,i) S(i,j); P's column block i
            for (r, c, v) in self.coeffs.triplets() {
                let (i, a, j, ks) = (r / q1, r % q1, c / ns, c % ns);
                for kp in 0..np {
                    let (prow, pvals) = p.coeffs.col(i * np + kp);
                    for (&h, &b) in prow.iter().zip(pvals) {
                        trip.push(((h * q1 + a, j * n3 + prodmap[kp * ns + ks]), v * b));
                    }
                }
            }
        }
        let coeffs = SparseMat::assemble(out_rows * q1, out_cols * n3, trip);
        Ok(Self::from_parts(out_rows, out_cols, self.dvars.clone(), kbasis, coeffs))
    }

    /// Product of two polynomials, at most one of which may carry decision
    /// variables.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        match (self.ndvars(), other.ndvars()) {
            (_, 0) => self.mul_poly(&PPoly::from_dpoly_unchecked(other.clone()), Side::Right),
            (0, _) => other.mul_poly(&PPoly::from_dpoly_unchecked(self.clone()), Side::Left),
            _ => Err(Error::NonLinear("product of two polynomials with decision variables".into())),
        }
    }

    /// Keeps the listed basis rows (ascending), replacing each by `rows` and
    /// scaling its coefficient columns by `factors`.
    fn rebuild_columns(&self, keep: &[usize], factors: &[f64], basis: DegreeMatrix) -> Self {
        let n = self.nmonomials();
        let mut idx = Vec::with_capacity(self.cols * keep.len());
        let mut f = Vec::with_capacity(self.cols * keep.len());
        for j in 0..self.cols {
            for (&k, &s) in keep.iter().zip(factors) {
                idx.push(j * n + k);
                f.push(s);
            }
        }
        let coeffs = self.coeffs.gather_cols(&idx).expect("kept columns in range").scale_cols(&f);
        Self::from_parts(self.rows, self.cols, self.dvars.clone(), basis, coeffs)
    }

    /// Zero polynomial with this one's size and variable sets.
    fn zero_like(&self) -> Self {
        let basis = DegreeMatrix::empty(self.ivars().clone());
        Self::from_parts(
            self.rows,
            self.cols,
            self.dvars.clone(),
            basis,
            SparseMat::zeros(self.rows * self.block_rows(), 0),
        )
    }

    /// Partial derivative with respect to an independent variable.
    ///
    /// Column `t` of every block is scaled by the exponent of `var` in
    /// monomial `t`, and that exponent is decremented. Differentiating with
    /// respect to a variable that does not occur gives zero.
    pub fn diff(&self, var: &str) -> Result<Self> {
        if self.dvars.contains(var) {
            return Err(Error::NonLinear(format!("cannot differentiate with respect to decision variable {var}")));
        }
        let Some(v) = self.ivars().position(var) else {
            return Ok(self.zero_like());
        };
        let mut keep = Vec::new();
        let mut factors = Vec::new();
        let mut rows = Vec::new();
        for k in 0..self.nmonomials() {
            let d = self.basis.degree_of(k, v);
            if d > 0 {
                keep.push(k);
                factors.push(f64::from(d));
                rows.push(
                    self.basis.row(k).iter().map(|(c, e)| if c == v { (c, e - 1) } else { (c, e) }).collect::<Vec<_>>(),
                );
            }
        }
        // decrementing one column of rows that all have it nonzero keeps order
        let basis = DegreeMatrix::from_sorted_rows(self.ivars().clone(), self.ivars().len(), &rows);
        Ok(self.rebuild_columns(&keep, &factors, basis))
    }

    /// Indefinite integral in `var` with zero integration constant. The
    /// variable is added to the independent variables if absent.
    pub fn integrate(&self, var: &str) -> Result<Self> {
        if self.dvars.contains(var) {
            return Err(Error::NonLinear(format!("cannot integrate with respect to decision variable {var}")));
        }
        let (vars, inj, vinj) = monomial::merge_vars(self.ivars(), &VarSet::new([var]));
        let basis = self.basis.embed(&vars, &inj);
        let v = vinj[0];
        let mut factors = Vec::with_capacity(basis.nrows());
        let mut rows = Vec::with_capacity(basis.nrows());
        for k in 0..basis.nrows() {
            let d = basis.degree_of(k, v);
            factors.push(1.0 / f64::from(d + 1));
            let mut row = basis.row_owned(k);
            match row.iter_mut().find(|e| e.0 == v) {
                Some(e) => e.1 += 1,
                None => {
                    row.push((v, 1));
                    row.sort_by_key(|e| e.0);
                }
            }
            rows.push(row);
        }
        let new_basis = DegreeMatrix::from_sorted_rows(vars.clone(), vars.len(), &rows);
        let keep: Vec<usize> = (0..basis.nrows()).collect();
        Ok(self.rebuild_columns(&keep, &factors, new_basis))
    }

    /// Definite integral of `var` over `[lo, hi]`.
    pub fn integrate_def(&self, var: &str, lo: f64, hi: f64) -> Result<Self> {
        let anti = self.integrate(var)?;
        let upper = anti.subs(var, &PPoly::scalar(hi))?;
        let lower = anti.subs(var, &PPoly::scalar(lo))?;
        upper.sub(&lower)
    }

    /// Substitutes the scalar known polynomial `r` for the independent
    /// variable `var`.
    pub fn subs(&self, var: &str, r: &PPoly) -> Result<Self> {
        if self.dvars.contains(var) {
            return Err(Error::NonLinear(format!("cannot substitute for decision variable {var}")));
        }
        if r.as_dpoly().matdim() != (1, 1) {
            return Err(Error::Dimension("substitution requires a scalar replacement".into()));
        }
        let Some(v) = self.ivars().position(var) else {
            return Ok(self.clone());
        };
        let rest_vars = self.ivars().without(var);
        let drop_col = |c: usize| if c > v { c - 1 } else { c };

        // split the basis by the exponent of `var`
        // per power: basis rows and their remaining exponents
        let mut by_power: Vec<PowerGroup> = Vec::new();
        for k in 0..self.nmonomials() {
            let d = self.basis.degree_of(k, v) as usize;
            if by_power.len() <= d {
                by_power.resize_with(d + 1, Default::default);
            }
            let row: Vec<(usize, u32)> =
                self.basis.row(k).iter().filter(|&(c, _)| c != v).map(|(c, e)| (drop_col(c), e)).collect();
            by_power[d].0.push(k);
            by_power[d].1.push(row);
        }

        let mut result: Option<Self> = None;
        let mut power = PPoly::scalar(1.0);
        for (d, (keep, rows)) in by_power.iter().enumerate() {
            if d > 0 {
                power = power.mul(r)?;
            }
            if keep.is_empty() {
                continue;
            }
            let basis = DegreeMatrix::from_sorted_rows(rest_vars.clone(), rest_vars.len(), rows);
            let part = self.rebuild_columns(keep, &vec![1.0; keep.len()], basis);
            let term = if d == 0 { part } else { part.mul_poly(&power, Side::Right)? };
            result = Some(match result {
                None => term,
                Some(acc) => acc.add(&term)?,
            });
        }
        Ok(result.unwrap_or_else(|| {
            let basis = DegreeMatrix::empty(rest_vars.clone());
            Self::from_parts(
                self.rows,
                self.cols,
                self.dvars.clone(),
                basis,
                SparseMat::zeros(self.rows * self.block_rows(), 0),
            )
        }))
    }

    /// `[self; other]`. Bases and decision variables are merged first.
    pub fn vcat(&self, other: &Self) -> Result<Self> {
        if self.rows == 0
            && (self.cols == 0 || self.cols == other.cols)
            && self.ndvars() == 0
            && self.ivars().is_empty()
        {
            return Ok(other.clone());
        }
        if other.rows == 0
            && (other.cols == 0 || other.cols == self.cols)
            && other.ndvars() == 0
            && other.ivars().is_empty()
        {
            return Ok(self.clone());
        }
        if self.cols != other.cols {
            return Err(Error::Dimension(format!("vcat: {} columns vs {}", self.cols, other.cols)));
        }
        let (dvars, basis, c1, c2) = self.align(other);
        Ok(Self::from_parts(self.rows + other.rows, self.cols, dvars, basis, c1.vcat(&c2)?))
    }

    /// `[self other]`. Bases and decision variables are merged first.
    pub fn hcat(&self, other: &Self) -> Result<Self> {
        if self.cols == 0
            && (self.rows == 0 || self.rows == other.rows)
            && self.ndvars() == 0
            && self.ivars().is_empty()
        {
            return Ok(other.clone());
        }
        if other.cols == 0
            && (other.rows == 0 || other.rows == self.rows)
            && other.ndvars() == 0
            && other.ivars().is_empty()
        {
            return Ok(self.clone());
        }
        if self.rows != other.rows {
            return Err(Error::Dimension(format!("hcat: {} rows vs {}", self.rows, other.rows)));
        }
        let (dvars, basis, c1, c2) = self.align(other);
        Ok(Self::from_parts(self.rows, self.cols + other.cols, dvars, basis, c1.hcat(&c2)?))
    }

    /// Moves block `(i, j)` to `(j, i)`; decision variables are untouched.
    pub fn transpose(&self) -> Self {
        let (q1, n) = (self.block_rows(), self.nmonomials());
        let coeffs = SparseMat::assemble(
            self.cols * q1,
            self.rows * n,
            self.coeffs.triplets().map(|(r, c, v)| {
                let (i, a, j, k) = (r / q1, r % q1, c / n, c % n);
                ((j * q1 + a, i * n + k), v)
            }),
        );
        Self::from_parts(self.cols, self.rows, self.dvars.clone(), self.basis.clone(), coeffs)
    }

    fn check_index(&self, i: usize, j: usize) -> Result<()> {
        if i >= self.rows || j >= self.cols {
            return Err(Error::Index(format!("entry ({i},{j}) of a {}x{} matrix", self.rows, self.cols)));
        }
        Ok(())
    }

    /// Entry `(i, j)` as a 1×1 polynomial over the same variables and basis.
    pub fn get(&self, i: usize, j: usize) -> Result<Self> {
        self.check_index(i, j)?;
        let (q1, n) = (self.block_rows(), self.nmonomials());
        let cols: Vec<usize> = (j * n..(j + 1) * n).collect();
        let rows: Vec<usize> = (i * q1..(i + 1) * q1).collect();
        let coeffs = self.coeffs.gather_cols(&cols)?.select_rows(&rows)?;
        Ok(Self::from_parts(1, 1, self.dvars.clone(), self.basis.clone(), coeffs))
    }

    /// Replaces entry `(i, j)` by the 1×1 polynomial `value`.
    pub fn set(&self, i: usize, j: usize, value: &Self) -> Result<Self> {
        self.check_index(i, j)?;
        if value.matdim() != (1, 1) {
            return Err(Error::Dimension("set expects a 1x1 value".into()));
        }
        let (dvars, basis, c1, c2) = self.align(value);
        let (q1, n) = (dvars.len() + 1, basis.nrows());
        let kept = c1.triplets().filter(|&(r, c, _)| r / q1 != i || c / n != j).map(|(r, c, v)| ((r, c), v));
        let placed = c2.triplets().map(|(r, c, v)| ((i * q1 + r, j * n + c), v));
        let coeffs = SparseMat::assemble(self.rows * q1, self.cols * n, kept.chain(placed));
        Ok(Self::from_parts(self.rows, self.cols, dvars, basis, coeffs))
    }

    /// Drops monomials and decision variables that no coefficient uses.
    pub fn compress(&self) -> Self {
        let (q1, n) = (self.block_rows(), self.nmonomials());
        let mut used_mono = vec![false; n];
        let mut used_dvar = vec![false; q1];
        for (r, c, _) in self.coeffs.triplets() {
            used_mono[c % n] = true;
            used_dvar[r % q1] = true;
        }
        if used_mono.iter().all(|&u| u) && used_dvar[1..].iter().all(|&u| u) {
            return self.clone();
        }
        let keep_mono: Vec<usize> = (0..n).filter(|&k| used_mono[k]).collect();
        let keep_dvar: Vec<usize> = (0..self.ndvars()).filter(|&k| used_dvar[k + 1]).collect();
        let dvars = VarSet::new(keep_dvar.iter().map(|&k| self.dvars.name(k).to_string()));
        let basis = self.basis.select_rows(&keep_mono);

        let mut mono_new = vec![usize::MAX; n];
        for (new, &k) in keep_mono.iter().enumerate() {
            mono_new[k] = new;
        }
        let mut dvar_new = vec![usize::MAX; q1];
        dvar_new[0] = 0;
        for (new, &k) in keep_dvar.iter().enumerate() {
            dvar_new[k + 1] = new + 1;
        }
        let (q1n, nn) = (keep_dvar.len() + 1, keep_mono.len());
        let coeffs = SparseMat::assemble(
            self.rows * q1n,
            self.cols * nn,
            self.coeffs
                .triplets()
                .map(|(r, c, v)| ((r / q1 * q1n + dvar_new[r % q1], c / n * nn + mono_new[c % n]), v)),
        );
        Self::from_parts(self.rows, self.cols, dvars, basis, coeffs)
    }

    /// Terms of entry `(i, j)` as `(coefficient, decision variable index or
    /// None, monomial row)`, in canonical monomial then variable order.
    pub fn entry_terms(&self, i: usize, j: usize) -> Vec<(f64, Option<usize>, usize)> {
        let (q1, n) = (self.block_rows(), self.nmonomials());
        let mut out = Vec::new();
        for k in 0..n {
            let (rows, vals) = self.coeffs.col(j * n + k);
            let lo = rows.partition_point(|&r| r < i * q1);
            let hi = rows.partition_point(|&r| r < (i + 1) * q1);
            for t in lo..hi {
                let a = rows[t] - i * q1;
                out.push((vals[t], if a == 0 { None } else { Some(a - 1) }, k));
            }
        }
        out
    }

    /// Parses the text form written by [`fmt::Display`].
    pub fn parse_text(text: &str) -> Result<Self> {
        text::parse(text)
    }
}

impl fmt::Debug for DPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for DPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        text::write(self, f)
    }
}

/// Known polynomial matrix: a [`DPoly`] without decision variables.
#[derive(Clone, PartialEq)]
pub struct PPoly(DPoly);

impl fmt::Debug for PPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl fmt::Display for PPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl TryFrom<DPoly> for PPoly {
    type Error = Error;

    fn try_from(p: DPoly) -> Result<Self> {
        if p.ndvars() > 0 {
            return Err(Error::NonLinear(format!("polynomial has {} decision variables", p.ndvars())));
        }
        Ok(Self(p))
    }
}

impl From<PPoly> for DPoly {
    fn from(p: PPoly) -> Self {
        p.0
    }
}

impl PPoly {
    fn from_dpoly_unchecked(p: DPoly) -> Self {
        debug_assert_eq!(p.ndvars(), 0);
        Self(p)
    }

    pub fn as_dpoly(&self) -> &DPoly {
        &self.0
    }

    pub fn into_dpoly(self) -> DPoly {
        self.0
    }

    pub fn new(rows: usize, cols: usize, basis: DegreeMatrix, coeffs: SparseMat) -> Result<Self> {
        DPoly::new(rows, cols, VarSet::empty(), basis, coeffs).map(Self)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DPoly::zeros(rows, cols))
    }

    pub fn scalar(value: f64) -> Self {
        Self(DPoly::scalar(value))
    }

    pub fn constant(values: &[Vec<f64>]) -> Result<Self> {
        DPoly::constant(values).map(Self)
    }

    pub fn identity(n: usize, value: f64) -> Self {
        Self(DPoly::identity(n, value))
    }

    pub fn var(name: &str) -> Self {
        Self(DPoly::ivar(name))
    }

    /// Terms must not name decision variables.
    pub fn from_terms(rows: usize, cols: usize, terms: &[Term]) -> Result<Self> {
        if terms.iter().any(|t| t.dvar.is_some()) {
            return Err(Error::NonLinear("known polynomial terms cannot carry decision variables".into()));
        }
        DPoly::from_terms(rows, cols, terms).map(Self)
    }

    /// Sum of `coeff · monomial` over the given basis rows.
    pub fn from_basis(basis: &DegreeMatrix, coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() != basis.nrows() {
            return Err(Error::Dimension("one coefficient per monomial".into()));
        }
        let trip = coeffs.iter().enumerate().map(|(k, &v)| ((0, k), v));
        let c = SparseMat::assemble(1, basis.nrows(), trip);
        Self::new(1, 1, basis.clone(), c)
    }

    pub fn matdim(&self) -> (usize, usize) {
        self.0.matdim()
    }

    pub fn ivars(&self) -> &VarSet {
        self.0.ivars()
    }

    pub fn basis(&self) -> &DegreeMatrix {
        self.0.basis()
    }

    pub fn coeffs(&self) -> &SparseMat {
        self.0.coeffs()
    }

    pub fn degree(&self) -> u32 {
        self.0.degree()
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.0.add(&other.0).map(Self)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.0.sub(&other.0).map(Self)
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self(self.0.scale(factor))
    }

    pub fn neg(&self) -> Self {
        self.scale(-1.0)
    }

    /// Matrix product `self · other` (1×1 operands broadcast).
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.0.mul_poly(other, Side::Right).map(Self)
    }

    pub fn pow(&self, exp: u32) -> Result<Self> {
        if self.matdim() != (1, 1) {
            return Err(Error::Dimension("power of a non-scalar polynomial".into()));
        }
        let mut acc = Self::scalar(1.0);
        for _ in 0..exp {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn diff(&self, var: &str) -> Result<Self> {
        self.0.diff(var).map(Self)
    }

    pub fn subs(&self, var: &str, r: &PPoly) -> Result<Self> {
        self.0.subs(var, r).map(Self)
    }

    pub fn integrate(&self, var: &str) -> Result<Self> {
        self.0.integrate(var).map(Self)
    }

    pub fn get(&self, i: usize, j: usize) -> Result<Self> {
        self.0.get(i, j).map(Self)
    }

    pub fn compress(&self) -> Self {
        Self(self.0.compress())
    }

    pub fn eval(&self, x: &HashMap<String, f64>) -> Result<DMatrix<f64>> {
        self.0.eval(x, &HashMap::new())
    }

    /// Embeds as a [`DPoly`] with no decision variables.
    pub fn to_dpoly(&self) -> DPoly {
        self.0.clone()
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        DPoly::parse_text(text)?.try_into()
    }
}

/// Canonical text form.
///
/// ```text
/// dpoly 1 2
/// ivars: x1 x2
/// dvars: xi1
/// 1.0 + 2.5 * xi1 * x1^2 x2^1
/// 0
/// ```
///
/// One line per matrix entry in row-major order. A term is a coefficient,
/// optionally a decision variable, and optionally a monomial whose factors
/// always carry an exponent. Coefficients use Rust's shortest round-trip
/// float formatting, so printing then parsing a compressed polynomial gives
/// back an identical value.
mod text {
    use super::*;

    pub(super) fn write(p: &DPoly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "dpoly {} {}", p.rows, p.cols)?;
        writeln!(f, "ivars:{}", p.ivars().names().iter().map(|n| format!(" {n}")).collect::<String>())?;
        writeln!(f, "dvars:{}", p.dvars.names().iter().map(|n| format!(" {n}")).collect::<String>())?;
        for i in 0..p.rows {
            for j in 0..p.cols {
                let terms = p.entry_terms(i, j);
                if terms.is_empty() {
                    writeln!(f, "0")?;
                    continue;
                }
                let mut first = true;
                for (c, d, k) in terms {
                    if !first {
                        write!(f, " + ")?;
                    }
                    first = false;
                    write!(f, "{c:?}")?;
                    if let Some(d) = d {
                        write!(f, " * {}", p.dvars.name(d))?;
                    }
                    let row = p.basis.row(k);
                    if !row.cols.is_empty() {
                        write!(f, " * ")?;
                        for (t, (c, e)) in row.iter().enumerate() {
                            if t > 0 {
                                write!(f, " ")?;
                            }
                            write!(f, "{}^{}", p.ivars().name(c), e)?;
                        }
                    }
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }

    fn err(offset: usize, message: impl Into<String>) -> Error {
        Error::Parse { offset, message: message.into() }
    }

    fn names(line: &str, key: &str, offset: usize) -> Result<Vec<String>> {
        let rest = line.strip_prefix(key).ok_or_else(|| err(offset, format!("expected `{key}`")))?;
        Ok(rest.split_whitespace().map(str::to_string).collect())
    }

    pub(super) fn parse(text: &str) -> Result<DPoly> {
        let mut lines = Vec::new();
        let mut offset = 0;
        for line in text.split('\n') {
            lines.push((offset, line.trim_end_matches('\r')));
            offset += line.len() + 1;
        }
        let mut it = lines.into_iter().filter(|(_, l)| !l.trim().is_empty());
        let (off, header) = it.next().ok_or_else(|| err(0, "empty input"))?;
        let dims: Vec<&str> = header.split_whitespace().collect();
        if dims.len() != 3 || dims[0] != "dpoly" {
            return Err(err(off, "expected `dpoly ROWS COLS`"));
        }
        let rows: usize = dims[1].parse().map_err(|_| err(off, "bad row count"))?;
        let cols: usize = dims[2].parse().map_err(|_| err(off, "bad column count"))?;
        let (off, l) = it.next().ok_or_else(|| err(off, "missing ivars line"))?;
        let ivars = VarSet::new(names(l, "ivars:", off)?);
        let (off, l) = it.next().ok_or_else(|| err(off, "missing dvars line"))?;
        let dvars = VarSet::new(names(l, "dvars:", off)?);

        let mut terms = Vec::new();
        for e in 0..rows * cols {
            let (off, line) = it.next().ok_or_else(|| err(text.len(), format!("missing entry {e}")))?;
            let line = line.trim();
            if line == "0" {
                continue;
            }
            let mut local = 0;
            for raw in line.split(" + ") {
                let term_off = off + local;
                local += raw.len() + 3;
                let mut parts = raw.split(" * ");
                let coeff: f64 = parts
                    .next()
                    .and_then(|c| c.trim().parse().ok())
                    .ok_or_else(|| err(term_off, format!("bad coefficient in `{raw}`")))?;
                let mut t = Term::new(coeff).at(e / cols, e % cols);
                for part in parts {
                    let part = part.trim();
                    if part.contains('^') {
                        for factor in part.split_whitespace() {
                            let (name, exp) = factor.split_once('^').ok_or_else(|| err(term_off, "bad factor"))?;
                            let exp: u32 =
                                exp.parse().map_err(|_| err(term_off, format!("bad exponent in `{factor}`")))?;
                            t = t.pow(name, exp);
                        }
                    } else if t.dvar.is_none() && t.monomial.is_empty() {
                        t = t.dvar(part);
                    } else {
                        return Err(err(term_off, format!("unexpected factor `{part}`")));
                    }
                }
                terms.push(t);
            }
        }
        if let Some((off, _)) = it.next() {
            return Err(err(off, "trailing input"));
        }
        DPoly::from_terms_over(rows, cols, dvars, ivars, &terms)
    }
}
