//! Baseline representation with decision variables inside the monomial basis.
//!
//! A [`FlatPoly`] treats decision variables as ordinary polynomial variables:
//! the basis becomes `Z̄ = [1; ξ] ⊗ Z(x)` and the coefficients a plain
//! `m1 × m2·n̄` matrix. It shares the sparse and monomial kernels with
//! [`DPoly`], so timing differences come from the representation alone.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::dpvar::{DPoly, PPoly, Side};
use crate::error::{Error, Result};
use crate::monomial::{self, DegreeMatrix, VarSet};
use crate::sparse::SparseMat;

#[derive(Clone, Debug, PartialEq)]
pub struct FlatPoly {
    poly: PPoly,
    decision: Vec<bool>,
}

impl FlatPoly {
    /// Expands a [`DPoly`] into the joint basis `[1; ξ] ⊗ Z`. All `(q+1)·n`
    /// rows are kept even when their coefficients vanish.
    pub fn flatten(s: &DPoly) -> Self {
        let (q, n) = (s.ndvars(), s.nmonomials());
        let (rows, cols) = s.matdim();

        let lin_rows: Vec<Vec<(usize, u32)>> =
            std::iter::once(Vec::new()).chain((0..q).map(|k| vec![(k, 1)])).collect();
        let (lin, linmap) = monomial::canonicalize_rows(s.dvars().clone(), &lin_rows);
        let (zbar, prodmap) = monomial::kron_bases(&lin, s.basis());
        let nbar = zbar.nrows();

        let coeffs = SparseMat::assemble(
            rows,
            cols * nbar,
            s.coeffs().triplets().map(|(r, c, v)| {
                let (i, a, j, k) = (r / (q + 1), r % (q + 1), c / n, c % n);
                ((i, j * nbar + prodmap[linmap[a] * n + k]), v)
            }),
        );
        let decision = zbar.vars().names().iter().map(|name| s.dvars().contains(name)).collect();
        let poly = PPoly::new(rows, cols, zbar, coeffs).expect("shape follows from construction");
        Self { poly, decision }
    }

    pub fn matdim(&self) -> (usize, usize) {
        self.poly.matdim()
    }

    pub fn vars(&self) -> &VarSet {
        self.poly.ivars()
    }

    /// Whether joint variable `k` is a decision variable.
    pub fn is_decision(&self, k: usize) -> bool {
        self.decision[k]
    }

    pub fn basis(&self) -> &DegreeMatrix {
        self.poly.basis()
    }

    pub fn coeffs(&self) -> &SparseMat {
        self.poly.coeffs()
    }

    pub fn basis_rows(&self) -> usize {
        self.basis().nrows()
    }

    pub fn as_ppoly(&self) -> &PPoly {
        &self.poly
    }

    fn tagged(poly: PPoly, a: &Self, b: Option<&Self>) -> Result<Self> {
        let mut tag: HashMap<&str, bool> = HashMap::new();
        for f in std::iter::once(a).chain(b) {
            for (k, name) in f.vars().names().iter().enumerate() {
                if let Some(&prev) = tag.get(name.as_str()) {
                    if prev != f.decision[k] {
                        return Err(Error::Argument(format!("{name} is a decision variable in one operand only")));
                    }
                }
                tag.insert(name, f.decision[k]);
            }
        }
        let decision = poly.ivars().names().iter().map(|n| tag.get(n.as_str()).copied().unwrap_or(false)).collect();
        Ok(Self { poly, decision })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let poly = self.poly.add(&other.poly)?;
        Self::tagged(poly, self, Some(other))
    }

    /// Product with a known polynomial over the joint basis.
    pub fn mul(&self, p: &PPoly, side: Side) -> Result<Self> {
        if let Some(name) = p.ivars().names().iter().find(|n| self.decision_index(n).is_some()) {
            return Err(Error::NonLinear(format!("known factor uses decision variable {name}")));
        }
        let poly = match side {
            Side::Right => self.poly.mul(p)?,
            Side::Left => p.mul(&self.poly)?,
        };
        Self::tagged(poly, self, None)
    }

    pub fn diff(&self, var: &str) -> Result<Self> {
        if self.decision_index(var).is_some() {
            return Err(Error::NonLinear(format!("cannot differentiate with respect to decision variable {var}")));
        }
        Self::tagged(self.poly.diff(var)?, self, None)
    }

    fn decision_index(&self, name: &str) -> Option<usize> {
        self.vars().position(name).filter(|&k| self.decision[k])
    }

    pub fn eval(&self, x: &HashMap<String, f64>, xi: &HashMap<String, f64>) -> Result<DMatrix<f64>> {
        let mut joint = x.clone();
        joint.extend(xi.iter().map(|(k, v)| (k.clone(), *v)));
        self.poly.eval(&joint)
    }
}

impl PPoly {
    /// The baseline form of a known polynomial is itself.
    pub fn flatten(&self) -> FlatPoly {
        FlatPoly::flatten(self.as_dpoly())
    }
}

/// Convenience wrapper for [`FlatPoly::flatten`].
pub fn flatten(s: &DPoly) -> FlatPoly {
    FlatPoly::flatten(s)
}
