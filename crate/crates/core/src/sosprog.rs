//! SOS program construction and compilation to SDP data.
//!
//! Decision variables come from three places: explicit declarations (free
//! scalars such as a bound `γ`), quadratic variables built by
//! [`SosProgram::quadvar`], and Gram matrices introduced by the inequality
//! constraints. Entries of PSD-constrained matrices are tied to one upper
//! triangle position of a registered block; everything else is free.
//!
//! Every constraint is kept as a [`DPoly`] that must vanish identically. At
//! assembly each (matrix entry, monomial) pair of such a polynomial yields
//! one scalar equation `C₂ ξ = −c₁`, where `c₁` is the part without decision
//! variables.

use std::collections::HashMap;

use crate::dpvar::DPoly;
use crate::error::{Error, Result};
use crate::monomial::{self, DegreeMatrix, VarSet};
use crate::sdp::SdpProblem;
use crate::sparse::SparseMat;

/// Structure imposed on the coefficient matrix of a quadratic variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadOption {
    None,
    Sym,
    Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sense {
    Min,
    Max,
}

/// Where a registered decision variable lives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Origin {
    Free,
    /// Entry `(row, col)`, `row ≤ col`, of PSD block `block`.
    Block {
        block: usize,
        row: usize,
        col: usize,
    },
}

#[derive(Clone, Debug)]
pub struct PsdBlock {
    pub side: usize,
    /// Registry index of entry `(r, c)`, `r ≤ c`, at position `c(c+1)/2 + r`.
    pub upper: Vec<usize>,
}

impl PsdBlock {
    pub fn entry(&self, r: usize, c: usize) -> usize {
        let (r, c) = if r <= c { (r, c) } else { (c, r) };
        self.upper[c * (c + 1) / 2 + r]
    }
}

#[derive(Clone, Debug)]
pub struct SosProgram {
    ivars: VarSet,
    names: Vec<String>,
    origins: Vec<Origin>,
    index: HashMap<String, usize>,
    blocks: Vec<PsdBlock>,
    equalities: Vec<DPoly>,
    objective: Vec<(usize, f64)>,
    sense: Sense,
    counter: usize,
}

/// Scalar equations of `D ≡ 0`: one row per (entry, monomial) with a
/// nonzero coefficient, entries in row-major order and monomials in
/// canonical order. Returns `(A, b)` with `A` over `D`'s decision variables.
pub fn extract_affine(d: &DPoly) -> (SparseMat, Vec<f64>) {
    let (q1, n, cols) = (d.block_rows(), d.nmonomials(), d.ncols());
    let mut items: Vec<(usize, usize, f64)> = Vec::with_capacity(d.coeffs().nnz());
    for (r, c, v) in d.coeffs().triplets() {
        let (i, a) = (r / q1, r % q1);
        let (j, k) = (c / n, c % n);
        items.push(((i * cols + j) * n + k, a, v));
    }
    items.sort_unstable_by_key(|t| (t.0, t.1));
    let mut b = Vec::new();
    let mut trip = Vec::with_capacity(items.len());
    let mut last = usize::MAX;
    for (key, a, v) in items {
        if key != last {
            last = key;
            b.push(0.0);
        }
        let row = b.len() - 1;
        if a == 0 {
            b[row] = -v;
        } else {
            trip.push(((row, a - 1), v));
        }
    }
    (SparseMat::assemble(b.len(), q1 - 1, trip), b)
}

impl SosProgram {
    pub fn new(ivars: VarSet) -> Self {
        Self {
            ivars,
            names: Vec::new(),
            origins: Vec::new(),
            index: HashMap::new(),
            blocks: Vec::new(),
            equalities: Vec::new(),
            objective: Vec::new(),
            sense: Sense::Min,
            counter: 0,
        }
    }

    pub fn ivars(&self) -> &VarSet {
        &self.ivars
    }

    pub fn ndvars(&self) -> usize {
        self.names.len()
    }

    pub fn dvar_names(&self) -> &[String] {
        &self.names
    }

    pub fn origin(&self, name: &str) -> Option<Origin> {
        self.index.get(name).map(|&k| self.origins[k])
    }

    pub fn blocks(&self) -> &[PsdBlock] {
        &self.blocks
    }

    pub fn equalities(&self) -> &[DPoly] {
        &self.equalities
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    fn register(&mut self, name: String, origin: Origin) -> Result<usize> {
        if self.index.contains_key(&name) {
            return Err(Error::Registration(format!("decision variable {name} already declared")));
        }
        let k = self.names.len();
        self.index.insert(name.clone(), k);
        self.names.push(name);
        self.origins.push(origin);
        Ok(k)
    }

    /// Declares free scalar decision variables. Names starting with `$` are
    /// reserved for generated variables.
    pub fn declare_decvar<S: AsRef<str>>(&mut self, names: &[S]) -> Result<Vec<DPoly>> {
        let mut out = Vec::with_capacity(names.len());
        for name in names {
            let name = name.as_ref();
            if name.starts_with('$') || name.is_empty() || name.contains(char::is_whitespace) {
                return Err(Error::Registration(format!("invalid decision variable name `{name}`")));
            }
            if self.ivars.contains(name) {
                return Err(Error::Registration(format!("{name} is an independent variable")));
            }
            self.register(name.to_string(), Origin::Free)?;
            out.push(DPoly::dvar(name));
        }
        Ok(out)
    }

    /// Polynomial variables `P_ij = (I_mi ⊗ Z1_i)ᵀ Q_ij (I_nj ⊗ Z2_j)`.
    ///
    /// With [`QuadOption::Pos`] the cells `Q_ij` are the blocks of a single
    /// composite matrix `Q` of side `Σ m_i·k1_i`, registered as one PSD
    /// block, so positivity is imposed on `Q` as a whole. [`QuadOption::Sym`]
    /// ties `Q_ij = Q_jiᵀ` without a cone. Both require a square cell
    /// structure.
    pub fn quadvar(
        &mut self,
        z1: &[DegreeMatrix],
        z2: &[DegreeMatrix],
        m: &[usize],
        n: &[usize],
        opt: QuadOption,
    ) -> Result<Vec<Vec<DPoly>>> {
        if z1.is_empty() || z2.is_empty() {
            return Err(Error::Argument("quadvar needs at least one basis on each side".into()));
        }
        if z1.len() != m.len() || z2.len() != n.len() {
            return Err(Error::Dimension("one matrix dimension per basis cell".into()));
        }
        if opt != QuadOption::None {
            let square = z1.len() == z2.len() && m == n && z1.iter().zip(z2).all(|(a, b)| a.nrows() == b.nrows());
            if !square {
                return Err(Error::Option(format!("{opt:?} requires r = p, m_i = n_i and k1_i = k2_i")));
            }
        }
        let k1: Vec<usize> = z1.iter().map(DegreeMatrix::nrows).collect();
        let k2: Vec<usize> = z2.iter().map(DegreeMatrix::nrows).collect();
        let off1 = offsets(m, &k1);
        let off2 = offsets(n, &k2);
        let (nr, nc) = (off1[z1.len()], off2[z2.len()]);
        let id = self.counter;
        self.counter += 1;

        // registry index of every composite entry Q[R, C]
        let mut table = vec![0usize; nr * nc];
        match opt {
            QuadOption::None => {
                for col in 0..nc {
                    for row in 0..nr {
                        table[col * nr + row] = self.register(format!("$F{id}:{row}:{col}"), Origin::Free)?;
                    }
                }
            }
            QuadOption::Sym | QuadOption::Pos => {
                let block = self.blocks.len();
                let mut upper = Vec::with_capacity(nr * (nr + 1) / 2);
                for col in 0..nr {
                    for row in 0..=col {
                        let (name, origin) = if opt == QuadOption::Pos {
                            (format!("$Q{id}:{row}:{col}"), Origin::Block { block, row, col })
                        } else {
                            (format!("$S{id}:{row}:{col}"), Origin::Free)
                        };
                        let k = self.register(name, origin)?;
                        upper.push(k);
                        table[col * nr + row] = k;
                        table[row * nr + col] = k;
                    }
                }
                if opt == QuadOption::Pos {
                    self.blocks.push(PsdBlock { side: nr, upper });
                }
            }
        }

        let mut grid = Vec::with_capacity(z1.len());
        for i in 0..z1.len() {
            let mut row = Vec::with_capacity(z2.len());
            for j in 0..z2.len() {
                row.push(self.cell(&z1[i], &z2[j], m[i], n[j], off1[i], off2[j], nr, &table));
            }
            grid.push(row);
        }
        Ok(grid)
    }

    #[allow(clippy::too_many_arguments)]
    fn cell(
        &self,
        z1: &DegreeMatrix,
        z2: &DegreeMatrix,
        mi: usize,
        nj: usize,
        o1: usize,
        o2: usize,
        nr: usize,
        table: &[usize],
    ) -> DPoly {
        let (basis, prod) = monomial::kron_bases(z1, z2);
        let (k1, k2, n3) = (z1.nrows(), z2.nrows(), basis.nrows());
        let mut used: Vec<usize> = Vec::with_capacity(mi * nj * k1 * k2);
        for b in 0..nj {
            for t in 0..k2 {
                for a in 0..mi {
                    for s in 0..k1 {
                        used.push(table[(o2 + b * k2 + t) * nr + o1 + a * k1 + s]);
                    }
                }
            }
        }
        let mut distinct = used.clone();
        distinct.sort_unstable_by(|&x, &y| self.names[x].cmp(&self.names[y]));
        distinct.dedup();
        let dvars = VarSet::new(distinct.iter().map(|&k| self.names[k].clone()));
        let pos: HashMap<usize, usize> = distinct.iter().enumerate().map(|(p, &k)| (k, p)).collect();
        let q1 = dvars.len() + 1;

        let mut trip = Vec::with_capacity(used.len());
        let mut it = used.iter();
        for b in 0..nj {
            for t in 0..k2 {
                for a in 0..mi {
                    for s in 0..k1 {
                        let k = *it.next().expect("one entry per product");
                        trip.push(((a * q1 + 1 + pos[&k], b * n3 + prod[s * k2 + t]), 1.0));
                    }
                }
            }
        }
        let coeffs = SparseMat::assemble(mi * q1, nj * n3, trip);
        DPoly::new(mi, nj, dvars, basis, coeffs).expect("cell shape follows from construction")
    }

    /// Scalar SOS variable `Zᵀ Q Z` with `Q ⪰ 0`.
    pub fn sosvar(&mut self, z: &DegreeMatrix) -> Result<DPoly> {
        let mut grid = self.quadvar(std::slice::from_ref(z), std::slice::from_ref(z), &[1], &[1], QuadOption::Pos)?;
        Ok(grid.remove(0).remove(0))
    }

    /// `m × n` matrix of polynomials over the basis `z` with free
    /// coefficients.
    pub fn polymatrixvar(&mut self, z: &DegreeMatrix, dims: (usize, usize), opt: QuadOption) -> Result<DPoly> {
        let one = DegreeMatrix::constant(VarSet::empty());
        let mut grid = self.quadvar(&[one], std::slice::from_ref(z), &[dims.0], &[dims.1], opt)?;
        Ok(grid.remove(0).remove(0))
    }

    /// Requires `d` to vanish identically in the independent variables.
    pub fn eq_constraint(&mut self, d: &DPoly) -> Result<()> {
        if let Some(name) = d.dvars().names().iter().find(|n| !self.index.contains_key(*n)) {
            return Err(Error::Registration(format!("decision variable {name} is not registered")));
        }
        if !d.ivars().is_subset(&self.ivars) {
            return Err(Error::Argument(format!(
                "constraint uses independent variables {:?} outside the program's {:?}",
                d.ivars(),
                self.ivars
            )));
        }
        self.equalities.push(d.clone());
        Ok(())
    }

    /// Requires the scalar `d` to be a sum of squares.
    pub fn sos_ineq(&mut self, d: &DPoly) -> Result<()> {
        if d.matdim() != (1, 1) {
            return Err(Error::Dimension("sos_ineq expects a scalar polynomial".into()));
        }
        self.gram_constraint(d)
    }

    /// Requires the square matrix `d` to be an SOS matrix.
    pub fn matrix_ineq(&mut self, d: &DPoly) -> Result<()> {
        if d.nrows() != d.ncols() {
            return Err(Error::Dimension("matrix_ineq expects a square matrix".into()));
        }
        self.gram_constraint(d)
    }

    /// `d = (I ⊗ Z)ᵀ Q (I ⊗ Z)` with a fresh PSD `Q` over the full basis of
    /// degree `⌈deg d / 2⌉` in the variables `d` actually uses.
    fn gram_constraint(&mut self, d: &DPoly) -> Result<()> {
        let d = d.compress();
        let deg = d.degree();
        if deg % 2 == 1 {
            log::warn!("SOS constraint of odd degree {deg} cannot be satisfied");
        }
        let present = used_ivars(&d);
        let z = monomial::full_basis(&present, deg.div_ceil(2));
        let m = d.nrows();
        let g = self
            .quadvar(std::slice::from_ref(&z), std::slice::from_ref(&z), &[m], &[m], QuadOption::Pos)?
            .remove(0)
            .remove(0);
        self.eq_constraint(&d.sub(&g)?)
    }

    pub fn set_objective<S: AsRef<str>>(&mut self, weights: &[(S, f64)], sense: Sense) -> Result<()> {
        let mut obj = Vec::with_capacity(weights.len());
        for (name, w) in weights {
            let name = name.as_ref();
            let k = *self
                .index
                .get(name)
                .ok_or_else(|| Error::Registration(format!("objective uses unregistered variable {name}")))?;
            obj.push((k, *w));
        }
        self.objective = obj;
        self.sense = sense;
        Ok(())
    }

    /// Vector position of every registered decision variable: free
    /// variables first, then each PSD block as a column-major `side²`
    /// segment, with block entries mapped to their upper position.
    fn layout(&self) -> (usize, Vec<usize>, Vec<usize>) {
        let free: Vec<usize> = (0..self.names.len()).filter(|&k| self.origins[k] == Origin::Free).collect();
        let nfree = free.len();
        let mut pos = vec![0usize; self.names.len()];
        for (p, &k) in free.iter().enumerate() {
            pos[k] = p;
        }
        let mut off = nfree;
        let mut block_off = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            block_off.push(off);
            off += b.side * b.side;
        }
        for (k, o) in self.origins.iter().enumerate() {
            if let Origin::Block { block, row, col } = *o {
                pos[k] = block_off[block] + col * self.blocks[block].side + row;
            }
        }
        (nfree, pos, block_off)
    }

    /// Standard-form data `min cᵀx` s.t. `Ax = b`, `x = (free, vec(X₁), …)`,
    /// `Xᵢ ⪰ 0`. A maximization objective is negated.
    pub fn assemble(&self) -> Result<SdpProblem> {
        let (nfree, pos, _) = self.layout();
        let sizes: Vec<usize> = self.blocks.iter().map(|b| b.side).collect();
        let nvec = nfree + sizes.iter().map(|s| s * s).sum::<usize>();

        let mut trip = Vec::new();
        let mut b = Vec::new();
        for d in &self.equalities {
            let (a, rhs) = extract_affine(d);
            let gidx: Vec<usize> = d.dvars().names().iter().map(|n| pos[self.index[n]]).collect();
            let base = b.len();
            for (r, c, v) in a.triplets() {
                trip.push(((base + r, gidx[c]), v));
            }
            b.extend(rhs);
        }
        let a = SparseMat::assemble(b.len(), nvec, trip);

        let sign = if self.sense == Sense::Max { -1.0 } else { 1.0 };
        let mut c = vec![0.0; nvec];
        for &(k, w) in &self.objective {
            c[pos[k]] += sign * w;
        }
        let varmap = self.names.iter().cloned().zip(pos.iter().copied()).collect();
        SdpProblem::new(nfree, sizes, a, b, c).map(|p| p.with_varmap(varmap))
    }
}

fn offsets(dims: &[usize], k: &[usize]) -> Vec<usize> {
    let mut off = Vec::with_capacity(dims.len() + 1);
    off.push(0);
    for (m, k) in dims.iter().zip(k) {
        off.push(off.last().unwrap() + m * k);
    }
    off
}

/// Independent variables with a positive degree in some used monomial.
fn used_ivars(d: &DPoly) -> VarSet {
    let basis = d.basis();
    let mut used = vec![false; basis.nvars()];
    for k in 0..basis.nrows() {
        for (c, _) in basis.row(k).iter() {
            used[c] = true;
        }
    }
    VarSet::new(basis.vars().names().iter().zip(&used).filter(|(_, &u)| u).map(|(n, _)| n.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dpvar::{PPoly, Term};
    use crate::monomial::full_basis;

    fn vars(names: &[&str]) -> VarSet {
        VarSet::new(names.iter().copied())
    }

    #[test]
    fn declare() {
        let mut p = SosProgram::new(vars(&["x1"]));
        let g = p.declare_decvar(&["gam"]).unwrap().remove(0);
        assert_eq!(g.ndvars(), 1);
        assert_eq!(g.coeffs().to_dense(), vec![vec![0.0], vec![1.0]]);
        assert!(matches!(p.declare_decvar(&["gam"]), Err(Error::Registration(_))));
        let mut other = SosProgram::new(vars(&["x1"]));
        assert!(other.declare_decvar(&["gam"]).is_ok());
    }

    #[test]
    fn quadvar_scalar_pos() {
        let mut p = SosProgram::new(vars(&["x1"]));
        let z = full_basis(&vars(&["x1"]), 1);
        let s = p.sosvar(&z).unwrap();
        assert_eq!(s.ndvars(), 3);
        assert_eq!(p.blocks().len(), 1);
        assert_eq!(p.blocks()[0].side, 2);
    }

    #[test]
    fn quadvar_linear() {
        let mut p = SosProgram::new(vars(&["x1", "x2"]));
        let z = full_basis(&vars(&["x1", "x2"]), 1);
        let one = DegreeMatrix::constant(VarSet::empty());
        let g = p.quadvar(std::slice::from_ref(&z), &[one], &[1], &[1], QuadOption::None).unwrap();
        let l = &g[0][0];
        assert_eq!(l.ndvars(), 3);
        assert_eq!(l.degree(), 1);
        assert!(p.blocks().is_empty());
        assert!(matches!(
            p.quadvar(std::slice::from_ref(&z), &[z.clone(), z.clone()], &[1], &[1, 1], QuadOption::Pos),
            Err(Error::Option(_))
        ));
    }

    #[test]
    fn sosvar_and_polymatrix_counts() {
        let mut p = SosProgram::new(vars(&["x1", "x2"]));
        for d in 0..4 {
            let z = full_basis(&vars(&["x1", "x2"]), d);
            let n = z.nrows();
            let before = p.ndvars();
            p.sosvar(&z).unwrap();
            assert_eq!(p.ndvars() - before, n * (n + 1) / 2);
        }
        let before = p.ndvars();
        let c = p.polymatrixvar(&DegreeMatrix::constant(VarSet::empty()), (2, 2), QuadOption::None).unwrap();
        assert_eq!(p.ndvars() - before, 4);
        assert_eq!(c.ndvars(), 4);
    }

    #[test]
    fn eq_constraint_rows() {
        let mut p = SosProgram::new(vars(&[]));
        let xi = p.declare_decvar(&["xi1"]).unwrap().remove(0);
        p.eq_constraint(&xi.sub(&DPoly::scalar(1.0)).unwrap()).unwrap();
        p.eq_constraint(&DPoly::zeros(1, 1)).unwrap();
        let sdp = p.assemble().unwrap();
        assert_eq!(sdp.a().to_dense(), vec![vec![1.0]]);
        assert_eq!(sdp.b(), &[1.0]);
        assert!(matches!(p.eq_constraint(&DPoly::dvar("nope")), Err(Error::Registration(_))));
    }

    #[test]
    fn hand_gram_for_square() {
        let mut p = SosProgram::new(vars(&["x1"]));
        let d = PPoly::from_terms(1, 1, &[Term::new(1.0).pow("x1", 2)]).unwrap().to_dpoly();
        p.sos_ineq(&d).unwrap();
        let sdp = p.assemble().unwrap();
        assert_eq!(sdp.blocks(), &[2]);
        // Q = [[0,0],[0,1]] over {1, x1}
        let x = [0.0, 0.0, 0.0, 1.0];
        let r = sdp.residual(&x);
        assert!(r.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn empty_program() {
        let sdp = SosProgram::new(VarSet::empty()).assemble().unwrap();
        assert_eq!((sdp.nrows(), sdp.nvec()), (0, 0));
    }

    #[test]
    fn max_negates_objective() {
        let mut p = SosProgram::new(VarSet::empty());
        let g = p.declare_decvar(&["g"]).unwrap().remove(0);
        p.eq_constraint(&g.sub(&DPoly::scalar(1.0)).unwrap()).unwrap();
        p.set_objective(&[("g", 1.0)], Sense::Max).unwrap();
        let sdp = p.assemble().unwrap();
        assert_eq!(sdp.c(), &[-1.0]);
        assert!(matches!(p.set_objective(&[("h", 1.0)], Sense::Min), Err(Error::Registration(_))));
    }
}
