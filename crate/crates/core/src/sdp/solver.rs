//! Dense primal-dual interior-point method for small problems.
//!
//! Infeasible-start path following with Nesterov–Todd scaling and a
//! Mehrotra predictor-corrector. Blocks are handled as symmetric matrices
//! (tie rows are dropped and constraint rows symmetrized). Free variables
//! are eliminated up front by pivoting on the equality rows they appear in.
//!
//! Before solving, rows are equilibrated and every block receives a
//! diagonal congruence scaling `X = D X̃ D`, which preserves the cone.

#![allow(clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::sdp::SdpProblem;

pub const MAX_NVEC: usize = 5000;
pub const MAX_SIDE: usize = 120;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
    MaxIter,
    Numerical,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    /// Relative gap `|p − d| / (1 + |p| + |d|)`.
    pub tol_gap: f64,
    /// Relative residuals `‖r‖ / (1 + ‖data‖)`.
    pub tol_feas: f64,
    pub max_iter: usize,
    /// Equilibrate rows and blocks before solving.
    pub scale: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol_gap: 1e-8, tol_feas: 1e-8, max_iter: 200, scale: true }
    }
}

/// Objective values and residuals of one iterate, in the caller's units.
#[derive(Clone, Copy, Debug)]
pub struct Iterate {
    pub obj_primal: f64,
    pub obj_dual: f64,
    pub pinf: f64,
    pub dinf: f64,
    pub mu: f64,
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub status: Status,
    pub x: Vec<f64>,
    /// One multiplier per row of `A`; tie rows get zero.
    pub y: Vec<f64>,
    pub obj_primal: f64,
    pub obj_dual: f64,
    pub iterations: usize,
    pub trace: Vec<Iterate>,
}

/// Symmetric constraint entry `A[r,c] = A[c,r] = v`, `r ≤ c`.
#[derive(Clone, Copy, Debug)]
struct Entry {
    blk: usize,
    r: usize,
    c: usize,
    v: f64,
}

/// Free variables removed by pivoting on equality rows.
///
/// With `S` the pivot rows and `P` the pivot columns, `x_P` is recovered
/// from `A_f[S,P] x_P = b_S − A_b[S] x` and `y_S` from the free part of the
/// dual constraint. Free columns outside `P` are fixed at zero.
struct Elim {
    piv_rows: Vec<usize>,
    piv_cols: Vec<usize>,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    lu_t: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    af: DMatrix<f64>,
    cf: DVector<f64>,
    offset: f64,
}

struct Data {
    m: usize,
    sizes: Vec<usize>,
    rows: Vec<Vec<Entry>>,
    /// Original row of every remaining row.
    orig: Vec<usize>,
    b: DVector<f64>,
    cb: Vec<DMatrix<f64>>,
    // scaling, original = factor × scaled
    row_scale: Vec<f64>,
    blk_scale: Vec<Vec<f64>>,
    beta_b: f64,
    beta_c: f64,
}

fn split_position(
    pos: usize,
    nfree: usize,
    offsets: &[usize],
    sizes: &[usize],
) -> std::result::Result<usize, (usize, usize, usize)> {
    if pos < nfree {
        return Ok(pos);
    }
    let b = offsets.partition_point(|&o| o <= pos) - 1;
    let local = pos - offsets[b];
    Err((b, local % sizes[b], local / sizes[b]))
}

fn merge_entries(mut ents: Vec<Entry>) -> Vec<Entry> {
    ents.sort_by_key(|e| (e.blk, e.c, e.r));
    let mut merged: Vec<Entry> = Vec::with_capacity(ents.len());
    for e in ents {
        match merged.last_mut() {
            Some(l) if (l.blk, l.r, l.c) == (e.blk, e.r, e.c) => l.v += e.v,
            _ => merged.push(e),
        }
    }
    let big = merged.iter().fold(0.0f64, |a, e| a.max(e.v.abs()));
    merged.retain(|e| e.v.abs() > 1e-14 * big);
    merged
}

/// Rows and columns of a complete-pivoting elimination of `a`.
fn pivots(a: &DMatrix<f64>) -> (Vec<usize>, Vec<usize>) {
    let mut w = a.clone();
    let (m, n) = w.shape();
    let amax = w.amax();
    let mut used_r = vec![false; m];
    let mut used_c = vec![false; n];
    let (mut pr, mut pc) = (Vec::new(), Vec::new());
    if amax == 0.0 {
        return (pr, pc);
    }
    for _ in 0..m.min(n) {
        let mut best = (0.0, 0, 0);
        for j in (0..n).filter(|&j| !used_c[j]) {
            for i in (0..m).filter(|&i| !used_r[i]) {
                if w[(i, j)].abs() > best.0 {
                    best = (w[(i, j)].abs(), i, j);
                }
            }
        }
        let (v, i, j) = best;
        if v <= 1e-10 * amax {
            break;
        }
        used_r[i] = true;
        used_c[j] = true;
        pr.push(i);
        pc.push(j);
        let prow = w.row(i).clone_owned();
        for i2 in (0..m).filter(|&i2| !used_r[i2]) {
            let f = w[(i2, j)] / w[(i, j)];
            if f != 0.0 {
                for k in 0..n {
                    w[(i2, k)] -= f * prow[k];
                }
            }
        }
    }
    (pr, pc)
}

impl Data {
    /// Symmetrized block rows with the free variables eliminated.
    fn new(p: &SdpProblem) -> std::result::Result<(Self, Elim), Status> {
        let (m, nfree) = (p.n_eq(), p.nfree());
        let sizes = p.blocks().to_vec();
        let offsets = p.block_offsets();
        let at = p.a().transpose();
        let mut af = DMatrix::zeros(m, nfree);
        let mut rows = vec![Vec::new(); m];
        for (i, row) in rows.iter_mut().enumerate() {
            let (cols, vals) = at.col(i);
            let mut ents: Vec<Entry> = Vec::new();
            for (&pos, &v) in cols.iter().zip(vals) {
                match split_position(pos, nfree, &offsets, &sizes) {
                    Ok(k) => af[(i, k)] += v,
                    Err((blk, row, col)) => {
                        let (r, c) = (row.min(col), row.max(col));
                        ents.push(Entry { blk, r, c, v: if r == c { v } else { v / 2.0 } });
                    }
                }
            }
            *row = merge_entries(ents);
        }
        let mut cf = DVector::zeros(nfree);
        let mut cb: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (pos, &v) in p.c().iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            match split_position(pos, nfree, &offsets, &sizes) {
                Ok(k) => cf[k] += v,
                Err((b, r, c)) if r == c => cb[b][(r, r)] += v,
                Err((b, r, c)) => {
                    cb[b][(r, c)] += v / 2.0;
                    cb[b][(c, r)] += v / 2.0;
                }
            }
        }
        let mut b = p.b()[..m].to_vec();

        let (piv_rows, piv_cols) = pivots(&af);
        let mut elim = Elim { piv_rows, piv_cols, lu: None, lu_t: None, af, cf, offset: 0.0 };
        let r = elim.piv_rows.len();
        if r > 0 {
            let asp = DMatrix::from_fn(r, r, |i, j| elim.af[(elim.piv_rows[i], elim.piv_cols[j])]);
            let lu = asp.clone().lu();
            let lu_t = asp.transpose().lu();
            let cp = DVector::from_fn(r, |k, _| elim.cf[elim.piv_cols[k]]);
            let w = lu_t.solve(&cp).ok_or(Status::Numerical)?;
            let bs = DVector::from_fn(r, |k, _| b[elim.piv_rows[k]]);
            elim.offset = w.dot(&bs);
            for (k, &s) in elim.piv_rows.iter().enumerate() {
                for e in &rows[s] {
                    cb[e.blk][(e.r, e.c)] -= w[k] * e.v;
                    if e.r != e.c {
                        cb[e.blk][(e.c, e.r)] -= w[k] * e.v;
                    }
                }
            }
            let is_piv: Vec<bool> = (0..m).map(|i| elim.piv_rows.contains(&i)).collect();
            for i in (0..m).filter(|&i| !is_piv[i]) {
                let ap = DVector::from_fn(r, |k, _| elim.af[(i, elim.piv_cols[k])]);
                if ap.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let kr = lu_t.solve(&ap).ok_or(Status::Numerical)?;
                let mut ents = std::mem::take(&mut rows[i]);
                for (k, &s) in elim.piv_rows.iter().enumerate() {
                    if kr[k] != 0.0 {
                        ents.extend(rows[s].iter().map(|e| Entry { v: -kr[k] * e.v, ..*e }));
                        b[i] -= kr[k] * b[s];
                    }
                }
                rows[i] = merge_entries(ents);
            }
            for &s in &elim.piv_rows {
                rows[s].clear();
            }
            elim.lu = Some(lu);
            elim.lu_t = Some(lu_t);
        }

        // rows with no block entries are either void or contradictory
        let bmax = b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut orig = Vec::new();
        for i in 0..m {
            if elim.piv_rows.contains(&i) {
                continue;
            }
            if rows[i].is_empty() {
                if b[i].abs() > 1e-10 * (1.0 + bmax) {
                    return Err(Status::Infeasible);
                }
                continue;
            }
            orig.push(i);
        }
        let data = Self {
            m: orig.len(),
            b: DVector::from_iterator(orig.len(), orig.iter().map(|&i| b[i])),
            rows: orig.iter().map(|&i| std::mem::take(&mut rows[i])).collect(),
            orig,
            cb,
            row_scale: vec![],
            blk_scale: sizes.iter().map(|&n| vec![1.0; n]).collect(),
            sizes,
            beta_b: 1.0,
            beta_c: 1.0,
        };
        let mut data = data;
        data.row_scale = vec![1.0; data.m];
        Ok((data, elim))
    }

    /// Ruiz-style equilibration, then normalization of `b` and `C`.
    fn equilibrate(&mut self) {
        let mut rs = vec![1.0; self.m];
        let mut ds: Vec<Vec<f64>> = self.sizes.iter().map(|&n| vec![1.0; n]).collect();
        for _ in 0..12 {
            for i in 0..self.m {
                let mut mx: f64 = 0.0;
                for e in &self.rows[i] {
                    mx = mx.max((e.v * rs[i] * ds[e.blk][e.r] * ds[e.blk][e.c]).abs());
                }
                if mx > 0.0 {
                    rs[i] /= mx.sqrt();
                }
            }
            let mut dmax: Vec<Vec<f64>> = self.sizes.iter().map(|&n| vec![0.0; n]).collect();
            for i in 0..self.m {
                for e in &self.rows[i] {
                    let s = (e.v * rs[i] * ds[e.blk][e.r] * ds[e.blk][e.c]).abs();
                    dmax[e.blk][e.r] = dmax[e.blk][e.r].max(s);
                    dmax[e.blk][e.c] = dmax[e.blk][e.c].max(s);
                }
            }
            for (d, mx) in ds.iter_mut().zip(&dmax) {
                for (dk, &v) in d.iter_mut().zip(mx) {
                    if v > 0.0 {
                        *dk /= v.sqrt().sqrt();
                    }
                }
            }
        }
        for i in 0..self.m {
            for e in self.rows[i].iter_mut() {
                e.v *= rs[i] * ds[e.blk][e.r] * ds[e.blk][e.c];
            }
            self.b[i] *= rs[i];
        }
        for (c, d) in self.cb.iter_mut().zip(&ds) {
            let n = d.len();
            for j in 0..n {
                for i in 0..n {
                    c[(i, j)] *= d[i] * d[j];
                }
            }
        }
        self.beta_b = self.b.amax().max(1.0);
        let cmax = self.cb.iter().map(|c| c.amax()).fold(0.0, f64::max);
        self.beta_c = cmax.max(1.0);
        self.b /= self.beta_b;
        for c in self.cb.iter_mut() {
            *c /= self.beta_c;
        }
        self.row_scale = rs;
        self.blk_scale = ds;
    }

    /// `A(X)`.
    fn apply(&self, x: &[DMatrix<f64>]) -> DVector<f64> {
        DVector::from_fn(self.m, |i, _| {
            self.rows[i]
                .iter()
                .map(|e| {
                    let xb = &x[e.blk];
                    if e.r == e.c {
                        e.v * xb[(e.r, e.r)]
                    } else {
                        2.0 * e.v * xb[(e.r, e.c)]
                    }
                })
                .sum()
        })
    }

    /// `Aᵀy`.
    fn adjoint(&self, y: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for i in 0..self.m {
            for e in &self.rows[i] {
                out[e.blk][(e.r, e.c)] += y[i] * e.v;
                if e.r != e.c {
                    out[e.blk][(e.c, e.r)] += y[i] * e.v;
                }
            }
        }
        out
    }
}

fn inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

/// Largest `α` with `X + α·dX ⪰ 0` (infinite when `dX ⪰ 0`).
fn max_step(x: &DMatrix<f64>, dx: &DMatrix<f64>) -> Option<f64> {
    if x.nrows() == 0 {
        return Some(f64::INFINITY);
    }
    let l = x.clone().cholesky()?.unpack();
    let t = l.solve_lower_triangular(dx)?;
    let mut s = l.solve_lower_triangular(&t.transpose())?;
    symmetrize(&mut s);
    let min = s.symmetric_eigenvalues().min();
    Some(if min >= 0.0 { f64::INFINITY } else { -1.0 / min })
}

struct Scaling {
    g: DMatrix<f64>,
    ginv: DMatrix<f64>,
    w: DMatrix<f64>,
    lambda: DVector<f64>,
}

/// Nesterov–Todd point: `W Z W = X` with `W = G Gᵀ`, `Gᵀ Z G = G⁻¹ X G⁻ᵀ = Λ`.
fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let l = x.clone().cholesky()?.unpack();
    let r = z.clone().cholesky()?.unpack();
    let svd = (r.transpose() * &l).svd(true, true);
    let u_unused = svd.u?;
    drop(u_unused);
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&s| s <= 0.0 || !s.is_finite()) {
        return None;
    }
    let isq = lambda.map(|s| 1.0 / s.sqrt());
    let sq = lambda.map(f64::sqrt);
    let g = &l * &v * DMatrix::from_diagonal(&isq);
    let linv = l.solve_lower_triangular(&DMatrix::identity(x.nrows(), x.nrows()))?;
    let ginv = DMatrix::from_diagonal(&sq) * v.transpose() * linv;
    let mut w = &g * g.transpose();
    symmetrize(&mut w);
    Some(Scaling { g, ginv, w, lambda })
}

struct Direction {
    dx: Vec<DMatrix<f64>>,
    dy: DVector<f64>,
    dz: Vec<DMatrix<f64>>,
}

struct Newton<'a> {
    data: &'a Data,
    scal: Vec<Scaling>,
    mm: DMatrix<f64>,
    mchol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
}

impl<'a> Newton<'a> {
    fn new(data: &'a Data, scal: Vec<Scaling>) -> Option<Self> {
        let m = data.m;
        let mut mm = DMatrix::zeros(m, m);
        let mut rows_in: Vec<Vec<usize>> = vec![Vec::new(); data.sizes.len()];
        for i in 0..m {
            let mut last = usize::MAX;
            for e in &data.rows[i] {
                if e.blk != last {
                    rows_in[e.blk].push(i);
                    last = e.blk;
                }
            }
        }
        for (blk, rows) in rows_in.iter().enumerate() {
            let w = &scal[blk].w;
            let n = w.nrows();
            let mut bmat = DMatrix::zeros(n, n);
            for &j in rows {
                bmat.fill(0.0);
                for e in data.rows[j].iter().filter(|e| e.blk == blk) {
                    let ws = w.column(e.r);
                    let wt = w.column(e.c);
                    if e.r == e.c {
                        bmat.ger(e.v, &ws, &ws, 1.0);
                    } else {
                        bmat.ger(e.v, &ws, &wt, 1.0);
                        bmat.ger(e.v, &wt, &ws, 1.0);
                    }
                }
                for &i in rows {
                    let mut s = 0.0;
                    for e in data.rows[i].iter().filter(|e| e.blk == blk) {
                        s += if e.r == e.c { e.v * bmat[(e.r, e.r)] } else { 2.0 * e.v * bmat[(e.r, e.c)] };
                    }
                    mm[(i, j)] += s;
                }
            }
        }
        symmetrize(&mut mm);
        let scale = mm.diagonal().amax().max(1e-300);
        let mut reg = 0.0;
        let mchol = loop {
            let mut trial = mm.clone();
            for i in 0..m {
                trial[(i, i)] += reg;
            }
            if let Some(c) = trial.cholesky() {
                break c;
            }
            reg = if reg == 0.0 { 1e-14 * scale } else { reg * 100.0 };
            if reg > 1e-2 * scale {
                return None;
            }
        };
        Some(Self { data, scal, mm, mchol })
    }

    /// `M dy = h` with a few steps of iterative refinement.
    fn solve_m(&self, h: &DVector<f64>) -> DVector<f64> {
        let mut dy = self.mchol.solve(h);
        for _ in 0..3 {
            let r = h - &self.mm * &dy;
            if r.norm() <= 1e-15 * h.norm() {
                break;
            }
            dy += self.mchol.solve(&r);
        }
        dy
    }

    fn solve(&self, rp: &DVector<f64>, rd: &[DMatrix<f64>], rc: &[DMatrix<f64>]) -> Option<Direction> {
        let d = self.data;
        let tmp: Vec<DMatrix<f64>> =
            rc.iter().zip(rd).zip(&self.scal).map(|((rc, rd), s)| rc - &s.w * rd * &s.w).collect();
        let h = rp - d.apply(&tmp);
        let dy = self.solve_m(&h);
        if dy.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let aty = d.adjoint(&dy);
        let mut dz = Vec::with_capacity(rd.len());
        let mut dx = Vec::with_capacity(rd.len());
        for ((rd, aty), (rc, s)) in rd.iter().zip(aty).zip(rc.iter().zip(&self.scal)) {
            let mut z = rd - aty;
            symmetrize(&mut z);
            let mut x = rc - &s.w * &z * &s.w;
            symmetrize(&mut x);
            dz.push(z);
            dx.push(x);
        }
        Some(Direction { dx, dy, dz })
    }
}

fn step_lengths(x: &[DMatrix<f64>], z: &[DMatrix<f64>], dir: &Direction) -> Option<(f64, f64)> {
    let mut ap = f64::INFINITY;
    let mut ad = f64::INFINITY;
    for (xb, dx) in x.iter().zip(&dir.dx) {
        ap = ap.min(max_step(xb, dx)?);
    }
    for (zb, dz) in z.iter().zip(&dir.dz) {
        ad = ad.min(max_step(zb, dz)?);
    }
    Some((ap, ad))
}

/// Solves a problem within the dense-solver capacity.
pub fn solve_small(p: &SdpProblem, opts: &SolveOptions) -> Result<Solution> {
    if p.nvec() > MAX_NVEC {
        return Err(Error::Capacity(format!("{} variables exceed the limit of {MAX_NVEC}", p.nvec())));
    }
    if let Some(&s) = p.blocks().iter().find(|&&s| s > MAX_SIDE) {
        return Err(Error::Capacity(format!("block side {s} exceeds the limit of {MAX_SIDE}")));
    }
    let (mut data, elim) = match Data::new(p) {
        Ok(d) => d,
        Err(status) => {
            return Ok(Solution {
                status,
                x: vec![0.0; p.nvec()],
                y: vec![0.0; p.nrows()],
                obj_primal: f64::NAN,
                obj_dual: f64::NAN,
                iterations: 0,
                trace: Vec::new(),
            })
        }
    };
    if opts.scale {
        data.equilibrate();
    }
    Ok(run(p, &data, &elim, opts))
}

fn run(p: &SdpProblem, data: &Data, elim: &Elim, opts: &SolveOptions) -> Solution {
    let m = data.m;
    let ntot: usize = data.sizes.iter().sum();
    let unscale_obj = data.beta_b * data.beta_c;

    let bnorm = data.b.norm();
    let cnorm = data.cb.iter().map(|c| c.norm_squared()).sum::<f64>().sqrt();
    let row_norms: Vec<f64> = data
        .rows
        .iter()
        .map(|row| row.iter().map(|e| if e.r == e.c { e.v * e.v } else { 2.0 * e.v * e.v }).sum::<f64>().sqrt())
        .collect();

    let nmax = data.sizes.iter().copied().max().unwrap_or(1) as f64;
    let mut xi0 = 10f64.max(nmax.sqrt());
    let mut eta0 = 10f64.max(nmax.sqrt()).max(cnorm);
    for i in 0..m {
        xi0 = xi0.max(nmax.sqrt() * (1.0 + data.b[i].abs()) / (1.0 + row_norms[i]));
        eta0 = eta0.max(row_norms[i]);
    }
    let mut x: Vec<DMatrix<f64>> = data.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi0).collect();
    let mut z: Vec<DMatrix<f64>> = data.sizes.iter().map(|&n| DMatrix::identity(n, n) * eta0).collect();
    let mut y = DVector::zeros(m);

    let mut trace = Vec::new();
    let mut status = Status::MaxIter;
    let mut iterations = 0;
    let mut best: Option<(f64, Vec<DMatrix<f64>>, DVector<f64>)> = None;

    for it in 0..=opts.max_iter {
        iterations = it;
        let rp = &data.b - data.apply(&x);
        let aty = data.adjoint(&y);
        let rd: Vec<DMatrix<f64>> = data.cb.iter().zip(&z).zip(&aty).map(|((c, z), a)| c - z - a).collect();
        let pobj: f64 = data.cb.iter().zip(&x).map(|(c, x)| inner(c, x)).sum::<f64>();
        let dobj = data.b.dot(&y);
        let xz: f64 = x.iter().zip(&z).map(|(x, z)| inner(x, z)).sum();
        let mu = if ntot > 0 { xz / ntot as f64 } else { 0.0 };
        let pinf = rp.norm() / (1.0 + bnorm);
        let dinf = rd.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt() / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        trace.push(Iterate {
            obj_primal: pobj * unscale_obj + elim.offset,
            obj_dual: dobj * unscale_obj + elim.offset,
            pinf,
            dinf,
            mu,
        });
        log::debug!("it {it:3} p {pobj:+.10e} d {dobj:+.10e} pinf {pinf:.2e} dinf {dinf:.2e} gap {gap:.2e}");

        let merit = pinf.max(dinf).max(gap);
        if best.as_ref().is_none_or(|b| merit < b.0) {
            best = Some((merit, x.clone(), y.clone()));
        }
        if pinf <= opts.tol_feas && dinf <= opts.tol_feas && gap <= opts.tol_gap {
            status = Status::Optimal;
            break;
        }
        // Farkas-type rays
        let ray_d: f64 = aty.iter().zip(&z).map(|(a, z)| (a + z).norm_squared()).sum::<f64>().sqrt();
        if dobj > 0.0 && ray_d <= 1e-8 * dobj && it > 0 {
            status = Status::Infeasible;
            break;
        }
        let ray_p = data.apply(&x).norm();
        if pobj < 0.0 && ray_p <= -1e-8 * pobj && it > 0 {
            status = Status::Infeasible;
            break;
        }
        if it == opts.max_iter {
            break;
        }

        let Some(scal) = x.iter().zip(&z).map(|(x, z)| nt_scaling(x, z)).collect::<Option<Vec<_>>>() else {
            status = Status::Numerical;
            break;
        };
        let Some(newton) = Newton::new(data, scal) else {
            status = Status::Numerical;
            break;
        };

        // predictor
        let rc_aff: Vec<DMatrix<f64>> = x.iter().map(|x| -x).collect();
        let Some(aff) = newton.solve(&rp, &rd, &rc_aff) else {
            status = Status::Numerical;
            break;
        };
        let Some((ap, ad)) = step_lengths(&x, &z, &aff) else {
            status = Status::Numerical;
            break;
        };
        let (ap, ad) = (ap.min(1.0), ad.min(1.0));
        let mu_aff: f64 = if ntot > 0 {
            x.iter()
                .zip(&z)
                .zip(aff.dx.iter().zip(&aff.dz))
                .map(|((x, z), (dx, dz))| inner(&(x + dx * ap), &(z + dz * ad)))
                .sum::<f64>()
                / ntot as f64
        } else {
            0.0
        };
        let sigma = if mu > 0.0 { (mu_aff / mu).clamp(0.0, 1.0).powi(3) } else { 0.0 };

        // corrector
        let rc: Vec<DMatrix<f64>> = newton
            .scal
            .iter()
            .zip(aff.dx.iter().zip(&aff.dz))
            .map(|(s, (dx, dz))| {
                let n = s.lambda.len();
                let dxt = &s.ginv * dx * s.ginv.transpose();
                let dzt = s.g.transpose() * dz * &s.g;
                let prod = &dxt * &dzt;
                let mut r = DMatrix::zeros(n, n);
                for j in 0..n {
                    for i in 0..n {
                        let mut v = -0.5 * (prod[(i, j)] + prod[(j, i)]);
                        if i == j {
                            v += sigma * mu - s.lambda[i] * s.lambda[i];
                        }
                        r[(i, j)] = 2.0 * v / (s.lambda[i] + s.lambda[j]);
                    }
                }
                &s.g * r * s.g.transpose()
            })
            .collect();
        let Some(dir) = newton.solve(&rp, &rd, &rc) else {
            status = Status::Numerical;
            break;
        };
        let Some((ap, ad)) = step_lengths(&x, &z, &dir) else {
            status = Status::Numerical;
            break;
        };
        let tau = 0.98;
        let ap = (tau * ap).min(1.0);
        let ad = (tau * ad).min(1.0);
        if ap < 1e-12 && ad < 1e-12 {
            status = Status::Numerical;
            break;
        }
        for (xb, dx) in x.iter_mut().zip(&dir.dx) {
            *xb += dx * ap;
            symmetrize(xb);
        }
        y += &dir.dy * ad;
        for (zb, dz) in z.iter_mut().zip(&dir.dz) {
            *zb += dz * ad;
            symmetrize(zb);
        }
    }

    if status == Status::Numerical || status == Status::MaxIter {
        if let Some((_, bx, by)) = best {
            x = bx;
            y = by;
        }
    }
    unscale(p, data, elim, status, &x, &y, iterations, trace)
}

#[allow(clippy::too_many_arguments)]
fn unscale(
    p: &SdpProblem,
    data: &Data,
    elim: &Elim,
    status: Status,
    x: &[DMatrix<f64>],
    y: &DVector<f64>,
    iterations: usize,
    trace: Vec<Iterate>,
) -> Solution {
    let nfree = p.nfree();
    let mut out = vec![0.0; p.nvec()];
    for ((xb, d), off) in x.iter().zip(&data.blk_scale).zip(p.block_offsets()) {
        let n = d.len();
        for c in 0..n {
            for r in 0..n {
                out[off + c * n + r] = xb[(r, c)] * d[r] * d[c] * data.beta_b;
            }
        }
    }
    let mut yy = vec![0.0; p.nrows()];
    for (k, &i) in data.orig.iter().enumerate() {
        yy[i] = y[k] * data.row_scale[k] * data.beta_c;
    }
    if let (Some(lu), Some(lu_t)) = (&elim.lu, &elim.lu_t) {
        let mut ab = vec![0.0; p.n_eq()];
        for (i, j, v) in p.a().triplets() {
            if j >= nfree && i < p.n_eq() {
                ab[i] += v * out[j];
            }
        }
        let r = elim.piv_rows.len();
        let rhs = DVector::from_fn(r, |k, _| p.b()[elim.piv_rows[k]] - ab[elim.piv_rows[k]]);
        if let Some(xp) = lu.solve(&rhs) {
            for (k, &j) in elim.piv_cols.iter().enumerate() {
                out[j] = xp[k];
            }
        }
        let rhs = DVector::from_fn(r, |k, _| {
            let j = elim.piv_cols[k];
            elim.cf[j] - (0..p.n_eq()).map(|i| elim.af[(i, j)] * yy[i]).sum::<f64>()
        });
        if let Some(ys) = lu_t.solve(&rhs) {
            for (k, &i) in elim.piv_rows.iter().enumerate() {
                yy[i] = ys[k];
            }
        }
    }
    let obj_primal = p.objective(&out);
    let obj_dual = p.b().iter().zip(&yy).map(|(b, y)| b * y).sum();
    Solution { status, x: out, y: yy, obj_primal, obj_dual, iterations, trace }
}
