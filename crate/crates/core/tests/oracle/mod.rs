//! Independent oracles for the algebra and program layers.
//!
//! Random instances are generated as plain term lists and evaluated by a
//! naive expansion, so nothing here goes through the canonical storage.
//! Shared by the core integration tests and the acceptance target.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use sosforge_core::dpvar::Term;
use sosforge_core::monomial::{full_basis, kron_bases};
use sosforge_core::sosprog::{Origin, QuadOption};
use sosforge_core::{DPoly, DegreeMatrix, FlatPoly, PPoly, Side, SosProgram, VarSet};

pub const IVARS: [&str; 4] = ["x1", "x2", "x3", "x4"];
pub const NPOINTS: usize = 20;

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

pub fn dvar_name(k: usize) -> String {
    format!("c{k:02}")
}

/// A polynomial matrix as a list of terms.
#[derive(Clone, Debug)]
pub struct Expanded {
    pub rows: usize,
    pub cols: usize,
    pub terms: Vec<Term>,
}

impl Expanded {
    pub fn eval(&self, x: &HashMap<String, f64>, xi: &HashMap<String, f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.rows, self.cols);
        for t in &self.terms {
            let mut v = t.coeff;
            if let Some(d) = &t.dvar {
                v *= xi[d];
            }
            for (name, k) in &t.monomial {
                v *= x[name].powi(*k as i32);
            }
            out[(t.row, t.col)] += v;
        }
        out
    }

    pub fn to_dpoly(&self) -> DPoly {
        DPoly::from_terms(self.rows, self.cols, &self.terms).expect("generated terms are valid")
    }

    pub fn to_ppoly(&self) -> PPoly {
        PPoly::from_terms(self.rows, self.cols, &self.terms).expect("generated terms are valid")
    }

    pub fn ivars_used(&self) -> Vec<String> {
        let mut v: Vec<String> = self.terms.iter().flat_map(|t| t.monomial.iter().map(|(n, _)| n.clone())).collect();
        v.sort();
        v.dedup();
        v
    }
}

/// Shape parameters of a random instance.
#[derive(Clone, Copy, Debug)]
pub struct Shape {
    pub p: usize,
    pub q: usize,
    pub deg: u32,
    pub nterms: usize,
}

impl Shape {
    pub fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            p: rng.gen_range(1..=4),
            q: rng.gen_range(0..=30),
            deg: rng.gen_range(0..=6),
            nterms: rng.gen_range(0..=24),
        }
    }
}

fn random_monomial(rng: &mut ChaCha8Rng, vars: &[&str], deg: u32) -> Vec<(String, u32)> {
    let total = rng.gen_range(0..=deg);
    let mut exps = vec![0u32; vars.len()];
    for _ in 0..total {
        exps[rng.gen_range(0..vars.len())] += 1;
    }
    vars.iter().zip(exps).filter(|(_, e)| *e > 0).map(|(v, e)| (v.to_string(), e)).collect()
}

/// Random term list over the first `shape.p` ivars and dvars drawn from `pool`.
pub fn random_expanded(rng: &mut ChaCha8Rng, rows: usize, cols: usize, shape: Shape, pool: &[String]) -> Expanded {
    let vars = &IVARS[..shape.p];
    let mut terms = Vec::with_capacity(shape.nterms);
    if rows * cols > 0 {
        for _ in 0..shape.nterms {
            let mut t = Term::new(rng.gen_range(-1.0..1.0)).at(rng.gen_range(0..rows), rng.gen_range(0..cols));
            if !pool.is_empty() && rng.gen_bool(0.7) {
                t = t.dvar(pool[rng.gen_range(0..pool.len())].clone());
            }
            t.monomial = random_monomial(rng, vars, shape.deg);
            terms.push(t);
        }
    }
    Expanded { rows, cols, terms }
}

/// Random known polynomial (no decision variables).
pub fn random_known(rng: &mut ChaCha8Rng, rows: usize, cols: usize, p: usize, deg: u32, nterms: usize) -> Expanded {
    random_expanded(rng, rows, cols, Shape { p, q: 0, deg, nterms }, &[])
}

pub fn pool(range: std::ops::Range<usize>) -> Vec<String> {
    range.map(dvar_name).collect()
}

/// Evaluation points: every ivar and the first 60 dvar names in [−1, 1].
pub fn points(rng: &mut ChaCha8Rng, n: usize) -> Vec<(HashMap<String, f64>, HashMap<String, f64>)> {
    (0..n)
        .map(|_| {
            let x = IVARS.iter().map(|v| (v.to_string(), rng.gen_range(-1.0..1.0))).collect();
            let xi = (0..60).map(|k| (dvar_name(k), rng.gen_range(-1.0..1.0))).collect();
            (x, xi)
        })
        .collect()
}

fn compare(what: &str, got: &DMatrix<f64>, want: &DMatrix<f64>, tol: f64, relative: bool) -> Result<(), String> {
    if got.shape() != want.shape() {
        return Err(format!("{what}: shape {:?} vs {:?}", got.shape(), want.shape()));
    }
    for (g, w) in got.iter().zip(want.iter()) {
        let scale = if relative { 1.0 + w.abs() } else { 1.0 };
        if (g - w).abs() > tol * scale || !g.is_finite() {
            return Err(format!("{what}: got {g}, want {w}"));
        }
    }
    Ok(())
}

fn eval_d(s: &DPoly, x: &HashMap<String, f64>, xi: &HashMap<String, f64>) -> Result<DMatrix<f64>, String> {
    s.eval(x, xi).map_err(|e| e.to_string())
}

fn dims(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=3)
}

/// Checks that a DPoly built from a term list evaluates like the list.
pub fn check_construction(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let e = random_expanded(rng, r0, c0, sh, &pool(0..sh.q));
    let s = e.to_dpoly();
    for (x, xi) in points(rng, NPOINTS) {
        compare("construction", &eval_d(&s, &x, &xi)?, &e.eval(&x, &xi), 1e-12, false)?;
    }
    Ok(())
}

/// Sum of two instances sharing half of their decision variables.
pub fn check_add(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r, c) = (dims(rng), dims(rng));
    let half = sh.q / 2;
    let a = random_expanded(rng, r, c, sh, &pool(0..sh.q));
    let b = random_expanded(rng, r, c, sh, &pool(half..half + sh.q));
    let sum = a.to_dpoly().add(&b.to_dpoly()).map_err(|e| e.to_string())?;
    for (x, xi) in points(rng, NPOINTS) {
        compare("add", &eval_d(&sum, &x, &xi)?, &(a.eval(&x, &xi) + b.eval(&x, &xi)), 1e-12, false)?;
    }
    Ok(())
}

pub fn check_mul_poly(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (m, k, n) = (dims(rng), dims(rng), dims(rng));
    let side = if rng.gen_bool(0.5) { Side::Left } else { Side::Right };
    let scalar = rng.gen_bool(0.25);
    let pd = rng.gen_range(0..=sh.deg.min(3));
    let (s, p) = match (side, scalar) {
        (_, true) => (random_expanded(rng, m, n, sh, &pool(0..sh.q)), random_known(rng, 1, 1, sh.p, pd, 6)),
        (Side::Right, false) => (random_expanded(rng, m, k, sh, &pool(0..sh.q)), random_known(rng, k, n, sh.p, pd, 6)),
        (Side::Left, false) => (random_expanded(rng, k, n, sh, &pool(0..sh.q)), random_known(rng, m, k, sh.p, pd, 6)),
    };
    let prod = s.to_dpoly().mul_poly(&p.to_ppoly(), side).map_err(|e| e.to_string())?;
    for (x, xi) in points(rng, NPOINTS) {
        let (se, pe) = (s.eval(&x, &xi), p.eval(&x, &xi));
        let want = match (side, scalar) {
            (_, true) => se * pe[(0, 0)],
            (Side::Right, false) => se * pe,
            (Side::Left, false) => pe * se,
        };
        compare("mul_poly", &eval_d(&prod, &x, &xi)?, &want, 1e-12, false)?;
    }
    Ok(())
}

/// Substitution of a degree ≤ 2 known polynomial for one variable.
pub fn check_subs(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r0, c0, sh, &pool(0..sh.q));
    let var = IVARS[rng.gen_range(0..sh.p)];
    let rp = rng.gen_range(1..=4);
    let r = random_known(rng, 1, 1, rp, 2, 4);
    let out = s.to_dpoly().subs(var, &r.to_ppoly()).map_err(|e| e.to_string())?;
    for (x, xi) in points(rng, NPOINTS) {
        let mut xs = x.clone();
        xs.insert(var.to_string(), r.eval(&x, &xi)[(0, 0)]);
        compare("subs", &eval_d(&out, &x, &xi)?, &s.eval(&xs, &xi), 1e-9, false)?;
    }
    Ok(())
}

pub fn check_hcat(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let r = dims(rng);
    let c0 = dims(rng);
    let a = random_expanded(rng, r, c0, sh, &pool(0..sh.q));
    let c0 = dims(rng);
    let b = random_expanded(rng, r, c0, sh, &pool(5..5 + sh.q));
    let out = a.to_dpoly().hcat(&b.to_dpoly()).map_err(|e| e.to_string())?;
    for (x, xi) in points(rng, NPOINTS) {
        let (ea, eb) = (a.eval(&x, &xi), b.eval(&x, &xi));
        let mut want = DMatrix::zeros(r, ea.ncols() + eb.ncols());
        want.columns_mut(0, ea.ncols()).copy_from(&ea);
        want.columns_mut(ea.ncols(), eb.ncols()).copy_from(&eb);
        compare("hcat", &eval_d(&out, &x, &xi)?, &want, 1e-12, false)?;
    }
    Ok(())
}

pub fn check_vcat(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let c = dims(rng);
    let r0 = dims(rng);
    let a = random_expanded(rng, r0, c, sh, &pool(0..sh.q));
    let r0 = dims(rng);
    let b = random_expanded(rng, r0, c, sh, &pool(5..5 + sh.q));
    let out = a.to_dpoly().vcat(&b.to_dpoly()).map_err(|e| e.to_string())?;
    for (x, xi) in points(rng, NPOINTS) {
        let (ea, eb) = (a.eval(&x, &xi), b.eval(&x, &xi));
        let mut want = DMatrix::zeros(ea.nrows() + eb.nrows(), c);
        want.rows_mut(0, ea.nrows()).copy_from(&ea);
        want.rows_mut(ea.nrows(), eb.nrows()).copy_from(&eb);
        compare("vcat", &eval_d(&out, &x, &xi)?, &want, 1e-12, false)?;
    }
    Ok(())
}

pub fn check_transpose(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r0, c0, sh, &pool(0..sh.q));
    let t = s.to_dpoly().transpose();
    for (x, xi) in points(rng, NPOINTS) {
        compare("transpose", &eval_d(&t, &x, &xi)?, &s.eval(&x, &xi).transpose(), 1e-12, false)?;
    }
    Ok(())
}

/// `S + T − T` keeps the monomials and dvars of `T` with zero coefficients;
/// compress must drop them without changing values.
pub fn check_compress(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r, c) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r, c, sh, &pool(0..sh.q));
    let t = random_expanded(rng, r, c, sh, &pool(30..30 + sh.q));
    let (sd, td) = (s.to_dpoly(), t.to_dpoly());
    let padded = sd.add(&td).and_then(|u| u.sub(&td)).map_err(|e| e.to_string())?;
    let out = padded.compress();
    let live_dvars: std::collections::BTreeSet<String> = s.terms.iter().filter_map(|t| t.dvar.clone()).collect();
    if out.ndvars() > live_dvars.len() {
        return Err(format!("compress kept {} dvars, at most {} are used", out.ndvars(), live_dvars.len()));
    }
    for k in 0..out.nmonomials() {
        let block = out.coeffs().gather_cols(&(0..c).map(|j| j * out.nmonomials() + k).collect::<Vec<_>>());
        if block.map_err(|e| e.to_string())?.nnz() == 0 {
            return Err(format!("monomial {k} is dead after compress"));
        }
    }
    for (x, xi) in points(rng, NPOINTS) {
        compare("compress", &eval_d(&out, &x, &xi)?, &s.eval(&x, &xi), 1e-12, false)?;
    }
    Ok(())
}

pub fn check_flatten(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r0, c0, sh, &pool(0..sh.q));
    let sd = s.to_dpoly();
    let f = FlatPoly::flatten(&sd);
    if f.basis_rows() != (sd.ndvars() + 1) * sd.nmonomials() {
        return Err(format!(
            "flattened basis has {} rows, want {}",
            f.basis_rows(),
            (sd.ndvars() + 1) * sd.nmonomials()
        ));
    }
    for (x, xi) in points(rng, NPOINTS) {
        compare("flatten", &f.eval(&x, &xi).map_err(|e| e.to_string())?, &s.eval(&x, &xi), 1e-12, false)?;
    }
    Ok(())
}

/// Central differences in one variable, relative tolerance 1e-6.
pub fn check_diff(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r0, c0, sh, &pool(0..sh.q));
    let var = IVARS[rng.gen_range(0..4)];
    let d = s.to_dpoly().diff(var).map_err(|e| e.to_string())?;
    let h = 1e-5;
    for (x, xi) in points(rng, NPOINTS) {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        *xp.get_mut(var).unwrap() += h;
        *xm.get_mut(var).unwrap() -= h;
        let fd = (s.eval(&xp, &xi) - s.eval(&xm, &xi)) / (2.0 * h);
        compare("diff", &eval_d(&d, &x, &xi)?, &fd, 1e-6, true)?;
    }
    Ok(())
}

/// Adaptive Simpson quadrature of `f` on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Definite integral over `[−1, 1]` against adaptive quadrature, 1e-8.
pub fn check_integrate_def(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r0, c0, sh, &pool(0..sh.q));
    let var = IVARS[rng.gen_range(0..sh.p)];
    let (lo, hi) = (-1.0, 1.0);
    let out = s.to_dpoly().integrate_def(var, lo, hi).map_err(|e| e.to_string())?;
    for (x, xi) in points(rng, NPOINTS / 4) {
        let got = eval_d(&out, &x, &xi)?;
        let mut want = DMatrix::zeros(s.rows, s.cols);
        for i in 0..s.rows {
            for j in 0..s.cols {
                let f = |t: f64| {
                    let mut xt = x.clone();
                    xt.insert(var.to_string(), t);
                    s.eval(&xt, &xi)[(i, j)]
                };
                want[(i, j)] = simpson(&f, lo, hi, 1e-12);
            }
        }
        compare("integrate_def", &got, &want, 1e-8, false)?;
    }
    Ok(())
}

/// Printing then parsing the text form gives back the same value.
pub fn check_text_roundtrip(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let sh = Shape::random(rng);
    let (r0, c0) = (dims(rng), dims(rng));
    let s = random_expanded(rng, r0, c0, sh, &pool(0..sh.q)).to_dpoly();
    let back = DPoly::parse_text(&s.to_string()).map_err(|e| e.to_string())?;
    if back != s {
        return Err(format!("text round trip changed\n{s}\ninto\n{back}"));
    }
    Ok(())
}

/// A solution of `A ξ = b` with random values on the non-pivot columns,
/// by Gauss-Jordan elimination with complete pivoting.
pub fn solve_affine(rng: &mut ChaCha8Rng, a: &DMatrix<f64>, b: &[f64]) -> Option<Vec<f64>> {
    let (m, n) = a.shape();
    let mut aug = DMatrix::from_fn(m, n + 1, |i, j| if j < n { a[(i, j)] } else { b[i] });
    let tol = 1e-10 * a.amax().max(1.0);
    let mut cols: Vec<usize> = (0..n).collect();
    let mut rank = 0;
    while rank < m.min(n) {
        let mut best = (rank, rank, 0.0);
        for i in rank..m {
            for k in rank..n {
                let v = aug[(i, cols[k])].abs();
                if v > best.2 {
                    best = (i, k, v);
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        aug.swap_rows(rank, best.0);
        cols.swap(rank, best.1);
        let c = cols[rank];
        let p = aug[(rank, c)];
        for j in 0..=n {
            aug[(rank, j)] /= p;
        }
        for i in 0..m {
            let f = aug[(i, c)];
            if i != rank && f != 0.0 {
                for j in 0..=n {
                    let v = aug[(rank, j)];
                    aug[(i, j)] -= f * v;
                }
            }
        }
        rank += 1;
    }
    let mut xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for r in 0..rank {
        let rest: f64 = cols[rank..].iter().map(|&j| aug[(r, j)] * xi[j]).sum();
        xi[cols[r]] = aug[(r, n)] - rest;
    }
    let x = nalgebra::DVector::from_column_slice(&xi);
    let res = (a * x - nalgebra::DVector::from_column_slice(b)).amax();
    (res <= 1e-10 * (1.0 + b.iter().fold(0.0f64, |m, v| m.max(v.abs())))).then_some(xi)
}

/// Random program whose registered equalities are all consistent, built
/// from free variables, an SOS variable and a polynomial matrix variable.
pub fn random_program(rng: &mut ChaCha8Rng) -> SosProgram {
    let p = rng.gen_range(1..=3);
    let ivars = VarSet::new(IVARS[..p].iter().copied());
    let mut prog = SosProgram::new(ivars.clone());
    let nfree = rng.gen_range(1..=4);
    let names: Vec<String> = (0..nfree).map(|k| format!("g{k}")).collect();
    let free = prog.declare_decvar(&names).expect("fresh names");
    let zd = rng.gen_range(0..=1);
    let zs = full_basis(&ivars, zd);
    let s = prog.sosvar(&zs).expect("sos variable");
    let pm = prog.polymatrixvar(&full_basis(&ivars, 1), (1, 1), QuadOption::None).expect("polynomial variable");
    let stars: Vec<f64> = (0..nfree).map(|_| rng.gen_range(-1.0..1.0)).collect();
    for _ in 0..rng.gen_range(1..=3) {
        // D = Σ p_k g_k + p0 with p0 chosen so that D vanishes at some ξ*
        let mut d = DPoly::zeros(1, 1);
        let mut p0 = DPoly::zeros(1, 1);
        for (g, &star) in free.iter().zip(&stars) {
            let pk = random_known(rng, 1, 1, p, 2, 3).to_ppoly();
            d = d.add(&g.mul_poly(&pk, Side::Right).unwrap()).unwrap();
            p0 = p0.sub(&pk.to_dpoly().scale(star)).unwrap();
        }
        let d = d.add(&p0).unwrap();
        if rng.gen_bool(0.5) {
            prog.eq_constraint(&d).unwrap();
        } else {
            let lift = random_known(rng, 1, 1, p, 1, 2).to_ppoly();
            let extra = s.add(&pm.mul_poly(&lift, Side::Right).unwrap()).unwrap();
            prog.sos_ineq(&d.add(&extra).unwrap()).unwrap();
        }
    }
    prog
}

/// Any ξ with `Aξ = b` makes every registered equality vanish.
pub fn check_extraction(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let prog = random_program(rng);
    let sdp = prog.assemble().map_err(|e| e.to_string())?;
    let a = DMatrix::from_fn(sdp.nrows(), sdp.nvec(), |i, j| sdp.a().get(i, j));
    let Some(xi) = solve_affine(rng, &a, sdp.b()) else {
        return Err("generated system is inconsistent".into());
    };
    let vals = sdp.dvar_values(&xi);
    for (x, _) in points(rng, NPOINTS) {
        for eq in prog.equalities() {
            let v = eq.eval(&x, &vals).map_err(|e| e.to_string())?;
            if v.amax() > 1e-9 {
                return Err(format!("equality evaluates to {} at a solution of Aξ = b", v.amax()));
            }
        }
    }
    Ok(())
}

/// The Gram certificate `[1 1; 1 1]` over `{1, x1}` for `(x1 + 1)²`
/// satisfies the generated system exactly.
pub fn check_hand_certificate() -> Result<(), String> {
    let mut prog = SosProgram::new(VarSet::new(["x1"]));
    let d = DPoly::from_terms(1, 1, &[Term::new(1.0).pow("x1", 2), Term::new(2.0).pow("x1", 1), Term::new(1.0)])
        .map_err(|e| e.to_string())?;
    prog.sos_ineq(&d).map_err(|e| e.to_string())?;
    let sdp = prog.assemble().map_err(|e| e.to_string())?;
    if sdp.blocks() != [2] || sdp.nfree() != 0 {
        return Err(format!("unexpected cone {:?} with {} free", sdp.blocks(), sdp.nfree()));
    }
    let x = vec![1.0; 4];
    let res = sdp.residual(&x);
    if res.iter().any(|&r| r != 0.0) {
        return Err(format!("residual {res:?}"));
    }
    Ok(())
}

fn random_partial_basis(rng: &mut ChaCha8Rng, vars: &VarSet) -> DegreeMatrix {
    let fd = rng.gen_range(0..=2);
    let full = full_basis(vars, fd);
    let mut keep: Vec<usize> = (0..full.nrows()).collect();
    keep.shuffle(rng);
    let nkeep = rng.gen_range(1..=full.nrows());
    keep.truncate(nkeep);
    keep.sort_unstable();
    full.select_rows(&keep)
}

/// Composite block side and the entry ↔ dvar correspondence of a random
/// `pos` cell grid, checked by plain offset arithmetic.
pub fn check_quadvar(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let vars = VarSet::new(["x1", "x2"]);
    let r = rng.gen_range(1..=3);
    let m: Vec<usize> = (0..r).map(|_| rng.gen_range(1..=2)).collect();
    let z: Vec<DegreeMatrix> = (0..r).map(|_| random_partial_basis(rng, &vars)).collect();
    let mut prog = SosProgram::new(vars.clone());
    prog.declare_decvar(&["pad"]).map_err(|e| e.to_string())?;
    let grid = prog.quadvar(&z, &z, &m, &m, QuadOption::Pos).map_err(|e| e.to_string())?;
    let k: Vec<usize> = z.iter().map(DegreeMatrix::nrows).collect();
    let mut off = vec![0usize];
    for i in 0..r {
        off.push(off[i] + m[i] * k[i]);
    }
    let side = off[r];
    if prog.blocks().len() != 1 || prog.blocks()[0].side != side {
        return Err(format!("block side {:?}, want {side}", prog.blocks().iter().map(|b| b.side).collect::<Vec<_>>()));
    }
    // bijection between the upper triangle and block dvars
    let mut at: HashMap<(usize, usize), String> = HashMap::new();
    for name in prog.dvar_names() {
        if let Some(Origin::Block { block, row, col }) = prog.origin(name) {
            if block != 0 || row > col || col >= side {
                return Err(format!("{name} maps outside the block"));
            }
            if at.insert((row, col), name.clone()).is_some() {
                return Err(format!("entry ({row},{col}) has two dvars"));
            }
        }
    }
    if at.len() != side * (side + 1) / 2 {
        return Err(format!("{} block dvars for side {side}", at.len()));
    }
    for row in &grid {
        for cell in row {
            if let Some(n) = cell.dvars().names().iter().find(|n| !matches!(prog.origin(n), Some(Origin::Block { .. })))
            {
                return Err(format!("cell uses {n}, which is not a block entry"));
            }
        }
    }
    // one-hot ξ on a few entries: each cell must evaluate to the sum of the
    // basis products whose composite position is that entry
    let pts = points(rng, 3);
    for _ in 0..6 {
        let c = rng.gen_range(0..side);
        let rr = rng.gen_range(0..=c);
        let name = &at[&(rr, c)];
        let xi: HashMap<String, f64> = at.values().map(|n| (n.clone(), if n == name { 1.0 } else { 0.0 })).collect();
        for (x, _) in &pts {
            let point: Vec<f64> = vars.names().iter().map(|v| x[v]).collect();
            for i in 0..r {
                for j in 0..r {
                    let got = eval_d(&grid[i][j], x, &xi)?;
                    let (zi, zj) = (z[i].eval(&point), z[j].eval(&point));
                    for a in 0..m[i] {
                        for b in 0..m[j] {
                            let mut want = 0.0;
                            for s in 0..k[i] {
                                for t in 0..k[j] {
                                    let (p1, p2) = (off[i] + a * k[i] + s, off[j] + b * k[j] + t);
                                    if (p1.min(p2), p1.max(p2)) == (rr, c) {
                                        want += zi[s] * zj[t];
                                    }
                                }
                            }
                            if (got[(a, b)] - want).abs() > 1e-12 {
                                return Err(format!(
                                    "cell ({i},{j}) entry ({a},{b}) at Q[{rr},{c}]: {} vs {want}",
                                    got[(a, b)]
                                ));
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Product bases evaluate as products of their factors.
pub fn check_kron_bases(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let vars = VarSet::new(["x1", "x2", "x3"]);
    let (z1, z2) = (random_partial_basis(rng, &vars), random_partial_basis(rng, &vars));
    let (z3, map) = kron_bases(&z1, &z2);
    let point: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (e1, e2, e3) = (z1.eval(&point), z2.eval(&point), z3.eval(&point));
    for i in 0..z1.nrows() {
        for j in 0..z2.nrows() {
            if (e3[map[i * z2.nrows() + j]] - e1[i] * e2[j]).abs() > 1e-12 {
                return Err(format!("product ({i},{j}) misplaced"));
            }
        }
    }
    Ok(())
}

/// Runs `check` on `n` seeds and reports the first failure.
pub fn run_many(n: usize, seed: u64, check: fn(&mut ChaCha8Rng) -> Result<(), String>) -> Result<(), String> {
    let mut rng = rng(seed);
    for k in 0..n {
        check(&mut rng).map_err(|e| format!("instance {k}: {e}"))?;
    }
    Ok(())
}
