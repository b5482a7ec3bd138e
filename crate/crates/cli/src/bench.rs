//! Representation-scaling benchmarks.
//!
//! Instances: `s1(x1,x2; ξ1..ξq)` and `s2(y1,y2; η1..ηq)` with dense random
//! coefficients over all monomials of degree at most 4, sharing half their
//! decision variables (`η_j = ξ_{j+q/2}`), and a known `p2(y1,y2)` of the
//! same shape.
//!
//! | op   | dpvar                    | pvar                           |
//! |------|--------------------------|--------------------------------|
//! | add  | `s1 + s2`                | flat `s̄1 + s̄2`                 |
//! | mul  | `s1 · p2`                | flat `s̄1 · p2`                 |
//! | diff | `∂s1/∂x2`                | flat `∂s̄1/∂x2`                 |
//! | subs | `s1` at `x2 = 1 + x1/2`  | same on the flattened poly     |
//! | int  | `∫ s1 dx2`               | same on the flattened poly     |
//!
//! CSV columns, one row per (op, representation, q):
//!
//! * `op`, `representation` (`dpvar` or `pvar`), `q`
//! * `wall_time`: median seconds over the repetitions, operation only
//! * `peak_nnz`: largest `nnz(C) + nnz(Z)` among operands and result
//! * `basis_rows`: monomial rows of the operand bases fed to the operation

use std::collections::HashMap;
use std::fmt;
use std::hint::black_box;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use log::debug;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sosforge_core::monomial::full_basis;
use sosforge_core::{DPoly, Error, FlatPoly, PPoly, Result, Side, SparseMat, VarSet};

pub const BENCH_DEGREE: u32 = 4;
pub const AUDIT_POINTS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Add,
    Mul,
    Diff,
    Subs,
    Int,
}

impl Op {
    pub const ALL: [Op; 5] = [Op::Add, Op::Mul, Op::Diff, Op::Subs, Op::Int];

    pub fn name(self) -> &'static str {
        match self {
            Op::Add => "add",
            Op::Mul => "mul",
            Op::Diff => "diff",
            Op::Subs => "subs",
            Op::Int => "int",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Op {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Op::ALL
            .into_iter()
            .find(|o| o.name() == s)
            .ok_or_else(|| format!("unknown operation {s:?}, expected one of add, mul, diff, subs, int"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Dpvar,
    Pvar,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchRecord {
    pub op: &'static str,
    pub representation: Representation,
    pub q: usize,
    pub wall_time: f64,
    pub peak_nnz: usize,
    pub basis_rows: usize,
}

/// `SOSFORGE_SEED`, or a fixed default.
pub fn seed_from_env() -> u64 {
    std::env::var("SOSFORGE_SEED").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(2021)
}

fn xi(k: usize) -> String {
    format!("xi{k}")
}

/// Dense random `(q+1) × n` coefficients over `[1; dvars] ⊗ Z_4(vars)`.
fn random_dpoly(rng: &mut ChaCha8Rng, vars: [&str; 2], dvars: &[String]) -> Result<DPoly> {
    let z = full_basis(&VarSet::new(vars), BENCH_DEGREE);
    let dv = VarSet::new(dvars.iter().cloned());
    let (q1, n) = (dv.len() + 1, z.nrows());
    let mut rows = Vec::with_capacity(q1 * n);
    let mut cols = Vec::with_capacity(q1 * n);
    let mut vals = Vec::with_capacity(q1 * n);
    for c in 0..n {
        for r in 0..q1 {
            rows.push(r);
            cols.push(c);
            vals.push(rng.gen_range(-1.0..1.0));
        }
    }
    DPoly::new(1, 1, dv, z, SparseMat::from_triplets(q1, n, &rows, &cols, &vals)?)
}

/// The operands of one benchmark instance.
pub struct Instance {
    pub q: usize,
    pub s1: DPoly,
    pub s2: DPoly,
    pub p2: PPoly,
}

impl Instance {
    pub fn new(q: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (q as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let half = q / 2;
        let d1: Vec<String> = (1..=q).map(xi).collect();
        let d2: Vec<String> = (1..=q).map(|j| if j <= half { xi(j + half) } else { format!("eta{j}") }).collect();
        let s1 = random_dpoly(&mut rng, ["x1", "x2"], &d1)?;
        let s2 = random_dpoly(&mut rng, ["y1", "y2"], &d2)?;
        let p2 = PPoly::try_from(random_dpoly(&mut rng, ["y1", "y2"], &[])?)?;
        Ok(Self { q, s1, s2, p2 })
    }
}

fn subs_target() -> PPoly {
    PPoly::scalar(1.0).add(&PPoly::var("x1").scale(0.5)).expect("scalar sum")
}

fn size(p: &DPoly) -> usize {
    p.coeffs().nnz() + p.basis().nnz()
}

fn flat_size(p: &FlatPoly) -> usize {
    p.coeffs().nnz() + p.basis().degs().nnz()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median wall time of `reps` calls, plus the last result.
fn time<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, T)> {
    let mut times = Vec::with_capacity(reps);
    let mut last = None;
    for _ in 0..reps.max(1) {
        let t = Instant::now();
        let out = black_box(f()?);
        times.push(t.elapsed().as_secs_f64());
        last = Some(out);
    }
    Ok((median(times), last.expect("at least one repetition")))
}

enum FlatOut {
    Flat(FlatPoly),
    Joint(PPoly),
}

impl FlatOut {
    fn size(&self) -> usize {
        match self {
            FlatOut::Flat(f) => flat_size(f),
            FlatOut::Joint(p) => size(p.as_dpoly()),
        }
    }

    fn eval(&self, x: &HashMap<String, f64>, xi: &HashMap<String, f64>) -> Result<DMatrix<f64>> {
        match self {
            FlatOut::Flat(f) => f.eval(x, xi),
            FlatOut::Joint(p) => {
                let mut all = x.clone();
                all.extend(xi.iter().map(|(k, v)| (k.clone(), *v)));
                p.eval(&all)
            }
        }
    }
}

fn run_dpvar(op: Op, inst: &Instance, reps: usize) -> Result<(f64, DPoly)> {
    let r = subs_target();
    match op {
        Op::Add => time(reps, || inst.s1.add(&inst.s2)),
        Op::Mul => time(reps, || inst.s1.mul_poly(&inst.p2, Side::Right)),
        Op::Diff => time(reps, || inst.s1.diff("x2")),
        Op::Subs => time(reps, || inst.s1.subs("x2", &r)),
        Op::Int => time(reps, || inst.s1.integrate("x2")),
    }
}

fn run_pvar(op: Op, f1: &FlatPoly, f2: &FlatPoly, p2: &PPoly, reps: usize) -> Result<(f64, FlatOut)> {
    let r = subs_target();
    Ok(match op {
        Op::Add => {
            let (t, o) = time(reps, || f1.add(f2))?;
            (t, FlatOut::Flat(o))
        }
        Op::Mul => {
            let (t, o) = time(reps, || f1.mul(p2, Side::Right))?;
            (t, FlatOut::Flat(o))
        }
        Op::Diff => {
            let (t, o) = time(reps, || f1.diff("x2"))?;
            (t, FlatOut::Flat(o))
        }
        Op::Subs => {
            let (t, o) = time(reps, || f1.as_ppoly().subs("x2", &r))?;
            (t, FlatOut::Joint(o))
        }
        Op::Int => {
            let (t, o) = time(reps, || f1.as_ppoly().integrate("x2"))?;
            (t, FlatOut::Joint(o))
        }
    })
}

/// Both results agree at random points within `1e-9` relative.
fn audit(op: Op, inst: &Instance, dp: &DPoly, flat: &FlatOut, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut dvars: Vec<String> = inst.s1.dvars().names().to_vec();
    dvars.extend(inst.s2.dvars().names().iter().cloned());
    for _ in 0..AUDIT_POINTS {
        let x: HashMap<String, f64> =
            ["x1", "x2", "y1", "y2"].iter().map(|v| (v.to_string(), rng.gen_range(-1.0..1.0))).collect();
        let xi: HashMap<String, f64> = dvars.iter().map(|v| (v.clone(), rng.gen_range(-1.0..1.0))).collect();
        let a = dp.eval(&x, &xi)?;
        let b = flat.eval(&x, &xi)?;
        let scale = 1.0 + a.amax().max(b.amax());
        let err = (&a - &b).amax();
        if err.is_nan() || err > 1e-9 * scale {
            return Err(Error::Argument(format!("{op} at q = {}: dpvar and pvar results differ by {err:e}", inst.q)));
        }
    }
    Ok(())
}

/// One dpvar and one pvar record per `q`, each audited for agreement.
pub fn run_bench(op: Op, q_list: &[usize], reps: usize, seed: u64) -> Result<Vec<BenchRecord>> {
    if q_list.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::Argument("q values must be ascending".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(1));
    let mut out = Vec::with_capacity(2 * q_list.len());
    for &q in q_list {
        let inst = Instance::new(q, seed)?;
        let (n1, n2, np) = (inst.s1.nmonomials(), inst.s2.nmonomials(), inst.p2.basis().nrows());

        let (t, res) = run_dpvar(op, &inst, reps)?;
        let (rows, peak) = match op {
            Op::Add => (n1 + n2, size(&inst.s1).max(size(&inst.s2)).max(size(&res))),
            Op::Mul => (n1 + np, size(&inst.s1).max(size(inst.p2.as_dpoly())).max(size(&res))),
            _ => (n1, size(&inst.s1).max(size(&res))),
        };
        out.push(BenchRecord {
            op: op.name(),
            representation: Representation::Dpvar,
            q,
            wall_time: t,
            peak_nnz: peak,
            basis_rows: rows,
        });
        debug!("{op} dpvar q={q}: {t:.3e} s");

        let f1 = FlatPoly::flatten(&inst.s1);
        let f2 = FlatPoly::flatten(&inst.s2);
        let (tf, flat) = run_pvar(op, &f1, &f2, &inst.p2, reps)?;
        let (rows, peak) = match op {
            Op::Add => (f1.basis_rows() + f2.basis_rows(), flat_size(&f1).max(flat_size(&f2)).max(flat.size())),
            Op::Mul => (f1.basis_rows() + np, flat_size(&f1).max(size(inst.p2.as_dpoly())).max(flat.size())),
            _ => (f1.basis_rows(), flat_size(&f1).max(flat.size())),
        };
        out.push(BenchRecord {
            op: op.name(),
            representation: Representation::Pvar,
            q,
            wall_time: tf,
            peak_nnz: peak,
            basis_rows: rows,
        });
        debug!("{op} pvar q={q}: {tf:.3e} s");

        audit(op, &inst, &res, &flat, &mut rng)?;
    }
    Ok(out)
}

pub const CSV_HEADER: [&str; 6] = ["op", "representation", "q", "wall_time", "peak_nnz", "basis_rows"];

pub fn write_csv<W: Write>(records: &[BenchRecord], out: W) -> std::result::Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
