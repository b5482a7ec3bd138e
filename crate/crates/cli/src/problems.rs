//! The three example programs: greatest lower bound, robust stability of a
//! parameter-dependent linear system and local stability of a chain of
//! Van der Pol oscillators.

use std::fmt;
use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::time::Instant;

use log::info;
use sosforge_core::dpvar::Term;
use sosforge_core::monomial::full_basis;
use sosforge_core::sdp::{solve_small, write_sdpa};
use sosforge_core::{
    DPoly, Error, PPoly, QuadOption, Result, SdpProblem, Sense, Side, SolveOptions, SosProgram, Status, VarSet,
};

use crate::expr::parse_poly;

pub const GLB_F: &str = "x1^4 + x2^4 - 2*x2*x1^3 - 3*x2^2*x1^2 + 150*(x1^2 + x2^2)";

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Solve when the problem fits the dense solver.
    pub solve: bool,
    /// Always write the SDPA file here. Oversized problems are exported to a
    /// temporary file when this is unset.
    pub export: Option<PathBuf>,
    pub solver: SolveOptions,
    /// GLB only: keep the box `[−h, h]²` in original units instead of
    /// solving over `[−1, 1]²` with `f(h·u)`.
    pub raw: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { solve: true, export: None, solver: SolveOptions::default(), raw: false }
    }
}

#[derive(Clone, Debug)]
pub struct SolveSummary {
    pub status: Status,
    /// In the program's own sense (a maximization reports the maximum).
    pub objective: f64,
    pub dual_objective: f64,
    pub iterations: usize,
    pub seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    /// Building polynomials, variables and constraints.
    pub parse_seconds: f64,
    pub assemble_seconds: f64,
    pub nfree: usize,
    pub blocks: Vec<usize>,
    pub n_eq: usize,
    pub nvec: usize,
    pub solution: Option<SolveSummary>,
    pub exported: Option<PathBuf>,
    /// Why the problem was not solved, if it was not.
    pub note: Option<String>,
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem      {}", self.name)?;
        writeln!(f, "parse        {:.6} s", self.parse_seconds)?;
        writeln!(f, "assemble     {:.6} s", self.assemble_seconds)?;
        writeln!(f, "free vars    {}", self.nfree)?;
        writeln!(f, "psd blocks   {:?}", self.blocks)?;
        writeln!(f, "equalities   {}", self.n_eq)?;
        writeln!(f, "vector size  {}", self.nvec)?;
        if let Some(s) = &self.solution {
            writeln!(f, "status       {:?}", s.status)?;
            writeln!(f, "objective    {:.10} (dual {:.10})", s.objective, s.dual_objective)?;
            writeln!(f, "iterations   {} in {:.3} s", s.iterations, s.seconds)?;
        }
        if let Some(p) = &self.exported {
            writeln!(f, "exported     {}", p.display())?;
        }
        if let Some(n) = &self.note {
            writeln!(f, "note         {n}")?;
        }
        Ok(())
    }
}

fn finish(name: String, prog: &SosProgram, parse_seconds: f64, opts: &RunOptions) -> Result<Report> {
    let t = Instant::now();
    let sdp = prog.assemble()?;
    let assemble_seconds = t.elapsed().as_secs_f64();
    info!("{name}: parsed in {parse_seconds:.4} s, assembled in {assemble_seconds:.4} s");

    let mut report = Report {
        name,
        parse_seconds,
        assemble_seconds,
        nfree: sdp.nfree(),
        blocks: sdp.blocks().to_vec(),
        n_eq: sdp.n_eq(),
        nvec: sdp.nvec(),
        solution: None,
        exported: None,
        note: None,
    };
    let mut export = opts.export.clone();
    if opts.solve {
        let t = Instant::now();
        match solve_small(&sdp, &opts.solver) {
            Ok(sol) => {
                let flip = if prog.sense() == Sense::Max { -1.0 } else { 1.0 };
                report.solution = Some(SolveSummary {
                    status: sol.status,
                    objective: flip * sol.obj_primal,
                    dual_objective: flip * sol.obj_dual,
                    iterations: sol.iterations,
                    seconds: t.elapsed().as_secs_f64(),
                });
            }
            Err(Error::Capacity(msg)) => {
                report.note = Some(msg);
                if export.is_none() {
                    let file = format!("sosforge-{}.dat-s", report.name.replace([' ', '='], "_"));
                    export = Some(std::env::temp_dir().join(file));
                }
            }
            Err(e) => return Err(e),
        }
    }
    if let Some(path) = export {
        export_to(&sdp, &path)?;
        report.exported = Some(path);
    }
    Ok(report)
}

fn export_to(sdp: &SdpProblem, path: &PathBuf) -> Result<()> {
    let out = BufWriter::new(File::create(path)?);
    write_sdpa(sdp, out)
}

/// Scalar polynomial from `(coefficient, [(variable, degree)])` terms.
fn poly(terms: &[(f64, &[(&str, u32)])]) -> Result<PPoly> {
    let t: Vec<Term> =
        terms.iter().map(|(c, mono)| mono.iter().fold(Term::new(*c), |t, (v, d)| t.pow(*v, *d))).collect();
    PPoly::from_terms(1, 1, &t)
}

/// `max γ` s.t. `f − γ − Σ sᵢgᵢ` SOS with SOS multipliers `sᵢ` over all
/// monomials of degree at most `dmax`.
///
/// Unless `opts.raw` is set the program is written in `u = x/h`, which
/// gives the same bound with far better conditioned moments.
pub fn glb_program(dmax: u32, halfwidth: f64, raw: bool) -> Result<SosProgram> {
    if dmax < 2 || !dmax.is_multiple_of(2) {
        return Err(Error::Argument(format!("degree must be even and at least 2, got {dmax}")));
    }
    if halfwidth.is_nan() || halfwidth <= 0.0 {
        return Err(Error::Argument(format!("box half-width must be positive, got {halfwidth}")));
    }
    let mut f = parse_poly(GLB_F)?;
    let h2 = if raw { halfwidth * halfwidth } else { 1.0 };
    let g = [
        parse_poly(&format!("{h2} - x1^2"))?,
        parse_poly(&format!("{h2} - x2^2"))?,
        parse_poly(&format!("{} - x1^2 - x2^2", 2.0 * h2))?,
    ];
    if !raw {
        for v in ["x1", "x2"] {
            let hu = PPoly::var(v).scale(halfwidth);
            f = f.subs(v, &hu)?.compress();
        }
    }
    let x = VarSet::new(["x1", "x2"]);
    let mut prog = SosProgram::new(x.clone());
    let gam = prog.declare_decvar(&["gam"])?.remove(0);
    let z = full_basis(&x, dmax);
    let mut expr = f.to_dpoly().sub(&gam)?;
    for gi in &g {
        let s = prog.sosvar(&z)?;
        expr = expr.sub(&s.mul_poly(gi, Side::Right)?)?;
    }
    prog.sos_ineq(&expr)?;
    prog.set_objective(&[("gam", 1.0)], Sense::Max)?;
    Ok(prog)
}

pub fn run_glb(dmax: u32, halfwidth: f64, opts: &RunOptions) -> Result<Report> {
    let t = Instant::now();
    let prog = glb_program(dmax, halfwidth, opts.raw)?;
    finish(format!("glb d={dmax}"), &prog, t.elapsed().as_secs_f64(), opts)
}

/// `A(p)`: ones on the diagonal, `0.25·p1` below it and `−0.25·p2` above.
pub fn robust_matrix(n: usize) -> Result<PPoly> {
    let mut terms = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            terms.push(match i.cmp(&j) {
                std::cmp::Ordering::Equal => Term::new(1.0).at(i, j),
                std::cmp::Ordering::Greater => Term::new(0.25).at(i, j).pow("p1", 1),
                std::cmp::Ordering::Less => Term::new(-0.25).at(i, j).pow("p2", 1),
            });
        }
    }
    PPoly::from_terms(n, n, &terms)
}

/// `P − εI` and `−Q·g − AᵀP − PA` SOS matrices, `Q` SOS, with `P` and `Q`
/// polynomial matrices over the monomials of degree at most 2 in `p`.
pub fn robust_program(n: usize) -> Result<SosProgram> {
    if n == 0 {
        return Err(Error::Argument("state dimension must be at least 1".into()));
    }
    let eps = 1e-4;
    let p = VarSet::new(["p1", "p2"]);
    let mut prog = SosProgram::new(p.clone());
    let z = full_basis(&p, 2);
    let pm = prog.polymatrixvar(&z, (n, n), QuadOption::None)?;
    prog.matrix_ineq(&pm.sub(&PPoly::identity(n, eps).to_dpoly())?)?;
    let q = prog.polymatrixvar(&z, (n, n), QuadOption::None)?;
    prog.matrix_ineq(&q)?;
    let g = poly(&[(1.0, &[]), (-1.0, &[("p1", 2)]), (-1.0, &[("p2", 2)])])?;
    let a = robust_matrix(n)?;
    let lyap = q
        .mul_poly(&g, Side::Right)?
        .neg()
        .sub(&pm.mul_poly(&a.transpose(), Side::Left)?)?
        .sub(&pm.mul_poly(&a, Side::Right)?)?;
    prog.matrix_ineq(&lyap)?;
    Ok(prog)
}

pub fn run_robust(n: usize, opts: &RunOptions) -> Result<Report> {
    let t = Instant::now();
    let prog = robust_program(n)?;
    finish(format!("robust n={n}"), &prog, t.elapsed().as_secs_f64(), opts)
}

/// State variables `y1..yn, z1..zn`.
pub fn localstab_vars(n: usize) -> Vec<String> {
    (1..=n).map(|j| format!("y{j}")).chain((1..=n).map(|j| format!("z{j}"))).collect()
}

/// Vector field of the oscillator chain, in the order of [`localstab_vars`].
pub fn localstab_field(n: usize) -> Result<Vec<PPoly>> {
    let y = |j: usize| format!("y{j}");
    let z = |j: usize| format!("z{j}");
    let mut f = Vec::with_capacity(2 * n);
    for i in 1..=n {
        f.push(poly(&[(-2.0, &[(&z(i), 1)])])?);
    }
    for j in 1..=n {
        let (yj, zj) = (y(j), z(j));
        let mut t: Vec<(f64, Vec<(&str, u32)>)> =
            vec![(0.8, vec![(&yj, 1)]), (10.0 * 1.2 * 1.2, vec![(&yj, 2), (&zj, 1)]), (-10.0 * 0.21, vec![(&zj, 1)])];
        let zn = z(j + 1);
        if j < n {
            t.push((-0.5, vec![(&zn, 1), (&yj, 1)]));
        }
        let t: Vec<(f64, &[(&str, u32)])> = t.iter().map(|(c, m)| (*c, m.as_slice())).collect();
        f.push(poly(&t)?);
    }
    Ok(f)
}

/// `−∇V·f − s·g` SOS with `V`, `s` SOS over the monomials of degree at most
/// 2 and `g = 0.25 − ‖x‖²`. There is no objective; the program is a
/// feasibility test.
pub fn localstab_program(n: usize) -> Result<SosProgram> {
    if n == 0 {
        return Err(Error::Argument("chain length must be at least 1".into()));
    }
    let names = localstab_vars(n);
    let x = VarSet::new(names.iter().cloned());
    let mut prog = SosProgram::new(x.clone());
    let z = full_basis(&x, 2);
    let v = prog.sosvar(&z)?;
    let f = localstab_field(n)?;
    let mut vdot = DPoly::zeros(1, 1);
    for (name, fi) in names.iter().zip(&f) {
        vdot = vdot.add(&v.diff(name)?.mul_poly(fi, Side::Right)?)?;
    }
    let mut g = PPoly::scalar(0.25);
    for name in &names {
        g = g.sub(&poly(&[(1.0, &[(name.as_str(), 2)])])?)?;
    }
    let s = prog.sosvar(&z)?;
    prog.sos_ineq(&vdot.neg().sub(&s.mul_poly(&g, Side::Right)?)?)?;
    Ok(prog)
}

pub fn run_localstab(n: usize, opts: &RunOptions) -> Result<Report> {
    let t = Instant::now();
    let prog = localstab_program(n)?;
    finish(format!("localstab n={n}"), &prog, t.elapsed().as_secs_f64(), opts)
}
