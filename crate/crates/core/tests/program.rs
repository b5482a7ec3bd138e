mod oracle;

use std::collections::HashMap;

use oracle::*;
use sosforge_core::dpvar::Term;
use sosforge_core::monomial::full_basis;
use sosforge_core::{DPoly, PPoly, Side, SosProgram, VarSet};

fn poly(terms: &[(f64, u32, u32)]) -> PPoly {
    let t: Vec<Term> = terms.iter().map(|&(c, a, b)| Term::new(c).pow("x1", a).pow("x2", b)).collect();
    PPoly::from_terms(1, 1, &t).unwrap()
}

/// GLB data scaled to the box `[−h, h]²`, with multipliers of degree `d`.
fn glb_program(h: f64, d: u32) -> SosProgram {
    let f = poly(&[(1.0, 4, 0), (1.0, 0, 4), (-2.0, 3, 1), (-3.0, 2, 2), (150.0, 2, 0), (150.0, 0, 2)]);
    let h2 = h * h;
    let g = [
        poly(&[(h2, 0, 0), (-1.0, 2, 0)]),
        poly(&[(h2, 0, 0), (-1.0, 0, 2)]),
        poly(&[(2.0 * h2, 0, 0), (-1.0, 2, 0), (-1.0, 0, 2)]),
    ];
    let x = VarSet::new(["x1", "x2"]);
    let mut prog = SosProgram::new(x.clone());
    let gam = prog.declare_decvar(&["gam"]).unwrap().remove(0);
    let z = full_basis(&x, d);
    let mut expr = f.to_dpoly().sub(&gam).unwrap();
    for gi in &g {
        let s = prog.sosvar(&z).unwrap();
        expr = expr.sub(&s.mul_poly(gi, Side::Right).unwrap()).unwrap();
    }
    prog.sos_ineq(&expr).unwrap();
    prog.set_objective(&[("gam", 1.0)], sosforge_core::Sense::Max).unwrap();
    prog
}

#[test]
fn extraction_soundness() {
    run_many(100, 21, check_extraction).unwrap();
}

#[test]
fn hand_certificate() {
    check_hand_certificate().unwrap();
}

#[test]
fn quadvar_offsets() {
    run_many(20, 22, check_quadvar).unwrap();
}

#[test]
fn glb_d2_block_structure() {
    let sdp = glb_program(12.0, 2).assemble().unwrap();
    assert_eq!(sdp.nfree(), 1);
    assert_eq!(sdp.blocks(), [6, 6, 6, 10]);
}

type Row = (Vec<(usize, f64)>, f64);

fn sorted_rows(mut rows: Vec<Row>) -> Vec<Row> {
    for r in rows.iter_mut() {
        r.0.sort_by_key(|e| e.0);
    }
    rows.sort_by(|a, b| format!("{a:?}").cmp(&format!("{b:?}")));
    rows
}

/// Box [−1, 1], linear multiplier basis: every coefficient equation written
/// out by hand from the monomial products.
#[test]
fn glb_reduced_matches_hand_assembly() {
    let sdp = glb_program(1.0, 1).assemble().unwrap();
    assert_eq!(sdp.blocks(), [3, 3, 3, 6]);

    // monomials as (deg x1, deg x2); bases in canonical order
    let z1 = [(0, 0), (0, 1), (1, 0)];
    let z2 = [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)];
    let f = [((4, 0), 1.0), ((0, 4), 1.0), ((3, 1), -2.0), ((2, 2), -3.0), ((2, 0), 150.0), ((0, 2), 150.0)];
    let g: [Vec<((u32, u32), f64)>; 3] = [
        vec![((0, 0), 1.0), ((2, 0), -1.0)],
        vec![((0, 0), 1.0), ((0, 2), -1.0)],
        vec![((0, 0), 2.0), ((2, 0), -1.0), ((0, 2), -1.0)],
    ];
    // column of Q[s, t] in block k: upper position t·n + s for s ≤ t
    let col = |off: usize, n: usize, s: usize, t: usize| off + s.max(t) * n + s.min(t);
    let mut rows: HashMap<(u32, u32), HashMap<usize, f64>> = HashMap::new();
    let mut consts: HashMap<(u32, u32), f64> = HashMap::new();
    for &(m, c) in &f {
        *consts.entry(m).or_default() += c;
    }
    rows.entry((0, 0)).or_default().insert(0, -1.0);
    for (k, gk) in g.iter().enumerate() {
        let off = 1 + 9 * k;
        for s in 0..3 {
            for t in 0..3 {
                for &((a, b), c) in gk {
                    let m = (z1[s].0 + z1[t].0 + a, z1[s].1 + z1[t].1 + b);
                    *rows.entry(m).or_default().entry(col(off, 3, s, t)).or_default() -= c;
                }
            }
        }
    }
    for s in 0..6 {
        for t in 0..6 {
            let m = (z2[s].0 + z2[t].0, z2[s].1 + z2[t].1);
            *rows.entry(m).or_default().entry(col(28, 6, s, t)).or_default() -= 1.0;
        }
    }
    for m in consts.keys() {
        rows.entry(*m).or_default();
    }
    let hand: Vec<Row> = rows
        .into_iter()
        .map(|(m, r)| (r.into_iter().filter(|e| e.1 != 0.0).collect(), -consts.get(&m).copied().unwrap_or(0.0)))
        .collect();

    let mut got: Vec<Row> = vec![(Vec::new(), 0.0); sdp.n_eq()];
    for (i, j, v) in sdp.a().triplets() {
        if i < sdp.n_eq() {
            got[i].0.push((j, v));
        }
    }
    for (i, r) in got.iter_mut().enumerate() {
        r.1 = sdp.b()[i];
    }
    assert_eq!(sorted_rows(got), sorted_rows(hand));
}

#[test]
fn gram_variable_evaluates_nonnegative() {
    use rand::Rng;
    let mut rng = rng(23);
    let x = VarSet::new(["x1", "x2"]);
    let mut prog = SosProgram::new(x.clone());
    let s = prog.sosvar(&full_basis(&x, 2)).unwrap();
    let block = prog.blocks()[0].clone();
    for _ in 0..20 {
        let l = nalgebra::DMatrix::from_fn(6, 6, |_, _| rng.gen_range(-1.0..1.0));
        let q = &l * l.transpose();
        let mut xi = HashMap::new();
        for c in 0..6 {
            for r in 0..=c {
                xi.insert(prog.dvar_names()[block.entry(r, c)].clone(), q[(r, c)]);
            }
        }
        for (pt, _) in points(&mut rng, 5) {
            assert!(s.eval(&pt, &xi).unwrap()[(0, 0)] >= -1e-12);
        }
    }
}

#[test]
fn odd_degree_constraint_still_emitted() {
    let mut prog = SosProgram::new(VarSet::new(["x1"]));
    let d = DPoly::from_terms(1, 1, &[Term::new(1.0).pow("x1", 3)]).unwrap();
    prog.sos_ineq(&d).unwrap();
    assert_eq!(prog.equalities().len(), 1);
    assert_eq!(prog.blocks()[0].side, 3);
}
