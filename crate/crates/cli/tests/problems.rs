use sosforge_cli::problems::{
    glb_program, localstab_field, localstab_program, robust_matrix, run_glb, run_localstab, run_robust, RunOptions,
};
use sosforge_core::sdp::read_sdpa;
use sosforge_core::Status;

fn no_solve() -> RunOptions {
    RunOptions { solve: false, ..RunOptions::default() }
}

#[test]
fn glb_degree_must_be_even() {
    assert!(glb_program(3, 12.0, false).is_err());
    assert!(glb_program(0, 12.0, false).is_err());
    assert!(glb_program(2, -1.0, false).is_err());
}

#[test]
fn glb_sizes() {
    let r = run_glb(2, 12.0, &no_solve()).unwrap();
    assert_eq!((r.nfree, r.blocks.clone(), r.n_eq), (1, vec![6, 6, 6, 10], 28));
    let r = run_glb(4, 12.0, &no_solve()).unwrap();
    assert_eq!((r.nfree, r.blocks.clone(), r.n_eq), (1, vec![15, 15, 15, 21], 66));
}

#[test]
fn glb_bound_improves_with_degree() {
    let opts = RunOptions::default();
    let g2 = run_glb(2, 12.0, &opts).unwrap().solution.unwrap();
    let g4 = run_glb(4, 12.0, &opts).unwrap().solution.unwrap();
    assert_eq!(g2.status, Status::Optimal);
    assert_eq!(g4.status, Status::Optimal);
    assert!(g4.objective >= g2.objective - 1e-6);
    // the minimum of f on the box is −19008 at (−12, −12)
    assert!(g2.objective <= -19008.0 + 1e-6);
    assert!(g4.objective <= -19008.0 + 1e-6);
    assert!(g2.objective > -19008.0 - 1e-3, "{}", g2.objective);
}

#[test]
fn robust_matrix_pattern() {
    let a = robust_matrix(3).unwrap();
    let x = [("p1".to_string(), 2.0), ("p2".to_string(), 4.0)].into_iter().collect();
    let v = a.eval(&x).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j {
                1.0
            } else if i > j {
                0.5
            } else {
                -1.0
            };
            assert_eq!(v[(i, j)], want, "({i}, {j})");
        }
    }
}

#[test]
fn robust_sizes() {
    for n in 1..=4 {
        let r = run_robust(n, &no_solve()).unwrap();
        assert_eq!(r.blocks, vec![3 * n, 3 * n, 6 * n], "n = {n}");
        assert_eq!(r.nfree, 2 * 6 * n * n);
    }
}

#[test]
fn robust_reports_a_status() {
    let r = run_robust(1, &RunOptions::default()).unwrap();
    assert!(r.solution.is_some());
}

/// n = 1: V and s over {1, y1, z1, y1², y1 z1, z1²}, Gram basis of degree
/// 3 in 2 variables, and one equality per monomial of degree at most 6.
#[test]
fn localstab_single_oscillator_hand_count() {
    let prog = localstab_program(1).unwrap();
    assert_eq!(prog.ivars().names(), ["y1", "z1"]);
    let r = run_localstab(1, &no_solve()).unwrap();
    assert_eq!(r.blocks, vec![6, 6, 10]);
    assert_eq!(r.nfree, 0);
    assert_eq!(r.n_eq, 28);
    assert_eq!(r.nvec, 36 + 36 + 100);
}

#[test]
fn localstab_field_values() {
    let f = localstab_field(2).unwrap();
    let x = [("y1", 0.5), ("y2", -1.0), ("z1", 2.0), ("z2", 0.25)];
    let x = x.iter().map(|(k, v)| (k.to_string(), *v)).collect();
    let v: Vec<f64> = f.iter().map(|p| p.eval(&x).unwrap()[(0, 0)]).collect();
    let (y1, y2, z1, z2) = (0.5, -1.0, 2.0, 0.25);
    let want = [
        -2.0 * z1,
        -2.0 * z2,
        0.8 * y1 + 10.0 * (1.44 * y1 * y1 - 0.21) * z1 - 0.5 * z2 * y1,
        0.8 * y2 + 10.0 * (1.44 * y2 * y2 - 0.21) * z2,
    ];
    for (a, b) in v.iter().zip(want) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn oversized_problems_are_exported() {
    let r = run_localstab(3, &RunOptions::default()).unwrap();
    assert!(r.solution.is_none());
    let path = r.exported.expect("exported");
    let text = std::fs::read_to_string(&path).unwrap();
    let back = read_sdpa(&text).unwrap();
    assert_eq!(back.n_eq(), r.n_eq);
    std::fs::remove_file(path).ok();
}

#[test]
fn explicit_export_path() {
    let path = std::env::temp_dir().join(format!("sosforge-test-{}.dat-s", std::process::id()));
    let opts = RunOptions { solve: false, export: Some(path.clone()), ..RunOptions::default() };
    let r = run_glb(2, 12.0, &opts).unwrap();
    assert_eq!(r.exported.as_deref(), Some(path.as_path()));
    let back = read_sdpa(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(back.blocks(), [6, 6, 6, 10]);
    std::fs::remove_file(path).ok();
}
