use sosforge_cli::bench::{run_bench, write_csv, Instance, Op, Representation};

#[test]
fn records_and_audit() {
    for op in Op::ALL {
        let rec = run_bench(op, &[0, 3, 8], 1, 11).unwrap();
        assert_eq!(rec.len(), 6, "{op}");
        for r in &rec {
            assert!(r.wall_time >= 0.0);
            assert_eq!(r.op, op.name());
        }
    }
}

#[test]
fn basis_rows_follow_the_accounting() {
    let qs = [0, 1, 2, 10, 50];
    for r in run_bench(Op::Mul, &qs, 1, 3).unwrap() {
        let want = match r.representation {
            Representation::Dpvar => 30,
            Representation::Pvar => 15 * (r.q + 1) + 15,
        };
        assert_eq!(r.basis_rows, want, "q = {}", r.q);
    }
    for r in run_bench(Op::Int, &qs, 1, 3).unwrap() {
        let want = match r.representation {
            Representation::Dpvar => 15,
            Representation::Pvar => 15 * (r.q + 1),
        };
        assert_eq!(r.basis_rows, want, "q = {}", r.q);
    }
}

#[test]
fn q_list_must_ascend() {
    assert!(run_bench(Op::Add, &[10, 5], 1, 0).is_err());
}

#[test]
fn half_the_dvars_are_shared() {
    let inst = Instance::new(10, 0).unwrap();
    let sum = inst.s1.add(&inst.s2).unwrap();
    assert_eq!(sum.ndvars(), 15);
    let odd = Instance::new(7, 0).unwrap();
    assert_eq!(odd.s1.add(&odd.s2).unwrap().ndvars(), 7 + 4);
}

#[test]
fn no_dvars_both_representations_are_close() {
    for op in Op::ALL {
        let rec = run_bench(op, &[0], 21, 5).unwrap();
        let (a, b) = (rec[0].wall_time, rec[1].wall_time);
        assert!(a <= 5.0 * b && b <= 5.0 * a, "{op}: dpvar {a:e} s, pvar {b:e} s");
    }
}

#[test]
fn csv_schema() {
    let rec = run_bench(Op::Diff, &[0, 2], 1, 1).unwrap();
    let mut buf = Vec::new();
    write_csv(&rec, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "op,representation,q,wall_time,peak_nnz,basis_rows");
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("diff,dpvar,0,"));
    assert!(lines[2].starts_with("diff,pvar,0,"));

    let mut empty = Vec::new();
    write_csv(&[], &mut empty).unwrap();
    assert_eq!(String::from_utf8(empty).unwrap(), "op,representation,q,wall_time,peak_nnz,basis_rows\n");
}
