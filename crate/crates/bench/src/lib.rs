//! Fixtures for the criterion benchmarks in `benches/`.

use sosforge_cli::bench::Instance;
use sosforge_core::FlatPoly;

/// Fixed seed so every run times the same instances.
pub const SEED: u64 = 2021;

pub struct Fixture {
    pub inst: Instance,
    pub f1: FlatPoly,
    pub f2: FlatPoly,
}

pub fn fixture(q: usize) -> Fixture {
    let inst = Instance::new(q, SEED).expect("benchmark instance");
    let f1 = FlatPoly::flatten(&inst.s1);
    let f2 = FlatPoly::flatten(&inst.s2);
    Fixture { inst, f1, f2 }
}
