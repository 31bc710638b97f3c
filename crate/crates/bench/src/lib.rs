//! Fixtures shared by the benchmarks.

use std::path::Path;

use vepc_core::experiments::Scenario;
use vepc_core::PlacementProblem;

/// The bundled metro scenario at flow seed 1.
pub fn metro_problem() -> PlacementProblem {
    Scenario::metro_default().instantiate(1).expect("bundled scenario instantiates")
}

/// The two-chain scenario under `crates/core/data/tiny`.
pub fn tiny_problem() -> PlacementProblem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/tiny/scenario.json");
    let s = Scenario::load(path).expect("tiny scenario loads");
    s.instantiate(s.seed).expect("tiny scenario instantiates")
}
