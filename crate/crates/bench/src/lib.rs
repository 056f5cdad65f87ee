//! Fixtures shared by the benchmarks in `benches/`.

use tdfinite::verify::{generate_instance, GeneratorConfig};
use tdfinite::{Instance, OptimalStoppingProblem};

/// A generated instance with exactly `n` states and `d` features.
pub fn instance(n: usize, d: usize, seed: u64) -> (Instance, OptimalStoppingProblem, Instance) {
    let cfg = GeneratorConfig {
        n_min: n,
        n_max: n,
        d_max: d,
        ..GeneratorConfig::default()
    };
    // The generator draws d uniformly up to d_max; retry indices until it hits d.
    (0..)
        .map(|i| generate_instance(&cfg, seed, i).expect("generator succeeds"))
        .find(|g| g.instance.d() == d)
        .map(|g| (g.instance, g.stopping, g.stopping_instance))
        .unwrap()
}
