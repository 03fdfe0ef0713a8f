//! Benchmark fixtures.

use layercake_core::generate::{random_instance, InstanceShape};
use layercake_core::valuation::Instance;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded random instance with four density steps per layer.
pub fn instance(agents: usize, layers: usize, seed: u64) -> Instance {
    let shape = InstanceShape { agents, layers, segments: 4, max_density: 5 };
    random_instance(&mut ChaCha8Rng::seed_from_u64(seed), &shape).expect("valid shape")
}
