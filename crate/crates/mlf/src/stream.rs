//! Counter-based random streams.
//!
//! Every source of randomness in the engine is a ChaCha stream addressed by
//! `(seed, StreamId)`. Streams are independent of the order in which other
//! streams are consumed, so e.g. layer initialization does not depend on how
//! many pool points were drawn earlier in the run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// Addresses one independent random stream for a given master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamId {
    /// Weight initialization for one layer of the level-k network (level 0 = standalone nets).
    Init { level: u32, layer: u32 },
    /// Uniform interior residual points for level 1.
    UniformInterior,
    /// Boundary points for one boundary condition group (fixed across levels).
    Boundary { group: u32 },
    /// Candidate pool redrawn before sampling the points of `level`.
    Pool { level: u32 },
    /// Categorical draws that select the residual points of `level`.
    Draw { level: u32 },
    /// Random test sets (used when the test spec is not a grid).
    TestSet,
    /// Scratch streams for self-checks and property harnesses.
    Check { tag: u32 },
}

impl StreamId {
    fn encode(self) -> u64 {
        match self {
            StreamId::Init { level, layer } => {
                (1 << 56) | ((level as u64) << 24) | layer as u64
            }
            StreamId::UniformInterior => 2 << 56,
            StreamId::Boundary { group } => (3 << 56) | group as u64,
            StreamId::Pool { level } => (4 << 56) | level as u64,
            StreamId::Draw { level } => (5 << 56) | level as u64,
            StreamId::TestSet => 6 << 56,
            StreamId::Check { tag } => (7 << 56) | tag as u64,
        }
    }
}

/// Opens the stream `(seed, id)`. The same pair always yields the same sequence.
pub fn stream(seed: u64, id: StreamId) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(id.encode());
    rng
}

/// Uniform draw in `[lo, hi)`.
pub fn uniform(rng: &mut ChaCha12Rng, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.gen::<f64>()
}
