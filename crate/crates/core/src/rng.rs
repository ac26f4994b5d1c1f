//! Counter-based random substreams.
//!
//! Every Monte-Carlo trial draws from its own ChaCha stream keyed by
//! `(master_seed, domain, index)`, so the values a trial sees do not depend on
//! how many worker threads exist or in which order trials are scheduled.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Generator type used throughout the crate.
pub type StreamRng = ChaCha8Rng;

/// Named domains keep unrelated consumers of the same master seed apart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    Support,
    Beta,
    Matrix,
    Noise,
    Decoder,
    MutualInformation,
    Concentration,
    GConvergence,
    Simulation,
    Custom(u64),
}

impl Domain {
    fn tag(self) -> u64 {
        match self {
            Domain::Support => 1,
            Domain::Beta => 2,
            Domain::Matrix => 3,
            Domain::Noise => 4,
            Domain::Decoder => 5,
            Domain::MutualInformation => 6,
            Domain::Concentration => 7,
            Domain::GConvergence => 8,
            Domain::Simulation => 9,
            Domain::Custom(t) => 0x1000_0000 ^ t,
        }
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and an index.
pub fn derive_seed(parent: u64, domain: Domain, index: u64) -> u64 {
    mix64(mix64(parent ^ mix64(domain.tag())) ^ index)
}

/// Independent stream for `(master_seed, domain, index)`.
pub fn substream(master_seed: u64, domain: Domain, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(master_seed ^ mix64(domain.tag())));
    rng.set_stream(index);
    rng
}
