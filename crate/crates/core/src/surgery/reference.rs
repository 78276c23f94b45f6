use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::digits::DigitStream;
use crate::error::{Error, Result};
use crate::sequences::BasicSequence;

/// A reference stream: digit `i` uniform on `{0, ..., q_i - 1}`, drawn
/// independently from a ChaCha8 generator seeded with `seed`.
pub fn make_reference(seq: &BasicSequence, seed: u64, n: usize) -> DigitStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bases = seq.bases(n);
    let digits = bases.iter().map(|&q| rng.gen_range(0..q)).collect();
    DigitStream::from_parts(seq.clone(), bases, digits)
}

/// Where the seed of the reference stream `w_m` comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SeedSource {
    /// Seeds derived from one master seed.
    Derived(u64),
    /// Only the listed `m` have seeds.
    Explicit(BTreeMap<u64, u64>),
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl SeedSource {
    pub fn seed_for(&self, m: u64) -> Result<u64> {
        match self {
            SeedSource::Derived(master) => Ok(splitmix64(master ^ splitmix64(m))),
            SeedSource::Explicit(map) => map
                .get(&m)
                .copied()
                .ok_or_else(|| Error::Config(format!("no seed supplied for reference stream w_{m}"))),
        }
    }
}
