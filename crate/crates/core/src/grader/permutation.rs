use sha2::{Digest, Sha256};

use crate::corpus::CefrBand;

use super::{AspectId, GraderError};

/// Order in which an aspect's descriptors are shown: `order[i]` is the band
/// presented under option letter `i` (A, B, …).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DescriptorPermutation {
    pub aspect: AspectId,
    pub order: Vec<CefrBand>,
    pub seed: u64,
}

impl DescriptorPermutation {
    pub fn identity(aspect: AspectId) -> DescriptorPermutation {
        DescriptorPermutation {
            aspect,
            order: aspect.levels().to_vec(),
            seed: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

pub fn option_letter(index: usize) -> char {
    (b'A' + index as u8) as char
}

/// Counter-based generator: output `i` is a fixed mixing function of
/// `(key, i)`, so draws depend only on the key and their position.
struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    fn next_u64(&mut self) -> u64 {
        self.counter += 1;
        let mut z = self.key ^ self.counter.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `0..bound` by rejection.
    fn below(&mut self, bound: u64) -> u64 {
        let zone = u64::MAX - u64::MAX % bound;
        loop {
            let x = self.next_u64();
            if x < zone {
                return x % bound;
            }
        }
    }
}

fn stream_key(seed: u64, essay_id: &str, aspect: AspectId) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update([0x1f]);
    h.update(essay_id.as_bytes());
    h.update([0x1f]);
    h.update(aspect.key().as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Fisher–Yates shuffle of the aspect's levels keyed on `(seed, essay, aspect)`.
pub fn shuffle_descriptors(essay_id: &str, aspect: AspectId, seed: u64) -> DescriptorPermutation {
    let mut rng = CounterRng {
        key: stream_key(seed, essay_id, aspect),
        counter: 0,
    };
    let mut order = aspect.levels().to_vec();
    for i in (1..order.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }
    DescriptorPermutation { aspect, order, seed }
}

pub fn map_option_to_level(index: usize, permutation: &DescriptorPermutation) -> Result<CefrBand, GraderError> {
    permutation
        .order
        .get(index)
        .copied()
        .ok_or(GraderError::IndexOutOfRange {
            index,
            len: permutation.len(),
        })
}
