//! Discourse word-embedding association test.
//!
//! Target words (gendered discourse words) are swapped between the feminine
//! and masculine lists inside short transcript segments, and the change in
//! summed cosine similarity to the attribute words for women and men tells
//! which concept the segment moved toward.

mod movement;
mod sampling;
mod sweep;
mod swap;
mod wordlists;

pub use movement::{
    movement_deltas, update_counters, AttributeEmbeddings, CounterOutcome, MovementDelta, Semantics,
};
pub use sampling::{build_sample_set, build_sample_sets, extract_segments, GenderSet, SampleSets};
pub use sweep::{run_sweep, DweatCell, DweatReport, SeedCounts, SegmentError, SweepConfig};
pub use swap::{swap_words, SegmentPair, SwapOutcome};
pub use wordlists::{resolve_overlap, WordLists};

use sha2::{Digest, Sha256};

/// Derives an independent sub-seed from a base seed and a label path.
pub(crate) fn derive_seed(base: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    for p in parts {
        h.update([0u8]);
        h.update(p.as_bytes());
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}
