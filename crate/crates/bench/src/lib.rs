//! Shared fixtures for the criterion benches.

use lnn412_core::analysis::{RiEstimate, RiTable};
use lnn412_core::{DecoderMode, Simulator};

pub fn simulator(level: usize) -> Simulator {
    Simulator::new(level, DecoderMode::Literal).expect("level >= 1")
}

/// A level-3-sized table with a quadratic leading term.
pub fn sample_table() -> RiTable {
    let rows = (0..=21u64)
        .map(|i| RiEstimate::from_counts(i, 1_000_000, if i < 2 { 0 } else { i * i }))
        .collect();
    RiTable {
        level: 3,
        n: 1_740_432,
        rows,
    }
}
