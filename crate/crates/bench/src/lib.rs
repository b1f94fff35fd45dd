//! Benchmarks live in `benches/`; this library only pins shared inputs.

/// Prevalences exercised by every benchmark group.
pub const PREVALENCES: [f64; 4] = [0.001, 0.01, 0.05, 0.2];
