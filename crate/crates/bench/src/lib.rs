//! Criterion benchmarks for the core model; see `benches/`.
