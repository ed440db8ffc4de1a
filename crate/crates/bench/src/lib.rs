//! Criterion benchmarks for the sweep pipeline; see `benches/`.
