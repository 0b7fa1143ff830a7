//! Criterion benchmarks for the lab live in `benches/`.
