//! Criterion benchmarks for the plateau crates live under `benches/`.
