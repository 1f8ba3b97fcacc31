//! Criterion benchmarks for the `coilbed` core; see `benches/`.
