//! Criterion benchmarks for the `hydrofeat` crate; see `benches/`.
