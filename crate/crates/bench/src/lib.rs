//! Criterion benchmarks for `biphoton-core`; see `benches/core.rs`.
