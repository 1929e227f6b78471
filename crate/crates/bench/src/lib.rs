//! Criterion benchmarks for the sampler and oracle; see `benches/`.
