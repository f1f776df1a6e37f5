//! Criterion benchmarks for the coder and the Monte-Carlo trials; see `benches/`.
