//! Criterion benchmarks for key generation, identity concealment and full
//! sessions live under `benches/`.
