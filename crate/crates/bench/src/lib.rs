//! Benchmarks for the projection oracles and the solver live under `benches/`.
