//! Benchmarks for the quadrature, profile and solver hot paths; see `benches/`.
