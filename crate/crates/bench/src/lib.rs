//! Criterion benchmarks for the convolution engine, the generator and the
//! geometry pipeline; see `benches/`.
