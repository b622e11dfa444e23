//! Criterion benchmarks for the estimator, learners and partition-function estimates; see `benches/`.
