//! Criterion benchmarks for `projcorrect`; run with `cargo bench -p projcorrect-bench`.
