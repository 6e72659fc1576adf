//! Criterion benchmarks for `bhwave-core`; run with `cargo bench -p bhwave-bench`.
