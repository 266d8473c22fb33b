//! Benchmarks (`benches/`) and the acceptance harness (`tests/acceptance.rs`); no library code.
