//! Benchmark-only crate; see the `benches/` directory. Run with
//! `cargo bench -p rnewt-bench`.

pub use rnewt_core;
