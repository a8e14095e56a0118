//! Benchmarks live in `benches/`; run `cargo bench -p parcel-forge-bench`.
