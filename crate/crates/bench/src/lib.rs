//! Shared fixtures for the benchmarks under `benches/`.

pub use holistic::{construct, GridField, MacroGrid, ModelSpec, Truncation};

/// A smooth odd field on the `m x m` grid over `[0, pi]^2`.
pub fn odd_field(m: usize, amplitude: f64) -> GridField {
    let grid = MacroGrid::odd_square(m).expect("grid size");
    GridField::from_fn(grid, |x, y| amplitude * x.sin() * y.sin() + 0.1 * (2.0 * x).sin() * y.sin())
}
