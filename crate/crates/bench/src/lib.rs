//! Shared inputs for the benchmarks in `benches/`.

use slores::{geometry_at_lambda_max, synthesize, Dataset, Result, ScreeningGeometry};

/// A sparse synthetic problem and its geometry at λ_max.
pub fn problem(m: usize, p: usize, seed: u64) -> Result<(Dataset, ScreeningGeometry)> {
    let ds = synthesize(m, p, 0.02, 0.5, seed)?;
    let geom = geometry_at_lambda_max(&ds)?;
    Ok((ds, geom))
}
