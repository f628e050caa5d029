//! Sweeps with cells spread over the rayon pool.

use rayon::prelude::*;

use nhqb_core::coupling::CoilGeometry;
use nhqb_core::dynamics::IntegrationConfig;
use nhqb_core::scenarios::{assemble_sweep, sweep_cell, sweep_kappas, SweepGrid, SweepResult};

/// Same result as [`nhqb_core::scenarios::run_sweep`], bit for bit: each cell
/// is computed independently and collected back in row-major order.
pub fn run_sweep_parallel(grid: &SweepGrid, geom: &CoilGeometry, cfg: &IntegrationConfig) -> nhqb_core::Result<SweepResult> {
    cfg.validate()?;
    let kappas = sweep_kappas(grid, geom)?;
    let ng = grid.gamma_values.len();
    let cells = (0..grid.cells())
        .into_par_iter()
        .map(|idx| sweep_cell(kappas[idx / ng], grid.gamma_values[idx % ng], grid.gain_family, cfg))
        .collect();
    assemble_sweep(grid, geom, kappas, cells)
}
