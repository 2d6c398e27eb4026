//! Experiment plumbing: seeded sweeps, scaling fits and SVG plots.

mod fit;
mod plot;
mod sweep;

pub use fit::{fit_rows, fit_scaling, FitModel, FitReport};
pub use plot::{emit_plot, PlotKind, PlotOptions};
pub use sweep::{
    derived_seed, run_sweep, run_sweep_serial, write_sweep_csv, ExperimentSpec, Measure, Side, SweepRow, SWEEP_HEADER,
};

use crate::error::{Error, Result};

/// A CSV file held as strings, addressed by column name.
#[derive(Clone, Debug, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(text.as_bytes());
        let headers = rdr.headers()?.iter().map(str::to_owned).collect();
        let rows = rdr
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_owned).collect()))
            .collect::<Result<_, _>>()?;
        Ok(Table { headers, rows })
    }

    pub fn column(&self, name: &str) -> Result<usize> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    }

    pub fn has(&self, name: &str) -> bool {
        self.headers.iter().any(|h| h == name)
    }

    /// Numeric value of `col` in `row`; `None` when the cell is empty.
    pub fn number(&self, row: usize, col: usize) -> Result<Option<f64>> {
        let cell = self.rows[row][col].trim();
        if cell.is_empty() {
            return Ok(None);
        }
        cell.parse::<f64>()
            .map(Some)
            .map_err(|_| Error::Schema(format!("row {}: `{cell}` is not a number", row + 1)))
    }
}
