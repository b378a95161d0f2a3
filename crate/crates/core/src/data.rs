//! Row-major sample matrices with per-row regime labels.

use crate::error::{Error, Result};
use crate::graph::InterventionSpec;

/// `n x d` samples. CausalRegNet output holds non-negative integers stored as
/// `f64`; the baselines fill the same container with real values.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    names: Vec<String>,
    values: Vec<f64>,
    regimes: Vec<InterventionSpec>,
    /// Index into `regimes` for every row.
    row_regime: Vec<usize>,
}

impl SampleMatrix {
    /// A matrix whose rows all share one regime.
    pub fn from_values(names: Vec<String>, values: Vec<f64>, regime: InterventionSpec) -> Result<Self> {
        let d = names.len();
        if d == 0 && !values.is_empty() {
            return Err(Error::invalid("values supplied for zero columns"));
        }
        if d > 0 && !values.len().is_multiple_of(d) {
            return Err(Error::invalid(format!(
                "{} values do not fill rows of width {d}",
                values.len()
            )));
        }
        let n = values.len().checked_div(d).unwrap_or(0);
        Ok(Self {
            names,
            values,
            regimes: vec![regime],
            row_regime: vec![0; n],
        })
    }

    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        if names.len() != columns.len() {
            return Err(Error::invalid("column count differs from name count"));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::invalid("columns have unequal lengths"));
        }
        let d = columns.len();
        let mut values = vec![0.0; n * d];
        for (j, col) in columns.iter().enumerate() {
            for (r, &v) in col.iter().enumerate() {
                values[r * d + j] = v;
            }
        }
        Self::from_values(names, values, InterventionSpec::observational())
    }

    /// Stacks matrices with identical column names, keeping each row's regime.
    pub fn concat(parts: Vec<SampleMatrix>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut out = iter
            .next()
            .ok_or_else(|| Error::invalid("nothing to concatenate"))?;
        for part in iter {
            if part.names != out.names {
                return Err(Error::invalid("cannot concatenate matrices with different columns"));
            }
            let offset = out.regimes.len();
            out.regimes.extend(part.regimes);
            out.row_regime.extend(part.row_regime.iter().map(|r| r + offset));
            out.values.extend(part.values);
        }
        Ok(out)
    }

    pub(crate) fn with_row_regimes(
        names: Vec<String>,
        values: Vec<f64>,
        regimes: Vec<InterventionSpec>,
        row_regime: Vec<usize>,
    ) -> Result<Self> {
        let d = names.len();
        if d == 0 || values.len() != row_regime.len() * d {
            return Err(Error::invalid("matrix shape does not match row labels"));
        }
        if row_regime.iter().any(|&r| r >= regimes.len()) {
            return Err(Error::invalid("row references unknown regime"));
        }
        Ok(Self {
            names,
            values,
            regimes,
            row_regime,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.row_regime.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let d = self.n_cols();
        &self.values[row * d..(row + 1) * d]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.values
            .iter()
            .skip(col)
            .step_by(self.n_cols())
            .copied()
            .collect()
    }

    pub fn column_by_name(&self, name: &str) -> Option<Vec<f64>> {
        self.names.iter().position(|n| n == name).map(|j| self.column(j))
    }

    pub fn column_mean(&self, col: usize) -> f64 {
        let n = self.n_rows();
        if n == 0 {
            return f64::NAN;
        }
        self.values.iter().skip(col).step_by(self.n_cols()).sum::<f64>() / n as f64
    }

    pub fn regime(&self, row: usize) -> &InterventionSpec {
        &self.regimes[self.row_regime[row]]
    }

    /// Renders the `regime` CSV field of a row.
    pub fn regime_label(&self, row: usize) -> String {
        self.regime(row).label(&self.names)
    }

    /// True when every entry is a non-negative integer.
    pub fn is_count_data(&self) -> bool {
        self.values.iter().all(|&v| v >= 0.0 && v.fract() == 0.0)
    }
}
