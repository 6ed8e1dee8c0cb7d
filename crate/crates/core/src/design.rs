//! Numeric covariate matrix aligned with durations and event flags.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Continuous,
    Indicator,
    Interaction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub name: String,
    pub kind: ColumnKind,
    /// How the column was derived from the record fields.
    pub source: String,
}

impl ColumnMeta {
    pub fn new(name: impl Into<String>, kind: ColumnKind, source: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind,
            source: source.into(),
        }
    }

    pub fn continuous(name: impl Into<String>) -> Self {
        Self::new(name, ColumnKind::Continuous, "")
    }
}

/// `n x k` covariates (row-major), one row per record, with the outcome
/// carried alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    columns: Vec<ColumnMeta>,
    values: Vec<f64>,
    durations: Vec<f64>,
    events: Vec<bool>,
    weeks_since_first: Option<Vec<f64>>,
}

impl DesignMatrix {
    pub fn new(
        columns: Vec<ColumnMeta>,
        rows: Vec<Vec<f64>>,
        durations: Vec<f64>,
        events: Vec<bool>,
    ) -> Result<Self> {
        let k = columns.len();
        let mut values = Vec::with_capacity(rows.len() * k);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::invalid(format!(
                    "row {i} has {} values but the design has {k} columns",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        Self::from_parts(columns, values, durations, events, None)
    }

    pub(crate) fn from_parts(
        columns: Vec<ColumnMeta>,
        values: Vec<f64>,
        durations: Vec<f64>,
        events: Vec<bool>,
        weeks_since_first: Option<Vec<f64>>,
    ) -> Result<Self> {
        let n = durations.len();
        let k = columns.len();
        if n == 0 {
            return Err(Error::EmptyInput("design has no rows"));
        }
        if events.len() != n || values.len() != n * k {
            return Err(Error::invalid(
                "design parts disagree on the number of rows",
            ));
        }
        if let Some(w) = &weeks_since_first {
            if w.len() != n {
                return Err(Error::invalid("weeks_since_first has the wrong length"));
            }
        }
        if durations.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid("durations must be finite and positive"));
        }
        for (a, col) in columns.iter().enumerate() {
            if columns[..a].iter().any(|c| c.name == col.name) {
                return Err(Error::invalid(format!(
                    "duplicate column name `{}`",
                    col.name
                )));
            }
        }
        let d = Self {
            columns,
            values,
            durations,
            events,
            weeks_since_first,
        };
        for j in 0..k {
            let col = &d.columns[j];
            for i in 0..n {
                let v = d.value(i, j);
                if !v.is_finite() {
                    return Err(Error::invalid(format!(
                        "column `{}` row {i} is not finite",
                        col.name
                    )));
                }
                if col.kind == ColumnKind::Indicator && v != 0.0 && v != 1.0 {
                    return Err(Error::invalid(format!(
                        "indicator column `{}` has value {v} in row {i}",
                        col.name
                    )));
                }
            }
        }
        Ok(d)
    }

    pub fn n_rows(&self) -> usize {
        self.durations.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[ColumnMeta] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.n_cols();
        &self.values[i * k..(i + 1) * k]
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols() + j]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows()).map(|i| self.value(i, j)).collect()
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }

    pub fn n_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn weeks_since_first(&self) -> Option<&[f64]> {
        self.weeks_since_first.as_deref()
    }

    pub fn with_weeks_since_first(mut self, weeks: Vec<f64>) -> Result<Self> {
        if weeks.len() != self.n_rows() || weeks.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid(
                "weeks_since_first must be finite with one value per row",
            ));
        }
        self.weeks_since_first = Some(weeks);
        Ok(self)
    }

    /// Same covariates, different event flags (used for cause-specific
    /// recensoring).
    pub fn with_events(&self, events: Vec<bool>) -> Result<Self> {
        if events.len() != self.n_rows() {
            return Err(Error::invalid("event vector has the wrong length"));
        }
        let mut d = self.clone();
        d.events = events;
        Ok(d)
    }

    /// Applies `f` to every value of column `j`. Indicator columns lose their
    /// indicator kind unless the map keeps them in {0, 1}.
    pub fn map_column(&self, j: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        if j >= self.n_cols() {
            return Err(Error::invalid(format!("column {j} out of range")));
        }
        let mut columns = self.columns.clone();
        let k = self.n_cols();
        let mut values = self.values.clone();
        for i in 0..self.n_rows() {
            values[i * k + j] = f(values[i * k + j]);
        }
        if columns[j].kind == ColumnKind::Indicator
            && (0..self.n_rows()).any(|i| values[i * k + j] != 0.0 && values[i * k + j] != 1.0)
        {
            columns[j].kind = ColumnKind::Continuous;
        }
        Self::from_parts(
            columns,
            values,
            self.durations.clone(),
            self.events.clone(),
            self.weeks_since_first.clone(),
        )
    }

    /// Appends one column; its name must be new.
    pub fn append_column(&self, meta: ColumnMeta, column: Vec<f64>) -> Result<Self> {
        if column.len() != self.n_rows() {
            return Err(Error::invalid(format!(
                "column `{}` has {} values for {} rows",
                meta.name,
                column.len(),
                self.n_rows()
            )));
        }
        let k = self.n_cols();
        let mut values = Vec::with_capacity(self.values.len() + self.n_rows());
        for (i, v) in column.into_iter().enumerate() {
            values.extend_from_slice(&self.values[i * k..(i + 1) * k]);
            values.push(v);
        }
        let mut columns = self.columns.clone();
        columns.push(meta);
        Self::from_parts(
            columns,
            values,
            self.durations.clone(),
            self.events.clone(),
            self.weeks_since_first.clone(),
        )
    }

    /// Names of columns that take a single value over all rows.
    pub fn constant_columns(&self) -> Vec<String> {
        (0..self.n_cols())
            .filter(|&j| {
                let first = self.value(0, j);
                (1..self.n_rows()).all(|i| self.value(i, j) == first)
            })
            .map(|j| self.columns[j].name.clone())
            .collect()
    }

    /// Derivation notes worth printing under a table.
    pub fn notes(&self) -> Vec<String> {
        self.columns
            .iter()
            .filter(|c| !c.source.is_empty())
            .map(|c| format!("{}: {}", c.name, c.source))
            .collect()
    }
}
