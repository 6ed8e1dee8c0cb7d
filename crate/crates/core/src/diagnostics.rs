//! Schoenfeld residuals and the Grambsch-Therneau test of proportional
//! hazards, plus the time-interaction columns used when a covariate fails it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::cox::{failure_residuals, ChiSquareTest, CoxFit};
use crate::design::{ColumnKind, ColumnMeta, DesignMatrix};
use crate::error::{Error, Result};
use crate::km::kaplan_meier;
use crate::records::RiskSetIndex;
use crate::special::chi2_sf;

/// One row per failure, ordered by event time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualMatrix {
    pub covariate_names: Vec<String>,
    pub event_times: Vec<f64>,
    /// Design row of each failure.
    pub records: Vec<usize>,
    pub residuals: Vec<Vec<f64>>,
    pub scaled: Option<Vec<Vec<f64>>>,
    /// Pooled Kaplan-Meier survival just before each event time.
    pub survival_before: Vec<f64>,
}

impl ResidualMatrix {
    pub fn n_events(&self) -> usize {
        self.event_times.len()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let k = self.covariate_names.len();
        let mut s = vec![0.0; k];
        for row in &self.residuals {
            for (a, v) in s.iter_mut().zip(row) {
                *a += v;
            }
        }
        s
    }
}

fn check_fit(design: &DesignMatrix, fit: &CoxFit) -> Result<()> {
    if !fit.converged {
        return Err(Error::NotConverged);
    }
    if fit.covariates != design.column_names() {
        return Err(Error::invalid("fit and design have different covariates"));
    }
    Ok(())
}

/// `x_k - a_k` for every failure `k`, with `a_k` the `exp(x beta)`-weighted
/// covariate mean over the risk set at its event time. Under Efron ties the
/// weighted mean is averaged over the tie fractions, which keeps the column
/// sums equal to the score.
pub fn schoenfeld_residuals(design: &DesignMatrix, fit: &CoxFit) -> Result<ResidualMatrix> {
    check_fit(design, fit)?;
    residuals_at(design, &fit.beta, fit)
}

/// Residuals evaluated at an arbitrary `beta` (their sums only vanish at the
/// estimate).
pub fn schoenfeld_residuals_at(
    design: &DesignMatrix,
    fit: &CoxFit,
    beta: &[f64],
) -> Result<ResidualMatrix> {
    check_fit(design, fit)?;
    residuals_at(design, beta, fit)
}

fn residuals_at(design: &DesignMatrix, beta: &[f64], fit: &CoxFit) -> Result<ResidualMatrix> {
    let rows = failure_residuals(design, beta, fit.ties)?;
    let km = kaplan_meier(&RiskSetIndex::from_times(
        design.durations(),
        design.events(),
    )?);
    let mut out = ResidualMatrix {
        covariate_names: design.column_names(),
        event_times: Vec::with_capacity(rows.len()),
        records: Vec::with_capacity(rows.len()),
        residuals: Vec::with_capacity(rows.len()),
        scaled: None,
        survival_before: Vec::with_capacity(rows.len()),
    };
    for (i, t, r) in rows {
        let before = km.steps.partition_point(|s| s.time < t);
        out.survival_before.push(if before == 0 {
            1.0
        } else {
            km.steps[before - 1].survival
        });
        out.event_times.push(t);
        out.records.push(i);
        out.residuals.push(r);
    }
    Ok(out)
}

/// Fills `scaled` with `m * I^-1 r` for each residual row `r`.
pub fn scale_residuals(resid: &ResidualMatrix, fit: &CoxFit) -> Result<ResidualMatrix> {
    if resid.scaled.is_some() {
        return Err(Error::AlreadyScaled);
    }
    if fit.covariates != resid.covariate_names {
        return Err(Error::invalid(
            "fit and residuals have different covariates",
        ));
    }
    let variance = fit.information.cholesky()?.inverse();
    let m = resid.n_events() as f64;
    let scaled = resid
        .residuals
        .iter()
        .map(|r| variance.mul_vec(r).into_iter().map(|v| m * v).collect())
        .collect();
    let mut out = resid.clone();
    out.scaled = Some(scaled);
    Ok(out)
}

/// Time transform in `beta(t) = beta + theta g(t)`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GTransform {
    #[default]
    Identity,
    Log,
    /// `1 - S(t-)` from the pooled Kaplan-Meier curve.
    Km,
}

impl GTransform {
    fn apply(self, resid: &ResidualMatrix) -> Vec<f64> {
        match self {
            GTransform::Identity => resid.event_times.clone(),
            GTransform::Log => resid.event_times.iter().map(|t| t.ln()).collect(),
            GTransform::Km => resid.survival_before.iter().map(|s| 1.0 - s).collect(),
        }
    }
}

impl FromStr for GTransform {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(GTransform::Identity),
            "log" => Ok(GTransform::Log),
            "km" => Ok(GTransform::Km),
            other => Err(Error::invalid(format!(
                "unknown g transform `{other}` (identity, log, km)"
            ))),
        }
    }
}

impl fmt::Display for GTransform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GTransform::Identity => "identity",
            GTransform::Log => "log",
            GTransform::Km => "km",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhCovariateTest {
    pub name: String,
    /// Slope of the scaled residuals on centered g(t).
    pub theta: f64,
    pub chi_square: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhTestReport {
    pub g_transform: GTransform,
    pub n_events: usize,
    pub per_covariate: Vec<PhCovariateTest>,
    pub global: ChiSquareTest,
}

impl PhTestReport {
    /// Covariates whose test rejects proportionality at level `alpha`.
    pub fn flagged(&self, alpha: f64) -> Vec<&str> {
        self.per_covariate
            .iter()
            .filter(|c| c.p_value < alpha)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Score test of `theta = 0` for each covariate and jointly.
pub fn grambsch_therneau_test(
    resid: &ResidualMatrix,
    fit: &CoxFit,
    g: GTransform,
) -> Result<PhTestReport> {
    let scaled = resid.scaled.as_ref().ok_or(Error::NotScaled)?;
    if fit.covariates != resid.covariate_names {
        return Err(Error::invalid(
            "fit and residuals have different covariates",
        ));
    }
    let k = resid.covariate_names.len();
    let m = resid.n_events();
    if m < k + 2 {
        return Err(Error::invalid(format!(
            "the test needs at least {} events for {k} covariates, found {m}",
            k + 2
        )));
    }
    let gt = g.apply(resid);
    let mean = gt.iter().sum::<f64>() / m as f64;
    let xx: Vec<f64> = gt.iter().map(|v| v - mean).collect();
    let sxx: f64 = xx.iter().map(|v| v * v).sum();
    let spread = gt.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(sxx > 0.0) || sxx.sqrt() <= 1e-12 * spread * (m as f64).sqrt() {
        return Err(Error::Degenerate(format!(
            "g(t) = {g} does not vary across the {m} event times"
        )));
    }
    let variance = fit.information.cholesky()?.inverse();
    let mf = m as f64;

    let per_covariate = (0..k)
        .map(|j| {
            let u: f64 = xx.iter().zip(scaled).map(|(x, r)| x * r[j]).sum();
            let chi_square = u * u / (variance.get(j, j) * mf * sxx);
            PhCovariateTest {
                name: resid.covariate_names[j].clone(),
                theta: u / sxx,
                chi_square,
                df: 1,
                p_value: chi2_sf(chi_square, 1),
            }
        })
        .collect();

    let test: Vec<f64> = (0..k)
        .map(|j| xx.iter().zip(&resid.residuals).map(|(x, r)| x * r[j]).sum())
        .collect();
    let stat = (variance.quad_form(&test) * mf / sxx).max(0.0);
    Ok(PhTestReport {
        g_transform: g,
        n_events: m,
        per_covariate,
        global: ChiSquareTest {
            statistic: stat,
            df: k,
            p_value: chi2_sf(stat, k),
        },
    })
}

/// Time scale multiplied into a covariate to form an interaction column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TimeScale {
    /// `weeks_since_first / 52`.
    #[serde(rename = "yearsSinceFirst")]
    YearsSinceFirst,
    /// The record's own duration.
    #[serde(rename = "weeksSinceLast")]
    WeeksSinceLast,
}

impl TimeScale {
    pub fn name(self) -> &'static str {
        match self {
            TimeScale::YearsSinceFirst => "yearsSinceFirst",
            TimeScale::WeeksSinceLast => "weeksSinceLast",
        }
    }
}

impl FromStr for TimeScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "yearsSinceFirst" => Ok(TimeScale::YearsSinceFirst),
            "weeksSinceLast" => Ok(TimeScale::WeeksSinceLast),
            other => Err(Error::invalid(format!(
                "unknown time scale `{other}` (yearsSinceFirst, weeksSinceLast)"
            ))),
        }
    }
}

/// The two interactions of the refitted funding-stage model.
pub fn standard_time_interactions() -> Vec<(String, TimeScale)> {
    vec![
        ("roundNumber".to_string(), TimeScale::YearsSinceFirst),
        ("weeksSinceFirst".to_string(), TimeScale::WeeksSinceLast),
    ]
}

/// Appends `covariate:scale` columns.
pub fn augment_with_time_interactions(
    design: &DesignMatrix,
    pairs: &[(String, TimeScale)],
) -> Result<DesignMatrix> {
    let mut out = design.clone();
    for (cov, scale) in pairs {
        let j = out.column_index(cov).ok_or_else(|| {
            Error::invalid(format!("unknown covariate `{cov}` in time interaction"))
        })?;
        let (factor, note): (Vec<f64>, &str) = match scale {
            TimeScale::YearsSinceFirst => {
                let w = out.weeks_since_first().ok_or_else(|| {
                    Error::invalid("yearsSinceFirst needs weeks-since-first values on the design")
                })?;
                (
                    w.iter().map(|w| w / 52.0).collect(),
                    "weeks since first investment / 52",
                )
            }
            TimeScale::WeeksSinceLast => (
                out.durations().to_vec(),
                "weeks since last investment (the record's duration)",
            ),
        };
        let values = out
            .column(j)
            .iter()
            .zip(&factor)
            .map(|(a, b)| a * b)
            .collect();
        let meta = ColumnMeta::new(
            format!("{cov}:{}", scale.name()),
            ColumnKind::Interaction,
            format!("{cov} x {note}"),
        );
        out = out.append_column(meta, values)?;
    }
    Ok(out)
}
