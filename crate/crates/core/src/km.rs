//! Kaplan-Meier product-limit estimation and the k-sample logrank test.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::records::RiskSetIndex;
use crate::special::chi2_sf;

/// Slack when comparing a survival value against a quantile threshold, so a
/// curve that reaches e.g. 0.5 through a product of fractions still counts.
const QUANTILE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KmStep {
    pub time: f64,
    pub n_at_risk: usize,
    pub n_events: usize,
    pub survival: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Quartiles {
    pub q25: Option<f64>,
    pub median: Option<f64>,
    pub q75: Option<f64>,
}

/// Right-continuous step estimate of S(t).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    pub steps: Vec<KmStep>,
    pub quartiles: Option<Quartiles>,
    /// No events: the curve is identically one.
    pub degenerate: bool,
}

impl SurvivalCurve {
    /// Ŝ(t); equal to 1 before the first event time.
    pub fn survival_at(&self, t: f64) -> f64 {
        let k = self.steps.partition_point(|s| s.time <= t);
        if k == 0 {
            1.0
        } else {
            self.steps[k - 1].survival
        }
    }
}

pub fn kaplan_meier(index: &RiskSetIndex) -> SurvivalCurve {
    let mut s = 1.0;
    let steps: Vec<KmStep> = (0..index.len())
        .map(|i| {
            let n = index.n_at_risk(i);
            let d = index.n_events(i);
            s *= (n - d) as f64 / n as f64;
            KmStep {
                time: index.event_times()[i],
                n_at_risk: n,
                n_events: d,
                survival: s,
            }
        })
        .collect();
    let mut curve = SurvivalCurve {
        degenerate: steps.is_empty(),
        steps,
        quartiles: None,
    };
    if !curve.degenerate {
        curve.quartiles = Some(Quartiles {
            q25: first_crossing(&curve, 0.75),
            median: first_crossing(&curve, 0.5),
            q75: first_crossing(&curve, 0.25),
        });
    }
    curve
}

fn first_crossing(curve: &SurvivalCurve, level: f64) -> Option<f64> {
    curve
        .steps
        .iter()
        .find(|s| s.survival <= level + QUANTILE_SLACK)
        .map(|s| s.time)
}

/// Smallest event time with Ŝ(t) <= 1 - p, or `None` if the curve never
/// gets there.
pub fn survival_quantile(curve: &SurvivalCurve, p: f64) -> Result<Option<f64>> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "quantile probability {p} is outside (0, 1)"
        )));
    }
    Ok(first_crossing(curve, 1.0 - p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogrankResult {
    pub chi_square: f64,
    pub df: usize,
    pub p_value: f64,
    pub observed: Vec<f64>,
    pub expected: Vec<f64>,
}

/// k-sample logrank test of equal survival across groups.
///
/// Variance uses the hypergeometric form with the tie factor
/// `(n - d) / (n - 1)`; times where only one subject is at risk carry no
/// variance and are skipped.
pub fn logrank_test(groups: &[RiskSetIndex]) -> Result<LogrankResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::invalid("logrank test needs at least two groups"));
    }
    for (g, idx) in groups.iter().enumerate() {
        if idx.n_records() == 0 {
            return Err(Error::invalid(format!("group {g} has no members")));
        }
        if let Some(h) = groups[..g].iter().position(|other| other == idx) {
            return Err(Error::invalid(format!(
                "groups {h} and {g} are the same records; a group cannot be compared with itself"
            )));
        }
    }

    let mut pooled: Vec<(f64, bool, usize)> = groups
        .iter()
        .enumerate()
        .flat_map(|(g, idx)| {
            idx.durations()
                .iter()
                .zip(idx.events())
                .map(move |(&t, &e)| (t, e, g))
        })
        .collect();
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));
    if !pooled.iter().any(|p| p.1) {
        return Err(Error::invalid("logrank test needs at least one event"));
    }

    let mut at_risk: Vec<f64> = groups.iter().map(|g| g.n_records() as f64).collect();
    let mut observed = vec![0.0; k];
    let mut expected = vec![0.0; k];
    let mut var = SquareMatrix::zeros(k - 1);
    let mut deaths = vec![0.0; k];
    let mut leaving = vec![0.0; k];

    let mut pos = 0;
    while pos < pooled.len() {
        let t = pooled[pos].0;
        deaths.iter_mut().for_each(|v| *v = 0.0);
        leaving.iter_mut().for_each(|v| *v = 0.0);
        while pos < pooled.len() && pooled[pos].0 == t {
            let (_, e, g) = pooled[pos];
            if e {
                deaths[g] += 1.0;
            }
            leaving[g] += 1.0;
            pos += 1;
        }
        let d: f64 = deaths.iter().sum();
        let n: f64 = at_risk.iter().sum();
        if d > 0.0 {
            for g in 0..k {
                observed[g] += deaths[g];
                expected[g] += d * at_risk[g] / n;
            }
            if n > 1.0 {
                let factor = d * (n - d) / (n - 1.0) / n;
                for g in 0..k - 1 {
                    for h in 0..k - 1 {
                        let kron = if g == h { 1.0 } else { 0.0 };
                        var.add(g, h, factor * at_risk[g] * (kron - at_risk[h] / n));
                    }
                }
            }
        }
        for g in 0..k {
            at_risk[g] -= leaving[g];
        }
    }

    let u: Vec<f64> = (0..k - 1).map(|g| observed[g] - expected[g]).collect();
    let chi_square = if u.iter().all(|&v| v == 0.0) {
        0.0
    } else {
        let ch = var
            .cholesky()
            .map_err(|_| Error::Degenerate("logrank variance matrix is singular".into()))?;
        let w = ch.solve(&u);
        u.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>().max(0.0)
    };
    Ok(LogrankResult {
        chi_square,
        df: k - 1,
        p_value: chi2_sf(chi_square, k - 1),
        observed,
        expected,
    })
}
