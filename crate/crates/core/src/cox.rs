//! Cox proportional-hazards estimation by maximum partial likelihood.
//!
//! The log partial likelihood is
//!
//! ```text
//! L(beta) = sum over event times t_i of
//!           [ sum_{failures at t_i} x beta  -  d_i ln sum_{j in R(t_i)} exp(x_j beta) ]
//! ```
//!
//! (Breslow's handling of `d_i` tied failures), or Efron's correction which
//! removes a growing fraction of the tied failures from the denominator.
//! Without ties both reduce to the plain product over ordered event times.
//!
//! All sums are accumulated in one backward pass over the duration-sorted
//! records. Covariates are centered first (the likelihood only depends on
//! within-risk-set differences) and every risk-set sum is taken relative to
//! the running maximum of the linear predictor over that risk set, so
//! `exp` never overflows.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::special::{chi2_sf, normal_two_sided_p};

/// Tied event time handling.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TieMethod {
    #[default]
    Breslow,
    Efron,
}

impl FromStr for TieMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "breslow" => Ok(TieMethod::Breslow),
            "efron" => Ok(TieMethod::Efron),
            other => Err(Error::invalid(format!("unknown tie method `{other}`"))),
        }
    }
}

impl fmt::Display for TieMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TieMethod::Breslow => "breslow",
            TieMethod::Efron => "efron",
        })
    }
}

/// Newton-Raphson settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitControls {
    pub max_iter: usize,
    /// Relative change of the log partial likelihood between iterations.
    pub rel_loglik_tol: f64,
    /// Max-norm of the gradient.
    pub grad_tol: f64,
    pub max_halvings: usize,
    /// |beta_j| beyond this while the likelihood still rises is reported as
    /// monotone likelihood.
    pub separation_bound: f64,
}

impl Default for FitControls {
    fn default() -> Self {
        Self {
            max_iter: 50,
            rel_loglik_tol: 1e-9,
            grad_tol: 1e-6,
            max_halvings: 10,
            separation_bound: 20.0,
        }
    }
}

/// Relative size of a pending Newton step below which the iterate is
/// considered settled. A step that stays O(1) while the gradient vanishes is
/// the signature of a coefficient running off to infinity.
const PENDING_STEP_TOL: f64 = 3e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    pub loglik: f64,
    pub max_abs_gradient: f64,
    /// Fraction of the full Newton step that was accepted (1, 1/2, 1/4 ...).
    pub step_scale: f64,
    pub beta: Vec<f64>,
}

/// Global chi-square test of `beta = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

impl ChiSquareTest {
    fn new(statistic: f64, df: usize) -> Self {
        Self {
            statistic,
            df,
            p_value: chi2_sf(statistic, df),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoxFit {
    pub covariates: Vec<String>,
    pub beta: Vec<f64>,
    pub hazard_ratio: Vec<f64>,
    pub se: Vec<f64>,
    pub z: Vec<f64>,
    pub p: Vec<f64>,
    pub loglik_null: f64,
    pub loglik_fit: f64,
    pub lr: ChiSquareTest,
    pub wald: ChiSquareTest,
    pub score: ChiSquareTest,
    pub concordance: Option<f64>,
    /// Observed information at the estimate.
    pub information: SquareMatrix,
    /// Its inverse, the estimated covariance of `beta`.
    pub variance: SquareMatrix,
    pub n: usize,
    pub n_events: usize,
    pub ties: TieMethod,
    pub converged: bool,
    pub iterations: Vec<IterationRecord>,
}

impl CoxFit {
    /// `1 - exp(-LR / n)`.
    pub fn rsquare(&self) -> f64 {
        1.0 - (-self.lr.statistic / self.n as f64).exp()
    }
}

/// Log partial likelihood with its first two derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialLikelihood {
    pub loglik: f64,
    pub gradient: Vec<f64>,
    /// Negative Hessian.
    pub information: SquareMatrix,
}

struct TimeGroup {
    time: f64,
    members: Vec<usize>,
    deaths: Vec<usize>,
}

/// Centered covariates grouped by distinct duration, longest first.
pub(crate) struct Prepared {
    n: usize,
    k: usize,
    x: Vec<f64>,
    groups: Vec<TimeGroup>,
    n_event_times: usize,
}

impl Prepared {
    pub(crate) fn new(design: &DesignMatrix) -> Self {
        let n = design.n_rows();
        let k = design.n_cols();
        let means: Vec<f64> = (0..k)
            .map(|j| (0..n).map(|i| design.value(i, j)).sum::<f64>() / n as f64)
            .collect();
        let mut x = Vec::with_capacity(n * k);
        for i in 0..n {
            x.extend(design.row(i).iter().zip(&means).map(|(v, m)| v - m));
        }
        let t = design.durations();
        let ev = design.events();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| t[b].total_cmp(&t[a]).then(a.cmp(&b)));
        let mut groups: Vec<TimeGroup> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if g.time == t[i] => g.members.push(i),
                _ => groups.push(TimeGroup {
                    time: t[i],
                    members: vec![i],
                    deaths: Vec::new(),
                }),
            }
        }
        for g in &mut groups {
            g.members.sort_unstable();
            g.deaths = g.members.iter().copied().filter(|&i| ev[i]).collect();
        }
        let n_event_times = groups.iter().filter(|g| !g.deaths.is_empty()).count();
        Self {
            n,
            k,
            x,
            groups,
            n_event_times,
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.k..(i + 1) * self.k]
    }

    fn eta(&self, beta: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
            .collect()
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Want {
    Value,
    Derivatives,
    Residuals,
}

pub(crate) struct Pass {
    pub loglik: f64,
    pub gradient: Vec<f64>,
    pub information: SquareMatrix,
    /// (record, time, x - weighted mean) for each failure, ascending in time.
    pub residuals: Vec<(usize, f64, Vec<f64>)>,
}

/// Weighted sums over a risk set, all relative to `exp(shift)`.
struct Sums {
    shift: f64,
    s0: f64,
    s1: Vec<f64>,
    s2: Vec<f64>,
}

impl Sums {
    fn new(k: usize) -> Self {
        Self {
            shift: f64::NEG_INFINITY,
            s0: 0.0,
            s1: vec![0.0; k],
            s2: vec![0.0; k * k],
        }
    }

    fn clear(&mut self) {
        self.s0 = 0.0;
        self.s1.iter_mut().for_each(|v| *v = 0.0);
        self.s2.iter_mut().for_each(|v| *v = 0.0);
    }

    fn rescale_to(&mut self, shift: f64) {
        if shift > self.shift {
            let f = (self.shift - shift).exp();
            self.s0 *= f;
            self.s1.iter_mut().for_each(|v| *v *= f);
            self.s2.iter_mut().for_each(|v| *v *= f);
            self.shift = shift;
        }
    }

    fn add(&mut self, x: &[f64], eta: f64, second: bool) {
        let w = (eta - self.shift).exp();
        self.s0 += w;
        let k = x.len();
        for a in 0..k {
            let wa = w * x[a];
            self.s1[a] += wa;
            if second {
                for b in 0..=a {
                    self.s2[a * k + b] += wa * x[b];
                }
            }
        }
    }
}

pub(crate) fn accumulate(
    prep: &Prepared,
    beta: &[f64],
    ties: TieMethod,
    want: Want,
) -> Result<Pass> {
    let k = prep.k;
    let eta = prep.eta(beta);
    let second = want != Want::Value;
    let mut risk = Sums::new(k);
    let mut dead = Sums::new(k);
    let mut loglik = 0.0;
    let mut gradient = vec![0.0; k];
    let mut info = vec![0.0; k * k];
    let mut residuals = Vec::new();
    let mut event_times_left = prep.n_event_times;
    let mut mean = vec![0.0; k];
    let mut mean_acc = vec![0.0; k];

    for g in &prep.groups {
        let group_max = g
            .members
            .iter()
            .map(|&i| eta[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if !group_max.is_finite() {
            return Err(Error::Overflow {
                risk_set: event_times_left.saturating_sub(1),
                time: g.time,
            });
        }
        risk.rescale_to(group_max);
        for &i in &g.members {
            risk.add(prep.row(i), eta[i], second);
        }
        if g.deaths.is_empty() {
            continue;
        }
        event_times_left -= 1;
        let d = g.deaths.len();
        let efron = ties == TieMethod::Efron && d > 1;
        if efron {
            dead.clear();
            dead.shift = risk.shift;
            for &i in &g.deaths {
                dead.add(prep.row(i), eta[i], second);
            }
        }
        for &i in &g.deaths {
            loglik += eta[i];
            if second {
                for (a, v) in prep.row(i).iter().enumerate() {
                    gradient[a] += v;
                }
            }
        }
        mean_acc.iter_mut().for_each(|v| *v = 0.0);
        let reps = if efron { d } else { 1 };
        let weight = if efron { 1.0 } else { d as f64 };
        for l in 0..reps {
            let frac = if efron { l as f64 / d as f64 } else { 0.0 };
            let s0 = risk.s0 - frac * dead.s0;
            if !(s0.is_finite() && s0 > 0.0) {
                return Err(Error::Overflow {
                    risk_set: event_times_left,
                    time: g.time,
                });
            }
            loglik -= weight * (risk.shift + s0.ln());
            if !second {
                continue;
            }
            for a in 0..k {
                mean[a] = (risk.s1[a] - frac * dead.s1[a]) / s0;
                gradient[a] -= weight * mean[a];
                mean_acc[a] += mean[a];
            }
            for a in 0..k {
                for b in 0..=a {
                    let s2 = (risk.s2[a * k + b] - frac * dead.s2[a * k + b]) / s0;
                    info[a * k + b] += weight * (s2 - mean[a] * mean[b]);
                }
            }
        }
        if !loglik.is_finite() {
            return Err(Error::Overflow {
                risk_set: event_times_left,
                time: g.time,
            });
        }
        if want == Want::Residuals {
            for &i in &g.deaths {
                let r: Vec<f64> = prep
                    .row(i)
                    .iter()
                    .zip(&mean_acc)
                    .map(|(x, m)| x - m / reps as f64)
                    .collect();
                residuals.push((i, g.time, r));
            }
        }
    }

    let mut information = SquareMatrix::zeros(k);
    for a in 0..k {
        for b in 0..=a {
            information.set(a, b, info[a * k + b]);
            information.set(b, a, info[a * k + b]);
        }
    }
    // Groups were visited longest duration first; within a tie group keep
    // input order.
    residuals.reverse();
    let mut start = 0;
    while start < residuals.len() {
        let mut end = start + 1;
        while end < residuals.len() && residuals[end].1 == residuals[start].1 {
            end += 1;
        }
        residuals[start..end].reverse();
        start = end;
    }
    Ok(Pass {
        loglik,
        gradient,
        information,
        residuals,
    })
}

fn check_beta(design: &DesignMatrix, beta: &[f64]) -> Result<()> {
    if beta.len() != design.n_cols() {
        return Err(Error::invalid(format!(
            "beta has {} entries for {} covariates",
            beta.len(),
            design.n_cols()
        )));
    }
    if beta.iter().any(|b| !b.is_finite()) {
        return Err(Error::invalid("beta must be finite"));
    }
    Ok(())
}

/// Log partial likelihood at `beta`.
pub fn log_partial_likelihood(design: &DesignMatrix, beta: &[f64], ties: TieMethod) -> Result<f64> {
    check_beta(design, beta)?;
    let prep = Prepared::new(design);
    Ok(accumulate(&prep, beta, ties, Want::Value)?.loglik)
}

/// Log partial likelihood, gradient and observed information at `beta`.
pub fn partial_likelihood_derivatives(
    design: &DesignMatrix,
    beta: &[f64],
    ties: TieMethod,
) -> Result<PartialLikelihood> {
    check_beta(design, beta)?;
    let prep = Prepared::new(design);
    let pass = accumulate(&prep, beta, ties, Want::Derivatives)?;
    Ok(PartialLikelihood {
        loglik: pass.loglik,
        gradient: pass.gradient,
        information: pass.information,
    })
}

/// Per-failure `x - a` where `a` is the exp(x beta)-weighted covariate mean
/// over the failure's risk set (averaged over Efron's tie fractions).
pub(crate) fn failure_residuals(
    design: &DesignMatrix,
    beta: &[f64],
    ties: TieMethod,
) -> Result<Vec<(usize, f64, Vec<f64>)>> {
    check_beta(design, beta)?;
    let prep = Prepared::new(design);
    Ok(accumulate(&prep, beta, ties, Want::Residuals)?.residuals)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// A full Newton step whose log likelihood change is lost in round-off is
/// still taken when it shrinks the gradient.
fn within_noise(cur: &Pass, next: &Pass) -> bool {
    let noise = 1e-11 * (1.0 + cur.loglik.abs());
    cur.loglik - next.loglik <= noise && max_abs(&next.gradient) < max_abs(&cur.gradient)
}

/// Fits the model by Newton-Raphson from `beta = 0` with step halving.
pub fn fit_cox(design: &DesignMatrix, ties: TieMethod, controls: &FitControls) -> Result<CoxFit> {
    let k = design.n_cols();
    if k == 0 {
        return Err(Error::invalid("design has no covariates"));
    }
    let n_events = design.n_events();
    if n_events == 0 {
        return Err(Error::invalid("no events: the partial likelihood is empty"));
    }
    if let Some(name) = design.constant_columns().into_iter().next() {
        return Err(Error::ConstantColumn(name));
    }
    let prep = Prepared::new(design);

    let mut beta = vec![0.0; k];
    let mut cur = accumulate(&prep, &beta, ties, Want::Derivatives)?;
    let loglik_null = cur.loglik;
    let null_chol = cur.information.cholesky()?;
    let score_stat = {
        let w = null_chol.solve(&cur.gradient);
        cur.gradient
            .iter()
            .zip(&w)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .max(0.0)
    };

    let mut trace = vec![IterationRecord {
        iteration: 0,
        loglik: cur.loglik,
        max_abs_gradient: max_abs(&cur.gradient),
        step_scale: 0.0,
        beta: beta.clone(),
    }];
    let mut last_rel = f64::INFINITY;
    let mut converged = false;

    for iter in 1..=controls.max_iter {
        let gmax = max_abs(&cur.gradient);
        let step = cur.information.cholesky()?.solve(&cur.gradient);
        let settled = step
            .iter()
            .zip(&beta)
            .all(|(s, b)| s.abs() <= PENDING_STEP_TOL * b.abs().max(1.0));
        if gmax < controls.grad_tol && last_rel < controls.rel_loglik_tol && settled {
            // Polish with the pending step; near the maximum it squares the
            // remaining error.
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + s).collect();
            if let Ok(p) = accumulate(&prep, &cand, ties, Want::Derivatives) {
                if p.loglik >= cur.loglik || within_noise(&cur, &p) {
                    if p.loglik > cur.loglik {
                        trace.push(IterationRecord {
                            iteration: iter,
                            loglik: p.loglik,
                            max_abs_gradient: max_abs(&p.gradient),
                            step_scale: 1.0,
                            beta: cand.clone(),
                        });
                    }
                    beta = cand;
                    cur = p;
                }
            }
            converged = true;
            break;
        }

        let mut scale = 1.0;
        let mut accepted = None;
        for _ in 0..=controls.max_halvings {
            let cand: Vec<f64> = beta.iter().zip(&step).map(|(b, s)| b + scale * s).collect();
            match accumulate(&prep, &cand, ties, Want::Value) {
                Ok(p) if p.loglik > cur.loglik => {
                    accepted = Some(cand);
                    break;
                }
                Ok(_)
                    if scale == 1.0
                        && accumulate(&prep, &cand, ties, Want::Derivatives)
                            .is_ok_and(|p| within_noise(&cur, &p)) =>
                {
                    accepted = Some(cand);
                    break;
                }
                Ok(_) | Err(Error::Overflow { .. }) => scale *= 0.5,
                Err(e) => return Err(e),
            }
        }
        let Some(next) = accepted else {
            // No ascent direction left within round-off.
            if gmax < controls.grad_tol {
                converged = true;
                break;
            }
            return Err(Error::NoConvergence { trace });
        };

        let prev_ll = cur.loglik;
        beta = next;
        cur = accumulate(&prep, &beta, ties, Want::Derivatives)?;
        last_rel = (cur.loglik - prev_ll).abs() / prev_ll.abs().max(f64::MIN_POSITIVE);
        trace.push(IterationRecord {
            iteration: iter,
            loglik: cur.loglik,
            max_abs_gradient: max_abs(&cur.gradient),
            step_scale: scale,
            beta: beta.clone(),
        });

        if let Some(j) = (0..k).find(|&j| beta[j].abs() > controls.separation_bound) {
            return Err(Error::Separation {
                covariate: design.columns()[j].name.clone(),
                beta: beta[j],
                bound: controls.separation_bound,
            });
        }
    }
    if !converged {
        return Err(Error::NoConvergence { trace });
    }

    let information = cur.information.clone();
    let variance = information.cholesky()?.inverse();
    let se: Vec<f64> = variance.diagonal().iter().map(|v| v.sqrt()).collect();
    let z: Vec<f64> = beta.iter().zip(&se).map(|(b, s)| b / s).collect();
    let p = z.iter().map(|&z| normal_two_sided_p(z)).collect();
    let lr_stat = (2.0 * (cur.loglik - loglik_null)).max(0.0);
    let wald_stat = information.quad_form(&beta).max(0.0);

    let mut fit = CoxFit {
        covariates: design.column_names(),
        hazard_ratio: beta.iter().map(|b| b.exp()).collect(),
        beta,
        se,
        z,
        p,
        loglik_null,
        loglik_fit: cur.loglik,
        lr: ChiSquareTest::new(lr_stat, k),
        wald: ChiSquareTest::new(wald_stat, k),
        score: ChiSquareTest::new(score_stat, k),
        concordance: None,
        information,
        variance,
        n: design.n_rows(),
        n_events,
        ties,
        converged: true,
        iterations: trace,
    };
    fit.concordance = concordance(design, &fit)?;
    Ok(fit)
}

/// `(exp(beta) - 1) * 100`.
pub fn percent_hazard_change(beta: f64) -> f64 {
    beta.exp_m1() * 100.0
}

/// `exp(beta' (x_i - x_j))`.
pub fn hazard_ratio_between(fit: &CoxFit, x_i: &[f64], x_j: &[f64]) -> Result<f64> {
    let k = fit.beta.len();
    if x_i.len() != k || x_j.len() != k {
        return Err(Error::invalid(format!(
            "covariate vectors must have length {k} (got {} and {})",
            x_i.len(),
            x_j.len()
        )));
    }
    let lp: f64 = fit
        .beta
        .iter()
        .zip(x_i.iter().zip(x_j))
        .map(|(b, (a, c))| b * (a - c))
        .sum();
    Ok(lp.exp())
}

/// Linear predictor `x_i beta` for every row.
pub fn linear_predictor(design: &DesignMatrix, beta: &[f64]) -> Result<Vec<f64>> {
    check_beta(design, beta)?;
    Ok((0..design.n_rows())
        .map(|i| design.row(i).iter().zip(beta).map(|(x, b)| x * b).sum())
        .collect())
}

/// Harrell's concordance of the fitted linear predictor.
///
/// A pair is usable when the shorter duration ended in an event (a tie in
/// duration counts if only one of the two is an event). It is concordant
/// when the shorter duration has the higher predictor; predictor ties count
/// one half. `None` when no pair is usable.
pub fn concordance(design: &DesignMatrix, fit: &CoxFit) -> Result<Option<f64>> {
    let eta = linear_predictor(design, &fit.beta)?;
    Ok(concordance_index(design.durations(), design.events(), &eta))
}

pub(crate) fn concordance_index(durations: &[f64], events: &[bool], score: &[f64]) -> Option<f64> {
    let n = durations.len();
    let mut usable = 0.0f64;
    let mut agree = 0.0f64;
    for i in 0..n {
        if !events[i] {
            continue;
        }
        for j in 0..n {
            let comparable =
                durations[i] < durations[j] || (durations[i] == durations[j] && !events[j]);
            if i == j || !comparable {
                continue;
            }
            usable += 1.0;
            if score[i] > score[j] {
                agree += 1.0;
            } else if score[i] == score[j] {
                agree += 0.5;
            }
        }
    }
    (usable > 0.0).then(|| agree / usable)
}
