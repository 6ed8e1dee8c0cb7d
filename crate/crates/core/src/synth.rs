//! Seeded synthetic panels with known cause-specific effects.
//!
//! Every subject is one record. Cause `c` has hazard
//! `baseline_rate * exp(x beta_c)`; its latent time is drawn by inversion,
//! the earliest latent time is observed and anything past the horizon is
//! administratively censored. Recorded durations are shifted by
//! [`TIME_OFFSET_WEEKS`] so they satisfy the one-week minimum of the panel
//! format; the shift is monotone and leaves every partial likelihood
//! unchanged.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution as _, Normal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{Covariate, CovariateRecipe};
use crate::records::{CompanyType, EventKind, IntervalRecord};

pub const TIME_OFFSET_WEEKS: f64 = 1.0;
pub const GENERATOR: &str = concat!("stagesurv-synthgen ", env!("CARGO_PKG_VERSION"));
pub const RNG_ALGORITHM: &str =
    "ChaCha20 (rand_chacha 0.9), seed_from_u64(seed), stream = subject index";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum CovariateDistribution {
    Normal { mean: f64, sd: f64 },
    Uniform { low: f64, high: f64 },
    Bernoulli { p: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateSpec {
    pub name: Covariate,
    pub distribution: CovariateDistribution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseEffect {
    pub name: String,
    #[serde(with = "kind_code")]
    pub kind: EventKind,
    /// One coefficient per scenario covariate, in order.
    pub beta: Vec<f64>,
}

mod kind_code {
    use serde::{Deserialize, Deserializer, Serializer};

    use crate::records::EventKind;

    pub fn serialize<S: Serializer>(k: &EventKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(k.code())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<EventKind, D::Error> {
        String::deserialize(d)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_subjects: usize,
    /// Exponential baseline hazard per week.
    pub baseline_rate: f64,
    /// Weeks after which subjects are censored.
    pub censor_horizon: f64,
    pub seed: u64,
    pub covariates: Vec<CovariateSpec>,
    pub causes: Vec<CauseEffect>,
    #[serde(default = "yes")]
    pub record_latent_times: bool,
}

fn yes() -> bool {
    true
}

impl Default for Scenario {
    /// Two covariates, one cause, about 30% censoring.
    fn default() -> Self {
        Self {
            n_subjects: 500,
            baseline_rate: 0.05,
            censor_horizon: 29.0,
            seed: 42,
            covariates: vec![
                CovariateSpec {
                    name: Covariate::TrafficDelta,
                    distribution: CovariateDistribution::Normal { mean: 0.0, sd: 1.0 },
                },
                CovariateSpec {
                    name: Covariate::HasTrendsData,
                    distribution: CovariateDistribution::Bernoulli { p: 0.5 },
                },
            ],
            causes: vec![CauseEffect {
                name: "financing".into(),
                kind: EventKind::VentureEquity,
                beta: vec![0.5, -0.3],
            }],
            record_latent_times: true,
        }
    }
}

fn field_err(field: impl AsRef<str>, msg: impl AsRef<str>) -> Error {
    Error::invalid(format!("scenario.{}: {}", field.as_ref(), msg.as_ref()))
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Malformed(format!("scenario: {e}")))
    }

    /// The recipe that turns generated records back into the simulated
    /// covariates.
    pub fn recipe(&self) -> CovariateRecipe {
        CovariateRecipe {
            covariates: self.covariates.iter().map(|c| c.name).collect(),
            time_interactions: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_subjects == 0 {
            return Err(field_err("n_subjects", "must be at least 1"));
        }
        if !(self.baseline_rate.is_finite() && self.baseline_rate > 0.0) {
            return Err(field_err(
                "baseline_rate",
                format!("{} must be finite and > 0", self.baseline_rate),
            ));
        }
        if !(self.censor_horizon.is_finite() && self.censor_horizon > 0.0) {
            return Err(field_err(
                "censor_horizon",
                format!("{} must be finite and > 0", self.censor_horizon),
            ));
        }
        let mut p_company = 0.0;
        for (i, c) in self.covariates.iter().enumerate() {
            let f = format!("covariates[{i}]");
            if self.covariates[..i].iter().any(|o| o.name == c.name) {
                return Err(field_err(&f, format!("`{}` listed twice", c.name)));
            }
            let lo = match c.distribution {
                CovariateDistribution::Normal { mean, sd } => {
                    if !(mean.is_finite() && sd.is_finite() && sd > 0.0) {
                        return Err(field_err(
                            format!("{f}.distribution"),
                            "normal needs finite mean and sd > 0",
                        ));
                    }
                    f64::NEG_INFINITY
                }
                CovariateDistribution::Uniform { low, high } => {
                    if !(low.is_finite() && high.is_finite() && low < high) {
                        return Err(field_err(
                            format!("{f}.distribution"),
                            "uniform needs finite low < high",
                        ));
                    }
                    low
                }
                CovariateDistribution::Bernoulli { p } => {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(field_err(
                            format!("{f}.distribution"),
                            "bernoulli p must be in [0, 1]",
                        ));
                    }
                    0.0
                }
            };
            let bernoulli = matches!(c.distribution, CovariateDistribution::Bernoulli { .. });
            match c.name {
                Covariate::TrafficDelta | Covariate::TrendsDelta => {}
                Covariate::LogTotalCapital | Covariate::WeeksSinceFirst => {
                    if lo < 0.0 {
                        return Err(field_err(
                            format!("{f}.distribution"),
                            format!(
                                "`{}` is non-negative; use uniform with low >= 0 or bernoulli",
                                c.name
                            ),
                        ));
                    }
                }
                Covariate::HasTrendsData | Covariate::HasTrafficData => {
                    if !bernoulli {
                        return Err(field_err(
                            format!("{f}.distribution"),
                            format!("`{}` must be bernoulli", c.name),
                        ));
                    }
                }
                Covariate::CompanyTypeEp | Covariate::CompanyTypePl => {
                    let CovariateDistribution::Bernoulli { p } = c.distribution else {
                        return Err(field_err(
                            format!("{f}.distribution"),
                            format!("`{}` must be bernoulli", c.name),
                        ));
                    };
                    p_company += p;
                }
                Covariate::RoundNumber | Covariate::TrendsDeltaSign => {
                    return Err(field_err(
                        format!("{f}.name"),
                        format!("`{}` cannot be simulated", c.name),
                    ));
                }
            }
        }
        if p_company > 1.0 + 1e-12 {
            return Err(field_err(
                "covariates",
                "companyType=EP and companyType=PL probabilities sum to more than 1",
            ));
        }
        if self.causes.is_empty() {
            return Err(field_err("causes", "at least one cause is required"));
        }
        for (i, c) in self.causes.iter().enumerate() {
            let f = format!("causes[{i}]");
            if c.kind == EventKind::NoEvent {
                return Err(field_err(format!("{f}.kind"), "NONE is not a cause"));
            }
            if self.causes[..i].iter().any(|o| o.kind == c.kind) {
                return Err(field_err(
                    format!("{f}.kind"),
                    format!("{} used by two causes", c.kind.code()),
                ));
            }
            if self.causes[..i].iter().any(|o| o.name == c.name) {
                return Err(field_err(
                    format!("{f}.name"),
                    format!("`{}` used twice", c.name),
                ));
            }
            if c.beta.len() != self.covariates.len() {
                return Err(field_err(
                    format!("{f}.beta"),
                    format!(
                        "has {} values for {} covariates",
                        c.beta.len(),
                        self.covariates.len()
                    ),
                ));
            }
            if c.beta.iter().any(|b| !b.is_finite()) {
                return Err(field_err(format!("{f}.beta"), "values must be finite"));
            }
        }
        Ok(())
    }
}

/// What the generator knows that the panel does not.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruth {
    pub generator: String,
    pub rng: String,
    pub time_offset_weeks: f64,
    pub scenario: Scenario,
    pub recipe: CovariateRecipe,
    /// cause name -> covariate name -> coefficient.
    pub true_beta: BTreeMap<String, BTreeMap<String, f64>>,
    /// Event-kind code (and `censored`) -> number of records.
    pub tallies: BTreeMap<String, usize>,
    /// Per subject, per cause, on the unshifted time scale.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latent_times: Option<Vec<Vec<f64>>>,
}

fn draw(rng: &mut ChaCha20Rng, d: CovariateDistribution) -> f64 {
    match d {
        CovariateDistribution::Normal { mean, sd } => {
            Normal::new(mean, sd).expect("validated").sample(rng)
        }
        CovariateDistribution::Uniform { low, high } => {
            Uniform::new(low, high).expect("validated").sample(rng)
        }
        CovariateDistribution::Bernoulli { p } => {
            if rng.random::<f64>() < p {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn subject(scenario: &Scenario, i: usize, rng: &mut ChaCha20Rng) -> IntervalRecord {
    let mut r = IntervalRecord {
        company_id: format!("sim{i:06}"),
        company_type: CompanyType::ConsumerProduct,
        event_kind: EventKind::NoEvent,
        investment_amount: 0.0,
        total_capital_raised: 0.0,
        round_name: "Round 1".into(),
        round_number: 1,
        weeks_since_first: 0.0,
        duration_weeks: 0.0,
        event_occurred: false,
        trends_delta: None,
        traffic_delta: None,
    };
    let has = |name| scenario.covariates.iter().any(|c| c.name == name);
    let company_p = |name| {
        scenario
            .covariates
            .iter()
            .find(|c| c.name == name)
            .map_or(0.0, |c| match c.distribution {
                CovariateDistribution::Bernoulli { p } => p,
                _ => 0.0,
            })
    };
    let mut company_drawn = false;
    // Presence flags first so delta draws know whether the source exists.
    if !has(Covariate::HasTrendsData) && has(Covariate::TrendsDelta) {
        r.trends_delta = Some(0.0);
    }
    if !has(Covariate::HasTrafficData) && has(Covariate::TrafficDelta) {
        r.traffic_delta = Some(0.0);
    }
    for c in &scenario.covariates {
        match c.name {
            Covariate::HasTrendsData => {
                r.trends_delta = (draw(rng, c.distribution) == 1.0).then_some(0.0);
            }
            Covariate::HasTrafficData => {
                r.traffic_delta = (draw(rng, c.distribution) == 1.0).then_some(0.0);
            }
            Covariate::TrendsDelta => {
                let v = draw(rng, c.distribution);
                if r.trends_delta.is_some() {
                    r.trends_delta = Some(v);
                }
            }
            Covariate::TrafficDelta => {
                let v = draw(rng, c.distribution);
                if r.traffic_delta.is_some() {
                    r.traffic_delta = Some(v);
                }
            }
            Covariate::LogTotalCapital => {
                r.total_capital_raised = draw(rng, c.distribution).exp_m1()
            }
            Covariate::WeeksSinceFirst => r.weeks_since_first = draw(rng, c.distribution),
            Covariate::CompanyTypeEp | Covariate::CompanyTypePl => {
                if !company_drawn {
                    company_drawn = true;
                    let u: f64 = rng.random();
                    let ep = company_p(Covariate::CompanyTypeEp);
                    let pl = company_p(Covariate::CompanyTypePl);
                    r.company_type = if u < ep {
                        CompanyType::EnterpriseProduct
                    } else if u < ep + pl {
                        CompanyType::Platform
                    } else {
                        CompanyType::ConsumerProduct
                    };
                }
            }
            Covariate::RoundNumber | Covariate::TrendsDeltaSign => {
                unreachable!("rejected by validation")
            }
        }
    }
    r
}

/// Generates the panel and its ground truth.
pub fn generate(scenario: &Scenario) -> Result<(Vec<IntervalRecord>, GroundTruth)> {
    scenario.validate()?;
    let mut records = Vec::with_capacity(scenario.n_subjects);
    let mut latent = Vec::with_capacity(if scenario.record_latent_times {
        scenario.n_subjects
    } else {
        0
    });
    let mut tallies: BTreeMap<String, usize> = BTreeMap::new();
    for c in &scenario.causes {
        tallies.insert(c.kind.code().to_string(), 0);
    }
    tallies.insert("censored".into(), 0);

    for i in 0..scenario.n_subjects {
        let mut rng = ChaCha20Rng::seed_from_u64(scenario.seed);
        rng.set_stream(i as u64);
        let mut r = subject(scenario, i, &mut rng);
        let x: Vec<f64> = scenario
            .covariates
            .iter()
            .map(|c| c.name.value(&r))
            .collect();
        let times: Vec<f64> = scenario
            .causes
            .iter()
            .map(|c| {
                let eta: f64 = x.iter().zip(&c.beta).map(|(a, b)| a * b).sum();
                // 1 - U lies in (0, 1], so the log is finite.
                let u = 1.0 - rng.random::<f64>();
                -u.ln() / (scenario.baseline_rate * eta.exp())
            })
            .collect();
        let (first, t) =
            times.iter().enumerate().fold(
                (0, f64::INFINITY),
                |acc, (c, &t)| if t < acc.1 { (c, t) } else { acc },
            );
        if t < scenario.censor_horizon {
            r.event_kind = scenario.causes[first].kind;
            r.event_occurred = true;
            r.duration_weeks = t + TIME_OFFSET_WEEKS;
            r.investment_amount = 1.0;
            *tallies.get_mut(r.event_kind.code()).expect("seeded") += 1;
        } else {
            r.duration_weeks = scenario.censor_horizon + TIME_OFFSET_WEEKS;
            *tallies.get_mut("censored").expect("seeded") += 1;
        }
        if scenario.record_latent_times {
            latent.push(times);
        }
        records.push(r);
    }
    tallies.insert("total".into(), scenario.n_subjects);

    let true_beta = scenario
        .causes
        .iter()
        .map(|c| {
            let per: BTreeMap<String, f64> = scenario
                .covariates
                .iter()
                .zip(&c.beta)
                .map(|(s, b)| (s.name.name().to_string(), *b))
                .collect();
            (c.name.clone(), per)
        })
        .collect();
    let truth = GroundTruth {
        generator: GENERATOR.to_string(),
        rng: RNG_ALGORITHM.to_string(),
        time_offset_weeks: TIME_OFFSET_WEEKS,
        scenario: scenario.clone(),
        recipe: scenario.recipe(),
        true_beta,
        tallies,
        latent_times: scenario.record_latent_times.then_some(latent),
    };
    Ok((records, truth))
}
