//! Cause-specific (latent) competing-risks fits: one Cox model per cause,
//! with events of every other cause treated as censored.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::cox::{fit_cox, CoxFit, FitControls, TieMethod};
use crate::error::{Error, Result};
use crate::panel::{build_design, CovariateRecipe};
use crate::records::{EventKind, IntervalRecord};

/// A named set of event kinds counted as the event of interest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CauseSpec {
    pub name: String,
    pub kinds: BTreeSet<EventKind>,
}

impl CauseSpec {
    pub fn new(
        name: impl Into<String>,
        kinds: impl IntoIterator<Item = EventKind>,
    ) -> Result<Self> {
        let name = name.into();
        let kinds: BTreeSet<EventKind> = kinds.into_iter().collect();
        if name.trim().is_empty() {
            return Err(Error::invalid("cause name is empty"));
        }
        if kinds.is_empty() {
            return Err(Error::invalid(format!("cause `{name}` has no event kinds")));
        }
        if kinds.contains(&EventKind::NoEvent) {
            return Err(Error::invalid(format!(
                "cause `{name}` cannot include NONE"
            )));
        }
        Ok(Self { name, kinds })
    }

    pub fn includes(&self, kind: EventKind) -> bool {
        self.kinds.contains(&kind)
    }
}

impl FromStr for CauseSpec {
    type Err = Error;

    /// `name=KIND[,KIND...]`, e.g. `exit=MA,IPO`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, kinds) = s.split_once('=').ok_or_else(|| {
            Error::invalid(format!(
                "cause `{s}` is not of the form name=KIND[,KIND...]"
            ))
        })?;
        let kinds = kinds
            .split(',')
            .filter(|k| !k.trim().is_empty())
            .map(EventKind::from_str)
            .collect::<Result<Vec<_>>>()?;
        CauseSpec::new(name.trim(), kinds)
    }
}

impl fmt::Display for CauseSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kinds: Vec<&str> = self.kinds.iter().map(|k| k.code()).collect();
        write!(f, "{}={}", self.name, kinds.join(","))
    }
}

/// Copies of `records` where only events of `cause` remain events.
pub fn recensor_by_cause(records: &[IntervalRecord], cause: &CauseSpec) -> Vec<IntervalRecord> {
    records
        .iter()
        .map(|r| {
            let mut c = r.clone();
            c.event_occurred = r.event_occurred && cause.includes(r.event_kind);
            c
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum CauseOutcome {
    Fitted(Box<CoxFit>),
    /// The cause has no events in the data; nothing to estimate.
    InsufficientEvents,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CauseResult {
    pub cause: CauseSpec,
    pub n_events: usize,
    pub outcome: CauseOutcome,
}

/// How the `n` records split across causes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EventPartition {
    pub per_cause: Vec<(String, usize)>,
    pub no_event: usize,
    /// Events whose kind belongs to no cause.
    pub unassigned: usize,
    pub total: usize,
}

impl EventPartition {
    pub fn is_conserved(&self) -> bool {
        self.per_cause.iter().map(|(_, c)| c).sum::<usize>() + self.no_event + self.unassigned
            == self.total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompetingRiskReport {
    pub covariates: Vec<String>,
    pub design_notes: Vec<String>,
    pub ties: TieMethod,
    pub causes: Vec<CauseResult>,
    pub partition: EventPartition,
}

fn check_disjoint(causes: &[CauseSpec]) -> Result<()> {
    for (i, a) in causes.iter().enumerate() {
        for b in &causes[..i] {
            if a.name == b.name {
                return Err(Error::invalid(format!(
                    "cause name `{}` is used twice",
                    a.name
                )));
            }
            if let Some(k) = a.kinds.intersection(&b.kinds).next() {
                return Err(Error::invalid(format!(
                    "causes `{}` and `{}` overlap on {}",
                    b.name,
                    a.name,
                    k.code()
                )));
            }
        }
    }
    Ok(())
}

pub fn event_partition(records: &[IntervalRecord], causes: &[CauseSpec]) -> Result<EventPartition> {
    check_disjoint(causes)?;
    let per_cause = causes
        .iter()
        .map(|c| {
            let n = records
                .iter()
                .filter(|r| r.event_occurred && c.includes(r.event_kind))
                .count();
            (c.name.clone(), n)
        })
        .collect();
    let no_event = records.iter().filter(|r| !r.event_occurred).count();
    let unassigned = records
        .iter()
        .filter(|r| r.event_occurred && !causes.iter().any(|c| c.includes(r.event_kind)))
        .count();
    Ok(EventPartition {
        per_cause,
        no_event,
        unassigned,
        total: records.len(),
    })
}

/// Fits one Cox model per cause with a shared covariate construction.
pub fn fit_competing(
    records: &[IntervalRecord],
    recipe: &CovariateRecipe,
    causes: &[CauseSpec],
    ties: TieMethod,
    controls: &FitControls,
) -> Result<CompetingRiskReport> {
    if causes.is_empty() {
        return Err(Error::invalid("at least one cause is required"));
    }
    let partition = event_partition(records, causes)?;
    let design = build_design(records, recipe)?;
    let mut results = Vec::with_capacity(causes.len());
    for (cause, (_, n_events)) in causes.iter().zip(&partition.per_cause) {
        let outcome = if *n_events == 0 {
            CauseOutcome::InsufficientEvents
        } else {
            let events = records
                .iter()
                .map(|r| r.event_occurred && cause.includes(r.event_kind))
                .collect();
            let fit =
                fit_cox(&design.with_events(events)?, ties, controls).map_err(|e| match e {
                    Error::InvalidArgument(m) => {
                        Error::InvalidArgument(format!("cause `{}`: {m}", cause.name))
                    }
                    other => other,
                })?;
            CauseOutcome::Fitted(Box::new(fit))
        };
        results.push(CauseResult {
            cause: cause.clone(),
            n_events: *n_events,
            outcome,
        });
    }
    Ok(CompetingRiskReport {
        covariates: design.column_names(),
        design_notes: design.notes(),
        ties,
        causes: results,
        partition,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::records::CompanyType;

    fn rec(kind: EventKind, t: f64, x: f64) -> IntervalRecord {
        IntervalRecord {
            company_id: format!("c{t}"),
            company_type: CompanyType::ConsumerProduct,
            event_kind: kind,
            investment_amount: 1.0,
            total_capital_raised: x,
            round_name: String::new(),
            round_number: 1,
            weeks_since_first: 0.0,
            duration_weeks: t,
            event_occurred: kind.is_event(),
            trends_delta: None,
            traffic_delta: None,
        }
    }

    #[test]
    fn parse_causes() {
        let c: CauseSpec = "exit=MA,IPO".parse().unwrap();
        assert_eq!(c.name, "exit");
        assert!(c.includes(EventKind::Ipo));
        assert_eq!(c.to_string(), "exit=MA,IPO");
        assert!("x=NONE".parse::<CauseSpec>().is_err());
        assert!("x=".parse::<CauseSpec>().is_err());
        assert!("noequals".parse::<CauseSpec>().is_err());
    }

    #[test]
    fn recensoring_keeps_everything_but_flags() {
        let recs = vec![
            rec(EventKind::VentureEquity, 3.0, 1.0),
            rec(EventKind::MergerAcquisition, 5.0, 2.0),
            rec(EventKind::NoEvent, 9.0, 0.5),
        ];
        let ve = CauseSpec::new("financing", [EventKind::VentureEquity]).unwrap();
        let out = recensor_by_cause(&recs, &ve);
        assert!(out[0].event_occurred);
        assert!(!out[1].event_occurred);
        assert_eq!(out[1].duration_weeks, 5.0);
        assert_eq!(out[2], recs[2]);
        let all = CauseSpec::new(
            "all",
            [
                EventKind::VentureEquity,
                EventKind::MergerAcquisition,
                EventKind::Ipo,
            ],
        )
        .unwrap();
        assert_eq!(recensor_by_cause(&recs, &all), recs);
    }

    #[test]
    fn partition_and_overlap() {
        let recs = vec![
            rec(EventKind::VentureEquity, 3.0, 1.0),
            rec(EventKind::MergerAcquisition, 5.0, 2.0),
            rec(EventKind::Ipo, 6.0, 2.0),
            rec(EventKind::NoEvent, 9.0, 0.5),
        ];
        let a: CauseSpec = "f=VE".parse().unwrap();
        let b: CauseSpec = "m=MA".parse().unwrap();
        let p = event_partition(&recs, &[a.clone(), b.clone()]).unwrap();
        assert_eq!(p.per_cause, vec![("f".into(), 1), ("m".into(), 1)]);
        assert_eq!((p.no_event, p.unassigned, p.total), (1, 1, 4));
        assert!(p.is_conserved());
        let overlap: CauseSpec = "x=MA,IPO".parse().unwrap();
        assert!(event_partition(&recs, &[b, overlap]).is_err());
    }
}
