//! Interval records and the risk-set index built over them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What ended an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EventKind {
    VentureEquity,
    MergerAcquisition,
    Ipo,
    NoEvent,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::VentureEquity,
        EventKind::MergerAcquisition,
        EventKind::Ipo,
        EventKind::NoEvent,
    ];

    /// Short code used in panel files and on the command line.
    pub fn code(self) -> &'static str {
        match self {
            EventKind::VentureEquity => "VE",
            EventKind::MergerAcquisition => "MA",
            EventKind::Ipo => "IPO",
            EventKind::NoEvent => "NONE",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            EventKind::VentureEquity => "Venture Equity",
            EventKind::MergerAcquisition => "M&A",
            EventKind::Ipo => "IPO",
            EventKind::NoEvent => "No Event",
        }
    }

    pub fn is_event(self) -> bool {
        self != EventKind::NoEvent
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "VE" => Ok(EventKind::VentureEquity),
            "MA" => Ok(EventKind::MergerAcquisition),
            "IPO" => Ok(EventKind::Ipo),
            "NONE" => Ok(EventKind::NoEvent),
            other => Err(Error::invalid(format!(
                "unknown event kind `{other}` (expected VE, MA, IPO or NONE)"
            ))),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompanyType {
    ConsumerProduct,
    EnterpriseProduct,
    Platform,
}

impl CompanyType {
    pub const ALL: [CompanyType; 3] = [
        CompanyType::ConsumerProduct,
        CompanyType::EnterpriseProduct,
        CompanyType::Platform,
    ];

    pub fn code(self) -> &'static str {
        match self {
            CompanyType::ConsumerProduct => "CP",
            CompanyType::EnterpriseProduct => "EP",
            CompanyType::Platform => "PL",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CompanyType::ConsumerProduct => "Consumer Product",
            CompanyType::EnterpriseProduct => "Enterprise Product",
            CompanyType::Platform => "Platform",
        }
    }
}

impl FromStr for CompanyType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "CP" => Ok(CompanyType::ConsumerProduct),
            "EP" => Ok(CompanyType::EnterpriseProduct),
            "PL" => Ok(CompanyType::Platform),
            other => Err(Error::invalid(format!(
                "unknown company type `{other}` (expected CP, EP or PL)"
            ))),
        }
    }
}

impl fmt::Display for CompanyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

/// One duration between two consecutive events of a company.
///
/// Money is in millions of dollars, time in weeks. `duration_weeks` is the
/// dependent variable ("weeks since last investment"). The two delta fields
/// are percent changes and are `None` exactly when the company has no data
/// for that source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub company_id: String,
    pub company_type: CompanyType,
    pub event_kind: EventKind,
    pub investment_amount: f64,
    pub total_capital_raised: f64,
    pub round_name: String,
    pub round_number: u32,
    pub weeks_since_first: f64,
    pub duration_weeks: f64,
    pub event_occurred: bool,
    pub trends_delta: Option<f64>,
    pub traffic_delta: Option<f64>,
}

/// A broken record invariant, named so rejection reports can group them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

impl IntervalRecord {
    pub fn has_trends_data(&self) -> bool {
        self.trends_delta.is_some()
    }

    pub fn has_traffic_data(&self) -> bool {
        self.traffic_delta.is_some()
    }

    /// Checks the ingestion invariants. Recensored copies (see
    /// [`crate::competing::recensor_by_cause`]) intentionally fail the
    /// event-flag check and are never re-validated.
    pub fn validate(&self) -> std::result::Result<(), Violation> {
        let fail = |invariant, detail: String| Err(Violation { invariant, detail });
        if !(self.duration_weeks.is_finite() && self.duration_weeks >= 1.0) {
            return fail(
                "duration_at_least_one_week",
                format!("weeks_since_last = {} (must be >= 1)", self.duration_weeks),
            );
        }
        if !(self.weeks_since_first.is_finite() && self.weeks_since_first >= 0.0) {
            return fail(
                "weeks_since_first_nonnegative",
                format!("weeks_since_first = {}", self.weeks_since_first),
            );
        }
        if self.round_number < 1 {
            return fail("round_number_positive", "round_number = 0".to_string());
        }
        if !(self.investment_amount.is_finite() && self.investment_amount >= 0.0) {
            return fail(
                "investment_amount_nonnegative",
                format!("investment_amount_musd = {}", self.investment_amount),
            );
        }
        if !(self.total_capital_raised.is_finite() && self.total_capital_raised >= 0.0) {
            return fail(
                "total_capital_nonnegative",
                format!("total_capital_raised_musd = {}", self.total_capital_raised),
            );
        }
        if self.event_occurred != self.event_kind.is_event() {
            return fail(
                "event_flag_matches_kind",
                format!(
                    "investment_type = {} but event_occurred = {}",
                    self.event_kind.code(),
                    u8::from(self.event_occurred)
                ),
            );
        }
        for (name, v) in [
            ("trends_delta_pct", self.trends_delta),
            ("traffic_delta_pct", self.traffic_delta),
        ] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return fail("delta_finite", format!("{name} = {v}"));
                }
            }
        }
        Ok(())
    }

    /// Label used to identify the record inside a [`RiskSetIndex`].
    pub fn label(&self) -> String {
        format!("{}#{}", self.company_id, self.round_number)
    }
}

/// Distinct event times with their risk and failure sets.
///
/// Risk sets are stored as suffixes of one duration-sorted permutation, so
/// `risk_set(i + 1)` is always a sub-slice of `risk_set(i)`. Members are
/// positions in the input slice the index was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskSetIndex {
    labels: Vec<String>,
    durations: Vec<f64>,
    events: Vec<bool>,
    order: Vec<usize>,
    times: Vec<f64>,
    risk_start: Vec<usize>,
    failures: Vec<Vec<usize>>,
}

/// Builds the risk-set index of a list of records.
pub fn build_risk_index(records: &[IntervalRecord]) -> Result<RiskSetIndex> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to index"));
    }
    if let Some(r) = records
        .iter()
        .find(|r| !(r.duration_weeks.is_finite() && r.duration_weeks >= 1.0))
    {
        return Err(Error::invalid(format!(
            "record {} has duration {} (durations must be >= 1 week)",
            r.label(),
            r.duration_weeks
        )));
    }
    let durations: Vec<f64> = records.iter().map(|r| r.duration_weeks).collect();
    let events: Vec<bool> = records.iter().map(|r| r.event_occurred).collect();
    let labels = records.iter().map(IntervalRecord::label).collect();
    RiskSetIndex::build(durations, events, labels)
}

impl RiskSetIndex {
    /// Index over bare (duration, event) pairs; labels are the positions.
    pub fn from_times(durations: &[f64], events: &[bool]) -> Result<Self> {
        if durations.is_empty() {
            return Err(Error::EmptyInput("no durations to index"));
        }
        if durations.len() != events.len() {
            return Err(Error::invalid("durations and events differ in length"));
        }
        if durations.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::invalid("durations must be finite and positive"));
        }
        let labels = (0..durations.len()).map(|i| i.to_string()).collect();
        Self::build(durations.to_vec(), events.to_vec(), labels)
    }

    fn build(durations: Vec<f64>, events: Vec<bool>, labels: Vec<String>) -> Result<Self> {
        let mut order: Vec<usize> = (0..durations.len()).collect();
        order.sort_by(|&a, &b| durations[a].total_cmp(&durations[b]));

        let mut times = Vec::new();
        let mut risk_start = Vec::new();
        let mut failures = Vec::new();
        let mut pos = 0;
        while pos < order.len() {
            let t = durations[order[pos]];
            let mut end = pos;
            while end < order.len() && durations[order[end]] == t {
                end += 1;
            }
            let failed: Vec<usize> = order[pos..end]
                .iter()
                .copied()
                .filter(|&i| events[i])
                .collect();
            if !failed.is_empty() {
                times.push(t);
                risk_start.push(pos);
                failures.push(failed);
            }
            pos = end;
        }
        Ok(Self {
            labels,
            durations,
            events,
            order,
            times,
            risk_start,
            failures,
        })
    }

    /// Number of distinct event times `m`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n_records(&self) -> usize {
        self.durations.len()
    }

    pub fn total_events(&self) -> usize {
        self.events.iter().filter(|&&e| e).count()
    }

    pub fn event_times(&self) -> &[f64] {
        &self.times
    }

    pub fn risk_set(&self, i: usize) -> &[usize] {
        &self.order[self.risk_start[i]..]
    }

    pub fn failures(&self, i: usize) -> &[usize] {
        &self.failures[i]
    }

    pub fn n_at_risk(&self, i: usize) -> usize {
        self.order.len() - self.risk_start[i]
    }

    pub fn n_events(&self, i: usize) -> usize {
        self.failures[i].len()
    }

    pub fn label(&self, record: usize) -> &str {
        &self.labels[record]
    }

    pub fn durations(&self) -> &[f64] {
        &self.durations
    }

    pub fn events(&self) -> &[bool] {
        &self.events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, duration: f64, event: bool) -> IntervalRecord {
        IntervalRecord {
            company_id: id.to_string(),
            company_type: CompanyType::ConsumerProduct,
            event_kind: if event {
                EventKind::VentureEquity
            } else {
                EventKind::NoEvent
            },
            investment_amount: 0.0,
            total_capital_raised: 0.0,
            round_name: "Seed".to_string(),
            round_number: 1,
            weeks_since_first: 0.0,
            duration_weeks: duration,
            event_occurred: event,
            trends_delta: None,
            traffic_delta: None,
        }
    }

    #[test]
    fn three_record_example() {
        let rs = vec![
            rec("a", 1.0, true),
            rec("b", 2.0, true),
            rec("c", 3.0, false),
        ];
        let idx = build_risk_index(&rs).unwrap();
        assert_eq!(idx.event_times(), &[1.0, 2.0]);
        let mut r0 = idx.risk_set(0).to_vec();
        r0.sort();
        assert_eq!(r0, vec![0, 1, 2]);
        let mut r1 = idx.risk_set(1).to_vec();
        r1.sort();
        assert_eq!(r1, vec![1, 2]);
        assert_eq!(idx.failures(0), &[0]);
        assert_eq!(idx.failures(1), &[1]);
    }

    #[test]
    fn all_censored_gives_empty_index() {
        let rs = vec![rec("a", 1.0, false), rec("b", 4.0, false)];
        let idx = build_risk_index(&rs).unwrap();
        assert!(idx.is_empty());
        assert_eq!(idx.total_events(), 0);
    }

    #[test]
    fn singleton() {
        let idx = build_risk_index(&[rec("a", 5.0, true)]).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.risk_set(0), &[0]);
        assert_eq!(idx.event_times(), &[5.0]);
    }

    #[test]
    fn empty_and_short_durations_rejected() {
        assert!(matches!(build_risk_index(&[]), Err(Error::EmptyInput(_))));
        assert!(build_risk_index(&[rec("a", 0.5, true)]).is_err());
    }

    #[test]
    fn ties_share_one_event_time() {
        let rs = vec![
            rec("a", 2.0, true),
            rec("b", 2.0, true),
            rec("c", 2.0, false),
            rec("d", 1.0, false),
        ];
        let idx = build_risk_index(&rs).unwrap();
        assert_eq!(idx.len(), 1);
        assert_eq!(idx.n_at_risk(0), 3);
        assert_eq!(idx.n_events(0), 2);
    }

    #[test]
    fn validation_names_the_invariant() {
        let mut r = rec("a", 3.0, true);
        r.event_kind = EventKind::NoEvent;
        assert_eq!(
            r.validate().unwrap_err().invariant,
            "event_flag_matches_kind"
        );
        let mut r = rec("a", 0.0, false);
        r.event_kind = EventKind::NoEvent;
        assert_eq!(
            r.validate().unwrap_err().invariant,
            "duration_at_least_one_week"
        );
    }

    #[test]
    fn codes_round_trip() {
        for k in EventKind::ALL {
            assert_eq!(k.code().parse::<EventKind>().unwrap(), k);
        }
        for c in CompanyType::ALL {
            assert_eq!(c.code().parse::<CompanyType>().unwrap(), c);
        }
        assert!("XX".parse::<EventKind>().is_err());
    }
}
