//! Panel files: parsing, validation, writing, covariate construction and
//! descriptive summaries.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{ColumnKind, ColumnMeta, DesignMatrix};
use crate::diagnostics::{augment_with_time_interactions, TimeScale};
use crate::error::{Error, Result, SchemaMismatch};
use crate::km::{kaplan_meier, logrank_test, LogrankResult, Quartiles};
use crate::records::{build_risk_index, CompanyType, EventKind, IntervalRecord};

/// Header of a panel file. Column order in a file is free.
pub const PANEL_COLUMNS: [&str; 14] = [
    "company_name",
    "company_type",
    "investment_type",
    "investment_amount_musd",
    "total_capital_raised_musd",
    "round_name",
    "round_number",
    "weeks_since_first",
    "weeks_since_last",
    "event_occurred",
    "has_trends_data",
    "trends_delta_pct",
    "has_traffic_data",
    "traffic_delta_pct",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RowRejection {
    /// 1-based line in the file (the header is line 1).
    pub line: u64,
    pub invariant: String,
    pub detail: String,
}

impl fmt::Display for RowRejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}: {}", self.line, self.invariant, self.detail)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct RejectionReport {
    pub rows: Vec<RowRejection>,
}

impl RejectionReport {
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }
}

impl fmt::Display for RejectionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} row(s) rejected", self.rows.len())?;
        for r in &self.rows {
            writeln!(f, "  {r}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedPanel {
    pub records: Vec<IntervalRecord>,
    pub rejections: RejectionReport,
}

/// Reads and validates a panel file.
pub fn load_panel(path: impl AsRef<Path>) -> Result<LoadedPanel> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    let mut text = String::new();
    File::open(path)
        .map_err(io)?
        .read_to_string(&mut text)
        .map_err(io)?;
    parse_panel(&text)
}

/// Parses panel text; the delimiter (tab or comma) is taken from the header.
pub fn parse_panel(text: &str) -> Result<LoadedPanel> {
    let header_line = text.lines().next().unwrap_or("");
    if header_line.trim().is_empty() {
        return Err(Error::Schema(SchemaMismatch {
            missing: PANEL_COLUMNS.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }));
    }
    let delimiter = if header_line.contains('\t') {
        b'\t'
    } else {
        b','
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Malformed(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let positions = check_header(&header)?;

    let mut records = Vec::new();
    let mut rejections = RejectionReport::default();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                rejections.rows.push(RowRejection {
                    line,
                    invariant: "parse".into(),
                    detail: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        if row.len() != header.len() {
            rejections.rows.push(RowRejection {
                line,
                invariant: "field_count".into(),
                detail: format!("{} fields, header has {}", row.len(), header.len()),
            });
            continue;
        }
        let get = |col: usize| row.get(positions[col]).unwrap_or("").trim();
        match parse_row(get).and_then(|r| {
            r.validate()
                .map(|_| r)
                .map_err(|v| (v.invariant.to_string(), v.detail))
        }) {
            Ok(r) => records.push(r),
            Err((invariant, detail)) => rejections.rows.push(RowRejection {
                line,
                invariant,
                detail,
            }),
        }
    }
    if records.is_empty() && rejections.is_empty() {
        return Err(Error::EmptyInput("panel has a header but no data rows"));
    }
    Ok(LoadedPanel {
        records,
        rejections,
    })
}

/// Position in `header` of every [`PANEL_COLUMNS`] entry.
fn check_header(header: &[String]) -> Result<Vec<usize>> {
    let mut mismatch = SchemaMismatch::default();
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) && !mismatch.duplicated.contains(h) {
            mismatch.duplicated.push(h.clone());
        }
        if !PANEL_COLUMNS.contains(&h.as_str()) {
            mismatch.extra.push(h.clone());
        }
    }
    let mut positions = Vec::with_capacity(PANEL_COLUMNS.len());
    for c in PANEL_COLUMNS {
        match header.iter().position(|h| h == c) {
            Some(p) => positions.push(p),
            None => mismatch.missing.push(c.to_string()),
        }
    }
    if mismatch == SchemaMismatch::default() {
        Ok(positions)
    } else {
        Err(Error::Schema(mismatch))
    }
}

type RowError = (String, String);

fn parse_row<'a>(get: impl Fn(usize) -> &'a str) -> std::result::Result<IntervalRecord, RowError> {
    let num = |col: usize| -> std::result::Result<f64, RowError> {
        let s = get(col);
        s.parse::<f64>().map_err(|_| {
            (
                "parse".into(),
                format!("{} = `{s}` is not a number", PANEL_COLUMNS[col]),
            )
        })
    };
    let flag = |col: usize| -> std::result::Result<bool, RowError> {
        match get(col) {
            "0" => Ok(false),
            "1" => Ok(true),
            s => Err((
                "parse".into(),
                format!("{} = `{s}` (expected 0 or 1)", PANEL_COLUMNS[col]),
            )),
        }
    };
    let delta = |flag_col: usize, col: usize| -> std::result::Result<Option<f64>, RowError> {
        let present = flag(flag_col)?;
        let raw = get(col);
        match (present, raw.is_empty()) {
            (true, false) => num(col).map(Some),
            (false, true) => Ok(None),
            (true, true) => Err((
                format!(
                    "{}_presence",
                    &PANEL_COLUMNS[col][..PANEL_COLUMNS[col].len() - 10]
                ),
                format!(
                    "{} = 1 but {} is empty",
                    PANEL_COLUMNS[flag_col], PANEL_COLUMNS[col]
                ),
            )),
            (false, false) => Err((
                format!(
                    "{}_presence",
                    &PANEL_COLUMNS[col][..PANEL_COLUMNS[col].len() - 10]
                ),
                format!(
                    "{} = 0 but {} = `{raw}`",
                    PANEL_COLUMNS[flag_col], PANEL_COLUMNS[col]
                ),
            )),
        }
    };
    let parse_err = |e: Error| -> RowError {
        let msg = e.to_string();
        (
            "parse".into(),
            msg.trim_start_matches("invalid argument: ").to_string(),
        )
    };
    let round = get(6);
    Ok(IntervalRecord {
        company_id: get(0).to_string(),
        company_type: CompanyType::from_str(get(1)).map_err(parse_err)?,
        event_kind: EventKind::from_str(get(2)).map_err(parse_err)?,
        investment_amount: num(3)?,
        total_capital_raised: num(4)?,
        round_name: get(5).to_string(),
        round_number: round.parse().map_err(|_| {
            (
                "parse".to_string(),
                format!("round_number = `{round}` is not a whole number"),
            )
        })?,
        weeks_since_first: num(7)?,
        duration_weeks: num(8)?,
        event_occurred: flag(9)?,
        trends_delta: delta(10, 11)?,
        traffic_delta: delta(12, 13)?,
    })
}

/// Writes records as a tab-separated panel. Numbers use the shortest
/// representation that reads back to the same value.
pub fn write_panel<W: Write>(records: &[IntervalRecord], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    let err = |e: csv::Error| Error::Malformed(e.to_string());
    w.write_record(PANEL_COLUMNS).map_err(err)?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.company_id.clone(),
            r.company_type.code().to_string(),
            r.event_kind.code().to_string(),
            r.investment_amount.to_string(),
            r.total_capital_raised.to_string(),
            r.round_name.clone(),
            r.round_number.to_string(),
            r.weeks_since_first.to_string(),
            r.duration_weeks.to_string(),
            u8::from(r.event_occurred).to_string(),
            u8::from(r.has_trends_data()).to_string(),
            opt(r.trends_delta),
            u8::from(r.has_traffic_data()).to_string(),
            opt(r.traffic_delta),
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: "<panel output>".into(),
        source: e,
    })
}

pub fn save_panel(path: impl AsRef<Path>, records: &[IntervalRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_panel(records, std::io::BufWriter::new(file))
}

/// A design column derived from record fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Covariate {
    LogTotalCapital,
    RoundNumber,
    WeeksSinceFirst,
    TrafficDelta,
    HasTrafficData,
    HasTrendsData,
    TrendsDelta,
    TrendsDeltaSign,
    CompanyTypeEp,
    CompanyTypePl,
}

impl Covariate {
    pub const ALL: [Covariate; 10] = [
        Covariate::LogTotalCapital,
        Covariate::RoundNumber,
        Covariate::WeeksSinceFirst,
        Covariate::TrafficDelta,
        Covariate::HasTrafficData,
        Covariate::HasTrendsData,
        Covariate::TrendsDelta,
        Covariate::TrendsDeltaSign,
        Covariate::CompanyTypeEp,
        Covariate::CompanyTypePl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Covariate::LogTotalCapital => "Log(totalCapital)",
            Covariate::RoundNumber => "roundNumber",
            Covariate::WeeksSinceFirst => "weeksSinceFirst",
            Covariate::TrafficDelta => "trafficDelta",
            Covariate::HasTrafficData => "hasTrafficData",
            Covariate::HasTrendsData => "hasTrendsData",
            Covariate::TrendsDelta => "trendsDelta",
            Covariate::TrendsDeltaSign => "trendsDeltaSign",
            Covariate::CompanyTypeEp => "companyType=EP",
            Covariate::CompanyTypePl => "companyType=PL",
        }
    }

    pub fn kind(self) -> ColumnKind {
        match self {
            Covariate::HasTrafficData
            | Covariate::HasTrendsData
            | Covariate::TrendsDeltaSign
            | Covariate::CompanyTypeEp
            | Covariate::CompanyTypePl => ColumnKind::Indicator,
            _ => ColumnKind::Continuous,
        }
    }

    /// Derivation note printed under tables, empty when the column is a
    /// plain field.
    pub fn note(self) -> &'static str {
        match self {
            Covariate::LogTotalCapital => "ln(1 + total capital raised in $M); the +1 keeps first rounds with zero capital defined",
            Covariate::TrafficDelta => "traffic delta in %, 0 when the company has no traffic data",
            Covariate::TrendsDelta => "search trends delta in %, 0 when the company has no trends data",
            Covariate::TrendsDeltaSign => "1 if trendsDelta > 0 else 0 (assumed coding)",
            Covariate::CompanyTypeEp | Covariate::CompanyTypePl => "dummy coding, Consumer Product is the reference",
            _ => "",
        }
    }

    pub fn value(self, r: &IntervalRecord) -> f64 {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match self {
            Covariate::LogTotalCapital => r.total_capital_raised.ln_1p(),
            Covariate::RoundNumber => f64::from(r.round_number),
            Covariate::WeeksSinceFirst => r.weeks_since_first,
            Covariate::TrafficDelta => r.traffic_delta.unwrap_or(0.0),
            Covariate::HasTrafficData => ind(r.has_traffic_data()),
            Covariate::HasTrendsData => ind(r.has_trends_data()),
            Covariate::TrendsDelta => r.trends_delta.unwrap_or(0.0),
            Covariate::TrendsDeltaSign => ind(r.trends_delta.is_some_and(|v| v > 0.0)),
            Covariate::CompanyTypeEp => ind(r.company_type == CompanyType::EnterpriseProduct),
            Covariate::CompanyTypePl => ind(r.company_type == CompanyType::Platform),
        }
    }
}

impl FromStr for Covariate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Covariate::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Covariate::ALL.iter().map(|c| c.name()).collect();
                Error::invalid(format!(
                    "unknown covariate `{s}` (known: {})",
                    known.join(", ")
                ))
            })
    }
}

impl fmt::Display for Covariate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Covariate {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Covariate {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// `covariate:timeScale`, e.g. `roundNumber:yearsSinceFirst`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TimeInteraction {
    pub covariate: String,
    pub scale: TimeScale,
}

impl FromStr for TimeInteraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (cov, scale) = s.rsplit_once(':').ok_or_else(|| {
            Error::invalid(format!(
                "time interaction `{s}` is not of the form covariate:timeScale"
            ))
        })?;
        Ok(Self {
            covariate: cov.trim().to_string(),
            scale: scale.parse()?,
        })
    }
}

impl fmt::Display for TimeInteraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.covariate, self.scale.name())
    }
}

impl Serialize for TimeInteraction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TimeInteraction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ordered list of design columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CovariateRecipe {
    pub covariates: Vec<Covariate>,
    #[serde(default)]
    pub time_interactions: Vec<TimeInteraction>,
}

impl Default for CovariateRecipe {
    /// The nine columns of the risk-oblivious funding-stage model.
    fn default() -> Self {
        Self {
            covariates: vec![
                Covariate::LogTotalCapital,
                Covariate::RoundNumber,
                Covariate::WeeksSinceFirst,
                Covariate::TrafficDelta,
                Covariate::HasTrendsData,
                Covariate::TrendsDelta,
                Covariate::TrendsDeltaSign,
                Covariate::CompanyTypeEp,
                Covariate::CompanyTypePl,
            ],
            time_interactions: Vec::new(),
        }
    }
}

impl CovariateRecipe {
    /// Parses a recipe document, either bare or under a `recipe` key (as in a
    /// simulation sidecar).
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Malformed(format!("recipe: {e}")))?;
        let inner = value.get("recipe").cloned().unwrap_or(value);
        serde_json::from_value(inner).map_err(|e| Error::Malformed(format!("recipe: {e}")))
    }

    pub fn with_standard_interactions(mut self) -> Self {
        for (covariate, scale) in crate::diagnostics::standard_time_interactions() {
            let ti = TimeInteraction { covariate, scale };
            if !self.time_interactions.contains(&ti) {
                self.time_interactions.push(ti);
            }
        }
        self
    }

    /// Recipe columns in order, interactions last.
    pub fn column_names(&self) -> Vec<String> {
        self.covariates
            .iter()
            .map(|c| c.name().to_string())
            .chain(self.time_interactions.iter().map(|t| t.to_string()))
            .collect()
    }
}

/// Builds the numeric design for a set of validated records.
pub fn build_design(records: &[IntervalRecord], recipe: &CovariateRecipe) -> Result<DesignMatrix> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records for the design"));
    }
    if recipe.covariates.is_empty() {
        return Err(Error::invalid("recipe has no covariates"));
    }
    let columns = recipe
        .covariates
        .iter()
        .map(|c| ColumnMeta::new(c.name(), c.kind(), c.note()))
        .collect();
    let mut values = Vec::with_capacity(records.len() * recipe.covariates.len());
    for r in records {
        values.extend(recipe.covariates.iter().map(|c| c.value(r)));
    }
    let design = DesignMatrix::from_parts(
        columns,
        values,
        records.iter().map(|r| r.duration_weeks).collect(),
        records.iter().map(|r| r.event_occurred).collect(),
        Some(records.iter().map(|r| r.weeks_since_first).collect()),
    )?;
    let pairs: Vec<(String, TimeScale)> = recipe
        .time_interactions
        .iter()
        .map(|t| (t.covariate.clone(), t.scale))
        .collect();
    augment_with_time_interactions(&design, &pairs)
}

/// Min, quartiles (linear interpolation between order statistics), mean, max.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Distribution {
    pub label: String,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub mean: f64,
    pub q3: f64,
    pub max: f64,
}

/// Sample quantile with `h = (n - 1) p` and linear interpolation.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

impl Distribution {
    /// `None` for an empty sample.
    pub fn of(label: impl Into<String>, values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Self {
            label: label.into(),
            n: v.len(),
            min: v[0],
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q3: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub label: String,
    pub count: usize,
    pub percent: f64,
}

fn count_rows<K: Ord>(
    items: impl Iterator<Item = K>,
    total: usize,
    label: impl Fn(&K) -> String,
) -> Vec<CountRow> {
    let mut counts: BTreeMap<K, usize> = BTreeMap::new();
    for k in items {
        *counts.entry(k).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(k, count)| CountRow {
            label: label(&k),
            count,
            percent: 100.0 * count as f64 / total as f64,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PanelSummary {
    pub n_records: usize,
    pub n_companies: usize,
    pub event_types: Vec<CountRow>,
    pub investment_amounts: Vec<Distribution>,
    pub round_numbers: Distribution,
    pub round_counts: Vec<CountRow>,
    pub company_types: Vec<CountRow>,
    pub durations: Distribution,
    pub durations_by_event: Vec<Distribution>,
    pub km_quartiles: Option<Quartiles>,
    /// Logrank comparison of durations across the event types present.
    pub event_type_logrank: Option<LogrankResult>,
    pub trends_records: usize,
    pub trends_delta: Option<Distribution>,
    pub traffic_records: usize,
    pub traffic_delta: Option<Distribution>,
}

/// Descriptive tables of a validated panel. Output does not depend on the
/// order of `records`.
pub fn summarize_panel(records: &[IntervalRecord]) -> Result<PanelSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput("no records to summarize"));
    }
    let n = records.len();
    let mut companies: Vec<&str> = records.iter().map(|r| r.company_id.as_str()).collect();
    companies.sort_unstable();
    companies.dedup();

    let mut event_types: Vec<CountRow> = EventKind::ALL
        .iter()
        .map(|&k| {
            let count = records.iter().filter(|r| r.event_kind == k).count();
            CountRow {
                label: k.label().to_string(),
                count,
                percent: 100.0 * count as f64 / n as f64,
            }
        })
        .collect();
    event_types.push(CountRow {
        label: "Total".into(),
        count: n,
        percent: 100.0,
    });

    let by_kind = |k: EventKind, f: fn(&IntervalRecord) -> f64| {
        Distribution::of(
            k.label(),
            records.iter().filter(|r| r.event_kind == k).map(f),
        )
    };
    let mut investment_amounts: Vec<Distribution> = EventKind::ALL
        .iter()
        .filter(|k| k.is_event())
        .filter_map(|&k| by_kind(k, |r| r.investment_amount))
        .collect();
    investment_amounts.extend(Distribution::of(
        "Total",
        records.iter().map(|r| r.investment_amount),
    ));

    let mut company_types: Vec<CountRow> = CompanyType::ALL
        .iter()
        .map(|&c| {
            let count = records.iter().filter(|r| r.company_type == c).count();
            CountRow {
                label: c.label().to_string(),
                count,
                percent: 100.0 * count as f64 / n as f64,
            }
        })
        .collect();
    company_types.push(CountRow {
        label: "Total".into(),
        count: n,
        percent: 100.0,
    });

    let durations_by_event: Vec<Distribution> = EventKind::ALL
        .iter()
        .filter_map(|&k| by_kind(k, |r| r.duration_weeks))
        .collect();

    let index = build_risk_index(records)?;
    let km = kaplan_meier(&index);

    let mut groups = Vec::new();
    for k in EventKind::ALL.iter().filter(|k| k.is_event()) {
        let members: Vec<IntervalRecord> = records
            .iter()
            .filter(|r| r.event_kind == *k)
            .cloned()
            .collect();
        if !members.is_empty() {
            groups.push(build_risk_index(&members)?);
        }
    }
    let event_type_logrank = if groups.len() >= 2 {
        logrank_test(&groups).ok()
    } else {
        None
    };

    let trends: Vec<f64> = records.iter().filter_map(|r| r.trends_delta).collect();
    let traffic: Vec<f64> = records.iter().filter_map(|r| r.traffic_delta).collect();
    Ok(PanelSummary {
        n_records: n,
        n_companies: companies.len(),
        event_types,
        investment_amounts,
        round_numbers: Distribution::of(
            "Round number",
            records.iter().map(|r| f64::from(r.round_number)),
        )
        .expect("non-empty"),
        round_counts: count_rows(records.iter().map(|r| r.round_number), n, |k| k.to_string()),
        company_types,
        durations: Distribution::of("All", records.iter().map(|r| r.duration_weeks))
            .expect("non-empty"),
        durations_by_event,
        km_quartiles: km.quartiles,
        event_type_logrank,
        trends_records: trends.len(),
        trends_delta: Distribution::of("Trends delta", trends),
        traffic_records: traffic.len(),
        traffic_delta: Distribution::of("Traffic delta", traffic),
    })
}
