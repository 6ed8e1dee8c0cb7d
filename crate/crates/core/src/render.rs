//! Tab-separated tables (six significant digits) and JSON documents (full
//! precision) for every result type. Lines starting with `#` are comments.

use serde_json::{json, Value};

use crate::competing::{CauseOutcome, CompetingRiskReport};
use crate::cox::{ChiSquareTest, CoxFit};
use crate::diagnostics::{PhTestReport, ResidualMatrix};
use crate::km::Quartiles;
use crate::panel::{CountRow, Distribution, PanelSummary};

pub const FIT_HEADER: [&str; 6] = [
    "Covariate name",
    "Beta",
    "Exp(beta)",
    "Se(coef)",
    "Z",
    "Pr(>|z|)",
];
pub const LR_ROW: &str = "Likelihood ratio test";
pub const WALD_ROW: &str = "Wald test";
pub const SCORE_ROW: &str = "Score (logrank) test";

/// `x` rounded to `digits` significant digits, fixed notation for moderate
/// magnitudes and exponent notation otherwise; trailing zeros dropped.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "Inf".into() } else { "-Inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn g6(x: f64) -> String {
    fmt_sig(x, 6)
}

fn opt6(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), g6)
}

fn test_row(name: &str, t: &ChiSquareTest) -> String {
    format!("{name}\t{}\t{}\t{}\n", g6(t.statistic), t.df, g6(t.p_value))
}

/// One coefficient table with its footer rows and notes.
pub fn fit_table_tsv(title: &str, fit: &CoxFit, notes: &[String]) -> String {
    let mut s = format!(
        "# {title} (ties: {}, n = {}, events = {})\n",
        fit.ties, fit.n, fit.n_events
    );
    s.push_str(&FIT_HEADER.join("\t"));
    s.push('\n');
    for j in 0..fit.beta.len() {
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            fit.covariates[j],
            g6(fit.beta[j]),
            g6(fit.hazard_ratio[j]),
            g6(fit.se[j]),
            g6(fit.z[j]),
            g6(fit.p[j])
        ));
    }
    s.push('\n');
    s.push_str(&format!("Concordance\t{}\n", opt6(fit.concordance)));
    s.push_str(&format!("Rsquare\t{}\n", g6(fit.rsquare())));
    s.push_str(&test_row(LR_ROW, &fit.lr));
    s.push_str(&test_row(WALD_ROW, &fit.wald));
    s.push_str(&test_row(SCORE_ROW, &fit.score));
    for n in notes {
        s.push_str(&format!("# note: {n}\n"));
    }
    s
}

fn test_json(t: &ChiSquareTest) -> Value {
    json!({"statistic": t.statistic, "df": t.df, "p_value": t.p_value})
}

pub fn fit_json(title: &str, fit: &CoxFit, notes: &[String]) -> Value {
    let coefficients: Vec<Value> = (0..fit.beta.len())
        .map(|j| {
            json!({
                "covariate": fit.covariates[j],
                "beta": fit.beta[j],
                "exp_beta": fit.hazard_ratio[j],
                "se": fit.se[j],
                "z": fit.z[j],
                "p_value": fit.p[j],
            })
        })
        .collect();
    json!({
        "title": title,
        "ties": fit.ties,
        "n": fit.n,
        "n_events": fit.n_events,
        "coefficients": coefficients,
        "concordance": fit.concordance,
        "rsquare": fit.rsquare(),
        "loglik_null": fit.loglik_null,
        "loglik": fit.loglik_fit,
        "tests": {
            "likelihood_ratio": test_json(&fit.lr),
            "wald": test_json(&fit.wald),
            "score": test_json(&fit.score),
        },
        "iterations": fit.iterations.len() - 1,
        "notes": notes,
    })
}

pub fn ph_report_tsv(report: &PhTestReport, alpha: f64) -> String {
    let mut s = format!(
        "# Proportional hazards test of scaled Schoenfeld residuals (g = {}, events = {}, flag at p < {})\n",
        report.g_transform,
        report.n_events,
        g6(alpha)
    );
    s.push_str("Covariate\tTheta\tChisq\tDf\tP\tFlag\n");
    for c in &report.per_covariate {
        let flag = if c.p_value < alpha {
            "non-proportional"
        } else {
            ""
        };
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            c.name,
            g6(c.theta),
            g6(c.chi_square),
            c.df,
            g6(c.p_value),
            flag
        ));
    }
    let g = &report.global;
    let flag = if g.p_value < alpha {
        "non-proportional"
    } else {
        ""
    };
    s.push_str(&format!(
        "GLOBAL\t\t{}\t{}\t{}\t{}\n",
        g6(g.statistic),
        g.df,
        g6(g.p_value),
        flag
    ));
    s
}

pub fn ph_report_json(report: &PhTestReport, alpha: f64) -> Value {
    let per: Vec<Value> = report
        .per_covariate
        .iter()
        .map(|c| {
            json!({
                "covariate": c.name,
                "theta": c.theta,
                "chi_square": c.chi_square,
                "df": c.df,
                "p_value": c.p_value,
                "flagged": c.p_value < alpha,
            })
        })
        .collect();
    json!({
        "g_transform": report.g_transform,
        "n_events": report.n_events,
        "alpha": alpha,
        "per_covariate": per,
        "global": {
            "chi_square": report.global.statistic,
            "df": report.global.df,
            "p_value": report.global.p_value,
            "flagged": report.global.p_value < alpha,
        },
    })
}

/// Raw residuals, one row per event, at full precision.
pub fn residuals_tsv(resid: &ResidualMatrix) -> String {
    let mut s = String::from("event_time");
    for n in &resid.covariate_names {
        s.push('\t');
        s.push_str(n);
    }
    s.push('\n');
    for (t, row) in resid.event_times.iter().zip(&resid.residuals) {
        s.push_str(&t.to_string());
        for v in row {
            s.push('\t');
            s.push_str(&v.to_string());
        }
        s.push('\n');
    }
    s
}

fn count_block(title: &str, rows: &[CountRow]) -> String {
    let mut s = format!("# {title}\n");
    s.push_str(
        &rows
            .iter()
            .map(|r| r.label.as_str())
            .collect::<Vec<_>>()
            .join("\t"),
    );
    s.push('\n');
    s.push_str(
        &rows
            .iter()
            .map(|r| r.count.to_string())
            .collect::<Vec<_>>()
            .join("\t"),
    );
    s.push('\n');
    s.push_str(
        &rows
            .iter()
            .map(|r| format!("{}%", fmt_sig(r.percent, 4)))
            .collect::<Vec<_>>()
            .join("\t"),
    );
    s.push('\n');
    s
}

fn distribution_block<'a>(
    title: &str,
    rows: impl IntoIterator<Item = &'a Distribution>,
    with_mean: bool,
) -> String {
    let mut s = format!("# {title}\n");
    s.push_str(if with_mean {
        "\tN\tMin\t1st Qtl.\tMedian\tMean\t3rd Qtl.\tMax\n"
    } else {
        "\tN\tMin\t1st Qtl.\tMedian\t3rd Qtl.\tMax\n"
    });
    for d in rows {
        let mean = if with_mean {
            format!("\t{}", g6(d.mean))
        } else {
            String::new()
        };
        s.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}{}\t{}\t{}\n",
            d.label,
            d.n,
            g6(d.min),
            g6(d.q1),
            g6(d.median),
            mean,
            g6(d.q3),
            g6(d.max)
        ));
    }
    s
}

fn quartiles_line(q: &Option<Quartiles>) -> String {
    match q {
        None => "no events; survival stays at 1".to_string(),
        Some(q) => format!("{}\t{}\t{}", opt6(q.q25), opt6(q.median), opt6(q.q75)),
    }
}

pub fn summary_tsv(s: &PanelSummary) -> String {
    let mut out = format!(
        "# Panel: {} records, {} companies\n\n",
        s.n_records, s.n_companies
    );
    out.push_str(&count_block(
        "Event types present in the dataset",
        &s.event_types,
    ));
    out.push('\n');
    out.push_str(&distribution_block(
        "Investment amount distribution (in millions $)",
        &s.investment_amounts,
        true,
    ));
    out.push('\n');
    out.push_str(&distribution_block(
        "Round number distribution",
        [&s.round_numbers],
        true,
    ));
    out.push_str("# Round counts\n");
    out.push_str("Round\tCount\tPercent\n");
    for r in &s.round_counts {
        out.push_str(&format!(
            "{}\t{}\t{}%\n",
            r.label,
            r.count,
            fmt_sig(r.percent, 4)
        ));
    }
    out.push('\n');
    out.push_str(&count_block(
        "Company types present in the dataset",
        &s.company_types,
    ));
    out.push('\n');
    out.push_str(&distribution_block(
        "Times between events (in weeks)",
        [&s.durations],
        false,
    ));
    out.push_str(
        "# Kaplan-Meier survival quartiles (weeks at which S(t) reaches 0.75, 0.5, 0.25)\n",
    );
    out.push_str("Q25\tMedian\tQ75\n");
    out.push_str(&quartiles_line(&s.km_quartiles));
    out.push_str("\n\n");
    out.push_str(&distribution_block(
        "Event type dependent times (in weeks)",
        &s.durations_by_event,
        false,
    ));
    match &s.event_type_logrank {
        Some(l) => out.push_str(&format!(
            "Logrank test across event types\t{}\t{}\t{}\n",
            g6(l.chi_square),
            l.df,
            g6(l.p_value)
        )),
        None => {
            out.push_str("# logrank test across event types: fewer than two event types present\n")
        }
    }
    out.push('\n');
    out.push_str(&format!(
        "# Search trends delta ({} of {} records with trends data)\n",
        s.trends_records, s.n_records
    ));
    match &s.trends_delta {
        Some(d) => out.push_str(&distribution_block(
            "Search trends delta distribution (%)",
            [d],
            true,
        )),
        None => out.push_str("# no trends data\n"),
    }
    out.push('\n');
    out.push_str(&format!(
        "# Website traffic delta ({} of {} records with traffic data)\n",
        s.traffic_records, s.n_records
    ));
    match &s.traffic_delta {
        Some(d) => out.push_str(&distribution_block(
            "Website traffic delta distribution (%)",
            [d],
            true,
        )),
        None => out.push_str("# no traffic data\n"),
    }
    out
}

pub fn summary_json(s: &PanelSummary) -> Value {
    serde_json::to_value(s).expect("summary serializes")
}

pub fn competing_tsv(report: &CompetingRiskReport) -> String {
    let mut out = String::new();
    for (i, c) in report.causes.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("# Cause: {} ({} events)\n", c.cause, c.n_events));
        match &c.outcome {
            CauseOutcome::Fitted(fit) => out.push_str(&fit_table_tsv(
                &format!("Cause-specific Cox model: {}", c.cause.name),
                fit,
                &report.design_notes,
            )),
            CauseOutcome::InsufficientEvents => {
                out.push_str("INSUFFICIENT EVENTS\tno events of this cause; no model fitted\n")
            }
        }
    }
    let p = &report.partition;
    out.push_str("\n# Event partition\n");
    for (name, n) in &p.per_cause {
        out.push_str(&format!("{name}\t{n}\n"));
    }
    out.push_str(&format!(
        "other events (censored in every model)\t{}\n",
        p.unassigned
    ));
    out.push_str(&format!("no event\t{}\n", p.no_event));
    out.push_str(&format!("total\t{}\n", p.total));
    out
}

pub fn competing_json(report: &CompetingRiskReport) -> Value {
    let causes: Vec<Value> = report
        .causes
        .iter()
        .map(|c| {
            let fit = match &c.outcome {
                CauseOutcome::Fitted(fit) => fit_json(
                    &format!("Cause-specific Cox model: {}", c.cause.name),
                    fit,
                    &report.design_notes,
                ),
                CauseOutcome::InsufficientEvents => json!("insufficient_events"),
            };
            json!({
                "cause": c.cause.name,
                "kinds": c.cause.kinds.iter().map(|k| k.code()).collect::<Vec<_>>(),
                "n_events": c.n_events,
                "fit": fit,
            })
        })
        .collect();
    json!({
        "ties": report.ties,
        "covariates": report.covariates,
        "causes": causes,
        "partition": report.partition,
    })
}
