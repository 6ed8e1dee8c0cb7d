#![allow(dead_code)]

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stagesurv::design::ColumnMeta;
use stagesurv::diagnostics::schoenfeld_residuals;
use stagesurv::records::{CompanyType, EventKind, IntervalRecord};
use stagesurv::{CoxFit, DesignMatrix};

/// Writes one result line straight to stderr so it shows without `--nocapture`.
pub fn report(id: usize, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[criterion {id:>2}] {name}: {verdict} ({detail})\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

pub fn design(rows: Vec<Vec<f64>>, durations: Vec<f64>, events: Vec<bool>) -> DesignMatrix {
    let k = rows.first().map_or(0, Vec::len);
    let cols = (0..k)
        .map(|j| ColumnMeta::continuous(format!("x{j}")))
        .collect();
    DesignMatrix::new(cols, rows, durations, events).unwrap()
}

/// Small instance with integer durations (ties likely) and mixed censoring.
pub fn small_instance(seed: u64, n_range: (usize, usize), k: usize, max_time: u32) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let n = rng.random_range(n_range.0..=n_range.1);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let t: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(1..=max_time)))
            .collect();
        let e: Vec<bool> = (0..n).map(|_| rng.random_bool(0.7)).collect();
        let varies = (0..k).all(|j| rows.iter().any(|r| (r[j] - rows[0][j]).abs() > 1e-9));
        if e.iter().any(|&x| x) && varies {
            return design(rows, t, e);
        }
    }
}

/// Breslow log partial likelihood summed straight from the definition.
pub fn naive_breslow(d: &DesignMatrix, beta: &[f64]) -> f64 {
    let n = d.n_rows();
    let eta: Vec<f64> = (0..n)
        .map(|i| d.row(i).iter().zip(beta).map(|(a, b)| a * b).sum())
        .collect();
    let t = d.durations();
    let mut ll = 0.0;
    for i in 0..n {
        if !d.events()[i] {
            continue;
        }
        let denom: f64 = (0..n).filter(|&j| t[j] >= t[i]).map(|j| eta[j].exp()).sum();
        ll += eta[i] - denom.ln();
    }
    ll
}

/// Max |column sum| of the Schoenfeld residuals, relative to the event count.
pub fn score_residual_ratio(d: &DesignMatrix, fit: &CoxFit) -> f64 {
    let r = schoenfeld_residuals(d, fit).unwrap();
    let m = r.n_events() as f64;
    r.column_sums().iter().fold(0.0_f64, |a, s| a.max(s.abs())) / m
}

/// A valid panel record with pseudo-random covariates derived from `id`.
pub fn record(id: usize, kind: EventKind, duration: f64) -> IntervalRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(id as u64 ^ 0x5eed);
    IntervalRecord {
        company_id: format!("c{id}"),
        company_type: CompanyType::ALL[rng.random_range(0..3)],
        event_kind: kind,
        investment_amount: if kind.is_event() {
            rng.random_range(0.5..20.0)
        } else {
            0.0
        },
        total_capital_raised: rng.random_range(0.0..50.0),
        round_name: "A".into(),
        round_number: rng.random_range(1..6),
        weeks_since_first: rng.random_range(0.0..200.0_f64).floor(),
        duration_weeks: duration,
        event_occurred: kind.is_event(),
        trends_delta: rng.random_bool(0.6).then(|| rng.random_range(-50.0..50.0)),
        traffic_delta: rng.random_bool(0.5).then(|| rng.random_range(-50.0..50.0)),
    }
}

/// Kolmogorov distance between the empirical law of `p` and U(0, 1).
pub fn ks_uniform(p: &mut [f64]) -> f64 {
    p.sort_by(f64::total_cmp);
    let n = p.len() as f64;
    p.iter().enumerate().fold(0.0_f64, |d, (i, &v)| {
        let lo = v - i as f64 / n;
        let hi = (i + 1) as f64 / n - v;
        d.max(lo).max(hi)
    })
}
