mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use stagesurv::competing::{event_partition, fit_competing, CauseOutcome};
use stagesurv::cox::partial_likelihood_derivatives;
use stagesurv::diagnostics::{augment_with_time_interactions, standard_time_interactions};
use stagesurv::records::EventKind;
use stagesurv::render::{fit_table_tsv, FIT_HEADER, LR_ROW, SCORE_ROW, WALD_ROW};
use stagesurv::synth::{CauseEffect, Scenario};
use stagesurv::{
    build_design, build_risk_index, fit_cox, generate, grambsch_therneau_test, kaplan_meier,
    log_partial_likelihood, logrank_test, percent_hazard_change, scale_residuals,
    schoenfeld_residuals, CauseSpec, CovariateRecipe, DesignMatrix, FitControls, GTransform,
    RiskSetIndex, TieMethod,
};

use common::{
    design, ks_uniform, naive_breslow, record, report, score_residual_ratio, small_instance,
};

const TIES: [TieMethod; 2] = [TieMethod::Breslow, TieMethod::Efron];

fn scenario(n: usize, seed: u64) -> Scenario {
    Scenario {
        n_subjects: n,
        seed,
        ..Scenario::default()
    }
}

fn scenario_design(n: usize, seed: u64) -> DesignMatrix {
    let s = scenario(n, seed);
    let (records, truth) = generate(&s).unwrap();
    build_design(&records, &truth.recipe).unwrap()
}

fn grid_argmax_1d(d: &DesignMatrix) -> f64 {
    let mut best = (f64::NEG_INFINITY, 0.0);
    for i in 0..=20_000 {
        let b = -10.0 + i as f64 * 1e-3;
        let ll = naive_breslow(d, &[b]);
        if ll > best.0 {
            best = (ll, b);
        }
    }
    best.1
}

fn grid_argmax_2d(d: &DesignMatrix) -> [f64; 2] {
    let mut centre = [0.0, 0.0];
    let mut half = 10.0;
    for step in [0.1_f64, 0.01, 1e-3] {
        let m = (half / step).round() as i64;
        let mut best = (f64::NEG_INFINITY, centre);
        for i in -m..=m {
            for j in -m..=m {
                let b = [centre[0] + i as f64 * step, centre[1] + j as f64 * step];
                if b.iter().any(|v| v.abs() > 10.0 + 1e-9) {
                    continue;
                }
                let ll = naive_breslow(d, &b);
                if ll > best.0 {
                    best = (ll, b);
                }
            }
        }
        centre = best.1;
        half = 2.0 * step;
    }
    centre
}

/// No information about beta: every event is alone in its risk set.
fn flat(d: &DesignMatrix) -> bool {
    let k = d.n_cols();
    let base = naive_breslow(d, &vec![0.0; k]);
    [-10.0, -1.0, 1.0, 10.0]
        .iter()
        .all(|&v| (naive_breslow(d, &vec![v; k]) - base).abs() < 1e-9)
}

#[test]
fn criterion_01_grid_search_oracle() {
    let start = Instant::now();
    let mut compared = 0;
    let mut worst: f64 = 0.0;
    let mut bad = Vec::new();
    for seed in 0..80u64 {
        let k = 1 + (seed % 2) as usize;
        let d = small_instance(1000 + seed, (4, 8), k, 6);
        let grid: Vec<f64> = if k == 1 {
            vec![grid_argmax_1d(&d)]
        } else {
            grid_argmax_2d(&d).to_vec()
        };
        match fit_cox(&d, TieMethod::Breslow, &FitControls::default()) {
            Ok(fit) if fit.beta.iter().all(|b| b.abs() < 9.5) => {
                let err = fit
                    .beta
                    .iter()
                    .zip(&grid)
                    .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(err);
                if err > 1e-3 {
                    bad.push(seed);
                }
                compared += 1;
            }
            Ok(_) => {}
            Err(_) => {
                if !grid.iter().any(|b| b.abs() > 9.0) && !flat(&d) {
                    bad.push(seed);
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = compared >= 20 && bad.is_empty() && secs < 5.0;
    report(
        1,
        "oracle equivalence",
        pass,
        &format!("{compared} instances, max |beta - grid| = {worst:.2e}, mismatches {bad:?}, {secs:.2} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_02_finite_differences() {
    let start = Instant::now();
    let h = 1e-6;
    let rel = |a: f64, f: f64| (a - f).abs() / a.abs().max(f.abs()).max(1e-3);
    let (mut worst_g, mut worst_h) = (0.0_f64, 0.0_f64);
    let mut checked = 0;
    for seed in 0..50u64 {
        let k = 1 + (seed % 3) as usize;
        let d = small_instance(2000 + seed, (5, 15), k, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        for ties in TIES {
            let pl = partial_likelihood_derivatives(&d, &beta, ties).unwrap();
            assert_eq!(pl.loglik, log_partial_likelihood(&d, &beta, ties).unwrap());
            for j in 0..k {
                let mut up = beta.clone();
                let mut dn = beta.clone();
                up[j] += h;
                dn[j] -= h;
                let fd = (log_partial_likelihood(&d, &up, ties).unwrap()
                    - log_partial_likelihood(&d, &dn, ties).unwrap())
                    / (2.0 * h);
                worst_g = worst_g.max(rel(pl.gradient[j], fd));
                let gu = partial_likelihood_derivatives(&d, &up, ties)
                    .unwrap()
                    .gradient[j];
                let gd = partial_likelihood_derivatives(&d, &dn, ties)
                    .unwrap()
                    .gradient[j];
                worst_h = worst_h.max(rel(-pl.information.get(j, j), (gu - gd) / (2.0 * h)));
            }
            checked += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_g < 1e-4 && worst_h < 1e-4 && secs < 5.0;
    report(
        2,
        "gradient and hessian",
        pass,
        &format!("{checked} fits, max rel err gradient {worst_g:.2e}, hessian diag {worst_h:.2e}, {secs:.2} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_coefficient_recovery() {
    let start = Instant::now();
    let truth = [0.5, -0.3];
    let runs = 200;
    let mut covered = [0usize; 2];
    let mut sum = [0.0; 2];
    let mut abs_err = [0.0; 2];
    let mut censored = 0.0;
    for seed in 0..runs {
        let d = scenario_design(2000, 10_000 + seed);
        censored += 1.0 - d.n_events() as f64 / d.n_rows() as f64;
        let fit = fit_cox(&d, TieMethod::Breslow, &FitControls::default()).unwrap();
        for j in 0..2 {
            if (fit.beta[j] - truth[j]).abs() <= 3.0 * fit.se[j] {
                covered[j] += 1;
            }
            sum[j] += fit.beta[j];
            abs_err[j] += (fit.beta[j] - truth[j]).abs();
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let n = runs as f64;
    let coverage = covered.map(|c| c as f64 / n);
    let bias = [sum[0] / n - truth[0], sum[1] / n - truth[1]];
    let pass =
        coverage.iter().all(|&c| c >= 0.95) && bias.iter().all(|b| b.abs() < 0.03) && secs < 60.0;
    report(
        3,
        "coefficient recovery",
        pass,
        &format!(
            "coverage {:.3}/{:.3}, bias {:+.4}/{:+.4}, mean |err| {:.4}/{:.4}, censored {:.1}%, {secs:.1} s",
            coverage[0],
            coverage[1],
            bias[0],
            bias[1],
            abs_err[0] / n,
            abs_err[1] / n,
            100.0 * censored / n
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_04_km_exactness() {
    let mut worst = 0.0_f64;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..60);
        let t: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(1..20u32)))
            .collect();
        let e = vec![true; n];
        let curve = kaplan_meier(&RiskSetIndex::from_times(&t, &e).unwrap());
        for step in &curve.steps {
            let empirical = t.iter().filter(|&&x| x > step.time).count() as f64 / n as f64;
            worst = worst.max((step.survival - empirical).abs());
        }
        for probe in [0.5, 7.5, 25.0] {
            let empirical = t.iter().filter(|&&x| x > probe).count() as f64 / n as f64;
            worst = worst.max((curve.survival_at(probe) - empirical).abs());
        }
    }
    let curve =
        kaplan_meier(&RiskSetIndex::from_times(&[1.0, 2.0, 3.0], &[true, true, false]).unwrap());
    let surv: Vec<f64> = curve.steps.iter().map(|s| s.survival).collect();
    let example = surv == [2.0 / 3.0, 1.0 / 3.0];
    let pass = worst < 1e-12 && example;
    report(
        4,
        "kaplan-meier exactness",
        pass,
        &format!("max deviation {worst:.1e}, (1e,2e,3c) -> {surv:?}"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_score_identity() {
    let mut fits: Vec<(String, f64)> = Vec::new();
    for seed in 0..60u64 {
        let d = small_instance(3000 + seed, (6, 20), 1 + (seed % 3) as usize, 10);
        for ties in TIES {
            if let Ok(fit) = fit_cox(&d, ties, &FitControls::default()) {
                fits.push((
                    format!("small {seed} {ties}"),
                    score_residual_ratio(&d, &fit),
                ));
            }
        }
    }
    for seed in 0..20u64 {
        let d = scenario_design(800, 4000 + seed);
        for ties in TIES {
            let fit = fit_cox(&d, ties, &FitControls::default()).unwrap();
            fits.push((
                format!("scenario {seed} {ties}"),
                score_residual_ratio(&d, &fit),
            ));
        }
    }
    let records: Vec<_> = (0..600)
        .map(|i| {
            let kind = [
                EventKind::VentureEquity,
                EventKind::MergerAcquisition,
                EventKind::NoEvent,
            ][i % 3];
            record(i, kind, 1.0 + ((i * 37) % 41) as f64)
        })
        .collect();
    let recipe = CovariateRecipe::default();
    let base = build_design(&records, &recipe).unwrap();
    let augmented = augment_with_time_interactions(&base, &standard_time_interactions()).unwrap();
    for (label, d) in [("panel", &base), ("augmented", &augmented)] {
        let fit = fit_cox(d, TieMethod::Efron, &FitControls::default()).unwrap();
        fits.push((label.to_string(), score_residual_ratio(d, &fit)));
    }
    let causes = [
        CauseSpec::new("ve", [EventKind::VentureEquity]).unwrap(),
        CauseSpec::new("ma", [EventKind::MergerAcquisition]).unwrap(),
    ];
    let rep = fit_competing(
        &records,
        &recipe,
        &causes,
        TieMethod::Breslow,
        &FitControls::default(),
    )
    .unwrap();
    for (c, res) in causes.iter().zip(&rep.causes) {
        if let CauseOutcome::Fitted(fit) = &res.outcome {
            let d = base
                .with_events(records.iter().map(|r| c.includes(r.event_kind)).collect())
                .unwrap();
            fits.push((format!("cause {}", c.name), score_residual_ratio(&d, fit)));
        }
    }
    let worst = fits.iter().fold(0.0_f64, |m, (_, r)| m.max(*r));
    let failing: Vec<&str> = fits
        .iter()
        .filter(|(_, r)| *r >= 1e-6)
        .map(|(l, _)| l.as_str())
        .collect();
    let pass = failing.is_empty() && fits.len() > 100;
    report(
        5,
        "score-equation identity",
        pass,
        &format!(
            "{} fits, max |sum| / m = {worst:.2e}, failing {failing:?}",
            fits.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_invariance() {
    let controls = FitControls::default();
    let mut worst_loc = 0.0_f64;
    let mut worst_scale = 0.0_f64;
    let mut worst_ties = 0.0_f64;
    let mut designs: Vec<DesignMatrix> = (0..10).map(|s| scenario_design(500, 5000 + s)).collect();
    designs.extend((0..10).map(|s| small_instance(5100 + s, (15, 30), 2, 12)));
    for d in &designs {
        let Ok(fit) = fit_cox(d, TieMethod::Efron, &controls) else {
            continue;
        };
        for j in 0..d.n_cols() {
            for c in [5.0, 100.0] {
                let shifted = fit_cox(
                    &d.map_column(j, |v| v + c).unwrap(),
                    TieMethod::Efron,
                    &controls,
                )
                .unwrap();
                let diffs = fit
                    .beta
                    .iter()
                    .zip(&shifted.beta)
                    .chain(fit.se.iter().zip(&shifted.se))
                    .map(|(a, b)| (a - b).abs())
                    .chain([
                        (fit.lr.statistic - shifted.lr.statistic).abs(),
                        (fit.wald.statistic - shifted.wald.statistic).abs(),
                        (fit.score.statistic - shifted.score.statistic).abs(),
                    ]);
                worst_loc = diffs.fold(worst_loc, f64::max);
            }
            for c in [2.5, 0.1] {
                let scaled = fit_cox(
                    &d.map_column(j, |v| v * c).unwrap(),
                    TieMethod::Efron,
                    &controls,
                )
                .unwrap();
                for i in 0..d.n_cols() {
                    let expect = if i == j { fit.beta[i] / c } else { fit.beta[i] };
                    worst_scale = worst_scale.max((scaled.beta[i] - expect).abs());
                }
            }
        }
    }
    for seed in 0..20u64 {
        let d = scenario_design(400, 5200 + seed);
        let b = fit_cox(&d, TieMethod::Breslow, &controls).unwrap();
        let e = fit_cox(&d, TieMethod::Efron, &controls).unwrap();
        let diffs = b
            .beta
            .iter()
            .zip(&e.beta)
            .chain(b.se.iter().zip(&e.se))
            .map(|(x, y)| (x - y).abs());
        worst_ties = diffs
            .fold(worst_ties, f64::max)
            .max((b.loglik_fit - e.loglik_fit).abs());
    }
    let pass = worst_loc < 1e-8 && worst_scale < 1e-8 && worst_ties < 1e-10;
    report(
        6,
        "invariance",
        pass,
        &format!(
            "location {worst_loc:.1e}, scale {worst_scale:.1e}, breslow vs efron {worst_ties:.1e}"
        ),
    );
    assert!(pass);
}

/// Event times under beta(t) = 0.5 + 0.05 t by inverting the cumulative hazard.
fn time_varying_design(n: usize, seed: u64) -> DesignMatrix {
    let (rate, horizon) = (0.05, 29.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for _ in 0..n {
        let x: f64 = rng.sample(StandardNormal);
        let target = -(1.0 - rng.random::<f64>()).ln();
        let scale = rate * (0.5 * x).exp();
        let latent = if (0.05 * x).abs() < 1e-12 {
            target / scale
        } else {
            let arg = 1.0 + 0.05 * x * target / scale;
            if arg > 0.0 {
                arg.ln() / (0.05 * x)
            } else {
                f64::INFINITY
            }
        };
        rows.push(vec![x]);
        t.push(latent.min(horizon));
        e.push(latent < horizon);
    }
    design(rows, t, e)
}

#[test]
fn criterion_07_proportionality_test() {
    let start = Instant::now();
    let controls = FitControls::default();
    let mut rejected = 0;
    for seed in 0..500u64 {
        let d = scenario_design(400, 6000 + seed);
        let fit = fit_cox(&d, TieMethod::Breslow, &controls).unwrap();
        let r = scale_residuals(&schoenfeld_residuals(&d, &fit).unwrap(), &fit).unwrap();
        if grambsch_therneau_test(&r, &fit, GTransform::Km)
            .unwrap()
            .global
            .p_value
            < 0.05
        {
            rejected += 1;
        }
    }
    let size = rejected as f64 / 500.0;
    let mut detected = 0;
    for seed in 0..200u64 {
        let d = time_varying_design(1000, 7000 + seed);
        let fit = fit_cox(&d, TieMethod::Breslow, &controls).unwrap();
        let r = scale_residuals(&schoenfeld_residuals(&d, &fit).unwrap(), &fit).unwrap();
        if grambsch_therneau_test(&r, &fit, GTransform::Km)
            .unwrap()
            .global
            .p_value
            < 0.01
        {
            detected += 1;
        }
    }
    let power = detected as f64 / 200.0;
    let secs = start.elapsed().as_secs_f64();
    let pass = (0.02..=0.09).contains(&size) && power >= 0.90 && secs < 180.0;
    report(
        7,
        "proportionality test calibration and power",
        pass,
        &format!("size {size:.3} at 0.05, power {power:.3} at 0.01, {secs:.1} s"),
    );
    assert!(pass);
}

#[test]
fn criterion_08_competing_risks() {
    let controls = FitControls::default();
    let mut s = scenario(1500, 8000);
    s.causes = vec![
        CauseEffect {
            name: "ve".into(),
            kind: EventKind::VentureEquity,
            beta: vec![0.5, -0.3],
        },
        CauseEffect {
            name: "ma".into(),
            kind: EventKind::MergerAcquisition,
            beta: vec![-0.2, 0.4],
        },
        CauseEffect {
            name: "ipo".into(),
            kind: EventKind::Ipo,
            beta: vec![0.3, 0.0],
        },
    ];
    s.baseline_rate = 0.02;
    let (records, truth) = generate(&s).unwrap();
    let tallies_ok = truth.tallies["total"]
        == ["VE", "MA", "IPO", "censored"]
            .iter()
            .map(|k| truth.tallies[*k])
            .sum::<usize>();
    let all = CauseSpec::new(
        "all",
        [
            EventKind::VentureEquity,
            EventKind::MergerAcquisition,
            EventKind::Ipo,
        ],
    )
    .unwrap();
    let mut worst = 0.0_f64;
    for ties in TIES {
        let oblivious = fit_cox(
            &build_design(&records, &truth.recipe).unwrap(),
            ties,
            &controls,
        )
        .unwrap();
        let rep = fit_competing(
            &records,
            &truth.recipe,
            std::slice::from_ref(&all),
            ties,
            &controls,
        )
        .unwrap();
        let CauseOutcome::Fitted(single) = &rep.causes[0].outcome else {
            panic!("no fit")
        };
        let diffs = oblivious
            .beta
            .iter()
            .zip(&single.beta)
            .chain(oblivious.se.iter().zip(&single.se))
            .map(|(a, b)| (a - b).abs());
        worst = diffs
            .fold(worst, f64::max)
            .max((oblivious.loglik_fit - single.loglik_fit).abs());
    }

    let mut panel = Vec::with_capacity(4753);
    for (kind, count) in [
        (EventKind::VentureEquity, 2717),
        (EventKind::MergerAcquisition, 317),
        (EventKind::Ipo, 16),
        (EventKind::NoEvent, 1703),
    ] {
        for _ in 0..count {
            let id = panel.len();
            panel.push(record(id, kind, 1.0 + (id % 90) as f64));
        }
    }
    let causes = [
        CauseSpec::new("VE", [EventKind::VentureEquity]).unwrap(),
        CauseSpec::new("MA", [EventKind::MergerAcquisition]).unwrap(),
        CauseSpec::new("IPO", [EventKind::Ipo]).unwrap(),
    ];
    let part = event_partition(&panel, &causes).unwrap();
    let counts: Vec<usize> = part.per_cause.iter().map(|(_, c)| *c).collect();
    let partition_ok = counts == [2717, 317, 16]
        && part.no_event == 1703
        && part.unassigned == 0
        && part.total == 4753
        && part.is_conserved();
    let pass = worst < 1e-10 && partition_ok && tallies_ok;
    report(
        8,
        "competing-risks consistency",
        pass,
        &format!(
            "single cause vs oblivious {worst:.1e}, partition {counts:?} + {} = {}, generator tallies {:?}",
            part.no_event, part.total, truth.tallies
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_09_logrank_sanity() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let profile: Vec<(EventKind, f64)> = (0..40)
        .map(|_| {
            let kind = if rng.random_bool(0.75) {
                EventKind::VentureEquity
            } else {
                EventKind::NoEvent
            };
            (kind, f64::from(rng.random_range(1..15u32)))
        })
        .collect();
    let group = |offset: usize| {
        let recs: Vec<_> = profile
            .iter()
            .enumerate()
            .map(|(i, &(k, t))| record(offset + i, k, t))
            .collect();
        build_risk_index(&recs).unwrap()
    };
    let mirrored = logrank_test(&[group(0), group(1000)]).unwrap().chi_square;

    let mut p = Vec::with_capacity(500);
    for seed in 0..500u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(9000 + seed);
        let n = 80;
        let t: Vec<f64> = (0..n)
            .map(|_| -(1.0 - rng.random::<f64>()).ln() * 10.0)
            .collect();
        let c: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..25.0)).collect();
        let obs: Vec<f64> = t.iter().zip(&c).map(|(a, b)| a.min(*b)).collect();
        let ev: Vec<bool> = t.iter().zip(&c).map(|(a, b)| a <= b).collect();
        let mut labels: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let split = |want: bool| {
            let idx: Vec<usize> = (0..n).filter(|&i| labels[i] == want).collect();
            let tt: Vec<f64> = idx.iter().map(|&i| obs[i]).collect();
            let ee: Vec<bool> = idx.iter().map(|&i| ev[i]).collect();
            RiskSetIndex::from_times(&tt, &ee).unwrap()
        };
        p.push(logrank_test(&[split(true), split(false)]).unwrap().p_value);
    }
    let ks = ks_uniform(&mut p);
    let pass = mirrored.abs() < 1e-12 && ks < 0.1;
    report(
        9,
        "logrank sanity",
        pass,
        &format!("mirrored statistic {mirrored:.1e}, permutation p-value KS distance {ks:.3}"),
    );
    assert!(pass);
}

#[test]
fn criterion_10_anchored_quantities() {
    let up = percent_hazard_change(0.291102);
    let down = percent_hazard_change(-0.073076);
    let fit = fit_cox(
        &scenario_design(300, 10),
        TieMethod::Breslow,
        &FitControls::default(),
    )
    .unwrap();
    let table = fit_table_tsv("model", &fit, &[]);
    let lines: Vec<&str> = table.lines().collect();
    let header: Vec<&str> = lines[1].split('\t').collect();
    let expected_header = [
        "Covariate name",
        "Beta",
        "Exp(beta)",
        "Se(coef)",
        "Z",
        "Pr(>|z|)",
    ];
    let footer: Vec<&str> = lines[lines.len() - 3..]
        .iter()
        .map(|l| l.split('\t').next().unwrap())
        .collect();
    let pass = (up - 33.8).abs() <= 0.05
        && (down + 7.0).abs() <= 0.05
        && header == expected_header
        && FIT_HEADER == expected_header
        && footer == ["Likelihood ratio test", "Wald test", "Score (logrank) test"]
        && [LR_ROW, WALD_ROW, SCORE_ROW]
            == ["Likelihood ratio test", "Wald test", "Score (logrank) test"];
    report(
        10,
        "anchored derived quantities",
        pass,
        &format!("{up:.3}% and {down:.3}%, header {header:?}, footer {footer:?}"),
    );
    assert!(pass);
}

fn pipeline(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let bin = env!("CARGO_BIN_EXE_stagesurv");
    let panel = dir.join("panel.tsv");
    let truth = dir.join("panel.truth.json");
    let p = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let panel_s = panel.to_str().unwrap();
    let truth_s = truth.to_str().unwrap();
    let steps: Vec<Vec<String>> = vec![
        vec![
            "simulate", "--n", "600", "--seed", "2024", "--output", panel_s,
        ],
        vec![
            "fit",
            "--input",
            panel_s,
            "--recipe",
            truth_s,
            "--output",
            &p("fit.tsv"),
            "--ties",
            "efron",
        ],
        vec![
            "fit",
            "--input",
            panel_s,
            "--recipe",
            truth_s,
            "--format",
            "structured",
            "--output",
            &p("fit.json"),
        ],
        vec![
            "diagnose",
            "--input",
            panel_s,
            "--recipe",
            truth_s,
            "--output",
            &p("diagnose.tsv"),
            "--g",
            "km",
            "--residuals-out",
            &p("residuals.tsv"),
        ],
        vec![
            "compete",
            "--input",
            panel_s,
            "--recipe",
            truth_s,
            "--output",
            &p("compete.tsv"),
            "--cause",
            "financing=VE",
        ],
        vec![
            "summarize",
            "--input",
            panel_s,
            "--output",
            &p("summary.json"),
            "--format",
            "structured",
        ],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for args in &steps {
        let out = Command::new(bin).args(args).output().unwrap();
        assert!(
            out.status.success(),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    let differing: Vec<&str> = first
        .iter()
        .zip(&second)
        .filter(|(x, y)| x != y)
        .map(|(x, _)| x.0.as_str())
        .collect();
    let pass = first.len() == 8 && first.len() == second.len() && differing.is_empty();
    report(
        11,
        "end-to-end determinism",
        pass,
        &format!(
            "{} files compared {names:?}, differing {differing:?}",
            first.len()
        ),
    );
    assert!(pass);
}
