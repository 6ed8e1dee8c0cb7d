mod common;

use stagesurv::competing::CauseOutcome;
use stagesurv::records::EventKind;
use stagesurv::synth::{CauseEffect, Scenario, TIME_OFFSET_WEEKS};
use stagesurv::{
    build_design, fit_competing, fit_cox, generate, schoenfeld_residuals, CauseSpec, DesignMatrix,
    FitControls, TieMethod,
};

use common::{score_residual_ratio, small_instance};

/// x_i minus the exp(eta)-weighted risk-set mean, averaged over Efron fractions.
fn brute_residuals(d: &DesignMatrix, beta: &[f64], ties: TieMethod) -> Vec<(f64, Vec<f64>)> {
    let n = d.n_rows();
    let k = d.n_cols();
    let t = d.durations();
    let e = d.events();
    let w: Vec<f64> = (0..n)
        .map(|i| {
            d.row(i)
                .iter()
                .zip(beta)
                .map(|(a, b)| a * b)
                .sum::<f64>()
                .exp()
        })
        .collect();
    let mut out = Vec::new();
    for i in (0..n).filter(|&i| e[i]) {
        let tied: Vec<usize> = (0..n).filter(|&j| e[j] && t[j] == t[i]).collect();
        let fractions: Vec<f64> = match ties {
            TieMethod::Breslow => vec![0.0],
            TieMethod::Efron => (0..tied.len())
                .map(|l| l as f64 / tied.len() as f64)
                .collect(),
        };
        let mut mean = vec![0.0; k];
        for frac in &fractions {
            let mut s0 = 0.0;
            let mut s1 = vec![0.0; k];
            for j in (0..n).filter(|&j| t[j] >= t[i]) {
                let wj = if tied.contains(&j) {
                    w[j] * (1.0 - frac)
                } else {
                    w[j]
                };
                s0 += wj;
                for (c, acc) in s1.iter_mut().enumerate() {
                    *acc += wj * d.value(j, c);
                }
            }
            for (m, s) in mean.iter_mut().zip(&s1) {
                *m += s / s0 / fractions.len() as f64;
            }
        }
        out.push((
            t[i],
            d.row(i).iter().zip(&mean).map(|(x, m)| x - m).collect(),
        ));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

#[test]
fn schoenfeld_residuals_match_brute_force() {
    for seed in 0..30u64 {
        let d = small_instance(400 + seed, (6, 25), 2, 7);
        for ties in [TieMethod::Breslow, TieMethod::Efron] {
            let Ok(fit) = fit_cox(&d, ties, &FitControls::default()) else {
                continue;
            };
            let r = schoenfeld_residuals(&d, &fit).unwrap();
            let brute = brute_residuals(&d, &fit.beta, ties);
            assert_eq!(r.n_events(), brute.len());
            let mut got: Vec<(f64, Vec<f64>)> = r
                .event_times
                .iter()
                .copied()
                .zip(r.residuals.clone())
                .collect();
            let key = |v: &(f64, Vec<f64>)| (v.0, v.1[0]);
            let mut want = brute;
            got.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            want.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap());
            for (g, w) in got.iter().zip(&want) {
                assert_eq!(g.0, w.0);
                for (a, b) in g.1.iter().zip(&w.1) {
                    assert!((a - b).abs() < 1e-10, "seed {seed} {ties}: {a} vs {b}");
                }
            }
            assert!(score_residual_ratio(&d, &fit) < 1e-6);
        }
    }
}

#[test]
fn null_effects_give_exponential_durations() {
    let mut s = Scenario {
        n_subjects: 10_000,
        censor_horizon: 1e9,
        seed: 77,
        ..Scenario::default()
    };
    s.causes[0].beta = vec![0.0, 0.0];
    let (records, _) = generate(&s).unwrap();
    assert!(records.iter().all(|r| r.event_occurred));
    let n = records.len() as f64;
    let mean = records
        .iter()
        .map(|r| r.duration_weeks - TIME_OFFSET_WEEKS)
        .sum::<f64>()
        / n;
    let expected = 1.0 / s.baseline_rate;
    assert!(
        (mean - expected).abs() < 3.0 * expected / n.sqrt(),
        "mean {mean}"
    );
}

fn two_cause_scenario(seed: u64, ma_beta: Vec<f64>) -> Scenario {
    let mut s = Scenario {
        n_subjects: 4000,
        seed,
        ..Scenario::default()
    };
    s.causes.push(CauseEffect {
        name: "exit".into(),
        kind: EventKind::MergerAcquisition,
        beta: ma_beta,
    });
    s
}

#[test]
fn equal_causes_split_evenly() {
    let s = two_cause_scenario(31, vec![0.5, -0.3]);
    let (_, truth) = generate(&s).unwrap();
    let ve = truth.tallies["VE"] as f64;
    let ma = truth.tallies["MA"] as f64;
    let share = ve / (ve + ma);
    let se = (0.25 / (ve + ma)).sqrt();
    assert!((share - 0.5).abs() < 3.0 * se, "share {share}");
}

#[test]
fn cause_specific_fits_recover_each_cause() {
    let s = two_cause_scenario(32, vec![-0.4, 0.6]);
    let (records, truth) = generate(&s).unwrap();
    let causes = [
        CauseSpec::new("financing", [EventKind::VentureEquity]).unwrap(),
        CauseSpec::new("exit", [EventKind::MergerAcquisition]).unwrap(),
    ];
    let report = fit_competing(
        &records,
        &truth.recipe,
        &causes,
        TieMethod::Efron,
        &FitControls::default(),
    )
    .unwrap();
    assert!(report.partition.is_conserved());
    let design = build_design(&records, &truth.recipe).unwrap();
    for (res, effect) in report.causes.iter().zip(&s.causes) {
        let CauseOutcome::Fitted(fit) = &res.outcome else {
            panic!("{} not fitted", res.cause.name)
        };
        for j in 0..2 {
            assert!(
                (fit.beta[j] - effect.beta[j]).abs() < 3.0 * fit.se[j],
                "{} beta[{j}] = {} vs {}",
                res.cause.name,
                fit.beta[j],
                effect.beta[j]
            );
        }
        let d = design
            .with_events(
                records
                    .iter()
                    .map(|r| res.cause.includes(r.event_kind))
                    .collect(),
            )
            .unwrap();
        assert!(score_residual_ratio(&d, fit) < 1e-6);
    }
}

#[test]
fn oblivious_fit_pools_causes() {
    let s = two_cause_scenario(33, vec![0.5, -0.3]);
    let (records, truth) = generate(&s).unwrap();
    let d = build_design(&records, &truth.recipe).unwrap();
    let fit = fit_cox(&d, TieMethod::Breslow, &FitControls::default()).unwrap();
    assert!((fit.beta[0] - 0.5).abs() < 3.0 * fit.se[0]);
    assert!((fit.beta[1] + 0.3).abs() < 3.0 * fit.se[1]);
    assert!(fit.concordance.unwrap() > 0.5);
    assert!(score_residual_ratio(&d, &fit) < 1e-6);
}
