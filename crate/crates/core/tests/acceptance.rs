//! Acceptance criteria, one PASS/FAIL line each. Run with
//! `cargo test --release --test acceptance`.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::oracles::{equicorrelated_normal, equicorrelated_t, oracle_grid};
use fwer_seh::analysis::{run_test, AnalysisSettings};
use fwer_seh::bootstrap::{project_to_null, BootstrapConfig};
use fwer_seh::confidence::simultaneous_lower_bounds;
use fwer_seh::design::{PopulationModel, TrialDesign, TrialSummary};
use fwer_seh::method::MethodSpec;
use fwer_seh::numerics::{equicoordinate_quantile, mv_prob, uniform_sample, CorrelationMatrix, QmcSettings, RngStream};
use fwer_seh::procedures::stratified_statistics;
use fwer_seh::sim::{
    noncentrality_variances, draw_layout, example1_analytic, run_scenario_grid, simulate_summary, Allocation, GridSpec,
    Metric, SimulationReport, EXAMPLE1_EFFECTS,
};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn example1() -> Outcome {
    let start = Instant::now();
    let s = example1_analytic(500, 10_000, &EXAMPLE1_EFFECTS, 0.025, &QmcSettings::default(), &RngStream::new(1))
        .expect("example 1 runs");
    let secs = start.elapsed().as_secs_f64();
    check(
        (0.17..=0.20).contains(&s.mean_fwer) && secs < 300.0,
        format!("mean true FWER {:.4} (se {:.4}) in [0.17, 0.20], {secs:.1}s < 300s", s.mean_fwer, s.mc_se),
    )
}

fn limiting_variances() -> Outcome {
    let (v1, v2) = noncentrality_variances(100_000, 10_000, &RngStream::new(1)).expect("variances");
    let r1 = (v1 - 10.0 / 3.0).abs() / (10.0 / 3.0);
    let r2 = (v2 - 4.0).abs() / 4.0;
    check(
        r1 < 0.05 && r2 < 0.05,
        format!("Var(nu1) {v1:.4} vs 10/3 ({:.1}%), Var(nu2) {v2:.4} vs 4 ({:.1}%)", 100.0 * r1, 100.0 * r2),
    )
}

fn desk_grid() -> GridSpec {
    GridSpec {
        n: vec![500],
        allocation: vec![Allocation::A],
        ehf: vec![0.0, 1.0, 10.0],
        chf: vec![0.0, 1.0, 10.0],
        n_studies: 100,
        n_runs: 500,
        n_boot: 500,
        seed: 1,
        ..GridSpec::default()
    }
}

fn value(r: &SimulationReport, metric: Metric, n: u64, ehf: f64, chf: f64, m: &MethodSpec) -> f64 {
    r.find(metric, n, Allocation::A, ehf, chf, m).map_or(f64::NAN, |c| c.estimate)
}

/// Every listed cell must lie in `[lo, hi]`.
fn all_within(r: &SimulationReport, metric: Metric, m: MethodSpec, cells: &[(f64, f64)], lo: f64, hi: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &(ehf, chf) in cells {
        let v = value(r, metric, 500, ehf, chf, &m);
        ok &= v >= lo && v <= hi;
        parts.push(format!("{v:.4}"));
    }
    (ok, format!("{m} {} [{lo}, {hi}]", parts.join("/")))
}

fn table1(r: &SimulationReport) -> Outcome {
    let any_chf = |e: f64| [(e, 0.0), (e, 1.0), (e, 10.0)];
    let checks = [
        all_within(r, Metric::Fwer, MethodSpec::anova_t(), &any_chf(10.0), 0.28, 0.35),
        all_within(r, Metric::Fwer, MethodSpec::anova_t(), &any_chf(0.0), 0.020, 0.031),
        all_within(r, Metric::Fwer, MethodSpec::anova_boot(), &any_chf(10.0), 0.028, 0.040),
        all_within(r, Metric::Fwer, MethodSpec::marg_t(), &[(0.0, 10.0)], 0.0, 0.002),
        all_within(r, Metric::Fwer, MethodSpec::strat_boot(), &any_chf(10.0), 0.033, 0.046),
    ];
    check(checks.iter().all(|c| c.0), checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; "))
}

fn table2(r: &SimulationReport) -> Outcome {
    let checks = [
        all_within(r, Metric::Power, MethodSpec::anova_t(), &[(1.0, 0.0)], 0.96, 0.985),
        all_within(r, Metric::Power, MethodSpec::marg_t(), &[(1.0, 10.0)], 0.0, 0.15),
        all_within(r, Metric::Power, MethodSpec::strat_boot(), &[(10.0, 0.0), (10.0, 1.0), (10.0, 10.0)], 0.985, 0.999),
    ];
    check(checks.iter().all(|c| c.0), checks.iter().map(|c| c.1.as_str()).collect::<Vec<_>>().join("; "))
}

fn calibration(r: &SimulationReport) -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for m in MethodSpec::table_methods() {
        let c = r.find(Metric::Fwer, 500, Allocation::A, 0.0, 0.0, &m).expect("cell");
        ok &= c.estimate <= 0.031;
        parts.push(format!("{m} {:.4}±{:.4}", c.estimate, c.mc_se));
    }
    check(ok, format!("all <= 0.031: {}", parts.join(", ")))
}

fn ordering() -> Outcome {
    let grid = GridSpec {
        n: vec![250, 1000],
        ehf: vec![0.0, 1.0, 10.0],
        chf: vec![0.0],
        power: false,
        ..desk_grid()
    };
    let r = run_scenario_grid(&grid, workers()).expect("ordering grid");
    let mut ok = true;
    let mut parts = Vec::new();
    for n in [250, 1000] {
        let v: Vec<f64> = [0.0, 1.0, 10.0].iter().map(|&e| value(&r, Metric::Fwer, n, e, 0.0, &MethodSpec::anova_t())).collect();
        ok &= v[0] < v[1] && v[1] < v[2];
        parts.push(format!("anova+t N={n}: {:.4} < {:.4} < {:.4}", v[0], v[1], v[2]));
    }
    for m in MethodSpec::table_methods().into_iter().filter(|m| m.is_bootstrap()) {
        let (a, b) = (value(&r, Metric::Fwer, 250, 10.0, 0.0, &m), value(&r, Metric::Fwer, 1000, 10.0, 0.0, &m));
        ok &= b < a;
        parts.push(format!("{m} {a:.4} -> {b:.4}"));
    }
    check(ok, parts.join("; "))
}

fn numerics() -> Outcome {
    let start = Instant::now();
    let settings = QmcSettings::default();
    let mut worst: f64 = 0.0;
    for (k, case) in oracle_grid().iter().enumerate() {
        let p = mv_prob(&case.upper, &case.corr, case.df, &settings, &RngStream::new(k as u64)).expect("mv_prob");
        worst = worst.max((p.value - case.expected).abs());
    }
    let mut inversion: f64 = 0.0;
    for (d, rho, df) in [(2, 0.5, None), (3, 0.5, None), (4, 0.3, Some(30.0)), (3, 0.7, Some(10.0))] {
        let corr = CorrelationMatrix::equicorrelated(d, rho).expect("corr");
        let c = equicoordinate_quantile(&corr, 0.025, df, &settings, &RngStream::new(9)).expect("quantile");
        let lim = vec![c; d];
        let cdf = match df {
            None => equicorrelated_normal(&lim, rho),
            Some(nu) => equicorrelated_t(&lim, rho, nu),
        };
        inversion = inversion.max((1.0 - cdf - 0.025).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 2.0 * settings.tol && inversion <= settings.tol && secs < 60.0,
        format!(
            "20 cases max error {worst:.2e} <= {:.1e}; quantile inversion {inversion:.2e} <= {:.1e}; {secs:.1}s",
            2.0 * settings.tol,
            settings.tol
        ),
    )
}

fn random_summary(rng: &mut impl rand::Rng, design: &TrialDesign) -> TrialSummary {
    let k = design.cells().len();
    let sizes: Vec<f64> = (0..k).map(|_| (3.0 + 60.0 * uniform_sample(rng)).floor()).collect();
    let means: Vec<f64> = (0..k).map(|_| 10.0 * uniform_sample(rng) - 5.0).collect();
    let vars: Vec<f64> = (0..k).map(|_| 0.05 + 2.0 * uniform_sample(rng)).collect();
    common::summary(design, &sizes, &means, &vars, None)
}

fn properties() -> Outcome {
    let mut rng = RngStream::new(7).rng();
    let designs = [TrialDesign::nested3(), TrialDesign::overlapping3()];
    let mut notes = Vec::new();

    let mut proj_ok = true;
    for k in 0..1000 {
        let design = &designs[k % 2];
        let s = random_summary(&mut rng, design);
        let p = project_to_null(&s, design).expect("projection");
        let again = project_to_null(&common::with_means(&s, p.means.clone()), design).expect("projection");
        let drift = again.means.values().iter().zip(p.means.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        proj_ok &= p.constraint_residual < 1e-10 && drift < 1e-10;
    }
    notes.push(format!("projection x1000 {}", if proj_ok { "ok" } else { "FAILED" }));

    let trials = 100_000;
    let design = TrialDesign::nested3();
    let prev = [0.2, 0.3, 0.5];
    let model = PopulationModel::from_subgroup_effects(&design, prev.to_vec(), &[0.0; 3], &[2.0, -1.0, 0.5], 0.25).expect("model");
    let mut est = [Vec::new(), Vec::new()];
    let mut se2 = [0.0; 2];
    for _ in 0..trials {
        let (layout, _) = draw_layout(&design, &prev, 500, Allocation::A, &mut rng).expect("layout");
        let st = stratified_statistics(&simulate_summary(&design, &model, &layout, &mut rng).expect("summary"), &design).expect("stats");
        for k in 0..2 {
            est[k].push(st.estimates[k]);
            se2[k] += st.se[k].powi(2) / trials as f64;
        }
    }
    let mut strat_ok = true;
    for k in 0..2 {
        let n = est[k].len() as f64;
        let m = est[k].iter().sum::<f64>() / n;
        let var = est[k].iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        let rel = (se2[k] - var).abs() / var;
        strat_ok &= rel < 0.03;
        notes.push(format!("strat SE^2 vs MC P{} {:.2}%", k + 1, 100.0 * rel));
    }

    let settings = AnalysisSettings {
        bootstrap: BootstrapConfig::with_n_boot(200),
        ..AnalysisSettings::default()
    };
    let (mut agree_ok, mut dual_ok) = (true, true);
    for k in 0..40 {
        let design = &designs[k % 2];
        let s = random_summary(&mut rng, design);
        let mut methods = MethodSpec::table_methods();
        methods.push(MethodSpec::unadjusted());
        for m in methods {
            let r = run_test(&s, design, &m, &settings, &RngStream::new(k as u64)).expect("test");
            for h in &r.hypotheses {
                if (h.adjusted_p - settings.alpha).abs() > 5e-3 {
                    agree_ok &= h.rejected == (h.adjusted_p <= settings.alpha);
                }
            }
            if let Ok(ci) = simultaneous_lower_bounds(&r) {
                for (h, excl) in r.hypotheses.iter().zip(ci.excludes_zero()) {
                    if (h.statistic - h.critical_value).abs() > 1e-9 {
                        dual_ok &= h.rejected == excl;
                    }
                }
            }
        }
    }
    notes.push(format!("p/c agreement {}", if agree_ok { "ok" } else { "FAILED" }));
    notes.push(format!("test-CI duality {}", if dual_ok { "ok" } else { "FAILED" }));

    let small = GridSpec {
        n: vec![250],
        ehf: vec![0.0, 10.0],
        chf: vec![0.0, 10.0],
        allocation: vec![Allocation::A, Allocation::C],
        n_studies: 8,
        n_runs: 10,
        n_boot: 100,
        ..GridSpec::default()
    };
    let det_ok = run_scenario_grid(&small, 1).expect("grid") == run_scenario_grid(&small, 4).expect("grid");
    notes.push(format!("worker determinism {}", if det_ok { "ok" } else { "FAILED" }));

    check(proj_ok && strat_ok && agree_ok && dual_ok && det_ok, notes.join("; "))
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let start = Instant::now();
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    results.push((1, "Example 1 reproduction", example1()));
    results.push((2, "limiting noncentrality variances", limiting_variances()));
    let desk = run_scenario_grid(&desk_grid(), workers()).expect("desk grid");
    results.push((3, "FWER table at desk scale", table1(&desk)));
    results.push((4, "power table at desk scale", table2(&desk)));
    results.push((5, "ordering across N and EHF", ordering()));
    results.push((6, "numerics oracle suite", numerics()));
    results.push((7, "property suites", properties()));
    results.push((8, "calibration under the homogeneous null", calibration(&desk)));
    results.sort_by_key(|r| r.0);
    let mut failed = 0;
    for (k, name, o) in &results {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!o.pass);
        println!("{tag} [{k}] {name}: {}", o.detail);
    }
    println!("{} of {} criteria passed in {:.0}s", results.len() - failed, results.len(), start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
