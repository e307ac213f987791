//! Acceptance suite: one test per release criterion, each printing a
//! `[PASS]` line with its runtime (run with `--nocapture` to see them).
//! Criteria cover kriging exactness, variogram recovery, MLP gradients,
//! ARIMA recovery, GA monotonicity/determinism, ensemble improvement,
//! the quadratic/linear estimate, the hybrid-vs-ARIMA direction, and the
//! end-to-end CLI pipeline.

use std::path::Path;
use std::process::{Command, Output};
use std::time::{Duration, Instant};

use pvcast_core::covcor;
use pvcast_core::datacube::{build_cube, CubeOptions};
use pvcast_core::interpolation::{empirical_semivariogram, fit_variogram, KrigingModel, VariogramModel};
use pvcast_core::neuralnet::{Activation, LrSchedule, Mlp, MlpConfig, Solver};
use pvcast_core::synth;
use pvcast_core::{arima, evolution, hybrid};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_pvcast")
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(bin())
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed: {}\n{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn finish(criterion: &str, start: Instant, budget: Duration) {
    let elapsed = start.elapsed();
    assert!(
        elapsed < budget,
        "{criterion} took {elapsed:?}, budget {budget:?}"
    );
    println!("[PASS] {criterion} ({elapsed:?})");
}

#[test]
fn criterion_1_kriging_exactness() {
    let start = Instant::now();
    let samples = synth::variogram_field(20, 3);
    let empirical = empirical_semivariogram(&samples, 10).unwrap();
    let fit = fit_variogram(&empirical).unwrap();
    let model = KrigingModel::new(&samples, fit.model).unwrap();

    let grid: Vec<_> = model.samples().iter().map(|(l, _)| *l).collect();
    let values: Vec<f64> = model.samples().iter().map(|(_, v)| *v).collect();
    let raster = model.krige_grid(&grid).unwrap();
    for (point, value) in raster.points.iter().zip(&values) {
        assert!(
            (point.prediction - value).abs() < 1e-8,
            "prediction {} vs sample {value}",
            point.prediction
        );
    }
    for location in &grid {
        let (weights, _) = model.weights_at(location).unwrap();
        let sum: f64 = weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-10, "weight sum {sum}");
    }
    finish(
        "criterion 1: kriging exact at 20 sample locations, weights sum to 1",
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_2_variogram_recovery() {
    let start = Instant::now();
    let points: Vec<(f64, f64)> = (1..=40)
        .map(|i| {
            let h = 7.5 * i as f64;
            (h, 2.0 * h.powf(1.5))
        })
        .collect();

    // independent oracle: for zero-nugget power data, ln γ is linear in
    // ln h; plain least squares recovers (ln scale, exponent)
    let logs: Vec<(f64, f64)> = points.iter().map(|&(h, g)| (h.ln(), g.ln())).collect();
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let oracle_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    let oracle_scale = ((sy - oracle_exponent * sx) / n).exp();

    let fit = fit_variogram(&points).unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(
        rel(fit.model.exponent, oracle_exponent) < 1e-4,
        "exponent {} vs oracle {oracle_exponent}",
        fit.model.exponent
    );
    assert!(
        rel(fit.model.scale, oracle_scale) < 1e-4,
        "scale {} vs oracle {oracle_scale}",
        fit.model.scale
    );
    finish(
        "criterion 2: power variogram (scale, exponent) within 1e-4 of the log-space oracle",
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_3_mlp_gradient_check() {
    let start = Instant::now();
    let x = vec![
        vec![0.21, 0.53, 0.84],
        vec![0.92, 0.11, 0.40],
        vec![0.35, 0.31, 0.66],
        vec![0.58, 0.77, 0.12],
    ];
    let y = vec![0.42, 0.61, 0.13, 0.88];

    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 20 {
        let activation = Activation::ALL[(checked + seed as usize) % 4];
        let hidden = vec![3 + (seed as usize % 3), 2 + (seed as usize % 2)];
        let config = MlpConfig::new(
            activation,
            LrSchedule::Constant,
            Solver::Adam,
            hidden,
            1000 + seed,
        );
        let mut net = Mlp::init(config, 3).unwrap();
        seed += 1;
        if activation == Activation::Relu && net.min_abs_hidden_preactivation(&x) < 1e-3 {
            continue; // central differences would straddle the kink
        }

        let analytic = net.gradient(&x, &y).unwrap();
        let base = net.params_flat();
        let h = 1e-5;
        let mut max_rel = 0.0f64;
        for i in 0..base.len() {
            let mut p = base.clone();
            p[i] = base[i] + h;
            net.set_params_flat(&p);
            let up = net.loss(&x, &y).unwrap();
            p[i] = base[i] - h;
            net.set_params_flat(&p);
            let down = net.loss(&x, &y).unwrap();
            net.set_params_flat(&base);
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[i];
            if a.abs() < 1e-6 && numeric.abs() < 1e-6 {
                continue;
            }
            max_rel = max_rel.max((a - numeric).abs() / a.abs().max(numeric.abs()));
        }
        assert!(
            max_rel < 1e-5,
            "config {checked} ({activation:?}): max relative error {max_rel}"
        );
        checked += 1;
    }
    finish(
        "criterion 3: analytic MLP gradients match central differences on 20 configs",
        start,
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_4_arima_recovery() {
    let start = Instant::now();
    let series = synth::ar1_series(2000, 0.7, 1.0, 42);
    let model = arima::fit(&series, &arima::ArimaOrder::new(1, 0, 0), None).unwrap();
    assert!(
        (0.65..=0.75).contains(&model.ar[0]),
        "estimated φ = {}",
        model.ar[0]
    );

    let walk = vec![0.12, 0.4, 0.33, 0.5, 0.61, 0.44, 0.58];
    let rw = arima::fit(&walk, &arima::ArimaOrder::new(0, 1, 0), None).unwrap();
    let fc = arima::forecast(&rw, 6, None).unwrap();
    for v in fc {
        assert_eq!(v, 0.58, "random-walk forecast must equal the last value");
    }
    finish(
        "criterion 4: AR(1) φ recovered in [0.65, 0.75]; random walk forecasts last value",
        start,
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_5_ga_monotone_and_thread_deterministic() {
    let start = Instant::now();

    // monotonicity on an integer fixture and on the hybrid search
    let mut space = evolution::GeneSpace::new();
    space.push("x", evolution::GeneDomain::Int { lo: 0, hi: 100 });
    let config = evolution::GaConfig {
        population_size: 16,
        generations: 12,
        seed: 9,
        ..evolution::GaConfig::default()
    };
    let fitness = |g: &evolution::Genome, _: u64| -> Result<f64, String> {
        Ok((g.get("x").as_int() - 37).abs() as f64)
    };
    let outcome = evolution::run_ga(&space, &fitness, &config, &[], None).unwrap();
    assert_eq!(outcome.history.len(), 12);
    for pair in outcome.history.windows(2) {
        assert!(pair[1] <= pair[0], "best-so-far rose: {:?}", outcome.history);
    }

    // byte-identical checkpoints at different thread counts, through the
    // real binary
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("series.csv");
    assert_ok(
        &run_in(dir.path(), &["synth", "--kind", "ar-sin", "--n", "120", "--seed", "7", "--output-dir", "."]),
        "synth",
    );
    assert!(series.exists());
    for (threads, out) in [("1", "t1"), ("3", "t3")] {
        assert_ok(
            &run_in(
                dir.path(),
                &[
                    "forecast", "fit", "--series", "series.csv", "--pop", "4", "--gens", "2",
                    "--seed", "11", "--mlp-epochs", "40", "--hidden-max", "16", "--lag-max", "8",
                    "--checkpoints", "--threads", threads, "--output-dir", out,
                ],
            ),
            "forecast fit",
        );
    }
    for gen in 0..2 {
        let name = format!("checkpoint_gen_{gen:03}.json");
        let a = std::fs::read(dir.path().join("t1/checkpoints").join(&name)).unwrap();
        let b = std::fs::read(dir.path().join("t3/checkpoints").join(&name)).unwrap();
        assert_eq!(a, b, "{name} differs between --threads 1 and --threads 3");
    }
    let ma = std::fs::read(dir.path().join("t1/hybrid_model.json")).unwrap();
    let mb = std::fs::read(dir.path().join("t3/hybrid_model.json")).unwrap();
    assert_eq!(ma, mb, "models differ across thread counts");

    finish(
        "criterion 5: GA best-so-far non-increasing; checkpoints byte-identical at any --threads",
        start,
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_6_ensemble_improvement_direction() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        &run_in(dir.path(), &["synth", "--kind", "linear-map", "--n", "64", "--seed", "42", "--output-dir", "."]),
        "synth",
    );
    assert_ok(
        &run_in(
            dir.path(),
            &[
                "cube", "build", "--atlas", "atlas.csv", "--stations", "stations.csv",
                "--plants", "plants.csv", "--grid", "grid.csv", "--k", "3", "--output-dir", ".",
            ],
        ),
        "cube build",
    );
    assert_ok(
        &run_in(dir.path(), &["krige", "--samples", "plants.csv", "--grid", "grid.csv", "--output-dir", "."]),
        "krige",
    );
    assert_ok(
        &run_in(
            dir.path(),
            &[
                "ensemble", "optimize", "--cube", "cube.csv", "--target", "raster.csv",
                "--pop", "20", "--gens", "8", "--seed", "42", "--output-dir", ".",
            ],
        ),
        "ensemble optimize",
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ensemble_report.json")).unwrap())
            .unwrap();
    let optimized = report["optimized_score"]["mae"].as_f64().unwrap();
    let default = report["default_score"]["mae"].as_f64().unwrap();
    let reduction = report["mae_reduction_pct"].as_f64().unwrap();
    assert!(
        optimized <= default,
        "optimized MAE {optimized} exceeds default {default}"
    );
    assert!(reduction >= 0.0);
    let text = std::fs::read_to_string(dir.path().join("ensemble_report.txt")).unwrap();
    assert!(text.contains('%'), "report must state the percentage reduction");

    finish(
        "criterion 6: optimized committee CV-MAE <= default committee CV-MAE, reduction reported",
        start,
        Duration::from_secs(180),
    );
}

#[test]
fn criterion_7_quadratic_linear_estimate() {
    let start = Instant::now();

    // brute force on 100 pseudo-random rows
    let mut state = 0x9E3779B97F4A7C15u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let names = ["u", "v", "w", "t"];
    let columns: Vec<Vec<f64>> = (0..4).map(|_| (0..100).map(|_| next()).collect()).collect();
    let cube = {
        use pvcast_core::geo::Location;
        use pvcast_core::table::{Column, SourceTag, Table};
        let locations: Vec<Location> = (0..100)
            .map(|i| Location::new(0.0, i as f64 * 0.01).unwrap())
            .collect();
        let cols = names
            .iter()
            .zip(&columns)
            .map(|(n, v)| Column {
                name: n.to_string(),
                values: v.clone(),
            })
            .collect();
        pvcast_core::datacube::DataCube {
            table: Table::new(SourceTag::Other, locations, cols).unwrap(),
            norm: Default::default(),
            provenance: Default::default(),
            constant_columns: vec![],
        }
    };
    let matrices = covcor::cov_corr(&cube).unwrap();
    let weights = covcor::build_weights(&matrices, "t", &[], covcor::FlipMode::Both).unwrap();
    let field = covcor::estimate(&weights, &cube).unwrap();
    for row in 0..100 {
        let mut expected = 0.0;
        for (i, col) in columns.iter().enumerate() {
            expected += weights.a[i] * col[row] * col[row] + weights.b[i] * col[row];
        }
        assert!(
            (field.values[row] - expected).abs() < 1e-12,
            "row {row}: {} vs brute force {expected}",
            field.values[row]
        );
    }

    // sign-flip rule on constructed correlation signs
    let constructed = covcor::CovCorMatrices {
        names: vec!["t".into(), "pos".into(), "neg".into()],
        covariance: vec![
            vec![0.05, 0.03, -0.02],
            vec![0.03, 0.06, 0.01],
            vec![-0.02, 0.01, 0.04],
        ],
        correlation: vec![
            vec![1.0, 0.6, -0.4],
            vec![0.6, 1.0, 0.2],
            vec![-0.4, 0.2, 1.0],
        ],
        warnings: vec![],
    };
    let flipped = covcor::build_weights(
        &constructed,
        "t",
        &["pos".to_string(), "neg".to_string()],
        covcor::FlipMode::Both,
    )
    .unwrap();
    assert_eq!(flipped.b[1], -0.6, "positive correlation must be negated");
    assert_eq!(flipped.a[1], -0.03, "positive covariance must be negated");
    assert_eq!(flipped.b[2], -0.4, "negative entries stay as they are");
    assert_eq!(flipped.a[2], -0.02);

    // Table-I direction on the synthetic cube: the estimate tracks the
    // reference at least as well as the raw target column
    let fixture = synth::linear_map_fixture(36, 42);
    let cube = build_cube(
        &[fixture.atlas, fixture.stations, fixture.plants],
        &fixture.grid,
        CubeOptions {
            k: 3,
            include_pvgis: false,
        },
    )
    .unwrap();
    let matrices = covcor::cov_corr(&cube).unwrap();
    let flip: Vec<String> = covcor::DEFAULT_FLIP.iter().map(|s| s.to_string()).collect();
    let weights =
        covcor::build_weights(&matrices, covcor::DEFAULT_TARGET, &flip, covcor::FlipMode::Both)
            .unwrap();
    let estimate = covcor::estimate(&weights, &cube).unwrap().rescaled();
    let raw_target = covcor::EstimateField {
        locations: cube.table.locations.clone(),
        values: cube.table.column("direct_normal").unwrap().values.clone(),
    }
    .rescaled();
    let reference = fixture.reference.rescaled();
    let metric_mae = covcor::evaluate_field(&estimate, &reference).unwrap().mae;
    let raw_mae = covcor::evaluate_field(&raw_target, &reference).unwrap().mae;
    assert!(
        metric_mae <= raw_mae,
        "estimate MAE {metric_mae} vs raw target MAE {raw_mae}"
    );

    finish(
        "criterion 7: estimate matches brute force within 1e-12; flips verified; estimate beats raw target",
        start,
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_8_hybrid_beats_arima() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    assert_ok(
        &run_in(dir.path(), &["synth", "--kind", "ar-sin", "--n", "200", "--seed", "7", "--output-dir", "."]),
        "synth",
    );
    assert_ok(
        &run_in(
            dir.path(),
            &[
                "forecast", "fit", "--series", "series.csv", "--pop", "10", "--gens", "3",
                "--seed", "42", "--output-dir", ".",
            ],
        ),
        "forecast fit",
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("forecast_report.json")).unwrap())
            .unwrap();
    let hybrid_mae = report["comparison"]["hybrid"]["mae"].as_f64().unwrap();
    let arima_mae = report["comparison"]["arima"]["mae"].as_f64().unwrap();
    assert!(
        hybrid_mae < arima_mae,
        "hybrid test MAE {hybrid_mae} not below ARIMA {arima_mae}"
    );

    // metric definitions, exact on a two-point vector
    let m = hybrid::metrics(&[1.0, 2.0], &[1.0, 3.0]).unwrap();
    assert_eq!(m.mae, 0.5);
    assert_eq!(m.mse, 0.5);
    assert_eq!(m.mape, 0.25);

    finish(
        "criterion 8: hybrid test MAE beats pure ARIMA on the sin-contaminated AR fixture",
        start,
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_9_end_to_end_pipeline() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let steps: Vec<Vec<&str>> = vec![
        vec!["synth", "--kind", "linear-map", "--n", "49", "--seed", "42", "--output-dir", "."],
        vec![
            "cube", "build", "--atlas", "atlas.csv", "--stations", "stations.csv",
            "--plants", "plants.csv", "--grid", "grid.csv", "--k", "3", "--output-dir", ".",
        ],
        vec!["krige", "--samples", "plants.csv", "--grid", "grid.csv", "--output-dir", "."],
        vec![
            "ensemble", "optimize", "--cube", "cube.csv", "--target", "raster.csv",
            "--pop", "8", "--gens", "3", "--seed", "42", "--output-dir", ".",
        ],
        vec!["covcor", "weights", "--cube", "cube.csv", "--output-dir", "."],
        vec![
            "covcor", "estimate", "--cube", "cube.csv", "--weights", "weights.json",
            "--output-dir", ".",
        ],
        vec![
            "covcor", "evaluate", "--estimate", "estimate.csv", "--reference", "reference.csv",
            "--output-dir", ".",
        ],
    ];
    for step in &steps {
        assert_ok(&run_in(dir.path(), step), &step.join(" "));
    }

    // declared outputs exist and are schema-valid
    let read = |name: &str| std::fs::read_to_string(dir.path().join(name)).unwrap();
    let header = |name: &str| read(name).lines().next().unwrap().to_string();
    assert!(header("cube.csv").starts_with("lat,lon,global_horizontal"));
    assert_eq!(header("raster.csv"), "lat,lon,prediction,variance");
    assert_eq!(header("estimate.csv"), "lat,lon,estimate");
    assert_eq!(read("raster.csv").lines().count(), 50); // header + 49 rows
    let meta: serde_json::Value = serde_json::from_str(&read("cube_meta.json")).unwrap();
    assert!(meta["normalization"].is_object());
    assert!(meta["provenance"].is_object());
    let committee: serde_json::Value = serde_json::from_str(&read("committee.json")).unwrap();
    assert!(committee["feature_names"].is_array());
    assert!(committee["model"]["fitted"].is_array());
    let weights: serde_json::Value = serde_json::from_str(&read("weights.json")).unwrap();
    assert_eq!(weights["target"], "direct_normal");
    let evaluation: serde_json::Value = serde_json::from_str(&read("evaluation.json")).unwrap();
    assert!(evaluation["mse"].is_number() && evaluation["mae"].is_number());

    finish(
        "criterion 9: synth -> cube build -> krige -> ensemble optimize -> covcor estimate, all outputs valid",
        start,
        Duration::from_secs(300),
    );
}
