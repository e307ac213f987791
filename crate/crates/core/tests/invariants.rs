//! Property tests for the contracts that hold on any input: invertible
//! normalization, exact nearest-neighbor joins, supervised window
//! shapes, monotone variograms, unit kriging weights.

use proptest::prelude::*;

use pvcast_core::datacube::{denormalize, knn_join, normalize};
use pvcast_core::geo::Location;
use pvcast_core::hybrid::make_supervised;
use pvcast_core::interpolation::{KrigingModel, VariogramModel};
use pvcast_core::table::{Column, SourceTag, Table};

fn table_of(points: &[(f64, f64)], values: Vec<f64>) -> Table {
    let locations = points
        .iter()
        .map(|&(lat, lon)| Location::new(lat, lon).unwrap())
        .collect();
    Table::new(
        SourceTag::Other,
        locations,
        vec![Column {
            name: "v".into(),
            values,
        }],
    )
    .unwrap()
}

proptest! {
    #[test]
    fn normalization_roundtrips(values in prop::collection::vec(-1e3f64..1e3, 2..40)) {
        let points: Vec<(f64, f64)> = (0..values.len()).map(|i| (0.0, i as f64 * 1e-3)).collect();
        let table = table_of(&points, values.clone());
        let normalized = normalize(&table).unwrap();
        let scale = normalized.params.get("v").unwrap();
        let column = &normalized.table.column("v").unwrap().values;
        if normalized.constant_columns.is_empty() {
            let span = (scale.max - scale.min).max(1.0);
            for (orig, norm) in values.iter().zip(column) {
                let back = denormalize(scale, *norm);
                prop_assert!((back - orig).abs() < 1e-12 * span);
                prop_assert!((0.0..=1.0).contains(norm));
            }
        }
    }

    #[test]
    fn knn_exact_on_coincident_location(
        values in prop::collection::vec(0.0f64..1.0, 3..12),
        pick in 0usize..3,
    ) {
        let n = values.len();
        let pick = pick.min(n - 1);
        let points: Vec<(f64, f64)> = (0..n).map(|i| (1.0 + i as f64, -(i as f64))).collect();
        let other = table_of(&points, values.clone());
        let base_loc = Location::new(points[pick].0, points[pick].1).unwrap();
        let base = Table::new(SourceTag::Other, vec![base_loc], vec![]).unwrap();
        let joined = knn_join(&base, &other, 1).unwrap();
        prop_assert_eq!(joined.column("v").unwrap().values[0], values[pick]);
    }

    #[test]
    fn supervised_window_counts(len in 2usize..200, lag in 1usize..30) {
        prop_assume!(len > lag);
        let series: Vec<f64> = (0..len).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, y) = make_supervised(&series, lag).unwrap();
        prop_assert_eq!(x.len(), len - lag);
        prop_assert_eq!(y.len(), len - lag);
        for row in &x {
            prop_assert_eq!(row.len(), lag);
        }
    }

    #[test]
    fn variogram_non_decreasing(
        scale in 0.0f64..10.0,
        exponent in 0.05f64..1.95,
        nugget in 0.0f64..5.0,
        h in prop::collection::vec(0.0f64..500.0, 2..20),
    ) {
        let model = VariogramModel::new(scale, exponent, nugget).unwrap();
        let mut lags = h;
        lags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in lags.windows(2) {
            prop_assert!(model.semivariance(pair[1]) >= model.semivariance(pair[0]) - 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn kriging_weights_sum_to_one(
        seeds in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0), 4..10),
        target_lat in 0.0f64..1.0,
        target_lon in 0.0f64..1.0,
    ) {
        let mut samples: Vec<(Location, f64)> = seeds
            .iter()
            .enumerate()
            .map(|(i, &(a, b, v))| {
                // spread the unit square and keep locations distinct
                (Location::new(a + i as f64 * 1e-6, b).unwrap(), v)
            })
            .collect();
        samples.dedup_by(|a, b| a.0.lat == b.0.lat && a.0.lon == b.0.lon);
        prop_assume!(samples.len() >= 3);
        let variogram = VariogramModel::new(0.05, 1.1, 0.0).unwrap();
        let model = KrigingModel::new(&samples, variogram).unwrap();
        let target = Location::new(target_lat, target_lon).unwrap();
        let (weights, _) = model.weights_at(&target).unwrap();
        let sum: f64 = weights.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
    }
}
