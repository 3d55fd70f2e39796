use proptest::prelude::*;
use wetmap_core::folds::{assign_fold, cross_validate, make_folds, SplitAxis, FOLD_COUNT};
use wetmap_core::geo::BBox;
use wetmap_core::model::NetSpec;
use wetmap_core::optim::TrainConfig;
use wetmap_core::synth::{generate_corpus, SynthConfig};

/// Regions claiming `(x, y)`: half-open on the max side except at the extent edge.
fn claimants(regions: &[(usize, BBox)], ext: &BBox, x: f64, y: f64) -> Vec<usize> {
    let within = |v: f64, lo: f64, hi: f64, edge: f64| v >= lo && (v < hi || (hi == edge && v <= hi));
    regions
        .iter()
        .filter(|(_, b)| within(x, b.min_x, b.max_x, ext.max_x) && within(y, b.min_y, b.max_y, ext.max_y))
        .map(|&(id, _)| id)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn regions_are_disjoint_and_exhaustive(
        x0 in -1e7f64..1e7, y0 in -1e7f64..1e7,
        w in 10.0f64..1e6, h in 10.0f64..1e6,
        ew in any::<bool>(),
        pts in proptest::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 32),
    ) {
        let ext = BBox::new(x0, y0, x0 + w, y0 + h);
        let axis = if ew { SplitAxis::EastWest } else { SplitAxis::NorthSouth };
        let spec = make_folds(&ext, axis).unwrap();
        prop_assert_eq!(spec.regions.len(), FOLD_COUNT);
        let regions: Vec<(usize, BBox)> = spec.regions.iter().map(|r| (r.id, r.bbox)).collect();
        let ids: Vec<usize> = regions.iter().map(|r| r.0).collect();
        prop_assert_eq!(ids, (0..FOLD_COUNT).collect::<Vec<_>>());

        let total: f64 = regions.iter().map(|r| r.1.area()).sum();
        prop_assert!((total - ext.area()).abs() <= 1e-9 * ext.area());

        // Region edges are probed too, since they are where overlaps or gaps would hide.
        let edges = regions.iter().flat_map(|(_, b)| [(b.min_x, b.min_y), (b.max_x, b.max_y), (b.min_x, b.max_y)]);
        let samples = pts.iter().map(|&(u, v)| (x0 + u * w, y0 + v * h)).chain(edges);
        for (x, y) in samples {
            let hits = claimants(&regions, &ext, x, y);
            prop_assert_eq!(hits.len(), 1, "({}, {}) claimed by {:?}", x, y, hits);
            prop_assert_eq!(assign_fold(&spec, x, y).unwrap(), hits[0]);
        }
    }
}

#[test]
fn every_tile_evaluated_exactly_once() {
    let spec = NetSpec::with_hidden(&[2, 2, 2, 2, 2, 2]).unwrap();
    let cfg = SynthConfig {
        rows: 320,
        cols: 320,
        seed: 3,
        ..SynthConfig::default()
    };
    let (map, folds, tiles) = generate_corpus(&cfg, spec.halo(), 0, SplitAxis::NorthSouth).unwrap();
    assert_eq!(tiles.len(), 16);
    let t = &map.raster.transform;
    for tile in &tiles {
        let (r, c) = (tile.origin.0 as f64 + 39.5, tile.origin.1 as f64 + 39.5);
        let (x, y) = t.pixel_to_crs(r, c);
        assert_eq!(assign_fold(&folds, x, y).unwrap(), tile.fold);
    }

    let train = TrainConfig {
        epochs: 1,
        batch_size: 4,
        micro_batch: 4,
        ..TrainConfig::default()
    };
    let report = cross_validate(&tiles, &spec, &train, &mut |_, _| {}).unwrap();
    assert_eq!(report.folds.len(), FOLD_COUNT);
    assert_eq!(report.evaluation_counts, vec![1; tiles.len()]);
    for (k, f) in report.folds.iter().enumerate() {
        assert_eq!(f.fold, k);
        assert!(f.evaluated.iter().all(|&i| tiles[i].fold == k));
        assert_eq!(f.predictions.len(), f.evaluated.len());
    }
    assert_eq!(report.pooled.total(), 320 * 320);
}
