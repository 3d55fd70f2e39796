use proptest::prelude::*;
use wetmap_core::geo::{rasterize_polygons, GeoTransform, Mask};
use wetmap_core::postproc::{connected_components, filter_min_area, vectorize, Connectivity};

fn grid(pixel: f64) -> GeoTransform {
    GeoTransform::new(440_002.5, 6_410_002.5, pixel, pixel, "EPSG:3006").unwrap()
}

fn mask_strategy() -> impl Strategy<Value = Mask> {
    (proptest::collection::vec(any::<bool>(), 32 * 32), 0.0f64..1.0).prop_map(|(bits, keep)| {
        // Sparse, dense or unbiased.
        let bits = bits
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                if keep < 0.3 {
                    b && i % 3 == 0
                } else if keep > 0.7 {
                    b || i % 3 == 0
                } else {
                    b
                }
            })
            .collect();
        Mask::from_bits(32, 32, bits).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rasterize_inverts_vectorize(m in mask_strategy(), four in any::<bool>()) {
        let t = grid(5.0);
        let conn = if four { Connectivity::Four } else { Connectivity::Eight };
        let layer = vectorize(&connected_components(&m, conn), &t);
        let back = rasterize_polygons(&layer, &t, 32, 32).unwrap();
        prop_assert_eq!(&back.label, &m);

        let area = layer.total_area();
        prop_assert_eq!(area, m.count() as f64 * t.pixel_area());
        let pixels: u64 = layer.features.iter().map(|f| f.pixel_count).sum();
        prop_assert_eq!(pixels, m.count() as u64);
        for f in &layer.features {
            prop_assert_eq!(f.area_m2, f.shoelace_area());
        }
    }
}

fn strip(len: usize) -> Mask {
    let mut m = Mask::new(10, 50);
    for c in 0..len {
        m.set(4, c, true);
    }
    m
}

#[test]
fn min_area_boundary_at_25_square_metres() {
    let t = grid(5.0);
    for (len, kept) in [(39, false), (40, true)] {
        let layer = vectorize(&connected_components(&strip(len), Connectivity::Eight), &t);
        assert_eq!(layer.features[0].area_m2, len as f64 * 25.0);
        let out = filter_min_area(&layer, 1000.0);
        assert_eq!(out.features.len() == 1, kept, "{len} pixels");
    }
}
