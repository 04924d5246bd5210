use illum_align::evaluation::{psnr, residual_error, rmse, PSNR_CAP_DB};
use illum_align::geometry::normalize_normals;
use illum_align::gsra::{attention_map, charbonnier_loss, rectify, CharbonnierReduction, FeatureGrid};
use illum_align::pan::{pan_pipeline, PanConfig};
use illum_align::Image;
use proptest::prelude::*;

fn image(max_side: usize) -> impl Strategy<Value = Image> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(h, w)| {
        prop::collection::vec(0.0..=1.0f64, h * w * 3).prop_map(move |v| Image::from_interleaved(h, w, &v).unwrap())
    })
}

fn image_pair(max_side: usize) -> impl Strategy<Value = (Image, Image)> {
    (2..=max_side, 2..=max_side).prop_flat_map(|(h, w)| {
        let n = h * w * 3;
        (prop::collection::vec(0.0..=1.0f64, n), prop::collection::vec(0.0..=1.0f64, n)).prop_map(move |(a, b)| {
            (Image::from_interleaved(h, w, &a).unwrap(), Image::from_interleaved(h, w, &b).unwrap())
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pan_output_in_unit_range_and_tint_invariant(
        img in image(16),
        g in prop::array::uniform3(0.25..=4.0f64),
    ) {
        // Keep the image away from all-black so the tint is observable.
        let img = img.map(|v| 0.05 + 0.9 * v);
        let config = PanConfig::default();
        let a = pan_pipeline(&img, &config).unwrap();
        let b = pan_pipeline(&img.scale_channels(g), &config).unwrap();
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            prop_assert!((0.0..=1.0).contains(x));
            prop_assert!((x - y).abs() < 1e-4);
        }
    }

    #[test]
    fn metrics_are_symmetric_and_bounded((a, b) in image_pair(12)) {
        prop_assert!((rmse(&a, &b).unwrap() - rmse(&b, &a).unwrap()).abs() < 1e-15);
        let r = residual_error(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&r));
        prop_assert!(r <= rmse(&a, &b).unwrap() + 1e-15);
        prop_assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        prop_assert!(psnr(&a, &b).unwrap() <= PSNR_CAP_DB);
    }

    #[test]
    fn charbonnier_mean_is_at_least_epsilon(
        pred in prop::collection::vec(-2.0..2.0f64, 1..50),
        shift in -1.0..1.0f64,
    ) {
        let target: Vec<f64> = pred.iter().map(|v| v + shift).collect();
        let loss = charbonnier_loss(&pred, &target, 1e-6, CharbonnierReduction::Mean).unwrap();
        prop_assert!(loss >= 1e-6);
        prop_assert!(loss <= shift.abs() + 1e-6 + 1e-12);
    }

    #[test]
    fn attention_rows_are_stochastic_and_rectified_sums_follow_lambda(
        (n, d) in (1usize..6, 1usize..6),
        seed in any::<u64>(),
        lambda in -1.0..2.0f64,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut grid = |r, c| FeatureGrid::from_rows(r, c, &(0..r * c).map(|_| rng.random_range(-3.0..3.0)).collect::<Vec<_>>()).unwrap();
        let (q, k1, k2) = (grid(n, d), grid(n, d), grid(n, d));
        let bias = grid(n, n).into_matrix();
        let a = attention_map(&q, &k1, &bias, d).unwrap();
        let b = attention_map(&q, &k2, &bias, d).unwrap();
        for row in a.row_iter() {
            prop_assert!(row.iter().all(|&v| v >= 0.0));
            prop_assert!((row.sum() - 1.0).abs() < 1e-9);
        }
        let rect = rectify(&b, &a, lambda).unwrap();
        for row in rect.row_iter() {
            prop_assert!((row.sum() - (1.0 - lambda)).abs() < 1e-9);
        }
    }

    #[test]
    fn normalized_normals_are_unit_or_zero(raw in image(8)) {
        let normals = normalize_normals(&raw);
        for n in &normals.vectors {
            let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            prop_assert!(len == 0.0 || (len - 1.0).abs() < 1e-6);
        }
    }
}
