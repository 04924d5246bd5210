use super::{check_shapes, MetricError};
use crate::numeric::pairwise_sum_zip;
use crate::Image;

/// Returned by [`psnr`] for identical images, and the upper bound otherwise.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Mean squared error over all pixels and channels.
pub fn mse(pred: &Image, reference: &Image) -> Result<f64, MetricError> {
    check_shapes(pred, reference)?;
    let a = pred.as_slice();
    let sum = pairwise_sum_zip(a, reference.as_slice(), |x, y| (x - y) * (x - y));
    Ok(sum / a.len() as f64)
}

/// Peak signal-to-noise ratio in dB for `[0, 1]` images, capped at
/// [`PSNR_CAP_DB`].
pub fn psnr(pred: &Image, reference: &Image) -> Result<f64, MetricError> {
    let m = mse(pred, reference)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB))
}

pub fn rmse(pred: &Image, reference: &Image) -> Result<f64, MetricError> {
    Ok(mse(pred, reference)?.sqrt())
}

/// Mean absolute difference over all pixels and channels.
pub fn residual_error(pred: &Image, reference: &Image) -> Result<f64, MetricError> {
    check_shapes(pred, reference)?;
    let a = pred.as_slice();
    let sum = pairwise_sum_zip(a, reference.as_slice(), |x, y| (x - y).abs());
    Ok(sum / a.len() as f64)
}

/// Relative reduction `100 · (before − after) / before`, in percent.
pub fn improvement_percent(before: f64, after: f64) -> Result<f64, MetricError> {
    if !(before > 0.0) {
        return Err(MetricError::DegenerateBaseline(before));
    }
    Ok(100.0 * (before - after) / before)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, h: usize, w: usize) -> Image {
        Image::from_planar(h, w, (0..h * w * 3).map(|_| rng.random()).collect()).unwrap()
    }

    #[test]
    fn psnr_cases() {
        let ones = Image::filled(4, 4, 1.0).unwrap();
        let zeros = Image::filled(4, 4, 0.0).unwrap();
        assert_eq!(psnr(&ones, &ones).unwrap(), PSNR_CAP_DB);
        assert_eq!(psnr(&zeros, &ones).unwrap(), 0.0);
        // Offset 0.1 everywhere -> MSE 0.01 -> 20 dB.
        let a = Image::filled(4, 4, 0.5).unwrap();
        let b = Image::filled(4, 4, 0.6).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let a = Image::filled(4, 4, 0.5).unwrap();
        let b = Image::filled(4, 5, 0.5).unwrap();
        assert!(matches!(psnr(&a, &b), Err(MetricError::DimensionMismatch { .. })));
        assert!(rmse(&a, &b).is_err());
        assert!(residual_error(&a, &b).is_err());
    }

    #[test]
    fn rmse_and_residual_basics() {
        let zeros = Image::filled(3, 3, 0.0).unwrap();
        let half = Image::filled(3, 3, 0.5).unwrap();
        let ones = Image::filled(3, 3, 1.0).unwrap();
        assert_eq!(rmse(&zeros, &zeros).unwrap(), 0.0);
        assert_eq!(rmse(&zeros, &half).unwrap(), 0.5);
        assert_eq!(residual_error(&half, &half).unwrap(), 0.0);
        assert_eq!(residual_error(&zeros, &ones).unwrap(), 1.0);
    }

    #[test]
    fn rmse_matches_two_pass_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_image(&mut rng, 7, 11);
        let b = random_image(&mut rng, 7, 11);
        let mut sq = 0.0;
        for y in 0..7 {
            for x in 0..11 {
                for c in 0..3 {
                    let d = a.get(y, x, c) - b.get(y, x, c);
                    sq += d * d;
                }
            }
        }
        let oracle = (sq / (7.0 * 11.0 * 3.0)).sqrt();
        assert!((rmse(&a, &b).unwrap() - oracle).abs() < 1e-9);
    }

    #[test]
    fn improvement_cases() {
        assert!((improvement_percent(0.1199, 0.0992).unwrap() - 17.264).abs() < 1e-3);
        assert_eq!(improvement_percent(0.3, 0.3).unwrap(), 0.0);
        assert!((improvement_percent(0.2, 0.1).unwrap() - 50.0).abs() < 1e-12);
        assert!(matches!(
            improvement_percent(0.0, 0.1),
            Err(MetricError::DegenerateBaseline(_))
        ));
        assert!(improvement_percent(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn residual_triangle_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let a = random_image(&mut rng, 5, 5);
            let b = random_image(&mut rng, 5, 5);
            let c = random_image(&mut rng, 5, 5);
            let ac = residual_error(&a, &c).unwrap();
            let ab = residual_error(&a, &b).unwrap();
            let bc = residual_error(&b, &c).unwrap();
            assert!(ac <= ab + bc + 1e-9);
        }
    }
}
