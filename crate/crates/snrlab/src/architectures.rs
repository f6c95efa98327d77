//! One-trial simulation pipelines for the three architectures.
//!
//! LCI measures through the sensing operator, contaminates the measurements,
//! and inverts. PAI contaminates each pixel directly. LAI is PAI at a
//! brightness amplified by the lens gain, with residuals taken against the
//! amplified reference so signal and noise stay on the same scale.

use rand::Rng;

use crate::hadamard::SensingOperator;
use crate::noise::{contaminate, AdditiveStd, NoiseParams};
use crate::scene::SceneVector;
use crate::{Arch, Error, Result};

/// Lens gain g = lens area / sensor area.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LensGain(f64);

impl LensGain {
    pub fn new(g: f64) -> Result<Self> {
        if !g.is_finite() || g <= 0.0 {
            return Err(Error::Domain(format!(
                "lens gain must be positive and finite, got {g}"
            )));
        }
        Ok(LensGain(g))
    }

    pub fn from_areas(lens_area: f64, sensor_area: f64) -> Result<Self> {
        if !lens_area.is_finite() || lens_area <= 0.0 {
            return Err(Error::Domain(format!(
                "lens area must be positive, got {lens_area}"
            )));
        }
        if !sensor_area.is_finite() || sensor_area <= 0.0 {
            return Err(Error::Domain(format!(
                "sensor area must be positive, got {sensor_area}"
            )));
        }
        Ok(LensGain(lens_area / sensor_area))
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// Outcome of one seeded trial: the reconstruction, the noiseless target it
/// is judged against, and the residual noise power between them.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub arch: Arch,
    pub n: usize,
    pub reconstructed: Vec<f64>,
    pub reference: Vec<f64>,
    pub residual_power: f64,
}

impl TrialResult {
    fn new(arch: Arch, reconstructed: Vec<f64>, reference: Vec<f64>) -> Self {
        debug_assert_eq!(reconstructed.len(), reference.len());
        let residual_power = residual_power(&reconstructed, &reference);
        TrialResult {
            arch,
            n: reference.len(),
            reconstructed,
            reference,
            residual_power,
        }
    }

    /// Total signal power of the trial's reference image.
    pub fn signal_power(&self) -> f64 {
        self.reference.iter().sum()
    }

    /// Recompute the residual from the stored vectors (consistency check).
    pub fn recompute_residual_power(&self) -> f64 {
        residual_power(&self.reconstructed, &self.reference)
    }
}

/// Sum of squared deviations between reconstruction and reference.
pub fn residual_power(reconstructed: &[f64], reference: &[f64]) -> f64 {
    reconstructed
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum()
}

/// LCI trial: y = A x, contaminate with shot noise and the measurement
/// additive noise, then reconstruct by inverting A. Reconstructed pixels may
/// go negative under noise and are deliberately left unclamped; clamping
/// would bias the variance being measured.
pub fn run_lci_trial(
    scene: &SceneVector,
    op: &SensingOperator,
    params: &NoiseParams,
    rng: &mut impl Rng,
) -> Result<TrialResult> {
    let y = op.apply(scene.pixels())?;
    let z = contaminate(&y, params, AdditiveStd::Measurement, rng)?;
    let reconstructed = op.solve(&z)?;
    Ok(TrialResult::new(
        Arch::Lci,
        reconstructed,
        scene.pixels().to_vec(),
    ))
}

/// PAI trial: each pixel is read directly, with shot noise around its true
/// intensity plus the pixel additive noise.
pub fn run_pai_trial(
    scene: &SceneVector,
    params: &NoiseParams,
    rng: &mut impl Rng,
) -> Result<TrialResult> {
    let reconstructed = contaminate(scene.pixels(), params, AdditiveStd::Pixel, rng)?;
    Ok(TrialResult::new(
        Arch::Pai,
        reconstructed,
        scene.pixels().to_vec(),
    ))
}

/// LAI trial: identical to PAI but at per-pixel means g * x, judged against
/// the amplified reference g * x. The additive noise is not amplified by the
/// lens.
pub fn run_lai_trial(
    scene: &SceneVector,
    gain: LensGain,
    params: &NoiseParams,
    rng: &mut impl Rng,
) -> Result<TrialResult> {
    let g = gain.get();
    let bright: Vec<f64> = scene.pixels().iter().map(|&p| g * p).collect();
    let reconstructed = contaminate(&bright, params, AdditiveStd::Pixel, rng)?;
    Ok(TrialResult::new(Arch::Lai, reconstructed, bright))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hadamard::TransformSize;
    use crate::noise::{SeedSpec, StreamKind};
    use crate::scene;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn operator(n: usize) -> SensingOperator {
        SensingOperator::new(TransformSize::new(n).unwrap())
    }

    #[test]
    fn lci_noiseless_roundtrip_is_exact() {
        let sc = scene::flat(TransformSize::new(64).unwrap(), 6400.0).unwrap();
        let op = operator(64);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = run_lci_trial(&sc, &op, &NoiseParams::noiseless(), &mut rng).unwrap();
        for (got, want) in r.reconstructed.iter().zip(sc.pixels()) {
            assert!((got - want).abs() <= 1e-9 * want.max(1.0));
        }
        assert!(r.residual_power < 1e-12);
    }

    #[test]
    fn lci_order_two_noiseless() {
        let sc = SceneVector::from_pixels(vec![2.0, 1.0]).unwrap();
        let op = operator(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let r = run_lci_trial(&sc, &op, &NoiseParams::noiseless(), &mut rng).unwrap();
        assert!((r.reconstructed[0] - 2.0).abs() < 1e-12);
        assert!((r.reconstructed[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lci_size_mismatch_propagates() {
        let sc = SceneVector::from_pixels(vec![1.0; 8]).unwrap();
        let op = operator(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(run_lci_trial(&sc, &op, &NoiseParams::noiseless(), &mut rng).is_err());
    }

    #[test]
    fn pai_noiseless_has_zero_residual() {
        let sc = SceneVector::from_pixels(vec![5.0, 0.0, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = run_pai_trial(&sc, &NoiseParams::noiseless(), &mut rng).unwrap();
        assert_eq!(r.residual_power, 0.0);
        assert_eq!(r.reconstructed, sc.pixels());
    }

    #[test]
    fn pai_zero_scene_residual_is_n_rho_squared() {
        // x = 0 leaves only the additive term: E[residual] = n * rho^2.
        let n = 100usize;
        let sc = SceneVector::from_pixels(vec![0.0; n]).unwrap();
        let params = NoiseParams::new(0.0, 5.0, true).unwrap();
        let trials = 10_000usize;
        let mut total = 0.0;
        for t in 0..trials as u32 {
            let spec = SeedSpec::new(5, Arch::Pai, n as u64, t);
            let r = run_pai_trial(&sc, &params, &mut spec.rng(StreamKind::Noise)).unwrap();
            total += r.residual_power;
        }
        let mean = total / trials as f64;
        let expected = n as f64 * 25.0;
        assert!(
            (mean - expected).abs() < 0.05 * expected,
            "mean residual {mean} vs {expected}"
        );
    }

    #[test]
    fn pai_residual_is_brightness_plus_n_rho_squared() {
        let size = TransformSize::new(64).unwrap();
        let n = 64usize;
        let params = NoiseParams::new(0.0, 5.0, true).unwrap();
        let sc = scene::random_uniform(size, 640_000, &mut ChaCha8Rng::seed_from_u64(77));
        let trials = 10_000usize;
        let mut total = 0.0;
        for t in 0..trials as u32 {
            let spec = SeedSpec::new(6, Arch::Pai, n as u64, t);
            let r = run_pai_trial(&sc, &params, &mut spec.rng(StreamKind::Noise)).unwrap();
            total += r.residual_power;
        }
        let mean = total / trials as f64;
        let expected = sc.brightness() + n as f64 * 25.0;
        assert!(
            (mean - expected).abs() < 0.05 * expected,
            "mean residual {mean} vs {expected}"
        );
    }

    #[test]
    fn lai_with_unit_gain_reproduces_pai_bitwise() {
        let size = TransformSize::new(256).unwrap();
        let sc = scene::random_uniform(size, 100_000, &mut ChaCha8Rng::seed_from_u64(4));
        let params = NoiseParams::new(5.0, 5.0, true).unwrap();
        let spec = SeedSpec::new(11, Arch::Pai, 256, 3);
        let pai = run_pai_trial(&sc, &params, &mut spec.rng(StreamKind::Noise)).unwrap();
        let lai = run_lai_trial(
            &sc,
            LensGain::new(1.0).unwrap(),
            &params,
            &mut spec.rng(StreamKind::Noise),
        )
        .unwrap();
        assert_eq!(pai.reconstructed, lai.reconstructed);
        assert_eq!(pai.reference, lai.reference);
        assert_eq!(pai.residual_power, lai.residual_power);
    }

    #[test]
    fn lai_gain_does_not_amplify_additive_noise() {
        // Zero scene: gain has nothing to amplify, residual stays n * rho^2.
        let n = 256usize;
        let sc = SceneVector::from_pixels(vec![0.0; n]).unwrap();
        let params = NoiseParams::new(0.0, 5.0, true).unwrap();
        let gain = LensGain::new(100.0).unwrap();
        let trials = 10_000usize;
        let mut total = 0.0;
        for t in 0..trials as u32 {
            let spec = SeedSpec::new(12, Arch::Lai, n as u64, t);
            let r = run_lai_trial(&sc, gain, &params, &mut spec.rng(StreamKind::Noise)).unwrap();
            total += r.residual_power;
        }
        let mean = total / trials as f64;
        let expected = n as f64 * 25.0;
        assert!(
            (mean - expected).abs() < 0.05 * expected,
            "mean residual {mean} vs {expected}"
        );
    }

    #[test]
    fn lai_flat_scene_residual_matches_model() {
        // g = 100, x0 = 1e5, n = 1024: residual ~= g * x0 + n * rho^2.
        let size = TransformSize::new(1024).unwrap();
        let sc = scene::flat(size, 1.0e5).unwrap();
        let params = NoiseParams::new(0.0, 5.0, true).unwrap();
        let gain = LensGain::new(100.0).unwrap();
        let trials = 10_000usize;
        let mut total = 0.0;
        for t in 0..trials as u32 {
            let spec = SeedSpec::new(13, Arch::Lai, 1024, t);
            let r = run_lai_trial(&sc, gain, &params, &mut spec.rng(StreamKind::Noise)).unwrap();
            total += r.residual_power;
        }
        let mean = total / trials as f64;
        let expected = 1.0e7 + 1024.0 * 25.0;
        assert!(
            (mean - expected).abs() < 0.05 * expected,
            "mean residual {mean} vs {expected}"
        );
    }

    #[test]
    fn lai_reference_is_gain_scaled_scene() {
        let sc = SceneVector::from_pixels(vec![1.0, 2.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let r = run_lai_trial(
            &sc,
            LensGain::new(3.0).unwrap(),
            &NoiseParams::noiseless(),
            &mut rng,
        )
        .unwrap();
        assert_eq!(r.reference, vec![3.0, 6.0]);
        assert_eq!(r.signal_power(), 9.0);
        assert_eq!(r.residual_power, 0.0);
    }

    #[test]
    fn gain_validation() {
        assert!(LensGain::new(0.0).is_err());
        assert!(LensGain::new(-2.0).is_err());
        assert!(LensGain::new(f64::INFINITY).is_err());
        assert_eq!(LensGain::from_areas(50.0, 0.5).unwrap().get(), 100.0);
        assert!(LensGain::from_areas(1.0, 0.0).is_err());
    }

    #[test]
    fn lci_reconstruction_is_unbiased_per_pixel() {
        // E[A^-1 z] = x; bound each pixel mean by 5 * sqrt(var_j / T) with
        // var_j from the dense propagation of measurement variances.
        let n = 8usize;
        let size = TransformSize::new(n).unwrap();
        let sc = scene::flat(size, 8000.0).unwrap();
        let op = operator(n);
        let params = NoiseParams::new(3.0, 0.0, true).unwrap();
        let trials = 10_000usize;

        let inv = op.materialize_inverse().unwrap();
        let y = op.apply(sc.pixels()).unwrap();
        let var_j: Vec<f64> = (0..n)
            .map(|j| {
                (0..n)
                    .map(|i| inv[(j, i)] * inv[(j, i)] * (y[i] + 9.0))
                    .sum()
            })
            .collect();

        let mut sums = vec![0.0f64; n];
        for t in 0..trials as u32 {
            let spec = SeedSpec::new(21, Arch::Lci, n as u64, t);
            let r = run_lci_trial(&sc, &op, &params, &mut spec.rng(StreamKind::Noise)).unwrap();
            for (s, v) in sums.iter_mut().zip(&r.reconstructed) {
                *s += v;
            }
        }
        for j in 0..n {
            let mean = sums[j] / trials as f64;
            let bound = 5.0 * (var_j[j] / trials as f64).sqrt();
            assert!(
                (mean - sc.pixels()[j]).abs() <= bound,
                "pixel {j}: mean {mean}, target {}, bound {bound}",
                sc.pixels()[j]
            );
        }
    }

    #[test]
    fn residual_power_is_consistent_and_finite() {
        let sc = scene::random_uniform(
            TransformSize::new(32).unwrap(),
            50_000,
            &mut ChaCha8Rng::seed_from_u64(8),
        );
        let params = NoiseParams::new(5.0, 5.0, true).unwrap();
        let op = operator(32);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for r in [
            run_lci_trial(&sc, &op, &params, &mut rng).unwrap(),
            run_pai_trial(&sc, &params, &mut rng).unwrap(),
            run_lai_trial(&sc, LensGain::new(2.0).unwrap(), &params, &mut rng).unwrap(),
        ] {
            assert!(r.residual_power.is_finite());
            assert!(r.residual_power >= 0.0);
            assert_eq!(r.residual_power, r.recompute_residual_power());
        }
    }
}
