use serde::{Deserialize, Serialize};

use super::MetricsError;
use crate::audio::AudioClip;

/// Reports clamp SI-SNR values to `[-300, 300]` dB.
pub const SI_SNR_CAP_DB: f64 = 300.0;

// residual energy below this fraction of the target energy counts as zero
const PERFECT_RATIO: f64 = 1e-30;

/// Scale-invariant source-to-noise ratio of `estimate` against `target`, in dB.
///
/// Both signals are mean-subtracted, the estimate is projected onto the
/// target, and the ratio of projected to residual energy is returned.
/// A zero residual yields `+inf`; an estimate with no component along the
/// target yields `-inf`.
pub fn si_snr(estimate: &AudioClip, target: &AudioClip) -> Result<f64, MetricsError> {
    if estimate.sample_rate_hz() != target.sample_rate_hz() {
        return Err(MetricsError::SampleRateMismatch(
            estimate.sample_rate_hz(),
            target.sample_rate_hz(),
        ));
    }
    si_snr_slices(estimate.samples(), target.samples())
}

pub(crate) fn si_snr_slices(estimate: &[f64], target: &[f64]) -> Result<f64, MetricsError> {
    if estimate.len() != target.len() {
        return Err(MetricsError::LengthMismatch {
            estimate: estimate.len(),
            target: target.len(),
        });
    }
    if target.is_empty() {
        return Err(MetricsError::Empty);
    }
    let est = centered(estimate);
    let tgt = centered(target);
    let tgt_energy: f64 = tgt.iter().map(|v| v * v).sum();
    if tgt_energy == 0.0 {
        return Err(MetricsError::DegenerateTarget);
    }
    let alpha = dot(&est, &tgt) / tgt_energy;
    let mut proj_energy = 0.0;
    let mut resid_energy = 0.0;
    for (e, t) in est.iter().zip(&tgt) {
        let p = alpha * t;
        proj_energy += p * p;
        resid_energy += (e - p) * (e - p);
    }
    if proj_energy == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if resid_energy <= proj_energy * PERFECT_RATIO {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (proj_energy / resid_energy).log10())
}

pub(crate) fn centered(x: &[f64]) -> Vec<f64> {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Clamps to the reporting range, mapping infinities to the sentinels.
pub fn cap_db(db: f64) -> f64 {
    db.clamp(-SI_SNR_CAP_DB, SI_SNR_CAP_DB)
}

/// Mean of capped per-utterance SI-SNR values, plus the values themselves.
pub fn mean_si_snr(pairs: &[(&AudioClip, &AudioClip)]) -> Result<(f64, Vec<f64>), MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let per: Vec<f64> = pairs
        .iter()
        .map(|(e, t)| si_snr(e, t).map(cap_db))
        .collect::<Result<_, _>>()?;
    let mean = per.iter().sum::<f64>() / per.len() as f64;
    Ok((mean, per))
}

/// SI-SNR gains of the full system over the noisy input and over the
/// encode/decode-only path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiSnrImprovements {
    pub full_system_db: f64,
    pub data_db: f64,
    pub encdec_db: f64,
    pub si_snri_data_db: f64,
    pub si_snri_encdec_db: f64,
}

impl SiSnrImprovements {
    /// Builds from (mean) SI-SNR values of the three systems.
    pub fn from_scores(full_system_db: f64, data_db: f64, encdec_db: f64) -> Self {
        Self {
            full_system_db,
            data_db,
            encdec_db,
            si_snri_data_db: full_system_db - data_db,
            si_snri_encdec_db: full_system_db - encdec_db,
        }
    }
}

/// Computes both improvements over a batch of aligned utterances
/// `(full_system_out, encdec_only_out, noisy_in, clean)`, each as a mean.
pub fn si_snr_improvements(
    batch: &[(&AudioClip, &AudioClip, &AudioClip, &AudioClip)],
) -> Result<SiSnrImprovements, MetricsError> {
    if batch.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let full: Vec<_> = batch.iter().map(|(f, _, _, c)| (*f, *c)).collect();
    let encdec: Vec<_> = batch.iter().map(|(_, e, _, c)| (*e, *c)).collect();
    let data: Vec<_> = batch.iter().map(|(_, _, n, c)| (*n, *c)).collect();
    Ok(SiSnrImprovements::from_scores(
        mean_si_snr(&full)?.0,
        mean_si_snr(&data)?.0,
        mean_si_snr(&encdec)?.0,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(v: &[f64]) -> AudioClip {
        AudioClip::new(v.to_vec(), 16_000).unwrap()
    }

    #[test]
    fn orthogonal_equal_energy_is_zero_db() {
        let s = [1.0, -1.0, 1.0, -1.0];
        let n = [1.0, 1.0, -1.0, -1.0];
        let est: Vec<f64> = s.iter().zip(&n).map(|(a, b)| a + b).collect();
        assert!(si_snr(&clip(&est), &clip(&s)).unwrap().abs() < 1e-12);
    }

    #[test]
    fn scaled_copy_is_infinite() {
        let s = [0.3, -0.1, 0.7, 0.2, -0.9];
        for alpha in [0.5, 1.0, 3.0, 7.3] {
            let est: Vec<f64> = s.iter().map(|v| v * alpha).collect();
            assert_eq!(si_snr(&clip(&est), &clip(&s)).unwrap(), f64::INFINITY);
        }
        assert_eq!(cap_db(f64::INFINITY), 300.0);
    }

    #[test]
    fn scale_invariance_exact_factors() {
        let s = [0.3, -0.1, 0.7, 0.2, -0.9, 0.05];
        let e = [0.1, 0.2, 0.5, -0.3, -0.4, 0.3];
        let base = si_snr(&clip(&e), &clip(&s)).unwrap();
        for alpha in [0.5, 2.0, 10.0] {
            let scaled: Vec<f64> = e.iter().map(|v| v * alpha).collect();
            let v = si_snr(&clip(&scaled), &clip(&s)).unwrap();
            assert!((v - base).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            si_snr(&clip(&[1.0, 2.0]), &clip(&[1.0])),
            Err(MetricsError::LengthMismatch { estimate: 2, target: 1 })
        );
        assert_eq!(
            si_snr(&clip(&[1.0, 2.0]), &clip(&[0.5, 0.5])),
            Err(MetricsError::DegenerateTarget)
        );
        let other_rate = AudioClip::new(vec![1.0, 2.0], 8000).unwrap();
        assert!(matches!(
            si_snr(&other_rate, &clip(&[1.0, 0.0])),
            Err(MetricsError::SampleRateMismatch(..))
        ));
    }

    #[test]
    fn zero_estimate_is_negative_infinity() {
        assert_eq!(
            si_snr(&clip(&[0.0, 0.0, 0.0]), &clip(&[1.0, 0.0, -1.0])).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn improvements_arithmetic() {
        let imp = SiSnrImprovements::from_scores(12.50, 7.62, 7.62);
        assert!((imp.si_snri_data_db - 4.88).abs() < 1e-12);
        assert_eq!(imp.si_snri_data_db, imp.si_snri_encdec_db);
        let same = SiSnrImprovements::from_scores(9.0, 3.0, 9.0);
        assert_eq!(same.si_snri_encdec_db, 0.0);
    }

    #[test]
    fn batch_improvement_when_encdec_equals_full() {
        let c = clip(&[0.3, -0.1, 0.7, 0.2, -0.9, 0.05]);
        let noisy = clip(&[0.5, 0.2, 0.5, -0.1, -0.6, 0.4]);
        let full = clip(&[0.31, -0.12, 0.68, 0.22, -0.88, 0.07]);
        let imp = si_snr_improvements(&[(&full, &full, &noisy, &c)]).unwrap();
        assert_eq!(imp.si_snri_encdec_db, 0.0);
        assert!(imp.si_snri_data_db > 0.0);
    }
}
