use crate::error::{Error, Result};

/// Shape type of a region of attraction from its radial distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoaType {
    /// Symmetric, unimodal.
    I,
    /// Right-skewed, unimodal.
    II,
    /// Right-skewed, multimodal.
    III,
    /// The equilibrium is not stable.
    Unstable,
}

impl RoaType {
    pub fn as_str(self) -> &'static str {
        match self {
            RoaType::I => "I",
            RoaType::II => "II",
            RoaType::III => "III",
            RoaType::Unstable => "unstable",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassifyConfig {
    pub min_samples: usize,
    pub skew_threshold: f64,
    pub bins: usize,
    /// Width of the moving-average window, in bins.
    pub smoothing: usize,
    /// Peak prominence relative to the tallest smoothed bin.
    pub prominence: f64,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        Self {
            min_samples: 100,
            skew_threshold: 0.5,
            bins: 20,
            smoothing: 3,
            prominence: 0.1,
        }
    }
}

/// Adjusted Fisher–Pearson skewness `G₁ = √(n(n−1))/(n−2) · m₃/m₂^{3/2}`.
pub fn adjusted_skewness(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 3 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = x.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    if m2 <= 1e-15 * mean.abs().max(1.0).powi(2) {
        return 0.0;
    }
    (n * (n - 1.0)).sqrt() / (n - 2.0) * m3 / m2.powf(1.5)
}

fn smoothed_histogram(x: &[f64], cfg: &ClassifyConfig) -> Vec<f64> {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut h = vec![0.0; cfg.bins];
    let width = (hi - lo) / cfg.bins as f64;
    for v in x {
        let b = if width > 0.0 { ((v - lo) / width) as usize } else { 0 };
        h[b.min(cfg.bins - 1)] += 1.0;
    }
    let half = cfg.smoothing / 2;
    (0..cfg.bins)
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half).min(cfg.bins - 1);
            h[a..=b].iter().sum::<f64>() / (b - a + 1) as f64
        })
        .collect()
}

/// Lowest bin walking away from a peak until a higher bin; `None` for an
/// empty side.
fn side_base(h: &[f64], peak: f64, range: impl Iterator<Item = usize>) -> Option<f64> {
    let mut low: Option<f64> = None;
    for k in range {
        if h[k] > peak {
            break;
        }
        low = Some(low.map_or(h[k], |l| l.min(h[k])));
    }
    low
}

/// Peaks whose topographic prominence reaches `min_prominence`.
fn prominent_peaks(h: &[f64], min_prominence: f64) -> usize {
    let n = h.len();
    let mut count = 0;
    let mut i = 0;
    while i < n {
        // plateau [i, j]
        let mut j = i;
        while j + 1 < n && h[j + 1] == h[i] {
            j += 1;
        }
        let left_lower = i == 0 || h[i - 1] < h[i];
        let right_lower = j == n - 1 || h[j + 1] < h[i];
        if left_lower && right_lower && h[i] > 0.0 {
            let left = side_base(h, h[i], (0..i).rev());
            let right = side_base(h, h[i], j + 1..n);
            let base = match (left, right) {
                (Some(l), Some(r)) => l.max(r),
                (Some(v), None) | (None, Some(v)) => v,
                (None, None) => 0.0,
            };
            if h[i] - base >= min_prominence {
                count += 1;
            }
        }
        i = j + 1;
    }
    count
}

/// Skewness and modality of the mean-normalized distances.
pub fn classify_roa(d: &[f64], cfg: &ClassifyConfig) -> Result<RoaType> {
    if d.len() < cfg.min_samples {
        return Err(Error::Undefined(format!("{} samples, need {}", d.len(), cfg.min_samples)));
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Undefined("distances have zero mean".into()));
    }
    let x: Vec<f64> = d.iter().map(|v| v / mean).collect();
    let skew = adjusted_skewness(&x);
    let h = smoothed_histogram(&x, cfg);
    let top = h.iter().copied().fold(0.0, f64::max);
    let peaks = prominent_peaks(&h, cfg.prominence * top);
    Ok(if peaks >= 2 && skew > 0.0 {
        RoaType::III
    } else if skew > cfg.skew_threshold {
        RoaType::II
    } else {
        RoaType::I
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn constant_is_type_one() {
        assert_eq!(classify_roa(&[2.0; 200], &ClassifyConfig::default()).unwrap(), RoaType::I);
    }

    #[test]
    fn too_few_samples() {
        assert!(classify_roa(&[1.0; 10], &ClassifyConfig::default()).is_err());
    }

    #[test]
    fn skewness_oracle() {
        // two-point distribution: m₂ = pq, m₃ = pq(q − p) for unit gap
        let mut x = vec![0.0; 90];
        x.extend([1.0; 10]);
        let (p, q) = (0.1_f64, 0.9_f64);
        let g1 = (q - p) / (p * q).sqrt();
        let n = 100.0_f64;
        let expect = (n * (n - 1.0)).sqrt() / (n - 2.0) * g1;
        assert!((adjusted_skewness(&x) - expect).abs() < 1e-12);
        assert_eq!(adjusted_skewness(&[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn right_tail_is_type_two() {
        // 90% near 1, 10% spread into one tail up to 3
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let core = Normal::new(1.0, 0.05).unwrap();
        let mut d: Vec<f64> = (0..450).map(|_| core.sample(&mut rng)).collect();
        d.extend((0..50).map(|_| rng.random_range(1.1..3.0)));
        assert!(adjusted_skewness(&d) > 0.5);
        assert_eq!(classify_roa(&d, &ClassifyConfig::default()).unwrap(), RoaType::II);
    }

    #[test]
    fn two_lobes_are_type_three() {
        // equal lobes at 1 and 3, the upper one wider to the right
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Normal::new(1.0, 0.05).unwrap();
        let mut d: Vec<f64> = (0..250).map(|_| a.sample(&mut rng)).collect();
        d.extend((0..250).map(|_| 3.0 + rng.random::<f64>().powi(3) * 2.0));
        assert!(adjusted_skewness(&d) > 0.0);
        assert_eq!(classify_roa(&d, &ClassifyConfig::default()).unwrap(), RoaType::III);
    }

    #[test]
    fn symmetric_bell_is_type_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = Normal::new(1.0, 0.1).unwrap();
        let d: Vec<f64> = (0..500).map(|_| a.sample(&mut rng)).collect();
        assert_eq!(classify_roa(&d, &ClassifyConfig::default()).unwrap(), RoaType::I);
    }

    #[test]
    fn prominence_ignores_ripples() {
        assert_eq!(prominent_peaks(&[0.0, 10.0, 9.5, 9.8, 0.0], 1.0), 1);
        assert_eq!(prominent_peaks(&[0.0, 10.0, 2.0, 9.0, 0.0], 1.0), 2);
        assert_eq!(prominent_peaks(&[5.0, 5.0, 5.0], 1.0), 1);
    }
}
