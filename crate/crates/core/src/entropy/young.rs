use super::EntropyError;

const MIN_ENSEMBLE: usize = 30;
const HISTOGRAM_BINS: usize = 32;

/// Per macro-cell statistics of one density sample per replica.
#[derive(Clone, Debug, PartialEq)]
pub struct BinStats {
    pub x_lo: f64,
    pub x_hi: f64,
    pub samples: Vec<f64>,
    /// Masses over `HISTOGRAM_BINS` equal cells of `[range.0, range.1]`.
    pub histogram: Vec<f64>,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

/// Empirical Young measure: for each x-bin, the law of the local density
/// across an ensemble.
#[derive(Clone, Debug, PartialEq)]
pub struct YoungMeasureEstimate {
    pub bins: Vec<BinStats>,
    pub range: (f64, f64),
}

impl YoungMeasureEstimate {
    /// `per_bin[b]` holds one value per replica for bin `b` of `[0, 1)`.
    pub fn from_samples(per_bin: Vec<Vec<f64>>) -> Self {
        let lo = per_bin.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        let hi = per_bin.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = if lo.is_finite() { (lo, if hi > lo { hi } else { lo + 1.0 }) } else { (0.0, 1.0) };
        let width = 1.0 / per_bin.len().max(1) as f64;
        let bins = per_bin
            .into_iter()
            .enumerate()
            .map(|(b, samples)| {
                let m = samples.len();
                let mean = if m > 0 { samples.iter().sum::<f64>() / m as f64 } else { f64::NAN };
                let variance = if m > 1 {
                    samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1) as f64
                } else {
                    f64::NAN
                };
                let mut histogram = vec![0.0; HISTOGRAM_BINS];
                for &v in &samples {
                    let k = ((v - range.0) / (range.1 - range.0) * HISTOGRAM_BINS as f64) as usize;
                    histogram[k.min(HISTOGRAM_BINS - 1)] += 1.0 / m as f64;
                }
                BinStats {
                    x_lo: b as f64 * width,
                    x_hi: (b + 1) as f64 * width,
                    samples,
                    histogram,
                    mean,
                    variance,
                }
            })
            .collect();
        Self { bins, range }
    }

    /// Each replica contributes the mean of its site profile over each of
    /// `n_bins` equal macro-cells; site `u` sits at `u/N`.
    pub fn from_site_profiles(profiles: &[Vec<f64>], n_bins: usize) -> Self {
        let mut per_bin = vec![Vec::with_capacity(profiles.len()); n_bins];
        for p in profiles {
            for (b, v) in bin_means(p, n_bins).into_iter().enumerate() {
                if let Some(v) = v {
                    per_bin[b].push(v);
                }
            }
        }
        Self::from_samples(per_bin)
    }

    /// `binned[r][b]` is replica `r`'s value in bin `b`; non-finite values are skipped.
    pub fn from_site_bins(binned: &[Vec<f64>]) -> Self {
        let n_bins = binned.iter().map(Vec::len).max().unwrap_or(0);
        let mut per_bin = vec![Vec::with_capacity(binned.len()); n_bins];
        for row in binned {
            for (b, &v) in row.iter().enumerate() {
                if v.is_finite() {
                    per_bin[b].push(v);
                }
            }
        }
        Self::from_samples(per_bin)
    }

    pub fn ensemble_size(&self) -> usize {
        self.bins.iter().map(|b| b.samples.len()).max().unwrap_or(0)
    }
}

/// Mean of `values[u]` over sites with `u/N` in each of `n_bins` cells.
pub fn bin_means(values: &[f64], n_bins: usize) -> Vec<Option<f64>> {
    let n = values.len();
    let mut sums = vec![0.0; n_bins];
    let mut counts = vec![0usize; n_bins];
    for (u, &v) in values.iter().enumerate() {
        let b = (u * n_bins / n).min(n_bins - 1);
        sums[b] += v;
        counts[b] += 1;
    }
    sums.into_iter()
        .zip(counts)
        .map(|(s, c)| (c > 0).then(|| s / c as f64))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConcentrationSummary {
    pub max_variance: f64,
    pub mean_variance: f64,
    pub per_bin: Vec<f64>,
    /// Bins without samples.
    pub excluded: Vec<usize>,
}

/// Variance of the local density law per bin, summarised by its maximum.
pub fn young_concentration(est: &YoungMeasureEstimate) -> Result<ConcentrationSummary, EntropyError> {
    let m = est.ensemble_size();
    if m < MIN_ENSEMBLE {
        return Err(EntropyError::SmallEnsemble(m));
    }
    let mut per_bin = Vec::new();
    let mut excluded = Vec::new();
    for (b, s) in est.bins.iter().enumerate() {
        if s.samples.len() < 2 {
            excluded.push(b);
        } else {
            per_bin.push(s.variance);
        }
    }
    if per_bin.is_empty() {
        return Err(EntropyError::Empty);
    }
    Ok(ConcentrationSummary {
        max_variance: per_bin.iter().copied().fold(0.0, f64::max),
        mean_variance: per_bin.iter().sum::<f64>() / per_bin.len() as f64,
        per_bin,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_profiles_have_zero_variance() {
        let profiles = vec![vec![0.5, 1.0, 2.0, 2.0]; 40];
        let est = YoungMeasureEstimate::from_site_profiles(&profiles, 2);
        let s = young_concentration(&est).unwrap();
        assert_eq!(s.max_variance, 0.0);
        for b in &est.bins {
            assert!((b.histogram.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert_eq!(est.bins[1].mean, 2.0);
    }

    #[test]
    fn small_ensembles_and_empty_bins() {
        let est = YoungMeasureEstimate::from_samples(vec![vec![1.0; 10]]);
        assert!(matches!(young_concentration(&est), Err(EntropyError::SmallEnsemble(10))));
        let est = YoungMeasureEstimate::from_samples(vec![(0..40).map(|k| k as f64).collect(), vec![]]);
        let s = young_concentration(&est).unwrap();
        assert_eq!(s.excluded, vec![1]);
    }
}
