//! Sample moments, Kolmogorov–Smirnov distances to a normal law, histograms.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

/// Population moments; skewness and kurtosis are `NaN` when the variance vanishes.
pub fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return Moments {
            count: 0,
            mean: f64::NAN,
            variance: f64::NAN,
            skewness: f64::NAN,
            excess_kurtosis: f64::NAN,
        };
    }
    let mean = xs.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &x in xs {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, excess_kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0)
    } else {
        (f64::NAN, f64::NAN)
    };
    Moments {
        count: xs.len(),
        mean,
        variance: m2,
        skewness,
        excess_kurtosis,
    }
}

fn standard_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn phi(z: f64) -> f64 {
    standard_normal().cdf(z)
}

/// `sup |F_n − Φ|` for samples already standardized.
pub fn ks_normal(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let f = phi(sorted[i]);
        d = d.max((f - i as f64 / n).abs()).max((j as f64 / n - f).abs());
        i = j;
    }
    d
}

/// Span of the lattice carrying the values: the gcd of their differences.
pub fn lattice_span(values: &[i64]) -> i64 {
    let Some(&first) = values.first() else {
        return 0;
    };
    values.iter().fold(0i64, |g, &v| num_integer::gcd(g, v - first))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeKs {
    /// Distance with the normal CDF evaluated at half-span offsets.
    pub corrected: f64,
    /// Distance against the normal CDF at the lattice points themselves.
    pub raw: f64,
    pub span: i64,
}

/// Kolmogorov–Smirnov distance between integer samples standardized as
/// `(v − center)/scale` and the standard normal.
///
/// The empirical CDF of lattice data is a step function, so it is compared
/// with `Φ` at the midpoints between consecutive lattice points.
pub fn lattice_ks(values: &[i64], center: f64, scale: f64) -> LatticeKs {
    let span = lattice_span(values);
    let raw = ks_normal(&values.iter().map(|&v| (v as f64 - center) / scale).collect::<Vec<_>>());
    if values.is_empty() || span == 0 {
        return LatticeKs { corrected: raw, raw, span };
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let n = sorted.len() as f64;
    let half = span as f64 / 2.0;
    let mut d: f64 = 0.0;
    let mut below = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let v = sorted[i] as f64;
        let upto = j as f64 / n;
        d = d
            .max((below - phi((v - half - center) / scale)).abs())
            .max((upto - phi((v + half - center) / scale)).abs());
        below = upto;
        i = j;
    }
    LatticeKs { corrected: d, raw, span }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub bin_left: f64,
    pub bin_right: f64,
    pub count: usize,
}

/// Equal-width bins over `[lo, hi)`; values outside go to the end bins.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Vec<HistogramBin> {
    let bins = bins.max(1);
    let width = (hi - lo) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|k| HistogramBin {
            bin_left: lo + k as f64 * width,
            bin_right: lo + (k + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &v in values {
        if v.is_nan() {
            continue;
        }
        let k = ((v - lo) / width).floor();
        let k = if k < 0.0 { 0 } else { (k as usize).min(bins - 1) };
        out[k].count += 1;
    }
    out
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut s = String::from("bin_left,bin_right,count\n");
    for b in bins {
        s.push_str(&format!("{},{},{}\n", b.bin_left, b.bin_right, b.count));
    }
    s
}
