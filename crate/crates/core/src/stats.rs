//! Seeded random streams, the two samplers the pipeline needs, the F
//! distribution, and summary statistics.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::beta::beta_reg;

use crate::error::{Error, Result};

/// A reproducible random stream keyed by `(master_seed, stream_id)`.
///
/// Backed by ChaCha8, whose 64-bit stream selector and block counter make
/// distinct ids independent and every stream order-insensitive.
#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&master_seed.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(stream_id);
        Self {
            master_seed,
            stream_id,
            rng,
        }
    }

    /// Stream for a tuple of keys, e.g. `(experiment, n, replicate)`.
    pub fn keyed(master_seed: u64, keys: &[u64]) -> Self {
        Self::new(master_seed, stream_key(keys))
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        uniform(self, lo, hi)
    }

    pub fn normal(&mut self, mu: f64, sigma: f64) -> Result<f64> {
        normal(self, mu, sigma)
    }

    pub fn below(&mut self, bound: u64) -> u64 {
        self.rng.gen_range(0..bound)
    }
}

/// Mixes a key tuple into a single stream id (splitmix64 finalizer chain).
pub fn stream_key(keys: &[u64]) -> u64 {
    let mut h = 0x243F_6A88_85A3_08D3u64;
    for &k in keys {
        h ^= k.wrapping_add(0x9E37_79B9_7F4A_7C15);
        h = h.wrapping_mul(0xBF58_476D_1CE4_E5B9);
        h ^= h >> 31;
        h = h.wrapping_mul(0x94D0_49BB_1331_11EB);
        h ^= h >> 29;
    }
    h
}

/// Uniform deviate on `[lo, hi)`.
pub fn uniform(stream: &mut RngStream, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("uniform interval [{lo}, {hi}) is empty")));
    }
    let u = stream.next_f64();
    let x = lo + (hi - lo) * u;
    Ok(if x >= hi { lo } else { x })
}

/// Gaussian deviate by the Marsaglia polar method.
///
/// Only `libm::log` and IEEE `sqrt` are involved, so draws are bit-identical
/// across platforms. Each call consumes one accepted pair and discards the
/// second deviate, keeping the stream position a function of the call count.
pub fn normal(stream: &mut RngStream, mu: f64, sigma: f64) -> Result<f64> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("normal sigma = {sigma} must be >= 0")));
    }
    loop {
        let u = 2.0 * stream.next_f64() - 1.0;
        let v = 2.0 * stream.next_f64() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let factor = (-2.0 * libm::log(s) / s).sqrt();
            return Ok(mu + sigma * u * factor);
        }
    }
}

/// CDF of the F distribution with `(df1, df2)` degrees of freedom.
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> Result<f64> {
    if !(df1 > 0.0 && df2 > 0.0) || !df1.is_finite() || !df2.is_finite() {
        return Err(Error::invalid(format!("invalid degrees of freedom ({df1}, {df2})")));
    }
    if x.is_nan() {
        return Err(Error::invalid("F cdf evaluated at NaN"));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let z = df1 * x / (df1 * x + df2);
    Ok(beta_reg(df1 / 2.0, df2 / 2.0, z).clamp(0.0, 1.0))
}

/// Upper tail `P[F > x]`, computed through the complementary beta so small
/// p-values keep their relative precision.
pub fn f_sf(x: f64, df1: f64, df2: f64) -> Result<f64> {
    f_cdf(0.0, df1, df2)?;
    if x.is_nan() {
        return Err(Error::invalid("F survival evaluated at NaN"));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let z = df2 / (df1 * x + df2);
    Ok(beta_reg(df2 / 2.0, df1 / 2.0, z).clamp(0.0, 1.0))
}

/// Inverse of [`f_cdf`] by bracketed bisection to relative width 1e-12.
pub fn f_quantile(p: f64, df1: f64, df2: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level p = {p} must lie in (0, 1)")));
    }
    let mut lo = 0.0;
    let mut hi = 1.0;
    while f_cdf(hi, df1, df2)? < p {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::invalid("F quantile bracket overflow"));
        }
    }
    for _ in 0..2000 {
        if hi - lo <= 1e-12 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f_cdf(mid, df1, df2)? < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub len: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single value).
    pub variance: f64,
    pub median: f64,
}

pub fn summarize(values: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let len = values.len();
    let mean = values.iter().sum::<f64>() / len as f64;
    let variance = if len > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (len - 1) as f64
    } else {
        0.0
    };
    Ok(Summary {
        len,
        mean,
        variance,
        median: median(values)?,
    })
}

pub fn median(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    Ok(if sorted.len().is_multiple_of(2) {
        0.5 * (sorted[mid - 1] + sorted[mid])
    } else {
        sorted[mid]
    })
}

/// Mean squared error of `values` against a per-element target.
pub fn mse_vs(values: &[f64], target: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    if values.len() != target.len() {
        return Err(Error::ShapeMismatch {
            expected: format!("{} targets", values.len()),
            found: format!("{}", target.len()),
        });
    }
    Ok(values
        .iter()
        .zip(target)
        .map(|(v, t)| (v - t).powi(2))
        .sum::<f64>()
        / values.len() as f64)
}

/// Mean squared error of `values` against a scalar target.
pub fn mse_vs_scalar(values: &[f64], target: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    Ok(values.iter().map(|v| (v - target).powi(2)).sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sigma_returns_mu() {
        let mut s = RngStream::new(1, 2);
        for _ in 0..10 {
            assert_eq!(normal(&mut s, 3.5, 0.0).unwrap(), 3.5);
        }
        assert!(normal(&mut s, 0.0, -1.0).is_err());
    }

    #[test]
    fn normal_moments() {
        let mut s = RngStream::new(42, 0);
        let n = 1_000_000;
        let draws: Vec<f64> = (0..n).map(|_| normal(&mut s, 0.0, 1.0).unwrap()).collect();
        let sum = summarize(&draws).unwrap();
        assert!(sum.mean.abs() < 4.0 / (n as f64).sqrt());
        assert!((sum.variance - 1.0).abs() < 0.01);
    }

    #[test]
    fn uniform_ks_statistic() {
        let mut s = RngStream::new(9, 4);
        let n = 1_000_000;
        let mut draws: Vec<f64> = (0..n).map(|_| uniform(&mut s, 0.0, 1.0).unwrap()).collect();
        draws.sort_by(f64::total_cmp);
        let ks = draws
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = (x - i as f64 / n as f64).abs();
                let hi = ((i + 1) as f64 / n as f64 - x).abs();
                lo.max(hi)
            })
            .fold(0.0f64, f64::max);
        assert!(ks < 0.002, "ks = {ks}");
        assert!(uniform(&mut s, 1.0, 1.0).is_err());
    }

    #[test]
    fn streams_are_deterministic_and_interleave_cleanly() {
        let mut a = RngStream::new(7, 1);
        let mut b = RngStream::new(7, 2);
        let alone_a: Vec<f64> = {
            let mut s = RngStream::new(7, 1);
            (0..100).map(|_| normal(&mut s, 0.0, 1.0).unwrap()).collect()
        };
        let alone_b: Vec<f64> = {
            let mut s = RngStream::new(7, 2);
            (0..100).map(|_| normal(&mut s, 0.0, 1.0).unwrap()).collect()
        };
        let mut mixed_a = Vec::new();
        let mut mixed_b = Vec::new();
        for _ in 0..100 {
            mixed_b.push(normal(&mut b, 0.0, 1.0).unwrap());
            mixed_a.push(normal(&mut a, 0.0, 1.0).unwrap());
        }
        assert_eq!(alone_a, mixed_a);
        assert_eq!(alone_b, mixed_b);
        assert_ne!(alone_a, alone_b);
    }

    #[test]
    fn f_cdf_anchors() {
        assert_eq!(f_cdf(0.0, 1.0, 98.0).unwrap(), 0.0);
        assert!((f_cdf(1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-12);
        let p = 1.0 - f_cdf(9.815, 1.0, 98.0).unwrap();
        assert!((p - 0.0023).abs() <= 0.0002, "p = {p}");
        assert!((f_sf(9.815, 1.0, 98.0).unwrap() - p).abs() < 1e-12);
        assert!(f_cdf(1.0, 0.0, 3.0).is_err());
    }

    #[test]
    fn quantile_round_trip() {
        for &p in &[0.9, 0.95, 0.99] {
            let q = f_quantile(p, 1.0, 18.0).unwrap();
            assert!((f_cdf(q, 1.0, 18.0).unwrap() - p).abs() < 1e-8);
        }
        assert!((f_quantile(0.5, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
        assert!(f_quantile(0.9, 1.0, 18.0).unwrap() < f_quantile(0.95, 1.0, 18.0).unwrap());
        assert!(f_quantile(1.0, 1.0, 18.0).is_err());
    }

    #[test]
    fn summary_definitions() {
        let c = summarize(&[2.0; 5]).unwrap();
        assert_eq!(c.variance, 0.0);
        assert_eq!(c.median, 2.0);
        let v = [1.0, 4.0, 2.0, 8.0];
        assert_eq!(mse_vs(&v, &v).unwrap(), 0.0);
        let s = summarize(&v).unwrap();
        // two-pass oracle
        let mean = (1.0 + 4.0 + 2.0 + 8.0) / 4.0;
        let var = ((1.0f64 - mean).powi(2) + (4.0f64 - mean).powi(2) + (2.0f64 - mean).powi(2) + (8.0f64 - mean).powi(2)) / 3.0;
        assert!((s.mean - mean).abs() < 1e-12 && (s.variance - var).abs() < 1e-12);
        assert_eq!(s.median, 3.0);
        assert!(matches!(summarize(&[]), Err(Error::Empty)));
    }
}
