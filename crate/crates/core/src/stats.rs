//! Shared numeric helpers: compensated sums, moments, normal/beta/gamma
//! quantiles, a Kolmogorov-Smirnov test and a tiny OLS.

use statrs::distribution::{Beta, ContinuousCDF, Normal};
use std::sync::OnceLock;

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).unwrap())
}

pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

pub fn two_sided_p(z: f64) -> f64 {
    2.0 * (1.0 - normal_cdf(z.abs()))
}

pub fn beta_quantile(a: f64, b: f64, p: f64) -> f64 {
    Beta::new(a, b).unwrap().inverse_cdf(p)
}

/// Neumaier-compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn kahan_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut s = KahanSum::new();
    for v in it {
        s.add(v);
    }
    s.value()
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = kahan_sum(xs.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = kahan_sum(xs.iter().map(|x| (x - mean) * (x - mean)));
    (mean, ss / (n - 1) as f64)
}

/// Standard error of the sample mean.
pub fn std_error(xs: &[f64]) -> f64 {
    let (_, var) = mean_var(xs);
    (var / xs.len() as f64).sqrt()
}

/// Standard error of the unbiased sample variance, from the fourth central
/// moment: Var[s^2] = (m4 - s^4 (n-3)/(n-1)) / n.
pub fn std_error_of_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mean, var) = mean_var(xs);
    let m4 = kahan_sum(xs.iter().map(|x| (x - mean).powi(4))) / n;
    ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
}

/// Poisson quantile by direct CDF inversion; exact for the moderate means
/// used here.
pub fn poisson_quantile(mean: f64, u: f64) -> f64 {
    debug_assert!(mean >= 0.0 && u > 0.0 && u < 1.0);
    if mean == 0.0 {
        return 0.0;
    }
    let mut k = 0u64;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    let cap = (mean + 12.0 * (mean + 1.0).sqrt() + 60.0) as u64;
    while cdf < u && k < cap {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    k as f64
}

/// Regularized lower incomplete gamma P(shape, x) via statrs.
fn gamma_p(shape: f64, x: f64) -> f64 {
    statrs::function::gamma::gamma_lr(shape, x)
}

/// Quantile of Gamma(shape, scale = 1): Wilson-Hilferty start, then
/// bracket-safeguarded Newton on the regularized incomplete gamma.
pub fn gamma_quantile(shape: f64, u: f64) -> f64 {
    debug_assert!(shape > 0.0 && u > 0.0 && u < 1.0);
    let z = normal_quantile(u);
    let k = shape;
    let wh = k * (1.0 - 1.0 / (9.0 * k) + z / (3.0 * k.sqrt())).powi(3);
    let mut x = if wh.is_finite() && wh > 0.0 { wh } else { k };
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    for _ in 0..64 {
        let f = gamma_p(k, x) - u;
        if f >= 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let lpdf = (k - 1.0) * x.ln() - x - statrs::function::gamma::ln_gamma(k);
        let pdf = lpdf.exp();
        let mut next = if pdf > 0.0 && pdf.is_finite() {
            x - f / pdf
        } else {
            f64::NAN
        };
        // Fall back to bisection (or doubling while unbracketed above)
        // whenever Newton leaves the bracket.
        if !next.is_finite() || next <= lo || next >= hi {
            next = if hi.is_finite() {
                0.5 * (lo + hi)
            } else {
                (2.0 * x).max(1.0)
            };
        }
        if (next - x).abs() <= 1e-13 * x.abs().max(1e-300) {
            return next;
        }
        x = next;
    }
    x
}

/// Blom plotting position (k - 3/8) / (n + 1/4) for 1-based rank k.
pub fn blom_position(k: usize, n: usize) -> f64 {
    (k as f64 - 0.375) / (n as f64 + 0.25)
}

/// Kolmogorov-Smirnov distance against the standard normal.
pub fn ks_distance_normal(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = normal_cdf(x);
        let lo = i as f64 / n;
        let hi = (i + 1) as f64 / n;
        d = d.max((f - lo).abs()).max((hi - f).abs());
    }
    d
}

/// Asymptotic KS p-value via the Kolmogorov series with the small-sample
/// correction sqrt(n) + 0.12 + 0.11/sqrt(n).
pub fn ks_p_value(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda < 1e-3 {
        return 1.0;
    }
    let mut p = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = 2.0 * (-1.0f64).powi(k + 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        p += term;
        if term.abs() < 1e-12 {
            break;
        }
    }
    p.clamp(0.0, 1.0)
}

/// Wald binomial confidence interval.
pub fn wald_ci(successes: usize, trials: usize, level: f64) -> (f64, f64) {
    let n = trials as f64;
    let rate = successes as f64 / n;
    let z = normal_quantile(0.5 + level / 2.0);
    let half = z * (rate * (1.0 - rate) / n).sqrt();
    ((rate - half).max(0.0), (rate + half).min(1.0))
}

/// OLS slope of y on x, with its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let dof = (x.len().saturating_sub(2)) as f64;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| {
            let e = b - (intercept + slope * a);
            e * e
        })
        .sum();
    let se = if dof > 0.0 { (sse / dof / sxx).sqrt() } else { 0.0 };
    (slope, se)
}
