//! Shapiro-Wilk W test (Royston's AS R94 approximation).

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{check_finite, StatsError};

/// Samples with p below this are treated as non-normal.
pub const NORMALITY_ALPHA: f64 = 0.05;

const MIN_N: usize = 3;
const MAX_N: usize = 50;

const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
const C3: [f64; 4] = [0.544, -0.39978, 0.025054, -6.714e-4];
const C4: [f64; 4] = [1.3822, -0.77857, 0.062767, -0.0020322];
const C5: [f64; 4] = [-1.5861, -0.31082, -0.083751, 0.0038915];
const C6: [f64; 3] = [-0.4803, -0.082676, 0.0030302];
const G: [f64; 2] = [-2.273, 0.459];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normality {
    Normal,
    NonNormal,
}

impl Normality {
    pub fn from_p(p: f64) -> Self {
        if p < NORMALITY_ALPHA {
            Normality::NonNormal
        } else {
            Normality::Normal
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Normality::Normal => "Normal",
            Normality::NonNormal => "Non-normal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityResult {
    pub w: f64,
    pub p: f64,
    pub verdict: Normality,
}

fn poly(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, k| acc * x + k)
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// Half of the antisymmetric coefficient vector, largest first.
fn coefficients(n: usize) -> Vec<f64> {
    let half = n / 2;
    if n == 3 {
        return vec![std::f64::consts::FRAC_1_SQRT_2];
    }
    let z = std_normal();
    let an25 = n as f64 + 0.25;
    let m: Vec<f64> = (1..=half).map(|i| z.inverse_cdf((i as f64 - 0.375) / an25)).collect();
    let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
    let ssumm2 = summ2.sqrt();
    let rsn = 1.0 / (n as f64).sqrt();
    let a1 = poly(&C1, rsn) - m[0] / ssumm2;

    let mut a = vec![0.0; half];
    let (first_scaled, fac) = if n > 5 {
        let a2 = -m[1] / ssumm2 + poly(&C2, rsn);
        let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1]) / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2)).sqrt();
        a[1] = a2;
        (2, fac)
    } else {
        let fac = ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt();
        (1, fac)
    };
    a[0] = a1;
    for i in first_scaled..half {
        a[i] = -m[i] / fac;
    }
    a
}

/// W statistic and p-value for 3 to 50 observations.
pub fn shapiro_wilk(sample: &[f64]) -> Result<NormalityResult, StatsError> {
    let n = sample.len();
    if n < MIN_N {
        return Err(StatsError::SampleTooSmall { n, min: MIN_N });
    }
    if n > MAX_N {
        return Err(StatsError::SampleTooLarge { n, max: MAX_N });
    }
    check_finite(sample)?;
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range <= 0.0 || range < 1e-12 * x[n - 1].abs().max(1.0) {
        return Err(StatsError::ZeroVariance);
    }

    let half = coefficients(n);
    let mut coef = vec![0.0; n];
    for (i, a) in half.iter().enumerate() {
        coef[i] = -a;
        coef[n - 1 - i] = *a;
    }

    // Squared correlation between ordered sample and coefficients, on the
    // range-scaled data for numerical stability.
    let xs: Vec<f64> = x.iter().map(|v| (v - x[0]) / range).collect();
    let xm = xs.iter().sum::<f64>() / n as f64;
    let am = coef.iter().sum::<f64>() / n as f64;
    let (mut saa, mut sxx, mut sax) = (0.0, 0.0, 0.0);
    for (a, v) in coef.iter().zip(&xs) {
        let (da, dx) = (a - am, v - xm);
        saa += da * da;
        sxx += dx * dx;
        sax += da * dx;
    }
    let w = (sax * sax / (saa * sxx)).min(1.0);

    let p = p_value(n, w);
    Ok(NormalityResult { w, p, verdict: Normality::from_p(p) })
}

fn p_value(n: usize, w: f64) -> f64 {
    let an = n as f64;
    if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::FRAC_PI_3);
        return p.clamp(0.0, 1.0);
    }
    let w1 = (1.0 - w).ln();
    let (y, m, s) = if n <= 11 {
        let gamma = poly(&G, an);
        if w1 >= gamma {
            return 1e-99;
        }
        (-(gamma - w1).ln(), poly(&C3, an), poly(&C4, an).exp())
    } else {
        let ln_n = an.ln();
        (w1, poly(&C5, ln_n), poly(&C6, ln_n).exp())
    };
    std_normal().sf((y - m) / s).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_two_verdicts() {
        assert_eq!(Normality::from_p(0.060), Normality::Normal);
        assert_eq!(Normality::from_p(0.019), Normality::NonNormal);
        assert_eq!(Normality::from_p(0.05), Normality::Normal);
    }

    #[test]
    fn size_limits() {
        assert_eq!(shapiro_wilk(&[1.0, 2.0]), Err(StatsError::SampleTooSmall { n: 2, min: 3 }));
        assert_eq!(shapiro_wilk(&[1.0; 51]), Err(StatsError::SampleTooLarge { n: 51, max: 50 }));
        assert_eq!(shapiro_wilk(&[4.0; 10]), Err(StatsError::ZeroVariance));
        assert_eq!(shapiro_wilk(&[1.0, f64::NAN, 2.0]), Err(StatsError::NonFinite));
    }

    #[test]
    fn coefficients_are_unit_norm() {
        for n in 3..=50 {
            let a = coefficients(n);
            let norm: f64 = 2.0 * a.iter().map(|v| v * v).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-6, "n={n} norm={norm}");
        }
    }

    #[test]
    fn equally_spaced_is_close_to_normal() {
        let x: Vec<f64> = (0..20).map(f64::from).collect();
        let r = shapiro_wilk(&x).unwrap();
        assert!(r.w > 0.9 && r.w <= 1.0);
        assert_eq!(r.verdict, Normality::Normal);
    }

    #[test]
    fn order_does_not_matter() {
        let a = [3.1, 0.2, 5.5, 1.0, 2.2, 9.0, 0.4];
        let mut b = a;
        b.reverse();
        assert_eq!(shapiro_wilk(&a).unwrap(), shapiro_wilk(&b).unwrap());
    }
}
