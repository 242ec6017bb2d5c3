//! Descriptive statistics and the parametric tests used to compare metric
//! distributions: one-sample t, Welch's two-sample t and Welch's one-way
//! ANOVA.
//!
//! Tail probabilities come from the regularized incomplete beta function,
//! evaluated with a modified-Lentz continued fraction.

use serde::{Deserialize, Serialize};

use crate::error::StatsError;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;
    const MAX_ITER: usize = 10_000;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function I_x(a, b).
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

/// Student-t upper tail P(T > t).
pub fn t_sf(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t == f64::INFINITY {
        return 0.0;
    }
    if t == f64::NEG_INFINITY {
        return 1.0;
    }
    let tail = 0.5 * regularized_incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    if t > 0.0 {
        tail
    } else {
        1.0 - tail
    }
}

pub fn t_cdf(t: f64, df: f64) -> f64 {
    t_sf(-t, df)
}

/// Quantile of the Student-t distribution, by bisection on the CDF.
pub fn t_quantile(p: f64, df: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    if p == 0.5 {
        return 0.0;
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while t_cdf(lo, df) > p {
        lo *= 2.0;
    }
    while t_cdf(hi, df) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// F-distribution CDF.
pub fn f_cdf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    regularized_incomplete_beta(df1 / 2.0, df2 / 2.0, df1 * x / (df1 * x + df2))
}

/// F-distribution upper tail P(F > x).
pub fn f_sf(x: f64, df1: f64, df2: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x == f64::INFINITY {
        return 0.0;
    }
    regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, df2 / (df2 + df1 * x))
}

/// Summary columns reported for each metric.
///
/// Spread and interval fields need at least two observations and are `None`
/// for a single-element sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    pub se: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub median: f64,
    pub sd: Option<f64>,
    pub variance: Option<f64>,
    pub iqr: f64,
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Sample variance (n - 1 denominator).
pub fn variance(samples: &[f64]) -> f64 {
    let m = mean(samples);
    samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (samples.len() as f64 - 1.0)
}

/// Linear-interpolation quantile (Hyndman-Fan type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn describe(samples: &[f64], confidence: f64) -> Result<DescriptiveStats, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidConfidence(confidence));
    }
    let n = samples.len();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = mean(&sorted);
    let median = quantile_sorted(&sorted, 0.5);
    let iqr = quantile_sorted(&sorted, 0.75) - quantile_sorted(&sorted, 0.25);
    let mut stats = DescriptiveStats {
        n,
        mean: m,
        se: None,
        ci_low: None,
        ci_high: None,
        median,
        sd: None,
        variance: None,
        iqr,
    };
    if n >= 2 {
        let var = variance(&sorted);
        let sd = var.sqrt();
        let se = sd / (n as f64).sqrt();
        let half_width = t_quantile((1.0 + confidence) / 2.0, (n - 1) as f64) * se;
        stats.variance = Some(var);
        stats.sd = Some(sd);
        stats.se = Some(se);
        stats.ci_low = Some(m - half_width);
        stats.ci_high = Some(m + half_width);
    }
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Greater,
    Less,
}

/// Outcome of a hypothesis test. `df2` is set only for F tests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub statistic: f64,
    pub df: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub df2: Option<f64>,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub alternative: Alternative,
}

fn t_p_value(t: f64, df: f64, alternative: Alternative) -> f64 {
    let p = match alternative {
        Alternative::TwoSided => 2.0 * t_sf(t.abs(), df),
        Alternative::Greater => t_sf(t, df),
        Alternative::Less => t_sf(-t, df),
    };
    p.clamp(0.0, 1.0)
}

pub fn one_sample_t_test(samples: &[f64], mu0: f64, alternative: Alternative) -> Result<TestResult, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if samples.len() < 2 {
        return Err(StatsError::DegenerateSample);
    }
    let n = samples.len() as f64;
    let sd = variance(samples).sqrt();
    if sd == 0.0 {
        return Err(StatsError::DegenerateSample);
    }
    let t = (mean(samples) - mu0) / (sd / n.sqrt());
    let df = n - 1.0;
    Ok(TestResult {
        test: "one_sample_t".into(),
        statistic: t,
        df,
        df2: None,
        p_value: t_p_value(t, df, alternative),
        alternative,
    })
}

/// Welch's unequal-variance t test with Welch-Satterthwaite degrees of
/// freedom.
///
/// When both groups have zero variance the statistic is taken at its limit:
/// `t = 0, p = 1` for equal means, `t = ±inf` (p = 0 in the direction of the
/// difference) otherwise, with `df = n_a + n_b - 2`.
pub fn welch_t_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::DegenerateSample);
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, mb) = (mean(a), mean(b));
    let (va, vb) = (variance(a) / na, variance(b) / nb);
    let se2 = va + vb;
    let (t, df) = if se2 == 0.0 {
        let t = if ma == mb {
            0.0
        } else if ma > mb {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        };
        (t, na + nb - 2.0)
    } else {
        let df = se2 * se2 / (va * va / (na - 1.0) + vb * vb / (nb - 1.0));
        ((ma - mb) / se2.sqrt(), df)
    };
    Ok(TestResult {
        test: "welch_t".into(),
        statistic: t,
        df,
        df2: None,
        p_value: t_p_value(t, df, alternative),
        alternative,
    })
}

/// Welch's heteroscedastic one-way ANOVA.
pub fn welch_anova(groups: &[&[f64]]) -> Result<TestResult, StatsError> {
    if groups.len() < 2 {
        return Err(StatsError::TooFewGroups);
    }
    if groups.iter().any(|g| g.is_empty()) {
        return Err(StatsError::EmptySample);
    }
    if groups.iter().any(|g| g.len() < 2) {
        return Err(StatsError::DegenerateSample);
    }
    let k = groups.len() as f64;
    let mut weights = Vec::with_capacity(groups.len());
    let mut means = Vec::with_capacity(groups.len());
    for group in groups {
        let var = variance(group);
        if var <= 0.0 {
            return Err(StatsError::DegenerateSample);
        }
        weights.push(group.len() as f64 / var);
        means.push(mean(group));
    }
    let total_weight: f64 = weights.iter().sum();
    let grand = weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>() / total_weight;
    let between = weights
        .iter()
        .zip(&means)
        .map(|(w, m)| w * (m - grand) * (m - grand))
        .sum::<f64>()
        / (k - 1.0);
    let lambda = weights
        .iter()
        .zip(groups)
        .map(|(w, g)| {
            let r = 1.0 - w / total_weight;
            r * r / (g.len() as f64 - 1.0)
        })
        .sum::<f64>();
    let denom = 1.0 + 2.0 * (k - 2.0) * lambda / (k * k - 1.0);
    let f = between / denom;
    let df1 = k - 1.0;
    let df2 = (k * k - 1.0) / (3.0 * lambda);
    Ok(TestResult {
        test: "welch_anova".into(),
        statistic: f,
        df: df1,
        df2: Some(df2),
        p_value: f_sf(f, df1, df2).clamp(0.0, 1.0),
        alternative: Alternative::Greater,
    })
}
