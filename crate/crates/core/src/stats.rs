//! Statistical primitives shared by the evaluation harness and the EEG
//! analysis: Student t-tests, Cohen's d, Spearman correlation, mean/SD.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub df: f64,
    pub p_two_tailed: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effect_size: Option<f64>,
    /// Set when both samples have zero variance; the test is then reported as
    /// `t = 0, p = 1` if the means agree.
    #[serde(default)]
    pub degenerate: bool,
}

impl TestResult {
    pub fn significant(&self, alpha: f64) -> bool {
        self.p_two_tailed < alpha
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TTestKind {
    #[default]
    Pooled,
    Welch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    /// `None` when either variable is constant.
    pub rho: Option<f64>,
    pub p_two_tailed: Option<f64>,
    pub n: usize,
}

fn require(len: usize, needed: usize) -> Result<()> {
    if len < needed {
        Err(Error::InsufficientData { needed, got: len })
    } else {
        Ok(())
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased (n - 1) sample variance.
pub fn sample_variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Mean and Bessel-corrected standard deviation.
pub fn mean_std(xs: &[f64]) -> Result<(f64, f64)> {
    require(xs.len(), 2)?;
    Ok((mean(xs), sample_variance(xs).sqrt()))
}

fn pooled_sd(a: &[f64], b: &[f64]) -> f64 {
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    (((n1 - 1.0) * sample_variance(a) + (n2 - 1.0) * sample_variance(b)) / (n1 + n2 - 2.0)).sqrt()
}

/// Independent two-sample t-test, pooled variance, `df = n1 + n2 - 2`.
/// The effect size field carries Cohen's d when it is defined.
pub fn t_independent_pooled(a: &[f64], b: &[f64]) -> Result<TestResult> {
    require(a.len(), 2)?;
    require(b.len(), 2)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let df = n1 + n2 - 2.0;
    let diff = mean(a) - mean(b);
    let sp = pooled_sd(a, b);
    if sp == 0.0 {
        return Ok(degenerate_result(diff, df));
    }
    let t = diff / (sp * (1.0 / n1 + 1.0 / n2).sqrt());
    Ok(TestResult { statistic: t, df, p_two_tailed: student_t_two_tailed(t, df), effect_size: Some(diff / sp), degenerate: false })
}

/// Welch's unequal-variance t-test with Welch-Satterthwaite df.
pub fn t_independent_welch(a: &[f64], b: &[f64]) -> Result<TestResult> {
    require(a.len(), 2)?;
    require(b.len(), 2)?;
    let (n1, n2) = (a.len() as f64, b.len() as f64);
    let (v1, v2) = (sample_variance(a) / n1, sample_variance(b) / n2);
    let diff = mean(a) - mean(b);
    if v1 + v2 == 0.0 {
        return Ok(degenerate_result(diff, n1 + n2 - 2.0));
    }
    let t = diff / (v1 + v2).sqrt();
    let df = (v1 + v2).powi(2) / (v1 * v1 / (n1 - 1.0) + v2 * v2 / (n2 - 1.0));
    let d = cohens_d(a, b)?;
    Ok(TestResult { statistic: t, df, p_two_tailed: student_t_two_tailed(t, df), effect_size: d, degenerate: false })
}

pub fn t_test(kind: TTestKind, a: &[f64], b: &[f64]) -> Result<TestResult> {
    match kind {
        TTestKind::Pooled => t_independent_pooled(a, b),
        TTestKind::Welch => t_independent_welch(a, b),
    }
}

fn degenerate_result(diff: f64, df: f64) -> TestResult {
    if diff == 0.0 {
        TestResult { statistic: 0.0, df, p_two_tailed: 1.0, effect_size: None, degenerate: true }
    } else {
        TestResult { statistic: diff.signum() * f64::INFINITY, df, p_two_tailed: 0.0, effect_size: None, degenerate: true }
    }
}

/// `(mean(a) - mean(b)) / pooled SD`; `None` when the pooled SD is zero.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    require(a.len(), 2)?;
    require(b.len(), 2)?;
    let sp = pooled_sd(a, b);
    Ok((sp > 0.0).then(|| (mean(a) - mean(b)) / sp))
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&i, &j| xs[i].total_cmp(&xs[j]));
    let mut ranks = vec![0.0; xs.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && xs[idx[end]] == xs[idx[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with a two-tailed p from the t approximation
/// `t = rho * sqrt((n - 2) / (1 - rho^2))`.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Correlation> {
    if a.len() != b.len() {
        return Err(Error::Shape(format!("paired samples of length {} and {}", a.len(), b.len())));
    }
    require(a.len(), 5)?;
    let n = a.len();
    let rho = pearson(&average_ranks(a), &average_ranks(b));
    let p = rho.map(|r| spearman_p_t_approx(r, n));
    Ok(Correlation { rho, p_two_tailed: p, n })
}

pub fn spearman_p_t_approx(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    if (1.0 - rho * rho) <= 0.0 {
        return 0.0;
    }
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    student_t_two_tailed(t, df)
}

/// Exact two-tailed permutation p-value for Spearman's rho, enumerating all
/// `n!` orderings of `b`. Only for small `n` (at most 9).
pub fn spearman_exact_p(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() || a.len() > 9 {
        return Err(Error::Shape("exact permutation p needs paired samples with n <= 9".into()));
    }
    require(a.len(), 3)?;
    let ra = average_ranks(a);
    let rb = average_ranks(b);
    let Some(observed) = pearson(&ra, &rb) else { return Ok(None) };
    let mut perm = rb.clone();
    let mut extreme = 0u64;
    let mut total = 0u64;
    permute(&mut perm, 0, &mut |p| {
        total += 1;
        if pearson(&ra, p).is_some_and(|r| r.abs() >= observed.abs() - 1e-12) {
            extreme += 1;
        }
    });
    Ok(Some(extreme as f64 / total as f64))
}

fn permute(v: &mut Vec<f64>, k: usize, visit: &mut impl FnMut(&[f64])) {
    if k == v.len() {
        visit(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, visit);
        v.swap(k, i);
    }
}

/// Two-tailed p-value of Student's t with `df` degrees of freedom:
/// `I_{df/(df+t^2)}(df/2, 1/2)`.
pub fn student_t_two_tailed(t: f64, df: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    let x = df / (df + t * t);
    regularized_incomplete_beta(df / 2.0, 0.5, x).clamp(0.0, 1.0)
}

/// Student t cumulative distribution function.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * student_t_two_tailed(t, df);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `ln Gamma(x)` for `x > 0` (Lanczos, g = 7, 9 terms).
pub fn ln_gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
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
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEF[0];
    for (i, c) in COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized incomplete beta `I_x(a, b)` via Lentz's continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    if x < (a + 1.0) / (a + b + 2.0) {
        ln_front.exp() * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - ln_front.exp() * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
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
    for m in 1..=10_000 {
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

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, StudentsT};

    #[test]
    fn hand_t_example() {
        let r = t_independent_pooled(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((r.statistic + 1.224744871391589).abs() < 1e-12);
        assert_eq!(r.df, 4.0);
        assert_eq!(r.effect_size, Some(-1.0));
    }

    #[test]
    fn equal_samples() {
        let r = t_independent_pooled(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.statistic, r.p_two_tailed), (0.0, 1.0));
        let r = t_independent_pooled(&[2.0, 2.0], &[2.0, 2.0, 2.0]).unwrap();
        assert!(r.degenerate);
        assert_eq!((r.statistic, r.p_two_tailed), (0.0, 1.0));
    }

    #[test]
    fn separated_samples_are_highly_significant() {
        let a: Vec<f64> = (0..40).map(|i| 10.0 + (i % 7) as f64 * 0.1).collect();
        let b: Vec<f64> = (0..40).map(|i| (i % 5) as f64 * 0.1).collect();
        assert!(t_independent_pooled(&a, &b).unwrap().p_two_tailed < 1e-6);
    }

    #[test]
    fn thirty_one_df_for_thirteen_plus_twenty() {
        let a: Vec<f64> = (0..13).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| (i as f64).sqrt()).collect();
        assert_eq!(t_independent_pooled(&a, &b).unwrap().df, 31.0);
    }

    #[test]
    fn reported_t_maps_to_reported_p() {
        // t(31) = 2.822 with two-tailed p = 0.008
        let p = student_t_two_tailed(2.822, 31.0);
        assert!((p - 0.008).abs() < 5e-4, "{p}");
    }

    #[test]
    fn student_cdf_matches_statrs() {
        for &df in &[1.0, 2.5, 4.0, 31.0, 98.0] {
            let dist = StudentsT::new(0.0, 1.0, df).unwrap();
            for &t in &[-6.0, -2.0, -0.3, 0.0, 0.7, 1.96, 4.5] {
                assert!((student_t_cdf(t, df) - dist.cdf(t)).abs() < 1e-10, "df {df} t {t}");
            }
        }
    }

    #[test]
    fn cohens_d_cases() {
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), Some(0.0));
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]).unwrap(), Some(-1.0));
        let a = [0.3, 1.9, 2.2, 5.0];
        let b = [1.0, -0.4, 0.8];
        assert_eq!(cohens_d(&a, &b).unwrap().unwrap(), -cohens_d(&b, &a).unwrap().unwrap());
        assert_eq!(cohens_d(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), None);
    }

    #[test]
    fn spearman_cases() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(spearman(&a, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap().rho, Some(1.0));
        assert_eq!(spearman(&a, &a.map(|x| -x)).unwrap().rho, Some(-1.0));
        let r = spearman(&a, &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r.rho.unwrap() - 0.8).abs() < 1e-15);
        assert!(spearman(&a, &[3.0; 5]).unwrap().rho.is_none());
        assert!(matches!(spearman(&a[..4], &a[..4]), Err(Error::InsufficientData { needed: 5, got: 4 })));
    }

    #[test]
    fn ties_get_average_ranks() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn exact_p_is_close_to_t_approximation_for_moderate_n() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0];
        let b = [2.0, 1.0, 4.0, 3.0, 6.0, 5.0, 9.0, 7.0, 8.0];
        let exact = spearman_exact_p(&a, &b).unwrap().unwrap();
        let approx = spearman(&a, &b).unwrap().p_two_tailed.unwrap();
        assert!(exact < 0.01 && approx < 0.01);
    }

    #[test]
    fn mean_std_cases() {
        let (m, s) = mean_std(&[80.0, 90.0]).unwrap();
        assert_eq!(m, 85.0);
        assert!((s - 50f64.sqrt()).abs() < 1e-12);
        assert_eq!(mean_std(&[4.0; 6]).unwrap().1, 0.0);
        assert!(mean_std(&[1.0]).is_err());
        assert_eq!(mean_std(&[3.0, 1.0, 2.0]).unwrap(), mean_std(&[1.0, 2.0, 3.0]).unwrap());
    }

    #[test]
    fn welch_reduces_to_pooled_for_equal_sizes_and_variances() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [2.5, 3.5, 4.5, 5.5];
        let (p, w) = (t_independent_pooled(&a, &b).unwrap(), t_independent_welch(&a, &b).unwrap());
        assert!((p.statistic - w.statistic).abs() < 1e-12);
        assert!((p.df - w.df).abs() < 1e-12);
    }

    #[test]
    fn shift_invariances() {
        let a = [0.3, 1.1, 2.7, 0.9, 1.6];
        let b = [1.3, 0.1, 0.7, 2.9, 1.0];
        let t0 = t_independent_pooled(&a, &b).unwrap().statistic;
        let t1 = t_independent_pooled(&a.map(|x| x + 7.0), &b.map(|x| x + 7.0)).unwrap().statistic;
        assert!((t0 - t1).abs() < 1e-10);
        let r0 = spearman(&a, &b).unwrap().rho.unwrap();
        let r1 = spearman(&a.map(|x| x - 3.0), &b.map(|x| x.exp())).unwrap().rho.unwrap();
        assert!((r0 - r1).abs() < 1e-12);
    }
}
