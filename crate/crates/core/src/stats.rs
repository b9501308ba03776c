//! One-way ANOVA with exact F-distribution p-values, and Tukey boxplot
//! summaries.

use crate::error::{Error, Result};

/// Result of a one-way ANOVA.
#[derive(Debug, Clone)]
pub struct AnovaResult {
    /// F statistic; `+inf` when within-group variance is zero but groups
    /// differ.
    pub f_stat: f64,
    pub p_value: f64,
    pub df_between: u64,
    pub df_within: u64,
    pub groups: Vec<GroupStat>,
}

#[derive(Debug, Clone, Copy)]
pub struct GroupStat {
    pub n: usize,
    pub mean: f64,
}

/// ln Gamma via the Lanczos approximation (g = 7, 9 terms).
fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        let pi = std::f64::consts::PI;
        pi.ln() - (pi * z).sin().ln() - ln_gamma(1.0 - z)
    } else {
        let z = z - 1.0;
        let mut sum = COEFFS[0];
        for (i, c) in COEFFS.iter().enumerate().skip(1) {
            sum += c / (z + i as f64);
        }
        let t = z + 7.5;
        0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + sum.ln()
    }
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 400;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

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
        let del = d * c;
        h *= del;

        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta I_x(a, b).
pub fn beta_inc_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// F-distribution CDF with `d1`/`d2` degrees of freedom:
/// I_{d1 x / (d1 x + d2)}(d1/2, d2/2).
pub fn f_cdf(x: f64, d1: u64, d2: u64) -> Result<f64> {
    if d1 < 1 || d2 < 1 {
        return Err(Error::Stats(format!(
            "degrees of freedom must be >= 1, got ({d1}, {d2})"
        )));
    }
    if x.is_nan() {
        return Err(Error::Stats("f_cdf of NaN".into()));
    }
    if x <= 0.0 {
        return Ok(0.0);
    }
    if x.is_infinite() {
        return Ok(1.0);
    }
    let d1 = d1 as f64;
    let d2 = d2 as f64;
    Ok(beta_inc_reg(d1 / 2.0, d2 / 2.0, d1 * x / (d1 * x + d2)))
}

/// Upper tail of the F distribution, computed through the complementary
/// beta argument so tiny p-values keep full precision.
pub fn f_sf(x: f64, d1: u64, d2: u64) -> Result<f64> {
    if d1 < 1 || d2 < 1 {
        return Err(Error::Stats(format!(
            "degrees of freedom must be >= 1, got ({d1}, {d2})"
        )));
    }
    if x.is_nan() {
        return Err(Error::Stats("f_sf of NaN".into()));
    }
    if x <= 0.0 {
        return Ok(1.0);
    }
    if x.is_infinite() {
        return Ok(0.0);
    }
    let d1 = d1 as f64;
    let d2 = d2 as f64;
    Ok(beta_inc_reg(d2 / 2.0, d1 / 2.0, d2 / (d1 * x + d2)))
}

/// One-way ANOVA over `groups`.
///
/// Degenerate cases: all values identical gives F = 0, p = 1; identical
/// values within every group but differing group means gives F = +inf,
/// p = 0.
pub fn anova_oneway(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    let k = groups.len();
    if k < 2 {
        return Err(Error::Stats(format!("anova needs >= 2 groups, got {k}")));
    }
    for (i, g) in groups.iter().enumerate() {
        if g.len() < 2 {
            return Err(Error::Stats(format!(
                "anova group {i} has {} values; need >= 2",
                g.len()
            )));
        }
        if let Some(v) = g.iter().find(|v| !v.is_finite()) {
            return Err(Error::Stats(format!(
                "anova group {i} contains non-finite value {v}"
            )));
        }
    }

    // order-insensitive sums: F must not move when values are permuted
    // within a group
    fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
        let mut v: Vec<f64> = values.collect();
        v.sort_by(f64::total_cmp);
        v.iter().sum()
    }

    let n_total: usize = groups.iter().map(|g| g.len()).sum();
    let group_sums: Vec<f64> = groups
        .iter()
        .map(|g| stable_sum(g.iter().copied()))
        .collect();
    let grand_mean = group_sums.iter().sum::<f64>() / n_total as f64;

    let mut ssb = 0.0;
    let mut ssw = 0.0;
    let mut stats = Vec::with_capacity(k);
    for (g, sum) in groups.iter().zip(&group_sums) {
        let mean = sum / g.len() as f64;
        ssb += g.len() as f64 * (mean - grand_mean) * (mean - grand_mean);
        ssw += stable_sum(g.iter().map(|v| (v - mean) * (v - mean)));
        stats.push(GroupStat { n: g.len(), mean });
    }

    let df_between = (k - 1) as u64;
    let df_within = (n_total - k) as u64;

    let (f_stat, p_value) = if ssw == 0.0 {
        if ssb == 0.0 {
            (0.0, 1.0)
        } else {
            (f64::INFINITY, 0.0)
        }
    } else {
        let f = (ssb / df_between as f64) / (ssw / df_within as f64);
        (f, f_sf(f, df_between, df_within)?)
    };

    Ok(AnovaResult {
        f_stat,
        p_value,
        df_between,
        df_within,
        groups: stats,
    })
}

/// Five-number boxplot summary with Tukey 1.5*IQR whiskers.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSummary {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation of order statistics over a sorted
/// slice (h = (n-1)p).
fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let frac = h - lo as f64;
    if lo + 1 >= n {
        sorted[n - 1]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

pub fn box_summary(values: &[f64]) -> Result<BoxSummary> {
    if values.is_empty() {
        return Err(Error::Stats("box summary of empty input".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Stats(format!(
            "box summary input contains non-finite value {v}"
        )));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let q1 = quantile_sorted(&sorted, 0.25);
    let median = quantile_sorted(&sorted, 0.5);
    let q3 = quantile_sorted(&sorted, 0.75);
    let iqr = q3 - q1;
    let fence_lo = q1 - 1.5 * iqr;
    let fence_hi = q3 + 1.5 * iqr;

    let whisker_lo = sorted
        .iter()
        .copied()
        .find(|&v| v >= fence_lo)
        .unwrap_or(q1);
    let whisker_hi = sorted
        .iter()
        .rev()
        .copied()
        .find(|&v| v <= fence_hi)
        .unwrap_or(q3);
    let outliers: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&v| v < fence_lo || v > fence_hi)
        .collect();

    Ok(BoxSummary {
        median,
        q1,
        q3,
        whisker_lo,
        whisker_hi,
        outliers,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    /// Quadrature oracle for the F CDF: integrate the density with the
    /// substitution t = u^2, which removes the t^(d1/2 - 1) endpoint
    /// singularity for d1 = 1. Composite Simpson.
    fn f_cdf_quadrature(x: f64, d1: u64, d2: u64) -> f64 {
        let (d1f, d2f) = (d1 as f64, d2 as f64);
        let ln_norm = (d1f / 2.0) * (d1f / d2f).ln()
            - (ln_gamma(d1f / 2.0) + ln_gamma(d2f / 2.0) - ln_gamma((d1f + d2f) / 2.0));
        // integrand after t = u^2: pdf(u^2) * 2u = 2 e^{ln_norm} u^{d1-1}
        // (1 + d1 u^2/d2)^{-(d1+d2)/2}; finite and nonzero at u = 0 when
        // d1 = 1
        let g = |u: f64| -> f64 {
            let tail = (1.0 + d1f * u * u / d2f).powf(-(d1f + d2f) / 2.0);
            2.0 * ln_norm.exp() * u.powi(d1 as i32 - 1) * tail
        };
        let b = x.sqrt();
        let n = 40_000; // even
        let h = b / n as f64;
        let mut acc = g(0.0) + g(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * g(i as f64 * h);
        }
        acc * h / 3.0
    }

    /// Quadrature oracle for the central t CDF (even integrand trick:
    /// P(T <= t) = 0.5 + integral from 0 to t of the density).
    fn t_cdf_quadrature(t: f64, df: u64) -> f64 {
        let v = df as f64;
        let ln_norm = ln_gamma((v + 1.0) / 2.0)
            - ln_gamma(v / 2.0)
            - 0.5 * (v * std::f64::consts::PI).ln();
        let pdf = |u: f64| (ln_norm - (v + 1.0) / 2.0 * (1.0 + u * u / v).ln()).exp();
        let (sign, b) = if t >= 0.0 { (1.0, t) } else { (-1.0, -t) };
        let n = 40_000;
        let h = b / n as f64;
        let mut acc = pdf(0.0) + pdf(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * pdf(i as f64 * h);
        }
        0.5 + sign * acc * h / 3.0
    }

    #[test]
    fn f_cdf_basics() {
        assert_eq!(f_cdf(0.0, 3, 7).unwrap(), 0.0);
        assert!(f_cdf(1e9, 3, 7).unwrap() >= 1.0 - 1e-9);
        // F(d, d) is symmetric about 1
        assert!((f_cdf(1.0, 10, 10).unwrap() - 0.5).abs() < 1e-12);
        assert!(f_cdf(1.0, 0, 3).is_err());
    }

    #[test]
    fn f_cdf_matches_quadrature_for_small_dfs() {
        for &d1 in &[1u64, 2, 3, 5, 10, 30, 60] {
            for &d2 in &[1u64, 2, 4, 7, 20, 60] {
                for &x in &[0.2, 0.5, 1.0, 2.5, 5.0] {
                    let got = f_cdf(x, d1, d2).unwrap();
                    let want = f_cdf_quadrature(x, d1, d2);
                    assert!(
                        (got - want).abs() < 1e-8,
                        "d1={d1} d2={d2} x={x}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn f_cdf_is_nondecreasing() {
        let mut rng = SeededRng::new(5);
        for _ in 0..200 {
            let d1 = 1 + (rng.uniform() * 40.0) as u64;
            let d2 = 1 + (rng.uniform() * 40.0) as u64;
            let x1 = rng.uniform() * 8.0;
            let x2 = x1 + rng.uniform() * 4.0;
            assert!(f_cdf(x2, d1, d2).unwrap() >= f_cdf(x1, d1, d2).unwrap());
        }
    }

    #[test]
    fn f_sf_complements_cdf() {
        for &x in &[0.3, 1.0, 4.2] {
            let c = f_cdf(x, 5, 12).unwrap();
            let s = f_sf(x, 5, 12).unwrap();
            assert!((c + s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_groups_give_f_zero_p_one() {
        let g = vec![vec![1.0, 2.0, 3.0]; 3];
        let r = anova_oneway(&g).unwrap();
        assert_eq!(r.f_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.df_between, 2);
        assert_eq!(r.df_within, 6);
    }

    #[test]
    fn constant_distinct_groups_give_infinite_f() {
        let g = vec![vec![1.0, 1.0], vec![2.0, 2.0]];
        let r = anova_oneway(&g).unwrap();
        assert!(r.f_stat.is_infinite());
        assert_eq!(r.p_value, 0.0);
    }

    #[test]
    fn two_group_f_equals_t_squared() {
        let a = vec![4.1, 5.3, 4.8, 6.0, 5.5, 4.9];
        let b = vec![6.2, 7.1, 6.6, 7.8, 6.9];
        let r = anova_oneway(&[a.clone(), b.clone()]).unwrap();

        // independent pooled two-sample t-test oracle
        let (na, nb) = (a.len() as f64, b.len() as f64);
        let ma = a.iter().sum::<f64>() / na;
        let mb = b.iter().sum::<f64>() / nb;
        let va = a.iter().map(|v| (v - ma).powi(2)).sum::<f64>() / (na - 1.0);
        let vb = b.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / (nb - 1.0);
        let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0);
        let t = (ma - mb) / (sp2 * (1.0 / na + 1.0 / nb)).sqrt();
        let df = (na + nb - 2.0) as u64;
        let p_t = 2.0 * (1.0 - t_cdf_quadrature(t.abs(), df));

        assert!((r.f_stat - t * t).abs() < 1e-9, "{} vs {}", r.f_stat, t * t);
        assert!((r.p_value - p_t).abs() < 1e-9, "{} vs {p_t}", r.p_value);
    }

    #[test]
    fn three_group_example_matches_closed_form_and_quadrature() {
        let groups = vec![
            vec![1.0, 2.0, 3.0],
            vec![2.0, 3.0, 4.0],
            vec![6.0, 7.0, 8.0],
        ];
        let r = anova_oneway(&groups).unwrap();
        // brute-force closed-form sums: SSB = 42, SSW = 6, F = 21
        assert!((r.f_stat - 21.0).abs() < 1e-12);
        // with d1 = 2 the survival function has the closed form
        // (1 + 2F/d2)^(-d2/2) = 8^-3
        assert!((r.p_value - 1.0 / 512.0).abs() < 1e-12);
        let want = 1.0 - f_cdf_quadrature(21.0, 2, 6);
        assert!((r.p_value - want).abs() < 1e-6);
    }

    #[test]
    fn anova_invariances() {
        let mut rng = SeededRng::new(9);
        let groups: Vec<Vec<f64>> = (0..4)
            .map(|g| (0..6).map(|_| rng.bipolar() + g as f64 * 0.2).collect())
            .collect();
        let base = anova_oneway(&groups).unwrap();

        let shifted: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.iter().map(|v| v + 17.25).collect())
            .collect();
        let scaled: Vec<Vec<f64>> = groups
            .iter()
            .map(|g| g.iter().map(|v| v * -3.5).collect())
            .collect();
        let mut permuted = groups.clone();
        for g in &mut permuted {
            g.reverse();
        }

        assert!((anova_oneway(&shifted).unwrap().f_stat - base.f_stat).abs() < 1e-9);
        assert!((anova_oneway(&scaled).unwrap().f_stat - base.f_stat).abs() < 1e-9);
        assert_eq!(anova_oneway(&permuted).unwrap().f_stat, base.f_stat);
    }

    #[test]
    fn anova_rejects_bad_input() {
        assert!(anova_oneway(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0], vec![2.0, 3.0]]).is_err());
        assert!(anova_oneway(&[vec![1.0, f64::NAN], vec![2.0, 3.0]]).is_err());
    }

    #[test]
    fn box_summary_single_value() {
        let s = box_summary(&[5.0]).unwrap();
        assert_eq!(
            (s.median, s.q1, s.q3, s.whisker_lo, s.whisker_hi),
            (5.0, 5.0, 5.0, 5.0, 5.0)
        );
        assert!(s.outliers.is_empty());
    }

    #[test]
    fn box_summary_linear_interpolation_rule() {
        // hand evaluation of h = (n-1)p over [1,2,3,4]
        let s = box_summary(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
    }

    #[test]
    fn box_summary_flags_outlier() {
        let mut v: Vec<f64> = (1..=9).map(|i| i as f64).collect();
        v.push(100.0);
        let s = box_summary(&v).unwrap();
        // q1 = 3.25, q3 = 7.75, fence_hi = 14.5
        assert_eq!(s.outliers, vec![100.0]);
        assert_eq!(s.whisker_hi, 9.0);
        assert!(s.whisker_hi <= s.q3 + 1.5 * (s.q3 - s.q1));
    }

    #[test]
    fn box_summary_ordering_bounds() {
        let mut rng = SeededRng::new(21);
        for n in [1usize, 2, 3, 5, 17, 100] {
            let v: Vec<f64> = (0..n).map(|_| rng.bipolar() * 10.0).collect();
            let s = box_summary(&v).unwrap();
            let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert!(min <= s.whisker_lo);
            assert!(s.whisker_lo <= s.q1);
            assert!(s.q1 <= s.median);
            assert!(s.median <= s.q3);
            assert!(s.q3 <= s.whisker_hi);
            assert!(s.whisker_hi <= max);
        }
    }
}
