//! Statistical utilities shared by the analysis modules.
//!
//! The Student-t and normal distributions are evaluated through the regularized
//! incomplete beta and gamma functions implemented here, so no external statistics
//! library is involved.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Result of a hypothesis test or correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub df: Option<f64>,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub effect_size: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ci: Option<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sided {
    #[default]
    Two,
    /// Alternative: statistic greater than the null.
    Greater,
    /// Alternative: statistic less than the null.
    Less,
}

// ---------------------------------------------------------------------------
// special functions

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

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let s = (std::f64::consts::PI * x).sin();
        return std::f64::consts::PI.ln() - s.abs().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + 7.5;
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
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
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
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

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let gln = ln_gamma(a);
    if x < a + 1.0 {
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum * (-x + a * x.ln() - gln).exp()
    } else {
        // continued fraction for Q, Lentz
        const TINY: f64 = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / TINY;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < TINY {
                d = TINY;
            }
            c = b + an / c;
            if c.abs() < TINY {
                c = TINY;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-17 {
                break;
            }
        }
        1.0 - (-x + a * x.ln() - gln).exp() * h
    }
}

pub fn erf(x: f64) -> f64 {
    let p = reg_lower_gamma(0.5, x * x);
    if x < 0.0 {
        -p
    } else {
        p
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    if x < -8.0 {
        // upper-tail complement keeps relative precision in the far tail
        let q = 1.0 - reg_lower_gamma(0.5, x * x / 2.0);
        return 0.5 * q;
    }
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Standard normal quantile: Acklam's rational approximation refined by Newton steps.
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile requires p in (0, 1)");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.024_25;
    let mut x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..3 {
        let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        if pdf <= 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / pdf;
    }
    x
}

/// Student-t CDF with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    if t.is_infinite() {
        return if t > 0.0 { 1.0 } else { 0.0 };
    }
    let x = df / (df + t * t);
    let tail = 0.5 * reg_inc_beta(df / 2.0, 0.5, x);
    if t > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// Student-t quantile by bisection on the CDF.
pub fn student_t_quantile(p: f64, df: f64) -> f64 {
    let (mut lo, mut hi) = (-1e3, 1e3);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if student_t_cdf(mid, df) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// p value of a t statistic under the chosen alternative.
pub fn t_p_value(t: f64, df: f64, sided: Sided) -> f64 {
    let p = match sided {
        Sided::Two => {
            if t.is_infinite() {
                0.0
            } else {
                reg_inc_beta(df / 2.0, 0.5, df / (df + t * t))
            }
        }
        Sided::Greater => 1.0 - student_t_cdf(t, df),
        Sided::Less => student_t_cdf(t, df),
    };
    p.clamp(0.0, 1.0)
}

// ---------------------------------------------------------------------------
// descriptives

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator).
pub fn sample_sd(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() as f64 - 1.0)).sqrt()
}

/// Linear-interpolation quantile of already sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}

/// Average ranks (1-based); tied values share the mean of their positions.
pub fn midranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

// ---------------------------------------------------------------------------
// tests

fn check_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::param(what, "contains non-finite values"));
    }
    Ok(())
}

/// One-sample t test of `mean(values) == mu0`.
///
/// The effect size is Cohen's d against `mu0`; the CI is the 95% t interval of the mean.
pub fn one_sample_t(values: &[f64], mu0: f64, sided: Sided) -> Result<TestResult> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "one-sample t test needs n >= 2, got {}",
            values.len()
        )));
    }
    check_finite(values, "values")?;
    let n = values.len() as f64;
    let m = mean(values);
    let sd = sample_sd(values);
    if !(sd > 0.0) {
        return Err(Error::DegenerateVariance("one-sample t test on constant data"));
    }
    let se = sd / n.sqrt();
    let t = (m - mu0) / se;
    let df = n - 1.0;
    let q = student_t_quantile(0.975, df);
    Ok(TestResult {
        statistic: t,
        df: Some(df),
        p_value: t_p_value(t, df, sided),
        effect_size: Some((m - mu0) / sd),
        ci: Some((m - q * se, m + q * se)),
    })
}

/// Paired t test on `a - b`.
pub fn paired_t(a: &[f64], b: &[f64], sided: Sided) -> Result<TestResult> {
    if a.len() != b.len() {
        return Err(Error::Mismatch(format!(
            "paired samples have lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    one_sample_t(&diffs, 0.0, sided)
}

/// One-sample Cohen's d: mean difference from `mu0` over the sample SD.
pub fn cohens_d(values: &[f64], mu0: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData("cohen's d needs n >= 2".into()));
    }
    let sd = sample_sd(values);
    if !(sd > 0.0) {
        return Err(Error::DegenerateVariance("cohen's d on constant data"));
    }
    Ok((mean(values) - mu0) / sd)
}

pub fn cohens_d_paired(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Mismatch("paired samples differ in length".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    cohens_d(&diffs, 0.0)
}

/// Two-group Cohen's d with pooled SD.
pub fn cohens_d_two_group(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData("two-group d needs n >= 2 per group".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_sd(a).powi(2), sample_sd(b).powi(2));
    let pooled = (((na - 1.0) * va + (nb - 1.0) * vb) / (na + nb - 2.0)).sqrt();
    if !(pooled > 0.0) {
        return Err(Error::DegenerateVariance("two-group d with zero pooled SD"));
    }
    Ok((mean(a) - mean(b)) / pooled)
}

fn paired_inputs(xs: &[f64], ys: &[f64], min: usize) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::Mismatch(format!(
            "paired inputs have lengths {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < min {
        return Err(Error::InsufficientData(format!(
            "need at least {min} pairs, got {}",
            xs.len()
        )));
    }
    check_finite(xs, "xs")?;
    check_finite(ys, "ys")
}

fn correlation(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // spread at rounding level counts as constant
    let flat = |ss: f64, m: f64| ss <= 1e-26 * xs.len() as f64 * m * m;
    if sxx <= 0.0 || syy <= 0.0 || flat(sxx, mx) || flat(syy, my) {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn correlation_t_p(r: f64, n: usize) -> f64 {
    let df = n as f64 - 2.0;
    if r.abs() >= 1.0 {
        return 0.0;
    }
    let t = r * (df / (1.0 - r * r)).sqrt();
    t_p_value(t, df, Sided::Two)
}

/// Pearson product-moment correlation with a two-sided t-based p value.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    paired_inputs(xs, ys, 3)?;
    let r = correlation(xs, ys).ok_or(Error::DegenerateVariance("pearson input has zero variance"))?;
    Ok(TestResult {
        statistic: r,
        df: Some(xs.len() as f64 - 2.0),
        p_value: correlation_t_p(r, xs.len()),
        effect_size: None,
        ci: None,
    })
}

/// Largest sample size for which Spearman p values are computed by full enumeration.
pub const SPEARMAN_EXACT_MAX_N: usize = 10;

/// Spearman rank correlation (mid-ranks for ties).
///
/// Two-sided p: exact permutation distribution for `n <= 10`, t approximation above.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<TestResult> {
    paired_inputs(xs, ys, 3)?;
    let rx = midranks(xs);
    let ry = midranks(ys);
    let rho = correlation(&rx, &ry).ok_or(Error::DegenerateVariance("spearman input is constant"))?;
    let n = xs.len();
    let p = if n <= SPEARMAN_EXACT_MAX_N {
        spearman_exact_p(&rx, &ry, rho)
    } else {
        correlation_t_p(rho, n)
    };
    Ok(TestResult {
        statistic: rho,
        df: Some(n as f64 - 2.0),
        p_value: p,
        effect_size: None,
        ci: None,
    })
}

/// Fraction of all permutations of `ry` whose |rho| reaches the observed |rho|.
fn spearman_exact_p(rx: &[f64], ry: &[f64], rho: f64) -> f64 {
    let n = rx.len();
    let mx = mean(rx);
    let my = mean(ry);
    let cx: Vec<f64> = rx.iter().map(|x| x - mx).collect();
    let mut cy: Vec<f64> = ry.iter().map(|y| y - my).collect();
    let norm = (cx.iter().map(|v| v * v).sum::<f64>() * cy.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let target = rho.abs() - 1e-12;
    let mut hits: u64 = 0;
    let mut total: u64 = 0;
    let mut visit = |perm: &[f64]| {
        let s: f64 = cx.iter().zip(perm).map(|(a, b)| a * b).sum();
        total += 1;
        if (s / norm).abs() >= target {
            hits += 1;
        }
    };
    // Heap's algorithm, iterative
    let mut c = vec![0usize; n];
    visit(&cy);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                cy.swap(0, i);
            } else {
                cy.swap(c[i], i);
            }
            visit(&cy);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    hits as f64 / total as f64
}

/// Percentile bootstrap interval for an arbitrary statistic.
pub fn bootstrap_ci<F>(values: &[f64], statistic: F, resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)>
where
    F: Fn(&[f64]) -> f64,
{
    if values.len() < 2 {
        return Err(Error::InsufficientData("bootstrap needs n >= 2".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", "must lie in (0, 1)"));
    }
    if resamples == 0 {
        return Err(Error::param("resamples", "must be positive"));
    }
    let n = values.len();
    let mut rng = rng::stream(seed);
    let mut buf = vec![0.0; n];
    let mut stats: Vec<f64> = (0..resamples)
        .map(|_| {
            for slot in buf.iter_mut() {
                *slot = values[rng.random_range(0..n)];
            }
            statistic(&buf)
        })
        .collect();
    stats.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    Ok((quantile_sorted(&stats, tail), quantile_sorted(&stats, 1.0 - tail)))
}

pub fn bootstrap_mean_ci(values: &[f64], resamples: usize, level: f64, seed: u64) -> Result<(f64, f64)> {
    bootstrap_ci(values, mean, resamples, level, seed)
}

/// Wilson score interval for a binomial proportion. `n = 0` yields `(0, 1)`.
pub fn binomial_ci(successes: u64, n: u64, level: f64) -> Result<(f64, f64)> {
    if successes > n {
        return Err(Error::param("successes", "exceeds trial count"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::param("level", "must lie in (0, 1)"));
    }
    if n == 0 {
        return Ok((0.0, 1.0));
    }
    let z = normal_quantile(1.0 - (1.0 - level) / 2.0);
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == n { 1.0 } else { (centre + half).min(1.0) };
    Ok((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_matches_factorials() {
        for (n, fact) in [(1.0, 1.0f64), (5.0, 24.0), (11.0, 3_628_800.0)] {
            assert!((ln_gamma(n) - fact.ln()).abs() < 1e-12);
        }
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
    }

    #[test]
    fn normal_cdf_reference_points() {
        // values from high-precision evaluation of 0.5 * erfc(-x / sqrt(2))
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-13);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-14);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(1e-6) + 4.753_424_308_822_899).abs() < 1e-10);
    }

    #[test]
    fn t_cdf_reference_points() {
        // scipy.stats.t.cdf
        assert!((student_t_cdf(2.0, 3.0) - 0.930_337_015_720_578_5).abs() < 1e-12);
        assert!((student_t_cdf(-1.5, 10.0) - 0.082_253_663_222_720_08).abs() < 1e-12);
        assert!((student_t_quantile(0.975, 4.0) - 2.776_445_105_197_793).abs() < 1e-9);
    }

    #[test]
    fn symmetric_values_give_null_t() {
        let r = one_sample_t(&[-2.0, -1.0, 0.0, 1.0, 2.0], 0.0, Sided::Two).unwrap();
        assert!(r.statistic.abs() < 1e-15);
        assert!((r.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn constant_values_are_degenerate() {
        assert!(matches!(
            one_sample_t(&[0.3; 6], 0.0, Sided::Two),
            Err(Error::DegenerateVariance(_))
        ));
        assert!(matches!(cohens_d(&[1.0, 1.0], 0.0), Err(Error::DegenerateVariance(_))));
    }

    #[test]
    fn one_sided_is_half_of_two_sided() {
        let v = [0.1, 0.4, -0.2, 0.5, 0.3, 0.2];
        let two = one_sample_t(&v, 0.0, Sided::Two).unwrap();
        let gt = one_sample_t(&v, 0.0, Sided::Greater).unwrap();
        let lt = one_sample_t(&v, 0.0, Sided::Less).unwrap();
        assert!((two.p_value - 2.0 * gt.p_value).abs() < 1e-12);
        assert!((gt.p_value + lt.p_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_extremes() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert!((up.statistic - 1.0).abs() < 1e-15);
        let down = spearman(&x, &[-1.0, -2.0, -3.0, -4.0, -5.0]).unwrap();
        assert!((down.statistic + 1.0).abs() < 1e-15);
        // exact: 2 of 120 permutations reach |rho| = 1
        assert!((down.p_value - 2.0 / 120.0).abs() < 1e-15);
        assert!(matches!(spearman(&x, &[1.0; 5]), Err(Error::DegenerateVariance(_))));
        assert!(matches!(spearman(&x[..2], &[1.0, 2.0]), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn pearson_linear_and_orthogonal() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let r = pearson(&x, &x.map(|v| 2.0 * v + 1.0)).unwrap();
        assert!((r.statistic - 1.0).abs() < 1e-15);
        assert_eq!(r.p_value, 0.0);
        let o = pearson(&[1.0, -1.0, 1.0, -1.0], &[1.0, 1.0, -1.0, -1.0]).unwrap();
        assert!(o.statistic.abs() < 1e-12);
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn bootstrap_constant_and_deterministic() {
        let (lo, hi) = bootstrap_mean_ci(&[2.5; 8], 500, 0.95, 3).unwrap();
        assert_eq!((lo, hi), (2.5, 2.5));
        let v = [0.1, 0.9, 0.3, 0.5, 0.7, 0.2];
        let a = bootstrap_mean_ci(&v, 1000, 0.95, 11).unwrap();
        let b = bootstrap_mean_ci(&v, 1000, 0.95, 11).unwrap();
        assert_eq!(a, b);
        let m = mean(&v);
        assert!(a.0 <= m && m <= a.1);
    }

    #[test]
    fn wilson_bounds() {
        assert_eq!(binomial_ci(0, 20, 0.95).unwrap().0, 0.0);
        assert_eq!(binomial_ci(20, 20, 0.95).unwrap().1, 1.0);
        let (lo, hi) = binomial_ci(28, 30, 0.95).unwrap();
        assert!((lo - 0.786_8).abs() < 1e-3 && (hi - 0.981_5).abs() < 1e-3, "{lo} {hi}");
        assert!(binomial_ci(3, 2, 0.95).is_err());
    }

    #[test]
    fn cohens_d_variants() {
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [0.5, 1.0, 2.0, 2.5];
        let d = cohens_d_two_group(&a, &b).unwrap();
        let pooled = ((sample_sd(&a).powi(2) + sample_sd(&b).powi(2)) / 2.0).sqrt();
        assert!((d - (mean(&a) - mean(&b)) / pooled).abs() < 1e-14);
        let dp = cohens_d_paired(&a, &b).unwrap();
        let diffs: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        assert!((dp - mean(&diffs) / sample_sd(&diffs)).abs() < 1e-14);
        assert_eq!(cohens_d(&[-1.0, 1.0, -2.0, 2.0], 0.0).unwrap(), 0.0);
    }
}
