use super::AnalyticsError;

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

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the series in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const CF_TOLERANCE: f64 = 1e-10;
const CF_MAX_ITER: usize = 300;
const TINY: f64 = 1e-300;

/// Regularized incomplete beta `I_x(a, b)` by Lentz's continued fraction.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> Result<f64, AnalyticsError> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) {
        return Err(AnalyticsError::InvalidArgument(format!("I_x(a, b) with a={a}, b={b}, x={x}")));
    }
    if x == 0.0 || x == 1.0 {
        return Ok(x);
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    // The fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise.
    if x < (a + 1.0) / (a + b + 2.0) {
        Ok(ln_front.exp() * beta_cf(a, b, x)? / a)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(b, a, 1.0 - x)? / b)
    }
}

fn beta_cf(a: f64, b: f64, x: f64) -> Result<f64, AnalyticsError> {
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };
    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - (a + b) * x / (a + 1.0));
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let even = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 / guard(1.0 + even * d);
        c = guard(1.0 + even / c);
        h *= d * c;
        let odd = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 / guard(1.0 + odd * d);
        c = guard(1.0 + odd / c);
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < CF_TOLERANCE {
            return Ok(h);
        }
    }
    Err(AnalyticsError::NoConvergence { a, b, x })
}

fn f_dfs(k: usize, n: usize) -> Result<(f64, f64), AnalyticsError> {
    if k == 0 || n < k + 2 {
        return Err(AnalyticsError::InvalidDf(format!("k={k}, n={n} leaves no residual degrees of freedom")));
    }
    Ok((k as f64, (n - k - 1) as f64))
}

/// Lower-tail probability of `F(k, n-k-1)` at `f`.
pub fn f_cdf(f: f64, k: usize, n: usize) -> Result<f64, AnalyticsError> {
    let (d1, d2) = f_dfs(k, n)?;
    if f.is_nan() || f < 0.0 {
        return Err(AnalyticsError::InvalidArgument(format!("F statistic {f}")));
    }
    if f.is_infinite() {
        return Ok(1.0);
    }
    regularized_incomplete_beta(d1 / 2.0, d2 / 2.0, d1 * f / (d1 * f + d2))
}

/// Upper-tail p-value of an F test with `k` regressors and `n` observations.
pub fn f_pvalue(f: f64, k: usize, n: usize) -> Result<f64, AnalyticsError> {
    let (d1, d2) = f_dfs(k, n)?;
    if f.is_nan() || f < 0.0 {
        return Err(AnalyticsError::InvalidArgument(format!("F statistic {f}")));
    }
    if f.is_infinite() {
        return Ok(0.0);
    }
    // I_{1-x}(b, a) == 1 - I_x(a, b), evaluated directly to keep small tails accurate.
    regularized_incomplete_beta(d2 / 2.0, d1 / 2.0, d2 / (d1 * f + d2)).map(|p| p.clamp(0.0, 1.0))
}
