//! Rank correlation, rank-sum, unit-root and trend tests for short series.

use polyloop_core::preference::std_normal_cdf;
use serde::Serialize;
use thiserror::Error;

/// Largest sample size for which p-values are enumerated exactly.
pub const EXACT_CUTOFF: usize = 8;

#[derive(Debug, Error, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatsError {
    #[error("inputs have lengths {0} and {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("all values tied; the statistic is undefined")]
    AllTied,
    #[error("regression is singular")]
    Singular,
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    /// Exact below [`EXACT_CUTOFF`], normal approximation above.
    Auto,
    Exact,
    Normal,
}

fn two_sided_normal(z: f64) -> f64 {
    (2.0 * (1.0 - std_normal_cdf(z.abs()))).min(1.0)
}

fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}

/// Sizes of groups of equal values.
fn tie_groups(xs: &[f64]) -> Vec<usize> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < v.len() {
        let mut j = i + 1;
        while j < v.len() && v[j] == v[i] {
            j += 1;
        }
        groups.push(j - i);
        i = j;
    }
    groups
}

fn sign(d: f64) -> i64 {
    if d > 0.0 {
        1
    } else if d < 0.0 {
        -1
    } else {
        0
    }
}

/// Kendall's S: concordant minus discordant pairs.
fn kendall_s(x: &[f64], y: &[f64]) -> i64 {
    let n = x.len();
    let mut s = 0;
    for i in 0..n {
        for j in i + 1..n {
            s += sign(x[j] - x[i]) * sign(y[j] - y[i]);
        }
    }
    s
}

/// Calls `visit` with every permutation of `items` (Heap's algorithm).
fn for_each_permutation(items: &mut [f64], mut visit: impl FnMut(&[f64])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KendallResult {
    pub tau: f64,
    pub s: i64,
    pub p: f64,
    pub method: PValueMethod,
}

pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<KendallResult, StatsError> {
    kendall_tau_with(x, y, PValueMethod::Auto)
}

/// Tau-b with a two-sided p-value. Exact p enumerates all orderings of `y`
/// against `x`, keeping the tie structure of both.
pub fn kendall_tau_with(x: &[f64], y: &[f64], method: PValueMethod) -> Result<KendallResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 2 {
        return Err(StatsError::TooShort { needed: 2, got: n });
    }
    check_finite(x)?;
    check_finite(y)?;
    let pairs = (n * (n - 1) / 2) as f64;
    let tx = tie_groups(x);
    let ty = tie_groups(y);
    let tied = |g: &[usize]| g.iter().map(|&t| (t * (t - 1) / 2) as f64).sum::<f64>();
    let (n1, n2) = (tied(&tx), tied(&ty));
    if pairs - n1 == 0.0 || pairs - n2 == 0.0 {
        return Err(StatsError::AllTied);
    }
    let s = kendall_s(x, y);
    let tau = s as f64 / ((pairs - n1) * (pairs - n2)).sqrt();

    let method = match method {
        PValueMethod::Auto if n <= EXACT_CUTOFF => PValueMethod::Exact,
        PValueMethod::Auto => PValueMethod::Normal,
        m => m,
    };
    let p = match method {
        PValueMethod::Exact => {
            let mut ys = y.to_vec();
            let (mut extreme, mut total) = (0u64, 0u64);
            for_each_permutation(&mut ys, |perm| {
                total += 1;
                if kendall_s(x, perm).abs() >= s.abs() {
                    extreme += 1;
                }
            });
            extreme as f64 / total as f64
        }
        _ => {
            let nf = n as f64;
            let sum = |g: &[usize], f: &dyn Fn(f64) -> f64| g.iter().map(|&t| f(t as f64)).sum::<f64>();
            let v0 = nf * (nf - 1.0) * (2.0 * nf + 5.0);
            let vt = sum(&tx, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
            let vu = sum(&ty, &|t| t * (t - 1.0) * (2.0 * t + 5.0));
            let mut var = (v0 - vt - vu) / 18.0;
            if n > 2 {
                var += sum(&tx, &|t| t * (t - 1.0) * (t - 2.0)) * sum(&ty, &|t| t * (t - 1.0) * (t - 2.0))
                    / (9.0 * nf * (nf - 1.0) * (nf - 2.0));
            }
            var += sum(&tx, &|t| t * (t - 1.0)) * sum(&ty, &|t| t * (t - 1.0)) / (2.0 * nf * (nf - 1.0));
            if var <= 0.0 {
                1.0
            } else {
                two_sided_normal(s as f64 / var.sqrt())
            }
        }
    };
    Ok(KendallResult { tau, s, p, method })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannWhitneyResult {
    /// U for the first sample: pairs with `a > b`, ties counted half.
    pub u: f64,
    pub p: f64,
    pub method: PValueMethod,
}

/// Twice U, so half counts stay integral.
fn doubled_u(a: &[f64], b: &[f64]) -> i64 {
    let mut u2 = 0;
    for &x in a {
        for &y in b {
            u2 += match x.total_cmp(&y) {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    u2
}

/// Calls `visit` with every `k`-subset of `0..n` as a membership mask.
fn for_each_subset(n: usize, k: usize, mut visit: impl FnMut(&[bool])) {
    fn rec(start: usize, left: usize, mask: &mut Vec<bool>, visit: &mut dyn FnMut(&[bool])) {
        if left == 0 {
            visit(mask);
            return;
        }
        for i in start..=mask.len() - left {
            mask[i] = true;
            rec(i + 1, left - 1, mask, visit);
            mask[i] = false;
        }
    }
    let mut mask = vec![false; n];
    rec(0, k, &mut mask, &mut visit);
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitneyResult, StatsError> {
    mann_whitney_u_with(a, b, PValueMethod::Auto)
}

/// Two-sided rank-sum test. Exact p enumerates every split of the pooled
/// values; the normal approximation is tie-corrected with continuity 0.5.
pub fn mann_whitney_u_with(a: &[f64], b: &[f64], method: PValueMethod) -> Result<MannWhitneyResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::TooShort {
            needed: 1,
            got: a.len().min(b.len()),
        });
    }
    check_finite(a)?;
    check_finite(b)?;
    let (na, nb) = (a.len(), b.len());
    let u2 = doubled_u(a, b);
    let mean2 = (na * nb) as i64;
    let method = match method {
        PValueMethod::Auto if na.max(nb) <= EXACT_CUTOFF => PValueMethod::Exact,
        PValueMethod::Auto => PValueMethod::Normal,
        m => m,
    };
    let p = match method {
        PValueMethod::Exact => {
            let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
            let observed = (u2 - mean2).abs();
            let (mut extreme, mut total) = (0u64, 0u64);
            let (mut ga, mut gb) = (Vec::with_capacity(na), Vec::with_capacity(nb));
            for_each_subset(na + nb, na, |mask| {
                ga.clear();
                gb.clear();
                for (v, &in_a) in pooled.iter().zip(mask) {
                    if in_a {
                        ga.push(*v)
                    } else {
                        gb.push(*v)
                    }
                }
                total += 1;
                if (doubled_u(&ga, &gb) - mean2).abs() >= observed {
                    extreme += 1;
                }
            });
            extreme as f64 / total as f64
        }
        _ => {
            let n = (na + nb) as f64;
            let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
            let ties: f64 = tie_groups(&pooled).iter().map(|&t| (t * t * t - t) as f64).sum();
            let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
            if var <= 0.0 {
                1.0
            } else {
                let dev = ((u2 - mean2).abs() as f64 / 2.0 - 0.5).max(0.0);
                two_sided_normal(dev / var.sqrt())
            }
        }
    };
    Ok(MannWhitneyResult {
        u: u2 as f64 / 2.0,
        p,
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    Increasing,
    Decreasing,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MannKendallResult {
    pub s: i64,
    pub variance: f64,
    pub z: f64,
    pub p: f64,
    pub trend: Trend,
}

pub fn mann_kendall(series: &[f64]) -> Result<MannKendallResult, StatsError> {
    mann_kendall_at(series, 0.05)
}

/// Mann-Kendall trend test with tie-corrected variance and continuity correction.
pub fn mann_kendall_at(series: &[f64], alpha: f64) -> Result<MannKendallResult, StatsError> {
    let n = series.len();
    if n < 4 {
        return Err(StatsError::TooShort { needed: 4, got: n });
    }
    check_finite(series)?;
    let time: Vec<f64> = (0..n).map(|i| i as f64).collect();
    let s = kendall_s(&time, series);
    let nf = n as f64;
    let ties: f64 = tie_groups(series)
        .iter()
        .map(|&t| {
            let t = t as f64;
            t * (t - 1.0) * (2.0 * t + 5.0)
        })
        .sum();
    let variance = (nf * (nf - 1.0) * (2.0 * nf + 5.0) - ties) / 18.0;
    let z = if variance <= 0.0 || s == 0 {
        0.0
    } else {
        (s - s.signum()) as f64 / variance.sqrt()
    };
    let p = two_sided_normal(z);
    let trend = match (p < alpha, s.signum()) {
        (true, 1) => Trend::Increasing,
        (true, -1) => Trend::Decreasing,
        _ => Trend::None,
    };
    Ok(MannKendallResult {
        s,
        variance,
        z,
        p,
        trend,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PBand {
    #[serde(rename = "<.01")]
    Below01,
    #[serde(rename = "<.05")]
    Below05,
    #[serde(rename = "<.10")]
    Below10,
    #[serde(rename = ">=.10")]
    AtLeast10,
}

impl PBand {
    pub fn label(self) -> &'static str {
        match self {
            PBand::Below01 => "<.01",
            PBand::Below05 => "<.05",
            PBand::Below10 => "<.10",
            PBand::AtLeast10 => ">=.10",
        }
    }
}

/// Response-surface coefficients (β∞, β₁, β₂, β₃) for the constant-only
/// Dickey-Fuller τ at 1%, 5% and 10% (MacKinnon 2010, one variable).
const ADF_CONSTANT: [[f64; 4]; 3] = [
    [-3.43035, -6.5393, -16.786, -79.433],
    [-2.86154, -2.8903, -4.234, -40.040],
    [-2.56677, -1.5384, -2.809, 0.0],
];

/// Critical values at 1%, 5%, 10% for `t` regression observations.
pub fn adf_critical_values(t: usize) -> [f64; 3] {
    let t = t as f64;
    ADF_CONSTANT.map(|[b0, b1, b2, b3]| b0 + b1 / t + b2 / (t * t) + b3 / (t * t * t))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdfResult {
    pub statistic: f64,
    pub observations: usize,
    pub critical_values: [f64; 3],
    pub p_band: PBand,
    pub stationary_at_05: bool,
}

/// Dickey-Fuller regression `Δy_t = α + φ·y_{t−1} + ε` (constant, no trend,
/// no lagged differences); the statistic is the t-ratio of φ.
pub fn adf_test(series: &[f64]) -> Result<AdfResult, StatsError> {
    let n = series.len();
    if n < 4 {
        return Err(StatsError::TooShort { needed: 4, got: n });
    }
    check_finite(series)?;
    let x = &series[..n - 1];
    let dy: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    let t = dy.len();
    let tf = t as f64;
    let mx = x.iter().sum::<f64>() / tf;
    let my = dy.iter().sum::<f64>() / tf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&dy).map(|(a, b)| (a - mx) * (b - my)).sum();
    let scale = x.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if sxx <= 1e-12 * scale * scale * tf {
        return Err(StatsError::Singular);
    }
    let phi = sxy / sxx;
    let rss: f64 = x.iter().zip(&dy).map(|(a, b)| (b - my - phi * (a - mx)).powi(2)).sum();
    let tss: f64 = dy.iter().map(|b| (b - my).powi(2)).sum();
    if rss <= 1e-12 * tss.max(1e-300) {
        return Err(StatsError::Singular);
    }
    let se = (rss / (tf - 2.0) / sxx).sqrt();
    let statistic = phi / se;
    let critical_values = adf_critical_values(t);
    let p_band = if statistic < critical_values[0] {
        PBand::Below01
    } else if statistic < critical_values[1] {
        PBand::Below05
    } else if statistic < critical_values[2] {
        PBand::Below10
    } else {
        PBand::AtLeast10
    };
    Ok(AdfResult {
        statistic,
        observations: t,
        critical_values,
        p_band,
        stationary_at_05: p_band <= PBand::Below05,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadraticFit {
    /// `y ≈ c0 + c1·x + c2·x²`.
    pub coefficients: [f64; 3],
    pub r_squared: f64,
    pub n: usize,
}

/// Ordinary least squares fit of a second-order polynomial.
pub fn quadratic_fit(x: &[f64], y: &[f64]) -> Result<QuadraticFit, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(StatsError::TooShort { needed: 3, got: n });
    }
    check_finite(x)?;
    check_finite(y)?;
    let design = nalgebra::DMatrix::from_fn(n, 3, |i, j| x[i].powi(j as i32));
    let rhs = nalgebra::DVector::from_column_slice(y);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    if svd.singular_values.min() <= 1e-10 * smax {
        return Err(StatsError::Singular);
    }
    let c = svd.solve(&rhs, 0.0).map_err(|_| StatsError::Singular)?;
    let my = y.iter().sum::<f64>() / n as f64;
    let tss: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| (yi - c[0] - c[1] * xi - c[2] * xi * xi).powi(2))
        .sum();
    Ok(QuadraticFit {
        coefficients: [c[0], c[1], c[2]],
        r_squared: if tss > 0.0 { 1.0 - rss / tss } else { 1.0 },
        n,
    })
}
