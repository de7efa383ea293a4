use super::special::{chi2_sf, normal_sf};
use super::{PairedOutcome, StatsError, TestResult};
use crate::corpus::Letter;

/// Largest discordant total summed with exact integer arithmetic.
const EXACT_BINOMIAL_LIMIT: u64 = 120;

/// Two-tailed exact McNemar test: twice the smaller binomial tail, capped at 1.
pub fn mcnemar_exact(po: PairedOutcome) -> TestResult {
    let m = po.b + po.c;
    let p = if m == 0 {
        1.0
    } else {
        (2.0 * binomial_half_cdf(m, po.b.min(po.c))).min(1.0)
    };
    TestResult::new(po.b.min(po.c) as f64, p)
}

/// P(X <= k) for X ~ Binomial(m, 1/2).
pub(crate) fn binomial_half_cdf(m: u64, k: u64) -> f64 {
    if k >= m {
        return 1.0;
    }
    if m <= EXACT_BINOMIAL_LIMIT {
        let mut coef: u128 = 1;
        let mut sum: u128 = 1;
        for i in 1..=k {
            coef = coef * (m - i + 1) as u128 / i as u128;
            sum += coef;
        }
        // exact rational sum / 2^m, one rounding on each conversion
        return sum as f64 / (1u128 << m) as f64;
    }
    binomial_half_cdf_log(m, k)
}

pub(crate) fn binomial_half_cdf_log(m: u64, k: u64) -> f64 {
    let mut ln_coef = 0.0f64;
    let mut ln_terms = Vec::with_capacity(k as usize + 1);
    ln_terms.push(0.0);
    for i in 1..=k {
        ln_coef += ((m - i + 1) as f64).ln() - (i as f64).ln();
        ln_terms.push(ln_coef);
    }
    let max = ln_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = ln_terms.iter().map(|t| (t - max).exp()).sum();
    (max + sum.ln() - m as f64 * std::f64::consts::LN_2).exp()
}

/// Cochran's Q over rows of per-arm binary outcomes.
pub fn cochrans_q<R: AsRef<[bool]>>(rows: &[R]) -> Result<TestResult, StatsError> {
    let k = rows.first().map_or(0, |r| r.as_ref().len());
    if rows.is_empty() {
        return Ok(TestResult::new(0.0, 1.0));
    }
    if k < 2 {
        return Err(StatsError::TooFewArms(k));
    }
    let mut column_totals = vec![0i64; k];
    let mut sum_l = 0i64;
    let mut sum_l2 = 0i64;
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_ref();
        if row.len() != k {
            return Err(StatsError::Ragged {
                index: i,
                expected: k,
                found: row.len(),
            });
        }
        let l = row.iter().filter(|&&x| x).count() as i64;
        sum_l += l;
        sum_l2 += l * l;
        for (g, &x) in column_totals.iter_mut().zip(row) {
            *g += x as i64;
        }
    }
    let k_i = k as i64;
    let denominator = k_i * sum_l - sum_l2;
    if denominator == 0 {
        return Ok(TestResult::new(0.0, 1.0));
    }
    let sum_g2: i64 = column_totals.iter().map(|g| g * g).sum();
    let numerator = (k_i - 1) * (k_i * sum_g2 - sum_l * sum_l);
    let q = numerator as f64 / denominator as f64;
    Ok(TestResult::new(q, chi2_sf(q, (k - 1) as f64)))
}

/// Paired two one-sided tests for equivalence of two proportions within
/// `±margin`, using the normal approximation to the paired difference.
///
/// `statistic` carries the observed difference `(b − c)/n`; `p_value` is the
/// larger of the two one-sided p-values.
pub fn tost_paired(po: PairedOutcome, margin: f64, alpha: f64) -> Result<TestResult, StatsError> {
    if po.n == 0 {
        return Err(StatsError::EmptySelection);
    }
    po.check()?;
    let (diff, se) = paired_difference(po);
    let (p, equivalent) = if se == 0.0 {
        if diff.abs() < margin {
            (0.0, true)
        } else {
            (1.0, false)
        }
    } else {
        let p_lower = normal_sf((diff + margin) / se);
        let p_upper = normal_sf((margin - diff) / se);
        let p = p_lower.max(p_upper);
        (p, p < alpha)
    };
    Ok(TestResult {
        statistic: diff,
        p_value: p,
        effect_h: None,
        equivalence: Some(equivalent),
    })
}

/// Observed paired difference `(b − c)/n` and its standard error.
pub fn paired_difference(po: PairedOutcome) -> (f64, f64) {
    let n = po.n as f64;
    let b = po.b as f64;
    let c = po.c as f64;
    let diff = (b - c) / n;
    let var = (b + c - (b - c) * (b - c) / n).max(0.0);
    (diff, var.sqrt() / n)
}

pub fn cohens_h(p1: f64, p2: f64) -> Result<f64, StatsError> {
    for p in [p1, p2] {
        if !(0.0..=1.0).contains(&p) {
            return Err(StatsError::OutOfRange(p));
        }
    }
    Ok(2.0 * p1.sqrt().asin() - 2.0 * p2.sqrt().asin())
}

/// Goodness of fit of letter-selection counts against the uniform distribution.
pub fn chi2_uniform(counts: &LetterCounts) -> Result<TestResult, StatsError> {
    let total: u64 = counts.0.iter().sum();
    if total == 0 {
        return Err(StatsError::ZeroTotal);
    }
    // Σ (O − N/5)² / (N/5) = (5·ΣO² − N²) / N
    let sum_sq: u128 = counts.0.iter().map(|&o| o as u128 * o as u128).sum();
    let numerator = 5 * sum_sq - total as u128 * total as u128;
    let stat = numerator as f64 / total as f64;
    Ok(TestResult::new(stat, chi2_sf(stat, 4.0)))
}

/// Counts of selected letters; ambiguous selections are not counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LetterCounts(pub [u64; 5]);

impl LetterCounts {
    pub fn add(&mut self, letter: Option<Letter>) {
        if let Some(l) = letter {
            self.0[l.index()] += 1;
        }
    }

    pub fn total(&self) -> u64 {
        self.0.iter().sum()
    }
}

impl FromIterator<Option<Letter>> for LetterCounts {
    fn from_iter<T: IntoIterator<Item = Option<Letter>>>(iter: T) -> Self {
        let mut counts = LetterCounts::default();
        for l in iter {
            counts.add(l);
        }
        counts
    }
}
