//! Randomness tests on report times.
//!
//! Two Kolmogorov-Smirnov tests check whether events behave like a homogeneous
//! Poisson process: event times against the uniform distribution on the
//! observation period, and successive gaps against a fitted exponential. A
//! third, exact binomial test compares weekend and workday report rates.

use chrono::{DateTime, Datelike, Weekday};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;
use thiserror::Error;

use crate::report::{TimeWindow, Timestamp};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("{test} needs at least {needed} events, got {got}")]
    InsufficientData { test: &'static str, needed: usize, got: usize },
    #[error("empty or inverted period [{0}, {1})")]
    BadPeriod(Timestamp, Timestamp),
    #[error("significance level {0} outside (0, 1)")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Reject,
    Accept,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub decision: Decision,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl TestResult {
    fn new(test: &str, n: usize, statistic: f64, p_value: f64, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        TestResult {
            test: test.to_string(),
            n,
            statistic,
            p_value,
            alpha,
            decision: if p_value < alpha { Decision::Reject } else { Decision::Accept },
            note: None,
        }
    }
}

fn check_alpha(alpha: f64) -> Result<(), StatsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(StatsError::BadAlpha(alpha))
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // theta-function form converges fast for small lambda
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let w = y.exp();
        let cdf = (2.0 * std::f64::consts::PI).sqrt() / lambda * (w + w.powi(9) + w.powi(25) + w.powi(49));
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let x = (-2.0 * lambda * lambda).exp();
        let sum = x - x.powi(4) + x.powi(9) - x.powi(16);
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Asymptotic KS p-value with Stephens' small-sample correction.
pub fn ks_p_value(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// One-sample KS statistic of `sample` against `cdf`. `sample` is sorted in place.
pub fn ks_statistic(sample: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max((i + 1) as f64 / n - f).max(f - i as f64 / n)
    })
}

/// KS test of event times against the uniform distribution on `period`.
pub fn uniformity_test(times: &[Timestamp], period: TimeWindow, alpha: f64) -> Result<TestResult, StatsError> {
    check_alpha(alpha)?;
    if period.end <= period.start {
        return Err(StatsError::BadPeriod(period.start, period.end));
    }
    let len = period.duration() as f64;
    let mut u: Vec<f64> = times
        .iter()
        .filter(|&&t| period.contains(t))
        .map(|&t| (t - period.start) as f64 / len)
        .collect();
    if u.len() < 5 {
        return Err(StatsError::InsufficientData {
            test: "uniformity",
            needed: 5,
            got: u.len(),
        });
    }
    let d = ks_statistic(&mut u, |x| x.clamp(0.0, 1.0));
    Ok(TestResult::new("uniformity", u.len(), d, ks_p_value(u.len(), d), alpha))
}

/// KS test of successive gaps against an exponential with rate `1 / mean gap`.
pub fn interarrival_test(times: &[Timestamp], alpha: f64) -> Result<TestResult, StatsError> {
    check_alpha(alpha)?;
    if times.len() < 6 {
        return Err(StatsError::InsufficientData {
            test: "interarrival",
            needed: 6,
            got: times.len(),
        });
    }
    let mut sorted = times.to_vec();
    sorted.sort_unstable();
    let mut gaps: Vec<f64> = sorted.windows(2).map(|w| (w[1] - w[0]) as f64).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let d = if mean > 0.0 {
        ks_statistic(&mut gaps, |g| 1.0 - (-g / mean).exp())
    } else {
        1.0
    };
    let mut result = TestResult::new("interarrival", gaps.len(), d, ks_p_value(gaps.len(), d), alpha);
    result.note = Some("exponential rate estimated from the data; p-value is approximate".into());
    Ok(result)
}

/// Calendar used to decide which days are weekends.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Calendar {
    pub utc_offset_seconds: i32,
}

impl Calendar {
    pub fn is_weekend(&self, t: Timestamp) -> bool {
        DateTime::from_timestamp(t + self.utc_offset_seconds as i64, 0)
            .is_some_and(|dt| matches!(dt.weekday(), Weekday::Sat | Weekday::Sun))
    }
}

/// Exact two-sided binomial p-value: total mass of outcomes no more likely than `k`.
pub fn binomial_two_sided(k: u64, n: u64, p: f64) -> f64 {
    let ln_pmf = |i: u64| ln_binomial(n, i) + i as f64 * p.ln() + (n - i) as f64 * (1.0 - p).ln();
    let observed = ln_pmf(k);
    // relative tolerance as in common implementations, so ties in probability count
    let threshold = observed + (1.0 + 1e-7f64).ln();
    let total: f64 = (0..=n).map(ln_pmf).filter(|&l| l <= threshold).map(f64::exp).sum();
    total.min(1.0)
}

/// Exact binomial test of the weekend share against 2/7.
pub fn weekday_rate_test(times: &[Timestamp], calendar: &Calendar, alpha: f64) -> Result<TestResult, StatsError> {
    check_alpha(alpha)?;
    if times.is_empty() {
        return Err(StatsError::InsufficientData {
            test: "weekday",
            needed: 1,
            got: 0,
        });
    }
    let weekend = times.iter().filter(|&&t| calendar.is_weekend(t)).count() as u64;
    let n = times.len() as u64;
    let p = binomial_two_sided(weekend, n, 2.0 / 7.0);
    let mut result = TestResult::new("weekday", times.len(), weekend as f64, p, alpha);
    result.note = Some(format!("statistic is the weekend event count; expected {:.3}", n as f64 * 2.0 / 7.0));
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Binomial pmf by direct multiplicative recurrence.
    fn pmf_table(n: u64, p: f64) -> Vec<f64> {
        let mut pmf = vec![0.0; n as usize + 1];
        pmf[0] = (1.0 - p).powi(n as i32);
        for k in 1..=n as usize {
            pmf[k] = pmf[k - 1] * (n as f64 - k as f64 + 1.0) / k as f64 * p / (1.0 - p);
        }
        pmf
    }

    #[test]
    fn kolmogorov_survival_known_values() {
        // P(K > 1.3581) ≈ 0.05, P(K > 1.2238) ≈ 0.10, P(K > 1.6276) ≈ 0.01
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-4);
        assert!((kolmogorov_survival(1.2238) - 0.10).abs() < 1e-4);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-4);
        // the two series agree where they switch
        let lo = kolmogorov_survival(1.18 - 1e-12);
        let hi = kolmogorov_survival(1.18);
        assert!((lo - hi).abs() < 1e-9);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(5.0) < 1e-20);
    }

    #[test]
    fn point_mass_at_midpoint_rejects() {
        let times = vec![50; 100];
        let r = uniformity_test(&times, TimeWindow::new(0, 100), 0.05).unwrap();
        assert!((r.statistic - 0.5).abs() < 1e-15);
        assert_eq!(r.decision, Decision::Reject);
    }

    #[test]
    fn quantile_times_accept() {
        let n = 100;
        let len = 1_000_000i64;
        let times: Vec<i64> = (1..=n).map(|i| i * len / (n + 1)).collect();
        let r = uniformity_test(&times, TimeWindow::new(0, len), 0.05).unwrap();
        assert!(r.statistic <= 1.0 / (n + 1) as f64 + 1e-6, "{}", r.statistic);
        assert_eq!(r.decision, Decision::Accept);
    }

    #[test]
    fn uniformity_needs_five_events_in_period() {
        let times = [1, 2, 3, 4, 500];
        assert_eq!(
            uniformity_test(&times, TimeWindow::new(0, 100), 0.05),
            Err(StatsError::InsufficientData {
                test: "uniformity",
                needed: 5,
                got: 4
            })
        );
        assert!(matches!(uniformity_test(&times, TimeWindow::new(10, 10), 0.05), Err(StatsError::BadPeriod(..))));
        assert!(matches!(uniformity_test(&times, TimeWindow::new(0, 1000), 1.5), Err(StatsError::BadAlpha(_))));
    }

    #[test]
    fn periodic_gaps_reject() {
        let times: Vec<i64> = (0..50).map(|i| i * 3600).collect();
        let r = interarrival_test(&times, 0.05).unwrap();
        // all gaps at the mean: D = max(F(mean), 1 - F(mean)) with F(mean) = 1 - 1/e
        assert!((r.statistic - (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(r.decision, Decision::Reject);
        assert!(r.note.is_some());
    }

    #[test]
    fn interarrival_minimum() {
        assert!(matches!(interarrival_test(&[0, 10, 20], 0.05), Err(StatsError::InsufficientData { .. })));
        assert!(interarrival_test(&[0, 10, 20, 30, 40, 50], 0.05).is_ok());
        let same = interarrival_test(&[7; 10], 0.05).unwrap();
        assert_eq!(same.decision, Decision::Reject);
    }

    #[test]
    fn binomial_p_matches_direct_summation() {
        for (n, k) in [(20u64, 3u64), (50, 14), (100, 0), (7, 2), (700, 200), (33, 33)] {
            let p = 2.0 / 7.0;
            let pmf = pmf_table(n, p);
            let obs = pmf[k as usize];
            let direct: f64 = pmf.iter().filter(|&&v| v <= obs * (1.0 + 1e-7)).sum();
            let got = binomial_two_sided(k, n, p);
            assert!((got - direct.min(1.0)).abs() < 1e-9, "n={n} k={k}: {got} vs {direct}");
        }
    }

    fn day(date: &str) -> i64 {
        crate::report::parse_timestamp(date).unwrap() + 12 * 3600
    }

    #[test]
    fn weekday_examples() {
        // 2026-01-05 is a Monday, 2026-01-10 a Saturday
        let monday = day("2026-01-05");
        let saturday = day("2026-01-10");
        let cal = Calendar::default();
        assert!(!cal.is_weekend(monday));
        assert!(cal.is_weekend(saturday));

        let mut times = vec![saturday; 200];
        times.extend(std::iter::repeat_n(monday, 500));
        let r = weekday_rate_test(&times, &cal, 0.05).unwrap();
        assert!(r.p_value > 0.9, "{}", r.p_value);
        assert_eq!(r.decision, Decision::Accept);

        let r = weekday_rate_test(&[monday; 100], &cal, 0.05).unwrap();
        assert!(r.p_value <= (5.0f64 / 7.0).powi(100) * 2.0 + 1e-300);
        assert_eq!(r.decision, Decision::Reject);

        let r = weekday_rate_test(&[monday], &cal, 0.05).unwrap();
        assert_eq!(r.decision, Decision::Accept);
        assert!(weekday_rate_test(&[], &cal, 0.05).is_err());
    }

    #[test]
    fn calendar_offset_shifts_days() {
        // Friday 23:00 UTC is Saturday 01:00 at UTC+2
        let friday_late = crate::report::parse_timestamp("2026-01-09T23:00:00Z").unwrap();
        assert!(!Calendar::default().is_weekend(friday_late));
        assert!(Calendar { utc_offset_seconds: 7200 }.is_weekend(friday_late));
    }
}
