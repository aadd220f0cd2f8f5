use serde::{Deserialize, Serialize};

use crate::cost::CostFunctions;
use crate::error::{Error, Result};

/// A function of sub-task size `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RateCurve {
    Constant { value: f64 },
    /// `1 / (1 + exp(-(m - midpoint) / scale))`
    Logistic { midpoint: f64, scale: f64 },
    /// `max * (1 - exp(-m / tau))`
    Saturating { max: f64, tau: f64 },
}

impl RateCurve {
    pub const ZERO: RateCurve = RateCurve::Constant { value: 0.0 };

    pub fn eval(&self, m: usize) -> f64 {
        let m = m as f64;
        match *self {
            RateCurve::Constant { value } => value,
            RateCurve::Logistic { midpoint, scale } => 1.0 / (1.0 + (-(m - midpoint) / scale).exp()),
            RateCurve::Saturating { max, tau } => max * (1.0 - (-m / tau).exp()),
        }
    }

    /// Evaluates and clamps into `[0, 1]`.
    pub fn probability(&self, m: usize) -> f64 {
        self.eval(m).clamp(0.0, 1.0)
    }

    fn check_probability(&self, name: &str) -> Result<()> {
        let ok = match *self {
            RateCurve::Constant { value } => (0.0..=1.0).contains(&value),
            RateCurve::Logistic { scale, midpoint } => scale > 0.0 && midpoint.is_finite(),
            RateCurve::Saturating { max, tau } => (0.0..=1.0).contains(&max) && tau > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name}: {self:?} does not map sizes into [0, 1]")))
        }
    }

    fn check_magnitude(&self, name: &str) -> Result<()> {
        let ok = match *self {
            RateCurve::Constant { value } => value >= 0.0,
            RateCurve::Logistic { scale, .. } => scale > 0.0,
            RateCurve::Saturating { max, tau } => max >= 0.0 && tau > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("{name}: {self:?} must be nonnegative")))
        }
    }
}

/// Degradation applied by the mock sorter, each a function of `m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SortDegradation {
    /// Per-element probability of being dropped from the output.
    pub drop_rate: RateCurve,
    /// Per-element probability of a value perturbation.
    pub perturb_rate: RateCurve,
    /// Largest absolute perturbation.
    pub perturb_scale: RateCurve,
    /// Per-position probability of swapping two adjacent outputs.
    pub swap_rate: RateCurve,
    /// Re-sort after perturbing, so outputs stay monotone.
    pub monotone: bool,
}

impl Default for SortDegradation {
    fn default() -> Self {
        SortDegradation {
            drop_rate: RateCurve::ZERO,
            perturb_rate: RateCurve::ZERO,
            perturb_scale: RateCurve::ZERO,
            swap_rate: RateCurve::ZERO,
            monotone: false,
        }
    }
}

/// Failure-mode model of the mock LLM.
///
/// `retrieval_p1` is the probability of missing a needle that is present in
/// the chunk; `retrieval_p2` the probability of answering with a confusable
/// passcode when the needle is absent. `retrieval_p2 == 0` everywhere is a
/// Type-1 model; anything else is Type-2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MockProfile {
    pub count_miss_rate: RateCurve,
    pub sort: SortDegradation,
    pub retrieval_p1: RateCurve,
    pub retrieval_p2: RateCurve,
    /// Share of first-mode failures that produce a wrong passcode instead of
    /// "I don't know".
    pub wrong_answer_share: f64,
    /// Counting responses list every digit before the answer (O(m) decode).
    pub verbose_counting: bool,
    /// Simulated latency as a function of prompt/completion tokens.
    pub latency: CostFunctions,
}

impl Default for MockProfile {
    fn default() -> Self {
        MockProfile::exact()
    }
}

impl MockProfile {
    pub const BUILTIN: [&'static str; 4] = ["exact", "default", "type1", "type2"];

    /// Error-free model.
    pub fn exact() -> Self {
        MockProfile {
            count_miss_rate: RateCurve::ZERO,
            sort: SortDegradation::default(),
            retrieval_p1: RateCurve::ZERO,
            retrieval_p2: RateCurve::ZERO,
            wrong_answer_share: 0.5,
            verbose_counting: false,
            latency: CostFunctions::default(),
        }
    }

    /// Size-dependent errors on every task; retrieval is Type-2.
    pub fn default_noisy() -> Self {
        MockProfile {
            count_miss_rate: RateCurve::Saturating { max: 0.2, tau: 500.0 },
            sort: SortDegradation {
                drop_rate: RateCurve::Saturating { max: 0.1, tau: 400.0 },
                perturb_rate: RateCurve::Saturating { max: 0.2, tau: 200.0 },
                perturb_scale: RateCurve::Constant { value: 0.02 },
                swap_rate: RateCurve::Saturating { max: 0.05, tau: 200.0 },
                monotone: false,
            },
            retrieval_p1: RateCurve::Logistic {
                midpoint: 4000.0,
                scale: 800.0,
            },
            retrieval_p2: RateCurve::Constant { value: 0.02 },
            ..MockProfile::exact()
        }
    }

    pub fn type1() -> Self {
        MockProfile {
            retrieval_p2: RateCurve::ZERO,
            ..MockProfile::default_noisy()
        }
    }

    pub fn type2() -> Self {
        MockProfile {
            retrieval_p2: RateCurve::Constant { value: 0.05 },
            ..MockProfile::default_noisy()
        }
    }

    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "exact" => Some(Self::exact()),
            "default" => Some(Self::default_noisy()),
            "type1" => Some(Self::type1()),
            "type2" => Some(Self::type2()),
            _ => None,
        }
    }

    pub fn is_type1(&self) -> bool {
        self.retrieval_p2 == RateCurve::ZERO
    }

    pub fn validate(&self) -> Result<()> {
        self.count_miss_rate.check_probability("count_miss_rate")?;
        self.sort.drop_rate.check_probability("sort.drop_rate")?;
        self.sort.perturb_rate.check_probability("sort.perturb_rate")?;
        self.sort.swap_rate.check_probability("sort.swap_rate")?;
        self.sort.perturb_scale.check_magnitude("sort.perturb_scale")?;
        self.retrieval_p1.check_probability("retrieval_p1")?;
        self.retrieval_p2.check_probability("retrieval_p2")?;
        if !(0.0..=1.0).contains(&self.wrong_answer_share) {
            return Err(Error::invalid("wrong_answer_share must lie in [0, 1]"));
        }
        self.latency.validate()
    }

    /// Exact `E|y - y*|` of the counting mock on a substring with the given
    /// numbers of digits and non-digits.
    ///
    /// With miss rate `r`, the answer is `y* - M + F` where `M ~ Bin(digits, r)`
    /// counts missed digits and `F ~ Bin(non_digits, r)` counts letters taken
    /// for digits.
    pub fn expected_count_abs_error(&self, digits: usize, non_digits: usize) -> f64 {
        let r = self.count_miss_rate.probability(digits + non_digits);
        let missed = binomial_pmf(digits, r);
        let false_hits = binomial_pmf(non_digits, r);
        let mut total = 0.0;
        for &(a, pa) in &missed {
            for &(b, pb) in &false_hits {
                total += pa * pb * (a as f64 - b as f64).abs();
            }
        }
        total
    }
}

/// Binomial pmf restricted to its numerically non-negligible support.
fn binomial_pmf(n: usize, p: f64) -> Vec<(usize, f64)> {
    if p <= 0.0 || n == 0 {
        return vec![(0, 1.0)];
    }
    if p >= 1.0 {
        return vec![(n, 1.0)];
    }
    let mut ln_fact = vec![0.0f64; n + 1];
    for i in 1..=n {
        ln_fact[i] = ln_fact[i - 1] + (i as f64).ln();
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (0..=n)
        .map(|k| {
            let ln = ln_fact[n] - ln_fact[k] - ln_fact[n - k] + k as f64 * lp + (n - k) as f64 * lq;
            (k, ln.exp())
        })
        .filter(|&(_, v)| v > 1e-18)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curves_evaluate() {
        assert_eq!(RateCurve::Constant { value: 0.3 }.eval(10), 0.3);
        let l = RateCurve::Logistic { midpoint: 100.0, scale: 10.0 };
        assert!((l.eval(100) - 0.5).abs() < 1e-12);
        assert!(l.eval(50) < l.eval(150));
        let s = RateCurve::Saturating { max: 0.5, tau: 100.0 };
        assert!((s.eval(100) - 0.5 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        assert_eq!(s.eval(0), 0.0);
    }

    #[test]
    fn builtins_validate_and_p1_is_nondecreasing() {
        for name in MockProfile::BUILTIN {
            let p = MockProfile::builtin(name).unwrap();
            p.validate().unwrap();
            for m in 1..20_000 {
                let (a, b) = (p.retrieval_p1.probability(m), p.retrieval_p1.probability(m + 1));
                assert!(a <= b && (0.0..=1.0).contains(&a), "{name} at m={m}");
            }
        }
        assert!(MockProfile::type1().is_type1());
        assert!(!MockProfile::type2().is_type1());
    }

    #[test]
    fn out_of_range_curves_are_rejected() {
        let mut p = MockProfile::exact();
        p.retrieval_p2 = RateCurve::Constant { value: 1.5 };
        assert!(p.validate().is_err());
        p.retrieval_p2 = RateCurve::Logistic { midpoint: 0.0, scale: -1.0 };
        assert!(p.validate().is_err());
    }

    #[test]
    fn binomial_pmf_sums_to_one_with_correct_mean() {
        let pmf = binomial_pmf(1000, 0.1);
        let total: f64 = pmf.iter().map(|(_, v)| v).sum();
        let mean: f64 = pmf.iter().map(|(k, v)| *k as f64 * v).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!((mean - 100.0).abs() < 1e-6);
    }

    #[test]
    fn expected_error_of_all_digit_string_is_binomial_mean() {
        let mut p = MockProfile::exact();
        p.count_miss_rate = RateCurve::Constant { value: 0.1 };
        assert!((p.expected_count_abs_error(1000, 0) - 100.0).abs() < 1e-6);
        // one digit, one letter: |M - F| is 1 with prob 2 r (1 - r)
        let e = p.expected_count_abs_error(1, 1);
        assert!((e - 2.0 * 0.1 * 0.9).abs() < 1e-12);
    }
}
