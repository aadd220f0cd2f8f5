//! Task error metrics and error-composition bounds.
//!
//! Metric identifiers double as CSV column headers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::AnswerRecord;
use crate::tasks::haystack::PASSCODE_LEN;

pub const ERR_ABS: &str = "err_abs";
pub const ERR_NORM: &str = "err_norm";
pub const ERR_EXACT: &str = "err_exact";
pub const ERR_NONMONO: &str = "err_nonmono";
pub const ERR_LENMIS: &str = "err_lenmis";
pub const ERR_LINF: &str = "err_linf";
pub const ERR_L1: &str = "err_l1";
pub const ERR_RETRIEVAL: &str = "err_retrieval";
pub const ERR_DIGITS: &str = "err_digits";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountingErrors {
    pub absolute: f64,
    pub normalized: f64,
}

pub fn counting_errors(y: i64, y_star: i64, n: usize) -> Result<CountingErrors> {
    if n == 0 {
        return Err(Error::invalid("counting errors need n >= 1"));
    }
    let absolute = (y - y_star).unsigned_abs() as f64;
    Ok(CountingErrors {
        absolute,
        normalized: absolute / n as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SortingErrors {
    pub exact_match: f64,
    pub non_monotonicity: f64,
    pub length_mismatch: f64,
    pub fuzzy_linf: f64,
    pub fuzzy_l1: f64,
}

/// `sum max(y_i - y_{i+1}, 0)`; zero iff `y` is sorted.
pub fn non_monotonicity(y: &[f64]) -> f64 {
    y.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum()
}

/// Brings `y` to length `n`: truncates, or pads with its last entry
/// (with `0.0` when `y` is empty).
pub fn resize_to(y: &[f64], n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = y.iter().copied().take(n).collect();
    let pad = y.last().copied().unwrap_or(0.0);
    out.resize(n, pad);
    out
}

pub fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sorting_errors(y: &[f64], y_star: &[f64]) -> Result<SortingErrors> {
    let n = y_star.len();
    if n == 0 {
        return Err(Error::invalid("sorting errors need a non-empty reference"));
    }
    if y == y_star {
        return Ok(SortingErrors {
            exact_match: 0.0,
            non_monotonicity: 0.0,
            length_mismatch: 0.0,
            fuzzy_linf: 0.0,
            fuzzy_l1: 0.0,
        });
    }
    let y_hat = resize_to(y, n);
    let l1: f64 = y_hat.iter().zip(y_star).map(|(a, b)| (a - b).abs()).sum();
    Ok(SortingErrors {
        exact_match: 1.0,
        non_monotonicity: non_monotonicity(y),
        length_mismatch: y.len().abs_diff(n) as f64 / n as f64,
        fuzzy_linf: linf(&y_hat, y_star),
        fuzzy_l1: l1 / n as f64,
    })
}

pub fn retrieval_error(answer: &AnswerRecord, truth: &str) -> f64 {
    match answer {
        AnswerRecord::Passcode(p) if p == truth => 0.0,
        AnswerRecord::Candidates(c) if c.iter().any(|x| x == truth) => 1.0 - 1.0 / c.len() as f64,
        _ => 1.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RagErrors {
    pub exact_match: f64,
    pub digit_fraction_wrong: f64,
}

pub fn rag_errors(answer: &str, truth: &str) -> Result<RagErrors> {
    let a: Vec<char> = answer.chars().collect();
    let t: Vec<char> = truth.chars().collect();
    if a.len() != PASSCODE_LEN || t.len() != PASSCODE_LEN {
        return Err(Error::MalformedAnswer(format!(
            "expected {PASSCODE_LEN}-character passcodes, got `{answer}` vs `{truth}`"
        )));
    }
    let wrong = a.iter().zip(&t).filter(|(x, y)| *x == &'?' || x != y).count();
    Ok(RagErrors {
        exact_match: f64::from(u8::from(wrong > 0)),
        digit_fraction_wrong: wrong as f64 / PASSCODE_LEN as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorForm {
    Sum,
    Mean,
    Min,
    Max,
}

pub fn compose_error_bound(errors: &[f64], form: ErrorForm) -> Result<f64> {
    if errors.is_empty() {
        return Err(Error::invalid("cannot compose an empty list of errors"));
    }
    let it = errors.iter().copied();
    Ok(match form {
        ErrorForm::Sum => it.sum(),
        ErrorForm::Mean => it.sum::<f64>() / errors.len() as f64,
        ErrorForm::Min => it.fold(f64::INFINITY, f64::min),
        ErrorForm::Max => it.fold(f64::NEG_INFINITY, f64::max),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn counting_examples() {
        assert_eq!(counting_errors(100, 100, 200).unwrap(), CountingErrors { absolute: 0.0, normalized: 0.0 });
        let e = counting_errors(95, 100, 200).unwrap();
        assert_eq!(e.absolute, 5.0);
        assert!(close(e.normalized, 0.025));
        assert!(counting_errors(1, 1, 0).is_err());
    }

    #[test]
    fn sorting_examples() {
        let e = sorting_errors(&[0.1, 0.2], &[0.1, 0.2]).unwrap();
        assert_eq!(e.exact_match + e.non_monotonicity + e.length_mismatch + e.fuzzy_linf + e.fuzzy_l1, 0.0);

        let e = sorting_errors(&[0.3, 0.1, 0.2], &[0.1, 0.2, 0.3]).unwrap();
        assert!(close(e.non_monotonicity, 0.2));

        let e = sorting_errors(&[0.1, 0.2, 0.5, 0.9], &[0.1, 0.3, 0.5]).unwrap();
        assert!(close(e.length_mismatch, 1.0 / 3.0));
        assert!(close(e.fuzzy_linf, 0.1));
        assert!(close(e.fuzzy_l1, 0.1 / 3.0));
    }

    #[test]
    fn sorting_empty_output_pads_with_zeros() {
        let e = sorting_errors(&[], &[0.25, 0.5]).unwrap();
        assert_eq!(e.length_mismatch, 1.0);
        assert_eq!(e.fuzzy_linf, 0.5);
        assert_eq!(e.exact_match, 1.0);
    }

    #[test]
    fn short_output_pads_with_last_entry() {
        assert_eq!(resize_to(&[0.1, 0.4], 4), vec![0.1, 0.4, 0.4, 0.4]);
        assert_eq!(resize_to(&[], 2), vec![0.0, 0.0]);
    }

    #[test]
    fn retrieval_examples() {
        assert_eq!(retrieval_error(&AnswerRecord::Passcode("123456".into()), "123456"), 0.0);
        let tie = AnswerRecord::Candidates(vec!["123456".into(), "654321".into()]);
        assert_eq!(retrieval_error(&tie, "123456"), 0.5);
        assert_eq!(retrieval_error(&tie, "000000"), 1.0);
        assert_eq!(retrieval_error(&AnswerRecord::Unknown, "123456"), 1.0);
        assert_eq!(retrieval_error(&AnswerRecord::Passcode("123455".into()), "123456"), 1.0);
    }

    #[test]
    fn rag_examples() {
        assert_eq!(rag_errors("123456", "123456").unwrap(), RagErrors { exact_match: 0.0, digit_fraction_wrong: 0.0 });
        let e = rag_errors("12345?", "123456").unwrap();
        assert_eq!(e.exact_match, 1.0);
        assert!(close(e.digit_fraction_wrong, 1.0 / 6.0));
        assert_eq!(rag_errors("??????", "123456").unwrap().digit_fraction_wrong, 1.0);
        assert!(matches!(rag_errors("12345", "123456"), Err(Error::MalformedAnswer(_))));
    }

    #[test]
    fn compose_examples() {
        assert_eq!(compose_error_bound(&[1.0, 2.0, 3.0], ErrorForm::Sum).unwrap(), 6.0);
        assert_eq!(compose_error_bound(&[1.0, 2.0, 3.0], ErrorForm::Mean).unwrap(), 2.0);
        assert_eq!(compose_error_bound(&[0.4, 0.0, 0.9], ErrorForm::Min).unwrap(), 0.0);
        assert_eq!(compose_error_bound(&[0.01, 0.0], ErrorForm::Max).unwrap(), 0.01);
        assert!(compose_error_bound(&[], ErrorForm::Sum).is_err());
    }

    proptest! {
        #[test]
        fn signed_sum_is_bounded_by_sum_of_abs(e in proptest::collection::vec(-1000i64..1000, 1..30)) {
            let s: i64 = e.iter().sum();
            let abs: Vec<f64> = e.iter().map(|x| x.unsigned_abs() as f64).collect();
            prop_assert!(s.unsigned_abs() as f64 <= compose_error_bound(&abs, ErrorForm::Sum).unwrap());
        }

        #[test]
        fn rag_fraction_never_exceeds_exact(a in "[0-9?]{6}", t in "[0-9]{6}") {
            let e = rag_errors(&a, &t).unwrap();
            prop_assert!(e.digit_fraction_wrong <= e.exact_match);
        }

        #[test]
        fn non_monotonicity_zero_iff_sorted(y in proptest::collection::vec(0.0f64..1.0, 0..30)) {
            let sorted = y.windows(2).all(|w| w[0] <= w[1]);
            prop_assert_eq!(non_monotonicity(&y) == 0.0, sorted);
        }

        #[test]
        fn retrieval_error_in_discrete_set(h in 1usize..8, hit in any::<bool>()) {
            let mut c: Vec<String> = (0..h).map(|i| format!("{i:06}")).collect();
            if !hit { c[0] = "999999".into(); }
            let v = retrieval_error(&AnswerRecord::Candidates(c), "000000");
            prop_assert!(v == 1.0 || (1..=8).any(|h| (v - (1.0 - 1.0 / h as f64)).abs() < 1e-15));
        }
    }
}
