use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    estimate_tokens, split_task_tag, tags, BackendError, ChatExchange, GenerationParams, LlmBackend,
    MockProfile,
};
use crate::graph::DONT_KNOW;
use crate::tasks::haystack::{self, PasscodeSentence};
use crate::tasks::prompts::extract_block;
use crate::tasks::sorting::{format_list, parse_list};

/// Deterministic stand-in for an LLM.
///
/// The mock reads the `#task:` tag on the first line of the prompt, solves the
/// task symbolically and then injects errors according to its
/// [`MockProfile`]. All randomness comes from the per-call seed; the backend
/// holds no mutable state.
#[derive(Debug, Clone, Default)]
pub struct MockBackend {
    profile: MockProfile,
}

impl MockBackend {
    pub fn new(profile: MockProfile) -> Self {
        MockBackend { profile }
    }

    pub fn exact() -> Self {
        MockBackend::new(MockProfile::exact())
    }

    pub fn profile(&self) -> &MockProfile {
        &self.profile
    }

    /// Counts digits, missing each digit and mistaking each non-digit with
    /// probability `count_miss_rate(m)`.
    pub fn mock_count(&self, substring: &str, m: usize, seed: u64) -> i64 {
        let rate = self.profile.count_miss_rate.probability(m);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        substring
            .chars()
            .map(|c| {
                let flipped = rate > 0.0 && rng.random_bool(rate);
                i64::from(c.is_ascii_digit() != flipped)
            })
            .sum()
    }

    /// Sorts, then drops elements, perturbs values and swaps neighbours.
    pub fn mock_sort(&self, list: &[f64], m: usize, seed: u64) -> Vec<f64> {
        let deg = &self.profile.sort;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = list.to_vec();
        out.sort_by(f64::total_cmp);

        let drop = deg.drop_rate.probability(m);
        if drop > 0.0 {
            out.retain(|_| !rng.random_bool(drop));
        }

        let perturb = deg.perturb_rate.probability(m);
        let steps = (deg.perturb_scale.eval(m).max(0.0) * 100.0 + 1e-9).floor() as i64;
        if perturb > 0.0 && steps > 0 {
            for v in out.iter_mut() {
                if rng.random_bool(perturb) {
                    let delta = rng.random_range(-steps..=steps);
                    *v = shift_hundredths(*v, delta);
                }
            }
            if deg.monotone {
                out.sort_by(f64::total_cmp);
            }
        }

        let swap = deg.swap_rate.probability(m);
        if swap > 0.0 && !deg.monotone {
            let mut i = 0;
            while i + 1 < out.len() {
                if rng.random_bool(swap) {
                    out.swap(i, i + 1);
                    i += 2;
                } else {
                    i += 1;
                }
            }
        }
        out
    }

    /// Answers a single-needle question from one chunk; `None` is "I don't know".
    pub fn mock_retrieve(&self, chunk: &str, question: &str, m: usize, seed: u64) -> Option<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = haystack::target_from_question(question)?;
        let sentences = haystack::passcode_sentences(chunk);
        let needle = sentences.iter().find(|s| s.object == target);
        let confusables: Vec<&PasscodeSentence> = sentences
            .iter()
            .filter(|s| s.object != target && Some(&s.passcode) != needle.map(|n| &n.passcode))
            .collect();

        match needle {
            Some(n) => {
                if !rng.random_bool(self.profile.retrieval_p1.probability(m)) {
                    Some(n.passcode.clone())
                } else if rng.random_bool(self.profile.wrong_answer_share) {
                    Some(match confusables.choose(&mut rng) {
                        Some(c) => c.passcode.clone(),
                        None => random_passcode_except(&mut rng, &n.passcode),
                    })
                } else {
                    None
                }
            }
            None => {
                if rng.random_bool(self.profile.retrieval_p2.probability(m)) {
                    Some(match confusables.choose(&mut rng) {
                        Some(c) => c.passcode.clone(),
                        None => random_passcode_except(&mut rng, ""),
                    })
                } else {
                    None
                }
            }
        }
    }

    /// Returns the digit sentences of `chunk` relevant to the question, each
    /// missed with probability `p1(m)`, plus one irrelevant sentence with
    /// probability `p2(m)`.
    pub fn mock_rag_retrieve(&self, chunk: &str, question: &str, m: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let Some(target) = haystack::target_from_question(question) else {
            return Vec::new();
        };
        let p1 = self.profile.retrieval_p1.probability(m);
        let p2 = self.profile.retrieval_p2.probability(m);
        let all = haystack::digit_sentences(chunk);
        let mut picked: Vec<usize> = all
            .iter()
            .enumerate()
            .filter(|(_, s)| s.object == target)
            .filter(|_| !rng.random_bool(p1))
            .map(|(i, _)| i)
            .collect();
        if rng.random_bool(p2) {
            let others: Vec<usize> = (0..all.len()).filter(|&i| all[i].object != target).collect();
            if let Some(&i) = others.choose(&mut rng) {
                picked.push(i);
                picked.sort_unstable();
            }
        }
        picked.into_iter().map(|i| all[i].sentence.clone()).collect()
    }

    /// Assembles the passcode from retrieved digit sentences; unknown digits
    /// are `?`. Error-free.
    pub fn mock_rag_aggregate(&self, sentences: &[String], question: &str, _seed: u64) -> String {
        let mut digits = ['?'; haystack::PASSCODE_LEN];
        if let Some(target) = haystack::target_from_question(question) {
            for s in sentences.iter().flat_map(|s| haystack::digit_sentences(s)) {
                if s.object == target && (1..=digits.len()).contains(&s.position) {
                    let slot = &mut digits[s.position - 1];
                    if *slot == '?' {
                        *slot = s.digit;
                    }
                }
            }
        }
        digits.iter().collect()
    }

    fn respond(&self, tag: &str, body: &str, seed: u64) -> Result<String, BackendError> {
        let block = |name: &str| {
            extract_block(body, name)
                .ok_or_else(|| BackendError::Configuration(format!("`{tag}` prompt lacks a <{name}> block")))
        };
        match tag {
            tags::COUNT => {
                let text = block("text")?;
                let m = text.chars().count();
                let count = self.mock_count(text, m, seed);
                if self.profile.verbose_counting {
                    let seen: Vec<String> = text
                        .chars()
                        .filter(char::is_ascii_digit)
                        .map(String::from)
                        .collect();
                    Ok(format!("Digits: {}\nAnswer: {count}", seen.join(" ")))
                } else {
                    Ok(count.to_string())
                }
            }
            tags::SORT => {
                let list = parse_list(block("list")?).map_err(BackendError::Configuration)?;
                Ok(format_list(&self.mock_sort(&list, list.len(), seed)))
            }
            tags::RETRIEVE => {
                let chunk = block("text")?;
                let question = block("question")?;
                let m = chunk.chars().count();
                Ok(self
                    .mock_retrieve(chunk, question, m, seed)
                    .unwrap_or_else(|| DONT_KNOW.to_string()))
            }
            tags::RAG_RETRIEVE => {
                let chunk = block("text")?;
                let question = block("question")?;
                let found = self.mock_rag_retrieve(chunk, question, chunk.chars().count(), seed);
                Ok(if found.is_empty() { "None".to_string() } else { found.join("\n") })
            }
            tags::RAG_AGGREGATE => {
                let question = block("question")?;
                let sentences: Vec<String> = block("sentences")?
                    .lines()
                    .map(str::trim)
                    .filter(|l| !l.is_empty())
                    .map(String::from)
                    .collect();
                Ok(self.mock_rag_aggregate(&sentences, question, seed))
            }
            other => Err(BackendError::Configuration(format!("unknown task tag `{other}`"))),
        }
    }
}

impl LlmBackend for MockBackend {
    fn chat(&self, prompt: &str, _params: &GenerationParams, seed: u64) -> Result<ChatExchange, BackendError> {
        let (tag, body) = split_task_tag(prompt);
        let tag = tag.ok_or_else(|| BackendError::Configuration("prompt has no #task: tag".into()))?;
        let response = self.respond(tag, body, seed)?;
        let prompt_tokens = estimate_tokens(prompt);
        let completion_tokens = estimate_tokens(&response);
        let latency_ms = self
            .profile
            .latency
            .cost_single_call(prompt_tokens as f64, completion_tokens as f64);
        Ok(ChatExchange {
            node_id: None,
            prompt_text: prompt.to_string(),
            response_text: response,
            prompt_tokens,
            completion_tokens,
            latency_ms,
        })
    }
}

/// Adds `delta` hundredths, keeping two-decimal values on the grid.
fn shift_hundredths(v: f64, delta: i64) -> f64 {
    let scaled = v * 100.0;
    if (scaled - scaled.round()).abs() < 1e-6 {
        (scaled.round() as i64 + delta) as f64 / 100.0
    } else {
        v + delta as f64 / 100.0
    }
}

fn random_passcode_except<R: Rng>(rng: &mut R, avoid: &str) -> String {
    loop {
        let code = haystack::random_passcode(rng);
        if code != avoid {
            return code;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::RateCurve;
    use crate::tasks::prompts;

    fn with(f: impl FnOnce(&mut MockProfile)) -> MockBackend {
        let mut p = MockProfile::exact();
        f(&mut p);
        MockBackend::new(p)
    }

    #[test]
    fn exact_count() {
        let mock = MockBackend::exact();
        assert_eq!(mock.mock_count("a1b2", 4, 9), 2);
        let ex = mock.chat(&prompts::count("a1b2c3"), &GenerationParams::default(), 5).unwrap();
        assert_eq!(ex.response_text, "3");
        assert_eq!(ex.prompt_tokens, estimate_tokens(&ex.prompt_text));
    }

    #[test]
    fn chat_is_deterministic() {
        let mock = MockBackend::new(MockProfile::default_noisy());
        let prompt = prompts::count("x9y8z7w6v5u4t3s2r1");
        let a = mock.chat(&prompt, &GenerationParams::default(), 11).unwrap();
        let b = mock.chat(&prompt, &GenerationParams::default(), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unknown_or_missing_tag_is_a_configuration_error() {
        let mock = MockBackend::exact();
        let params = GenerationParams::default();
        assert!(matches!(
            mock.chat("#task:translate\n<text>x</text>", &params, 0),
            Err(BackendError::Configuration(_))
        ));
        assert!(matches!(mock.chat("no tag", &params, 0), Err(BackendError::Configuration(_))));
    }

    #[test]
    fn count_miss_rate_matches_binomial_expectation() {
        let mock = with(|p| p.count_miss_rate = RateCurve::Constant { value: 0.1 });
        let digits = "7".repeat(1000);
        let trials = 10_000u64;
        let mean = (0..trials)
            .map(|s| (mock.mock_count(&digits, 1000, s) - 1000).abs() as f64)
            .sum::<f64>()
            / trials as f64;
        let expected = mock.profile().expected_count_abs_error(1000, 0);
        assert!((mean - expected).abs() / expected < 0.05, "mean {mean} vs {expected}");
    }

    #[test]
    fn exact_sort_and_drop_rate() {
        let list = [0.5, 0.1, 0.3];
        assert_eq!(MockBackend::exact().mock_sort(&list, 3, 0), vec![0.1, 0.3, 0.5]);

        let mock = with(|p| p.sort.drop_rate = RateCurve::Constant { value: 0.01 });
        let input: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let trials = 10_000u64;
        let mean_mismatch = (0..trials)
            .map(|s| (100 - mock.mock_sort(&input, 100, s).len()) as f64 / 100.0)
            .sum::<f64>()
            / trials as f64;
        // one expected drop in a list of 100 -> 1/n
        assert!((mean_mismatch - 0.01).abs() < 0.001, "{mean_mismatch}");
    }

    #[test]
    fn perturbations_break_monotonicity_by_at_most_twice_the_scale() {
        let mock = with(|p| {
            p.sort.perturb_rate = RateCurve::Constant { value: 0.5 };
            p.sort.perturb_scale = RateCurve::Constant { value: 0.03 };
        });
        let input: Vec<f64> = (0..200).map(|i| ((i * 37) % 101) as f64 / 100.0).collect();
        for seed in 0..200 {
            let out = mock.mock_sort(&input, input.len(), seed);
            assert_eq!(out.len(), input.len());
            for w in out.windows(2) {
                assert!(w[0] - w[1] <= 2.0 * 0.03 + 1e-9);
            }
        }
    }

    #[test]
    fn retrieval_modes() {
        let chunk = "The passcode to the red door is 123456. The passcode to the blue lock is 654321.";
        let q = "What is the passcode to the red door?";
        let exact = MockBackend::exact();
        assert_eq!(exact.mock_retrieve(chunk, q, 80, 1).as_deref(), Some("123456"));
        let absent = "The passcode to the blue lock is 654321.";
        assert_eq!(exact.mock_retrieve(absent, q, 40, 1), None);

        let hallucinating = with(|p| p.retrieval_p2 = RateCurve::Constant { value: 1.0 });
        assert_eq!(hallucinating.mock_retrieve(absent, q, 40, 1).as_deref(), Some("654321"));

        let blind = with(|p| {
            p.retrieval_p1 = RateCurve::Constant { value: 1.0 };
            p.wrong_answer_share = 1.0;
        });
        assert_eq!(blind.mock_retrieve(chunk, q, 80, 3).as_deref(), Some("654321"));
    }

    #[test]
    fn false_positive_count_matches_k_times_p2() {
        let mock = with(|p| p.retrieval_p2 = RateCurve::Constant { value: 0.2 });
        let q = "What is the passcode to the red door?";
        let chunk = "The passcode to the green box is 111111. The passcode to the red lock is 222222.";
        let k_minus_1 = 9u64;
        let trials = 10_000u64;
        let total: usize = (0..trials)
            .map(|t| {
                (0..k_minus_1)
                    .filter(|c| mock.mock_retrieve(chunk, q, 80, t * 100 + c).is_some())
                    .count()
            })
            .sum();
        let mean = total as f64 / trials as f64;
        let expected = 0.2 * k_minus_1 as f64;
        assert!((mean - expected).abs() / expected < 0.05, "{mean}");
    }

    #[test]
    fn rag_retrieve_and_aggregate() {
        let q = "What is the 6-digit passcode to the red door?";
        let chunk = "The 2-th digit of the passcode to the red door is 7. \
                     The 1-th digit of the passcode to the blue box is 3. \
                     The 5-th digit of the passcode to the red door is 0.";
        let exact = MockBackend::exact();
        let got = exact.mock_rag_retrieve(chunk, q, chunk.len(), 4);
        assert_eq!(
            got,
            vec![
                "The 2-th digit of the passcode to the red door is 7.".to_string(),
                "The 5-th digit of the passcode to the red door is 0.".to_string()
            ]
        );
        let none = "The 1-th digit of the passcode to the blue box is 3.";
        assert!(exact.mock_rag_retrieve(none, q, none.len(), 4).is_empty());

        assert_eq!(exact.mock_rag_aggregate(&got, q, 0), "?7??0?");
        assert_eq!(exact.mock_rag_aggregate(&[], q, 0), "??????");
        let full: Vec<String> = "918273"
            .chars()
            .enumerate()
            .map(|(i, d)| format!("The {}-th digit of the passcode to the red door is {d}.", i + 1))
            .collect();
        assert_eq!(exact.mock_rag_aggregate(&full, q, 0), "918273");
        assert_eq!(exact.mock_rag_aggregate(&full[..3], q, 0), "918???");
    }

    #[test]
    fn rag_miss_frequency_is_bernoulli() {
        let mock = with(|p| p.retrieval_p1 = RateCurve::Constant { value: 0.5 });
        let q = "What is the 6-digit passcode to the red door?";
        let chunk = "The 3-th digit of the passcode to the red door is 4.";
        let trials = 10_000u64;
        let hits = (0..trials)
            .filter(|&s| !mock.mock_rag_retrieve(chunk, q, 60, s).is_empty())
            .count();
        let freq = hits as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.025, "{freq}");
    }

    #[test]
    fn decode_length_is_constant_for_counting_and_linear_for_sorting() {
        let mock = MockBackend::new(MockProfile::default_noisy());
        let params = GenerationParams::default();
        for m in [10usize, 100, 1000, 5000] {
            let text: String = (0..m).map(|i| if i % 3 == 0 { '5' } else { 'x' }).collect();
            let ex = mock.chat(&prompts::count(&text), &params, m as u64).unwrap();
            assert!(ex.completion_tokens <= 3, "m={m}: {}", ex.completion_tokens);

            let list: Vec<f64> = (0..m).map(|i| (i % 100) as f64 / 100.0).collect();
            let ex = mock.chat(&prompts::sort(&list), &params, 1).unwrap();
            let ratio = ex.completion_tokens as f64 / m as f64;
            assert!((0.25..=3.0).contains(&ratio), "m={m}: ratio {ratio}");
        }
    }
}
