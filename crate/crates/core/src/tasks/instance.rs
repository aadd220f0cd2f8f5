//! Seeded instance generators and the line-oriented instance file format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Range;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::haystack::{self, all_objects, digit_sentence, passcode_sentence, random_passcode, PASSCODE_LEN};
use super::sorting::{format_list, parse_list};
use super::TaskKind;
use crate::error::{Error, Result};

const MAGIC: &str = "algograph-instance v1";

#[derive(Debug, Clone, PartialEq)]
pub struct CountingInstance {
    /// ASCII letters and digits.
    pub text: String,
    pub truth: i64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SortingInstance {
    /// Values in `[0, 1]` with two decimals.
    pub values: Vec<f64>,
    pub truth: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HaystackInstance {
    pub text: String,
    pub target_object: String,
    pub truth: String,
    pub needle_present: bool,
    pub needle_span: Option<Range<usize>>,
    pub seed: u64,
}

impl HaystackInstance {
    /// Length of the needle sentence, whether or not it was inserted.
    pub fn needle_len(&self) -> usize {
        passcode_sentence(&self.target_object, &"0".repeat(PASSCODE_LEN)).len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RagInstance {
    pub text: String,
    pub target_object: String,
    pub truth: String,
    /// Span of the sentence for digit `i + 1`.
    pub needle_spans: Vec<Range<usize>>,
    pub seed: u64,
}

impl RagInstance {
    pub fn needle_len(&self) -> usize {
        (1..=PASSCODE_LEN)
            .map(|i| digit_sentence(&self.target_object, i, '0').len())
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Instance {
    Counting(CountingInstance),
    Sorting(SortingInstance),
    Retrieval(HaystackInstance),
    Rag(RagInstance),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceOptions {
    /// Insert the needle into single-needle haystacks.
    pub needle_present: bool,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions { needle_present: true }
    }
}

const ALPHABET: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

pub fn generate_counting(n: usize, seed: u64) -> CountingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let text: String = (0..n)
        .map(|_| char::from(*ALPHABET.choose(&mut rng).expect("non-empty alphabet")))
        .collect();
    let truth = text.bytes().filter(u8::is_ascii_digit).count() as i64;
    CountingInstance { text, truth, seed }
}

pub fn generate_sorting(n: usize, seed: u64) -> SortingInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n).map(|_| (rng.random::<f64>() * 100.0).round() / 100.0).collect();
    let mut truth = values.clone();
    truth.sort_by(f64::total_cmp);
    SortingInstance { values, truth, seed }
}

/// Sentences joined by single spaces, padded with spaces to `n` bytes.
/// Returns the text and the span of every sentence.
fn assemble(sentences: &[String], n: usize) -> (String, Vec<Range<usize>>) {
    let mut text = String::with_capacity(n);
    let mut spans = Vec::with_capacity(sentences.len());
    for s in sentences {
        if !text.is_empty() {
            text.push(' ');
        }
        spans.push(text.len()..text.len() + s.len());
        text.push_str(s);
    }
    debug_assert!(text.len() <= n);
    text.extend(std::iter::repeat_n(' ', n - text.len()));
    (text, spans)
}

/// Draws distractor sentences until the next one would not fit in `budget`
/// bytes (counting one separator per sentence).
fn fill<R: Rng>(rng: &mut R, budget: usize, mut draw: impl FnMut(&mut R) -> String) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    let mut used = 0;
    loop {
        let s = draw(rng);
        if used + s.len() + 1 > budget {
            return out;
        }
        used += s.len() + 1;
        out.push(s);
    }
}

pub fn generate_haystack(n: usize, seed: u64, options: &InstanceOptions) -> Result<HaystackInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = all_objects();
    let target = objects.choose(&mut rng).expect("non-empty vocabulary").clone();
    let truth = random_passcode(&mut rng);
    let needle = passcode_sentence(&target, &truth);
    if n < needle.len() {
        return Err(Error::invalid(format!(
            "haystack size n = {n} is below one needle ({} characters)",
            needle.len()
        )));
    }
    let confusables: Vec<&String> = objects.iter().filter(|o| **o != target).collect();
    let mut codes: BTreeMap<String, String> = BTreeMap::new();
    let budget = if options.needle_present { n - needle.len() } else { n + 1 };
    let mut sentences = fill(&mut rng, budget, |rng| {
        let object = *confusables.choose(rng).expect("confusables exist");
        let code = codes.entry(object.clone()).or_insert_with(|| random_passcode(rng));
        passcode_sentence(object, code)
    });
    let mut needle_at = None;
    if options.needle_present {
        let at = rng.random_range(0..=sentences.len());
        sentences.insert(at, needle);
        needle_at = Some(at);
    }
    let (text, spans) = assemble(&sentences, n);
    Ok(HaystackInstance {
        text,
        target_object: target,
        truth,
        needle_present: options.needle_present,
        needle_span: needle_at.map(|i| spans[i].clone()),
        seed,
    })
}

pub fn generate_rag(n: usize, seed: u64) -> Result<RagInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let objects = all_objects();
    let target = objects.choose(&mut rng).expect("non-empty vocabulary").clone();
    let truth = random_passcode(&mut rng);
    let needles: Vec<String> = truth
        .chars()
        .enumerate()
        .map(|(i, d)| digit_sentence(&target, i + 1, d))
        .collect();
    let needed: usize = needles.iter().map(|s| s.len() + 1).sum::<usize>() - 1;
    if n < needed {
        return Err(Error::invalid(format!(
            "haystack size n = {n} is below the six needles ({needed} characters)"
        )));
    }
    let confusables: Vec<&String> = objects.iter().filter(|o| **o != target).collect();
    let mut codes: BTreeMap<String, String> = BTreeMap::new();
    let mut sentences: Vec<(String, Option<usize>)> = fill(&mut rng, n - needed, |rng| {
        let object = *confusables.choose(rng).expect("confusables exist");
        let code = codes.entry(object.clone()).or_insert_with(|| random_passcode(rng));
        let pos = rng.random_range(1..=PASSCODE_LEN);
        digit_sentence(object, pos, code.as_bytes()[pos - 1] as char)
    })
    .into_iter()
    .map(|s| (s, None))
    .collect();
    for (i, needle) in needles.into_iter().enumerate() {
        let at = rng.random_range(0..=sentences.len());
        sentences.insert(at, (needle, Some(i)));
    }
    let plain: Vec<String> = sentences.iter().map(|(s, _)| s.clone()).collect();
    let (text, spans) = assemble(&plain, n);
    let mut needle_spans = vec![0..0; PASSCODE_LEN];
    for ((_, tag), span) in sentences.iter().zip(spans) {
        if let Some(i) = tag {
            needle_spans[*i] = span;
        }
    }
    Ok(RagInstance {
        text,
        target_object: target,
        truth,
        needle_spans,
        seed,
    })
}

/// Deterministic in `(task, n, seed, options)`.
pub fn generate_instance(task: TaskKind, n: usize, seed: u64, options: &InstanceOptions) -> Result<Instance> {
    if n == 0 {
        return Err(Error::invalid("instance size n must be >= 1"));
    }
    Ok(match task {
        TaskKind::Counting => Instance::Counting(generate_counting(n, seed)),
        TaskKind::Sorting => Instance::Sorting(generate_sorting(n, seed)),
        TaskKind::Retrieval => Instance::Retrieval(generate_haystack(n, seed, options)?),
        TaskKind::Rag => Instance::Rag(generate_rag(n, seed)?),
    })
}

/// Longest needle sentence over the vocabulary.
pub fn longest_needle(task: TaskKind) -> usize {
    let zeros = "0".repeat(PASSCODE_LEN);
    all_objects()
        .iter()
        .map(|o| match task {
            TaskKind::Rag => digit_sentence(o, PASSCODE_LEN, '0').len(),
            _ => passcode_sentence(o, &zeros).len(),
        })
        .max()
        .unwrap_or(0)
}

/// Smallest `n` for which every instance of `task` can be generated.
pub fn min_size(task: TaskKind) -> usize {
    match task {
        TaskKind::Counting | TaskKind::Sorting => 1,
        TaskKind::Retrieval => longest_needle(task),
        TaskKind::Rag => PASSCODE_LEN * (longest_needle(task) + 1) - 1,
    }
}

fn fmt_span(r: &Range<usize>) -> String {
    format!("{}..{}", r.start, r.end)
}

fn parse_span(s: &str) -> Option<Range<usize>> {
    let (a, b) = s.split_once("..")?;
    Some(a.trim().parse().ok()?..b.trim().parse().ok()?)
}

impl Instance {
    pub fn task(&self) -> TaskKind {
        match self {
            Instance::Counting(_) => TaskKind::Counting,
            Instance::Sorting(_) => TaskKind::Sorting,
            Instance::Retrieval(_) => TaskKind::Retrieval,
            Instance::Rag(_) => TaskKind::Rag,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            Instance::Counting(i) => i.text.len(),
            Instance::Sorting(i) => i.values.len(),
            Instance::Retrieval(i) => i.text.len(),
            Instance::Rag(i) => i.text.len(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Instance::Counting(i) => i.seed,
            Instance::Sorting(i) => i.seed,
            Instance::Retrieval(i) => i.seed,
            Instance::Rag(i) => i.seed,
        }
    }

    /// Header lines, a `---` separator, then the payload on one line.
    pub fn to_file_string(&self) -> String {
        let mut out = format!("{MAGIC}\ntask: {}\nn: {}\nseed: {}\n", self.task(), self.n(), self.seed());
        let payload = match self {
            Instance::Counting(i) => {
                let _ = writeln!(out, "truth: {}", i.truth);
                i.text.clone()
            }
            Instance::Sorting(i) => {
                let _ = writeln!(out, "truth: {}", format_list(&i.truth));
                format_list(&i.values)
            }
            Instance::Retrieval(i) => {
                let span = i.needle_span.as_ref().map_or_else(|| "none".to_string(), fmt_span);
                let _ = write!(
                    out,
                    "truth: {}\ntarget: {}\nneedle_present: {}\nneedle_span: {span}\n",
                    i.truth, i.target_object, i.needle_present
                );
                i.text.clone()
            }
            Instance::Rag(i) => {
                let spans: Vec<String> = i.needle_spans.iter().map(fmt_span).collect();
                let _ = write!(
                    out,
                    "truth: {}\ntarget: {}\nneedle_spans: {}\n",
                    i.truth,
                    i.target_object,
                    spans.join(" ")
                );
                i.text.clone()
            }
        };
        out.push_str("---\n");
        out.push_str(&payload);
        out.push('\n');
        out
    }

    /// Parses [`Instance::to_file_string`] output and re-checks the
    /// instance invariants.
    pub fn parse(s: &str) -> Result<Instance> {
        let bad = |msg: String| Error::MalformedInstance(msg);
        let (head, payload) = s
            .split_once("\n---\n")
            .ok_or_else(|| bad("missing `---` separator".into()))?;
        let payload = payload.strip_suffix('\n').unwrap_or(payload);
        let mut lines = head.lines();
        if lines.next() != Some(MAGIC) {
            return Err(bad(format!("first line must be `{MAGIC}`")));
        }
        let mut fields: BTreeMap<&str, &str> = BTreeMap::new();
        for line in lines {
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| bad(format!("header line `{line}` is not `key: value`")))?;
            fields.insert(k.trim(), v.trim());
        }
        let get = |k: &str| fields.get(k).copied().ok_or_else(|| bad(format!("missing header `{k}`")));
        let num = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|e| bad(format!("header `{k}`: {e}"))) };
        let task: TaskKind = get("task")?.parse().map_err(|_| bad("unknown task".into()))?;
        let n = num("n")? as usize;
        let seed = num("seed")?;
        let truth = get("truth")?;

        let inst = match task {
            TaskKind::Counting => {
                let truth = truth.parse().map_err(|e| bad(format!("truth: {e}")))?;
                let count = payload.bytes().filter(u8::is_ascii_digit).count() as i64;
                if count != truth {
                    return Err(bad(format!("truth {truth} but text has {count} digits")));
                }
                Instance::Counting(CountingInstance {
                    text: payload.to_string(),
                    truth,
                    seed,
                })
            }
            TaskKind::Sorting => {
                let values = parse_list(payload).map_err(bad)?;
                let truth = parse_list(truth).map_err(bad)?;
                let mut sorted = values.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted != truth {
                    return Err(bad("truth is not the sorted payload".into()));
                }
                Instance::Sorting(SortingInstance { values, truth, seed })
            }
            TaskKind::Retrieval => {
                let needle_present = get("needle_present")? == "true";
                let span = get("needle_span")?;
                let needle_span = if span == "none" {
                    None
                } else {
                    Some(parse_span(span).ok_or_else(|| bad(format!("bad span `{span}`")))?)
                };
                let inst = HaystackInstance {
                    text: payload.to_string(),
                    target_object: get("target")?.to_string(),
                    truth: truth.to_string(),
                    needle_present,
                    needle_span,
                    seed,
                };
                let expected = passcode_sentence(&inst.target_object, &inst.truth);
                match &inst.needle_span {
                    Some(r) if inst.text.get(r.clone()) != Some(expected.as_str()) => {
                        return Err(bad("needle span does not hold the needle".into()))
                    }
                    None if needle_present => return Err(bad("needle present without a span".into())),
                    _ => {}
                }
                Instance::Retrieval(inst)
            }
            TaskKind::Rag => {
                let needle_spans = get("needle_spans")?
                    .split_whitespace()
                    .map(|s| parse_span(s).ok_or_else(|| bad(format!("bad span `{s}`"))))
                    .collect::<Result<Vec<_>>>()?;
                if needle_spans.len() != PASSCODE_LEN {
                    return Err(bad(format!("expected {PASSCODE_LEN} needle spans")));
                }
                let inst = RagInstance {
                    text: payload.to_string(),
                    target_object: get("target")?.to_string(),
                    truth: truth.to_string(),
                    needle_spans,
                    seed,
                };
                for (i, (r, d)) in inst.needle_spans.iter().zip(inst.truth.chars()).enumerate() {
                    if inst.text.get(r.clone()) != Some(digit_sentence(&inst.target_object, i + 1, d).as_str()) {
                        return Err(bad(format!("span for digit {} does not hold its needle", i + 1)));
                    }
                }
                Instance::Rag(inst)
            }
        };
        if inst.n() != n {
            return Err(bad(format!("header n = {n} but payload has size {}", inst.n())));
        }
        Ok(inst)
    }
}

/// Objects named in a haystack text, for invariant checks.
pub fn named_objects(text: &str) -> Vec<String> {
    let mut out: Vec<String> = haystack::passcode_sentences(text).into_iter().map(|s| s.object).collect();
    out.extend(haystack::digit_sentences(text).into_iter().map(|s| s.object));
    out
}
