//! Vocabulary and sentence formats shared by haystack generators, prompts and
//! the mock backend.

use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;

pub const PASSCODE_LEN: usize = 6;

pub const COLORS: [&str; 12] = [
    "red", "orange", "yellow", "green", "blue", "purple", "pink", "brown", "black", "white", "gray", "silver",
];

pub const NOUNS: [&str; 8] = ["door", "lock", "box", "safe", "gate", "cabinet", "locker", "vault"];

/// Every colored object, color-major.
pub fn all_objects() -> Vec<String> {
    COLORS
        .iter()
        .flat_map(|c| NOUNS.iter().map(move |n| format!("{c} {n}")))
        .collect()
}

pub fn random_passcode<R: Rng + ?Sized>(rng: &mut R) -> String {
    (0..PASSCODE_LEN)
        .map(|_| char::from(b'0' + rng.random_range(0..10u8)))
        .collect()
}

pub fn passcode_sentence(object: &str, passcode: &str) -> String {
    format!("The passcode to the {object} is {passcode}.")
}

/// `position` is 1-based.
pub fn digit_sentence(object: &str, position: usize, digit: char) -> String {
    format!("The {position}-th digit of the passcode to the {object} is {digit}.")
}

pub fn question(object: &str) -> String {
    format!("What is the passcode to the {object}?")
}

pub fn rag_question(object: &str) -> String {
    format!("What is the {PASSCODE_LEN}-digit passcode to the {object}?")
}

static QUESTION_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"passcode to the ([a-z]+ [a-z]+)\?").expect("valid regex"));
static PASSCODE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"The passcode to the ([a-z]+ [a-z]+) is (\d{6})\.").expect("valid regex"));
static DIGIT_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"The (\d+)-th digit of the passcode to the ([a-z]+ [a-z]+) is (\d)\.").expect("valid regex")
});

/// Object named by a question built with [`question`] or [`rag_question`].
pub fn target_from_question(q: &str) -> Option<&str> {
    QUESTION_RE.captures(q).and_then(|c| c.get(1)).map(|m| m.as_str())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PasscodeSentence {
    pub object: String,
    pub passcode: String,
}

/// Complete passcode sentences in `text`; sentences cut by a chunk boundary
/// are not matched.
pub fn passcode_sentences(text: &str) -> Vec<PasscodeSentence> {
    PASSCODE_RE
        .captures_iter(text)
        .map(|c| PasscodeSentence {
            object: c[1].to_string(),
            passcode: c[2].to_string(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSentence {
    pub object: String,
    pub position: usize,
    pub digit: char,
    pub sentence: String,
}

pub fn digit_sentences(text: &str) -> Vec<DigitSentence> {
    DIGIT_RE
        .captures_iter(text)
        .filter_map(|c| {
            Some(DigitSentence {
                position: c[1].parse().ok()?,
                object: c[2].to_string(),
                digit: c[3].chars().next()?,
                sentence: c[0].to_string(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn vocabulary_size() {
        let objects = all_objects();
        assert_eq!(objects.len(), 96);
        let mut dedup = objects.clone();
        dedup.sort();
        dedup.dedup();
        assert_eq!(dedup.len(), 96);
    }

    #[test]
    fn sentences_round_trip() {
        let s = passcode_sentence("red door", "012345");
        assert_eq!(s, "The passcode to the red door is 012345.");
        assert_eq!(
            passcode_sentences(&format!("xx {s} yy")),
            vec![PasscodeSentence { object: "red door".into(), passcode: "012345".into() }]
        );
        // a cut sentence is not a sentence
        assert!(passcode_sentences(&s[..s.len() - 1]).is_empty());
        assert!(passcode_sentences(&s[1..]).is_empty());

        let d = digit_sentence("gray vault", 3, '9');
        let parsed = digit_sentences(&d);
        assert_eq!(parsed.len(), 1);
        assert_eq!((parsed[0].position, parsed[0].digit, parsed[0].sentence.as_str()), (3, '9', d.as_str()));

        assert_eq!(target_from_question(&question("pink safe")), Some("pink safe"));
        assert_eq!(target_from_question(&rag_question("pink safe")), Some("pink safe"));
        assert_eq!(target_from_question("hello"), None);
    }

    #[test]
    fn passcodes_are_six_digits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let p = random_passcode(&mut rng);
            assert_eq!(p.len(), PASSCODE_LEN);
            assert!(p.bytes().all(|b| b.is_ascii_digit()));
        }
    }
}
