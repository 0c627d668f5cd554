//! Pseudo-English text source.
//!
//! Produces lowercase sentence segments over a 29-symbol alphabet (letters,
//! space, comma, period) by drawing words from a fixed lexicon with Zipf
//! weights. Character N-gram statistics inside words are those of real
//! English words; word order is unigram. A second "register" reweights the
//! same lexicon so that a disjoint corpus with shifted statistics is
//! available for out-of-domain priors.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::rng::{stream, Stream};

pub const ALPHABET: &str = "abcdefghijklmnopqrstuvwxyz ,.";

/// Roughly in descending frequency order.
const LEXICON: &[&str] = &[
    "the", "of", "and", "to", "a", "in", "is", "that", "for", "it", "as", "was", "with", "be", "by",
    "on", "not", "he", "this", "are", "or", "his", "from", "at", "which", "but", "have", "an",
    "had", "they", "you", "were", "their", "one", "all", "we", "can", "her", "has", "there",
    "been", "if", "more", "when", "will", "would", "who", "so", "no", "she", "other", "its",
    "may", "these", "what", "them", "than", "some", "him", "time", "into", "only", "do", "two",
    "also", "could", "new", "first", "like", "then", "made", "over", "such", "after", "many",
    "people", "must", "any", "through", "each", "most", "years", "before", "should", "where",
    "much", "way", "well", "between", "down", "those", "being", "because", "did", "just",
    "work", "same", "under", "while", "great", "state", "never", "world", "life", "still",
    "own", "here", "both", "general", "end", "found", "against", "part", "might", "last",
    "place", "small", "every", "without", "year", "system", "high", "good", "three", "number",
    "water", "long", "public", "however", "during", "day", "since", "right", "house", "country",
    "how", "given", "present", "possible", "around", "large", "often", "little", "order",
    "second", "left", "point", "form", "group", "case", "come", "within", "known", "school",
    "early", "problem", "light", "several", "family", "second", "next", "thought", "political",
    "night", "almost", "local", "power", "company", "question", "quite", "quality", "major",
    "subject", "project", "example", "experience", "explain", "six", "box", "tax", "size",
    "zero", "realize", "organize", "zone", "amazing", "lazy", "quick", "equal", "require",
    "queen", "join", "enjoy", "job", "judge", "object", "village", "voice", "value", "view",
    "very", "give", "live", "above", "even", "every", "seven", "move", "love", "above", "keep",
    "know", "make", "back", "look", "take", "think", "week", "market", "speak", "kind", "book",
    "black", "king", "park", "walk", "talk", "ask", "sky", "why", "yet", "young", "yellow",
    "early", "money", "study", "body", "city", "story", "party", "away", "play", "today",
    "father", "mother", "brother", "whether", "rather", "together", "church", "change", "much",
    "which", "child", "each", "reach", "speech", "teacher", "human", "woman", "women", "men",
    "government", "development", "information", "nation", "education", "position", "action",
    "section", "condition", "question", "situation", "interest", "history", "science",
    "service", "office", "office", "price", "space", "face", "voice", "notice", "evidence",
    "difference", "help", "simple", "people", "table", "able", "possible", "trouble", "field",
    "friend", "ground", "sound", "round", "found", "around", "south", "north", "mouth", "truth",
    "strength", "length", "month", "health", "earth", "death", "breath", "both", "with",
    "answer", "water", "river", "paper", "letter", "matter", "never", "power", "hour", "four",
    "our", "your", "door", "floor", "poor", "far", "car", "war", "star", "hard", "yard",
];

/// Word-weighting scheme over the shared lexicon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Register {
    /// Zipf weights in lexicon order.
    Standard,
    /// Zipf weights multiplied by log-normal noise drawn from the seed.
    Shifted { seed: u64, spread: f64 },
}

#[derive(Debug, Clone)]
pub struct PseudoEnglish {
    words: WeightedIndex<f64>,
    min_segment: usize,
}

impl PseudoEnglish {
    pub fn new(register: Register) -> Self {
        let mut weights: Vec<f64> = (0..LEXICON.len()).map(|r| 1.0 / (r as f64 + 2.7)).collect();
        if let Register::Shifted { seed, spread } = register {
            let mut rng = stream(seed, Stream::TextLexicon);
            for w in weights.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *w *= (spread * z).exp();
            }
        }
        Self {
            words: WeightedIndex::new(weights).expect("lexicon weights are positive"),
            min_segment: 100,
        }
    }

    /// Segments are at least this many symbols long.
    pub fn with_min_segment(mut self, len: usize) -> Self {
        self.min_segment = len.max(1);
        self
    }

    pub fn vocabulary() -> Vocabulary {
        Vocabulary::from_symbols(ALPHABET.chars().collect()).expect("alphabet has distinct symbols")
    }

    fn sentence<R: Rng>(&self, rng: &mut R, out: &mut String) {
        let len = rng.random_range(5..=16);
        for i in 0..len {
            if i > 0 {
                if rng.random_bool(0.08) {
                    out.push(',');
                }
                out.push(' ');
            }
            out.push_str(LEXICON[self.words.sample(rng)]);
        }
        out.push('.');
    }

    /// Sentence segments totalling at least `total_symbols` symbols.
    pub fn segments(&self, total_symbols: usize, seed: u64) -> Vec<String> {
        let mut rng = stream(seed, Stream::TextSampler);
        let mut out = Vec::new();
        let mut total = 0;
        while total < total_symbols {
            let mut seg = String::new();
            while seg.len() < self.min_segment {
                if !seg.is_empty() {
                    seg.push(' ');
                }
                self.sentence(&mut rng, &mut seg);
            }
            total += seg.len();
            out.push(seg);
        }
        out
    }

    /// Segments encoded against [`Self::vocabulary`].
    pub fn segment_ids(&self, total_symbols: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
        let vocab = Self::vocabulary();
        self.segments(total_symbols, seed)
            .iter()
            .map(|s| vocab.encode(s))
            .collect()
    }
}

/// Lowercases `text` and maps it onto [`ALPHABET`]. Symbols outside the
/// alphabet become spaces; runs of spaces collapse to one.
pub fn normalize_text(text: &str) -> Result<String> {
    let mut out = String::with_capacity(text.len());
    for c in text.chars().flat_map(char::to_lowercase) {
        let mapped = match c {
            'a'..='z' | ',' | '.' => c,
            _ => ' ',
        };
        if mapped == ' ' && (out.is_empty() || out.ends_with(' ')) {
            continue;
        }
        out.push(mapped);
    }
    while out.ends_with(' ') {
        out.pop();
    }
    if out.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lexicon_covers_alphabet() {
        let text = PseudoEnglish::new(Register::Standard).segments(60_000, 1).concat();
        for c in ALPHABET.chars() {
            assert!(text.contains(c), "missing {c:?}");
        }
        for w in LEXICON {
            assert!(w.chars().all(|c| c.is_ascii_lowercase()));
        }
    }

    #[test]
    fn segments_are_deterministic_and_long_enough() {
        let gen = PseudoEnglish::new(Register::Standard);
        let a = gen.segments(5_000, 3);
        assert_eq!(a, gen.segments(5_000, 3));
        assert_ne!(a, gen.segments(5_000, 4));
        assert!(a.iter().all(|s| s.len() >= 100 && s.ends_with('.')));
        assert!(a.iter().map(String::len).sum::<usize>() >= 5_000);
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_text("Hello,  World!\n42 Times.").unwrap(), "hello, world times.");
        assert!(normalize_text("123 !!").is_err());
    }
}
