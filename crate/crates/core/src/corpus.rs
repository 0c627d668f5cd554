//! Vocabulary construction and N-gram output-statistics models.
//!
//! Windows are fully interior: a sequence of length `T` contributes the
//! `T - N + 1` spans `x[t-N+1..=t]` for `t` in `N-1..T`. The same convention
//! is used by every cost in [`crate::cost`] and by the saddle objective.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tuple::TupleIndexer;

/// Tolerance used when validating probabilities read from a file.
const LOAD_SUM_TOLERANCE: f64 = 1e-10;

/// Bijection between symbols and ids `0..C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    symbols: Vec<char>,
    index: HashMap<char, usize>,
}

impl Vocabulary {
    pub fn from_symbols(symbols: Vec<char>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut index = HashMap::with_capacity(symbols.len());
        for (id, &s) in symbols.iter().enumerate() {
            if index.insert(s, id).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate vocabulary symbol {s:?}"
                )));
            }
        }
        Ok(Self { symbols, index })
    }

    /// Symbols without names, shown as `0`, `1`, ... Used for synthetic tasks
    /// whose classes have no textual form.
    pub fn numbered(classes: usize) -> Result<Self> {
        let symbols = (0..classes)
            .map(|i| char::from_u32(0xE000 + i as u32).ok_or(Error::TableTooLarge { size: classes as f64 }))
            .collect::<Result<Vec<_>>>()?;
        Self::from_symbols(symbols)
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbols(&self) -> &[char] {
        &self.symbols
    }

    pub fn id(&self, symbol: char) -> Option<usize> {
        self.index.get(&symbol).copied()
    }

    pub fn symbol(&self, id: usize) -> Option<char> {
        self.symbols.get(id).copied()
    }

    pub fn encode(&self, text: &str) -> Result<Vec<usize>> {
        text.chars()
            .map(|c| {
                self.id(c).ok_or_else(|| {
                    Error::InvalidArgument(format!("symbol {c:?} is not in the vocabulary"))
                })
            })
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .map(|&i| self.symbol(i).unwrap_or('\u{FFFD}'))
            .collect()
    }

    pub(crate) fn escaped(&self) -> String {
        let parts: Vec<String> = self.symbols.iter().map(|&c| escape_symbol(c)).collect();
        parts.join(" ")
    }

    pub(crate) fn parse_escaped(line: &str, line_no: usize) -> Result<Self> {
        let symbols = line
            .split(' ')
            .map(|tok| unescape_symbol(tok).ok_or_else(|| Error::parse(line_no, format!("bad symbol {tok:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::from_symbols(symbols).map_err(|e| Error::parse(line_no, e.to_string()))
    }
}

fn escape_symbol(c: char) -> String {
    match c {
        '\\' => "\\\\".into(),
        ' ' => "\\s".into(),
        '\t' => "\\t".into(),
        '\n' => "\\n".into(),
        '\r' => "\\r".into(),
        c => c.to_string(),
    }
}

fn unescape_symbol(tok: &str) -> Option<char> {
    let mut chars = tok.chars();
    let first = chars.next()?;
    let out = if first == '\\' {
        match chars.next()? {
            '\\' => '\\',
            's' => ' ',
            't' => '\t',
            'n' => '\n',
            'r' => '\r',
            _ => return None,
        }
    } else {
        first
    };
    chars.next().is_none().then_some(out)
}

/// Distinct symbols of `text` in first-appearance order.
pub fn build_vocab(text: &str) -> Result<Vocabulary> {
    let mut seen = Vec::new();
    let mut index = HashMap::new();
    for c in text.chars() {
        index.entry(c).or_insert_with(|| {
            seen.push(c);
            seen.len() - 1
        });
    }
    if seen.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(Vocabulary { symbols: seen, index })
}

/// Joint probability table over N-tuples of class ids.
///
/// Only the support (tuples with positive probability) is stored, in
/// ascending lexicographic order; a dense copy is kept when `C^N` is small
/// enough for direct lookup.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    indexer: TupleIndexer,
    vocab: Vocabulary,
    support: Vec<usize>,
    support_ids: Vec<usize>,
    probs: Vec<f64>,
    dense: Option<Vec<f64>>,
}

impl NGramModel {
    /// Builds a model from `(flat index, probability)` pairs. Zero entries are
    /// dropped; the result must be normalized within `tolerance`.
    pub fn from_entries(
        vocab: Vocabulary,
        order: usize,
        mut entries: Vec<(usize, f64)>,
        tolerance: f64,
    ) -> Result<Self> {
        let indexer = TupleIndexer::new(vocab.len(), order)?;
        entries.sort_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::InvalidArgument(format!(
                    "tuple {:?} listed twice",
                    indexer.decode(pair[0].0)
                )));
            }
        }
        let mut support = Vec::with_capacity(entries.len());
        let mut probs = Vec::with_capacity(entries.len());
        for (idx, p) in entries {
            if idx >= indexer.size() {
                return Err(Error::IdOutOfRange { id: idx, classes: indexer.size() });
            }
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidArgument(format!("probability {p} is not in [0,1]")));
            }
            if p > 0.0 {
                support.push(idx);
                probs.push(p);
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > tolerance {
            return Err(Error::Normalization { sum });
        }
        let mut support_ids = vec![0; support.len() * order];
        for (s, &idx) in support.iter().enumerate() {
            indexer.decode_into(idx, &mut support_ids[s * order..(s + 1) * order]);
        }
        let dense = indexer.is_dense().then(|| {
            let mut table = vec![0.0; indexer.size()];
            for (&idx, &p) in support.iter().zip(&probs) {
                table[idx] = p;
            }
            table
        });
        Ok(Self { indexer, vocab, support, support_ids, probs, dense })
    }

    pub fn order(&self) -> usize {
        self.indexer.order()
    }

    pub fn classes(&self) -> usize {
        self.indexer.classes()
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn indexer(&self) -> &TupleIndexer {
        &self.indexer
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    /// Flat indices of the supported tuples, ascending.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    /// Ids of the `s`-th supported tuple.
    pub fn support_tuple(&self, s: usize) -> &[usize] {
        let n = self.order();
        &self.support_ids[s * n..(s + 1) * n]
    }

    /// Ids of all supported tuples, flattened `support_len() x order`.
    pub fn support_ids(&self) -> &[usize] {
        &self.support_ids
    }

    /// Probabilities aligned with [`Self::support`].
    pub fn support_probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_index(&self, index: usize) -> f64 {
        match &self.dense {
            Some(table) => table.get(index).copied().unwrap_or(0.0),
            None => self
                .support
                .binary_search(&index)
                .map(|s| self.probs[s])
                .unwrap_or(0.0),
        }
    }

    pub fn prob(&self, ids: &[usize]) -> f64 {
        if ids.len() != self.order() || ids.iter().any(|&i| i >= self.classes()) {
            return 0.0;
        }
        self.prob_index(self.indexer.index(ids))
    }

    /// Probability mass of the (N-1)-gram `context` as a prefix.
    pub fn context_marginal(&self, context: &[usize]) -> f64 {
        let c = self.classes();
        let base = context.iter().fold(0, |acc, &i| acc * c + i) * c;
        (0..c).map(|j| self.prob_index(base + j)).sum()
    }

    /// Shannon entropy in nats.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|&p| p * p.ln()).sum::<f64>()
    }

    /// Class marginal of the last tuple position.
    pub fn unigram(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.classes()];
        let n = self.order();
        for (s, &p) in self.probs.iter().enumerate() {
            out[self.support_ids[s * n + n - 1]] += p;
        }
        out
    }
}

/// Estimates an add-`k` smoothed N-gram model from interior windows.
pub fn estimate_ngram(
    sequences: &[Vec<usize>],
    vocab: &Vocabulary,
    order: usize,
    k: f64,
) -> Result<NGramModel> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be >= 1".into()));
    }
    if !(k >= 0.0) || !k.is_finite() {
        return Err(Error::InvalidSmoothing(k));
    }
    let indexer = TupleIndexer::new(vocab.len(), order)?;
    let classes = vocab.len();
    let mut counts: HashMap<usize, u64> = HashMap::new();
    let mut windows: u64 = 0;
    for seq in sequences {
        if let Some(&bad) = seq.iter().find(|&&i| i >= classes) {
            return Err(Error::IdOutOfRange { id: bad, classes });
        }
        if seq.len() < order {
            continue;
        }
        for w in seq.windows(order) {
            *counts.entry(indexer.index(w)).or_default() += 1;
            windows += 1;
        }
    }
    if windows == 0 {
        return Err(Error::NoWindows { order });
    }
    let entries: Vec<(usize, f64)> = if k == 0.0 {
        let w = windows as f64;
        counts.into_iter().map(|(i, n)| (i, n as f64 / w)).collect()
    } else {
        if !indexer.is_dense() {
            return Err(Error::TableTooLarge { size: indexer.size() as f64 });
        }
        let denom = windows as f64 + k * indexer.size() as f64;
        (0..indexer.size())
            .map(|i| (i, (counts.get(&i).copied().unwrap_or(0) as f64 + k) / denom))
            .collect()
    };
    NGramModel::from_entries(vocab.clone(), order, entries, 1e-12)
}

/// Chain-rule conditional `p(next | context)`.
pub fn conditional(model: &NGramModel, context: &[usize], next: usize) -> Result<f64> {
    let n = model.order();
    if context.len() + 1 != n {
        return Err(Error::DimensionMismatch { expected: n - 1, found: context.len() });
    }
    let classes = model.classes();
    if let Some(&bad) = context.iter().chain(std::iter::once(&next)).find(|&&i| i >= classes) {
        return Err(Error::IdOutOfRange { id: bad, classes });
    }
    let marginal = model.context_marginal(context);
    if marginal <= 0.0 {
        return Err(Error::UnseenContext { context: context.to_vec() });
    }
    let mut full = context.to_vec();
    full.push(next);
    Ok(model.prob(&full) / marginal)
}

/// Writes the model in the line-oriented LM text format.
pub fn save_ngram(model: &NGramModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_ngram(model)).map_err(|e| Error::io(path, e))
}

pub fn format_ngram(model: &NGramModel) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "ngram {} {}", model.order(), model.classes());
    let _ = writeln!(out, "{}", model.vocab.escaped());
    for (s, &p) in model.probs.iter().enumerate() {
        let ids: Vec<String> = model.support_tuple(s).iter().map(|i| i.to_string()).collect();
        let _ = writeln!(out, "{}\t{:.16e}", ids.join(" "), p);
    }
    out
}

pub fn load_ngram(path: impl AsRef<Path>) -> Result<NGramModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ngram(&text)
}

pub fn parse_ngram(text: &str) -> Result<NGramModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (order, classes) = match fields.as_slice() {
        ["ngram", n, c] => (
            n.parse::<usize>().map_err(|_| Error::parse(1, "bad order"))?,
            c.parse::<usize>().map_err(|_| Error::parse(1, "bad class count"))?,
        ),
        _ => return Err(Error::parse(1, "expected `ngram <N> <C>`")),
    };
    if order == 0 {
        return Err(Error::parse(1, "order must be >= 1"));
    }
    let (_, vocab_line) = lines.next().ok_or_else(|| Error::parse(2, "missing vocabulary"))?;
    let vocab = Vocabulary::parse_escaped(vocab_line, 2)?;
    if vocab.len() != classes {
        return Err(Error::parse(2, format!("{} symbols for {classes} classes", vocab.len())));
    }
    let indexer = TupleIndexer::new(classes, order)?;
    let mut entries = Vec::new();
    let mut ids = vec![0usize; order];
    for (line_no, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (tuple, prob) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(line_no, "expected `<ids>\\t<probability>`"))?;
        let mut count = 0;
        for (slot, tok) in tuple.split(' ').enumerate() {
            if slot >= order {
                return Err(Error::parse(line_no, format!("more than {order} ids")));
            }
            let id: usize = tok.parse().map_err(|_| Error::parse(line_no, format!("bad id {tok:?}")))?;
            if id >= classes {
                return Err(Error::parse(line_no, format!("id {id} >= {classes}")));
            }
            ids[slot] = id;
            count += 1;
        }
        if count != order {
            return Err(Error::parse(line_no, format!("expected {order} ids, found {count}")));
        }
        let p: f64 = prob
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad probability {prob:?}")))?;
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::parse(line_no, format!("probability {p} outside (0,1]")));
        }
        entries.push((indexer.index(&ids), p));
    }
    NGramModel::from_entries(vocab, order, entries, LOAD_SUM_TOLERANCE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn abab() -> (Vocabulary, Vec<Vec<usize>>) {
        let vocab = build_vocab("abab").unwrap();
        let ids = vocab.encode("abab").unwrap();
        (vocab, vec![ids])
    }

    #[test]
    fn vocab_first_appearance_order() {
        assert_eq!(build_vocab("aba").unwrap().symbols(), &['a', 'b']);
        assert_eq!(build_vocab("a").unwrap().len(), 1);
        assert_eq!(build_vocab("zyx").unwrap().symbols(), &['z', 'y', 'x']);
        assert!(matches!(build_vocab(""), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn vocab_ids_are_inverse() {
        let v = build_vocab("hello world").unwrap();
        for id in 0..v.len() {
            assert_eq!(v.id(v.symbol(id).unwrap()), Some(id));
        }
        assert!(Vocabulary::from_symbols(vec!['a', 'a']).is_err());
    }

    #[test]
    fn bigram_from_abab() {
        let (vocab, seqs) = abab();
        let m = estimate_ngram(&seqs, &vocab, 2, 0.0).unwrap();
        assert_eq!(m.prob(&[0, 1]), 2.0 / 3.0);
        assert_eq!(m.prob(&[1, 0]), 1.0 / 3.0);
        assert_eq!(m.prob(&[0, 0]), 0.0);
        assert_eq!(m.prob(&[1, 1]), 0.0);
        assert_eq!(m.support_len(), 2);
    }

    #[test]
    fn unigram_single_symbol() {
        let vocab = build_vocab("aaa").unwrap();
        let m = estimate_ngram(&[vocab.encode("aaa").unwrap()], &vocab, 1, 0.0).unwrap();
        assert_eq!(m.prob(&[0]), 1.0);
    }

    #[test]
    fn add_one_smoothing() {
        let vocab = Vocabulary::from_symbols(vec!['a', 'b']).unwrap();
        let m = estimate_ngram(&[vec![0, 0]], &vocab, 2, 1.0).unwrap();
        assert!((m.prob(&[0, 0]) - 2.0 / 5.0).abs() < 1e-15);
        for t in [[0, 1], [1, 0], [1, 1]] {
            assert!((m.prob(&t) - 1.0 / 5.0).abs() < 1e-15);
        }
    }

    #[test]
    fn estimation_errors() {
        let vocab = Vocabulary::from_symbols(vec!['a', 'b']).unwrap();
        assert!(matches!(
            estimate_ngram(&[vec![0]], &vocab, 2, 0.0),
            Err(Error::NoWindows { order: 2 })
        ));
        assert!(matches!(
            estimate_ngram(&[vec![0, 1]], &vocab, 2, -0.5),
            Err(Error::InvalidSmoothing(_))
        ));
    }

    #[test]
    fn short_sequences_are_skipped() {
        let vocab = Vocabulary::from_symbols(vec!['a', 'b']).unwrap();
        let m = estimate_ngram(&[vec![1], vec![0, 1, 1]], &vocab, 2, 0.0).unwrap();
        assert_eq!(m.prob(&[0, 1]), 0.5);
        assert_eq!(m.prob(&[1, 1]), 0.5);
    }

    #[test]
    fn conditionals() {
        let (vocab, seqs) = abab();
        let m = estimate_ngram(&seqs, &vocab, 2, 0.0).unwrap();
        assert_eq!(conditional(&m, &[0], 1).unwrap(), 1.0);
        assert_eq!(conditional(&m, &[0], 0).unwrap(), 0.0);

        let uni = estimate_ngram(&seqs, &vocab, 1, 0.0).unwrap();
        assert_eq!(conditional(&uni, &[], 0).unwrap(), uni.prob(&[0]));

        let v3 = Vocabulary::from_symbols(vec!['x', 'y', 'z']).unwrap();
        let uniform = NGramModel::from_entries(v3, 2, (0..9).map(|i| (i, 1.0 / 9.0)).collect(), 1e-12).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                assert!((conditional(&uniform, &[a], b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn unseen_context_is_an_error() {
        let vocab = Vocabulary::from_symbols(vec!['a', 'b', 'c']).unwrap();
        let m = estimate_ngram(&[vec![0, 1, 0]], &vocab, 2, 0.0).unwrap();
        assert!(matches!(conditional(&m, &[2], 0), Err(Error::UnseenContext { .. })));
    }

    #[test]
    fn file_round_trip_is_bit_exact() {
        let vocab = build_vocab("the cat,\tsat.\\").unwrap();
        let ids = vocab.encode("the cat,\tsat.\\ the cat sat").unwrap();
        let m = estimate_ngram(&[ids], &vocab, 2, 0.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lm.txt");
        save_ngram(&m, &path).unwrap();
        let back = load_ngram(&path).unwrap();
        assert_eq!(back, m);
        for (a, b) in back.support_probs().iter().zip(m.support_probs()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn load_rejects_bad_files() {
        let bad_sum = "ngram 1 2\na b\n0\t0.5\n1\t0.4\n";
        assert!(matches!(parse_ngram(bad_sum), Err(Error::Normalization { .. })));
        let bad_id = "ngram 1 2\na b\n0\t0.5\n2\t0.5\n";
        assert!(matches!(parse_ngram(bad_id), Err(Error::Parse { line: 4, .. })));
        let garbage = "ngram 2 2\na b\n0 1 0.5\n";
        assert!(matches!(parse_ngram(garbage), Err(Error::Parse { line: 3, .. })));
        assert!(matches!(parse_ngram("lm 1 2\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn fused_corpora_average_by_window_count() {
        let vocab = Vocabulary::from_symbols(vec!['a', 'b', 'c']).unwrap();
        let a = vec![vec![0, 1, 2, 0, 1]];
        let b = vec![vec![2, 2, 1], vec![0, 0]];
        let ma = estimate_ngram(&a, &vocab, 2, 0.0).unwrap();
        let mb = estimate_ngram(&b, &vocab, 2, 0.0).unwrap();
        let fused: Vec<Vec<usize>> = a.iter().chain(&b).cloned().collect();
        let mf = estimate_ngram(&fused, &vocab, 2, 0.0).unwrap();
        let (wa, wb) = (4.0, 3.0);
        for i in 0..9 {
            let expect = (wa * ma.prob_index(i) + wb * mb.prob_index(i)) / (wa + wb);
            assert!((mf.prob_index(i) - expect).abs() < 1e-15);
        }
    }

    proptest! {
        #[test]
        fn estimates_are_normalized(
            seqs in prop::collection::vec(prop::collection::vec(0usize..4, 0..30), 1..6),
            order in 1usize..4,
            k in prop_oneof![Just(0.0), 0.0f64..3.0],
        ) {
            let vocab = Vocabulary::from_symbols(vec!['a', 'b', 'c', 'd']).unwrap();
            match estimate_ngram(&seqs, &vocab, order, k) {
                Ok(m) => {
                    let total: f64 = (0..m.indexer().size()).map(|i| m.prob_index(i)).sum();
                    prop_assert!((total - 1.0).abs() < 1e-12);
                    prop_assert!(m.support_probs().iter().all(|&p| p > 0.0));
                }
                Err(Error::NoWindows { .. }) => {
                    prop_assert!(seqs.iter().all(|s| s.len() < order));
                }
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }

        #[test]
        fn unsmoothed_joint_is_window_frequency(
            seq in prop::collection::vec(0usize..3, 3..40),
        ) {
            let vocab = Vocabulary::from_symbols(vec!['a', 'b', 'c']).unwrap();
            let m = estimate_ngram(std::slice::from_ref(&seq), &vocab, 2, 0.0).unwrap();
            let w = seq.len() - 1;
            for i in 0..9 {
                let count = seq.windows(2).filter(|win| win[0] * 3 + win[1] == i).count();
                // count / w is the correctly rounded quotient, as is the estimate.
                prop_assert_eq!(m.prob_index(i), count as f64 / w as f64);
            }
        }
    }
}
