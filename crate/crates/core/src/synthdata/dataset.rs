use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// A length-N span of one sequence: positions `start..start + N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Window {
    pub seq: u32,
    pub start: u32,
}

/// Sequences of `dim`-dimensional feature vectors with optional labels.
///
/// Labels, when present, are only for evaluation. Trainers that must not see
/// them take the dataset through [`SequenceDataset::without_labels`].
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    dim: usize,
    classes: usize,
    /// One flattened `T_n x dim` buffer per sequence.
    features: Vec<Vec<f64>>,
    labels: Option<Vec<Vec<usize>>>,
}

impl SequenceDataset {
    pub fn new(
        dim: usize,
        classes: usize,
        features: Vec<Vec<f64>>,
        labels: Option<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        if dim == 0 || classes == 0 {
            return Err(Error::InvalidArgument("dataset needs dim >= 1 and classes >= 1".into()));
        }
        for seq in &features {
            if seq.len() % dim != 0 {
                return Err(Error::DimensionMismatch { expected: dim, found: seq.len() % dim });
            }
        }
        if let Some(labels) = &labels {
            if labels.len() != features.len() {
                return Err(Error::DimensionMismatch { expected: features.len(), found: labels.len() });
            }
            for (seq, lab) in features.iter().zip(labels) {
                if lab.len() * dim != seq.len() {
                    return Err(Error::DimensionMismatch { expected: seq.len() / dim, found: lab.len() });
                }
                if let Some(&bad) = lab.iter().find(|&&y| y >= classes) {
                    return Err(Error::IdOutOfRange { id: bad, classes });
                }
            }
        }
        Ok(Self { dim, classes, features, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    /// Number of sequences.
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn seq_len(&self, n: usize) -> usize {
        self.features[n].len() / self.dim
    }

    pub fn total_positions(&self) -> usize {
        self.features.iter().map(|f| f.len() / self.dim).sum()
    }

    pub fn sequence(&self, n: usize) -> &[f64] {
        &self.features[n]
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn x(&self, n: usize, t: usize) -> &[f64] {
        &self.features[n][t * self.dim..(t + 1) * self.dim]
    }

    pub fn labels(&self) -> Option<&[Vec<usize>]> {
        self.labels.as_deref()
    }

    pub fn has_labels(&self) -> bool {
        self.labels.is_some()
    }

    pub fn without_labels(&self) -> Self {
        Self { labels: None, ..self.clone() }
    }

    pub fn into_parts(self) -> (Vec<Vec<f64>>, Option<Vec<Vec<usize>>>) {
        (self.features, self.labels)
    }

    /// `T = Σ_n max(T_n - N + 1, 0)`.
    pub fn window_count(&self, order: usize) -> usize {
        (0..self.len())
            .map(|n| (self.seq_len(n) + 1).saturating_sub(order))
            .sum()
    }

    /// All interior windows, sequence-major.
    pub fn windows(&self, order: usize) -> Vec<Window> {
        let mut out = Vec::with_capacity(self.window_count(order));
        for n in 0..self.len() {
            let count = (self.seq_len(n) + 1).saturating_sub(order);
            out.extend((0..count).map(|s| Window { seq: n as u32, start: s as u32 }));
        }
        out
    }

    /// Sub-dataset of the given sequences, in the given order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            classes: self.classes,
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: self
                .labels
                .as_ref()
                .map(|l| indices.iter().map(|&i| l[i].clone()).collect()),
        }
    }
}

pub fn format_dataset(data: &SequenceDataset) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "seqdata {} {} {} {}",
        data.len(),
        data.dim,
        data.classes,
        u8::from(data.has_labels())
    );
    for n in 0..data.len() {
        let _ = writeln!(out, "len {}", data.seq_len(n));
        for x in data.sequence(n).chunks_exact(data.dim) {
            let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(","));
        }
        if let Some(labels) = &data.labels {
            let row: Vec<String> = labels[n].iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
    }
    out
}

pub fn parse_dataset(text: &str) -> Result<SequenceDataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(0, format!("unexpected end of file, expected {what}")))
    };
    let (_, header) = next("header")?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let parse_usize = |s: &str, what: &str| s.parse::<usize>().map_err(|_| Error::parse(1, format!("bad {what}")));
    let (m, dim, classes, has_labels) = match fields.as_slice() {
        ["seqdata", m, d, c, l] => (
            parse_usize(m, "sequence count")?,
            parse_usize(d, "dimension")?,
            parse_usize(c, "class count")?,
            match *l {
                "0" => false,
                "1" => true,
                _ => return Err(Error::parse(1, "has_labels must be 0 or 1")),
            },
        ),
        _ => return Err(Error::parse(1, "expected `seqdata <M> <d> <C> <has_labels>`")),
    };
    let mut features = Vec::with_capacity(m);
    let mut labels = has_labels.then(|| Vec::with_capacity(m));
    for _ in 0..m {
        let (line_no, len_line) = next("`len <T>`")?;
        let len = len_line
            .strip_prefix("len ")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| Error::parse(line_no, "expected `len <T>`"))?;
        let mut seq = Vec::with_capacity(len * dim);
        for _ in 0..len {
            let (line_no, row) = next("feature row")?;
            let before = seq.len();
            for tok in row.split(',') {
                let v: f64 = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(line_no, format!("bad value {tok:?}")))?;
                if !v.is_finite() {
                    return Err(Error::parse(line_no, "non-finite feature"));
                }
                seq.push(v);
            }
            if seq.len() - before != dim {
                return Err(Error::parse(line_no, format!("expected {dim} values")));
            }
        }
        features.push(seq);
        if let Some(labels) = labels.as_mut() {
            let (line_no, row) = next("label row")?;
            let ids = if len == 0 {
                Vec::new()
            } else {
                row.split(' ')
                    .map(|tok| {
                        let id: usize = tok
                            .parse()
                            .map_err(|_| Error::parse(line_no, format!("bad label {tok:?}")))?;
                        if id >= classes {
                            return Err(Error::parse(line_no, format!("label {id} >= {classes}")));
                        }
                        Ok(id)
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            if ids.len() != len {
                return Err(Error::parse(line_no, format!("expected {len} labels")));
            }
            labels.push(ids);
        }
    }
    SequenceDataset::new(dim, classes, features, labels)
}

pub fn save_dataset(data: &SequenceDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_dataset(data)).map_err(|e| Error::io(path, e))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SequenceDataset {
        SequenceDataset::new(
            2,
            3,
            vec![vec![0.5, -1.0, 1e-17, 3.25, 2.0, 0.1], vec![7.0, 8.0]],
            Some(vec![vec![0, 2, 1], vec![2]]),
        )
        .unwrap()
    }

    #[test]
    fn window_counting() {
        let d = tiny();
        assert_eq!(d.window_count(1), 4);
        assert_eq!(d.window_count(2), 2);
        assert_eq!(d.window_count(3), 1);
        assert_eq!(d.window_count(4), 0);
        assert_eq!(d.windows(2), vec![Window { seq: 0, start: 0 }, Window { seq: 0, start: 1 }]);
    }

    #[test]
    fn file_round_trip() {
        let d = tiny();
        assert_eq!(parse_dataset(&format_dataset(&d)).unwrap(), d);
        let u = d.without_labels();
        let text = format_dataset(&u);
        assert!(text.starts_with("seqdata 2 2 3 0\n"));
        assert_eq!(parse_dataset(&text).unwrap(), u);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let bad = "seqdata 1 2 3 1\nlen 1\n0.5,x\n0\n";
        assert!(matches!(parse_dataset(bad), Err(Error::Parse { line: 3, .. })));
        let bad_label = "seqdata 1 2 3 1\nlen 1\n0.5,1\n3\n";
        assert!(matches!(parse_dataset(bad_label), Err(Error::Parse { line: 4, .. })));
    }

    #[test]
    fn validation() {
        assert!(SequenceDataset::new(2, 3, vec![vec![1.0; 3]], None).is_err());
        assert!(SequenceDataset::new(2, 3, vec![vec![1.0; 4]], Some(vec![vec![0]])).is_err());
        assert!(SequenceDataset::new(2, 3, vec![vec![1.0; 2]], Some(vec![vec![3]])).is_err());
    }
}
