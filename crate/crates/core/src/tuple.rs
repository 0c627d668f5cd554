//! Flat lexicographic indexing of N-tuples over `0..classes`.

use crate::error::{Error, Result};

/// Largest table that is stored densely.
pub const DENSE_LIMIT: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TupleIndexer {
    classes: usize,
    order: usize,
    size: usize,
}

impl TupleIndexer {
    pub fn new(classes: usize, order: usize) -> Result<Self> {
        if classes == 0 || order == 0 {
            return Err(Error::InvalidArgument(format!(
                "tuple space needs classes >= 1 and order >= 1, got {classes} and {order}"
            )));
        }
        let size = u32::try_from(order)
            .ok()
            .and_then(|o| classes.checked_pow(o))
            .ok_or(Error::TableTooLarge {
                size: (classes as f64).powi(order as i32),
            })?;
        Ok(Self { classes, order, size })
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of tuples, `classes^order`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn is_dense(&self) -> bool {
        self.size <= DENSE_LIMIT
    }

    pub fn index(&self, ids: &[usize]) -> usize {
        debug_assert_eq!(ids.len(), self.order);
        ids.iter().fold(0, |acc, &i| acc * self.classes + i)
    }

    pub fn decode_into(&self, mut index: usize, out: &mut [usize]) {
        debug_assert_eq!(out.len(), self.order);
        for slot in out.iter_mut().rev() {
            *slot = index % self.classes;
            index /= self.classes;
        }
    }

    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.order];
        self.decode_into(index, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_lexicographic() {
        let ix = TupleIndexer::new(3, 2).unwrap();
        assert_eq!(ix.size(), 9);
        assert_eq!(ix.index(&[0, 0]), 0);
        assert_eq!(ix.index(&[0, 2]), 2);
        assert_eq!(ix.index(&[1, 0]), 3);
        assert_eq!(ix.index(&[2, 2]), 8);
        for i in 0..9 {
            assert_eq!(ix.index(&ix.decode(i)), i);
        }
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            TupleIndexer::new(1000, 40),
            Err(Error::TableTooLarge { .. })
        ));
    }
}
