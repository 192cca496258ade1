use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary column selection: the diagonal of the selection matrix Δ.
///
/// Serialized compactly as `{"q": Q, "indices": [...]}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "MaskRepr", try_from = "MaskRepr")]
pub struct SelectionMask {
    bits: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct MaskRepr {
    q: usize,
    indices: Vec<usize>,
}

impl From<SelectionMask> for MaskRepr {
    fn from(m: SelectionMask) -> Self {
        MaskRepr {
            q: m.len(),
            indices: m.indices(),
        }
    }
}

impl TryFrom<MaskRepr> for SelectionMask {
    type Error = Error;

    fn try_from(r: MaskRepr) -> Result<Self> {
        SelectionMask::from_indices(r.q, &r.indices)
    }
}

impl SelectionMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn full(q: usize) -> Self {
        Self { bits: vec![true; q] }
    }

    pub fn empty(q: usize) -> Self {
        Self { bits: vec![false; q] }
    }

    pub fn from_indices(q: usize, indices: &[usize]) -> Result<Self> {
        let mut bits = vec![false; q];
        for &i in indices {
            if i >= q {
                return Err(Error::InvalidInput(format!("index {i} out of range for {q} columns")));
            }
            if bits[i] {
                return Err(Error::InvalidInput(format!("index {i} selected twice")));
            }
            bits[i] = true;
        }
        Ok(Self { bits })
    }

    /// Total number of candidate columns Q.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Number of selected columns Q′.
    pub fn q_prime(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn indices(&self) -> Vec<usize> {
        self.bits
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect()
    }

    /// Order on the ascending selected-index lists; the tie-breaker among
    /// otherwise equal solutions (smaller wins).
    pub fn lex_cmp(&self, other: &Self) -> Ordering {
        self.indices().cmp(&other.indices())
    }

    /// The equivalent Q×Q′ column-picking matrix Γ, as `(row, column)` positions
    /// of its ones; Δ = ΓΓᴴ.
    pub fn gamma_entries(&self) -> Vec<(usize, usize)> {
        self.indices().into_iter().enumerate().map(|(j, i)| (i, j)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indices_and_popcount() {
        let m = SelectionMask::from_indices(6, &[4, 1]).unwrap();
        assert_eq!(m.indices(), vec![1, 4]);
        assert_eq!(m.q_prime(), 2);
        assert!(SelectionMask::from_indices(3, &[3]).is_err());
        assert!(SelectionMask::from_indices(3, &[1, 1]).is_err());
    }

    #[test]
    fn gamma_has_one_per_column_and_at_most_one_per_row() {
        let m = SelectionMask::from_indices(7, &[0, 3, 6]).unwrap();
        let g = m.gamma_entries();
        assert_eq!(g.len(), 3);
        let mut cols: Vec<_> = g.iter().map(|e| e.1).collect();
        cols.dedup();
        assert_eq!(cols, vec![0, 1, 2]);
        let mut rows: Vec<_> = g.iter().map(|e| e.0).collect();
        rows.dedup();
        assert_eq!(rows.len(), 3);
    }

    #[test]
    fn json_round_trip() {
        let m = SelectionMask::from_indices(5, &[0, 3]).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"q":5,"indices":[0,3]}"#);
        assert_eq!(serde_json::from_str::<SelectionMask>(&s).unwrap(), m);
        assert!(serde_json::from_str::<SelectionMask>(r#"{"q":2,"indices":[2]}"#).is_err());
    }

    #[test]
    fn lexicographic_tie_break() {
        let a = SelectionMask::from_indices(5, &[0, 4]).unwrap();
        let b = SelectionMask::from_indices(5, &[1, 2]).unwrap();
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
    }
}
