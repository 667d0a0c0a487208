use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

/// One position of a sequence over an alphabet extended by the hole symbol.
/// Encoding: 0 is the hole, `k + 1` is letter index `k`. Keeping this in one
/// byte matters: window scans hash megabytes of cells.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell(u8);

impl Cell {
    pub const HOLE: Cell = Cell(0);

    pub fn letter(index: u8) -> Cell {
        assert!(index < u8::MAX, "alphabet index out of range");
        Cell(index + 1)
    }

    pub fn is_hole(self) -> bool {
        self.0 == 0
    }

    pub fn letter_index(self) -> Option<u8> {
        self.0.checked_sub(1)
    }
}

impl fmt::Debug for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.letter_index() {
            None => write!(f, "?"),
            Some(i) => write!(f, "#{i}"),
        }
    }
}

/// Ordered finite set of distinct symbol labels. Index order is the order of
/// first appearance at construction and is part of every serialized artifact,
/// so constructors must be deterministic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Alphabet {
    labels: Vec<String>,
}

pub type AlphabetRef = Arc<Alphabet>;

impl Alphabet {
    pub fn new(labels: Vec<String>) -> Result<Alphabet> {
        if labels.is_empty() {
            return Err(Error::InvalidWord("alphabet is empty".into()));
        }
        if labels.len() > 254 {
            return Err(Error::InvalidWord(format!(
                "alphabet has {} symbols; at most 254 supported",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if a == "?" || a.is_empty() {
                return Err(Error::InvalidWord(format!("invalid symbol label {a:?}")));
            }
            if labels[..i].contains(a) {
                return Err(Error::InvalidWord(format!("duplicate symbol label {a:?}")));
            }
        }
        Ok(Alphabet { labels })
    }

    /// Alphabet of the distinct letters of `word` in sorted order, ignoring '?'.
    pub fn from_word_letters(word: &str) -> Result<Alphabet> {
        let mut letters: Vec<char> = word.chars().filter(|&c| c != '?').collect();
        letters.sort_unstable();
        letters.dedup();
        if letters.is_empty() {
            return Err(Error::InvalidWord(format!(
                "word {word:?} has no letters besides holes"
            )));
        }
        Alphabet::new(letters.into_iter().map(String::from).collect())
    }

    /// `k` single-letter labels a, b, ..., z, A, ..., then `s0`, `s1`, ...
    pub fn of_size(k: usize) -> Result<Alphabet> {
        const SINGLE: &str = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
        let mut labels = Vec::with_capacity(k);
        for i in 0..k {
            match SINGLE.chars().nth(i) {
                Some(c) => labels.push(c.to_string()),
                None => labels.push(format!("s{i}")),
            }
        }
        Alphabet::new(labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, cell: Cell) -> &str {
        match cell.letter_index() {
            None => "?",
            Some(i) => &self.labels[i as usize],
        }
    }

    pub fn index_of(&self, label: &str) -> Option<u8> {
        self.labels.iter().position(|l| l == label).map(|i| i as u8)
    }

    pub fn cell_of(&self, label: &str) -> Result<Cell> {
        if label == "?" {
            return Ok(Cell::HOLE);
        }
        self.index_of(label)
            .map(Cell::letter)
            .ok_or_else(|| Error::InvalidWord(format!("symbol {label:?} not in alphabet")))
    }

    /// Parse a word of single-character symbols ('?' is the hole).
    pub fn parse_cells(&self, word: &str) -> Result<Vec<Cell>> {
        word.chars()
            .map(|c| self.cell_of(&c.to_string()))
            .collect()
    }

    /// True when every label is one character; such alphabets render words
    /// without separators.
    pub fn single_char(&self) -> bool {
        self.labels.iter().all(|l| l.chars().count() == 1)
    }

    pub fn render(&self, cells: &[Cell]) -> String {
        if self.single_char() {
            cells.iter().map(|&c| self.label(c)).collect()
        } else {
            cells
                .iter()
                .map(|&c| self.label(c))
                .collect::<Vec<_>>()
                .join(" ")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_encoding_roundtrip() {
        assert!(Cell::HOLE.is_hole());
        assert_eq!(Cell::HOLE.letter_index(), None);
        for i in 0..10u8 {
            let c = Cell::letter(i);
            assert!(!c.is_hole());
            assert_eq!(c.letter_index(), Some(i));
        }
    }

    #[test]
    fn alphabet_from_word_sorted_distinct() {
        let a = Alphabet::from_word_letters("c?a?b?a").unwrap();
        assert_eq!(a.labels(), &["a", "b", "c"]);
        assert_eq!(a.index_of("c"), Some(2));
        assert!(a.single_char());
    }

    #[test]
    fn rejects_bad_labels() {
        assert!(Alphabet::new(vec!["a".into(), "a".into()]).is_err());
        assert!(Alphabet::new(vec!["?".into()]).is_err());
        assert!(Alphabet::new(vec![]).is_err());
        assert!(Alphabet::from_word_letters("???").is_err());
    }

    #[test]
    fn render_uses_separators_only_for_wide_labels() {
        let a = Alphabet::new(vec!["a".into(), "b".into()]).unwrap();
        let cells = vec![Cell::letter(0), Cell::HOLE, Cell::letter(1)];
        assert_eq!(a.render(&cells), "a?b");
        let wide = Alphabet::new(vec!["(a,0)".into(), "(b,1)".into()]).unwrap();
        let cells = vec![Cell::letter(1), Cell::letter(0)];
        assert_eq!(wide.render(&cells), "(b,1) (a,0)");
    }
}
