use std::collections::{HashMap, HashSet};
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::error::{Error, Result};

/// Word → value table with a closed value range.
#[derive(Debug, Clone, PartialEq)]
pub struct LexiconTable {
    name: String,
    range: (f64, f64),
    entries: HashMap<String, f64>,
}

impl LexiconTable {
    pub fn new(name: impl Into<String>, range: (f64, f64)) -> Self {
        Self { name: name.into(), range, entries: HashMap::new() }
    }

    /// Builds a table from `(word, value)` pairs, rejecting out-of-range values.
    pub fn from_pairs<I, S>(name: impl Into<String>, range: (f64, f64), pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        let mut table = Self::new(name, range);
        for (word, value) in pairs {
            table.insert(word.as_ref(), value)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, word: &str, value: f64) -> Result<()> {
        let (lo, hi) = self.range;
        if !value.is_finite() || value < lo || value > hi {
            return Err(Error::Lexicon {
                name: self.name.clone(),
                message: format!("value {value} for {word:?} outside [{lo}, {hi}]"),
            });
        }
        self.entries.insert(word.to_lowercase(), value);
        Ok(())
    }

    /// Parses `word<TAB>value` lines; `#` lines and blank lines are skipped and
    /// any columns after the value are ignored.
    pub fn from_reader<R: Read>(name: impl Into<String>, range: (f64, f64), reader: R) -> Result<Self> {
        let mut table = Self::new(name, range);
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let trimmed = line.trim_end_matches(['\r', '\n']);
            if trimmed.trim().is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut cols = trimmed.split('\t');
            let word = cols.next().unwrap_or("").trim();
            let raw = cols.next().map(str::trim);
            let value = raw.and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| Error::Lexicon {
                name: table.name.clone(),
                message: format!("line {}: expected \"word<TAB>value\"", i + 1),
            })?;
            if word.is_empty() {
                return Err(Error::Lexicon {
                    name: table.name.clone(),
                    message: format!("line {}: empty word", i + 1),
                });
            }
            table.insert(word, value)?;
        }
        Ok(table)
    }

    pub fn from_path(name: impl Into<String>, range: (f64, f64), path: &Path) -> Result<Self> {
        Self::from_reader(name, range, std::fs::File::open(path)?)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value_range(&self) -> (f64, f64) {
        self.range
    }

    pub fn get(&self, word: &str) -> Option<f64> {
        match self.entries.get(word) {
            Some(v) => Some(*v),
            None if word.chars().any(char::is_uppercase) => self.entries.get(&word.to_lowercase()).copied(),
            None => None,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries sorted by word.
    pub fn sorted_entries(&self) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        v.sort_by(|a, b| a.0.cmp(b.0));
        v
    }

    /// Copy with every value negated and the range mirrored.
    pub fn negated(&self) -> Self {
        Self {
            name: self.name.clone(),
            range: (-self.range.1, -self.range.0),
            entries: self.entries.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }
}

/// Set of lowercase words, e.g. the familiar-word list used for readability.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self { words: words.into_iter().map(|w| w.as_ref().trim().to_lowercase()).collect() }
    }

    /// One word per line; `#` lines and blank lines are skipped.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut words = HashSet::new();
        for line in BufReader::new(reader).lines() {
            let line = line?;
            let w = line.trim();
            if w.is_empty() || w.starts_with('#') {
                continue;
            }
            words.insert(w.to_lowercase());
        }
        Ok(Self { words })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn sorted(&self) -> Vec<&str> {
        let mut v: Vec<_> = self.words.iter().map(String::as_str).collect();
        v.sort_unstable();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tab_separated_with_comments() {
        let src = "# header\nGood\t1.9\textra\t0.3\n\nbad\t-2.5\n";
        let t = LexiconTable::from_reader("valence", (-4.0, 4.0), src.as_bytes()).unwrap();
        assert_eq!(t.len(), 2);
        assert_eq!(t.get("good"), Some(1.9));
        assert_eq!(t.get("GOOD"), Some(1.9));
        assert_eq!(t.get("meh"), None);
    }

    #[test]
    fn rejects_out_of_range_and_malformed() {
        assert!(LexiconTable::from_reader("c", (1.0, 5.0), "rock\t5.5\n".as_bytes()).is_err());
        assert!(LexiconTable::from_reader("c", (1.0, 5.0), "rock 4\n".as_bytes()).is_err());
        assert!(LexiconTable::from_reader("c", (1.0, 5.0), "rock\tNaN\n".as_bytes()).is_err());
    }

    #[test]
    fn word_list_skips_comments() {
        let w = WordList::from_reader("# c\nThe\ncat\n\n".as_bytes()).unwrap();
        assert_eq!(w.len(), 2);
        assert!(w.contains("the"));
    }
}
