//! Pre-trained word vectors, learned language vectors, and character
//! vocabularies.
//!
//! Cross-lingual alignment is an input assumption: multilingual tables
//! are merged from per-language tables that are already in a shared
//! space, under keys `"iso:word"`.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{ChaCha8Rng, uniform_in};

/// Which languages a table's words belong to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LanguageScope {
    /// One undifferentiated vocabulary; keys are bare words.
    Shared,
    /// A merged multilingual table; keys are `"iso:word"`.
    Languages(BTreeSet<String>),
}

/// A fixed table of word vectors with a total lookup policy:
/// exact match, then lowercased match, then the zero vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    scope: LanguageScope,
}

impl EmbeddingTable {
    pub fn from_vectors(dim: usize, vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be positive".into()));
        }
        for (word, v) in &vectors {
            if v.len() != dim {
                return Err(Error::Shape(format!(
                    "vector for '{word}' has length {}, expected {dim}",
                    v.len()
                )));
            }
        }
        Ok(EmbeddingTable { dim, vectors, scope: LanguageScope::Shared })
    }

    /// Parse the plain-text format: one `word v1 v2 ... vm` row per
    /// line, space-separated, with an optional leading `count dim`
    /// header row. Duplicate words keep their first occurrence.
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut dim: Option<usize> = None;
        let mut vectors: HashMap<String, Vec<f64>> = HashMap::new();
        let mut first_data_line = true;
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if first_data_line && fields.len() == 2 {
                if let (Ok(_count), Ok(d)) =
                    (fields[0].parse::<usize>(), fields[1].parse::<usize>())
                {
                    if d == 0 {
                        return Err(Error::EmbeddingFormat {
                            line: lineno,
                            message: "header declares dimension 0".into(),
                        });
                    }
                    dim = Some(d);
                    first_data_line = false;
                    continue;
                }
            }
            first_data_line = false;
            if fields.len() < 2 {
                return Err(Error::EmbeddingFormat {
                    line: lineno,
                    message: "expected a word followed by vector components".into(),
                });
            }
            let word = fields[0];
            let values: Vec<f64> = fields[1..]
                .iter()
                .map(|f| {
                    f.parse::<f64>().map_err(|_| Error::EmbeddingFormat {
                        line: lineno,
                        message: format!("'{f}' is not a number"),
                    })
                })
                .collect::<Result<_>>()?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d == values.len() => {}
                Some(d) => {
                    return Err(Error::EmbeddingFormat {
                        line: lineno,
                        message: format!(
                            "vector has {} components, expected {d}",
                            values.len()
                        ),
                    });
                }
            }
            vectors.entry(word.to_owned()).or_insert(values);
        }
        let dim = dim.ok_or(Error::EmbeddingFormat {
            line: 0,
            message: "no embedding rows found".into(),
        })?;
        Ok(EmbeddingTable { dim, vectors, scope: LanguageScope::Shared })
    }

    /// Canonical text emission (sorted by word, no header).
    pub fn to_text(&self) -> String {
        let mut words: Vec<&String> = self.vectors.keys().collect();
        words.sort();
        let mut out = String::new();
        for word in words {
            out.push_str(word);
            for v in &self.vectors[word] {
                out.push(' ');
                out.push_str(&format!("{v}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn scope(&self) -> &LanguageScope {
        &self.scope
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Total lookup: exact match, else lowercased match, else zeros.
    pub fn lookup(&self, word: &str) -> Vec<f64> {
        if let Some(v) = self.vectors.get(word) {
            return v.clone();
        }
        if let Some(v) = self.vectors.get(&word.to_lowercase()) {
            return v.clone();
        }
        vec![0.0; self.dim]
    }

    /// Lookup that respects the table's scope: merged multilingual
    /// tables are keyed `"iso:word"`, shared tables by bare word.
    pub fn lookup_for_language(&self, language: &str, word: &str) -> Vec<f64> {
        match &self.scope {
            LanguageScope::Shared => self.lookup(word),
            LanguageScope::Languages(_) => self.lookup(&format!("{language}:{word}")),
        }
    }

    /// Merge per-language tables (assumed pre-aligned into one space)
    /// into a single table keyed `"iso:word"`. Vectors are preserved
    /// bit-exactly. All dimensions must agree.
    pub fn merge_multilingual(tables: Vec<(String, EmbeddingTable)>) -> Result<EmbeddingTable> {
        let Some(dim) = tables.first().map(|(_, t)| t.dim) else {
            return Err(Error::Config("merge_multilingual needs at least one table".into()));
        };
        let mut vectors = HashMap::new();
        let mut scope = BTreeSet::new();
        for (iso, table) in tables {
            if table.dim != dim {
                return Err(Error::Merge {
                    language: iso,
                    message: format!("dimension {} does not match {dim}", table.dim),
                });
            }
            for (word, v) in table.vectors {
                vectors.insert(format!("{iso}:{word}"), v);
            }
            scope.insert(iso);
        }
        Ok(EmbeddingTable { dim, vectors, scope: LanguageScope::Languages(scope) })
    }
}

/// Cosine similarity; a zero vector paired with anything is 0 by
/// definition. Errors on length mismatch.
pub fn cosine_similarity(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Arity(format!(
            "cosine_similarity needs equal lengths, got {} and {}",
            u.len(),
            v.len()
        )));
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    let nu: f64 = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|b| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok(dot / (nu * nv))
}

/// Learned per-language vectors. In a trainable model these live in the
/// parameter store; this type carries the initial values and the
/// trained export.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageEmbeddingTable {
    dim: usize,
    vectors: BTreeMap<String, Vec<f64>>,
    pub trainable: bool,
}

impl LanguageEmbeddingTable {
    /// Fresh table for `languages`, each vector drawn uniformly from
    /// [-0.1, 0.1) off the supplied stream.
    pub fn seeded(languages: &[String], dim: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut vectors = BTreeMap::new();
        for lang in languages {
            let v = (0..dim).map(|_| uniform_in(rng, -0.1, 0.1)).collect();
            vectors.insert(lang.clone(), v);
        }
        LanguageEmbeddingTable { dim, vectors, trainable: true }
    }

    pub fn from_vectors(dim: usize, vectors: BTreeMap<String, Vec<f64>>) -> Result<Self> {
        for (lang, v) in &vectors {
            if v.len() != dim {
                return Err(Error::Shape(format!(
                    "language vector for '{lang}' has length {}, expected {dim}",
                    v.len()
                )));
            }
        }
        Ok(LanguageEmbeddingTable { dim, vectors, trainable: false })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vector(&self, language: &str) -> Option<&[f64]> {
        self.vectors.get(language).map(Vec::as_slice)
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }
}

/// Word-boundary sentinel prepended to every character sequence.
pub const CHAR_BOW: char = '\u{0002}';
/// Word-boundary sentinel appended to every character sequence.
pub const CHAR_EOW: char = '\u{0003}';
/// Stand-in for characters outside the vocabulary.
pub const CHAR_UNK: char = '\u{fffd}';

/// A dense character vocabulary with an unknown slot and word-boundary
/// sentinels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVocab {
    chars: Vec<char>,
    #[serde(skip)]
    index: HashMap<char, usize>,
    unk_index: usize,
}

impl CharVocab {
    /// Vocabulary over every character of `words`, plus the sentinels
    /// and the unknown slot, with indices dense in [0, len).
    pub fn build<'a>(words: impl IntoIterator<Item = &'a str>) -> Self {
        let mut set: BTreeSet<char> = [CHAR_UNK, CHAR_BOW, CHAR_EOW].into();
        for word in words {
            set.extend(word.chars());
        }
        Self::from_chars(set.into_iter().collect())
    }

    fn from_chars(chars: Vec<char>) -> Self {
        let index: HashMap<char, usize> =
            chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let unk_index = index[&CHAR_UNK];
        CharVocab { chars, index, unk_index }
    }

    /// Rebuild the derived lookup table after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self.chars.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn unk_index(&self) -> usize {
        self.unk_index
    }

    pub fn bow_index(&self) -> usize {
        self.index[&CHAR_BOW]
    }

    pub fn eow_index(&self) -> usize {
        self.index[&CHAR_EOW]
    }

    /// Index of `c`, or the unknown slot.
    pub fn index_of(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(self.unk_index)
    }
}
