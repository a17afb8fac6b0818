//! Annotated corpora: language-coded token sequences carrying one or
//! more named tag layers, plus the dataset arrangements (overlap splits,
//! label shuffles) the experiment protocols need.

mod conllu;
mod tsv;

pub use conllu::{parse_conllu, write_conllu};
pub use tsv::{parse_tsv, write_tsv};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_from_seed, shuffle};

/// One token: a surface form plus its tag on each annotation layer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    tags: BTreeMap<String, String>,
}

impl Token {
    pub fn new(form: impl Into<String>) -> Self {
        Token { form: form.into(), tags: BTreeMap::new() }
    }

    pub fn with_tag(mut self, layer: impl Into<String>, tag: impl Into<String>) -> Self {
        self.tags.insert(layer.into(), tag.into());
        self
    }

    pub fn tag(&self, layer: &str) -> Option<&str> {
        self.tags.get(layer).map(String::as_str)
    }

    pub fn set_tag(&mut self, layer: impl Into<String>, tag: impl Into<String>) {
        self.tags.insert(layer.into(), tag.into());
    }

    pub fn layers(&self) -> impl Iterator<Item = &str> {
        self.tags.keys().map(String::as_str)
    }
}

/// An ordered sequence of tokens with a stable identifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Self {
        Sentence { id: id.into(), tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tags of one layer in token order; `None` if any token lacks it.
    pub fn layer_tags(&self, layer: &str) -> Option<Vec<&str>> {
        self.tokens.iter().map(|t| t.tag(layer)).collect()
    }
}

/// An annotated corpus for one language.
///
/// Immutable after construction. `new` enforces the structural
/// invariants: non-empty forms, non-empty sentences, unique sentence
/// ids, and layer consistency (a layer present on one token of a
/// sentence is present on every token of every sentence).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    language: String,
    layers: BTreeSet<String>,
    sentences: Vec<Sentence>,
}

impl Corpus {
    pub fn new(language: impl Into<String>, sentences: Vec<Sentence>) -> Result<Self> {
        let mut ids = BTreeSet::new();
        let mut layers: Option<BTreeSet<String>> = None;
        for sentence in &sentences {
            if sentence.tokens.is_empty() {
                return Err(Error::InvalidCorpus(format!(
                    "sentence '{}' has no tokens",
                    sentence.id
                )));
            }
            if !ids.insert(sentence.id.clone()) {
                return Err(Error::InvalidCorpus(format!(
                    "duplicate sentence id '{}'",
                    sentence.id
                )));
            }
            for token in &sentence.tokens {
                if token.form.is_empty() {
                    return Err(Error::InvalidCorpus(format!(
                        "empty token form in sentence '{}'",
                        sentence.id
                    )));
                }
                let token_layers: BTreeSet<String> =
                    token.layers().map(str::to_owned).collect();
                match &layers {
                    None => layers = Some(token_layers),
                    Some(expected) if *expected == token_layers => {}
                    Some(expected) => {
                        return Err(Error::InvalidCorpus(format!(
                            "sentence '{}' carries layers {:?} but the corpus declares {:?}",
                            sentence.id, token_layers, expected
                        )));
                    }
                }
            }
        }
        Ok(Corpus {
            language: language.into(),
            layers: layers.unwrap_or_default(),
            sentences,
        })
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn with_language(mut self, language: impl Into<String>) -> Self {
        self.language = language.into();
        self
    }

    pub fn layers(&self) -> &BTreeSet<String> {
        &self.layers
    }

    pub fn has_layer(&self, layer: &str) -> bool {
        self.layers.contains(layer)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn n_tokens(&self) -> usize {
        self.sentences.iter().map(Sentence::len).sum()
    }

    pub fn tokens(&self) -> impl Iterator<Item = &Token> {
        self.sentences.iter().flat_map(|s| s.tokens.iter())
    }

    pub fn sentence_ids(&self) -> BTreeSet<&str> {
        self.sentences.iter().map(|s| s.id.as_str()).collect()
    }

    /// New corpus holding the sentences at `indices`, in corpus order.
    pub fn subset(&self, indices: &BTreeSet<usize>) -> Result<Corpus> {
        let sentences = self
            .sentences
            .iter()
            .enumerate()
            .filter(|(i, _)| indices.contains(i))
            .map(|(_, s)| s.clone())
            .collect();
        Corpus::new(self.language.clone(), sentences)
    }

    /// Copy of this corpus in which, within each sentence, the tags of
    /// `layer` are redistributed over positions by a seeded uniform
    /// permutation. All other layers are untouched.
    ///
    /// One ChaCha8 stream seeded from `seed` is consumed across the
    /// sentences in corpus order, one Fisher-Yates pass per sentence.
    pub fn shuffle_labels(&self, layer: &str, seed: u64) -> Result<Corpus> {
        if !self.has_layer(layer) {
            return Err(Error::UnknownLayer(layer.to_owned()));
        }
        let mut rng = rng_from_seed(seed);
        let mut sentences = self.sentences.clone();
        for sentence in &mut sentences {
            let mut tags: Vec<String> = sentence
                .tokens
                .iter()
                .map(|t| t.tag(layer).expect("layer checked above").to_owned())
                .collect();
            shuffle(&mut tags, &mut rng);
            for (token, tag) in sentence.tokens.iter_mut().zip(tags) {
                token.set_tag(layer, tag);
            }
        }
        Corpus::new(self.language.clone(), sentences)
    }
}

/// How the main-task and auxiliary-task datasets share sentences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlapMode {
    Full,
    Partial,
    None,
}

impl fmt::Display for OverlapMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OverlapMode::Full => write!(f, "full"),
            OverlapMode::Partial => write!(f, "partial"),
            OverlapMode::None => write!(f, "none"),
        }
    }
}

impl FromStr for OverlapMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(OverlapMode::Full),
            "partial" => Ok(OverlapMode::Partial),
            "none" => Ok(OverlapMode::None),
            other => Err(Error::Config(format!("unknown overlap mode '{other}'"))),
        }
    }
}

/// A main/auxiliary dataset pair with a declared overlap condition.
#[derive(Debug, Clone)]
pub struct OverlapSplit {
    pub mode: OverlapMode,
    pub main: Corpus,
    pub aux: Corpus,
    pub seed: u64,
}

/// Split `corpus` into a main/aux pair under the given overlap mode.
///
/// Deterministic in `(mode, aux_fraction, seed)`. With `k =
/// ceil(aux_fraction * n)` over a seeded shuffle of the sentence
/// indices:
/// - `Full`: main = aux = the whole corpus (no shuffle consumed);
/// - `None`: aux takes the first `k` shuffled sentences, main the rest;
/// - `Partial`: aux takes the first `k`, of which the first
///   `max(1, k/2)` also remain in main together with the rest.
///
/// Both output corpora keep their sentences in original corpus order.
pub fn make_overlap_split(
    corpus: &Corpus,
    mode: OverlapMode,
    aux_fraction: f64,
    seed: u64,
) -> Result<OverlapSplit> {
    if !(aux_fraction > 0.0 && aux_fraction < 1.0) {
        return Err(Error::Config(format!(
            "aux_fraction must lie in (0, 1), got {aux_fraction}"
        )));
    }
    if mode == OverlapMode::Full {
        return Ok(OverlapSplit {
            mode,
            main: corpus.clone(),
            aux: corpus.clone(),
            seed,
        });
    }
    let n = corpus.len();
    if n < 4 {
        return Err(Error::Sizing(format!(
            "{mode} overlap needs at least 4 sentences, corpus has {n}"
        )));
    }
    let k = (aux_fraction * n as f64).ceil() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    shuffle(&mut order, &mut rng_from_seed(seed));
    let aux_idx: BTreeSet<usize> = order[..k].iter().copied().collect();
    let main_idx: BTreeSet<usize> = match mode {
        OverlapMode::Full => unreachable!(),
        OverlapMode::None => {
            if n - k == 0 {
                return Err(Error::Sizing(format!(
                    "aux_fraction {aux_fraction} leaves no main sentences (n = {n})"
                )));
            }
            order[k..].iter().copied().collect()
        }
        OverlapMode::Partial => {
            let shared = (k / 2).max(1);
            if shared >= k {
                return Err(Error::Sizing(format!(
                    "partial overlap needs an aux set of at least 2 sentences, got {k}"
                )));
            }
            if n - k == 0 {
                return Err(Error::Sizing(format!(
                    "partial overlap needs a main-only remainder (n = {n}, aux = {k})"
                )));
            }
            order[k..]
                .iter()
                .chain(order[..shared].iter())
                .copied()
                .collect()
        }
    };
    Ok(OverlapSplit {
        mode,
        main: corpus.subset(&main_idx)?,
        aux: corpus.subset(&aux_idx)?,
        seed,
    })
}

/// Join two corpora over their shared sentence ids, producing a corpus
/// that carries `layer_a` (from `a`) and `layer_b` (from `b`) on every
/// token. Shared sentences must agree in token count and forms.
pub fn align_layers(a: &Corpus, b: &Corpus, layer_a: &str, layer_b: &str) -> Result<Corpus> {
    if !a.has_layer(layer_a) {
        return Err(Error::UnknownLayer(layer_a.to_owned()));
    }
    if !b.has_layer(layer_b) {
        return Err(Error::UnknownLayer(layer_b.to_owned()));
    }
    if layer_a == layer_b {
        return Err(Error::Config(format!(
            "align_layers needs distinct layer names, got '{layer_a}' twice"
        )));
    }
    let by_id: HashMap<&str, &Sentence> =
        b.sentences().iter().map(|s| (s.id.as_str(), s)).collect();
    let mut sentences = Vec::new();
    for sa in a.sentences() {
        let Some(sb) = by_id.get(sa.id.as_str()) else {
            continue;
        };
        if sa.len() != sb.len() {
            return Err(Error::Align {
                sentence_id: sa.id.clone(),
                message: format!("token counts differ ({} vs {})", sa.len(), sb.len()),
            });
        }
        let mut tokens = Vec::with_capacity(sa.len());
        for (ta, tb) in sa.tokens.iter().zip(sb.tokens.iter()) {
            if ta.form != tb.form {
                return Err(Error::Align {
                    sentence_id: sa.id.clone(),
                    message: format!("forms differ ('{}' vs '{}')", ta.form, tb.form),
                });
            }
            tokens.push(
                Token::new(ta.form.clone())
                    .with_tag(layer_a, ta.tag(layer_a).expect("layer checked"))
                    .with_tag(layer_b, tb.tag(layer_b).expect("layer checked")),
            );
        }
        sentences.push(Sentence::new(sa.id.clone(), tokens));
    }
    Corpus::new(a.language().to_owned(), sentences)
}
