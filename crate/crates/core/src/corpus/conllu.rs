//! CoNLL-U reading and writing.
//!
//! Only the columns the taggers consume are modelled: FORM (2), UPOS (4)
//! as layer `"upos"`, and DEPREL (8) as layer `"deprel"`. Multiword
//! ranges (`1-2`) and empty nodes (`1.1`) contribute no token. `_` in a
//! tag column means the layer is absent.

use crate::corpus::{Corpus, Sentence, Token};
use crate::error::{Error, Result};

pub const LAYER_UPOS: &str = "upos";
pub const LAYER_DEPREL: &str = "deprel";

/// Parse CoNLL-U text into a corpus with language `"und"`; callers
/// attach the real language code with [`Corpus::with_language`].
pub fn parse_conllu(text: &str) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();
    let mut sent_id: Option<String> = None;

    let mut flush = |tokens: &mut Vec<Token>, sent_id: &mut Option<String>| {
        if !tokens.is_empty() {
            let id = sent_id
                .take()
                .unwrap_or_else(|| format!("s{}", sentences.len()));
            sentences.push(Sentence::new(id, std::mem::take(tokens)));
        }
        *sent_id = None;
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            flush(&mut tokens, &mut sent_id);
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=') {
                if key.trim() == "sent_id" {
                    sent_id = Some(value.trim().to_owned());
                }
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 10 {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "expected at least 10 tab-separated columns, found {}",
                    cols.len()
                ),
            });
        }
        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            // Multiword token range or empty node.
            continue;
        }
        if id.parse::<u64>().is_err() {
            return Err(Error::Parse {
                line: lineno,
                message: format!("token id '{id}' is not an integer"),
            });
        }
        if cols[1].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty FORM column".to_owned(),
            });
        }
        let mut token = Token::new(cols[1]);
        if cols[3] != "_" {
            token.set_tag(LAYER_UPOS, cols[3]);
        }
        if cols[7] != "_" {
            token.set_tag(LAYER_DEPREL, cols[7]);
        }
        tokens.push(token);
    }
    flush(&mut tokens, &mut sent_id);

    Corpus::new("und", sentences)
}

/// Canonical CoNLL-U emission: parse(write(c)) == c up to language, and
/// write(parse(write(c))) is byte-identical to write(c).
pub fn write_conllu(corpus: &Corpus) -> String {
    let mut out = String::new();
    for sentence in corpus.sentences() {
        out.push_str("# sent_id = ");
        out.push_str(&sentence.id);
        out.push('\n');
        for (i, token) in sentence.tokens.iter().enumerate() {
            let upos = token.tag(LAYER_UPOS).unwrap_or("_");
            let deprel = token.tag(LAYER_DEPREL).unwrap_or("_");
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t_\t_\t_\t{}\t_\t_\n",
                i + 1,
                token.form,
                upos,
                deprel
            ));
        }
        out.push('\n');
    }
    out
}
