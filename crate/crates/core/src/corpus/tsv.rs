//! K-column TSV tag files: `form<TAB>tag1<TAB>...<TAB>tagK`, one token
//! per line, blank line between sentences. The caller names the layers
//! in column order.

use crate::corpus::{Corpus, Sentence, Token};
use crate::error::{Error, Result};

pub fn parse_tsv(text: &str, layer_names: &[&str]) -> Result<Corpus> {
    if layer_names.is_empty() {
        return Err(Error::Config("parse_tsv needs at least one layer name".into()));
    }
    let mut sentences: Vec<Sentence> = Vec::new();
    let mut tokens: Vec<Token> = Vec::new();

    let mut flush = |tokens: &mut Vec<Token>| {
        if !tokens.is_empty() {
            let id = format!("s{}", sentences.len());
            sentences.push(Sentence::new(id, std::mem::take(tokens)));
        }
    };

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        if line.trim().is_empty() {
            flush(&mut tokens);
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != layer_names.len() + 1 {
            return Err(Error::Parse {
                line: lineno,
                message: format!(
                    "expected {} columns (form + {} layers), found {}",
                    layer_names.len() + 1,
                    layer_names.len(),
                    cols.len()
                ),
            });
        }
        if cols[0].is_empty() {
            return Err(Error::Parse {
                line: lineno,
                message: "empty form column".to_owned(),
            });
        }
        let mut token = Token::new(cols[0]);
        for (layer, tag) in layer_names.iter().zip(&cols[1..]) {
            token.set_tag(*layer, *tag);
        }
        tokens.push(token);
    }
    flush(&mut tokens);

    Corpus::new("und", sentences)
}

/// Canonical TSV emission in the given layer order. Errors if a layer
/// is missing from the corpus.
pub fn write_tsv(corpus: &Corpus, layer_names: &[&str]) -> Result<String> {
    for layer in layer_names {
        if !corpus.has_layer(layer) {
            return Err(Error::UnknownLayer((*layer).to_owned()));
        }
    }
    let mut out = String::new();
    for sentence in corpus.sentences() {
        for token in &sentence.tokens {
            out.push_str(&token.form);
            for layer in layer_names {
                out.push('\t');
                out.push_str(token.tag(layer).expect("layer checked"));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_one_token_two_layers() {
        let c = parse_tsv("he\tPRO\tPRON\n\n", &["semtag", "upos"]).unwrap();
        assert_eq!(c.len(), 1);
        let t = &c.sentences()[0].tokens[0];
        assert_eq!(t.tag("semtag"), Some("PRO"));
        assert_eq!(t.tag("upos"), Some("PRON"));
    }

    #[test]
    fn block_sizes_are_preserved() {
        let text = "a\tX\nb\tY\n\nc\tX\nd\tY\ne\tZ\n";
        let c = parse_tsv(text, &["pos"]).unwrap();
        let lens: Vec<usize> = c.sentences().iter().map(Sentence::len).collect();
        assert_eq!(lens, vec![2, 3]);
    }

    #[test]
    fn arity_violation_reports_line() {
        let text = "he\tPRO\tPRON\nhe\tPRO\n";
        match parse_tsv(text, &["semtag", "upos"]) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_stable() {
        let text = "a\tX\tu\nb\tY\tv\n\nc\tZ\tw\n";
        let c = parse_tsv(text, &["pos", "sem"]).unwrap();
        let emitted = write_tsv(&c, &["pos", "sem"]).unwrap();
        let reparsed = parse_tsv(&emitted, &["pos", "sem"]).unwrap();
        assert_eq!(c, reparsed);
        assert_eq!(emitted, write_tsv(&reparsed, &["pos", "sem"]).unwrap());
    }

    #[test]
    fn write_unknown_layer_errors() {
        let c = parse_tsv("a\tX\n", &["pos"]).unwrap();
        assert!(matches!(
            write_tsv(&c, &["sem"]),
            Err(Error::UnknownLayer(_))
        ));
    }
}
