//! CoNLL-U reader. Ten tab-separated columns per token line; blank lines
//! separate sentences; `#` lines are comments. Multiword-token ranges
//! (`1-2`) and empty nodes (`1.1`) are skipped. File heads are 1-based with
//! 0 marking the root; in memory heads are 0-based with `None` for the root.

use crate::corpus::{DepSentence, DepToken};
use crate::{Error, Result};

/// Parses CoNLL-U text into validated dependency sentences. Errors carry the
/// 1-based line number of the offending input line.
pub fn parse_conllu(text: &str) -> Result<Vec<DepSentence>> {
    let mut sentences = Vec::new();
    let mut builder = SentenceBuilder::default();
    let mut block_start_line = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            if !builder.is_empty() {
                sentences.push(builder.finish(block_start_line)?);
                builder = SentenceBuilder::default();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if builder.is_empty() {
            block_start_line = lineno;
        }

        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 10 {
            return Err(Error::Conllu {
                line: lineno,
                msg: format!("expected 10 tab-separated columns, found {}", cols.len()),
            });
        }

        let id = cols[0];
        if id.contains('-') || id.contains('.') {
            // Multiword-token range or empty node: not part of the tree.
            continue;
        }
        let id: usize = id.parse().map_err(|_| Error::Conllu {
            line: lineno,
            msg: format!("token id is not an integer: {id:?}"),
        })?;
        if id != builder.len() + 1 {
            return Err(Error::Conllu {
                line: lineno,
                msg: format!("token id {id} out of sequence, expected {}", builder.len() + 1),
            });
        }

        let head: usize = cols[6].parse().map_err(|_| Error::Conllu {
            line: lineno,
            msg: format!("head is not an integer: {:?}", cols[6]),
        })?;
        let head = if head == 0 { None } else { Some(head - 1) };

        builder.push(
            DepToken {
                form: cols[1].to_string(),
                lemma: cols[2].to_string(),
                upos: cols[3].to_string(),
            },
            head,
            cols[7].to_string(),
        );
    }
    if !builder.is_empty() {
        sentences.push(builder.finish(block_start_line)?);
    }
    Ok(sentences)
}

#[derive(Default)]
struct SentenceBuilder {
    tokens: Vec<DepToken>,
    heads: Vec<Option<usize>>,
    deprels: Vec<String>,
}

impl SentenceBuilder {
    fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    fn len(&self) -> usize {
        self.tokens.len()
    }

    fn push(&mut self, token: DepToken, head: Option<usize>, deprel: String) {
        self.tokens.push(token);
        self.heads.push(head);
        self.deprels.push(deprel);
    }

    fn finish(self, start_line: usize) -> Result<DepSentence> {
        let sentence = DepSentence {
            tokens: self.tokens,
            heads: self.heads,
            deprels: self.deprels,
        };
        sentence.validate().map_err(|e| Error::Conllu {
            line: start_line,
            msg: format!("invalid tree in sentence starting here: {e}"),
        })?;
        Ok(sentence)
    }
}
