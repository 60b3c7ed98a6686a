//! Data model for questions, passages, assertions, and labeled instances,
//! plus readers and writers for the toolkit's file formats.
//!
//! All types here are immutable after construction and safe to share across
//! threads.

mod conllu;
mod instances;

pub use conllu::parse_conllu;
pub use instances::{read_instances, read_instances_str, write_instances, write_instances_string};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Lowercases, splits on whitespace, and strips punctuation from token
/// boundaries. Internal punctuation (apostrophes, hyphens) is kept, so
/// "empire's" survives while "2015," becomes "2015".
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .filter_map(|raw| {
            let trimmed = raw.trim_matches(|c: char| c.is_ascii_punctuation() && c != '\'');
            let trimmed = trimmed.trim_matches('\'');
            if trimmed.is_empty() {
                None
            } else {
                Some(trimmed.to_string())
            }
        })
        .collect()
}

/// A semi-structured answer: subject, predicate, and zero or more arguments,
/// each an ordered token sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assertion {
    pub subject: Vec<String>,
    pub predicate: Vec<String>,
    pub arguments: Vec<Vec<String>>,
}

impl Assertion {
    /// Builds an assertion, rejecting empty subject or predicate.
    pub fn new(
        subject: Vec<String>,
        predicate: Vec<String>,
        arguments: Vec<Vec<String>>,
    ) -> Result<Self> {
        if subject.is_empty() || subject.iter().any(|t| t.is_empty()) {
            return Err(Error::Data("assertion subject must be non-empty".into()));
        }
        if predicate.is_empty() || predicate.iter().any(|t| t.is_empty()) {
            return Err(Error::Data("assertion predicate must be non-empty".into()));
        }
        Ok(Assertion {
            subject,
            predicate,
            arguments,
        })
    }

    /// Builds an assertion from whole-field strings, splitting each on
    /// whitespace.
    pub fn from_field_strings(fields: &[String]) -> Result<Self> {
        if fields.len() < 2 {
            return Err(Error::Data(format!(
                "assertion needs at least subject and predicate, got {} fields",
                fields.len()
            )));
        }
        let mut tokenized: Vec<Vec<String>> = fields
            .iter()
            .map(|f| f.split_whitespace().map(str::to_string).collect())
            .collect();
        let rest = tokenized.split_off(2);
        let mut it = tokenized.into_iter();
        Assertion::new(it.next().unwrap(), it.next().unwrap(), rest)
    }

    /// Total field count: subject + predicate + arguments.
    pub fn field_count(&self) -> usize {
        2 + self.arguments.len()
    }

    /// A full assertion has at least three fields; two-field assertions are
    /// representable but flagged non-canonical.
    pub fn is_canonical(&self) -> bool {
        self.field_count() >= 3
    }

    /// Fields in order, each as a space-joined string.
    pub fn field_strings(&self) -> Vec<String> {
        self.fields().map(|f| f.join(" ")).collect()
    }

    /// Iterates fields in order: subject, predicate, arguments.
    pub fn fields(&self) -> impl Iterator<Item = &Vec<String>> {
        std::iter::once(&self.subject)
            .chain(std::iter::once(&self.predicate))
            .chain(self.arguments.iter())
    }

    /// All tokens of all fields, flattened in field order.
    pub fn all_tokens(&self) -> Vec<String> {
        self.fields().flatten().cloned().collect()
    }

    /// Lowercased field tuple used for deduplication.
    pub fn normalized_key(&self) -> Vec<Vec<String>> {
        self.fields()
            .map(|f| f.iter().map(|t| t.to_lowercase()).collect())
            .collect()
    }

    /// Display form `<f1; f2; ...; fn>`.
    pub fn render(&self) -> String {
        format!("<{}>", self.field_strings().join("; "))
    }

    /// Parses the display form produced by [`Assertion::render`].
    pub fn parse(text: &str) -> Result<Self> {
        let inner = text
            .strip_prefix('<')
            .and_then(|t| t.strip_suffix('>'))
            .ok_or_else(|| Error::Data(format!("assertion display form must be <...>: {text}")))?;
        let fields: Vec<String> = inner.split(';').map(|f| f.trim().to_string()).collect();
        Assertion::from_field_strings(&fields)
    }
}

/// One token of a dependency-parsed sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepToken {
    pub form: String,
    pub lemma: String,
    pub upos: String,
}

/// A tokenized sentence with one dependency tree: per-token head indices
/// (0-based, `None` for the root) and relation labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepSentence {
    pub tokens: Vec<DepToken>,
    pub heads: Vec<Option<usize>>,
    pub deprels: Vec<String>,
}

impl DepSentence {
    /// Validates the tree invariant: equal column lengths, exactly one root,
    /// and every token reaching the root without cycles.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if self.heads.len() != n || self.deprels.len() != n {
            return Err(Error::Structure(format!(
                "column lengths differ: {} tokens, {} heads, {} deprels",
                n,
                self.heads.len(),
                self.deprels.len()
            )));
        }
        let roots: Vec<usize> = (0..n).filter(|&i| self.heads[i].is_none()).collect();
        if roots.len() != 1 {
            return Err(Error::Structure(format!(
                "expected exactly one root, found {}",
                roots.len()
            )));
        }
        for start in 0..n {
            let mut seen = 0usize;
            let mut cur = start;
            while let Some(h) = self.heads[cur] {
                if h >= n {
                    return Err(Error::Structure(format!(
                        "head index {h} out of range for token {cur}"
                    )));
                }
                seen += 1;
                if seen > n {
                    return Err(Error::Structure(format!(
                        "cycle in head indices involving token {start}"
                    )));
                }
                cur = h;
            }
        }
        Ok(())
    }

    /// Index of the root token. The tree invariant guarantees existence.
    pub fn root(&self) -> usize {
        self.heads
            .iter()
            .position(Option::is_none)
            .expect("validated sentence has a root")
    }

    /// Children of `head`, in token order.
    pub fn children(&self, head: usize) -> Vec<usize> {
        (0..self.tokens.len())
            .filter(|&i| self.heads[i] == Some(head))
            .collect()
    }

    /// All indices in the subtree rooted at `head` (inclusive), sorted.
    pub fn subtree(&self, head: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![head];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.children(i));
        }
        out.sort_unstable();
        out
    }

    pub fn forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.form.clone()).collect()
    }
}

/// An assertion candidate paired with an optional correctness label.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub assertion: Assertion,
    /// 1 when the assertion answers the question, 0 when it does not,
    /// `None` before annotation.
    pub label: Option<u8>,
}

/// An answer-sentence candidate for the passage-QA experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct PassageSentence {
    pub text: String,
    pub label: Option<u8>,
}

/// One question-passage instance with assertion candidates and, for the
/// passage-QA task, per-sentence candidates.
#[derive(Debug, Clone, PartialEq)]
pub struct QAInstance {
    pub id: String,
    pub question: String,
    pub passage: String,
    /// Dependency parses of the passage sentences, one CoNLL-U block per
    /// sentence, in passage order.
    pub conllu: Option<String>,
    pub candidates: Vec<Candidate>,
    pub sentences: Vec<PassageSentence>,
}

impl QAInstance {
    pub fn question_tokens(&self) -> Vec<String> {
        tokenize(&self.question)
    }

    pub fn passage_tokens(&self) -> Vec<String> {
        tokenize(&self.passage)
    }

    /// Parses the stored CoNLL-U into dependency sentences.
    pub fn parsed_sentences(&self) -> Result<Vec<DepSentence>> {
        match &self.conllu {
            Some(text) => parse_conllu(text),
            None => Err(Error::Data(format!(
                "instance {} has no dependency parses",
                self.id
            ))),
        }
    }
}
