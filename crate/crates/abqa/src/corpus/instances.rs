//! JSON-lines storage for question-passage instances: one JSON object per
//! line. Assertions are stored as arrays of field strings; labels are 0, 1,
//! or null.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Assertion, Candidate, PassageSentence, QAInstance};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct InstanceRecord {
    id: String,
    question: String,
    passage: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    conllu: Option<String>,
    #[serde(default)]
    candidates: Vec<CandidateRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    sentences: Vec<SentenceRecord>,
}

#[derive(Serialize, Deserialize)]
struct CandidateRecord {
    assertion: Vec<String>,
    #[serde(default)]
    label: Option<u8>,
}

#[derive(Serialize, Deserialize)]
struct SentenceRecord {
    text: String,
    #[serde(default)]
    label: Option<u8>,
}

fn schema_err(record: usize, msg: impl Into<String>) -> Error {
    Error::Schema {
        record,
        msg: msg.into(),
    }
}

fn decode(record: InstanceRecord, index: usize) -> Result<QAInstance> {
    if record.id.is_empty() {
        return Err(schema_err(index, "empty instance id"));
    }
    let mut candidates = Vec::with_capacity(record.candidates.len());
    for c in record.candidates {
        if let Some(l) = c.label {
            if l > 1 {
                return Err(schema_err(index, format!("label must be 0 or 1, got {l}")));
            }
        }
        let assertion = Assertion::from_field_strings(&c.assertion)
            .map_err(|e| schema_err(index, e.to_string()))?;
        candidates.push(Candidate {
            assertion,
            label: c.label,
        });
    }
    let mut sentences = Vec::with_capacity(record.sentences.len());
    for s in record.sentences {
        if let Some(l) = s.label {
            if l > 1 {
                return Err(schema_err(index, format!("label must be 0 or 1, got {l}")));
            }
        }
        sentences.push(PassageSentence {
            text: s.text,
            label: s.label,
        });
    }
    Ok(QAInstance {
        id: record.id,
        question: record.question,
        passage: record.passage,
        conllu: record.conllu,
        candidates,
        sentences,
    })
}

fn encode(instance: &QAInstance) -> InstanceRecord {
    InstanceRecord {
        id: instance.id.clone(),
        question: instance.question.clone(),
        passage: instance.passage.clone(),
        conllu: instance.conllu.clone(),
        candidates: instance
            .candidates
            .iter()
            .map(|c| CandidateRecord {
                assertion: c.assertion.field_strings(),
                label: c.label,
            })
            .collect(),
        sentences: instance
            .sentences
            .iter()
            .map(|s| SentenceRecord {
                text: s.text.clone(),
                label: s.label,
            })
            .collect(),
    }
}

/// Parses instances from JSON-lines text. Schema errors carry the 1-based
/// record (line) index.
pub fn read_instances_str(text: &str) -> Result<Vec<QAInstance>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: InstanceRecord = serde_json::from_str(line)
            .map_err(|e| schema_err(idx + 1, format!("invalid JSON: {e}")))?;
        out.push(decode(record, idx + 1)?);
    }
    Ok(out)
}

/// Reads a JSON-lines instance file.
pub fn read_instances(path: &Path) -> Result<Vec<QAInstance>> {
    read_instances_str(&fs::read_to_string(path)?)
}

/// Serializes instances to JSON-lines text, one record per line.
pub fn write_instances_string(instances: &[QAInstance]) -> Result<String> {
    let mut out = String::new();
    for instance in instances {
        let line = serde_json::to_string(&encode(instance))
            .map_err(|e| Error::Data(format!("cannot serialize instance: {e}")))?;
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}

/// Writes instances to a JSON-lines file.
pub fn write_instances(path: &Path, instances: &[QAInstance]) -> Result<()> {
    fs::write(path, write_instances_string(instances)?)?;
    Ok(())
}
