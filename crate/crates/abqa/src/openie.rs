//! Clause-based open information extraction over dependency parses.
//!
//! Each sentence is scanned for clauses: verbal clauses headed by a verb
//! with an explicit subject, copular clauses headed by a predicative word
//! with a `cop` child, and appositive constructions, which synthesize a
//! copular clause with an implicit "is". Clauses are typed by their
//! complement pattern (SV, SVA, SVC, SVO, SVOO, SVOC, SVOA) and rendered
//! into assertions whose fields are contiguous subtree yields. A final
//! composition step rewrites `<A; is; B>` + `<A; p; C>` into `<B; p; C>`.
//!
//! Invariants:
//! - every assertion token is a token of the source sentence, except the
//!   synthesized "is" of appositive clauses;
//! - output order is deterministic: sentence order, then clause head order,
//!   with composed assertions appended last;
//! - the output contains no duplicate assertions (case-insensitive field
//!   comparison).

use crate::corpus::{Assertion, DepSentence, QAInstance};
use crate::Result;

/// Clause types by complement pattern: subject-verb plus any of adverbial
/// (A), complement (C), object (O).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[allow(clippy::upper_case_acronyms)]
pub enum ClauseKind {
    SV,
    SVA,
    SVC,
    SVO,
    SVOO,
    SVOC,
    SVOA,
}

/// Grammatical function of a clause constituent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    DirectObject,
    IndirectObject,
    Complement,
    Adverbial,
}

/// Predicate of a clause: either tokens of the sentence or the implicit
/// copula synthesized for appositives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate {
    /// Sorted token indices: auxiliaries, the verb, particles, negation.
    Tokens(Vec<usize>),
    /// Synthesized "is" of an appositive clause; no source token exists.
    ImplicitIs,
}

/// One detected clause: a subject subtree, a predicate, and typed
/// complement subtrees in token order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub subject: usize,
    pub predicate: Predicate,
    pub complements: Vec<(Role, usize)>,
    pub kind: ClauseKind,
}

const BE_FORMS: &[&str] = &["is", "are", "was", "were", "am", "be", "been", "being", "'s"];
const NEGATIONS: &[&str] = &["not", "n't", "never"];

fn is_be_form(token: &str) -> bool {
    BE_FORMS.contains(&token.to_lowercase().as_str())
}

fn is_negation(form: &str) -> bool {
    NEGATIONS.contains(&form.to_lowercase().as_str())
}

fn is_subject_rel(deprel: &str) -> bool {
    matches!(deprel, "nsubj" | "nsubj:pass" | "csubj" | "csubj:pass")
}

fn is_aux_rel(deprel: &str) -> bool {
    deprel == "aux" || deprel == "aux:pass"
}

fn classify(complements: &[(Role, usize)]) -> ClauseKind {
    let has = |r: Role| complements.iter().any(|&(role, _)| role == r);
    if has(Role::DirectObject) {
        if has(Role::IndirectObject) {
            ClauseKind::SVOO
        } else if has(Role::Complement) {
            ClauseKind::SVOC
        } else if has(Role::Adverbial) {
            ClauseKind::SVOA
        } else {
            ClauseKind::SVO
        }
    } else if has(Role::Complement) {
        ClauseKind::SVC
    } else if has(Role::Adverbial) {
        ClauseKind::SVA
    } else {
        ClauseKind::SV
    }
}

/// Yield of the subtree at `head`: token indices in order, not descending
/// into appositive children below `head`, with leading and trailing
/// punctuation stripped.
fn phrase_yield(sentence: &DepSentence, head: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut stack = vec![head];
    while let Some(i) = stack.pop() {
        out.push(i);
        for c in sentence.children(i) {
            if sentence.deprels[c] != "appos" {
                stack.push(c);
            }
        }
    }
    out.sort_unstable();
    while let Some(&first) = out.first() {
        if sentence.tokens[first].upos == "PUNCT" {
            out.remove(0);
        } else {
            break;
        }
    }
    while let Some(&last) = out.last() {
        if sentence.tokens[last].upos == "PUNCT" {
            out.pop();
        } else {
            break;
        }
    }
    out
}

fn forms_of(sentence: &DepSentence, indices: &[usize]) -> Vec<String> {
    indices.iter().map(|&i| sentence.tokens[i].form.clone()).collect()
}

/// Collects typed complements from the children of a clause head.
fn collect_complements(sentence: &DepSentence, head: usize) -> Vec<(Role, usize)> {
    let mut complements = Vec::new();
    for c in sentence.children(head) {
        let rel = sentence.deprels[c].as_str();
        let role = if rel == "obj" || rel == "ccomp" {
            Some(Role::DirectObject)
        } else if rel == "iobj" {
            Some(Role::IndirectObject)
        } else if rel == "xcomp" {
            Some(Role::Complement)
        } else if rel.starts_with("obl") || rel == "advcl" {
            Some(Role::Adverbial)
        } else if rel == "advmod" && !is_negation(&sentence.tokens[c].form) {
            Some(Role::Adverbial)
        } else {
            None
        };
        if let Some(role) = role {
            complements.push((role, c));
        }
    }
    complements
}

/// Predicate token indices for a verbal clause head: auxiliaries, the verb
/// itself, verb particles, and negating adverbs, in token order.
fn verbal_predicate(sentence: &DepSentence, verb: usize) -> Vec<usize> {
    let mut indices = vec![verb];
    for c in sentence.children(verb) {
        let rel = sentence.deprels[c].as_str();
        if is_aux_rel(rel)
            || rel == "compound:prt"
            || (rel == "advmod" && is_negation(&sentence.tokens[c].form))
        {
            indices.push(c);
        }
    }
    indices.sort_unstable();
    indices
}

/// Detects clauses in one sentence, in clause-head token order. For a head
/// carrying both an appositive and its own clause, the appositive clause
/// comes first.
pub fn detect_clauses(sentence: &DepSentence) -> Vec<Clause> {
    let n = sentence.tokens.len();
    let mut clauses = Vec::new();
    for head in 0..n {
        // Appositive: synthesize "<head yield; is; appositive yield>".
        for c in sentence.children(head) {
            if sentence.deprels[c] == "appos" {
                let complements = vec![(Role::Complement, c)];
                clauses.push(Clause {
                    subject: head,
                    predicate: Predicate::ImplicitIs,
                    kind: classify(&complements),
                    complements,
                });
            }
        }

        let children = sentence.children(head);
        let subject = children
            .iter()
            .copied()
            .find(|&c| is_subject_rel(&sentence.deprels[c]));
        let Some(subject) = subject else { continue };
        let cop = children
            .iter()
            .copied()
            .find(|&c| sentence.deprels[c] == "cop");

        if let Some(cop) = cop {
            // Copular clause: the head is the predicative complement; the
            // predicate is the copula plus auxiliaries.
            let mut predicate: Vec<usize> = vec![cop];
            for &c in &children {
                if is_aux_rel(&sentence.deprels[c]) {
                    predicate.push(c);
                }
            }
            predicate.sort_unstable();
            let mut complements = vec![(Role::Complement, head)];
            for (role, c) in collect_complements(sentence, head) {
                if role == Role::Adverbial {
                    complements.push((Role::Adverbial, c));
                }
            }
            clauses.push(Clause {
                subject,
                predicate: Predicate::Tokens(predicate),
                kind: classify(&complements),
                complements,
            });
        } else if sentence.tokens[head].upos == "VERB" || sentence.tokens[head].upos == "AUX" {
            if is_aux_rel(&sentence.deprels[head]) || sentence.deprels[head] == "cop" {
                continue;
            }
            let complements = collect_complements(sentence, head);
            clauses.push(Clause {
                subject,
                predicate: Predicate::Tokens(verbal_predicate(sentence, head)),
                kind: classify(&complements),
                complements,
            });
        }
    }
    clauses
}

/// Renders a clause into assertions: the full clause, then reduced variants
/// that drop one adverbial each, emitted only while at least one other
/// complement remains.
pub fn clause_to_assertions(sentence: &DepSentence, clause: &Clause) -> Vec<Assertion> {
    let subject = forms_of(sentence, &phrase_yield(sentence, clause.subject));
    let predicate = match &clause.predicate {
        Predicate::Tokens(indices) => forms_of(sentence, indices),
        Predicate::ImplicitIs => vec!["is".to_string()],
    };
    if subject.is_empty() || predicate.is_empty() {
        return Vec::new();
    }

    let rendered: Vec<(Role, Vec<String>)> = clause
        .complements
        .iter()
        .map(|&(role, head)| {
            let mut y = phrase_yield(sentence, head);
            if role == Role::Complement && matches!(clause.predicate, Predicate::Tokens(_)) {
                // Copular head yield: drop the subject, copula, and
                // auxiliaries that hang off the predicative head.
                let exclude: Vec<usize> = sentence
                    .children(head)
                    .into_iter()
                    .filter(|&c| {
                        is_subject_rel(&sentence.deprels[c])
                            || sentence.deprels[c] == "cop"
                            || is_aux_rel(&sentence.deprels[c])
                            || sentence.deprels[c] == "punct"
                            || sentence.deprels[c] == "mark"
                            || sentence.deprels[c].starts_with("obl")
                            || sentence.deprels[c] == "advcl"
                    })
                    .flat_map(|c| sentence.subtree(c))
                    .collect();
                y.retain(|i| !exclude.contains(i));
            }
            (role, forms_of(sentence, &y))
        })
        .filter(|(_, tokens)| !tokens.is_empty())
        .collect();

    let build = |kept: &[(Role, Vec<String>)]| -> Option<Assertion> {
        let arguments: Vec<Vec<String>> = kept.iter().map(|(_, t)| t.clone()).collect();
        Assertion::new(subject.clone(), predicate.clone(), arguments).ok()
    };

    let mut out = Vec::new();
    if let Some(a) = build(&rendered) {
        out.push(a);
    }
    // Reduced variants: drop one adverbial, keep everything else.
    if rendered.len() > 1 {
        for (i, (role, _)) in rendered.iter().enumerate() {
            if *role == Role::Adverbial {
                let kept: Vec<(Role, Vec<String>)> = rendered
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, rc)| rc.clone())
                    .collect();
                if let Some(a) = build(&kept) {
                    out.push(a);
                }
            }
        }
    }
    out
}

fn all_be_form(predicate: &[String]) -> bool {
    !predicate.is_empty() && predicate.iter().all(|t| is_be_form(t))
}

fn lower(tokens: &[String]) -> Vec<String> {
    tokens.iter().map(|t| t.to_lowercase()).collect()
}

/// Composes identity assertions with facts about the same subject:
/// `<A; is; B>` + `<A; p; C...>` yields `<B; p; C...>` when the first
/// predicate is purely a be-form with a single argument and the second is
/// not a be-form. Returns only the new assertions, in discovery order.
/// Composition runs to a fixed point over the combined set, so applying it
/// again to input plus output adds nothing; composed assertions never have
/// be-form predicates, so identities never chain into new identities.
pub fn compose_is_a(assertions: &[Assertion]) -> Vec<Assertion> {
    let mut all: Vec<Assertion> = assertions.to_vec();
    let mut seen: Vec<Vec<Vec<String>>> = all.iter().map(Assertion::normalized_key).collect();
    let mut fresh: Vec<Assertion> = Vec::new();
    loop {
        let mut added = false;
        for xi in 0..all.len() {
            if !all_be_form(&all[xi].predicate) || all[xi].arguments.len() != 1 {
                continue;
            }
            let subject_key = lower(&all[xi].subject);
            let replacement = all[xi].arguments[0].clone();
            for yi in 0..all.len() {
                let composed = {
                    let fact = &all[yi];
                    if all_be_form(&fact.predicate) || lower(&fact.subject) != subject_key {
                        continue;
                    }
                    Assertion::new(
                        replacement.clone(),
                        fact.predicate.clone(),
                        fact.arguments.clone(),
                    )
                };
                let Ok(composed) = composed else { continue };
                let key = composed.normalized_key();
                if !seen.contains(&key) {
                    seen.push(key);
                    all.push(composed.clone());
                    fresh.push(composed);
                    added = true;
                }
            }
        }
        if !added {
            break;
        }
    }
    fresh
}

/// Extracts assertions from parsed sentences: per-sentence clause
/// detection, rendering, case-insensitive deduplication, then the is-a
/// composition pass appended at the end.
pub fn extract_from_sentences(sentences: &[DepSentence]) -> Vec<Assertion> {
    let mut out: Vec<Assertion> = Vec::new();
    let mut seen: Vec<Vec<Vec<String>>> = Vec::new();
    for sentence in sentences {
        for clause in detect_clauses(sentence) {
            for assertion in clause_to_assertions(sentence, &clause) {
                let key = assertion.normalized_key();
                if !seen.contains(&key) {
                    seen.push(key);
                    out.push(assertion);
                }
            }
        }
    }
    let composed = compose_is_a(&out);
    out.extend(composed);
    out
}

/// Extracts assertion candidates for one instance from its stored parses.
pub fn extract_candidates(instance: &QAInstance) -> Result<Vec<Assertion>> {
    Ok(extract_from_sentences(&instance.parsed_sentences()?))
}
