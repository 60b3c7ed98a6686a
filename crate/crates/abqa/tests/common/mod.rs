//! Synthetic corpora for end-to-end tests: templated subject-verb-object
//! facts with verb synonym pairs, so surface word overlap and the
//! translation-based features can be made to agree or disagree on purpose.
#![allow(dead_code)]

use abqa::corpus::{Assertion, Candidate, PassageSentence, QAInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SUBJECTS: &[&str] = &[
    "walt", "mary", "engineers", "tourists", "pioneers", "architects", "students", "miners",
    "farmers", "sailors", "nurses", "poets", "bakers", "monks", "rangers", "clerks",
];

/// (question verb, passage synonym) pairs; questions always use the first
/// form, passages may use either.
pub const VERBS: &[(&str, &str)] = &[
    ("built", "made"),
    ("opened", "launched"),
    ("visited", "toured"),
    ("designed", "planned"),
    ("repaired", "fixed"),
    ("funded", "financed"),
    ("founded", "established"),
    ("restored", "renovated"),
];

pub const OBJECTS: &[&str] = &[
    "park", "castle", "bridge", "museum", "tunnel", "stadium", "statue", "harbor", "temple",
    "library", "canal", "tower", "garden", "theater", "mill", "fountain",
];

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_string).collect()
}

fn candidate(fields: &[String], label: u8) -> Candidate {
    Candidate {
        assertion: Assertion::from_field_strings(fields).expect("template fields"),
        label: Some(label),
    }
}

/// Assertion-ranking instances: each question has one correct candidate
/// and three distractors. Every `ties_every`-th question states the fact
/// with the verb's synonym, and its first distractor is built to match
/// exactly as many question words as the correct candidate, so a ranker
/// with only the word-match feature scores a tie and the stable sort
/// keeps the distractor on top.
pub fn ranking_corpus(n: usize, ties_every: usize, seed: u64) -> Vec<QAInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let s = rng.gen_range(0..SUBJECTS.len());
        let v = rng.gen_range(0..VERBS.len());
        let o = rng.gen_range(0..OBJECTS.len());
        let s2 = (s + 1 + rng.gen_range(0..SUBJECTS.len() - 1)) % SUBJECTS.len();
        let v2 = (v + 1 + rng.gen_range(0..VERBS.len() - 1)) % VERBS.len();
        let o2 = (o + 1 + rng.gen_range(0..OBJECTS.len() - 1)) % OBJECTS.len();
        let o3 = (o2 + 1) % OBJECTS.len();
        let (qv, pv) = VERBS[v];
        let tie = i % ties_every == 0;
        let question = format!("who {qv} the {}", OBJECTS[o]);
        let correct = candidate(
            &[
                SUBJECTS[s].to_string(),
                if tie { pv } else { qv }.to_string(),
                format!("the {}", OBJECTS[o]),
            ],
            1,
        );
        // Shares {verb, "the"} with the question, as many words as a
        // synonym-stated correct candidate's {"the", object}.
        let tying = candidate(
            &[
                SUBJECTS[s2].to_string(),
                qv.to_string(),
                format!("the {}", OBJECTS[o2]),
            ],
            0,
        );
        let weak_a = candidate(
            &[
                SUBJECTS[s2].to_string(),
                VERBS[v2].1.to_string(),
                format!("a {}", OBJECTS[o2]),
            ],
            0,
        );
        let weak_b = candidate(
            &[
                SUBJECTS[(s2 + 1) % SUBJECTS.len()].to_string(),
                VERBS[(v2 + 1) % VERBS.len()].1.to_string(),
                format!("a {}", OBJECTS[o3]),
            ],
            0,
        );
        let candidates = vec![tying, correct, weak_a, weak_b];
        let passage = candidates
            .iter()
            .map(|c| c.assertion.all_tokens().join(" "))
            .collect::<Vec<_>>()
            .join(" . ");
        out.push(QAInstance {
            id: format!("q{i}"),
            question,
            passage,
            conllu: None,
            candidates,
            sentences: vec![],
        });
    }
    out
}

/// Word-aligned pairs covering the template lexicon: every verb form maps
/// to its question form, subjects map to "who", objects to themselves.
pub fn alignment_pairs() -> Vec<(Vec<String>, Vec<String>)> {
    let mut pairs = Vec::new();
    for (vi, (qv, pv)) in VERBS.iter().enumerate() {
        for (oi, obj) in OBJECTS.iter().enumerate() {
            let subj = SUBJECTS[(vi + oi) % SUBJECTS.len()];
            let target = words(&format!("who {qv} the {obj}"));
            pairs.push((words(&format!("{subj} {pv} the {obj}")), target.clone()));
            pairs.push((words(&format!("{subj} {qv} the {obj}")), target));
        }
    }
    pairs
}

/// Sentence pairs stating the same fact with the two verb forms.
pub fn paraphrase_corpus() -> Vec<(Vec<String>, Vec<String>)> {
    let mut pairs = Vec::new();
    for (vi, (qv, pv)) in VERBS.iter().enumerate() {
        for (oi, obj) in OBJECTS.iter().enumerate() {
            let subj = SUBJECTS[(vi + 2 * oi) % SUBJECTS.len()];
            pairs.push((
                words(&format!("{subj} {pv} the {obj}")),
                words(&format!("{subj} {qv} the {obj}")),
            ));
        }
    }
    pairs
}

/// Random token-sequence pairs with a planted word correspondence, for
/// alignment-training soundness checks.
pub fn em_pairs(n: usize, seed: u64) -> Vec<(Vec<String>, Vec<String>)> {
    const SRC: &[&str] = &[
        "ka", "lo", "mi", "ne", "po", "ra", "su", "te", "vu", "wa", "xi", "yo",
    ];
    const TGT: &[&str] = &[
        "ab", "cd", "ef", "gh", "ij", "kl", "mn", "op", "qr", "st", "uv", "wx",
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.gen_range(2..=6);
            let mut src = Vec::with_capacity(len);
            let mut tgt = Vec::with_capacity(len);
            for _ in 0..len {
                let w = rng.gen_range(0..SRC.len());
                src.push(SRC[w].to_string());
                // Mostly the paired word, sometimes noise.
                let t = if rng.gen_bool(0.8) {
                    w
                } else {
                    rng.gen_range(0..TGT.len())
                };
                tgt.push(TGT[t].to_string());
            }
            (src, tgt)
        })
        .collect()
}

fn verbal_block(subject: &str, verb: &str, object: &str) -> String {
    format!(
        "1\t{subject}\t{subject}\tPROPN\t_\t_\t2\tnsubj\t_\t_\n\
         2\t{verb}\t{verb}\tVERB\t_\t_\t0\troot\t_\t_\n\
         3\tthe\tthe\tDET\t_\t_\t4\tdet\t_\t_\n\
         4\t{object}\t{object}\tNOUN\t_\t_\t2\tobj\t_\t_"
    )
}

/// Same words parsed as a verbless noun phrase; clause detection finds
/// nothing in it.
fn nominal_block(object: &str, subject: &str, verb: &str) -> String {
    format!(
        "1\tthe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n\
         2\t{object}\t{object}\tNOUN\t_\t_\t0\troot\t_\t_\n\
         3\t{subject}\t{subject}\tPROPN\t_\t_\t2\tnmod\t_\t_\n\
         4\t{verb}\t{verb}\tNOUN\t_\t_\t2\tnmod\t_\t_"
    )
}

/// Answer-sentence-selection instances where both sentences carry the same
/// word multiset: only the dependency parse reveals which one states the
/// answering fact, so assertion-derived features add signal the surface
/// baseline cannot see.
pub fn selection_corpus(n: usize, seed: u64) -> Vec<QAInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let s = SUBJECTS[rng.gen_range(0..SUBJECTS.len())];
            let (qv, _) = VERBS[rng.gen_range(0..VERBS.len())];
            let o = OBJECTS[rng.gen_range(0..OBJECTS.len())];
            let correct = (format!("{s} {qv} the {o}"), verbal_block(s, qv, o), 1u8);
            let distract = (format!("the {o} {s} {qv}"), nominal_block(o, s, qv), 0u8);
            let ordered = if i % 2 == 0 {
                [correct, distract]
            } else {
                [distract, correct]
            };
            QAInstance {
                id: format!("s{i}"),
                question: format!("who {qv} the {o}"),
                passage: ordered
                    .iter()
                    .map(|(t, _, _)| t.clone())
                    .collect::<Vec<_>>()
                    .join(" . "),
                conllu: Some(
                    ordered
                        .iter()
                        .map(|(_, b, _)| b.clone())
                        .collect::<Vec<_>>()
                        .join("\n\n"),
                ),
                candidates: vec![],
                sentences: ordered
                    .iter()
                    .map(|(t, _, l)| PassageSentence {
                        text: t.clone(),
                        label: Some(*l),
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Pair corpus rendered as "source ||| target" lines.
pub fn pair_lines(pairs: &[(Vec<String>, Vec<String>)]) -> String {
    pairs
        .iter()
        .map(|(s, t)| format!("{} ||| {}\n", s.join(" "), t.join(" ")))
        .collect()
}

/// Pairwise matcher triples rendered as "question ||| positive ||| negative"
/// lines, sampled from labeled ranking instances.
pub fn triple_lines(instances: &[QAInstance], seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    abqa::matchers::training_triples(instances, &mut rng)
        .iter()
        .map(|t| format!("{} ||| {} ||| {}\n", t.question, t.positive, t.negative))
        .collect()
}
