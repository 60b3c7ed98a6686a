//! Word- and phrase-level relevance features between a question and an
//! assertion: bag-of-words overlap, a word translation model trained with
//! EM, and phrase-table scores over pairs extracted from word alignments.
//!
//! Direction convention: the assertion (answer) side is the source, the
//! question side is the target; models estimate t(question word | answer
//! word). Training is single-threaded; trained tables are immutable and can
//! be shared across threads, and all feature functions are pure.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Reserved source token representing the empty alignment target. The
/// tokenizer strips angle brackets, so no corpus token can collide with it.
pub const NULL_SOURCE: &str = "<null>";

/// Probability floor for unknown words and uncovered positions in the
/// log-space features.
pub const PROB_FLOOR: f64 = 1e-9;

/// Word translation probabilities t(target | source), sparse over pairs
/// that co-occurred in training. Every source row sums to 1 within 1e-6.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TranslationTable {
    // source -> target -> probability
    t: BTreeMap<String, BTreeMap<String, f64>>,
}

impl TranslationTable {
    /// t(target|source); 0 for pairs never seen together.
    pub fn prob(&self, target: &str, source: &str) -> f64 {
        self.t
            .get(source)
            .and_then(|row| row.get(target))
            .copied()
            .unwrap_or(0.0)
    }

    /// Source vocabulary, including the NULL token.
    pub fn sources(&self) -> impl Iterator<Item = &str> {
        self.t.keys().map(String::as_str)
    }

    /// Sum of probabilities in one source row; 0 for unknown sources.
    pub fn row_sum(&self, source: &str) -> f64 {
        self.t
            .get(source)
            .map(|row| row.values().sum())
            .unwrap_or(0.0)
    }

    /// All (target, source, probability) entries in (target, source) order.
    pub fn entries(&self) -> Vec<(String, String, f64)> {
        let mut out: Vec<(String, String, f64)> = self
            .t
            .iter()
            .flat_map(|(s, row)| row.iter().map(move |(w, &p)| (w.clone(), s.clone(), p)))
            .collect();
        out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
        out
    }

    /// Serializes as "target source probability" lines in sorted order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (target, source, p) in self.entries() {
            out.push_str(&format!("{target} {source} {p:.12e}\n"));
        }
        out
    }

    /// Parses the line format written by [`TranslationTable::to_text`].
    pub fn from_text(text: &str) -> Result<Self> {
        let mut t: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::Data(format!(
                    "translation table line {}: expected 'target source probability'",
                    idx + 1
                )));
            }
            let p: f64 = parts[2].parse().map_err(|_| {
                Error::Data(format!(
                    "translation table line {}: bad probability {:?}",
                    idx + 1,
                    parts[2]
                ))
            })?;
            t.entry(parts[1].to_string())
                .or_default()
                .insert(parts[0].to_string(), p);
        }
        Ok(TranslationTable { t })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Trains IBM Model 1 by EM: uniform initialization over co-occurring
/// (source, target) pairs with a NULL source added to every pair, then
/// `iterations` rounds of expected-count collection and per-source
/// renormalization.
pub fn train_model1(
    pairs: &[(Vec<String>, Vec<String>)],
    iterations: usize,
) -> Result<TranslationTable> {
    if pairs.is_empty() {
        return Err(Error::EmptyInput("translation training corpus".into()));
    }
    if iterations == 0 {
        return Err(Error::Config("iterations must be at least 1".into()));
    }

    // Uniform initialization over targets co-occurring with each source.
    let mut t: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for (source, target) in pairs {
        for s in source.iter().map(String::as_str).chain([NULL_SOURCE]) {
            let row = t.entry(s.to_string()).or_default();
            for w in target {
                row.insert(w.clone(), 0.0);
            }
        }
    }
    for row in t.values_mut() {
        let u = 1.0 / row.len() as f64;
        for p in row.values_mut() {
            *p = u;
        }
    }

    for _ in 0..iterations {
        let mut counts: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for (source, target) in pairs {
            let sources: Vec<&str> = source.iter().map(String::as_str).chain([NULL_SOURCE]).collect();
            for w in target {
                let denom: f64 = sources.iter().map(|s| t[*s][w.as_str()]).sum();
                for s in &sources {
                    *counts
                        .entry((*s).to_string())
                        .or_default()
                        .entry(w.clone())
                        .or_insert(0.0) += t[*s][w.as_str()] / denom;
                }
            }
        }
        for (s, row) in counts {
            let total: f64 = row.values().sum();
            let target_row = t.get_mut(&s).expect("source seen during init");
            for (w, c) in row {
                target_row.insert(w, c / total);
            }
        }
    }
    Ok(TranslationTable { t })
}

/// Corpus log-likelihood under the table: Σ over target positions of
/// log[(1/(l+1)) Σ_source t(w|s)], NULL included. Non-decreasing across EM
/// iterations.
pub fn log_likelihood(pairs: &[(Vec<String>, Vec<String>)], table: &TranslationTable) -> f64 {
    let mut ll = 0.0;
    for (source, target) in pairs {
        let norm = 1.0 / (source.len() as f64 + 1.0);
        for w in target {
            let inner: f64 = source
                .iter()
                .map(String::as_str)
                .chain([NULL_SOURCE])
                .map(|s| table.prob(w, s))
                .sum();
            ll += (norm * inner.max(PROB_FLOOR)).ln();
        }
    }
    ll
}

/// Word-match feature: fraction of distinct question words that also occur
/// among the assertion tokens. 0 for an empty question.
pub fn f_wm(question: &[String], assertion: &[String]) -> f64 {
    if question.is_empty() {
        return 0.0;
    }
    let q: std::collections::BTreeSet<&str> = question.iter().map(String::as_str).collect();
    let a: std::collections::BTreeSet<&str> = assertion.iter().map(String::as_str).collect();
    q.intersection(&a).count() as f64 / q.len() as f64
}

/// Word translation feature: length-normalized Model 1 log-probability of
/// the question given the assertion tokens,
/// (1/|q|) Σ_j log[(1/(|ast|+1)) Σ_i t(q_j|ast_i)], with the inner
/// probability floored at 1e-9 for unknown words.
pub fn f_w2w(question: &[String], assertion: &[String], table: &TranslationTable) -> Result<f64> {
    if question.is_empty() {
        return Err(Error::EmptyInput("question for word translation feature".into()));
    }
    let norm = 1.0 / (assertion.len() as f64 + 1.0);
    let mut total = 0.0;
    for w in question {
        let inner: f64 = assertion
            .iter()
            .map(String::as_str)
            .chain([NULL_SOURCE])
            .map(|s| table.prob(w, s))
            .sum();
        total += (norm * inner).max(PROB_FLOOR).ln();
    }
    Ok(total / question.len() as f64)
}

/// Aligns each target word to its most probable source word. Returns
/// (target index, source index) links; words whose best source is NULL are
/// dropped. Ties break toward the lower source index, and a real source
/// beats NULL on an exact tie.
pub fn align_viterbi(
    source: &[String],
    target: &[String],
    table: &TranslationTable,
) -> Vec<(usize, usize)> {
    let mut links = Vec::new();
    for (j, w) in target.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (i, s) in source.iter().enumerate() {
            let p = table.prob(w, s);
            if best.map_or(true, |(_, bp)| p > bp) {
                best = Some((i, p));
            }
        }
        if let Some((i, p)) = best {
            // NULL wins only with strictly higher probability; a word with
            // zero probability everywhere stays unaligned.
            if p > 0.0 && p >= table.prob(w, NULL_SOURCE) {
                links.push((j, i));
            }
        }
    }
    links
}

/// Extracts every phrase pair up to `max_len` tokens per side that is
/// consistent with the alignment: at least one link inside the rectangle
/// and no link connecting an inside word to an outside one. Rectangles may
/// extend over unaligned target words. Output is sorted by source then
/// target phrase.
pub fn extract_phrases(
    source: &[String],
    target: &[String],
    alignment: &[(usize, usize)],
    max_len: usize,
) -> Vec<(Vec<String>, Vec<String>)> {
    let mut out = Vec::new();
    if alignment.is_empty() || max_len == 0 {
        return out;
    }
    let aligned_t: Vec<bool> = {
        let mut v = vec![false; target.len()];
        for &(j, _) in alignment {
            v[j] = true;
        }
        v
    };
    for i1 in 0..source.len() {
        for i2 in i1..source.len().min(i1 + max_len) {
            let tp: Vec<usize> = alignment
                .iter()
                .filter(|&&(_, i)| i >= i1 && i <= i2)
                .map(|&(j, _)| j)
                .collect();
            let Some(&jmin) = tp.iter().min() else { continue };
            let jmax = *tp.iter().max().expect("non-empty");
            // Every link landing inside [jmin, jmax] must come from inside
            // [i1, i2], otherwise no target window is consistent.
            if alignment
                .iter()
                .any(|&(j, i)| j >= jmin && j <= jmax && (i < i1 || i > i2))
            {
                continue;
            }
            // Expand over unaligned boundary words.
            let mut j1 = jmin;
            while j1 > 0 && !aligned_t[j1 - 1] {
                j1 -= 1;
            }
            let mut j2 = jmax;
            while j2 + 1 < target.len() && !aligned_t[j2 + 1] {
                j2 += 1;
            }
            for a in j1..=jmin {
                for b in jmax..=j2 {
                    if b - a + 1 <= max_len {
                        out.push((source[i1..=i2].to_vec(), target[a..=b].to_vec()));
                    }
                }
            }
        }
    }
    out.sort();
    out
}

/// Phrase translation scores p(target phrase | source phrase) estimated by
/// relative frequency over extracted phrase pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct PhraseTable {
    // (source phrase, target phrase) -> probability, phrases space-joined
    entries: BTreeMap<(String, String), f64>,
    pub max_len: usize,
}

impl PhraseTable {
    pub fn new(entries: BTreeMap<(String, String), f64>, max_len: usize) -> Self {
        PhraseTable { entries, max_len }
    }

    pub fn prob(&self, source: &str, target: &str) -> f64 {
        self.entries
            .get(&(source.to_string(), target.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &f64)> {
        self.entries.iter()
    }

    /// Serializes as "src ||| tgt ||| prob" lines in key order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for ((s, t), p) in &self.entries {
            out.push_str(&format!("{s} ||| {t} ||| {p:.12e}\n"));
        }
        out
    }

    pub fn from_text(text: &str, max_len: usize) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(" ||| ").collect();
            if parts.len() != 3 {
                return Err(Error::Data(format!(
                    "phrase table line {}: expected 'src ||| tgt ||| prob'",
                    idx + 1
                )));
            }
            let p: f64 = parts[2].trim().parse().map_err(|_| {
                Error::Data(format!("phrase table line {}: bad probability", idx + 1))
            })?;
            entries.insert((parts[0].to_string(), parts[1].to_string()), p);
        }
        Ok(PhraseTable { entries, max_len })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path, max_len: usize) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?, max_len)
    }
}

/// Builds a phrase table from a parallel corpus: Viterbi-align each pair,
/// extract consistent phrase pairs, then estimate p(tgt|src) by relative
/// frequency, so each source row sums to 1.
pub fn build_phrase_table(
    corpus: &[(Vec<String>, Vec<String>)],
    table: &TranslationTable,
    max_len: usize,
) -> PhraseTable {
    let mut counts: BTreeMap<(String, String), f64> = BTreeMap::new();
    let mut source_totals: BTreeMap<String, f64> = BTreeMap::new();
    for (source, target) in corpus {
        let alignment = align_viterbi(source, target, table);
        for (s, t) in extract_phrases(source, target, &alignment, max_len) {
            let key = (s.join(" "), t.join(" "));
            *source_totals.entry(key.0.clone()).or_insert(0.0) += 1.0;
            *counts.entry(key).or_insert(0.0) += 1.0;
        }
    }
    let entries = counts
        .into_iter()
        .map(|((s, t), c)| {
            let p = c / source_totals[&s];
            ((s, t), p)
        })
        .collect();
    PhraseTable::new(entries, max_len)
}

fn occurs_in(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Phrase feature: for each question position, the maximum probability of a
/// phrase-table entry whose source phrase occurs in the assertion and whose
/// target phrase covers that position; uncovered positions take the 1e-9
/// floor. Returns the average of the logs.
pub fn f_phrase(question: &[String], assertion: &[String], pt: &PhraseTable) -> f64 {
    if question.is_empty() {
        return PROB_FLOOR.ln();
    }
    let mut best = vec![0.0f64; question.len()];
    for ((s, t), &p) in pt.iter() {
        let s_tokens: Vec<String> = s.split(' ').map(str::to_string).collect();
        let t_tokens: Vec<String> = t.split(' ').map(str::to_string).collect();
        if !occurs_in(assertion, &s_tokens) {
            continue;
        }
        let n = t_tokens.len();
        if n > question.len() {
            continue;
        }
        for (start, w) in question.windows(n).enumerate() {
            if w == t_tokens.as_slice() {
                for b in &mut best[start..start + n] {
                    if p > *b {
                        *b = p;
                    }
                }
            }
        }
    }
    best.iter().map(|&p| p.max(PROB_FLOOR).ln()).sum::<f64>() / question.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::tokenize;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    fn toy_pairs() -> Vec<(Vec<String>, Vec<String>)> {
        vec![(toks("a b"), toks("x y")), (toks("a"), toks("x"))]
    }

    #[test]
    fn one_pair_corpus_converges_to_certainty() {
        let table = train_model1(&[(toks("a"), toks("x"))], 2).unwrap();
        assert!((table.prob("x", "a") - 1.0).abs() < 1e-6);
    }

    #[test]
    fn two_em_rounds_match_hand_computation() {
        // Two EM rounds by hand: after round 1, t(x|a) = 5/7; after round 2
        // the expected counts give t(x|a) = 235/307, t(y|a) = 72/307,
        // t(x|b) = 5/14, t(y|b) = 9/14, and NULL mirrors "a" because both
        // co-occur with every target word.
        let table = train_model1(&toy_pairs(), 2).unwrap();
        let expect = [
            ("x", "a", 235.0 / 307.0),
            ("y", "a", 72.0 / 307.0),
            ("x", "b", 5.0 / 14.0),
            ("y", "b", 9.0 / 14.0),
            ("x", NULL_SOURCE, 235.0 / 307.0),
            ("y", NULL_SOURCE, 72.0 / 307.0),
        ];
        for (t, s, p) in expect {
            assert!(
                (table.prob(t, s) - p).abs() < 1e-12,
                "t({t}|{s}) = {} expected {p}",
                table.prob(t, s)
            );
        }
        assert!(table.prob("x", "a") > table.prob("y", "a"));
    }

    #[test]
    fn rows_normalize_after_every_iteration() {
        for iters in 1..=10 {
            let table = train_model1(&toy_pairs(), iters).unwrap();
            for s in ["a", "b", NULL_SOURCE] {
                assert!((table.row_sum(s) - 1.0).abs() < 1e-6, "iteration {iters}");
            }
        }
    }

    #[test]
    fn log_likelihood_is_monotone_in_iterations() {
        let mut prev = f64::NEG_INFINITY;
        for iters in 1..=8 {
            let table = train_model1(&toy_pairs(), iters).unwrap();
            let ll = log_likelihood(&toy_pairs(), &table);
            assert!(ll >= prev - 1e-12, "iteration {iters}: {ll} < {prev}");
            prev = ll;
        }
    }

    #[test]
    fn empty_corpus_is_rejected() {
        assert!(train_model1(&[], 2).is_err());
        assert!(train_model1(&toy_pairs(), 0).is_err());
    }

    #[test]
    fn word_match_counts_distinct_overlap() {
        let q = toks("a b a");
        assert!((f_wm(&q, &toks("a b c")) - 1.0).abs() < 1e-12);
        assert_eq!(f_wm(&q, &toks("z")), 0.0);
        assert_eq!(f_wm(&[], &toks("a")), 0.0);
        // Half of {a, b} covered.
        assert!((f_wm(&q, &toks("a z")) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn word_match_is_zero_without_lexical_overlap() {
        let q = tokenize("who killed jfk");
        let a = tokenize("Kennedy was assassinated by Lee Harvey Oswald");
        assert_eq!(f_wm(&q, &a), 0.0);
    }

    #[test]
    fn word_translation_feature_on_oracle_table() {
        let table = train_model1(&toy_pairs(), 2).unwrap();
        // (1/2)(t(x|a) + t(x|NULL)) with both equal to 235/307.
        let expected = (235.0f64 / 307.0).ln();
        let got = f_w2w(&toks("x"), &toks("a"), &table).unwrap();
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn uniform_table_collapses_to_vocabulary_size() {
        // Symmetric corpus keeps every probability at 1/2.
        let pairs = vec![
            (toks("a"), toks("x")),
            (toks("a"), toks("y")),
            (toks("b"), toks("x")),
            (toks("b"), toks("y")),
        ];
        let table = train_model1(&pairs, 1).unwrap();
        let got = f_w2w(&toks("x"), &toks("a"), &table).unwrap();
        assert!((got - (0.5f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn unknown_question_words_hit_the_floor() {
        let table = train_model1(&toy_pairs(), 2).unwrap();
        let got = f_w2w(&toks("zzz"), &toks("a"), &table).unwrap();
        assert!((got - PROB_FLOOR.ln()).abs() < 1e-12);
        assert!(f_w2w(&[], &toks("a"), &table).is_err());
    }

    #[test]
    fn viterbi_aligns_to_argmax_and_drops_null() {
        let table = train_model1(&[(toks("a"), toks("x"))], 2).unwrap();
        assert_eq!(align_viterbi(&toks("a"), &toks("x"), &table), vec![(0, 0)]);

        // In the toy table, t(x|a) == t(x|NULL): the real word wins the
        // tie, so the link survives. "y" prefers "b" strictly.
        let table = train_model1(&toy_pairs(), 2).unwrap();
        assert_eq!(
            align_viterbi(&toks("a b"), &toks("x y"), &table),
            vec![(0, 0), (1, 1)]
        );
    }

    #[test]
    fn viterbi_tie_breaks_to_lower_source_index() {
        // Duplicate source tokens give exactly equal probabilities.
        let table = train_model1(&[(toks("a a"), toks("x"))], 3).unwrap();
        assert_eq!(align_viterbi(&toks("a a"), &toks("x"), &table), vec![(0, 0)]);
    }

    #[test]
    fn diagonal_alignment_extracts_three_phrases() {
        let got = extract_phrases(&toks("a b"), &toks("x y"), &[(0, 0), (1, 1)], 2);
        assert_eq!(
            got,
            vec![
                (toks("a"), toks("x")),
                (toks("a b"), toks("x y")),
                (toks("b"), toks("y")),
            ]
        );
    }

    #[test]
    fn no_links_no_phrases() {
        assert!(extract_phrases(&toks("a b"), &toks("x y"), &[], 2).is_empty());
    }

    #[test]
    fn phrase_table_rows_are_distributions() {
        let pairs = vec![
            (toks("a b"), toks("x y")),
            (toks("a"), toks("x")),
            (toks("b"), toks("y")),
        ];
        let table = train_model1(&pairs, 3).unwrap();
        let pt = build_phrase_table(&pairs, &table, 2);
        assert!(!pt.is_empty());
        let mut sums: BTreeMap<String, f64> = BTreeMap::new();
        for ((s, _), p) in pt.iter() {
            assert!(*p > 0.0 && *p <= 1.0);
            *sums.entry(s.clone()).or_insert(0.0) += p;
        }
        for (s, total) in sums {
            assert!((total - 1.0).abs() < 1e-6, "row {s} sums to {total}");
        }
    }

    #[test]
    fn phrase_feature_examples() {
        let mut entries = BTreeMap::new();
        entries.insert(("will open".to_string(), "open".to_string()), 1.0);
        let pt = PhraseTable::new(entries, 4);
        let got = f_phrase(&toks("open"), &toks("will open"), &pt);
        assert!(got.abs() < 1e-12);

        let empty = PhraseTable::new(BTreeMap::new(), 4);
        let got = f_phrase(&toks("open"), &toks("will open"), &empty);
        assert!((got - PROB_FLOOR.ln()).abs() < 1e-12);
    }

    #[test]
    fn phrase_feature_mixed_cover_by_hand() {
        // "open soon": position 0 covered with p=0.5, position 1 uncovered.
        let mut entries = BTreeMap::new();
        entries.insert(("will open".to_string(), "open".to_string()), 0.5);
        entries.insert(("never".to_string(), "soon".to_string()), 0.25);
        let pt = PhraseTable::new(entries, 4);
        let got = f_phrase(&toks("open soon"), &toks("will open now"), &pt);
        let expected = (0.5f64.ln() + PROB_FLOOR.ln()) / 2.0;
        assert!((got - expected).abs() < 1e-12);
    }

    #[test]
    fn table_round_trips_through_text() {
        let table = train_model1(&toy_pairs(), 2).unwrap();
        let back = TranslationTable::from_text(&table.to_text()).unwrap();
        for (t, s, p) in table.entries() {
            assert!((back.prob(&t, &s) - p).abs() < 1e-12);
        }

        let pt = build_phrase_table(&toy_pairs(), &table, 2);
        let back = PhraseTable::from_text(&pt.to_text(), 2).unwrap();
        assert_eq!(back, pt);
    }

    /// Brute-force oracle: enumerate all rectangles and keep those with at
    /// least one link inside and no link crossing the border.
    fn phrases_by_enumeration(
        source: &[String],
        target: &[String],
        alignment: &[(usize, usize)],
        max_len: usize,
    ) -> Vec<(Vec<String>, Vec<String>)> {
        let mut out = Vec::new();
        for i1 in 0..source.len() {
            for i2 in i1..source.len() {
                if i2 - i1 + 1 > max_len {
                    continue;
                }
                for j1 in 0..target.len() {
                    for j2 in j1..target.len() {
                        if j2 - j1 + 1 > max_len {
                            continue;
                        }
                        let mut inside = false;
                        let mut crossing = false;
                        for &(j, i) in alignment {
                            let i_in = i >= i1 && i <= i2;
                            let j_in = j >= j1 && j <= j2;
                            inside |= i_in && j_in;
                            crossing |= i_in != j_in;
                        }
                        if inside && !crossing {
                            out.push((source[i1..=i2].to_vec(), target[j1..=j2].to_vec()));
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    proptest! {
        #[test]
        fn extraction_matches_rectangle_enumeration(
            ls in 1usize..=5,
            lt in 1usize..=5,
            links in proptest::collection::vec((0usize..5, 0usize..5), 0..8),
            max_len in 1usize..=5,
        ) {
            let source: Vec<String> = (0..ls).map(|i| format!("s{i}")).collect();
            let target: Vec<String> = (0..lt).map(|j| format!("t{j}")).collect();
            let mut alignment: Vec<(usize, usize)> = links
                .into_iter()
                .filter(|&(j, i)| j < lt && i < ls)
                .collect();
            alignment.sort_unstable();
            alignment.dedup();
            let fast = extract_phrases(&source, &target, &alignment, max_len);
            let slow = phrases_by_enumeration(&source, &target, &alignment, max_len);
            prop_assert_eq!(fast, slow);
        }

        #[test]
        fn word_match_ignores_token_order(
            q in proptest::collection::vec("[a-d]", 1..6),
            a in proptest::collection::vec("[a-d]", 0..6),
            seed in 0u64..1000,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut q2 = q.clone();
            let mut a2 = a.clone();
            q2.shuffle(&mut rng);
            a2.shuffle(&mut rng);
            prop_assert_eq!(f_wm(&q, &a), f_wm(&q2, &a2));
        }

        #[test]
        fn training_rows_always_normalize(
            pair_specs in proptest::collection::vec(
                (proptest::collection::vec("[a-c]", 1..4),
                 proptest::collection::vec("[x-z]", 1..4)),
                1..5),
            iters in 1usize..=4,
        ) {
            let pairs: Vec<(Vec<String>, Vec<String>)> = pair_specs;
            let table = train_model1(&pairs, iters).unwrap();
            let sources: Vec<String> = table.sources().map(str::to_string).collect();
            for s in sources {
                prop_assert!((table.row_sum(&s) - 1.0).abs() < 1e-6);
            }
            let ll1 = log_likelihood(&pairs, &train_model1(&pairs, iters).unwrap());
            let ll2 = log_likelihood(&pairs, &train_model1(&pairs, iters + 1).unwrap());
            prop_assert!(ll2 >= ll1 - 1e-9);
        }
    }
}
