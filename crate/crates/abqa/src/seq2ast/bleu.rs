//! Sentence- and corpus-level BLEU-4 for generated assertions.

use std::collections::HashMap;

fn ngram_counts<'a>(tokens: &[&'a str], n: usize) -> HashMap<Vec<&'a str>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            *counts.entry(window.to_vec()).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram matches and candidate n-gram total.
fn matches(candidate: &[&str], reference: &[&str], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let reference = ngram_counts(reference, n);
    let total: usize = cand.values().sum();
    let matched = cand
        .iter()
        .map(|(gram, &count)| count.min(reference.get(gram).copied().unwrap_or(0)))
        .sum();
    (matched, total)
}

fn score_from_counts(stats: &[(usize, usize); 4], cand_len: usize, ref_len: usize) -> f64 {
    if cand_len == 0 {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (n, &(num, den)) in stats.iter().enumerate() {
        // Add-one smoothing for higher orders with no matches keeps short
        // outputs scoreable; a zero unigram precision stays zero.
        let p = if num == 0 && n >= 1 {
            1.0 / (den + 1) as f64
        } else if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    let brevity = if cand_len <= ref_len {
        (1.0 - ref_len as f64 / cand_len as f64).exp()
    } else {
        1.0
    };
    100.0 * brevity * (log_sum / 4.0).exp()
}

/// BLEU-4 of a candidate string against one reference, both whitespace
/// tokenized. Scores are in [0, 100].
pub fn bleu4(candidate: &str, reference: &str) -> f64 {
    let cand: Vec<&str> = candidate.split_whitespace().collect();
    let reference: Vec<&str> = reference.split_whitespace().collect();
    let mut stats = [(0usize, 0usize); 4];
    for (n, slot) in stats.iter_mut().enumerate() {
        *slot = matches(&cand, &reference, n + 1);
    }
    score_from_counts(&stats, cand.len(), reference.len())
}

/// Corpus BLEU-4: n-gram counts and lengths pool over all pairs before
/// the precision and brevity terms are formed.
pub fn corpus_bleu4(pairs: &[(String, String)]) -> f64 {
    let mut stats = [(0usize, 0usize); 4];
    let mut cand_len = 0;
    let mut ref_len = 0;
    for (candidate, reference) in pairs {
        let cand: Vec<&str> = candidate.split_whitespace().collect();
        let reference: Vec<&str> = reference.split_whitespace().collect();
        cand_len += cand.len();
        ref_len += reference.len();
        for (n, slot) in stats.iter_mut().enumerate() {
            let (m, t) = matches(&cand, &reference, n + 1);
            slot.0 += m;
            slot.1 += t;
        }
    }
    score_from_counts(&stats, cand_len, ref_len)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identical_sentences_score_one_hundred() {
        assert_eq!(bleu4("the park opened in 1955", "the park opened in 1955"), 100.0);
    }

    #[test]
    fn disjoint_sentences_score_zero() {
        assert_eq!(bleu4("alpha beta gamma delta", "one two three four"), 0.0);
        assert_eq!(bleu4("", "the park"), 0.0);
    }

    #[test]
    fn short_perfect_prefix_is_penalized_only_for_brevity() {
        // Both unigrams and the single bigram match; orders three and
        // four smooth to one, so only the length penalty e^(1 - 3/2)
        // remains.
        let score = bleu4("the cat", "the cat sat");
        assert_eq!(score, 60.653065971263345);
        assert!((score - 100.0 * (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn corpus_score_pools_counts_rather_than_averaging() {
        let pairs = vec![
            ("the cat".to_string(), "the cat sat".to_string()),
            ("a dog ran away".to_string(), "a dog ran away".to_string()),
        ];
        let pooled = corpus_bleu4(&pairs);
        let mean = (bleu4("the cat", "the cat sat") + bleu4("a dog ran away", "a dog ran away")) / 2.0;
        assert!(pooled > 0.0);
        assert_ne!(pooled, mean);
        // Pooled lengths: c = 6, r = 7; p3 = (1+1)/(2+1) with the real
        // trigram matches from the second pair.
        assert!(pooled < 100.0);
    }

    #[test]
    fn longer_overlap_scores_higher() {
        let reference = "the park opened in anaheim in 1955";
        let close = bleu4("the park opened in anaheim", reference);
        let far = bleu4("the park closed near anaheim", reference);
        assert!(close > far);
    }

    proptest! {
        #[test]
        fn scores_stay_in_range(
            cand in proptest::collection::vec("[a-d]{1,3}", 0..8),
            reference in proptest::collection::vec("[a-d]{1,3}", 1..8),
        ) {
            let score = bleu4(&cand.join(" "), &reference.join(" "));
            prop_assert!((0.0..=100.0).contains(&score));
        }

        #[test]
        fn identity_is_always_perfect(tokens in proptest::collection::vec("[a-f]{1,4}", 1..10)) {
            let text = tokens.join(" ");
            prop_assert_eq!(bleu4(&text, &text), 100.0);
        }
    }
}
