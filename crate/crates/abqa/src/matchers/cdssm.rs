//! Convolutional twin-tower matcher. Each side hashes its tokens into
//! letter-trigram count vectors, embeds them, runs a windowed convolution
//! with max pooling, and projects into a shared semantic space; the score
//! is the cosine of the two projections. The towers share structure but
//! not parameters.

use rand::Rng;

use crate::corpus::Assertion;
use crate::matchers::{assertion_text, matcher_tokens, PairwiseMatcher};
use crate::neuralcore::{
    conv1d_maxpool, conv1d_maxpool_backward, cosine_backward, Conv1dCache, Conv1dParams,
    ParamGroup, Tensor, INIT_SCALE,
};
use crate::{Error, Result};

pub const DEFAULT_HASH_BUCKETS: usize = 2048;

/// Both sides of cosine reject norms below this; the matcher maps that
/// case to score 0 instead of erroring.
const ZERO_NORM: f64 = 1e-30;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Letter-trigram counts of one token, bucketed by hash. The token is
/// padded with `#` on both sides, so every non-empty token yields at
/// least one trigram.
pub fn trigram_buckets(token: &str, buckets: usize) -> Vec<(usize, f64)> {
    let padded: Vec<char> = std::iter::once('#')
        .chain(token.chars())
        .chain(std::iter::once('#'))
        .collect();
    let mut counts = std::collections::BTreeMap::new();
    for window in padded.windows(3) {
        let tri: String = window.iter().collect();
        let bucket = (fnv1a(tri.as_bytes()) % buckets as u64) as usize;
        *counts.entry(bucket).or_insert(0.0) += 1.0;
    }
    counts.into_iter().collect()
}

/// One encoding tower: trigram embedding, convolution with max pooling,
/// and a tanh projection into the semantic space.
#[derive(Debug, Clone)]
pub struct CdssmTower {
    /// buckets × embed_dim; a token's vector is the count-weighted sum of
    /// its trigram rows.
    pub emb: Tensor,
    pub conv: Conv1dParams,
    /// sem_dim × filters.
    pub wp: Tensor,
    pub bp: Tensor,
}

impl CdssmTower {
    pub fn new(
        buckets: usize,
        embed_dim: usize,
        window: usize,
        filters: usize,
        sem_dim: usize,
        rng: &mut impl Rng,
    ) -> CdssmTower {
        CdssmTower {
            emb: Tensor::uniform(&[buckets, embed_dim], INIT_SCALE, rng),
            conv: Conv1dParams::new(embed_dim, window, filters, rng),
            wp: Tensor::uniform(&[sem_dim, filters], INIT_SCALE, rng),
            bp: Tensor::zeros(&[sem_dim]),
        }
    }

    pub fn zeros_like(&self) -> CdssmTower {
        CdssmTower {
            emb: self.emb.zeros_like(),
            conv: Conv1dParams::zeros(
                self.conv.input_dim(),
                self.conv.window,
                self.conv.filters(),
            ),
            wp: self.wp.zeros_like(),
            bp: self.bp.zeros_like(),
        }
    }

    pub fn buckets(&self) -> usize {
        self.emb.rows()
    }

    fn encode(&self, tokens: &[String]) -> Result<(Vec<f64>, TowerCache)> {
        if tokens.is_empty() {
            return Err(Error::EmptyInput("tower input tokens".into()));
        }
        let d = self.emb.cols();
        let trigrams: Vec<Vec<(usize, f64)>> = tokens
            .iter()
            .map(|t| trigram_buckets(t, self.buckets()))
            .collect();
        let mut seq = Tensor::zeros(&[tokens.len(), d]);
        for (t, tris) in trigrams.iter().enumerate() {
            let row = seq.row_mut(t);
            for &(bucket, count) in tris {
                for (r, &e) in row.iter_mut().zip(self.emb.row(bucket)) {
                    *r += count * e;
                }
            }
        }
        let (pooled, conv_cache) = conv1d_maxpool(&self.conv, &seq)?;
        let mut sem = self.wp.matvec(pooled.data());
        for (s, &b) in sem.iter_mut().zip(self.bp.data()) {
            *s = (*s + b).tanh();
        }
        Ok((
            sem.clone(),
            TowerCache {
                trigrams,
                conv_cache,
                pooled,
                sem,
            },
        ))
    }

    fn backward(&self, cache: &TowerCache, dsem: &[f64], grads: &mut CdssmTower) {
        let dpre: Vec<f64> = dsem
            .iter()
            .zip(&cache.sem)
            .map(|(&d, &s)| d * (1.0 - s * s))
            .collect();
        grads.wp.add_outer(&dpre, cache.pooled.data());
        grads.bp.add_slice(&dpre);
        let dpooled = self.wp.matvec_t(&dpre);
        let dseq = conv1d_maxpool_backward(&self.conv, &cache.conv_cache, &dpooled, &mut grads.conv);
        for (t, tris) in cache.trigrams.iter().enumerate() {
            for &(bucket, count) in tris {
                let row = grads.emb.row_mut(bucket);
                for (g, &d) in row.iter_mut().zip(dseq.row(t)) {
                    *g += count * d;
                }
            }
        }
    }
}

struct TowerCache {
    trigrams: Vec<Vec<(usize, f64)>>,
    conv_cache: Conv1dCache,
    pooled: Tensor,
    sem: Vec<f64>,
}

/// The full matcher: independent question and assertion towers.
#[derive(Debug, Clone)]
pub struct CdssmParams {
    pub question: CdssmTower,
    pub assertion: CdssmTower,
}

impl CdssmParams {
    pub fn new(
        buckets: usize,
        embed_dim: usize,
        window: usize,
        filters: usize,
        sem_dim: usize,
        rng: &mut impl Rng,
    ) -> CdssmParams {
        CdssmParams {
            question: CdssmTower::new(buckets, embed_dim, window, filters, sem_dim, rng),
            assertion: CdssmTower::new(buckets, embed_dim, window, filters, sem_dim, rng),
        }
    }

    pub fn zeros_like(&self) -> CdssmParams {
        CdssmParams {
            question: self.question.zeros_like(),
            assertion: self.assertion.zeros_like(),
        }
    }
}

impl ParamGroup for CdssmParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = Vec::new();
        for (side, tower) in [("q", &self.question), ("a", &self.assertion)] {
            out.push((format!("{side}/emb"), &tower.emb));
            out.push((format!("{side}/conv_w"), &tower.conv.w));
            out.push((format!("{side}/conv_b"), &tower.conv.b));
            out.push((format!("{side}/wp"), &tower.wp));
            out.push((format!("{side}/bp"), &tower.bp));
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        for tower in [&mut self.question, &mut self.assertion] {
            out.push(&mut tower.emb);
            out.push(&mut tower.conv.w);
            out.push(&mut tower.conv.b);
            out.push(&mut tower.wp);
            out.push(&mut tower.bp);
        }
        out
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl PairwiseMatcher for CdssmParams {
    fn score(&self, question: &str, text: &str) -> Result<f64> {
        let (sq, _) = self.question.encode(&matcher_tokens(question))?;
        let (sa, _) = self.assertion.encode(&matcher_tokens(text))?;
        if norm(&sq) < ZERO_NORM || norm(&sa) < ZERO_NORM {
            return Ok(0.0);
        }
        crate::neuralcore::cosine(&sq, &sa)
    }

    fn backprop(&self, question: &str, text: &str, dscore: f64, grads: &mut Self) -> Result<f64> {
        let (sq, q_cache) = self.question.encode(&matcher_tokens(question))?;
        let (sa, a_cache) = self.assertion.encode(&matcher_tokens(text))?;
        if norm(&sq) < ZERO_NORM || norm(&sa) < ZERO_NORM {
            return Ok(0.0);
        }
        let score = crate::neuralcore::cosine(&sq, &sa)?;
        let (dq, da) = cosine_backward(&sq, &sa, dscore)?;
        self.question.backward(&q_cache, &dq, &mut grads.question);
        self.assertion.backward(&a_cache, &da, &mut grads.assertion);
        Ok(score)
    }

    fn grad_holder(&self) -> Self {
        self.zeros_like()
    }
}

/// Cosine relevance of a question and an assertion, in [-1, 1]. A
/// zero-norm tower output scores 0 rather than erroring.
pub fn f_cnn(params: &CdssmParams, question: &str, assertion: &Assertion) -> Result<f64> {
    params.score(question, &assertion_text(assertion))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matchers::{train_pairwise, Triple};
    use crate::neuralcore::{check_gradients, Optimizer, Sgd};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small(rng: &mut ChaCha8Rng) -> CdssmParams {
        CdssmParams::new(64, 6, 3, 5, 4, rng)
    }

    #[test]
    fn trigram_buckets_count_padded_trigrams() {
        let tris = trigram_buckets("cat", 1 << 20);
        // "#cat#" has trigrams #ca, cat, at#.
        assert_eq!(tris.iter().map(|&(_, c)| c).sum::<f64>(), 3.0);
        let single = trigram_buckets("a", 64);
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].1, 1.0);
        // Repeated trigrams accumulate counts.
        let repeated = trigram_buckets("aaaa", 1 << 20);
        let total: f64 = repeated.iter().map(|&(_, c)| c).sum();
        assert_eq!(total, 4.0);
        assert!(repeated.iter().any(|&(_, c)| c == 2.0)); // "aaa" twice
    }

    #[test]
    fn identical_towers_score_identical_text_at_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut p = small(&mut rng);
        p.assertion = p.question.clone();
        let s = p.score("shanghai disneyland opened", "shanghai disneyland opened").unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_in_cosine_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = small(&mut rng);
        for (q, a) in [
            ("who founded the park", "walt disney ; founded ; the park"),
            ("when", "x"),
            ("a b c d e f g", "h"),
        ] {
            let s = p.score(q, a).unwrap();
            assert!((-1.0..=1.0).contains(&s), "score {s} out of range");
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = small(&mut rng);
        assert!(p.score("", "x").is_err());
        assert!(p.score("x", "   ").is_err());
    }

    #[test]
    fn zero_projection_scores_zero_without_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let mut p = small(&mut rng);
        // Zero weights and biases force a zero-norm semantic vector.
        for v in p.question.wp.data_mut() {
            *v = 0.0;
        }
        for v in p.question.bp.data_mut() {
            *v = 0.0;
        }
        assert_eq!(p.score("anything", "something").unwrap(), 0.0);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut p = small(&mut rng);
        let mut grads = p.zeros_like();
        p.backprop("who opened the park", "walt ; opened ; the park", 1.0, &mut grads)
            .unwrap();
        check_gradients(
            &mut p,
            &grads,
            |m| m.score("who opened the park", "walt ; opened ; the park").unwrap(),
            1e-5,
            1e-5,
        )
        .unwrap();
    }

    #[test]
    fn pairwise_training_separates_a_toy_corpus() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let mut p = small(&mut rng);
        let verbs = ["opened", "closed", "built", "sold", "painted"];
        let subjects = ["alice", "bob", "carol", "dave", "erin"];
        let mut triples = Vec::new();
        for (i, verb) in verbs.iter().enumerate() {
            for (j, subject) in subjects.iter().enumerate() {
                let wrong_verb = verbs[(i + 1) % verbs.len()];
                let wrong_subject = subjects[(j + 2) % subjects.len()];
                triples.push(Triple {
                    question: format!("who {verb} the gate"),
                    positive: format!("{subject} ; {verb} ; the gate"),
                    negative: format!("{wrong_subject} ; {wrong_verb} ; the fence"),
                });
            }
        }
        assert_eq!(triples.len(), 25);
        // Mirror with swapped roles to reach a 50-pair set.
        let mirrored: Vec<Triple> = triples
            .iter()
            .map(|t| Triple {
                question: t.question.clone(),
                positive: t.positive.clone(),
                negative: format!("nobody ; ignored ; {}", t.negative),
            })
            .collect();
        triples.extend(mirrored);
        let mut opt = Optimizer::Sgd(Sgd::new(0.05).unwrap());
        let trace = train_pairwise(&mut p, &triples, 0.5, 30, &mut opt).unwrap();
        assert!(trace.last().unwrap() < &trace[0]);
        let mean = |scores: Vec<f64>| scores.iter().sum::<f64>() / scores.len() as f64;
        let pos = mean(
            triples
                .iter()
                .map(|t| p.score(&t.question, &t.positive).unwrap())
                .collect(),
        );
        let neg = mean(
            triples
                .iter()
                .map(|t| p.score(&t.question, &t.negative).unwrap())
                .collect(),
        );
        assert!(
            pos > neg,
            "trained positives should outscore negatives: {pos} vs {neg}"
        );
    }

    proptest! {
        #[test]
        fn cosine_bound_holds_for_arbitrary_tokens(
            q in proptest::collection::vec("[a-z]{1,6}", 1..6),
            a in proptest::collection::vec("[a-z]{1,6}", 1..6),
            seed in 0u64..200,
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = CdssmParams::new(32, 4, 2, 3, 3, &mut rng);
            let s = p.score(&q.join(" "), &a.join(" ")).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
            prop_assert!(s.is_finite());
        }

        #[test]
        fn trigram_hashing_is_deterministic(token in "[a-z']{1,10}") {
            let a = trigram_buckets(&token, DEFAULT_HASH_BUCKETS);
            let b = trigram_buckets(&token, DEFAULT_HASH_BUCKETS);
            prop_assert_eq!(a.clone(), b);
            let chars = token.chars().count();
            let total: f64 = a.iter().map(|&(_, c)| c).sum();
            prop_assert_eq!(total, chars as f64);
        }
    }
}
