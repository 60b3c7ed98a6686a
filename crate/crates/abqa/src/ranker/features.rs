//! The ordered feature registry shared by training, ranking, and
//! ablations, plus the end-to-end assertion ranking pipeline.

use std::ops::Deref;

use crate::align::{f_phrase, f_w2w, f_wm, PhraseTable, TranslationTable};
use crate::corpus::{tokenize, Assertion, Candidate};
use crate::matchers::{f_cnn, f_rnn, CdssmParams, RnnMatchParams};
use crate::ranker::Forest;
use crate::{Error, Result};

/// Registry order fixes feature-vector slots: word match, word translation
/// trained on question-answer pairs, word translation trained on
/// paraphrase pairs, phrase table, convolutional matcher, recurrent
/// matcher.
pub const FEATURE_NAMES: [&str; 6] = ["wm", "w2w", "pp", "p2p", "cnn", "rnn"];

/// An ordered selection of registry features; arity of the resulting
/// vectors equals the subset size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSubset(Vec<usize>);

impl FeatureSubset {
    pub fn all() -> FeatureSubset {
        FeatureSubset((0..FEATURE_NAMES.len()).collect())
    }

    /// Parses `"all"` or a comma-separated name list such as `"wm,w2w"`.
    /// Duplicates are rejected; order follows the given list.
    pub fn parse(spec: &str) -> Result<FeatureSubset> {
        if spec.trim() == "all" {
            return Ok(FeatureSubset::all());
        }
        let mut indices = Vec::new();
        for name in spec.split(',') {
            let name = name.trim();
            let idx = FEATURE_NAMES
                .iter()
                .position(|&n| n == name)
                .ok_or_else(|| {
                    Error::Config(format!(
                        "unknown feature {name:?}; known: {}",
                        FEATURE_NAMES.join(", ")
                    ))
                })?;
            if indices.contains(&idx) {
                return Err(Error::Config(format!("duplicate feature {name:?}")));
            }
            indices.push(idx);
        }
        if indices.is_empty() {
            return Err(Error::Config("empty feature subset".into()));
        }
        Ok(FeatureSubset(indices))
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.0.iter().map(|&i| FEATURE_NAMES[i]).collect()
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

impl std::fmt::Display for FeatureSubset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.names().join(","))
    }
}

/// Fixed-arity, all-finite feature values in registry-subset order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<FeatureVector> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("feature value {v}")));
        }
        Ok(FeatureVector(values))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for FeatureVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Every trained model the registry features draw on.
pub struct FeatureContext {
    /// Word translation table trained on question-answer pairs.
    pub qa_table: TranslationTable,
    /// Word translation table trained on paraphrase pairs.
    pub para_table: TranslationTable,
    pub phrase_table: PhraseTable,
    pub cdssm: CdssmParams,
    pub rnn: RnnMatchParams,
}

impl FeatureContext {
    /// Computes the selected features for one question-assertion pair.
    pub fn featurize(
        &self,
        question: &str,
        assertion: &Assertion,
        subset: &FeatureSubset,
    ) -> Result<FeatureVector> {
        let q = tokenize(question);
        let a = tokenize(&assertion.field_strings().join(" "));
        let mut values = Vec::with_capacity(subset.arity());
        for &index in subset.indices() {
            let v = match FEATURE_NAMES[index] {
                "wm" => f_wm(&q, &a),
                "w2w" => f_w2w(&q, &a, &self.qa_table)?,
                "pp" => f_w2w(&q, &a, &self.para_table)?,
                "p2p" => f_phrase(&q, &a, &self.phrase_table),
                "cnn" => f_cnn(&self.cdssm, question, assertion)?,
                "rnn" => f_rnn(&self.rnn, question, assertion)?,
                _ => unreachable!("registry names are exhaustive"),
            };
            values.push(v);
        }
        FeatureVector::new(values)
    }
}

/// Scores every candidate with the forest and sorts by descending score;
/// the sort is stable, so ties keep candidate order.
pub fn rank_assertions<F>(
    question: &str,
    candidates: &[Candidate],
    featurizer: F,
    forest: &Forest,
) -> Result<Vec<(Candidate, f64)>>
where
    F: Fn(&str, &Assertion) -> Result<FeatureVector>,
{
    let mut scored = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let fv = featurizer(question, &candidate.assertion)?;
        let score = forest.score(&fv)?;
        scored.push((candidate.clone(), score));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::align::{build_phrase_table, train_model1};
    use crate::ranker::{RegressionTree, TreeNode};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subset_parsing_follows_the_registry() {
        assert_eq!(FeatureSubset::all().arity(), 6);
        let s = FeatureSubset::parse("wm,p2p").unwrap();
        assert_eq!(s.indices(), &[0, 3]);
        assert_eq!(s.names(), vec!["wm", "p2p"]);
        assert_eq!(s.to_string(), "wm,p2p");
        assert!(FeatureSubset::parse("wm,wm").is_err());
        assert!(FeatureSubset::parse("bogus").is_err());
        assert!(FeatureSubset::parse("").is_err());
    }

    #[test]
    fn feature_vectors_must_be_finite() {
        assert!(FeatureVector::new(vec![0.0, -3.5]).is_ok());
        assert!(FeatureVector::new(vec![f64::NAN]).is_err());
        assert!(FeatureVector::new(vec![f64::INFINITY]).is_err());
    }

    fn sent(text: &str) -> Vec<String> {
        tokenize(text)
    }

    fn toy_context() -> FeatureContext {
        let qa_pairs = vec![
            (sent("walt built the park"), sent("who built the park")),
            (sent("the park opened early"), sent("when did the park open")),
        ];
        let para_pairs = vec![(sent("built the park"), sent("constructed the park"))];
        let qa_table = train_model1(&qa_pairs, 5).unwrap();
        let para_table = train_model1(&para_pairs, 5).unwrap();
        let phrase_table = build_phrase_table(&qa_pairs, &qa_table, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        FeatureContext {
            qa_table,
            para_table,
            phrase_table,
            cdssm: CdssmParams::new(32, 4, 2, 3, 3, &mut rng),
            rnn: RnnMatchParams::new(&sent("who built the park walt"), 4, 3, 5, &mut rng),
        }
    }

    #[test]
    fn featurize_fills_slots_in_registry_order() {
        let ctx = toy_context();
        let assertion = Assertion::parse("<walt; built; the park>").unwrap();
        let fv = ctx
            .featurize("who built the park", &assertion, &FeatureSubset::all())
            .unwrap();
        assert_eq!(fv.len(), 6);
        // Slot 0 is plain word match: {built, the, park} of 4 question words.
        assert!((fv[0] - 0.75).abs() < 1e-12);
        // The convolutional score is a cosine.
        assert!((-1.0..=1.0).contains(&fv[4]));
        let wm_only = ctx
            .featurize("who built the park", &assertion, &FeatureSubset::parse("wm").unwrap())
            .unwrap();
        assert_eq!(wm_only.len(), 1);
        assert_eq!(wm_only[0], fv[0]);
    }

    fn wm_monotone_forest() -> Forest {
        // Piecewise-constant and increasing in feature 0.
        let tree = RegressionTree {
            root: TreeNode::Split {
                feature: 0,
                threshold: 0.25,
                left: Box::new(TreeNode::Leaf(0.0)),
                right: Box::new(TreeNode::Split {
                    feature: 0,
                    threshold: 0.4,
                    left: Box::new(TreeNode::Leaf(1.0)),
                    right: Box::new(TreeNode::Leaf(2.0)),
                }),
            },
        };
        Forest::new(1, vec![(1.0, tree)]).unwrap()
    }

    #[test]
    fn word_overlap_forest_ranks_the_overlap_rich_candidate_first() {
        let question = "how much can your bladder hold";
        let texts = [
            "<a healthy adult bladder; can hold; up to 16 ounces; 2 cups of urine>",
            "<a healthy adult bladder; can hold; up to 16 ounces; according to the national institutes of health>",
            "<a healthy adult bladder; can hold; up to 16 ounces; comfortably>",
            "<it; fills; how frequently>",
            "<your body; is trying; to rid of; how much excess water>",
        ];
        let candidates: Vec<Candidate> = texts
            .iter()
            .map(|t| Candidate {
                assertion: Assertion::parse(t).unwrap(),
                label: None,
            })
            .collect();
        // Hand word-match values over the six question words:
        // candidates 1,2,3 share {can, bladder, hold} = 1/2; candidate 4
        // shares {how} = 1/6; candidate 5 shares {how, much, your} = 1/2.
        let q = tokenize(question);
        let wm: Vec<f64> = candidates
            .iter()
            .map(|c| f_wm(&q, &tokenize(&c.assertion.field_strings().join(" "))))
            .collect();
        assert_eq!(wm, vec![0.5, 0.5, 0.5, 1.0 / 6.0, 0.5]);

        let featurizer = |question: &str, assertion: &Assertion| {
            FeatureVector::new(vec![f_wm(
                &tokenize(question),
                &tokenize(&assertion.field_strings().join(" ")),
            )])
        };
        let ranked =
            rank_assertions(question, &candidates, featurizer, &wm_monotone_forest()).unwrap();
        // The tied top scores keep candidate order, so the labeled-correct
        // assertion stays first and the low-overlap clause drops to last.
        let order: Vec<String> = ranked.iter().map(|(c, _)| c.assertion.render()).collect();
        assert_eq!(order[0], texts[0]);
        assert_eq!(order[4], texts[3]);
        assert_eq!(order[1], texts[1]);
        assert_eq!(order[2], texts[2]);
        assert_eq!(order[3], texts[4]);
    }

    #[test]
    fn single_candidate_ranks_first_and_empty_stays_empty() {
        let forest = wm_monotone_forest();
        let featurizer =
            |_: &str, _: &Assertion| FeatureVector::new(vec![0.3]);
        let one = vec![Candidate {
            assertion: Assertion::parse("<a; b>").unwrap(),
            label: None,
        }];
        let ranked = rank_assertions("q", &one, featurizer, &forest).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].0, one[0]);
        let none = rank_assertions("q", &[], featurizer, &forest).unwrap();
        assert!(none.is_empty());
    }

    #[test]
    fn equal_scores_preserve_input_order() {
        let forest = Forest::new(1, vec![(1.0, RegressionTree::leaf(0.7))]).unwrap();
        let candidates: Vec<Candidate> = ["<x; p1>", "<y; p2>", "<z; p3>"]
            .iter()
            .map(|t| Candidate {
                assertion: Assertion::parse(t).unwrap(),
                label: None,
            })
            .collect();
        let featurizer = |_: &str, _: &Assertion| FeatureVector::new(vec![0.0]);
        let ranked = rank_assertions("q", &candidates, featurizer, &forest).unwrap();
        let order: Vec<_> = ranked.iter().map(|(c, _)| c.assertion.render()).collect();
        assert_eq!(order, vec!["<x; p1>", "<y; p2>", "<z; p3>"]);
    }

    // Affine rescaling with exactly-representable dyadic constants keeps
    // every threshold comparison identical, so ranking order is invariant.
    fn rescale_tree(node: &TreeNode, feature: usize, a: f64, b: f64) -> TreeNode {
        match node {
            TreeNode::Leaf(v) => TreeNode::Leaf(*v),
            TreeNode::Split {
                feature: f,
                threshold,
                left,
                right,
            } => TreeNode::Split {
                feature: *f,
                threshold: if *f == feature { a * threshold + b } else { *threshold },
                left: Box::new(rescale_tree(left, feature, a, b)),
                right: Box::new(rescale_tree(right, feature, a, b)),
            },
        }
    }

    proptest! {
        #[test]
        fn positive_rescaling_of_a_feature_preserves_ranking(
            values in proptest::collection::vec((-16i32..16, -16i32..16), 2..8),
            thresholds in proptest::collection::vec((-16i32..16, -16i32..16), 1..4),
            scale_pow in 0u32..3,
            shift in -8i32..8,
        ) {
            let a = f64::from(1u32 << scale_pow); // 1, 2, or 4
            let b = f64::from(shift) * 0.5;
            // Dyadic grid (quarters) keeps a*x+b exact in f64.
            let fvs: Vec<Vec<f64>> = values
                .iter()
                .map(|&(x, y)| vec![f64::from(x) * 0.25, f64::from(y) * 0.25])
                .collect();
            let mut node = TreeNode::Leaf(1.0);
            for (i, &(t0, t1)) in thresholds.iter().enumerate() {
                node = TreeNode::Split {
                    feature: i % 2,
                    threshold: f64::from(if i % 2 == 0 { t0 } else { t1 }) * 0.25,
                    left: Box::new(node),
                    right: Box::new(TreeNode::Leaf(-(i as f64))),
                };
            }
            let forest = Forest::new(2, vec![(1.0, RegressionTree { root: node.clone() })]).unwrap();
            let rescaled = Forest::new(
                2,
                vec![(1.0, RegressionTree { root: rescale_tree(&node, 0, a, b) })],
            ).unwrap();

            let candidates: Vec<Candidate> = (0..fvs.len())
                .map(|i| Candidate {
                    assertion: Assertion::parse(&format!("<c{i}; p>")).unwrap(),
                    label: None,
                })
                .collect();
            let plain = rank_assertions(
                "q",
                &candidates,
                |_, ast| {
                    let i: usize = ast.subject[0][1..].parse().unwrap();
                    FeatureVector::new(fvs[i].clone())
                },
                &forest,
            ).unwrap();
            let transformed = rank_assertions(
                "q",
                &candidates,
                |_, ast| {
                    let i: usize = ast.subject[0][1..].parse().unwrap();
                    FeatureVector::new(vec![a * fvs[i][0] + b, fvs[i][1]])
                },
                &rescaled,
            ).unwrap();
            let order = |r: &[(Candidate, f64)]| -> Vec<String> {
                r.iter().map(|(c, _)| c.assertion.render()).collect()
            };
            prop_assert_eq!(order(&plain), order(&transformed));
        }
    }
}
