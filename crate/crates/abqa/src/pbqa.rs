//! Answer-sentence selection: a two-feature word/semantic baseline over
//! passage sentences, optionally augmented with the QA-matching features
//! of one assertion chosen per sentence by a pluggable strategy.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::align::f_wm;
use crate::corpus::{tokenize, Assertion, Candidate, QAInstance};
use crate::matchers::{CdssmParams, PairwiseMatcher};
use crate::ranker::{
    eval_rank, fit_lambdamart, rank_assertions, FeatureContext, FeatureSubset, Forest, Group,
    LambdaMartConfig, RankMetrics,
};
use crate::seq2ast::{decode_greedy, encode, DecodeLimits, DecodeOutcome, Seq2AstParams};
use crate::{Error, Result};

/// How the per-sentence assertion block is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Word match and convolutional similarity only.
    Baseline,
    /// One uniformly sampled extracted assertion.
    RndAst,
    /// Elementwise maximum over all extracted assertions.
    MaxAst,
    /// The extracted assertion ranked highest by a trained forest.
    ExtAst,
    /// The assertion produced by the trained generator.
    Seq2Ast,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Baseline,
        Strategy::RndAst,
        Strategy::MaxAst,
        Strategy::ExtAst,
        Strategy::Seq2Ast,
    ];

    pub fn parse(name: &str) -> Result<Strategy> {
        match name {
            "baseline" => Ok(Strategy::Baseline),
            "rnd" => Ok(Strategy::RndAst),
            "max" => Ok(Strategy::MaxAst),
            "ext" => Ok(Strategy::ExtAst),
            "gen" => Ok(Strategy::Seq2Ast),
            other => Err(Error::Config(format!(
                "unknown strategy {other:?}; expected baseline, rnd, max, ext, or gen"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::RndAst => "rnd",
            Strategy::MaxAst => "max",
            Strategy::ExtAst => "ext",
            Strategy::Seq2Ast => "gen",
        }
    }

    pub fn uses_assertions(&self) -> bool {
        !matches!(self, Strategy::Baseline)
    }
}

/// A passage sentence with its computed feature row. All rows of one run
/// share the same arity.
#[derive(Debug, Clone)]
pub struct SentenceCandidate {
    pub text: String,
    pub label: Option<u8>,
    pub features: Vec<f64>,
}

/// Everything the assertion strategies may need.
pub struct AssertionModels<'a> {
    pub context: &'a FeatureContext,
    pub subset: &'a FeatureSubset,
    /// Assertion ranker, required by [`Strategy::ExtAst`].
    pub ranker: Option<&'a Forest>,
    /// Trained generator, required by [`Strategy::Seq2Ast`].
    pub generator: Option<&'a Seq2AstParams>,
    pub max_src_len: usize,
    pub limits: DecodeLimits,
}

impl AssertionModels<'_> {
    /// Feature block width: one slot per subset feature plus the
    /// missing-assertion indicator.
    pub fn block_arity(&self) -> usize {
        self.subset.arity() + 1
    }
}

/// `[f_wm(q, sentence), cdssm(q, sentence)]`: the word-level overlap and
/// the sentence-level semantic match.
pub fn baseline_features(
    question: &str,
    sentence: &str,
    cdssm: &CdssmParams,
) -> Result<Vec<f64>> {
    let wm = f_wm(&tokenize(question), &tokenize(sentence));
    let sem = cdssm.score(question, sentence)?;
    Ok(vec![wm, sem])
}

fn absent_block(subset: &FeatureSubset) -> Vec<f64> {
    let mut block = vec![0.0; subset.arity()];
    block.push(1.0);
    block
}

fn present_block(features: Vec<f64>) -> Vec<f64> {
    let mut block = features;
    block.push(0.0);
    block
}

/// Computes the assertion feature block for one sentence. Extractive
/// strategies select among `candidates`; the generative strategy decodes
/// from the question and sentence and ignores them. A sentence with no
/// usable assertion gets a zero block with the indicator raised.
pub fn assertion_features(
    question: &str,
    sentence: &str,
    candidates: &[Assertion],
    strategy: Strategy,
    models: &AssertionModels,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<f64>> {
    let featurize =
        |a: &Assertion| -> Result<Vec<f64>> {
            Ok(models.context.featurize(question, a, models.subset)?.into_inner())
        };
    match strategy {
        Strategy::Baseline => Err(Error::Config(
            "the baseline strategy has no assertion features".into(),
        )),
        Strategy::RndAst => match candidates.choose(rng) {
            Some(assertion) => Ok(present_block(featurize(assertion)?)),
            None => Ok(absent_block(models.subset)),
        },
        Strategy::MaxAst => {
            if candidates.is_empty() {
                return Ok(absent_block(models.subset));
            }
            let mut best = featurize(&candidates[0])?;
            for assertion in &candidates[1..] {
                for (b, v) in best.iter_mut().zip(featurize(assertion)?) {
                    *b = b.max(v);
                }
            }
            Ok(present_block(best))
        }
        Strategy::ExtAst => {
            let forest = models.ranker.ok_or_else(|| {
                Error::Config("the ext strategy needs a trained assertion ranker".into())
            })?;
            if candidates.is_empty() {
                return Ok(absent_block(models.subset));
            }
            let wrapped: Vec<Candidate> = candidates
                .iter()
                .map(|a| Candidate {
                    assertion: a.clone(),
                    label: None,
                })
                .collect();
            let ranked = rank_assertions(
                question,
                &wrapped,
                |q, a| models.context.featurize(q, a, models.subset),
                forest,
            )?;
            Ok(present_block(featurize(&ranked[0].0.assertion)?))
        }
        Strategy::Seq2Ast => {
            let generator = models.generator.ok_or_else(|| {
                Error::Config("the gen strategy needs a trained generator".into())
            })?;
            let enc = encode(
                generator,
                &tokenize(question),
                &tokenize(sentence),
                models.max_src_len,
            )?;
            match decode_greedy(generator, &enc, &models.limits)?.0 {
                DecodeOutcome::Complete(assertion) => Ok(present_block(featurize(&assertion)?)),
                DecodeOutcome::Incomplete { .. } => Ok(absent_block(models.subset)),
            }
        }
    }
}

/// Builds one feature row per passage sentence of an instance. Extractive
/// strategies read the sentence's stored dependency parse; parse blocks
/// must align one-to-one with the sentence list.
pub fn sentence_features(
    instance: &QAInstance,
    strategy: Strategy,
    cdssm: &CdssmParams,
    models: Option<&AssertionModels>,
    seed: u64,
) -> Result<Vec<SentenceCandidate>> {
    let models = match (strategy.uses_assertions(), models) {
        (false, _) => None,
        (true, Some(m)) => Some(m),
        (true, None) => {
            return Err(Error::Config(format!(
                "strategy {} needs assertion models",
                strategy.name()
            )))
        }
    };
    let parses = if matches!(strategy, Strategy::RndAst | Strategy::MaxAst | Strategy::ExtAst) {
        let blocks = instance.parsed_sentences()?;
        if blocks.len() != instance.sentences.len() {
            return Err(Error::Data(format!(
                "instance {}: {} parse blocks for {} sentences",
                instance.id,
                blocks.len(),
                instance.sentences.len()
            )));
        }
        Some(blocks)
    } else {
        None
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(instance.sentences.len());
    for (i, sentence) in instance.sentences.iter().enumerate() {
        let mut features = baseline_features(&instance.question, &sentence.text, cdssm)?;
        if let Some(models) = models {
            let extracted = parses
                .as_ref()
                .map(|blocks| crate::openie::extract_from_sentences(&blocks[i..=i]))
                .unwrap_or_default();
            features.extend(assertion_features(
                &instance.question,
                &sentence.text,
                &extracted,
                strategy,
                models,
                &mut rng,
            )?);
        }
        out.push(SentenceCandidate {
            text: sentence.text.clone(),
            label: sentence.label,
            features,
        });
    }
    Ok(out)
}

/// Splitmix-style per-instance stream so parallel featurization stays
/// deterministic and order-independent.
fn derived_seed(base: u64, index: usize) -> u64 {
    base ^ (index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Feature groups for ranker training or evaluation, one group per
/// instance, in instance order. Every sentence must be labeled.
pub fn build_groups(
    instances: &[QAInstance],
    strategy: Strategy,
    cdssm: &CdssmParams,
    models: Option<&AssertionModels>,
    seed: u64,
) -> Result<Vec<Group>> {
    let groups = instances
        .par_iter()
        .enumerate()
        .filter(|(_, inst)| !inst.sentences.is_empty())
        .map(|(i, inst)| {
            let rows = sentence_features(inst, strategy, cdssm, models, derived_seed(seed, i))?;
            let mut features = Vec::with_capacity(rows.len());
            let mut labels = Vec::with_capacity(rows.len());
            for row in rows {
                let label = row.label.ok_or_else(|| {
                    Error::Data(format!("instance {}: unlabeled sentence", inst.id))
                })?;
                features.push(row.features);
                labels.push(label);
            }
            Ok((features, labels))
        })
        .collect::<Result<Vec<Group>>>()?;
    if groups.is_empty() {
        return Err(Error::EmptyInput("sentence selection instances".into()));
    }
    Ok(groups)
}

/// Scores and orders sentence candidates, best first; ties keep input
/// order.
pub fn rank_sentences(
    candidates: &[SentenceCandidate],
    forest: &Forest,
) -> Result<Vec<(SentenceCandidate, f64)>> {
    let mut scored = Vec::with_capacity(candidates.len());
    for candidate in candidates {
        let score = forest.score(&candidate.features)?;
        scored.push((candidate.clone(), score));
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored)
}

/// Labels of each group reordered by descending forest score, ready for
/// metric computation.
pub fn ordered_labels(forest: &Forest, groups: &[Group]) -> Result<Vec<Vec<u8>>> {
    groups
        .iter()
        .map(|(features, labels)| {
            let mut scored: Vec<(f64, u8)> = features
                .iter()
                .zip(labels)
                .map(|(row, &label)| Ok((forest.score(row)?, label)))
                .collect::<Result<_>>()?;
            scored.sort_by(|a, b| b.0.total_cmp(&a.0));
            Ok(scored.into_iter().map(|(_, l)| l).collect())
        })
        .collect()
}

/// Fits a sentence ranker on the training groups and reports MAP, MRR,
/// and precision-at-one on the test groups.
pub fn train_and_eval(
    train: &[Group],
    test: &[Group],
    config: &LambdaMartConfig,
) -> Result<RankMetrics> {
    let forest = fit_lambdamart(train, config)?;
    eval_rank(&ordered_labels(&forest, test)?)
}
