//! Training loop for the assertion generator.

use crate::corpus::{tokenize, Assertion, QAInstance};
use crate::neuralcore::{AdaDelta, ParamGroup};
use crate::seq2ast::{backward_teacher, encode, forward_teacher, Seq2AstParams};
use crate::{Error, Result};

/// One generation example: produce `target` from the question/passage pair.
#[derive(Debug, Clone)]
pub struct GenInstance {
    pub question: Vec<String>,
    pub passage: Vec<String>,
    pub target: Assertion,
}

impl GenInstance {
    /// Expands a ranking-style instance into one generation example per
    /// correct candidate.
    pub fn from_qa_instance(instance: &QAInstance) -> Vec<GenInstance> {
        let question = tokenize(&instance.question);
        let passage = tokenize(&instance.passage);
        instance
            .candidates
            .iter()
            .filter(|c| c.label == Some(1))
            .map(|c| GenInstance {
                question: question.clone(),
                passage: passage.clone(),
                target: c.assertion.clone(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub epochs: usize,
    pub rho: f64,
    pub eps: f64,
    pub max_src_len: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            rho: 0.95,
            eps: 1e-6,
            max_src_len: 200,
        }
    }
}

/// Collects the source vocabulary (questions and passages) and the target
/// vocabulary (assertion fields) from a training set.
pub fn build_gen_vocabs(instances: &[GenInstance]) -> (Vec<String>, Vec<String>) {
    let mut src = Vec::new();
    let mut tgt = Vec::new();
    for inst in instances {
        src.extend(inst.question.iter().cloned());
        src.extend(inst.passage.iter().cloned());
        tgt.extend(inst.target.all_tokens().iter().cloned());
    }
    src.sort();
    src.dedup();
    tgt.sort();
    tgt.dedup();
    (src, tgt)
}

fn target_fields(params: &Seq2AstParams, target: &Assertion) -> Vec<Vec<usize>> {
    target
        .fields()
        .map(|f| f.iter().map(|w| params.tgt_id(w)).collect())
        .collect()
}

/// Trains with per-instance adaptive steps. Returns the per-epoch mean of
/// the per-instance mean token losses.
pub fn train(
    params: &mut Seq2AstParams,
    instances: &[GenInstance],
    config: &TrainConfig,
) -> Result<Vec<f64>> {
    if instances.is_empty() {
        return Err(Error::EmptyInput("generator training instances".into()));
    }
    let mut optimizer = AdaDelta::new(config.rho, config.eps)?;
    let mut grads = params.zeros_like();
    let mut trace = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut epoch_loss = 0.0;
        for inst in instances {
            let enc = encode(params, &inst.question, &inst.passage, config.max_src_len)?;
            let fields = target_fields(params, &inst.target);
            let record = forward_teacher(params, &enc, &fields)?;
            epoch_loss += record.mean_loss();
            grads.zero();
            backward_teacher(params, &enc, &record, &mut grads);
            optimizer.step(params, &grads)?;
        }
        trace.push(epoch_loss / instances.len() as f64);
    }
    Ok(trace)
}

/// Mean token loss of one instance plus the gradients of that loss,
/// accumulated into `grads` (not zeroed first).
pub fn instance_gradients(
    params: &Seq2AstParams,
    instance: &GenInstance,
    max_src_len: usize,
    grads: &mut Seq2AstParams,
) -> Result<f64> {
    let enc = encode(params, &instance.question, &instance.passage, max_src_len)?;
    let fields = target_fields(params, &instance.target);
    let record = forward_teacher(params, &enc, &fields)?;
    backward_teacher(params, &enc, &record, grads);
    Ok(record.mean_loss())
}

/// Mean per-instance token loss without touching the parameters.
pub fn evaluate_loss(
    params: &Seq2AstParams,
    instances: &[GenInstance],
    max_src_len: usize,
) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::EmptyInput("generator evaluation instances".into()));
    }
    let mut total = 0.0;
    for inst in instances {
        let enc = encode(params, &inst.question, &inst.passage, max_src_len)?;
        let fields = target_fields(params, &inst.target);
        total += forward_teacher(params, &enc, &fields)?.mean_loss();
    }
    Ok(total / instances.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seq2ast::Seq2AstDims;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    fn ast(fields: &[&str]) -> Assertion {
        let owned: Vec<String> = fields.iter().map(|s| s.to_string()).collect();
        Assertion::from_field_strings(&owned).unwrap()
    }

    fn toy_instances() -> Vec<GenInstance> {
        let spec: [(&str, &str, &[&str]); 10] = [
            ("who built the park", "walt built the park in 1955", &["walt", "built", "the park"]),
            ("when did it open", "the park opened in 1955", &["the park", "opened", "in 1955"]),
            ("who runs the show", "mary runs the show daily", &["mary", "runs", "the show"]),
            ("what did walt build", "walt built the park in 1955", &["walt", "built", "the park"]),
            ("where is the park", "the park is in anaheim", &["the park", "is", "in anaheim"]),
            ("who came to visit", "big crowds came to visit", &["big crowds", "came", "to visit"]),
            ("what opened in 1955", "the park opened in 1955", &["the park", "opened", "in 1955"]),
            ("who is mary", "mary is the manager", &["mary", "is", "the manager"]),
            ("what does mary run", "mary runs the show daily", &["mary", "runs", "the show"]),
            ("where did crowds go", "big crowds came to the park", &["big crowds", "came", "to the park"]),
        ];
        spec.iter()
            .map(|(q, p, f)| GenInstance {
                question: words(q),
                passage: words(p),
                target: ast(f),
            })
            .collect()
    }

    fn small_dims() -> Seq2AstDims {
        Seq2AstDims {
            src_embed: 8,
            tgt_embed: 8,
            enc_hidden: 12,
            tuple_hidden: 12,
            word_hidden: 12,
            attn: 8,
        }
    }

    #[test]
    fn vocabularies_cover_both_sides_without_duplicates() {
        let instances = toy_instances();
        let (src, tgt) = build_gen_vocabs(&instances);
        assert!(src.contains(&"anaheim".to_string()));
        assert!(src.contains(&"who".to_string()));
        assert!(tgt.contains(&"manager".to_string()));
        assert!(!tgt.contains(&"who".to_string()));
        let mut sorted = src.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(src, sorted);
    }

    #[test]
    fn training_loss_falls_on_a_small_corpus() {
        let instances = toy_instances();
        let (src, tgt) = build_gen_vocabs(&instances);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = Seq2AstParams::new(&src, &tgt, small_dims(), &mut rng);
        let config = TrainConfig {
            epochs: 50,
            ..TrainConfig::default()
        };
        let trace = train(&mut params, &instances, &config).unwrap();
        assert_eq!(trace.len(), 50);
        assert!(
            trace.last().unwrap() < &trace[0],
            "loss went from {} to {}",
            trace[0],
            trace.last().unwrap()
        );
        params.assert_finite("generator parameters").unwrap();
    }

    #[test]
    fn one_instance_can_be_memorized_to_low_perplexity() {
        let instances = vec![toy_instances()[0].clone()];
        let (src, tgt) = build_gen_vocabs(&instances);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut params = Seq2AstParams::new(&src, &tgt, small_dims(), &mut rng);
        let config = TrainConfig {
            epochs: 300,
            ..TrainConfig::default()
        };
        let trace = train(&mut params, &instances, &config).unwrap();
        let final_loss = *trace.last().unwrap();
        // Perplexity below 1.1 ⇔ mean token loss below ln(1.1).
        assert!(
            final_loss < 1.1f64.ln(),
            "loss {final_loss} still above {}",
            1.1f64.ln()
        );
    }

    #[test]
    fn evaluation_never_changes_the_loss() {
        let instances = toy_instances();
        let (src, tgt) = build_gen_vocabs(&instances);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = Seq2AstParams::new(&src, &tgt, small_dims(), &mut rng);
        let a = evaluate_loss(&params, &instances, 200).unwrap();
        let b = evaluate_loss(&params, &instances, 200).unwrap();
        assert_eq!(a, b);
        assert!(a > 0.0);
        assert!(evaluate_loss(&params, &[], 200).is_err());
    }

    #[test]
    fn ranking_instances_expand_to_one_example_per_correct_candidate() {
        use crate::corpus::Candidate;
        let instance = QAInstance {
            id: "q1".into(),
            question: "who built the park".into(),
            passage: "walt built the park".into(),
            conllu: None,
            candidates: vec![
                Candidate {
                    assertion: ast(&["walt", "built", "the park"]),
                    label: Some(1),
                },
                Candidate {
                    assertion: ast(&["the park", "built"]),
                    label: Some(0),
                },
            ],
            sentences: Vec::new(),
        };
        let expanded = GenInstance::from_qa_instance(&instance);
        assert_eq!(expanded.len(), 1);
        assert_eq!(expanded[0].target.field_count(), 3);
        assert_eq!(expanded[0].question, words("who built the park"));
    }
}
