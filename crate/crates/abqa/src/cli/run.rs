//! Command implementations: model loading, pipelines, and the run
//! manifest each command writes.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::align::{
    build_phrase_table, log_likelihood, train_model1, PhraseTable, TranslationTable,
};
use crate::cli::config::RunConfig;
use crate::corpus::{read_instances, tokenize, write_instances, Candidate, QAInstance};
use crate::matchers::{matcher_tokens, train_pairwise, CdssmParams, RnnMatchParams, Triple};
use crate::neuralcore::{
    load_checkpoint, save_checkpoint, AdaDelta, Checkpoint, Optimizer, Sgd,
};
use crate::openie::extract_candidates;
use crate::pbqa::{build_groups, train_and_eval, AssertionModels, Strategy};
use crate::ranker::{
    eval_rank, fit_lambdamart, load_forest, rank_assertions, save_forest, FeatureContext,
    FeatureSubset, Group, RankMetrics,
};
use crate::seq2ast::{
    build_gen_vocabs, corpus_bleu4, decode_greedy, encode, train, DecodeOutcome, GenInstance,
    Seq2AstDims, Seq2AstParams, TrainConfig,
};
use crate::{Error, Result};

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

/// Line-delimited key=value record of one run: configuration hash, input
/// hashes, and metrics. Contains no paths or timestamps, so reruns with
/// the same seed and inputs produce identical bytes.
pub struct Manifest {
    entries: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Manifest {
        let mut m = Manifest {
            entries: BTreeMap::new(),
        };
        m.put("command", command);
        m.put("seed", cfg.seed);
        m.put("config_sha256", sha256_hex(cfg.hyper_lines().as_bytes()));
        m
    }

    pub fn put(&mut self, key: &str, value: impl Display) {
        self.entries.insert(key.to_string(), value.to_string());
    }

    pub fn hash_input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.put(&format!("{role}_sha256"), sha256_file(path)?);
        Ok(())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (key, value) in &self.entries {
            out.push_str(key);
            out.push('=');
            out.push_str(value);
            out.push('\n');
        }
        std::fs::write(path, out)?;
        Ok(())
    }
}

fn require<'a>(path: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("configuration key {key} is required here")))
}

fn meta_num(v: usize) -> serde_json::Value {
    serde_json::Value::from(v as u64)
}

fn meta_words(words: &[String]) -> serde_json::Value {
    serde_json::Value::Array(words.iter().map(|w| w.clone().into()).collect())
}

fn meta_vocab(cp: &Checkpoint, key: &str) -> Result<Vec<String>> {
    cp.meta
        .get(key)
        .and_then(|v| v.as_array())
        .map(|items| {
            items
                .iter()
                .map(|i| {
                    i.as_str()
                        .map(str::to_string)
                        .ok_or_else(|| Error::Model(format!("non-string entry in {key}")))
                })
                .collect()
        })
        .ok_or_else(|| Error::Model(format!("checkpoint metadata missing {key:?}")))?
}

fn expect_kind(cp: &Checkpoint, kind: &str) -> Result<()> {
    if cp.kind != kind {
        return Err(Error::Model(format!(
            "checkpoint holds a {:?} model, expected {kind:?}",
            cp.kind
        )));
    }
    Ok(())
}

pub fn load_cdssm(path: &Path) -> Result<CdssmParams> {
    let cp = load_checkpoint(path)?;
    expect_kind(&cp, "cdssm")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = CdssmParams::new(
        cp.meta_usize("hash_buckets")?,
        cp.meta_usize("embed")?,
        cp.meta_usize("window")?,
        cp.meta_usize("filters")?,
        cp.meta_usize("sem")?,
        &mut rng,
    );
    cp.apply_to(&mut params)?;
    Ok(params)
}

pub fn load_rnn(path: &Path) -> Result<RnnMatchParams> {
    let cp = load_checkpoint(path)?;
    expect_kind(&cp, "rnnmatch")?;
    let vocab = meta_vocab(&cp, "vocab")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = RnnMatchParams::new(
        &vocab,
        cp.meta_usize("embed")?,
        cp.meta_usize("hidden")?,
        cp.meta_usize("mlp")?,
        &mut rng,
    );
    cp.apply_to(&mut params)?;
    Ok(params)
}

pub fn load_generator(path: &Path) -> Result<Seq2AstParams> {
    let cp = load_checkpoint(path)?;
    expect_kind(&cp, "seq2ast")?;
    let dims = Seq2AstDims {
        src_embed: cp.meta_usize("src_embed")?,
        tgt_embed: cp.meta_usize("tgt_embed")?,
        enc_hidden: cp.meta_usize("enc_hidden")?,
        tuple_hidden: cp.meta_usize("tuple_hidden")?,
        word_hidden: cp.meta_usize("word_hidden")?,
        attn: cp.meta_usize("attn")?,
    };
    let src_vocab = meta_vocab(&cp, "src_vocab")?;
    let tgt_vocab = meta_vocab(&cp, "tgt_vocab")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = Seq2AstParams::new(&src_vocab, &tgt_vocab, dims, &mut rng);
    cp.apply_to(&mut params)?;
    Ok(params)
}

/// Assembles the feature models a subset needs; unused slots get inert
/// placeholders that the featurizer never calls.
pub fn load_context(cfg: &RunConfig, subset: &FeatureSubset) -> Result<FeatureContext> {
    let needs = |name: &str| subset.names().contains(&name);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    Ok(FeatureContext {
        qa_table: if needs("w2w") {
            TranslationTable::load(require(&cfg.qa_table, "qa_table")?)?
        } else {
            TranslationTable::default()
        },
        para_table: if needs("pp") {
            TranslationTable::load(require(&cfg.para_table, "para_table")?)?
        } else {
            TranslationTable::default()
        },
        phrase_table: if needs("p2p") {
            PhraseTable::load(require(&cfg.phrase_table, "phrase_table")?, cfg.phrase_len)?
        } else {
            PhraseTable::new(BTreeMap::new(), cfg.phrase_len)
        },
        cdssm: if needs("cnn") {
            load_cdssm(require(&cfg.cnn_model, "cnn_model")?)?
        } else {
            CdssmParams::new(1, 1, 1, 1, 1, &mut rng)
        },
        rnn: if needs("rnn") {
            load_rnn(require(&cfg.rnn_model, "rnn_model")?)?
        } else {
            RnnMatchParams::new(&[], 1, 1, 1, &mut rng)
        },
    })
}

/// Lines of "source ||| target" token sequences.
fn read_pair_file(path: &Path) -> Result<Vec<(Vec<String>, Vec<String>)>> {
    let text = std::fs::read_to_string(path)?;
    let mut pairs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(" ||| ");
        let (Some(src), Some(tgt), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::Data(format!(
                "{}:{}: expected \"source ||| target\"",
                path.display(),
                i + 1
            )));
        };
        pairs.push((tokenize(src), tokenize(tgt)));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyInput(format!("pair file {}", path.display())));
    }
    Ok(pairs)
}

/// Lines of "question ||| positive ||| negative".
fn read_triples(path: &Path) -> Result<Vec<Triple>> {
    let text = std::fs::read_to_string(path)?;
    let mut triples = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(" ||| ").collect();
        if parts.len() != 3 {
            return Err(Error::Data(format!(
                "{}:{}: expected \"question ||| positive ||| negative\"",
                path.display(),
                i + 1
            )));
        }
        triples.push(Triple {
            question: parts[0].to_string(),
            positive: parts[1].to_string(),
            negative: parts[2].to_string(),
        });
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput(format!("triple file {}", path.display())));
    }
    Ok(triples)
}

pub fn cmd_extract(cfg: &RunConfig, data: &Path, out: &Path, manifest_path: &Path) -> Result<()> {
    let instances = read_instances(data)?;
    let extracted: Vec<QAInstance> = instances
        .par_iter()
        .map(|inst| {
            let mut filled = inst.clone();
            filled.candidates = extract_candidates(inst)?
                .into_iter()
                .map(|assertion| Candidate {
                    assertion,
                    label: None,
                })
                .collect();
            Ok(filled)
        })
        .collect::<Result<_>>()?;
    write_instances(out, &extracted)?;
    let total: usize = extracted.iter().map(|i| i.candidates.len()).sum();
    let mut manifest = Manifest::new("extract", cfg);
    manifest.hash_input("data", data)?;
    manifest.put("instances", extracted.len());
    manifest.put("candidates", total);
    manifest.put("out_sha256", sha256_file(out)?);
    manifest.write(manifest_path)?;
    println!("extracted {total} candidates over {} instances", extracted.len());
    Ok(())
}

pub fn cmd_train_align(
    cfg: &RunConfig,
    corpus: &Path,
    iters: Option<usize>,
    out: &Path,
    phrase_out: Option<&Path>,
    manifest_path: &Path,
) -> Result<()> {
    let pairs = read_pair_file(corpus)?;
    let iters = iters.unwrap_or(cfg.em_iters);
    let table = train_model1(&pairs, iters)?;
    table.save(out)?;
    let ll = log_likelihood(&pairs, &table);
    let mut manifest = Manifest::new("train-align", cfg);
    manifest.hash_input("corpus", corpus)?;
    manifest.put("pairs", pairs.len());
    manifest.put("iterations", iters);
    manifest.put("log_likelihood", ll);
    manifest.put("out_sha256", sha256_file(out)?);
    if let Some(phrase_path) = phrase_out {
        let phrases = build_phrase_table(&pairs, &table, cfg.phrase_len);
        phrases.save(phrase_path)?;
        manifest.put("phrase_entries", phrases.len());
        manifest.put("phrase_out_sha256", sha256_file(phrase_path)?);
    }
    manifest.write(manifest_path)?;
    println!("trained translation table on {} pairs, log-likelihood {ll}", pairs.len());
    Ok(())
}

fn matcher_optimizer(cfg: &RunConfig) -> Result<Optimizer> {
    match cfg.optimizer.as_str() {
        "sgd" => Ok(Optimizer::Sgd(Sgd::new(cfg.sgd_lr)?)),
        "adadelta" => Ok(Optimizer::AdaDelta(AdaDelta::new(0.95, 1e-6)?)),
        other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
    }
}

pub fn cmd_train_matchers(
    cfg: &RunConfig,
    triples_path: &Path,
    model: &str,
    epochs: Option<usize>,
    margin: Option<f64>,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let triples = read_triples(triples_path)?;
    let epochs = epochs.unwrap_or(cfg.epochs);
    let margin = margin.unwrap_or(cfg.margin);
    let mut optimizer = matcher_optimizer(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let trace = match model {
        "cnn" => {
            let mut params = CdssmParams::new(
                cfg.hash_buckets,
                cfg.embed,
                cfg.window,
                cfg.hidden,
                cfg.hidden,
                &mut rng,
            );
            let trace = train_pairwise(&mut params, &triples, margin, epochs, &mut optimizer)?;
            let meta = BTreeMap::from([
                ("hash_buckets".to_string(), meta_num(cfg.hash_buckets)),
                ("embed".to_string(), meta_num(cfg.embed)),
                ("window".to_string(), meta_num(cfg.window)),
                ("filters".to_string(), meta_num(cfg.hidden)),
                ("sem".to_string(), meta_num(cfg.hidden)),
            ]);
            save_checkpoint(out, "cdssm", meta, &params)?;
            trace
        }
        "rnn" => {
            let mut vocab: Vec<String> = triples
                .iter()
                .flat_map(|t| {
                    [&t.question, &t.positive, &t.negative]
                        .into_iter()
                        .flat_map(|s| matcher_tokens(s))
                })
                .collect();
            vocab.sort();
            vocab.dedup();
            let mut params =
                RnnMatchParams::new(&vocab, cfg.embed, cfg.hidden, cfg.hidden, &mut rng);
            let trace = train_pairwise(&mut params, &triples, margin, epochs, &mut optimizer)?;
            let meta = BTreeMap::from([
                ("embed".to_string(), meta_num(cfg.embed)),
                ("hidden".to_string(), meta_num(cfg.hidden)),
                ("mlp".to_string(), meta_num(cfg.hidden)),
                ("vocab".to_string(), meta_words(&vocab)),
            ]);
            save_checkpoint(out, "rnnmatch", meta, &params)?;
            trace
        }
        other => {
            return Err(Error::Config(format!(
                "unknown matcher model {other:?}; expected cnn or rnn"
            )))
        }
    };
    let mut manifest = Manifest::new("train-matchers", cfg);
    manifest.hash_input("triples", triples_path)?;
    manifest.put("model", model);
    manifest.put("triples", triples.len());
    manifest.put("epochs", epochs);
    manifest.put("margin", margin);
    manifest.put("first_loss", trace.first().copied().unwrap_or(0.0));
    manifest.put("final_loss", trace.last().copied().unwrap_or(0.0));
    manifest.put("out_sha256", sha256_file(out)?);
    manifest.write(manifest_path)?;
    println!(
        "trained {model} matcher: loss {} -> {}",
        trace.first().copied().unwrap_or(0.0),
        trace.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

/// Labeled feature groups for the assertion ranker, one per instance that
/// has at least one labeled candidate.
fn ranker_groups(
    instances: &[QAInstance],
    context: &FeatureContext,
    subset: &FeatureSubset,
) -> Result<Vec<Group>> {
    let groups: Vec<Group> = instances
        .par_iter()
        .map(|inst| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for candidate in &inst.candidates {
                let Some(label) = candidate.label else { continue };
                let fv = context.featurize(&inst.question, &candidate.assertion, subset)?;
                rows.push(fv.into_inner());
                labels.push(label);
            }
            Ok((rows, labels))
        })
        .collect::<Result<Vec<Group>>>()?;
    let groups: Vec<Group> = groups.into_iter().filter(|(r, _)| !r.is_empty()).collect();
    if groups.is_empty() {
        return Err(Error::Data("no labeled candidates in the data".into()));
    }
    Ok(groups)
}

/// Metrics over groups ordered by descending score; None when every group
/// is single-class.
fn metrics_of(scored: &[Vec<(f64, u8)>]) -> Option<RankMetrics> {
    let ordered: Vec<Vec<u8>> = scored
        .iter()
        .map(|group| {
            let mut g = group.to_vec();
            g.sort_by(|a, b| b.0.total_cmp(&a.0));
            g.into_iter().map(|(_, l)| l).collect()
        })
        .collect();
    eval_rank(&ordered).ok()
}

fn put_metrics(manifest: &mut Manifest, prefix: &str, metrics: &RankMetrics) {
    manifest.put(&format!("{prefix}map"), metrics.map);
    manifest.put(&format!("{prefix}mrr"), metrics.mrr);
    manifest.put(&format!("{prefix}p_at_1"), metrics.p_at_1);
}

pub fn cmd_train_ranker(
    cfg: &RunConfig,
    features: Option<&str>,
    data: &Path,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let subset = match features {
        Some(spec) => FeatureSubset::parse(spec)?,
        None => cfg.subset()?,
    };
    let context = load_context(cfg, &subset)?;
    let instances = read_instances(data)?;
    let groups = ranker_groups(&instances, &context, &subset)?;
    let forest = fit_lambdamart(&groups, &cfg.lambdamart())?;
    save_forest(out, &forest, cfg.learning_rate)?;
    let mut manifest = Manifest::new("train-ranker", cfg);
    manifest.hash_input("data", data)?;
    manifest.put("feature_subset", subset.to_string());
    manifest.put("groups", groups.len());
    manifest.put("trees", cfg.trees);
    let scored: Vec<Vec<(f64, u8)>> = groups
        .iter()
        .map(|(rows, labels)| {
            rows.iter()
                .zip(labels)
                .map(|(row, &l)| Ok((forest.score(row)?, l)))
                .collect::<Result<_>>()
        })
        .collect::<Result<_>>()?;
    if let Some(m) = metrics_of(&scored) {
        put_metrics(&mut manifest, "train_", &m);
    }
    manifest.put("out_sha256", sha256_file(out)?);
    manifest.write(manifest_path)?;
    println!("trained ranker on {} groups with features {}", groups.len(), subset);
    Ok(())
}

pub fn cmd_rank(
    cfg: &RunConfig,
    model: &Path,
    data: &Path,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let subset = cfg.subset()?;
    let (forest, _) = load_forest(model)?;
    if forest.arity() != subset.arity() {
        return Err(Error::Config(format!(
            "forest expects {} features but the subset {} has {}",
            forest.arity(),
            subset,
            subset.arity()
        )));
    }
    let context = load_context(cfg, &subset)?;
    let instances = read_instances(data)?;
    let ranked: Vec<(String, Vec<(Candidate, f64)>)> = instances
        .par_iter()
        .map(|inst| {
            let scored = rank_assertions(
                &inst.question,
                &inst.candidates,
                |q, a| context.featurize(q, a, &subset),
                &forest,
            )?;
            Ok((inst.id.clone(), scored))
        })
        .collect::<Result<_>>()?;
    let mut lines = String::new();
    for (id, scored) in &ranked {
        for (rank, (candidate, score)) in scored.iter().enumerate() {
            lines.push_str(&format!(
                "{id}\t{}\t{score}\t{}\n",
                rank + 1,
                candidate.assertion.render()
            ));
        }
    }
    std::fs::write(out, lines)?;
    let mut manifest = Manifest::new("rank", cfg);
    manifest.hash_input("data", data)?;
    manifest.hash_input("model", model)?;
    manifest.put("instances", ranked.len());
    let scored_labels: Vec<Vec<(f64, u8)>> = ranked
        .iter()
        .map(|(_, scored)| {
            scored
                .iter()
                .filter_map(|(c, s)| c.label.map(|l| (*s, l)))
                .collect()
        })
        .collect();
    if let Some(m) = metrics_of(&scored_labels) {
        put_metrics(&mut manifest, "", &m);
        println!("map={} mrr={} p_at_1={}", m.map, m.mrr, m.p_at_1);
    }
    manifest.put("out_sha256", sha256_file(out)?);
    manifest.write(manifest_path)?;
    Ok(())
}

fn gen_dims(cfg: &RunConfig) -> Seq2AstDims {
    Seq2AstDims {
        src_embed: cfg.embed,
        tgt_embed: cfg.embed,
        enc_hidden: cfg.hidden,
        tuple_hidden: cfg.hidden,
        word_hidden: cfg.hidden,
        attn: cfg.hidden,
    }
}

fn gen_instances(instances: &[QAInstance]) -> Result<Vec<GenInstance>> {
    let examples: Vec<GenInstance> = instances
        .iter()
        .flat_map(GenInstance::from_qa_instance)
        .collect();
    if examples.is_empty() {
        return Err(Error::Data(
            "no correct candidates to learn generation from".into(),
        ));
    }
    Ok(examples)
}

pub fn cmd_train_gen(cfg: &RunConfig, data: &Path, out: &Path, manifest_path: &Path) -> Result<()> {
    let instances = read_instances(data)?;
    let examples = gen_instances(&instances)?;
    let (src_vocab, tgt_vocab) = build_gen_vocabs(&examples);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = Seq2AstParams::new(&src_vocab, &tgt_vocab, gen_dims(cfg), &mut rng);
    let train_cfg = TrainConfig {
        epochs: cfg.epochs,
        max_src_len: cfg.max_src_len,
        ..TrainConfig::default()
    };
    let trace = train(&mut params, &examples, &train_cfg)?;
    let meta = BTreeMap::from([
        ("src_embed".to_string(), meta_num(cfg.embed)),
        ("tgt_embed".to_string(), meta_num(cfg.embed)),
        ("enc_hidden".to_string(), meta_num(cfg.hidden)),
        ("tuple_hidden".to_string(), meta_num(cfg.hidden)),
        ("word_hidden".to_string(), meta_num(cfg.hidden)),
        ("attn".to_string(), meta_num(cfg.hidden)),
        ("src_vocab".to_string(), meta_words(&src_vocab)),
        ("tgt_vocab".to_string(), meta_words(&tgt_vocab)),
    ]);
    save_checkpoint(out, "seq2ast", meta, &params)?;
    let mut manifest = Manifest::new("train-gen", cfg);
    manifest.hash_input("data", data)?;
    manifest.put("examples", examples.len());
    manifest.put("epochs", cfg.epochs);
    manifest.put("first_loss", trace.first().copied().unwrap_or(0.0));
    manifest.put("final_loss", trace.last().copied().unwrap_or(0.0));
    manifest.put("out_sha256", sha256_file(out)?);
    manifest.write(manifest_path)?;
    println!(
        "trained generator on {} examples: loss {} -> {}",
        examples.len(),
        trace.first().copied().unwrap_or(0.0),
        trace.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

fn decode_instance(
    params: &Seq2AstParams,
    instance: &QAInstance,
    cfg: &RunConfig,
) -> Result<Option<crate::corpus::Assertion>> {
    let enc = encode(
        params,
        &tokenize(&instance.question),
        &tokenize(&instance.passage),
        cfg.max_src_len,
    )?;
    match decode_greedy(params, &enc, &cfg.limits())?.0 {
        DecodeOutcome::Complete(assertion) => Ok(Some(assertion)),
        DecodeOutcome::Incomplete { .. } => Ok(None),
    }
}

pub fn cmd_generate(
    cfg: &RunConfig,
    ckpt: &Path,
    data: &Path,
    out: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let params = load_generator(ckpt)?;
    let instances = read_instances(data)?;
    let decoded: Vec<(String, Option<crate::corpus::Assertion>)> = instances
        .par_iter()
        .map(|inst| Ok((inst.id.clone(), decode_instance(&params, inst, cfg)?)))
        .collect::<Result<_>>()?;
    let mut lines = String::new();
    let mut complete = 0usize;
    for (id, assertion) in &decoded {
        match assertion {
            Some(a) => {
                complete += 1;
                lines.push_str(&format!("{id}\t{}\n", a.render()));
            }
            None => lines.push_str(&format!("{id}\t\n")),
        }
    }
    std::fs::write(out, lines)?;
    let mut manifest = Manifest::new("generate", cfg);
    manifest.hash_input("data", data)?;
    manifest.hash_input("ckpt", ckpt)?;
    manifest.put("instances", decoded.len());
    manifest.put("complete", complete);
    manifest.put("out_sha256", sha256_file(out)?);
    manifest.write(manifest_path)?;
    println!("decoded {complete}/{} assertions", decoded.len());
    Ok(())
}

pub fn cmd_eval_gen(cfg: &RunConfig, ckpt: &Path, data: &Path, manifest_path: &Path) -> Result<()> {
    let params = load_generator(ckpt)?;
    let instances = read_instances(data)?;
    let pairs: Vec<(String, String)> = instances
        .par_iter()
        .filter_map(|inst| {
            let reference = inst
                .candidates
                .iter()
                .find(|c| c.label == Some(1))
                .map(|c| c.assertion.all_tokens().join(" "))?;
            Some(decode_instance(&params, inst, cfg).map(|decoded| {
                let candidate = decoded
                    .map(|a| a.all_tokens().join(" "))
                    .unwrap_or_default();
                (candidate, reference)
            }))
        })
        .collect::<Result<_>>()?;
    if pairs.is_empty() {
        return Err(Error::Data("no instances with a correct candidate".into()));
    }
    let bleu = corpus_bleu4(&pairs);
    let mut manifest = Manifest::new("eval-gen", cfg);
    manifest.hash_input("data", data)?;
    manifest.hash_input("ckpt", ckpt)?;
    manifest.put("pairs", pairs.len());
    manifest.put("bleu4", bleu);
    manifest.write(manifest_path)?;
    println!("bleu4={bleu}");
    Ok(())
}

pub fn cmd_pbqa(
    cfg: &RunConfig,
    strategy: &str,
    train_path: &Path,
    test_path: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let strategy = Strategy::parse(strategy)?;
    let cdssm = load_cdssm(require(&cfg.cnn_model, "cnn_model")?)?;
    let subset = cfg.subset()?;
    let context;
    let ranker;
    let generator;
    let models = if strategy.uses_assertions() {
        context = load_context(cfg, &subset)?;
        ranker = match strategy {
            Strategy::ExtAst => {
                let (forest, _) = load_forest(require(&cfg.ranker_model, "ranker_model")?)?;
                if forest.arity() != subset.arity() {
                    return Err(Error::Config(format!(
                        "assertion ranker expects {} features, subset {} has {}",
                        forest.arity(),
                        subset,
                        subset.arity()
                    )));
                }
                Some(forest)
            }
            _ => None,
        };
        generator = match strategy {
            Strategy::Seq2Ast => Some(load_generator(require(&cfg.gen_model, "gen_model")?)?),
            _ => None,
        };
        Some(AssertionModels {
            context: &context,
            subset: &subset,
            ranker: ranker.as_ref(),
            generator: generator.as_ref(),
            max_src_len: cfg.max_src_len,
            limits: cfg.limits(),
        })
    } else {
        None
    };
    let train_set = read_instances(train_path)?;
    let test_set = read_instances(test_path)?;
    let mut rows: Vec<(&'static str, RankMetrics)> = Vec::new();
    let run = |s: Strategy, m: Option<&AssertionModels>| -> Result<RankMetrics> {
        let train_groups = build_groups(&train_set, s, &cdssm, m, cfg.seed)?;
        let test_groups = build_groups(&test_set, s, &cdssm, m, cfg.seed.wrapping_add(1))?;
        train_and_eval(&train_groups, &test_groups, &cfg.lambdamart())
    };
    rows.push(("baseline", run(Strategy::Baseline, None)?));
    if strategy.uses_assertions() {
        rows.push((strategy.name(), run(strategy, models.as_ref())?));
    }
    println!("strategy\tmap\tmrr\tp_at_1");
    let mut manifest = Manifest::new("pbqa", cfg);
    manifest.hash_input("train", train_path)?;
    manifest.hash_input("test", test_path)?;
    for (name, metrics) in &rows {
        println!(
            "{name}\t{:.4}\t{:.4}\t{:.4}",
            metrics.map, metrics.mrr, metrics.p_at_1
        );
        put_metrics(&mut manifest, &format!("{name}_"), metrics);
    }
    manifest.write(manifest_path)?;
    Ok(())
}
