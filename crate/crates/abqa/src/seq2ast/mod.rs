//! Generative assertion model. A bidirectional GRU encodes the passage
//! and question as one sequence split by a separator token; a two-level
//! decoder then emits the assertion: a tuple-level GRU carries one state
//! per field, and a word-level GRU with attention over the encoder states
//! spells out each field, closing fields with an end-of-field token and
//! the whole assertion with an end-of-assertion token. Out-of-vocabulary
//! predictions copy the most attended source token.

mod bleu;
mod decode;
mod encdec;
mod train;

pub use bleu::{bleu4, corpus_bleu4};
pub use decode::{decode_greedy, DecodeLimits, DecodeOutcome, DecodeTrace, TraceStep};
pub use encdec::{encode, tuple_step, word_step, Encoding, WordStepCache};
pub(crate) use encdec::{backward_teacher, forward_teacher};
pub use train::{
    build_gen_vocabs, evaluate_loss, instance_gradients, train, GenInstance, TrainConfig,
};

use rand::Rng;

use crate::neuralcore::{AttentionParams, GruCellParams, ParamGroup, Tensor, INIT_SCALE};

pub const SRC_SEP: &str = "<sep>";
pub const SRC_UNK: &str = "<unk>";
pub const TGT_UNK: &str = "<unk>";
pub const TGT_SOS: &str = "<sos>";
pub const TGT_EOF: &str = "<eof>";
pub const TGT_EOA: &str = "<eoa>";

pub(crate) const SRC_UNK_ID: usize = 0;
pub(crate) const SRC_SEP_ID: usize = 1;
pub(crate) const SRC_WORD_BASE: usize = 2;
pub(crate) const TGT_UNK_ID: usize = 0;
pub(crate) const TGT_SOS_ID: usize = 1;
pub(crate) const TGT_EOF_ID: usize = 2;
pub(crate) const TGT_EOA_ID: usize = 3;
pub(crate) const TGT_WORD_BASE: usize = 4;

const TGT_SPECIALS: [&str; 4] = [TGT_UNK, TGT_SOS, TGT_EOF, TGT_EOA];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seq2AstDims {
    pub src_embed: usize,
    pub tgt_embed: usize,
    pub enc_hidden: usize,
    pub tuple_hidden: usize,
    pub word_hidden: usize,
    pub attn: usize,
}

impl Default for Seq2AstDims {
    fn default() -> Self {
        Seq2AstDims {
            src_embed: 32,
            tgt_embed: 32,
            enc_hidden: 64,
            tuple_hidden: 64,
            word_hidden: 64,
            attn: 64,
        }
    }
}

pub struct Seq2AstParams {
    /// Sorted source words; ids start at [`SRC_WORD_BASE`] after the
    /// unknown and separator slots.
    src_vocab: Vec<String>,
    /// Sorted target words; ids start at [`TGT_WORD_BASE`] after the
    /// special tokens.
    tgt_vocab: Vec<String>,
    pub dims: Seq2AstDims,
    pub src_emb: Tensor,
    pub enc_fwd: GruCellParams,
    pub enc_bwd: GruCellParams,
    /// Maps the 2H encoder summary to the initial tuple state (tanh).
    pub enc_init_w: Tensor,
    pub enc_init_b: Tensor,
    /// Stand-in "previous field's last word state" for the first field.
    pub tuple_start: Tensor,
    pub tuple_gru: GruCellParams,
    /// Maps the field state to the field's initial word state (tanh).
    pub word_init_w: Tensor,
    pub word_init_b: Tensor,
    pub word_gru: GruCellParams,
    pub attn: AttentionParams,
    pub tgt_emb: Tensor,
    /// Projects [word state ; attention context] to vocabulary logits.
    pub out_w: Tensor,
    pub out_b: Tensor,
}

fn clean_vocab(words: &[String], reserved: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = words
        .iter()
        .filter(|w| !w.is_empty() && !reserved.contains(&w.as_str()))
        .cloned()
        .collect();
    v.sort();
    v.dedup();
    v
}

impl Seq2AstParams {
    pub fn new(
        src_words: &[String],
        tgt_words: &[String],
        dims: Seq2AstDims,
        rng: &mut impl Rng,
    ) -> Seq2AstParams {
        let src_vocab = clean_vocab(src_words, &[SRC_UNK, SRC_SEP]);
        let tgt_vocab = clean_vocab(tgt_words, &TGT_SPECIALS);
        let enc2 = 2 * dims.enc_hidden;
        let tgt_total = TGT_WORD_BASE + tgt_vocab.len();
        Seq2AstParams {
            src_emb: Tensor::uniform(
                &[SRC_WORD_BASE + src_vocab.len(), dims.src_embed],
                INIT_SCALE,
                rng,
            ),
            src_vocab,
            enc_fwd: GruCellParams::new(dims.src_embed, dims.enc_hidden, rng),
            enc_bwd: GruCellParams::new(dims.src_embed, dims.enc_hidden, rng),
            enc_init_w: Tensor::uniform(&[dims.tuple_hidden, enc2], INIT_SCALE, rng),
            enc_init_b: Tensor::zeros(&[dims.tuple_hidden]),
            tuple_start: Tensor::uniform(&[dims.word_hidden], INIT_SCALE, rng),
            tuple_gru: GruCellParams::new(dims.word_hidden, dims.tuple_hidden, rng),
            word_init_w: Tensor::uniform(&[dims.word_hidden, dims.tuple_hidden], INIT_SCALE, rng),
            word_init_b: Tensor::zeros(&[dims.word_hidden]),
            word_gru: GruCellParams::new(dims.tuple_hidden + dims.tgt_embed, dims.word_hidden, rng),
            attn: AttentionParams::new(dims.word_hidden, enc2, dims.attn, rng),
            tgt_emb: Tensor::uniform(&[tgt_total, dims.tgt_embed], INIT_SCALE, rng),
            out_w: Tensor::uniform(
                &[tgt_total, dims.word_hidden + enc2],
                INIT_SCALE,
                rng,
            ),
            out_b: Tensor::zeros(&[tgt_total]),
            dims,
            tgt_vocab,
        }
    }

    pub fn zeros_like(&self) -> Seq2AstParams {
        let d = self.dims;
        Seq2AstParams {
            src_vocab: self.src_vocab.clone(),
            tgt_vocab: self.tgt_vocab.clone(),
            dims: d,
            src_emb: self.src_emb.zeros_like(),
            enc_fwd: GruCellParams::zeros(d.src_embed, d.enc_hidden),
            enc_bwd: GruCellParams::zeros(d.src_embed, d.enc_hidden),
            enc_init_w: self.enc_init_w.zeros_like(),
            enc_init_b: self.enc_init_b.zeros_like(),
            tuple_start: self.tuple_start.zeros_like(),
            tuple_gru: GruCellParams::zeros(d.word_hidden, d.tuple_hidden),
            word_init_w: self.word_init_w.zeros_like(),
            word_init_b: self.word_init_b.zeros_like(),
            word_gru: GruCellParams::zeros(d.tuple_hidden + d.tgt_embed, d.word_hidden),
            attn: AttentionParams::zeros(d.word_hidden, 2 * d.enc_hidden, d.attn),
            tgt_emb: self.tgt_emb.zeros_like(),
            out_w: self.out_w.zeros_like(),
            out_b: self.out_b.zeros_like(),
        }
    }

    pub fn src_vocab(&self) -> &[String] {
        &self.src_vocab
    }

    pub fn tgt_vocab(&self) -> &[String] {
        &self.tgt_vocab
    }

    pub(crate) fn src_id(&self, token: &str) -> usize {
        if token == SRC_SEP {
            return SRC_SEP_ID;
        }
        match self.src_vocab.binary_search(&token.to_string()) {
            Ok(i) => SRC_WORD_BASE + i,
            Err(_) => SRC_UNK_ID,
        }
    }

    pub(crate) fn tgt_id(&self, token: &str) -> usize {
        if let Some(i) = TGT_SPECIALS.iter().position(|&s| s == token) {
            return i;
        }
        match self.tgt_vocab.binary_search(&token.to_string()) {
            Ok(i) => TGT_WORD_BASE + i,
            Err(_) => TGT_UNK_ID,
        }
    }

    pub(crate) fn tgt_token(&self, id: usize) -> &str {
        if id < TGT_WORD_BASE {
            TGT_SPECIALS[id]
        } else {
            &self.tgt_vocab[id - TGT_WORD_BASE]
        }
    }

}

impl ParamGroup for Seq2AstParams {
    fn tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![("src_emb".to_string(), &self.src_emb)];
        for (prefix, cell) in [
            ("enc_fwd", &self.enc_fwd),
            ("enc_bwd", &self.enc_bwd),
            ("tuple", &self.tuple_gru),
            ("word", &self.word_gru),
        ] {
            for (name, t) in cell.tensors() {
                out.push((format!("{prefix}/{name}"), t));
            }
        }
        out.push(("enc_init_w".into(), &self.enc_init_w));
        out.push(("enc_init_b".into(), &self.enc_init_b));
        out.push(("tuple_start".into(), &self.tuple_start));
        out.push(("word_init_w".into(), &self.word_init_w));
        out.push(("word_init_b".into(), &self.word_init_b));
        for (name, t) in self.attn.tensors() {
            out.push((format!("attn/{name}"), t));
        }
        out.push(("tgt_emb".into(), &self.tgt_emb));
        out.push(("out_w".into(), &self.out_w));
        out.push(("out_b".into(), &self.out_b));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.src_emb];
        out.extend(self.enc_fwd.tensors_mut());
        out.extend(self.enc_bwd.tensors_mut());
        out.extend(self.tuple_gru.tensors_mut());
        out.extend(self.word_gru.tensors_mut());
        out.push(&mut self.enc_init_w);
        out.push(&mut self.enc_init_b);
        out.push(&mut self.tuple_start);
        out.push(&mut self.word_init_w);
        out.push(&mut self.word_init_b);
        out.extend(self.attn.tensors_mut());
        out.push(&mut self.tgt_emb);
        out.push(&mut self.out_w);
        out.push(&mut self.out_b);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn words(text: &str) -> Vec<String> {
        text.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn vocab_ids_reserve_special_slots() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = Seq2AstParams::new(
            &words("the park opened <sep>"),
            &words("park opened <eof>"),
            Seq2AstDims {
                src_embed: 3,
                tgt_embed: 3,
                enc_hidden: 2,
                tuple_hidden: 2,
                word_hidden: 2,
                attn: 2,
            },
            &mut rng,
        );
        // Reserved strings never enter the word lists.
        assert_eq!(p.src_vocab(), &words("opened park the"));
        assert_eq!(p.tgt_vocab(), &words("opened park"));
        assert_eq!(p.src_id("<sep>"), SRC_SEP_ID);
        assert_eq!(p.src_id("unseen"), SRC_UNK_ID);
        assert_eq!(p.src_id("opened"), SRC_WORD_BASE);
        assert_eq!(p.tgt_id("<eoa>"), TGT_EOA_ID);
        assert_eq!(p.tgt_id("park"), TGT_WORD_BASE + 1);
        assert_eq!(p.tgt_token(TGT_EOF_ID), TGT_EOF);
        assert_eq!(p.tgt_token(TGT_WORD_BASE), "opened");
        // Tensor order matches between names and mutable access.
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.len(), p.tensors().len());
        assert_eq!(p.tensors().len(), {
            let mut q = Seq2AstParams::new(&[], &[], p.dims, &mut rng);
            q.tensors_mut().len()
        });
    }
}
