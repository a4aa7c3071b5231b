//! Dual encoder scoring (question state, relation) pairs.
//!
//! The default scorer averages token embeddings. Questions are encoded together
//! with the relations already expanded, `[q; SEP; r1; SEP; ...; rt]`, and
//! relations by their tokenized surface form. A learned END vector acts as the
//! per-state stop threshold.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{KnowledgeBase, RelationId};

/// Segment separator. Never produced by [`tokenize`].
pub const SEP_TOKEN: &str = "[sep]";

/// Relation-name tokens after a separator get their own rows, so a bag of
/// tokens can tell a relation already walked from one the question mentions.
pub fn history_token(token: &str) -> String {
    format!("[h]{token}")
}

pub const DEFAULT_DIM: usize = 64;
pub const INIT_RANGE: f64 = 0.1;

/// Lowercases and splits on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// A relation to expand, or the virtual END relation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Choice {
    Relation(RelationId),
    End,
}

/// Question text plus the relations expanded so far.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionState {
    pub question_text: String,
    pub history: Vec<RelationId>,
}

impl QuestionState {
    pub fn new(question_text: impl Into<String>, history: Vec<RelationId>) -> Self {
        QuestionState {
            question_text: question_text.into(),
            history,
        }
    }
}

/// Anything that embeds question states and relations into a shared space.
pub trait RelationScorer: Sync {
    fn dim(&self) -> usize;

    fn encode_question(&self, kb: &KnowledgeBase, text: &str, history: &[RelationId]) -> Vec<f64>;

    fn encode_relation(&self, kb: &KnowledgeBase, choice: Choice) -> Result<Vec<f64>>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl From<Vec<String>> for Vocab {
    fn from(tokens: Vec<String>) -> Self {
        let mut vocab = Vocab::default();
        for t in tokens {
            vocab.insert(&t);
        }
        vocab
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.tokens
    }
}

impl Vocab {
    /// Separator first, then relation-name tokens by relation id (each
    /// followed by its history form), then tokens of `texts` in order of
    /// appearance.
    pub fn build<'a>(kb: &KnowledgeBase, texts: impl IntoIterator<Item = &'a str>) -> Self {
        let mut vocab = Vocab::default();
        vocab.insert(SEP_TOKEN);
        for name in kb.relation_names() {
            for t in tokenize(name) {
                vocab.insert(&t);
                vocab.insert(&history_token(&t));
            }
        }
        for text in texts {
            for t in tokenize(text) {
                vocab.insert(&t);
            }
        }
        vocab
    }

    pub fn insert(&mut self, token: &str) -> usize {
        if let Some(&i) = self.index.get(token) {
            return i;
        }
        let i = self.tokens.len();
        self.tokens.push(token.to_owned());
        self.index.insert(token.to_owned(), i);
        i
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerConfig {
    pub dim: usize,
    /// Give relations their own token table instead of sharing the question's.
    pub separate_towers: bool,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig {
            dim: DEFAULT_DIM,
            separate_towers: false,
        }
    }
}

/// Trainable parameters of the bag-of-tokens dual encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerParams {
    vocab: Vocab,
    dim: usize,
    token_embeddings: Vec<f64>,
    relation_embeddings: Option<Vec<f64>>,
    end_embedding: Vec<f64>,
}

impl ScorerParams {
    pub fn init(vocab: Vocab, config: ScorerConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| rng.gen_range(-INIT_RANGE..=INIT_RANGE))
                .collect()
        };
        let n = vocab.len() * config.dim;
        let token_embeddings = draw(n);
        let end_embedding = draw(config.dim);
        let relation_embeddings = config.separate_towers.then(|| draw(n));
        ScorerParams {
            vocab,
            dim: config.dim,
            token_embeddings,
            relation_embeddings,
            end_embedding,
        }
    }

    /// Builds from explicit tables; used by tests and checkpoint tooling.
    pub fn from_parts(
        vocab: Vocab,
        dim: usize,
        token_embeddings: Vec<f64>,
        relation_embeddings: Option<Vec<f64>>,
        end_embedding: Vec<f64>,
    ) -> Result<Self> {
        let params = ScorerParams {
            vocab,
            dim,
            token_embeddings,
            relation_embeddings,
            end_embedding,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.vocab.len() * self.dim;
        if self.token_embeddings.len() != n {
            return Err(Error::WidthMismatch {
                left: self.token_embeddings.len(),
                right: n,
            });
        }
        if let Some(rel) = &self.relation_embeddings {
            if rel.len() != n {
                return Err(Error::WidthMismatch {
                    left: rel.len(),
                    right: n,
                });
            }
        }
        if self.end_embedding.len() != self.dim {
            return Err(Error::WidthMismatch {
                left: self.end_embedding.len(),
                right: self.dim,
            });
        }
        if self.slices().iter().any(|s| s.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite("scorer parameters"));
        }
        Ok(())
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn separate_towers(&self) -> bool {
        self.relation_embeddings.is_some()
    }

    pub fn end_embedding(&self) -> &[f64] {
        &self.end_embedding
    }

    pub fn token_row(&self, token: usize) -> &[f64] {
        &self.token_embeddings[token * self.dim..(token + 1) * self.dim]
    }

    pub fn token_row_mut(&mut self, token: usize) -> &mut [f64] {
        &mut self.token_embeddings[token * self.dim..(token + 1) * self.dim]
    }

    pub fn end_embedding_mut(&mut self) -> &mut [f64] {
        &mut self.end_embedding
    }

    fn relation_table(&self) -> &[f64] {
        self.relation_embeddings
            .as_deref()
            .unwrap_or(&self.token_embeddings)
    }

    fn relation_table_mut(&mut self) -> &mut [f64] {
        match self.relation_embeddings.as_mut() {
            Some(t) => t,
            None => &mut self.token_embeddings,
        }
    }

    /// Zero-valued tensor with the same layout; used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        ScorerParams {
            vocab: self.vocab.clone(),
            dim: self.dim,
            token_embeddings: vec![0.0; self.token_embeddings.len()],
            relation_embeddings: self.relation_embeddings.as_ref().map(|t| vec![0.0; t.len()]),
            end_embedding: vec![0.0; self.dim],
        }
    }

    /// Parameter blocks in a fixed order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = vec![self.token_embeddings.as_slice()];
        if let Some(r) = &self.relation_embeddings {
            out.push(r);
        }
        out.push(&self.end_embedding);
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = vec![self.token_embeddings.as_mut_slice()];
        if let Some(r) = self.relation_embeddings.as_mut() {
            out.push(r);
        }
        out.push(&mut self.end_embedding);
        out
    }

    fn push_tokens(&self, text: &str, out: &mut Vec<usize>) {
        out.extend(tokenize(text).iter().filter_map(|t| self.vocab.get(t)));
    }

    /// In-vocabulary token indices of `[q; SEP; r1; ...; SEP; rt]`, with the
    /// history relations in their [`history_token`] form.
    pub fn question_tokens(
        &self,
        kb: &KnowledgeBase,
        text: &str,
        history: &[RelationId],
    ) -> Vec<usize> {
        let mut out = Vec::new();
        self.push_tokens(text, &mut out);
        let sep = self.vocab.get(SEP_TOKEN);
        for r in history {
            out.extend(sep);
            if let Ok(name) = kb.relation_name(*r) {
                out.extend(tokenize(name).iter().filter_map(|t| self.vocab.get(&history_token(t))));
            }
        }
        out
    }

    pub fn relation_tokens(&self, kb: &KnowledgeBase, r: RelationId) -> Result<Vec<usize>> {
        let name = kb.relation_name(r)?;
        let mut out = Vec::new();
        self.push_tokens(name, &mut out);
        Ok(out)
    }

    fn mean_rows(&self, table: &[f64], tokens: &[usize]) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        if tokens.is_empty() {
            return v;
        }
        for &t in tokens {
            let row = &table[t * self.dim..(t + 1) * self.dim];
            for (a, b) in v.iter_mut().zip(row) {
                *a += b;
            }
        }
        let inv = 1.0 / tokens.len() as f64;
        v.iter_mut().for_each(|x| *x *= inv);
        v
    }

    pub fn embed_question_tokens(&self, tokens: &[usize]) -> Vec<f64> {
        self.mean_rows(&self.token_embeddings, tokens)
    }

    pub fn embed_relation_tokens(&self, tokens: &[usize]) -> Vec<f64> {
        self.mean_rows(self.relation_table(), tokens)
    }

    /// Adds `d loss / d f(q)` back onto the question token rows of `grad`.
    pub fn backprop_question(&self, tokens: &[usize], grad_q: &[f64], grad: &mut ScorerParams) {
        if tokens.is_empty() {
            return;
        }
        let w = 1.0 / tokens.len() as f64;
        let d = self.dim;
        for &t in tokens {
            let row = &mut grad.token_embeddings[t * d..(t + 1) * d];
            for (g, x) in row.iter_mut().zip(grad_q) {
                *g += w * x;
            }
        }
    }

    /// Adds `d loss / d h(r)` back onto relation token rows (or END) of `grad`.
    pub fn backprop_relation(
        &self,
        kb: &KnowledgeBase,
        choice: Choice,
        grad_r: &[f64],
        grad: &mut ScorerParams,
    ) -> Result<()> {
        match choice {
            Choice::End => {
                for (g, x) in grad.end_embedding.iter_mut().zip(grad_r) {
                    *g += x;
                }
            }
            Choice::Relation(r) => {
                let tokens = self.relation_tokens(kb, r)?;
                if tokens.is_empty() {
                    return Ok(());
                }
                let w = 1.0 / tokens.len() as f64;
                let d = self.dim;
                let table = grad.relation_table_mut();
                for &t in &tokens {
                    let row = &mut table[t * d..(t + 1) * d];
                    for (g, x) in row.iter_mut().zip(grad_r) {
                        *g += w * x;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Relation embeddings and token lists of one scorer over one KB.
#[derive(Debug, Clone)]
pub struct RelationTable {
    tokens: Vec<Vec<usize>>,
    embeddings: Vec<Vec<f64>>,
}

impl RelationTable {
    pub fn embedding(&self, r: RelationId) -> &[f64] {
        &self.embeddings[r.index()]
    }
}

impl ScorerParams {
    pub fn relation_table_for(&self, kb: &KnowledgeBase) -> RelationTable {
        let tokens: Vec<Vec<usize>> = kb
            .relations()
            .map(|r| self.relation_tokens(kb, r).unwrap_or_default())
            .collect();
        let embeddings = tokens
            .iter()
            .map(|t| self.embed_relation_tokens(t))
            .collect();
        RelationTable { tokens, embeddings }
    }

    /// Log-likelihood of one question state against its END threshold:
    /// `log sigmoid(s_gold - s_end)` for the gold relation (if any) plus
    /// `log sigmoid(s_end - s_c)` for every competitor `c`.
    ///
    /// When `grad` is given, `scale * d/dθ` of that value is added to it.
    pub fn threshold_log_likelihood(
        &self,
        relations: &RelationTable,
        question_tokens: &[usize],
        gold: Option<RelationId>,
        competitors: &[RelationId],
        scale: f64,
        grad: Option<&mut ScorerParams>,
    ) -> f64 {
        let q = self.embed_question_tokens(question_tokens);
        let end = &self.end_embedding;
        let s_end = dot(&q, end);
        let mut value = 0.0;
        let d = self.dim;
        let mut grad_q = vec![0.0; d];
        let mut grad_end = vec![0.0; d];
        // (relation, coefficient on d s_r)
        let mut rel_terms: Vec<(RelationId, f64)> = Vec::new();
        if let Some(r) = gold {
            let h = relations.embedding(r);
            let x = dot(&q, h) - s_end;
            value += log_sigmoid(x);
            let c = scale * sigmoid(-x);
            for i in 0..d {
                grad_q[i] += c * (h[i] - end[i]);
                grad_end[i] -= c * q[i];
            }
            rel_terms.push((r, c));
        }
        for &r in competitors {
            let h = relations.embedding(r);
            let x = s_end - dot(&q, h);
            value += log_sigmoid(x);
            let c = scale * sigmoid(-x);
            for i in 0..d {
                grad_q[i] += c * (end[i] - h[i]);
                grad_end[i] += c * q[i];
            }
            rel_terms.push((r, -c));
        }
        if let Some(grad) = grad {
            self.backprop_question(question_tokens, &grad_q, grad);
            for (g, x) in grad.end_embedding.iter_mut().zip(&grad_end) {
                *g += x;
            }
            for (r, c) in rel_terms {
                let tokens = &relations.tokens[r.index()];
                if tokens.is_empty() {
                    continue;
                }
                let w = c / tokens.len() as f64;
                let table = grad.relation_table_mut();
                for &t in tokens {
                    let row = &mut table[t * d..(t + 1) * d];
                    for (g, x) in row.iter_mut().zip(&q) {
                        *g += w * x;
                    }
                }
            }
        }
        value
    }
}

impl RelationScorer for ScorerParams {
    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_question(&self, kb: &KnowledgeBase, text: &str, history: &[RelationId]) -> Vec<f64> {
        let tokens = self.question_tokens(kb, text, history);
        self.embed_question_tokens(&tokens)
    }

    fn encode_relation(&self, kb: &KnowledgeBase, choice: Choice) -> Result<Vec<f64>> {
        match choice {
            Choice::End => Ok(self.end_embedding.clone()),
            Choice::Relation(r) => {
                let tokens = self.relation_tokens(kb, r)?;
                Ok(self.embed_relation_tokens(&tokens))
            }
        }
    }
}

pub fn encode_question(
    params: &impl RelationScorer,
    state: &QuestionState,
    kb: &KnowledgeBase,
) -> Vec<f64> {
    params.encode_question(kb, &state.question_text, &state.history)
}

pub fn encode_relation(
    params: &impl RelationScorer,
    choice: Choice,
    kb: &KnowledgeBase,
) -> Result<Vec<f64>> {
    if let Choice::Relation(r) = choice {
        kb.check_relation(r)?;
    }
    params.encode_relation(kb, choice)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relevance score `<q, r>`.
pub fn score(q_emb: &[f64], r_emb: &[f64]) -> Result<f64> {
    if q_emb.len() != r_emb.len() {
        return Err(Error::WidthMismatch {
            left: q_emb.len(),
            right: r_emb.len(),
        });
    }
    Ok(dot(q_emb, r_emb))
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log sigmoid(x)` without overflow.
pub fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Probability of expanding a relation scored `s_r` against the END score:
/// `sigmoid(s_r - s_end)`, which exceeds 0.5 exactly when `s_r > s_end`.
pub fn expansion_probability(s_r: f64, s_end: f64) -> Result<f64> {
    if !s_r.is_finite() || !s_end.is_finite() {
        return Err(Error::NonFinite("expansion score"));
    }
    Ok(sigmoid(s_r - s_end))
}

/// Probability of stopping: every candidate relation falls below the END
/// threshold, `prod_c sigmoid(s_end - s_c)`. An empty candidate set stops
/// with certainty.
pub fn end_probability(s_end: f64, candidate_scores: &[f64]) -> Result<f64> {
    Ok(log_end_probability(s_end, candidate_scores)?.exp())
}

pub fn log_end_probability(s_end: f64, candidate_scores: &[f64]) -> Result<f64> {
    if !s_end.is_finite() || candidate_scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("expansion score"));
    }
    Ok(candidate_scores
        .iter()
        .map(|s_c| log_sigmoid(s_end - s_c))
        .sum())
}

impl crate::optim::Parameters for ScorerParams {
    fn blocks(&self) -> Vec<&[f64]> {
        self.slices()
    }

    fn blocks_mut(&mut self) -> Vec<&mut [f64]> {
        self.slices_mut()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::turing_kb;

    fn params_for(kb: &KnowledgeBase, texts: &[&str], dim: usize) -> ScorerParams {
        let vocab = Vocab::build(kb, texts.iter().copied());
        ScorerParams::init(
            vocab,
            ScorerConfig {
                dim,
                separate_towers: false,
            },
            7,
        )
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Where did X_y go?"), vec!["where", "did", "x", "y", "go"]);
        assert_eq!(tokenize("graduate__inv"), vec!["graduate", "inv"]);
        assert!(tokenize("  ,;").is_empty());
    }

    #[test]
    fn empty_history_encodes_question_only() {
        let kb = turing_kb();
        let p = params_for(&kb, &["where did they graduate"], 8);
        let q = p.encode_question(&kb, "where did they graduate", &[]);
        let tokens: Vec<usize> = ["where", "did", "they", "graduate"]
            .iter()
            .map(|t| p.vocab().get(t).unwrap())
            .collect();
        assert_eq!(q, p.embed_question_tokens(&tokens));
    }

    #[test]
    fn walked_relations_use_history_rows() {
        let kb = turing_kb();
        let p = params_for(&kb, &["where did they graduate"], 8);
        let h = vec![kb.relation_id("graduate").unwrap()];
        let tokens = p.question_tokens(&kb, "where did they graduate", &h);
        let plain = p.vocab().get("graduate").unwrap();
        let walked = p.vocab().get("[h]graduate").unwrap();
        assert_ne!(plain, walked);
        assert_eq!(tokens.iter().filter(|&&t| t == plain).count(), 1);
        assert_eq!(tokens.last(), Some(&walked));
        assert_eq!(tokens[tokens.len() - 2], p.vocab().get(SEP_TOKEN).unwrap());
    }

    #[test]
    fn encoding_is_deterministic() {
        let kb = turing_kb();
        let p = params_for(&kb, &["who won"], 8);
        let h = vec![kb.relation_id("win__inv").unwrap()];
        assert_eq!(
            p.encode_question(&kb, "who won", &h),
            p.encode_question(&kb, "who won", &h)
        );
    }

    #[test]
    fn out_of_vocabulary_text_is_zero() {
        let kb = turing_kb();
        let p = params_for(&kb, &[], 8);
        assert_eq!(p.encode_question(&kb, "zzz qqq", &[]), vec![0.0; 8]);
    }

    #[test]
    fn history_changes_the_question_embedding() {
        let kb = turing_kb();
        let p = params_for(&kb, &["who won"], 8);
        let h = vec![kb.relation_id("graduate").unwrap()];
        assert_ne!(
            p.encode_question(&kb, "who won", &[]),
            p.encode_question(&kb, "who won", &h)
        );
    }

    #[test]
    fn end_relation_is_end_embedding() {
        let kb = turing_kb();
        let p = params_for(&kb, &[], 8);
        assert_eq!(
            encode_relation(&p, Choice::End, &kb).unwrap(),
            p.end_embedding().to_vec()
        );
    }

    #[test]
    fn single_token_relation_is_its_row() {
        let kb = turing_kb();
        let p = params_for(&kb, &[], 8);
        let r = kb.relation_id("graduate").unwrap();
        let row = p.token_row(p.vocab().get("graduate").unwrap()).to_vec();
        assert_eq!(encode_relation(&p, Choice::Relation(r), &kb).unwrap(), row);
    }

    #[test]
    fn inverse_marker_separates_relations() {
        let kb = turing_kb();
        let p = params_for(&kb, &[], 8);
        assert!(p.vocab().get("inv").is_some());
        let g = kb.relation_id("graduate").unwrap();
        let gi = kb.relation_id("graduate__inv").unwrap();
        assert_ne!(
            encode_relation(&p, Choice::Relation(g), &kb).unwrap(),
            encode_relation(&p, Choice::Relation(gi), &kb).unwrap()
        );
        assert!(encode_relation(&p, Choice::Relation(RelationId(99)), &kb).is_err());
    }

    #[test]
    fn score_examples() {
        assert_eq!(score(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_eq!(score(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), 11.0);
        assert_eq!(
            score(&[0.3, -2.0], &[1.5, 4.0]).unwrap(),
            score(&[1.5, 4.0], &[0.3, -2.0]).unwrap()
        );
        assert!(matches!(
            score(&[1.0], &[1.0, 2.0]),
            Err(Error::WidthMismatch { .. })
        ));
    }

    #[test]
    fn expansion_probability_examples() {
        assert_eq!(expansion_probability(1.5, 1.5).unwrap(), 0.5);
        assert!((expansion_probability(2.0, 0.0).unwrap() - 0.880797).abs() < 1e-6);
        assert!((expansion_probability(0.0, 2.0).unwrap() - 0.119203).abs() < 1e-6);
        assert!(expansion_probability(f64::NAN, 0.0).is_err());
        assert!(expansion_probability(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn end_probability_of_no_candidates_is_one() {
        assert_eq!(end_probability(0.3, &[]).unwrap(), 1.0);
        let p = end_probability(0.0, &[-2.0, -2.0]).unwrap();
        assert!((p - 0.880797_f64.powi(2)).abs() < 1e-6);
    }

    #[test]
    fn separate_towers_use_their_own_table() {
        let kb = turing_kb();
        let vocab = Vocab::build(&kb, ["graduate"]);
        let p = ScorerParams::init(
            vocab,
            ScorerConfig {
                dim: 4,
                separate_towers: true,
            },
            1,
        );
        let g = kb.relation_id("graduate").unwrap();
        let q = p.encode_question(&kb, "graduate", &[]);
        let r = p.encode_relation(&kb, Choice::Relation(g)).unwrap();
        assert_ne!(q, r);
        assert_eq!(p.slices().len(), 3);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn expansion_is_complementary(a in -30.0f64..30.0, b in -30.0f64..30.0) {
                let s = expansion_probability(a, b).unwrap() + expansion_probability(b, a).unwrap();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }

            #[test]
            fn expansion_is_monotone(a in -8.0f64..8.0, b in -8.0f64..8.0, d in 0.01f64..5.0) {
                prop_assert!(expansion_probability(a + d, b).unwrap() > expansion_probability(a, b).unwrap());
                prop_assert!(expansion_probability(a, b + d).unwrap() < expansion_probability(a, b).unwrap());
                let p = expansion_probability(a, b).unwrap();
                prop_assert!(p > 0.0 && p < 1.0);
                prop_assert_eq!(p > 0.5, a > b);
            }

            #[test]
            fn log_sigmoid_matches_naive(x in -30.0f64..30.0) {
                prop_assert!((log_sigmoid(x) - sigmoid(x).ln()).abs() < 1e-9);
            }
        }
    }
}
