//! Top-K relation-path expansion with a learned stop.
//!
//! A path is a relation sequence grown from one topic entity. Each step either
//! expands a relation `r` with probability `sigmoid(s_r - s_end)` or stops with
//! probability `prod_c sigmoid(s_end - s_c)` over the current candidates. The
//! path probability is the product of its step probabilities, stop included.

use std::cmp::Ordering;
use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{
    dot, end_probability, expansion_probability, Choice, RelationScorer, ScorerParams,
};
use crate::error::{Error, Result};
use crate::kb::{EntityId, EntitySet, KnowledgeBase, RelationId};
use crate::supervision::Query;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetrievalConfig {
    pub beam_width: usize,
    pub max_hops: usize,
    /// Drop relations at or below 0.5 whenever some relation is above 0.5.
    pub threshold_stop: bool,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            beam_width: 10,
            max_hops: 3,
            threshold_stop: true,
        }
    }
}

impl RetrievalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::invalid("beam width must be at least 1"));
        }
        if self.max_hops == 0 {
            return Err(Error::invalid("max hops must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredPath {
    pub topic: EntityId,
    pub relations: Vec<RelationId>,
    /// One entry per relation plus the final stop step.
    pub step_probs: Vec<f64>,
    pub joint_prob: f64,
    pub ended: bool,
}

/// Total order used for ranking: probability descending, then relation ids.
pub fn rank_order(a_prob: f64, a_rel: &[RelationId], b_prob: f64, b_rel: &[RelationId]) -> Ordering {
    b_prob.total_cmp(&a_prob).then_with(|| a_rel.cmp(b_rel))
}

struct Embeddings {
    relations: Vec<Vec<f64>>,
    end: Vec<f64>,
}

impl Embeddings {
    fn new<S: RelationScorer>(scorer: &S, kb: &KnowledgeBase) -> Result<Self> {
        let relations = kb
            .relations()
            .map(|r| scorer.encode_relation(kb, Choice::Relation(r)))
            .collect::<Result<Vec<_>>>()?;
        let end = scorer.encode_relation(kb, Choice::End)?;
        if end.len() != scorer.dim() {
            return Err(Error::WidthMismatch {
                left: end.len(),
                right: scorer.dim(),
            });
        }
        Ok(Embeddings { relations, end })
    }
}

/// Scores of one question state: END and each candidate relation.
struct StateScores {
    q: Vec<f64>,
    s_end: f64,
    candidates: Vec<RelationId>,
    scores: Vec<f64>,
}

fn state_scores<S: RelationScorer>(
    scorer: &S,
    kb: &KnowledgeBase,
    emb: &Embeddings,
    text: &str,
    history: &[RelationId],
    frontier: &EntitySet,
) -> Result<StateScores> {
    let q = scorer.encode_question(kb, text, history);
    let s_end = dot(&q, &emb.end);
    let candidates = kb.candidate_relations(frontier)?;
    let scores = candidates
        .iter()
        .map(|r| dot(&q, &emb.relations[r.index()]))
        .collect();
    Ok(StateScores {
        q,
        s_end,
        candidates,
        scores,
    })
}

#[derive(Clone)]
struct BeamItem {
    relations: Vec<RelationId>,
    frontier: EntitySet,
    step_probs: Vec<f64>,
    prob: f64,
    ended: bool,
}

fn item_order(a: &BeamItem, b: &BeamItem) -> Ordering {
    rank_order(a.prob, &a.relations, b.prob, &b.relations)
        .then_with(|| b.ended.cmp(&a.ended))
}

/// Beam search from a single topic entity. Returns at most `beam_width`
/// finished paths ranked by joint probability.
pub fn expand_beam<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    question_text: &str,
    topic: EntityId,
    cfg: &RetrievalConfig,
) -> Result<Vec<ScoredPath>> {
    cfg.validate()?;
    kb.check_entity(topic)?;
    let emb = Embeddings::new(scorer, kb)?;
    let mut beam = vec![BeamItem {
        relations: Vec::new(),
        frontier: EntitySet::singleton(topic),
        step_probs: Vec::new(),
        prob: 1.0,
        ended: false,
    }];

    loop {
        let mut pool: Vec<BeamItem> = Vec::new();
        for item in beam {
            if item.ended {
                pool.push(item);
                continue;
            }
            let st = state_scores(
                scorer,
                kb,
                &emb,
                question_text,
                &item.relations,
                &item.frontier,
            )?;
            let p_end = end_probability(st.s_end, &st.scores)?;
            if item.relations.len() < cfg.max_hops {
                let probs = st
                    .scores
                    .iter()
                    .map(|s| expansion_probability(*s, st.s_end))
                    .collect::<Result<Vec<_>>>()?;
                let prune = cfg.threshold_stop && probs.iter().any(|p| *p > 0.5);
                for (r, p) in st.candidates.iter().zip(&probs) {
                    if prune && *p <= 0.5 {
                        continue;
                    }
                    let frontier = kb.follow(&item.frontier, *r)?;
                    if frontier.is_empty() {
                        continue;
                    }
                    let mut relations = item.relations.clone();
                    relations.push(*r);
                    let mut step_probs = item.step_probs.clone();
                    step_probs.push(*p);
                    pool.push(BeamItem {
                        relations,
                        frontier,
                        step_probs,
                        prob: item.prob * p,
                        ended: false,
                    });
                }
            }
            let mut step_probs = item.step_probs;
            step_probs.push(p_end);
            pool.push(BeamItem {
                relations: item.relations,
                frontier: item.frontier,
                step_probs,
                prob: item.prob * p_end,
                ended: true,
            });
        }
        pool.sort_by(item_order);
        let mut seen = HashSet::new();
        pool.retain(|it| seen.insert((it.relations.clone(), it.ended)));
        pool.truncate(cfg.beam_width);
        let done = pool.iter().all(|it| it.ended);
        beam = pool;
        if done {
            break;
        }
    }

    Ok(beam
        .into_iter()
        .map(|it| ScoredPath {
            topic,
            relations: it.relations,
            step_probs: it.step_probs,
            joint_prob: it.prob,
            ended: true,
        })
        .collect())
}

/// Recomputes step probabilities and the joint probability of `relations`
/// from `topic`, ending with the stop step.
pub fn path_step_probabilities<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    question_text: &str,
    topic: EntityId,
    relations: &[RelationId],
) -> Result<(Vec<f64>, f64)> {
    kb.check_entity(topic)?;
    for r in relations {
        kb.check_relation(*r)?;
    }
    let emb = Embeddings::new(scorer, kb)?;
    let mut frontier = EntitySet::singleton(topic);
    let mut step_probs = Vec::with_capacity(relations.len() + 1);
    let mut joint = 1.0;
    for t in 0..=relations.len() {
        let st = state_scores(scorer, kb, &emb, question_text, &relations[..t], &frontier)?;
        let p = match relations.get(t) {
            Some(r) => {
                let s_r = dot(&st.q, &emb.relations[r.index()]);
                let p = expansion_probability(s_r, st.s_end)?;
                frontier = kb.follow(&frontier, *r)?;
                p
            }
            None => end_probability(st.s_end, &st.scores)?,
        };
        step_probs.push(p);
        joint *= p;
    }
    Ok((step_probs, joint))
}

/// Probability of a (finished) path under the current scorer.
pub fn path_probability<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    question_text: &str,
    path: &ScoredPath,
) -> Result<f64> {
    Ok(path_step_probabilities(kb, scorer, question_text, path.topic, &path.relations)?.1)
}

/// Product of given step probabilities.
pub fn joint_probability(step_probs: &[f64]) -> f64 {
    step_probs.iter().product()
}

/// Beam search from every topic entity; `n` topics yield at most `n * K`
/// paths, grouped by topic in the question's topic order.
pub fn retrieve<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    query: &Query<'_>,
    cfg: &RetrievalConfig,
) -> Result<Vec<ScoredPath>> {
    let mut out = Vec::new();
    let mut any = false;
    for topic in query.topic_entities.iter() {
        if kb.check_entity(topic).is_err() {
            log::warn!("question {}: topic {} not in knowledge base", query.id, topic);
            continue;
        }
        any = true;
        out.extend(expand_beam(kb, scorer, query.text, topic, cfg)?);
    }
    if !any {
        return Err(Error::NoTopicEntity(query.id.to_owned()));
    }
    Ok(out)
}

/// [`retrieve`] over many questions in parallel; output order follows input.
pub fn retrieve_all<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    queries: &[Query<'_>],
    cfg: &RetrievalConfig,
) -> Result<Vec<Vec<ScoredPath>>> {
    queries
        .par_iter()
        .map(|q| retrieve(kb, scorer, q, cfg))
        .collect()
}

/// Log-probability of a path under the bag encoder. When `grad` is given,
/// `scale * d log p / dθ` is accumulated into it.
pub fn path_log_probability(
    kb: &KnowledgeBase,
    params: &ScorerParams,
    table: &crate::encoder::RelationTable,
    question_text: &str,
    topic: EntityId,
    relations: &[RelationId],
    scale: f64,
    mut grad: Option<&mut ScorerParams>,
) -> Result<f64> {
    kb.check_entity(topic)?;
    let mut frontier = EntitySet::singleton(topic);
    let mut total = 0.0;
    for t in 0..=relations.len() {
        let tokens = params.question_tokens(kb, question_text, &relations[..t]);
        match relations.get(t) {
            Some(r) => {
                kb.check_relation(*r)?;
                total += params.threshold_log_likelihood(
                    table,
                    &tokens,
                    Some(*r),
                    &[],
                    scale,
                    grad.as_deref_mut(),
                );
                frontier = kb.follow(&frontier, *r)?;
            }
            None => {
                let cands = kb.candidate_relations(&frontier)?;
                total += params.threshold_log_likelihood(
                    table,
                    &tokens,
                    None,
                    &cands,
                    scale,
                    grad.as_deref_mut(),
                );
            }
        }
    }
    Ok(total)
}
