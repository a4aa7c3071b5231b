//! Retrieval coverage, QA metrics and the PPR size comparison.

pub mod synthetic;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityId, EntitySet, KnowledgeBase};
use crate::reasoner::AnswerDistribution;
use crate::retriever::ScoredPath;
use crate::subgraph::{induce_tree, ppr_subgraph, subgraph_from_paths, PprConfig};
use crate::supervision::Question;

/// What counts as covering an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverageMode {
    /// Any layer of any retrieved tree.
    #[default]
    Trees,
    /// Only the leaf layer of a retrieved tree.
    Leaves,
    /// The merged subgraph built from the retrieved trees.
    Merged,
}

/// The first `k` paths of every topic, keeping the input order.
pub fn top_k_per_topic(paths: &[ScoredPath], k: usize) -> Vec<ScoredPath> {
    let mut seen: Vec<(EntityId, usize)> = Vec::new();
    let mut out = Vec::new();
    for p in paths {
        let slot = match seen.iter_mut().find(|(t, _)| *t == p.topic) {
            Some(s) => s,
            None => {
                seen.push((p.topic, 0));
                seen.last_mut().expect("just pushed")
            }
        };
        if slot.1 < k {
            slot.1 += 1;
            out.push(p.clone());
        }
    }
    out
}

/// True when some tree among the top `k` paths per topic holds an answer.
pub fn paths_cover(kb: &KnowledgeBase, paths: &[ScoredPath], answers: &EntitySet, k: usize) -> Result<bool> {
    covered(kb, &top_k_per_topic(paths, k), answers, CoverageMode::Trees).map(|c| c.0)
}

/// (hit, entity count of the retrieved subgraph)
fn covered(kb: &KnowledgeBase, paths: &[ScoredPath], answers: &EntitySet, mode: CoverageMode) -> Result<(bool, usize)> {
    if mode == CoverageMode::Merged {
        return match subgraph_from_paths(kb, paths) {
            Ok(g) => Ok((g.entities.intersects(answers), g.entities.len())),
            Err(Error::EmptySubgraph) => Ok((false, 0)),
            Err(e) => Err(e),
        };
    }
    let mut hit = false;
    let mut entities = EntitySet::new();
    for p in paths {
        let tree = induce_tree(kb, p.topic, &p.relations)?;
        let reached = match mode {
            CoverageMode::Leaves => tree.leaves().clone(),
            _ => tree.entities(),
        };
        hit |= reached.intersects(answers);
        entities = entities.union(&tree.entities());
    }
    Ok((hit, entities.len()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageAtK {
    pub k: usize,
    pub hits: f64,
    pub mean_entities: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub mode: CoverageMode,
    pub question_count: usize,
    pub by_k: Vec<CoverageAtK>,
}

impl CoverageReport {
    pub fn hits_at(&self, k: usize) -> Option<f64> {
        self.by_k.iter().find(|c| c.k == k).map(|c| c.hits)
    }

    pub fn at(&self, k: usize) -> Option<&CoverageAtK> {
        self.by_k.iter().find(|c| c.k == k)
    }
}

/// Hits@K for each `k` in `ks` over aligned questions and retrievals.
pub fn answer_coverage(
    kb: &KnowledgeBase,
    questions: &[Question],
    retrievals: &[Vec<ScoredPath>],
    ks: &[usize],
    mode: CoverageMode,
) -> Result<CoverageReport> {
    if questions.len() != retrievals.len() {
        return Err(Error::invalid(format!(
            "{} questions but {} retrievals",
            questions.len(),
            retrievals.len()
        )));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    if ks.contains(&0) {
        return Err(Error::invalid("K must be positive"));
    }
    let per_question: Vec<Vec<(bool, usize)>> = questions
        .par_iter()
        .zip(retrievals)
        .map(|(q, paths)| {
            ks.iter()
                .map(|&k| covered(kb, &top_k_per_topic(paths, k), &q.answers, mode))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let n = questions.len().max(1) as f64;
    let by_k = ks
        .iter()
        .enumerate()
        .map(|(i, &k)| CoverageAtK {
            k,
            hits: per_question.iter().filter(|v| v[i].0).count() as f64 / n,
            mean_entities: per_question.iter().map(|v| v[i].1 as f64).sum::<f64>() / n,
        })
        .collect();
    Ok(CoverageReport {
        mode,
        question_count: questions.len(),
        by_k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeCoverage {
    pub coverage: f64,
    pub mean_entities: f64,
}

/// Coverage and mean size of PPR subgraphs of `max_entities`.
pub fn ppr_coverage(kb: &KnowledgeBase, questions: &[Question], cfg: &PprConfig) -> Result<SizeCoverage> {
    let rows: Vec<(bool, usize)> = questions
        .par_iter()
        .map(|q| {
            let topics: EntitySet = q.topic_entities.iter().filter(|e| kb.check_entity(*e).is_ok()).collect();
            let g = ppr_subgraph(kb, &topics, cfg)?;
            Ok((g.entities.intersects(&q.answers), g.entities.len()))
        })
        .collect::<Result<_>>()?;
    let n = questions.len().max(1) as f64;
    Ok(SizeCoverage {
        coverage: rows.iter().filter(|r| r.0).count() as f64 / n,
        mean_entities: rows.iter().map(|r| r.1 as f64).sum::<f64>() / n,
    })
}

/// Smallest PPR budget from `budgets` (ascending) whose coverage reaches
/// `target`, with its coverage and mean size.
pub fn ppr_at_matched_coverage(
    kb: &KnowledgeBase,
    questions: &[Question],
    target: f64,
    budgets: &[usize],
    base: &PprConfig,
) -> Result<Option<(usize, SizeCoverage)>> {
    for &b in budgets {
        let cfg = PprConfig {
            max_entities: b,
            ..*base
        };
        let sc = ppr_coverage(kb, questions, &cfg)?;
        if sc.coverage >= target {
            return Ok(Some((b, sc)));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub hits_at_1: f64,
    pub f1: f64,
    pub threshold: f64,
}

fn f1_of(dist: &AnswerDistribution, gold: &EntitySet, threshold: f64) -> f64 {
    let predicted: Vec<EntityId> = dist
        .entity_ids
        .iter()
        .zip(&dist.probs)
        .filter(|(_, p)| **p >= threshold)
        .map(|(e, _)| *e)
        .collect();
    if predicted.is_empty() {
        return if gold.is_empty() { 1.0 } else { 0.0 };
    }
    let tp = predicted.iter().filter(|e| gold.contains(**e)).count() as f64;
    if tp == 0.0 {
        return 0.0;
    }
    let precision = tp / predicted.len() as f64;
    let recall = tp / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// Hits@1 and macro F1 of thresholded predictions.
pub fn qa_metrics(distributions: &[AnswerDistribution], questions: &[Question], threshold: f64) -> Result<QaReport> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid(format!("threshold {threshold} outside [0, 1]")));
    }
    if distributions.len() != questions.len() {
        return Err(Error::invalid(format!(
            "{} distributions but {} questions",
            distributions.len(),
            questions.len()
        )));
    }
    if questions.is_empty() {
        return Ok(QaReport {
            hits_at_1: 0.0,
            f1: 0.0,
            threshold,
        });
    }
    let n = questions.len() as f64;
    let hits = distributions
        .iter()
        .zip(questions)
        .filter(|(d, q)| d.argmax().is_some_and(|e| q.answers.contains(e)))
        .count() as f64;
    let f1: f64 = distributions
        .iter()
        .zip(questions)
        .map(|(d, q)| f1_of(d, &q.answers, threshold))
        .sum();
    Ok(QaReport {
        hits_at_1: hits / n,
        f1: f1 / n,
        threshold,
    })
}

/// `{0, step, 2 step, ..., 1}`.
pub fn threshold_grid(step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step < 1.0) {
        return Err(Error::invalid(format!("grid step {step} outside (0, 1)")));
    }
    let mut out = Vec::new();
    let mut i = 0u32;
    loop {
        let t = f64::from(i) * step;
        if t > 1.0 + 1e-9 {
            break;
        }
        out.push(t.min(1.0));
        i += 1;
    }
    if *out.last().expect("0 is always present") < 1.0 - 1e-9 {
        out.push(1.0);
    }
    Ok(out)
}

/// Grid threshold with the best macro F1; ties go to the smallest.
pub fn search_threshold(distributions: &[AnswerDistribution], questions: &[Question], grid_step: f64) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for t in threshold_grid(grid_step)? {
        let f1 = qa_metrics(distributions, questions, t)?.f1;
        if best.map_or(true, |(_, b)| f1 > b) {
            best = Some((t, f1));
        }
    }
    Ok(best.expect("grid is non-empty").0)
}
