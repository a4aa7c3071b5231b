//! Retriever pre-training, reasoner training and end-to-end fine-tuning.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoder::{Choice, RelationScorer, RelationTable, ScorerParams};
use crate::error::{Error, Result};
use crate::eval::paths_cover;
use crate::kb::{EntitySet, KnowledgeBase};
use crate::optim::{Parameters, Sgd};
use crate::reasoner::{answer_loss, tree_answer_mass, ReasonerParams};
use crate::retriever::{path_log_probability, retrieve, RetrievalConfig, ScoredPath};
use crate::subgraph::{subgraph_from_paths, Subgraph};
use crate::supervision::{Query, Question, StepInstance, DEFAULT_NEGATIVES_PER_STEP};

/// Gradients are computed in fixed-size chunks so sums do not depend on the
/// thread count.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub rng_seed: u64,
    pub negatives_per_step: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.5,
            epochs: 50,
            batch_size: 32,
            rng_seed: 0,
            negatives_per_step: DEFAULT_NEGATIVES_PER_STEP,
        }
    }
}

impl TrainConfig {
    pub fn finetune() -> Self {
        TrainConfig {
            learning_rate: 5e-4,
            epochs: 5,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning rate must be positive"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub retriever_loss: f64,
    pub reasoner_loss: f64,
    /// Fraction of training questions whose sampled paths reach an answer.
    pub coverage_hits_at_k: f64,
    pub wall_time: f64,
    /// Questions left out of the reasoner term (no answer in the subgraph).
    pub reasoner_skipped: usize,
    /// Questions left out of the retriever term (all path likelihoods zero).
    pub retriever_skipped: usize,
}

fn shuffled_batches(n: usize, batch: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch).map(<[usize]>::to_vec).collect()
}

/// Sum of per-item losses and gradients over `items`, chunked for determinism.
fn chunked_gradient<P, F>(zero: &P, items: &[usize], f: F) -> Result<(f64, usize, P)>
where
    P: Parameters + Clone + Send + Sync,
    F: Fn(usize, &mut P) -> Result<Option<f64>> + Sync,
{
    let parts: Vec<(f64, usize, P)> = items
        .par_chunks(GRAD_CHUNK)
        .map(|chunk| {
            let mut g = zero.clone();
            let mut loss = 0.0;
            let mut counted = 0;
            for &i in chunk {
                if let Some(l) = f(i, &mut g)? {
                    loss += l;
                    counted += 1;
                }
            }
            Ok((loss, counted, g))
        })
        .collect::<Result<_>>()?;
    let mut total = zero.clone();
    let mut loss = 0.0;
    let mut counted = 0;
    for (l, c, g) in parts {
        loss += l;
        counted += c;
        total.add_scaled(&g, 1.0);
    }
    Ok((loss, counted, total))
}

/// Negative log-likelihood of one step instance: the gold relation above END
/// and every negative below it. Gradient (scaled by `scale`) goes to `grad`.
pub fn step_loss(
    kb: &KnowledgeBase,
    params: &ScorerParams,
    table: &RelationTable,
    inst: &StepInstance,
    scale: f64,
    grad: Option<&mut ScorerParams>,
) -> Result<f64> {
    let gold = match inst.gold {
        Choice::End => None,
        Choice::Relation(r) => {
            kb.check_relation(r)?;
            Some(r)
        }
    };
    for r in &inst.negatives {
        kb.check_relation(*r)?;
    }
    let tokens = params.question_tokens(kb, &inst.state.question_text, &inst.state.history);
    Ok(-params.threshold_log_likelihood(table, &tokens, gold, &inst.negatives, -scale, grad))
}

/// Mean step loss over `instances`.
pub fn pretrain_loss(kb: &KnowledgeBase, params: &ScorerParams, instances: &[StepInstance]) -> Result<f64> {
    if instances.is_empty() {
        return Err(Error::NoTrainingSignal("no step instances".into()));
    }
    let table = params.relation_table_for(kb);
    let mut total = 0.0;
    for inst in instances {
        total += step_loss(kb, params, &table, inst, 1.0, None)?;
    }
    Ok(total / instances.len() as f64)
}

/// Mini-batch gradient descent on the step instances.
pub fn pretrain_retriever(
    kb: &KnowledgeBase,
    init: ScorerParams,
    instances: &[StepInstance],
    cfg: &TrainConfig,
) -> Result<(ScorerParams, Vec<EpochReport>)> {
    pretrain_retriever_with(kb, init, instances, cfg, |_, _| Ok(()))
}

/// [`pretrain_retriever`] calling `on_epoch` after every epoch.
pub fn pretrain_retriever_with(
    kb: &KnowledgeBase,
    init: ScorerParams,
    instances: &[StepInstance],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochReport, &ScorerParams) -> Result<()>,
) -> Result<(ScorerParams, Vec<EpochReport>)> {
    if instances.is_empty() {
        return Err(Error::NoTrainingSignal("no step instances".into()));
    }
    cfg.validate()?;
    let mut params = init;
    let sgd = Sgd::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let zero = params.zeros_like();
    let mut reports = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let mut epoch_loss = 0.0;
        for batch in shuffled_batches(instances.len(), cfg.batch_size, &mut rng) {
            let table = params.relation_table_for(kb);
            let scale = 1.0 / batch.len() as f64;
            let (loss, _, grad) = chunked_gradient(&zero, &batch, |i, g| {
                step_loss(kb, &params, &table, &instances[i], scale, Some(g)).map(Some)
            })?;
            epoch_loss += loss;
            sgd.step(&mut params, &grad)?;
        }
        let report = EpochReport {
            epoch,
            retriever_loss: epoch_loss / instances.len() as f64,
            reasoner_loss: 0.0,
            coverage_hits_at_k: 0.0,
            wall_time: start.elapsed().as_secs_f64(),
            reasoner_skipped: 0,
            retriever_skipped: 0,
        };
        log::info!("pretrain epoch {epoch}: loss {:.5}", report.retriever_loss);
        on_epoch(&report, &params)?;
        reports.push(report);
    }
    Ok((params, reports))
}

/// Paths and merged subgraph for one question, sampled without its answers.
#[derive(Debug, Clone)]
pub struct Sample {
    pub paths: Vec<ScoredPath>,
    pub subgraph: Option<Subgraph>,
}

pub fn sample_subgraph<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    query: &Query<'_>,
    cfg: &RetrievalConfig,
) -> Result<Sample> {
    let paths = retrieve(kb, scorer, query, cfg)?;
    let subgraph = match subgraph_from_paths(kb, &paths) {
        Ok(g) => Some(g),
        Err(Error::EmptySubgraph) => None,
        Err(e) => return Err(e),
    };
    Ok(Sample { paths, subgraph })
}

pub fn sample_all<S: RelationScorer>(
    kb: &KnowledgeBase,
    scorer: &S,
    questions: &[Question],
    cfg: &RetrievalConfig,
) -> Result<Vec<Sample>> {
    questions
        .par_iter()
        .map(|q| sample_subgraph(kb, scorer, &q.query(), cfg))
        .collect()
}

/// Reasoner loss of one question on its sampled subgraph; `None` when the
/// subgraph holds no answer.
pub fn reasoner_question_loss(
    kb: &KnowledgeBase,
    sparams: &ScorerParams,
    rparams: &ReasonerParams,
    question: &Question,
    sample: &Sample,
    grad: Option<&mut ReasonerParams>,
) -> Result<Option<f64>> {
    let Some(g) = &sample.subgraph else {
        return Ok(None);
    };
    let q = sparams.encode_question(kb, &question.text, &[]);
    match answer_loss(rparams, &q, g, &question.answers, grad)? {
        Some(l) if l.is_finite() => Ok(Some(l)),
        _ => Ok(None),
    }
}

/// One gradient step on the reasoner over `batch`. Scorer parameters are
/// only read. Returns (summed loss, questions counted).
pub fn reasoner_step(
    kb: &KnowledgeBase,
    sparams: &ScorerParams,
    rparams: &mut ReasonerParams,
    questions: &[Question],
    samples: &[Sample],
    batch: &[usize],
    sgd: &Sgd,
) -> Result<(f64, usize)> {
    let zero = rparams.zeros_like();
    let current = &*rparams;
    let (loss, counted, mut grad) = chunked_gradient(&zero, batch, |i, g| {
        reasoner_question_loss(kb, sparams, current, &questions[i], &samples[i], Some(g))
    })?;
    if counted > 0 {
        grad.scale_by(1.0 / counted as f64);
        sgd.step(rparams, &grad)?;
    }
    Ok((loss, counted))
}

pub fn train_reasoner(
    kb: &KnowledgeBase,
    questions: &[Question],
    sparams: &ScorerParams,
    init: ReasonerParams,
    cfg: &TrainConfig,
    rcfg: &RetrievalConfig,
) -> Result<(ReasonerParams, Vec<EpochReport>)> {
    train_reasoner_with(kb, questions, sparams, init, cfg, rcfg, |_, _| Ok(()))
}

/// [`train_reasoner`] calling `on_epoch` after every epoch.
pub fn train_reasoner_with(
    kb: &KnowledgeBase,
    questions: &[Question],
    sparams: &ScorerParams,
    init: ReasonerParams,
    cfg: &TrainConfig,
    rcfg: &RetrievalConfig,
    mut on_epoch: impl FnMut(&EpochReport, &ReasonerParams) -> Result<()>,
) -> Result<(ReasonerParams, Vec<EpochReport>)> {
    cfg.validate()?;
    let mut rparams = init;
    if cfg.epochs == 0 {
        return Ok((rparams, Vec::new()));
    }
    // the scorer is frozen here, so one sample per question serves all epochs
    let samples = sample_all(kb, sparams, questions, rcfg)?;
    let usable = questions
        .iter()
        .zip(&samples)
        .filter(|(q, s)| s.subgraph.as_ref().is_some_and(|g| g.entities.intersects(&q.answers)))
        .count();
    if usable == 0 {
        return Err(Error::NoTrainingSignal(
            "no retrieved subgraph contains an answer".into(),
        ));
    }
    let coverage = covered_fraction(kb, questions, &samples)?;
    let sgd = Sgd::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut reports = Vec::new();
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let mut total = 0.0;
        let mut counted = 0;
        for batch in shuffled_batches(questions.len(), cfg.batch_size, &mut rng) {
            let (l, c) = reasoner_step(kb, sparams, &mut rparams, questions, &samples, &batch, &sgd)?;
            total += l;
            counted += c;
        }
        let report = EpochReport {
            epoch,
            retriever_loss: 0.0,
            reasoner_loss: total / counted.max(1) as f64,
            coverage_hits_at_k: coverage,
            wall_time: start.elapsed().as_secs_f64(),
            reasoner_skipped: questions.len() - counted,
            retriever_skipped: 0,
        };
        log::info!("reasoner epoch {epoch}: loss {:.5}", report.reasoner_loss);
        on_epoch(&report, &rparams)?;
        reports.push(report);
    }
    Ok((rparams, reports))
}

fn covered_fraction(kb: &KnowledgeBase, questions: &[Question], samples: &[Sample]) -> Result<f64> {
    if questions.is_empty() {
        return Ok(0.0);
    }
    let mut hit = 0;
    for (q, s) in questions.iter().zip(samples) {
        if paths_cover(kb, &s.paths, &q.answers, usize::MAX)? {
            hit += 1;
        }
    }
    Ok(hit as f64 / questions.len() as f64)
}

/// Tree likelihoods `L_k` of every path, summed over the answers and clamped
/// to `[0, 1]`. These are the constants of the retriever objective.
pub fn path_likelihoods(
    kb: &KnowledgeBase,
    sparams: &ScorerParams,
    rparams: &ReasonerParams,
    question_text: &str,
    answers: &EntitySet,
    paths: &[ScoredPath],
) -> Result<Vec<f64>> {
    paths
        .iter()
        .map(|p| tree_answer_mass(rparams, sparams, kb, question_text, p.topic, &p.relations, answers))
        .collect()
}

/// `-log sum_k w_k p(p_k | q)` with fixed weights `w`; the gradient (scaled
/// by `scale`) flows into the scorer only. `None` when every weight is zero.
pub fn weighted_path_loss(
    kb: &KnowledgeBase,
    sparams: &ScorerParams,
    question_text: &str,
    paths: &[ScoredPath],
    weights: &[f64],
    scale: f64,
    grad: Option<&mut ScorerParams>,
) -> Result<Option<f64>> {
    if weights.len() != paths.len() {
        return Err(Error::WidthMismatch {
            left: weights.len(),
            right: paths.len(),
        });
    }
    let table = sparams.relation_table_for(kb);
    let mut terms = Vec::new();
    for (p, &w) in paths.iter().zip(weights) {
        if w > 0.0 {
            let lp = path_log_probability(kb, sparams, &table, question_text, p.topic, &p.relations, 0.0, None)?;
            terms.push((p, w.ln() + lp));
        }
    }
    if terms.is_empty() {
        return Ok(None);
    }
    let m = terms.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = terms.iter().map(|t| (t.1 - m).exp()).sum();
    let loss = -(m + z.ln());
    if let Some(grad) = grad {
        for (p, lw) in &terms {
            let posterior = (lw - m).exp() / z;
            path_log_probability(
                kb,
                sparams,
                &table,
                question_text,
                p.topic,
                &p.relations,
                -scale * posterior,
                Some(&mut *grad),
            )?;
        }
    }
    Ok(Some(loss))
}

/// Retriever objective with the reasoner's tree likelihoods held constant.
pub fn retriever_e2e_loss(
    kb: &KnowledgeBase,
    sparams: &ScorerParams,
    rparams: &ReasonerParams,
    question: &Question,
    paths: &[ScoredPath],
    scale: f64,
    grad: Option<&mut ScorerParams>,
) -> Result<Option<f64>> {
    let weights = path_likelihoods(kb, sparams, rparams, &question.text, &question.answers, paths)?;
    weighted_path_loss(kb, sparams, &question.text, paths, &weights, scale, grad)
}

/// One gradient step on the scorer over `batch`. Reasoner parameters are
/// only read.
pub fn retriever_step(
    kb: &KnowledgeBase,
    sparams: &mut ScorerParams,
    rparams: &ReasonerParams,
    questions: &[Question],
    samples: &[Sample],
    batch: &[usize],
    sgd: &Sgd,
) -> Result<(f64, usize)> {
    let zero = sparams.zeros_like();
    let current = &*sparams;
    let (loss, counted, mut grad) = chunked_gradient(&zero, batch, |i, g| {
        retriever_e2e_loss(kb, current, rparams, &questions[i], &samples[i].paths, 1.0, Some(g))
    })?;
    if counted > 0 {
        grad.scale_by(1.0 / counted as f64);
        sgd.step(sparams, &grad)?;
    }
    Ok((loss, counted))
}

/// Alternating fine-tuning: per epoch, sample subgraphs with the current
/// scorer, update the reasoner on them, then update the scorer.
pub fn finetune_e2e(
    kb: &KnowledgeBase,
    questions: &[Question],
    sparams: ScorerParams,
    rparams: ReasonerParams,
    cfg: &TrainConfig,
    rcfg: &RetrievalConfig,
) -> Result<(ScorerParams, ReasonerParams, Vec<EpochReport>)> {
    finetune_e2e_with(kb, questions, sparams, rparams, cfg, rcfg, |_, _, _| Ok(()))
}

/// [`finetune_e2e`] calling `on_epoch` after every epoch.
pub fn finetune_e2e_with(
    kb: &KnowledgeBase,
    questions: &[Question],
    sparams: ScorerParams,
    rparams: ReasonerParams,
    cfg: &TrainConfig,
    rcfg: &RetrievalConfig,
    mut on_epoch: impl FnMut(&EpochReport, &ScorerParams, &ReasonerParams) -> Result<()>,
) -> Result<(ScorerParams, ReasonerParams, Vec<EpochReport>)> {
    cfg.validate()?;
    let mut sparams = sparams;
    let mut rparams = rparams;
    let sgd = Sgd::new(cfg.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut reports = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let samples = sample_all(kb, &sparams, questions, rcfg)?;
        let coverage = covered_fraction(kb, questions, &samples)?;

        let mut reasoner_total = 0.0;
        let mut reasoner_counted = 0;
        for batch in shuffled_batches(questions.len(), cfg.batch_size, &mut rng) {
            let (l, c) = reasoner_step(kb, &sparams, &mut rparams, questions, &samples, &batch, &sgd)?;
            reasoner_total += l;
            reasoner_counted += c;
        }

        let mut retriever_total = 0.0;
        let mut retriever_counted = 0;
        for batch in shuffled_batches(questions.len(), cfg.batch_size, &mut rng) {
            let (l, c) = retriever_step(kb, &mut sparams, &rparams, questions, &samples, &batch, &sgd)?;
            retriever_total += l;
            retriever_counted += c;
        }

        let report = EpochReport {
            epoch,
            retriever_loss: retriever_total / retriever_counted.max(1) as f64,
            reasoner_loss: reasoner_total / reasoner_counted.max(1) as f64,
            coverage_hits_at_k: coverage,
            wall_time: start.elapsed().as_secs_f64(),
            reasoner_skipped: questions.len() - reasoner_counted,
            retriever_skipped: questions.len() - retriever_counted,
        };
        log::info!(
            "finetune epoch {epoch}: retriever {:.5} reasoner {:.5} coverage {:.3}",
            report.retriever_loss,
            report.reasoner_loss,
            report.coverage_hits_at_k
        );
        on_epoch(&report, &sparams, &rparams)?;
        reports.push(report);
    }
    Ok((sparams, rparams, reports))
}
