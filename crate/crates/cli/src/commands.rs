use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use srkbqa::eval::{ppr_coverage, CoverageMode};
use srkbqa::kb::KbArtifact;
use srkbqa::reasoner::DEFAULT_STEP_COUNT;
use srkbqa::supervision::{
    build_pseudo_labels, decompose_all, load_tuples, parse_questions_jsonl, questions_to_jsonl, resolve_questions,
    DEFAULT_MAX_PATHS_PER_PAIR,
};
use srkbqa::subgraph::subgraph_from_paths;
use srkbqa::{
    answer_coverage, answer_distribution, build_weak_labels, finetune_e2e_with, generate_synthetic, pretrain_retriever_with,
    qa_metrics, retrieve_all, search_threshold, train_reasoner_with, AnswerDistribution, Checkpoint, EpochReport,
    KnowledgeBase, PprConfig, Question, ReasonerConfig, ReasonerParams, RetrievalConfig, ScorerConfig, ScorerParams,
    ScoredPath, SynthConfig, TrainConfig, Vocab,
};

use crate::args::{
    Baseline, Coverage, EvalArgs, IngestArgs, PretrainArgs, RetrievalFlags, RetrieveArgs, StageArgs, SynthArgs,
    TrainFlags,
};
use crate::manifest::{beside, Recorder};

/// Bad input or usage; exits with code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

pub struct Globals {
    pub seed: Option<u64>,
    pub config: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Globals {
    fn manifest_for(&self, out: Option<&Path>, command: &str) -> PathBuf {
        match (&self.manifest, out) {
            (Some(m), _) => m.clone(),
            (None, Some(o)) => beside(o),
            (None, None) => PathBuf::from(format!("{command}.manifest.json")),
        }
    }
}

fn read_input(path: &Path, rec: &mut Recorder) -> Result<(Vec<u8>, String)> {
    let bytes = fs::read(path).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let digest = rec.input(path, &bytes);
    Ok((bytes, digest))
}

fn load_config<T: DeserializeOwned + Default>(g: &Globals, rec: &mut Recorder) -> Result<T> {
    let Some(path) = &g.config else {
        return Ok(T::default());
    };
    let (bytes, _) = read_input(path, rec)?;
    serde_json::from_slice(&bytes).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

/// Accepts an artifact written by `ingest` or raw TSV triples.
fn load_kb(path: &Path, rec: &mut Recorder) -> Result<(KnowledgeBase, String)> {
    let (bytes, digest) = read_input(path, rec)?;
    let text = String::from_utf8(bytes).map_err(|_| input_error(format!("{}: not UTF-8", path.display())))?;
    let kb = if text.trim_start().starts_with('{') {
        let artifact: KbArtifact =
            serde_json::from_str(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
        KnowledgeBase::from_artifact(&artifact)?
    } else {
        KnowledgeBase::from_tsv_str(&text, true)?
    };
    log::info!(
        "{}: {} entities, {} relations, {} triples",
        path.display(),
        kb.entity_count(),
        kb.relation_count(),
        kb.triple_count()
    );
    Ok((kb, digest))
}

fn load_questions(path: &Path, kb: &KnowledgeBase, rec: &mut Recorder) -> Result<Vec<Question>> {
    let (bytes, _) = read_input(path, rec)?;
    let text = String::from_utf8(bytes).map_err(|_| input_error(format!("{}: not UTF-8", path.display())))?;
    let raw = parse_questions_jsonl(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    let (questions, dropped) = resolve_questions(&raw, kb)?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} questions without a known topic entity", path.display());
    }
    if questions.is_empty() {
        return Err(input_error(format!("{}: no usable questions", path.display())));
    }
    Ok(questions)
}

fn load_checkpoint(path: &Path, kb_digest: &str, rec: &mut Recorder) -> Result<Checkpoint> {
    let (bytes, _) = read_input(path, rec)?;
    let text = String::from_utf8(bytes).map_err(|_| input_error(format!("{}: not UTF-8", path.display())))?;
    let ck = Checkpoint::from_json(&text).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    ck.check_kb(kb_digest).map_err(|e| input_error(format!("{}: {e}", path.display())))?;
    Ok(ck)
}

fn need<'a, T>(value: Option<&'a T>, path: &Path, what: &str, stage: &str) -> Result<&'a T> {
    value.ok_or_else(|| input_error(format!("{}: no {what} parameters; run `{stage}` first", path.display())))
}

fn write_file(path: &Path, contents: &[u8], rec: &mut Recorder) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    rec.output(path);
    Ok(())
}

fn retrieval_config(base: RetrievalConfig, flags: &RetrievalFlags) -> RetrievalConfig {
    RetrievalConfig {
        beam_width: flags.k.unwrap_or(base.beam_width),
        max_hops: flags.max_hops.unwrap_or(base.max_hops),
        threshold_stop: base.threshold_stop && !flags.no_threshold_stop,
    }
}

fn train_config(base: TrainConfig, flags: &TrainFlags, seed: Option<u64>) -> TrainConfig {
    TrainConfig {
        learning_rate: flags.lr.unwrap_or(base.learning_rate),
        epochs: flags.epochs.unwrap_or(base.epochs),
        batch_size: flags.batch_size.unwrap_or(base.batch_size),
        rng_seed: seed.unwrap_or(base.rng_seed),
        ..base
    }
}

/// Streams epoch reports to stdout, an optional CSV and optional per-epoch
/// checkpoints.
struct EpochSink {
    csv: Option<(PathBuf, fs::File)>,
    checkpoints: Option<PathBuf>,
    written: Vec<PathBuf>,
}

impl EpochSink {
    fn new(flags: &TrainFlags) -> Result<Self> {
        let csv = match &flags.csv {
            Some(p) => {
                let mut f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
                writeln!(f, "epoch,metric,value")?;
                Some((p.clone(), f))
            }
            None => None,
        };
        if let Some(dir) = &flags.epoch_checkpoints {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        Ok(EpochSink {
            csv,
            checkpoints: flags.epoch_checkpoints.clone(),
            written: Vec::new(),
        })
    }

    fn emit(&mut self, report: &EpochReport, ck: impl FnOnce() -> Checkpoint) -> srkbqa::Result<()> {
        let line = serde_json::to_string(report)?;
        println!("{line}");
        let io = |path: &Path, e: std::io::Error| srkbqa::Error::Checkpoint(format!("{}: {e}", path.display()));
        if let Some((path, f)) = &mut self.csv {
            for (metric, value) in [
                ("retriever_loss", report.retriever_loss),
                ("reasoner_loss", report.reasoner_loss),
                ("coverage", report.coverage_hits_at_k),
                ("wall_time", report.wall_time),
            ] {
                writeln!(f, "{},{metric},{value}", report.epoch).map_err(|e| io(path, e))?;
            }
        }
        if let Some(dir) = &self.checkpoints {
            let path = dir.join(format!("epoch-{:04}.json", report.epoch + 1));
            ck().save(&path)?;
            self.written.push(path);
        }
        Ok(())
    }

    fn finish(self, rec: &mut Recorder) {
        if let Some((path, _)) = self.csv {
            rec.output(&path);
        }
        for p in self.written {
            rec.output(&p);
        }
    }
}

pub fn ingest(a: &IngestArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("ingest", g.seed);
    let (bytes, _) = read_input(&a.triples, &mut rec)?;
    let text = String::from_utf8(bytes).map_err(|_| input_error(format!("{}: not UTF-8", a.triples.display())))?;
    let kb = KnowledgeBase::from_tsv_str(&text, !a.no_inverses)
        .map_err(|e| input_error(format!("{}: {e}", a.triples.display())))?;
    rec.config(serde_json::json!({ "add_inverses": !a.no_inverses }))?;
    let artifact = serde_json::to_vec(&kb.to_artifact())?;
    write_file(&a.out, &artifact, &mut rec)?;
    let m = rec.finish(&g.manifest_for(Some(&a.out), "ingest"))?;
    println!(
        "{}",
        serde_json::json!({
            "entities": kb.entity_count(),
            "relations": kb.relation_count(),
            "triples": kb.triple_count(),
            "kb_digest": m.outputs[0].sha256,
        })
    );
    Ok(())
}

pub fn synth(a: &SynthArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("synth", g.seed);
    let base: SynthConfig = load_config(g, &mut rec)?;
    let cfg = SynthConfig {
        seed: g.seed.unwrap_or(base.seed),
        n_entities: a.entities.unwrap_or(base.n_entities),
        n_relations: a.relations.unwrap_or(base.n_relations),
        n_questions: a.questions.unwrap_or(base.n_questions),
        ..base
    };
    rec.config(&cfg)?;
    rec.seed(cfg.seed);
    let data = generate_synthetic(&cfg).map_err(|e| input_error(e.to_string()))?;
    if a.test_questions > data.questions.len() {
        return Err(input_error(format!(
            "--test-questions {} exceeds the {} generated questions",
            a.test_questions,
            data.questions.len()
        )));
    }
    let split = data.questions.len() - a.test_questions;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    write_file(&a.out.join("triples.tsv"), data.triples_tsv().as_bytes(), &mut rec)?;
    write_file(&a.out.join("questions.jsonl"), data.questions_jsonl()?.as_bytes(), &mut rec)?;
    write_file(&a.out.join("train.jsonl"), questions_to_jsonl(&data.questions[..split])?.as_bytes(), &mut rec)?;
    write_file(&a.out.join("test.jsonl"), questions_to_jsonl(&data.questions[split..])?.as_bytes(), &mut rec)?;
    write_file(&a.out.join("planted.json"), serde_json::to_vec(&data.planted)?.as_slice(), &mut rec)?;
    let manifest = g.manifest.clone().unwrap_or_else(|| a.out.join("manifest.json"));
    rec.finish(&manifest)?;
    println!(
        "{}",
        serde_json::json!({
            "triples": data.triples.len(),
            "questions": data.questions.len(),
            "train": split,
            "test": data.questions.len() - split,
            "skipped": data.skipped,
        })
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
struct PretrainConfig {
    #[serde(flatten)]
    train: TrainConfig,
    dim: usize,
    separate_towers: bool,
    max_paths_per_pair: usize,
}

impl Default for PretrainConfig {
    fn default() -> Self {
        PretrainConfig {
            train: TrainConfig::default(),
            dim: ScorerConfig::default().dim,
            separate_towers: false,
            max_paths_per_pair: DEFAULT_MAX_PATHS_PER_PAIR,
        }
    }
}

pub fn pretrain(a: &PretrainArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("pretrain", g.seed);
    let base: PretrainConfig = load_config(g, &mut rec)?;
    let cfg = PretrainConfig {
        train: train_config(base.train, &a.train, g.seed),
        dim: a.dim.unwrap_or(base.dim),
        separate_towers: base.separate_towers || a.separate_towers,
        ..base
    };
    rec.config(cfg)?;
    rec.seed(cfg.train.rng_seed);
    let (kb, kb_digest) = load_kb(&a.kb, &mut rec)?;
    let scorer_cfg = ScorerConfig {
        dim: cfg.dim,
        separate_towers: cfg.separate_towers,
    };

    // pseudo labels live on their own KB; relation names carry over through
    // the shared vocabulary
    let (train_kb, questions, instances) = match (&a.qa, &a.tuples) {
        (Some(qa), _) => {
            let qs = load_questions(qa, &kb, &mut rec)?;
            let labels = build_weak_labels(&kb, &qs, cfg.max_paths_per_pair)?;
            (None, qs, labels.instances)
        }
        (None, Some(tuples)) => {
            read_input(tuples, &mut rec)?;
            let raw = load_tuples(tuples).map_err(|e| input_error(format!("{}: {e}", tuples.display())))?;
            let pseudo = build_pseudo_labels(&raw).map_err(|e| input_error(format!("{}: {e}", tuples.display())))?;
            (Some(pseudo.kb), pseudo.questions, pseudo.instances)
        }
        (None, None) => return Err(input_error("pretrain needs --qa or --tuples")),
    };
    let train_kb = train_kb.as_ref().unwrap_or(&kb);
    if instances.is_empty() {
        return Err(input_error("no question has a path from a topic entity to an answer"));
    }
    let steps = decompose_all(train_kb, &questions, &instances, cfg.train.negatives_per_step, cfg.train.rng_seed)?;
    log::info!("{} path instances, {} step instances", instances.len(), steps.len());

    let mut vocab = Vocab::build(&kb, questions.iter().map(|q| q.text.as_str()));
    for name in train_kb.relation_names() {
        for t in srkbqa::encoder::tokenize(name) {
            vocab.insert(&t);
            vocab.insert(&srkbqa::encoder::history_token(&t));
        }
    }
    let init = ScorerParams::init(vocab, scorer_cfg, cfg.train.rng_seed);
    let mut sink = EpochSink::new(&a.train)?;
    let digest = Some(kb_digest.clone());
    let (scorer, _) = pretrain_retriever_with(train_kb, init, &steps, &cfg.train, |report, p| {
        sink.emit(report, || Checkpoint::new(digest.clone(), Some(p.clone()), None))
    })?;
    sink.finish(&mut rec);
    let ck = Checkpoint::new(Some(kb_digest), Some(scorer), None);
    write_file(&a.out, ck.to_json()?.as_bytes(), &mut rec)?;
    rec.finish(&g.manifest_for(Some(&a.out), "pretrain"))?;
    Ok(())
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
struct StageConfig {
    #[serde(flatten)]
    train: TrainConfig,
    #[serde(flatten)]
    retrieval: RetrievalConfig,
    key_dim: usize,
    step_count: usize,
}

impl StageConfig {
    fn with_train(train: TrainConfig) -> Self {
        let r = ReasonerConfig::default();
        StageConfig {
            train,
            retrieval: RetrievalConfig::default(),
            key_dim: r.key_dim,
            step_count: r.step_count,
        }
    }
}

impl Default for StageConfig {
    fn default() -> Self {
        StageConfig::with_train(TrainConfig::default())
    }
}

fn stage_config(a: &StageArgs, g: &Globals, rec: &mut Recorder, finetune: bool) -> Result<StageConfig> {
    let mut base: StageConfig = load_config(g, rec)?;
    if finetune && g.config.is_none() {
        base = StageConfig::with_train(TrainConfig::finetune());
    }
    let cfg = StageConfig {
        train: train_config(base.train, &a.train, g.seed),
        retrieval: retrieval_config(base.retrieval, &a.retrieval),
        step_count: a.steps.unwrap_or(base.step_count),
        ..base
    };
    cfg.retrieval.validate()?;
    rec.config(cfg)?;
    rec.seed(cfg.train.rng_seed);
    Ok(cfg)
}

pub fn train_reasoner(a: &StageArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("train-reasoner", g.seed);
    let cfg = stage_config(a, g, &mut rec, false)?;
    let (kb, kb_digest) = load_kb(&a.kb, &mut rec)?;
    let qs = load_questions(&a.qa, &kb, &mut rec)?;
    let ck = load_checkpoint(&a.checkpoint, &kb_digest, &mut rec)?;
    let scorer = need(ck.scorer.as_ref(), &a.checkpoint, "retriever", "pretrain")?;
    let rcfg = ReasonerConfig {
        key_dim: cfg.key_dim,
        step_count: cfg.step_count.max(1),
    };
    if cfg.step_count == 0 {
        log::warn!("step_count 0 raised to 1; default is {DEFAULT_STEP_COUNT}");
    }
    let init = ReasonerParams::init(kb.relation_count(), scorer.dim(), rcfg, cfg.train.rng_seed)?;
    let mut sink = EpochSink::new(&a.train)?;
    let digest = Some(kb_digest.clone());
    let (reasoner, _) = train_reasoner_with(&kb, &qs, scorer, init, &cfg.train, &cfg.retrieval, |report, r| {
        sink.emit(report, || Checkpoint::new(digest.clone(), Some(scorer.clone()), Some(r.clone())))
    })?;
    sink.finish(&mut rec);
    let out = Checkpoint::new(Some(kb_digest), Some(scorer.clone()), Some(reasoner));
    write_file(&a.out, out.to_json()?.as_bytes(), &mut rec)?;
    rec.finish(&g.manifest_for(Some(&a.out), "train-reasoner"))?;
    Ok(())
}

pub fn finetune(a: &StageArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("finetune", g.seed);
    let cfg = stage_config(a, g, &mut rec, true)?;
    let (kb, kb_digest) = load_kb(&a.kb, &mut rec)?;
    let qs = load_questions(&a.qa, &kb, &mut rec)?;
    let ck = load_checkpoint(&a.checkpoint, &kb_digest, &mut rec)?;
    let scorer = need(ck.scorer.as_ref(), &a.checkpoint, "retriever", "pretrain")?;
    let reasoner = need(ck.reasoner.as_ref(), &a.checkpoint, "reasoner", "train-reasoner")?;
    let mut sink = EpochSink::new(&a.train)?;
    let digest = Some(kb_digest.clone());
    let (s, r, _) = finetune_e2e_with(
        &kb,
        &qs,
        scorer.clone(),
        reasoner.clone(),
        &cfg.train,
        &cfg.retrieval,
        |report, s, r| sink.emit(report, || Checkpoint::new(digest.clone(), Some(s.clone()), Some(r.clone()))),
    )?;
    sink.finish(&mut rec);
    let out = Checkpoint::new(Some(kb_digest), Some(s), Some(r));
    write_file(&a.out, out.to_json()?.as_bytes(), &mut rec)?;
    rec.finish(&g.manifest_for(Some(&a.out), "finetune"))?;
    Ok(())
}

#[derive(Serialize)]
struct PathRecord<'a> {
    topic: &'a str,
    relations: Vec<&'a str>,
    step_probs: &'a [f64],
    joint_prob: f64,
}

#[derive(Serialize)]
struct RetrievalRecord<'a> {
    id: &'a str,
    paths: Vec<PathRecord<'a>>,
}

fn retrieval_record<'a>(kb: &'a KnowledgeBase, q: &'a Question, paths: &'a [ScoredPath]) -> Result<RetrievalRecord<'a>> {
    let paths = paths
        .iter()
        .map(|p| {
            Ok(PathRecord {
                topic: kb.entity_name(p.topic)?,
                relations: p.relations.iter().map(|r| kb.relation_name(*r)).collect::<srkbqa::Result<_>>()?,
                step_probs: &p.step_probs,
                joint_prob: p.joint_prob,
            })
        })
        .collect::<Result<_>>()?;
    Ok(RetrievalRecord { id: &q.id, paths })
}

pub fn retrieve(a: &RetrieveArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("retrieve", g.seed);
    let base: RetrievalConfig = load_config(g, &mut rec)?;
    let cfg = retrieval_config(base, &a.retrieval);
    cfg.validate().map_err(|e| input_error(e.to_string()))?;
    rec.config(cfg)?;
    let (kb, kb_digest) = load_kb(&a.kb, &mut rec)?;
    let qs = load_questions(&a.qa, &kb, &mut rec)?;
    let ck = load_checkpoint(&a.checkpoint, &kb_digest, &mut rec)?;
    let scorer = need(ck.scorer.as_ref(), &a.checkpoint, "retriever", "pretrain")?;
    let queries: Vec<_> = qs.iter().map(Question::query).collect();
    let all = retrieve_all(&kb, scorer, &queries, &cfg)?;
    let mut text = String::new();
    for (q, paths) in qs.iter().zip(&all) {
        text.push_str(&serde_json::to_string(&retrieval_record(&kb, q, paths)?)?);
        text.push('\n');
    }
    match &a.out {
        Some(out) => write_file(out, text.as_bytes(), &mut rec)?,
        None => print!("{text}"),
    }
    rec.finish(&g.manifest_for(a.out.as_deref(), "retrieve"))?;
    Ok(())
}

fn distributions(
    kb: &KnowledgeBase,
    scorer: &ScorerParams,
    reasoner: &ReasonerParams,
    qs: &[Question],
    retrievals: &[Vec<ScoredPath>],
) -> Result<Vec<AnswerDistribution>> {
    qs.iter()
        .zip(retrievals)
        .map(|(q, paths)| match subgraph_from_paths(kb, paths) {
            Ok(g) => Ok(answer_distribution(reasoner, scorer, kb, &q.text, &g)?),
            Err(srkbqa::Error::EmptySubgraph) => Ok(AnswerDistribution {
                entity_ids: Vec::new(),
                probs: Vec::new(),
            }),
            Err(e) => Err(e.into()),
        })
        .collect()
}

/// Answers above `threshold` (at least the best one), capped at `top`.
fn answer_line(kb: &KnowledgeBase, q: &Question, d: &AnswerDistribution, threshold: f64, top: usize) -> Result<String> {
    let mut ranked: Vec<_> = d.entity_ids.iter().zip(&d.probs).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(a.1).then(a.0.cmp(b.0)));
    let keep = ranked.iter().take_while(|(_, p)| **p > threshold).count().max(1);
    let answers = ranked
        .iter()
        .take(keep.min(top))
        .map(|(e, p)| Ok(serde_json::json!({ "entity": kb.entity_name(**e)?, "prob": p })))
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::json!({ "id": q.id, "answers": answers }).to_string())
}

pub fn eval(a: &EvalArgs, g: &Globals) -> Result<()> {
    let mut rec = Recorder::new("eval", g.seed);
    if a.k.is_empty() || a.k.contains(&0) {
        return Err(input_error("--k needs positive cut-offs"));
    }
    if !(0.0..=1.0).contains(&a.threshold) {
        return Err(input_error(format!("--threshold {} outside [0, 1]", a.threshold)));
    }
    let base: RetrievalConfig = load_config(g, &mut rec)?;
    let rcfg = RetrievalConfig {
        beam_width: *a.k.iter().max().expect("checked non-empty"),
        max_hops: a.max_hops.unwrap_or(base.max_hops),
        threshold_stop: base.threshold_stop && !a.no_threshold_stop,
    };
    rcfg.validate().map_err(|e| input_error(e.to_string()))?;
    let mode = match a.coverage {
        Coverage::Trees => CoverageMode::Trees,
        Coverage::Leaves => CoverageMode::Leaves,
        Coverage::Merged => CoverageMode::Merged,
    };
    rec.config(serde_json::json!({
        "retrieval": rcfg,
        "k": a.k,
        "coverage": mode,
        "baseline": format!("{:?}", a.baseline).to_lowercase(),
        "max_entities": a.max_entities,
        "threshold": a.threshold,
        "grid_step": a.grid_step,
    }))?;
    let (kb, kb_digest) = load_kb(&a.kb, &mut rec)?;
    let qs = load_questions(&a.qa, &kb, &mut rec)?;
    let mut report = serde_json::Map::new();
    report.insert("questions".into(), qs.len().into());

    let ck = a
        .checkpoint
        .as_ref()
        .map(|p| load_checkpoint(p, &kb_digest, &mut rec))
        .transpose()?;
    match (&ck, a.baseline) {
        (None, Baseline::Sr) => return Err(input_error("SR evaluation needs --checkpoint")),
        (Some(ck), _) => {
            let path = a.checkpoint.as_deref().expect("checkpoint given");
            let scorer = need(ck.scorer.as_ref(), path, "retriever", "pretrain")?;
            let queries: Vec<_> = qs.iter().map(Question::query).collect();
            let retrievals = retrieve_all(&kb, scorer, &queries, &rcfg)?;
            let coverage = answer_coverage(&kb, &qs, &retrievals, &a.k, mode)?;
            report.insert("sr".into(), serde_json::to_value(&coverage)?);
            if let Some(reasoner) = &ck.reasoner {
                let threshold = match &a.validation {
                    Some(v) => {
                        let vqs = load_questions(v, &kb, &mut rec)?;
                        let vq: Vec<_> = vqs.iter().map(Question::query).collect();
                        let vr = retrieve_all(&kb, scorer, &vq, &rcfg)?;
                        let vd = distributions(&kb, scorer, reasoner, &vqs, &vr)?;
                        search_threshold(&vd, &vqs, a.grid_step).map_err(|e| input_error(e.to_string()))?
                    }
                    None => a.threshold,
                };
                let dists = distributions(&kb, scorer, reasoner, &qs, &retrievals)?;
                report.insert("qa".into(), serde_json::to_value(qa_metrics(&dists, &qs, threshold)?)?);
                if let Some(path) = &a.answers {
                    let mut text = String::new();
                    for (q, d) in qs.iter().zip(&dists) {
                        text.push_str(&answer_line(&kb, q, d, threshold, a.top)?);
                        text.push('\n');
                    }
                    write_file(path, text.as_bytes(), &mut rec)?;
                }
            }
        }
        (None, Baseline::Ppr) => {}
    }
    if a.baseline == Baseline::Ppr {
        let cfg = PprConfig {
            max_entities: a.max_entities,
            ..Default::default()
        };
        let sc = ppr_coverage(&kb, &qs, &cfg).map_err(|e| input_error(e.to_string()))?;
        report.insert(
            "ppr".into(),
            serde_json::json!({
                "max_entities": a.max_entities,
                "coverage": sc.coverage,
                "mean_entities": sc.mean_entities,
            }),
        );
    }

    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(out) = &a.out {
        write_file(out, (text + "\n").as_bytes(), &mut rec)?;
    }
    if let Some(csv) = &a.csv {
        let mut rows = String::from("k,metric,value\n");
        if let Some(cov) = report.get("sr") {
            let cov: srkbqa::CoverageReport = serde_json::from_value(cov.clone())?;
            for c in &cov.by_k {
                rows.push_str(&format!("{},hits,{}\n{},mean_entities,{}\n", c.k, c.hits, c.k, c.mean_entities));
            }
        }
        write_file(csv, rows.as_bytes(), &mut rec)?;
    }
    rec.finish(&g.manifest_for(a.out.as_deref(), "eval"))?;
    Ok(())
}

/// Exit code for an error chain: 2 for bad input, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() || cause.is::<std::io::Error>() || cause.is::<serde_json::Error>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<srkbqa::Error>() {
            use srkbqa::Error::*;
            return match e {
                Io { .. }
                | Parse { .. }
                | EmptyInput
                | UnknownEntityName(_)
                | NoTopicEntity(_)
                | InvalidArgument(_)
                | NoTrainingSignal(_)
                | Checkpoint(_)
                | Json(_) => 2,
                _ => 1,
            };
        }
    }
    1
}

