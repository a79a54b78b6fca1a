//! Mini-batch training: uniform corruption sampling with self-adversarial
//! weighting, the softplus margin loss, and a from-scratch sparse Adam.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluator::evaluate_ranks;
use crate::kgdata::{FilterIndex, KnowledgeGraph, Split, Triple};
use crate::model::{
    accumulate_triple_loss, init_embeddings, EmbeddingStore, GradientSlice, ModelConfig,
    ModelMode, ParamKind,
};

/// Which side of a positive triple gets corrupted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorruptSide {
    Head,
    Tail,
}

/// All training hyperparameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Self-adversarial sampling temperature.
    pub alpha: f64,
    /// Softplus sharpness.
    pub beta: f64,
    /// Fixed margin.
    pub gamma: f64,
    /// Regularization coefficient on squared entity norms.
    pub lambda: f64,
    /// Embedding dimension.
    pub dim: usize,
    pub batch_size: usize,
    pub num_negatives: usize,
    /// Base learning rate; decays by 10x at the midpoint of training.
    pub learning_rate: f64,
    pub max_steps: usize,
    /// Validation cadence in steps; 0 disables validation tracking.
    pub valid_every: usize,
    pub seed: u64,
    pub mode: ModelMode,
    /// Reject negatives that are training facts (ablation; default off,
    /// false negatives are tolerated as in the original sampling scheme).
    pub filter_negatives: bool,
    /// Weight negatives by exp(+alpha * distance) instead of the corrected
    /// exp(-alpha * distance). Comparison mode only: the literal form
    /// up-weights easy negatives.
    pub literal_adversarial: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 1.0,
            beta: 1.0,
            gamma: 12.0,
            lambda: 0.0,
            dim: 200,
            batch_size: 512,
            num_negatives: 64,
            learning_rate: 1e-4,
            max_steps: 10_000,
            valid_every: 1000,
            seed: 0,
            mode: ModelMode::LineaRE,
            filter_negatives: false,
            literal_adversarial: false,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self) -> ModelConfig {
        ModelConfig {
            dim: self.dim,
            mode: self.mode,
            init_seed: self.seed,
        }
    }

    /// Parse a flat `key=value` file ('#' comments, blank lines allowed).
    pub fn from_kv_file(path: &Path) -> Result<Self> {
        let mut cfg = TrainConfig::default();
        cfg.apply_kv_file(path)?;
        Ok(cfg)
    }

    pub fn apply_kv_file(&mut self, path: &Path) -> Result<()> {
        let file = File::open(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config(format!("{}:{}: expected key=value", path.display(), idx + 1))
            })?;
            self.apply_kv(key.trim(), value.trim())
                .map_err(|e| Error::config(format!("{}:{}: {e}", path.display(), idx + 1)))?;
        }
        Ok(())
    }

    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
        where
            T::Err: fmt::Display,
        {
            value
                .parse()
                .map_err(|e| Error::config(format!("{key}={value}: {e}")))
        }
        match key {
            "alpha" => self.alpha = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "gamma" => self.gamma = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "dim" => self.dim = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "num_negatives" => self.num_negatives = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "valid_every" => self.valid_every = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "mode" => self.mode = value.parse()?,
            "filter_negatives" => self.filter_negatives = parse(key, value)?,
            "literal_adversarial" => self.literal_adversarial = parse(key, value)?,
            other => return Err(Error::config(format!("unknown config key {other:?}"))),
        }
        Ok(())
    }

    /// Sanity-check required invariants (positivity and the like).
    pub fn validate(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::config("dim must be >= 1"));
        }
        if self.batch_size < 1 {
            return Err(Error::config("batch_size must be >= 1"));
        }
        if self.num_negatives < 1 {
            return Err(Error::config("num_negatives must be >= 1"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be positive"));
        }
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda", self.lambda),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("{name} must be finite and >= 0")));
            }
        }
        if self.beta == 0.0 {
            return Err(Error::config("beta must be positive"));
        }
        Ok(())
    }

    /// Non-fatal warnings for values outside the tuned search ranges.
    pub fn grid_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check = |name: &str, v: f64, lo: f64, hi: f64| {
            if v < lo || v > hi {
                out.push(format!("{name}={v} outside the tuned range [{lo}, {hi}]"));
            }
        };
        check("alpha", self.alpha, 0.5, 1.0);
        check("beta", self.beta, 0.75, 1.25);
        check("gamma", self.gamma, 6.0, 30.0);
        check("dim", self.dim as f64, 250.0, 1000.0);
        check("batch_size", self.batch_size as f64, 512.0, 2048.0);
        check("num_negatives", self.num_negatives as f64, 128.0, 1024.0);
        out
    }
}

/// Corrupt one side of `positive` n times, uniformly over all entities
/// other than the original. A draw hitting the original entity is rejected
/// and redrawn exactly once, from the remaining entities.
pub fn sample_negatives(
    positive: &Triple,
    n: usize,
    side: CorruptSide,
    n_entities: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Triple>> {
    sample_negatives_avoiding(positive, n, side, n_entities, None, rng)
}

/// As `sample_negatives`, optionally rejecting corruptions that form a
/// known training fact (bounded retries; the last draw wins).
pub fn sample_negatives_avoiding(
    positive: &Triple,
    n: usize,
    side: CorruptSide,
    n_entities: usize,
    train_filter: Option<&FilterIndex>,
    rng: &mut impl Rng,
) -> Result<Vec<Triple>> {
    assert!(n >= 1);
    if n_entities < 2 {
        return Err(Error::data(
            "cannot sample negatives with a single entity".to_string(),
        ));
    }
    let original = match side {
        CorruptSide::Head => positive.head,
        CorruptSide::Tail => positive.tail,
    };
    let make = |e: u32| match side {
        CorruptSide::Head => Triple::new(e, positive.relation, positive.tail),
        CorruptSide::Tail => Triple::new(positive.head, positive.relation, e),
    };
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let mut e = draw_corruption(rng, n_entities, original);
        if let Some(filter) = train_filter {
            let mut tries = 0;
            while tries < 64 && filter.contains(&make(e)) {
                e = draw_corruption(rng, n_entities, original);
                tries += 1;
            }
        }
        out.push(make(e));
    }
    Ok(out)
}

/// One corrupting entity: a uniform draw over all entities, redrawn a
/// single time (over the remaining entities) if it hits the original.
fn draw_corruption<R: Rng + ?Sized>(rng: &mut R, n_entities: usize, original: u32) -> u32 {
    let first = rng.random_range(0..n_entities as u32);
    if first != original {
        return first;
    }
    let second = rng.random_range(0..n_entities as u32 - 1);
    if second >= original {
        second + 1
    } else {
        second
    }
}

/// Softmax weights over negatives: harder negatives (lower distance) get
/// larger weight, `w_j ∝ exp(-alpha * f_j)`. Computed with a max shift.
pub fn adversarial_weights(neg_scores: &[f64], alpha: f64) -> Result<Vec<f64>> {
    adversarial_weights_with(neg_scores, alpha, false)
}

pub fn adversarial_weights_with(
    neg_scores: &[f64],
    alpha: f64,
    literal_sign: bool,
) -> Result<Vec<f64>> {
    assert!(!neg_scores.is_empty());
    assert!(alpha >= 0.0);
    let sign = if literal_sign { 1.0 } else { -1.0 };
    let mut logits = Vec::with_capacity(neg_scores.len());
    for &f in neg_scores {
        if !f.is_finite() {
            return Err(Error::non_finite("negative score in adversarial weights"));
        }
        logits.push(sign * alpha * f);
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = logits.iter().map(|&l| (l - m).exp()).collect();
    let z: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= z;
    }
    Ok(weights)
}

/// Batch positions are accumulated in fixed-size chunks so that results do
/// not depend on the worker count.
const BATCH_CHUNK: usize = 16;

/// Mean per-triple loss over a batch, with gradients accumulated sparsely.
/// Adversarial weights are computed from the current scores and treated as
/// constants.
pub fn batch_loss(
    positives: &[Triple],
    negatives: &[Vec<Triple>],
    store: &EmbeddingStore,
    cfg: &TrainConfig,
) -> Result<(f64, GradientSlice)> {
    assert_eq!(positives.len(), negatives.len());
    assert!(!positives.is_empty());
    let scale = 1.0 / positives.len() as f64;
    let per_chunk: Vec<Result<(f64, GradientSlice)>> = positives
        .par_chunks(BATCH_CHUNK)
        .zip(negatives.par_chunks(BATCH_CHUNK))
        .map(|(pos_chunk, neg_chunk)| {
            let mut grads = GradientSlice::new(store.dim());
            let mut loss_sum = 0.0;
            let mut scores = Vec::new();
            for (pos, negs) in pos_chunk.iter().zip(neg_chunk) {
                scores.clear();
                scores.extend(
                    negs.iter()
                        .map(|n| store.score(n.head, n.relation, n.tail)),
                );
                let weights =
                    adversarial_weights_with(&scores, cfg.alpha, cfg.literal_adversarial)?;
                loss_sum += scale
                    * accumulate_triple_loss(
                        store, pos, negs, &scores, &weights, cfg, scale, &mut grads,
                    )?;
            }
            Ok((loss_sum, grads))
        })
        .collect();

    // deterministic reduction: merge in chunk order regardless of threading
    let mut total = 0.0;
    let mut grads = GradientSlice::new(store.dim());
    for item in per_chunk {
        let (loss, slice) = item?;
        total += loss;
        grads.add_scaled(&slice, 1.0);
    }
    Ok((total, grads))
}

/// First/second-moment accumulators for every parameter matrix.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub t: u64,
    m: [Vec<f64>; 4],
    v: [Vec<f64>; 4],
}

impl AdamState {
    pub fn new(store: &EmbeddingStore) -> Self {
        let shape = |kind: ParamKind| vec![0.0; store.rows_of(kind) * store.dim()];
        AdamState {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            t: 0,
            m: [
                shape(ParamKind::Entity),
                shape(ParamKind::RelW1),
                shape(ParamKind::RelW2),
                shape(ParamKind::RelB),
            ],
            v: [
                shape(ParamKind::Entity),
                shape(ParamKind::RelW1),
                shape(ParamKind::RelW2),
                shape(ParamKind::RelB),
            ],
        }
    }

    fn index(kind: ParamKind) -> usize {
        match kind {
            ParamKind::Entity => 0,
            ParamKind::RelW1 => 1,
            ParamKind::RelW2 => 2,
            ParamKind::RelB => 3,
        }
    }

    pub fn moment_row(&self, kind: ParamKind, id: u32, dim: usize) -> (&[f64], &[f64]) {
        let i = id as usize * dim;
        (
            &self.m[Self::index(kind)][i..i + dim],
            &self.v[Self::index(kind)][i..i + dim],
        )
    }
}

/// One sparse Adam update: only rows present in `grads` move; untouched
/// rows keep stale moments. In TransE mode the weight matrices are frozen.
pub fn adam_step(
    store: &mut EmbeddingStore,
    grads: &GradientSlice,
    state: &mut AdamState,
    lr: f64,
) -> Result<()> {
    // validate up front so the store is never left half-updated
    for (kind, id, g) in grads.rows() {
        for &x in g {
            if !x.is_finite() || x.abs() >= 1e150 {
                return Err(Error::non_finite(format!("gradient for {kind:?} row {id}")));
            }
        }
    }
    state.t += 1;
    let bc1 = 1.0 - state.beta1.powi(state.t as i32);
    let bc2 = 1.0 - state.beta2.powi(state.t as i32);
    let dim = store.dim();
    let frozen = store.mode() == ModelMode::TransE;
    for (kind, id, g) in grads.rows() {
        if frozen && matches!(kind, ParamKind::RelW1 | ParamKind::RelW2) {
            continue;
        }
        let base = id as usize * dim;
        let mi = AdamState::index(kind);
        let params = store.param_row_mut(kind, id);
        for i in 0..dim {
            let m = &mut state.m[mi][base + i];
            *m = state.beta1 * *m + (1.0 - state.beta1) * g[i];
            let v = &mut state.v[mi][base + i];
            *v = state.beta2 * *v + (1.0 - state.beta2) * g[i] * g[i];
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
        }
        if params.iter().any(|x| !x.is_finite()) {
            return Err(Error::non_finite(format!("updated {kind:?} row {id}")));
        }
    }
    Ok(())
}

/// One record per logging event in the JSON-lines training log.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: usize,
    pub loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub valid_mrr: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Checkpoint with the best validation MRR (final store when no
    /// validation ran).
    pub store: EmbeddingStore,
    pub log: Vec<LogRecord>,
    pub best_valid_mrr: Option<f64>,
    pub best_step: Option<usize>,
    /// Step at which a non-finite loss aborted training, if any; the
    /// returned store is the last good one.
    pub diverged_at: Option<usize>,
}

/// Run mini-batch training on the train split, corrupting heads for the
/// first half of each batch and tails for the second half. Loss is logged
/// every step; filtered validation MRR every `valid_every` steps.
pub fn train(kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let mut store = init_embeddings(kg.n_entities(), kg.n_relations().max(1), &cfg.model_config());
    if cfg.max_steps == 0 {
        return Ok(TrainOutcome {
            store,
            log: Vec::new(),
            best_valid_mrr: None,
            best_step: None,
            diverged_at: None,
        });
    }
    if kg.train.is_empty() {
        return Err(Error::data("cannot train on an empty train split"));
    }
    if kg.n_entities() < 2 {
        return Err(Error::data("cannot train with fewer than 2 entities"));
    }

    let train_filter = if cfg.filter_negatives {
        Some(FilterIndex::build(&[&kg.train]))
    } else {
        None
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1); // sampling stream, distinct from the init stream

    let mut adam = AdamState::new(&store);
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, EmbeddingStore)> = None;
    let mut diverged_at = None;

    let mut positives = Vec::with_capacity(cfg.batch_size);
    let mut negatives: Vec<Vec<Triple>> = Vec::with_capacity(cfg.batch_size);
    let half = cfg.batch_size.div_ceil(2);

    for step in 1..=cfg.max_steps {
        let lr = if step * 2 > cfg.max_steps {
            cfg.learning_rate * 0.1
        } else {
            cfg.learning_rate
        };

        positives.clear();
        negatives.clear();
        for j in 0..cfg.batch_size {
            let pos = kg.train[rng.random_range(0..kg.train.len())];
            let side = if j < half {
                CorruptSide::Head
            } else {
                CorruptSide::Tail
            };
            let negs = sample_negatives_avoiding(
                &pos,
                cfg.num_negatives,
                side,
                kg.n_entities(),
                train_filter.as_ref(),
                &mut rng,
            )?;
            positives.push(pos);
            negatives.push(negs);
        }

        let step_result = batch_loss(&positives, &negatives, &store, cfg);
        let (loss, grads) = match step_result {
            Ok(pair) => pair,
            Err(Error::NonFinite { .. }) => {
                diverged_at = Some(step);
                break;
            }
            Err(e) => return Err(e),
        };
        if !loss.is_finite() {
            diverged_at = Some(step);
            break;
        }
        if let Err(Error::NonFinite { .. }) = adam_step(&mut store, &grads, &mut adam, lr) {
            diverged_at = Some(step);
            break;
        }

        let mut record = LogRecord {
            step,
            loss,
            valid_mrr: None,
        };
        let validate_now = cfg.valid_every > 0
            && !kg.valid.is_empty()
            && (step % cfg.valid_every == 0 || step == cfg.max_steps);
        if validate_now {
            let ranks = evaluate_ranks(&store, kg, Split::Valid);
            let mrr = ranks.iter().map(|r| 1.0 / r.rank).sum::<f64>() / ranks.len() as f64;
            record.valid_mrr = Some(mrr);
            if best.as_ref().map_or(true, |(b, _, _)| mrr > *b) {
                best = Some((mrr, step, store.clone()));
            }
        }
        log.push(record);
    }

    let (best_valid_mrr, best_step, store) = match best {
        Some((mrr, step, snapshot)) => (Some(mrr), Some(step), snapshot),
        None => (None, None, store),
    };
    Ok(TrainOutcome {
        store,
        log,
        best_valid_mrr,
        best_step,
        diverged_at,
    })
}
