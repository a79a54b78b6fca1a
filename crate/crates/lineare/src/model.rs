//! Embedding storage, the linear-regression scoring function, and exact
//! subgradients of the training loss.
//!
//! A relation r is two weight vectors and a bias vector (w1, w2, b); a
//! triple (h, r, t) scores `|| w1 ∘ h + b - w2 ∘ t ||_1`, zero when the
//! relation's per-dimension lines pass exactly through the (h, t) points.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kgdata::{EntityId, RelationId, Triple, Vocab};
use crate::trainer::TrainConfig;

/// Model variant: full parameterization, or the constrained special case
/// with both weight vectors frozen to all-ones (plain translation).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelMode {
    LineaRE,
    TransE,
}

impl fmt::Display for ModelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelMode::LineaRE => f.write_str("lineare"),
            ModelMode::TransE => f.write_str("transe"),
        }
    }
}

impl FromStr for ModelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lineare" => Ok(ModelMode::LineaRE),
            "transe" => Ok(ModelMode::TransE),
            other => Err(Error::config(format!(
                "unknown mode {other:?} (expected lineare or transe)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub mode: ModelMode,
    pub init_seed: u64,
}

/// Dense embedding matrices: one row per entity, and per-relation rows for
/// w1, w2 and b. All arithmetic is f64.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    mode: ModelMode,
    n_entities: usize,
    n_relations: usize,
    entity: Vec<f64>,
    rel_w1: Vec<f64>,
    rel_w2: Vec<f64>,
    rel_b: Vec<f64>,
}

/// Which parameter matrix a sparse gradient row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKind {
    Entity,
    RelW1,
    RelW2,
    RelB,
}

impl ParamKind {
    pub const ALL: [ParamKind; 4] = [
        ParamKind::Entity,
        ParamKind::RelW1,
        ParamKind::RelW2,
        ParamKind::RelB,
    ];
}

/// Sparse per-row gradients; each (kind, row) appears at most once.
#[derive(Debug, Clone, Default)]
pub struct GradientSlice {
    dim: usize,
    rows: HashMap<(ParamKind, u32), Vec<f64>>,
}

impl GradientSlice {
    pub fn new(dim: usize) -> Self {
        GradientSlice {
            dim,
            rows: HashMap::new(),
        }
    }

    pub fn row_mut(&mut self, kind: ParamKind, id: u32) -> &mut [f64] {
        let dim = self.dim;
        self.rows
            .entry((kind, id))
            .or_insert_with(|| vec![0.0; dim])
    }

    pub fn row(&self, kind: ParamKind, id: u32) -> Option<&[f64]> {
        self.rows.get(&(kind, id)).map(Vec::as_slice)
    }

    pub fn rows(&self) -> impl Iterator<Item = (ParamKind, u32, &[f64])> {
        self.rows.iter().map(|(&(k, id), v)| (k, id, v.as_slice()))
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Add `scale * other` into self. Row-wise; used for batch averaging.
    pub fn add_scaled(&mut self, other: &GradientSlice, scale: f64) {
        for (kind, id, src) in other.rows() {
            let dst = self.row_mut(kind, id);
            for (d, s) in dst.iter_mut().zip(src) {
                *d += scale * s;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.rows.values().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

impl EmbeddingStore {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn mode(&self) -> ModelMode {
        self.mode
    }

    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    pub fn n_relations(&self) -> usize {
        self.n_relations
    }

    pub fn entity(&self, id: EntityId) -> &[f64] {
        let i = id as usize * self.dim;
        &self.entity[i..i + self.dim]
    }

    pub fn rel_w1(&self, id: RelationId) -> &[f64] {
        let i = id as usize * self.dim;
        &self.rel_w1[i..i + self.dim]
    }

    pub fn rel_w2(&self, id: RelationId) -> &[f64] {
        let i = id as usize * self.dim;
        &self.rel_w2[i..i + self.dim]
    }

    pub fn rel_b(&self, id: RelationId) -> &[f64] {
        let i = id as usize * self.dim;
        &self.rel_b[i..i + self.dim]
    }

    pub fn entity_mut(&mut self, id: EntityId) -> &mut [f64] {
        let i = id as usize * self.dim;
        &mut self.entity[i..i + self.dim]
    }

    pub fn param_row(&self, kind: ParamKind, id: u32) -> &[f64] {
        match kind {
            ParamKind::Entity => self.entity(id),
            ParamKind::RelW1 => self.rel_w1(id),
            ParamKind::RelW2 => self.rel_w2(id),
            ParamKind::RelB => self.rel_b(id),
        }
    }

    pub fn param_row_mut(&mut self, kind: ParamKind, id: u32) -> &mut [f64] {
        let i = id as usize * self.dim;
        let m = match kind {
            ParamKind::Entity => &mut self.entity,
            ParamKind::RelW1 => &mut self.rel_w1,
            ParamKind::RelW2 => &mut self.rel_w2,
            ParamKind::RelB => &mut self.rel_b,
        };
        &mut m[i..i + self.dim]
    }

    pub fn rows_of(&self, kind: ParamKind) -> usize {
        match kind {
            ParamKind::Entity => self.n_entities,
            _ => self.n_relations,
        }
    }

    /// Triple score: `|| w1 ∘ h + b - w2 ∘ t ||_1`. Lower is more plausible.
    pub fn score(&self, head: EntityId, relation: RelationId, tail: EntityId) -> f64 {
        let h = self.entity(head);
        let t = self.entity(tail);
        let w1 = self.rel_w1(relation);
        let w2 = self.rel_w2(relation);
        let b = self.rel_b(relation);
        let mut acc = 0.0;
        for i in 0..self.dim {
            acc += ((w1[i] * h[i] + b[i]) - w2[i] * t[i]).abs();
        }
        acc
    }

    /// Scores of (head, relation, e) for every entity e, written into `out`.
    /// Entry e is bit-identical to `score(head, relation, e)`.
    pub fn score_all_tails_into(&self, head: EntityId, relation: RelationId, out: &mut Vec<f64>) {
        let h = self.entity(head);
        let w1 = self.rel_w1(relation);
        let w2 = self.rel_w2(relation);
        let b = self.rel_b(relation);
        // hoisted left term: w1 ∘ h + b, same expression tree as score()
        let mut left = vec![0.0; self.dim];
        for i in 0..self.dim {
            left[i] = w1[i] * h[i] + b[i];
        }
        out.clear();
        out.reserve(self.n_entities);
        for e in 0..self.n_entities {
            let t = &self.entity[e * self.dim..(e + 1) * self.dim];
            let mut acc = 0.0;
            for i in 0..self.dim {
                acc += (left[i] - w2[i] * t[i]).abs();
            }
            out.push(acc);
        }
    }

    pub fn score_all_tails(&self, head: EntityId, relation: RelationId) -> Vec<f64> {
        let mut out = Vec::new();
        self.score_all_tails_into(head, relation, &mut out);
        out
    }

    /// Scores of (e, relation, tail) for every entity e.
    pub fn score_all_heads_into(&self, relation: RelationId, tail: EntityId, out: &mut Vec<f64>) {
        let t = self.entity(tail);
        let w1 = self.rel_w1(relation);
        let w2 = self.rel_w2(relation);
        let b = self.rel_b(relation);
        let mut right = vec![0.0; self.dim];
        for i in 0..self.dim {
            right[i] = w2[i] * t[i];
        }
        out.clear();
        out.reserve(self.n_entities);
        for e in 0..self.n_entities {
            let h = &self.entity[e * self.dim..(e + 1) * self.dim];
            let mut acc = 0.0;
            for i in 0..self.dim {
                acc += ((w1[i] * h[i] + b[i]) - right[i]).abs();
            }
            out.push(acc);
        }
    }

    pub fn score_all_heads(&self, relation: RelationId, tail: EntityId) -> Vec<f64> {
        let mut out = Vec::new();
        self.score_all_heads_into(relation, tail, &mut out);
        out
    }
}

/// Initialize a store: entities and biases uniform on [-6/sqrt(k), 6/sqrt(k)],
/// weights at 1 plus uniform noise on [-0.01, 0.01] (exactly 1 in TransE
/// mode). Deterministic given the seed.
pub fn init_embeddings(n_entities: usize, n_relations: usize, cfg: &ModelConfig) -> EmbeddingStore {
    assert!(n_entities >= 1 && n_relations >= 1 && cfg.dim >= 1);
    let k = cfg.dim;
    let bound = 6.0 / (k as f64).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.init_seed);
    let mut entity = vec![0.0; n_entities * k];
    for x in &mut entity {
        *x = rng.random_range(-bound..=bound);
    }
    let mut rel_w1 = vec![1.0; n_relations * k];
    let mut rel_w2 = vec![1.0; n_relations * k];
    if cfg.mode == ModelMode::LineaRE {
        for x in &mut rel_w1 {
            *x = 1.0 + rng.random_range(-0.01..=0.01);
        }
        for x in &mut rel_w2 {
            *x = 1.0 + rng.random_range(-0.01..=0.01);
        }
    }
    let mut rel_b = vec![0.0; n_relations * k];
    for x in &mut rel_b {
        *x = rng.random_range(-bound..=bound);
    }
    EmbeddingStore {
        dim: k,
        mode: cfg.mode,
        n_entities,
        n_relations,
        entity,
        rel_w1,
        rel_w2,
        rel_b,
    }
}

/// L1 subgradient sign with sign(0) = 0.
#[inline]
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Numerically stable logistic sigmoid.
#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// softplus with sharpness beta: ln(1 + exp(beta x)) / beta.
#[inline]
pub(crate) fn softplus(x: f64, beta: f64) -> f64 {
    let z = beta * x;
    if z > 0.0 {
        x + (-z).exp().ln_1p() / beta
    } else {
        z.exp().ln_1p() / beta
    }
}

/// Loss and exact subgradients for one positive triple with its weighted
/// negatives:
///
/// `softplus(f(pos) - gamma) + sum_j weight_j * softplus(gamma - f(neg_j))`
/// plus the squared-norm penalty estimated from the negatives' replacement
/// entities, `(lambda / n) * sum_j ||e'_j||^2` (an unbiased estimate of the
/// mean entity norm penalty, since replacements are drawn uniformly).
///
/// Weights are treated as constants: no gradient flows through them.
pub fn loss_gradients(
    store: &EmbeddingStore,
    positive: &Triple,
    negatives: &[Triple],
    weights: &[f64],
    cfg: &TrainConfig,
) -> Result<(f64, GradientSlice)> {
    let neg_scores: Vec<f64> = negatives
        .iter()
        .map(|n| store.score(n.head, n.relation, n.tail))
        .collect();
    let mut grads = GradientSlice::new(store.dim());
    let loss = accumulate_triple_loss(
        store, positive, negatives, &neg_scores, weights, cfg, 1.0, &mut grads,
    )?;
    Ok((loss, grads))
}

/// Shared body for `loss_gradients` and batch accumulation: adds
/// `scale * gradients` into `grads` and returns the (unscaled) loss.
/// `neg_scores` must be the current scores of `negatives`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate_triple_loss(
    store: &EmbeddingStore,
    positive: &Triple,
    negatives: &[Triple],
    neg_scores: &[f64],
    weights: &[f64],
    cfg: &TrainConfig,
    scale: f64,
    grads: &mut GradientSlice,
) -> Result<f64> {
    assert_eq!(negatives.len(), weights.len());
    assert_eq!(negatives.len(), neg_scores.len());
    debug_assert!(
        negatives.is_empty() || (weights.iter().sum::<f64>() - 1.0).abs() <= 1e-9,
        "negative weights must sum to 1"
    );
    let dim = store.dim();
    let mut loss = 0.0;

    // positive term: softplus(f - gamma), pushes the score below the margin
    let f_pos = store.score(positive.head, positive.relation, positive.tail);
    if !f_pos.is_finite() {
        return Err(Error::non_finite(format!(
            "score of positive ({}, {}, {})",
            positive.head, positive.relation, positive.tail
        )));
    }
    loss += softplus(f_pos - cfg.gamma, cfg.beta);
    let c_pos = sigmoid(cfg.beta * (f_pos - cfg.gamma));
    accumulate_score_grads(store, positive, scale * c_pos, grads);

    // negative terms: softplus(gamma - f), pushed above the margin
    for ((neg, &w), &f_neg) in negatives.iter().zip(weights).zip(neg_scores) {
        if !f_neg.is_finite() {
            return Err(Error::non_finite(format!(
                "score of negative ({}, {}, {})",
                neg.head, neg.relation, neg.tail
            )));
        }
        loss += w * softplus(cfg.gamma - f_neg, cfg.beta);
        let c_neg = -w * sigmoid(cfg.beta * (cfg.gamma - f_neg));
        accumulate_score_grads(store, neg, scale * c_neg, grads);
    }

    // regularization estimate over the uniformly drawn replacement entities
    if cfg.lambda > 0.0 && !negatives.is_empty() {
        let reg = cfg.lambda / negatives.len() as f64;
        for neg in negatives {
            let replaced = if neg.head != positive.head {
                neg.head
            } else {
                neg.tail
            };
            let e = store.entity(replaced);
            loss += reg * e.iter().map(|x| x * x).sum::<f64>();
            let g = grads.row_mut(ParamKind::Entity, replaced);
            for i in 0..dim {
                g[i] += scale * 2.0 * reg * e[i];
            }
        }
    }

    if !loss.is_finite() {
        return Err(Error::non_finite("triple loss".to_string()));
    }
    Ok(loss)
}

/// Add `coeff * d score(triple) / d params` into `grads`.
fn accumulate_score_grads(
    store: &EmbeddingStore,
    triple: &Triple,
    coeff: f64,
    grads: &mut GradientSlice,
) {
    if coeff == 0.0 {
        return;
    }
    let dim = store.dim();
    let h = store.entity(triple.head);
    let t = store.entity(triple.tail);
    let w1 = store.rel_w1(triple.relation);
    let w2 = store.rel_w2(triple.relation);
    let b = store.rel_b(triple.relation);

    let mut signs = vec![0.0; dim];
    for i in 0..dim {
        signs[i] = sgn((w1[i] * h[i] + b[i]) - w2[i] * t[i]);
    }

    let gh = grads.row_mut(ParamKind::Entity, triple.head);
    for i in 0..dim {
        gh[i] += coeff * w1[i] * signs[i];
    }
    let gt = grads.row_mut(ParamKind::Entity, triple.tail);
    for i in 0..dim {
        gt[i] -= coeff * w2[i] * signs[i];
    }
    let g1 = grads.row_mut(ParamKind::RelW1, triple.relation);
    for i in 0..dim {
        g1[i] += coeff * h[i] * signs[i];
    }
    let g2 = grads.row_mut(ParamKind::RelW2, triple.relation);
    for i in 0..dim {
        g2[i] -= coeff * t[i] * signs[i];
    }
    let gb = grads.row_mut(ParamKind::RelB, triple.relation);
    for i in 0..dim {
        gb[i] += coeff * signs[i];
    }
}

// ---------------------------------------------------------------------------
// Checkpoint format: "LINEARE1" magic, dim/|E|/|R| as little-endian u64,
// a mode byte, then the four matrices as little-endian f64 in row-major
// order. A JSON sidecar holds the name<->id bijections.

const MAGIC: &[u8; 8] = b"LINEARE1";

#[derive(Serialize, Deserialize)]
struct VocabSidecar {
    entities: Vec<String>,
    relations: Vec<String>,
}

/// Sidecar path for a checkpoint: `model.ckpt` -> `model.vocab.json`.
pub fn sidecar_path(checkpoint: &Path) -> PathBuf {
    checkpoint.with_extension("vocab.json")
}

impl EmbeddingStore {
    pub fn save(&self, vocab: &Vocab, path: &Path) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut w = BufWriter::new(File::create(path).map_err(io_err)?);
        w.write_all(MAGIC).map_err(io_err)?;
        for v in [self.dim as u64, self.n_entities as u64, self.n_relations as u64] {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        let mode_tag: u8 = match self.mode {
            ModelMode::LineaRE => 0,
            ModelMode::TransE => 1,
        };
        w.write_all(&[mode_tag]).map_err(io_err)?;
        for m in [&self.entity, &self.rel_w1, &self.rel_w2, &self.rel_b] {
            for x in m.iter() {
                w.write_all(&x.to_le_bytes()).map_err(io_err)?;
            }
        }
        w.flush().map_err(io_err)?;

        let sidecar = VocabSidecar {
            entities: vocab.entity_names().to_vec(),
            relations: vocab.relation_names().to_vec(),
        };
        let sc_path = sidecar_path(path);
        let sc = File::create(&sc_path).map_err(|source| Error::Io {
            path: sc_path.clone(),
            source,
        })?;
        serde_json::to_writer(BufWriter::new(sc), &sidecar)
            .map_err(|e| Error::data(format!("writing {}: {e}", sc_path.display())))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(EmbeddingStore, Vocab)> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut r = BufReader::new(File::open(path).map_err(io_err)?);
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != MAGIC {
            return Err(Error::data(format!(
                "{}: not a checkpoint (bad magic)",
                path.display()
            )));
        }
        let mut u64buf = [0u8; 8];
        let mut read_u64 = |r: &mut BufReader<File>| -> Result<u64> {
            r.read_exact(&mut u64buf).map_err(io_err)?;
            Ok(u64::from_le_bytes(u64buf))
        };
        let dim = read_u64(&mut r)? as usize;
        let n_entities = read_u64(&mut r)? as usize;
        let n_relations = read_u64(&mut r)? as usize;
        let mut mode_tag = [0u8; 1];
        r.read_exact(&mut mode_tag).map_err(io_err)?;
        let mode = match mode_tag[0] {
            0 => ModelMode::LineaRE,
            1 => ModelMode::TransE,
            other => {
                return Err(Error::data(format!(
                    "{}: unknown mode tag {other}",
                    path.display()
                )))
            }
        };
        let read_matrix = |r: &mut BufReader<File>, rows: usize| -> Result<Vec<f64>> {
            let mut bytes = vec![0u8; rows * dim * 8];
            r.read_exact(&mut bytes).map_err(io_err)?;
            Ok(bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect())
        };
        let entity = read_matrix(&mut r, n_entities)?;
        let rel_w1 = read_matrix(&mut r, n_relations)?;
        let rel_w2 = read_matrix(&mut r, n_relations)?;
        let rel_b = read_matrix(&mut r, n_relations)?;

        let sc_path = sidecar_path(path);
        let sc = File::open(&sc_path).map_err(|source| Error::Io {
            path: sc_path.clone(),
            source,
        })?;
        let sidecar: VocabSidecar = serde_json::from_reader(BufReader::new(sc))
            .map_err(|e| Error::data(format!("reading {}: {e}", sc_path.display())))?;
        if sidecar.entities.len() != n_entities || sidecar.relations.len() != n_relations {
            return Err(Error::data(format!(
                "{}: sidecar names do not match header counts ({} entities vs {}, {} relations vs {})",
                sc_path.display(),
                sidecar.entities.len(),
                n_entities,
                sidecar.relations.len(),
                n_relations
            )));
        }
        let mut vocab = Vocab::default();
        for name in &sidecar.entities {
            vocab.intern_entity(name);
        }
        for name in &sidecar.relations {
            vocab.intern_relation(name);
        }
        Ok((
            EmbeddingStore {
                dim,
                mode,
                n_entities,
                n_relations,
                entity,
                rel_w1,
                rel_w2,
                rel_b,
            },
            vocab,
        ))
    }
}

/// Test-support constructors; not part of the stable interface.
#[doc(hidden)]
pub mod test_support {
    use super::*;

    /// Hand-assembled store for small fixtures.
    pub fn store_from_parts(
        dim: usize,
        mode: ModelMode,
        entity: Vec<f64>,
        rel_w1: Vec<f64>,
        rel_w2: Vec<f64>,
        rel_b: Vec<f64>,
    ) -> EmbeddingStore {
        assert_eq!(entity.len() % dim, 0);
        assert_eq!(rel_w1.len(), rel_w2.len());
        assert_eq!(rel_w1.len(), rel_b.len());
        EmbeddingStore {
            dim,
            mode,
            n_entities: entity.len() / dim,
            n_relations: rel_w1.len() / dim,
            entity,
            rel_w1,
            rel_w2,
            rel_b,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::store_from_parts;
    use super::*;

    fn default_cfg() -> TrainConfig {
        TrainConfig::default()
    }

    #[test]
    fn init_is_deterministic_given_seed() {
        let cfg = ModelConfig {
            dim: 4,
            mode: ModelMode::LineaRE,
            init_seed: 7,
        };
        let a = init_embeddings(5, 3, &cfg);
        let b = init_embeddings(5, 3, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn init_respects_uniform_bound() {
        let cfg = ModelConfig {
            dim: 100,
            mode: ModelMode::LineaRE,
            init_seed: 1,
        };
        let store = init_embeddings(20, 2, &cfg);
        for e in 0..20 {
            for &x in store.entity(e) {
                assert!((-0.6..=0.6).contains(&x), "coordinate {x} out of bound");
            }
        }
        for r in 0..2 {
            for &x in store.rel_w1(r).iter().chain(store.rel_w2(r)) {
                assert!((0.99..=1.01).contains(&x));
            }
        }
    }

    #[test]
    fn transe_mode_weights_are_exactly_one() {
        let cfg = ModelConfig {
            dim: 8,
            mode: ModelMode::TransE,
            init_seed: 3,
        };
        let store = init_embeddings(4, 2, &cfg);
        for r in 0..2 {
            assert!(store.rel_w1(r).iter().all(|&x| x == 1.0));
            assert!(store.rel_w2(r).iter().all(|&x| x == 1.0));
        }
    }

    #[test]
    fn score_zero_when_line_equation_holds() {
        // w1 = w2 = 1, b = 0, h = t
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![0.3, -0.7, 0.3, -0.7],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        );
        assert_eq!(store.score(0, 0, 1), 0.0);
    }

    #[test]
    fn score_matches_hand_computation() {
        // w1=(2,1), h=(1,3), b=(0.5,-1), w2=(1,2), t=(3,1)
        // dim 0: 2*1 + 0.5 - 1*3 = -0.5 ; dim 1: 1*3 - 1 - 2*1 = 0
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![1.0, 3.0, 3.0, 1.0],
            vec![2.0, 1.0],
            vec![1.0, 2.0],
            vec![0.5, -1.0],
        );
        assert!((store.score(0, 0, 1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn all_zero_store_scores_bias_norm() {
        let store = store_from_parts(
            3,
            ModelMode::LineaRE,
            vec![0.0; 9],
            vec![1.0, 1.0, 1.0],
            vec![1.0, 1.0, 1.0],
            vec![0.5, -0.25, 1.0],
        );
        let scores = store.score_all_tails(0, 0);
        for s in scores {
            assert_eq!(s, 1.75);
        }
    }

    #[test]
    fn batch_scoring_is_bit_identical_to_single_calls() {
        let cfg = ModelConfig {
            dim: 7,
            mode: ModelMode::LineaRE,
            init_seed: 11,
        };
        let store = init_embeddings(9, 2, &cfg);
        for r in 0..2u32 {
            for h in 0..9u32 {
                let tails = store.score_all_tails(h, r);
                let heads = store.score_all_heads(r, h);
                for e in 0..9u32 {
                    assert_eq!(tails[e as usize], store.score(h, r, e));
                    assert_eq!(heads[e as usize], store.score(e, r, h));
                }
            }
        }
    }

    #[test]
    fn loss_matches_softplus_hand_value() {
        // gamma=1, beta=1, one negative with weight 1, all scores 0:
        // loss = softplus(-1) + softplus(1)
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![0.0; 6],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        );
        let mut cfg = default_cfg();
        cfg.gamma = 1.0;
        cfg.beta = 1.0;
        cfg.lambda = 0.0;
        let pos = Triple::new(0, 0, 1);
        let neg = Triple::new(0, 0, 2);
        let (loss, _) = loss_gradients(&store, &pos, &[neg], &[1.0], &cfg).unwrap();
        let expected = (1.0 + (-1.0f64).exp()).ln() + (1.0 + 1.0f64.exp()).ln();
        assert!((loss - expected).abs() < 1e-12, "loss {loss} vs {expected}");
    }

    #[test]
    fn softplus_beta_sharpness() {
        // beta=2: softplus(0) = ln(2)/2
        assert!((softplus(0.0, 2.0) - 0.5 * 2.0f64.ln()).abs() < 1e-15);
        // large argument approaches identity
        assert!((softplus(50.0, 1.0) - 50.0).abs() < 1e-12);
        // stability for very negative arguments
        assert!(softplus(-1000.0, 1.0) >= 0.0);
        assert!(softplus(-1000.0, 1.0) < 1e-300);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let cfg = ModelConfig {
            dim: 5,
            mode: ModelMode::TransE,
            init_seed: 42,
        };
        let store = init_embeddings(6, 3, &cfg);
        let mut vocab = Vocab::default();
        for e in 0..6 {
            vocab.intern_entity(&format!("ent{e}"));
        }
        for r in 0..3 {
            vocab.intern_relation(&format!("rel{r}"));
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        store.save(&vocab, &path).unwrap();
        let (loaded, loaded_vocab) = EmbeddingStore::load(&path).unwrap();
        assert_eq!(store, loaded);
        assert_eq!(loaded_vocab.entity_names(), vocab.entity_names());
        assert_eq!(loaded_vocab.relation_names(), vocab.relation_names());
    }

    #[test]
    fn checkpoint_load_rejects_mismatched_sidecar() {
        let cfg = ModelConfig {
            dim: 2,
            mode: ModelMode::LineaRE,
            init_seed: 0,
        };
        let store = init_embeddings(3, 1, &cfg);
        let mut vocab = Vocab::default();
        for e in 0..3 {
            vocab.intern_entity(&format!("e{e}"));
        }
        vocab.intern_relation("r");
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        store.save(&vocab, &path).unwrap();
        // corrupt the sidecar: drop one entity
        let sc = sidecar_path(&path);
        let text = std::fs::read_to_string(&sc).unwrap();
        let mangled = text.replacen("\"e0\",", "", 1);
        std::fs::write(&sc, mangled).unwrap();
        assert!(matches!(EmbeddingStore::load(&path), Err(Error::Data(_))));
    }
}
