//! Geometry of trained embeddings: each dimension of a relation is a line
//! `w1 * h + b = w2 * t` in the (h, t) plane. These diagnostics measure
//! line angles and compare them against the constructions that symmetry,
//! inversion and composition require.

use serde::{Deserialize, Serialize};

use crate::kgdata::{EntityId, RelationId, Vocab};
use crate::model::EmbeddingStore;

/// One dimension of a relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineParams {
    pub w1: f64,
    pub w2: f64,
    pub b: f64,
}

impl LineParams {
    pub fn is_degenerate(&self) -> bool {
        self.w1 == 0.0 && self.w2 == 0.0
    }

    /// Reflection of the line across h = t (axis swap).
    pub fn reflected(&self) -> LineParams {
        LineParams {
            w1: self.w2,
            w2: self.w1,
            b: -self.b,
        }
    }
}

/// Angle of the line against the h axis, in degrees on [0, 180).
///
/// The direction vector of `w1*h + b = w2*t` is (w2, w1); a vertical line
/// (w2 = 0) maps to 90. Degenerate dimensions (w1 = w2 = 0) return None.
pub fn line_angle(p: &LineParams) -> Option<f64> {
    if p.is_degenerate() {
        return None;
    }
    let mut deg = p.w1.atan2(p.w2).to_degrees() % 180.0;
    if deg < 0.0 {
        deg += 180.0;
    }
    if deg == 180.0 {
        deg = 0.0;
    }
    Some(deg)
}

/// Circular distance between two angles modulo 180 degrees.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(180.0);
    d.min(180.0 - d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagnosticKind {
    Symmetry,
    Inversion,
    Composition,
    Mapping,
}

impl std::fmt::Display for DiagnosticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            DiagnosticKind::Symmetry => "symmetry",
            DiagnosticKind::Inversion => "inversion",
            DiagnosticKind::Composition => "composition",
            DiagnosticKind::Mapping => "mapping",
        };
        f.write_str(s)
    }
}

/// Binned angles over [0, 180) for one relation diagnostic. Degenerate
/// dimensions are counted but excluded from bins, so counts sum to
/// k - degenerate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AngleHistogram {
    pub relation: String,
    pub kind: DiagnosticKind,
    pub bin_width: f64,
    pub counts: Vec<usize>,
    pub degenerate: usize,
    angles: Vec<f64>,
}

pub const DEFAULT_BIN_WIDTH: f64 = 2.0;

impl AngleHistogram {
    pub fn from_angles(
        relation: impl Into<String>,
        kind: DiagnosticKind,
        bin_width: f64,
        angles: Vec<f64>,
        degenerate: usize,
    ) -> Self {
        assert!(bin_width > 0.0 && bin_width <= 180.0);
        let n_bins = (180.0 / bin_width).ceil() as usize;
        let mut counts = vec![0usize; n_bins];
        for &a in &angles {
            debug_assert!((0.0..180.0).contains(&a));
            let bin = ((a / bin_width) as usize).min(n_bins - 1);
            counts[bin] += 1;
        }
        AngleHistogram {
            relation: relation.into(),
            kind,
            bin_width,
            counts,
            degenerate,
            angles,
        }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    /// Fraction of (non-degenerate) angles within `tol` degrees of any of
    /// the given centers, distance taken modulo 180.
    pub fn mass_within(&self, centers: &[f64], tol: f64) -> f64 {
        if self.angles.is_empty() {
            return 0.0;
        }
        let close = self
            .angles
            .iter()
            .filter(|&&a| centers.iter().any(|&c| angle_distance(a, c) <= tol))
            .count();
        close as f64 / self.angles.len() as f64
    }

    /// Fraction of mass in the fullest bin.
    pub fn max_bin_fraction(&self) -> f64 {
        if self.angles.is_empty() {
            return 0.0;
        }
        *self.counts.iter().max().unwrap() as f64 / self.angles.len() as f64
    }

    /// `bin_start,bin_end,count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_start,bin_end,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            let start = i as f64 * self.bin_width;
            let end = (start + self.bin_width).min(180.0);
            out.push_str(&format!("{start},{end},{c}\n"));
        }
        out
    }
}

fn line_of(store: &EmbeddingStore, r: RelationId, i: usize) -> LineParams {
    LineParams {
        w1: store.rel_w1(r)[i],
        w2: store.rel_w2(r)[i],
        b: store.rel_b(r)[i],
    }
}

/// Histogram of the line angles of all dimensions of `r`. A symmetric
/// relation concentrates at 45 (w1 = w2, b = 0) and 135 (w1 = -w2).
pub fn symmetry_diagnostic(store: &EmbeddingStore, r: RelationId, label: &str) -> AngleHistogram {
    let mut angles = Vec::with_capacity(store.dim());
    let mut degenerate = 0;
    for i in 0..store.dim() {
        match line_angle(&line_of(store, r, i)) {
            Some(a) => angles.push(a),
            None => degenerate += 1,
        }
    }
    AngleHistogram::from_angles(label, DiagnosticKind::Symmetry, DEFAULT_BIN_WIDTH, angles, degenerate)
}

/// Per dimension, the angle between r1's line and the reflection of r2's
/// line across h = t. Inverse relation pairs concentrate at 0 / 180.
pub fn inversion_diagnostic(
    store: &EmbeddingStore,
    r1: RelationId,
    r2: RelationId,
    label: &str,
) -> AngleHistogram {
    let mut angles = Vec::with_capacity(store.dim());
    let mut degenerate = 0;
    for i in 0..store.dim() {
        let a1 = line_angle(&line_of(store, r1, i));
        let a2 = line_angle(&line_of(store, r2, i).reflected());
        match (a1, a2) {
            (Some(a1), Some(a2)) => angles.push((a1 - a2).rem_euclid(180.0)),
            _ => degenerate += 1,
        }
    }
    AngleHistogram::from_angles(label, DiagnosticKind::Inversion, DEFAULT_BIN_WIDTH, angles, degenerate)
}

/// Compose r2 and r3 (w1 = w1_2 ∘ w1_3, w2 = w2_2 ∘ w2_3,
/// b = b_2 ∘ w1_3 + b_3 ∘ w2_2) and measure per-dimension angles between
/// the composite line and r1's line. An exact composite concentrates at 0.
pub fn composition_diagnostic(
    store: &EmbeddingStore,
    r1: RelationId,
    r2: RelationId,
    r3: RelationId,
    label: &str,
) -> AngleHistogram {
    let mut angles = Vec::with_capacity(store.dim());
    let mut degenerate = 0;
    for i in 0..store.dim() {
        let composite = compose_lines(&line_of(store, r2, i), &line_of(store, r3, i));
        let a1 = line_angle(&line_of(store, r1, i));
        let ac = line_angle(&composite);
        match (a1, ac) {
            (Some(a1), Some(ac)) => angles.push((a1 - ac).rem_euclid(180.0)),
            _ => degenerate += 1,
        }
    }
    AngleHistogram::from_angles(
        label,
        DiagnosticKind::Composition,
        DEFAULT_BIN_WIDTH,
        angles,
        degenerate,
    )
}

/// The composite of two relation dimensions: first `a` (h to e), then `b`
/// (e to t).
pub fn compose_lines(a: &LineParams, b: &LineParams) -> LineParams {
    LineParams {
        w1: a.w1 * b.w1,
        w2: a.w2 * b.w2,
        b: a.b * b.w1 + b.b * a.w2,
    }
}

pub const DEFAULT_STEEP_TOLERANCE: f64 = 20.0;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MappingDiagnostic {
    pub histogram: AngleHistogram,
    /// Dimensions within the steep tolerance of 90 degrees (near-vertical
    /// lines: one head pairs with many spread-out tails).
    pub steep: usize,
    pub gentle: usize,
    pub steep_tolerance: f64,
}

/// Line-angle histogram plus steep/gentle counts for one relation.
pub fn mapping_diagnostic(
    store: &EmbeddingStore,
    r: RelationId,
    steep_tolerance: f64,
    label: &str,
) -> MappingDiagnostic {
    let mut angles = Vec::with_capacity(store.dim());
    let mut degenerate = 0;
    for i in 0..store.dim() {
        match line_angle(&line_of(store, r, i)) {
            Some(a) => angles.push(a),
            None => degenerate += 1,
        }
    }
    let steep = angles
        .iter()
        .filter(|&&a| (a - 90.0).abs() <= steep_tolerance)
        .count();
    let gentle = angles.len() - steep;
    MappingDiagnostic {
        histogram: AngleHistogram::from_angles(
            label,
            DiagnosticKind::Mapping,
            DEFAULT_BIN_WIDTH,
            angles,
            degenerate,
        ),
        steep,
        gentle,
        steep_tolerance,
    }
}

/// One exported point: the line of one dimension and one entity pair's
/// coordinates in it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScatterRow {
    pub dim: usize,
    pub w1: f64,
    pub w2: f64,
    pub b: f64,
    pub head: EntityId,
    pub tail: EntityId,
    pub h_coord: f64,
    pub t_coord: f64,
}

/// Per selected dimension, the line parameters and the ([h]_i, [t]_i)
/// coordinates of the given entity pairs, for external plotting.
pub fn scatter_export(
    store: &EmbeddingStore,
    r: RelationId,
    dims: &[usize],
    pairs: &[(EntityId, EntityId)],
) -> Vec<ScatterRow> {
    let mut rows = Vec::with_capacity(dims.len() * pairs.len());
    for &dim in dims {
        assert!(dim < store.dim(), "dimension {dim} out of range");
        let line = line_of(store, r, dim);
        for &(h, t) in pairs {
            rows.push(ScatterRow {
                dim,
                w1: line.w1,
                w2: line.w2,
                b: line.b,
                head: h,
                tail: t,
                h_coord: store.entity(h)[dim],
                t_coord: store.entity(t)[dim],
            });
        }
    }
    rows
}

/// `dim,w1,w2,b,entity_pair,h_coord,t_coord` rows; the pair column joins
/// the two entity names with '|'.
pub fn scatter_csv(rows: &[ScatterRow], vocab: &Vocab) -> String {
    let mut out = String::from("dim,w1,w2,b,entity_pair,h_coord,t_coord\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}|{},{},{}\n",
            r.dim,
            r.w1,
            r.w2,
            r.b,
            vocab.entity_name(r.head),
            vocab.entity_name(r.tail),
            r.h_coord,
            r.t_coord
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::store_from_parts;
    use crate::model::{init_embeddings, ModelConfig, ModelMode};

    fn line(w1: f64, w2: f64, b: f64) -> LineParams {
        LineParams { w1, w2, b }
    }

    #[test]
    fn slope_one_is_forty_five() {
        assert_eq!(line_angle(&line(1.0, 1.0, 0.3)).unwrap(), 45.0);
        assert_eq!(line_angle(&line(-2.0, -2.0, 0.0)).unwrap(), 45.0);
    }

    #[test]
    fn slope_minus_one_is_one_thirty_five() {
        assert_eq!(line_angle(&line(1.0, -1.0, 0.0)).unwrap(), 135.0);
        assert_eq!(line_angle(&line(-1.0, 1.0, 5.0)).unwrap(), 135.0);
    }

    #[test]
    fn vertical_line_is_ninety() {
        assert_eq!(line_angle(&line(1.0, 0.0, 0.0)).unwrap(), 90.0);
        assert_eq!(line_angle(&line(-3.0, 0.0, 1.0)).unwrap(), 90.0);
    }

    #[test]
    fn horizontal_line_is_zero() {
        assert_eq!(line_angle(&line(0.0, 1.0, 0.0)).unwrap(), 0.0);
        assert_eq!(line_angle(&line(0.0, -7.0, 0.2)).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_line_is_excluded() {
        assert!(line_angle(&line(0.0, 0.0, 1.0)).is_none());
    }

    #[test]
    fn angle_is_scale_invariant() {
        for &(w1, w2) in &[(0.3, 0.7), (-1.2, 0.4), (2.0, -2.0), (5.0, 0.0)] {
            let base = line_angle(&line(w1, w2, 0.0)).unwrap();
            for &c in &[2.0, -1.0, 0.25, -17.5] {
                let scaled = line_angle(&line(c * w1, c * w2, 0.0)).unwrap();
                assert!(
                    angle_distance(base, scaled) < 1e-9,
                    "({w1},{w2}) x {c}: {base} vs {scaled}"
                );
            }
        }
    }

    #[test]
    fn reflection_is_an_involution() {
        for &(w1, w2, b) in &[(0.3, 0.7, 0.1), (-1.2, 0.4, -2.0), (1.0, 0.0, 3.0)] {
            let p = line(w1, w2, b);
            let twice = p.reflected().reflected();
            assert_eq!(p, twice);
            let a = line_angle(&p).unwrap();
            let ar = line_angle(&p.reflected()).unwrap();
            // reflected angle is 90 - angle, modulo 180
            assert!(angle_distance(ar, (90.0 - a).rem_euclid(180.0)) < 1e-9);
        }
    }

    #[test]
    fn hand_set_symmetric_store_masses_at_forty_five() {
        // w1 == w2 everywhere, b = 0
        let k = 8;
        let store = store_from_parts(
            k,
            ModelMode::LineaRE,
            vec![0.0; 2 * k],
            (0..k).map(|i| 1.0 + i as f64).collect(),
            (0..k).map(|i| 1.0 + i as f64).collect(),
            vec![0.0; k],
        );
        let h = symmetry_diagnostic(&store, 0, "sym");
        assert_eq!(h.mass_within(&[45.0], 0.001), 1.0);
        assert_eq!(h.counts.iter().sum::<usize>(), k);
    }

    #[test]
    fn exact_reflection_concentrates_inversion_at_zero() {
        let k = 6;
        let w1: Vec<f64> = (0..k).map(|i| 0.5 + i as f64 * 0.3).collect();
        let w2: Vec<f64> = (0..k).map(|i| 1.5 - i as f64 * 0.1).collect();
        let b: Vec<f64> = (0..k).map(|i| i as f64 * 0.2 - 0.5).collect();
        // r2 = reflection of r1: swap weights, negate bias
        let mut rw1 = w1.clone();
        let mut rw2 = w2.clone();
        let mut rb = b.clone();
        rw1.extend(w2.iter());
        rw2.extend(w1.iter());
        rb.extend(b.iter().map(|x| -x));
        let store = store_from_parts(k, ModelMode::LineaRE, vec![0.0; 2 * k], rw1, rw2, rb);
        let h = inversion_diagnostic(&store, 0, 1, "fwd-vs-inv");
        assert_eq!(h.mass_within(&[0.0, 180.0], 1e-6), 1.0);
    }

    #[test]
    fn self_inversion_of_symmetric_lines_concentrates_at_zero() {
        // 45/135 lines are their own reflections
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![0.0; 4],
            vec![1.0, 1.0],
            vec![1.0, -1.0],
            vec![0.0, 0.0],
        );
        let h = inversion_diagnostic(&store, 0, 0, "self");
        assert_eq!(h.mass_within(&[0.0, 180.0], 1e-9), 1.0);
    }

    #[test]
    fn exact_composite_concentrates_at_zero_with_no_spread() {
        let k = 5;
        let r2w1: Vec<f64> = (0..k).map(|i| 0.8 + 0.1 * i as f64).collect();
        let r2w2: Vec<f64> = (0..k).map(|i| 1.2 - 0.05 * i as f64).collect();
        let r2b: Vec<f64> = (0..k).map(|i| 0.1 * i as f64).collect();
        let r3w1: Vec<f64> = (0..k).map(|i| 1.1 - 0.07 * i as f64).collect();
        let r3w2: Vec<f64> = (0..k).map(|i| 0.9 + 0.02 * i as f64).collect();
        let r3b: Vec<f64> = (0..k).map(|i| 0.3 - 0.06 * i as f64).collect();
        // r1 = composite of r2 then r3
        let mut w1 = Vec::new();
        let mut w2 = Vec::new();
        let mut b = Vec::new();
        for i in 0..k {
            let c = compose_lines(
                &line(r2w1[i], r2w2[i], r2b[i]),
                &line(r3w1[i], r3w2[i], r3b[i]),
            );
            w1.push(c.w1);
            w2.push(c.w2);
            b.push(c.b);
        }
        w1.extend(&r2w1);
        w1.extend(&r3w1);
        w2.extend(&r2w2);
        w2.extend(&r3w2);
        b.extend(&r2b);
        b.extend(&r3b);
        let store = store_from_parts(k, ModelMode::LineaRE, vec![0.0; 2 * k], w1, w2, b);
        let h = composition_diagnostic(&store, 0, 1, 2, "composite");
        assert_eq!(h.mass_within(&[0.0, 180.0], 1e-9), 1.0);
        // algebraic identity, not a trained approximation: zero spread
        for &a in h.angles() {
            assert!(angle_distance(a, 0.0) < 1e-9);
        }
    }

    #[test]
    fn vertical_dimension_counts_as_steep() {
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![0.0; 4],
            vec![1.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 0.0],
        );
        let d = mapping_diagnostic(&store, 0, DEFAULT_STEEP_TOLERANCE, "fan");
        assert_eq!(d.steep, 1);
        assert_eq!(d.gentle, 1);
    }

    #[test]
    fn transe_store_has_all_forty_five_and_zero_steep() {
        let cfg = ModelConfig {
            dim: 16,
            mode: ModelMode::TransE,
            init_seed: 4,
        };
        let store = init_embeddings(3, 2, &cfg);
        let d = mapping_diagnostic(&store, 0, DEFAULT_STEEP_TOLERANCE, "transe");
        assert_eq!(d.steep, 0);
        assert_eq!(d.histogram.mass_within(&[45.0], 1e-9), 1.0);
    }

    #[test]
    fn random_line_parameters_are_not_concentrated() {
        // Monte-Carlo: w1, w2 uniform on [-1, 1] gives a diffuse histogram
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(123);
        let k = 500;
        let w1: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let w2: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let store = store_from_parts(
            k,
            ModelMode::LineaRE,
            vec![0.0; 2 * k],
            w1,
            w2,
            vec![0.0; k],
        );
        let h = symmetry_diagnostic(&store, 0, "random");
        assert!(h.max_bin_fraction() < 0.20, "bin fraction {}", h.max_bin_fraction());
    }

    #[test]
    fn histogram_csv_shape() {
        let h = AngleHistogram::from_angles("r", DiagnosticKind::Symmetry, 2.0, vec![45.0], 0);
        let csv = h.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 91); // header + 90 bins
        assert_eq!(lines[0], "bin_start,bin_end,count");
        assert!(lines.iter().any(|l| l.starts_with("44,46,1")));
    }

    #[test]
    fn empty_pair_list_yields_header_only_csv() {
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![0.0; 4],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![0.0, 0.0],
        );
        let rows = scatter_export(&store, 0, &[0, 1], &[]);
        assert!(rows.is_empty());
        let mut vocab = Vocab::default();
        vocab.intern_entity("x");
        let csv = scatter_csv(&rows, &vocab);
        assert_eq!(csv, "dim,w1,w2,b,entity_pair,h_coord,t_coord\n");
    }

    #[test]
    fn scatter_rows_carry_line_and_coordinates() {
        let store = store_from_parts(
            2,
            ModelMode::LineaRE,
            vec![0.1, 0.2, 0.3, 0.4],
            vec![1.5, 2.5],
            vec![0.5, 1.0],
            vec![-0.25, 0.75],
        );
        let rows = scatter_export(&store, 0, &[1], &[(0, 1), (1, 0)]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].dim, 1);
        assert_eq!(rows[0].w1, 2.5);
        assert_eq!(rows[0].h_coord, 0.2);
        assert_eq!(rows[0].t_coord, 0.4);
    }
}
