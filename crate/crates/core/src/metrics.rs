//! Estimators for the three expressiveness desiderata of a mapping:
//! consistency (similar inputs give similar outputs), diversity (dissimilar
//! inputs give dissimilar outputs) and range (the whole output space is
//! reachable).
//!
//! Mappings are functions over standardized input vectors. All sampling is
//! seeded, so reports are deterministic.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Perturbation norm in standardized input units.
    pub delta: f64,
    pub sample_count: usize,
    pub pair_count: usize,
    pub bins: usize,
    pub seed: u64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            delta: 0.1,
            sample_count: 2000,
            pair_count: 10_000,
            bins: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyStats {
    pub min: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentRange {
    /// Fraction of histogram bins that received at least one sample.
    pub coverage: f64,
    /// Fraction of samples exactly 0.
    pub clip_low: f64,
    /// Fraction of samples exactly 1.
    pub clip_high: f64,
}

impl ComponentRange {
    pub fn clip_total(&self) -> f64 {
        self.clip_low + self.clip_high
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub bins: usize,
    pub samples: usize,
    pub components: Vec<ComponentRange>,
    /// Output values outside `[0, 1]` (never binned).
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesiderataReport {
    pub consistency: ConsistencyStats,
    pub diversity: f64,
    pub range: RangeReport,
}

impl DesiderataReport {
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let c = &self.consistency;
        writeln!(
            s,
            "consistency  min {}  median {}  p95 {}  max {}  (n={})",
            c.min, c.median, c.p95, c.max, c.samples
        )
        .unwrap();
        writeln!(s, "diversity    spearman {}", self.diversity).unwrap();
        writeln!(
            s,
            "range        bins {}  samples {}  violations {}",
            self.range.bins, self.range.samples, self.range.violations
        )
        .unwrap();
        writeln!(s, "component  coverage  clip_low  clip_high").unwrap();
        for (j, r) in self.range.components.iter().enumerate() {
            writeln!(s, "{j:>9}  {}  {}  {}", r.coverage, r.clip_low, r.clip_high).unwrap();
        }
        s
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Linear-interpolated percentile of sorted data, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Local amplification `‖f(x + Δ) − f(x)‖ / δ` for random `Δ` with `‖Δ‖ = δ`.
pub fn consistency_metric<F>(
    map_fn: F,
    points: &[Vec<f64>],
    delta: f64,
    sample_count: usize,
    seed: u64,
) -> Result<ConsistencyStats>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "delta must be positive, got {delta}"
        )));
    }
    if sample_count == 0 {
        return Err(Error::InvalidConfig("sample_count must be ≥ 1".into()));
    }
    if points.is_empty() {
        return Err(Error::DegenerateCorpus(
            "consistency needs at least one frame".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dim = points[0].len();
    let mut ratios = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let x = &points[rng.random_range(0..points.len())];
        let mut dir: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            dir[0] = delta;
        } else {
            dir.iter_mut().for_each(|v| *v *= delta / norm);
        }
        let shifted: Vec<f64> = x.iter().zip(&dir).map(|(a, b)| a + b).collect();
        ratios.push(distance(&map_fn(&shifted)?, &map_fn(x)?) / delta);
    }
    ratios.sort_by(f64::total_cmp);
    Ok(ConsistencyStats {
        min: ratios[0],
        median: percentile(&ratios, 0.5),
        p95: percentile(&ratios, 0.95),
        max: *ratios.last().unwrap(),
        samples: ratios.len(),
    })
}

/// Fractional ranks (ties share their average rank).
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation; 0 when either side has no spread.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Spearman correlation between input and output distances over random
/// frame pairs.
pub fn diversity_metric<F>(
    map_fn: F,
    points: &[Vec<f64>],
    pair_count: usize,
    seed: u64,
) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if points.len() < 2 {
        return Err(Error::DegenerateCorpus(format!(
            "diversity needs at least 2 frames, got {}",
            points.len()
        )));
    }
    if pair_count == 0 {
        return Err(Error::InvalidConfig("pair_count must be ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outputs: Vec<Option<Vec<f64>>> = vec![None; points.len()];
    let mut input_d = Vec::with_capacity(pair_count);
    let mut output_d = Vec::with_capacity(pair_count);
    for _ in 0..pair_count {
        let i = rng.random_range(0..points.len());
        let mut j = rng.random_range(0..points.len() - 1);
        if j >= i {
            j += 1;
        }
        for k in [i, j] {
            if outputs[k].is_none() {
                outputs[k] = Some(map_fn(&points[k])?);
            }
        }
        input_d.push(distance(&points[i], &points[j]));
        output_d.push(distance(
            outputs[i].as_ref().unwrap(),
            outputs[j].as_ref().unwrap(),
        ));
    }
    Ok(spearman(&input_d, &output_d))
}

/// Per-component histogram coverage over `[0, 1]` and clip fractions.
pub fn range_coverage<F>(map_fn: F, points: &[Vec<f64>], bins: usize) -> Result<RangeReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if bins < 2 {
        return Err(Error::InvalidConfig(format!(
            "bins must be ≥ 2, got {bins}"
        )));
    }
    if points.is_empty() {
        return Err(Error::DegenerateCorpus(
            "range needs at least one frame".into(),
        ));
    }
    let mut occupied: Vec<Vec<bool>> = Vec::new();
    let mut low: Vec<usize> = Vec::new();
    let mut high: Vec<usize> = Vec::new();
    let mut violations = 0;
    for p in points {
        let y = map_fn(p)?;
        if occupied.is_empty() {
            occupied = vec![vec![false; bins]; y.len()];
            low = vec![0; y.len()];
            high = vec![0; y.len()];
        }
        if y.len() != occupied.len() {
            return Err(Error::DimensionMismatch {
                context: "mapping output",
                expected: occupied.len(),
                got: y.len(),
            });
        }
        for (j, &v) in y.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                violations += 1;
                continue;
            }
            let b = ((v * bins as f64) as usize).min(bins - 1);
            occupied[j][b] = true;
            if v == 0.0 {
                low[j] += 1;
            } else if v == 1.0 {
                high[j] += 1;
            }
        }
    }
    let n = points.len() as f64;
    let components = occupied
        .iter()
        .zip(low.iter().zip(&high))
        .map(|(occ, (&lo, &hi))| ComponentRange {
            coverage: occ.iter().filter(|&&o| o).count() as f64 / bins as f64,
            clip_low: lo as f64 / n,
            clip_high: hi as f64 / n,
        })
        .collect();
    Ok(RangeReport {
        bins,
        samples: points.len(),
        components,
        violations,
    })
}

/// All three desiderata for one mapping.
pub fn evaluate<F>(
    map_fn: F,
    points: &[Vec<f64>],
    config: &MetricsConfig,
) -> Result<DesiderataReport>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    Ok(DesiderataReport {
        consistency: consistency_metric(
            &map_fn,
            points,
            config.delta,
            config.sample_count,
            config.seed,
        )?,
        diversity: diversity_metric(
            &map_fn,
            points,
            config.pair_count,
            config.seed.wrapping_add(1),
        )?,
        range: range_coverage(&map_fn, points, config.bins)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::cell::RefCell;

    fn points(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    }

    fn identity(x: &[f64]) -> Result<Vec<f64>> {
        Ok(x.to_vec())
    }

    #[test]
    fn consistency_oracles() {
        let p = points(50, 6, 1);
        let id = consistency_metric(identity, &p, 0.1, 200, 0).unwrap();
        assert_relative_eq!(id.median, 1.0, epsilon = 1e-9);
        assert_relative_eq!(id.max, 1.0, epsilon = 1e-9);
        let constant = consistency_metric(|_: &[f64]| Ok(vec![0.5; 3]), &p, 0.1, 200, 0).unwrap();
        assert_eq!(
            (constant.median, constant.p95, constant.max),
            (0.0, 0.0, 0.0)
        );
        let double = consistency_metric(
            |x: &[f64]| Ok(x.iter().map(|v| 2.0 * v).collect()),
            &p,
            0.1,
            200,
            0,
        )
        .unwrap();
        assert_relative_eq!(double.median, 2.0, epsilon = 1e-9);
        assert_relative_eq!(double.p95, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn consistency_errors() {
        let p = points(5, 2, 0);
        assert!(consistency_metric(identity, &p, 0.0, 10, 0).is_err());
        assert!(consistency_metric(identity, &[], 0.1, 10, 0).is_err());
    }

    #[test]
    fn diversity_oracles() {
        let p = points(100, 4, 2);
        assert_relative_eq!(
            diversity_metric(identity, &p, 500, 0).unwrap(),
            1.0,
            epsilon = 1e-9
        );
        assert_eq!(
            diversity_metric(|_: &[f64]| Ok(vec![1.0]), &p, 500, 0).unwrap(),
            0.0
        );
        assert!(diversity_metric(identity, &p[..1], 10, 0).is_err());
    }

    #[test]
    fn spearman_ties_and_perfect_anticorrelation() {
        assert_eq!(ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_relative_eq!(spearman(&[1.0, 2.0, 3.0], &[9.0, 4.0, 1.0]), -1.0);
    }

    #[test]
    fn range_oracles() {
        let p = points(10, 2, 3);
        let constant = range_coverage(|_: &[f64]| Ok(vec![0.5; 4]), &p, 20).unwrap();
        for c in &constant.components {
            assert_eq!(c.coverage, 1.0 / 20.0);
            assert_eq!(c.clip_total(), 0.0);
        }
        let clipped = range_coverage(
            |x: &[f64]| Ok(vec![if x[0] > 0.0 { 1.0 } else { 0.0 }]),
            &p,
            4,
        )
        .unwrap();
        assert_relative_eq!(clipped.components[0].clip_total(), 1.0);
        assert_eq!(clipped.components[0].coverage, 0.5);
        assert!(range_coverage(identity, &p, 1).is_err());
    }

    #[test]
    fn out_of_range_outputs_are_violations() {
        let p = points(10, 1, 4);
        let r = range_coverage(|_: &[f64]| Ok(vec![1.5, -0.1, 0.2]), &p, 10).unwrap();
        assert_eq!(r.violations, 20);
        assert_eq!(r.components[0].coverage, 0.0);
        assert_eq!(r.components[2].coverage, 0.1);
    }

    #[test]
    fn uniform_outputs_cover_every_bin() {
        let rng = RefCell::new(ChaCha8Rng::seed_from_u64(5));
        let p = vec![vec![0.0]; 100_000];
        let r = range_coverage(
            |_: &[f64]| Ok((0..3).map(|_| rng.borrow_mut().random::<f64>()).collect()),
            &p,
            20,
        )
        .unwrap();
        assert!(r.components.iter().all(|c| c.coverage == 1.0));
    }

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_relative_eq!(percentile(&v, 0.95), 3.85);
    }

    #[test]
    fn report_is_deterministic_and_table_matches() {
        let p = points(200, 3, 6);
        let f = |x: &[f64]| Ok(x.iter().map(|v| (v.tanh() + 1.0) / 2.0).collect());
        let cfg = MetricsConfig {
            sample_count: 100,
            pair_count: 300,
            ..Default::default()
        };
        let a = evaluate(f, &p, &cfg).unwrap();
        let b = evaluate(f, &p, &cfg).unwrap();
        assert_eq!(a, b);
        let table = a.to_table();
        assert!(table.contains(&format!("median {}", a.consistency.median)));
        assert!(table.contains(&format!("spearman {}", a.diversity)));
    }

    proptest::proptest! {
        #[test]
        fn lipschitz_linear_maps_are_bounded(
            w in proptest::collection::vec(-3.0f64..3.0, 9),
            seed in 0u64..1000,
        ) {
            // Frobenius norm bounds the operator norm
            let lip = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            let f = |x: &[f64]| Ok((0..3).map(|r| (0..3).map(|c| w[r * 3 + c] * x[c]).sum()).collect());
            let s = consistency_metric(f, &points(20, 3, seed), 0.1, 50, seed).unwrap();
            proptest::prop_assert!(s.max <= lip + 1e-9);
        }

        #[test]
        fn diversity_is_invariant_to_monotone_rescaling(seed in 0u64..1000) {
            let p = points(40, 3, seed);
            let f = |x: &[f64]| Ok(x.iter().map(|v| v.sin()).collect::<Vec<_>>());
            let g = |x: &[f64]| Ok(x.iter().map(|v| 3.0 * v.sin()).collect::<Vec<_>>());
            let a = diversity_metric(f, &p, 200, seed).unwrap();
            let b = diversity_metric(g, &p, 200, seed).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
