//! Deterministic numeric kernels shared by every other module: small vector
//! helpers, a seeded reproducible RNG, population statistics, and the
//! Pearson/Spearman correlations used by the proxy-validation metrics.
//!
//! All functions here are pure; [`SeededRng`] is the only stateful type and
//! is single-owner — concurrent use is forked via [`SeededRng::fork`], which
//! derives an independent child seed instead of sharing the stream.

use std::f64::consts::TAU;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Dot product. Lengths must match (debug-asserted).
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += c * x`, in place.
pub fn axpy(y: &mut [f64], c: f64, x: &[f64]) {
    debug_assert_eq!(y.len(), x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += c * xi;
    }
}

/// Errors unless every entry is finite.
pub fn ensure_finite(xs: &[f64], what: &'static str) -> Result<()> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(what))
    }
}

/// Cosine similarity `a·b / (‖a‖‖b‖)`, clamped to `[-1, 1]`.
///
/// Both inputs must have nonzero norm; a zero-norm argument yields
/// [`Error::DegenerateLatent`] and is left to the caller to interpret.
/// The denominator is evaluated as `sqrt((a·a)(b·b))` so identical inputs
/// score exactly 1.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch(format!(
            "cosine_similarity: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    ensure_finite(a, "cosine_similarity lhs")?;
    ensure_finite(b, "cosine_similarity rhs")?;
    let na2 = dot(a, a);
    let nb2 = dot(b, b);
    if na2 == 0.0 || nb2 == 0.0 {
        return Err(Error::DegenerateLatent);
    }
    Ok((dot(a, b) / (na2 * nb2).sqrt()).clamp(-1.0, 1.0))
}

/// Mean and population standard deviation (divisor `N`).
///
/// The population divisor is deliberate: callers normalize within a fixed,
/// fully observed group, not a sample from a larger one.
pub fn mean_std(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(Error::TooFewValues {
            what: "mean_std",
            needed: 2,
            got: xs.len(),
        });
    }
    ensure_finite(xs, "mean_std")?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

/// Sample Pearson correlation coefficient, clamped to `[-1, 1]`.
///
/// Computed as `Σdxdy / sqrt(Σdx² · Σdy²)` so that exactly proportional
/// inputs produce exactly ±1.0.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "pearson: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewValues {
            what: "pearson",
            needed: 2,
            got: x.len(),
        });
    }
    ensure_finite(x, "pearson x")?;
    ensure_finite(y, "pearson y")?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (xi, yi) in x.iter().zip(y) {
        let dx = xi - mx;
        let dy = yi - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    if vx == 0.0 || vy == 0.0 {
        return Err(Error::ZeroVariance("pearson input"));
    }
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

/// Ranks of `xs` (1-based), ties receiving the average of their positions.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).expect("finite values"));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        // Positions i..=j (0-based) share the value; average 1-based rank.
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson correlation of average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "spearman: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::TooFewValues {
            what: "spearman",
            needed: 2,
            got: x.len(),
        });
    }
    ensure_finite(x, "spearman x")?;
    ensure_finite(y, "spearman y")?;
    pearson(&ranks(x), &ranks(y))
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Reproducible random source. Identical seeds yield bit-identical streams
/// on every platform; children are derived by seed, not by stream position,
/// so forking is independent of draw order.
#[derive(Debug, Clone)]
pub struct SeededRng {
    seed: u64,
    rng: ChaCha8Rng,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derive an independent child generator for the given tag.
    pub fn fork(&self, tag: u64) -> SeededRng {
        SeededRng::new(splitmix64(
            self.seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box–Muller (no cached second value, so the
    /// stream position is a pure function of the number of draws).
    pub fn next_normal(&mut self) -> f64 {
        let u1 = 1.0 - self.next_f64(); // (0, 1]
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    pub fn normal_vec(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.next_normal()).collect()
    }

    /// Uniform index in `0..n`. `n` must be positive.
    pub fn next_index(&mut self, n: usize) -> usize {
        assert!(n > 0, "next_index: empty range");
        (self.next_u64() % n as u64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_identical_vectors() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 1.0);
    }

    #[test]
    fn cosine_orthogonal() {
        assert_eq!(cosine_similarity(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn cosine_positive_scaling_invariance() {
        assert_eq!(cosine_similarity(&[3.0, 4.0], &[6.0, 8.0]).unwrap(), 1.0);
        // c·a stays exactly parallel for arbitrary positive c.
        let a = [0.3, -1.7, 2.2];
        let b: Vec<f64> = a.iter().map(|x| x * 7.31).collect();
        assert!((cosine_similarity(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cosine_zero_norm_is_degenerate() {
        assert!(matches!(
            cosine_similarity(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::DegenerateLatent)
        ));
    }

    #[test]
    fn mean_std_population_divisor() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m, 2.0);
        assert!((s - 0.816_496_580_927_726).abs() < 1e-12);
    }

    #[test]
    fn mean_std_constant_and_two_point() {
        assert_eq!(mean_std(&[5.0, 5.0, 5.0]).unwrap(), (5.0, 0.0));
        assert_eq!(mean_std(&[0.0, 2.0]).unwrap(), (1.0, 1.0));
        assert!(mean_std(&[1.0]).is_err());
    }

    #[test]
    fn pearson_exact_linear() {
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(),
            1.0
        );
        assert_eq!(
            pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(),
            -1.0
        );
    }

    #[test]
    fn pearson_hand_computed() {
        // cov = 4, var_x = var_y = 5 → r = 4/5.
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_constant_input_errors() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance(_))
        ));
    }

    #[test]
    fn pearson_affine_invariance() {
        let mut rng = SeededRng::new(7);
        for _ in 0..50 {
            let x = rng.normal_vec(12);
            let y = rng.normal_vec(12);
            let r = pearson(&x, &y).unwrap();
            let x2: Vec<f64> = x.iter().map(|v| 3.7 * v + 11.0).collect();
            let y2: Vec<f64> = y.iter().map(|v| 0.002 * v - 5.5).collect();
            let r2 = pearson(&x2, &y2).unwrap();
            assert!((r - r2).abs() < 1e-9, "affine transform moved r: {r} vs {r2}");
        }
    }

    #[test]
    fn spearman_orderings() {
        assert_eq!(
            spearman(&[10.0, 20.0, 30.0], &[1.0, 5.0, 9.0]).unwrap(),
            1.0
        );
        assert_eq!(
            spearman(&[1.0, 2.0, 3.0], &[9.0, 5.0, 1.0]).unwrap(),
            -1.0
        );
        let r = spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn spearman_matches_pearson_of_ranks_exactly() {
        let mut rng = SeededRng::new(21);
        for _ in 0..50 {
            let x = rng.normal_vec(9);
            let y = rng.normal_vec(9);
            let direct = spearman(&x, &y).unwrap();
            let via_ranks = pearson(&ranks(&x), &ranks(&y)).unwrap();
            assert_eq!(direct, via_ranks);
        }
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[2.0, 1.0, 2.0]), vec![2.5, 1.0, 2.5]);
        assert_eq!(ranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn rng_equal_seeds_identical_streams() {
        let mut a = SeededRng::new(0xDEAD_BEEF);
        let mut b = SeededRng::new(0xDEAD_BEEF);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        // Normal draws ride on the same stream.
        let mut a = SeededRng::new(3);
        let mut b = SeededRng::new(3);
        for _ in 0..1_000 {
            assert_eq!(a.next_normal().to_bits(), b.next_normal().to_bits());
        }
    }

    #[test]
    fn rng_fork_is_order_independent() {
        let root = SeededRng::new(99);
        let mut c1 = root.fork(4);
        let mut c2 = root.fork(4);
        assert_eq!(c1.next_u64(), c2.next_u64());
        let mut other = root.fork(5);
        assert_ne!(c1.next_u64(), other.next_u64());
    }

    #[test]
    fn normal_draws_have_sane_moments() {
        let mut rng = SeededRng::new(11);
        let xs = rng.normal_vec(200_000);
        let (m, s) = mean_std(&xs).unwrap();
        assert!(m.abs() < 0.01, "mean {m}");
        assert!((s - 1.0).abs() < 0.01, "std {s}");
    }
}
