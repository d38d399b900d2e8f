//! Exact and sampled checks of the probabilistic inequalities behind the
//! factorization: the `L⁰` Khintchine bound, Paley–Zygmund, the convex-hull
//! tail bound `C(λ)`, and the Gaussian positive-definite function.

use nalgebra::DVector;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::c_lambda_extend;
use crate::measure_space::{
    boundedness_profile, default_lambda_grid, rearrangement, tail_measure, FiniteProbSpace,
    L0Vector,
};
use crate::minimax_solver::SaddleProblem;

pub const KHINTCHINE_BOUND: f64 = 1.0 / 12.0;
/// Largest `n` for exact sign enumeration.
pub const EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RademacherMode {
    Exact,
    MonteCarlo { seed: u64, samples: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RademacherConfig {
    pub n: usize,
    #[serde(flatten)]
    pub mode: RademacherMode,
}

impl RademacherConfig {
    /// Exact mode up to `exact_max` signs, Monte Carlo beyond.
    pub fn auto(n: usize, exact_max: usize, seed: u64, samples: usize) -> Self {
        let mode = if n <= exact_max.min(EXACT_MAX) {
            RademacherMode::Exact
        } else {
            RademacherMode::MonteCarlo { seed, samples }
        };
        RademacherConfig { n, mode }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KhintchineResult {
    pub probability: f64,
    /// Zero in exact mode.
    pub stderr: f64,
    pub pass: bool,
}

/// `P((Σ εⱼxⱼ)² ≥ ½ Σ xⱼ²)` against the bound `1/12`.
pub fn khintchine_check(x: &[f64], cfg: &RademacherConfig) -> Result<KhintchineResult> {
    if x.len() != cfg.n {
        return Err(Error::DimensionMismatch {
            what: "x",
            got: x.len(),
            expected: cfg.n,
        });
    }
    crate::linalg::check_finite("x", x.iter().copied())?;
    let norm2: f64 = x.iter().map(|v| v * v).sum();
    if norm2 == 0.0 {
        return Err(Error::InvalidArgument("x must be nonzero".into()));
    }
    // Relative slack so that exact ties are not lost to rounding.
    let threshold = 0.5 * norm2 * (1.0 - 1e-12);
    let hit = |signs: &dyn Fn(usize) -> bool| {
        let s: f64 = x
            .iter()
            .enumerate()
            .map(|(j, v)| if signs(j) { *v } else { -*v })
            .sum();
        s * s >= threshold
    };
    match cfg.mode {
        RademacherMode::Exact => {
            if cfg.n > EXACT_MAX {
                return Err(Error::TooLarge(format!("{} signs for exact enumeration", cfg.n)));
            }
            let total = 1u64 << cfg.n;
            let count: u64 = (0..total)
                .into_par_iter()
                .filter(|&mask| hit(&|j| mask >> j & 1 == 1))
                .count() as u64;
            let probability = count as f64 / total as f64;
            Ok(KhintchineResult {
                probability,
                stderr: 0.0,
                pass: probability >= KHINTCHINE_BOUND,
            })
        }
        RademacherMode::MonteCarlo { seed, samples } => {
            if samples == 0 {
                return Err(Error::InvalidArgument("samples must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut count = 0usize;
            let mut signs = vec![false; cfg.n];
            for _ in 0..samples {
                for s in signs.iter_mut() {
                    *s = rng.random::<bool>();
                }
                if hit(&|j| signs[j]) {
                    count += 1;
                }
            }
            let p = count as f64 / samples as f64;
            let stderr = (p * (1.0 - p) / samples as f64).sqrt();
            Ok(KhintchineResult {
                probability: p,
                stderr,
                pass: p >= KHINTCHINE_BOUND - 3.0 * stderr,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PaleyZygmund {
    /// `P(Y > θE[Y])`.
    pub lhs: f64,
    /// `(1 − θ)² E[Y]² / E[Y²]`.
    pub rhs: f64,
    pub pass: bool,
}

/// Both sides of Paley–Zygmund for `Y` taking `values[k]` with
/// probability `probs[k]`.
pub fn paley_zygmund_check(values: &[f64], probs: &[f64], theta: f64) -> Result<PaleyZygmund> {
    if values.len() != probs.len() || values.is_empty() {
        return Err(Error::InvalidArgument(
            "values and probabilities must be non-empty and of equal length".into(),
        ));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::InvalidArgument(format!("theta = {theta} outside [0, 1]")));
    }
    if values.iter().chain(probs).any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidArgument(
            "values and probabilities must be finite and non-negative".into(),
        ));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("probabilities sum to {total}")));
    }
    let mean: f64 = values.iter().zip(probs).map(|(v, p)| v * p).sum();
    let second: f64 = values.iter().zip(probs).map(|(v, p)| v * v * p).sum();
    if !(second > 0.0) {
        return Err(Error::InvalidArgument("E[Y²] must be positive".into()));
    }
    let cut = theta * mean;
    let lhs: f64 = values
        .iter()
        .zip(probs)
        .filter(|(v, _)| **v > cut)
        .map(|(_, p)| p)
        .sum();
    let rhs = (1.0 - theta).powi(2) * mean * mean / second;
    Ok(PaleyZygmund {
        lhs,
        rhs,
        pass: lhs >= rhs - 1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullTailReport {
    pub tuples: usize,
    pub lambdas: Vec<f64>,
    pub bounds: Vec<f64>,
    /// Largest observed tail mass per `λ`.
    pub worst_tail: Vec<f64>,
    /// `min (C(λ) − tail)` over tuples and `λ`.
    pub worst_margin: f64,
    pub violations: usize,
    pub seed: u64,
    pub pass: bool,
}

/// Default `λ` grid for [`hull_tail_check`]: the profile grid itself.
pub fn hull_tail_lambdas(p: &SaddleProblem<'_>) -> Vec<f64> {
    let max_row = p.map().row_norms().into_iter().fold(0.0, f64::max);
    default_lambda_grid(max_row)
}

/// Sample tuples `(ξ₁..ξ_k)`, `k ≤ 5`, `Σ‖ξⱼ‖² = 1`, and compare
/// `m({(Σ|Tξⱼ|²)^{1/2} ≥ λ})` with `C(λ)`.
pub fn hull_tail_check(
    p: &SaddleProblem<'_>,
    tuples: usize,
    seed: u64,
    lambdas: &[f64],
) -> Result<HullTailReport> {
    let space = p.space();
    let map = p.map();
    let max_row = map.row_norms().into_iter().fold(0.0, f64::max);
    let profile = boundedness_profile(map, space, &default_lambda_grid(max_row))?;
    let bounds = lambdas
        .iter()
        .map(|&l| c_lambda_extend(&profile, l))
        .collect::<Result<Vec<_>>>()?;
    let d = map.cols();
    let n = space.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_tail = vec![0.0f64; lambdas.len()];
    let mut worst_margin = f64::INFINITY;
    let mut violations = 0;
    for _ in 0..tuples {
        let k = rng.random_range(1..=5usize);
        let xs: Vec<DVector<f64>> = (0..k)
            .map(|_| DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let total: f64 = xs.iter().map(|x| x.norm_squared()).sum::<f64>().sqrt();
        if total == 0.0 {
            continue;
        }
        let mut square = vec![0.0; n];
        for x in &xs {
            for (s, v) in square.iter_mut().zip(map.apply(&(x / total))) {
                *s += v * v;
            }
        }
        let root: Vec<f64> = square.iter().map(|s| s.sqrt()).collect();
        for (li, &l) in lambdas.iter().enumerate() {
            // A probability; rounding in the sum must not push it past 1.
            let tail = root
                .iter()
                .zip(space.weights())
                .filter(|(r, _)| **r >= l)
                .map(|(_, m)| m)
                .sum::<f64>()
                .min(1.0);
            worst_tail[li] = worst_tail[li].max(tail);
            let margin = bounds[li] - tail;
            worst_margin = worst_margin.min(margin);
            if margin < 0.0 {
                violations += 1;
            }
        }
    }
    Ok(HullTailReport {
        tuples,
        lambdas: lambdas.to_vec(),
        bounds,
        worst_tail,
        worst_margin,
        violations,
        seed,
        pass: violations == 0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianDemo {
    /// Sample mean of `cos⟨x,ξ⟩`.
    pub estimate: f64,
    /// Sample mean of `sin⟨x,ξ⟩`; zero in expectation.
    pub estimate_imag: f64,
    pub target: f64,
    pub stderr: f64,
    pub pass: bool,
}

/// Monte Carlo estimate of `E[e^{i⟨x,ξ⟩}]` for `x ~ N(0, ½I)`, whose exact
/// value is `e^{−‖ξ‖²/4}`.
pub fn gaussian_pdf_demo(xi: &[f64], samples: usize, seed: u64) -> Result<GaussianDemo> {
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!("{samples} samples (at least 1000)")));
    }
    crate::linalg::check_finite("xi", xi.iter().copied())?;
    let normal = Normal::new(0.0, std::f64::consts::FRAC_1_SQRT_2)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum2, mut sum_im) = (0.0, 0.0, 0.0);
    for _ in 0..samples {
        let dot: f64 = xi.iter().map(|v| v * normal.sample(&mut rng)).sum();
        let c = dot.cos();
        sum += c;
        sum2 += c * c;
        sum_im += dot.sin();
    }
    let n = samples as f64;
    let estimate = sum / n;
    let var = ((sum2 - n * estimate * estimate) / (n - 1.0)).max(0.0);
    let stderr = (var / n).sqrt();
    let target = (-xi.iter().map(|v| v * v).sum::<f64>() / 4.0).exp();
    Ok(GaussianDemo {
        estimate,
        estimate_imag: sum_im / n,
        target,
        stderr,
        pass: (estimate - target).abs() <= 3.0 * stderr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RearrangementSuite {
    pub cases: usize,
    pub violations: usize,
    pub pass: bool,
}

/// Random vectors on random spaces: `m(|φ| > φ*(t)) ≤ t`, `φ*` and the tail
/// are non-increasing, and `φ*(t)` is the least such level among the values.
pub fn rearrangement_suite(cases: usize, seed: u64) -> Result<RearrangementSuite> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    for _ in 0..cases {
        let n = rng.random_range(1..=12usize);
        let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
        let total: f64 = raw.iter().sum();
        let space = match FiniteProbSpace::new(raw.iter().map(|w| w / total).collect()) {
            Ok(s) => s,
            Err(_) => FiniteProbSpace::uniform(n)?,
        };
        // Repeated values exercise the level merging.
        let phi = L0Vector::new(
            (0..n)
                .map(|_| (rng.random_range(-4..=4i32)) as f64 * 0.5)
                .collect(),
        );
        let mut prev_star = f64::INFINITY;
        let mut prev_tail = f64::INFINITY;
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let star = rearrangement(&phi, &space, t)?;
            let tail = tail_measure(&phi, &space, star)?;
            let ok_defn = tail <= t + 1e-12;
            let below = phi
                .values
                .iter()
                .map(|v| v.abs())
                .filter(|&v| v < star)
                .map(|v| tail_measure(&phi, &space, v))
                .collect::<Result<Vec<_>>>()?;
            let ok_least = below.iter().all(|&m| m > t);
            let lam = t * 2.0;
            let tl = tail_measure(&phi, &space, lam)?;
            let ok_mono = star <= prev_star && tl <= prev_tail;
            prev_star = star;
            prev_tail = tl;
            if !(ok_defn && ok_least && ok_mono) {
                violations += 1;
            }
        }
    }
    Ok(RearrangementSuite {
        cases,
        violations,
        pass: violations == 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_model::{EquivariantMap, GroupSystem};
    use nalgebra::DMatrix;

    fn exact(n: usize) -> RademacherConfig {
        RademacherConfig {
            n,
            mode: RademacherMode::Exact,
        }
    }

    #[test]
    fn khintchine_examples() {
        assert_eq!(khintchine_check(&[1.0], &exact(1)).unwrap().probability, 1.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(khintchine_check(&[h, h], &exact(2)).unwrap().probability, 0.5);
        let r = khintchine_check(&[1.0; 12], &exact(12)).unwrap();
        assert!(r.pass && r.probability >= 1.0 / 12.0);
        assert!(khintchine_check(&[0.0, 0.0], &exact(2)).is_err());
    }

    #[test]
    fn khintchine_monte_carlo_agrees() {
        let x = [1.0, 2.0, 0.5, 0.25, 3.0];
        let e = khintchine_check(&x, &exact(5)).unwrap().probability;
        let cfg = RademacherConfig {
            n: 5,
            mode: RademacherMode::MonteCarlo {
                seed: 3,
                samples: 20_000,
            },
        };
        let mc = khintchine_check(&x, &cfg).unwrap();
        assert!((mc.probability - e).abs() <= 5.0 * mc.stderr.max(1e-3));
    }

    #[test]
    fn paley_zygmund_examples() {
        let r = paley_zygmund_check(&[0.0, 2.0], &[0.5, 0.5], 0.5).unwrap();
        assert_eq!((r.lhs, r.rhs, r.pass), (0.5, 0.125, true));
        let r = paley_zygmund_check(&[3.0], &[1.0], 0.5).unwrap();
        assert_eq!((r.lhs, r.rhs), (1.0, 0.25));
        assert_eq!(paley_zygmund_check(&[1.0, 5.0], &[0.5, 0.5], 1.0).unwrap().rhs, 0.0);
        assert!(paley_zygmund_check(&[-1.0], &[1.0], 0.5).is_err());
        assert!(paley_zygmund_check(&[0.0], &[1.0], 0.5).is_err());
    }

    #[test]
    fn gaussian_examples() {
        let r = gaussian_pdf_demo(&[0.0, 0.0], 1000, 1).unwrap();
        assert_eq!((r.estimate, r.target, r.stderr), (1.0, 1.0, 0.0));
        assert!(r.pass);
        let r = gaussian_pdf_demo(&[2.0], 1000, 1).unwrap();
        assert!((r.target - (-1.0f64).exp()).abs() < 1e-15);
        assert!(gaussian_pdf_demo(&[1.0], 10, 1).is_err());
    }

    #[test]
    fn hull_tail_identity() {
        let s = FiniteProbSpace::uniform(2).unwrap();
        let g = GroupSystem::trivial(2, 2);
        let t = EquivariantMap::new(DMatrix::identity(2, 2));
        let p = SaddleProblem::new(&s, &g, &t, 1.0).unwrap();
        let r = hull_tail_check(&p, 200, 5, &[2.0]).unwrap();
        assert_eq!(r.worst_tail, vec![0.0]);
        assert!(r.pass);
        let r = hull_tail_check(&p, 200, 5, &hull_tail_lambdas(&p)).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn rearrangement_suite_passes() {
        assert!(rearrangement_suite(200, 9).unwrap().pass);
    }
}
