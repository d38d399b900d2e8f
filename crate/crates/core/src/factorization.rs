//! The equivariant factorization pipeline: an `ε`-schedule of minimax
//! solves, the level sets `S(ε) = {φ₀ ≥ ½}`, their constants `C_ε`, and the
//! assembled weight `φ = Σ k_j 1_{S(1/j)}` with
//! `∫ φ |Tξ|² dm ≤ ‖ξ‖²`.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_model::{push_forward, uniform_bound, EquivariantMap, GroupSystem};
use crate::linalg::{lambda_max, min_singular_value, spectral_norm, symmetrize};
use crate::measure_space::{
    boundedness_profile, default_lambda_grid, k_of_t, rearrangement, BoundednessProfile,
    FiniteProbSpace, KValue, L0Vector,
};
use crate::minimax_solver::{
    invariance_residual, solve_saddle, SaddleProblem, SaddleSolution, SolverOptions, TraceRow,
};

/// Floor applied to a vanishing level constant.
pub const C_FLOOR: f64 = 1e-12;
/// Relative smallest singular value below which `√φ⊙T` counts as singular.
pub const INJECTIVITY_TOL: f64 = 1e-10;
/// Tolerance on `φ₀` and `φ` invariance.
pub const INVARIANCE_TOL: f64 = 1e-8;
/// Relative slack when testing witnesses against the envelope level.
pub const ENVELOPE_SLACK: f64 = 1e-12;

/// Whether a claim is backed by an exact or eigenvalue computation, or only
/// by sampling or a truncated group.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClaimKind {
    Certified,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub kind: ClaimKind,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Certificate {
    pub fn at_most(name: impl Into<String>, kind: ClaimKind, value: f64, threshold: f64) -> Self {
        Certificate {
            name: name.into(),
            kind,
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, kind: ClaimKind, value: f64, threshold: f64) -> Self {
        Certificate {
            name: name.into(),
            kind,
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

/// `{i : φ₀_i ≥ ½}`.
pub fn level_set(phi0: &L0Vector) -> Result<Vec<usize>> {
    if phi0.values.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::InvalidArgument("phi0 must lie in [0, 1]".into()));
    }
    Ok((0..phi0.len()).filter(|&i| phi0.values[i] >= 0.5).collect())
}

/// `C(λ) = min(1, max(1/λ, 24·C′(√(λ/96))))`.
pub fn c_lambda_extend(profile: &BoundednessProfile, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} must be positive")));
    }
    let inner = 24.0 * profile.eval((lambda / 96.0).sqrt());
    Ok(lambda.recip().max(inner).min(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CEps {
    /// `λ_max(Tᵀ diag(m⊙1_S) T)`.
    pub tight: f64,
    /// `2·K(ε/2)²·‖π‖²`.
    pub analytic_bound: f64,
    pub k: KValue,
    pub pi_norm: f64,
    pub tight_within_analytic_bound: bool,
}

fn weighted_form(map: &EquivariantMap, space: &FiniteProbSpace, phi: &[f64]) -> DMatrix<f64> {
    let t = map.matrix();
    let w = space.weights();
    let scaled = DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| w[i] * phi[i] * t[(i, j)]);
    symmetrize(&(t.transpose() * scaled))
}

/// Tight level constant, compared against the bound from the
/// boundedness-in-measure profile.
pub fn certify_c_eps(
    p: &SaddleProblem<'_>,
    s_set: &[usize],
    profile: &BoundednessProfile,
) -> Result<CEps> {
    let n = p.space().len();
    let mut indicator = vec![0.0; n];
    for &i in s_set {
        if i >= n {
            return Err(Error::InvalidArgument(format!("atom {i} out of range")));
        }
        indicator[i] = 1.0;
    }
    let tight = if s_set.is_empty() {
        0.0
    } else {
        lambda_max(&weighted_form(p.map(), p.space(), &indicator)).max(0.0)
    };
    let k = k_of_t(profile, (p.eps() / 2.0).min(1.0))?;
    let pi_norm = uniform_bound(p.group()).value;
    let analytic_bound = 2.0 * k.value * k.value * pi_norm * pi_norm;
    Ok(CEps {
        tight,
        analytic_bound,
        k,
        pi_norm,
        tight_within_analytic_bound: tight <= analytic_bound * (1.0 + 1e-12),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightAssembly {
    pub k_coeffs: Vec<f64>,
    pub weight: L0Vector,
    /// Levels whose constant was floored at [`C_FLOOR`].
    pub floored: Vec<bool>,
    /// `Σ k_j C_j` with the floored constants.
    pub normalization: f64,
}

/// `k_j = 2^{-j} / (C_j (1 − 2^{-J}))` and `φ = Σ k_j 1_{S_j}`.
pub fn assemble_weight(c_eps: &[f64], s_sets: &[Vec<usize>], atoms: usize) -> Result<WeightAssembly> {
    let levels = c_eps.len();
    if levels == 0 {
        return Err(Error::InvalidArgument("at least one level is required".into()));
    }
    if s_sets.len() != levels {
        return Err(Error::DimensionMismatch {
            what: "level sets",
            got: s_sets.len(),
            expected: levels,
        });
    }
    let tail = 1.0 - 0.5f64.powi(levels as i32);
    let mut weight = vec![0.0; atoms];
    let mut k_coeffs = Vec::with_capacity(levels);
    let mut floored = Vec::with_capacity(levels);
    let mut normalization = 0.0;
    for (j, (&c, set)) in c_eps.iter().zip(s_sets).enumerate() {
        let low = !(c >= C_FLOOR);
        let c = if low { C_FLOOR } else { c };
        let k = 0.5f64.powi(j as i32 + 1) / (c * tail);
        for &i in set {
            if i >= atoms {
                return Err(Error::InvalidArgument(format!("atom {i} out of range")));
            }
            weight[i] += k;
        }
        normalization += k * c;
        k_coeffs.push(k);
        floored.push(low);
    }
    Ok(WeightAssembly {
        k_coeffs,
        weight: L0Vector::new(weight),
        floored,
        normalization,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FactorizeOptions {
    pub levels: usize,
    pub tol: f64,
    pub solver: SolverOptions,
    /// Random `ξ` for the sampled form of the final inequality.
    pub samples: usize,
    pub seed: u64,
}

impl Default for FactorizeOptions {
    fn default() -> Self {
        FactorizeOptions {
            levels: 8,
            tol: 1e-8,
            solver: SolverOptions::default(),
            samples: 1000,
            seed: 0,
        }
    }
}

/// Diagnostics for one `ε` level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelReport {
    pub eps: f64,
    pub f_star: f64,
    pub lower_bound: f64,
    pub duality_gap: f64,
    pub converged: bool,
    pub iterations: usize,
    pub phi0_invariance_residual: f64,
    pub complement_mass: f64,
    pub c_eps: CEps,
    pub c_floored: bool,
    /// `ρ*(ε/2)` for the pointwise envelope `ρ` of the witness set.
    pub envelope_bound: f64,
    /// Largest `∫_S ψ dm` over the witnesses met by the solver.
    pub witness_level_integral: f64,
    pub witnesses: usize,
    /// Every witness `ψ` has `m({ψ ≤ envelope_bound}) ≥ 1 − ε/2`.
    pub sublevel_sets_feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizationResult {
    pub eps_levels: Vec<f64>,
    pub phi0_per_level: Vec<L0Vector>,
    pub s_sets: Vec<Vec<usize>>,
    pub c_eps: Vec<f64>,
    pub k_coeffs: Vec<f64>,
    pub weight: L0Vector,
    /// `λ_max(Tᵀ diag(m⊙φ) T)`.
    pub bound_certificate: f64,
    pub invariance_residual: f64,
    /// `max_s ‖√φ⊙(Tπ(s)) − P_s(√φ⊙T)‖`.
    pub equivariance_residual: f64,
    pub normalization: f64,
    pub min_singular_value: f64,
    pub injective: bool,
    pub zero_weight_atoms: Vec<usize>,
    pub levels: Vec<LevelReport>,
    pub certificates: Vec<Certificate>,
    pub passed: bool,
    pub failures: Vec<String>,
    /// Solver traces per level, filled when tracing is enabled.
    #[serde(skip)]
    pub traces: Vec<Vec<TraceRow>>,
}

/// Solver traces of every level as CSV.
pub fn trace_csv(result: &FactorizationResult) -> String {
    let mut out = String::from("level,eps,iteration,F,lower_bound,gap\n");
    for (j, rows) in result.traces.iter().enumerate() {
        for r in rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                j + 1,
                result.eps_levels[j],
                r.iteration,
                r.f_value,
                r.lower_bound,
                r.gap
            ));
        }
    }
    out
}

struct Level {
    eps: f64,
    solution: SaddleSolution,
    s_set: Vec<usize>,
    c_eps: CEps,
    envelope_bound: f64,
    witness_level_integral: f64,
    sublevel_sets_feasible: bool,
}

fn solve_level(
    space: &FiniteProbSpace,
    group: &GroupSystem,
    map: &EquivariantMap,
    profile: &BoundednessProfile,
    eps: f64,
    opts: &SolverOptions,
) -> Result<Level> {
    let p = SaddleProblem::new(space, group, map, eps)?;
    let solution = solve_saddle(&p, opts)?;
    let s_set = level_set(&solution.phi0)?;
    let c_eps = certify_c_eps(&p, &s_set, profile)?;

    let envelope = p.pointwise_envelope();
    let envelope_bound = rearrangement(&envelope, space, (eps / 2.0).min(1.0))?;
    // ψ ≤ ρ pointwise with equality along G⁻¹tᵢ, where rounding can put ψᵢ
    // an ulp above ρᵢ.
    let level_cut = envelope_bound * (1.0 + ENVELOPE_SLACK);
    let w = space.weights();
    let mut witness_level_integral: f64 = 0.0;
    let mut sublevel_sets_feasible = true;
    let kappa = p.bset().required_mass();
    for psi in &solution.witnesses {
        let on_s: f64 = s_set.iter().map(|&i| w[i] * psi.values[i]).sum();
        witness_level_integral = witness_level_integral.max(on_s);
        let below: f64 = (0..space.len())
            .filter(|&i| psi.values[i] <= level_cut)
            .map(|i| w[i])
            .sum();
        sublevel_sets_feasible &= below >= kappa;
    }
    Ok(Level {
        eps,
        solution,
        s_set,
        c_eps,
        envelope_bound,
        witness_level_integral,
        sublevel_sets_feasible,
    })
}

/// Run the `ε_j = 1/j` schedule for `j = 1..=J` and certify the assembled
/// weight.
pub fn factorize(
    space: &FiniteProbSpace,
    group: &GroupSystem,
    map: &EquivariantMap,
    opts: &FactorizeOptions,
) -> Result<FactorizationResult> {
    if opts.levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    // Validates dimensions, measure preservation and covariance up front.
    SaddleProblem::new(space, group, map, 1.0)?;
    let max_row = map.row_norms().into_iter().fold(0.0, f64::max);
    let profile = boundedness_profile(map, space, &default_lambda_grid(max_row))?;
    let solver = SolverOptions {
        tol: opts.tol,
        ..opts.solver
    };

    let levels: Vec<Level> = (1..=opts.levels)
        .into_par_iter()
        .map(|j| solve_level(space, group, map, &profile, 1.0 / j as f64, &solver))
        .collect::<Result<_>>()?;

    let n = space.len();
    let c_eps: Vec<f64> = levels.iter().map(|l| l.c_eps.tight).collect();
    let s_sets: Vec<Vec<usize>> = levels.iter().map(|l| l.s_set.clone()).collect();
    let assembly = assemble_weight(&c_eps, &s_sets, n)?;
    let phi = &assembly.weight;

    let form = weighted_form(map, space, &phi.values);
    let bound_certificate = lambda_max(&form);
    let phi_residual = invariance_residual(phi, group);

    let root: Vec<f64> = phi.values.iter().map(|v| v.sqrt()).collect();
    let factored = DMatrix::from_fn(n, map.cols(), |i, j| root[i] * map.matrix()[(i, j)]);
    let mut equivariance_residual: f64 = 0.0;
    for s in 0..group.len() {
        let lhs = &factored * group.rep(s);
        let perm = group.action(s);
        for c in 0..map.cols() {
            let col: Vec<f64> = factored.column(c).iter().copied().collect();
            let moved = push_forward(perm, &col);
            for i in 0..n {
                equivariance_residual = equivariance_residual.max((lhs[(i, c)] - moved[i]).abs());
            }
        }
    }
    let w = space.weights();
    let weighted = DMatrix::from_fn(n, map.cols(), |i, j| w[i].sqrt() * factored[(i, j)]);
    let min_sv = min_singular_value(&weighted);
    let scale = spectral_norm(map.matrix()).max(f64::MIN_POSITIVE);
    let injective = map.cols() <= n && min_sv > INJECTIVITY_TOL * scale;
    let zero_weight_atoms: Vec<usize> = (0..n).filter(|&i| phi.values[i] <= 0.0).collect();

    let group_kind = if group.is_finite() {
        ClaimKind::Certified
    } else {
        ClaimKind::Empirical
    };
    let mut certificates = Vec::new();
    for (j, l) in levels.iter().enumerate() {
        let level = j + 1;
        let complement = complement_mass(&l.s_set, w);
        certificates.push(Certificate::at_most(
            format!("level {level}: complement mass"),
            ClaimKind::Certified,
            complement,
            l.eps,
        ));
        certificates.push(Certificate::at_most(
            format!("level {level}: phi0 invariance"),
            group_kind,
            l.solution.invariance_residual,
            INVARIANCE_TOL,
        ));
        certificates.push(Certificate::at_most(
            format!("level {level}: witness integral over S"),
            ClaimKind::Certified,
            l.witness_level_integral,
            2.0 * l.envelope_bound + opts.tol,
        ));
        certificates.push(Certificate {
            name: format!("level {level}: sublevel indicators in B"),
            kind: ClaimKind::Certified,
            value: if l.sublevel_sets_feasible { 1.0 } else { 0.0 },
            threshold: 1.0,
            pass: l.sublevel_sets_feasible,
        });
    }
    certificates.push(Certificate::at_most(
        "normalization",
        ClaimKind::Certified,
        (assembly.normalization - 1.0).abs(),
        1e-10,
    ));
    certificates.push(Certificate::at_most(
        "bound",
        ClaimKind::Certified,
        bound_certificate,
        1.0 + opts.tol,
    ));
    certificates.push(Certificate::at_most(
        "weight invariance",
        group_kind,
        phi_residual,
        INVARIANCE_TOL,
    ));
    certificates.push(Certificate::at_most(
        "factored map equivariance",
        group_kind,
        equivariance_residual,
        INVARIANCE_TOL,
    ));
    certificates.push(Certificate::at_most(
        "sampled bound",
        ClaimKind::Empirical,
        sampled_bound(&form, opts.samples, opts.seed),
        1.0 + opts.tol,
    ));

    let failures: Vec<String> = certificates
        .iter()
        .filter(|c| !c.pass)
        .map(|c| {
            let rel = if c.value > c.threshold { "exceeds" } else { "is below" };
            format!("{}: {:e} {rel} {:e}", c.name, c.value, c.threshold)
        })
        .collect();

    let level_reports = levels
        .iter()
        .zip(&assembly.floored)
        .map(|(l, &c_floored)| LevelReport {
            eps: l.eps,
            f_star: l.solution.f_star,
            lower_bound: l.solution.lower_bound,
            duality_gap: l.solution.duality_gap,
            converged: l.solution.converged,
            iterations: l.solution.iterations,
            phi0_invariance_residual: l.solution.invariance_residual,
            complement_mass: complement_mass(&l.s_set, w),
            c_eps: l.c_eps.clone(),
            c_floored,
            envelope_bound: l.envelope_bound,
            witness_level_integral: l.witness_level_integral,
            witnesses: l.solution.witnesses.len(),
            sublevel_sets_feasible: l.sublevel_sets_feasible,
        })
        .collect();

    Ok(FactorizationResult {
        eps_levels: levels.iter().map(|l| l.eps).collect(),
        phi0_per_level: levels.iter().map(|l| l.solution.phi0.clone()).collect(),
        s_sets,
        c_eps,
        k_coeffs: assembly.k_coeffs.clone(),
        weight: assembly.weight.clone(),
        bound_certificate,
        invariance_residual: phi_residual,
        equivariance_residual,
        normalization: assembly.normalization,
        min_singular_value: min_sv,
        injective,
        zero_weight_atoms,
        levels: level_reports,
        passed: failures.is_empty(),
        certificates,
        failures,
        traces: levels.iter().map(|l| l.solution.trace.clone()).collect(),
    })
}

/// `m(X∖S)` for a sorted index set `S`.
fn complement_mass(s_set: &[usize], weights: &[f64]) -> f64 {
    let outside: f64 = (0..weights.len())
        .filter(|i| s_set.binary_search(i).is_err())
        .map(|i| weights[i])
        .sum();
    outside + 0.0
}

/// Largest `ξᵀQξ / ‖ξ‖²` over Gaussian samples.
fn sampled_bound(form: &DMatrix<f64>, samples: usize, seed: u64) -> f64 {
    let d = form.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let xi = DVector::from_fn(d, |_, _| StandardNormal.sample(&mut rng));
        let n2 = xi.norm_squared();
        if n2 > 0.0 {
            worst = worst.max(xi.dot(&(form * &xi)) / n2);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant_profile(mass: f64) -> BoundednessProfile {
        BoundednessProfile::new(vec![0.5, 1.0, 2.0], vec![mass; 3], 1.5).unwrap()
    }

    #[test]
    fn level_set_examples() {
        assert_eq!(level_set(&L0Vector::new(vec![0.5, 0.5])).unwrap(), vec![0, 1]);
        assert_eq!(level_set(&L0Vector::new(vec![1.0; 3])).unwrap(), vec![0, 1, 2]);
        assert_eq!(level_set(&L0Vector::new(vec![0.9, 0.1])).unwrap(), vec![0]);
        assert!(level_set(&L0Vector::new(vec![1.5])).is_err());
    }

    #[test]
    fn c_lambda_examples() {
        let zero = BoundednessProfile::new(vec![0.01, 1.0], vec![0.0, 0.0], 0.0).unwrap();
        assert!((c_lambda_extend(&zero, 10.0).unwrap() - 0.1).abs() < 1e-15);
        let one = constant_profile(1.0);
        assert_eq!(c_lambda_extend(&one, 96.0).unwrap(), 1.0);
        assert!(c_lambda_extend(&zero, 1e9).unwrap() <= 1e-9);
        assert!(c_lambda_extend(&zero, 0.0).is_err());
    }

    #[test]
    fn assemble_single_level() {
        let a = assemble_weight(&[4.0], &[vec![0, 2]], 3).unwrap();
        assert!((a.k_coeffs[0] - 0.25).abs() < 1e-15);
        assert_eq!(a.weight.values, vec![0.25, 0.0, 0.25]);
        assert!((a.normalization - 1.0).abs() < 1e-15);
    }

    #[test]
    fn assemble_equal_levels_telescopes() {
        let sets = vec![vec![0, 1]; 5];
        let a = assemble_weight(&[2.0; 5], &sets, 2).unwrap();
        for v in &a.weight.values {
            assert!((v - 0.5).abs() < 1e-14);
        }
        assert!((a.normalization - 1.0).abs() < 1e-14);
    }

    #[test]
    fn assemble_floors_vanishing_constant() {
        let a = assemble_weight(&[0.0, 1.0], &[vec![0], vec![0]], 1).unwrap();
        assert_eq!(a.floored, vec![true, false]);
        assert!(a.k_coeffs[0].is_finite());
    }

    fn identity2() -> (FiniteProbSpace, GroupSystem, EquivariantMap) {
        (
            FiniteProbSpace::uniform(2).unwrap(),
            GroupSystem::trivial(2, 2),
            EquivariantMap::new(DMatrix::identity(2, 2)),
        )
    }

    #[test]
    fn certify_c_eps_examples() {
        let (s, g, t) = identity2();
        let p = SaddleProblem::new(&s, &g, &t, 1.0).unwrap();
        let profile = boundedness_profile(&t, &s, &default_lambda_grid(1.0)).unwrap();
        assert_eq!(certify_c_eps(&p, &[], &profile).unwrap().tight, 0.0);
        let c = certify_c_eps(&p, &[0, 1], &profile).unwrap();
        assert!((c.tight - 0.5).abs() < 1e-15);
        assert!(c.tight_within_analytic_bound);
    }

    #[test]
    fn factorize_identity() {
        let (s, g, t) = identity2();
        let opts = FactorizeOptions {
            levels: 3,
            ..FactorizeOptions::default()
        };
        let r = factorize(&s, &g, &t, &opts).unwrap();
        assert!(r.passed, "{:?}", r.failures);
        assert!((r.weight.values[0] - r.weight.values[1]).abs() < 1e-15);
        assert!(r.bound_certificate <= 1.0 + 1e-8);
        assert!(r.injective);
    }

    #[test]
    fn factorize_zero_map() {
        let (s, g, _) = identity2();
        let t = EquivariantMap::new(DMatrix::zeros(2, 2));
        let r = factorize(&s, &g, &t, &FactorizeOptions { levels: 2, ..Default::default() }).unwrap();
        assert_eq!(r.bound_certificate, 0.0);
        assert!(r.levels.iter().all(|l| l.c_floored));
        assert!(!r.injective);
    }

    #[test]
    fn factorize_swap_is_invariant() {
        let pi = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, -1.0]);
        let g = GroupSystem::cyclic(2, pi, vec![1, 0]).unwrap();
        let s = FiniteProbSpace::uniform(2).unwrap();
        let t = EquivariantMap::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]));
        let r = factorize(&s, &g, &t, &FactorizeOptions { levels: 4, ..Default::default() }).unwrap();
        assert!(r.passed, "{:?}", r.failures);
        assert_eq!(r.weight.values[0], r.weight.values[1]);
        assert_eq!(r.invariance_residual, 0.0);
    }
}
