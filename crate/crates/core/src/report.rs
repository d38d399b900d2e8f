//! End-to-end pipelines behind the command-line tool and the JSON reports
//! they produce. Reports are deterministic given their inputs apart from
//! the `generated_at` field.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::factorization::{factorize, ClaimKind, FactorizationResult, FactorizeOptions};
use crate::instance::Instance;
use crate::instances::all_bundled;
use crate::minimax_solver::{SaddleProblem, SolverOptions};
use crate::stochastic_verify::{
    gaussian_pdf_demo, hull_tail_check, hull_tail_lambdas, khintchine_check, paley_zygmund_check,
    rearrangement_suite, RademacherConfig, KHINTCHINE_BOUND,
};
use crate::unitarization::{dixmier_average_oracle, invariant_form, unitarize_form, InnerProductForm};

/// Flags shared by the instance commands; `None` falls back to the
/// instance file and then to the library defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunFlags {
    pub levels: Option<usize>,
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub trace: bool,
}

pub fn resolve_options(inst: &Instance, flags: &RunFlags) -> Result<FactorizeOptions> {
    let d = FactorizeOptions::default();
    let tol = flags.tol.or(inst.options.tol).unwrap_or(d.tol);
    let levels = flags.levels.or(inst.options.levels).unwrap_or(d.levels);
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    if levels == 0 {
        return Err(Error::InvalidArgument("levels must be at least 1".into()));
    }
    Ok(FactorizeOptions {
        levels,
        tol,
        solver: SolverOptions {
            tol,
            max_iter: inst.options.max_iter.unwrap_or(d.solver.max_iter),
            trace: flags.trace,
            ..d.solver
        },
        samples: flags.samples.unwrap_or(d.samples),
        seed: flags.seed.or(inst.options.seed).unwrap_or(d.seed),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorizeReport {
    pub command: String,
    pub instance: String,
    pub generated_at: u64,
    pub options: FactorizeOptions,
    pub group_order: usize,
    pub group_kind: ClaimKind,
    pub result: FactorizationResult,
    pub passed: bool,
}

pub fn run_factorize(inst: &Instance, flags: &RunFlags, generated_at: u64) -> Result<FactorizeReport> {
    let options = resolve_options(inst, flags)?;
    let result = factorize(&inst.space, &inst.group, &inst.map, &options)?;
    Ok(FactorizeReport {
        command: "factorize".into(),
        instance: inst.name.clone(),
        generated_at,
        options,
        group_order: inst.group.len(),
        group_kind: group_kind(inst),
        passed: result.passed,
        result,
    })
}

fn group_kind(inst: &Instance) -> ClaimKind {
    if inst.group.is_finite() {
        ClaimKind::Certified
    } else {
        ClaimKind::Empirical
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    CertificateFailure,
    NonInjective,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::CertificateFailure => 1,
            Outcome::NonInjective => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitarizeReport {
    pub command: String,
    pub instance: String,
    pub generated_at: u64,
    pub options: FactorizeOptions,
    pub complex: bool,
    pub factorization_passed: bool,
    pub factorization_failures: Vec<String>,
    pub bound_certificate: f64,
    pub weight: Vec<f64>,
    pub injective: bool,
    pub min_singular_value: f64,
    /// `max_s ‖π(s)ᵀGᵣπ(s) − Gᵣ‖` of the real form before complexification.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub real_form_residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub factorization_route: Option<InnerProductForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_route: Option<InnerProductForm>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_skipped: Option<String>,
    pub outcome: Outcome,
}

/// Factorize, build the invariant form, unitarize, and optionally cross-check
/// against direct averaging.
pub fn run_unitarize(
    inst: &Instance,
    flags: &RunFlags,
    oracle: bool,
    generated_at: u64,
) -> Result<(UnitarizeReport, FactorizationResult)> {
    let options = resolve_options(inst, flags)?;
    let fr = factorize(&inst.space, &inst.group, &inst.map, &options)?;
    let j = inst.complex_structure.as_ref();
    let mut report = UnitarizeReport {
        command: "unitarize".into(),
        instance: inst.name.clone(),
        generated_at,
        options,
        complex: j.is_some(),
        factorization_passed: fr.passed,
        factorization_failures: fr.failures.clone(),
        bound_certificate: fr.bound_certificate,
        weight: fr.weight.values.clone(),
        injective: fr.injective,
        min_singular_value: fr.min_singular_value,
        real_form_residual: None,
        factorization_route: None,
        oracle_route: None,
        oracle_skipped: None,
        outcome: Outcome::NonInjective,
    };
    if !fr.injective {
        return Ok((report, fr));
    }
    let form = match invariant_form(&fr, &inst.space, &inst.group, &inst.map) {
        Ok(f) => f,
        Err(Error::NotPositiveDefinite { .. }) => {
            report.injective = false;
            return Ok((report, fr));
        }
        Err(e) => return Err(e),
    };
    report.real_form_residual = Some(form.residual);
    let route = unitarize_form("factorization", &form.gram, &inst.group, j, options.tol)?;
    let mut passed = fr.passed && route.pass;
    report.factorization_route = Some(route);
    if oracle {
        match dixmier_average_oracle(&inst.group) {
            Ok(avg) => {
                let o = unitarize_form("group_average", &avg, &inst.group, j, options.tol)?;
                passed &= o.pass;
                report.oracle_route = Some(o);
            }
            Err(e) => report.oracle_skipped = Some(e.to_string()),
        }
    }
    report.outcome = if passed {
        Outcome::Pass
    } else {
        Outcome::CertificateFailure
    };
    Ok((report, fr))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Monte Carlo samples for the Gaussian demo and for Khintchine vectors
    /// beyond `exact_max`.
    pub samples: usize,
    pub exact_max: usize,
    pub vectors: usize,
    pub distributions: usize,
    pub tuples: usize,
    pub gaussian_seeds: usize,
    pub rearrangement_cases: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            samples: 100_000,
            exact_max: 14,
            vectors: 500,
            distributions: 500,
            tuples: 1000,
            gaussian_seeds: 20,
            rearrangement_cases: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub kind: ClaimKind,
    pub cases: usize,
    pub violations: usize,
    /// What `value` measures for this check.
    pub statistic: String,
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianCase {
    pub xi: Vec<f64>,
    pub seed: u64,
    pub estimate: f64,
    pub target: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullTailSummary {
    pub instance: String,
    pub worst_margin: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub command: String,
    pub generated_at: u64,
    pub options: VerifyOptions,
    pub checks: Vec<CheckSummary>,
    pub hull_tails: Vec<HullTailSummary>,
    pub gaussian: Vec<GaussianCase>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn first_failure(&self) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| !c.pass)
    }
}

/// The ten `ξ` used by the Gaussian check, with norms from 0 to 3.
pub fn gaussian_xis() -> Vec<Vec<f64>> {
    vec![
        vec![0.0],
        vec![0.25],
        vec![0.3, -0.4],
        vec![0.6, 0.0, 0.8],
        vec![1.0, 1.0],
        vec![2.0],
        vec![1.2, -0.9, 0.5, 1.0],
        vec![-1.5, 1.5, 0.5],
        vec![2.0, 1.0, 1.0, 1.0, 0.5],
        vec![3.0],
    ]
}

/// Random Khintchine test vectors: Gaussian, equal-coordinate, and sparse
/// with one dominant entry.
fn khintchine_corpus(count: usize, max_n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    (0..count)
        .map(|k| {
            let n = rng.random_range(1..=max_n);
            match k % 3 {
                0 => (0..n).map(|_| StandardNormal.sample(rng)).collect(),
                1 => vec![1.0; n],
                _ => (0..n)
                    .map(|j| if j == 0 { 5.0 } else { rng.random::<f64>() * 0.1 })
                    .collect(),
            }
        })
        .map(|mut x: Vec<f64>| {
            if x.iter().all(|v| *v == 0.0) {
                x[0] = 1.0;
            }
            x
        })
        .collect()
}

fn pz_corpus(count: usize, rng: &mut ChaCha8Rng) -> Vec<(Vec<f64>, Vec<f64>, f64)> {
    (0..count)
        .map(|_| {
            let k = rng.random_range(1..=10usize);
            let mut values: Vec<f64> = (0..k)
                .map(|_| {
                    if rng.random::<f64>() < 0.2 {
                        0.0
                    } else {
                        rng.random::<f64>() * 10.0
                    }
                })
                .collect();
            if values.iter().all(|v| *v == 0.0) {
                values[0] = 1.0;
            }
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = raw.iter().sum();
            let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
            let rest: f64 = probs[..k - 1].iter().sum();
            probs[k - 1] = (1.0 - rest).max(0.0);
            (values, probs, rng.random::<f64>())
        })
        .collect()
}

/// The full lemma suite.
pub fn run_verify(opts: &VerifyOptions, generated_at: u64) -> Result<VerifyReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut checks = Vec::new();

    let rs = rearrangement_suite(opts.rearrangement_cases, opts.seed)?;
    checks.push(CheckSummary {
        name: "rearrangement and tail".into(),
        kind: ClaimKind::Certified,
        cases: rs.cases,
        violations: rs.violations,
        statistic: "violations".into(),
        value: rs.violations as f64,
        pass: rs.pass,
    });

    let corpus = khintchine_corpus(opts.vectors, 14, &mut rng);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    let mut all_exact = true;
    for (k, x) in corpus.iter().enumerate() {
        let cfg = RademacherConfig::auto(x.len(), opts.exact_max, opts.seed.wrapping_add(k as u64), opts.samples);
        all_exact &= matches!(cfg.mode, crate::stochastic_verify::RademacherMode::Exact);
        let r = khintchine_check(x, &cfg)?;
        worst = worst.min(r.probability - KHINTCHINE_BOUND);
        if !r.pass {
            violations += 1;
        }
    }
    checks.push(CheckSummary {
        name: "khintchine".into(),
        kind: if all_exact { ClaimKind::Certified } else { ClaimKind::Empirical },
        cases: corpus.len(),
        violations,
        statistic: "min probability minus 1/12".into(),
        value: worst,
        pass: violations == 0,
    });

    let corpus = pz_corpus(opts.distributions, &mut rng);
    let mut worst = f64::INFINITY;
    let mut violations = 0;
    for (values, probs, theta) in &corpus {
        let r = paley_zygmund_check(values, probs, *theta)?;
        worst = worst.min(r.lhs - r.rhs);
        if !r.pass {
            violations += 1;
        }
    }
    checks.push(CheckSummary {
        name: "paley-zygmund".into(),
        kind: ClaimKind::Certified,
        cases: corpus.len(),
        violations,
        statistic: "min lhs minus rhs".into(),
        value: worst,
        pass: violations == 0,
    });

    let instances = all_bundled().map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let mut hull_tails = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        let p = SaddleProblem::new(&inst.space, &inst.group, &inst.map, 1.0)?;
        let r = hull_tail_check(&p, opts.tuples, opts.seed.wrapping_add(k as u64), &hull_tail_lambdas(&p))?;
        hull_tails.push(HullTailSummary {
            instance: inst.name.clone(),
            worst_margin: r.worst_margin,
            violations: r.violations,
        });
    }
    let violations: usize = hull_tails.iter().map(|h| h.violations).sum();
    checks.push(CheckSummary {
        name: "hull tail".into(),
        kind: ClaimKind::Empirical,
        cases: hull_tails.len() * opts.tuples,
        violations,
        statistic: "min margin C(lambda) minus tail".into(),
        value: hull_tails.iter().map(|h| h.worst_margin).fold(f64::INFINITY, f64::min),
        pass: violations == 0,
    });

    let jobs: Vec<(Vec<f64>, u64)> = gaussian_xis()
        .into_iter()
        .flat_map(|xi| (0..opts.gaussian_seeds as u64).map(move |s| (xi.clone(), opts.seed.wrapping_add(s))))
        .collect();
    let gaussian = jobs
        .par_iter()
        .map(|(xi, seed)| {
            gaussian_pdf_demo(xi, opts.samples, *seed).map(|g| GaussianCase {
                xi: xi.clone(),
                seed: *seed,
                estimate: g.estimate,
                target: g.target,
                stderr: g.stderr,
                pass: g.pass,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let violations = gaussian.iter().filter(|g| !g.pass).count();
    let worst_z = gaussian
        .iter()
        .filter(|g| g.stderr > 0.0)
        .map(|g| (g.estimate - g.target).abs() / g.stderr)
        .fold(0.0, f64::max);
    checks.push(CheckSummary {
        name: "gaussian characteristic function".into(),
        kind: ClaimKind::Empirical,
        cases: gaussian.len(),
        violations,
        statistic: "max |estimate - target| / stderr".into(),
        value: worst_z,
        pass: violations == 0,
    });

    Ok(VerifyReport {
        command: "verify".into(),
        generated_at,
        options: *opts,
        passed: checks.iter().all(|c| c.pass),
        checks,
        hull_tails,
        gaussian,
    })
}

/// Serialize a report with `generated_at` removed, for byte comparisons.
pub fn without_timestamp<T: Serialize>(report: &T) -> Result<String> {
    let mut v = serde_json::to_value(report).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    if let Some(obj) = v.as_object_mut() {
        obj.remove("generated_at");
    }
    serde_json::to_string_pretty(&v).map_err(|e| Error::InvalidArgument(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::bundled;

    #[test]
    fn gaussian_xis_span_norms() {
        let norms: Vec<f64> = gaussian_xis()
            .iter()
            .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        assert_eq!(norms.len(), 10);
        assert_eq!(norms[0], 0.0);
        assert!(norms.iter().any(|&n| (n - 2.0).abs() < 1e-12));
    }

    #[test]
    fn unitarize_worked_example() {
        let inst = bundled("z2_worked").unwrap().unwrap();
        let (r, _) = run_unitarize(&inst, &RunFlags::default(), true, 0).unwrap();
        assert_eq!(r.outcome, Outcome::Pass);
        let oracle = r.oracle_route.unwrap();
        assert_eq!(oracle.gram_real.re, vec![vec![1.0, 0.5], vec![0.5, 1.5]]);
        assert!(oracle.dixmier.invariance_residual <= 1e-12);
    }

    #[test]
    fn flags_override_instance_options() {
        let inst = bundled("identity2").unwrap().unwrap();
        let flags = RunFlags {
            levels: Some(3),
            tol: Some(1e-6),
            ..RunFlags::default()
        };
        let o = resolve_options(&inst, &flags).unwrap();
        assert_eq!((o.levels, o.tol, o.solver.tol), (3, 1e-6, 1e-6));
    }

    #[test]
    fn timestamp_is_stripped() {
        let inst = bundled("identity2").unwrap().unwrap();
        let a = run_factorize(&inst, &RunFlags::default(), 1).unwrap();
        let b = run_factorize(&inst, &RunFlags::default(), 2).unwrap();
        assert_eq!(without_timestamp(&a).unwrap(), without_timestamp(&b).unwrap());
        assert!(!without_timestamp(&a).unwrap().contains("generated_at"));
    }
}
