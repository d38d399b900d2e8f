//! Convex minimax over the set
//! `B = {0 ≤ φ ≤ 1, ∫φ dm ≥ 1 − ε/2}` of
//! `F(φ) = sup_{ψ ∈ A′} ∫ψφ dm`, where `A′` is the convex hull of
//! `|Tξ|²` over `ξᵀGξ ≤ 1` and `G` is the group-averaged Gram matrix.
//!
//! Because the supremum of a quadratic form over an ellipsoid is an
//! eigenvalue, `F(φ) = λ_max(G^{-1/2} Tᵀ diag(m⊙φ) T G^{-1/2})`.
//!
//! The primal is solved by Kelley's cutting-plane method: every evaluated
//! top eigenvector `u` contributes a valid linear minorant
//! `F(φ) ≥ Σ m_i ψ_i φ_i` with `ψ = |TG^{-1/2}u|²`. The lower bound is the
//! best value of `min_{φ∈B} ∫ψ̄φ dm` over convex combinations `ψ̄` of the
//! collected witnesses, obtained from the dual of the cutting-plane master
//! problem and then re-evaluated exactly by the greedy inner minimization.
//! Every reported gap is therefore an honest duality gap.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_model::{averaged_gram, push_forward, EquivariantMap, GroupSystem};
use crate::linalg::{lambda_max, psd_sqrt_pair, sorted_eigen, symmetrize};
use crate::measure_space::{FiniteProbSpace, L0Vector};

/// Covariance residual accepted when building a problem.
pub const COVARIANCE_TOL: f64 = 1e-10;

/// Objective scaling applied inside the LP solver, whose optimality
/// tolerance is absolute.
const LP_SCALE: f64 = 1e4;
/// Relative eigenvalue window treated as the top cluster.
const CLUSTER_WINDOW: f64 = 1e-2;
const MAX_CLUSTER: usize = 4;

/// The constraint set `B` for a fixed `ε`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BSet {
    eps: f64,
}

impl BSet {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be ≥ 0")));
        }
        Ok(BSet { eps })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// `1 − ε/2`.
    pub fn required_mass(&self) -> f64 {
        1.0 - self.eps / 2.0
    }

    pub fn contains(&self, phi: &L0Vector, space: &FiniteProbSpace) -> bool {
        phi.len() == space.len()
            && phi.values.iter().all(|&x| (0.0..=1.0).contains(&x))
            && space.integrate(&phi.values) >= self.required_mass()
    }
}

/// `min_{φ∈B} ∫ψφ dm` by filling the atoms with smallest `ψ` first.
pub fn inner_min(psi: &L0Vector, b: &BSet, space: &FiniteProbSpace) -> Result<(f64, L0Vector)> {
    space.check("psi", psi.len())?;
    if psi.values.iter().any(|&x| !(x >= 0.0)) {
        return Err(Error::InvalidArgument("psi must be non-negative".into()));
    }
    let n = psi.len();
    let mut phi = vec![0.0; n];
    let mut remaining = b.required_mass();
    if remaining <= 0.0 {
        return Ok((0.0, L0Vector::new(phi)));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &c| psi.values[a].total_cmp(&psi.values[c]).then(a.cmp(&c)));
    let w = space.weights();
    for i in order {
        if remaining <= 0.0 {
            break;
        }
        if w[i] <= remaining {
            phi[i] = 1.0;
            remaining -= w[i];
        } else {
            phi[i] = remaining / w[i];
            remaining = 0.0;
        }
    }
    let value = (0..n).map(|i| w[i] * psi.values[i] * phi[i]).sum();
    Ok((value, L0Vector::new(phi)))
}

/// Projection onto `B` in `L²(X, m)`: `x_i = clip(φ_i + μ, 0, 1)` with the
/// smallest `μ ≥ 0` meeting the mass constraint.
pub fn project_b(phi: &L0Vector, b: &BSet, space: &FiniteProbSpace) -> Result<L0Vector> {
    space.check("phi", phi.len())?;
    if phi.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("phi"));
    }
    let kappa = b.required_mass();
    let w = space.weights();
    let shifted = |mu: f64| -> Vec<f64> { phi.values.iter().map(|&x| (x + mu).clamp(0.0, 1.0)).collect() };
    let mass = |mu: f64| space.integrate(&shifted(mu));
    if mass(0.0) >= kappa {
        return Ok(L0Vector::new(shifted(0.0)));
    }
    // mass(μ) is piecewise linear with kinks at −φ_i and 1 − φ_i.
    let mut kinks: Vec<f64> = phi
        .values
        .iter()
        .flat_map(|&x| [-x, 1.0 - x])
        .filter(|&k| k > 0.0)
        .collect();
    kinks.sort_by(f64::total_cmp);
    kinks.dedup();
    let mut lo = 0.0;
    let mut mu = *kinks.last().unwrap_or(&1.0);
    for &k in &kinks {
        if mass(k) >= kappa {
            let mid = 0.5 * (lo + k);
            let slope: f64 = phi
                .values
                .iter()
                .zip(w)
                .filter(|(&x, _)| x + mid > 0.0 && x + mid < 1.0)
                .map(|(_, m)| m)
                .sum();
            let base = mass(lo);
            mu = if slope > 0.0 {
                (lo + (kappa - base) / slope).clamp(lo, k)
            } else {
                k
            };
            break;
        }
        lo = k;
    }
    let mut step = f64::EPSILON * mu.max(f64::MIN_POSITIVE);
    while mass(mu) < kappa {
        mu += step;
        step *= 2.0;
    }
    Ok(L0Vector::new(shifted(mu)))
}

/// Orbits of the atoms under the permutation group generated by the stored
/// actions, each listed in increasing order.
pub fn atom_orbits(group: &GroupSystem) -> Vec<Vec<usize>> {
    let n = group.atoms();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for perm in group.actions() {
        for (i, &j) in perm.iter().enumerate() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == usize::MAX {
            slot[r] = orbits.len();
            orbits.push(Vec::new());
        }
        orbits[slot[r]].push(i);
    }
    orbits
}

/// Average of `φ` over the group orbit, `(1/|Γ|) Σ_s P_s φ` for a finite
/// group. Computed as orbit means so that every atom of an orbit receives the
/// bit-identical value.
pub fn symmetrize_orbit(phi: &L0Vector, group: &GroupSystem) -> L0Vector {
    let mut out = phi.values.clone();
    for orbit in atom_orbits(group) {
        let mean = orbit.iter().map(|&i| phi.values[i]).sum::<f64>() / orbit.len() as f64;
        for &i in &orbit {
            out[i] = mean;
        }
    }
    L0Vector::new(out)
}

/// `max_s ‖P_s φ − φ‖_∞`.
pub fn invariance_residual(phi: &L0Vector, group: &GroupSystem) -> f64 {
    group
        .actions()
        .iter()
        .map(|perm| {
            push_forward(perm, &phi.values)
                .iter()
                .zip(&phi.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Data of one minimax instance.
#[derive(Debug, Clone)]
pub struct SaddleProblem<'a> {
    space: &'a FiniteProbSpace,
    group: &'a GroupSystem,
    map: &'a EquivariantMap,
    b: BSet,
    gram: DMatrix<f64>,
    gram_inv_sqrt: DMatrix<f64>,
    /// Rows `a_i = G^{-1/2} t_i`, stored as the `n×d` matrix `T G^{-1/2}`.
    whitened: DMatrix<f64>,
}

impl<'a> SaddleProblem<'a> {
    /// Problem with the group-averaged Gram matrix.
    pub fn new(
        space: &'a FiniteProbSpace,
        group: &'a GroupSystem,
        map: &'a EquivariantMap,
        eps: f64,
    ) -> Result<Self> {
        Self::with_gram(space, group, map, eps, averaged_gram(group))
    }

    pub fn with_gram(
        space: &'a FiniteProbSpace,
        group: &'a GroupSystem,
        map: &'a EquivariantMap,
        eps: f64,
        gram: DMatrix<f64>,
    ) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("eps = {eps} must be positive")));
        }
        space.check("T rows", map.rows())?;
        group.check_measure_preserving(space)?;
        map.check_covariance(group, COVARIANCE_TOL)?;
        crate::linalg::check_finite("T", map.matrix().iter().copied())?;
        let (_, gram_inv_sqrt) = psd_sqrt_pair(&gram)?;
        let whitened = map.matrix() * &gram_inv_sqrt;
        Ok(SaddleProblem {
            space,
            group,
            map,
            b: BSet::new(eps)?,
            gram,
            gram_inv_sqrt,
            whitened,
        })
    }

    pub fn space(&self) -> &'a FiniteProbSpace {
        self.space
    }

    pub fn group(&self) -> &'a GroupSystem {
        self.group
    }

    pub fn map(&self) -> &'a EquivariantMap {
        self.map
    }

    pub fn eps(&self) -> f64 {
        self.b.eps()
    }

    pub fn bset(&self) -> BSet {
        self.b
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    /// `ρ_i = t_iᵀG⁻¹t_i`, the pointwise supremum of `ψ ∈ A′`.
    pub fn pointwise_envelope(&self) -> L0Vector {
        L0Vector::new(
            (0..self.whitened.nrows())
                .map(|i| self.whitened.row(i).norm_squared())
                .collect(),
        )
    }

    fn whitened_form(&self, phi: &[f64]) -> DMatrix<f64> {
        let w = self.space.weights();
        let scaled = DMatrix::from_fn(self.whitened.nrows(), self.whitened.ncols(), |i, j| {
            w[i] * phi[i] * self.whitened[(i, j)]
        });
        symmetrize(&(self.whitened.transpose() * scaled))
    }

    /// `F(φ)` only, through whichever of the `d×d` or `n×n` forms is smaller.
    pub fn f_value(&self, phi: &[f64]) -> f64 {
        let (n, d) = self.whitened.shape();
        if n < d {
            let w = self.space.weights();
            let root: Vec<f64> = (0..n).map(|i| (w[i] * phi[i].max(0.0)).sqrt()).collect();
            let rows = DMatrix::from_fn(n, d, |i, j| root[i] * self.whitened[(i, j)]);
            lambda_max(&symmetrize(&(&rows * rows.transpose())))
        } else {
            lambda_max(&self.whitened_form(phi))
        }
    }

    /// `ψ = |TG^{-1/2}u|²` for a unit vector `u` of the whitened space.
    fn witness_psi(&self, u: &DVector<f64>) -> Vec<f64> {
        (&self.whitened * u).iter().map(|x| x * x).collect()
    }
}

/// Value of `F` at a point together with a maximizing direction.
#[derive(Debug, Clone)]
pub struct FEvaluation {
    pub value: f64,
    /// `ξ` with `ξᵀGξ = 1` attaining the supremum.
    pub witness: DVector<f64>,
    /// `|Tξ|²` for the witness.
    pub witness_psi: L0Vector,
    /// Orthonormal top-cluster eigenvectors in whitened coordinates.
    cluster: Vec<DVector<f64>>,
}

pub fn eval_f(phi: &L0Vector, p: &SaddleProblem<'_>) -> Result<FEvaluation> {
    p.space.check("phi", phi.len())?;
    crate::linalg::check_finite("phi", phi.values.iter().copied())?;
    let form = p.whitened_form(&phi.values);
    let eig = sorted_eigen(&form);
    let value = eig.values[0];
    let window = CLUSTER_WINDOW * value.abs().max(f64::MIN_POSITIVE);
    let cluster: Vec<DVector<f64>> = eig
        .values
        .iter()
        .enumerate()
        .take(MAX_CLUSTER)
        .take_while(|(_, &v)| value - v <= window)
        .map(|(k, _)| eig.vectors.column(k).into_owned())
        .collect();
    let top = cluster[0].clone();
    Ok(FEvaluation {
        value,
        witness: &p.gram_inv_sqrt * &top,
        witness_psi: L0Vector::new(p.witness_psi(&top)),
        cluster,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Iterations of the minimum-norm stage.
    pub min_norm_iter: usize,
    pub trace: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 50_000,
            min_norm_iter: 2_000,
            trace: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub f_value: f64,
    pub lower_bound: f64,
    pub gap: f64,
}

pub fn trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from("iteration,F,lower_bound,gap\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.iteration, r.f_value, r.lower_bound, r.gap
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    /// Symmetrized minimum-norm minimizer.
    pub phi0: L0Vector,
    /// Best primal value `F(φ)` found.
    pub f_star: f64,
    /// Certified lower bound on `min_B F`.
    pub lower_bound: f64,
    pub duality_gap: f64,
    /// `F(φ₀)`.
    pub f_phi0: f64,
    pub invariance_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Witnesses `ψ ∈ A′` met during the solve.
    #[serde(skip)]
    pub witnesses: Vec<L0Vector>,
    #[serde(skip)]
    pub trace: Vec<TraceRow>,
}

struct CuttingPlanes {
    psis: Vec<Vec<f64>>,
}

impl CuttingPlanes {
    fn is_new(&self, psi: &[f64]) -> bool {
        let scale = psi.iter().copied().fold(0.0, f64::max).max(f64::MIN_POSITIVE);
        !self.psis.iter().any(|q| {
            q.iter()
                .zip(psi)
                .all(|(a, b)| (a - b).abs() <= 1e-12 * scale)
        })
    }
}

fn cut_expr(t: Variable, phi: &[Variable], weights: &[f64], psi: &[f64]) -> LinearExpr {
    let mut e = LinearExpr::empty();
    e.add(t, LP_SCALE);
    for (i, &v) in phi.iter().enumerate() {
        let c = weights[i] * psi[i] * LP_SCALE;
        if c != 0.0 {
            e.add(v, -c);
        }
    }
    e
}

/// Best lower bound over convex combinations of the collected witnesses.
fn hull_lower_bound(psis: &[Vec<f64>], b: &BSet, space: &FiniteProbSpace) -> Result<f64> {
    let n = space.len();
    let kappa = b.required_mass();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let w: Vec<Variable> = psis.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let mu = lp.add_var(kappa * LP_SCALE, (0.0, f64::INFINITY));
    let nu: Vec<Variable> = space
        .weights()
        .iter()
        .map(|m| lp.add_var(-m * LP_SCALE, (0.0, f64::INFINITY)))
        .collect();
    for i in 0..n {
        let mut e = LinearExpr::empty();
        for (k, psi) in psis.iter().enumerate() {
            if psi[i] != 0.0 {
                e.add(w[k], psi[i]);
            }
        }
        e.add(mu, -1.0);
        e.add(nu[i], 1.0);
        lp.add_constraint(e, ComparisonOp::Ge, 0.0);
    }
    let mut total = LinearExpr::empty();
    for &v in &w {
        total.add(v, 1.0);
    }
    lp.add_constraint(total, ComparisonOp::Eq, 1.0);
    let sol = lp
        .solve()
        .map_err(|e| Error::LinearProgram(e.to_string()))?;
    let weights: Vec<f64> = w.iter().map(|&v| sol[v].max(0.0)).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Ok(0.0);
    }
    let mut mix = vec![0.0; n];
    for (wk, psi) in weights.iter().zip(psis) {
        for (m, p) in mix.iter_mut().zip(psi) {
            *m += wk / total * p;
        }
    }
    Ok(inner_min(&L0Vector::new(mix), b, space)?.0)
}

/// Solve `min_{φ∈B} F(φ)`, then pick a (near) minimum-norm minimizer and
/// symmetrize it over the group orbit.
pub fn solve_saddle(p: &SaddleProblem<'_>, opts: &SolverOptions) -> Result<SaddleSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument("tol must be positive".into()));
    }
    let space = p.space;
    let n = space.len();
    let kappa = p.b.required_mass();

    if kappa <= 0.0 {
        let phi0 = L0Vector::zeros(n);
        return Ok(canonical(phi0, 0.0, p));
    }
    if p.map.is_zero() {
        let phi0 = project_b(&L0Vector::zeros(n), &p.b, space)?;
        return Ok(canonical(phi0, 0.0, p));
    }

    let weights = space.weights();
    let start = project_b(&L0Vector::new(vec![kappa; n]), &p.b, space)?;

    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let t = lp.add_var(LP_SCALE, (0.0, f64::INFINITY));
    let phi_vars: Vec<Variable> = (0..n).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let mut mass = LinearExpr::empty();
    for (i, &v) in phi_vars.iter().enumerate() {
        mass.add(v, weights[i]);
    }
    lp.add_constraint(mass, ComparisonOp::Ge, kappa);

    let mut cuts = CuttingPlanes { psis: Vec::new() };
    let d = p.whitened.ncols();
    let mut seeds: Vec<DVector<f64>> = (0..d)
        .map(|k| DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 }))
        .collect();
    let first = eval_f(&start, p)?;
    seeds.extend(first.cluster.iter().cloned());
    for u in &seeds {
        let psi = p.witness_psi(u);
        if cuts.is_new(&psi) {
            lp.add_constraint(cut_expr(t, &phi_vars, weights, &psi), ComparisonOp::Ge, 0.0);
            cuts.psis.push(psi);
        }
    }
    let mut sol = lp
        .solve()
        .map_err(|e| Error::LinearProgram(e.to_string()))?;

    let mut best_phi = start.clone();
    let mut best_f = first.value;
    let mut lower = inner_min(&first.witness_psi, &p.b, space)?.0;
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    let mut last_certified = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let raw: Vec<f64> = phi_vars.iter().map(|&v| sol[v].clamp(0.0, 1.0)).collect();
        let model_value = sol.objective() / LP_SCALE;
        let query = project_b(&L0Vector::new(raw), &p.b, space)?;
        let ev = eval_f(&query, p)?;
        if ev.value < best_f {
            best_f = ev.value;
            best_phi = query.clone();
        }
        lower = lower.max(inner_min(&ev.witness_psi, &p.b, space)?.0);

        let mut added = 0;
        let mut candidates = ev.cluster.clone();
        for a in 0..ev.cluster.len() {
            for c in a + 1..ev.cluster.len() {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                candidates.push((&ev.cluster[a] + &ev.cluster[c]) * s);
                candidates.push((&ev.cluster[a] - &ev.cluster[c]) * s);
            }
        }
        for u in &candidates {
            let psi = p.witness_psi(u);
            if cuts.is_new(&psi) {
                sol = sol
                    .add_constraint(cut_expr(t, &phi_vars, weights, &psi), ComparisonOp::Ge, 0.0)
                    .map_err(|e| Error::LinearProgram(e.to_string()))?;
                cuts.psis.push(psi);
                added += 1;
            }
        }

        let model_gap = best_f - model_value;
        let stalled = added == 0;
        if model_gap <= opts.tol || stalled || iterations - last_certified >= 25 {
            last_certified = iterations;
            lower = lower.max(hull_lower_bound(&cuts.psis, &p.b, space)?);
        }
        if opts.trace {
            trace.push(TraceRow {
                iteration: iterations,
                f_value: ev.value,
                lower_bound: lower,
                gap: best_f - lower,
            });
        }
        if best_f - lower <= opts.tol {
            converged = true;
            break;
        }
        if stalled && model_gap <= opts.tol {
            // The model is exact at the query point but the certificate
            // could not be tightened further.
            break;
        }
    }

    let level = best_f + 10.0 * opts.tol;
    let small = min_norm_stage(p, &best_phi, level, opts.min_norm_iter)?;
    // A uniform shift commutes with the action, so re-projecting keeps
    // invariance while restoring the mass constraint lost to rounding.
    let phi0 = project_b(&symmetrize_orbit(&small, p.group), &p.b, space)?;
    let f_phi0 = p.f_value(&phi0.values);
    Ok(SaddleSolution {
        invariance_residual: invariance_residual(&phi0, p.group),
        phi0,
        f_star: best_f,
        lower_bound: lower,
        duality_gap: (best_f - lower).max(0.0),
        f_phi0,
        iterations,
        converged,
        witnesses: cuts.psis.into_iter().map(L0Vector::new).collect(),
        trace,
    })
}

fn canonical(phi0: L0Vector, f: f64, p: &SaddleProblem<'_>) -> SaddleSolution {
    SaddleSolution {
        invariance_residual: invariance_residual(&phi0, p.group),
        phi0,
        f_star: f,
        lower_bound: f,
        duality_gap: 0.0,
        f_phi0: f,
        iterations: 0,
        converged: true,
        witnesses: Vec::new(),
        trace: Vec::new(),
    }
}

/// Switching projected subgradient in `L²(m)` for
/// `min ‖φ‖² s.t. φ ∈ B, F(φ) ≤ level`. Only feasible iterates are kept, so
/// the result never leaves the sublevel set.
fn min_norm_stage(
    p: &SaddleProblem<'_>,
    feasible: &L0Vector,
    level: f64,
    iters: usize,
) -> Result<L0Vector> {
    let space = p.space;
    let norm2 = |x: &L0Vector| {
        x.values
            .iter()
            .zip(space.weights())
            .map(|(v, m)| m * v * v)
            .sum::<f64>()
    };
    let mut best = feasible.clone();
    let mut best_norm = norm2(&best);
    let mut x = feasible.clone();
    let mut objective_steps = 0usize;
    for _ in 0..iters {
        let ev = eval_f(&x, p)?;
        let next = if ev.value > level {
            let g = &ev.witness_psi.values;
            let g2: f64 = g.iter().zip(space.weights()).map(|(a, m)| m * a * a).sum();
            if g2 <= 0.0 {
                break;
            }
            let step = (ev.value - level) / g2;
            L0Vector::new(x.values.iter().zip(g).map(|(a, b)| a - step * b).collect())
        } else {
            let nx = norm2(&x);
            if nx < best_norm {
                best_norm = nx;
                best = x.clone();
            }
            objective_steps += 1;
            let eta = 1.0 / (objective_steps as f64 + 1.0);
            L0Vector::new(x.values.iter().map(|a| (1.0 - eta) * a).collect())
        };
        x = project_b(&next, &p.b, space)?;
    }
    Ok(best)
}

/// Exhaustive grid search of `F` over `B` (oracle for small instances).
pub fn brute_force_saddle(p: &SaddleProblem<'_>, grid: usize) -> Result<(f64, L0Vector)> {
    let n = p.space.len();
    if n > 4 {
        return Err(Error::TooLarge(format!("{n} atoms (at most 4)")));
    }
    if !(2..=51).contains(&grid) {
        return Err(Error::TooLarge(format!("grid {grid} (between 2 and 51)")));
    }
    let kappa = p.b.required_mass();
    let step = 1.0 / (grid - 1) as f64;
    let mut idx = vec![0usize; n];
    let mut best = (f64::INFINITY, L0Vector::zeros(n));
    loop {
        let phi: Vec<f64> = idx.iter().map(|&k| k as f64 * step).collect();
        if p.space.integrate(&phi) >= kappa - 1e-12 {
            let f = p.f_value(&phi);
            if f < best.0 {
                best = (f, L0Vector::new(phi));
            }
        }
        let mut k = 0;
        loop {
            if k == n {
                return Ok(best);
            }
            idx[k] += 1;
            if idx[k] < grid {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}
