//! Finite probability spaces, functions on them, non-increasing
//! rearrangements and boundedness-in-measure profiles.
//!
//! A [`FiniteProbSpace`] is a list of atoms with strictly positive masses.
//! Everything here is exact up to floating point summation order, and the
//! summation order is shared between [`rearrangement`] and
//! [`tail_measure`] so that `tail_measure(φ, φ*(t)) ≤ t` holds bit for bit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_model::EquivariantMap;

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct FiniteProbSpace {
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    weights: Vec<f64>,
}

impl TryFrom<SpaceRepr> for FiniteProbSpace {
    type Error = Error;
    fn try_from(r: SpaceRepr) -> Result<Self> {
        FiniteProbSpace::new(r.weights)
    }
}

impl From<FiniteProbSpace> for SpaceRepr {
    fn from(s: FiniteProbSpace) -> Self {
        SpaceRepr { weights: s.weights }
    }
}

impl FiniteProbSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        if let Some((i, w)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w > 0.0))
        {
            return Err(Error::InvalidSpace(format!(
                "weight {i} is {w}, weights must be strictly positive"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSpace(format!(
                "weights sum to {sum}, expected 1"
            )));
        }
        Ok(FiniteProbSpace { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpace("no atoms".into()));
        }
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass_of(&self, atoms: &[usize]) -> f64 {
        atoms.iter().map(|&i| self.weights[i]).sum()
    }

    /// `∫ f dm`.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(m, v)| m * v).sum()
    }

    pub(crate) fn check(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::DimensionMismatch {
                what,
                got: len,
                expected: self.len(),
            });
        }
        Ok(())
    }
}

/// A function on the atoms of a [`FiniteProbSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L0Vector {
    pub values: Vec<f64>,
}

impl L0Vector {
    pub fn new(values: Vec<f64>) -> Self {
        L0Vector { values }
    }

    pub fn zeros(n: usize) -> Self {
        L0Vector {
            values: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

impl From<Vec<f64>> for L0Vector {
    fn from(values: Vec<f64>) -> Self {
        L0Vector { values }
    }
}

/// Groups of atoms with equal `|φ|`, largest first: `(|φ|, mass of group)`.
/// Within the descending sort, ties keep index order, and masses are
/// accumulated in that same order everywhere.
fn level_groups(phi: &[f64], space: &FiniteProbSpace) -> Vec<(f64, f64)> {
    let mut idx: Vec<usize> = (0..phi.len()).collect();
    idx.sort_by(|&a, &b| phi[b].abs().total_cmp(&phi[a].abs()).then(a.cmp(&b)));
    let mut groups: Vec<(f64, f64)> = Vec::new();
    for i in idx {
        let v = phi[i].abs();
        let m = space.weights[i];
        match groups.last_mut() {
            Some((gv, gm)) if *gv == v => *gm += m,
            _ => groups.push((v, m)),
        }
    }
    groups
}

/// Non-increasing rearrangement `φ*(t) = inf{λ > 0 : m(|φ| > λ) ≤ t}`.
pub fn rearrangement(phi: &L0Vector, space: &FiniteProbSpace, t: f64) -> Result<f64> {
    space.check("phi", phi.len())?;
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("t = {t} outside [0, 1]")));
    }
    let groups = level_groups(&phi.values, space);
    // m(|φ| > λ) for λ in [v_{k+1}, v_k) is the mass of the first k groups,
    // so the infimum is the first v_k whose cumulative mass exceeds t.
    let mut cumulative = 0.0;
    for &(v, m) in &groups {
        cumulative += m;
        if cumulative > t {
            return Ok(v);
        }
    }
    Ok(0.0)
}

/// `m({|φ| > λ})`.
pub fn tail_measure(phi: &L0Vector, space: &FiniteProbSpace, lambda: f64) -> Result<f64> {
    space.check("phi", phi.len())?;
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::InvalidArgument(format!("lambda = {lambda} < 0")));
    }
    let mut mass = 0.0;
    for (v, m) in level_groups(&phi.values, space) {
        if v <= lambda {
            break;
        }
        mass += m;
    }
    Ok(mass)
}

/// A non-increasing step profile `C′(λ)` sampled on a grid, together with a
/// support bound past which the profile is known to vanish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessProfile {
    pub thresholds: Vec<f64>,
    pub masses: Vec<f64>,
    /// `C′(λ) = 0` for every `λ > support`.
    pub support: f64,
}

impl BoundednessProfile {
    pub fn new(thresholds: Vec<f64>, masses: Vec<f64>, support: f64) -> Result<Self> {
        if thresholds.len() != masses.len() {
            return Err(Error::DimensionMismatch {
                what: "profile masses",
                got: masses.len(),
                expected: thresholds.len(),
            });
        }
        if thresholds.windows(2).any(|w| w[0] >= w[1]) || thresholds.iter().any(|&l| l <= 0.0) {
            return Err(Error::InvalidArgument(
                "profile thresholds must be positive and strictly increasing".into(),
            ));
        }
        if masses.iter().any(|m| !(0.0..=1.0).contains(m)) {
            return Err(Error::InvalidArgument("profile masses outside [0, 1]".into()));
        }
        if masses.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidArgument("profile masses must be non-increasing".into()));
        }
        Ok(BoundednessProfile {
            thresholds,
            masses,
            support,
        })
    }

    /// Conservative evaluation of `C′` at an arbitrary `λ`: the grid value at
    /// the largest threshold not above `λ` (an upper bound by monotonicity),
    /// 1 below the grid, 0 past the support.
    pub fn eval(&self, lambda: f64) -> f64 {
        if lambda > self.support {
            return 0.0;
        }
        match self.thresholds.partition_point(|&t| t <= lambda) {
            0 => 1.0,
            k => self.masses[k - 1],
        }
    }
}

/// 64 log-spaced points from `1e-3·max_row` to `2·max_row`.
pub fn default_lambda_grid(max_row: f64) -> Vec<f64> {
    let top = if max_row > 0.0 { max_row } else { 1.0 };
    let lo = (1e-3 * top).ln();
    let hi = (2.0 * top).ln();
    (0..64)
        .map(|k| (lo + (hi - lo) * k as f64 / 63.0).exp())
        .collect()
}

/// Row-norm dominating profile `C′(λ) = m({i : ‖row_i(T)‖ ≥ λ})`.
///
/// For unit `ξ`, `|(Tξ)_i| ≤ ‖row_i‖` by Cauchy–Schwarz, so this dominates
/// `m({|Tξ| ≥ λ})` uniformly over the unit sphere.
pub fn boundedness_profile(
    map: &EquivariantMap,
    space: &FiniteProbSpace,
    lambdas: &[f64],
) -> Result<BoundednessProfile> {
    space.check("T rows", map.rows())?;
    if lambdas.iter().any(|&l| l <= 0.0) || lambdas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "lambdas must be positive and strictly increasing".into(),
        ));
    }
    let norms = map.row_norms();
    let masses = lambdas
        .iter()
        .map(|&l| {
            norms
                .iter()
                .zip(space.weights())
                .filter(|(r, _)| **r >= l)
                .map(|(_, m)| m)
                .sum::<f64>()
                .min(1.0)
        })
        .collect();
    let support = norms.iter().copied().fold(0.0, f64::max);
    BoundednessProfile::new(lambdas.to_vec(), masses, support)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KValue {
    pub value: f64,
    /// No grid threshold had `C′(λ) < t`; `value` is twice the top threshold.
    pub extrapolated: bool,
}

/// `K(t) = inf{λ in grid : C′(λ) < t}`.
pub fn k_of_t(profile: &BoundednessProfile, t: f64) -> Result<KValue> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(Error::InvalidArgument(format!("t = {t} outside (0, 1]")));
    }
    match profile
        .thresholds
        .iter()
        .zip(&profile.masses)
        .find(|(_, &m)| m < t)
    {
        Some((&l, _)) => Ok(KValue {
            value: l,
            extrapolated: false,
        }),
        None => Ok(KValue {
            value: 2.0 * profile.thresholds.last().copied().unwrap_or(0.5),
            extrapolated: true,
        }),
    }
}
