//! Groups acting on `H = ℝ^d` through a representation `π` and on the atoms
//! of a finite space through permutations `β`, plus the semidirect product
//! `H ⋊_π Γ`.
//!
//! Finite groups are given by a multiplication table. Infinite finitely
//! generated groups are truncated to a word ball: elements are normal forms
//! of length at most `radius`, and products that leave the ball are not
//! stored. Suprema over a word ball are lower bounds and reported as such.
//!
//! Permutation convention: `β(s)` is stored as the point map `i ↦ σ_s(i)`
//! and acts on functions by push-forward, `(P_s v)_i = v_{σ_s⁻¹(i)}`. With
//! this convention `s ↦ P_s` is a homomorphism.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{max_abs, min_singular_value, spectral_norm};
use crate::measure_space::FiniteProbSpace;

const HOM_TOL: f64 = 1e-10;
const MAX_REWRITES: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub enum GroupKind {
    Finite,
    WordBall {
        radius: usize,
        /// Normal-form length of every stored element.
        word_lengths: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct GroupSystem {
    names: Vec<String>,
    mul: Vec<Vec<Option<usize>>>,
    inverse: Vec<Option<usize>>,
    identity: usize,
    reps: Vec<DMatrix<f64>>,
    actions: Vec<Vec<usize>>,
    dim: usize,
    atoms: usize,
    kind: GroupKind,
}

/// Generator data for a word-ball group. `letter` must be an ASCII
/// lowercase letter; its inverse is written with the uppercase letter.
#[derive(Debug, Clone)]
pub struct Generator {
    pub letter: char,
    pub rep: DMatrix<f64>,
    pub action: Vec<usize>,
}

fn is_permutation(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

fn compose(outer: &[usize], inner: &[usize]) -> Vec<usize> {
    inner.iter().map(|&i| outer[i]).collect()
}

fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// `(P_σ v)_i = v_{σ⁻¹(i)}`.
pub fn push_forward(perm: &[usize], v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; v.len()];
    for (j, &target) in perm.iter().enumerate() {
        out[target] = v[j];
    }
    out
}

impl GroupSystem {
    /// Build a finite group from its multiplication table, checking the group
    /// axioms and that `π` and `β` are homomorphisms.
    pub fn finite(
        names: Vec<String>,
        mul: Vec<Vec<usize>>,
        reps: Vec<DMatrix<f64>>,
        actions: Vec<Vec<usize>>,
    ) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::InvalidGroup("no elements".into()));
        }
        if mul.len() != n || mul.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidGroup(format!(
                "multiplication table must be {n}×{n}"
            )));
        }
        if mul.iter().flatten().any(|&x| x >= n) {
            return Err(Error::InvalidGroup("multiplication table entry out of range".into()));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|x| mul[e][x] == x && mul[x][e] == x))
            .ok_or_else(|| Error::InvalidGroup("no identity element".into()))?;
        let mut inverse = Vec::with_capacity(n);
        for x in 0..n {
            let inv = (0..n)
                .find(|&y| mul[x][y] == identity && mul[y][x] == identity)
                .ok_or_else(|| Error::InvalidGroup(format!("element {} has no inverse", names[x])))?;
            inverse.push(Some(inv));
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if mul[mul[a][b]][c] != mul[a][mul[b][c]] {
                        return Err(Error::InvalidGroup(format!(
                            "multiplication is not associative at ({}, {}, {})",
                            names[a], names[b], names[c]
                        )));
                    }
                }
            }
        }
        let mul = mul
            .into_iter()
            .map(|r| r.into_iter().map(Some).collect())
            .collect();
        Self::assemble(names, mul, inverse, identity, reps, actions, GroupKind::Finite)
    }

    /// Cyclic group `ℤ/k` generated by a single matrix and permutation.
    pub fn cyclic(order: usize, gen_rep: DMatrix<f64>, gen_action: Vec<usize>) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidGroup("order must be positive".into()));
        }
        let d = gen_rep.nrows();
        let mut reps = vec![DMatrix::identity(d, d)];
        let mut actions = vec![(0..gen_action.len()).collect::<Vec<_>>()];
        for k in 1..order {
            reps.push(&gen_rep * &reps[k - 1]);
            actions.push(compose(&gen_action, &actions[k - 1]));
        }
        let names = (0..order).map(|k| format!("g{k}")).collect();
        let mul = (0..order)
            .map(|a| (0..order).map(|b| (a + b) % order).collect())
            .collect();
        Self::finite(names, mul, reps, actions)
    }

    /// The trivial group acting trivially on `ℝ^d` and on `atoms` points.
    pub fn trivial(dim: usize, atoms: usize) -> Self {
        Self::finite(
            vec!["e".into()],
            vec![vec![0]],
            vec![DMatrix::identity(dim, dim)],
            vec![(0..atoms).collect()],
        )
        .expect("trivial group is valid")
    }

    /// Word ball of the given radius over `generators`, reduced by free
    /// cancellation and the rewriting rules `lhs → rhs` in `relations`.
    pub fn word_ball(
        generators: Vec<Generator>,
        relations: Vec<(String, String)>,
        radius: usize,
    ) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::InvalidGroup("no generators".into()));
        }
        let dim = generators[0].rep.nrows();
        let atoms = generators[0].action.len();
        let mut letters: HashMap<char, (DMatrix<f64>, Vec<usize>)> = HashMap::new();
        for g in &generators {
            if !g.letter.is_ascii_lowercase() {
                return Err(Error::InvalidGroup(format!(
                    "generator name {:?} must be a lowercase ASCII letter",
                    g.letter
                )));
            }
            if g.rep.nrows() != dim || g.rep.ncols() != dim {
                return Err(Error::InvalidGroup(format!(
                    "generator {} representation is not {dim}×{dim}",
                    g.letter
                )));
            }
            if g.action.len() != atoms || !is_permutation(&g.action) {
                return Err(Error::InvalidGroup(format!(
                    "generator {} action is not a permutation of {atoms} atoms",
                    g.letter
                )));
            }
            let inv = g
                .rep
                .clone()
                .try_inverse()
                .ok_or_else(|| Error::InvalidGroup(format!("generator {} is singular", g.letter)))?;
            letters.insert(g.letter, (g.rep.clone(), g.action.clone()));
            letters.insert(g.letter.to_ascii_uppercase(), (inv, invert_perm(&g.action)));
        }
        for (lhs, rhs) in &relations {
            if lhs.is_empty() || lhs.chars().chain(rhs.chars()).any(|c| !letters.contains_key(&c)) {
                return Err(Error::InvalidGroup(format!(
                    "relation {lhs:?} → {rhs:?} uses unknown letters"
                )));
            }
        }
        let mut alphabet: Vec<char> = letters.keys().copied().collect();
        alphabet.sort_unstable();

        let nf = |w: &str| normal_form(w, &relations);
        let mut words = vec![String::new()];
        let mut index: HashMap<String, usize> = HashMap::from([(String::new(), 0)]);
        let mut frontier = vec![String::new()];
        for _ in 0..radius {
            let mut next = Vec::new();
            for w in &frontier {
                for &c in &alphabet {
                    let candidate = nf(&format!("{w}{c}"))?;
                    if candidate.chars().count() <= radius && !index.contains_key(&candidate) {
                        index.insert(candidate.clone(), words.len());
                        words.push(candidate.clone());
                        next.push(candidate);
                    }
                }
            }
            frontier = next;
        }

        let word_rep = |w: &str| {
            w.chars()
                .fold(DMatrix::identity(dim, dim), |acc, c| acc * &letters[&c].0)
        };
        let word_action = |w: &str| {
            w.chars().fold((0..atoms).collect::<Vec<_>>(), |acc, c| {
                compose(&acc, &letters[&c].1)
            })
        };
        let reps: Vec<_> = words.iter().map(|w| word_rep(w)).collect();
        let actions: Vec<_> = words.iter().map(|w| word_action(w)).collect();
        let n = words.len();
        let mut mul = vec![vec![None; n]; n];
        for a in 0..n {
            for b in 0..n {
                let w = nf(&format!("{}{}", words[a], words[b]))?;
                mul[a][b] = index.get(&w).copied();
            }
        }
        let inverse = words
            .iter()
            .map(|w| {
                let inv: String = w
                    .chars()
                    .rev()
                    .map(|c| {
                        if c.is_ascii_lowercase() {
                            c.to_ascii_uppercase()
                        } else {
                            c.to_ascii_lowercase()
                        }
                    })
                    .collect();
                nf(&inv).map(|w| index.get(&w).copied())
            })
            .collect::<Result<Vec<_>>>()?;
        let word_lengths = words.iter().map(|w| w.chars().count()).collect();
        let names = words
            .into_iter()
            .map(|w| if w.is_empty() { "e".to_string() } else { w })
            .collect();
        Self::assemble(
            names,
            mul,
            inverse,
            0,
            reps,
            actions,
            GroupKind::WordBall {
                radius,
                word_lengths,
            },
        )
    }

    fn assemble(
        names: Vec<String>,
        mul: Vec<Vec<Option<usize>>>,
        inverse: Vec<Option<usize>>,
        identity: usize,
        reps: Vec<DMatrix<f64>>,
        actions: Vec<Vec<usize>>,
        kind: GroupKind,
    ) -> Result<Self> {
        let n = names.len();
        if reps.len() != n || actions.len() != n {
            return Err(Error::InvalidGroup(format!(
                "expected {n} representation matrices and actions, got {} and {}",
                reps.len(),
                actions.len()
            )));
        }
        let dim = reps[0].nrows();
        for (s, r) in reps.iter().enumerate() {
            if r.nrows() != dim || r.ncols() != dim {
                return Err(Error::InvalidGroup(format!(
                    "representation of {} is {}×{}, expected {dim}×{dim}",
                    names[s],
                    r.nrows(),
                    r.ncols()
                )));
            }
            if r.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("representation"));
            }
        }
        let atoms = actions[0].len();
        for (s, p) in actions.iter().enumerate() {
            if p.len() != atoms || !is_permutation(p) {
                return Err(Error::InvalidGroup(format!(
                    "action of {} is not a permutation of {atoms} atoms",
                    names[s]
                )));
            }
        }
        let g = GroupSystem {
            names,
            mul,
            inverse,
            identity,
            reps,
            actions,
            dim,
            atoms,
            kind,
        };
        g.validate_homomorphisms()?;
        Ok(g)
    }

    fn validate_homomorphisms(&self) -> Result<()> {
        let e = self.identity;
        if max_abs(&(&self.reps[e] - DMatrix::identity(self.dim, self.dim))) > HOM_TOL {
            return Err(Error::InvalidGroup("π(e) is not the identity".into()));
        }
        if self.actions[e].iter().enumerate().any(|(i, &x)| i != x) {
            return Err(Error::InvalidGroup("β(e) is not the identity".into()));
        }
        for a in 0..self.len() {
            for b in 0..self.len() {
                let Some(ab) = self.mul[a][b] else { continue };
                let prod = &self.reps[a] * &self.reps[b];
                let scale = 1.0 + spectral_norm(&self.reps[a]) * spectral_norm(&self.reps[b]);
                let res = max_abs(&(&self.reps[ab] - prod));
                if res > HOM_TOL * scale {
                    return Err(Error::InvalidGroup(format!(
                        "representation is not a homomorphism at ({}, {}): residual {res:.3e}",
                        self.names[a], self.names[b]
                    )));
                }
                if self.actions[ab] != compose(&self.actions[a], &self.actions[b]) {
                    return Err(Error::InvalidGroup(format!(
                        "action is not a homomorphism at ({}, {})",
                        self.names[a], self.names[b]
                    )));
                }
            }
        }
        Ok(())
    }

    /// `m_{σ_s(i)} = m_i` exactly, for every stored `s`.
    pub fn check_measure_preserving(&self, space: &FiniteProbSpace) -> Result<()> {
        space.check("group action", self.atoms)?;
        let w = space.weights();
        for (s, p) in self.actions.iter().enumerate() {
            if let Some(i) = (0..self.atoms).find(|&i| w[p[i]] != w[i]) {
                return Err(Error::InvalidGroup(format!(
                    "action of {} does not preserve the measure at atom {i}",
                    self.names[s]
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn kind(&self) -> &GroupKind {
        &self.kind
    }

    pub fn is_finite(&self) -> bool {
        matches!(self.kind, GroupKind::Finite)
    }

    pub fn name(&self, s: usize) -> &str {
        &self.names[s]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn check_element(&self, s: usize) -> Result<()> {
        if s < self.len() {
            Ok(())
        } else {
            Err(Error::UnknownElement(s))
        }
    }

    pub fn mul(&self, a: usize, b: usize) -> Result<usize> {
        self.check_element(a)?;
        self.check_element(b)?;
        self.mul[a][b].ok_or(Error::OutsideBall(a, b))
    }

    pub fn inverse(&self, a: usize) -> Result<usize> {
        self.check_element(a)?;
        self.inverse[a].ok_or(Error::OutsideBall(a, a))
    }

    pub fn rep(&self, s: usize) -> &DMatrix<f64> {
        &self.reps[s]
    }

    pub fn reps(&self) -> &[DMatrix<f64>] {
        &self.reps
    }

    pub fn action(&self, s: usize) -> &[usize] {
        &self.actions[s]
    }

    pub fn actions(&self) -> &[Vec<usize>] {
        &self.actions
    }
}

fn normal_form(word: &str, relations: &[(String, String)]) -> Result<String> {
    let mut w: Vec<char> = word.chars().collect();
    let rel: Vec<(Vec<char>, Vec<char>)> = relations
        .iter()
        .map(|(l, r)| (l.chars().collect(), r.chars().collect()))
        .collect();
    for _ in 0..MAX_REWRITES {
        if let Some(i) = w
            .windows(2)
            .position(|p| p[0] != p[1] && p[0].eq_ignore_ascii_case(&p[1]))
        {
            w.drain(i..i + 2);
            continue;
        }
        let hit = rel.iter().find_map(|(l, r)| {
            w.windows(l.len()).position(|win| win == l.as_slice()).map(|i| (i, l.len(), r))
        });
        match hit {
            Some((i, len, r)) => {
                w.splice(i..i + len, r.iter().copied());
            }
            None => return Ok(w.into_iter().collect()),
        }
    }
    Err(Error::InvalidGroup(format!(
        "rewriting of {word:?} did not terminate"
    )))
}

/// An element `(ξ, s)` of `H ⋊_π Γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SemidirectElement {
    pub xi: DVector<f64>,
    pub s: usize,
}

impl SemidirectElement {
    pub fn new(xi: DVector<f64>, s: usize) -> Self {
        SemidirectElement { xi, s }
    }

    pub fn identity(g: &GroupSystem) -> Self {
        SemidirectElement {
            xi: DVector::zeros(g.dim()),
            s: g.identity(),
        }
    }

    fn check(&self, g: &GroupSystem) -> Result<()> {
        g.check_element(self.s)?;
        if self.xi.len() != g.dim() {
            return Err(Error::DimensionMismatch {
                what: "semidirect vector",
                got: self.xi.len(),
                expected: g.dim(),
            });
        }
        Ok(())
    }
}

/// `(η, t)(ξ, s) = (η + π(t)ξ, ts)`.
pub fn sd_mul(
    a: &SemidirectElement,
    b: &SemidirectElement,
    g: &GroupSystem,
) -> Result<SemidirectElement> {
    a.check(g)?;
    b.check(g)?;
    let s = g.mul(a.s, b.s)?;
    Ok(SemidirectElement {
        xi: &a.xi + g.rep(a.s) * &b.xi,
        s,
    })
}

/// `(ξ, s)⁻¹ = (−π(s⁻¹)ξ, s⁻¹)`.
pub fn sd_inv(a: &SemidirectElement, g: &GroupSystem) -> Result<SemidirectElement> {
    a.check(g)?;
    let s = g.inverse(a.s)?;
    Ok(SemidirectElement {
        xi: -(g.rep(s) * &a.xi),
        s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformBound {
    pub value: f64,
    /// `true` for fully enumerated finite groups; word balls only give a
    /// lower bound on `sup_s ‖π(s)‖`.
    pub certified: bool,
    /// Running maximum over balls of radius `0..=L` (word balls only).
    pub by_radius: Option<Vec<f64>>,
}

/// `max_s ‖π(s)‖` over the stored elements.
pub fn uniform_bound(g: &GroupSystem) -> UniformBound {
    let norms: Vec<f64> = g.reps.iter().map(spectral_norm).collect();
    let value = norms.iter().copied().fold(0.0, f64::max);
    match &g.kind {
        GroupKind::Finite => UniformBound {
            value,
            certified: true,
            by_radius: None,
        },
        GroupKind::WordBall {
            radius,
            word_lengths,
        } => {
            let mut by_radius = vec![0.0; radius + 1];
            for (&len, &n) in word_lengths.iter().zip(&norms) {
                by_radius[len] = f64::max(by_radius[len], n);
            }
            for r in 1..by_radius.len() {
                by_radius[r] = by_radius[r].max(by_radius[r - 1]);
            }
            UniformBound {
                value,
                certified: false,
                by_radius: Some(by_radius),
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinEntry {
    pub epsilon: f64,
    /// `C = 1 + ‖π‖`.
    pub constant: f64,
    /// Invariant radius `ε / C`.
    pub radius: f64,
    pub samples: usize,
    pub max_image_norm: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinReport {
    pub entries: Vec<SinEntry>,
    pub uniform_bound: UniformBound,
    /// The bounded-neighbourhood condition holds trivially for discrete
    /// groups (take the identity singleton); nothing is checked for it.
    pub bounded_neighbourhood_noop: bool,
    /// Set when `‖π‖` is still growing at the boundary of the word ball.
    pub not_uniformly_bounded_empirical: bool,
}

/// For each `ε`, checks `‖π(s)ξ‖ < ε` for sampled `‖ξ‖ < ε/(1+‖π‖)` and
/// every stored `s`.
pub fn sin_check(g: &GroupSystem, epsilons: &[f64], samples: usize, seed: u64) -> Result<SinReport> {
    if epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidArgument("epsilons must be positive".into()));
    }
    let bound = uniform_bound(g);
    let constant = 1.0 + bound.value;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = g.dim();
    let mut entries = Vec::with_capacity(epsilons.len());
    for &epsilon in epsilons {
        let radius = epsilon / constant;
        let mut max_image_norm: f64 = 0.0;
        for _ in 0..samples {
            let dir = crate::linalg::unit(DVector::from_fn(d, |_, _| rng.sample(StandardNormal)));
            let r: f64 = rng.random::<f64>() * radius;
            let xi = dir * r;
            for rep in g.reps() {
                max_image_norm = max_image_norm.max((rep * &xi).norm());
            }
        }
        entries.push(SinEntry {
            epsilon,
            constant,
            radius,
            samples,
            max_image_norm,
            pass: max_image_norm < epsilon,
        });
    }
    let growing = bound.by_radius.as_ref().is_some_and(|b| {
        b.len() >= 2 && b[b.len() - 1] > b[b.len() - 2] * (1.0 + 1e-9)
    });
    Ok(SinReport {
        entries,
        uniform_bound: bound,
        bounded_neighbourhood_noop: true,
        not_uniformly_bounded_empirical: growing,
    })
}

/// `exp(−‖Vξ‖²)`.
pub fn pdf_gaussian(v: &DMatrix<f64>, xi: &DVector<f64>) -> Result<f64> {
    if v.ncols() != xi.len() {
        return Err(Error::DimensionMismatch {
            what: "xi",
            got: xi.len(),
            expected: v.ncols(),
        });
    }
    let smin = min_singular_value(v);
    if !v.is_square() || smin <= 1e-12 * spectral_norm(v).max(1.0) {
        return Err(Error::Singular(smin));
    }
    Ok((-(v * xi).norm_squared()).exp())
}

/// Extension of a function on `H` to `H ⋊ Γ`: `f̃(ξ, s) = f(ξ)` if `s = e`,
/// otherwise 0.
pub fn pdf_extend<F>(f: F, a: &SemidirectElement, g: &GroupSystem) -> f64
where
    F: Fn(&DVector<f64>) -> f64,
{
    if a.s == g.identity() {
        f(&a.xi)
    } else {
        0.0
    }
}

/// `(1/|Γ|) Σ_s π(s)ᵀπ(s)`.
pub fn averaged_gram(g: &GroupSystem) -> DMatrix<f64> {
    let d = g.dim();
    let mut acc = DMatrix::zeros(d, d);
    for r in g.reps() {
        acc += r.transpose() * r;
    }
    let avg = acc / g.len() as f64;
    crate::linalg::symmetrize(&avg)
}

/// `‖ξ‖_π = max_s ‖π(s)ξ‖` over the stored elements.
pub fn sup_norm(g: &GroupSystem, xi: &DVector<f64>) -> f64 {
    g.reps().iter().map(|r| (r * xi).norm()).fold(0.0, f64::max)
}

/// The standard complex structure `J(x, y) = (−y, x)` on `ℝ^{2k}`, with the
/// first `k` coordinates real parts and the last `k` imaginary parts.
pub fn standard_complex_structure(dim: usize) -> Result<DMatrix<f64>> {
    if dim % 2 != 0 {
        return Err(Error::NotComplexStructure(format!("dimension {dim} is odd")));
    }
    let k = dim / 2;
    let mut j = DMatrix::zeros(dim, dim);
    for i in 0..k {
        j[(i, k + i)] = -1.0;
        j[(k + i, i)] = 1.0;
    }
    Ok(j)
}

pub fn check_complex_structure(j: &DMatrix<f64>) -> Result<()> {
    let n = j.nrows();
    if !j.is_square() || n % 2 != 0 {
        return Err(Error::NotComplexStructure("J must be square of even size".into()));
    }
    let res = max_abs(&(j * j + DMatrix::identity(n, n)));
    if res > 1e-12 {
        return Err(Error::NotComplexStructure(format!("‖J² + I‖ = {res:.3e}")));
    }
    Ok(())
}

/// Largest `‖π(s)J − Jπ(s)‖` over stored elements.
pub fn complex_commutator(g: &GroupSystem, j: &DMatrix<f64>) -> f64 {
    g.reps()
        .iter()
        .map(|r| max_abs(&(r * j - j * r)))
        .fold(0.0, f64::max)
}

/// The matrix of `T: H → L⁰(X, m)`, rows indexed by atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivariantMap {
    matrix: DMatrix<f64>,
}

impl EquivariantMap {
    pub fn new(matrix: DMatrix<f64>) -> Self {
        EquivariantMap { matrix }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn apply(&self, xi: &DVector<f64>) -> Vec<f64> {
        (&self.matrix * xi).iter().copied().collect()
    }

    pub fn row_norms(&self) -> Vec<f64> {
        (0..self.rows()).map(|i| self.matrix.row(i).norm()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|&x| x == 0.0)
    }

    /// Worst `max_abs(Tπ(s) − P_s T)` over stored `s`, with the element name.
    pub fn covariance_residual(&self, g: &GroupSystem) -> Result<(f64, usize)> {
        if self.cols() != g.dim() {
            return Err(Error::DimensionMismatch {
                what: "T columns",
                got: self.cols(),
                expected: g.dim(),
            });
        }
        if self.rows() != g.atoms() {
            return Err(Error::DimensionMismatch {
                what: "T rows",
                got: self.rows(),
                expected: g.atoms(),
            });
        }
        let mut worst = (0.0, g.identity());
        for s in 0..g.len() {
            let lhs = &self.matrix * g.rep(s);
            let perm = g.action(s);
            let mut res: f64 = 0.0;
            for (j, &target) in perm.iter().enumerate() {
                for c in 0..self.cols() {
                    res = res.max((lhs[(target, c)] - self.matrix[(j, c)]).abs());
                }
            }
            if res > worst.0 {
                worst = (res, s);
            }
        }
        Ok(worst)
    }

    pub fn check_covariance(&self, g: &GroupSystem, tol: f64) -> Result<()> {
        let (residual, s) = self.covariance_residual(g)?;
        if residual > tol {
            return Err(Error::NotEquivariant {
                element: g.name(s).to_string(),
                residual,
            });
        }
        Ok(())
    }
}
