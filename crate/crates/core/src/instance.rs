//! Instance files: a measure space, a group with its representation and
//! action, the matrix of `T`, and run options. Every module invariant is
//! checked at load and failures point at the offending JSON key and line.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::group_model::{
    complex_commutator, standard_complex_structure, EquivariantMap, Generator, GroupSystem,
};
use crate::linalg::matrix_from_rows;
use crate::measure_space::FiniteProbSpace;
use crate::minimax_solver::COVARIANCE_TOL;

/// Commutator `‖πJ − Jπ‖` accepted for complex instances.
pub const COMPLEX_TOL: f64 = 1e-10;

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInstance {
    #[serde(default)]
    name: Option<String>,
    space: RawSpace,
    #[serde(default)]
    group: Option<RawGroup>,
    #[serde(rename = "T")]
    t: Rows,
    #[serde(default)]
    complex: bool,
    #[serde(default)]
    options: InstanceOptions,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    letter: String,
    rep: Rows,
    #[serde(default)]
    action: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawGroup {
    Trivial,
    Finite {
        elements: Vec<String>,
        mul: Vec<Vec<String>>,
        rep: BTreeMap<String, Rows>,
        #[serde(default)]
        action: Option<BTreeMap<String, Vec<usize>>>,
    },
    Cyclic {
        order: usize,
        rep: Rows,
        #[serde(default)]
        action: Option<Vec<usize>>,
    },
    Word {
        generators: Vec<RawGenerator>,
        #[serde(default)]
        relations: Vec<(String, String)>,
        #[serde(default)]
        radius: Option<usize>,
    },
}

/// Run options stored with an instance; command-line flags override them.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub word_radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
}

/// Default radius for word-ball groups.
pub const DEFAULT_WORD_RADIUS: usize = 6;

#[derive(Debug, thiserror::Error)]
#[error("{}: {message}", location(.path, .line))]
pub struct InstanceError {
    /// Dotted JSON path of the offending value, empty for the whole file.
    pub path: String,
    pub line: Option<usize>,
    pub message: String,
}

fn location(path: &str, line: &Option<usize>) -> String {
    let what = if path.is_empty() { "instance" } else { path };
    match line {
        Some(l) => format!("{what} (line {l})"),
        None => what.to_string(),
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub space: FiniteProbSpace,
    pub group: GroupSystem,
    pub map: EquivariantMap,
    /// Complex structure `J(x, y) = (−y, x)` for complex instances.
    pub complex_structure: Option<DMatrix<f64>>,
    pub options: InstanceOptions,
}

/// Locate a dotted path in the source by finding each key in turn.
fn line_of(src: &str, path: &str) -> Option<usize> {
    let mut pos = 0;
    for key in path.split('.').filter(|k| !k.is_empty()) {
        let needle = format!("\"{key}\"");
        pos += src[pos..].find(&needle)?;
        pos += needle.len();
    }
    Some(src[..pos].matches('\n').count() + 1)
}

struct Ctx<'a> {
    src: &'a str,
}

impl Ctx<'_> {
    fn err(&self, path: &str, message: impl std::fmt::Display) -> InstanceError {
        InstanceError {
            path: path.to_string(),
            line: line_of(self.src, path),
            message: message.to_string(),
        }
    }

    fn matrix(&self, path: &str, rows: &Rows, shape: (usize, usize)) -> Result<DMatrix<f64>, InstanceError> {
        let m = matrix_from_rows(rows).map_err(|e| self.err(path, e))?;
        if m.shape() != shape {
            return Err(self.err(
                path,
                format!("expected a {}×{} matrix, got {}×{}", shape.0, shape.1, m.nrows(), m.ncols()),
            ));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(self.err(path, "non-finite entry"));
        }
        Ok(m)
    }

    fn action(&self, path: &str, perm: Option<&Vec<usize>>, n: usize) -> Result<Vec<usize>, InstanceError> {
        match perm {
            None => Ok((0..n).collect()),
            Some(p) => {
                if p.len() != n {
                    return Err(self.err(path, format!("permutation has length {}, expected {n}", p.len())));
                }
                let mut seen = vec![false; n];
                for &x in p {
                    if x >= n || seen[x] {
                        return Err(self.err(path, "not a permutation of the atoms"));
                    }
                    seen[x] = true;
                }
                Ok(p.clone())
            }
        }
    }
}

impl Instance {
    pub fn load(path: &Path, word_radius: Option<usize>) -> Result<Self, InstanceError> {
        let src = std::fs::read_to_string(path).map_err(|e| InstanceError {
            path: String::new(),
            line: None,
            message: format!("cannot read {}: {e}", path.display()),
        })?;
        let fallback = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse(&src, &fallback, word_radius)
    }

    /// Parse and validate an instance. `word_radius` overrides the radius in
    /// the file.
    pub fn parse(src: &str, fallback_name: &str, word_radius: Option<usize>) -> Result<Self, InstanceError> {
        let raw: RawInstance = serde_json::from_str(src).map_err(|e| InstanceError {
            path: String::new(),
            line: Some(e.line()),
            message: e.to_string(),
        })?;
        let ctx = Ctx { src };
        let opts = raw.options;
        if let Some(t) = opts.tol {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ctx.err("options.tol", "tol must be positive"));
            }
        }
        if opts.levels == Some(0) {
            return Err(ctx.err("options.levels", "levels must be at least 1"));
        }

        if raw.space.weights.is_empty() {
            return Err(ctx.err("space.weights", "at least one atom is required"));
        }
        let space = FiniteProbSpace::new(raw.space.weights.clone())
            .map_err(|e| ctx.err("space.weights", e))?;
        let n = space.len();
        if raw.t.len() != n {
            return Err(ctx.err("T", format!("T has {} rows, expected one per atom ({n})", raw.t.len())));
        }
        let d = raw.t.first().map_or(0, Vec::len);
        if d == 0 {
            return Err(ctx.err("T", "T must have at least one column"));
        }
        let t = ctx.matrix("T", &raw.t, (n, d))?;

        let radius = word_radius.or(opts.word_radius);
        let group = build_group(&ctx, raw.group.as_ref(), n, d, radius)?;
        group
            .check_measure_preserving(&space)
            .map_err(|e| ctx.err("group", e))?;
        let map = EquivariantMap::new(t);
        map.check_covariance(&group, COVARIANCE_TOL)
            .map_err(|e| ctx.err("T", e))?;

        let complex_structure = if raw.complex {
            let j = standard_complex_structure(d).map_err(|e| ctx.err("complex", e))?;
            let c = complex_commutator(&group, &j);
            if c > COMPLEX_TOL {
                return Err(ctx.err(
                    "complex",
                    format!("representation does not commute with J (residual {c:.3e})"),
                ));
            }
            Some(j)
        } else {
            None
        };

        Ok(Instance {
            name: raw.name.clone().unwrap_or_else(|| fallback_name.to_string()),
            space,
            group,
            map,
            complex_structure,
            options: opts,
        })
    }
}

fn build_group(
    ctx: &Ctx<'_>,
    raw: Option<&RawGroup>,
    n: usize,
    d: usize,
    word_radius: Option<usize>,
) -> Result<GroupSystem, InstanceError> {
    match raw {
        None | Some(RawGroup::Trivial) => Ok(GroupSystem::trivial(d, n)),
        Some(RawGroup::Cyclic { order, rep, action }) => {
            let gen = ctx.matrix("group.rep", rep, (d, d))?;
            let perm = ctx.action("group.action", action.as_ref(), n)?;
            GroupSystem::cyclic(*order, gen, perm).map_err(|e| ctx.err("group", e))
        }
        Some(RawGroup::Finite {
            elements,
            mul,
            rep,
            action,
        }) => {
            let index: BTreeMap<&str, usize> = elements
                .iter()
                .enumerate()
                .map(|(i, s)| (s.as_str(), i))
                .collect();
            if index.len() != elements.len() {
                return Err(ctx.err("group.elements", "duplicate element name"));
            }
            if mul.len() != elements.len() {
                return Err(ctx.err(
                    "group.mul",
                    format!("table has {} rows, expected {}", mul.len(), elements.len()),
                ));
            }
            let mut table = Vec::with_capacity(mul.len());
            for row in mul {
                if row.len() != elements.len() {
                    return Err(ctx.err("group.mul", "table rows must list every element"));
                }
                table.push(
                    row.iter()
                        .map(|s| {
                            index
                                .get(s.as_str())
                                .copied()
                                .ok_or_else(|| ctx.err("group.mul", format!("unknown element {s:?}")))
                        })
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
            let mut reps = Vec::with_capacity(elements.len());
            let mut actions = Vec::with_capacity(elements.len());
            for name in elements {
                let path = format!("group.rep.{name}");
                let m = rep
                    .get(name)
                    .ok_or_else(|| ctx.err("group.rep", format!("missing representation of {name:?}")))?;
                reps.push(ctx.matrix(&path, m, (d, d))?);
                let apath = format!("group.action.{name}");
                actions.push(ctx.action(&apath, action.as_ref().and_then(|a| a.get(name)), n)?);
            }
            for key in rep.keys().chain(action.iter().flat_map(|a| a.keys())) {
                if !index.contains_key(key.as_str()) {
                    return Err(ctx.err("group", format!("unknown element {key:?}")));
                }
            }
            GroupSystem::finite(elements.clone(), table, reps, actions).map_err(|e| ctx.err("group", e))
        }
        Some(RawGroup::Word {
            generators,
            relations,
            radius,
        }) => {
            let mut gens = Vec::with_capacity(generators.len());
            for g in generators {
                let mut chars = g.letter.chars();
                let letter = match (chars.next(), chars.next()) {
                    (Some(c), None) => c,
                    _ => return Err(ctx.err("group.generators", format!("letter {:?} must be one character", g.letter))),
                };
                gens.push(Generator {
                    letter,
                    rep: ctx.matrix("group.generators.rep", &g.rep, (d, d))?,
                    action: ctx.action("group.generators.action", g.action.as_ref(), n)?,
                });
            }
            let radius = word_radius.or(*radius).unwrap_or(DEFAULT_WORD_RADIUS);
            GroupSystem::word_ball(gens, relations.clone(), radius).map_err(|e| ctx.err("group", e))
        }
    }
}
