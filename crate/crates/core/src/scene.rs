//! Scene-variable search space, sampling constraints and bounded regions.
//!
//! A [`SceneSpace`] is the ordered list of searchable variables. Declaration
//! order is the canonical dimension order for every vector representation
//! (normalized points, kd-tree keys, GP inputs, clustering features).
//!
//! Structural variables are integer valued (road segments); fault variables
//! are binary. Everything else is continuous on `[lower, upper]`.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariableKind {
    Structural,
    Environmental,
    Fault,
}

impl VariableKind {
    pub fn as_str(self) -> &'static str {
        match self {
            VariableKind::Structural => "structural",
            VariableKind::Environmental => "environmental",
            VariableKind::Fault => "fault",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "structural" => Some(Self::Structural),
            "environmental" => Some(Self::Environmental),
            "fault" => Some(Self::Fault),
            _ => None,
        }
    }
}

impl fmt::Display for VariableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One entry of a dependency map: while the governing variable lies in
/// `when`, this variable is restricted to `range`.
#[derive(Debug, Clone, PartialEq)]
pub struct DependencyEntry {
    pub when: (f64, f64),
    pub range: (f64, f64),
}

/// Interval map keyed by another variable's value. Entries are kept sorted
/// by governing interval; the first matching entry applies, and a governing
/// value matching no entry leaves the variable unrestricted.
#[derive(Debug, Clone, PartialEq)]
pub struct Dependency {
    pub on: String,
    pub entries: Vec<DependencyEntry>,
}

impl Dependency {
    pub fn new(on: impl Into<String>, mut entries: Vec<DependencyEntry>) -> Self {
        entries.sort_by(|a, b| {
            a.when
                .0
                .total_cmp(&b.when.0)
                .then(a.when.1.total_cmp(&b.when.1))
                .then(a.range.0.total_cmp(&b.range.0))
                .then(a.range.1.total_cmp(&b.range.1))
        });
        Self { on: on.into(), entries }
    }

    pub fn restriction_for(&self, governing_value: f64) -> Option<(f64, f64)> {
        self.entries
            .iter()
            .find(|e| e.when.0 <= governing_value && governing_value <= e.when.1)
            .map(|e| e.range)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariableSpec {
    pub name: String,
    pub kind: VariableKind,
    pub lower: f64,
    pub upper: f64,
    pub grid_step: Option<f64>,
    /// Maximum change between consecutive scenes.
    pub delta: Option<f64>,
    pub dependency: Option<Dependency>,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, kind: VariableKind, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            lower,
            upper,
            grid_step: None,
            delta: None,
            dependency: None,
        }
    }

    pub fn fault(name: impl Into<String>) -> Self {
        Self::new(name, VariableKind::Fault, 0.0, 1.0)
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.grid_step = Some(step);
        self
    }

    pub fn with_dependency(mut self, dependency: Dependency) -> Self {
        self.dependency = Some(dependency);
        self
    }

    pub fn is_degenerate(&self) -> bool {
        self.lower == self.upper
    }

    pub fn span(&self) -> f64 {
        self.upper - self.lower
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("the space declares no variables")]
    Empty,
    #[error("duplicate variable `{0}`")]
    Duplicate(String),
    #[error("variable `{0}`: bounds must be finite")]
    NonFinite(String),
    #[error("variable `{name}`: range lower exceeds upper ({lower} > {upper})")]
    InvertedRange { name: String, lower: f64, upper: f64 },
    #[error("variable `{0}`: fault variables must have range [0, 1]")]
    FaultRange(String),
    #[error("variable `{0}`: structural variables must have integer bounds")]
    StructuralBounds(String),
    #[error("variable `{name}`: grid step {step} must be positive and not exceed the range width")]
    BadStep { name: String, step: f64 },
    #[error("variable `{name}`: delta {delta} must be finite and non-negative")]
    BadDelta { name: String, delta: f64 },
    #[error("variable `{name}`: depends on undeclared variable `{on}`")]
    UnknownDependency { name: String, on: String },
    #[error("variable `{0}`: cannot depend on itself")]
    SelfDependency(String),
    #[error("variable `{name}`: governing variable `{on}` is itself dependent (chains are not supported)")]
    DependencyChain { name: String, on: String },
    #[error("variable `{name}`: dependency map is empty")]
    EmptyDependency { name: String },
    #[error("variable `{name}`: dependency interval [{lo}, {hi}] is not within the range of `{on}`")]
    DependencyInterval { name: String, on: String, lo: f64, hi: f64 },
    #[error("variable `{name}`: restricted range [{lo}, {hi}] is not within [{lower}, {upper}]")]
    RestrictedRange { name: String, lo: f64, hi: f64, lower: f64, upper: f64 },
}

/// A rule broken by a scene.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    Range { var: String, value: f64, lower: f64, upper: f64 },
    Kind { var: String, value: f64, reason: &'static str },
    Dependency { var: String, value: f64, governing: String, lo: f64, hi: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Range { var, value, lower, upper } => {
                write!(f, "`{var}` = {value} outside [{lower}, {upper}]")
            }
            Violation::Kind { var, value, reason } => write!(f, "`{var}` = {value}: {reason}"),
            Violation::Dependency { var, value, governing, lo, hi } => {
                write!(f, "`{var}` = {value} outside [{lo}, {hi}] required by `{governing}`")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("missing variable `{0}`")]
    MissingVariable(String),
    #[error("expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("invalid scene: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Violation>),
}

/// One assignment of values to every variable of a space, in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub iteration: u64,
    pub values: Vec<f64>,
}

impl Scene {
    pub fn new(iteration: u64, values: Vec<f64>) -> Self {
        Self { iteration, values }
    }
}

/// Per-variable `[lo, hi]` box around an anchor scene.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedRegion {
    pub intervals: Vec<(f64, f64)>,
    /// The scene the region was built around; always a feasible point of it.
    anchor: Vec<f64>,
}

impl BoundedRegion {
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn contains(&self, values: &[f64]) -> bool {
        values.len() == self.intervals.len()
            && values.iter().zip(&self.intervals).all(|(v, (lo, hi))| lo <= v && v <= hi)
    }
}

/// The validated, ordered search space.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpace {
    vars: Vec<VariableSpec>,
    index: HashMap<String, usize>,
    /// For each variable, the index of its governing variable.
    governed_by: Vec<Option<usize>>,
}

impl SceneSpace {
    pub fn new(vars: Vec<VariableSpec>) -> Result<Self, SpaceError> {
        if vars.is_empty() {
            return Err(SpaceError::Empty);
        }
        let mut index = HashMap::with_capacity(vars.len());
        for (i, v) in vars.iter().enumerate() {
            if index.insert(v.name.clone(), i).is_some() {
                return Err(SpaceError::Duplicate(v.name.clone()));
            }
        }
        for v in &vars {
            check_variable(v)?;
        }
        let mut governed_by = vec![None; vars.len()];
        for (i, v) in vars.iter().enumerate() {
            let Some(dep) = &v.dependency else { continue };
            if dep.on == v.name {
                return Err(SpaceError::SelfDependency(v.name.clone()));
            }
            let g = *index.get(&dep.on).ok_or_else(|| SpaceError::UnknownDependency {
                name: v.name.clone(),
                on: dep.on.clone(),
            })?;
            if vars[g].dependency.is_some() {
                return Err(SpaceError::DependencyChain {
                    name: v.name.clone(),
                    on: dep.on.clone(),
                });
            }
            if dep.entries.is_empty() {
                return Err(SpaceError::EmptyDependency { name: v.name.clone() });
            }
            let gov = &vars[g];
            for e in &dep.entries {
                let (lo, hi) = e.when;
                if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < gov.lower || hi > gov.upper {
                    return Err(SpaceError::DependencyInterval {
                        name: v.name.clone(),
                        on: dep.on.clone(),
                        lo,
                        hi,
                    });
                }
                let (rlo, rhi) = e.range;
                let integral = v.kind != VariableKind::Structural || (rlo.fract() == 0.0 && rhi.fract() == 0.0);
                if !(rlo.is_finite() && rhi.is_finite()) || rlo > rhi || rlo < v.lower || rhi > v.upper || !integral {
                    return Err(SpaceError::RestrictedRange {
                        name: v.name.clone(),
                        lo: rlo,
                        hi: rhi,
                        lower: v.lower,
                        upper: v.upper,
                    });
                }
            }
            governed_by[i] = Some(g);
        }
        Ok(Self {
            vars,
            index,
            governed_by,
        })
    }

    pub fn vars(&self) -> &[VariableSpec] {
        &self.vars
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.vars.iter().map(|v| v.name.as_str())
    }

    /// Builds a scene from named values, rejecting unknown or missing names.
    pub fn scene_from_named<'a>(
        &self,
        iteration: u64,
        named: impl IntoIterator<Item = (&'a str, f64)>,
    ) -> Result<Scene, SceneError> {
        let mut values = vec![None; self.vars.len()];
        for (name, value) in named {
            let i = self
                .index_of(name)
                .ok_or_else(|| SceneError::UnknownVariable(name.to_string()))?;
            values[i] = Some(value);
        }
        let values = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| v.ok_or_else(|| SceneError::MissingVariable(self.vars[i].name.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Scene::new(iteration, values))
    }

    /// The admissible interval of variable `i` given the other values of a
    /// scene (the dependency restriction, or the full range).
    pub fn admissible_range(&self, i: usize, values: &[f64]) -> (f64, f64) {
        let v = &self.vars[i];
        match (self.governed_by[i], &v.dependency) {
            (Some(g), Some(dep)) => dep.restriction_for(values[g]).unwrap_or((v.lower, v.upper)),
            _ => (v.lower, v.upper),
        }
    }

    pub fn validate_scene(&self, scene: &Scene) -> Result<(), SceneError> {
        if scene.values.len() != self.vars.len() {
            return Err(SceneError::Arity {
                expected: self.vars.len(),
                got: scene.values.len(),
            });
        }
        let mut violations = Vec::new();
        for (i, (v, &x)) in self.vars.iter().zip(&scene.values).enumerate() {
            if !x.is_finite() || x < v.lower || x > v.upper {
                violations.push(Violation::Range {
                    var: v.name.clone(),
                    value: x,
                    lower: v.lower,
                    upper: v.upper,
                });
                continue;
            }
            match v.kind {
                VariableKind::Fault if x != 0.0 && x != 1.0 => violations.push(Violation::Kind {
                    var: v.name.clone(),
                    value: x,
                    reason: "fault variables must be 0 or 1",
                }),
                VariableKind::Structural if x.fract() != 0.0 => violations.push(Violation::Kind {
                    var: v.name.clone(),
                    value: x,
                    reason: "structural variables must be integers",
                }),
                _ => {}
            }
            if let Some(g) = self.governed_by[i] {
                let (lo, hi) = self.admissible_range(i, &scene.values);
                if x < lo || x > hi {
                    violations.push(Violation::Dependency {
                        var: v.name.clone(),
                        value: x,
                        governing: self.vars[g].name.clone(),
                        lo,
                        hi,
                    });
                }
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Invalid(violations))
        }
    }

    /// Box induced by the per-variable deltas around `anchor`. Fault
    /// variables always get the full `{0, 1}` domain and variables without a
    /// delta get their full range.
    pub fn bounded_region(&self, anchor: &Scene) -> Result<BoundedRegion, SceneError> {
        self.validate_scene(anchor)?;
        let intervals = self
            .vars
            .iter()
            .zip(&anchor.values)
            .map(|(v, &a)| match (v.kind, v.delta) {
                (VariableKind::Fault, _) | (_, None) => (v.lower, v.upper),
                (_, Some(d)) => ((a - d).max(v.lower), (a + d).min(v.upper)),
            })
            .collect();
        Ok(BoundedRegion {
            intervals,
            anchor: anchor.values.clone(),
        })
    }

    /// Maps values into the unit cube; degenerate variables map to 0.
    pub fn normalize(&self, values: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .zip(values)
            .map(|(v, &x)| if v.is_degenerate() { 0.0 } else { (x - v.lower) / v.span() })
            .collect()
    }

    pub fn denormalize(&self, point: &[f64]) -> Vec<f64> {
        self.vars
            .iter()
            .zip(point)
            .map(|(v, &u)| if v.is_degenerate() { v.lower } else { v.lower + u * v.span() })
            .collect()
    }

    /// Maps a unit-cube point onto a feasible scene: faults threshold at 0.5,
    /// structural variables take one of their integers with equal mass, and
    /// dependent variables are mapped into their restricted interval.
    pub fn scene_from_unit(&self, point: &[f64]) -> Vec<f64> {
        let mut values = vec![0.0; self.vars.len()];
        for (i, v) in self.vars.iter().enumerate() {
            if self.governed_by[i].is_none() {
                values[i] = place(v, v.lower, v.upper, point[i]);
            }
        }
        for i in self.dependents() {
            let (lo, hi) = self.admissible_range(i, &values);
            values[i] = place(&self.vars[i], lo, hi, point[i]);
        }
        values
    }

    /// Uniform draw over the whole space. Fault variables are Bernoulli(0.5)
    /// and dependent variables are drawn inside their restricted interval.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut values = vec![0.0; self.vars.len()];
        for (i, v) in self.vars.iter().enumerate() {
            if self.governed_by[i].is_none() {
                values[i] = draw(v, v.lower, v.upper, rng).expect("full range is never empty");
            }
        }
        for i in self.dependents() {
            let (lo, hi) = self.admissible_range(i, &values);
            values[i] = draw(&self.vars[i], lo, hi, rng).expect("restricted ranges are validated non-empty");
        }
        values
    }

    /// Uniform draw inside `region` that also honours dependency
    /// restrictions. When the governing draws leave a dependent variable with
    /// no admissible value, the governing variables are redrawn a bounded
    /// number of times and finally pinned to the anchor, which is feasible.
    pub fn sample_in_region<R: Rng + ?Sized>(&self, region: &BoundedRegion, rng: &mut R) -> Vec<f64> {
        const ATTEMPTS: usize = 32;
        let mut values = vec![0.0; self.vars.len()];
        for attempt in 0..=ATTEMPTS {
            for (i, v) in self.vars.iter().enumerate() {
                if self.governed_by[i].is_some() {
                    continue;
                }
                values[i] = if attempt == ATTEMPTS && self.is_governing(i) {
                    region.anchor[i]
                } else {
                    let (lo, hi) = region.intervals[i];
                    draw(v, lo, hi, rng).unwrap_or(region.anchor[i])
                };
            }
            let mut feasible = true;
            for i in self.dependents() {
                let (rlo, rhi) = self.admissible_range(i, &values);
                let (lo, hi) = region.intervals[i];
                match draw(&self.vars[i], lo.max(rlo), hi.min(rhi), rng) {
                    Some(x) => values[i] = x,
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if feasible {
                return values;
            }
        }
        // Pinned governing values reproduce the anchor's restriction, which
        // the anchor itself satisfies.
        for i in self.dependents() {
            values[i] = region.anchor[i];
        }
        values
    }

    fn dependents(&self) -> impl Iterator<Item = usize> + '_ {
        self.governed_by
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.map(|_| i))
    }

    fn is_governing(&self, i: usize) -> bool {
        self.governed_by.contains(&Some(i))
    }
}

fn check_variable(v: &VariableSpec) -> Result<(), SpaceError> {
    if !(v.lower.is_finite() && v.upper.is_finite()) {
        return Err(SpaceError::NonFinite(v.name.clone()));
    }
    if v.lower > v.upper {
        return Err(SpaceError::InvertedRange {
            name: v.name.clone(),
            lower: v.lower,
            upper: v.upper,
        });
    }
    match v.kind {
        VariableKind::Fault if v.lower != 0.0 || v.upper != 1.0 => {
            return Err(SpaceError::FaultRange(v.name.clone()))
        }
        VariableKind::Structural if v.lower.fract() != 0.0 || v.upper.fract() != 0.0 => {
            return Err(SpaceError::StructuralBounds(v.name.clone()))
        }
        _ => {}
    }
    if let Some(step) = v.grid_step {
        let ok = step.is_finite() && step > 0.0 && (v.is_degenerate() || step <= v.span());
        if !ok {
            return Err(SpaceError::BadStep {
                name: v.name.clone(),
                step,
            });
        }
    }
    if let Some(delta) = v.delta {
        if !(delta.is_finite() && delta >= 0.0) {
            return Err(SpaceError::BadDelta {
                name: v.name.clone(),
                delta,
            });
        }
    }
    Ok(())
}

/// Uniform draw from `[lo, hi]` respecting the variable's kind; `None` when
/// the interval holds no admissible value.
fn place(v: &VariableSpec, lo: f64, hi: f64, u: f64) -> f64 {
    match v.kind {
        VariableKind::Fault => (if u >= 0.5 { 1.0f64 } else { 0.0 }).clamp(lo, hi),
        VariableKind::Structural => {
            let (a, b) = (lo.ceil(), hi.floor());
            (a + (u * (b - a + 1.0)).floor()).min(b)
        }
        VariableKind::Environmental => (lo + u * (hi - lo)).min(hi),
    }
}

fn draw<R: Rng + ?Sized>(v: &VariableSpec, lo: f64, hi: f64, rng: &mut R) -> Option<f64> {
    if lo > hi {
        return None;
    }
    match v.kind {
        VariableKind::Fault => {
            let choices: Vec<f64> = [0.0, 1.0].into_iter().filter(|&x| lo <= x && x <= hi).collect();
            match choices.len() {
                0 => None,
                1 => Some(choices[0]),
                _ => Some(if rng.random_bool(0.5) { 1.0 } else { 0.0 }),
            }
        }
        VariableKind::Structural => {
            let (a, b) = (lo.ceil() as i64, hi.floor() as i64);
            (a <= b).then(|| rng.random_range(a..=b) as f64)
        }
        VariableKind::Environmental => {
            if lo == hi {
                Some(lo)
            } else {
                Some((lo + rng.random::<f64>() * (hi - lo)).min(hi))
            }
        }
    }
}
