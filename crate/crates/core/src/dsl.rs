//! Campaign specification language.
//!
//! ```text
//! campaign   := "campaign" IDENT "{" setting* var* sampler "}"
//! setting    := ("iterations" | "seed" | "w1" | "w2" | "delta" | "calibrate"
//!               | "evaluator" | "model") "=" VALUE ";"
//! var        := "var" IDENT ":" ("structural"|"environmental"|"fault")
//!               "range" "[" NUM "," NUM "]" ("step" NUM)? ("delta" NUM)?
//!               ("depends" IDENT "{" ( "[" NUM "," NUM "]" "->" "[" NUM "," NUM "]" ";" )+ "}")? ";"
//! sampler    := "sampler" ("random"|"grid"|"halton"|"rns"|"gbo")
//!               ("{" (IDENT "=" VALUE ";")* "}")? ";"
//! ```
//!
//! `delta` fixes the high-risk threshold; `calibrate` names a file of
//! calibration risks instead. `evaluator` and `model` name a landscape file
//! and a bow-tie model file; both fall back to the bundled defaults.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::lexer::{fmt_num, quote, Cursor, Diagnostic, TokenKind};
use crate::scene::{
    Dependency, DependencyEntry, Scene, SceneError, SceneSpace, SpaceError, VariableKind, VariableSpec,
};

pub const DEFAULT_ITERATIONS: u64 = 250;
pub const DEFAULT_DELTA: f64 = 0.65;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SamplerKind {
    Random,
    Grid,
    Halton,
    Rns,
    Gbo,
}

impl SamplerKind {
    pub const ALL: [SamplerKind; 5] = [Self::Random, Self::Grid, Self::Halton, Self::Rns, Self::Gbo];

    pub fn as_str(self) -> &'static str {
        match self {
            SamplerKind::Random => "random",
            SamplerKind::Grid => "grid",
            SamplerKind::Halton => "halton",
            SamplerKind::Rns => "rns",
            SamplerKind::Gbo => "gbo",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Active samplers consume risk feedback.
    pub fn is_active(self) -> bool {
        matches!(self, SamplerKind::Rns | SamplerKind::Gbo)
    }
}

impl std::fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RnsParams {
    pub k_neighbors: usize,
    /// Neighborhood radius in normalized space.
    pub tau: f64,
}

impl Default for RnsParams {
    fn default() -> Self {
        Self {
            k_neighbors: 6,
            tau: 0.15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GboParams {
    pub beta: f64,
    pub init_iterations: usize,
    pub candidate_count: usize,
    pub warm_start: Option<String>,
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise: f64,
}

impl Default for GboParams {
    fn default() -> Self {
        Self {
            beta: 30.0,
            init_iterations: 10,
            candidate_count: 512,
            warm_start: None,
            length_scale: 0.2,
            signal_variance: 1.0,
            noise: 1e-4,
        }
    }
}

/// The chosen sampler plus parameter sets for both active samplers. Only the
/// named sampler's parameters are read from or written to a spec document.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub kind: SamplerKind,
    pub rns: RnsParams,
    pub gbo: GboParams,
}

impl SamplerConfig {
    pub fn new(kind: SamplerKind) -> Self {
        Self {
            kind,
            rns: RnsParams::default(),
            gbo: GboParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdSource {
    Fixed(f64),
    /// Path to a file of calibration risks.
    Calibrate(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignSpec {
    pub name: String,
    pub iterations: u64,
    pub seed: u64,
    pub space: SceneSpace,
    pub sampler: SamplerConfig,
    pub w1: f64,
    pub w2: f64,
    pub threshold: ThresholdSource,
    /// Landscape file; the bundled landscape when absent.
    pub evaluator: Option<String>,
    /// Bow-tie model file; the bundled model when absent.
    pub model: Option<String>,
}

impl CampaignSpec {
    pub fn new(name: impl Into<String>, space: SceneSpace, sampler: SamplerKind) -> Self {
        Self {
            name: name.into(),
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            space,
            sampler: SamplerConfig::new(sampler),
            w1: 1.0,
            w2: 1.0,
            threshold: ThresholdSource::Fixed(DEFAULT_DELTA),
            evaluator: None,
            model: None,
        }
    }
}

pub fn parse_campaign_spec(text: &str) -> Result<CampaignSpec, Diagnostic> {
    let mut cur = Cursor::new(text)?;
    cur.expect_keyword("campaign")?;
    let (name, ..) = cur.expect_ident()?;
    cur.expect_punct('{')?;

    let mut iterations = None;
    let mut seed = None;
    let mut w1 = None;
    let mut w2 = None;
    let mut delta: Option<(f64, (usize, usize))> = None;
    let mut calibrate: Option<(String, (usize, usize))> = None;
    let mut evaluator = None;
    let mut model = None;

    // settings
    while let Some(TokenKind::Ident(kw)) = cur.peek_kind().cloned() {
        if kw == "var" || kw == "sampler" {
            break;
        }
        let at = cur.here();
        let dup = |l, c| Diagnostic::new(l, c, format!("duplicate setting `{kw}`"));
        const SETTINGS: [&str; 8] = ["iterations", "seed", "w1", "w2", "delta", "calibrate", "evaluator", "model"];
        if !SETTINGS.contains(&kw.as_str()) {
            return Err(Diagnostic::new(at.0, at.1, format!("unknown keyword `{kw}`")));
        }
        cur.advance();
        cur.expect_punct('=')?;
        match kw.as_str() {
            "iterations" => {
                let n = cur.expect_u64()?;
                if n == 0 {
                    return Err(Diagnostic::new(at.0, at.1, "iterations must be at least 1"));
                }
                if iterations.replace(n).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            "seed" => {
                if seed.replace(cur.expect_u64()?).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            "w1" | "w2" => {
                let w = cur.expect_f64()?;
                if w < 0.0 {
                    return Err(Diagnostic::new(at.0, at.1, format!("{kw} must be non-negative")));
                }
                let slot = if kw == "w1" { &mut w1 } else { &mut w2 };
                if slot.replace(w).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            "delta" => {
                if delta.replace((cur.expect_f64()?, at)).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            "calibrate" => {
                if calibrate.replace((cur.expect_string()?, at)).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            "evaluator" => {
                if evaluator.replace(cur.expect_string()?).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            "model" => {
                if model.replace(cur.expect_string()?).is_some() {
                    return Err(dup(at.0, at.1));
                }
            }
            _ => unreachable!("filtered above"),
        }
        cur.expect_punct(';')?;
    }
    let threshold = match (delta, calibrate) {
        (Some(_), Some((_, at))) => {
            return Err(Diagnostic::new(at.0, at.1, "`delta` and `calibrate` are mutually exclusive"))
        }
        (Some((d, _)), None) => ThresholdSource::Fixed(d),
        (None, Some((path, _))) => ThresholdSource::Calibrate(path),
        (None, None) => ThresholdSource::Fixed(DEFAULT_DELTA),
    };

    // variables
    let mut vars = Vec::new();
    let mut positions: HashMap<String, (usize, usize)> = HashMap::new();
    let mut depends_at: HashMap<String, (usize, usize)> = HashMap::new();
    while cur.is_keyword("var") {
        let var_at = cur.here();
        cur.advance();
        let (vname, vl, vc) = cur.expect_ident()?;
        if positions.contains_key(&vname) {
            return Err(Diagnostic::new(vl, vc, format!("duplicate variable `{vname}`")));
        }
        cur.expect_punct(':')?;
        let kind_at = cur.here();
        let (kind_s, ..) = cur.expect_ident()?;
        let kind = VariableKind::parse(&kind_s).ok_or_else(|| {
            Diagnostic::new(
                kind_at.0,
                kind_at.1,
                format!("unknown variable kind `{kind_s}` (expected structural, environmental or fault)"),
            )
        })?;
        let range_at = cur.here();
        cur.expect_keyword("range")?;
        let (lower, upper) = cur.expect_interval()?;
        if lower > upper {
            return Err(Diagnostic::new(range_at.0, range_at.1, "range lower exceeds upper"));
        }
        let mut spec = VariableSpec::new(vname.clone(), kind, lower, upper);
        if cur.is_keyword("step") {
            cur.advance();
            spec.grid_step = Some(cur.expect_f64()?);
        }
        if cur.is_keyword("delta") {
            cur.advance();
            spec.delta = Some(cur.expect_f64()?);
        }
        if cur.is_keyword("depends") {
            cur.advance();
            let on_at = cur.here();
            let (on, ..) = cur.expect_ident()?;
            cur.expect_punct('{')?;
            let mut entries = Vec::new();
            loop {
                let when = cur.expect_interval()?;
                cur.expect_arrow()?;
                let range = cur.expect_interval()?;
                cur.expect_punct(';')?;
                entries.push(DependencyEntry { when, range });
                if cur.eat_punct('}') {
                    break;
                }
            }
            depends_at.insert(vname.clone(), on_at);
            spec.dependency = Some(Dependency::new(on, entries));
        }
        if let Some(TokenKind::Ident(kw)) = cur.peek_kind() {
            let (l, c) = cur.here();
            return Err(Diagnostic::new(l, c, format!("unknown keyword `{kw}` in variable declaration")));
        }
        cur.expect_punct(';')?;
        positions.insert(vname, var_at);
        vars.push(spec);
    }
    if vars.is_empty() {
        return Err(cur.error_here("expected at least one `var` declaration"));
    }

    // sampler
    if let Some(TokenKind::Ident(kw)) = cur.peek_kind() {
        if kw != "sampler" {
            let (l, c) = cur.here();
            return Err(Diagnostic::new(l, c, format!("unknown keyword `{kw}`")));
        }
    }
    cur.expect_keyword("sampler")?;
    let kind_at = cur.here();
    let (kind_s, ..) = cur.expect_ident()?;
    let kind = SamplerKind::parse(&kind_s)
        .ok_or_else(|| Diagnostic::new(kind_at.0, kind_at.1, format!("unknown sampler `{kind_s}`")))?;
    let mut sampler = SamplerConfig::new(kind);
    if cur.eat_punct('{') {
        let mut seen = Vec::new();
        while !cur.eat_punct('}') {
            let (pname, pl, pc) = cur.expect_ident()?;
            if seen.contains(&pname) {
                return Err(Diagnostic::new(pl, pc, format!("duplicate sampler parameter `{pname}`")));
            }
            cur.expect_punct('=')?;
            parse_sampler_param(&mut cur, &mut sampler, &pname, (pl, pc))?;
            cur.expect_punct(';')?;
            seen.push(pname);
        }
    }
    cur.expect_punct(';')?;
    cur.expect_punct('}')?;
    cur.expect_end()?;

    let space = SceneSpace::new(vars).map_err(|e| {
        let at = space_error_var(&e)
            .and_then(|(name, on_dependency)| {
                if on_dependency {
                    depends_at.get(name).or_else(|| positions.get(name))
                } else {
                    positions.get(name)
                }
            })
            .copied()
            .unwrap_or((1, 1));
        Diagnostic::new(at.0, at.1, e.to_string())
    })?;

    Ok(CampaignSpec {
        name,
        iterations: iterations.unwrap_or(DEFAULT_ITERATIONS),
        seed: seed.unwrap_or(0),
        space,
        sampler,
        w1: w1.unwrap_or(1.0),
        w2: w2.unwrap_or(1.0),
        threshold,
        evaluator,
        model,
    })
}

fn parse_sampler_param(
    cur: &mut Cursor,
    sampler: &mut SamplerConfig,
    name: &str,
    at: (usize, usize),
) -> Result<(), Diagnostic> {
    let err = |msg: String| Diagnostic::new(at.0, at.1, msg);
    let positive_int = |cur: &mut Cursor| -> Result<usize, Diagnostic> {
        let n = cur.expect_u64()?;
        if n == 0 {
            return Err(err(format!("`{name}` must be at least 1")));
        }
        usize::try_from(n).map_err(|_| err(format!("`{name}` is too large")))
    };
    let positive = |cur: &mut Cursor| -> Result<f64, Diagnostic> {
        let v = cur.expect_f64()?;
        if v <= 0.0 {
            return Err(err(format!("`{name}` must be positive")));
        }
        Ok(v)
    };
    match (sampler.kind, name) {
        (SamplerKind::Rns, "k") => sampler.rns.k_neighbors = positive_int(cur)?,
        (SamplerKind::Rns, "tau") => sampler.rns.tau = positive(cur)?,
        (SamplerKind::Gbo, "beta") => {
            let v = cur.expect_f64()?;
            if v < 0.0 {
                return Err(err("`beta` must be non-negative".into()));
            }
            sampler.gbo.beta = v;
        }
        (SamplerKind::Gbo, "init_iterations") => sampler.gbo.init_iterations = positive_int(cur)?,
        (SamplerKind::Gbo, "candidate_count") => sampler.gbo.candidate_count = positive_int(cur)?,
        (SamplerKind::Gbo, "warm_start") => sampler.gbo.warm_start = Some(cur.expect_string()?),
        (SamplerKind::Gbo, "length_scale") => sampler.gbo.length_scale = positive(cur)?,
        (SamplerKind::Gbo, "signal_variance") => sampler.gbo.signal_variance = positive(cur)?,
        (SamplerKind::Gbo, "noise") => sampler.gbo.noise = positive(cur)?,
        (kind, _) => return Err(err(format!("unknown parameter `{name}` for sampler `{kind}`"))),
    }
    Ok(())
}

/// The variable a space error refers to, and whether it concerns the
/// variable's dependency clause.
fn space_error_var(e: &SpaceError) -> Option<(&str, bool)> {
    use SpaceError::*;
    match e {
        Empty => None,
        Duplicate(n) | NonFinite(n) | FaultRange(n) | StructuralBounds(n) => Some((n, false)),
        InvertedRange { name, .. } | BadStep { name, .. } | BadDelta { name, .. } => Some((name, false)),
        SelfDependency(n) => Some((n, true)),
        UnknownDependency { name, .. }
        | DependencyChain { name, .. }
        | EmptyDependency { name }
        | DependencyInterval { name, .. }
        | RestrictedRange { name, .. } => Some((name, true)),
    }
}

/// Canonical document for a spec; `parse_campaign_spec(&format_spec(s)) == s`.
pub fn format_spec(spec: &CampaignSpec) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "campaign {} {{", spec.name);
    let _ = writeln!(out, "  iterations = {};", spec.iterations);
    let _ = writeln!(out, "  seed = {};", spec.seed);
    let _ = writeln!(out, "  w1 = {};", fmt_num(spec.w1));
    let _ = writeln!(out, "  w2 = {};", fmt_num(spec.w2));
    match &spec.threshold {
        ThresholdSource::Fixed(d) => {
            let _ = writeln!(out, "  delta = {};", fmt_num(*d));
        }
        ThresholdSource::Calibrate(p) => {
            let _ = writeln!(out, "  calibrate = {};", quote(p));
        }
    }
    if let Some(e) = &spec.evaluator {
        let _ = writeln!(out, "  evaluator = {};", quote(e));
    }
    if let Some(m) = &spec.model {
        let _ = writeln!(out, "  model = {};", quote(m));
    }
    out.push('\n');
    for v in spec.space.vars() {
        let _ = write!(
            out,
            "  var {} : {} range [{}, {}]",
            v.name,
            v.kind,
            fmt_num(v.lower),
            fmt_num(v.upper)
        );
        if let Some(s) = v.grid_step {
            let _ = write!(out, " step {}", fmt_num(s));
        }
        if let Some(d) = v.delta {
            let _ = write!(out, " delta {}", fmt_num(d));
        }
        if let Some(dep) = &v.dependency {
            let _ = writeln!(out, " depends {} {{", dep.on);
            for e in &dep.entries {
                let _ = writeln!(
                    out,
                    "    [{}, {}] -> [{}, {}];",
                    fmt_num(e.when.0),
                    fmt_num(e.when.1),
                    fmt_num(e.range.0),
                    fmt_num(e.range.1)
                );
            }
            out.push_str("  }");
        }
        out.push_str(";\n");
    }
    out.push('\n');
    let s = &spec.sampler;
    let _ = write!(out, "  sampler {}", s.kind);
    match s.kind {
        SamplerKind::Rns => {
            let _ = write!(out, " {{ k = {}; tau = {}; }}", s.rns.k_neighbors, fmt_num(s.rns.tau));
        }
        SamplerKind::Gbo => {
            let g = &s.gbo;
            let _ = write!(
                out,
                " {{ beta = {}; init_iterations = {}; candidate_count = {}; length_scale = {}; signal_variance = {}; noise = {};",
                fmt_num(g.beta),
                g.init_iterations,
                g.candidate_count,
                fmt_num(g.length_scale),
                fmt_num(g.signal_variance),
                fmt_num(g.noise)
            );
            if let Some(w) = &g.warm_start {
                let _ = write!(out, " warm_start = {};", quote(w));
            }
            out.push_str(" }");
        }
        _ => {}
    }
    out.push_str(";\n}\n");
    out
}

/// `key=value` record for one scene: campaign name, seed, iteration, then
/// every variable in declaration order. Fault and structural values are
/// written as integers.
pub fn emit_scene_artifact(scene: &Scene, spec: &CampaignSpec) -> Result<String, SceneError> {
    spec.space.validate_scene(scene)?;
    let mut out = String::new();
    let _ = writeln!(out, "campaign={}", spec.name);
    let _ = writeln!(out, "seed={}", spec.seed);
    let _ = writeln!(out, "iteration={}", scene.iteration);
    for (v, x) in spec.space.vars().iter().zip(&scene.values) {
        let _ = writeln!(out, "{}={}", v.name, format_value(v.kind, *x));
    }
    Ok(out)
}

/// Value text used in artifacts and result tables.
pub fn format_value(kind: VariableKind, x: f64) -> String {
    match kind {
        VariableKind::Fault | VariableKind::Structural => format!("{}", x as i64),
        VariableKind::Environmental => fmt_num(x),
    }
}
