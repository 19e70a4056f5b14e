//! Augmented bow-tie risk model.
//!
//! Threats feed a top event through preventive barriers; mitigation barriers
//! stand between the top event and the consequence. The dynamic hazard rate
//! is the product-sum
//!
//! ```text
//! λ = Σ_threats f(threat | segment) · Π_preventive (1 − P_b) · Π_mitigation (1 − P_b)
//! ```
//!
//! where each barrier success probability `P_b` is conditioned on the current
//! [`DetectorState`]. Perception barriers use the OOD-martingale sigmoid
//! scaled by active camera-detector flags; environmental barriers use a
//! precipitation × radar lookup table.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::lexer::{Cursor, Diagnostic, TokenKind};

pub const LEC_SLOPE: f64 = 0.049;
pub const LEC_MIDPOINT: f64 = 5.754;
pub const LEC_NORMALIZER: f64 = 0.4;

/// Scenes span `[0, 1]` time units.
pub const SCENE_START: f64 = 0.0;
pub const SCENE_END: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("road segment {0} is outside the model's segment table")]
    SegmentOutOfDomain(i64),
    #[error("threat `{threat}` has no rate for segment class `{class}`")]
    MissingRate { threat: String, class: String },
    #[error("hazard trace is empty")]
    EmptyTrace,
    #[error("scene interval is empty: T2 ({t2}) must exceed T1 ({t1})")]
    EmptyInterval { t1: f64, t2: f64 },
    #[error("trace timestamps must be non-decreasing and lie within [T1, T2]")]
    BadTimestamps,
    #[error("threshold calibration needs at least {min} risks, got {got}")]
    TooFewCalibrationRisks { min: usize, got: usize },
    #[error("calibration risks must be finite")]
    NonFiniteRisk,
}

/// Runtime detector and environment state for one timestep.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorState {
    pub martingale: f64,
    /// Left, center and right camera.
    pub blur: [bool; 3],
    pub occlusion: [bool; 3],
    pub radar_ok: bool,
    /// Percent in `[0, 100]`.
    pub precipitation: f64,
    pub road_segment: i64,
}

impl DetectorState {
    pub fn nominal() -> Self {
        Self {
            martingale: 0.0,
            blur: [false; 3],
            occlusion: [false; 3],
            radar_ok: true,
            precipitation: 0.0,
            road_segment: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorFlag {
    Blur,
    Occlusion,
}

/// Perception barrier conditioned on the OOD martingale and the camera
/// anomaly detectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LecSigmoid {
    pub slope: f64,
    pub midpoint: f64,
    /// `P(x | d)` per detector flag.
    pub detector_probs: BTreeMap<DetectorFlag, f64>,
    pub normalizer: f64,
    pub sensor_failure_rate: f64,
}

impl LecSigmoid {
    pub fn new(blur: f64, occlusion: f64) -> Self {
        Self {
            slope: LEC_SLOPE,
            midpoint: LEC_MIDPOINT,
            detector_probs: BTreeMap::from([(DetectorFlag::Blur, blur), (DetectorFlag::Occlusion, occlusion)]),
            normalizer: LEC_NORMALIZER,
            sensor_failure_rate: 1.0,
        }
    }
}

/// Success probability per precipitation bin, split by radar health.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvLut {
    /// Strictly increasing bin edges covering `[0, 100]`.
    pub edges: Vec<f64>,
    pub radar_ok: Vec<f64>,
    pub radar_failed: Vec<f64>,
}

impl EnvLut {
    fn bin(&self, precipitation: f64) -> usize {
        let bins = self.edges.len() - 1;
        (0..bins)
            .find(|&i| precipitation < self.edges[i + 1])
            .unwrap_or(bins - 1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BarrierForm {
    LecSigmoid(LecSigmoid),
    EnvLut(EnvLut),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSpec {
    pub id: String,
    pub form: BarrierForm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threat {
    pub id: String,
    pub description: String,
    /// Rate per time unit keyed by road-segment class.
    pub frequency: BTreeMap<String, f64>,
}

/// Integer road-segment ranges mapped to a class name.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentClass {
    pub lo: i64,
    pub hi: i64,
    pub class: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfractionWeights {
    pub stop_sign: f64,
    pub red_light: f64,
    pub route_deviation: f64,
}

impl Default for InfractionWeights {
    fn default() -> Self {
        Self {
            stop_sign: 0.7,
            red_light: 0.8,
            route_deviation: 1.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct InfractionRecord {
    pub stop_sign: u32,
    pub red_light: u32,
    /// Fraction of the route deviated, in `[0, 1]`.
    pub route_deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BowTieModel {
    pub name: String,
    pub top_event: String,
    pub consequence: String,
    pub segments: Vec<SegmentClass>,
    pub threats: Vec<Threat>,
    pub preventive: Vec<BarrierSpec>,
    pub mitigation: Vec<BarrierSpec>,
    pub infraction_weights: InfractionWeights,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiskBreakdown {
    /// `(timestep, λ)` pairs.
    pub lambda_trace: Vec<(f64, f64)>,
    pub rs: f64,
    pub is: f64,
    pub s_risk: f64,
    pub high_risk: bool,
}

/// OOD-martingale sigmoid with the calibrated slope and midpoint.
pub fn sigmoid_lec(martingale: f64) -> f64 {
    logistic(martingale, LEC_SLOPE, LEC_MIDPOINT)
}

pub fn logistic(x: f64, slope: f64, midpoint: f64) -> f64 {
    1.0 / (1.0 + (-slope * (x - midpoint)).exp())
}

pub fn barrier_success_prob(barrier: &BarrierSpec, state: &DetectorState) -> f64 {
    let p = match &barrier.form {
        BarrierForm::LecSigmoid(lec) => {
            let base = 1.0 - logistic(state.martingale, lec.slope, lec.midpoint);
            let flags = state
                .blur
                .iter()
                .map(|&b| (b, DetectorFlag::Blur))
                .chain(state.occlusion.iter().map(|&o| (o, DetectorFlag::Occlusion)));
            flags
                .filter(|(active, _)| *active)
                .fold(base, |acc, (_, flag)| {
                    let p_d = lec.detector_probs.get(&flag).copied().unwrap_or(lec.normalizer);
                    acc * (p_d / lec.normalizer) * lec.sensor_failure_rate
                })
        }
        BarrierForm::EnvLut(lut) => {
            let bin = lut.bin(state.precipitation);
            if state.radar_ok {
                lut.radar_ok[bin]
            } else {
                lut.radar_failed[bin]
            }
        }
    };
    let p = p.clamp(0.0, 1.0);
    debug_assert!((0.0..=1.0).contains(&p));
    p
}

impl BowTieModel {
    pub fn segment_class(&self, segment: i64) -> Result<&str, RiskError> {
        self.segments
            .iter()
            .find(|s| s.lo <= segment && segment <= s.hi)
            .map(|s| s.class.as_str())
            .ok_or(RiskError::SegmentOutOfDomain(segment))
    }

    /// Inclusive range of road segments the class table covers.
    pub fn segment_domain(&self) -> (i64, i64) {
        let lo = self.segments.iter().map(|s| s.lo).min().unwrap_or(0);
        let hi = self.segments.iter().map(|s| s.hi).max().unwrap_or(0);
        (lo, hi)
    }

    pub fn threat_frequency(&self, threat: &Threat, state: &DetectorState) -> Result<f64, RiskError> {
        let class = self.segment_class(state.road_segment)?;
        threat
            .frequency
            .get(class)
            .copied()
            .ok_or_else(|| RiskError::MissingRate {
                threat: threat.id.clone(),
                class: class.to_string(),
            })
    }

    pub fn hazard_rate(&self, state: &DetectorState) -> Result<f64, RiskError> {
        let mut frequency = 0.0;
        for t in &self.threats {
            frequency += self.threat_frequency(t, state)?;
        }
        let pass = |barriers: &[BarrierSpec]| {
            barriers
                .iter()
                .map(|b| 1.0 - barrier_success_prob(b, state))
                .product::<f64>()
        };
        Ok((frequency * pass(&self.preventive) * pass(&self.mitigation)).max(0.0))
    }

    /// Scores one simulated scene: λ per timestep over `[0, 1]`, its time
    /// average, the weighted infraction score and the combined risk.
    pub fn assess(
        &self,
        trace: &[DetectorState],
        infractions: &InfractionRecord,
        w1: f64,
        w2: f64,
        delta: f64,
    ) -> Result<RiskBreakdown, RiskError> {
        if trace.is_empty() {
            return Err(RiskError::EmptyTrace);
        }
        let steps = trace.len();
        let lambda_trace = trace
            .iter()
            .enumerate()
            .map(|(j, s)| {
                let t = if steps == 1 {
                    SCENE_START
                } else {
                    SCENE_START + (SCENE_END - SCENE_START) * j as f64 / (steps - 1) as f64
                };
                Ok((t, self.hazard_rate(s)?))
            })
            .collect::<Result<Vec<_>, RiskError>>()?;
        let rs = resonate_score(&lambda_trace, SCENE_START, SCENE_END)?;
        let is = infraction_score(infractions, &self.infraction_weights);
        let s_risk = risk_score(rs, is, w1, w2);
        Ok(RiskBreakdown {
            lambda_trace,
            rs,
            is,
            s_risk,
            high_risk: is_high_risk(s_risk, delta),
        })
    }
}

/// Probability of at least one hazard occurrence over `t` at rate `λ`.
pub fn hazard_likelihood(lambda: f64, t: f64) -> f64 {
    -(-lambda * t).exp_m1()
}

/// Trapezoidal time average of `λ` over `[t1, t2]`. The trace is held
/// constant before its first and after its last sample.
pub fn resonate_score(trace: &[(f64, f64)], t1: f64, t2: f64) -> Result<f64, RiskError> {
    if trace.is_empty() {
        return Err(RiskError::EmptyTrace);
    }
    if t1.is_nan() || t2.is_nan() || t2 <= t1 {
        return Err(RiskError::EmptyInterval { t1, t2 });
    }
    let ordered = trace.windows(2).all(|w| w[0].0 <= w[1].0);
    let inside = trace.iter().all(|&(t, _)| t1 <= t && t <= t2);
    if !ordered || !inside {
        return Err(RiskError::BadTimestamps);
    }
    let (first_t, first_l) = trace[0];
    let (last_t, last_l) = trace[trace.len() - 1];
    let mut area = first_l * (first_t - t1) + last_l * (t2 - last_t);
    for w in trace.windows(2) {
        area += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
    }
    Ok(area / (t2 - t1))
}

pub fn infraction_score(infractions: &InfractionRecord, weights: &InfractionWeights) -> f64 {
    weights.stop_sign * infractions.stop_sign as f64
        + weights.red_light * infractions.red_light as f64
        + weights.route_deviation * infractions.route_deviation
}

pub fn risk_score(rs: f64, is: f64, w1: f64, w2: f64) -> f64 {
    w1 * rs + w2 * is
}

/// Strict: a risk exactly at the threshold is not high-risk.
pub fn is_high_risk(s_risk: f64, delta: f64) -> bool {
    s_risk - delta > 0.0
}

pub const MIN_CALIBRATION_RISKS: usize = 20;

/// 95th percentile by the nearest-rank method.
pub fn calibrate_threshold(risks: &[f64]) -> Result<f64, RiskError> {
    if risks.len() < MIN_CALIBRATION_RISKS {
        return Err(RiskError::TooFewCalibrationRisks {
            min: MIN_CALIBRATION_RISKS,
            got: risks.len(),
        });
    }
    if risks.iter().any(|r| !r.is_finite()) {
        return Err(RiskError::NonFiniteRisk);
    }
    let mut sorted = risks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let rank = (95 * n).div_ceil(100);
    Ok(sorted[rank - 1])
}

/// Reads a calibration file: one risk per line, `#` comments and blank lines
/// ignored.
pub fn parse_calibration_risks(text: &str) -> Result<Vec<f64>, Diagnostic> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let v: f64 = body
            .parse()
            .map_err(|_| Diagnostic::new(i + 1, 1, format!("invalid risk value `{body}`")))?;
        out.push(v);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

/// Parses a bow-tie model document:
///
/// ```text
/// bowtie NAME {
///   top_event = "…"; consequence = "…";
///   segments { [lo, hi] -> CLASS; … }
///   threat ID "description"? { CLASS = RATE; … }
///   preventive ID lec_sigmoid { slope = …; midpoint = …; normalizer = …;
///                               sensor_failure_rate = …; blur = …; occlusion = …; }
///   mitigation ID env_lut { edges = [..]; radar_ok = [..]; radar_failed = [..]; }
///   infraction_weights { stop_sign = …; red_light = …; route_deviation = …; }
/// }
/// ```
pub fn parse_bowtie_model(text: &str) -> Result<BowTieModel, Diagnostic> {
    let mut cur = Cursor::new(text)?;
    cur.expect_keyword("bowtie")?;
    let (name, ..) = cur.expect_ident()?;
    cur.expect_punct('{')?;
    let mut model = BowTieModel {
        name,
        top_event: String::new(),
        consequence: String::new(),
        segments: Vec::new(),
        threats: Vec::new(),
        preventive: Vec::new(),
        mitigation: Vec::new(),
        infraction_weights: InfractionWeights::default(),
    };
    let mut segments_at = None;
    let mut ids: Vec<String> = Vec::new();
    while !cur.eat_punct('}') {
        let (kw, l, c) = cur.expect_ident()?;
        match kw.as_str() {
            "top_event" | "consequence" => {
                cur.expect_punct('=')?;
                let s = cur.expect_string()?;
                cur.expect_punct(';')?;
                if kw == "top_event" {
                    model.top_event = s;
                } else {
                    model.consequence = s;
                }
            }
            "segments" => {
                segments_at = Some((l, c));
                cur.expect_punct('{')?;
                while !cur.eat_punct('}') {
                    let at = cur.here();
                    let (lo, hi) = cur.expect_interval()?;
                    cur.expect_arrow()?;
                    let (class, ..) = cur.expect_ident()?;
                    cur.expect_punct(';')?;
                    if lo.fract() != 0.0 || hi.fract() != 0.0 || lo > hi {
                        return Err(Diagnostic::new(at.0, at.1, "segment ranges must be integer intervals with lo <= hi"));
                    }
                    model.segments.push(SegmentClass {
                        lo: lo as i64,
                        hi: hi as i64,
                        class,
                    });
                }
            }
            "threat" => {
                let (id, il, ic) = cur.expect_ident()?;
                if ids.contains(&id) {
                    return Err(Diagnostic::new(il, ic, format!("duplicate id `{id}`")));
                }
                let description = if matches!(cur.peek_kind(), Some(TokenKind::Str(_))) {
                    cur.expect_string()?
                } else {
                    String::new()
                };
                let entries = parse_number_block(&mut cur)?;
                let mut frequency = BTreeMap::new();
                for (class, rate, at) in entries {
                    if rate < 0.0 {
                        return Err(Diagnostic::new(at.0, at.1, "threat rates must be non-negative"));
                    }
                    frequency.insert(class, rate);
                }
                ids.push(id.clone());
                model.threats.push(Threat { id, description, frequency });
            }
            "preventive" | "mitigation" => {
                let (id, il, ic) = cur.expect_ident()?;
                if ids.contains(&id) {
                    return Err(Diagnostic::new(il, ic, format!("duplicate id `{id}`")));
                }
                let barrier = parse_barrier(&mut cur, id.clone())?;
                ids.push(id);
                if kw == "preventive" {
                    model.preventive.push(barrier);
                } else {
                    model.mitigation.push(barrier);
                }
            }
            "infraction_weights" => {
                for (key, v, at) in parse_number_block(&mut cur)? {
                    if v < 0.0 {
                        return Err(Diagnostic::new(at.0, at.1, "infraction weights must be non-negative"));
                    }
                    match key.as_str() {
                        "stop_sign" => model.infraction_weights.stop_sign = v,
                        "red_light" => model.infraction_weights.red_light = v,
                        "route_deviation" => model.infraction_weights.route_deviation = v,
                        _ => return Err(Diagnostic::new(at.0, at.1, format!("unknown infraction `{key}`"))),
                    }
                }
            }
            _ => return Err(Diagnostic::new(l, c, format!("unknown keyword `{kw}`"))),
        }
    }
    cur.expect_end()?;

    let whole = (1, 1);
    if model.threats.is_empty() {
        return Err(Diagnostic::new(whole.0, whole.1, "model needs at least one threat"));
    }
    if model.preventive.is_empty() || model.mitigation.is_empty() {
        return Err(Diagnostic::new(
            whole.0,
            whole.1,
            "model needs at least one preventive and one mitigation barrier",
        ));
    }
    let at = segments_at.unwrap_or(whole);
    if model.segments.is_empty() {
        return Err(Diagnostic::new(at.0, at.1, "model needs a `segments` table"));
    }
    model.segments.sort_by_key(|s| s.lo);
    for w in model.segments.windows(2) {
        if w[1].lo != w[0].hi + 1 {
            return Err(Diagnostic::new(
                at.0,
                at.1,
                format!("segment table has a gap or overlap between {} and {}", w[0].hi, w[1].lo),
            ));
        }
    }
    for t in &model.threats {
        for s in &model.segments {
            if !t.frequency.contains_key(&s.class) {
                return Err(Diagnostic::new(
                    at.0,
                    at.1,
                    format!("threat `{}` has no rate for segment class `{}`", t.id, s.class),
                ));
            }
        }
    }
    Ok(model)
}

/// Name, value and source position of one `name = number;` entry.
type NumberEntry = (String, f64, (usize, usize));

fn parse_number_block(cur: &mut Cursor) -> Result<Vec<NumberEntry>, Diagnostic> {
    cur.expect_punct('{')?;
    let mut out: Vec<(String, f64, (usize, usize))> = Vec::new();
    while !cur.eat_punct('}') {
        let (key, l, c) = cur.expect_ident()?;
        if out.iter().any(|(k, ..)| *k == key) {
            return Err(Diagnostic::new(l, c, format!("duplicate key `{key}`")));
        }
        cur.expect_punct('=')?;
        let v = cur.expect_f64()?;
        cur.expect_punct(';')?;
        out.push((key, v, (l, c)));
    }
    Ok(out)
}

fn parse_barrier(cur: &mut Cursor, id: String) -> Result<BarrierSpec, Diagnostic> {
    let (form, fl, fc) = cur.expect_ident()?;
    let prob = |v: f64, at: (usize, usize), what: &str| {
        if (0.0..=1.0).contains(&v) {
            Ok(v)
        } else {
            Err(Diagnostic::new(at.0, at.1, format!("{what} must lie in [0, 1]")))
        }
    };
    match form.as_str() {
        "lec_sigmoid" => {
            let mut lec = LecSigmoid {
                slope: LEC_SLOPE,
                midpoint: LEC_MIDPOINT,
                detector_probs: BTreeMap::new(),
                normalizer: LEC_NORMALIZER,
                sensor_failure_rate: 1.0,
            };
            for (key, v, at) in parse_number_block(cur)? {
                match key.as_str() {
                    "slope" => lec.slope = v,
                    "midpoint" => lec.midpoint = v,
                    "normalizer" if v > 0.0 => lec.normalizer = v,
                    "normalizer" => return Err(Diagnostic::new(at.0, at.1, "normalizer must be positive")),
                    "sensor_failure_rate" => lec.sensor_failure_rate = prob(v, at, "sensor_failure_rate")?,
                    "blur" => {
                        lec.detector_probs.insert(DetectorFlag::Blur, prob(v, at, "blur")?);
                    }
                    "occlusion" => {
                        lec.detector_probs.insert(DetectorFlag::Occlusion, prob(v, at, "occlusion")?);
                    }
                    _ => return Err(Diagnostic::new(at.0, at.1, format!("unknown lec_sigmoid key `{key}`"))),
                }
            }
            for (flag, name) in [(DetectorFlag::Blur, "blur"), (DetectorFlag::Occlusion, "occlusion")] {
                if !lec.detector_probs.contains_key(&flag) {
                    return Err(Diagnostic::new(fl, fc, format!("barrier `{id}` is missing detector probability `{name}`")));
                }
            }
            Ok(BarrierSpec {
                id,
                form: BarrierForm::LecSigmoid(lec),
            })
        }
        "env_lut" => {
            cur.expect_punct('{')?;
            let mut edges = None;
            let mut ok = None;
            let mut failed = None;
            while !cur.eat_punct('}') {
                let (key, l, c) = cur.expect_ident()?;
                cur.expect_punct('=')?;
                let list = cur.expect_number_list()?;
                cur.expect_punct(';')?;
                let slot = match key.as_str() {
                    "edges" => &mut edges,
                    "radar_ok" => &mut ok,
                    "radar_failed" => &mut failed,
                    _ => return Err(Diagnostic::new(l, c, format!("unknown env_lut key `{key}`"))),
                };
                if slot.replace((list, (l, c))).is_some() {
                    return Err(Diagnostic::new(l, c, format!("duplicate key `{key}`")));
                }
            }
            let missing = |k: &str| Diagnostic::new(fl, fc, format!("barrier `{id}` is missing `{k}`"));
            let (edges, eat) = edges.ok_or_else(|| missing("edges"))?;
            let (ok, oat) = ok.ok_or_else(|| missing("radar_ok"))?;
            let (failed, fat) = failed.ok_or_else(|| missing("radar_failed"))?;
            if edges.len() < 2
                || edges.windows(2).any(|w| w[0] >= w[1])
                || edges[0] > 0.0
                || *edges.last().unwrap() < 100.0
            {
                return Err(Diagnostic::new(
                    eat.0,
                    eat.1,
                    "edges must be strictly increasing and cover precipitation [0, 100]",
                ));
            }
            for (vals, at) in [(&ok, oat), (&failed, fat)] {
                if vals.len() != edges.len() - 1 {
                    return Err(Diagnostic::new(at.0, at.1, "one probability per precipitation bin is required"));
                }
                for &v in vals.iter() {
                    prob(v, at, "bin probabilities")?;
                }
            }
            Ok(BarrierSpec {
                id,
                form: BarrierForm::EnvLut(EnvLut {
                    edges,
                    radar_ok: ok,
                    radar_failed: failed,
                }),
            })
        }
        _ => Err(Diagnostic::new(fl, fc, format!("unknown barrier form `{form}` (expected lec_sigmoid or env_lut)"))),
    }
}

/// The model shipped with the crate.
pub fn bundled_model() -> BowTieModel {
    parse_bowtie_model(crate::BUNDLED_MODEL).expect("bundled bow-tie model is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn lec(blur: f64) -> BarrierSpec {
        BarrierSpec {
            id: "B1".into(),
            form: BarrierForm::LecSigmoid(LecSigmoid::new(blur, 0.4)),
        }
    }

    fn lut(v: f64) -> BarrierSpec {
        BarrierSpec {
            id: "B3".into(),
            form: BarrierForm::EnvLut(EnvLut {
                edges: vec![0.0, 50.0, 100.0],
                radar_ok: vec![v, v],
                radar_failed: vec![v, v],
            }),
        }
    }

    fn two_threat_model(pre: f64, mit: f64) -> BowTieModel {
        BowTieModel {
            name: "m".into(),
            top_event: "top".into(),
            consequence: "c".into(),
            segments: vec![
                SegmentClass { lo: 0, hi: 4, class: "intersection".into() },
                SegmentClass { lo: 5, hi: 9, class: "side_road".into() },
            ],
            threats: vec![
                Threat {
                    id: "T1".into(),
                    description: String::new(),
                    frequency: BTreeMap::from([("intersection".into(), 0.8), ("side_road".into(), 0.1)]),
                },
                Threat {
                    id: "T2".into(),
                    description: String::new(),
                    frequency: BTreeMap::from([("intersection".into(), 0.1), ("side_road".into(), 0.0)]),
                },
            ],
            preventive: vec![lut(pre)],
            mitigation: vec![lut(mit)],
            infraction_weights: InfractionWeights::default(),
        }
    }

    #[test]
    fn sigmoid_examples() {
        assert_eq!(sigmoid_lec(5.754), 0.5);
        assert!(sigmoid_lec(300.0) > 0.999);
        // 1 / (1 + exp(-0.049 * 14.246))
        let expected = 1.0 / (1.0 + (-0.049f64 * 14.246).exp());
        assert!((sigmoid_lec(20.0) - expected).abs() < 1e-15);
        assert!((sigmoid_lec(20.0) - 0.668).abs() < 5e-4);
    }

    #[test]
    fn barrier_examples() {
        let mut s = DetectorState::nominal();
        s.martingale = 5.754;
        assert_eq!(barrier_success_prob(&lec(0.32), &s), 0.5);
        s.blur[1] = true;
        assert!((barrier_success_prob(&lec(0.32), &s) - 0.4).abs() < 1e-15);
        assert_eq!(barrier_success_prob(&lut(1.0), &s), 1.0);
        s.radar_ok = false;
        s.precipitation = 100.0;
        assert_eq!(barrier_success_prob(&lut(1.0), &s), 1.0);
    }

    #[test]
    fn product_term_is_clipped() {
        // P(x|d) above the normalizer inflates the product past 1.
        let mut s = DetectorState::nominal();
        s.martingale = 0.0;
        s.blur = [true; 3];
        let p = barrier_success_prob(&lec(1.0), &s);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn threat_lookup_and_domain() {
        let m = two_threat_model(0.0, 0.0);
        let mut s = DetectorState::nominal();
        s.road_segment = 2;
        assert_eq!(m.threat_frequency(&m.threats[0], &s).unwrap(), 0.8);
        s.road_segment = 7;
        assert_eq!(m.threat_frequency(&m.threats[0], &s).unwrap(), 0.1);
        s.road_segment = 12;
        assert_eq!(m.threat_frequency(&m.threats[0], &s), Err(RiskError::SegmentOutOfDomain(12)));
    }

    #[test]
    fn hazard_rate_examples() {
        let s = DetectorState::nominal();
        assert_eq!(two_threat_model(1.0, 0.3).hazard_rate(&s).unwrap(), 0.0);
        assert!((two_threat_model(0.0, 0.0).hazard_rate(&s).unwrap() - 0.9).abs() < 1e-15);
        let lambda = two_threat_model(0.5, 0.8).hazard_rate(&s).unwrap();
        assert!((lambda - 0.09).abs() < 1e-15, "{lambda}");
    }

    #[test]
    fn likelihood_examples() {
        assert_eq!(hazard_likelihood(0.0, 1.0), 0.0);
        assert!((hazard_likelihood(std::f64::consts::LN_2, 1.0) - 0.5).abs() < 1e-12);
        assert!((hazard_likelihood(0.5, 1.0) - 0.393_469_340_287_366_6).abs() < 1e-12);
    }

    #[test]
    fn resonate_examples() {
        let constant: Vec<_> = (0..60).map(|j| (j as f64 / 59.0, 0.4)).collect();
        assert!((resonate_score(&constant, 0.0, 1.0).unwrap() - 0.4).abs() < 1e-12);
        assert!((resonate_score(&[(0.0, 0.2), (1.0, 0.6)], 0.0, 1.0).unwrap() - 0.4).abs() < 1e-15);
        let ramp: Vec<_> = (0..=100).map(|j| (j as f64 / 100.0, j as f64 / 100.0)).collect();
        assert!((resonate_score(&ramp, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(resonate_score(&[], 0.0, 1.0), Err(RiskError::EmptyTrace));
        assert!(matches!(resonate_score(&[(0.0, 1.0)], 1.0, 1.0), Err(RiskError::EmptyInterval { .. })));
        assert_eq!(resonate_score(&[(0.5, 1.0), (0.2, 1.0)], 0.0, 1.0), Err(RiskError::BadTimestamps));
    }

    #[test]
    fn infraction_and_risk_examples() {
        let w = InfractionWeights::default();
        let rec = |s, r, d| InfractionRecord { stop_sign: s, red_light: r, route_deviation: d };
        assert_eq!(infraction_score(&rec(1, 0, 0.0), &w), 0.7);
        assert_eq!(infraction_score(&rec(0, 0, 0.0), &w), 0.0);
        assert!((infraction_score(&rec(1, 1, 0.5), &w) - 2.0).abs() < 1e-15);
        assert!((risk_score(0.4, 0.3, 1.0, 1.0) - 0.7).abs() < 1e-15);
        assert_eq!(risk_score(0.37, 0.0, 1.0, 1.0), 0.37);
        assert_eq!(risk_score(0.5, 0.5, 2.0, 0.0), 1.0);
        assert!(!is_high_risk(0.65, 0.65));
        assert!(is_high_risk(0.6500001, 0.65));
    }

    #[test]
    fn calibration_examples() {
        let grid: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        assert_eq!(calibrate_threshold(&grid).unwrap(), 0.95);
        assert_eq!(calibrate_threshold(&[0.3; 25]).unwrap(), 0.3);
        assert!(matches!(
            calibrate_threshold(&[0.1; 19]),
            Err(RiskError::TooFewCalibrationRisks { got: 19, .. })
        ));
    }

    #[test]
    fn calibration_file_parsing() {
        let v = parse_calibration_risks("# header\n0.1\n\n0.2 # note\n").unwrap();
        assert_eq!(v, vec![0.1, 0.2]);
        assert_eq!(parse_calibration_risks("0.1\nabc\n").unwrap_err().line, 2);
    }

    #[test]
    fn bundled_model_parses() {
        let m = bundled_model();
        assert!(!m.threats.is_empty());
        assert_eq!(m.infraction_weights, InfractionWeights::default());
        assert_eq!(m.segment_domain(), (0, 9));
    }

    #[test]
    fn model_file_errors() {
        let base = |extra: &str| {
            format!(
                "bowtie m {{ segments {{ [0, 9] -> road; }} threat T {{ road = 1; }} \
                 preventive B1 lec_sigmoid {{ blur = 0.3; occlusion = 0.3; }} \
                 mitigation B2 env_lut {{ edges = [0, 100]; radar_ok = [0.5]; radar_failed = [0.2]; }} {extra} }}"
            )
        };
        assert!(parse_bowtie_model(&base("")).is_ok());
        let cases = [
            (base("threat T2 { other = 1; }"), "no rate"),
            (base("threat T { road = 1; }"), "duplicate id"),
            (base("segments { [12, 14] -> far; }"), "gap"),
            (base("preventive B9 lec_sigmoid { blur = 1.5; occlusion = 0.1; }"), "[0, 1]"),
            (base("preventive B9 lec_sigmoid { occlusion = 0.1; }"), "missing detector"),
            (base("mitigation B9 env_lut { edges = [0, 50]; radar_ok = [1]; radar_failed = [1]; }"), "cover"),
            (base("mitigation B9 env_lut { edges = [0, 100]; radar_ok = [1, 1]; radar_failed = [1]; }"), "per precipitation bin"),
            (base("wibble"), "unknown keyword"),
            ("bowtie m { segments { [0, 9] -> road; } threat T { road = 1; } }".to_string(), "at least one preventive"),
        ];
        for (text, needle) in cases {
            let d = parse_bowtie_model(&text).unwrap_err();
            assert!(d.message.contains(needle), "{needle}: {d}");
        }
    }

    proptest! {
        #[test]
        fn sigmoid_is_monotone(a in 0.0f64..200.0, b in 0.0f64..200.0) {
            prop_assume!(a < b);
            prop_assert!(sigmoid_lec(a) <= sigmoid_lec(b));
            prop_assert!(sigmoid_lec(a) > 0.0 && sigmoid_lec(b) < 1.0 + 1e-15);
        }

        #[test]
        fn likelihood_in_unit_interval(l in 0.0f64..50.0, t in 0.0f64..10.0) {
            let p = hazard_likelihood(l, t);
            prop_assert!((0.0..1.0).contains(&p) || (p == 1.0 && l * t > 30.0));
            prop_assert_eq!(p == 0.0, l * t == 0.0);
        }

        #[test]
        fn constant_trace_averages_to_itself(c in 0.0f64..5.0, n in 1usize..200, t1 in -5.0f64..5.0, len in 0.01f64..10.0) {
            let t2 = t1 + len;
            let trace: Vec<_> = (0..n).map(|j| (t1 + len * j as f64 / n as f64, c)).collect();
            let rs = resonate_score(&trace, t1, t2).unwrap();
            prop_assert!((rs - c).abs() <= 1e-12 * c.max(1.0));
        }

        #[test]
        fn hazard_rate_monotone_in_barriers(
            pre in 0.0f64..=1.0, mit in 0.0f64..=1.0, bump in 0.0f64..=1.0,
        ) {
            let s = DetectorState::nominal();
            let base = two_threat_model(pre, mit).hazard_rate(&s).unwrap();
            let better_pre = two_threat_model((pre + bump).min(1.0), mit).hazard_rate(&s).unwrap();
            let better_mit = two_threat_model(pre, (mit + bump).min(1.0)).hazard_rate(&s).unwrap();
            prop_assert!(better_pre <= base + 1e-15);
            prop_assert!(better_mit <= base + 1e-15);
        }

        #[test]
        fn hazard_rate_monotone_in_threats(extra in 0.0f64..2.0, pre in 0.0f64..=1.0) {
            let s = DetectorState::nominal();
            let m = two_threat_model(pre, 0.2);
            let base = m.hazard_rate(&s).unwrap();
            let mut more = m.clone();
            *more.threats[0].frequency.get_mut("intersection").unwrap() += extra;
            prop_assert!(more.hazard_rate(&s).unwrap() >= base);
        }
    }
}
