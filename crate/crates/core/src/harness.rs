//! Deterministic stand-in for the simulator.
//!
//! A [`Landscape`] is a ground-truth intensity field over the normalized
//! scene space: a sum of Gaussian bumps plus additive boosts for active fault
//! variables. Evaluating a scene turns its intensity into a per-timestep
//! detector trace (OOD martingale, camera flags, radar health) and a set of
//! infractions, which the bow-tie model then scores.
//!
//! Bump centers name the variables they constrain; unnamed variables do not
//! enter the bump distance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::bowtie::{DetectorFlag, DetectorState, InfractionRecord};
use crate::lexer::{Cursor, Diagnostic};
use crate::scene::{Scene, SceneError, SceneSpace, VariableKind};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HarnessError {
    #[error("landscape refers to unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("landscape variable `{name}` must be a {expected} variable")]
    WrongKind { name: String, expected: &'static str },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    /// Normalized center coordinate per named variable.
    pub center: Vec<(String, f64)>,
    pub width: f64,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultEffect {
    pub variable: String,
    /// Center-camera detector flag raised while the fault is active.
    pub flag: DetectorFlag,
    /// Additive intensity contribution while active.
    pub boost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfractionThresholds {
    pub stop: f64,
    pub red_light: f64,
    pub deviation: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub name: String,
    pub bumps: Vec<Bump>,
    pub faults: Vec<FaultEffect>,
    pub base_martingale: f64,
    pub martingale_gain: f64,
    pub noise_sigma: f64,
    /// Radar reports failure above this intensity.
    pub radar_cutoff: f64,
    pub thresholds: InfractionThresholds,
    /// Chance of each infraction once its threshold is exceeded.
    pub infraction_probability: f64,
    /// Stop-sign and red-light opportunities per scene; each one is an
    /// independent draw, so the counts range over `0..=infraction_events`.
    pub infraction_events: u32,
    pub trace_length: usize,
    pub precipitation: Option<String>,
    pub road_segment: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationOutcome {
    pub detector_trace: Vec<DetectorState>,
    pub infractions: InfractionRecord,
    pub intensity: f64,
}

/// Maps a scene to a simulated outcome. Implementations must be pure in
/// `(scene, scene_seed)`.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, scene: &Scene, scene_seed: u64) -> Result<EvaluationOutcome, HarnessError>;
}

#[derive(Debug, Clone)]
struct BoundBump {
    dims: Vec<(usize, f64)>,
    two_w2: f64,
    amplitude: f64,
}

/// A landscape resolved against a concrete scene space.
#[derive(Debug, Clone)]
pub struct SyntheticEvaluator {
    landscape: Landscape,
    space: SceneSpace,
    bumps: Vec<BoundBump>,
    faults: Vec<(usize, DetectorFlag, f64)>,
    precipitation: Option<usize>,
    road_segment: Option<usize>,
}

impl Landscape {
    pub fn bind(&self, space: &SceneSpace) -> Result<SyntheticEvaluator, HarnessError> {
        let index = |name: &str| space.index_of(name).ok_or_else(|| HarnessError::UnknownVariable(name.into()));
        let bumps = self
            .bumps
            .iter()
            .map(|b| {
                let dims = b
                    .center
                    .iter()
                    .map(|(n, c)| Ok((index(n)?, *c)))
                    .collect::<Result<Vec<_>, HarnessError>>()?;
                Ok(BoundBump {
                    dims,
                    two_w2: 2.0 * b.width * b.width,
                    amplitude: b.amplitude,
                })
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let faults = self
            .faults
            .iter()
            .map(|f| {
                let i = index(&f.variable)?;
                if space.vars()[i].kind != VariableKind::Fault {
                    return Err(HarnessError::WrongKind {
                        name: f.variable.clone(),
                        expected: "fault",
                    });
                }
                Ok((i, f.flag, f.boost))
            })
            .collect::<Result<Vec<_>, HarnessError>>()?;
        let precipitation = self.precipitation.as_deref().map(index).transpose()?;
        let road_segment = self.road_segment.as_deref().map(index).transpose()?;
        if let Some(i) = road_segment {
            if space.vars()[i].kind != VariableKind::Structural {
                return Err(HarnessError::WrongKind {
                    name: space.vars()[i].name.clone(),
                    expected: "structural",
                });
            }
        }
        Ok(SyntheticEvaluator {
            landscape: self.clone(),
            space: space.clone(),
            bumps,
            faults,
            precipitation,
            road_segment,
        })
    }
}

impl SyntheticEvaluator {
    pub fn landscape(&self) -> &Landscape {
        &self.landscape
    }

    pub fn space(&self) -> &SceneSpace {
        &self.space
    }

    /// Index of the variable feeding the detector's road segment.
    pub fn road_segment_index(&self) -> Option<usize> {
        self.road_segment
    }

    /// Intensity at a normalized point: Gaussian bumps plus active fault boosts.
    pub fn landscape_intensity(&self, point: &[f64]) -> f64 {
        let bumps: f64 = self
            .bumps
            .iter()
            .map(|b| {
                let d2: f64 = b.dims.iter().map(|&(i, c)| (point[i] - c).powi(2)).sum();
                b.amplitude * (-d2 / b.two_w2).exp()
            })
            .sum();
        let boosts: f64 = self
            .faults
            .iter()
            .filter(|&&(i, ..)| point[i] >= 0.5)
            .map(|&(.., boost)| boost)
            .sum();
        bumps + boosts
    }

    pub fn evaluate_scene(&self, scene: &Scene, scene_seed: u64) -> Result<EvaluationOutcome, HarnessError> {
        self.space.validate_scene(scene)?;
        let l = &self.landscape;
        let intensity = self.landscape_intensity(&self.space.normalize(&scene.values));
        let mut rng = ChaCha8Rng::seed_from_u64(scene_seed);

        let mut blur = [false; 3];
        let mut occlusion = [false; 3];
        for &(i, flag, _) in &self.faults {
            if scene.values[i] >= 0.5 {
                match flag {
                    DetectorFlag::Blur => blur[1] = true,
                    DetectorFlag::Occlusion => occlusion[1] = true,
                }
            }
        }
        let precipitation = self.precipitation.map_or(0.0, |i| scene.values[i].clamp(0.0, 100.0));
        let road_segment = self.road_segment.map_or(0, |i| scene.values[i].round() as i64);
        let radar_ok = intensity <= l.radar_cutoff;

        let mean = l.base_martingale + l.martingale_gain * intensity;
        let noise = (l.noise_sigma > 0.0).then(|| Normal::new(0.0, l.noise_sigma).expect("validated sigma"));
        let detector_trace = (0..l.trace_length)
            .map(|_| {
                let eps = noise.as_ref().map_or(0.0, |n| n.sample(&mut rng));
                DetectorState {
                    martingale: (mean + eps).max(0.0),
                    blur,
                    occlusion,
                    radar_ok,
                    precipitation,
                    road_segment,
                }
            })
            .collect();

        let p = l.infraction_probability;
        let t = l.thresholds;
        let mut count = |threshold: f64| {
            (0..l.infraction_events)
                .map(|_| rng.random::<f64>())
                .filter(|&u| intensity > threshold && u < p)
                .count() as u32
        };
        let stop_sign = count(t.stop);
        let red_light = count(t.red_light);
        let u_dev: f64 = rng.random();
        let infractions = InfractionRecord {
            stop_sign,
            red_light,
            route_deviation: if intensity > t.deviation && u_dev < p {
                (intensity - t.deviation).min(1.0)
            } else {
                0.0
            },
        };
        Ok(EvaluationOutcome {
            detector_trace,
            infractions,
            intensity,
        })
    }
}

impl Evaluator for SyntheticEvaluator {
    fn evaluate(&self, scene: &Scene, scene_seed: u64) -> Result<EvaluationOutcome, HarnessError> {
        self.evaluate_scene(scene, scene_seed)
    }
}

/// Parses a landscape document:
///
/// ```text
/// landscape NAME {
///   bump { center { VAR = COORD; … } width = W; amplitude = A; }
///   fault VAR { flag = blur|occlusion; boost = B; }
///   base_martingale = …; martingale_gain = …; noise_sigma = …;
///   radar_cutoff = …; infraction_probability = …; infraction_events = N;
///   trace_length = N;
///   thresholds { stop = …; red_light = …; deviation = …; }
///   precipitation = VAR; road_segment = VAR;
/// }
/// ```
pub fn parse_landscape(text: &str) -> Result<Landscape, Diagnostic> {
    let mut cur = Cursor::new(text)?;
    cur.expect_keyword("landscape")?;
    let (name, ..) = cur.expect_ident()?;
    cur.expect_punct('{')?;
    let mut l = Landscape {
        name,
        bumps: Vec::new(),
        faults: Vec::new(),
        base_martingale: 0.0,
        martingale_gain: 1.0,
        noise_sigma: 0.0,
        radar_cutoff: f64::INFINITY,
        thresholds: InfractionThresholds {
            stop: f64::INFINITY,
            red_light: f64::INFINITY,
            deviation: f64::INFINITY,
        },
        infraction_probability: 0.0,
        infraction_events: 1,
        trace_length: 60,
        precipitation: None,
        road_segment: None,
    };
    while !cur.eat_punct('}') {
        let (kw, l0, c0) = cur.expect_ident()?;
        let at = (l0, c0);
        let bad = |msg: &str| Diagnostic::new(at.0, at.1, format!("`{kw}` {msg}"));
        match kw.as_str() {
            "bump" => {
                cur.expect_punct('{')?;
                let mut center = None;
                let mut width = None;
                let mut amplitude = None;
                while !cur.eat_punct('}') {
                    let (key, kl, kc) = cur.expect_ident()?;
                    match key.as_str() {
                        "center" => {
                            cur.expect_punct('{')?;
                            let mut coords: Vec<(String, f64)> = Vec::new();
                            while !cur.eat_punct('}') {
                                let (var, vl, vc) = cur.expect_ident()?;
                                cur.expect_punct('=')?;
                                let c = cur.expect_f64()?;
                                cur.expect_punct(';')?;
                                if !(0.0..=1.0).contains(&c) {
                                    return Err(Diagnostic::new(vl, vc, "bump centers must lie in the unit cube"));
                                }
                                if coords.iter().any(|(v, _)| *v == var) {
                                    return Err(Diagnostic::new(vl, vc, format!("duplicate coordinate `{var}`")));
                                }
                                coords.push((var, c));
                            }
                            center = Some(coords);
                        }
                        "width" => {
                            cur.expect_punct('=')?;
                            let w = cur.expect_f64()?;
                            cur.expect_punct(';')?;
                            if w <= 0.0 {
                                return Err(Diagnostic::new(kl, kc, "bump width must be positive"));
                            }
                            width = Some(w);
                        }
                        "amplitude" => {
                            cur.expect_punct('=')?;
                            let a = cur.expect_f64()?;
                            cur.expect_punct(';')?;
                            if !(a > 0.0 && a <= 1.0) {
                                return Err(Diagnostic::new(kl, kc, "bump amplitude must lie in (0, 1]"));
                            }
                            amplitude = Some(a);
                        }
                        _ => return Err(Diagnostic::new(kl, kc, format!("unknown bump key `{key}`"))),
                    }
                }
                let missing = |k: &str| Diagnostic::new(at.0, at.1, format!("bump is missing `{k}`"));
                l.bumps.push(Bump {
                    center: center.ok_or_else(|| missing("center"))?,
                    width: width.ok_or_else(|| missing("width"))?,
                    amplitude: amplitude.ok_or_else(|| missing("amplitude"))?,
                });
            }
            "fault" => {
                let (variable, ..) = cur.expect_ident()?;
                cur.expect_punct('{')?;
                let mut flag = None;
                let mut boost = 0.0;
                while !cur.eat_punct('}') {
                    let (key, kl, kc) = cur.expect_ident()?;
                    cur.expect_punct('=')?;
                    match key.as_str() {
                        "flag" => {
                            let (f, fl, fc) = cur.expect_ident()?;
                            flag = Some(match f.as_str() {
                                "blur" => DetectorFlag::Blur,
                                "occlusion" => DetectorFlag::Occlusion,
                                _ => return Err(Diagnostic::new(fl, fc, format!("unknown detector flag `{f}`"))),
                            });
                        }
                        "boost" => {
                            boost = cur.expect_f64()?;
                            if boost < 0.0 {
                                return Err(Diagnostic::new(kl, kc, "fault boost must be non-negative"));
                            }
                        }
                        _ => return Err(Diagnostic::new(kl, kc, format!("unknown fault key `{key}`"))),
                    }
                    cur.expect_punct(';')?;
                }
                l.faults.push(FaultEffect {
                    variable,
                    flag: flag.ok_or_else(|| bad("is missing `flag`"))?,
                    boost,
                });
            }
            "thresholds" => {
                cur.expect_punct('{')?;
                while !cur.eat_punct('}') {
                    let (key, kl, kc) = cur.expect_ident()?;
                    cur.expect_punct('=')?;
                    let v = cur.expect_f64()?;
                    cur.expect_punct(';')?;
                    match key.as_str() {
                        "stop" => l.thresholds.stop = v,
                        "red_light" => l.thresholds.red_light = v,
                        "deviation" => l.thresholds.deviation = v,
                        _ => return Err(Diagnostic::new(kl, kc, format!("unknown threshold `{key}`"))),
                    }
                }
            }
            "precipitation" | "road_segment" => {
                cur.expect_punct('=')?;
                let (var, ..) = cur.expect_ident()?;
                cur.expect_punct(';')?;
                if kw == "precipitation" {
                    l.precipitation = Some(var);
                } else {
                    l.road_segment = Some(var);
                }
            }
            "infraction_events" => {
                cur.expect_punct('=')?;
                let n = cur.expect_u64()?;
                cur.expect_punct(';')?;
                l.infraction_events = u32::try_from(n).map_err(|_| bad("is too large"))?;
            }
            "trace_length" => {
                cur.expect_punct('=')?;
                let n = cur.expect_u64()?;
                cur.expect_punct(';')?;
                if n < 2 {
                    return Err(bad("must be at least 2"));
                }
                l.trace_length = usize::try_from(n).map_err(|_| bad("is too large"))?;
            }
            "base_martingale" | "martingale_gain" | "noise_sigma" | "radar_cutoff" | "infraction_probability" => {
                cur.expect_punct('=')?;
                let v = cur.expect_f64()?;
                cur.expect_punct(';')?;
                match kw.as_str() {
                    "base_martingale" if v >= 0.0 => l.base_martingale = v,
                    "martingale_gain" if v > 0.0 => l.martingale_gain = v,
                    "noise_sigma" if v >= 0.0 => l.noise_sigma = v,
                    "radar_cutoff" => l.radar_cutoff = v,
                    "infraction_probability" if (0.0..=1.0).contains(&v) => l.infraction_probability = v,
                    "martingale_gain" => return Err(bad("must be positive")),
                    "infraction_probability" => return Err(bad("must lie in [0, 1]")),
                    _ => return Err(bad("must be non-negative")),
                }
            }
            _ => return Err(Diagnostic::new(at.0, at.1, format!("unknown keyword `{kw}`"))),
        }
    }
    cur.expect_end()?;
    Ok(l)
}

pub fn bundled_landscape() -> Landscape {
    parse_landscape(crate::BUNDLED_LANDSCAPE).expect("bundled landscape is valid")
}
