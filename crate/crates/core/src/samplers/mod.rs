//! Next-scene strategies.
//!
//! Every sampler is driven through [`Sampler::next`], which receives the
//! previous scene and its risk (absent on the first call) and returns the
//! next scene, or `None` once a finite sampler is exhausted. Passive samplers
//! ignore the feedback.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dsl::{SamplerConfig, SamplerKind};
use crate::scene::{Scene, SceneError, SceneSpace};

pub mod gbo;
pub mod gp;
pub mod grid;
pub mod halton;
pub mod kdtree;
pub mod random;
pub mod rns;

pub use gbo::{ucb_argmax, GboSampler};
pub use gp::{gp_fit, GpError, GpPosterior, Kernel};
pub use grid::{grid_enumerate, GridSampler};
pub use halton::{centered_l2_discrepancy, halton_point, radical_inverse, sample_halton, HaltonSampler};
pub use kdtree::KdTree;
pub use random::{sample_random, RandomSampler};
pub use rns::RnsSampler;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SamplerError {
    #[error("variable `{0}` has no grid step")]
    MissingGridStep(String),
    #[error("radical inverse base must be at least 2, got {0}")]
    BadBase(u64),
    #[error("Halton sampling supports at most {max} dimensions, got {got}")]
    TooManyDimensions { max: usize, got: usize },
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Why a scene was proposed. Anchor and predecessor values are raw scene
/// values in declaration order.
#[derive(Debug, Clone, PartialEq)]
pub enum Origin {
    Passive,
    Explore,
    Exploit { anchor: Vec<f64> },
    Acquisition { predecessor: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub values: Vec<f64>,
    pub origin: Origin,
}

impl Proposal {
    pub fn passive(values: Vec<f64>) -> Self {
        Self {
            values,
            origin: Origin::Passive,
        }
    }
}

pub trait Sampler: Send {
    fn next(&mut self, last: Option<(&Scene, f64)>) -> Result<Option<Proposal>, SamplerError>;
}

/// Prior evaluations used to warm-start the GP: raw scene values and risk.
pub type WarmStart = Vec<(Vec<f64>, f64)>;

/// Builds the sampler a campaign asks for. `delta` is the high-risk
/// threshold (used by RNS to decide when to exploit).
pub fn build_sampler(
    config: &SamplerConfig,
    space: &SceneSpace,
    seed: u64,
    delta: f64,
    warm_start: WarmStart,
) -> Result<Box<dyn Sampler>, SamplerError> {
    let rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(match config.kind {
        SamplerKind::Random => Box::new(RandomSampler::new(space.clone(), rng)),
        SamplerKind::Grid => Box::new(GridSampler::new(space.clone())?),
        SamplerKind::Halton => Box::new(HaltonSampler::new(space.clone())?),
        SamplerKind::Rns => Box::new(RnsSampler::new(space.clone(), config.rns.clone(), delta, rng)),
        SamplerKind::Gbo => Box::new(GboSampler::new(space.clone(), config.gbo.clone(), rng, warm_start)?),
    })
}
