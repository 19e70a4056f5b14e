//! Random neighborhood search.
//!
//! Explore with uniform draws until a scene exceeds the threshold; that scene
//! becomes the anchor and subsequent scenes are drawn inside its bounded
//! region while they stay high-risk and the anchor has fewer than `k`
//! explored neighbors within `tau` (normalized ℓ2). Neighborhood samples
//! never replace the anchor.

use rand_chacha::ChaCha8Rng;

use super::{KdTree, Origin, Proposal, Sampler, SamplerError};
use crate::bowtie::is_high_risk;
use crate::dsl::RnsParams;
use crate::scene::{Scene, SceneSpace};

pub struct RnsSampler {
    space: SceneSpace,
    params: RnsParams,
    delta: f64,
    rng: ChaCha8Rng,
    explored: Vec<(Vec<f64>, f64)>,
    index: KdTree,
    /// Raw values of the current anchor scene.
    anchor: Option<Scene>,
}

impl RnsSampler {
    pub fn new(space: SceneSpace, params: RnsParams, delta: f64, rng: ChaCha8Rng) -> Self {
        let dim = space.len();
        Self {
            space,
            params,
            delta,
            rng,
            explored: Vec::new(),
            index: KdTree::new(dim),
            anchor: None,
        }
    }

    /// Explored normalized points and their risks, in evaluation order.
    pub fn explored(&self) -> &[(Vec<f64>, f64)] {
        &self.explored
    }

    pub fn anchor(&self) -> Option<&Scene> {
        self.anchor.as_ref()
    }

    /// Explored points strictly within `tau` of a normalized point.
    pub fn count_neighbors(&self, point: &[f64], tau: f64) -> usize {
        self.index.count_within(point, tau)
    }

    fn explore(&mut self) -> Proposal {
        self.anchor = None;
        Proposal {
            values: self.space.sample_uniform(&mut self.rng),
            origin: Origin::Explore,
        }
    }
}

impl Sampler for RnsSampler {
    fn next(&mut self, last: Option<(&Scene, f64)>) -> Result<Option<Proposal>, SamplerError> {
        let Some((scene, risk)) = last else {
            return Ok(Some(self.explore()));
        };
        let point = self.space.normalize(&scene.values);
        self.index.insert(point.clone());
        self.explored.push((point, risk));

        if !is_high_risk(risk, self.delta) {
            return Ok(Some(self.explore()));
        }
        if self.anchor.is_none() {
            self.anchor = Some(scene.clone());
        }
        let anchor = self.anchor.clone().expect("anchor set above");
        let neighbors = self.count_neighbors(&self.space.normalize(&anchor.values), self.params.tau);
        if neighbors >= self.params.k_neighbors {
            return Ok(Some(self.explore()));
        }
        let region = self.space.bounded_region(&anchor)?;
        Ok(Some(Proposal {
            values: self.space.sample_in_region(&region, &mut self.rng),
            origin: Origin::Exploit { anchor: anchor.values },
        }))
    }
}
