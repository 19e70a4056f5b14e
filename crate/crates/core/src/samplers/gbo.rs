//! GP-guided search with UCB acquisition restricted to the bounded region of
//! the previous scene.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{gp_fit, GpPosterior, Kernel, Origin, Proposal, Sampler, SamplerError, WarmStart};
use crate::dsl::GboParams;
use crate::scene::{BoundedRegion, Scene, SceneSpace};

/// Draws `candidate_count` scenes uniformly in `region` and returns the one
/// maximizing `μ + √β·σ` at its normalized coordinates. Ties go to the
/// lowest candidate index.
pub fn ucb_argmax<R: Rng + ?Sized>(
    gp: &GpPosterior,
    space: &SceneSpace,
    region: &BoundedRegion,
    beta: f64,
    candidate_count: usize,
    rng: &mut R,
) -> Vec<f64> {
    assert!(candidate_count >= 1, "candidate_count must be at least 1");
    let candidates: Vec<Vec<f64>> = (0..candidate_count)
        .map(|_| space.sample_in_region(region, rng))
        .collect();
    let scores: Vec<f64> = candidates
        .par_iter()
        .map(|c| {
            let (mu, sigma) = gp.predict(&space.normalize(c));
            mu + beta.sqrt() * sigma
        })
        .collect();
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    candidates.into_iter().nth(best).expect("at least one candidate")
}

pub struct GboSampler {
    space: SceneSpace,
    params: GboParams,
    kernel: Kernel,
    rng: ChaCha8Rng,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    /// Random scenes still owed before acquisition starts.
    random_left: usize,
    /// Highest-risk warm-start scene; anchors the first acquisition when no
    /// scene has been emitted yet.
    warm_best: Option<Vec<f64>>,
}

impl GboSampler {
    pub fn new(space: SceneSpace, params: GboParams, rng: ChaCha8Rng, warm_start: WarmStart) -> Result<Self, SamplerError> {
        let mut inputs = Vec::with_capacity(warm_start.len());
        let mut targets = Vec::with_capacity(warm_start.len());
        let mut warm_best: Option<(Vec<f64>, f64)> = None;
        for (values, risk) in warm_start {
            space.validate_scene(&Scene::new(0, values.clone()))?;
            inputs.push(space.normalize(&values));
            targets.push(risk);
            if warm_best.as_ref().is_none_or(|(_, r)| risk > *r) {
                warm_best = Some((values, risk));
            }
        }
        let kernel = Kernel {
            signal_variance: params.signal_variance,
            length_scale: params.length_scale,
            noise: params.noise,
        };
        let random_left = params.init_iterations.saturating_sub(inputs.len());
        Ok(Self {
            space,
            params,
            kernel,
            rng,
            inputs,
            targets,
            random_left,
            warm_best: warm_best.map(|(v, _)| v),
        })
    }

    pub fn training_len(&self) -> usize {
        self.inputs.len()
    }

    fn random(&mut self) -> Proposal {
        Proposal {
            values: self.space.sample_uniform(&mut self.rng),
            origin: Origin::Explore,
        }
    }
}

impl Sampler for GboSampler {
    fn next(&mut self, last: Option<(&Scene, f64)>) -> Result<Option<Proposal>, SamplerError> {
        if let Some((scene, risk)) = last {
            self.inputs.push(self.space.normalize(&scene.values));
            self.targets.push(risk);
        }
        if self.random_left > 0 {
            self.random_left -= 1;
            return Ok(Some(self.random()));
        }
        let predecessor = match (last, &self.warm_best) {
            (Some((scene, _)), _) => scene.values.clone(),
            (None, Some(best)) => best.clone(),
            (None, None) => return Ok(Some(self.random())),
        };
        let gp = gp_fit(&self.inputs, &self.targets, self.kernel)?;
        let region = self.space.bounded_region(&Scene::new(0, predecessor.clone()))?;
        let values = ucb_argmax(
            &gp,
            &self.space,
            &region,
            self.params.beta,
            self.params.candidate_count,
            &mut self.rng,
        );
        Ok(Some(Proposal {
            values,
            origin: Origin::Acquisition { predecessor },
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{VariableKind, VariableSpec};
    use rand::SeedableRng;

    fn space() -> SceneSpace {
        SceneSpace::new(vec![
            VariableSpec::new("P", VariableKind::Environmental, 0.0, 100.0).with_delta(5.0),
            VariableSpec::new("T", VariableKind::Environmental, 0.0, 90.0).with_delta(10.0),
            VariableSpec::fault("f"),
        ])
        .unwrap()
    }

    fn params(init: usize) -> GboParams {
        GboParams {
            init_iterations: init,
            candidate_count: 64,
            ..GboParams::default()
        }
    }

    #[test]
    fn init_phase_is_random_then_bounded() {
        let mut s = GboSampler::new(space(), params(3), ChaCha8Rng::seed_from_u64(1), Vec::new()).unwrap();
        let mut last: Option<Scene> = None;
        for i in 0..10u64 {
            let p = s.next(last.as_ref().map(|sc| (sc, 0.1 * i as f64))).unwrap().unwrap();
            if i < 3 {
                assert_eq!(p.origin, Origin::Explore);
            } else {
                let prev = last.as_ref().unwrap();
                assert_eq!(p.origin, Origin::Acquisition { predecessor: prev.values.clone() });
                assert!((p.values[0] - prev.values[0]).abs() <= 5.0);
                assert!((p.values[1] - prev.values[1]).abs() <= 10.0);
            }
            last = Some(Scene::new(i, p.values));
        }
        assert_eq!(s.training_len(), 9);
    }

    #[test]
    fn warm_start_skips_random_phase() {
        let warm: WarmStart = (0..50)
            .map(|i| (vec![2.0 * i as f64, 45.0, (i % 2) as f64], i as f64 / 50.0))
            .collect();
        let mut s = GboSampler::new(space(), params(10), ChaCha8Rng::seed_from_u64(2), warm).unwrap();
        let p = s.next(None).unwrap().unwrap();
        // anchored at the best warm-start scene
        assert_eq!(p.origin, Origin::Acquisition { predecessor: vec![98.0, 45.0, 1.0] });
        assert!(p.values[0] >= 93.0);
    }

    #[test]
    fn invalid_warm_start_is_rejected() {
        let warm: WarmStart = vec![(vec![200.0, 0.0, 0.0], 1.0)];
        assert!(GboSampler::new(space(), params(1), ChaCha8Rng::seed_from_u64(2), warm).is_err());
    }

    #[test]
    fn beta_zero_picks_max_mean() {
        let sp = SceneSpace::new(vec![VariableSpec::new("x", VariableKind::Environmental, 0.0, 1.0)]).unwrap();
        let gp = gp_fit(&[vec![0.2], vec![0.7]], &[0.1, 1.0], Kernel::default()).unwrap();
        let region = sp.bounded_region(&Scene::new(0, vec![0.5])).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(9);
        let mut b = ChaCha8Rng::seed_from_u64(9);
        let chosen = ucb_argmax(&gp, &sp, &region, 0.0, 100, &mut a);
        let cands: Vec<Vec<f64>> = (0..100).map(|_| sp.sample_in_region(&region, &mut b)).collect();
        let best = cands
            .iter()
            .max_by(|x, y| gp.predict(x).0.total_cmp(&gp.predict(y).0))
            .unwrap();
        assert_eq!(&chosen, best);
        let single = ucb_argmax(&gp, &sp, &region, 30.0, 1, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(single, sp.sample_in_region(&region, &mut ChaCha8Rng::seed_from_u64(9)));
    }
}
