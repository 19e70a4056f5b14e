use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Proposal, Sampler, SamplerError};
use crate::scene::{Scene, SceneSpace};

/// Uniform draw over the whole space; see [`SceneSpace::sample_uniform`].
pub fn sample_random<R: Rng + ?Sized>(rng: &mut R, space: &SceneSpace) -> Vec<f64> {
    space.sample_uniform(rng)
}

pub struct RandomSampler {
    space: SceneSpace,
    rng: ChaCha8Rng,
}

impl RandomSampler {
    pub fn new(space: SceneSpace, rng: ChaCha8Rng) -> Self {
        Self { space, rng }
    }
}

impl Sampler for RandomSampler {
    fn next(&mut self, _last: Option<(&Scene, f64)>) -> Result<Option<Proposal>, SamplerError> {
        Ok(Some(Proposal::passive(sample_random(&mut self.rng, &self.space))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{VariableKind, VariableSpec};
    use rand::SeedableRng;

    #[test]
    fn degenerate_and_fault_domains() {
        let space = SceneSpace::new(vec![
            VariableSpec::new("D", VariableKind::Environmental, 3.0, 3.0),
            VariableSpec::fault("F"),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let v = sample_random(&mut rng, &space);
            assert_eq!(v[0], 3.0);
            assert!(v[1] == 0.0 || v[1] == 1.0);
        }
    }

    #[test]
    fn uniform_mean() {
        let space = SceneSpace::new(vec![VariableSpec::new("P", VariableKind::Environmental, 0.0, 100.0)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mean = (0..10_000).map(|_| sample_random(&mut rng, &space)[0]).sum::<f64>() / 10_000.0;
        assert!((mean - 50.0).abs() < 2.0, "{mean}");
    }
}
