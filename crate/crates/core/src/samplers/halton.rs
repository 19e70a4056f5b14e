//! Halton low-discrepancy sequence. Dimension `j` uses the `j`-th prime as
//! its base; indices start at 1.

use super::{Proposal, Sampler, SamplerError};
use crate::scene::{Scene, SceneSpace};

pub const PRIMES: [u64; 25] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Digit reversal of `index` in `base`, placed after the radix point.
pub fn radical_inverse(mut index: u64, base: u64) -> Result<f64, SamplerError> {
    if base < 2 {
        return Err(SamplerError::BadBase(base));
    }
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    Ok(r)
}

pub fn halton_point(index: u64, dim: usize) -> Result<Vec<f64>, SamplerError> {
    if dim > PRIMES.len() {
        return Err(SamplerError::TooManyDimensions {
            max: PRIMES.len(),
            got: dim,
        });
    }
    PRIMES[..dim].iter().map(|&b| radical_inverse(index, b)).collect()
}

/// The `index`-th Halton point mapped onto a feasible scene.
pub fn sample_halton(index: u64, space: &SceneSpace) -> Result<Vec<f64>, SamplerError> {
    Ok(space.scene_from_unit(&halton_point(index, space.len())?))
}

/// Centered L2 discrepancy (squared) of a point set in the unit cube.
pub fn centered_l2_discrepancy(points: &[Vec<f64>]) -> f64 {
    let n = points.len() as f64;
    let d = points.first().map_or(0, Vec::len) as i32;
    let single: f64 = points
        .iter()
        .map(|x| {
            x.iter()
                .map(|&xk| {
                    let a = (xk - 0.5).abs();
                    1.0 + 0.5 * a - 0.5 * a * a
                })
                .product::<f64>()
        })
        .sum();
    let mut pair = 0.0;
    for xi in points {
        for xj in points {
            pair += xi
                .iter()
                .zip(xj)
                .map(|(&a, &b)| 1.0 + 0.5 * (a - 0.5).abs() + 0.5 * (b - 0.5).abs() - 0.5 * (a - b).abs())
                .product::<f64>();
        }
    }
    (13.0f64 / 12.0).powi(d) - 2.0 / n * single + pair / (n * n)
}

/// Deterministic and independent of the campaign seed.
pub struct HaltonSampler {
    space: SceneSpace,
    index: u64,
}

impl HaltonSampler {
    pub fn new(space: SceneSpace) -> Result<Self, SamplerError> {
        halton_point(1, space.len())?;
        Ok(Self { space, index: 0 })
    }
}

impl Sampler for HaltonSampler {
    fn next(&mut self, _last: Option<(&Scene, f64)>) -> Result<Option<Proposal>, SamplerError> {
        self.index += 1;
        Ok(Some(Proposal::passive(sample_halton(self.index, &self.space)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Reverses base-`b` digits with string manipulation.
    fn oracle(index: u64, b: u64) -> f64 {
        let mut digits = Vec::new();
        let mut i = index;
        while i > 0 {
            digits.push(i % b);
            i /= b;
        }
        digits
            .iter()
            .enumerate()
            .map(|(k, &dg)| dg as f64 / (b as f64).powi(k as i32 + 1))
            .sum()
    }

    #[test]
    fn radical_inverse_examples() {
        assert_eq!(radical_inverse(0, 7).unwrap(), 0.0);
        assert_eq!(radical_inverse(1, 2).unwrap(), 0.5);
        assert_eq!(radical_inverse(3, 2).unwrap(), 0.75);
        // 5 = 12 in base 3 -> 0.21 in base 3 = 2/3 + 1/9
        assert!((radical_inverse(5, 3).unwrap() - 7.0 / 9.0).abs() < 1e-15);
        assert_eq!(radical_inverse(1, 1), Err(SamplerError::BadBase(1)));
        for b in [2, 3, 5, 7, 11] {
            for i in 0..500 {
                assert!((radical_inverse(i, b).unwrap() - oracle(i, b)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn first_point_and_range() {
        let p = halton_point(1, 2).unwrap();
        assert_eq!(p[0], 0.5);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-15);
        for i in 1..1000 {
            assert!(halton_point(i, 25).unwrap().iter().all(|&x| (0.0..1.0).contains(&x)));
        }
        assert!(halton_point(1, 26).is_err());
    }

    #[test]
    fn discrepancy_of_perfect_center_point() {
        // one point at the center of the unit interval
        let d = centered_l2_discrepancy(&[vec![0.5]]);
        assert!((d - (13.0 / 12.0 - 2.0 + 1.0)).abs() < 1e-15);
    }
}
