//! Exhaustive cartesian enumeration in declaration-major order (the last
//! declared variable varies fastest). Points violating a dependency
//! restriction are skipped.

use super::{Proposal, Sampler, SamplerError};
use crate::scene::{Scene, SceneSpace, VariableKind};

/// Grid points of every variable, inclusive of both ends when the step
/// divides the range.
fn axes(space: &SceneSpace) -> Result<Vec<Vec<f64>>, SamplerError> {
    space
        .vars()
        .iter()
        .map(|v| {
            if v.kind == VariableKind::Fault {
                return Ok(vec![0.0, 1.0]);
            }
            if v.is_degenerate() {
                return Ok(vec![v.lower]);
            }
            let step = v.grid_step.ok_or_else(|| SamplerError::MissingGridStep(v.name.clone()))?;
            let count = (v.span() / step + 1e-9).floor() as usize + 1;
            Ok((0..count)
                .map(|i| (v.lower + i as f64 * step).min(v.upper))
                .filter(|x| v.kind != VariableKind::Structural || x.fract() == 0.0)
                .collect())
        })
        .collect()
}

pub struct GridIter {
    space: SceneSpace,
    axes: Vec<Vec<f64>>,
    cursor: Option<Vec<usize>>,
}

impl Iterator for GridIter {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        loop {
            let idx = self.cursor.as_mut()?;
            let values: Vec<f64> = idx.iter().zip(&self.axes).map(|(&i, a)| a[i]).collect();
            // advance the odometer
            let mut d = idx.len();
            loop {
                if d == 0 {
                    self.cursor = None;
                    break;
                }
                d -= 1;
                idx[d] += 1;
                if idx[d] < self.axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
            if self.space.validate_scene(&Scene::new(0, values.clone())).is_ok() {
                return Some(values);
            }
        }
    }
}

pub fn grid_enumerate(space: &SceneSpace) -> Result<GridIter, SamplerError> {
    let axes = axes(space)?;
    let cursor = axes.iter().all(|a| !a.is_empty()).then(|| vec![0; axes.len()]);
    Ok(GridIter {
        space: space.clone(),
        axes,
        cursor,
    })
}

pub struct GridSampler {
    iter: GridIter,
}

impl GridSampler {
    pub fn new(space: SceneSpace) -> Result<Self, SamplerError> {
        Ok(Self {
            iter: grid_enumerate(&space)?,
        })
    }
}

impl Sampler for GridSampler {
    fn next(&mut self, _last: Option<(&Scene, f64)>) -> Result<Option<Proposal>, SamplerError> {
        Ok(self.iter.next().map(Proposal::passive))
    }
}
