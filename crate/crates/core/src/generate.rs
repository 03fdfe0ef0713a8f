//! Random step-density instances.

use rand::seq::index::sample;
use rand::Rng;

use crate::cake::{int, rat, Rational};
use crate::error::{Error, Result};
use crate::valuation::{AdditiveValuation, Agent, DensitySegment, Instance};

/// Shape of generated instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InstanceShape {
    pub agents: usize,
    pub layers: usize,
    /// Constant-density segments per layer.
    pub segments: usize,
    /// Densities are integers in `[0, max_density]`.
    pub max_density: i64,
}

fn random_layer<R: Rng + ?Sized>(rng: &mut R, segments: usize, max_density: i64) -> Vec<DensitySegment> {
    let den = 4 * segments as i64;
    let mut cuts: Vec<i64> = sample(rng, (den - 1) as usize, segments - 1).into_iter().map(|c| c as i64 + 1).collect();
    cuts.sort_unstable();
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(den);
    bounds
        .windows(2)
        .map(|w| DensitySegment::new(rat(w[0], den), rat(w[1], den), int(rng.gen_range(0..=max_density))))
        .collect()
}

/// Additive valuation with random step densities; at least one segment of
/// some layer is positive.
pub fn random_valuation<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> Result<AdditiveValuation> {
    if shape.segments == 0 || shape.layers == 0 || shape.max_density < 1 {
        return Err(Error::InvalidInput(format!("degenerate instance shape {shape:?}")));
    }
    loop {
        let layers: Vec<Vec<DensitySegment>> =
            (0..shape.layers).map(|_| random_layer(rng, shape.segments, shape.max_density)).collect();
        if layers.iter().flatten().any(|s| s.value > Rational::from_integer(0.into())) {
            return AdditiveValuation::new(layers);
        }
    }
}

pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, shape: &InstanceShape) -> Result<Instance> {
    let agents = (0..shape.agents)
        .map(|i| Ok(Agent::additive(format!("agent{}", i + 1), random_valuation(rng, shape)?)))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(shape.layers, agents)
}
