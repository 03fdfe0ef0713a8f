//! Agent preferences: additive step-density valuations behind a general
//! valuation-oracle trait, and the instance container.

use std::fmt;
use std::sync::Arc;

use num_traits::{Signed, Zero};

use crate::cake::{Interval, LayeredPiece, Rational};
use crate::error::{Error, Result};

/// Black-box valuation of layered pieces.
///
/// Implementations must be deterministic and are trusted to be monotone and
/// Lipschitz with the declared constant; [`AdditiveValuation`] is both by
/// construction.
pub trait ValuationOracle: Send + Sync + fmt::Debug {
    fn layer_count(&self) -> usize;

    fn evaluate(&self, piece: &LayeredPiece) -> Result<Rational>;

    /// Declared Lipschitz constant with respect to the symmetric-difference
    /// pseudo-metric.
    fn lipschitz(&self) -> Rational;

    fn as_additive(&self) -> Option<&AdditiveValuation> {
        None
    }
}

/// Constant density `value` on `[from, to]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DensitySegment {
    pub from: Rational,
    pub to: Rational,
    pub value: Rational,
}

impl DensitySegment {
    pub fn new(from: Rational, to: Rational, value: Rational) -> Self {
        Self { from, to, value }
    }
}

/// Additive valuation given by a nonnegative step density on every layer.
///
/// Segments of a layer are stored sorted and partition `[0, 1]`; gaps in the
/// input are filled with density zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdditiveValuation {
    layers: Vec<Vec<DensitySegment>>,
    lipschitz: Rational,
}

impl AdditiveValuation {
    pub fn new(layers: Vec<Vec<DensitySegment>>) -> Result<Self> {
        let mut normalized = Vec::with_capacity(layers.len());
        let mut lipschitz = Rational::zero();
        for (l, mut segs) in layers.into_iter().enumerate() {
            segs.retain(|s| s.from != s.to);
            segs.sort_by(|a, b| a.from.cmp(&b.from));
            let mut out: Vec<DensitySegment> = Vec::with_capacity(segs.len() + 1);
            let mut reach = Rational::zero();
            for s in segs {
                if s.value.is_negative() {
                    return Err(Error::InvalidInput(format!("negative density {} on layer {l}", s.value)));
                }
                Interval::new(s.from.clone(), s.to.clone())
                    .map_err(|e| Error::InvalidInput(format!("layer {l}: {e}")))?;
                if s.from < reach {
                    return Err(Error::InvalidInput(format!(
                        "overlapping density segments on layer {l} at {}",
                        s.from
                    )));
                }
                if s.from > reach {
                    out.push(DensitySegment::new(reach.clone(), s.from.clone(), Rational::zero()));
                }
                if s.value > lipschitz {
                    lipschitz = s.value.clone();
                }
                reach = s.to.clone();
                out.push(s);
            }
            let one = Rational::from_integer(1.into());
            if reach < one {
                out.push(DensitySegment::new(reach, one, Rational::zero()));
            }
            normalized.push(out);
        }
        Ok(Self { layers: normalized, lipschitz })
    }

    /// Density `values[l]` on the whole of layer `l`.
    pub fn constant(values: &[Rational]) -> Self {
        let layers = values
            .iter()
            .map(|v| vec![DensitySegment::new(Rational::zero(), Rational::from_integer(1.into()), v.clone())])
            .collect();
        Self::new(layers).expect("nonnegative constant densities")
    }

    pub fn uniform(m: usize) -> Self {
        Self::constant(&vec![Rational::from_integer(1.into()); m])
    }

    pub fn segments(&self, layer: usize) -> &[DensitySegment] {
        &self.layers[layer]
    }

    pub fn layer_segments(&self) -> &[Vec<DensitySegment>] {
        &self.layers
    }

    /// `∫_lo^hi density_layer`.
    pub fn integral(&self, layer: usize, lo: &Rational, hi: &Rational) -> Rational {
        let mut total = Rational::zero();
        if lo >= hi {
            return total;
        }
        for s in &self.layers[layer] {
            if &s.to <= lo {
                continue;
            }
            if &s.from >= hi {
                break;
            }
            let a = if &s.from > lo { &s.from } else { lo };
            let b = if &s.to < hi { &s.to } else { hi };
            if a < b && !s.value.is_zero() {
                total += (b - a) * &s.value;
            }
        }
        total
    }

    /// Value of the whole layer.
    pub fn layer_total(&self, layer: usize) -> Rational {
        self.layers[layer]
            .iter()
            .fold(Rational::zero(), |acc, s| acc + (&s.to - &s.from) * &s.value)
    }
}

impl ValuationOracle for AdditiveValuation {
    fn layer_count(&self) -> usize {
        self.layers.len()
    }

    fn evaluate(&self, piece: &LayeredPiece) -> Result<Rational> {
        if piece.layer_count() != self.layers.len() {
            return Err(Error::LayerMismatch { expected: self.layers.len(), found: piece.layer_count() });
        }
        let mut total = Rational::zero();
        for (l, p) in piece.layers().iter().enumerate() {
            for iv in p.intervals() {
                total += self.integral(l, iv.lo(), iv.hi());
            }
        }
        Ok(total)
    }

    fn lipschitz(&self) -> Rational {
        self.lipschitz.clone()
    }

    fn as_additive(&self) -> Option<&AdditiveValuation> {
        Some(self)
    }
}

/// Extends an oracle on `m` layers to `m + extra` layers; the added layers are
/// worth nothing.
#[derive(Debug, Clone)]
pub struct PaddedOracle {
    inner: Arc<dyn ValuationOracle>,
    extra: usize,
}

impl PaddedOracle {
    pub fn new(inner: Arc<dyn ValuationOracle>, extra: usize) -> Self {
        Self { inner, extra }
    }
}

impl ValuationOracle for PaddedOracle {
    fn layer_count(&self) -> usize {
        self.inner.layer_count() + self.extra
    }

    fn evaluate(&self, piece: &LayeredPiece) -> Result<Rational> {
        if piece.layer_count() != self.layer_count() {
            return Err(Error::LayerMismatch { expected: self.layer_count(), found: piece.layer_count() });
        }
        let m = self.inner.layer_count();
        self.inner.evaluate(&LayeredPiece::new(piece.layers()[..m].to_vec()))
    }

    fn lipschitz(&self) -> Rational {
        self.inner.lipschitz()
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub name: String,
    pub valuation: Arc<dyn ValuationOracle>,
}

impl Agent {
    pub fn new(name: impl Into<String>, valuation: Arc<dyn ValuationOracle>) -> Self {
        Self { name: name.into(), valuation }
    }

    pub fn additive(name: impl Into<String>, valuation: AdditiveValuation) -> Self {
        Self::new(name, Arc::new(valuation))
    }
}

/// A layered cake with `layers` layers and the agents dividing it. The birthday
/// agent defaults to the last one.
#[derive(Debug, Clone)]
pub struct Instance {
    layers: usize,
    agents: Vec<Agent>,
    birthday: usize,
}

impl Instance {
    pub fn new(layers: usize, agents: Vec<Agent>) -> Result<Self> {
        if layers == 0 {
            return Err(Error::InvalidInput("a cake needs at least one layer".into()));
        }
        for (i, a) in agents.iter().enumerate() {
            let found = a.valuation.layer_count();
            if found != layers {
                return Err(Error::InvalidInput(format!(
                    "agent {i} ({}) values {found} layers, the cake has {layers}",
                    a.name
                )));
            }
        }
        let birthday = agents.len().saturating_sub(1);
        Ok(Self { layers, agents, birthday })
    }

    pub fn with_birthday(mut self, birthday: usize) -> Result<Self> {
        if birthday >= self.agents.len() {
            return Err(Error::InvalidInput(format!(
                "birthday agent {birthday} out of range for {} agents",
                self.agents.len()
            )));
        }
        self.birthday = birthday;
        Ok(self)
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn agent_count(&self) -> usize {
        self.agents.len()
    }

    pub fn birthday(&self) -> usize {
        self.birthday
    }

    pub fn oracle(&self, i: usize) -> &dyn ValuationOracle {
        self.agents[i].valuation.as_ref()
    }

    pub fn non_birthday(&self) -> Vec<usize> {
        (0..self.agents.len()).filter(|&i| i != self.birthday).collect()
    }

    pub fn evaluate(&self, i: usize, piece: &LayeredPiece) -> Result<Rational> {
        self.agents[i].valuation.evaluate(piece)
    }

    /// The same agents on a cake with `extra` worthless layers appended.
    pub fn padded(&self, extra: usize) -> Instance {
        let agents = self
            .agents
            .iter()
            .map(|a| Agent::new(a.name.clone(), Arc::new(PaddedOracle::new(a.valuation.clone(), extra))))
            .collect();
        Instance { layers: self.layers + extra, agents, birthday: self.birthday }
    }
}

/// `K = max_i K_i`.
pub fn lipschitz_bound(instance: &Instance) -> Result<Rational> {
    instance
        .agents
        .iter()
        .map(|a| a.valuation.lipschitz())
        .max()
        .ok_or_else(|| Error::InvalidInput("instance has no agents".into()))
}

/// The layer weakly preferred by more non-birthday agents; ties go to layer 0.
pub fn top_layer(instance: &Instance) -> Result<usize> {
    top_layer_among(instance, &instance.non_birthday())
}

/// [`top_layer`] counted over an explicit agent set.
pub fn top_layer_among(instance: &Instance, agents: &[usize]) -> Result<usize> {
    if instance.layers != 2 {
        return Err(Error::Precondition(format!("top layer needs 2 layers, found {}", instance.layers)));
    }
    let top = LayeredPiece::new(vec![crate::cake::Piece::full(), crate::cake::Piece::empty()]);
    let bottom = LayeredPiece::new(vec![crate::cake::Piece::empty(), crate::cake::Piece::full()]);
    let (mut first, mut second) = (0usize, 0usize);
    for &i in agents {
        let v0 = instance.evaluate(i, &top)?;
        let v1 = instance.evaluate(i, &bottom)?;
        if v0 >= v1 {
            first += 1;
        }
        if v1 >= v0 {
            second += 1;
        }
    }
    Ok(if first >= second { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cake::{int, rat, Piece};

    fn piece2(top: Option<(i64, i64, i64)>, bottom: Option<(i64, i64, i64)>) -> LayeredPiece {
        let mk = |s: Option<(i64, i64, i64)>| match s {
            Some((a, b, d)) => Piece::single(Interval::of(rat(a, d), rat(b, d))),
            None => Piece::empty(),
        };
        LayeredPiece::new(vec![mk(top), mk(bottom)])
    }

    #[test]
    fn evaluate_examples() {
        let uniform = AdditiveValuation::uniform(2);
        assert_eq!(uniform.evaluate(&piece2(Some((0, 1, 2)), Some((1, 2, 2)))).unwrap(), int(1));

        let zero = AdditiveValuation::constant(&[int(0), int(0)]);
        assert_eq!(zero.evaluate(&piece2(Some((0, 1, 1)), Some((0, 1, 1)))).unwrap(), int(0));

        let step = AdditiveValuation::new(vec![
            vec![DensitySegment::new(int(0), rat(1, 2), int(2))],
            vec![],
        ])
        .unwrap();
        assert_eq!(step.evaluate(&piece2(Some((1, 3, 4)), None)).unwrap(), rat(1, 2));
    }

    #[test]
    fn evaluate_rejects_layer_mismatch() {
        let v = AdditiveValuation::uniform(2);
        assert!(v.evaluate(&LayeredPiece::whole(1)).is_err());
    }

    #[test]
    fn gaps_are_filled_and_negative_densities_rejected() {
        let v = AdditiveValuation::new(vec![vec![DensitySegment::new(rat(1, 4), rat(1, 2), int(3))]]).unwrap();
        assert_eq!(v.segments(0).len(), 3);
        assert_eq!(v.layer_total(0), rat(3, 4));
        let bad = AdditiveValuation::new(vec![vec![DensitySegment::new(int(0), int(1), int(-1))]]);
        assert!(bad.is_err());
        let overlapping = AdditiveValuation::new(vec![vec![
            DensitySegment::new(int(0), rat(1, 2), int(1)),
            DensitySegment::new(rat(1, 4), int(1), int(1)),
        ]]);
        assert!(overlapping.is_err());
    }

    fn instance(vals: Vec<AdditiveValuation>) -> Instance {
        let m = vals[0].layer_count();
        Instance::new(m, vals.into_iter().enumerate().map(|(i, v)| Agent::additive(format!("a{i}"), v)).collect())
            .unwrap()
    }

    #[test]
    fn lipschitz_examples() {
        let inst = instance(vec![AdditiveValuation::uniform(1), AdditiveValuation::constant(&[rat(1, 2)])]);
        assert_eq!(lipschitz_bound(&inst).unwrap(), int(1));
        let inst = instance(vec![
            AdditiveValuation::uniform(1),
            AdditiveValuation::new(vec![vec![DensitySegment::new(int(0), rat(1, 5), rat(7, 2))]]).unwrap(),
        ]);
        assert_eq!(lipschitz_bound(&inst).unwrap(), rat(7, 2));
        let empty = Instance::new(1, vec![]).unwrap();
        assert!(lipschitz_bound(&empty).is_err());
    }

    #[test]
    fn top_layer_examples() {
        let u = AdditiveValuation::uniform(2);
        let inst = instance(vec![u.clone(), u.clone(), u.clone()]);
        assert_eq!(top_layer(&inst).unwrap(), 0);

        let bottom_only = AdditiveValuation::constant(&[int(0), int(1)]);
        let top_only = AdditiveValuation::constant(&[int(1), int(0)]);
        let inst = instance(vec![bottom_only.clone(), bottom_only.clone(), top_only.clone(), u.clone()]);
        assert_eq!(top_layer(&inst).unwrap(), 1);

        let inst = instance(vec![top_only, bottom_only, u]);
        assert_eq!(top_layer(&inst).unwrap(), 0);

        let one_layer = instance(vec![AdditiveValuation::uniform(1)]);
        assert!(top_layer(&one_layer).is_err());
    }

    #[test]
    fn padded_oracle_ignores_extra_layers() {
        let inst = instance(vec![AdditiveValuation::uniform(1)]).padded(1);
        assert_eq!(inst.layers(), 2);
        assert_eq!(inst.evaluate(0, &LayeredPiece::whole(2)).unwrap(), int(1));
    }
}
