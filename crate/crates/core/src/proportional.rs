//! Proportional divisions into `q = 2^a · 3^b` bundles by recursive merging.
//!
//! Each level picks a prime factor `q'` of `q`, merges consecutive layers of
//! the current cake into `q'` layers, divides the merged cake envy-freely among
//! `q'` groups, and turns every bundle into a new cake by concatenating its
//! pieces layer by layer. The recursion then divides each new cake among its
//! group with `q / q'` bundles.
//!
//! Cakes below the top level are views: every layer is a concatenation of
//! segments of original layers (or worthless padding), all of one common
//! length `T`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::assignment::{balanced_assign, WeightMatrix};
use crate::cake::{int, GroupAssignment, Interval, LayeredPiece, MultiDivision, Piece, Rational};
use crate::error::{Error, Result};
use crate::fptas::{grid_resolution, solve_balanced, SolveOptions};
use crate::valuation::{AdditiveValuation, Agent, DensitySegment, Instance};

/// `[lo, hi]` of an original layer, or padding of length `hi − lo` when
/// `orig_layer` is `None`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub orig_layer: Option<usize>,
    pub lo: Rational,
    pub hi: Rational,
}

impl Segment {
    fn len(&self) -> Rational {
        &self.hi - &self.lo
    }
}

#[derive(Debug, Clone)]
struct CakeView {
    layers: Vec<Vec<Segment>>,
    total: Rational,
}

impl CakeView {
    fn original(m: usize) -> Self {
        let layers = (0..m).map(|l| vec![Segment { orig_layer: Some(l), lo: Rational::zero(), hi: Rational::one() }]).collect();
        Self { layers, total: Rational::one() }
    }

    /// Segments of `layer` covering view positions `[a, b]`.
    fn restrict(&self, layer: usize, a: &Rational, b: &Rational) -> Vec<Segment> {
        let mut out = Vec::new();
        let mut offset = Rational::zero();
        for s in &self.layers[layer] {
            let end = &offset + s.len();
            let lo = if a > &offset { a.clone() } else { offset.clone() };
            let hi = if b < &end { b.clone() } else { end.clone() };
            if lo < hi {
                out.push(Segment {
                    orig_layer: s.orig_layer,
                    lo: &s.lo + (&lo - &offset),
                    hi: &s.lo + (&hi - &offset),
                });
            }
            offset = end;
        }
        out
    }

    /// The whole view as a piece of the original `m`-layer cake.
    fn to_original(&self, m: usize) -> LayeredPiece {
        let mut per_layer: Vec<Vec<Interval>> = vec![Vec::new(); m];
        for s in self.layers.iter().flatten() {
            if let Some(l) = s.orig_layer {
                per_layer[l].push(Interval::of(s.lo.clone(), s.hi.clone()));
            }
        }
        LayeredPiece::new(per_layer.into_iter().map(Piece::new).collect())
    }
}

/// Layer merge for one prime factor: merged layer `ℓ'` takes `counts[ℓ']`
/// consecutive layers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergePlan {
    pub qprime: usize,
    pub counts: Vec<usize>,
}

impl MergePlan {
    /// `⌈m/q'⌉` layers for the first `m mod q'` merged layers, `⌊m/q'⌋` for
    /// the rest.
    pub fn new(m: usize, qprime: usize) -> Self {
        let (base, rem) = m.div_rem(&qprime);
        let counts = (0..qprime).map(|l| base + usize::from(l < rem)).collect();
        Self { qprime, counts }
    }

    /// Constituent layer indices of every merged layer.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut next = 0;
        self.counts
            .iter()
            .map(|&c| {
                let g = (next..next + c).collect();
                next += c;
                g
            })
            .collect()
    }
}

fn additive_of(agent: &Agent) -> Result<&AdditiveValuation> {
    agent
        .valuation
        .as_additive()
        .ok_or_else(|| Error::Unsupported(format!("agent {} has a non-additive valuation", agent.name)))
}

/// Density of `agent` on the merged layer made of `constituents`, rescaled
/// from `[0, T]` to `[0, 1]`.
fn merged_density(view: &CakeView, valuation: &AdditiveValuation, constituents: &[usize]) -> Vec<DensitySegment> {
    let t = &view.total;
    let mut pieces: Vec<(Rational, Rational, Rational)> = Vec::new();
    for &c in constituents {
        let mut offset = Rational::zero();
        for s in &view.layers[c] {
            if let Some(l) = s.orig_layer {
                for d in valuation.segments(l) {
                    let a = if d.from > s.lo { &d.from } else { &s.lo };
                    let b = if d.to < s.hi { &d.to } else { &s.hi };
                    if a < b && !d.value.is_zero() {
                        let u0 = (&offset + (a - &s.lo)) / t;
                        let u1 = (&offset + (b - &s.lo)) / t;
                        pieces.push((u0, u1, &d.value * t));
                    }
                }
            }
            offset += s.len();
        }
    }
    let mut cuts: Vec<Rational> = pieces.iter().flat_map(|(a, b, _)| [a.clone(), b.clone()]).collect();
    cuts.sort();
    cuts.dedup();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let value: Rational = pieces.iter().filter(|(a, b, _)| a <= &w[0] && &w[1] <= b).map(|(_, _, v)| v).sum();
        if !value.is_zero() {
            out.push(DensitySegment::new(w[0].clone(), w[1].clone(), value));
        }
    }
    out
}

/// Instance on the merged cake of `view` with one layer per entry of
/// `layer_sources` (`None` is a worthless layer).
fn merged_instance(
    instance: &Instance,
    agents: &[usize],
    view: &CakeView,
    groups: &[Vec<usize>],
    layer_sources: &[Option<usize>],
) -> Result<Instance> {
    let mut sub = Vec::with_capacity(agents.len());
    for &i in agents {
        let agent = &instance.agents()[i];
        let valuation = additive_of(agent)?;
        let layers = layer_sources
            .iter()
            .map(|src| match src {
                Some(g) => merged_density(view, valuation, &groups[*g]),
                None => Vec::new(),
            })
            .collect();
        sub.push(Agent::additive(agent.name.clone(), AdditiveValuation::new(layers)?));
    }
    Instance::new(layer_sources.len(), sub)
}

/// Merges the layers of `instance` into `qprime` layers; merged layers with no
/// constituent are worthless.
pub fn merge_layers(instance: &Instance, qprime: usize) -> Result<(Instance, MergePlan)> {
    if qprime == 0 {
        return Err(Error::InvalidInput("cannot merge into zero layers".into()));
    }
    let plan = MergePlan::new(instance.layers(), qprime);
    let groups = plan.groups();
    let view = CakeView::original(instance.layers());
    let sources: Vec<Option<usize>> = (0..qprime).map(|g| (!groups[g].is_empty()).then_some(g)).collect();
    let agents: Vec<usize> = (0..instance.agent_count()).collect();
    let merged = merged_instance(instance, &agents, &view, &groups, &sources)?;
    Ok((merged.with_birthday(instance.birthday())?, plan))
}

/// Long-knife division of a two-layer cake at `x`: bundle 0 is
/// `top [0, x] ∪ bottom [x, 1]`, bundle 1 the rest.
pub fn long_knife_division(x: &Rational) -> Result<MultiDivision> {
    let (zero, one) = (Rational::zero(), Rational::one());
    let iv = |a: &Rational, b: &Rational| Interval::new(a.clone(), b.clone()).map(Piece::single);
    MultiDivision::new(vec![
        LayeredPiece::new(vec![iv(&zero, x)?, iv(x, &one)?]),
        LayeredPiece::new(vec![iv(x, &one)?, iv(&zero, x)?]),
    ])
}

#[derive(Debug, Clone)]
pub struct LongKnifeSolution {
    pub division: MultiDivision,
    /// Grid position of the output knife.
    pub knife: Rational,
    /// Interpolated position where exactly half of the agents prefer bundle 0.
    pub star_x: Rational,
    pub grid: u64,
    pub weights: WeightMatrix,
    pub assignment: GroupAssignment,
}

/// Two groups of `⌊n/2⌋` and `⌈n/2⌉` agents on a two-layer cake with one long
/// knife.
///
/// Ties go to bundle 0 when `x ≤ 1/2` and to bundle 1 otherwise, so the share
/// of agents preferring bundle 0 at `x = 0` and at `x = 1` add up to one and
/// the share crosses `1/2` somewhere on the grid.
pub fn solve_two_group_long_knife(instance: &Instance, epsilon: &Rational) -> Result<LongKnifeSolution> {
    if instance.layers() != 2 {
        return Err(Error::Precondition(format!("the long knife needs 2 layers, found {}", instance.layers())));
    }
    let c = instance.agent_count();
    if c == 0 {
        return Err(Error::Precondition("instance has no agents".into()));
    }
    let k = crate::valuation::lipschitz_bound(instance)?;
    let grid = grid_resolution(&k, epsilon, 4)?;
    let n = int(grid as i64);
    let half = Rational::new(BigInt::one(), BigInt::from(2));
    let colors_at = |step: u64| -> Result<Vec<usize>> {
        let x = int(step as i64) / &n;
        let d = long_knife_division(&x)?;
        (0..c)
            .map(|i| {
                let v0 = instance.evaluate(i, d.bundle(0))?;
                let v1 = instance.evaluate(i, d.bundle(1))?;
                Ok(match v0.cmp(&v1) {
                    std::cmp::Ordering::Greater => 0,
                    std::cmp::Ordering::Less => 1,
                    std::cmp::Ordering::Equal => usize::from(x > half),
                })
            })
            .collect()
    };
    let gap = |colors: &[usize]| Rational::new(BigInt::from(colors.iter().filter(|&&j| j == 0).count()), BigInt::from(c)) - &half;

    let (mut lo, mut hi) = (0u64, grid);
    let (mut c_lo, mut c_hi) = (colors_at(lo)?, colors_at(hi)?);
    let (mut g_lo, g_hi) = (gap(&c_lo), gap(&c_hi));
    let mut exact = None;
    if g_lo.is_zero() {
        exact = Some((lo, c_lo.clone()));
    } else if g_hi.is_zero() {
        exact = Some((hi, c_hi.clone()));
    } else if g_lo.is_positive() == g_hi.is_positive() {
        return Err(Error::Invariant(format!("preference share does not cross 1/2 ({g_lo} and {g_hi} off)")));
    }
    while exact.is_none() && hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let c_mid = colors_at(mid)?;
        let g_mid = gap(&c_mid);
        if g_mid.is_zero() {
            exact = Some((mid, c_mid));
        } else if g_mid.is_positive() == g_lo.is_positive() {
            lo = mid;
            c_lo = c_mid;
            g_lo = g_mid;
        } else {
            hi = mid;
            c_hi = c_mid;
        }
    }
    let mut rows = vec![vec![Rational::zero(); 2]; c];
    let (knife_step, star_x) = match exact {
        Some((step, colors)) => {
            for (r, &j) in colors.iter().enumerate() {
                rows[r][j] = Rational::one();
            }
            (step, int(step as i64) / &n)
        }
        None => {
            let g_hi = gap(&c_hi);
            let t = &g_lo / (&g_lo - &g_hi);
            for r in 0..c {
                rows[r][c_lo[r]] += Rational::one() - &t;
                rows[r][c_hi[r]] += &t;
            }
            let step = if t <= half { lo } else { hi };
            (step, (int(lo as i64) + &t) / &n)
        }
    };
    let weights = WeightMatrix::new(rows, vec![Rational::new(BigInt::from(c), BigInt::from(2)); 2])?;
    let assignment = balanced_assign(&weights)?;
    let knife = int(knife_step as i64) / &n;
    Ok(LongKnifeSolution { division: long_knife_division(&knife)?, knife, star_x, grid, weights, assignment })
}

#[derive(Debug, Clone)]
pub struct ProportionalSolution {
    pub division: MultiDivision,
    /// Bundle of every agent.
    pub bundle_of: Vec<usize>,
    pub epsilon_total: Rational,
    /// Prime factors in the order they were consumed.
    pub factors: Vec<usize>,
}

/// Prime factors of `q`, largest first; fails on factors other than 2 and 3.
pub fn split_factors(q: usize) -> Result<Vec<usize>> {
    if q == 0 {
        return Err(Error::InvalidInput("q must be positive".into()));
    }
    let mut rest = q;
    let mut out = Vec::new();
    for p in [3, 2] {
        while rest.is_multiple_of(p) {
            rest /= p;
            out.push(p);
        }
    }
    if rest != 1 {
        return Err(Error::Unsupported(format!("q = {q} has a prime factor other than 2 and 3")));
    }
    Ok(out)
}

struct Recursion<'a> {
    instance: &'a Instance,
    epsilon: Rational,
    options: SolveOptions,
    out: Vec<(LayeredPiece, Vec<usize>)>,
}

impl Recursion<'_> {
    fn solve(&mut self, view: CakeView, agents: Vec<usize>, factors: &[usize]) -> Result<()> {
        let m = self.instance.layers();
        let q: usize = factors.iter().product();
        if factors.is_empty() {
            self.out.push((view.to_original(m), agents));
            return Ok(());
        }
        if view.total.is_zero() {
            for j in 0..q {
                let members = agents.iter().skip(j).step_by(q).copied().collect();
                self.out.push((LayeredPiece::empty(m), members));
            }
            return Ok(());
        }
        let qprime = factors[0];
        let plan = MergePlan::new(view.layers.len(), qprime);
        let groups = plan.groups();
        let mut sources: Vec<Option<usize>> = (0..qprime).filter(|&g| !groups[g].is_empty()).map(Some).collect();
        if sources.len() > 2 {
            return Err(Error::Unsupported(format!(
                "splitting into 3 groups needs at most 2 non-empty merged layers, found {}",
                sources.len()
            )));
        }
        while sources.len() < 2 {
            sources.push(None);
        }
        let sub = merged_instance(self.instance, &agents, &view, &groups, &sources)?;
        let (division, sub_bundle_of) = match qprime {
            3 => {
                let s = solve_balanced(&sub, &self.epsilon, &self.options)?;
                (s.division, s.assignments[0].bundle_of.clone())
            }
            2 => {
                let s = solve_two_group_long_knife(&sub, &self.epsilon)?;
                (s.division, s.assignment.bundle_of)
            }
            other => return Err(Error::Unsupported(format!("no divider for {other} groups"))),
        };
        let depth = plan.counts.iter().copied().max().unwrap_or(0);
        for j in 0..qprime {
            let members: Vec<usize> =
                agents.iter().zip(&sub_bundle_of).filter(|(_, &b)| b == j).map(|(&a, _)| a).collect();
            let bundle = division.bundle(j);
            let mut layers: Vec<Vec<Segment>> = vec![Vec::new(); depth];
            let mut total = Rational::zero();
            for (s, src) in sources.iter().enumerate() {
                let Some(g) = src else { continue };
                for iv in bundle.layer(s).intervals() {
                    let (a, b) = (iv.lo() * &view.total, iv.hi() * &view.total);
                    if a >= b {
                        continue;
                    }
                    for (l, layer) in layers.iter_mut().enumerate() {
                        match groups[*g].get(l) {
                            Some(&constituent) => layer.extend(view.restrict(constituent, &a, &b)),
                            None => layer.push(Segment { orig_layer: None, lo: Rational::zero(), hi: &b - &a }),
                        }
                    }
                    total += &b - &a;
                }
            }
            self.solve(CakeView { layers, total }, members, &factors[1..])?;
        }
        Ok(())
    }
}

/// Divides the cake into `q` bundles and assigns every agent a bundle worth
/// at least `1/q` of its value for the whole cake, up to `epsilon`. Group sizes
/// differ by at most one.
pub fn solve_proportional(instance: &Instance, q: usize, epsilon: &Rational) -> Result<ProportionalSolution> {
    solve_proportional_with(instance, q, epsilon, &SolveOptions::default())
}

pub fn solve_proportional_with(
    instance: &Instance,
    q: usize,
    epsilon: &Rational,
    options: &SolveOptions,
) -> Result<ProportionalSolution> {
    let (m, n) = (instance.layers(), instance.agent_count());
    // one bundle is the whole cake, whatever the layer count
    if q == 0 || (q > 1 && !(m <= q && q <= n)) {
        return Err(Error::Precondition(format!("need m ≤ q ≤ n, got m = {m}, q = {q}, n = {n}")));
    }
    if !epsilon.is_positive() {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    for a in instance.agents() {
        additive_of(a)?;
    }
    let factors = split_factors(q)?;
    let per_level = epsilon / int(factors.len().max(1) as i64);
    let mut rec = Recursion { instance, epsilon: per_level, options: options.clone(), out: Vec::new() };
    rec.solve(CakeView::original(m), (0..n).collect(), &factors)?;
    let mut bundle_of = vec![0; n];
    let mut bundles = Vec::with_capacity(q);
    for (j, (piece, members)) in rec.out.into_iter().enumerate() {
        for i in members {
            bundle_of[i] = j;
        }
        bundles.push(piece);
    }
    Ok(ProportionalSolution { division: MultiDivision::new(bundles)?, bundle_of, epsilon_total: epsilon.clone(), factors })
}
