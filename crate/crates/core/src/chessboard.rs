//! Long-knife divisions into `q = p^k` bundles encoded by points of the
//! chessboard complex, with the free action of `(ℤ_p)^k` on them.
//!
//! A maximal rook placement puts column `j` (a bundle index) on row `r_j` of a
//! `(2q − 1) × q` board. A point carries such a placement and barycentric
//! coordinates `x_j` on its rooks. Sorting columns by row gives the order `ρ`
//! of the `q` pieces every layer is cut into; piece `p` has length `x_{ρ(p)}`
//! and in layer `ℓ` is named `η(ρ(p)) + h(ℓ)`. Pieces sharing a name form a
//! bundle.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::assignment::{feasible_flow, tum_assign, BoundedEdge, WeightMatrix};
use crate::cake::{int, GroupAssignment, Interval, LayeredPiece, MultiDivision, Piece, Rational};
use crate::error::{Error, Result};
use crate::valuation::{AdditiveValuation, Agent, DensitySegment, Instance};

/// Element of `(ℤ_p)^k`, most significant digit first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(pub Vec<usize>);

/// The group `(ℤ_p)^k` of order `q` and the bijection `η: [q] → G`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Group {
    p: usize,
    k: usize,
    q: usize,
}

impl Group {
    /// Fails unless `q` is a prime power.
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidInput(format!("q = {q} is not a prime power")));
        }
        let p = (2..=q).find(|d| q.is_multiple_of(*d)).expect("q has a prime factor");
        let (mut rest, mut k) = (q, 0);
        while rest % p == 0 {
            rest /= p;
            k += 1;
        }
        if rest != 1 {
            return Err(Error::InvalidInput(format!("q = {q} is not a prime power")));
        }
        Ok(Self { p, k, q })
    }

    pub fn order(&self) -> usize {
        self.q
    }

    pub fn prime(&self) -> usize {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    /// Base-`p` digits of `j`.
    pub fn eta(&self, j: usize) -> Result<GroupElement> {
        if j >= self.q {
            return Err(Error::OutOfRange(format!("index {j} outside [0, {})", self.q)));
        }
        let mut digits = vec![0; self.k];
        let mut rest = j;
        for d in digits.iter_mut().rev() {
            *d = rest % self.p;
            rest /= self.p;
        }
        Ok(GroupElement(digits))
    }

    pub fn eta_inv(&self, g: &GroupElement) -> usize {
        g.0.iter().fold(0, |acc, &d| acc * self.p + d)
    }

    /// `h(ℓ) = η(ℓ)`, injective on layers `ℓ < q`.
    pub fn h(&self, layer: usize) -> Result<GroupElement> {
        self.eta(layer)
    }

    pub fn add(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement(a.0.iter().zip(&b.0).map(|(x, y)| (x + y) % self.p).collect())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(vec![0; self.k])
    }

    pub fn elements(&self) -> Vec<GroupElement> {
        (0..self.q).map(|j| self.eta(j).expect("in range")).collect()
    }

    /// `η⁻¹(η(a) + η(b))` on indices.
    pub fn add_index(&self, a: usize, b: usize) -> usize {
        let (mut a, mut b, mut place, mut out) = (a, b, 1, 0);
        for _ in 0..self.k {
            out += ((a % self.p + b % self.p) % self.p) * place;
            a /= self.p;
            b /= self.p;
            place *= self.p;
        }
        out
    }
}

/// Non-attacking rooks: column `j` sits on row `rows[j]` of `2q − 1` rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RookPlacement {
    rows: Vec<usize>,
}

impl RookPlacement {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        let q = rows.len();
        if q == 0 {
            return Err(Error::InvalidInput("empty rook placement".into()));
        }
        let mut seen = vec![false; 2 * q - 1];
        for &r in &rows {
            if r >= 2 * q - 1 || std::mem::replace(&mut seen[r], true) {
                return Err(Error::InvalidInput(format!("rows {rows:?} are not distinct rows of a {}-row board", 2 * q - 1)));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn columns(&self) -> usize {
        self.rows.len()
    }

    /// Columns sorted by their row: `ρ(0), ρ(1), …`.
    pub fn order(&self) -> Vec<usize> {
        let mut cols: Vec<usize> = (0..self.rows.len()).collect();
        cols.sort_by_key(|&j| self.rows[j]);
        cols
    }
}

/// Point of the chessboard complex inside a chosen maximal simplex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChessboardPoint {
    placement: RookPlacement,
    coords: Vec<Rational>,
}

impl ChessboardPoint {
    /// `coords[j]` is the weight of the rook in column `j`.
    pub fn new(placement: RookPlacement, coords: Vec<Rational>) -> Result<Self> {
        if coords.len() != placement.columns() {
            return Err(Error::InvalidInput(format!(
                "{} coordinates for {} columns",
                coords.len(),
                placement.columns()
            )));
        }
        if coords.iter().any(|c| c.is_negative()) {
            return Err(Error::InvalidInput("negative barycentric coordinate".into()));
        }
        if coords.iter().sum::<Rational>() != Rational::one() {
            return Err(Error::InvalidInput("barycentric coordinates must sum to 1".into()));
        }
        Ok(Self { placement, coords })
    }

    pub fn placement(&self) -> &RookPlacement {
        &self.placement
    }

    pub fn coords(&self) -> &[Rational] {
        &self.coords
    }
}

/// Bundle index of piece `p` in `layer` when pieces are ordered by `order`.
fn bundle_of_piece(group: &Group, order: &[usize], p: usize, layer: usize) -> usize {
    group.add_index(order[p], layer)
}

/// Division into `q` bundles of an `m`-layer cake.
pub fn decode(group: &Group, x: &ChessboardPoint, m: usize) -> Result<MultiDivision> {
    let q = group.order();
    if x.placement.columns() != q {
        return Err(Error::InvalidInput(format!("placement has {} columns, q = {q}", x.placement.columns())));
    }
    if m > q {
        return Err(Error::Precondition(format!("{m} layers exceed q = {q}")));
    }
    let order = x.placement.order();
    let mut cuts = vec![Rational::zero()];
    for &j in &order {
        let next = cuts.last().expect("nonempty") + &x.coords[j];
        cuts.push(next);
    }
    let mut bundles: Vec<Vec<Piece>> = vec![vec![Piece::empty(); m]; q];
    for layer in 0..m {
        for p in 0..q {
            let b = bundle_of_piece(group, &order, p, layer);
            bundles[b][layer] = Piece::single(Interval::of(cuts[p].clone(), cuts[p + 1].clone()));
        }
    }
    MultiDivision::new(bundles.into_iter().map(LayeredPiece::new).collect())
}

/// `g · x`: column `j` moves to `η⁻¹(g + η(j))`, keeping its row and weight.
pub fn act(group: &Group, g: &GroupElement, x: &ChessboardPoint) -> ChessboardPoint {
    let q = group.order();
    let gi = group.eta_inv(g);
    let mut rows = vec![0; q];
    let mut coords = vec![Rational::zero(); q];
    for j in 0..q {
        let target = group.add_index(gi, j);
        rows[target] = x.placement.rows[j];
        coords[target] = x.coords[j].clone();
    }
    ChessboardPoint { placement: RookPlacement { rows }, coords }
}

/// All `C(2q − 1, q) · q!` maximal rook placements.
pub fn all_placements(q: usize) -> Vec<RookPlacement> {
    fn rec(q: usize, used: &mut Vec<bool>, rows: &mut Vec<usize>, out: &mut Vec<RookPlacement>) {
        if rows.len() == q {
            out.push(RookPlacement { rows: rows.clone() });
            return;
        }
        for r in 0..used.len() {
            if !used[r] {
                used[r] = true;
                rows.push(r);
                rec(q, used, rows, out);
                rows.pop();
                used[r] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(q, &mut vec![false; 2 * q - 1], &mut Vec::new(), &mut out);
    out
}

/// Outcome of [`grid_search`].
#[derive(Debug, Clone)]
pub struct GridSearchResult {
    pub point: ChessboardPoint,
    pub division: MultiDivision,
    /// Smallest `τ` such that every non-birthday agent can be spread over
    /// bundles within `τ` of its best so that each bundle receives `(n − 1)/q`.
    pub tolerance: Rational,
    /// Column sums of `weights` divided by `n − 1`.
    pub popularity: Vec<Rational>,
    /// `max_j |popularity_j − 1/q|`.
    pub balance_distance: Rational,
    /// Popularity when each agent splits itself evenly over its exactly best
    /// bundles.
    pub exact_popularity: Vec<Rational>,
    pub weights: WeightMatrix,
    pub coloring_agents: Vec<usize>,
    /// One assignment per birthday choice, over all instance agents.
    pub assignments: Vec<GroupAssignment>,
    pub orders_scanned: usize,
    pub points_scanned: usize,
}

/// All compositions of `total` into `parts` nonnegative parts, in
/// lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, parts: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(left - a, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(total, parts, &mut Vec::new(), &mut out);
    out
}

fn permutations(q: usize) -> Vec<Vec<usize>> {
    fn rec(q: usize, cur: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if cur.len() == q {
            out.push(cur.clone());
            return;
        }
        for j in 0..q {
            if !used[j] {
                used[j] = true;
                cur.push(j);
                rec(q, cur, used, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(q, &mut Vec::new(), &mut vec![false; q], &mut out);
    out
}

/// Scaled prefix integrals: `table[a][ℓ][t] · (1/D) = ∫_0^{t/R}` of agent
/// `a`'s density on layer `ℓ`, for one common denominator `D`.
struct PrefixTables {
    table: Vec<Vec<Vec<BigInt>>>,
    denominator: BigInt,
}

fn prefix_tables(instance: &Instance, agents: &[usize], resolution: usize) -> Result<PrefixTables> {
    let m = instance.layers();
    let r = int(resolution as i64);
    let mut raw: Vec<Vec<Vec<Rational>>> = Vec::with_capacity(agents.len());
    let mut denominator = BigInt::one();
    for &a in agents {
        let oracle = instance.oracle(a);
        let mut per_layer = Vec::with_capacity(m);
        for l in 0..m {
            let mut row = Vec::with_capacity(resolution + 1);
            for t in 0..=resolution {
                let mut layers = vec![Piece::empty(); m];
                layers[l] = Piece::single(Interval::of(Rational::zero(), int(t as i64) / &r));
                let v = oracle.evaluate(&LayeredPiece::new(layers))?;
                denominator = denominator.lcm(v.denom());
                row.push(v);
            }
            per_layer.push(row);
        }
        raw.push(per_layer);
    }
    let table = raw
        .into_iter()
        .map(|per_layer| {
            per_layer
                .into_iter()
                .map(|row| row.into_iter().map(|v| v.numer() * (&denominator / v.denom())).collect())
                .collect()
        })
        .collect();
    Ok(PrefixTables { table, denominator })
}

/// Hall's condition for sending `q` units from every agent to bundles in its
/// mask, each bundle absorbing exactly `c` units (`c` = number of agents).
fn balanced_fraction_exists(masks: &[u32], q: usize) -> bool {
    let c = masks.len();
    for t in 1u32..(1 << q) {
        let inside = masks.iter().filter(|&&m| m & !t == 0).count();
        if inside * q > c * t.count_ones() as usize {
            return false;
        }
    }
    true
}

fn masks_at(gaps: &[Vec<BigInt>], tau: &BigInt) -> Vec<u32> {
    gaps.iter()
        .map(|row| row.iter().enumerate().filter(|(_, g)| *g <= tau).fold(0u32, |m, (j, _)| m | (1 << j)))
        .collect()
}

/// Minimal feasible tolerance at one point, if below `bound`.
fn min_tolerance(gaps: &[Vec<BigInt>], q: usize, bound: Option<&BigInt>) -> Option<BigInt> {
    let mut candidates: Vec<&BigInt> = gaps.iter().flatten().filter(|g| bound.is_none_or(|b| *g < b)).collect();
    candidates.sort();
    candidates.dedup();
    if candidates.is_empty() {
        return None;
    }
    let last = candidates.len() - 1;
    if !balanced_fraction_exists(&masks_at(gaps, candidates[last]), q) {
        return None;
    }
    let (mut lo, mut hi) = (0usize, last);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if balanced_fraction_exists(&masks_at(gaps, candidates[mid]), q) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Some(candidates[lo].clone())
}

struct Candidate {
    order_index: usize,
    composition_index: usize,
    tau: BigInt,
}

/// Searches long-knife divisions on the grid of cut positions `t / R` over all
/// piece orders for one whose near-best preferences can be balanced over the
/// `q` bundles with the smallest tolerance, then rounds to group assignments
/// for every birthday choice.
pub fn grid_search(instance: &Instance, q: usize, resolution: usize) -> Result<GridSearchResult> {
    let group = Group::new(q)?;
    let m = instance.layers();
    if m > q {
        return Err(Error::Precondition(format!("{m} layers exceed q = {q}")));
    }
    if resolution == 0 {
        return Err(Error::Precondition("resolution must be positive".into()));
    }
    if q > 8 {
        return Err(Error::Precondition(format!("q = {q} is beyond desk-scale search")));
    }
    if instance.agent_count() == 0 {
        return Err(Error::Precondition("instance has no agents".into()));
    }
    let coloring = instance.non_birthday();
    let tables = prefix_tables(instance, &coloring, resolution)?;
    let orders = permutations(q);
    let comps = compositions(resolution, q);
    // bundle of piece p in layer l, per order
    let names: Vec<Vec<Vec<usize>>> = orders
        .iter()
        .map(|o| (0..q).map(|p| (0..m).map(|l| bundle_of_piece(&group, o, p, l)).collect()).collect())
        .collect();

    let gaps_at = |oi: usize, comp: &[usize]| -> Vec<Vec<BigInt>> {
        let mut cuts = Vec::with_capacity(q + 1);
        cuts.push(0usize);
        for &c in comp {
            cuts.push(cuts.last().expect("nonempty") + c);
        }
        tables
            .table
            .iter()
            .map(|per_layer| {
                let mut values = vec![BigInt::zero(); q];
                for p in 0..q {
                    for (l, row) in per_layer.iter().enumerate() {
                        values[names[oi][p][l]] += &row[cuts[p + 1]] - &row[cuts[p]];
                    }
                }
                let best = values.iter().max().expect("q > 0").clone();
                values.into_iter().map(|v| &best - v).collect()
            })
            .collect()
    };

    let best = (0..orders.len())
        .into_par_iter()
        .map(|oi| {
            let mut local: Option<Candidate> = None;
            for (ci, comp) in comps.iter().enumerate() {
                let gaps = gaps_at(oi, comp);
                let tau = if gaps.is_empty() {
                    Some(BigInt::zero()).filter(|_| local.is_none())
                } else {
                    min_tolerance(&gaps, q, local.as_ref().map(|c| &c.tau))
                };
                if let Some(tau) = tau {
                    let done = tau.is_zero();
                    local = Some(Candidate { order_index: oi, composition_index: ci, tau });
                    if done {
                        break;
                    }
                }
            }
            local.expect("the first point always yields a candidate")
        })
        .collect::<Vec<_>>()
        .into_iter()
        .reduce(|a, b| if b.tau < a.tau { b } else { a })
        .expect("at least one order");

    let order = &orders[best.order_index];
    let comp = &comps[best.composition_index];
    let mut rows = vec![0; q];
    for (p, &j) in order.iter().enumerate() {
        rows[j] = p;
    }
    let r = int(resolution as i64);
    let coords: Vec<Rational> = {
        let mut c = vec![Rational::zero(); q];
        for (p, &j) in order.iter().enumerate() {
            c[j] = int(comp[p] as i64) / &r;
        }
        c
    };
    let point = ChessboardPoint::new(RookPlacement::new(rows)?, coords)?;
    let division = decode(&group, &point, m)?;
    let gaps = gaps_at(best.order_index, comp);
    let masks = masks_at(&gaps, &best.tau);
    let tolerance = Rational::new(best.tau.clone(), tables.denominator.clone());

    let c = coloring.len();
    let weights = balanced_weights(&masks, q)?;
    let exact_masks = masks_at(&gaps, &BigInt::zero());
    let cr = int(c.max(1) as i64);
    let popularity: Vec<Rational> = weights.a().iter().map(|a| a / &cr).collect();
    let exact_popularity: Vec<Rational> = (0..q)
        .map(|j| {
            exact_masks
                .iter()
                .filter(|&&mk| mk & (1 << j) != 0)
                .map(|mk| Rational::new(BigInt::one(), BigInt::from(mk.count_ones())))
                .sum::<Rational>()
                / &cr
        })
        .collect();
    let uniform = Rational::new(BigInt::one(), BigInt::from(q));
    let balance_distance = if c == 0 {
        Rational::zero()
    } else {
        popularity.iter().map(|p| (p - &uniform).abs()).max().unwrap_or_else(Rational::zero)
    };

    let n = instance.agent_count();
    let assignments = (0..q)
        .map(|jstar| {
            let g = tum_assign(&weights, jstar)?;
            let mut bundle_of = vec![0; n];
            for (row, &agent) in coloring.iter().enumerate() {
                bundle_of[agent] = g.bundle_of[row];
            }
            bundle_of[instance.birthday()] = jstar;
            Ok(GroupAssignment::new(Some(jstar), bundle_of))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(GridSearchResult {
        point,
        division,
        tolerance,
        popularity,
        balance_distance,
        exact_popularity,
        weights,
        coloring_agents: coloring,
        assignments,
        orders_scanned: orders.len(),
        points_scanned: orders.len() * comps.len(),
    })
}

/// Fractional assignment spreading each agent over its mask so every bundle
/// receives `c/q`, read off an integral flow with `q` units per agent.
fn balanced_weights(masks: &[u32], q: usize) -> Result<WeightMatrix> {
    let c = masks.len();
    let qi = q as i64;
    let (source, sink) = (0, c + q + 1);
    let mut edges = Vec::new();
    for i in 0..c {
        edges.push(BoundedEdge { from: source, to: 1 + i, lo: qi, hi: qi });
    }
    let mut pairs = Vec::new();
    for (i, &mk) in masks.iter().enumerate() {
        for j in 0..q {
            if mk & (1 << j) != 0 {
                pairs.push((i, j, edges.len()));
                edges.push(BoundedEdge { from: 1 + i, to: 1 + c + j, lo: 0, hi: qi });
            }
        }
    }
    for j in 0..q {
        edges.push(BoundedEdge { from: 1 + c + j, to: sink, lo: c as i64, hi: c as i64 });
    }
    let flows = feasible_flow(c + q + 2, source, sink, &edges)
        .ok_or_else(|| Error::Infeasible("near-best sets admit no balanced spread".into()))?;
    let mut rows = vec![vec![Rational::zero(); q]; c];
    for (i, j, e) in pairs {
        rows[i][j] = Rational::new(BigInt::from(flows[e]), BigInt::from(qi));
    }
    let a = vec![Rational::new(BigInt::from(c), BigInt::from(q)); q];
    WeightMatrix::new(rows, a)
}

/// Result of [`equal_size_demo`] on the original one-layer cake.
#[derive(Debug, Clone)]
pub struct EqualSizeResult {
    /// One-layer division; touching subintervals of a bundle are merged.
    pub division: MultiDivision,
    /// The `q` subintervals of each bundle before merging, one per layer of the
    /// folded cake.
    pub subintervals: Vec<Vec<Interval>>,
    pub search: GridSearchResult,
}

impl EqualSizeResult {
    /// Sorted subinterval lengths of bundle `j`.
    pub fn length_profile(&self, j: usize) -> Vec<Rational> {
        let mut lens: Vec<Rational> = self.subintervals[j].iter().map(|iv| iv.len()).collect();
        lens.sort();
        lens
    }
}

/// Folds a one-layer cake into `q` layers (layer `ℓ` is `[ℓ/q, (ℓ+1)/q]`
/// stretched to unit length), searches a division there and unfolds it. Each
/// bundle ends up as `q` subintervals with the same lengths for every bundle.
pub fn equal_size_demo(instance: &Instance, q: usize, resolution: usize) -> Result<EqualSizeResult> {
    if instance.layers() != 1 {
        return Err(Error::Precondition(format!("the demo folds a one-layer cake, found {} layers", instance.layers())));
    }
    let qr = int(q as i64);
    let mut agents = Vec::with_capacity(instance.agent_count());
    for a in instance.agents() {
        let additive = a
            .valuation
            .as_additive()
            .ok_or_else(|| Error::Unsupported(format!("agent {} has a non-additive valuation", a.name)))?;
        let mut layers = Vec::with_capacity(q);
        for l in 0..q {
            let (lo, hi) = (int(l as i64) / &qr, int(l as i64 + 1) / &qr);
            let mut segs = Vec::new();
            for s in additive.segments(0) {
                let from = if s.from > lo { s.from.clone() } else { lo.clone() };
                let to = if s.to < hi { s.to.clone() } else { hi.clone() };
                if from < to {
                    let shift = |t: &Rational| t * &qr - int(l as i64);
                    segs.push(DensitySegment::new(shift(&from), shift(&to), &s.value / &qr));
                }
            }
            layers.push(segs);
        }
        agents.push(Agent::additive(a.name.clone(), AdditiveValuation::new(layers)?));
    }
    let folded = Instance::new(q, agents)?.with_birthday(instance.birthday())?;
    let search = grid_search(&folded, q, resolution)?;
    let mut subintervals = vec![Vec::with_capacity(q); q];
    for (j, bundle) in search.division.bundles().iter().enumerate() {
        for (l, piece) in bundle.layers().iter().enumerate() {
            for iv in piece.intervals() {
                let unfold = |t: &Rational| (t + int(l as i64)) / &qr;
                subintervals[j].push(Interval::of(unfold(iv.lo()), unfold(iv.hi())));
            }
        }
    }
    let division = MultiDivision::new(
        subintervals.iter().map(|ivs| LayeredPiece::new(vec![Piece::new(ivs.clone())])).collect(),
    )?;
    Ok(EqualSizeResult { division, subintervals, search })
}

/// Number of distinct divisions the search distinguishes: orders times grid
/// points.
pub fn search_size(q: usize, resolution: usize) -> Option<usize> {
    let comps = num_integer::binomial(resolution as u128 + q as u128 - 1, q as u128 - 1);
    let perms: u128 = (1..=q as u128).product();
    (comps * perms).to_usize()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    use crate::cake::{check_partition, rat, sym_diff_distance};

    fn point(rows: &[usize], coords: &[(i64, i64)]) -> ChessboardPoint {
        ChessboardPoint::new(
            RookPlacement::new(rows.to_vec()).unwrap(),
            coords.iter().map(|&(a, b)| rat(a, b)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn eta_is_mixed_radix() {
        let g = Group::new(4).unwrap();
        let got: Vec<_> = (0..4).map(|j| g.eta(j).unwrap().0).collect();
        assert_eq!(got, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        let g3 = Group::new(3).unwrap();
        assert_eq!(g3.eta(2).unwrap().0, vec![2]);
        assert_eq!(g3.h(0).unwrap().0, vec![0]);
        assert_eq!(g3.h(1).unwrap().0, vec![1]);
        assert!(g3.eta(3).is_err());
        assert!(Group::new(6).is_err());
        assert_eq!(g.add_index(3, 1), 2);
    }

    #[test]
    fn anti_diagonal_bundles_for_q3() {
        // columns 0, 1, 2 on rows 3, 4, 2: pieces are ordered (2, 0, 1)
        let g = Group::new(3).unwrap();
        let x = point(&[3, 4, 2], &[(1, 3), (1, 3), (1, 3)]);
        assert_eq!(x.placement().order(), vec![2, 0, 1]);
        let d = decode(&g, &x, 3).unwrap();
        let third = |p: i64| Piece::single(Interval::of(rat(p, 3), rat(p + 1, 3)));
        let b = d.bundles().iter().find(|b| b.layer(0) == &third(0)).unwrap();
        assert_eq!(b.layer(1), &third(2));
        assert_eq!(b.layer(2), &third(1));
        assert!(check_partition(&d, 3).all());
    }

    #[test]
    fn concentrated_point_gives_full_width_pieces() {
        let g = Group::new(3).unwrap();
        let d = decode(&g, &point(&[0, 1, 2], &[(0, 1), (1, 1), (0, 1)]), 2).unwrap();
        let full: Vec<_> = d.bundles().iter().map(|b| b.measure()).collect();
        assert_eq!(full.iter().filter(|m| **m == int(1)).count(), 2);
        assert!(check_partition(&d, 2).all());
    }

    #[test]
    fn two_bundles_swap_layers_across_the_cut() {
        let g = Group::new(2).unwrap();
        // column 0 on row 1, column 1 on row 0
        let d = decode(&g, &point(&[1, 0], &[(1, 4), (3, 4)]), 2).unwrap();
        let left = Piece::single(Interval::of(rat(0, 1), rat(3, 4)));
        let right = Piece::single(Interval::of(rat(3, 4), rat(1, 1)));
        let b1 = d.bundles().iter().find(|b| b.layer(0) == &left).unwrap();
        assert_eq!(b1.layer(1), &right);
        let b2 = d.bundles().iter().find(|b| b.layer(0) == &right).unwrap();
        assert_eq!(b2.layer(1), &left);
    }

    #[test]
    fn action_is_equivariant_and_free() {
        let g = Group::new(4).unwrap();
        let x = point(&[5, 1, 6, 3], &[(1, 10), (2, 10), (3, 10), (4, 10)]);
        assert_eq!(act(&g, &g.identity(), &x), x);
        let d = decode(&g, &x, 3).unwrap();
        let mut orbit = Vec::new();
        for e in g.elements() {
            let y = act(&g, &e, &x);
            let dy = decode(&g, &y, 3).unwrap();
            for j in 0..4 {
                let target = g.eta_inv(&g.add(&e, &g.eta(j).unwrap()));
                assert_eq!(d.bundle(j), dy.bundle(target));
            }
            for f in g.elements() {
                assert_eq!(act(&g, &f, &y), act(&g, &g.add(&e, &f), &x));
            }
            orbit.push(y);
        }
        orbit.sort_by_key(|p| p.placement().rows().to_vec());
        orbit.dedup();
        assert_eq!(orbit.len(), 4);
    }

    fn placement_orders(q: usize) -> HashMap<Vec<usize>, usize> {
        let mut counts = HashMap::new();
        for p in all_placements(q) {
            *counts.entry(p.order()).or_insert(0) += 1;
        }
        counts
    }

    #[test]
    fn placements_count() {
        assert_eq!(all_placements(2).len(), 6);
        assert_eq!(all_placements(3).len(), 60);
        assert_eq!(placement_orders(3).len(), 6);
    }

    #[test]
    fn nearby_points_decode_nearby() {
        let g = Group::new(3).unwrap();
        let x = point(&[4, 0, 2], &[(1, 5), (2, 5), (2, 5)]);
        let y = point(&[4, 0, 2], &[(3, 10), (3, 10), (2, 5)]);
        let (dx, dy) = (decode(&g, &x, 2).unwrap(), decode(&g, &y, 2).unwrap());
        let l1: Rational = x.coords().iter().zip(y.coords()).map(|(a, b)| (a - b).abs()).sum();
        for j in 0..3 {
            assert!(sym_diff_distance(dx.bundle(j), dy.bundle(j)).unwrap() <= int(6) * &l1);
        }
    }

    fn uniform(n: usize, m: usize) -> Instance {
        Instance::new(m, (0..n).map(|i| Agent::additive(format!("a{i}"), AdditiveValuation::uniform(m))).collect())
            .unwrap()
    }

    #[test]
    fn two_halves_for_one_uniform_chooser() {
        let r = grid_search(&uniform(2, 1), 2, 64).unwrap();
        assert_eq!(r.tolerance, int(0));
        assert_eq!(r.balance_distance, int(0));
        assert!(r.division.bundles().iter().all(|b| b.measure() == rat(1, 2)));
    }

    #[test]
    fn equal_thirds_for_uniform_agents() {
        let r = grid_search(&uniform(3, 1), 3, 30).unwrap();
        assert_eq!(r.tolerance, int(0));
        assert_eq!(r.popularity, vec![rat(1, 3); 3]);
        assert!(r.division.bundles().iter().all(|b| b.measure() == rat(1, 3)));
    }

    #[test]
    fn demo_halves_into_two_subintervals() {
        let res = equal_size_demo(&uniform(2, 1), 2, 16).unwrap();
        for j in 0..2 {
            assert_eq!(res.subintervals[j].len(), 2);
            assert_eq!(res.division.bundle(j).measure(), rat(1, 2));
        }
        assert_eq!(res.length_profile(0), res.length_profile(1));
        let single = equal_size_demo(&uniform(1, 1), 2, 8).unwrap();
        assert_eq!(single.length_profile(0), single.length_profile(1));
    }
}
