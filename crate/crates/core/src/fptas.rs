//! Double binary search for an approximately envy-free three-bundle division.
//!
//! Stage 1 halves the range of long-knife positions while the crossings of the
//! two bounding basic lines with `B^δ` lie on opposite sides of `ω^δ`. Stage 2
//! halves the strip between the two crossing edges until one basic square
//! remains whose boundary crossings still lie on both sides. The exact preimage
//! of `ω` in that square yields the fractional preferences, which are rounded
//! to group assignments by [`tum_assign`](crate::assignment::tum_assign).

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::assignment::{balanced_assign, tum_assign, WeightMatrix};
use crate::cake::{int, GroupAssignment, MultiDivision, Rational};
use crate::error::{Error, Result};
use crate::field::{Edge, EdgeCrossing, PreferenceField, Side, SimplexPoint, Square, TargetGeometry, Vertex};
use crate::valuation::{lipschitz_bound, top_layer_among, Instance};

/// `C` in the oracle-call budget `C · n · (⌈log₂ N⌉ + 1)²`.
pub const ORACLE_BUDGET_CONSTANT: u64 = 42;

/// Grid midpoint `⌈(lo + hi) / 2⌉` of the index range `[lo, hi]`.
pub fn med(lo: u64, hi: u64) -> Result<u64> {
    if hi < lo + 2 {
        return Err(Error::Precondition(format!("interval [{lo}, {hi}] is a single grid step or less")));
    }
    Ok((lo + hi).div_ceil(2))
}

/// `max(1, ⌈factor · K / ε⌉)`.
pub fn grid_resolution(k: &Rational, epsilon: &Rational, factor: i64) -> Result<u64> {
    if !epsilon.is_positive() {
        return Err(Error::Precondition(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = (int(factor) * k / epsilon).ceil().to_integer();
    let n = n.to_u64().ok_or_else(|| Error::Precondition(format!("grid resolution {n} is too large")))?;
    Ok(n.max(1))
}

/// `⌈log₂ N⌉`.
pub fn ceil_log2(n: u64) -> u64 {
    if n <= 1 {
        0
    } else {
        64 - u64::from((n - 1).leading_zeros())
    }
}

pub fn oracle_budget(agents: usize, grid: u64) -> u64 {
    let l = ceil_log2(grid) + 1;
    ORACLE_BUDGET_CONSTANT * agents as u64 * l * l
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    /// Color each probed vertex's agents on the rayon pool.
    pub parallel: bool,
}

/// Point of the found square where `f̄` equals `ω`, as a convex combination of
/// grid vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preimage {
    pub vertices: Vec<Vertex>,
    pub weights: Vec<Rational>,
}

impl Preimage {
    pub fn point(&self, grid: u64) -> (Rational, Rational) {
        let n = int(grid as i64);
        let mut x = Rational::zero();
        let mut y = Rational::zero();
        for (v, w) in self.vertices.iter().zip(&self.weights) {
            x += w * int(v.i as i64);
            y += w * int(v.k as i64);
        }
        (x / &n, y / n)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    /// Three-bundle division in the instance's layer order.
    pub division: MultiDivision,
    pub anchor_vertex: Vertex,
    pub grid: u64,
    pub star_point: (Rational, Rational),
    /// Rows follow `coloring_agents`.
    pub weights: WeightMatrix,
    pub coloring_agents: Vec<usize>,
    /// One assignment per birthday choice `j*`, over all instance agents. A
    /// solve without birthday agent holds a single assignment.
    pub assignments: Vec<GroupAssignment>,
    pub epsilon: Rational,
    pub oracle_call_count: u64,
    /// Instance layer used as the top layer of the two-knife encoding.
    pub top_layer: usize,
}

/// Barycentric coordinates of `target` in the triangle spanned by `images`,
/// if it lies in it. Degenerate triangles are searched edge by edge.
pub fn barycentric_preimage(images: &[SimplexPoint; 3], target: &SimplexPoint) -> Option<[Rational; 3]> {
    let d = |p: &SimplexPoint, q: &SimplexPoint, c: usize| &p.0[c] - &q.0[c];
    let (p1, p2, p3) = (&images[0], &images[1], &images[2]);
    let (a1, a2) = (d(p1, p3, 0), d(p1, p3, 1));
    let (b1, b2) = (d(p2, p3, 0), d(p2, p3, 1));
    let (r1, r2) = (d(target, p3, 0), d(target, p3, 1));
    let det = &a1 * &b2 - &a2 * &b1;
    if !det.is_zero() {
        let l1 = (&r1 * &b2 - &r2 * &b1) / &det;
        let l2 = (&a1 * &r2 - &a2 * &r1) / &det;
        let l3 = Rational::one() - &l1 - &l2;
        let all_nonneg = [&l1, &l2, &l3].iter().all(|l| !l.is_negative());
        return all_nonneg.then_some([l1, l2, l3]);
    }
    for t in 0..3 {
        if &images[t] == target {
            let mut l: [Rational; 3] = Default::default();
            l[t] = Rational::one();
            return Some(l);
        }
    }
    for (u, v) in [(0, 1), (1, 2), (0, 2)] {
        let (pu, pv) = (&images[u], &images[v]);
        let Some(c) = (0..3).find(|&c| pu.0[c] != pv.0[c]) else { continue };
        let s = d(target, pu, c) / d(pv, pu, c);
        if s.is_negative() || s > Rational::one() {
            continue;
        }
        if &pu.lerp(pv, &s) == target {
            let mut l: [Rational; 3] = Default::default();
            l[u] = Rational::one() - &s;
            l[v] = s;
            return Some(l);
        }
    }
    None
}

/// Exact preimage of `ω` inside `square`.
pub fn preimage_of_omega(field: &PreferenceField<'_>, square: Square) -> Result<Preimage> {
    let omega = &field.geometry().omega;
    for tri in square.triangles() {
        let images = [field.fbar(tri[0])?, field.fbar(tri[1])?, field.fbar(tri[2])?];
        if let Some(l) = barycentric_preimage(&images, omega) {
            return Ok(Preimage { vertices: tri.to_vec(), weights: l.to_vec() });
        }
    }
    Err(Error::Invariant(format!("ω = {omega} has no preimage in square ({}, {})", square.i, square.k)))
}

enum Found {
    Square(Square),
    Center(EdgeCrossing),
}

fn sides(crossings: &[EdgeCrossing]) -> (bool, bool, Option<&EdgeCrossing>) {
    let left = crossings.iter().any(|c| c.side == Side::Left);
    let right = crossings.iter().any(|c| c.side == Side::Right);
    (left, right, crossings.iter().find(|c| c.side == Side::Center))
}

/// Boundary edges of `[a, a+1] × [lo, hi]` that can carry crossings: both
/// horizontal sides and the vertical edges touching the four corners.
fn corner_edges(a: u64, lo: u64, hi: u64) -> Vec<Edge> {
    let b = a + 1;
    let v = Vertex::new;
    let mut edges = vec![
        Edge::new(v(a, lo), v(b, lo)),
        Edge::new(v(a, hi), v(b, hi)),
        Edge::new(v(a, lo), v(a, lo + 1)),
        Edge::new(v(b, lo), v(b, lo + 1)),
        Edge::new(v(a, hi - 1), v(a, hi)),
        Edge::new(v(b, hi - 1), v(b, hi)),
    ];
    let mut seen = Vec::new();
    edges.retain(|e| {
        let fresh = !seen.contains(e);
        seen.push(*e);
        fresh
    });
    edges
}

fn locate(field: &PreferenceField<'_>) -> Result<Found> {
    let n = field.grid();
    let (mut a, mut b) = (0u64, n);
    let mut cross_a = field.line_crossing(a)?;
    let mut cross_b = field.line_crossing(b)?;
    for c in [&cross_a, &cross_b] {
        if c.side == Side::Center {
            return Ok(Found::Center(center_of(field, c.edge(), c)?));
        }
    }
    if cross_a.side == cross_b.side {
        return Err(Error::Invariant(format!(
            "crossings of the boundary lines lie on the same side ({:?}) of ω^δ",
            cross_a.side
        )));
    }
    while b - a > 1 {
        let mid = med(a, b)?;
        let c = field.line_crossing(mid)?;
        if c.side == Side::Center {
            return Ok(Found::Center(center_of(field, c.edge(), &c)?));
        }
        if c.side != cross_a.side {
            b = mid;
            cross_b = c;
        } else {
            a = mid;
            cross_a = c;
        }
        if cross_a.side == cross_b.side {
            return Err(Error::Invariant(format!("stage 1 lost opposite sides on [{a}, {b}]")));
        }
    }

    let (ka, kb) = (cross_a.row, cross_b.row);
    if ka == kb {
        return Ok(Found::Square(Square { i: a, k: ka }));
    }
    let (mut lo, mut hi) = (ka.min(kb), ka.max(kb) + 1);
    while hi - lo > 1 {
        let mid = med(lo, hi)?;
        let lower = field.segment_crossings(&corner_edges(a, lo, mid))?;
        let (l, r, center) = sides(&lower);
        if let Some(c) = center {
            return Ok(Found::Center(c.clone()));
        }
        if l && r {
            hi = mid;
        } else {
            let upper = field.segment_crossings(&corner_edges(a, mid, hi))?;
            let (l, r, center) = sides(&upper);
            if let Some(c) = center {
                return Ok(Found::Center(c.clone()));
            }
            if !(l && r) {
                return Err(Error::Invariant(format!("stage 2: neither half of rows [{lo}, {hi}] carries both sides")));
            }
            lo = mid;
        }
    }
    let square = Square { i: a, k: lo };
    let boundary = field.segment_crossings(&square.boundary())?;
    let (l, r, center) = sides(&boundary);
    if let Some(c) = center {
        return Ok(Found::Center(c.clone()));
    }
    if !(l && r) {
        return Err(Error::Invariant(format!("final square ({a}, {lo}) does not capture ω^δ")));
    }
    Ok(Found::Square(square))
}

fn center_of(field: &PreferenceField<'_>, edge: Edge, c: &crate::field::LineCrossing) -> Result<EdgeCrossing> {
    let crossing = field.edge_crossing(edge)?;
    crossing.ok_or_else(|| Error::Invariant(format!("basic line {} lost its crossing", c.column)))
}

/// Square whose boundary contains `edge`; ties go to the square above or to
/// the right unless that leaves the grid.
fn square_of_edge(edge: &Edge, grid: u64) -> Square {
    let i = edge.a.i.min(edge.b.i);
    let k = edge.a.k.min(edge.b.k);
    if edge.is_vertical() {
        Square { i: i.min(grid - 1), k }
    } else {
        Square { i, k: k.min(grid - 1) }
    }
}

/// Basic squares having `edge` on their boundary.
fn squares_beside(edge: &Edge, grid: u64) -> Vec<Square> {
    let i = edge.a.i.min(edge.b.i);
    let k = edge.a.k.min(edge.b.k);
    let across = if edge.is_vertical() { i } else { k };
    [across.checked_sub(1), Some(across)]
        .into_iter()
        .flatten()
        .filter(|&at| at < grid)
        .map(|at| if edge.is_vertical() { Square { i: at, k } } else { Square { i, k: at } })
        .collect()
}

enum Mode {
    Birthday,
    Balanced,
}

fn run(
    instance: &Instance,
    solve_on: &Instance,
    epsilon: &Rational,
    coloring: Vec<usize>,
    top: usize,
    geometry: TargetGeometry,
    mode: Mode,
    options: &SolveOptions,
) -> Result<Solution> {
    let k = lipschitz_bound(instance)?;
    let grid = grid_resolution(&k, epsilon, 6)?;
    let field = PreferenceField::new(solve_on, coloring.clone(), top, grid, geometry)?.with_parallel(options.parallel);
    let preimage = match locate(&field)? {
        Found::Square(sq) => preimage_of_omega(&field, sq)?,
        Found::Center(c) if field.geometry().delta.is_zero() => {
            let (a, b) = (c.edge.a, c.edge.b);
            Preimage { vertices: vec![a, b], weights: vec![Rational::one() - &c.t, c.t.clone()] }
        }
        // ω^δ on an edge puts ω in the image of a neighbouring triangle
        Found::Center(c) => {
            let mut found = None;
            for sq in squares_beside(&c.edge, grid) {
                if let Ok(p) = preimage_of_omega(&field, sq) {
                    found = Some(p);
                    break;
                }
            }
            found.ok_or_else(|| Error::Invariant("no square next to the ω^δ edge contains ω".into()))?
        }
    };
    let anchor_square = match preimage.vertices.len() {
        2 => square_of_edge(&Edge::new(preimage.vertices[0], preimage.vertices[1]), grid),
        _ => {
            let i = preimage.vertices.iter().map(|v| v.i).min().expect("triangle");
            let k = preimage.vertices.iter().map(|v| v.k).min().expect("triangle");
            Square { i, k }
        }
    };
    let anchor = anchor_square.bottom_left();

    let c = coloring.len();
    let mut rows = vec![vec![Rational::zero(); 3]; c];
    for (v, lambda) in preimage.vertices.iter().zip(&preimage.weights) {
        let colors = field.colors(*v)?;
        for (r, &j) in colors.iter().enumerate() {
            rows[r][j] += lambda;
        }
    }
    let cr = Rational::from_integer(BigInt::from(c));
    let a: Vec<Rational> = field.geometry().omega.0.iter().map(|w| w * &cr).collect();
    let weights = WeightMatrix::new(rows, a)?;

    let n = instance.agent_count();
    let assignments = match mode {
        Mode::Birthday => (0..3)
            .map(|jstar| {
                let g = tum_assign(&weights, jstar)?;
                let mut bundle_of = vec![0; n];
                for (r, &agent) in coloring.iter().enumerate() {
                    bundle_of[agent] = g.bundle_of[r];
                }
                bundle_of[instance.birthday()] = jstar;
                Ok(GroupAssignment::new(Some(jstar), bundle_of))
            })
            .collect::<Result<Vec<_>>>()?,
        Mode::Balanced => {
            let g = balanced_assign(&weights)?;
            let mut bundle_of = vec![0; n];
            for (r, &agent) in coloring.iter().enumerate() {
                bundle_of[agent] = g.bundle_of[r];
            }
            vec![GroupAssignment::new(None, bundle_of)]
        }
    };

    // the top-layer vote costs two evaluations per coloring agent
    let calls = field.oracle_calls() + 2 * c as u64;
    let budget = oracle_budget(n, grid);
    if calls > budget {
        return Err(Error::Invariant(format!("{calls} oracle calls exceed the budget {budget}")));
    }
    let division = field.division_at(anchor)?.truncate_layers(instance.layers());
    let star_point = preimage.point(grid);
    Ok(Solution {
        division,
        anchor_vertex: anchor,
        grid,
        star_point,
        weights,
        coloring_agents: coloring,
        assignments,
        epsilon: epsilon.clone(),
        oracle_call_count: calls,
        top_layer: top,
    })
}

/// Two layers, three equal-size groups, any birthday choice.
pub fn solve_two_layer(instance: &Instance, epsilon: &Rational) -> Result<Solution> {
    solve_two_layer_with(instance, epsilon, &SolveOptions::default())
}

pub fn solve_two_layer_with(instance: &Instance, epsilon: &Rational, options: &SolveOptions) -> Result<Solution> {
    if instance.layers() != 2 {
        return Err(Error::Precondition(format!("two-layer solver needs 2 layers, found {}", instance.layers())));
    }
    if instance.agent_count() < 3 {
        return Err(Error::Precondition(format!("need at least 3 agents, found {}", instance.agent_count())));
    }
    let coloring = instance.non_birthday();
    let top = top_layer_among(instance, &coloring)?;
    let geometry = TargetGeometry::two_layer(coloring.len());
    run(instance, instance, epsilon, coloring, top, geometry, Mode::Birthday, options)
}

/// One layer, groups of sizes `k = (k₁, k₂, k₃)` summing to `n`.
pub fn solve_one_layer(instance: &Instance, epsilon: &Rational, k: [usize; 3]) -> Result<Solution> {
    solve_one_layer_with(instance, epsilon, k, &SolveOptions::default())
}

pub fn solve_one_layer_with(
    instance: &Instance,
    epsilon: &Rational,
    k: [usize; 3],
    options: &SolveOptions,
) -> Result<Solution> {
    if instance.layers() != 1 {
        return Err(Error::Precondition(format!("one-layer solver needs 1 layer, found {}", instance.layers())));
    }
    let n = instance.agent_count();
    if n < 3 {
        return Err(Error::Precondition(format!("need at least 3 agents, found {n}")));
    }
    if k.contains(&0) || k.iter().sum::<usize>() != n {
        return Err(Error::InvalidInput(format!("group sizes {k:?} must be positive and sum to {n}")));
    }
    let padded = instance.padded(1);
    let coloring = instance.non_birthday();
    let geometry = TargetGeometry::one_layer(k, coloring.len());
    run(instance, &padded, epsilon, coloring, 0, geometry, Mode::Birthday, options)
}

/// Two layers without a birthday agent: every agent colors and each bundle
/// receives `⌊n/3⌋` or `⌈n/3⌉` of them.
pub fn solve_balanced(instance: &Instance, epsilon: &Rational, options: &SolveOptions) -> Result<Solution> {
    if instance.layers() != 2 {
        return Err(Error::Precondition(format!("two-layer solver needs 2 layers, found {}", instance.layers())));
    }
    if instance.agent_count() == 0 {
        return Err(Error::Precondition("instance has no agents".into()));
    }
    let coloring: Vec<usize> = (0..instance.agent_count()).collect();
    let top = top_layer_among(instance, &coloring)?;
    let geometry = TargetGeometry::two_layer(coloring.len());
    run(instance, instance, epsilon, coloring, top, geometry, Mode::Balanced, options)
}
