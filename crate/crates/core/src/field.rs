//! Discrete preference map on the triangulated unit square of knife positions.
//!
//! Each non-birthday agent colors every grid vertex `(i/N, k/N)` with the index
//! of a bundle the agent prefers in the two-knife division at that vertex. The
//! aggregate `f̄` averages the color indicator vectors and is extended affinely
//! over the triangles of the grid; every basic square is split by its diagonal
//! from the top-left to the bottom-right corner.
//!
//! The solvers search for a preimage of a target point `ω` of the standard
//! 2-simplex. They work with the line `B^δ = {z₁ = ω₁ − δ}` split by
//! `ω^δ = (ω₁ − δ, ω₂ + δ/2, ω₃ + δ/2)` into a left half (`z₂` below the split
//! point) and a right half.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::cake::{int, MultiDivision, Rational};
use crate::error::{Error, Result};
use crate::two_knife;
use crate::valuation::Instance;

/// Grid vertex `(i/N, k/N)`: `i` indexes the long knife, `k` the short knife.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Vertex {
    pub i: u64,
    pub k: u64,
}

impl Vertex {
    pub fn new(i: u64, k: u64) -> Self {
        Self { i, k }
    }
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.i, self.k)
    }
}

/// Grid edge between two adjacent vertices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Edge {
    pub a: Vertex,
    pub b: Vertex,
}

impl Edge {
    pub fn new(a: Vertex, b: Vertex) -> Self {
        Self { a, b }
    }

    pub fn is_vertical(&self) -> bool {
        self.a.i == self.b.i
    }
}

/// Basic square with lower-left corner `(i, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Square {
    pub i: u64,
    pub k: u64,
}

impl Square {
    pub fn bottom_left(&self) -> Vertex {
        Vertex::new(self.i, self.k)
    }

    pub fn boundary(&self) -> [Edge; 4] {
        let (i, k) = (self.i, self.k);
        [
            Edge::new(Vertex::new(i, k), Vertex::new(i + 1, k)),
            Edge::new(Vertex::new(i + 1, k), Vertex::new(i + 1, k + 1)),
            Edge::new(Vertex::new(i, k + 1), Vertex::new(i + 1, k + 1)),
            Edge::new(Vertex::new(i, k), Vertex::new(i, k + 1)),
        ]
    }

    /// The two triangles cut by the top-left to bottom-right diagonal.
    pub fn triangles(&self) -> [[Vertex; 3]; 2] {
        let (i, k) = (self.i, self.k);
        [
            [Vertex::new(i, k), Vertex::new(i + 1, k), Vertex::new(i, k + 1)],
            [Vertex::new(i + 1, k), Vertex::new(i + 1, k + 1), Vertex::new(i, k + 1)],
        ]
    }
}

/// Point of the standard 2-simplex.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SimplexPoint(pub [Rational; 3]);

impl SimplexPoint {
    pub fn new(z1: Rational, z2: Rational, z3: Rational) -> Self {
        Self([z1, z2, z3])
    }

    pub fn vertex(j: usize) -> Self {
        let mut z = [Rational::zero(), Rational::zero(), Rational::zero()];
        z[j] = Rational::one();
        Self(z)
    }

    pub fn coord(&self, j: usize) -> &Rational {
        &self.0[j]
    }

    /// `self + t (other − self)`.
    pub fn lerp(&self, other: &SimplexPoint, t: &Rational) -> SimplexPoint {
        SimplexPoint(std::array::from_fn(|j| &self.0[j] + t * (&other.0[j] - &self.0[j])))
    }
}

impl fmt::Display for SimplexPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

/// Position of a point of `B^δ` relative to the split point `ω^δ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Center,
}

/// Target `ω`, perturbation `δ`, and the derived line and split point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TargetGeometry {
    pub omega: SimplexPoint,
    pub delta: Rational,
}

impl TargetGeometry {
    /// Equal thirds with `δ = 1/(6n²)`, where `n − 1 = coloring_agents`.
    pub fn two_layer(coloring_agents: usize) -> Self {
        let n = coloring_agents as i64 + 1;
        let third = crate::cake::rat(1, 3);
        Self {
            omega: SimplexPoint::new(third.clone(), third.clone(), third),
            delta: crate::cake::rat(1, 6 * n * n),
        }
    }

    /// `ω = (k − 1/3) / (n − 1)` componentwise with `δ = 0`.
    pub fn one_layer(group_sizes: [usize; 3], coloring_agents: usize) -> Self {
        let c = Rational::from_integer(BigInt::from(coloring_agents));
        let third = crate::cake::rat(1, 3);
        let coord = |k: usize| (Rational::from_integer(BigInt::from(k)) - &third) / &c;
        Self {
            omega: SimplexPoint::new(coord(group_sizes[0]), coord(group_sizes[1]), coord(group_sizes[2])),
            delta: Rational::zero(),
        }
    }

    /// `ω₁ − δ`, the first coordinate on `B^δ`.
    pub fn level(&self) -> Rational {
        &self.omega.0[0] - &self.delta
    }

    /// `ω^δ`.
    pub fn split_point(&self) -> SimplexPoint {
        let half = &self.delta / int(2);
        SimplexPoint::new(self.level(), &self.omega.0[1] + &half, &self.omega.0[2] + &half)
    }

    /// Side of a point lying on `B^δ`.
    pub fn classify(&self, point: &SimplexPoint) -> Side {
        let split = &self.omega.0[1] + &self.delta / int(2);
        match point.0[1].cmp(&split) {
            std::cmp::Ordering::Less => Side::Left,
            std::cmp::Ordering::Greater => Side::Right,
            std::cmp::Ordering::Equal => Side::Center,
        }
    }
}

/// Where the image of a grid edge meets `B^δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeCrossing {
    pub edge: Edge,
    /// Affine parameter along the edge, from `edge.a` (0) to `edge.b` (1).
    pub t: Rational,
    pub point: SimplexPoint,
    pub side: Side,
}

/// Unique crossing of the image of a basic line with `B^δ`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineCrossing {
    /// Basic line index: the line is `x = column / N`.
    pub column: u64,
    /// Lower endpoint row of the crossing edge.
    pub row: u64,
    pub y: Rational,
    pub point: SimplexPoint,
    pub side: Side,
}

impl LineCrossing {
    pub fn edge(&self) -> Edge {
        Edge::new(Vertex::new(self.column, self.row), Vertex::new(self.column, self.row + 1))
    }
}

/// Tie-breaking choice among the three bundles at vertex `(x, y)`: zero-length
/// bundles are never chosen, a tie involving bundle 0 picks 0, and a tie
/// between bundles 1 and 2 only picks 1 when `x ≤ y` and 2 otherwise.
pub fn tie_break_color(values: &[Rational; 3], zero_length: [bool; 3], x_le_y: bool) -> usize {
    let best = (0..3).filter(|&j| !zero_length[j]).map(|j| &values[j]).max().expect("some bundle has length");
    let top: Vec<usize> = (0..3).filter(|&j| !zero_length[j] && &values[j] == best).collect();
    if top.contains(&0) {
        0
    } else if top.len() == 2 {
        if x_le_y {
            1
        } else {
            2
        }
    } else {
        top[0]
    }
}

/// Lazily colored grid over the unit square with memoized vertex colors.
#[derive(Debug)]
pub struct PreferenceField<'a> {
    instance: &'a Instance,
    coloring: Vec<usize>,
    top: usize,
    grid: u64,
    geometry: TargetGeometry,
    parallel: bool,
    memo: Mutex<HashMap<Vertex, Arc<[usize]>>>,
    oracle_calls: AtomicU64,
}

impl<'a> PreferenceField<'a> {
    /// `coloring` lists the agents whose preferences enter `f̄`; `top` is the
    /// instance layer playing the top role.
    pub fn new(
        instance: &'a Instance,
        coloring: Vec<usize>,
        top: usize,
        grid: u64,
        geometry: TargetGeometry,
    ) -> Result<Self> {
        if instance.layers() != 2 {
            return Err(Error::Precondition(format!("the unit-square field needs 2 layers, found {}", instance.layers())));
        }
        if coloring.is_empty() {
            return Err(Error::Precondition("no coloring agents".into()));
        }
        if grid == 0 {
            return Err(Error::Precondition("grid resolution must be positive".into()));
        }
        Ok(Self {
            instance,
            coloring,
            top,
            grid,
            geometry,
            parallel: false,
            memo: Mutex::new(HashMap::new()),
            oracle_calls: AtomicU64::new(0),
        })
    }

    /// Colors each vertex's agents concurrently; results are identical to the
    /// sequential path.
    pub fn with_parallel(mut self, parallel: bool) -> Self {
        self.parallel = parallel;
        self
    }

    pub fn grid(&self) -> u64 {
        self.grid
    }

    pub fn geometry(&self) -> &TargetGeometry {
        &self.geometry
    }

    pub fn coloring_agents(&self) -> &[usize] {
        &self.coloring
    }

    pub fn top_layer(&self) -> usize {
        self.top
    }

    pub fn oracle_calls(&self) -> u64 {
        self.oracle_calls.load(Ordering::Relaxed)
    }

    fn coord(&self, step: u64) -> Rational {
        Rational::new(BigInt::from(step), BigInt::from(self.grid))
    }

    pub fn point_of(&self, v: Vertex) -> (Rational, Rational) {
        (self.coord(v.i), self.coord(v.k))
    }

    pub fn division_at(&self, v: Vertex) -> Result<MultiDivision> {
        let (x, y) = self.point_of(v);
        two_knife::divide_on(&x, &y, self.top)
    }

    fn check_vertex(&self, v: Vertex) -> Result<()> {
        if v.i > self.grid || v.k > self.grid {
            return Err(Error::OutOfRange(format!("vertex {v} outside the {0}x{0} grid", self.grid)));
        }
        Ok(())
    }

    /// Colors of all coloring agents at `v`, in `coloring_agents()` order.
    pub fn colors(&self, v: Vertex) -> Result<Arc<[usize]>> {
        self.check_vertex(v)?;
        if let Some(hit) = self.memo.lock().expect("memo lock").get(&v) {
            return Ok(hit.clone());
        }
        let division = self.division_at(v)?;
        let zero_length: [bool; 3] = std::array::from_fn(|j| division.bundle(j).measure().is_zero());
        let x_le_y = v.i <= v.k;
        let color_of = |agent: usize| -> Result<usize> {
            let oracle = self.instance.oracle(agent);
            let mut values: [Rational; 3] = Default::default();
            for (j, value) in values.iter_mut().enumerate() {
                *value = oracle.evaluate(division.bundle(j))?;
            }
            self.oracle_calls.fetch_add(3, Ordering::Relaxed);
            Ok(tie_break_color(&values, zero_length, x_le_y))
        };
        let colors: Vec<usize> = if self.parallel {
            self.coloring.par_iter().map(|&a| color_of(a)).collect::<Result<_>>()?
        } else {
            self.coloring.iter().map(|&a| color_of(a)).collect::<Result<_>>()?
        };
        let colors: Arc<[usize]> = colors.into();
        self.memo.lock().expect("memo lock").insert(v, colors.clone());
        Ok(colors)
    }

    /// Color of the `pos`-th coloring agent.
    pub fn color(&self, pos: usize, v: Vertex) -> Result<usize> {
        Ok(self.colors(v)?[pos])
    }

    /// `f̄` at a grid vertex: the average of the agents' color vectors.
    pub fn fbar(&self, v: Vertex) -> Result<SimplexPoint> {
        let colors = self.colors(v)?;
        let mut counts = [0i64; 3];
        for &c in colors.iter() {
            counts[c] += 1;
        }
        let total = colors.len() as i64;
        Ok(SimplexPoint(std::array::from_fn(|j| crate::cake::rat(counts[j], total))))
    }

    /// Barycentric location of an arbitrary point `(x, y)` of the unit square:
    /// the vertices of a containing triangle and their weights.
    pub fn locate(&self, x: &Rational, y: &Rational) -> Result<([Vertex; 3], [Rational; 3])> {
        let zero = Rational::zero();
        let one = Rational::one();
        if x < &zero || x > &one || y < &zero || y > &one {
            return Err(Error::OutOfRange(format!("({x}, {y}) outside the unit square")));
        }
        let n = Rational::from_integer(BigInt::from(self.grid));
        let (sx, sy) = (x * &n, y * &n);
        let cell = |s: &Rational| -> u64 {
            let f = s.floor().to_integer();
            let f: u64 = f.try_into().unwrap_or(0);
            f.min(self.grid - 1)
        };
        let (i, k) = (cell(&sx), cell(&sy));
        let s = sx - int(i as i64);
        let t = sy - int(k as i64);
        let sq = Square { i, k };
        let [lower, upper] = sq.triangles();
        if &s + &t <= one {
            Ok((lower, [&one - &s - &t, s, t]))
        } else {
            Ok((upper, [&one - &t, &s + &t - &one, &one - &s]))
        }
    }

    /// `f̄` at an arbitrary point, by affine interpolation.
    pub fn fbar_at(&self, x: &Rational, y: &Rational) -> Result<SimplexPoint> {
        let (verts, weights) = self.locate(x, y)?;
        let mut z = [Rational::zero(), Rational::zero(), Rational::zero()];
        for (v, w) in verts.iter().zip(&weights) {
            let img = self.fbar(*v)?;
            for j in 0..3 {
                z[j] += w * &img.0[j];
            }
        }
        Ok(SimplexPoint(z))
    }

    /// Crossing of the image of edge `e` with `B^δ`, if any.
    pub fn edge_crossing(&self, e: Edge) -> Result<Option<EdgeCrossing>> {
        let za = self.fbar(e.a)?;
        let zb = self.fbar(e.b)?;
        Ok(self.crossing_between(e, &za, &zb))
    }

    fn crossing_between(&self, e: Edge, za: &SimplexPoint, zb: &SimplexPoint) -> Option<EdgeCrossing> {
        let level = self.geometry.level();
        let ga = &za.0[0] - &level;
        let gb = &zb.0[0] - &level;
        let t = if ga.is_zero() {
            Rational::zero()
        } else if gb.is_zero() {
            Rational::one()
        } else if ga.is_negative() != gb.is_negative() {
            -&ga / (&gb - &ga)
        } else {
            return None;
        };
        let point = za.lerp(zb, &t);
        let side = self.geometry.classify(&point);
        Some(EdgeCrossing { edge: e, t, point, side })
    }

    /// All crossings of the images of `edges` with `B^δ`, in input order.
    pub fn segment_crossings(&self, edges: &[Edge]) -> Result<Vec<EdgeCrossing>> {
        let mut out = Vec::new();
        for &e in edges {
            if let Some(c) = self.edge_crossing(e)? {
                out.push(c);
            }
        }
        Ok(out)
    }

    /// Binary search for the vertical edge of basic line `column` whose image
    /// crosses `B^δ`.
    ///
    /// Relies on `f̄₁` being nondecreasing along the line with `f̄₁` below the
    /// level at the bottom and above it at the top.
    pub fn line_crossing(&self, column: u64) -> Result<LineCrossing> {
        if column > self.grid {
            return Err(Error::OutOfRange(format!("basic line {column} beyond grid {}", self.grid)));
        }
        let level = self.geometry.level();
        let gap = |k: u64| -> Result<(SimplexPoint, Rational)> {
            let z = self.fbar(Vertex::new(column, k))?;
            let g = &z.0[0] - &level;
            Ok((z, g))
        };
        let (mut z_lo, g_lo) = gap(0)?;
        let (mut z_hi, g_hi) = gap(self.grid)?;
        if !(g_lo.is_negative() && g_hi.is_positive()) {
            return Err(Error::Invariant(format!(
                "basic line {column}: no sign change of f̄₁ − ({level}) between bottom ({}) and top ({})",
                z_lo.0[0], z_hi.0[0]
            )));
        }
        let (mut lo, mut hi) = (0u64, self.grid);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let (z, g) = gap(mid)?;
            if g.is_zero() {
                return Err(Error::Invariant(format!("vertex ({column}, {mid}) is mapped onto B^δ")));
            }
            if g.is_negative() {
                lo = mid;
                z_lo = z;
            } else {
                hi = mid;
                z_hi = z;
            }
        }
        let edge = Edge::new(Vertex::new(column, lo), Vertex::new(column, hi));
        let c = self.crossing_between(edge, &z_lo, &z_hi).expect("straddling endpoints cross");
        let y = (int(lo as i64) + &c.t) / int(self.grid as i64);
        Ok(LineCrossing { column, row: lo, y, point: c.point, side: c.side })
    }
}
