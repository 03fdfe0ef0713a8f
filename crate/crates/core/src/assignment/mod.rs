//! Integral group assignments from fractional preference weights.
//!
//! A [`WeightMatrix`] row describes how one agent's preference mass is spread
//! over the bundles. Rounding it to an assignment is a feasible-flow problem on
//! the bipartite support graph: every agent sends one unit to a bundle it puts
//! positive weight on, and bundle `j` receives between `⌊a_j⌋` and `⌈a_j⌉`
//! units. The constraint matrix is totally unimodular, so the flow is integral.

mod flow;

pub use flow::{feasible_flow, BoundedEdge, FlowNetwork};

use num_integer::Integer;
use num_traits::{Signed, ToPrimitive};

use crate::cake::{GroupAssignment, Rational};
use crate::error::{Error, Result};

/// Fractional agent-to-bundle weights `w_ij` with column sums `a_j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightMatrix {
    rows: Vec<Vec<Rational>>,
    a: Vec<Rational>,
}

impl WeightMatrix {
    /// Checks nonnegativity, unit row sums and that column `j` sums to `a[j]`.
    pub fn new(rows: Vec<Vec<Rational>>, a: Vec<Rational>) -> Result<Self> {
        let q = a.len();
        if q == 0 {
            return Err(Error::InvalidInput("weight matrix without bundles".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::InvalidInput(format!("row {i} has {} entries, expected {q}", row.len())));
            }
            if row.iter().any(|w| w.is_negative()) {
                return Err(Error::InvalidInput(format!("row {i} has a negative weight")));
            }
            let sum: Rational = row.iter().sum();
            if sum != Rational::from_integer(1.into()) {
                return Err(Error::InvalidInput(format!("row {i} sums to {sum}, expected 1")));
            }
        }
        for (j, target) in a.iter().enumerate() {
            let col: Rational = rows.iter().map(|r| &r[j]).sum();
            if &col != target {
                return Err(Error::InvalidInput(format!("column {j} sums to {col}, expected a = {target}")));
            }
        }
        Ok(Self { rows, a })
    }

    /// Matrix whose `a` vector is read off the column sums.
    pub fn from_rows(rows: Vec<Vec<Rational>>, q: usize) -> Result<Self> {
        let a = (0..q).map(|j| rows.iter().filter_map(|r| r.get(j)).sum()).collect();
        Self::new(rows, a)
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.rows
    }

    pub fn a(&self) -> &[Rational] {
        &self.a
    }

    pub fn agents(&self) -> usize {
        self.rows.len()
    }

    pub fn bundles(&self) -> usize {
        self.a.len()
    }

    /// Edge `(i, j)` of the support graph.
    pub fn supports(&self, i: usize, j: usize) -> bool {
        self.rows[i][j].is_positive()
    }
}

fn floor_i64(r: &Rational) -> i64 {
    r.floor().to_integer().to_i64().expect("bundle demand fits in i64")
}

fn ceil_i64(r: &Rational) -> i64 {
    r.ceil().to_integer().to_i64().expect("bundle demand fits in i64")
}

/// Per-bundle bounds on non-birthday agents: `[⌊a_j⌋, ⌈a_j⌉]`, with `j*`
/// pinned to `⌊a_{j*}⌋` so that the birthday agent completes it.
fn size_bounds(w: &WeightMatrix, jstar: Option<usize>) -> Vec<(i64, i64)> {
    w.a.iter()
        .enumerate()
        .map(|(j, a)| if Some(j) == jstar { (floor_i64(a), floor_i64(a)) } else { (floor_i64(a), ceil_i64(a)) })
        .collect()
}

fn assign_with_bounds(w: &WeightMatrix, bounds: &[(i64, i64)]) -> Result<Vec<usize>> {
    let (r, q) = (w.agents(), w.bundles());
    let source = 0;
    let sink = r + q + 1;
    let mut edges = Vec::new();
    for i in 0..r {
        edges.push(BoundedEdge { from: source, to: 1 + i, lo: 1, hi: 1 });
    }
    let mut pairs = Vec::new();
    for i in 0..r {
        for j in 0..q {
            if w.supports(i, j) {
                pairs.push((i, j, edges.len()));
                edges.push(BoundedEdge { from: 1 + i, to: 1 + r + j, lo: 0, hi: 1 });
            }
        }
    }
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        edges.push(BoundedEdge { from: 1 + r + j, to: sink, lo, hi });
    }
    let flows = feasible_flow(r + q + 2, source, sink, &edges)
        .ok_or_else(|| Error::Infeasible(format!("no assignment meets bundle bounds {bounds:?}")))?;
    let mut bundle_of = vec![usize::MAX; r];
    for (i, j, e) in pairs {
        if flows[e] == 1 {
            bundle_of[i] = j;
        }
    }
    debug_assert!(bundle_of.iter().all(|&j| j < q));
    Ok(bundle_of)
}

/// Rounds `w` to an assignment of the rows plus a birthday agent, who is
/// appended last and receives `jstar`.
///
/// Every row goes to a bundle it supports, bundle `j*` ends with `⌊a_{j*}⌋ + 1`
/// agents and every other bundle `j` with `⌊a_j⌋` or `⌈a_j⌉` agents.
pub fn tum_assign(w: &WeightMatrix, jstar: usize) -> Result<GroupAssignment> {
    if jstar >= w.bundles() {
        return Err(Error::OutOfRange(format!("bundle {jstar} of {}", w.bundles())));
    }
    let mut bundle_of = assign_with_bounds(w, &size_bounds(w, Some(jstar)))?;
    bundle_of.push(jstar);
    Ok(GroupAssignment::new(Some(jstar), bundle_of))
}

/// Rounds `w` without a birthday agent: bundle `j` gets `⌊a_j⌋` or `⌈a_j⌉`
/// rows.
pub fn balanced_assign(w: &WeightMatrix) -> Result<GroupAssignment> {
    Ok(GroupAssignment::new(None, assign_with_bounds(w, &size_bounds(w, None))?))
}

/// Largest number of rows [`brute_force_assign`] accepts.
pub const BRUTE_FORCE_LIMIT: usize = 12;

/// Every assignment satisfying the same constraints as [`tum_assign`], in
/// lexicographic order of the row choices.
pub fn brute_force_assign(w: &WeightMatrix, jstar: usize) -> Result<Vec<GroupAssignment>> {
    let (r, q) = (w.agents(), w.bundles());
    if r > BRUTE_FORCE_LIMIT || (q as f64).powi(r as i32) > 2e7 {
        return Err(Error::Precondition(format!("{r} rows over {q} bundles is too large to enumerate")));
    }
    if jstar >= q {
        return Err(Error::OutOfRange(format!("bundle {jstar} of {q}")));
    }
    let bounds = size_bounds(w, Some(jstar));
    let options: Vec<Vec<usize>> = (0..r).map(|i| (0..q).filter(|&j| w.supports(i, j)).collect()).collect();
    let mut out = Vec::new();
    if options.iter().any(|o| o.is_empty()) {
        return Ok(out);
    }
    let mut choice = vec![0usize; r];
    loop {
        let bundle_of: Vec<usize> = (0..r).map(|i| options[i][choice[i]]).collect();
        let mut sizes = vec![0i64; q];
        for &j in &bundle_of {
            sizes[j] += 1;
        }
        if sizes.iter().zip(&bounds).all(|(s, (lo, hi))| lo <= s && s <= hi) {
            let mut full = bundle_of;
            full.push(jstar);
            out.push(GroupAssignment::new(Some(jstar), full));
        }
        // odometer increment
        let mut pos = r;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            choice[pos] += 1;
            if choice[pos] < options[pos].len() {
                break;
            }
            choice[pos] = 0;
        }
    }
}

/// `true` when `sizes` lie in `{⌊total/q⌋, ⌈total/q⌉}`.
pub fn sizes_balanced(sizes: &[usize], total: usize) -> bool {
    let q = sizes.len();
    if q == 0 {
        return total == 0;
    }
    let (lo, rem) = total.div_rem(&q);
    let hi = if rem == 0 { lo } else { lo + 1 };
    sizes.iter().all(|&s| s == lo || s == hi)
}
