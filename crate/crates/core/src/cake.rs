//! Exact-rational cake geometry: intervals, pieces, layered pieces and
//! multi-divisions, plus the symmetric-difference pseudo-metric.
//!
//! Every layer of a cake is a copy of `[0, 1]`. A [`Piece`] is a finite union
//! of closed intervals of one layer, a [`LayeredPiece`] holds one piece per
//! layer, and a [`MultiDivision`] is a tuple of layered pieces (bundles) that
//! partitions the cake up to endpoints.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational number; all engine arithmetic happens in this type.
pub type Rational = BigRational;

/// `num / den` as an exact rational. Panics if `den == 0`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"-0.125"` into an
/// exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(Error::InvalidInput(format!("zero denominator in {text:?}")));
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit())
            || !digits.chars().all(|c| c.is_ascii_digit())
            || (digits.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let whole_part: BigInt = if digits.is_empty() {
            BigInt::zero()
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let frac_part: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let mut value = Rational::new(whole_part * &scale + frac_part, scale);
        if negative {
            value = -value;
        }
        return Ok(value);
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(n))
}

/// Closed subinterval `[lo, hi]` of `[0, 1]`. Zero-length intervals are allowed.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Result<Self> {
        if lo.is_negative() || hi > Rational::one() || lo > hi {
            return Err(Error::OutOfRange(format!("[{lo}, {hi}] is not a subinterval of [0, 1]")));
        }
        Ok(Self { lo, hi })
    }

    /// Shorthand for tests and fixtures; panics on invalid bounds.
    pub fn of(lo: Rational, hi: Rational) -> Self {
        Self::new(lo, hi).expect("valid interval")
    }

    pub fn full() -> Self {
        Self { lo: Rational::zero(), hi: Rational::one() }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn len(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn is_degenerate(&self) -> bool {
        self.lo == self.hi
    }

    /// Length of the intersection with `other` (zero when disjoint).
    pub fn overlap(&self, other: &Interval) -> Rational {
        let lo = if self.lo > other.lo { &self.lo } else { &other.lo };
        let hi = if self.hi < other.hi { &self.hi } else { &other.hi };
        if lo < hi {
            hi - lo
        } else {
            Rational::zero()
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Finite union of closed intervals of a single layer, kept normalized:
/// sorted by left endpoint, with overlapping or touching intervals merged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Piece {
    intervals: Vec<Interval>,
}

impl Piece {
    pub fn new(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.cmp(&b.lo).then_with(|| a.hi.cmp(&b.hi)));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn single(iv: Interval) -> Self {
        Self { intervals: vec![iv] }
    }

    pub fn full() -> Self {
        Self::single(Interval::full())
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> Rational {
        self.intervals.iter().fold(Rational::zero(), |acc, iv| acc + iv.len())
    }

    pub fn intersection_measure(&self, other: &Piece) -> Rational {
        let mut total = Rational::zero();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            total += a.overlap(b);
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// Intersection as a piece; only positive-length overlaps are kept.
    pub fn intersection(&self, other: &Piece) -> Piece {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let a = &self.intervals[i];
            let b = &other.intervals[j];
            let lo = a.lo.clone().max(b.lo.clone());
            let hi = a.hi.clone().min(b.hi.clone());
            if lo < hi {
                out.push(Interval { lo, hi });
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        Piece::new(out)
    }

    pub fn union(&self, other: &Piece) -> Piece {
        let mut all = self.intervals.clone();
        all.extend(other.intervals.iter().cloned());
        Piece::new(all)
    }

    /// `μ(self △ other)`.
    pub fn sym_diff_measure(&self, other: &Piece) -> Rational {
        let shared = self.intersection_measure(other);
        self.measure() + other.measure() - shared.clone() - shared
    }

    /// Drops zero-length intervals.
    pub fn without_degenerate(&self) -> Piece {
        Piece { intervals: self.intervals.iter().filter(|iv| !iv.is_degenerate()).cloned().collect() }
    }
}

impl fmt::Display for Piece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.intervals.is_empty() {
            return write!(f, "∅");
        }
        for (k, iv) in self.intervals.iter().enumerate() {
            if k > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{iv}")?;
        }
        Ok(())
    }
}

/// One piece per layer.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LayeredPiece {
    layers: Vec<Piece>,
}

impl LayeredPiece {
    pub fn new(layers: Vec<Piece>) -> Self {
        Self { layers }
    }

    pub fn empty(m: usize) -> Self {
        Self { layers: vec![Piece::empty(); m] }
    }

    /// The entire layered cake with `m` layers.
    pub fn whole(m: usize) -> Self {
        Self { layers: vec![Piece::full(); m] }
    }

    pub fn layers(&self) -> &[Piece] {
        &self.layers
    }

    pub fn layer(&self, l: usize) -> &Piece {
        &self.layers[l]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    /// Layered length: sum of per-layer measures.
    pub fn measure(&self) -> Rational {
        self.layers.iter().fold(Rational::zero(), |acc, p| acc + p.measure())
    }

    pub fn union(&self, other: &LayeredPiece) -> Result<LayeredPiece> {
        same_layers(self, other)?;
        Ok(LayeredPiece::new(self.layers.iter().zip(&other.layers).map(|(a, b)| a.union(b)).collect()))
    }

    /// Pieces with zero-length intervals removed; used to compare divisions up
    /// to the pseudo-metric's null sets.
    pub fn without_degenerate(&self) -> LayeredPiece {
        LayeredPiece::new(self.layers.iter().map(Piece::without_degenerate).collect())
    }
}

impl fmt::Display for LayeredPiece {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (l, p) in self.layers.iter().enumerate() {
            if l > 0 {
                write!(f, "; ")?;
            }
            write!(f, "L{l}: {p}")?;
        }
        write!(f, ")")
    }
}

fn same_layers(a: &LayeredPiece, b: &LayeredPiece) -> Result<()> {
    if a.layer_count() != b.layer_count() {
        return Err(Error::LayerMismatch { expected: a.layer_count(), found: b.layer_count() });
    }
    Ok(())
}

/// Pseudo-metric `d(L, L') = Σ_ℓ μ(L_ℓ △ L'_ℓ)`.
pub fn sym_diff_distance(a: &LayeredPiece, b: &LayeredPiece) -> Result<Rational> {
    same_layers(a, b)?;
    Ok(a.layers.iter().zip(&b.layers).fold(Rational::zero(), |acc, (x, y)| acc + x.sym_diff_measure(y)))
}

/// A tuple of bundles over a common layer count.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiDivision {
    bundles: Vec<LayeredPiece>,
}

impl MultiDivision {
    pub fn new(bundles: Vec<LayeredPiece>) -> Result<Self> {
        if let Some(first) = bundles.first() {
            for b in &bundles[1..] {
                same_layers(first, b)?;
            }
        }
        Ok(Self { bundles })
    }

    pub fn bundles(&self) -> &[LayeredPiece] {
        &self.bundles
    }

    pub fn bundle(&self, j: usize) -> &LayeredPiece {
        &self.bundles[j]
    }

    pub fn len(&self) -> usize {
        self.bundles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bundles.is_empty()
    }

    pub fn layer_count(&self) -> usize {
        self.bundles.first().map_or(0, LayeredPiece::layer_count)
    }

    /// Reorders layers so that output layer `l` is input layer `order[l]`.
    pub fn permute_layers(&self, order: &[usize]) -> MultiDivision {
        let bundles = self
            .bundles
            .iter()
            .map(|b| LayeredPiece::new(order.iter().map(|&l| b.layers[l].clone()).collect()))
            .collect();
        MultiDivision { bundles }
    }

    /// Keeps only the first `m` layers.
    pub fn truncate_layers(&self, m: usize) -> MultiDivision {
        let bundles =
            self.bundles.iter().map(|b| LayeredPiece::new(b.layers[..m].to_vec())).collect();
        MultiDivision { bundles }
    }
}

impl fmt::Display for MultiDivision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, b) in self.bundles.iter().enumerate() {
            writeln!(f, "A{}: {b}", j + 1)?;
        }
        Ok(())
    }
}

/// Structural properties of a multi-division.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionFlags {
    pub complete: bool,
    pub feasible: bool,
    pub contiguous: bool,
}

impl PartitionFlags {
    pub fn all(&self) -> bool {
        self.complete && self.feasible && self.contiguous
    }
}

/// Checks completeness (each layer is covered by pairwise interior-disjoint
/// bundle pieces), feasibility (no bundle uses overlapping positions in two
/// different layers) and contiguity (each per-layer piece is one interval).
pub fn check_partition(d: &MultiDivision, m: usize) -> PartitionFlags {
    let layers_ok = d.bundles.iter().all(|b| b.layer_count() == m);
    let complete = layers_ok && (0..m).all(|l| layer_is_partitioned(d, l));
    let feasible = layers_ok
        && d.bundles.iter().all(|b| {
            (0..m).all(|l1| {
                ((l1 + 1)..m).all(|l2| b.layers[l1].intersection_measure(&b.layers[l2]).is_zero())
            })
        });
    let contiguous = d.bundles.iter().all(|b| b.layers.iter().all(|p| p.intervals.len() <= 1));
    PartitionFlags { complete, feasible, contiguous }
}

fn layer_is_partitioned(d: &MultiDivision, l: usize) -> bool {
    let mut ivs: Vec<&Interval> = d
        .bundles
        .iter()
        .flat_map(|b| b.layers[l].intervals.iter())
        .filter(|iv| !iv.is_degenerate())
        .collect();
    ivs.sort_by(|a, b| match a.lo.cmp(&b.lo) {
        Ordering::Equal => a.hi.cmp(&b.hi),
        o => o,
    });
    let mut reach = Rational::zero();
    for iv in ivs {
        // a gap or an interior overlap both break the partition
        if iv.lo != reach {
            return false;
        }
        reach = iv.hi.clone();
    }
    reach == Rational::one()
}

/// Assignment of agents to bundles. When produced for a birthday choice `j*`,
/// the birthday agent is mapped to `j*`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupAssignment {
    pub birthday_choice: Option<usize>,
    pub bundle_of: Vec<usize>,
}

impl GroupAssignment {
    pub fn new(birthday_choice: Option<usize>, bundle_of: Vec<usize>) -> Self {
        Self { birthday_choice, bundle_of }
    }

    /// Number of agents per bundle.
    pub fn sizes(&self, q: usize) -> Vec<usize> {
        let mut sizes = vec![0; q];
        for &j in &self.bundle_of {
            if j < q {
                sizes[j] += 1;
            }
        }
        sizes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(a: i64, b: i64, d: i64) -> Interval {
        Interval::of(rat(a, d), rat(b, d))
    }

    #[test]
    fn measure_examples() {
        assert_eq!(Piece::full().measure(), int(1));
        assert_eq!(Piece::empty().measure(), int(0));
        assert_eq!(Piece::new(vec![iv(0, 1, 4), iv(2, 3, 4)]).measure(), rat(1, 2));
    }

    #[test]
    fn normalization_merges_touching_intervals() {
        let p = Piece::new(vec![iv(1, 2, 4), iv(0, 1, 4), iv(3, 3, 4)]);
        assert_eq!(p.intervals(), &[iv(0, 2, 4), iv(3, 3, 4)]);
        assert_eq!(p.measure(), rat(1, 2));
    }

    #[test]
    fn sym_diff_examples() {
        let a = LayeredPiece::new(vec![Piece::single(iv(0, 1, 2)), Piece::empty()]);
        let b = LayeredPiece::new(vec![Piece::single(iv(0, 1, 4)), Piece::single(iv(0, 1, 4))]);
        assert_eq!(sym_diff_distance(&a, &a).unwrap(), int(0));
        assert_eq!(sym_diff_distance(&a, &b).unwrap(), rat(1, 2));

        let z0 = LayeredPiece::new(vec![Piece::single(iv(0, 0, 1))]);
        let z1 = LayeredPiece::new(vec![Piece::single(iv(1, 1, 1))]);
        assert_eq!(sym_diff_distance(&z0, &z1).unwrap(), int(0));
    }

    #[test]
    fn sym_diff_rejects_layer_mismatch() {
        let a = LayeredPiece::whole(1);
        let b = LayeredPiece::whole(2);
        assert!(matches!(sym_diff_distance(&a, &b), Err(Error::LayerMismatch { .. })));
    }

    #[test]
    fn interval_bounds_are_checked() {
        assert!(Interval::new(rat(1, 2), rat(1, 4)).is_err());
        assert!(Interval::new(rat(-1, 2), rat(1, 4)).is_err());
        assert!(Interval::new(rat(0, 1), rat(5, 4)).is_err());
        assert!(Interval::new(rat(1, 3), rat(1, 3)).is_ok());
    }

    #[test]
    fn long_and_short_knife_division_is_a_partition() {
        // top layer: [0,1/4] | [1/4,1/2] | [1/2,1]; bottom layer: [0,1/2] | [1/2,1]
        let d = MultiDivision::new(vec![
            LayeredPiece::new(vec![Piece::single(iv(0, 1, 4)), Piece::empty()]),
            LayeredPiece::new(vec![Piece::single(iv(2, 4, 4)), Piece::single(iv(0, 2, 4))]),
            LayeredPiece::new(vec![Piece::single(iv(1, 2, 4)), Piece::single(iv(2, 4, 4))]),
        ])
        .unwrap();
        let flags = check_partition(&d, 2);
        assert!(flags.all(), "{flags:?}");
    }

    #[test]
    fn overlapping_layers_in_one_bundle_are_infeasible() {
        let d = MultiDivision::new(vec![
            LayeredPiece::new(vec![Piece::single(iv(0, 1, 2)), Piece::single(iv(0, 1, 2))]),
            LayeredPiece::new(vec![Piece::single(iv(1, 2, 2)), Piece::single(iv(1, 2, 2))]),
        ])
        .unwrap();
        let flags = check_partition(&d, 2);
        assert!(!flags.feasible);
        assert!(flags.complete);
    }

    #[test]
    fn partial_cover_is_incomplete() {
        let d = MultiDivision::new(vec![
            LayeredPiece::new(vec![Piece::single(iv(0, 1, 4))]),
            LayeredPiece::new(vec![Piece::single(iv(1, 2, 4))]),
        ])
        .unwrap();
        assert!(!check_partition(&d, 1).complete);
    }

    #[test]
    fn overlapping_bundles_are_incomplete() {
        let d = MultiDivision::new(vec![
            LayeredPiece::new(vec![Piece::single(iv(0, 3, 4))]),
            LayeredPiece::new(vec![Piece::single(iv(1, 4, 4))]),
        ])
        .unwrap();
        assert!(!check_partition(&d, 1).complete);
    }

    #[test]
    fn parses_rationals_exactly() {
        assert_eq!(parse_rational("1/3").unwrap(), rat(1, 3));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }
}
