//! Unit-square encoding of three-bundle divisions of a two-layered cake.
//!
//! The long knife at `x` cuts both layers, the short knife at `y` cuts the top
//! layer only and takes priority over the long knife:
//!
//! ```text
//! bundle 0 = top [0, y]
//! bundle 1 = top [max(x, y), 1]  ∪  bottom [0, x]
//! bundle 2 = bottom [x, 1]       ∪  top [y, x]   (only when y ≤ x)
//! ```

use num_traits::{One, Zero};

use crate::cake::{Interval, LayeredPiece, MultiDivision, Piece, Rational};
use crate::error::{Error, Result};

/// Division for knife positions `(x, y)` with the top layer stored as layer 0.
pub fn divide(x: &Rational, y: &Rational) -> Result<MultiDivision> {
    let zero = Rational::zero();
    let one = Rational::one();
    for (name, v) in [("x", x), ("y", y)] {
        if v < &zero || v > &one {
            return Err(Error::OutOfRange(format!("{name} = {v} is outside [0, 1]")));
        }
    }
    let iv = |a: &Rational, b: &Rational| Interval::new(a.clone(), b.clone());
    let right = if x > y { x } else { y };

    let first = LayeredPiece::new(vec![Piece::single(iv(&zero, y)?), Piece::empty()]);
    let second = LayeredPiece::new(vec![Piece::single(iv(right, &one)?), Piece::single(iv(&zero, x)?)]);
    let third_top = if y <= x { Piece::single(iv(y, x)?) } else { Piece::empty() };
    let third = LayeredPiece::new(vec![third_top, Piece::single(iv(x, &one)?)]);
    MultiDivision::new(vec![first, second, third])
}

/// [`divide`] with the geometry placed on the instance's layer order, where
/// `top` is the index of the layer playing the top role.
pub fn divide_on(x: &Rational, y: &Rational, top: usize) -> Result<MultiDivision> {
    let canonical = divide(x, y)?;
    Ok(if top == 0 { canonical } else { canonical.permute_layers(&[1, 0]) })
}
