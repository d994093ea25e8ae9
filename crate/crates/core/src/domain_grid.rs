//! Coordinate domains with walls or punctures, and the uniform grids used to
//! discretize them.
//!
//! Grids never carry a node on an excluded point: the two ends of every grid
//! are Dirichlet ghost points and walls always sit on a grid end.

use crate::error::{Error, Result};
use crate::operators::{ModelSpec, Potential};
use crate::scalar::Real;

/// Extent used for unbounded directions when no hint is given.
pub const DEFAULT_EXTENT: f64 = 10.0;

/// Coordinate domain of a model. The wall parameter `b` is a length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec<T> {
    /// `-inf < x < inf`.
    FullLine,
    /// `-b < x < inf`, `b >= 0`.
    HalfLine { b: T },
    /// `-b < x < b`, `b > 0`.
    Interval { b: T },
    /// `b < |x| < inf`, `b > 0`.
    PuncturedExterior { b: T },
    /// `0 < |x| < inf`.
    PuncturedLine,
}

impl<T: Real> DomainSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, b: T| {
            Err(Error::InvalidDomain(format!(
                "{what} requires {b} to be positive and finite"
            )))
        };
        match *self {
            DomainSpec::HalfLine { b } if !(b >= T::zero() && b.is_finite()) => Err(
                Error::InvalidDomain(format!("half-line shift must be >= 0, got {b}")),
            ),
            DomainSpec::Interval { b } if !(b > T::zero() && b.is_finite()) => bad("interval", b),
            DomainSpec::PuncturedExterior { b } if !(b > T::zero() && b.is_finite()) => {
                bad("punctured exterior", b)
            }
            _ => Ok(()),
        }
    }

    /// Strict interior membership.
    pub fn contains(&self, x: T) -> bool {
        if !x.is_finite() {
            return false;
        }
        match *self {
            DomainSpec::FullLine => true,
            DomainSpec::HalfLine { b } => x > -b,
            DomainSpec::Interval { b } => x > -b && x < b,
            DomainSpec::PuncturedExterior { b } => x.abs() > b,
            DomainSpec::PuncturedLine => x != T::zero(),
        }
    }

    /// Walls and punctures, in increasing order.
    pub fn excluded_points(&self) -> Vec<T> {
        match *self {
            DomainSpec::FullLine => vec![],
            DomainSpec::HalfLine { b } => vec![-b],
            DomainSpec::Interval { b } | DomainSpec::PuncturedExterior { b } => vec![-b, b],
            DomainSpec::PuncturedLine => vec![T::zero()],
        }
    }

    pub fn is_bounded(&self) -> bool {
        matches!(self, DomainSpec::Interval { .. })
    }

    pub fn is_split(&self) -> bool {
        matches!(
            self,
            DomainSpec::PuncturedExterior { .. } | DomainSpec::PuncturedLine
        )
    }

    /// Distance from `x` to the nearest excluded point (infinite on the full line).
    pub fn distance_to_excluded(&self, x: T) -> T {
        self.excluded_points()
            .into_iter()
            .map(|w| (x - w).abs())
            .fold(T::infinity(), T::min)
    }
}

/// Uniform grid of `n` interior nodes on `(x_min, x_max)`; the ends are ghosts.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D<T> {
    pub x_min: T,
    pub x_max: T,
    pub n: usize,
    pub h: T,
    pub nodes: Vec<T>,
}

impl<T: Real> Grid1D<T> {
    pub fn new(x_min: T, x_max: T, n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 interior nodes, got {n}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidGrid(format!(
                "empty or non-finite interval ({x_min}, {x_max})"
            )));
        }
        let h = (x_max - x_min) / T::of_usize(n + 1);
        let nodes = (0..n).map(|j| x_min + T::of_usize(j + 1) * h).collect();
        Ok(Grid1D {
            x_min,
            x_max,
            n,
            h,
            nodes,
        })
    }

    /// Unit-spaced grid on `(0, n + 1)`, for operators given as raw diagonals.
    pub fn unit(n: usize) -> Self {
        let h = T::one();
        Grid1D {
            x_min: T::zero(),
            x_max: T::of_usize(n + 1),
            n,
            h,
            nodes: (1..=n).map(T::of_usize).collect(),
        }
    }

    /// Same interval with `2n + 1` nodes; every old node is kept.
    pub fn refine(&self) -> Result<Self> {
        Grid1D::new(self.x_min, self.x_max, 2 * self.n + 1)
    }

    /// True when `fine` halves the spacing of `self` over the same interval.
    pub fn is_halved_by(&self, fine: &Grid1D<T>) -> bool {
        let tol = T::of(1e-10) * (self.x_max - self.x_min);
        fine.n + 1 == 2 * (self.n + 1)
            && (fine.x_min - self.x_min).abs() <= tol
            && (fine.x_max - self.x_max).abs() <= tol
    }

    pub fn same_as(&self, other: &Grid1D<T>) -> bool {
        let tol = T::of(1e-12) * (self.x_max - self.x_min);
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }

    /// Samples a function on the nodes.
    pub fn sample(&self, f: impl Fn(T) -> T) -> Vec<T> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// h-weighted inner product of two real grid functions.
    pub fn dot(&self, a: &[T], b: &[T]) -> T {
        self.h * a.iter().zip(b).map(|(&x, &y)| x * y).sum::<T>()
    }
}

/// One grid, or one grid per half-axis for punctured domains.
#[derive(Debug, Clone, PartialEq)]
pub enum GridLayout<T> {
    Single(Grid1D<T>),
    Split { left: Grid1D<T>, right: Grid1D<T> },
}

impl<T: Real> GridLayout<T> {
    pub fn grids(&self) -> Vec<&Grid1D<T>> {
        match self {
            GridLayout::Single(g) => vec![g],
            GridLayout::Split { left, right } => vec![left, right],
        }
    }

    /// The single grid, or the right half-axis grid of a split layout.
    pub fn primary(&self) -> &Grid1D<T> {
        match self {
            GridLayout::Single(g) => g,
            GridLayout::Split { right, .. } => right,
        }
    }
}

/// Builds the discretization grid(s) for a domain.
///
/// `x_max_hint` bounds unbounded directions (defaulting to [`DEFAULT_EXTENT`]
/// beyond the nearest wall) and is ignored for bounded intervals.
pub fn build_grid<T: Real>(
    domain: &DomainSpec<T>,
    n: usize,
    x_max_hint: Option<T>,
) -> Result<GridLayout<T>> {
    domain.validate()?;
    if n < 3 {
        return Err(Error::InvalidGrid(format!(
            "need at least 3 interior nodes, got {n}"
        )));
    }
    let extent = |wall: T| -> Result<T> {
        match x_max_hint {
            Some(x) if !(x.is_finite() && x > wall) => Err(Error::InvalidGrid(format!(
                "x_max hint {x} lies inside the excluded region (wall at {wall})"
            ))),
            Some(x) => Ok(x),
            None => Ok(wall.max(T::zero()) + T::of(DEFAULT_EXTENT)),
        }
    };
    let layout = match *domain {
        DomainSpec::FullLine => {
            let x = extent(T::zero())?;
            GridLayout::Single(Grid1D::new(-x, x, n)?)
        }
        DomainSpec::HalfLine { b } => GridLayout::Single(Grid1D::new(-b, extent(-b)?, n)?),
        DomainSpec::Interval { b } => GridLayout::Single(Grid1D::new(-b, b, n)?),
        DomainSpec::PuncturedExterior { b } => {
            let x = extent(b)?;
            GridLayout::Split {
                left: Grid1D::new(-x, -b, n)?,
                right: Grid1D::new(b, x, n)?,
            }
        }
        DomainSpec::PuncturedLine => {
            let x = extent(T::zero())?;
            GridLayout::Split {
                left: Grid1D::new(-x, T::zero(), n)?,
                right: Grid1D::new(T::zero(), x, n)?,
            }
        }
    };
    for g in layout.grids() {
        check_grid_in_domain(domain, g)?;
    }
    Ok(layout)
}

/// Every node strictly inside the domain, at least `h/2` from any excluded
/// point, and no excluded point strictly between the grid ends.
pub fn check_grid_in_domain<T: Real>(domain: &DomainSpec<T>, grid: &Grid1D<T>) -> Result<()> {
    let half_h = grid.h * T::half();
    for &x in &grid.nodes {
        if !domain.contains(x) {
            return Err(Error::GridMismatch(format!(
                "node {x} lies outside the domain"
            )));
        }
        if domain.distance_to_excluded(x) < half_h {
            return Err(Error::GridMismatch(format!(
                "node {x} is closer than h/2 to an excluded point"
            )));
        }
    }
    let tol = T::of(1e-12) * (grid.x_max - grid.x_min);
    for w in domain.excluded_points() {
        if w > grid.x_min + tol && w < grid.x_max - tol {
            return Err(Error::GridMismatch(format!(
                "excluded point {w} lies inside the grid span"
            )));
        }
    }
    if let DomainSpec::Interval { b } = *domain {
        if (grid.x_min + b).abs() > tol || (grid.x_max - b).abs() > tol {
            return Err(Error::GridMismatch(
                "interval grid must span exactly (-b, b)".into(),
            ));
        }
    }
    Ok(())
}

/// Cut-off radius beyond which the potential exceeds four times `energy_ceiling`.
///
/// Only the confining potential is considered; the affine correction decays
/// away from the walls and plays no role at the cut.
pub fn truncation_radius<T: Real>(model: &ModelSpec<T>, energy_ceiling: T) -> Result<T> {
    if !(energy_ceiling > T::zero() && energy_ceiling.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "energy ceiling must be positive, got {energy_ceiling}"
        )));
    }
    if model.domain.is_bounded() {
        return Err(Error::TruncationNotNeeded("domain is bounded".into()));
    }
    let target = T::of(4.0) * energy_ceiling;
    match &model.potential {
        Potential::None => Err(Error::TruncationNotNeeded("potential does not grow".into())),
        Potential::Harmonic => {
            let k = model.mass * model.omega * model.omega;
            Ok((T::two() * target / k).sqrt())
        }
        Potential::Custom(_) => {
            let v = |x: T| model.potential.eval(x, model.mass, model.omega);
            let right = outward_crossing(&v, target, T::one())?;
            let left = if matches!(model.domain, DomainSpec::HalfLine { .. }) {
                T::zero()
            } else {
                outward_crossing(&|x: T| v(-x), target, T::one())?
            };
            Ok(right.max(left))
        }
    }
}

fn outward_crossing<T: Real>(v: &dyn Fn(T) -> T, target: T, start: T) -> Result<T> {
    let mut lo = T::zero();
    let mut hi = start;
    let limit = T::of(1e8);
    while !(v(hi) >= target) {
        lo = hi;
        hi = hi * T::two();
        if hi > limit {
            return Err(Error::TruncationNotNeeded("potential does not grow".into()));
        }
    }
    for _ in 0..200 {
        let mid = T::half() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if v(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
