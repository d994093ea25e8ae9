//! Discretized quantum Hamiltonians for the canonical and affine schemes, and
//! the operator identities behind the affine correction term.
//!
//! Kinetic energy uses the 3-point stencil for `-hbar^2/(2m) d^2/dx^2` with
//! Dirichlet ghost ends. In the affine scheme the diagonal also carries
//! `affine_correction / (2m)`, the bracketed `hbar^2` term of the quantized
//! Hamiltonian with the global one-half applied here rather than inside
//! [`affine_correction`].

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::domain_grid::{check_grid_in_domain, DomainSpec, Grid1D};
use crate::error::{Error, Result};
use crate::scalar::{ls_slope, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Canonical,
    Affine,
}

/// Named members of the Hamiltonian catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CatalogId {
    /// Half-line `0 < q`.
    Item1,
    /// Shifted half-line `-b < q`.
    Item2,
    /// Affine box `-b < q < b`, no potential.
    Item3,
    /// Exterior `b < |q|`.
    Item4,
    /// Punctured line `0 < |q|`.
    Item5,
    HarmonicOscillator,
    HalfHarmonicOscillator,
    CanonicalBox,
}

/// Classical potential `V(q)`.
#[derive(Clone, Default)]
pub enum Potential<T> {
    #[default]
    None,
    /// `m omega^2 q^2 / 2`.
    Harmonic,
    Custom(Arc<dyn Fn(T) -> T + Send + Sync>),
}

impl<T: Real> Potential<T> {
    pub fn custom(f: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Potential::Custom(Arc::new(f))
    }

    pub fn eval(&self, x: T, mass: T, omega: T) -> T {
        match self {
            Potential::None => T::zero(),
            Potential::Harmonic => T::half() * mass * omega * omega * x * x,
            Potential::Custom(f) => f(x),
        }
    }
}

impl<T> fmt::Debug for Potential<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Potential::None => f.write_str("None"),
            Potential::Harmonic => f.write_str("Harmonic"),
            Potential::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A classical Hamiltonian `p^2/2m + V(q)` on a domain, with its quantization scheme.
#[derive(Debug, Clone)]
pub struct ModelSpec<T> {
    pub domain: DomainSpec<T>,
    pub scheme: Scheme,
    pub hbar: T,
    pub omega: T,
    pub mass: T,
    pub potential: Potential<T>,
    pub catalog_id: Option<CatalogId>,
}

impl<T: Real> ModelSpec<T> {
    pub fn new(domain: DomainSpec<T>, scheme: Scheme, hbar: T, potential: Potential<T>) -> Self {
        ModelSpec {
            domain,
            scheme,
            hbar,
            omega: T::one(),
            mass: T::one(),
            potential,
            catalog_id: None,
        }
    }

    /// Canonical oscillator on the full line.
    pub fn harmonic_oscillator(hbar: T) -> Self {
        let mut m = Self::new(
            DomainSpec::FullLine,
            Scheme::Canonical,
            hbar,
            Potential::Harmonic,
        );
        m.catalog_id = Some(CatalogId::HarmonicOscillator);
        m
    }

    /// Affine oscillator on `0 < q`.
    pub fn half_harmonic_oscillator(hbar: T) -> Self {
        let mut m = Self::new(
            DomainSpec::HalfLine { b: T::zero() },
            Scheme::Affine,
            hbar,
            Potential::Harmonic,
        );
        m.catalog_id = Some(CatalogId::HalfHarmonicOscillator);
        m
    }

    /// Free particle on `(-b, b)` with plain Dirichlet walls.
    pub fn canonical_box(b: T, hbar: T) -> Self {
        let mut m = Self::new(
            DomainSpec::Interval { b },
            Scheme::Canonical,
            hbar,
            Potential::None,
        );
        m.catalog_id = Some(CatalogId::CanonicalBox);
        m
    }

    /// Free particle on `(-b, b)` in the affine scheme.
    pub fn affine_box(b: T, hbar: T) -> Self {
        Self::catalog(CatalogId::Item3, b, hbar, Potential::None)
    }

    /// Catalog entry by id; `b` is ignored where the domain has no wall parameter.
    pub fn catalog(id: CatalogId, b: T, hbar: T, potential: Potential<T>) -> Self {
        let (domain, scheme, potential) = match id {
            CatalogId::Item1 => (
                DomainSpec::HalfLine { b: T::zero() },
                Scheme::Affine,
                potential,
            ),
            CatalogId::Item2 => (DomainSpec::HalfLine { b }, Scheme::Affine, potential),
            CatalogId::Item3 => (DomainSpec::Interval { b }, Scheme::Affine, Potential::None),
            CatalogId::Item4 => (
                DomainSpec::PuncturedExterior { b },
                Scheme::Affine,
                potential,
            ),
            CatalogId::Item5 => (DomainSpec::PuncturedLine, Scheme::Affine, potential),
            CatalogId::HarmonicOscillator => return Self::harmonic_oscillator(hbar),
            CatalogId::HalfHarmonicOscillator => return Self::half_harmonic_oscillator(hbar),
            CatalogId::CanonicalBox => return Self::canonical_box(b, hbar),
        };
        let mut m = Self::new(domain, scheme, hbar, potential);
        m.catalog_id = Some(id);
        m
    }

    pub fn with_hbar(&self, hbar: T) -> Self {
        ModelSpec {
            hbar,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        for (name, v) in [
            ("hbar", self.hbar),
            ("omega", self.omega),
            ("mass", self.mass),
        ] {
            if !(v > T::zero() && v.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.scheme == Scheme::Affine && self.domain == DomainSpec::FullLine {
            return Err(Error::InvalidModel(
                "affine scheme needs an excluded point; full line given".into(),
            ));
        }
        Ok(())
    }

    pub fn potential_at(&self, x: T) -> T {
        self.potential.eval(x, self.mass, self.omega)
    }

    /// Classical Hamiltonian `p^2/2m + V(q)`.
    pub fn classical_energy(&self, p: T, q: T) -> T {
        p * p / (T::two() * self.mass) + self.potential_at(q)
    }

    /// Potential seen by the quantum Hamiltonian at an interior point.
    pub fn total_potential(&self, x: T) -> Result<T> {
        let v = self.potential_at(x);
        Ok(match self.scheme {
            Scheme::Canonical => {
                if !self.domain.contains(x) {
                    return Err(Error::OutsideDomain {
                        x: x.to_f64_lossy(),
                    });
                }
                v
            }
            Scheme::Affine => {
                v + affine_correction(&self.domain, self.hbar, x)? / (T::two() * self.mass)
            }
        })
    }
}

/// The extra `hbar^2` potential of the affine scheme, as it appears inside the
/// bracket next to `P^2` (the caller applies the global one-half).
pub fn affine_correction<T: Real>(domain: &DomainSpec<T>, hbar: T, x: T) -> Result<T> {
    if !domain.contains(x) {
        return Err(Error::OutsideDomain {
            x: x.to_f64_lossy(),
        });
    }
    let h2 = hbar * hbar;
    let three_quarters = T::of(0.75);
    Ok(match *domain {
        DomainSpec::FullLine => T::zero(),
        DomainSpec::HalfLine { b } => three_quarters * h2 / ((x + b) * (x + b)),
        DomainSpec::Interval { b } | DomainSpec::PuncturedExterior { b } => {
            let d = b * b - x * x;
            h2 * (T::two() * x * x + b * b) / (d * d)
        }
        DomainSpec::PuncturedLine => T::two() * h2 / (x * x),
    })
}

/// Real symmetric tridiagonal matrix on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator<T> {
    pub diag: Vec<T>,
    pub offdiag: Vec<T>,
    pub grid: Grid1D<T>,
    pub hbar: T,
    pub mass: T,
}

impl<T: Real> TridiagonalOperator<T> {
    /// Raw matrix on a unit-spaced grid.
    pub fn from_diagonals(diag: Vec<T>, offdiag: Vec<T>) -> Result<Self> {
        if diag.is_empty() || offdiag.len() + 1 != diag.len() {
            return Err(Error::InvalidArgument(format!(
                "need n diagonal and n-1 off-diagonal entries, got {} and {}",
                diag.len(),
                offdiag.len()
            )));
        }
        let n = diag.len();
        Ok(TridiagonalOperator {
            diag,
            offdiag,
            grid: Grid1D::unit(n),
            hbar: T::one(),
            mass: T::one(),
        })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm(&self) -> T {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i].abs();
                if i > 0 {
                    s = s + self.offdiag[i - 1].abs();
                }
                if i + 1 < n {
                    s = s + self.offdiag[i].abs();
                }
                s
            })
            .fold(T::zero(), T::max)
    }

    /// Gershgorin interval containing the whole spectrum.
    pub fn gershgorin(&self) -> (T, T) {
        let n = self.len();
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for i in 0..n {
            let mut r = T::zero();
            if i > 0 {
                r = r + self.offdiag[i - 1].abs();
            }
            if i + 1 < n {
                r = r + self.offdiag[i].abs();
            }
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    pub fn apply(&self, v: &[T]) -> Vec<T> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s = s + self.offdiag[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s = s + self.offdiag[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// h-weighted `<psi|T|psi>` for a complex grid function.
    pub fn expectation_complex(&self, psi: &[Complex<T>]) -> Complex<T> {
        let n = self.len();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            let mut t = psi[i] * self.diag[i];
            if i > 0 {
                t = t + psi[i - 1] * self.offdiag[i - 1];
            }
            if i + 1 < n {
                t = t + psi[i + 1] * self.offdiag[i];
            }
            acc = acc + psi[i].conj() * t;
        }
        acc * self.grid.h
    }
}

/// Assembles the discretized Hamiltonian of `model` on `grid`.
pub fn assemble<T: Real>(model: &ModelSpec<T>, grid: &Grid1D<T>) -> Result<TridiagonalOperator<T>> {
    model.validate()?;
    check_grid_in_domain(&model.domain, grid)?;
    let kinetic = model.hbar * model.hbar / (T::two() * model.mass * grid.h * grid.h);
    let diag = grid
        .nodes
        .iter()
        .map(|&x| Ok(T::two() * kinetic + model.total_potential(x)?))
        .collect::<Result<Vec<T>>>()?;
    Ok(TridiagonalOperator {
        diag,
        offdiag: vec![-kinetic; grid.n - 1],
        grid: grid.clone(),
        hbar: model.hbar,
        mass: model.mass,
    })
}

/// Hermitian tridiagonal matrix with real diagonal and complex upper diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianTridiagonal<T> {
    pub diag: Vec<T>,
    /// `upper[j]` is the `(j, j+1)` entry; `(j+1, j)` is its conjugate.
    pub upper: Vec<Complex<T>>,
    pub grid: Grid1D<T>,
}

impl<T: Real> HermitianTridiagonal<T> {
    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let n = self.diag.len();
        (0..n)
            .map(|i| {
                let mut s = v[i] * self.diag[i];
                if i > 0 {
                    s = s + self.upper[i - 1].conj() * v[i - 1];
                }
                if i + 1 < n {
                    s = s + self.upper[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// h-weighted `<a|M|b>`.
    pub fn matrix_element(&self, a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
        let mb = self.apply(b);
        let s: Complex<T> = a
            .iter()
            .zip(&mb)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
                acc + x.conj() * y
            });
        s * self.grid.h
    }

    pub fn expectation(&self, psi: &[Complex<T>]) -> Complex<T> {
        self.matrix_element(psi, psi)
    }

    /// `|<f|M g> - <M f|g>|`, zero for a Hermitian matrix.
    pub fn hermiticity_residual(&self, f: &[Complex<T>], g: &[Complex<T>]) -> T {
        let mf = self.apply(f);
        let left = self.matrix_element(f, g);
        let right: Complex<T> = mf
            .iter()
            .zip(g)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| {
                acc + x.conj() * y
            })
            * self.grid.h;
        (left - right).norm()
    }

    pub fn to_dense(&self) -> Vec<Vec<Complex<T>>> {
        let n = self.diag.len();
        let zero = Complex::new(T::zero(), T::zero());
        let mut m = vec![vec![zero; n]; n];
        for i in 0..n {
            m[i][i] = Complex::new(self.diag[i], T::zero());
            if i + 1 < n {
                m[i][i + 1] = self.upper[i];
                m[i + 1][i] = self.upper[i].conj();
            }
        }
        m
    }
}

/// Dilation operator `D = (PQ + QP)/2`, i.e. `-i hbar (x d/dx + 1/2)`.
///
/// Discretized as the symmetrized product of the central-difference momentum
/// and the position multiplier, which is exactly Hermitian and second order.
pub fn dilation_matrix<T: Real>(grid: &Grid1D<T>, hbar: T) -> HermitianTridiagonal<T> {
    let scale = hbar / (T::of(4.0) * grid.h);
    let upper = grid
        .nodes
        .windows(2)
        .map(|w| Complex::new(T::zero(), -scale * (w[0] + w[1])))
        .collect();
    HermitianTridiagonal {
        diag: vec![T::zero(); grid.n],
        upper,
        grid: grid.clone(),
    }
}

/// Central-difference momentum `-i hbar d/dx`.
pub fn momentum_matrix<T: Real>(grid: &Grid1D<T>, hbar: T) -> HermitianTridiagonal<T> {
    let c = Complex::new(T::zero(), -hbar / (T::two() * grid.h));
    HermitianTridiagonal {
        diag: vec![T::zero(); grid.n],
        upper: vec![c; grid.n - 1],
        grid: grid.clone(),
    }
}

/// Smallest log-log order accepted for a test function at a grid end: the
/// function and its first two derivatives must vanish there.
const MIN_END_ORDER: f64 = 2.5;
const END_WINDOW: usize = 5;

fn check_interior_support<T: Real>(grid: &Grid1D<T>, f: &[T]) -> Result<()> {
    let fmax = f.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if fmax == T::zero() {
        return Err(Error::Precondition(
            "test function vanishes identically".into(),
        ));
    }
    let w = END_WINDOW.min(grid.n);
    let ends: [(Vec<usize>, T); 2] = [
        ((0..w).collect(), grid.x_min),
        (((grid.n - w)..grid.n).rev().collect(), grid.x_max),
    ];
    for (idx, end) in ends {
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for &j in &idx {
            let v = f[j].abs();
            if v > T::of(1e-14) * fmax {
                xs.push((grid.nodes[j] - end).abs().ln());
                ys.push(v.ln());
            }
        }
        if xs.len() < 2 {
            continue;
        }
        let order = ls_slope(&xs, &ys).unwrap_or(T::zero());
        if order < T::of(MIN_END_ORDER) {
            return Err(Error::Precondition(format!(
                "test function is not interior-supported near x = {end} (local order {order})"
            )));
        }
    }
    Ok(())
}

/// Residual of `D Q^-2 D = P^2 + (3/4) hbar^2 / Q^2` on the grid, as the largest
/// `|<f|(D Q^-2 D - P^2 - (3/4) hbar^2 Q^-2)|f>| / <f|f>` over the test functions.
///
/// The grid must lie on the positive half-line.
pub fn kinetic_identity_residual<T: Real>(
    grid: &Grid1D<T>,
    hbar: T,
    testfns: &[&dyn Fn(T) -> T],
) -> Result<T> {
    if grid.x_min < T::zero() {
        return Err(Error::GridMismatch(
            "kinetic identity needs a grid on 0 < x".into(),
        ));
    }
    if testfns.is_empty() {
        return Err(Error::InvalidArgument("no test functions".into()));
    }
    let dil = dilation_matrix(grid, hbar);
    let h = grid.h;
    let h2 = hbar * hbar;
    let mut worst = T::zero();
    for f in testfns {
        let fs = grid.sample(f);
        check_interior_support(grid, &fs)?;
        let fc: Vec<Complex<T>> = fs.iter().map(|&v| Complex::new(v, T::zero())).collect();
        let df = dil.apply(&fc);
        let mut dqd = T::zero();
        let mut p2 = T::zero();
        let mut inv_q2 = T::zero();
        let mut norm = T::zero();
        for j in 0..grid.n {
            let x = grid.nodes[j];
            let left = if j > 0 { fs[j - 1] } else { T::zero() };
            let right = if j + 1 < grid.n { fs[j + 1] } else { T::zero() };
            dqd = dqd + df[j].norm_sqr() / (x * x);
            p2 = p2 - fs[j] * (right - T::two() * fs[j] + left) / (h * h);
            inv_q2 = inv_q2 + fs[j] * fs[j] / (x * x);
            norm = norm + fs[j] * fs[j];
        }
        let r = (dqd - h2 * p2 - T::of(0.75) * h2 * inv_q2).abs() / norm;
        worst = worst.max(r);
    }
    Ok(worst)
}

/// Quadrature of `d/dx [f g]` over the grid span, with the product extended to
/// the ghost ends by quadratic extrapolation. Equals `f g |_{x_min}^{x_max}` to
/// second order; nonzero whenever the product survives at a wall.
pub fn boundary_term<T: Real>(f: &[T], g: &[T], grid: &Grid1D<T>) -> Result<T> {
    if f.len() != grid.n || g.len() != grid.n {
        return Err(Error::GridMismatch("samples do not match the grid".into()));
    }
    let n = grid.n;
    let u: Vec<T> = f.iter().zip(g).map(|(&a, &b)| a * b).collect();
    let three = T::of(3.0);
    let mut ext = Vec::with_capacity(n + 2);
    ext.push(three * u[0] - three * u[1] + u[2]);
    ext.extend_from_slice(&u);
    ext.push(three * u[n - 1] - three * u[n - 2] + u[n - 3]);
    let h = grid.h;
    let m = ext.len();
    let mut du = vec![T::zero(); m];
    du[0] = (-three * ext[0] + T::of(4.0) * ext[1] - ext[2]) / (T::two() * h);
    du[m - 1] = (three * ext[m - 1] - T::of(4.0) * ext[m - 2] + ext[m - 3]) / (T::two() * h);
    for j in 1..m - 1 {
        du[j] = (ext[j + 1] - ext[j - 1]) / (T::two() * h);
    }
    let interior: T = du[1..m - 1].iter().copied().sum();
    Ok(h * (interior + T::half() * (du[0] + du[m - 1])))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::build_grid;

    #[test]
    fn corrections_match_catalog() {
        let c = |d: DomainSpec<f64>, x| affine_correction(&d, 1.0, x).unwrap();
        assert!((c(DomainSpec::<f64>::HalfLine { b: 0.0 }, 1.0) - 0.75).abs() < 1e-15);
        assert!((c(DomainSpec::Interval { b: 1.0 }, 0.0) - 1.0).abs() < 1e-15);
        assert!((c(DomainSpec::PuncturedLine, 2.0) - 0.5).abs() < 1e-15);
        assert_eq!(c(DomainSpec::FullLine, 3.7), 0.0);
        // shifted half-line: (3/4)/(x+b)^2
        assert!((c(DomainSpec::<f64>::HalfLine { b: 1.0 }, 1.0) - 0.1875).abs() < 1e-15);
        // exterior uses the box expression: (2*4+1)/(1-4)^2 = 1
        assert!((c(DomainSpec::<f64>::PuncturedExterior { b: 1.0 }, 2.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn correction_scales_with_hbar_squared() {
        let d = DomainSpec::<f64>::HalfLine { b: 0.0 };
        let a = affine_correction(&d, 0.5, 1.0).unwrap();
        assert!((a - 0.1875).abs() < 1e-15);
    }

    #[test]
    fn correction_rejects_outside_points() {
        assert!(affine_correction(&DomainSpec::<f64>::HalfLine { b: 0.0 }, 1.0, 0.0).is_err());
        assert!(affine_correction(&DomainSpec::Interval { b: 1.0 }, 1.0, 1.0).is_err());
        assert!(
            affine_correction(&DomainSpec::<f64>::PuncturedExterior { b: 1.0 }, 1.0, 0.5).is_err()
        );
        assert!(affine_correction(&DomainSpec::<f64>::PuncturedLine, 1.0, 0.0).is_err());
    }

    #[test]
    fn exterior_approaches_punctured_line() {
        let ext = DomainSpec::<f64>::PuncturedExterior { b: 1e-6 };
        for &x in &[0.1, -0.1, 0.5, 3.0, -20.0] {
            let a = affine_correction(&ext, 1.0, x).unwrap();
            let b = affine_correction(&DomainSpec::PuncturedLine, 1.0, x).unwrap();
            assert!(((a - b) / b).abs() < 1e-9, "x={x}");
        }
    }

    #[test]
    fn affine_on_full_line_rejected() {
        let m = ModelSpec::new(
            DomainSpec::FullLine,
            Scheme::Affine,
            1.0,
            Potential::Harmonic,
        );
        assert!(m.validate().is_err());
        let g = Grid1D::<f64>::new(-1.0, 1.0, 10).unwrap();
        assert!(assemble(&m, &g).is_err());
    }

    #[test]
    fn assemble_rejects_mismatched_grid() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let g = Grid1D::<f64>::new(-1.0, 5.0, 20).unwrap();
        assert!(matches!(assemble(&m, &g), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn affine_minus_canonical_is_half_correction() {
        let affine = ModelSpec::<f64>::half_harmonic_oscillator(0.7);
        let canonical = ModelSpec {
            scheme: Scheme::Canonical,
            ..affine.clone()
        };
        let g = build_grid(&affine.domain, 50, Some(6.0)).unwrap();
        let g = g.primary();
        let a = assemble(&affine, g).unwrap();
        let c = assemble(&canonical, g).unwrap();
        assert_eq!(a.offdiag, c.offdiag);
        for (j, &x) in g.nodes.iter().enumerate() {
            let corr = 0.5 * affine_correction(&affine.domain, 0.7, x).unwrap();
            assert!((a.diag[j] - c.diag[j] - corr).abs() <= 1e-12 * a.diag[j].abs());
        }
    }

    #[test]
    fn stencil_entries() {
        let m = ModelSpec::<f64>::canonical_box(1.0, 2.0);
        let g = build_grid(&m.domain, 3, None).unwrap();
        let t = assemble(&m, g.primary()).unwrap();
        // hbar^2/(m h^2) = 4/0.25 = 16
        assert_eq!(t.diag, vec![16.0; 3]);
        assert_eq!(t.offdiag, vec![-8.0; 2]);
        assert_eq!(t.norm(), 32.0);
    }

    #[test]
    fn dilation_is_hermitian_and_real_states_have_zero_mean() {
        let g = Grid1D::<f64>::new(0.0, 10.0, 2000).unwrap();
        let d = dilation_matrix(&g, 1.0);
        let f: Vec<Complex<f64>> = g
            .nodes
            .iter()
            .map(|&x| Complex::new(x * (-x * x / 2.0).exp(), 0.0))
            .collect();
        let e = d.expectation(&f);
        assert!(e.norm() < 1e-12, "{e}");
        let k: Vec<Complex<f64>> = g
            .nodes
            .iter()
            .map(|&x| Complex::from_polar((-(x - 4.0).powi(2)).exp(), 0.3 * x))
            .collect();
        assert!(d.hermiticity_residual(&f, &k) < 1e-12);
    }

    #[test]
    fn dilation_of_boosted_bump() {
        // <e^{ix} g | D | e^{ix} g> = hbar * int x g^2 dx for real g
        let hbar = 1.0;
        let g_fn = |x: f64| (-(x - 5.0).powi(2)).exp();
        let mut errs = Vec::new();
        for n in [399usize, 799, 1599] {
            let g = Grid1D::<f64>::new(0.0, 10.0, n).unwrap();
            let d = dilation_matrix(&g, hbar);
            let f: Vec<Complex<f64>> = g
                .nodes
                .iter()
                .map(|&x| Complex::from_polar(g_fn(x), x))
                .collect();
            let got = d.expectation(&f);
            let want = hbar * g.h * g.nodes.iter().map(|&x| x * g_fn(x).powi(2)).sum::<f64>();
            assert!(got.im.abs() < 1e-12);
            errs.push((got.re - want).abs());
        }
        assert!(
            errs[0] / errs[1] > 3.5 && errs[1] / errs[2] > 3.5,
            "{errs:?}"
        );
    }

    #[test]
    fn dense_form_matches_banded_apply() {
        let g = Grid1D::<f64>::new(0.0, 2.0, 6).unwrap();
        let d = dilation_matrix(&g, 1.3);
        let dense = d.to_dense();
        let v: Vec<Complex<f64>> = (0..6)
            .map(|j| Complex::new(j as f64, 1.0 - j as f64))
            .collect();
        let banded = d.apply(&v);
        for i in 0..6 {
            let s: Complex<f64> = (0..6).map(|k| dense[i][k] * v[k]).sum();
            assert!((s - banded[i]).norm() < 1e-12);
            for k in 0..6 {
                assert!((dense[i][k] - dense[k][i].conj()).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn kinetic_identity_converges_second_order() {
        let f1 = |x: f64| x.powi(3) * (5.0 - x).powi(3);
        let mut res = Vec::new();
        for n in [99usize, 199, 399, 799] {
            let g = Grid1D::<f64>::new(0.0, 5.0, n).unwrap();
            res.push(kinetic_identity_residual(&g, 1.0, &[&f1]).unwrap());
        }
        for w in res.windows(2) {
            assert!(w[0] / w[1] > 3.5, "{res:?}");
        }
    }

    #[test]
    fn kinetic_identity_preconditions() {
        let g = Grid1D::<f64>::new(0.0, 5.0, 200).unwrap();
        let zero = |_x: f64| 0.0;
        assert!(matches!(
            kinetic_identity_residual(&g, 1.0, &[&zero]),
            Err(Error::Precondition(_))
        ));
        let edge = |x: f64| x.powf(1.5) * (-x).exp();
        assert!(matches!(
            kinetic_identity_residual(&g, 1.0, &[&edge]),
            Err(Error::Precondition(_))
        ));
        let neg = Grid1D::<f64>::new(-1.0, 5.0, 200).unwrap();
        let f1 = |x: f64| x.powi(3) * (5.0 - x).powi(3);
        assert!(kinetic_identity_residual(&neg, 1.0, &[&f1]).is_err());
    }

    #[test]
    fn boundary_term_examples() {
        let g = Grid1D::<f64>::new(0.0, 1.0, 99).unwrap();
        let ones = vec![1.0; g.n];
        assert!(boundary_term(&ones, &ones, &g).unwrap().abs() < 1e-13);
        let x = g.nodes.clone();
        assert!((boundary_term(&x, &ones, &g).unwrap() - 1.0).abs() < 1e-13);
        let b = Grid1D::<f64>::new(-1.0, 1.0, 199).unwrap();
        let c = b.sample(|x| (std::f64::consts::FRAC_PI_2 * x).cos());
        assert!(boundary_term(&c, &c, &b).unwrap().abs() < 1e-5);
    }

    #[test]
    fn boundary_term_sees_nonvanishing_wall_values() {
        // f = cos(pi x / 4) does not vanish at x = +-1; f g |_{-1}^{1} with g = x is 2 cos(pi/4)
        let want = 2.0 * std::f64::consts::FRAC_PI_4.cos();
        let err = |n: usize| {
            let b = Grid1D::<f64>::new(-1.0, 1.0, n).unwrap();
            let f = b.sample(|x| (std::f64::consts::FRAC_PI_4 * x).cos());
            (boundary_term(&f, &b.nodes, &b).unwrap() - want).abs()
        };
        let (coarse, fine) = (err(399), err(799));
        assert!(coarse < 1e-4, "{coarse}");
        assert!(coarse / fine > 3.5, "{coarse} {fine}");
    }

    proptest::proptest! {
        #[test]
        fn corrections_nonnegative(x in -50.0f64..50.0, b in 0.01f64..5.0, hbar in 0.01f64..3.0) {
            let domains = [
                DomainSpec::<f64>::HalfLine { b: 0.0 },
                DomainSpec::<f64>::HalfLine { b },
                DomainSpec::Interval { b },
                DomainSpec::<f64>::PuncturedExterior { b },
                DomainSpec::PuncturedLine,
            ];
            for d in domains {
                if d.contains(x) {
                    proptest::prop_assert!(affine_correction(&d, hbar, x).unwrap() >= 0.0);
                }
            }
        }
    }
}
