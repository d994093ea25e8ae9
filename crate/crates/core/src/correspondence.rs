//! Weak correspondence: coherent-state expectations of the quantum
//! Hamiltonian and their approach to the classical Hamiltonian as `hbar -> 0`.

use crate::coherent::{CoherentFamily, CoherentScheme, CoherentState};
use crate::domain_grid::{build_grid, Grid1D};
use crate::error::{Error, Result};
use crate::operators::{assemble, ModelSpec, TridiagonalOperator};
use crate::scalar::{ls_slope, Real};

/// h-weighted `<psi|T|psi>`.
pub fn expectation<T: Real>(state: &CoherentState<T>, op: &TridiagonalOperator<T>) -> Result<T> {
    if !state.grid.same_as(&op.grid) {
        return Err(Error::GridMismatch(
            "state and operator live on different grids".into(),
        ));
    }
    let z = op.expectation_complex(&state.samples);
    if z.im.abs() > T::of(1e-10) * (T::one() + z.re.abs()) {
        return Err(Error::DegenerateFit(format!(
            "expectation has imaginary part {}",
            z.im
        )));
    }
    Ok(z.re)
}

/// How the coherent states change along the `hbar` ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LadderStates<T> {
    /// Canonical states with fixed `omega`.
    Canonical { omega: T },
    /// Affine states with the product `beta * hbar` held fixed, so the
    /// fiducial sharpens as `hbar` shrinks.
    Affine { beta_hbar: T },
}

impl<T: Real> LadderStates<T> {
    pub fn scheme_at(&self, hbar: T) -> CoherentScheme<T> {
        match *self {
            LadderStates::Canonical { omega } => CoherentScheme::Canonical { omega },
            LadderStates::Affine { beta_hbar } => CoherentScheme::Affine {
                beta: beta_hbar / hbar,
            },
        }
    }
}

/// Default ladder `{1, 1/2, 1/4, 1/8}`.
pub fn default_hbars<T: Real>() -> Vec<T> {
    [1.0, 0.5, 0.25, 0.125].iter().map(|&h| T::of(h)).collect()
}

/// Smallest accepted ratio between the largest and smallest `hbar`.
pub const MIN_LADDER_SPAN: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingOptions<T> {
    pub n: usize,
    /// Outer cut for unbounded domains; defaults to `10 (1 + max |q|)`.
    pub x_max: Option<T>,
}

impl<T: Real> Default for ScalingOptions<T> {
    fn default() -> Self {
        ScalingOptions {
            n: 6000,
            x_max: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorrespondenceReport<T> {
    pub model: ModelSpec<T>,
    pub states: LadderStates<T>,
    pub points: Vec<(T, T)>,
    pub hbars: Vec<T>,
    /// `values[i][k]` is `H_hbar(p_i, q_i)` at `hbars[k]`.
    pub values: Vec<Vec<T>>,
    pub classical: Vec<T>,
    /// Slope of `log |H_hbar - H_cl|` against `log hbar`, per point.
    pub fitted_order: Vec<T>,
    /// Whether `|H_hbar - H_cl|` decreases along the ladder, per point.
    pub monotone: Vec<bool>,
    pub grids: Vec<Grid1D<T>>,
}

impl<T: Real> CorrespondenceReport<T> {
    pub fn difference(&self, point: usize, rung: usize) -> T {
        self.values[point][rung] - self.classical[point]
    }
}

/// Evaluates `H_hbar(p, q) = <p,q| H |p,q>` along an `hbar` ladder and fits the
/// order at which it approaches `p^2/2m + V(q)`.
pub fn hbar_scaling<T: Real>(
    model: &ModelSpec<T>,
    states: LadderStates<T>,
    points: &[(T, T)],
    hbars: &[T],
    opts: ScalingOptions<T>,
) -> Result<CorrespondenceReport<T>> {
    if hbars.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "need at least 3 hbar values, got {}",
            hbars.len()
        )));
    }
    if hbars.iter().any(|&h| !(h > T::zero() && h.is_finite()))
        || hbars.windows(2).any(|w| !(w[1] < w[0]))
    {
        return Err(Error::InvalidArgument(
            "hbar ladder must be positive and strictly decreasing".into(),
        ));
    }
    if hbars[0] / hbars[hbars.len() - 1] < T::of(MIN_LADDER_SPAN) * (T::one() - T::of(1e-12)) {
        return Err(Error::InvalidArgument(format!(
            "hbar ladder must span a factor of at least {MIN_LADDER_SPAN}"
        )));
    }
    if points.is_empty() {
        return Err(Error::InvalidArgument("no phase-space points".into()));
    }
    for &(p, q) in points {
        if !model.domain.contains(q) || !p.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "point ({p}, {q}) is outside the domain"
            )));
        }
        if matches!(states, LadderStates::Affine { .. }) && !(q > T::zero()) {
            return Err(Error::InvalidArgument(format!(
                "affine labels need q > 0, got {q}"
            )));
        }
    }
    let q_reach = points.iter().fold(T::zero(), |m, &(_, q)| m.max(q.abs()));
    let x_max = opts.x_max.unwrap_or(T::of(10.0) * (T::one() + q_reach));
    let mut values = vec![Vec::with_capacity(hbars.len()); points.len()];
    let mut grids = Vec::with_capacity(hbars.len());
    for &hbar in hbars {
        let m = model.with_hbar(hbar);
        let hint = if m.domain.is_bounded() {
            None
        } else {
            Some(x_max)
        };
        let layout = build_grid(&m.domain, opts.n, hint)?;
        let grid = layout.primary().clone();
        let op = assemble(&m, &grid)?;
        let fam = CoherentFamily::new(states.scheme_at(hbar), hbar, grid.clone())?;
        for (i, &(p, q)) in points.iter().enumerate() {
            let s = fam.state(p, q)?;
            values[i].push(expectation(&s, &op)?);
        }
        grids.push(grid);
    }
    let classical: Vec<T> = points
        .iter()
        .map(|&(p, q)| model.classical_energy(p, q))
        .collect();
    let log_h: Vec<T> = hbars.iter().map(|h| h.ln()).collect();
    let mut fitted_order = Vec::with_capacity(points.len());
    let mut monotone = Vec::with_capacity(points.len());
    for (vals, &hc) in values.iter().zip(&classical) {
        let diffs: Vec<T> = vals.iter().map(|&v| (v - hc).abs()).collect();
        if diffs.iter().any(|&d| !(d > T::zero()) || !d.is_finite()) {
            return Err(Error::DegenerateFit(
                "zero or non-finite remainder on the ladder".into(),
            ));
        }
        let logs: Vec<T> = diffs.iter().map(|d| d.ln()).collect();
        fitted_order
            .push(ls_slope(&log_h, &logs).ok_or_else(|| Error::DegenerateFit("order fit".into()))?);
        monotone.push(diffs.windows(2).all(|w| w[1] < w[0]));
    }
    Ok(CorrespondenceReport {
        model: model.clone(),
        states,
        points: points.to_vec(),
        hbars: hbars.to_vec(),
        values,
        classical,
        fitted_order,
        monotone,
        grids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::DomainSpec;
    use crate::operators::{dilation_matrix, Potential, Scheme};

    fn ho_setup(hbar: f64) -> (TridiagonalOperator<f64>, CoherentFamily<f64>) {
        let m = ModelSpec::<f64>::harmonic_oscillator(hbar);
        let g = build_grid(&m.domain, 8000, Some(12.0))
            .unwrap()
            .primary()
            .clone();
        let op = assemble(&m, &g).unwrap();
        let fam = CoherentFamily::new(CoherentScheme::Canonical { omega: 1.0 }, hbar, g).unwrap();
        (op, fam)
    }

    #[test]
    fn canonical_oscillator_moments() {
        let (op, fam) = ho_setup(1.0);
        for &(p, q) in &[(0.0, 0.0), (1.0, 1.0), (-2.0, 0.5)] {
            let e = expectation(&fam.state(p, q).unwrap(), &op).unwrap();
            let want = (p * p + q * q) / 2.0 + 0.5;
            assert!((e - want).abs() < 1e-4, "{e} vs {want}");
        }
    }

    #[test]
    fn affine_half_oscillator_dual_quadrature() {
        // operator quadratic form against direct quadrature of the integrand
        // |psi'|^2/2 + (3/8) hbar^2 |psi|^2/x^2 + x^2 |psi|^2 / 2 with analytic psi'
        let (beta, hbar) = (2.0, 1.0);
        let m = ModelSpec::<f64>::half_harmonic_oscillator(hbar);
        let g = build_grid(&m.domain, 20000, Some(30.0))
            .unwrap()
            .primary()
            .clone();
        let op = assemble(&m, &g).unwrap();
        let fam = CoherentFamily::new(CoherentScheme::Affine { beta }, hbar, g.clone()).unwrap();
        let e = expectation(&fam.state(0.0, 1.0).unwrap(), &op).unwrap();
        let a = beta - 0.5;
        let raw = |x: f64| x.powf(a) * (-beta * x).exp();
        let draw = |x: f64| (a / x - beta) * raw(x);
        // Simpson on a fine independent grid
        let n = 200_000;
        let (lo, hi) = (0.0, 30.0);
        let dx = (hi - lo) / n as f64;
        let simpson = |f: &dyn Fn(f64) -> f64| {
            let mut s = 0.0;
            for k in 1..n {
                let x = lo + k as f64 * dx;
                s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(x);
            }
            s * dx / 3.0
        };
        let norm = simpson(&|x| raw(x).powi(2));
        let integrand = |x: f64| {
            0.5 * hbar * hbar * draw(x).powi(2)
                + 0.375 * hbar * hbar * raw(x).powi(2) / (x * x)
                + 0.5 * x * x * raw(x).powi(2)
        };
        let direct = simpson(&integrand) / norm;
        assert!(e > 0.0);
        assert!((e - direct).abs() < 1e-4, "{e} vs {direct}");
    }

    #[test]
    fn expectation_grid_mismatch() {
        let (op, _) = ho_setup(1.0);
        let g = Grid1D::<f64>::new(-5.0, 5.0, 100).unwrap();
        let fam = CoherentFamily::new(CoherentScheme::Canonical { omega: 1.0 }, 1.0, g).unwrap();
        assert!(expectation(&fam.fiducial(), &op).is_err());
    }

    #[test]
    fn canonical_ladder_order_one() {
        let m = ModelSpec::<f64>::harmonic_oscillator(1.0);
        let r = hbar_scaling(
            &m,
            LadderStates::Canonical { omega: 1.0 },
            &[(1.0, 1.0)],
            &default_hbars::<f64>(),
            ScalingOptions {
                n: 8000,
                x_max: Some(12.0),
            },
        )
        .unwrap();
        for (k, &h) in r.hbars.iter().enumerate() {
            assert!((r.difference(0, k) - h / 2.0).abs() < 1e-4);
        }
        assert!(
            (r.fitted_order[0] - 1.0).abs() < 1e-3,
            "{:?}",
            r.fitted_order
        );
        assert!(r.monotone[0]);
    }

    #[test]
    fn free_particle_remainder_is_quarter_hbar() {
        let m = ModelSpec::new(
            DomainSpec::FullLine,
            Scheme::Canonical,
            1.0,
            Potential::None,
        );
        let r = hbar_scaling(
            &m,
            LadderStates::Canonical { omega: 1.0 },
            &[(0.0, 0.0)],
            &default_hbars::<f64>(),
            ScalingOptions {
                n: 8000,
                x_max: Some(12.0),
            },
        )
        .unwrap();
        for (k, &h) in r.hbars.iter().enumerate() {
            assert!((r.values[0][k] - h / 4.0).abs() < 1e-4);
        }
        assert!((r.fitted_order[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn affine_half_oscillator_ladder() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let r = hbar_scaling(
            &m,
            LadderStates::Affine { beta_hbar: 2.0 },
            &[(0.0, 1.0), (1.0, 2.0)],
            &default_hbars::<f64>(),
            ScalingOptions::default(),
        )
        .unwrap();
        for (i, o) in r.fitted_order.iter().enumerate() {
            assert!(*o >= 0.95, "{o}");
            assert!(r.monotone[i]);
        }
    }

    #[test]
    fn ladder_validation() {
        let m = ModelSpec::<f64>::harmonic_oscillator(1.0);
        let st = LadderStates::Canonical { omega: 1.0 };
        let o = ScalingOptions::default();
        assert!(hbar_scaling(&m, st, &[(0.0, 0.0)], &[1.0, 0.5], o).is_err());
        assert!(hbar_scaling(&m, st, &[(0.0, 0.0)], &[1.0, 0.5, 0.6, 0.1], o).is_err());
        assert!(hbar_scaling(&m, st, &[(0.0, 0.0)], &[1.0, 0.9, 0.8], o).is_err());
        let half = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let aff = LadderStates::Affine { beta_hbar: 2.0 };
        assert!(hbar_scaling(&half, aff, &[(0.0, -1.0)], &default_hbars::<f64>(), o).is_err());
    }

    #[test]
    fn covariance_through_dense_and_banded_dilation() {
        let hbar = 1.0;
        let g = Grid1D::<f64>::new(0.0, 12.0, 600).unwrap();
        let fam =
            CoherentFamily::new(CoherentScheme::Affine { beta: 4.0 }, hbar, g.clone()).unwrap();
        let s = fam.state(0.4, 1.3).unwrap();
        let d = dilation_matrix(&g, hbar);
        let dense = d.to_dense();
        let mut acc = num_complex::Complex::new(0.0, 0.0);
        for i in 0..g.n {
            for k in 0..g.n {
                acc += s.samples[i].conj() * dense[i][k] * s.samples[k];
            }
        }
        let banded = d.expectation(&s.samples);
        assert!((acc * g.h - banded).norm() < 1e-12);
        assert!((banded.re - 0.4 * 1.3).abs() < 1e-3);
    }
}
