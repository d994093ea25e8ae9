//! Canonical and affine coherent states on a grid, their overlaps, and the
//! Fubini-Study geometry of the label space.
//!
//! Canonical fiducial: `[Q + iP/omega]|omega> = 0`, a Gaussian of width
//! `sqrt(hbar/omega)`. States are `e^{ipx/hbar} psi0(x - q)`.
//!
//! Affine fiducial: `[(Q - 1) + iD/(beta hbar)]|beta> = 0` with
//! `D = -i hbar (x d/dx + 1/2)`. The `hbar` cancels, leaving
//! `x psi' = (beta (1 - x) - 1/2) psi`, so `psi(x) ~ x^(beta - 1/2) e^(-beta x)`.
//! States are `e^{ipx/hbar} q^(-1/2) psi(x/q)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::domain_grid::Grid1D;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoherentScheme<T> {
    Canonical { omega: T },
    Affine { beta: T },
}

/// A coherent state sampled on a grid, h-normalized.
#[derive(Debug, Clone)]
pub struct CoherentState<T> {
    pub scheme: CoherentScheme<T>,
    pub hbar: T,
    pub p: T,
    pub q: T,
    pub samples: Vec<Complex<T>>,
    pub grid: Grid1D<T>,
}

impl<T: Real> CoherentState<T> {
    pub fn norm(&self) -> T {
        (self.grid.h * self.samples.iter().map(|z| z.norm_sqr()).sum::<T>()).sqrt()
    }

    /// h-weighted `<x>`.
    pub fn mean_position(&self) -> T {
        self.grid.h
            * self
                .samples
                .iter()
                .zip(&self.grid.nodes)
                .map(|(z, &x)| z.norm_sqr() * x)
                .sum::<T>()
    }
}

/// Label-dependent extra phase `f(p, q)` multiplying a whole family.
pub type PhaseFn<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;

/// Generator of coherent states `|p,q>` for one fiducial on one grid.
#[derive(Clone)]
pub struct CoherentFamily<T> {
    pub scheme: CoherentScheme<T>,
    pub hbar: T,
    pub grid: Grid1D<T>,
    phase: Option<PhaseFn<T>>,
}

impl<T: Real> fmt::Debug for CoherentFamily<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoherentFamily")
            .field("scheme", &self.scheme)
            .field("hbar", &self.hbar)
            .field("grid_n", &self.grid.n)
            .field("phase", &self.phase.is_some())
            .finish()
    }
}

/// Smallest admissible affine fiducial parameter (exclusive).
pub const MIN_AFFINE_BETA: f64 = 0.5;

impl<T: Real> CoherentFamily<T> {
    pub fn new(scheme: CoherentScheme<T>, hbar: T, grid: Grid1D<T>) -> Result<Self> {
        if !(hbar > T::zero() && hbar.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        match scheme {
            CoherentScheme::Canonical { omega } => {
                if !(omega > T::zero() && omega.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "omega must be positive, got {omega}"
                    )));
                }
            }
            CoherentScheme::Affine { beta } => {
                if !(beta > T::of(MIN_AFFINE_BETA) && beta.is_finite()) {
                    return Err(Error::FiducialNotAdmissible(format!(
                        "beta = {beta} must exceed {MIN_AFFINE_BETA}"
                    )));
                }
                if grid.x_min < T::zero() {
                    return Err(Error::GridMismatch("affine states live on 0 < x".into()));
                }
            }
        }
        Ok(CoherentFamily {
            scheme,
            hbar,
            grid,
            phase: None,
        })
    }

    /// Grid covering labels with `|p| <= p_max` and `q` in `[q_min, q_max]`.
    pub fn for_region(
        scheme: CoherentScheme<T>,
        hbar: T,
        p_max: T,
        q_min: T,
        q_max: T,
        n: usize,
    ) -> Result<Self> {
        let grid = match scheme {
            CoherentScheme::Canonical { omega } => {
                let width = (hbar / omega).sqrt();
                let pad = T::of(13.0) * width;
                Grid1D::new(q_min - pad, q_max + pad, n)?
            }
            CoherentScheme::Affine { beta } => {
                let reach = T::one() + T::of(40.0) / beta.min(T::one());
                Grid1D::new(T::zero(), q_max * reach, n)?
            }
        };
        let fam = Self::new(scheme, hbar, grid)?;
        let k = p_max.abs() / hbar * fam.grid.h;
        if k > T::half() {
            return Err(Error::InvalidGrid(format!(
                "grid too coarse for momentum {p_max}: p h / hbar = {k}"
            )));
        }
        Ok(fam)
    }

    /// Multiplies every state by `e^{i f(p,q)}`.
    pub fn with_phase(mut self, f: impl Fn(T, T) -> T + Send + Sync + 'static) -> Self {
        self.phase = Some(Arc::new(f));
        self
    }

    pub fn fiducial_label(&self) -> (T, T) {
        match self.scheme {
            CoherentScheme::Canonical { .. } => (T::zero(), T::zero()),
            CoherentScheme::Affine { .. } => (T::zero(), T::one()),
        }
    }

    pub fn fiducial(&self) -> CoherentState<T> {
        let (p, q) = self.fiducial_label();
        self.state(p, q).expect("fiducial label is admissible")
    }

    /// The state `|p,q>` (affine: `|p;q>`, requires `q > 0`).
    pub fn state(&self, p: T, q: T) -> Result<CoherentState<T>> {
        if !(p.is_finite() && q.is_finite()) {
            return Err(Error::InvalidArgument("non-finite label".into()));
        }
        let hbar = self.hbar;
        let mut samples: Vec<Complex<T>> = match self.scheme {
            CoherentScheme::Canonical { omega } => self
                .grid
                .nodes
                .iter()
                .map(|&x| {
                    let d = x - q;
                    Complex::from_polar((-omega * d * d / (T::two() * hbar)).exp(), p * x / hbar)
                })
                .collect(),
            CoherentScheme::Affine { beta } => {
                if !(q > T::zero()) {
                    return Err(Error::InvalidArgument(format!(
                        "affine label q must be positive, got {q}"
                    )));
                }
                let a = beta - T::half();
                self.grid
                    .nodes
                    .iter()
                    .map(|&x| {
                        let s = x / q;
                        let amp = if s > T::zero() {
                            (a * s.ln() - beta * s).exp()
                        } else {
                            T::zero()
                        };
                        Complex::from_polar(amp, p * x / hbar)
                    })
                    .collect()
            }
        };
        let norm = (self.grid.h * samples.iter().map(|z| z.norm_sqr()).sum::<T>()).sqrt();
        if !(norm > T::zero() && norm.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "state at ({p}, {q}) is not resolved by the grid"
            )));
        }
        let phase = self.phase.as_ref().map_or(T::zero(), |f| f(p, q));
        let factor = Complex::from_polar(norm.recip(), phase);
        for z in samples.iter_mut() {
            *z = *z * factor;
        }
        Ok(CoherentState {
            scheme: self.scheme,
            hbar,
            p,
            q,
            samples,
            grid: self.grid.clone(),
        })
    }
}

/// Fiducial vector of `scheme` on `grid`.
pub fn fiducial<T: Real>(
    scheme: CoherentScheme<T>,
    hbar: T,
    grid: &Grid1D<T>,
) -> Result<CoherentState<T>> {
    Ok(CoherentFamily::new(scheme, hbar, grid.clone())?.fiducial())
}

/// Displaces a fiducial to the label `(p, q)`.
pub fn displace<T: Real>(fiducial: &CoherentState<T>, p: T, q: T) -> Result<CoherentState<T>> {
    CoherentFamily::new(fiducial.scheme, fiducial.hbar, fiducial.grid.clone())?.state(p, q)
}

/// h-weighted `<a|b>`.
pub fn overlap<T: Real>(a: &CoherentState<T>, b: &CoherentState<T>) -> Result<Complex<T>> {
    if !a.grid.same_as(&b.grid) {
        return Err(Error::GridMismatch("states live on different grids".into()));
    }
    Ok(compensated_inner(&a.samples, &b.samples) * a.grid.h)
}

/// Neumaier-compensated `sum conj(a) b`.
fn compensated_inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    let (mut sr, mut cr, mut si, mut ci) = (T::zero(), T::zero(), T::zero(), T::zero());
    let add = |s: &mut T, c: &mut T, x: T| {
        let t = *s + x;
        if s.abs() >= x.abs() {
            *c = *c + ((*s - t) + x);
        } else {
            *c = *c + ((x - t) + *s);
        }
        *s = t;
    };
    for (x, y) in a.iter().zip(b) {
        let z = x.conj() * y;
        add(&mut sr, &mut cr, z.re);
        add(&mut si, &mut ci, z.im);
    }
    Complex::new(sr + cr, si + ci)
}

/// Fubini-Study metric `g_pp dp^2 + 2 g_pq dp dq + g_qq dq^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricTensor2<T> {
    pub p: T,
    pub q: T,
    pub g_pp: T,
    pub g_pq: T,
    pub g_qq: T,
}

impl<T: Real> MetricTensor2<T> {
    pub fn det(&self) -> T {
        self.g_pp * self.g_qq - self.g_pq * self.g_pq
    }

    pub fn is_positive_definite(&self) -> bool {
        self.g_pp > T::zero() && self.g_qq > T::zero() && self.det() > T::zero()
    }

    fn max_rel_diff(&self, other: &Self) -> T {
        let s = self.g_pp.abs().max(self.g_qq.abs());
        [
            (self.g_pp, other.g_pp),
            (self.g_pq, other.g_pq),
            (self.g_qq, other.g_qq),
        ]
        .iter()
        .map(|(a, b)| (*a - *b).abs() / s)
        .fold(T::zero(), T::max)
    }
}

/// Natural label scales, so a unit step changes the fidelity by O(1).
fn label_scales<T: Real>(fam: &CoherentFamily<T>, q: T) -> (T, T) {
    match fam.scheme {
        CoherentScheme::Canonical { omega } => {
            ((fam.hbar * omega).sqrt(), (fam.hbar / omega).sqrt())
        }
        CoherentScheme::Affine { beta } => {
            let rb = beta.sqrt();
            (fam.hbar * rb / q, q / rb)
        }
    }
}

fn infidelity<T: Real>(fam: &CoherentFamily<T>, p: T, q: T, dp: T, dq: T) -> Result<T> {
    let a = fam.state(p - T::half() * dp, q - T::half() * dq)?;
    let b = fam.state(p + T::half() * dp, q + T::half() * dq)?;
    Ok(T::one() - overlap(&a, &b)?.norm_sqr())
}

/// Fubini-Study metric `2 hbar [ ||d psi||^2 - |<psi|d psi>|^2 ]` at `(p, q)`,
/// from symmetric second differences of `|<p,q|p',q'>|^2`. `delta` is
/// relative to the natural label scales of the family.
pub fn fs_metric<T: Real>(
    fam: &CoherentFamily<T>,
    p: T,
    q: T,
    delta: T,
) -> Result<MetricTensor2<T>> {
    let min_delta = (T::of(2e4) * T::epsilon()).sqrt();
    if !(delta > T::zero()) || delta >= T::half() {
        return Err(Error::StepRejected(format!(
            "delta = {delta} outside (0, 0.5)"
        )));
    }
    if delta < min_delta {
        return Err(Error::StepRejected(format!(
            "delta = {delta} below cancellation floor {min_delta}"
        )));
    }
    let (sp, sq) = label_scales(fam, q);
    let dp = delta * sp;
    let dq = delta * sq;
    if matches!(fam.scheme, CoherentScheme::Affine { .. }) && q - dq <= T::zero() {
        return Err(Error::StepRejected("affine step crosses q = 0".into()));
    }
    let m_p = infidelity(fam, p, q, dp, T::zero())?;
    let m_q = infidelity(fam, p, q, T::zero(), dq)?;
    let m_pq = infidelity(fam, p, q, dp, dq)?;
    let two_hbar = T::two() * fam.hbar;
    let g = MetricTensor2 {
        p,
        q,
        g_pp: two_hbar * m_p / (dp * dp),
        g_pq: two_hbar * (m_pq - m_p - m_q) / (T::two() * dp * dq),
        g_qq: two_hbar * m_q / (dq * dq),
    };
    if !g.is_positive_definite() {
        return Err(Error::StepRejected(format!(
            "metric not positive definite at delta = {delta}"
        )));
    }
    Ok(g)
}

/// Relative steps tried by [`fs_metric_auto`].
pub const METRIC_DELTA_LADDER: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// [`fs_metric`] over the step ladder; returns the finer member of the most
/// consistent adjacent pair.
pub fn fs_metric_auto<T: Real>(fam: &CoherentFamily<T>, p: T, q: T) -> Result<MetricTensor2<T>> {
    let gs: Vec<MetricTensor2<T>> = METRIC_DELTA_LADDER
        .iter()
        .filter_map(|&d| fs_metric(fam, p, q, T::of(d)).ok())
        .collect();
    if gs.len() < 2 {
        return Err(Error::StepRejected(
            "fewer than two usable steps on the ladder".into(),
        ));
    }
    let (best, diff) = gs
        .windows(2)
        .map(|w| (w[1], w[0].max_rel_diff(&w[1])))
        .fold(
            (gs[1], T::infinity()),
            |acc, x| if x.1 < acc.1 { x } else { acc },
        );
    if diff > T::of(1e-3) {
        return Err(Error::StepRejected(format!(
            "step ladder inconsistent (best relative difference {diff})"
        )));
    }
    Ok(best)
}

const INNER_METRIC_DELTA: f64 = 1e-3;

/// Scalar curvature (twice the Gaussian curvature) of the label-space metric.
///
/// Metric components are sampled on a 3x3 stencil with outer step `delta`
/// (relative to the natural label scales) and fed to Brioschi's formula,
/// which handles non-diagonal metrics.
pub fn scalar_curvature<T: Real>(fam: &CoherentFamily<T>, p: T, q: T, delta: T) -> Result<T> {
    if !(delta > T::zero()) || delta >= T::half() {
        return Err(Error::StepRejected(format!(
            "delta = {delta} outside (0, 0.5)"
        )));
    }
    let (sp, sq) = label_scales(fam, q);
    let du = delta * sp;
    let dv = delta * sq;
    if matches!(fam.scheme, CoherentScheme::Affine { .. }) && q - dv <= T::zero() {
        return Err(Error::StepRejected("affine step crosses q = 0".into()));
    }
    let inner = T::of(INNER_METRIC_DELTA);
    let mut g = [[MetricTensor2 {
        p,
        q,
        g_pp: T::zero(),
        g_pq: T::zero(),
        g_qq: T::zero(),
    }; 3]; 3];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let pi = p + T::of(i as f64 - 1.0) * du;
            let qj = q + T::of(j as f64 - 1.0) * dv;
            *cell = fs_metric(fam, pi, qj, inner)?;
        }
    }
    let comp = |f: fn(&MetricTensor2<T>) -> T| -> [[T; 3]; 3] {
        let mut out = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = f(&g[i][j]);
            }
        }
        out
    };
    let e = comp(|m| m.g_pp);
    let f = comp(|m| m.g_pq);
    let gg = comp(|m| m.g_qq);
    let two = T::two();
    let d_u = |a: &[[T; 3]; 3]| (a[2][1] - a[0][1]) / (two * du);
    let d_v = |a: &[[T; 3]; 3]| (a[1][2] - a[1][0]) / (two * dv);
    let d_uu = |a: &[[T; 3]; 3]| (a[2][1] - two * a[1][1] + a[0][1]) / (du * du);
    let d_vv = |a: &[[T; 3]; 3]| (a[1][2] - two * a[1][1] + a[1][0]) / (dv * dv);
    let d_uv = |a: &[[T; 3]; 3]| (a[2][2] - a[2][0] - a[0][2] + a[0][0]) / (T::of(4.0) * du * dv);
    let (e0, f0, g0) = (e[1][1], f[1][1], gg[1][1]);
    let half = T::half();
    let a = [
        [
            -half * d_vv(&e) + d_uv(&f) - half * d_uu(&gg),
            half * d_u(&e),
            d_u(&f) - half * d_v(&e),
        ],
        [d_v(&f) - half * d_u(&gg), e0, f0],
        [half * d_v(&gg), f0, g0],
    ];
    let b = [
        [T::zero(), half * d_v(&e), half * d_u(&gg)],
        [half * d_v(&e), e0, f0],
        [half * d_u(&gg), f0, g0],
    ];
    let det_eg = e0 * g0 - f0 * f0;
    let gauss = (det3(&a) - det3(&b)) / (det_eg * det_eg);
    Ok(two * gauss)
}

fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Outer steps used by [`scalar_curvature_auto`].
pub const CURVATURE_DELTA_PAIR: [f64; 2] = [0.04, 0.02];

/// Richardson-combined curvature from a step pair, rejecting pairs that disagree by more than 1e-2.
pub fn scalar_curvature_auto<T: Real>(fam: &CoherentFamily<T>, p: T, q: T) -> Result<T> {
    let r1 = scalar_curvature(fam, p, q, T::of(CURVATURE_DELTA_PAIR[0]))?;
    let r2 = scalar_curvature(fam, p, q, T::of(CURVATURE_DELTA_PAIR[1]))?;
    if (r1 - r2).abs() > T::of(1e-2) * T::one().max(r2.abs()) {
        return Err(Error::StepRejected(format!(
            "curvature step pair disagrees: {r1} vs {r2}"
        )));
    }
    Ok((T::of(4.0) * r2 - r1) / T::of(3.0))
}
