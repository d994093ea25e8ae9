//! Classical dynamics with hard reflecting walls, and Poisson-bracket checks
//! for changes of phase-space variables.
//!
//! Trajectories use a fourth-order symmetric composition of kick-drift-kick
//! leapfrog steps. Drifts are free flights, so a wall crossing inside a drift
//! is resolved exactly and the momentum is reversed there.

use std::fmt;
use std::sync::Arc;

use crate::domain_grid::DomainSpec;
use crate::error::{Error, Result};
use crate::operators::{ModelSpec, Potential};
use crate::scalar::Real;

type Scalar2<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
/// `(df/dp, df/dq, dg/dp, dg/dq)`.
type Partials<T> = Arc<dyn Fn(T, T) -> [T; 4] + Send + Sync>;

/// New variables `p_bar = f(p, q)`, `q_bar = g(p, q)` on an open rectangle.
#[derive(Clone)]
pub struct PhaseMap<T> {
    pub f: Scalar2<T>,
    pub g: Scalar2<T>,
    pub partials: Option<Partials<T>>,
    /// `(p_min, p_max, q_min, q_max)`.
    pub rect: (T, T, T, T),
}

impl<T> fmt::Debug for PhaseMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PhaseMap")
            .field("analytic_partials", &self.partials.is_some())
            .finish()
    }
}

impl<T: Real> PhaseMap<T> {
    pub fn new(
        f: impl Fn(T, T) -> T + Send + Sync + 'static,
        g: impl Fn(T, T) -> T + Send + Sync + 'static,
        rect: (T, T, T, T),
    ) -> Self {
        PhaseMap {
            f: Arc::new(f),
            g: Arc::new(g),
            partials: None,
            rect,
        }
    }

    pub fn with_partials(mut self, d: impl Fn(T, T) -> [T; 4] + Send + Sync + 'static) -> Self {
        self.partials = Some(Arc::new(d));
        self
    }

    fn contains_with_margin(&self, p: T, q: T, margin: T) -> bool {
        let (p0, p1, q0, q1) = self.rect;
        p - margin > p0 && p + margin < p1 && q - margin > q0 && q + margin < q1
    }
}

fn d4<T: Real>(f: impl Fn(T) -> T, x: T, h: T) -> T {
    let eight = T::of(8.0);
    (f(x - T::two() * h) - eight * f(x - h) + eight * f(x + h) - f(x + T::two() * h))
        / (T::of(12.0) * h)
}

/// `|{q_bar, p_bar} - 1|` at each point, with
/// `{q_bar, p_bar} = dg/dq df/dp - dg/dp df/dq`.
///
/// Uses the analytic partials when the map carries them, fourth-order central
/// differences with step `fd_step` otherwise.
pub fn poisson_bracket_residual<T: Real>(
    map: &PhaseMap<T>,
    points: &[(T, T)],
    fd_step: T,
) -> Result<Vec<T>> {
    if !(fd_step > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "fd_step must be positive, got {fd_step}"
        )));
    }
    points
        .iter()
        .map(|&(p, q)| {
            if !map.contains_with_margin(p, q, T::two() * fd_step) {
                return Err(Error::Precondition(format!(
                    "point ({p}, {q}) too close to the map's rectangle edge"
                )));
            }
            let [fp, fq, gp, gq] = match &map.partials {
                Some(d) => d(p, q),
                None => [
                    d4(|x| (map.f)(x, q), p, fd_step),
                    d4(|x| (map.f)(p, x), q, fd_step),
                    d4(|x| (map.g)(x, q), p, fd_step),
                    d4(|x| (map.g)(p, x), q, fd_step),
                ],
            };
            Ok((gq * fp - gp * fq - T::one()).abs())
        })
        .collect()
}

/// A wall hit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BounceEvent<T> {
    pub time: T,
    pub wall: T,
}

#[derive(Debug, Clone)]
pub struct TrajectoryResult<T> {
    pub times: Vec<T>,
    pub p_series: Vec<T>,
    pub q_series: Vec<T>,
    pub energy_series: Vec<T>,
    pub bounce_events: Vec<BounceEvent<T>>,
    /// Largest `|H(t) - H(0)| / |H(0)|` over every step (absolute when `H(0) = 0`).
    pub max_energy_drift: T,
    /// `(dq/dt, dp/dt)` at the initial point.
    pub initial_flow: (T, T),
}

impl<T: Real> TrajectoryResult<T> {
    /// Dilation variable `d = p q` along the samples.
    pub fn dilation_series(&self) -> Vec<T> {
        self.p_series
            .iter()
            .zip(&self.q_series)
            .map(|(&p, &q)| p * q)
            .collect()
    }
}

#[derive(Debug, Clone, Copy)]
struct Walls<T> {
    left: Option<T>,
    right: Option<T>,
}

fn walls_for<T: Real>(domain: &DomainSpec<T>, q0: T) -> Walls<T> {
    match *domain {
        DomainSpec::FullLine => Walls {
            left: None,
            right: None,
        },
        DomainSpec::HalfLine { b } => Walls {
            left: Some(-b),
            right: None,
        },
        DomainSpec::Interval { b } => Walls {
            left: Some(-b),
            right: Some(b),
        },
        DomainSpec::PuncturedExterior { b } => {
            if q0 > T::zero() {
                Walls {
                    left: Some(b),
                    right: None,
                }
            } else {
                Walls {
                    left: None,
                    right: Some(-b),
                }
            }
        }
        DomainSpec::PuncturedLine => {
            if q0 > T::zero() {
                Walls {
                    left: Some(T::zero()),
                    right: None,
                }
            } else {
                Walls {
                    left: None,
                    right: Some(T::zero()),
                }
            }
        }
    }
}

fn force<T: Real>(model: &ModelSpec<T>, q: T) -> T {
    match &model.potential {
        Potential::None => T::zero(),
        Potential::Harmonic => -model.mass * model.omega * model.omega * q,
        Potential::Custom(v) => {
            let h = T::of(1e-4) * (T::one() + q.abs());
            -d4(|x| v(x), q, h)
        }
    }
}

/// Shortest time scale of the motion, used to reject oversized steps.
fn characteristic_period<T: Real>(model: &ModelSpec<T>, walls: Walls<T>, p0: T, q0: T) -> T {
    let two_pi = T::two() * T::PI();
    let mut period = T::infinity();
    match &model.potential {
        Potential::None => {}
        Potential::Harmonic => period = two_pi / model.omega,
        Potential::Custom(v) => {
            let h = T::of(1e-3) * (T::one() + q0.abs());
            let k = (v(q0 + h) - T::two() * v(q0) + v(q0 - h)) / (h * h);
            if k > T::zero() {
                period = two_pi * (model.mass / k).sqrt();
            }
        }
    }
    if let (Some(l), Some(r)) = (walls.left, walls.right) {
        let v = (p0 / model.mass).abs();
        if v > T::zero() {
            period = period.min(T::two() * (r - l) / v);
        }
    }
    period
}

struct Reflections<T> {
    /// `(wall, signed count, physical time of the last forward hit)`
    hits: Vec<(T, i32, T)>,
}

impl<T: Real> Reflections<T> {
    fn record(&mut self, wall: T, forward: bool, time: T) {
        let delta = if forward { 1 } else { -1 };
        if let Some(h) = self.hits.iter_mut().find(|h| h.0 == wall) {
            h.1 += delta;
            if forward {
                h.2 = time;
            }
        } else {
            self.hits.push((wall, delta, time));
        }
    }
}

/// Free flight for a signed duration, reflecting specularly at the walls.
fn drift<T: Real>(
    q: &mut T,
    p: &mut T,
    mass: T,
    walls: Walls<T>,
    tau: T,
    clock: T,
    refl: &mut Reflections<T>,
) {
    let mut remaining = tau;
    let mut elapsed = T::zero();
    for _ in 0..64 {
        let v = *p / mass;
        if v == T::zero() || remaining == T::zero() {
            return;
        }
        let target = *q + v * remaining;
        let hit = match (walls.left, walls.right) {
            (Some(l), _) if target <= l => Some(l),
            (_, Some(r)) if target >= r => Some(r),
            _ => None,
        };
        match hit {
            None => {
                *q = target;
                return;
            }
            Some(w) => {
                let s = (w - *q) / v;
                elapsed = elapsed + s;
                remaining = remaining - s;
                *q = w;
                *p = -*p;
                refl.record(w, tau > T::zero(), clock + elapsed);
            }
        }
    }
}

fn yoshida_weights<T: Real>() -> [T; 3] {
    let cbrt2 = T::two().cbrt();
    let w1 = T::one() / (T::two() - cbrt2);
    let w0 = -cbrt2 / (T::two() - cbrt2);
    [w1, w0, w1]
}

/// Root of the cubic Hermite interpolant of the signed wall distance, unfolded
/// through the reflection, on `[0, dt]`.
fn hermite_root<T: Real>(d0: T, v0: T, d1: T, v1: T, dt: T) -> Option<T> {
    if !(d0 >= T::zero() && d1 < T::zero()) {
        return None;
    }
    let eval = |s: T| {
        let t = s / dt;
        let t2 = t * t;
        let t3 = t2 * t;
        let three = T::of(3.0);
        (T::two() * t3 - three * t2 + T::one()) * d0
            + (t3 - T::two() * t2 + t) * dt * v0
            + (-T::two() * t3 + three * t2) * d1
            + (t3 - t2) * dt * v1
    };
    let (mut lo, mut hi) = (T::zero(), dt);
    if eval(lo) < T::zero() || eval(hi) >= T::zero() {
        return None;
    }
    let tol = T::of(1e-12).max(T::epsilon() * dt);
    while hi - lo > tol {
        let mid = T::half() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) >= T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(T::half() * (lo + hi))
}

/// Integrates `p^2/2m + V(q)` from `(p0, q0)` with elastic walls at the domain boundaries.
pub fn integrate<T: Real>(
    model: &ModelSpec<T>,
    p0: T,
    q0: T,
    dt: T,
    t_end: T,
) -> Result<TrajectoryResult<T>> {
    integrate_sampled(model, p0, q0, dt, t_end, 1)
}

/// As [`integrate`], storing every `stride`-th step (the energy drift still covers every step).
pub fn integrate_sampled<T: Real>(
    model: &ModelSpec<T>,
    p0: T,
    q0: T,
    dt: T,
    t_end: T,
    stride: usize,
) -> Result<TrajectoryResult<T>> {
    model.validate()?;
    if !model.domain.contains(q0) || !p0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "initial condition ({p0}, {q0}) outside the domain"
        )));
    }
    if !(dt > T::zero() && t_end > T::zero()) || stride == 0 {
        return Err(Error::InvalidArgument(
            "dt, t_end and stride must be positive".into(),
        ));
    }
    let walls = walls_for(&model.domain, q0);
    let period = characteristic_period(model, walls, p0, q0);
    if dt >= period / T::of(100.0) {
        return Err(Error::InvalidArgument(format!(
            "dt = {dt} is not below one hundredth of the characteristic period {period}"
        )));
    }
    let m = model.mass;
    let energy = |p: T, q: T| model.classical_energy(p, q);
    let e0 = energy(p0, q0);
    let e_scale = if e0 != T::zero() { e0.abs() } else { T::one() };
    let steps_f = (t_end / dt).ceil();
    let steps = steps_f
        .to_usize()
        .ok_or_else(|| Error::InvalidArgument("too many steps".into()))?;
    let weights = yoshida_weights::<T>();

    let cap = steps / stride + 2;
    let mut out = TrajectoryResult {
        times: Vec::with_capacity(cap),
        p_series: Vec::with_capacity(cap),
        q_series: Vec::with_capacity(cap),
        energy_series: Vec::with_capacity(cap),
        bounce_events: Vec::new(),
        max_energy_drift: T::zero(),
        initial_flow: (p0 / m, force(model, q0)),
    };
    let (mut p, mut q, mut t) = (p0, q0, T::zero());
    out.times.push(t);
    out.p_series.push(p);
    out.q_series.push(q);
    out.energy_series.push(e0);
    for step in 1..=steps {
        let h = if step == steps { t_end - t } else { dt };
        if h <= T::zero() {
            break;
        }
        let (p_start, q_start) = (p, q);
        let mut refl = Reflections { hits: Vec::new() };
        let mut clock = t;
        for &w in &weights {
            let tau = w * h;
            p = p + T::half() * tau * force(model, q);
            drift(&mut q, &mut p, m, walls, tau, clock, &mut refl);
            p = p + T::half() * tau * force(model, q);
            clock = clock + tau;
        }
        for (wall, count, last_forward) in refl.hits {
            if count <= 0 {
                continue;
            }
            // signed distance to the wall, positive inside, mirrored after the hit
            let inward = if walls.left == Some(wall) {
                T::one()
            } else {
                -T::one()
            };
            let d0 = inward * (q_start - wall);
            let v0 = inward * p_start / m;
            let d1 = -inward * (q - wall);
            let v1 = -inward * p / m;
            let time = if count == 1 {
                hermite_root(d0, v0, d1, v1, h).map_or(last_forward, |s| t + s)
            } else {
                last_forward
            };
            let time = time.max(t).min(t + h);
            for _ in 0..count {
                out.bounce_events.push(BounceEvent { time, wall });
            }
        }
        t = t + h;
        let e = energy(p, q);
        out.max_energy_drift = out.max_energy_drift.max((e - e0).abs() / e_scale);
        if step % stride == 0 || step == steps {
            out.times.push(t);
            out.p_series.push(p);
            out.q_series.push(q);
            out.energy_series.push(e);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodEstimate<T> {
    pub period: T,
    /// Section crossing times after `t = 0`.
    pub crossings: Vec<T>,
    /// Largest relative deviation of a single recurrence interval from the mean.
    pub jitter: T,
}

/// Mean recurrence time of the section through the initial point, transverse
/// to the initial phase-space flow, crossed in the direction of that flow.
pub fn period_estimate<T: Real>(traj: &TrajectoryResult<T>) -> Result<PeriodEstimate<T>> {
    let n = traj.times.len();
    if n < 4 {
        return Err(Error::NoRecurrences("trajectory too short".into()));
    }
    let (q0, p0) = (traj.q_series[0], traj.p_series[0]);
    let range = |s: &[T]| {
        let (lo, hi) = s
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(a, b), &x| {
                (a.min(x), b.max(x))
            });
        hi - lo
    };
    let rq = range(&traj.q_series);
    let rp = range(&traj.p_series);
    let (vq, vp) = traj.initial_flow;
    let nq = if rq > T::zero() {
        vq / (rq * rq)
    } else {
        T::zero()
    };
    let np = if rp > T::zero() {
        vp / (rp * rp)
    } else {
        T::zero()
    };
    if nq == T::zero() && np == T::zero() {
        return Err(Error::NoRecurrences(
            "initial point is a fixed point".into(),
        ));
    }
    let sigma = |j: usize| (traj.q_series[j] - q0) * nq + (traj.p_series[j] - p0) * np;
    let near = |j: usize| {
        let dq = if rq > T::zero() {
            (traj.q_series[j] - q0).abs() / rq
        } else {
            T::zero()
        };
        let dp = if rp > T::zero() {
            (traj.p_series[j] - p0).abs() / rp
        } else {
            T::zero()
        };
        dq + dp < T::of(0.25)
    };
    let bounce_in = |a: T, b: T| {
        traj.bounce_events
            .iter()
            .any(|e| e.time >= a && e.time <= b)
    };
    let mut crossings = Vec::new();
    for j in 1..n - 1 {
        let (s0, s1) = (sigma(j), sigma(j + 1));
        if !(s0 < T::zero() && s1 >= T::zero()) || !near(j) {
            continue;
        }
        let (ta, tb) = (traj.times[j], traj.times[j + 1]);
        if bounce_in(ta, tb) {
            continue;
        }
        let root = if j + 2 < n && !bounce_in(tb, traj.times[j + 2]) {
            quadratic_root(
                [traj.times[j], traj.times[j + 1], traj.times[j + 2]],
                [s0, s1, sigma(j + 2)],
            )
        } else {
            None
        };
        crossings.push(root.unwrap_or_else(|| ta + (tb - ta) * (-s0) / (s1 - s0)));
    }
    if crossings.len() < 3 {
        return Err(Error::NoRecurrences(format!(
            "found {} recurrences, need 3",
            crossings.len()
        )));
    }
    let mut prev = T::zero();
    let mut intervals = Vec::with_capacity(crossings.len());
    for &c in &crossings {
        intervals.push(c - prev);
        prev = c;
    }
    let period = intervals.iter().copied().sum::<T>() / T::of_usize(intervals.len());
    let jitter = intervals
        .iter()
        .map(|&i| ((i - period) / period).abs())
        .fold(T::zero(), T::max);
    Ok(PeriodEstimate {
        period,
        crossings,
        jitter,
    })
}

/// Root in `[t0, t1]` of the quadratic through three samples.
fn quadratic_root<T: Real>(t: [T; 3], s: [T; 3]) -> Option<T> {
    let eval = |x: T| {
        let l0 = (x - t[1]) * (x - t[2]) / ((t[0] - t[1]) * (t[0] - t[2]));
        let l1 = (x - t[0]) * (x - t[2]) / ((t[1] - t[0]) * (t[1] - t[2]));
        let l2 = (x - t[0]) * (x - t[1]) / ((t[2] - t[0]) * (t[2] - t[1]));
        s[0] * l0 + s[1] * l1 + s[2] * l2
    };
    let (mut lo, mut hi) = (t[0], t[1]);
    if !(eval(lo) < T::zero() && eval(hi) >= T::zero()) {
        return None;
    }
    for _ in 0..200 {
        let mid = T::half() * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if eval(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(T::half() * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn residual(map: &PhaseMap<f64>, pts: &[(f64, f64)]) -> Vec<f64> {
        poisson_bracket_residual(map, pts, 1e-4).unwrap()
    }

    const PTS: [(f64, f64); 4] = [(0.3, 0.7), (-1.2, 2.5), (2.0, 0.4), (0.9, 1.1)];

    #[test]
    fn canonical_maps_have_unit_bracket() {
        let rect = (-5.0, 5.0, 0.1, 5.0);
        let identity = PhaseMap::new(|p, _| p, |_, q| q, rect);
        let scale = PhaseMap::new(|p, _| p / 3.0, |_, q| 3.0 * q, rect);
        let dilation = PhaseMap::new(|p, q| p * q, |_, q: f64| q.ln(), rect);
        for map in [&identity, &scale, &dilation] {
            assert!(residual(map, &PTS).iter().all(|&r| r < 1e-8));
        }
    }

    #[test]
    fn non_canonical_map_detected() {
        let sq = PhaseMap::new(|p: f64, _| p * p, |_, q| q, (-5.0, 5.0, -5.0, 5.0));
        for (r, (p, _)) in residual(&sq, &PTS).iter().zip(PTS) {
            assert!((r - (2.0 * p - 1.0).abs()).abs() < 1e-8);
        }
    }

    #[test]
    fn analytic_partials_used() {
        let map = PhaseMap::new(|p, q| p * q, |_, q: f64| q.ln(), (-5.0, 5.0, 0.1, 5.0))
            .with_partials(|p, q| [q, p, 0.0, 1.0 / q]);
        assert!(residual(&map, &PTS).iter().all(|&r| r < 1e-14));
    }

    #[test]
    fn bracket_rejects_points_near_edge() {
        let map = PhaseMap::new(|p, _| p, |_, q| q, (0.0, 1.0, 0.0, 1.0));
        assert!(poisson_bracket_residual(&map, &[(0.5, 0.99995)], 1e-4).is_err());
    }

    #[test]
    fn half_oscillator_bounces_at_half_period() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let tr = integrate(&m, 0.0, 1.0, 1e-3, 10.0).unwrap();
        let times: Vec<f64> = tr.bounce_events.iter().map(|e| e.time).collect();
        assert_eq!(times.len(), 3);
        for (k, t) in times.iter().enumerate() {
            assert!((t - (k as f64 + 0.5) * PI).abs() < 1e-8, "{t}");
        }
        let est = period_estimate(&tr).unwrap();
        assert!((est.period - PI).abs() < 1e-6, "{}", est.period);
        assert!(tr.q_series.iter().all(|&q| q >= 0.0));
    }

    #[test]
    fn box_period() {
        let m = ModelSpec::<f64>::canonical_box(1.0, 1.0);
        let tr = integrate(&m, 1.0, 0.0, 1e-3, 20.0).unwrap();
        let est = period_estimate(&tr).unwrap();
        assert!((est.period - 4.0).abs() < 1e-9);
        assert!(tr.max_energy_drift < 1e-14);
        assert_eq!(tr.bounce_events.len(), 10);
        assert!(tr.bounce_events.windows(2).all(|w| w[1].time > w[0].time));
    }

    #[test]
    fn full_oscillator_never_bounces() {
        let m = ModelSpec::<f64>::harmonic_oscillator(1.0);
        let tr = integrate(&m, 0.0, 1.0, 1e-3, 25.0).unwrap();
        assert!(tr.bounce_events.is_empty());
        assert!((period_estimate(&tr).unwrap().period - 2.0 * PI).abs() < 1e-6);
    }

    #[test]
    fn fixed_point_has_no_recurrences() {
        let m = ModelSpec::<f64>::harmonic_oscillator(1.0);
        let tr = integrate(&m, 0.0, 0.0, 1e-2, 10.0).unwrap();
        assert!(matches!(period_estimate(&tr), Err(Error::NoRecurrences(_))));
    }

    #[test]
    fn rejects_bad_initial_conditions_and_steps() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        assert!(integrate(&m, 0.0, -1.0, 1e-3, 1.0).is_err());
        assert!(integrate(&m, 0.0, 1.0, 0.1, 1.0).is_err());
        assert!(integrate(&m, 0.0, 1.0, -1e-3, 1.0).is_err());
    }

    #[test]
    fn energy_drift_over_hundred_periods() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let tr = integrate_sampled(&m, 0.0, 1.0, PI / 1e4, 100.0 * PI, 1000).unwrap();
        assert!(tr.max_energy_drift < 1e-8, "{}", tr.max_energy_drift);
        assert_eq!(tr.bounce_events.len(), 100);
    }

    #[test]
    fn time_reversal() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let (p0, q0, t) = (0.4, 0.8, 7.3);
        let fwd = integrate(&m, p0, q0, 1e-3, t).unwrap();
        let (pt, qt) = (*fwd.p_series.last().unwrap(), *fwd.q_series.last().unwrap());
        let back = integrate(&m, -pt, qt, 1e-3, t).unwrap();
        assert!((back.p_series.last().unwrap() + p0).abs() < 1e-8);
        assert!((back.q_series.last().unwrap() - q0).abs() < 1e-8);
    }

    #[test]
    fn dilation_flips_sign_at_bounces() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let tr = integrate(&m, 0.0, 1.0, 1e-3, 6.0).unwrap();
        let d = tr.dilation_series();
        for e in &tr.bounce_events {
            let j = tr.times.iter().position(|&t| t > e.time).unwrap();
            assert!(d[j - 2] < 0.0 && d[j + 1] > 0.0);
        }
    }

    #[test]
    fn punctured_exterior_left_component() {
        let m = ModelSpec::catalog(
            crate::operators::CatalogId::Item4,
            0.5,
            1.0,
            Potential::Harmonic,
        );
        let tr = integrate(&m, 0.0, -2.0, 1e-3, 10.0).unwrap();
        assert!(tr.q_series.iter().all(|&q| q <= -0.5));
        assert!(!tr.bounce_events.is_empty());
        assert!(tr.bounce_events.iter().all(|e| e.wall == -0.5));
    }
}
