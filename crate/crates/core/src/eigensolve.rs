//! Eigenpairs of symmetric tridiagonal operators by two independent routes
//! (implicit-shift QL and Sturm-sequence bisection with inverse iteration),
//! plus grid extrapolation and spectral diagnostics.

use crate::domain_grid::Grid1D;
use crate::error::{Error, Result};
use crate::operators::TridiagonalOperator;
use crate::scalar::{ls_slope, Real};

/// QL sweeps allowed per eigenvalue before giving up.
pub const QL_MAX_SWEEPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    QL,
    Bisection,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::QL => "implicit-shift-ql",
            Method::Bisection => "sturm-bisection",
        }
    }
}

/// Ascending eigenvalues, optionally with h-normalized eigenvectors.
#[derive(Debug, Clone)]
pub struct Spectrum<T> {
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Option<Vec<Vec<T>>>,
    pub grid: Grid1D<T>,
    pub method: Method,
    pub extrapolated: bool,
    /// Norm of the operator the spectrum came from.
    pub scale: T,
}

impl<T: Real> Spectrum<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Largest `|T psi - E psi| / |psi|` over the stored pairs.
    pub fn max_residual(&self, op: &TridiagonalOperator<T>) -> Option<T> {
        let vecs = self.eigenvectors.as_ref()?;
        let mut worst = T::zero();
        for (e, v) in self.eigenvalues.iter().zip(vecs) {
            let tv = op.apply(v);
            let num: T = tv
                .iter()
                .zip(v)
                .map(|(&a, &b)| (a - *e * b) * (a - *e * b))
                .sum();
            let den: T = v.iter().map(|&b| b * b).sum();
            worst = worst.max((num / den).sqrt());
        }
        Some(worst)
    }
}

/// All eigenvalues by implicit-shift QL.
pub fn eigen_ql<T: Real>(op: &TridiagonalOperator<T>) -> Result<Spectrum<T>> {
    ql_impl(op, false)
}

/// All eigenpairs by implicit-shift QL with accumulated rotations (O(n^3)).
pub fn eigen_ql_with_vectors<T: Real>(op: &TridiagonalOperator<T>) -> Result<Spectrum<T>> {
    ql_impl(op, true)
}

fn ql_impl<T: Real>(op: &TridiagonalOperator<T>, want_vectors: bool) -> Result<Spectrum<T>> {
    let n = op.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let mut d = op.diag.clone();
    let mut e = op.offdiag.clone();
    e.push(T::zero());
    // columns of z are eigenvectors
    let mut z: Vec<Vec<T>> = if want_vectors {
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|k| if k == i { T::one() } else { T::zero() })
                    .collect()
            })
            .collect()
    } else {
        Vec::new()
    };
    let eps = T::epsilon();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_SWEEPS {
                return Err(Error::NoConvergence { index: l });
            }
            let mut g = (d[l + 1] - d[l]) / (T::two() * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + T::two() * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for k in 0..n {
                        let f = zi1[k];
                        zi1[k] = s * zi[k] + c * f;
                        zi[k] = c * zi[k] - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).expect("finite eigenvalues"));
    let eigenvalues = order.iter().map(|&i| d[i]).collect();
    let eigenvectors = want_vectors.then(|| {
        order
            .iter()
            .map(|&i| {
                let mut v = std::mem::take(&mut z[i]);
                normalize(&mut v, op.grid.h);
                v
            })
            .collect()
    });
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        grid: op.grid.clone(),
        method: Method::QL,
        extrapolated: false,
        scale: op.norm(),
    })
}

/// Number of eigenvalues strictly below `lambda` (Sturm sequence sign count).
pub fn sturm_count<T: Real>(op: &TridiagonalOperator<T>, lambda: T) -> usize {
    let pivmin = pivot_floor(op);
    let mut count = 0;
    let mut q = op.diag[0] - lambda;
    for i in 0..op.len() {
        if i > 0 {
            let e = op.offdiag[i - 1];
            q = op.diag[i] - lambda - e * e / q;
        }
        if q.abs() < pivmin {
            q = -pivmin;
        }
        if q < T::zero() {
            count += 1;
        }
    }
    count
}

fn pivot_floor<T: Real>(op: &TridiagonalOperator<T>) -> T {
    let emax = op.offdiag.iter().fold(T::one(), |m, e| m.max(*e * *e));
    T::min_positive_value() * emax / T::epsilon()
}

/// Lowest `k` eigenpairs by bisection on Sturm counts, eigenvectors by inverse iteration.
pub fn eigen_bisection<T: Real>(op: &TridiagonalOperator<T>, k: usize) -> Result<Spectrum<T>> {
    let n = op.len();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "requested {k} eigenvalues of a {n}x{n} operator"
        )));
    }
    let scale = op.norm();
    let (glo, ghi) = op.gershgorin();
    let slack = T::of(4.0) * T::epsilon() * scale.max(T::min_positive_value());
    let mut values = Vec::with_capacity(k);
    for idx in 0..k {
        let mut lo = glo - slack;
        let mut hi = ghi + slack;
        if let Some(&prev) = values.last() {
            lo = lo.max(prev - slack);
        }
        for _ in 0..400 {
            let mid = T::half() * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if sturm_count(op, mid) > idx {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= T::two() * T::epsilon() * lo.abs().max(hi.abs()) {
                break;
            }
        }
        values.push(T::half() * (lo + hi));
    }
    let vectors = inverse_iteration(op, &values, scale)?;
    Ok(Spectrum {
        eigenvalues: values,
        eigenvectors: Some(vectors),
        grid: op.grid.clone(),
        method: Method::Bisection,
        extrapolated: false,
        scale,
    })
}

fn inverse_iteration<T: Real>(
    op: &TridiagonalOperator<T>,
    values: &[T],
    scale: T,
) -> Result<Vec<Vec<T>>> {
    let n = op.len();
    let h = op.grid.h;
    let cluster = T::of(1e-3) * scale;
    let target = T::of(1e-10).max(T::of(100.0) * T::epsilon()) * scale.max(T::min_positive_value());
    let mut out: Vec<Vec<T>> = Vec::with_capacity(values.len());
    for (idx, &lambda) in values.iter().enumerate() {
        // irregular deterministic start vector, never orthogonal to a symmetric or antisymmetric mode;
        // the stride varies with idx so degenerate levels start from independent vectors
        let stride = 0.618_033_988_749_895 + 0.414_213_562_373_095 * idx as f64;
        let mut v: Vec<T> = (0..n)
            .map(|j| T::one() + T::of(((j as f64 + 1.0) * stride).fract()))
            .collect();
        let neighbours: Vec<usize> = (0..idx)
            .filter(|&j| (values[j] - lambda).abs() <= cluster)
            .collect();
        let mut converged = false;
        for _ in 0..8 {
            let mut x = solve_shifted(op, lambda, &v);
            for &j in &neighbours {
                let c = dot(&x, &out[j]) * h;
                for (a, b) in x.iter_mut().zip(&out[j]) {
                    *a = *a - c * *b;
                }
            }
            normalize(&mut x, h);
            v = x;
            let tv = op.apply(&v);
            let res: T = tv
                .iter()
                .zip(&v)
                .map(|(&a, &b)| (a - lambda * b) * (a - lambda * b))
                .sum::<T>()
                .sqrt();
            let nrm: T = v.iter().map(|&b| b * b).sum::<T>().sqrt();
            if res <= target * nrm {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NoConvergence { index: idx });
        }
        out.push(v);
    }
    Ok(out)
}

/// Solves `(T - lambda I) x = b` by Gaussian elimination with partial pivoting.
fn solve_shifted<T: Real>(op: &TridiagonalOperator<T>, lambda: T, b: &[T]) -> Vec<T> {
    let n = op.len();
    let tiny = T::epsilon() * op.norm().max(T::min_positive_value());
    if n == 1 {
        let mut p = op.diag[0] - lambda;
        if p.abs() < tiny {
            p = tiny;
        }
        return vec![b[0] / p];
    }
    // rows hold up to three entries after pivoting: (diag, upper1, upper2)
    let mut dg: Vec<T> = op.diag.iter().map(|&d| d - lambda).collect();
    let mut up1: Vec<T> = op.offdiag.clone();
    up1.push(T::zero());
    let mut up2 = vec![T::zero(); n];
    let mut lo: Vec<T> = op.offdiag.clone();
    let mut rhs = b.to_vec();
    for i in 0..n - 1 {
        if lo[i].abs() > dg[i].abs() {
            // swap rows i and i+1
            std::mem::swap(&mut dg[i], &mut lo[i]);
            std::mem::swap(&mut dg[i + 1], &mut up1[i]);
            let next_up = up1[i + 1];
            up1[i + 1] = T::zero();
            up2[i] = next_up;
            rhs.swap(i, i + 1);
            // row i+1 now holds (lo[i], dg[i+1], up1[i+1]) from the old row i
            let m = lo[i] / dg[i];
            dg[i + 1] = dg[i + 1] - m * up1[i];
            up1[i + 1] = up1[i + 1] - m * up2[i];
            rhs[i + 1] = rhs[i + 1] - m * rhs[i];
        } else {
            let mut piv = dg[i];
            if piv.abs() < tiny {
                piv = tiny;
                dg[i] = tiny;
            }
            let m = lo[i] / piv;
            dg[i + 1] = dg[i + 1] - m * up1[i];
            rhs[i + 1] = rhs[i + 1] - m * rhs[i];
        }
    }
    if dg[n - 1].abs() < tiny {
        dg[n - 1] = tiny;
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        if i + 1 < n {
            s = s - up1[i] * x[i + 1];
        }
        if i + 2 < n {
            s = s - up2[i] * x[i + 2];
        }
        let piv = if dg[i].abs() < tiny { tiny } else { dg[i] };
        x[i] = s / piv;
    }
    x
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

/// h-weighted unit norm; the largest-magnitude component is made positive.
fn normalize<T: Real>(v: &mut [T], h: T) {
    let norm = (h * dot(v, v)).sqrt();
    let peak = v
        .iter()
        .copied()
        .fold(T::zero(), |m, x| if x.abs() > m.abs() { x } else { m });
    let s = if peak < T::zero() { -norm } else { norm };
    if s != T::zero() {
        for x in v.iter_mut() {
            *x = *x / s;
        }
    }
}

/// Richardson extrapolation `(4 E_{h/2} - E_h) / 3` of the lowest `k` levels.
pub fn richardson<T: Real>(coarse: &Spectrum<T>, fine: &Spectrum<T>, k: usize) -> Result<Vec<T>> {
    if !coarse.grid.is_halved_by(&fine.grid) {
        return Err(Error::InvalidArgument(
            "spectra are not on a 2:1 grid refinement pair".into(),
        ));
    }
    if coarse.len() < k || fine.len() < k {
        return Err(Error::InvalidArgument(format!(
            "need {k} levels on both grids"
        )));
    }
    let three = T::of(3.0);
    Ok((0..k)
        .map(|i| (T::of(4.0) * fine.eigenvalues[i] - coarse.eigenvalues[i]) / three)
        .collect())
}

/// `E_{n+1} - E_n` for `n = 0..count`.
pub fn level_spacings<T: Real>(spec: &Spectrum<T>, count: usize) -> Result<Vec<T>> {
    if count + 1 > spec.len() {
        return Err(Error::InvalidArgument(format!(
            "{} spacings need {} levels, have {}",
            count,
            count + 1,
            spec.len()
        )));
    }
    Ok(spec
        .eigenvalues
        .windows(2)
        .take(count)
        .map(|w| w[1] - w[0])
        .collect())
}

/// Nodes within this many steps of a wall are used for exponent fits, the nearest excluded.
pub const DEFAULT_FIT_WINDOW: usize = 11;

/// Power `alpha` in `|psi| ~ dist^alpha` near `wall`, fitted log-log over the
/// `fit_window` nodes closest to the wall, skipping the very nearest node.
pub fn boundary_exponent<T: Real>(
    spec: &Spectrum<T>,
    level: usize,
    wall: T,
    fit_window: usize,
) -> Result<T> {
    let vecs = spec
        .eigenvectors
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("spectrum carries no eigenvectors".into()))?;
    let psi = vecs
        .get(level)
        .ok_or_else(|| Error::InvalidArgument(format!("level {level} not available")))?;
    if fit_window < 4 {
        return Err(Error::InvalidArgument(format!(
            "fit window {fit_window} below 4 nodes"
        )));
    }
    let g = &spec.grid;
    if g.n < fit_window + 1 {
        return Err(Error::InvalidArgument(
            "grid too small for the fit window".into(),
        ));
    }
    let mut idx: Vec<usize> = (0..g.n).collect();
    idx.sort_by(|&a, &b| {
        (g.nodes[a] - wall)
            .abs()
            .partial_cmp(&(g.nodes[b] - wall).abs())
            .expect("finite nodes")
    });
    let mut xs = Vec::with_capacity(fit_window);
    let mut ys = Vec::with_capacity(fit_window);
    for &j in idx.iter().skip(1).take(fit_window) {
        let v = psi[j].abs();
        if !(v > T::of(1e-14)) {
            return Err(Error::Precondition(format!(
                "eigenvector underflows near the wall at node {j}"
            )));
        }
        xs.push((g.nodes[j] - wall).abs().ln());
        ys.push(v.ln());
    }
    ls_slope(&xs, &ys).ok_or_else(|| Error::DegenerateFit("boundary exponent fit".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain_grid::build_grid;
    use crate::operators::{assemble, ModelSpec};

    fn laplacian(n: usize, h: f64) -> TridiagonalOperator<f64> {
        TridiagonalOperator::<f64>::from_diagonals(
            vec![2.0 / (h * h); n],
            vec![-1.0 / (h * h); n - 1],
        )
        .unwrap()
    }

    /// Closed-form Dirichlet Laplacian spectrum, independent of any solver.
    fn laplacian_exact(n: usize, h: f64) -> Vec<f64> {
        (1..=n)
            .map(|k| {
                2.0 / (h * h) * (1.0 - (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
            })
            .collect()
    }

    #[test]
    fn two_by_two() {
        let t = TridiagonalOperator::<f64>::from_diagonals(vec![2.0, 2.0], vec![-1.0]).unwrap();
        let s = eigen_ql(&t).unwrap();
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-15 && (s.eigenvalues[1] - 3.0).abs() < 1e-15);
        let b = eigen_bisection(&t, 2).unwrap();
        assert!((b.eigenvalues[0] - 1.0).abs() < 1e-14 && (b.eigenvalues[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn scalar_matrix() {
        let t = TridiagonalOperator::<f64>::from_diagonals(vec![4.25], vec![]).unwrap();
        assert_eq!(eigen_ql(&t).unwrap().eigenvalues, vec![4.25]);
        assert!((eigen_bisection(&t, 1).unwrap().eigenvalues[0] - 4.25).abs() < 1e-14);
    }

    #[test]
    fn laplacian_closed_form() {
        let (n, h) = (200, 0.01);
        let t = laplacian(n, h);
        let s = eigen_ql(&t).unwrap();
        let exact = laplacian_exact(n, h);
        let tol = 10.0 * f64::EPSILON * t.norm();
        for (a, b) in s.eigenvalues.iter().zip(&exact) {
            assert!((a - b).abs() < tol, "{a} {b}");
        }
    }

    #[test]
    fn bisection_matches_ql() {
        let (n, h) = (150, 0.02);
        let t = laplacian(n, h);
        let q = eigen_ql(&t).unwrap();
        let b3 = eigen_bisection(&t, 3).unwrap();
        for i in 0..3 {
            assert!((b3.eigenvalues[i] - q.eigenvalues[i]).abs() < 1e-10);
        }
        let all = eigen_bisection(&t, n).unwrap();
        let tol = 1e-10 * t.norm();
        for (a, b) in all.eigenvalues.iter().zip(&q.eigenvalues) {
            assert!((a - b).abs() < tol);
        }
        assert!(all.max_residual(&t).unwrap() < 1e-8 * t.norm());
    }

    #[test]
    fn near_diagonal_cluster() {
        let t = TridiagonalOperator::<f64>::from_diagonals(vec![5.0; 3], vec![1e-30; 2]).unwrap();
        let b = eigen_bisection(&t, 3).unwrap();
        for e in &b.eigenvalues {
            assert!((e - 5.0).abs() < 1e-12);
        }
        let v = b.eigenvectors.unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum();
                assert!(
                    (d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8,
                    "{i}{j} {d}"
                );
            }
        }
        let q = eigen_ql(&t).unwrap();
        assert!(q.eigenvalues.iter().all(|e| (e - 5.0).abs() < 1e-12));
    }

    #[test]
    fn ql_vectors_orthonormal_with_small_residual() {
        let m = ModelSpec::<f64>::half_harmonic_oscillator(1.0);
        let g = build_grid(&m.domain, 300, Some(10.0)).unwrap();
        let t = assemble(&m, g.primary()).unwrap();
        let s = eigen_ql_with_vectors(&t).unwrap();
        assert!(s.max_residual(&t).unwrap() < 1e-8 * t.norm());
        let v = s.eigenvectors.as_ref().unwrap();
        let h = t.grid.h;
        for i in 0..6 {
            for j in 0..6 {
                let d = h * v[i].iter().zip(&v[j]).map(|(a, b)| a * b).sum::<f64>();
                assert!((d - if i == j { 1.0 } else { 0.0 }).abs() < 1e-8);
            }
        }
        assert!(s.eigenvalues.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn sturm_count_isolates_levels() {
        let t = laplacian(80, 0.05);
        let q = eigen_ql(&t).unwrap();
        let delta = 1e-6 * t.norm();
        for &e in q.eigenvalues.iter().take(10) {
            assert_eq!(sturm_count(&t, e + delta) - sturm_count(&t, e - delta), 1);
        }
        assert_eq!(sturm_count(&t, -1.0), 0);
        assert_eq!(sturm_count(&t, 1e9), 80);
    }

    #[test]
    fn bisection_range_errors() {
        let t = laplacian(5, 1.0);
        assert!(eigen_bisection(&t, 0).is_err());
        assert!(eigen_bisection(&t, 6).is_err());
    }

    #[test]
    fn richardson_constant_and_refinement_checks() {
        let g = Grid1D::<f64>::new(0.0, 1.0, 9).unwrap();
        let f = g.refine().unwrap();
        let mk = |grid: &Grid1D<f64>| Spectrum {
            eigenvalues: vec![1.5, 2.5],
            eigenvectors: None,
            grid: grid.clone(),
            method: Method::QL,
            extrapolated: false,
            scale: 1.0,
        };
        assert_eq!(richardson(&mk(&g), &mk(&f), 2).unwrap(), vec![1.5, 2.5]);
        assert!(richardson(&mk(&g), &mk(&g), 2).is_err());
        assert!(richardson(&mk(&g), &mk(&f), 3).is_err());
    }

    #[test]
    fn richardson_recovers_oscillator() {
        let m = ModelSpec::<f64>::harmonic_oscillator(1.0);
        let g = build_grid(&m.domain, 999, Some(10.0)).unwrap();
        let g = g.primary().clone();
        let c = eigen_ql(&assemble(&m, &g).unwrap()).unwrap();
        let f = eigen_ql(&assemble(&m, &g.refine().unwrap()).unwrap()).unwrap();
        let ex = richardson(&c, &f, 3).unwrap();
        assert!((c.eigenvalues[0] - 0.5).abs() > 1e-6);
        assert!((ex[0] - 0.5).abs() < 1e-8, "{}", ex[0]);
    }

    #[test]
    fn spacing_errors() {
        let t = laplacian(4, 1.0);
        let s = eigen_ql(&t).unwrap();
        assert_eq!(level_spacings(&s, 3).unwrap().len(), 3);
        assert!(level_spacings(&s, 4).is_err());
    }

    #[test]
    fn exponent_requires_vectors() {
        let s = eigen_ql(&laplacian(20, 0.1)).unwrap();
        assert!(boundary_exponent(&s, 0, 0.0, 6).is_err());
    }

    #[test]
    fn canonical_box_ground_state_is_linear_at_wall() {
        let m = ModelSpec::<f64>::canonical_box(1.0, 1.0);
        let g = build_grid(&m.domain, 1000, None).unwrap();
        let t = assemble(&m, g.primary()).unwrap();
        let s = eigen_bisection(&t, 1).unwrap();
        let a = boundary_exponent(&s, 0, -1.0, DEFAULT_FIT_WINDOW).unwrap();
        assert!((a - 1.0).abs() < 0.02, "{a}");
        assert!((s.eigenvalues[0] - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-5);
    }

    #[test]
    fn works_in_single_precision() {
        let t = TridiagonalOperator::<f32>::from_diagonals(vec![2.0; 30], vec![-1.0; 29]).unwrap();
        let q = eigen_ql(&t).unwrap();
        let b = eigen_bisection(&t, 4).unwrap();
        for i in 0..4 {
            assert!((q.eigenvalues[i] - b.eigenvalues[i]).abs() < 1e-5);
        }
    }
}
