//! The relative tangent groupoid of a fixed-point set as a computational
//! object: rescaled charts, deformation kernels with their t = 0 boundary
//! values, the trace functionals Tr_t / Str_t and their t -> 0 limits, the
//! pullback twist, and the rescaled-ladder extrapolation.
//!
//! A `DeformationKernel` stores a kernel on V x V x (0,1] (`bulk`) together
//! with its boundary value on each tangent fiber T_m V + T_m V. Two storage
//! conventions are supported, recorded by `normalization_scale` r: the
//! smooth-section convention (r = 0), where the boundary is the plain chart
//! limit of the bulk, and the geometric-kernel convention (r = n), where the
//! bulk is an honest Schwartz kernel on V x V and t^n * bulk(chart) tends to
//! the boundary. The ladder functional is f(t) = t^{r-n} Str_t(bulk), so the
//! rescaling exponent lives in exactly one place.
//!
//! Kernels are stored already reduced to functions of the groupoid element;
//! on the pair groupoid an equivariant family is a constant family, so
//! equivariance holds by construction and is never checked at runtime.

use crate::error::{Error, Result};
use crate::geometry::{
    apply_map, differential_at, wrap_difference, FixedPointRecord, QuadratureGrid, TorusGeometry,
    TorusMap,
};
use crate::heatkernel::ThetaKernel;
use crate::numeric::{as_f64, pairwise_sum, pi, real, GaussLegendre, Real};
use crate::superalgebra::{GradedEndomorphism, Zeta};
use rayon::prelude::*;
use std::sync::Arc;

/// Absolute tolerance for the dual-path cross-check in `trace_0_of_twist`.
pub const CROSS_CHECK_TOL: f64 = 1e-8;

/// Shell-increment tolerance for the expanding-box boundary quadrature.
pub const BOUNDARY_QUAD_TOL: f64 = 1e-10;

/// A local chart of the deformation space: `tangential` coordinates along
/// the submanifold are kept, `normal` coordinates are rescaled by 1/t.
#[derive(Debug, Clone)]
pub struct DeformationChart<T> {
    pub tangential: usize,
    pub normal: usize,
    pub center: Vec<T>,
    pub half_width: T,
}

impl<T: Real> DeformationChart<T> {
    pub fn new(tangential: usize, normal: usize, center: Vec<T>, half_width: T) -> Self {
        assert_eq!(center.len(), tangential + normal);
        Self {
            tangential,
            normal,
            center,
            half_width,
        }
    }

    fn check_domain(&self, v: &[T]) -> Result<()> {
        if v.len() != self.tangential + self.normal {
            return Err(Error::InvalidConfig(format!(
                "point has {} coordinates, chart expects {}",
                v.len(),
                self.tangential + self.normal
            )));
        }
        for (a, c) in v.iter().zip(&self.center) {
            if (*a - *c).abs() > self.half_width {
                return Err(Error::OutOfChart {
                    point: v.iter().map(|&x| as_f64(x)).collect(),
                    center: self.center.iter().map(|&x| as_f64(x)).collect(),
                    half_width: as_f64(self.half_width),
                });
            }
        }
        Ok(())
    }

    /// (v_p, v_q, t) -> (v_p, (v_q - c_q)/t, t) for t > 0.
    pub fn forward(&self, v: &[T], t: T) -> Result<(Vec<T>, T)> {
        if t <= T::zero() {
            return Err(Error::InvalidConfig("chart requires t > 0".into()));
        }
        self.check_domain(v)?;
        let mut out = v.to_vec();
        for i in self.tangential..v.len() {
            out[i] = (v[i] - self.center[i]) / t;
        }
        Ok((out, t))
    }

    /// Inverse of `forward`.
    pub fn backward(&self, coords: &[T], t: T) -> Result<(Vec<T>, T)> {
        if t <= T::zero() {
            return Err(Error::InvalidConfig("chart requires t > 0".into()));
        }
        let mut out = coords.to_vec();
        for i in self.tangential..coords.len() {
            out[i] = self.center[i] + coords[i] * t;
        }
        Ok((out, t))
    }
}

/// Chart of the relative tangent groupoid about a fixed point m: both slots
/// are centered at m (differences taken to the nearest torus representative)
/// and rescaled by 1/t.
pub fn groupoid_chart_forward<T: Real>(
    m: &[T],
    v1: &[T],
    v2: &[T],
    t: T,
) -> Result<(Vec<T>, Vec<T>, T)> {
    if t <= T::zero() {
        return Err(Error::InvalidConfig("chart requires t > 0".into()));
    }
    let rescale = |v: &[T]| -> Result<Vec<T>> {
        let d = wrap_difference(v, m);
        if d.iter().any(|&c| c.abs() >= real(0.5)) {
            return Err(Error::OutOfChart {
                point: v.iter().map(|&x| as_f64(x)).collect(),
                center: m.iter().map(|&x| as_f64(x)).collect(),
                half_width: 0.5,
            });
        }
        Ok(d.into_iter().map(|c| c / t).collect())
    };
    Ok((rescale(v1)?, rescale(v2)?, t))
}

type BulkFn<T> = dyn Fn(&[T], &[T], T) -> GradedEndomorphism<T> + Send + Sync;
type BoundaryFn<T> = dyn Fn(&[T], &[T], &[T]) -> GradedEndomorphism<T> + Send + Sync;

/// A kernel on the relative tangent groupoid: `bulk(v1, v2, t)` for t > 0
/// and `boundary(X, Y, m)` on the tangent fiber over the fixed point m.
#[derive(Clone)]
pub struct DeformationKernel<T> {
    bulk: Arc<BulkFn<T>>,
    boundary: Arc<BoundaryFn<T>>,
    pub translation_invariant_at_0: bool,
    pub normalization_scale: i32,
}

impl<T: Real> DeformationKernel<T> {
    pub fn new(
        bulk: Arc<BulkFn<T>>,
        boundary: Arc<BoundaryFn<T>>,
        translation_invariant_at_0: bool,
        normalization_scale: i32,
    ) -> Self {
        Self {
            bulk,
            boundary,
            translation_invariant_at_0,
            normalization_scale,
        }
    }

    /// Scalar-valued kernel (rank-1 ungraded bundle).
    pub fn from_scalar(
        bulk: impl Fn(&[T], &[T], T) -> T + Send + Sync + 'static,
        boundary: impl Fn(&[T], &[T], &[T]) -> T + Send + Sync + 'static,
        translation_invariant_at_0: bool,
        normalization_scale: i32,
    ) -> Self {
        Self {
            bulk: Arc::new(move |v1, v2, t| GradedEndomorphism::scalar(bulk(v1, v2, t))),
            boundary: Arc::new(move |x, y, m| GradedEndomorphism::scalar(boundary(x, y, m))),
            translation_invariant_at_0,
            normalization_scale,
        }
    }

    pub fn bulk(&self, v1: &[T], v2: &[T], t: T) -> GradedEndomorphism<T> {
        (self.bulk)(v1, v2, t)
    }

    pub fn boundary(&self, x: &[T], y: &[T], m: &[T]) -> GradedEndomorphism<T> {
        (self.boundary)(x, y, m)
    }

    /// Maximum deviation of boundary(X, Y, m) from boundary(X - Y, 0, m)
    /// over a deterministic sample, for checking the translation-invariance
    /// flag.
    pub fn translation_invariance_deviation(&self, dimension: usize, m: &[T]) -> T {
        let mut worst = T::zero();
        let mut seed = 0x2545f4914f6cdd1du64;
        let mut next = move || {
            seed ^= seed << 13;
            seed ^= seed >> 7;
            seed ^= seed << 17;
            (seed >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..32 {
            let x: Vec<T> = (0..dimension).map(|_| real(4.0 * next() - 2.0)).collect();
            let y: Vec<T> = (0..dimension).map(|_| real(4.0 * next() - 2.0)).collect();
            let diff: Vec<T> = x.iter().zip(&y).map(|(&a, &b)| a - b).collect();
            let zero = vec![T::zero(); dimension];
            let d = self
                .boundary(&x, &y, m)
                .sub(&self.boundary(&diff, &zero, m))
                .max_abs();
            worst = worst.max(d);
        }
        worst
    }
}

/// Reduced kernel of a constant (equivariant) family on the pair groupoid.
/// On this representation kernels are stored already reduced, so the
/// reduction map is the identity.
pub fn pair_groupoid_reduced_kernel<T: Real>(k: &DeformationKernel<T>) -> DeformationKernel<T> {
    k.clone()
}

/// Tr_t(k) = int_V tr k(v, v, t) dmu_V by grid quadrature of the diagonal.
pub fn trace_t<T: Real>(
    kernel: &DeformationKernel<T>,
    t: T,
    geom: &TorusGeometry,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    diagonal_quadrature(kernel, t, geom, grid, |g| g.trace())
}

/// Str_t(k) = int_V str k(v, v, t) dmu_V.
pub fn supertrace_t<T: Real>(
    kernel: &DeformationKernel<T>,
    t: T,
    geom: &TorusGeometry,
    grid: &QuadratureGrid<T>,
) -> Result<T> {
    diagonal_quadrature(kernel, t, geom, grid, |g| g.supertrace())
}

fn diagonal_quadrature<T: Real>(
    kernel: &DeformationKernel<T>,
    t: T,
    geom: &TorusGeometry,
    grid: &QuadratureGrid<T>,
    reduce: impl Fn(&GradedEndomorphism<T>) -> T + Sync,
) -> Result<T> {
    if t <= T::zero() {
        return Err(Error::InvalidConfig("trace_t requires t > 0".into()));
    }
    debug_assert_eq!(grid.dimension(), geom.dimension());
    Ok(grid.integrate(|v| reduce(&kernel.bulk(v, v, t))))
}

/// Tr_0(k) = sum_m int_{T_m V} tr k(X, X, m) dX, the counting-measure form
/// over a finite fixed-point set.
pub fn trace_0<T: Real>(
    kernel: &DeformationKernel<T>,
    fixed_points: &[FixedPointRecord<T>],
) -> Result<T> {
    boundary_trace_sum(kernel, fixed_points, |g| g.trace())
}

/// Str_0(k) = sum_m int_{T_m V} str k(X, X, m) dX.
pub fn supertrace_0<T: Real>(
    kernel: &DeformationKernel<T>,
    fixed_points: &[FixedPointRecord<T>],
) -> Result<T> {
    boundary_trace_sum(kernel, fixed_points, |g| g.supertrace())
}

fn boundary_trace_sum<T: Real>(
    kernel: &DeformationKernel<T>,
    fixed_points: &[FixedPointRecord<T>],
    reduce: impl Fn(&GradedEndomorphism<T>) -> T + Sync + Copy,
) -> Result<T> {
    let mut total = T::zero();
    for fp in fixed_points {
        let n = fp.point.len();
        let m = fp.point.clone();
        total += expanding_box_integral(n, |x| reduce(&kernel.boundary(x, x, &m)))?;
    }
    Ok(total)
}

/// Integral of a scalar function over R^n by Gauss-Legendre quadrature on
/// expanding cubical shells: the cube [-1, 1]^n first, then the shells
/// obtained by doubling the half-width, stopping once a shell contributes
/// less than `BOUNDARY_QUAD_TOL`.
pub fn expanding_box_integral<T: Real>(
    dimension: usize,
    f: impl Fn(&[T]) -> T + Sync,
) -> Result<T> {
    let rule = GaussLegendre::<T>::new(64);
    let mut total = box_integral(&rule, &vec![(-T::one(), T::one()); dimension], &f);
    let mut half_width = T::one();
    let mut last_increment = T::infinity();
    for _ in 0..16 {
        let two = real::<T>(2.0);
        let mut increment = T::zero();
        // the shell [-2L, 2L]^n minus [-L, L]^n as 3^n - 1 product boxes
        let segments = [
            (-two * half_width, -half_width),
            (-half_width, half_width),
            (half_width, two * half_width),
        ];
        let mut selector = vec![0usize; dimension];
        'boxes: loop {
            if selector.iter().any(|&s| s != 1) {
                let bounds: Vec<(T, T)> = selector.iter().map(|&s| segments[s]).collect();
                increment += box_integral(&rule, &bounds, &f);
            }
            let mut axis = 0;
            loop {
                selector[axis] += 1;
                if selector[axis] < 3 {
                    break;
                }
                selector[axis] = 0;
                axis += 1;
                if axis == dimension {
                    break 'boxes;
                }
            }
        }
        total += increment;
        if increment.abs() < real::<T>(BOUNDARY_QUAD_TOL) * T::one().max(total.abs()) {
            return Ok(total);
        }
        last_increment = increment;
        half_width = two * half_width;
    }
    Err(Error::NonDecayingBoundary {
        half_width: as_f64(half_width),
        increment: as_f64(last_increment),
    })
}

/// Product Gauss-Legendre quadrature over one box.
fn box_integral<T: Real>(
    rule: &GaussLegendre<T>,
    bounds: &[(T, T)],
    f: &(impl Fn(&[T]) -> T + Sync),
) -> T {
    let n = bounds.len();
    let nodes = rule.nodes.len();
    let total = nodes.pow(n as u32);
    let half = real::<T>(0.5);
    let jacobian = bounds
        .iter()
        .map(|&(a, b)| (b - a) * half)
        .fold(T::one(), |acc, v| acc * v);
    let values: Vec<T> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = flat;
            let mut x = vec![T::zero(); n];
            let mut w = T::one();
            for axis in 0..n {
                let i = idx % nodes;
                idx /= nodes;
                let (a, b) = bounds[axis];
                x[axis] = (a + b) * half + (b - a) * half * rule.nodes[i];
                w *= rule.weights[i];
            }
            w * f(&x)
        })
        .collect();
    pairwise_sum(&values) * jacobian
}

/// Pull the kernel back along the map and twist by the bundle map:
/// bulk (v1, v2, t) -> zeta(v1) . k(phi(v1), v2, t), boundary
/// (X, Y, m) -> zeta_m . k(dphi_m X, Y, m).
///
/// The result is generally no longer translation invariant at t = 0 even
/// when the input kernel is.
pub fn twist_by_map<T: Real>(
    kernel: &DeformationKernel<T>,
    map: &TorusMap<T>,
    zeta: &Zeta<T>,
) -> DeformationKernel<T> {
    let bulk_inner = kernel.bulk.clone();
    let boundary_inner = kernel.boundary.clone();
    let map_bulk = map.clone();
    let map_boundary = map.clone();
    let zeta_bulk = zeta.clone();
    let zeta_boundary = zeta.clone();
    DeformationKernel {
        bulk: Arc::new(move |v1, v2, t| {
            let image = apply_map(&map_bulk, v1);
            zeta_bulk
                .at(&map_bulk, v1)
                .compose(&bulk_inner(&image, v2, t))
        }),
        boundary: Arc::new(move |x, y, m| {
            let dphi = differential_at(&map_boundary, m);
            let pushed = dphi.matvec(x);
            zeta_boundary
                .at(&map_boundary, m)
                .compose(&boundary_inner(&pushed, y, m))
        }),
        translation_invariant_at_0: false,
        normalization_scale: kernel.normalization_scale,
    }
}

/// Tr_0 of the twisted kernel, evaluated two independent ways:
///
/// * direct: sum_m int str(zeta_m . k(dphi_m X, X, m)) dX;
/// * determinant formula:
///   sum_m |det(dphi_m - 1)|^{-1} str(zeta_m . int k(X, 0, m) dX).
///
/// Both must agree within `CROSS_CHECK_TOL`; the determinant-formula value
/// is returned.
pub fn trace_0_of_twist<T: Real>(
    kernel: &DeformationKernel<T>,
    map: &TorusMap<T>,
    zeta: &Zeta<T>,
    fixed_points: &[FixedPointRecord<T>],
) -> Result<T> {
    if !kernel.translation_invariant_at_0 {
        return Err(Error::NotTranslationInvariant);
    }
    for fp in fixed_points {
        if !fp.simple {
            return Err(Error::NonSimpleFixedPoint {
                location: fp.point.iter().map(|&v| as_f64(v)).collect(),
                det_abs: 0.0,
                tolerance: crate::geometry::SIMPLE_FIXED_POINT_TOL,
            });
        }
    }

    let mut by_determinant = T::zero();
    let mut by_quadrature = T::zero();
    for fp in fixed_points {
        let n = fp.point.len();
        let m = fp.point.clone();
        let zeta_m = zeta.at(map, &m);
        let zero = vec![T::zero(); n];

        // int k(X, 0, m) dX, matrix-valued over the graded blocks
        let slice_integral = expanding_box_graded(n, |x| kernel.boundary(x, &zero, &m))?;
        by_determinant += fp.weight * zeta_m.compose(&slice_integral).supertrace();

        let dphi = &fp.differential;
        by_quadrature += expanding_box_integral(n, |x| {
            let pushed = dphi.matvec(x);
            zeta_m
                .compose(&kernel.boundary(&pushed, x, &m))
                .supertrace()
        })?;
    }

    let gap = (by_determinant - by_quadrature).abs();
    if gap > real(CROSS_CHECK_TOL) {
        return Err(Error::CrossCheckFailure {
            direct: as_f64(by_quadrature),
            determinant: as_f64(by_determinant),
            tolerance: CROSS_CHECK_TOL,
        });
    }
    Ok(by_determinant)
}

/// Expanding-box integral of a graded-endomorphism-valued function. The
/// function is evaluated once per quadrature node; entries are accumulated
/// through a flat vector with the shell schedule of
/// `expanding_box_integral`, stopping on the max-abs of the shell increment.
fn expanding_box_graded<T: Real>(
    dimension: usize,
    f: impl Fn(&[T]) -> GradedEndomorphism<T> + Sync,
) -> Result<GradedEndomorphism<T>> {
    let probe = f(&vec![T::zero(); dimension]);
    let block_dims: Vec<usize> = (0..probe.degree_count())
        .map(|p| probe.block(p).dim())
        .collect();
    let flatten = |g: &GradedEndomorphism<T>| -> Vec<T> {
        let mut out = Vec::new();
        for (p, &dim) in block_dims.iter().enumerate() {
            for i in 0..dim {
                for j in 0..dim {
                    out.push(g.block(p)[(i, j)]);
                }
            }
        }
        out
    };
    let entries = flatten(&probe).len();

    let rule = GaussLegendre::<T>::new(64);
    let flat_f = |x: &[T]| flatten(&f(x));
    let mut total = box_integral_vec(
        &rule,
        &vec![(-T::one(), T::one()); dimension],
        &flat_f,
        entries,
    );
    let mut half_width = T::one();
    let mut converged = false;
    let mut last_inc_norm = T::infinity();
    for _ in 0..16 {
        let two = real::<T>(2.0);
        let mut increment = vec![T::zero(); entries];
        let segments = [
            (-two * half_width, -half_width),
            (-half_width, half_width),
            (half_width, two * half_width),
        ];
        let mut selector = vec![0usize; dimension];
        'boxes: loop {
            if selector.iter().any(|&s| s != 1) {
                let bounds: Vec<(T, T)> = selector.iter().map(|&s| segments[s]).collect();
                let part = box_integral_vec(&rule, &bounds, &flat_f, entries);
                for (acc, v) in increment.iter_mut().zip(part) {
                    *acc += v;
                }
            }
            let mut axis = 0;
            loop {
                selector[axis] += 1;
                if selector[axis] < 3 {
                    break;
                }
                selector[axis] = 0;
                axis += 1;
                if axis == dimension {
                    break 'boxes;
                }
            }
        }
        let inc_norm = increment.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let tot_norm = total.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        for (acc, v) in total.iter_mut().zip(increment) {
            *acc += v;
        }
        if inc_norm < real::<T>(BOUNDARY_QUAD_TOL) * T::one().max(tot_norm) {
            converged = true;
            break;
        }
        last_inc_norm = inc_norm;
        half_width = two * half_width;
    }
    if !converged {
        return Err(Error::NonDecayingBoundary {
            half_width: as_f64(half_width),
            increment: as_f64(last_inc_norm),
        });
    }

    let mut blocks = Vec::with_capacity(block_dims.len());
    let mut cursor = 0usize;
    for &dim in &block_dims {
        blocks.push(crate::linalg::SquareMatrix::from_fn(dim, |i, j| {
            total[cursor + i * dim + j]
        }));
        cursor += dim * dim;
    }
    Ok(GradedEndomorphism::from_blocks(blocks))
}

/// Product Gauss-Legendre quadrature of a vector-valued function over one
/// box; entries are reduced independently by pairwise summation.
fn box_integral_vec<T: Real>(
    rule: &GaussLegendre<T>,
    bounds: &[(T, T)],
    f: &(impl Fn(&[T]) -> Vec<T> + Sync),
    entries: usize,
) -> Vec<T> {
    let n = bounds.len();
    let nodes = rule.nodes.len();
    let total = nodes.pow(n as u32);
    let half = real::<T>(0.5);
    let jacobian = bounds
        .iter()
        .map(|&(a, b)| (b - a) * half)
        .fold(T::one(), |acc, v| acc * v);
    let values: Vec<Vec<T>> = (0..total)
        .into_par_iter()
        .map(|flat| {
            let mut idx = flat;
            let mut x = vec![T::zero(); n];
            let mut w = T::one();
            for axis in 0..n {
                let i = idx % nodes;
                idx /= nodes;
                let (a, b) = bounds[axis];
                x[axis] = (a + b) * half + (b - a) * half * rule.nodes[i];
                w *= rule.weights[i];
            }
            f(&x).into_iter().map(|v| v * w).collect()
        })
        .collect();
    (0..entries)
        .map(|e| {
            let column: Vec<T> = values.iter().map(|row| row[e]).collect();
            pairwise_sum(&column) * jacobian
        })
        .collect()
}

/// A rescaled-trace ladder: the functional f(t) = t^{r-n} Str_t(k) on a
/// decreasing geometric sequence of deformation parameters, with a single
/// Richardson step under the working assumption of an O(t) error.
#[derive(Debug, Clone)]
pub struct TraceLadder<T> {
    pub t_values: Vec<T>,
    pub values: Vec<T>,
    pub extrapolated: T,
    pub residuals: Vec<T>,
    pub method: String,
}

/// Evaluate the rescaled ladder and extrapolate its limit.
///
/// `grid_for_rung` supplies the quadrature grid used at each rung, so
/// callers can refine the grid as the kernel localizes.
pub fn rescaled_limit<T: Real>(
    kernel: &DeformationKernel<T>,
    t_values: &[T],
    geom: &TorusGeometry,
    grid_for_rung: impl Fn(T) -> QuadratureGrid<T> + Sync,
) -> Result<TraceLadder<T>> {
    if t_values.len() < 5 {
        return Err(Error::InvalidLadder(format!(
            "need at least 5 rungs, got {}",
            t_values.len()
        )));
    }
    let ratio = t_values[1] / t_values[0];
    if !(ratio > T::zero() && ratio < T::one()) {
        return Err(Error::InvalidLadder(format!(
            "ratio {ratio} outside (0, 1)"
        )));
    }
    for pair in t_values.windows(2) {
        let r = pair[1] / pair[0];
        if (r - ratio).abs() > real::<T>(1e-9) * ratio {
            return Err(Error::InvalidLadder(
                "t values are not a geometric sequence".into(),
            ));
        }
    }
    let n = geom.dimension() as i32;
    let exponent = kernel.normalization_scale - n;

    let values: Vec<Result<T>> = t_values
        .par_iter()
        .map(|&t| {
            let grid = grid_for_rung(t);
            supertrace_t(kernel, t, geom, &grid).map(|s| s * t.powi(exponent))
        })
        .collect();
    let values: Vec<T> = values.into_iter().collect::<Result<_>>()?;

    let monotone_growth = values.windows(2).all(|w| w[1].abs() > w[0].abs());
    if monotone_growth && values.last().unwrap().abs() > real::<T>(10.0) * values[0].abs() {
        return Err(Error::UnboundedLadder {
            first: as_f64(values[0].abs()),
            last: as_f64(values.last().unwrap().abs()),
        });
    }

    // one Richardson step on f(t) = f0 + c t from the two finest rungs
    let last = values[values.len() - 1];
    let prev = values[values.len() - 2];
    let extrapolated = (last - ratio * prev) / (T::one() - ratio);
    if !extrapolated.is_finite() {
        return Err(Error::InvalidLadder("extrapolated limit is not finite".into()));
    }
    let residuals = values.iter().map(|&v| v - extrapolated).collect();
    Ok(TraceLadder {
        t_values: t_values.to_vec(),
        values,
        extrapolated,
        residuals,
        method: "richardson-1".into(),
    })
}

/// The de Rham heat kernel of the flat torus as a deformation kernel in the
/// geometric convention (normalization_scale = n): the bulk is the theta
/// kernel times the identity on the form bundle at tau = t^2, the boundary
/// is the time-1 Gaussian model kernel times the identity.
pub fn de_rham_heat_kernel<T: Real>(geom: &TorusGeometry) -> Result<DeformationKernel<T>> {
    let n = geom.dimension();
    // validate the dimension once up front
    ThetaKernel::<T>::new(geom, real(0.01))?;
    let geom_bulk = geom.clone();
    let bulk = Arc::new(move |v1: &[T], v2: &[T], t: T| {
        let tau = t * t;
        let theta = ThetaKernel::new(&geom_bulk, tau).expect("tau > 0 for t > 0");
        GradedEndomorphism::identity(n).scale(theta.eval_unchecked(v1, v2))
    });
    let boundary = Arc::new(move |x: &[T], y: &[T], _m: &[T]| {
        let mut dist2 = T::zero();
        for (&a, &b) in x.iter().zip(y) {
            let d = a - b;
            dist2 += d * d;
        }
        let four_pi = real::<T>(4.0) * pi::<T>();
        let g = four_pi.powf(-real::<T>(n as f64 / 2.0)) * (-dist2 / real::<T>(4.0)).exp();
        GradedEndomorphism::identity(n).scale(g)
    });
    Ok(DeformationKernel::new(bulk, boundary, true, n as i32))
}
