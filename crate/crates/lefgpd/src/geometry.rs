//! Flat model manifolds: the torus R^n/Z^n with unit covolume, its affine
//! self-maps and Fourier-perturbed circle maps, fixed points with their
//! differentials, and the uniform quadrature grid.

use crate::error::{Error, Result};
use crate::linalg::{smith_diagonalize, IntMatrix, SmithForm, SquareMatrix};
use crate::numeric::{as_f64, pairwise_sum, pi, real, Real};
use rayon::prelude::*;

/// Simplicity threshold on |det(dphi - I)| below which a fixed point is
/// rejected rather than weighted.
pub const SIMPLE_FIXED_POINT_TOL: f64 = 1e-8;

/// Number of scan points used to bracket circle fixed points.
const CIRCLE_SCAN_POINTS: usize = 4096;

/// The flat torus R^n/Z^n with the unit-covolume lattice convention, so the
/// total measure is 1, plus the default quadrature resolution.
///
/// The lattice is always Z^n; a map on a general lattice L should be
/// conjugated by a basis of L into these coordinates first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TorusGeometry {
    dimension: usize,
    grid_size: usize,
}

impl TorusGeometry {
    pub fn new(dimension: usize, grid_size: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidConfig("dimension must be >= 1".into()));
        }
        if grid_size < 2 {
            return Err(Error::InvalidConfig("grid_size must be >= 2".into()));
        }
        Ok(Self {
            dimension,
            grid_size,
        })
    }

    /// The circle S^1.
    pub fn circle(grid_size: usize) -> Result<Self> {
        Self::new(1, grid_size)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn grid<T: Real>(&self) -> QuadratureGrid<T> {
        QuadratureGrid::new(self.dimension, self.grid_size)
    }

    /// A grid with the same dimension but a different resolution.
    pub fn grid_with<T: Real>(&self, points_per_axis: usize) -> QuadratureGrid<T> {
        QuadratureGrid::new(self.dimension, points_per_axis.max(2))
    }
}

/// A self-map of the torus.
///
/// `Affine` is x -> A x + b with integer matrix A (so the map descends to the
/// torus exactly). `CircleFourier` is a circle map given by the lift
/// x -> degree * x + constant + sum_j amplitude_j sin(2 pi frequency_j x),
/// which satisfies lift(x + 1) = lift(x) + degree.
#[derive(Debug, Clone)]
pub enum TorusMap<T> {
    Affine {
        matrix: IntMatrix,
        shift: Vec<T>,
    },
    CircleFourier {
        degree: i64,
        constant: T,
        terms: Vec<(u32, T)>,
    },
}

impl<T: Real> TorusMap<T> {
    pub fn affine(matrix: IntMatrix, shift: Vec<T>) -> Result<Self> {
        if shift.len() != matrix.dim() {
            return Err(Error::InvalidConfig(format!(
                "shift length {} does not match matrix dimension {}",
                shift.len(),
                matrix.dim()
            )));
        }
        Ok(Self::Affine { matrix, shift })
    }

    pub fn circle_fourier(degree: i64, constant: T, terms: Vec<(u32, T)>) -> Result<Self> {
        if terms.iter().any(|&(freq, _)| freq == 0) {
            return Err(Error::InvalidConfig(
                "perturbation frequencies must be >= 1".into(),
            ));
        }
        Ok(Self::CircleFourier {
            degree,
            constant,
            terms,
        })
    }

    pub fn dimension(&self) -> usize {
        match self {
            Self::Affine { matrix, .. } => matrix.dim(),
            Self::CircleFourier { .. } => 1,
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, Self::Affine { .. })
    }

    /// The lift R -> R of a circle map.
    pub fn circle_lift(&self, x: T) -> T {
        match self {
            Self::CircleFourier {
                degree,
                constant,
                terms,
            } => {
                let two_pi = real::<T>(2.0) * pi::<T>();
                let mut y = real::<T>(*degree as f64) * x + *constant;
                for &(freq, amp) in terms {
                    y += amp * (two_pi * real::<T>(freq as f64) * x).sin();
                }
                y
            }
            Self::Affine { .. } => panic!("circle_lift on an affine map"),
        }
    }

    /// Derivative of the circle lift.
    pub fn circle_lift_derivative(&self, x: T) -> T {
        match self {
            Self::CircleFourier { degree, terms, .. } => {
                let two_pi = real::<T>(2.0) * pi::<T>();
                let mut y = real::<T>(*degree as f64);
                for &(freq, amp) in terms {
                    let omega = two_pi * real::<T>(freq as f64);
                    y += amp * omega * (omega * x).cos();
                }
                y
            }
            Self::Affine { .. } => panic!("circle_lift_derivative on an affine map"),
        }
    }

    /// Topological degree of a circle map, computed as lift(1) - lift(0).
    pub fn circle_degree(&self) -> i64 {
        match self {
            Self::CircleFourier { .. } => {
                let d = self.circle_lift(T::one()) - self.circle_lift(T::zero());
                as_f64(d).round() as i64
            }
            Self::Affine { matrix, .. } => {
                assert_eq!(matrix.dim(), 1, "circle_degree needs a 1-d map");
                matrix[(0, 0)]
            }
        }
    }
}

/// A fixed point m of a torus map together with the differential of the map
/// at m, the Lefschetz weight |det(dphi - I)|^{-1} and the simplicity flag.
#[derive(Debug, Clone)]
pub struct FixedPointRecord<T> {
    pub point: Vec<T>,
    pub differential: SquareMatrix<T>,
    pub weight: T,
    pub simple: bool,
}

/// Reduce a point to the fundamental domain [0, 1)^n.
pub fn wrap_to_fundamental<T: Real>(x: &[T]) -> Vec<T> {
    x.iter()
        .map(|&v| {
            let f = v.fract();
            let f = if f < T::zero() { f + T::one() } else { f };
            // fract of a negative number very close to an integer can land on 1.0
            if f >= T::one() {
                f - T::one()
            } else {
                f
            }
        })
        .collect()
}

/// Apply a torus map, reducing the result to [0, 1)^n.
pub fn apply_map<T: Real>(map: &TorusMap<T>, x: &[T]) -> Vec<T> {
    match map {
        TorusMap::Affine { matrix, shift } => {
            let n = matrix.dim();
            assert_eq!(x.len(), n);
            let y: Vec<T> = (0..n)
                .map(|i| {
                    let mut acc = shift[i];
                    for j in 0..n {
                        acc += real::<T>(matrix[(i, j)] as f64) * x[j];
                    }
                    acc
                })
                .collect();
            wrap_to_fundamental(&y)
        }
        TorusMap::CircleFourier { .. } => {
            assert_eq!(x.len(), 1);
            wrap_to_fundamental(&[map.circle_lift(x[0])])
        }
    }
}

/// Differential of the map at `x`: the constant matrix A for affine maps,
/// the 1x1 matrix [lift'(x)] for circle maps.
pub fn differential_at<T: Real>(map: &TorusMap<T>, x: &[T]) -> SquareMatrix<T> {
    match map {
        TorusMap::Affine { matrix, .. } => matrix.to_real(),
        TorusMap::CircleFourier { .. } => SquareMatrix::scalar(map.circle_lift_derivative(x[0])),
    }
}

/// Geodesic distance on the flat torus: the minimum over lattice translates
/// of the Euclidean distance. The lattice is a product, so the minimum is
/// taken per coordinate.
pub fn torus_distance<T: Real>(x: &[T], y: &[T]) -> T {
    assert_eq!(x.len(), y.len());
    let mut acc = T::zero();
    for (&a, &b) in x.iter().zip(y) {
        let d = (a - b).abs().fract();
        let d = d.min(T::one() - d);
        acc += d * d;
    }
    acc.sqrt()
}

/// Wrap the componentwise difference x - y to the nearest representative in
/// [-1/2, 1/2)^n.
pub fn wrap_difference<T: Real>(x: &[T], y: &[T]) -> Vec<T> {
    let half = real::<T>(0.5);
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a - b;
            let mut w = d - d.round();
            // d.round() ties away from zero; fold the +1/2 boundary down
            if w >= half {
                w -= T::one();
            }
            if w < -half {
                w += T::one();
            }
            w
        })
        .collect()
}

/// All fixed points of the map on the fundamental domain.
///
/// Affine maps are solved exactly: the congruence (A - I) x = -b (mod Z^n) is
/// diagonalized by a Smith form over the integers, which yields exactly
/// |det(A - I)| solutions when that determinant is nonzero. When
/// det(A - I) = 0 the congruence either has no solution (the map is a
/// fixed-point-free translation in some direction; an empty list is
/// returned), or a continuum of non-simple solutions, which is an error.
///
/// Circle maps are solved by bracketing sign changes of lift(x) - x - j on a
/// dense scan followed by bisection and Newton polishing.
pub fn find_fixed_points<T: Real>(
    map: &TorusMap<T>,
    geom: &TorusGeometry,
) -> Result<Vec<FixedPointRecord<T>>> {
    if map.dimension() != geom.dimension() {
        return Err(Error::InvalidConfig(format!(
            "map dimension {} does not match geometry dimension {}",
            map.dimension(),
            geom.dimension()
        )));
    }
    match map {
        TorusMap::Affine { matrix, shift } => affine_fixed_points(matrix, shift),
        TorusMap::CircleFourier { .. } => circle_fixed_points(map),
    }
}

fn affine_fixed_points<T: Real>(
    matrix: &IntMatrix,
    shift: &[T],
) -> Result<Vec<FixedPointRecord<T>>> {
    let n = matrix.dim();
    let m = matrix.sub(&IntMatrix::identity(n));
    let det = m.det();
    let SmithForm { u, d, w } = smith_diagonalize(&m);

    // Solve d y = -(u b) (mod Z^n) coordinatewise; x = w y.
    let c: Vec<T> = (0..n)
        .map(|i| {
            let mut acc = T::zero();
            for j in 0..n {
                acc += real::<T>(u[(i, j)] as f64) * shift[j];
            }
            acc
        })
        .collect();

    if det == 0 {
        // Rows with d_i = 0 require c_i to be an integer for solvability.
        let solvable = (0..n).all(|i| {
            if d[(i, i)] != 0 {
                return true;
            }
            let frac = (c[i] - c[i].round()).abs();
            frac < real(1e-9)
        });
        if solvable {
            return Err(Error::DegenerateMap);
        }
        return Ok(Vec::new());
    }

    let differential = matrix.to_real::<T>();
    let weight = T::one() / real::<T>(det.abs() as f64);
    let mut records = Vec::with_capacity(det.unsigned_abs() as usize);
    let moduli: Vec<i64> = (0..n).map(|i| d[(i, i)].abs()).collect();
    let mut counter = vec![0i64; n];
    loop {
        let y: Vec<T> = (0..n)
            .map(|i| (real::<T>(counter[i] as f64) - c[i]) / real::<T>(d[(i, i)] as f64))
            .collect();
        let x: Vec<T> = (0..n)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..n {
                    acc += real::<T>(w[(i, j)] as f64) * y[j];
                }
                acc
            })
            .collect();
        records.push(FixedPointRecord {
            point: wrap_to_fundamental(&x),
            differential: differential.clone(),
            weight,
            simple: true,
        });
        // odometer over the solution counts
        let mut axis = 0;
        loop {
            if axis == n {
                records.sort_by(|a, b| {
                    a.point
                        .iter()
                        .map(|&v| as_f64(v))
                        .partial_cmp(b.point.iter().map(|&v| as_f64(v)))
                        .unwrap()
                });
                return Ok(records);
            }
            counter[axis] += 1;
            if counter[axis] < moduli[axis] {
                break;
            }
            counter[axis] = 0;
            axis += 1;
        }
    }
}

fn circle_fixed_points<T: Real>(map: &TorusMap<T>) -> Result<Vec<FixedPointRecord<T>>> {
    let scan = CIRCLE_SCAN_POINTS;
    // h(x) = lift(x) - x; fixed points are solutions of h(x) = j, j integer.
    let h = |x: T| map.circle_lift(x) - x;
    let xs: Vec<T> = (0..=scan)
        .map(|i| real::<T>(i as f64 / scan as f64))
        .collect();
    let hs: Vec<T> = xs.iter().map(|&x| h(x)).collect();
    let (hmin, hmax) = hs
        .iter()
        .fold((T::infinity(), -T::infinity()), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });

    let mut roots: Vec<T> = Vec::new();
    let push_root = |roots: &mut Vec<T>, x: T| {
        let x = wrap_to_fundamental(&[x])[0];
        let dup = roots.iter().any(|&r| {
            let d = (r - x).abs();
            d.min(T::one() - d) < real(1e-9)
        });
        if !dup {
            roots.push(x);
        }
    };

    let j_lo = as_f64(hmin).floor() as i64;
    let j_hi = as_f64(hmax).ceil() as i64;
    for j in j_lo..=j_hi {
        let jt = real::<T>(j as f64);
        for i in 0..scan {
            let ga = hs[i] - jt;
            let gb = hs[i + 1] - jt;
            if ga == T::zero() {
                push_root(&mut roots, xs[i]);
                continue;
            }
            if ga * gb < T::zero() {
                let root = refine_circle_root(map, xs[i], xs[i + 1], jt);
                push_root(&mut roots, root);
            }
        }
        if hs[scan] - jt == T::zero() {
            push_root(&mut roots, xs[scan]);
        }
    }

    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let tol = real::<T>(SIMPLE_FIXED_POINT_TOL);
    let mut records = Vec::with_capacity(roots.len());
    for x in roots {
        let slope = map.circle_lift_derivative(x);
        let det = slope - T::one();
        if det.abs() < tol {
            return Err(Error::NonSimpleFixedPoint {
                location: vec![as_f64(x)],
                det_abs: as_f64(det.abs()),
                tolerance: SIMPLE_FIXED_POINT_TOL,
            });
        }
        records.push(FixedPointRecord {
            point: vec![x],
            differential: SquareMatrix::scalar(slope),
            weight: T::one() / det.abs(),
            simple: true,
        });
    }
    Ok(records)
}

/// Bisection then Newton on g(x) = lift(x) - x - j.
fn refine_circle_root<T: Real>(map: &TorusMap<T>, mut lo: T, mut hi: T, j: T) -> T {
    let g = |x: T| map.circle_lift(x) - x - j;
    let mut glo = g(lo);
    for _ in 0..60 {
        let mid = (lo + hi) * real(0.5);
        let gm = g(mid);
        if gm == T::zero() {
            return mid;
        }
        if (gm > T::zero()) == (glo > T::zero()) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
        if hi - lo < real(1e-6) {
            break;
        }
    }
    let mut x = (lo + hi) * real(0.5);
    for _ in 0..50 {
        let gx = g(x);
        let dg = map.circle_lift_derivative(x) - T::one();
        if dg == T::zero() {
            break;
        }
        let step = gx / dg;
        x -= step;
        if step.abs() < real(1e-14) {
            break;
        }
    }
    x
}

/// The uniform product grid {k/N}^n with equal weights N^{-n}: the periodic
/// trapezoid rule, which is spectrally accurate for smooth periodic
/// integrands.
#[derive(Debug, Clone)]
pub struct QuadratureGrid<T> {
    dimension: usize,
    points_per_axis: usize,
    _marker: std::marker::PhantomData<T>,
}

impl<T: Real> QuadratureGrid<T> {
    pub fn new(dimension: usize, points_per_axis: usize) -> Self {
        assert!(dimension >= 1 && points_per_axis >= 2);
        Self {
            dimension,
            points_per_axis,
            _marker: std::marker::PhantomData,
        }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dimension as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Equal weight of every node.
    pub fn weight(&self) -> T {
        T::one() / real::<T>(self.len() as f64)
    }

    /// Node coordinates for a flat index.
    pub fn node(&self, mut index: usize) -> Vec<T> {
        let n = real::<T>(self.points_per_axis as f64);
        let mut out = vec![T::zero(); self.dimension];
        for slot in out.iter_mut() {
            let k = index % self.points_per_axis;
            index /= self.points_per_axis;
            *slot = real::<T>(k as f64) / n;
        }
        out
    }

    /// Integrate a function over the torus. Nodes are evaluated in parallel
    /// but reduced by pairwise summation in index order, so the result does
    /// not depend on the thread count.
    pub fn integrate<F>(&self, f: F) -> T
    where
        F: Fn(&[T]) -> T + Sync,
    {
        let values: Vec<T> = (0..self.len())
            .into_par_iter()
            .map(|i| f(&self.node(i)))
            .collect();
        pairwise_sum(&values) * self.weight()
    }
}
