//! Exact heat kernels on flat models: the periodized Gaussian (theta) kernel
//! on the torus, Fourier-mode supertraces of twisted heat operators for
//! affine maps, and constant-coefficient model kernels obtained as inverse
//! Fourier transforms of exp(-q(xi)) for an elliptic symbol q.

use crate::error::{Error, Result};
use crate::geometry::{wrap_difference, TorusGeometry, TorusMap};
use crate::linalg::{IntMatrix, SquareMatrix};
use crate::numeric::{as_f64, pi, real, Real};
use std::sync::Arc;

/// Relative tail budget for the theta lattice truncation.
pub const THETA_TAIL_LIMIT: f64 = 1e-12;

/// Edge budget for exp(-q) on the frequency box of a model kernel.
pub const FREQUENCY_EDGE_LIMIT: f64 = 1e-14;

/// Minimum eigenvalue of q on the unit sphere required for ellipticity.
pub const ELLIPTICITY_FLOOR: f64 = 1e-8;

/// Deformation parameter t together with the half-order s and the derived
/// heat time tau = t^{2s}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatTime<T> {
    t: T,
    s: u32,
    tau: T,
}

impl<T: Real> HeatTime<T> {
    pub fn new(t: T, s: u32) -> Result<Self> {
        if !(t > T::zero() && t <= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "deformation parameter t = {t} outside (0, 1]"
            )));
        }
        if s == 0 {
            return Err(Error::InvalidConfig("half-order s must be >= 1".into()));
        }
        Ok(Self {
            t,
            s,
            tau: t.powi(2 * s as i32),
        })
    }

    /// Heat time specified directly as tau (with s = 1, t = sqrt(tau)).
    pub fn from_tau(tau: T) -> Result<Self> {
        Self::new(tau.sqrt(), 1)
    }

    pub fn t(&self) -> T {
        self.t
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn tau(&self) -> T {
        self.tau
    }
}

/// The periodized Gaussian on the flat torus:
/// k_tau(x, y) = sum_m (4 pi tau)^{-n/2} exp(-|x - y + m|^2 / (4 tau))
/// truncated to lattice vectors with |x - y + m| <= truncation_radius.
#[derive(Debug, Clone)]
pub struct ThetaKernel<T> {
    geom: TorusGeometry,
    tau: T,
    truncation_radius: T,
}

impl<T: Real> ThetaKernel<T> {
    /// Kernel with the default truncation radius 14 sqrt(tau) + sqrt(n),
    /// which keeps the lattice tail below `THETA_TAIL_LIMIT` of the value
    /// for every heat time.
    pub fn new(geom: &TorusGeometry, tau: T) -> Result<Self> {
        let n = geom.dimension() as f64;
        let radius = real::<T>(14.0) * tau.sqrt() + real(n.sqrt());
        Self::with_radius(geom, tau, radius)
    }

    pub fn with_radius(geom: &TorusGeometry, tau: T, truncation_radius: T) -> Result<Self> {
        if geom.dimension() > 3 {
            return Err(Error::InvalidConfig(
                "theta kernels are implemented for n <= 3".into(),
            ));
        }
        if tau <= T::zero() {
            return Err(Error::InvalidConfig(
                "heat time tau must be positive".into(),
            ));
        }
        Ok(Self {
            geom: geom.clone(),
            tau,
            truncation_radius,
        })
    }

    pub fn tau(&self) -> T {
        self.tau
    }

    pub fn truncation_radius(&self) -> T {
        self.truncation_radius
    }

    /// Kernel value with the truncation-tail check: the lattice points
    /// excluded by the radius but inside the scan box are summed exactly,
    /// and everything outside the scan box is dominated by the integral
    /// test (cells around far lattice points are disjoint, so the sum is at
    /// most the Gaussian integral beyond the box less half a cell
    /// diagonal).
    pub fn eval(&self, x: &[T], y: &[T]) -> Result<T> {
        let (value, tail) = self.eval_with_tail(x, y);
        if tail > real::<T>(THETA_TAIL_LIMIT) * value {
            return Err(Error::TruncationTooSmall {
                radius: as_f64(self.truncation_radius),
                tail_bound: as_f64(tail),
                value: as_f64(value),
                limit: THETA_TAIL_LIMIT,
            });
        }
        Ok(value)
    }

    /// Kernel value and the tail bound together.
    pub fn eval_with_tail(&self, x: &[T], y: &[T]) -> (T, T) {
        let n = self.geom.dimension();
        debug_assert!(x.len() == n && y.len() == n);
        let delta = wrap_difference(x, y);
        let tau = self.tau;
        let prefactor = (real::<T>(4.0) * pi::<T>() * tau).powf(-real::<T>(n as f64 / 2.0));
        let r2 = self.truncation_radius * self.truncation_radius;
        let reach = as_f64(self.truncation_radius).ceil() as i64 + 1;

        let mut sum = T::zero();
        let mut excluded = T::zero();
        let mut m = vec![-reach; n];
        'outer: loop {
            let mut dist2 = T::zero();
            for i in 0..n {
                let d = delta[i] + real::<T>(m[i] as f64);
                dist2 += d * d;
            }
            let term = (-dist2 / (real::<T>(4.0) * tau)).exp();
            if dist2 <= r2 {
                sum += term;
            } else {
                excluded += term;
            }
            let mut axis = 0;
            loop {
                m[axis] += 1;
                if m[axis] <= reach {
                    break;
                }
                m[axis] = -reach;
                axis += 1;
                if axis == n {
                    break 'outer;
                }
            }
        }
        let tail = prefactor * (excluded + self.beyond_box_bound(reach));
        (prefactor * sum, tail)
    }

    /// Integral-test bound (without the kernel prefactor) on the lattice
    /// sum outside the scan box |m|_inf <= reach.
    fn beyond_box_bound(&self, reach: i64) -> T {
        let n = self.geom.dimension();
        let tau = self.tau;
        let sqrt_n = real::<T>((n as f64).sqrt());
        // outside the box every summand sits at distance > reach + 1/2;
        // shifting by a half cell diagonal twice gives the integral cutoff
        let a = real::<T>(reach as f64 + 0.5) - sqrt_n;
        if a <= real(0.1) {
            return T::infinity();
        }
        let e = (-a * a / (real::<T>(4.0) * tau)).exp();
        let two_tau = real::<T>(2.0) * tau;
        let i0 = two_tau / a * e;
        let i1 = two_tau * e;
        let i2 = two_tau * (a + two_tau / a) * e;
        let c = sqrt_n * real::<T>(0.5);
        match n {
            1 => real::<T>(2.0) * i0,
            2 => real::<T>(2.0) * pi::<T>() * (i1 + c * i0),
            3 => real::<T>(4.0) * pi::<T>() * (i2 + real::<T>(2.0) * c * i1 + c * c * i0),
            _ => unreachable!("dimension checked at construction"),
        }
    }

    /// Kernel value without the tail check; used in grid sweeps after a
    /// single `validate` call.
    pub fn eval_unchecked(&self, x: &[T], y: &[T]) -> T {
        self.eval_with_tail(x, y).0
    }

    /// Check once that the truncation meets the tail budget at the far
    /// corner of the fundamental cell, where the kernel value is smallest
    /// and the relative budget is tightest. Sweeps that call
    /// `eval_unchecked` afterwards rely on the default radius keeping tens
    /// of e-folds of margin at every other point.
    pub fn validate(&self) -> Result<()> {
        let n = self.geom.dimension();
        let corner = vec![real::<T>(0.5); n];
        let origin = vec![T::zero(); n];
        self.eval(&corner, &origin).map(|_| ())
    }
}

/// Fourier-side evaluation of the theta kernel,
/// sum_k exp(-4 pi^2 |k|^2 tau) cos(2 pi k . (x - y)),
/// an independent route to the same function via Poisson summation.
pub fn theta_fourier_sum<T: Real>(n: usize, tau: T, x: &[T], y: &[T]) -> T {
    let four_pi_sq = real::<T>(4.0) * pi::<T>() * pi::<T>();
    // include every mode with exp(-4 pi^2 |k|^2 tau) above 1e-18
    let cutoff = (real::<T>(41.5) / (four_pi_sq * tau)).sqrt();
    let reach = as_f64(cutoff).ceil() as i64;
    let delta: Vec<T> = x.iter().zip(y).map(|(&a, &b)| a - b).collect();
    let two_pi = real::<T>(2.0) * pi::<T>();

    let mut sum = T::zero();
    let mut k = vec![-reach; n];
    'outer: loop {
        let mut k2 = T::zero();
        let mut phase = T::zero();
        for i in 0..n {
            let kf = real::<T>(k[i] as f64);
            k2 += kf * kf;
            phase += kf * delta[i];
        }
        sum += (-four_pi_sq * k2 * tau).exp() * (two_pi * phase).cos();
        let mut axis = 0;
        loop {
            k[axis] += 1;
            if k[axis] <= reach {
                break;
            }
            k[axis] = -reach;
            axis += 1;
            if axis == n {
                break 'outer;
            }
        }
    }
    sum
}

/// Heat multiplier of the flat de Rham Laplacian on the mode k.
pub fn heat_multiplier<T: Real>(k: &[i64], tau: T) -> T {
    let four_pi_sq = real::<T>(4.0) * pi::<T>() * pi::<T>();
    let k2 = k.iter().map(|&v| (v * v) as f64).sum::<f64>();
    (-four_pi_sq * real::<T>(k2) * tau).exp()
}

/// Apply the spectral heat operator to a Fourier-coefficient vector in
/// place: coefficient of mode k is damped by exp(-4 pi^2 |k|^2 tau).
pub fn spectral_heat_apply<T: Real>(coeffs: &mut [(Vec<i64>, T)], tau: T) {
    for (k, c) in coeffs.iter_mut() {
        *c *= heat_multiplier(k, tau);
    }
}

/// Supertrace of the twisted heat operator for an affine map, evaluated in
/// the Fourier-mode basis: modes k fixed by A^T contribute
/// exp(2 pi i k . b) det(I - A^T) exp(-4 pi^2 |k|^2 tau); the mode box is
/// symmetric, so the imaginary parts cancel and the cosine suffices.
///
/// When det(A - I) != 0 only k = 0 survives and the value is det(I - A),
/// independent of tau. When det(A - I) = 0 the determinant factor kills
/// every mode.
pub fn spectral_supertrace<T: Real>(map: &TorusMap<T>, ht: &HeatTime<T>) -> Result<T> {
    let TorusMap::Affine { matrix, shift } = map else {
        return Err(Error::InvalidConfig(
            "spectral supertrace needs an affine map".into(),
        ));
    };
    let n = matrix.dim();
    let det_factor = {
        let i_minus_a = IntMatrix::identity(n).sub(matrix);
        real::<T>(i_minus_a.det() as f64)
    };
    if det_factor == T::zero() {
        return Ok(T::zero());
    }
    let at = matrix.transpose();
    let cutoff = 16i64;
    let two_pi = real::<T>(2.0) * pi::<T>();
    let mut sum = T::zero();
    let mut k = vec![-cutoff; n];
    'outer: loop {
        if at.matvec(&k) == k {
            let phase: T = k
                .iter()
                .zip(shift)
                .map(|(&ki, &bi)| real::<T>(ki as f64) * bi)
                .fold(T::zero(), |a, b| a + b);
            sum += (two_pi * phase).cos() * heat_multiplier(&k, ht.tau());
        }
        let mut axis = 0;
        loop {
            k[axis] += 1;
            if k[axis] <= cutoff {
                break;
            }
            k[axis] = -cutoff;
            axis += 1;
            if axis == n {
                break 'outer;
            }
        }
    }
    Ok(det_factor * sum)
}

/// One term a_alpha xi^alpha of an elliptic symbol.
#[derive(Debug, Clone)]
pub struct SymbolTerm<T> {
    pub alpha: Vec<u32>,
    pub coefficient: SquareMatrix<T>,
}

/// A constant-coefficient elliptic symbol q(xi) = sum_alpha a_alpha xi^alpha
/// with |alpha| = 2s, every a_alpha symmetric positive definite, and q
/// bounded below on the unit sphere.
#[derive(Debug, Clone)]
pub struct EllipticSymbol<T> {
    dimension: usize,
    half_order: u32,
    terms: Vec<SymbolTerm<T>>,
    rank: usize,
    sphere_floor: T,
}

impl<T: Real> EllipticSymbol<T> {
    pub fn new(dimension: usize, half_order: u32, terms: Vec<SymbolTerm<T>>) -> Result<Self> {
        if dimension == 0 || dimension > 3 {
            return Err(Error::InvalidConfig(
                "model symbols are implemented for 1 <= n <= 3".into(),
            ));
        }
        if half_order == 0 {
            return Err(Error::InvalidConfig("half-order s must be >= 1".into()));
        }
        if terms.is_empty() {
            return Err(Error::InvalidConfig(
                "symbol needs at least one term".into(),
            ));
        }
        let rank = terms[0].coefficient.dim();
        let order = 2 * half_order;
        for term in &terms {
            if term.alpha.len() != dimension {
                return Err(Error::InvalidConfig(format!(
                    "multi-index {:?} has wrong length",
                    term.alpha
                )));
            }
            if term.alpha.iter().sum::<u32>() != order {
                return Err(Error::InvalidConfig(format!(
                    "multi-index {:?} does not have total order {order}",
                    term.alpha
                )));
            }
            if term.coefficient.dim() != rank {
                return Err(Error::InvalidConfig(
                    "coefficient matrices must share one rank".into(),
                ));
            }
            let scale = T::one().max(term.coefficient.max_abs());
            if !term.coefficient.is_symmetric(real::<T>(1e-10) * scale) {
                return Err(Error::InvalidConfig(format!(
                    "coefficient of {:?} is not symmetric",
                    term.alpha
                )));
            }
            let (eig, _) = term.coefficient.symmetric_eigen();
            let min = eig.iter().fold(T::infinity(), |a, &b| a.min(b));
            if min <= real(1e-12) {
                return Err(Error::InvalidConfig(format!(
                    "coefficient of {:?} is not positive definite (min eigenvalue {min})",
                    term.alpha
                )));
            }
        }

        let mut symbol = Self {
            dimension,
            half_order,
            terms,
            rank,
            sphere_floor: T::zero(),
        };
        let (floor, direction) = symbol.sphere_minimum();
        if floor < real(ELLIPTICITY_FLOOR) {
            return Err(Error::EllipticityFailure {
                min_eigenvalue: as_f64(floor),
                direction: direction.iter().map(|&v| as_f64(v)).collect(),
            });
        }
        symbol.sphere_floor = floor;
        Ok(symbol)
    }

    /// Scalar symbol a xi^(2s) in one term per axis: sum_i a xi_i^{2s}.
    pub fn isotropic(dimension: usize, half_order: u32, a: SquareMatrix<T>) -> Result<Self> {
        let order = 2 * half_order;
        let terms = (0..dimension)
            .map(|axis| {
                let mut alpha = vec![0u32; dimension];
                alpha[axis] = order;
                SymbolTerm {
                    alpha,
                    coefficient: a.clone(),
                }
            })
            .collect();
        Self::new(dimension, half_order, terms)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn half_order(&self) -> u32 {
        self.half_order
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn terms(&self) -> &[SymbolTerm<T>] {
        &self.terms
    }

    /// q(xi) as a symmetric matrix.
    pub fn eval(&self, xi: &[T]) -> SquareMatrix<T> {
        let mut acc = SquareMatrix::zeros(self.rank);
        for term in &self.terms {
            let mut monomial = T::one();
            for (i, &power) in term.alpha.iter().enumerate() {
                monomial *= xi[i].powi(power as i32);
            }
            acc = acc.add(&term.coefficient.scale(monomial));
        }
        acc
    }

    /// Minimum eigenvalue of q over a deterministic 1024-point sample of the
    /// unit sphere (the sample contains the coordinate axes).
    fn sphere_minimum(&self) -> (T, Vec<T>) {
        let dirs = sphere_sample::<T>(self.dimension);
        let mut best = T::infinity();
        let mut arg = vec![T::zero(); self.dimension];
        for dir in dirs {
            let q = self.eval(&dir);
            let (eig, _) = q.symmetric_eigen();
            let min = eig.iter().fold(T::infinity(), |a, &b| a.min(b));
            if min < best {
                best = min;
                arg = dir;
            }
        }
        (best, arg)
    }

    /// Half-width of the frequency box [-L, L]^n sized so that
    /// q(xi) >= 33 on the boundary, i.e. exp(-q) below the edge budget.
    pub fn default_box_half_width(&self) -> T {
        (real::<T>(33.0) / self.sphere_floor)
            .powf(T::one() / real::<T>(2.0 * self.half_order as f64))
    }
}

/// Deterministic unit-sphere sample containing the coordinate axes.
fn sphere_sample<T: Real>(dimension: usize) -> Vec<Vec<T>> {
    match dimension {
        1 => vec![vec![T::one()], vec![-T::one()]],
        2 => (0..1024)
            .map(|j| {
                let angle = 2.0 * std::f64::consts::PI * j as f64 / 1024.0;
                vec![real(angle.cos()), real(angle.sin())]
            })
            .collect(),
        3 => {
            let mut out = Vec::with_capacity(1024);
            for i in 0..32 {
                let theta = std::f64::consts::PI * i as f64 / 31.0;
                for j in 0..32 {
                    let phi = 2.0 * std::f64::consts::PI * j as f64 / 32.0;
                    out.push(vec![
                        real(theta.sin() * phi.cos()),
                        real(theta.sin() * phi.sin()),
                        real(theta.cos()),
                    ]);
                }
            }
            out
        }
        _ => unreachable!("dimension checked at construction"),
    }
}

/// Options for the inverse-transform discretization.
#[derive(Debug, Clone)]
pub struct ModelKernelOptions<T> {
    /// Override for the frequency box half-width L.
    pub box_half_width: Option<T>,
    /// Override for the number of samples per axis.
    pub samples_per_axis: Option<usize>,
}

impl<T> Default for ModelKernelOptions<T> {
    fn default() -> Self {
        Self {
            box_half_width: None,
            samples_per_axis: None,
        }
    }
}

/// Precomputed discretization of k_0(X) = (2 pi)^{-n} int exp(-q(xi))
/// exp(i X . xi) d xi on a truncated frequency box. The symbol is even, so
/// the cosine transform over a symmetric midpoint grid is used and the
/// result is real and symmetric.
pub struct ModelKernelEvaluator<T> {
    dimension: usize,
    rank: usize,
    half_width: T,
    samples_per_axis: usize,
    axis_nodes: Vec<T>,
    exps: Vec<SquareMatrix<T>>,
    cell_weight: T,
}

impl<T> std::fmt::Debug for ModelKernelEvaluator<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelKernelEvaluator")
            .field("dimension", &self.dimension)
            .field("rank", &self.rank)
            .field("samples_per_axis", &self.samples_per_axis)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ModelKernelEvaluator<T> {
    pub fn new(symbol: &EllipticSymbol<T>) -> Result<Self> {
        Self::with_options(symbol, &ModelKernelOptions::default())
    }

    pub fn with_options(
        symbol: &EllipticSymbol<T>,
        options: &ModelKernelOptions<T>,
    ) -> Result<Self> {
        let n = symbol.dimension();
        let half_width = options
            .box_half_width
            .unwrap_or_else(|| symbol.default_box_half_width());
        let samples = options.samples_per_axis.unwrap_or(match n {
            1 => 4096,
            2 => 512,
            _ => 64,
        });

        // Edge check: q must have decayed below the budget on the box faces.
        let mut edge_min = T::infinity();
        for face_axis in 0..n {
            for side in [-T::one(), T::one()] {
                let probes: usize = if n == 1 { 1 } else { 33 };
                for p in 0..probes.pow((n - 1) as u32) {
                    let mut xi = vec![T::zero(); n];
                    xi[face_axis] = side * half_width;
                    let mut rem = p;
                    for axis in (0..n).filter(|&a| a != face_axis) {
                        let frac = (rem % probes) as f64 / (probes - 1).max(1) as f64;
                        rem /= probes;
                        xi[axis] = (real::<T>(2.0) * real::<T>(frac) - T::one()) * half_width;
                    }
                    let (eig, _) = symbol.eval(&xi).symmetric_eigen();
                    let min = eig.iter().fold(T::infinity(), |a, &b| a.min(b));
                    edge_min = edge_min.min(min);
                }
            }
        }
        let edge_value = (-edge_min).exp();
        if edge_value > real(FREQUENCY_EDGE_LIMIT) {
            return Err(Error::FrequencyBoxTooSmall {
                half_width: as_f64(half_width),
                edge_value: as_f64(edge_value),
                limit: FREQUENCY_EDGE_LIMIT,
            });
        }

        let step = real::<T>(2.0) * half_width / real::<T>(samples as f64);
        let axis_nodes: Vec<T> = (0..samples)
            .map(|i| -half_width + (real::<T>(i as f64) + real(0.5)) * step)
            .collect();
        let total = samples.pow(n as u32);
        let mut exps = Vec::with_capacity(total);
        let mut idx = vec![0usize; n];
        let mut xi = vec![T::zero(); n];
        for _ in 0..total {
            for (axis, &i) in idx.iter().enumerate() {
                xi[axis] = axis_nodes[i];
            }
            exps.push(symbol.eval(&xi).symmetric_map(|lambda| (-lambda).exp()));
            let mut axis = 0;
            while axis < n {
                idx[axis] += 1;
                if idx[axis] < samples {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
        let two_pi = real::<T>(2.0) * pi::<T>();
        let cell_weight = step.powi(n as i32) / two_pi.powi(n as i32);
        Ok(Self {
            dimension: n,
            rank: symbol.rank(),
            half_width,
            samples_per_axis: samples,
            axis_nodes,
            exps,
            cell_weight,
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// k_0 at the point X, by Kahan-compensated accumulation of the cosine
    /// transform over the frequency grid.
    pub fn eval(&self, x: &[T]) -> SquareMatrix<T> {
        debug_assert_eq!(x.len(), self.dimension);
        let n = self.dimension;
        let r = self.rank;
        let mut sum = vec![T::zero(); r * r];
        let mut comp = vec![T::zero(); r * r];
        let samples = self.samples_per_axis;
        let mut idx = vec![0usize; n];
        for exp_q in &self.exps {
            let mut phase = T::zero();
            for (axis, &i) in idx.iter().enumerate() {
                phase += x[axis] * self.axis_nodes[i];
            }
            let c = phase.cos();
            for a in 0..r {
                for b in 0..r {
                    let term = exp_q[(a, b)] * c - comp[a * r + b];
                    let next = sum[a * r + b] + term;
                    comp[a * r + b] = (next - sum[a * r + b]) - term;
                    sum[a * r + b] = next;
                }
            }
            let mut axis = 0;
            while axis < n {
                idx[axis] += 1;
                if idx[axis] < samples {
                    break;
                }
                idx[axis] = 0;
                axis += 1;
            }
        }
        SquareMatrix::from_fn(r, |a, b| sum[a * r + b] * self.cell_weight)
    }

    /// Integral of k_0 over R^n, by a trapezoid sum on the grid dual to the
    /// frequency box (spacing pi / L) over expanding cubical shells; stops
    /// once three consecutive shells contribute below 1e-12 each, which
    /// keeps the declared tail below 1e-10 for the superexponentially
    /// decaying kernels in scope. Must come out as the identity matrix.
    pub fn total_integral(&self) -> Result<SquareMatrix<T>> {
        let n = self.dimension;
        let r = self.rank;
        let h = pi::<T>() / self.half_width;
        let cell = h.powi(n as i32);
        let mut acc = SquareMatrix::zeros(r);
        let mut quiet_shells = 0usize;
        let max_shell = 4096usize;
        for shell in 0..max_shell {
            let points = shell_points(n, shell as i64);
            let contributions: Vec<SquareMatrix<T>> = {
                use rayon::prelude::*;
                points
                    .par_iter()
                    .map(|j| {
                        let x: Vec<T> = j.iter().map(|&v| real::<T>(v as f64) * h).collect();
                        self.eval(&x)
                    })
                    .collect()
            };
            let mut shell_sum = SquareMatrix::zeros(r);
            for c in &contributions {
                shell_sum = shell_sum.add(c);
            }
            shell_sum = shell_sum.scale(cell);
            acc = acc.add(&shell_sum);
            let size = shell_sum.max_abs();
            if size < real::<T>(1e-12) * T::one().max(acc.max_abs()) {
                quiet_shells += 1;
                if quiet_shells >= 3 {
                    return Ok(acc);
                }
            } else {
                quiet_shells = 0;
            }
        }
        Err(Error::QuadratureStalled {
            what: "model kernel total integral".into(),
            increment: f64::NAN,
        })
    }
}

/// Lattice points with sup-norm exactly `radius`.
fn shell_points(n: usize, radius: i64) -> Vec<Vec<i64>> {
    let mut out = Vec::new();
    let mut point = vec![-radius; n];
    'outer: loop {
        if point.iter().any(|&v| v.abs() == radius) {
            out.push(point.clone());
        }
        let mut axis = 0;
        loop {
            point[axis] += 1;
            if point[axis] <= radius {
                break;
            }
            point[axis] = -radius;
            axis += 1;
            if axis == n {
                break 'outer;
            }
        }
    }
    out
}

/// One-shot model kernel value; builds the evaluator internally. Use
/// `ModelKernelEvaluator` directly when evaluating at many points.
pub fn model_kernel<T: Real>(symbol: &EllipticSymbol<T>, x: &[T]) -> Result<SquareMatrix<T>> {
    Ok(ModelKernelEvaluator::new(symbol)?.eval(x))
}

/// Total integral of the model kernel; must equal the identity.
pub fn model_kernel_total_integral<T: Real>(symbol: &EllipticSymbol<T>) -> Result<SquareMatrix<T>> {
    ModelKernelEvaluator::new(symbol)?.total_integral()
}

/// A coefficient field: a matrix-valued function of the base point.
pub type CoefficientFn<T> = Arc<dyn Fn(&[T]) -> SquareMatrix<T> + Send + Sync>;

/// A position-dependent family of symbol coefficients a_alpha(v).
#[derive(Clone)]
pub struct SymbolField<T> {
    pub dimension: usize,
    pub half_order: u32,
    pub terms: Vec<(Vec<u32>, CoefficientFn<T>)>,
}

impl<T: Real> SymbolField<T> {
    /// Freeze the coefficients at the point `v`.
    pub fn freeze(&self, v: &[T]) -> Result<EllipticSymbol<T>> {
        let terms = self
            .terms
            .iter()
            .map(|(alpha, f)| SymbolTerm {
                alpha: alpha.clone(),
                coefficient: f(v),
            })
            .collect();
        EllipticSymbol::new(self.dimension, self.half_order, terms)
    }
}

/// Kernel of the rescaled operator in frozen-coefficient (pure principal
/// symbol) mode: coefficients are evaluated at m + t X and the model kernel
/// of the frozen symbol is evaluated at X. At t = 0 this is the model
/// kernel with coefficients frozen at m, the boundary value of the family.
pub fn rescaled_symbol_kernel<T: Real>(
    field: &SymbolField<T>,
    m: &[T],
    t: T,
    x: &[T],
) -> Result<SquareMatrix<T>> {
    if !(t >= T::zero() && t <= T::one()) {
        return Err(Error::InvalidConfig(format!(
            "deformation parameter t = {t} outside [0, 1]"
        )));
    }
    let frozen_at: Vec<T> = m.iter().zip(x).map(|(&mi, &xi)| mi + t * xi).collect();
    let symbol = field.freeze(&frozen_at)?;
    model_kernel(&symbol, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::QuadratureGrid;

    fn s1() -> TorusGeometry {
        TorusGeometry::circle(64).unwrap()
    }

    #[test]
    fn heat_time_stores_tau_exactly() {
        let ht = HeatTime::new(0.3f64, 2).unwrap();
        assert_eq!(ht.tau(), 0.3f64.powi(4));
        assert!(HeatTime::new(0.0f64, 1).is_err());
        assert!(HeatTime::new(1.5f64, 1).is_err());
    }

    #[test]
    fn theta_large_tau_is_flat() {
        // Only the k = 0 Fourier mode survives at tau = 10.
        let k = ThetaKernel::new(&s1(), 10.0f64).unwrap();
        for (x, y) in [(0.0, 0.0), (0.3, 0.7), (0.5, 0.0)] {
            let v = k.eval(&[x], &[y]).unwrap();
            assert!((v - 1.0).abs() < 1e-10, "theta({x},{y}) = {v}");
        }
    }

    #[test]
    fn theta_mass_is_one_on_grid() {
        let geom = TorusGeometry::circle(256).unwrap();
        let k = ThetaKernel::new(&geom, 0.01f64).unwrap();
        let grid = QuadratureGrid::<f64>::new(1, 256);
        let mass = grid.integrate(|y| k.eval_unchecked(&[0.3], y));
        assert!((mass - 1.0).abs() < 1e-8, "mass = {mass}");
    }

    #[test]
    fn theta_diagonal_matches_fourier_side() {
        let k = ThetaKernel::new(&s1(), 0.02f64).unwrap();
        let lattice = k.eval(&[0.4], &[0.4]).unwrap();
        let fourier = theta_fourier_sum(1, 0.02f64, &[0.4], &[0.4]);
        assert!((lattice - fourier).abs() < 1e-10);
    }

    #[test]
    fn theta_symmetry_and_positivity() {
        let geom = TorusGeometry::new(2, 16).unwrap();
        let k = ThetaKernel::new(&geom, 0.05f64).unwrap();
        let a = [0.12, 0.77];
        let b = [0.9, 0.31];
        let ab = k.eval(&a, &b).unwrap();
        let ba = k.eval(&b, &a).unwrap();
        assert!(ab > 0.0);
        assert!((ab - ba).abs() < 1e-14);
    }

    #[test]
    fn theta_small_radius_trips_tail_check() {
        let k = ThetaKernel::with_radius(&s1(), 0.25f64, 1.0).unwrap();
        let err = k.eval(&[0.0], &[0.5]).unwrap_err();
        assert!(matches!(err, Error::TruncationTooSmall { .. }));
    }

    #[test]
    fn spectral_supertrace_of_cat_map() {
        let map = TorusMap::affine(
            IntMatrix::from_rows(&[vec![2, 1], vec![1, 1]]),
            vec![0.0f64, 0.0],
        )
        .unwrap();
        for tau in [1e-3, 0.1, 0.7] {
            let ht = HeatTime::from_tau(tau).unwrap();
            let v = spectral_supertrace(&map, &ht).unwrap();
            assert!((v - -1.0).abs() < 1e-14, "tau = {tau}: {v}");
        }
    }

    #[test]
    fn spectral_supertrace_identity_and_tripling() {
        let id = TorusMap::affine(IntMatrix::identity(2), vec![0.2f64, 0.9]).unwrap();
        let ht = HeatTime::from_tau(0.05f64).unwrap();
        assert_eq!(spectral_supertrace(&id, &ht).unwrap(), 0.0);

        let tripling = TorusMap::affine(IntMatrix::from_rows(&[vec![3]]), vec![0.0f64]).unwrap();
        let v = spectral_supertrace(&tripling, &ht).unwrap();
        assert!((v - -2.0).abs() < 1e-14);
    }

    #[test]
    fn gaussian_model_kernel_at_zero() {
        // (2 pi)^{-1} int exp(-xi^2) d xi = (4 pi)^{-1/2}
        let sym = EllipticSymbol::isotropic(1, 1, SquareMatrix::scalar(1.0f64)).unwrap();
        let k0 = model_kernel(&sym, &[0.0]).unwrap();
        let expected = (4.0 * std::f64::consts::PI).powf(-0.5);
        assert!((k0[(0, 0)] - expected).abs() < 1e-12, "{}", k0[(0, 0)]);
    }

    #[test]
    fn gaussian_model_kernel_matches_closed_form_off_zero() {
        let sym = EllipticSymbol::isotropic(1, 1, SquareMatrix::scalar(1.0f64)).unwrap();
        let eval = ModelKernelEvaluator::new(&sym).unwrap();
        for x in [0.5, 1.0, 2.5] {
            let v = eval.eval(&[x])[(0, 0)];
            let expected = (4.0 * std::f64::consts::PI).powf(-0.5) * (-x * x / 4.0).exp();
            assert!((v - expected).abs() < 1e-12, "x = {x}: {v} vs {expected}");
        }
    }

    #[test]
    fn diagonal_coefficient_gives_per_eigenvalue_gaussians() {
        let a = SquareMatrix::from_rows(&[vec![1.0f64, 0.0], vec![0.0, 2.0]]);
        let sym = EllipticSymbol::isotropic(1, 1, a).unwrap();
        let k0 = model_kernel(&sym, &[0.0]).unwrap();
        let e00 = (4.0 * std::f64::consts::PI).powf(-0.5);
        let e11 = (8.0 * std::f64::consts::PI).powf(-0.5);
        assert!((k0[(0, 0)] - e00).abs() < 1e-12);
        assert!((k0[(1, 1)] - e11).abs() < 1e-12);
        assert!(k0[(0, 1)].abs() < 1e-13);
    }

    #[test]
    fn model_kernel_output_is_symmetric_for_symmetric_coefficients() {
        let a = SquareMatrix::from_rows(&[vec![2.0f64, 0.5], vec![0.5, 1.0]]);
        let sym = EllipticSymbol::isotropic(1, 1, a).unwrap();
        let eval = ModelKernelEvaluator::new(&sym).unwrap();
        for x in [0.0, 0.7, 1.9] {
            let k = eval.eval(&[x]);
            assert!((k[(0, 1)] - k[(1, 0)]).abs() < 1e-15, "x = {x}");
        }
    }

    #[test]
    fn model_kernel_total_integral_examples() {
        let gauss = EllipticSymbol::isotropic(1, 1, SquareMatrix::scalar(1.0f64)).unwrap();
        let total = model_kernel_total_integral(&gauss).unwrap();
        assert!((total[(0, 0)] - 1.0).abs() < 1e-10, "{}", total[(0, 0)]);

        let quartic = EllipticSymbol::isotropic(1, 2, SquareMatrix::scalar(1.0f64)).unwrap();
        let total = model_kernel_total_integral(&quartic).unwrap();
        assert!((total[(0, 0)] - 1.0).abs() < 1e-8, "{}", total[(0, 0)]);
    }

    #[test]
    fn model_kernel_2d_laplacian_total_integral() {
        let opts = ModelKernelOptions {
            samples_per_axis: Some(128),
            ..Default::default()
        };
        let sym = EllipticSymbol::isotropic(2, 1, SquareMatrix::scalar(1.0f64)).unwrap();
        let eval = ModelKernelEvaluator::with_options(&sym, &opts).unwrap();
        let total = eval.total_integral().unwrap();
        assert!((total[(0, 0)] - 1.0).abs() < 1e-8, "{}", total[(0, 0)]);
        // value at the origin is (4 pi)^{-1}
        let v = eval.eval(&[0.0, 0.0])[(0, 0)];
        assert!((v - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-10);
    }

    #[test]
    fn lone_mixed_quartic_term_is_rejected() {
        // xi_1^2 xi_2^2 vanishes on the axes: not elliptic.
        let term = SymbolTerm {
            alpha: vec![2, 2],
            coefficient: SquareMatrix::scalar(1.0f64),
        };
        let err = EllipticSymbol::new(2, 2, vec![term]).unwrap_err();
        assert!(matches!(err, Error::EllipticityFailure { .. }));
    }

    #[test]
    fn non_symmetric_or_non_pd_coefficients_are_rejected() {
        let bad_sym = SquareMatrix::from_rows(&[vec![1.0f64, 0.5], vec![-0.5, 1.0]]);
        assert!(EllipticSymbol::isotropic(1, 1, bad_sym).is_err());
        let negative = SquareMatrix::scalar(-1.0f64);
        assert!(EllipticSymbol::isotropic(1, 1, negative).is_err());
    }

    #[test]
    fn small_frequency_box_is_rejected() {
        let sym = EllipticSymbol::isotropic(1, 1, SquareMatrix::scalar(1.0f64)).unwrap();
        let opts = ModelKernelOptions {
            box_half_width: Some(2.0f64),
            samples_per_axis: None,
        };
        let err = ModelKernelEvaluator::with_options(&sym, &opts).unwrap_err();
        assert!(matches!(err, Error::FrequencyBoxTooSmall { .. }));
    }

    #[test]
    fn rescaled_kernel_freezes_coefficients() {
        // a(v) = 1 + v^2 on the line, m = 0
        let field = SymbolField {
            dimension: 1,
            half_order: 1,
            terms: vec![(
                vec![2],
                Arc::new(|v: &[f64]| SquareMatrix::scalar(1.0 + v[0] * v[0])) as CoefficientFn<f64>,
            )],
        };
        // t = 0.5, X = 1: frozen diffusion a(0.5) = 1.25; closed-form
        // Gaussian (4 pi a)^{-1/2} exp(-X^2 / (4a))
        let v = rescaled_symbol_kernel(&field, &[0.0], 0.5, &[1.0]).unwrap()[(0, 0)];
        let a = 1.25f64;
        let expected = (4.0 * std::f64::consts::PI * a).powf(-0.5) * (-1.0 / (4.0 * a)).exp();
        assert!((v - expected).abs() < 1e-10, "{v} vs {expected}");

        // t = 0 reduces to the model kernel frozen at m
        let at_zero = rescaled_symbol_kernel(&field, &[0.0], 0.0, &[0.7]).unwrap();
        let frozen = EllipticSymbol::isotropic(1, 1, SquareMatrix::scalar(1.0f64)).unwrap();
        let direct = model_kernel(&frozen, &[0.7]).unwrap();
        assert!((at_zero[(0, 0)] - direct[(0, 0)]).abs() < 1e-14);

        // constant coefficients: no t dependence
        let constant = SymbolField {
            dimension: 1,
            half_order: 1,
            terms: vec![(
                vec![2],
                Arc::new(|_: &[f64]| SquareMatrix::scalar(2.0)) as CoefficientFn<f64>,
            )],
        };
        let a = rescaled_symbol_kernel(&constant, &[0.2], 0.1, &[1.3]).unwrap();
        let b = rescaled_symbol_kernel(&constant, &[0.2], 0.9, &[1.3]).unwrap();
        assert!((a[(0, 0)] - b[(0, 0)]).abs() < 1e-15);
    }

    #[test]
    fn semigroup_in_fourier_coefficients() {
        // dyadic heat times make tau1 + tau2 exact, so the only slack left
        // is the correctly-rounded exp and one product rounding
        let modes: Vec<Vec<i64>> = vec![vec![0, 0], vec![1, 0], vec![2, -1], vec![-3, 4]];
        let mut twice: Vec<(Vec<i64>, f64)> = modes.iter().map(|k| (k.clone(), 1.0)).collect();
        spectral_heat_apply(&mut twice, 0.015625);
        spectral_heat_apply(&mut twice, 0.03125);
        let mut once: Vec<(Vec<i64>, f64)> = modes.iter().map(|k| (k.clone(), 1.0)).collect();
        spectral_heat_apply(&mut once, 0.046875);
        for ((_, a), (_, b)) in twice.iter().zip(&once) {
            let rel = (a - b).abs() / b.abs().max(f64::MIN_POSITIVE);
            assert!(rel <= 8.0 * f64::EPSILON, "{a} vs {b}");
        }
    }
}
