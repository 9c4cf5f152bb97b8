//! Three-way verification of the fixed point formula: the geometric
//! heat-trace ladder, the exact Fourier-mode supertrace, and the
//! fixed-point-weighted sum, plus the cohomological alternating sum and a
//! commutation check for the twist.

use crate::error::{Error, Result};
use crate::geometry::{
    apply_map, find_fixed_points, torus_distance, FixedPointRecord, TorusGeometry, TorusMap,
};
use crate::heatkernel::{spectral_supertrace, HeatTime, ThetaKernel};
use crate::linalg::{combinations, SquareMatrix};
use crate::numeric::{as_f64, pairwise_sum, pi, real, Real};
use crate::superalgebra::{exterior_power_action, exterior_powers, Zeta};
use rayon::prelude::*;

/// Tolerance on the spread of the spectral supertrace across the ladder.
pub const SPECTRAL_T_INDEPENDENCE_TOL: f64 = 1e-12;

/// Geometric ladder specification: t_j = t_max * ratio^j, j = 0..rungs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderSpec<T> {
    pub t_max: T,
    pub ratio: T,
    pub rungs: usize,
}

impl<T: Real> LadderSpec<T> {
    pub fn t_values(&self) -> Vec<T> {
        (0..self.rungs)
            .map(|j| self.t_max * self.ratio.powi(j as i32))
            .collect()
    }
}

/// Pass/fail tolerances for the report comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T> {
    pub spectral: T,
    pub geometric: T,
}

impl<T: Real> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            spectral: real(1e-10),
            geometric: real(1e-4),
        }
    }
}

/// Everything `verify` needs: the geometry, the map, the bundle twist, the
/// heat half-order and the t ladder.
#[derive(Debug, Clone)]
pub struct VerificationConfig<T> {
    pub geom: TorusGeometry,
    pub map: TorusMap<T>,
    pub zeta: Zeta<T>,
    pub half_order: u32,
    pub ladder: LadderSpec<T>,
    pub tolerances: Tolerances<T>,
}

impl<T: Real> VerificationConfig<T> {
    pub fn new(geom: TorusGeometry, map: TorusMap<T>, ladder: LadderSpec<T>) -> Self {
        Self {
            geom,
            map,
            zeta: Zeta::DeRham,
            half_order: 1,
            ladder,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.map.dimension() != self.geom.dimension() {
            return Err(Error::InvalidConfig(format!(
                "map dimension {} does not match geometry dimension {}",
                self.map.dimension(),
                self.geom.dimension()
            )));
        }
        if self.ladder.rungs < 4 {
            return Err(Error::InvalidConfig(format!(
                "ladder.rungs must be >= 4, got {}",
                self.ladder.rungs
            )));
        }
        if !(self.ladder.ratio > T::zero() && self.ladder.ratio < T::one()) {
            return Err(Error::InvalidConfig(format!(
                "ladder.ratio must lie in (0, 1), got {}",
                self.ladder.ratio
            )));
        }
        if !(self.ladder.t_max > T::zero() && self.ladder.t_max <= T::one()) {
            return Err(Error::InvalidConfig(format!(
                "ladder.t_max must lie in (0, 1], got {}",
                self.ladder.t_max
            )));
        }
        if self.half_order == 0 {
            return Err(Error::InvalidConfig("half_order must be >= 1".into()));
        }
        let tau_max = self.ladder.t_max.powi(2 * self.half_order as i32);
        if tau_max > real(0.25) {
            return Err(Error::InvalidConfig(format!(
                "t_max^(2s) = {tau_max} exceeds 0.25; the theta truncation is not calibrated there"
            )));
        }
        // the finest rung must still fit in memory after grid refinement
        let t_min = self.ladder.t_max * self.ladder.ratio.powi(self.ladder.rungs as i32 - 1);
        let tau_min = t_min.powi(2 * self.half_order as i32);
        let finest = rung_grid_size(self.geom.grid_size(), tau_min);
        if finest > 4096 {
            return Err(Error::InvalidConfig(format!(
                "finest rung needs a grid of {finest} points per axis (> 4096); \
                 use fewer rungs or a larger ratio"
            )));
        }
        Ok(())
    }
}

/// One rung of the verification ladder.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderRow<T> {
    pub t: T,
    pub tau: T,
    pub grid_points_per_axis: usize,
    pub geometric: T,
    pub spectral: Option<T>,
    pub abs_error: T,
}

/// One named pass/fail comparison of the report.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison<T> {
    pub name: String,
    pub error: T,
    pub tolerance: T,
    pub pass: bool,
}

/// Per-fixed-point summary carried in the report.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSummary<T> {
    pub location: Vec<T>,
    pub differential: Vec<Vec<T>>,
    pub weight: T,
    pub str_zeta: T,
}

/// The full verification report. The reference value is the fixed-point
/// side, which is exact given exact fixed points; a failed verdict still
/// carries every residual.
#[derive(Debug, Clone)]
pub struct ConvergenceReport<T> {
    pub rows: Vec<LadderRow<T>>,
    pub geometric_extrapolated: T,
    pub spectral: Option<T>,
    pub spectral_max_deviation: Option<T>,
    pub fixed_point_side: T,
    pub cohomological: Option<T>,
    pub fixed_points: Vec<FixedPointSummary<T>>,
    pub comparisons: Vec<Comparison<T>>,
    pub passed: bool,
}

/// The fixed-point side of the formula:
/// sum_m |det(dphi_m - 1)|^{-1} str(zeta_m).
pub fn fixed_point_side<T: Real>(
    map: &TorusMap<T>,
    zeta: &Zeta<T>,
    geom: &TorusGeometry,
) -> Result<T> {
    let fps = find_fixed_points(map, geom)?;
    Ok(fixed_point_side_from_records(map, zeta, &fps))
}

fn fixed_point_side_from_records<T: Real>(
    map: &TorusMap<T>,
    zeta: &Zeta<T>,
    fps: &[FixedPointRecord<T>],
) -> T {
    let terms: Vec<T> = fps
        .iter()
        .map(|fp| fp.weight * zeta.at(map, &fp.point).supertrace())
        .collect();
    pairwise_sum(&terms)
}

/// The alternating sum of traces on cohomology. Affine maps act on the
/// harmonic forms of the flat torus by the exterior powers of A^T (the shift
/// acts trivially on constants), giving sum_p (-1)^p tr Lambda^p(A^T); a
/// circle map of degree d gives 1 - d.
pub fn cohomological_side<T: Real>(map: &TorusMap<T>, geom: &TorusGeometry) -> Result<T> {
    if map.dimension() != geom.dimension() {
        return Err(Error::InvalidConfig(
            "map and geometry dimensions differ".into(),
        ));
    }
    match map {
        TorusMap::Affine { matrix, .. } => {
            Ok(exterior_powers(&matrix.to_real::<T>().transpose()).supertrace())
        }
        TorusMap::CircleFourier { .. } => Ok(T::one() - real::<T>(map.circle_degree() as f64)),
    }
}

/// The geometric supertrace at one heat time: quadrature over the grid of
/// str(zeta(v)) * theta_tau(phi(v), v). For the de Rham twist the graded
/// factor is Lambda(dphi(v)^T), whose supertrace is det(I - dphi(v)); the
/// scalar theta kernel multiplies every degree alike.
pub fn geometric_supertrace<T: Real>(
    map: &TorusMap<T>,
    zeta: &Zeta<T>,
    geom: &TorusGeometry,
    ht: &HeatTime<T>,
    grid: &crate::geometry::QuadratureGrid<T>,
) -> Result<T> {
    let tau = ht.tau();
    if tau > real(0.2500001) {
        return Err(Error::InvalidConfig(format!(
            "tau = {tau} exceeds 0.25; the theta truncation is not calibrated there"
        )));
    }
    let theta = ThetaKernel::new(geom, tau)?;
    theta.validate()?;
    Ok(grid.integrate(|v| {
        let image = apply_map(map, v);
        zeta.at(map, v).supertrace() * theta.eval_unchecked(&image, v)
    }))
}

/// Fraction of the absolute mass of the geometric integrand within torus
/// distance `radius` of the fixed-point set; the t -> 0 localization
/// diagnostic.
pub fn localization_mass_fraction<T: Real>(
    map: &TorusMap<T>,
    zeta: &Zeta<T>,
    geom: &TorusGeometry,
    tau: T,
    radius: T,
) -> Result<T> {
    let fps = find_fixed_points(map, geom)?;
    let theta = ThetaKernel::new(geom, tau)?;
    theta.validate()?;
    let grid = geom.grid::<T>();
    let total = grid.integrate(|v| {
        let image = apply_map(map, v);
        (zeta.at(map, v).supertrace() * theta.eval_unchecked(&image, v)).abs()
    });
    let near = grid.integrate(|v| {
        let close = fps.iter().any(|fp| torus_distance(v, &fp.point) <= radius);
        if close {
            let image = apply_map(map, v);
            (zeta.at(map, v).supertrace() * theta.eval_unchecked(&image, v)).abs()
        } else {
            T::zero()
        }
    });
    if total == T::zero() {
        return Ok(T::one());
    }
    Ok(near / total)
}

/// Grid resolution for a rung: spacing at most sqrt(tau)/3, never coarser
/// than the configured base grid.
fn rung_grid_size<T: Real>(base: usize, tau: T) -> usize {
    let needed = (real::<T>(3.0) / tau.sqrt()).ceil();
    base.max(as_f64(needed) as usize)
}

/// Run the full three-way verification.
///
/// Math-domain failures (non-simple fixed points, truncation failures)
/// surface as errors; a report whose comparisons fail is still returned
/// intact with `passed = false`.
pub fn verify<T: Real>(config: &VerificationConfig<T>) -> Result<ConvergenceReport<T>> {
    config.validate()?;
    let geom = &config.geom;
    let map = &config.map;
    let zeta = &config.zeta;

    let fps = find_fixed_points(map, geom)?;
    let fixed_point_value = fixed_point_side_from_records(map, zeta, &fps);
    let fixed_points: Vec<FixedPointSummary<T>> = fps
        .iter()
        .map(|fp| {
            let n = fp.point.len();
            FixedPointSummary {
                location: fp.point.clone(),
                differential: (0..n).map(|i| fp.differential.row(i).to_vec()).collect(),
                weight: fp.weight,
                str_zeta: zeta.at(map, &fp.point).supertrace(),
            }
        })
        .collect();

    let cohomological = if zeta.is_de_rham() {
        Some(cohomological_side(map, geom)?)
    } else {
        // the cohomological action of a custom twist is not defined here
        None
    };

    // the Fourier-mode supertrace encodes the de Rham twist; a custom zeta
    // has no spectral shortcut
    let spectral_applies = map.is_affine() && zeta.is_de_rham();
    let t_values = config.ladder.t_values();
    let rows: Vec<Result<LadderRow<T>>> = t_values
        .par_iter()
        .map(|&t| {
            let ht = HeatTime::new(t, config.half_order)?;
            let tau = ht.tau();
            let grid_size = rung_grid_size(geom.grid_size(), tau);
            let grid = geom.grid_with::<T>(grid_size);
            let geometric = geometric_supertrace(map, zeta, geom, &ht, &grid)?;
            let spectral = if spectral_applies {
                Some(spectral_supertrace(map, &ht)?)
            } else {
                None
            };
            Ok(LadderRow {
                t,
                tau,
                grid_points_per_axis: grid_size,
                geometric,
                spectral,
                abs_error: (geometric - fixed_point_value).abs(),
            })
        })
        .collect();
    let rows: Vec<LadderRow<T>> = rows.into_iter().collect::<Result<_>>()?;

    // one Richardson step on the two finest rungs
    let ratio = config.ladder.ratio;
    let last = rows[rows.len() - 1].geometric;
    let prev = rows[rows.len() - 2].geometric;
    let geometric_extrapolated = (last - ratio * prev) / (T::one() - ratio);

    let (spectral, spectral_max_deviation) = if spectral_applies {
        let values: Vec<T> = rows.iter().filter_map(|r| r.spectral).collect();
        let reference = values[values.len() - 1];
        let deviation = values
            .iter()
            .fold(T::zero(), |acc, &v| acc.max((v - reference).abs()));
        (Some(reference), Some(deviation))
    } else {
        (None, None)
    };

    let mut comparisons = Vec::new();
    comparisons.push(Comparison {
        name: "geometric_extrapolated_vs_fixed_point".into(),
        error: (geometric_extrapolated - fixed_point_value).abs(),
        tolerance: config.tolerances.geometric,
        pass: (geometric_extrapolated - fixed_point_value).abs() <= config.tolerances.geometric,
    });
    if let Some(s) = spectral {
        comparisons.push(Comparison {
            name: "spectral_vs_fixed_point".into(),
            error: (s - fixed_point_value).abs(),
            tolerance: config.tolerances.spectral,
            pass: (s - fixed_point_value).abs() <= config.tolerances.spectral,
        });
    }
    if let Some(dev) = spectral_max_deviation {
        comparisons.push(Comparison {
            name: "spectral_t_independence".into(),
            error: dev,
            tolerance: real(SPECTRAL_T_INDEPENDENCE_TOL),
            pass: dev <= real(SPECTRAL_T_INDEPENDENCE_TOL),
        });
    }
    if let Some(c) = cohomological {
        let tol = if map.is_affine() {
            config.tolerances.spectral
        } else {
            // circle fixed points are Newton-polished, not exact
            config.tolerances.spectral.max(real(1e-8))
        };
        comparisons.push(Comparison {
            name: "cohomological_vs_fixed_point".into(),
            error: (c - fixed_point_value).abs(),
            tolerance: tol,
            pass: (c - fixed_point_value).abs() <= tol,
        });
    }
    let passed = comparisons.iter().all(|c| c.pass);

    Ok(ConvergenceReport {
        rows,
        geometric_extrapolated,
        spectral,
        spectral_max_deviation,
        fixed_point_side: fixed_point_value,
        cohomological,
        fixed_points,
        comparisons,
        passed,
    })
}

/// Maximum residual of d(T omega) - T(d omega) over basis forms with
/// Fourier mode |k|_inf <= cutoff and all degrees.
///
/// Affine maps act exactly on the Fourier-multi-index representation; both
/// routes share the single phase factor exp(2 pi i k . b) and one overall
/// factor of i, so the residual is computed in real arithmetic. Circle maps
/// are checked by eighth-order finite differences of the sampled pullback
/// against the analytic chain rule.
pub fn commutation_check<T: Real>(
    map: &TorusMap<T>,
    geom: &TorusGeometry,
    mode_cutoff: usize,
) -> Result<T> {
    if map.dimension() != geom.dimension() {
        return Err(Error::InvalidConfig(
            "map and geometry dimensions differ".into(),
        ));
    }
    match map {
        TorusMap::Affine { matrix, .. } => {
            Ok(affine_commutation_residual::<T>(matrix, mode_cutoff))
        }
        TorusMap::CircleFourier { .. } => Ok(circle_commutation_residual(map, mode_cutoff)),
    }
}

fn affine_commutation_residual<T: Real>(matrix: &crate::linalg::IntMatrix, cutoff: usize) -> T {
    let n = matrix.dim();
    let a_real = matrix.to_real::<T>();
    let at = a_real.transpose();
    let atm = matrix.transpose();
    let two_pi = real::<T>(2.0) * pi::<T>();

    // Lambda^p(A^T) for every degree.
    let powers: Vec<SquareMatrix<T>> = (0..=n).map(|p| exterior_power_action(&at, p)).collect();

    let mut worst = T::zero();
    let c = cutoff as i64;
    let mut k = vec![-c; n];
    'modes: loop {
        let k_image = atm.matvec(&k);
        for p in 0..n {
            let p_table = combinations(n, p);
            let q_table = combinations(n, p + 1);
            for (i_pos, idx) in p_table.iter().enumerate() {
                // route A: pull back to degree p at mode A^T k, then d
                let mut route_a = vec![T::zero(); q_table.len()];
                for (j_pos, jdx) in p_table.iter().enumerate() {
                    let coeff = powers[p][(j_pos, i_pos)];
                    if coeff == T::zero() {
                        continue;
                    }
                    for (axis, &k_ax) in k_image.iter().enumerate() {
                        if jdx.contains(&axis) {
                            continue;
                        }
                        let (target, sign) = wedge_insert::<T>(jdx, axis, &q_table);
                        route_a[target] += sign * coeff * two_pi * real::<T>(k_ax as f64);
                    }
                }
                // route B: d at mode k to degree p+1, then pull back
                let mut route_b = vec![T::zero(); q_table.len()];
                for (axis, &k_ax) in k.iter().enumerate() {
                    if idx.contains(&axis) {
                        continue;
                    }
                    let (source, sign) = wedge_insert::<T>(idx, axis, &q_table);
                    let factor = sign * two_pi * real::<T>(k_ax as f64);
                    for (j_pos, slot) in route_b.iter_mut().enumerate() {
                        *slot += powers[p + 1][(j_pos, source)] * factor;
                    }
                }
                for (a, b) in route_a.iter().zip(&route_b) {
                    worst = worst.max((*a - *b).abs());
                }
            }
        }
        let mut axis = 0;
        loop {
            k[axis] += 1;
            if k[axis] <= c {
                break;
            }
            k[axis] = -c;
            axis += 1;
            if axis == n {
                break 'modes;
            }
        }
    }
    worst
}

/// Position of idx + {axis} in the degree-(p+1) table, with the sign of the
/// wedge insertion.
fn wedge_insert<T: Real>(idx: &[usize], axis: usize, table: &[Vec<usize>]) -> (usize, T) {
    let mut merged = idx.to_vec();
    let before = merged.iter().filter(|&&v| v < axis).count();
    merged.insert(before, axis);
    let pos = table
        .iter()
        .position(|candidate| candidate == &merged)
        .expect("wedge target in table");
    let sign = if before % 2 == 0 { T::one() } else { -T::one() };
    (pos, sign)
}

fn circle_commutation_residual<T: Real>(map: &TorusMap<T>, cutoff: usize) -> T {
    // The FD residual floor is rounding noise of order eps * 2 pi k / h;
    // 8192 samples balance that against the h^8 truncation term.
    let samples = 8192usize;
    let h = T::one() / real::<T>(samples as f64);
    let two_pi = real::<T>(2.0) * pi::<T>();
    // eighth-order central difference weights for the first derivative
    let w1 = real::<T>(4.0 / 5.0);
    let w2 = real::<T>(-1.0 / 5.0);
    let w3 = real::<T>(4.0 / 105.0);
    let w4 = real::<T>(-1.0 / 280.0);

    let lifts: Vec<T> = (0..samples)
        .map(|g| map.circle_lift(real::<T>(g as f64) * h))
        .collect();
    let slopes: Vec<T> = (0..samples)
        .map(|g| map.circle_lift_derivative(real::<T>(g as f64) * h))
        .collect();

    let mut worst = T::zero();
    for k in 1..=cutoff {
        let omega = two_pi * real::<T>(k as f64);
        for cosine in [true, false] {
            let f = |y: T| {
                if cosine {
                    (omega * y).cos()
                } else {
                    (omega * y).sin()
                }
            };
            let fprime = |y: T| {
                if cosine {
                    -omega * (omega * y).sin()
                } else {
                    omega * (omega * y).cos()
                }
            };
            let pulled: Vec<T> = lifts.iter().map(|&y| f(y)).collect();
            for g in 0..samples {
                let sample = |offset: i64| {
                    let idx = (g as i64 + offset).rem_euclid(samples as i64) as usize;
                    pulled[idx]
                };
                let fd = (w1 * (sample(1) - sample(-1))
                    + w2 * (sample(2) - sample(-2))
                    + w3 * (sample(3) - sample(-3))
                    + w4 * (sample(4) - sample(-4)))
                    / h;
                let chain = fprime(lifts[g]) * slopes[g];
                worst = worst.max((fd - chain).abs());
            }
        }
    }
    // degree 1 -> 2 vanishes identically on the circle: d of a top form and
    // the pullback of 0 are both 0; nothing to add to the residual.
    worst
}
