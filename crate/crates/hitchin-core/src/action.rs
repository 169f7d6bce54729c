//! Recovering the Hamiltonians from a phase configuration and sampling
//! consistent configurations from a given Hamiltonian vector.
//!
//! A configuration is N points (x_i, y_i, lambda_i) on the base curve; the
//! Hamiltonians solve the collocation system R(x_i, y_i, lambda_i; H) = 0,
//! which is linear in H. The primary solver is pivoted LU on the
//! row-equilibrated matrix; for N <= 8 every solve is cross-checked against
//! Cramer determinants.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{HyperellipticCurve, SheetPoint};
use crate::error::{Error, Result};
use crate::family::{CoefficientLayout, HamiltonianVector, SpectralCurve, SpectralPoint};
use crate::lie::{LieAlgebraSpec, LieSeries};

/// Configurations whose collocation matrix exceeds this 1-norm condition
/// number are rejected as not determining a unique spectral curve.
pub const CONDITION_CAP: f64 = 1e12;

/// Relative residual required of the linear solve.
pub const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

/// Relative agreement required between LU and Cramer components (N <= 8).
pub const CRAMER_AGREEMENT_TOL: f64 = 1e-8;

/// Sampling draws again while the collocation condition number is above
/// this; keeps round-trips comfortably inside [`SOLVE_RESIDUAL_TOL`].
const SAMPLING_CONDITION_TARGET: f64 = 3e6;

const MAX_SAMPLING_ATTEMPTS: usize = 40;

/// Largest N for which the Cramer cross-check runs inside `solve_actions`.
pub const CRAMER_MAX_DIM: usize = 8;

/// N spectral points over a base curve, together with the algebra they
/// belong to. Points form a non-ordered set: permuting them changes nothing
/// downstream.
///
/// JSON form of the point list:
/// `{"points": [{"x": [re, im], "y": [re, im], "lambda": [re, im]}, ...]}`.
#[derive(Debug, Clone)]
pub struct PhaseConfiguration {
    spec: LieAlgebraSpec,
    curve: HyperellipticCurve,
    layout: CoefficientLayout,
    points: Vec<SpectralPoint>,
}

/// Serialization shell for the points file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigurationPoints {
    pub points: Vec<SpectralPoint>,
}

impl PhaseConfiguration {
    /// Validate and build: the point count must be N = dim(g)(genus-1), every
    /// point must sit on the base curve, and genuinely coincident points
    /// (same x and same sheet) are rejected. Two points sharing x on
    /// different sheets are allowed; the solve's condition cap arbitrates.
    pub fn new(
        spec: LieAlgebraSpec,
        curve: HyperellipticCurve,
        points: Vec<SpectralPoint>,
    ) -> Result<Self> {
        let layout = CoefficientLayout::new(spec, curve.genus())?;
        if points.len() != layout.len() {
            return Err(Error::InvalidInput(format!(
                "{} points supplied, {spec} on a genus {} curve needs N = {}",
                points.len(),
                curve.genus(),
                layout.len()
            )));
        }
        for (i, pt) in points.iter().enumerate() {
            if !curve.contains(&pt.sheet_point(), 1e-9) {
                return Err(Error::InvalidInput(format!(
                    "point {i} at x = {} is not on the base curve (|y^2 - P(x)| too large)",
                    pt.x
                )));
            }
        }
        let scale = 1.0 + points.iter().map(|p| p.x.norm()).fold(0.0, f64::max);
        let colloc_tol = 1e-8 * scale;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if (points[i].x - points[j].x).norm() <= colloc_tol
                    && (points[i].y - points[j].y).norm() <= colloc_tol
                {
                    return Err(Error::SingularConfiguration(format!(
                        "points {i} and {j} coincide at x = {}",
                        points[i].x
                    )));
                }
            }
        }
        Ok(Self {
            spec,
            curve,
            layout,
            points,
        })
    }

    pub fn spec(&self) -> LieAlgebraSpec {
        self.spec
    }

    pub fn curve(&self) -> &HyperellipticCurve {
        &self.curve
    }

    pub fn layout(&self) -> &CoefficientLayout {
        &self.layout
    }

    pub fn points(&self) -> &[SpectralPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Copy with point k replaced; the caller is responsible for keeping the
    /// replacement on the base curve (finite-difference stencils do).
    pub(crate) fn replacing_point(&self, k: usize, pt: SpectralPoint) -> Self {
        let mut points = self.points.clone();
        points[k] = pt;
        Self {
            spec: self.spec,
            curve: self.curve.clone(),
            layout: self.layout.clone(),
            points,
        }
    }
}

/// Collocation matrix and right-hand side of R(x_i, y_i, lambda_i; H) = 0:
/// entry (i, j) is m_j(x_i, y_i) lambda_i^(n - d(j)), rhs_i = -lambda_i^n.
pub fn assemble_system(config: &PhaseConfiguration) -> (DMatrix<Complex64>, DVector<Complex64>) {
    let layout = config.layout();
    let n_rep = layout.n_standard();
    let n = layout.len();
    let mut matrix = DMatrix::zeros(n, n);
    let mut rhs = DVector::zeros(n);
    for (i, pt) in config.points().iter().enumerate() {
        let sheet = pt.sheet_point();
        for (j, monomial) in layout.monomials().iter().enumerate() {
            matrix[(i, j)] = monomial.eval(&sheet) * pt.lambda.powu(layout.lambda_exponent(j));
        }
        rhs[i] = -pt.lambda.powu(n_rep);
    }
    (matrix, rhs)
}

fn norm_1(m: &DMatrix<Complex64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hamiltonians of the spectral curve through the configuration, plus the
/// 1-norm condition estimate of the row-equilibrated collocation matrix.
pub fn solve_actions_with_condition(
    config: &PhaseConfiguration,
) -> Result<(HamiltonianVector, f64)> {
    let (mut matrix, mut rhs) = assemble_system(config);
    let n = matrix.nrows();

    // Row equilibration: scales both determinant families identically, so
    // Cramer ratios are unchanged.
    for i in 0..n {
        let row_max = (0..n).map(|j| matrix[(i, j)].norm()).fold(0.0, f64::max);
        if row_max == 0.0 {
            return Err(Error::SingularConfiguration(format!(
                "collocation row {i} vanishes identically"
            )));
        }
        for j in 0..n {
            matrix[(i, j)] /= row_max;
        }
        rhs[i] /= row_max;
    }

    let lu = matrix.clone().lu();
    let inverse = lu.try_inverse().ok_or_else(|| {
        Error::SingularConfiguration("collocation matrix is numerically singular".into())
    })?;
    let condition = norm_1(&matrix) * norm_1(&inverse);
    if !condition.is_finite() || condition > CONDITION_CAP {
        return Err(Error::SingularConfiguration(format!(
            "collocation condition estimate {condition:.3e} exceeds cap {CONDITION_CAP:.1e}"
        )));
    }

    let mut h = lu.solve(&rhs).ok_or_else(|| {
        Error::SingularConfiguration("LU solve failed on the collocation system".into())
    })?;

    // One step of residual refinement tightens the backward error.
    let residual = &rhs - &matrix * &h;
    if let Some(correction) = lu.solve(&residual) {
        h += correction;
    }

    let h_inf = h.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let scale = norm_1(&matrix) * h_inf + rhs.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let residual_inf = (&rhs - &matrix * &h)
        .iter()
        .map(|v| v.norm())
        .fold(0.0, f64::max);
    if residual_inf > SOLVE_RESIDUAL_TOL * scale.max(1e-300) {
        return Err(Error::NonConvergence(format!(
            "linear solve residual {residual_inf:.3e} above {SOLVE_RESIDUAL_TOL:.1e} * scale"
        )));
    }

    if n <= CRAMER_MAX_DIM {
        cramer_cross_check(&matrix, &rhs, &h, h_inf)?;
    }

    Ok((
        HamiltonianVector::new(h.iter().copied().collect()),
        condition,
    ))
}

/// Hamiltonians of the spectral curve through the configuration.
pub fn solve_actions(config: &PhaseConfiguration) -> Result<HamiltonianVector> {
    solve_actions_with_condition(config).map(|(h, _)| h)
}

/// Cramer's rule on the equilibrated system, compared component-wise against
/// the LU solution.
fn cramer_cross_check(
    matrix: &DMatrix<Complex64>,
    rhs: &DVector<Complex64>,
    h: &DVector<Complex64>,
    h_inf: f64,
) -> Result<()> {
    let det = matrix.determinant();
    if det.norm() == 0.0 {
        return Err(Error::SingularConfiguration(
            "Cramer denominator determinant vanishes".into(),
        ));
    }
    let floor = h_inf.max(1e-300);
    for j in 0..matrix.ncols() {
        let mut replaced = matrix.clone();
        replaced.set_column(j, rhs);
        let component = replaced.determinant() / det;
        let diff = (component - h[j]).norm();
        if diff > CRAMER_AGREEMENT_TOL * floor {
            return Err(Error::NonConvergence(format!(
                "Cramer component {j} departs from LU by {diff:.3e} (relative {:.3e})",
                diff / floor
            )));
        }
    }
    Ok(())
}

/// Draw a configuration consistent with the given Hamiltonians.
///
/// x-values are sampled from the annulus 0.5 <= |x| <= 2 rescaled by the
/// largest branch-point modulus, keeping clear of branch points and of each
/// other; the y-sheet is a fair coin per point; lambda is a residual-verified
/// root of R over the point, avoiding the structural lambda = 0 fiber of the
/// B series whenever a nonzero root exists. Re-draws on ill-conditioned
/// outcomes, a bounded number of times. Deterministic per seed.
pub fn sample_config(
    curve: &HyperellipticCurve,
    spec: LieAlgebraSpec,
    h: &HamiltonianVector,
    seed: u64,
) -> Result<PhaseConfiguration> {
    let layout = CoefficientLayout::new(spec, curve.genus())?;
    if h.len() != layout.len() {
        return Err(Error::InvalidInput(format!(
            "Hamiltonian vector has {} components, layout needs {}",
            h.len(),
            layout.len()
        )));
    }
    let spectral = SpectralCurve::new(&layout, h)?;
    let n = layout.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius_scale = curve.max_branch_modulus().max(1e-3);
    let clearance = 0.2 * (1.0 + radius_scale);
    let spacing = 1e-2 * (1.0 + radius_scale);

    let mut last_error = None;
    for _attempt in 0..MAX_SAMPLING_ATTEMPTS {
        match sample_once(
            curve,
            spec,
            &spectral,
            n,
            &mut rng,
            radius_scale,
            clearance,
            spacing,
        ) {
            Ok(config) => match solve_actions_with_condition(&config) {
                Ok((_, condition)) if condition <= SAMPLING_CONDITION_TARGET => return Ok(config),
                Ok((_, condition)) => {
                    last_error = Some(Error::SingularConfiguration(format!(
                        "sampled condition {condition:.3e} above target {SAMPLING_CONDITION_TARGET:.1e}"
                    )));
                }
                Err(err @ Error::SingularConfiguration(_)) => last_error = Some(err),
                Err(other) => return Err(other),
            },
            Err(err @ Error::SingularConfiguration(_)) => last_error = Some(err),
            Err(other) => return Err(other),
        }
    }
    Err(last_error.unwrap_or_else(|| {
        Error::SingularConfiguration("sampling exhausted its retry budget".into())
    }))
}

#[allow(clippy::too_many_arguments)]
fn sample_once(
    curve: &HyperellipticCurve,
    spec: LieAlgebraSpec,
    spectral: &SpectralCurve<'_>,
    n: usize,
    rng: &mut ChaCha8Rng,
    radius_scale: f64,
    clearance: f64,
    spacing: f64,
) -> Result<PhaseConfiguration> {
    let mut points: Vec<SpectralPoint> = Vec::with_capacity(n);
    for _ in 0..n {
        let mut placed = false;
        for _try in 0..200 {
            // Area-uniform draw over the annulus 0.5 <= |x|/scale <= 2.
            let u: f64 = rng.gen_range(0.0..=1.0);
            let radius = (0.25 + u * (4.0 - 0.25)).sqrt() * radius_scale;
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let x = Complex64::from_polar(radius, angle);
            let clear_of_branches = curve
                .branch_points()
                .iter()
                .all(|b| (x - b).norm() > clearance);
            let clear_of_points = points.iter().all(|p| (x - p.x).norm() > spacing);
            if !clear_of_branches || !clear_of_points {
                continue;
            }

            let principal = curve.eval(x).sqrt();
            let y = if rng.gen_bool(0.5) {
                principal
            } else {
                -principal
            };
            let sheet = SheetPoint::new(x, y);

            let roots = spectral.lambda_roots(&sheet)?;
            let lambda_scale = 1.0 + roots.iter().map(|r| r.norm()).fold(0.0, f64::max);
            let candidates: Vec<Complex64> = if spec.series() == LieSeries::B
                && roots.iter().any(|r| r.norm() > 1e-9 * lambda_scale)
            {
                roots
                    .iter()
                    .copied()
                    .filter(|r| r.norm() > 1e-9 * lambda_scale)
                    .collect()
            } else {
                roots
            };
            if candidates.is_empty() {
                continue;
            }
            let lambda = candidates[rng.gen_range(0..candidates.len())];

            let pt = SpectralPoint::new(x, y, lambda);
            if spectral.relative_residual(&pt) > 1e-10 {
                return Err(Error::RootSolveFailure(format!(
                    "sampled lambda fails the residual check at x = {x}"
                )));
            }
            points.push(pt);
            placed = true;
            break;
        }
        if !placed {
            return Err(Error::SingularConfiguration(
                "could not place a sample point clear of branch points".into(),
            ));
        }
    }
    PhaseConfiguration::new(spec, curve.clone(), points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::LieSeries;
    use proptest::prelude::*;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn quintic_plus_one() -> HyperellipticCurve {
        let mut coeffs = vec![c(0.0, 0.0); 5];
        coeffs[0] = c(1.0, 0.0);
        HyperellipticCurve::new(2, coeffs).unwrap()
    }

    fn septic_plus_one() -> HyperellipticCurve {
        let mut coeffs = vec![c(0.0, 0.0); 7];
        coeffs[0] = c(1.0, 0.0);
        HyperellipticCurve::new(3, coeffs).unwrap()
    }

    fn a1() -> LieAlgebraSpec {
        LieAlgebraSpec::new(LieSeries::A, 1).unwrap()
    }

    /// (A_1, g=2) configuration with x = (0, 1, 2) on y^2 = x^5 + 1 and the
    /// given lambda values.
    fn a1_config(lambdas: [Complex64; 3]) -> PhaseConfiguration {
        let curve = quintic_plus_one();
        let points = [c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]
            .iter()
            .zip(lambdas)
            .map(|(&x, lambda)| SpectralPoint::new(x, curve.eval(x).sqrt(), lambda))
            .collect();
        PhaseConfiguration::new(a1(), curve, points).unwrap()
    }

    #[test]
    fn assembled_rows_are_monomials_times_lambda_powers() {
        let one = c(1.0, 0.0);
        let config = a1_config([one, one, one]);
        let (m, rhs) = assemble_system(&config);
        // Rows are [1, x_i, x_i^2] and the rhs is -lambda_i^2: a Vandermonde
        // system in x at x = (0, 1, 2).
        for (i, &x) in [0.0, 1.0, 2.0].iter().enumerate() {
            assert!((m[(i, 0)] - one).norm() < 1e-15);
            assert!((m[(i, 1)] - c(x, 0.0)).norm() < 1e-15);
            assert!((m[(i, 2)] - c(x * x, 0.0)).norm() < 1e-15);
            assert!((rhs[i] + one).norm() < 1e-15);
        }
    }

    #[test]
    fn a1_g3_row_includes_odd_monomial() {
        let curve = septic_plus_one();
        let xs = [0.3, 0.9, 1.4, 1.9, 2.3, 2.8];
        let points: Vec<SpectralPoint> = xs
            .iter()
            .map(|&x| {
                let x = c(x, 0.0);
                SpectralPoint::new(x, curve.eval(x).sqrt(), c(1.0, 0.0))
            })
            .collect();
        let config = PhaseConfiguration::new(a1(), curve.clone(), points).unwrap();
        let (m, rhs) = assemble_system(&config);
        let x = c(xs[0], 0.0);
        let y = curve.eval(x).sqrt();
        let expected = [c(1.0, 0.0), x, x * x, x * x * x, x * x * x * x, y];
        for (j, e) in expected.iter().enumerate() {
            assert!((m[(0, j)] - e).norm() < 1e-14);
        }
        assert!((rhs[0] + c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn constant_lambda_forces_constant_coefficient() {
        let one = c(1.0, 0.0);
        let config = a1_config([one, one, one]);
        let h = solve_actions(&config).unwrap();
        let expected = [c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        for (got, want) in h.values().iter().zip(expected) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    #[test]
    fn lambda_equal_x_forces_quadratic() {
        let config = a1_config([c(0.0, 0.0), c(1.0, 0.0), c(2.0, 0.0)]);
        let h = solve_actions(&config).unwrap();
        let expected = [c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)];
        for (got, want) in h.values().iter().zip(expected) {
            assert!((got - want).norm() < 1e-12);
        }
    }

    fn seeded_h(n: usize, seed: u64) -> HamiltonianVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        HamiltonianVector::new(
            (0..n)
                .map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn round_trip_recovers_hamiltonians() {
        let cases: [(LieAlgebraSpec, HyperellipticCurve); 4] = [
            (a1(), quintic_plus_one()),
            (a1(), septic_plus_one()),
            (
                LieAlgebraSpec::new(LieSeries::A, 2).unwrap(),
                quintic_plus_one(),
            ),
            (
                LieAlgebraSpec::new(LieSeries::C, 2).unwrap(),
                quintic_plus_one(),
            ),
        ];
        for (spec, curve) in cases {
            let n = CoefficientLayout::new(spec, curve.genus()).unwrap().len();
            let h_true = seeded_h(n, 7);
            let config = sample_config(&curve, spec, &h_true, 11).unwrap();
            let h_rec = solve_actions(&config).unwrap();
            let err = h_rec
                .values()
                .iter()
                .zip(h_true.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(
                err < 1e-10 * h_true.max_abs(),
                "{spec}: round-trip error {err:.3e}"
            );
        }
    }

    #[test]
    fn b_series_round_trip_avoids_zero_fiber() {
        let spec = LieAlgebraSpec::new(LieSeries::B, 2).unwrap();
        let curve = quintic_plus_one();
        let h_true = seeded_h(10, 3);
        let config = sample_config(&curve, spec, &h_true, 5).unwrap();
        for pt in config.points() {
            assert!(pt.lambda.norm() > 1e-9);
        }
        let h_rec = solve_actions(&config).unwrap();
        let err = h_rec
            .values()
            .iter()
            .zip(h_true.values())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-10 * h_true.max_abs(), "round-trip error {err:.3e}");
    }

    #[test]
    fn constant_spectral_curve_samples_unit_lambdas() {
        // H = (-1, 0, 0): R = lambda^2 - 1, so every sampled lambda is +-1.
        let h = HamiltonianVector::new(vec![c(-1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let config = sample_config(&quintic_plus_one(), a1(), &h, 8).unwrap();
        for pt in config.points() {
            assert!(
                (pt.lambda - c(1.0, 0.0)).norm() < 1e-12
                    || (pt.lambda + c(1.0, 0.0)).norm() < 1e-12,
                "lambda = {}",
                pt.lambda
            );
        }
    }

    #[test]
    fn zero_hamiltonians_sample_on_zero_section() {
        let config =
            sample_config(&quintic_plus_one(), a1(), &HamiltonianVector::zeros(3), 2).unwrap();
        for pt in config.points() {
            assert!(pt.lambda.norm() < 1e-14);
        }
        let h = solve_actions(&config).unwrap();
        assert!(h.max_abs() < 1e-12);
    }

    #[test]
    fn permutation_invariance() {
        let curve = quintic_plus_one();
        let h_true = seeded_h(3, 21);
        let config = sample_config(&curve, a1(), &h_true, 13).unwrap();
        let h_a = solve_actions(&config).unwrap();

        let mut permuted = config.points().to_vec();
        permuted.rotate_left(1);
        permuted.swap(0, 1);
        let config_b = PhaseConfiguration::new(a1(), curve, permuted).unwrap();
        let h_b = solve_actions(&config_b).unwrap();
        for (a, b) in h_a.values().iter().zip(h_b.values()) {
            assert!((a - b).norm() < 1e-12 * h_true.max_abs().max(1.0));
        }
    }

    #[test]
    fn seeded_sampling_is_byte_identical() {
        let curve = quintic_plus_one();
        let h = seeded_h(3, 9);
        let a = sample_config(&curve, a1(), &h, 77).unwrap();
        let b = sample_config(&curve, a1(), &h, 77).unwrap();
        let shell_a = ConfigurationPoints {
            points: a.points().to_vec(),
        };
        let shell_b = ConfigurationPoints {
            points: b.points().to_vec(),
        };
        assert_eq!(
            serde_json::to_string(&shell_a).unwrap(),
            serde_json::to_string(&shell_b).unwrap()
        );
    }

    #[test]
    fn coincident_points_are_singular() {
        let curve = quintic_plus_one();
        let x = c(1.0, 0.0);
        let y = curve.eval(x).sqrt();
        let pts = vec![
            SpectralPoint::new(x, y, c(1.0, 0.0)),
            SpectralPoint::new(x, y, c(-1.0, 0.0)),
            SpectralPoint::new(c(2.0, 0.0), curve.eval(c(2.0, 0.0)).sqrt(), c(1.0, 0.0)),
        ];
        assert!(matches!(
            PhaseConfiguration::new(a1(), curve, pts),
            Err(Error::SingularConfiguration(_))
        ));
    }

    #[test]
    fn off_curve_points_are_invalid() {
        let curve = quintic_plus_one();
        let pts = vec![
            SpectralPoint::new(c(1.0, 0.0), c(5.0, 0.0), c(1.0, 0.0)),
            SpectralPoint::new(c(2.0, 0.0), curve.eval(c(2.0, 0.0)).sqrt(), c(1.0, 0.0)),
            SpectralPoint::new(c(3.0, 0.0), curve.eval(c(3.0, 0.0)).sqrt(), c(1.0, 0.0)),
        ];
        assert!(matches!(
            PhaseConfiguration::new(a1(), curve, pts),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn collocation_matrix_is_nonsingular_at_generic_points() {
        // Linear independence of the full basis, witnessed by a finite
        // condition number at sampled points.
        for (series, rank) in [(LieSeries::A, 2), (LieSeries::B, 2), (LieSeries::C, 2)] {
            let spec = LieAlgebraSpec::new(series, rank).unwrap();
            let curve = quintic_plus_one();
            let n = CoefficientLayout::new(spec, 2).unwrap().len();
            let config = sample_config(&curve, spec, &seeded_h(n, 31), 17).unwrap();
            let (_, condition) = solve_actions_with_condition(&config).unwrap();
            assert!(condition.is_finite() && condition < CONDITION_CAP);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn prop_round_trip_a1_g2(seed in 0u64..1000, h_seed in 0u64..1000) {
            let curve = quintic_plus_one();
            let h_true = seeded_h(3, h_seed);
            let config = sample_config(&curve, a1(), &h_true, seed).unwrap();
            let h_rec = solve_actions(&config).unwrap();
            let err = h_rec
                .values()
                .iter()
                .zip(h_true.values())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            prop_assert!(err <= 1e-10 * h_true.max_abs().max(1e-12));
        }
    }
}
