//! Finite-difference Poisson brackets for the structure
//! {lambda_i, x_j} = delta_ij y_i, and the verification suites for
//! commutativity of the Hamiltonians and the Darboux property of the
//! action-angle pairs.
//!
//! Partial derivatives are second-order central differences in the
//! independent coordinates (x_i, lambda_i). A perturbation of x_i re-roots
//! y_i exactly on its sheet (nearest square root to the first-order
//! predictor), so perturbed configurations stay on the base curve and the
//! action solve's preconditions keep holding.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::action::{sample_config, solve_actions, PhaseConfiguration};
use crate::curve::{y_continuation_step, HyperellipticCurve};
use crate::error::{Error, Result};
use crate::family::{HamiltonianVector, SpectralPoint};
use crate::geometry::{angle_coordinates_with_descriptor, PathPolicy};
use crate::lie::LieAlgebraSpec;
use crate::serde_util::complex_pair;

/// Default finite-difference step, relative to max(1, |coordinate|).
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Default tolerance for |{H_a, H_b}|, relative to max(1, |H|^2).
pub const DEFAULT_TOL_COMMUTE: f64 = 1e-6;

/// Default entrywise tolerance for |{H_a, phi_b} - delta_ab|. Angle brackets
/// inherit quadrature error of order quad_tol / step on top of the step^2
/// discretization term, hence the looser bound.
pub const DEFAULT_TOL_DARBOUX: f64 = 1e-3;

type ObservableFn = Box<dyn Fn(&PhaseConfiguration) -> Result<Complex64> + Send + Sync>;

/// A labelled scalar function on phase space.
pub struct Observable {
    label: String,
    eval: ObservableFn,
}

impl Observable {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&PhaseConfiguration) -> Result<Complex64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            eval: Box::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, config: &PhaseConfiguration) -> Result<Complex64> {
        (self.eval)(config)
    }

    /// The coordinate function x_k.
    pub fn coordinate_x(k: usize) -> Self {
        Self::new(format!("x_{k}"), move |c| Ok(c.points()[k].x))
    }

    /// The coordinate function lambda_k.
    pub fn coordinate_lambda(k: usize) -> Self {
        Self::new(format!("lambda_{k}"), move |c| Ok(c.points()[k].lambda))
    }

    /// The a-th action component H_a, defined through the linear solve.
    pub fn action_component(a: usize) -> Self {
        Self::new(format!("H_{a}"), move |c| Ok(solve_actions(c)?.values()[a]))
    }
}

/// One verified bracket entry.
///
/// JSON: `{"pair": [a, b], "value": [re, im], "target": [re, im],
/// "step": s, "tol": t, "pass": bool}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BracketReport {
    pub pair: [usize; 2],
    #[serde(skip)]
    pub labels: [String; 2],
    #[serde(with = "complex_pair")]
    pub value: Complex64,
    #[serde(with = "complex_pair")]
    pub target: Complex64,
    pub step: f64,
    pub tol: f64,
    pub pass: bool,
}

impl BracketReport {
    fn new(
        pair: [usize; 2],
        labels: [String; 2],
        value: Complex64,
        target: Complex64,
        step: f64,
        tol: f64,
    ) -> Self {
        let pass = (value - target).norm() <= tol;
        Self {
            pair,
            labels,
            value,
            target,
            step,
            tol,
            pass,
        }
    }
}

/// True when every report passed.
pub fn all_pass(reports: &[BracketReport]) -> bool {
    reports.iter().all(|r| r.pass)
}

// --- stencil machinery ------------------------------------------------------

/// Perturb x_k by a real delta, re-rooting y_k exactly on its sheet.
fn perturb_x(config: &PhaseConfiguration, k: usize, delta: f64) -> Result<PhaseConfiguration> {
    let pt = config.points()[k];
    let moved = y_continuation_step(config.curve(), &pt.sheet_point(), pt.x + delta)
        .map_err(|e| Error::StencilFailure(format!("x-stencil at point {k}: {e}")))?;
    Ok(config.replacing_point(k, SpectralPoint::new(moved.x, moved.y, pt.lambda)))
}

/// Perturb lambda_k by a real delta; the other coordinates stay fixed.
fn perturb_lambda(config: &PhaseConfiguration, k: usize, delta: f64) -> PhaseConfiguration {
    let pt = config.points()[k];
    config.replacing_point(k, SpectralPoint::new(pt.x, pt.y, pt.lambda + delta))
}

fn x_step(config: &PhaseConfiguration, k: usize, step_rel: f64) -> f64 {
    step_rel * config.points()[k].x.norm().max(1.0)
}

fn lambda_step(config: &PhaseConfiguration, k: usize, step_rel: f64) -> f64 {
    step_rel * config.points()[k].lambda.norm().max(1.0)
}

/// Central-difference gradient of a scalar observable in all 2N coordinates.
struct ScalarGradient {
    d_x: Vec<Complex64>,
    d_lambda: Vec<Complex64>,
}

fn scalar_gradient(
    f: &Observable,
    config: &PhaseConfiguration,
    step_rel: f64,
) -> Result<ScalarGradient> {
    let n = config.len();
    let mut d_x = Vec::with_capacity(n);
    let mut d_lambda = Vec::with_capacity(n);
    let eval = |c: &PhaseConfiguration| -> Result<Complex64> {
        f.eval(c)
            .map_err(|e| Error::StencilFailure(format!("evaluating {}: {e}", f.label())))
    };
    for k in 0..n {
        let hx = x_step(config, k, step_rel);
        let up = eval(&perturb_x(config, k, hx)?)?;
        let down = eval(&perturb_x(config, k, -hx)?)?;
        d_x.push((up - down) / (2.0 * hx));

        let hl = lambda_step(config, k, step_rel);
        let up = eval(&perturb_lambda(config, k, hl))?;
        let down = eval(&perturb_lambda(config, k, -hl))?;
        d_lambda.push((up - down) / (2.0 * hl));
    }
    Ok(ScalarGradient { d_x, d_lambda })
}

fn bracket_from_gradients(
    config: &PhaseConfiguration,
    f: &ScalarGradient,
    g: &ScalarGradient,
) -> Complex64 {
    config
        .points()
        .iter()
        .enumerate()
        .map(|(k, pt)| pt.y * (f.d_lambda[k] * g.d_x[k] - f.d_x[k] * g.d_lambda[k]))
        .sum()
}

/// {f, g} = sum_i y_i (df/dlambda_i dg/dx_i - df/dx_i dg/dlambda_i),
/// with partials by central differences of relative size `step_rel`.
pub fn poisson_bracket(
    f: &Observable,
    g: &Observable,
    config: &PhaseConfiguration,
    step_rel: f64,
) -> Result<Complex64> {
    let gf = scalar_gradient(f, config, step_rel)?;
    let gg = scalar_gradient(g, config, step_rel)?;
    Ok(bracket_from_gradients(config, &gf, &gg))
}

/// Gradients of all N action components at once: the linear solve already
/// returns the full vector, so one stencil pass serves every H_a.
/// Entry [a][k] differentiates H_a against coordinate k.
struct VectorGradient {
    d_x: Vec<Vec<Complex64>>,
    d_lambda: Vec<Vec<Complex64>>,
}

fn vector_gradient<F>(
    config: &PhaseConfiguration,
    step_rel: f64,
    dim: usize,
    mut eval: F,
) -> Result<VectorGradient>
where
    F: FnMut(&PhaseConfiguration) -> Result<Vec<Complex64>>,
{
    let n = config.len();
    let mut d_x = vec![vec![Complex64::new(0.0, 0.0); n]; dim];
    let mut d_lambda = vec![vec![Complex64::new(0.0, 0.0); n]; dim];
    for k in 0..n {
        let hx = x_step(config, k, step_rel);
        let up = eval(&perturb_x(config, k, hx)?)?;
        let down = eval(&perturb_x(config, k, -hx)?)?;
        for a in 0..dim {
            d_x[a][k] = (up[a] - down[a]) / (2.0 * hx);
        }

        let hl = lambda_step(config, k, step_rel);
        let up = eval(&perturb_lambda(config, k, hl))?;
        let down = eval(&perturb_lambda(config, k, -hl))?;
        for a in 0..dim {
            d_lambda[a][k] = (up[a] - down[a]) / (2.0 * hl);
        }
    }
    Ok(VectorGradient { d_x, d_lambda })
}

fn actions_gradient(config: &PhaseConfiguration, step_rel: f64) -> Result<VectorGradient> {
    let dim = config.len();
    vector_gradient(config, step_rel, dim, |c| {
        solve_actions(c)
            .map(|h| h.values().to_vec())
            .map_err(|e| Error::StencilFailure(format!("action solve on stencil: {e}")))
    })
}

fn row(g: &VectorGradient, a: usize) -> ScalarGradient {
    ScalarGradient {
        d_x: g.d_x[a].clone(),
        d_lambda: g.d_lambda[a].clone(),
    }
}

// --- verification suites -----------------------------------------------------

/// Parameters shared by the verification suites.
#[derive(Debug, Clone)]
pub struct VerifyParams {
    pub fd_step: f64,
    pub tol_commute: f64,
    pub tol_darboux: f64,
    pub policy: PathPolicy,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            fd_step: DEFAULT_FD_STEP,
            tol_commute: DEFAULT_TOL_COMMUTE,
            tol_darboux: DEFAULT_TOL_DARBOUX,
            policy: PathPolicy::default(),
        }
    }
}

/// Sample a configuration from H and report {H_a, H_b} for all pairs a < b.
/// Each pair passes when |{H_a, H_b}| <= tol_commute * max(1, |H|_inf^2).
pub fn verify_commutativity(
    curve: &HyperellipticCurve,
    spec: LieAlgebraSpec,
    h: &HamiltonianVector,
    seed: u64,
    params: &VerifyParams,
) -> Result<Vec<BracketReport>> {
    let config = sample_config(curve, spec, h, seed)?;
    let n = config.len();
    let grads = actions_gradient(&config, params.fd_step)?;
    let tol = params.tol_commute * h.max_abs().powi(2).max(1.0);

    let mut reports = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        let ga = row(&grads, a);
        for b in a + 1..n {
            let gb = row(&grads, b);
            let value = bracket_from_gradients(&config, &ga, &gb);
            reports.push(BracketReport::new(
                [a, b],
                [format!("H_{a}"), format!("H_{b}")],
                value,
                Complex64::new(0.0, 0.0),
                params.fd_step,
                tol,
            ));
        }
    }
    Ok(reports)
}

/// Angle vector as a function on phase space: recomputed from scratch at a
/// stencil configuration, including the action solve and the deterministic
/// path policy. Homotopy classes must match the reference descriptor.
fn angles_at(
    config: &PhaseConfiguration,
    policy: &PathPolicy,
    reference: &crate::geometry::PathDescriptor,
) -> Result<Vec<Complex64>> {
    let (angles, descriptor) = angle_coordinates_with_descriptor(config, policy)
        .map_err(|e| Error::StencilFailure(format!("angle evaluation on stencil: {e}")))?;
    if descriptor != *reference {
        return Err(Error::PathInstability(
            "a stencil perturbation changed the path policy's detour or sheet set".into(),
        ));
    }
    Ok(angles.values)
}

/// The full N x N matrix {H_a, phi_b}, reported row-major with target
/// delta_ab. On PathInstability the step shrinks by 4 and the run retries,
/// twice at most.
pub fn verify_darboux(
    curve: &HyperellipticCurve,
    spec: LieAlgebraSpec,
    h: &HamiltonianVector,
    seed: u64,
    params: &VerifyParams,
) -> Result<Vec<BracketReport>> {
    let config = sample_config(curve, spec, h, seed)?;
    let mut step = params.fd_step;
    let mut last_err = None;
    for _ in 0..3 {
        match darboux_matrix(&config, step, params) {
            Ok(reports) => return Ok(reports),
            Err(err @ Error::PathInstability(_)) => {
                last_err = Some(err);
                step /= 4.0;
            }
            Err(other) => return Err(other),
        }
    }
    Err(last_err.unwrap())
}

fn darboux_matrix(
    config: &PhaseConfiguration,
    step: f64,
    params: &VerifyParams,
) -> Result<Vec<BracketReport>> {
    let n = config.len();
    let (_, reference) = angle_coordinates_with_descriptor(config, &params.policy)?;

    let h_grads = actions_gradient(config, step)?;
    let phi_grads = vector_gradient(config, step, n, |c| {
        angles_at(c, &params.policy, &reference)
    })?;

    let mut reports = Vec::with_capacity(n * n);
    for a in 0..n {
        let ga = row(&h_grads, a);
        for b in 0..n {
            let gb = row(&phi_grads, b);
            let value = bracket_from_gradients(config, &ga, &gb);
            let target = if a == b {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            };
            reports.push(BracketReport::new(
                [a, b],
                [format!("H_{a}"), format!("phi_{b}")],
                value,
                target,
                step,
                params.tol_darboux,
            ));
        }
    }
    Ok(reports)
}
