//! Complex polynomial root finding.
//!
//! Primary method is Aberth-Ehrlich simultaneous iteration; if it does not
//! reach the residual target the solver falls back to eigenvalues of the
//! companion matrix (complex Hessenberg QR with Wilkinson shifts). Degrees
//! here stay small (<= ~21), so both methods are run dense.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative residual accepted for a converged root: |p(z)| <= RESIDUAL_TOL * scale(p, z).
pub const RESIDUAL_TOL: f64 = 1e-12;

const MAX_ABERTH_ITERATIONS: u32 = 200;
const MAX_QR_SWEEPS: u32 = 60;

/// Evaluate a monic polynomial z^n + sum c_k z^k given the low coefficients
/// `c_0..c_{n-1}`.
pub fn eval_monic(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Derivative of the same monic polynomial.
pub fn eval_monic_derivative(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let n = coeffs.len();
    let mut acc = Complex64::new(n as f64, 0.0);
    for k in (1..n).rev() {
        acc = acc * z + coeffs[k] * k as f64;
    }
    acc
}

/// Magnitude scale of the evaluation sum(|c_k| |z|^k) + |z|^n; the natural
/// yardstick for residual tests.
pub fn eval_scale(coeffs: &[Complex64], z: Complex64) -> f64 {
    let r = z.norm();
    let mut acc = 1.0f64;
    for &c in coeffs.iter().rev() {
        acc = acc * r + c.norm();
    }
    acc.max(1.0)
}

fn residual_ok(coeffs: &[Complex64], z: Complex64) -> bool {
    eval_monic(coeffs, z).norm() <= RESIDUAL_TOL * eval_scale(coeffs, z)
}

/// All roots of the monic polynomial z^n + sum over k < n of coeffs\[k\] z^k.
///
/// Roots are residual-verified; order is deterministic but unspecified.
pub fn monic_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    monic_roots_with_guesses(coeffs, None)
}

/// Same as [`monic_roots`] but warm-started from `guesses` (one per root),
/// which continuation code uses to track fibers along a path.
pub fn monic_roots_with_guesses(
    coeffs: &[Complex64],
    guesses: Option<&[Complex64]>,
) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![-coeffs[0]]);
    }

    let mut z = match guesses {
        Some(g) if g.len() == n => g.to_vec(),
        _ => initial_guesses(coeffs),
    };

    if aberth(coeffs, &mut z) {
        polish(coeffs, &mut z);
        if z.iter().all(|&root| residual_ok(coeffs, root)) {
            return Ok(z);
        }
    }

    // Fallback: companion-matrix eigenvalues.
    let mut roots = companion_eigenvalues(coeffs)?;
    polish(coeffs, &mut roots);
    for &root in &roots {
        if !residual_ok(coeffs, root) {
            return Err(Error::RootSolveFailure(format!(
                "companion fallback left residual {:.3e} at z = {}",
                eval_monic(coeffs, root).norm(),
                root
            )));
        }
    }
    Ok(roots)
}

/// Initial guesses on a circle around the root centroid, radius from the
/// Cauchy bound, with an angular offset to avoid symmetry stalls.
fn initial_guesses(coeffs: &[Complex64]) -> Vec<Complex64> {
    let n = coeffs.len();
    let center = -coeffs[n - 1] / n as f64;
    let radius = 1.0 + coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    (0..n)
        .map(|k| {
            let angle = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            center + Complex64::from_polar(radius, angle)
        })
        .collect()
}

fn aberth(coeffs: &[Complex64], z: &mut [Complex64]) -> bool {
    let n = z.len();
    for _ in 0..MAX_ABERTH_ITERATIONS {
        let mut converged = true;
        for k in 0..n {
            let p = eval_monic(coeffs, z[k]);
            if p.norm() > RESIDUAL_TOL * eval_scale(coeffs, z[k]) {
                converged = false;
            }
            let dp = eval_monic_derivative(coeffs, z[k]);
            if dp.norm() == 0.0 {
                // Nudge off a critical point.
                z[k] += Complex64::new(1e-8, 1e-8) * (1.0 + z[k].norm());
                converged = false;
                continue;
            }
            let w = p / dp;
            let mut repulsion = Complex64::new(0.0, 0.0);
            for j in 0..n {
                if j != k {
                    let d = z[k] - z[j];
                    if d.norm() > 0.0 {
                        repulsion += d.inv();
                    }
                }
            }
            let denom = Complex64::new(1.0, 0.0) - w * repulsion;
            let step = if denom.norm() > 1e-300 { w / denom } else { w };
            z[k] -= step;
            if step.norm() > 1e-15 * (1.0 + z[k].norm()) {
                converged = false;
            }
        }
        if converged {
            return true;
        }
    }
    false
}

/// A couple of Newton steps per root to pull residuals to rounding level.
fn polish(coeffs: &[Complex64], z: &mut [Complex64]) {
    for root in z.iter_mut() {
        for _ in 0..3 {
            let p = eval_monic(coeffs, *root);
            let dp = eval_monic_derivative(coeffs, *root);
            if dp.norm() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *root -= step;
            if step.norm() <= f64::EPSILON * (1.0 + root.norm()) {
                break;
            }
        }
    }
}

// --- companion-matrix eigenvalues -----------------------------------------

struct Givens {
    c: f64,
    s: Complex64,
}

/// Rotation with real c and complex s such that
/// [c, s; -conj(s), c] * [a; b] = [r; 0].
fn givens(a: Complex64, b: Complex64) -> (Givens, Complex64) {
    if b.norm() == 0.0 {
        return (
            Givens {
                c: 1.0,
                s: Complex64::new(0.0, 0.0),
            },
            a,
        );
    }
    if a.norm() == 0.0 {
        let s = b.conj() / b.norm();
        return (Givens { c: 0.0, s }, Complex64::new(b.norm(), 0.0));
    }
    let rho = (a.norm_sqr() + b.norm_sqr()).sqrt();
    let phase = a / a.norm();
    let c = a.norm() / rho;
    let s = phase * b.conj() / rho;
    (Givens { c, s }, phase * rho)
}

fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - det * 4.0).sqrt();
    let l1 = (tr + disc) * 0.5;
    let l2 = (tr - disc) * 0.5;
    (l1, l2)
}

/// Eigenvalues of the companion matrix of the monic polynomial via explicit
/// shifted QR on the Hessenberg form.
#[allow(clippy::needless_range_loop)] // index loops mirror the matrix algebra
fn companion_eigenvalues(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let n = coeffs.len();
    let mut h = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for i in 1..n {
        h[i][i - 1] = Complex64::new(1.0, 0.0);
    }
    for i in 0..n {
        h[i][n - 1] = -coeffs[i];
    }

    let mut eigenvalues = Vec::with_capacity(n);
    let mut m = n;
    let mut sweeps = 0u32;
    let total_budget = MAX_QR_SWEEPS * n as u32;

    while m > 0 {
        if m == 1 {
            eigenvalues.push(h[0][0]);
            m = 0;
            continue;
        }

        // Deflate negligible subdiagonal entries at the active block's foot.
        let tol = |i: usize| f64::EPSILON * (h[i - 1][i - 1].norm() + h[i][i].norm()).max(1e-300);
        if h[m - 1][m - 2].norm() <= tol(m - 1) {
            eigenvalues.push(h[m - 1][m - 1]);
            m -= 1;
            continue;
        }
        if m == 2 || h[m - 2][m - 3].norm() <= tol(m - 2) {
            // 2x2 block at the foot resolves in closed form.
            let (l1, l2) = eig2(
                h[m - 2][m - 2],
                h[m - 2][m - 1],
                h[m - 1][m - 2],
                h[m - 1][m - 1],
            );
            eigenvalues.push(l1);
            eigenvalues.push(l2);
            m -= 2;
            continue;
        }

        sweeps += 1;
        if sweeps > total_budget {
            return Err(Error::RootSolveFailure(
                "companion QR exceeded its sweep budget".into(),
            ));
        }

        // Wilkinson shift from the trailing 2x2.
        let (l1, l2) = eig2(
            h[m - 2][m - 2],
            h[m - 2][m - 1],
            h[m - 1][m - 2],
            h[m - 1][m - 1],
        );
        let target = h[m - 1][m - 1];
        let sigma = if (l1 - target).norm() <= (l2 - target).norm() {
            l1
        } else {
            l2
        };

        for i in 0..m {
            h[i][i] -= sigma;
        }
        // QR by Givens on the Hessenberg band, then RQ.
        let mut rotations = Vec::with_capacity(m - 1);
        for k in 0..m - 1 {
            let (g, r) = givens(h[k][k], h[k + 1][k]);
            h[k][k] = r;
            h[k + 1][k] = Complex64::new(0.0, 0.0);
            for j in k + 1..m {
                let top = h[k][j];
                let bottom = h[k + 1][j];
                h[k][j] = top * g.c + bottom * g.s;
                h[k + 1][j] = -top * g.s.conj() + bottom * g.c;
            }
            rotations.push(g);
        }
        for (k, g) in rotations.iter().enumerate() {
            for row in h.iter_mut().take((k + 2).min(m)) {
                let left = row[k];
                let right = row[k + 1];
                row[k] = left * g.c + right * g.s.conj();
                row[k + 1] = -left * g.s + right * g.c;
            }
        }
        for i in 0..m {
            h[i][i] += sigma;
        }
    }

    Ok(eigenvalues)
}
