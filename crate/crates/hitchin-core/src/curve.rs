//! The hyperelliptic base curve y^2 = P(x) with P monic of degree 2g+1,
//! its branch points, and sheet-consistent continuation of y.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots;
use crate::serde_util::{complex_pair, complex_pair_vec};

/// Default branch-point separation tolerance factor: two roots closer than
/// `1e-8 * (1 + max|root|)` make the curve degenerate.
pub const BRANCH_SEPARATION_FACTOR: f64 = 1e-8;

/// A point (x, y) on the base curve with a definite sheet choice for y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    #[serde(with = "complex_pair")]
    pub x: Complex64,
    #[serde(with = "complex_pair")]
    pub y: Complex64,
}

impl SheetPoint {
    pub fn new(x: Complex64, y: Complex64) -> Self {
        Self { x, y }
    }
}

/// y^2 = x^(2g+1) + sum a_i x^i, with all 2g+1 roots of P simple.
///
/// Branch points are solved once at construction and cached; the point over
/// x = infinity is implicit (odd degree) and never listed.
///
/// JSON form: `{"genus": g, "coeffs": [[re, im], ...]}` with coeffs ordered
/// a_0..a_{2g}.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "RawCurve", into = "RawCurve")]
pub struct HyperellipticCurve {
    genus: u32,
    coeffs: Vec<Complex64>,
    branch_points: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawCurve {
    genus: u32,
    #[serde(with = "complex_pair_vec")]
    coeffs: Vec<Complex64>,
}

impl TryFrom<RawCurve> for HyperellipticCurve {
    type Error = Error;

    fn try_from(raw: RawCurve) -> Result<Self> {
        HyperellipticCurve::new(raw.genus, raw.coeffs)
    }
}

impl From<HyperellipticCurve> for RawCurve {
    fn from(curve: HyperellipticCurve) -> Self {
        RawCurve {
            genus: curve.genus,
            coeffs: curve.coeffs,
        }
    }
}

impl HyperellipticCurve {
    /// Build and validate a curve: genus >= 2, exactly 2g+1 coefficients
    /// a_0..a_{2g}, and simple, well-separated roots of P.
    pub fn new(genus: u32, coeffs: Vec<Complex64>) -> Result<Self> {
        if genus < 2 {
            return Err(Error::DegenerateCurve(format!(
                "genus {genus} < 2: the coefficient spaces are empty below genus 2"
            )));
        }
        let expected = (2 * genus + 1) as usize;
        if coeffs.len() != expected {
            return Err(Error::DegenerateCurve(format!(
                "genus {genus} needs {expected} coefficients a_0..a_{}, got {}",
                2 * genus,
                coeffs.len()
            )));
        }

        let branch_points = solve_branch_points(&coeffs)?;
        Ok(Self {
            genus,
            coeffs,
            branch_points,
        })
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Coefficients a_0..a_{2g} of the non-leading terms.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// The 2g+1 finite branch points (roots of P), sorted by (re, im).
    pub fn branch_points(&self) -> &[Complex64] {
        &self.branch_points
    }

    pub fn max_branch_modulus(&self) -> f64 {
        self.branch_points
            .iter()
            .map(|b| b.norm())
            .fold(0.0, f64::max)
    }

    /// P(x) by Horner evaluation.
    pub fn eval(&self, x: Complex64) -> Complex64 {
        roots::eval_monic(&self.coeffs, x)
    }

    /// P'(x).
    pub fn eval_derivative(&self, x: Complex64) -> Complex64 {
        roots::eval_monic_derivative(&self.coeffs, x)
    }

    /// Magnitude scale of P at x, for residual tests.
    pub fn eval_scale(&self, x: Complex64) -> f64 {
        roots::eval_scale(&self.coeffs, x)
    }

    /// Whether (x, y) satisfies y^2 = P(x) to the relative residual `tol`.
    pub fn contains(&self, pt: &SheetPoint, tol: f64) -> bool {
        (pt.y * pt.y - self.eval(pt.x)).norm() <= tol * self.eval_scale(pt.x).max(pt.y.norm_sqr())
    }

    /// The y-value over `x` on the sheet closest to `hint`.
    pub fn y_near(&self, x: Complex64, hint: Complex64) -> Complex64 {
        let s = self.eval(x).sqrt();
        if (s - hint).norm() <= (-s - hint).norm() {
            s
        } else {
            -s
        }
    }
}

fn solve_branch_points(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut pts = roots::monic_roots(coeffs)?;
    pts.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());

    let max_mod = pts.iter().map(|p| p.norm()).fold(0.0, f64::max);
    let separation = BRANCH_SEPARATION_FACTOR * (1.0 + max_mod);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if d <= separation {
                return Err(Error::DegenerateCurve(format!(
                    "branch points {} and {} are {d:.3e} apart (separation tolerance {separation:.3e})",
                    pts[i], pts[j]
                )));
            }
        }
    }
    Ok(pts)
}

/// Continue y one step along the base curve from a known sheet point.
///
/// The first-order predictor y + P'(x)/(2y) dx selects between the two
/// square roots of P(x_next). If the two candidates are closer to each other
/// than twice the predictor's distance to the nearer one, the step crossed
/// too near a branch point and the caller must subdivide or reroute.
pub fn y_continuation_step(
    curve: &HyperellipticCurve,
    from: &SheetPoint,
    x_next: Complex64,
) -> Result<SheetPoint> {
    let dx = x_next - from.x;
    let predictor = if from.y.norm() > 0.0 {
        from.y + curve.eval_derivative(from.x) / (from.y * 2.0) * dx
    } else {
        from.y
    };

    let s = curve.eval(x_next).sqrt();
    let d_plus = (s - predictor).norm();
    let d_minus = (-s - predictor).norm();
    let (y_next, err) = if d_plus <= d_minus {
        (s, d_plus)
    } else {
        (-s, d_minus)
    };

    // Candidate roots are 2|s| apart.
    let gap = 2.0 * s.norm();
    let floor = 1e-13 * (1.0 + curve.eval_scale(x_next).sqrt());
    if gap < 2.0 * err || gap < floor {
        return Err(Error::SheetAmbiguity { x: x_next });
    }
    Ok(SheetPoint::new(x_next, y_next))
}

/// Continue y along a polyline with adaptive step splitting; used by tests
/// and the monodromy checks. Returns the endpoint.
pub fn continue_y_polyline(
    curve: &HyperellipticCurve,
    start: &SheetPoint,
    waypoints: &[Complex64],
) -> Result<SheetPoint> {
    let mut current = *start;
    for &target in waypoints {
        let mut t = 0.0f64;
        let mut h = 0.25f64;
        let leg_start = current.x;
        let leg = target - leg_start;
        if leg.norm() == 0.0 {
            continue;
        }
        while t < 1.0 {
            let step = h.min(1.0 - t);
            let x_next = leg_start + leg * (t + step);
            match y_continuation_step(curve, &current, x_next) {
                Ok(next) => {
                    current = next;
                    t += step;
                    h = (h * 1.5).min(0.25);
                }
                Err(Error::SheetAmbiguity { .. }) if h > 1e-9 => {
                    h *= 0.5;
                }
                Err(e) => return Err(e),
            }
        }
    }
    Ok(current)
}
