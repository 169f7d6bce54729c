//! Coefficient spaces of the spectral curve and the spectral polynomial.
//!
//! Each invariant of degree d contributes the monomials
//! `x^k` for `0 <= k <= d(g-1)` (even block) and `y x^s` for
//! `0 <= s <= (d-1)(g-1) - 2` (odd block, empty when the bound is negative)
//! to its coefficient space. The per-invariant count is `(2d-1)(g-1)` and the
//! total is `N = dim(g) * (g-1)`.
//!
//! The spectral polynomial is
//! `R(x, y, lambda) = lambda^n + sum_i r_i(x, y) lambda^(n - d_i)`
//! with `r_i` expanded over the invariant's block with coefficients `+H`.
//! This "urav" sign convention is what the JSON schema tags; the alternative
//! convention `lambda^n = H...` differs by the sign of H.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::curve::{HyperellipticCurve, SheetPoint};
use crate::error::{Error, Result};
use crate::lie::{invariant_data, LieAlgebraSpec};
use crate::roots;
use crate::serde_util::{complex_pair, complex_pair_vec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MonomialKind {
    /// x^k
    Even,
    /// y x^s
    Odd,
}

/// One basis monomial of one invariant's coefficient space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BasisMonomial {
    /// 1-based index of the invariant (position in the degree list).
    #[serde(rename = "i")]
    pub invariant_index: usize,
    pub kind: MonomialKind,
    #[serde(rename = "exp")]
    pub exponent: u32,
}

impl BasisMonomial {
    /// Value of the monomial at a sheet point.
    pub fn eval(&self, pt: &SheetPoint) -> Complex64 {
        let xp = pt.x.powu(self.exponent);
        match self.kind {
            MonomialKind::Even => xp,
            MonomialKind::Odd => pt.y * xp,
        }
    }

    /// Total derivative along the base curve, with dy/dx = P'(x)/(2y).
    pub fn derivative_on_curve(
        &self,
        curve: &HyperellipticCurve,
        pt: &SheetPoint,
    ) -> Result<Complex64> {
        let e = self.exponent;
        let power_term = if e == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            pt.x.powu(e - 1) * e as f64
        };
        match self.kind {
            MonomialKind::Even => Ok(power_term),
            MonomialKind::Odd => {
                if pt.y.norm() == 0.0 {
                    return Err(Error::OnBranchPoint { x: pt.x });
                }
                let dy = curve.eval_derivative(pt.x) / (pt.y * 2.0);
                Ok(pt.y * power_term + dy * pt.x.powu(e))
            }
        }
    }
}

/// Ordered basis of all coefficient spaces: invariants ascending by degree,
/// even block (k ascending) then odd block (s ascending) per invariant.
/// The order fixes the meaning of [`HamiltonianVector`] components and the
/// column order of the action solve.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientLayout {
    spec: LieAlgebraSpec,
    genus: u32,
    degrees: Vec<u32>,
    dim_g: u32,
    n_standard: u32,
    monomials: Vec<BasisMonomial>,
    block_starts: Vec<usize>,
}

impl CoefficientLayout {
    /// Enumerate the basis for a spec and genus (genus >= 2).
    pub fn new(spec: LieAlgebraSpec, genus: u32) -> Result<Self> {
        if genus < 2 {
            return Err(Error::InvalidInput(format!(
                "genus {genus} < 2: no basis monomials exist"
            )));
        }
        let data = invariant_data(spec);
        let gm1 = genus - 1;

        let mut monomials = Vec::new();
        let mut block_starts = Vec::with_capacity(data.degrees.len() + 1);
        for (idx, &d) in data.degrees.iter().enumerate() {
            block_starts.push(monomials.len());
            let invariant_index = idx + 1;
            for k in 0..=d * gm1 {
                monomials.push(BasisMonomial {
                    invariant_index,
                    kind: MonomialKind::Even,
                    exponent: k,
                });
            }
            let odd_bound = (d as i64 - 1) * gm1 as i64 - 2;
            for s in 0..=odd_bound {
                monomials.push(BasisMonomial {
                    invariant_index,
                    kind: MonomialKind::Odd,
                    exponent: s as u32,
                });
            }
            debug_assert_eq!(
                monomials.len() - block_starts[idx],
                ((2 * d - 1) * gm1) as usize
            );
        }
        block_starts.push(monomials.len());
        debug_assert_eq!(monomials.len(), (data.dim_g * gm1) as usize);

        Ok(Self {
            spec,
            genus,
            degrees: data.degrees,
            dim_g: data.dim_g,
            n_standard: data.n_standard,
            monomials,
            block_starts,
        })
    }

    /// Total number of monomials, N = dim(g) * (g-1).
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn spec(&self) -> LieAlgebraSpec {
        self.spec
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// Invariant degrees d_1 < ... < d_l.
    pub fn degrees(&self) -> &[u32] {
        &self.degrees
    }

    pub fn dim_g(&self) -> u32 {
        self.dim_g
    }

    /// Dimension n of the standard representation: the lambda-degree of R.
    pub fn n_standard(&self) -> u32 {
        self.n_standard
    }

    pub fn monomials(&self) -> &[BasisMonomial] {
        &self.monomials
    }

    /// Monomials of invariant i (1-based).
    pub fn block(&self, invariant_index: usize) -> &[BasisMonomial] {
        &self.monomials[self.block_starts[invariant_index - 1]..self.block_starts[invariant_index]]
    }

    pub fn block_range(&self, invariant_index: usize) -> std::ops::Range<usize> {
        self.block_starts[invariant_index - 1]..self.block_starts[invariant_index]
    }

    /// Invariant degree d(j) attached to flat monomial index j.
    pub fn invariant_degree(&self, j: usize) -> u32 {
        self.degrees[self.monomials[j].invariant_index - 1]
    }

    /// Exponent n - d(j) multiplying monomial j in the spectral polynomial.
    pub fn lambda_exponent(&self, j: usize) -> u32 {
        self.n_standard - self.invariant_degree(j)
    }
}

/// The N Hamiltonian values, indexed by a [`CoefficientLayout`].
///
/// JSON form: `{"convention": "urav", "values": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawHamiltonians", into = "RawHamiltonians")]
pub struct HamiltonianVector {
    values: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawHamiltonians {
    convention: Option<String>,
    #[serde(with = "complex_pair_vec")]
    values: Vec<Complex64>,
}

impl TryFrom<RawHamiltonians> for HamiltonianVector {
    type Error = Error;

    fn try_from(raw: RawHamiltonians) -> Result<Self> {
        match raw.convention.as_deref() {
            None | Some("urav") => Ok(HamiltonianVector::new(raw.values)),
            Some(other) => Err(Error::InvalidInput(format!(
                "unknown Hamiltonian sign convention {other:?} (expected \"urav\")"
            ))),
        }
    }
}

impl From<HamiltonianVector> for RawHamiltonians {
    fn from(h: HamiltonianVector) -> Self {
        RawHamiltonians {
            convention: Some("urav".into()),
            values: h.values,
        }
    }
}

impl HamiltonianVector {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// A point of the total space carrying both fiber coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPoint {
    #[serde(with = "complex_pair")]
    pub x: Complex64,
    #[serde(with = "complex_pair")]
    pub y: Complex64,
    #[serde(with = "complex_pair")]
    pub lambda: Complex64,
}

impl SpectralPoint {
    pub fn new(x: Complex64, y: Complex64, lambda: Complex64) -> Self {
        Self { x, y, lambda }
    }

    pub fn sheet_point(&self) -> SheetPoint {
        SheetPoint::new(self.x, self.y)
    }
}

/// Evaluation bundle for R(x, y, lambda; H) = lambda^n + sum r_i lambda^(n-d_i).
#[derive(Debug, Clone, Copy)]
pub struct SpectralCurve<'a> {
    layout: &'a CoefficientLayout,
    h: &'a HamiltonianVector,
}

impl<'a> SpectralCurve<'a> {
    pub fn new(layout: &'a CoefficientLayout, h: &'a HamiltonianVector) -> Result<Self> {
        if h.len() != layout.len() {
            return Err(Error::InvalidInput(format!(
                "Hamiltonian vector has {} components, layout needs {}",
                h.len(),
                layout.len()
            )));
        }
        Ok(Self { layout, h })
    }

    pub fn layout(&self) -> &CoefficientLayout {
        self.layout
    }

    pub fn hamiltonians(&self) -> &HamiltonianVector {
        self.h
    }

    /// r_i(x, y): the coefficient of lambda^(n - d_i).
    pub fn invariant_coefficient(&self, invariant_index: usize, pt: &SheetPoint) -> Complex64 {
        let range = self.layout.block_range(invariant_index);
        let mut acc = Complex64::new(0.0, 0.0);
        for j in range {
            acc += self.h.values()[j] * self.layout.monomials()[j].eval(pt);
        }
        acc
    }

    /// R(x, y, lambda).
    pub fn eval(&self, pt: &SpectralPoint) -> Complex64 {
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let mut acc = pt.lambda.powu(n);
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            acc += self.invariant_coefficient(idx + 1, &sheet) * pt.lambda.powu(n - d);
        }
        acc
    }

    /// dR/dlambda = n lambda^(n-1) + sum (n - d_i) r_i lambda^(n - d_i - 1).
    pub fn lambda_derivative(&self, pt: &SpectralPoint) -> Complex64 {
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let mut acc = pt.lambda.powu(n - 1) * n as f64;
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            let e = n - d;
            if e > 0 {
                acc +=
                    self.invariant_coefficient(idx + 1, &sheet) * pt.lambda.powu(e - 1) * e as f64;
            }
        }
        acc
    }

    /// Total x-derivative of R along the base curve at fixed lambda,
    /// including the chain term dy/dx = P'(x)/(2y) in the odd monomials.
    pub fn x_derivative_on_curve(
        &self,
        curve: &HyperellipticCurve,
        pt: &SpectralPoint,
    ) -> Result<Complex64> {
        if pt.y.norm() == 0.0 {
            return Err(Error::OnBranchPoint { x: pt.x });
        }
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            let mut dr = Complex64::new(0.0, 0.0);
            for j in self.layout.block_range(idx + 1) {
                dr += self.h.values()[j]
                    * self.layout.monomials()[j].derivative_on_curve(curve, &sheet)?;
            }
            acc += dr * pt.lambda.powu(n - d);
        }
        Ok(acc)
    }

    /// Magnitude scale of dR/dlambda at pt (sum of term magnitudes).
    pub fn lambda_derivative_scale(&self, pt: &SpectralPoint) -> f64 {
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let r = pt.lambda.norm();
        let mut acc = n as f64 * r.powi(n as i32 - 1);
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            let e = n - d;
            if e > 0 {
                acc += self.invariant_coefficient(idx + 1, &sheet).norm()
                    * e as f64
                    * r.powi(e as i32 - 1);
            }
        }
        acc.max(1.0)
    }

    /// d^2 R / dlambda^2.
    pub fn lambda_second_derivative(&self, pt: &SpectralPoint) -> Complex64 {
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let mut acc = if n >= 2 {
            pt.lambda.powu(n - 2) * (n * (n - 1)) as f64
        } else {
            Complex64::new(0.0, 0.0)
        };
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            let e = n - d;
            if e >= 2 {
                acc += self.invariant_coefficient(idx + 1, &sheet)
                    * pt.lambda.powu(e - 2)
                    * (e * (e - 1)) as f64;
            }
        }
        acc
    }

    /// Total x-derivative (along the base curve) of dR/dlambda.
    pub fn lambda_derivative_x_on_curve(
        &self,
        curve: &HyperellipticCurve,
        pt: &SpectralPoint,
    ) -> Result<Complex64> {
        if pt.y.norm() == 0.0 {
            return Err(Error::OnBranchPoint { x: pt.x });
        }
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let mut acc = Complex64::new(0.0, 0.0);
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            let e = n - d;
            if e > 0 {
                let mut dr = Complex64::new(0.0, 0.0);
                for j in self.layout.block_range(idx + 1) {
                    dr += self.h.values()[j]
                        * self.layout.monomials()[j].derivative_on_curve(curve, &sheet)?;
                }
                acc += dr * pt.lambda.powu(e - 1) * e as f64;
            }
        }
        Ok(acc)
    }

    /// Low coefficients c_0..c_{n-1} of R viewed as a monic polynomial in
    /// lambda over the sheet point.
    pub fn lambda_poly_coeffs(&self, pt: &SheetPoint) -> Vec<Complex64> {
        let n = self.layout.n_standard() as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            coeffs[n - d as usize] += self.invariant_coefficient(idx + 1, pt);
        }
        coeffs
    }

    /// The n residual-verified lambda-roots of R over a sheet point.
    pub fn lambda_roots(&self, pt: &SheetPoint) -> Result<Vec<Complex64>> {
        roots::monic_roots(&self.lambda_poly_coeffs(pt))
    }

    /// Warm-started variant for continuation along a path.
    pub fn lambda_roots_warm(
        &self,
        pt: &SheetPoint,
        guesses: &[Complex64],
    ) -> Result<Vec<Complex64>> {
        roots::monic_roots_with_guesses(&self.lambda_poly_coeffs(pt), Some(guesses))
    }

    /// Magnitude scale of R at pt, for residual checks.
    pub fn eval_scale(&self, pt: &SpectralPoint) -> f64 {
        let sheet = pt.sheet_point();
        let n = self.layout.n_standard();
        let r = pt.lambda.norm();
        let mut acc = r.powi(n as i32);
        for (idx, &d) in self.layout.degrees().iter().enumerate() {
            acc += self.invariant_coefficient(idx + 1, &sheet).norm() * r.powi((n - d) as i32);
        }
        acc.max(1.0)
    }

    /// |R| at the point, relative to the evaluation scale.
    pub fn relative_residual(&self, pt: &SpectralPoint) -> f64 {
        self.eval(pt).norm() / self.eval_scale(pt)
    }
}
