//! Adaptive Gauss-Kronrod quadrature for complex vector-valued integrands
//! on a real parameter interval.
//!
//! A 7-point Gauss / 15-point Kronrod pair supplies the per-interval error
//! estimate; the worst interval is bisected until every component of the
//! summed error estimate meets the target.

// Node tables carry the published digits; rustc rounds them to f64.
#![allow(clippy::excessive_precision)]

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Positive Kronrod abscissae (the negatives mirror them); index 7 is 0.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the embedded 7-point rule (odd-index abscissae of `XGK`).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadratureParams {
    /// Absolute error target per component over the whole interval.
    pub target_abs_error: f64,
    /// Bisection budget before giving up.
    pub max_subdivisions: usize,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        Self {
            target_abs_error: 1e-9,
            max_subdivisions: 2000,
        }
    }
}

struct Segment {
    a: f64,
    b: f64,
    value: Vec<Complex64>,
    error: f64,
}

/// The usual guard against the raw |K - G| difference underestimating the
/// error on rough integrands: inflate toward the mean absolute deviation
/// `resasc`, and floor at rounding level of the absolute integral `resabs`.
fn rescale_error(err: f64, resabs: f64, resasc: f64) -> f64 {
    let mut scaled = err.abs();
    if resasc != 0.0 && scaled != 0.0 {
        let ratio = (200.0 * scaled / resasc).powf(1.5);
        scaled = if ratio < 1.0 { resasc * ratio } else { resasc };
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * resabs);
    }
    scaled
}

fn gk15<F>(f: &mut F, dim: usize, a: f64, b: f64) -> Result<Segment>
where
    F: FnMut(f64) -> Result<Vec<Complex64>>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);

    let mut kronrod = vec![Complex64::new(0.0, 0.0); dim];
    let mut gauss = vec![Complex64::new(0.0, 0.0); dim];
    let mut resabs = vec![0.0f64; dim];
    let mut samples: Vec<(usize, Vec<Complex64>)> = Vec::with_capacity(15);

    let mut eval = |t: f64| -> Result<Vec<Complex64>> {
        let v = f(t)?;
        if v.len() != dim {
            return Err(Error::QuadratureFailure(format!(
                "integrand returned {} components, expected {dim}",
                v.len()
            )));
        }
        Ok(v)
    };

    for (k, &x) in XGK.iter().enumerate() {
        if k == 7 {
            let v = eval(center)?;
            for (i, &vi) in v.iter().enumerate() {
                kronrod[i] += vi * WGK[7];
                gauss[i] += vi * WG[3];
                resabs[i] += vi.norm() * WGK[7];
            }
            samples.push((7, v));
        } else {
            let left = eval(center - half * x)?;
            let right = eval(center + half * x)?;
            for i in 0..dim {
                kronrod[i] += (left[i] + right[i]) * WGK[k];
                resabs[i] += (left[i].norm() + right[i].norm()) * WGK[k];
            }
            if k % 2 == 1 {
                let wg = WG[k / 2];
                for i in 0..dim {
                    gauss[i] += (left[i] + right[i]) * wg;
                }
            }
            samples.push((k, left));
            samples.push((k, right));
        }
    }

    let mut error = 0.0f64;
    for i in 0..dim {
        let mean = kronrod[i] * 0.5;
        let resasc: f64 = samples
            .iter()
            .map(|(k, v)| WGK[*k] * (v[i] - mean).norm())
            .sum();
        let raw = (kronrod[i] - gauss[i]).norm() * half.abs();
        kronrod[i] *= half;
        error = error.max(rescale_error(
            raw,
            resabs[i] * half.abs(),
            resasc * half.abs(),
        ));
    }
    Ok(Segment {
        a,
        b,
        value: kronrod,
        error,
    })
}

/// Integrate a complex vector-valued function over [a, b].
///
/// Returns the component values and the summed error estimate (max over
/// components). Fails with [`Error::QuadratureFailure`] when the target
/// cannot be met within the subdivision budget.
pub fn integrate_vector<F>(
    mut f: F,
    dim: usize,
    a: f64,
    b: f64,
    params: &QuadratureParams,
) -> Result<(Vec<Complex64>, f64)>
where
    F: FnMut(f64) -> Result<Vec<Complex64>>,
{
    if dim == 0 || a == b {
        return Ok((vec![Complex64::new(0.0, 0.0); dim], 0.0));
    }

    let mut segments = vec![gk15(&mut f, dim, a, b)?];
    let mut subdivisions = 0usize;

    loop {
        let total_error: f64 = segments.iter().map(|s| s.error).sum();
        if total_error <= params.target_abs_error {
            break;
        }
        if subdivisions >= params.max_subdivisions {
            return Err(Error::QuadratureFailure(format!(
                "error estimate {total_error:.3e} above target {:.3e} after {subdivisions} subdivisions",
                params.target_abs_error
            )));
        }
        let worst = segments
            .iter()
            .enumerate()
            .max_by(|(_, s), (_, t)| s.error.partial_cmp(&t.error).unwrap())
            .map(|(i, _)| i)
            .unwrap();
        let Segment { a, b, .. } = segments.swap_remove(worst);
        let mid = 0.5 * (a + b);
        if mid == a || mid == b {
            return Err(Error::QuadratureFailure(
                "interval collapsed below floating-point resolution".into(),
            ));
        }
        segments.push(gk15(&mut f, dim, a, mid)?);
        segments.push(gk15(&mut f, dim, mid, b)?);
        subdivisions += 1;
    }

    let mut value = vec![Complex64::new(0.0, 0.0); dim];
    let mut error = 0.0;
    for s in &segments {
        for (i, &vi) in s.value.iter().enumerate() {
            value[i] += vi;
        }
        error += s.error;
    }
    Ok((value, error))
}

/// Scalar convenience wrapper.
pub fn integrate<F>(mut f: F, a: f64, b: f64, params: &QuadratureParams) -> Result<(Complex64, f64)>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    let (v, err) = integrate_vector(|t| f(t).map(|z| vec![z]), 1, a, b, params)?;
    Ok((v[0], err))
}
