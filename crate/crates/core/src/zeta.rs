//! Ruelle zeta functions: periodic-orbit sums, power-series coefficients of
//! the reciprocal zeta function, the characteristic-polynomial route for
//! locally constant potentials, the Weierstrass product form and the
//! trace-formula defect tables.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::potential::{project_em, Potential};
use crate::shift::{MarkovMeasure, TransitionMatrix, DEFAULT_ENUMERATION_CAP};
use crate::transfer::{build_matrix, spectrum_of_matrix, TransferMatrix};

/// Default truncation degree of zeta power series.
pub const DEFAULT_SERIES_DEGREE: usize = 16;

/// How the coefficients of a series were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientSource {
    OrbitSeries,
    Determinant,
    Product,
}

/// Truncated power series of 1/zeta_f with the orbit sums that produced it.
#[derive(Debug, Clone)]
pub struct ZetaSeries {
    /// c_0 .. c_Q with c_0 = 1.
    pub coefficients: Vec<Complex64>,
    /// Z_1 .. Z_Q.
    pub orbit_sums: Vec<Complex64>,
    /// Truncation degree Q.
    pub truncation: usize,
    /// Provenance, one tag per coefficient.
    pub sources: Vec<CoefficientSource>,
}

impl ZetaSeries {
    pub fn from_orbit_sums(orbit_sums: Vec<Complex64>) -> Self {
        let coefficients = zeta_coeffs_from_orbits(&orbit_sums);
        let truncation = orbit_sums.len();
        ZetaSeries {
            sources: vec![CoefficientSource::OrbitSeries; coefficients.len()],
            coefficients,
            orbit_sums,
            truncation,
        }
    }
}

/// A periodic-orbit sum Z_q with its evaluation error bound.
#[derive(Debug, Clone, Copy)]
pub struct OrbitSum {
    pub value: Complex64,
    /// tol * e^(q max Re f): each Birkhoff sum is computed to tol/#Per_q.
    pub error_bound: f64,
}

/// Z_q = sum over period-q points of e^(S_q f), by exhaustive enumeration.
pub fn orbit_sum(f: &Potential, a: &TransitionMatrix, q: usize, tol: f64) -> Result<OrbitSum> {
    let points = a.periodic_points(q, DEFAULT_ENUMERATION_CAP)?;
    let each = tol / points.len().max(1) as f64;
    let mut value = Complex64::default();
    for p in &points {
        value += f.birkhoff_sum(a, p, q, each)?.exp();
    }
    let max_re = f.max_re_bound(a, 8.min(q + 2))?;
    Ok(OrbitSum {
        value,
        error_bound: tol * (q as f64 * max_re).exp(),
    })
}

/// Coefficients of exp(-sum_{q<=Q} Z_q z^q / q) through degree Q, by the
/// Newton-identity recursion c_k = -(1/k) sum_{j=1..k} Z_j c_{k-j}.
pub fn zeta_coeffs_from_orbits(orbit_sums: &[Complex64]) -> Vec<Complex64> {
    let q_max = orbit_sums.len();
    let mut coeffs = vec![Complex64::default(); q_max + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    for k in 1..=q_max {
        let mut acc = Complex64::default();
        for j in 1..=k {
            acc += orbit_sums[j - 1] * coeffs[k - j];
        }
        coeffs[k] = -acc / k as f64;
    }
    coeffs
}

/// Coefficients of det(I - zM) through degree Q by the Faddeev-LeVerrier
/// recursion B_1 = M, c_k = -tr(B_k)/k, B_{k+1} = M (B_k + c_k I).
pub fn zeta_coeffs_from_determinant(tm: &TransferMatrix, q_max: usize) -> Vec<Complex64> {
    let dim = tm.dim();
    let deg = q_max.min(dim);
    let mut coeffs = vec![Complex64::default(); q_max + 1];
    coeffs[0] = Complex64::new(1.0, 0.0);
    let m = tm.matrix();
    let mut b = m.clone();
    #[allow(clippy::needless_range_loop)]
    for k in 1..=deg {
        let tr: Complex64 = (0..dim).map(|i| b[(i, i)]).sum();
        let ck = -tr / k as f64;
        coeffs[k] = ck;
        if k < deg {
            let mut shifted = b.clone();
            for i in 0..dim {
                shifted[(i, i)] += ck;
            }
            b = m * shifted;
        }
    }
    coeffs
}

/// Evaluates sum c_k z^k by Horner's rule.
pub fn evaluate_series(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    let mut acc = Complex64::default();
    for c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

/// Roots of sum c_k z^k via the companion matrix of the trimmed polynomial.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let mut trimmed = coeffs.to_vec();
    while trimmed.last().map(|c| c.norm() < 1e-14).unwrap_or(false) {
        trimmed.pop();
    }
    let deg = trimmed.len().saturating_sub(1);
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = trimmed[deg];
    let mut companion = nalgebra::DMatrix::from_element(deg, deg, Complex64::default());
    for i in 1..deg {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..deg {
        companion[(i, deg - 1)] = -trimmed[i] / lead;
    }
    let spec = spectrum_of_matrix(&companion, 1e-12)?;
    Ok(spec.expanded())
}

/// The cutoff index bound for the Weierstrass product, from the geometric
/// decay rate r and the entropy: the smallest k with k + 1 > h/(2 ln(1/r)).
#[derive(Debug, Clone, Copy)]
pub struct K0Bound {
    pub k0: usize,
    /// Admissible summability exponent p = k0 + 1.
    pub p: f64,
    /// h_top / (2 ln(1/r)).
    pub p_min: f64,
}

pub fn k0_bound(r: f64, h_top: f64) -> Result<K0Bound> {
    if !(0.0 < r && r < 1.0) {
        return Err(Error::InvalidInput(format!("r = {r} not in (0,1)")));
    }
    if h_top <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "entropy {h_top} must be positive"
        )));
    }
    let p_min = h_top / (2.0 * (1.0 / r).ln());
    let k0 = p_min.floor() as usize;
    Ok(K0Bound {
        k0,
        p: (k0 + 1) as f64,
        p_min,
    })
}

/// The elementary factor E(z, k0) = (1 - z) exp(sum_{k<=k0} z^k / k).
pub fn weierstrass_factor(z: Complex64, k0: usize) -> Complex64 {
    let mut expo = Complex64::default();
    let mut zk = Complex64::new(1.0, 0.0);
    for k in 1..=k0 {
        zk *= z;
        expo += zk / k as f64;
    }
    (Complex64::new(1.0, 0.0) - z) * expo.exp()
}

/// One evaluation of the canonical-product form of 1/zeta.
#[derive(Debug, Clone, Copy)]
pub struct ProductEvaluation {
    pub value: Complex64,
    /// Envelope on the dropped factors plus a float-accumulation floor.
    pub remainder_bound: f64,
}

/// exp(-sum_{q<=k0} z^q Z_q / q) * prod_{n<=n_terms} E(z lambda_n, k0).
/// The remainder envelope covers the factors beyond n_terms, using
/// |Log E(w, k0)| <= 2 |w|^(k0+1) for |w| <= 3/4.
pub fn spectral_product(
    lambdas: &[Complex64],
    orbit_sums: &[Complex64],
    z: Complex64,
    k0: usize,
    n_terms: usize,
) -> Result<ProductEvaluation> {
    if orbit_sums.len() < k0 {
        return Err(Error::InvalidInput(format!(
            "need Z_1..Z_{k0}, got {}",
            orbit_sums.len()
        )));
    }
    let mut expo = Complex64::default();
    let mut zq = Complex64::new(1.0, 0.0);
    for (q, zval) in orbit_sums.iter().take(k0).enumerate() {
        zq *= z;
        expo -= zq * zval / (q + 1) as f64;
    }
    let mut value = expo.exp();
    for lambda in lambdas.iter().take(n_terms) {
        value *= weierstrass_factor(z * lambda, k0);
    }
    let mut tail = 0.0f64;
    let mut unbounded = false;
    for lambda in lambdas.iter().skip(n_terms) {
        let w = (z * lambda).norm();
        if w > 0.75 {
            unbounded = true;
            break;
        }
        tail += w.powi(k0 as i32 + 1);
    }
    let remainder_bound = if unbounded {
        f64::INFINITY
    } else {
        value.norm() * ((2.0 * tail).exp() - 1.0) + 1e-12
    };
    Ok(ProductEvaluation {
        value,
        remainder_bound,
    })
}

/// Envelope on |1/zeta(z) - series(z)| for the degree-Q orbit series: the
/// elementary-symmetric tail of the modulus spectrum beyond degree Q, a
/// first-order allowance for the measured trace defects, and the float noise
/// of the Newton recursion (whose summands reach max|Z_q| while the true
/// coefficients stay small, so cancellation sets the coefficient accuracy).
pub fn series_remainder_bound(
    lambdas: &[Complex64],
    orbit_sums: &[Complex64],
    z: Complex64,
    q_max: usize,
) -> f64 {
    let zn = z.norm();
    // coefficients of prod (1 + |lambda_n| x) through degree q_max
    let mut esym = vec![0.0f64; q_max + 1];
    esym[0] = 1.0;
    let mut full = 1.0f64;
    for lambda in lambdas {
        let a = lambda.norm() * zn;
        full *= 1.0 + a;
        for k in (1..=q_max).rev() {
            esym[k] += a * esym[k - 1];
        }
    }
    let truncated: f64 = esym.iter().sum();
    let tail = (full - truncated).max(0.0);

    let mut defect = 0.0f64;
    let mut zq = 1.0f64;
    let mut z_geom = 1.0f64;
    let mut z_geom_sum = 1.0f64;
    let mut z_max = 0.0f64;
    for (q, zval) in orbit_sums.iter().take(q_max).enumerate() {
        zq *= zn;
        z_geom *= zn;
        z_geom_sum += z_geom;
        z_max = z_max.max(zval.norm());
        let power: Complex64 = lambdas.iter().map(|l| l.powu(q as u32 + 1)).sum();
        defect += zq * (zval - power).norm() / (q + 1) as f64;
    }
    let recursion_noise = f64::EPSILON * (q_max * q_max) as f64 * z_max.max(1.0) * z_geom_sum;
    tail + 2.0 * defect.min(1.0).exp() * defect + recursion_noise + 1e-12
}

// ---------------------------------------------------------------------------
// Trace-formula defect tables
// ---------------------------------------------------------------------------

/// One row of a trace-formula convergence table.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DefectRow {
    pub m: usize,
    /// sum over n of lambda_n(f_m)^q, evaluated exactly as trace(M^q).
    pub matrix_power_sum: [f64; 2],
    /// The periodic-orbit sum Z_q(f).
    pub orbit: [f64; 2],
    /// |matrix_power_sum - orbit|.
    pub defect: f64,
}

/// Defect table delta_m = |sum lambda_n(f_m)^q - Z_q(f)| with a fitted decay
/// exponent over the last half of the schedule.
#[derive(Debug, Clone, Serialize)]
pub struct DefectTable {
    pub q: usize,
    pub rows: Vec<DefectRow>,
    /// Least-squares slope of ln(defect) against m over the last half.
    pub fitted_decay: Option<f64>,
    /// Set when the caller supplied a summability exponent that q undercuts.
    pub below_p: bool,
}

#[allow(clippy::too_many_arguments)]
pub fn trace_formula_check(
    f: &Potential,
    a: &TransitionMatrix,
    mu: &MarkovMeasure,
    q: usize,
    m_schedule: &[usize],
    tol: f64,
    quad_extra: usize,
    min_p: Option<f64>,
) -> Result<DefectTable> {
    let orbit = orbit_sum(f, a, q, tol)?;
    let mut rows = Vec::with_capacity(m_schedule.len());
    for &m in m_schedule {
        let projected = project_em(f, a, mu, m, m + quad_extra)?;
        let tm = build_matrix(&projected, a)?;
        let power = tm.trace_power(q);
        rows.push(DefectRow {
            m,
            matrix_power_sum: [power.re, power.im],
            orbit: [orbit.value.re, orbit.value.im],
            defect: (power - orbit.value).norm(),
        });
    }
    let fitted_decay = fit_decay(&rows);
    Ok(DefectTable {
        q,
        rows,
        fitted_decay,
        below_p: min_p.map(|p| (q as f64) < p.ceil()).unwrap_or(false),
    })
}

fn fit_decay(rows: &[DefectRow]) -> Option<f64> {
    let start = rows.len() / 2;
    let pts: Vec<(f64, f64)> = rows[start..]
        .iter()
        .filter(|r| r.defect > 0.0)
        .map(|r| (r.m as f64, r.defect.max(1e-300).ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}
