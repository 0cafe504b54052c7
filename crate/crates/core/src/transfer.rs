//! Finite matrix representations of the transfer operator on locally
//! constant subspaces, their spectra, topological pressure, and the
//! operator-norm bound formulas.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::potential::{ConstantSet, Potential, TabulatedFunction, ThetaProfile};
use crate::shift::{MarkovMeasure, Symbol, TransitionMatrix, Word, DEFAULT_ENUMERATION_CAP};

/// Dense eigensolves are refused above this dimension.
pub const DEFAULT_EIG_DIM_CAP: usize = 4096;

/// Default relative tolerance for merging eigenvalue clusters.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

// ---------------------------------------------------------------------------
// Transfer matrices
// ---------------------------------------------------------------------------

/// The matrix of the transfer operator acting on the locally constant space
/// of a given basis depth. Rows are target cylinders, columns sources; the
/// entry (w, v) is e^{f on the cylinder [v0 w]} when v and w overlap in the
/// de-Bruijn sense and zero otherwise.
#[derive(Debug, Clone)]
pub struct TransferMatrix {
    basis_depth: usize,
    potential_depth: usize,
    basis: Vec<Word>,
    mat: DMatrix<Complex64>,
}

impl TransferMatrix {
    pub fn basis_depth(&self) -> usize {
        self.basis_depth
    }

    pub fn potential_depth(&self) -> usize {
        self.potential_depth
    }

    pub fn basis(&self) -> &[Word] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn entry(&self, target: usize, source: usize) -> Complex64 {
        self.mat[(target, source)]
    }

    /// trace(M^q) = sum over eigenvalue q-th powers, computed exactly by
    /// repeated multiplication.
    pub fn trace_power(&self, q: usize) -> Complex64 {
        assert!(q >= 1);
        let mut acc = self.mat.clone();
        for _ in 1..q {
            acc *= &self.mat;
        }
        (0..acc.nrows()).map(|i| acc[(i, i)]).sum()
    }
}

/// Builds the matrix of L_f on the smallest exactly invariant space:
/// basis depth max(m - 1, 1) for a depth-m table.
pub fn build_matrix(f: &TabulatedFunction, a: &TransitionMatrix) -> Result<TransferMatrix> {
    let d = f.depth().saturating_sub(1).max(1);
    build_matrix_at_depth(f, a, d)
}

/// Builds the matrix on an arbitrary basis depth d >= max(m - 1, 1); the
/// nonzero spectrum does not depend on d.
pub fn build_matrix_at_depth(
    f: &TabulatedFunction,
    a: &TransitionMatrix,
    d: usize,
) -> Result<TransferMatrix> {
    if d < f.depth().saturating_sub(1).max(1) {
        return Err(Error::InvalidInput(format!(
            "basis depth {d} too shallow for a depth-{} potential",
            f.depth()
        )));
    }
    let f_ext = f.extend_to_depth(a, d + 1)?;
    let basis = a.enumerate_words(d, DEFAULT_ENUMERATION_CAP)?;
    let dim = basis.len();
    let mut mat = DMatrix::from_element(dim, dim, Complex64::default());
    for (wi, w) in basis.iter().enumerate() {
        for sym in a.predecessors(w[0]).collect::<Vec<Symbol>>() {
            let u = Word::single(sym).concat(w);
            let weight = f_ext.value_on(&u)?.exp();
            let source = u.prefix(d);
            let vi = basis
                .binary_search(&source)
                .map_err(|_| Error::InvalidInput(format!("missing basis word {source}")))?;
            mat[(wi, vi)] = weight;
        }
    }
    Ok(TransferMatrix {
        basis_depth: d,
        potential_depth: f.depth(),
        basis,
        mat,
    })
}

/// Applies L_f to a tabulated function:
/// (L_f phi)(w) = sum over symbols s feeding w0 of e^{f(sw)} phi(sw).
/// The result is locally constant of depth max(m, M) - 1 (at least 1).
pub fn apply(
    f: &TabulatedFunction,
    phi: &TabulatedFunction,
    a: &TransitionMatrix,
) -> Result<TabulatedFunction> {
    let d = f.depth().max(phi.depth()).saturating_sub(1).max(1);
    let f_ext = f.extend_to_depth(a, d + 1)?;
    let phi_ext = phi.extend_to_depth(a, d + 1)?;
    let words = a.enumerate_words(d, DEFAULT_ENUMERATION_CAP)?;
    let mut values = Vec::with_capacity(words.len());
    for w in &words {
        let mut acc = Complex64::default();
        for sym in a.predecessors(w[0]).collect::<Vec<Symbol>>() {
            let u = Word::single(sym).concat(w);
            acc += f_ext.value_on(&u)?.exp() * phi_ext.value_on(&u)?;
        }
        values.push(acc);
    }
    TabulatedFunction::new(d, words, values)
}

// ---------------------------------------------------------------------------
// Spectra
// ---------------------------------------------------------------------------

/// Eigenvalues sorted by non-increasing modulus with multiplicities from
/// relative clustering. The multiplicity sum equals the matrix dimension.
#[derive(Debug, Clone)]
pub struct SpectralData {
    eigenvalues: Vec<Complex64>,
    multiplicities: Vec<usize>,
    cluster_tol: f64,
    dim: usize,
}

impl SpectralData {
    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn cluster_tol(&self) -> f64 {
        self.cluster_tol
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Eigenvalues repeated according to multiplicity, largest modulus first.
    pub fn expanded(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.dim);
        for (lambda, &m) in self.eigenvalues.iter().zip(&self.multiplicities) {
            out.extend(std::iter::repeat_n(*lambda, m));
        }
        out
    }

    /// Clusters with modulus above the floor, with multiplicities.
    pub fn nonzero(&self, floor: f64) -> (Vec<Complex64>, Vec<usize>) {
        let mut vals = Vec::new();
        let mut mults = Vec::new();
        for (lambda, &m) in self.eigenvalues.iter().zip(&self.multiplicities) {
            if lambda.norm() > floor {
                vals.push(*lambda);
                mults.push(m);
            }
        }
        (vals, mults)
    }

    /// sum of lambda^q over the spectrum with multiplicity.
    pub fn power_sum(&self, q: usize) -> Complex64 {
        self.eigenvalues
            .iter()
            .zip(&self.multiplicities)
            .map(|(lambda, &m)| lambda.powu(q as u32) * m as f64)
            .sum()
    }

    /// `{"eigenvalues": [[re,im],...], "multiplicities": [...], "basis_depth": d}`.
    pub fn to_json(&self, basis_depth: usize) -> String {
        let eig: Vec<[f64; 2]> = self.eigenvalues.iter().map(|l| [l.re, l.im]).collect();
        json!({
            "eigenvalues": eig,
            "multiplicities": self.multiplicities,
            "basis_depth": basis_depth,
        })
        .to_string()
    }
}

/// Dense eigensolve of a transfer matrix with relative clustering.
pub fn spectrum(tm: &TransferMatrix, cluster_tol: f64) -> Result<SpectralData> {
    spectrum_of_matrix(tm.matrix(), cluster_tol)
}

/// Dense eigensolve of an arbitrary complex matrix with relative clustering.
pub fn spectrum_of_matrix(mat: &DMatrix<Complex64>, cluster_tol: f64) -> Result<SpectralData> {
    let dim = mat.nrows();
    if dim != mat.ncols() {
        return Err(Error::InvalidInput("matrix must be square".into()));
    }
    if dim > DEFAULT_EIG_DIM_CAP {
        return Err(Error::DepthTooLarge {
            required: dim as u128,
            cap: DEFAULT_EIG_DIM_CAP,
        });
    }
    let schur = mat
        .clone()
        .try_schur(f64::EPSILON, 100_000)
        .ok_or(Error::EigensolveFailure { dim })?;
    let eigs = schur
        .eigenvalues()
        .ok_or(Error::EigensolveFailure { dim })?;
    let mut sorted: Vec<Complex64> = eigs.iter().copied().collect();
    sorted.sort_by(|x, y| {
        y.norm()
            .total_cmp(&x.norm())
            .then_with(|| x.arg().total_cmp(&y.arg()))
    });

    let mut eigenvalues = Vec::new();
    let mut multiplicities = Vec::new();
    let mut idx = 0;
    while idx < sorted.len() {
        let rep = sorted[idx];
        let mut end = idx + 1;
        while end < sorted.len() && (sorted[end] - rep).norm() <= cluster_tol * rep.norm() {
            end += 1;
        }
        let mean: Complex64 = sorted[idx..end].iter().sum::<Complex64>() / (end - idx) as f64;
        let refined = if end - idx == 1 {
            refine_simple_eigenvalue(mat, mean, cluster_tol)
        } else {
            mean
        };
        eigenvalues.push(refined);
        multiplicities.push(end - idx);
        idx = end;
    }
    Ok(SpectralData {
        eigenvalues,
        multiplicities,
        cluster_tol,
        dim,
    })
}

/// Polishes a simple eigenvalue by inverse iteration with a two-sided
/// Rayleigh quotient. The Schur estimate on non-normal matrices (the
/// deep-basis lifts carry nilpotent Jordan towers) can lose several digits;
/// one shifted solve recovers close to condition-limited accuracy. Falls
/// back to the input when iteration stalls or leaves the cluster.
fn refine_simple_eigenvalue(
    mat: &DMatrix<Complex64>,
    estimate: Complex64,
    cluster_tol: f64,
) -> Complex64 {
    let dim = mat.nrows();
    let mut shifted = mat.clone();
    for i in 0..dim {
        shifted[(i, i)] -= estimate;
    }
    let lut = shifted.transpose().lu();
    let lu = shifted.lu();
    let start = nalgebra::DVector::from_fn(dim, |i, _| {
        Complex64::new(1.0, 0.3 + (i as f64 * 0.7).sin())
    });
    let mut right = start.clone();
    let mut left = start;
    for _ in 0..2 {
        match lu.solve(&right) {
            Some(next) => right = next.unscale(next.norm()),
            None => return estimate,
        }
        match lut.solve(&left) {
            Some(next) => left = next.unscale(next.norm()),
            None => return estimate,
        }
    }
    let image = mat * &right;
    let overlap: Complex64 = left.iter().zip(right.iter()).map(|(y, x)| y * x).sum();
    if overlap.norm() < 1e-10 {
        return estimate;
    }
    let rayleigh: Complex64 = left.iter().zip(image.iter()).map(|(y, v)| y * v).sum();
    let refined = rayleigh / overlap;
    if (refined - estimate).norm() <= 64.0 * cluster_tol * estimate.norm().max(1e-300) {
        refined
    } else {
        estimate
    }
}

/// Perron eigendata of a transfer matrix with entrywise real nonnegative
/// entries (real potentials): the leading eigenvalue and a positive
/// eigenvector, by power iteration on the all-ones start.
pub fn perron_eigen(tm: &TransferMatrix) -> Result<(f64, Vec<f64>)> {
    let dim = tm.dim();
    let mut real = vec![0.0f64; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let z = tm.entry(i, j);
            if z.im.abs() > 1e-12 * (1.0 + z.re.abs()) {
                return Err(Error::InvalidInput(
                    "Perron data requires a real potential".into(),
                ));
            }
            real[i * dim + j] = z.re;
        }
    }
    Ok(crate::shift::power_iterate(&real, dim))
}

// ---------------------------------------------------------------------------
// Pressure
// ---------------------------------------------------------------------------

/// Topological pressure of a real potential with its certification bracket.
#[derive(Debug, Clone, Copy)]
pub struct PressureBracket {
    /// log of the leading eigenvalue of the projected operator.
    pub value: f64,
    /// Lipschitz response to the projection and quadrature errors.
    pub error: f64,
}

impl PressureBracket {
    pub fn lower(&self) -> f64 {
        self.value - self.error
    }

    pub fn upper(&self) -> f64 {
        self.value + self.error
    }
}

/// P(Re f) as log lambda_1 of the matrix of L_{E_m f}; pressure is
/// 1-Lipschitz in the sup norm, so the bracket width is
/// var_m(f) + var_{quad_depth}(f).
pub fn pressure(
    f: &Potential,
    a: &TransitionMatrix,
    mu: &MarkovMeasure,
    m: usize,
    quad_depth: usize,
) -> Result<PressureBracket> {
    if !f.is_real() {
        return Err(Error::InvalidInput(
            "pressure requires a real potential".into(),
        ));
    }
    let projected = crate::potential::project_em(f, a, mu, m, quad_depth)?;
    let tm = build_matrix(&projected, a)?;
    let (lambda, _) = perron_eigen(&tm)?;
    let error = f.var_bound(a, m)? + f.var_bound(a, quad_depth)?;
    Ok(PressureBracket {
        value: lambda.ln(),
        error,
    })
}

// ---------------------------------------------------------------------------
// Inequality checks and bound formulas
// ---------------------------------------------------------------------------

/// Both sides of the Lasota-Yorke inequality
/// var_k(L_f phi) <= N e^{max Re f} (3 var_{k+1}(f) ||phi||_inf + var_{k+1}(phi)).
#[derive(Debug, Clone, Copy)]
pub struct LasotaYorkeReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

pub fn lasota_yorke_check(
    f: &Potential,
    phi: &Potential,
    a: &TransitionMatrix,
    k: usize,
    sample_budget: usize,
) -> Result<LasotaYorkeReport> {
    if k < 1 {
        return Err(Error::InvalidInput(
            "Lasota-Yorke check needs k >= 1".into(),
        ));
    }
    let lhs = match (f.local_depth(), phi.local_depth()) {
        (Some(df), Some(dp)) => {
            let image = apply(
                &f.tabulate(a, df.max(1), 1e-14)?,
                &phi.tabulate(a, dp.max(1), 1e-14)?,
                a,
            )?;
            image.var_at(k)
        }
        _ => transfer_image_var_estimate(f, phi, a, k, sample_budget)?,
    };
    let sup_depth = 6;
    let b1 = f.max_re_bound(a, sup_depth)?.exp();
    let phi_sup = phi.tabulate(a, sup_depth, 1e-13)?.sup_norm() + phi.var_bound(a, sup_depth)?;
    let rhs =
        a.n() as f64 * b1 * (3.0 * f.var_bound(a, k + 1)? * phi_sup + phi.var_bound(a, k + 1)?);
    Ok(LasotaYorkeReport {
        lhs,
        rhs,
        satisfied: lhs <= rhs * (1.0 + 1e-9),
    })
}

/// Sampled lower bound on var_k(L_f phi) for non-tabulated inputs.
fn transfer_image_var_estimate(
    f: &Potential,
    phi: &Potential,
    a: &TransitionMatrix,
    k: usize,
    sample_budget: usize,
) -> Result<f64> {
    let mut lookahead = 1usize;
    while lookahead < 24 && a.word_count(k + lookahead + 1) <= sample_budget.max(2) as u128 {
        lookahead += 1;
    }
    let words = a.enumerate_words(k + lookahead, DEFAULT_ENUMERATION_CAP)?;
    let mut values = Vec::with_capacity(words.len());
    for w in &words {
        let base = crate::potential::canonical_completion(a, w);
        let mut acc = Complex64::default();
        for sym in a.predecessors(w[0]).collect::<Vec<Symbol>>() {
            let pre = crate::shift::Point::new(
                Word::single(sym).concat(base.prefix()),
                base.cycle().clone(),
            )?;
            acc += f.evaluate(a, &pre, 1e-14)?.exp() * phi.evaluate(a, &pre, 1e-14)?;
        }
        values.push(acc);
    }
    let mut best = 0.0f64;
    let mut start = 0;
    while start < words.len() {
        let prefix = &words[start][..k];
        let mut end = start + 1;
        while end < words.len() && &words[end][..k] == prefix {
            end += 1;
        }
        for i in start..end {
            for j in i + 1..end {
                best = best.max((values[i] - values[j]).norm());
            }
        }
        start = end;
    }
    Ok(best)
}

/// The closed-form operator bounds at parameters (m, q).
#[derive(Debug, Clone, Copy)]
pub struct OperatorBounds {
    /// ||L_g|| <= C2.
    pub op_norm: f64,
    /// ||L_g^q - K^(q)|| <= (C2 theta_{m+1})^q.
    pub power_defect: f64,
    /// ||L_g - L_{g_m}|| <= C3 theta_m.
    pub projection_gap: f64,
    /// rank K^(q) <= q rank E_m.
    pub rank: u128,
}

pub fn operator_bounds(
    consts: &ConstantSet,
    theta: &ThetaProfile,
    a: &TransitionMatrix,
    m: usize,
    q: usize,
) -> Result<OperatorBounds> {
    let next = theta.value(m + 1);
    if next > 1.0 {
        return Err(Error::HypothesisViolated(format!(
            "theta_{} = {next} exceeds 1",
            m + 1
        )));
    }
    Ok(OperatorBounds {
        op_norm: consts.c2,
        power_defect: (consts.c2 * next).powi(q as i32),
        projection_gap: consts.c3 * theta.value(m),
        rank: q as u128 * a.word_count(m),
    })
}
