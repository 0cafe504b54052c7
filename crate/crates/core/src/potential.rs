//! Complex potentials on the shift space: locally constant tables, the
//! analytic geometric family, variation profiles, the conditional-averaging
//! projection `E_m`, Lipschitz seminorms and the weighted Banach norm.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::shift::{
    format_word, parse_word, MarkovMeasure, PeriodicPoint, Point, Symbol, TransitionMatrix, Word,
    DEFAULT_ENUMERATION_CAP,
};

/// Largest group size for which exact pairwise variation diameters are used.
const DIAMETER_PAIRWISE_LIMIT: usize = 1 << 14;

// ---------------------------------------------------------------------------
// Locally constant tables
// ---------------------------------------------------------------------------

/// A locally constant function of depth m, stored as one complex value per
/// admissible depth-m cylinder in enumeration order.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedFunction {
    depth: usize,
    words: Vec<Word>,
    values: Vec<Complex64>,
}

impl TabulatedFunction {
    pub fn new(depth: usize, words: Vec<Word>, values: Vec<Complex64>) -> Result<Self> {
        if words.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} words but {} values",
                words.len(),
                values.len()
            )));
        }
        if words.iter().any(|w| w.len() != depth) {
            return Err(Error::InvalidInput(format!(
                "word of wrong length for depth {depth}"
            )));
        }
        Ok(TabulatedFunction {
            depth,
            words,
            values,
        })
    }

    /// The constant function c as a depth-0 table.
    pub fn constant(c: Complex64) -> Self {
        TabulatedFunction {
            depth: 0,
            words: vec![Word::empty()],
            values: vec![c],
        }
    }

    /// The indicator of the cylinder [w].
    pub fn indicator(word: &Word, a: &TransitionMatrix) -> Result<Self> {
        let words = a.enumerate_words(word.len(), DEFAULT_ENUMERATION_CAP)?;
        let values = words
            .iter()
            .map(|w| {
                if w == word {
                    Complex64::new(1.0, 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        TabulatedFunction::new(word.len(), words, values)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn words(&self) -> &[Word] {
        &self.words
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Value on the cylinder determined by the first `depth` symbols of `word`.
    pub fn value_on(&self, word: &[Symbol]) -> Result<Complex64> {
        if word.len() < self.depth {
            return Err(Error::InvalidInput(format!(
                "word of length {} cannot select a depth-{} cylinder",
                word.len(),
                self.depth
            )));
        }
        let key = &word[..self.depth];
        self.words
            .binary_search_by(|w| w.symbols().cmp(key))
            .map(|idx| self.values[idx])
            .map_err(|_| Error::InvalidInput(format!("no admissible cylinder for prefix {key:?}")))
    }

    pub fn evaluate_at(&self, point: &Point) -> Result<Complex64> {
        self.value_on(&point.leading_word(self.depth))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_re(&self) -> f64 {
        self.values
            .iter()
            .map(|v| v.re)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_real(&self) -> bool {
        self.values.iter().all(|v| v.im == 0.0)
    }

    /// var_k of the table: the largest oscillation over pairs of cylinders
    /// sharing their first k symbols. Exact; zero for k >= depth.
    pub fn var_at(&self, k: usize) -> f64 {
        if k >= self.depth {
            return 0.0;
        }
        let mut best = 0.0f64;
        let mut start = 0;
        while start < self.words.len() {
            let prefix = &self.words[start][..k];
            let mut end = start + 1;
            while end < self.words.len() && &self.words[end][..k] == prefix {
                end += 1;
            }
            best = best.max(diameter(&self.values[start..end]));
            start = end;
        }
        best
    }

    /// var_0 .. var_{depth-1} (all later variations vanish).
    pub fn var_profile(&self) -> Vec<f64> {
        (0..self.depth).map(|k| self.var_at(k)).collect()
    }

    /// Re-tabulates at a deeper level (values constant on refined cylinders).
    pub fn extend_to_depth(&self, a: &TransitionMatrix, depth: usize) -> Result<TabulatedFunction> {
        if depth < self.depth {
            return Err(Error::InvalidInput(format!(
                "cannot extend depth {} table to shallower depth {depth}",
                self.depth
            )));
        }
        if depth == self.depth {
            return Ok(self.clone());
        }
        let words = a.enumerate_words(depth, DEFAULT_ENUMERATION_CAP)?;
        let values = words
            .iter()
            .map(|w| self.value_on(w))
            .collect::<Result<Vec<_>>>()?;
        TabulatedFunction::new(depth, words, values)
    }

    pub fn scale(&self, alpha: Complex64) -> TabulatedFunction {
        TabulatedFunction {
            depth: self.depth,
            words: self.words.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn add(
        &self,
        other: &TabulatedFunction,
        a: &TransitionMatrix,
    ) -> Result<TabulatedFunction> {
        let depth = self.depth.max(other.depth);
        let lhs = self.extend_to_depth(a, depth)?;
        let rhs = other.extend_to_depth(a, depth)?;
        let values = lhs
            .values
            .iter()
            .zip(rhs.values.iter())
            .map(|(x, y)| x + y)
            .collect();
        TabulatedFunction::new(depth, lhs.words, values)
    }

    pub fn sub(
        &self,
        other: &TabulatedFunction,
        a: &TransitionMatrix,
    ) -> Result<TabulatedFunction> {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)), a)
    }

    /// Serializes to the `{"depth": m, "values": {"<word>": [re, im], ...}}` form.
    pub fn to_json(&self, n: usize) -> String {
        let mut map = BTreeMap::new();
        for (w, v) in self.words.iter().zip(self.values.iter()) {
            map.insert(format_word(w, n), vec![v.re, v.im]);
        }
        json!({ "depth": self.depth, "values": map }).to_string()
    }

    /// Parses the table file format, requiring exactly the admissible words.
    pub fn from_json(text: &str, a: &TransitionMatrix) -> Result<TabulatedFunction> {
        #[derive(serde::Deserialize)]
        struct TableFile {
            depth: usize,
            values: BTreeMap<String, [f64; 2]>,
        }
        let file: TableFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("potential table JSON: {e}")))?;
        let words = a.enumerate_words(file.depth, DEFAULT_ENUMERATION_CAP)?;
        if file.values.len() != words.len() {
            return Err(Error::InvalidInput(format!(
                "table lists {} cylinders, expected {}",
                file.values.len(),
                words.len()
            )));
        }
        let mut values = vec![Complex64::default(); words.len()];
        for (key, [re, im]) in &file.values {
            let w = parse_word(key, a.n())?;
            let idx = words
                .binary_search(&w)
                .map_err(|_| Error::InvalidInput(format!("word {key:?} is not admissible")))?;
            values[idx] = Complex64::new(*re, *im);
        }
        TabulatedFunction::new(file.depth, words, values)
    }
}

/// Exact diameter of a set of complex values (largest pairwise distance).
/// Falls back to a direction sweep (a tight lower bound) on huge groups.
fn diameter(values: &[Complex64]) -> f64 {
    if values.len() <= DIAMETER_PAIRWISE_LIMIT {
        let mut best = 0.0f64;
        for (i, x) in values.iter().enumerate() {
            for y in &values[i + 1..] {
                best = best.max((x - y).norm());
            }
        }
        best
    } else {
        direction_sweep(values)
    }
}

fn direction_sweep(values: &[Complex64]) -> f64 {
    let dirs = 256;
    let mut best = 0.0f64;
    for k in 0..dirs {
        let angle = std::f64::consts::PI * k as f64 / dirs as f64;
        let (s, c) = angle.sin_cos();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for v in values {
            let proj = v.re * c + v.im * s;
            lo = lo.min(proj);
            hi = hi.max(proj);
        }
        best = best.max(hi - lo);
    }
    best
}

// ---------------------------------------------------------------------------
// Potentials
// ---------------------------------------------------------------------------

/// An evaluable complex potential with certified variation bounds.
#[derive(Debug, Clone)]
pub enum Potential {
    /// f == c.
    Constant(Complex64),
    /// A locally constant table.
    Table(TabulatedFunction),
    /// The analytic family f(w) = sum_{m>=1} (scale(w_m) r^m)^m where
    /// scale(s) = scale2^s for the 0-based symbol s. Its variation decays
    /// like r^(m^2), so var_m(f)^(1/m) is comparable to r^m.
    Geometric { r: f64, scale2: f64 },
    /// A finite linear combination of potentials.
    Combination(Vec<(Complex64, Potential)>),
}

impl Potential {
    pub fn constant(re: f64, im: f64) -> Self {
        Potential::Constant(Complex64::new(re, im))
    }

    pub fn geometric(r: f64, scale2: f64) -> Result<Self> {
        if !(0.0 < r && r < 1.0) {
            return Err(Error::InvalidInput(format!(
                "geometric family needs r in (0,1), got {r}"
            )));
        }
        if !(0.0 < scale2 && scale2 <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "geometric family needs scale2 in (0,1], got {scale2}"
            )));
        }
        Ok(Potential::Geometric { r, scale2 })
    }

    pub fn is_real(&self) -> bool {
        match self {
            Potential::Constant(c) => c.im == 0.0,
            Potential::Table(t) => t.is_real(),
            Potential::Geometric { .. } => true,
            Potential::Combination(parts) => parts
                .iter()
                .all(|(alpha, f)| alpha.im == 0.0 && f.is_real()),
        }
    }

    /// Depth of local constancy, None when the potential is not locally constant.
    pub fn local_depth(&self) -> Option<usize> {
        match self {
            Potential::Constant(_) => Some(0),
            Potential::Table(t) => Some(t.depth()),
            Potential::Geometric { .. } => None,
            Potential::Combination(parts) => parts
                .iter()
                .map(|(_, f)| f.local_depth())
                .try_fold(0usize, |acc, d| d.map(|d| acc.max(d))),
        }
    }

    /// Point evaluation within `tol` of the true value. The point must be
    /// admissible, including its prefix-to-tail junction.
    pub fn evaluate(&self, a: &TransitionMatrix, point: &Point, tol: f64) -> Result<Complex64> {
        if tol <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "tolerance {tol} must be positive"
            )));
        }
        point.check_admissible(a)?;
        self.evaluate_unchecked(point, tol)
    }

    fn evaluate_unchecked(&self, point: &Point, tol: f64) -> Result<Complex64> {
        match self {
            Potential::Constant(c) => Ok(*c),
            Potential::Table(t) => t.evaluate_at(point),
            Potential::Geometric { r, scale2 } => Ok(Complex64::new(
                geometric_series(*r, *scale2, point, tol),
                0.0,
            )),
            Potential::Combination(parts) => {
                let budget = tol / parts.len().max(1) as f64;
                let mut acc = Complex64::default();
                for (alpha, f) in parts {
                    let part_tol = budget / alpha.norm().max(1.0);
                    acc += alpha * f.evaluate_unchecked(point, part_tol)?;
                }
                Ok(acc)
            }
        }
    }

    /// Birkhoff sum S_q f(p) along the length-q representation of p, each
    /// evaluation to tolerance tol/q.
    pub fn birkhoff_sum(
        &self,
        a: &TransitionMatrix,
        p: &PeriodicPoint,
        q: usize,
        tol: f64,
    ) -> Result<Complex64> {
        if q != p.period() {
            return Err(Error::InvalidInput(format!(
                "q = {q} does not match the representation length {}",
                p.period()
            )));
        }
        p.point().check_admissible(a)?;
        let each = tol / q as f64;
        let mut acc = Complex64::default();
        for k in 0..q {
            acc += self.evaluate_unchecked(&p.rotated(k).point(), each)?;
        }
        Ok(acc)
    }

    /// Certified upper bound on var_m(f). Exact for tables and constants;
    /// a convergent series bound for the geometric family.
    pub fn var_bound(&self, a: &TransitionMatrix, m: usize) -> Result<f64> {
        match self {
            Potential::Constant(_) => Ok(0.0),
            Potential::Table(t) => Ok(t.var_at(m)),
            Potential::Geometric { r, scale2 } => Ok(geometric_var_bound(*r, *scale2, a.n(), m)),
            Potential::Combination(parts) => {
                let mut acc = 0.0;
                for (alpha, f) in parts {
                    acc += alpha.norm() * f.var_bound(a, m)?;
                }
                Ok(acc)
            }
        }
    }

    /// True when variation bounds stay positive at every depth.
    fn has_unbounded_depth(&self) -> bool {
        match self {
            Potential::Constant(_) | Potential::Table(_) => false,
            Potential::Geometric { .. } => true,
            Potential::Combination(parts) => parts
                .iter()
                .any(|(alpha, f)| alpha.norm() > 0.0 && f.has_unbounded_depth()),
        }
    }

    /// Upper bound on sup_{k > horizon} var_k(f)^(1/k).
    #[allow(clippy::only_used_in_recursion)]
    fn tail_var_root_bound(&self, a: &TransitionMatrix, horizon: usize) -> f64 {
        match self {
            Potential::Constant(_) => 0.0,
            Potential::Table(t) => {
                if horizon + 1 >= t.depth() {
                    0.0
                } else {
                    // finitely many terms remain; take them directly
                    (horizon + 1..t.depth())
                        .map(|k| t.var_at(k).powf(1.0 / k as f64))
                        .fold(0.0, f64::max)
                }
            }
            Potential::Geometric { r, .. } => {
                // var_k <= r^(k^2) / (1 - r), and the k-th root of that is
                // decreasing in k
                let k = (horizon + 1) as f64;
                r.powf(k) * (1.0 / (1.0 - r)).powf(1.0 / k)
            }
            Potential::Combination(parts) => {
                let weight: f64 = parts.iter().map(|(alpha, _)| alpha.norm()).sum();
                let base = parts
                    .iter()
                    .map(|(_, f)| f.tail_var_root_bound(a, horizon))
                    .fold(0.0, f64::max);
                weight.max(1.0).powf(1.0 / (horizon + 1) as f64) * base
            }
        }
    }

    /// Empirical lower bound on var_m(f) from admissible word pairs completed
    /// by canonical tails, together with the certified upper bound.
    pub fn var_estimate(
        &self,
        a: &TransitionMatrix,
        m: usize,
        sample_budget: usize,
    ) -> Result<VarEstimate> {
        let mut lookahead = 1;
        while lookahead < 32 && a.word_count(m + lookahead + 1) <= sample_budget.max(2) as u128 {
            lookahead += 1;
        }
        let words = a.enumerate_words(m + lookahead, DEFAULT_ENUMERATION_CAP)?;
        let values: Vec<Complex64> = words
            .iter()
            .map(|w| self.evaluate_unchecked(&canonical_completion(a, w), 1e-14))
            .collect::<Result<Vec<_>>>()?;
        let mut estimate = 0.0f64;
        let mut start = 0;
        while start < words.len() {
            let prefix = &words[start][..m];
            let mut end = start + 1;
            while end < words.len() && &words[end][..m] == prefix {
                end += 1;
            }
            estimate = estimate.max(diameter(&values[start..end]));
            start = end;
        }
        let bound = self.var_bound(a, m)?;
        Ok(VarEstimate {
            estimate,
            bound,
            lookahead,
        })
    }

    /// Certified upper bound on max Re f: tabulated maximum at `depth` plus
    /// the variation slack at that depth.
    pub fn max_re_bound(&self, a: &TransitionMatrix, depth: usize) -> Result<f64> {
        let tol = 1e-13;
        let table = self.tabulate(a, depth, tol)?;
        Ok(table.max_re() + self.var_bound(a, depth)? + tol)
    }

    /// Samples the potential on every admissible depth-`depth` cylinder using
    /// canonical tail representatives.
    pub fn tabulate(
        &self,
        a: &TransitionMatrix,
        depth: usize,
        tol: f64,
    ) -> Result<TabulatedFunction> {
        if let Potential::Table(t) = self {
            if depth >= t.depth() {
                return t.extend_to_depth(a, depth);
            }
        }
        let words = a.enumerate_words(depth, DEFAULT_ENUMERATION_CAP)?;
        let values = words
            .iter()
            .map(|w| self.evaluate_unchecked(&canonical_completion(a, w), tol))
            .collect::<Result<Vec<_>>>()?;
        TabulatedFunction::new(depth, words, values)
    }

    /// theta_m(f) = sup_{k >= m} var_k(f)^(1/k) for m = 1..=m_max, computed
    /// from certified variation bounds (so the profile dominates the true
    /// variations). Returned as a finite profile; entries beyond m_max are
    /// reported as zero, which is exact only for locally constant potentials.
    pub fn theta_of(&self, a: &TransitionMatrix, m_max: usize) -> Result<ThetaProfile> {
        let horizon = m_max + 8;
        let mut roots: Vec<f64> = (1..=horizon)
            .map(|k| self.var_bound(a, k).map(|v| v.powf(1.0 / k as f64)))
            .collect::<Result<Vec<_>>>()?;
        let tail = self.tail_var_root_bound(a, horizon);
        let mut running = tail;
        for k in (0..horizon).rev() {
            running = running.max(roots[k]);
            roots[k] = running;
        }
        roots.truncate(m_max);
        ThetaProfile::finite(roots)
    }
}

/// Canonical representative of the cylinder [w]: the first |w| symbols are w
/// and the continuation is the shortest admissible cycle through the last
/// symbol. Deterministic.
pub fn canonical_completion(a: &TransitionMatrix, w: &Word) -> Point {
    if w.is_empty() {
        return a.canonical_tail(0).point();
    }
    let tail = a.canonical_tail(w[w.len() - 1]);
    Point::new(w.prefix(w.len() - 1), tail.cycle().clone()).expect("non-empty cycle")
}

/// Result of an empirical variation estimate.
#[derive(Debug, Clone, Copy)]
pub struct VarEstimate {
    /// Lower bound from sampled pairs.
    pub estimate: f64,
    /// Certified upper bound.
    pub bound: f64,
    /// Lookahead depth actually used.
    pub lookahead: usize,
}

fn geometric_series(r: f64, scale2: f64, point: &Point, tol: f64) -> f64 {
    let mut acc = 0.0;
    let mut m = 1usize;
    loop {
        let s = scale2.powi(point.symbol_at(m) as i32);
        let term = (s * r.powi(m as i32)).powi(m as i32);
        acc += term;
        // remaining terms are dominated by sum_{k>m} r^(k^2)
        let rem = r.powi(((m + 1) * (m + 1)) as i32) / (1.0 - r);
        if rem < tol || m > 4096 {
            return acc;
        }
        m += 1;
    }
}

fn geometric_var_bound(r: f64, scale2: f64, n: usize, m: usize) -> f64 {
    // position k >= max(m, 1) contributes at most r^(k^2) (1 - s_min^k)
    let s_min = scale2.powi(n as i32 - 1);
    let mut acc = 0.0;
    let mut k = m.max(1);
    loop {
        let term = r.powi((k * k) as i32) * (1.0 - s_min.powi(k as i32));
        acc += term;
        let rem = r.powi(((k + 1) * (k + 1)) as i32) / (1.0 - r);
        if rem < 1e-300 || rem < acc * 1e-18 {
            return acc;
        }
        k += 1;
    }
}

// ---------------------------------------------------------------------------
// Theta profiles
// ---------------------------------------------------------------------------

/// A non-increasing sequence theta_1 >= theta_2 >= ... >= 0 tending to zero.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaProfile {
    /// theta_m = d r^m.
    Geometric { d: f64, r: f64 },
    /// Explicit leading values; zero beyond the stored horizon.
    Finite { values: Vec<f64> },
}

impl ThetaProfile {
    pub fn geometric(d: f64, r: f64) -> Result<Self> {
        if !(0.0 < r && r < 1.0) || d <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "geometric profile needs d > 0 and r in (0,1), got d = {d}, r = {r}"
            )));
        }
        Ok(ThetaProfile::Geometric { d, r })
    }

    pub fn finite(values: Vec<f64>) -> Result<Self> {
        for pair in values.windows(2) {
            if pair[1] > pair[0] + 1e-15 {
                return Err(Error::InvalidInput(
                    "theta profile must be non-increasing".into(),
                ));
            }
        }
        if values.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput(
                "theta profile must be non-negative".into(),
            ));
        }
        Ok(ThetaProfile::Finite { values })
    }

    /// theta_m for m >= 1.
    pub fn value(&self, m: usize) -> f64 {
        match self {
            ThetaProfile::Geometric { d, r } => d * r.powi(m as i32),
            ThetaProfile::Finite { values } => {
                if m == 0 || m > values.len() {
                    if m == 0 {
                        values.first().copied().unwrap_or(0.0)
                    } else {
                        0.0
                    }
                } else {
                    values[m - 1]
                }
            }
        }
    }

    /// theta_{k+1}^k, with the k = 0 power read as 1.
    pub fn weight(&self, k: usize) -> f64 {
        if k == 0 {
            1.0
        } else {
            self.value(k + 1).powi(k as i32)
        }
    }
}

// ---------------------------------------------------------------------------
// Seminorms and the Banach norm
// ---------------------------------------------------------------------------

/// Lipschitz data of a tabulated function with respect to d_theta.
#[derive(Debug, Clone)]
pub struct LipschitzData {
    /// The seminorm [phi]_theta = V_0.
    pub bracket: f64,
    /// V_m = sup_{k >= m} var_k / theta^k for m = 0..=depth.
    pub tail_suprema: Vec<f64>,
}

/// [phi]_theta and the tail suprema V_m^theta; exact for tabulated functions.
pub fn lipschitz_seminorm(phi: &TabulatedFunction, theta: f64) -> Result<LipschitzData> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} not in (0,1)")));
    }
    let profile = phi.var_profile();
    let depth = phi.depth();
    let mut tail = vec![0.0; depth + 1];
    let mut running = 0.0f64;
    for m in (0..depth).rev() {
        running = running.max(profile[m] / theta.powi(m as i32));
        tail[m] = running;
    }
    Ok(LipschitzData {
        bracket: tail.first().copied().unwrap_or(0.0),
        tail_suprema: tail,
    })
}

/// The weighted norm ||phi||_inf + inf{C : var_m(phi) <= C theta_{m+1}^m}.
/// Fails with NotInSpace when some var_k > 0 meets theta_{k+1} = 0.
pub fn banach_norm(phi: &TabulatedFunction, theta: &ThetaProfile) -> Result<f64> {
    let mut best = 0.0f64;
    for k in 0..phi.depth() {
        let var = phi.var_at(k);
        if var == 0.0 {
            continue;
        }
        let w = theta.weight(k);
        if w == 0.0 {
            return Err(Error::NotInSpace { k, var });
        }
        best = best.max(var / w);
    }
    Ok(phi.sup_norm() + best)
}

// ---------------------------------------------------------------------------
// The projection E_m
// ---------------------------------------------------------------------------

/// Conditional averaging over depth-m cylinders:
/// (E_m phi)(w) = (1/mu[w]) * integral of phi over [w], realized as an exact
/// Markov-weighted sum over depth-M refinements with canonical tails.
/// The quadrature error is at most var_M(phi); exact for tabulated phi with
/// depth <= M.
pub fn project_em(
    f: &Potential,
    a: &TransitionMatrix,
    mu: &MarkovMeasure,
    m: usize,
    quad_depth: usize,
) -> Result<TabulatedFunction> {
    if quad_depth < m {
        return Err(Error::InvalidInput(format!(
            "integration depth {quad_depth} below target depth {m}"
        )));
    }
    let depth_eff = match f.local_depth() {
        Some(d) => quad_depth.max(d),
        None => quad_depth,
    };
    let targets = a.enumerate_words(m, DEFAULT_ENUMERATION_CAP)?;
    let refined = a.enumerate_words(depth_eff, DEFAULT_ENUMERATION_CAP)?;
    let mut sums = vec![Complex64::default(); targets.len()];
    let mut masses = vec![0.0f64; targets.len()];
    let mut t_idx = 0;
    for u in &refined {
        let prefix = &u[..m];
        while targets[t_idx].symbols() != prefix {
            t_idx += 1;
        }
        let mass = mu.cylinder_mass(u);
        let value = f.evaluate_unchecked(&canonical_completion(a, u), 1e-14)?;
        sums[t_idx] += mass * value;
        masses[t_idx] += mass;
    }
    let values = sums
        .iter()
        .zip(masses.iter())
        .map(|(s, &mass)| s / mass)
        .collect();
    TabulatedFunction::new(m, targets, values)
}

// ---------------------------------------------------------------------------
// The constants of the quantitative estimates
// ---------------------------------------------------------------------------

/// The explicit constants b1, b2, C, C1..C4 entering the operator bounds,
/// certified for a potential against a geometric profile theta_m = D r^m.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSet {
    pub n: usize,
    /// sup_m theta_m = theta_1.
    pub c: f64,
    /// e^{max Re f} <= b1.
    pub b1: f64,
    /// var_k(f) <= b2 theta_k^k for all k (theta_0^0 read as 1).
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub d: f64,
    pub r: f64,
}

/// Derives the constant set for `f` against a geometric profile. The profile
/// must dominate the variation roots (var_m(f)^(1/m) <= theta_m); otherwise
/// ProfileViolation is returned. b2 is floored at 1.
pub fn constants_for(
    f: &Potential,
    theta: &ThetaProfile,
    a: &TransitionMatrix,
    b1_depth: usize,
) -> Result<ConstantSet> {
    let (d, r) =
        match theta {
            ThetaProfile::Geometric { d, r } => (*d, *r),
            ThetaProfile::Finite { .. } => return Err(Error::InvalidInput(
                "constants require a geometric theta profile; wrap locally constant data in one"
                    .into(),
            )),
        };
    if f.has_unbounded_depth() && d < 1.0 {
        return Err(Error::ProfileViolation {
            k: 0,
            var: f64::NAN,
            theta_pow: d,
        });
    }

    let n = a.n();
    let mut b2: f64 = if f.has_unbounded_depth() && d <= 1.0 {
        1.0
    } else {
        0.0
    };
    let mut k = 0usize;
    loop {
        let var = f.var_bound(a, k)?;
        let theta_pow = if k == 0 {
            1.0
        } else {
            theta.value(k).powi(k as i32)
        };
        if var > 0.0 {
            if theta_pow <= 0.0 {
                return Err(Error::ProfileViolation { k, var, theta_pow });
            }
            // condition (1.3) check at this depth
            if k >= 1 && var.powf(1.0 / k as f64) > theta.value(k) * (1.0 + 1e-12) {
                return Err(Error::ProfileViolation {
                    k,
                    var,
                    theta_pow: theta.value(k).powi(k as i32),
                });
            }
            b2 = b2.max(var / theta_pow);
        }
        k += 1;
        let done = match f.local_depth() {
            Some(depth) => k >= depth,
            None => theta.value(k).powi(k as i32) < 1e-280 || k > 256,
        };
        if done {
            break;
        }
    }
    let b2 = b2.max(1.0);

    let b1 = f.max_re_bound(a, b1_depth)?.exp();
    let nf = n as f64;
    let c = theta.value(1);
    let c1 = (2.0 * nf * b1).max(nf * b1 * (3.0 * c * b2 + c));
    let c2 = (nf * b1 + c1).max(3.0 * nf * b1 * (c * b2 + 1.0));
    let c3 = 3.0 * nf * b1 * b2 * (c + 3.0);
    let c4 = d * d * nf * b1 * r * r
        + d * nf * b1 * (3.0 * d * d * r.powi(3) * b2 + (2.0 * d * r * r).max(1.0));
    Ok(ConstantSet {
        n,
        c,
        b1,
        b2,
        c1,
        c2,
        c3,
        c4,
        d,
        r,
    })
}
