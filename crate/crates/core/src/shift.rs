//! Combinatorics and measure theory of one-sided topological Markov shifts:
//! admissible words, cylinders, periodic points, topological entropy, the
//! Parry measure and the family of metrics `d_theta`.
//!
//! Symbols are 0-based internally and 1-based in every serialized form.

use std::fmt;
use std::ops::Deref;

use serde::Deserialize;

use crate::error::{Error, Result};

/// Internal symbol type, 0-based. Alphabets beyond 256 symbols are out of scope.
pub type Symbol = u8;

/// Default cap on enumerated words / periodic points (~1 GB of words).
pub const DEFAULT_ENUMERATION_CAP: usize = 10_000_000;

/// Relative tolerance of the Perron power iteration.
const PERRON_TOL: f64 = 1e-13;

// ---------------------------------------------------------------------------
// Words
// ---------------------------------------------------------------------------

/// A finite word over the alphabet `{0, .., n-1}` (externally `{1, .., n}`).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Symbol>);

impl Word {
    pub fn new(symbols: Vec<Symbol>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn single(s: Symbol) -> Self {
        Word(vec![s])
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    /// `self` followed by `other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// `self` repeated `times` times.
    pub fn repeated(&self, times: usize) -> Word {
        let mut v = Vec::with_capacity(self.0.len() * times);
        for _ in 0..times {
            v.extend_from_slice(&self.0);
        }
        Word(v)
    }

    pub fn prefix(&self, m: usize) -> Word {
        Word(self.0[..m.min(self.0.len())].to_vec())
    }

    /// All distinct symbols of the word.
    pub fn contains_symbol(&self, s: Symbol) -> bool {
        self.0.contains(&s)
    }

    /// True when all symbols are pairwise distinct and the length is >= 2.
    pub fn is_self_avoiding(&self) -> bool {
        if self.0.len() < 2 {
            return false;
        }
        let mut seen = [false; 256];
        for &s in &self.0 {
            if seen[s as usize] {
                return false;
            }
            seen[s as usize] = true;
        }
        true
    }
}

impl Deref for Word {
    type Target = [Symbol];
    fn deref(&self) -> &[Symbol] {
        &self.0
    }
}

impl fmt::Display for Word {
    /// Compact 1-based rendering; alphabets with more than 9 symbols use dots.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wide = self.0.iter().any(|&s| s >= 9);
        let mut first = true;
        for &s in &self.0 {
            if wide && !first {
                write!(f, ".")?;
            }
            write!(f, "{}", s as usize + 1)?;
            first = false;
        }
        Ok(())
    }
}

/// Renders a word as 1-based digits; '.'-separated when the alphabet has more
/// than nine symbols (the separator is decided by `n`, not by the word).
pub fn format_word(word: &[Symbol], n: usize) -> String {
    let sep = if n > 9 { "." } else { "" };
    word.iter()
        .map(|&s| (s as usize + 1).to_string())
        .collect::<Vec<_>>()
        .join(sep)
}

/// Parses the 1-based external word syntax back into internal symbols.
pub fn parse_word(text: &str, n: usize) -> Result<Word> {
    let mut symbols = Vec::new();
    if text.is_empty() {
        return Ok(Word::empty());
    }
    let raw: Vec<String> = if n > 9 {
        text.split('.').map(str::to_string).collect()
    } else {
        text.chars().map(|c| c.to_string()).collect()
    };
    for piece in raw {
        let v: usize = piece
            .parse()
            .map_err(|_| Error::InvalidInput(format!("bad symbol {piece:?} in word {text:?}")))?;
        if v < 1 || v > n {
            return Err(Error::InvalidInput(format!(
                "symbol {v} out of range 1..={n} in word {text:?}"
            )));
        }
        symbols.push((v - 1) as Symbol);
    }
    Ok(Word(symbols))
}

// ---------------------------------------------------------------------------
// Transition matrices
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct MatrixFile {
    n: usize,
    rows: Vec<Vec<u8>>,
}

/// An aperiodic 0-1 transition matrix together with its aperiodicity
/// exponent (the smallest k with `A^k` entrywise positive).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionMatrix {
    n: usize,
    entries: Vec<bool>,
    exponent: u32,
}

impl TransitionMatrix {
    /// Validates the 0-1 structure and certifies aperiodicity within the
    /// Wielandt bound `(n-1)^2 + 1`.
    pub fn new(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "alphabet size {n} too small, need n >= 2"
            )));
        }
        if n > 256 {
            return Err(Error::InvalidInput(format!("alphabet size {n} > 256")));
        }
        let mut entries = vec![false; n * n];
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "row {} has length {}, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &e) in row.iter().enumerate() {
                match e {
                    0 => {}
                    1 => entries[i * n + j] = true,
                    _ => {
                        return Err(Error::InvalidInput(format!(
                            "entry ({},{}) is {e}, expected 0 or 1",
                            i + 1,
                            j + 1
                        )))
                    }
                }
            }
        }

        let zero_row = (0..n).find(|&i| (0..n).all(|j| !entries[i * n + j]));
        let zero_column = (0..n).find(|&j| (0..n).all(|i| !entries[i * n + j]));
        if zero_row.is_some() || zero_column.is_some() {
            return Err(Error::NotAperiodic {
                zero_row: zero_row.map(|i| i + 1),
                zero_column: zero_column.map(|j| j + 1),
            });
        }

        let exponent = check_aperiodic_bool(&entries, n).ok_or(Error::NotAperiodic {
            zero_row: None,
            zero_column: None,
        })?;

        Ok(TransitionMatrix {
            n,
            entries,
            exponent,
        })
    }

    /// Loads the `{"n": N, "rows": [[0|1,...],...]}` JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: MatrixFile = serde_json::from_str(text)
            .map_err(|e| Error::InvalidInput(format!("matrix JSON: {e}")))?;
        if file.rows.len() != file.n {
            return Err(Error::InvalidInput(format!(
                "matrix JSON declares n = {} but has {} rows",
                file.n,
                file.rows.len()
            )));
        }
        Self::new(&file.rows)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Vec<u8>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| self.entries[i * self.n + j] as u8)
                    .collect()
            })
            .collect();
        serde_json::json!({ "n": self.n, "rows": rows }).to_string()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Smallest k with `A^k` entrywise positive.
    pub fn aperiodicity_exponent(&self) -> u32 {
        self.exponent
    }

    pub fn entry(&self, from: Symbol, to: Symbol) -> bool {
        self.entries[from as usize * self.n + to as usize]
    }

    /// Successors of `from` in increasing order.
    pub fn successors(&self, from: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        let base = from as usize * self.n;
        (0..self.n).filter_map(move |j| self.entries[base + j].then_some(j as Symbol))
    }

    /// Predecessors of `to` in increasing order.
    pub fn predecessors(&self, to: Symbol) -> impl Iterator<Item = Symbol> + '_ {
        (0..self.n)
            .filter_map(move |i| self.entries[i * self.n + to as usize].then_some(i as Symbol))
    }

    /// True when every consecutive transition of the word is allowed.
    /// Words of length <= 1 are admissible by convention.
    pub fn is_admissible(&self, word: &[Symbol]) -> bool {
        word.windows(2).all(|p| self.entry(p[0], p[1]))
    }

    /// True when the word is admissible together with the wrap transition.
    pub fn is_cyclically_admissible(&self, word: &[Symbol]) -> bool {
        !word.is_empty() && self.is_admissible(word) && self.entry(word[word.len() - 1], word[0])
    }

    fn power_u128(&self, k: u32) -> Vec<u128> {
        let n = self.n;
        let a: Vec<u128> = self.entries.iter().map(|&b| b as u128).collect();
        let mut acc: Vec<u128> = (0..n * n).map(|idx| (idx / n == idx % n) as u128).collect();
        for _ in 0..k {
            let mut next = vec![0u128; n * n];
            for i in 0..n {
                for l in 0..n {
                    let v = acc[i * n + l];
                    if v == 0 {
                        continue;
                    }
                    for j in 0..n {
                        next[i * n + j] += v * a[l * n + j];
                    }
                }
            }
            acc = next;
        }
        acc
    }

    /// trace(A^q): the number of points of period q.
    pub fn trace_power(&self, q: u32) -> u128 {
        let p = self.power_u128(q);
        (0..self.n).map(|i| p[i * self.n + i]).sum()
    }

    /// Number of admissible words of length m (1 for m = 0, N for m = 1,
    /// sum of the entries of `A^(m-1)` otherwise).
    pub fn word_count(&self, m: usize) -> u128 {
        match m {
            0 => 1,
            1 => self.n as u128,
            _ => self.power_u128(m as u32 - 1).iter().sum(),
        }
    }

    /// A symbol i whose column carries at least two ones, with the two
    /// smallest feeding symbols. Existence is guaranteed by aperiodicity.
    pub fn branching_column(&self) -> (Symbol, (Symbol, Symbol)) {
        for j in 0..self.n {
            let feeders: Vec<Symbol> = self.predecessors(j as Symbol).collect();
            if feeders.len() >= 2 {
                return (j as Symbol, (feeders[0], feeders[1]));
            }
        }
        unreachable!("aperiodic matrices have a column with two ones");
    }

    /// All admissible words of length m in lexicographic order.
    pub fn enumerate_words(&self, m: usize, cap: usize) -> Result<Vec<Word>> {
        let required = self.word_count(m);
        if required > cap as u128 {
            return Err(Error::DepthTooLarge { required, cap });
        }
        if m == 0 {
            return Ok(vec![Word::empty()]);
        }
        let mut out = Vec::with_capacity(required as usize);
        let mut buf = Vec::with_capacity(m);
        for s in 0..self.n {
            buf.push(s as Symbol);
            self.extend_words(m, &mut buf, &mut out);
            buf.pop();
        }
        Ok(out)
    }

    fn extend_words(&self, m: usize, buf: &mut Vec<Symbol>, out: &mut Vec<Word>) {
        if buf.len() == m {
            out.push(Word(buf.clone()));
            return;
        }
        let last = buf[buf.len() - 1];
        for s in self.successors(last).collect::<Vec<_>>() {
            buf.push(s);
            self.extend_words(m, buf, out);
            buf.pop();
        }
    }

    /// All points of period q, as length-q cyclically admissible words in
    /// lexicographic order. The count equals trace(A^q).
    pub fn periodic_points(&self, q: usize, cap: usize) -> Result<Vec<PeriodicPoint>> {
        if q == 0 {
            return Err(Error::InvalidInput("period q must be >= 1".into()));
        }
        let required = self.trace_power(q as u32);
        if required > cap as u128 {
            return Err(Error::DepthTooLarge { required, cap });
        }
        let words = self.enumerate_words(q, cap.max(required as usize))?;
        Ok(words
            .into_iter()
            .filter(|w| self.entry(w[w.len() - 1], w[0]))
            .map(|w| PeriodicPoint { cycle: w })
            .collect())
    }

    /// The shortest admissible cycle through j, lexicographically smallest
    /// among shortest; deterministic.
    pub fn canonical_tail(&self, j: Symbol) -> PeriodicPoint {
        for len in 1..=self.n {
            let mut buf = vec![j];
            if self.search_cycle(j, len, &mut buf) {
                return PeriodicPoint { cycle: Word(buf) };
            }
        }
        unreachable!("aperiodic matrices are strongly connected");
    }

    fn search_cycle(&self, start: Symbol, len: usize, buf: &mut Vec<Symbol>) -> bool {
        if buf.len() == len {
            return self.entry(buf[len - 1], start);
        }
        let last = buf[buf.len() - 1];
        for s in self.successors(last).collect::<Vec<_>>() {
            buf.push(s);
            if self.search_cycle(start, len, buf) {
                return true;
            }
            buf.pop();
        }
        false
    }

    /// log of the Perron root of A.
    pub fn topological_entropy(&self) -> f64 {
        self.perron().lambda.ln()
    }

    /// Perron root with left and right eigenvectors (power iteration,
    /// all-ones start, 1-normalized).
    pub fn perron(&self) -> PerronData {
        let a: Vec<f64> = self.entries.iter().map(|&b| b as u8 as f64).collect();
        let at: Vec<f64> = {
            let n = self.n;
            let mut t = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    t[j * n + i] = a[i * n + j];
                }
            }
            t
        };
        let (lambda, right) = power_iterate(&a, self.n);
        let (_, left) = power_iterate(&at, self.n);
        PerronData {
            lambda,
            right,
            left,
        }
    }
}

/// Perron eigendata of a nonnegative primitive matrix.
#[derive(Debug, Clone)]
pub struct PerronData {
    pub lambda: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

pub(crate) fn power_iterate(a: &[f64], n: usize) -> (f64, Vec<f64>) {
    let mut v = vec![1.0; n];
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let mut w = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += a[i * n + j] * v[j];
            }
            w[i] = acc;
        }
        let norm: f64 = w.iter().sum();
        let next = norm; // v is 1-normalized, so sum(Av) estimates lambda
        for x in w.iter_mut() {
            *x /= norm;
        }
        let residual: f64 = (0..n).map(|i| (w[i] - v[i]).abs()).sum();
        v = w;
        if (next - lambda).abs() <= PERRON_TOL * next.abs() && residual <= PERRON_TOL {
            return (next, v);
        }
        lambda = next;
    }
    (lambda, v)
}

/// Standalone aperiodicity check: smallest k <= (n-1)^2 + 1 with A^k positive.
pub fn check_aperiodic(rows: &[Vec<u8>]) -> Result<u32> {
    TransitionMatrix::new(rows).map(|m| m.exponent)
}

fn check_aperiodic_bool(entries: &[bool], n: usize) -> Option<u32> {
    let wielandt = (n - 1) * (n - 1) + 1;
    let mut acc = entries.to_vec();
    for k in 1..=wielandt as u32 {
        if acc.iter().all(|&b| b) {
            return Some(k);
        }
        let mut next = vec![false; n * n];
        for i in 0..n {
            for l in 0..n {
                if acc[i * n + l] {
                    for j in 0..n {
                        if entries[l * n + j] {
                            next[i * n + j] = true;
                        }
                    }
                }
            }
        }
        acc = next;
    }
    None
}

// ---------------------------------------------------------------------------
// Points
// ---------------------------------------------------------------------------

/// A periodic point, stored as its length-q representation www... .
/// The representation length need not be the minimal period.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PeriodicPoint {
    cycle: Word,
}

impl PeriodicPoint {
    /// Builds a periodic point, checking cyclic admissibility.
    pub fn new(cycle: Word, a: &TransitionMatrix) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidInput("empty cycle".into()));
        }
        for k in 0..cycle.len() {
            let from = cycle[k];
            let to = cycle[(k + 1) % cycle.len()];
            if !a.entry(from, to) {
                return Err(Error::InadmissibleJunction {
                    from: from as usize + 1,
                    to: to as usize + 1,
                    position: k,
                });
            }
        }
        Ok(PeriodicPoint { cycle })
    }

    pub fn cycle(&self) -> &Word {
        &self.cycle
    }

    /// Representation length q with sigma^q p = p.
    pub fn period(&self) -> usize {
        self.cycle.len()
    }

    /// The point shifted by k places (cycle rotated left).
    pub fn rotated(&self, k: usize) -> PeriodicPoint {
        let q = self.cycle.len();
        let k = k % q;
        let mut v = Vec::with_capacity(q);
        v.extend_from_slice(&self.cycle[k..]);
        v.extend_from_slice(&self.cycle[..k]);
        PeriodicPoint { cycle: Word(v) }
    }

    pub fn point(&self) -> Point {
        Point {
            prefix: Word::empty(),
            cycle: self.cycle.clone(),
        }
    }
}

/// An eventually periodic point w c^infinity, the computable stand-in for a
/// general element of the shift space.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Point {
    prefix: Word,
    cycle: Word,
}

impl Point {
    pub fn new(prefix: Word, cycle: Word) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::InvalidInput("point needs a non-empty cycle".into()));
        }
        Ok(Point { prefix, cycle })
    }

    pub fn periodic(p: &PeriodicPoint) -> Self {
        p.point()
    }

    pub fn prefix(&self) -> &Word {
        &self.prefix
    }

    pub fn cycle(&self) -> &Word {
        &self.cycle
    }

    pub fn symbol_at(&self, k: usize) -> Symbol {
        if k < self.prefix.len() {
            self.prefix[k]
        } else {
            self.cycle[(k - self.prefix.len()) % self.cycle.len()]
        }
    }

    /// The word formed by the first m symbols.
    pub fn leading_word(&self, m: usize) -> Word {
        Word((0..m).map(|k| self.symbol_at(k)).collect())
    }

    /// sigma^k of the point.
    pub fn shifted(&self, k: usize) -> Point {
        if k < self.prefix.len() {
            Point {
                prefix: Word(self.prefix[k..].to_vec()),
                cycle: self.cycle.clone(),
            }
        } else {
            let r = (k - self.prefix.len()) % self.cycle.len();
            let mut cyc = Vec::with_capacity(self.cycle.len());
            cyc.extend_from_slice(&self.cycle[r..]);
            cyc.extend_from_slice(&self.cycle[..r]);
            Point {
                prefix: Word::empty(),
                cycle: Word(cyc),
            }
        }
    }

    /// Checks all transitions, including prefix-to-cycle and the cycle wrap.
    pub fn check_admissible(&self, a: &TransitionMatrix) -> Result<()> {
        let horizon = self.prefix.len() + self.cycle.len();
        for k in 0..horizon {
            let from = self.symbol_at(k);
            let to = self.symbol_at(k + 1);
            if !a.entry(from, to) {
                return Err(Error::InadmissibleJunction {
                    from: from as usize + 1,
                    to: to as usize + 1,
                    position: k,
                });
            }
        }
        Ok(())
    }

    /// Exact equality of the two infinite sequences.
    pub fn seq_eq(&self, other: &Point) -> bool {
        let start = self.prefix.len().max(other.prefix.len());
        let horizon = start + lcm(self.cycle.len(), other.cycle.len());
        (0..horizon).all(|k| self.symbol_at(k) == other.symbol_at(k))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// d_theta(w, w') = theta^(first disagreement index); 0 for equal sequences.
pub fn metric_distance(omega: &Point, omega_prime: &Point, theta: f64) -> Result<f64> {
    if !(0.0 < theta && theta < 1.0) {
        return Err(Error::InvalidInput(format!("theta = {theta} not in (0,1)")));
    }
    if omega.seq_eq(omega_prime) {
        return Ok(0.0);
    }
    let mut k = 0;
    while omega.symbol_at(k) == omega_prime.symbol_at(k) {
        k += 1;
    }
    Ok(theta.powi(k as i32))
}

// ---------------------------------------------------------------------------
// Markov measures
// ---------------------------------------------------------------------------

/// A fully supported stationary Markov measure: stationary vector p and a
/// stochastic matrix P whose positivity pattern matches the transitions.
#[derive(Debug, Clone)]
pub struct MarkovMeasure {
    n: usize,
    stationary: Vec<f64>,
    stochastic: Vec<f64>,
}

impl MarkovMeasure {
    /// Validates a user-supplied pair (p, P) against the transition pattern.
    pub fn new(
        stationary: Vec<f64>,
        stochastic_rows: &[Vec<f64>],
        a: &TransitionMatrix,
    ) -> Result<Self> {
        let n = a.n();
        if stationary.len() != n || stochastic_rows.len() != n {
            return Err(Error::InvalidInput(format!(
                "measure dimensions do not match alphabet size {n}"
            )));
        }
        let psum: f64 = stationary.iter().sum();
        if stationary.iter().any(|&x| x <= 0.0) || (psum - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidInput(
                "stationary vector must be positive and sum to 1".into(),
            ));
        }
        let mut stochastic = vec![0.0; n * n];
        for (i, row) in stochastic_rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidInput(format!(
                    "stochastic row {i} has bad length"
                )));
            }
            let rsum: f64 = row.iter().sum();
            if (rsum - 1.0).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "stochastic row {} sums to {rsum}, expected 1",
                    i + 1
                )));
            }
            for (j, &x) in row.iter().enumerate() {
                let allowed = a.entry(i as Symbol, j as Symbol);
                if allowed && x <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "P({},{}) must be positive on an allowed transition",
                        i + 1,
                        j + 1
                    )));
                }
                if !allowed && x != 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "P({},{}) must vanish on a forbidden transition",
                        i + 1,
                        j + 1
                    )));
                }
                stochastic[i * n + j] = x;
            }
        }
        // stationarity p^T P = p^T
        for j in 0..n {
            let lhs: f64 = (0..n).map(|i| stationary[i] * stochastic[i * n + j]).sum();
            if (lhs - stationary[j]).abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "vector is not stationary at column {} (defect {:.3e})",
                    j + 1,
                    lhs - stationary[j]
                )));
            }
        }
        Ok(MarkovMeasure {
            n,
            stationary,
            stochastic,
        })
    }

    /// The Parry measure (measure of maximal entropy): P(ij) = A(ij) v_j / (lambda v_i)
    /// with v the right Perron vector, p_i proportional to u_i v_i.
    pub fn parry(a: &TransitionMatrix) -> Self {
        let n = a.n();
        let PerronData {
            lambda,
            right,
            left,
        } = a.perron();
        let mut stochastic = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                if a.entry(i as Symbol, j as Symbol) {
                    stochastic[i * n + j] = right[j] / (lambda * right[i]);
                }
            }
        }
        let mut stationary: Vec<f64> = (0..n).map(|i| left[i] * right[i]).collect();
        let z: f64 = stationary.iter().sum();
        for x in stationary.iter_mut() {
            *x /= z;
        }
        MarkovMeasure {
            n,
            stationary,
            stochastic,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn transition(&self, from: Symbol, to: Symbol) -> f64 {
        self.stochastic[from as usize * self.n + to as usize]
    }

    /// mu[w] = p_{w0} prod P(w_k w_{k+1}); 1 for the empty word; 0 exactly on
    /// inadmissible words.
    pub fn cylinder_mass(&self, word: &[Symbol]) -> f64 {
        if word.is_empty() {
            return 1.0;
        }
        let mut mass = self.stationary[word[0] as usize];
        for pair in word.windows(2) {
            mass *= self.transition(pair[0], pair[1]);
        }
        mass
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub fn full2() -> TransitionMatrix {
        TransitionMatrix::new(&[vec![1, 1], vec![1, 1]]).unwrap()
    }

    pub fn golden() -> TransitionMatrix {
        TransitionMatrix::new(&[vec![1, 1], vec![1, 0]]).unwrap()
    }

    /// Oracle: plain u64 matrix power, written independently of the
    /// TransitionMatrix internals.
    fn matpow_sum_trace(rows: &[Vec<u8>], k: usize) -> (u64, u64) {
        let n = rows.len();
        let mut acc: Vec<u64> = (0..n * n).map(|i| (i / n == i % n) as u64).collect();
        for _ in 0..k {
            let mut next = vec![0u64; n * n];
            for i in 0..n {
                for l in 0..n {
                    for j in 0..n {
                        next[i * n + j] += acc[i * n + l] * rows[l][j] as u64;
                    }
                }
            }
            acc = next;
        }
        let sum = acc.iter().sum();
        let trace = (0..n).map(|i| acc[i * n + i]).sum();
        (sum, trace)
    }

    #[test]
    fn aperiodicity_exponents() {
        assert_eq!(full2().aperiodicity_exponent(), 1);
        // A^2 = [[2,1],[1,1]] is the first positive power
        assert_eq!(golden().aperiodicity_exponent(), 2);
    }

    #[test]
    fn period_two_rotation_is_rejected() {
        let err = TransitionMatrix::new(&[vec![0, 1], vec![1, 0]]).unwrap_err();
        match err {
            Error::NotAperiodic {
                zero_row,
                zero_column,
            } => {
                assert_eq!(zero_row, None);
                assert_eq!(zero_column, None);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn zero_row_is_reported() {
        let err = TransitionMatrix::new(&[vec![0, 0], vec![1, 1]]).unwrap_err();
        match err {
            Error::NotAperiodic { zero_row, .. } => assert_eq!(zero_row, Some(1)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn branching_column_examples() {
        assert_eq!(full2().branching_column(), (0, (0, 1)));
        assert_eq!(golden().branching_column(), (0, (0, 1)));
        let a = TransitionMatrix::new(&[vec![1, 1, 0], vec![0, 0, 1], vec![1, 0, 0]]).unwrap();
        let (i, (j1, j2)) = a.branching_column();
        assert_eq!(i, 0);
        assert_eq!((j1, j2), (0, 2));
    }

    #[test]
    fn word_enumeration_matches_examples() {
        let words = full2().enumerate_words(2, 100).unwrap();
        let shown: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, ["11", "12", "21", "22"]);

        // count 5 = sum of the entries of A^2 (the only length-3 words lost
        // to A(22) = 0 are 122, 221, 222)
        let words = golden().enumerate_words(3, 100).unwrap();
        let shown: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        assert_eq!(shown, ["111", "112", "121", "211", "212"]);

        assert_eq!(
            golden().enumerate_words(0, 100).unwrap(),
            vec![Word::empty()]
        );
    }

    #[test]
    fn word_counts_match_matrix_powers() {
        for a in [full2(), golden()] {
            let rows: Vec<Vec<u8>> = (0..a.n())
                .map(|i| {
                    (0..a.n())
                        .map(|j| a.entry(i as Symbol, j as Symbol) as u8)
                        .collect()
                })
                .collect();
            for m in 2..=10 {
                let (sum, _) = matpow_sum_trace(&rows, m - 1);
                assert_eq!(a.word_count(m), sum as u128);
                assert_eq!(
                    a.enumerate_words(m, 1 << 20).unwrap().len() as u128,
                    sum as u128
                );
            }
        }
    }

    #[test]
    fn periodic_points_match_traces() {
        for a in [full2(), golden()] {
            let rows: Vec<Vec<u8>> = (0..a.n())
                .map(|i| {
                    (0..a.n())
                        .map(|j| a.entry(i as Symbol, j as Symbol) as u8)
                        .collect()
                })
                .collect();
            for q in 1..=12 {
                let (_, trace) = matpow_sum_trace(&rows, q);
                let pts = a.periodic_points(q, 1 << 20).unwrap();
                assert_eq!(pts.len() as u64, trace, "q = {q}");
            }
        }
        // golden mean fixed points: only 1* survives since A(22) = 0
        let fixed = golden().periodic_points(1, 10).unwrap();
        assert_eq!(fixed.len(), 1);
        assert_eq!(fixed[0].cycle().to_string(), "1");
        let q3: Vec<String> = golden()
            .periodic_points(3, 100)
            .unwrap()
            .iter()
            .map(|p| p.cycle().to_string())
            .collect();
        assert_eq!(q3, ["111", "112", "121", "211"]);
    }

    #[test]
    fn enumeration_cap_fires() {
        match full2().enumerate_words(30, 1000) {
            Err(Error::DepthTooLarge { required, cap }) => {
                assert_eq!(required, 1 << 30);
                assert_eq!(cap, 1000);
            }
            other => panic!("expected DepthTooLarge, got {other:?}"),
        }
    }

    #[test]
    fn entropy_values() {
        assert_relative_eq!(
            full2().topological_entropy(),
            2.0f64.ln(),
            max_relative = 1e-12
        );
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        assert_relative_eq!(
            golden().topological_entropy(),
            phi.ln(),
            max_relative = 1e-12
        );
        let full3 = TransitionMatrix::new(&[vec![1, 1, 1], vec![1, 1, 1], vec![1, 1, 1]]).unwrap();
        assert_relative_eq!(
            full3.topological_entropy(),
            3.0f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn entropy_from_word_growth() {
        // (#words(m))^(1/m) approaches e^h within 10% relative by m = 10
        let a = golden();
        let h = a.topological_entropy().exp();
        let mut prev_err = f64::INFINITY;
        for m in 2..=10 {
            let c = a.word_count(m) as f64;
            let err = (c.powf(1.0 / m as f64) - h).abs() / h;
            assert!(
                err <= prev_err + 1e-12,
                "relative error not improving at m = {m}"
            );
            prev_err = err;
        }
        assert!(prev_err < 0.10);
    }

    #[test]
    fn parry_full_shift_is_uniform() {
        let mu = MarkovMeasure::parry(&full2());
        for i in 0..2 {
            assert_relative_eq!(mu.stationary()[i], 0.5, max_relative = 1e-12);
            for j in 0..2 {
                assert_relative_eq!(
                    mu.transition(i as Symbol, j as Symbol),
                    0.5,
                    max_relative = 1e-12
                );
            }
        }
        let w = parse_word("12", 2).unwrap();
        assert_relative_eq!(mu.cylinder_mass(&w), 0.25, max_relative = 1e-12);
    }

    #[test]
    fn parry_golden_matches_eigen_oracle() {
        // oracle: closed-form Perron data of [[1,1],[1,0]]
        let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
        let mu = MarkovMeasure::parry(&golden());
        assert_relative_eq!(mu.transition(0, 0), 1.0 / phi, max_relative = 1e-11);
        assert_relative_eq!(mu.transition(0, 1), 1.0 / (phi * phi), max_relative = 1e-11);
        assert_relative_eq!(mu.transition(1, 0), 1.0, max_relative = 1e-11);
        assert_eq!(mu.transition(1, 1), 0.0);
        assert_relative_eq!(
            mu.stationary()[0],
            phi * phi / (phi * phi + 1.0),
            max_relative = 1e-11
        );
        // p^T P = p^T
        for j in 0..2u8 {
            let lhs: f64 = (0..2u8)
                .map(|i| mu.stationary()[i as usize] * mu.transition(i, j))
                .sum();
            assert_relative_eq!(lhs, mu.stationary()[j as usize], max_relative = 1e-11);
        }
    }

    #[test]
    fn parry_masses_sum_to_one() {
        for a in [full2(), golden()] {
            let mu = MarkovMeasure::parry(&a);
            for m in 1..=8 {
                let total: f64 = a
                    .enumerate_words(m, 1 << 20)
                    .unwrap()
                    .iter()
                    .map(|w| mu.cylinder_mass(w))
                    .sum();
                assert_relative_eq!(total, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn canonical_tails() {
        assert_eq!(full2().canonical_tail(1).cycle().to_string(), "2");
        assert_eq!(golden().canonical_tail(1).cycle().to_string(), "21");
        assert_eq!(golden().canonical_tail(0).cycle().to_string(), "1");
        // idempotence / stability
        for _ in 0..3 {
            assert_eq!(golden().canonical_tail(1), golden().canonical_tail(1));
        }
    }

    #[test]
    fn metric_distances() {
        let one = Point::new(Word::empty(), parse_word("1", 2).unwrap()).unwrap();
        let two = Point::new(Word::empty(), parse_word("2", 2).unwrap()).unwrap();
        let mixed = Point::new(Word::empty(), parse_word("12", 2).unwrap()).unwrap();
        let oneone = Point::new(Word::empty(), parse_word("11", 2).unwrap()).unwrap();
        assert_eq!(metric_distance(&one, &one, 0.5).unwrap(), 0.0);
        assert_eq!(metric_distance(&one, &two, 0.5).unwrap(), 1.0);
        assert_eq!(metric_distance(&mixed, &oneone, 0.5).unwrap(), 0.5);
        // (1)* written with a redundant prefix is still the same sequence
        let padded = Point::new(parse_word("11", 2).unwrap(), parse_word("1", 2).unwrap()).unwrap();
        assert_eq!(metric_distance(&one, &padded, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn word_formatting_roundtrip() {
        let w = parse_word("121", 2).unwrap();
        assert_eq!(w.symbols(), &[0, 1, 0]);
        assert_eq!(format_word(&w, 2), "121");
        let wide = parse_word("10.2.11", 12).unwrap();
        assert_eq!(wide.symbols(), &[9, 1, 10]);
        assert_eq!(format_word(&wide, 12), "10.2.11");
    }

    #[test]
    fn custom_measure_validation() {
        let a = golden();
        // wrong pattern: mass on the forbidden 2->2 transition
        let err = MarkovMeasure::new(vec![0.5, 0.5], &[vec![0.5, 0.5], vec![0.5, 0.5]], &a);
        assert!(err.is_err());
    }
}
