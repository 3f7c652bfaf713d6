//! One-dimensional linear cellular automata over GF(2).
//!
//! A register of `n` binary cells evolves under a per-cell Wolfram rule
//! applied to the `(left, self, right)` neighbourhood. Cells outside
//! `[0, n)` read as zero (null boundary), which is what makes a hybrid
//! 90/150 register equivalent to multiplication by a tridiagonal matrix.
//!
//! Only the eight linear rules are accepted. For hybrid 90/150 registers the
//! characteristic polynomial decides maximality: the register cycles through
//! all `2^n - 1` nonzero states iff that polynomial is primitive.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Largest register accepted by [`is_maximal`].
pub const MAX_MAXIMAL_CELLS: usize = 24;

/// The eight linear elementary rules, by Wolfram number.
pub const LINEAR_RULES: [u8; 8] = [0, 60, 90, 102, 150, 170, 204, 240];

/// A Wolfram rule number known to be linear.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LinearRule(u8);

impl LinearRule {
    pub const R90: LinearRule = LinearRule(90);
    pub const R150: LinearRule = LinearRule(150);

    pub fn new(number: u16) -> Result<Self> {
        match u8::try_from(number) {
            Ok(n) if LINEAR_RULES.contains(&n) => Ok(LinearRule(n)),
            _ => Err(Error::UnknownRule(number)),
        }
    }

    pub fn number(self) -> u8 {
        self.0
    }

    /// Next value of a cell from its neighbourhood, read off the rule's
    /// truth table (bit `4l + 2c + r` of the rule number).
    #[inline]
    pub fn apply(self, left: bool, centre: bool, right: bool) -> bool {
        let idx = (left as u8) << 2 | (centre as u8) << 1 | right as u8;
        (self.0 >> idx) & 1 == 1
    }

    /// Diagonal entry of the tridiagonal transition matrix, if this rule
    /// belongs to the hybrid 90/150 family.
    fn hybrid_diagonal(self) -> Option<bool> {
        match self.0 {
            90 => Some(false),
            150 => Some(true),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CaRuleVector(Vec<LinearRule>);

impl CaRuleVector {
    pub fn new(rules: Vec<LinearRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::dim("rule vector must have at least one cell"));
        }
        Ok(CaRuleVector(rules))
    }

    pub fn from_numbers(numbers: &[u16]) -> Result<Self> {
        Self::new(numbers.iter().map(|&n| LinearRule::new(n)).collect::<Result<_>>()?)
    }

    /// Hybrid vector from a diagonal bit pattern: bit set → rule 150.
    pub fn from_diagonal(diagonal: &[bool]) -> Result<Self> {
        Self::new(
            diagonal
                .iter()
                .map(|&d| if d { LinearRule::R150 } else { LinearRule::R90 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn rules(&self) -> &[LinearRule] {
        &self.0
    }

    pub fn is_hybrid(&self) -> bool {
        self.0.iter().all(|r| r.hybrid_diagonal().is_some())
    }

    /// The `d_i` vector: `true` for rule 150, `false` for rule 90.
    pub fn diagonal(&self) -> Result<Vec<bool>> {
        self.0
            .iter()
            .map(|r| r.hybrid_diagonal().ok_or(Error::UnsupportedRule(r.0 as u16)))
            .collect()
    }

    /// Copy with one cell's rule toggled between 90 and 150.
    pub fn with_toggled(&self, cell: usize) -> Result<Self> {
        let mut rules = self.0.clone();
        let r = rules
            .get_mut(cell)
            .ok_or_else(|| Error::dim(format!("cell {cell} out of range")))?;
        *r = match r.0 {
            90 => LinearRule::R150,
            150 => LinearRule::R90,
            other => return Err(Error::UnsupportedRule(other as u16)),
        };
        Ok(CaRuleVector(rules))
    }
}

impl fmt::Display for CaRuleVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{}", r.0)?;
        }
        Ok(())
    }
}

impl FromStr for CaRuleVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let numbers = s
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<u16>()
                    .map_err(|_| Error::parse(format!("bad rule number `{}`", t.trim())))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_numbers(&numbers)
    }
}

/// Register contents; index 0 is cell 1 (the most significant bit when
/// packed into an integer).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CaState(Vec<bool>);

impl CaState {
    pub fn new(bits: Vec<bool>) -> Self {
        CaState(bits)
    }

    pub fn zeros(n: usize) -> Self {
        CaState(vec![false; n])
    }

    /// Unpack the low `n` bits of `value`, cell 1 taking bit `n - 1`.
    pub fn from_u64(value: u64, n: usize) -> Self {
        CaState((0..n).map(|i| (value >> (n - 1 - i)) & 1 == 1).collect())
    }

    pub fn to_u64(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| acc << 1 | b as u64)
    }

    pub fn from_byte(b: u8) -> Self {
        Self::from_u64(b as u64, 8)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&b| !b)
    }

    pub fn xor(&self, other: &CaState) -> CaState {
        CaState(self.0.iter().zip(&other.0).map(|(a, b)| a ^ b).collect())
    }
}

impl fmt::Display for CaState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for CaState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Err(Error::parse("empty CA state"));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::parse(format!("bad state bit `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(CaState)
    }
}

/// Dense square matrix over GF(2).
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    n: usize,
    entries: Vec<bool>,
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{}", self.n, self.n)?;
        for row in 0..self.n {
            for col in 0..self.n {
                f.write_str(if self.get(row, col) { "1" } else { "0" })?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl BitMatrix {
    pub fn zeros(n: usize) -> Self {
        BitMatrix {
            n,
            entries: vec![false; n * n],
        }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.entries[row * self.n + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: bool) {
        self.entries[row * self.n + col] = v;
    }

    pub fn diagonal(&self) -> Vec<bool> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_state(&self, s: &CaState) -> Result<CaState> {
        if s.len() != self.n {
            return Err(Error::dim(format!(
                "state of {} cells against a {}x{} matrix",
                s.len(),
                self.n,
                self.n
            )));
        }
        Ok(CaState(
            (0..self.n)
                .map(|row| {
                    (0..self.n).fold(false, |acc, col| acc ^ (self.get(row, col) & s.0[col]))
                })
                .collect(),
        ))
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|r| (0..self.n).map(|c| self.get(r, c) as u8).collect())
            .collect()
    }
}

/// Polynomial over GF(2); `coeffs[i]` is the coefficient of `x^i`, with no
/// trailing zeros.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Gf2Polynomial {
    coeffs: Vec<bool>,
}

impl Gf2Polynomial {
    pub fn from_coeffs(mut coeffs: Vec<bool>) -> Self {
        while coeffs.last() == Some(&false) {
            coeffs.pop();
        }
        Gf2Polynomial { coeffs }
    }

    /// Polynomial with unit coefficients at the given exponents.
    pub fn from_exponents(exponents: &[usize]) -> Self {
        let deg = exponents.iter().copied().max().unwrap_or(0);
        let mut coeffs = vec![false; deg + 1];
        for &e in exponents {
            coeffs[e] ^= true;
        }
        Self::from_coeffs(coeffs)
    }

    pub fn one() -> Self {
        Self::from_coeffs(vec![true])
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.coeffs.get(i).copied().unwrap_or(false)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn exponents(&self) -> Vec<usize> {
        (0..self.coeffs.len()).rev().filter(|&i| self.coeffs[i]).collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coeffs.len().max(other.coeffs.len());
        Self::from_coeffs((0..len).map(|i| self.coeff(i) ^ other.coeff(i)).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::from_coeffs(vec![]);
        }
        let mut out = vec![false; self.coeffs.len() + other.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            if a {
                for (j, &b) in other.coeffs.iter().enumerate() {
                    out[i + j] ^= b;
                }
            }
        }
        Self::from_coeffs(out)
    }

    /// Bit `i` holds the coefficient of `x^i`; `None` past degree 63.
    pub fn to_u64(&self) -> Option<u64> {
        if self.coeffs.len() > 64 {
            return None;
        }
        Some(
            self.coeffs
                .iter()
                .enumerate()
                .fold(0, |acc, (i, &c)| acc | (c as u64) << i),
        )
    }

    /// Primitivity over GF(2) for degrees up to [`MAX_MAXIMAL_CELLS`].
    ///
    /// `f` of degree `n` is primitive iff the multiplicative order of `x`
    /// modulo `f` is exactly `2^n - 1`.
    pub fn is_primitive(&self) -> Result<bool> {
        let n = match self.degree() {
            Some(0) | None => return Ok(false),
            Some(n) => n,
        };
        if n > MAX_MAXIMAL_CELLS {
            return Err(Error::Capability {
                n,
                max: MAX_MAXIMAL_CELLS,
            });
        }
        let modulus = self.to_u64().expect("degree bounded above");
        let order = (1u64 << n) - 1;
        if pow_x_mod(order, modulus, n) != 1 {
            return Ok(false);
        }
        Ok(prime_factors(order)
            .into_iter()
            .all(|p| pow_x_mod(order / p, modulus, n) != 1))
    }
}

impl fmt::Debug for Gf2Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Gf2Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .exponents()
            .into_iter()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "x".to_string(),
                e => format!("x^{e}"),
            })
            .collect();
        f.write_str(&terms.join(" + "))
    }
}

// Carry-less product reduced modulo `modulus` (degree `n` ≤ 31).
fn mulmod(a: u64, b: u64, modulus: u64, n: usize) -> u64 {
    let mut prod = 0u64;
    for i in 0..n {
        if (b >> i) & 1 == 1 {
            prod ^= a << i;
        }
    }
    for i in (n..2 * n).rev() {
        if (prod >> i) & 1 == 1 {
            prod ^= modulus << (i - n);
        }
    }
    prod
}

fn pow_x_mod(mut e: u64, modulus: u64, n: usize) -> u64 {
    // x itself is unreduced when n == 1
    let mut base = mulmod(0b10, 1, modulus, n);
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, base, modulus, n);
        }
        base = mulmod(base, base, modulus, n);
        e >>= 1;
    }
    acc
}

fn prime_factors(mut m: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= m {
        if m.is_multiple_of(p) {
            out.push(p);
            while m.is_multiple_of(p) {
                m /= p;
            }
        }
        p += 1;
    }
    if m > 1 {
        out.push(m);
    }
    out
}

/// One synchronous update of every cell with null boundaries.
pub fn step(state: &CaState, rules: &CaRuleVector) -> Result<CaState> {
    let n = rules.len();
    if state.len() != n {
        return Err(Error::dim(format!(
            "state of {} cells against {} rules",
            state.len(),
            n
        )));
    }
    let s = &state.0;
    Ok(CaState(
        (0..n)
            .map(|i| {
                let left = i > 0 && s[i - 1];
                let right = i + 1 < n && s[i + 1];
                rules.0[i].apply(left, s[i], right)
            })
            .collect(),
    ))
}

pub fn transition_matrix(rules: &CaRuleVector) -> Result<BitMatrix> {
    let d = rules.diagonal()?;
    let n = d.len();
    let mut t = BitMatrix::zeros(n);
    for (i, &di) in d.iter().enumerate() {
        t.set(i, i, di);
        if i + 1 < n {
            t.set(i, i + 1, true);
            t.set(i + 1, i, true);
        }
    }
    Ok(t)
}

/// `det(T + xI)` through the continuant recurrence
/// `p_i = (d_i + x) p_{i-1} + p_{i-2}`.
pub fn characteristic_polynomial(rules: &CaRuleVector) -> Result<Gf2Polynomial> {
    let d = rules.diagonal()?;
    let mut prev = Gf2Polynomial::one();
    let mut cur = Gf2Polynomial::from_coeffs(vec![d[0], true]);
    for &di in &d[1..] {
        let factor = Gf2Polynomial::from_coeffs(vec![di, true]);
        let next = factor.mul(&cur).add(&prev);
        prev = cur;
        cur = next;
    }
    Ok(cur)
}

pub fn is_maximal(rules: &CaRuleVector) -> Result<bool> {
    if rules.len() > MAX_MAXIMAL_CELLS {
        return Err(Error::Capability {
            n: rules.len(),
            max: MAX_MAXIMAL_CELLS,
        });
    }
    characteristic_polynomial(rules)?.is_primitive()
}

/// Emit `length` bytes from an 8-cell maximal register; byte `t` is the
/// state after `t` steps with cell 1 as the most significant bit.
pub fn m_sequence(rules: &CaRuleVector, seed: &CaState, length: usize) -> Result<Vec<u8>> {
    if rules.len() != 8 || seed.len() != 8 {
        return Err(Error::dim("m-sequences are emitted from 8-cell registers"));
    }
    if seed.is_zero() {
        return Err(Error::DegenerateSeed);
    }
    if !is_maximal(rules)? {
        return Err(Error::NonMaximal(rules.to_string()));
    }
    Ok(MSequence::new_unchecked(rules, seed.to_u64() as u8)
        .take(length)
        .collect())
}

/// Byte-packed stepping of a validated 8-cell hybrid register.
///
/// Callers must have checked maximality; iteration never terminates.
#[derive(Clone, Debug)]
pub(crate) struct MSequence {
    diagonal_mask: u8,
    state: u8,
}

impl MSequence {
    pub(crate) fn new_unchecked(rules: &CaRuleVector, seed: u8) -> Self {
        let mask = rules
            .rules()
            .iter()
            .fold(0u8, |acc, r| acc << 1 | (r.number() == 150) as u8);
        MSequence {
            diagonal_mask: mask,
            state: seed,
        }
    }
}

impl Iterator for MSequence {
    type Item = u8;

    #[inline]
    fn next(&mut self) -> Option<u8> {
        let s = self.state;
        // cell 1 is the MSB, so its left neighbour is beyond bit 7 (zero)
        // and shifting left brings in a zero right boundary
        self.state = (s >> 1) ^ (s << 1) ^ (s & self.diagonal_mask);
        Some(s)
    }
}
