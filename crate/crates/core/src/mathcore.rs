//! Words over finite alphabets, Hamming statistics and entropy functions.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{invalid, Result};
use crate::scalar::{xlog2x, Real};

/// A word over the alphabet `{0, .., d-1}`, optionally extended with the
/// vacuum symbol.
///
/// The vacuum symbol is stored as the value `d`, so a word with vacuum
/// entries is a word over `{0, .., d}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Word {
    symbols: Vec<u32>,
    alphabet: u32,
}

impl Word {
    /// Builds a word, accepting digits `< d` and the vacuum sentinel `d`.
    pub fn new(symbols: Vec<u32>, alphabet: u32) -> Result<Self> {
        if alphabet < 2 {
            return invalid(format!("alphabet size must be at least 2, got {alphabet}"));
        }
        if let Some(&s) = symbols.iter().find(|&&s| s > alphabet) {
            return invalid(format!("symbol {s} outside alphabet of size {alphabet}"));
        }
        Ok(Self { symbols, alphabet })
    }

    /// Builds a vacuum-free word.
    pub fn digits(symbols: Vec<u32>, alphabet: u32) -> Result<Self> {
        let w = Self::new(symbols, alphabet)?;
        if w.has_vacuum() {
            return invalid("vacuum symbol not allowed here");
        }
        Ok(w)
    }

    pub fn zeros(len: usize, alphabet: u32) -> Result<Self> {
        Self::new(vec![0; len], alphabet)
    }

    /// The vacuum sentinel for this word's alphabet.
    pub fn vac(&self) -> u32 {
        self.alphabet
    }

    pub fn symbols(&self) -> &[u32] {
        &self.symbols
    }

    pub fn alphabet(&self) -> u32 {
        self.alphabet
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn has_vacuum(&self) -> bool {
        self.symbols.contains(&self.alphabet)
    }

    /// Restriction of the word to the given positions, in the given order.
    pub fn select(&self, positions: &[usize]) -> Result<Word> {
        let mut out = Vec::with_capacity(positions.len());
        for &i in positions {
            match self.symbols.get(i) {
                Some(&s) => out.push(s),
                None => return invalid(format!("position {i} out of range for word of length {}", self.len())),
            }
        }
        Ok(Word { symbols: out, alphabet: self.alphabet })
    }

    /// Dot product `b . k` with vacuum entries read as digit 0.
    pub fn dot_mod(&self, key: &[u32]) -> u64 {
        let d = u64::from(self.alphabet);
        self.symbols
            .iter()
            .zip(key)
            .map(|(&b, &k)| if b == self.alphabet { 0 } else { u64::from(b) * u64::from(k) })
            .fold(0, |acc, x| (acc + x) % d)
    }
}

fn check_pair(x: &Word, y: &Word) -> Result<()> {
    if x.alphabet != y.alphabet {
        return invalid(format!("alphabet mismatch: {} vs {}", x.alphabet, y.alphabet));
    }
    if x.len() != y.len() {
        return invalid(format!("length mismatch: {} vs {}", x.len(), y.len()));
    }
    if x.is_empty() {
        return invalid("empty words");
    }
    Ok(())
}

/// Number of nonzero symbols of a vacuum-free word.
pub fn hamming_weight_count(q: &Word) -> Result<usize> {
    if q.has_vacuum() {
        return invalid("vacuum symbol in word; Hamming weight is defined on digits only");
    }
    Ok(q.symbols.iter().filter(|&&s| s != 0).count())
}

pub fn relative_hamming_weight<T: Real>(q: &Word) -> Result<T> {
    if q.is_empty() {
        return invalid("empty word");
    }
    let w = hamming_weight_count(q)?;
    Ok(T::from_count(w as u128) / T::from_count(q.len() as u128))
}

/// Raw number of positions where two vacuum-free words differ.
pub fn mismatch_count(x: &Word, y: &Word) -> Result<usize> {
    check_pair(x, y)?;
    if x.has_vacuum() || y.has_vacuum() {
        return invalid("vacuum symbol present; use loss_aware_distance");
    }
    Ok(x.symbols.iter().zip(&y.symbols).filter(|(a, b)| a != b).count())
}

/// Normalized Hamming distance between equal-length vacuum-free words.
pub fn hamming_distance<T: Real>(x: &Word, y: &Word) -> Result<T> {
    let c = mismatch_count(x, y)?;
    Ok(T::from_count(c as u128) / T::from_count(x.len() as u128))
}

/// Normalized distance that counts a position as an error when the symbols
/// differ or when either one is the vacuum.
pub fn loss_aware_distance<T: Real>(x: &Word, y: &Word) -> Result<T> {
    check_pair(x, y)?;
    let vac = x.alphabet;
    let errors = x
        .symbols
        .iter()
        .zip(&y.symbols)
        .filter(|(&a, &b)| a != b || a == vac || b == vac)
        .count();
    Ok(T::from_count(errors as u128) / T::from_count(x.len() as u128))
}

fn check_fraction<T: Real>(x: T) -> Result<()> {
    if !(x >= T::zero() && x <= T::one()) {
        return invalid(format!("argument {x} outside [0, 1]"));
    }
    Ok(())
}

/// `H_d(x) * log2(d)`, i.e. the d-ary entropy expressed in bits.
pub fn entropy_dary_bits<T: Real>(d: u32, x: T) -> Result<T> {
    if d < 2 {
        return invalid(format!("alphabet size must be at least 2, got {d}"));
    }
    check_fraction(x)?;
    let dm1 = T::from_u32(d - 1).expect("small integer");
    Ok(x * dm1.log2() - xlog2x(x) - xlog2x(T::one() - x))
}

/// The d-ary entropy function `H_d(x)`.
pub fn entropy_dary<T: Real>(d: u32, x: T) -> Result<T> {
    let bits = entropy_dary_bits(d, x)?;
    Ok(bits / T::from_u32(d).expect("small integer").log2())
}

/// Upper end `(d-1)/d` of the range on which `H_d` is increasing.
pub fn entropy_peak<T: Real>(d: u32) -> T {
    let df = T::from_u32(d).expect("small integer");
    (df - T::one()) / df
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Number of words of length `n` over `d` symbols within Hamming distance
/// `radius` of a fixed center.
pub fn hamming_ball_volume(n: u64, d: u32, radius: u64) -> Result<BigUint> {
    if d < 2 {
        return invalid(format!("alphabet size must be at least 2, got {d}"));
    }
    if radius > n {
        return invalid(format!("radius {radius} exceeds word length {n}"));
    }
    let base = BigUint::from(d - 1);
    let mut power = BigUint::one();
    let mut total = BigUint::zero();
    for j in 0..=radius {
        total += binomial(n, j) * &power;
        power *= &base;
    }
    Ok(total)
}

/// `log2` of an arbitrary-precision integer, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().expect("fits in f64").log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("64 leading bits");
    (top as f64).log2() + shift as f64
}

/// Checks `|B(n, floor(rho n))| <= d^(n H_d(rho))` in the log domain.
pub fn ball_volume_bound_check(n: u64, d: u32, rho: f64) -> Result<bool> {
    let peak = entropy_peak::<f64>(d);
    if !(0.0..=peak + 1e-12).contains(&rho) {
        return invalid(format!("rho {rho} outside [0, {peak}]"));
    }
    let rho = rho.min(peak);
    let radius = ((rho * n as f64) + 1e-9).floor() as u64;
    let volume = hamming_ball_volume(n, d, radius.min(n))?;
    let lhs = log2_big(&volume);
    let rhs = n as f64 * entropy_dary_bits(d, rho)?;
    // slack covers round-off in the two logarithms only
    Ok(lhs <= rhs + 1e-9)
}

/// All words of length `n` over `{0, .., d-1}` in lexicographic order.
pub fn all_words(n: usize, d: u32) -> impl Iterator<Item = Vec<u32>> {
    let total = (d as usize).pow(n as u32);
    (0..total).map(move |mut idx| {
        let mut w = vec![0u32; n];
        for slot in w.iter_mut().rev() {
            *slot = (idx % d as usize) as u32;
            idx /= d as usize;
        }
        w
    })
}
