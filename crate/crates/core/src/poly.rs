//! Polynomials in the four chart coordinates.
//!
//! Used for the random metric and potential families and for the polynomial
//! section fields in the oracle tests. Derivatives are exact, which makes these
//! fields the analytic reference against which finite differences are checked.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector4;
use rand::Rng;

use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: [u8; 4],
}

impl Monomial {
    fn eval(&self, x: &Vector4<f64>) -> f64 {
        let mut v = self.coeff;
        for (k, &e) in self.powers.iter().enumerate() {
            if e > 0 {
                v *= x[k].powi(i32::from(e));
            }
        }
        v
    }

    fn degree(&self) -> u32 {
        self.powers.iter().map(|&e| u32::from(e)).sum()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::from_terms([(c, [0, 0, 0, 0])])
    }

    /// The coordinate function `x^k`.
    pub fn coordinate(k: usize) -> Self {
        let mut powers = [0; 4];
        powers[k] = 1;
        Self::from_terms([(1.0, powers)])
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (f64, [u8; 4])>) -> Self {
        let mut p = Self::zero();
        for (coeff, powers) in terms {
            p.add_term(coeff, powers);
        }
        p
    }

    fn add_term(&mut self, coeff: f64, powers: [u8; 4]) {
        if let Some(t) = self.terms.iter_mut().find(|t| t.powers == powers) {
            t.coeff += coeff;
        } else {
            self.terms.push(Monomial { coeff, powers });
        }
        self.terms.retain(|t| t.coeff != 0.0);
    }

    /// Random polynomial with every monomial of total degree `<= max_degree`,
    /// coefficients scaled so the coefficient l1-norm is at most `scale`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, max_degree: u8, scale: f64) -> Self {
        let mut powers = Vec::new();
        for a in 0..=max_degree {
            for b in 0..=max_degree - a {
                for c in 0..=max_degree - a - b {
                    for d in 0..=max_degree - a - b - c {
                        powers.push([a, b, c, d]);
                    }
                }
            }
        }
        let n = powers.len() as f64;
        Self::from_terms(
            powers
                .into_iter()
                .map(|p| (rng.gen_range(-1.0..=1.0) * scale / n, p)),
        )
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &Vector4<f64>) -> f64 {
        self.terms.iter().map(|t| t.eval(x)).sum()
    }

    /// Exact partial derivative with respect to `x^k`.
    pub fn derivative(&self, k: usize) -> Polynomial {
        Self::from_terms(self.terms.iter().filter(|t| t.powers[k] > 0).map(|t| {
            let mut powers = t.powers;
            powers[k] -= 1;
            (t.coeff * f64::from(t.powers[k]), powers)
        }))
    }

    pub fn scaled(&self, s: f64) -> Polynomial {
        Self::from_terms(self.terms.iter().map(|t| (t.coeff * s, t.powers)))
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut p = self.clone();
        for t in &other.terms {
            p.add_term(t.coeff, t.powers);
        }
        p
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, t) in self.terms.iter().enumerate() {
            match (n, t.coeff < 0.0) {
                (0, _) => write!(f, "{}", t.coeff)?,
                (_, true) => write!(f, " - {}", -t.coeff)?,
                (_, false) => write!(f, " + {}", t.coeff)?,
            }
            for (k, &e) in t.powers.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "*x{k}")?,
                    _ => write!(f, "*x{k}^{e}")?,
                }
            }
        }
        Ok(())
    }
}

/// Grammar: a sum of terms separated by `+`/`-`; each term is a `*`-product
/// of numbers and factors `x0..x3`, optionally raised with `^n`.
/// Example: `1 - 0.5*x1^2*x3 + 2e-3*x0`.
impl FromStr for Polynomial {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| Error::InvalidArgument(format!("polynomial `{s}`: {msg}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(bad("empty"));
        }
        // split into signed terms, ignoring signs that belong to an exponent like 1e-3
        let bytes = compact.as_bytes();
        let mut pieces = Vec::new();
        let mut start = 0;
        for i in 1..bytes.len() {
            let c = bytes[i];
            if (c == b'+' || c == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*' | b'^') {
                pieces.push(&compact[start..i]);
                start = i;
            }
        }
        pieces.push(&compact[start..]);

        let mut poly = Polynomial::zero();
        for piece in pieces {
            let (sign, body) = match piece.as_bytes()[0] {
                b'+' => (1.0, &piece[1..]),
                b'-' => (-1.0, &piece[1..]),
                _ => (1.0, piece),
            };
            if body.is_empty() {
                return Err(bad("dangling sign"));
            }
            let mut coeff = sign;
            let mut powers = [0u8; 4];
            for factor in body.split('*') {
                if let Some(rest) = factor.strip_prefix('x') {
                    let (idx, exp) = match rest.split_once('^') {
                        Some((i, e)) => (i, e.parse::<u8>().map_err(|_| bad("bad exponent"))?),
                        None => (rest, 1),
                    };
                    let k: usize = idx.parse().map_err(|_| bad("bad coordinate index"))?;
                    if k > 3 {
                        return Err(bad("coordinate index must be 0..3"));
                    }
                    powers[k] += exp;
                } else {
                    coeff *= factor.parse::<f64>().map_err(|_| bad("bad number"))?;
                }
            }
            poly.add_term(coeff, powers);
        }
        Ok(poly)
    }
}
