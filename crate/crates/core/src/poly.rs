//! Exact bivariate polynomials in `(q, p)` with rational coefficients.
//!
//! Generating functions, connection components and gauge parameters are
//! all polynomials, so every derivative identity can be checked by exact
//! coefficient algebra instead of a floating-point tolerance.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Sum of terms `c[j][k] q^j p^k`. Only nonzero coefficients are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BivariatePolynomial {
    terms: BTreeMap<(u32, u32), BigRational>,
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

impl BivariatePolynomial {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: BigRational) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn monomial(c: BigRational, q_pow: u32, p_pow: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((q_pow, p_pow), c);
        }
        Self { terms }
    }

    /// Monomial with coefficient `num / den`.
    pub fn term(num: i64, den: i64, q_pow: u32, p_pow: u32) -> Self {
        Self::monomial(
            BigRational::new(BigInt::from(num), BigInt::from(den)),
            q_pow,
            p_pow,
        )
    }

    /// The coordinate function `q`.
    pub fn q() -> Self {
        Self::term(1, 1, 1, 0)
    }

    /// The momentum function `p`.
    pub fn p() -> Self {
        Self::term(1, 1, 0, 1)
    }

    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = ((u32, u32), BigRational)>,
    {
        let mut out = Self::zero();
        for ((j, k), c) in terms {
            out.add_term(j, k, c);
        }
        out
    }

    fn add_term(&mut self, j: u32, k: u32, c: BigRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry((j, k)).or_insert_with(BigRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&(j, k));
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, u32, &BigRational)> {
        self.terms.iter().map(|(&(j, k), c)| (j, k, c))
    }

    pub fn coefficient(&self, q_pow: u32, p_pow: u32) -> BigRational {
        self.terms
            .get(&(q_pow, p_pow))
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn degree_q(&self) -> u32 {
        self.terms.keys().map(|&(j, _)| j).max().unwrap_or(0)
    }

    pub fn degree_p(&self) -> u32 {
        self.terms.keys().map(|&(_, k)| k).max().unwrap_or(0)
    }

    /// Total degree; zero for the zero polynomial.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|&(j, k)| j + k).max().unwrap_or(0)
    }

    pub fn d_q(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|((j, _), _)| *j > 0)
                .map(|(&(j, k), c)| ((j - 1, k), c * rat(j as i64))),
        )
    }

    pub fn d_p(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|((_, k), _)| *k > 0)
                .map(|(&(j, k), c)| ((j, k - 1), c * rat(k as i64))),
        )
    }

    /// Antiderivative in `q` with zero integration "constant" (a function of p).
    pub fn integrate_q(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(&(j, k), c)| ((j + 1, k), c / rat(j as i64 + 1))),
        )
    }

    /// Antiderivative in `p` with zero integration "constant" (a function of q).
    pub fn integrate_p(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .map(|(&(j, k), c)| ((j, k + 1), c / rat(k as i64 + 1))),
        )
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::from_terms(self.terms.iter().map(|(&jk, c)| (jk, c * s)))
    }

    /// True when no term depends on `p`.
    pub fn depends_only_on_q(&self) -> bool {
        self.terms.keys().all(|&(_, k)| k == 0)
    }

    /// True when no term depends on `q`.
    pub fn depends_only_on_p(&self) -> bool {
        self.terms.keys().all(|&(j, _)| j == 0)
    }

    /// Terms with both a `q` and a `p` factor.
    pub fn mixed_part(&self) -> Self {
        Self::from_terms(
            self.terms
                .iter()
                .filter(|((j, k), _)| *j > 0 && *k > 0)
                .map(|(&jk, c)| (jk, c.clone())),
        )
    }

    pub fn eval_exact(&self, q: &BigRational, p: &BigRational) -> BigRational {
        let mut acc = BigRational::zero();
        for (&(j, k), c) in &self.terms {
            acc +=
                c * num_traits::pow(q.clone(), j as usize) * num_traits::pow(p.clone(), k as usize);
        }
        acc
    }

    /// Floating-point evaluator with coefficients converted once.
    pub fn evaluator(&self) -> PolyEval {
        PolyEval {
            terms: self
                .terms
                .iter()
                .map(|(&(j, k), c)| (j as i32, k as i32, c.to_f64().unwrap_or(f64::NAN)))
                .collect(),
        }
    }

    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.evaluator().eval(q, p)
    }

    /// Coefficient list as `(q_pow, p_pow, "num/den")`, ordered by powers.
    pub fn coefficient_list(&self) -> Vec<(u32, u32, String)> {
        self.terms
            .iter()
            .map(|(&(j, k), c)| (j, k, c.to_string()))
            .collect()
    }
}

/// Evaluates a polynomial with `f64` arithmetic.
#[derive(Clone, Debug)]
pub struct PolyEval {
    terms: Vec<(i32, i32, f64)>,
}

impl PolyEval {
    pub fn eval(&self, q: f64, p: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(j, k, c)| c * q.powi(j) * p.powi(k))
            .sum()
    }
}

impl Add for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn add(self, rhs: &BivariatePolynomial) -> BivariatePolynomial {
        let mut out = self.clone();
        for (&(j, k), c) in &rhs.terms {
            out.add_term(j, k, c.clone());
        }
        out
    }
}

impl Sub for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn sub(self, rhs: &BivariatePolynomial) -> BivariatePolynomial {
        self + &(-rhs)
    }
}

impl Neg for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn neg(self) -> BivariatePolynomial {
        BivariatePolynomial {
            terms: self.terms.iter().map(|(&jk, c)| (jk, -c)).collect(),
        }
    }
}

impl Mul for &BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn mul(self, rhs: &BivariatePolynomial) -> BivariatePolynomial {
        let mut out = BivariatePolynomial::zero();
        for (&(j1, k1), c1) in &self.terms {
            for (&(j2, k2), c2) in &rhs.terms {
                out.add_term(j1 + j2, k1 + k2, c1 * c2);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for BivariatePolynomial {
            type Output = BivariatePolynomial;
            fn $m(self, rhs: BivariatePolynomial) -> BivariatePolynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for BivariatePolynomial {
    type Output = BivariatePolynomial;
    fn neg(self) -> BivariatePolynomial {
        -&self
    }
}

impl fmt::Display for BivariatePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&(j, k), c)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            let mag = c.abs();
            if n == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            let mut factors = Vec::new();
            if !mag.is_one() || (j == 0 && k == 0) {
                factors.push(mag.to_string());
            }
            for (name, pow) in [("q", j), ("p", k)] {
                match pow {
                    0 => {}
                    1 => factors.push(name.to_string()),
                    _ => factors.push(format!("{name}^{pow}")),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

/// Parses an exact rational from `"3"`, `"-1/2"`, `"0.125"` or `"2.5e-3"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty number".into()));
    }
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(Error::Parse(format!("zero denominator in '{s}'")));
        }
        return Ok(n / d);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => {
            let e: i32 = s[i + 1..]
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent in '{s}'")))?;
            (&s[..i], e)
        }
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(Error::Parse(format!("bad number '{s}'")));
    }
    let digits = format!("{int_part}{frac_part}");
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse(format!("bad number '{s}'")));
    }
    let int = BigInt::from_str(&digits).map_err(|_| Error::Parse(format!("bad number '{s}'")))?;
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = BigRational::from_integer(int);
    if scale >= 0 {
        value *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

impl serde::Serialize for BivariatePolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for BivariatePolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl FromStr for BivariatePolynomial {
    type Err = Error;

    /// Sum of monomials such as `p*q/2 + q^3/10 - 2*p^2`. Factors are
    /// numbers, `q`, `p`, `q^n` or `p^n`; division is by numbers only.
    fn from_str(s: &str) -> Result<Self> {
        let src = s.trim();
        if src.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        let chars: Vec<char> = src.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = BivariatePolynomial::zero();
        let mut sign = 1i64;
        let mut cur = String::new();
        for (i, &ch) in chars.iter().enumerate() {
            let after_operator = i > 0 && matches!(chars[i - 1], '^' | '*' | '/');
            let in_exponent = i > 1
                && matches!(chars[i - 1], 'e' | 'E')
                && (chars[i - 2].is_ascii_digit() || chars[i - 2] == '.');
            if (ch == '+' || ch == '-') && !after_operator && !in_exponent {
                if cur.is_empty() {
                    if ch == '-' {
                        sign = -sign;
                    }
                    continue;
                }
                let (c, j, k) = parse_monomial(&cur)?;
                out.add_term(j, k, c * rat(sign));
                cur.clear();
                sign = if ch == '-' { -1 } else { 1 };
            } else {
                cur.push(ch);
            }
        }
        if cur.is_empty() {
            return Err(Error::Parse(format!("dangling sign in '{src}'")));
        }
        let (c, j, k) = parse_monomial(&cur)?;
        out.add_term(j, k, c * rat(sign));
        Ok(out)
    }
}

fn parse_monomial(term: &str) -> Result<(BigRational, u32, u32)> {
    let mut coeff = BigRational::one();
    let (mut j, mut k) = (0u32, 0u32);
    let mut factors: Vec<(char, String)> = Vec::new();
    let mut cur = String::new();
    let mut op = '*';
    for ch in term.chars() {
        if ch == '*' || ch == '/' {
            factors.push((op, std::mem::take(&mut cur)));
            op = ch;
        } else {
            cur.push(ch);
        }
    }
    factors.push((op, cur));
    for (op, f) in factors {
        if f.is_empty() {
            return Err(Error::Parse(format!("empty factor in '{term}'")));
        }
        let (base, pow) = match f.split_once('^') {
            Some((b, e)) => (
                b,
                e.parse::<u32>()
                    .map_err(|_| Error::Parse(format!("bad power in '{f}'")))?,
            ),
            None => (f.as_str(), 1),
        };
        match base {
            "q" | "p" => {
                if op == '/' {
                    return Err(Error::Parse(format!("division by '{base}' in '{term}'")));
                }
                if base == "q" {
                    j += pow;
                } else {
                    k += pow;
                }
            }
            _ => {
                let v = num_traits::pow(parse_rational(base)?, pow as usize);
                if op == '/' {
                    if v.is_zero() {
                        return Err(Error::Parse(format!("division by zero in '{term}'")));
                    }
                    coeff /= v;
                } else {
                    coeff *= v;
                }
            }
        }
    }
    Ok((coeff, j, k))
}
