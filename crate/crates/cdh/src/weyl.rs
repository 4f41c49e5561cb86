//! Normal-ordered operators in the algebra generated by z and ∂ with
//! exact multivariate-rational coefficients in the symbols A, B, C.
//!
//! Everything reduces through the single relation ∂z = 1 + z∂: a product
//! is rewritten until every z power stands left of every ∂ power, and an
//! operator is a `(m, k) ↦ coefficient` map over the normal-ordered
//! monomials zᵐ∂ᵏ. The payoff is the operator form of the commutator
//! identity X·Y − Y·X = ½X² + 2Y, verified coefficient by coefficient as
//! polynomials in (A, B, C).

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Mutex;

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::{Error, Result};

pub type Rat = BigRational;

/// Exponents (a, b, c) of a monomial AᵃBᵇC^c.
type Expo = (u32, u32, u32);

/// Sparse polynomial in the symbols A, B, C over the rationals.
/// Zero coefficients are never stored; terms are kept in a fixed
/// exponent order, so equal polynomials are structurally equal.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MultiPoly {
    terms: BTreeMap<Expo, Rat>,
}

impl MultiPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(r: Rat) -> Self {
        let mut p = Self::default();
        p.insert((0, 0, 0), r);
        p
    }

    pub fn int(n: i64) -> Self {
        Self::constant(Rat::from_integer(n.into()))
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    /// The symbol A.
    pub fn sym_a() -> Self {
        let mut p = Self::default();
        p.insert((1, 0, 0), Rat::one());
        p
    }

    /// The symbol B.
    pub fn sym_b() -> Self {
        let mut p = Self::default();
        p.insert((0, 1, 0), Rat::one());
        p
    }

    /// The symbol C.
    pub fn sym_c() -> Self {
        let mut p = Self::default();
        p.insert((0, 0, 1), Rat::one());
        p
    }

    fn insert(&mut self, e: Expo, r: Rat) {
        if r.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(r);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                *o.get_mut() += r;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, r: &Rat) -> Self {
        if r.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (*e, c * r))
                .collect(),
        }
    }

    /// Substitutes rational values for (A, B, C).
    pub fn eval(&self, a: &Rat, b: &Rat, c: &Rat) -> Rat {
        let mut total = Rat::zero();
        for (&(i, j, k), coeff) in &self.terms {
            let mut term = coeff.clone();
            for _ in 0..i {
                term *= a;
            }
            for _ in 0..j {
                term *= b;
            }
            for _ in 0..k {
                term *= c;
            }
            total += term;
        }
        total
    }
}

impl Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(*e, c.clone());
        }
        out
    }
}

impl Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.insert(*e, -c.clone());
        }
        out
    }
}

impl Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        let mut out = MultiPoly::zero();
        for (&(a1, b1, c1), r1) in &self.terms {
            for (&(a2, b2, c2), r2) in &rhs.terms {
                out.insert((a1 + a2, b1 + b2, c1 + c2), r1 * r2);
            }
        }
        out
    }
}

impl Neg for &MultiPoly {
    type Output = MultiPoly;
    fn neg(self) -> MultiPoly {
        self.scale(&-Rat::one())
    }
}

impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(i, j, k), coeff) in &self.terms {
            if !first {
                write!(f, " {} ", if coeff.is_negative() { "-" } else { "+" })?;
            } else if coeff.is_negative() {
                write!(f, "-")?;
            }
            first = false;
            let mag = coeff.abs();
            let unit_coeff = mag.is_one() && (i, j, k) != (0, 0, 0);
            if !unit_coeff {
                write!(f, "{mag}")?;
            }
            let mut leading = unit_coeff;
            for (sym, e) in [("A", i), ("B", j), ("C", k)] {
                if e == 0 {
                    continue;
                }
                if !leading {
                    write!(f, "*")?;
                }
                leading = false;
                write!(f, "{sym}")?;
                if e > 1 {
                    write!(f, "^{e}")?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// Normal-ordered operators
// ---------------------------------------------------------------------

/// Memoized expansion of ∂ᵏzᵐ as Σⱼ e(k,m,j) z^{m−j} ∂^{k−j}, derived by
/// recursing on the single relation ∂z = 1 + z∂.
type SwapMemo = HashMap<(u32, u32), Vec<BigInt>>;

fn swap_coeffs(k: u32, m: u32) -> Vec<BigInt> {
    static MEMO: Mutex<Option<SwapMemo>> = Mutex::new(None);
    if k == 0 || m == 0 {
        return vec![BigInt::one()];
    }
    let mut guard = MEMO.lock().unwrap();
    let memo = guard.get_or_insert_with(HashMap::new);
    if let Some(v) = memo.get(&(k, m)) {
        return v.clone();
    }
    drop(guard);
    // ∂ᵏ zᵐ = (∂^{k−1} zᵐ) ∂ + m ∂^{k−1} z^{m−1}
    let head = swap_coeffs(k - 1, m);
    let tail = swap_coeffs(k - 1, m - 1);
    let j_max = k.min(m) as usize;
    let mut out = vec![BigInt::zero(); j_max + 1];
    for (j, c) in head.iter().enumerate() {
        out[j] += c;
    }
    for (j, c) in tail.iter().enumerate() {
        out[j + 1] += c * BigInt::from(m);
    }
    let mut guard = MEMO.lock().unwrap();
    guard
        .as_mut()
        .unwrap()
        .insert((k, m), out.clone());
    out
}

/// A finite linear combination of normal-ordered monomials zᵐ∂ᵏ with
/// [`MultiPoly`] coefficients, stored strictly in normal order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WeylOperator {
    terms: BTreeMap<(u32, u32), MultiPoly>,
}

impl WeylOperator {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::monomial(0, 0, MultiPoly::one())
    }

    /// Multiplication by z.
    pub fn z() -> Self {
        Self::monomial(1, 0, MultiPoly::one())
    }

    /// Differentiation ∂.
    pub fn d() -> Self {
        Self::monomial(0, 1, MultiPoly::one())
    }

    /// A single normal-ordered term coeff·zᵐ∂ᵏ.
    pub fn monomial(m: u32, k: u32, coeff: MultiPoly) -> Self {
        let mut op = Self::default();
        op.insert(m, k, coeff);
        op
    }

    /// Multiplication by a polynomial in the symbols.
    pub fn from_poly(p: MultiPoly) -> Self {
        Self::monomial(0, 0, p)
    }

    fn insert(&mut self, m: u32, k: u32, coeff: MultiPoly) {
        if coeff.is_zero() {
            return;
        }
        match self.terms.entry((m, k)) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get() + &coeff;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(u32, u32), &MultiPoly)> {
        self.terms.iter()
    }

    pub fn scale(&self, r: &Rat) -> Self {
        let mut out = Self::default();
        for (&(m, k), c) in &self.terms {
            out.insert(m, k, c.scale(r));
        }
        out
    }

    pub fn scale_poly(&self, p: &MultiPoly) -> Self {
        let mut out = Self::default();
        for (&(m, k), c) in &self.terms {
            out.insert(m, k, c * p);
        }
        out
    }

    /// Operator product self∘g in normal order: every cross term
    /// z^{m₁}∂^{k₁} · z^{m₂}∂^{k₂} is rewritten through the memoized
    /// ∂ᵏzᵐ expansion.
    pub fn compose(&self, g: &WeylOperator) -> WeylOperator {
        let mut out = WeylOperator::default();
        for (&(m1, k1), c1) in &self.terms {
            for (&(m2, k2), c2) in &g.terms {
                let coeff = c1 * c2;
                for (j, e) in swap_coeffs(k1, m2).iter().enumerate() {
                    if e.is_zero() {
                        continue;
                    }
                    let j = j as u32;
                    let scaled = coeff.scale(&Rat::from_integer(e.clone()));
                    out.insert(m1 + m2 - j, k1 + k2 - j, scaled);
                }
            }
        }
        out
    }

    /// Applies the operator to zⁿ; the result is a polynomial in z with
    /// [`MultiPoly`] coefficients, keyed by the power of z.
    pub fn apply_to_monomial(&self, n: u32) -> BTreeMap<u32, MultiPoly> {
        let mut out: BTreeMap<u32, MultiPoly> = BTreeMap::new();
        for (&(m, k), c) in &self.terms {
            if k > n {
                continue;
            }
            // ∂ᵏ zⁿ = n(n−1)⋯(n−k+1) z^{n−k}
            let mut falling = BigInt::one();
            for i in 0..k {
                falling *= BigInt::from(n - i);
            }
            let power = n - k + m;
            let add = c.scale(&Rat::from_integer(falling));
            match out.entry(power) {
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(add);
                }
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    let sum = o.get() + &add;
                    if sum.is_zero() {
                        o.remove();
                    } else {
                        *o.get_mut() = sum;
                    }
                }
            }
        }
        out
    }
}

impl Add for &WeylOperator {
    type Output = WeylOperator;
    fn add(self, rhs: &WeylOperator) -> WeylOperator {
        let mut out = self.clone();
        for (&(m, k), c) in &rhs.terms {
            out.insert(m, k, c.clone());
        }
        out
    }
}

impl Sub for &WeylOperator {
    type Output = WeylOperator;
    fn sub(self, rhs: &WeylOperator) -> WeylOperator {
        let mut out = self.clone();
        for (&(m, k), c) in &rhs.terms {
            out.insert(m, k, -c);
        }
        out
    }
}

impl Mul for &WeylOperator {
    type Output = WeylOperator;
    fn mul(self, rhs: &WeylOperator) -> WeylOperator {
        self.compose(rhs)
    }
}

impl fmt::Display for WeylOperator {
    /// Canonical printout `Σ coeff(A,B,C)·z^m·d^k` in (m, k) term order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (&(m, k), coeff) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({coeff})")?;
            if m > 0 {
                write!(f, "*z{}", if m > 1 { format!("^{m}") } else { String::new() })?;
            }
            if k > 0 {
                write!(f, "*d{}", if k > 1 { format!("^{k}") } else { String::new() })?;
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------
// The operators X and Y
// ---------------------------------------------------------------------

/// X = 2(C + z∂) + 2(A+C+z∂)(B+C+z∂)∂ in normal order.
pub fn build_x() -> WeylOperator {
    let zd = WeylOperator::monomial(1, 1, MultiPoly::one());
    let a = MultiPoly::sym_a();
    let b = MultiPoly::sym_b();
    let c = MultiPoly::sym_c();
    let f1 = &WeylOperator::from_poly(&a + &c) + &zd;
    let f2 = &WeylOperator::from_poly(&b + &c) + &zd;
    let cubic = f1.compose(&f2).compose(&WeylOperator::d());
    let linear = &WeylOperator::from_poly(c) + &zd;
    (&linear + &cubic).scale(&Rat::from_integer(2.into()))
}

/// Y = z + (AB+AC+BC) + (2(A+B+C)−1)z∂ + 2(z∂)² + (A+B+z∂)(A+C+z∂)(B+C+z∂)∂
/// in normal order.
///
/// The 2(z∂)² term is forced by the three-term recurrence the operator
/// encodes (its diagonal coefficient is quadratic in the degree);
/// without it the commutator identity fails by a constant.
pub fn build_y() -> WeylOperator {
    let zd = WeylOperator::monomial(1, 1, MultiPoly::one());
    let a = MultiPoly::sym_a();
    let b = MultiPoly::sym_b();
    let c = MultiPoly::sym_c();
    let sym2 = &(&(&a * &b) + &(&a * &c)) + &(&b * &c);
    let linear_coeff = &(&(&a + &b) + &c).scale(&Rat::from_integer(2.into()))
        - &MultiPoly::one();
    let f1 = &WeylOperator::from_poly(&a + &b) + &zd;
    let f2 = &WeylOperator::from_poly(&a + &c) + &zd;
    let f3 = &WeylOperator::from_poly(&b + &c) + &zd;
    let cubic = f1
        .compose(&f2)
        .compose(&f3)
        .compose(&WeylOperator::d());
    let zd_sq = zd.compose(&zd).scale(&Rat::from_integer(2.into()));
    let mut y = &WeylOperator::z() + &WeylOperator::from_poly(sym2);
    y = &y + &zd.scale_poly(&linear_coeff);
    y = &y + &zd_sq;
    &y + &cubic
}

/// Verifies X·Y − Y·X = ½X² + 2Y in normal order: true exactly when
/// every polynomial coefficient of the difference vanishes identically.
pub fn verify_commutator_symbolic() -> bool {
    let x = build_x();
    let y = build_y();
    commutator_defect(&x, &y).is_zero()
}

/// The normal-ordered operator X·Y − Y·X − ½X² − 2Y.
pub fn commutator_defect(x: &WeylOperator, y: &WeylOperator) -> WeylOperator {
    let xy = x.compose(y);
    let yx = y.compose(x);
    let xx = x.compose(x).scale(&Rat::new(1.into(), 2.into()));
    let two_y = y.scale(&Rat::from_integer(2.into()));
    &(&(&xy - &yx) - &xx) - &two_y
}

// ---------------------------------------------------------------------
// Text grammar for operator expressions
// ---------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Z,
    D,
    SymA,
    SymB,
    SymC,
    Number(Rat),
    Plus,
    Minus,
    Star,
    Caret,
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i];
        match ch {
            ' ' | '\t' | '\n' => i += 1,
            'z' => {
                out.push(Token::Z);
                i += 1;
            }
            'd' => {
                out.push(Token::D);
                i += 1;
            }
            'A' => {
                out.push(Token::SymA);
                i += 1;
            }
            'B' => {
                out.push(Token::SymB);
                i += 1;
            }
            'C' => {
                out.push(Token::SymC);
                i += 1;
            }
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let num: BigInt = src[start..i].parse().map_err(|_| {
                    Error::Argument(format!("bad integer at byte {start}"))
                })?;
                let mut value = Rat::from_integer(num);
                if i < bytes.len() && bytes[i] == '/' {
                    i += 1;
                    let dstart = i;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let den: BigInt = src[dstart..i].parse().map_err(|_| {
                        Error::Argument(format!("bad denominator at byte {dstart}"))
                    })?;
                    if den.is_zero() {
                        return Err(Error::Argument("zero denominator".into()));
                    }
                    value /= Rat::from_integer(den);
                }
                out.push(Token::Number(value));
            }
            other => {
                return Err(Error::Argument(format!(
                    "unexpected character '{other}' in operator expression"
                )))
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    // expr := term (('+'|'-') term)*
    fn expr(&mut self) -> Result<WeylOperator> {
        let mut acc = self.term()?;
        while let Some(tok) = self.peek() {
            match tok {
                Token::Plus => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Token::Minus => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    // term := factor (['*'] factor)*, juxtaposition composes
    fn term(&mut self) -> Result<WeylOperator> {
        let mut acc = self.factor()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.pos += 1;
                    acc = acc.compose(&self.factor()?);
                }
                Some(
                    Token::Z
                    | Token::D
                    | Token::SymA
                    | Token::SymB
                    | Token::SymC
                    | Token::Number(_)
                    | Token::Open,
                ) => {
                    acc = acc.compose(&self.factor()?);
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    // factor := primary ('^' uint)?
    fn factor(&mut self) -> Result<WeylOperator> {
        let base = self.primary()?;
        if matches!(self.peek(), Some(Token::Caret)) {
            self.pos += 1;
            match self.next() {
                Some(Token::Number(n)) if n.is_integer() && !n.is_negative() => {
                    let e: u32 = n.to_integer().try_into().map_err(|_| {
                        Error::Argument("exponent too large".into())
                    })?;
                    let mut acc = WeylOperator::identity();
                    for _ in 0..e {
                        acc = acc.compose(&base);
                    }
                    Ok(acc)
                }
                _ => Err(Error::Argument("'^' needs a nonnegative integer".into())),
            }
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<WeylOperator> {
        match self.next() {
            Some(Token::Z) => Ok(WeylOperator::z()),
            Some(Token::D) => Ok(WeylOperator::d()),
            Some(Token::SymA) => Ok(WeylOperator::from_poly(MultiPoly::sym_a())),
            Some(Token::SymB) => Ok(WeylOperator::from_poly(MultiPoly::sym_b())),
            Some(Token::SymC) => Ok(WeylOperator::from_poly(MultiPoly::sym_c())),
            Some(Token::Number(r)) => Ok(WeylOperator::from_poly(MultiPoly::constant(r))),
            Some(Token::Minus) => Ok(self.factor()?.scale(&-Rat::one())),
            Some(Token::Open) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Token::Close) => Ok(inner),
                    _ => Err(Error::Argument("unbalanced parenthesis".into())),
                }
            }
            other => Err(Error::Argument(format!(
                "unexpected token {other:?} in operator expression"
            ))),
        }
    }
}

/// Parses the operator grammar: atoms `z`, `d`, `A|B|C`, rationals, and
/// `+ - * ^ ( )`; juxtaposition denotes composition.
pub fn parse_operator(src: &str) -> Result<WeylOperator> {
    let mut parser = Parser {
        tokens: tokenize(src)?,
        pos: 0,
    };
    let op = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::Argument(format!(
            "trailing tokens after position {}",
            parser.pos
        )));
    }
    Ok(op)
}
