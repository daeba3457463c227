//! Expression DSL for g-valued analytic fields on harmonic space.
//!
//! Grammar:
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := primary ('^' uint)*
//! primary:= atom | number | '(' expr ')'
//! atom   := xm<a> | xp<a> | up<i> | um<i> | T<k> | i
//! ```
//!
//! Atoms carry H₀-charges (xp, up → +1; xm, um → −1; the rest → 0) and every
//! additive node must combine equal-charge subexpressions, so a parsed
//! expression has a definite charge by construction. The coordinate atoms
//! are the harmonic contractions x^{±a} = x^{ia}·u^{±}ᵢ-raised, which the
//! minus frame derivations annihilate; restricting a prepotential to the
//! atom set {xm, um, up} therefore makes its analyticity a structural
//! property instead of a differential side condition.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64 as C64;

use crate::flatspace::contract_x_pm;
use crate::harmonics::{ChargedField, EvalPoint, FieldError};
use crate::jet::{Jet, Scalar};
use crate::lie::BasisRef;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Atom {
    /// x^{−a}, charge −1 (0-based index).
    Xm(usize),
    /// x^{+a}, charge +1.
    Xp(usize),
    /// u^i₊ entry, charge +1.
    Up(usize),
    /// u^i₋ entry, charge −1.
    Um(usize),
    /// Algebra generator T_k (0-based).
    Gen(usize),
    /// The imaginary unit.
    ImagUnit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Atom(Atom),
    Lit(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParseError {
    pub pos: usize,
    pub msg: String,
}

impl core::fmt::Display for ParseError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "parse error at {}: {}", self.pos, self.msg)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push((i, Tok::Plus));
                i += 1;
            }
            '-' => {
                out.push((i, Tok::Minus));
                i += 1;
            }
            '*' => {
                out.push((i, Tok::Star));
                i += 1;
            }
            '^' => {
                out.push((i, Tok::Caret));
                i += 1;
            }
            '(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let s = &text[start..i];
                let v: f64 = s.parse().map_err(|_| ParseError {
                    pos: start,
                    msg: format!("malformed number `{s}`"),
                })?;
                out.push((start, Tok::Num(v)));
            }
            'a'..='z' | 'A'..='Z' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric()) {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                return Err(ParseError { pos: i, msg: format!("unexpected character `{c}`") });
            }
        }
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    n_quat: usize,
    gen_count: usize,
    text_len: usize,
    _phantom: core::marker::PhantomData<&'a ()>,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map(|(p, _)| *p).unwrap_or(self.text_len)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn atom_from_ident(&self, name: &str, pos: usize) -> Result<Atom, ParseError> {
        if name == "i" {
            return Ok(Atom::ImagUnit);
        }
        let idx_of = |prefix: &str| -> Option<usize> {
            name.strip_prefix(prefix).and_then(|rest| rest.parse::<usize>().ok())
        };
        let bounds = |idx: usize, max: usize, what: &str| -> Result<usize, ParseError> {
            if idx >= 1 && idx <= max {
                Ok(idx - 1)
            } else {
                Err(ParseError { pos, msg: format!("{what} index {idx} out of range 1..={max}") })
            }
        };
        if let Some(k) = idx_of("xm") {
            return Ok(Atom::Xm(bounds(k, 2 * self.n_quat, "xm")?));
        }
        if let Some(k) = idx_of("xp") {
            return Ok(Atom::Xp(bounds(k, 2 * self.n_quat, "xp")?));
        }
        if let Some(k) = idx_of("up") {
            return Ok(Atom::Up(bounds(k, 2, "up")?));
        }
        if let Some(k) = idx_of("um") {
            return Ok(Atom::Um(bounds(k, 2, "um")?));
        }
        if let Some(k) = idx_of("T") {
            return Ok(Atom::Gen(bounds(k, self.gen_count, "generator")?));
        }
        Err(ParseError { pos, msg: format!("unknown atom `{name}`") })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = if matches!(self.peek(), Some(Tok::Minus)) {
            self.bump();
            Expr::Neg(Box::new(self.term()?))
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::Add(Box::new(acc), Box::new(rhs));
                }
                Some(Tok::Minus) => {
                    self.bump();
                    let rhs = self.term()?;
                    acc = Expr::Sub(Box::new(acc), Box::new(rhs));
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        while matches!(self.peek(), Some(Tok::Star)) {
            self.bump();
            let rhs = self.factor()?;
            acc = Expr::Mul(Box::new(acc), Box::new(rhs));
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.primary()?;
        while matches!(self.peek(), Some(Tok::Caret)) {
            self.bump();
            let pos = self.here();
            match self.bump() {
                Some(Tok::Num(v))
                    if num_traits::Float::fract(v) == 0.0 && v >= 0.0 && v <= u32::MAX as f64 =>
                {
                    acc = Expr::Pow(Box::new(acc), v as u32);
                }
                _ => {
                    return Err(ParseError { pos, msg: "exponent must be an unsigned integer".to_string() });
                }
            }
        }
        Ok(acc)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let pos = self.here();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Lit(v)),
            Some(Tok::Ident(name)) => Ok(Expr::Atom(self.atom_from_ident(&name, pos)?)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                let pos = self.here();
                match self.bump() {
                    Some(Tok::RParen) => Ok(e),
                    _ => Err(ParseError { pos, msg: "expected `)`".to_string() }),
                }
            }
            other => Err(ParseError {
                pos,
                msg: format!("expected atom, number or `(`, found {other:?}"),
            }),
        }
    }
}

impl Atom {
    pub fn charge(&self) -> i64 {
        match self {
            Atom::Xp(_) | Atom::Up(_) => 1,
            Atom::Xm(_) | Atom::Um(_) => -1,
            Atom::Gen(_) | Atom::ImagUnit => 0,
        }
    }
}

impl Expr {
    /// H₀-charge; errors on charge-inhomogeneous sums.
    pub fn charge(&self) -> Result<i64, String> {
        match self {
            Expr::Lit(_) => Ok(0),
            Expr::Atom(a) => Ok(a.charge()),
            Expr::Neg(e) => e.charge(),
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let (ca, cb) = (a.charge()?, b.charge()?);
                if ca != cb {
                    Err(format!("charge-inhomogeneous sum: {ca} vs {cb}"))
                } else {
                    Ok(ca)
                }
            }
            Expr::Mul(a, b) => Ok(a.charge()? + b.charge()?),
            Expr::Pow(e, k) => Ok(e.charge()? * *k as i64),
        }
    }

    pub fn uses(&self, pred: &dyn Fn(&Atom) -> bool) -> bool {
        match self {
            Expr::Lit(_) => false,
            Expr::Atom(a) => pred(a),
            Expr::Neg(e) => e.uses(pred),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) => uses2(a, b, pred),
            Expr::Pow(e, _) => e.uses(pred),
        }
    }
}

fn uses2(a: &Expr, b: &Expr, pred: &dyn Fn(&Atom) -> bool) -> bool {
    a.uses(pred) || b.uses(pred)
}

impl core::fmt::Display for Expr {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Pow(a, k) => write!(f, "({a}^{k})"),
            Expr::Lit(v) => write!(f, "{v}"),
            Expr::Atom(Atom::Xm(a)) => write!(f, "xm{}", a + 1),
            Expr::Atom(Atom::Xp(a)) => write!(f, "xp{}", a + 1),
            Expr::Atom(Atom::Up(i)) => write!(f, "up{}", i + 1),
            Expr::Atom(Atom::Um(i)) => write!(f, "um{}", i + 1),
            Expr::Atom(Atom::Gen(k)) => write!(f, "T{}", k + 1),
            Expr::Atom(Atom::ImagUnit) => write!(f, "i"),
        }
    }
}

/// Parse against an atom context (coordinate range and generator count).
pub fn parse(text: &str, n_quat: usize, gen_count: usize) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError { pos: 0, msg: "empty expression".to_string() });
    }
    let toks = lex(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        n_quat,
        gen_count,
        text_len: text.len(),
        _phantom: core::marker::PhantomData,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError { pos: p.here(), msg: "trailing input".to_string() });
    }
    e.charge().map_err(|msg| ParseError { pos: 0, msg })?;
    Ok(e)
}

/// Evaluation result of an expression: a scalar part and, when any generator
/// atom appears, a coefficient vector against the algebra basis. Products of
/// two generator-carrying factors are rejected; the algebra has no
/// associative product at the expression level.
pub struct ExprValue<S> {
    pub scalar: S,
    pub vector: Option<Vec<S>>,
}

pub fn eval_expr<S: Scalar>(
    e: &Expr,
    x: &[S],
    n_quat: usize,
    u: &[S; 4],
    dim: usize,
) -> Result<ExprValue<S>, FieldError> {
    Ok(match e {
        Expr::Lit(v) => ExprValue { scalar: S::from_c(C64::new(*v, 0.0)), vector: None },
        Expr::Atom(Atom::ImagUnit) => ExprValue { scalar: S::from_c(C64::i()), vector: None },
        Expr::Atom(Atom::Xm(a)) => {
            ExprValue { scalar: contract_x_pm(x, n_quat, u, false, *a), vector: None }
        }
        Expr::Atom(Atom::Xp(a)) => {
            ExprValue { scalar: contract_x_pm(x, n_quat, u, true, *a), vector: None }
        }
        Expr::Atom(Atom::Up(i)) => ExprValue { scalar: u[*i].clone(), vector: None },
        Expr::Atom(Atom::Um(i)) => ExprValue { scalar: u[2 + *i].clone(), vector: None },
        Expr::Atom(Atom::Gen(k)) => {
            let mut v = vec![S::zero(); dim];
            v[*k] = S::one();
            ExprValue { scalar: S::zero(), vector: Some(v) }
        }
        Expr::Neg(a) => {
            let va = eval_expr(a, x, n_quat, u, dim)?;
            ExprValue {
                scalar: -va.scalar,
                vector: va.vector.map(|v| v.into_iter().map(|c| -c).collect()),
            }
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let sign = if matches!(e, Expr::Sub(_, _)) { -S::one() } else { S::one() };
            let va = eval_expr(a, x, n_quat, u, dim)?;
            let vb = eval_expr(b, x, n_quat, u, dim)?;
            let scalar = va.scalar + sign.clone() * vb.scalar;
            let vector = match (va.vector, vb.vector) {
                (None, None) => None,
                (va, vb) => {
                    let za = va.unwrap_or_else(|| vec![S::zero(); dim]);
                    let zb = vb.unwrap_or_else(|| vec![S::zero(); dim]);
                    Some(
                        za.into_iter()
                            .zip(zb)
                            .map(|(p, q)| p + sign.clone() * q)
                            .collect(),
                    )
                }
            };
            ExprValue { scalar, vector }
        }
        Expr::Mul(a, b) => {
            let va = eval_expr(a, x, n_quat, u, dim)?;
            let vb = eval_expr(b, x, n_quat, u, dim)?;
            match (va.vector, vb.vector) {
                (Some(_), Some(_)) => {
                    return Err(FieldError::Eval(
                        "product of two generator-valued factors".to_string(),
                    ));
                }
                (Some(v), None) => ExprValue {
                    scalar: S::zero(),
                    vector: Some(
                        v.into_iter().map(|c| c * vb.scalar.clone()).collect(),
                    ),
                },
                (None, Some(v)) => ExprValue {
                    scalar: S::zero(),
                    vector: Some(
                        v.into_iter().map(|c| c * va.scalar.clone()).collect(),
                    ),
                },
                (None, None) => {
                    ExprValue { scalar: va.scalar * vb.scalar, vector: None }
                }
            }
        }
        Expr::Pow(a, k) => {
            let va = eval_expr(a, x, n_quat, u, dim)?;
            if let Some(v) = va.vector {
                if *k == 1 {
                    ExprValue { scalar: S::zero(), vector: Some(v) }
                } else {
                    return Err(FieldError::Eval(
                        "power of a generator-valued factor".to_string(),
                    ));
                }
            } else {
                ExprValue { scalar: va.scalar.powi(*k), vector: None }
            }
        }
    })
}

/// Errors raised when promoting an expression to a prepotential.
#[derive(Clone, Debug, PartialEq)]
pub enum PrepotentialError {
    WrongCharge(i64),
    UsesXp,
    NotAlgebraValued,
    Charge(String),
}

impl core::fmt::Display for PrepotentialError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            PrepotentialError::WrongCharge(q) => {
                write!(f, "prepotential must have charge -2, found {q}")
            }
            PrepotentialError::UsesXp => {
                write!(f, "prepotential may not contain xp atoms (analyticity guard)")
            }
            PrepotentialError::NotAlgebraValued => {
                write!(f, "prepotential must carry exactly one generator per additive term")
            }
            PrepotentialError::Charge(s) => write!(f, "{s}"),
        }
    }
}

/// A parsed expression promoted to a charged field.
#[derive(Clone, Debug)]
pub struct DslField {
    pub expr: Expr,
    pub source: String,
    pub basis: BasisRef,
    pub n_quat: usize,
    pub charge: i64,
    /// True when only xm/um atoms appear: all first-line normalization
    /// conditions hold identically, including annihilation by H₋₋.
    pub normalized_form: bool,
}

impl DslField {
    pub fn new(
        text: &str,
        basis: BasisRef,
        n_quat: usize,
    ) -> Result<Self, ParseError> {
        let expr = parse(text, n_quat, basis.dim)?;
        let charge = expr.charge().map_err(|msg| ParseError { pos: 0, msg })?;
        let normalized_form =
            !expr.uses(&|a| matches!(a, Atom::Up(_) | Atom::Xp(_)));
        Ok(DslField { expr, source: text.to_string(), basis, n_quat, charge, normalized_form })
    }
}

impl ChargedField for DslField {
    fn charge(&self) -> i64 {
        self.charge
    }
    fn basis(&self) -> &BasisRef {
        &self.basis
    }
    fn n_quat(&self) -> usize {
        self.n_quat
    }
    fn eval(&self, p: &EvalPoint) -> Result<Vec<Jet>, FieldError> {
        let v = eval_expr(&self.expr, &p.x, self.n_quat, &p.u, self.basis.dim)?;
        v.vector.ok_or(FieldError::Eval("expression is not algebra-valued".to_string()))
    }

    fn eval_dual(
        &self,
        p: &crate::harmonics::DualEvalPoint,
    ) -> Result<Vec<crate::jet::Dual<Jet>>, FieldError> {
        let v = eval_expr(&self.expr, &p.x, self.n_quat, &p.u, self.basis.dim)?;
        v.vector.ok_or(FieldError::Eval("expression is not algebra-valued".to_string()))
    }
}

/// Validate and wrap a prepotential source string: charge −2, no xp atoms,
/// algebra-valued.
pub fn make_prepotential(
    text: &str,
    basis: BasisRef,
    n_quat: usize,
) -> Result<DslField, PrepotentialError> {
    let field = DslField::new(text, basis, n_quat)
        .map_err(|e| PrepotentialError::Charge(e.msg))?;
    if field.charge != -2 {
        return Err(PrepotentialError::WrongCharge(field.charge));
    }
    if field.expr.uses(&|a| matches!(a, Atom::Xp(_))) {
        return Err(PrepotentialError::UsesXp);
    }
    // Probe algebra-valuedness once at a generic point.
    let x = vec![C64::new(0.37, 0.11); 4 * n_quat];
    let u = crate::harmonics::Harmonic::identity();
    let p = crate::harmonics::seeded_point(&x, n_quat, &u, &[]);
    field.eval(&p).map_err(|_| PrepotentialError::NotAlgebraValued)?;
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flatspace::{frame_derivative, FrameDirection, PointX};
    use crate::harmonics::{field_value, harmonic_derivative, FiberDir, Harmonic};
    use crate::lie::{sl2, u1};
    use crate::sample::Sampler;
    use num_traits::Float;

    #[test]
    fn charges_inferred() {
        let e = parse("T1*xm1*xm2", 1, 3).unwrap();
        assert_eq!(e.charge().unwrap(), -2);
        let e = parse("(um1^2)*T1", 1, 1).unwrap();
        assert_eq!(e.charge().unwrap(), -2);
        let err = parse("T1*xm1 + T2*xp1", 1, 3).unwrap_err();
        assert!(err.msg.contains("charge-inhomogeneous"));
    }

    #[test]
    fn parse_errors_carry_position() {
        let err = parse("T1*xq1", 1, 3).unwrap_err();
        assert_eq!(err.pos, 3);
        assert!(err.msg.contains("unknown atom"));
        let err = parse("T1*(xm1", 1, 3).unwrap_err();
        assert!(err.msg.contains("expected `)`"));
        assert!(parse("", 1, 3).is_err());
        let err = parse("xm1^x", 1, 1).unwrap_err();
        assert!(err.msg.contains("unsigned integer"));
    }

    #[test]
    fn pretty_print_round_trips() {
        for src in [
            "T1*xm1*xm2",
            "(0.5 + 0.25*i)*T1*xm1^2",
            "T1*(um1^2) - T2*um1*um2",
            "-T1*xm1*um1 + 2e-3*T1*xm2*um2",
        ] {
            let e = parse(src, 1, 3).unwrap();
            let printed = alloc::format!("{e}");
            let re = parse(&printed, 1, 3).unwrap();
            assert_eq!(e, re, "round trip failed for `{src}` -> `{printed}`");
        }
    }

    #[test]
    fn prepotential_guards() {
        let b = sl2();
        assert!(make_prepotential("T1*xm1*xm2", b.clone(), 1).is_ok());
        let f = make_prepotential("T1*(um1^2)", b.clone(), 1).unwrap();
        assert!(f.normalized_form);
        assert_eq!(
            make_prepotential("T1*xp1*xm1*(um1^2)", b.clone(), 1).unwrap_err(),
            PrepotentialError::UsesXp
        );
        assert_eq!(
            make_prepotential("T1*xm1", b.clone(), 1).unwrap_err(),
            PrepotentialError::WrongCharge(-1)
        );
        // up atoms allowed but drop the normalized-form flag.
        let g = make_prepotential("T1*xm1^2*xm2*up1", b, 1).unwrap();
        assert!(!g.normalized_form);
    }

    #[test]
    fn literal_generator_has_zero_derivatives() {
        let b = u1();
        let f = DslField::new("T1", b, 1).unwrap();
        let x = PointX::zero(1);
        let u = Harmonic::identity();
        let v = field_value(&f, &x.x, &u).unwrap();
        assert!((v[0] - C64::new(1.0, 0.0)).norm() < 1e-15);
        for gen in [FiberDir::H0, FiberDir::Hpp, FiberDir::Hmm] {
            let d = harmonic_derivative(&f, gen, &x.x, &u).unwrap();
            assert!(d[0].norm() < 1e-15);
        }
    }

    #[test]
    fn quadratic_prepotential_at_origin() {
        let b = u1();
        let f = make_prepotential("T1*xm1*xm2", b, 1).unwrap();
        let x = PointX::zero(1);
        let mut s = Sampler::new(3);
        let u = s.su2();
        assert!(field_value(&f, &x.x, &u).unwrap()[0].norm() < 1e-15);
        // Minus-frame gradient vanishes identically, not only at 0.
        for a in 0..2 {
            let d = frame_derivative(
                &f,
                &FrameDirection { plus: false, a, at: u.clone() },
                &x,
            )
            .unwrap();
            assert!(d.hermitian_norm() < 1e-15);
        }
    }

    #[test]
    fn ad_matches_central_finite_differences() {
        let b = sl2();
        let f = DslField::new("(0.3 + 0.7*i)*T2*xm1^2*xm2*up1 + T1*xm1*xm2", b, 1).unwrap();
        let mut s = Sampler::new(41);
        for _ in 0..100 {
            let xs: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
            let u = s.su2();
            // x-direction derivative vs central differences.
            let dir: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
            let p = crate::harmonics::seeded_point(
                &xs,
                1,
                &u,
                &[crate::harmonics::SeedDir::Point(dir.clone())],
            );
            let jets = f.eval(&p).unwrap();
            let h = 1e-5;
            let shift = |sgn: f64| -> Vec<C64> {
                xs.iter().zip(dir.iter()).map(|(x, d)| x + d * C64::new(sgn * h, 0.0)).collect()
            };
            let vp = field_value(&f, &shift(1.0), &u).unwrap();
            let vm = field_value(&f, &shift(-1.0), &u).unwrap();
            for k in 0..3 {
                let fd = (vp[k] - vm[k]) / C64::new(2.0 * h, 0.0);
                let ad = jets[k].grad(0);
                let scale = Float::max(1.0, ad.norm());
                assert!((fd - ad).norm() / scale < 1e-8, "fd {fd} vs ad {ad}");
            }
        }
    }

    #[test]
    fn harmonic_derivative_fd_cross_check() {
        let b = sl2();
        let f = DslField::new("T3*xm1*um1*up2^2", b, 1).unwrap();
        let mut s = Sampler::new(5);
        let xs: Vec<C64> = (0..4).map(|_| C64::new(s.normal(), s.normal())).collect();
        let u = s.su2();
        let h = 1e-6;
        for gen in [FiberDir::H0, FiberDir::Hpp, FiberDir::Hmm, FiberDir::G1] {
            let ad = harmonic_derivative(&f, gen, &xs, &u).unwrap();
            let up = field_value(&f, &xs, &u.flow(gen, C64::new(h, 0.0))).unwrap();
            let dn = field_value(&f, &xs, &u.flow(gen, C64::new(-h, 0.0))).unwrap();
            for k in 0..3 {
                let fd = (up[k] - dn[k]) / C64::new(2.0 * h, 0.0);
                assert!((fd - ad[k]).norm() < 1e-7);
            }
        }
    }
}
