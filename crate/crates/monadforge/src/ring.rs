//! Graded coordinate rings `S(X)`: the polynomial ring of `P^n` and the
//! quadric quotient ring of `Q_n`, with per-degree monomial bases, normal
//! forms, and multiplication matrices.
//!
//! The quadric form is fixed once and for all: variables are paired left to
//! right (`x0*x1 + x2*x3 + ...`); an odd trailing variable contributes a
//! square term. Normal forms eliminate every monomial divisible by `x0*x1`,
//! so the degree-`d` basis of `S(Q_n)` is the set of degree-`d` monomials not
//! divisible by `x0*x1`, in graded-lex order with `x0 > x1 > ...`.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::matrix::ExactMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarietyKind {
    ProjectiveSpace,
    Quadric,
}

/// The ambient space: `P^n` or a smooth quadric `Q_n` in `P^{n+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Variety {
    pub kind: VarietyKind,
    pub dim: usize,
}

impl Variety {
    pub fn projective_space(n: usize) -> Result<Self> {
        if n < 1 {
            return Err(Error::BadVariety("P^n needs n >= 1".into()));
        }
        Ok(Variety {
            kind: VarietyKind::ProjectiveSpace,
            dim: n,
        })
    }

    pub fn quadric(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::BadVariety("Q_n needs n >= 2".into()));
        }
        Ok(Variety {
            kind: VarietyKind::Quadric,
            dim: n,
        })
    }

    /// Number of ambient homogeneous coordinates `x0..xN`.
    pub fn num_vars(&self) -> usize {
        match self.kind {
            VarietyKind::ProjectiveSpace => self.dim + 1,
            VarietyKind::Quadric => self.dim + 2,
        }
    }

    /// The twist with `omega_X = O_X(lambda)`: `-n-1` on `P^n`, `-n` on `Q_n`.
    pub fn dualizing_twist(&self) -> i64 {
        match self.kind {
            VarietyKind::ProjectiveSpace => -(self.dim as i64) - 1,
            VarietyKind::Quadric => -(self.dim as i64),
        }
    }

    pub fn is_quadric(&self) -> bool {
        self.kind == VarietyKind::Quadric
    }

    pub fn describe(&self) -> String {
        match self.kind {
            VarietyKind::ProjectiveSpace => format!("P^{}", self.dim),
            VarietyKind::Quadric => format!("Q_{}", self.dim),
        }
    }
}

pub type Monomial = Vec<u16>;

/// Monomial basis of one graded piece, in graded-lex order (`x0 > x1 > ...`).
#[derive(Debug)]
pub struct DegreeBasis {
    pub monomials: Vec<Monomial>,
    index: HashMap<Monomial, usize>,
}

impl DegreeBasis {
    pub fn len(&self) -> usize {
        self.monomials.len()
    }

    pub fn is_empty(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn index_of(&self, m: &Monomial) -> Option<usize> {
        self.index.get(m).copied()
    }
}

/// A homogeneous element of `S(X)`, stored as a dense coefficient vector over
/// the degree-`d` monomial basis (normal form in the quadric case). The ring
/// is carried by context, not by the element.
#[derive(Clone, Debug)]
pub struct HomogeneousElement<F: Field> {
    pub degree: i64,
    pub coeffs: Vec<F::Elem>,
}

impl<F: Field> PartialEq for HomogeneousElement<F> {
    fn eq(&self, other: &Self) -> bool {
        self.degree == other.degree && self.coeffs == other.coeffs
    }
}

/// The graded ring `S(X)`. Immutable after construction; per-degree bases are
/// memoized behind a lock so concurrent readers share them.
pub struct CoordinateRing<F: Field> {
    variety: Variety,
    field: F,
    bases: RwLock<HashMap<i64, Arc<DegreeBasis>>>,
}

impl<F: Field> CoordinateRing<F> {
    pub fn new(variety: Variety, field: F) -> Arc<Self> {
        Arc::new(CoordinateRing {
            variety,
            field,
            bases: RwLock::new(HashMap::new()),
        })
    }

    pub fn variety(&self) -> Variety {
        self.variety
    }

    pub fn field(&self) -> &F {
        &self.field
    }

    pub fn num_vars(&self) -> usize {
        self.variety.num_vars()
    }

    fn hyperbolic_pairs(&self) -> Vec<(usize, usize)> {
        let v = self.num_vars();
        (0..v / 2).map(|i| (2 * i, 2 * i + 1)).collect()
    }

    /// Index of the unpaired trailing variable of the quadric form, if any.
    fn odd_leftover(&self) -> Option<usize> {
        let v = self.num_vars();
        (v % 2 == 1).then_some(v - 1)
    }

    /// `dim S(X)_d`; zero in negative degrees.
    pub fn graded_dim(&self, d: i64) -> usize {
        if d < 0 {
            return 0;
        }
        self.basis(d).len()
    }

    /// The degree-`d` monomial basis (computed once, then shared).
    pub fn basis(&self, d: i64) -> Arc<DegreeBasis> {
        if d < 0 {
            return Arc::new(DegreeBasis {
                monomials: Vec::new(),
                index: HashMap::new(),
            });
        }
        if let Some(b) = self.bases.read().unwrap().get(&d) {
            return b.clone();
        }
        let monomials = self.enumerate_basis(d as u16);
        let index = monomials
            .iter()
            .enumerate()
            .map(|(i, m)| (m.clone(), i))
            .collect();
        let basis = Arc::new(DegreeBasis { monomials, index });
        self.bases
            .write()
            .unwrap()
            .entry(d)
            .or_insert(basis)
            .clone()
    }

    fn enumerate_basis(&self, d: u16) -> Vec<Monomial> {
        let v = self.num_vars();
        let mut out = Vec::new();
        let mut current = vec![0u16; v];
        self.enumerate_rec(0, d, &mut current, &mut out);
        out
    }

    fn enumerate_rec(&self, var: usize, left: u16, current: &mut Monomial, out: &mut Vec<Monomial>) {
        let v = self.num_vars();
        if var == v - 1 {
            current[var] = left;
            if self.in_normal_form(current) {
                out.push(current.clone());
            }
            current[var] = 0;
            return;
        }
        for e in (0..=left).rev() {
            current[var] = e;
            // Quadric basis excludes monomials divisible by x0*x1; prune early.
            if self.variety.is_quadric() && var == 1 && current[0] >= 1 && e >= 1 {
                continue;
            }
            self.enumerate_rec(var + 1, left - e, current, out);
        }
        current[var] = 0;
    }

    fn in_normal_form(&self, m: &Monomial) -> bool {
        !(self.variety.is_quadric() && m[0] >= 1 && m[1] >= 1)
    }

    /// Rewrites `c * m` as a combination of normal-form monomials using
    /// `x0*x1 -> -(x2*x3 + ... [+ x_last^2])`. Terminates because each step
    /// strictly lowers the combined `x0, x1` exponent.
    fn reduce_monomial(&self, m: Monomial, c: F::Elem, acc: &mut HashMap<Monomial, F::Elem>) {
        let f = &self.field;
        let mut work = vec![(m, c)];
        while let Some((m, c)) = work.pop() {
            if self.in_normal_form(&m) {
                let entry = acc.entry(m).or_insert_with(|| f.zero());
                *entry = f.add(entry, &c);
                continue;
            }
            let mut base = m.clone();
            base[0] -= 1;
            base[1] -= 1;
            let neg = f.neg(&c);
            for (i, j) in self.hyperbolic_pairs().iter().skip(1) {
                let mut t = base.clone();
                t[*i] += 1;
                t[*j] += 1;
                work.push((t, neg.clone()));
            }
            if let Some(w) = self.odd_leftover() {
                let mut t = base;
                t[w] += 2;
                work.push((t, neg));
            }
        }
    }

    /// Canonical representative of a raw coefficient->monomial map.
    pub fn normal_form_terms(
        &self,
        degree: i64,
        terms: impl IntoIterator<Item = (Monomial, F::Elem)>,
    ) -> HomogeneousElement<F> {
        let f = &self.field;
        let mut acc: HashMap<Monomial, F::Elem> = HashMap::new();
        for (m, c) in terms {
            self.reduce_monomial(m, c, &mut acc);
        }
        let basis = self.basis(degree);
        let mut coeffs = vec![f.zero(); basis.len()];
        for (m, c) in acc {
            if f.is_zero(&c) {
                continue;
            }
            let idx = basis
                .index_of(&m)
                .expect("reduced monomial must be in the basis");
            coeffs[idx] = f.add(&coeffs[idx], &c);
        }
        HomogeneousElement { degree, coeffs }
    }

    pub fn zero_element(&self, degree: i64) -> HomogeneousElement<F> {
        HomogeneousElement {
            degree,
            coeffs: vec![self.field.zero(); self.graded_dim(degree)],
        }
    }

    pub fn one_element(&self) -> HomogeneousElement<F> {
        self.normal_form_terms(0, vec![(vec![0; self.num_vars()], self.field.one())])
    }

    /// The variable `x_i` as a degree-1 element.
    pub fn variable(&self, i: usize) -> HomogeneousElement<F> {
        let mut m = vec![0u16; self.num_vars()];
        m[i] = 1;
        self.normal_form_terms(1, vec![(m, self.field.one())])
    }

    /// The normal form of the fixed quadric `q` (quadrics only) — identically
    /// zero in `S(Q)`, which is exactly the reduction-correctness statement.
    pub fn quadric_form(&self) -> Option<HomogeneousElement<F>> {
        if !self.variety.is_quadric() {
            return None;
        }
        let f = &self.field;
        let terms: Vec<(Monomial, F::Elem)> = self
            .quadric_terms()
            .into_iter()
            .map(|m| (m, f.one()))
            .collect();
        Some(self.normal_form_terms(2, terms))
    }

    /// Raw ambient quadric terms (monomial, +1), for matrix-factorization
    /// verification over the ambient polynomial ring.
    pub fn quadric_terms(&self) -> Vec<Monomial> {
        let v = self.num_vars();
        let mut terms = Vec::new();
        if !self.variety.is_quadric() {
            return terms;
        }
        for (i, j) in self.hyperbolic_pairs() {
            let mut m = vec![0u16; v];
            m[i] += 1;
            m[j] += 1;
            terms.push(m);
        }
        if let Some(w) = self.odd_leftover() {
            let mut m = vec![0u16; v];
            m[w] = 2;
            terms.push(m);
        }
        terms
    }

    pub fn add(
        &self,
        a: &HomogeneousElement<F>,
        b: &HomogeneousElement<F>,
    ) -> HomogeneousElement<F> {
        assert_eq!(a.degree, b.degree, "degree mismatch in add");
        let f = &self.field;
        HomogeneousElement {
            degree: a.degree,
            coeffs: a
                .coeffs
                .iter()
                .zip(&b.coeffs)
                .map(|(x, y)| f.add(x, y))
                .collect(),
        }
    }

    pub fn scale(&self, c: &F::Elem, a: &HomogeneousElement<F>) -> HomogeneousElement<F> {
        let f = &self.field;
        HomogeneousElement {
            degree: a.degree,
            coeffs: a.coeffs.iter().map(|x| f.mul(c, x)).collect(),
        }
    }

    pub fn neg_elem(&self, a: &HomogeneousElement<F>) -> HomogeneousElement<F> {
        let f = &self.field;
        HomogeneousElement {
            degree: a.degree,
            coeffs: a.coeffs.iter().map(|x| f.neg(x)).collect(),
        }
    }

    pub fn mul(
        &self,
        a: &HomogeneousElement<F>,
        b: &HomogeneousElement<F>,
    ) -> HomogeneousElement<F> {
        let f = &self.field;
        let (ba, bb) = (self.basis(a.degree), self.basis(b.degree));
        let mut acc: HashMap<Monomial, F::Elem> = HashMap::new();
        for (i, ca) in a.coeffs.iter().enumerate() {
            if f.is_zero(ca) {
                continue;
            }
            for (j, cb) in b.coeffs.iter().enumerate() {
                if f.is_zero(cb) {
                    continue;
                }
                let m: Monomial = ba.monomials[i]
                    .iter()
                    .zip(&bb.monomials[j])
                    .map(|(x, y)| x + y)
                    .collect();
                self.reduce_monomial(m, f.mul(ca, cb), &mut acc);
            }
        }
        let basis = self.basis(a.degree + b.degree);
        let mut coeffs = vec![f.zero(); basis.len()];
        for (m, c) in acc {
            if !f.is_zero(&c) {
                coeffs[basis.index_of(&m).expect("NF monomial")] = c;
            }
        }
        HomogeneousElement {
            degree: a.degree + b.degree,
            coeffs,
        }
    }

    pub fn is_zero_elem(&self, a: &HomogeneousElement<F>) -> bool {
        a.coeffs.iter().all(|c| self.field.is_zero(c))
    }

    /// The matrix of multiplication `S(X)_d -> S(X)_{d+deg f}` in the
    /// canonical monomial bases.
    pub fn mult_matrix(&self, f_elem: &HomogeneousElement<F>, d: i64) -> ExactMatrix<F> {
        let f = &self.field;
        let src = self.basis(d);
        let e = f_elem.degree;
        let dst = self.basis(d + e);
        let fb = self.basis(e);
        let mut out = ExactMatrix::zero(self.field.clone(), dst.len(), src.len());
        for (col, m) in src.monomials.iter().enumerate() {
            let mut acc: HashMap<Monomial, F::Elem> = HashMap::new();
            for (t, c) in f_elem.coeffs.iter().enumerate() {
                if f.is_zero(c) {
                    continue;
                }
                let prod: Monomial = fb.monomials[t]
                    .iter()
                    .zip(m.iter())
                    .map(|(x, y)| x + y)
                    .collect();
                self.reduce_monomial(prod, c.clone(), &mut acc);
            }
            for (mm, c) in acc {
                if !f.is_zero(&c) {
                    out.add_to(dst.index_of(&mm).expect("NF monomial"), col, c);
                }
            }
        }
        out
    }

    /// Evaluates a homogeneous element at an affine point of the cone.
    pub fn eval(&self, a: &HomogeneousElement<F>, point: &[F::Elem]) -> F::Elem {
        let f = &self.field;
        let basis = self.basis(a.degree);
        let mut acc = f.zero();
        for (i, c) in a.coeffs.iter().enumerate() {
            if f.is_zero(c) {
                continue;
            }
            let mut term = c.clone();
            for (v, e) in basis.monomials[i].iter().enumerate() {
                if *e > 0 {
                    term = f.mul(&term, &f.pow(&point[v], *e as u64));
                }
            }
            acc = f.add(&acc, &term);
        }
        acc
    }

    /// Evaluates `q` at an ambient point (quadrics only).
    pub fn eval_quadric(&self, point: &[F::Elem]) -> F::Elem {
        let f = &self.field;
        let mut acc = f.zero();
        for m in self.quadric_terms() {
            let mut term = f.one();
            for (v, e) in m.iter().enumerate() {
                for _ in 0..*e {
                    term = f.mul(&term, &point[v]);
                }
            }
            acc = f.add(&acc, &term);
        }
        acc
    }

    /// Samples a point on the cone over X with no vanishing denominator:
    /// uniform for `P^n`; for quadrics, solve the hyperbolic pair `x0*x1`
    /// linearly for `x1` after sampling everything else with `x0 != 0`.
    pub fn random_point<R: rand::Rng>(&self, rng: &mut R) -> Vec<F::Elem> {
        let f = &self.field;
        let v = self.num_vars();
        loop {
            let mut p: Vec<F::Elem> = (0..v).map(|_| f.sample(rng)).collect();
            if p.iter().all(|c| f.is_zero(c)) {
                continue;
            }
            if !self.variety.is_quadric() {
                return p;
            }
            if f.is_zero(&p[0]) {
                continue;
            }
            // q = x0*x1 + rest; set x1 := -rest/x0.
            p[1] = f.zero();
            let rest = self.eval_quadric(&p);
            p[1] = f.neg(&f.div(&rest, &p[0]));
            debug_assert!(f.is_zero(&self.eval_quadric(&p)));
            return p;
        }
    }

    // ------------------------------------------------------------------
    // Polynomial string grammar: terms `c*x<i>^e*...` with integer or `a/b`
    // coefficients, `+`/`-` separators, variables `x0..xN`; whitespace
    // insignificant.
    // ------------------------------------------------------------------

    /// Parses the grammar; returns `None` for the zero polynomial `"0"`.
    pub fn parse_poly(&self, input: &str) -> Result<Option<HomogeneousElement<F>>> {
        let f = &self.field;
        let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::PolyParse("empty polynomial string".into()));
        }
        if s == "0" {
            return Ok(None);
        }
        let v = self.num_vars();
        let mut terms: Vec<(Monomial, F::Elem)> = Vec::new();
        let mut degree: Option<i64> = None;

        let bytes = s.as_bytes();
        let mut i = 0usize;
        let mut sign_next = 1i64;
        if bytes[0] == b'+' || bytes[0] == b'-' {
            sign_next = if bytes[0] == b'-' { -1 } else { 1 };
            i = 1;
        }
        while i < bytes.len() {
            // One term: factors separated by '*'.
            let start = i;
            while i < bytes.len() && bytes[i] != b'+' && bytes[i] != b'-' {
                i += 1;
            }
            let term_str = &s[start..i];
            if term_str.is_empty() {
                return Err(Error::PolyParse(format!("empty term in `{input}`")));
            }
            let mut coeff = f.from_i64(sign_next);
            let mut mono = vec![0u16; v];
            for factor in term_str.split('*') {
                if factor.is_empty() {
                    return Err(Error::PolyParse(format!("empty factor in `{term_str}`")));
                }
                if let Some(rest) = factor.strip_prefix('x') {
                    let (var_str, exp) = match rest.split_once('^') {
                        Some((vs, es)) => {
                            let e: u16 = es.parse().map_err(|_| {
                                Error::PolyParse(format!("bad exponent in `{factor}`"))
                            })?;
                            (vs, e)
                        }
                        None => (rest, 1),
                    };
                    let vi: usize = var_str
                        .parse()
                        .map_err(|_| Error::PolyParse(format!("bad variable `{factor}`")))?;
                    if vi >= v {
                        return Err(Error::UnknownVariable(vi, v - 1));
                    }
                    mono[vi] += exp;
                } else if let Some((num, den)) = factor.split_once('/') {
                    let n: i64 = num
                        .parse()
                        .map_err(|_| Error::PolyParse(format!("bad numerator `{factor}`")))?;
                    let d: i64 = den
                        .parse()
                        .map_err(|_| Error::PolyParse(format!("bad denominator `{factor}`")))?;
                    if d == 0 {
                        return Err(Error::PolyParse("zero denominator".into()));
                    }
                    coeff = f.mul(&coeff, &f.from_ratio(n, d));
                } else {
                    let n: i64 = factor
                        .parse()
                        .map_err(|_| Error::PolyParse(format!("bad factor `{factor}`")))?;
                    coeff = f.mul(&coeff, &f.from_i64(n));
                }
            }
            let term_deg: i64 = mono.iter().map(|e| *e as i64).sum();
            match degree {
                None => degree = Some(term_deg),
                Some(d) if d != term_deg => return Err(Error::NonHomogeneous(d, term_deg)),
                _ => {}
            }
            terms.push((mono, coeff));

            if i < bytes.len() {
                sign_next = if bytes[i] == b'-' { -1 } else { 1 };
                i += 1;
            }
        }
        let degree = degree.expect("at least one term");
        Ok(Some(self.normal_form_terms(degree, terms)))
    }

    /// Canonical string form; inverse of `parse_poly` on normal forms.
    pub fn poly_to_string(&self, a: &HomogeneousElement<F>, fmt: &dyn Fn(&F::Elem) -> String) -> String {
        let f = &self.field;
        let basis = self.basis(a.degree);
        let mut out = String::new();
        for (i, c) in a.coeffs.iter().enumerate() {
            if f.is_zero(c) {
                continue;
            }
            let mono = &basis.monomials[i];
            let mono_str: Vec<String> = mono
                .iter()
                .enumerate()
                .filter(|(_, e)| **e > 0)
                .map(|(v, e)| {
                    if *e == 1 {
                        format!("x{v}")
                    } else {
                        format!("x{v}^{e}")
                    }
                })
                .collect();
            let cs = fmt(c);
            let piece = if mono_str.is_empty() {
                cs
            } else if f.is_one(c) {
                mono_str.join("*")
            } else if cs == "-1" {
                format!("-{}", mono_str.join("*"))
            } else {
                format!("{}*{}", cs, mono_str.join("*"))
            };
            if out.is_empty() {
                out = piece;
            } else if let Some(stripped) = piece.strip_prefix('-') {
                out = format!("{out} - {stripped}");
            } else {
                out = format!("{out} + {piece}");
            }
        }
        if out.is_empty() {
            "0".into()
        } else {
            out
        }
    }
}

/// `C(n, k)` as u128 for nonnegative arguments, 0 outside range.
pub fn binom(n: i64, k: i64) -> u128 {
    if n < 0 || k < 0 || k > n {
        return 0;
    }
    let (n, k) = (n as u128, k.min(n - k) as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// The polynomial `d -> C(n+d, n)` evaluated exactly (integer-valued for all
/// integer d), i.e. `prod_{i=1..n} (d+i) / n!`.
pub fn binom_poly(d: i64, n: usize) -> i128 {
    let mut num: i128 = 1;
    for i in 1..=n as i128 {
        num *= d as i128 + i;
    }
    let mut fact: i128 = 1;
    for i in 1..=n as i128 {
        fact *= i;
    }
    num / fact
}

/// Closed-form `dim S(X)_d` used as the test oracle against enumerated bases.
pub fn graded_dim_closed(variety: &Variety, d: i64) -> u128 {
    if d < 0 {
        return 0;
    }
    let n = variety.dim as i64;
    match variety.kind {
        VarietyKind::ProjectiveSpace => binom(n + d, n),
        VarietyKind::Quadric => binom(n + 1 + d, n + 1) - binom(n - 1 + d, n + 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{PrimeField, Rationals};

    fn q3(field: PrimeField) -> Arc<CoordinateRing<PrimeField>> {
        CoordinateRing::new(Variety::quadric(3).unwrap(), field)
    }

    #[test]
    fn projective_dims_match_binomials() {
        let ring = CoordinateRing::new(Variety::projective_space(3).unwrap(), Rationals);
        assert_eq!(ring.graded_dim(2), 10); // C(5,3)
        assert_eq!(ring.graded_dim(-1), 0);
        assert_eq!(ring.graded_dim(0), 1);
    }

    #[test]
    fn quadric_dims_match_presentation() {
        // Oracle: brute-force count of degree-d monomials not divisible by
        // x0*x1, independently of the closed form.
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        assert_eq!(ring.graded_dim(2), 14); // C(6,4) - C(4,4)
        for d in 0..=12 {
            assert_eq!(
                ring.graded_dim(d) as u128,
                graded_dim_closed(&ring.variety(), d),
                "degree {d}"
            );
        }
    }

    #[test]
    fn quadric_normal_form_reduces_leading_pair() {
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        // x0*x1 -> -x2*x3 - x4^2 on Q_3.
        let e = ring.parse_poly("x0*x1").unwrap().unwrap();
        let expected = ring.parse_poly("-x2*x3 - x4^2").unwrap().unwrap();
        assert_eq!(e, expected);
        // q itself is zero in S(Q).
        let q = ring.parse_poly("x0*x1 + x2*x3 + x4^2").unwrap().unwrap();
        assert!(ring.is_zero_elem(&q));
    }

    #[test]
    fn parser_rejects_bad_input() {
        let ring = CoordinateRing::new(Variety::projective_space(2).unwrap(), Rationals);
        assert!(matches!(
            ring.parse_poly("x0 + x1^2"),
            Err(Error::NonHomogeneous(..))
        ));
        assert!(matches!(
            ring.parse_poly("x7"),
            Err(Error::UnknownVariable(7, 2))
        ));
        assert!(ring.parse_poly("x0 + x1").is_ok());
        assert!(ring.parse_poly("3/2*x0").is_ok());
        assert!(ring.parse_poly("").is_err());
    }

    #[test]
    fn mult_matrix_identity_and_shift() {
        let ring = CoordinateRing::new(Variety::projective_space(1).unwrap(), Rationals);
        let one = ring.one_element();
        let m = ring.mult_matrix(&one, 1);
        assert!(m.equals(&ExactMatrix::identity(Rationals, 2)).unwrap());
        // x0: (x0, x1) -> (x0^2, x0*x1, x1^2): unit entries at (0,0), (1,1).
        let x0 = ring.variable(0);
        let m = ring.mult_matrix(&x0, 1);
        assert_eq!(m.nrows(), 3);
        assert_eq!(m.ncols(), 2);
        assert!(Rationals.is_one(&m.get(0, 0)));
        assert!(Rationals.is_one(&m.get(1, 1)));
        assert_eq!(m.nnz(), 2);
    }

    #[test]
    fn quadric_mult_matrix_reduces() {
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        let x0 = ring.variable(0);
        let m = ring.mult_matrix(&x0, 1);
        assert_eq!((m.nrows(), m.ncols()), (14, 5));
        // Column for x1 must match normal_form(x0*x1) applied monomial-wise.
        let nf = ring.parse_poly("-x2*x3 - x4^2").unwrap().unwrap();
        let basis1 = ring.basis(1);
        let col = basis1.index_of(&vec![0, 1, 0, 0, 0]).unwrap();
        let basis2 = ring.basis(2);
        for (i, c) in nf.coeffs.iter().enumerate() {
            assert_eq!(&m.get(i, col), c, "row {i} ({:?})", basis2.monomials[i]);
        }
    }

    #[test]
    fn mult_matrices_compose() {
        // mult(f*g, d) == mult(g, d + deg f) * mult(f, d)
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        for (fs, gs, d) in [
            ("x0 + 2*x4", "x1 - x3", 1),
            ("x2", "x2*x3 + x4^2", 0),
            ("x0*x4", "x1", 2),
        ] {
            let fe = ring.parse_poly(fs).unwrap().unwrap();
            let ge = ring.parse_poly(gs).unwrap().unwrap();
            let fg = ring.mul(&fe, &ge);
            let lhs = ring.mult_matrix(&fg, d);
            let rhs = ring
                .mult_matrix(&ge, d + fe.degree)
                .matmul(&ring.mult_matrix(&fe, d));
            assert!(lhs.equals(&rhs).unwrap(), "f={fs} g={gs} d={d}");
        }
    }

    #[test]
    fn mult_by_quadric_is_zero() {
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        let q = ring.quadric_form().unwrap();
        assert!(ring.is_zero_elem(&q));
        for d in 0..4 {
            assert!(ring.mult_matrix(&q, d).is_zero_matrix());
        }
    }

    #[test]
    fn quadric_gradient_covers_all_variables() {
        // d(q) = (x1, x0, x3, x2, 2*x4): no common zero except the origin, so
        // the fixed q is smooth in char != 2.
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        let mut seen = vec![false; 5];
        for (i, j) in ring.hyperbolic_pairs() {
            seen[i] = true;
            seen[j] = true;
        }
        if let Some(w) = ring.odd_leftover() {
            seen[w] = true;
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn random_quadric_points_lie_on_q() {
        use rand::SeedableRng;
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        for _ in 0..50 {
            let p = ring.random_point(&mut rng);
            assert!(f.is_zero(&ring.eval_quadric(&p)));
            assert!(p.iter().any(|c| !f.is_zero(c)));
        }
    }

    #[test]
    fn poly_string_roundtrip() {
        let f = PrimeField::new(32003).unwrap();
        let ring = q3(f);
        let fmt = |e: &u64| {
            let p = 32003u64;
            if *e > p / 2 {
                format!("-{}", p - e)
            } else {
                format!("{e}")
            }
        };
        for s in ["x0 - 2*x3", "x4^2 + x2*x3", "0", "3*x0*x2 - x4^2"] {
            match ring.parse_poly(s).unwrap() {
                None => assert_eq!(s, "0"),
                Some(e) => {
                    let printed = ring.poly_to_string(&e, &fmt);
                    let reparsed = ring.parse_poly(&printed).unwrap().unwrap();
                    assert_eq!(e, reparsed, "roundtrip of `{s}` via `{printed}`");
                }
            }
        }
    }
}
