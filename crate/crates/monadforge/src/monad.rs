//! Monads `0 -> A -> B -> C -> 0` of elementary sheaves, with validation
//! certificates, dualization, twisting, numerical invariants, and
//! minimalization.
//!
//! Map entries between line-bundle summands are homogeneous forms of the
//! forced degree. Entries into a spinor summand are vectors over the spinor
//! section model (raw representatives in `S^r`); entries out of a spinor
//! summand are covectors over the dual model. Nonzero spinor-valued entries
//! are supported when the spinor sits in the middle term.

use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::atlas::{ElementarySheaf, SheafAtlas, SheafKind};
use crate::error::{Error, Result};
use crate::field::{Field, FieldSpec};
use crate::matrix::ExactMatrix;
use crate::ring::{binom_poly, CoordinateRing, HomogeneousElement, Variety, VarietyKind};

/// A formal sum of twisted elementary sheaves; the `A`, `B`, `C` of a monad.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TermSum(pub Vec<ElementarySheaf>);

impl TermSum {
    pub fn lines(twists: &[i64]) -> Self {
        TermSum(twists.iter().map(|&t| ElementarySheaf::line(t)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ElementarySheaf> {
        self.0.iter()
    }

    pub fn all_line_bundles(&self) -> bool {
        self.0.iter().all(|s| s.kind == SheafKind::Line)
    }

    pub fn twisted(&self, j: i64) -> TermSum {
        TermSum(self.0.iter().map(|s| s.twisted(j)).collect())
    }

    pub fn label(&self) -> String {
        if self.0.is_empty() {
            "0".into()
        } else {
            self.0
                .iter()
                .map(|s| s.label())
                .collect::<Vec<_>>()
                .join(" + ")
        }
    }
}

/// One entry of a map between term sums.
#[derive(Clone, Debug)]
pub enum Entry<F: Field> {
    Zero,
    /// Line -> line: a homogeneous form of degree `target - source`.
    Poly(HomogeneousElement<F>),
    /// Line -> spinor: a section of `Sigma(t - s)` as a raw representative,
    /// `r` homogeneous components of degree `t - s - 1`.
    SpinorVec(Vec<HomogeneousElement<F>>),
    /// Spinor -> line: a section of `Sigma^dual(c - t)` as a raw
    /// representative over the transposed factorization, degree `c - t`.
    SpinorCovec(Vec<HomogeneousElement<F>>),
}

/// A matrix of entries: rows indexed by the target sum, columns by the source.
#[derive(Clone, Debug)]
pub struct HomMatrix<F: Field> {
    pub entries: Vec<Vec<Entry<F>>>,
}

impl<F: Field> HomMatrix<F> {
    pub fn zero(rows: usize, cols: usize) -> Self {
        HomMatrix {
            entries: (0..rows)
                .map(|_| (0..cols).map(|_| Entry::Zero).collect())
                .collect(),
        }
    }
}

/// Validity certificate: the symbolic complex identity plus probabilistic
/// end-exactness checks at sampled points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Validity {
    pub complex_checked: bool,
    pub ends_trials: usize,
    pub seed: u64,
}

/// A monad of elementary sheaves on `P^n` or `Q_n`.
pub struct Monad<F: Field> {
    ring: Arc<CoordinateRing<F>>,
    atlas: Arc<SheafAtlas<F>>,
    pub a: TermSum,
    pub b: TermSum,
    pub c: TermSum,
    pub alpha: HomMatrix<F>,
    pub beta: HomMatrix<F>,
}

impl<F: Field> Clone for Monad<F> {
    fn clone(&self) -> Self {
        Monad {
            ring: self.ring.clone(),
            atlas: self.atlas.clone(),
            a: self.a.clone(),
            b: self.b.clone(),
            c: self.c.clone(),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
        }
    }
}

impl<F: Field> Monad<F> {
    /// Builds a monad after shape- and degree-checking both maps.
    pub fn new(
        atlas: Arc<SheafAtlas<F>>,
        a: TermSum,
        b: TermSum,
        c: TermSum,
        alpha: HomMatrix<F>,
        beta: HomMatrix<F>,
    ) -> Result<Self> {
        let ring = atlas.ring().clone();
        for term in a.iter().chain(b.iter()).chain(c.iter()) {
            if !atlas.kind_allowed(term.kind) {
                return Err(Error::BadVariety(format!(
                    "sheaf `{}` does not exist on {}",
                    term.label(),
                    atlas.variety().describe()
                )));
            }
        }
        let m = Monad {
            ring,
            atlas,
            a,
            b,
            c,
            alpha,
            beta,
        };
        m.check_map_shape(&m.alpha, &m.b, &m.a, "alpha")?;
        m.check_map_shape(&m.beta, &m.c, &m.b, "beta")?;
        Ok(m)
    }

    pub fn ring(&self) -> &Arc<CoordinateRing<F>> {
        &self.ring
    }

    pub fn atlas(&self) -> &Arc<SheafAtlas<F>> {
        &self.atlas
    }

    pub fn variety(&self) -> Variety {
        self.ring.variety()
    }

    pub fn dim(&self) -> usize {
        self.ring.variety().dim
    }

    pub fn all_line_bundles(&self) -> bool {
        self.a.all_line_bundles() && self.b.all_line_bundles() && self.c.all_line_bundles()
    }

    fn check_map_shape(
        &self,
        map: &HomMatrix<F>,
        target: &TermSum,
        source: &TermSum,
        name: &str,
    ) -> Result<()> {
        if map.entries.len() != target.len()
            || map.entries.iter().any(|row| row.len() != source.len())
        {
            return Err(Error::Shape(format!(
                "{name} must be {} x {}",
                target.len(),
                source.len()
            )));
        }
        for (i, row) in map.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                self.check_entry(e, &target.0[i], &source.0[j], name, i, j)?;
            }
        }
        Ok(())
    }

    fn check_entry(
        &self,
        e: &Entry<F>,
        target: &ElementarySheaf,
        source: &ElementarySheaf,
        name: &str,
        i: usize,
        j: usize,
    ) -> Result<()> {
        let ctx = |msg: String| Error::Shape(format!("{name}[{i}][{j}]: {msg}"));
        match (e, target.kind, source.kind) {
            (Entry::Zero, _, _) => Ok(()),
            (Entry::Poly(f), SheafKind::Line, SheafKind::Line) => {
                let want = target.twist - source.twist;
                if want < 0 {
                    Err(ctx(format!(
                        "required degree {want} is negative; entry must be \"0\""
                    )))
                } else if f.degree != want {
                    Err(ctx(format!("degree {} != required {want}", f.degree)))
                } else {
                    Ok(())
                }
            }
            (Entry::SpinorVec(u), tk, SheafKind::Line) if tk.is_spinor() => {
                let d = target.twist - source.twist - 1;
                if d < 0 {
                    return Err(ctx("no nonzero maps into this spinor twist".into()));
                }
                let r = self.atlas.spinor_size();
                if u.len() != r || u.iter().any(|c| c.degree != d) {
                    return Err(ctx(format!(
                        "spinor vector must have {r} components of degree {d}"
                    )));
                }
                Ok(())
            }
            (Entry::SpinorCovec(w), SheafKind::Line, sk) if sk.is_spinor() => {
                let d = target.twist - source.twist;
                if d < 0 {
                    return Err(ctx("no nonzero maps from this spinor twist".into()));
                }
                let r = self.atlas.spinor_size();
                if w.len() != r || w.iter().any(|c| c.degree != d) {
                    return Err(ctx(format!(
                        "spinor covector must have {r} components of degree {d}"
                    )));
                }
                Ok(())
            }
            _ => Err(ctx(
                "entry type does not match endpoint kinds (spinor-to-spinor maps are unsupported)"
                    .into(),
            )),
        }
    }

    /// Whether an entry represents the zero map (after projection for spinor
    /// representatives).
    pub fn entry_is_zero_map(
        &self,
        e: &Entry<F>,
        target: &ElementarySheaf,
        source: &ElementarySheaf,
    ) -> bool {
        let f = self.ring.field();
        match e {
            Entry::Zero => true,
            Entry::Poly(p) => p.coeffs.iter().all(|c| f.is_zero(c)),
            Entry::SpinorVec(u) => self
                .atlas
                .spin_project_h0(target.kind, target.twist - source.twist, u)
                .iter()
                .all(|c| f.is_zero(c)),
            Entry::SpinorCovec(w) => self
                .atlas
                .spin_project_dual_h0(source.kind, target.twist - source.twist, w)
                .iter()
                .all(|c| f.is_zero(c)),
        }
    }

    fn compose_entries(
        &self,
        e2: &Entry<F>,
        e1: &Entry<F>,
        middle: &ElementarySheaf,
    ) -> Result<Entry<F>> {
        let ring = &self.ring;
        Ok(match (e2, e1) {
            (Entry::Zero, _) | (_, Entry::Zero) => Entry::Zero,
            (Entry::Poly(g), Entry::Poly(f)) => Entry::Poly(ring.mul(g, f)),
            (Entry::SpinorVec(u), Entry::Poly(f)) => {
                Entry::SpinorVec(u.iter().map(|c| ring.mul(c, f)).collect())
            }
            (Entry::Poly(g), Entry::SpinorCovec(w)) => {
                Entry::SpinorCovec(w.iter().map(|c| ring.mul(g, c)).collect())
            }
            (Entry::SpinorCovec(w), Entry::SpinorVec(u)) => {
                Entry::Poly(self.atlas.pairing(middle.kind, w, u))
            }
            _ => {
                return Err(Error::Unsupported(
                    "composite would be a spinor-to-spinor map".into(),
                ))
            }
        })
    }

    /// Checks `beta . alpha = 0` as an exact symbolic identity and exactness
    /// at the ends at `trials` random points of X; also checks the rank
    /// inequality. Returns the certificate.
    pub fn validate_complex(&self, trials: usize, seed: u64) -> Result<Validity> {
        for (ci, crow) in self.beta.entries.iter().enumerate() {
            for (aj, _) in self.a.0.iter().enumerate() {
                let mut acc: Option<Entry<F>> = None;
                for (bm, e2) in crow.iter().enumerate() {
                    let e1 = &self.alpha.entries[bm][aj];
                    let prod = self.compose_entries(e2, e1, &self.b.0[bm])?;
                    acc = Some(match acc {
                        None => prod,
                        Some(cur) => self.add_entries(cur, prod)?,
                    });
                }
                let total = acc.unwrap_or(Entry::Zero);
                if !self.entry_is_zero_map(&total, &self.c.0[ci], &self.a.0[aj]) {
                    return Err(Error::NotAComplex { row: ci, col: aj });
                }
            }
        }
        self.rank_of_cohomology()?;

        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        for _ in 0..trials {
            let point = self.ring.random_point(&mut rng);
            let alpha_fib = self.fiber_matrix(&self.alpha, &self.b, &self.a, &point);
            let want_a = self.fiber_dim(&self.a);
            if alpha_fib.rank() != want_a {
                return Err(Error::EndsExactness {
                    end: "A",
                    got: alpha_fib.rank(),
                    want: want_a,
                    point: format!("{point:?}"),
                });
            }
            let beta_fib = self.fiber_matrix(&self.beta, &self.c, &self.b, &point);
            let want_c = self.fiber_dim(&self.c);
            if beta_fib.rank() != want_c {
                return Err(Error::EndsExactness {
                    end: "C",
                    got: beta_fib.rank(),
                    want: want_c,
                    point: format!("{point:?}"),
                });
            }
        }
        Ok(Validity {
            complex_checked: true,
            ends_trials: trials,
            seed,
        })
    }

    fn add_entries(&self, a: Entry<F>, b: Entry<F>) -> Result<Entry<F>> {
        let ring = &self.ring;
        Ok(match (a, b) {
            (Entry::Zero, x) | (x, Entry::Zero) => x,
            (Entry::Poly(f), Entry::Poly(g)) => Entry::Poly(ring.add(&f, &g)),
            (Entry::SpinorVec(u), Entry::SpinorVec(v)) => {
                Entry::SpinorVec(u.iter().zip(&v).map(|(x, y)| ring.add(x, y)).collect())
            }
            (Entry::SpinorCovec(u), Entry::SpinorCovec(v)) => {
                Entry::SpinorCovec(u.iter().zip(&v).map(|(x, y)| ring.add(x, y)).collect())
            }
            _ => return Err(Error::Unsupported("adding mixed entry kinds".into())),
        })
    }

    fn fiber_dim(&self, terms: &TermSum) -> usize {
        terms.iter().map(|t| self.atlas.rank(t.kind)).sum()
    }

    /// The fiber map at a point of X, in the per-summand fiber bases.
    fn fiber_matrix(
        &self,
        map: &HomMatrix<F>,
        target: &TermSum,
        source: &TermSum,
        point: &[F::Elem],
    ) -> ExactMatrix<F> {
        let f = self.ring.field().clone();
        let row_dims: Vec<usize> = target.iter().map(|t| self.atlas.rank(t.kind)).collect();
        let col_dims: Vec<usize> = source.iter().map(|t| self.atlas.rank(t.kind)).collect();
        let offsets = |dims: &[usize]| -> Vec<usize> {
            dims.iter()
                .scan(0, |s, d| {
                    let o = *s;
                    *s += d;
                    Some(o)
                })
                .collect()
        };
        let row_off = offsets(&row_dims);
        let col_off = offsets(&col_dims);
        let mut out = ExactMatrix::zero(f, row_dims.iter().sum(), col_dims.iter().sum());
        for (i, row) in map.entries.iter().enumerate() {
            for (j, e) in row.iter().enumerate() {
                match e {
                    Entry::Zero => {}
                    Entry::Poly(p) => {
                        out.set(row_off[i], col_off[j], self.ring.eval(p, point));
                    }
                    Entry::SpinorVec(u) => {
                        let fiber = self.atlas.spin_fiber(target.0[i].kind, point);
                        let raw: Vec<F::Elem> =
                            u.iter().map(|c| self.ring.eval(c, point)).collect();
                        for (r, v) in fiber.project(raw).into_iter().enumerate() {
                            out.set(row_off[i] + r, col_off[j], v);
                        }
                    }
                    Entry::SpinorCovec(w) => {
                        let kind = source.0[j].kind;
                        let fiber = self.atlas.spin_fiber(kind, point);
                        let q = self.atlas.partner_at_point(kind, point);
                        let wx: Vec<F::Elem> =
                            w.iter().map(|c| self.ring.eval(c, point)).collect();
                        // Row = (w^T Q)(x) restricted to the fiber basis.
                        let wq = q.transpose().mul_vec(&wx);
                        for (cidx, pos) in fiber.complement.iter().enumerate() {
                            out.set(row_off[i], col_off[j] + cidx, wq[*pos].clone());
                        }
                    }
                }
            }
        }
        out
    }

    /// `rk(E) = rk(B) - rk(A) - rk(C)`; errors when negative.
    pub fn rank_of_cohomology(&self) -> Result<i64> {
        let r = self.fiber_dim(&self.b) as i64
            - self.fiber_dim(&self.a) as i64
            - self.fiber_dim(&self.c) as i64;
        if r < 0 {
            return Err(Error::NegativeRank(r));
        }
        Ok(r)
    }

    /// Twists every summand by `j`; the matrices are unchanged.
    pub fn twist(&self, j: i64) -> Monad<F> {
        Monad {
            ring: self.ring.clone(),
            atlas: self.atlas.clone(),
            a: self.a.twisted(j),
            b: self.b.twisted(j),
            c: self.c.twisted(j),
            alpha: self.alpha.clone(),
            beta: self.beta.clone(),
        }
    }

    /// The dual monad `(C^v, B^v, A^v, beta^v, alpha^v)`; its cohomology is
    /// `E^dual`. Supported whenever no nonzero entry touches a spinor
    /// summand (transport of raw spinor representatives across the derived
    /// kind identification is not implemented).
    pub fn dual(&self) -> Result<Monad<F>> {
        let dual_terms = |ts: &TermSum| -> Result<TermSum> {
            Ok(TermSum(
                ts.iter()
                    .map(|s| self.atlas.dualize_elementary(*s))
                    .collect::<Result<Vec<_>>>()?,
            ))
        };
        let dual_map = |map: &HomMatrix<F>, rows: usize, cols: usize| -> Result<HomMatrix<F>> {
            // Transpose positions; polynomial entries carry over unchanged.
            let mut out = HomMatrix::zero(cols, rows);
            for (i, row) in map.entries.iter().enumerate() {
                for (j, e) in row.iter().enumerate() {
                    out.entries[j][i] = match e {
                        Entry::Zero => Entry::Zero,
                        Entry::Poly(f) => Entry::Poly(f.clone()),
                        _ => {
                            return Err(Error::Unsupported(
                                "dual of a monad with nonzero spinor-valued entries".into(),
                            ))
                        }
                    };
                }
            }
            Ok(out)
        };
        Monad::new(
            self.atlas.clone(),
            dual_terms(&self.c)?,
            dual_terms(&self.b)?,
            dual_terms(&self.a)?,
            dual_map(&self.beta, self.c.len(), self.b.len())?,
            dual_map(&self.alpha, self.b.len(), self.a.len())?,
        )
    }

    /// Block direct sum: a monad for `E1 (+) E2`.
    pub fn direct_sum(&self, other: &Monad<F>) -> Result<Monad<F>> {
        if self.variety() != other.variety() {
            return Err(Error::Shape("direct sum across varieties".into()));
        }
        let cat =
            |x: &TermSum, y: &TermSum| TermSum(x.0.iter().chain(y.0.iter()).copied().collect());
        let block = |m1: &HomMatrix<F>,
                     m2: &HomMatrix<F>,
                     r1: usize,
                     c1: usize,
                     r2: usize,
                     c2: usize| {
            let mut out = HomMatrix::zero(r1 + r2, c1 + c2);
            for i in 0..r1 {
                for j in 0..c1 {
                    out.entries[i][j] = m1.entries[i][j].clone();
                }
            }
            for i in 0..r2 {
                for j in 0..c2 {
                    out.entries[r1 + i][c1 + j] = m2.entries[i][j].clone();
                }
            }
            out
        };
        Monad::new(
            self.atlas.clone(),
            cat(&self.a, &other.a),
            cat(&self.b, &other.b),
            cat(&self.c, &other.c),
            block(
                &self.alpha,
                &other.alpha,
                self.b.len(),
                self.a.len(),
                other.b.len(),
                other.a.len(),
            ),
            block(
                &self.beta,
                &other.beta,
                self.c.len(),
                self.b.len(),
                other.c.len(),
                other.b.len(),
            ),
        )
    }

    /// `chi(E(k)) = chi(B(k)) - chi(A(k)) - chi(C(k))` from closed-form term
    /// Euler characteristics, stored by values on `n + 2` consecutive twists.
    pub fn euler_polynomial(&self) -> EulerPolynomial {
        let n = self.dim();
        let base = 0i64;
        let values: Vec<i128> = (0..n as i64 + 2)
            .map(|off| {
                let k = base + off;
                let chi = |ts: &TermSum| -> i128 { ts.iter().map(|s| self.chi_term(s, k)).sum() };
                chi(&self.b) - chi(&self.a) - chi(&self.c)
            })
            .collect();
        EulerPolynomial { base, values }
    }

    /// Exact `chi(F(k))` of one elementary sheaf: binomial closed forms for
    /// line bundles; for spinors `h^0 + (-1)^n h^n` from the models, which
    /// equals the Euler characteristic because intermediate cohomology
    /// vanishes.
    pub fn chi_term(&self, sheaf: &ElementarySheaf, k: i64) -> i128 {
        let n = self.dim();
        match (sheaf.kind, self.variety().kind) {
            (SheafKind::Line, VarietyKind::ProjectiveSpace) => binom_poly(sheaf.twist + k, n),
            (SheafKind::Line, VarietyKind::Quadric) => {
                let d = sheaf.twist + k;
                binom_poly(d, n + 1) - binom_poly(d - 2, n + 1)
            }
            _ => {
                let h0 = self.atlas.h0_dim(*sheaf, k) as i128;
                let hn = self.atlas.hn_dim(*sheaf, k) as i128;
                if n % 2 == 0 {
                    h0 + hn
                } else {
                    h0 - hn
                }
            }
        }
    }

    /// Cancels constant (degree-0 unit) entries of `alpha`, then of `beta`,
    /// by the change-of-basis eliminations, removing the matched summand
    /// pairs, until no constant entries remain. Requires line-bundle terms.
    pub fn minimalize(&self) -> Result<Monad<F>> {
        if !self.all_line_bundles() {
            return Err(Error::Precondition(
                "minimalize requires line-bundle terms".into(),
            ));
        }
        let mut m = self.clone();
        loop {
            if m.cancel_alpha_once() {
                continue;
            }
            if m.cancel_beta_once() {
                continue;
            }
            break;
        }
        Ok(m)
    }

    fn constant_of(&self, e: &Entry<F>) -> Option<F::Elem> {
        if let Entry::Poly(p) = e {
            if p.degree == 0 && !p.coeffs.iter().all(|c| self.ring.field().is_zero(c)) {
                return Some(p.coeffs[0].clone());
            }
        }
        None
    }

    fn entry_poly(&self, e: &Entry<F>) -> Option<HomogeneousElement<F>> {
        match e {
            Entry::Poly(p) if !p.coeffs.iter().all(|c| self.ring.field().is_zero(c)) => {
                Some(p.clone())
            }
            _ => None,
        }
    }

    /// `target + sign * factor * source` as a degree-`degree` entry.
    fn combine(
        &self,
        target: &Entry<F>,
        factor: &HomogeneousElement<F>,
        source: &Entry<F>,
        degree: i64,
        subtract: bool,
    ) -> Entry<F> {
        let ring = &self.ring;
        let t = match target {
            Entry::Poly(p) => p.clone(),
            _ => ring.zero_element(degree),
        };
        let result = match source {
            Entry::Poly(p) => {
                let prod = ring.mul(factor, p);
                let prod = if subtract { ring.neg_elem(&prod) } else { prod };
                ring.add(&t, &prod)
            }
            _ => t,
        };
        if ring.is_zero_elem(&result) {
            Entry::Zero
        } else {
            Entry::Poly(result)
        }
    }

    fn cancel_alpha_once(&mut self) -> bool {
        let f = self.ring.field().clone();
        let Some((bi, aj, c)) = self.alpha.entries.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .enumerate()
                .find_map(|(j, e)| self.constant_of(e).map(|c| (i, j, c)))
        }) else {
            return false;
        };
        let cinv = f.inv(&c);
        // Clear column aj with B-basis row operations, mirrored
        // contravariantly on beta's columns.
        for i2 in 0..self.b.len() {
            if i2 == bi {
                continue;
            }
            if let Some(g) = self.entry_poly(&self.alpha.entries[i2][aj]) {
                let factor = self.ring.scale(&cinv, &g);
                for j2 in 0..self.a.len() {
                    let deg = self.b.0[i2].twist - self.a.0[j2].twist;
                    let pivot_row_entry = self.alpha.entries[bi][j2].clone();
                    self.alpha.entries[i2][j2] = self.combine(
                        &self.alpha.entries[i2][j2],
                        &factor,
                        &pivot_row_entry,
                        deg,
                        true,
                    );
                }
                for r in 0..self.c.len() {
                    let deg = self.c.0[r].twist - self.b.0[bi].twist;
                    let other_col_entry = self.beta.entries[r][i2].clone();
                    self.beta.entries[r][bi] = self.combine(
                        &self.beta.entries[r][bi],
                        &factor,
                        &other_col_entry,
                        deg,
                        false,
                    );
                }
            }
        }
        // Clear row bi with A-basis column operations (beta untouched).
        for j2 in 0..self.a.len() {
            if j2 == aj {
                continue;
            }
            if let Some(g) = self.entry_poly(&self.alpha.entries[bi][j2]) {
                let factor = self.ring.scale(&cinv, &g);
                for r in 0..self.b.len() {
                    let deg = self.b.0[r].twist - self.a.0[j2].twist;
                    let pivot_col_entry = self.alpha.entries[r][aj].clone();
                    self.alpha.entries[r][j2] = self.combine(
                        &self.alpha.entries[r][j2],
                        &factor,
                        &pivot_col_entry,
                        deg,
                        true,
                    );
                }
            }
        }
        // beta . alpha = 0 forces beta's column bi to vanish now.
        debug_assert!((0..self.c.len()).all(|r| self.entry_is_zero_map(
            &self.beta.entries[r][bi],
            &self.c.0[r],
            &self.b.0[bi]
        )));
        self.a.0.remove(aj);
        self.b.0.remove(bi);
        self.alpha.entries.remove(bi);
        for row in &mut self.alpha.entries {
            row.remove(aj);
        }
        for row in &mut self.beta.entries {
            row.remove(bi);
        }
        true
    }

    fn cancel_beta_once(&mut self) -> bool {
        let f = self.ring.field().clone();
        let Some((ci, bm, c)) = self.beta.entries.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .enumerate()
                .find_map(|(m, e)| self.constant_of(e).map(|c| (i, m, c)))
        }) else {
            return false;
        };
        let cinv = f.inv(&c);
        // Clear column bm with C-basis row operations (alpha untouched).
        for i2 in 0..self.c.len() {
            if i2 == ci {
                continue;
            }
            if let Some(g) = self.entry_poly(&self.beta.entries[i2][bm]) {
                let factor = self.ring.scale(&cinv, &g);
                for m2 in 0..self.b.len() {
                    let deg = self.c.0[i2].twist - self.b.0[m2].twist;
                    let pivot_row_entry = self.beta.entries[ci][m2].clone();
                    self.beta.entries[i2][m2] = self.combine(
                        &self.beta.entries[i2][m2],
                        &factor,
                        &pivot_row_entry,
                        deg,
                        true,
                    );
                }
            }
        }
        // Clear row ci with B-basis column operations, mirrored on alpha rows.
        for m2 in 0..self.b.len() {
            if m2 == bm {
                continue;
            }
            if let Some(g) = self.entry_poly(&self.beta.entries[ci][m2]) {
                let factor = self.ring.scale(&cinv, &g);
                for r in 0..self.c.len() {
                    let deg = self.c.0[r].twist - self.b.0[m2].twist;
                    let pivot_col_entry = self.beta.entries[r][bm].clone();
                    self.beta.entries[r][m2] = self.combine(
                        &self.beta.entries[r][m2],
                        &factor,
                        &pivot_col_entry,
                        deg,
                        true,
                    );
                }
                for j in 0..self.a.len() {
                    let deg = self.b.0[bm].twist - self.a.0[j].twist;
                    let other_row_entry = self.alpha.entries[m2][j].clone();
                    self.alpha.entries[bm][j] = self.combine(
                        &self.alpha.entries[bm][j],
                        &factor,
                        &other_row_entry,
                        deg,
                        false,
                    );
                }
            }
        }
        debug_assert!((0..self.a.len()).all(|j| self.entry_is_zero_map(
            &self.alpha.entries[bm][j],
            &self.b.0[bm],
            &self.a.0[j]
        )));
        self.c.0.remove(ci);
        self.b.0.remove(bm);
        self.beta.entries.remove(ci);
        for row in &mut self.beta.entries {
            row.remove(bm);
        }
        self.alpha.entries.remove(bm);
        true
    }

    /// Total fiber rank of a term sum (used by engine certificates).
    pub fn term_rank(&self, terms: &TermSum) -> usize {
        self.fiber_dim(terms)
    }
}

/// The integer-valued polynomial `k -> chi(E(k))`, stored by its values on
/// `n + 2` consecutive integers and evaluated anywhere through Newton forward
/// differences.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EulerPolynomial {
    pub base: i64,
    pub values: Vec<i128>,
}

impl EulerPolynomial {
    pub fn eval(&self, k: i64) -> i128 {
        let mut diffs = self.values.clone();
        let n = diffs.len();
        let mut leading = Vec::with_capacity(n);
        for level in 0..n {
            leading.push(diffs[0]);
            for i in 0..n - level - 1 {
                diffs[i] = diffs[i + 1] - diffs[i];
            }
        }
        let x = (k - self.base) as i128;
        let mut acc: i128 = 0;
        let mut binom: i128 = 1; // C(x, j) via the product formula
        for (j, d) in leading.iter().enumerate() {
            if j > 0 {
                binom = binom * (x - (j as i128 - 1)) / j as i128;
            }
            acc += d * binom;
        }
        acc
    }
}

// ----------------------------------------------------------------------
// Canonical monad file format.
// ----------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VarietyFile {
    pub kind: VarietyKind,
    pub dim: usize,
}

/// The JSON monad file: `alpha` is indexed rows-by-B, columns-by-A; `beta`
/// rows-by-C, columns-by-B; entries are polynomial strings or `"0"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MonadFile {
    pub variety: VarietyFile,
    #[serde(default)]
    pub field: FieldSpec,
    #[serde(rename = "A")]
    pub a: Vec<ElementarySheaf>,
    #[serde(rename = "B")]
    pub b: Vec<ElementarySheaf>,
    #[serde(rename = "C")]
    pub c: Vec<ElementarySheaf>,
    pub alpha: Vec<Vec<String>>,
    pub beta: Vec<Vec<String>>,
}

impl MonadFile {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("monad file serializes")
    }

    pub fn variety(&self) -> Result<Variety> {
        match self.variety.kind {
            VarietyKind::ProjectiveSpace => Variety::projective_space(self.variety.dim),
            VarietyKind::Quadric => Variety::quadric(self.variety.dim),
        }
    }

    /// Builds the typed monad over an explicit field (chosen consistently
    /// with `self.field` by the caller).
    pub fn build<F: Field>(&self, field: F) -> Result<Monad<F>> {
        let variety = self.variety()?;
        let ring = CoordinateRing::new(variety, field);
        let atlas = SheafAtlas::new(ring.clone())?;
        let parse_map =
            |rows: &[Vec<String>], nrows: usize, ncols: usize| -> Result<HomMatrix<F>> {
                if rows.len() != nrows || rows.iter().any(|r| r.len() != ncols) {
                    return Err(Error::Shape(format!(
                        "map must be {nrows} x {ncols} in the file"
                    )));
                }
                let mut out = HomMatrix::zero(nrows, ncols);
                for (i, row) in rows.iter().enumerate() {
                    for (j, s) in row.iter().enumerate() {
                        out.entries[i][j] = match ring.parse_poly(s)? {
                            None => Entry::Zero,
                            Some(p) => Entry::Poly(p),
                        };
                    }
                }
                Ok(out)
            };
        let alpha = parse_map(&self.alpha, self.b.len(), self.a.len())?;
        let beta = parse_map(&self.beta, self.c.len(), self.b.len())?;
        Monad::new(
            atlas,
            TermSum(self.a.clone()),
            TermSum(self.b.clone()),
            TermSum(self.c.clone()),
            alpha,
            beta,
        )
    }
}

/// Serializes a line-bundle monad back to the canonical file format.
pub fn to_file<F: Field>(
    monad: &Monad<F>,
    field_spec: FieldSpec,
    fmt: &dyn Fn(&F::Elem) -> String,
) -> Result<MonadFile> {
    let ring = monad.ring();
    let emit = |map: &HomMatrix<F>| -> Result<Vec<Vec<String>>> {
        map.entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|e| match e {
                        Entry::Zero => Ok("0".to_string()),
                        Entry::Poly(p) => {
                            if ring.is_zero_elem(p) {
                                Ok("0".to_string())
                            } else {
                                Ok(ring.poly_to_string(p, fmt))
                            }
                        }
                        _ => Err(Error::Unsupported(
                            "spinor-valued entries have no file representation".into(),
                        )),
                    })
                    .collect()
            })
            .collect()
    };
    Ok(MonadFile {
        variety: VarietyFile {
            kind: monad.variety().kind,
            dim: monad.variety().dim,
        },
        field: field_spec,
        a: monad.a.0.clone(),
        b: monad.b.0.clone(),
        c: monad.c.0.clone(),
        alpha: emit(&monad.alpha)?,
        beta: emit(&monad.beta)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::PrimeField;

    pub fn fp() -> PrimeField {
        PrimeField::new(32003).unwrap()
    }

    pub fn null_correlation_json() -> &'static str {
        r#"{
            "variety": {"kind": "projective_space", "dim": 3},
            "field": {"kind": "prime", "p": 32003},
            "A": [{"sheaf": "O", "twist": -1}],
            "B": [{"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0},
                  {"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0}],
            "C": [{"sheaf": "O", "twist": 1}],
            "alpha": [["x0"], ["x1"], ["x2"], ["x3"]],
            "beta": [["-x1", "x0", "-x3", "x2"]]
        }"#
    }

    fn null_correlation() -> Monad<PrimeField> {
        MonadFile::from_json(null_correlation_json())
            .unwrap()
            .build(fp())
            .unwrap()
    }

    #[test]
    fn null_correlation_validates() {
        let m = null_correlation();
        let cert = m.validate_complex(20, 42).unwrap();
        assert!(cert.complex_checked);
        assert_eq!(cert.ends_trials, 20);
        assert_eq!(m.rank_of_cohomology().unwrap(), 2);
    }

    #[test]
    fn non_complex_fails() {
        // Same shape with beta = (x0, x1, x2, x3): beta.alpha = sum x_i^2 != 0.
        let json = null_correlation_json().replace(
            r#""beta": [["-x1", "x0", "-x3", "x2"]]"#,
            r#""beta": [["x0", "x1", "x2", "x3"]]"#,
        );
        let m = MonadFile::from_json(&json).unwrap().build(fp()).unwrap();
        assert!(matches!(
            m.validate_complex(5, 1),
            Err(Error::NotAComplex { row: 0, col: 0 })
        ));
    }

    #[test]
    fn degenerate_monad_is_valid() {
        let json = r#"{
            "variety": {"kind": "projective_space", "dim": 3},
            "field": {"kind": "prime", "p": 32003},
            "A": [], "B": [{"sheaf": "O", "twist": 0}], "C": [],
            "alpha": [[]], "beta": []
        }"#;
        let m = MonadFile::from_json(json).unwrap().build(fp()).unwrap();
        m.validate_complex(5, 3).unwrap();
        assert_eq!(m.rank_of_cohomology().unwrap(), 1);
    }

    #[test]
    fn rank_drop_at_ends_detected() {
        let json = null_correlation_json()
            .replace(
                r#""alpha": [["x0"], ["x1"], ["x2"], ["x3"]]"#,
                r#""alpha": [["0"], ["0"], ["0"], ["0"]]"#,
            )
            .replace(
                r#""beta": [["-x1", "x0", "-x3", "x2"]]"#,
                r#""beta": [["0", "0", "0", "0"]]"#,
            );
        let m = MonadFile::from_json(&json).unwrap().build(fp()).unwrap();
        assert!(matches!(
            m.validate_complex(3, 9),
            Err(Error::EndsExactness { end: "A", .. })
        ));
    }

    #[test]
    fn twist_shifts_terms_only() {
        let m = null_correlation();
        let t = m.twist(1);
        assert_eq!(t.a.0[0].twist, 0);
        assert_eq!(t.b.0[0].twist, 1);
        assert_eq!(t.c.0[0].twist, 2);
        let back = t.twist(-1);
        assert_eq!(back.a, m.a);
        t.validate_complex(5, 4).unwrap();
    }

    #[test]
    fn dual_swaps_shape() {
        let m = null_correlation();
        let d = m.dual().unwrap();
        assert_eq!(d.a.0[0], ElementarySheaf::line(-1));
        assert_eq!(d.c.0[0], ElementarySheaf::line(1));
        assert_eq!(d.b.len(), 4);
        d.validate_complex(10, 5).unwrap();
        // Linear (a,b,c) dualizes to (c,b,a) at shape level.
        assert_eq!(d.a.len(), m.c.len());
        assert_eq!(d.c.len(), m.a.len());
    }

    #[test]
    fn euler_polynomial_of_null_correlation() {
        let m = null_correlation();
        let chi = m.euler_polynomial();
        // chi(N(k)) = 4*C(3+k,3) - C(2+k,3) - C(4+k,3).
        for k in -6..=6 {
            let expect = 4 * binom_poly(k, 3) - binom_poly(k - 1, 3) - binom_poly(k + 1, 3);
            assert_eq!(chi.eval(k), expect, "k = {k}");
        }
        assert_eq!(chi.eval(0), 0);
        assert_eq!(chi.eval(-1), -1); // -h^1(N(-1)) = -c = -1
    }

    #[test]
    fn minimalize_cancels_padding() {
        // 0 -> O -> O^{b+1} -> 0 with alpha = (1, 0, ..., 0)^T becomes
        // 0 -> 0 -> O^b -> 0.
        let json = r#"{
            "variety": {"kind": "projective_space", "dim": 3},
            "field": {"kind": "prime", "p": 32003},
            "A": [{"sheaf": "O", "twist": 0}],
            "B": [{"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0},
                  {"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0}],
            "C": [],
            "alpha": [["1"], ["0"], ["0"], ["0"]],
            "beta": []
        }"#;
        let m = MonadFile::from_json(json).unwrap().build(fp()).unwrap();
        m.validate_complex(5, 8).unwrap();
        let min = m.minimalize().unwrap();
        assert!(min.a.is_empty());
        assert_eq!(min.b.len(), 3);
        assert!(min.c.is_empty());
        let again = min.minimalize().unwrap();
        assert_eq!(again.b.len(), 3);
    }

    #[test]
    fn minimalize_keeps_minimal_monads() {
        let m = null_correlation();
        let min = m.minimalize().unwrap();
        assert_eq!((min.a.len(), min.b.len(), min.c.len()), (1, 4, 1));
    }

    #[test]
    fn minimalize_padded_on_both_sides() {
        // Null correlation padded with O in A and B (alpha pad) and with O in
        // B and C (beta pad); both pairs must cancel.
        let json = r#"{
            "variety": {"kind": "projective_space", "dim": 3},
            "field": {"kind": "prime", "p": 32003},
            "A": [{"sheaf": "O", "twist": -1}, {"sheaf": "O", "twist": 0}],
            "B": [{"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0},
                  {"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0},
                  {"sheaf": "O", "twist": 0}, {"sheaf": "O", "twist": 0}],
            "C": [{"sheaf": "O", "twist": 1}, {"sheaf": "O", "twist": 0}],
            "alpha": [["x0", "0"], ["x1", "0"], ["x2", "0"], ["x3", "0"],
                      ["0", "1"], ["0", "0"]],
            "beta": [["-x1", "x0", "-x3", "x2", "0", "0"],
                     ["0", "0", "0", "0", "0", "1"]]
        }"#;
        let m = MonadFile::from_json(json).unwrap().build(fp()).unwrap();
        m.validate_complex(10, 21).unwrap();
        let min = m.minimalize().unwrap();
        assert_eq!((min.a.len(), min.b.len(), min.c.len()), (1, 4, 1));
        min.validate_complex(10, 22).unwrap();
    }

    #[test]
    fn direct_sum_shapes() {
        let m = null_correlation();
        let s = m.direct_sum(&m).unwrap();
        assert_eq!((s.a.len(), s.b.len(), s.c.len()), (2, 8, 2));
        s.validate_complex(5, 33).unwrap();
        assert_eq!(s.rank_of_cohomology().unwrap(), 4);
    }

    #[test]
    fn file_roundtrip_is_identity() {
        let file = MonadFile::from_json(null_correlation_json()).unwrap();
        let m = file.build(fp()).unwrap();
        let p = 32003u64;
        let fmt = move |e: &u64| {
            if *e > p / 2 {
                format!("-{}", p - e)
            } else {
                format!("{e}")
            }
        };
        let out = to_file(&m, FieldSpec::Prime { p }, &fmt).unwrap();
        let reparsed = out.to_json();
        let m2 = MonadFile::from_json(&reparsed).unwrap().build(fp()).unwrap();
        let out2 = to_file(&m2, FieldSpec::Prime { p }, &fmt).unwrap();
        assert_eq!(out.to_json(), out2.to_json());
    }

    #[test]
    fn euler_poly_newton_extension() {
        // Values of C(k+3, 3) on k = 0..4; eval must reproduce the binomial
        // polynomial everywhere, including negative twists.
        let e = EulerPolynomial {
            base: 0,
            values: vec![1, 4, 10, 20, 35],
        };
        for k in -8..=8 {
            assert_eq!(e.eval(k), binom_poly(k, 3), "k = {k}");
        }
    }
}
