//! Graded-commutative polynomial algebra with Koszul signs, graded Poisson
//! brackets of arbitrary (negative) degree, and graded vector fields.
//!
//! Generators carry non-negative degrees; parity is degree mod 2, odd
//! generators square to zero. Every reordering sign in the crate funnels
//! through one transposition count in `koszul_merge`, so sign conventions
//! cannot drift apart between operations.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::linalg::{format_rational, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GradedError {
    #[error("operands belong to different graded algebras")]
    AlgebraMismatch,
    #[error("operation requires a homogeneous polynomial")]
    NonHomogeneous,
    #[error("derivation image has degree {found}, expected {expected}")]
    DegreeMismatch { found: i64, expected: i64 },
    #[error("degree slice is infinite: generator {0:?} has degree 0")]
    InfiniteSlice(String),
    #[error("invalid Poisson pairing: {0}")]
    InvalidPairing(String),
}

/// One generator of a graded algebra: a display name and a degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: u32,
}

impl GeneratorSpec {
    pub fn new(name: impl Into<String>, degree: u32) -> Self {
        GeneratorSpec {
            name: name.into(),
            degree,
        }
    }

    pub fn is_odd(&self) -> bool {
        self.degree % 2 == 1
    }
}

/// A free graded-commutative algebra on finitely many generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedAlgebra {
    generators: Vec<GeneratorSpec>,
}

impl GradedAlgebra {
    pub fn new(generators: Vec<GeneratorSpec>) -> Arc<Self> {
        Arc::new(GradedAlgebra { generators })
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn generator(&self, i: usize) -> &GeneratorSpec {
        &self.generators[i]
    }

    pub fn generators(&self) -> &[GeneratorSpec] {
        &self.generators
    }

    pub fn degree_of_monomial(&self, mono: &[u32]) -> u32 {
        mono.iter()
            .zip(&self.generators)
            .map(|(e, g)| e * g.degree)
            .sum()
    }
}

fn same_algebra(a: &Arc<GradedAlgebra>, b: &Arc<GradedAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Multiply two monomials; `None` when an odd generator would repeat.
/// Returns the combined exponent vector and the Koszul sign from moving every
/// odd factor of `b` left past the later odd factors of `a`.
fn koszul_merge(alg: &GradedAlgebra, a: &[u32], b: &[u32]) -> Option<(Vec<u32>, i32)> {
    let n = alg.len();
    // odd factors of `a` strictly after index i, computed from the right
    let mut suffix = vec![0u64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + if alg.generator(i).is_odd() { a[i] as u64 } else { 0 };
    }
    let mut out = vec![0u32; n];
    let mut crossings: u64 = 0;
    for i in 0..n {
        if alg.generator(i).is_odd() {
            if a[i] + b[i] >= 2 {
                return None;
            }
            if b[i] == 1 {
                crossings += suffix[i + 1];
            }
        }
        out[i] = a[i] + b[i];
    }
    let sign = if crossings % 2 == 0 { 1 } else { -1 };
    Some((out, sign))
}

/// A polynomial in a graded-commutative algebra, stored sparsely by monomial.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GPoly {
    algebra: Arc<GradedAlgebra>,
    terms: BTreeMap<Vec<u32>, Rational>,
}

impl GPoly {
    pub fn zero(algebra: &Arc<GradedAlgebra>) -> Self {
        GPoly {
            algebra: Arc::clone(algebra),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(algebra: &Arc<GradedAlgebra>) -> Self {
        Self::constant(algebra, Rational::one())
    }

    pub fn constant(algebra: &Arc<GradedAlgebra>, c: Rational) -> Self {
        let mut p = Self::zero(algebra);
        p.add_term(vec![0; algebra.len()], c);
        p
    }

    pub fn generator(algebra: &Arc<GradedAlgebra>, i: usize) -> Self {
        assert!(i < algebra.len(), "generator index out of range");
        let mut mono = vec![0; algebra.len()];
        mono[i] = 1;
        let mut p = Self::zero(algebra);
        p.add_term(mono, Rational::one());
        p
    }

    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.algebra
    }

    /// Add `c` times the given exponent monomial to the polynomial.
    pub fn add_term(&mut self, mono: Vec<u32>, c: Rational) {
        assert_eq!(mono.len(), self.algebra.len(), "monomial length mismatch");
        if c.is_zero() {
            return;
        }
        debug_assert!(mono
            .iter()
            .enumerate()
            .all(|(i, &e)| !self.algebra.generator(i).is_odd() || e <= 1));
        let entry = self.terms.entry(mono).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            // re-borrow to remove; key must be recomputed
            let dead: Vec<Vec<u32>> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in dead {
                self.terms.remove(&k);
            }
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<u32>, &Rational)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, mono: &[u32]) -> Rational {
        self.terms.get(mono).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> GPoly {
        if c.is_zero() {
            return GPoly::zero(&self.algebra);
        }
        GPoly {
            algebra: Arc::clone(&self.algebra),
            terms: self.terms.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
        }
    }

    pub fn add(&self, other: &GPoly) -> GPoly {
        assert!(same_algebra(&self.algebra, &other.algebra));
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    pub fn sub(&self, other: &GPoly) -> GPoly {
        self.add(&other.scale(&-Rational::one()))
    }

    /// Degree when homogeneous; `None` when terms of different degrees mix.
    /// The zero polynomial counts as homogeneous of degree 0.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let mut deg = None;
        for mono in self.terms.keys() {
            let d = self.algebra.degree_of_monomial(mono);
            match deg {
                None => deg = Some(d),
                Some(prev) if prev != d => return None,
                _ => {}
            }
        }
        Some(deg.unwrap_or(0))
    }

    /// Internal product; panics on algebra mismatch (public callers go
    /// through [`multiply`]).
    pub(crate) fn mul(&self, other: &GPoly) -> GPoly {
        assert!(same_algebra(&self.algebra, &other.algebra));
        let mut out = GPoly::zero(&self.algebra);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                if let Some((mono, sign)) = koszul_merge(&self.algebra, ma, mb) {
                    let mut c = ca * cb;
                    if sign < 0 {
                        c = -c;
                    }
                    out.add_term(mono, c);
                }
            }
        }
        out
    }
}

impl fmt::Display for GPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        for (pos, (mono, c)) in self.terms.iter().enumerate() {
            let mut factors = String::new();
            for (i, &e) in mono.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                if !factors.is_empty() {
                    factors.push(' ');
                }
                factors.push_str(&self.algebra.generator(i).name);
                if e > 1 {
                    factors.push_str(&format!("^{e}"));
                }
            }
            let coeff = format_rational(c);
            let negative = coeff.starts_with('-');
            let mag = coeff.trim_start_matches('-');
            match (pos, negative) {
                (0, false) => {}
                (0, true) => write!(f, "-")?,
                (_, false) => write!(f, " + ")?,
                (_, true) => write!(f, " - ")?,
            }
            if factors.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == "1" {
                write!(f, "{factors}")?;
            } else {
                write!(f, "{mag} {factors}")?;
            }
        }
        Ok(())
    }
}

/// Graded-commutative product of two polynomials.
pub fn multiply(f: &GPoly, g: &GPoly) -> Result<GPoly, GradedError> {
    if !same_algebra(&f.algebra, &g.algebra) {
        return Err(GradedError::AlgebraMismatch);
    }
    Ok(f.mul(g))
}

/// All exponent monomials of the given total degree, in lexicographic order.
/// Errors when a degree-0 generator makes the slice infinite.
pub fn degree_monomials(
    algebra: &Arc<GradedAlgebra>,
    degree: u32,
) -> Result<Vec<Vec<u32>>, GradedError> {
    if let Some(g) = algebra.generators().iter().find(|g| g.degree == 0) {
        return Err(GradedError::InfiniteSlice(g.name.clone()));
    }
    let mut out = Vec::new();
    let mut current = vec![0u32; algebra.len()];
    enumerate_rec(algebra, 0, degree, &mut current, &mut out);
    Ok(out)
}

fn enumerate_rec(
    algebra: &Arc<GradedAlgebra>,
    idx: usize,
    remaining: u32,
    current: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if idx == algebra.len() {
        if remaining == 0 {
            out.push(current.clone());
        }
        return;
    }
    let gen = algebra.generator(idx);
    let max_exp = if gen.is_odd() {
        1.min(remaining / gen.degree.max(1))
    } else {
        remaining / gen.degree
    };
    for e in 0..=max_exp {
        current[idx] = e;
        enumerate_rec(algebra, idx + 1, remaining - e * gen.degree, current, out);
    }
    current[idx] = 0;
}

/// A graded Poisson structure of fixed (negative) degree, given by constant
/// pairings between generators. The table is completed with the graded
/// antisymmetry rule `{v,u} = −(−1)^{ε(u)ε(v)}{u,v}`, `ε(u) = |u| + degree`.
#[derive(Debug, Clone)]
pub struct PoissonSpec {
    algebra: Arc<GradedAlgebra>,
    degree: i64,
    pairings: BTreeMap<(usize, usize), Rational>,
}

impl PoissonSpec {
    pub fn new(
        algebra: &Arc<GradedAlgebra>,
        degree: i64,
        pairs: &[((usize, usize), Rational)],
    ) -> Result<Self, GradedError> {
        let mut pairings = BTreeMap::new();
        let eps = |i: usize| (algebra.generator(i).degree as i64 + degree).rem_euclid(2);
        let put = |map: &mut BTreeMap<(usize, usize), Rational>,
                       key: (usize, usize),
                       val: Rational|
         -> Result<(), GradedError> {
            if let Some(old) = map.get(&key) {
                if *old != val {
                    return Err(GradedError::InvalidPairing(format!(
                        "inconsistent values for generators {:?}",
                        key
                    )));
                }
            } else {
                map.insert(key, val);
            }
            Ok(())
        };
        for ((i, j), v) in pairs {
            let (i, j) = (*i, *j);
            if i >= algebra.len() || j >= algebra.len() {
                return Err(GradedError::InvalidPairing(format!(
                    "generator index out of range: ({i}, {j})"
                )));
            }
            let di = algebra.generator(i).degree as i64;
            let dj = algebra.generator(j).degree as i64;
            if di + dj + degree != 0 {
                return Err(GradedError::InvalidPairing(format!(
                    "pairing ({i}, {j}) has degree {} for a degree-{} bracket",
                    di + dj,
                    degree
                )));
            }
            if v.is_zero() {
                continue;
            }
            let flip = if (eps(i) * eps(j)) % 2 == 0 {
                -v.clone()
            } else {
                v.clone()
            };
            if i == j && flip != *v {
                return Err(GradedError::InvalidPairing(format!(
                    "generator {i} cannot pair with itself at this parity"
                )));
            }
            put(&mut pairings, (i, j), v.clone())?;
            put(&mut pairings, (j, i), flip)?;
        }
        Ok(PoissonSpec {
            algebra: Arc::clone(algebra),
            degree,
            pairings,
        })
    }

    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.algebra
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn pairing(&self, i: usize, j: usize) -> Rational {
        self.pairings
            .get(&(i, j))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    /// Bracket-adjusted parity of a homogeneous element of degree `d`.
    fn eps_of_degree(&self, d: u32) -> i64 {
        (d as i64 + self.degree).rem_euclid(2)
    }
}

/// Graded Poisson bracket `{f, g}`; bilinear over the monomial expansions,
/// graded biderivation built on the generator pairing table.
pub fn poisson_bracket(f: &GPoly, g: &GPoly, spec: &PoissonSpec) -> Result<GPoly, GradedError> {
    if !same_algebra(f.algebra(), spec.algebra()) || !same_algebra(g.algebra(), spec.algebra()) {
        return Err(GradedError::AlgebraMismatch);
    }
    let mut out = GPoly::zero(f.algebra());
    for (ma, ca) in f.terms() {
        for (mb, cb) in g.terms() {
            let part = pb_mono(spec, ma, mb);
            out = out.add(&part.scale(&(ca * cb)));
        }
    }
    Ok(out)
}

/// `{u · m1', m2} = u{m1', m2} + (−1)^{|m1'| ε(m2)} {u, m2} m1'`
/// where `u` is the first generator factor of the monomial `m1`.
fn pb_mono(spec: &PoissonSpec, m1: &[u32], m2: &[u32]) -> GPoly {
    let alg = spec.algebra();
    let Some(u) = m1.iter().position(|&e| e > 0) else {
        return GPoly::zero(alg); // constant in the first slot
    };
    let mut m1_rest = m1.to_vec();
    m1_rest[u] -= 1;

    let gen_u = GPoly::generator(alg, u);
    let term1 = gen_u.mul(&pb_mono(spec, &m1_rest, m2));

    let deg_rest = alg.degree_of_monomial(&m1_rest) as i64;
    let eps_m2 = spec.eps_of_degree(alg.degree_of_monomial(m2));
    let sign = if (deg_rest * eps_m2) % 2 == 0 { 1 } else { -1 };
    let mut rest_poly = GPoly::zero(alg);
    rest_poly.add_term(m1_rest, Rational::one());
    let term2 = pb_gen(spec, u, m2).mul(&rest_poly);
    let term2 = if sign < 0 {
        term2.scale(&-Rational::one())
    } else {
        term2
    };
    term1.add(&term2)
}

/// `{u, v_1 ⋯ v_k} = Σ_j (−1)^{ε(u)·|v_1 ⋯ v_{j−1}|} P(u, v_j) · v_1 ⋯ v̂_j ⋯ v_k`
fn pb_gen(spec: &PoissonSpec, u: usize, m2: &[u32]) -> GPoly {
    let alg = spec.algebra();
    let eps_u = spec.eps_of_degree(alg.generator(u).degree);
    let mut out = GPoly::zero(alg);
    let mut prefix_deg: i64 = 0;
    for v in 0..alg.len() {
        let e = m2[v];
        if e == 0 {
            continue;
        }
        let dv = alg.generator(v).degree as i64;
        let p = spec.pairing(u, v);
        if !p.is_zero() {
            for t in 0..e {
                let sign_exp = eps_u * (prefix_deg + t as i64 * dv);
                let mut reduced = m2.to_vec();
                reduced[v] -= 1;
                let c = if sign_exp % 2 == 0 { p.clone() } else { -p.clone() };
                out.add_term(reduced, c);
            }
        }
        prefix_deg += e as i64 * dv;
    }
    out
}

/// A graded vector field, i.e. a derivation, given by its images on
/// generators. Parity is degree mod 2.
#[derive(Debug, Clone)]
pub struct GVectorField {
    algebra: Arc<GradedAlgebra>,
    degree: i64,
    images: BTreeMap<usize, GPoly>,
}

impl GVectorField {
    pub fn new(
        algebra: &Arc<GradedAlgebra>,
        degree: i64,
        images: BTreeMap<usize, GPoly>,
    ) -> Result<Self, GradedError> {
        for (i, img) in &images {
            if !same_algebra(img.algebra(), algebra) {
                return Err(GradedError::AlgebraMismatch);
            }
            if !img.is_zero() {
                let expect = algebra.generator(*i).degree as i64 + degree;
                match img.homogeneous_degree() {
                    Some(d) if d as i64 == expect => {}
                    Some(d) => {
                        return Err(GradedError::DegreeMismatch {
                            found: d as i64,
                            expected: expect,
                        });
                    }
                    None => return Err(GradedError::NonHomogeneous),
                }
            }
        }
        Ok(GVectorField {
            algebra: Arc::clone(algebra),
            degree,
            images,
        })
    }

    pub fn zero(algebra: &Arc<GradedAlgebra>, degree: i64) -> Self {
        GVectorField {
            algebra: Arc::clone(algebra),
            degree,
            images: BTreeMap::new(),
        }
    }

    pub fn algebra(&self) -> &Arc<GradedAlgebra> {
        &self.algebra
    }

    pub fn degree(&self) -> i64 {
        self.degree
    }

    pub fn image(&self, i: usize) -> GPoly {
        self.images
            .get(&i)
            .cloned()
            .unwrap_or_else(|| GPoly::zero(&self.algebra))
    }

    pub fn is_zero(&self) -> bool {
        self.images.values().all(GPoly::is_zero)
    }

    fn parity(&self) -> i64 {
        self.degree.rem_euclid(2)
    }

    /// Apply the derivation to a polynomial: walk each monomial left to right,
    /// replacing one generator factor at a time with its image, with the sign
    /// `(−1)^{parity(V) · |prefix|}`.
    pub fn apply(&self, f: &GPoly) -> GPoly {
        assert!(same_algebra(&self.algebra, f.algebra()));
        let alg = &self.algebra;
        let mut out = GPoly::zero(alg);
        for (mono, c) in f.terms() {
            let mut prefix = vec![0u32; alg.len()];
            let mut prefix_deg: i64 = 0;
            for v in 0..alg.len() {
                let e = mono[v];
                if e == 0 {
                    continue;
                }
                let dv = alg.generator(v).degree as i64;
                if let Some(img) = self.images.get(&v) {
                    if !img.is_zero() {
                        for t in 0..e {
                            // prefix = gens < v fully, plus t copies of v
                            let mut pre = prefix.clone();
                            pre[v] = t;
                            let mut suf = mono.clone();
                            for w in 0..=v {
                                suf[w] = 0;
                            }
                            suf[v] = e - t - 1;
                            let sign_exp = self.parity() * (prefix_deg + t as i64 * dv);
                            let mut pre_poly = GPoly::zero(alg);
                            pre_poly.add_term(pre, Rational::one());
                            let mut suf_poly = GPoly::zero(alg);
                            suf_poly.add_term(suf, Rational::one());
                            let mut piece = pre_poly.mul(img).mul(&suf_poly);
                            if sign_exp % 2 != 0 {
                                piece = piece.scale(&-Rational::one());
                            }
                            out = out.add(&piece.scale(c));
                        }
                    }
                }
                prefix[v] = e;
                prefix_deg += e as i64 * dv;
            }
        }
        out
    }
}

/// Graded commutator `[V, W] = V∘W − (−1)^{|V||W|} W∘V`, determined by its
/// images on generators.
pub fn vf_commutator(v: &GVectorField, w: &GVectorField) -> Result<GVectorField, GradedError> {
    if !same_algebra(&v.algebra, &w.algebra) {
        return Err(GradedError::AlgebraMismatch);
    }
    let sign = if (v.parity() * w.parity()) % 2 == 0 {
        1
    } else {
        -1
    };
    let mut images = BTreeMap::new();
    for i in 0..v.algebra.len() {
        let gen = GPoly::generator(&v.algebra, i);
        let vw = v.apply(&w.apply(&gen));
        let wv = w.apply(&v.apply(&gen));
        let img = if sign < 0 { vw.add(&wv) } else { vw.sub(&wv) };
        if !img.is_zero() {
            images.insert(i, img);
        }
    }
    Ok(GVectorField {
        algebra: Arc::clone(&v.algebra),
        degree: v.degree + w.degree,
        images,
    })
}

/// Hamiltonian vector field `X_f = {f, ·}` of a homogeneous polynomial.
pub fn hamiltonian_vf(f: &GPoly, spec: &PoissonSpec) -> Result<GVectorField, GradedError> {
    if !same_algebra(f.algebra(), spec.algebra()) {
        return Err(GradedError::AlgebraMismatch);
    }
    let Some(deg) = f.homogeneous_degree() else {
        return Err(GradedError::NonHomogeneous);
    };
    let alg = f.algebra();
    let mut images = BTreeMap::new();
    for i in 0..alg.len() {
        let img = poisson_bracket(f, &GPoly::generator(alg, i), spec)?;
        if !img.is_zero() {
            images.insert(i, img);
        }
    }
    Ok(GVectorField {
        algebra: Arc::clone(alg),
        degree: deg as i64 + spec.degree,
        images,
    })
}
