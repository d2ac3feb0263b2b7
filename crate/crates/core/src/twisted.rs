//! H-twisted Lie algebras over ℚ: a bracket C^c_{ab} whose Jacobi identity
//! is twisted by an alternating (3,1)-tensor H, together with the operators
//! that act on mixed multiforms Λ^p E* ⊗ S^q E — the covariant derivative D
//! (which squares to the twist operator H̃, not to zero), H̃ itself, and the
//! trace contraction. Everything is exact; validity checks return residuals
//! instead of booleans.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::linalg::Rational;
use crate::report::{ResidualItem, ResidualReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TwistError {
    #[error("shape error: {0}")]
    ShapeError(String),
    #[error("Jacobi identity fails: {0}")]
    JacobiFail(String),
    #[error("dimension must be {expected}, got {found}")]
    DimError { expected: usize, found: usize },
}

fn rzero() -> Rational {
    Rational::zero()
}

/// Sort a tuple of indices, tracking the permutation sign.
/// Returns `None` when an index repeats.
fn sort_form(t: &[u8]) -> Option<(Vec<u8>, i32)> {
    let mut v = t.to_vec();
    let mut sign = 1;
    for i in 0..v.len() {
        for j in 0..v.len().saturating_sub(1 + i) {
            if v[j] > v[j + 1] {
                v.swap(j, j + 1);
                sign = -sign;
            }
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

/// Strictly increasing k-tuples from 0..n.
pub(crate) fn combinations(n: u8, k: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k as usize);
    fn rec(n: u8, k: u8, start: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == k as usize {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, k, v + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

/// Weakly increasing k-tuples from 0..n.
pub(crate) fn multisets(n: u8, k: u8) -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k as usize);
    fn rec(n: u8, k: u8, start: u8, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == k as usize {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(n, k, v, cur, out);
            cur.pop();
        }
    }
    if n == 0 && k > 0 {
        return out;
    }
    rec(n, k, 0, &mut cur, &mut out);
    out
}

/// A sparse element of Λ^p E* ⊗ S^q E over an n-dimensional space: keys are
/// (strictly increasing form tuple, weakly increasing vector tuple).
/// When p exceeds n the form is necessarily zero and stays empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiForm {
    n: u8,
    p: u8,
    q: u8,
    coeffs: BTreeMap<(Vec<u8>, Vec<u8>), Rational>,
}

impl MultiForm {
    pub fn new(n: u8, p: u8, q: u8) -> Self {
        MultiForm {
            n,
            p,
            q,
            coeffs: BTreeMap::new(),
        }
    }

    pub fn n(&self) -> u8 {
        self.n
    }

    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    /// Add `c · ξ^{f₁}∧…∧ξ^{f_p} ⊗ e_{s₁}⋯e_{s_q}`; the form tuple is
    /// brought to sorted order with its sign, terms with a repeated form
    /// index vanish.
    pub fn add_term(&mut self, ftup: &[u8], stup: &[u8], c: Rational) {
        assert_eq!(ftup.len(), self.p as usize, "form tuple length mismatch");
        assert_eq!(stup.len(), self.q as usize, "vector tuple length mismatch");
        assert!(
            ftup.iter().chain(stup).all(|&i| i < self.n),
            "index out of range"
        );
        if c.is_zero() {
            return;
        }
        let Some((fkey, sign)) = sort_form(ftup) else {
            return;
        };
        let mut skey = stup.to_vec();
        skey.sort_unstable();
        let val = if sign < 0 { -c } else { c };
        let entry = self.coeffs.entry((fkey, skey)).or_insert_with(rzero);
        *entry += val;
        if entry.is_zero() {
            self.coeffs.retain(|_, v| !v.is_zero());
        }
    }

    /// Signed coefficient of a possibly unsorted form tuple.
    pub fn coeff(&self, ftup: &[u8], stup: &[u8]) -> Rational {
        let Some((fkey, sign)) = sort_form(ftup) else {
            return rzero();
        };
        let mut skey = stup.to_vec();
        skey.sort_unstable();
        match self.coeffs.get(&(fkey, skey)) {
            Some(v) if sign < 0 => -v.clone(),
            Some(v) => v.clone(),
            None => rzero(),
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&(Vec<u8>, Vec<u8>), &Rational)> {
        self.coeffs.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn scale(&self, c: &Rational) -> MultiForm {
        if c.is_zero() {
            return MultiForm::new(self.n, self.p, self.q);
        }
        MultiForm {
            n: self.n,
            p: self.p,
            q: self.q,
            coeffs: self
                .coeffs
                .iter()
                .map(|(k, v)| (k.clone(), v * c))
                .collect(),
        }
    }

    pub fn add(&self, other: &MultiForm) -> MultiForm {
        assert_eq!((self.n, self.p, self.q), (other.n, other.p, other.q));
        let mut out = self.clone();
        for ((f, s), v) in &other.coeffs {
            out.add_term(f, s, v.clone());
        }
        out
    }

    pub fn sub(&self, other: &MultiForm) -> MultiForm {
        self.add(&other.scale(&Rational::from_integer((-1).into())))
    }

    /// Wedge on the form part, symmetric product on the vector part.
    pub fn wedge(&self, other: &MultiForm) -> MultiForm {
        assert_eq!(self.n, other.n, "wedge across different dimensions");
        let mut out = MultiForm::new(self.n, self.p + other.p, self.q + other.q);
        for ((f1, s1), c1) in &self.coeffs {
            for ((f2, s2), c2) in &other.coeffs {
                let mut f = f1.clone();
                f.extend_from_slice(f2);
                let mut s = s1.clone();
                s.extend_from_slice(s2);
                out.add_term(&f, &s, c1 * c2);
            }
        }
        out
    }

    /// Largest absolute value among the coefficients (0 for the zero form).
    pub fn max_abs(&self) -> Rational {
        let mut best = rzero();
        for v in self.coeffs.values() {
            let a = v.abs();
            if a > best {
                best = a;
            }
        }
        best
    }

    /// The canonical basis keys of the (p,q) slice, in lexicographic order.
    pub fn basis_keys(n: u8, p: u8, q: u8) -> Vec<(Vec<u8>, Vec<u8>)> {
        let mut out = Vec::new();
        for f in combinations(n, p) {
            for s in multisets(n, q) {
                out.push((f.clone(), s));
            }
        }
        out
    }

    /// Dimension of the full (p,q) slice.
    pub fn slice_dim(n: u8, p: u8, q: u8) -> usize {
        Self::basis_keys(n, p, q).len()
    }
}

impl fmt::Display for MultiForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for ((ftup, stup), c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}·", crate::linalg::format_rational(c))?;
            if ftup.is_empty() && stup.is_empty() {
                write!(f, "1")?;
            }
            for (k, a) in ftup.iter().enumerate() {
                if k > 0 {
                    write!(f, "∧")?;
                }
                write!(f, "ξ{}", a + 1)?;
            }
            if !ftup.is_empty() && !stup.is_empty() {
                write!(f, "⊗")?;
            }
            for (k, a) in stup.iter().enumerate() {
                if k > 0 {
                    write!(f, "·")?;
                }
                write!(f, "X{}", a + 1)?;
            }
        }
        Ok(())
    }
}

/// An n-dimensional algebra with antisymmetric bracket coefficients C^c_{ab}
/// and an alternating twist H^d_{abc} standing in for the Jacobi defect.
/// All indices are 0-based; sparse maps hold only canonical keys (a<b,
/// resp. a<b<c).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwistedLieAlgebra {
    n: u8,
    c: BTreeMap<(u8, u8, u8), Rational>,
    h: BTreeMap<(u8, u8, u8, u8), Rational>,
}

impl TwistedLieAlgebra {
    /// Build from sparse coefficients: `c` entries ((a, b, out), value) give
    /// the e_out component of [e_a, e_b]; `h` entries ((a, b, c, out), value)
    /// the e_out component of H(e_a, e_b, e_c). Non-canonical index orders
    /// are folded in with their permutation sign.
    pub fn new(
        n: u8,
        c: impl IntoIterator<Item = ((u8, u8, u8), Rational)>,
        h: impl IntoIterator<Item = ((u8, u8, u8, u8), Rational)>,
    ) -> Result<Self, TwistError> {
        let mut cmap: BTreeMap<(u8, u8, u8), Rational> = BTreeMap::new();
        for ((a, b, out), v) in c {
            if a >= n || b >= n || out >= n {
                return Err(TwistError::ShapeError(format!(
                    "bracket index out of range for n={n}: ({a},{b})->{out}"
                )));
            }
            if a == b {
                return Err(TwistError::ShapeError(format!(
                    "bracket coefficient with repeated index ({a},{a})"
                )));
            }
            let (key, val) = if a < b { ((a, b, out), v) } else { ((b, a, out), -v) };
            let e = cmap.entry(key).or_insert_with(rzero);
            *e += val;
        }
        cmap.retain(|_, v| !v.is_zero());

        let mut hmap: BTreeMap<(u8, u8, u8, u8), Rational> = BTreeMap::new();
        for ((a, b, c, out), v) in h {
            if a >= n || b >= n || c >= n || out >= n {
                return Err(TwistError::ShapeError(format!(
                    "twist index out of range for n={n}: ({a},{b},{c})->{out}"
                )));
            }
            let Some((key, sign)) = sort_form(&[a, b, c]) else {
                return Err(TwistError::ShapeError(format!(
                    "twist coefficient with repeated index ({a},{b},{c})"
                )));
            };
            let val = if sign < 0 { -v } else { v };
            let e = hmap.entry((key[0], key[1], key[2], out)).or_insert_with(rzero);
            *e += val;
        }
        hmap.retain(|_, v| !v.is_zero());

        Ok(TwistedLieAlgebra { n, c: cmap, h: hmap })
    }

    /// so(3) ≅ su(2): [e_a, e_b] = Σ_c ε_{abc} e_c.
    pub fn su2() -> Self {
        let one = Rational::from_integer(1.into());
        Self::new(
            3,
            [
                ((0, 1, 2), one.clone()),
                ((1, 2, 0), one.clone()),
                ((2, 0, 1), one),
            ],
            [],
        )
        .expect("static data")
    }

    /// sl(2): [e₁,e₂] = e₃, [e₃,e₁] = 2e₁, [e₃,e₂] = −2e₂.
    pub fn sl2() -> Self {
        let one = Rational::from_integer(1.into());
        let two = Rational::from_integer(2.into());
        Self::new(
            3,
            [
                ((0, 1, 2), one),
                ((2, 0, 0), two.clone()),
                ((2, 1, 1), -two),
            ],
            [],
        )
        .expect("static data")
    }

    /// Heisenberg: [e₁,e₂] = e₃ and everything else zero.
    pub fn heisenberg() -> Self {
        Self::new(3, [((0, 1, 2), Rational::from_integer(1.into()))], [])
            .expect("static data")
    }

    /// Abelian algebra of the given dimension.
    pub fn abelian(n: u8) -> Self {
        Self::new(n, [], []).expect("static data")
    }

    pub fn dim(&self) -> u8 {
        self.n
    }

    pub fn bracket_entries(&self) -> impl Iterator<Item = (&(u8, u8, u8), &Rational)> {
        self.c.iter()
    }

    pub fn twist_entries(&self) -> impl Iterator<Item = (&(u8, u8, u8, u8), &Rational)> {
        self.h.iter()
    }

    pub fn is_untwisted(&self) -> bool {
        self.h.is_empty()
    }

    /// Signed structure constant C^out_{ab}.
    pub fn c_coeff(&self, a: u8, b: u8, out: u8) -> Rational {
        if a == b {
            return rzero();
        }
        if a < b {
            self.c.get(&(a, b, out)).cloned().unwrap_or_else(rzero)
        } else {
            -self.c.get(&(b, a, out)).cloned().unwrap_or_else(rzero)
        }
    }

    /// Signed twist coefficient H^out_{abc}.
    pub fn h_coeff(&self, a: u8, b: u8, c: u8, out: u8) -> Rational {
        let Some((key, sign)) = sort_form(&[a, b, c]) else {
            return rzero();
        };
        let v = self
            .h
            .get(&(key[0], key[1], key[2], out))
            .cloned()
            .unwrap_or_else(rzero);
        if sign < 0 {
            -v
        } else {
            v
        }
    }

    /// [e_a, e_b] as a coefficient vector.
    pub fn bracket(&self, a: u8, b: u8) -> Vec<Rational> {
        (0..self.n).map(|out| self.c_coeff(a, b, out)).collect()
    }

    /// Bracket of two coefficient vectors.
    pub fn bracket_vec(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        assert_eq!(x.len(), self.n as usize);
        assert_eq!(y.len(), self.n as usize);
        let mut v = vec![rzero(); self.n as usize];
        for (&(a, b, out), c) in &self.c {
            let (a, b, out) = (a as usize, b as usize, out as usize);
            // canonical key covers both orders
            let w = &x[a] * &y[b] - &x[b] * &y[a];
            if !w.is_zero() {
                v[out] += w * c;
            }
        }
        v
    }

    /// H(e_a, e_b, e_c) as a coefficient vector.
    pub fn h_value(&self, a: u8, b: u8, c: u8) -> Vec<Rational> {
        (0..self.n).map(|out| self.h_coeff(a, b, c, out)).collect()
    }

    /// The twist as a (3,1) multiform.
    pub fn twist_form(&self) -> MultiForm {
        let mut out = MultiForm::new(self.n, 3, 1);
        for (&(a, b, c, d), v) in &self.h {
            out.add_term(&[a, b, c], &[d], v.clone());
        }
        out
    }

    /// Adjoint connection: ∇_{e_a} ψ = [e_a, ψ].
    pub fn connection(&self, a: u8, psi: &[Rational]) -> Vec<Rational> {
        assert!(a < self.n);
        let mut ea = vec![rzero(); self.n as usize];
        ea[a as usize] = Rational::from_integer(1.into());
        self.bracket_vec(&ea, psi)
    }

    /// Jacobi defect [e_a,[e_b,e_c]] − [[e_a,e_b],e_c] − [e_b,[e_a,e_c]]
    /// as a coefficient vector (alternating in a, b, c).
    pub fn jacobiator(&self, a: u8, b: u8, c: u8) -> Vec<Rational> {
        let mut ea = vec![rzero(); self.n as usize];
        ea[a as usize] = Rational::from_integer(1.into());
        let mut eb = vec![rzero(); self.n as usize];
        eb[b as usize] = Rational::from_integer(1.into());
        let mut ec = vec![rzero(); self.n as usize];
        ec[c as usize] = Rational::from_integer(1.into());
        let t1 = self.bracket_vec(&ea, &self.bracket(b, c));
        let t2 = self.bracket_vec(&self.bracket(a, b), &ec);
        let t3 = self.bracket_vec(&eb, &self.bracket(a, c));
        (0..self.n as usize)
            .map(|i| &t1[i] - &t2[i] - &t3[i])
            .collect()
    }

    /// Residuals of the two defining axioms: the twisted Jacobi identity
    /// (bracket Jacobiator equals H on every basis triple) and closure of
    /// the twist (D H = 0 as a (4,1) form; trivial below dimension 4).
    pub fn check_axioms(&self) -> ResidualReport {
        let mut report = ResidualReport::empty();

        let mut worst = rzero();
        let mut detail = None;
        for tri in combinations(self.n, 3) {
            let (a, b, c) = (tri[0], tri[1], tri[2]);
            let jac = self.jacobiator(a, b, c);
            let hv = self.h_value(a, b, c);
            for (out, (j, h)) in jac.iter().zip(&hv).enumerate() {
                let d = (j - h).abs();
                if d > worst {
                    worst = d;
                    detail = Some(format!(
                        "triple (e{},e{},e{}) component {}",
                        a + 1,
                        b + 1,
                        c + 1,
                        out + 1
                    ));
                }
            }
        }
        report.push(ResidualItem::new("jacobi-defect", worst, detail));

        if self.n < 4 {
            report.push(ResidualItem::zero("twist-closure"));
        } else {
            let dh = self
                .exterior_derivative(&self.twist_form())
                .expect("twist form has p+1 = 4 ≤ n");
            let detail = dh
                .terms()
                .max_by_key(|(_, v)| v.abs())
                .map(|((f, s), _)| format!("at ({f:?}, {s:?})"));
            report.push(ResidualItem::new("twist-closure", dh.max_abs(), detail));
        }
        report
    }

    /// Exterior covariant derivative D: (p,q) → (p+1,q).
    ///
    /// ⟨DΨ, ψ₀∧…∧ψ_p⟩ = Σ_i (−1)^i ∇_{ψ_i}⟨Ψ, …ψ̂_i…⟩
    ///                + Σ_{i<j} (−1)^{i+j} ⟨Ψ, [ψ_i,ψ_j]∧…ψ̂_i…ψ̂_j…⟩
    /// with ∇ acting on the symmetric vector part as a derivation; for q = 0
    /// the ∇ term is absent (scalar values over a single point).
    pub fn exterior_derivative(&self, psi: &MultiForm) -> Result<MultiForm, TwistError> {
        if psi.n != self.n {
            return Err(TwistError::ShapeError(format!(
                "form lives in dimension {}, algebra in {}",
                psi.n, self.n
            )));
        }
        let (p, q) = (psi.p, psi.q);
        if p as usize + 1 > self.n as usize {
            return Err(TwistError::ShapeError(format!(
                "cannot raise form degree {} beyond the dimension {}",
                p, self.n
            )));
        }
        let mut out = MultiForm::new(self.n, p + 1, q);
        let sym_tuples = multisets(self.n, q);
        for ftup in combinations(self.n, p + 1) {
            // connection term: Σ_i (−1)^i ∇_{ψ_i} applied to the S^q value
            for i in 0..ftup.len() {
                let mut rest = ftup.clone();
                let xi = rest.remove(i);
                for stup in &sym_tuples {
                    let c0 = psi.coeff(&rest, stup);
                    if c0.is_zero() {
                        continue;
                    }
                    let sign = if i % 2 == 0 { 1 } else { -1 };
                    for m in 0..stup.len() {
                        let w = self.bracket(xi, stup[m]);
                        for (tgt, wc) in w.iter().enumerate() {
                            if wc.is_zero() {
                                continue;
                            }
                            let mut news = stup.clone();
                            news[m] = tgt as u8;
                            let val = &c0 * wc;
                            out.add_term(
                                &ftup,
                                &news,
                                if sign < 0 { -val } else { val },
                            );
                        }
                    }
                }
            }
            // contraction term: Σ_{i<j} (−1)^{i+j} Ψ([ψ_i,ψ_j] ∧ rest)
            for i in 0..ftup.len() {
                for j in (i + 1)..ftup.len() {
                    let w = self.bracket(ftup[i], ftup[j]);
                    let rest: Vec<u8> = ftup
                        .iter()
                        .enumerate()
                        .filter(|(k, _)| *k != i && *k != j)
                        .map(|(_, &x)| x)
                        .collect();
                    let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                    for (tgt, wc) in w.iter().enumerate() {
                        if wc.is_zero() {
                            continue;
                        }
                        let mut contracted = Vec::with_capacity(rest.len() + 1);
                        contracted.push(tgt as u8);
                        contracted.extend_from_slice(&rest);
                        for stup in &sym_tuples {
                            let c0 = psi.coeff(&contracted, stup);
                            if c0.is_zero() {
                                continue;
                            }
                            let val = c0 * wc;
                            out.add_term(&ftup, stup, if sign < 0 { -val } else { val });
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// The twist operator H̃: (p,q) → (p+2,q), the derivation-style extension
    /// of H̃(α) = −α∘H on form factors and ⟨H̃(φ),ψ₁∧ψ₂⟩ = H(φ,ψ₁,ψ₂) on
    /// vector factors. Zero whenever p + 2 exceeds the dimension.
    pub fn h_tilde(&self, psi: &MultiForm) -> MultiForm {
        assert_eq!(psi.n, self.n, "form and algebra dimensions differ");
        let mut out = MultiForm::new(self.n, psi.p + 2, psi.q);
        let triples = combinations(self.n, 3);
        let pairs = combinations(self.n, 2);
        for ((ftup, stup), c) in &psi.coeffs {
            // form factors: Σ_i (−1)^i H̃(ξ^{f_i}) ∧ (rest), H̃(α) = −α∘H
            for i in 0..ftup.len() {
                let mut rest = ftup.clone();
                let fi = rest.remove(i);
                let isign = if i % 2 == 0 { 1 } else { -1 };
                for tri in &triples {
                    let hv = -self.h_coeff(tri[0], tri[1], tri[2], fi);
                    if hv.is_zero() {
                        continue;
                    }
                    let mut key = tri.clone();
                    key.extend_from_slice(&rest);
                    let val = c * &hv;
                    out.add_term(&key, stup, if isign < 0 { -val } else { val });
                }
            }
            // vector factors: (ξ's) ∧ H̃(e_{s_j}) · (rest of the product)
            for j in 0..stup.len() {
                let mut rest_s = stup.clone();
                let sj = rest_s.remove(j);
                for pair in &pairs {
                    let hv = self.h_value(sj, pair[0], pair[1]);
                    for (d, hc) in hv.iter().enumerate() {
                        if hc.is_zero() {
                            continue;
                        }
                        let mut key = ftup.clone();
                        key.extend_from_slice(pair);
                        let mut news = rest_s.clone();
                        news.push(d as u8);
                        out.add_term(&key, &news, c * hc);
                    }
                }
            }
        }
        out
    }
}

/// Trace contraction tr: (p,q) → (p−1,q−1),
/// tr(α₁∧…∧α_p ⊗ ψ₁⋯ψ_q) = Σ_{i,j} (−1)^{i−1} ⟨α_i, ψ_j⟩ (both removed),
/// repeated vector factors counted with multiplicity.
pub fn trace(psi: &MultiForm) -> Result<MultiForm, TwistError> {
    if psi.p < 1 || psi.q < 1 {
        return Err(TwistError::ShapeError(format!(
            "trace needs p ≥ 1 and q ≥ 1, got ({}, {})",
            psi.p, psi.q
        )));
    }
    let mut out = MultiForm::new(psi.n, psi.p - 1, psi.q - 1);
    for ((ftup, stup), c) in &psi.coeffs {
        for i in 0..ftup.len() {
            for j in 0..stup.len() {
                if ftup[i] != stup[j] {
                    continue;
                }
                let mut f = ftup.clone();
                f.remove(i);
                let mut s = stup.clone();
                s.remove(j);
                let val = if i % 2 == 0 { c.clone() } else { -c.clone() };
                out.add_term(&f, &s, val);
            }
        }
    }
    Ok(out)
}

/// Deform a 3-dimensional Lie algebra by a (2,1)-form B: the bracket becomes
/// [φ,ψ] + B(φ,ψ) and the twist is the Jacobiator of the deformed bracket,
/// which for the classical rank-3 construction coincides with D₀B. The
/// result always satisfies both axioms (closure of the Jacobiator twist is
/// automatic).
pub fn from_rank3_twist(
    base: &TwistedLieAlgebra,
    b: &MultiForm,
) -> Result<TwistedLieAlgebra, TwistError> {
    if base.n != 3 {
        return Err(TwistError::DimError {
            expected: 3,
            found: base.n as usize,
        });
    }
    if (b.n, b.p, b.q) != (3, 2, 1) {
        return Err(TwistError::ShapeError(format!(
            "deformation must be a (2,1)-form in dimension 3, got ({}, {}) in dimension {}",
            b.p, b.q, b.n
        )));
    }
    deformed_algebra(base, b)
}

fn require_lie(base: &TwistedLieAlgebra) -> Result<(), TwistError> {
    if !base.is_untwisted() {
        return Err(TwistError::JacobiFail(
            "base algebra must carry zero twist".into(),
        ));
    }
    for tri in combinations(base.n, 3) {
        let jac = base.jacobiator(tri[0], tri[1], tri[2]);
        if jac.iter().any(|v| !v.is_zero()) {
            return Err(TwistError::JacobiFail(format!(
                "base bracket fails Jacobi on (e{},e{},e{})",
                tri[0] + 1,
                tri[1] + 1,
                tri[2] + 1
            )));
        }
    }
    Ok(())
}

fn deformed_algebra(
    base: &TwistedLieAlgebra,
    b: &MultiForm,
) -> Result<TwistedLieAlgebra, TwistError> {
    require_lie(base)?;
    let n = base.n;
    let mut c_entries: Vec<((u8, u8, u8), Rational)> = base
        .c
        .iter()
        .map(|(k, v)| (*k, v.clone()))
        .collect();
    for ((f, s), v) in b.terms() {
        c_entries.push(((f[0], f[1], s[0]), v.clone()));
    }
    let deformed = TwistedLieAlgebra::new(n, c_entries, [])?;
    let mut h_entries = Vec::new();
    for tri in combinations(n, 3) {
        let jac = deformed.jacobiator(tri[0], tri[1], tri[2]);
        for (out, v) in jac.into_iter().enumerate() {
            if !v.is_zero() {
                h_entries.push(((tri[0], tri[1], tri[2], out as u8), v));
            }
        }
    }
    TwistedLieAlgebra::new(
        n,
        deformed.c.iter().map(|(k, v)| (*k, v.clone())),
        h_entries,
    )
}

/// For a Lie algebra L and a (2,1)-form B, return H = D₀B together with the
/// closure residual of the candidate twisted algebra (bracket C + B, twist
/// H): the derivative of H under the deformed bracket minus the derivative
/// under the base bracket, i.e. the B-extension of D applied to D₀B. In
/// dimension 3 the residual lives in Λ⁴ of a 3-dimensional space and is
/// identically zero.
///
/// A zero residual is necessary but not sufficient for the candidate to
/// satisfy the twisted Jacobi axiom: the quadratic part of the Jacobiator of
/// B is invisible to it (see the tests for a 4-dimensional counterexample).
pub fn twist_residual(
    base: &TwistedLieAlgebra,
    b: &MultiForm,
) -> Result<(MultiForm, MultiForm), TwistError> {
    require_lie(base)?;
    if (b.n, b.p, b.q) != (base.n, 2, 1) {
        return Err(TwistError::ShapeError(format!(
            "deformation must be a (2,1)-form in dimension {}, got ({}, {}) in dimension {}",
            base.n, b.p, b.q, b.n
        )));
    }
    let h = base.exterior_derivative(b)?;
    if base.n < 4 {
        return Ok((h, MultiForm::new(base.n, 4, 1)));
    }
    let mut c_entries: Vec<((u8, u8, u8), Rational)> = base
        .c
        .iter()
        .map(|(k, v)| (*k, v.clone()))
        .collect();
    for ((f, s), v) in b.terms() {
        c_entries.push(((f[0], f[1], s[0]), v.clone()));
    }
    let deformed = TwistedLieAlgebra::new(base.n, c_entries, [])?;
    let residual = deformed
        .exterior_derivative(&h)?
        .sub(&base.exterior_derivative(&h)?);
    Ok((h, residual))
}
