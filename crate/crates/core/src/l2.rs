//! Two-term L∞-algebras: a complex ∂: V₁ → V₀ with a skew bracket on V₀, an
//! action of V₀ on V₁, and an alternating l₃: Λ³V₀ → V₁, subject to five
//! identities checked here by exact residuals. A twisted algebra embeds via
//! ∂ = id, l₂ = bracket, action = adjoint connection, l₃ = twist. Morphisms
//! carry a linear part and an alternating correction Λ²E₁ → E₂ and compose
//! into a category.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::{RMatrix, Rational};
use crate::report::{ResidualItem, ResidualReport};
use crate::twisted::TwistedLieAlgebra;

use num_traits::{One, Signed, Zero};

#[derive(Debug, Error)]
pub enum L2Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimError { expected: usize, found: usize },
}

fn unit(dim: usize, i: usize) -> Vec<Rational> {
    let mut v = vec![Rational::zero(); dim];
    v[i] = Rational::one();
    v
}

fn abs_max(v: &[Rational]) -> Rational {
    v.iter()
        .map(|x| x.abs())
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Accumulates the worst residual over all evaluated tuples of one identity.
struct Residual {
    name: &'static str,
    max: Rational,
    detail: Option<String>,
}

impl Residual {
    fn new(name: &'static str) -> Self {
        Residual {
            name,
            max: Rational::zero(),
            detail: None,
        }
    }

    fn record(&mut self, value: &[Rational], detail: impl FnOnce() -> String) {
        let m = abs_max(value);
        if m > self.max {
            self.max = m;
            self.detail = Some(detail());
        }
    }

    fn finish(self) -> ResidualItem {
        if self.max.is_zero() {
            ResidualItem::zero(self.name)
        } else {
            ResidualItem::new(self.name, self.max, self.detail)
        }
    }
}

/// Two-term L∞-algebra with structure maps in coordinates: `del` is the
/// matrix of ∂: V₁ → V₀, `bracket` holds the skew coefficients of
/// [e_a, e_b] on V₀, `action` the coefficients of e_a ▷ f_b on V₁, and `l3`
/// the alternating coefficients of l₃(e_a, e_b, e_c) in V₁.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L2Algebra {
    dim_v1: u8,
    dim_v0: u8,
    del: RMatrix,
    bracket: BTreeMap<(u8, u8, u8), Rational>,
    action: BTreeMap<(u8, u8, u8), Rational>,
    l3: BTreeMap<(u8, u8, u8, u8), Rational>,
}

impl L2Algebra {
    pub fn new(
        dim_v1: u8,
        dim_v0: u8,
        del: RMatrix,
        bracket: impl IntoIterator<Item = ((u8, u8, u8), Rational)>,
        action: impl IntoIterator<Item = ((u8, u8, u8), Rational)>,
        l3: impl IntoIterator<Item = ((u8, u8, u8, u8), Rational)>,
    ) -> Result<Self, L2Error> {
        if del.rows() != dim_v0 as usize {
            return Err(L2Error::DimError {
                expected: dim_v0 as usize,
                found: del.rows(),
            });
        }
        if del.cols() != dim_v1 as usize {
            return Err(L2Error::DimError {
                expected: dim_v1 as usize,
                found: del.cols(),
            });
        }
        let mut b = BTreeMap::new();
        for ((i, j, k), v) in bracket {
            if i >= dim_v0 || j >= dim_v0 || k >= dim_v0 {
                return Err(L2Error::InvalidInput(format!(
                    "bracket index ({i},{j},{k}) out of range"
                )));
            }
            if i == j {
                return Err(L2Error::InvalidInput(
                    "bracket coefficient with repeated arguments".into(),
                ));
            }
            if v.is_zero() {
                continue;
            }
            let (key, v) = if i < j { ((i, j, k), v) } else { ((j, i, k), -v) };
            let slot = b.entry(key).or_insert_with(Rational::zero);
            *slot += v;
            if slot.is_zero() {
                b.remove(&key);
            }
        }
        let mut act = BTreeMap::new();
        for ((a, j, k), v) in action {
            if a >= dim_v0 || j >= dim_v1 || k >= dim_v1 {
                return Err(L2Error::InvalidInput(format!(
                    "action index ({a},{j},{k}) out of range"
                )));
            }
            if v.is_zero() {
                continue;
            }
            let slot = act.entry((a, j, k)).or_insert_with(Rational::zero);
            *slot += v;
            if slot.is_zero() {
                act.remove(&(a, j, k));
            }
        }
        let mut l3m = BTreeMap::new();
        for ((i, j, k, out), v) in l3 {
            if i >= dim_v0 || j >= dim_v0 || k >= dim_v0 || out >= dim_v1 {
                return Err(L2Error::InvalidInput(format!(
                    "l3 index ({i},{j},{k},{out}) out of range"
                )));
            }
            if i == j || j == k || i == k {
                return Err(L2Error::InvalidInput(
                    "l3 coefficient with repeated arguments".into(),
                ));
            }
            if v.is_zero() {
                continue;
            }
            let mut tri = [i, j, k];
            let mut sign = Rational::one();
            // sort the three indices, tracking the permutation parity
            for a in 0..2 {
                for b in 0..2 - a {
                    if tri[b] > tri[b + 1] {
                        tri.swap(b, b + 1);
                        sign = -sign;
                    }
                }
            }
            let key = (tri[0], tri[1], tri[2], out);
            let slot = l3m.entry(key).or_insert_with(Rational::zero);
            *slot += v * sign;
            if slot.is_zero() {
                l3m.remove(&key);
            }
        }
        Ok(L2Algebra {
            dim_v1,
            dim_v0,
            del,
            bracket: b,
            action: act,
            l3: l3m,
        })
    }

    pub fn dim_v1(&self) -> u8 {
        self.dim_v1
    }

    pub fn dim_v0(&self) -> u8 {
        self.dim_v0
    }

    pub fn del(&self) -> &RMatrix {
        &self.del
    }

    pub fn bracket_entries(&self) -> impl Iterator<Item = (&(u8, u8, u8), &Rational)> {
        self.bracket.iter()
    }

    pub fn l3_entries(&self) -> impl Iterator<Item = (&(u8, u8, u8, u8), &Rational)> {
        self.l3.iter()
    }

    /// ∂ applied to a V₁ vector.
    pub fn del_vec(&self, u: &[Rational]) -> Vec<Rational> {
        self.del.mul_vec(u).expect("del shape fixed at construction")
    }

    /// Bilinear extension of the bracket to V₀ vectors.
    pub fn bracket_vec(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim_v0 as usize];
        for (&(a, b, c), v) in &self.bracket {
            let (a, b, c) = (a as usize, b as usize, c as usize);
            let w = &x[a] * &y[b] - &x[b] * &y[a];
            if !w.is_zero() {
                out[c] += v * w;
            }
        }
        out
    }

    /// The action of a V₀ vector on a V₁ vector.
    pub fn act_vec(&self, x: &[Rational], u: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim_v1 as usize];
        for (&(a, j, k), v) in &self.action {
            let w = &x[a as usize] * &u[j as usize];
            if !w.is_zero() {
                out[k as usize] += v * w;
            }
        }
        out
    }

    /// Trilinear alternating extension of l₃ to V₀ vectors.
    pub fn l3_vec(&self, x: &[Rational], y: &[Rational], z: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.dim_v1 as usize];
        for (&(a, b, c, out_idx), v) in &self.l3 {
            let (a, b, c) = (a as usize, b as usize, c as usize);
            // 3x3 determinant of the (x,y,z) rows on columns (a,b,c)
            let det = &x[a] * (&y[b] * &z[c] - &y[c] * &z[b])
                - &x[b] * (&y[a] * &z[c] - &y[c] * &z[a])
                + &x[c] * (&y[a] * &z[b] - &y[b] * &z[a]);
            if !det.is_zero() {
                out[out_idx as usize] += v * det;
            }
        }
        out
    }
}

/// The two-term algebra of a twisted Lie algebra: V₁ = V₀ = the algebra,
/// ∂ = id, the bracket and the adjoint action are the twisted bracket, and
/// l₃ = H. Requires the input to pass its axioms.
pub fn from_twisted(t: &TwistedLieAlgebra) -> Result<L2Algebra, L2Error> {
    let report = t.check_axioms();
    if !report.all_zero() {
        return Err(L2Error::InvalidInput(format!(
            "twisted algebra fails {:?}",
            report.failing()
        )));
    }
    let n = t.dim();
    let bracket: Vec<_> = t.bracket_entries().map(|(k, v)| (*k, v.clone())).collect();
    let mut action = Vec::new();
    for a in 0..n {
        for b in 0..n {
            for out in 0..n {
                let v = t.c_coeff(a, b, out);
                if !v.is_zero() {
                    action.push(((a, b, out), v));
                }
            }
        }
    }
    let l3: Vec<_> = t.twist_entries().map(|(k, v)| (*k, v.clone())).collect();
    L2Algebra::new(n, n, RMatrix::identity(n as usize), bracket, action, l3)
}

/// Exact residuals of the five defining identities, one report item each,
/// evaluated on every basis tuple.
pub fn check_l2_axioms(l: &L2Algebra) -> ResidualReport {
    let v0 = l.dim_v0 as usize;
    let v1 = l.dim_v1 as usize;
    let e0: Vec<Vec<Rational>> = (0..v0).map(|i| unit(v0, i)).collect();
    let f1: Vec<Vec<Rational>> = (0..v1).map(|j| unit(v1, j)).collect();

    // [e_a, ∂f_j] = ∂(e_a ▷ f_j)
    let mut r1 = Residual::new("del-equivariance");
    for a in 0..v0 {
        for j in 0..v1 {
            let lhs = l.bracket_vec(&e0[a], &l.del_vec(&f1[j]));
            let rhs = l.del_vec(&l.act_vec(&e0[a], &f1[j]));
            let diff: Vec<Rational> = lhs.iter().zip(&rhs).map(|(x, y)| x - y).collect();
            r1.record(&diff, || format!("pair (e_{}, f_{})", a + 1, j + 1));
        }
    }

    // (∂f_i) ▷ f_j + (∂f_j) ▷ f_i = 0
    let mut r2 = Residual::new("shifted-symmetry");
    for i in 0..v1 {
        for j in i..v1 {
            let s1 = l.act_vec(&l.del_vec(&f1[i]), &f1[j]);
            let s2 = l.act_vec(&l.del_vec(&f1[j]), &f1[i]);
            let sum: Vec<Rational> = s1.iter().zip(&s2).map(|(x, y)| x + y).collect();
            r2.record(&sum, || format!("pair (f_{}, f_{})", i + 1, j + 1));
        }
    }

    // cyclic [e_a,[e_b,e_c]] = ∂ l₃(e_a,e_b,e_c)
    let mut r3 = Residual::new("jacobi-vs-l3");
    for a in 0..v0 {
        for b in (a + 1)..v0 {
            for c in (b + 1)..v0 {
                let mut cyc = l.bracket_vec(&e0[a], &l.bracket_vec(&e0[b], &e0[c]));
                for (x, y, z) in [(b, c, a), (c, a, b)] {
                    let t = l.bracket_vec(&e0[x], &l.bracket_vec(&e0[y], &e0[z]));
                    for (s, v) in cyc.iter_mut().zip(t) {
                        *s += v;
                    }
                }
                let rhs = l.del_vec(&l.l3_vec(&e0[a], &e0[b], &e0[c]));
                let diff: Vec<Rational> = cyc.iter().zip(&rhs).map(|(x, y)| x - y).collect();
                r3.record(&diff, || format!("triple (e_{}, e_{}, e_{})", a + 1, b + 1, c + 1));
            }
        }
    }

    // e_a ▷ (e_b ▷ f_j) − e_b ▷ (e_a ▷ f_j) − [e_a,e_b] ▷ f_j = l₃(e_a,e_b,∂f_j)
    let mut r4 = Residual::new("curvature-vs-l3");
    for a in 0..v0 {
        for b in (a + 1)..v0 {
            for j in 0..v1 {
                let t1 = l.act_vec(&e0[a], &l.act_vec(&e0[b], &f1[j]));
                let t2 = l.act_vec(&e0[b], &l.act_vec(&e0[a], &f1[j]));
                let t3 = l.act_vec(&l.bracket_vec(&e0[a], &e0[b]), &f1[j]);
                let rhs = l.l3_vec(&e0[a], &e0[b], &l.del_vec(&f1[j]));
                let diff: Vec<Rational> = (0..v1)
                    .map(|k| &t1[k] - &t2[k] - &t3[k] - &rhs[k])
                    .collect();
                r4.record(&diff, || format!("tuple (e_{}, e_{}, f_{})", a + 1, b + 1, j + 1));
            }
        }
    }

    // Σ_i (−1)^i e_{t_i} ▷ l₃(rest) + Σ_{i<j} (−1)^{i+j} l₃([e_{t_i},e_{t_j}], rest) = 0
    let mut r5 = Residual::new("l3-cocycle");
    for a in 0..v0 {
        for b in (a + 1)..v0 {
            for c in (b + 1)..v0 {
                for d in (c + 1)..v0 {
                    let tup = [a, b, c, d];
                    let mut acc = vec![Rational::zero(); v1];
                    for i in 0..4 {
                        let rest: Vec<usize> =
                            (0..4).filter(|&k| k != i).map(|k| tup[k]).collect();
                        let val =
                            l.act_vec(&e0[tup[i]], &l.l3_vec(&e0[rest[0]], &e0[rest[1]], &e0[rest[2]]));
                        let sign = if i % 2 == 0 { 1 } else { -1 };
                        for (s, v) in acc.iter_mut().zip(val) {
                            if sign > 0 {
                                *s += v;
                            } else {
                                *s -= v;
                            }
                        }
                    }
                    for i in 0..4 {
                        for j in (i + 1)..4 {
                            let rest: Vec<usize> = (0..4)
                                .filter(|&k| k != i && k != j)
                                .map(|k| tup[k])
                                .collect();
                            let br = l.bracket_vec(&e0[tup[i]], &e0[tup[j]]);
                            let val = l.l3_vec(&br, &e0[rest[0]], &e0[rest[1]]);
                            let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                            for (s, v) in acc.iter_mut().zip(val) {
                                if sign > 0 {
                                    *s += v;
                                } else {
                                    *s -= v;
                                }
                            }
                        }
                    }
                    r5.record(&acc, || {
                        format!(
                            "tuple (e_{}, e_{}, e_{}, e_{})",
                            a + 1,
                            b + 1,
                            c + 1,
                            d + 1
                        )
                    });
                }
            }
        }
    }

    ResidualReport::new(vec![
        r1.finish(),
        r2.finish(),
        r3.finish(),
        r4.finish(),
        r5.finish(),
    ])
}

/// Morphism of two-term algebras coming from twisted algebras: a linear part
/// Φ₁ and an alternating correction Φ₂: Λ²E₁ → E₂ (coefficients keyed by
/// source pair and target index).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct L2Morphism {
    phi1: RMatrix,
    phi2: BTreeMap<(u8, u8, u8), Rational>,
}

impl L2Morphism {
    pub fn new(
        phi1: RMatrix,
        phi2: impl IntoIterator<Item = ((u8, u8, u8), Rational)>,
    ) -> Result<Self, L2Error> {
        let (n2, n1) = (phi1.rows(), phi1.cols());
        let mut map = BTreeMap::new();
        for ((i, j, k), v) in phi2 {
            if i as usize >= n1 || j as usize >= n1 {
                return Err(L2Error::DimError {
                    expected: n1,
                    found: i.max(j) as usize,
                });
            }
            if k as usize >= n2 {
                return Err(L2Error::DimError {
                    expected: n2,
                    found: k as usize,
                });
            }
            if i == j {
                return Err(L2Error::InvalidInput(
                    "phi2 coefficient with repeated arguments".into(),
                ));
            }
            if v.is_zero() {
                continue;
            }
            let (key, v) = if i < j { ((i, j, k), v) } else { ((j, i, k), -v) };
            let slot = map.entry(key).or_insert_with(Rational::zero);
            *slot += v;
            if slot.is_zero() {
                map.remove(&key);
            }
        }
        Ok(L2Morphism { phi1, phi2: map })
    }

    pub fn identity(n: u8) -> Self {
        L2Morphism {
            phi1: RMatrix::identity(n as usize),
            phi2: BTreeMap::new(),
        }
    }

    pub fn phi1(&self) -> &RMatrix {
        &self.phi1
    }

    pub fn is_strict(&self) -> bool {
        self.phi2.is_empty()
    }

    fn phi1_vec(&self, x: &[Rational]) -> Vec<Rational> {
        self.phi1.mul_vec(x).expect("phi1 shape fixed at construction")
    }

    /// Bilinear alternating extension of Φ₂; output lives in the target.
    fn phi2_vec(&self, x: &[Rational], y: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); self.phi1.rows()];
        for (&(a, b, k), v) in &self.phi2 {
            let (a, b) = (a as usize, b as usize);
            let w = &x[a] * &y[b] - &x[b] * &y[a];
            if !w.is_zero() {
                out[k as usize] += v * w;
            }
        }
        out
    }
}

fn h_multilinear(
    t: &TwistedLieAlgebra,
    x: &[Rational],
    y: &[Rational],
    z: &[Rational],
) -> Vec<Rational> {
    let n = t.dim();
    let mut out = vec![Rational::zero(); n as usize];
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                let (ai, bi, ci) = (a as usize, b as usize, c as usize);
                let det = &x[ai] * (&y[bi] * &z[ci] - &y[ci] * &z[bi])
                    - &x[bi] * (&y[ai] * &z[ci] - &y[ci] * &z[ai])
                    + &x[ci] * (&y[ai] * &z[bi] - &y[bi] * &z[ai]);
                if det.is_zero() {
                    continue;
                }
                for (k, v) in t.h_value(a, b, c).into_iter().enumerate() {
                    if !v.is_zero() {
                        out[k] += v * &det;
                    }
                }
            }
        }
    }
    out
}

/// Exact residuals of the five morphism rules for `m`: source → target.
/// The two ring rules and the anchor rule carry no content over constant
/// coefficients at a point and are reported vacuous.
pub fn check_morphism(
    source: &TwistedLieAlgebra,
    target: &TwistedLieAlgebra,
    m: &L2Morphism,
) -> Result<ResidualReport, L2Error> {
    let n1 = source.dim() as usize;
    let n2 = target.dim() as usize;
    if m.phi1.cols() != n1 {
        return Err(L2Error::DimError {
            expected: n1,
            found: m.phi1.cols(),
        });
    }
    if m.phi1.rows() != n2 {
        return Err(L2Error::DimError {
            expected: n2,
            found: m.phi1.rows(),
        });
    }
    let e: Vec<Vec<Rational>> = (0..n1).map(|i| unit(n1, i)).collect();

    let ring = ResidualItem::vacuous("ring-compat", "constants map by the identity");
    let quad = ResidualItem::vacuous("quadratic-ring-compat", "no nonconstant functions at a point");
    let anchor = ResidualItem::vacuous("anchor-compat", "the anchor vanishes identically");

    // Φ₁[ψ₁,ψ₂]₁ − [Φ₁ψ₁,Φ₁ψ₂]₂ = Φ₂(ψ₁,ψ₂)
    let mut r3 = Residual::new("bracket-compat");
    for i in 0..n1 {
        for j in (i + 1)..n1 {
            let lhs = m.phi1_vec(&source.bracket(i as u8, j as u8));
            let t2 = target.bracket_vec(&m.phi1_vec(&e[i]), &m.phi1_vec(&e[j]));
            let p2 = m.phi2_vec(&e[i], &e[j]);
            let diff: Vec<Rational> = (0..n2).map(|k| &lhs[k] - &t2[k] - &p2[k]).collect();
            r3.record(&diff, || format!("pair (e_{}, e_{})", i + 1, j + 1));
        }
    }

    // Φ₁H₁(ψ₁,ψ₂,ψ₃) − H₂(Φ₁ψ₁,Φ₁ψ₂,Φ₁ψ₃)
    //   = Σ_cyc [ ∇'_{Φ₁ψ₁}Φ₂(ψ₂,ψ₃) − Φ₂([ψ₁,ψ₂]₁,ψ₃) ]
    let mut r5 = Residual::new("twist-compat");
    for i in 0..n1 {
        for j in (i + 1)..n1 {
            for k in (j + 1)..n1 {
                let lhs1 = m.phi1_vec(&source.h_value(i as u8, j as u8, k as u8));
                let imgs = [m.phi1_vec(&e[i]), m.phi1_vec(&e[j]), m.phi1_vec(&e[k])];
                let lhs2 = h_multilinear(target, &imgs[0], &imgs[1], &imgs[2]);
                let mut rhs = vec![Rational::zero(); n2];
                for (p1, p2, p3) in [(i, j, k), (j, k, i), (k, i, j)] {
                    let conn = target.bracket_vec(&m.phi1_vec(&e[p1]), &m.phi2_vec(&e[p2], &e[p3]));
                    let br = source.bracket_vec(&e[p1], &e[p2]);
                    let corr = m.phi2_vec(&br, &e[p3]);
                    for (s, (x, y)) in rhs.iter_mut().zip(conn.iter().zip(&corr)) {
                        *s += x - y;
                    }
                }
                let diff: Vec<Rational> =
                    (0..n2).map(|t| &lhs1[t] - &lhs2[t] - &rhs[t]).collect();
                r5.record(&diff, || {
                    format!("triple (e_{}, e_{}, e_{})", i + 1, j + 1, k + 1)
                });
            }
        }
    }

    Ok(ResidualReport::new(vec![
        ring,
        quad,
        r3.finish(),
        anchor,
        r5.finish(),
    ]))
}

/// Composite of `outer`: E₂ → E₃ after `inner`: E₁ → E₂, with
/// (Φ∘Ψ)₂ = Φ₂∘Λ²Ψ₁ + Φ₁∘Ψ₂.
pub fn compose_morphisms(outer: &L2Morphism, inner: &L2Morphism) -> Result<L2Morphism, L2Error> {
    if outer.phi1.cols() != inner.phi1.rows() {
        return Err(L2Error::DimError {
            expected: outer.phi1.cols(),
            found: inner.phi1.rows(),
        });
    }
    let phi1 = outer
        .phi1
        .mul(&inner.phi1)
        .expect("shapes checked above");
    let n1 = inner.phi1.cols();
    let mut entries = Vec::new();
    for a in 0..n1 {
        for b in (a + 1)..n1 {
            let ea = unit(n1, a);
            let eb = unit(n1, b);
            let via_outer = outer.phi2_vec(&inner.phi1_vec(&ea), &inner.phi1_vec(&eb));
            let via_inner = outer.phi1_vec(&inner.phi2_vec(&ea, &eb));
            for (k, v) in via_outer.iter().zip(&via_inner).enumerate() {
                let s = v.0 + v.1;
                if !s.is_zero() {
                    entries.push(((a as u8, b as u8, k as u8), s));
                }
            }
        }
    }
    L2Morphism::new(phi1, entries)
}
