//! Shared fixtures for the integration suite: the standard small algebras,
//! frozen valid higher-dimensional instances, and seeded random generators.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use num_traits::One;

use num_traits::Zero;
use twistla::linalg::{rat, RMatrix, Rational};
use twistla::twisted::{from_rank3_twist, MultiForm, TwistedLieAlgebra};

pub fn one() -> Rational {
    Rational::one()
}

/// ξ¹∧ξ²⊗X₁ in 0-based indices: the deformation direction whose twist is
/// the volume form valued in X₂.
pub fn golden_b() -> MultiForm {
    let mut b = MultiForm::new(3, 2, 1);
    b.add_term(&[0, 1], &[0], one());
    b
}

pub fn golden_twisted() -> TwistedLieAlgebra {
    from_rank3_twist(&TwistedLieAlgebra::su2(), &golden_b()).unwrap()
}

/// n = 4 instance with nonzero twist satisfying both axioms.
pub fn valid_n4() -> TwistedLieAlgebra {
    TwistedLieAlgebra::new(
        4,
        [
            ((0, 1, 2), one()),
            ((1, 2, 2), one()),
            ((0, 2, 3), one()),
        ],
        [((0, 1, 2, 3), one())],
    )
    .unwrap()
}

/// n = 5 instance with nonzero twist satisfying both axioms.
pub fn valid_n5() -> TwistedLieAlgebra {
    TwistedLieAlgebra::new(
        5,
        [
            ((0, 1, 2), one()),
            ((1, 2, 3), one()),
            ((0, 3, 4), one()),
            ((0, 4, 3), -one()),
        ],
        [((0, 1, 2, 4), one())],
    )
    .unwrap()
}

pub fn rand_rational(rng: &mut ChaCha8Rng) -> Rational {
    rat(rng.gen_range(-3i64..=3), rng.gen_range(1i64..=2))
}

pub fn rand_form(n: u8, p: u8, q: u8, rng: &mut ChaCha8Rng) -> MultiForm {
    let keys = MultiForm::basis_keys(n, p, q);
    let mut out = MultiForm::new(n, p, q);
    if keys.is_empty() {
        return out;
    }
    for _ in 0..rng.gen_range(1..=4) {
        let (f, s) = keys[rng.gen_range(0..keys.len())].clone();
        out.add_term(&f, &s, rand_rational(rng));
    }
    out
}

pub fn rank3_bases() -> Vec<TwistedLieAlgebra> {
    vec![
        TwistedLieAlgebra::su2(),
        TwistedLieAlgebra::sl2(),
        TwistedLieAlgebra::heisenberg(),
        TwistedLieAlgebra::abelian(3),
    ]
}

pub fn rand_valid_rank3(rng: &mut ChaCha8Rng) -> TwistedLieAlgebra {
    let bases = rank3_bases();
    let base = &bases[rng.gen_range(0..bases.len())];
    let b = rand_form(3, 2, 1, rng);
    from_rank3_twist(base, &b).unwrap()
}

/// Random lower unitriangular matrix (determinant 1) and its inverse.
pub fn rand_unitriangular(n: u8, rng: &mut ChaCha8Rng) -> (RMatrix, RMatrix) {
    let mut g = RMatrix::identity(n as usize);
    for i in 0..n as usize {
        for j in 0..i {
            let v = rat(rng.gen_range(-2i64..=2), 1);
            if !v.is_zero() {
                g.set(i, j, v);
            }
        }
    }
    let ginv = twistla::linalg::invert(&g).expect("unitriangular matrices are invertible");
    (g, ginv)
}

/// Conjugated copy of `t`: brackets [x,y]' = g[g⁻¹x, g⁻¹y] and twist
/// H' = g∘H∘Λ³g⁻¹, so that (g, 0) is a strict morphism t → transport(t).
pub fn transport(t: &TwistedLieAlgebra, g: &RMatrix, ginv: &RMatrix) -> TwistedLieAlgebra {
    let n = t.dim();
    let col = |m: &RMatrix, j: u8| -> Vec<Rational> {
        (0..n as usize).map(|i| m.get(i, j as usize)).collect()
    };
    let mut c = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            let w = g
                .mul_vec(&t.bracket_vec(&col(ginv, a), &col(ginv, b)))
                .unwrap();
            for (k, v) in w.into_iter().enumerate() {
                if !v.is_zero() {
                    c.push(((a, b, k as u8), v));
                }
            }
        }
    }
    let mut h = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for cc in (b + 1)..n {
                let (xa, xb, xc) = (col(ginv, a), col(ginv, b), col(ginv, cc));
                let mut acc = vec![Rational::zero(); n as usize];
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            let coef = &xa[i as usize] * &xb[j as usize] * &xc[k as usize];
                            if coef.is_zero() {
                                continue;
                            }
                            for (out, v) in t.h_value(i, j, k).into_iter().enumerate() {
                                if !v.is_zero() {
                                    acc[out] += v * &coef;
                                }
                            }
                        }
                    }
                }
                let w = g.mul_vec(&acc).unwrap();
                for (out, v) in w.into_iter().enumerate() {
                    if !v.is_zero() {
                        h.push(((a, b, cc, out as u8), v));
                    }
                }
            }
        }
    }
    TwistedLieAlgebra::new(n, c, h).unwrap()
}

/// Splittable five-dimensional instance with nonzero twist, found by
/// randomized search over su(2)⊕ℝ² perturbations and frozen: the bracket
/// carries [e5,e1] = −e4, the 4-form and 2-vector reproduce
/// H = −ξ²ξ³ξ⁵⊗X₄ exactly.
pub fn split_n5() -> twistla::pq3::SplitData {
    twistla::pq3::SplitData::new(
        5,
        [
            ((0, 1, 2), one()),
            ((1, 2, 0), one()),
            ((2, 0, 1), one()),
            ((4, 0, 3), -one()),
        ],
        [((1, 2, 3, 4), rat(-1, 2))],
        [((3, 3), rat(2, 1))],
    )
    .unwrap()
}

/// Basis change of split data: brackets conjugate, the 4-form pulls back,
/// the 2-vector pushes forward.
pub fn transport_split(
    s: &twistla::pq3::SplitData,
    g: &RMatrix,
    ginv: &RMatrix,
) -> twistla::pq3::SplitData {
    let n = s.n();
    let mut c = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            // [e_a, e_b]' = g [g⁻¹ e_a, g⁻¹ e_b]
            let ga: Vec<Rational> = (0..n).map(|r| ginv.get(r as usize, a as usize)).collect();
            let gb: Vec<Rational> = (0..n).map(|r| ginv.get(r as usize, b as usize)).collect();
            let mut bracket = vec![Rational::zero(); n as usize];
            for p in 0..n {
                for q in 0..n {
                    let coeff = &ga[p as usize] * &gb[q as usize];
                    if coeff.is_zero() {
                        continue;
                    }
                    for out in 0..n {
                        let v = s.c_coeff(p, q, out);
                        if !v.is_zero() {
                            bracket[out as usize] += v * &coeff;
                        }
                    }
                }
            }
            for out in 0..n {
                let mut v = Rational::zero();
                for mid in 0..n {
                    v += g.get(out as usize, mid as usize) * &bracket[mid as usize];
                }
                if !v.is_zero() {
                    c.push(((a, b, out), v));
                }
            }
        }
    }
    let mut h = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for cc in (b + 1)..n {
                for d in (cc + 1)..n {
                    let mut v = Rational::zero();
                    for ((e, f, gg, hh), hv) in s.h_entries() {
                        // expand the pullback over the alternating entry
                        for perm in permutations4() {
                            let src = [*e, *f, *gg, *hh];
                            let (p, sign) = perm;
                            let coeff = ginv.get(src[p[0]] as usize, a as usize)
                                * ginv.get(src[p[1]] as usize, b as usize)
                                * ginv.get(src[p[2]] as usize, cc as usize)
                                * ginv.get(src[p[3]] as usize, d as usize);
                            if !coeff.is_zero() {
                                v += hv * coeff * rat(sign, 1);
                            }
                        }
                    }
                    if !v.is_zero() {
                        h.push(((a, b, cc, d), v));
                    }
                }
            }
        }
    }
    let mut b = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut v = Rational::zero();
            for ((p, q), bv) in s.b_entries() {
                let mut t = g.get(i as usize, *p as usize) * g.get(j as usize, *q as usize);
                if p != q {
                    t += g.get(i as usize, *q as usize) * g.get(j as usize, *p as usize);
                }
                v += bv * t;
            }
            if !v.is_zero() {
                b.push(((i, j), v));
            }
        }
    }
    twistla::pq3::SplitData::new(n, c, h, b).unwrap()
}

/// All 24 permutations of four slots with their signs.
fn permutations4() -> Vec<([usize; 4], i64)> {
    let mut out = Vec::new();
    let mut items = [0usize, 1, 2, 3];
    permute_rec(&mut items, 0, 1, &mut out);
    out
}

fn permute_rec(items: &mut [usize; 4], k: usize, sign: i64, out: &mut Vec<([usize; 4], i64)>) {
    if k == 4 {
        out.push((*items, sign));
        return;
    }
    for i in k..4 {
        let s = if i == k { sign } else { -sign };
        items.swap(k, i);
        permute_rec(items, k + 1, s, out);
        items.swap(k, i);
    }
}

/// A random valid split instance: an invariant-2-vector family over the
/// standard three-dimensional algebras, abelian data, or a rescaled
/// five-dimensional instance, transported through a random basis change.
pub fn rand_valid_split(rng: &mut ChaCha8Rng) -> twistla::pq3::SplitData {
    use twistla::pq3::SplitData;
    let su2: Vec<((u8, u8, u8), Rational)> = vec![
        ((0, 1, 2), one()),
        ((1, 2, 0), one()),
        ((2, 0, 1), one()),
    ];
    let lambda = rat(rng.gen_range(1..=3), 1);
    let base = match rng.gen_range(0..6u8) {
        0 => SplitData::new(3, su2, [], [((0, 0), lambda.clone()), ((1, 1), lambda.clone()), ((2, 2), lambda)]).unwrap(),
        1 => {
            // invariant 2-vector of the split form: B ∝ e⊙f-pairing + h⊙h
            let c = vec![((0, 1, 2), one()), ((2, 0, 0), rat(2, 1)), ((2, 1, 1), rat(-2, 1))];
            SplitData::new(3, c, [], [((0, 1), lambda.clone() * rat(2, 1)), ((2, 2), lambda)]).unwrap()
        }
        2 => SplitData::new(3, vec![((0, 1, 2), one())], [], [((2, 2), lambda)]).unwrap(),
        3 => {
            let mut h = Vec::new();
            for _ in 0..rng.gen_range(1..=2) {
                h.push(((0, 1, 2, 3), rand_rational(rng)));
            }
            SplitData::new(4, [], h, []).unwrap()
        }
        4 => {
            let mut b = Vec::new();
            for _ in 0..rng.gen_range(1..=3) {
                let i = rng.gen_range(0..4u8);
                let j = rng.gen_range(0..4u8);
                b.push(((i, j), rand_rational(rng)));
            }
            SplitData::new(4, [], [], b).unwrap()
        }
        _ => {
            let s = split_n5();
            let scale = rat(rng.gen_range(1..=4), 1);
            let h: Vec<_> = s
                .h_entries()
                .map(|(k, v)| (*k, v * &scale))
                .collect();
            let recip = rat(1, 1) / scale;
            let b: Vec<_> = s
                .b_entries()
                .map(|(k, v)| (*k, v * &recip))
                .collect();
            let c: Vec<_> = s.c_entries().map(|(k, v)| (*k, v.clone())).collect();
            SplitData::new(5, c, h, b).unwrap()
        }
    };
    let (g, ginv) = rand_unitriangular(base.n(), rng);
    transport_split(&base, &g, &ginv)
}

/// Bump one random coefficient of a valid instance by a nonzero amount.
pub fn rand_perturbed_split(rng: &mut ChaCha8Rng) -> twistla::pq3::SplitData {
    let s = rand_valid_split(rng);
    let n = s.n();
    let mut c: Vec<_> = s.c_entries().map(|(k, v)| (*k, v.clone())).collect();
    let mut h: Vec<_> = s.h_entries().map(|(k, v)| (*k, v.clone())).collect();
    let mut b: Vec<_> = s.b_entries().map(|(k, v)| (*k, v.clone())).collect();
    let mut delta = rand_rational(rng);
    if delta.is_zero() {
        delta = one();
    }
    match rng.gen_range(0..3u8) {
        0 => {
            let a = rng.gen_range(0..n.saturating_sub(1));
            let bq = rng.gen_range((a + 1)..n);
            let out = rng.gen_range(0..n);
            c.push(((a, bq, out), delta));
        }
        1 if n >= 4 => {
            h.push(((0, 1, 2, 3), delta));
        }
        _ => {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            b.push(((i, j), delta));
        }
    }
    twistla::pq3::SplitData::new(n, c, h, b).unwrap()
}
