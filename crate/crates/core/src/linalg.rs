//! Exact linear algebra over ℚ: sparse matrices, fraction-free elimination,
//! kernels, and cohomology dimensions.
//!
//! Elimination clears each row to integers and runs one-step fraction-free
//! (Bareiss) reduction over `BigInt`, with partial pivoting on the magnitude
//! of the (integer) numerators and deterministic lowest-row tie-breaks, so
//! identical inputs always produce identical bases.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational scalar used everywhere in this crate.
pub type Rational = num_rational::BigRational;

/// Shorthand for a small rational constant.
pub fn rat(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix shapes are incompatible: {0}")]
    ShapeMismatch(String),
    #[error("differentials do not compose to zero: nonzero entry at ({row}, {col})")]
    CompositionNonzero { row: usize, col: usize },
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse {input:?} as a rational: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: String,
}

/// Parse `"p"` or `"p/q"` with optional sign; `q` must be nonzero.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason: &str| ParseRationalError {
        input: s.to_string(),
        reason: reason.to_string(),
    };
    let t = s.trim();
    let (num_s, den_s) = match t.split_once('/') {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (t, "1"),
    };
    let numer: BigInt = num_s.parse().map_err(|_| err("bad numerator"))?;
    let denom: BigInt = den_s.parse().map_err(|_| err("bad denominator"))?;
    if denom.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(numer, denom))
}

/// Render as `"p"` when the denominator is 1, else `"p/q"`.
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Sparse rational matrix; absent entries are zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RMatrix {
    rows: usize,
    cols: usize,
    entries: BTreeMap<(usize, usize), Rational>,
}

impl RMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        RMatrix {
            rows,
            cols,
            entries: BTreeMap::new(),
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = RMatrix::new(n, n);
        for i in 0..n {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = RMatrix::new(r, c);
        for (i, row) in rows.into_iter().enumerate() {
            assert_eq!(row.len(), c, "ragged row {i}");
            for (j, v) in row.into_iter().enumerate() {
                m.set(i, j, v);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn set(&mut self, row: usize, col: usize, value: Rational) {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        if value.is_zero() {
            self.entries.remove(&(row, col));
        } else {
            self.entries.insert((row, col), value);
        }
    }

    pub fn get(&self, row: usize, col: usize) -> Rational {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.entries
            .get(&(row, col))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &Rational)> {
        self.entries.iter().map(|(&(r, c), v)| (r, c, v))
    }

    pub fn transpose(&self) -> RMatrix {
        let mut m = RMatrix::new(self.cols, self.rows);
        for (r, c, v) in self.iter() {
            m.set(c, r, v.clone());
        }
        m
    }

    pub fn mul(&self, other: &RMatrix) -> Result<RMatrix, LinalgError> {
        if self.cols != other.rows {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = RMatrix::new(self.rows, other.cols);
        let mut acc: BTreeMap<(usize, usize), Rational> = BTreeMap::new();
        for (i, k, v) in self.iter() {
            for (&(_, j), w) in other.entries.range((k, 0)..(k + 1, 0)) {
                let e = acc.entry((i, j)).or_insert_with(Rational::zero);
                *e += v * w;
            }
        }
        for ((i, j), v) in acc {
            out.set(i, j, v);
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[Rational]) -> Result<Vec<Rational>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::ShapeMismatch(format!(
                "{}x{} * vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        let mut out = vec![Rational::zero(); self.rows];
        for (r, c, w) in self.iter() {
            if !v[c].is_zero() {
                out[r] += w * &v[c];
            }
        }
        Ok(out)
    }

    /// Dense row dump, mostly for tests and diagnostics.
    pub fn to_dense(&self) -> Vec<Vec<Rational>> {
        let mut d = vec![vec![Rational::zero(); self.cols]; self.rows];
        for (r, c, v) in self.iter() {
            d[r][c] = v.clone();
        }
        d
    }
}

impl fmt::Display for RMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| format_rational(&self.get(i, j)))
                .collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

/// Row echelon form of the integer-cleared matrix, with pivot bookkeeping.
struct Echelon {
    /// Integer rows after fraction-free reduction (row-swapped order).
    mat: Vec<Vec<BigInt>>,
    /// `(row, col)` of each pivot, in elimination order (cols increasing).
    pivots: Vec<(usize, usize)>,
    cols: usize,
}

/// Clear denominators row by row, then run one-step fraction-free reduction.
///
/// `keep_last_col_unpivoted` excludes the final column from pivot selection
/// (used for augmented systems).
fn gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let mut a = a.abs();
    let mut b = b.abs();
    while !b.is_zero() {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

fn lcm(a: &BigInt, b: &BigInt) -> BigInt {
    let g = gcd(a, b);
    if g.is_zero() {
        BigInt::zero()
    } else {
        a / g * b
    }
}

fn echelon_int(rows_in: Vec<Vec<Rational>>, cols: usize, keep_last_col_unpivoted: bool) -> Echelon {
    let mut mat: Vec<Vec<BigInt>> = rows_in
        .into_iter()
        .map(|row| {
            let mut scale = BigInt::one();
            for v in &row {
                if !v.is_zero() {
                    scale = lcm(&scale, v.denom());
                }
            }
            row.iter()
                .map(|v| v.numer() * (&scale / v.denom()))
                .collect()
        })
        .collect();
    let nrows = mat.len();
    let pivot_cols = if keep_last_col_unpivoted && cols > 0 {
        cols - 1
    } else {
        cols
    };
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut prev = BigInt::one();
    let mut r = 0;
    for c in 0..pivot_cols {
        if r >= nrows {
            break;
        }
        // partial pivot: largest |entry|, ties to the lowest row index
        let mut best: Option<usize> = None;
        for i in r..nrows {
            if mat[i][c].is_zero() {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) => {
                    if mat[i][c].abs() > mat[b][c].abs() {
                        best = Some(i);
                    }
                }
            }
        }
        let Some(p) = best else { continue };
        mat.swap(r, p);
        let pivot = mat[r][c].clone();
        for i in (r + 1)..nrows {
            if mat[i][c].is_zero() {
                // still need the Bareiss rescale to keep the invariant exact
                for j in (c + 1)..cols {
                    let num = &pivot * &mat[i][j];
                    debug_assert!((&num % &prev).is_zero());
                    mat[i][j] = num / &prev;
                }
            } else {
                let lead = std::mem::replace(&mut mat[i][c], BigInt::zero());
                for j in (c + 1)..cols {
                    let num = &pivot * &mat[i][j] - &lead * &mat[r][j];
                    debug_assert!((&num % &prev).is_zero());
                    mat[i][j] = num / &prev;
                }
            }
        }
        prev = pivot;
        pivots.push((r, c));
        r += 1;
    }
    Echelon { mat, pivots, cols }
}

fn echelon_of(m: &RMatrix, keep_last_col_unpivoted: bool) -> Echelon {
    echelon_int(m.to_dense(), m.cols, keep_last_col_unpivoted)
}

/// Rank over ℚ.
pub fn rank(m: &RMatrix) -> usize {
    echelon_of(m, false).pivots.len()
}

/// Normalize a rational vector to a primitive integer vector with positive
/// leading entry; deterministic representative of its line.
fn normalize_primitive(v: &mut [Rational]) {
    let mut scale = BigInt::one();
    for x in v.iter() {
        if !x.is_zero() {
            scale = lcm(&scale, x.denom());
        }
    }
    let mut g = BigInt::zero();
    for x in v.iter_mut() {
        *x *= Rational::from(scale.clone());
        g = gcd(x.numer(), &g);
    }
    if g.is_zero() {
        return;
    }
    let mut lead_neg = false;
    for x in v.iter() {
        if !x.is_zero() {
            lead_neg = x.numer().is_negative();
            break;
        }
    }
    let div = if lead_neg { -g } else { g };
    for x in v.iter_mut() {
        *x /= Rational::from(div.clone());
    }
}

/// Basis of the right kernel `{v : Mv = 0}`, one primitive integer vector per
/// free column, in increasing free-column order.
pub fn kernel_basis(m: &RMatrix) -> Vec<Vec<Rational>> {
    let ech = echelon_of(m, false);
    let pivot_cols: Vec<usize> = ech.pivots.iter().map(|&(_, c)| c).collect();
    let mut basis = Vec::new();
    for free in 0..m.cols {
        if pivot_cols.contains(&free) {
            continue;
        }
        let mut v = vec![Rational::zero(); m.cols];
        v[free] = Rational::one();
        // back-substitute pivot rows bottom-up
        for &(pr, pc) in ech.pivots.iter().rev() {
            let mut acc = Rational::zero();
            for j in (pc + 1)..ech.cols {
                if !ech.mat[pr][j].is_zero() && !v[j].is_zero() {
                    acc += Rational::from(ech.mat[pr][j].clone()) * &v[j];
                }
            }
            v[pc] = -acc / Rational::from(ech.mat[pr][pc].clone());
        }
        normalize_primitive(&mut v);
        basis.push(v);
    }
    basis
}

/// One particular solution of `Mx = rhs` (free variables set to 0), or `None`
/// if the system is inconsistent.
pub fn solve(m: &RMatrix, rhs: &[Rational]) -> Option<Vec<Rational>> {
    assert_eq!(rhs.len(), m.rows, "rhs length must match row count");
    let mut rows = m.to_dense();
    for (i, row) in rows.iter_mut().enumerate() {
        row.push(rhs[i].clone());
    }
    let ech = echelon_int(rows, m.cols + 1, true);
    let pivot_rows: Vec<usize> = ech.pivots.iter().map(|&(r, _)| r).collect();
    for i in 0..ech.mat.len() {
        if pivot_rows.contains(&i) {
            continue;
        }
        if !ech.mat[i][m.cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![Rational::zero(); m.cols];
    for &(pr, pc) in ech.pivots.iter().rev() {
        let mut acc = Rational::from(ech.mat[pr][m.cols].clone());
        for j in (pc + 1)..m.cols {
            if !ech.mat[pr][j].is_zero() && !x[j].is_zero() {
                acc -= Rational::from(ech.mat[pr][j].clone()) * &x[j];
            }
        }
        x[pc] = acc / Rational::from(ech.mat[pr][pc].clone());
    }
    Some(x)
}

/// Exact inverse of a square matrix, or `None` when singular.
pub fn invert(m: &RMatrix) -> Option<RMatrix> {
    if m.rows != m.cols {
        return None;
    }
    let n = m.rows;
    let mut a = m.to_dense();
    for (i, row) in a.iter_mut().enumerate() {
        for j in 0..n {
            row.push(if i == j {
                Rational::one()
            } else {
                Rational::zero()
            });
        }
    }
    // plain rational Gauss-Jordan; n is tiny wherever inversion is used
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..n).find(|&i| !a[i][c].is_zero()) else {
            return None;
        };
        a.swap(r, p);
        let pv = a[r][c].clone();
        for x in &mut a[r] {
            *x /= &pv;
        }
        for i in 0..n {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..2 * n {
                    let sub = &f * &a[r][j];
                    a[i][j] -= sub;
                }
            }
        }
        r += 1;
    }
    let mut inv = RMatrix::new(n, n);
    for i in 0..n {
        for j in 0..n {
            inv.set(i, j, a[i][j + n].clone());
        }
    }
    Some(inv)
}

/// Dimension of `ker(d_out) / im(d_in)` for one link of a cochain complex.
///
/// `d_in : C^{k-1} → C^k` and `d_out : C^k → C^{k+1}`; the composition
/// `d_out · d_in = 0` is verified first and a nonzero entry is an error, not
/// a warning — it means the matrices do not come from a complex.
pub fn cohomology_dim(d_in: &RMatrix, d_out: &RMatrix) -> Result<usize, LinalgError> {
    if d_in.rows != d_out.cols {
        return Err(LinalgError::ShapeMismatch(format!(
            "d_in is {}x{} but d_out is {}x{}",
            d_in.rows, d_in.cols, d_out.rows, d_out.cols
        )));
    }
    let comp = d_out.mul(d_in)?;
    if let Some((r, c, _)) = comp.iter().next() {
        return Err(LinalgError::CompositionNonzero { row: r, col: c });
    }
    let kernel = d_out.cols - rank(d_out);
    Ok(kernel - rank(d_in))
}
