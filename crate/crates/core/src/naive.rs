//! Partial cohomology of a twisted algebra. Cochains C^{p,q} are the
//! (p,q)-forms annihilated by the twist operator H̃; on them D² = H̃ = 0, so
//! the covariant derivative restricts to a genuine differential along p at
//! each fixed q. The trace contraction δ supplies a second operator lowering
//! both degrees; the two do not commute and no bicomplex is formed.

use thiserror::Error;

use crate::linalg::{self, RMatrix, Rational};
use crate::twisted::{trace, MultiForm, TwistError, TwistedLieAlgebra};

use num_traits::{One, Zero};

#[derive(Debug, Error)]
pub enum NaiveError {
    #[error("shape error: {0}")]
    ShapeError(String),
    /// An operator applied to a cochain produced a form outside the cochain
    /// space. On algebras satisfying both axioms the derivative never does
    /// this; seeing it from `naive_d_matrix` signals a corrupted input.
    #[error("operator image escapes the cochain space: {0}")]
    ImageEscapesCochains(String),
}

impl From<TwistError> for NaiveError {
    fn from(e: TwistError) -> Self {
        NaiveError::ShapeError(e.to_string())
    }
}

/// Basis of the cochain slice C^{p,q} = ker(H̃ on (p,q)-forms).
///
/// The basis is deterministic: standard slice keys are ordered
/// lexicographically and kernel vectors are produced in free-column order of
/// the echelonized H̃ matrix, normalized to primitive integer vectors.
#[derive(Debug, Clone)]
pub struct CochainBasis {
    p: u8,
    q: u8,
    keys: Vec<(Vec<u8>, Vec<u8>)>,
    vectors: Vec<MultiForm>,
    matrix: RMatrix,
}

impl CochainBasis {
    pub fn p(&self) -> u8 {
        self.p
    }

    pub fn q(&self) -> u8 {
        self.q
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[MultiForm] {
        &self.vectors
    }

    /// Coordinates of `f` in this basis, or `None` when `f` is not a cochain.
    pub fn coordinates(&self, f: &MultiForm) -> Option<Vec<Rational>> {
        assert_eq!((f.p(), f.q()), (self.p, self.q), "slice mismatch");
        let rhs: Vec<Rational> = self.keys.iter().map(|(ff, ss)| f.coeff(ff, ss)).collect();
        linalg::solve(&self.matrix, &rhs)
    }
}

/// Exact kernel basis of the twist operator on the (p,q) slice.
///
/// When the twist vanishes, or the target slice (p+2,q) is already zero,
/// every form is a cochain and the standard slice basis is returned.
pub fn cochain_basis(t: &TwistedLieAlgebra, p: u8, q: u8) -> Result<CochainBasis, NaiveError> {
    let n = t.dim();
    if p > n {
        return Err(NaiveError::ShapeError(format!(
            "form degree {p} exceeds the dimension {n}"
        )));
    }
    let keys = MultiForm::basis_keys(n, p, q);
    if t.is_untwisted() || p + 2 > n {
        let mut vectors = Vec::with_capacity(keys.len());
        for (f, s) in &keys {
            let mut form = MultiForm::new(n, p, q);
            form.add_term(f, s, Rational::one());
            vectors.push(form);
        }
        let matrix = RMatrix::identity(keys.len());
        return Ok(CochainBasis { p, q, keys, vectors, matrix });
    }
    let tkeys = MultiForm::basis_keys(n, p + 2, q);
    let mut op = RMatrix::new(tkeys.len(), keys.len());
    for (col, (f, s)) in keys.iter().enumerate() {
        let mut e = MultiForm::new(n, p, q);
        e.add_term(f, s, Rational::one());
        let h = t.h_tilde(&e);
        for (row, (tf, ts)) in tkeys.iter().enumerate() {
            let v = h.coeff(tf, ts);
            if !v.is_zero() {
                op.set(row, col, v);
            }
        }
    }
    let ker = linalg::kernel_basis(&op);
    let mut matrix = RMatrix::new(keys.len(), ker.len());
    let mut vectors = Vec::with_capacity(ker.len());
    for (col, kv) in ker.iter().enumerate() {
        let mut form = MultiForm::new(n, p, q);
        for (i, c) in kv.iter().enumerate() {
            if !c.is_zero() {
                form.add_term(&keys[i].0, &keys[i].1, c.clone());
                matrix.set(i, col, c.clone());
            }
        }
        vectors.push(form);
    }
    Ok(CochainBasis { p, q, keys, vectors, matrix })
}

fn d_between(
    t: &TwistedLieAlgebra,
    source: &CochainBasis,
    target: Option<&CochainBasis>,
) -> Result<RMatrix, NaiveError> {
    let target = match target {
        // the target slice is zero: the differential is the empty map
        None => return Ok(RMatrix::new(0, source.dim())),
        Some(b) => b,
    };
    let mut m = RMatrix::new(target.dim(), source.dim());
    for (col, v) in source.vectors().iter().enumerate() {
        let dv = t.exterior_derivative(v)?;
        let coords = target.coordinates(&dv).ok_or_else(|| {
            NaiveError::ImageEscapesCochains(format!(
                "derivative of a ({},{}) cochain is not a ({},{}) cochain",
                source.p(),
                source.q(),
                target.p(),
                target.q()
            ))
        })?;
        for (row, c) in coords.into_iter().enumerate() {
            if !c.is_zero() {
                m.set(row, col, c);
            }
        }
    }
    Ok(m)
}

/// Matrix of the derivative D: C^{p,q} → C^{p+1,q} between cochain bases.
///
/// At p = n the target slice vanishes and the result has zero rows.
pub fn naive_d_matrix(t: &TwistedLieAlgebra, p: u8, q: u8) -> Result<RMatrix, NaiveError> {
    let source = cochain_basis(t, p, q)?;
    if p == t.dim() {
        return d_between(t, &source, None);
    }
    let target = cochain_basis(t, p + 1, q)?;
    d_between(t, &source, Some(&target))
}

/// Dimension table of the partial cohomology H^{p,q}, together with
/// representative cocycles in the deterministic cochain bases.
#[derive(Debug, Clone)]
pub struct NaiveTable {
    pmax: u8,
    qmax: u8,
    dims: Vec<Vec<usize>>,
    reps: Vec<Vec<Vec<MultiForm>>>,
}

impl NaiveTable {
    pub fn pmax(&self) -> u8 {
        self.pmax
    }

    pub fn qmax(&self) -> u8 {
        self.qmax
    }

    pub fn dim(&self, p: u8, q: u8) -> usize {
        self.dims[q as usize][p as usize]
    }

    /// Dimensions (H^{0,q}, ..., H^{pmax,q}) at fixed q.
    pub fn row(&self, q: u8) -> &[usize] {
        &self.dims[q as usize]
    }

    pub fn representatives(&self, p: u8, q: u8) -> &[MultiForm] {
        &self.reps[q as usize][p as usize]
    }
}

impl std::fmt::Display for NaiveTable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "q\\p")?;
        for p in 0..=self.pmax {
            write!(f, "\t{p}")?;
        }
        for q in 0..=self.qmax {
            write!(f, "\n{q}")?;
            for d in self.row(q) {
                write!(f, "\t{d}")?;
            }
        }
        Ok(())
    }
}

fn rank_of_columns(cols: &[Vec<Rational>], height: usize) -> usize {
    let mut m = RMatrix::new(height, cols.len());
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            if !v.is_zero() {
                m.set(i, j, v.clone());
            }
        }
    }
    linalg::rank(&m)
}

/// H^{p,q} dimensions for p ≤ pmax, q ≤ qmax, computed along p at fixed q.
pub fn naive_cohomology_table(
    t: &TwistedLieAlgebra,
    pmax: u8,
    qmax: u8,
) -> Result<NaiveTable, NaiveError> {
    let n = t.dim();
    if pmax > n {
        return Err(NaiveError::ShapeError(format!(
            "pmax {pmax} exceeds the dimension {n}"
        )));
    }
    let mut dims = Vec::new();
    let mut reps = Vec::new();
    for q in 0..=qmax {
        let bases: Vec<CochainBasis> = (0..=pmax)
            .map(|p| cochain_basis(t, p, q))
            .collect::<Result<_, _>>()?;
        let mut mats = Vec::with_capacity(bases.len());
        for p in 0..=pmax {
            let target = if p == n {
                None
            } else if p < pmax {
                Some(&bases[p as usize + 1])
            } else {
                // pmax < n: one basis beyond the table is needed for ker d_pmax
                mats.push(d_between(
                    t,
                    &bases[p as usize],
                    Some(&cochain_basis(t, p + 1, q)?),
                )?);
                continue;
            };
            mats.push(d_between(t, &bases[p as usize], target)?);
        }
        let mut row_dims = Vec::new();
        let mut row_reps = Vec::new();
        for p in 0..=pmax as usize {
            let d_out = &mats[p];
            let d_in = if p == 0 {
                RMatrix::new(bases[0].dim(), 0)
            } else {
                mats[p - 1].clone()
            };
            let h = linalg::cohomology_dim(&d_in, d_out)
                .map_err(|e| NaiveError::ImageEscapesCochains(e.to_string()))?;
            row_dims.push(h);

            // representatives: kernel vectors of d_out that grow the span of
            // the image of d_in
            let height = bases[p].dim();
            let mut span: Vec<Vec<Rational>> = (0..d_in.cols())
                .map(|j| (0..height).map(|i| d_in.get(i, j)).collect())
                .collect();
            let mut current = rank_of_columns(&span, height);
            let mut selected = Vec::new();
            for kv in linalg::kernel_basis(d_out) {
                span.push(kv.clone());
                let r = rank_of_columns(&span, height);
                if r > current {
                    current = r;
                    let mut form = MultiForm::new(n, p as u8, q);
                    for (i, c) in kv.iter().enumerate() {
                        if !c.is_zero() {
                            form = form.add(&bases[p].vectors()[i].scale(c));
                        }
                    }
                    selected.push(form);
                } else {
                    span.pop();
                }
            }
            debug_assert_eq!(selected.len(), h);
            row_reps.push(selected);
        }
        dims.push(row_dims);
        reps.push(row_reps);
    }
    Ok(NaiveTable { pmax, qmax, dims, reps })
}

/// Matrix of the contraction δ = tr: C^{p,q} → C^{p-1,q-1} between cochain
/// bases. Requires p, q ≥ 1.
///
/// The trace need not preserve the kernel of H̃; when some cochain traces to
/// a non-cochain the map is not defined on that slice and the error says so.
/// Whenever the next δ is also defined, δ² = 0 is verified.
pub fn delta_matrix(t: &TwistedLieAlgebra, p: u8, q: u8) -> Result<RMatrix, NaiveError> {
    if p < 1 || q < 1 {
        return Err(NaiveError::ShapeError(format!(
            "the contraction needs p ≥ 1 and q ≥ 1, got ({p},{q})"
        )));
    }
    let source = cochain_basis(t, p, q)?;
    let target = cochain_basis(t, p - 1, q - 1)?;
    let mut m = RMatrix::new(target.dim(), source.dim());
    for (col, v) in source.vectors().iter().enumerate() {
        let tv = trace(v)?;
        let coords = target.coordinates(&tv).ok_or_else(|| {
            NaiveError::ImageEscapesCochains(format!(
                "trace of a ({p},{q}) cochain is not a ({},{}) cochain",
                p - 1,
                q - 1
            ))
        })?;
        for (row, c) in coords.into_iter().enumerate() {
            if !c.is_zero() {
                m.set(row, col, c);
            }
        }
    }
    if p >= 2 && q >= 2 {
        if let Ok(next) = delta_matrix(t, p - 1, q - 1) {
            let comp = next
                .mul(&m)
                .map_err(|e| NaiveError::ShapeError(e.to_string()))?;
            if !comp.is_zero() {
                return Err(NaiveError::ImageEscapesCochains(format!(
                    "δ² ≠ 0 out of the ({p},{q}) slice"
                )));
            }
        }
    }
    Ok(m)
}
