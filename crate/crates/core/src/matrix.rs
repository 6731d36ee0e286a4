//! Dense complex-matrix primitives shared by every other module.
//!
//! All residuals use the Frobenius norm. Rank decisions are made from
//! singular values only.

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative tolerance for every optional `tol` argument.
pub const DEFAULT_TOL: f64 = 1e-10;

const SVD_EPS: f64 = 1e-15;
const SVD_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real Frobenius inner product `Re Tr(A†B)`.
pub fn real_inner(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    if is_finite(m) {
        Ok(())
    } else {
        Err(Error::NonFinite)
    }
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch { expected: m.nrows(), found: m.ncols() });
    }
    Ok(m.nrows())
}

/// Transpose without conjugation.
pub fn transpose(m: &CMatrix) -> CMatrix {
    m.transpose()
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// `‖M − M†‖_F ≤ tol·‖M‖_F`.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    frobenius(&(m - m.adjoint())) <= tol * frobenius(m)
}

/// Pauli matrices `(σx, σy, σz)`.
pub fn pauli() -> (CMatrix, CMatrix, CMatrix) {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    (
        CMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        CMatrix::from_row_slice(2, 2, &[z, -i, i, z]),
        CMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    )
}

/// Matrix exponential `e^M`.
///
/// Scaling and squaring with Padé approximants (nalgebra's
/// implementation of Al-Mohy & Higham). Overflow of the result is
/// reported as a numerical failure.
pub fn expm(m: &CMatrix) -> Result<CMatrix> {
    ensure_square(m)?;
    ensure_finite(m)?;
    if m.nrows() == 0 {
        return Ok(m.clone());
    }
    let e = m.exp();
    if !is_finite(&e) {
        return Err(Error::NumericalFailure("matrix exponential overflowed".into()));
    }
    Ok(e)
}

/// Sorted (descending) SVD with full right factor.
pub(crate) fn svd(m: &CMatrix) -> Result<SVD<C64, nalgebra::Dyn, nalgebra::Dyn>> {
    ensure_finite(m)?;
    // Pad short-wide inputs so that Vᵀ is square.
    let padded;
    let target = if m.nrows() < m.ncols() {
        let mut p = CMatrix::zeros(m.ncols(), m.ncols());
        p.view_mut((0, 0), (m.nrows(), m.ncols())).copy_from(m);
        padded = p;
        &padded
    } else {
        m
    };
    SVD::try_new(target.clone(), true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))
}

pub(crate) fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    Ok(svd(m)?.singular_values.iter().copied().collect())
}

/// Right singular vectors whose singular value is `≤ threshold`, as an
/// orthonormal list.
pub(crate) fn null_vectors_abs(m: &CMatrix, threshold: f64) -> Result<Vec<CVector>> {
    let s = svd(m)?;
    let v_t = s.v_t.as_ref().expect("requested V");
    let mut out = Vec::new();
    for (k, sv) in s.singular_values.iter().enumerate() {
        if *sv <= threshold {
            out.push(v_t.row(k).adjoint());
        }
    }
    // Rows beyond min(r, c) are zero-padded rows; their singular values are
    // already included above since padding makes the matrix square.
    Ok(out)
}

/// Orthonormal basis of `{v : ‖Mv‖ ≤ tol·‖M‖_F·‖v‖}`; empty when `M` has
/// full column rank at `tol`.
pub fn nullspace_basis(m: &CMatrix, tol: f64) -> Result<Vec<CVector>> {
    if tol < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
    }
    null_vectors_abs(m, tol * frobenius(m))
}

/// Minimum-norm least-squares solution of `M x = b`, with singular values
/// below `threshold` truncated. Returns `(x, ‖Mx − b‖)`.
pub(crate) fn min_norm_solve(m: &CMatrix, b: &CVector, threshold: f64) -> Result<(CVector, f64)> {
    let s = svd(m)?;
    let u = s.u.as_ref().expect("requested U");
    let v_t = s.v_t.as_ref().expect("requested V");
    let mut x = CVector::zeros(m.ncols());
    for (k, sv) in s.singular_values.iter().enumerate() {
        if *sv > threshold && k < u.ncols() {
            let coeff = (u.column(k).adjoint() * b)[(0, 0)] / C64::new(*sv, 0.0);
            x += v_t.row(k).adjoint() * coeff;
        }
    }
    let residual = (m * &x - b).norm();
    Ok((x, residual))
}

/// Incrementally built real-orthonormal basis of a span of complex matrices,
/// viewed as vectors in `ℝ^{2n²}`.
#[derive(Debug, Clone, Default)]
pub struct RealSpan {
    basis: Vec<CMatrix>,
}

impl RealSpan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Component of `m` orthogonal to the span.
    pub fn residual(&self, m: &CMatrix) -> CMatrix {
        let mut r = m.clone();
        // Two passes of modified Gram-Schmidt.
        for _ in 0..2 {
            for q in &self.basis {
                let p = real_inner(q, &r);
                r -= q * C64::new(p, 0.0);
            }
        }
        r
    }

    /// Adds `m` when its residual exceeds `tol·‖m‖_F`; reports whether the
    /// span grew.
    pub fn add(&mut self, m: &CMatrix, tol: f64) -> bool {
        let norm = frobenius(m);
        if norm == 0.0 {
            return false;
        }
        let r = self.residual(m);
        let rn = frobenius(&r);
        if rn <= tol * norm {
            return false;
        }
        self.basis.push(r / C64::new(rn, 0.0));
        true
    }
}

/// Ordered list of linearly independent Hermitian matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorBasis {
    elements: Vec<CMatrix>,
    tolerance: f64,
}

impl OperatorBasis {
    /// Validates Hermiticity and real-linear independence at `tolerance`.
    pub fn new(elements: Vec<CMatrix>, tolerance: f64) -> Result<Self> {
        if tolerance < 0.0 {
            return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
        }
        if let Some(first) = elements.first() {
            let n = ensure_square(first)?;
            for e in &elements {
                if e.nrows() != n || e.ncols() != n {
                    return Err(Error::DimensionMismatch { expected: n, found: e.nrows() });
                }
                ensure_finite(e)?;
                if !is_hermitian(e, tolerance) {
                    return Err(Error::InvalidParameter("basis element is not Hermitian".into()));
                }
            }
        }
        if independent_count(&elements, tolerance) != elements.len() {
            return Err(Error::InvalidParameter("basis elements are linearly dependent".into()));
        }
        Ok(Self { elements, tolerance })
    }

    pub(crate) fn from_trusted(elements: Vec<CMatrix>, tolerance: f64) -> Self {
        Self { elements, tolerance }
    }

    pub fn empty(tolerance: f64) -> Self {
        Self { elements: Vec::new(), tolerance }
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn into_elements(self) -> Vec<CMatrix> {
        self.elements
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Frobenius-orthonormal basis of the same real span.
    pub fn orthonormalized(&self) -> OperatorBasis {
        let mut span = RealSpan::new();
        for e in &self.elements {
            span.add(e, self.tolerance);
        }
        // Orthonormalizing Hermitian matrices keeps them Hermitian.
        OperatorBasis { elements: span.basis, tolerance: self.tolerance }
    }

    /// Real linear combination `Σ wᵢ eᵢ`.
    pub fn combine(&self, weights: &[f64]) -> Result<CMatrix> {
        if weights.len() != self.elements.len() {
            return Err(Error::DimensionMismatch { expected: self.elements.len(), found: weights.len() });
        }
        let n = self.elements.first().map_or(0, |e| e.nrows());
        let mut out = CMatrix::zeros(n, n);
        for (w, e) in weights.iter().zip(&self.elements) {
            out += e * C64::new(*w, 0.0);
        }
        Ok(out)
    }
}

/// Hermitian and anti-Hermitian parts `(M+M†)/2`, `(M−M†)/(2i)`, each
/// dropped when `‖·‖_F ≤ tol·‖M‖_F`.
pub fn hermitian_parts(m: &CMatrix, tol: f64) -> Vec<CMatrix> {
    let norm = frobenius(m);
    let md = m.adjoint();
    let sym = (m + &md) * C64::new(0.5, 0.0);
    let asym = (m - &md) * C64::new(0.0, -0.5);
    [sym, asym].into_iter().filter(|p| norm > 0.0 && frobenius(p) > tol * norm).collect()
}

/// Splits every operator into Hermitian parts and keeps an independent
/// subset spanning the same real space.
///
/// Only meaningful when the input operators satisfy a relation closed under
/// adjoints; the caller vouches for that.
pub fn hermitian_split(ops: &[CMatrix], tol: f64) -> OperatorBasis {
    let mut span = RealSpan::new();
    let mut kept = Vec::new();
    for m in ops {
        for part in hermitian_parts(m, tol) {
            if span.add(&part, tol) {
                kept.push(part);
            }
        }
    }
    OperatorBasis::from_trusted(kept, tol)
}

/// Number of real-linearly independent operators.
///
/// Rank of the Gram matrix of real Frobenius inner products, counting
/// singular values above `tol` times the largest. Elements whose norm is
/// below `tol` times the largest element norm count as zero; the others are
/// scaled to unit norm first so that widely different magnitudes do not
/// mask independence.
pub fn independent_count(ops: &[CMatrix], tol: f64) -> usize {
    let norms: Vec<f64> = ops.iter().map(frobenius).collect();
    let max_norm = norms.iter().copied().fold(0.0, f64::max);
    if max_norm == 0.0 {
        return 0;
    }
    let unit: Vec<CMatrix> =
        ops.iter().zip(&norms).filter(|(_, n)| **n > tol * max_norm).map(|(m, n)| m / C64::new(*n, 0.0)).collect();
    let k = unit.len();
    if k == 0 {
        return 0;
    }
    let gram = DMatrix::<f64>::from_fn(k, k, |i, j| real_inner(&unit[i], &unit[j]));
    let sv = gram.singular_values();
    let largest = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().filter(|s| **s > tol * largest).count()
}

/// Largest distance between a unit vector of one span and its projection
/// onto the other, taken both ways. Zero means the real spans coincide.
pub fn span_distance(a: &[CMatrix], b: &[CMatrix], tol: f64) -> f64 {
    let mut sa = RealSpan::new();
    for m in a {
        sa.add(m, tol);
    }
    let mut sb = RealSpan::new();
    for m in b {
        sb.add(m, tol);
    }
    let one_way = |from: &RealSpan, onto: &RealSpan| {
        from.basis().iter().map(|q| frobenius(&onto.residual(q))).fold(0.0, f64::max)
    };
    one_way(&sa, &sb).max(one_way(&sb, &sa))
}

/// Distance of each operator in `ops` (normalized) from the span of `onto`.
pub fn projection_residual(ops: &[CMatrix], onto: &[CMatrix], tol: f64) -> f64 {
    let mut s = RealSpan::new();
    for m in onto {
        s.add(m, tol);
    }
    ops.iter().filter(|m| frobenius(m) > 0.0).map(|m| frobenius(&s.residual(m)) / frobenius(m)).fold(0.0, f64::max)
}

/// Reshape a column-major `n²` vector into an `n×n` matrix.
pub(crate) fn unvec(v: &CVector, n: usize) -> CMatrix {
    CMatrix::from_column_slice(n, n, v.as_slice())
}

/// Multiplies `v` by a phase so that its first largest-modulus component is
/// real and positive.
pub fn fix_phase(v: &mut CVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)) {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn close(a: &CMatrix, b: &CMatrix) -> f64 {
        frobenius(&(a - b))
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&CMatrix::zeros(2, 2)).unwrap();
        assert!(close(&e, &identity(2)) < 1e-15);
    }

    #[test]
    fn expm_diagonal_phase() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, PI), c(0.0, -PI)]));
        let e = expm(&m).unwrap();
        assert!(close(&e, &(-identity(2))) < 1e-14);
    }

    #[test]
    fn expm_pauli_rotation() {
        let (sx, _, _) = pauli();
        let (j, t) = (1.0, 1.0);
        let e = expm(&(&sx * c(0.0, -t * j / 2.0))).unwrap();
        let expected = identity(2) * c((j * t / 2.0).cos(), 0.0) - &sx * c(0.0, (j * t / 2.0).sin());
        assert!(close(&e, &expected) < 1e-15);
    }

    #[test]
    fn expm_large_norm_matches_eigen_route() {
        // Hermitian generator with ‖M‖ ~ 100: compare against e^{-iλ} on the diagonal.
        let d = CVector::from_vec(vec![c(0.0, -60.0), c(0.0, 35.0), c(0.0, 70.0)]);
        let q = expm(&CMatrix::from_row_slice(
            3,
            3,
            &[
                c(0.0, 0.0),
                c(0.3, 0.1),
                c(-0.2, 0.0),
                c(-0.3, 0.1),
                c(0.0, 0.0),
                c(0.5, -0.4),
                c(0.2, 0.0),
                c(-0.5, -0.4),
                c(0.0, 0.0),
            ],
        ))
        .unwrap();
        let m = &q * CMatrix::from_diagonal(&d) * q.adjoint();
        let expected = &q * CMatrix::from_diagonal(&d.map(|z| z.exp())) * q.adjoint();
        let e = expm(&m).unwrap();
        assert!(close(&e, &expected) / frobenius(&expected) < 1e-12);
    }

    #[test]
    fn expm_overflow_is_numerical_failure() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1000.0, 0.0), c(0.0, 0.0)]));
        assert!(matches!(expm(&m), Err(Error::NumericalFailure(_))));
    }

    #[test]
    fn nullspace_examples() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![c(0.0, 0.0), c(-2.0, 0.0)]));
        let ns = nullspace_basis(&m, 1e-10).unwrap();
        assert_eq!(ns.len(), 1);
        assert_abs_diff_eq!(ns[0][0].norm(), 1.0, epsilon = 1e-14);
        assert!(nullspace_basis(&identity(2), 1e-10).unwrap().is_empty());
        assert!(matches!(nullspace_basis(&identity(2), -1.0), Err(Error::InvalidParameter(_))));
        let mut bad = identity(2);
        bad[(0, 0)] = c(f64::NAN, 0.0);
        assert_eq!(nullspace_basis(&bad, 1e-10), Err(Error::NonFinite));
    }

    #[test]
    fn nullspace_of_wide_matrix() {
        let m = CMatrix::from_row_slice(1, 3, &[c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let ns = nullspace_basis(&m, 1e-12).unwrap();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            assert!((&m * v).norm() < 1e-14);
        }
    }

    #[test]
    fn hermitian_split_examples() {
        let (sx, sy, _) = pauli();
        let b = hermitian_split(&[&sx + &sy * c(0.0, 1.0)], 1e-10);
        assert_eq!(b.len(), 2);
        assert!(span_distance(b.elements(), &[sx.clone(), sy.clone()], 1e-10) < 1e-14);

        let b = hermitian_split(&[identity(2) * c(0.0, 1.0)], 1e-10);
        assert_eq!(b.len(), 1);
        assert!(close(&b.elements()[0], &identity(2)) < 1e-15);
    }

    #[test]
    fn independent_count_examples() {
        let (_, _, sz) = pauli();
        let i2 = identity(2);
        assert_eq!(independent_count(&[i2.clone(), sz.clone(), &i2 + &sz], 1e-10), 2);
        assert_eq!(independent_count(&[CMatrix::zeros(2, 2)], 1e-10), 0);
        // Real (not complex) independence.
        assert_eq!(independent_count(&[sz.clone(), &sz * c(0.0, 1.0)], 1e-10), 2);
    }

    #[test]
    fn operator_basis_rejects_bad_input() {
        let (sx, sy, _) = pauli();
        assert!(OperatorBasis::new(vec![sx.clone(), sy.clone()], 1e-10).is_ok());
        assert!(OperatorBasis::new(vec![sx.clone(), &sx * c(2.0, 0.0)], 1e-10).is_err());
        assert!(OperatorBasis::new(vec![&sx * c(0.0, 1.0)], 1e-10).is_err());
        let b = OperatorBasis::new(vec![sx.clone(), &sx + &sy], 1e-10).unwrap();
        let o = b.orthonormalized();
        for (i, x) in o.elements().iter().enumerate() {
            for (j, y) in o.elements().iter().enumerate() {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(real_inner(x, y), expected, epsilon = 1e-14);
            }
        }
        let w = b.combine(&[1.0, -1.0]).unwrap();
        assert!(close(&w, &(-sy)) < 1e-15);
    }

    #[test]
    fn fix_phase_makes_largest_component_positive() {
        let mut v = CVector::from_vec(vec![c(0.1, 0.0), c(0.0, -2.0), c(0.0, 2.0)]);
        fix_phase(&mut v);
        assert_abs_diff_eq!(v[1].re, 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(v[1].im, 0.0, epsilon = 1e-15);
    }

    fn cmatrix(n: usize, scale: f64) -> impl Strategy<Value = CMatrix> {
        prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n * n).prop_map(move |v| {
            let m = CMatrix::from_iterator(n, n, v.into_iter().map(|(a, b)| c(a, b)));
            let f = frobenius(&m);
            if f > 0.0 {
                m * c(scale / f, 0.0)
            } else {
                m
            }
        })
    }

    proptest! {
        #[test]
        fn expm_inverse_pair(m in cmatrix(3, 5.0)) {
            let prod = expm(&m).unwrap() * expm(&(-&m)).unwrap();
            prop_assert!(close(&prod, &identity(3)) < 1e-10);
        }

        #[test]
        fn nullspace_vectors_are_annihilated(m in cmatrix(4, 1.0), rank in 1usize..4) {
            // Force a rank deficit by projecting out trailing columns.
            let mut p = m.clone();
            for j in rank..4 {
                p.set_column(j, &(p.column(0) * c(j as f64, 0.0)));
            }
            let tol = 1e-10;
            for v in nullspace_basis(&p, tol).unwrap() {
                prop_assert!((&p * &v).norm() <= tol * frobenius(&p) * 1.0001);
            }
        }

        #[test]
        fn independent_count_invariant_under_real_recombination(
            a in cmatrix(2, 1.0), b in cmatrix(2, 1.0), mix in prop::collection::vec(-2.0..2.0f64, 4)
        ) {
            let det = mix[0] * mix[3] - mix[1] * mix[2];
            prop_assume!(det.abs() > 0.1);
            let x = &a * c(mix[0], 0.0) + &b * c(mix[1], 0.0);
            let y = &a * c(mix[2], 0.0) + &b * c(mix[3], 0.0);
            prop_assert_eq!(independent_count(&[a.clone(), b.clone()], 1e-10), independent_count(&[x, y], 1e-10));
        }

        #[test]
        fn hermitian_split_preserves_real_span(a in cmatrix(2, 1.0), b in cmatrix(2, 1.0)) {
            let split = hermitian_split(&[a.clone(), b.clone()], 1e-10);
            let mut parts = hermitian_parts(&a, 0.0);
            parts.extend(hermitian_parts(&b, 0.0));
            prop_assert!(span_distance(split.elements(), &parts, 1e-10) < 1e-9);
        }
    }
}
