//! Intertwining operators: Hermitian `η` with `ηH = e^{iφ}H†η`, or with
//! `ηH = −Hη` in the chiral case.
//!
//! Three independent constructions are provided:
//!
//! * [`solve_relation`]: brute-force nullspace of the vectorized relation
//!   (the reference the other two are checked against);
//! * [`spectral_route`] / [`eta_from_spectrum`]: dyads of left eigenvectors
//!   and left Jordan chains;
//! * [`recursive_tower`]: repeated right multiplication of a seed by `H`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    c, ensure_finite, ensure_square, frobenius, hermitian_parts, hermitian_split, identity, is_hermitian, kron,
    null_vectors_abs, singular_values, transpose, unvec, CMatrix, CVector, OperatorBasis, RealSpan, C64,
};
use crate::spectral::{
    classify_degeneracies, eig_biorthogonal, jordan_chains, wrap_angle, DegeneracyKind, DegeneracyReport, JordanChain,
    SpectralData, SymmetryClass, SymmetryDescriptor, DEFAULT_CLUSTER_TOL,
};

/// Linear constraint defining the conserved operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Relation {
    /// `ηH = e^{iφ}H†η`, with `φ ∈ [0, 2π)`.
    Intertwine { phi: f64 },
    /// `ηH = −Hη`.
    Anticommute,
    /// `G†ηG = η` for a one-period propagator `G` passed in place of `H`.
    Stroboscopic,
}

impl Relation {
    pub fn intertwine(phi: f64) -> Self {
        Relation::Intertwine { phi: wrap_angle(phi) }
    }

    pub fn pt() -> Self {
        Relation::Intertwine { phi: 0.0 }
    }

    pub fn anti_pt() -> Self {
        Relation::Intertwine { phi: PI }
    }

    pub fn phi(&self) -> Option<f64> {
        match self {
            Relation::Intertwine { phi } => Some(*phi),
            _ => None,
        }
    }

    /// Adjoints of solutions are solutions, so Hermitian parts are too.
    fn adjoint_closed(&self) -> bool {
        !matches!(self, Relation::Anticommute)
    }
}

impl SymmetryDescriptor {
    /// Relation obeyed by the conserved operators that this symmetry
    /// generates.
    ///
    /// `AH = e^{iφ}HA` with `A = L∘K` and `H = Hᵀ` gives `L*H = e^{−iφ}H†L*`,
    /// so the intertwining angle is `−φ`.
    pub fn relation(&self) -> Relation {
        match self.class {
            SymmetryClass::Pt => Relation::pt(),
            SymmetryClass::AntiPt => Relation::anti_pt(),
            SymmetryClass::Anyonic => Relation::intertwine(-self.phi),
            SymmetryClass::Chiral => Relation::Anticommute,
            SymmetryClass::None => Relation::pt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Construction {
    Spectral,
    Recursive,
    Nullspace,
    Stroboscopic,
}

/// Hermitian conserved operators together with their residuals.
///
/// Elements are kept as constructed (e.g. `P₃H₃²` rather than an
/// orthonormalized combination); use [`IntertwinerSet::orthonormalized`]
/// for a Frobenius-orthonormal basis of the same span.
#[derive(Debug, Clone, PartialEq)]
pub struct IntertwinerSet {
    pub relation: Relation,
    pub etas: OperatorBasis,
    pub residuals: Vec<f64>,
    pub construction: Construction,
    /// Real weights of a combined operator, if one has been formed.
    pub coefficients: Option<Vec<f64>>,
}

impl IntertwinerSet {
    fn build(etas: OperatorBasis, h: &CMatrix, relation: Relation, construction: Construction) -> Self {
        let residuals = etas.elements().iter().map(|e| verify_relation(e, h, relation)).collect();
        Self { relation, etas, residuals, construction, coefficients: None }
    }

    pub fn len(&self) -> usize {
        self.etas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.etas.is_empty()
    }

    pub fn elements(&self) -> &[CMatrix] {
        self.etas.elements()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().copied().fold(0.0, f64::max)
    }

    /// Same span with a Frobenius-orthonormal basis; residuals recomputed
    /// against `h`.
    pub fn orthonormalized(&self, h: &CMatrix) -> Self {
        Self::build(self.etas.orthonormalized(), h, self.relation, self.construction)
    }

    /// Records real weights `A_k` of a combined operator.
    pub fn with_coefficients(mut self, weights: Vec<f64>) -> Result<Self> {
        self.etas.combine(&weights)?;
        self.coefficients = Some(weights);
        Ok(self)
    }

    /// `Σ A_k η_k`, when coefficients have been set.
    pub fn combined(&self) -> Option<CMatrix> {
        self.coefficients.as_ref().and_then(|w| self.etas.combine(w).ok())
    }
}

/// Relative residual of the relation:
/// `‖ηH − e^{iφ}H†η‖_F / (‖η‖_F‖H‖_F)`, `‖ηH + Hη‖_F / (‖η‖_F‖H‖_F)`, or
/// `‖G†ηG − η‖_F / ‖η‖_F`.
///
/// Returns `0` for a zero numerator and `+∞` for mismatched shapes.
pub fn verify_relation(eta: &CMatrix, h: &CMatrix, rel: Relation) -> f64 {
    if eta.shape() != h.shape() || eta.nrows() != eta.ncols() {
        return f64::INFINITY;
    }
    let (num, den) = match rel {
        Relation::Intertwine { phi } => {
            let lhs = eta * h;
            let rhs = h.adjoint() * eta * C64::from_polar(1.0, phi);
            (frobenius(&(lhs - rhs)), frobenius(eta) * frobenius(h))
        }
        Relation::Anticommute => (frobenius(&(eta * h + h * eta)), frobenius(eta) * frobenius(h)),
        Relation::Stroboscopic => (frobenius(&(h.adjoint() * eta * h - eta)), frobenius(eta)),
    };
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den
    }
}

/// Column-major `n²×n²` matrix of `η ↦ ηH − e^{iφ}H†η` or `η ↦ G†ηG − η`.
fn relation_operator(h: &CMatrix, rel: Relation) -> CMatrix {
    let n = h.nrows();
    let id = identity(n);
    match rel {
        Relation::Intertwine { phi } => kron(&transpose(h), &id) - kron(&id, &h.adjoint()) * C64::from_polar(1.0, phi),
        Relation::Stroboscopic => kron(&transpose(h), &h.adjoint()) - identity(n * n),
        Relation::Anticommute => kron(&transpose(h), &id) + kron(&id, h),
    }
}

/// Real orthonormal basis of the `n²`-dimensional space of Hermitian `n×n`
/// matrices.
fn hermitian_unit_basis(n: usize) -> Vec<CMatrix> {
    let mut out = Vec::with_capacity(n * n);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    for j in 0..n {
        let mut e = CMatrix::zeros(n, n);
        e[(j, j)] = c(1.0, 0.0);
        out.push(e);
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut sym = CMatrix::zeros(n, n);
            sym[(j, k)] = c(s, 0.0);
            sym[(k, j)] = c(s, 0.0);
            out.push(sym);
            let mut asym = CMatrix::zeros(n, n);
            asym[(j, k)] = c(0.0, s);
            asym[(k, j)] = c(0.0, -s);
            out.push(asym);
        }
    }
    out
}

/// Hermitian solutions of `ηH + Hη = 0` from a real parametrization, since
/// adjoints of solutions solve a different equation.
fn solve_anticommute(h: &CMatrix, tol: f64) -> Result<Vec<CMatrix>> {
    let n = h.nrows();
    let basis = hermitian_unit_basis(n);
    let rows = 2 * n * n;
    let mut real = DMatrix::<f64>::zeros(rows, basis.len());
    for (k, b) in basis.iter().enumerate() {
        let image = b * h + h * b;
        for (r, z) in image.iter().enumerate() {
            real[(r, k)] = z.re;
            real[(n * n + r, k)] = z.im;
        }
    }
    let threshold = tol * real.norm();
    let svd = SVD::try_new(real, false, true, 1e-15, 10_000)
        .ok_or_else(|| Error::NumericalFailure("SVD did not converge".into()))?;
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut out = Vec::new();
    for (k, sv) in svd.singular_values.iter().enumerate() {
        if *sv <= threshold {
            let mut eta = CMatrix::zeros(n, n);
            for (j, b) in basis.iter().enumerate() {
                eta += b * c(v_t[(k, j)], 0.0);
            }
            out.push(eta);
        }
    }
    // A tall real matrix has as many singular values as columns, so every
    // null direction is listed above.
    Ok(out)
}

/// Hermitian basis of all solutions of `rel`, from the nullspace of the
/// vectorized linear map (singular values `≤ tol·‖map‖_F`).
///
/// For [`Relation::Stroboscopic`], `h` is the one-period propagator and
/// must be invertible at `tol`.
pub fn solve_relation(h: &CMatrix, rel: Relation, tol: f64) -> Result<IntertwinerSet> {
    let n = ensure_square(h)?;
    ensure_finite(h)?;
    if tol < 0.0 {
        return Err(Error::InvalidParameter("tolerance must be non-negative".into()));
    }
    let construction = match rel {
        Relation::Stroboscopic => {
            let sv = singular_values(h)?;
            let smallest = sv.last().copied().unwrap_or(0.0);
            if smallest <= tol * frobenius(h) {
                return Err(Error::InvalidParameter("propagator is singular".into()));
            }
            Construction::Stroboscopic
        }
        _ => Construction::Nullspace,
    };
    let solutions = if rel.adjoint_closed() {
        let k = relation_operator(h, rel);
        null_vectors_abs(&k, tol * frobenius(&k))?.iter().map(|v| unvec(v, n)).collect()
    } else {
        solve_anticommute(h, tol)?
    };
    let etas = hermitian_split(&solutions, tol);
    Ok(IntertwinerSet::build(etas, h, rel, construction))
}

/// Left chains (eigenvectors are chains of length one) grouped by cluster.
fn left_chains(
    spec: &SpectralData,
    report: &DegeneracyReport,
    chains: &[JordanChain],
) -> Result<Vec<Vec<Vec<CVector>>>> {
    let mut grouped: Vec<Vec<Vec<CVector>>> = vec![Vec::new(); report.clusters.len()];
    for (idx, cl) in report.clusters.iter().enumerate() {
        if cl.kind == DegeneracyKind::Exceptional {
            let mut total = 0;
            for ch in chains {
                if report.find(ch.eigenvalue) == Some(idx) {
                    total += ch.left.len();
                    grouped[idx].push(ch.left.clone());
                }
            }
            if total != cl.algebraic_multiplicity {
                return Err(Error::MissingChain(format!("{}", cl.value)));
            }
        } else {
            for m in &spec.modes {
                if report.find(m.eigenvalue) == Some(idx) {
                    grouped[idx].push(vec![m.left.clone()]);
                }
            }
            if grouped[idx].len() != cl.algebraic_multiplicity {
                return Err(Error::NumericalFailure(format!("eigenvectors missing for cluster {}", cl.value)));
            }
        }
    }
    Ok(grouped)
}

/// `Σ_{m+m'=s} e^{iφ(m'−1)} |w_m⟩⟨u_{m'}|` for `s = 2 … min(N, N')+1`.
fn chain_dyads(w: &[CVector], u: &[CVector], phi: f64) -> Vec<CMatrix> {
    let n = w[0].len();
    let top = w.len().min(u.len()) + 1;
    (2..=top)
        .map(|s| {
            let mut m = CMatrix::zeros(n, n);
            for a in 1..s {
                let b = s - a;
                if a <= w.len() && b <= u.len() {
                    m += &w[a - 1] * u[b - 1].adjoint() * C64::from_polar(1.0, phi * (b as f64 - 1.0));
                }
            }
            m
        })
        .collect()
}

/// Conserved operators built from left eigenvectors and left Jordan chains.
///
/// A ket from the cluster at `λ` pairs with a bra from the cluster at
/// `e^{iφ}λ*`. Simple real eigenvalues give `|L⟩⟨L|`; a cluster paired
/// with a different one gives `(M+M†)/2` and `i(M−M†)/2`; clusters paired
/// with themselves give the Hermitian parts of every chain dyad. `chains`
/// must cover every exceptional cluster of `report`.
pub fn eta_from_spectrum(
    h: &CMatrix,
    spec: &SpectralData,
    report: &DegeneracyReport,
    chains: &[JordanChain],
    rel: Relation,
    tol: f64,
) -> Result<IntertwinerSet> {
    let phi = rel
        .phi()
        .ok_or_else(|| Error::InvalidParameter("spectral construction needs an intertwining relation".into()))?;
    let grouped = left_chains(spec, report, chains)?;
    let rot = C64::from_polar(1.0, phi);
    let mut ops: Vec<CMatrix> = Vec::new();
    for (ci, cl) in report.clusters.iter().enumerate() {
        let di = report.find(rot * cl.value.conj()).ok_or(Error::SpectrumNotSymmetric)?;
        if report.clusters[di].algebraic_multiplicity != cl.algebraic_multiplicity {
            return Err(Error::SpectrumNotSymmetric);
        }
        if di < ci {
            continue;
        }
        for w in &grouped[ci] {
            for u in &grouped[di] {
                for m in chain_dyads(w, u, phi) {
                    if di == ci {
                        ops.extend(hermitian_parts(&m, tol));
                    } else {
                        let md = m.adjoint();
                        ops.push((&m + &md) * c(0.5, 0.0));
                        ops.push((&m - &md) * c(0.0, 0.5));
                    }
                }
            }
        }
    }
    let etas = hermitian_split(&ops, tol);
    Ok(IntertwinerSet::build(etas, h, rel, Construction::Spectral))
}

/// Eigendecomposition, degeneracy classification, Jordan chains and
/// [`eta_from_spectrum`] in one call.
pub fn spectral_route(h: &CMatrix, rel: Relation, tol: f64) -> Result<IntertwinerSet> {
    let spec = eig_biorthogonal(h, tol)?;
    let report = classify_degeneracies(h, &spec, DEFAULT_CLUSTER_TOL)?;
    let mut chains = Vec::new();
    for cl in report.exceptional() {
        chains.extend(jordan_chains(h, cl.value, tol)?);
    }
    eta_from_spectrum(h, &spec, &report, &chains, rel, tol)
}

/// First conserved operator for a symmetry.
///
/// Tries, in order: the (conjugated) linear part when `H = Hᵀ` or the class
/// is chiral, `U L_sym* U†` from a registered unitary equivalence, and the
/// first element of [`solve_relation`]. The first candidate whose residual
/// is at most `tol` is returned.
pub fn seed_eta(h: &CMatrix, sym: &SymmetryDescriptor, tol: f64) -> Result<CMatrix> {
    ensure_square(h)?;
    ensure_finite(h)?;
    let rel = sym.relation();
    let ok = |eta: &CMatrix| frobenius(eta) > 0.0 && verify_relation(eta, h, rel) <= tol;
    let h_norm = frobenius(h).max(1.0);

    if let Some(l) = &sym.linear_part {
        let candidate = if sym.class == SymmetryClass::Chiral { l.clone() } else { l.map(|z| z.conj()) };
        let symmetric = frobenius(&(h - transpose(h))) <= tol * h_norm;
        if (symmetric || sym.class == SymmetryClass::Chiral) && ok(&candidate) {
            return Ok(candidate);
        }
    }
    if let Some(eq) = &sym.equivalence {
        let candidate = &eq.unitary * eq.linear_part.map(|z| z.conj()) * eq.unitary.adjoint();
        if ok(&candidate) {
            return Ok(candidate);
        }
    }
    let solved = solve_relation(h, rel, tol)?;
    solved.elements().iter().find(|e| verify_relation(e, h, rel) <= tol.max(1e-8)).cloned().ok_or(Error::NoSeed)
}

/// Tower `η_{k+1} = e^{iφ/2} η_k H` (or `η_k H` for the chiral and
/// stroboscopic relations).
///
/// The raw product is kept when Hermitian, otherwise its Hermitian parts
/// are; for the chiral relation only parts that still anticommute are
/// kept. Iteration stops once the product lies in the complex span of the
/// earlier ones.
pub fn recursive_tower(eta1: &CMatrix, h: &CMatrix, rel: Relation, tol: f64) -> Result<IntertwinerSet> {
    let n = ensure_square(h)?;
    ensure_finite(h)?;
    ensure_finite(eta1)?;
    if eta1.shape() != h.shape() {
        return Err(Error::DimensionMismatch { expected: n, found: eta1.nrows() });
    }
    let seed_residual = verify_relation(eta1, h, rel);
    if seed_residual.is_nan() || seed_residual > tol {
        return Err(Error::SeedViolatesRelation(seed_residual));
    }
    let step = match rel {
        Relation::Intertwine { phi } => C64::from_polar(1.0, phi / 2.0),
        _ => c(1.0, 0.0),
    };
    // Adjoint-closed relations keep every Hermitian part; the chiral one
    // keeps only parts that still satisfy it.
    let keep_tol = 1e3 * tol.max(f64::EPSILON);

    let mut raw_span = RealSpan::new();
    let mut kept: Vec<CMatrix> = Vec::new();
    let mut kept_span = RealSpan::new();
    let mut raw = eta1.clone();
    for _ in 0..(n * n + 1) {
        let grew_re = raw_span.add(&raw, tol);
        let grew_im = raw_span.add(&(&raw * c(0.0, 1.0)), tol);
        if !(grew_re || grew_im) {
            break;
        }
        let candidates = if is_hermitian(&raw, tol) { vec![raw.clone()] } else { hermitian_parts(&raw, tol) };
        for part in candidates {
            if !rel.adjoint_closed() && verify_relation(&part, h, rel) > keep_tol {
                continue;
            }
            if kept_span.add(&part, tol) {
                kept.push(part);
            }
        }
        raw = &raw * h * step;
        ensure_finite(&raw).map_err(|_| Error::NumericalFailure("tower overflowed".into()))?;
    }
    let etas = OperatorBasis::from_trusted(kept, tol);
    Ok(IntertwinerSet::build(etas, h, rel, Construction::Recursive))
}
