//! Biorthogonal eigendecomposition, degeneracy classification and Jordan
//! chains of non-Hermitian matrices, plus symmetry classes read off a
//! spectrum.
//!
//! Eigenvalues come from shifted QR iteration on the Hessenberg form. Eigenvectors are nullspaces
//! of `H − λ` (right) and `H† − λ*` (left) computed per eigenvalue
//! cluster, so degenerate and defective eigenvalues share one code path.
//!
//! Every eigenvector is Dirac-normalized (unit Euclidean norm) and its phase
//! is fixed so that the first component of largest modulus is real and
//! positive.

use std::f64::consts::PI;

use nalgebra::linalg::Hessenberg;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{
    c, ensure_finite, ensure_square, fix_phase, frobenius, min_norm_solve, null_vectors_abs, singular_values, svd,
    CMatrix, CVector, C64, DEFAULT_TOL,
};

/// Default cluster tolerance, relative to `max(1, ‖H‖_F)`.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-8;

/// One eigenvalue with its paired right and left eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub eigenvalue: C64,
    pub right: CVector,
    /// Column vector `|L⟩`; the left eigenvector is its adjoint `⟨L|`.
    pub left: CVector,
    /// `⟨L|R⟩`.
    pub overlap: C64,
    /// Index of the eigenvalue cluster this mode belongs to.
    pub cluster: usize,
    /// The cluster is defective; `right`/`left` span only its geometric
    /// eigenspace and `overlap` is typically ≈ 0.
    pub exceptional: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// All `n` eigenvalues with multiplicity, sorted by real then imaginary part.
    pub eigenvalues: Vec<C64>,
    pub modes: Vec<Mode>,
}

impl SpectralData {
    pub fn is_diagonalizable(&self) -> bool {
        self.modes.len() == self.eigenvalues.len() && self.modes.iter().all(|m| !m.exceptional)
    }

    /// `Σ_k |R_k⟩⟨L_k| / ⟨L_k|R_k⟩`; `None` when defective.
    pub fn resolution_of_identity(&self) -> Option<CMatrix> {
        self.weighted_projectors(|_| C64::new(1.0, 0.0))
    }

    /// `Σ_k ε_k |R_k⟩⟨L_k| / ⟨L_k|R_k⟩`; `None` when defective.
    pub fn reconstruct(&self) -> Option<CMatrix> {
        self.weighted_projectors(|m| m.eigenvalue)
    }

    fn weighted_projectors(&self, w: impl Fn(&Mode) -> C64) -> Option<CMatrix> {
        if !self.is_diagonalizable() {
            return None;
        }
        let n = self.eigenvalues.len();
        let mut out = CMatrix::zeros(n, n);
        for m in &self.modes {
            out += &m.right * m.left.adjoint() * (w(m) / m.overlap);
        }
        Some(out)
    }

    /// Largest `|⟨L_k|R_j⟩|` over pairs of modes in different clusters.
    pub fn biorthogonality_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for a in &self.modes {
            for b in &self.modes {
                if a.cluster != b.cluster {
                    worst = worst.max(a.left.dotc(&b.right).norm());
                }
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DegeneracyKind {
    Nondegenerate,
    Diabolic,
    Exceptional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyCluster {
    pub value: C64,
    pub algebraic_multiplicity: usize,
    pub geometric_multiplicity: usize,
    pub kind: DegeneracyKind,
    /// Largest distance of a member eigenvalue from `value`.
    pub spread: f64,
    /// Size of the largest Jordan block, for exceptional clusters.
    pub ep_order: Option<usize>,
}

impl DegeneracyCluster {
    /// Degeneracy `k_D` of a diabolic cluster.
    pub fn k_d(&self) -> Option<usize> {
        (self.kind == DegeneracyKind::Diabolic).then_some(self.algebraic_multiplicity)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    pub clusters: Vec<DegeneracyCluster>,
    /// Absolute distance used to decide that two clusters coincide.
    pub match_radius: f64,
}

impl DegeneracyReport {
    pub fn exceptional(&self) -> impl Iterator<Item = &DegeneracyCluster> {
        self.clusters.iter().filter(|c| c.kind == DegeneracyKind::Exceptional)
    }

    pub fn diabolic(&self) -> impl Iterator<Item = &DegeneracyCluster> {
        self.clusters.iter().filter(|c| c.kind == DegeneracyKind::Diabolic)
    }

    /// Index of the cluster closest to `z`, if within the match radius
    /// (enlarged by the cluster's own spread).
    pub fn find(&self, z: C64) -> Option<usize> {
        self.clusters
            .iter()
            .enumerate()
            .map(|(i, cl)| (i, (cl.value - z).norm(), cl.spread))
            .filter(|(_, d, s)| *d <= self.match_radius + 2.0 * s)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(i, _, _)| i)
    }
}

/// Generalized eigenvectors at an exceptional eigenvalue.
///
/// `right[m]` satisfies `(H−λ) right[m+1] = right[m]` with `(H−λ) right[0] = 0`;
/// `left` is the corresponding chain of `H†` at `λ*`.
#[derive(Debug, Clone, PartialEq)]
pub struct JordanChain {
    pub eigenvalue: C64,
    pub right: Vec<CVector>,
    pub left: Vec<CVector>,
}

impl JordanChain {
    pub fn len(&self) -> usize {
        self.right.len()
    }

    pub fn is_empty(&self) -> bool {
        self.right.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymmetryClass {
    #[serde(rename = "PT")]
    Pt,
    #[serde(rename = "anti-PT")]
    AntiPt,
    #[serde(rename = "anyonic")]
    Anyonic,
    #[serde(rename = "chiral")]
    Chiral,
    #[serde(rename = "none")]
    None,
}

/// `H = U H_sym U†` where `H_sym` is transpose-symmetric with linear
/// symmetry part `linear_part`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryEquivalence {
    pub unitary: CMatrix,
    pub linear_part: CMatrix,
}

/// An antilinear (or, for `Chiral`, linear) symmetry.
///
/// For the antilinear classes `A = L∘K` with `K` complex conjugation and
/// `AH = e^{iφ}HA`, so the spectrum is closed under `ε ↦ e^{−iφ}ε*`.
/// For `Chiral`, `linear_part` is the operator `Π` with `ΠH = −HΠ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetryDescriptor {
    pub class: SymmetryClass,
    pub phi: f64,
    pub linear_part: Option<CMatrix>,
    pub equivalence: Option<UnitaryEquivalence>,
}

impl SymmetryDescriptor {
    pub fn spectral(class: SymmetryClass, phi: f64) -> Self {
        Self { class, phi: wrap_angle(phi), linear_part: None, equivalence: None }
    }

    pub fn with_linear_part(mut self, l: CMatrix) -> Self {
        self.linear_part = Some(l);
        self
    }

    pub fn with_equivalence(mut self, unitary: CMatrix, linear_part: CMatrix) -> Self {
        self.equivalence = Some(UnitaryEquivalence { unitary, linear_part });
        self
    }
}

/// Angle reduced to `[0, 2π)`.
pub fn wrap_angle(phi: f64) -> f64 {
    let r = phi.rem_euclid(2.0 * PI);
    if r >= 2.0 * PI - 1e-14 {
        0.0
    } else {
        r
    }
}

/// Eigenvalues (with multiplicity), sorted by real then imaginary part.
pub fn eigenvalues(h: &CMatrix) -> Result<Vec<C64>> {
    ensure_square(h)?;
    ensure_finite(h)?;
    if h.nrows() == 0 {
        return Ok(Vec::new());
    }
    let mut eigs = qr_eigenvalues(h)?;
    if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("non-finite eigenvalue".into()));
    }
    eigs.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eigs)
}

fn wilkinson_shift(a: C64, b: C64, cc: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let root = (half * half + b * cc).sqrt();
    let mid = (a + d) * 0.5;
    let (p, q) = (mid + root, mid - root);
    if (p - d).norm() <= (q - d).norm() {
        p
    } else {
        q
    }
}

fn qr_eigenvalues(h: &CMatrix) -> Result<Vec<C64>> {
    let n = h.nrows();
    let mut a = Hessenberg::new(h.clone()).h();
    let scale = frobenius(&a).max(f64::MIN_POSITIVE);
    let eps = f64::EPSILON;
    let mut eigs = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut rot = Vec::with_capacity(n);
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = a[(l - 1, l - 1)].norm() + a[(l, l)].norm();
            if s == 0.0 {
                s = scale;
            }
            if a[(l, l - 1)].norm() <= eps * s {
                a[(l, l - 1)] = C64::new(0.0, 0.0);
                break;
            }
            l -= 1;
        }
        if l == hi {
            eigs.push(a[(hi, hi)]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        if iter > 30 * n.max(10) {
            return Err(Error::NumericalFailure("QR iteration did not converge".into()));
        }
        let mu = if iter.is_multiple_of(10) {
            a[(hi, hi)] + a[(hi, hi - 1)].norm() * 0.75
        } else {
            wilkinson_shift(a[(hi - 1, hi - 1)], a[(hi - 1, hi)], a[(hi, hi - 1)], a[(hi, hi)])
        };
        for i in l..=hi {
            a[(i, i)] -= mu;
        }
        rot.clear();
        for k in l..hi {
            let (x, y) = (a[(k, k)], a[(k + 1, k)]);
            let r = x.norm().hypot(y.norm());
            let (cs, sn) = if r == 0.0 { (C64::new(1.0, 0.0), C64::new(0.0, 0.0)) } else { (x / r, y / r) };
            rot.push((cs, sn));
            for j in k..=hi {
                let (u, v) = (a[(k, j)], a[(k + 1, j)]);
                a[(k, j)] = cs.conj() * u + sn.conj() * v;
                a[(k + 1, j)] = -sn * u + cs * v;
            }
        }
        for (idx, &(cs, sn)) in rot.iter().enumerate() {
            let k = l + idx;
            for i in l..=(k + 1).min(hi) {
                let (u, v) = (a[(i, k)], a[(i, k + 1)]);
                a[(i, k)] = u * cs + v * sn;
                a[(i, k + 1)] = -u * sn.conj() + v * cs.conj();
            }
        }
        for i in l..=hi {
            a[(i, i)] += mu;
        }
    }
    eigs.push(a[(0, 0)]);
    Ok(eigs)
}

#[derive(Debug, Clone)]
pub(crate) struct RawCluster {
    pub members: Vec<usize>,
    pub mean: C64,
    pub spread: f64,
}

fn stats(eigs: &[C64], members: &[usize]) -> (C64, f64) {
    let mean = members.iter().map(|&i| eigs[i]).sum::<C64>() / C64::new(members.len() as f64, 0.0);
    let spread = members.iter().map(|&i| (eigs[i] - mean).norm()).fold(0.0, f64::max);
    (mean, spread)
}

/// Agglomerative clustering of eigenvalues.
///
/// A group of `m` eigenvalues may form one cluster when its spread is at
/// most `scale·cluster_tol^{1/m}`: an exceptional point of order `m`
/// perturbed by rounding `ε` splits by `O(ε^{1/m})`, so a fixed radius
/// would never recognise one. The closest admissible pair merges first.
pub(crate) fn cluster_values(eigs: &[C64], cluster_tol: f64, scale: f64) -> Vec<RawCluster> {
    // Centroid dendrogram, cut top-down: a node is kept whole when its
    // spread fits the radius allowed for its size.
    type Node = (Vec<usize>, Option<(usize, usize)>);
    let mut nodes: Vec<Node> = (0..eigs.len()).map(|i| (vec![i], None)).collect();
    let mut active: Vec<usize> = (0..eigs.len()).collect();
    while active.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for x in 0..active.len() {
            for y in (x + 1)..active.len() {
                let (mx, _) = stats(eigs, &nodes[active[x]].0);
                let (my, _) = stats(eigs, &nodes[active[y]].0);
                let d = (mx - my).norm();
                if d < best.2 {
                    best = (x, y, d);
                }
            }
        }
        let (na, nb) = (active[best.0], active[best.1]);
        let mut members: Vec<usize> = nodes[na].0.iter().chain(&nodes[nb].0).copied().collect();
        members.sort_unstable();
        nodes.push((members, Some((na, nb))));
        active.remove(best.1);
        active[best.0] = nodes.len() - 1;
    }
    let mut clusters = Vec::new();
    let mut stack: Vec<usize> = active;
    while let Some(k) = stack.pop() {
        let (members, children) = &nodes[k];
        let (_, spread) = stats(eigs, members);
        let radius = scale * cluster_tol.powf(1.0 / members.len() as f64);
        match children {
            Some((l, r)) if spread > radius => {
                stack.push(*l);
                stack.push(*r);
            }
            _ => clusters.push(members.clone()),
        }
    }
    let mut out: Vec<RawCluster> = clusters
        .into_iter()
        .map(|members| {
            let (mean, spread) = stats(eigs, &members);
            RawCluster { members, mean, spread }
        })
        .collect();
    out.sort_by(|a, b| a.mean.re.total_cmp(&b.mean.re).then(a.mean.im.total_cmp(&b.mean.im)));
    out
}

fn shifted(h: &CMatrix, z: C64) -> CMatrix {
    let mut a = h.clone();
    for i in 0..a.nrows() {
        a[(i, i)] -= z;
    }
    a
}

/// Singular-value threshold below which `H − λ̄` is treated as singular on
/// a cluster of the given spread.
fn kernel_threshold(h_norm: f64, tol: f64, spread: f64) -> f64 {
    (tol * h_norm).max(2.0 * spread)
}

/// Orthonormal eigenspace of `a` (at least one vector, at most `max`).
fn eigenspace(a: &CMatrix, threshold: f64, max: usize) -> Result<Vec<CVector>> {
    let mut vs = null_vectors_abs(a, threshold)?;
    if vs.is_empty() {
        // Near-exceptional input treated as exceptional: keep the most
        // singular direction.
        let s = svd(a)?;
        let v_t = s.v_t.as_ref().expect("requested V");
        vs.push(v_t.row(v_t.nrows() - 1).adjoint());
    }
    // Keep the most singular directions (null_vectors_abs lists them last).
    while vs.len() > max {
        vs.remove(0);
    }
    Ok(vs)
}

fn gauge(mut v: CVector) -> CVector {
    let n = v.norm();
    if n > 0.0 {
        v /= C64::new(n, 0.0);
    }
    fix_phase(&mut v);
    v
}

/// Eigenvalues with Dirac-normalized right and left eigenvectors.
///
/// Within a diabolic cluster the right vectors are orthonormal and the
/// left vectors biorthogonal to them. Defective clusters return only their
/// geometric eigenspace, flagged `exceptional`.
pub fn eig_biorthogonal(h: &CMatrix, tol: f64) -> Result<SpectralData> {
    let eigs = eigenvalues(h)?;
    let h_norm = frobenius(h);
    let scale = h_norm.max(1.0);
    let clusters = cluster_values(&eigs, DEFAULT_CLUSTER_TOL, scale);
    let hd = h.adjoint();
    let mut modes = Vec::with_capacity(eigs.len());

    for (ci, cl) in clusters.iter().enumerate() {
        let m = cl.members.len();
        let thr = kernel_threshold(h_norm, tol, cl.spread);
        let rights = eigenspace(&shifted(h, cl.mean), thr, m)?;
        let lefts = eigenspace(&shifted(&hd, cl.mean.conj()), thr, m)?;
        let g = rights.len().min(lefts.len());
        let rights = &rights[rights.len() - g..];
        let lefts = &lefts[lefts.len() - g..];
        let exceptional = g < m;

        let value = if m == 1 { eigs[cl.members[0]] } else { cl.mean };
        let rights: Vec<CVector> = rights.iter().cloned().map(gauge).collect();
        let mut lefts: Vec<CVector> = lefts.to_vec();

        if !exceptional {
            // Biorthogonalize: L' = L (S⁻¹)†, S = L†R.
            let r_mat = CMatrix::from_columns(&rights);
            let l_mat = CMatrix::from_columns(&lefts);
            let s = l_mat.adjoint() * &r_mat;
            let inv = s.clone().try_inverse().ok_or_else(|| {
                Error::NumericalFailure("singular left/right overlap in a diagonalizable cluster".into())
            })?;
            let l_new = l_mat * inv.adjoint();
            lefts = l_new.column_iter().map(|col| col.into_owned()).collect();
        }
        let lefts: Vec<CVector> = lefts.into_iter().map(gauge).collect();

        for (r, l) in rights.into_iter().zip(lefts) {
            if !exceptional {
                let res = (h * &r - &r * value).norm();
                if res > tol.max(DEFAULT_TOL) * scale * 1e2 + cl.spread {
                    return Err(Error::NumericalFailure(format!("eigenvector residual {res:.3e} too large")));
                }
            }
            let overlap = l.dotc(&r);
            modes.push(Mode { eigenvalue: value, right: r, left: l, overlap, cluster: ci, exceptional });
        }
    }
    Ok(SpectralData { eigenvalues: eigs, modes })
}

/// Dimension of `ker(A^k)` for `k = 1, 2, …` until it reaches `m`.
fn weyr_dims(a: &CMatrix, m: usize, tol: f64, spread: f64) -> Result<Vec<usize>> {
    let a_norm = frobenius(a).max(f64::MIN_POSITIVE);
    let mut dims = Vec::new();
    let mut power = a.clone();
    for k in 1..=m {
        let thr = tol * a_norm.powi(k as i32) + 2.0 * spread * a_norm.powi(k as i32 - 1);
        let d = singular_values(&power)?.iter().filter(|s| **s <= thr).count().min(m);
        dims.push(d);
        if d >= m {
            break;
        }
        power = &power * a;
    }
    Ok(dims)
}

/// Groups the spectrum of `h` and classifies every cluster.
///
/// Geometric multiplicity is the number of singular values of `H − λ̄` at
/// or below `max(tol·‖H‖, 2·spread)`, clamped to `[1, algebraic]`.
pub fn classify_degeneracies(h: &CMatrix, spec: &SpectralData, cluster_tol: f64) -> Result<DegeneracyReport> {
    let h_norm = frobenius(h);
    let scale = h_norm.max(1.0);
    let raw = cluster_values(&spec.eigenvalues, cluster_tol, scale);
    let mut clusters = Vec::with_capacity(raw.len());
    for cl in &raw {
        let m = cl.members.len();
        let a = shifted(h, cl.mean);
        let thr = kernel_threshold(h_norm, DEFAULT_TOL, cl.spread);
        let nullity = singular_values(&a)?.iter().filter(|s| **s <= thr).count();
        let g = nullity.clamp(1, m);
        let kind = if m == 1 {
            DegeneracyKind::Nondegenerate
        } else if g == m {
            DegeneracyKind::Diabolic
        } else {
            DegeneracyKind::Exceptional
        };
        let ep_order = if kind != DegeneracyKind::Exceptional {
            None
        } else if g == 1 {
            Some(m)
        } else {
            let dims = weyr_dims(&a, m, DEFAULT_TOL, cl.spread)?;
            // The index of the eigenvalue is the first power whose kernel
            // is the whole generalized eigenspace.
            Some(dims.iter().position(|d| *d >= m).map_or(m - g + 1, |k| k + 1))
        };
        let value = if m == 1 { spec.eigenvalues[cl.members[0]] } else { cl.mean };
        clusters.push(DegeneracyCluster {
            value,
            algebraic_multiplicity: m,
            geometric_multiplicity: g,
            kind,
            spread: cl.spread,
            ep_order,
        });
    }
    let match_radius = 10.0 * cluster_tol * scale;
    Ok(DegeneracyReport { clusters, match_radius })
}

/// Forward chain: `v₁ ∈ ker A`, then minimum-norm solutions of
/// `A v_{m+1} = v_m`.
fn forward_chain(a: &CMatrix, len: usize, tol: f64, spread: f64) -> Result<Vec<CVector>> {
    let n = a.nrows();
    let a_norm = frobenius(a);
    let thr = kernel_threshold(a_norm, tol, spread);
    let v1 = eigenspace(a, thr, 1)?.pop().expect("eigenspace is nonempty");
    let mut chain = vec![gauge(v1)];
    while chain.len() < len {
        let last = chain.last().expect("chain is nonempty");
        let (x, residual) = min_norm_solve(a, last, thr)?;
        let allowed = tol * a_norm.max(1.0) * last.norm();
        if residual <= allowed {
            chain.push(x);
            continue;
        }
        if chain.len() + 1 == len && len == n {
            // The chain closes the space: any independent vector will do.
            let basis = CMatrix::from_columns(&chain);
            let extra = null_vectors_abs(&basis.adjoint(), tol)?
                .pop()
                .ok_or_else(|| Error::NumericalFailure("cannot complete chain".into()))?;
            chain.push(extra);
            continue;
        }
        return Err(Error::NoSolution { residual, tol: allowed });
    }
    Ok(chain)
}

fn orthonormal_append(basis: &mut Vec<CVector>, v: &CVector, tol: f64) -> bool {
    let mut r = v.clone();
    for _ in 0..2 {
        for q in basis.iter() {
            let p = q.dotc(&r);
            r -= q * p;
        }
    }
    let rn = r.norm();
    if rn <= tol * v.norm().max(f64::MIN_POSITIVE) {
        return false;
    }
    basis.push(r / C64::new(rn, 0.0));
    true
}

/// All Jordan chains of `A = H − λ` on a generalized eigenspace of
/// dimension `m`, built top-down from the kernels of powers of `A`.
fn top_down_chains(a: &CMatrix, m: usize, tol: f64, spread: f64) -> Result<Vec<Vec<CVector>>> {
    let a_norm = frobenius(a).max(f64::MIN_POSITIVE);
    let dims = weyr_dims(a, m, tol, spread)?;
    let p = dims.len();
    let mut kernels: Vec<Vec<CVector>> = Vec::with_capacity(p + 1);
    kernels.push(Vec::new());
    let mut power = a.clone();
    for (k, d) in dims.iter().enumerate() {
        let thr = tol * a_norm.powi(k as i32 + 1) + 2.0 * spread * a_norm.powi(k as i32);
        let mut vs = null_vectors_abs(&power, thr)?;
        while vs.len() > *d {
            vs.remove(0);
        }
        kernels.push(vs);
        power = &power * a;
    }

    // Tops of chains as (vector, length).
    let mut tops: Vec<(CVector, usize)> = Vec::new();
    for k in (1..=p).rev() {
        let mut covered: Vec<CVector> = Vec::new();
        for v in &kernels[k - 1] {
            orthonormal_append(&mut covered, v, 1e-8);
        }
        for (t, len) in &tops {
            let mut w = t.clone();
            for _ in 0..(len - k) {
                w = a * w;
            }
            orthonormal_append(&mut covered, &w, 1e-8);
        }
        for v in &kernels[k] {
            let before = covered.len();
            if orthonormal_append(&mut covered, v, 1e-6) {
                let new = covered[before].clone();
                tops.push((new, k));
            }
        }
    }
    let mut chains: Vec<Vec<CVector>> = tops
        .into_iter()
        .map(|(t, len)| {
            let mut chain = vec![t];
            for _ in 1..len {
                let next = a * chain.last().expect("nonempty");
                chain.push(next);
            }
            chain.reverse();
            chain
        })
        .collect();
    chains.sort_by_key(|c| std::cmp::Reverse(c.len()));
    Ok(chains)
}

fn locate_cluster(h: &CMatrix, lambda: C64) -> Result<RawCluster> {
    let eigs = eigenvalues(h)?;
    let scale = frobenius(h).max(1.0);
    cluster_values(&eigs, DEFAULT_CLUSTER_TOL, scale)
        .into_iter()
        .min_by(|a, b| (a.mean - lambda).norm().total_cmp(&(b.mean - lambda).norm()))
        .filter(|cl| (cl.mean - lambda).norm() <= 2.0 * cl.spread + 1e-6 * scale)
        .ok_or_else(|| Error::InvalidParameter(format!("{lambda} is not an eigenvalue")))
}

/// All Jordan chains (right and left) of the cluster of `h` around `lambda`.
///
/// `lambda` is snapped to the centre of the computed eigenvalue cluster.
/// Chains are sorted longest first.
pub fn jordan_chains(h: &CMatrix, lambda: C64, tol: f64) -> Result<Vec<JordanChain>> {
    let cl = locate_cluster(h, lambda)?;
    let m = cl.members.len();
    let a = shifted(h, cl.mean);
    let ad = a.adjoint();
    let h_norm = frobenius(h);
    let g = singular_values(&a)?.iter().filter(|s| **s <= kernel_threshold(h_norm, tol, cl.spread)).count().clamp(1, m);
    let (rights, lefts) = if g == 1 {
        (vec![forward_chain(&a, m, tol, cl.spread)?], vec![forward_chain(&ad, m, tol, cl.spread)?])
    } else {
        (top_down_chains(&a, m, tol, cl.spread)?, top_down_chains(&ad, m, tol, cl.spread)?)
    };
    if rights.iter().map(Vec::len).collect::<Vec<_>>() != lefts.iter().map(Vec::len).collect::<Vec<_>>() {
        return Err(Error::NumericalFailure("left and right Jordan structures differ".into()));
    }
    Ok(rights.into_iter().zip(lefts).map(|(right, left)| JordanChain { eigenvalue: cl.mean, right, left }).collect())
}

/// Longest Jordan chain at `lambda` (the eigenvector alone when `lambda`
/// is nondegenerate).
pub fn jordan_chain(h: &CMatrix, lambda: C64, tol: f64) -> Result<JordanChain> {
    Ok(jordan_chains(h, lambda, tol)?.swap_remove(0))
}

/// Is the multiset `eigs` mapped onto itself by `f` (within `atol`)?
fn closed_under(eigs: &[C64], atol: f64, f: impl Fn(C64) -> C64) -> bool {
    let mut used = vec![false; eigs.len()];
    for &z in eigs {
        let target = f(z);
        let best = eigs
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, w)| (j, (w - target).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((j, d)) if d <= atol => used[j] = true,
            _ => return false,
        }
    }
    true
}

/// Symmetry classes under which the spectrum is closed.
///
/// PT: `ε ↦ ε*`; anti-PT: `ε ↦ −ε*`; anyonic(φ): `ε ↦ e^{−iφ}ε*` for
/// `φ ∉ {0, π}`; chiral: `ε ↦ −ε`. Several classes may hold at once.
pub fn spectrum_symmetry(eigs: &[C64], tol: f64) -> Vec<SymmetryDescriptor> {
    if eigs.is_empty() {
        return Vec::new();
    }
    let scale = eigs.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let atol = tol * scale;
    let mut out = Vec::new();
    if closed_under(eigs, atol, |z| z.conj()) {
        out.push(SymmetryDescriptor::spectral(SymmetryClass::Pt, 0.0));
    }
    if closed_under(eigs, atol, |z| -z.conj()) {
        out.push(SymmetryDescriptor::spectral(SymmetryClass::AntiPt, PI));
    }

    // Candidate lines from every pair of equal-modulus eigenvalues.
    let mut candidates: Vec<f64> = Vec::new();
    for a in eigs {
        for b in eigs {
            if a.norm() <= atol || b.norm() <= atol || (a.norm() - b.norm()).abs() > atol {
                continue;
            }
            candidates.push(wrap_angle(-(b / a.conj()).arg()));
        }
    }
    candidates.sort_by(f64::total_cmp);
    let angle_tol = 1e-6_f64.max(tol);
    let near = |x: f64, y: f64| {
        let d = (x - y).rem_euclid(2.0 * PI);
        d.min(2.0 * PI - d) <= angle_tol
    };
    let mut found: Vec<f64> = Vec::new();
    for phi in candidates {
        if near(phi, 0.0) || near(phi, PI) || found.iter().any(|f| near(*f, phi)) {
            continue;
        }
        let rot = C64::from_polar(1.0, -phi);
        if closed_under(eigs, atol, |z| rot * z.conj()) {
            found.push(phi);
        }
    }
    out.extend(found.into_iter().map(|phi| SymmetryDescriptor::spectral(SymmetryClass::Anyonic, phi)));

    if closed_under(eigs, atol, |z| -z) {
        out.push(SymmetryDescriptor::spectral(SymmetryClass::Chiral, 0.0));
    }
    out
}

/// Smallest pairwise eigenvalue distance divided by `max(1, ‖H‖_F)`.
pub fn min_gap(h: &CMatrix) -> Result<f64> {
    let eigs = eigenvalues(h)?;
    let scale = frobenius(h).max(1.0);
    let mut gap = f64::INFINITY;
    for i in 0..eigs.len() {
        for j in (i + 1)..eigs.len() {
            gap = gap.min((eigs[i] - eigs[j]).norm());
        }
    }
    Ok(gap / scale)
}

/// A sharp dip of the eigenvalue gap along a parameter scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanHit {
    pub parameter: f64,
    pub gap: f64,
}

/// Scans `family(x)` over `[lo, hi]` for eigenvalue coalescences.
///
/// Interior local minima of [`min_gap`] on the coarse grid are refined on a
/// grid of spacing `fine`; a minimum is kept when the refined gap is below
/// half the gap at the neighbouring coarse points (square-root or linear
/// cusps pass, smooth avoided crossings do not).
pub fn scan_degeneracies<F>(family: F, lo: f64, hi: f64, coarse: f64, fine: f64) -> Result<Vec<ScanHit>>
where
    F: Fn(f64) -> Result<CMatrix>,
{
    if !(coarse > 0.0 && fine > 0.0 && hi > lo) {
        return Err(Error::InvalidParameter("scan needs lo < hi and positive steps".into()));
    }
    let steps = ((hi - lo) / coarse).ceil() as usize;
    let xs: Vec<f64> = (0..=steps).map(|k| lo + (hi - lo) * k as f64 / steps as f64).collect();
    let gaps = xs.iter().map(|&x| min_gap(&family(x)?)).collect::<Result<Vec<f64>>>()?;
    let mut hits = Vec::new();
    for k in 1..xs.len() - 1 {
        if !(gaps[k] <= gaps[k - 1] && gaps[k] <= gaps[k + 1]) {
            continue;
        }
        let (a, b) = (xs[k - 1], xs[k + 1]);
        let n_fine = ((b - a) / fine).round() as usize;
        let mut best = ScanHit { parameter: xs[k], gap: gaps[k] };
        for j in 0..=n_fine {
            let x = a + fine * j as f64;
            let g = min_gap(&family(x)?)?;
            if g < best.gap {
                best = ScanHit { parameter: x, gap: g };
            }
        }
        if best.gap < 0.5 * gaps[k - 1].min(gaps[k + 1])
            && !hits.iter().any(|h: &ScanHit| (h.parameter - best.parameter).abs() < fine)
        {
            hits.push(best);
        }
    }
    Ok(hits)
}

/// Builds spectral data from explicit modes (for closed-form references).
pub fn spectral_data_from_modes(modes: Vec<Mode>) -> SpectralData {
    let mut eigenvalues: Vec<C64> = modes.iter().map(|m| m.eigenvalue).collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    SpectralData { eigenvalues, modes }
}

/// Complex unit-modulus ratio between two vectors that are parallel, or
/// `None` when they are not parallel to within `tol`.
pub fn parallel_phase(a: &CVector, b: &CVector, tol: f64) -> Option<C64> {
    let p = b.dotc(a);
    let na = a.norm();
    let nb = b.norm();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    let ratio = p / C64::new(nb * nb, 0.0);
    ((a - b * ratio).norm() <= tol * na).then(|| ratio / c(ratio.norm(), 0.0))
}
