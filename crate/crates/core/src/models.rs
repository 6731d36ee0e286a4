//! Named model Hamiltonians with their symmetries and first conserved
//! operators.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::matrix::{c, expm, frobenius, identity, kron, pauli, transpose, CMatrix, CVector, C64};
use crate::spectral::{spectral_data_from_modes, Mode, SpectralData, SymmetryClass, SymmetryDescriptor};

/// Parameters of the spin-`j` gain–loss models, `D = 2j + 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpinModelParams {
    pub d: usize,
    pub j: f64,
    pub gamma: f64,
}

impl SpinModelParams {
    pub fn new(d: usize, j: f64, gamma: f64) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
        }
        if !(j.is_finite() && j > 0.0) {
            return Err(Error::InvalidParameter(format!("coupling J must be positive, got {j}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gain-loss γ must be non-negative, got {gamma}")));
        }
        Ok(Self { d, j, gamma })
    }

    /// `θ` with `sin θ = γ/J`, in the unbroken regime.
    pub fn theta(&self) -> Option<f64> {
        (self.gamma <= self.j).then(|| (self.gamma / self.j).asin())
    }

    /// `β` with `cosh β = γ/J`, in the broken regime.
    pub fn beta(&self) -> Option<f64> {
        (self.gamma >= self.j).then(|| (self.gamma / self.j).acosh())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinOperators {
    pub sx: CMatrix,
    pub sy: CMatrix,
    pub sz: CMatrix,
}

impl SpinOperators {
    /// Rotation `R_x(θ) = exp(−iS_xθ)`.
    pub fn rx(&self, theta: f64) -> Result<CMatrix> {
        expm(&(&self.sx * c(0.0, -theta)))
    }
}

/// Angular-momentum matrices for `j = (D−1)/2` in the basis
/// `m = j, j−1, …, −j`, built from ladder operators.
pub fn spin_matrices(d: usize) -> Result<SpinOperators> {
    if d < 2 {
        return Err(Error::InvalidParameter(format!("dimension must be at least 2, got {d}")));
    }
    let j = (d as f64 - 1.0) / 2.0;
    let mut raise = CMatrix::zeros(d, d);
    for k in 1..d {
        let m = j - k as f64;
        raise[(k - 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower) * c(0.5, 0.0);
    let sy = (&raise - &lower) * c(0.0, -0.5);
    let sz = CMatrix::from_diagonal(&CVector::from_iterator(d, (0..d).map(|k| c(j - k as f64, 0.0))));
    Ok(SpinOperators { sx, sy, sz })
}

/// `antidiag(1, …, 1)`.
pub fn parity(d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |r, col| if r + col + 1 == d { c(1.0, 0.0) } else { c(0.0, 0.0) })
}

/// `H_D = J S_x + iγ S_z` with the PT descriptor `L = P_D`.
pub fn build_pt_spin(p: &SpinModelParams) -> (CMatrix, SymmetryDescriptor) {
    let s = spin_matrices(p.d).expect("validated dimension");
    let h = &s.sx * c(p.j, 0.0) + &s.sz * c(0.0, p.gamma);
    let sym = SymmetryDescriptor::spectral(SymmetryClass::Pt, 0.0).with_linear_part(parity(p.d));
    (h, sym)
}

/// Regime of the closed-form `D = 3` eigen-data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum H3Regime {
    /// `γ/J = sin θ ≤ 1`.
    Unbroken { theta: f64 },
    /// `γ/J = cosh β ≥ 1`.
    Broken { beta: f64 },
}

/// Closed-form eigen-data of `H₃` (eigenvalues in units of `J`); left
/// vectors are the transposes of the right ones.
pub fn h3_reference(regime: H3Regime) -> SpectralData {
    let s2 = 2f64.sqrt();
    let (triples, values): (Vec<[C64; 3]>, Vec<C64>) = match regime {
        H3Regime::Unbroken { theta } => {
            let e = |t: f64| C64::from_polar(0.5, t);
            let n0 = 1.0 / (2.0 * (1.0 + theta.sin().powi(2))).sqrt();
            (
                vec![
                    [e(theta), c(s2 / 2.0, 0.0), e(-theta)],
                    [e(-theta), c(-s2 / 2.0, 0.0), e(theta)],
                    [c(-n0, 0.0), c(0.0, s2 * theta.sin() * n0), c(n0, 0.0)],
                ],
                vec![c(theta.cos(), 0.0), c(-theta.cos(), 0.0), c(0.0, 0.0)],
            )
        }
        H3Regime::Broken { beta } => {
            let np = 1.0 / (2.0 * (1.0 + (2.0 * beta).cosh())).sqrt();
            let n0 = 1.0 / (2.0 * (1.0 + beta.cosh().powi(2))).sqrt();
            (
                vec![
                    [c(-beta.exp() * np, 0.0), c(0.0, s2 * np), c((-beta).exp() * np, 0.0)],
                    [c(-(-beta).exp() * np, 0.0), c(0.0, s2 * np), c(beta.exp() * np, 0.0)],
                    [c(-n0, 0.0), c(0.0, s2 * beta.cosh() * n0), c(n0, 0.0)],
                ],
                vec![c(0.0, beta.sinh()), c(0.0, -beta.sinh()), c(0.0, 0.0)],
            )
        }
    };
    let modes = triples
        .into_iter()
        .zip(values)
        .enumerate()
        .map(|(k, (t, eigenvalue))| {
            let right = CVector::from_vec(t.to_vec());
            let left = right.map(|z| z.conj());
            let overlap = right.iter().map(|z| z * z).sum::<C64>();
            Mode { eigenvalue, right, left, overlap, cluster: k, exceptional: false }
        })
        .collect();
    spectral_data_from_modes(modes)
}

/// Hatano–Nelson Hamiltonian with its map onto `H_D`.
#[derive(Debug, Clone, PartialEq)]
pub struct HatanoNelson {
    pub hamiltonian: CMatrix,
    /// `R_x(−π/2)`, with `H_HN = R_x(−π/2) H_D R_x(π/2)`.
    pub unitary: CMatrix,
    /// `R_x(−π/2) P_D R_x(π/2)`.
    pub seed: CMatrix,
    pub symmetry: SymmetryDescriptor,
}

/// `H_HN = J S_x + iγ S_y`.
pub fn build_hatano_nelson(p: &SpinModelParams) -> Result<HatanoNelson> {
    let s = spin_matrices(p.d)?;
    let h = &s.sx * c(p.j, 0.0) + &s.sy * c(0.0, p.gamma);
    let u = s.rx(-PI / 2.0)?;
    let (h_d, _) = build_pt_spin(p);
    let mapped = &u * h_d * u.adjoint();
    let err = frobenius(&(&mapped - &h));
    if err > 1e-12 * frobenius(&h).max(1.0) {
        return Err(Error::NumericalFailure(format!("unitary equivalence residual {err:.3e}")));
    }
    let pd = parity(p.d);
    let seed = &u * &pd * u.adjoint();
    // A = U (P∘K) U† = (U P Uᵀ)∘K.
    let symmetry = SymmetryDescriptor::spectral(SymmetryClass::Pt, 0.0)
        .with_linear_part(&u * &pd * transpose(&u))
        .with_equivalence(u.clone(), pd);
    Ok(HatanoNelson { hamiltonian: h, unitary: u, seed, symmetry })
}

/// Two `LC` oscillators with balanced gain and loss coupled by a mutual
/// inductance; `γ = ω₀L/R`, `μ = M/L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitParams {
    pub gamma: f64,
    pub mu: f64,
}

impl CircuitParams {
    pub fn new(gamma: f64, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && (0.0..1.0).contains(&mu)) {
            return Err(Error::InvalidParameter(format!("mutual inductance μ must lie in [0, 1), got {mu}")));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gain-loss γ must be non-negative, got {gamma}")));
        }
        Ok(Self { gamma, mu })
    }

    /// Upper exceptional point `1/√(1−μ) + 1/√(1+μ)`.
    pub fn gamma0(&self) -> f64 {
        1.0 / (1.0 - self.mu).sqrt() + 1.0 / (1.0 + self.mu).sqrt()
    }

    /// Lower exceptional point `1/√(1−μ) − 1/√(1+μ)`.
    pub fn gamma_pt(&self) -> f64 {
        1.0 / (1.0 - self.mu).sqrt() - 1.0 / (1.0 + self.mu).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    /// `H/(ω₀/2)`.
    pub hamiltonian: CMatrix,
    /// `𝟙₂⊗σ_x`.
    pub seed: CMatrix,
    pub symmetry: SymmetryDescriptor,
}

/// The circuit Hamiltonian in units of `ω₀/2`.
pub fn build_circuit(p: &CircuitParams) -> Result<Circuit> {
    let p = CircuitParams::new(p.gamma, p.mu)?;
    let (g, g0, gpt) = (p.gamma, p.gamma0(), p.gamma_pt());
    let rows = [[-2.0 * g, 0.0, g0, -gpt], [0.0, 2.0 * g, -gpt, g0], [-g0, gpt, 0.0, 0.0], [gpt, -g0, 0.0, 0.0]];
    let h = CMatrix::from_fn(4, 4, |r, col| c(0.0, rows[r][col]));

    let (sx, sy, sz) = pauli();
    let id = identity(2);
    let tensor =
        kron(&sy, &(&id * c(g0, 0.0) - &sx * c(gpt, 0.0))) * c(-1.0, 0.0) - kron(&(&id + &sz), &sz) * c(0.0, g);
    let err = frobenius(&(&tensor - &h));
    if err > 1e-14 * frobenius(&h).max(1.0) {
        return Err(Error::NumericalFailure(format!("circuit matrix disagrees with tensor form by {err:.3e}")));
    }

    // U H U† is transpose-symmetric for U = exp(iπσ_z/4)⊗𝟙.
    let back = kron(&expm(&(&sz * c(0.0, -PI / 4.0)))?, &id);
    let seed = kron(&id, &sx);
    let symmetry = SymmetryDescriptor::spectral(SymmetryClass::Pt, 0.0)
        .with_linear_part(kron(&sz, &sx))
        .with_equivalence(back, seed.clone());
    Ok(Circuit { hamiltonian: h, seed, symmetry })
}

/// `H₂ = (Jσ_x + iγσ_z)/2` with its PT (`σ_x`), anti-PT (`σ_z`) and chiral
/// (`σ_y`) descriptors.
pub fn build_dimer(j: f64, gamma: f64) -> Result<(CMatrix, Vec<SymmetryDescriptor>)> {
    if !(j.is_finite() && j > 0.0) {
        return Err(Error::InvalidParameter(format!("coupling J must be positive, got {j}")));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gain-loss γ must be non-negative, got {gamma}")));
    }
    let (sx, sy, sz) = pauli();
    let h = (&sx * c(j, 0.0) + &sz * c(0.0, gamma)) * c(0.5, 0.0);
    let syms = vec![
        SymmetryDescriptor::spectral(SymmetryClass::Pt, 0.0).with_linear_part(sx),
        SymmetryDescriptor::spectral(SymmetryClass::AntiPt, PI).with_linear_part(sz),
        SymmetryDescriptor::spectral(SymmetryClass::Chiral, 0.0).with_linear_part(sy),
    ];
    Ok((h, syms))
}

/// A model selected by name, as exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelSpec {
    PtSpin(SpinModelParams),
    HatanoNelson(SpinModelParams),
    Circuit(CircuitParams),
    Dimer { j: f64, gamma: f64 },
}

/// A built model: Hamiltonian, first conserved operator and symmetries.
#[derive(Debug, Clone, PartialEq)]
pub struct BuiltModel {
    pub name: &'static str,
    pub params: Vec<(&'static str, f64)>,
    pub hamiltonian: CMatrix,
    pub seed: CMatrix,
    pub symmetries: Vec<SymmetryDescriptor>,
}

impl ModelSpec {
    pub const NAMES: [&'static str; 4] = ["pt-spin", "hatano-nelson", "circuit", "dimer"];

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::PtSpin(_) => "pt-spin",
            ModelSpec::HatanoNelson(_) => "hatano-nelson",
            ModelSpec::Circuit(_) => "circuit",
            ModelSpec::Dimer { .. } => "dimer",
        }
    }

    pub fn build(&self) -> Result<BuiltModel> {
        let name = self.name();
        match *self {
            ModelSpec::PtSpin(p) => {
                let (h, sym) = build_pt_spin(&p);
                Ok(BuiltModel {
                    name,
                    params: vec![("dim", p.d as f64), ("coupling", p.j), ("gamma", p.gamma)],
                    hamiltonian: h,
                    seed: parity(p.d),
                    symmetries: vec![sym],
                })
            }
            ModelSpec::HatanoNelson(p) => {
                let hn = build_hatano_nelson(&p)?;
                Ok(BuiltModel {
                    name,
                    params: vec![("dim", p.d as f64), ("coupling", p.j), ("gamma", p.gamma)],
                    hamiltonian: hn.hamiltonian,
                    seed: hn.seed,
                    symmetries: vec![hn.symmetry],
                })
            }
            ModelSpec::Circuit(p) => {
                let circ = build_circuit(&p)?;
                Ok(BuiltModel {
                    name,
                    params: vec![("gamma", p.gamma), ("mu", p.mu)],
                    hamiltonian: circ.hamiltonian,
                    seed: circ.seed,
                    symmetries: vec![circ.symmetry],
                })
            }
            ModelSpec::Dimer { j, gamma } => {
                let (h, syms) = build_dimer(j, gamma)?;
                Ok(BuiltModel {
                    name,
                    params: vec![("coupling", j), ("gamma", gamma)],
                    hamiltonian: h,
                    seed: pauli().0,
                    symmetries: syms,
                })
            }
        }
    }
}
