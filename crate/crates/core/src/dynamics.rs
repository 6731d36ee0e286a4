//! Non-unitary evolution, conservation drift, passive (identity-shifted)
//! Hamiltonians and piecewise-constant Floquet drives.
//!
//! State norms are never renormalized: their growth or decay is part of
//! the signal.

use crate::error::{Error, Result};
use crate::intertwine::{recursive_tower, solve_relation, IntertwinerSet, Relation};
use crate::matrix::{c, ensure_finite, ensure_square, expm, frobenius, identity, CMatrix, CVector};
use crate::spectral::eigenvalues;

/// A pure state `|ψ⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    psi: CVector,
}

impl StateVector {
    pub fn new(psi: CVector) -> Result<Self> {
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        if psi.norm() == 0.0 {
            return Err(Error::InvalidParameter("state has zero norm".into()));
        }
        Ok(Self { psi })
    }

    pub fn vector(&self) -> &CVector {
        &self.psi
    }

    pub fn dim(&self) -> usize {
        self.psi.len()
    }

    /// `⟨ψ|ψ⟩`.
    pub fn norm(&self) -> f64 {
        self.psi.norm_squared()
    }

    /// `⟨ψ|A|ψ⟩`.
    pub fn expectation(&self, a: &CMatrix) -> crate::C64 {
        self.psi.dotc(&(a * &self.psi))
    }
}

fn check_dims(h: &CMatrix, psi: &StateVector) -> Result<usize> {
    let n = ensure_square(h)?;
    if psi.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: psi.dim() });
    }
    Ok(n)
}

/// `exp(−iHt)|ψ₀⟩`.
pub fn evolve(h: &CMatrix, psi0: &StateVector, t: f64) -> Result<StateVector> {
    check_dims(h, psi0)?;
    ensure_finite(h)?;
    if !t.is_finite() {
        return Err(Error::InvalidParameter("time must be finite".into()));
    }
    let g = expm(&(h * c(0.0, -t)))?;
    let psi = g * psi0.vector();
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure("state overflowed".into()));
    }
    Ok(StateVector { psi })
}

/// Time series of `e^{2Γt}⟨ψ(t)|η|ψ(t)⟩` for a set of operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftReport {
    pub times: Vec<f64>,
    /// Raw `⟨ψ(t)|ψ(t)⟩`.
    pub norm_series: Vec<f64>,
    /// One series per operator.
    pub eta_series: Vec<Vec<f64>>,
    /// `max_t |s(t) − s(0)| / max(|s(0)|, floor)` per operator.
    pub max_relative_drift: Vec<f64>,
    /// Double-precision error floor of each drift, relative to `|s(0)|`.
    pub precision_floor: Vec<f64>,
    pub gamma_shift: f64,
    /// Largest `|Im⟨ψ|η|ψ⟩|` relative to the value's scale.
    pub imaginary_residue: f64,
    /// Set when the imaginary residue exceeds `1e-12`.
    pub imaginary_flag: bool,
}

impl DriftReport {
    pub fn max_drift(&self) -> f64 {
        self.max_relative_drift.iter().copied().fold(0.0, f64::max)
    }
}

const IMAGINARY_LIMIT: f64 = 1e-12;

fn build_report(times: Vec<f64>, states: &[CVector], etas: &[CMatrix], gamma: f64) -> DriftReport {
    let norm_series: Vec<f64> = states.iter().map(|s| s.norm_squared()).collect();
    let mut eta_series = Vec::with_capacity(etas.len());
    let mut max_relative_drift = Vec::with_capacity(etas.len());
    let mut precision_floor = Vec::with_capacity(etas.len());
    let mut imaginary_residue: f64 = 0.0;
    for eta in etas {
        let eta_norm = frobenius(eta);
        let mut series = Vec::with_capacity(times.len());
        let mut magnitude: f64 = 0.0;
        for ((t, psi), norm) in times.iter().zip(states).zip(&norm_series) {
            let scale = (2.0 * gamma * t).exp();
            let raw = psi.dotc(&(eta * psi));
            let reference = raw.re.abs().max(eta_norm * norm);
            if reference > 0.0 {
                imaginary_residue = imaginary_residue.max(raw.im.abs() / reference);
            }
            magnitude = magnitude.max(eta_norm * norm * scale);
            series.push(scale * raw.re);
        }
        let s0 = series.first().copied().unwrap_or(0.0);
        let floor = (1e-12 * eta_norm * norm_series.first().copied().unwrap_or(0.0)).max(f64::MIN_POSITIVE);
        let denom = s0.abs().max(floor);
        let drift = series.iter().map(|s| (s - s0).abs()).fold(0.0, f64::max) / denom;
        max_relative_drift.push(drift);
        precision_floor.push(f64::EPSILON * magnitude / denom);
        eta_series.push(series);
    }
    DriftReport {
        times,
        norm_series,
        eta_series,
        max_relative_drift,
        precision_floor,
        gamma_shift: gamma,
        imaginary_residue,
        imaginary_flag: imaginary_residue > IMAGINARY_LIMIT,
    }
}

/// Evolves `ψ₀` under `h` on the grid `t_j = j·t_max/(steps−1)` and records
/// `e^{2Γt}⟨ψ(t)|η|ψ(t)⟩` for each `η`.
///
/// `h` is the Hamiltonian actually generating the evolution; for a passive
/// system `h = H − iΓ𝟙` and `gamma_shift = Γ` undoes the uniform decay.
/// Each grid point uses a fresh exponential, so errors do not accumulate.
pub fn drift_report(
    h: &CMatrix,
    etas: &[CMatrix],
    psi0: &StateVector,
    t_max: f64,
    steps: usize,
    gamma_shift: f64,
) -> Result<DriftReport> {
    let n = check_dims(h, psi0)?;
    ensure_finite(h)?;
    if steps < 2 {
        return Err(Error::InvalidParameter("at least two time steps are required".into()));
    }
    if !(t_max.is_finite() && gamma_shift.is_finite()) {
        return Err(Error::InvalidParameter("time and shift must be finite".into()));
    }
    for eta in etas {
        if eta.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: eta.nrows() });
        }
    }
    let times: Vec<f64> = (0..steps).map(|j| t_max * j as f64 / (steps - 1) as f64).collect();
    let states = times.iter().map(|&t| evolve(h, psi0, t).map(|s| s.psi)).collect::<Result<Vec<CVector>>>()?;
    Ok(build_report(times, &states, etas, gamma_shift))
}

/// Intensity decay rates `−2 Im ε_k`, ascending, of a passive Hamiltonian.
pub fn slow_mode_rates(h_passive: &CMatrix, tol: f64) -> Result<Vec<f64>> {
    let eigs = eigenvalues(h_passive)?;
    let scale = frobenius(h_passive).max(1.0);
    if eigs.iter().any(|z| z.im > tol * scale) {
        return Err(Error::InvalidParameter("Hamiltonian has amplifying modes".into()));
    }
    let mut rates: Vec<f64> = eigs.iter().map(|z| -2.0 * z.im).collect();
    rates.sort_by(f64::total_cmp);
    Ok(rates)
}

/// Piecewise-constant periodic drive `(H_i, τ_i)`, applied in order.
#[derive(Debug, Clone, PartialEq)]
pub struct FloquetDrive {
    segments: Vec<(CMatrix, f64)>,
}

impl FloquetDrive {
    pub fn new(segments: Vec<(CMatrix, f64)>) -> Result<Self> {
        let first = segments.first().ok_or_else(|| Error::InvalidParameter("drive has no segments".into()))?;
        let n = ensure_square(&first.0)?;
        for (h, tau) in &segments {
            if h.shape() != (n, n) {
                return Err(Error::DimensionMismatch { expected: n, found: h.nrows() });
            }
            ensure_finite(h)?;
            if !(tau.is_finite() && *tau > 0.0) {
                return Err(Error::InvalidParameter(format!("segment duration must be positive, got {tau}")));
            }
        }
        Ok(Self { segments })
    }

    pub fn segments(&self) -> &[(CMatrix, f64)] {
        &self.segments
    }

    pub fn dim(&self) -> usize {
        self.segments[0].0.nrows()
    }

    pub fn period(&self) -> f64 {
        self.segments.iter().map(|(_, tau)| tau).sum()
    }
}

/// `G_F = e^{−iH_mτ_m} ⋯ e^{−iH_1τ_1}`: the earliest segment acts first
/// (rightmost).
pub fn floquet_propagator(drive: &FloquetDrive) -> Result<CMatrix> {
    let mut g = identity(drive.dim());
    for (h, tau) in drive.segments() {
        g = expm(&(h * c(0.0, -tau)))? * g;
    }
    ensure_finite(&g).map_err(|_| Error::NumericalFailure("propagator overflowed".into()))?;
    Ok(g)
}

/// Propagator `K(t)` from `0` to `t` within one period.
pub fn micromotion(drive: &FloquetDrive, t: f64) -> Result<CMatrix> {
    let period = drive.period();
    let slack = 1e-12 * period;
    if !(t >= -slack && t <= period + slack) {
        return Err(Error::InvalidParameter(format!("time {t} outside [0, {period}]")));
    }
    let mut k = identity(drive.dim());
    let mut elapsed = 0.0;
    for (h, tau) in drive.segments() {
        let step = (t - elapsed).clamp(0.0, *tau);
        if step > 0.0 {
            k = expm(&(h * c(0.0, -step)))? * k;
        }
        elapsed += tau;
        if elapsed >= t {
            break;
        }
    }
    Ok(k)
}

/// Hermitian solutions of `G†ηG = η`.
pub fn stroboscopic_etas(g: &CMatrix, tol: f64) -> Result<IntertwinerSet> {
    solve_relation(g, Relation::Stroboscopic, tol)
}

/// Tower `η_{k+1} = η_k G` from a seed satisfying `G†ηG = η`, Hermitian-split
/// at every step.
pub fn stroboscopic_tower(seed: &CMatrix, g: &CMatrix, tol: f64) -> Result<IntertwinerSet> {
    recursive_tower(seed, g, Relation::Stroboscopic, tol)
}

/// `⟨ψ(pT)|η|ψ(pT)⟩` for `p = 0 … periods`.
pub fn stroboscopic_report(
    g: &CMatrix,
    period: f64,
    etas: &[CMatrix],
    psi0: &StateVector,
    periods: usize,
) -> Result<DriftReport> {
    let n = check_dims(g, psi0)?;
    for eta in etas {
        if eta.shape() != (n, n) {
            return Err(Error::DimensionMismatch { expected: n, found: eta.nrows() });
        }
    }
    let mut states = Vec::with_capacity(periods + 1);
    let mut psi = psi0.vector().clone();
    states.push(psi.clone());
    for _ in 0..periods {
        psi = g * psi;
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NumericalFailure("state overflowed".into()));
        }
        states.push(psi.clone());
    }
    let times = (0..=periods).map(|p| p as f64 * period).collect();
    Ok(build_report(times, &states, etas, 0.0))
}
