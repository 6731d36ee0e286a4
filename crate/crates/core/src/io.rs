//! JSON and CSV formats.
//!
//! Matrices are `{"n": int, "data": [[[re, im], …], …]}` (row-major),
//! states `{"n": int, "data": [[re, im], …]}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::dynamics::{DriftReport, FloquetDrive, StateVector};
use crate::error::{Error, Result};
use crate::intertwine::IntertwinerSet;
use crate::matrix::{c, CMatrix, CVector};
use crate::models::BuiltModel;
use crate::spectral::{DegeneracyReport, SymmetryClass, SymmetryDescriptor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub n: usize,
    pub data: Vec<Vec<[f64; 2]>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let data = (0..m.nrows()).map(|r| (0..m.ncols()).map(|k| [m[(r, k)].re, m[(r, k)].im]).collect()).collect();
        Self { n: m.nrows(), data }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.n == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be positive".into()));
        }
        if self.data.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.data.len() });
        }
        for row in &self.data {
            if row.len() != self.n {
                return Err(Error::DimensionMismatch { expected: self.n, found: row.len() });
            }
        }
        let m = CMatrix::from_fn(self.n, self.n, |r, k| c(self.data[r][k][0], self.data[r][k][1]));
        crate::matrix::ensure_finite(&m)?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateJson {
    pub n: usize,
    pub data: Vec<[f64; 2]>,
}

impl StateJson {
    pub fn from_state(s: &StateVector) -> Self {
        Self { n: s.dim(), data: s.vector().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn to_state(&self) -> Result<StateVector> {
        if self.data.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, found: self.data.len() });
        }
        StateVector::new(CVector::from_iterator(self.n, self.data.iter().map(|p| c(p[0], p[1]))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryJson {
    pub class: SymmetryClass,
    pub phi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear_part: Option<MatrixJson>,
}

impl SymmetryJson {
    pub fn from_descriptor(d: &SymmetryDescriptor) -> Self {
        Self { class: d.class, phi: d.phi, linear_part: d.linear_part.as_ref().map(MatrixJson::from_matrix) }
    }

    pub fn to_descriptor(&self) -> Result<SymmetryDescriptor> {
        let mut d = SymmetryDescriptor::spectral(self.class, self.phi);
        if let Some(l) = &self.linear_part {
            d.linear_part = Some(l.to_matrix()?);
        }
        Ok(d)
    }
}

/// A matrix file with optional model metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub data: Vec<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Map<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<MatrixJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub symmetries: Vec<SymmetryJson>,
}

impl ModelFile {
    pub fn from_model(m: &BuiltModel) -> Self {
        let mj = MatrixJson::from_matrix(&m.hamiltonian);
        let params = m.params.iter().map(|(k, v)| (k.to_string(), Value::from(*v))).collect();
        Self {
            n: mj.n,
            data: mj.data,
            name: Some(m.name.to_string()),
            params: Some(params),
            seed: Some(MatrixJson::from_matrix(&m.seed)),
            symmetries: m.symmetries.iter().map(SymmetryJson::from_descriptor).collect(),
        }
    }

    pub fn hamiltonian(&self) -> Result<CMatrix> {
        MatrixJson { n: self.n, data: self.data.clone() }.to_matrix()
    }

    pub fn seed(&self) -> Result<Option<CMatrix>> {
        self.seed.as_ref().map(MatrixJson::to_matrix).transpose()
    }

    pub fn symmetries(&self) -> Result<Vec<SymmetryDescriptor>> {
        self.symmetries.iter().map(SymmetryJson::to_descriptor).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentJson {
    pub duration: f64,
    pub hamiltonian: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentsFile {
    pub segments: Vec<SegmentJson>,
}

impl SegmentsFile {
    pub fn to_drive(&self) -> Result<FloquetDrive> {
        let segs =
            self.segments.iter().map(|s| Ok((s.hamiltonian.to_matrix()?, s.duration))).collect::<Result<Vec<_>>>()?;
        FloquetDrive::new(segs)
    }
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::InvalidParameter(format!("malformed JSON: {e}"))
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    serde_json::from_str::<MatrixJson>(text).map_err(parse_err)?.to_matrix()
}

pub fn parse_model_file(text: &str) -> Result<ModelFile> {
    let file: ModelFile = serde_json::from_str(text).map_err(parse_err)?;
    file.hamiltonian()?;
    Ok(file)
}

pub fn parse_state(text: &str) -> Result<StateVector> {
    serde_json::from_str::<StateJson>(text).map_err(parse_err)?.to_state()
}

pub fn parse_segments(text: &str) -> Result<FloquetDrive> {
    serde_json::from_str::<SegmentsFile>(text).map_err(parse_err)?.to_drive()
}

/// Operators from either a single matrix or a list of matrices.
pub fn parse_matrix_list(text: &str) -> Result<Vec<CMatrix>> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany {
        One(MatrixJson),
        Many(Vec<MatrixJson>),
        Set { etas: Vec<EtaJson> },
    }
    match serde_json::from_str::<OneOrMany>(text).map_err(parse_err)? {
        OneOrMany::One(m) => Ok(vec![m.to_matrix()?]),
        OneOrMany::Many(ms) => ms.iter().map(MatrixJson::to_matrix).collect(),
        OneOrMany::Set { etas } => etas.iter().map(|e| e.matrix.to_matrix()).collect(),
    }
}

fn complex_pair(z: crate::C64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaJson {
    pub matrix: MatrixJson,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConserveJson {
    pub relation: crate::intertwine::Relation,
    pub construction: crate::intertwine::Construction,
    pub count: usize,
    pub etas: Vec<EtaJson>,
}

pub fn intertwiner_set_json(set: &IntertwinerSet) -> ConserveJson {
    ConserveJson {
        relation: set.relation,
        construction: set.construction,
        count: set.len(),
        etas: set
            .elements()
            .iter()
            .zip(&set.residuals)
            .map(|(m, r)| EtaJson { matrix: MatrixJson::from_matrix(m), residual: *r })
            .collect(),
    }
}

/// Analysis report: eigenvalues, degeneracy clusters and symmetries.
pub fn analysis_json(eigs: &[crate::C64], report: &DegeneracyReport, syms: &[SymmetryDescriptor]) -> Value {
    let clusters: Vec<Value> = report
        .clusters
        .iter()
        .map(|cl| {
            serde_json::json!({
                "value": complex_pair(cl.value),
                "algebraic_multiplicity": cl.algebraic_multiplicity,
                "geometric_multiplicity": cl.geometric_multiplicity,
                "kind": cl.kind,
                "k_d": cl.k_d(),
                "ep_order": cl.ep_order,
                "spread": cl.spread,
            })
        })
        .collect();
    serde_json::json!({
        "n": eigs.len(),
        "eigenvalues": eigs.iter().map(|z| complex_pair(*z)).collect::<Vec<_>>(),
        "clusters": clusters,
        "symmetries": syms.iter().map(SymmetryJson::from_descriptor).collect::<Vec<_>>(),
    })
}

/// CSV with header `t,norm,eta_1,…,eta_m`, floats to 17 significant digits.
pub fn drift_csv(report: &DriftReport) -> String {
    let mut out = String::from("t,norm");
    for k in 1..=report.eta_series.len() {
        out.push_str(&format!(",eta_{k}"));
    }
    out.push('\n');
    for (i, t) in report.times.iter().enumerate() {
        out.push_str(&format!("{t:.16e},{:.16e}", report.norm_series[i]));
        for s in &report.eta_series {
            out.push_str(&format!(",{:.16e}", s[i]));
        }
        out.push('\n');
    }
    out
}
