use std::fs;
use std::path::Path;

use intertwiner::dynamics::{drift_report, floquet_propagator, stroboscopic_etas, stroboscopic_report, StateVector};
use intertwiner::intertwine::{recursive_tower, seed_eta, solve_relation, spectral_route, verify_relation, Relation};
use intertwiner::io::{
    analysis_json, drift_csv, intertwiner_set_json, parse_matrix, parse_matrix_list, parse_model_file, parse_segments,
    parse_state, MatrixJson, ModelFile,
};
use intertwiner::models::{CircuitParams, ModelSpec, SpinModelParams};
use intertwiner::spectral::{
    classify_degeneracies, eig_biorthogonal, spectrum_symmetry, SymmetryClass, SymmetryDescriptor, DEFAULT_CLUSTER_TOL,
};
use intertwiner::{CMatrix, CVector, Error, C64};

use crate::{Cli, Command, Method, ModelName};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonFinite | Error::DimensionMismatch { .. } | Error::InvalidParameter(_) => 1,
            Error::NumericalFailure(_) | Error::NoSolution { .. } | Error::MissingChain(_) => 2,
            Error::SpectrumNotSymmetric | Error::SeedViolatesRelation(_) | Error::NoSeed => 3,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

fn emit(output: Option<&Path>, text: &str) -> CliResult<()> {
    match output {
        Some(p) => write(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

pub fn run(cli: Cli) -> CliResult<()> {
    let tol = cli.tol;
    if !(tol.is_finite() && tol > 0.0) {
        return Err(CliError::input(format!("tolerance must be positive, got {tol}")));
    }
    match cli.command {
        Command::Analyze { matrix, output } => analyze(&matrix, output.as_deref(), tol),
        Command::Conserve { matrix, phi, anticommute, method, seed, output } => {
            conserve(&matrix, phi, anticommute, method, &seed, output.as_deref(), tol)
        }
        Command::Evolve { matrix, state, tmax, steps, etas, gamma_shift, output } => {
            evolve(&matrix, &state, tmax, steps, &etas, gamma_shift, &output)
        }
        Command::Model { name, dim, coupling, gamma, mu, output } => {
            model(name, dim, coupling, gamma, mu, output.as_deref())
        }
        Command::Floquet { segments, periods, state, out_dir } => {
            floquet(&segments, periods, state.as_deref(), &out_dir, tol)
        }
    }
}

fn analyze(path: &Path, output: Option<&Path>, tol: f64) -> CliResult<()> {
    let h = parse_matrix(&read(path)?)?;
    let spec = eig_biorthogonal(&h, tol)?;
    let report = classify_degeneracies(&h, &spec, DEFAULT_CLUSTER_TOL)?;
    // Symmetries are read off cluster centres, so that rounding splits of
    // exceptional points do not hide them.
    let centred: Vec<C64> =
        report.clusters.iter().flat_map(|cl| std::iter::repeat_n(cl.value, cl.algebraic_multiplicity)).collect();
    let syms = spectrum_symmetry(&centred, 100.0 * tol);
    emit(output, &pretty(&analysis_json(&spec.eigenvalues, &report, &syms)))
}

fn choose_relation(phi: Option<f64>, anticommute: bool, file: &ModelFile) -> CliResult<Relation> {
    if anticommute {
        return Ok(Relation::Anticommute);
    }
    if let Some(phi) = phi {
        if !phi.is_finite() {
            return Err(CliError::input("phi must be finite"));
        }
        return Ok(Relation::intertwine(phi));
    }
    Ok(file.symmetries()?.first().map_or(Relation::pt(), SymmetryDescriptor::relation))
}

fn conserve(
    path: &Path,
    phi: Option<f64>,
    anticommute: bool,
    method: Method,
    seed: &str,
    output: Option<&Path>,
    tol: f64,
) -> CliResult<()> {
    let file = parse_model_file(&read(path)?)?;
    let h = file.hamiltonian()?;
    let rel = choose_relation(phi, anticommute, &file)?;
    let set = match method {
        Method::Nullspace => solve_relation(&h, rel, tol)?,
        Method::Spectral => spectral_route(&h, rel, tol)?,
        Method::Recursive => {
            let eta1 =
                if seed == "auto" { auto_seed(&h, &file, rel, tol)? } else { parse_matrix(&read(Path::new(seed))?)? };
            recursive_tower(&eta1, &h, rel, tol)?
        }
    };
    emit(output, &pretty(&intertwiner_set_json(&set)))
}

fn auto_seed(h: &CMatrix, file: &ModelFile, rel: Relation, tol: f64) -> CliResult<CMatrix> {
    if let Some(seed) = file.seed()? {
        if verify_relation(&seed, h, rel) <= tol {
            return Ok(seed);
        }
    }
    let syms = file.symmetries()?;
    let sym = syms.into_iter().find(|s| s.relation() == rel).unwrap_or_else(|| match rel {
        Relation::Anticommute => SymmetryDescriptor::spectral(SymmetryClass::Chiral, 0.0),
        Relation::Intertwine { phi } => {
            SymmetryDescriptor::spectral(SymmetryClass::Anyonic, intertwiner::spectral::wrap_angle(-phi))
        }
        Relation::Stroboscopic => SymmetryDescriptor::spectral(SymmetryClass::None, 0.0),
    });
    Ok(seed_eta(h, &sym, tol)?)
}

fn evolve(
    path: &Path,
    state: &Path,
    tmax: f64,
    steps: usize,
    etas: &Path,
    gamma_shift: f64,
    output: &Path,
) -> CliResult<()> {
    let h = parse_matrix(&read(path)?)?;
    let psi = parse_state(&read(state)?)?;
    let etas = parse_matrix_list(&read(etas)?)?;
    let report = drift_report(&h, &etas, &psi, tmax, steps, gamma_shift)?;
    write(output, &drift_csv(&report))?;
    println!(
        "max_relative_drift={:.3e} precision_floor={:.3e} final_norm={:.6e} etas={} imaginary_flag={}",
        report.max_drift(),
        report.precision_floor.iter().copied().fold(0.0, f64::max),
        report.norm_series.last().copied().unwrap_or(0.0),
        etas.len(),
        report.imaginary_flag
    );
    Ok(())
}

fn model(name: ModelName, dim: usize, coupling: f64, gamma: f64, mu: f64, output: Option<&Path>) -> CliResult<()> {
    let spec = match name {
        ModelName::PtSpin => ModelSpec::PtSpin(SpinModelParams::new(dim, coupling, gamma)?),
        ModelName::HatanoNelson => ModelSpec::HatanoNelson(SpinModelParams::new(dim, coupling, gamma)?),
        ModelName::Circuit => ModelSpec::Circuit(CircuitParams::new(gamma, mu)?),
        ModelName::Dimer => ModelSpec::Dimer { j: coupling, gamma },
    };
    let built = spec.build()?;
    emit(output, &pretty(&ModelFile::from_model(&built)))
}

fn floquet(path: &Path, periods: usize, state: Option<&Path>, out_dir: &Path, tol: f64) -> CliResult<()> {
    let drive = parse_segments(&read(path)?)?;
    let g = floquet_propagator(&drive)?;
    let set = stroboscopic_etas(&g, tol)?;
    let psi = match state {
        Some(p) => parse_state(&read(p)?)?,
        None => {
            let n = drive.dim();
            StateVector::new(CVector::from_element(n, C64::new(1.0 / (n as f64).sqrt(), 0.0)))?
        }
    };
    let report = stroboscopic_report(&g, drive.period(), set.elements(), &psi, periods)?;
    fs::create_dir_all(out_dir).map_err(|e| CliError::input(format!("{}: {e}", out_dir.display())))?;
    write(&out_dir.join("floquet_propagator.json"), &pretty(&MatrixJson::from_matrix(&g)))?;
    write(&out_dir.join("stroboscopic_etas.json"), &pretty(&intertwiner_set_json(&set)))?;
    write(&out_dir.join("stroboscopic.csv"), &drift_csv(&report))?;
    println!(
        "period={:.6e} stroboscopic_etas={} max_relative_drift={:.3e}",
        drive.period(),
        set.len(),
        report.max_drift()
    );
    Ok(())
}
