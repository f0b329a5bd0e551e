//! JSON wire formats. Complex entries travel as `[re, im]` pairs and
//! matrices as row-major nested arrays, so files survive a round trip
//! bit-for-bit and stay diffable.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::linalg::{c, ComplexMatrix, DensityMatrix, DEFAULT_TOL};
use crate::network::Network;
use crate::states::MeasurementCollection;

/// Validation slack for loaded states: hand-authored files carry fewer
/// digits than freshly computed matrices.
const LOAD_TOL: f64 = 1e-7;

#[derive(Serialize, Deserialize)]
struct StateFile {
    dims: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize, Deserialize)]
struct MeasurementsFile {
    dims: Vec<usize>,
    /// One list of observables per party, each a square matrix on that
    /// party's dimension.
    observables: Vec<Vec<Vec<Vec<[f64; 2]>>>>,
}

#[derive(Serialize, Deserialize)]
struct NetworkFile {
    parties: usize,
    sources: Vec<Vec<usize>>,
}

fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<[f64; 2]>> {
    (0..m.rows())
        .map(|i| {
            (0..m.cols())
                .map(|j| {
                    let v = m.get(i, j);
                    [v.re, v.im]
                })
                .collect()
        })
        .collect()
}

fn rows_to_matrix(rows: &[Vec<[f64; 2]>]) -> Result<ComplexMatrix> {
    let converted: Vec<Vec<_>> = rows
        .iter()
        .map(|r| r.iter().map(|[re, im]| c(*re, *im)).collect())
        .collect();
    ComplexMatrix::from_rows(&converted)
}

pub fn state_to_string(rho: &DensityMatrix) -> Result<String> {
    let file = StateFile {
        dims: rho.dims().to_vec(),
        matrix: matrix_to_rows(rho.matrix()),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn state_from_str(s: &str) -> Result<DensityMatrix> {
    let file: StateFile = serde_json::from_str(s)?;
    DensityMatrix::new(file.dims, rows_to_matrix(&file.matrix)?, LOAD_TOL)
}

pub fn save_state(path: &Path, rho: &DensityMatrix) -> Result<()> {
    fs::write(path, state_to_string(rho)?)?;
    Ok(())
}

pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    state_from_str(&fs::read_to_string(path)?)
}

pub fn measurements_to_string(m: &MeasurementCollection) -> Result<String> {
    let file = MeasurementsFile {
        dims: m.dims().to_vec(),
        observables: (0..m.n_parties())
            .map(|i| m.party_observables(i).iter().map(matrix_to_rows).collect())
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn measurements_from_str(s: &str) -> Result<MeasurementCollection> {
    let file: MeasurementsFile = serde_json::from_str(s)?;
    let per_party = file
        .observables
        .iter()
        .map(|obs| obs.iter().map(|rows| rows_to_matrix(rows)).collect())
        .collect::<Result<Vec<Vec<_>>>>()?;
    MeasurementCollection::new(file.dims, per_party, DEFAULT_TOL)
}

pub fn save_measurements(path: &Path, m: &MeasurementCollection) -> Result<()> {
    fs::write(path, measurements_to_string(m)?)?;
    Ok(())
}

pub fn load_measurements(path: &Path) -> Result<MeasurementCollection> {
    measurements_from_str(&fs::read_to_string(path)?)
}

pub fn network_to_string(g: &Network) -> Result<String> {
    let file = NetworkFile {
        parties: g.n_parties(),
        sources: g.sources().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn network_from_str(s: &str) -> Result<Network> {
    let file: NetworkFile = serde_json::from_str(s)?;
    Network::new(file.parties, file.sources)
}

pub fn save_network(path: &Path, g: &Network) -> Result<()> {
    fs::write(path, network_to_string(g)?)?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<Network> {
    network_from_str(&fs::read_to_string(path)?)
}
