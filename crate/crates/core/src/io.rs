//! JSON files for states, processes and run metadata.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, CVector, MatrixJson};
use crate::state::{ChoiProcess, DensityMatrix, PureState};
use crate::{seed, VERSION};

/// Payload of a state file, tagged by `kind`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "data", rename_all = "lowercase")]
pub enum StateData {
    /// Amplitudes as `[re, im]` pairs.
    Pure(Vec<[f64; 2]>),
    Density(MatrixJson),
    /// Unit-trace Choi matrix of a two-qubit process.
    Choi(MatrixJson),
}

/// `{"qubits": n, "kind": ..., "data": ..., "success_scale": s, "metadata": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    pub qubits: usize,
    #[serde(flatten)]
    pub data: StateData,
    /// Present only for processes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub success_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

/// Any object a state file can hold.
#[derive(Debug, Clone)]
pub enum QuantumObject {
    Pure(PureState),
    Density(DensityMatrix),
    Process(ChoiProcess),
}

impl QuantumObject {
    /// Density-matrix view of a state; processes are rejected.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        match self {
            QuantumObject::Pure(p) => p.to_density(),
            QuantumObject::Density(d) => Ok(d.clone()),
            QuantumObject::Process(_) => Err(Error::invalid("expected a state, found a process")),
        }
    }
}

impl StateFile {
    pub fn from_object(object: &QuantumObject) -> Self {
        match object {
            QuantumObject::Pure(p) => StateFile {
                qubits: p.qubits(),
                data: StateData::Pure(p.amplitudes().iter().map(|z| [z.re, z.im]).collect()),
                success_scale: None,
                metadata: None,
            },
            QuantumObject::Density(d) => StateFile {
                qubits: d.qubits(),
                data: StateData::Density(d.matrix().into()),
                success_scale: None,
                metadata: None,
            },
            QuantumObject::Process(chi) => StateFile {
                qubits: 4,
                data: StateData::Choi(chi.matrix().into()),
                success_scale: Some(chi.success_scale()),
                metadata: None,
            },
        }
    }

    pub fn with_metadata(mut self, metadata: Value) -> Self {
        self.metadata = Some(metadata);
        self
    }

    /// Validates the payload against `qubits` and the object's invariants.
    pub fn to_object(&self) -> Result<QuantumObject> {
        let dim = 1usize
            .checked_shl(self.qubits as u32)
            .filter(|_| self.qubits >= 1)
            .ok_or_else(|| Error::invalid(format!("bad qubit count {}", self.qubits)))?;
        let object = match &self.data {
            StateData::Pure(amps) => {
                if amps.len() != dim {
                    return Err(Error::invalid(format!(
                        "{} amplitudes for {} qubits",
                        amps.len(),
                        self.qubits
                    )));
                }
                if amps.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::invalid("amplitudes must be finite"));
                }
                let v = CVector::from_iterator(dim, amps.iter().map(|[re, im]| Complex64::new(*re, *im)));
                QuantumObject::Pure(PureState::new(v)?)
            }
            StateData::Density(m) => {
                let m = CMatrix::try_from(m)?;
                if m.shape() != (dim, dim) {
                    return Err(Error::invalid(format!(
                        "density matrix is {}x{}, expected {dim}x{dim}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
                QuantumObject::Density(DensityMatrix::new(m)?)
            }
            StateData::Choi(m) => {
                if self.qubits != 4 {
                    return Err(Error::invalid("a Choi file has qubits = 4"));
                }
                let scale = self
                    .success_scale
                    .ok_or_else(|| Error::invalid("Choi file needs success_scale"))?;
                QuantumObject::Process(ChoiProcess::new(CMatrix::try_from(m)?, scale)?)
            }
        };
        Ok(object)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty-printed JSON with a trailing newline. Floats use the shortest
/// representation that parses back to the same double.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn read_object(path: &Path) -> Result<QuantumObject> {
    read_json::<StateFile>(path)?.to_object()
}

pub fn write_object(path: &Path, object: &QuantumObject, metadata: Option<Value>) -> Result<()> {
    let mut file = StateFile::from_object(object);
    file.metadata = metadata;
    write_json(path, &file)
}

/// Metadata block recorded in every output file.
pub fn run_metadata(command: &str, config: Value, seed: Option<u64>) -> Value {
    json!({
        "tool": "nlconv",
        "version": VERSION,
        "command": command,
        "config": config,
        "seed": seed,
        "generator": seed::GENERATOR,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gate::{self, PresetName, TargetKind};

    #[test]
    fn pure_file_schema() {
        let psi = gate::target_state(TargetKind::PsiPlus);
        let file = StateFile::from_object(&QuantumObject::Pure(psi.clone()));
        let v = serde_json::to_value(&file).unwrap();
        assert_eq!(v["qubits"], 2);
        assert_eq!(v["kind"], "pure");
        assert_eq!(v["data"].as_array().unwrap().len(), 4);
        let back: StateFile = serde_json::from_value(v).unwrap();
        match back.to_object().unwrap() {
            QuantumObject::Pure(p) => assert!((p.overlap_fidelity(&psi) - 1.0).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn choi_round_trip_is_exact() {
        let chi = gate::ideal_choi(gate::preset(PresetName::Dicke).settings).unwrap();
        let file = StateFile::from_object(&QuantumObject::Process(chi.clone()));
        let text = serde_json::to_string(&file).unwrap();
        let back: StateFile = serde_json::from_str(&text).unwrap();
        match back.to_object().unwrap() {
            QuantumObject::Process(p) => {
                assert_eq!(p.matrix(), chi.matrix());
                assert_eq!(p.success_scale(), chi.success_scale());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mismatched_dimensions_rejected() {
        let text = r#"{"qubits": 2, "kind": "pure", "data": [[1, 0], [0, 0]]}"#;
        let file: StateFile = serde_json::from_str(text).unwrap();
        assert!(matches!(file.to_object(), Err(Error::InvalidArgument(_))));
        let text = r#"{"qubits": 1, "kind": "mixed", "data": []}"#;
        assert!(serde_json::from_str::<StateFile>(text).is_err());
    }
}
