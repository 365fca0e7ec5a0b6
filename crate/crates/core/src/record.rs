//! JSON measurement records.
//!
//! ```json
//! {
//!   "structure": {"local_dims": [2, 2]},
//!   "observables": [
//!     {"label": "ZZ", "pauli_terms": [[1.0, "ZZ"]]},
//!     {"label": "P", "matrix": [[[1, 0], [0, 0], [0, 0], [0, 0]], ...]}
//!   ],
//!   "values": [0.9, 0.4],
//!   "sigmas": [0.01, 0.02],
//!   "measure": "geometric"
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs. Pauli terms are only valid on qubits.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dual::MeasureKind;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::observables::{parse_pauli_sum, HermitianObservable, HilbertStructure, MeasurementRecord, PauliTermSum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableSpec {
    Dense {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        matrix: Vec<Vec<[f64; 2]>>,
    },
    Pauli {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        pauli_terms: Vec<(f64, String)>,
    },
}

impl ObservableSpec {
    pub fn dense(obs: &HermitianObservable) -> Self {
        let m = obs.matrix();
        ObservableSpec::Dense {
            label: (!obs.label().is_empty()).then(|| obs.label().to_string()),
            matrix: (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        }
    }

    fn build(&self, structure: &HilbertStructure, index: usize) -> Result<HermitianObservable> {
        match self {
            ObservableSpec::Dense { label, matrix } => {
                let n = matrix.len();
                if matrix.iter().any(|row| row.len() != n) {
                    return Err(Error::Record(format!("observable {index}: matrix is not square")));
                }
                if n != structure.total_dim() {
                    return Err(Error::DimensionMismatch(format!(
                        "observable {index}: {n}x{n} matrix on a structure of dimension {}",
                        structure.total_dim()
                    )));
                }
                let m = CMatrix::from_fn(n, n, |i, j| C64::new(matrix[i][j][0], matrix[i][j][1]));
                let label = label.clone().unwrap_or_else(|| format!("A{index}"));
                HermitianObservable::new(structure.clone(), m, label)
            }
            ObservableSpec::Pauli { label, pauli_terms } => {
                if !structure.is_qubits() {
                    return Err(Error::Record(format!(
                        "observable {index}: Pauli terms need a qubit structure, got {structure}"
                    )));
                }
                let op = parse_pauli_sum(&PauliTermSum::new(pauli_terms.iter().cloned()))?;
                if op.structure() != structure {
                    return Err(Error::DimensionMismatch(format!(
                        "observable {index}: Pauli strings act on {} but the record is on {structure}",
                        op.structure()
                    )));
                }
                Ok(match label {
                    Some(l) => op.with_label(l.clone()),
                    None => op,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordFile {
    pub structure: HilbertStructure,
    pub observables: Vec<ObservableSpec>,
    pub values: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureKind>,
}

impl RecordFile {
    /// Dense-matrix file for an in-memory record.
    pub fn from_record(record: &MeasurementRecord, measure: Option<MeasureKind>) -> Self {
        Self {
            structure: record.structure().clone(),
            observables: record.observables.iter().map(ObservableSpec::dense).collect(),
            values: record.values.clone(),
            sigmas: record.sigmas.clone(),
            measure,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Record(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Record(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("records always serialize")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json() + "\n")
            .map_err(|e| Error::Record(format!("{}: {e}", path.display())))
    }

    /// Observables alone, without checking values against them.
    pub fn build_observables(&self) -> Result<Vec<HermitianObservable>> {
        self.observables
            .iter()
            .enumerate()
            .map(|(i, o)| o.build(&self.structure, i))
            .collect()
    }

    /// Builds and validates the observables.
    pub fn to_record(&self) -> Result<MeasurementRecord> {
        MeasurementRecord::new(self.build_observables()?, self.values.clone(), self.sigmas.clone())
    }

    /// The file's measure, or the party-count default.
    pub fn effective_measure(&self) -> MeasureKind {
        self.measure
            .unwrap_or_else(|| MeasureKind::default_for(self.structure.parties()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::observables::bell_correlators;

    #[test]
    fn dense_round_trip_is_bit_identical() {
        let ops = bell_correlators(3, true).unwrap();
        let values = vec![0.1 + 0.2, 1.0 / 3.0, std::f64::consts::PI / 7.0, -2e-17];
        let rec = MeasurementRecord::new(ops, values, Some(vec![0.001; 4])).unwrap();
        let file = RecordFile::from_record(&rec, Some(MeasureKind::Geometric));
        let back = RecordFile::parse(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let rec2 = back.to_record().unwrap();
        assert_eq!(rec2.values, rec.values);
        for (a, b) in rec.observables.iter().zip(&rec2.observables) {
            assert_eq!(a.matrix(), b.matrix());
            assert_eq!(a.label(), b.label());
        }
    }

    #[test]
    fn pauli_file() {
        let text = r#"{
            "structure": {"local_dims": [2, 2, 2, 2]},
            "observables": [
                {"label": "g1", "pauli_terms": [[-1.0, "ZZII"]]},
                {"pauli_terms": [[-1.0, "XXZI"]]}
            ],
            "values": [0.994, 0.849],
            "sigmas": [0.001, 0.003]
        }"#;
        let file = RecordFile::parse(text).unwrap();
        assert_eq!(file.effective_measure(), MeasureKind::Ggm);
        let rec = file.to_record().unwrap();
        assert_eq!(rec.observables[0].label(), "g1");
        let zz = parse_pauli_sum(&PauliTermSum::new([(1.0, "ZZII")])).unwrap();
        assert_eq!(rec.observables[0].matrix(), &(-zz.matrix()));
        assert_eq!(rec.observables[1].label(), "-1*XXZI");
    }

    #[test]
    fn malformed_files() {
        let two = r#""structure": {"local_dims": [2, 2]}"#;
        let cases = [
            format!(r#"{{{two}, "observables": [{{"pauli_terms": [[1.0, "ZZ"]]}}], "values": [0.1, 0.2]}}"#),
            format!(r#"{{{two}, "observables": [{{"pauli_terms": [[1.0, "ZZZ"]]}}], "values": [0.1]}}"#),
            format!(r#"{{{two}, "observables": [{{"matrix": [[[0, 0], [1, 0]], [[0, 0], [0, 0]]]}}], "values": [0.1]}}"#),
            format!(r#"{{{two}, "observables": [{{"pauli_terms": [[1.0, "ZQ"]]}}], "values": [0.1]}}"#),
            r#"{"structure": {"local_dims": [3, 3]}, "observables": [{"pauli_terms": [[1.0, "ZZ"]]}], "values": [0.1]}"#.to_string(),
            r#"{"structure": {"local_dims": [1, 2]}, "observables": [], "values": []}"#.to_string(),
            "not json".to_string(),
        ];
        for text in &cases {
            let res = RecordFile::parse(text).and_then(|f| f.to_record());
            assert!(res.is_err(), "accepted {text}");
        }
        let non_herm = format!(
            r#"{{{two}, "observables": [{{"matrix": [[[0,0],[1,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]}}], "values": [0.1]}}"#
        );
        assert!(matches!(
            RecordFile::parse(&non_herm).unwrap().to_record(),
            Err(Error::NonHermitianInput { .. })
        ));
    }
}
