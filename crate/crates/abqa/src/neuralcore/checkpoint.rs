//! Named-tensor checkpoint files: a versioned JSON container holding a
//! model kind, free-form metadata, and a list of (name, shape, values)
//! tensors. Loading validates the header, shapes, and finiteness.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::neuralcore::{ParamGroup, Tensor};
use crate::{Error, Result};

const FORMAT: &str = "abqa-checkpoint";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct NamedTensor {
    name: String,
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    format: String,
    version: u32,
    pub kind: String,
    pub meta: BTreeMap<String, serde_json::Value>,
    tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    /// Builds a checkpoint from a parameter group.
    pub fn from_params<P: ParamGroup>(
        kind: &str,
        meta: BTreeMap<String, serde_json::Value>,
        params: &P,
    ) -> Checkpoint {
        Checkpoint {
            format: FORMAT.to_string(),
            version: VERSION,
            kind: kind.to_string(),
            meta,
            tensors: params
                .tensors()
                .into_iter()
                .map(|(name, t)| NamedTensor {
                    name,
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn tensor_names(&self) -> Vec<&str> {
        self.tensors.iter().map(|t| t.name.as_str()).collect()
    }

    /// Returns the named tensor, reconstructing shape and data.
    pub fn tensor(&self, name: &str) -> Result<Tensor> {
        let t = self
            .tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Model(format!("checkpoint has no tensor named {name:?}")))?;
        Tensor::from_vec(&t.shape, t.data.clone())
    }

    /// Metadata value parsed as usize.
    pub fn meta_usize(&self, key: &str) -> Result<usize> {
        self.meta
            .get(key)
            .and_then(|v| v.as_u64())
            .map(|v| v as usize)
            .ok_or_else(|| Error::Model(format!("checkpoint metadata missing {key:?}")))
    }

    /// Copies checkpoint tensors into an existing parameter group by name.
    /// Every group tensor must be present with a matching shape.
    pub fn apply_to<P: ParamGroup>(&self, params: &mut P) -> Result<()> {
        let expected: Vec<(String, Vec<usize>)> = params
            .tensors()
            .into_iter()
            .map(|(n, t)| (n, t.shape().to_vec()))
            .collect();
        let mut values = Vec::with_capacity(expected.len());
        for (name, shape) in &expected {
            let t = self.tensor(name)?;
            t.expect_shape(shape, name)?;
            values.push(t);
        }
        for (dst, src) in params.tensors_mut().into_iter().zip(values) {
            dst.data_mut().copy_from_slice(src.data());
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.format != FORMAT {
            return Err(Error::Model(format!(
                "not a checkpoint file (format {:?})",
                self.format
            )));
        }
        if self.version != VERSION {
            return Err(Error::Model(format!(
                "unsupported checkpoint version {} (expected {VERSION})",
                self.version
            )));
        }
        for t in &self.tensors {
            let expected: usize = t.shape.iter().product();
            if t.data.len() != expected {
                return Err(Error::Model(format!(
                    "tensor {:?}: shape {:?} needs {expected} values, found {}",
                    t.name,
                    t.shape,
                    t.data.len()
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Model(format!("tensor {:?} holds non-finite values", t.name)));
            }
        }
        Ok(())
    }
}

/// Writes a checkpoint for `params` under the given kind and metadata.
pub fn save_checkpoint<P: ParamGroup>(
    path: &Path,
    kind: &str,
    meta: BTreeMap<String, serde_json::Value>,
    params: &P,
) -> Result<()> {
    let cp = Checkpoint::from_params(kind, meta, params);
    let json = serde_json::to_string(&cp)
        .map_err(|e| Error::Model(format!("cannot serialize checkpoint: {e}")))?;
    fs::write(path, json)?;
    Ok(())
}

/// Reads and validates a checkpoint file.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = fs::read_to_string(path)?;
    let cp: Checkpoint = serde_json::from_str(&text)
        .map_err(|e| Error::Model(format!("cannot parse checkpoint {}: {e}", path.display())))?;
    cp.validate()?;
    Ok(cp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralcore::GruCellParams;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_restores_parameters_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = GruCellParams::new(3, 4, &mut rng);
        let mut meta = BTreeMap::new();
        meta.insert("hidden".to_string(), serde_json::json!(4));
        save_checkpoint(&path, "gru-test", meta, &params).unwrap();

        let cp = load_checkpoint(&path).unwrap();
        assert_eq!(cp.kind, "gru-test");
        assert_eq!(cp.meta_usize("hidden").unwrap(), 4);
        let mut restored = GruCellParams::zeros(3, 4);
        cp.apply_to(&mut restored).unwrap();
        assert_eq!(restored, params);
    }

    #[test]
    fn shape_mismatch_on_restore_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = GruCellParams::new(3, 4, &mut rng);
        save_checkpoint(&path, "gru-test", BTreeMap::new(), &params).unwrap();
        let cp = load_checkpoint(&path).unwrap();
        let mut wrong = GruCellParams::zeros(5, 4);
        assert!(cp.apply_to(&mut wrong).is_err());
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(&path, "{}").unwrap();
        assert!(load_checkpoint(&path).is_err());
        std::fs::write(&path, "not json at all").unwrap();
        assert!(load_checkpoint(&path).is_err());
        let bad = serde_json::json!({
            "format": "abqa-checkpoint",
            "version": 1,
            "kind": "x",
            "meta": {},
            "tensors": [{"name": "t", "shape": [2, 2], "data": [1.0, 2.0]}]
        });
        std::fs::write(&path, bad.to_string()).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
