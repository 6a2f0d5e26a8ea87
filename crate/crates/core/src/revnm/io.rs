//! Model files: versioned JSON holding the layout, normalization statistics
//! and every network's weights.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, Sizes};
use super::model::{FeatureLayout, RevnmModel, TargetScales, NET_NAMES};
use super::normalize::MinMax;
use crate::error::{Error, Result};
use crate::Scalar;

pub const FORMAT: &str = "revnm-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetFile {
    name: String,
    sizes: Sizes,
    params: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u32,
    layout: FeatureLayout,
    outputs: Vec<usize>,
    clamp: f64,
    features: MinMax<f64>,
    scales: TargetScales<f64>,
    nets: Vec<NetFile>,
}

pub fn to_json<T: Scalar>(m: &RevnmModel<T>) -> Result<String> {
    let m = m.map::<f64>();
    let file = ModelFile {
        format: FORMAT.into(),
        version: VERSION,
        layout: m.layout(),
        outputs: m.outputs().to_vec(),
        clamp: m.clamp(),
        features: m.features().clone(),
        scales: m.scales().clone(),
        nets: m
            .nets()
            .iter()
            .zip(NET_NAMES)
            .map(|(n, name)| NetFile {
                name: name.into(),
                sizes: n.sizes(),
                params: n.params().to_vec(),
            })
            .collect(),
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn from_json<T: Scalar>(text: &str) -> Result<RevnmModel<T>> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|e| Error::ModelFile(format!("parse error: {e}")))?;
    if file.format != FORMAT {
        return Err(Error::ModelFile(format!("not a model file (format {:?})", file.format)));
    }
    if file.version != VERSION {
        return Err(Error::ModelFile(format!(
            "unsupported version {} (expected {VERSION})",
            file.version
        )));
    }
    if file.nets.len() != 4 {
        return Err(Error::ModelFile(format!("expected 4 networks, found {}", file.nets.len())));
    }
    let mut nets = Vec::with_capacity(4);
    for (nf, name) in file.nets.into_iter().zip(NET_NAMES) {
        if nf.name != name {
            return Err(Error::ModelFile(format!("expected network {name:?}, found {:?}", nf.name)));
        }
        nets.push(Mlp::from_params(nf.sizes, nf.params).map_err(|e| Error::ModelFile(e.to_string()))?);
    }
    let nets: [Mlp<f64>; 4] = nets.try_into().expect("length checked");
    let m = RevnmModel::new(file.layout, file.outputs, file.clamp, file.features, file.scales, nets)
        .map_err(|e| Error::ModelFile(e.to_string()))?;
    Ok(m.map())
}

pub fn save_model<T: Scalar>(m: &RevnmModel<T>, path: &Path) -> Result<()> {
    fs::write(path, to_json(m)?)?;
    Ok(())
}

pub fn load_model<T: Scalar>(path: &Path) -> Result<RevnmModel<T>> {
    from_json(&fs::read_to_string(path)?)
}

/// Loads a model and checks it was built for `layout`.
pub fn load_model_expecting<T: Scalar>(path: &Path, layout: FeatureLayout) -> Result<RevnmModel<T>> {
    let m: RevnmModel<T> = load_model(path)?;
    if m.layout() != layout {
        return Err(Error::ModelFile(format!(
            "feature layout mismatch: file has {:?}, expected {:?}",
            m.layout(),
            layout
        )));
    }
    Ok(m)
}
