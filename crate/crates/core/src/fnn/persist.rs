use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::network::{Dense, NetworkWeights, HIDDEN};
use crate::error::{Error, Result};
use crate::profile::INPUT_DIM;
use crate::scalar::Scalar;

pub const FORMAT_VERSION: u32 = 1;
const FORMAT_NAME: &str = "cosched-fnn";

#[derive(Serialize, Deserialize)]
struct WeightsFile {
    format: String,
    version: u32,
    input_dim: usize,
    hidden: [usize; 2],
    output_dim: usize,
    layer_1: Dense<f64>,
    layer_2: Dense<f64>,
    output: Dense<f64>,
    feature_bounds: Vec<f64>,
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

pub fn weights_to_json<T: Scalar>(w: &NetworkWeights<T>) -> Result<String> {
    w.validate()?;
    let file = WeightsFile {
        format: FORMAT_NAME.into(),
        version: FORMAT_VERSION,
        input_dim: INPUT_DIM,
        hidden: [HIDDEN, HIDDEN],
        output_dim: 1,
        layer_1: w.layer_1.cast(),
        layer_2: w.layer_2.cast(),
        output: w.output.cast(),
        feature_bounds: w.feature_bounds.iter().map(|v| v.as_f64()).collect(),
    };
    let mut s = serde_json::to_string_pretty(&file)?;
    s.push('\n');
    Ok(s)
}

pub fn weights_from_json<T: Scalar>(text: &str) -> Result<NetworkWeights<T>> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    if probe.version != FORMAT_VERSION {
        return Err(Error::Version {
            found: probe.version,
            expected: FORMAT_VERSION,
        });
    }
    let file: WeightsFile = serde_json::from_str(text)?;
    let dim = |field: &str, expected: usize, actual: usize| {
        if expected == actual {
            Ok(())
        } else {
            Err(Error::Dimension {
                field: field.into(),
                expected,
                actual,
            })
        }
    };
    dim("input_dim", INPUT_DIM, file.input_dim)?;
    dim("hidden[0]", HIDDEN, file.hidden[0])?;
    dim("hidden[1]", HIDDEN, file.hidden[1])?;
    dim("output_dim", 1, file.output_dim)?;
    let w = NetworkWeights {
        layer_1: file.layer_1,
        layer_2: file.layer_2,
        output: file.output,
        feature_bounds: file.feature_bounds,
    };
    // Check in f64 first so dimension errors name the layer, then again after narrowing.
    w.validate()?;
    let cast: NetworkWeights<T> = w.cast();
    cast.validate()?;
    Ok(cast)
}

/// Writes the versioned JSON weights document.
pub fn save_weights<T: Scalar>(w: &NetworkWeights<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, weights_to_json(w)?)?;
    Ok(())
}

pub fn load_weights<T: Scalar>(path: impl AsRef<Path>) -> Result<NetworkWeights<T>> {
    weights_from_json(&fs::read_to_string(path)?)
}
