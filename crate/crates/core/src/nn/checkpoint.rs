//! JSON checkpoint for autoencoder parameters.
//!
//! ```json
//! { "magic": "R2R-CAE", "version": 1,
//!   "arch": { "input": {..}, "channels": [..], "kernel": 3, "stride": 2, "latent_dim": 128 },
//!   "values": [ ...flat parameters in layout order... ] }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, AutoencoderParams};
use crate::error::{R2rError, Result};

pub const MAGIC: &str = "R2R-CAE";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    magic: String,
    version: u32,
    arch: Architecture,
    values: Vec<f64>,
}

pub fn to_json(params: &AutoencoderParams) -> Result<String> {
    Ok(serde_json::to_string(&Checkpoint {
        magic: MAGIC.into(),
        version: VERSION,
        arch: params.architecture().clone(),
        values: params.values().to_vec(),
    })?)
}

pub fn from_json(text: &str) -> Result<AutoencoderParams> {
    let ck: Checkpoint = serde_json::from_str(text)?;
    if ck.magic != MAGIC {
        return Err(R2rError::Format {
            offset: 0,
            reason: format!("bad checkpoint magic {:?}", ck.magic),
        });
    }
    if ck.version != VERSION {
        return Err(R2rError::Format {
            offset: 0,
            reason: format!("unsupported checkpoint version {}", ck.version),
        });
    }
    AutoencoderParams::from_values(ck.arch, ck.values)
}

pub fn save(params: &AutoencoderParams, path: &Path) -> Result<()> {
    std::fs::write(path, to_json(params)?)?;
    Ok(())
}

pub fn load(path: &Path) -> Result<AutoencoderParams> {
    from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Shape3;
    use rand::SeedableRng;

    #[test]
    fn round_trip_is_exact() {
        let arch = Architecture {
            input: Shape3::new(1, 8, 8),
            channels: vec![2],
            kernel: 3,
            stride: 2,
            latent_dim: 4,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let p = AutoencoderParams::init(&arch, &mut rng).unwrap();
        let back = from_json(&to_json(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        let bad = to_json(&p).unwrap().replace(MAGIC, "NOPE");
        assert!(from_json(&bad).is_err());
    }
}
