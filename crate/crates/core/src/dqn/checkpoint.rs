use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{Layer, QNet};
use super::train::TrainConfig;
use super::DqnError;
use crate::env::EnvConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"FQN1";
const VERSION: u16 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub env: EnvConfig,
    pub train: TrainConfig,
    pub net: QNet,
}

#[derive(Serialize, Deserialize)]
struct Header {
    env: EnvConfig,
    train: TrainConfig,
    sizes: Vec<usize>,
}

impl Checkpoint {
    /// `FQN1`, u16 version, u32 header length, JSON header, then each layer's
    /// weights and biases as little-endian f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut sizes = vec![self.net.input_len()];
        sizes.extend(self.net.layers.iter().map(|l| l.outputs));
        let header = serde_json::to_vec(&Header { env: self.env.clone(), train: self.train.clone(), sizes })
            .expect("header serializes");
        let mut out = Vec::with_capacity(10 + header.len() + self.net.param_count() * 8);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.net.params() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DqnError> {
        let bad = |m: &str| DqnError::Checkpoint(m.to_string());
        if bytes.len() < 10 || &bytes[..4] != CHECKPOINT_MAGIC {
            return Err(bad("missing FQN1 magic"));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != VERSION {
            return Err(DqnError::Checkpoint(format!("unsupported version {version}")));
        }
        let len = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
        let body = bytes.get(10..10 + len).ok_or_else(|| bad("truncated header"))?;
        let header: Header =
            serde_json::from_slice(body).map_err(|e| DqnError::Checkpoint(e.to_string()))?;
        if header.sizes.len() < 2 {
            return Err(bad("network needs at least one layer"));
        }
        let n_hidden = header.sizes.len() - 2;
        let mut net = QNet::zeros(header.sizes[0], &header.sizes[1..=n_hidden]);
        if net.layers.iter().map(|l: &Layer| l.outputs).collect::<Vec<_>>() != header.sizes[1..] {
            return Err(bad("output layer must have one unit per action"));
        }
        let params = &bytes[10 + len..];
        if params.len() != net.param_count() * 8 {
            return Err(bad("parameter block has the wrong length"));
        }
        let flat: Vec<f64> =
            params.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        net.set_params(&flat);
        Ok(Self { env: header.env, train: header.train, net })
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), DqnError> {
    std::fs::write(path, ckpt.to_bytes())?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, DqnError> {
    Checkpoint::from_bytes(&std::fs::read(path)?)
}
