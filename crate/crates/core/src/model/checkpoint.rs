//! Checkpoint serialization: configuration and flattened parameters in one
//! JSON file.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::ParamSet;

use super::{ModelConfig, TripletClassifier};

const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    format: u32,
    config: ModelConfig,
    params: Vec<f64>,
}

impl TripletClassifier {
    pub fn save_to_writer(&mut self, writer: impl Write) -> Result<()> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT,
            config: self.config.clone(),
            params: self.flatten_params(),
        };
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn save(&mut self, path: &Path) -> Result<()> {
        let out = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut writer = BufWriter::new(out);
        self.save_to_writer(&mut writer)?;
        writer.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn load_from_reader(reader: impl std::io::Read) -> Result<Self> {
        let ckpt: CheckpointFile = serde_json::from_reader(reader)?;
        if ckpt.format != CHECKPOINT_FORMAT {
            return Err(Error::Model(format!(
                "unsupported checkpoint format {}",
                ckpt.format
            )));
        }
        let mut model = TripletClassifier::new(ckpt.config)?;
        model.load_params(&ckpt.params)?;
        Ok(model)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::load_from_reader(BufReader::new(file))
    }
}
