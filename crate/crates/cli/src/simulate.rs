//! `metapool simulate`: write synthetic datasets and a manifest.

use std::path::PathBuf;

use metapool_core::statkit::derive_stream;
use metapool_core::{preset_variant, simulate_meta_dataset, IpdSettings, PresetVariant};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::io::write_records;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone)]
pub struct SimulateRequest {
    pub setting: u32,
    pub m: usize,
    pub count: usize,
    pub seed: u64,
    pub variant: PresetVariant,
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub setting: u32,
    pub variant: PresetVariant,
    pub m: usize,
    pub count: usize,
    pub seed: u64,
    pub theta: f64,
    pub tau2: f64,
    pub settings: IpdSettings,
    pub files: Vec<String>,
}

/// Dataset `j` (0-based) is drawn from the stream at path `(setting, m, j)`,
/// the same stream `bench` uses for replication `j` of that cell.
pub fn simulate(req: &SimulateRequest) -> Result<Manifest, CliError> {
    let settings = preset_variant(req.setting, req.variant).map_err(|e| CliError::Validation(e.to_string()))?;
    if req.m < 2 {
        return Err(CliError::Validation(format!("--m must be at least 2, got {}", req.m)));
    }
    if req.count == 0 {
        return Err(CliError::Validation("--count must be at least 1".into()));
    }
    std::fs::create_dir_all(&req.out).map_err(|e| CliError::io(req.out.display(), e))?;
    let width = req.count.to_string().len();
    let mut files = Vec::with_capacity(req.count);
    for j in 0..req.count {
        let mut rng = derive_stream(req.seed, &[req.setting as u64, req.m as u64, j as u64]);
        let (data, _) =
            simulate_meta_dataset(&settings, req.m, &mut rng).map_err(|e| CliError::Estimation(e.to_string()))?;
        let name = format!("dataset_{:0width$}.csv", j + 1);
        let path = req.out.join(&name);
        let file = std::fs::File::create(&path).map_err(|e| CliError::io(path.display(), e))?;
        write_records(data.records(), std::io::BufWriter::new(file)).map_err(|e| CliError::io(path.display(), e))?;
        files.push(name);
    }
    let manifest = Manifest {
        setting: req.setting,
        variant: req.variant,
        m: req.m,
        count: req.count,
        seed: req.seed,
        theta: settings.theta(),
        tau2: settings.tau2(),
        settings,
        files,
    };
    let path = req.out.join(MANIFEST);
    let mut text = serde_json::to_string_pretty(&manifest).expect("serializable manifest");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(path.display(), e))?;
    Ok(manifest)
}
