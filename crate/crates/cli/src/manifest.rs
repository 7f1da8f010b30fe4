use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Written next to every output file so a run can be checked and replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub version: String,
    pub rng: String,
    pub seed: Option<u64>,
    /// Configuration with every default filled in.
    pub config: Value,
    pub inputs: Vec<FileDigest>,
    pub output: Option<FileDigest>,
    /// Command line after the program name.
    pub args: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a file, recording its digest.
pub fn read_input(path: &Path, inputs: &mut Vec<FileDigest>) -> CliResult<Vec<u8>> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    inputs.push(FileDigest { path: path.display().to_string(), sha256: sha256_hex(&bytes) });
    Ok(bytes)
}

pub fn read_text(path: &Path, inputs: &mut Vec<FileDigest>) -> CliResult<String> {
    String::from_utf8(read_input(path, inputs)?)
        .map_err(|_| CliError::parse(format!("{}: not valid UTF-8", path.display())))
}

/// `<output>.manifest.json`
pub fn default_manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `bytes` to `output` (stdout when `None`) and the manifest next to it.
pub fn emit(
    bytes: &[u8],
    output: Option<&Path>,
    manifest_path: Option<&Path>,
    mut manifest: RunManifest,
) -> CliResult<()> {
    match output {
        Some(path) => {
            fs::write(path, bytes).map_err(|e| CliError::io(path, e))?;
            manifest.output =
                Some(FileDigest { path: path.display().to_string(), sha256: sha256_hex(bytes) });
        }
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes).and_then(|_| out.flush()).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            manifest.output = Some(FileDigest { path: "-".into(), sha256: sha256_hex(bytes) });
        }
    }
    let target = manifest_path.map(Path::to_path_buf).or_else(|| output.map(default_manifest_path));
    if let Some(target) = target {
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        fs::write(&target, text).map_err(|e| CliError::io(&target, e))?;
    }
    Ok(())
}

pub fn load(path: &Path) -> CliResult<RunManifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
}
