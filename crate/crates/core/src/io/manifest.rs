//! Per-run manifest: the full config echo, the physics conventions in
//! force, convergence metadata, produced files and timings.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::RunConfig;

pub const ARTIFACT: &str = "photonsrc";

/// Convention ledger entries carried by every manifest.
pub const CONVENTIONS: [(&str, &str); 4] = [
    (
        "frame",
        "interaction picture at the drive frequency; two-photon model on resonance \
         (atomic transition at twice the cavity frequency), standard JC detuned by \
         delta = omega - omega_p (default delta = g); spectra omit the free (n-1)omega offset",
    ),
    (
        "collapse_scalings",
        "sqrt(2 Gamma) sigma_minus, sqrt(2 kappa) a, sqrt(Gamma_phi) sigma_z; kappa = 1",
    ),
    (
        "g2_normalization",
        "pulsed g2(0) = int <a+ a+ a a> dt / int <a+ a>^2 dt; purity = 1 - g2(0); \
         indistinguishability = int int |<a+(t) a(t+tau)>|^2 / int int <n(t)><n(t+tau)>",
    ),
    (
        "efficiency",
        "E = kappa int <a+ a> dt, the photon flux through one mirror of a cavity whose \
         field decays at 2 kappa in total",
    ),
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub command: String,
    /// Config in the input schema, defaults filled in; accepted by `--config`.
    pub config: serde_json::Value,
    pub conventions: BTreeMap<String, String>,
    pub status: String,
    pub failure: Option<String>,
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
    pub convergence: serde_json::Value,
    /// Wall-clock seconds per stage.
    pub timings: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(command: &str, cfg: &RunConfig) -> Self {
        Self {
            artifact: ARTIFACT.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: cfg.to_json(),
            conventions: CONVENTIONS
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            status: "running".to_string(),
            failure: None,
            outputs: Vec::new(),
            warnings: Vec::new(),
            convergence: serde_json::Value::Null,
            timings: BTreeMap::new(),
        }
    }
}

pub fn write_manifest(manifest: &RunManifest, path: &Path) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(manifest).map_err(|e| Error::Serialize(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::parse_config_or_manifest;

    #[test]
    fn manifest_echo_reparses_to_the_same_config() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig::default();
        cfg.numerics.fock_cutoff = Some(8);
        let mut m = RunManifest::new("pulse", &cfg);
        m.status = "failed".into();
        m.failure = Some("cutoff too small".into());
        let path = dir.path().join("manifest.json");
        write_manifest(&m, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(parse_config_or_manifest(&text).unwrap(), cfg);
        let back: RunManifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.conventions.len(), 4);
        assert_eq!(back.failure.as_deref(), Some("cutoff too small"));
    }
}
