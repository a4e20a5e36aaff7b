//! Human-editable TOML registry of reconstructors and distance assets.
//!
//! ```toml
//! [[reconstructors]]
//! id = "sd14"
//! kind = "neural"
//! asset = "models/sd14-3c5a9f21.onnx"   # relative to this file
//! sha256 = "3c5a9f21…"
//! native_side = 512
//! downsampling = 8
//! training_corpus = "laion-aesthetics"
//!
//! [[reconstructors]]
//! id = "classical-aa"
//! kind = "classical"
//! native_side = 64
//! downsampling = 8
//! prefilter = "gaussian:k=3,sigma=0.8"
//! upsample = "bilinear"
//!
//! [[distance_assets]]
//! id = "lpips-vgg"
//! backbone = "models/lpips-vgg-0a1b2c3d.onnx"
//! backbone_sha256 = "…"
//! heads = "models/lpips-vgg-heads.json"
//! heads_sha256 = "…"
//! ```

use std::collections::HashSet;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::filters::FilterSpec;
use crate::onnx::InputRange;
use crate::reconstruct::{
    ClassicalSpec, HandleKind, NeuralSpec, Reconstructor, ReconstructorHandle, Upsample,
};

/// Environment variable that overrides the registry path.
pub const REGISTRY_ENV: &str = "HFI_REGISTRY";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegistry {
    #[serde(default)]
    reconstructors: Vec<RawReconstructor>,
    #[serde(default)]
    distance_assets: Vec<RawDistanceAsset>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReconstructor {
    id: String,
    kind: String,
    native_side: usize,
    downsampling: usize,
    #[serde(default = "unknown_corpus")]
    training_corpus: String,
    asset: Option<PathBuf>,
    sha256: Option<String>,
    input_range: Option<InputRange>,
    prefilter: Option<String>,
    upsample: Option<String>,
}

fn unknown_corpus() -> String {
    "unknown".into()
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDistanceAsset {
    id: String,
    backbone: PathBuf,
    backbone_sha256: String,
    heads: PathBuf,
    heads_sha256: String,
    input_range: Option<InputRange>,
    eps: Option<f64>,
}

/// A perceptual-distance backbone with its per-stage linear heads.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceAsset {
    pub id: String,
    pub backbone: PathBuf,
    pub backbone_sha256: String,
    pub heads: PathBuf,
    pub heads_sha256: String,
    pub input_range: InputRange,
    /// Stabilizer added to feature norms before channel normalization.
    pub eps: f64,
}

/// Result of checking one asset file against its recorded checksum.
#[derive(Clone, Debug, PartialEq)]
pub struct AssetCheck {
    pub id: String,
    pub path: PathBuf,
    pub status: AssetStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AssetStatus {
    Ok,
    Missing,
    ChecksumMismatch { expected: String, actual: String },
}

impl AssetCheck {
    pub fn problem(&self) -> Option<String> {
        match &self.status {
            AssetStatus::Ok => None,
            AssetStatus::Missing => Some(format!("`{}`: missing file {}", self.id, self.path.display())),
            AssetStatus::ChecksumMismatch { expected, actual } => Some(format!(
                "`{}`: checksum mismatch for {} (expected {expected}, found {actual})",
                self.id,
                self.path.display()
            )),
        }
    }
}

/// Parsed registry.
#[derive(Clone, Debug, Default)]
pub struct Registry {
    pub path: PathBuf,
    pub reconstructors: Vec<ReconstructorHandle>,
    pub distance_assets: Vec<DistanceAsset>,
}

/// Hex SHA-256 of a file.
pub fn sha256_file(path: &Path) -> std::io::Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

/// Conventional asset filename: `<id>-<first 8 hex of sha256>.onnx`.
pub fn asset_file_name(id: &str, sha256: &str) -> String {
    format!("{id}-{}.onnx", &sha256[..sha256.len().min(8)])
}

fn check(id: &str, path: &Path, expected: &str) -> AssetCheck {
    let status = match sha256_file(path) {
        Err(_) => AssetStatus::Missing,
        Ok(actual) if actual.eq_ignore_ascii_case(expected) => AssetStatus::Ok,
        Ok(actual) => AssetStatus::ChecksumMismatch { expected: expected.to_string(), actual },
    };
    AssetCheck { id: id.to_string(), path: path.to_path_buf(), status }
}

impl Registry {
    /// Parses and structurally validates a registry without touching asset files.
    pub fn parse(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_str(&text, path)
    }

    /// Parses registry text; relative asset paths resolve against `path`'s directory.
    pub fn parse_str(text: &str, path: &Path) -> Result<Self> {
        let registry_err =
            |problems: Vec<String>| Error::Registry { path: path.to_path_buf(), problems };
        let raw: RawRegistry = toml::from_str(text).map_err(|e| registry_err(vec![e.to_string()]))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };

        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        let mut reconstructors = Vec::new();
        for r in raw.reconstructors {
            if !seen.insert(r.id.clone()) {
                problems.push(format!("duplicate id `{}`", r.id));
                continue;
            }
            let kind = match r.kind.as_str() {
                "neural" => match (&r.asset, &r.sha256) {
                    (Some(asset), Some(sha)) => HandleKind::Neural(NeuralSpec {
                        asset: resolve(asset),
                        sha256: sha.clone(),
                        input_range: r.input_range.unwrap_or_default(),
                    }),
                    _ => {
                        problems.push(format!("`{}`: neural entries need `asset` and `sha256`", r.id));
                        continue;
                    }
                },
                "classical" => {
                    let prefilter = match r.prefilter.as_deref().map(str::parse::<FilterSpec>).transpose() {
                        Ok(p) => p,
                        Err(e) => {
                            problems.push(format!("`{}`: {e}", r.id));
                            continue;
                        }
                    };
                    let upsample = match r.upsample.as_deref().unwrap_or("bilinear").parse::<Upsample>() {
                        Ok(u) => u,
                        Err(e) => {
                            problems.push(format!("`{}`: {e}", r.id));
                            continue;
                        }
                    };
                    HandleKind::Classical(ClassicalSpec { prefilter, upsample })
                }
                other => {
                    problems.push(format!("`{}`: unknown kind `{other}`", r.id));
                    continue;
                }
            };
            let handle = ReconstructorHandle {
                id: r.id,
                kind,
                native_side: r.native_side,
                downsampling: r.downsampling,
                training_corpus: r.training_corpus,
            };
            match handle.validate() {
                Ok(()) => reconstructors.push(handle),
                Err(e) => problems.push(e.to_string()),
            }
        }

        let mut distance_assets = Vec::new();
        for d in raw.distance_assets {
            if !seen.insert(d.id.clone()) {
                problems.push(format!("duplicate id `{}`", d.id));
                continue;
            }
            distance_assets.push(DistanceAsset {
                backbone: resolve(&d.backbone),
                heads: resolve(&d.heads),
                id: d.id,
                backbone_sha256: d.backbone_sha256,
                heads_sha256: d.heads_sha256,
                input_range: d.input_range.unwrap_or_default(),
                eps: d.eps.unwrap_or(1e-10),
            });
        }

        if problems.is_empty() {
            Ok(Self { path: path.to_path_buf(), reconstructors, distance_assets })
        } else {
            Err(registry_err(problems))
        }
    }

    /// Parses the registry and verifies every asset checksum.
    pub fn load(path: &Path) -> Result<Self> {
        let registry = Self::parse(path)?;
        let problems: Vec<String> = registry.verify().iter().filter_map(AssetCheck::problem).collect();
        if problems.is_empty() {
            Ok(registry)
        } else {
            Err(Error::Registry { path: path.to_path_buf(), problems })
        }
    }

    /// Checksums every asset file. Classical handles involve no I/O.
    pub fn verify(&self) -> Vec<AssetCheck> {
        let mut out = Vec::new();
        for h in &self.reconstructors {
            if let HandleKind::Neural(n) = &h.kind {
                out.push(check(&h.id, &n.asset, &n.sha256));
            }
        }
        for d in &self.distance_assets {
            out.push(check(&d.id, &d.backbone, &d.backbone_sha256));
            out.push(check(&d.id, &d.heads, &d.heads_sha256));
        }
        out
    }

    pub fn handle(&self, id: &str) -> Option<&ReconstructorHandle> {
        self.reconstructors.iter().find(|h| h.id == id)
    }

    /// Handles by id; `["all"]` or an empty list selects every reconstructor.
    pub fn select(&self, ids: &[String]) -> Result<Vec<ReconstructorHandle>> {
        if ids.is_empty() || ids.iter().any(|i| i == "all") {
            return Ok(self.reconstructors.clone());
        }
        ids.iter()
            .map(|id| {
                self.handle(id).cloned().ok_or_else(|| Error::Registry {
                    path: self.path.clone(),
                    problems: vec![format!("no reconstructor with id `{id}`")],
                })
            })
            .collect()
    }

    /// Opens the selected handles.
    pub fn open(&self, ids: &[String]) -> Result<Vec<Reconstructor>> {
        self.select(ids)?.into_iter().map(Reconstructor::open).collect()
    }

    pub fn distance_asset(&self) -> Option<&DistanceAsset> {
        self.distance_assets.first()
    }
}

/// Loads and verifies a registry file.
pub fn load_registry(path: &Path) -> Result<Registry> {
    Registry::load(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn single_classical_handle() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "r.toml",
            r#"
[[reconstructors]]
id = "aa"
kind = "classical"
native_side = 64
downsampling = 8
prefilter = "gaussian:k=3,sigma=0.8"
upsample = "bilinear"
"#,
        );
        let reg = load_registry(&p).unwrap();
        assert_eq!(reg.reconstructors.len(), 1);
        assert!(reg.verify().is_empty());
        let h = &reg.reconstructors[0];
        assert_eq!(h.native_side, 64);
        assert!(h.is_linear());
    }

    #[test]
    fn duplicate_ids_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let entry = "[[reconstructors]]\nid = \"twin\"\nkind = \"classical\"\nnative_side = 8\ndownsampling = 1\n";
        let p = write(dir.path(), "r.toml", &format!("{entry}{entry}"));
        let err = load_registry(&p).unwrap_err().to_string();
        assert!(err.contains("duplicate id `twin`"), "{err}");
    }

    #[test]
    fn unknown_kind_and_bad_geometry_are_all_listed() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "r.toml",
            r#"
[[reconstructors]]
id = "a"
kind = "quantum"
native_side = 8
downsampling = 1

[[reconstructors]]
id = "b"
kind = "classical"
native_side = 12
downsampling = 8
"#,
        );
        match load_registry(&p).unwrap_err() {
            Error::Registry { problems, .. } => {
                assert_eq!(problems.len(), 2, "{problems:?}");
                assert!(problems[0].contains("unknown kind `quantum`"));
                assert!(problems[1].contains("`b`"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn checksum_mismatch_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "vae.onnx", "not really onnx");
        let p = write(
            dir.path(),
            "r.toml",
            r#"
[[reconstructors]]
id = "sd"
kind = "neural"
asset = "vae.onnx"
sha256 = "0000000000000000000000000000000000000000000000000000000000000000"
native_side = 512
downsampling = 8
"#,
        );
        let reg = Registry::parse(&p).unwrap();
        let checks = reg.verify();
        assert!(matches!(checks[0].status, AssetStatus::ChecksumMismatch { .. }));
        let err = load_registry(&p).unwrap_err().to_string();
        assert!(err.contains("`sd`: checksum mismatch"), "{err}");
    }

    #[test]
    fn missing_asset_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "r.toml",
            r#"
[[distance_assets]]
id = "lpips"
backbone = "nope.onnx"
backbone_sha256 = "00"
heads = "nope.json"
heads_sha256 = "00"
"#,
        );
        let err = load_registry(&p).unwrap_err().to_string();
        assert!(err.contains("missing file"), "{err}");
    }

    #[test]
    fn selection() {
        let reg = Registry {
            reconstructors: ReconstructorHandle::classical_suite(16),
            ..Default::default()
        };
        assert_eq!(reg.select(&[]).unwrap().len(), 3);
        assert_eq!(reg.select(&["all".into()]).unwrap().len(), 3);
        assert_eq!(reg.select(&["classical-aa".into()]).unwrap()[0].id, "classical-aa");
        assert!(reg.select(&["nope".into()]).is_err());
        assert_eq!(asset_file_name("sd14", "3c5a9f21deadbeef"), "sd14-3c5a9f21.onnx");
    }
}
