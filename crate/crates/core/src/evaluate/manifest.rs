use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{read_image, ImageTensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Real,
    Generated,
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Real => "real",
            Label::Generated => "generated",
        })
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" => Ok(Label::Real),
            "generated" | "fake" => Ok(Label::Generated),
            other => Err(Error::Manifest(format!("unknown label `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub label: Label,
    /// Generating model tag; for real images usually the dataset name.
    pub source_model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// Labeled inputs for a benchmark task.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
struct CsvRow {
    path: String,
    label: String,
    source_model: String,
    #[serde(default)]
    split: Option<String>,
}

impl DatasetManifest {
    /// Reads `path,label,source_model[,split]` CSV or a JSON array of the
    /// same fields, chosen by extension. Relative image paths resolve
    /// against the manifest's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let is_json = path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut entries = if is_json {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            serde_json::from_str::<Vec<ManifestEntry>>(&text)
                .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?
        } else {
            let mut reader = csv::Reader::from_path(path)
                .map_err(|e| Error::Manifest(format!("{}: {e}", path.display())))?;
            let mut out = Vec::new();
            for (line, row) in reader.deserialize::<CsvRow>().enumerate() {
                let row = row.map_err(|e| Error::Manifest(format!("{} row {}: {e}", path.display(), line + 2)))?;
                out.push(ManifestEntry {
                    path: row.path.into(),
                    label: row.label.parse()?,
                    source_model: row.source_model,
                    split: row.split.filter(|s| !s.is_empty()),
                });
            }
            out
        };
        for e in &mut entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(Self { entries })
    }

    pub fn count(&self, label: Label) -> usize {
        self.entries.iter().filter(|e| e.label == label).count()
    }

    /// Fails unless both labels are present.
    pub fn require_both_labels(&self) -> Result<()> {
        if self.count(Label::Real) == 0 || self.count(Label::Generated) == 0 {
            return Err(Error::Manifest("need at least one real and one generated entry".into()));
        }
        Ok(())
    }

    /// Decodes every entry; unreadable files become skipped rows.
    pub fn read_images(&self) -> (Vec<LabeledImage>, Vec<SkippedRow>) {
        let mut images = Vec::new();
        let mut skipped = Vec::new();
        for e in &self.entries {
            match read_image(&e.path) {
                Ok(image) => images.push(LabeledImage {
                    id: e.path.file_name().map_or_else(
                        || e.path.display().to_string(),
                        |n| n.to_string_lossy().into_owned(),
                    ),
                    label: e.label,
                    source_model: e.source_model.clone(),
                    image,
                }),
                Err(err) => {
                    log::warn!("skipping {}: {err}", e.path.display());
                    skipped.push(SkippedRow { path: e.path.display().to_string(), reason: err.to_string() })
                }
            }
        }
        (images, skipped)
    }
}

/// A decoded image with its label.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledImage {
    pub id: String,
    pub label: Label,
    pub source_model: String,
    pub image: ImageTensor,
}

/// An entry that could not be used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedRow {
    pub path: String,
    pub reason: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(
            dir.path().join("m.csv"),
            "path,label,source_model\na.png,real,imagenet\nsub/b.png,generated,sd14\n",
        )
        .unwrap();
        std::fs::write(
            dir.path().join("m.json"),
            r#"[{"path":"a.png","label":"real","source_model":"imagenet"},
                {"path":"sub/b.png","label":"generated","source_model":"sd14"}]"#,
        )
        .unwrap();
        let a = DatasetManifest::load(&dir.path().join("m.csv")).unwrap();
        let b = DatasetManifest::load(&dir.path().join("m.json")).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.entries[1].path, dir.path().join("sub/b.png"));
        assert_eq!(a.count(Label::Generated), 1);
        a.require_both_labels().unwrap();
    }

    #[test]
    fn bad_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("m.csv"), "path,label,source_model\na.png,maybe,x\n").unwrap();
        assert!(DatasetManifest::load(&dir.path().join("m.csv")).is_err());
    }

    #[test]
    fn unreadable_images_are_skipped_not_dropped() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("bad.png"), b"garbage").unwrap();
        let m = DatasetManifest {
            entries: vec![ManifestEntry {
                path: dir.path().join("bad.png"),
                label: Label::Real,
                source_model: "x".into(),
                split: None,
            }],
        };
        let (images, skipped) = m.read_images();
        assert!(images.is_empty());
        assert_eq!(skipped.len(), 1);
        assert!(skipped[0].path.ends_with("bad.png"));
    }
}
