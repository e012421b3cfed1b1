//! File formats: label files, dataset manifests, atomic writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::LabelTrack;

/// Write `bytes` to a sibling temp file and rename it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("{} is not a file path", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let write = || -> std::io::Result<()> {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::json(path.display().to_string(), e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub label: String,
    pub start: usize,
    pub end: usize,
}

/// Segment-based label file; segments are half-open and tile `[0, M)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelFile {
    pub class_names: Vec<String>,
    pub segments: Vec<Segment>,
}

impl LabelFile {
    pub fn from_track(track: &LabelTrack, class_names: &[String]) -> Result<Self> {
        if class_names.len() != track.class_count() {
            return Err(Error::Labels(format!(
                "{} class names for {} classes",
                class_names.len(),
                track.class_count()
            )));
        }
        let segments = track
            .segments()
            .into_iter()
            .map(|(c, start, end)| Segment {
                label: class_names[c].clone(),
                start,
                end,
            })
            .collect();
        Ok(Self {
            class_names: class_names.to_vec(),
            segments,
        })
    }

    /// Check the tiling rules and expand to a per-frame track.
    pub fn to_track(&self) -> Result<LabelTrack> {
        let mut classes = Vec::new();
        for (i, seg) in self.segments.iter().enumerate() {
            if seg.start != classes.len() {
                return Err(Error::Labels(format!(
                    "segment {i} starts at {} but the previous one ends at {}",
                    seg.start,
                    classes.len()
                )));
            }
            if seg.end <= seg.start {
                return Err(Error::Labels(format!("segment {i} is empty or reversed")));
            }
            let c = self
                .class_names
                .iter()
                .position(|n| *n == seg.label)
                .ok_or_else(|| Error::Labels(format!("segment {i} has unknown label {:?}", seg.label)))?;
            classes.resize(seg.end, c);
        }
        LabelTrack::new(classes, self.class_names.len())
    }

    pub fn load(path: &Path) -> Result<Self> {
        read_json(path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub bvh: PathBuf,
    pub labels: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

/// List of BVH/label file pairs. Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub items: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let manifest: Manifest = read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((manifest, base))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["a".into(), "b".into()]
    }

    #[test]
    fn label_file_round_trip() {
        let track = LabelTrack::new(vec![0, 0, 1, 1, 1, 0], 2).unwrap();
        let file = LabelFile::from_track(&track, &names()).unwrap();
        assert_eq!(file.segments.len(), 3);
        assert_eq!(file.segments[1], Segment { label: "b".into(), start: 2, end: 5 });
        assert_eq!(file.to_track().unwrap(), track);
    }

    #[test]
    fn gaps_overlaps_and_unknown_labels_rejected() {
        let seg = |label: &str, start, end| Segment { label: label.into(), start, end };
        let gap = LabelFile { class_names: names(), segments: vec![seg("a", 0, 2), seg("b", 3, 4)] };
        assert!(gap.to_track().is_err());
        let overlap = LabelFile { class_names: names(), segments: vec![seg("a", 0, 2), seg("b", 1, 4)] };
        assert!(overlap.to_track().is_err());
        let unknown = LabelFile { class_names: names(), segments: vec![seg("z", 0, 2)] };
        assert!(unknown.to_track().is_err());
        let late = LabelFile { class_names: names(), segments: vec![seg("a", 1, 2)] };
        assert!(late.to_track().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = r#"{"class_names":["a"],"segments":[],"extra":1}"#;
        assert!(serde_json::from_str::<LabelFile>(text).is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
