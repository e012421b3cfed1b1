use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{motion_image, MotionImage};
use crate::io::{LabelFile, Manifest};
use crate::labels::LabelTrack;
use crate::mocap::{parse_bvh, to_cartesian, CoordinateSpace};

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetItem {
    pub image: MotionImage,
    pub labels: LabelTrack,
    pub name: String,
}

/// Labeled motion images sharing one height and one class list.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    items: Vec<DatasetItem>,
    class_names: Vec<String>,
}

impl Dataset {
    pub fn new(items: Vec<DatasetItem>, class_names: Vec<String>) -> Result<Self> {
        if class_names.is_empty() {
            return Err(Error::Labels("dataset needs at least one class".into()));
        }
        let height = items.first().map(|i| i.image.height());
        for item in &items {
            if Some(item.image.height()) != height {
                return Err(Error::Shape(format!(
                    "{}: image height {} differs from {}",
                    item.name,
                    item.image.height(),
                    height.unwrap_or(0)
                )));
            }
            if item.image.width() != item.labels.len() {
                return Err(Error::Shape(format!(
                    "{}: image has {} frames, labels have {}",
                    item.name,
                    item.image.width(),
                    item.labels.len()
                )));
            }
            if item.labels.class_count() != class_names.len() {
                return Err(Error::Labels(format!(
                    "{}: labels use {} classes, dataset has {}",
                    item.name,
                    item.labels.class_count(),
                    class_names.len()
                )));
            }
        }
        Ok(Self { items, class_names })
    }

    /// Load every BVH/label pair of a manifest through the motion-image pipeline.
    pub fn from_manifest(path: &Path, space: CoordinateSpace, height: usize) -> Result<Self> {
        let (manifest, base) = Manifest::load(path)?;
        let mut items = Vec::with_capacity(manifest.items.len());
        let mut class_names: Option<Vec<String>> = None;
        for entry in &manifest.items {
            let bvh_path = base.join(&entry.bvh);
            let text = std::fs::read_to_string(&bvh_path).map_err(|e| Error::io(&bvh_path, e))?;
            let (skeleton, motion) = parse_bvh(&text)?;
            let cartesian = to_cartesian(&skeleton, &motion, space)?;
            let (image, _) = motion_image(&cartesian, height)?;
            let label_file = LabelFile::load(&base.join(&entry.labels))?;
            match &class_names {
                None => class_names = Some(label_file.class_names.clone()),
                Some(names) if *names != label_file.class_names => {
                    return Err(Error::Labels(format!(
                        "{}: class names differ from the first item",
                        entry.labels.display()
                    )))
                }
                Some(_) => {}
            }
            let name = entry.name.clone().unwrap_or_else(|| {
                entry
                    .bvh
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default()
            });
            items.push(DatasetItem {
                image,
                labels: label_file.to_track()?,
                name,
            });
        }
        let class_names = class_names.ok_or_else(|| Error::Labels("manifest lists no items".into()))?;
        Self::new(items, class_names)
    }

    pub fn items(&self) -> &[DatasetItem] {
        &self.items
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Image height shared by all items (`None` when empty).
    pub fn height(&self) -> Option<usize> {
        self.items.first().map(|i| i.image.height())
    }
}
