//! Hydrography labels and their training weights.
//!
//! Each water(way) type gets a positive integer label (its 1-based position
//! in the [`FcodeWeightTable`]); 0 is unlabeled background. The table's
//! weight decides how a labeled cell enters the loss:
//!
//! | weight      | target | loss weight |
//! |-------------|--------|-------------|
//! | 0           | 0      | 1           |
//! | (0, 1)      | -      | 0 (masked)  |
//! | >= 1        | 1      | weight      |

mod burn;
mod loss;

pub use burn::{burn_vectors, labeled_geometries, LabelGeometry, LabeledGeometry, TYPE_PROPERTY};
pub use loss::{weighted_bce, BCE_EPSILON};

use std::path::Path;

use crate::error::{Error, Result};
use crate::kv::KeyValues;
use crate::raster::{BinaryMask, GeoGrid};

pub type LabelRaster = GeoGrid<u16>;

/// Default weights, one entry per water(way) type.
pub const DEFAULT_WEIGHTS: [(&str, f64); 21] = [
    ("playa", 0.0),
    ("Inundation area", 0.0),
    ("Swamp Intermittent", 0.5),
    ("Swamp Perennial", 0.5),
    ("Swamp", 0.5),
    ("Reservoir", 0.5),
    ("Lake Intermittent", 0.5),
    ("Lake Perennial", 3.25),
    ("Lake", 3.25),
    ("spillway", 0.0),
    ("drainage", 0.5),
    ("wash", 1.5),
    ("canal storm", 0.5),
    ("canal aqua", 0.5),
    ("canal", 0.5),
    ("artificial path", 2.5),
    ("Ephemeral Streams", 3.5),
    ("Intermittent Streams", 3.75),
    ("Perennial Streams", 3.25),
    ("Streams Other", 3.25),
    ("other", 0.5),
];

/// How a weight enters training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightClass {
    /// Not a waterway: counted as background.
    Negative,
    /// Excluded from the loss.
    Masked,
    /// Waterway, loss scaled by the weight.
    Positive(f64),
}

impl WeightClass {
    pub fn of(weight: f64) -> Self {
        if weight == 0.0 {
            WeightClass::Negative
        } else if weight < 1.0 {
            WeightClass::Masked
        } else {
            WeightClass::Positive(weight)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FcodeWeightTable {
    entries: Vec<(String, f64)>,
}

impl Default for FcodeWeightTable {
    fn default() -> Self {
        FcodeWeightTable {
            entries: DEFAULT_WEIGHTS.iter().map(|&(n, w)| (n.to_string(), w)).collect(),
        }
    }
}

fn check_weight(name: &str, weight: f64) -> Result<()> {
    if weight.is_finite() && weight >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("weight for {name:?} must be a non-negative number, got {weight}")))
    }
}

impl FcodeWeightTable {
    pub fn from_entries(entries: Vec<(String, f64)>) -> Result<Self> {
        for (i, (name, w)) in entries.iter().enumerate() {
            check_weight(name, *w)?;
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidArgument(format!("duplicate water type {name:?}")));
            }
        }
        if entries.len() >= u16::MAX as usize {
            return Err(Error::InvalidArgument("too many water types".into()));
        }
        Ok(FcodeWeightTable { entries })
    }

    /// Defaults with the config file's entries applied on top. Known names
    /// take the new weight; unknown names are appended as new types.
    pub fn with_overrides(kv: &KeyValues, context: &str) -> Result<Self> {
        let mut table = Self::default();
        for (name, value, line) in &kv.entries {
            let w: f64 = value
                .parse()
                .map_err(|_| Error::parse(context, *line, format!("weight {value:?} is not a number")))?;
            check_weight(name, w).map_err(|e| Error::parse(context, *line, e.to_string()))?;
            match table.entries.iter_mut().find(|(n, _)| n == name) {
                Some(entry) => entry.1 = w,
                None => table.entries.push((name.clone(), w)),
            }
        }
        Ok(table)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::with_overrides(&KeyValues::read(path)?, &path.display().to_string())
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn label_of(&self, name: &str) -> Option<u16> {
        self.entries
            .iter()
            .position(|(n, _)| n == name)
            .map(|i| i as u16 + 1)
    }

    pub fn name_of(&self, label: u16) -> Option<&str> {
        self.entries.get((label as usize).checked_sub(1)?).map(|(n, _)| n.as_str())
    }

    pub fn weight_of(&self, label: u16) -> Option<f64> {
        self.entries.get((label as usize).checked_sub(1)?).map(|e| e.1)
    }

    /// `name = weight` lines in label order.
    pub fn to_config_string(&self) -> String {
        self.entries
            .iter()
            .map(|(n, w)| format!("{n} = {w}\n"))
            .collect()
    }

    /// `label<TAB>name<TAB>weight` lines.
    pub fn legend(&self) -> String {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, (n, w))| format!("{}\t{n}\t{w}\n", i + 1))
            .collect()
    }
}

/// Training target and per-cell loss weight for a label raster.
pub fn weights_from_labels(labels: &LabelRaster, table: &FcodeWeightTable) -> Result<(BinaryMask, GeoGrid<f64>)> {
    let n = labels.cells().len();
    let mut target = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    for i in 0..n {
        let (t, w) = match labels.value_at_index(i) {
            None => (0, 0.0),
            Some(0) => (0, 1.0),
            Some(l) => match WeightClass::of(table.weight_of(l).ok_or(Error::UnknownLabel(l))?) {
                WeightClass::Negative => (0, 1.0),
                WeightClass::Masked => (0, 0.0),
                WeightClass::Positive(w) => (1, w),
            },
        };
        target.push(t);
        weight.push(w);
    }
    let t = *labels.transform();
    Ok((GeoGrid::new(t, target, None)?, GeoGrid::new(t, weight, None)?))
}
