use std::path::{Path, PathBuf};

use super::{cloud_fraction, BBox, SceneTile, TileInfo, TileProvider};
use crate::error::{Error, Result};
use crate::raster::read_ascii_grid;

fn enumerate(tiles: &[SceneTile], bbox: &BBox) -> Vec<TileInfo> {
    let mut infos: Vec<TileInfo> = tiles
        .iter()
        .filter(|t| bbox.intersects(t.mask.transform()))
        .map(|t| TileInfo {
            id: t.id.clone(),
            cloud_fraction: cloud_fraction(t),
        })
        .collect();
    // stable: equal fractions keep listing order
    infos.sort_by(|a, b| a.cloud_fraction.total_cmp(&b.cloud_fraction));
    infos
}

fn lookup<'a>(tiles: &'a [SceneTile], id: &str) -> Result<&'a SceneTile> {
    tiles
        .iter()
        .find(|t| t.id == id)
        .ok_or_else(|| Error::Provider(format!("no tile with id {id:?}")))
}

/// Provider over tiles already in memory.
#[derive(Debug, Clone, Default)]
pub struct MemoryProvider {
    tiles: Vec<SceneTile>,
}

impl MemoryProvider {
    pub fn new(tiles: Vec<SceneTile>) -> Self {
        MemoryProvider { tiles }
    }
}

impl TileProvider for MemoryProvider {
    fn candidates(&self, bbox: &BBox) -> Result<Vec<TileInfo>> {
        Ok(enumerate(&self.tiles, bbox))
    }

    fn fetch(&self, id: &str) -> Result<SceneTile> {
        lookup(&self.tiles, id).cloned()
    }
}

/// Directory-backed provider driven by a manifest file.
///
/// Each non-comment line names one scene:
///
/// ```text
/// # id        nir        red        green        blue        invalid-mask
/// scene-a     a_n.asc    a_r.asc    a_g.asc      a_b.asc     a_mask.asc
/// ```
///
/// Relative paths resolve against the manifest's directory.
#[derive(Debug, Clone)]
pub struct ManifestProvider {
    tiles: Vec<SceneTile>,
}

impl ManifestProvider {
    pub fn open(manifest: impl AsRef<Path>) -> Result<Self> {
        let manifest = manifest.as_ref();
        let text = std::fs::read_to_string(manifest).map_err(|e| Error::io(manifest, e))?;
        let base = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let context = manifest.display().to_string();
        let resolve = |p: &str| -> PathBuf {
            let p = Path::new(p);
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                base.join(p)
            }
        };

        let mut tiles = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::parse(
                    &context,
                    i + 1,
                    format!("expected `id nir red green blue mask`, got {} fields", fields.len()),
                ));
            }
            if tiles.iter().any(|t: &SceneTile| t.id == fields[0]) {
                return Err(Error::parse(&context, i + 1, format!("duplicate tile id {:?}", fields[0])));
            }
            let bands = [
                read_ascii_grid(resolve(fields[1]))?,
                read_ascii_grid(resolve(fields[2]))?,
                read_ascii_grid(resolve(fields[3]))?,
                read_ascii_grid(resolve(fields[4]))?,
            ];
            let mask = read_ascii_grid(resolve(fields[5]))?;
            tiles.push(SceneTile::new(fields[0], bands, mask)?);
        }
        Ok(ManifestProvider { tiles })
    }

    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

impl TileProvider for ManifestProvider {
    fn candidates(&self, bbox: &BBox) -> Result<Vec<TileInfo>> {
        Ok(enumerate(&self.tiles, bbox))
    }

    fn fetch(&self, id: &str) -> Result<SceneTile> {
        lookup(&self.tiles, id).cloned()
    }
}
