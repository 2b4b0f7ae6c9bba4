//! Minimal GeoJSON reading: the geometry types the pipeline consumes, plus
//! feature properties.

use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// `(lon, lat)` in degrees.
pub type Coord = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    Point(Coord),
    MultiPoint(Vec<Coord>),
    LineString(Vec<Coord>),
    MultiLineString(Vec<Vec<Coord>>),
    Polygon(Vec<Vec<Coord>>),
    MultiPolygon(Vec<Vec<Vec<Coord>>>),
}

impl Geometry {
    /// Every line-like part: line strings as-is, polygon rings as closed lines.
    pub fn lines(&self) -> Vec<Vec<Coord>> {
        match self {
            Geometry::Point(p) => vec![vec![*p]],
            Geometry::MultiPoint(ps) => ps.iter().map(|p| vec![*p]).collect(),
            Geometry::LineString(l) => vec![l.clone()],
            Geometry::MultiLineString(ls) => ls.clone(),
            Geometry::Polygon(rings) => rings.clone(),
            Geometry::MultiPolygon(polys) => polys.iter().flatten().cloned().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feature {
    pub geometry: Option<Geometry>,
    pub properties: Map<String, Value>,
}

impl Feature {
    pub fn property_str(&self, key: &str) -> Option<&str> {
        self.properties.get(key).and_then(Value::as_str)
    }

    pub fn property_i64(&self, key: &str) -> Option<i64> {
        self.properties.get(key).and_then(Value::as_i64)
    }
}

fn err(msg: impl Into<String>) -> Error {
    Error::GeoJson(msg.into())
}

fn coord(v: &Value) -> Result<Coord> {
    let arr = v.as_array().ok_or_else(|| err("position must be an array"))?;
    if arr.len() < 2 {
        return Err(err("position needs at least two numbers"));
    }
    let lon = arr[0].as_f64().ok_or_else(|| err("longitude is not a number"))?;
    let lat = arr[1].as_f64().ok_or_else(|| err("latitude is not a number"))?;
    if !lon.is_finite() || !lat.is_finite() || lat.abs() > 90.0 {
        return Err(err(format!("invalid position [{lon}, {lat}]")));
    }
    Ok((lon, lat))
}

fn coords(v: &Value) -> Result<Vec<Coord>> {
    v.as_array()
        .ok_or_else(|| err("expected an array of positions"))?
        .iter()
        .map(coord)
        .collect()
}

fn coords2(v: &Value) -> Result<Vec<Vec<Coord>>> {
    v.as_array()
        .ok_or_else(|| err("expected an array of position arrays"))?
        .iter()
        .map(coords)
        .collect()
}

pub fn parse_geometry(v: &Value) -> Result<Geometry> {
    let kind = v
        .get("type")
        .and_then(Value::as_str)
        .ok_or_else(|| err("geometry has no type"))?;
    let c = v.get("coordinates").ok_or_else(|| err(format!("{kind} has no coordinates")));
    Ok(match kind {
        "Point" => Geometry::Point(coord(c?)?),
        "MultiPoint" => Geometry::MultiPoint(coords(c?)?),
        "LineString" => Geometry::LineString(coords(c?)?),
        "MultiLineString" => Geometry::MultiLineString(coords2(c?)?),
        "Polygon" => Geometry::Polygon(coords2(c?)?),
        "MultiPolygon" => Geometry::MultiPolygon(
            c?.as_array()
                .ok_or_else(|| err("MultiPolygon coordinates must be an array"))?
                .iter()
                .map(coords2)
                .collect::<Result<_>>()?,
        ),
        other => return Err(err(format!("unsupported geometry type {other:?}"))),
    })
}

fn parse_feature(v: &Value) -> Result<Feature> {
    let geometry = match v.get("geometry") {
        None | Some(Value::Null) => None,
        Some(g) => Some(parse_geometry(g)?),
    };
    let properties = match v.get("properties") {
        None | Some(Value::Null) => Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(err("feature properties must be an object")),
    };
    Ok(Feature { geometry, properties })
}

/// Accepts a FeatureCollection, a single Feature or a bare geometry.
pub fn parse_features(text: &str) -> Result<Vec<Feature>> {
    let doc: Value = serde_json::from_str(text).map_err(|e| err(e.to_string()))?;
    match doc.get("type").and_then(Value::as_str) {
        Some("FeatureCollection") => doc
            .get("features")
            .and_then(Value::as_array)
            .ok_or_else(|| err("FeatureCollection has no features array"))?
            .iter()
            .map(parse_feature)
            .collect(),
        Some("Feature") => Ok(vec![parse_feature(&doc)?]),
        Some(_) => Ok(vec![Feature {
            geometry: Some(parse_geometry(&doc)?),
            properties: Map::new(),
        }]),
        None => Err(err("document has no type")),
    }
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<Feature>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_features(&text).map_err(|e| Error::GeoJson(format!("{}: {}", path.display(), e.to_string().trim_start_matches("invalid GeoJSON: "))))
}

/// All line parts of all features, for use as reference waterways.
pub fn read_polylines(path: impl AsRef<Path>) -> Result<Vec<Vec<Coord>>> {
    Ok(read_features(path)?
        .iter()
        .filter_map(|f| f.geometry.as_ref())
        .flat_map(Geometry::lines)
        .filter(|l| !l.is_empty())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_collection() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"fcode_type":"Swamp"},
             "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
            {"type":"Feature","properties":null,
             "geometry":{"type":"LineString","coordinates":[[0,0,5],[1,1]]}}]}"#;
        let fs = parse_features(text).unwrap();
        assert_eq!(fs.len(), 2);
        assert_eq!(fs[0].property_str("fcode_type"), Some("Swamp"));
        assert_eq!(fs[1].geometry, Some(Geometry::LineString(vec![(0.0, 0.0), (1.0, 1.0)])));
    }

    #[test]
    fn bare_geometry_and_errors() {
        let fs = parse_features(r#"{"type":"MultiLineString","coordinates":[[[0,0],[1,0]],[[2,2],[3,3]]]}"#).unwrap();
        assert_eq!(fs[0].geometry.as_ref().unwrap().lines().len(), 2);
        assert!(parse_features("{").is_err());
        assert!(parse_features(r#"{"type":"LineString","coordinates":[[0,"a"]]}"#).is_err());
        assert!(parse_features(r#"{"type":"Point","coordinates":[0,91]}"#).is_err());
        assert!(parse_features(r#"{"type":"Curve","coordinates":[]}"#).is_err());
    }
}
