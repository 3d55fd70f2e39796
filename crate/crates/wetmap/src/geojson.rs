//! GeoJSON FeatureCollections of polygons.
//!
//! Written collections carry the CRS label in a top-level named `crs`
//! member, the generator version, and the optional `valid_extent`
//! (`[min_x, min_y, max_x, max_y]`). Every feature has the properties
//! `id`, `area_m2` and `pixel_count`. Coordinates are written at the
//! shortest decimal that parses back to the same `f64`.
//!
//! Reading accepts Polygon and MultiPolygon geometries; each part of a
//! MultiPolygon becomes its own feature sharing the source id. Rings are
//! closed and reoriented (counterclockwise exterior, clockwise holes) on
//! the way in.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;
use wetmap_core::geo::BBox;
use wetmap_core::postproc::{signed_area, Feature, Point, VectorLayer};

use crate::error::{io_err, Error, Result};

pub const GENERATOR: &str = concat!("wetmap ", env!("CARGO_PKG_VERSION"));

#[derive(Serialize)]
struct CrsName<'a> {
    name: &'a str,
}

#[derive(Serialize)]
struct Crs<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    properties: CrsName<'a>,
}

#[derive(Serialize)]
struct Properties {
    id: u64,
    area_m2: f64,
    pixel_count: u64,
}

#[derive(Serialize)]
struct Geometry {
    #[serde(rename = "type")]
    kind: &'static str,
    coordinates: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct FeatureOut {
    #[serde(rename = "type")]
    kind: &'static str,
    properties: Properties,
    geometry: Geometry,
}

#[derive(Serialize)]
struct Collection<'a> {
    #[serde(rename = "type")]
    kind: &'static str,
    crs: Crs<'a>,
    generator: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    valid_extent: Option<[f64; 4]>,
    features: Vec<FeatureOut>,
}

fn ring_out(ring: &[Point]) -> Vec<[f64; 2]> {
    ring.iter().map(|p| [p.x, p.y]).collect()
}

pub fn to_geojson(layer: &VectorLayer) -> String {
    let features = layer
        .features
        .iter()
        .map(|f| FeatureOut {
            kind: "Feature",
            properties: Properties {
                id: f.id,
                area_m2: f.area_m2,
                pixel_count: f.pixel_count,
            },
            geometry: Geometry {
                kind: "Polygon",
                coordinates: f.rings().map(ring_out).collect(),
            },
        })
        .collect();
    let doc = Collection {
        kind: "FeatureCollection",
        crs: Crs {
            kind: "name",
            properties: CrsName { name: &layer.crs },
        },
        generator: GENERATOR,
        valid_extent: layer.valid_extent.map(|b| [b.min_x, b.min_y, b.max_x, b.max_y]),
        features,
    };
    let mut s = serde_json::to_string(&doc).expect("finite coordinates serialize");
    s.push('\n');
    s
}

pub fn write_geojson(path: &Path, layer: &VectorLayer) -> Result<()> {
    fs::write(path, to_geojson(layer)).map_err(io_err(path))
}

pub fn read_geojson(path: &Path) -> Result<VectorLayer> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    parse_geojson(&text, path)
}

/// Parse GeoJSON text; `path` only labels error messages.
pub fn parse_geojson(text: &str, path: &Path) -> Result<VectorLayer> {
    let fail = |detail: String| Error::GeoJson {
        path: path.to_path_buf(),
        detail,
    };
    let root: Value = serde_json::from_str(text)
        .map_err(|e| fail(format!("parse error at line {} column {}: {e}", e.line(), e.column())))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(fail("top level is not a FeatureCollection".into()));
    }
    let crs = root
        .pointer("/crs/properties/name")
        .and_then(Value::as_str)
        .unwrap_or_default();
    let mut layer = VectorLayer::new(crs);
    if let Some(e) = root.get("valid_extent").filter(|v| !v.is_null()) {
        let v = numbers(e)
            .filter(|v| v.len() == 4)
            .ok_or_else(|| fail("valid_extent must be 4 numbers".into()))?;
        layer.valid_extent = Some(BBox::new(v[0], v[1], v[2], v[3]));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| fail("missing \"features\" array".into()))?;
    for (i, f) in features.iter().enumerate() {
        let ctx = |msg: &str| fail(format!("feature {i}: {msg}"));
        if f.get("type").and_then(Value::as_str) != Some("Feature") {
            return Err(ctx("not a Feature object"));
        }
        let g = f
            .get("geometry")
            .filter(|g| !g.is_null())
            .ok_or_else(|| ctx("no geometry"))?;
        let kind = g
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| ctx("geometry without a type"))?;
        let coords = g
            .get("coordinates")
            .ok_or_else(|| ctx("geometry without coordinates"))?;
        let polygons: Vec<&Value> = match kind {
            "Polygon" => vec![coords],
            "MultiPolygon" => coords
                .as_array()
                .ok_or_else(|| ctx("MultiPolygon coordinates must be an array"))?
                .iter()
                .collect(),
            other => {
                return Err(Error::UnsupportedGeometry {
                    path: path.to_path_buf(),
                    feature: i,
                    kind: other.to_string(),
                })
            }
        };
        let props = f.get("properties");
        let prop = |key: &str| props.and_then(|p| p.get(key));
        let id = match prop("id") {
            None | Some(Value::Null) => layer.features.len() as u64 + 1,
            Some(v) => v
                .as_u64()
                .ok_or_else(|| ctx("property id must be a non-negative integer"))?,
        };
        let pixel_count = prop("pixel_count").and_then(Value::as_u64).unwrap_or(0);
        let area = prop("area_m2").and_then(Value::as_f64);
        for (pi, poly) in polygons.iter().enumerate() {
            let rings = polygon(poly).map_err(|m| ctx(&format!("polygon {pi}: {m}")))?;
            let mut rings = rings.into_iter();
            let exterior = rings.next().ok_or_else(|| ctx("polygon without rings"))?;
            let mut feature = Feature {
                id,
                exterior: oriented(exterior, true),
                holes: rings.map(|h| oriented(h, false)).collect(),
                area_m2: 0.0,
                pixel_count,
            };
            feature.area_m2 = match (area, polygons.len()) {
                (Some(a), 1) => a,
                _ => feature.shoelace_area(),
            };
            layer.features.push(feature);
        }
    }
    Ok(layer)
}

fn numbers(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(Value::as_f64).collect()
}

fn polygon(v: &Value) -> std::result::Result<Vec<Vec<Point>>, String> {
    let rings = v.as_array().ok_or("rings must be an array")?;
    rings
        .iter()
        .enumerate()
        .map(|(ri, r)| {
            let positions = r.as_array().ok_or(format!("ring {ri} must be an array"))?;
            let mut ring = positions
                .iter()
                .map(|p| match numbers(p).as_deref() {
                    Some([x, y, ..]) if x.is_finite() && y.is_finite() => Ok(Point::new(*x, *y)),
                    _ => Err(format!("ring {ri}: positions must be [x, y] numbers")),
                })
                .collect::<std::result::Result<Vec<Point>, String>>()?;
            if ring.first() != ring.last() {
                ring.push(ring[0]);
            }
            Ok(ring)
        })
        .collect()
}

fn oriented(mut ring: Vec<Point>, ccw: bool) -> Vec<Point> {
    if (signed_area(&ring) > 0.0) != ccw {
        ring.reverse();
    }
    ring
}
