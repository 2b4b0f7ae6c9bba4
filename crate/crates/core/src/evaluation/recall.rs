use std::collections::BTreeMap;
use std::path::Path;

use super::{Metric, ReferenceIndex};
use crate::error::{Error, Result};
use crate::geojson::Coord;

#[derive(Debug, Clone, PartialEq)]
pub struct RequestPoint {
    pub lon: f64,
    pub lat: f64,
    pub country: String,
    pub service: Option<String>,
}

/// Requests captured per country.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CountryRecall {
    pub captured: usize,
    pub total: usize,
}

impl CountryRecall {
    pub fn recall(&self) -> f64 {
        self.captured as f64 / self.total as f64
    }
}

/// Parses `lon,lat,country[,service]` CSV with a header row.
pub fn parse_requests(text: &str, context: &str) -> Result<Vec<RequestPoint>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(false)
        .from_reader(text.as_bytes());
    let err = |line: usize, msg: String| Error::parse(context, line, msg);
    let headers = reader.headers().map_err(|e| err(1, e.to_string()))?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let (Some(lon_i), Some(lat_i), Some(country_i)) = (column("lon"), column("lat"), column("country")) else {
        return Err(err(1, "header must name the columns lon, lat and country".into()));
    };
    let service_i = column("service");

    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let number = |i: usize, what: &str| -> Result<f64> {
            let raw = &record[i];
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| err(line, format!("{what} {raw:?} is not a finite number")))
        };
        let lon = number(lon_i, "lon")?;
        let lat = number(lat_i, "lat")?;
        if lat.abs() > 90.0 {
            return Err(err(line, format!("latitude {lat} is out of range")));
        }
        out.push(RequestPoint {
            lon,
            lat,
            country: record[country_i].to_string(),
            service: service_i.map(|i| record[i].to_string()).filter(|s| !s.is_empty()),
        });
    }
    Ok(out)
}

pub fn read_requests(path: impl AsRef<Path>) -> Result<Vec<RequestPoint>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_requests(&text, &path.display().to_string())
}

/// A request is captured when any waterway (all vertices, not only inner
/// points) lies strictly within `threshold` degrees of it.
pub fn recall_requests(
    requests: &[RequestPoint],
    waterways: &[Vec<Coord>],
    threshold: f64,
) -> Result<BTreeMap<String, CountryRecall>> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument(format!("threshold must be positive, got {threshold}")));
    }
    let index = ReferenceIndex::new(waterways, threshold)?;
    let mut out: BTreeMap<String, CountryRecall> = BTreeMap::new();
    for r in requests {
        let captured = !index.is_empty() && index.nearest((r.lon, r.lat), Metric::Degrees)? < threshold;
        let entry = out.entry(r.country.clone()).or_default();
        entry.total += 1;
        entry.captured += usize::from(captured);
    }
    Ok(out)
}

/// `country,requests,captured,recall` rows sorted by country.
pub fn recall_to_csv(recall: &BTreeMap<String, CountryRecall>) -> String {
    let mut out = String::from("country,requests,captured,recall\n");
    for (country, r) in recall {
        out.push_str(&format!("{country},{},{},{:.4}\n", r.total, r.captured, r.recall()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_validates() {
        let rs = parse_requests("lon,lat,country,service\n1.5,-2,Rwanda,school\n3, 4 ,Uganda,\n", "r").unwrap();
        assert_eq!(rs.len(), 2);
        assert_eq!(rs[0].service.as_deref(), Some("school"));
        assert_eq!(rs[1].service, None);
        assert_eq!(rs[1].lat, 4.0);
        assert!(parse_requests("x,y\n1,2\n", "r").is_err());
        assert!(parse_requests("lon,lat,country\n1,95,A\n", "r").is_err());
        let e = parse_requests("lon,lat,country\n1,2,A\nfoo,2,A\n", "r").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
    }

    #[test]
    fn captures_by_country() {
        let lines = vec![vec![(0.0, 0.0), (1.0, 0.0)]];
        let req = |lon, lat, c: &str| RequestPoint {
            lon,
            lat,
            country: c.into(),
            service: None,
        };
        let rs = vec![req(0.5, 0.0, "A"), req(0.5, 0.01, "A"), req(1.001, 0.0, "B")];
        let r = recall_requests(&rs, &lines, 0.002).unwrap();
        assert_eq!(r["A"], CountryRecall { captured: 1, total: 2 });
        assert_eq!(r["B"], CountryRecall { captured: 1, total: 1 });
        assert_eq!(recall_to_csv(&r), "country,requests,captured,recall\nA,2,1,0.5000\nB,1,1,1.0000\n");
        let none = recall_requests(&rs, &[], 0.002).unwrap();
        assert_eq!(none["A"].captured, 0);
    }
}
