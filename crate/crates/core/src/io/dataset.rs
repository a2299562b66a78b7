//! Station time series in CSV form.
//!
//! Header: `station_id,lat,lon,v1,...,vT`. Each row is one station. An empty
//! field or `NA`/`NaN` in the value columns marks a missing measurement and
//! drops that station; anything else that fails to parse is an error naming
//! the line.

use std::io::Read;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::graph::GeoPoint;

#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub id: String,
    pub location: GeoPoint,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationDataset {
    pub stations: Vec<Station>,
    /// Station ids dropped for missing values, with the line they were on.
    pub dropped: Vec<(String, usize)>,
}

impl StationDataset {
    pub fn node_count(&self) -> usize {
        self.stations.len()
    }

    pub fn series_len(&self) -> usize {
        self.stations.first().map_or(0, |s| s.values.len())
    }

    pub fn points(&self) -> Vec<GeoPoint> {
        self.stations.iter().map(|s| s.location).collect()
    }

    /// Graph signal at time index `t` (0-based).
    pub fn snapshot(&self, t: usize) -> Result<DVector<f64>> {
        if t >= self.series_len() {
            return Err(Error::Input(format!("time index {t} out of range 0..{}", self.series_len())));
        }
        Ok(DVector::from_iterator(self.node_count(), self.stations.iter().map(|s| s.values[t])))
    }

    /// Per-station mean over time.
    pub fn temporal_mean(&self) -> DVector<f64> {
        let t = self.series_len().max(1) as f64;
        DVector::from_iterator(self.node_count(), self.stations.iter().map(|s| s.values.iter().sum::<f64>() / t))
    }
}

pub fn load_station_csv(path: impl AsRef<Path>) -> Result<StationDataset> {
    let file = std::fs::File::open(path.as_ref())?;
    parse_station_csv(file)
}

fn is_missing(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f.eq_ignore_ascii_case("na") || f.eq_ignore_ascii_case("nan")
}

pub fn parse_station_csv(reader: impl Read) -> Result<StationDataset> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
    let header = rdr.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 4 || cols[..3] != ["station_id", "lat", "lon"] {
        return Err(Error::Schema("header must start with station_id,lat,lon followed by v1..vT".into()));
    }
    for (t, name) in cols[3..].iter().enumerate() {
        if *name != format!("v{}", t + 1) {
            return Err(Error::Schema(format!("value column {} is named {name:?}, expected \"v{}\"", t + 1, t + 1)));
        }
    }
    let series_len = cols.len() - 3;

    let mut stations = Vec::new();
    let mut dropped = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != cols.len() {
            return Err(Error::Schema(format!(
                "line {line}: {} fields, header has {}",
                rec.len(),
                cols.len()
            )));
        }
        let num = |i: usize, what: &str| -> Result<f64> {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse { line, message: format!("{what} {:?} is not a number", &rec[i]) })
        };
        let id = rec[0].trim().to_string();
        let lat = num(1, "lat")?;
        let lon = num(2, "lon")?;
        let location = GeoPoint::new(lat, lon).map_err(|e| Error::Parse { line, message: e.to_string() })?;
        if (3..rec.len()).any(|i| is_missing(&rec[i])) {
            dropped.push((id, line));
            continue;
        }
        let values = (3..rec.len()).map(|i| num(i, "value")).collect::<Result<Vec<_>>>()?;
        debug_assert_eq!(values.len(), series_len);
        stations.push(Station { id, location, values });
    }
    if stations.is_empty() {
        return Err(Error::Schema("no complete station rows".into()));
    }
    Ok(StationDataset { stations, dropped })
}
