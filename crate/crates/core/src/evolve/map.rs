//! Time × site grids of observables and their CSV/JSON forms.
//!
//! CSV is long format with header `time,site,value,stderr`; `stderr` is empty
//! when absent and `time` may carry the reserved tag `thermal`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Time coordinate of a CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MapTime {
    At(f64),
    Thermal,
}

impl MapTime {
    pub const THERMAL_TAG: &'static str = "thermal";

    fn render(self) -> String {
        match self {
            MapTime::At(t) => format!("{t}"),
            MapTime::Thermal => Self::THERMAL_TAG.to_string(),
        }
    }

    fn parse(s: &str) -> Result<Self> {
        if s == Self::THERMAL_TAG {
            return Ok(MapTime::Thermal);
        }
        s.parse()
            .map(MapTime::At)
            .map_err(|_| Error::config(format!("bad time value `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpatiotemporalMap {
    /// Observable name, e.g. `q` or `epsilon`.
    pub quantity: String,
    pub times: Vec<f64>,
    /// Centered site or bond labels.
    pub sites: Vec<i32>,
    /// `values[t][x]`.
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<Vec<f64>>>,
}

impl SpatiotemporalMap {
    pub fn new(quantity: impl Into<String>, sites: Vec<i32>) -> Self {
        Self {
            quantity: quantity.into(),
            times: Vec::new(),
            sites,
            values: Vec::new(),
            stderr: None,
        }
    }

    pub fn push(&mut self, t: f64, row: Vec<f64>) -> Result<()> {
        if row.len() != self.sites.len() {
            return Err(Error::Dimension(format!(
                "row has {} values for {} sites",
                row.len(),
                self.sites.len()
            )));
        }
        if self.stderr.is_some() {
            return Err(Error::Dimension(
                "map carries error bars; use push_with_stderr".into(),
            ));
        }
        self.times.push(t);
        self.values.push(row);
        Ok(())
    }

    pub fn push_with_stderr(&mut self, t: f64, row: Vec<f64>, err: Vec<f64>) -> Result<()> {
        if row.len() != self.sites.len() || err.len() != self.sites.len() {
            return Err(Error::Dimension("row/stderr length mismatch".into()));
        }
        if self.stderr.is_none() {
            if !self.times.is_empty() {
                return Err(Error::Dimension("map has rows without error bars".into()));
            }
            self.stderr = Some(Vec::new());
        }
        self.times.push(t);
        self.values.push(row);
        self.stderr.as_mut().expect("initialized above").push(err);
        Ok(())
    }

    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    /// Column index of a centered label.
    pub fn site_index(&self, site: i32) -> Option<usize> {
        self.sites.iter().position(|&s| s == site)
    }

    /// Time series at column `x`.
    pub fn column(&self, x: usize) -> Vec<f64> {
        self.values.iter().map(|row| row[x]).collect()
    }

    /// Writes CSV rows; `thermal` rows are appended with the reserved tag.
    pub fn write_csv<W: Write>(&self, w: W, thermal: Option<&[f64]>) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "site", "value", "stderr"])?;
        for (k, (&t, row)) in self.times.iter().zip(&self.values).enumerate() {
            for (x, (&site, &v)) in self.sites.iter().zip(row).enumerate() {
                let se = self
                    .stderr
                    .as_ref()
                    .map(|s| format!("{}", s[k][x]))
                    .unwrap_or_default();
                wr.write_record([
                    MapTime::At(t).render(),
                    site.to_string(),
                    format!("{v}"),
                    se,
                ])?;
            }
        }
        if let Some(profile) = thermal {
            write_thermal_rows(&mut wr, &self.sites, profile)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: &Path, thermal: Option<&[f64]>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?, thermal)
    }

    /// Reads a CSV written by [`write_csv`](Self::write_csv). Thermal rows are
    /// returned separately.
    pub fn read_csv<R: Read>(quantity: &str, r: R) -> Result<(Self, Option<Vec<f64>>)> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["time", "site", "value", "stderr"] {
            return Err(Error::config(format!("unexpected CSV header {headers:?}")));
        }
        let mut rows: Vec<(f64, i32, f64, Option<f64>, usize)> = Vec::new();
        let mut thermal = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let rec = rec?;
            let line = k + 2;
            let bad = |m: &str| Error::Config {
                message: m.to_string(),
                field: None,
                line: Some(line),
            };
            let time = MapTime::parse(&rec[0])?;
            let site: i32 = rec[1].parse().map_err(|_| bad("bad site"))?;
            let value: f64 = rec[2].parse().map_err(|_| bad("bad value"))?;
            let se = if rec[3].is_empty() {
                None
            } else {
                Some(rec[3].parse::<f64>().map_err(|_| bad("bad stderr"))?)
            };
            match time {
                MapTime::Thermal => thermal.push(value),
                MapTime::At(t) => rows.push((t, site, value, se, line)),
            }
        }
        let mut map = Self::new(quantity, Vec::new());
        let with_err = rows.first().is_some_and(|r| r.3.is_some());
        if with_err {
            map.stderr = Some(Vec::new());
        }
        let mut start = 0;
        while start < rows.len() {
            let t = rows[start].0;
            let end = rows[start..]
                .iter()
                .position(|r| r.0 != t)
                .map_or(rows.len(), |p| start + p);
            let group = &rows[start..end];
            let sites: Vec<i32> = group.iter().map(|r| r.1).collect();
            if map.times.is_empty() {
                map.sites = sites;
            } else if sites != map.sites {
                return Err(Error::Config {
                    message: "site set differs between time slices".into(),
                    field: None,
                    line: Some(group[0].4),
                });
            }
            if group.iter().any(|r| r.3.is_some() != with_err) {
                return Err(Error::Config {
                    message: "inconsistent stderr column".into(),
                    field: None,
                    line: Some(group[0].4),
                });
            }
            map.times.push(t);
            map.values.push(group.iter().map(|r| r.2).collect());
            if let Some(se) = map.stderr.as_mut() {
                se.push(group.iter().map(|r| r.3.unwrap_or(0.0)).collect());
            }
            start = end;
        }
        let thermal = (!thermal.is_empty()).then_some(thermal);
        Ok((map, thermal))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub(crate) fn write_thermal_rows<W: Write>(
    wr: &mut csv::Writer<W>,
    sites: &[i32],
    profile: &[f64],
) -> Result<()> {
    for (&site, &v) in sites.iter().zip(profile) {
        wr.write_record([
            MapTime::Thermal.render(),
            site.to_string(),
            format!("{v}"),
            String::new(),
        ])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_stderr_and_thermal() {
        let mut m = SpatiotemporalMap::new("epsilon", vec![-1, 0, 1]);
        m.push_with_stderr(0.0, vec![1.0, -1.0, 0.5], vec![0.0, 0.0, 0.1])
            .unwrap();
        m.push_with_stderr(0.05, vec![0.9, -0.8, 0.25], vec![0.01, 0.02, 0.03])
            .unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, Some(&[0.1, 0.2, 0.3])).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("time,site,value,stderr\n"));
        assert!(text.contains("thermal,0,0.2,"));
        let (back, thermal) = SpatiotemporalMap::read_csv("epsilon", buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert_eq!(thermal.unwrap(), vec![0.1, 0.2, 0.3]);
    }

    #[test]
    fn csv_round_trip_plain() {
        let mut m = SpatiotemporalMap::new("q", vec![3, 4]);
        m.push(0.0, vec![0.0, 1.0]).unwrap();
        m.push(1.0 / 3.0, vec![0.125, 0.875]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf, None).unwrap();
        let (back, thermal) = SpatiotemporalMap::read_csv("q", buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert!(thermal.is_none());
    }

    #[test]
    fn json_has_fields() {
        let mut m = SpatiotemporalMap::new("q", vec![0]);
        m.push(0.0, vec![1.0]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json().unwrap()).unwrap();
        assert_eq!(v["quantity"], "q");
        assert!(v.get("stderr").is_none());
    }
}
