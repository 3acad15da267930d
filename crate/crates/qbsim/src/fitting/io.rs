//! CSV readers and writers for dispersion data and feature tables.
//!
//! Columns are located by header name, so extra columns are ignored. Rows of
//! the triplet-like branch (`TT`) are skipped when reading dispersion data.

use std::io::{Read, Write};
use std::path::Path;

use csv::{ReaderBuilder, StringRecord, Terminator, WriterBuilder};

use crate::error::{Error, Result};
use crate::observables::FeatureRecord;
use crate::polaritons::BranchLabel;

use super::{DispersionData, DispersionRecord};

pub const DISPERSION_HEADER: [&str; 4] = ["theta_deg", "branch", "energy_ev", "weight"];
pub const FEATURE_HEADER: [&str; 4] = ["delta_e_ev", "rel_fluor", "rel_sharp", "rel_phos_rate"];

/// Scientific notation with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    WriterBuilder::new().terminator(Terminator::Any(b'\n')).from_writer(w)
}

fn column(headers: &StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::InvalidParameter(format!("missing column {name:?}")))
}

fn parse_f64(rec: &StringRecord, col: usize, line: u64) -> Result<f64> {
    let s = rec.get(col).unwrap_or("").trim();
    s.parse::<f64>().map_err(|_| Error::InvalidParameter(format!("line {line}: cannot parse {s:?} as a number")))
}

pub fn read_dispersion<R: Read>(r: R) -> Result<DispersionData> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let (ct, cb, ce) = (column(&headers, "theta_deg")?, column(&headers, "branch")?, column(&headers, "energy_ev")?);
    let cw = column(&headers, "weight").ok();
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let tag = row.get(cb).unwrap_or("").trim();
        let branch = if tag.is_empty() { None } else { Some(tag.parse::<BranchLabel>()?) };
        if branch == Some(BranchLabel::TTilde) {
            continue;
        }
        let weight = match cw.and_then(|c| row.get(c)).map(str::trim) {
            None | Some("") => None,
            Some(_) => Some(parse_f64(&row, cw.unwrap_or_default(), line)?),
        };
        records.push(DispersionRecord {
            theta_deg: parse_f64(&row, ct, line)?,
            branch,
            energy: parse_f64(&row, ce, line)?,
            weight,
        });
    }
    DispersionData::new(records)
}

pub fn write_dispersion<W: Write>(data: &DispersionData, w: W) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(DISPERSION_HEADER)?;
    for r in &data.records {
        wtr.write_record([
            format_float(r.theta_deg),
            r.branch.map(|b| b.as_str().to_string()).unwrap_or_default(),
            format_float(r.energy),
            r.weight.map(format_float).unwrap_or_default(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_features<R: Read>(r: R) -> Result<Vec<FeatureRecord>> {
    let mut rdr = ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let cols: Vec<usize> = FEATURE_HEADER.iter().map(|n| column(&headers, n)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let v: Vec<f64> = cols.iter().map(|&c| parse_f64(&row, c, line)).collect::<Result<_>>()?;
        out.push(FeatureRecord {
            delta_e: v[0],
            rel_fluorescence_intensity: v[1],
            rel_sharpness: v[2],
            rel_phosphorescence_rate: v[3],
        });
    }
    Ok(out)
}

pub fn write_features<W: Write>(features: &[FeatureRecord], w: W) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(FEATURE_HEADER)?;
    for f in features {
        wtr.write_record(
            [f.delta_e, f.rel_fluorescence_intensity, f.rel_sharpness, f.rel_phosphorescence_rate].map(format_float),
        )?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_dispersion_file(path: &Path) -> Result<DispersionData> {
    read_dispersion(std::fs::File::open(path)?)
}

pub fn read_features_file(path: &Path) -> Result<Vec<FeatureRecord>> {
    read_features(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dispersion_round_trip() {
        let data = DispersionData::new(vec![
            DispersionRecord { theta_deg: 0.0, branch: Some(BranchLabel::LP), energy: 1.9, weight: None },
            DispersionRecord { theta_deg: 10.0, branch: None, energy: 2.3 + 1e-12, weight: Some(0.5) },
        ])
        .unwrap();
        let mut buf = Vec::new();
        write_dispersion(&data, &mut buf).unwrap();
        assert!(!buf.contains(&b'\r'));
        assert_eq!(read_dispersion(buf.as_slice()).unwrap(), data);
    }

    #[test]
    fn triplet_rows_are_skipped_and_extra_columns_ignored() {
        let csv = "theta_deg,branch,energy_ev,w_cavity\n0,UP,2.4,0.1\n0,TT,1.75,0.0\n";
        let d = read_dispersion(csv.as_bytes()).unwrap();
        assert_eq!(d.records.len(), 1);
    }

    #[test]
    fn missing_column_is_named() {
        let e = read_features("delta_e_ev,rel_fluor,rel_sharp\n0,1,1\n".as_bytes()).unwrap_err();
        assert!(e.to_string().contains("rel_phos_rate"));
    }

    #[test]
    fn feature_round_trip() {
        let f = vec![FeatureRecord {
            delta_e: -0.091,
            rel_fluorescence_intensity: 0.97,
            rel_sharpness: 1.2,
            rel_phosphorescence_rate: 1.0 / 3.0,
        }];
        let mut buf = Vec::new();
        write_features(&f, &mut buf).unwrap();
        assert_eq!(read_features(buf.as_slice()).unwrap(), f);
    }
}
