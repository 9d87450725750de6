//! Field file formats: a delimited text format with a self-describing
//! header line, and a flat binary format (64-bit little-endian floats) with
//! a JSON sidecar carrying the same metadata. Values are stored in flat
//! node order (last axis fastest).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{JetscopeError, Result};
use crate::field::SampledField;
use crate::grid::Grid;

pub const TEXT_MAGIC: &str = "# jetscope-field v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Text,
    Bin,
}

impl std::str::FromStr for FieldFormat {
    type Err = JetscopeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(FieldFormat::Text),
            "bin" => Ok(FieldFormat::Bin),
            other => Err(JetscopeError::InvalidInput(format!(
                "unknown field format '{other}'; expected 'text' or 'bin'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SidecarHeader {
    version: u32,
    dim: usize,
    shape: Vec<usize>,
    #[serde(rename = "box")]
    bounds: Vec<[f64; 2]>,
}

fn header_of(grid: &Grid) -> SidecarHeader {
    SidecarHeader {
        version: 1,
        dim: grid.dim,
        shape: grid.cells.clone(),
        bounds: (0..grid.dim).map(|j| [grid.min[j], grid.max[j]]).collect(),
    }
}

fn grid_of(h: &SidecarHeader) -> Result<Grid> {
    if h.version != 1 || h.shape.len() != h.dim || h.bounds.len() != h.dim {
        return Err(JetscopeError::InvalidInput(
            "inconsistent field header metadata".into(),
        ));
    }
    Grid::new(
        h.bounds.iter().map(|b| b[0]).collect(),
        h.bounds.iter().map(|b| b[1]).collect(),
        h.shape.clone(),
    )
}

/// Header line: `# jetscope-field v1 dim=<n> shape=<c0>x<c1> box=<a>:<b>,<a>:<b>`.
fn format_text_header(grid: &Grid) -> String {
    let shape = grid
        .cells
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("x");
    let bounds = (0..grid.dim)
        .map(|j| format!("{}:{}", grid.min[j], grid.max[j]))
        .collect::<Vec<_>>()
        .join(",");
    format!("{TEXT_MAGIC} dim={} shape={shape} box={bounds}", grid.dim)
}

fn parse_text_header(line: &str) -> Result<Grid> {
    let rest = line.strip_prefix(TEXT_MAGIC).ok_or_else(|| {
        JetscopeError::InvalidInput(format!("missing '{TEXT_MAGIC}' header line"))
    })?;
    let mut dim = None;
    let mut shape = None;
    let mut bounds = None;
    for token in rest.split_whitespace() {
        if let Some(v) = token.strip_prefix("dim=") {
            dim = Some(v.parse::<usize>().map_err(|_| bad_header(token))?);
        } else if let Some(v) = token.strip_prefix("shape=") {
            shape = Some(
                v.split('x')
                    .map(|c| c.parse::<usize>().map_err(|_| bad_header(token)))
                    .collect::<Result<Vec<usize>>>()?,
            );
        } else if let Some(v) = token.strip_prefix("box=") {
            bounds = Some(
                v.split(',')
                    .map(|pair| {
                        let (a, b) = pair.split_once(':').ok_or_else(|| bad_header(token))?;
                        Ok([
                            a.parse::<f64>().map_err(|_| bad_header(token))?,
                            b.parse::<f64>().map_err(|_| bad_header(token))?,
                        ])
                    })
                    .collect::<Result<Vec<[f64; 2]>>>()?,
            );
        }
    }
    let (dim, shape, bounds) = match (dim, shape, bounds) {
        (Some(d), Some(s), Some(b)) => (d, s, b),
        _ => {
            return Err(JetscopeError::InvalidInput(
                "field header must carry dim=, shape=, and box=".into(),
            ))
        }
    };
    grid_of(&SidecarHeader {
        version: 1,
        dim,
        shape,
        bounds,
    })
}

fn bad_header(token: &str) -> JetscopeError {
    JetscopeError::InvalidInput(format!("malformed field header token '{token}'"))
}

pub fn write_field_text(f: &SampledField, path: &Path) -> Result<()> {
    let mut out = fs::File::create(path)?;
    writeln!(out, "{}", format_text_header(&f.grid))?;
    for v in &f.values {
        writeln!(out, "{v}")?;
    }
    Ok(())
}

pub fn read_field_text(path: &Path) -> Result<SampledField> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| JetscopeError::InvalidInput("empty field file".into()))??;
    let grid = parse_text_header(&header)?;
    let mut values = Vec::with_capacity(grid.node_count());
    for line in lines {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        values.push(
            t.parse::<f64>()
                .map_err(|_| JetscopeError::InvalidInput(format!("bad field value line '{t}'")))?,
        );
    }
    if values.len() != grid.node_count() {
        return Err(JetscopeError::InvalidInput(format!(
            "field file holds {} values but the grid has {} nodes",
            values.len(),
            grid.node_count()
        )));
    }
    Ok(SampledField { grid, values })
}

fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_field_bin(f: &SampledField, path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(8 * f.values.len());
    for v in &f.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let header = serde_json::to_string_pretty(&header_of(&f.grid))
        .expect("header serialization is infallible");
    fs::write(sidecar_path(path), header)?;
    Ok(())
}

pub fn read_field_bin(path: &Path) -> Result<SampledField> {
    let header: SidecarHeader = serde_json::from_str(&fs::read_to_string(sidecar_path(path))?)
        .map_err(|e| JetscopeError::InvalidInput(format!("bad sidecar header: {e}")))?;
    let grid = grid_of(&header)?;
    let bytes = fs::read(path)?;
    if bytes.len() != 8 * grid.node_count() {
        return Err(JetscopeError::InvalidInput(format!(
            "binary field holds {} bytes but the grid needs {}",
            bytes.len(),
            8 * grid.node_count()
        )));
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(SampledField { grid, values })
}

pub fn read_field(path: &Path, format: FieldFormat) -> Result<SampledField> {
    match format {
        FieldFormat::Text => read_field_text(path),
        FieldFormat::Bin => read_field_bin(path),
    }
}

pub fn write_field(f: &SampledField, path: &Path, format: FieldFormat) -> Result<()> {
    match format {
        FieldFormat::Text => write_field_text(f, path),
        FieldFormat::Bin => write_field_bin(f, path),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_field() -> SampledField {
        let g = Grid::new(vec![-1.0, 0.0], vec![1.0, 2.0], vec![8, 16]).unwrap();
        SampledField::from_fn(g, |x| (3.0 * x[0]).sin() + x[1] * x[1]).unwrap()
    }

    #[test]
    fn text_round_trip_is_exact() {
        let f = sample_field();
        let dir = std::env::temp_dir().join("jetscope-io-text");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.txt");
        write_field_text(&f, &path).unwrap();
        let g = read_field_text(&path).unwrap();
        assert_eq!(f.grid, g.grid);
        assert_eq!(f.values, g.values);
    }

    #[test]
    fn bin_round_trip_is_exact() {
        let f = sample_field();
        let dir = std::env::temp_dir().join("jetscope-io-bin");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.bin");
        write_field_bin(&f, &path).unwrap();
        let g = read_field_bin(&path).unwrap();
        assert_eq!(f.grid, g.grid);
        assert_eq!(f.values, g.values);
    }

    #[test]
    fn header_parses_and_rejects_garbage() {
        let g = Grid::symmetric(1, 1.0, 32).unwrap();
        let h = format_text_header(&g);
        assert!(h.starts_with("# jetscope-field v1 dim=1 shape=32 box=-1:1"));
        assert_eq!(parse_text_header(&h).unwrap(), g);
        assert!(parse_text_header("# wrong magic").is_err());
        assert!(parse_text_header("# jetscope-field v1 dim=1").is_err());
    }

    #[test]
    fn value_count_mismatch_rejected() {
        let f = sample_field();
        let dir = std::env::temp_dir().join("jetscope-io-mismatch");
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("field.txt");
        let mut text = format_text_header(&f.grid);
        text.push_str("\n1.0\n2.0\n");
        fs::write(&path, text).unwrap();
        assert!(read_field_text(&path).is_err());
    }
}
