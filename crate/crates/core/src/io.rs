//! File formats: node-set JSON, grid-function CSV with a JSON sidecar, measure JSON,
//! plus atomic writes and input hashing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::nodes::NodeSequence;
use crate::spectral::{Grid, GridFunction};
use crate::{Error, Result, C64};

/// Writes `bytes` to a temporary sibling file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path.file_name().ok_or_else(|| Error::Parameter(format!("not a file path: {}", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// Hex SHA-256 over the concatenation of length-prefixed chunks.
pub fn sha256_hex<'a>(chunks: impl IntoIterator<Item = &'a [u8]>) -> String {
    let mut h = Sha256::new();
    for c in chunks {
        h.update((c.len() as u64).to_le_bytes());
        h.update(c);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// JSON text with the given indent width (0 = compact), ending in a newline.
pub fn to_json<T: Serialize>(value: &T, indent: usize) -> Result<String> {
    let mut out = if indent == 0 {
        serde_json::to_string(value)?
    } else {
        let pad = vec![b' '; indent];
        let fmt = serde_json::ser::PrettyFormatter::with_indent(&pad);
        let mut buf = Vec::new();
        let mut ser = serde_json::Serializer::with_formatter(&mut buf, fmt);
        value.serialize(&mut ser)?;
        String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))?
    };
    out.push('\n');
    Ok(out)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// `{ p, q, lambda, mu, truncation_radius }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFile {
    pub p: f64,
    pub q: f64,
    pub lambda: Vec<f64>,
    pub mu: Vec<f64>,
    pub truncation_radius: f64,
}

impl NodeFile {
    pub fn from_pair(lambda: &NodeSequence, mu: &NodeSequence) -> Self {
        Self {
            p: lambda.exponent(),
            q: mu.exponent(),
            lambda: lambda.points().to_vec(),
            mu: mu.points().to_vec(),
            truncation_radius: lambda.truncation_radius().max(mu.truncation_radius()),
        }
    }

    pub fn to_pair(&self) -> Result<(NodeSequence, NodeSequence)> {
        let r = Some(self.truncation_radius);
        Ok((NodeSequence::new(self.lambda.clone(), self.p, r)?, NodeSequence::new(self.mu.clone(), self.q, r)?))
    }

    pub fn read(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

/// `{ support, weights_re, weights_im, label }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureFile {
    pub support: Vec<f64>,
    pub weights_re: Vec<f64>,
    pub weights_im: Vec<f64>,
    pub label: String,
}

impl MeasureFile {
    pub fn weights(&self) -> Result<Vec<C64>> {
        if self.weights_re.len() != self.support.len() || self.weights_im.len() != self.support.len() {
            return Err(Error::Format("measure support and weights differ in length".into()));
        }
        Ok(self.weights_re.iter().zip(&self.weights_im).map(|(&r, &i)| C64::new(r, i)).collect())
    }
}

/// Sidecar describing a pair of grid-function CSVs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub half_width: f64,
    pub size: usize,
    pub dx: f64,
    pub dxi: f64,
    pub freq_half_width: f64,
    pub space_file: String,
    pub freq_file: String,
}

fn csv_text(header: &str, coords: impl Iterator<Item = f64>, values: &[C64]) -> String {
    let mut s = String::with_capacity(values.len() * 72);
    s.push_str(header);
    s.push('\n');
    for (c, v) in coords.zip(values) {
        s.push_str(&format!("{c:.16e},{:.16e},{:.16e}\n", v.re, v.im));
    }
    s
}

fn parse_csv(text: &str, header: &str) -> Result<Vec<C64>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == header => {}
        other => return Err(Error::Format(format!("expected header `{header}`, got {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Format(format!("line {}: expected 3 columns", i + 2)));
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|e| Error::Format(format!("line {}: {e}", i + 2)));
            Ok(C64::new(num(cols[1])?, num(cols[2])?))
        })
        .collect()
}

/// Writes `<stem>.csv` (`x,re,im`), `<stem>_hat.csv` (`xi,re,im`) and `<stem>.json`.
pub fn write_grid_function(dir: &Path, stem: &str, f: &GridFunction) -> Result<PathBuf> {
    let g = f.grid();
    let space_file = format!("{stem}.csv");
    let freq_file = format!("{stem}_hat.csv");
    write_atomic(&dir.join(&space_file), csv_text("x,re,im", g.xs().into_iter(), f.space()).as_bytes())?;
    write_atomic(&dir.join(&freq_file), csv_text("xi,re,im", g.xis().into_iter(), f.freq()).as_bytes())?;
    let side = GridSidecar {
        half_width: g.half_width(),
        size: g.size(),
        dx: g.dx(),
        dxi: g.dxi(),
        freq_half_width: g.freq_half_width(),
        space_file,
        freq_file,
    };
    let path = dir.join(format!("{stem}.json"));
    write_atomic(&path, to_json(&side, 2)?.as_bytes())?;
    Ok(path)
}

/// Reads a grid function back from its sidecar.
pub fn read_grid_function(sidecar: &Path) -> Result<GridFunction> {
    let side: GridSidecar = read_json(sidecar)?;
    let dir = sidecar.parent().unwrap_or(Path::new("."));
    let grid = Grid::new(side.half_width, side.size)?;
    let space = parse_csv(&fs::read_to_string(dir.join(&side.space_file))?, "x,re,im")?;
    let freq = parse_csv(&fs::read_to_string(dir.join(&side.freq_file))?, "xi,re,im")?;
    GridFunction::from_parts(grid, space, freq)
}

/// Reads space samples from a single `x,re,im` CSV on `grid` and transforms them.
pub fn read_space_csv(path: &Path, grid: Grid) -> Result<GridFunction> {
    let space = parse_csv(&fs::read_to_string(path)?, "x,re,im")?;
    GridFunction::from_space(grid, space)
}
