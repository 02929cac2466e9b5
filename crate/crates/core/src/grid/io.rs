//! Grid function files: one JSON header line `{"m","n","L","N"}` followed by
//! the cell values in row-major order, either as little-endian `f64` bytes or
//! as CSV text (one x-cell per line) with round-trip float formatting.

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use super::{GridFunction, ProductGrid};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub m: usize,
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub points_per_axis: usize,
}

impl From<&ProductGrid> for GridHeader {
    fn from(g: &ProductGrid) -> Self {
        Self {
            m: g.m(),
            n: g.n(),
            half_width: g.half_width(),
            points_per_axis: g.points_per_axis(),
        }
    }
}

impl GridHeader {
    pub fn grid(&self) -> Result<ProductGrid> {
        ProductGrid::new(self.m, self.n, self.half_width, self.points_per_axis)
    }
}

fn read_header<R: BufRead>(reader: &mut R) -> Result<ProductGrid> {
    let mut line = String::new();
    if reader.read_line(&mut line)? == 0 {
        return Err(Error::Format("missing header line".into()));
    }
    let header: GridHeader = serde_json::from_str(line.trim_end())?;
    header.grid()
}

impl GridFunction {
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &GridHeader::from(self.grid()))?;
        out.write_all(b"\n")?;
        for v in self.values() {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let grid = read_header(&mut reader)?;
        let mut bytes = Vec::new();
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != grid.len() * 8 {
            return Err(Error::Format(format!(
                "expected {} value bytes, found {}",
                grid.len() * 8,
                bytes.len()
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        GridFunction::new(grid, values)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        serde_json::to_writer(&mut out, &GridHeader::from(self.grid()))?;
        out.write_all(b"\n")?;
        let ny = self.grid().y_group().len();
        for row in self.values().chunks(ny) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut reader = BufReader::new(input);
        let grid = read_header(&mut reader)?;
        let mut values = Vec::with_capacity(grid.len());
        for line in reader.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            for field in line.split(',') {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|e| Error::Format(format!("bad value {field:?}: {e}")))?;
                values.push(v);
            }
        }
        GridFunction::new(grid, values)
    }
}
