use std::io::{BufRead, Read, Write};

use super::GridDensity;
use crate::error::{Error, Result};

const MAGIC: &[u8; 5] = b"GDEN1";
const CSV_HEADER: &str = "nx,ny,ox,oy,cx,cy";

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a number: {s:?}")))
}

fn parse_usize(s: &str) -> Result<usize> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("not a grid size: {s:?}")))
}

impl GridDensity {
    /// Header line, one line of geometry, then one line of `nx` values per grid row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        writeln!(
            w,
            "{},{},{:.16e},{:.16e},{:.16e},{:.16e}",
            self.nx, self.ny, self.origin[0], self.origin[1], self.cell[0], self.cell[1]
        )?;
        let mut line = String::new();
        for row in self.values.chunks(self.nx) {
            line.clear();
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                line.push_str(&format!("{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| Error::Parse("unexpected end of grid file".into()))?
                .map_err(Error::from)
        };
        if next()?.trim() != CSV_HEADER {
            return Err(Error::Parse(format!("grid CSV must start with {CSV_HEADER:?}")));
        }
        let meta = next()?;
        let f: Vec<&str> = meta.split(',').collect();
        if f.len() != 6 {
            return Err(Error::Parse("grid geometry line needs six fields".into()));
        }
        let (nx, ny) = (parse_usize(f[0])?, parse_usize(f[1])?);
        let origin = [parse_f64(f[2])?, parse_f64(f[3])?];
        let cell = [parse_f64(f[4])?, parse_f64(f[5])?];
        let mut values = Vec::with_capacity(nx.saturating_mul(ny));
        for j in 0..ny {
            let line = next()?;
            let before = values.len();
            for v in line.split(',') {
                values.push(parse_f64(v)?);
            }
            if values.len() - before != nx {
                return Err(Error::Parse(format!("grid row {j} does not have {nx} values")));
            }
        }
        GridDensity::new(nx, ny, origin, cell, values)
    }

    /// `GDEN1`, `nx` and `ny` as u64, origin and cell as f64, then the values; little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.nx as u64).to_le_bytes())?;
        w.write_all(&(self.ny as u64).to_le_bytes())?;
        for v in self.origin.iter().chain(&self.cell).chain(&self.values) {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Parse("not a GDEN1 grid file".into()));
        }
        let mut word = [0u8; 8];
        let mut read_u64 = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut word)?;
            Ok(u64::from_le_bytes(word))
        };
        let nx = read_u64(&mut r)? as usize;
        let ny = read_u64(&mut r)? as usize;
        let count = nx
            .checked_mul(ny)
            .and_then(|n| n.checked_add(4))
            .ok_or_else(|| Error::Parse("grid size overflows".into()))?;
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * count {
            return Err(Error::Parse(format!(
                "expected {} payload bytes, found {}",
                8 * count,
                bytes.len()
            )));
        }
        let nums: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        GridDensity::new(nx, ny, [nums[0], nums[1]], [nums[2], nums[3]], nums[4..].to_vec())
    }
}
