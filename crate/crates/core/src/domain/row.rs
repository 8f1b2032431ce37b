use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const MAX_WIDTH: u32 = 128;

#[inline]
pub(crate) fn width_mask(width: u32) -> u128 {
    if width >= 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

fn check_width(width: u32) -> Result<()> {
    if width == 0 || width > MAX_WIDTH {
        return Err(Error::config(format!(
            "row width {width} outside 1..={MAX_WIDTH}"
        )));
    }
    Ok(())
}

/// A fixed-width bit-string record. Bit 1 is the most significant bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Row {
    value: u128,
    width: u32,
}

impl Row {
    pub fn new(value: u128, width: u32) -> Result<Self> {
        check_width(width)?;
        if value & !width_mask(width) != 0 {
            return Err(Error::input(format!(
                "value {value:#x} does not fit in {width} bits"
            )));
        }
        Ok(Row { value, width })
    }

    pub fn value(&self) -> u128 {
        self.value
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// Bit `index` counted from 1 at the most significant end.
    pub fn bit(&self, index: u32) -> bool {
        (self.value >> (self.width - index)) & 1 == 1
    }

    pub fn lsb(&self) -> bool {
        self.value & 1 == 1
    }
}

/// An ordered collection of `n ≥ 1` rows of a shared width.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "DatasetRepr", into = "DatasetRepr")]
pub struct Dataset {
    width: u32,
    rows: Vec<u128>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DatasetRepr {
    d: u32,
    #[serde(with = "crate::serde_hex::vec")]
    rows: Vec<u128>,
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = Error;
    fn try_from(r: DatasetRepr) -> Result<Self> {
        Dataset::new(r.d, r.rows)
    }
}

impl From<Dataset> for DatasetRepr {
    fn from(x: Dataset) -> Self {
        DatasetRepr {
            d: x.width,
            rows: x.rows,
        }
    }
}

impl Dataset {
    pub fn new(width: u32, rows: Vec<u128>) -> Result<Self> {
        check_width(width)?;
        if rows.is_empty() {
            return Err(Error::input("a dataset needs at least one row"));
        }
        let mask = width_mask(width);
        if let Some(bad) = rows.iter().find(|&&r| r & !mask != 0) {
            return Err(Error::input(format!(
                "row {bad:#x} does not fit in {width} bits"
            )));
        }
        Ok(Dataset { width, rows })
    }

    pub(crate) fn from_parts_unchecked(width: u32, rows: Vec<u128>) -> Self {
        debug_assert!(!rows.is_empty());
        Dataset { width, rows }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[u128] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> Row {
        Row {
            value: self.rows[i],
            width: self.width,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Row> + '_ {
        self.rows.iter().map(move |&value| Row {
            value,
            width: self.width,
        })
    }

    fn row_bytes(&self) -> usize {
        self.width.div_ceil(8) as usize
    }

    /// Binary layout: `d` as u32 LE, `n` as u64 LE, then each row as
    /// `ceil(d/8)` little-endian bytes.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.width.to_le_bytes())?;
        w.write_all(&(self.rows.len() as u64).to_le_bytes())?;
        let nb = self.row_bytes();
        for r in &self.rows {
            w.write_all(&r.to_le_bytes()[..nb])?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 12];
        r.read_exact(&mut head)?;
        let width = u32::from_le_bytes(head[..4].try_into().unwrap());
        let n = u64::from_le_bytes(head[4..].try_into().unwrap());
        check_width(width).map_err(|e| Error::Format(e.to_string()))?;
        let nb = width.div_ceil(8) as usize;
        let mut rows = Vec::with_capacity(n.min(1 << 20) as usize);
        let mut buf = [0u8; 16];
        for _ in 0..n {
            r.read_exact(&mut buf[..nb])?;
            buf[nb..].fill(0);
            rows.push(u128::from_le_bytes(buf));
        }
        Dataset::new(width, rows).map_err(|e| Error::Format(e.to_string()))
    }

    /// Text fixture layout: a `d <width>` line, then one hex row per line.
    /// Blank lines and `#` comments are ignored on input.
    pub fn write_hex<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "d {}", self.width)?;
        let digits = self.width.div_ceil(4) as usize;
        for r in &self.rows {
            writeln!(w, "{r:0digits$x}")?;
        }
        Ok(())
    }

    pub fn read_hex<R: BufRead>(r: R) -> Result<Self> {
        let mut width = None;
        let mut rows = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match width {
                None => {
                    let w = line
                        .strip_prefix("d ")
                        .and_then(|s| s.trim().parse::<u32>().ok())
                        .ok_or_else(|| Error::Format(format!("expected `d <width>`, got {line:?}")))?;
                    width = Some(w);
                }
                Some(_) => rows.push(
                    u128::from_str_radix(line, 16)
                        .map_err(|e| Error::Format(format!("bad hex row {line:?}: {e}")))?,
                ),
            }
        }
        let width = width.ok_or_else(|| Error::Format("missing width header".into()))?;
        Dataset::new(width, rows).map_err(|e| Error::Format(e.to_string()))
    }
}
