use std::io::{BufRead, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Largest count accepted at ingestion.
pub const MAX_COUNT: u32 = i32::MAX as u32;

/// An observed or simulated count time series `Y_1..Y_T`, `T >= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct CountSeries {
    values: Vec<u32>,
}

impl CountSeries {
    pub fn new(values: Vec<u32>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some(&v) = values.iter().find(|&&v| v > MAX_COUNT) {
            return Err(Error::invalid("count", v as f64, "exceeds 2^31-1"));
        }
        Ok(Self { values })
    }

    /// Builds a series from signed integers, rejecting negatives.
    pub fn from_signed(values: &[i64]) -> Result<Self> {
        let mut out = Vec::with_capacity(values.len());
        for &v in values {
            if v < 0 || v > MAX_COUNT as i64 {
                return Err(Error::invalid("count", v as f64, "must be in [0, 2^31-1]"));
            }
            out.push(v as u32);
        }
        Self::new(out)
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> u32 {
        self.values.iter().copied().max().unwrap_or(0)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().map(|&v| v as f64).sum::<f64>() / self.len() as f64
    }

    /// Unbiased sample variance (0 for a single observation).
    pub fn variance(&self) -> f64 {
        if self.len() < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.values
            .iter()
            .map(|&v| (v as f64 - m).powi(2))
            .sum::<f64>()
            / (self.len() - 1) as f64
    }

    /// Distinct values with their multiplicities, ascending by value.
    pub fn histogram(&self) -> Histogram {
        Histogram::from_values(&self.values)
    }

    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self { values }
    }

    /// Parses the single-column CSV format: an optional header row `y`,
    /// blank lines ignored, one nonnegative integer per row.
    pub fn read_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut values = Vec::new();
        let mut seen_row = false;
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            let field = line.trim();
            if field.is_empty() {
                continue;
            }
            let first = !seen_row;
            seen_row = true;
            if first && field == "y" {
                continue;
            }
            let v: i64 = field.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                message: format!("expected a nonnegative integer, found `{field}`"),
            })?;
            if v < 0 || v > MAX_COUNT as i64 {
                return Err(Error::Parse {
                    line: idx + 1,
                    message: format!("count {v} outside [0, 2^31-1]"),
                });
            }
            values.push(v as u32);
        }
        Self::new(values)
    }

    pub fn read_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn write_csv<W: Write>(&self, mut writer: W) -> Result<()> {
        writeln!(writer, "y")?;
        for v in &self.values {
            writeln!(writer, "{v}")?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn write_csv_path(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Value/multiplicity table of a series. Sums over observations regroup
/// exactly into sums over distinct values.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub values: Vec<u32>,
    pub counts: Vec<f64>,
    pub total: usize,
}

impl Histogram {
    pub fn from_values(values: &[u32]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_unstable();
        let mut out_v = Vec::new();
        let mut out_c: Vec<f64> = Vec::new();
        for v in sorted {
            if out_v.last() == Some(&v) {
                *out_c.last_mut().unwrap() += 1.0;
            } else {
                out_v.push(v);
                out_c.push(1.0);
            }
        }
        Self {
            values: out_v,
            counts: out_c,
            total: values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.values.iter().copied().zip(self.counts.iter().copied())
    }
}
