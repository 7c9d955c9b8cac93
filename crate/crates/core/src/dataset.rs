//! Two-level count data: one `(n, r)` pair per area.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CityRecord {
    /// 1-based area identifier.
    pub id: u32,
    /// Population size.
    pub n: u64,
    /// Event count.
    pub r: u64,
}

impl CityRecord {
    pub fn new(id: u32, n: u64, r: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyPopulation { id });
        }
        if r > n {
            return Err(Error::CountExceedsPopulation { id, n, r });
        }
        Ok(Self { id, n, r })
    }

    /// Observed rate `r / n`.
    pub fn rate(&self) -> f64 {
        self.r as f64 / self.n as f64
    }
}

/// Validated, immutable collection of area records with recomputed totals.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    records: Vec<CityRecord>,
    total_events: u64,
    total_population: u64,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    id: u32,
    n: u64,
    r: u64,
}

impl Dataset {
    pub fn new(records: Vec<CityRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut seen = HashSet::with_capacity(records.len());
        for rec in &records {
            // Re-validate: fields are public, so a record may not have come from `CityRecord::new`.
            CityRecord::new(rec.id, rec.n, rec.r)?;
            if !seen.insert(rec.id) {
                return Err(Error::DuplicateId(rec.id));
            }
        }
        let total_events = records.iter().map(|c| c.r).sum();
        let total_population = records.iter().map(|c| c.n).sum();
        Ok(Self {
            records,
            total_events,
            total_population,
        })
    }

    /// Reads a CSV file with header `id,n,r`.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_str(&text)
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut records = Vec::new();
        for (idx, row) in reader.deserialize::<CsvRow>().enumerate() {
            // Row numbers are 1-based data rows (header excluded).
            let row_no = idx + 1;
            let row = row.map_err(|e| Error::MalformedRow {
                row: row_no,
                message: e.to_string(),
            })?;
            records.push(CityRecord::new(row.id, row.n, row.r)?);
        }
        Self::new(records)
    }

    /// The 84 Missouri cities: male lung-cancer deaths (ages 45-54,
    /// 1972-1981) and city population.
    pub fn missouri() -> Self {
        let records = MISSOURI
            .iter()
            .enumerate()
            .map(|(i, &(n, r))| CityRecord { id: i as u32 + 1, n, r })
            .collect();
        Self::new(records).expect("embedded table is valid")
    }

    pub fn records(&self) -> &[CityRecord] {
        &self.records
    }

    /// Number of areas.
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total events, `R`.
    pub fn total_events(&self) -> u64 {
        self.total_events
    }

    /// Total population, `N`.
    pub fn total_population(&self) -> u64 {
        self.total_population
    }

    /// Pooled rate `R / N`.
    pub fn pooled_rate(&self) -> f64 {
        self.total_events as f64 / self.total_population as f64
    }

    /// Position of the area with the given id.
    pub fn position(&self, id: u32) -> Option<usize> {
        self.records.iter().position(|c| c.id == id)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("id,n,r\n");
        for c in &self.records {
            out.push_str(&format!("{},{},{}\n", c.id, c.n, c.r));
        }
        out
    }
}

/// `(n, r)` for cities 1..=84.
const MISSOURI: [(u64, u64); 84] = [
    (1019, 2),
    (1512, 8),
    (1424, 8),
    (54155, 402),
    (447, 1),
    (1907, 12),
    (1755, 11),
    (5756, 42),
    (509, 2),
    (350, 1),
    (473, 2),
    (329, 1),
    (7137, 55),
    (430, 2),
    (304, 1),
    (163, 0),
    (163, 0),
    (159, 0),
    (281, 1),
    (154, 0),
    (889, 6),
    (260, 1),
    (371, 2),
    (232, 1),
    (228, 1),
    (343, 2),
    (454, 3),
    (323, 2),
    (311, 2),
    (784, 6),
    (426, 3),
    (184, 1),
    (181, 1),
    (177, 1),
    (177, 1),
    (291, 2),
    (170, 1),
    (158, 1),
    (274, 2),
    (150, 1),
    (265, 2),
    (257, 2),
    (254, 2),
    (28937, 251),
    (445, 4),
    (447, 4),
    (329, 3),
    (206, 2),
    (313, 3),
    (314, 3),
    (314, 3),
    (202, 2),
    (198, 2),
    (183, 2),
    (292, 3),
    (178, 2),
    (287, 3),
    (282, 3),
    (164, 2),
    (164, 2),
    (1923, 18),
    (3672, 34),
    (261, 3),
    (581, 6),
    (550, 6),
    (431, 5),
    (399, 5),
    (286, 4),
    (592, 7),
    (246, 4),
    (547, 7),
    (438, 6),
    (202, 4),
    (790, 10),
    (648, 9),
    (354, 6),
    (730, 10),
    (144, 4),
    (1093, 14),
    (384, 7),
    (278, 6),
    (596, 10),
    (1889, 28),
    (22514, 334),
];
