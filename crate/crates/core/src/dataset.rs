//! System-level failure records and their comma-separated file format.
//!
//! One row per failed system: an identifier, the system failure time, one
//! status column per component (`1`, `2`, `3` for an observed censoring
//! code or `M` for masked) and optional numeric covariate columns.
//!
//! ```text
//! system_id,time,c1,c2,c3
//! 1,12.5,2,1,2
//! 2,7.25,M,2,M
//! ```

use std::io::{Read, Write};

use thiserror::Error;

use crate::inference::ComponentObservation;
use crate::structures::{CensorCode, ComponentStatus, CutSet, StructureError, SystemStructure};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: {source}")]
    InvalidStatuses { line: u64, source: StructureError },
    #[error("line {line}: masked set {set} is not an allowed pattern")]
    DisallowedMask { line: u64, set: CutSet },
    #[error("header must start with system_id,time followed by component columns")]
    BadHeader,
    #[error("dataset has {got} component columns but the structure has {expected} components")]
    ComponentCount { expected: usize, got: usize },
    #[error("dataset has no rows")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What is known about one failed system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemRecord {
    pub id: String,
    pub time: f64,
    pub statuses: Vec<ComponentStatus>,
    pub covariates: Vec<f64>,
}

impl SystemRecord {
    /// 0-based indices of the masked components.
    pub fn masked_set(&self) -> Option<CutSet> {
        let members: Vec<usize> = (0..self.statuses.len())
            .filter(|&j| self.statuses[j].is_masked())
            .collect();
        (!members.is_empty()).then(|| CutSet::new(members))
    }
}

/// A set of system records with named component and covariate columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub component_names: Vec<String>,
    pub covariate_names: Vec<String>,
    pub records: Vec<SystemRecord>,
}

/// Observed-cause and masked-pattern counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CauseCounts {
    /// Systems whose failure is attributed to each component.
    pub observed: Vec<usize>,
    /// Masked systems grouped by masked set, in cut-set order.
    pub masked: Vec<(CutSet, usize)>,
}

impl CauseCounts {
    /// All counts in one row: observed causes, then masked patterns.
    pub fn flat(&self) -> Vec<usize> {
        self.observed
            .iter()
            .copied()
            .chain(self.masked.iter().map(|(_, n)| *n))
            .collect()
    }
}

/// How strictly masked sets are checked on ingest.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum MaskPolicy {
    /// Masked sets must only be structurally possible.
    #[default]
    Structural,
    /// Masked sets must also appear in the given list, or equal a minimal
    /// cut set when the list is empty.
    Strict(Vec<CutSet>),
}

impl Dataset {
    pub fn new(component_count: usize, records: Vec<SystemRecord>) -> Self {
        let covariates = records.first().map_or(0, |r| r.covariates.len());
        Dataset {
            component_names: (1..=component_count).map(|j| format!("c{j}")).collect(),
            covariate_names: (1..=covariates).map(|k| format!("w{k}")).collect(),
            records,
        }
    }

    pub fn component_count(&self) -> usize {
        self.component_names.len()
    }

    pub fn system_times(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.time).collect()
    }

    /// The fitting data of component `j` (0-based). When `intercept` is
    /// set, a leading 1 is prepended to each covariate vector.
    pub fn component_observations(&self, j: usize, intercept: bool) -> Vec<ComponentObservation> {
        self.records
            .iter()
            .map(|r| {
                let mut w = Vec::with_capacity(r.covariates.len() + 1);
                if intercept {
                    w.push(1.0);
                }
                w.extend(&r.covariates);
                ComponentObservation {
                    time: r.time,
                    status: r.statuses[j],
                    covariates: w,
                }
            })
            .collect()
    }

    pub fn cause_counts(&self) -> CauseCounts {
        let mut observed = vec![0; self.component_count()];
        let mut masked: Vec<(CutSet, usize)> = Vec::new();
        for r in &self.records {
            match r.masked_set() {
                Some(set) => match masked.iter_mut().find(|(s, _)| *s == set) {
                    Some((_, n)) => *n += 1,
                    None => masked.push((set, 1)),
                },
                None => {
                    if let Some(j) = r
                        .statuses
                        .iter()
                        .position(|s| *s == ComponentStatus::Observed(CensorCode::Uncensored))
                    {
                        observed[j] += 1;
                    }
                }
            }
        }
        masked.sort();
        CauseCounts { observed, masked }
    }

    /// Check every row against the structure. Row numbers in errors are
    /// file line numbers (the header is line 1).
    pub fn validate(&self, structure: &SystemStructure, policy: &MaskPolicy) -> Result<(), DatasetError> {
        if structure.component_count() != self.component_count() {
            return Err(DatasetError::ComponentCount {
                expected: structure.component_count(),
                got: self.component_count(),
            });
        }
        let cuts = structure
            .minimal_cut_sets()
            .map_err(|source| DatasetError::InvalidStatuses { line: 1, source })?;
        for (i, r) in self.records.iter().enumerate() {
            let line = i as u64 + 2;
            structure
                .validate_statuses(&r.statuses)
                .map_err(|source| DatasetError::InvalidStatuses { line, source })?;
            if let (MaskPolicy::Strict(allowed), Some(set)) = (policy, r.masked_set()) {
                let ok = if allowed.is_empty() {
                    cuts.contains(&set)
                } else {
                    allowed.contains(&set)
                };
                if !ok {
                    return Err(DatasetError::DisallowedMask { line, set });
                }
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(reader: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.len() < 3 || &header[0] != "system_id" || &header[1] != "time" {
            return Err(DatasetError::BadHeader);
        }
        // Component columns run until the first covariate column, which is
        // any column whose name does not start with `c` followed by digits.
        let is_component =
            |name: &str| name.len() > 1 && name.starts_with('c') && name[1..].chars().all(|c| c.is_ascii_digit());
        let m = header.iter().skip(2).take_while(|h| is_component(h)).count();
        if m == 0 {
            return Err(DatasetError::BadHeader);
        }
        let component_names: Vec<String> = header.iter().skip(2).take(m).map(String::from).collect();
        let covariate_names: Vec<String> = header.iter().skip(2 + m).map(String::from).collect();

        let mut records = Vec::new();
        for row in rdr.records() {
            let row = row?;
            let line = row.position().map_or(0, |p| p.line());
            let bad = |message: String| DatasetError::Malformed { line, message };
            if row.len() != header.len() {
                return Err(bad(format!("expected {} fields, found {}", header.len(), row.len())));
            }
            let time: f64 = row[1].parse().map_err(|_| bad(format!("invalid time {:?}", &row[1])))?;
            if !(time.is_finite() && time > 0.0) {
                return Err(bad(format!("time must be positive, got {time}")));
            }
            let statuses = (0..m)
                .map(|j| {
                    parse_status(&row[2 + j])
                        .ok_or_else(|| bad(format!("invalid status {:?} in column {}", &row[2 + j], &header[2 + j])))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let covariates = (2 + m..row.len())
                .map(|k| {
                    row[k]
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| bad(format!("invalid covariate {:?} in column {}", &row[k], &header[k])))
                })
                .collect::<Result<Vec<_>, _>>()?;
            records.push(SystemRecord {
                id: row[0].to_string(),
                time,
                statuses,
                covariates,
            });
        }
        if records.is_empty() {
            return Err(DatasetError::Empty);
        }
        Ok(Dataset {
            component_names,
            covariate_names,
            records,
        })
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["system_id".to_string(), "time".to_string()];
        header.extend(self.component_names.iter().cloned());
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.id.clone(), r.time.to_string()];
            row.extend(r.statuses.iter().map(|s| format_status(*s)));
            row.extend(r.covariates.iter().map(f64::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_path(path: &std::path::Path) -> Result<Self, DatasetError> {
        Self::read(std::fs::File::open(path)?)
    }

    pub fn write_path(&self, path: &std::path::Path) -> Result<(), DatasetError> {
        self.write(std::fs::File::create(path)?)
    }
}

pub fn parse_status(s: &str) -> Option<ComponentStatus> {
    match s {
        "M" | "m" => Some(ComponentStatus::Masked),
        _ => s
            .parse::<u8>()
            .ok()
            .and_then(CensorCode::from_code)
            .map(ComponentStatus::Observed),
    }
}

pub fn format_status(s: ComponentStatus) -> String {
    match s {
        ComponentStatus::Masked => "M".to_string(),
        ComponentStatus::Observed(code) => code.code().to_string(),
    }
}
