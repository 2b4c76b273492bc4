//! Longitudinal data containers: long-format records and the per-group
//! series view consumed by the filter.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Strictly increasing sequence of measurement times (hours since the start
/// of the study; by convention the first time of a group is 0). Gaps may
/// differ between steps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.is_empty() {
            return Err(Error::InvalidData("time grid is empty".into()));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidData("time grid contains a non-finite time".into()));
        }
        for j in 1..times.len() {
            if times[j] <= times[j - 1] {
                return Err(Error::InvalidData(format!(
                    "time grid is not strictly increasing at index {j} ({} after {})",
                    times[j],
                    times[j - 1]
                )));
            }
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Gap `h_j = times[j+1] - times[j]`.
    pub fn gap(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }
}

/// One long-format observation row. A `None` value means "predict here",
/// never "drop silently".
#[derive(Debug, Clone, PartialEq)]
pub struct DataRecord {
    pub group: String,
    pub replicate: String,
    pub time: f64,
    pub value: Option<f64>,
}

/// Long-format longitudinal dataset. `(group, replicate, time)` triples are
/// unique; records keep their construction order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    records: Vec<DataRecord>,
}

impl Dataset {
    pub fn new(records: Vec<DataRecord>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for (i, r) in records.iter().enumerate() {
            if !r.time.is_finite() {
                return Err(Error::InvalidData(format!(
                    "record {i} ({}, {}) has non-finite time",
                    r.group, r.replicate
                )));
            }
            if let Some(v) = r.value {
                if !v.is_finite() {
                    return Err(Error::InvalidData(format!(
                        "record {i} ({}, {}, {}) has non-finite value",
                        r.group, r.replicate, r.time
                    )));
                }
            }
            if !seen.insert((r.group.clone(), r.replicate.clone(), r.time.to_bits())) {
                return Err(Error::InvalidData(format!(
                    "duplicate (group, replicate, time) record: ({}, {}, {})",
                    r.group, r.replicate, r.time
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[DataRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Distinct group labels, sorted.
    pub fn groups(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.records.iter().map(|r| r.group.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }
}

/// One scalar slot of an observation vector: which replicate it belongs to,
/// its (possibly missing) value, and an optional regressor row.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesEntry {
    pub replicate: String,
    pub value: Option<f64>,
    pub regressors: Option<Vec<f64>>,
}

/// Per-group view of a [`Dataset`]: an observation vector per grid time,
/// with one entry per `(replicate, time)` pair present in the data. The
/// vector length may differ between times.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSeries {
    group: String,
    grid: TimeGrid,
    steps: Vec<Vec<SeriesEntry>>,
}

impl ObservationSeries {
    pub fn new(group: impl Into<String>, grid: TimeGrid, steps: Vec<Vec<SeriesEntry>>) -> Result<Self> {
        if steps.len() != grid.len() {
            return Err(Error::InvalidData(format!(
                "series has {} steps for a grid of {} times",
                steps.len(),
                grid.len()
            )));
        }
        for (j, step) in steps.iter().enumerate() {
            let mut seen = BTreeSet::new();
            for e in step {
                if !seen.insert(e.replicate.as_str()) {
                    return Err(Error::InvalidData(format!(
                        "replicate {} appears twice at step {j}",
                        e.replicate
                    )));
                }
            }
        }
        Ok(Self { group: group.into(), grid, steps })
    }

    /// Extract the series of one group. Steps are ordered by time and
    /// entries within a step by replicate label, so the result does not
    /// depend on the record order of the dataset.
    pub fn from_dataset(data: &Dataset, group: &str) -> Result<Self> {
        let mut recs: Vec<&DataRecord> =
            data.records().iter().filter(|r| r.group == group).collect();
        if recs.is_empty() {
            return Err(Error::InvalidData(format!("no records for group {group}")));
        }
        recs.sort_by(|a, b| {
            a.time
                .partial_cmp(&b.time)
                .unwrap()
                .then_with(|| a.replicate.cmp(&b.replicate))
        });
        let mut times = Vec::new();
        let mut steps: Vec<Vec<SeriesEntry>> = Vec::new();
        for r in recs {
            if times.last().map(|t| *t == r.time) != Some(true) {
                times.push(r.time);
                steps.push(Vec::new());
            }
            steps.last_mut().unwrap().push(SeriesEntry {
                replicate: r.replicate.clone(),
                value: r.value,
                regressors: None,
            });
        }
        Ok(Self { group: group.into(), grid: TimeGrid::new(times)?, steps })
    }

    pub fn group(&self) -> &str {
        &self.group
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn steps(&self) -> &[Vec<SeriesEntry>] {
        &self.steps
    }

    /// Distinct replicate labels, sorted.
    pub fn replicates(&self) -> Vec<String> {
        let set: BTreeSet<&str> =
            self.steps.iter().flatten().map(|e| e.replicate.as_str()).collect();
        set.into_iter().map(String::from).collect()
    }

    /// Number of scalar observation slots (missing included).
    pub fn n_entries(&self) -> usize {
        self.steps.iter().map(Vec::len).sum()
    }

    /// Number of non-missing scalar observations.
    pub fn n_observed(&self) -> usize {
        self.steps.iter().flatten().filter(|e| e.value.is_some()).count()
    }
}
