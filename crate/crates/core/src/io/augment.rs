//! Uniform-grid augmentation with missing responses.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::ssm::{DataRecord, Dataset};

/// For each `(group, replicate)`, insert missing-value records at every
/// multiple of `step` spanning its observed time range that is not already
/// present. The smoother then predicts the curve at those times. Idempotent;
/// the output is sorted by `(group, replicate, time)`.
pub fn augment_grid(data: &Dataset, step: f64) -> Result<Dataset> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::Usage(format!("grid step must be positive, got {step}")));
    }

    let mut by_pair: BTreeMap<(String, String), Vec<DataRecord>> = BTreeMap::new();
    for r in data.records() {
        by_pair
            .entry((r.group.clone(), r.replicate.clone()))
            .or_default()
            .push(r.clone());
    }

    let mut out = Vec::with_capacity(data.len());
    for ((group, replicate), mut recs) in by_pair {
        recs.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        let t_min = recs.first().unwrap().time;
        let t_max = recs.last().unwrap().time;
        let k_min = (t_min / step - 1e-9).ceil() as i64;
        let k_max = (t_max / step + 1e-9).floor() as i64;
        let mut inserted = Vec::new();
        for k in k_min..=k_max {
            let t = k as f64 * step;
            let present = recs
                .iter()
                .any(|r| (r.time - t).abs() <= 1e-9 * t.abs().max(1.0));
            if !present {
                inserted.push(DataRecord {
                    group: group.clone(),
                    replicate: replicate.clone(),
                    time: t,
                    value: None,
                });
            }
        }
        recs.extend(inserted);
        recs.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        out.extend(recs);
    }
    Dataset::new(out)
}
