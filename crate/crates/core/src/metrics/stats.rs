use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

/// Mean and sample standard deviation. `std` is absent for a single value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub std: Option<f64>,
}

pub fn summarize(values: &[f64]) -> Option<Summary> {
    let n = values.len();
    if n == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = (n > 1).then(|| {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    });
    Some(Summary { n, mean, std })
}

/// Groups values by key and summarizes each group.
pub fn aggregate<K: Ord + Clone>(items: &[(K, f64)]) -> BTreeMap<K, Summary> {
    let mut groups: BTreeMap<K, Vec<f64>> = BTreeMap::new();
    for (k, v) in items {
        groups.entry(k.clone()).or_default().push(*v);
    }
    groups
        .into_iter()
        .filter_map(|(k, v)| summarize(&v).map(|s| (k, s)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f: f64,
    pub p: f64,
    pub df_conditions: f64,
    pub df_error: f64,
    pub ss_conditions: f64,
    pub ss_subjects: f64,
    pub ss_error: f64,
}

/// One-way repeated-measures ANOVA. `data[s][c]` is subject `s` under condition `c`.
pub fn rm_anova_f(data: &[Vec<f64>]) -> Result<AnovaResult> {
    let n = data.len();
    let k = data.first().map_or(0, Vec::len);
    if n < 2 || k < 2 {
        return Err(Error::Validation("need at least two subjects and two conditions".into()));
    }
    if data.iter().any(|row| row.len() != k) {
        return Err(Error::Validation("unbalanced design: every subject needs every condition".into()));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Validation("non-finite observation".into()));
    }
    let grand = data.iter().flatten().sum::<f64>() / (n * k) as f64;
    let ss_total: f64 = data.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_conditions: f64 = (0..k)
        .map(|c| {
            let m = data.iter().map(|row| row[c]).sum::<f64>() / n as f64;
            n as f64 * (m - grand).powi(2)
        })
        .sum();
    let ss_subjects: f64 = data
        .iter()
        .map(|row| k as f64 * (row.iter().sum::<f64>() / k as f64 - grand).powi(2))
        .sum();
    let ss_error = (ss_total - ss_conditions - ss_subjects).max(0.0);
    let df_conditions = (k - 1) as f64;
    let df_error = ((k - 1) * (n - 1)) as f64;
    let scale = ss_total.max(f64::MIN_POSITIVE);
    let (f, p) = if ss_conditions <= 1e-12 * scale {
        (0.0, 1.0)
    } else if ss_error <= 1e-12 * scale {
        (f64::INFINITY, 0.0)
    } else {
        let f = (ss_conditions / df_conditions) / (ss_error / df_error);
        let dist = FisherSnedecor::new(df_conditions, df_error).map_err(|e| Error::Validation(e.to_string()))?;
        (f, dist.sf(f))
    };
    Ok(AnovaResult {
        f,
        p,
        df_conditions,
        df_error,
        ss_conditions,
        ss_subjects,
        ss_error,
    })
}

/// System Usability Scale score from ten 1..=5 answers.
pub fn sus_score(responses: &[u8]) -> Result<f64> {
    if responses.len() != 10 {
        return Err(Error::Validation(format!("SUS needs 10 answers, got {}", responses.len())));
    }
    if let Some(bad) = responses.iter().position(|r| !(1..=5).contains(r)) {
        return Err(Error::Validation(format!("SUS item {} out of range 1..=5", bad + 1)));
    }
    let sum: u32 = responses
        .iter()
        .enumerate()
        .map(|(i, &r)| if i % 2 == 0 { u32::from(r) - 1 } else { 5 - u32::from(r) })
        .sum();
    Ok(f64::from(sum) * 2.5)
}

/// Single Ease Question, 1 (very hard) to 7 (very easy).
pub fn seq_score(response: u8) -> Result<u8> {
    if (1..=7).contains(&response) {
        Ok(response)
    } else {
        Err(Error::Validation(format!("SEQ answer {response} out of range 1..=7")))
    }
}
