use crate::error::ExperimentError;

/// Empirical distribution: sorted samples and their levels `i/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfTable {
    pub values: Vec<f64>,
    pub levels: Vec<f64>,
}

pub fn empirical_cdf(samples: &[f64]) -> Result<CdfTable, ExperimentError> {
    if samples.is_empty() {
        return Err(ExperimentError::EmptySamples);
    }
    let mut values = samples.to_vec();
    values.sort_by(f64::total_cmp);
    let n = values.len() as f64;
    let levels = (1..=values.len()).map(|i| i as f64 / n).collect();
    Ok(CdfTable { values, levels })
}

impl CdfTable {
    /// Smallest sample whose level is at least `p`.
    pub fn percentile(&self, p: f64) -> f64 {
        let i = self.levels.partition_point(|&l| l < p);
        self.values[i.min(self.values.len() - 1)]
    }

    /// 5% outage value.
    pub fn outage(&self) -> f64 {
        self.percentile(0.05)
    }

    pub fn median(&self) -> f64 {
        self.percentile(0.5)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}
