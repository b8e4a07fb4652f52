use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Paired two-sided t-test result. When the differences have (numerically)
/// zero spread the statistic is undefined; `degenerate` is set and `t` and
/// `p_value` are absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTTest {
    pub n: usize,
    pub mean_difference: f64,
    pub sd_difference: f64,
    pub t: Option<f64>,
    pub p_value: Option<f64>,
    pub degenerate: bool,
}

const DEGENERATE_SD: f64 = 1e-12;

pub fn significance_test(a: &[f64], b: &[f64]) -> Result<PairedTTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::InvalidArgument("a paired t-test needs at least 2 pairs".into()));
    }
    let n = a.len();
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = d.iter().sum::<f64>() / n as f64;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd <= DEGENERATE_SD * mean.abs().max(1.0) {
        return Ok(PairedTTest {
            n,
            mean_difference: mean,
            sd_difference: sd,
            t: None,
            p_value: None,
            degenerate: true,
        });
    }
    let t = mean / (sd / (n as f64).sqrt());
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let p = (2.0 * dist.cdf(-t.abs())).min(1.0);
    Ok(PairedTTest {
        n,
        mean_difference: mean,
        sd_difference: sd,
        t: Some(t),
        p_value: Some(p),
        degenerate: false,
    })
}
