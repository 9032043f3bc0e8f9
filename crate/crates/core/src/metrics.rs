//! Error metrics, the sampling-plan variation check, and small statistics
//! helpers used by the experiment runner.

use crate::error::{Error, Result};
use crate::graph::SamplingPlan;

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// `||pi_hat - pi||_inf / ||pi||_inf`.
pub fn rel_linf_error(pi_hat: &[f64], pi: &[f64]) -> Result<f64> {
    check_lengths(pi_hat, pi)?;
    let num = pi_hat.iter().zip(pi).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let den = pi.iter().map(|x| x.abs()).fold(0.0, f64::max);
    Ok(num / den)
}

/// `||pi_hat - pi||_2 / ||pi||_2`.
pub fn rel_l2_error(pi_hat: &[f64], pi: &[f64]) -> Result<f64> {
    check_lengths(pi_hat, pi)?;
    let num = pi_hat.iter().zip(pi).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let den = pi.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(num / den)
}

/// Number of discordant pairs between two rankings of the same items.
pub fn kendall_tau_distance(a: &[usize], b: &[usize]) -> usize {
    assert_eq!(a.len(), b.len(), "rankings of different lengths");
    let mut pos = vec![0; b.len()];
    for (r, &item) in b.iter().enumerate() {
        pos[item] = r;
    }
    let mapped: Vec<usize> = a.iter().map(|&item| pos[item]).collect();
    let mut count = 0;
    for i in 0..mapped.len() {
        for j in i + 1..mapped.len() {
            if mapped[i] > mapped[j] {
                count += 1;
            }
        }
    }
    count
}

/// Outcome of the row-variation check on a sampling plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationCheck {
    pub holds: bool,
    /// `max_i n * sum_j q_ij^2 / (sum_j q_ij)^2`; the condition holds iff
    /// this is at most `s`.
    pub worst_ratio: f64,
}

/// Checks `n * sum_{j != i} q_ij^2 <= s * (sum_{j != i} q_ij)^2` for every
/// row `i`. A row of zeros has ratio 0 (both sides vanish).
pub fn check_variation_condition(plan: &SamplingPlan, s: f64) -> Result<VariationCheck> {
    if !(s > 1.0) {
        return Err(Error::Config(format!("variation constant must exceed 1, got {s}")));
    }
    let n = plan.n();
    let mut worst: f64 = 0.0;
    let mut holds = true;
    for i in 0..n {
        let row = plan.row(i);
        let l1: f64 = row.iter().sum();
        let l2sq: f64 = row.iter().map(|q| q * q).sum();
        let lhs = n as f64 * l2sq;
        let rhs = l1 * l1;
        if lhs > s * rhs {
            holds = false;
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        }
    }
    Ok(VariationCheck {
        holds,
        worst_ratio: worst,
    })
}

/// Median of a non-empty sample; the mean of the two middle values for even
/// sizes.
pub fn median(values: &[f64]) -> Option<f64> {
    quantile(values, 0.5)
}

/// Linear-interpolation quantile (type 7).
pub fn quantile(values: &[f64], q: f64) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    check_lengths(x, y)?;
    if x.len() < 2 {
        return Err(Error::Config("slope needs at least two points".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SbmSpec;

    #[test]
    fn relative_errors() {
        let pi = [0.5, 0.5];
        assert_eq!(rel_linf_error(&pi, &pi).unwrap(), 0.0);
        assert_eq!(rel_l2_error(&pi, &pi).unwrap(), 0.0);
        assert!((rel_linf_error(&[0.6, 0.4], &pi).unwrap() - 0.2).abs() < 1e-15);
        assert!((rel_l2_error(&[0.6, 0.4], &pi).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(rel_linf_error(&[1.0], &pi), Err(Error::LengthMismatch(1, 2)));
    }

    #[test]
    fn variation_uniform_plan() {
        for n in [2, 3, 10, 57] {
            let plan = SamplingPlan::uniform(n, 0.3).unwrap();
            let c = check_variation_condition(&plan, 2.0).unwrap();
            assert!(c.holds);
            assert!((c.worst_ratio - n as f64 / (n - 1) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn variation_one_hot_row() {
        let n = 8;
        let plan = SamplingPlan::from_fn(n, 0.0, |i, j| if (i, j) == (0, 1) { 1.0 } else { 0.0 }).unwrap();
        let c = check_variation_condition(&plan, n as f64 - 0.5).unwrap();
        assert!(!c.holds);
        assert_eq!(c.worst_ratio, n as f64);
        assert!(check_variation_condition(&plan, n as f64).unwrap().holds);
    }

    #[test]
    fn variation_sbm() {
        let spec = SbmSpec::Assortative {
            n: 24,
            m: 3,
            p: 0.05,
            q: vec![0.3, 0.5, 0.9],
        };
        let c = check_variation_condition(&spec.plan().unwrap(), 6.0).unwrap();
        assert!(c.holds);
        assert!(check_variation_condition(&spec.plan().unwrap(), 1.0).is_err());
    }

    #[test]
    fn kendall() {
        assert_eq!(kendall_tau_distance(&[0, 1, 2], &[0, 1, 2]), 0);
        assert_eq!(kendall_tau_distance(&[2, 1, 0], &[0, 1, 2]), 3);
        assert_eq!(kendall_tau_distance(&[1, 0, 2], &[0, 1, 2]), 1);
    }

    #[test]
    fn medians_and_slopes() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.25), Some(2.0));
        let x = [16.0, 64.0, 256.0];
        let y: Vec<f64> = x.iter().map(|k: &f64| 3.0 * k.powf(-0.5)).collect();
        assert!((log_log_slope(&x, &y).unwrap() + 0.5).abs() < 1e-12);
    }
}
