//! `dr_max` selection: the candidate whose variance curve has the largest
//! mean wins, ties going to the smaller rate.

use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, StrategySpec};
use crate::error::{LabError, Result};
use crate::sweep::{run_sweep, SweepOutput, VarianceRecord};

/// Picks the `dr_max` whose curve has the greatest mean. `curves` pairs each
/// candidate with its curve points.
pub fn select_dr_max(curves: &[(f64, Vec<f64>)]) -> Result<f64> {
    let mut sorted: Vec<(f64, f64)> = curves
        .iter()
        .filter(|(_, c)| !c.is_empty())
        .map(|(dr, c)| (*dr, c.iter().sum::<f64>() / c.len() as f64))
        .collect();
    if sorted.is_empty() {
        return Err(LabError::Config("no dr_max candidates with data".into()));
    }
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = sorted[0];
    for &(dr, mean) in &sorted[1..] {
        if mean > best.1 {
            best = (dr, mean);
        }
    }
    Ok(best.0)
}

/// Curve of one strategy: per axis value, the mean variance over trained
/// epochs (epoch 0 alone when nothing was trained).
pub fn curve(records: &[VarianceRecord], strategy: &str) -> Vec<f64> {
    let mine: Vec<&VarianceRecord> = records.iter().filter(|r| r.strategy == strategy).collect();
    let trained = mine.iter().any(|r| r.epoch > 0);
    let mut values: Vec<usize> = mine.iter().map(|r| r.axis_value).collect();
    values.sort_unstable();
    values.dedup();
    values
        .into_iter()
        .map(|v| {
            let pts: Vec<f64> = mine
                .iter()
                .filter(|r| r.axis_value == v && (r.epoch > 0 || !trained))
                .map(|r| r.variance)
                .collect();
            pts.iter().sum::<f64>() / pts.len() as f64
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub scenario: String,
    pub dr_max: f64,
    pub mean_variance: Option<f64>,
    pub chosen: bool,
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub scores: Vec<CandidateScore>,
    /// `(scenario, chosen dr_max)` per diffusion strategy.
    pub chosen: Vec<(String, f64)>,
    pub sweep: SweepOutput,
}

/// Expands every diffusion strategy over the candidate grid, runs the sweep
/// once and scores each candidate.
pub fn run_select(config: &ExperimentConfig) -> Result<Selection> {
    let candidates = &config.diffusion.candidates;
    if candidates.is_empty() {
        return Err(LabError::Config("empty dr_max candidate list".into()));
    }
    let scenarios: Vec<StrategySpec> = config
        .strategies()
        .into_iter()
        .filter(|s| s.diffusion)
        .collect();
    if scenarios.is_empty() {
        return Err(LabError::Config(
            "select-dr needs at least one strategy with diffusion = true".into(),
        ));
    }
    let mut expanded = config.clone();
    expanded.strategies = scenarios
        .iter()
        .flat_map(|s| {
            candidates.iter().map(move |&dr| StrategySpec {
                dr_max: Some(dr),
                ..*s
            })
        })
        .collect();
    let sweep = run_sweep(&expanded)?;

    let mut scores = Vec::new();
    let mut chosen = Vec::new();
    for s in &scenarios {
        let scenario = StrategySpec { dr_max: None, ..*s }.id();
        let curves: Vec<(f64, Vec<f64>)> = candidates
            .iter()
            .map(|&dr| {
                (
                    dr,
                    curve(
                        &sweep.records,
                        &StrategySpec {
                            dr_max: Some(dr),
                            ..*s
                        }
                        .id(),
                    ),
                )
            })
            .collect();
        let pick = select_dr_max(&curves)?;
        for (dr, c) in &curves {
            scores.push(CandidateScore {
                scenario: scenario.clone(),
                dr_max: *dr,
                mean_variance: (!c.is_empty()).then(|| c.iter().sum::<f64>() / c.len() as f64),
                chosen: *dr == pick,
            });
        }
        chosen.push((scenario, pick));
    }
    Ok(Selection {
        scores,
        chosen,
        sweep,
    })
}

pub fn scores_to_csv(scores: &[CandidateScore]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for s in scores {
        w.serialize(s)?;
    }
    let bytes = w.into_inner().map_err(|e| LabError::Emit(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| LabError::Emit(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::DR_MAX_GRID;

    #[test]
    fn dominant_curve_wins() {
        let curves = vec![(0.3, vec![1.0, 0.5, 0.2]), (0.02, vec![2.0, 0.6, 0.3])];
        assert_eq!(select_dr_max(&curves).unwrap(), 0.02);
    }

    #[test]
    fn ties_go_to_smaller_rate() {
        let c = vec![0.4, 0.1];
        let curves = vec![(0.5, c.clone()), (0.16, c.clone()), (0.3, c)];
        assert_eq!(select_dr_max(&curves).unwrap(), 0.16);
    }

    #[test]
    fn empty_candidates_fail() {
        assert!(select_dr_max(&[]).is_err());
        assert!(select_dr_max(&[(0.1, vec![])]).is_err());
    }

    #[test]
    fn grid_covers_reference_optima() {
        for v in [0.30, 0.02, 0.16, 0.01, 0.20, 0.50, 0.04, 0.02] {
            assert!(DR_MAX_GRID.contains(&v), "{v}");
        }
    }
}
