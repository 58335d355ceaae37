use rayon::prelude::*;
use serde::Serialize;

use super::{run, Metrics, Policy, RunOptions};
use crate::error::{Error, Result};
use crate::model::Network;

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Fits a line by ordinary least squares. `r2` is 1 when `y` is constant.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::argument("x", "need at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::argument("x", "all abscissae are equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}

/// Fits over seed-averaged metrics, one point per V. Absent when fewer than
/// two distinct V values were run.
#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct SweepFits {
    /// Average backlog against V.
    pub backlog_vs_v: Option<LinearFit>,
    /// Average battery level against V.
    pub energy_vs_v: Option<LinearFit>,
    /// Average (actual) backlog against (ln V)².
    pub backlog_vs_log2_v: Option<LinearFit>,
    /// Virtual backlog against V (two-phase scheme).
    pub virtual_backlog_vs_v: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    /// One row per (V, seed), ordered by V list then seed list.
    pub rows: Vec<Metrics>,
    pub fits: SweepFits,
}

/// Runs every (V, seed) pair, in parallel, and fits the scaling laws.
pub fn sweep(
    net: &Network,
    policy: Policy,
    v_list: &[f64],
    horizon: u64,
    seeds: &[u64],
    phase1_t: Option<u64>,
) -> Result<SweepReport> {
    if v_list.is_empty() {
        return Err(Error::argument("v_list", "at least one V is required"));
    }
    if seeds.is_empty() {
        return Err(Error::argument("seeds", "at least one seed is required"));
    }
    let jobs: Vec<(f64, u64)> = v_list
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(v, seed)| {
            let mut opts = RunOptions::new(policy, v, horizon, seed);
            opts.phase1_t = phase1_t;
            run(net, &opts).map(|o| o.metrics).map_err(|e| Error::Run {
                v,
                seed,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let fits = fit_rows(&rows, v_list, policy);
    Ok(SweepReport { rows, fits })
}

fn fit_rows(rows: &[Metrics], v_list: &[f64], policy: Policy) -> SweepFits {
    let mut vs: Vec<f64> = v_list.to_vec();
    vs.sort_by(f64::total_cmp);
    vs.dedup();
    if vs.len() < 2 {
        return SweepFits::default();
    }
    let mean_of = |f: &dyn Fn(&Metrics) -> f64| -> Vec<f64> {
        vs.iter()
            .map(|&v| {
                let sel: Vec<f64> = rows.iter().filter(|r| r.v == v).map(f).collect();
                sel.iter().sum::<f64>() / sel.len() as f64
            })
            .collect()
    };
    let backlog = mean_of(&|m| m.backlog_avg);
    let energy = mean_of(&|m| m.energy_avg);
    let log2: Vec<f64> = vs.iter().map(|v| v.ln().powi(2)).collect();
    let mut fits = SweepFits {
        backlog_vs_v: linear_fit(&vs, &backlog).ok(),
        energy_vs_v: linear_fit(&vs, &energy).ok(),
        backlog_vs_log2_v: linear_fit(&log2, &backlog).ok(),
        virtual_backlog_vs_v: None,
    };
    if policy == Policy::Mesa {
        let virt = mean_of(&|m| m.virtual_backlog_avg.unwrap_or(0.0));
        fits.virtual_backlog_vs_v = linear_fit(&vs, &virt).ok();
    }
    fits
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;

    #[test]
    fn fit_recovers_exact_line() {
        let f = linear_fit(&[1.0, 2.0, 3.0, 4.0], &[3.0, 5.0, 7.0, 9.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12);
        assert!((f.intercept - 1.0).abs() < 1e-12);
        assert!((f.r2 - 1.0).abs() < 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn fit_r2_matches_hand_computation() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.0, 2.0, 3.0, 5.0];
        let f = linear_fit(&x, &y).unwrap();
        // slope = sxy/sxx = (−1.5·−1.75 + −0.5·−0.75 + 0.5·0.25 + 1.5·2.25)/5 = 6.5/5
        assert!((f.slope - 1.3).abs() < 1e-12);
        let ss_tot = 1.75f64.powi(2) + 0.75f64.powi(2) + 0.25f64.powi(2) + 2.25f64.powi(2);
        let pred: Vec<f64> = x.iter().map(|a| 1.3 * a + f.intercept).collect();
        let ss_res: f64 = pred.iter().zip(&y).map(|(p, b)| (b - p).powi(2)).sum();
        assert!((f.r2 - (1.0 - ss_res / ss_tot)).abs() < 1e-12);
    }

    #[test]
    fn single_point_sweep_equals_run() {
        let net = scenarios::paper_fig1();
        let rep = sweep(&net, Policy::Esa, &[20.0], 3000, &[4], None).unwrap();
        assert_eq!(rep.rows.len(), 1);
        let direct = run(&net, &RunOptions::new(Policy::Esa, 20.0, 3000, 4)).unwrap().metrics;
        assert_eq!(rep.rows[0], direct);
        assert_eq!(rep.fits, SweepFits::default());
    }

    #[test]
    fn rows_follow_input_order() {
        let net = scenarios::paper_fig1();
        let rep = sweep(&net, Policy::Esa, &[50.0, 20.0], 500, &[2, 1], None).unwrap();
        let keys: Vec<(f64, u64)> = rep.rows.iter().map(|m| (m.v, m.seed)).collect();
        assert_eq!(keys, vec![(50.0, 2), (50.0, 1), (20.0, 2), (20.0, 1)]);
        assert!(rep.fits.backlog_vs_v.is_some());
    }

    #[test]
    fn failed_run_names_its_parameters() {
        let net = scenarios::paper_fig1();
        // V = 2 is too small for the two-phase capacity rule
        let err = sweep(&net, Policy::Mesa, &[2.0], 10, &[9], None).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("V = 2") && msg.contains("seed = 9"), "{msg}");
    }
}
