use std::path::PathBuf;

use esa_core::model::RawConfig;
use esa_core::oracle::{compute_upper_bound, DEFAULT_TOLERANCE};
use esa_core::{run, scenarios, Network, Policy, RunOptions};

fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn bundled_files_load_and_round_trip() {
    let mut seen = 0;
    for entry in std::fs::read_dir(scenario_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_none_or(|e| e != "toml") {
            continue;
        }
        let net = Network::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let text = net.raw().to_toml().unwrap();
        let again = Network::from_toml(&text).unwrap();
        assert_eq!(again.raw(), net.raw(), "{}", path.display());
        assert_eq!(RawConfig::from_toml(&text).unwrap(), *net.raw());
        assert_eq!(again.params(50.0).unwrap(), net.params(50.0).unwrap());
        seen += 1;
    }
    assert_eq!(seen, scenarios::all().len());
}

#[test]
fn bound_dominates_short_runs() {
    for (name, net) in scenarios::all() {
        let b = compute_upper_bound(&net, DEFAULT_TOLERANCE).unwrap();
        assert!(b.bound >= b.utility - 1e-12, "{name}");
        for policy in [Policy::Esa, Policy::Mesa] {
            let m = run(&net, &RunOptions::new(policy, net.default_v(), 20_000, 4)).unwrap().metrics;
            assert!(m.utility <= b.bound + 1e-6, "{name} {policy:?}: {} > {}", m.utility, b.bound);
            assert_eq!(m.violations, 0, "{name} {policy:?}");
        }
    }
}

#[test]
fn fig1_plain_run_stays_within_deterministic_bounds() {
    let net = scenarios::paper_fig1();
    let p = net.params(100.0).unwrap();
    let m = run(&net, &RunOptions::new(Policy::Esa, 100.0, 50_000, 9)).unwrap().metrics;
    assert!(m.max_q <= p.q_bound, "{} > {}", m.max_q, p.q_bound);
    let e_cap = p.theta.iter().cloned().fold(0.0, f64::max) + p.h_max;
    assert!(m.max_e <= e_cap);
    assert_eq!(m.energy_node_avg.len(), 6);
}
