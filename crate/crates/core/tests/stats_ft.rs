use std::path::Path;

use swap_engine::eventlog::{format_events, parse_log, strip_pulses};
use swap_engine::reconstruct::reconstruct_from_events;
use swap_engine::stats::{integral_ft, power_scan, EnsembleStats, QuantaRatio};
use swap_engine::thermo::efficiencies;
use swap_engine::{Bath, EngineConfig, GateSpec, Protocol, Simulator};

fn reference_engine() -> EngineConfig {
    EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 5.0 / 6.0, 1.0).unwrap()
}

fn ensemble(cfg: EngineConfig, n: usize, m: u64, seed: u64) -> EnsembleStats {
    let sim = Simulator::new(cfg, Protocol::new(n, 0.65).unwrap(), GateSpec::ISwap).unwrap();
    EnsembleStats::simulate(&sim, m, seed).unwrap()
}

#[test]
fn estimators_are_consistent_and_errors_shrink() {
    let mut previous: Option<(f64, f64)> = None;
    for (m, seed) in [(10_000u64, 1u64), (100_000, 2), (1_000_000, 3)] {
        let st = ensemble(reference_engine(), 100, m, seed);
        let ift = st.integral_ft().unwrap();
        let ft = st.ft_log_ratio(10).unwrap();
        assert!(ift.agrees_with(1.0, 3.0), "M = {m}: {ift:?}");
        assert!((ft.slope - ft.expected_slope).abs() <= 3.0 * ft.slope_se, "M = {m}: {} +- {}", ft.slope, ft.slope_se);
        if let Some((ift_se, w_se)) = previous {
            let w_se_now = st.means().unwrap().w.se;
            let r_ift = ift_se / ift.se;
            let r_w = w_se / w_se_now;
            for r in [r_ift, r_w] {
                assert!((r / 10f64.sqrt() - 1.0).abs() < 0.2, "M = {m}: ratio {r}");
            }
        }
        previous = Some((ift.se, st.means().unwrap().w.se));
    }
}

#[test]
fn swap_ensembles_are_rigid() {
    let cfg = reference_engine();
    let sim = Simulator::new(cfg, Protocol::new(100, 0.65).unwrap(), GateSpec::ISwap).unwrap();
    for rec in sim.run_ensemble(20_000, 5) {
        let n = rec.n_w.unwrap();
        assert_eq!(rec.de_quanta, [n, -n]);
        assert_eq!(rec.de2, -(cfg.omega2 / cfg.omega1) * rec.de1);
        assert!((n - rec.heat_quanta(Bath::One)).abs() <= 1);
        if rec.de1 != 0.0 {
            assert!((rec.w / rec.de1 - efficiencies(&cfg).eta).abs() < 1e-12);
        }
    }
    let st = EnsembleStats::simulate(&sim, 20_000, 5).unwrap();
    assert_eq!((st.rigidity_violations(), st.unit_gap_violations()), (0, 0));
}

#[test]
fn reference_histogram_has_both_signs_and_noisier_tails() {
    let st = ensemble(reference_engine(), 100, 200_000, 9);
    let h = st.hist_nw();
    assert!(h.range(1..).next().is_some() && h.range(..0).next().is_some());
    assert!(st.means().unwrap().w.mean < 0.0);
    let ft = st.ft_log_ratio(10).unwrap();
    assert!(ft.points.last().unwrap().se > 3.0 * ft.points[0].se);
    assert_eq!(h.values().sum::<u64>(), st.sample_size());
    assert_eq!(st.hist_joint().values().sum::<u64>(), st.sample_size());
}

#[test]
fn balanced_occupations_give_a_flat_log_ratio() {
    // beta1 omega1 = beta2 omega2 but omega2 < omega1, so pulses still move quanta
    let cfg = EngineConfig::new(0.5, 1.0, 1.0, 0.5, 1.0).unwrap();
    let st = ensemble(cfg, 100, 200_000, 10);
    let ft = st.ft_log_ratio(10).unwrap();
    assert_eq!(ft.expected_slope, 0.0);
    assert!(ft.slope.abs() <= 3.0 * ft.slope_se, "{} +- {}", ft.slope, ft.slope_se);
    for p in &ft.points {
        assert!(p.log_ratio.abs() <= 4.0 * p.se, "{p:?}");
    }
}

#[test]
fn jensen_bound_holds_on_the_sample() {
    let cfg = reference_engine();
    let st = ensemble(cfg, 100, 100_000, 12);
    let m = st.means().unwrap();
    let eta_c = efficiencies(&cfg).eta_carnot;
    assert!(m.w.mean >= eta_c * m.de1.mean);
}

#[test]
fn record_and_histogram_estimators_agree() {
    let cfg = reference_engine();
    let sim = Simulator::new(cfg, Protocol::new(40, 0.65).unwrap(), GateSpec::ISwap).unwrap();
    let recs: Vec<_> = sim.run_ensemble(5000, 13).collect();
    let a = integral_ft(&cfg, &recs).unwrap();
    let b = EnsembleStats::from_records(cfg, &recs).unwrap().integral_ft().unwrap();
    assert!((a.mean - b.mean).abs() < 1e-12 && (a.se - b.se).abs() < 1e-12);
    assert!(integral_ft(&cfg, &recs[..999]).is_err());
}

#[test]
fn thin_ensembles_lack_paired_support() {
    let st = ensemble(reference_engine(), 100, 30, 14);
    assert!(st.ft_log_ratio(10).is_err());
}

#[test]
fn efficiency_histogram_peaks_at_the_machine_efficiency() {
    let cfg = reference_engine();
    let st = ensemble(cfg, 100, 200_000, 15);
    let h = st.efficiency_distribution().unwrap();
    let eta = efficiencies(&cfg).eta;
    assert_eq!(h.modal_bin(), Some(h.bin_of(eta)));
    assert!(h.infinite > 0);
    // second structure at eta_C = 2 eta: N_W = 2 Q1/omega1
    let c = efficiencies(&cfg).eta_carnot;
    assert!((2.0 * eta - c).abs() < 1e-15);
    let p2 = h.exact_probability(QuantaRatio::new(2, 1));
    assert!(p2 > 0.0);
    let neighbours = [QuantaRatio::new(3, 2), QuantaRatio::new(5, 2)].map(|r| h.exact_probability(r));
    assert!(neighbours.iter().all(|&p| p < p2), "{p2} vs {neighbours:?}");
}

#[test]
fn longer_runs_sharpen_the_efficiency_peak() {
    let cfg = reference_engine();
    let mass = |n: usize, seed: u64| {
        let h = ensemble(cfg, n, 100_000, seed).efficiency_distribution().unwrap();
        let k = h.bin_of(h.eta_machine);
        h.bins.get(&k).copied().unwrap_or(0) as f64 / h.total as f64
    };
    let (a, b) = (mass(100, 16), mass(200, 17));
    let se = ((a * (1.0 - a) + b * (1.0 - b)) / 100_000.0).sqrt();
    assert!(b - a > 3.0 * se, "{a} -> {b}");
}

#[test]
fn power_scan_keeps_efficiency_fixed() {
    let gate = GateSpec::ISwap;
    let solid = EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 0.7, 1.0).unwrap();
    let rows = power_scan(&solid, &gate, 30.0, &[10, 20, 50, 100, 200], 5000, 3).unwrap();
    let eta = rows[0].efficiency.unwrap();
    assert!((eta - 0.3).abs() < 1e-12);
    assert!(rows.iter().all(|r| r.efficiency == Some(eta)));
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0].work_output, &pair[1].work_output);
        assert!(b.mean >= a.mean - 3.0 * (a.se.powi(2) + b.se.powi(2)).sqrt());
    }
    assert!(rows.last().unwrap().work_output.mean > 3.0 * rows[0].work_output.mean);
    assert!(power_scan(&solid, &gate, 30.0, &[20, 10], 10, 0).is_err());
}

#[test]
fn reconstruction_round_trip() {
    let cfg = reference_engine();
    let sim = Simulator::new(cfg, Protocol::new(100, 0.65).unwrap(), GateSpec::ISwap)
        .unwrap()
        .recording(true);
    for rec in sim.run_ensemble(10_000, 18) {
        let text = format_events(&rec.events);
        let parsed = parse_log(&text, Path::new("mem.log")).unwrap();
        let bare = strip_pulses(&parsed);
        assert!(reconstruct_from_events(&parsed, false).flags.is_empty());

        let per_bath = reconstruct_from_events(&bare, false);
        assert_eq!(per_bath.de_quanta, [rec.heat_quanta(Bath::One), rec.heat_quanta(Bath::Two)]);
        for b in Bath::BOTH {
            assert!((per_bath.de_quanta[b.index()] - rec.de_quanta[b.index()]).abs() <= 1);
        }

        let swap = reconstruct_from_events(&bare, true);
        let n = swap.n_w.unwrap();
        assert!((n - rec.n_w.unwrap()).abs() <= 1);
        assert!((swap.w(&cfg) - rec.w).abs() <= (cfg.omega1 - cfg.omega2) * (1.0 + 1e-12));
    }
}
