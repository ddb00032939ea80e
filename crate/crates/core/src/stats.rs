//! Ensemble statistics and fluctuation-relation estimators.
//!
//! Everything is accumulated on the integer lattice of energy quanta: `dE_i`
//! and `Q_i` in units of `omega_i`, work in units of `omega1 - omega2` for
//! complex-SWAP runs. Accumulators are plain count maps, so merging shards in
//! any order yields identical results.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gates::GateSpec;
use crate::regression::weighted_slope_through_origin;
use crate::thermo::EngineConfig;
use crate::trajectory::{Protocol, Simulator, TrajectoryRecord};

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Whether `value` lies within `k` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, k: f64) -> bool {
        (self.mean - value).abs() <= k * self.se
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnsembleMeans {
    pub de1: Estimate,
    pub de2: Estimate,
    pub w: Estimate,
    pub q1: Estimate,
    pub q2: Estimate,
}

fn estimate_from_counts<K>(hist: &BTreeMap<K, u64>, value: impl Fn(&K) -> f64) -> Estimate {
    let m: u64 = hist.values().sum();
    let mf = m as f64;
    let mean = hist.iter().map(|(k, &c)| c as f64 * value(k)).sum::<f64>() / mf;
    let ss: f64 = hist.iter().map(|(k, &c)| c as f64 * (value(k) - mean).powi(2)).sum();
    // leave-one-out jackknife of a sample mean reduces to s / sqrt(M)
    let se = if m > 1 { (ss / (mf - 1.0) / mf).sqrt() } else { f64::NAN };
    Estimate { mean, se }
}

/// Mergeable accumulator over trajectory records belonging to one ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    cfg: EngineConfig,
    tag: Option<u64>,
    swap_family: Option<bool>,
    sample_size: u64,
    /// `(dE1/omega1, dE2/omega2)`
    hist_de: BTreeMap<(i64, i64), u64>,
    /// `(Q1/omega1, Q2/omega2)`
    hist_q: BTreeMap<(i64, i64), u64>,
    /// `N_W`, complex-SWAP runs only.
    hist_nw: BTreeMap<i64, u64>,
    /// `(Q1/omega1, N_W)`, complex-SWAP runs only.
    hist_joint: BTreeMap<(i64, i64), u64>,
    /// Complex-SWAP records violating `dE2 = -(omega2/omega1) dE1`.
    rigidity_violations: u64,
    /// Complex-SWAP records where `N_W` and `Q1/omega1` differ by more than one.
    unit_gap_violations: u64,
}

impl EnsembleStats {
    pub fn new(cfg: EngineConfig) -> Self {
        EnsembleStats {
            cfg,
            tag: None,
            swap_family: None,
            sample_size: 0,
            hist_de: BTreeMap::new(),
            hist_q: BTreeMap::new(),
            hist_nw: BTreeMap::new(),
            hist_joint: BTreeMap::new(),
            rigidity_violations: 0,
            unit_gap_violations: 0,
        }
    }

    /// Accumulates a stream of records; an empty stream is an error.
    pub fn from_records<'a>(cfg: EngineConfig, records: impl IntoIterator<Item = &'a TrajectoryRecord>) -> Result<Self> {
        let mut s = Self::new(cfg);
        for r in records {
            s.push(r)?;
        }
        if s.sample_size == 0 {
            return Err(Error::InsufficientData("no trajectory records".into()));
        }
        Ok(s)
    }

    /// Runs `sample_size` trajectories and accumulates them (in parallel, deterministically).
    pub fn simulate(sim: &Simulator, sample_size: u64, seed: u64) -> Result<Self> {
        if sample_size == 0 {
            return Err(Error::config("sample size must be at least 1"));
        }
        let cfg = *sim.config();
        sim.par_fold(
            sample_size,
            seed,
            || Ok(Self::new(cfg)),
            |acc: &mut Result<Self>, _, rec| {
                if let Ok(s) = acc {
                    if let Err(e) = s.push(&rec) {
                        *acc = Err(e);
                    }
                }
            },
            |a, b| a?.merge(b?),
        )
    }

    pub fn push(&mut self, rec: &TrajectoryRecord) -> Result<()> {
        if *self.tag.get_or_insert(rec.tag) != rec.tag {
            return Err(Error::MixedEnsemble);
        }
        let swap = rec.n_w.is_some();
        if *self.swap_family.get_or_insert(swap) != swap {
            return Err(Error::MixedEnsemble);
        }
        self.sample_size += 1;
        let k1 = rec.emissions[0] as i64 - rec.absorptions[0] as i64;
        let k2 = rec.emissions[1] as i64 - rec.absorptions[1] as i64;
        *self.hist_de.entry((rec.de_quanta[0], rec.de_quanta[1])).or_default() += 1;
        *self.hist_q.entry((k1, k2)).or_default() += 1;
        if let Some(n_w) = rec.n_w {
            *self.hist_nw.entry(n_w).or_default() += 1;
            *self.hist_joint.entry((k1, n_w)).or_default() += 1;
            if rec.de_quanta[1] != -rec.de_quanta[0] || n_w != rec.de_quanta[0] {
                self.rigidity_violations += 1;
            }
            if (n_w - k1).abs() > 1 {
                self.unit_gap_violations += 1;
            }
        }
        Ok(())
    }

    /// Combines two shards of the same ensemble.
    pub fn merge(mut self, other: Self) -> Result<Self> {
        if other.sample_size == 0 {
            return Ok(self);
        }
        if self.sample_size == 0 {
            return Ok(other);
        }
        if self.tag != other.tag || self.swap_family != other.swap_family || self.cfg != other.cfg {
            return Err(Error::MixedEnsemble);
        }
        fn add<K: Ord + Copy>(into: &mut BTreeMap<K, u64>, from: &BTreeMap<K, u64>) {
            for (k, c) in from {
                *into.entry(*k).or_default() += c;
            }
        }
        add(&mut self.hist_de, &other.hist_de);
        add(&mut self.hist_q, &other.hist_q);
        add(&mut self.hist_nw, &other.hist_nw);
        add(&mut self.hist_joint, &other.hist_joint);
        self.sample_size += other.sample_size;
        self.rigidity_violations += other.rigidity_violations;
        self.unit_gap_violations += other.unit_gap_violations;
        Ok(self)
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn sample_size(&self) -> u64 {
        self.sample_size
    }

    pub fn tag(&self) -> Option<u64> {
        self.tag
    }

    pub fn is_swap_family(&self) -> bool {
        self.swap_family == Some(true)
    }

    pub fn hist_de(&self) -> &BTreeMap<(i64, i64), u64> {
        &self.hist_de
    }

    pub fn hist_q(&self) -> &BTreeMap<(i64, i64), u64> {
        &self.hist_q
    }

    pub fn hist_nw(&self) -> &BTreeMap<i64, u64> {
        &self.hist_nw
    }

    /// Joint counts keyed by `(Q1/omega1, N_W)`.
    pub fn hist_joint(&self) -> &BTreeMap<(i64, i64), u64> {
        &self.hist_joint
    }

    pub fn rigidity_violations(&self) -> u64 {
        self.rigidity_violations
    }

    pub fn unit_gap_violations(&self) -> u64 {
        self.unit_gap_violations
    }

    fn require_data(&self) -> Result<()> {
        if self.sample_size == 0 {
            Err(Error::InsufficientData("empty ensemble".into()))
        } else {
            Ok(())
        }
    }

    pub fn means(&self) -> Result<EnsembleMeans> {
        self.require_data()?;
        let (o1, o2) = (self.cfg.omega1, self.cfg.omega2);
        Ok(EnsembleMeans {
            de1: estimate_from_counts(&self.hist_de, |&(m1, _)| m1 as f64 * o1),
            de2: estimate_from_counts(&self.hist_de, |&(_, m2)| m2 as f64 * o2),
            w: estimate_from_counts(&self.hist_de, |&(m1, m2)| m1 as f64 * o1 + m2 as f64 * o2),
            q1: estimate_from_counts(&self.hist_q, |&(k1, _)| k1 as f64 * o1),
            q2: estimate_from_counts(&self.hist_q, |&(_, k2)| k2 as f64 * o2),
        })
    }

    /// Ensemble efficiency `<W> / <dE1>` from exact quanta totals, so for
    /// complex-SWAP ensembles it is bitwise `1 - omega2/omega1`.
    pub fn efficiency(&self) -> Option<f64> {
        let (s1, s2) = self
            .hist_de
            .iter()
            .fold((0i128, 0i128), |(a, b), (&(m1, m2), &c)| (a + m1 as i128 * c as i128, b + m2 as i128 * c as i128));
        if s1 == 0 {
            return None;
        }
        let ratio = if s2 == -s1 { -1.0 } else { s2 as f64 / s1 as f64 };
        Some(1.0 + ratio * (self.cfg.omega2 / self.cfg.omega1))
    }

    /// `<exp((beta2 - beta1) dE1 - beta2 W)>` with its jackknife standard error.
    pub fn integral_ft(&self) -> Result<Estimate> {
        if self.sample_size < MIN_FT_RECORDS {
            return Err(Error::InsufficientData(format!(
                "integral fluctuation relation needs at least {MIN_FT_RECORDS} records, have {}",
                self.sample_size
            )));
        }
        let cfg = self.cfg;
        Ok(estimate_from_counts(&self.hist_de, |&(m1, m2)| {
            integral_ft_term(&cfg, m1 as f64 * cfg.omega1, m2 as f64 * cfg.omega2)
        }))
    }

    /// Log-ratio `ln P(n)/P(-n)` for every `n > 0` with at least `min_count`
    /// observations on both sides, plus the inverse-variance weighted slope
    /// through the origin.
    pub fn ft_log_ratio(&self, min_count: u64) -> Result<FtLogRatio> {
        if !self.is_swap_family() {
            return Err(Error::InsufficientData("work quanta are only defined for complex-SWAP ensembles".into()));
        }
        let mut points = Vec::new();
        for (&n, &pos) in self.hist_nw.range(1..) {
            let neg = self.hist_nw.get(&-n).copied().unwrap_or(0);
            if pos < min_count.max(1) || neg < min_count.max(1) {
                continue;
            }
            // delta-method variance of ln(c+/c-) for independent Poisson counts
            let var = 1.0 / pos as f64 + 1.0 / neg as f64;
            points.push(LogRatioPoint {
                n_w: n,
                count_pos: pos,
                count_neg: neg,
                log_ratio: (pos as f64 / neg as f64).ln(),
                se: var.sqrt(),
            });
        }
        if points.len() < 3 {
            return Err(Error::InsufficientData(format!(
                "need at least 3 paired +/- work-quanta bins with {min_count} counts each, found {}",
                points.len()
            )));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.n_w as f64).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.log_ratio).collect();
        let vs: Vec<f64> = points.iter().map(|p| p.se * p.se).collect();
        let (slope, slope_se) = weighted_slope_through_origin(&xs, &ys, &vs)?;
        Ok(FtLogRatio {
            points,
            slope,
            slope_se,
            expected_slope: self.cfg.beta1 * self.cfg.omega1 - self.cfg.beta2 * self.cfg.omega2,
        })
    }

    /// Distribution of the heat efficiency `eta_Q = W/Q1` (work output over heat drawn from bath 1).
    pub fn efficiency_distribution(&self) -> Result<EfficiencyHistogram> {
        if !self.is_swap_family() {
            return Err(Error::InsufficientData("heat efficiency histogram needs a complex-SWAP ensemble".into()));
        }
        let eta_machine = 1.0 - self.cfg.omega2 / self.cfg.omega1;
        let mut h = EfficiencyHistogram {
            bin_width: ETA_BIN_WIDTH,
            eta_machine,
            total: self.sample_size,
            bins: BTreeMap::new(),
            infinite: 0,
            excluded: 0,
            exact: BTreeMap::new(),
        };
        for (&(k1, n_w), &c) in &self.hist_joint {
            match (k1, n_w) {
                (0, 0) => h.excluded += c,
                (0, _) => h.infinite += c,
                _ => {
                    let ratio = QuantaRatio::new(n_w, k1);
                    *h.exact.entry(ratio).or_default() += c;
                    let eta = ratio.value() * eta_machine;
                    *h.bins.entry((eta / ETA_BIN_WIDTH).floor() as i64).or_default() += c;
                }
            }
        }
        Ok(h)
    }
}

/// Minimum ensemble size for integral fluctuation-relation estimates.
pub const MIN_FT_RECORDS: u64 = 1000;

const ETA_BIN_WIDTH: f64 = 0.01;

fn integral_ft_term(cfg: &EngineConfig, de1: f64, de2: f64) -> f64 {
    let w = de1 + de2;
    ((cfg.beta2 - cfg.beta1) * de1 - cfg.beta2 * w).exp()
}

/// Integral fluctuation relation computed directly from records (Welford pass).
pub fn integral_ft<'a>(cfg: &EngineConfig, records: impl IntoIterator<Item = &'a TrajectoryRecord>) -> Result<Estimate> {
    let (mut n, mut mean, mut m2) = (0u64, 0.0, 0.0);
    for r in records {
        let x = integral_ft_term(cfg, r.de1, r.de2);
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    if n < MIN_FT_RECORDS {
        return Err(Error::InsufficientData(format!(
            "integral fluctuation relation needs at least {MIN_FT_RECORDS} records, have {n}"
        )));
    }
    Ok(Estimate {
        mean,
        se: (m2 / (n as f64 - 1.0) / n as f64).sqrt(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRatioPoint {
    pub n_w: i64,
    pub count_pos: u64,
    pub count_neg: u64,
    pub log_ratio: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FtLogRatio {
    pub points: Vec<LogRatioPoint>,
    pub slope: f64,
    pub slope_se: f64,
    /// `beta1 omega1 - beta2 omega2`
    pub expected_slope: f64,
}

/// Reduced fraction `N_W / (Q1/omega1)`; `eta_Q` is this times `1 - omega2/omega1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct QuantaRatio {
    pub num: i64,
    pub den: i64,
}

impl QuantaRatio {
    pub fn new(num: i64, den: i64) -> Self {
        assert!(den != 0);
        let g = gcd(num.unsigned_abs(), den.unsigned_abs()) as i64;
        let s = den.signum();
        QuantaRatio {
            num: s * num / g,
            den: s * den / g,
        }
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl Ord for QuantaRatio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as i128 * other.den as i128).cmp(&(other.num as i128 * self.den as i128))
    }
}

impl PartialOrd for QuantaRatio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EfficiencyHistogram {
    pub bin_width: f64,
    /// `1 - omega2/omega1`, the efficiency every complex-SWAP pulse achieves.
    pub eta_machine: f64,
    pub total: u64,
    /// Bin `k` covers `[k, k+1) * bin_width`.
    pub bins: BTreeMap<i64, u64>,
    /// `Q1 = 0` with nonzero work.
    pub infinite: u64,
    /// `Q1 = 0` and `W = 0`: efficiency undefined, not counted anywhere else.
    pub excluded: u64,
    /// Exact tallies keyed by `N_W / (Q1/omega1)`.
    pub exact: BTreeMap<QuantaRatio, u64>,
}

impl EfficiencyHistogram {
    pub fn bin_of(&self, eta: f64) -> i64 {
        (eta / self.bin_width).floor() as i64
    }

    /// Most populated finite bin.
    pub fn modal_bin(&self) -> Option<i64> {
        self.bins.iter().max_by_key(|(k, c)| (**c, std::cmp::Reverse(**k))).map(|(k, _)| *k)
    }

    /// Records with `eta_Q` exactly equal to the machine efficiency.
    pub fn peak_mass(&self) -> u64 {
        self.exact.get(&QuantaRatio::new(1, 1)).copied().unwrap_or(0)
    }

    /// Probability of `eta_Q` exactly `ratio * eta_machine`.
    pub fn exact_probability(&self, ratio: QuantaRatio) -> f64 {
        self.exact.get(&ratio).copied().unwrap_or(0) as f64 / self.total as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerScanRow {
    pub n_pulses: usize,
    pub tau2: f64,
    /// `-<W>` over the whole operation time.
    pub work_output: Estimate,
    /// Work output divided by the operation time.
    pub power: Estimate,
    pub efficiency: Option<f64>,
}

/// Work output and efficiency at fixed operation time `t_op_relax * tau_relax`
/// for each pulse count, with `tau2 = T_op / N`.
pub fn power_scan(
    cfg: &EngineConfig,
    gate: &GateSpec,
    t_op_relax: f64,
    n_values: &[usize],
    sample_size: u64,
    seed: u64,
) -> Result<Vec<PowerScanRow>> {
    if n_values.is_empty() || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::config("pulse counts must be non-empty and strictly ascending"));
    }
    if !(t_op_relax > 0.0) {
        return Err(Error::config("operation time must be positive"));
    }
    let t_op = t_op_relax * cfg.relaxation_time();
    n_values
        .iter()
        .map(|&n| {
            let protocol = Protocol::new(n, t_op / n as f64)?;
            let sim = Simulator::new(*cfg, protocol, gate.clone())?;
            let stats = EnsembleStats::simulate(&sim, sample_size, seed)?;
            let w = stats.means()?.w;
            let work_output = Estimate { mean: -w.mean, se: w.se };
            Ok(PowerScanRow {
                n_pulses: n,
                tau2: protocol.tau2(),
                work_output,
                power: Estimate {
                    mean: work_output.mean / t_op,
                    se: work_output.se / t_op,
                },
                efficiency: stats.efficiency(),
            })
        })
        .collect()
}
