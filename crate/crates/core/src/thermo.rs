//! Closed-form thermodynamics of the SWAP engine.
//!
//! Each qubit `i` has Hamiltonian `omega_i sigma_z / 2` and starts in the Gibbs
//! state of its own bath. A complex SWAP gate exchanges the populations of
//! `|+-⟩` and `|-+⟩`, so every mean quantity below is a function of the two
//! excited-state populations `f(beta_i omega_i) = 1 / (1 + exp(beta_i omega_i))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::golden_section_max;

/// Label of one of the two qubit/bath subsystems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bath {
    One,
    Two,
}

impl Bath {
    pub const BOTH: [Bath; 2] = [Bath::One, Bath::Two];

    pub fn index(self) -> usize {
        match self {
            Bath::One => 0,
            Bath::Two => 1,
        }
    }

    /// The number used in event logs (`1` or `2`).
    pub fn label(self) -> u8 {
        self.index() as u8 + 1
    }

    pub fn from_label(label: u8) -> Option<Bath> {
        match label {
            1 => Some(Bath::One),
            2 => Some(Bath::Two),
            _ => None,
        }
    }
}

/// Physical parameters of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub gamma: f64,
}

impl EngineConfig {
    pub fn new(beta1: f64, beta2: f64, omega1: f64, omega2: f64, gamma: f64) -> Result<Self> {
        let cfg = EngineConfig {
            beta1,
            beta2,
            omega1,
            omega2,
            gamma,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
            ("gamma", self.gamma),
        ] {
            if !(v > 0.0) || v.is_nan() {
                return Err(Error::config(format!("{name} must be strictly positive, got {v}")));
            }
        }
        if self.beta1 > self.beta2 {
            return Err(Error::config(format!(
                "bath 1 must not be colder than bath 2 (beta1 = {} > beta2 = {})",
                self.beta1, self.beta2
            )));
        }
        Ok(())
    }

    pub fn beta(&self, bath: Bath) -> f64 {
        match bath {
            Bath::One => self.beta1,
            Bath::Two => self.beta2,
        }
    }

    pub fn omega(&self, bath: Bath) -> f64 {
        match bath {
            Bath::One => self.omega1,
            Bath::Two => self.omega2,
        }
    }

    /// Excited-state Gibbs population of qubit `bath`.
    pub fn excited_population(&self, bath: Bath) -> f64 {
        fermi(self.beta(bath) * self.omega(bath))
    }

    /// Bose occupation `n_i = 1 / (exp(beta_i omega_i) - 1)` of the bath mode.
    pub fn bose_occupation(&self, bath: Bath) -> f64 {
        1.0 / (self.beta(bath) * self.omega(bath)).exp_m1()
    }

    /// The longer of the two thermal relaxation times,
    /// `max_i (exp(beta_i omega_i) - 1) / gamma`.
    pub fn relaxation_time(&self) -> f64 {
        let t1 = (self.beta1 * self.omega1).exp_m1();
        let t2 = (self.beta2 * self.omega2).exp_m1();
        t1.max(t2) / self.gamma
    }

    /// Inverse temperatures of the two qubits right after a SWAP.
    pub fn post_swap_betas(&self) -> (f64, f64) {
        (
            self.beta2 * self.omega2 / self.omega1,
            self.beta1 * self.omega1 / self.omega2,
        )
    }
}

/// `1 / (1 + e^x)`, written to stay finite for large |x|.
pub(crate) fn fermi(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// Excited-state population `1 / (1 + exp(beta omega))` of a qubit in equilibrium.
///
/// `beta = +inf` is accepted and gives the zero-temperature value 0.
pub fn excited_population(beta: f64, omega: f64) -> Result<f64> {
    if !(beta > 0.0) || !(omega > 0.0) || omega.is_infinite() {
        return Err(Error::Domain(format!(
            "excited_population needs beta > 0 and finite omega > 0, got beta = {beta}, omega = {omega}"
        )));
    }
    Ok(fermi(beta * omega))
}

/// Mean energy changes produced by one SWAP-family gate acting on the bi-Gibbs state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEnergetics {
    pub de1: f64,
    pub de2: f64,
    /// Always `de1 + de2`.
    pub w: f64,
}

impl MeanEnergetics {
    pub(crate) fn from_parts(de1: f64, de2: f64) -> Self {
        MeanEnergetics {
            de1,
            de2,
            w: de1 + de2,
        }
    }
}

pub fn mean_energetics(cfg: &EngineConfig) -> MeanEnergetics {
    let diff = cfg.excited_population(Bath::One) - cfg.excited_population(Bath::Two);
    MeanEnergetics::from_parts(-diff * cfg.omega1, diff * cfg.omega2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    HeatEngine,
    Refrigerator,
    Heater,
    /// `omega2/omega1` sits exactly on `beta1/beta2` or on 1.
    Boundary,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Regime::HeatEngine => "heat engine",
            Regime::Refrigerator => "refrigerator",
            Regime::Heater => "heater",
            Regime::Boundary => "boundary",
        };
        f.write_str(s)
    }
}

pub fn classify_regime(cfg: &EngineConfig) -> Regime {
    let ratio = cfg.omega2 / cfg.omega1;
    let carnot_ratio = cfg.beta1 / cfg.beta2;
    if ratio == carnot_ratio || ratio == 1.0 {
        Regime::Boundary
    } else if ratio > 1.0 {
        Regime::Heater
    } else if ratio < carnot_ratio {
        Regime::Refrigerator
    } else {
        Regime::HeatEngine
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Efficiencies {
    /// `1 - omega2/omega1`; the engine efficiency `-<W>/-<dE1>`.
    pub eta: f64,
    pub eta_carnot: f64,
    /// Refrigerator coefficient of performance, defined only for `omega2 < omega1`.
    pub cop: Option<f64>,
    /// Carnot bound on the coefficient of performance, undefined at equal temperatures.
    pub cop_carnot: Option<f64>,
    pub eta_ca: f64,
}

pub fn efficiencies(cfg: &EngineConfig) -> Efficiencies {
    let ratio = cfg.omega2 / cfg.omega1;
    let cop = (cfg.omega2 < cfg.omega1).then(|| cfg.omega2 / (cfg.omega1 - cfg.omega2));
    let cop_carnot = (cfg.beta1 < cfg.beta2).then(|| 1.0 / (cfg.beta2 / cfg.beta1 - 1.0));
    Efficiencies {
        eta: 1.0 - ratio,
        eta_carnot: 1.0 - cfg.beta1 / cfg.beta2,
        cop,
        cop_carnot,
        eta_ca: 1.0 - (cfg.beta1 / cfg.beta2).sqrt(),
    }
}

/// Work output `-<W>` per swap as a function of `Omega = omega2/omega1`,
/// with `omega1 = 1` and inverse temperatures measured in units of `1/omega1`.
pub fn work_output(beta1: f64, beta2: f64, omega_ratio: f64) -> f64 {
    (fermi(beta1) - fermi(beta2 * omega_ratio)) * (1.0 - omega_ratio)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmegaStar {
    /// The maximizing frequency ratio `Omega*`.
    pub omega_ratio: f64,
    /// Efficiency at maximum power, `1 - Omega*`.
    pub eta_star: f64,
    /// Maximal work output per swap, in units of `omega1`.
    pub w_max: f64,
}

const OMEGA_STAR_GRID: usize = 1000;
const OMEGA_STAR_TOL: f64 = 1e-8;

/// Frequency ratio maximizing the work output at fixed temperatures.
///
/// Inverse temperatures are in units of `1/omega1`. A coarse grid over the
/// engine window `(beta1/beta2, 1)` locates the bracket, golden-section search
/// refines it.
pub fn omega_star(beta1: f64, beta2: f64) -> Result<OmegaStar> {
    if !(beta1 > 0.0) || !(beta2 > 0.0) {
        return Err(Error::Domain(format!(
            "inverse temperatures must be positive, got {beta1}, {beta2}"
        )));
    }
    if beta1 >= beta2 {
        return Err(Error::NoEngineWindow { beta1, beta2 });
    }
    let lo = beta1 / beta2;
    let hi = 1.0;
    let objective = |x: f64| work_output(beta1, beta2, x);
    let step = (hi - lo) / OMEGA_STAR_GRID as f64;
    let best = (1..OMEGA_STAR_GRID)
        .map(|k| (k, objective(lo + k as f64 * step)))
        .fold((1, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
    let a = lo + (best.0 - 1) as f64 * step;
    let b = lo + (best.0 + 1) as f64 * step;
    let (x, w_max) = golden_section_max(objective, a, b, OMEGA_STAR_TOL);
    Ok(OmegaStar {
        omega_ratio: x,
        eta_star: 1.0 - x,
        w_max,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowEtaCFit {
    /// Intercept of `eta*/eta_C` against `eta_C`; linear response predicts 1/2.
    pub linear_coeff: f64,
    /// Slope of `eta*/eta_C`, i.e. the quadratic coefficient `f(beta2)`.
    pub quad_coeff: f64,
    pub linear_se: f64,
    pub quad_se: f64,
}

/// Fits `eta*/eta_C = a + b eta_C` over a grid of small Carnot efficiencies.
pub fn low_eta_c_expansion(beta2: f64, eta_c_grid: &[f64]) -> Result<LowEtaCFit> {
    if eta_c_grid.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "low-eta_C fit needs at least 3 grid points, got {}",
            eta_c_grid.len()
        )));
    }
    if !(beta2 > 0.0) {
        return Err(Error::Domain(format!("beta2 must be positive, got {beta2}")));
    }
    let mut xs = Vec::with_capacity(eta_c_grid.len());
    let mut ys = Vec::with_capacity(eta_c_grid.len());
    for &eta_c in eta_c_grid {
        if !(eta_c > 0.0 && eta_c <= 0.2) {
            return Err(Error::Domain(format!("eta_C grid value {eta_c} outside (0, 0.2]")));
        }
        let star = omega_star(beta2 * (1.0 - eta_c), beta2)?;
        xs.push(eta_c);
        ys.push(star.eta_star / eta_c);
    }
    let fit = crate::regression::linear_fit(&xs, &ys)?;
    Ok(LowEtaCFit {
        linear_coeff: fit.intercept,
        quad_coeff: fit.slope,
        linear_se: fit.intercept_se,
        quad_se: fit.slope_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn reference_engine() -> EngineConfig {
        EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 5.0 / 6.0, 1.0).unwrap()
    }

    #[test]
    fn excited_population_values() {
        // 30-digit evaluations of 1/(1+e^x).
        assert_relative_eq!(
            excited_population(2.0 / 3.0, 1.0).unwrap(),
            0.339243631234182827640,
            max_relative = 1e-14
        );
        assert_relative_eq!(
            excited_population(1.0, 5.0 / 6.0).unwrap(),
            0.302940716034592720717,
            max_relative = 1e-14
        );
        assert_eq!(excited_population(f64::INFINITY, 1.0).unwrap(), 0.0);
        assert!(excited_population(0.0, 1.0).is_err());
        assert!(excited_population(1.0, -1.0).is_err());
    }

    #[test]
    fn reference_mean_energetics() {
        let m = mean_energetics(&reference_engine());
        assert_relative_eq!(m.de1, -0.0363029151995901069227, max_relative = 1e-12);
        assert_relative_eq!(m.de2, 0.0302524293329917557689, max_relative = 1e-12);
        assert_relative_eq!(m.w, -0.00605048586659835115379, max_relative = 1e-11);
        assert_eq!(m.w, m.de1 + m.de2);
    }

    #[test]
    fn degenerate_energetics_vanish() {
        let equal_gaps = EngineConfig::new(0.5, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert_eq!(mean_energetics(&equal_gaps).w, 0.0);
        let matched = EngineConfig::new(0.5, 1.0, 1.0, 0.5, 1.0).unwrap();
        let m = mean_energetics(&matched);
        assert_eq!((m.de1, m.de2, m.w), (0.0, 0.0, 0.0));
    }

    #[test]
    fn regimes() {
        assert_eq!(classify_regime(&reference_engine()), Regime::HeatEngine);
        let fridge = EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(classify_regime(&fridge), Regime::Refrigerator);
        let m = mean_energetics(&fridge);
        assert!(m.de1 > 0.0 && m.de2 < 0.0 && m.w > 0.0);
        let heater = EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 1.2, 1.0).unwrap();
        assert_eq!(classify_regime(&heater), Regime::Heater);
        let m = mean_energetics(&heater);
        assert!(m.de1 < 0.0 && m.de2 > 0.0 && m.w > 0.0);
        let boundary = EngineConfig::new(0.5, 1.0, 1.0, 0.5, 1.0).unwrap();
        assert_eq!(classify_regime(&boundary), Regime::Boundary);
        let unit = EngineConfig::new(0.5, 1.0, 2.0, 2.0, 1.0).unwrap();
        assert_eq!(classify_regime(&unit), Regime::Boundary);
    }

    #[test]
    fn efficiency_values() {
        let e = efficiencies(&reference_engine());
        assert_relative_eq!(e.eta, 1.0 / 6.0, max_relative = 1e-14);
        assert_relative_eq!(e.eta_carnot, 1.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(e.eta_ca, 0.183503419072273967267, max_relative = 1e-14);
        assert_relative_eq!(e.cop.unwrap(), 5.0, max_relative = 1e-12);
        assert_relative_eq!(e.cop_carnot.unwrap(), 2.0, max_relative = 1e-12);

        let same = EngineConfig::new(1.0, 1.0, 1.0, 0.8, 1.0).unwrap();
        let e = efficiencies(&same);
        assert_eq!(e.eta_carnot, 0.0);
        assert_eq!(e.eta_ca, 0.0);
        assert!(e.cop_carnot.is_none());

        let heater = EngineConfig::new(0.5, 1.0, 1.0, 1.5, 1.0).unwrap();
        assert!(efficiencies(&heater).cop.is_none());
    }

    #[test]
    fn config_validation() {
        assert!(EngineConfig::new(1.0, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(EngineConfig::new(0.0, 0.5, 1.0, 1.0, 1.0).is_err());
        assert!(EngineConfig::new(0.5, 1.0, 1.0, 1.0, f64::NAN).is_err());
        assert!(EngineConfig::new(1.0, 1.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn omega_star_reference_value() {
        let s = omega_star(2.0 / 3.0, 1.0).unwrap();
        assert!((s.omega_ratio - 0.83).abs() <= 0.01);
        assert!((s.eta_star - 0.17).abs() <= 0.01);
        // dense-grid brute force oracle, step 1e-5
        let lo = 2.0 / 3.0;
        let brute = (0..((1.0 - lo) / 1e-5) as usize)
            .map(|k| work_output(2.0 / 3.0, 1.0, lo + k as f64 * 1e-5))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(s.w_max >= brute - 1e-12);
        assert!((s.w_max - 0.006051893).abs() < 1e-8);
    }

    #[test]
    fn omega_star_stationary_and_bounded() {
        for &(b1, b2) in &[(0.3, 1.0), (2.0 / 3.0, 1.0), (1.5, 2.0), (0.9, 4.0)] {
            let s = omega_star(b1, b2).unwrap();
            let h = 1e-5;
            let d = (work_output(b1, b2, s.omega_ratio + h) - work_output(b1, b2, s.omega_ratio - h))
                / (2.0 * h);
            assert!(d.abs() < 1e-6, "derivative {d} at ({b1},{b2})");
            assert!(s.eta_star <= 1.0 - b1 / b2);
        }
        assert!(matches!(omega_star(1.0, 1.0), Err(Error::NoEngineWindow { .. })));
        // work at the Carnot end of the window vanishes
        assert!(work_output(0.5, 1.0, 0.5 + 1e-9).abs() < 1e-9);
    }

    #[test]
    fn omega_star_near_equal_temperatures() {
        let s = omega_star(1.0 - 1e-4, 1.0).unwrap();
        assert!(s.eta_star < 1e-4);
    }

    #[test]
    fn low_eta_c_linear_coefficient() {
        let grid: Vec<f64> = (1..=10).map(|k| 0.02 * k as f64).collect();
        let mut quads = Vec::new();
        for beta2 in [0.5, 1.0, 2.0] {
            let fit = low_eta_c_expansion(beta2, &grid).unwrap();
            assert!((fit.linear_coeff - 0.5).abs() <= 0.02, "{fit:?}");
            quads.push(fit.quad_coeff);
        }
        assert!(quads[0] < quads[1] && quads[1] < quads[2], "{quads:?}");
        assert!(low_eta_c_expansion(1.0, &[0.05, 0.1]).is_err());
    }

    #[test]
    fn post_swap_temperatures_follow_regime() {
        let fridge = EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 0.5, 1.0).unwrap();
        let (b1, b2) = fridge.post_swap_betas();
        assert!(b1 < fridge.beta1 && b2 > fridge.beta2);
        let (b1, b2) = reference_engine().post_swap_betas();
        assert!(b1 > 2.0 / 3.0 && b2 < 1.0);
    }

    #[test]
    fn relaxation_time_reference_engine() {
        // the standard tau2 = 0.65 is about half the relaxation time
        let t = reference_engine().relaxation_time();
        assert_relative_eq!(t, (5.0f64 / 6.0).exp() - 1.0, max_relative = 1e-14);
        assert!((0.65 / t - 0.5).abs() < 0.01);
        assert_relative_eq!(
            EngineConfig::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap().bose_occupation(Bath::One),
            0.581976706869326424385,
            max_relative = 1e-14
        );
    }
}
