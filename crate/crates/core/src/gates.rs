//! Two-qubit gates: the complex-SWAP family, iSWAP, and a 15-angle chart of U(4).

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::state::{BasisState, C64};
use crate::thermo::{classify_regime, mean_energetics, Bath, EngineConfig, MeanEnergetics, Regime};

pub const UNITARITY_TOL: f64 = 1e-12;

/// The six index pairs rotated by the Givens chart, in application order.
pub const GIVENS_PAIRS: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

/// A 4x4 unitary in the joint energy basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Unitary4 {
    m: [[C64; 4]; 4],
}

impl Unitary4 {
    pub fn identity() -> Self {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for (k, row) in m.iter_mut().enumerate() {
            row[k] = C64::new(1.0, 0.0);
        }
        Unitary4 { m }
    }

    /// Wraps a matrix after checking `U^dag U = I`.
    pub fn from_matrix(m: [[C64; 4]; 4]) -> Result<Self> {
        let u = Unitary4 { m };
        let defect = u.unitarity_defect();
        if defect > UNITARITY_TOL || defect.is_nan() {
            return Err(Error::NonUnitary(defect));
        }
        Ok(u)
    }

    pub(crate) fn from_matrix_unchecked(m: [[C64; 4]; 4]) -> Self {
        Unitary4 { m }
    }

    pub fn entries(&self) -> &[[C64; 4]; 4] {
        &self.m
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.m[row][col]
    }

    /// Max-norm of `U^dag U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let mut s = C64::new(0.0, 0.0);
                for k in 0..4 {
                    s += self.m[k][i].conj() * self.m[k][j];
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }

    pub fn apply(&self, v: &[C64; 4]) -> [C64; 4] {
        let mut out = [C64::new(0.0, 0.0); 4];
        for (o, row) in out.iter_mut().zip(&self.m) {
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        out
    }

    pub fn matmul(&self, other: &Unitary4) -> Unitary4 {
        let mut m = [[C64::new(0.0, 0.0); 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                m[i][j] = (0..4).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Unitary4 { m }
    }

    /// Max entrywise distance to `other` after removing the best global phase.
    pub fn distance_up_to_phase(&self, other: &Unitary4) -> f64 {
        let overlap: C64 = (0..4)
            .flat_map(|i| (0..4).map(move |j| (i, j)))
            .map(|(i, j)| other.m[i][j].conj() * self.m[i][j])
            .sum();
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut worst: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                worst = worst.max((self.m[i][j] - phase * other.m[i][j]).norm());
            }
        }
        worst
    }

    /// Squared Frobenius distance after removing the best global phase.
    fn frobenius_sqr_up_to_phase(&self, other: &Unitary4) -> f64 {
        let mut overlap = C64::new(0.0, 0.0);
        for i in 0..4 {
            for j in 0..4 {
                overlap += other.m[i][j].conj() * self.m[i][j];
            }
        }
        let phase = if overlap.norm() > 0.0 {
            overlap / overlap.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut d = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d += (self.m[i][j] - phase * other.m[i][j]).norm_sqr();
            }
        }
        d
    }

    /// The column permutation if every column has exactly one nonzero entry.
    ///
    /// For such gates `perm[j]` is the image of basis state `j`.
    pub fn permutation(&self) -> Option<[usize; 4]> {
        let zero = C64::new(0.0, 0.0);
        let mut perm = [0usize; 4];
        let mut seen = [false; 4];
        for (j, p) in perm.iter_mut().enumerate() {
            let nonzero: Vec<usize> = (0..4).filter(|&i| self.m[i][j] != zero).collect();
            if nonzero.len() != 1 || seen[nonzero[0]] {
                return None;
            }
            seen[nonzero[0]] = true;
            *p = nonzero[0];
        }
        Some(perm)
    }
}

// Row-major JSON: [[[re, im], ... 4], ... 4].
impl Serialize for Unitary4 {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .m
            .iter()
            .map(|row| row.iter().map(|c| [c.re, c.im]).collect())
            .collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Unitary4 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows: [[[f64; 2]; 4]; 4] = Deserialize::deserialize(d)?;
        let m = rows.map(|row| row.map(|[re, im]| C64::new(re, im)));
        Unitary4::from_matrix(m).map_err(serde::de::Error::custom)
    }
}

/// Which gate is applied at every pulse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum GateSpec {
    /// Diagonal phases `phi1`, `phi4` on `|++⟩`, `|--⟩`; `phi2`, `phi3` on the swap block.
    SwapFamily { phases: [f64; 4] },
    ISwap,
    /// Three relative diagonal phases, six Givens angles, six Givens phases.
    Generic { angles: [f64; 15] },
}

impl GateSpec {
    pub fn is_swap_family(&self) -> bool {
        matches!(self, GateSpec::SwapFamily { .. } | GateSpec::ISwap)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self {
            GateSpec::SwapFamily { phases } => phases.iter().all(|p| p.is_finite()),
            GateSpec::ISwap => true,
            GateSpec::Generic { angles } => angles.iter().all(|a| a.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::config("gate angles must be finite"))
        }
    }

    pub fn build(&self) -> Unitary4 {
        build_gate(self)
    }
}

impl std::fmt::Display for GateSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        match self {
            GateSpec::ISwap => write!(f, "iswap"),
            GateSpec::SwapFamily { phases } => write!(f, "swap:{}", join(phases)),
            GateSpec::Generic { angles } => write!(f, "generic:{}", join(angles)),
        }
    }
}

impl std::str::FromStr for GateSpec {
    type Err = Error;

    /// Parses `iswap`, `swap`, `swap:p1,p2,p3,p4` or `generic:a1,...,a15`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, args) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a)),
            None => (s, None),
        };
        let parse_list = |a: &str| -> Result<Vec<f64>> {
            a.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::config(format!("bad gate angle {x:?}")))
                })
                .collect()
        };
        let spec = match (name.to_ascii_lowercase().as_str(), args) {
            ("iswap", None) => GateSpec::ISwap,
            ("swap", None) => GateSpec::SwapFamily { phases: [0.0; 4] },
            ("swap", Some(a)) => {
                let v = parse_list(a)?;
                let phases: [f64; 4] = v
                    .try_into()
                    .map_err(|_| Error::config("swap gate takes exactly 4 phases"))?;
                GateSpec::SwapFamily { phases }
            }
            ("generic", Some(a)) => {
                let v = parse_list(a)?;
                let angles: [f64; 15] = v
                    .try_into()
                    .map_err(|_| Error::config("generic gate takes exactly 15 angles"))?;
                GateSpec::Generic { angles }
            }
            _ => return Err(Error::config(format!("unknown gate {s:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

fn swap_family_matrix(phases: &[f64; 4]) -> Unitary4 {
    let zero = C64::new(0.0, 0.0);
    let mut m = [[zero; 4]; 4];
    m[0][0] = cis(phases[0]);
    m[1][2] = cis(phases[1]);
    m[2][1] = cis(phases[2]);
    m[3][3] = cis(phases[3]);
    Unitary4::from_matrix_unchecked(m)
}

/// `D(phi1, phi2, phi3, 0) * G_01 * G_02 * G_03 * G_12 * G_13 * G_23`, where
/// `G_jk(theta, lambda)` rotates the `(j, k)` plane by
/// `[[cos, -e^{-i lambda} sin], [e^{i lambda} sin, cos]]`.
pub fn givens_chart(angles: &[f64; 15]) -> Unitary4 {
    let zero = C64::new(0.0, 0.0);
    let mut m = [[zero; 4]; 4];
    for k in 0..3 {
        m[k][k] = cis(angles[k]);
    }
    m[3][3] = C64::new(1.0, 0.0);
    for (p, &(j, k)) in GIVENS_PAIRS.iter().enumerate() {
        let (s, c) = angles[3 + p].sin_cos();
        let e = cis(angles[9 + p]);
        for row in m.iter_mut() {
            let (mj, mk) = (row[j], row[k]);
            row[j] = mj * c + mk * e * s;
            row[k] = -(mj * e.conj() * s) + mk * c;
        }
    }
    Unitary4::from_matrix_unchecked(m)
}

/// Chart angles that reproduce iSWAP exactly: a quarter turn in the `(|+-⟩, |-+⟩)` plane.
pub fn iswap_chart_angles() -> [f64; 15] {
    let mut a = [0.0; 15];
    a[3 + 3] = FRAC_PI_2;
    a[9 + 3] = FRAC_PI_2;
    a
}

pub fn build_gate(spec: &GateSpec) -> Unitary4 {
    match spec {
        GateSpec::SwapFamily { phases } => swap_family_matrix(phases),
        GateSpec::ISwap => {
            // exact entries rather than cos(pi/2) round-off
            let (z, one, i) = (C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(0.0, 1.0));
            Unitary4::from_matrix_unchecked([[one, z, z, z], [z, z, i, z], [z, i, z, z], [z, z, z, one]])
        }
        GateSpec::Generic { angles } => givens_chart(angles),
    }
}

/// Bi-Gibbs diagonal populations and qubit energies, in basis order.
fn gibbs_diagonal(cfg: &EngineConfig) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let mut p = [0.0; 4];
    let mut e1 = [0.0; 4];
    let mut e2 = [0.0; 4];
    for s in BasisState::ALL {
        p[s.index()] = s.gibbs_probability(cfg);
        e1[s.index()] = s.qubit_energy(Bath::One, cfg);
        e2[s.index()] = s.qubit_energy(Bath::Two, cfg);
    }
    (p, e1, e2)
}

fn energetics_unchecked(u: &Unitary4, p: &[f64; 4], e1: &[f64; 4], e2: &[f64; 4]) -> MeanEnergetics {
    // Tr H_i (U rho U^dag - rho) only needs the diagonal of U rho U^dag since H_i is diagonal.
    let mut de1 = 0.0;
    let mut de2 = 0.0;
    for k in 0..4 {
        let after: f64 = (0..4).map(|j| u.m[k][j].norm_sqr() * p[j]).sum();
        let change = after - p[k];
        de1 += e1[k] * change;
        de2 += e2[k] * change;
    }
    MeanEnergetics::from_parts(de1, de2)
}

/// Mean energetics of one application of `u` to the bi-Gibbs state.
pub fn mean_energetics_for_gate(u: &Unitary4, cfg: &EngineConfig) -> Result<MeanEnergetics> {
    let defect = u.unitarity_defect();
    if defect > UNITARITY_TOL || defect.is_nan() {
        return Err(Error::NonUnitary(defect));
    }
    let (p, e1, e2) = gibbs_diagonal(cfg);
    Ok(energetics_unchecked(u, &p, &e1, &e2))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateOptimum {
    /// Largest work output `-<W>` found over the 15-angle chart.
    pub best_w: f64,
    pub best_angles: [f64; 15],
    /// Work output of the complex SWAP gates.
    pub swap_w: f64,
    /// `swap_w - best_w`; never meaningfully negative.
    pub gap_to_swap: f64,
    /// `-<W> / -<dE1>` at the optimum.
    pub efficiency: f64,
    pub restarts: usize,
    pub under_searched: bool,
}

const POLISH_ROUNDS: usize = 4;

/// Multi-start Nelder-Mead maximization of the work output over U(4).
///
/// Each restart starts uniformly in `[0, 2pi)^15`, and is re-seeded with a fresh
/// simplex around its own minimum a few times to escape simplex collapse.
pub fn optimize_gate(cfg: &EngineConfig, restarts: usize, seed: u64) -> Result<GateOptimum> {
    cfg.validate()?;
    if restarts == 0 {
        return Err(Error::config("optimize_gate needs at least one restart"));
    }
    match classify_regime(cfg) {
        Regime::HeatEngine | Regime::Boundary => {}
        other => {
            return Err(Error::config(format!(
                "gate optimization targets the heat-engine regime, config is a {other}"
            )))
        }
    }
    let (p, e1, e2) = gibbs_diagonal(cfg);
    let objective = |x: &[f64]| {
        let a: &[f64; 15] = x.try_into().expect("15 angles");
        energetics_unchecked(&givens_chart(a), &p, &e1, &e2).w
    };

    let runs: Vec<(f64, Vec<f64>)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let x0: Vec<f64> = (0..15).map(|_| rng.random::<f64>() * TAU).collect();
            let mut opts = NelderMeadOptions::default();
            let mut best = nelder_mead(objective, &x0, &opts);
            opts.initial_step = 0.05;
            for _ in 0..POLISH_ROUNDS {
                let next = nelder_mead(objective, &best.x, &opts);
                let improved = next.value < best.value - 1e-16;
                if next.value <= best.value {
                    best = next;
                }
                if !improved {
                    break;
                }
            }
            (best.value, best.x)
        })
        .collect();

    let (best_value, best_x) = runs
        .into_iter()
        .fold(None::<(f64, Vec<f64>)>, |acc, run| match acc {
            Some(a) if a.0 <= run.0 => Some(a),
            _ => Some(run),
        })
        .expect("at least one restart");

    let best_angles: [f64; 15] = best_x.try_into().expect("15 angles");
    let optimum = mean_energetics_for_gate(&givens_chart(&best_angles), cfg)?;
    let swap_w = -mean_energetics(cfg).w;
    let best_w = -best_value;
    let under_searched = best_w < swap_w - 1e-6 && restarts < 20;
    if under_searched {
        log::warn!(
            "gate optimizer reached {best_w:e} against swap value {swap_w:e} with only {restarts} restarts"
        );
    }
    Ok(GateOptimum {
        best_w,
        best_angles,
        swap_w,
        gap_to_swap: swap_w - best_w,
        efficiency: optimum.w / optimum.de1,
        restarts,
        under_searched,
    })
}

#[derive(Debug, Clone)]
pub struct ChartFit {
    pub angles: [f64; 15],
    pub distance: f64,
}

/// Finds chart angles reproducing `target` up to a global phase.
pub fn fit_chart_to(target: &Unitary4, restarts: usize, seed: u64) -> ChartFit {
    let objective = |x: &[f64]| {
        let a: &[f64; 15] = x.try_into().expect("15 angles");
        givens_chart(a).frobenius_sqr_up_to_phase(target)
    };
    let mut opts = NelderMeadOptions {
        max_evals: 100_000,
        ..NelderMeadOptions::default()
    };
    let mut best: Option<ChartFit> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let x0: Vec<f64> = (0..15).map(|_| rng.random::<f64>() * TAU).collect();
        opts.initial_step = 0.5;
        let mut m = nelder_mead(objective, &x0, &opts);
        opts.initial_step = 0.01;
        for _ in 0..POLISH_ROUNDS {
            let next = nelder_mead(objective, &m.x, &opts);
            if next.value < m.value {
                m = next;
            } else {
                break;
            }
        }
        let angles: [f64; 15] = m.x.try_into().expect("15 angles");
        let distance = givens_chart(&angles).distance_up_to_phase(target);
        if best.as_ref().is_none_or(|b| distance < b.distance) {
            best = Some(ChartFit { angles, distance });
        }
        if distance < 1e-10 {
            break;
        }
    }
    best.expect("at least one restart")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn reference_engine() -> EngineConfig {
        EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 5.0 / 6.0, 1.0).unwrap()
    }

    #[test]
    fn iswap_matrix() {
        let u = build_gate(&GateSpec::ISwap);
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let expected = [
            [one, 0.0.into(), 0.0.into(), 0.0.into()],
            [0.0.into(), 0.0.into(), i, 0.0.into()],
            [0.0.into(), i, 0.0.into(), 0.0.into()],
            [0.0.into(), 0.0.into(), 0.0.into(), one],
        ];
        for r in 0..4 {
            for c in 0..4 {
                assert_eq!(u.get(r, c), expected[r][c]);
            }
        }
        assert_eq!(u.permutation(), Some([0, 2, 1, 3]));
    }

    #[test]
    fn pure_swap_exchanges_anti_aligned_states() {
        let u = build_gate(&GateSpec::SwapFamily { phases: [0.0; 4] });
        let mut v = [C64::new(0.0, 0.0); 4];
        v[1] = 1.0.into();
        let out = u.apply(&v);
        assert_eq!(out[2], C64::new(1.0, 0.0));
        assert_eq!(out[1], C64::new(0.0, 0.0));
    }

    #[test]
    fn chart_hits_iswap_exactly() {
        let u = givens_chart(&iswap_chart_angles());
        assert!(u.distance_up_to_phase(&build_gate(&GateSpec::ISwap)) < 1e-15);
    }

    #[test]
    fn fitted_chart_reproduces_iswap() {
        let target = build_gate(&GateSpec::ISwap);
        let fit = fit_chart_to(&target, 10, 3);
        assert!(fit.distance < 1e-8, "distance {}", fit.distance);
    }

    #[test]
    fn gate_energetics_match_closed_form() {
        let cfg = reference_engine();
        let closed = mean_energetics(&cfg);
        for spec in [
            GateSpec::ISwap,
            GateSpec::SwapFamily { phases: [0.3, 1.1, -2.0, 0.7] },
        ] {
            let m = mean_energetics_for_gate(&spec.build(), &cfg).unwrap();
            assert_abs_diff_eq!(m.de1, closed.de1, epsilon = 1e-15);
            assert_abs_diff_eq!(m.de2, closed.de2, epsilon = 1e-15);
            assert_abs_diff_eq!(m.w, closed.w, epsilon = 1e-15);
        }
        let id = mean_energetics_for_gate(&Unitary4::identity(), &cfg).unwrap();
        assert_eq!((id.de1, id.de2, id.w), (0.0, 0.0, 0.0));
    }

    #[test]
    fn non_unitary_rejected() {
        let mut m = *Unitary4::identity().entries();
        m[0][0] = C64::new(1.1, 0.0);
        assert!(matches!(Unitary4::from_matrix(m), Err(Error::NonUnitary(_))));
        let bad = Unitary4::from_matrix_unchecked(m);
        assert!(mean_energetics_for_gate(&bad, &reference_engine()).is_err());
    }

    #[test]
    fn gate_spec_parsing() {
        assert_eq!("iswap".parse::<GateSpec>().unwrap(), GateSpec::ISwap);
        assert_eq!(
            "swap:0,1,2,3".parse::<GateSpec>().unwrap(),
            GateSpec::SwapFamily { phases: [0.0, 1.0, 2.0, 3.0] }
        );
        assert!("swap:0,1".parse::<GateSpec>().is_err());
        assert!("cnot".parse::<GateSpec>().is_err());
        let generic: String = std::iter::repeat_n("0.5", 15).collect::<Vec<_>>().join(",");
        let g: GateSpec = format!("generic:{generic}").parse().unwrap();
        assert_eq!(g.to_string().parse::<GateSpec>().unwrap(), g);
    }

    #[test]
    fn unitary_json_is_row_major_pairs() {
        let u = build_gate(&GateSpec::ISwap);
        let json = serde_json::to_value(u).unwrap();
        assert_eq!(json[1][2][1].as_f64().unwrap(), 1.0);
        let back: Unitary4 = serde_json::from_value(json).unwrap();
        assert_eq!(back, u);
    }

    #[test]
    fn optimizer_matched_occupations_give_zero() {
        // beta1 omega1 = beta2 omega2: the bi-Gibbs state is already passive.
        let cfg = EngineConfig::new(0.5, 1.0, 1.0, 0.5, 1.0).unwrap();
        let opt = optimize_gate(&cfg, 4, 11).unwrap();
        assert!(opt.best_w.abs() < 1e-9, "{opt:?}");
    }

    #[test]
    fn optimizer_rejects_non_engine_regimes() {
        let heater = EngineConfig::new(0.5, 1.0, 1.0, 1.5, 1.0).unwrap();
        assert!(optimize_gate(&heater, 2, 0).is_err());
        assert!(optimize_gate(&reference_engine(), 0, 0).is_err());
    }
}
