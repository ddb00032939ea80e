//! Joint two-qubit states in the energy basis `{|++⟩, |+-⟩, |-+⟩, |--⟩}`.
//!
//! Qubit 1 is the left tensor factor, `+` is the excited level. Index `k`
//! has qubit 1 excited iff `k < 2` and qubit 2 excited iff `k` is even.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::thermo::{Bath, EngineConfig};

pub type C64 = Complex64;

/// One of the four joint energy eigenstates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState(u8);

impl BasisState {
    pub const ALL: [BasisState; 4] = [BasisState(0), BasisState(1), BasisState(2), BasisState(3)];

    pub fn new(index: usize) -> Option<Self> {
        (index < 4).then_some(BasisState(index as u8))
    }

    pub fn from_excitations(qubit1: bool, qubit2: bool) -> Self {
        BasisState(((!qubit1) as u8) << 1 | (!qubit2) as u8)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn is_excited(self, bath: Bath) -> bool {
        match bath {
            Bath::One => self.0 < 2,
            Bath::Two => self.0 % 2 == 0,
        }
    }

    /// 1 if qubit `bath` is excited, 0 otherwise.
    pub fn excitation(self, bath: Bath) -> i64 {
        self.is_excited(bath) as i64
    }

    pub fn flipped(self, bath: Bath) -> Self {
        match bath {
            Bath::One => BasisState(self.0 ^ 0b10),
            Bath::Two => BasisState(self.0 ^ 0b01),
        }
    }

    /// Energy `±omega_i/2` of qubit `bath`.
    pub fn qubit_energy(self, bath: Bath, cfg: &EngineConfig) -> f64 {
        let half = 0.5 * cfg.omega(bath);
        if self.is_excited(bath) {
            half
        } else {
            -half
        }
    }

    pub fn energy(self, cfg: &EngineConfig) -> f64 {
        self.qubit_energy(Bath::One, cfg) + self.qubit_energy(Bath::Two, cfg)
    }

    /// Probability of this state in the bi-Gibbs distribution.
    pub fn gibbs_probability(self, cfg: &EngineConfig) -> f64 {
        Bath::BOTH
            .iter()
            .map(|&b| {
                let f = cfg.excited_population(b);
                if self.is_excited(b) {
                    f
                } else {
                    1.0 - f
                }
            })
            .product()
    }

    /// Two-character label such as `+-`.
    pub fn label(self) -> String {
        Bath::BOTH
            .iter()
            .map(|&b| if self.is_excited(b) { '+' } else { '-' })
            .collect()
    }
}

/// Pure state of the two qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointState {
    pub amplitudes: [C64; 4],
}

impl JointState {
    pub fn basis(state: BasisState) -> Self {
        let mut amplitudes = [C64::new(0.0, 0.0); 4];
        amplitudes[state.index()] = C64::new(1.0, 0.0);
        JointState { amplitudes }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let n = self.norm_sqr().sqrt();
        assert!(n > 0.0, "cannot normalize the zero vector");
        for a in &mut self.amplitudes {
            *a /= n;
        }
    }

    pub fn populations(&self) -> [f64; 4] {
        self.amplitudes.map(|a| a.norm_sqr())
    }

    /// The basis state this vector is proportional to, if it is one.
    pub fn as_basis_state(&self) -> Option<BasisState> {
        let mut found = None;
        for (k, a) in self.amplitudes.iter().enumerate() {
            if *a != C64::new(0.0, 0.0) {
                if found.is_some() {
                    return None;
                }
                found = BasisState::new(k);
            }
        }
        found
    }

    /// Squared norm of `sigma_i |psi⟩` (population of qubit `bath` excited).
    pub fn excited_weight(&self, bath: Bath) -> f64 {
        BasisState::ALL
            .iter()
            .filter(|s| s.is_excited(bath))
            .map(|s| self.amplitudes[s.index()].norm_sqr())
            .sum()
    }

    /// Applies the lowering (`emission = true`) or raising operator of qubit `bath`, unnormalized.
    pub fn apply_jump(&self, bath: Bath, emission: bool) -> JointState {
        let mut out = [C64::new(0.0, 0.0); 4];
        for s in BasisState::ALL {
            if s.is_excited(bath) == emission {
                out[s.flipped(bath).index()] = self.amplitudes[s.index()];
            }
        }
        JointState { amplitudes: out }
    }
}
