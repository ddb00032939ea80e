//! Quantum-jump trajectories of the pulsed engine.
//!
//! Between pulses each qubit is damped by its own bath. The unraveling runs on
//! the joint four-dimensional space: the effective Hamiltonian is diagonal in
//! the energy basis, so the no-jump norm is a sum of decaying exponentials and
//! the next jump time is found by root-finding on it (waiting-time MCWF).
//!
//! For complex-SWAP gates every state along the trajectory is an energy
//! eigenstate and the process reduces to two classical telegraph processes;
//! [`Engine::Auto`] then uses an exact Gillespie sampler instead.
//!
//! Heat `Q_i` counts energy released *into* bath `i`: `+omega_i` per emission,
//! `-omega_i` per absorption, and `dE_i = dU_i + Q_i`.

use std::hash::{DefaultHasher, Hash, Hasher};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gates::{GateSpec, Unitary4};
use crate::state::{BasisState, JointState, C64};
use crate::thermo::{Bath, EngineConfig};

/// The pulse train: a gate at `t = k tau2` for `k = 0..n_pulses`, each
/// followed by free relaxation for `tau2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    n_pulses: usize,
    tau2: f64,
}

impl Protocol {
    pub fn new(n_pulses: usize, tau2: f64) -> Result<Self> {
        if n_pulses == 0 {
            return Err(Error::config("a protocol needs at least one pulse"));
        }
        Self::checked(n_pulses, tau2)
    }

    /// A single relaxation window of length `duration` with no gate at all.
    pub fn pulse_free(duration: f64) -> Result<Self> {
        Self::checked(0, duration)
    }

    /// `tau2` expressed as a multiple of the engine's longest relaxation time.
    pub fn with_relaxation_multiple(cfg: &EngineConfig, n_pulses: usize, multiple: f64) -> Result<Self> {
        Self::new(n_pulses, multiple * cfg.relaxation_time())
    }

    fn checked(n_pulses: usize, tau2: f64) -> Result<Self> {
        if !(tau2 > 0.0) || !tau2.is_finite() {
            return Err(Error::config(format!("tau2 must be positive and finite, got {tau2}")));
        }
        Ok(Protocol { n_pulses, tau2 })
    }

    pub fn n_pulses(&self) -> usize {
        self.n_pulses
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn total_time(&self) -> f64 {
        self.n_pulses.max(1) as f64 * self.tau2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Emission(Bath),
    Absorption(Bath),
    Pulse(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub time: f64,
    pub kind: EventKind,
}

impl TrajectoryEvent {
    /// Energy carried by the event: `omega_i` for a jump in bath `i`, 0 for a pulse.
    pub fn quantum(&self, cfg: &EngineConfig) -> f64 {
        match self.kind {
            EventKind::Emission(b) | EventKind::Absorption(b) => cfg.omega(b),
            EventKind::Pulse(_) => 0.0,
        }
    }
}

/// Emission and absorption rates of the two baths for an excited/ground qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathRates {
    /// `gamma (n_i + 1)`
    pub emission: [f64; 2],
    /// `gamma n_i`
    pub absorption: [f64; 2],
}

impl BathRates {
    pub fn new(cfg: &EngineConfig) -> Self {
        let n = Bath::BOTH.map(|b| cfg.bose_occupation(b));
        BathRates {
            emission: n.map(|n| cfg.gamma * (n + 1.0)),
            absorption: n.map(|n| cfg.gamma * n),
        }
    }

    /// Rate at which qubit `bath` leaves its current level in basis state `s`.
    pub fn escape(&self, s: BasisState, bath: Bath) -> f64 {
        if s.is_excited(bath) {
            self.emission[bath.index()]
        } else {
            self.absorption[bath.index()]
        }
    }

    /// Total jump rate out of basis state `s`; also its no-jump norm decay rate.
    pub fn total_escape(&self, s: BasisState) -> f64 {
        self.escape(s, Bath::One) + self.escape(s, Bath::Two)
    }
}

/// Instantaneous rates of the four jump channels for a (normalized) state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelRates {
    pub emission: [f64; 2],
    pub absorption: [f64; 2],
}

impl ChannelRates {
    pub fn total(&self) -> f64 {
        self.emission.iter().chain(&self.absorption).sum()
    }
}

pub fn jump_rates(state: &JointState, cfg: &EngineConfig) -> ChannelRates {
    channel_rates(state, &BathRates::new(cfg))
}

fn channel_rates(state: &JointState, rates: &BathRates) -> ChannelRates {
    let norm = state.norm_sqr();
    let excited = Bath::BOTH.map(|b| state.excited_weight(b));
    ChannelRates {
        emission: [0, 1].map(|i| rates.emission[i] * excited[i]),
        absorption: [0, 1].map(|i| rates.absorption[i] * (norm - excited[i])),
    }
}

/// Draws a joint eigenstate from the bi-Gibbs distribution.
pub fn sample_initial_state<R: Rng + ?Sized>(cfg: &EngineConfig, rng: &mut R) -> BasisState {
    let e1 = rng.random::<f64>() < cfg.excited_population(Bath::One);
    let e2 = rng.random::<f64>() < cfg.excited_population(Bath::Two);
    BasisState::from_excitations(e1, e2)
}

/// Uniform draw in the open interval (0, 1).
fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct JumpCounts {
    emissions: [u32; 2],
    absorptions: [u32; 2],
}

impl JumpCounts {
    fn add(&mut self, bath: Bath, emission: bool) {
        if emission {
            self.emissions[bath.index()] += 1;
        } else {
            self.absorptions[bath.index()] += 1;
        }
    }
}

/// Collects jump events and counts for one trajectory.
struct Ledger<'a> {
    counts: JumpCounts,
    events: Option<&'a mut Vec<TrajectoryEvent>>,
}

impl Ledger<'_> {
    fn jump(&mut self, time: f64, bath: Bath, emission: bool) {
        self.counts.add(bath, emission);
        if let Some(ev) = self.events.as_deref_mut() {
            let kind = if emission {
                EventKind::Emission(bath)
            } else {
                EventKind::Absorption(bath)
            };
            ev.push(TrajectoryEvent { time, kind });
        }
    }

    fn pulse(&mut self, time: f64, index: usize) {
        if let Some(ev) = self.events.as_deref_mut() {
            ev.push(TrajectoryEvent {
                time,
                kind: EventKind::Pulse(index),
            });
        }
    }
}

/// Exact telegraph-process sampling for an eigenstate over `[start, end)`.
fn gillespie_interval<R: Rng + ?Sized>(
    mut s: BasisState,
    start: f64,
    end: f64,
    rates: &BathRates,
    rng: &mut R,
    ledger: &mut Ledger<'_>,
) -> BasisState {
    let mut t = start;
    loop {
        let r1 = rates.escape(s, Bath::One);
        let total = r1 + rates.escape(s, Bath::Two);
        t += -open01(rng).ln() / total;
        if t >= end {
            return s;
        }
        let bath = if rng.random::<f64>() * total < r1 {
            Bath::One
        } else {
            Bath::Two
        };
        ledger.jump(t, bath, s.is_excited(bath));
        s = s.flipped(bath);
    }
}

const ROOT_REL_TOL: f64 = 1e-12;

/// Free evolution under `H_eff` for `dt`: phase `exp(-i E_k dt)`, decay `exp(-Gamma_k dt / 2)`.
fn propagate(psi: &mut JointState, dt: f64, energies: &[f64; 4], decay: &[f64; 4]) {
    for k in 0..4 {
        psi.amplitudes[k] *= C64::from_polar((-0.5 * decay[k] * dt).exp(), -energies[k] * dt);
    }
}

fn mcwf_interval<R: Rng + ?Sized>(
    mut psi: JointState,
    start: f64,
    end: f64,
    cfg: &EngineConfig,
    rates: &BathRates,
    rng: &mut R,
    ledger: &mut Ledger<'_>,
) -> JointState {
    let energies = BasisState::ALL.map(|s| s.energy(cfg));
    let decay = BasisState::ALL.map(|s| rates.total_escape(s));
    let mut t = start;
    loop {
        let remaining = end - t;
        let r = open01(rng);
        let pops = psi.populations();
        let no_jump = |dt: f64| -> f64 { (0..4).map(|k| pops[k] * (-decay[k] * dt).exp()).sum() };
        if no_jump(remaining) > r {
            propagate(&mut psi, remaining, &energies, &decay);
            psi.normalize();
            return psi;
        }
        let mut rates_present = (0..4).filter(|&k| pops[k] > 0.0).map(|k| decay[k]);
        let first = rates_present.next().expect("normalized state");
        let dt = if rates_present.all(|g| g == first) {
            -r.ln() / first
        } else {
            let (mut lo, mut hi) = (0.0, remaining);
            while hi - lo > ROOT_REL_TOL * hi {
                let mid = 0.5 * (lo + hi);
                if no_jump(mid) > r {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            hi
        };
        propagate(&mut psi, dt, &energies, &decay);
        t += dt;
        let ch = channel_rates(&psi, rates);
        let weights = [ch.emission[0], ch.absorption[0], ch.emission[1], ch.absorption[1]];
        let mut pick = rng.random::<f64>() * weights.iter().sum::<f64>();
        let mut channel = 3;
        for (c, w) in weights.iter().enumerate() {
            if pick < *w {
                channel = c;
                break;
            }
            pick -= w;
        }
        // guard against a rounding pick landing on an empty channel
        while weights[channel] == 0.0 {
            channel = (channel + 3) % 4;
        }
        let bath = if channel < 2 { Bath::One } else { Bath::Two };
        let emission = channel % 2 == 0;
        psi = psi.apply_jump(bath, emission);
        psi.normalize();
        ledger.jump(t, bath, emission);
    }
}

/// Waiting-time MCWF evolution of `state` for `duration`, appending every jump
/// (timestamped from `t0`) to `events`.
pub fn evolve_between_pulses<R: Rng + ?Sized>(
    state: JointState,
    t0: f64,
    duration: f64,
    cfg: &EngineConfig,
    rng: &mut R,
    events: &mut Vec<TrajectoryEvent>,
) -> JointState {
    if duration <= 0.0 {
        return state;
    }
    let mut ledger = Ledger {
        counts: JumpCounts::default(),
        events: Some(events),
    };
    mcwf_interval(state, t0, t0 + duration, cfg, &BathRates::new(cfg), rng, &mut ledger)
}

/// Energy exchanged with each qubit by a single pulse, in quanta of `omega_i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PulseEnergy {
    pub quanta: [i64; 2],
}

impl PulseEnergy {
    pub fn de(&self, cfg: &EngineConfig) -> [f64; 2] {
        [
            self.quanta[0] as f64 * cfg.omega1,
            self.quanta[1] as f64 * cfg.omega2,
        ]
    }

    pub fn work(&self, cfg: &EngineConfig) -> f64 {
        let [a, b] = self.de(cfg);
        a + b
    }
}

/// Applies the gate. The per-pulse energy is defined only when the gate maps
/// the eigenstate to an eigenstate.
pub fn apply_pulse(state: &JointState, gate: &Unitary4) -> (JointState, Option<PulseEnergy>) {
    let after = JointState {
        amplitudes: gate.apply(&state.amplitudes),
    };
    let energy = match (state.as_basis_state(), after.as_basis_state()) {
        (Some(a), Some(b)) => Some(PulseEnergy {
            quanta: Bath::BOTH.map(|q| b.excitation(q) - a.excitation(q)),
        }),
        _ => None,
    };
    (after, energy)
}

/// Samples a projective energy measurement.
fn measure<R: Rng + ?Sized>(psi: &JointState, rng: &mut R) -> BasisState {
    if let Some(s) = psi.as_basis_state() {
        return s;
    }
    let pops = psi.populations();
    let mut u = rng.random::<f64>() * pops.iter().sum::<f64>();
    for (k, p) in pops.iter().enumerate() {
        if u < *p {
            return BasisState::ALL[k];
        }
        u -= p;
    }
    BasisState::ALL[(0..4).rev().find(|&k| pops[k] > 0.0).unwrap_or(3)]
}

/// One realization of the engine with all derived energetics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    /// Ensemble fingerprint (config, protocol, gate).
    pub tag: u64,
    /// Empty unless the simulator records events.
    pub events: Vec<TrajectoryEvent>,
    pub initial: BasisState,
    pub final_state: BasisState,
    pub p_initial: f64,
    pub p_final: f64,
    pub emissions: [u32; 2],
    pub absorptions: [u32; 2],
    /// Net energy change of each subsystem in quanta of `omega_i`.
    pub de_quanta: [i64; 2],
    /// Work quanta `w / (omega1 - omega2)`, for complex-SWAP runs only.
    pub n_w: Option<i64>,
    pub q1: f64,
    pub q2: f64,
    pub du1: f64,
    pub du2: f64,
    pub de1: f64,
    pub de2: f64,
    pub w: f64,
}

impl TrajectoryRecord {
    /// Heat released into bath `b`, in quanta of `omega_b`.
    pub fn heat_quanta(&self, b: Bath) -> i64 {
        self.emissions[b.index()] as i64 - self.absorptions[b.index()] as i64
    }

    pub fn du_quanta(&self, b: Bath) -> i64 {
        self.final_state.excitation(b) - self.initial.excitation(b)
    }

    fn build(
        tag: u64,
        cfg: &EngineConfig,
        initial: BasisState,
        final_state: BasisState,
        counts: JumpCounts,
        pulse_quanta: Option<[i64; 2]>,
        events: Vec<TrajectoryEvent>,
    ) -> Self {
        let mut rec = TrajectoryRecord {
            tag,
            events,
            initial,
            final_state,
            p_initial: initial.gibbs_probability(cfg),
            p_final: final_state.gibbs_probability(cfg),
            emissions: counts.emissions,
            absorptions: counts.absorptions,
            de_quanta: [0; 2],
            n_w: None,
            q1: 0.0,
            q2: 0.0,
            du1: 0.0,
            du2: 0.0,
            de1: 0.0,
            de2: 0.0,
            w: 0.0,
        };
        rec.de_quanta = Bath::BOTH.map(|b| rec.heat_quanta(b) + rec.du_quanta(b));
        if let Some(pq) = pulse_quanta {
            debug_assert_eq!(pq, rec.de_quanta, "pulse bookkeeping disagrees with the heat ledger");
            debug_assert_eq!(pq[0], -pq[1], "complex SWAP moved unequal quanta");
            rec.n_w = Some(rec.de_quanta[0]);
        }
        rec.q1 = rec.heat_quanta(Bath::One) as f64 * cfg.omega1;
        rec.q2 = rec.heat_quanta(Bath::Two) as f64 * cfg.omega2;
        rec.du1 = rec.du_quanta(Bath::One) as f64 * cfg.omega1;
        rec.du2 = rec.du_quanta(Bath::Two) as f64 * cfg.omega2;
        rec.de1 = rec.de_quanta[0] as f64 * cfg.omega1;
        rec.de2 = rec.de_quanta[1] as f64 * cfg.omega2;
        rec.w = rec.de1 + rec.de2;
        rec
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Engine {
    /// Gillespie for complex-SWAP gates, MCWF otherwise.
    #[default]
    Auto,
    /// Always run the waiting-time MCWF unraveling.
    Mcwf,
}

/// Trajectories per parallel work unit; fixed so results do not depend on the thread count.
const CHUNK: usize = 2048;

#[derive(Debug, Clone)]
pub struct Simulator {
    cfg: EngineConfig,
    protocol: Protocol,
    gate: GateSpec,
    unitary: Unitary4,
    permutation: Option<[usize; 4]>,
    rates: BathRates,
    engine: Engine,
    record_events: bool,
    tag: u64,
}

impl Simulator {
    pub fn new(cfg: EngineConfig, protocol: Protocol, gate: GateSpec) -> Result<Self> {
        cfg.validate()?;
        gate.validate()?;
        let unitary = gate.build();
        let permutation = if gate.is_swap_family() {
            unitary.permutation()
        } else {
            None
        };
        let mut h = DefaultHasher::new();
        for v in [cfg.beta1, cfg.beta2, cfg.omega1, cfg.omega2, cfg.gamma, protocol.tau2] {
            v.to_bits().hash(&mut h);
        }
        protocol.n_pulses.hash(&mut h);
        gate.to_string().hash(&mut h);
        Ok(Simulator {
            cfg,
            protocol,
            gate,
            unitary,
            permutation,
            rates: BathRates::new(&cfg),
            engine: Engine::Auto,
            record_events: false,
            tag: h.finish(),
        })
    }

    pub fn with_engine(mut self, engine: Engine) -> Self {
        self.engine = engine;
        self
    }

    pub fn recording(mut self, record: bool) -> Self {
        self.record_events = record;
        self
    }

    pub fn config(&self) -> &EngineConfig {
        &self.cfg
    }

    pub fn protocol(&self) -> &Protocol {
        &self.protocol
    }

    pub fn gate(&self) -> &GateSpec {
        &self.gate
    }

    pub fn tag(&self) -> u64 {
        self.tag
    }

    pub fn is_swap_family(&self) -> bool {
        self.gate.is_swap_family()
    }

    pub fn run_trajectory<R: Rng + ?Sized>(&self, rng: &mut R) -> TrajectoryRecord {
        let initial = sample_initial_state(&self.cfg, rng);
        let mut events = Vec::new();
        let mut ledger = Ledger {
            counts: JumpCounts::default(),
            events: self.record_events.then_some(&mut events),
        };
        let tau2 = self.protocol.tau2;
        let n = self.protocol.n_pulses;
        let mut pulse_quanta = self.gate.is_swap_family().then_some([0i64; 2]);

        let final_state = match (self.engine, self.permutation) {
            (Engine::Auto, Some(perm)) => {
                let mut s = initial;
                if n == 0 {
                    s = gillespie_interval(s, 0.0, tau2, &self.rates, rng, &mut ledger);
                }
                for k in 0..n {
                    let t0 = k as f64 * tau2;
                    ledger.pulse(t0, k);
                    let after = BasisState::ALL[perm[s.index()]];
                    if let Some(pq) = pulse_quanta.as_mut() {
                        for b in Bath::BOTH {
                            pq[b.index()] += after.excitation(b) - s.excitation(b);
                        }
                    }
                    s = gillespie_interval(after, t0, (k + 1) as f64 * tau2, &self.rates, rng, &mut ledger);
                }
                s
            }
            _ => {
                let mut psi = JointState::basis(initial);
                if n == 0 {
                    psi = mcwf_interval(psi, 0.0, tau2, &self.cfg, &self.rates, rng, &mut ledger);
                }
                for k in 0..n {
                    let t0 = k as f64 * tau2;
                    ledger.pulse(t0, k);
                    let (after, energy) = apply_pulse(&psi, &self.unitary);
                    match (pulse_quanta.as_mut(), energy) {
                        (Some(pq), Some(e)) => {
                            pq[0] += e.quanta[0];
                            pq[1] += e.quanta[1];
                        }
                        (Some(_), None) => unreachable!("complex SWAP produced a superposition"),
                        _ => {}
                    }
                    psi = mcwf_interval(after, t0, (k + 1) as f64 * tau2, &self.cfg, &self.rates, rng, &mut ledger);
                }
                measure(&psi, rng)
            }
        };
        let counts = ledger.counts;
        TrajectoryRecord::build(self.tag, &self.cfg, initial, final_state, counts, pulse_quanta, events)
    }

    /// Trajectory `index` of the stream seeded by `seed`; independent of evaluation order.
    pub fn run_indexed(&self, seed: u64, index: u64) -> TrajectoryRecord {
        let mut rng = trajectory_rng(seed, index);
        self.run_trajectory(&mut rng)
    }

    /// Lazily streams trajectories `0..sample_size`.
    pub fn run_ensemble(&self, sample_size: u64, seed: u64) -> impl Iterator<Item = TrajectoryRecord> + '_ {
        (0..sample_size).map(move |k| self.run_indexed(seed, k))
    }

    /// Parallel fold over trajectories `0..sample_size`.
    ///
    /// Work is split into fixed-size index chunks folded independently and
    /// merged in chunk order, so the result is the same for any thread count.
    pub fn par_fold<A, I, F, M>(&self, sample_size: u64, seed: u64, init: I, fold: F, merge: M) -> A
    where
        A: Send,
        I: Fn() -> A + Sync,
        F: Fn(&mut A, u64, TrajectoryRecord) + Sync,
        M: Fn(A, A) -> A,
    {
        let chunks = sample_size.div_ceil(CHUNK as u64);
        let parts: Vec<A> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut acc = init();
                let lo = c * CHUNK as u64;
                let hi = (lo + CHUNK as u64).min(sample_size);
                for k in lo..hi {
                    fold(&mut acc, k, self.run_indexed(seed, k));
                }
                acc
            })
            .collect();
        parts.into_iter().fold(init(), merge)
    }
}

/// Counter-based stream for trajectory `index`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A bath jump in a pulse-free path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub time: f64,
    pub bath: Bath,
    pub emission: bool,
}

/// A pulse-free eigenstate trajectory on `[0, duration]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseFreePath {
    pub initial: BasisState,
    pub jumps: Vec<Jump>,
    pub duration: f64,
}

impl PulseFreePath {
    /// The end state, or an error if a jump is inconsistent with the level it starts from.
    pub fn final_state(&self) -> Result<BasisState> {
        let mut s = self.initial;
        let mut last = 0.0;
        for j in &self.jumps {
            if !(j.time > last && j.time < self.duration) {
                return Err(Error::Domain("jump times must increase inside (0, duration)".into()));
            }
            if s.is_excited(j.bath) != j.emission {
                return Err(Error::Domain(format!(
                    "{} in bath {} from state {}",
                    if j.emission { "emission" } else { "absorption" },
                    j.bath.label(),
                    s.label()
                )));
            }
            s = s.flipped(j.bath);
            last = j.time;
        }
        Ok(s)
    }

    /// Time reverse: start from the end state, replay the jumps backwards in
    /// the same baths with opposite direction.
    pub fn time_reversed(&self) -> Result<PulseFreePath> {
        let initial = self.final_state()?;
        let jumps = self
            .jumps
            .iter()
            .rev()
            .map(|j| Jump {
                time: self.duration - j.time,
                bath: j.bath,
                emission: !j.emission,
            })
            .collect();
        Ok(PulseFreePath {
            initial,
            jumps,
            duration: self.duration,
        })
    }

    /// Heat released into each bath, in quanta.
    pub fn heat_quanta(&self) -> [i64; 2] {
        let mut q = [0i64; 2];
        for j in &self.jumps {
            q[j.bath.index()] += if j.emission { 1 } else { -1 };
        }
        q
    }

    /// Log of the path probability density: Gibbs weight of the start state,
    /// the rate of every jump, and the survival factor of each waiting interval.
    pub fn log_density(&self, cfg: &EngineConfig) -> Result<f64> {
        self.final_state()?;
        let rates = BathRates::new(cfg);
        let mut s = self.initial;
        let mut t = 0.0;
        let mut log_p = s.gibbs_probability(cfg).ln();
        for j in &self.jumps {
            log_p -= rates.total_escape(s) * (j.time - t);
            log_p += rates.escape(s, j.bath).ln();
            s = s.flipped(j.bath);
            t = j.time;
        }
        log_p -= rates.total_escape(s) * (self.duration - t);
        Ok(log_p)
    }
}
