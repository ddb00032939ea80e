//! Inferring work from bath quanta alone.
//!
//! A qubit that emits twice in a row into its bath must have been re-excited
//! in between, and only a gate pulse can do that: one quantum `omega_i` was
//! injected into subsystem `i`. Likewise two absorptions in a row imply a
//! quantum was extracted. Alternating jumps need no pulse.
//!
//! The rule fixes all injections between the first and last jump of each bath.
//! What happened before the first and after the last jump is invisible; we
//! close each bath's sequence cyclically, which makes the reconstructed
//! `dE_i` equal the measured heat `Q_i` and leaves an error of exactly the
//! unobserved `dU_i`, at most one quantum per qubit.
//!
//! For complex-SWAP engines every pulse moves a quantum from one qubit to the
//! other, so `dE1/omega1 = -dE2/omega2`. Imposing that on the two boundary
//! terms pins the work down to within one work quantum `omega1 - omega2`.

use serde::Serialize;

use crate::eventlog::LogEntry;
use crate::thermo::{Bath, EngineConfig};

/// A work quantum inferred between two same-type jumps of one bath.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Injection {
    pub bath: Bath,
    /// Time of the earlier jump of the pair.
    pub after: f64,
    /// Time of the later jump of the pair.
    pub before: f64,
    /// `+1` when energy went into the qubit, `-1` when it was extracted.
    pub quanta: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Flag {
    /// Two same-type jumps in one bath with no pulse marker between them.
    MissingPulse { bath: Bath, time: f64 },
    /// Heat counts incompatible with any complex-SWAP history.
    NotSwapConsistent,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub emissions: [u32; 2],
    pub absorptions: [u32; 2],
    pub injections: Vec<Injection>,
    /// Sum of the interior injections per bath (quanta).
    pub interior_quanta: [i64; 2],
    /// Per-bath `dE_i / omega_i` with cyclic closure; equals the heat quanta.
    pub de_quanta: [i64; 2],
    /// Work quanta under the complex-SWAP constraint, when requested and consistent.
    pub n_w: Option<i64>,
    pub flags: Vec<Flag>,
}

impl Reconstruction {
    pub fn heat_quanta(&self, b: Bath) -> i64 {
        self.emissions[b.index()] as i64 - self.absorptions[b.index()] as i64
    }

    pub fn q(&self, cfg: &EngineConfig) -> [f64; 2] {
        Bath::BOTH.map(|b| self.heat_quanta(b) as f64 * cfg.omega(b))
    }

    /// Reconstructed `(dE1, dE2)`.
    pub fn de(&self, cfg: &EngineConfig) -> [f64; 2] {
        match self.n_w {
            Some(n) => [n as f64 * cfg.omega1, -n as f64 * cfg.omega2],
            None => [self.de_quanta[0] as f64 * cfg.omega1, self.de_quanta[1] as f64 * cfg.omega2],
        }
    }

    pub fn w(&self, cfg: &EngineConfig) -> f64 {
        let [a, b] = self.de(cfg);
        a + b
    }
}

/// Applies the consecutive-jump rule to one log. With `swap_family` the
/// complex-SWAP energy constraint resolves the boundary terms into `n_w`.
pub fn reconstruct_from_events(entries: &[LogEntry], swap_family: bool) -> Reconstruction {
    let mut rec = Reconstruction {
        emissions: [0; 2],
        absorptions: [0; 2],
        injections: Vec::new(),
        interior_quanta: [0; 2],
        de_quanta: [0; 2],
        n_w: None,
        flags: Vec::new(),
    };
    let mut first: [Option<bool>; 2] = [None; 2];
    let mut last: [Option<(f64, bool)>; 2] = [None; 2];
    // whether a pulse marker was seen since the last jump of each bath
    let mut pulse_since = [false; 2];
    let has_markers = entries.iter().any(LogEntry::is_pulse);

    for e in entries {
        match *e {
            LogEntry::Pulse(_) => pulse_since = [true; 2],
            LogEntry::Jump { time, bath, emission } => {
                let i = bath.index();
                if emission {
                    rec.emissions[i] += 1;
                } else {
                    rec.absorptions[i] += 1;
                }
                first[i].get_or_insert(emission);
                if let Some((t_prev, prev)) = last[i] {
                    if prev == emission {
                        let quanta = if emission { 1 } else { -1 };
                        rec.injections.push(Injection {
                            bath,
                            after: t_prev,
                            before: time,
                            quanta,
                        });
                        rec.interior_quanta[i] += quanta;
                        if has_markers && !pulse_since[i] {
                            rec.flags.push(Flag::MissingPulse { bath, time });
                        }
                    }
                }
                last[i] = Some((time, emission));
                pulse_since[i] = false;
            }
        }
    }

    for b in Bath::BOTH {
        let i = b.index();
        let closure = match (last[i], first[i]) {
            (Some((_, l)), Some(f)) if l == f => {
                if l {
                    1
                } else {
                    -1
                }
            }
            _ => 0,
        };
        rec.de_quanta[i] = rec.interior_quanta[i] + closure;
        debug_assert_eq!(rec.de_quanta[i], rec.heat_quanta(b));
    }

    if swap_family {
        // true dE_i = Q_i + dU_i with dU_i in {-1, 0, 1} quanta, and dE2 = -dE1
        let (k1, k2) = (rec.de_quanta[0], rec.de_quanta[1]);
        let s = k1 + k2;
        let feasible: Vec<i64> = (-1..=1).filter(|du1| (-s - du1).abs() <= 1).collect();
        if feasible.is_empty() {
            rec.flags.push(Flag::NotSwapConsistent);
        } else {
            // the middle candidate is within one quantum of every other one
            rec.n_w = Some(k1 + feasible[feasible.len() / 2]);
        }
    }
    rec
}

#[cfg(test)]
mod tests {
    use super::*;

    fn jump(time: f64, bath: u8, emission: bool) -> LogEntry {
        LogEntry::Jump {
            time,
            bath: Bath::from_label(bath).unwrap(),
            emission,
        }
    }

    #[test]
    fn double_emission_implies_injection() {
        let r = reconstruct_from_events(&[jump(1.0, 1, true), jump(2.0, 1, true)], false);
        assert_eq!(r.injections.len(), 1);
        assert_eq!(r.injections[0].quanta, 1);
        assert_eq!((r.injections[0].after, r.injections[0].before), (1.0, 2.0));
        assert_eq!(r.interior_quanta, [1, 0]);
        assert_eq!(r.de_quanta, [2, 0]);
    }

    #[test]
    fn alternating_jumps_need_no_pulse() {
        let r = reconstruct_from_events(&[jump(1.0, 1, true), jump(2.0, 1, false)], false);
        assert!(r.injections.is_empty());
        assert_eq!(r.de_quanta, [0, 0]);
    }

    #[test]
    fn empty_log_gives_zero() {
        let cfg = EngineConfig::new(2.0 / 3.0, 1.0, 1.0, 5.0 / 6.0, 1.0).unwrap();
        let r = reconstruct_from_events(&[], true);
        assert_eq!(r.w(&cfg), 0.0);
        assert_eq!(r.n_w, Some(0));
    }

    #[test]
    fn missing_pulses_are_flagged_only_with_markers() {
        let bare = [jump(1.0, 2, false), jump(2.0, 2, false)];
        assert!(reconstruct_from_events(&bare, false).flags.is_empty());
        let marked = [LogEntry::Pulse(0), jump(1.0, 2, false), jump(2.0, 2, false)];
        let r = reconstruct_from_events(&marked, false);
        assert_eq!(r.flags, [Flag::MissingPulse { bath: Bath::Two, time: 2.0 }]);
        assert_eq!(r.de_quanta, [0, -2]);
    }

    #[test]
    fn swap_constraint_detects_impossible_counts() {
        let log = [jump(1.0, 1, true), jump(2.0, 1, true), jump(3.0, 2, true), jump(4.0, 2, true)];
        let r = reconstruct_from_events(&log, true);
        assert_eq!(r.n_w, None);
        assert_eq!(r.flags, [Flag::NotSwapConsistent]);
    }
}
