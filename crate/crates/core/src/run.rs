//! Timed runs, timed observation sequences and the natural projection.
//!
//! Runs store clock readings, not sojourns: the clock is reset after every
//! observable event, so within a silent stretch readings accumulate.

use thiserror::Error;

use crate::model::{EventId, LabelId, LtpaModel, StateId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Step {
    pub event: EventId,
    /// Time since the last observable event (or since the start).
    pub clock: f64,
    pub next: StateId,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimedRun {
    pub initial: StateId,
    pub steps: Vec<Step>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error("run references unknown {0}")]
    Unknown(String),
    #[error("step {index}: no transition {from} -{event}-> {to}")]
    InvalidStep {
        index: usize,
        from: String,
        event: String,
        to: String,
    },
    #[error("step {index}: clock reading {clock} does not advance past {previous}")]
    NonMonotoneClock {
        index: usize,
        clock: f64,
        previous: f64,
    },
}

impl TimedRun {
    pub fn empty(initial: StateId) -> Self {
        TimedRun {
            initial,
            steps: Vec::new(),
        }
    }

    /// Builds a run from names, e.g. `("e1", 0.4747, "s2")` per step.
    pub fn from_names(
        model: &LtpaModel,
        initial: &str,
        steps: &[(&str, f64, &str)],
    ) -> Result<Self, RunError> {
        let state = |n: &str| {
            model
                .state_id(n)
                .ok_or_else(|| RunError::Unknown(format!("state `{n}`")))
        };
        let initial = state(initial)?;
        let steps = steps
            .iter()
            .map(|&(e, clock, s)| {
                let event = model
                    .event_id(e)
                    .ok_or_else(|| RunError::Unknown(format!("event `{e}`")))?;
                Ok(Step {
                    event,
                    clock,
                    next: state(s)?,
                })
            })
            .collect::<Result<Vec<_>, RunError>>()?;
        Ok(TimedRun { initial, steps })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// State after `j` steps (`j = 0` is the initial state).
    pub fn state_at(&self, j: usize) -> StateId {
        if j == 0 {
            self.initial
        } else {
            self.steps[j - 1].next
        }
    }

    /// States visited, `s(0) .. s(k)`.
    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        std::iter::once(self.initial).chain(self.steps.iter().map(|s| s.next))
    }
}

/// Checks reachability of every step and the clock-reset semantics.
pub fn validate_run(model: &LtpaModel, run: &TimedRun) -> Result<(), RunError> {
    if run.initial.0 >= model.num_states() {
        return Err(RunError::Unknown(format!("state index {}", run.initial.0)));
    }
    let mut state = run.initial;
    let mut previous = 0.0;
    for (index, step) in run.steps.iter().enumerate() {
        if step.event.0 >= model.events().len() {
            return Err(RunError::Unknown(format!("event index {}", step.event.0)));
        }
        if step.next.0 >= model.num_states() {
            return Err(RunError::Unknown(format!("state index {}", step.next.0)));
        }
        if !model.has_transition(state, step.event, step.next) {
            return Err(RunError::InvalidStep {
                index,
                from: model.state_name(state).to_string(),
                event: model.event_name(step.event).to_string(),
                to: model.state_name(step.next).to_string(),
            });
        }
        if !(step.clock.is_finite() && step.clock > previous) {
            return Err(RunError::NonMonotoneClock {
                index,
                clock: step.clock,
                previous,
            });
        }
        previous = if model.obs(step.event).is_some() {
            0.0
        } else {
            step.clock
        };
        state = step.next;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub label: LabelId,
    /// Clock reading at the observation (time since the previous one).
    pub clock: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimedObservationSeq(pub Vec<Observation>);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservationError {
    #[error("observation {index}: unknown label `{label}`")]
    UnknownLabel { index: usize, label: String },
    #[error("observation {index}: reading {clock} must be positive and finite")]
    BadReading { index: usize, clock: f64 },
    #[error("cannot parse observation `{0}`")]
    Syntax(String),
}

impl TimedObservationSeq {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Observation> {
        self.0.iter()
    }

    pub fn from_names(model: &LtpaModel, obs: &[(&str, f64)]) -> Result<Self, ObservationError> {
        let mut out = Vec::with_capacity(obs.len());
        for (index, &(label, clock)) in obs.iter().enumerate() {
            let id = model
                .label_id(label)
                .ok_or_else(|| ObservationError::UnknownLabel {
                    index,
                    label: label.to_string(),
                })?;
            if !(clock > 0.0 && clock.is_finite()) {
                return Err(ObservationError::BadReading { index, clock });
            }
            out.push(Observation { label: id, clock });
        }
        Ok(TimedObservationSeq(out))
    }

    /// Parses either `(a,0.1)(c,0.5)` pairs or one `label reading` per line.
    /// Blank lines and `#` comments are ignored.
    pub fn parse(model: &LtpaModel, text: &str) -> Result<Self, ObservationError> {
        let mut pairs: Vec<(String, f64)> = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.contains('(') {
                for chunk in line.split('(').skip(1) {
                    let inner = chunk.split(')').next().unwrap_or("");
                    let (l, t) = inner
                        .split_once(',')
                        .ok_or_else(|| ObservationError::Syntax(inner.to_string()))?;
                    let t: f64 = t
                        .trim()
                        .parse()
                        .map_err(|_| ObservationError::Syntax(inner.to_string()))?;
                    pairs.push((l.trim().to_string(), t));
                }
            } else {
                let mut it = line.split_whitespace();
                let (Some(l), Some(t), None) = (it.next(), it.next(), it.next()) else {
                    return Err(ObservationError::Syntax(line.to_string()));
                };
                let t: f64 = t
                    .parse()
                    .map_err(|_| ObservationError::Syntax(line.to_string()))?;
                pairs.push((l.to_string(), t));
            }
        }
        let refs: Vec<(&str, f64)> = pairs.iter().map(|(l, t)| (l.as_str(), *t)).collect();
        Self::from_names(model, &refs)
    }

    pub fn to_names<'m>(&self, model: &'m LtpaModel) -> Vec<(&'m str, f64)> {
        self.0
            .iter()
            .map(|o| (model.label_name(o.label), o.clock))
            .collect()
    }
}

/// The natural projection: silent steps vanish, observable steps emit their
/// label with the stored clock reading.
pub fn project_run(model: &LtpaModel, run: &TimedRun) -> Result<TimedObservationSeq, RunError> {
    validate_run(model, run)?;
    Ok(TimedObservationSeq(
        run.steps
            .iter()
            .filter_map(|s| {
                model.obs(s.event).map(|label| Observation {
                    label,
                    clock: s.clock,
                })
            })
            .collect(),
    ))
}

/// Dwell time before each step.
pub fn derive_sojourns(model: &LtpaModel, run: &TimedRun) -> Result<Vec<f64>, RunError> {
    let mut previous = 0.0;
    let mut out = Vec::with_capacity(run.steps.len());
    for (index, step) in run.steps.iter().enumerate() {
        if !(step.clock.is_finite() && step.clock > previous) {
            return Err(RunError::NonMonotoneClock {
                index,
                clock: step.clock,
                previous,
            });
        }
        out.push(step.clock - previous);
        previous = if model.obs(step.event).is_some() {
            0.0
        } else {
            step.clock
        };
    }
    Ok(out)
}

/// Inverse of [`derive_sojourns`]: accumulates dwell times into clock
/// readings, resetting after observable events.
pub fn reconstruct_clocks(model: &LtpaModel, events: &[EventId], sojourns: &[f64]) -> Vec<f64> {
    let mut clock = 0.0;
    events
        .iter()
        .zip(sojourns)
        .map(|(&e, &d)| {
            let reading = clock + d;
            clock = if model.obs(e).is_some() { 0.0 } else { reading };
            reading
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rho1, rho1_eps, system1, system2};

    #[test]
    fn projection_of_fully_observable_run() {
        let m = system1();
        let obs = project_run(&m, &rho1(&m)).unwrap();
        assert_eq!(
            obs.to_names(&m),
            vec![
                ("a", 0.4747),
                ("a", 0.155),
                ("b", 1.1232),
                ("a", 0.3627),
                ("c", 2.56),
                ("a", 0.0978)
            ]
        );
    }

    #[test]
    fn projection_drops_silent_steps() {
        let m = system2();
        let obs = project_run(&m, &rho1_eps(&m)).unwrap();
        assert_eq!(
            obs.to_names(&m),
            vec![("a", 0.1), ("c", 0.5), ("b", 0.4), ("a", 0.1), ("a", 0.2)]
        );
    }

    #[test]
    fn empty_run_projects_to_empty_sequence() {
        let m = system2();
        assert!(project_run(&m, &TimedRun::empty(m.initial()))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn invalid_runs_are_rejected() {
        let m = system2();
        let bad = TimedRun::from_names(&m, "s1", &[("e4", 0.3, "s3")]).unwrap();
        assert!(matches!(
            project_run(&m, &bad),
            Err(RunError::InvalidStep { index: 0, .. })
        ));
        // silent e4 at 0.3 then e3 at 0.2 in the same stretch goes backwards
        let bad = TimedRun::from_names(
            &m,
            "s1",
            &[("e1", 0.1, "s2"), ("e4", 0.3, "s3"), ("e3", 0.2, "s2")],
        )
        .unwrap();
        assert!(matches!(
            validate_run(&m, &bad),
            Err(RunError::NonMonotoneClock { index: 2, .. })
        ));
    }

    #[test]
    fn sojourns_of_fully_observable_run_are_the_readings() {
        let m = system1();
        let run = rho1(&m);
        let soj = derive_sojourns(&m, &run).unwrap();
        let readings: Vec<f64> = run.steps.iter().map(|s| s.clock).collect();
        assert_eq!(soj, readings);
    }

    #[test]
    fn sojourns_difference_within_silent_stretches() {
        let m = system2();
        let soj = derive_sojourns(&m, &rho1_eps(&m)).unwrap();
        let expected = [0.1, 0.3, 0.2, 0.3, 0.1, 0.1, 0.2];
        for (a, b) in soj.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{soj:?}");
        }
    }

    #[test]
    fn single_step_sojourn() {
        let m = system2();
        let run = TimedRun::from_names(&m, "s1", &[("e1", 0.7, "s2")]).unwrap();
        assert_eq!(derive_sojourns(&m, &run).unwrap(), vec![0.7]);
    }

    #[test]
    fn parse_both_observation_syntaxes() {
        let m = system2();
        let a = TimedObservationSeq::parse(&m, "(c,1.6)(b,0.4)\n(c, 0.4)").unwrap();
        let b = TimedObservationSeq::parse(&m, "# scenario\nc 1.6\nb 0.4\n\nc 0.4\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(matches!(
            TimedObservationSeq::parse(&m, "d 0.1"),
            Err(ObservationError::UnknownLabel { index: 0, .. })
        ));
        assert!(matches!(
            TimedObservationSeq::parse(&m, "a -1"),
            Err(ObservationError::BadReading { .. })
        ));
    }
}
