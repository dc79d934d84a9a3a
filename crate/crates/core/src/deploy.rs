//! Deployment-side input handling: rejecting records the network was never
//! trained on, and building network inputs from a live stream exactly as the
//! offline formatters do.

use thiserror::Error;

use crate::model::LtpaModel;
use crate::preprocess::{encode_id, CaseSpec, ObservationWindow};

/// One record of a live stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LiveRecord<'a> {
    /// An observed label with its clock reading.
    Observation { label: &'a str, clock: f64 },
    /// One clock tick without an observation.
    Tick,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Rejection {
    #[error("unknown label `{0}`")]
    UnknownLabel(String),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("zero time: readings must be positive")]
    ZeroTime,
    #[error("non-finite time {0}")]
    NonFiniteTime(f64),
    #[error("time {clock} is not a multiple of the tick {tick}")]
    NonTickAligned { clock: f64, tick: f64 },
    #[error(
        "reading of {found} ticks, but {expected} ticks have passed since the last observation"
    )]
    ClockMismatch { expected: u64, found: u64 },
    #[error("tick records only exist when estimating over time")]
    TickWithoutGrid,
}

/// Checks one record in isolation. Records that pass are safe to format.
pub fn ood_guard(
    model: &LtpaModel,
    case: &CaseSpec,
    record: &LiveRecord<'_>,
) -> Result<(), Rejection> {
    match *record {
        LiveRecord::Tick => match case {
            CaseSpec::OverTime { .. } => Ok(()),
            CaseSpec::OverObservations { .. } => Err(Rejection::TickWithoutGrid),
        },
        LiveRecord::Observation { label, clock } => {
            if model.label_id(label).is_none() {
                return Err(Rejection::UnknownLabel(label.to_string()));
            }
            if clock.is_nan() || clock.is_infinite() {
                return Err(Rejection::NonFiniteTime(clock));
            }
            if clock < 0.0 {
                return Err(Rejection::NegativeTime(clock));
            }
            if clock == 0.0 {
                return Err(Rejection::ZeroTime);
            }
            if let Some(tick) = case.tick() {
                if tick.to_ticks(clock).is_none() {
                    return Err(Rejection::NonTickAligned {
                        clock,
                        tick: tick.size(),
                    });
                }
            }
            Ok(())
        }
    }
}

/// Builds network inputs from a live stream.
///
/// Over observations, each accepted observation yields the next input. Over
/// time, every tick yields an input; an observation takes the place of the
/// tick on which it occurs, so its reading must be one tick past the ticks
/// already seen since the previous observation.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveFormatter<'m> {
    model: &'m LtpaModel,
    case: CaseSpec,
    window: ObservationWindow,
    elapsed: u64,
}

impl<'m> LiveFormatter<'m> {
    pub fn new(model: &'m LtpaModel, case: CaseSpec) -> Self {
        LiveFormatter {
            model,
            case,
            window: ObservationWindow::new(case.k()),
            elapsed: 0,
        }
    }

    /// Input before any record, i.e. at time 0.
    pub fn current(&self) -> Vec<f64> {
        let mut v = self.window.as_slice().to_vec();
        if let Some(tick) = self.case.tick() {
            v.push(tick.to_time(self.elapsed));
        }
        v
    }

    pub fn push(&mut self, record: &LiveRecord<'_>) -> Result<Vec<f64>, Rejection> {
        ood_guard(self.model, &self.case, record)?;
        match *record {
            LiveRecord::Tick => self.elapsed += 1,
            LiveRecord::Observation { label, clock } => {
                if let Some(tick) = self.case.tick() {
                    let found = tick.to_ticks(clock).expect("guard checked alignment");
                    if found != self.elapsed + 1 {
                        return Err(Rejection::ClockMismatch {
                            expected: self.elapsed + 1,
                            found,
                        });
                    }
                }
                let id = self.model.label_id(label).expect("guard checked the label");
                self.window.push(encode_id(id), clock);
                self.elapsed = 0;
            }
        }
        Ok(self.current())
    }

    pub fn observe(&mut self, label: &str, clock: f64) -> Result<Vec<f64>, Rejection> {
        self.push(&LiveRecord::Observation { label, clock })
    }

    pub fn tick(&mut self) -> Result<Vec<f64>, Rejection> {
        self.push(&LiveRecord::Tick)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{format_over_observations, format_over_time};
    use crate::run::project_run;
    use crate::testutil::{rho1, rho1_eps, system1, system2};
    use crate::ticks::TickGrid;

    #[test]
    fn guard_rejections() {
        let m = system2();
        let obs = CaseSpec::OverObservations { k: 3 };
        let time = CaseSpec::OverTime {
            k: 5,
            tick: TickGrid::new(0.1).unwrap(),
        };
        let rec = |label, clock| LiveRecord::Observation { label, clock };
        assert_eq!(
            ood_guard(&m, &obs, &rec("d", 0.1)),
            Err(Rejection::UnknownLabel("d".into()))
        );
        assert_eq!(
            ood_guard(&m, &obs, &rec("a", -0.1)),
            Err(Rejection::NegativeTime(-0.1))
        );
        assert_eq!(
            ood_guard(&m, &obs, &rec("a", 0.0)),
            Err(Rejection::ZeroTime)
        );
        assert!(matches!(
            ood_guard(&m, &obs, &rec("a", f64::NAN)),
            Err(Rejection::NonFiniteTime(_))
        ));
        assert!(matches!(
            ood_guard(&m, &time, &rec("a", 0.25)),
            Err(Rejection::NonTickAligned { .. })
        ));
        assert_eq!(ood_guard(&m, &obs, &rec("a", 0.25)), Ok(()));
        assert_eq!(
            ood_guard(&m, &obs, &LiveRecord::Tick),
            Err(Rejection::TickWithoutGrid)
        );
    }

    #[test]
    fn live_inputs_match_offline_formatting_over_observations() {
        let m = system1();
        let run = rho1(&m);
        let offline = format_over_observations(&m, &run, 3).unwrap();
        let mut live = LiveFormatter::new(&m, CaseSpec::OverObservations { k: 3 });
        let mut inputs = vec![live.current()];
        for (l, t) in project_run(&m, &run).unwrap().to_names(&m) {
            inputs.push(live.observe(l, t).unwrap());
        }
        assert_eq!(
            inputs,
            offline.iter().map(|s| s.input.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn live_inputs_match_offline_formatting_over_time() {
        let m = system2();
        let tick = TickGrid::new(0.1).unwrap();
        let run = rho1_eps(&m);
        let offline = format_over_time(&m, &run, 5, tick).unwrap();
        let mut live = LiveFormatter::new(&m, CaseSpec::OverTime { k: 5, tick });
        let mut inputs = vec![live.current()];
        for (l, t) in project_run(&m, &run).unwrap().to_names(&m) {
            for _ in 1..tick.to_ticks(t).unwrap() {
                inputs.push(live.tick().unwrap());
            }
            inputs.push(live.observe(l, t).unwrap());
        }
        assert_eq!(
            inputs,
            offline.iter().map(|s| s.input.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn observation_out_of_step_with_ticks_is_rejected() {
        let m = system2();
        let mut live = LiveFormatter::new(
            &m,
            CaseSpec::OverTime {
                k: 2,
                tick: TickGrid::new(0.1).unwrap(),
            },
        );
        live.tick().unwrap();
        assert_eq!(
            live.observe("a", 0.5),
            Err(Rejection::ClockMismatch {
                expected: 2,
                found: 5
            })
        );
    }
}
