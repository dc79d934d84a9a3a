//! Labeled timed probabilistic automata (LTPA).
//!
//! A model is read from a JSON file ([`ModelFile`]) and turned into a
//! validated, index-based [`LtpaModel`] by [`validate_model`]. The order of
//! `states`, `events` and `labels` in the file is canonical: it fixes every
//! vector indexing downstream (one-hot targets, belief entries, label codes).

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::provenance::fingerprint_bytes;

/// Reserved token for silent events in the `labeling` map.
pub const SILENT: &str = "eps";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StateId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LabelId(pub usize);

/// Family of the occurrence-time density attached to a transition.
///
/// Only exponential densities have semantics; the tag exists so model files
/// can name other kinds and get a clean rejection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityKind {
    #[default]
    Exponential,
    Weibull,
    Lognormal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionFile {
    pub src: String,
    pub event: String,
    pub dst: String,
    pub rate: f64,
    #[serde(default, skip_serializing_if = "is_exponential")]
    pub density: DensityKind,
}

fn is_exponential(d: &DensityKind) -> bool {
    *d == DensityKind::Exponential
}

/// On-disk form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub states: Vec<String>,
    pub events: Vec<String>,
    pub labels: Vec<String>,
    /// event -> label, or [`SILENT`].
    pub labeling: BTreeMap<String, String>,
    pub initial: String,
    pub transitions: Vec<TransitionFile>,
    /// Free-form per-transition notes (e.g. which rates are witnessed).
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))
    }

    /// Builds a model file from `(src, event, label, dst, rate)` edges, with
    /// states and events in order of first appearance. `label` may be
    /// [`SILENT`].
    pub fn from_edges(
        labels: &[&str],
        initial: &str,
        edges: &[(&str, &str, &str, &str, f64)],
    ) -> Self {
        let mut states: Vec<String> = vec![initial.to_string()];
        let mut events: Vec<String> = Vec::new();
        let mut labeling = BTreeMap::new();
        let mut transitions = Vec::with_capacity(edges.len());
        for &(src, event, label, dst, rate) in edges {
            for st in [src, dst] {
                if !states.iter().any(|x| x == st) {
                    states.push(st.to_string());
                }
            }
            if !events.iter().any(|x| x == event) {
                events.push(event.to_string());
            }
            labeling.insert(event.to_string(), label.to_string());
            transitions.push(TransitionFile {
                src: src.into(),
                event: event.into(),
                dst: dst.into(),
                rate,
                density: DensityKind::Exponential,
            });
        }
        ModelFile {
            description: None,
            states,
            events,
            labels: labels.iter().map(|l| l.to_string()).collect(),
            labeling,
            initial: initial.into(),
            transitions,
            notes: BTreeMap::new(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ModelError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RefKind {
    State,
    Event,
    Label,
}

impl fmt::Display for RefKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RefKind::State => "state",
            RefKind::Event => "event",
            RefKind::Label => "label",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown {kind} `{name}` referenced in {context}")]
    DanglingReference {
        kind: RefKind,
        name: String,
        context: String,
    },
    #[error(
        "transition {index} ({src} -{event}-> {dst}) has non-positive or non-finite rate {rate}"
    )]
    NonPositiveRate {
        index: usize,
        src: String,
        event: String,
        dst: String,
        rate: f64,
    },
    #[error("event `{0}` is silent but the model must be fully observable")]
    SilentEventUnderA5(String),
    #[error("duplicate {kind} `{name}`")]
    Duplicate { kind: RefKind, name: String },
    #[error("event `{0}` has no entry in the labeling map")]
    Unlabeled(String),
    #[error("label `{0}` collides with the reserved silent marker")]
    ReservedLabel(String),
    #[error("transition {index} uses unsupported density `{kind:?}`")]
    UnsupportedDensity { index: usize, kind: DensityKind },
    #[error("model has no states")]
    Empty,
    #[error("cannot parse model: {0}")]
    Parse(String),
    #[error("cannot read model: {0}")]
    Io(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub src: StateId,
    pub event: EventId,
    pub dst: StateId,
    /// Exponential rate, in 1/time.
    pub rate: f64,
}

/// A validated LTPA.
#[derive(Debug, Clone, PartialEq)]
pub struct LtpaModel {
    states: Vec<String>,
    events: Vec<String>,
    labels: Vec<String>,
    labeling: Vec<Option<LabelId>>,
    transitions: Vec<Transition>,
    initial: StateId,
    outgoing: Vec<Vec<usize>>,
    exit_rates: Vec<f64>,
    fingerprint: String,
}

/// Checks every model invariant and resolves names to indices.
///
/// With `fully_observable_required`, any transition driven by a silent event
/// is rejected; the first offending transition in file order is named.
pub fn validate_model(
    file: &ModelFile,
    fully_observable_required: bool,
) -> Result<LtpaModel, ModelError> {
    if file.states.is_empty() {
        return Err(ModelError::Empty);
    }
    let states = index_names(&file.states, RefKind::State)?;
    let events = index_names(&file.events, RefKind::Event)?;
    let labels = index_names(&file.labels, RefKind::Label)?;
    if let Some(l) = file.labels.iter().find(|l| l.as_str() == SILENT) {
        return Err(ModelError::ReservedLabel(l.clone()));
    }

    for ev in file.labeling.keys() {
        if !events.contains_key(ev.as_str()) {
            return Err(ModelError::DanglingReference {
                kind: RefKind::Event,
                name: ev.clone(),
                context: "labeling".into(),
            });
        }
    }
    let mut labeling = Vec::with_capacity(file.events.len());
    for ev in &file.events {
        let lab = file
            .labeling
            .get(ev)
            .ok_or_else(|| ModelError::Unlabeled(ev.clone()))?;
        if lab == SILENT {
            labeling.push(None);
        } else {
            let id = labels
                .get(lab.as_str())
                .ok_or_else(|| ModelError::DanglingReference {
                    kind: RefKind::Label,
                    name: lab.clone(),
                    context: format!("labeling of `{ev}`"),
                })?;
            labeling.push(Some(LabelId(*id)));
        }
    }

    let lookup = |map: &BTreeMap<&str, usize>, kind, name: &str, index: usize| {
        map.get(name)
            .copied()
            .ok_or_else(|| ModelError::DanglingReference {
                kind,
                name: name.to_string(),
                context: format!("transition {index}"),
            })
    };

    let mut transitions = Vec::with_capacity(file.transitions.len());
    for (index, t) in file.transitions.iter().enumerate() {
        let src = lookup(&states, RefKind::State, &t.src, index)?;
        let event = lookup(&events, RefKind::Event, &t.event, index)?;
        let dst = lookup(&states, RefKind::State, &t.dst, index)?;
        if !(t.rate > 0.0 && t.rate.is_finite()) {
            return Err(ModelError::NonPositiveRate {
                index,
                src: t.src.clone(),
                event: t.event.clone(),
                dst: t.dst.clone(),
                rate: t.rate,
            });
        }
        if t.density != DensityKind::Exponential {
            return Err(ModelError::UnsupportedDensity {
                index,
                kind: t.density,
            });
        }
        if fully_observable_required && labeling[event].is_none() {
            return Err(ModelError::SilentEventUnderA5(t.event.clone()));
        }
        transitions.push(Transition {
            src: StateId(src),
            event: EventId(event),
            dst: StateId(dst),
            rate: t.rate,
        });
    }

    let initial = states.get(file.initial.as_str()).copied().ok_or_else(|| {
        ModelError::DanglingReference {
            kind: RefKind::State,
            name: file.initial.clone(),
            context: "initial".into(),
        }
    })?;

    let mut outgoing = vec![Vec::new(); file.states.len()];
    let mut exit_rates = vec![0.0; file.states.len()];
    for (i, t) in transitions.iter().enumerate() {
        outgoing[t.src.0].push(i);
        exit_rates[t.src.0] += t.rate;
    }

    let canonical = serde_json::to_vec(file).map_err(|e| ModelError::Parse(e.to_string()))?;
    Ok(LtpaModel {
        states: file.states.clone(),
        events: file.events.clone(),
        labels: file.labels.clone(),
        labeling,
        transitions,
        initial: StateId(initial),
        outgoing,
        exit_rates,
        fingerprint: fingerprint_bytes(&canonical),
    })
}

fn index_names(names: &[String], kind: RefKind) -> Result<BTreeMap<&str, usize>, ModelError> {
    let mut map = BTreeMap::new();
    for (i, n) in names.iter().enumerate() {
        if map.insert(n.as_str(), i).is_some() {
            return Err(ModelError::Duplicate {
                kind,
                name: n.clone(),
            });
        }
    }
    Ok(map)
}

impl LtpaModel {
    pub fn load(
        path: impl AsRef<Path>,
        fully_observable_required: bool,
    ) -> Result<Self, ModelError> {
        validate_model(&ModelFile::load(path)?, fully_observable_required)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn events(&self) -> &[String] {
        &self.events
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn initial(&self) -> StateId {
        self.initial
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Transitions leaving `s`, in file order.
    pub fn outgoing(&self, s: StateId) -> impl Iterator<Item = &Transition> + '_ {
        self.outgoing[s.0]
            .iter()
            .map(move |&i| &self.transitions[i])
    }

    /// Total exit rate of `s`.
    pub fn exit_rate(&self, s: StateId) -> f64 {
        self.exit_rates[s.0]
    }

    /// `None` for silent events.
    pub fn obs(&self, e: EventId) -> Option<LabelId> {
        self.labeling[e.0]
    }

    pub fn is_fully_observable(&self) -> bool {
        self.transitions
            .iter()
            .all(|t| self.labeling[t.event.0].is_some())
    }

    /// Returns the first silent event used by a transition, if any.
    pub fn require_fully_observable(&self) -> Result<(), ModelError> {
        match self
            .transitions
            .iter()
            .find(|t| self.labeling[t.event.0].is_none())
        {
            Some(t) => Err(ModelError::SilentEventUnderA5(
                self.events[t.event.0].clone(),
            )),
            None => Ok(()),
        }
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.events.iter().position(|s| s == name).map(EventId)
    }

    pub fn label_id(&self, name: &str) -> Option<LabelId> {
        self.labels.iter().position(|s| s == name).map(LabelId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn event_name(&self, e: EventId) -> &str {
        &self.events[e.0]
    }

    pub fn label_name(&self, l: LabelId) -> &str {
        &self.labels[l.0]
    }

    /// A transition `src -event-> dst` exists.
    pub fn has_transition(&self, src: StateId, event: EventId, dst: StateId) -> bool {
        self.outgoing(src).any(|t| t.event == event && t.dst == dst)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown state `{0}`")]
pub struct UnknownState(pub String);

/// One-hot encoding of `state` over the model's state order.
pub fn class_onehot(model: &LtpaModel, state: &str) -> Result<Vec<f64>, UnknownState> {
    let id = model
        .state_id(state)
        .ok_or_else(|| UnknownState(state.to_string()))?;
    Ok(class_of(model.num_states(), id))
}

/// One-hot vector of length `n` with a 1 at `state`.
pub fn class_of(n: usize, state: StateId) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[state.0] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::example_file;

    #[test]
    fn partially_observable_model_is_valid_without_flag() {
        let m = validate_model(&example_file(true), false).unwrap();
        assert_eq!(m.num_states(), 4);
        assert!(!m.is_fully_observable());
        assert_eq!(m.obs(m.event_id("e4").unwrap()), None);
    }

    #[test]
    fn flag_rejects_first_silent_transition() {
        let err = validate_model(&example_file(true), true).unwrap_err();
        assert_eq!(err, ModelError::SilentEventUnderA5("e4".into()));
        let m = validate_model(&example_file(true), false).unwrap();
        assert_eq!(
            m.require_fully_observable(),
            Err(ModelError::SilentEventUnderA5("e4".into()))
        );
    }

    #[test]
    fn zero_rate_is_rejected() {
        let mut f = example_file(false);
        f.transitions[3].rate = 0.0;
        assert!(matches!(
            validate_model(&f, false),
            Err(ModelError::NonPositiveRate { index: 3, .. })
        ));
        f.transitions[3].rate = f64::INFINITY;
        assert!(matches!(
            validate_model(&f, false),
            Err(ModelError::NonPositiveRate { .. })
        ));
    }

    #[test]
    fn dangling_references_name_the_element() {
        let mut f = example_file(false);
        f.transitions[0].dst = "s9".into();
        match validate_model(&f, false) {
            Err(ModelError::DanglingReference {
                kind: RefKind::State,
                name,
                ..
            }) => assert_eq!(name, "s9"),
            other => panic!("unexpected {other:?}"),
        }
        let mut f = example_file(false);
        f.labeling.insert("e3".into(), "z".into());
        assert!(matches!(
            validate_model(&f, false),
            Err(ModelError::DanglingReference {
                kind: RefKind::Label,
                ..
            })
        ));
        let mut f = example_file(false);
        f.initial = "nowhere".into();
        assert!(matches!(
            validate_model(&f, false),
            Err(ModelError::DanglingReference { .. })
        ));
    }

    #[test]
    fn non_exponential_density_is_rejected() {
        let mut f = example_file(false);
        f.transitions[1].density = DensityKind::Weibull;
        assert!(matches!(
            validate_model(&f, false),
            Err(ModelError::UnsupportedDensity { index: 1, .. })
        ));
    }

    #[test]
    fn silent_marker_cannot_be_a_label() {
        let mut f = example_file(false);
        f.labels.push(SILENT.into());
        assert!(matches!(
            validate_model(&f, false),
            Err(ModelError::ReservedLabel(_))
        ));
    }

    #[test]
    fn class_onehot_matches_state_order() {
        let m = validate_model(&example_file(false), true).unwrap();
        assert_eq!(class_onehot(&m, "s1").unwrap(), vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(class_onehot(&m, "s4").unwrap(), vec![0.0, 0.0, 0.0, 1.0]);
        assert!(class_onehot(&m, "s7").is_err());
        for (i, s) in m.states().iter().enumerate() {
            let v = class_onehot(&m, s).unwrap();
            let argmax = v
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0;
            assert_eq!(argmax, i);
            assert_eq!(v.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn single_state_class_is_identity() {
        let f = ModelFile {
            description: None,
            states: vec!["only".into()],
            events: vec!["tick".into()],
            labels: vec!["a".into()],
            labeling: [("tick".to_string(), "a".to_string())]
                .into_iter()
                .collect(),
            initial: "only".into(),
            transitions: vec![TransitionFile {
                src: "only".into(),
                event: "tick".into(),
                dst: "only".into(),
                rate: 1.0,
                density: DensityKind::Exponential,
            }],
            notes: BTreeMap::new(),
        };
        let m = validate_model(&f, true).unwrap();
        assert_eq!(class_onehot(&m, "only").unwrap(), vec![1.0]);
    }

    #[test]
    fn json_round_trip_keeps_fingerprint() {
        let f = example_file(true);
        let text = serde_json::to_string_pretty(&f).unwrap();
        let back = ModelFile::from_json(&text).unwrap();
        let a = validate_model(&f, false).unwrap();
        let b = validate_model(&back, false).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(
            a.fingerprint(),
            validate_model(&example_file(false), false)
                .unwrap()
                .fingerprint()
        );
    }
}
