//! Shared fixtures for unit tests: the four-state example model and the
//! two worked runs.

use std::collections::BTreeMap;

use crate::model::*;
use crate::run::TimedRun;

/// Witnessed transitions of the four-state example with placeholder
/// rates; `silent` selects the partially observable labeling.
pub fn example_file(silent: bool) -> ModelFile {
    let s = |x: &str| x.to_string();
    let t = |src: &str, event: &str, dst: &str, rate: f64| TransitionFile {
        src: s(src),
        event: s(event),
        dst: s(dst),
        rate,
        density: DensityKind::Exponential,
    };
    let mut labeling = BTreeMap::new();
    for (e, l1, l2) in [
        ("e1", "a", "a"),
        ("e2", "c", SILENT),
        ("e3", "c", "c"),
        ("e4", "a", SILENT),
        ("e5", "b", "b"),
        ("e6", "a", "a"),
        ("e7", "b", "b"),
        ("e8", "a", "a"),
        ("e9", "a", SILENT),
        ("e10", "a", "a"),
    ] {
        labeling.insert(s(e), s(if silent { l2 } else { l1 }));
    }
    ModelFile {
        description: None,
        states: ["s1", "s2", "s3", "s4"].map(s).to_vec(),
        events: (1..=10).map(|i| format!("e{i}")).collect(),
        labels: ["a", "b", "c"].map(s).to_vec(),
        labeling,
        initial: s("s1"),
        transitions: vec![
            t("s1", "e1", "s2", 3.0),
            t("s2", "e4", "s3", 0.3),
            t("s3", "e3", "s2", 3.5),
            t("s3", "e7", "s4", 1.1),
            t("s4", "e6", "s3", 1.2),
            t("s4", "e8", "s1", 0.6),
            t("s1", "e10", "s1", 0.4),
            t("s1", "e2", "s3", 0.2),
            t("s2", "e5", "s1", 2.5),
            t("s3", "e9", "s1", 0.3),
        ],
        notes: BTreeMap::new(),
    }
}

pub fn system1() -> LtpaModel {
    validate_model(&example_file(false), true).unwrap()
}

pub fn system2() -> LtpaModel {
    validate_model(&example_file(true), false).unwrap()
}

pub fn rho1(m: &LtpaModel) -> TimedRun {
    TimedRun::from_names(
        m,
        "s1",
        &[
            ("e1", 0.4747, "s2"),
            ("e4", 0.155, "s3"),
            ("e7", 1.1232, "s4"),
            ("e6", 0.3627, "s3"),
            ("e3", 2.56, "s2"),
            ("e4", 0.0978, "s3"),
        ],
    )
    .unwrap()
}

pub fn rho1_eps(m: &LtpaModel) -> TimedRun {
    TimedRun::from_names(
        m,
        "s1",
        &[
            ("e1", 0.1, "s2"),
            ("e4", 0.3, "s3"),
            ("e3", 0.5, "s2"),
            ("e4", 0.3, "s3"),
            ("e7", 0.4, "s4"),
            ("e8", 0.1, "s1"),
            ("e10", 0.2, "s1"),
        ],
    )
    .unwrap()
}

/// One state with an `a`-labeled self-loop.
pub fn single_state_loop(rate: f64) -> LtpaModel {
    validate_model(
        &ModelFile::from_edges(&["a"], "x", &[("x", "e", "a", "x", rate)]),
        false,
    )
    .unwrap()
}

/// `x1 -> x2` on a silent event; `x2` absorbs.
pub fn silent_chain(rate: f64) -> LtpaModel {
    validate_model(
        &ModelFile::from_edges(&["a"], "x1", &[("x1", "e", SILENT, "x2", rate)]),
        false,
    )
    .unwrap()
}
