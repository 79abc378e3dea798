use std::fs;

use drlab::cli::{ExperimentConfig, ModelMode, CASE_STUDY};
use drlab::policy::PolicyKind;

#[test]
fn bundled_case_study_loads_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("casestudy.cfg");
    fs::write(&path, CASE_STUDY).unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.digest(), ExperimentConfig::case_study().digest());
    assert_eq!(cfg.mode, ModelMode::Population);
    assert_eq!((cfg.customers, cfg.horizon, cfg.reps), (1000, 10_000, 50));
    assert_eq!(cfg.policies, vec![PolicyKind::Myopic, PolicyKind::PerturbedMyopic]);
}

#[test]
fn echo_round_trips_through_parse() {
    let text = "model.mode = direct\nmodel.a = 3\nmodel.b = 1\nmodel.a_lo = 1\nmodel.a_hi = 5\nmodel.b_hi = 4\n\
                model.shock = uniform\ncost.kind = alternating\ncost.sigma = 0.1\npolicy.rho = 0.3\nhorizon = 50\n";
    let cfg = ExperimentConfig::parse(text).unwrap();
    let again = ExperimentConfig::parse(&cfg.echo()).unwrap();
    assert_eq!(again, cfg);
    assert_eq!(again.digest(), cfg.digest());
    assert_ne!(cfg.digest(), ExperimentConfig::case_study().digest());
}

#[test]
fn direct_world_builds_an_experiment() {
    let text = "model.mode = direct\nmodel.a = 3\nmodel.b = 1\nmodel.a_lo = 1\nmodel.a_hi = 5\nmodel.b_hi = 4\n\
                model.shock = uniform\nmodel.shock_bound = 0.5\nhorizon = 20\n";
    let exp = ExperimentConfig::parse(text).unwrap().experiment().unwrap();
    assert_eq!(exp.horizon(), 20);
    assert_eq!(exp.model().params().a, 3.0);
    assert!(exp.price_bound() > 0.0);
}

#[test]
fn missing_file_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(ExperimentConfig::load(&dir.path().join("nope.cfg")).is_err());
}
