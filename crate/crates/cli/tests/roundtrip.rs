mod common;

use common::fixture;
use weakdr::objective::Objective;
use weakdr::sampling::rng;
use weakdr::verify::random_instance;
use weakdr::Point;
use weakdr_cli::instance::{instance_hash, InstanceFile};

#[test]
fn fixtures_round_trip() {
    for name in ["parabola_1d.json", "dr_quadratic_2d.json", "constant.json", "exponential.json"] {
        let file = InstanceFile::read(&fixture(name)).unwrap();
        let again = InstanceFile::from_json(&file.to_json()).unwrap();
        assert_eq!(file, again, "{name}");
        assert_eq!(instance_hash(&file), instance_hash(&again));
        file.load().unwrap();
    }
}

#[test]
fn generated_instances_replay_exactly() {
    let mut rng = rng(19);
    for n in 1..=6 {
        let inst = random_instance(&mut rng, n).unwrap();
        let file = InstanceFile::from_certified(&inst, 19);
        let text = file.to_json();
        let parsed = InstanceFile::from_json(&text).unwrap();
        assert_eq!(parsed, file);
        assert_eq!(parsed.to_json(), text);
        let loaded = parsed.load().unwrap();
        assert_eq!(loaded.gamma, inst.gamma);
        assert_eq!(loaded.body.kind(), &inst.body);
        let x = Point::new(vec![0.3; n]).unwrap();
        assert_eq!(loaded.objective.value(&x), inst.objective.value(&x));
    }
}

#[test]
fn syntax_errors_carry_a_location() {
    let err = InstanceFile::from_json("{\n  \"schema_version\": 1,\n  \"dimension\": ,\n}").unwrap_err();
    let text = err.to_string();
    assert!(text.contains("line 3"), "{text}");
    assert_eq!(err.exit_code(), 2);
}
