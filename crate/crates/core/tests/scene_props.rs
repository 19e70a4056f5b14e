use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use riskscout::dsl::parse_campaign_spec;
use riskscout::scene::{Scene, SceneError, SceneSpace, VariableKind, VariableSpec, Violation};

fn table_space() -> SceneSpace {
    parse_campaign_spec(riskscout::DEMO_SPEC).unwrap().space
}

#[test]
fn validation_examples() {
    let space = SceneSpace::new(vec![
        VariableSpec::new("P", VariableKind::Environmental, 0.0, 100.0),
        VariableSpec::fault("blur"),
    ])
    .unwrap();
    assert!(space.validate_scene(&Scene::new(1, vec![50.0, 0.0])).is_ok());
    match space.validate_scene(&Scene::new(1, vec![120.0, 0.0])) {
        Err(SceneError::Invalid(v)) => assert!(matches!(v[..], [Violation::Range { .. }])),
        other => panic!("{other:?}"),
    }
    match space.validate_scene(&Scene::new(1, vec![50.0, 0.5])) {
        Err(SceneError::Invalid(v)) => assert!(matches!(v[..], [Violation::Kind { .. }])),
        other => panic!("{other:?}"),
    }
}

#[test]
fn dependency_violation_is_reported() {
    let space = table_space();
    // RS = 2 restricts TD to [6, 20]
    let scene = Scene::new(1, vec![2.0, 50.0, 45.0, 50.0, 3.0, 0.0, 1.0]);
    match space.validate_scene(&scene) {
        Err(SceneError::Invalid(v)) => assert!(matches!(v[..], [Violation::Dependency { .. }])),
        other => panic!("{other:?}"),
    }
}

#[test]
fn bounded_region_examples() {
    let space = table_space();
    let p = space.index_of("P").unwrap();
    let blur = space.index_of("blur").unwrap();
    let r = space.bounded_region(&Scene::new(1, vec![5.0, 50.0, 45.0, 50.0, 10.0, 0.0, 0.0])).unwrap();
    assert_eq!(r.intervals[p], (45.0, 55.0));
    assert_eq!(r.intervals[blur], (0.0, 1.0));
    let r = space.bounded_region(&Scene::new(1, vec![5.0, 2.0, 45.0, 50.0, 10.0, 0.0, 0.0])).unwrap();
    assert_eq!(r.intervals[p], (0.0, 7.0));
}

#[test]
fn normalize_examples() {
    let space = table_space();
    let n = space.normalize(&[9.0, 0.0, 45.0, 50.0, 10.0, 0.0, 1.0]);
    assert_eq!(n[0], 1.0);
    assert_eq!(n[1], 0.0);
    assert_eq!(n[2], 0.5);
}

#[test]
fn degenerate_variable_normalizes_to_zero() {
    let space = SceneSpace::new(vec![VariableSpec::new("RS", VariableKind::Structural, 3.0, 3.0)]).unwrap();
    assert_eq!(space.normalize(&[3.0]), vec![0.0]);
    assert_eq!(space.denormalize(&[0.7]), vec![3.0]);
}

proptest! {
    #[test]
    fn region_samples_are_valid_and_within_delta(seed in any::<u64>()) {
        let space = table_space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let anchor = Scene::new(1, space.sample_uniform(&mut rng));
        prop_assert!(space.validate_scene(&anchor).is_ok());
        let region = space.bounded_region(&anchor).unwrap();
        prop_assert!(region.contains(&anchor.values));
        for _ in 0..20 {
            let s = space.sample_in_region(&region, &mut rng);
            prop_assert!(region.contains(&s));
            prop_assert!(space.validate_scene(&Scene::new(2, s.clone())).is_ok(), "{:?}", s);
            for (v, (a, b)) in space.vars().iter().zip(anchor.values.iter().zip(&s)) {
                if let Some(d) = v.delta {
                    prop_assert!((a - b).abs() <= d + 1e-12, "{} moved {} > {}", v.name, (a - b).abs(), d);
                }
            }
        }
    }

    #[test]
    fn uniform_samples_are_valid(seed in any::<u64>()) {
        let space = table_space();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let s = space.sample_uniform(&mut rng);
            prop_assert!(space.validate_scene(&Scene::new(1, s)).is_ok());
        }
    }

    #[test]
    fn normalize_round_trips(lo in -1e6f64..1e6, width in 1e-3f64..1e6, u in 0f64..=1.0) {
        let space = SceneSpace::new(vec![VariableSpec::new("x", VariableKind::Environmental, lo, lo + width)]).unwrap();
        let x = lo + u * width;
        let back = space.denormalize(&space.normalize(&[x]))[0];
        let scale = x.abs().max(width);
        prop_assert!((back - x).abs() <= 1e-12 * scale, "{x} -> {back}");
    }

    #[test]
    fn unit_points_map_to_valid_scenes(point in prop::collection::vec(0f64..1.0, 7)) {
        let space = table_space();
        let values = space.scene_from_unit(&point);
        prop_assert!(space.validate_scene(&Scene::new(1, values)).is_ok());
    }
}
