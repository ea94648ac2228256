use approx::assert_relative_eq;
use proptest::prelude::*;
use tacter::config::{
    configuration_to_input, load_params, load_schedule, ramp, tension_from_sensor, ConfigError, ConfigurationLabel,
    LeftSide, ProtocolSchedule, RobotParams, PROTOTYPE_DOCUMENT,
};

#[test]
fn bundled_parameters_echo_the_table() {
    let p = RobotParams::prototype();
    assert_eq!(p.outer.notch_depth, 2.93);
    assert_eq!(p.outer.notch_spacing, 0.96);
    assert_eq!(p.outer.notch_width, 1.96);
    assert_eq!(p.outer.outer_radius, 1.97);
    assert_eq!(p.outer.inner_radius, 1.6);
    assert_eq!(p.outer.elastic_modulus, 84_000.0);
    assert_eq!(p.outer.shear_modulus, 28_800.0);
    assert_eq!(p.inner.rod_radius, 0.115);
    assert_eq!(p.inner.tendon_arm, 0.725);
    assert_eq!(p.inner.elastic_modulus, 100_000.0);
    assert_eq!(p.translation_range, 30.36);
    assert_eq!(p.left_side, LeftSide::PlusD2);
}

#[test]
fn document_round_trips() {
    let p = RobotParams::prototype();
    assert_eq!(load_params(&p.to_document()).unwrap(), p);
}

#[test]
fn missing_field_is_named() {
    let text = PROTOTYPE_DOCUMENT
        .lines()
        .filter(|l| !l.trim_start().starts_with("rod_radius"))
        .collect::<Vec<_>>()
        .join("\n");
    let err = load_params(&text).unwrap_err();
    assert!(matches!(err, ConfigError::Parse(_)));
    assert!(err.to_string().contains("rod_radius"), "{err}");
}

fn replace_line(key: &str, value: &str) -> String {
    PROTOTYPE_DOCUMENT
        .lines()
        .map(|l| {
            if l.trim_start().starts_with(key) {
                format!("{key} = {value}")
            } else {
                l.to_string()
            }
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn negative_radius_is_an_invariant_error() {
    let err = load_params(&replace_line("rod_radius", "\"-0.1 mm\"")).unwrap_err();
    match err {
        ConfigError::Invariant { field, .. } => assert!(field.contains("rod_radius"), "{field}"),
        other => panic!("{other}"),
    }
}

#[test]
fn units_are_converted_and_checked() {
    let p = load_params(&replace_line("rod_radius", "\"115 um\"")).unwrap();
    assert_relative_eq!(p.inner.rod_radius, 0.115, max_relative = 1e-15);
    assert!(matches!(
        load_params(&replace_line("rod_radius", "\"0.115 GPa\"")),
        Err(ConfigError::Unit { .. })
    ));
    assert!(matches!(load_params(&replace_line("rod_radius", "\"0.115\"")), Err(ConfigError::Unit { .. })));
}

#[test]
fn unknown_keys_are_rejected() {
    let text = format!("{PROTOTYPE_DOCUMENT}\n[extra]\nkey = 1\n");
    assert!(matches!(load_params(&text), Err(ConfigError::Parse(_))));
}

#[test]
fn labels_map_to_inputs() {
    let p = RobotParams::prototype();
    let os = configuration_to_input("OS-IN-L".parse().unwrap(), &p, 0.5);
    assert_eq!((os.outer_tension, os.inner_left_tension, os.inner_right_tension), (0.0, 0.5, 0.0));
    assert_eq!(os.translation, 0.0);
    assert!(os.outer_present);
    let ob = configuration_to_input("OB-IF-R".parse().unwrap(), &p, 0.5);
    assert_eq!((ob.outer_tension, ob.inner_left_tension, ob.inner_right_tension), (40.0, 0.0, 0.5));
    assert_eq!(ob.translation, 30.36);
    let io = configuration_to_input(ConfigurationLabel::InnerOnly, &p, 0.5);
    assert!(!io.outer_present);
    assert_eq!(io.inner_left_tension, 0.5);
    let model = p.model(&io).unwrap();
    assert!(model.overlap.is_none());
    assert_eq!(model.l2, p.inner_length());
}

#[test]
fn translation_outside_the_stroke_is_rejected() {
    let p = RobotParams::prototype();
    let mut input = configuration_to_input("OS-IF-L".parse().unwrap(), &p, 0.5);
    input.translation = 31.0;
    assert!(matches!(p.model(&input), Err(ConfigError::Invariant { .. })));
    input.translation = 10.0;
    input.inner_left_tension = -1.0;
    assert!(matches!(p.model(&input), Err(ConfigError::Invariant { .. })));
}

#[test]
fn sensor_conversion() {
    let gamma = 52f64.to_radians();
    let t = tension_from_sensor(1.0, gamma).unwrap();
    assert_relative_eq!(t, 1.0 / (2.0 * 104f64.to_radians().sin()), max_relative = 1e-12);
    assert_relative_eq!(t, 1.0 / (2.0 * 14f64.to_radians().cos()), max_relative = 1e-12);
    assert!((t - 0.5153).abs() < 1e-4);
    assert!(matches!(tension_from_sensor(1.0, 0.0), Err(ConfigError::UndefinedRouting { .. })));
    assert!(matches!(
        tension_from_sensor(1.0, std::f64::consts::FRAC_PI_2),
        Err(ConfigError::UndefinedRouting { .. })
    ));
}

#[test]
fn standard_schedule_has_every_pose() {
    let p = RobotParams::prototype();
    let s = ProtocolSchedule::standard(&p);
    assert_eq!(s.sweeps.len(), 13);
    assert_eq!(s.pose_count(), 195);
    assert_eq!(s.sweeps[0].tensions, ramp(1.0, 15));
}

#[test]
fn schedule_documents() {
    let p = RobotParams::prototype();
    let s = load_schedule("schema = \"tacter-schedule/1\"\nlabels = [\"IO\", \"ob-ih-l\"]\nmax_tension = \"500 mN\"\nsteps = 5\n", &p).unwrap();
    assert_eq!(s.sweeps.len(), 2);
    assert_eq!(s.sweeps[1].label.to_string(), "OB-IH-L");
    assert_eq!(s.sweeps[0].tensions, ramp(0.5, 5));
    assert_eq!(s.sweeps[0].tensions[4], 0.5);
    let s = load_schedule(
        "schema = \"tacter-schedule/1\"\n[[sweep]]\nlabel = \"OS-IN-R\"\ntensions = [\"0.2 N\", \"300 mN\"]\n",
        &p,
    )
    .unwrap();
    assert_eq!(s.sweeps[0].tensions, vec![0.2, 0.3]);
    assert!(load_schedule("schema = \"tacter-schedule/1\"\nlabels = [\"XX\"]\n", &p).is_err());
    assert!(load_schedule("schema = \"other\"\n", &p).is_err());
}

proptest! {
    #[test]
    fn sensor_conversion_is_linear(f in -100.0f64..100.0, g in -100.0f64..100.0, gamma in 0.1f64..1.4) {
        let a = tension_from_sensor(f, gamma).unwrap();
        let b = tension_from_sensor(g, gamma).unwrap();
        let ab = tension_from_sensor(f + g, gamma).unwrap();
        prop_assert!((ab - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()).max(1e-300));
        prop_assert!(((tension_from_sensor(3.0 * f, gamma).unwrap()) - 3.0 * a).abs() <= 1e-12 * a.abs().max(1e-300));
    }

    #[test]
    fn edited_parameters_round_trip(
        depth in 2.0f64..3.5, ro in 1.8f64..2.2, arm in 0.3f64..1.2, rod in 0.05f64..0.3,
        outer in 10.0f64..60.0, range in 0.0f64..40.0, tip in 0.0f64..10.0,
    ) {
        let mut p = RobotParams::prototype();
        p.outer.notch_depth = depth;
        p.outer.outer_radius = ro;
        p.inner.tendon_arm = arm;
        p.inner.rod_radius = rod;
        p.outer_length = outer;
        p.translation_range = range;
        p.distal_tip = tip;
        if p.validate().is_ok() {
            prop_assert_eq!(load_params(&p.to_document()).unwrap(), p);
        }
    }
}
