use csaf::formats::{self, FormatError};
use csaf_core::locomotion::{ControllerInput, InputTrace, Side, TraceRow};
use csaf_core::runtime::{EventKind, EventRecord};
use csaf_core::susceptibility::{generate_rft_trials, score_rft, RftConfig, RftResponse};
use csaf_core::{Pose, PoseSample, Quat, Vec3};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6..1e6f64,
        Just(0.0),
        Just(-0.0),
        Just(1e-300),
        Just(0.1 + 0.2)
    ]
}

fn sample() -> impl Strategy<Value = PoseSample> {
    (
        0.0..1e4f64,
        [finite(), finite(), finite()],
        [finite(), finite(), finite(), finite()],
    )
        .prop_map(|(t, p, q)| PoseSample {
            t,
            position: Vec3::new(p[0], p[1], p[2]),
            orientation: Quat::new(q[0], q[1], q[2], q[3]),
        })
}

proptest! {
    #[test]
    fn pose_csv_round_trips_bit_exact(log in prop::collection::vec(sample(), 0..40)) {
        let mut buf = Vec::new();
        formats::write_pose_csv(&mut buf, &log).unwrap();
        let back = formats::read_pose_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.len(), log.len());
        for (a, b) in log.iter().zip(&back) {
            prop_assert_eq!(a.t.to_bits(), b.t.to_bits());
            prop_assert_eq!(a.position.x.to_bits(), b.position.x.to_bits());
            prop_assert_eq!(a.orientation.w.to_bits(), b.orientation.w.to_bits());
            prop_assert_eq!(a.orientation.z.to_bits(), b.orientation.z.to_bits());
        }
        let mut again = Vec::new();
        formats::write_pose_csv(&mut again, &back).unwrap();
        prop_assert_eq!(buf, again);
    }
}

#[test]
fn pose_header_is_checked() {
    let text = "t,x,y,z,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n";
    assert!(matches!(
        formats::read_pose_csv(text.as_bytes()),
        Err(FormatError::Header { .. })
    ));
}

#[test]
fn bad_number_reports_line() {
    let text = "t,px,py,pz,qw,qx,qy,qz\n0,0,0,0,1,0,0,0\n0.1,abc,0,0,1,0,0,0\n";
    match formats::read_pose_csv(text.as_bytes()) {
        Err(FormatError::Field { line, field, .. }) => {
            assert_eq!(line, 3);
            assert_eq!(field, "px");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn event_csv_round_trips_payloads() {
    let events = vec![
        EventRecord::new(0.0, EventKind::PhaseStart)
            .with("phase", "Exposure")
            .with("index", 1i64),
        EventRecord::new(12.5, EventKind::FmsResponse)
            .with("rating", 7i64)
            .with("latency", 0.25)
            .with("source", "participant, \"quoted\""),
        EventRecord::custom(13.0, "marker"),
    ];
    let mut buf = Vec::new();
    formats::write_event_csv(&mut buf, &events).unwrap();
    let back = formats::read_event_csv(buf.as_slice()).unwrap();
    assert_eq!(back, events);
}

#[test]
fn unknown_event_kind_rejected() {
    let text = "t,kind,payload_json\n0,Explode,{}\n";
    assert!(matches!(
        formats::read_event_csv(text.as_bytes()),
        Err(FormatError::Field { field: "kind", .. })
    ));
}

#[test]
fn input_trace_round_trips() {
    let grip = ControllerInput {
        grip: true,
        pose: Pose {
            position: Vec3::new(0.1, 1.2, 0.3),
            orientation: Quat::IDENTITY,
        },
        ..ControllerInput::stick(0.0, 0.0)
    };
    let trace = InputTrace::new(vec![
        TraceRow {
            t: 0.0,
            side: Side::Left,
            input: ControllerInput::stick(0.0, 1.0),
        },
        TraceRow {
            t: 0.5,
            side: Side::Right,
            input: grip,
        },
        TraceRow {
            t: 2.0,
            side: Side::Left,
            input: ControllerInput::stick(-0.5, 0.25),
        },
    ]);
    let mut buf = Vec::new();
    formats::write_input_trace(&mut buf, &trace).unwrap();
    let back = formats::read_input_trace(buf.as_slice()).unwrap();
    assert_eq!(back, trace);
}

#[test]
fn trace_pose_columns_are_optional() {
    let text = "t,side,jx,jy\n0,L,0,1\n1,right,0.5,0\n";
    let trace = formats::read_input_trace(text.as_bytes()).unwrap();
    assert_eq!(trace.rows().len(), 2);
    assert_eq!(trace.rows()[1].side, Side::Right);
    assert_eq!(trace.rows()[1].input.pose, Pose::IDENTITY);
}

#[test]
fn rft_responses_read_back_from_filled_trial_list() {
    let cfg = RftConfig::default();
    let trials = generate_rft_trials(&cfg, 3).unwrap();
    let responses: Vec<_> = (0..trials.len())
        .map(|i| RftResponse {
            trial: i,
            final_rod_angle: i as f64 * 0.5 - 3.0,
        })
        .collect();
    let scored = score_rft(&trials, &responses).unwrap();
    let mut buf = Vec::new();
    formats::write_rft_csv(&mut buf, &trials, Some((&responses, &scored))).unwrap();
    let back = formats::read_rft_responses(buf.as_slice()).unwrap();
    assert_eq!(back, responses);
}

#[test]
fn rft_responses_need_columns() {
    assert!(formats::read_rft_responses("trial,angle\n0,1\n".as_bytes()).is_err());
}
