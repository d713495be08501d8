//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL
//! line; the process exits non-zero if any fails.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use csaf::artifacts::ARTIFACT_FILES;
use csaf::bundled::{bundled_plan, bundled_scene, EXAMPLE_REPORT};
use csaf::formats;
use csaf::report::{parse_report, render_report, Format};
use csaf_core::environment::{
    build_path, fractal_height, generate_terrain, place_collectibles, PathSpec, Perlin,
    SceneDescription, TerrainSpec,
};
use csaf_core::locomotion::{
    configure_handler, step, ControllerInput, ControllerInputs, InputTrace, LocomotionContext,
    LocomotionEvent, Provider, ProviderEntry, ProviderSet, RigState, Side, TraceRow, DEFAULT_DT,
};
use csaf_core::registry::{
    builtin_registry, is_preset_name, EntityId, SceneEntity, SemanticType, Value,
};
use csaf_core::report::{
    from_session, render_document, validate_report, Demographics, StandardReport, ROW_LABELS,
};
use csaf_core::runtime::{
    run_headless, EventKind, Motion, Phase, PhaseKind, RuntimeError, Session, SessionPlan,
};
use csaf_core::susceptibility::{
    build_sensitivity_schedule, generate_rft_trials, schedule_pose, score_rft, Axis, RftConfig,
    RftResponse, SegmentKind, SensitivityConfig, TranslationCfg,
};
use csaf_core::vision::{fov_restriction, fov_target, FovRestrictorCfg};
use csaf_core::{Pose, Quat, Vec3};
use proptest::collection::vec as pvec;
use proptest::test_runner::{Config, TestRunner};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! ensure {
    ($cond:expr, $($arg:tt)*) => {
        match $cond {
            true => {}
            false => return Err(format!($($arg)*)),
        }
    };
}

fn exposure(d: f64) -> Phase {
    Phase {
        kind: PhaseKind::Exposure,
        duration: d,
    }
}

// ---------------------------------------------------------------- presets

fn random_value(rng: &mut ChaCha8Rng, ty: &SemanticType) -> Value {
    let word = |rng: &mut ChaCha8Rng, n: usize| -> String {
        const CHARS: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789_-";
        (0..n)
            .map(|_| *CHARS.choose(rng).unwrap() as char)
            .collect()
    };
    match ty {
        SemanticType::Bool => Value::Bool(rng.gen()),
        SemanticType::Int => Value::Int(rng.gen_range(-1_000_000..1_000_000)),
        SemanticType::Real => Value::Real(match rng.gen_range(0..4) {
            0 => 0.0,
            1 => rng.gen_range(-1e-6..1e-6),
            _ => rng.gen_range(-1e4..1e4),
        }),
        SemanticType::Text => {
            let n = rng.gen_range(0..12);
            Value::Text(format!("{} é,\"{}\"", word(rng, n), rng.gen::<u16>()))
        }
        SemanticType::Enum(variants) => Value::Text(variants.choose(rng).unwrap().clone()),
        SemanticType::PresetRef => {
            let n = rng.gen_range(0..10);
            Value::Text(word(rng, n))
        }
        SemanticType::Vec3 => Value::Vec3(Vec3::new(
            rng.gen_range(-100.0..100.0),
            rng.gen_range(-100.0..100.0),
            rng.gen_range(-100.0..100.0),
        )),
        SemanticType::Quat => loop {
            let q = Quat::new(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            if q.norm() > 0.1 {
                break Value::Quat(q.normalized());
            }
        },
    }
}

fn preset_round_trip() -> Check {
    let started = Instant::now();
    let registry = builtin_registry();
    let types: Vec<_> = registry
        .types()
        .iter()
        .filter(|t| !t.fields.is_empty())
        .take(10)
        .collect();
    ensure!(
        types.len() == 10,
        "only {} registered types carry fields",
        types.len()
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5AF);
    let mut failures = Vec::new();
    for i in 0..1000 {
        let tag = types[i % types.len()];
        let name_len = rng.gen_range(1..16);
        let name: String = (0..name_len)
            .map(|_| *b"abcxyzABC019_-".choose(&mut rng).unwrap() as char)
            .collect();
        assert!(is_preset_name(&name));
        let mut values = BTreeMap::new();
        for f in &tag.fields {
            if rng.gen_bool(0.85) {
                values.insert(f.name.clone(), random_value(&mut rng, &f.ty));
            }
        }
        let doc = match registry.create_preset(&tag.identifier, &name, values) {
            Ok(d) => d,
            Err(e) => {
                failures.push(format!("{}: create: {e}", tag.identifier));
                continue;
            }
        };
        // The document itself survives serialization.
        let json = serde_json::to_string(&doc).unwrap();
        let back: csaf_core::registry::PresetDoc = serde_json::from_str(&json).unwrap();
        if back != doc {
            failures.push(format!(
                "{}: JSON round trip changed the document",
                tag.identifier
            ));
        }

        let mut entity =
            SceneEntity::new(EntityId(rng.gen()), format!("Entity {}", rng.gen::<u32>()));
        if let Some(base) = &tag.extends {
            entity = registry.attach(&entity, base).unwrap();
        }
        entity = registry.attach(&entity, &tag.identifier).unwrap();
        let renamed = entity
            .clone()
            .renamed(format!("Renamed {}", rng.gen::<u64>()));

        let a = registry.apply_preset(&entity, &doc).unwrap().entity;
        let b = registry.apply_preset(&renamed, &doc).unwrap().entity;
        let out_a = registry.extract_preset(&a, &tag.identifier, &name).unwrap();
        let out_b = registry.extract_preset(&b, &tag.identifier, &name).unwrap();
        if out_a != doc {
            failures.push(format!(
                "{}: apply/extract is not the identity",
                tag.identifier
            ));
        }
        if out_b != out_a || a.attachments != b.attachments {
            failures.push(format!(
                "{}: result depends on the entity name",
                tag.identifier
            ));
        }
    }
    let elapsed = started.elapsed();
    ensure!(
        failures.is_empty(),
        "{} failures, first: {}",
        failures.len(),
        failures[0]
    );
    ensure!(elapsed < Duration::from_secs(5), "took {elapsed:?}");
    Ok(format!(
        "1000 docs over {}; 0 failures in {:.2} s",
        types
            .iter()
            .map(|t| t.identifier.as_str())
            .collect::<Vec<_>>()
            .join(", "),
        elapsed.as_secs_f64()
    ))
}

// ------------------------------------------------------------- locomotion

fn provider_set(left: Vec<Provider>, right: Vec<Provider>) -> ProviderSet {
    let l: Vec<ProviderEntry> = left.into_iter().map(Into::into).collect();
    let r: Vec<ProviderEntry> = right.into_iter().map(Into::into).collect();
    configure_handler(&l, &r).set
}

/// Barry-Goldman evaluation of a centripetal Catmull-Rom segment.
fn barry_goldman(p: [Vec3; 4], t: f64) -> Vec3 {
    let k1 = p[0].distance(p[1]).sqrt();
    let k2 = k1 + p[1].distance(p[2]).sqrt();
    let k3 = k2 + p[2].distance(p[3]).sqrt();
    let k = [0.0, k1, k2, k3];
    let tt = k1 + t * (k2 - k1);
    let mix = |a: Vec3, b: Vec3, ta: f64, tb: f64| {
        a * ((tb - tt) / (tb - ta)) + b * ((tt - ta) / (tb - ta))
    };
    let a1 = mix(p[0], p[1], k[0], k[1]);
    let a2 = mix(p[1], p[2], k[1], k[2]);
    let a3 = mix(p[2], p[3], k[2], k[3]);
    let b1 = mix(a1, a2, k[0], k[2]);
    let b2 = mix(a2, a3, k[1], k[3]);
    mix(b1, b2, k[1], k[2])
}

struct CurveOracle {
    segments: Vec<[Vec3; 4]>,
    per_segment: usize,
    samples: Vec<Vec3>,
}

impl CurveOracle {
    fn new(pts: &[Vec3], closed: bool, per_segment: usize) -> Self {
        let n = pts.len();
        let nseg = if closed { n } else { n - 1 };
        let segments: Vec<[Vec3; 4]> = (0..nseg)
            .map(|i| {
                if closed {
                    [
                        pts[(i + n - 1) % n],
                        pts[i],
                        pts[(i + 1) % n],
                        pts[(i + 2) % n],
                    ]
                } else {
                    let p0 = if i == 0 {
                        pts[0] * 2.0 - pts[1]
                    } else {
                        pts[i - 1]
                    };
                    let p3 = if i + 2 < n {
                        pts[i + 2]
                    } else {
                        pts[n - 1] * 2.0 - pts[n - 2]
                    };
                    [p0, pts[i], pts[i + 1], p3]
                }
            })
            .collect();
        let samples = segments
            .iter()
            .flat_map(|q| {
                (0..=per_segment).map(move |k| barry_goldman(*q, k as f64 / per_segment as f64))
            })
            .collect();
        CurveOracle {
            segments,
            per_segment,
            samples,
        }
    }

    /// Distance from `p` to the curve: nearest dense sample, then a
    /// golden-section refinement of the curve parameter around it.
    fn distance(&self, p: Vec3) -> f64 {
        let (idx, _) = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, q)| (i, q.distance(p)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let stride = self.per_segment + 1;
        let seg = idx / stride;
        let k = idx % stride;
        let mut best = f64::INFINITY;
        // The nearest point may sit across a segment boundary.
        let mut candidates = vec![(seg, k)];
        if k == 0 && seg > 0 {
            candidates.push((seg - 1, self.per_segment));
        }
        if k == self.per_segment && seg + 1 < self.segments.len() {
            candidates.push((seg + 1, 0));
        }
        for (s, k) in candidates {
            let q = self.segments[s];
            let h = 1.0 / self.per_segment as f64;
            let (mut lo, mut hi) = (
                ((k as f64 - 1.0) * h).max(0.0),
                ((k as f64 + 1.0) * h).min(1.0),
            );
            let f = |t: f64| barry_goldman(q, t).distance(p);
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..200 {
                let a = hi - g * (hi - lo);
                let b = lo + g * (hi - lo);
                if f(a) < f(b) {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            best = best.min(f(0.5 * (lo + hi)));
        }
        best
    }
}

fn locomotion() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let ctx = LocomotionContext::default();

    // Replay: a 60 s trace through CSV, run twice.
    let mut rows = Vec::new();
    let mut t = 0.0;
    while t < 60.0 {
        let side = if rng.gen_bool(0.5) {
            Side::Left
        } else {
            Side::Right
        };
        let input = match side {
            Side::Left => {
                ControllerInput::stick(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            }
            Side::Right => {
                ControllerInput::stick(*[-1.0, 0.0, 0.0, 1.0].choose(&mut rng).unwrap(), 0.0)
            }
        };
        rows.push(TraceRow { t, side, input });
        t += rng.gen_range(0.05..0.7);
    }
    let trace = InputTrace::new(rows);
    let mut csv = Vec::new();
    formats::write_input_trace(&mut csv, &trace).unwrap();
    let trace = formats::read_input_trace(csv.as_slice()).unwrap();
    let plan = SessionPlan::new(
        vec![exposure(60.0)],
        Motion::Active {
            left: vec![Provider::ContinuousMove {
                speed: 2.0,
                head_relative: true,
            }
            .into()],
            right: vec![Provider::SnapTurn {
                angle: 30.0,
                threshold: 0.7,
            }
            .into()],
        },
    );
    let scene = SceneDescription::empty("replay");
    let pose_csv = || {
        let run = run_headless(&plan, &scene, Some(&trace)).unwrap();
        let mut out = Vec::new();
        formats::write_pose_csv(&mut out, &run.pose_log).unwrap();
        (out, run)
    };
    let (a, run) = pose_csv();
    let (b, _) = pose_csv();
    ensure!(a == b, "replayed pose CSVs differ");
    ensure!(
        run.pose_log.len() == 3001,
        "expected 3001 pose rows, got {}",
        run.pose_log.len()
    );
    let moved = run.pose_log.last().unwrap().position.norm();
    ensure!(moved > 1.0, "the trace barely moved the rig ({moved} m)");

    // ContinuousMove displacement against v·t.
    let mut worst_move: f64 = 0.0;
    for _ in 0..200 {
        let speed = rng.gen_range(0.1..5.0);
        let dt = rng.gen_range(1.0 / 120.0..1.0 / 30.0);
        let steps = rng.gen_range(1..1000);
        let yaw = rng.gen_range(-180.0..180.0);
        let set = provider_set(
            vec![Provider::ContinuousMove {
                speed,
                head_relative: true,
            }],
            vec![],
        );
        let origin = Vec3::new(rng.gen_range(-50.0..50.0), 0.0, rng.gen_range(-50.0..50.0));
        let start = RigState::at(Pose::new(origin, Quat::from_yaw(yaw)));
        let inputs = ControllerInputs {
            left: ControllerInput::stick(0.0, 1.0),
            right: ControllerInput::default(),
        };
        let mut rig = start;
        for _ in 0..steps {
            rig = step(&rig, &set, &inputs, dt, &ctx).unwrap().rig;
        }
        let expected = origin + start.heading.rotate(Vec3::Z) * (speed * dt * steps as f64);
        worst_move = worst_move.max(rig.position.distance(expected));
    }
    ensure!(
        worst_move <= 1e-9,
        "ContinuousMove off v·t by {worst_move:e} m"
    );

    // Twelve 30° snaps through the input path.
    let set = provider_set(
        vec![],
        vec![Provider::SnapTurn {
            angle: 30.0,
            threshold: 0.7,
        }],
    );
    let mut rig = RigState::default();
    let mut snaps = 0;
    let flick = ControllerInputs {
        left: ControllerInput::default(),
        right: ControllerInput::stick(1.0, 0.0),
    };
    for _ in 0..12 {
        for inputs in [flick, ControllerInputs::default()] {
            let s = step(&rig, &set, &inputs, DEFAULT_DT, &ctx).unwrap();
            snaps += s
                .events
                .iter()
                .filter(|e| matches!(e, LocomotionEvent::Snap { .. }))
                .count();
            rig = s.rig;
        }
    }
    let snap_err = rig.heading.angle_to(Quat::IDENTITY);
    ensure!(snaps == 12, "expected 12 snaps, saw {snaps}");
    ensure!(
        snap_err < 1e-9,
        "heading after 12 snaps is {snap_err:e}° from identity"
    );

    // PathFollow along the forest loop versus an independent curve.
    let spec = bundled_scene("forest-simple").unwrap().path.unwrap();
    let table = build_path(&spec).unwrap();
    let oracle = CurveOracle::new(&spec.control_points, spec.closed, 4000);
    let mut ctx = LocomotionContext::default();
    ctx.paths.insert("main".into(), table.clone());
    let set = provider_set(
        vec![Provider::PathFollow {
            path: "main".into(),
            speed: 5.0,
        }],
        vec![],
    );
    let (p0, _) = table.pose_at(0.0).unwrap();
    let mut rig = RigState::at(Pose::new(p0, Quat::IDENTITY));
    let steps = (table.total_length * 1.1 / (5.0 * DEFAULT_DT)) as usize;
    let mut worst_path: f64 = 0.0;
    for k in 0..steps {
        rig = step(&rig, &set, &ControllerInputs::default(), DEFAULT_DT, &ctx)
            .unwrap()
            .rig;
        if k % 7 == 0 {
            worst_path = worst_path.max(oracle.distance(rig.position));
        }
    }
    ensure!(
        worst_path <= 1e-6,
        "PathFollow strays {worst_path:e} m from the curve"
    );
    Ok(format!(
        "replay identical ({} bytes); move err {worst_move:.1e} m; snap err {snap_err:.1e}°; path err {worst_path:.1e} m",
        a.len()
    ))
}

// --------------------------------------------------------------------- FOV

fn fov() -> Check {
    let cfg = FovRestrictorCfg::default();
    ensure!(
        cfg.fov_min == 60.0 && cfg.rate_limit == 0.2,
        "defaults differ from the reference table"
    );
    let mut runner = TestRunner::new(Config {
        cases: 100,
        failure_persistence: None,
        ..Config::default()
    });
    let strategy = (60.0..=110.0f64, pvec((0.0..30.0f64, 1e-4..0.25f64), 1000));
    let mut steps = 0usize;
    let result = runner.run(&strategy, |(start, seq)| {
        let mut prev = start;
        for (speed, dt) in seq {
            let next = fov_restriction(&cfg, speed, prev, dt);
            proptest::prop_assert!(next >= 60.0, "fov {} below 60", next);
            proptest::prop_assert!(
                (next - prev).abs() <= cfg.rate_limit * dt,
                "step {} exceeds {}",
                (next - prev).abs(),
                cfg.rate_limit * dt
            );
            prev = next;
        }
        Ok(())
    });
    if let Err(e) = result {
        return Err(format!("{e}"));
    }
    steps += 100 * 1000;

    let result = runner.run(&pvec(0.0..50.0f64, 2..64), |mut speeds| {
        speeds.sort_by(f64::total_cmp);
        for w in speeds.windows(2) {
            proptest::prop_assert!(fov_target(&cfg, w[1], 0.0) <= fov_target(&cfg, w[0], 0.0));
        }
        Ok(())
    });
    if let Err(e) = result {
        return Err(format!("target not monotone: {e}"));
    }
    Ok(format!(
        "{steps} random steps: min 60°, |Δ| ≤ 0.2°/s·dt; target non-increasing in speed"
    ))
}

// ------------------------------------------------------------- sensitivity

fn random_sensitivity(rng: &mut ChaCha8Rng) -> SensitivityConfig {
    let orders = (0..rng.gen_range(1..5))
        .map(|_| {
            let mut a = Axis::ALL;
            a.shuffle(rng);
            a
        })
        .collect();
    SensitivityConfig {
        reps_per_axis: rng.gen_range(1..4),
        indicator_duration: rng.gen_range(0.1..3.0),
        turn_duration: rng.gen_range(0.5..20.0),
        pause_after_turn: rng.gen_range(0.1..5.0),
        pause_between_triples: rng.gen_range(0.1..10.0),
        orders,
        alternate_direction: rng.gen(),
        shuffle_orders: rng.gen(),
        include_translation: rng.gen(),
        translation: TranslationCfg {
            distance: rng.gen_range(0.0..10.0),
            duration: rng.gen_range(0.5..10.0),
        },
    }
}

/// Closed-form schedule length.
fn schedule_formula(c: &SensitivityConfig) -> f64 {
    let n = c.orders.len() as f64;
    let r = c.reps_per_axis as f64;
    let rotation = n * 3.0 * r * (c.indicator_duration + c.turn_duration + c.pause_after_turn)
        + (n - 1.0) * c.pause_between_triples;
    let translation = if c.include_translation {
        n * (c.pause_between_triples
            + 3.0 * r * (c.indicator_duration + c.translation.duration + c.pause_after_turn))
    } else {
        0.0
    };
    rotation + translation
}

fn sensitivity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut rotations = 0;
    let mut worst_angle: f64 = 0.0;
    let configs = 120;
    for _ in 0..configs {
        let cfg = random_sensitivity(&mut rng);
        let s = build_sensitivity_schedule(&cfg, rng.gen()).unwrap();
        ensure!(s.segments[0].start == 0.0, "schedule does not start at 0");
        for w in s.segments.windows(2) {
            ensure!(w[1].start == w[0].end(), "gap or overlap at {}", w[0].end());
        }
        let brute: f64 = s.segments.iter().map(|x| x.duration).sum();
        let formula = schedule_formula(&cfg);
        ensure!(
            (brute - formula).abs() <= 1e-9 * formula.max(1.0),
            "formula {formula} vs summation {brute}"
        );
        ensure!(
            (s.end() - brute).abs() <= 1e-9 * brute.max(1.0),
            "end {} vs sum {brute}",
            s.end()
        );
        for (i, seg) in s.segments.iter().enumerate() {
            if seg.kind != SegmentKind::Rotation {
                continue;
            }
            rotations += 1;
            ensure!(i > 0, "schedule opens with a rotation");
            let prev = &s.segments[i - 1];
            ensure!(
                prev.kind == SegmentKind::Indicator && prev.axis == seg.axis,
                "rotation at {} lacks its indicator",
                seg.start
            );
            // Integrate the turn from the pose stream in 4° slices.
            let slices = 90;
            let mut q = schedule_pose(&s, Pose::IDENTITY, seg.start)
                .unwrap()
                .orientation;
            let mut total = 0.0;
            for k in 1..=slices {
                let t = seg.start + seg.duration * k as f64 / slices as f64;
                let t = if k == slices {
                    seg.end() - 1e-12 * seg.end().max(1.0)
                } else {
                    t
                };
                let next = schedule_pose(&s, Pose::IDENTITY, t).unwrap().orientation;
                total += q.angle_to(next);
                q = next;
            }
            // The last slice stops a hair short of the boundary.
            let short = 360.0 * (1e-12 * seg.end().max(1.0)) / seg.duration;
            worst_angle = worst_angle.max((total + short - 360.0).abs());
        }
    }
    ensure!(
        worst_angle <= 1e-6,
        "rotation total off by {worst_angle:e}°"
    );
    Ok(format!(
        "{configs} random configs, {rotations} rotations; worst |total − 360°| {worst_angle:.1e}°"
    ))
}

// --------------------------------------------------------------------- RFT

fn rft() -> Check {
    let cfg = RftConfig::default();
    for seed in 0..1000u64 {
        let trials = generate_rft_trials(&cfg, seed).unwrap();
        ensure!(trials.len() == 16, "seed {seed}: {} trials", trials.len());
        let mut counts: BTreeMap<(i8, i8), usize> = BTreeMap::new();
        for t in &trials {
            *counts.entry((t.frame_sign, t.rod_sign)).or_default() += 1;
        }
        ensure!(
            counts.len() == 4 && counts.values().all(|&c| c == 4),
            "seed {seed}: permutation counts {counts:?}"
        );
    }
    let trials = generate_rft_trials(&cfg, 0).unwrap();
    // Hand-computed: errors are absolute deviations from vertical, std is
    // the sample standard deviation.
    let fixtures: [(&[f64], f64, f64); 4] = [
        (&[2.0, -2.0, 4.0, -4.0], 3.0, (4.0f64 / 3.0).sqrt()),
        (&[0.0, 0.0, 0.0, 0.0], 0.0, 0.0),
        (&[1.0, -3.0], 2.0, std::f64::consts::SQRT_2),
        (&[-10.0, 10.0, 5.0], 25.0 / 3.0, (25.0f64 / 3.0).sqrt()),
    ];
    for (angles, mean, std) in fixtures {
        let responses: Vec<_> = angles
            .iter()
            .enumerate()
            .map(|(i, &a)| RftResponse {
                trial: i,
                final_rod_angle: a,
            })
            .collect();
        let r = score_rft(&trials[..angles.len()], &responses).unwrap();
        ensure!(
            (r.mean - mean).abs() <= 1e-9 && (r.std - std).abs() <= 1e-9,
            "{angles:?}: got mean {} std {}, expected {mean} {std}",
            r.mean,
            r.std
        );
    }
    ensure!(
        ((4.0f64 / 3.0).sqrt() - 1.1547).abs() < 5e-5,
        "fixture std does not round to 1.1547"
    );
    Ok("1000 seeds × 16 trials, 4 of each sign pair; {2,−2,4,−4}° → mean 3.0, std 1.1547".into())
}

// ----------------------------------------------------------------- runtime

fn runtime() -> Check {
    let scene = SceneDescription::empty("runtime");
    let mut plan = SessionPlan::new(vec![exposure(1200.0)], Motion::Static);
    plan.fms.interval = 60.0;
    plan.log_rate = 1.0;
    let run = run_headless(&plan, &scene, None).unwrap();
    let prompts = run
        .event_log
        .iter()
        .filter(|e| e.kind == EventKind::FmsPrompt)
        .count();
    ensure!(prompts == 20, "20-min exposure gave {prompts} prompts");

    let mut plan = SessionPlan::new(vec![exposure(10.0)], Motion::Static);
    plan.log_rate = 50.0;
    let run = run_headless(&plan, &scene, None).unwrap();
    ensure!(
        run.pose_log.len() == 501,
        "10 s at 50 Hz gave {} rows",
        run.pose_log.len()
    );
    for (k, s) in run.pose_log.iter().enumerate() {
        ensure!(s.t == k as f64 / 50.0, "row {k} at t = {}", s.t);
    }

    let mut plan = SessionPlan::new(vec![exposure(120.0)], Motion::Static);
    plan.dt = 0.25;
    let mut s = Session::start(plan, &scene).unwrap();
    for bad in [21, -1, 100] {
        ensure!(
            matches!(
                s.submit_fms(bad, "participant"),
                Err(RuntimeError::FmsOutOfRange { .. })
            ),
            "rating {bad} accepted"
        );
    }
    ensure!(s.submit_fms(20, "participant").is_ok(), "rating 20 refused");

    let plan = bundled_plan("coin-demo").unwrap();
    let scene = bundled_scene(&plan.scene).unwrap();
    let a = run_headless(&plan, &scene, None).unwrap();
    let b = run_headless(&plan, &scene, None).unwrap();
    ensure!(a == b, "two runs with seed {} differ", plan.seed);
    let bytes = |r: &csaf_core::runtime::RunArtifacts| {
        let mut out = Vec::new();
        formats::write_pose_csv(&mut out, &r.pose_log).unwrap();
        formats::write_event_csv(&mut out, &r.event_log).unwrap();
        formats::write_effects_csv(&mut out, &r.effect_log).unwrap();
        out
    };
    ensure!(bytes(&a) == bytes(&b), "logs differ byte-wise");
    Ok(
        "20 prompts; 501 rows at exact k/50 s; ratings 21, −1, 100 rejected; seeded run repeatable"
            .into(),
    )
}

// ------------------------------------------------------------------ report

fn report() -> Check {
    let fixture: StandardReport =
        parse_report(EXAMPLE_REPORT.as_bytes()).map_err(|e| e.to_string())?;
    let violations = validate_report(&fixture);
    ensure!(violations.is_empty(), "fixture invalid: {violations:?}");
    let doc = render_document(&fixture).map_err(|e| e.to_string())?;
    for label in ROW_LABELS {
        ensure!(
            doc.contains(&format!("| {label} |")) || doc.contains(&format!("| **{label}** |")),
            "row `{label}` missing"
        );
    }
    let machine = render_report(&fixture, Format::Machine).map_err(|e| e.to_string())?;
    let back = parse_report(&machine).map_err(|e| e.to_string())?;
    ensure!(back == fixture, "render→parse changed the report");
    ensure!(
        render_report(&back, Format::Machine).unwrap() == machine,
        "second render differs"
    );

    // Yaw-only run: 45°/s about the head y axis for 5 min.
    let mut plan = SessionPlan::new(
        vec![exposure(300.0)],
        Motion::Rotator {
            axis: Axis::Yaw,
            rate: 45.0,
        },
    );
    plan.log_rate = 10.0;
    let run = run_headless(&plan, &SceneDescription::empty("yaw"), None).unwrap();
    // Independent reading of the pose log: time spent turning about the
    // head y axis and about anything else.
    let (mut yaw_s, mut other_s) = (0.0, 0.0);
    for w in run.pose_log.windows(2) {
        let dt = w[1].t - w[0].t;
        let rel = (w[0].orientation.conjugate() * w[1].orientation).to_rotation_vector();
        if rel.y.abs() / dt > 1.0 {
            yaw_s += dt;
        }
        if (rel.x.abs() + rel.z.abs()) / dt > 1.0 || w[1].position.distance(w[0].position) > 0.0 {
            other_s += dt;
        }
    }
    ensure!(other_s == 0.0, "trace has non-yaw motion");
    let expected = format!("Rotation along Yaw axis - {} min", yaw_s / 60.0);
    let r = from_session(
        std::slice::from_ref(&run),
        Demographics {
            participants: 1,
            ..fixture.demographics
        }
        .with_counts(),
        fixture.hardware.clone(),
    )
    .map_err(|e| e.to_string())?;
    let list = r
        .experiment
        .motion_breakdown
        .as_ref()
        .ok_or("no breakdown")?;
    ensure!(
        list.len() == 1 && list[0].entries.len() == 1,
        "breakdown {list:?}"
    );
    let got = list[0].entries[0].describe();
    ensure!(got == expected, "breakdown `{got}` vs trace `{expected}`");
    let doc = render_document(&r).map_err(|e| e.to_string())?;
    ensure!(
        doc.contains(&format!("S1: {expected}")),
        "rendered report lacks the breakdown"
    );
    Ok(format!(
        "24 rows present; JSON round trip identical; yaw run → \"{got}\""
    ))
}

trait WithCounts {
    fn with_counts(self) -> Self;
}

impl WithCounts for Demographics {
    /// A single participant with consistent sub-counts.
    fn with_counts(mut self) -> Self {
        self.females = self.females.min(self.participants);
        self.experienced = self.experienced.min(self.participants);
        self.inexperienced = self.participants - self.experienced;
        self
    }
}

// ---------------------------------------------------------------- terrain

fn terrain() -> Check {
    let spec = bundled_scene("forest-simple").unwrap().terrain.unwrap();
    let a = generate_terrain(&spec).unwrap();
    let b = generate_terrain(&spec).unwrap();
    ensure!(
        a.heights
            .iter()
            .zip(&b.heights)
            .all(|(x, y)| x.to_bits() == y.to_bits()),
        "same seed, different terrain"
    );
    let other = generate_terrain(&TerrainSpec {
        seed: spec.seed + 1,
        ..spec.clone()
    })
    .unwrap();
    ensure!(other.heights != a.heights, "seed has no effect");

    let mut rng = ChaCha8Rng::seed_from_u64(1_000_000);
    let mut samples = 0usize;
    let mut worst_ratio: f64 = 0.0;
    for _ in 0..10 {
        let s = TerrainSpec {
            seed: rng.gen(),
            width: 2,
            depth: 2,
            cell_size: 1.0,
            amplitude: rng.gen_range(0.1..50.0),
            frequency: rng.gen_range(0.001..0.5),
            octaves: rng.gen_range(1..8),
            persistence: rng.gen_range(0.05..=1.0),
        };
        let noise = Perlin::new(s.seed);
        let bound = s.height_bound();
        for _ in 0..100_000 {
            let h = fractal_height(
                &s,
                &noise,
                rng.gen_range(-1e4..1e4),
                rng.gen_range(-1e4..1e4),
            );
            worst_ratio = worst_ratio.max(h.abs() / bound);
            samples += 1;
        }
    }
    ensure!(worst_ratio <= 1.0, "|h| reached {worst_ratio} of the bound");

    // On a straight path arc length is distance along the line.
    let table = build_path(&PathSpec::new(
        vec![Vec3::ZERO, Vec3::new(0.0, 0.0, 100.0)],
        false,
    ))
    .unwrap();
    let set = place_collectibles(&table, 5, 1, 0.0).unwrap();
    let expected = [10.0, 30.0, 50.0, 70.0, 90.0];
    for (i, (p, s)) in set.positions.iter().zip(&set.stations).enumerate() {
        let oracle_s = (i as f64 + 0.5) * 100.0 / 5.0;
        ensure!((oracle_s - expected[i]).abs() < 1e-12, "oracle mismatch");
        ensure!((s - expected[i]).abs() <= 1e-9, "station {i} at s = {s}");
        ensure!(
            p.distance(Vec3::new(0.0, 0.0, expected[i])) <= 1e-9,
            "coin {i} at {p:?}"
        );
    }
    Ok(format!(
        "{}×{} grid bit-identical; {samples} samples, max |h|/bound {worst_ratio:.3}; stations 10,30,50,70,90 m",
        a.width, a.depth
    ))
}

// ---------------------------------------------------------------- gateway

fn gateway() -> Check {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo");
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_csaf"))
        .args(["run", "--plan", "coin-demo", "--seed", "7", "--out"])
        .arg(&out)
        .env("CSAF_DATA_DIR", dir.path())
        .output()
        .map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure!(
        status.status.success(),
        "demo run failed: {}",
        String::from_utf8_lossy(&status.stderr)
    );
    ensure!(
        elapsed < Duration::from_secs(10),
        "demo run took {elapsed:?}"
    );
    for f in ARTIFACT_FILES {
        let p = out.join(f);
        ensure!(
            p.is_file() && p.metadata().unwrap().len() > 0,
            "missing artifact {f}"
        );
    }

    let rt = tokio::runtime::Runtime::new().unwrap();
    let checked = rt.block_on(mutations(dir.path()))?;
    Ok(format!(
        "demo run {:.2} s with {} artifacts; {checked} mutations verified by GET",
        elapsed.as_secs_f64(),
        ARTIFACT_FILES.len()
    ))
}

async fn mutations(data: &Path) -> Result<usize, String> {
    use reqwest::StatusCode;
    use serde_json::{json, Value as Json};

    let cfg = csaf::gateway::ServeConfig {
        scene: "forest-simple".into(),
        data_dir: data.join("gateway"),
        telemetry_hz: 50.0,
        time_scale: 1.0,
    };
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let base = format!("http://{}", listener.local_addr().unwrap());
    tokio::spawn(csaf::gateway::serve(cfg, listener, std::future::pending()));
    let client = reqwest::Client::new();
    let call = |method: reqwest::Method, path: &str, body: Option<Json>| {
        let mut req = client.request(method, format!("{base}{path}"));
        if let Some(b) = body {
            req = req.json(&b);
        }
        async move {
            let r = req.send().await.map_err(|e| e.to_string())?;
            let status = r.status();
            let body: Json = r.json().await.unwrap_or(Json::Null);
            Ok::<_, String>((status, body))
        }
    };
    let get = |path: &str| call(reqwest::Method::GET, path, None);
    let post = |path: &str, body: Json| call(reqwest::Method::POST, path, Some(body));
    let put = |path: &str, body: Json| call(reqwest::Method::PUT, path, Some(body));
    let mut checked = 0;
    let ok = |s: StatusCode, what: &str| {
        if s.is_success() {
            Ok(())
        } else {
            Err(format!("{what}: {s}"))
        }
    };

    let attachment = |scene: &Json, ty: &str| -> Option<(u64, Json)> {
        scene["entities"].as_array()?.iter().find_map(|e| {
            let a = e["attachments"]
                .as_array()?
                .iter()
                .find(|a| a["type_id"] == ty)?;
            Some((e["id"].as_u64()?, a.clone()))
        })
    };

    // PUT /scene
    let (s, _) = put("/scene", json!({ "name": "forest-complex" })).await?;
    ok(s, "PUT /scene")?;
    let (_, scene) = get("/scene").await?;
    ensure!(
        scene["name"] == "forest-complex",
        "GET /scene after PUT: {}",
        scene["name"]
    );
    checked += 1;

    // toggle
    let (cam, att) = attachment(&scene, "Pixelize").ok_or("no Pixelize")?;
    let want = !att["enabled"].as_bool().unwrap();
    let (s, _) = post(
        &format!("/scene/entities/{cam}/toggle"),
        json!({ "type_id": "Pixelize", "enabled": want }),
    )
    .await?;
    ok(s, "toggle")?;
    let (_, scene) = get("/scene").await?;
    ensure!(
        attachment(&scene, "Pixelize").unwrap().1["enabled"] == want,
        "toggle not visible"
    );
    checked += 1;

    // PUT preset
    let (s, doc) = put(
        "/presets/PathFollow/brisk",
        json!({ "values": { "speed": 7.5 } }),
    )
    .await?;
    ok(s, "PUT preset")?;
    let (s, got) = get("/presets/PathFollow/brisk").await?;
    ensure!(
        s == StatusCode::OK && got == doc,
        "GET preset after PUT differs"
    );
    checked += 1;

    // apply
    let (rig, _) = attachment(&scene, "PathFollow").ok_or("no PathFollow")?;
    let (s, _) = post(
        &format!("/scene/entities/{rig}/apply"),
        json!({ "type_id": "PathFollow", "preset_name": "brisk" }),
    )
    .await?;
    ok(s, "apply")?;
    let (_, scene) = get("/scene").await?;
    ensure!(
        attachment(&scene, "PathFollow").unwrap().1["values"] == doc["values"],
        "apply not visible"
    );
    checked += 1;

    // DELETE preset
    let (s, _) = call(reqwest::Method::DELETE, "/presets/PathFollow/brisk", None).await?;
    ok(s, "DELETE preset")?;
    ensure!(
        get("/presets/PathFollow/brisk").await?.0 == StatusCode::NOT_FOUND,
        "preset still listed"
    );
    checked += 1;

    // session start
    let plan = json!({
        "name": "accept",
        "phases": [{ "kind": "Exposure", "duration": 600.0 }],
        "motion": { "mode": "static" },
        "targets": [{ "id": "t1", "spawn": 0.0 }]
    });
    let (s, _) = post("/session/start", json!({ "plan": plan })).await?;
    ok(s, "start")?;
    let (_, session) = get("/session").await?;
    ensure!(session["status"] == "running", "session not running");
    checked += 1;

    // fms
    let (s, _) = post("/fms", json!({ "rating": 6, "source": "participant" })).await?;
    ok(s, "fms")?;
    let (_, session) = get("/session").await?;
    ensure!(session["fms_ratings"] == json!([6]), "rating not visible");
    ensure!(
        post("/fms", json!({ "rating": 6, "source": "participant" }))
            .await?
            .0
            == StatusCode::CONFLICT,
        "second FMS not refused with 409"
    );
    checked += 1;

    // hit
    let (s, _) = post("/hit", json!({ "target": "t1" })).await?;
    ok(s, "hit")?;
    let (_, session) = get("/session").await?;
    ensure!(
        session["events"]
            .as_array()
            .unwrap()
            .iter()
            .any(|e| e["kind"] == "TargetHit"),
        "hit not visible"
    );
    checked += 1;

    // stop
    let (s, _) = post("/session/stop", json!({})).await?;
    ok(s, "stop")?;
    let (_, session) = get("/session").await?;
    ensure!(session["status"] == "finished", "session not finished");
    let dir = session["artifacts_dir"].as_str().ok_or("no artifacts")?;
    ensure!(
        ARTIFACT_FILES
            .iter()
            .all(|f| Path::new(dir).join(f).is_file()),
        "artifacts missing"
    );
    checked += 1;

    // set start and advance
    let set = json!({
        "nodes": [
            { "id": "a", "scene": "rural" },
            { "id": "b", "scene": "city" }
        ],
        "edges": [{ "from": "a", "to": "b" }],
        "start": "a"
    });
    let (s, _) = post("/session/start", json!({ "set": set })).await?;
    ok(s, "set start")?;
    post("/session/stop", json!({})).await?;
    let (s, _) = post("/set/advance", json!({})).await?;
    ok(s, "advance")?;
    let (_, session) = get("/session").await?;
    let (_, scene) = get("/scene").await?;
    ensure!(
        session["set_node"] == "b" && scene["name"] == "city",
        "advance not visible"
    );
    checked += 1;

    // Reads never mutate.
    let (_, s1) = get("/scene").await?;
    let (_, s2) = get("/scene").await?;
    ensure!(s1 == s2, "GET /scene changed state");
    Ok(checked)
}

// ------------------------------------------------------------------ driver

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("preset round-trip and name-independence", preset_round_trip),
        ("locomotion determinism and kinematics", locomotion),
        ("FOV restrictor", fov),
        ("susceptibility test I schedule", sensitivity),
        ("rod-and-frame test", rft),
        ("session runtime", runtime),
        ("report", report),
        ("terrain and placement", terrain),
        ("gateway", gateway),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let ms = started.elapsed().as_millis();
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail} [{ms} ms]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{ms} ms]");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
