use alloc::vec;

use super::{Category, FieldSpec, Registry, TypeTag};
use crate::math::{Quat, Vec3};

/// Identifiers of the built-in feature types.
pub mod types {
    pub const GAME_HANDLER: &str = "GameHandler";
    pub const DATA_SAVER: &str = "DataSaver";
    pub const SENSITIVITY_TEST: &str = "PersonalSensitivityTest";
    pub const ROD_FRAME_TEST: &str = "RodFrameTest";

    pub const PATH_CREATOR: &str = "PathCreator";
    pub const COLLECTIBLE_PLACER: &str = "CollectiblePlacer";
    pub const TERRAIN_MODIFIER: &str = "TerrainModifier";
    pub const BACKGROUND_MUSIC: &str = "BackgroundMusic";

    pub const CAMERA: &str = "Camera";
    pub const CAMERA_ROTATOR: &str = "CameraRotator";
    pub const REST_FRAMES: &str = "RestFrames";
    pub const REDUCED_FOV: &str = "ReducedFov";
    pub const DEPTH_OF_FIELD: &str = "DepthOfField";
    pub const VISION_SNAPPER: &str = "VisionSnapper";
    pub const COLOR_MANIPULATION: &str = "ColorManipulation";
    pub const PIXELIZE: &str = "Pixelize";

    pub const LOCOMOTION_HANDLER: &str = "LocomotionHandler";
    pub const CONTINUOUS_MOVE: &str = "ContinuousMove";
    pub const TELEPORT: &str = "Teleport";
    pub const GRAB_MOVE: &str = "GrabMove";
    pub const CONTINUOUS_TURN: &str = "ContinuousTurn";
    pub const SNAP_TURN: &str = "SnapTurn";
    pub const PATH_FOLLOW: &str = "PathFollow";
}

/// Registry with every feature the engine ships.
pub fn builtin_registry() -> Registry {
    use types::*;
    let mut r = Registry::with_standard_categories();
    let tags = vec![
        TypeTag::new(
            GAME_HANDLER,
            Category::EXPERIMENT,
            vec![
                FieldSpec::integer("coin_count", 10),
                FieldSpec::real("baseline_duration", "s", 0.0),
                FieldSpec::real("exposure_duration", "s", 1200.0),
                FieldSpec::real("fms_interval", "s", 60.0),
                FieldSpec::integer("fms_min", 0),
                FieldSpec::integer("fms_max", 20),
                FieldSpec::real("pickup_radius", "m", 0.5),
            ],
        ),
        TypeTag::new(
            DATA_SAVER,
            Category::EXPERIMENT,
            vec![FieldSpec::real("log_rate", "Hz", 50.0)],
        ),
        TypeTag::new(
            SENSITIVITY_TEST,
            Category::EXPERIMENT,
            vec![
                FieldSpec::integer("reps_per_axis", 1),
                FieldSpec::real("indicator_duration", "s", 1.0),
                FieldSpec::real("turn_duration", "s", 10.0),
                FieldSpec::real("pause_after_turn", "s", 2.0),
                FieldSpec::real("pause_between_triples", "s", 5.0),
                FieldSpec::boolean("alternate_direction", true),
                FieldSpec::boolean("shuffle_orders", false),
                FieldSpec::boolean("include_translation", false),
                FieldSpec::real("translation_distance", "m", 4.0),
                FieldSpec::real("translation_duration", "s", 4.0),
            ],
        ),
        TypeTag::new(
            ROD_FRAME_TEST,
            Category::EXPERIMENT,
            vec![
                FieldSpec::real("frame_tilt", "deg", 18.0),
                FieldSpec::real("rod_tilt", "deg", 27.0),
                FieldSpec::integer("repetitions_per_permutation", 4),
                FieldSpec::real("rod_step", "deg", 1.0),
            ],
        ),
        TypeTag::new(
            PATH_CREATOR,
            Category::ENVIRONMENT,
            vec![
                FieldSpec::boolean("closed", false),
                FieldSpec::integer("sample_count", 1024),
                FieldSpec::choice("interpolation", &["catmull_rom", "linear"], "catmull_rom"),
            ],
        ),
        TypeTag::new(
            COLLECTIBLE_PLACER,
            Category::ENVIRONMENT,
            vec![
                FieldSpec::integer("count", 10),
                FieldSpec::real("jitter", "m", 0.0),
                FieldSpec::integer("seed", 0),
            ],
        ),
        TypeTag::new(
            TERRAIN_MODIFIER,
            Category::ENVIRONMENT,
            vec![
                FieldSpec::integer("seed", 0),
                FieldSpec::real("cell_size", "m", 1.0),
                FieldSpec::real("amplitude", "m", 4.0),
                FieldSpec::real("frequency", "1/m", 0.02),
                FieldSpec::integer("octaves", 4),
                FieldSpec::real("persistence", "", 0.5),
            ],
        ),
        TypeTag::new(
            BACKGROUND_MUSIC,
            Category::ENVIRONMENT,
            vec![
                FieldSpec::text("intro_track", ""),
                FieldSpec::real("intro_duration", "s", 0.0),
                FieldSpec::text("loop_tracks", "orchestral_calm,retro_upbeat"),
            ],
        ),
        TypeTag::new(
            CAMERA,
            Category::VISION,
            vec![
                FieldSpec::real("field_of_view", "deg", 110.0),
                FieldSpec::real("near_clip", "m", 0.01),
            ],
        ),
        TypeTag::new(
            CAMERA_ROTATOR,
            Category::VISION,
            vec![
                FieldSpec::choice("axis", &["pitch", "roll", "yaw"], "yaw"),
                FieldSpec::real("rate", "deg/s", 36.0),
            ],
        )
        .extending(CAMERA),
        TypeTag::new(
            REST_FRAMES,
            Category::VISION,
            vec![
                FieldSpec::choice("model", &["nose", "hat"], "nose"),
                FieldSpec::vec3("offset", "m", Vec3::new(0.0, -0.045, 0.085)),
                FieldSpec::quat("rotation", Quat::IDENTITY),
            ],
        ),
        TypeTag::new(
            REDUCED_FOV,
            Category::VISION,
            vec![
                FieldSpec::boolean("dynamic", true),
                FieldSpec::real("fov_max", "deg", 110.0),
                FieldSpec::real("fov_min", "deg", 60.0),
                FieldSpec::real("gain", "deg/(m/s)", 20.0),
                FieldSpec::real("rate_limit", "deg/s", 0.2),
                FieldSpec::real("angular_gain", "deg/(deg/s)", 0.0),
            ],
        ),
        TypeTag::new(
            DEPTH_OF_FIELD,
            Category::VISION,
            vec![
                FieldSpec::boolean("dynamic", false),
                FieldSpec::real("focus_distance", "m", 2.0),
                FieldSpec::real("max_blur", "", 1.0),
                FieldSpec::real("probe_depth", "m", 4.0),
                FieldSpec::real("speed_gain", "1/(m/s)", 1.0),
            ],
        ),
        TypeTag::new(
            VISION_SNAPPER,
            Category::VISION,
            vec![
                FieldSpec::real("omega_threshold", "deg/s", 60.0),
                FieldSpec::real("fade_out", "s", 0.1),
                FieldSpec::real("hold", "s", 0.1),
                FieldSpec::real("fade_in", "s", 0.2),
            ],
        ),
        TypeTag::new(
            COLOR_MANIPULATION,
            Category::VISION,
            vec![
                FieldSpec::real("hue_delta_r", "deg", 0.0),
                FieldSpec::real("hue_delta_g", "deg", 0.0),
                FieldSpec::real("hue_delta_b", "deg", 0.0),
                FieldSpec::real("hue_delta_w", "deg", 0.0),
                FieldSpec::real("saturation_delta", "", -0.3),
                FieldSpec::real("contrast_delta", "", -0.2),
                FieldSpec::real("k_lin", "1/(m/s2)", 0.5),
                FieldSpec::real("k_rot", "1/(deg/s2)", 0.01),
            ],
        ),
        TypeTag::new(
            PIXELIZE,
            Category::VISION,
            vec![FieldSpec::integer("screen_height", 270)],
        ),
        TypeTag::new(LOCOMOTION_HANDLER, Category::LOCOMOTION, vec![]),
        TypeTag::new(
            CONTINUOUS_MOVE,
            Category::LOCOMOTION,
            vec![
                FieldSpec::real("speed", "m/s", 2.0),
                FieldSpec::boolean("head_relative", true),
            ],
        )
        .extending(LOCOMOTION_HANDLER),
        TypeTag::new(
            TELEPORT,
            Category::LOCOMOTION,
            vec![
                FieldSpec::real("threshold", "", 0.7),
                FieldSpec::real("max_distance", "m", 20.0),
            ],
        )
        .extending(LOCOMOTION_HANDLER),
        TypeTag::new(
            GRAB_MOVE,
            Category::LOCOMOTION,
            vec![FieldSpec::real("gain", "", 1.0)],
        )
        .extending(LOCOMOTION_HANDLER),
        TypeTag::new(
            CONTINUOUS_TURN,
            Category::LOCOMOTION,
            vec![FieldSpec::real("rate", "deg/s", 90.0)],
        )
        .extending(LOCOMOTION_HANDLER),
        TypeTag::new(
            SNAP_TURN,
            Category::LOCOMOTION,
            vec![
                FieldSpec::real("angle", "deg", 30.0),
                FieldSpec::real("threshold", "", 0.7),
            ],
        )
        .extending(LOCOMOTION_HANDLER),
        TypeTag::new(
            PATH_FOLLOW,
            Category::LOCOMOTION,
            vec![
                FieldSpec::real("speed", "m/s", 5.0),
                FieldSpec::text("path", "main"),
            ],
        )
        .extending(LOCOMOTION_HANDLER),
    ];
    for t in tags {
        r.register_type(t).expect("built-in types are consistent");
    }
    r
}
