//! Procedural environment: paths, collectible placement, terrain and the
//! background-music timeline.

mod path;
mod terrain;

use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use path::{build_path, Interpolation, PathSample, PathSpec, PathTable};
pub use terrain::{
    fractal_height, generate_terrain, terrain_height, Heightmap, Perlin, TerrainSpec,
};

use crate::math::{Pose, Vec3};
use crate::registry::SceneEntity;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EnvError {
    #[error("path needs at least {required} control points, got {found}")]
    TooFewPoints { found: usize, required: usize },
    #[error("control point {0} duplicates its predecessor")]
    DuplicatePoint(usize),
    #[error("invalid spec: {0}")]
    InvalidSpec(&'static str),
    #[error("arc length {s} outside [0, {length}]")]
    OutOfRange { s: f64, length: f64 },
    #[error("({x}, {z}) lies outside the terrain")]
    OutOfExtent { x: f64, z: f64 },
    #[error("jitter must be non-negative")]
    NegativeJitter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectibleSet {
    pub positions: Vec<Vec3>,
    /// Arc length of each collectible's station.
    pub stations: Vec<f64>,
    pub seed: u64,
    pub jitter: f64,
}

/// Places `n` collectibles at centered stations `(i + 0.5) * L / n`, each
/// shifted sideways (horizontal normal of the path) by a seeded uniform
/// offset in `[-jitter, jitter]`.
pub fn place_collectibles(
    table: &PathTable,
    n: usize,
    seed: u64,
    jitter: f64,
) -> Result<CollectibleSet, EnvError> {
    if jitter.is_nan() || jitter < 0.0 {
        return Err(EnvError::NegativeJitter);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spacing = table.total_length / n.max(1) as f64;
    let mut positions = Vec::with_capacity(n);
    let mut stations = Vec::with_capacity(n);
    for i in 0..n {
        let s = (i as f64 + 0.5) * spacing;
        let (p, tangent) = table.pose_at(s)?;
        let lateral = Vec3::Y.cross(tangent).normalized().unwrap_or(Vec3::X);
        let offset = if jitter > 0.0 {
            rng.gen_range(-jitter..=jitter)
        } else {
            0.0
        };
        stations.push(s);
        positions.push(p + lateral * offset);
    }
    Ok(CollectibleSet {
        positions,
        stations,
        seed,
        jitter,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntroTrack {
    pub id: String,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopTrack {
    pub id: String,
    pub duration: f64,
    pub bpm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MusicTimeline {
    #[serde(default)]
    pub intro: Option<IntroTrack>,
    #[serde(default)]
    pub loop_tracks: Vec<LoopTrack>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackStart {
    pub start: f64,
    pub track: String,
}

impl MusicTimeline {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(EnvError::InvalidSpec("music horizon must be non-negative"));
        }
        let intro_ok = self.intro.as_ref().is_none_or(|t| t.duration > 0.0);
        if !intro_ok
            || self
                .loop_tracks
                .iter()
                .any(|t| t.duration.is_nan() || t.duration <= 0.0)
        {
            return Err(EnvError::InvalidSpec("track durations must be positive"));
        }
        Ok(())
    }
}

/// Intro once at t = 0, then the loop tracks cycled in listed order; every
/// track starting before the horizon is listed.
pub fn playlist_schedule(timeline: &MusicTimeline) -> Result<Vec<TrackStart>, EnvError> {
    timeline.validate()?;
    let mut out = Vec::new();
    let mut t = 0.0;
    if let Some(intro) = &timeline.intro {
        if t < timeline.horizon {
            out.push(TrackStart {
                start: t,
                track: intro.id.clone(),
            });
        }
        t += intro.duration;
    }
    if timeline.loop_tracks.is_empty() {
        return Ok(out);
    }
    for track in timeline.loop_tracks.iter().cycle() {
        if t >= timeline.horizon {
            break;
        }
        out.push(TrackStart {
            start: t,
            track: track.id.clone(),
        });
        t += track.duration;
    }
    Ok(out)
}

/// Collectible layout requested by a scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollectibleSpec {
    #[serde(default)]
    pub jitter: f64,
}

/// Declarative scene: terrain, path, collectibles, music and entities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneDescription {
    pub name: String,
    #[serde(default)]
    pub theme: String,
    #[serde(default)]
    pub terrain: Option<TerrainSpec>,
    #[serde(default)]
    pub path: Option<PathSpec>,
    #[serde(default)]
    pub collectibles: Option<CollectibleSpec>,
    #[serde(default)]
    pub music: Option<MusicTimeline>,
    #[serde(default)]
    pub entities: Vec<SceneEntity>,
    #[serde(default)]
    pub spawn: Pose,
    /// Height of the flat floor used for teleport targets when there is no terrain.
    #[serde(default)]
    pub floor_height: f64,
}

impl SceneDescription {
    pub fn empty(name: &str) -> Self {
        SceneDescription {
            name: name.into(),
            theme: String::new(),
            terrain: None,
            path: None,
            collectibles: None,
            music: None,
            entities: Vec::new(),
            spawn: Pose::IDENTITY,
            floor_height: 0.0,
        }
    }
}
