//! Experiment configuration: JSON config files, flag strings, and the resolved
//! values commands run with.

use std::path::Path;

use esr_core::quantum::{Matrix4, C};
use esr_core::{ChshSetting, DensityState, Direction};
use serde::{Deserialize, Serialize};

use crate::UsageError;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_TRIALS: u64 = 1_000_000;
pub const DEFAULT_BOUND_STEP: f64 = 1.0;
pub const DEFAULT_SCAN_STEP: f64 = 45.0;
pub const DEFAULT_MODEL: &str = "gisin-gisin";

type Usage<T> = Result<T, UsageError>;

fn usage<T>(msg: impl Into<String>) -> Usage<T> {
    Err(UsageError(msg.into()))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Complex matrix entry, written as a number or as `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Entry {
    Real(f64),
    Complex([f64; 2]),
}

impl Entry {
    fn value(self) -> C<f64> {
        match self {
            Entry::Real(re) => C::new(re, 0.0),
            Entry::Complex([re, im]) => C::new(re, im),
        }
    }
}

/// `"singlet"`, `"maximally-mixed"`, `"werner:<v>"`, or an explicit 4×4 matrix
/// in the basis `++, +-, -+, --`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSpec {
    Named(String),
    Matrix(Vec<Vec<Entry>>),
}

impl StateSpec {
    pub fn parse(s: &str) -> Usage<Self> {
        let s = s.trim();
        if s.starts_with('[') {
            serde_json::from_str(s).map_err(|e| UsageError(format!("state matrix is not valid JSON: {e}")))
        } else {
            Ok(StateSpec::Named(s.to_string()))
        }
    }

    pub fn build(&self) -> Usage<DensityState> {
        match self {
            StateSpec::Named(name) => match name.as_str() {
                "singlet" => Ok(DensityState::singlet()),
                "maximally-mixed" => Ok(DensityState::maximally_mixed()),
                other => match other.strip_prefix("werner:") {
                    Some(v) => {
                        let v: f64 =
                            v.trim().parse().map_err(|_| UsageError(format!("bad visibility in '{other}'")))?;
                        DensityState::werner(v).map_err(|e| UsageError(e.to_string()))
                    }
                    None => usage(format!(
                        "unknown state '{other}', expected singlet, maximally-mixed, werner:<v> or a 4x4 matrix"
                    )),
                },
            },
            StateSpec::Matrix(rows) => {
                if rows.len() != 4 || rows.iter().any(|r| r.len() != 4) {
                    return usage("state matrix must be 4x4");
                }
                let mut m = Matrix4::zero();
                for (i, row) in rows.iter().enumerate() {
                    for (j, e) in row.iter().enumerate() {
                        m.0[i][j] = e.value();
                    }
                }
                DensityState::new(m, "custom").map_err(|e| UsageError(e.to_string()))
            }
        }
    }
}

/// `"tsirelson"`, four coplanar angles in degrees, or four unit vectors, in the
/// order `a, a', b, b'`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AngleSpec {
    Named(String),
    Degrees([f64; 4]),
    Vectors([[f64; 3]; 4]),
}

fn numbers(s: &str) -> Usage<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| UsageError(format!("'{x}' is not a number")))).collect()
}

fn unit(v: [f64; 3]) -> Usage<Direction> {
    Direction::new(v[0], v[1], v[2]).map_err(|e| UsageError(e.to_string()))
}

impl AngleSpec {
    /// `tsirelson`, `a,a',b,b'` in degrees, or `x,y,z;x,y,z;x,y,z;x,y,z`.
    pub fn parse(s: &str) -> Usage<Self> {
        let s = s.trim();
        if s.contains(';') {
            let parts: Vec<_> = s.split(';').map(numbers).collect::<Usage<_>>()?;
            if parts.len() != 4 || parts.iter().any(|p| p.len() != 3) {
                return usage("direction angles need four x,y,z vectors separated by ';'");
            }
            let v = |i: usize| [parts[i][0], parts[i][1], parts[i][2]];
            return Ok(AngleSpec::Vectors([v(0), v(1), v(2), v(3)]));
        }
        if s.starts_with(|c: char| c.is_ascii_alphabetic()) {
            return Ok(AngleSpec::Named(s.to_string()));
        }
        match numbers(s)?.as_slice() {
            &[a, ap, b, bp] => Ok(AngleSpec::Degrees([a, ap, b, bp])),
            other => usage(format!("expected four angles, got {}", other.len())),
        }
    }

    /// The setting and, when coplanar angles were given, those angles in degrees.
    pub fn setting(&self) -> Usage<(ChshSetting, Option<[f64; 4]>)> {
        match self {
            AngleSpec::Named(name) if name == "tsirelson" => {
                let deg = [0.0, 90.0, 45.0, 135.0];
                Ok((ChshSetting::coplanar_degrees(deg), Some(deg)))
            }
            AngleSpec::Named(other) => usage(format!("unknown angle preset '{other}', expected tsirelson")),
            AngleSpec::Degrees(deg) => {
                if deg.iter().any(|d| !d.is_finite()) {
                    return usage("angles must be finite");
                }
                Ok((ChshSetting::coplanar_degrees(*deg), Some(*deg)))
            }
            AngleSpec::Vectors(v) => Ok((ChshSetting::new(unit(v[0])?, unit(v[1])?, unit(v[2])?, unit(v[3])?), None)),
        }
    }
}

/// `"x"`, `"-z"`, …, an angle in degrees in the x–z plane, or a unit vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DirectionSpec {
    Degrees(f64),
    Vector([f64; 3]),
    Named(String),
}

impl DirectionSpec {
    pub fn parse(s: &str) -> Usage<Self> {
        let s = s.trim();
        if s.starts_with(|c: char| c.is_ascii_alphabetic())
            || s.starts_with("-x")
            || s.starts_with("-y")
            || s.starts_with("-z")
        {
            return Ok(DirectionSpec::Named(s.to_string()));
        }
        match *numbers(s)?.as_slice() {
            [d] => Ok(DirectionSpec::Degrees(d)),
            [x, y, z] => Ok(DirectionSpec::Vector([x, y, z])),
            _ => usage(format!("'{s}' is not a direction: use x, y, z, an angle in degrees, or x,y,z")),
        }
    }

    pub fn build(&self) -> Usage<Direction> {
        match self {
            DirectionSpec::Degrees(d) if d.is_finite() => Ok(Direction::in_plane_degrees(*d)),
            DirectionSpec::Degrees(_) => usage("direction angle must be finite"),
            DirectionSpec::Vector(v) => unit(*v),
            DirectionSpec::Named(name) => {
                let (neg, axis) = match name.strip_prefix('-') {
                    Some(rest) => (true, rest),
                    None => (false, name.strip_prefix('+').unwrap_or(name)),
                };
                let d = match axis {
                    "x" => Direction::x_axis(),
                    "y" => Direction::y_axis(),
                    "z" => Direction::z_axis(),
                    _ => return usage(format!("unknown direction '{name}'")),
                };
                Ok(if neg { d.neg() } else { d })
            }
        }
    }
}

/// One value, or one per role, plus an optional apparatus factor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DetectionSpec {
    Uniform(f64),
    Values(Vec<f64>),
    Full {
        pd: Box<DetectionSpec>,
        #[serde(default)]
        apparatus_factor: Option<f64>,
    },
}

impl DetectionSpec {
    pub fn parse(s: &str) -> Usage<Self> {
        match numbers(s)?.as_slice() {
            &[p] => Ok(DetectionSpec::Uniform(p)),
            v => Ok(DetectionSpec::Values(v.to_vec())),
        }
    }

    fn values(&self) -> Vec<f64> {
        match self {
            DetectionSpec::Uniform(p) => vec![*p],
            DetectionSpec::Values(v) => v.clone(),
            DetectionSpec::Full { pd, .. } => pd.values(),
        }
    }

    pub fn factor(&self) -> Option<f64> {
        match self {
            DetectionSpec::Full { apparatus_factor, .. } => *apparatus_factor,
            _ => None,
        }
    }
}

fn check_unit(p: f64, what: &str) -> Usage<f64> {
    if p.is_finite() && (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        usage(format!("{what} must lie in [0, 1], got {p}"))
    }
}

/// Contents of a `--config` file. Every field is optional; flags take precedence.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub state: Option<StateSpec>,
    pub angles: Option<AngleSpec>,
    pub detection: Option<DetectionSpec>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub format: Option<Format>,
    pub grid_step: Option<f64>,
    pub model: Option<String>,
    pub workers: Option<usize>,
    pub a: Option<DirectionSpec>,
    pub b: Option<DirectionSpec>,
    pub a0: Option<f64>,
    pub b0: Option<f64>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Usage<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())))
    }

    /// Fills every field that `self` leaves unset from `base`.
    pub fn or(self, base: ExperimentConfig) -> Self {
        Self {
            state: self.state.or(base.state),
            angles: self.angles.or(base.angles),
            detection: self.detection.or(base.detection),
            trials: self.trials.or(base.trials),
            seed: self.seed.or(base.seed),
            format: self.format.or(base.format),
            grid_step: self.grid_step.or(base.grid_step),
            model: self.model.or(base.model),
            workers: self.workers.or(base.workers),
            a: self.a.or(base.a),
            b: self.b.or(base.b),
            a0: self.a0.or(base.a0),
            b0: self.b0.or(base.b0),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn workers(&self) -> Usage<Option<usize>> {
        match self.workers {
            Some(0) => usage("workers must be at least 1"),
            w => Ok(w),
        }
    }

    pub fn state(&self) -> Usage<DensityState> {
        self.state.clone().unwrap_or_else(|| StateSpec::Named("singlet".into())).build()
    }

    pub fn setting(&self) -> Usage<(ChshSetting, Option<[f64; 4]>)> {
        self.angles.clone().unwrap_or_else(|| AngleSpec::Named("tsirelson".into())).setting()
    }

    /// Grid step in degrees, in `(0, 90]`.
    pub fn grid_step(&self, default: f64) -> Usage<f64> {
        let step = self.grid_step.unwrap_or(default);
        if !step.is_finite() || step <= 0.0 || step > 90.0 {
            return usage(format!("grid step must lie in (0, 90] degrees, got {step}"));
        }
        Ok(step)
    }

    pub fn trials(&self) -> Usage<u64> {
        match self.trials.unwrap_or(DEFAULT_TRIALS) {
            0 => usage("trials must be at least 1"),
            n => Ok(n),
        }
    }

    pub fn model(&self) -> &str {
        self.model.as_deref().unwrap_or(DEFAULT_MODEL)
    }

    pub fn apparatus_factor(&self) -> Usage<f64> {
        check_unit(self.detection.as_ref().and_then(DetectionSpec::factor).unwrap_or(1.0), "apparatus factor")
    }

    /// Stored detection probabilities, one or `n` of them, checked and expanded
    /// to `n` values.
    pub fn detection(&self, n: usize) -> Usage<Vec<f64>> {
        let values = self.detection.as_ref().map(DetectionSpec::values).unwrap_or_else(|| vec![1.0]);
        let values = match values.len() {
            1 => vec![values[0]; n],
            len if len == n => values,
            len => return usage(format!("expected 1 or {n} detection probabilities, got {len}")),
        };
        values.into_iter().map(|p| check_unit(p, "detection probability")).collect()
    }

    pub fn direction_a(&self) -> Usage<Direction> {
        self.a.clone().unwrap_or(DirectionSpec::Named("z".into())).build()
    }

    pub fn direction_b(&self) -> Usage<Direction> {
        self.b.clone().unwrap_or(DirectionSpec::Named("z".into())).build()
    }
}
