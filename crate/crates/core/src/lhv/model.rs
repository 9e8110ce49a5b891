use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::quantum::{random_direction, Direction};
use crate::{Error, Result};

/// One microstate: a point `λ` on the unit sphere plus one auxiliary uniform
/// coordinate per side that decides detection.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HiddenVariable {
    pub lambda: Direction<f64>,
    pub u_a: f64,
    pub u_b: f64,
}

impl HiddenVariable {
    pub fn new(lambda: Direction<f64>, u_a: f64, u_b: f64) -> Result<Self> {
        for (name, u) in [("u_a", u_a), ("u_b", u_b)] {
            if !(0.0..1.0).contains(&u) {
                return Err(Error::InvalidInput(format!("{name} = {u} is outside [0, 1)")));
            }
        }
        Ok(Self { lambda, u_a, u_b })
    }

    /// Draws `λ` uniformly on the sphere (`z = 2u - 1`, `φ = 2πu'`) and then the
    /// two auxiliary coordinates, consuming exactly four uniforms.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let z = 2.0 * rng.gen::<f64>() - 1.0;
        let phi = std::f64::consts::TAU * rng.gen::<f64>();
        let lambda = Direction::from_polar_unchecked(z, phi);
        Self { lambda, u_a: rng.gen(), u_b: rng.gen() }
    }
}

/// Distribution of hidden variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum Sampler {
    /// `λ` uniform on the sphere, `u_a`, `u_b` independent uniforms on `[0, 1)`.
    #[default]
    UniformSphere,
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> HiddenVariable {
        match self {
            Sampler::UniformSphere => HiddenVariable::sample(rng),
        }
    }
}

/// Single-side measurement result; `NoRegistration` is the outcome `0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum MicroOutcome {
    Minus,
    NoRegistration,
    Plus,
}

impl MicroOutcome {
    pub fn from_sign(x: f64) -> Self {
        if x < 0.0 {
            MicroOutcome::Minus
        } else {
            MicroOutcome::Plus
        }
    }

    pub fn value(self) -> i8 {
        match self {
            MicroOutcome::Minus => -1,
            MicroOutcome::NoRegistration => 0,
            MicroOutcome::Plus => 1,
        }
    }

    /// Position in the `(-1, 0, +1)` ordering used by tallies.
    pub fn index(self) -> usize {
        (self.value() + 1) as usize
    }

    pub fn flipped(self) -> Self {
        match self {
            MicroOutcome::Minus => MicroOutcome::Plus,
            MicroOutcome::NoRegistration => MicroOutcome::NoRegistration,
            MicroOutcome::Plus => MicroOutcome::Minus,
        }
    }
}

pub type PropertyFn = Arc<dyn Fn(&HiddenVariable, &Direction<f64>) -> MicroOutcome + Send + Sync>;
pub type DetectFn = Arc<dyn Fn(&HiddenVariable, &Direction<f64>) -> bool + Send + Sync>;

/// Local response rule for one side: the microscopic property the object
/// possesses for a direction, and whether it is detected there.
#[derive(Clone)]
pub struct SideRule {
    property: PropertyFn,
    detect: DetectFn,
}

impl SideRule {
    /// `property` must return `Plus` or `Minus`.
    pub fn new<P, D>(property: P, detect: D) -> Self
    where
        P: Fn(&HiddenVariable, &Direction<f64>) -> MicroOutcome + Send + Sync + 'static,
        D: Fn(&HiddenVariable, &Direction<f64>) -> bool + Send + Sync + 'static,
    {
        Self { property: Arc::new(property), detect: Arc::new(detect) }
    }

    pub fn property(&self, h: &HiddenVariable, dir: &Direction<f64>) -> MicroOutcome {
        match (self.property)(h, dir) {
            MicroOutcome::NoRegistration => MicroOutcome::Plus,
            s => s,
        }
    }

    pub fn detected(&self, h: &HiddenVariable, dir: &Direction<f64>) -> bool {
        (self.detect)(h, dir)
    }

    /// The property if detected, otherwise the no-registration outcome.
    pub fn respond(&self, h: &HiddenVariable, dir: &Direction<f64>) -> MicroOutcome {
        if self.detected(h, dir) {
            self.property(h, dir)
        } else {
            MicroOutcome::NoRegistration
        }
    }
}

/// Deterministic local hidden-variable model. Side A's rule only ever sees the
/// direction measured on A, side B's only the direction measured on B.
#[derive(Clone)]
pub struct MicrostateModel {
    name: String,
    sampler: Sampler,
    side_a: SideRule,
    side_b: SideRule,
}

impl fmt::Debug for MicrostateModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MicrostateModel")
            .field("name", &self.name)
            .field("sampler", &self.sampler)
            .finish_non_exhaustive()
    }
}

impl MicrostateModel {
    pub fn new(name: impl Into<String>, side_a: SideRule, side_b: SideRule) -> Self {
        Self { name: name.into(), sampler: Sampler::UniformSphere, side_a, side_b }
    }

    pub fn with_sampler(mut self, sampler: Sampler) -> Self {
        self.sampler = sampler;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sampler(&self) -> Sampler {
        self.sampler
    }

    pub fn side_a(&self) -> &SideRule {
        &self.side_a
    }

    pub fn side_b(&self) -> &SideRule {
        &self.side_b
    }

    pub fn respond_a(&self, h: &HiddenVariable, a: &Direction<f64>) -> MicroOutcome {
        self.side_a.respond(h, a)
    }

    pub fn respond_b(&self, h: &HiddenVariable, b: &Direction<f64>) -> MicroOutcome {
        self.side_b.respond(h, b)
    }
}

/// Reference model whose doubly-detected statistics reproduce the singlet.
///
/// A possesses `sign(a·λ)` and is detected iff `u_a < |a·λ|`; B possesses
/// `-sign(b·λ)` and is always detected.
pub fn gisin_gisin_model() -> MicrostateModel {
    MicrostateModel::new(
        "gisin-gisin",
        SideRule::new(|h, a| MicroOutcome::from_sign(a.dot(&h.lambda)), |h, a| h.u_a < a.dot(&h.lambda).abs()),
        SideRule::new(|h, b| MicroOutcome::from_sign(-b.dot(&h.lambda)), |_, _| true),
    )
}

/// `A = sign(a·λ)`, `B = -sign(b·λ)`, both always detected.
pub fn always_detect_model() -> MicrostateModel {
    MicrostateModel::new(
        "always-detect",
        SideRule::new(|h, a| MicroOutcome::from_sign(a.dot(&h.lambda)), |_, _| true),
        SideRule::new(|h, b| MicroOutcome::from_sign(-b.dot(&h.lambda)), |_, _| true),
    )
}

/// Both sides always detected with outcome `+1`.
pub fn constant_model() -> MicrostateModel {
    let rule = SideRule::new(|_, _| MicroOutcome::Plus, |_, _| true);
    MicrostateModel::new("constant", rule.clone(), rule)
}

/// Names accepted by [`model_by_name`].
pub const MODEL_NAMES: [&str; 3] = ["gisin-gisin", "always-detect", "constant"];

pub fn model_by_name(name: &str) -> Result<MicrostateModel> {
    match name {
        "gisin-gisin" => Ok(gisin_gisin_model()),
        "always-detect" => Ok(always_detect_model()),
        "constant" => Ok(constant_model()),
        other => {
            Err(Error::InvalidInput(format!("unknown model '{other}', expected one of {}", MODEL_NAMES.join(", "))))
        }
    }
}

fn random_side(rng: &mut ChaCha8Rng, use_u_a: bool) -> SideRule {
    // Property: sign of a tilted, shifted projection, optionally flipped.
    let tilt: Direction<f64> = random_direction(rng);
    let weight = rng.gen_range(0.0..1.0);
    let shift = rng.gen_range(-0.5..0.5);
    let flip = rng.gen_bool(0.5);
    let property = move |h: &HiddenVariable, d: &Direction<f64>| {
        let [x, y, z] = d.components();
        let [tx, ty, tz] = tilt.components();
        let v = [x + weight * tx, y + weight * ty, z + weight * tz];
        let [lx, ly, lz] = h.lambda.components();
        let s = MicroOutcome::from_sign(v[0] * lx + v[1] * ly + v[2] * lz - shift);
        if flip {
            s.flipped()
        } else {
            s
        }
    };
    let u = move |h: &HiddenVariable| if use_u_a { h.u_a } else { h.u_b };
    let detect: DetectFn = match rng.gen_range(0..4) {
        0 => Arc::new(|_, _| true),
        1 => {
            let q = rng.gen_range(0.1..1.0);
            Arc::new(move |h, _| u(h) < q)
        }
        2 => {
            let k = rng.gen_range(0.5..2.0);
            Arc::new(move |h, d| u(h) < d.dot(&h.lambda).abs().powf(k))
        }
        _ => {
            let m: Direction<f64> = random_direction(rng);
            Arc::new(move |h, _| u(h) < m.dot(&h.lambda).abs())
        }
    };
    SideRule { property: Arc::new(property), detect }
}

/// Random deterministic local model built from thresholded projections of `λ`
/// and a randomly chosen detection rule per side. Equal seeds give equal models.
pub fn random_local_model(seed: u64) -> MicrostateModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = random_side(&mut rng, true);
    let b = random_side(&mut rng, false);
    MicrostateModel::new(format!("random-{seed}"), a, b)
}
