//! Reproducible Monte Carlo experiments.
//!
//! Trials are split into chunks of [`CHUNK_TRIALS`]. Chunk `c` draws from a
//! `ChaCha8Rng` seeded with the experiment seed and switched to stream `c`, so
//! every trial's hidden variable depends only on `(seed, trial index)`. Chunk
//! tallies are integer counts and merge exactly in any order, which makes the
//! result independent of the number of worker threads.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::model::{MicroOutcome, MicrostateModel};
use crate::bchsh::{modified_chsh_value, standard_chsh_lhs, ChshSetting};
use crate::quantum::Direction;
use crate::{Error, Result};

pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Monte Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self { value, std_error }
    }

    /// Whether `target` lies within `k` standard errors. A zero standard error
    /// still admits roundoff.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error + 1e-12
    }

    fn proportion(hits: u64, n: u64) -> Self {
        let p = hits as f64 / n as f64;
        Self::new(p, (p * (1.0 - p) / n as f64).sqrt())
    }
}

/// Counts for one pair of directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SettingTally {
    pub a: Direction<f64>,
    pub b: Direction<f64>,
    /// `responses[i][j]`: A gave outcome `i - 1`, B gave `j - 1`.
    pub responses: [[u64; 3]; 3],
    /// `properties[i][j]`: A possessed `-1` (`i = 0`) or `+1` (`i = 1`), same for B.
    pub properties: [[u64; 2]; 2],
}

fn property_index(o: MicroOutcome) -> usize {
    usize::from(o == MicroOutcome::Plus)
}

fn sign_index(s: i8) -> Result<usize> {
    match s {
        -1 => Ok(0),
        1 => Ok(1),
        _ => Err(Error::InvalidInput(format!("expected a sign of ±1, got {s}"))),
    }
}

impl SettingTally {
    pub fn new(a: Direction<f64>, b: Direction<f64>) -> Self {
        Self { a, b, responses: [[0; 3]; 3], properties: [[0; 2]; 2] }
    }

    pub fn merge(&mut self, other: &Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.responses[i][j] += other.responses[i][j];
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                self.properties[i][j] += other.properties[i][j];
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.responses.iter().flatten().sum()
    }

    pub fn both_detected(&self) -> u64 {
        [0, 2].iter().flat_map(|&i| [0, 2].map(|j| self.responses[i][j])).sum()
    }

    pub fn detection_a(&self) -> Estimate {
        let hits: u64 = [0, 2].iter().map(|&i| self.responses[i].iter().sum::<u64>()).sum();
        Estimate::proportion(hits, self.total())
    }

    pub fn detection_b(&self) -> Estimate {
        let hits: u64 = self.responses.iter().map(|row| row[0] + row[2]).sum();
        Estimate::proportion(hits, self.total())
    }

    /// Mean of `A·B` over all trials, no-registration outcomes counting as 0.
    pub fn micro_correlation(&self) -> Estimate {
        let n = self.total() as f64;
        let same = (self.responses[0][0] + self.responses[2][2]) as f64;
        let diff = (self.responses[0][2] + self.responses[2][0]) as f64;
        let mean = (same - diff) / n;
        let second = (same + diff) / n;
        Estimate::new(mean, ((second - mean * mean).max(0.0) / n).sqrt())
    }

    /// Mean of `A·B` over doubly-detected trials, with error `√((1 - E²)/n_d)`.
    pub fn conditional_correlation(&self) -> Result<Estimate> {
        let nd = self.both_detected();
        if nd == 0 {
            return Err(Error::UndefinedConditional(0.0));
        }
        let same = (self.responses[0][0] + self.responses[2][2]) as f64;
        let diff = (self.responses[0][2] + self.responses[2][0]) as f64;
        let e = (same - diff) / nd as f64;
        Ok(Estimate::new(e, ((1.0 - e * e).max(0.0) / nd as f64).sqrt()))
    }

    /// Fraction of all trials whose possessed properties are `(sa, sb)`.
    pub fn property_pair_frequency(&self, sa: i8, sb: i8) -> Result<Estimate> {
        let hits = self.properties[sign_index(sa)?][sign_index(sb)?];
        Ok(Estimate::proportion(hits, self.total()))
    }

    /// Fraction of doubly-detected trials whose outcomes are `(sa, sb)`.
    pub fn detected_pair_frequency(&self, sa: i8, sb: i8) -> Result<Estimate> {
        let (i, j) = (2 * sign_index(sa)?, 2 * sign_index(sb)?);
        let nd = self.both_detected();
        if nd == 0 {
            return Err(Error::UndefinedConditional(0.0));
        }
        Ok(Estimate::proportion(self.responses[i][j], nd))
    }

    /// Mean of A's possessed property over all trials.
    pub fn property_mean_a(&self) -> Estimate {
        let n = self.total() as f64;
        let plus = (self.properties[1][0] + self.properties[1][1]) as f64;
        let mean = 2.0 * plus / n - 1.0;
        Estimate::new(mean, ((1.0 - mean * mean).max(0.0) / n).sqrt())
    }

    /// Mean of A's registered outcome over trials where A was detected.
    pub fn conditional_mean_a(&self) -> Result<Estimate> {
        let minus: u64 = self.responses[0].iter().sum();
        let plus: u64 = self.responses[2].iter().sum();
        let nd = minus + plus;
        if nd == 0 {
            return Err(Error::UndefinedConditional(0.0));
        }
        let mean = (plus as f64 - minus as f64) / nd as f64;
        Ok(Estimate::new(mean, ((1.0 - mean * mean).max(0.0) / nd as f64).sqrt()))
    }
}

/// Merged tallies of one experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub model: String,
    pub seed: u64,
    pub n_trials: u64,
    pub settings: Vec<SettingTally>,
}

impl SimulationSummary {
    fn empty(model: &MicrostateModel, settings: &[(Direction<f64>, Direction<f64>)], n_trials: u64, seed: u64) -> Self {
        Self {
            model: model.name().to_string(),
            seed,
            n_trials,
            settings: settings.iter().map(|(a, b)| SettingTally::new(*a, *b)).collect(),
        }
    }

    fn merge(mut self, other: Self) -> Self {
        for (mine, theirs) in self.settings.iter_mut().zip(&other.settings) {
            mine.merge(theirs);
        }
        self
    }
}

fn run_chunk(
    model: &MicrostateModel,
    settings: &[(Direction<f64>, Direction<f64>)],
    seed: u64,
    chunk: u64,
    trials: u64,
) -> Vec<SettingTally> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut tallies: Vec<SettingTally> = settings.iter().map(|(a, b)| SettingTally::new(*a, *b)).collect();
    let (side_a, side_b) = (model.side_a(), model.side_b());
    for _ in 0..trials {
        let h = model.sampler().sample(&mut rng);
        for t in tallies.iter_mut() {
            let pa = side_a.property(&h, &t.a);
            let pb = side_b.property(&h, &t.b);
            let ra = if side_a.detected(&h, &t.a) { pa } else { MicroOutcome::NoRegistration };
            let rb = if side_b.detected(&h, &t.b) { pb } else { MicroOutcome::NoRegistration };
            t.responses[ra.index()][rb.index()] += 1;
            t.properties[property_index(pa)][property_index(pb)] += 1;
        }
    }
    tallies
}

/// Runs `n_trials` trials, evaluating every setting on each trial's hidden
/// variable, on the current rayon pool.
pub fn run_experiment(
    model: &MicrostateModel,
    settings: &[(Direction<f64>, Direction<f64>)],
    n_trials: u64,
    seed: u64,
) -> Result<SimulationSummary> {
    if n_trials == 0 {
        return Err(Error::InvalidInput("n_trials must be at least 1".to_string()));
    }
    if settings.is_empty() {
        return Err(Error::InvalidInput("no settings to simulate".to_string()));
    }
    let chunks = n_trials.div_ceil(CHUNK_TRIALS);
    let empty = || SimulationSummary::empty(model, settings, n_trials, seed);
    Ok((0..chunks)
        .into_par_iter()
        .map(|c| {
            let trials = CHUNK_TRIALS.min(n_trials - c * CHUNK_TRIALS);
            let mut s = empty();
            s.settings = run_chunk(model, settings, seed, c, trials);
            s
        })
        .reduce(empty, SimulationSummary::merge))
}

/// [`run_experiment`] on a dedicated pool of `workers` threads.
pub fn run_experiment_with_workers(
    model: &MicrostateModel,
    settings: &[(Direction<f64>, Direction<f64>)],
    n_trials: u64,
    seed: u64,
    workers: usize,
) -> Result<SimulationSummary> {
    if workers == 0 {
        return Err(Error::InvalidInput("worker count must be at least 1".to_string()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_experiment(model, settings, n_trials, seed))
}

/// All-samples estimate of `E[A·B]`, no-registration counting as 0.
pub fn estimate_micro_correlation(
    model: &MicrostateModel,
    a: &Direction<f64>,
    b: &Direction<f64>,
    n_trials: u64,
    seed: u64,
) -> Result<Estimate> {
    let s = run_experiment(model, &[(*a, *b)], n_trials, seed)?;
    Ok(s.settings[0].micro_correlation())
}

/// Pairs `(a,b), (a,b'), (a',b), (a',b')`.
pub fn chsh_pairs(setting: &ChshSetting<f64>) -> [(Direction<f64>, Direction<f64>); 4] {
    [
        (setting.a, setting.b),
        (setting.a, setting.b_prime),
        (setting.a_prime, setting.b),
        (setting.a_prime, setting.b_prime),
    ]
}

fn chsh_of(e: [Estimate; 4]) -> Result<Estimate> {
    let value = standard_chsh_lhs(e.map(|x| x.value))?;
    Ok(Estimate::new(value, e.iter().map(|x| x.std_error).sum()))
}

/// CHSH functional of the all-samples micro correlations. Its standard error
/// is the sum of the four component errors.
pub fn micro_chsh(model: &MicrostateModel, setting: &ChshSetting<f64>, n_trials: u64, seed: u64) -> Result<Estimate> {
    let s = run_experiment(model, &chsh_pairs(setting), n_trials, seed)?;
    chsh_of(tallies4(&s).map(|t| t.micro_correlation()))
}

fn tallies4(s: &SimulationSummary) -> [&SettingTally; 4] {
    [&s.settings[0], &s.settings[1], &s.settings[2], &s.settings[3]]
}

/// Possessed-property versus detected-outcome frequency of the pair `(+1, +1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FairSampling {
    /// Over all trials, from possessed properties.
    pub all_sample_freq: Estimate,
    /// Over doubly-detected trials, from registered outcomes.
    pub detected_freq: Estimate,
    /// `|all_sample_freq - detected_freq|`, error the sum of both.
    pub divergence: Estimate,
}

impl FairSampling {
    pub fn from_tally(t: &SettingTally) -> Result<Self> {
        let all = t.property_pair_frequency(1, 1)?;
        let det = t.detected_pair_frequency(1, 1)?;
        Ok(Self {
            all_sample_freq: all,
            detected_freq: det,
            divergence: Estimate::new((all.value - det.value).abs(), all.std_error + det.std_error),
        })
    }
}

pub fn fair_sampling_check(
    model: &MicrostateModel,
    a: &Direction<f64>,
    b: &Direction<f64>,
    n_trials: u64,
    seed: u64,
) -> Result<FairSampling> {
    let s = run_experiment(model, &[(*a, *b)], n_trials, seed)?;
    FairSampling::from_tally(&s.settings[0])
}

/// Three readings of one CHSH experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChshSimulation {
    pub summary: SimulationSummary,
    pub micro_correlations: [Estimate; 4],
    pub conditional_correlations: [Estimate; 4],
    /// Measured detection frequencies of `A(a), A(a'), B(b), B(b')`, each pooled
    /// over the two pairs that use the direction.
    pub detection: [Estimate; 4],
    /// Standard functional of the micro correlations.
    pub micro_chsh: Estimate,
    /// Standard functional of the doubly-detected conditional correlations.
    pub conditional_chsh: Estimate,
    /// Detection-weighted functional of the conditional correlations and the
    /// measured detection frequencies.
    pub modified_chsh: Estimate,
    pub fair_sampling: [FairSampling; 4],
}

fn pooled(x: Estimate, y: Estimate, n: u64) -> Estimate {
    let p = 0.5 * (x.value + y.value);
    Estimate::new(p, (p * (1.0 - p) / (2 * n) as f64).sqrt())
}

fn modified_with_error(e: [Estimate; 4], p: [Estimate; 4]) -> Result<Estimate> {
    let value = modified_chsh_value(e.map(|x| x.value), p.map(|x| x.value))?;
    let [e1, e2, e3, e4] = e;
    let [pa, pap, pb, pbp] = p;
    // Linear propagation of each input's error through both terms.
    let t1 = pa.std_error * (pb.value * e1.value - pbp.value * e2.value).abs()
        + pa.value * (pb.std_error * e1.value.abs() + pb.value * e1.std_error)
        + pa.value * (pbp.std_error * e2.value.abs() + pbp.value * e2.std_error);
    let t2 = pap.std_error * (pb.value * e3.value + pbp.value * e4.value).abs()
        + pap.value * (pb.std_error * e3.value.abs() + pb.value * e3.std_error)
        + pap.value * (pbp.std_error * e4.value.abs() + pbp.value * e4.std_error);
    Ok(Estimate::new(value, t1 + t2))
}

impl ChshSimulation {
    pub fn from_summary(summary: SimulationSummary) -> Result<Self> {
        if summary.settings.len() != 4 {
            return Err(Error::InvalidInput(format!(
                "a CHSH simulation needs 4 settings, got {}",
                summary.settings.len()
            )));
        }
        let t = tallies4(&summary);
        let micro = t.map(|x| x.micro_correlation());
        let mut conditional = [Estimate::new(0.0, 0.0); 4];
        let mut fair = Vec::with_capacity(4);
        for (i, x) in t.iter().enumerate() {
            conditional[i] = x.conditional_correlation()?;
            fair.push(FairSampling::from_tally(x)?);
        }
        let n = summary.n_trials;
        let detection = [
            pooled(t[0].detection_a(), t[1].detection_a(), n),
            pooled(t[2].detection_a(), t[3].detection_a(), n),
            pooled(t[0].detection_b(), t[2].detection_b(), n),
            pooled(t[1].detection_b(), t[3].detection_b(), n),
        ];
        Ok(Self {
            micro_chsh: chsh_of(micro)?,
            conditional_chsh: chsh_of(conditional)?,
            modified_chsh: modified_with_error(conditional, detection)?,
            micro_correlations: micro,
            conditional_correlations: conditional,
            detection,
            fair_sampling: [fair[0], fair[1], fair[2], fair[3]],
            summary,
        })
    }
}

/// Simulates the four CHSH pairs and evaluates all three functionals. With
/// `workers = None` the global rayon pool is used.
pub fn simulate_chsh(
    model: &MicrostateModel,
    setting: &ChshSetting<f64>,
    n_trials: u64,
    seed: u64,
    workers: Option<usize>,
) -> Result<ChshSimulation> {
    let pairs = chsh_pairs(setting);
    let summary = match workers {
        Some(w) => run_experiment_with_workers(model, &pairs, n_trials, seed, w)?,
        None => run_experiment(model, &pairs, n_trials, seed)?,
    };
    ChshSimulation::from_summary(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lhv::model::{always_detect_model, constant_model, gisin_gisin_model, random_local_model};
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    fn z() -> Direction<f64> {
        Direction::z_axis()
    }

    #[test]
    fn zero_trials_rejected() {
        let m = gisin_gisin_model();
        assert!(run_experiment(&m, &[(z(), z())], 0, 1).is_err());
        assert!(run_experiment(&m, &[], 10, 1).is_err());
        assert!(run_experiment_with_workers(&m, &[(z(), z())], 10, 1, 0).is_err());
    }

    #[test]
    fn tallies_sum_to_trials() {
        let m = random_local_model(4);
        let n = 3 * CHUNK_TRIALS + 17;
        let s = run_experiment(&m, &[(z(), z()), (Direction::x_axis(), z())], n, 9).unwrap();
        for t in &s.settings {
            assert_eq!(t.total(), n);
            assert_eq!(t.properties.iter().flatten().sum::<u64>(), n);
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let m = gisin_gisin_model();
        let pairs = chsh_pairs(&ChshSetting::tsirelson());
        let n = 5 * CHUNK_TRIALS / 2;
        let one = run_experiment_with_workers(&m, &pairs, n, 42, 1).unwrap();
        let three = run_experiment_with_workers(&m, &pairs, n, 42, 3).unwrap();
        assert_eq!(one, three);
        assert_eq!(one, run_experiment(&m, &pairs, n, 42).unwrap());
        assert_ne!(one, run_experiment(&m, &pairs, n, 43).unwrap());
    }

    #[test]
    fn prefix_of_a_longer_run_is_stable() {
        // Trial i uses the same draws whatever the total count, so the first
        // chunk of a long run equals a one-chunk run.
        let m = gisin_gisin_model();
        let short = run_experiment(&m, &[(z(), z())], CHUNK_TRIALS, 5).unwrap();
        let chunk = run_chunk(&m, &[(z(), z())], 5, 0, CHUNK_TRIALS);
        assert_eq!(short.settings[0], chunk[0]);
    }

    #[test]
    fn gisin_gisin_detection_and_perfect_anticorrelation() {
        let m = gisin_gisin_model();
        let s = run_experiment(&m, &[(z(), z())], 1_000_000, 7).unwrap();
        let t = &s.settings[0];
        assert!(t.detection_a().within(0.5, 3.0), "{:?}", t.detection_a());
        assert_eq!(t.detection_b().value, 1.0);
        let e = t.conditional_correlation().unwrap();
        assert!((-1.0..=-0.995).contains(&e.value), "{e:?}");
        let micro = t.micro_correlation();
        assert!((micro.value + 0.5).abs() < 0.005, "{micro:?}");
    }

    #[test]
    fn orthogonal_micro_correlation_vanishes() {
        let m = gisin_gisin_model();
        let e = estimate_micro_correlation(&m, &z(), &Direction::x_axis(), 1_000_000, 3).unwrap();
        assert!(e.value.abs() < 0.005, "{e:?}");
    }

    #[test]
    fn constant_model_is_perfectly_correlated() {
        let s = run_experiment(&constant_model(), &[(z(), Direction::x_axis())], 1000, 1).unwrap();
        let t = &s.settings[0];
        assert_eq!(t.conditional_correlation().unwrap().value, 1.0);
        assert_eq!(t.detection_a().value, 1.0);
        assert_eq!(t.detection_b().value, 1.0);
    }

    #[test]
    fn gisin_gisin_at_tsirelson() {
        let m = gisin_gisin_model();
        let micro = micro_chsh(&m, &ChshSetting::tsirelson(), 1_000_000, 11).unwrap();
        assert!((micro.value - SQRT_2).abs() < 0.01, "{micro:?}");
    }

    #[test]
    fn sign_model_saturates_classical_limit() {
        let m = always_detect_model();
        let micro = micro_chsh(&m, &ChshSetting::tsirelson(), 1_000_000, 11).unwrap();
        assert!((micro.value - 2.0).abs() < 0.01, "{micro:?}");
        assert!(micro.value <= 2.0 + 1e-12);
    }

    #[test]
    fn fair_sampling_diagnostic() {
        let m = gisin_gisin_model();
        let b = Direction::in_plane_degrees(45.0);
        let f = fair_sampling_check(&m, &z(), &b, 1_000_000, 21).unwrap();
        assert!((f.all_sample_freq.value - 0.125).abs() < 0.005, "{f:?}");
        assert!((f.detected_freq.value - (1.0 - FRAC_1_SQRT_2) / 4.0).abs() < 0.005, "{f:?}");
        assert!(f.divergence.value > 0.04);

        let f = fair_sampling_check(&always_detect_model(), &z(), &b, 200_000, 21).unwrap();
        assert_eq!(f.divergence.value, 0.0);
        let f = fair_sampling_check(&m, &z(), &Direction::x_axis(), 1_000_000, 21).unwrap();
        assert!(f.divergence.value < 0.005, "{f:?}");
    }

    #[test]
    fn undetected_pairs_make_conditionals_undefined() {
        let never = crate::lhv::MicrostateModel::new(
            "never",
            crate::lhv::SideRule::new(|_, _| MicroOutcome::Plus, |_, _| false),
            crate::lhv::SideRule::new(|_, _| MicroOutcome::Plus, |_, _| true),
        );
        assert!(matches!(fair_sampling_check(&never, &z(), &z(), 100, 1), Err(Error::UndefinedConditional(_))));
        let s = run_experiment(&never, &[(z(), z())], 100, 1).unwrap();
        assert!(s.settings[0].conditional_correlation().is_err());
        assert_eq!(s.settings[0].micro_correlation().value, 0.0);
    }

    #[test]
    fn gisin_gisin_marginals_are_unbiased() {
        let m = gisin_gisin_model();
        let s = run_experiment(&m, &[(z(), z())], 1_000_000, 2).unwrap();
        let t = &s.settings[0];
        assert!(t.property_mean_a().within(0.0, 3.0));
        assert!(t.conditional_mean_a().unwrap().within(0.0, 3.0));
    }

    #[test]
    fn three_readings_separate() {
        let sim = simulate_chsh(&gisin_gisin_model(), &ChshSetting::tsirelson(), 1_000_000, 7, None).unwrap();
        assert!(sim.micro_chsh.within(SQRT_2, 4.0));
        assert!(sim.conditional_chsh.within(2.0 * SQRT_2, 4.0));
        assert!(sim.conditional_chsh.value > 2.0 + 4.0 * sim.conditional_chsh.std_error);
        assert!(
            (sim.modified_chsh.value - sim.micro_chsh.value).abs()
                <= 4.0 * (sim.modified_chsh.std_error + sim.micro_chsh.std_error)
        );
        // A detected-subensemble violation requires an unfair sample somewhere.
        assert!(sim.fair_sampling.iter().any(|f| f.divergence.value > 4.0 * f.divergence.std_error));
    }
}
