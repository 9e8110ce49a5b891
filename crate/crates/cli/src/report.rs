//! Report records. CSV prints fixed-point with 6 decimals; JSON carries full
//! precision and parses back into the same records.

use std::io::{self, Write};

use esr_core::lhv::Estimate;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const SCAN_COLUMNS: &str = "a_deg,aprime_deg,b_deg,bprime_deg,pd_a,pd_aprime,pd_b,pd_bprime,\
standard_lhs,modified_lhs,bound,standard_violated,modified_violated";

/// `{:.6}`, without a sign on zero.
pub fn fixed(x: f64) -> String {
    let s = format!("{x:.6}");
    if s.trim_start_matches('-').bytes().all(|c| c == b'0' || c == b'.') {
        s.trim_start_matches('-').to_string()
    } else {
        s
    }
}

fn fixed_opt(x: Option<f64>) -> String {
    x.map(fixed).unwrap_or_default()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub value: f64,
    pub std_error: f64,
}

impl From<Estimate> for EstimateRecord {
    fn from(e: Estimate) -> Self {
        Self { value: e.value, std_error: e.std_error }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    /// `a, a', b, b'` in degrees, absent when the setting was given as vectors.
    pub angles_deg: Option<[f64; 4]>,
    pub directions: [[f64; 3]; 4],
    /// `|a·b - a·b'| + |a'·b + a'·b'|`.
    pub denominator: f64,
    pub bound: f64,
    pub no_registration_lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub schema_version: u32,
    pub command: String,
    pub angles_deg: Option<[f64; 4]>,
    pub directions: [[f64; 3]; 4],
    pub denominator: f64,
    pub bound: f64,
    pub no_registration_lower_bound: f64,
    pub grid_step_deg: f64,
    pub grid_minimum: BoundRow,
}

impl BoundReport {
    pub fn setting_row(&self) -> BoundRow {
        BoundRow {
            angles_deg: self.angles_deg,
            directions: self.directions,
            denominator: self.denominator,
            bound: self.bound,
            no_registration_lower_bound: self.no_registration_lower_bound,
        }
    }

    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "kind,a_deg,aprime_deg,b_deg,bprime_deg,denominator,bound,no_registration_lower_bound")?;
        for (kind, row) in [("setting", self.setting_row()), ("grid_minimum", self.grid_minimum)] {
            let angles = match row.angles_deg {
                Some(a) => a.map(fixed).join(","),
                None => ",,,".to_string(),
            };
            writeln!(
                out,
                "{kind},{angles},{},{},{}",
                fixed(row.denominator),
                fixed(row.bound),
                fixed(row.no_registration_lower_bound)
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub a_deg: f64,
    pub aprime_deg: f64,
    pub b_deg: f64,
    pub bprime_deg: f64,
    pub pd_a: f64,
    pub pd_aprime: f64,
    pub pd_b: f64,
    pub pd_bprime: f64,
    pub standard_lhs: f64,
    pub modified_lhs: f64,
    /// Only present when the four detection probabilities are equal.
    pub bound: Option<f64>,
    pub standard_violated: bool,
    pub modified_violated: bool,
}

impl ScanRecord {
    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            fixed(self.a_deg),
            fixed(self.aprime_deg),
            fixed(self.b_deg),
            fixed(self.bprime_deg),
            fixed(self.pd_a),
            fixed(self.pd_aprime),
            fixed(self.pd_b),
            fixed(self.pd_bprime),
            fixed(self.standard_lhs),
            fixed(self.modified_lhs),
            fixed_opt(self.bound),
            self.standard_violated,
            self.modified_violated
        )
    }
}

/// Header of a JSON scan report; the rows follow in a `rows` array.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub schema_version: u32,
    pub command: String,
    pub state: String,
    pub grid_step_deg: f64,
    pub apparatus_factor: f64,
    pub rows: Vec<ScanRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    /// `ab`, `ab'`, `a'b` or `a'b'`.
    pub pair: String,
    pub a: [f64; 3],
    pub b: [f64; 3],
    /// `responses[i][j]`: A gave `i - 1`, B gave `j - 1`.
    pub responses: [[u64; 3]; 3],
    pub micro_correlation: EstimateRecord,
    pub conditional_correlation: EstimateRecord,
    pub all_sample_freq: EstimateRecord,
    pub detected_freq: EstimateRecord,
    pub divergence: EstimateRecord,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulateReport {
    pub schema_version: u32,
    pub command: String,
    pub model: String,
    pub seed: u64,
    pub trials: u64,
    pub angles_deg: Option<[f64; 4]>,
    pub micro_chsh: EstimateRecord,
    pub conditional_chsh: EstimateRecord,
    pub modified_chsh: EstimateRecord,
    /// `A(a), A(a'), B(b), B(b')`.
    pub detection: [EstimateRecord; 4],
    pub pairs: Vec<PairRecord>,
}

const ROLE_NAMES: [&str; 4] = ["a", "aprime", "b", "bprime"];

pub const PAIR_NAMES: [&str; 4] = ["ab", "abprime", "aprimeb", "aprimebprime"];

impl SimulateReport {
    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "quantity,value,std_error")?;
        let mut row =
            |name: &str, e: &EstimateRecord| writeln!(out, "{name},{},{}", fixed(e.value), fixed(e.std_error));
        row("micro_chsh", &self.micro_chsh)?;
        row("conditional_chsh", &self.conditional_chsh)?;
        row("modified_chsh", &self.modified_chsh)?;
        for (role, e) in ROLE_NAMES.iter().zip(&self.detection) {
            row(&format!("detection_{role}"), e)?;
        }
        for p in &self.pairs {
            row(&format!("micro_correlation_{}", p.pair), &p.micro_correlation)?;
            row(&format!("conditional_correlation_{}", p.pair), &p.conditional_correlation)?;
            row(&format!("all_sample_freq_{}", p.pair), &p.all_sample_freq)?;
            row(&format!("detected_freq_{}", p.pair), &p.detected_freq)?;
            row(&format!("divergence_{}", p.pair), &p.divergence)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialRecord {
    pub a: f64,
    pub b: f64,
    pub a_registered: bool,
    pub b_registered: bool,
    pub conditional: f64,
    pub detection: f64,
    pub probability: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequentialReport {
    pub schema_version: u32,
    pub command: String,
    pub state: String,
    pub a: [f64; 3],
    pub b: [f64; 3],
    pub pd_a: f64,
    pub pd_b: f64,
    pub entries: Vec<SequentialRecord>,
    pub total: f64,
    /// Mean of the outcome product, no-registration outcomes included.
    pub correlation: f64,
}

impl SequentialReport {
    pub fn write_csv(&self, out: &mut dyn Write) -> io::Result<()> {
        writeln!(out, "a,b,a_registered,b_registered,conditional,detection,probability")?;
        for e in &self.entries {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                fixed(e.a),
                fixed(e.b),
                e.a_registered,
                e.b_registered,
                fixed(e.conditional),
                fixed(e.detection),
                fixed(e.probability)
            )?;
        }
        writeln!(out, "total,,,,,,{}", fixed(self.total))?;
        writeln!(out, "correlation,,,,,,{}", fixed(self.correlation))
    }
}
