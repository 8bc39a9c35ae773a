// Copyright 2026 the oneway developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License.You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Command-line front end: runs protocol jobs, sweeps parameter grids, and
//! writes JSON/CSV reports.
//!
//! Exit codes: 0 success, 2 parameter/schema problems, 3 I/O failures,
//! 4 impossible forced branches.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::cluster::{
    build_cluster, stabilizer_fidelity, stabilizer_group, to_lab, GraphSpec, OrderingMap,
    OrderingName, PhysicalLabel,
};
use crate::error::Error;
use crate::mbqc::{run_pattern, Pattern, RunMode};
use crate::noise::{apply_noise, run_cnot_dm, run_cphase_dm, run_rotation_dm, NoiseSpec};
use crate::protocols::{
    cnot_pattern, cphase_pattern, rotation_pattern, run_cnot, run_cphase, run_rotation, CnotJob,
    CnotReport, CphaseJob, CphaseReport, OracleChoice, RotationJob, RotationReport, CNOT_ORDERING,
    CPHASE_ORDERING,
};
use crate::report::{
    parse_angle, DetectorMap, EnumerateBranchRow, EnumerateReport, Report, ReportMeta, ReportRow,
};
use crate::statevec::fidelity_dm;

/// Exit codes per failure class.
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_BRANCH: i32 = 4;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn schema(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_SCHEMA,
            message: msg.into(),
        }
    }

    fn io(err: std::io::Error, path: &std::path::Path) -> Self {
        CliError {
            code: EXIT_IO,
            message: format!("{}: {err}", path.display()),
        }
    }
}

impl From<Error> for CliError {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::ImpossibleBranch { .. } => EXIT_BRANCH,
            _ => EXIT_SCHEMA,
        };
        CliError {
            code,
            message: err.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "oneway",
    version,
    about = "Deterministic one-way quantum computation on 4-qubit cluster states"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Single-qubit rotation R_x(β)R_z(α): per-branch fidelities with and
    /// without Pauli-frame feed-forward.
    Rotate(RotateArgs),
    /// C-NOT for equatorial targets: branch fidelities, control readout
    /// mapping, and conditional target fidelities.
    Cnot(CnotArgs),
    /// Universal C-Phase: branch fidelities and conditional targets.
    Cphase(CphaseArgs),
    /// Cluster-state fidelity under noise: stabilizer average next to the
    /// direct overlap.
    Fidelity(FidelityArgs),
    /// Dump all branches of a serialized pattern.
    Enumerate(EnumerateArgs),
    /// Rotation fidelity table: ordering b, β = 0, α ∈ {0, π/2, π/4, −π/4}.
    Table1(Table1Args),
    /// C-NOT fidelity table: both oracle choices, α ∈ {π/2, π/4}.
    Table2(Table2Args),
    /// Per-detector rotation fidelities with/without feed-forward at one
    /// (α, β) point, plus the ideal no-feed-forward series.
    Fig3(Fig3Args),
    /// Conditional C-Phase target fidelity over an (α, β) grid with grid
    /// averages per control sign.
    CphaseAvg(CphaseAvgArgs),
}

fn merge<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

macro_rules! overlay {
    ($flag:expr, $file:expr; $($field:ident),+ $(,)?) => {
        $( $flag.$field = merge($flag.$field.take(), $file.$field); )+
    };
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct OutputOpts {
    /// Output format.
    #[arg(long, value_parser = ["json", "csv"])]
    #[serde(default)]
    pub format: Option<String>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct RotateArgs {
    /// Optional protocol tag; must match the subcommand when present.
    #[arg(long)]
    #[serde(default)]
    pub protocol: Option<String>,
    /// Angle α, e.g. "pi/4" or "0.785398".
    #[arg(long)]
    #[serde(default)]
    pub alpha: Option<String>,
    /// Angle β.
    #[arg(long)]
    #[serde(default)]
    pub beta: Option<String>,
    /// Qubit ordering: a (polarization output) or b (momentum output).
    #[arg(long)]
    #[serde(default)]
    pub ordering: Option<String>,
    /// Restrict rows to one feed-forward mode: "on" or "off" (default both).
    #[arg(long)]
    #[serde(default)]
    pub ff: Option<String>,
    /// White-noise weight p of the input state.
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    /// Comma-separated per-qubit depolarizing strengths.
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub depol: Option<Vec<f64>>,
    /// Branch mode: enumerate, sample, or force.
    #[arg(long, value_parser = ["enumerate", "sample", "force"])]
    #[serde(default)]
    pub mode: Option<String>,
    /// Shots for sample mode.
    #[arg(long)]
    #[serde(default)]
    pub shots: Option<u64>,
    /// Master seed for sample mode.
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
    /// Outcome bits for force mode, e.g. "010".
    #[arg(long)]
    #[serde(default)]
    pub force_bits: Option<String>,
    /// Detector relabeling, e.g. "a1=01,a2=00,a3=10,a4=11,b1=0,b2=1".
    #[arg(long)]
    #[serde(default)]
    pub detector_map: Option<String>,
    /// JSON file with the same schema as the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct CnotArgs {
    #[arg(long)]
    #[serde(default)]
    pub protocol: Option<String>,
    /// Target angle α.
    #[arg(long)]
    #[serde(default)]
    pub alpha: Option<String>,
    /// Control-selection operator: "id" (Z-basis qubit 1) or "h" (|±⟩).
    #[arg(long, value_parser = ["id", "h"])]
    #[serde(default)]
    pub oracle: Option<String>,
    /// Compensate the trailing target Hadamard ("on"/"off", default on).
    #[arg(long)]
    #[serde(default)]
    pub ht_compensation: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub depol: Option<Vec<f64>>,
    #[arg(long, value_parser = ["enumerate", "sample", "force"])]
    #[serde(default)]
    pub mode: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub shots: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
    /// Outcome bits (s₁ then s₄), e.g. "10".
    #[arg(long)]
    #[serde(default)]
    pub force_bits: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub detector_map: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct CphaseArgs {
    #[arg(long)]
    #[serde(default)]
    pub protocol: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub alpha: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub beta: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub depol: Option<Vec<f64>>,
    #[arg(long, value_parser = ["enumerate", "sample", "force"])]
    #[serde(default)]
    pub mode: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub shots: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
    /// Outcome bits (s₁ then s₂), e.g. "01".
    #[arg(long)]
    #[serde(default)]
    pub force_bits: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct FidelityArgs {
    #[arg(long)]
    #[serde(default)]
    pub protocol: Option<String>,
    /// Laboratory ordering whose encoding the state is built in.
    #[arg(long)]
    #[serde(default)]
    pub ordering: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(default)]
    pub depol: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct EnumerateArgs {
    /// Path to a serialized pattern (JSON).
    #[arg(long)]
    #[serde(default)]
    pub pattern: Option<PathBuf>,
    /// Path to a graph (JSON {"n":…,"edges":[[i,j],…]}); defaults to the
    /// linear chain on the pattern's qubit count.
    #[arg(long)]
    #[serde(default)]
    pub graph: Option<PathBuf>,
    #[arg(long, value_parser = ["enumerate", "sample", "force"])]
    #[serde(default)]
    pub mode: Option<String>,
    #[arg(long)]
    #[serde(default)]
    pub shots: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    pub force_bits: Option<String>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct Table1Args {
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub detector_map: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct Table2Args {
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct Fig3Args {
    /// Angle α of the plotted point (required: the histogram's angles are
    /// a free choice).
    #[arg(long)]
    pub alpha: String,
    /// Angle β of the plotted point.
    #[arg(long)]
    pub beta: String,
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[arg(long)]
    #[serde(default)]
    pub detector_map: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
pub struct CphaseAvgArgs {
    /// Grid points per axis (default 8).
    #[arg(long)]
    #[serde(default)]
    pub grid: Option<usize>,
    #[arg(long)]
    #[serde(default)]
    pub noise_p: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputOpts,
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn load_config<T: serde::de::DeserializeOwned>(path: &PathBuf) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(e, path))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn check_protocol(tag: &Option<String>, expected: &str) -> CliResult<()> {
    if let Some(p) = tag {
        if p != expected {
            return Err(CliError::schema(format!(
                "config protocol '{p}' does not match subcommand '{expected}'"
            )));
        }
    }
    Ok(())
}

fn parse_angle_opt(s: &Option<String>, default: f64) -> CliResult<f64> {
    match s {
        Some(text) => Ok(parse_angle(text)?),
        None => Ok(default),
    }
}

fn parse_on_off(s: &Option<String>, what: &str) -> CliResult<Option<bool>> {
    match s.as_deref() {
        None => Ok(None),
        Some("on") => Ok(Some(true)),
        Some("off") => Ok(Some(false)),
        Some(other) => Err(CliError::schema(format!(
            "{what} must be 'on' or 'off', got '{other}'"
        ))),
    }
}

fn parse_bits(s: &str) -> CliResult<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0u8),
            '1' => Ok(1u8),
            other => Err(CliError::schema(format!(
                "force bits must be 0/1, got '{other}'"
            ))),
        })
        .collect()
}

fn noise_from(noise_p: Option<f64>, depol: &Option<Vec<f64>>) -> NoiseSpec {
    NoiseSpec {
        white_p: noise_p.unwrap_or(1.0),
        depolarizing: depol.clone().filter(|v| !v.is_empty()),
    }
}

fn depol_cell(depol: &Option<Vec<f64>>) -> Option<String> {
    depol.as_ref().filter(|v| !v.is_empty()).map(|v| {
        v.iter()
            .map(|x| format!("{x}"))
            .collect::<Vec<_>>()
            .join(";")
    })
}

fn meta_for<T: Serialize>(command: &str, config: &T, seed: Option<u64>) -> ReportMeta {
    ReportMeta {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config: serde_json::to_value(config).expect("config serializes"),
    }
}

/// Empirical branch frequencies from a sampled run, keyed by outcome bits
/// in step order.
fn sampled_frequencies(
    pattern: &Pattern,
    seed: u64,
    shots: u64,
) -> CliResult<BTreeMap<String, f64>> {
    let state = build_cluster(&GraphSpec::chain(4))?;
    let branches = run_pattern(&state, pattern, &RunMode::Sample { seed, shots })?;
    Ok(branches
        .iter()
        .map(|b| (b.outcome_bits(pattern), b.probability))
        .collect())
}

struct BranchMode {
    filter: Option<Vec<u8>>,
    frequencies: Option<BTreeMap<String, f64>>,
    seed: Option<u64>,
}

/// Resolves --mode/--shots/--seed/--force-bits into a branch filter plus
/// optional empirical frequencies that replace exact probabilities.
fn resolve_mode(
    mode: &Option<String>,
    shots: Option<u64>,
    seed: Option<u64>,
    force_bits: &Option<String>,
    pattern: &Pattern,
) -> CliResult<BranchMode> {
    match mode.as_deref().unwrap_or("enumerate") {
        "force" => {
            let bits = force_bits
                .as_ref()
                .ok_or_else(|| CliError::schema("force mode requires --force-bits"))?;
            Ok(BranchMode {
                filter: Some(parse_bits(bits)?),
                frequencies: None,
                seed: None,
            })
        }
        "sample" => {
            let seed = seed.unwrap_or(0);
            let shots = shots.unwrap_or(100_000);
            Ok(BranchMode {
                filter: None,
                frequencies: Some(sampled_frequencies(pattern, seed, shots)?),
                seed: Some(seed),
            })
        }
        "enumerate" => Ok(BranchMode {
            filter: None,
            frequencies: None,
            seed: None,
        }),
        other => Err(CliError::schema(format!("unknown mode '{other}'"))),
    }
}

fn detector_for(
    outcomes: &BTreeMap<usize, u8>,
    ordering: &OrderingMap,
    map: &DetectorMap,
) -> Option<String> {
    let pi_a = ordering.logical_of(PhysicalLabel::PiA);
    let k_a = ordering.logical_of(PhysicalLabel::KA);
    match (outcomes.get(&pi_a), outcomes.get(&k_a)) {
        (Some(&s_pi), Some(&s_k)) => Some(map.detector_a(s_pi, s_k)),
        _ => None,
    }
}

fn write_output(opts: &OutputOpts, json: String, csv: String) -> CliResult<()> {
    let body = match opts.format.as_deref().unwrap_or("json") {
        "json" => json,
        "csv" => csv,
        other => return Err(CliError::schema(format!("unknown format '{other}'"))),
    };
    match &opts.out {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::io(e, path)),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// Row builders
// ---------------------------------------------------------------------------

fn blank_row(protocol: &str, quantity: &str) -> ReportRow {
    ReportRow {
        protocol: protocol.into(),
        quantity: quantity.into(),
        alpha: None,
        beta: None,
        ordering: None,
        oracle: None,
        ff: None,
        noise_p: None,
        depol: None,
        outcomes: String::new(),
        detector: None,
        control_output: None,
        probability: None,
        fidelity: None,
    }
}

#[allow(clippy::too_many_arguments)]
fn rotation_rows(
    report: &RotationReport,
    ff_filter: Option<bool>,
    noise_p: Option<f64>,
    depol: &Option<Vec<f64>>,
    detector_map: &DetectorMap,
    frequencies: Option<&BTreeMap<String, f64>>,
) -> Vec<ReportRow> {
    let ordering = OrderingMap::named(report.ordering);
    let mut rows = Vec::new();
    for branch in &report.rows {
        let bits = format!("{}{}{}", branch.s1, branch.s2, branch.s3);
        let probability = match frequencies {
            Some(freq) => freq.get(&bits).copied().unwrap_or(0.0),
            None => branch.probability,
        };
        let outcomes: BTreeMap<usize, u8> = [(1, branch.s1), (2, branch.s2), (3, branch.s3)].into();
        let detector = detector_for(&outcomes, &ordering, detector_map);
        for (ff, fidelity) in [
            (true, branch.ff_on_fidelity),
            (false, branch.ff_off_fidelity),
        ] {
            if ff_filter.is_some_and(|want| want != ff) {
                continue;
            }
            let mut row = blank_row("rotation", "branch_fidelity");
            row.alpha = Some(report.alpha);
            row.beta = Some(report.beta);
            row.ordering = Some(report.ordering.to_string());
            row.ff = Some(ff);
            row.noise_p = noise_p;
            row.depol = depol_cell(depol);
            row.outcomes = bits.clone();
            row.detector = detector.clone();
            row.probability = Some(probability);
            row.fidelity = Some(fidelity);
            rows.push(row);
        }
    }
    rows
}

fn run_rotation_report(
    job: &RotationJob,
    noise: &NoiseSpec,
) -> crate::error::Result<RotationReport> {
    if noise.is_ideal() {
        run_rotation(job)
    } else {
        run_rotation_dm(job, noise)
    }
}

fn run_cnot_report(job: &CnotJob, noise: &NoiseSpec) -> crate::error::Result<CnotReport> {
    if noise.is_ideal() {
        run_cnot(job)
    } else {
        run_cnot_dm(job, noise)
    }
}

fn run_cphase_report(job: &CphaseJob, noise: &NoiseSpec) -> crate::error::Result<CphaseReport> {
    if noise.is_ideal() {
        run_cphase(job)
    } else {
        run_cphase_dm(job, noise)
    }
}

fn control_output_label(o_choice: OracleChoice, s1: u8, readout: u8) -> String {
    match o_choice {
        OracleChoice::Hadamard => format!("s1={s1}->|{}>_c", 1 ^ (s1 & 1)),
        OracleChoice::Identity => {
            let mode = if readout == 0 { "l" } else { "r" };
            format!("|{readout}>_c=|{mode}>_kB")
        }
    }
}

fn cnot_rows(
    report: &CnotReport,
    noise_p: Option<f64>,
    depol: &Option<Vec<f64>>,
    detector_map: &DetectorMap,
    frequencies: Option<&BTreeMap<String, f64>>,
) -> Vec<ReportRow> {
    let ordering = OrderingMap::named(CNOT_ORDERING);
    let oracle = match report.o_choice {
        OracleChoice::Identity => "id",
        OracleChoice::Hadamard => "h",
    };
    let mut rows = Vec::new();
    for branch in &report.rows {
        let bits = format!("{}{}", branch.s1, branch.s4);
        let outcomes: BTreeMap<usize, u8> = [(1, branch.s1), (4, branch.s4)].into();
        let detector = detector_for(&outcomes, &ordering, detector_map);
        let probability = match frequencies {
            Some(freq) => freq.get(&bits).copied().unwrap_or(0.0),
            None => branch.probability,
        };
        let mut row = blank_row("cnot", "branch_fidelity");
        row.alpha = Some(report.alpha);
        row.ordering = Some(CNOT_ORDERING.to_string());
        row.oracle = Some(oracle.into());
        row.noise_p = noise_p;
        row.depol = depol_cell(depol);
        row.outcomes = bits.clone();
        row.detector = detector.clone();
        row.control_output = branch
            .control_readout
            .map(|r| control_output_label(report.o_choice, branch.s1, r));
        row.probability = Some(probability);
        row.fidelity = Some(branch.closed_form_fidelity);
        rows.push(row);
        for cond in &branch.conditional {
            let mut row = blank_row("cnot", "conditional_target");
            row.alpha = Some(report.alpha);
            row.ordering = Some(CNOT_ORDERING.to_string());
            row.oracle = Some(oracle.into());
            row.noise_p = noise_p;
            row.depol = depol_cell(depol);
            row.outcomes = bits.clone();
            row.control_output = Some(control_output_label(
                report.o_choice,
                branch.s1,
                cond.readout,
            ));
            row.probability = Some(cond.probability);
            row.fidelity = Some(cond.fidelity);
            rows.push(row);
        }
    }
    rows
}

fn cphase_rows(
    report: &CphaseReport,
    noise_p: Option<f64>,
    depol: &Option<Vec<f64>>,
    frequencies: Option<&BTreeMap<String, f64>>,
) -> Vec<ReportRow> {
    let mut rows = Vec::new();
    for branch in &report.rows {
        let bits = format!("{}{}", branch.s1, branch.s2);
        let probability = match frequencies {
            Some(freq) => freq.get(&bits).copied().unwrap_or(0.0),
            None => branch.probability,
        };
        let mut row = blank_row("cphase", "branch_fidelity");
        row.alpha = Some(report.alpha);
        row.beta = Some(report.beta);
        row.ordering = Some(CPHASE_ORDERING.to_string());
        row.noise_p = noise_p;
        row.depol = depol_cell(depol);
        row.outcomes = bits.clone();
        row.probability = Some(probability);
        row.fidelity = Some(branch.closed_form_fidelity);
        rows.push(row);
        for cond in &branch.conditional {
            let mut row = blank_row("cphase", "conditional_target");
            row.alpha = Some(report.alpha);
            row.beta = Some(report.beta);
            row.ordering = Some(CPHASE_ORDERING.to_string());
            row.noise_p = noise_p;
            row.depol = depol_cell(depol);
            row.outcomes = bits.clone();
            row.control_output = Some(if cond.control_plus { "plus" } else { "minus" }.into());
            row.probability = Some(cond.probability);
            row.fidelity = Some(cond.fidelity);
            rows.push(row);
        }
    }
    rows
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_rotate(mut args: RotateArgs) -> CliResult<()> {
    if let Some(path) = args.config.clone() {
        let file: RotateArgs = load_config(&path)?;
        overlay!(args, file; protocol, alpha, beta, ordering, ff, noise_p, depol, mode,
            shots, seed, force_bits, detector_map);
        args.output.format = merge(args.output.format.take(), file.output.format);
    }
    check_protocol(&args.protocol, "rotation")?;
    let alpha = parse_angle_opt(&args.alpha, 0.0)?;
    let beta = parse_angle_opt(&args.beta, 0.0)?;
    let ordering = OrderingName::parse(args.ordering.as_deref().unwrap_or("a"))?;
    let ff_filter = parse_on_off(&args.ff, "--ff")?;
    let noise = noise_from(args.noise_p, &args.depol);
    noise.validate(4)?;
    let detector_map = match &args.detector_map {
        Some(s) => DetectorMap::parse(s)?,
        None => DetectorMap::default(),
    };
    let mut job = RotationJob {
        alpha,
        beta,
        ordering,
        ff_enabled: ff_filter.unwrap_or(true),
        branch_filter: None,
    };
    let pattern = rotation_pattern(&job)?;
    let mode = resolve_mode(
        &args.mode,
        args.shots,
        args.seed,
        &args.force_bits,
        &pattern,
    )?;
    job.branch_filter = mode.filter.clone();
    let report = run_rotation_report(&job, &noise)?;
    let rows = rotation_rows(
        &report,
        ff_filter,
        args.noise_p,
        &args.depol,
        &detector_map,
        mode.frequencies.as_ref(),
    );
    let out = Report::new(meta_for("rotate", &args, mode.seed), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_cnot(mut args: CnotArgs) -> CliResult<()> {
    if let Some(path) = args.config.clone() {
        let file: CnotArgs = load_config(&path)?;
        overlay!(args, file; protocol, alpha, oracle, ht_compensation, noise_p, depol, mode,
            shots, seed, force_bits, detector_map);
        args.output.format = merge(args.output.format.take(), file.output.format);
    }
    check_protocol(&args.protocol, "cnot")?;
    let detector_map = match &args.detector_map {
        Some(s) => DetectorMap::parse(s)?,
        None => DetectorMap::default(),
    };
    let alpha = parse_angle_opt(&args.alpha, std::f64::consts::FRAC_PI_2)?;
    let o_choice = OracleChoice::parse(args.oracle.as_deref().unwrap_or("h"))?;
    let ht_compensated = parse_on_off(&args.ht_compensation, "--ht-compensation")?.unwrap_or(true);
    let noise = noise_from(args.noise_p, &args.depol);
    noise.validate(4)?;
    let mut job = CnotJob {
        alpha,
        o_choice,
        ht_compensated,
        branch_filter: None,
    };
    let pattern = cnot_pattern(&job)?;
    let mode = resolve_mode(
        &args.mode,
        args.shots,
        args.seed,
        &args.force_bits,
        &pattern,
    )?;
    job.branch_filter = mode.filter.clone();
    let report = run_cnot_report(&job, &noise)?;
    let rows = cnot_rows(
        &report,
        args.noise_p,
        &args.depol,
        &detector_map,
        mode.frequencies.as_ref(),
    );
    let out = Report::new(meta_for("cnot", &args, mode.seed), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_cphase(mut args: CphaseArgs) -> CliResult<()> {
    if let Some(path) = args.config.clone() {
        let file: CphaseArgs = load_config(&path)?;
        overlay!(args, file; protocol, alpha, beta, noise_p, depol, mode, shots, seed, force_bits);
        args.output.format = merge(args.output.format.take(), file.output.format);
    }
    check_protocol(&args.protocol, "cphase")?;
    let alpha = parse_angle_opt(&args.alpha, 0.0)?;
    let beta = parse_angle_opt(&args.beta, 0.0)?;
    let noise = noise_from(args.noise_p, &args.depol);
    noise.validate(4)?;
    let mut job = CphaseJob {
        alpha,
        beta,
        branch_filter: None,
    };
    let pattern = cphase_pattern(&job)?;
    let mode = resolve_mode(
        &args.mode,
        args.shots,
        args.seed,
        &args.force_bits,
        &pattern,
    )?;
    job.branch_filter = mode.filter.clone();
    let report = run_cphase_report(&job, &noise)?;
    let rows = cphase_rows(
        &report,
        args.noise_p,
        &args.depol,
        mode.frequencies.as_ref(),
    );
    let out = Report::new(meta_for("cphase", &args, mode.seed), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_fidelity(mut args: FidelityArgs) -> CliResult<()> {
    if let Some(path) = args.config.clone() {
        let file: FidelityArgs = load_config(&path)?;
        overlay!(args, file; protocol, ordering, noise_p, depol);
        args.output.format = merge(args.output.format.take(), file.output.format);
    }
    check_protocol(&args.protocol, "fidelity")?;
    let ordering = OrderingMap::parse(args.ordering.as_deref().unwrap_or("a"))?;
    let noise = noise_from(args.noise_p, &args.depol);
    noise.validate(4)?;
    let spec = GraphSpec::chain(4);
    let cluster = build_cluster(&spec)?;
    let lab_state = to_lab(&cluster, &ordering)?;
    let rho = apply_noise(&lab_state, &noise)?;
    let group = stabilizer_group(&spec, Some(&ordering))?;
    let f_stab = stabilizer_fidelity(&rho, &group)?;
    let f_overlap = fidelity_dm(&rho, &lab_state)?;
    let mut rows = Vec::new();
    for (quantity, fidelity) in [("stabilizer", f_stab), ("overlap", f_overlap)] {
        let mut row = blank_row("fidelity", quantity);
        row.ordering = Some(ordering.name().to_string());
        row.noise_p = args.noise_p;
        row.depol = depol_cell(&args.depol);
        row.fidelity = Some(fidelity);
        rows.push(row);
    }
    let out = Report::new(meta_for("fidelity", &args, None), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_enumerate(mut args: EnumerateArgs) -> CliResult<()> {
    if let Some(path) = args.config.clone() {
        let file: EnumerateArgs = load_config(&path)?;
        overlay!(args, file; pattern, graph, mode, shots, seed, force_bits);
        args.output.format = merge(args.output.format.take(), file.output.format);
    }
    let pattern_path = args
        .pattern
        .clone()
        .ok_or_else(|| CliError::schema("--pattern is required"))?;
    let pattern: Pattern = load_config(&pattern_path)?;
    pattern.validate()?;
    let graph = match &args.graph {
        Some(path) => {
            let g: GraphSpec = load_config(path)?;
            g
        }
        None => GraphSpec::chain(pattern.n_qubits()),
    };
    if graph.n_qubits != pattern.n_qubits() {
        return Err(CliError::schema(format!(
            "graph has {} qubits but the pattern needs {}",
            graph.n_qubits,
            pattern.n_qubits()
        )));
    }
    let state = build_cluster(&graph)?;
    let (mode, seed) = match args.mode.as_deref().unwrap_or("enumerate") {
        "enumerate" => (RunMode::Enumerate, None),
        "sample" => {
            let seed = args.seed.unwrap_or(0);
            (
                RunMode::Sample {
                    seed,
                    shots: args.shots.unwrap_or(100_000),
                },
                Some(seed),
            )
        }
        "force" => {
            let bits = args
                .force_bits
                .as_ref()
                .ok_or_else(|| CliError::schema("force mode requires --force-bits"))?;
            (RunMode::Force(parse_bits(bits)?), None)
        }
        other => return Err(CliError::schema(format!("unknown mode '{other}'"))),
    };
    let branches = run_pattern(&state, &pattern, &mode)?;
    let branch_rows = branches
        .iter()
        .map(|b| {
            let frame = b
                .frame
                .entries
                .iter()
                .map(|(q, bits)| format!("{q}:x{}z{}", bits.x, bits.z))
                .collect::<Vec<_>>()
                .join(";");
            EnumerateBranchRow {
                outcomes: b.outcome_bits(&pattern),
                probability: b.probability,
                frame,
                amplitudes: b
                    .output_state
                    .amplitudes()
                    .iter()
                    .map(|a| [a.re, a.im])
                    .collect(),
            }
        })
        .collect();
    let out = EnumerateReport {
        meta: meta_for("enumerate", &args, seed),
        branches: branch_rows,
    };
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_table1(args: Table1Args) -> CliResult<()> {
    let noise = noise_from(args.noise_p, &None);
    noise.validate(4)?;
    let detector_map = match &args.detector_map {
        Some(s) => DetectorMap::parse(s)?,
        None => DetectorMap::default(),
    };
    let ordering = OrderingMap::named(OrderingName::B);
    let alphas: [(&str, f64); 4] = [
        ("0", 0.0),
        ("pi/2", std::f64::consts::FRAC_PI_2),
        ("pi/4", std::f64::consts::FRAC_PI_4),
        ("-pi/4", -std::f64::consts::FRAC_PI_4),
    ];
    let mut rows = Vec::new();
    for (_, alpha) in alphas {
        let job = RotationJob {
            alpha,
            beta: 0.0,
            ordering: OrderingName::B,
            ff_enabled: false,
            branch_filter: None,
        };
        let report = run_rotation_report(&job, &noise)?;
        // Table layout: s₁ = 0 input sector, branch columns (s₂, s₃) in
        // {(0,0), (0,1)}, each branch scored against its own closed form.
        for branch in report
            .rows
            .iter()
            .filter(|r| r.s1 == 0 && r.s2 == 0 && (r.s3 == 0 || r.s3 == 1))
        {
            let outcomes: BTreeMap<usize, u8> =
                [(1, branch.s1), (2, branch.s2), (3, branch.s3)].into();
            let mut row = blank_row("rotation", "closed_form");
            row.alpha = Some(alpha);
            row.beta = Some(0.0);
            row.ordering = Some("b".into());
            row.noise_p = args.noise_p;
            row.outcomes = format!("{}{}{}", branch.s1, branch.s2, branch.s3);
            row.detector = detector_for(&outcomes, &ordering, &detector_map);
            row.probability = Some(branch.probability);
            row.fidelity = Some(branch.closed_form_fidelity);
            rows.push(row);
        }
    }
    let out = Report::new(meta_for("table1", &args, None), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_table2(args: Table2Args) -> CliResult<()> {
    let noise = noise_from(args.noise_p, &None);
    noise.validate(4)?;
    let mut rows = Vec::new();
    for o_choice in [OracleChoice::Hadamard, OracleChoice::Identity] {
        for alpha in [std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_4] {
            let job = CnotJob {
                alpha,
                o_choice,
                ht_compensated: true,
                branch_filter: None,
            };
            let report = run_cnot_report(&job, &noise)?;
            for branch in &report.rows {
                // The table's second block conditions on s₁ = 0 only.
                if o_choice == OracleChoice::Identity && branch.s1 != 0 {
                    continue;
                }
                for cond in &branch.conditional {
                    let mut row = blank_row("cnot", "conditional_target");
                    row.alpha = Some(alpha);
                    row.ordering = Some(CNOT_ORDERING.to_string());
                    row.oracle = Some(
                        match o_choice {
                            OracleChoice::Identity => "id",
                            OracleChoice::Hadamard => "h",
                        }
                        .into(),
                    );
                    row.noise_p = args.noise_p;
                    row.outcomes = format!("{}{}", branch.s1, branch.s4);
                    row.control_output =
                        Some(control_output_label(o_choice, branch.s1, cond.readout));
                    row.probability = Some(cond.probability);
                    row.fidelity = Some(cond.fidelity);
                    rows.push(row);
                }
            }
        }
    }
    let out = Report::new(meta_for("table2", &args, None), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_fig3(args: Fig3Args) -> CliResult<()> {
    let alpha = parse_angle(&args.alpha)?;
    let beta = parse_angle(&args.beta)?;
    let noise = noise_from(args.noise_p, &None);
    noise.validate(4)?;
    let detector_map = match &args.detector_map {
        Some(s) => DetectorMap::parse(s)?,
        None => DetectorMap::default(),
    };
    let job = RotationJob {
        alpha,
        beta,
        ordering: OrderingName::A,
        ff_enabled: true,
        branch_filter: None,
    };
    // Three series: corrected and raw under the given noise, and the raw
    // ideal series (the histogram's theory columns).
    let noisy = run_rotation_report(&job, &noise)?;
    let ideal = run_rotation(&job)?;
    let mut rows = rotation_rows(&noisy, None, args.noise_p, &None, &detector_map, None);
    rows.extend(rotation_rows(
        &ideal,
        Some(false),
        None,
        &None,
        &detector_map,
        None,
    ));
    // The histogram reads the s₁ = 0 input sector (the other sector only
    // swaps the input state).
    rows.retain(|r| r.outcomes.starts_with('0'));
    let out = Report::new(meta_for("fig3", &args, None), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

fn cmd_cphase_avg(args: CphaseAvgArgs) -> CliResult<()> {
    let grid = args.grid.unwrap_or(8);
    if grid == 0 || grid > 64 {
        return Err(CliError::schema(format!("grid size {grid} outside 1..=64")));
    }
    let noise = noise_from(args.noise_p, &None);
    noise.validate(4)?;
    let mut rows = Vec::new();
    let mut sums = [(0.0f64, 0usize), (0.0f64, 0usize)]; // (plus, minus)
    for i in 0..grid {
        for j in 0..grid {
            let alpha = std::f64::consts::TAU * i as f64 / grid as f64;
            let beta = std::f64::consts::TAU * j as f64 / grid as f64;
            let job = CphaseJob {
                alpha,
                beta,
                branch_filter: None,
            };
            let report = run_cphase_report(&job, &noise)?;
            for branch in &report.rows {
                for cond in &branch.conditional {
                    let slot = if cond.control_plus { 0 } else { 1 };
                    sums[slot].0 += cond.fidelity;
                    sums[slot].1 += 1;
                    let mut row = blank_row("cphase", "conditional_target");
                    row.alpha = Some(alpha);
                    row.beta = Some(beta);
                    row.ordering = Some(CPHASE_ORDERING.to_string());
                    row.noise_p = args.noise_p;
                    row.outcomes = format!("{}{}", branch.s1, branch.s2);
                    row.control_output =
                        Some(if cond.control_plus { "plus" } else { "minus" }.into());
                    row.probability = Some(cond.probability);
                    row.fidelity = Some(cond.fidelity);
                    rows.push(row);
                }
            }
        }
    }
    for (slot, name) in [(0usize, "plus"), (1usize, "minus")] {
        let mut row = blank_row("cphase", "grid_average");
        row.ordering = Some(CPHASE_ORDERING.to_string());
        row.noise_p = args.noise_p;
        row.control_output = Some(name.into());
        row.fidelity = Some(sums[slot].0 / sums[slot].1 as f64);
        rows.push(row);
    }
    let out = Report::new(meta_for("cphase-avg", &args, None), rows)?;
    write_output(&args.output, out.to_json_string(), out.to_csv_string())
}

/// Entry point used by the binary; errors carry the process exit code.
pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Rotate(args) => cmd_rotate(args),
        Command::Cnot(args) => cmd_cnot(args),
        Command::Cphase(args) => cmd_cphase(args),
        Command::Fidelity(args) => cmd_fidelity(args),
        Command::Enumerate(args) => cmd_enumerate(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Table2(args) => cmd_table2(args),
        Command::Fig3(args) => cmd_fig3(args),
        Command::CphaseAvg(args) => cmd_cphase_avg(args),
    }
}
