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

//! Report data model and serialization.
//!
//! Every command emits a `{meta, rows}` document as JSON or CSV with a
//! stable column set; identical configuration and seed produce
//! byte-identical files. CSV cells never contain commas: multi-valued
//! cells use `;` and `|` separators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One result row. Fields not applicable to a protocol stay `None`
/// (serialized as `null` / empty CSV cell) so the column set is uniform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub protocol: String,
    /// What `fidelity` measures, e.g. "branch_fidelity",
    /// "conditional_target", "stabilizer", "overlap".
    pub quantity: String,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub ordering: Option<String>,
    pub oracle: Option<String>,
    pub ff: Option<bool>,
    pub noise_p: Option<f64>,
    /// Semicolon-joined per-qubit depolarizing strengths.
    pub depol: Option<String>,
    /// Outcome bits in step order, e.g. "010".
    pub outcomes: String,
    pub detector: Option<String>,
    pub control_output: Option<String>,
    pub probability: Option<f64>,
    pub fidelity: Option<f64>,
}

impl ReportRow {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.fidelity {
            if !(0.0..=1.0 + 1e-9).contains(&f) {
                return Err(Error::InvalidParameter(format!(
                    "fidelity {f} outside [0, 1]"
                )));
            }
        }
        for cell in [
            Some(&self.protocol),
            Some(&self.quantity),
            Some(&self.outcomes),
            self.ordering.as_ref(),
            self.oracle.as_ref(),
            self.depol.as_ref(),
            self.detector.as_ref(),
            self.control_output.as_ref(),
        ]
        .into_iter()
        .flatten()
        {
            if cell.contains(',') || cell.contains('\n') {
                return Err(Error::InvalidParameter(format!(
                    "report cell '{cell}' contains a reserved character"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    /// Fully resolved configuration the run used.
    pub config: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub meta: ReportMeta,
    pub rows: Vec<ReportRow>,
}

pub const CSV_HEADER: &str = "protocol,quantity,alpha,beta,ordering,oracle,ff,noise_p,depol,outcomes,detector,control_output,probability,fidelity";

fn fmt_opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}

fn fmt_opt_str(v: &Option<String>) -> String {
    v.clone().unwrap_or_default()
}

fn parse_opt_f64(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::InvalidParameter(format!("bad number '{s}' in csv")))
}

fn parse_opt_str(s: &str) -> Option<String> {
    if s.is_empty() {
        None
    } else {
        Some(s.to_string())
    }
}

impl Report {
    pub fn new(meta: ReportMeta, rows: Vec<ReportRow>) -> Result<Self> {
        for row in &rows {
            row.validate()?;
        }
        Ok(Report { meta, rows })
    }

    /// Pretty JSON with a trailing newline; deterministic for a fixed
    /// report (object keys follow struct declaration order, map keys are
    /// sorted).
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// CSV with the stable header; rows carry the same cells as the JSON.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let ff = r.ff.map(|b| b.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
                r.protocol,
                r.quantity,
                fmt_opt_f64(r.alpha),
                fmt_opt_f64(r.beta),
                fmt_opt_str(&r.ordering),
                fmt_opt_str(&r.oracle),
                ff,
                fmt_opt_f64(r.noise_p),
                fmt_opt_str(&r.depol),
                r.outcomes,
                fmt_opt_str(&r.detector),
                fmt_opt_str(&r.control_output),
                fmt_opt_f64(r.probability),
                fmt_opt_f64(r.fidelity),
            ));
        }
        out
    }

    /// Parses rows back from CSV produced by [`Report::to_csv_string`].
    pub fn rows_from_csv(csv: &str) -> Result<Vec<ReportRow>> {
        let mut lines = csv.lines();
        match lines.next() {
            Some(h) if h == CSV_HEADER => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unexpected csv header {other:?}"
                )))
            }
        }
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 14 {
                return Err(Error::InvalidParameter(format!(
                    "csv row has {} cells, expected 14",
                    cells.len()
                )));
            }
            let ff = match cells[6] {
                "" => None,
                "true" => Some(true),
                "false" => Some(false),
                other => return Err(Error::InvalidParameter(format!("bad ff cell '{other}'"))),
            };
            rows.push(ReportRow {
                protocol: cells[0].to_string(),
                quantity: cells[1].to_string(),
                alpha: parse_opt_f64(cells[2])?,
                beta: parse_opt_f64(cells[3])?,
                ordering: parse_opt_str(cells[4]),
                oracle: parse_opt_str(cells[5]),
                ff,
                noise_p: parse_opt_f64(cells[7])?,
                depol: parse_opt_str(cells[8]),
                outcomes: cells[9].to_string(),
                detector: parse_opt_str(cells[10]),
                control_output: parse_opt_str(cells[11]),
                probability: parse_opt_f64(cells[12])?,
                fidelity: parse_opt_f64(cells[13])?,
            });
        }
        Ok(rows)
    }
}

/// Branch dump entry for the pattern-enumeration command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerateBranchRow {
    pub outcomes: String,
    pub probability: f64,
    /// "q:x<b>z<b>" per output qubit, ';'-joined, e.g. "4:x1z0".
    pub frame: String,
    /// Output amplitudes as [re, im] pairs.
    pub amplitudes: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerateReport {
    pub meta: ReportMeta,
    pub branches: Vec<EnumerateBranchRow>,
}

pub const ENUMERATE_CSV_HEADER: &str = "outcomes,probability,frame,amplitudes";

impl EnumerateReport {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from(ENUMERATE_CSV_HEADER);
        out.push('\n');
        for b in &self.branches {
            let amps = b
                .amplitudes
                .iter()
                .map(|[re, im]| format!("{re}|{im}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{},{},{}\n",
                b.outcomes, b.probability, b.frame, amps
            ));
        }
        out
    }

    pub fn branches_from_csv(csv: &str) -> Result<Vec<EnumerateBranchRow>> {
        let mut lines = csv.lines();
        match lines.next() {
            Some(h) if h == ENUMERATE_CSV_HEADER => {}
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unexpected csv header {other:?}"
                )))
            }
        }
        let mut branches = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 4 {
                return Err(Error::InvalidParameter(format!(
                    "csv row has {} cells, expected 4",
                    cells.len()
                )));
            }
            let probability = cells[1]
                .parse::<f64>()
                .map_err(|_| Error::InvalidParameter("bad probability cell".into()))?;
            let amplitudes = if cells[3].is_empty() {
                Vec::new()
            } else {
                cells[3]
                    .split(';')
                    .map(|pair| {
                        let (re, im) = pair.split_once('|').ok_or_else(|| {
                            Error::InvalidParameter(format!("bad amplitude cell '{pair}'"))
                        })?;
                        Ok([
                            re.parse::<f64>().map_err(|_| {
                                Error::InvalidParameter(format!("bad amplitude '{re}'"))
                            })?,
                            im.parse::<f64>().map_err(|_| {
                                Error::InvalidParameter(format!("bad amplitude '{im}'"))
                            })?,
                        ])
                    })
                    .collect::<Result<Vec<_>>>()?
            };
            branches.push(EnumerateBranchRow {
                outcomes: cells[0].to_string(),
                probability,
                frame: cells[2].to_string(),
                amplitudes,
            });
        }
        Ok(branches)
    }
}

/// Detector labels for the outcome pairs of each photon. Only one
/// assignment is physically pinned: detector `a2` fires for
/// (s_{π_A}, s_{k_A}) = (0, 0), the no-correction event. The remaining
/// photon-A detectors default to the free outcome pairs in lexicographic
/// order (a1 ↦ 01, a3 ↦ 10, a4 ↦ 11) and can be overridden.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectorMap {
    /// (s_{π_A}, s_{k_A}) for a1..a4.
    pub a_pairs: [(u8, u8); 4],
    /// s_{π_B} for b1, b2.
    pub b_bits: [u8; 2],
}

impl Default for DetectorMap {
    fn default() -> Self {
        DetectorMap {
            a_pairs: [(0, 1), (0, 0), (1, 0), (1, 1)],
            b_bits: [0, 1],
        }
    }
}

impl DetectorMap {
    /// Parses overrides like "a1=01,a2=00,a3=10,a4=11,b1=0,b2=1". All four
    /// photon-A detectors must be assigned distinct pairs; b entries are
    /// optional.
    pub fn parse(s: &str) -> Result<Self> {
        let mut a_pairs: [Option<(u8, u8)>; 4] = [None; 4];
        let mut b_bits: [Option<u8>; 2] = [None; 2];
        for item in s.split(',') {
            let (name, bits) = item.split_once('=').ok_or_else(|| {
                Error::InvalidParameter(format!("bad detector assignment '{item}'"))
            })?;
            let name = name.trim();
            let bits = bits.trim();
            let parse_bit = |c: char| -> Result<u8> {
                match c {
                    '0' => Ok(0),
                    '1' => Ok(1),
                    other => Err(Error::InvalidParameter(format!(
                        "bad outcome bit '{other}' in '{item}'"
                    ))),
                }
            };
            match name {
                "a1" | "a2" | "a3" | "a4" => {
                    let idx = (name.as_bytes()[1] - b'1') as usize;
                    let mut chars = bits.chars();
                    let (Some(c1), Some(c2), None) = (chars.next(), chars.next(), chars.next())
                    else {
                        return Err(Error::InvalidParameter(format!(
                            "photon-A detector needs two bits, got '{bits}'"
                        )));
                    };
                    a_pairs[idx] = Some((parse_bit(c1)?, parse_bit(c2)?));
                }
                "b1" | "b2" => {
                    let idx = (name.as_bytes()[1] - b'1') as usize;
                    let mut chars = bits.chars();
                    let (Some(c1), None) = (chars.next(), chars.next()) else {
                        return Err(Error::InvalidParameter(format!(
                            "photon-B detector needs one bit, got '{bits}'"
                        )));
                    };
                    b_bits[idx] = Some(parse_bit(c1)?);
                }
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown detector '{other}'"
                    )))
                }
            }
        }
        let default = DetectorMap::default();
        let a_pairs = [
            a_pairs[0].unwrap_or(default.a_pairs[0]),
            a_pairs[1].unwrap_or(default.a_pairs[1]),
            a_pairs[2].unwrap_or(default.a_pairs[2]),
            a_pairs[3].unwrap_or(default.a_pairs[3]),
        ];
        let b_bits = [
            b_bits[0].unwrap_or(default.b_bits[0]),
            b_bits[1].unwrap_or(default.b_bits[1]),
        ];
        for i in 0..4 {
            for j in (i + 1)..4 {
                if a_pairs[i] == a_pairs[j] {
                    return Err(Error::InvalidParameter(
                        "photon-A detector map is not a bijection".into(),
                    ));
                }
            }
        }
        if b_bits[0] == b_bits[1] {
            return Err(Error::InvalidParameter(
                "photon-B detector map is not a bijection".into(),
            ));
        }
        Ok(DetectorMap { a_pairs, b_bits })
    }

    pub fn detector_a(&self, s_pi_a: u8, s_k_a: u8) -> String {
        let pair = (s_pi_a & 1, s_k_a & 1);
        let idx = self
            .a_pairs
            .iter()
            .position(|&p| p == pair)
            .expect("bijection covers all pairs");
        format!("a{}", idx + 1)
    }

    pub fn detector_b(&self, s_pi_b: u8) -> String {
        let idx = self
            .b_bits
            .iter()
            .position(|&b| b == (s_pi_b & 1))
            .expect("bijection covers both bits");
        format!("b{}", idx + 1)
    }
}

/// Parses an angle given as a rational multiple of π ("pi/4", "-3pi/4",
/// "2pi/3", "0.5pi") or as a plain radian value ("0", "1.5708").
pub fn parse_angle(input: &str) -> Result<f64> {
    let s = input.trim().to_ascii_lowercase();
    if s.is_empty() {
        return Err(Error::InvalidParameter("empty angle".into()));
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.as_str()),
    };
    let bad = || Error::InvalidParameter(format!("cannot parse angle '{input}'"));
    if let Some(pi_pos) = body.find("pi") {
        let coeff_str = &body[..pi_pos];
        let rest = &body[pi_pos + 2..];
        let coeff = if coeff_str.is_empty() {
            1.0
        } else {
            coeff_str.parse::<f64>().map_err(|_| bad())?
        };
        let denom = if rest.is_empty() {
            1.0
        } else {
            let den_str = rest.strip_prefix('/').ok_or_else(bad)?;
            let d = den_str.parse::<f64>().map_err(|_| bad())?;
            if d == 0.0 {
                return Err(bad());
            }
            d
        };
        Ok(sign * coeff * std::f64::consts::PI / denom)
    } else {
        body.parse::<f64>().map(|v| sign * v).map_err(|_| bad())
    }
}
