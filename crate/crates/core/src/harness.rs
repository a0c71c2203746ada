//! Parameter sweeps, limit-temperature maps and their CSV/JSON tables.
//!
//! Rows are evaluated in parallel and collected in grid order. Method
//! failures never abort a sweep: they land in the row's `note` flag and the
//! affected cells stay empty.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};

use crate::concurrence::{concurrence, Correlators, PairDensity};
use crate::cspa::{cspa_observables, CspaConfig};
use crate::error::{Error, Result};
use crate::exact::{diagonalize, limit_temperatures_of, Spectrum};
use crate::mean_field::{critical_constants, log_partition_mfrpa, mfrpa_observables, solve_mean_field, Phase};
use crate::oracle::{reduced_pair, state_concurrence, DenseSpectrum, MAX_N as MAX_ORACLE_N};
use crate::parallel::map_collect;
use crate::params::ModelParams;
use crate::rpa_entanglement::{
    asymptotic_concurrence, factorizing_field, full_concurrence, limit_temperature_rpa, CMinus,
};
use crate::spin_algebra::TwoS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Oracle,
    MfrpaFull,
    MfrpaAsymptotic,
    Cspa,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Exact, Method::Oracle, Method::MfrpaFull, Method::MfrpaAsymptotic, Method::Cspa];

    pub fn name(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Oracle => "oracle",
            Method::MfrpaFull => "mfrpa_full",
            Method::MfrpaAsymptotic => "mfrpa_asymptotic",
            Method::Cspa => "cspa",
        }
    }

    /// Whether this method can produce `o` at all.
    pub fn supports(self, o: Output) -> bool {
        match self {
            Method::Exact | Method::MfrpaFull | Method::MfrpaAsymptotic => true,
            Method::Oracle | Method::Cspa => {
                !matches!(o, Output::Omega | Output::Lambda | Output::TlPlus | Output::TlMinus)
            }
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParams(format!("unknown method '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Field,
    Temperature,
}

impl Axis {
    /// Column header of the swept variable.
    pub fn column(self) -> &'static str {
        match self {
            Axis::Field => "b",
            Axis::Temperature => "T",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "field" | "b" => Ok(Axis::Field),
            "temperature" | "T" => Ok(Axis::Temperature),
            _ => Err(Error::InvalidParams(format!("unknown sweep axis '{s}'"))),
        }
    }
}

/// One requested column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Output {
    C,
    /// `n C`.
    NC,
    CPlus,
    CMinus,
    AlphaX,
    AlphaY,
    AlphaZ,
    Sz,
    LnZ,
    Omega,
    Lambda,
    TlPlus,
    TlMinus,
}

impl Output {
    pub const ALL: [Output; 13] = [
        Output::C,
        Output::NC,
        Output::CPlus,
        Output::CMinus,
        Output::AlphaX,
        Output::AlphaY,
        Output::AlphaZ,
        Output::Sz,
        Output::LnZ,
        Output::Omega,
        Output::Lambda,
        Output::TlPlus,
        Output::TlMinus,
    ];

    /// `C` always travels with `nC`.
    pub const DEFAULT: [Output; 4] = [Output::C, Output::NC, Output::CPlus, Output::CMinus];

    pub fn name(self) -> &'static str {
        match self {
            Output::C => "C",
            Output::NC => "nC",
            Output::CPlus => "C+",
            Output::CMinus => "C-",
            Output::AlphaX => "alpha_x",
            Output::AlphaY => "alpha_y",
            Output::AlphaZ => "alpha_z",
            Output::Sz => "sz",
            Output::LnZ => "lnZ",
            Output::Omega => "omega",
            Output::Lambda => "lambda",
            Output::TlPlus => "T_L+",
            Output::TlMinus => "T_L-",
        }
    }

    fn needs_thermal(self) -> bool {
        !matches!(self, Output::Omega | Output::Lambda | Output::TlPlus | Output::TlMinus)
    }

    fn needs_limit(self) -> bool {
        matches!(self, Output::TlPlus | Output::TlMinus)
    }
}

impl fmt::Display for Output {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Output {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let alias = match s {
            "C_+" | "c_plus" => "C+",
            "C_-" | "c_minus" => "C-",
            "ln_z" | "lnz" => "lnZ",
            "T_L" | "tl" => return Err(Error::InvalidParams("ask for T_L+ and/or T_L-".into())),
            other => other,
        };
        Output::ALL
            .into_iter()
            .find(|o| o.name() == alias)
            .ok_or_else(|| Error::InvalidParams(format!("unknown output '{s}'")))
    }
}

impl Serialize for Output {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Output {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRange {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
    #[serde(default)]
    pub geometric: bool,
}

impl GridRange {
    pub fn linear(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points, geometric: false }
    }

    pub fn geometric(start: f64, stop: f64, points: usize) -> Self {
        Self { start, stop, points, geometric: true }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::InvalidParams(format!("a sweep needs at least 2 points, got {}", self.points)));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return Err(Error::InvalidParams("sweep bounds must be finite".into()));
        }
        if self.geometric && !(self.start > 0.0 && self.stop > 0.0) {
            return Err(Error::InvalidParams("a geometric sweep needs positive bounds".into()));
        }
        Ok(())
    }

    /// End points are hit exactly.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i == 0 {
                    self.start
                } else if i + 1 == self.points {
                    self.stop
                } else if self.geometric {
                    self.start * (self.stop / self.start).powf(i as f64 / last)
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyUnit {
    /// Energies and temperatures are multiples of `v_x`.
    #[serde(rename = "v_x")]
    Vx,
    /// Energies as given.
    Absolute,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub method: Method,
    /// `params.b` is ignored on a field sweep.
    pub params: ModelParams,
    /// Fixed temperature of a field sweep.
    pub temperature: f64,
    pub axis: Axis,
    pub range: GridRange,
    pub outputs: Vec<Output>,
    pub units: EnergyUnit,
    pub cspa: CspaConfig,
}

impl SweepSpec {
    pub fn new(method: Method, params: ModelParams, temperature: f64, axis: Axis, range: GridRange) -> Self {
        Self {
            method,
            params,
            temperature,
            axis,
            range,
            outputs: Output::DEFAULT.to_vec(),
            units: EnergyUnit::Vx,
            cspa: CspaConfig::default(),
        }
    }

    pub fn with_outputs(mut self, outputs: &[Output]) -> Self {
        self.outputs = outputs.to_vec();
        self
    }

    /// Checks everything except the grid.
    pub fn validate_point(&self) -> Result<()> {
        self.params.require_pairs()?;
        if self.method == Method::Oracle && self.params.n > MAX_ORACLE_N {
            return Err(Error::SizeLimit { n: self.params.n, max: MAX_ORACLE_N });
        }
        if self.outputs.is_empty() {
            return Err(Error::InvalidParams("no outputs requested".into()));
        }
        for (i, o) in self.outputs.iter().enumerate() {
            if self.outputs[..i].contains(o) {
                return Err(Error::InvalidParams(format!("output '{o}' requested twice")));
            }
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(Error::InvalidParams(format!("temperature must be finite and >= 0, got {}", self.temperature)));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.validate_point()?;
        self.range.validate()?;
        if self.axis == Axis::Temperature && self.range.start.min(self.range.stop) < 0.0 {
            return Err(Error::InvalidParams("temperatures must be >= 0".into()));
        }
        Ok(())
    }

    fn field_and_temperature(&self, x: f64) -> (f64, f64) {
        match self.axis {
            Axis::Field => (x, self.temperature),
            Axis::Temperature => (self.params.b, x),
        }
    }
}

/// Flag columns appended after the outputs, in this order.
pub const FLAG_COLUMNS: [&str; 4] = ["phase", "breakdown", "complex_termination", "note"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RowFlags {
    /// Mean-field phase at this point, when it could be solved.
    pub phase: Option<Phase>,
    /// The static path + RPA integrand hit its validity limit.
    pub breakdown: bool,
    /// The full antiparallel expression has a negative radicand.
    pub complex_termination: bool,
    /// Failures and reasons for empty cells; `None` when all went through.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub axis_value: f64,
    /// Aligned with [`Table::columns`]; `None` cells are explained by the flags.
    pub values: Vec<Option<f64>>,
    pub flags: RowFlags,
    /// Some method call returned an error (as opposed to a quantity that is
    /// legitimately absent).
    pub failed: bool,
    /// Every such error was caused by the inputs (e.g. `T = 0` for a
    /// method that needs `T > 0`).
    pub bad_input: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Sweep,
    PhaseMap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridInfo {
    Range(GridRange),
    Explicit(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct References {
    pub b_c: f64,
    pub b_s: Option<f64>,
    /// Mean-field critical temperature at zero field.
    pub t_c0: f64,
}

impl References {
    pub fn of(params: &ModelParams) -> Self {
        let pc = critical_constants(params);
        Self { b_c: pc.b_c, b_s: factorizing_field(params).map(|f| f.b_s), t_c0: pc.t_c(0.0) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub kind: TableKind,
    pub method: Method,
    pub params: ModelParams,
    pub chi: Option<f64>,
    /// Fixed temperature of a field sweep.
    pub temperature: Option<f64>,
    /// Fixed field of a temperature sweep.
    pub field: Option<f64>,
    pub axis: Axis,
    pub grid: GridInfo,
    pub units: EnergyUnit,
    pub references: References,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub metadata: Metadata,
    pub columns: Vec<String>,
    pub rows: Vec<ResultRow>,
}

impl Table {
    pub fn axis_column(&self) -> &'static str {
        self.metadata.axis.column()
    }

    /// Axis, outputs, flags.
    pub fn header(&self) -> Vec<String> {
        let mut h = vec![self.axis_column().to_string()];
        h.extend(self.columns.iter().cloned());
        h.extend(FLAG_COLUMNS.iter().map(|s| s.to_string()));
        h
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r.values[k]).collect())
    }
}

fn metadata(spec: &SweepSpec, kind: TableKind, grid: GridInfo) -> Metadata {
    let (temperature, field) = match spec.axis {
        Axis::Field => (Some(spec.temperature), None),
        Axis::Temperature => (None, Some(spec.params.b)),
    };
    Metadata {
        kind,
        method: spec.method,
        params: spec.params,
        chi: critical_constants(&spec.params).chi,
        temperature,
        field,
        axis: spec.axis,
        grid,
        units: spec.units,
        references: References::of(&spec.params),
        version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

/// Evaluates the spec on its grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<Table> {
    spec.validate()?;
    let values = spec.range.values();
    Ok(run_values(spec, &values, GridInfo::Range(spec.range)))
}

/// Evaluates the spec at explicit axis values, ignoring `spec.range`.
pub fn run_points(spec: &SweepSpec, values: &[f64]) -> Result<Table> {
    spec.validate_point()?;
    if values.iter().any(|x| !x.is_finite()) || (spec.axis == Axis::Temperature && values.iter().any(|&t| t < 0.0)) {
        return Err(Error::InvalidParams("axis values must be finite (and >= 0 for temperatures)".into()));
    }
    Ok(run_values(spec, values, GridInfo::Explicit(values.to_vec())))
}

fn run_values(spec: &SweepSpec, values: &[f64], grid: GridInfo) -> Table {
    let rows = map_collect(values, |&x| {
        let (b, t) = spec.field_and_temperature(x);
        evaluate_row(spec, x, b, t)
    });
    Table {
        metadata: metadata(spec, TableKind::Sweep, grid),
        columns: spec.outputs.iter().map(|o| o.name().to_string()).collect(),
        rows,
    }
}

/// Everything one method can say about one `(b, T)` point.
#[derive(Debug, Default)]
struct Point {
    c: Option<f64>,
    c_plus: Option<f64>,
    c_minus: Option<f64>,
    correlators: Option<Correlators>,
    ln_z: Option<f64>,
    omega: Option<f64>,
    lambda: Option<f64>,
    tl_plus: Option<f64>,
    tl_minus: Option<f64>,
    notes: Vec<String>,
    failed: bool,
    numerical_failure: bool,
    breakdown: bool,
    complex: bool,
}

impl Point {
    fn keep<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.failed = true;
                self.numerical_failure |= !e.is_input_error();
                if matches!(e, Error::Breakdown { .. }) {
                    self.breakdown = true;
                }
                self.notes.push(format!("{what}: {e}"));
                None
            }
        }
    }

    /// C± from correlators; an unphysical pair state is reported, not hidden.
    fn set_from_correlators(&mut self, c: Correlators) {
        let pd = PairDensity::unchecked(c);
        if let Err(e) = PairDensity::new(c) {
            self.notes.push(format!("pair state: {e}"));
        }
        let r = concurrence(&pd);
        self.c = Some(r.c);
        self.c_plus = Some(r.c_plus);
        self.c_minus = Some(r.c_minus);
    }

    fn set_limits(&mut self, plus: Option<f64>, minus: Option<f64>) {
        for (name, v) in [("T_L+", plus), ("T_L-", minus)] {
            if v.is_none() {
                self.notes.push(format!("{name}: no such entanglement down to T = 0"));
            }
        }
        self.tl_plus = plus;
        self.tl_minus = minus;
    }

    fn value(&self, o: Output, n: usize) -> Option<f64> {
        let corr = self.correlators;
        match o {
            Output::C => self.c,
            Output::NC => self.c.map(|c| n as f64 * c),
            Output::CPlus => self.c_plus,
            Output::CMinus => self.c_minus,
            Output::AlphaX => corr.map(|c| c.alpha_x),
            Output::AlphaY => corr.map(|c| c.alpha_y),
            Output::AlphaZ => corr.map(|c| c.alpha_z),
            Output::Sz => corr.map(|c| c.sz),
            Output::LnZ => self.ln_z,
            Output::Omega => self.omega,
            Output::Lambda => self.lambda,
            Output::TlPlus => self.tl_plus,
            Output::TlMinus => self.tl_minus,
        }
    }
}

/// `(ω, λ)` read off the spectrum: the first same-parity excitation of the
/// top spin sector and the lowest level of the next sector down.
fn spectral_modes(spec: &Spectrum) -> (Option<f64>, Option<f64>) {
    let n = spec.n() as u32;
    let e0 = spec.ground_energy();
    let top = spec.sectors.iter().find(|s| s.spin2 == TwoS(n));
    let omega = top.and_then(|s| {
        let g = s.levels.first()?;
        spec.level(TwoS(n), g.k + 1, g.parity).map(|l| l.energy - e0)
    });
    let lambda = (n >= 2)
        .then(|| spec.sectors.iter().find(|s| s.spin2 == TwoS(n - 2)))
        .flatten()
        .and_then(|s| s.levels.first())
        .map(|l| l.energy - e0);
    (omega, lambda)
}

fn evaluate_point(spec: &SweepSpec, b: f64, t: f64) -> Point {
    let p = spec.params.with_field(b);
    let thermal = spec.outputs.iter().any(|o| o.needs_thermal());
    let limits = spec.outputs.iter().any(|o| o.needs_limit());
    let modes = spec.outputs.iter().any(|o| matches!(o, Output::Omega | Output::Lambda));
    let mut pt = Point::default();
    match spec.method {
        Method::Exact => {
            let Some(sp) = pt.keep("diagonalization", diagonalize(&p)) else { return pt };
            if thermal {
                pt.ln_z = pt.keep("lnZ", sp.log_partition(t));
                if let Some(c) = pt.keep("observables", sp.thermal_observables(t)) {
                    pt.correlators = Some(c);
                    pt.set_from_correlators(c);
                }
            }
            if modes {
                (pt.omega, pt.lambda) = spectral_modes(&sp);
            }
            if limits {
                if let Some(tl) = pt.keep("T_L", limit_temperatures_of(&sp)) {
                    pt.set_limits(tl.t_plus(), tl.t_minus());
                }
            }
        }
        Method::Oracle => {
            if thermal {
                let state = pt.keep("oracle", DenseSpectrum::new(&p)).and_then(|d| {
                    pt.ln_z = pt.keep("lnZ", d.log_partition(t));
                    pt.keep("thermal state", d.thermal_state(t))
                });
                if let Some(state) = state {
                    if let Some(pd) = pt.keep("reduced pair", reduced_pair(&state, 0, 1)) {
                        pt.correlators = Some(pd.correlators);
                    }
                    if let Some(r) = pt.keep("concurrence", state_concurrence(&state, 0, 1)) {
                        pt.c = Some(r.c);
                        pt.c_plus = Some(r.c_plus);
                        pt.c_minus = Some(r.c_minus);
                    }
                }
            }
        }
        Method::MfrpaFull | Method::MfrpaAsymptotic => {
            if thermal {
                if let Some((_, c)) = pt.keep("MF+RPA observables", mfrpa_observables(&p, t)) {
                    pt.correlators = Some(c);
                }
                pt.ln_z = pt.keep("lnZ", log_partition_mfrpa(&p, t));
            }
            if spec.method == Method::MfrpaFull {
                if thermal {
                    if let Some(fc) = pt.keep("concurrence", full_concurrence(&p, t, b)) {
                        pt.c_plus = Some(fc.c_plus);
                        match fc.c_minus {
                            Some(CMinus::Value { c }) => {
                                pt.c_minus = Some(c);
                                pt.c = Some(fc.c_plus.max(c).max(0.0));
                            }
                            Some(CMinus::ComplexTermination { b_f }) => {
                                pt.complex = true;
                                pt.notes.push(format!("C-: complex past b_f = {b_f:?}"));
                            }
                            // normal phase: no antiparallel branch
                            None => pt.c = Some(fc.c_plus.max(0.0)),
                        }
                    }
                }
                if modes {
                    if let Some(sol) = pt.keep("mean field", solve_mean_field(&p, t)) {
                        pt.lambda = Some(sol.lambda);
                        pt.omega = (sol.omega2 >= 0.0).then_some(sol.omega);
                    }
                }
            } else if thermal || modes {
                if let Some(ac) = pt.keep("concurrence", asymptotic_concurrence(&p, t, b)) {
                    pt.c_plus = Some(ac.c_plus);
                    pt.c_minus = ac.c_minus;
                    pt.c = Some(ac.c_plus.max(ac.c_minus.unwrap_or(0.0)).max(0.0));
                    pt.lambda = Some(ac.lambda);
                    pt.omega = Some(ac.omega);
                }
            }
            if limits {
                if let Some(tl) = pt.keep("T_L", limit_temperature_rpa(&p, b)) {
                    pt.set_limits(tl.plus, tl.minus);
                }
            }
        }
        Method::Cspa => {
            if thermal {
                if let Some(r) = pt.keep("static path + RPA", cspa_observables(&p, t, &spec.cspa)) {
                    pt.ln_z = Some(r.ln_z);
                    if r.excluded {
                        pt.breakdown = true;
                        pt.notes.push("samples past the breakdown limit were excluded".into());
                    }
                    if let Some(c) = r.correlators {
                        pt.correlators = Some(c);
                        pt.set_from_correlators(c);
                    }
                }
            }
        }
    }
    pt
}

fn evaluate_row(spec: &SweepSpec, x: f64, b: f64, t: f64) -> ResultRow {
    let pt = evaluate_point(spec, b, t);
    let n = spec.params.n;
    let mut notes = pt.notes.clone();
    let values: Vec<Option<f64>> = spec.outputs.iter().map(|&o| pt.value(o, n).filter(|v| v.is_finite())).collect();
    // empty cells without a recorded cause still get one
    let missing: Vec<&str> =
        spec.outputs.iter().zip(&values).filter(|(_, v)| v.is_none()).map(|(o, _)| o.name()).collect();
    if !missing.is_empty() && notes.is_empty() && !pt.complex {
        notes.push(format!("{} not available for method {}", missing.join(", "), spec.method));
    }
    let phase = solve_mean_field(&spec.params.with_field(b), t).ok().map(|s| s.phase);
    ResultRow {
        axis_value: x,
        values,
        flags: RowFlags {
            phase,
            breakdown: pt.breakdown,
            complex_termination: pt.complex,
            note: (!notes.is_empty()).then(|| notes.join("; ")),
        },
        failed: pt.failed,
        bad_input: pt.failed && !pt.numerical_failure,
    }
}

/// Columns of a phase map, after the field.
pub const PHASE_MAP_COLUMNS: [&str; 4] = ["b/b_c", "T_L+", "T_L-", "T_c"];

/// `T_L^±(b)` on a field grid, with `b/b_c` and the mean-field `T_c(b)` as
/// reference curves; `b_s` and `b_c` go to the metadata.
pub fn run_phase_map(params: &ModelParams, b_grid: &[f64], method: Method) -> Result<Table> {
    params.require_pairs()?;
    if !matches!(method, Method::Exact | Method::MfrpaFull | Method::MfrpaAsymptotic) {
        return Err(Error::InvalidParams(format!("limit temperatures are not available for method '{method}'")));
    }
    if b_grid.is_empty() || b_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidParams("the field grid must be non-empty and finite".into()));
    }
    let spec = SweepSpec::new(method, *params, 0.0, Axis::Field, GridRange::linear(0.0, 1.0, 2))
        .with_outputs(&[Output::TlPlus, Output::TlMinus]);
    let pc = critical_constants(params);
    let rows = map_collect(b_grid, |&b| {
        let pt = evaluate_point(&spec, b, 0.0);
        let ratio = (pc.b_c != 0.0).then(|| b / pc.b_c);
        ResultRow {
            axis_value: b,
            values: vec![ratio, pt.tl_plus, pt.tl_minus, Some(pc.t_c(b))],
            flags: RowFlags {
                phase: solve_mean_field(&params.with_field(b), 0.0).ok().map(|s| s.phase),
                breakdown: false,
                complex_termination: false,
                note: (!pt.notes.is_empty()).then(|| pt.notes.join("; ")),
            },
            failed: pt.failed,
            bad_input: pt.failed && !pt.numerical_failure,
        }
    });
    let mut md = metadata(&spec, TableKind::PhaseMap, GridInfo::Explicit(b_grid.to_vec()));
    md.temperature = None;
    Ok(Table { metadata: md, columns: PHASE_MAP_COLUMNS.iter().map(|s| s.to_string()).collect(), rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(Error::InvalidParams(format!("unknown format '{s}'"))),
        }
    }
}

/// Shortest text that parses back to the same `f64`.
pub fn format_float(x: f64) -> String {
    format!("{x:?}")
}

fn flag_cells(f: &RowFlags) -> [String; 4] {
    [
        f.phase.map(|p| p.as_str().to_string()).unwrap_or_default(),
        f.breakdown.to_string(),
        f.complex_termination.to_string(),
        f.note.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(table: &Table, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(table.header())?;
    for row in &table.rows {
        let mut rec = vec![format_float(row.axis_value)];
        rec.extend(row.values.iter().map(|v| v.map(format_float).unwrap_or_default()));
        rec.extend(flag_cells(&row.flags));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

struct RowView<'a> {
    table: &'a Table,
    row: &'a ResultRow,
}

impl Serialize for RowView<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(1 + self.table.columns.len() + FLAG_COLUMNS.len()))?;
        m.serialize_entry(self.table.axis_column(), &self.row.axis_value)?;
        for (name, v) in self.table.columns.iter().zip(&self.row.values) {
            m.serialize_entry(name, v)?;
        }
        let f = &self.row.flags;
        m.serialize_entry("phase", &f.phase)?;
        m.serialize_entry("breakdown", &f.breakdown)?;
        m.serialize_entry("complex_termination", &f.complex_termination)?;
        m.serialize_entry("note", &f.note)?;
        m.end()
    }
}

impl Serialize for Table {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<RowView> = self.rows.iter().map(|row| RowView { table: self, row }).collect();
        let mut m = s.serialize_map(Some(3))?;
        m.serialize_entry("metadata", &self.metadata)?;
        m.serialize_entry("columns", &self.header())?;
        m.serialize_entry("rows", &rows)?;
        m.end()
    }
}

pub fn write_json<W: Write>(table: &Table, mut w: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut w, table)?;
    writeln!(w)?;
    Ok(())
}

pub fn emit<W: Write>(table: &Table, format: Format, w: W) -> Result<()> {
    match format {
        Format::Csv => write_csv(table, w),
        Format::Json => write_json(table, w),
    }
}

pub fn emit_to_path(table: &Table, format: Format, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut buf = std::io::BufWriter::new(file);
    emit(table, format, &mut buf)?;
    buf.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::oracle_concurrence;

    fn params(n: usize) -> ModelParams {
        ModelParams::with_chi(n, 0.0, 1.0, 0.5, 0.0).unwrap()
    }

    fn to_string(table: &Table, f: Format) -> String {
        let mut buf = Vec::new();
        emit(table, f, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn grid_hits_end_points() {
        let g = GridRange::linear(0.1, 0.7, 4).values();
        assert_eq!(g.len(), 4);
        assert_eq!((g[0], g[3]), (0.1, 0.7));
        let g = GridRange::geometric(1e-3, 1.0, 4).values();
        assert!((g[1] - 1e-2).abs() < 1e-15 && g[3] == 1.0);
        assert!(GridRange::linear(0.0, 1.0, 1).validate().is_err());
        assert!(GridRange::geometric(0.0, 1.0, 3).validate().is_err());
    }

    #[test]
    fn output_names_round_trip() {
        for o in Output::ALL {
            assert_eq!(o.name().parse::<Output>().unwrap(), o);
        }
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("C_+".parse::<Output>().is_ok());
        assert!("T_L".parse::<Output>().is_err());
    }

    #[test]
    fn oracle_sweep_passes_through() {
        let p = params(4);
        let spec = SweepSpec::new(Method::Oracle, p, 0.2, Axis::Field, GridRange::linear(0.1, 0.4, 2));
        let t = run_sweep(&spec).unwrap();
        assert_eq!(t.rows.len(), 2);
        for row in &t.rows {
            let direct = oracle_concurrence(&p.with_field(row.axis_value), 0.2, 0, 1).unwrap();
            assert_eq!(row.values[0], Some(direct.c));
            assert_eq!(row.values[1], Some(4.0 * direct.c));
            assert_eq!(row.values[2], Some(direct.c_plus));
            assert_eq!(row.values[3], Some(direct.c_minus));
            assert!(row.flags.note.is_none());
        }
    }

    #[test]
    fn oracle_size_is_checked() {
        let spec = SweepSpec::new(Method::Oracle, params(13), 0.2, Axis::Field, GridRange::linear(0.1, 0.4, 2));
        assert!(matches!(run_sweep(&spec), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn sweeps_are_byte_identical() {
        let spec = SweepSpec::new(Method::Exact, params(20), 0.1, Axis::Field, GridRange::linear(0.0, 1.5, 7))
            .with_outputs(&[Output::C, Output::NC, Output::LnZ, Output::Omega, Output::Sz]);
        let a = run_sweep(&spec).unwrap();
        let b = run_sweep(&spec).unwrap();
        let seq = crate::parallel::sequential(|| run_sweep(&spec).unwrap());
        for f in [Format::Csv, Format::Json] {
            assert_eq!(to_string(&a, f), to_string(&b, f));
            assert_eq!(to_string(&a, f), to_string(&seq, f));
        }
    }

    #[test]
    fn csv_column_count() {
        let outputs = [Output::C, Output::AlphaX, Output::TlMinus];
        let spec = SweepSpec::new(Method::Exact, params(8), 0.1, Axis::Field, GridRange::linear(0.2, 0.6, 3))
            .with_outputs(&outputs);
        let text = to_string(&run_sweep(&spec).unwrap(), Format::Csv);
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let header = rd.headers().unwrap().clone();
        assert_eq!(header.len(), outputs.len() + 1 + FLAG_COLUMNS.len());
        assert_eq!(&header[1], "C");
        assert_eq!(&header[3], "T_L-");
        for rec in rd.records() {
            assert_eq!(rec.unwrap().len(), header.len());
        }
    }

    #[test]
    fn empty_table_is_header_only() {
        let spec = SweepSpec::new(Method::Exact, params(8), 0.1, Axis::Field, GridRange::linear(0.2, 0.6, 3));
        let mut t = run_sweep(&spec).unwrap();
        t.rows.clear();
        let text = to_string(&t, Format::Csv);
        assert_eq!(text.lines().count(), 1);
        assert_eq!(text.trim_end(), "b,C,nC,C+,C-,phase,breakdown,complex_termination,note");
    }

    #[test]
    fn json_round_trips_floats() {
        let spec =
            SweepSpec::new(Method::Exact, params(10), 0.07, Axis::Temperature, GridRange::geometric(1e-3, 2.0, 5))
                .with_outputs(&[Output::C, Output::AlphaX, Output::AlphaZ, Output::Sz, Output::LnZ]);
        let mut spec = spec;
        spec.params.b = 0.3;
        let t = run_sweep(&spec).unwrap();
        let v: serde_json::Value = serde_json::from_str(&to_string(&t, Format::Json)).unwrap();
        assert_eq!(v["metadata"]["method"], "exact");
        assert_eq!(v["metadata"]["params"]["n"], 10);
        assert_eq!(v["metadata"]["grid"]["points"], 5);
        let rows = v["rows"].as_array().unwrap();
        for (row, orig) in rows.iter().zip(&t.rows) {
            assert_eq!(row["T"].as_f64().unwrap(), orig.axis_value);
            for (name, val) in t.columns.iter().zip(&orig.values) {
                assert_eq!(row[name].as_f64(), *val, "{name}");
            }
        }
        // CSV text parses back exactly as well
        let text = to_string(&t, Format::Csv);
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        for (rec, orig) in rd.records().zip(&t.rows) {
            let rec = rec.unwrap();
            assert_eq!(rec[1].parse::<f64>().ok(), orig.values[0]);
        }
    }

    #[test]
    fn failures_become_flags() {
        // static path + RPA rejects T = 0 per row, the sweep still completes
        let spec = SweepSpec::new(Method::Cspa, params(10), 0.0, Axis::Temperature, GridRange::linear(0.0, 0.5, 2));
        let t = run_sweep(&spec).unwrap();
        assert!(t.rows[0].values.iter().all(Option::is_none));
        assert!(t.rows[0].flags.note.is_some());
        assert!(t.rows[1].values.iter().all(Option::is_some), "{:?}", t.rows[1].flags);
    }

    #[test]
    fn unavailable_outputs_are_flagged() {
        let spec = SweepSpec::new(Method::Oracle, params(4), 0.2, Axis::Field, GridRange::linear(0.1, 0.4, 2))
            .with_outputs(&[Output::C, Output::TlPlus]);
        let t = run_sweep(&spec).unwrap();
        assert!(!Method::Oracle.supports(Output::TlPlus) && Method::Exact.supports(Output::TlPlus));
        for row in &t.rows {
            assert!(row.values[0].is_some() && row.values[1].is_none());
            assert!(row.flags.note.as_deref().unwrap().contains("T_L+"));
        }
    }

    #[test]
    fn spectral_modes_match_mean_field_at_large_n() {
        let p = params(100).with_field(0.5);
        let spec = SweepSpec::new(Method::Exact, p, 0.0, Axis::Field, GridRange::linear(0.5, 0.5, 2))
            .with_outputs(&[Output::Omega, Output::Lambda]);
        let t = run_sweep(&spec).unwrap();
        let sol = solve_mean_field(&p, 0.0).unwrap();
        let row = &t.rows[0];
        assert!((row.values[0].unwrap() / sol.omega - 1.0).abs() < 0.02);
        assert!((row.values[1].unwrap() / sol.lambda - 1.0).abs() < 0.02);
    }

    #[test]
    fn mfrpa_full_flags_complex_termination() {
        let p = ModelParams::with_chi(10, 0.0, 1.0, 0.98, 0.0).unwrap();
        let spec = SweepSpec::new(Method::MfrpaFull, p, 0.0, Axis::Field, GridRange::linear(0.0, 0.99, 34));
        let t = run_sweep(&spec).unwrap();
        assert!(t.rows.iter().any(|r| r.flags.complex_termination));
        assert!(t.rows.iter().any(|r| !r.flags.complex_termination && r.values[0].is_some()));
    }

    #[test]
    fn phase_map_markers() {
        let p = params(50);
        let grid: Vec<f64> = (0..6).map(|i| 0.3 * i as f64).collect();
        let t = run_phase_map(&p, &grid, Method::MfrpaAsymptotic).unwrap();
        assert_eq!(t.metadata.references.b_c, 1.0);
        assert!((t.metadata.references.b_s.unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        let tc = t.column("T_c").unwrap();
        assert_eq!(tc[0], Some(0.5));
        assert_eq!(tc[5], Some(0.0));
        assert!(run_phase_map(&p, &grid, Method::Cspa).is_err());
    }
}
