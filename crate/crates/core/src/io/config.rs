//! Run configuration: a TOML document (or the `config` object of a run
//! manifest) validated against a strict schema.
//!
//! Every dimensionful key carries its unit in the name, with κ = 1:
//! `*_per_kappa` for rates and amplitudes, `*_per_inv_kappa` for times.
//! Parsing collects every violation instead of stopping at the first.

use std::fmt;
use std::path::PathBuf;

use toml::{Table, Value};

use crate::correlations::CombSpec;
use crate::experiments::{Axis, IsoSettings, Numerics, Pipeline};
use crate::models::{DriveTarget, ModelKind, ModelSpec, PulseSpec, DEFAULT_CENTER_IN_ETA};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}

/// Sweep axis names as written in a config, with their internal names.
pub const AXIS_KEYS: [(&str, &str); 8] = [
    ("g_per_kappa", "g"),
    ("gamma_per_kappa", "gamma"),
    ("gamma_phi_per_kappa", "gamma_phi"),
    ("omega_per_kappa", "omega"),
    ("eta_per_inv_kappa", "eta"),
    ("delta_per_kappa", "delta"),
    ("lambda", "lambda"),
    ("epsilon0_per_kappa", "epsilon0"),
];

pub fn axis_key(internal: &str) -> Option<&'static str> {
    AXIS_KEYS
        .iter()
        .find(|(_, i)| *i == internal)
        .map(|(k, _)| *k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    pub fn name(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: Vec<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("out"),
            formats: vec![OutputFormat::Csv],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub kind: Pipeline,
    pub axes: Vec<Axis>,
    pub omega_values: Vec<f64>,
    /// Highest manifold listed by `spectrum`.
    pub n_max: usize,
    pub iso: IsoSettings,
    pub comb: CombSpec,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            kind: Pipeline::SingleRun,
            axes: Vec::new(),
            omega_values: vec![1.0, 2.0, 3.0, 4.0],
            n_max: 6,
            iso: IsoSettings::default(),
            comb: CombSpec::new(100.0, 6),
        }
    }
}

impl PipelineConfig {
    pub fn axis(&self, internal: &str) -> Option<&[f64]> {
        self.axes
            .iter()
            .find(|a| a.parameter == internal)
            .map(|a| a.values.as_slice())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub numerics: Numerics,
    pub pipeline: PipelineConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelSpec::reference_point(),
            numerics: Numerics::default(),
            pipeline: PipelineConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Parses a TOML config.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigErrors> {
    let table: Table = toml::from_str(text).map_err(|e| {
        let msg = e.message().trim().to_string();
        let loc = e
            .span()
            .map(|s| {
                let (line, col) = line_col(text, s.start);
                format!("syntax error at line {line}, column {col}: ")
            })
            .unwrap_or_else(|| "syntax error: ".to_string());
        ConfigErrors(vec![loc + &msg])
    })?;
    from_table(&table)
}

/// Parses either a TOML config or a manifest JSON whose `config` object is
/// a config in the same schema.
pub fn parse_config_or_manifest(text: &str) -> Result<RunConfig, ConfigErrors> {
    if text.trim_start().starts_with('{') {
        let json: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| ConfigErrors(vec![format!("invalid manifest JSON: {e}")]))?;
        let cfg = json
            .get("config")
            .ok_or_else(|| ConfigErrors(vec!["manifest has no `config` object".into()]))?;
        match json_to_toml(cfg, "config")? {
            Value::Table(t) => from_table(&t),
            _ => Err(ConfigErrors(vec!["manifest `config` is not an object".into()])),
        }
    } else {
        parse_config(text)
    }
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.chars().rev().take_while(|&c| c != '\n').count() + 1;
    (line, col)
}

fn json_to_toml(v: &serde_json::Value, path: &str) -> Result<Value, ConfigErrors> {
    use serde_json::Value as J;
    Ok(match v {
        J::Bool(b) => Value::Boolean(*b),
        J::Number(n) => match n.as_i64() {
            Some(i) => Value::Integer(i),
            None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        J::String(s) => Value::String(s.clone()),
        J::Array(a) => Value::Array(
            a.iter()
                .enumerate()
                .map(|(i, x)| json_to_toml(x, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()?,
        ),
        J::Object(o) => {
            let mut t = Table::new();
            for (k, x) in o {
                t.insert(k.clone(), json_to_toml(x, &format!("{path}.{k}"))?);
            }
            Value::Table(t)
        }
        J::Null => return Err(ConfigErrors(vec![format!("{path}: null is not allowed")])),
    })
}

/// Schema walker; every lookup records its own violation and carries on.
struct Walk {
    errors: Vec<String>,
}

impl Walk {
    fn fail(&mut self, path: &str, msg: impl fmt::Display) {
        self.errors.push(format!("{path}: {msg}"));
    }

    fn known(&mut self, t: &Table, path: &str, keys: &[&str]) {
        for k in t.keys() {
            if !keys.contains(&k.as_str()) {
                self.fail(&join(path, k), "unknown key");
            }
        }
    }

    fn table<'a>(&mut self, t: &'a Table, path: &str, key: &str) -> Option<&'a Table> {
        match t.get(key) {
            None => None,
            Some(Value::Table(x)) => Some(x),
            Some(_) => {
                self.fail(&join(path, key), "expected a table");
                None
            }
        }
    }

    fn float(&mut self, t: &Table, path: &str, key: &str) -> Option<f64> {
        match t.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            _ => {
                self.fail(&join(path, key), "expected a number");
                None
            }
        }
    }

    fn float_in(
        &mut self,
        t: &Table,
        path: &str,
        key: &str,
        ok: impl Fn(f64) -> bool,
        rule: &str,
    ) -> Option<f64> {
        let v = self.float(t, path, key)?;
        if ok(v) {
            Some(v)
        } else {
            self.fail(&join(path, key), format!("must be {rule}, got {v}"));
            None
        }
    }

    fn int(&mut self, t: &Table, path: &str, key: &str, min: i64) -> Option<i64> {
        match t.get(key)? {
            Value::Integer(i) if *i >= min => Some(*i),
            Value::Integer(i) => {
                self.fail(&join(path, key), format!("must be >= {min}, got {i}"));
                None
            }
            _ => {
                self.fail(&join(path, key), "expected an integer");
                None
            }
        }
    }

    fn string<'a>(&mut self, t: &'a Table, path: &str, key: &str) -> Option<&'a str> {
        match t.get(key)? {
            Value::String(s) => Some(s),
            _ => {
                self.fail(&join(path, key), "expected a string");
                None
            }
        }
    }

    fn floats(&mut self, t: &Table, path: &str, key: &str) -> Option<Vec<f64>> {
        let p = join(path, key);
        let arr = match t.get(key)? {
            Value::Array(a) => a,
            _ => {
                self.fail(&p, "expected an array of numbers");
                return None;
            }
        };
        let mut out = Vec::with_capacity(arr.len());
        for (i, v) in arr.iter().enumerate() {
            match v {
                Value::Float(x) if x.is_finite() => out.push(*x),
                Value::Integer(x) => out.push(*x as f64),
                _ => self.fail(&format!("{p}[{i}]"), "expected a finite number"),
            }
        }
        if arr.is_empty() {
            self.fail(&p, "must not be empty");
        }
        Some(out)
    }
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn nonneg(x: f64) -> bool {
    x >= 0.0 && x.is_finite()
}

fn positive(x: f64) -> bool {
    x > 0.0 && x.is_finite()
}

const TOP_KEYS: [&str; 4] = ["model", "numerics", "pipeline", "output"];
const MODEL_KEYS: [&str; 7] = [
    "kind",
    "g_per_kappa",
    "gamma_per_kappa",
    "gamma_phi_per_kappa",
    "delta_per_kappa",
    "lambda",
    "pulse",
];
const PULSE_KEYS: [&str; 5] = [
    "shape",
    "omega_per_kappa",
    "eta_per_inv_kappa",
    "t_center_per_inv_kappa",
    "epsilon0_per_kappa",
];
const NUMERICS_KEYS: [&str; 8] = [
    "fock_cutoff",
    "rel_tol",
    "abs_tol",
    "max_step_per_inv_kappa",
    "t_points",
    "tau_fine_step_per_inv_kappa",
    "tau_fine_span_per_inv_kappa",
    "truncation",
];
const PIPELINE_KEYS: [&str; 6] = ["kind", "axes", "omega_values_per_kappa", "n_max", "iso", "comb"];
const ISO_KEYS: [&str; 5] = [
    "target_efficiency",
    "tolerance",
    "eta_min_per_inv_kappa",
    "eta_max_per_inv_kappa",
    "max_iterations",
];
const COMB_KEYS: [&str; 4] = [
    "pulses",
    "period_per_inv_kappa",
    "tau_step_per_inv_kappa",
    "row_stride",
];
const OUTPUT_KEYS: [&str; 2] = ["directory", "formats"];

/// Validates a parsed document. Absent keys take their defaults; absent
/// `model` keys take the reference point (g = 10, Ω = 1, η = 12.5,
/// Γ = Γφ = 0.5).
pub fn from_table(doc: &Table) -> Result<RunConfig, ConfigErrors> {
    let mut w = Walk { errors: Vec::new() };
    let mut cfg = RunConfig::default();
    w.known(doc, "", &TOP_KEYS);

    if let Some(m) = w.table(doc, "", "model") {
        read_model(&mut w, m, &mut cfg.model);
    }
    if let Some(n) = w.table(doc, "", "numerics") {
        read_numerics(&mut w, n, &mut cfg.numerics);
    }
    if let Some(p) = w.table(doc, "", "pipeline") {
        read_pipeline(&mut w, p, &mut cfg.pipeline);
    }
    if let Some(o) = w.table(doc, "", "output") {
        read_output(&mut w, o, &mut cfg.output);
    }

    if w.errors.is_empty() {
        if let Err(e) = cfg.model.validate() {
            w.fail("model", e);
        }
        if let Err(e) = cfg.numerics.validate() {
            w.fail("numerics", e);
        }
        let plan = crate::experiments::SweepPlan {
            base: cfg.model,
            axes: cfg.pipeline.axes.clone(),
            pipeline: cfg.pipeline.kind,
        };
        if let Err(e) = plan.points() {
            w.fail("pipeline.axes", e);
        }
    }
    if w.errors.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigErrors(w.errors))
    }
}

fn read_model(w: &mut Walk, m: &Table, spec: &mut ModelSpec) {
    let p = "model";
    w.known(m, p, &MODEL_KEYS);
    if let Some(kind) = w.string(m, p, "kind") {
        match kind {
            "two_photon_jc" => spec.kind = ModelKind::TwoPhotonJc,
            "standard_jc" => spec.kind = ModelKind::StandardJc,
            other => w.fail(
                "model.kind",
                format!("expected \"two_photon_jc\" or \"standard_jc\", got \"{other}\""),
            ),
        }
    }
    if let Some(v) = w.float_in(m, p, "g_per_kappa", nonneg, ">= 0") {
        spec.g = v;
    }
    if let Some(v) = w.float_in(m, p, "gamma_per_kappa", nonneg, ">= 0") {
        spec.gamma = v;
    }
    if let Some(v) = w.float_in(m, p, "gamma_phi_per_kappa", nonneg, ">= 0") {
        spec.gamma_phi = v;
    }
    if let Some(v) = w.float_in(m, p, "delta_per_kappa", f64::is_finite, "finite") {
        spec.delta = Some(v);
    }
    match m.get("lambda") {
        None => {}
        Some(Value::Integer(l)) => match DriveTarget::from_lambda(*l) {
            Ok(t) => spec.drive_target = t,
            Err(_) => w.fail("model.lambda", format!("must be 0 or 1, got {l}")),
        },
        Some(_) => w.fail("model.lambda", "expected the integer 0 or 1"),
    }
    if let Some(pt) = w.table(m, p, "pulse") {
        if let Some(pulse) = read_pulse(w, pt) {
            spec.pulse = pulse;
        }
    }
}

fn read_pulse(w: &mut Walk, t: &Table) -> Option<PulseSpec> {
    let p = "model.pulse";
    w.known(t, p, &PULSE_KEYS);
    let shape = w.string(t, p, "shape").unwrap_or("gaussian");
    let gaussian_only = ["omega_per_kappa", "eta_per_inv_kappa", "t_center_per_inv_kappa"];
    match shape {
        "gaussian" => {
            if t.contains_key("epsilon0_per_kappa") {
                w.fail(
                    "model.pulse.epsilon0_per_kappa",
                    "only valid with shape = \"constant\"",
                );
            }
            let omega = w.float_in(t, p, "omega_per_kappa", nonneg, ">= 0");
            let eta = w.float_in(t, p, "eta_per_inv_kappa", positive, "> 0");
            let center = w.float_in(t, p, "t_center_per_inv_kappa", f64::is_finite, "finite");
            let mut complete = true;
            for k in ["omega_per_kappa", "eta_per_inv_kappa"] {
                if !t.contains_key(k) {
                    w.fail(&join(p, k), "required for a Gaussian pulse");
                    complete = false;
                }
            }
            if !complete {
                return None;
            }
            let (omega, eta) = (omega?, eta?);
            Some(PulseSpec::Gaussian {
                omega,
                eta,
                t_center: center.unwrap_or(DEFAULT_CENTER_IN_ETA * eta),
            })
        }
        "constant" => {
            for k in gaussian_only {
                if t.contains_key(k) {
                    w.fail(&join(p, k), "only valid with shape = \"gaussian\"");
                }
            }
            if !t.contains_key("epsilon0_per_kappa") {
                w.fail(
                    "model.pulse.epsilon0_per_kappa",
                    "required for a constant drive",
                );
                return None;
            }
            w.float_in(t, p, "epsilon0_per_kappa", nonneg, ">= 0")
                .map(PulseSpec::constant)
        }
        other => {
            w.fail(
                "model.pulse.shape",
                format!("expected \"gaussian\" or \"constant\", got \"{other}\""),
            );
            None
        }
    }
}

fn read_numerics(w: &mut Walk, t: &Table, n: &mut Numerics) {
    let p = "numerics";
    w.known(t, p, &NUMERICS_KEYS);
    if let Some(v) = w.int(t, p, "fock_cutoff", 3) {
        n.fock_cutoff = Some(v as usize);
    }
    if let Some(v) = w.float_in(t, p, "rel_tol", positive, "> 0") {
        n.rel_tol = v;
    }
    if let Some(v) = w.float_in(t, p, "abs_tol", positive, "> 0") {
        n.abs_tol = v;
    }
    if let Some(v) = w.float_in(t, p, "max_step_per_inv_kappa", positive, "> 0") {
        n.max_step = Some(v);
    }
    if let Some(v) = w.int(t, p, "t_points", 3) {
        n.t_points = v as usize;
    }
    if let Some(v) = w.float_in(t, p, "tau_fine_step_per_inv_kappa", positive, "> 0") {
        n.tau_fine_step = v;
    }
    if let Some(v) = w.float_in(t, p, "tau_fine_span_per_inv_kappa", nonneg, ">= 0") {
        n.tau_fine_span = v;
    }
    if let Some(v) = w.float_in(t, p, "truncation", |x| (0.0..1e-2).contains(&x), "in [0, 0.01)") {
        n.truncation = v;
    }
}

fn read_pipeline(w: &mut Walk, t: &Table, pc: &mut PipelineConfig) {
    let p = "pipeline";
    w.known(t, p, &PIPELINE_KEYS);
    if let Some(kind) = w.string(t, p, "kind") {
        match pipeline_from_name(kind) {
            Some(k) => pc.kind = k,
            None => w.fail(
                "pipeline.kind",
                format!(
                    "expected one of fig1c, fig2, fig3, fig4, fig5, single_run; got \"{kind}\""
                ),
            ),
        }
    }
    match t.get("axes") {
        None => {}
        Some(Value::Array(items)) => {
            pc.axes.clear();
            for (i, item) in items.iter().enumerate() {
                let ap = format!("pipeline.axes[{i}]");
                let Value::Table(at) = item else {
                    w.fail(&ap, "expected a table");
                    continue;
                };
                w.known(at, &ap, &["parameter", "values"]);
                let name = w.string(at, &ap, "parameter");
                let values = w.floats(at, &ap, "values");
                if name.is_none() && !at.contains_key("parameter") {
                    w.fail(&join(&ap, "parameter"), "required");
                }
                if values.is_none() && !at.contains_key("values") {
                    w.fail(&join(&ap, "values"), "required");
                }
                let (Some(name), Some(values)) = (name, values) else {
                    continue;
                };
                match AXIS_KEYS.iter().find(|(k, _)| *k == name) {
                    Some((_, internal)) => {
                        if pc.axes.iter().any(|a| a.parameter == *internal) {
                            w.fail(&ap, format!("axis `{name}` appears twice"));
                        }
                        if *internal == "lambda" && values.iter().any(|v| *v != 0.0 && *v != 1.0)
                        {
                            w.fail(&join(&ap, "values"), "lambda values must be 0 or 1");
                        }
                        pc.axes.push(Axis {
                            parameter: internal.to_string(),
                            values,
                        });
                    }
                    None => w.fail(
                        &join(&ap, "parameter"),
                        format!(
                            "unknown sweep parameter `{name}`; expected one of {}",
                            AXIS_KEYS.map(|(k, _)| k).join(", ")
                        ),
                    ),
                }
            }
        }
        Some(_) => w.fail("pipeline.axes", "expected an array of tables"),
    }
    if let Some(v) = w.floats(t, p, "omega_values_per_kappa") {
        if v.iter().any(|&o| o < 1.0) {
            w.fail("pipeline.omega_values_per_kappa", "values must be >= 1");
        }
        pc.omega_values = v;
    }
    if let Some(v) = w.int(t, p, "n_max", 1) {
        pc.n_max = v as usize;
    }
    if let Some(it) = w.table(t, p, "iso") {
        let ip = "pipeline.iso";
        w.known(it, ip, &ISO_KEYS);
        let iso = &mut pc.iso;
        if let Some(v) = w.float_in(it, ip, "target_efficiency", positive, "> 0") {
            iso.target = v;
        }
        if let Some(v) = w.float_in(it, ip, "tolerance", positive, "> 0") {
            iso.tolerance = v;
        }
        if let Some(v) = w.float_in(it, ip, "eta_min_per_inv_kappa", positive, "> 0") {
            iso.eta_min = v;
        }
        if let Some(v) = w.float_in(it, ip, "eta_max_per_inv_kappa", positive, "> 0") {
            iso.eta_max = v;
        }
        if let Some(v) = w.int(it, ip, "max_iterations", 1) {
            iso.max_iterations = v as usize;
        }
        if iso.eta_min >= iso.eta_max {
            w.fail(ip, "eta_min_per_inv_kappa must be below eta_max_per_inv_kappa");
        }
    }
    if let Some(ct) = w.table(t, p, "comb") {
        let cp = "pipeline.comb";
        w.known(ct, cp, &COMB_KEYS);
        let comb = &mut pc.comb;
        if let Some(v) = w.int(ct, cp, "pulses", 1) {
            comb.pulses = v as usize;
        }
        if let Some(v) = w.float_in(ct, cp, "period_per_inv_kappa", positive, "> 0") {
            comb.period = v;
        }
        if let Some(v) = w.float_in(ct, cp, "tau_step_per_inv_kappa", positive, "> 0") {
            comb.tau_step = v;
        }
        if let Some(v) = w.int(ct, cp, "row_stride", 1) {
            comb.row_stride = v as usize;
        }
    }
}

fn read_output(w: &mut Walk, t: &Table, out: &mut OutputConfig) {
    let p = "output";
    w.known(t, p, &OUTPUT_KEYS);
    if let Some(d) = w.string(t, p, "directory") {
        out.directory = PathBuf::from(d);
    }
    match t.get("formats") {
        None => {}
        Some(Value::Array(items)) => {
            let mut formats = Vec::new();
            for (i, v) in items.iter().enumerate() {
                match v.as_str() {
                    Some("csv") => formats.push(OutputFormat::Csv),
                    Some("json") => formats.push(OutputFormat::Json),
                    _ => w.fail(
                        &format!("output.formats[{i}]"),
                        "expected \"csv\" or \"json\"",
                    ),
                }
            }
            if items.is_empty() {
                w.fail("output.formats", "must not be empty");
            }
            formats.dedup();
            out.formats = formats;
        }
        Some(_) => w.fail("output.formats", "expected an array of strings"),
    }
}

pub fn pipeline_name(p: Pipeline) -> &'static str {
    match p {
        Pipeline::Fig1c => "fig1c",
        Pipeline::Fig2 => "fig2",
        Pipeline::Fig3 => "fig3",
        Pipeline::Fig4 => "fig4",
        Pipeline::Fig5 => "fig5",
        Pipeline::SingleRun => "single_run",
    }
}

fn pipeline_from_name(s: &str) -> Option<Pipeline> {
    Some(match s {
        "fig1c" => Pipeline::Fig1c,
        "fig2" => Pipeline::Fig2,
        "fig3" => Pipeline::Fig3,
        "fig4" => Pipeline::Fig4,
        "fig5" => Pipeline::Fig5,
        "single_run" => Pipeline::SingleRun,
        _ => return None,
    })
}

impl RunConfig {
    /// The config as a document in the schema `parse_config` reads, with
    /// every default written out.
    pub fn to_table(&self) -> Table {
        let mut doc = Table::new();

        let m = &self.model;
        let mut model = Table::new();
        model.insert("kind".into(), m.kind.name().into());
        model.insert("g_per_kappa".into(), m.g.into());
        model.insert("gamma_per_kappa".into(), m.gamma.into());
        model.insert("gamma_phi_per_kappa".into(), m.gamma_phi.into());
        if let Some(d) = m.delta {
            model.insert("delta_per_kappa".into(), d.into());
        }
        model.insert(
            "lambda".into(),
            Value::Integer(m.drive_target.lambda() as i64),
        );
        let mut pulse = Table::new();
        match m.pulse {
            PulseSpec::Gaussian {
                omega,
                eta,
                t_center,
            } => {
                pulse.insert("shape".into(), "gaussian".into());
                pulse.insert("omega_per_kappa".into(), omega.into());
                pulse.insert("eta_per_inv_kappa".into(), eta.into());
                pulse.insert("t_center_per_inv_kappa".into(), t_center.into());
            }
            PulseSpec::Constant { epsilon0 } => {
                pulse.insert("shape".into(), "constant".into());
                pulse.insert("epsilon0_per_kappa".into(), epsilon0.into());
            }
        }
        model.insert("pulse".into(), Value::Table(pulse));
        doc.insert("model".into(), Value::Table(model));

        let n = &self.numerics;
        let mut num = Table::new();
        if let Some(c) = n.fock_cutoff {
            num.insert("fock_cutoff".into(), Value::Integer(c as i64));
        }
        num.insert("rel_tol".into(), n.rel_tol.into());
        num.insert("abs_tol".into(), n.abs_tol.into());
        if let Some(h) = n.max_step {
            num.insert("max_step_per_inv_kappa".into(), h.into());
        }
        num.insert("t_points".into(), Value::Integer(n.t_points as i64));
        num.insert("tau_fine_step_per_inv_kappa".into(), n.tau_fine_step.into());
        num.insert("tau_fine_span_per_inv_kappa".into(), n.tau_fine_span.into());
        num.insert("truncation".into(), n.truncation.into());
        doc.insert("numerics".into(), Value::Table(num));

        let pc = &self.pipeline;
        let mut pipe = Table::new();
        pipe.insert("kind".into(), pipeline_name(pc.kind).into());
        let axes: Vec<Value> = pc
            .axes
            .iter()
            .map(|a| {
                let mut t = Table::new();
                t.insert(
                    "parameter".into(),
                    axis_key(&a.parameter).unwrap_or(&a.parameter).into(),
                );
                t.insert("values".into(), floats(&a.values));
                Value::Table(t)
            })
            .collect();
        pipe.insert("axes".into(), Value::Array(axes));
        pipe.insert("omega_values_per_kappa".into(), floats(&pc.omega_values));
        pipe.insert("n_max".into(), Value::Integer(pc.n_max as i64));
        let mut iso = Table::new();
        iso.insert("target_efficiency".into(), pc.iso.target.into());
        iso.insert("tolerance".into(), pc.iso.tolerance.into());
        iso.insert("eta_min_per_inv_kappa".into(), pc.iso.eta_min.into());
        iso.insert("eta_max_per_inv_kappa".into(), pc.iso.eta_max.into());
        iso.insert(
            "max_iterations".into(),
            Value::Integer(pc.iso.max_iterations as i64),
        );
        pipe.insert("iso".into(), Value::Table(iso));
        let mut comb = Table::new();
        comb.insert("pulses".into(), Value::Integer(pc.comb.pulses as i64));
        comb.insert("period_per_inv_kappa".into(), pc.comb.period.into());
        comb.insert("tau_step_per_inv_kappa".into(), pc.comb.tau_step.into());
        comb.insert(
            "row_stride".into(),
            Value::Integer(pc.comb.row_stride as i64),
        );
        pipe.insert("comb".into(), Value::Table(comb));
        doc.insert("pipeline".into(), Value::Table(pipe));

        let mut out = Table::new();
        out.insert(
            "directory".into(),
            self.output.directory.to_string_lossy().into_owned().into(),
        );
        out.insert(
            "formats".into(),
            Value::Array(
                self.output
                    .formats
                    .iter()
                    .map(|f| f.name().into())
                    .collect(),
            ),
        );
        doc.insert("output".into(), Value::Table(out));
        doc
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(&self.to_table()).expect("config tables serialize")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_table()).expect("config tables serialize")
    }
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG3: &str = r#"
[model]
kind = "two_photon_jc"
g_per_kappa = 10
gamma_per_kappa = 0.5
gamma_phi_per_kappa = 0.5

[model.pulse]
shape = "gaussian"
omega_per_kappa = 1
eta_per_inv_kappa = 12.5
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(FIG3).unwrap();
        assert_eq!(cfg.model, ModelSpec::reference_point());
        assert_eq!(cfg.numerics, Numerics::default());
        assert_eq!(cfg.pipeline, PipelineConfig::default());
    }

    #[test]
    fn empty_document_is_the_reference_point() {
        assert_eq!(parse_config("").unwrap(), RunConfig::default());
    }

    #[test]
    fn lambda_out_of_range_names_the_field() {
        let text = "[model]\nkind = \"standard_jc\"\nlambda = 2\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.0[0].starts_with("model.lambda"), "{err}");
    }

    #[test]
    fn every_violation_is_reported() {
        let text = r#"
colour = "red"
[model]
g_per_kappa = -1
lambda = 0.5
[model.pulse]
shape = "gaussian"
omega_per_kappa = 1
[numerics]
t_points = 1
bogus = 3
[[pipeline.axes]]
parameter = "g"
values = [1, 2]
"#;
        let err = parse_config(text).unwrap_err();
        let joined = err.to_string();
        for needle in [
            "colour: unknown key",
            "model.g_per_kappa: must be >= 0",
            "model.lambda",
            "model.pulse.eta_per_inv_kappa: required",
            "numerics.t_points",
            "numerics.bogus: unknown key",
            "pipeline.axes[0].parameter: unknown sweep parameter `g`",
        ] {
            assert!(joined.contains(needle), "missing `{needle}` in {joined}");
        }
        assert_eq!(err.0.len(), 7, "{joined}");
    }

    #[test]
    fn syntax_errors_carry_line_and_column() {
        let err = parse_config("[model]\ng_per_kappa = = 3\n").unwrap_err();
        assert!(err.0[0].contains("line 2, column"), "{err}");
    }

    #[test]
    fn round_trip_through_toml_and_json() {
        let mut cfg = parse_config(FIG3).unwrap();
        cfg.numerics.fock_cutoff = Some(9);
        cfg.model.delta = Some(0.1 + 0.2);
        cfg.pipeline.kind = Pipeline::Fig2;
        cfg.pipeline.axes = vec![Axis {
            parameter: "eta".into(),
            values: vec![1.0, 1.0 / 3.0, 50.0],
        }];
        cfg.output.formats = vec![OutputFormat::Csv, OutputFormat::Json];
        let text = cfg.to_toml_string();
        assert_eq!(parse_config(&text).unwrap(), cfg);
        let manifest = serde_json::json!({ "config": cfg.to_json() }).to_string();
        assert_eq!(parse_config_or_manifest(&manifest).unwrap(), cfg);
    }

    #[test]
    fn constant_drive_rejects_gaussian_keys() {
        let text = "[model.pulse]\nshape = \"constant\"\nepsilon0_per_kappa = 1\neta_per_inv_kappa = 3\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.0[0].contains("eta_per_inv_kappa"), "{err}");
        let ok = parse_config("[model.pulse]\nshape = \"constant\"\nepsilon0_per_kappa = 1\n")
            .unwrap();
        assert_eq!(ok.model.pulse, PulseSpec::constant(1.0));
    }
}
