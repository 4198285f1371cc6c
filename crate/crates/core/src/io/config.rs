//! TOML run configuration.
//!
//! Parsing is strict: unknown keys, wrong types and cross-field conflicts
//! are all collected and reported together, each with its dotted path.
//! Missing keys take the documented defaults of the selected preset.

use std::path::PathBuf;

use num_complex::Complex64;
use toml::{Table, Value};

use crate::equilibrium::InitialDensity;
use crate::error::{Error, Result, Violation};
use crate::experiments::{
    BarrierParams, CustomParams, DoubleSlitParams, ExperimentConfig, PacketSpec, PointerParams,
    Preset, RelaxationParams, StationaryParams, WhichWayParams, PRESET_NAMES,
};
use crate::grid::Axis;
use crate::potential::{PotentialSpec, PotentialTerm};

/// Default number of trajectories written to the trajectory CSV.
pub const DEFAULT_TRAJECTORY_OUTPUT: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub directory: Option<PathBuf>,
    /// Trajectories written to CSV (the first ones by id); 0 writes all.
    pub trajectories: usize,
    /// Write every `field_stride`-th grid point per axis to the field CSV.
    pub field_stride: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: None,
            trajectories: DEFAULT_TRAJECTORY_OUTPUT,
            field_stride: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: ExperimentConfig,
    pub output: OutputSpec,
    /// Checks that decide the exit status; `None` enables all of them.
    pub checks: Option<Vec<String>>,
}

impl RunConfig {
    pub fn preset(name: &str) -> Option<Self> {
        Some(RunConfig {
            experiment: ExperimentConfig::preset_defaults(name)?,
            output: OutputSpec::default(),
            checks: None,
        })
    }

    /// Every problem with the configuration, including cross-field ones.
    pub fn violations(&self) -> Vec<Violation> {
        let mut out = self.experiment.violations();
        if self.experiment.seed > i64::MAX as u64 {
            out.push(Violation {
                path: "seed".into(),
                message: format!("seed must be below 2^63, got {}", self.experiment.seed),
            });
        }
        if self.output.field_stride == 0 {
            out.push(Violation {
                path: "output.field_stride".into(),
                message: "must be >= 1".into(),
            });
        }
        if let Some(checks) = &self.checks {
            let valid = self.experiment.preset.check_names();
            for (i, c) in checks.iter().enumerate() {
                if !valid.contains(&c.as_str()) {
                    out.push(Violation {
                        path: format!("checks[{i}]"),
                        message: format!(
                            "unknown check {c:?} for preset {}; valid checks: {}",
                            self.experiment.preset.name(),
                            valid.join(", ")
                        ),
                    });
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::SchemaViolation(v))
        }
    }

    /// Serializes every field, so that parsing the text gives back `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.to_table()).expect("configuration tables always serialize")
    }

    fn to_table(&self) -> Table {
        let e = &self.experiment;
        let mut t = Table::new();
        t.insert("experiment".into(), e.preset.name().into());
        t.insert("samples".into(), int(e.samples));
        t.insert("seed".into(), Value::Integer(e.seed as i64));
        t.insert("check_times".into(), floats(&e.check_times));
        t.insert("masses".into(), floats(&e.masses));
        if let Some(c) = &self.checks {
            t.insert(
                "checks".into(),
                Value::Array(c.iter().map(|s| Value::String(s.clone())).collect()),
            );
        }
        let mut units = Table::new();
        units.insert("hbar".into(), e.units.hbar.into());
        t.insert("units".into(), units.into());
        let axes = e
            .axes
            .iter()
            .map(|a| {
                let mut x = Table::new();
                x.insert("min".into(), a.min.into());
                x.insert("max".into(), a.max.into());
                x.insert("points".into(), int(a.points));
                Value::Table(x)
            })
            .collect();
        let mut grid = Table::new();
        grid.insert("axes".into(), Value::Array(axes));
        t.insert("grid".into(), grid.into());
        let mut ev = Table::new();
        ev.insert("dt".into(), e.evolution.dt.into());
        ev.insert("steps".into(), int(e.evolution.steps));
        ev.insert("snapshot_stride".into(), int(e.evolution.snapshot_stride));
        t.insert("evolution".into(), ev.into());
        if !e.potential.terms.is_empty() {
            let terms = e.potential.terms.iter().map(term_to_value).collect();
            let mut p = Table::new();
            p.insert("terms".into(), Value::Array(terms));
            t.insert("potential".into(), p.into());
        }
        let mut out = Table::new();
        if let Some(d) = &self.output.directory {
            out.insert("directory".into(), d.to_string_lossy().into_owned().into());
        }
        out.insert("record_stride".into(), int(e.record_stride));
        out.insert("trajectories".into(), int(self.output.trajectories));
        out.insert("field_stride".into(), int(self.output.field_stride));
        t.insert("output".into(), out.into());
        t.insert(e.preset.name().into(), preset_to_table(&e.preset).into());
        t
    }
}

fn int(v: usize) -> Value {
    Value::Integer(v as i64)
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| Value::Float(*x)).collect())
}

fn complex(c: Complex64) -> Value {
    floats(&[c.re, c.im])
}

fn term_to_value(term: &PotentialTerm) -> Value {
    let mut t = Table::new();
    match term {
        PotentialTerm::Free => {
            t.insert("kind".into(), "free".into());
        }
        PotentialTerm::Harmonic { omega } => {
            t.insert("kind".into(), "harmonic".into());
            t.insert("omega".into(), floats(omega));
        }
        PotentialTerm::Barrier {
            height,
            lower,
            upper,
        } => {
            t.insert("kind".into(), "barrier".into());
            t.insert("height".into(), (*height).into());
            t.insert("lower".into(), floats(lower));
            t.insert("upper".into(), floats(upper));
        }
        PotentialTerm::Tabulated { values } => {
            t.insert("kind".into(), "tabulated".into());
            t.insert("values".into(), floats(values));
        }
        PotentialTerm::AbsorbingMask { width, strength } => {
            t.insert("kind".into(), "absorbing_mask".into());
            t.insert("width".into(), (*width).into());
            t.insert("strength".into(), (*strength).into());
        }
    }
    Value::Table(t)
}

fn preset_to_table(preset: &Preset) -> Table {
    let mut t = Table::new();
    match preset {
        Preset::DoubleSlit(p) => {
            t.insert("separation".into(), p.separation.into());
            t.insert("slit_width".into(), p.slit_width.into());
            t.insert("boost".into(), p.boost.into());
            t.insert("longitudinal_width".into(), p.longitudinal_width.into());
            t.insert("source".into(), p.source.into());
            t.insert("bin_points".into(), int(p.bin_points));
        }
        Preset::PointerMeasurement(p) => {
            t.insert("c1".into(), complex(p.c1));
            t.insert("c2".into(), complex(p.c2));
            t.insert("system_centers".into(), floats(&p.system_centers));
            t.insert("system_width".into(), p.system_width.into());
            t.insert("system_boost".into(), p.system_boost.into());
            t.insert("pointer_width".into(), p.pointer_width.into());
            t.insert("pointer_shift".into(), p.pointer_shift.into());
            t.insert("overlap_limit".into(), p.overlap_limit.into());
            t.insert("empty_wave".into(), p.empty_wave.into());
        }
        Preset::WhichWay(p) => {
            t.insert("separation".into(), p.separation.into());
            t.insert("slit_width".into(), p.slit_width.into());
            t.insert("pointer_width".into(), p.pointer_width.into());
            t.insert("pointer_shift".into(), p.pointer_shift.into());
            t.insert("overlap_limit".into(), p.overlap_limit.into());
            t.insert("window".into(), p.window.into());
        }
        Preset::BarrierDwell(p) => {
            if let Some(h) = p.height {
                t.insert("height".into(), h.into());
            }
            t.insert("lower".into(), p.lower.into());
            t.insert("upper".into(), p.upper.into());
            t.insert("start".into(), p.start.into());
            t.insert("width".into(), p.width.into());
            t.insert("boost".into(), p.boost.into());
        }
        Preset::Stationary(p) => {
            t.insert(
                "levels".into(),
                Value::Array(p.levels.iter().map(|&n| int(n)).collect()),
            );
            t.insert("omega".into(), p.omega.into());
            t.insert("rest_tolerance".into(), p.rest_tolerance.into());
            t.insert("motion_threshold".into(), p.motion_threshold.into());
        }
        Preset::Relaxation(p) => {
            t.insert("phase_seed".into(), Value::Integer(p.phase_seed as i64));
            t.insert(
                "modes_per_axis".into(),
                Value::Integer(p.modes_per_axis as i64),
            );
            let initial = match p.initial {
                InitialDensity::Equilibrium => Value::String("equilibrium".into()),
                InitialDensity::Mode { nx, ny } => {
                    Value::Array(vec![Value::Integer(nx as i64), Value::Integer(ny as i64)])
                }
            };
            t.insert("initial".into(), initial);
            t.insert("cell".into(), int(p.cell));
            t.insert("h_every".into(), int(p.h_every));
            t.insert("decay_ratio".into(), p.decay_ratio.into());
        }
        Preset::Custom(p) => {
            let packets = p
                .packets
                .iter()
                .map(|k| {
                    let mut x = Table::new();
                    x.insert("center".into(), floats(&k.center));
                    x.insert("width".into(), floats(&k.width));
                    x.insert("boost".into(), floats(&k.boost));
                    x.insert("amplitude".into(), complex(k.amplitude));
                    Value::Table(x)
                })
                .collect();
            t.insert("packets".into(), Value::Array(packets));
        }
    }
    t
}

/// Collects violations while keys are taken out of a table; whatever is
/// left at the end is reported as unknown.
struct Reader {
    violations: Vec<Violation>,
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn type_name(v: &Value) -> &'static str {
    v.type_str()
}

impl Reader {
    fn bad(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }

    fn finish(&mut self, table: Table, path: &str) {
        for key in table.keys() {
            self.bad(
                join(path, key),
                format!("unknown key at {}", join(path, key)),
            );
        }
    }

    fn as_f64(&mut self, v: &Value, path: &str) -> Option<f64> {
        match v {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.bad(
                    path,
                    format!("expected a number, found {}", type_name(other)),
                );
                None
            }
        }
    }

    fn as_count(&mut self, v: &Value, path: &str) -> Option<usize> {
        match v {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            Value::Integer(i) => {
                self.bad(path, format!("expected a non-negative integer, found {i}"));
                None
            }
            other => {
                self.bad(
                    path,
                    format!("expected an integer, found {}", type_name(other)),
                );
                None
            }
        }
    }

    fn f64(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut f64) {
        if let Some(v) = t.remove(key) {
            if let Some(x) = self.as_f64(&v, &join(path, key)) {
                *slot = x;
            }
        }
    }

    fn count(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut usize) {
        if let Some(v) = t.remove(key) {
            if let Some(x) = self.as_count(&v, &join(path, key)) {
                *slot = x;
            }
        }
    }

    fn u64(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut u64) {
        let mut c = *slot as usize;
        let before = self.violations.len();
        self.count(t, key, path, &mut c);
        if self.violations.len() == before {
            *slot = c as u64;
        }
    }

    fn u32(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut u32) {
        let mut c = *slot as usize;
        let before = self.violations.len();
        self.count(t, key, path, &mut c);
        if self.violations.len() == before {
            if c > u32::MAX as usize {
                self.bad(join(path, key), "value too large");
            } else {
                *slot = c as u32;
            }
        }
    }

    fn bool(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut bool) {
        match t.remove(key) {
            Some(Value::Boolean(b)) => *slot = b,
            Some(other) => self.bad(
                join(path, key),
                format!("expected a boolean, found {}", type_name(&other)),
            ),
            None => {}
        }
    }

    fn array(&mut self, v: Value, path: &str) -> Option<Vec<Value>> {
        match v {
            Value::Array(a) => Some(a),
            other => {
                self.bad(
                    path,
                    format!("expected an array, found {}", type_name(&other)),
                );
                None
            }
        }
    }

    fn f64_list(&mut self, v: Value, path: &str) -> Option<Vec<f64>> {
        let items = self.array(v, path)?;
        let before = self.violations.len();
        let out: Vec<f64> = items
            .iter()
            .enumerate()
            .filter_map(|(i, x)| self.as_f64(x, &format!("{path}[{i}]")))
            .collect();
        (self.violations.len() == before).then_some(out)
    }

    fn count_list(&mut self, v: Value, path: &str) -> Option<Vec<usize>> {
        let items = self.array(v, path)?;
        let before = self.violations.len();
        let out: Vec<usize> = items
            .iter()
            .enumerate()
            .filter_map(|(i, x)| self.as_count(x, &format!("{path}[{i}]")))
            .collect();
        (self.violations.len() == before).then_some(out)
    }

    fn f64s(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut Vec<f64>) {
        if let Some(v) = t.remove(key) {
            if let Some(x) = self.f64_list(v, &join(path, key)) {
                *slot = x;
            }
        }
    }

    fn complex(&mut self, t: &mut Table, key: &str, path: &str, slot: &mut Complex64) {
        let Some(v) = t.remove(key) else { return };
        let p = join(path, key);
        match v {
            Value::Float(_) | Value::Integer(_) => {
                if let Some(x) = self.as_f64(&v, &p) {
                    *slot = Complex64::new(x, 0.0);
                }
            }
            other => {
                if let Some(x) = self.f64_list(other, &p) {
                    if x.len() == 2 {
                        *slot = Complex64::new(x[0], x[1]);
                    } else {
                        self.bad(p, "expected a number or [re, im]");
                    }
                }
            }
        }
    }

    fn table(&mut self, t: &mut Table, key: &str, path: &str) -> Option<Table> {
        match t.remove(key) {
            Some(Value::Table(x)) => Some(x),
            Some(other) => {
                self.bad(
                    join(path, key),
                    format!("expected a table, found {}", type_name(&other)),
                );
                None
            }
            None => None,
        }
    }

    fn tables(&mut self, v: Value, path: &str) -> Vec<(String, Table)> {
        let Some(items) = self.array(v, path) else {
            return vec![];
        };
        let mut out = Vec::new();
        for (i, x) in items.into_iter().enumerate() {
            let p = format!("{path}[{i}]");
            match x {
                Value::Table(t) => out.push((p, t)),
                other => self.bad(p, format!("expected a table, found {}", type_name(&other))),
            }
        }
        out
    }
}

/// Parses configuration text with the preset defaults filled in.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_with(text, None)
}

/// As [`parse_config`], with `experiment` overriding the preset named in the
/// text (or supplying it when the text has none).
pub fn parse_config_with(text: &str, experiment: Option<&str>) -> Result<RunConfig> {
    let mut root: Table = toml::from_str(text).map_err(|e| {
        Error::SchemaViolation(vec![Violation {
            path: "<document>".into(),
            message: e.message().trim().to_string(),
        }])
    })?;
    let mut r = Reader { violations: vec![] };

    let named = match root.remove("experiment") {
        Some(Value::String(s)) => Some(s),
        Some(other) => {
            r.bad(
                "experiment",
                format!("expected a string, found {}", type_name(&other)),
            );
            None
        }
        None => None,
    };
    let name = experiment.map(str::to_string).or(named);
    let mut cfg = match name.as_deref() {
        Some(n) => match RunConfig::preset(n) {
            Some(c) => c,
            None => {
                r.bad(
                    "experiment",
                    format!(
                        "unknown preset {n:?}; expected one of {}",
                        PRESET_NAMES.join(", ")
                    ),
                );
                RunConfig::preset("custom").expect("custom preset exists")
            }
        },
        None => {
            r.bad("experiment", "missing required key");
            RunConfig::preset("custom").expect("custom preset exists")
        }
    };
    let selected = cfg.experiment.preset.name();

    {
        let e = &mut cfg.experiment;
        r.count(&mut root, "samples", "", &mut e.samples);
        r.u64(&mut root, "seed", "", &mut e.seed);
        r.f64s(&mut root, "check_times", "", &mut e.check_times);
        r.f64s(&mut root, "masses", "", &mut e.masses);
    }
    if let Some(v) = root.remove("checks") {
        if let Some(items) = r.array(v, "checks") {
            let mut names = Vec::new();
            for (i, x) in items.into_iter().enumerate() {
                match x {
                    Value::String(s) => names.push(s),
                    other => r.bad(
                        format!("checks[{i}]"),
                        format!("expected a string, found {}", type_name(&other)),
                    ),
                }
            }
            cfg.checks = Some(names);
        }
    }
    if let Some(mut units) = r.table(&mut root, "units", "") {
        r.f64(&mut units, "hbar", "units", &mut cfg.experiment.units.hbar);
        r.finish(units, "units");
    }
    if let Some(mut grid) = r.table(&mut root, "grid", "") {
        if let Some(v) = grid.remove("axes") {
            let mut axes = Vec::new();
            for (p, mut a) in r.tables(v, "grid.axes") {
                let mut axis = Axis::new(0.0, 0.0, 0);
                let mut missing = false;
                for key in ["min", "max", "points"] {
                    if !a.contains_key(key) {
                        r.bad(join(&p, key), "missing required key");
                        missing = true;
                    }
                }
                r.f64(&mut a, "min", &p, &mut axis.min);
                r.f64(&mut a, "max", &p, &mut axis.max);
                r.count(&mut a, "points", &p, &mut axis.points);
                r.finish(a, &p);
                if !missing {
                    axes.push(axis);
                }
            }
            cfg.experiment.axes = axes;
        }
        r.finish(grid, "grid");
    }
    if let Some(mut ev) = r.table(&mut root, "evolution", "") {
        let e = &mut cfg.experiment.evolution;
        r.f64(&mut ev, "dt", "evolution", &mut e.dt);
        r.count(&mut ev, "steps", "evolution", &mut e.steps);
        r.count(
            &mut ev,
            "snapshot_stride",
            "evolution",
            &mut e.snapshot_stride,
        );
        r.finish(ev, "evolution");
    }
    if let Some(mut pot) = r.table(&mut root, "potential", "") {
        if let Some(v) = pot.remove("terms") {
            let mut terms = Vec::new();
            for (p, t) in r.tables(v, "potential.terms") {
                if let Some(term) = parse_term(&mut r, t, &p) {
                    terms.push(term);
                }
            }
            cfg.experiment.potential = PotentialSpec { terms };
        }
        r.finish(pot, "potential");
    }
    if let Some(mut out) = r.table(&mut root, "output", "") {
        match out.remove("directory") {
            Some(Value::String(s)) => cfg.output.directory = Some(PathBuf::from(s)),
            Some(other) => r.bad(
                "output.directory",
                format!("expected a string, found {}", type_name(&other)),
            ),
            None => {}
        }
        r.count(
            &mut out,
            "record_stride",
            "output",
            &mut cfg.experiment.record_stride,
        );
        r.count(
            &mut out,
            "trajectories",
            "output",
            &mut cfg.output.trajectories,
        );
        r.count(
            &mut out,
            "field_stride",
            "output",
            &mut cfg.output.field_stride,
        );
        r.finish(out, "output");
    }
    for other in PRESET_NAMES {
        if other != selected && root.contains_key(other) {
            root.remove(other);
            r.bad(
                other,
                format!("section [{other}] does not apply to preset {selected}"),
            );
        }
    }
    if let Some(section) = r.table(&mut root, selected, "") {
        parse_preset(&mut r, &mut cfg.experiment.preset, section, selected);
    }
    r.finish(root, "");

    let mut violations = r.violations;
    if violations.is_empty() {
        violations = cfg.violations();
    }
    if violations.is_empty() {
        Ok(cfg)
    } else {
        Err(Error::SchemaViolation(violations))
    }
}

fn parse_term(r: &mut Reader, mut t: Table, path: &str) -> Option<PotentialTerm> {
    let kind = match t.remove("kind") {
        Some(Value::String(s)) => s,
        Some(other) => {
            r.bad(
                join(path, "kind"),
                format!("expected a string, found {}", type_name(&other)),
            );
            return None;
        }
        None => {
            r.bad(join(path, "kind"), "missing required key");
            return None;
        }
    };
    let need = |r: &mut Reader, t: &Table, keys: &[&str]| {
        let mut ok = true;
        for k in keys {
            if !t.contains_key(*k) {
                r.bad(join(path, k), "missing required key");
                ok = false;
            }
        }
        ok
    };
    let term = match kind.as_str() {
        "free" => Some(PotentialTerm::Free),
        "harmonic" => {
            let ok = need(r, &t, &["omega"]);
            let mut omega = vec![];
            r.f64s(&mut t, "omega", path, &mut omega);
            ok.then_some(PotentialTerm::Harmonic { omega })
        }
        "barrier" => {
            let ok = need(r, &t, &["height", "lower", "upper"]);
            let (mut height, mut lower, mut upper) = (0.0, vec![], vec![]);
            r.f64(&mut t, "height", path, &mut height);
            r.f64s(&mut t, "lower", path, &mut lower);
            r.f64s(&mut t, "upper", path, &mut upper);
            ok.then_some(PotentialTerm::Barrier {
                height,
                lower,
                upper,
            })
        }
        "tabulated" => {
            let ok = need(r, &t, &["values"]);
            let mut values = vec![];
            r.f64s(&mut t, "values", path, &mut values);
            ok.then_some(PotentialTerm::Tabulated { values })
        }
        "absorbing_mask" => {
            let ok = need(r, &t, &["width", "strength"]);
            let (mut width, mut strength) = (0.0, 0.0);
            r.f64(&mut t, "width", path, &mut width);
            r.f64(&mut t, "strength", path, &mut strength);
            ok.then_some(PotentialTerm::AbsorbingMask { width, strength })
        }
        other => {
            r.bad(
                join(path, "kind"),
                format!(
                    "unknown potential kind {other:?}; expected free, harmonic, barrier, tabulated or absorbing_mask"
                ),
            );
            None
        }
    };
    r.finish(t, path);
    term
}

fn parse_preset(r: &mut Reader, preset: &mut Preset, mut t: Table, path: &str) {
    match preset {
        Preset::DoubleSlit(p) => double_slit(r, p, &mut t, path),
        Preset::PointerMeasurement(p) => pointer(r, p, &mut t, path),
        Preset::WhichWay(p) => which_way(r, p, &mut t, path),
        Preset::BarrierDwell(p) => barrier(r, p, &mut t, path),
        Preset::Stationary(p) => stationary(r, p, &mut t, path),
        Preset::Relaxation(p) => relaxation(r, p, &mut t, path),
        Preset::Custom(p) => custom(r, p, &mut t, path),
    }
    r.finish(t, path);
}

fn double_slit(r: &mut Reader, p: &mut DoubleSlitParams, t: &mut Table, path: &str) {
    r.f64(t, "separation", path, &mut p.separation);
    r.f64(t, "slit_width", path, &mut p.slit_width);
    r.f64(t, "boost", path, &mut p.boost);
    r.f64(t, "longitudinal_width", path, &mut p.longitudinal_width);
    r.f64(t, "source", path, &mut p.source);
    r.count(t, "bin_points", path, &mut p.bin_points);
}

fn pointer(r: &mut Reader, p: &mut PointerParams, t: &mut Table, path: &str) {
    r.complex(t, "c1", path, &mut p.c1);
    r.complex(t, "c2", path, &mut p.c2);
    let mut centers = p.system_centers.to_vec();
    r.f64s(t, "system_centers", path, &mut centers);
    if centers.len() == 2 {
        p.system_centers = [centers[0], centers[1]];
    } else {
        r.bad(join(path, "system_centers"), "expected two centres");
    }
    r.f64(t, "system_width", path, &mut p.system_width);
    r.f64(t, "system_boost", path, &mut p.system_boost);
    r.f64(t, "pointer_width", path, &mut p.pointer_width);
    r.f64(t, "pointer_shift", path, &mut p.pointer_shift);
    r.f64(t, "overlap_limit", path, &mut p.overlap_limit);
    r.bool(t, "empty_wave", path, &mut p.empty_wave);
}

fn which_way(r: &mut Reader, p: &mut WhichWayParams, t: &mut Table, path: &str) {
    r.f64(t, "separation", path, &mut p.separation);
    r.f64(t, "slit_width", path, &mut p.slit_width);
    r.f64(t, "pointer_width", path, &mut p.pointer_width);
    r.f64(t, "pointer_shift", path, &mut p.pointer_shift);
    r.f64(t, "overlap_limit", path, &mut p.overlap_limit);
    r.f64(t, "window", path, &mut p.window);
}

fn barrier(r: &mut Reader, p: &mut BarrierParams, t: &mut Table, path: &str) {
    if t.contains_key("height") {
        let mut h = 0.0;
        r.f64(t, "height", path, &mut h);
        p.height = Some(h);
    }
    r.f64(t, "lower", path, &mut p.lower);
    r.f64(t, "upper", path, &mut p.upper);
    r.f64(t, "start", path, &mut p.start);
    r.f64(t, "width", path, &mut p.width);
    r.f64(t, "boost", path, &mut p.boost);
}

fn stationary(r: &mut Reader, p: &mut StationaryParams, t: &mut Table, path: &str) {
    if let Some(v) = t.remove("levels") {
        if let Some(levels) = r.count_list(v, &join(path, "levels")) {
            p.levels = levels;
        }
    }
    r.f64(t, "omega", path, &mut p.omega);
    r.f64(t, "rest_tolerance", path, &mut p.rest_tolerance);
    r.f64(t, "motion_threshold", path, &mut p.motion_threshold);
}

fn relaxation(r: &mut Reader, p: &mut RelaxationParams, t: &mut Table, path: &str) {
    r.u64(t, "phase_seed", path, &mut p.phase_seed);
    r.u32(t, "modes_per_axis", path, &mut p.modes_per_axis);
    match t.remove("initial") {
        Some(Value::String(s)) if s == "equilibrium" => p.initial = InitialDensity::Equilibrium,
        Some(Value::String(s)) if s == "ground" => {
            p.initial = InitialDensity::Mode { nx: 1, ny: 1 }
        }
        Some(v @ Value::Array(_)) => {
            let p2 = join(path, "initial");
            if let Some(n) = r.count_list(v, &p2) {
                if n.len() == 2 {
                    p.initial = InitialDensity::Mode {
                        nx: n[0] as u32,
                        ny: n[1] as u32,
                    };
                } else {
                    r.bad(p2, "expected [nx, ny]");
                }
            }
        }
        Some(_) => r.bad(
            join(path, "initial"),
            "expected \"equilibrium\", \"ground\" or [nx, ny]",
        ),
        None => {}
    }
    r.count(t, "cell", path, &mut p.cell);
    r.count(t, "h_every", path, &mut p.h_every);
    r.f64(t, "decay_ratio", path, &mut p.decay_ratio);
}

fn custom(r: &mut Reader, p: &mut CustomParams, t: &mut Table, path: &str) {
    let Some(v) = t.remove("packets") else { return };
    let mut packets = Vec::new();
    for (pp, mut k) in r.tables(v, &join(path, "packets")) {
        let mut packet = PacketSpec {
            center: vec![],
            width: vec![],
            boost: vec![],
            amplitude: Complex64::new(1.0, 0.0),
        };
        for key in ["center", "width"] {
            if !k.contains_key(key) {
                r.bad(join(&pp, key), "missing required key");
            }
        }
        r.f64s(&mut k, "center", &pp, &mut packet.center);
        r.f64s(&mut k, "width", &pp, &mut packet.width);
        packet.boost = vec![0.0; packet.center.len()];
        r.f64s(&mut k, "boost", &pp, &mut packet.boost);
        r.complex(&mut k, "amplitude", &pp, &mut packet.amplitude);
        r.finish(k, &pp);
        packets.push(packet);
    }
    p.packets = packets;
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paths(e: Error) -> Vec<String> {
        match e {
            Error::SchemaViolation(v) => v.into_iter().map(|x| x.path).collect(),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn minimal_double_slit_takes_defaults() {
        let cfg = parse_config("experiment = \"double_slit\"\n").unwrap();
        assert_eq!(cfg, RunConfig::preset("double_slit").unwrap());
    }

    #[test]
    fn stride_must_divide_steps() {
        let text = "experiment = \"custom\"\n[evolution]\nsteps = 1001\nsnapshot_stride = 5\n";
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("evolution.steps") && msg.contains("evolution.snapshot_stride"));
    }

    #[test]
    fn unknown_keys_are_all_reported() {
        let text =
            "experiment = \"custom\"\nbogus = 1\n[grid]\nspacing = 2\n[output]\ncolor = \"red\"\n";
        let p = paths(parse_config(text).unwrap_err());
        assert_eq!(p, vec!["grid.spacing", "output.color", "bogus"]);
    }

    #[test]
    fn type_errors_are_path_addressed() {
        let text =
            "experiment = \"stationary\"\nsamples = \"many\"\n[stationary]\nlevels = [0, -1]\n";
        let p = paths(parse_config(text).unwrap_err());
        assert_eq!(p, vec!["samples", "stationary.levels[1]"]);
    }

    #[test]
    fn foreign_preset_section_rejected() {
        let text = "experiment = \"custom\"\n[double_slit]\nseparation = 3\n";
        assert_eq!(paths(parse_config(text).unwrap_err()), vec!["double_slit"]);
    }

    #[test]
    fn round_trip_every_preset() {
        for name in PRESET_NAMES {
            let mut cfg = RunConfig::preset(name).unwrap();
            cfg.output.directory = Some(PathBuf::from("out/dir"));
            cfg.checks = Some(vec![cfg.experiment.preset.check_names()[0].to_string()]);
            let text = cfg.to_toml();
            assert_eq!(parse_config(&text).unwrap(), cfg, "{name}:\n{text}");
        }
    }

    #[test]
    fn potential_terms_parse() {
        let text = r#"
experiment = "custom"
[[potential.terms]]
kind = "harmonic"
omega = [1.0]
[[potential.terms]]
kind = "absorbing_mask"
width = 2.0
strength = 1.5
"#;
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.experiment.potential.terms.len(), 2);
        let back = parse_config(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn experiment_override() {
        let cfg = parse_config_with("seed = 5\n", Some("stationary")).unwrap();
        assert_eq!(cfg.experiment.preset.name(), "stationary");
        assert_eq!(cfg.experiment.seed, 5);
        assert!(parse_config("seed = 5\n").is_err());
    }
}
