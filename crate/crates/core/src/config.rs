//! Flat `key = value` scenario files with `[section]` headers.
//!
//! Recognized sections: `[model]`, `[habitat]`, `[kernel.prey]`,
//! `[kernel.predator]`, `[grid]`, `[sim]` and `[scenario]`. Unknown
//! sections or keys, duplicate keys and malformed lines are rejected.
//! Table paths are resolved relative to the directory of the file.

use crate::error::{Error, Result};
use crate::model::{
    read_two_column, validate_model, DispersalMode, HabitatProfile, Kernel, ModelParams,
    ValidatedModel, DEFAULT_SAMPLES,
};
use crate::sim::{InitialData, InitialKind, Thresholds};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;

const SECTIONS: [&str; 7] = [
    "model",
    "habitat",
    "kernel.prey",
    "kernel.predator",
    "grid",
    "sim",
    "scenario",
];

/// A value with the line it came from; overrides carry line 0.
#[derive(Clone, Debug, PartialEq)]
struct Entry {
    value: String,
    line: usize,
}

/// Sections of raw entries, in file order of first appearance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        let mut current: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = line.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest.strip_suffix(']').ok_or_else(|| Error::ConfigSyntax {
                    line: lineno,
                    reason: "section header must end with `]`".into(),
                })?;
                let name = name.trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::ConfigSyntax {
                        line: lineno,
                        reason: format!("unknown section `[{name}]`"),
                    });
                }
                raw.sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigSyntax {
                line: lineno,
                reason: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(Error::ConfigSyntax {
                    line: lineno,
                    reason: "empty key".into(),
                });
            }
            let section = current.as_ref().ok_or_else(|| Error::ConfigSyntax {
                line: lineno,
                reason: format!("key `{key}` appears before any section header"),
            })?;
            let map = raw
                .sections
                .get_mut(section)
                .expect("section inserted above");
            if let Some(prev) = map.get(key) {
                return Err(Error::ConfigSyntax {
                    line: lineno,
                    reason: format!(
                        "duplicate key `{key}` in [{section}] (lines {} and {lineno})",
                        prev.line
                    ),
                });
            }
            map.insert(
                key.to_string(),
                Entry {
                    value: value.to_string(),
                    line: lineno,
                },
            );
        }
        Ok(raw)
    }

    /// Applies `section.key=value`; the section is everything before the
    /// last dot.
    pub fn apply_override(&mut self, spec: &str) -> Result<()> {
        let (path, value) = spec.split_once('=').ok_or_else(|| {
            Error::Config(format!("override `{spec}` is not `section.key=value`"))
        })?;
        let (section, key) = path
            .trim()
            .rsplit_once('.')
            .ok_or_else(|| Error::Config(format!("override `{spec}` lacks a section")))?;
        if !SECTIONS.contains(&section) {
            return Err(Error::Config(format!(
                "override names unknown section `[{section}]`"
            )));
        }
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(
                key.to_string(),
                Entry {
                    value: value.trim().to_string(),
                    line: 0,
                },
            );
        Ok(())
    }
}

/// Typed access to one section; records effective values and rejects
/// leftover keys on `finish`.
struct Section<'a> {
    name: &'static str,
    entries: BTreeMap<String, Entry>,
    used: BTreeSet<String>,
    echo: &'a mut BTreeMap<String, String>,
}

impl<'a> Section<'a> {
    fn new(raw: &RawConfig, name: &'static str, echo: &'a mut BTreeMap<String, String>) -> Self {
        Self {
            name,
            entries: raw.sections.get(name).cloned().unwrap_or_default(),
            used: BTreeSet::new(),
            echo,
        }
    }

    fn present(&self) -> bool {
        !self.entries.is_empty()
    }

    fn raw(&mut self, key: &str) -> Option<Entry> {
        self.used.insert(key.to_string());
        self.entries.get(key).cloned()
    }

    fn bad(&self, key: &str, e: &Entry, reason: impl std::fmt::Display) -> Error {
        let at = if e.line == 0 {
            "override".to_string()
        } else {
            format!("line {}", e.line)
        };
        Error::Config(format!("[{}] {key} ({at}): {reason}", self.name))
    }

    fn echo(&mut self, key: &str, value: String) {
        self.echo.insert(format!("{}.{key}", self.name), value);
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<f64>> {
        let Some(e) = self.raw(key) else {
            return Ok(None);
        };
        let v: f64 = e
            .value
            .parse()
            .map_err(|_| self.bad(key, &e, format!("`{}` is not a number", e.value)))?;
        if !v.is_finite() {
            return Err(self.bad(key, &e, "must be finite"));
        }
        self.echo(key, format!("{v:?}"));
        Ok(Some(v))
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.opt_f64(key)? {
            Some(v) => Ok(v),
            None => {
                self.echo(key, format!("{default:?}"));
                Ok(default)
            }
        }
    }

    fn f64_req(&mut self, key: &str) -> Result<f64> {
        self.opt_f64(key)?
            .ok_or_else(|| Error::Config(format!("[{}] missing required key `{key}`", self.name)))
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        let Some(e) = self.raw(key) else {
            self.echo(key, default.to_string());
            return Ok(default);
        };
        let v: usize = e.value.parse().map_err(|_| {
            self.bad(
                key,
                &e,
                format!("`{}` is not a nonnegative integer", e.value),
            )
        })?;
        self.echo(key, v.to_string());
        Ok(v)
    }

    fn str_or(&mut self, key: &str, default: &str) -> String {
        let v = self
            .raw(key)
            .map(|e| e.value)
            .unwrap_or_else(|| default.to_string());
        self.echo(key, v.clone());
        v
    }

    fn opt_str(&mut self, key: &str) -> Option<String> {
        let v = self.raw(key).map(|e| e.value)?;
        self.echo(key, v.clone());
        Some(v)
    }

    fn list(&mut self, key: &str) -> Result<Vec<f64>> {
        let Some(e) = self.raw(key) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for item in e.value.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let v: f64 = item
                .parse()
                .map_err(|_| self.bad(key, &e, format!("`{item}` is not a number")))?;
            out.push(v);
        }
        let shown: Vec<String> = out.iter().map(|v| format!("{v:?}")).collect();
        self.echo(key, shown.join(","));
        Ok(out)
    }

    fn parsed<T: FromStr<Err = Error>>(&mut self, key: &str, default: &str) -> Result<T> {
        let e = self.raw(key).unwrap_or(Entry {
            value: default.to_string(),
            line: 0,
        });
        let v = e.value.parse::<T>().map_err(|err| self.bad(key, &e, err))?;
        self.echo(key, e.value);
        Ok(v)
    }

    fn finish(self) -> Result<()> {
        for (key, e) in &self.entries {
            if !self.used.contains(key) {
                return Err(self.bad(key, e, "unknown key"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaveType {
    Front,
    Mixed,
    /// Front when `ab < 1`, mixed otherwise.
    Auto,
}

impl FromStr for WaveType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "front" => Ok(WaveType::Front),
            "mixed" => Ok(WaveType::Mixed),
            "auto" => Ok(WaveType::Auto),
            other => Err(Error::Config(format!(
                "unknown wave type `{other}` (expected front, mixed or auto)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodChoice {
    Monotone,
    Relaxation,
    Both,
}

impl FromStr for MethodChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "monotone" => Ok(MethodChoice::Monotone),
            "relaxation" => Ok(MethodChoice::Relaxation),
            "both" => Ok(MethodChoice::Both),
            other => Err(Error::Config(format!(
                "unknown method `{other}` (expected monotone, relaxation or both)"
            ))),
        }
    }
}

struct KernelFamilyName(String);

impl FromStr for KernelFamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raised-cosine" | "uniform" | "table" => Ok(Self(s.to_string())),
            other => Err(Error::Config(format!(
                "unknown kernel family `{other}` (expected raised-cosine, uniform or table)"
            ))),
        }
    }
}

struct HabitatFamilyName(String);

impl FromStr for HabitatFamilyName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" | "table" | "homogeneous" => Ok(Self(s.to_string())),
            other => Err(Error::Config(format!(
                "unknown habitat family `{other}` (expected tanh, table or homogeneous)"
            ))),
        }
    }
}

/// Wave window `[z_min, z_max]` with spacing `h`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub z_min: f64,
    pub z_max: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub t_end: f64,
    pub dx: f64,
    /// Domain ends; sized from the guard when absent.
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub dt: Option<f64>,
    pub cadence: f64,
    pub frame_step: f64,
    /// Fastest probe frame; defaults to the guard speed plus one.
    pub frame_max: Option<f64>,
    pub snapshots: Vec<f64>,
    pub initial: InitialData,
    pub thresholds: Thresholds,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSection {
    pub id: String,
    pub wave_type: WaveType,
    pub method: MethodChoice,
    pub tol: f64,
    pub maxiter: usize,
    pub beta_factor: f64,
    pub slack_tol: f64,
    pub relax_t_max: f64,
    pub relax_tol: f64,
    /// Climate speeds for `sweep`, listed explicitly ...
    pub s_list: Vec<f64>,
    /// ... or as `s_count` evenly spaced values in `[s_min, s_max]`.
    pub s_range: Option<(f64, f64, usize)>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub model: ValidatedModel,
    pub grid: GridConfig,
    pub sim: SimConfig,
    pub scenario: ScenarioSection,
    /// Effective `section.key = value` pairs, defaults included.
    pub echo: BTreeMap<String, String>,
}

impl ScenarioConfig {
    /// First 16 hex digits of the SHA-256 of the effective parameters.
    pub fn param_hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in &self.echo {
            h.update(k.as_bytes());
            h.update(b"=");
            h.update(v.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())[..16].to_string()
    }

    /// The sweep speeds: explicit list or evenly spaced range.
    pub fn sweep_speeds(&self) -> Vec<f64> {
        if !self.scenario.s_list.is_empty() {
            return self.scenario.s_list.clone();
        }
        match self.scenario.s_range {
            Some((lo, _, 1)) => vec![lo],
            Some((lo, hi, n)) => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
            None => Vec::new(),
        }
    }
}

fn load_kernel(sec: &mut Section<'_>, base: &Path) -> Result<Kernel> {
    let family: KernelFamilyName = sec.parsed("family", "raised-cosine")?;
    let kernel = match family.0.as_str() {
        "table" => {
            let file = sec.opt_str("file").ok_or_else(|| {
                Error::Config(format!("[{}] table kernel needs `file`", sec.name))
            })?;
            let (y, j) = read_two_column(&resolve(base, &file))?;
            Kernel::from_table(y, j)?
        }
        name => {
            let radius = sec.f64_or("radius", 1.0)?;
            let samples = sec.usize_or("samples", DEFAULT_SAMPLES)?;
            if name == "uniform" {
                Kernel::uniform(radius, samples)?
            } else {
                Kernel::raised_cosine(radius, samples)?
            }
        }
    };
    Ok(kernel)
}

fn resolve(base: &Path, file: &str) -> PathBuf {
    let p = Path::new(file);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parses, defaults and validates a scenario; `base` resolves table paths.
pub fn parse_config(text: &str, base: &Path) -> Result<ScenarioConfig> {
    parse_config_with(text, base, &[])
}

pub fn parse_config_with(text: &str, base: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let mut raw = RawConfig::parse(text)?;
    for o in overrides {
        raw.apply_override(o)?;
    }
    build(&raw, base)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<ScenarioConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config_with(&text, base, overrides)
}

fn build(raw: &RawConfig, base: &Path) -> Result<ScenarioConfig> {
    let mut echo = BTreeMap::new();
    if !raw.sections.contains_key("model") {
        return Err(Error::Config("missing [model] section".into()));
    }

    let mut sec = Section::new(raw, "model", &mut echo);
    let mode: DispersalMode = sec.parsed("mode", "nonlocal")?;
    let params = ModelParams {
        d1: sec.f64_or("d1", 1.0)?,
        d2: sec.f64_or("d2", 1.0)?,
        r1: sec.f64_or("r1", 1.0)?,
        r2: sec.f64_or("r2", 1.0)?,
        a: sec.f64_req("a")?,
        b: sec.f64_req("b")?,
        s: sec.f64_req("s")?,
        mode,
    };
    sec.finish()?;
    params.check()?;

    let mut sec = Section::new(raw, "habitat", &mut echo);
    let family: HabitatFamilyName = sec.parsed("family", "tanh")?;
    let habitat = match family.0.as_str() {
        "homogeneous" => HabitatProfile::homogeneous(),
        "table" => {
            let file = sec
                .opt_str("file")
                .ok_or_else(|| Error::Config("[habitat] table habitat needs `file`".into()))?;
            let rho = sec.f64_req("rho")?;
            let (z, alpha) = read_two_column(&resolve(base, &file))?;
            HabitatProfile::table(z, alpha, rho)?
        }
        _ => HabitatProfile::tanh(sec.f64_or("alpha_minus", -1.0)?, sec.f64_or("gamma", 1.0)?)?,
    };
    let habitat = habitat.with_offset(sec.f64_or("offset", 0.0)?);
    sec.finish()?;

    let kernels = if params.mode == DispersalMode::Nonlocal {
        let mut sp = Section::new(raw, "kernel.prey", &mut echo);
        let prey = load_kernel(&mut sp, base)?;
        sp.finish()?;
        let mut sq = Section::new(raw, "kernel.predator", &mut echo);
        let pred = load_kernel(&mut sq, base)?;
        sq.finish()?;
        Some((prey, pred))
    } else {
        for name in ["kernel.prey", "kernel.predator"] {
            if Section::new(raw, name, &mut echo).present() {
                eprintln!("warning: [{name}] ignored in local mode");
            }
        }
        None
    };
    let model = validate_model(params, kernels, habitat)?;

    let mut sec = Section::new(raw, "grid", &mut echo);
    let grid = GridConfig {
        z_min: sec.f64_or("z_min", -200.0)?,
        z_max: sec.f64_or("z_max", 200.0)?,
        h: sec.f64_or("h", 0.1)?,
    };
    sec.finish()?;
    crate::wave::WaveGrid::new(grid.z_min, grid.z_max, grid.h)?;

    let mut sec = Section::new(raw, "sim", &mut echo);
    let default_dx = if model.is_local() {
        0.25
    } else {
        (model.max_radius() / 8.0).min(0.25)
    };
    let b = model.params.b;
    let thresholds = Thresholds {
        band_eps: sec.f64_or("band_eps", 0.1)?,
        eps_ext: sec.f64_or("eps_ext", 1e-3)?,
        eps_sat: sec.f64_or("eps_sat", 0.05)?,
        eps_coex: sec.f64_or("eps_coex", 0.05)?,
        v_min: sec.f64_or("v_min", 1e-3)?,
        kappa_factor: sec.f64_or("kappa_factor", 0.5)?,
        window_fraction: sec.f64_or("window_fraction", 0.2)?,
    };
    let sim = SimConfig {
        t_end: sec.f64_or("t_end", 400.0)?,
        dx: sec.f64_or("dx", default_dx)?,
        x_min: sec.opt_f64("x_min")?,
        x_max: sec.opt_f64("x_max")?,
        dt: sec.opt_f64("dt")?,
        cadence: sec.f64_or("cadence", 1.0)?,
        frame_step: sec.f64_or("frame_step", 0.05)?,
        frame_max: sec.opt_f64("frame_max")?,
        snapshots: sec.list("snapshots")?,
        initial: InitialData {
            kind: sec.parsed::<InitialKind>("initial", "bump")?,
            center: sec.f64_or("center", 10.0)?,
            width: sec.f64_or("width", 10.0)?,
            amplitude_u: sec.f64_or("amplitude_u", 1.0)?,
            amplitude_v: sec.f64_or("amplitude_v", 0.5 * (b - 1.0))?,
        },
        thresholds,
    };
    sec.finish()?;
    if !(sim.t_end >= 0.0) || !(sim.dx > 0.0) || !(sim.cadence > 0.0) || !(sim.frame_step > 0.0) {
        return Err(Error::Config(
            "[sim] t_end must be nonnegative; dx, cadence and frame_step positive".into(),
        ));
    }

    let mut sec = Section::new(raw, "scenario", &mut echo);
    let s_list = sec.list("s_list")?;
    let s_range = match (sec.opt_f64("s_min")?, sec.opt_f64("s_max")?) {
        (Some(lo), Some(hi)) => Some((lo, hi, sec.usize_or("s_count", 5)?)),
        (None, None) => None,
        _ => {
            return Err(Error::Config(
                "[scenario] s_min and s_max go together".into(),
            ))
        }
    };
    let scenario = ScenarioSection {
        id: sec.str_or("id", "scenario"),
        wave_type: sec.parsed("wave_type", "auto")?,
        method: sec.parsed("method", "monotone")?,
        tol: sec.f64_or("tol", 1e-8)?,
        maxiter: sec.usize_or("maxiter", 100_000)?,
        beta_factor: sec.f64_or("beta_factor", 1.1)?,
        slack_tol: sec.f64_or("slack_tol", 1e-3)?,
        relax_t_max: sec.f64_or("relax_t_max", 5000.0)?,
        relax_tol: sec.f64_or("relax_tol", 1e-9)?,
        s_list,
        s_range,
    };
    sec.finish()?;

    Ok(ScenarioConfig {
        model,
        grid,
        sim,
        scenario,
        echo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\na = 0.4\nb = 2\ns = 0.5\n";

    fn parse(text: &str) -> Result<ScenarioConfig> {
        parse_config(text, Path::new("."))
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.model.params.d1, 1.0);
        assert_eq!(c.model.params.mode, DispersalMode::Nonlocal);
        assert_eq!(
            c.grid,
            GridConfig {
                z_min: -200.0,
                z_max: 200.0,
                h: 0.1
            }
        );
        assert_eq!(c.sim.t_end, 400.0);
        assert_eq!(c.sim.dx, 0.125);
        assert_eq!(c.scenario.wave_type, WaveType::Auto);
        assert_eq!(c.echo["kernel.prey.family"], "raised-cosine");
        assert_eq!(c.echo["model.s"], "0.5");
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let err = parse("[model]\na = 0.4\nb = 2\na = 0.3\ns = 1\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::ConfigSyntax { line: 4, .. }));
        assert!(
            msg.contains("`a`") && msg.contains("lines 2 and 4"),
            "{msg}"
        );
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_speed_is_semantic_error() {
        let err = parse("[model]\na = 0.4\nb = 2\ns = -1\n").unwrap_err();
        assert!(
            err.to_string().contains("climate speed must be positive"),
            "{err}"
        );
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn b_at_most_one_names_rule() {
        let err = parse("[model]\na = 0.4\nb = 1\ns = 1\n").unwrap_err();
        assert!(err.to_string().contains("b must exceed 1"), "{err}");
    }

    #[test]
    fn unknown_key_and_section_rejected() {
        let err = parse("[model]\na = 0.4\nb = 2\ns = 1\nfoo = 3\n").unwrap_err();
        assert!(err.to_string().contains("foo"));
        let err = parse("[models]\na = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }));
        let err = parse("a = 1\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }));
    }

    #[test]
    fn overrides_replace_and_insert() {
        let c = parse_config_with(
            MINIMAL,
            Path::new("."),
            &["model.s=1.5".into(), "kernel.prey.family=uniform".into()],
        )
        .unwrap();
        assert_eq!(c.model.params.s, 1.5);
        assert!(parse_config_with(MINIMAL, Path::new("."), &["model.zzz=1".into()]).is_err());
    }

    #[test]
    fn hash_tracks_effective_values() {
        let a = parse(MINIMAL).unwrap();
        let b = parse("[model]\n# comment\nb = 2.0\na = 0.4\ns = 0.5\n").unwrap();
        assert_eq!(a.param_hash(), b.param_hash());
        let c = parse("[model]\na = 0.4\nb = 2\ns = 0.6\n").unwrap();
        assert_ne!(a.param_hash(), c.param_hash());
    }

    #[test]
    fn missing_table_file_is_config_error() {
        let err = parse(
            "[model]\na = 0.4\nb = 2\ns = 0.5\n[kernel.prey]\nfamily = table\nfile = nope.txt\n",
        )
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sweep_range_expands() {
        let c = parse(&format!(
            "{MINIMAL}[scenario]\ns_min = 0.5\ns_max = 2.5\ns_count = 3\n"
        ))
        .unwrap();
        assert_eq!(c.sweep_speeds(), vec![0.5, 1.5, 2.5]);
    }
}
