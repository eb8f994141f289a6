//! Experiment configuration: flat key–value text with `[section]` headers.
//!
//! The system, schedule and radii values are single-line fragments, e.g.
//!
//! ```text
//! [experiment]
//! kind = waiting-exponent
//! trials = 200
//! seed = 42
//! horizon = 10000000
//! format = json-lines
//! output = waiting.jsonl
//!
//! [system]
//! spec = expanding k=2
//!
//! [radii]
//! spec = dyadic from=6 to=16
//!
//! [acceptance]
//! median_min = 0.9
//! median_max = 1.1
//! ```
//!
//! Rotation numbers accept decimal strings, exact fractions `p/q`, the
//! presets `golden` and `silver`, and `liouville growth=10 depth=6`.

use crate::diophantine::{self, AlphaValue};
use crate::error::{Error, Result};
use crate::estimators::DimensionMethod;
use crate::iet::IetSpec;
use crate::runner::{
    AcceptanceBand, CenterSpec, ExperimentConfig, ExperimentKind, OutputFormat, Params,
};
use crate::systems::{Point, SystemKind, SystemSpec};
use crate::targets::{InverseF, RadiusSchedule};
use std::path::{Path, PathBuf};

#[derive(Clone, Debug, Default)]
pub struct RawSection {
    pub name: String,
    pub entries: Vec<(String, String)>,
}

impl RawSection {
    fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Parse the section/key/value skeleton. `#` starts a comment; keys within a
/// section must be unique.
pub fn parse_raw(text: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (lineno, raw_line) in text.lines().enumerate() {
        let line = match raw_line.split_once('#') {
            Some((head, _)) => head.trim(),
            None => raw_line.trim(),
        };
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                Error::config(format!("line {}: unterminated section header", lineno + 1))
            })?;
            sections.push(RawSection {
                name: name.trim().to_string(),
                entries: Vec::new(),
            });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
        let section = sections.last_mut().ok_or_else(|| {
            Error::config(format!("line {}: key outside any [section]", lineno + 1))
        })?;
        let key = key.trim().to_string();
        if section.get(&key).is_some() {
            return Err(Error::config(format!(
                "line {}: duplicate key {key:?} in [{}]",
                lineno + 1,
                section.name
            )));
        }
        section.entries.push((key, value.trim().to_string()));
    }
    Ok(sections)
}

/// A tokenized fragment: a leading kind word plus `key=value` pairs.
struct Fragment<'a> {
    kind: &'a str,
    pairs: Vec<(&'a str, &'a str)>,
}

fn tokenize(s: &str) -> Result<Fragment<'_>> {
    let mut tokens = s.split_whitespace();
    let kind = tokens
        .next()
        .ok_or_else(|| Error::config("empty fragment"))?;
    let mut pairs = Vec::new();
    for t in tokens {
        let (k, v) = t
            .split_once('=')
            .ok_or_else(|| Error::config(format!("expected key=value token, got {t:?}")))?;
        pairs.push((k, v));
    }
    Ok(Fragment { kind, pairs })
}

impl<'a> Fragment<'a> {
    fn get(&self, key: &str) -> Option<&'a str> {
        self.pairs.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }

    fn require(&self, key: &str) -> Result<&'a str> {
        self.get(key)
            .ok_or_else(|| Error::config(format!("{} fragment needs {key}=…", self.kind)))
    }
}

fn parse_u64(name: &str, v: &str) -> Result<u64> {
    v.parse()
        .map_err(|_| Error::config(format!("{name} must be a non-negative integer, got {v:?}")))
}

fn parse_f64(name: &str, v: &str) -> Result<f64> {
    v.parse()
        .map_err(|_| Error::config(format!("{name} must be a number, got {v:?}")))
}

fn parse_f64_list(name: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|t| parse_f64(name, t.trim())).collect()
}

/// One rotation coordinate, honouring `liouville` with its companion keys.
fn parse_alpha_coord(token: &str, frag: &Fragment) -> Result<AlphaValue> {
    if token == "liouville" {
        let growth = parse_u64("growth", frag.require("growth")?)?;
        let depth = parse_u64("depth", frag.require("depth")?)? as usize;
        let l = diophantine::liouville_like(growth, depth)?;
        return Ok(AlphaValue::Rational(l.value));
    }
    AlphaValue::parse(token)
}

/// Parse a system fragment: `rotation alpha=…`, `expanding k=…`,
/// `automorphism matrix=a,b,c,d`, `iet lengths=… perm=…` or
/// `iet rotation=…`.
pub fn parse_system_fragment(s: &str) -> Result<SystemSpec> {
    let frag = tokenize(s)?;
    match frag.kind {
        "rotation" => {
            let alpha = frag.require("alpha")?;
            let coords: Vec<AlphaValue> = alpha
                .split(',')
                .map(|t| parse_alpha_coord(t.trim(), &frag))
                .collect::<Result<_>>()?;
            if coords.len() == 1 {
                SystemSpec::circle_rotation(coords.into_iter().next().unwrap())
            } else {
                SystemSpec::torus_rotation(coords)
            }
        }
        "expanding" => SystemSpec::expanding(parse_u64("k", frag.require("k")?)?),
        "automorphism" => {
            let vals = frag
                .require("matrix")?
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<i64>()
                        .map_err(|_| Error::config(format!("bad matrix entry {t:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != 4 {
                return Err(Error::config("matrix needs 4 entries a,b,c,d"));
            }
            SystemSpec::toral_automorphism([[vals[0], vals[1]], [vals[2], vals[3]]])
        }
        "iet" => Ok(SystemSpec::interval_exchange(parse_iet_fragment(&frag)?)),
        other => Err(Error::config(format!("unknown system kind {other:?}"))),
    }
}

fn parse_iet_fragment(frag: &Fragment) -> Result<IetSpec> {
    if let Some(alpha) = frag.get("rotation") {
        let a = parse_alpha_coord(alpha, frag)?;
        return IetSpec::rotation(&a);
    }
    let lengths = parse_f64_list("lengths", frag.require("lengths")?)?;
    let perm = frag
        .require("perm")?
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| Error::config(format!("bad permutation entry {t:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    IetSpec::new(lengths, perm)
}

/// Parse a schedule fragment: `powerlaw K=1.0 beta=0.8`,
/// `geometric r0=0.5 lambda=0.9`, `explicit values=…`/`explicit file=radii.csv`
/// (one decimal radius per line), `inverse-f form=power c=… a=…`.
pub fn parse_schedule_fragment(s: &str, base: Option<&Path>) -> Result<RadiusSchedule> {
    let frag = tokenize(s)?;
    match frag.kind {
        "powerlaw" => {
            let k = frag
                .get("K")
                .or_else(|| frag.get("k"))
                .ok_or_else(|| Error::config("powerlaw needs K=…"))?;
            RadiusSchedule::power_law(
                parse_f64("K", k)?,
                parse_f64("beta", frag.require("beta")?)?,
            )
        }
        "geometric" => RadiusSchedule::geometric(
            parse_f64("r0", frag.require("r0")?)?,
            parse_f64("lambda", frag.require("lambda")?)?,
        ),
        "explicit" => {
            if let Some(values) = frag.get("values") {
                RadiusSchedule::explicit(parse_f64_list("values", values)?)
            } else {
                let path = resolve(base, frag.require("file")?);
                RadiusSchedule::explicit(read_radius_file(&path)?)
            }
        }
        "inverse-f" => {
            let c = parse_f64("c", frag.require("c")?)?;
            let a = parse_f64("a", frag.require("a")?)?;
            match frag.require("form")? {
                "power" => RadiusSchedule::inverse_f(InverseF::Power { c, a }),
                "logpower" => RadiusSchedule::inverse_f(InverseF::LogPower {
                    c,
                    a,
                    b: parse_f64("b", frag.require("b")?)?,
                }),
                other => Err(Error::config(format!("unknown inverse-f form {other:?}"))),
            }
        }
        other => Err(Error::config(format!("unknown schedule form {other:?}"))),
    }
}

fn resolve(base: Option<&Path>, path: &str) -> PathBuf {
    match base {
        Some(dir) if !Path::new(path).is_absolute() => dir.join(path),
        _ => PathBuf::from(path),
    }
}

fn read_radius_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| parse_f64("radius", l))
        .collect()
}

/// Parse the radii fragment of scan experiments: `dyadic from=6 to=16`,
/// `values=0.5,0.25,…` or `file=radii.csv`.
pub fn parse_radii_fragment(s: &str, base: Option<&Path>) -> Result<Vec<f64>> {
    let frag = tokenize(s)?;
    match frag.kind {
        "dyadic" => {
            let from = parse_u64("from", frag.require("from")?)? as i32;
            let to = parse_u64("to", frag.require("to")?)? as i32;
            if from >= to {
                return Err(Error::config("dyadic radii need from < to"));
            }
            Ok((from..=to).map(|k| 0.5f64.powi(k)).collect())
        }
        "values" => parse_f64_list("radii", frag.require("values")?),
        "file" => read_radius_file(&resolve(base, frag.require("path")?)),
        other => {
            // allow bare `values=…` / `file=…` as the first token
            if let Some((k, v)) = other.split_once('=') {
                match k {
                    "values" => return parse_f64_list("radii", v),
                    "file" => return read_radius_file(&resolve(base, v)),
                    _ => {}
                }
            }
            Err(Error::config(format!("unknown radii form {other:?}")))
        }
    }
}

fn parse_center(s: &str) -> Result<CenterSpec> {
    if s == "random" {
        return Ok(CenterSpec::Random);
    }
    let coords = parse_f64_list("center", s)?;
    Ok(CenterSpec::Fixed(Point::new(coords)?))
}

/// Parse a full experiment config. `base` resolves relative file references.
pub fn parse_experiment(text: &str, base: Option<&Path>) -> Result<ExperimentConfig> {
    let sections = parse_raw(text)?;
    let find = |name: &str| sections.iter().find(|s| s.name == name);

    let exp = find("experiment").ok_or_else(|| Error::config("missing [experiment] section"))?;
    let kind = ExperimentKind::parse(
        exp.get("kind")
            .ok_or_else(|| Error::config("[experiment] needs kind = …"))?,
    )?;
    let trials = match exp.get("trials") {
        Some(v) => {
            let t = parse_u64("trials", v)?;
            if t == 0 {
                return Err(Error::config("trials must be >= 1"));
            }
            t as u32
        }
        None => 1,
    };
    let master_seed = match exp.get("seed") {
        Some(v) => parse_u64("seed", v)?,
        None => 0,
    };
    let horizon = match exp.get("horizon") {
        Some(v) => {
            let h = parse_u64("horizon", v)?;
            if h == 0 {
                return Err(Error::config("horizon must be >= 1"));
            }
            h
        }
        None => 1_000_000,
    };
    let format = match exp.get("format") {
        None | Some("json-lines") => OutputFormat::JsonLines,
        Some("csv") => OutputFormat::Csv,
        Some(other) => {
            return Err(Error::config(format!(
                "format must be json-lines or csv, got {other:?}"
            )))
        }
    };
    let output = exp.get("output").map(|p| resolve(base, p));

    let system = find("system")
        .map(|s| -> Result<SystemSpec> {
            parse_system_fragment(
                s.get("spec")
                    .ok_or_else(|| Error::config("[system] needs spec = …"))?,
            )
        })
        .transpose()?;
    let system_b = find("system_b")
        .map(|s| -> Result<SystemSpec> {
            parse_system_fragment(
                s.get("spec")
                    .ok_or_else(|| Error::config("[system_b] needs spec = …"))?,
            )
        })
        .transpose()?;

    let (schedule, center) = match find("target") {
        Some(t) => {
            let schedule = t
                .get("schedule")
                .map(|s| parse_schedule_fragment(s, base))
                .transpose()?;
            let center = match t.get("center") {
                Some(c) => parse_center(c)?,
                None => CenterSpec::Random,
            };
            (schedule, center)
        }
        None => (None, CenterSpec::Random),
    };

    let radii = find("radii")
        .map(|s| -> Result<Vec<f64>> {
            parse_radii_fragment(
                s.get("spec")
                    .ok_or_else(|| Error::config("[radii] needs spec = …"))?,
                base,
            )
        })
        .transpose()?;

    let mut params = Params::default();
    if let Some(p) = find("params") {
        if let Some(v) = p.get("epsilon") {
            params.epsilon = parse_f64("epsilon", v)?;
        }
        if let Some(v) = p.get("beta") {
            params.beta = parse_f64("beta", v)?;
        }
        if let Some(v) = p.get("q_max") {
            params.q_max = parse_u64("q_max", v)?;
        }
        if let Some(v) = p.get("n_max") {
            params.n_max = parse_u64("n_max", v)?;
        }
        if let Some(v) = p.get("tail_fraction") {
            params.tail_fraction = parse_f64("tail_fraction", v)?;
        }
        if let Some(v) = p.get("burn_in") {
            params.burn_in_k0 = parse_u64("burn_in", v)? as u32;
        }
        if let Some(v) = p.get("c") {
            params.bound_c = Some(parse_f64("c", v)?);
        }
        if let Some(v) = p.get("scales") {
            params.scales = parse_u64("scales", v)? as usize;
        }
        if let Some(v) = p.get("method") {
            params.method = match v {
                "measure" => DimensionMethod::MeasureSlope,
                "waiting" => DimensionMethod::WaitingTime,
                other => {
                    return Err(Error::config(format!(
                        "method must be measure or waiting, got {other:?}"
                    )))
                }
            };
        }
        if let Some(v) = p.get("self_recurrence") {
            params.self_recurrence = match v {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::config(format!(
                        "self_recurrence must be true or false, got {other:?}"
                    )))
                }
            };
        }
        if let Some(v) = p.get("alpha") {
            let frag = Fragment {
                kind: "alpha",
                pairs: p
                    .entries
                    .iter()
                    .map(|(k, v)| (k.as_str(), v.as_str()))
                    .collect(),
            };
            let coords: Vec<AlphaValue> = v
                .split(',')
                .map(|t| parse_alpha_coord(t.split_whitespace().next().unwrap_or(t), &frag))
                .collect::<Result<_>>()?;
            params.alpha = Some(coords);
        }
    }

    let acceptance = find("acceptance")
        .map(|a| -> Result<AcceptanceBand> {
            let num = |key: &str| -> Result<Option<f64>> {
                a.get(key).map(|v| parse_f64(key, v)).transpose()
            };
            Ok(AcceptanceBand {
                median_min: num("median_min")?,
                median_max: num("median_max")?,
                band_lo: num("band_lo")?,
                band_hi: num("band_hi")?,
                band_frac_min: num("band_frac_min")?,
                value_min: num("value_min")?,
                value_max: num("value_max")?,
            })
        })
        .transpose()?;

    let config = ExperimentConfig {
        kind,
        trials,
        master_seed,
        horizon,
        output,
        format,
        system,
        system_b,
        schedule,
        center,
        radii,
        params,
        acceptance,
    };
    config.validate_cross_fields()?;
    Ok(config)
}

/// Collect every diagnostic instead of stopping at the first. Performs all
/// invariant checks of the referenced types without running any dynamics.
pub fn validate_experiment(text: &str, base: Option<&Path>) -> Vec<String> {
    // section-level re-parse so independent mistakes all surface
    let sections = match parse_raw(text) {
        Ok(s) => s,
        Err(e) => return vec![e.to_string()],
    };
    let mut diagnostics = Vec::new();
    for s in &sections {
        match s.name.as_str() {
            "system" | "system_b" => {
                if let Some(spec) = s.get("spec") {
                    if let Err(e) = parse_system_fragment(spec) {
                        diagnostics.push(format!("[{}] {e}", s.name));
                    }
                } else {
                    diagnostics.push(format!("[{}] needs spec = …", s.name));
                }
            }
            "target" => {
                if let Some(spec) = s.get("schedule") {
                    if let Err(e) = parse_schedule_fragment(spec, base) {
                        diagnostics.push(format!("[target] {e}"));
                    }
                }
                if let Some(c) = s.get("center") {
                    if let Err(e) = parse_center(c) {
                        diagnostics.push(format!("[target] {e}"));
                    }
                }
            }
            "radii" => {
                if let Some(spec) = s.get("spec") {
                    if let Err(e) = parse_radii_fragment(spec, base) {
                        diagnostics.push(format!("[radii] {e}"));
                    }
                }
            }
            _ => {}
        }
    }
    // whole-config cross checks (dimension agreement etc.)
    if let Err(e) = parse_experiment(text, base) {
        let msg = e.to_string();
        if !diagnostics.iter().any(|d| d.contains(&msg)) && diagnostics.is_empty() {
            diagnostics.push(msg);
        }
    }
    diagnostics
}

/// Serialise a system back to its config fragment.
pub fn system_fragment(spec: &SystemSpec) -> String {
    match spec.kind() {
        SystemKind::CircleRotation { alpha } => format!("rotation alpha={}", alpha.describe()),
        SystemKind::TorusRotation { alpha } => format!(
            "rotation alpha={}",
            alpha
                .iter()
                .map(AlphaValue::describe)
                .collect::<Vec<_>>()
                .join(",")
        ),
        SystemKind::ExpandingMap { k } => format!("expanding k={k}"),
        SystemKind::ToralAutomorphism { matrix } => format!(
            "automorphism matrix={},{},{},{}",
            matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]
        ),
        SystemKind::IntervalExchange(iet) => format!(
            "iet lengths={} perm={}",
            iet.lengths()
                .iter()
                .map(|l| format!("{l}"))
                .collect::<Vec<_>>()
                .join(","),
            iet.permutation()
                .iter()
                .map(|p| p.to_string())
                .collect::<Vec<_>>()
                .join(",")
        ),
    }
}
