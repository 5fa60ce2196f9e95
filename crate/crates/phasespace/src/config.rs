//! Line-oriented run configuration.
//!
//! `key = value` lines grouped under `[section]` headers; `#` starts a
//! comment, values may be wrapped in double quotes and lists are comma
//! separated. Keys are case-sensitive. Every key a section does not use is
//! an error, including keys that belong to a different `kind`.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use phasespace_core::evolution::{check_step, Law};
use phasespace_core::observables::MomentRequest;
use phasespace_core::Grid;

const SECTIONS: [&str; 8] = ["grid", "potential", "initial", "evolution", "observables", "diagnostics", "sweep", "output"];

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        Self { line: Some(line), message: message.into() }
    }
    fn general(message: impl Into<String>) -> Self {
        Self { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "config line {l}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Debug, PartialEq)]
pub struct GridConfig {
    pub n_x: usize,
    pub z_min: f64,
    pub length_z: f64,
}

impl GridConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.n_x, self.z_min, self.length_z).expect("validated at parse time")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    Free,
    Harmonic { a: f64, b: f64, c: f64 },
    Quartic { c: f64, lambda: f64 },
    /// One value per line on the `n_z` rows of the grid.
    Tabulated { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialConfig {
    pub kind: PotentialKind,
    pub mass: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialState {
    Gaussian { x_bar: f64, p_bar: f64, delta_x: f64, delta_p: f64 },
    /// Oscillator eigenstate of frequency `omega`, embedded as a pure state.
    Eigenstate { n: usize, omega: f64 },
    /// Seeded sum of `modes` Gaussian bumps of width `width` with random signs
    /// and centres.
    Random { seed: u64, modes: usize, width: f64 },
    ClassicalFile { file: PathBuf },
    QuantumFile { file: PathBuf },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionSection {
    pub law: Law,
    pub dt: f64,
    pub n_steps: usize,
    pub sample_every: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservablesConfig {
    /// Quantum expectations `∫ F W`, kept with their source text.
    pub moments: Vec<(String, MomentRequest)>,
    /// Classical expectations `∫ F ψ²`.
    pub classical_moments: Vec<(String, MomentRequest)>,
    pub marginals: bool,
    pub sharpened_beta: Vec<f64>,
    pub fringe_wavenumber: Option<f64>,
    pub energy: bool,
    pub dispersion: bool,
    pub correlation: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsConfig {
    pub purity: bool,
    pub coupling: bool,
    pub locality: bool,
    pub factorization: bool,
}

/// Gaussian width sweep over `Δx Δp` at a fixed ratio `Δx/Δp`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub products: Vec<f64>,
    pub ratio: f64,
    pub x_bar: f64,
    pub p_bar: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub snapshots: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub potential: PotentialConfig,
    pub initial: InitialState,
    pub evolution: EvolutionSection,
    pub observables: ObservablesConfig,
    pub diagnostics: DiagnosticsConfig,
    pub sweep: Option<SweepConfig>,
    pub output: OutputConfig,
}

struct Entry {
    key: String,
    value: String,
    line: usize,
}

struct Section {
    name: String,
    line: usize,
    entries: Vec<Entry>,
}

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn lex(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(line, format!("malformed section header `{s}`")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::at(line, format!("unknown section [{name}] (known: {})", SECTIONS.join(", "))));
            }
            if let Some(prev) = sections.iter().find(|sec| sec.name == name) {
                return Err(ConfigError::at(line, format!("section [{name}] repeated (first at line {})", prev.line)));
            }
            sections.push(Section { name: name.to_string(), line, entries: Vec::new() });
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::at(line, format!("expected `key = value`, got `{s}`")))?;
        let key = key.trim();
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::at(line, format!("invalid key `{key}`")));
        }
        let mut value = value.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        } else if value.contains('"') {
            return Err(ConfigError::at(line, format!("unbalanced quotes in value of `{key}`")));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| ConfigError::at(line, format!("key `{key}` appears before any [section]")))?;
        if let Some(prev) = section.entries.iter().find(|e| e.key == key) {
            return Err(ConfigError::at(
                line,
                format!("duplicate key `{key}` in [{}] at lines {} and {line}", section.name, prev.line),
            ));
        }
        section.entries.push(Entry { key: key.to_string(), value: value.to_string(), line });
    }
    Ok(sections)
}

/// Typed access to one section; keys not consumed are reported by `finish`.
struct Reader<'a> {
    name: &'a str,
    entries: &'a [Entry],
    used: Vec<bool>,
    header: usize,
}

impl<'a> Reader<'a> {
    fn new(sections: &'a [Section], name: &'a str) -> Self {
        match sections.iter().find(|s| s.name == name) {
            Some(s) => Self { name, entries: &s.entries, used: vec![false; s.entries.len()], header: s.line },
            None => Self { name, entries: &[], used: Vec::new(), header: 0 },
        }
    }

    fn present(&self) -> bool {
        self.header > 0
    }

    fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some((self.entries[i].value.as_str(), self.entries[i].line))
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.line)
    }

    fn opt_f64(&mut self, key: &str) -> Result<Option<(f64, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(Some((x, line))),
                _ => Err(ConfigError::at(line, format!("`{key}` expects a finite number, got `{v}`"))),
            },
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        Ok(self.opt_f64(key)?.map_or(default, |v| v.0))
    }

    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.opt_f64(key)? {
            None => Ok(default),
            Some((v, _)) if v > 0.0 => Ok(v),
            Some((v, line)) => Err(ConfigError::at(line, format!("`{key}` must be positive, got {v}"))),
        }
    }

    fn opt_u64(&mut self, key: &str) -> Result<Option<(u64, usize)>> {
        match self.raw(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse::<u64>()
                .map(|x| Some((x, line)))
                .map_err(|_| ConfigError::at(line, format!("`{key}` expects a non-negative integer, got `{v}`"))),
        }
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        Ok(self.opt_u64(key)?.map_or(default, |v| v.0 as usize))
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some(("true", _)) => Ok(true),
            Some(("false", _)) => Ok(false),
            Some((v, line)) => Err(ConfigError::at(line, format!("`{key}` expects true or false, got `{v}`"))),
        }
    }

    fn list<T>(&mut self, key: &str, default: &str, parse: impl Fn(&str) -> std::result::Result<T, String>) -> Result<Vec<T>> {
        let (text, line) = self.raw(key).unwrap_or((default, self.header));
        text.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse(s).map_err(|m| ConfigError::at(line, format!("`{key}`: {m}"))))
            .collect()
    }

    fn path(&mut self, key: &str, base: &Path) -> Result<PathBuf> {
        let (v, line) = self
            .raw(key)
            .ok_or_else(|| ConfigError::at(self.header, format!("[{}] needs `{key}`", self.name)))?;
        let p = base.join(v);
        if !p.is_file() {
            return Err(ConfigError::at(line, format!("file `{}` does not exist", p.display())));
        }
        Ok(p)
    }

    fn finish(self, context: &str) -> Result<()> {
        for (e, used) in self.entries.iter().zip(&self.used) {
            if !used {
                return Err(ConfigError::at(e.line, format!("unknown key `{}` in [{}]{context}", e.key, self.name)));
            }
        }
        Ok(())
    }
}

fn parse_moments(s: &str) -> std::result::Result<(String, MomentRequest), String> {
    s.parse::<MomentRequest>().map(|m| (s.to_string(), m)).map_err(|e| e.to_string())
}

fn parse_number(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("`{s}` is not a finite number")),
    }
}

fn parse_grid(r: &mut Reader) -> Result<GridConfig> {
    if !r.present() {
        return Err(ConfigError::general("missing [grid] section"));
    }
    let n_x = r.opt_u64("n_x")?;
    let n_z = r.opt_u64("n_z")?;
    let n_p = r.opt_u64("n_p")?;
    let n_x = match (n_x, n_z) {
        (None, None) => return Err(ConfigError::at(r.header, "[grid] needs `n_x` or `n_z`")),
        (Some((n, line)), None) => {
            if !(n as usize).is_power_of_two() || n < 8 {
                return Err(ConfigError::at(line, format!("n_x = {n} must be a power of two ≥ 8")));
            }
            n as usize
        }
        (nx, Some((nz, line))) => {
            if !(nz as usize).is_power_of_two() || nz < 16 {
                return Err(ConfigError::at(line, format!("n_z = {nz} must be a power of two ≥ 16")));
            }
            if let Some((nx, lx)) = nx {
                if nx * 2 != nz {
                    return Err(ConfigError::at(lx, format!("n_x = {nx} inconsistent with n_z = {nz} (n_z = 2 n_x)")));
                }
            }
            (nz / 2) as usize
        }
    };
    if let Some((np, line)) = n_p {
        if np as usize != n_x / 2 {
            return Err(ConfigError::at(line, format!("n_p = {np} must equal n_z/4 = {}", n_x / 2)));
        }
    }
    let length_z = match r.opt_f64("length_z")? {
        Some((v, _)) if v > 0.0 => v,
        Some((v, line)) => return Err(ConfigError::at(line, format!("length_z must be positive, got {v}"))),
        None => return Err(ConfigError::at(r.header, "[grid] needs `length_z`")),
    };
    let z_min = r.f64("z_min", -0.5 * length_z)?;
    Grid::new(n_x, z_min, length_z).map_err(|e| ConfigError::at(r.header, e.to_string()))?;
    Ok(GridConfig { n_x, z_min, length_z })
}

fn kind<'a>(r: &mut Reader<'a>, default: &'a str, allowed: &[&str]) -> Result<(&'a str, usize)> {
    let (k, line) = r.raw("kind").unwrap_or((default, r.header));
    if !allowed.contains(&k) {
        return Err(ConfigError::at(line, format!("[{}] kind `{k}` not one of {}", r.name, allowed.join(", "))));
    }
    Ok((k, line))
}

fn parse_potential(mut r: Reader, base: &Path) -> Result<PotentialConfig> {
    let (k, _) = kind(&mut r, "free", &["free", "harmonic", "quartic", "tabulated"])?;
    let mass = r.positive("mass", 1.0)?;
    let kind = match k {
        "free" => PotentialKind::Free,
        "harmonic" => PotentialKind::Harmonic { a: r.f64("a", 0.0)?, b: r.f64("b", 0.0)?, c: r.f64("c", 1.0)? },
        "quartic" => PotentialKind::Quartic { c: r.f64("c", 1.0)?, lambda: r.f64("lambda", 1.0)? },
        _ => PotentialKind::Tabulated { file: r.path("file", base)? },
    };
    r.finish(&format!(" (kind = {k})"))?;
    Ok(PotentialConfig { kind, mass })
}

fn parse_initial(mut r: Reader, base: &Path) -> Result<InitialState> {
    let (k, kline) = kind(&mut r, "gaussian", &["gaussian", "eigenstate", "random", "classical-file", "quantum-file"])?;
    let state = match k {
        "gaussian" => InitialState::Gaussian {
            x_bar: r.f64("x_bar", 0.0)?,
            p_bar: r.f64("p_bar", 0.0)?,
            delta_x: r.positive("delta_x", 0.5)?,
            delta_p: r.positive("delta_p", 0.5)?,
        },
        "eigenstate" => InitialState::Eigenstate { n: r.usize("n", 0)?, omega: r.positive("omega", 1.0)? },
        "random" => {
            let seed = r
                .opt_u64("seed")?
                .ok_or_else(|| ConfigError::at(kline, "random initial state needs an explicit `seed`"))?
                .0;
            let modes = r.usize("modes", 6)?;
            if modes == 0 {
                return Err(ConfigError::at(r.line_of("modes").unwrap_or(kline), "`modes` must be at least 1"));
            }
            InitialState::Random { seed, modes, width: r.positive("width", 1.0)? }
        }
        "classical-file" => InitialState::ClassicalFile { file: r.path("file", base)? },
        _ => InitialState::QuantumFile { file: r.path("file", base)? },
    };
    r.finish(&format!(" (kind = {k})"))?;
    Ok(state)
}

fn parse_evolution(mut r: Reader, grid: &GridConfig, mass: f64) -> Result<EvolutionSection> {
    let law = match r.raw("law") {
        None | Some(("hw", _)) => Law::Weyl,
        Some(("liouville", _)) => Law::Liouville,
        Some((v, line)) => return Err(ConfigError::at(line, format!("law `{v}` not one of hw, liouville"))),
    };
    let (dt, dt_line) = r.opt_f64("dt")?.unwrap_or((1e-3, r.header));
    let n_steps = r.usize("n_steps", 0)?;
    let sample_every = r.usize("sample_every", 10)?;
    if sample_every == 0 {
        return Err(ConfigError::at(r.line_of("sample_every").unwrap_or(r.header), "`sample_every` must be at least 1"));
    }
    check_step(&grid.grid(), dt, mass).map_err(|e| ConfigError::at(dt_line, e.to_string()))?;
    r.finish("")?;
    Ok(EvolutionSection { law, dt, n_steps, sample_every })
}

fn parse_observables(mut r: Reader) -> Result<ObservablesConfig> {
    let o = ObservablesConfig {
        moments: r.list("moments", "z, p, z^2, p^2, z*p", parse_moments)?,
        classical_moments: r.list("classical_moments", "", parse_moments)?,
        marginals: r.bool("marginals", false)?,
        sharpened_beta: r.list("sharpened_beta", "", parse_number)?,
        fringe_wavenumber: match r.opt_f64("fringe_wavenumber")? {
            None => None,
            Some((v, _)) if v > 0.0 => Some(v),
            Some((v, line)) => return Err(ConfigError::at(line, format!("fringe_wavenumber must be positive, got {v}"))),
        },
        energy: r.bool("energy", true)?,
        dispersion: r.bool("dispersion", false)?,
        correlation: r.bool("correlation", true)?,
    };
    if o.fringe_wavenumber.is_some() && o.sharpened_beta.is_empty() {
        return Err(ConfigError::at(r.line_of("fringe_wavenumber").unwrap_or(0), "fringe_wavenumber needs sharpened_beta"));
    }
    r.finish("")?;
    Ok(o)
}

fn parse_diagnostics(mut r: Reader) -> Result<DiagnosticsConfig> {
    let d = DiagnosticsConfig {
        purity: r.bool("purity", true)?,
        coupling: r.bool("coupling", false)?,
        locality: r.bool("locality", false)?,
        factorization: r.bool("factorization", false)?,
    };
    r.finish("")?;
    Ok(d)
}

fn parse_sweep(mut r: Reader) -> Result<Option<SweepConfig>> {
    if !r.present() {
        return Ok(None);
    }
    let (k, _) = kind(&mut r, "gaussian_width", &["gaussian_width"])?;
    let products = r.list("products", "0.0625, 0.125, 0.25, 0.5, 1", parse_number)?;
    if let Some(bad) = products.iter().find(|&&s| s <= 0.0) {
        return Err(ConfigError::at(r.line_of("products").unwrap_or(r.header), format!("products must be positive, got {bad}")));
    }
    let s = SweepConfig { products, ratio: r.positive("ratio", 1.0)?, x_bar: r.f64("x_bar", 0.0)?, p_bar: r.f64("p_bar", 0.0)? };
    r.finish(&format!(" (kind = {k})"))?;
    Ok(Some(s))
}

/// Parses and validates a config. Relative paths resolve against `base`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig> {
    let sections = lex(text)?;
    let mut g = Reader::new(&sections, "grid");
    let grid = parse_grid(&mut g)?;
    g.finish("")?;
    let potential = parse_potential(Reader::new(&sections, "potential"), base)?;
    let initial = parse_initial(Reader::new(&sections, "initial"), base)?;
    let evolution = parse_evolution(Reader::new(&sections, "evolution"), &grid, potential.mass)?;
    let observables = parse_observables(Reader::new(&sections, "observables"))?;
    let diagnostics = parse_diagnostics(Reader::new(&sections, "diagnostics"))?;
    let sweep = parse_sweep(Reader::new(&sections, "sweep"))?;
    let mut o = Reader::new(&sections, "output");
    let output = OutputConfig {
        directory: base.join(o.raw("directory").map_or("out", |v| v.0)),
        snapshots: o.bool("snapshots", false)?,
    };
    o.finish("")?;
    Ok(RunConfig { grid, potential, initial, evolution, observables, diagnostics, sweep, output })
}

fn join<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    /// Fully resolved config in the input format, every default explicit.
    pub fn resolved(&self) -> String {
        let mut s = String::new();
        let g = &self.grid;
        let _ = writeln!(s, "[grid]\nn_x = {}\nn_z = {}\nn_p = {}\nz_min = {:?}\nlength_z = {:?}", g.n_x, 2 * g.n_x, g.n_x / 2, g.z_min, g.length_z);
        let p = &self.potential;
        let _ = writeln!(s, "\n[potential]");
        match &p.kind {
            PotentialKind::Free => _ = writeln!(s, "kind = free"),
            PotentialKind::Harmonic { a, b, c } => _ = writeln!(s, "kind = harmonic\na = {a:?}\nb = {b:?}\nc = {c:?}"),
            PotentialKind::Quartic { c, lambda } => _ = writeln!(s, "kind = quartic\nc = {c:?}\nlambda = {lambda:?}"),
            PotentialKind::Tabulated { file } => _ = writeln!(s, "kind = tabulated\nfile = \"{}\"", file.display()),
        }
        let _ = writeln!(s, "mass = {:?}", p.mass);
        let _ = writeln!(s, "\n[initial]");
        match &self.initial {
            InitialState::Gaussian { x_bar, p_bar, delta_x, delta_p } => {
                _ = writeln!(s, "kind = gaussian\nx_bar = {x_bar:?}\np_bar = {p_bar:?}\ndelta_x = {delta_x:?}\ndelta_p = {delta_p:?}")
            }
            InitialState::Eigenstate { n, omega } => _ = writeln!(s, "kind = eigenstate\nn = {n}\nomega = {omega:?}"),
            InitialState::Random { seed, modes, width } => _ = writeln!(s, "kind = random\nseed = {seed}\nmodes = {modes}\nwidth = {width:?}"),
            InitialState::ClassicalFile { file } => _ = writeln!(s, "kind = classical-file\nfile = \"{}\"", file.display()),
            InitialState::QuantumFile { file } => _ = writeln!(s, "kind = quantum-file\nfile = \"{}\"", file.display()),
        }
        let e = &self.evolution;
        let law = match e.law {
            Law::Weyl => "hw",
            Law::Liouville => "liouville",
        };
        let _ = writeln!(s, "\n[evolution]\nlaw = {law}\ndt = {:?}\nn_steps = {}\nsample_every = {}", e.dt, e.n_steps, e.sample_every);
        let o = &self.observables;
        let _ = writeln!(
            s,
            "\n[observables]\nmoments = \"{}\"\nclassical_moments = \"{}\"\nmarginals = {}\nsharpened_beta = \"{}\"",
            join(&o.moments, |m| m.0.clone()),
            join(&o.classical_moments, |m| m.0.clone()),
            o.marginals,
            join(&o.sharpened_beta, |b| format!("{b:?}")),
        );
        if let Some(k) = o.fringe_wavenumber {
            let _ = writeln!(s, "fringe_wavenumber = {k:?}");
        }
        let _ = writeln!(s, "energy = {}\ndispersion = {}\ncorrelation = {}", o.energy, o.dispersion, o.correlation);
        let d = &self.diagnostics;
        let _ = writeln!(
            s,
            "\n[diagnostics]\npurity = {}\ncoupling = {}\nlocality = {}\nfactorization = {}",
            d.purity, d.coupling, d.locality, d.factorization
        );
        if let Some(w) = &self.sweep {
            let _ = writeln!(
                s,
                "\n[sweep]\nkind = gaussian_width\nproducts = \"{}\"\nratio = {:?}\nx_bar = {:?}\np_bar = {:?}",
                join(&w.products, |v| format!("{v:?}")),
                w.ratio,
                w.x_bar,
                w.p_bar
            );
        }
        let _ = writeln!(s, "\n[output]\ndirectory = \"{}\"\nsnapshots = {}", self.output.directory.display(), self.output.snapshots);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text, Path::new("."))
    }

    const MINIMAL: &str = "[grid]\nn_x = 64\nlength_z = 16\n\n[initial]\nkind = gaussian\n\n[evolution]\nlaw = hw\nn_steps = 100\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.grid, GridConfig { n_x: 64, z_min: -8.0, length_z: 16.0 });
        assert_eq!(c.potential, PotentialConfig { kind: PotentialKind::Free, mass: 1.0 });
        assert_eq!(c.initial, InitialState::Gaussian { x_bar: 0.0, p_bar: 0.0, delta_x: 0.5, delta_p: 0.5 });
        assert_eq!(c.evolution, EvolutionSection { law: Law::Weyl, dt: 1e-3, n_steps: 100, sample_every: 10 });
        assert_eq!(c.observables.moments.len(), 5);
        assert!(c.sweep.is_none());
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = "[grid]\nn_z = 128\nlength_z = 16 # comment\n[potential]\nkind = quartic\nlambda = 0.5\n\
                    [observables]\nmoments = \"z^2 + p^2, z*p\"\nsharpened_beta = \"0, 0.5\"\nfringe_wavenumber = 4\n\
                    [sweep]\nproducts = 0.25\n";
        let c = parse(text).unwrap();
        let again = parse(&c.resolved()).unwrap();
        assert_eq!(c, again);
        assert!(c.resolved().contains("mass = 1.0"));
    }

    #[test]
    fn grid_size_must_be_power_of_two() {
        let e = parse("[grid]\nn_z = 100\nlength_z = 16\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        assert!(e.message.contains("power of two"), "{e}");
        assert!(parse("[grid]\nn_z = 128\nn_p = 64\nlength_z = 16\n").unwrap_err().message.contains("n_z/4"));
    }

    #[test]
    fn duplicate_key_names_both_lines() {
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\nn_x = 32\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        assert!(e.message.contains("lines 2 and 4"), "{e}");
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[extras]\n").unwrap_err();
        assert_eq!(e.line, Some(4));
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\nsize = 3\n").unwrap_err();
        assert!(e.message.contains("unknown key `size`"));
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[potential]\nkind = harmonic\nlambda = 1\n").unwrap_err();
        assert_eq!(e.line, Some(6));
        assert!(e.message.contains("kind = harmonic"));
    }

    #[test]
    fn type_and_constraint_errors_carry_lines() {
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[evolution]\ndt = fast\n").unwrap_err();
        assert_eq!(e.line, Some(5));
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[evolution]\ndt = 10\n").unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(e.message.contains("limit"), "{e}");
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[initial]\nkind = random\n").unwrap_err();
        assert!(e.message.contains("seed"));
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[initial]\nkind = classical-file\nfile = nowhere.grid\n").unwrap_err();
        assert_eq!(e.line, Some(6));
        let e = parse("[grid]\nn_x = 64\nlength_z = 16\n[observables]\nmoments = \"z^5\"\n").unwrap_err();
        assert_eq!(e.line, Some(5));
        assert!(parse("n_x = 3\n").is_err());
        assert!(parse("[potential]\n").unwrap_err().message.contains("[grid]"));
    }
}
