//! Flat `key = value` configuration grouped by `[section]` headers.
//!
//! Comments start with `#` or `;`. String values may be quoted. Lists are
//! comma separated. Unknown sections and keys are errors.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dynamics::{Limiter, SolverConfig, ViscosityMode};
use crate::elliptic::DEFAULT_TOL;
use crate::error::ConfigError;
use crate::grid::Grid;
use crate::initdata::{DataFamily, OmegaKind};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub nr: usize,
    pub nz: usize,
    pub r_max: f64,
    pub z_half: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nr: 257, nz: 513, r_max: 4.0, z_half: 8.0 }
    }
}

impl GridConfig {
    pub fn grid(&self) -> Grid {
        Grid::new(self.nr, self.nz, self.r_max, self.z_half).expect("validated at parse time")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub series_stride: usize,
    /// 0 writes only the initial and final snapshots.
    pub snapshot_stride: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: PathBuf::from("out"), series_stride: 1, snapshot_stride: 0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceConfig {
    pub elliptic_tol: f64,
    pub elliptic_max_iter: usize,
    /// Run-level cap on the empirical swirl ratio.
    pub swirl_cap: f64,
    pub oracle_linf_cap: f64,
    /// Relative tolerance on the oracle blow-up extrapolation.
    pub oracle_blowup_tol: f64,
    pub min_order: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            elliptic_tol: DEFAULT_TOL,
            elliptic_max_iter: 8,
            swirl_cap: 10.0,
            oracle_linf_cap: 1e-2,
            oracle_blowup_tol: 2e-2,
            min_order: 1.8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleProfile {
    /// `sin z` on `[-pi, pi]`.
    Sine,
    /// The on-axis profile `(J0 + y0 z) chi(z^2 / rho^2)` of the data family.
    Family,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleConfig {
    pub profile: OracleProfile,
    pub nr: usize,
    pub nz: usize,
    pub times: Vec<f64>,
    /// Blow-up run stop, as a multiple of `max v0'`.
    pub gradient_factor: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { profile: OracleProfile::Sine, nr: 9, nz: 1025, times: vec![0.25], gradient_factor: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonConfig {
    pub sizes: Vec<usize>,
    pub r_max: f64,
    pub z_half: f64,
}

impl Default for PoissonConfig {
    fn default() -> Self {
        Self { sizes: vec![65, 129, 257], r_max: 6.0, z_half: 6.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    /// Radial node counts of the study grids, coarse to fine; `nz = 2 nr - 1`
    /// unless the aspect of `[grid]` says otherwise.
    pub levels: Vec<usize>,
    /// Probe time as a fraction of `1 / (2 y0)`.
    pub t_fraction: f64,
    /// Reconstruction used by the study. Limiters clip smooth extrema and cap
    /// the observed order near 1.5, so the default measures the unlimited
    /// scheme.
    pub limiter: Limiter,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        Self { levels: vec![33, 65, 129, 257], t_fraction: 0.25, limiter: Limiter::None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub source: Option<PathBuf>,
    pub grid: GridConfig,
    pub solver: SolverConfig,
    pub data: DataFamily,
    pub output: OutputConfig,
    pub tolerance: ToleranceConfig,
    pub oracle: OracleConfig,
    pub poisson: PoissonConfig,
    pub convergence: ConvergenceConfig,
}

impl Default for Config {
    fn default() -> Self {
        let data = DataFamily::default();
        Self {
            source: None,
            grid: GridConfig::default(),
            solver: solver_defaults(&data, None, None, None, &ToleranceConfig::default()),
            data,
            output: OutputConfig::default(),
            tolerance: ToleranceConfig::default(),
            oracle: OracleConfig::default(),
            poisson: PoissonConfig::default(),
            convergence: ConvergenceConfig::default(),
        }
    }
}

/// Defaults that depend on the data: `t_end = 4 / y0`, `gradient_stop = 50 y0`,
/// `dt_max = t_end / 100` (with `t_end = 1` and no gradient stop for `y0 <= 0`).
fn solver_defaults(
    data: &DataFamily,
    t_end: Option<f64>,
    gradient_stop: Option<f64>,
    dt_max: Option<f64>,
    tol: &ToleranceConfig,
) -> SolverConfig {
    let t_end = t_end.unwrap_or(if data.y0 > 0.0 { 4.0 / data.y0 } else { 1.0 });
    SolverConfig {
        t_end,
        gradient_stop: gradient_stop.unwrap_or(if data.y0 > 0.0 { 50.0 * data.y0 } else { f64::INFINITY }),
        dt_max: dt_max.unwrap_or(if t_end > 0.0 { 1e-2 * t_end } else { 1e-2 }),
        elliptic_tol: tol.elliptic_tol,
        elliptic_max_iter: tol.elliptic_max_iter,
        ..SolverConfig::default()
    }
}

struct Entry {
    line: usize,
    key: String,
    value: String,
}

struct Parser<'a> {
    path: &'a Path,
}

impl Parser<'_> {
    fn key_err(&self, e: &Entry, message: impl Into<String>) -> ConfigError {
        ConfigError::Key { path: self.path.to_path_buf(), line: e.line, key: e.key.clone(), message: message.into() }
    }

    fn parse<T: FromStr>(&self, e: &Entry, what: &str) -> Result<T, ConfigError> {
        e.value.parse().map_err(|_| self.key_err(e, format!("expected {what}, got `{}`", e.value)))
    }

    fn real(&self, e: &Entry) -> Result<f64, ConfigError> {
        let v: f64 = self.parse(e, "a real number")?;
        if v.is_nan() {
            return Err(self.key_err(e, "NaN is not allowed"));
        }
        Ok(v)
    }

    fn positive(&self, e: &Entry) -> Result<f64, ConfigError> {
        let v = self.real(e)?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(self.key_err(e, format!("must be positive and finite (got {v})")));
        }
        Ok(v)
    }

    fn nonnegative(&self, e: &Entry) -> Result<f64, ConfigError> {
        let v = self.real(e)?;
        if !(v >= 0.0) {
            return Err(self.key_err(e, format!("must be nonnegative (got {v})")));
        }
        Ok(v)
    }

    fn count(&self, e: &Entry) -> Result<usize, ConfigError> {
        self.parse(e, "a nonnegative integer")
    }

    fn boolean(&self, e: &Entry) -> Result<bool, ConfigError> {
        match e.value.as_str() {
            "true" | "yes" | "on" | "1" => Ok(true),
            "false" | "no" | "off" | "0" => Ok(false),
            v => Err(self.key_err(e, format!("expected true or false, got `{v}`"))),
        }
    }

    fn list<T: FromStr>(&self, e: &Entry, what: &str) -> Result<Vec<T>, ConfigError> {
        e.value
            .split(',')
            .map(|s| s.trim().parse().map_err(|_| self.key_err(e, format!("expected a list of {what}, got `{}`", e.value))))
            .collect()
    }
}

fn unquote(v: &str) -> &str {
    let v = v.trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        &v[1..v.len() - 1]
    } else {
        v
    }
}

fn strip_comment(line: &str) -> &str {
    let mut in_quote = None;
    for (i, c) in line.char_indices() {
        match (c, in_quote) {
            ('"' | '\'', None) => in_quote = Some(c),
            (q, Some(open)) if q == open => in_quote = None,
            ('#' | ';', None) => return &line[..i],
            _ => {}
        }
    }
    line
}

pub fn parse_config(path: &Path) -> Result<Config, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
    let mut cfg = parse_config_str(&text, path)?;
    cfg.source = Some(path.to_path_buf());
    Ok(cfg)
}

/// Parses configuration text; `path` is used only in diagnostics.
pub fn parse_config_str(text: &str, path: &Path) -> Result<Config, ConfigError> {
    let p = Parser { path };
    let mut section = String::new();
    let mut entries: Vec<(String, Entry)> = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let s = strip_comment(raw).trim();
        if s.is_empty() {
            continue;
        }
        if let Some(rest) = s.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                path: path.to_path_buf(),
                line,
                message: format!("malformed section header `{s}`"),
            })?;
            let name = name.trim();
            if !SECTIONS.iter().any(|(n, _)| *n == name) {
                return Err(ConfigError::Syntax {
                    path: path.to_path_buf(),
                    line,
                    message: format!("unknown section [{name}]"),
                });
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = s.split_once('=').ok_or_else(|| ConfigError::Syntax {
            path: path.to_path_buf(),
            line,
            message: format!("expected `key = value`, got `{s}`"),
        })?;
        let key = key.trim().to_string();
        let entry = Entry { line, key: key.clone(), value: unquote(value).to_string() };
        if section.is_empty() {
            return Err(p.key_err(&entry, "key appears before any [section] header"));
        }
        let known = SECTIONS.iter().find(|(n, _)| *n == section).map(|(_, keys)| *keys).unwrap_or(&[]);
        if !known.contains(&key.as_str()) {
            return Err(p.key_err(&entry, format!("unknown key in [{section}] (known: {})", known.join(", "))));
        }
        if let Some((_, prev)) = entries.iter().find(|(sec, e)| *sec == section && e.key == key) {
            let msg = format!("duplicate key (first set on line {})", prev.line);
            return Err(p.key_err(&entry, msg));
        }
        entries.push((section.clone(), entry));
    }
    build(&p, &entries)
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("grid", &["nr", "nz", "r_max", "z_half"]),
    (
        "solver",
        &["nu_mode", "nu", "cfl", "t_end", "gradient_stop", "limiter", "dt_max", "velocity_coupling"],
    ),
    ("data", &["J0", "y0", "support_radius", "omega0_kind", "omega0_amplitude", "omega0_radius"]),
    ("output", &["directory", "series_stride", "snapshot_stride"]),
    (
        "tolerance",
        &["elliptic_tol", "elliptic_max_iter", "swirl_cap", "oracle_linf_cap", "oracle_blowup_tol", "min_order"],
    ),
    ("oracle", &["profile", "nr", "nz", "times", "gradient_factor"]),
    ("poisson", &["sizes", "r_max", "z_half"]),
    ("convergence", &["levels", "t_fraction", "limiter"]),
];

fn build(p: &Parser<'_>, entries: &[(String, Entry)]) -> Result<Config, ConfigError> {
    let get = |sec: &str, key: &str| entries.iter().find(|(s, e)| s == sec && e.key == key).map(|(_, e)| e);
    let mut cfg = Config::default();

    // [grid]
    if let Some(e) = get("grid", "nr") {
        cfg.grid.nr = p.count(e)?;
        if cfg.grid.nr < 8 {
            return Err(p.key_err(e, format!("nr must be at least 8 (got {})", cfg.grid.nr)));
        }
    }
    if let Some(e) = get("grid", "nz") {
        cfg.grid.nz = p.count(e)?;
        if cfg.grid.nz % 2 == 0 || cfg.grid.nz < 9 {
            return Err(p.key_err(e, format!("nz must be odd and at least 9 so that z = 0 is a node (got {})", cfg.grid.nz)));
        }
    }
    if let Some(e) = get("grid", "r_max") {
        cfg.grid.r_max = p.positive(e)?;
    }
    if let Some(e) = get("grid", "z_half") {
        cfg.grid.z_half = p.positive(e)?;
    }

    // [tolerance]
    let tol = &mut cfg.tolerance;
    if let Some(e) = get("tolerance", "elliptic_tol") {
        tol.elliptic_tol = p.positive(e)?;
    }
    if let Some(e) = get("tolerance", "elliptic_max_iter") {
        tol.elliptic_max_iter = p.count(e)?;
        if tol.elliptic_max_iter == 0 {
            return Err(p.key_err(e, "must be at least 1"));
        }
    }
    if let Some(e) = get("tolerance", "swirl_cap") {
        tol.swirl_cap = p.positive(e)?;
    }
    if let Some(e) = get("tolerance", "oracle_linf_cap") {
        tol.oracle_linf_cap = p.positive(e)?;
    }
    if let Some(e) = get("tolerance", "oracle_blowup_tol") {
        tol.oracle_blowup_tol = p.positive(e)?;
    }
    if let Some(e) = get("tolerance", "min_order") {
        tol.min_order = p.positive(e)?;
    }

    // [data]
    let d = &mut cfg.data;
    if let Some(e) = get("data", "J0") {
        d.j0 = p.nonnegative(e)?;
    }
    if let Some(e) = get("data", "y0") {
        d.y0 = p.real(e)?;
    }
    if let Some(e) = get("data", "support_radius") {
        d.support_radius = p.positive(e)?;
        let limit = cfg.grid.r_max.min(cfg.grid.z_half) / 3.0;
        if d.support_radius >= limit {
            return Err(p.key_err(e, format!("must be below a third of the domain ({limit})")));
        }
    } else {
        let limit = cfg.grid.r_max.min(cfg.grid.z_half) / 3.0;
        if d.support_radius >= limit {
            let e = Entry { line: 0, key: "support_radius".into(), value: String::new() };
            return Err(p.key_err(&e, format!("default {} is not below a third of the domain ({limit})", d.support_radius)));
        }
    }
    let amplitude = get("data", "omega0_amplitude").map(|e| p.real(e)).transpose()?.unwrap_or(1.0);
    let radius = get("data", "omega0_radius").map(|e| p.positive(e)).transpose()?.unwrap_or(0.5);
    match get("data", "omega0_kind") {
        Some(e) => match e.value.as_str() {
            "zero" => d.omega0 = OmegaKind::Zero,
            "gaussian_bump" => d.omega0 = OmegaKind::GaussianBump { amplitude, radius },
            v => return Err(p.key_err(e, format!("expected zero or gaussian_bump, got `{v}`"))),
        },
        None => {
            for k in ["omega0_amplitude", "omega0_radius"] {
                if let Some(e) = get("data", k) {
                    return Err(p.key_err(e, "only meaningful with omega0_kind = gaussian_bump"));
                }
            }
        }
    }

    // [solver]
    let t_end = get("solver", "t_end").map(|e| p.nonnegative(e)).transpose()?;
    let gradient_stop = get("solver", "gradient_stop").map(|e| p.positive(e)).transpose()?;
    let dt_max = get("solver", "dt_max").map(|e| p.positive(e)).transpose()?;
    let mut s = solver_defaults(&cfg.data, t_end, gradient_stop, dt_max, &cfg.tolerance);
    if let Some(e) = get("solver", "nu_mode") {
        s.nu_mode = ViscosityMode::from_str(&e.value).map_err(|m| p.key_err(e, m))?;
    }
    if let Some(e) = get("solver", "nu") {
        s.nu = p.nonnegative(e)?;
    }
    if s.nu_mode != ViscosityMode::None && s.nu == 0.0 {
        let e = get("solver", "nu").or(get("solver", "nu_mode")).expect("nu = 0 must have been set explicitly");
        return Err(p.key_err(e, "nu must be positive unless nu_mode = none"));
    }
    if let Some(e) = get("solver", "cfl") {
        s.cfl = p.positive(e)?;
        if s.cfl > 1.0 {
            return Err(p.key_err(e, format!("cfl must be in (0, 1] (got {})", s.cfl)));
        }
    }
    if let Some(e) = get("solver", "limiter") {
        s.limiter = Limiter::from_str(&e.value).map_err(|m| p.key_err(e, m))?;
    }
    if let Some(e) = get("solver", "velocity_coupling") {
        s.couple_velocity = p.boolean(e)?;
    }
    cfg.solver = s;

    // [output]
    if let Some(e) = get("output", "directory") {
        if e.value.is_empty() {
            return Err(p.key_err(e, "must not be empty"));
        }
        cfg.output.directory = PathBuf::from(&e.value);
    }
    if let Some(e) = get("output", "series_stride") {
        cfg.output.series_stride = p.count(e)?;
        if cfg.output.series_stride == 0 {
            return Err(p.key_err(e, "must be at least 1"));
        }
    }
    if let Some(e) = get("output", "snapshot_stride") {
        cfg.output.snapshot_stride = p.count(e)?;
    }

    // [oracle]
    if let Some(e) = get("oracle", "profile") {
        cfg.oracle.profile = match e.value.as_str() {
            "sine" => OracleProfile::Sine,
            "family" => OracleProfile::Family,
            v => return Err(p.key_err(e, format!("expected sine or family, got `{v}`"))),
        };
    }
    if let Some(e) = get("oracle", "nr") {
        cfg.oracle.nr = p.count(e)?;
        if cfg.oracle.nr < 8 {
            return Err(p.key_err(e, "nr must be at least 8"));
        }
    }
    if let Some(e) = get("oracle", "nz") {
        cfg.oracle.nz = p.count(e)?;
        if cfg.oracle.nz % 2 == 0 || cfg.oracle.nz < 9 {
            return Err(p.key_err(e, "nz must be odd and at least 9"));
        }
    }
    if let Some(e) = get("oracle", "times") {
        let times: Vec<f64> = p.list(e, "times")?;
        if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(p.key_err(e, "times must be nonnegative and ascending"));
        }
        cfg.oracle.times = times;
    }
    if let Some(e) = get("oracle", "gradient_factor") {
        cfg.oracle.gradient_factor = p.positive(e)?;
        if cfg.oracle.gradient_factor <= 5.0 {
            return Err(p.key_err(e, "must exceed 5 so the blow-up fit window is nonempty"));
        }
    }

    // [poisson]
    if let Some(e) = get("poisson", "sizes") {
        let sizes: Vec<usize> = p.list(e, "node counts")?;
        if sizes.len() < 2 || sizes.iter().any(|&n| n < 9 || n % 2 == 0) {
            return Err(p.key_err(e, "need at least two odd sizes of at least 9"));
        }
        cfg.poisson.sizes = sizes;
    }
    if let Some(e) = get("poisson", "r_max") {
        cfg.poisson.r_max = p.positive(e)?;
    }
    if let Some(e) = get("poisson", "z_half") {
        cfg.poisson.z_half = p.positive(e)?;
    }

    // [convergence]
    if let Some(e) = get("convergence", "levels") {
        let levels: Vec<usize> = p.list(e, "radial node counts")?;
        if levels.len() < 3 || levels.iter().any(|&n| n < 8) || levels.windows(2).any(|w| w[1] != 2 * w[0] - 1) {
            return Err(p.key_err(e, "need at least three levels, each n -> 2n - 1"));
        }
        cfg.convergence.levels = levels;
    }
    if let Some(e) = get("convergence", "t_fraction") {
        cfg.convergence.t_fraction = p.positive(e)?;
    }
    if let Some(e) = get("convergence", "limiter") {
        cfg.convergence.limiter = Limiter::from_str(&e.value).map_err(|m| p.key_err(e, m))?;
    }

    Ok(cfg)
}

impl Config {
    /// Config with the given grid and data, everything else defaulted.
    pub fn with_data(grid: GridConfig, data: DataFamily) -> Self {
        let tol = ToleranceConfig::default();
        Self { grid, solver: solver_defaults(&data, None, None, None, &tol), data, ..Default::default() }
    }

    /// Renders the configuration back to the file format (round-trips through
    /// [`parse_config_str`]).
    pub fn to_text(&self) -> String {
        let r = |v: f64| super::output::fmt_real(v);
        let mut s = String::new();
        let g = &self.grid;
        s += &format!("[grid]\nnr = {}\nnz = {}\nr_max = {}\nz_half = {}\n\n", g.nr, g.nz, r(g.r_max), r(g.z_half));
        let v = &self.solver;
        s += &format!(
            "[solver]\nnu_mode = {}\nnu = {}\ncfl = {}\nt_end = {}\n",
            v.nu_mode.as_str(),
            r(v.nu),
            r(v.cfl),
            r(v.t_end)
        );
        if v.gradient_stop.is_finite() {
            s += &format!("gradient_stop = {}\n", r(v.gradient_stop));
        }
        s += &format!(
            "limiter = {}\ndt_max = {}\nvelocity_coupling = {}\n\n",
            v.limiter.as_str(),
            r(v.dt_max),
            v.couple_velocity
        );
        let d = &self.data;
        s += &format!("[data]\nJ0 = {}\ny0 = {}\nsupport_radius = {}\n", r(d.j0), r(d.y0), r(d.support_radius));
        match d.omega0 {
            OmegaKind::Zero => s += "omega0_kind = zero\n\n",
            OmegaKind::GaussianBump { amplitude, radius } => {
                s += &format!(
                    "omega0_kind = gaussian_bump\nomega0_amplitude = {}\nomega0_radius = {}\n\n",
                    r(amplitude),
                    r(radius)
                )
            }
        }
        let o = &self.output;
        s += &format!(
            "[output]\ndirectory = \"{}\"\nseries_stride = {}\nsnapshot_stride = {}\n\n",
            o.directory.display(),
            o.series_stride,
            o.snapshot_stride
        );
        let t = &self.tolerance;
        s += &format!(
            "[tolerance]\nelliptic_tol = {}\nelliptic_max_iter = {}\nswirl_cap = {}\noracle_linf_cap = {}\noracle_blowup_tol = {}\nmin_order = {}\n\n",
            r(t.elliptic_tol),
            t.elliptic_max_iter,
            r(t.swirl_cap),
            r(t.oracle_linf_cap),
            r(t.oracle_blowup_tol),
            r(t.min_order)
        );
        let join = |v: &[String]| v.join(", ");
        let oc = &self.oracle;
        s += &format!(
            "[oracle]\nprofile = {}\nnr = {}\nnz = {}\ntimes = {}\ngradient_factor = {}\n\n",
            match oc.profile {
                OracleProfile::Sine => "sine",
                OracleProfile::Family => "family",
            },
            oc.nr,
            oc.nz,
            join(&oc.times.iter().map(|&t| r(t)).collect::<Vec<_>>()),
            r(oc.gradient_factor)
        );
        let pc = &self.poisson;
        s += &format!(
            "[poisson]\nsizes = {}\nr_max = {}\nz_half = {}\n\n",
            join(&pc.sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>()),
            r(pc.r_max),
            r(pc.z_half)
        );
        let cc = &self.convergence;
        s += &format!(
            "[convergence]\nlevels = {}\nt_fraction = {}\nlimiter = {}\n",
            join(&cc.levels.iter().map(|n| n.to_string()).collect::<Vec<_>>()),
            r(cc.t_fraction),
            cc.limiter.as_str()
        );
        s
    }
}
