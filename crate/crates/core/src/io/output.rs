//! Deterministic on-disk formats: `series.csv`, binary snapshots and the
//! plain-text report.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use crate::dynamics::{RunRecord, State};
use crate::error::{Error, Result};
use crate::grid::{Grid, Parity, ScalarField};

pub const SERIES_COLUMNS: [&str; 15] = [
    "t",
    "linf_pi",
    "l2_pi",
    "l1_pi",
    "l2_omega",
    "linf_gamma",
    "swirl_sup",
    "max_f_axis",
    "traj_phi",
    "traj_f",
    "traj_g",
    "traj_pi",
    "riccati_residual",
    "margin_max_principle",
    "margin_integral_ineq",
];

const SNAPSHOT_MAGIC: &str = "hallmhd-snapshot 1";

/// 17 significant digits in scientific notation; `NaN`, `inf`, `-inf` for
/// non-finite values.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Rows `0, stride, 2 stride, ...` of the run plus its last row.
pub fn series_rows(rec: &RunRecord, stride: usize) -> Vec<usize> {
    let n = rec.rows.len();
    let stride = stride.max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if idx.last() != Some(&(n - 1)) {
        idx.push(n - 1);
    }
    idx
}

/// All rows of the run in [`SERIES_COLUMNS`] order.
pub fn series_values(rec: &RunRecord) -> Vec<[f64; 15]> {
    let residual = rec.riccati_residual();
    let margin = rec.integral_margin();
    rec.rows
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let (phi, f, g, pi) = match rec.trajectory.samples.get(k) {
                Some(x) => (x.phi, x.f, x.g, x.pi),
                None => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
            };
            [
                row.t,
                row.linf_pi,
                row.l2_pi,
                row.l1_pi,
                row.l2_omega,
                row.linf_gamma,
                row.swirl_sup,
                row.max_f_axis,
                phi,
                f,
                g,
                pi,
                residual[k],
                rec.margins[k].max_principle,
                margin[k],
            ]
        })
        .collect()
}

pub fn series_csv(rec: &RunRecord, stride: usize) -> String {
    let values = series_values(rec);
    let mut s = SERIES_COLUMNS.join(",");
    s.push('\n');
    for k in series_rows(rec, stride) {
        for (c, v) in values[k].iter().enumerate() {
            if c > 0 {
                s.push(',');
            }
            s += &fmt_real(*v);
        }
        s.push('\n');
    }
    s
}

pub fn write_series(dir: &Path, rec: &RunRecord, stride: usize) -> Result<PathBuf> {
    let path = dir.join("series.csv");
    fs::write(&path, series_csv(rec, stride)).map_err(io_err(&path))?;
    Ok(path)
}

pub fn snapshot_path(dir: &Path, step: usize, field: &str) -> PathBuf {
    dir.join("snapshots").join(format!("snap_{step:06}_{field}.bin"))
}

pub fn encode_snapshot(field: &ScalarField, t: f64, name: &str) -> Vec<u8> {
    let g = field.grid();
    let mut head = String::new();
    let _ = writeln!(head, "{SNAPSHOT_MAGIC}");
    let _ = writeln!(head, "nr {}", g.nr());
    let _ = writeln!(head, "nz {}", g.nz());
    let _ = writeln!(head, "r_max {}", fmt_real(g.r_max()));
    let _ = writeln!(head, "z_half {}", fmt_real(g.z_half()));
    let _ = writeln!(head, "t {}", fmt_real(t));
    let _ = writeln!(head, "field {name}");
    let _ = writeln!(head, "parity {}", field.parity().as_str());
    let _ = writeln!(head, "format f64le row-major r-major");
    let _ = writeln!(head, "end");
    let mut out = head.into_bytes();
    out.reserve(8 * field.values().len());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub field: ScalarField,
    pub t: f64,
    pub name: String,
}

pub fn decode_snapshot(bytes: &[u8]) -> std::result::Result<Snapshot, String> {
    let end = b"\nend\n";
    let pos = bytes.windows(end.len()).position(|w| w == end).ok_or("missing header terminator")?;
    let head = std::str::from_utf8(&bytes[..pos]).map_err(|e| e.to_string())?;
    let body = &bytes[pos + end.len()..];
    let mut lines = head.lines();
    if lines.next() != Some(SNAPSHOT_MAGIC) {
        return Err("not a snapshot file".into());
    }
    let mut kv = std::collections::HashMap::new();
    for l in lines {
        let (k, v) = l.split_once(' ').ok_or_else(|| format!("bad header line `{l}`"))?;
        kv.insert(k, v);
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| format!("missing `{k}`"));
    let num = |k: &str| get(k)?.parse::<f64>().map_err(|e| format!("{k}: {e}"));
    let count = |k: &str| get(k)?.parse::<usize>().map_err(|e| format!("{k}: {e}"));
    let grid = Grid::new(count("nr")?, count("nz")?, num("r_max")?, num("z_half")?).map_err(|e| e.to_string())?;
    let parity = match get("parity")? {
        "even" => Parity::Even,
        "odd" => Parity::Odd,
        p => return Err(format!("unknown parity `{p}`")),
    };
    if body.len() != 8 * grid.len() {
        return Err(format!("expected {} payload bytes, found {}", 8 * grid.len(), body.len()));
    }
    let values = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8"))).collect();
    let field = ScalarField::from_values(&grid, parity, values).map_err(|e| e.to_string())?;
    Ok(Snapshot { field, t: num("t")?, name: get("field")?.to_string() })
}

pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    decode_snapshot(&bytes).map_err(|m| Error::Invalid(format!("{}: {m}", path.display())))
}

pub fn write_snapshots(dir: &Path, step: usize, state: &State) -> Result<()> {
    for (name, field) in [("omega", &state.omega), ("pi", &state.pi)] {
        let path = snapshot_path(dir, step, name);
        let mut f = fs::File::create(&path).map_err(io_err(&path))?;
        f.write_all(&encode_snapshot(field, state.t, name)).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Ordered `key: value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn text(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.lines.push((key.to_string(), value.to_string()));
        self
    }

    pub fn real(&mut self, key: &str, v: f64) -> &mut Self {
        self.text(key, fmt_real(v))
    }

    pub fn opt(&mut self, key: &str, v: Option<f64>) -> &mut Self {
        match v {
            Some(v) => self.real(key, v),
            None => self.text(key, "none"),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        self.lines.iter().map(|(k, v)| format!("{k}: {v}\n")).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.render()).map_err(io_err(path))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_format_is_fixed() {
        assert_eq!(fmt_real(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_real(-0.1), "-1.0000000000000001e-1");
        assert_eq!(fmt_real(f64::NAN), "NaN");
        let x = 0.1 + 0.2;
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn snapshot_round_trip() {
        let g = Grid::new(9, 17, 1.5, 2.0).unwrap();
        let f = ScalarField::from_fn(&g, Parity::Odd, |r, z| r * (z + 0.3).sin() / 3.0);
        let bytes = encode_snapshot(&f, 0.125, "u_r");
        let s = decode_snapshot(&bytes).unwrap();
        assert_eq!(s.field.values(), f.values());
        assert_eq!(s.field.parity(), Parity::Odd);
        assert_eq!(*s.field.grid(), g);
        assert_eq!((s.t, s.name.as_str()), (0.125, "u_r"));
        assert!(decode_snapshot(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_snapshot(b"garbage\nend\n").is_err());
    }

    #[test]
    fn report_render() {
        let mut r = Report::new();
        r.text("stop_reason", "t_end").real("t", 0.5).opt("t_extrapolated", None);
        assert_eq!(r.render(), "stop_reason: t_end\nt: 5.0000000000000000e-1\nt_extrapolated: none\n");
        assert_eq!(r.get("t"), Some("5.0000000000000000e-1"));
    }
}
