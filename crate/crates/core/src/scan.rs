//! Parameter scans over the dimer: grids, configuration, parallel evaluation,
//! zero-boundary bisection and tabular output.

use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::dimer::{double_occupancy, ground_state, local_rdm, parity_delta, thermal_state, DimerParams};
use crate::error::{Error, Result};
use crate::l1::DEFAULT_TOLERANCE;
use crate::magic::{mixed_sre_2, sre, MagicContext};
use crate::quench::{evolve_dephased, long_time_state, mixing_state, MixingPair, QuenchSpec};
use crate::resources::{intersite_entanglement, local_non_gaussianity, non_gaussianity_per_site, nssr_entanglement, pssr_entanglement};
use crate::stabilizer::{load_or_build_a_matrix, AMatrix};
use crate::state::QuantumState;

/// `min:max:n[:log]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub points: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn linear(min: f64, max: f64, points: usize) -> Result<Self> {
        Self { min, max, points, log: false }.validated()
    }

    pub fn logarithmic(min: f64, max: f64, points: usize) -> Result<Self> {
        Self { min, max, points, log: true }.validated()
    }

    fn validated(self) -> Result<Self> {
        if self.points < 2 {
            return Err(Error::InvalidParameter(format!("grid needs at least 2 points, got {}", self.points)));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::InvalidParameter(format!("grid bounds {} .. {} are not increasing", self.min, self.max)));
        }
        if self.log && !(self.min > 0.0) {
            return Err(Error::InvalidParameter(format!("log grid needs a positive minimum, got {}", self.min)));
        }
        Ok(self)
    }

    pub fn values(&self) -> Vec<f64> {
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|k| {
                let f = k as f64 / last;
                if k == 0 {
                    self.min
                } else if k + 1 == self.points {
                    self.max
                } else if self.log {
                    (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + f * (self.max - self.min)
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("grid {s:?} is not min:max:n[:log]"));
        let parts: Vec<&str> = s.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(bad());
        }
        let min = parts[0].trim().parse().map_err(|_| bad())?;
        let max = parts[1].trim().parse().map_err(|_| bad())?;
        let points = parts[2].trim().parse().map_err(|_| bad())?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") => false,
            Some("log") => true,
            Some(_) => return Err(bad()),
        };
        Self { min, max, points, log }.validated()
    }
}

impl TryFrom<String> for GridSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GridSpec> for String {
    fn from(g: GridSpec) -> String {
        g.to_string()
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.min, self.max, self.points)?;
        if self.log {
            write!(f, ":log")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Records,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "records" => Ok(OutputFormat::Records),
            _ => Err(Error::InvalidParameter(format!("unknown format {s:?} (csv | records)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanKind {
    Ground,
    Thermal,
    Quench,
    QuenchSaturation,
    Mix,
}

impl ScanKind {
    /// Observable columns, in output order.
    pub fn observables(self, boundary: bool) -> &'static [&'static str] {
        match (self, boundary) {
            (ScanKind::Ground, _) => &[
                "LR", "M1", "M2", "d", "E_NSSR", "E_PSSR", "S_local", "NG_site", "NG_local", "LR_local", "M2mix_local",
                "delta",
            ],
            (ScanKind::Thermal, false) => &["LR", "d", "M2mix"],
            (ScanKind::Thermal, true) => &["T_c", "T_lo", "T_hi"],
            (ScanKind::Quench, _) => &["LR", "M2mix", "d", "NG_site", "purity"],
            (ScanKind::QuenchSaturation, _) => &["LR", "LR_inf", "M2mix"],
            (ScanKind::Mix, false) => &["LR", "M2mix", "d"],
            (ScanKind::Mix, true) => &["crossing", "lo", "hi"],
        }
    }
}

/// Scan settings; every field may come from the config file or a flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub t: f64,
    #[serde(rename = "U")]
    pub u: Option<f64>,
    #[serde(rename = "T")]
    pub temperature: Option<f64>,
    pub gamma: Option<f64>,
    #[serde(rename = "Ui")]
    pub u_i: Option<f64>,
    #[serde(rename = "Uf")]
    pub u_f: Option<f64>,
    #[serde(rename = "U-grid")]
    pub u_grid: Option<GridSpec>,
    #[serde(rename = "T-grid")]
    pub t_grid: Option<GridSpec>,
    #[serde(rename = "lambda-grid")]
    pub lambda_grid: Option<GridSpec>,
    #[serde(rename = "time-grid")]
    pub time_grid: Option<GridSpec>,
    #[serde(rename = "Ui-grid")]
    pub ui_grid: Option<GridSpec>,
    #[serde(rename = "Uf-grid")]
    pub uf_grid: Option<GridSpec>,
    pub pair: Option<MixingPair>,
    /// Emit zero-boundary positions instead of the raw grid.
    pub boundary: bool,
    #[serde(rename = "boundary-tol")]
    pub boundary_tol: f64,
    /// Subset of observables to compute; empty means all.
    pub observables: Vec<String>,
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Worker threads; 0 picks the available parallelism.
    pub workers: usize,
    #[serde(rename = "lp-tol")]
    pub lp_tol: f64,
    #[serde(rename = "cache-dir")]
    pub cache_dir: Option<PathBuf>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            t: 1.0,
            u: None,
            temperature: None,
            gamma: None,
            u_i: None,
            u_f: None,
            u_grid: None,
            t_grid: None,
            lambda_grid: None,
            time_grid: None,
            ui_grid: None,
            uf_grid: None,
            pair: None,
            boundary: false,
            boundary_tol: 1e-3,
            observables: Vec::new(),
            out: None,
            format: OutputFormat::Csv,
            workers: 0,
            lp_tol: DEFAULT_TOLERANCE,
            cache_dir: None,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self, kind: ScanKind) -> Result<()> {
        DimerParams::new(self.t, self.u.unwrap_or(0.0))?;
        for (name, v) in [("T", self.temperature), ("gamma", self.gamma), ("Ui", self.u_i), ("Uf", self.u_f)] {
            if let Some(v) = v {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidParameter(format!("{name} = {v} must be finite and nonnegative")));
                }
            }
        }
        if !(self.lp_tol > 0.0 && self.lp_tol < 1e-2) {
            return Err(Error::InvalidParameter(format!("lp-tol {} outside (0, 1e-2)", self.lp_tol)));
        }
        if !(self.boundary_tol > 0.0) {
            return Err(Error::InvalidParameter(format!("boundary-tol {} must be positive", self.boundary_tol)));
        }
        if self.boundary && !matches!(kind, ScanKind::Thermal | ScanKind::Mix) {
            return Err(Error::InvalidParameter("boundary search applies to thermal-scan and mix only".into()));
        }
        let known = kind.observables(self.boundary);
        if let Some(bad) = self.observables.iter().find(|o| !known.contains(&o.as_str())) {
            return Err(Error::InvalidParameter(format!("unknown observable {bad:?}; available: {}", known.join(", "))));
        }
        for (name, grid) in
            [("T-grid", self.t_grid), ("U-grid", self.u_grid), ("Ui-grid", self.ui_grid), ("Uf-grid", self.uf_grid)]
        {
            if let Some(g) = grid {
                if g.min < 0.0 {
                    return Err(Error::InvalidParameter(format!("{name} must be nonnegative")));
                }
            }
        }
        if let Some(g) = self.lambda_grid {
            if g.min < 0.0 || g.max > 1.0 {
                return Err(Error::InvalidParameter("lambda-grid must lie in [0, 1]".into()));
            }
        }
        Ok(())
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    fn wants(&self, name: &str) -> bool {
        self.observables.is_empty() || self.observables.iter().any(|o| o == name)
    }
}

/// One grid point: parameters, observables (or the error that replaced them)
/// and the solver diagnostics of the dimer robustness solve.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanRecord {
    pub params: Vec<(String, f64)>,
    pub values: Vec<(String, std::result::Result<f64, String>)>,
    pub iterations: Option<usize>,
    pub gap: Option<f64>,
    /// Set when the point's state could not be built; `values` is then empty.
    pub point_error: Option<String>,
}

impl ScanRecord {
    fn new(params: &[(&str, f64)]) -> Self {
        Self {
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            values: Vec::new(),
            iterations: None,
            gap: None,
            point_error: None,
        }
    }

    fn fail(&mut self, e: Error) {
        warn!("point {:?} failed: {e}", self.params);
        self.point_error = Some(e.to_string());
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).and_then(|(_, v)| v.as_ref().ok().copied())
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }

    pub fn errors(&self) -> impl Iterator<Item = (&str, &str)> {
        self.values.iter().filter_map(|(k, v)| v.as_ref().err().map(|e| (k.as_str(), e.as_str())))
    }

    pub fn failed(&self) -> bool {
        self.point_error.is_some() || self.values.iter().any(|(_, v)| v.is_err())
    }

    /// Point error followed by `name: message` for each failed observable.
    pub fn error_summary(&self) -> String {
        self.point_error
            .iter()
            .cloned()
            .chain(self.errors().map(|(k, e)| format!("{k}: {e}")))
            .collect::<Vec<_>>()
            .join("; ")
    }

    fn push(&mut self, name: &str, value: Result<f64>) {
        self.values.push((name.to_string(), value.map_err(|e| e.to_string())));
    }
}

/// Records in deterministic grid order plus the column layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanTable {
    pub params: Vec<String>,
    pub observables: Vec<String>,
    pub records: Vec<ScanRecord>,
}

/// `v` rounded to 12 significant digits, printed in shortest form.
pub fn format_value(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() { "nan".into() } else if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.11e}").parse().expect("formatted float parses");
    if (1e-4..1e15).contains(&rounded.abs()) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

impl ScanTable {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.failed()).count()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = self.params.iter().map(String::as_str).collect();
        header.extend(self.observables.iter().map(String::as_str));
        header.extend(["iterations", "gap", "error"]);
        w.write_record(&header).map_err(csv_error)?;
        for rec in &self.records {
            let mut row: Vec<String> = rec.params.iter().map(|(_, v)| format_value(*v)).collect();
            for name in &self.observables {
                row.push(match rec.values.iter().find(|(k, _)| k == name) {
                    Some((_, Ok(v))) => format_value(*v),
                    Some((_, Err(_))) => "nan".into(),
                    None if rec.point_error.is_some() => "nan".into(),
                    None => String::new(),
                });
            }
            row.push(rec.iterations.map(|i| i.to_string()).unwrap_or_default());
            row.push(rec.gap.map(format_value).unwrap_or_default());
            row.push(rec.error_summary());
            w.write_record(&row).map_err(csv_error)?;
        }
        w.flush()?;
        Ok(())
    }

    /// One JSON object per line.
    pub fn write_records<W: Write>(&self, mut out: W) -> Result<()> {
        use serde_json::{Map, Value};
        let num = |v: f64| {
            let r: f64 = format_value(v).parse().unwrap_or(f64::NAN);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        };
        for rec in &self.records {
            let mut obj = Map::new();
            for (k, v) in &rec.params {
                obj.insert(k.clone(), num(*v));
            }
            for (k, v) in &rec.values {
                obj.insert(k.clone(), v.as_ref().map_or(Value::Null, |x| num(*x)));
            }
            if let Some(i) = rec.iterations {
                obj.insert("iterations".into(), Value::from(i));
            }
            if let Some(g) = rec.gap {
                obj.insert("gap".into(), num(g));
            }
            if let Some(e) = &rec.point_error {
                obj.insert("error".into(), Value::String(e.clone()));
            }
            let errors: Map<String, Value> =
                rec.errors().map(|(k, e)| (k.to_string(), Value::String(e.to_string()))).collect();
            if !errors.is_empty() {
                obj.insert("errors".into(), Value::Object(errors));
            }
            serde_json::to_writer(&mut out, &Value::Object(obj))?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, format: OutputFormat, out: W) -> Result<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Records => self.write_records(out),
        }
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// The two catalogs a dimer scan needs: four qubits for the dimer, two for one site.
#[derive(Debug, Clone)]
pub struct Catalogs {
    pub dimer: AMatrix,
    pub site: AMatrix,
}

impl Catalogs {
    pub fn load(cache_dir: Option<&std::path::Path>) -> Result<Self> {
        Ok(Self { dimer: load_or_build_a_matrix(4, cache_dir)?, site: load_or_build_a_matrix(2, cache_dir)? })
    }
}

/// Per-worker solver state; the catalogs are shared read-only.
pub struct Workspace<'a> {
    pub dimer: MagicContext<'a>,
    pub site: MagicContext<'a>,
}

impl<'a> Workspace<'a> {
    pub fn new(catalogs: &'a Catalogs, tolerance: f64) -> Self {
        Self {
            dimer: MagicContext::with_tolerance(&catalogs.dimer, tolerance),
            site: MagicContext::with_tolerance(&catalogs.site, tolerance),
        }
    }
}

/// Evaluates `f` over `points` on `workers` threads, each owning a
/// [`Workspace`] and a contiguous chunk. Output order equals input order.
pub fn parallel_map<P, R, F>(points: &[P], workers: usize, catalogs: &Catalogs, tolerance: f64, f: F) -> Vec<R>
where
    P: Sync,
    R: Send,
    F: Fn(&mut Workspace<'_>, &P) -> R + Sync,
{
    if points.is_empty() {
        return Vec::new();
    }
    let workers = workers.clamp(1, points.len());
    let chunk = points.len().div_ceil(workers);
    std::thread::scope(|s| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|part| {
                let f = &f;
                s.spawn(move || {
                    let mut ws = Workspace::new(catalogs, tolerance);
                    part.iter().map(|p| f(&mut ws, p)).collect::<Vec<R>>()
                })
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("scan worker panicked")).collect()
    })
}

fn lr_into(rec: &mut ScanRecord, name: &str, ctx: &mut MagicContext<'_>, rho: &QuantumState, diagnostics: bool) {
    match ctx.evaluate(rho) {
        Ok(r) => {
            if diagnostics {
                rec.iterations = Some(r.iterations);
                rec.gap = Some(r.gap);
            }
            rec.push(name, Ok(r.log_free));
        }
        Err(e) => {
            warn!("robustness failed at {:?}: {e}", rec.params);
            rec.push(name, Err(e));
        }
    }
}

fn params(t: f64, u: f64) -> Result<DimerParams> {
    DimerParams::new(t, u)
}

/// Zero-temperature ground-state observables over `U`.
pub fn ground_scan(cfg: &ScanConfig, catalogs: &Catalogs, us: &[f64]) -> Vec<ScanRecord> {
    parallel_map(us, cfg.worker_count(), catalogs, cfg.lp_tol, |ws, &u| {
        let mut rec = ScanRecord::new(&[("U", u)]);
        let p = match params(cfg.t, u) {
            Ok(p) => p,
            Err(e) => {
                rec.fail(e);
                return rec;
            }
        };
        let psi = ground_state(&p);
        let d = double_occupancy(&psi);
        let rdm = local_rdm(&psi);
        for &name in ScanKind::Ground.observables(false) {
            if !cfg.wants(name) {
                continue;
            }
            match name {
                "LR" => lr_into(&mut rec, name, &mut ws.dimer, &psi, true),
                "M1" => rec.push(name, sre(&psi, 1.0)),
                "M2" => rec.push(name, sre(&psi, 2.0)),
                "d" => rec.push(name, clone_result(&d)),
                "E_NSSR" => rec.push(name, clone_result(&d).and_then(nssr_entanglement)),
                "E_PSSR" => rec.push(name, Ok(pssr_entanglement())),
                "S_local" => rec.push(name, intersite_entanglement(&psi)),
                "NG_site" => rec.push(name, non_gaussianity_per_site(&psi)),
                "NG_local" => rec.push(name, local_non_gaussianity(&psi)),
                "LR_local" => match &rdm {
                    Ok(r) => lr_into(&mut rec, name, &mut ws.site, r, false),
                    Err(e) => rec.push(name, Err(Error::InvalidState(e.to_string()))),
                },
                "M2mix_local" => rec.push(name, clone_result(&rdm).map(|r| mixed_sre_2(&r))),
                "delta" => rec.push(name, clone_result(&d).map(parity_delta)),
                _ => unreachable!(),
            }
        }
        rec
    })
}

fn clone_result<T: Clone>(r: &Result<T>) -> Result<T> {
    match r {
        Ok(v) => Ok(v.clone()),
        Err(e) => Err(Error::InvalidState(e.to_string())),
    }
}

/// Thermal observables over the `U × T` grid, `T` varying fastest.
pub fn thermal_scan(cfg: &ScanConfig, catalogs: &Catalogs, us: &[f64], ts: &[f64]) -> Vec<ScanRecord> {
    let points: Vec<(f64, f64)> = us.iter().flat_map(|&u| ts.iter().map(move |&t| (u, t))).collect();
    parallel_map(&points, cfg.worker_count(), catalogs, cfg.lp_tol, |ws, &(u, temp)| {
        let mut rec = ScanRecord::new(&[("U", u), ("T", temp)]);
        let rho = params(cfg.t, u).and_then(|p| p.with_temperature(temp)).and_then(|p| thermal_state(&p));
        let rho = match rho {
            Ok(r) => r,
            Err(e) => {
                rec.fail(e);
                return rec;
            }
        };
        if cfg.wants("LR") {
            lr_into(&mut rec, "LR", &mut ws.dimer, &rho, true);
        }
        if cfg.wants("d") {
            rec.push("d", double_occupancy(&rho));
        }
        if cfg.wants("M2mix") {
            rec.push("M2mix", Ok(mixed_sre_2(&rho)));
        }
        rec
    })
}

/// A located zero boundary of the magic indicator `[LR > tol]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    /// Midpoint of the final bracket.
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    /// Coarse grid points that bracketed the crossing.
    pub coarse_lo: f64,
    pub coarse_hi: f64,
    /// Whether the indicator is on (LR > 0) at the lower end.
    pub magic_below: bool,
}

/// Every sign change of `[lr(x) > threshold]` on a `coarse`-point pre-scan of
/// `[lo, hi]`, each refined by bisection to width `tol`. Ascending order.
pub fn zero_crossings<F>(mut lr: F, lo: f64, hi: f64, coarse: usize, tol: f64, threshold: f64) -> Result<Vec<Crossing>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let grid = GridSpec::linear(lo, hi, coarse.max(2))?.values();
    let mut on = Vec::with_capacity(grid.len());
    for &x in &grid {
        on.push(lr(x)? > threshold);
    }
    let mut out = Vec::new();
    for k in 0..grid.len() - 1 {
        if on[k] == on[k + 1] {
            continue;
        }
        let (mut a, mut b) = (grid[k], grid[k + 1]);
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if (lr(mid)? > threshold) == on[k] {
                a = mid;
            } else {
                b = mid;
            }
        }
        out.push(Crossing {
            value: 0.5 * (a + b),
            lo: a,
            hi: b,
            coarse_lo: grid[k],
            coarse_hi: grid[k + 1],
            magic_below: on[k],
        });
    }
    Ok(out)
}

/// The largest crossing found by [`zero_crossings`].
pub fn critical_boundary<F>(lr: F, lo: f64, hi: f64, coarse: usize, tol: f64, threshold: f64) -> Result<Crossing>
where
    F: FnMut(f64) -> Result<f64>,
{
    zero_crossings(lr, lo, hi, coarse, tol, threshold)?.pop().ok_or(Error::NoBracket { lo, hi })
}

/// `T_c(U)` for each `U`, searched over the `T` grid's range.
pub fn thermal_boundary_scan(cfg: &ScanConfig, catalogs: &Catalogs, us: &[f64], t_grid: &GridSpec) -> Vec<ScanRecord> {
    parallel_map(us, cfg.worker_count(), catalogs, cfg.lp_tol, |ws, &u| {
        let mut rec = ScanRecord::new(&[("U", u)]);
        let found = critical_boundary(
            |temp| {
                let p = params(cfg.t, u)?.with_temperature(temp)?;
                ws.dimer.log_free_robustness(&thermal_state(&p)?)
            },
            t_grid.min,
            t_grid.max,
            t_grid.points,
            cfg.boundary_tol,
            cfg.lp_tol,
        );
        match found {
            Ok(c) => {
                rec.push("T_c", Ok(c.value));
                rec.push("T_lo", Ok(c.lo));
                rec.push("T_hi", Ok(c.hi));
            }
            Err(e) => rec.push("T_c", Err(e)),
        }
        rec
    })
}

/// Observables along one quench trajectory.
pub fn quench_run(cfg: &ScanConfig, catalogs: &Catalogs, spec: &QuenchSpec, times: &[f64]) -> Vec<ScanRecord> {
    parallel_map(times, cfg.worker_count(), catalogs, cfg.lp_tol, |ws, &time| {
        let mut rec = ScanRecord::new(&[("time", time)]);
        let rho = match evolve_dephased(spec, time) {
            Ok(r) => r,
            Err(e) => {
                rec.fail(e);
                return rec;
            }
        };
        if cfg.wants("LR") {
            lr_into(&mut rec, "LR", &mut ws.dimer, &rho, true);
        }
        if cfg.wants("M2mix") {
            rec.push("M2mix", Ok(mixed_sre_2(&rho)));
        }
        if cfg.wants("d") {
            rec.push("d", double_occupancy(&rho));
        }
        if cfg.wants("NG_site") {
            rec.push("NG_site", non_gaussianity_per_site(&rho));
        }
        if cfg.wants("purity") {
            rec.push("purity", Ok(rho.purity()));
        }
        rec
    })
}

/// Default trajectory sampling: 400 points over six oscillation periods.
pub fn default_quench_times(spec: &QuenchSpec) -> Vec<f64> {
    GridSpec::linear(0.0, 6.0 * spec.period(), 400).expect("positive period").values()
}

/// Magic after a transient `Γt = gamma_t` over the `U_i × U_f` grid, `U_f` fastest.
pub fn quench_saturation_scan(
    cfg: &ScanConfig,
    catalogs: &Catalogs,
    uis: &[f64],
    ufs: &[f64],
    gamma: f64,
    gamma_t: f64,
) -> Vec<ScanRecord> {
    let points: Vec<(f64, f64)> = uis.iter().flat_map(|&a| ufs.iter().map(move |&b| (a, b))).collect();
    parallel_map(&points, cfg.worker_count(), catalogs, cfg.lp_tol, |ws, &(ui, uf)| {
        let mut rec = ScanRecord::new(&[("Ui", ui), ("Uf", uf)]);
        let spec = match QuenchSpec::new(ui, uf, cfg.t, gamma) {
            Ok(s) => s,
            Err(e) => {
                rec.fail(e);
                return rec;
            }
        };
        let rho = evolve_dephased(&spec, gamma_t / gamma);
        if cfg.wants("LR") {
            match &rho {
                Ok(r) => lr_into(&mut rec, "LR", &mut ws.dimer, r, true),
                Err(e) => rec.push("LR", Err(Error::InvalidState(e.to_string()))),
            }
        }
        if cfg.wants("LR_inf") {
            match long_time_state(&spec) {
                Ok(r) => lr_into(&mut rec, "LR_inf", &mut ws.dimer, &r, false),
                Err(e) => rec.push("LR_inf", Err(e)),
            }
        }
        if cfg.wants("M2mix") {
            rec.push("M2mix", clone_result(&rho).map(|r| mixed_sre_2(&r)));
        }
        rec
    })
}

/// Magic along a mixing family at fixed `U`.
pub fn mix_scan(cfg: &ScanConfig, catalogs: &Catalogs, pair: MixingPair, u: f64, lambdas: &[f64]) -> Vec<ScanRecord> {
    parallel_map(lambdas, cfg.worker_count(), catalogs, cfg.lp_tol, |ws, &lambda| {
        let mut rec = ScanRecord::new(&[("lambda", lambda)]);
        let rho = match params(cfg.t, u).and_then(|p| mixing_state(pair, lambda, &p)) {
            Ok(r) => r,
            Err(e) => {
                rec.fail(e);
                return rec;
            }
        };
        if cfg.wants("LR") {
            lr_into(&mut rec, "LR", &mut ws.dimer, &rho, true);
        }
        if cfg.wants("M2mix") {
            rec.push("M2mix", Ok(mixed_sre_2(&rho)));
        }
        if cfg.wants("d") {
            rec.push("d", double_occupancy(&rho));
        }
        rec
    })
}

/// All zero crossings of `LR(λ)` along a mixing family.
pub fn mix_boundaries(cfg: &ScanConfig, catalogs: &Catalogs, pair: MixingPair, u: f64, grid: &GridSpec) -> Vec<ScanRecord> {
    let mut ws = Workspace::new(catalogs, cfg.lp_tol);
    let found = params(cfg.t, u).and_then(|p| {
        zero_crossings(
            |lambda| ws.dimer.log_free_robustness(&mixing_state(pair, lambda, &p)?),
            grid.min,
            grid.max,
            grid.points,
            cfg.boundary_tol,
            cfg.lp_tol,
        )
    });
    match found {
        Ok(list) if !list.is_empty() => list
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mut rec = ScanRecord::new(&[("index", k as f64)]);
                rec.push("crossing", Ok(c.value));
                rec.push("lo", Ok(c.lo));
                rec.push("hi", Ok(c.hi));
                rec
            })
            .collect(),
        Ok(_) => {
            let mut rec = ScanRecord::new(&[("index", 0.0)]);
            rec.push("crossing", Err(Error::NoBracket { lo: grid.min, hi: grid.max }));
            vec![rec]
        }
        Err(e) => {
            let mut rec = ScanRecord::new(&[("index", 0.0)]);
            rec.push("crossing", Err(e));
            vec![rec]
        }
    }
}

fn require<T>(v: Option<T>, default: T) -> T {
    v.unwrap_or(default)
}

fn grid_or(spec: Option<GridSpec>, default: &str) -> GridSpec {
    spec.unwrap_or_else(|| default.parse().expect("valid default grid"))
}

/// Runs one scan kind with defaults filled in.
pub fn run(kind: ScanKind, cfg: &ScanConfig, catalogs: &Catalogs) -> Result<ScanTable> {
    cfg.validate(kind)?;
    let (params, records): (Vec<&str>, Vec<ScanRecord>) = match kind {
        ScanKind::Ground => {
            let us = match (cfg.u_grid, cfg.u) {
                (Some(g), _) => g.values(),
                (None, Some(u)) => vec![u],
                (None, None) => grid_or(None, "0.1:100:40:log").values(),
            };
            info!("ground scan over {} points", us.len());
            (vec!["U"], ground_scan(cfg, catalogs, &us))
        }
        ScanKind::Thermal => {
            let us = match (cfg.u_grid, cfg.u) {
                (Some(g), _) => g.values(),
                (None, Some(u)) => vec![u],
                (None, None) => grid_or(None, "0:10:11").values(),
            };
            let t_grid = grid_or(cfg.t_grid, "0.05:5:12");
            if cfg.boundary {
                (vec!["U"], thermal_boundary_scan(cfg, catalogs, &us, &t_grid))
            } else {
                let ts = match (cfg.t_grid, cfg.temperature) {
                    (None, Some(t)) => vec![t],
                    _ => t_grid.values(),
                };
                info!("thermal scan over {} x {} points", us.len(), ts.len());
                (vec!["U", "T"], thermal_scan(cfg, catalogs, &us, &ts))
            }
        }
        ScanKind::Quench => {
            let spec = QuenchSpec::new(require(cfg.u_i, 100.0), require(cfg.u_f, 5.0), cfg.t, require(cfg.gamma, 0.0))?;
            let times = match cfg.time_grid {
                Some(g) => g.values(),
                None => default_quench_times(&spec),
            };
            info!("quench {} -> {} (gamma {}), {} times", spec.u_i, spec.u_f, spec.gamma, times.len());
            (vec!["time"], quench_run(cfg, catalogs, &spec, &times))
        }
        ScanKind::QuenchSaturation => {
            let gamma = require(cfg.gamma, 1.0);
            if !(gamma > 0.0) {
                return Err(Error::InvalidParameter("quench-scan needs gamma > 0".into()));
            }
            let uis = grid_or(cfg.ui_grid, "0:20:11").values();
            let ufs = grid_or(cfg.uf_grid, "0:20:11").values();
            (vec!["Ui", "Uf"], quench_saturation_scan(cfg, catalogs, &uis, &ufs, gamma, 10.0))
        }
        ScanKind::Mix => {
            let pair = require(cfg.pair, MixingPair::PlusMinus);
            let u = require(cfg.u, 4.0);
            let grid = grid_or(cfg.lambda_grid, "0:1:51");
            if cfg.boundary {
                (vec!["index"], mix_boundaries(cfg, catalogs, pair, u, &grid))
            } else {
                (vec!["lambda"], mix_scan(cfg, catalogs, pair, u, &grid.values()))
            }
        }
    };
    let observables = kind
        .observables(cfg.boundary)
        .iter()
        .filter(|o| cfg.wants(o))
        .map(|o| o.to_string())
        .collect();
    Ok(ScanTable { params: params.iter().map(|p| p.to_string()).collect(), observables, records })
}

/// Robustness, SREs (pure input only), mixed 2-SRE and purity of an arbitrary state.
pub fn state_report(rho: &QuantumState, catalog: &AMatrix, tolerance: f64) -> ScanTable {
    let mut ctx = MagicContext::with_tolerance(catalog, tolerance);
    let mut rec = ScanRecord::new(&[("n_qubits", rho.n_qubits() as f64)]);
    match ctx.evaluate(rho) {
        Ok(r) => {
            rec.iterations = Some(r.iterations);
            rec.gap = Some(r.gap);
            rec.push("R", Ok(r.robustness));
            rec.push("LR", Ok(r.log_free));
        }
        Err(e) => {
            let msg = e.to_string();
            rec.push("R", Err(e));
            rec.push("LR", Err(Error::Numerical(msg)));
        }
    }
    let orders = [("M0.5", 0.5), ("M1", 1.0), ("M2", 2.0), ("M3", 3.0)];
    for (name, alpha) in orders {
        rec.push(name, sre(rho, alpha));
    }
    rec.push("M2mix", Ok(mixed_sre_2(rho)));
    rec.push("purity", Ok(rho.purity()));
    let observables = ["R", "LR", "M0.5", "M1", "M2", "M3", "M2mix", "purity"].map(String::from).to_vec();
    ScanTable { params: vec!["n_qubits".into()], observables, records: vec![rec] }
}
