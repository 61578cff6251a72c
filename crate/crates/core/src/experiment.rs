//! Run configuration, orchestration and on-disk artifacts.
//!
//! A run directory holds
//!
//! * `config.txt`: the canonical configuration,
//! * `ledger.csv`: one row per recorded `(t, q)`,
//! * `checkpoints/step_NNNNNNNN.bin`: velocity snapshots,
//! * `summary.json`: run metadata and slack minima,
//! * `BLOWUP`: present only when the run was stopped early.
//!
//! Every CSV starts with `# schema=<name>/v<k> config_hash=<hex>`; readers
//! reject unknown schema versions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::alignment::{holder_fit, sample_angles, xyz_budget, CutoffParams, RieszKernel};
use crate::checkpoint;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::indices::{derive_indices, witness_p};
use crate::ledger::{self, qian_slack, series_for, LedgerRecord};
use crate::solver::{
    init_abc, init_random_divfree, init_taylor_green, init_taylor_green_2d, integrate, RandomInit, SolverConfig,
    SolverState, StepControl,
};

pub const LEDGER_SCHEMA: &str = "ledger/v1";
pub const DIAGNOSTICS_SCHEMA: &str = "diagnostics/v1";
pub const FEASIBILITY_SCHEMA: &str = "feasibility/v1";

/// Name of the random generator recorded in summaries.
pub const RNG_NAME: &str = "ChaCha8 (rand_chacha 0.9), one stream per wavevector / seed";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitialCondition {
    Abc { a: f64, b: f64, c: f64 },
    TaylorGreen,
    TaylorGreen2d,
    Random(RandomInit),
}

/// Parsed run configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid_n: usize,
    pub nu: f64,
    pub t_end: f64,
    pub dt: f64,
    pub cfl: Option<f64>,
    pub record_stride: usize,
    pub checkpoint_stride: usize,
    pub init: InitialCondition,
    pub seed: u64,
    pub q_list: Vec<f64>,
    pub lambda_threshold: Option<f64>,
    pub beta_grid: Vec<f64>,
    pub lambda_exp_grid: Vec<f64>,
    pub angle_pairs: usize,
    pub strain_samples: usize,
    pub vorticity_ceiling: Option<f64>,
    pub output_dir: PathBuf,
    /// Calibrated constant for the `J` bound, if known.
    pub j_bound_c: Option<f64>,
}

const REQUIRED: &[&str] = &["grid_n", "nu_m2_per_s", "t_end_s", "dt_s", "init", "q_list", "output_dir"];
const OPTIONAL: &[&str] = &[
    "cfl",
    "record_stride_steps",
    "checkpoint_stride_records",
    "seed",
    "init_slope",
    "init_k_peak",
    "init_energy_density_m2_per_s2",
    "abc_a_m_per_s",
    "abc_b_m_per_s",
    "abc_c_m_per_s",
    "lambda_threshold_per_s",
    "beta_grid",
    "lambda_exp_grid",
    "angle_pairs",
    "strain_samples",
    "vorticity_ceiling_per_s",
    "j_bound_c",
];

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| cfg_err(format!("`{key}`: cannot parse `{v}`")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|s| parse_num(key, s.trim())).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment. Unknown, duplicate
    /// or missing required keys are errors.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected `key = value`", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !REQUIRED.contains(&k) && !OPTIONAL.contains(&k) {
                return Err(cfg_err(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if map.insert(k.to_string(), v.to_string()).is_some() {
                return Err(cfg_err(format!("line {}: duplicate key `{k}`", lineno + 1)));
            }
        }
        if map.is_empty() {
            return Err(cfg_err("empty configuration"));
        }
        for k in REQUIRED {
            if !map.contains_key(*k) {
                return Err(cfg_err(format!("missing required key `{k}`")));
            }
        }
        let get = |k: &str| map.get(k).map(String::as_str);
        let opt_f = |k: &str| -> Result<Option<f64>> { get(k).map(|v| parse_num(k, v)).transpose() };
        let seed: u64 = get("seed").map(|v| parse_num("seed", v)).transpose()?.unwrap_or(1);
        let init = match get("init").unwrap() {
            "abc" => InitialCondition::Abc {
                a: opt_f("abc_a_m_per_s")?.unwrap_or(1.0),
                b: opt_f("abc_b_m_per_s")?.unwrap_or(1.0),
                c: opt_f("abc_c_m_per_s")?.unwrap_or(1.0),
            },
            "taylor_green" => InitialCondition::TaylorGreen,
            "taylor_green_2d" => InitialCondition::TaylorGreen2d,
            "random" => {
                let d = RandomInit::default();
                InitialCondition::Random(RandomInit {
                    spectrum_slope: opt_f("init_slope")?.unwrap_or(d.spectrum_slope),
                    k_peak: opt_f("init_k_peak")?.unwrap_or(d.k_peak),
                    energy_density: opt_f("init_energy_density_m2_per_s2")?.unwrap_or(d.energy_density),
                    seed,
                })
            }
            other => return Err(cfg_err(format!("unknown init `{other}`"))),
        };
        let cfg = RunConfig {
            grid_n: parse_num("grid_n", get("grid_n").unwrap())?,
            nu: parse_num("nu_m2_per_s", get("nu_m2_per_s").unwrap())?,
            t_end: parse_num("t_end_s", get("t_end_s").unwrap())?,
            dt: parse_num("dt_s", get("dt_s").unwrap())?,
            cfl: opt_f("cfl")?,
            record_stride: get("record_stride_steps").map(|v| parse_num("record_stride_steps", v)).transpose()?.unwrap_or(1),
            checkpoint_stride: get("checkpoint_stride_records")
                .map(|v| parse_num("checkpoint_stride_records", v))
                .transpose()?
                .unwrap_or(1),
            init,
            seed,
            q_list: parse_list("q_list", get("q_list").unwrap())?,
            lambda_threshold: opt_f("lambda_threshold_per_s")?,
            beta_grid: get("beta_grid").map(|v| parse_list("beta_grid", v)).transpose()?.unwrap_or_else(|| vec![0.5, 0.75, 1.0]),
            lambda_exp_grid: get("lambda_exp_grid").map(|v| parse_list("lambda_exp_grid", v)).transpose()?.unwrap_or_default(),
            angle_pairs: get("angle_pairs").map(|v| parse_num("angle_pairs", v)).transpose()?.unwrap_or(100_000),
            strain_samples: get("strain_samples").map(|v| parse_num("strain_samples", v)).transpose()?.unwrap_or(64),
            vorticity_ceiling: opt_f("vorticity_ceiling_per_s")?,
            output_dir: PathBuf::from(get("output_dir").unwrap()),
            j_bound_c: opt_f("j_bound_c")?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        Grid::new(self.grid_n)?;
        let positive = [("nu_m2_per_s", self.nu), ("dt_s", self.dt)];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(cfg_err(format!("`{k}` must be positive, got {v}")));
            }
        }
        if !(self.t_end >= 0.0) {
            return Err(cfg_err(format!("`t_end_s` must be non-negative, got {}", self.t_end)));
        }
        if self.q_list.is_empty() || self.q_list.iter().any(|&q| !(q > 1.0)) {
            return Err(cfg_err(format!("`q_list` must be nonempty with every q > 1, got {:?}", self.q_list)));
        }
        if self.record_stride == 0 || self.checkpoint_stride == 0 {
            return Err(cfg_err("strides must be at least 1"));
        }
        if let Some(l) = self.lambda_threshold {
            if !(l > 0.0) {
                return Err(cfg_err(format!("`lambda_threshold_per_s` must be positive, got {l}")));
            }
        }
        if self.beta_grid.iter().any(|&b| !(b > 0.0 && b <= 1.0)) {
            return Err(cfg_err(format!("`beta_grid` entries must lie in (0, 1], got {:?}", self.beta_grid)));
        }
        if self.lambda_exp_grid.iter().any(|&l| !(2.0..3.0).contains(&l)) {
            return Err(cfg_err(format!("`lambda_exp_grid` entries must lie in [2, 3), got {:?}", self.lambda_exp_grid)));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c <= 1.0) {
                return Err(cfg_err(format!("`cfl` must lie in (0, 1], got {c}")));
            }
        }
        if let InitialCondition::Random(init) = &self.init {
            if !(init.k_peak > 0.0 && init.energy_density > 0.0) {
                return Err(cfg_err("random init needs positive k_peak and energy density"));
            }
        }
        Ok(())
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_canonical(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("grid_n", self.grid_n.to_string());
        kv("nu_m2_per_s", format!("{}", self.nu));
        kv("t_end_s", format!("{}", self.t_end));
        kv("dt_s", format!("{}", self.dt));
        if let Some(c) = self.cfl {
            kv("cfl", format!("{c}"));
        }
        kv("record_stride_steps", self.record_stride.to_string());
        kv("checkpoint_stride_records", self.checkpoint_stride.to_string());
        kv("seed", self.seed.to_string());
        match &self.init {
            InitialCondition::Abc { a, b, c } => {
                kv("init", "abc".into());
                kv("abc_a_m_per_s", format!("{a}"));
                kv("abc_b_m_per_s", format!("{b}"));
                kv("abc_c_m_per_s", format!("{c}"));
            }
            InitialCondition::TaylorGreen => kv("init", "taylor_green".into()),
            InitialCondition::TaylorGreen2d => kv("init", "taylor_green_2d".into()),
            InitialCondition::Random(r) => {
                kv("init", "random".into());
                kv("init_slope", format!("{}", r.spectrum_slope));
                kv("init_k_peak", format!("{}", r.k_peak));
                kv("init_energy_density_m2_per_s2", format!("{}", r.energy_density));
            }
        }
        kv("q_list", fmt_list(&self.q_list));
        if let Some(l) = self.lambda_threshold {
            kv("lambda_threshold_per_s", format!("{l}"));
        }
        kv("beta_grid", fmt_list(&self.beta_grid));
        kv("lambda_exp_grid", fmt_list(&self.lambda_exp_grid));
        kv("angle_pairs", self.angle_pairs.to_string());
        kv("strain_samples", self.strain_samples.to_string());
        if let Some(v) = self.vorticity_ceiling {
            kv("vorticity_ceiling_per_s", format!("{v}"));
        }
        if let Some(c) = self.j_bound_c {
            kv("j_bound_c", format!("{c}"));
        }
        kv("output_dir", self.output_dir.display().to_string());
        s
    }

    /// Content hash of the canonical form, excluding the output directory so
    /// that relocating a run keeps its hash.
    pub fn hash(&self) -> String {
        let text: String = self
            .to_canonical()
            .lines()
            .filter(|l| !l.starts_with("output_dir"))
            .map(|l| format!("{l}\n"))
            .collect();
        content_hash(text.as_bytes())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        if let InitialCondition::Random(ref mut r) = self.init {
            r.seed = seed;
        }
        self
    }

    pub fn initial_state(&self) -> Result<SolverState> {
        let grid = Grid::new(self.grid_n)?;
        let mut s = match &self.init {
            InitialCondition::Abc { a, b, c } => init_abc(&grid, self.nu, *a, *b, *c),
            InitialCondition::TaylorGreen => init_taylor_green(&grid, self.nu),
            InitialCondition::TaylorGreen2d => init_taylor_green_2d(&grid, self.nu),
            InitialCondition::Random(init) => init_random_divfree(&grid, self.nu, init)?,
        };
        s.time = 0.0;
        Ok(s)
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            step: match self.cfl {
                Some(cfl) => StepControl::Cfl { cfl, dt_max: self.dt },
                None => StepControl::Fixed { dt: self.dt },
            },
            t_end: self.t_end,
            scheme: Default::default(),
            dealias: true,
            record_stride: self.record_stride,
            vorticity_ceiling: self.vorticity_ceiling,
        }
    }
}

/// Git-style object hash: SHA-256 of `"blob <len>\0" + data`, hex encoded.
pub fn content_hash(data: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", data.len()).as_bytes());
    h.update(data);
    hex::encode(h.finalize())
}

fn schema_header(schema: &str, config_hash: &str) -> String {
    format!("# schema={schema} config_hash={config_hash}\n")
}

/// Splits a CSV body after checking its schema line. Returns the config
/// hash, the column names and the data rows.
pub fn read_csv(text: &str, expected_schema: &str) -> Result<(String, Vec<String>, Vec<Vec<String>>)> {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    let mut schema = None;
    let mut hash = String::new();
    for tok in header.trim_start_matches('#').split_whitespace() {
        if let Some(v) = tok.strip_prefix("schema=") {
            schema = Some(v.to_string());
        } else if let Some(v) = tok.strip_prefix("config_hash=") {
            hash = v.to_string();
        }
    }
    match schema {
        Some(s) if s == expected_schema => {}
        other => {
            return Err(Error::Schema {
                expected: expected_schema.to_string(),
                found: other.unwrap_or_else(|| "<none>".into()),
            })
        }
    }
    let cols: Vec<String> = lines
        .next()
        .ok_or_else(|| cfg_err("CSV lacks a column header"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok((hash, cols, rows))
}

const LEDGER_COLUMNS: &str = "t,q,big_q,grad_term,rhs,kato_gap,l1_norm,energy,enstrophy";

pub fn ledger_csv(records: &[LedgerRecord], config_hash: &str) -> String {
    let mut s = schema_header(LEDGER_SCHEMA, config_hash);
    s.push_str(LEDGER_COLUMNS);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            r.t, r.q, r.big_q, r.grad_term, r.rhs, r.kato_gap, r.l1_norm, r.energy, r.enstrophy
        );
    }
    s
}

pub fn parse_ledger_csv(text: &str) -> Result<(String, Vec<LedgerRecord>)> {
    let (hash, cols, rows) = read_csv(text, LEDGER_SCHEMA)?;
    if cols.join(",") != LEDGER_COLUMNS {
        return Err(cfg_err(format!("unexpected ledger columns `{}`", cols.join(","))));
    }
    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        let v: Vec<f64> = row.iter().map(|c| parse_num("ledger", c)).collect::<Result<_>>()?;
        if v.len() != 9 {
            return Err(cfg_err("ledger row has the wrong number of fields"));
        }
        out.push(LedgerRecord {
            t: v[0],
            q: v[1],
            big_q: v[2],
            grad_term: v[3],
            rhs: v[4],
            kato_gap: v[5],
            l1_norm: v[6],
            energy: v[7],
            enstrophy: v[8],
            budget: None,
        });
    }
    Ok((hash, out))
}

#[derive(Clone, Debug, Serialize)]
pub struct SlackSummary {
    pub q: f64,
    pub min_slack: f64,
    pub max_abs_rhs: f64,
    pub max_abs_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub config_hash: String,
    pub rng: String,
    pub grid_n: usize,
    pub nu: f64,
    pub steps: usize,
    pub final_time: f64,
    pub records: usize,
    pub checkpoints: usize,
    pub blow_up: Option<String>,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub gamma_l1_running_max: f64,
    pub slack: Vec<SlackSummary>,
}

/// Result of [`cmd_simulate`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub summary: RunSummary,
    pub records: Vec<LedgerRecord>,
}

fn checkpoint_name(step: usize) -> String {
    format!("step_{step:08}.bin")
}

/// Runs the solver, recording the ledger and checkpoints. A blow-up stops
/// the run, leaves the partial outputs plus a `BLOWUP` marker, and is
/// reported in the summary rather than as an error.
pub fn cmd_simulate(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let dir = config.output_dir.clone();
    let ckpt_dir = dir.join("checkpoints");
    fs::create_dir_all(&ckpt_dir)?;
    let marker = dir.join("BLOWUP");
    if marker.exists() {
        fs::remove_file(&marker)?;
    }
    let hash = config.hash();
    fs::write(dir.join("config.txt"), config.to_canonical())?;

    let state = config.initial_state()?;
    let energy0 = crate::solver::energy(&state);
    let mut records: Vec<LedgerRecord> = Vec::new();
    let mut n_records = 0usize;
    let mut n_ckpt = 0usize;
    let mut last_step = 0usize;
    let mut last_time = 0.0;
    let mut last_energy = energy0;
    let result = integrate(state, &config.solver_config(), |s, step| {
        records.extend(ledger::record(s, &config.q_list, None)?);
        if n_records.is_multiple_of(config.checkpoint_stride) {
            checkpoint::save(&ckpt_dir.join(checkpoint_name(step)), s)?;
            n_ckpt += 1;
        }
        n_records += 1;
        last_step = step;
        last_time = s.time;
        last_energy = crate::solver::energy(s);
        Ok(())
    });
    let blow_up = match result {
        Ok(_) => None,
        Err(Error::BlowUp { time, reason }) => {
            let msg = format!("t = {time}: {reason}");
            fs::write(&marker, format!("{msg}\n"))?;
            Some(msg)
        }
        Err(e) => return Err(e),
    };
    fs::write(dir.join("ledger.csv"), ledger_csv(&records, &hash))?;

    let mut slack = Vec::new();
    for &q in &config.q_list {
        let series = series_for(&records, q);
        if let Ok(pts) = qian_slack(&series, config.nu) {
            slack.push(SlackSummary {
                q,
                min_slack: pts.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min),
                max_abs_rhs: series.iter().map(|r| r.rhs.abs()).fold(0.0, f64::max),
                max_abs_residual: pts.iter().map(|p| p.residual.abs()).fold(0.0, f64::max),
            });
        }
    }
    let summary = RunSummary {
        config_hash: hash,
        rng: RNG_NAME.into(),
        grid_n: config.grid_n,
        nu: config.nu,
        steps: last_step,
        final_time: last_time,
        records: n_records,
        checkpoints: n_ckpt,
        blow_up,
        energy_initial: energy0,
        energy_final: last_energy,
        gamma_l1_running_max: records.iter().map(|r| r.l1_norm).fold(0.0, f64::max),
        slack,
    };
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    Ok(RunOutcome { dir, summary, records })
}

/// Checkpoint files of a run directory in step order.
pub fn list_checkpoints(run_dir: &Path) -> Result<Vec<PathBuf>> {
    if !run_dir.is_dir() {
        return Err(Error::MissingRunDir(run_dir.to_path_buf()));
    }
    let dir = run_dir.join("checkpoints");
    if !dir.is_dir() {
        return Err(Error::MissingRunDir(dir));
    }
    let mut v: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "bin"))
        .collect();
    v.sort();
    Ok(v)
}

/// One diagnostics row.
#[derive(Clone, Debug, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    pub q: f64,
    pub lambda_threshold: f64,
    pub beta: f64,
    pub k_int: f64,
    pub x_int: f64,
    pub y_int: f64,
    pub z_int: f64,
    pub abs_x_int: f64,
    pub identity_residual: f64,
    pub x_bound_frobenius: f64,
    pub x_bound_op: f64,
    pub super_points: usize,
    pub pairs: usize,
    pub rho_hat: f64,
    pub lambda_exp: f64,
    pub j: f64,
    /// `|∫Z| ≤ qJ` (with 5% quadrature allowance); vacuous when `ρ̂ = ∞`.
    pub z_chain_ok: bool,
    /// Smallest `C` for which the `J` bound holds on this snapshot.
    pub j_bound_c_required: f64,
    /// `C·(...)Q^{1+γ} + (q−1)/q² ν grad − J` with the configured `C`.
    pub j_bound_margin: Option<f64>,
    pub slack: Option<f64>,
    pub rho_hat_grid: Vec<(f64, f64)>,
}

/// Runs the snapshot diagnostics on every checkpoint of `run_dir`.
pub fn cmd_diagnose(run_dir: &Path, q: f64, beta: f64, lambda_threshold: f64) -> Result<Vec<DiagnosticsRow>> {
    if !run_dir.is_dir() {
        return Err(Error::MissingRunDir(run_dir.to_path_buf()));
    }
    let config = RunConfig::load(&run_dir.join("config.txt"))?;
    let params = CutoffParams::new(lambda_threshold)?;
    if !(q > 1.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(cfg_err(format!("need q > 1 and β in (0, 1], got q={q}, β={beta}")));
    }
    let delta = 1.0 - beta;
    let lambda_exp = 3.0 - beta;
    let idx = derive_indices(q, delta.min(1.0 - 1e-12), witness_p(q, delta.min(1.0 - 1e-12))?)?;
    let hash = config.hash();

    let slack_by_time: Vec<(f64, f64)> = match fs::read_to_string(run_dir.join("ledger.csv")) {
        Ok(text) => {
            let (_, recs) = parse_ledger_csv(&text)?;
            let series = series_for(&recs, q);
            qian_slack(&series, config.nu)
                .map(|pts| pts.iter().map(|p| (p.t, p.slack)).collect())
                .unwrap_or_default()
        }
        Err(_) => Vec::new(),
    };

    let mut kernel: Option<RieszKernel> = None;
    let mut rows = Vec::new();
    for path in list_checkpoints(run_dir)? {
        let state = checkpoint::load(&path)?;
        if kernel.is_none() {
            kernel = Some(RieszKernel::new(state.grid(), lambda_exp)?);
        }
        let omega = state.vorticity();
        let budget = xyz_budget(&state.u_hat, &params, q)?;
        let pairs = sample_angles(&omega, config.angle_pairs, lambda_threshold, config.seed)?;
        let fit = holder_fit(&pairs, beta);
        let rho_hat_grid = config.beta_grid.iter().map(|&b| (b, holder_fit(&pairs, b).rho_hat)).collect();
        let rec = &ledger::record(&state, &[q], None)?[0];
        let (j, z_ok, c_req, margin) = if fit.rho_hat.is_finite() {
            let j = crate::alignment::j_quantity_with(kernel.as_ref().unwrap(), &omega, q, fit.rho_hat)?;
            let a = idx.alpha;
            let coef = rec.l1_norm.powf(idx.theta / (1.0 - a)) / q
                * config.nu.powf(-a / (1.0 - a))
                * fit.rho_hat.powf(-1.0 / a)
                * rec.big_q.powf(1.0 + idx.gamma);
            let dissip = (q - 1.0) / (q * q) * config.nu * rec.grad_term;
            let c_req = if coef > 0.0 { ((j - dissip) / coef).max(0.0) } else { 0.0 };
            let margin = config.j_bound_c.map(|c| c * coef + dissip - j);
            (j, budget.z_int.abs() <= 1.05 * q * j, c_req, margin)
        } else {
            (0.0, true, 0.0, None)
        };
        let slack = slack_by_time
            .iter()
            .find(|(t, _)| (t - state.time).abs() <= 1e-9 * state.time.abs().max(1.0))
            .map(|(_, s)| *s);
        rows.push(DiagnosticsRow {
            t: state.time,
            q,
            lambda_threshold,
            beta,
            k_int: budget.k_int,
            x_int: budget.x_int,
            y_int: budget.y_int,
            z_int: budget.z_int,
            abs_x_int: budget.abs_x_int,
            identity_residual: budget.identity_residual,
            x_bound_frobenius: budget.x_bound_frobenius,
            x_bound_op: budget.x_bound_op,
            super_points: budget.super_threshold_points,
            pairs: pairs.len(),
            rho_hat: fit.rho_hat,
            lambda_exp,
            j,
            z_chain_ok: z_ok,
            j_bound_c_required: c_req,
            j_bound_margin: margin,
            slack,
            rho_hat_grid,
        });
    }
    fs::write(run_dir.join("diagnostics.csv"), diagnostics_csv(&rows, &config.beta_grid, &hash))?;
    Ok(rows)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn diagnostics_csv(rows: &[DiagnosticsRow], beta_grid: &[f64], config_hash: &str) -> String {
    let mut s = schema_header(DIAGNOSTICS_SCHEMA, config_hash);
    s.push_str(
        "t,q,lambda_threshold,beta,k_int,x_int,y_int,z_int,abs_x_int,identity_residual,x_bound_frobenius,\
         x_bound_op,super_points,pairs,rho_hat,lambda_exp,j,z_chain_ok,j_bound_c_required,j_bound_margin,slack",
    );
    for b in beta_grid {
        let _ = write!(s, ",rho_hat_beta_{b}");
    }
    s.push('\n');
    for r in rows {
        let _ = write!(
            s,
            "{:e},{},{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e},{},{:e},{},{:e},{},{}",
            r.t,
            r.q,
            r.lambda_threshold,
            r.beta,
            r.k_int,
            r.x_int,
            r.y_int,
            r.z_int,
            r.abs_x_int,
            r.identity_residual,
            r.x_bound_frobenius,
            r.x_bound_op,
            r.super_points,
            r.pairs,
            r.rho_hat,
            r.lambda_exp,
            r.j,
            r.z_chain_ok,
            r.j_bound_c_required,
            opt(r.j_bound_margin),
            opt(r.slack)
        );
        for (_, rho) in &r.rho_hat_grid {
            let _ = write!(s, ",{rho:e}");
        }
        s.push('\n');
    }
    s
}

/// Feasibility table as CSV.
pub fn cmd_indices(q_values: &[f64], delta_values: &[f64]) -> Result<String> {
    let rows = crate::indices::feasibility_table(q_values, delta_values)?;
    let mut s = schema_header(FEASIBILITY_SCHEMA, "none");
    s.push_str("q,delta,delta_max,beta_threshold,feasible_closed,feasible_open,witness_p,sigma,theta,alpha,gamma\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.q,
            r.delta,
            r.delta_max.map(|d| d.to_string()).unwrap_or_default(),
            r.beta_threshold,
            r.feasible_closed,
            r.feasible_open,
            r.witness_p,
            r.sigma,
            r.theta,
            r.alpha,
            r.gamma
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASIC: &str = "\
# decaying ABC flow
grid_n = 8
nu_m2_per_s = 0.1
t_end_s = 0.1
dt_s = 0.05
init = abc
q_list = 2,3
output_dir = /tmp/unused
";

    #[test]
    fn parses_and_round_trips() {
        let c = RunConfig::parse(BASIC).unwrap();
        assert_eq!(c.grid_n, 8);
        assert_eq!(c.q_list, vec![2.0, 3.0]);
        let back = RunConfig::parse(&c.to_canonical()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(matches!(RunConfig::parse(""), Err(Error::Config(_))));
        assert!(RunConfig::parse(&format!("{BASIC}bogus_key = 1\n")).is_err());
        assert!(RunConfig::parse(&BASIC.replace("init = abc\n", "")).is_err());
        assert!(RunConfig::parse(&BASIC.replace("q_list = 2,3", "q_list = 1,2")).is_err());
        assert!(RunConfig::parse(&format!("{BASIC}grid_n = 16\n")).is_err());
    }

    #[test]
    fn hash_ignores_output_dir_but_not_physics() {
        let a = RunConfig::parse(BASIC).unwrap();
        let b = RunConfig::parse(&BASIC.replace("/tmp/unused", "/tmp/other")).unwrap();
        let c = RunConfig::parse(&BASIC.replace("0.1\nt_end", "0.2\nt_end")).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn content_hash_matches_git_blob_convention() {
        // sha256 object id of the empty blob
        assert_eq!(
            content_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }

    #[test]
    fn unknown_schema_is_rejected() {
        let text = "# schema=ledger/v2 config_hash=abc\nt\n";
        assert!(matches!(parse_ledger_csv(text), Err(Error::Schema { .. })));
        assert!(matches!(parse_ledger_csv("t,q\n"), Err(Error::Schema { .. })));
    }
}
