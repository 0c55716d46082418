//! Run-configuration parsing and command orchestration for the `cgdyn`
//! binary.
//!
//! Config files are line-oriented `key = value` text (`#` comments). Parsing
//! is strict: every key must belong to the executed command's vocabulary, so
//! a typo cannot silently fall back to a default in the middle of a long
//! Monte Carlo run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::conditional::{
    build_coefficient_table, check_stationarity, CoefficientTable, Engine, GridSpec,
};
use crate::error::CgError;
use crate::experiments::{
    condition_cs1_check, marginal_study, pathwise_study, residence_time_study,
    sample_well_initials, DynamicsKind, DEFAULT_INITIAL_STRIDE,
};
use crate::integrate::{em_step_freeenergy, em_step_reduced, FullDynamics, FullState, NoiseStream, ReducedState};
use crate::model::{from_names, ModelSpec, ReactionCoordinate};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    EstimateCoefficients,
    Simulate,
    Residence,
    Pathwise,
    Marginals,
    Check,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EstimateCoefficients => "estimate-coefficients",
            Command::Simulate => "simulate",
            Command::Residence => "residence",
            Command::Pathwise => "pathwise",
            Command::Marginals => "marginals",
            Command::Check => "check",
        }
    }
}

/// Parsed `key = value` configuration.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse_str(text: &str) -> Result<Self, CgError> {
        let mut entries = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CgError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(CgError::Config(format!("line {}: empty key", lineno + 1)));
            }
            if entries.insert(key.clone(), value).is_some() {
                return Err(CgError::Config(format!(
                    "line {}: duplicate key `{key}`",
                    lineno + 1
                )));
            }
        }
        Ok(RunConfig { entries })
    }

    pub fn load(path: &Path) -> Result<Self, CgError> {
        Self::parse_str(&std::fs::read_to_string(path)?)
    }

    /// Canonical serialization; `parse_str(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    pub fn set(&mut self, key: &str, value: String) {
        self.entries.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, CgError>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|e| {
                CgError::Config(format!("key `{key}`: cannot parse `{v}`: {e}"))
            }),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, CgError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?
            .ok_or_else(|| CgError::Config(format!("missing required key `{key}`")))
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64, CgError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list_f64(&self, key: &str) -> Result<Vec<f64>, CgError> {
        let raw: String = self.require(key)?;
        raw.split(',')
            .map(|s| {
                s.trim().parse::<f64>().map_err(|e| {
                    CgError::Config(format!("key `{key}`: bad list entry `{s}`: {e}"))
                })
            })
            .collect()
    }

    /// Strict-mode check: reject keys outside the command's vocabulary.
    fn check_known_keys(&self, allowed: &[&str]) -> Result<(), CgError> {
        let unknown: Vec<&str> = self
            .entries
            .keys()
            .map(|k| k.as_str())
            .filter(|k| !allowed.contains(k))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(CgError::Config(format!(
                "unknown config key(s): {}",
                unknown.join(", ")
            )))
        }
    }

    fn model_params(&self) -> Result<BTreeMap<String, f64>, CgError> {
        let mut params = BTreeMap::new();
        for key in ["epsilon", "l0", "theta0", "ktheta"] {
            if let Some(v) = self.parsed::<f64>(key)? {
                params.insert(key.to_string(), v);
            }
        }
        Ok(params)
    }

    fn resolve_model(&self) -> Result<(ModelSpec, ReactionCoordinate), CgError> {
        let model: String = self.require("model")?;
        let rc: String = self.require("rc")?;
        from_names(&model, &rc, &self.model_params()?)
    }

    fn grid(&self) -> Result<GridSpec, CgError> {
        let min = self.require("grid_min")?;
        let max = self.require("grid_max")?;
        let step = self.require("grid_step")?;
        let refine = match (
            self.parsed::<f64>("refine_min")?,
            self.parsed::<f64>("refine_max")?,
            self.parsed::<f64>("refine_step")?,
        ) {
            (None, None, None) => None,
            (Some(a), Some(b), Some(s)) => Some((a, b, s)),
            _ => {
                return Err(CgError::Config(
                    "refine_min/refine_max/refine_step must be given together".to_string(),
                ))
            }
        };
        Ok(GridSpec {
            min,
            max,
            step,
            refine,
        })
    }

    fn engine(&self) -> Result<Engine, CgError> {
        match self.get("engine").unwrap_or("quadrature") {
            "quadrature" => Ok(Engine::Quadrature),
            "mc" => Ok(Engine::MonteCarlo {
                n_steps: self.parsed::<u64>("mc_steps")?.unwrap_or(400_000),
                dt: self.f64_or("mc_dt", 1e-4)?,
                seed: self.require("seed")?,
            }),
            other => Err(CgError::Config(format!(
                "unknown engine `{other}` (expected quadrature or mc)"
            ))),
        }
    }

    /// Provenance header: the full resolved configuration, one comment line
    /// per key (no timestamps, so reruns are bit-identical).
    fn provenance(&self, command: Command) -> Vec<String> {
        let mut lines = vec![format!("command = {}", command.name())];
        for (k, v) in &self.entries {
            lines.push(format!("{k} = {v}"));
        }
        lines
    }
}

const COMMON_KEYS: &[&str] = &[
    "model", "rc", "epsilon", "l0", "theta0", "ktheta", "beta", "dt", "seed", "out_dir",
    "workers",
];
const GRID_KEYS: &[&str] = &[
    "grid_min",
    "grid_max",
    "grid_step",
    "refine_min",
    "refine_max",
    "refine_step",
    "engine",
    "mc_steps",
    "mc_dt",
];

fn allowed_keys(command: Command) -> Vec<&'static str> {
    let mut keys: Vec<&str> = COMMON_KEYS.to_vec();
    match command {
        Command::EstimateCoefficients => keys.extend(GRID_KEYS),
        Command::Simulate => {
            keys.extend(GRID_KEYS);
            keys.extend(["dynamics", "t_final", "stride", "table"]);
        }
        Command::Residence => {
            keys.extend(GRID_KEYS);
            keys.extend(["dynamics", "threshold", "n", "stride", "table"]);
        }
        Command::Pathwise => {
            keys.extend(GRID_KEYS);
            keys.extend(["epsilons", "t_final", "replicas", "checkpoints"]);
        }
        Command::Marginals => {
            keys.extend(GRID_KEYS);
            keys.extend(["t_checkpoints", "n", "bins", "threshold", "stride", "table"]);
        }
        Command::Check => {}
    }
    keys
}

fn load_or_build_table(
    config: &RunConfig,
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    beta: f64,
) -> Result<CoefficientTable, CgError> {
    if let Some(path) = config.get("table") {
        return CoefficientTable::read_csv(Path::new(path));
    }
    build_coefficient_table(model, rc, beta, &config.grid()?, &config.engine()?)
}

fn csv_writer(path: &Path, header_lines: &[String]) -> Result<std::io::BufWriter<std::fs::File>, CgError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    for line in header_lines {
        writeln!(f, "# {line}")?;
    }
    Ok(f)
}

/// Execute one command against a parsed configuration; artifacts land in
/// `out_dir`. Strict key validation happens first.
pub fn run(command: Command, config: &RunConfig, out_dir: &Path) -> Result<(), CgError> {
    config.check_known_keys(&allowed_keys(command))?;
    std::fs::create_dir_all(out_dir)?;
    match command {
        Command::EstimateCoefficients => cmd_estimate(config, out_dir),
        Command::Simulate => cmd_simulate(config, out_dir),
        Command::Residence => cmd_residence(config, out_dir),
        Command::Pathwise => cmd_pathwise(config, out_dir),
        Command::Marginals => cmd_marginals(config, out_dir),
        Command::Check => cmd_check(),
    }
}

fn cmd_estimate(config: &RunConfig, out_dir: &Path) -> Result<(), CgError> {
    let (model, rc) = config.resolve_model()?;
    let beta = config.require("beta")?;
    let table = build_coefficient_table(&model, &rc, beta, &config.grid()?, &config.engine()?)?;
    let residual = check_stationarity(&table);
    let path = out_dir.join(format!("coefficients_{}_{}.csv", model.name(), rc.name()));
    table.write_csv(&path, &config.provenance(Command::EstimateCoefficients))?;
    println!(
        "coefficients: {} nodes on [{}, {}], stationarity residual {:.3e} -> {}",
        table.grid().len(),
        table.grid().first().unwrap(),
        table.grid().last().unwrap(),
        residual,
        path.display()
    );
    Ok(())
}

fn cmd_simulate(config: &RunConfig, out_dir: &Path) -> Result<(), CgError> {
    let (model, rc) = config.resolve_model()?;
    let beta = config.require("beta")?;
    let dt: f64 = config.require("dt")?;
    let t_final: f64 = config.require("t_final")?;
    let seed: u64 = config.require("seed")?;
    let stride: u64 = config.parsed("stride")?.unwrap_or(100).max(1);
    let kind = parse_kind(config.get("dynamics").unwrap_or("full"))?;
    let n_steps = (t_final / dt).round() as u64;
    let header = config.provenance(Command::Simulate);
    let path = out_dir.join(format!("trajectory_{}.csv", kind.label()));
    let mut noise = NoiseStream::new(seed, 0);

    match kind {
        DynamicsKind::Full => {
            let mut f = csv_writer(&path, &header)?;
            let cols: Vec<String> = (1..=model.dimension()).map(|i| format!("x{i}")).collect();
            writeln!(f, "t,{},xi", cols.join(","))?;
            let mut dynamics = FullDynamics::new(&model, dt, beta);
            let mut state = FullState {
                x: model.equilibrium().to_vec(),
                t: 0.0,
            };
            let write_row = |f: &mut dyn std::io::Write, s: &FullState| -> Result<(), CgError> {
                write!(f, "{:.16e}", s.t)?;
                for v in &s.x {
                    write!(f, ",{v:.16e}")?;
                }
                writeln!(f, ",{:.16e}", rc.value(&s.x))?;
                Ok(())
            };
            write_row(&mut f, &state)?;
            for step in 1..=n_steps {
                dynamics.step(&mut state, &mut noise)?;
                if step % stride == 0 || step == n_steps {
                    write_row(&mut f, &state)?;
                }
            }
        }
        DynamicsKind::Effective | DynamicsKind::FreeEnergy => {
            let table = load_or_build_table(config, &model, &rc, beta)?;
            let mut f = csv_writer(&path, &header)?;
            writeln!(f, "t,value")?;
            let mut state = ReducedState {
                y: rc.value(model.equilibrium()),
                t: 0.0,
            };
            writeln!(f, "{:.16e},{:.16e}", state.t, state.y)?;
            let sqrt_dt = dt.sqrt();
            for step in 1..=n_steps {
                let db = sqrt_dt * noise.standard_normal();
                if kind == DynamicsKind::Effective {
                    em_step_reduced(&table, &mut state, dt, beta, db)?;
                } else {
                    em_step_freeenergy(|z| table.interpolate(z).2, &mut state, dt, beta, db)?;
                }
                if step % stride == 0 || step == n_steps {
                    writeln!(f, "{:.16e},{:.16e}", state.t, state.y)?;
                }
            }
        }
    }
    println!(
        "trajectory: {} dynamics, {} steps at dt {} -> {}",
        kind.label(),
        n_steps,
        dt,
        path.display()
    );
    Ok(())
}

fn parse_kind(s: &str) -> Result<DynamicsKind, CgError> {
    match s {
        "full" => Ok(DynamicsKind::Full),
        "effective" => Ok(DynamicsKind::Effective),
        "free_energy" => Ok(DynamicsKind::FreeEnergy),
        other => Err(CgError::Config(format!(
            "unknown dynamics `{other}` (expected full, effective or free_energy)"
        ))),
    }
}

fn cmd_residence(config: &RunConfig, out_dir: &Path) -> Result<(), CgError> {
    let (model, rc) = config.resolve_model()?;
    let beta = config.require("beta")?;
    let dt: f64 = config.require("dt")?;
    let seed: u64 = config.require("seed")?;
    let threshold: f64 = config.require("threshold")?;
    let n: usize = config.require("n")?;
    let stride: u64 = config.parsed("stride")?.unwrap_or(DEFAULT_INITIAL_STRIDE);
    let kinds: Result<Vec<DynamicsKind>, CgError> = config
        .get("dynamics")
        .unwrap_or("full,effective,free_energy")
        .split(',')
        .map(|s| parse_kind(s.trim()))
        .collect();
    let kinds = kinds?;

    let (initials, accept) =
        sample_well_initials(&model, &rc, threshold, n, dt, beta, stride, seed)?;
    println!("initials: {n} configurations, acceptance fraction {accept:.3}");
    let table = if kinds.iter().any(|k| *k != DynamicsKind::Full) {
        Some(load_or_build_table(config, &model, &rc, beta)?)
    } else {
        None
    };

    let path = out_dir.join("residence.csv");
    let mut f = csv_writer(&path, &config.provenance(Command::Residence))?;
    writeln!(f, "dynamics,n,mean_tau,half_ci,threshold")?;
    for (i, kind) in kinds.iter().enumerate() {
        let report = residence_time_study(
            &model,
            &rc,
            table.as_ref(),
            &initials,
            threshold,
            n,
            dt,
            beta,
            // distinct noise per sub-study, reproducible across worker counts
            seed.wrapping_add(1 + i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            *kind,
        )?;
        writeln!(
            f,
            "{},{},{:.16e},{:.16e},{:.16e}",
            report.dynamics_kind.label(),
            report.n_traj,
            report.mean_tau,
            report.half_ci,
            report.threshold
        )?;
        println!(
            "residence [{}]: mean tau = {:.3} +- {:.3} (95% CI, n = {})",
            report.dynamics_kind.label(),
            report.mean_tau,
            report.half_ci,
            report.n_traj
        );
    }
    println!("-> {}", path.display());
    Ok(())
}

fn cmd_pathwise(config: &RunConfig, out_dir: &Path) -> Result<(), CgError> {
    let (_, rc) = config.resolve_model()?;
    let model_name: String = config.require("model")?;
    let rc_name: String = config.require("rc")?;
    let beta = config.require("beta")?;
    let dt: f64 = config.require("dt")?;
    let seed: u64 = config.require("seed")?;
    let t_final: f64 = config.require("t_final")?;
    let epsilons = config.list_f64("epsilons")?;
    let replicas: usize = config.parsed("replicas")?.unwrap_or(100);
    let checkpoints: usize = config.parsed("checkpoints")?.unwrap_or(200);
    let grid = config.grid()?;
    let engine = config.engine()?;
    let base_params = config.model_params()?;

    let factory = |eps: f64| -> Result<(ModelSpec, CoefficientTable), CgError> {
        let mut params = base_params.clone();
        params.insert("epsilon".to_string(), eps);
        let (model, rc) = from_names(&model_name, &rc_name, &params)?;
        let table = build_coefficient_table(&model, &rc, beta, &grid, &engine)?;
        Ok((model, table))
    };
    let reports = pathwise_study(
        &factory, &rc, &epsilons, t_final, dt, beta, replicas, checkpoints, seed,
    )?;

    let path = out_dir.join("pathwise.csv");
    let mut f = csv_writer(&path, &config.provenance(Command::Pathwise))?;
    writeln!(f, "epsilon,sup_rms,n_replicas")?;
    for r in &reports {
        writeln!(f, "{:.16e},{:.16e},{}", r.epsilon, r.sup_rms, r.n_replicas)?;
        println!(
            "pathwise [eps = {:.1e}]: sup-t RMS deviation = {:.4e} ({} replicas)",
            r.epsilon, r.sup_rms, r.n_replicas
        );
    }
    println!("-> {}", path.display());
    Ok(())
}

fn cmd_marginals(config: &RunConfig, out_dir: &Path) -> Result<(), CgError> {
    let (model, rc) = config.resolve_model()?;
    let beta = config.require("beta")?;
    let dt: f64 = config.require("dt")?;
    let seed: u64 = config.require("seed")?;
    let threshold: f64 = config.require("threshold")?;
    let n: usize = config.require("n")?;
    let bins: usize = config.parsed("bins")?.unwrap_or(50);
    let stride: u64 = config.parsed("stride")?.unwrap_or(DEFAULT_INITIAL_STRIDE);
    let checkpoints = config.list_f64("t_checkpoints")?;

    let (initials, _) = sample_well_initials(&model, &rc, threshold, n, dt, beta, stride, seed)?;
    let table = load_or_build_table(config, &model, &rc, beta)?;
    let report = marginal_study(
        &model,
        &rc,
        &table,
        &initials,
        &checkpoints,
        n,
        bins,
        dt,
        beta,
        seed.wrapping_add(1),
    )?;

    let path = out_dir.join("marginals.csv");
    let mut f = csv_writer(&path, &config.provenance(Command::Marginals))?;
    writeln!(f, "t,tv")?;
    for (t, tv) in report.t_checkpoints.iter().zip(&report.tv_distance) {
        writeln!(f, "{t:.16e},{tv:.16e}")?;
        println!("marginals [t = {t}]: TV = {tv:.4}");
    }
    println!("-> {}", path.display());
    Ok(())
}

/// Invariant suite over the builtin models: analytic derivatives vs finite
/// differences, constraint orthogonality, and the reduced-model stationarity
/// identity. Prints one PASS/FAIL line per check.
fn cmd_check() -> Result<(), CgError> {
    let mut failures = 0usize;
    let mut report = |name: &str, ok: bool, detail: String| {
        println!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // finite-difference validation of the analytic gradients
    let fd_check = |model: &ModelSpec| -> f64 {
        let h = 1e-5;
        let mut worst = 0.0f64;
        let mut noise = NoiseStream::new(12345, 0);
        for _ in 0..50 {
            let x: Vec<f64> = model
                .sampling_box()
                .iter()
                .map(|&(lo, hi)| 0.5 * (lo + hi) + 0.2 * (hi - lo) * noise.standard_normal())
                .collect();
            let g = model.gradient(&x);
            let mut xp = x.clone();
            for i in 0..x.len() {
                xp[i] = x[i] + h;
                let vp = model.energy(&xp);
                xp[i] = x[i] - h;
                let vm = model.energy(&xp);
                xp[i] = x[i];
                let fd = (vp - vm) / (2.0 * h);
                worst = worst.max((g[i] - fd).abs() / fd.abs().max(1.0));
            }
        }
        worst
    };

    let dw = crate::model::builtin_doublewell(0.01)?;
    let e = fd_check(&dw);
    report("doublewell gradient vs FD", e < 1e-6, format!("max rel err {e:.2e}"));
    let (ta, theta) = crate::model::builtin_threeatom(1e-3, 1.0, 1.187, 208.0)?;
    let e = fd_check(&ta);
    report("threeatom gradient vs FD", e < 1e-6, format!("max rel err {e:.2e}"));

    let zs = [-0.6, -0.3, 0.0, 0.3, 0.6];
    let u2 = condition_cs1_check(&dw, &crate::model::builtin_xi2(), &zs)?;
    report("xi2 constraint orthogonality", u2 < 1e-10, format!("max |u| = {u2:.2e}"));
    let u1 = condition_cs1_check(&dw, &crate::model::builtin_xi1(), &zs)?;
    report(
        "xi1 non-orthogonality (expected positive)",
        u1 > 0.1,
        format!("max |u| = {u1:.3}"),
    );
    let u3 = condition_cs1_check(&ta, &theta, &[0.9, 1.0, 1.187, 1.3])?;
    report("threeatom constraint orthogonality", u3 < 1e-6, format!("max |u| = {u3:.2e}"));

    // stationarity of the closed-form xi1 reduced model
    let dz = 1e-4_f64;
    let nn = (3.0 / dz).round() as usize;
    let grid: Vec<f64> = (0..=nn).map(|i| -1.5 + i as f64 * dz).collect();
    let table = CoefficientTable::from_functions(
        grid,
        |z| -4.0 * z * (z * z - 1.0),
        |_| 1.0,
        |z| 4.0 * z * (z * z - 1.0),
        3.0,
    )?;
    let r = check_stationarity(&table);
    report("xi1 analytic stationarity identity", r < 1e-6, format!("residual {r:.2e}"));

    if failures > 0 {
        Err(CgError::Model(format!("{failures} check(s) failed")))
    } else {
        println!("all checks passed");
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_roundtrip() {
        let text = "# comment\nmodel = doublewell\nrc = xi2\nbeta = 3\n\nseed = 7\n";
        let c = RunConfig::parse_str(text).unwrap();
        assert_eq!(c.get("model"), Some("doublewell"));
        assert_eq!(c.get("beta"), Some("3"));
        let again = RunConfig::parse_str(&c.serialize()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn malformed_lines_are_rejected() {
        assert!(RunConfig::parse_str("model doublewell").is_err());
        assert!(RunConfig::parse_str("= 3").is_err());
        assert!(RunConfig::parse_str("a = 1\na = 2").is_err());
    }

    #[test]
    fn unknown_keys_are_listed() {
        let c = RunConfig::parse_str("model = doublewell\nrc = xi1\nbogus = 1\nwrong = 2")
            .unwrap();
        let err = c
            .check_known_keys(&allowed_keys(Command::EstimateCoefficients))
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus") && msg.contains("wrong"), "{msg}");
    }

    #[test]
    fn missing_required_key_names_it() {
        let c = RunConfig::parse_str("model = doublewell\nrc = xi1").unwrap();
        let err = c.require::<f64>("beta").unwrap_err();
        assert!(err.to_string().contains("beta"));
    }

    #[test]
    fn engine_parsing() {
        let c = RunConfig::parse_str("engine = quadrature").unwrap();
        assert_eq!(c.engine().unwrap(), Engine::Quadrature);
        let c = RunConfig::parse_str("engine = mc\nseed = 5\nmc_steps = 100").unwrap();
        assert!(matches!(
            c.engine().unwrap(),
            Engine::MonteCarlo {
                n_steps: 100,
                seed: 5,
                ..
            }
        ));
        let c = RunConfig::parse_str("engine = nonsense").unwrap();
        assert!(c.engine().is_err());
    }

    #[test]
    fn grid_refinement_requires_all_three_keys() {
        let base = "grid_min = -1\ngrid_max = 1\ngrid_step = 0.1\n";
        let c = RunConfig::parse_str(base).unwrap();
        assert!(c.grid().unwrap().refine.is_none());
        let c = RunConfig::parse_str(&format!("{base}refine_min = -0.3")).unwrap();
        assert!(c.grid().is_err());
        let c = RunConfig::parse_str(&format!(
            "{base}refine_min = -0.3\nrefine_max = 0.3\nrefine_step = 0.005"
        ))
        .unwrap();
        assert_eq!(c.grid().unwrap().refine, Some((-0.3, 0.3, 0.005)));
    }

    #[test]
    fn check_command_passes_on_builtins() {
        run(Command::Check, &RunConfig::default(), Path::new(".")).unwrap();
    }
}
