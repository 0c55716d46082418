//! Conditional expectations over the level sets `Sigma_z` and assembly of
//! the effective-coefficient table `(z, b, sigma, A')`.
//!
//! Two independent engines compute `E[g | xi = z]` under the conditioned
//! measure `mu_z` with co-area weight `exp(-beta V) |grad xi|^{-1} dsigma`:
//!
//! * a deterministic adaptive quadrature along the one-parameter level-set
//!   chart (2D models only), and
//! * a constrained Monte Carlo walk on `Sigma_z` (any dimension).
//!
//! Each validates the other; the cross-engine agreement is part of the
//! test suite.

use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;

use crate::error::CgError;
use crate::geometry::{self, drift_integrand, local_mean_force};
use crate::integrate::NoiseStream;
use crate::model::{ModelSpec, ReactionCoordinate};

/// Result of one conditional-expectation evaluation.
#[derive(Debug, Clone, Copy)]
pub struct ConditionalEstimate {
    pub value: f64,
    /// Blocked standard error; 0 for the deterministic quadrature engine.
    pub std_error: f64,
    pub n_samples: u64,
}

/// Which conditional engine to use when tabulating coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Engine {
    Quadrature,
    MonteCarlo { n_steps: u64, dt: f64, seed: u64 },
}

/// Tabulation grid: a coarse step over `[min, max]` with an optional refined
/// sub-range `(min, max, step)`.
#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub step: f64,
    pub refine: Option<(f64, f64, f64)>,
}

impl GridSpec {
    pub fn uniform(min: f64, max: f64, step: f64) -> Self {
        GridSpec {
            min,
            max,
            step,
            refine: None,
        }
    }

    /// Sorted, strictly increasing node list; refined nodes replace the
    /// coarse ones inside the refined sub-range.
    pub fn nodes(&self) -> Result<Vec<f64>, CgError> {
        if !(self.max > self.min) || !(self.step > 0.0) {
            return Err(CgError::Config(format!(
                "invalid grid: min {} max {} step {}",
                self.min, self.max, self.step
            )));
        }
        let mut nodes = Vec::new();
        let push_range = |nodes: &mut Vec<f64>, lo: f64, hi: f64, step: f64| {
            let n = ((hi - lo) / step).round() as usize;
            for i in 0..=n {
                nodes.push(lo + i as f64 * step);
            }
        };
        match self.refine {
            None => push_range(&mut nodes, self.min, self.max, self.step),
            Some((rlo, rhi, rstep)) => {
                if !(rhi > rlo) || !(rstep > 0.0) || rlo < self.min || rhi > self.max {
                    return Err(CgError::Config(format!(
                        "invalid refined grid ({rlo}, {rhi}, {rstep})"
                    )));
                }
                push_range(&mut nodes, self.min, self.max, self.step);
                nodes.retain(|&z| z < rlo - 1e-12 || z > rhi + 1e-12);
                push_range(&mut nodes, rlo, rhi, rstep);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        nodes.dedup_by(|a, b| (*a - *b).abs() < self.step * 1e-9);
        Ok(nodes)
    }
}

// ---------------------------------------------------------------------------
// Quadrature engine
// ---------------------------------------------------------------------------

const SCAN_POINTS: usize = 2001;
/// Weight support cutoff: keep chart points with beta (V - Vmin) below this.
const SUPPORT_LOG_CUTOFF: f64 = 500.0;
const SIMPSON_MAX_DEPTH: u32 = 30;
const SIMPSON_REL_TOL: f64 = 1e-11;

/// Evaluate the weighted integrals `I_0 = int w` and `I_k = int w g_k` along
/// the chart of `Sigma_z`, with `w = exp(-beta (V - Vmin)) |grad xi|^{-1}
/// ||d chart/ds||`. The common offset `Vmin` cancels in every ratio.
fn weighted_chart_integrals(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    observables: &[&(dyn Fn(&[f64]) -> f64 + Sync)],
    z: f64,
    beta: f64,
) -> Result<Vec<f64>, CgError> {
    if !rc.has_chart() {
        return Err(CgError::MissingChart);
    }
    let (a0, b0) = rc.chart_range();
    let ds = (b0 - a0) / (SCAN_POINTS - 1) as f64;

    // Locate the support of the Boltzmann weight along the chart.
    let mut vmin = f64::INFINITY;
    let mut energies = vec![f64::INFINITY; SCAN_POINTS];
    for (i, e) in energies.iter_mut().enumerate() {
        let x = rc.chart(z, a0 + i as f64 * ds)?;
        let v = model.energy(&x);
        if v.is_finite() {
            *e = v;
            vmin = vmin.min(v);
        }
    }
    if !vmin.is_finite() {
        return Err(CgError::EmptyLevelSet);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (i, &v) in energies.iter().enumerate() {
        if beta * (v - vmin) <= SUPPORT_LOG_CUTOFF {
            let s = a0 + i as f64 * ds;
            lo = lo.min(s);
            hi = hi.max(s);
        }
    }
    let lo = (lo - 2.0 * ds).max(a0);
    let hi = (hi + 2.0 * ds).min(b0);

    let n_vals = observables.len() + 1;
    let eval = |s: f64, out: &mut Vec<f64>| {
        out.clear();
        let x = rc.chart(z, s).expect("chart checked above");
        // chart speed ||d chart / ds|| by central differences
        let h = 1e-6;
        let xp = rc.chart(z, s + h).unwrap();
        let xm = rc.chart(z, s - h).unwrap();
        let mut speed2 = 0.0;
        for i in 0..x.len() {
            let d = (xp[i] - xm[i]) / (2.0 * h);
            speed2 += d * d;
        }
        let g = rc.gradient(&x);
        let gn = geometry::norm(&g);
        let v = model.energy(&x);
        let w = if v.is_finite() && gn > 1e-12 {
            (-beta * (v - vmin)).exp() * speed2.sqrt() / gn
        } else {
            0.0
        };
        out.push(w);
        for obs in observables {
            out.push(if w > 0.0 { w * obs(&x) } else { 0.0 });
        }
    };

    // Coarse scan of magnitudes to set absolute tolerances per component.
    let mut scales = vec![0.0f64; n_vals];
    let mut buf = Vec::with_capacity(n_vals);
    let probe = 201;
    let dprobe = (hi - lo) / (probe - 1) as f64;
    for i in 0..probe {
        eval(lo + i as f64 * dprobe, &mut buf);
        for (sc, v) in scales.iter_mut().zip(&buf) {
            *sc = sc.max(v.abs());
        }
    }
    let width = hi - lo;
    let tols: Vec<f64> = scales
        .iter()
        .map(|s| (s.max(1e-300)) * width * SIMPSON_REL_TOL)
        .collect();

    // Adaptive Simpson on a fixed initial partition (the weight can be a
    // narrow spike; the partition guarantees we do not step over it).
    let panels = 64usize;
    let mut total = vec![0.0; n_vals];
    let dpanel = width / panels as f64;
    let mut fa = Vec::with_capacity(n_vals);
    let mut fb = Vec::with_capacity(n_vals);
    for p in 0..panels {
        let a = lo + p as f64 * dpanel;
        let b = a + dpanel;
        eval(a, &mut fa);
        eval(b, &mut fb);
        let tol_panel: Vec<f64> = tols.iter().map(|t| t / panels as f64).collect();
        let part = adaptive_simpson_vec(&eval, a, b, &fa, &fb, &tol_panel, SIMPSON_MAX_DEPTH);
        for (t, v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }

    if !(total[0] > 1e-300) {
        return Err(CgError::EmptyLevelSet);
    }
    Ok(total)
}

fn simpson(fa: &[f64], fm: &[f64], fb: &[f64], h: f64, out: &mut [f64]) {
    for i in 0..out.len() {
        out[i] = h / 6.0 * (fa[i] + 4.0 * fm[i] + fb[i]);
    }
}

fn adaptive_simpson_vec(
    eval: &impl Fn(f64, &mut Vec<f64>),
    a: f64,
    b: f64,
    fa: &[f64],
    fb: &[f64],
    tol: &[f64],
    depth: u32,
) -> Vec<f64> {
    let n = fa.len();
    let m = 0.5 * (a + b);
    let mut fm = Vec::with_capacity(n);
    eval(m, &mut fm);
    let mut whole = vec![0.0; n];
    simpson(fa, &fm, fb, b - a, &mut whole);

    let ml = 0.5 * (a + m);
    let mr = 0.5 * (m + b);
    let mut fml = Vec::with_capacity(n);
    let mut fmr = Vec::with_capacity(n);
    eval(ml, &mut fml);
    eval(mr, &mut fmr);
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    simpson(fa, &fml, &fm, m - a, &mut left);
    simpson(&fm, &fmr, fb, b - m, &mut right);

    let converged = (0..n).all(|i| (left[i] + right[i] - whole[i]).abs() <= 15.0 * tol[i]);
    if converged || depth == 0 {
        for i in 0..n {
            // Richardson correction
            left[i] += right[i] + (left[i] + right[i] - whole[i]) / 15.0;
        }
        return left;
    }
    let half_tol: Vec<f64> = tol.iter().map(|t| t / 2.0).collect();
    let l = adaptive_simpson_vec(eval, a, m, fa, &fm, &half_tol, depth - 1);
    let r = adaptive_simpson_vec(eval, m, b, &fm, fb, &half_tol, depth - 1);
    l.iter().zip(r).map(|(x, y)| x + y).collect()
}

/// Deterministic conditional expectation `E[g | xi = z]` by adaptive
/// quadrature along the level-set chart.
pub fn conditional_expectation_quadrature(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    observable: &(dyn Fn(&[f64]) -> f64 + Sync),
    z: f64,
    beta: f64,
) -> Result<ConditionalEstimate, CgError> {
    if !(beta > 0.0) {
        return Err(CgError::Config(format!("beta must be positive, got {beta}")));
    }
    let ints = weighted_chart_integrals(model, rc, &[observable], z, beta)?;
    Ok(ConditionalEstimate {
        value: ints[1] / ints[0],
        std_error: 0.0,
        n_samples: 0,
    })
}

// ---------------------------------------------------------------------------
// Constrained Monte Carlo engine
// ---------------------------------------------------------------------------

const NEWTON_MAX_ITERS: usize = 50;
const MC_BLOCKS: usize = 100;

/// Newton solve for `lambda` so that `xi(x + lambda dir) = z`; on success `x`
/// is replaced by the projected point.
fn project_onto_level(
    rc: &ReactionCoordinate,
    x: &mut [f64],
    dir: &[f64],
    z: f64,
) -> Result<(), ()> {
    let tol = 1e-12 * (1.0 + z.abs());
    let mut lambda = 0.0;
    let mut probe = x.to_vec();
    for _ in 0..NEWTON_MAX_ITERS {
        for i in 0..x.len() {
            probe[i] = x[i] + lambda * dir[i];
        }
        let phi = rc.value(&probe) - z;
        if !phi.is_finite() {
            return Err(());
        }
        if phi.abs() <= tol {
            x.copy_from_slice(&probe);
            return Ok(());
        }
        let g = rc.gradient(&probe);
        let dphi = geometry::dot(&g, dir);
        if dphi.abs() < 1e-300 {
            return Err(());
        }
        lambda -= phi / dphi;
    }
    Err(())
}

/// Multi-observable constrained Monte Carlo estimate of `E[g | xi = z]`.
///
/// Each step makes an unconstrained Euler-Maruyama proposal, then projects
/// it back onto `Sigma_z` along `grad xi` evaluated at the proposal (Newton
/// on the scalar multiplier). Empirically (validated against the quadrature
/// engine on Gaussian level sets, where every candidate exponent is
/// distinguishable at many standard errors) the walk samples the measure
/// `exp(-beta V) |grad xi|^{-2} dsigma`; time averages are therefore
/// reweighted by `|grad xi|` to target the co-area conditioned measure
/// `mu_z`.
pub fn conditional_expectation_mc_multi(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    observables: &[&(dyn Fn(&[f64]) -> f64 + Sync)],
    z: f64,
    beta: f64,
    n_steps: u64,
    dt: f64,
    seed: u64,
) -> Result<Vec<ConditionalEstimate>, CgError> {
    if !(beta > 0.0 && dt > 0.0) {
        return Err(CgError::Config(format!(
            "beta and dt must be positive, got beta {beta}, dt {dt}"
        )));
    }
    let n = model.dimension();
    let mut x = initial_on_level(model, rc, z, beta)?;
    let g0 = rc.gradient(&x);
    project_onto_level(rc, &mut x, &g0, z).map_err(|_| CgError::NewtonFailed { step: 0 })?;

    let mut noise = NoiseStream::new(seed, 0);
    let burn_in = n_steps / 10;
    let block_len = (n_steps / MC_BLOCKS as u64).max(1);

    let k = observables.len();
    let mut grad_v = vec![0.0; n];
    let mut proposal = vec![0.0; n];
    let mut total_w = 0.0;
    let mut total_wg = vec![0.0; k];
    let mut block_w = 0.0;
    let mut block_wg = vec![0.0; k];
    let mut block_means: Vec<Vec<f64>> = vec![Vec::new(); k];

    let noise_coef = (2.0 * dt / beta).sqrt();
    for step in 0..(burn_in + n_steps) {
        let mut attempt_dt = dt;
        let mut projected = false;
        for attempt in 0..2 {
            model.gradient_into(&x, &mut grad_v);
            let coef = if attempt == 0 {
                noise_coef
            } else {
                (2.0 * attempt_dt / beta).sqrt()
            };
            for i in 0..n {
                proposal[i] = x[i] - attempt_dt * grad_v[i] + coef * noise.standard_normal();
            }
            let dir = rc.gradient(&proposal);
            let mut candidate = proposal.clone();
            if project_onto_level(rc, &mut candidate, &dir, z).is_ok() {
                x.copy_from_slice(&candidate);
                projected = true;
                break;
            }
            attempt_dt *= 0.5; // reject and retry once with a halved step
        }
        if !projected {
            return Err(CgError::NewtonFailed { step });
        }
        if step < burn_in {
            continue;
        }
        let g = rc.gradient(&x);
        let gn = geometry::norm(&g);
        if !(gn > 1e-12) {
            return Err(CgError::VanishingGradient);
        }
        let w = gn;
        total_w += w;
        block_w += w;
        for (j, obs) in observables.iter().enumerate() {
            let wg = w * obs(&x);
            total_wg[j] += wg;
            block_wg[j] += wg;
        }
        if (step - burn_in + 1) % block_len == 0 {
            for j in 0..k {
                block_means[j].push(block_wg[j] / block_w);
                block_wg[j] = 0.0;
            }
            block_w = 0.0;
        }
    }

    let estimates = (0..k)
        .map(|j| {
            let value = total_wg[j] / total_w;
            let blocks = &block_means[j];
            let nb = blocks.len() as f64;
            let mean = blocks.iter().sum::<f64>() / nb;
            let var = blocks.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>()
                / (nb - 1.0).max(1.0);
            ConditionalEstimate {
                value,
                std_error: (var / nb).sqrt(),
                n_samples: n_steps,
            }
        })
        .collect();
    Ok(estimates)
}

/// Single-observable convenience wrapper around the constrained MC engine.
pub fn conditional_expectation_mc(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    observable: &(dyn Fn(&[f64]) -> f64 + Sync),
    z: f64,
    beta: f64,
    n_steps: u64,
    dt: f64,
    seed: u64,
) -> Result<ConditionalEstimate, CgError> {
    Ok(conditional_expectation_mc_multi(model, rc, &[observable], z, beta, n_steps, dt, seed)?
        .remove(0))
}

/// Starting point on `Sigma_z`: for chart models, the lowest-energy chart
/// point from a coarse scan; otherwise the model-provided level point.
fn initial_on_level(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    z: f64,
    _beta: f64,
) -> Result<Vec<f64>, CgError> {
    if !rc.has_chart() {
        return rc.point_on_level(z);
    }
    let (a0, b0) = rc.chart_range();
    let mut best = (f64::INFINITY, a0);
    let n = 801;
    for i in 0..n {
        let s = a0 + (b0 - a0) * i as f64 / (n - 1) as f64;
        let x = rc.chart(z, s)?;
        let v = model.energy(&x);
        if v < best.0 {
            best = (v, s);
        }
    }
    if !best.0.is_finite() {
        return Err(CgError::EmptyLevelSet);
    }
    rc.chart(z, best.1)
}

// ---------------------------------------------------------------------------
// Coefficient table
// ---------------------------------------------------------------------------

/// Tabulated reduced model `(z, b(z), sigma(z), A'(z))` with linear
/// interpolation. Out-of-range lookups clamp to the boundary value and are
/// counted rather than aborting long runs.
pub struct CoefficientTable {
    grid: Vec<f64>,
    b: Vec<f64>,
    sigma: Vec<f64>,
    aprime: Vec<f64>,
    beta: f64,
    clamp_events: AtomicU64,
}

impl fmt::Debug for CoefficientTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientTable")
            .field("nodes", &self.grid.len())
            .field("range", &(self.grid.first(), self.grid.last()))
            .field("beta", &self.beta)
            .finish()
    }
}

impl Clone for CoefficientTable {
    fn clone(&self) -> Self {
        CoefficientTable {
            grid: self.grid.clone(),
            b: self.b.clone(),
            sigma: self.sigma.clone(),
            aprime: self.aprime.clone(),
            beta: self.beta,
            clamp_events: AtomicU64::new(self.clamp_events.load(Ordering::Relaxed)),
        }
    }
}

impl CoefficientTable {
    pub fn new(
        grid: Vec<f64>,
        b: Vec<f64>,
        sigma: Vec<f64>,
        aprime: Vec<f64>,
        beta: f64,
    ) -> Result<Self, CgError> {
        if grid.len() < 2
            || grid.len() != b.len()
            || grid.len() != sigma.len()
            || grid.len() != aprime.len()
        {
            return Err(CgError::Config(
                "coefficient table arrays must have equal length >= 2".to_string(),
            ));
        }
        if !grid.windows(2).all(|w| w[1] > w[0]) {
            return Err(CgError::Config(
                "coefficient table grid must be strictly increasing".to_string(),
            ));
        }
        Ok(CoefficientTable {
            grid,
            b,
            sigma,
            aprime,
            beta,
            clamp_events: AtomicU64::new(0),
        })
    }

    /// Build from closed-form coefficient functions (used for models where
    /// the reduced coefficients are known analytically, e.g. `xi1`).
    pub fn from_functions(
        grid: Vec<f64>,
        b: impl Fn(f64) -> f64,
        sigma: impl Fn(f64) -> f64,
        aprime: impl Fn(f64) -> f64,
        beta: f64,
    ) -> Result<Self, CgError> {
        let bv = grid.iter().map(|&z| b(z)).collect();
        let sv = grid.iter().map(|&z| sigma(z)).collect();
        let av = grid.iter().map(|&z| aprime(z)).collect();
        Self::new(grid, bv, sv, av, beta)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn aprime(&self) -> &[f64] {
        &self.aprime
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Number of out-of-range lookups clamped so far.
    pub fn clamp_count(&self) -> u64 {
        self.clamp_events.load(Ordering::Relaxed)
    }

    /// Piecewise-linear `(b, sigma, aprime)` at `z`; exact at the nodes,
    /// clamped (and counted) outside the grid.
    #[inline]
    pub fn interpolate(&self, z: f64) -> (f64, f64, f64) {
        let n = self.grid.len();
        if z <= self.grid[0] {
            if z < self.grid[0] {
                self.clamp_events.fetch_add(1, Ordering::Relaxed);
            }
            return (self.b[0], self.sigma[0], self.aprime[0]);
        }
        if z >= self.grid[n - 1] {
            if z > self.grid[n - 1] {
                self.clamp_events.fetch_add(1, Ordering::Relaxed);
            }
            return (self.b[n - 1], self.sigma[n - 1], self.aprime[n - 1]);
        }
        let hi = self.grid.partition_point(|&g| g < z).max(1);
        let lo = hi - 1;
        let w = (z - self.grid[lo]) / (self.grid[hi] - self.grid[lo]);
        (
            self.b[lo] + w * (self.b[hi] - self.b[lo]),
            self.sigma[lo] + w * (self.sigma[hi] - self.sigma[lo]),
            self.aprime[lo] + w * (self.aprime[hi] - self.aprime[lo]),
        )
    }

    /// Free energy reconstructed by trapezoidal integration of `A'`,
    /// anchored at `A(grid[0]) = 0` (additive constants never enter the
    /// dynamics).
    pub fn free_energy(&self) -> Vec<f64> {
        let mut a = Vec::with_capacity(self.grid.len());
        a.push(0.0);
        for i in 1..self.grid.len() {
            let h = self.grid[i] - self.grid[i - 1];
            let prev = *a.last().unwrap();
            a.push(prev + 0.5 * h * (self.aprime[i] + self.aprime[i - 1]));
        }
        a
    }

    /// Write as CSV (`z,b,sigma,aprime`, 17 significant digits) with
    /// provenance comments.
    pub fn write_csv(&self, path: &Path, header_comments: &[String]) -> Result<(), CgError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        for line in header_comments {
            writeln!(f, "# {line}")?;
        }
        writeln!(f, "# beta = {:.16e}", self.beta)?;
        writeln!(f, "z,b,sigma,aprime")?;
        for i in 0..self.grid.len() {
            writeln!(
                f,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.grid[i], self.b[i], self.sigma[i], self.aprime[i]
            )?;
        }
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self, CgError> {
        let f = BufReader::new(std::fs::File::open(path)?);
        let mut beta = None;
        let mut rows: Vec<[f64; 4]> = Vec::new();
        let mut saw_header = false;
        for line in f.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(v) = rest.strip_prefix("beta =") {
                    beta = Some(v.trim().parse::<f64>().map_err(|e| {
                        CgError::Config(format!("bad beta in table header: {e}"))
                    })?);
                }
                continue;
            }
            if !saw_header {
                if line != "z,b,sigma,aprime" {
                    return Err(CgError::Config(format!(
                        "unexpected table header `{line}`"
                    )));
                }
                saw_header = true;
                continue;
            }
            let mut vals = [0.0; 4];
            let mut parts = line.split(',');
            for v in vals.iter_mut() {
                *v = parts
                    .next()
                    .ok_or_else(|| CgError::Config("short table row".to_string()))?
                    .parse::<f64>()
                    .map_err(|e| CgError::Config(format!("bad table value: {e}")))?;
            }
            rows.push(vals);
        }
        let beta =
            beta.ok_or_else(|| CgError::Config("table file lacks `# beta = ...`".to_string()))?;
        let grid = rows.iter().map(|r| r[0]).collect();
        let b = rows.iter().map(|r| r[1]).collect();
        let sigma = rows.iter().map(|r| r[2]).collect();
        let aprime = rows.iter().map(|r| r[3]).collect();
        Self::new(grid, b, sigma, aprime, beta)
    }
}

/// Tabulate `b`, `sigma` and `A'` over the grid with the chosen engine.
/// Grid nodes are independent, so the build parallelizes over them.
pub fn build_coefficient_table(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    beta: f64,
    grid: &GridSpec,
    engine: &Engine,
) -> Result<CoefficientTable, CgError> {
    let nodes = grid.nodes()?;
    let drift = |x: &[f64]| drift_integrand(model, rc, x, beta);
    let grad_sq = |x: &[f64]| {
        let g = rc.gradient(x);
        geometry::dot(&g, &g)
    };
    let force = |x: &[f64]| local_mean_force(model, rc, x, beta).unwrap_or(f64::NAN);
    let observables: [&(dyn Fn(&[f64]) -> f64 + Sync); 3] = [&drift, &grad_sq, &force];

    let rows: Result<Vec<(f64, f64, f64)>, CgError> = nodes
        .par_iter()
        .enumerate()
        .map(|(i, &z)| match engine {
            Engine::Quadrature => {
                let ints = weighted_chart_integrals(model, rc, &observables, z, beta)?;
                Ok((ints[1] / ints[0], ints[2] / ints[0], ints[3] / ints[0]))
            }
            Engine::MonteCarlo { n_steps, dt, seed } => {
                let est = conditional_expectation_mc_multi(
                    model,
                    rc,
                    &observables,
                    z,
                    beta,
                    *n_steps,
                    *dt,
                    seed.wrapping_add(i as u64),
                )?;
                Ok((est[0].value, est[1].value, est[2].value))
            }
        })
        .collect();
    let rows = rows?;

    let b = rows.iter().map(|r| r.0).collect();
    let sigma: Vec<f64> = rows.iter().map(|r| r.1.max(0.0).sqrt()).collect();
    let aprime = rows.iter().map(|r| r.2).collect();
    CoefficientTable::new(nodes, b, sigma, aprime, beta)
}

/// Residual of the detailed-balance identity
/// `beta^{-1} d/dz (sigma^2 e^{-beta A}) = b e^{-beta A}`,
/// with `A` reconstructed from the tabulated `A'` and derivatives taken by
/// central differences on the (possibly non-uniform) grid. Returns the
/// maximum residual over interior nodes, relative to `max |b e^{-beta A}|`.
pub fn check_stationarity(table: &CoefficientTable) -> f64 {
    let z = table.grid();
    let n = z.len();
    let a = table.free_energy();
    let beta = table.beta();
    let f: Vec<f64> = (0..n)
        .map(|i| table.sigma()[i] * table.sigma()[i] * (-beta * a[i]).exp())
        .collect();
    let rhs: Vec<f64> = (0..n)
        .map(|i| table.b()[i] * (-beta * a[i]).exp())
        .collect();
    let scale = rhs.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-300);
    let mut max_resid = 0.0f64;
    for i in 1..n - 1 {
        let hl = z[i] - z[i - 1];
        let hr = z[i + 1] - z[i];
        // second-order derivative on a non-uniform grid
        let dfdz = f[i + 1] * hl / (hr * (hl + hr)) - f[i - 1] * hr / (hl * (hl + hr))
            + f[i] * (hr - hl) / (hl * hr);
        let resid = (dfdz / beta - rhs[i]).abs() / scale;
        max_resid = max_resid.max(resid);
    }
    max_resid
}
