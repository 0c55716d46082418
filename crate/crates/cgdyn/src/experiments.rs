//! Validation studies comparing full and reduced dynamics: residence times,
//! pathwise coupling deviation, time-marginal distances, and the
//! orthogonality check on the constraint fields.

use rayon::prelude::*;

use crate::conditional::CoefficientTable;
use crate::error::CgError;
use crate::geometry;
use crate::integrate::{
    coupled_run, em_step_freeenergy, em_step_reduced, FullDynamics, FullState, NoiseStream,
    ReducedState,
};
use crate::model::{Configuration, ModelSpec, ReactionCoordinate};

/// Default decorrelation stride (in steps) when subsampling the long
/// equilibrium run for initial conditions.
pub const DEFAULT_INITIAL_STRIDE: u64 = 10_000;
/// Total-step cap for the initial-condition run.
pub const INITIAL_RUN_STEP_CAP: u64 = 1_000_000_000;
/// Per-trajectory step cap for first-passage runs.
pub const RESIDENCE_STEP_CAP: u64 = 100_000_000;

/// Which dynamics a residence study integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DynamicsKind {
    Full,
    Effective,
    FreeEnergy,
}

impl DynamicsKind {
    pub fn label(&self) -> &'static str {
        match self {
            DynamicsKind::Full => "full",
            DynamicsKind::Effective => "effective",
            DynamicsKind::FreeEnergy => "free_energy",
        }
    }
}

/// First-passage statistics of one ensemble.
#[derive(Debug, Clone)]
pub struct ResidenceReport {
    pub n_traj: usize,
    /// Mean first-passage time from `xi > threshold` to `xi <= -threshold`.
    pub mean_tau: f64,
    /// 95% normal confidence half-width, `1.96 sd / sqrt(n)`.
    pub half_ci: f64,
    pub dynamics_kind: DynamicsKind,
    pub threshold: f64,
}

/// Time-marginal comparison between the full and effective ensembles.
#[derive(Debug, Clone)]
pub struct MarginalReport {
    pub t_checkpoints: Vec<f64>,
    /// `sum_i |p_i - q_i|` of the normalized histograms, in `[0, 2]`.
    pub tv_distance: Vec<f64>,
    pub bin_edges: Vec<Vec<f64>>,
}

/// Coupling deviation of one epsilon.
#[derive(Debug, Clone, Copy)]
pub struct PathwiseReport {
    /// `max_t sqrt(mean over replicas of (xi(X_t) - y_t)^2)`.
    pub sup_rms: f64,
    pub epsilon: f64,
    pub n_replicas: usize,
}

/// Equilibrium initial conditions restricted to the right well.
///
/// One long full-dynamics run subsampled every `stride` steps; samples with
/// `xi <= threshold` are discarded. Returns the accepted configurations and
/// the acceptance fraction.
#[allow(clippy::too_many_arguments)]
pub fn sample_well_initials(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    threshold: f64,
    n: usize,
    dt: f64,
    beta: f64,
    stride: u64,
    seed: u64,
) -> Result<(Vec<Configuration>, f64), CgError> {
    if !(threshold > 0.0) {
        return Err(CgError::Config(format!(
            "well threshold must be positive, got {threshold}"
        )));
    }
    let stride = stride.max(1);
    let mut dynamics = FullDynamics::new(model, dt, beta);
    let mut state = FullState {
        x: model.equilibrium().to_vec(),
        t: 0.0,
    };
    let mut noise = NoiseStream::new(seed, 0);
    let mut accepted = Vec::with_capacity(n);
    let mut proposals = 0u64;
    let mut steps = 0u64;
    // burn-in: one stride before the first sample
    while accepted.len() < n {
        for _ in 0..stride {
            dynamics.step(&mut state, &mut noise)?;
        }
        steps += stride;
        proposals += 1;
        if rc.value(&state.x) > threshold {
            accepted.push(state.x.clone());
        }
        if steps >= INITIAL_RUN_STEP_CAP && accepted.len() < n {
            return Err(CgError::InsufficientSamples {
                got: accepted.len(),
                want: n,
            });
        }
    }
    Ok((accepted, n as f64 / proposals as f64))
}

fn mean_and_half_ci(taus: &[f64]) -> (f64, f64) {
    let n = taus.len() as f64;
    let mean = taus.iter().sum::<f64>() / n;
    let var = taus.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, 1.96 * (var / n).sqrt())
}

/// Mean first-passage time from the right well (`xi > threshold`) to the
/// left one (`xi <= -threshold`), across `n` trajectories.
///
/// Full dynamics start from the sampled configurations; reduced dynamics
/// start from `xi` of those same configurations. A trajectory hitting the
/// step cap aborts the study rather than silently biasing the mean.
#[allow(clippy::too_many_arguments)]
pub fn residence_time_study(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    table: Option<&CoefficientTable>,
    initials: &[Configuration],
    threshold: f64,
    n: usize,
    dt: f64,
    beta: f64,
    seed: u64,
    kind: DynamicsKind,
) -> Result<ResidenceReport, CgError> {
    if initials.len() < n {
        return Err(CgError::InsufficientSamples {
            got: initials.len(),
            want: n,
        });
    }
    if kind != DynamicsKind::Full && table.is_none() {
        return Err(CgError::Config(
            "reduced residence study requires a coefficient table".to_string(),
        ));
    }
    let taus: Result<Vec<f64>, CgError> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(seed, i as u64);
            let x0 = &initials[i];
            match kind {
                DynamicsKind::Full => {
                    let mut dynamics = FullDynamics::new(model, dt, beta);
                    let mut state = FullState {
                        x: x0.clone(),
                        t: 0.0,
                    };
                    for _ in 0..RESIDENCE_STEP_CAP {
                        dynamics.step(&mut state, &mut noise)?;
                        if rc.value(&state.x) <= -threshold {
                            return Ok(state.t);
                        }
                    }
                    Err(CgError::StepCapExceeded {
                        cap: RESIDENCE_STEP_CAP,
                    })
                }
                DynamicsKind::Effective | DynamicsKind::FreeEnergy => {
                    let table = table.unwrap();
                    let mut state = ReducedState {
                        y: rc.value(x0),
                        t: 0.0,
                    };
                    let sqrt_dt = dt.sqrt();
                    for _ in 0..RESIDENCE_STEP_CAP {
                        let db = sqrt_dt * noise.standard_normal();
                        if kind == DynamicsKind::Effective {
                            em_step_reduced(table, &mut state, dt, beta, db)?;
                        } else {
                            em_step_freeenergy(
                                |z| table.interpolate(z).2,
                                &mut state,
                                dt,
                                beta,
                                db,
                            )?;
                        }
                        if state.y <= -threshold {
                            return Ok(state.t);
                        }
                    }
                    Err(CgError::StepCapExceeded {
                        cap: RESIDENCE_STEP_CAP,
                    })
                }
            }
        })
        .collect();
    let taus = taus?;
    let (mean_tau, half_ci) = mean_and_half_ci(&taus);
    Ok(ResidenceReport {
        n_traj: n,
        mean_tau,
        half_ci,
        dynamics_kind: kind,
        threshold,
    })
}

/// Coupled full/effective deviation for one model realization.
///
/// All replicas share the initial condition `x0` (so the deviation vanishes
/// identically at `t = 0`); each replica runs the shared-noise coupling and
/// the per-checkpoint RMS over replicas is maximized over time.
#[allow(clippy::too_many_arguments)]
pub fn pathwise_single(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    table: &CoefficientTable,
    x0: &[f64],
    epsilon: f64,
    t_final: f64,
    dt: f64,
    beta: f64,
    n_replicas: usize,
    n_checkpoints: usize,
    seed: u64,
) -> Result<PathwiseReport, CgError> {
    let n_steps = (t_final / dt).round() as usize;
    let stride = (n_steps / n_checkpoints.max(1)).max(1);
    let runs: Result<Vec<Vec<f64>>, CgError> = (0..n_replicas)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(seed, i as u64);
            let samples =
                coupled_run(model, rc, table, x0, t_final, dt, beta, &mut noise, stride)?;
            Ok(samples
                .iter()
                .map(|s| (s.xi - s.y) * (s.xi - s.y))
                .collect())
        })
        .collect();
    let runs = runs?;
    let n_checks = runs.iter().map(|r| r.len()).min().unwrap_or(0);
    let mut sup = 0.0f64;
    for k in 0..n_checks {
        let mean: f64 = runs.iter().map(|r| r[k]).sum::<f64>() / n_replicas as f64;
        sup = sup.max(mean.sqrt());
    }
    Ok(PathwiseReport {
        sup_rms: sup,
        epsilon,
        n_replicas,
    })
}

/// Epsilon-scaling study: the caller supplies a factory that rebuilds the
/// model and its coefficient table for each epsilon.
#[allow(clippy::too_many_arguments)]
pub fn pathwise_study(
    factory: &dyn Fn(f64) -> Result<(ModelSpec, CoefficientTable), CgError>,
    rc: &ReactionCoordinate,
    epsilons: &[f64],
    t_final: f64,
    dt: f64,
    beta: f64,
    n_replicas: usize,
    n_checkpoints: usize,
    seed: u64,
) -> Result<Vec<PathwiseReport>, CgError> {
    epsilons
        .iter()
        .map(|&eps| {
            let (model, table) = factory(eps)?;
            pathwise_single(
                &model,
                rc,
                &table,
                model.equilibrium(),
                eps,
                t_final,
                dt,
                beta,
                n_replicas,
                n_checkpoints,
                seed,
            )
        })
        .collect()
}

/// Histogram distance `sum_i |p_i - q_i|` of two samples on `bins` shared
/// uniform bins spanning the pooled range. Returns the distance and the bin
/// edges.
pub fn tv_distance(a: &[f64], b: &[f64], bins: usize) -> (f64, Vec<f64>) {
    assert!(bins >= 1 && !a.is_empty() && !b.is_empty());
    let lo = a
        .iter()
        .chain(b)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let hi = a
        .iter()
        .chain(b)
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let width = (hi - lo).max(1e-300);
    let edges: Vec<f64> = (0..=bins)
        .map(|i| lo + width * i as f64 / bins as f64)
        .collect();
    let hist = |xs: &[f64]| {
        let mut h = vec![0.0f64; bins];
        for &x in xs {
            let mut k = ((x - lo) / width * bins as f64) as usize;
            if k >= bins {
                k = bins - 1;
            }
            h[k] += 1.0 / xs.len() as f64;
        }
        h
    };
    let p = hist(a);
    let q = hist(b);
    let d = p.iter().zip(&q).map(|(x, y)| (x - y).abs()).sum();
    (d, edges)
}

/// Time-marginal comparison: independent full and effective ensembles from
/// the same initial law (`y_0 = xi(x_0)` pointwise), histogrammed at each
/// checkpoint.
#[allow(clippy::too_many_arguments)]
pub fn marginal_study(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    table: &CoefficientTable,
    initials: &[Configuration],
    t_checkpoints: &[f64],
    n_ensemble: usize,
    bins: usize,
    dt: f64,
    beta: f64,
    seed: u64,
) -> Result<MarginalReport, CgError> {
    if n_ensemble < 100 {
        return Err(CgError::Config(format!(
            "marginal study needs n >= 100, got {n_ensemble}"
        )));
    }
    if initials.len() < n_ensemble {
        return Err(CgError::InsufficientSamples {
            got: initials.len(),
            want: n_ensemble,
        });
    }
    let mut checks = t_checkpoints.to_vec();
    checks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let step_marks: Vec<u64> = checks.iter().map(|t| (t / dt).round() as u64).collect();
    let last = *step_marks.last().unwrap_or(&0);

    // full ensemble: stream ids [0, n); effective ensemble: [n, 2n)
    let full_vals: Result<Vec<Vec<f64>>, CgError> = (0..n_ensemble)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(seed, i as u64);
            let mut dynamics = FullDynamics::new(model, dt, beta);
            let mut state = FullState {
                x: initials[i].clone(),
                t: 0.0,
            };
            let mut vals = Vec::with_capacity(step_marks.len());
            let mut mark = 0;
            for step in 1..=last {
                dynamics.step(&mut state, &mut noise)?;
                while mark < step_marks.len() && step_marks[mark] == step {
                    vals.push(rc.value(&state.x));
                    mark += 1;
                }
            }
            while mark < step_marks.len() {
                // checkpoints at t = 0
                vals.insert(0, rc.value(&initials[i]));
                mark += 1;
            }
            Ok(vals)
        })
        .collect();
    let full_vals = full_vals?;

    let red_vals: Result<Vec<Vec<f64>>, CgError> = (0..n_ensemble)
        .into_par_iter()
        .map(|i| {
            let mut noise = NoiseStream::new(seed, (n_ensemble + i) as u64);
            let mut state = ReducedState {
                y: rc.value(&initials[i]),
                t: 0.0,
            };
            let sqrt_dt = dt.sqrt();
            let mut vals = Vec::with_capacity(step_marks.len());
            let mut mark = 0;
            for step in 1..=last {
                let db = sqrt_dt * noise.standard_normal();
                em_step_reduced(table, &mut state, dt, beta, db)?;
                while mark < step_marks.len() && step_marks[mark] == step {
                    vals.push(state.y);
                    mark += 1;
                }
            }
            while mark < step_marks.len() {
                vals.insert(0, rc.value(&initials[i]));
                mark += 1;
            }
            Ok(vals)
        })
        .collect();
    let red_vals = red_vals?;

    let mut tv = Vec::with_capacity(checks.len());
    let mut edges = Vec::with_capacity(checks.len());
    for k in 0..checks.len() {
        let a: Vec<f64> = full_vals.iter().map(|v| v[k]).collect();
        let b: Vec<f64> = red_vals.iter().map(|v| v[k]).collect();
        let (d, e) = tv_distance(&a, &b, bins);
        tv.push(d);
        edges.push(e);
    }
    Ok(MarginalReport {
        t_checkpoints: checks,
        tv_distance: tv,
        bin_edges: edges,
    })
}

/// Maximum of `|grad xi . grad q|` over points of the manifold `{q = 0}`
/// at the given `xi`-levels, across all constraint fields of `rc`.
///
/// Points are located on the level-set chart by bisection in the chart
/// parameter, or taken from the model's level-point map when no chart
/// exists (for the builtin three-atom coordinate those points satisfy
/// `q = 0` exactly).
pub fn condition_cs1_check(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    z_samples: &[f64],
) -> Result<f64, CgError> {
    let fields = rc.constraint_fields();
    if fields.is_empty() {
        return Err(CgError::Model(format!(
            "reaction coordinate `{}` declares no constraint fields",
            rc.name()
        )));
    }
    let n = model.dimension();
    let mut max_u = 0.0f64;
    for &z in z_samples {
        for q in fields {
            let x = if rc.has_chart() {
                let (mut lo, mut hi) = rc.chart_range();
                let qv = |s: f64| -> Result<f64, CgError> { Ok(q.value(&rc.chart(z, s)?)) };
                let (mut flo, mut fhi) = (qv(lo)?, qv(hi)?);
                if flo * fhi > 0.0 {
                    return Err(CgError::Model(format!(
                        "no sign change of `{}` along the chart at z = {z}",
                        q.name()
                    )));
                }
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    let fm = qv(mid)?;
                    if flo * fm <= 0.0 {
                        hi = mid;
                        fhi = fm;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                    if hi - lo < 1e-14 * (1.0 + mid.abs()) {
                        break;
                    }
                }
                let _ = fhi;
                rc.chart(z, 0.5 * (lo + hi))?
            } else {
                rc.point_on_level(z)?
            };
            let residual = q.value(&x).abs();
            if residual > 1e-8 {
                return Err(CgError::Model(format!(
                    "point claimed on {{q = 0}} has |q| = {residual:e}"
                )));
            }
            let gx = rc.gradient(&x);
            let gq = q.gradient(&x, n);
            max_u = max_u.max(geometry::dot(&gx, &gq).abs());
        }
    }
    Ok(max_u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditional::CoefficientTable;
    use crate::model::{builtin_doublewell, builtin_threeatom, builtin_xi1, builtin_xi2};

    fn xi1_analytic_table(beta: f64) -> CoefficientTable {
        let dz = 1e-2_f64;
        let n = (4.0 / dz).round() as usize;
        let grid: Vec<f64> = (0..=n).map(|i| -2.0 + i as f64 * dz).collect();
        CoefficientTable::from_functions(
            grid,
            |z| -4.0 * z * (z * z - 1.0),
            |_| 1.0,
            |z| 4.0 * z * (z * z - 1.0),
            beta,
        )
        .unwrap()
    }

    #[test]
    fn initials_stay_in_the_well() {
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi1();
        let (xs, accept) =
            sample_well_initials(&m, &rc, 0.5, 50, 1e-4, 3.0, 2_000, 7).unwrap();
        assert_eq!(xs.len(), 50);
        assert!(accept > 0.0 && accept <= 1.0);
        for x in &xs {
            assert!(rc.value(x) > 0.5);
        }
    }

    #[test]
    fn initials_mean_matches_dense_quadrature_oracle() {
        // E_mu[x | x > 0.5] from a dense 2D Riemann sum of e^{-beta V}.
        let beta = 3.0;
        let eps = 0.01;
        let m = builtin_doublewell(eps).unwrap();
        let rc = builtin_xi1();
        let n_grid = 1200;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n_grid {
            let x = -2.0 + 4.0 * (i as f64 + 0.5) / n_grid as f64;
            if x <= 0.5 {
                continue;
            }
            for j in 0..n_grid {
                let y = -2.0 + 4.0 * (j as f64 + 0.5) / n_grid as f64;
                let w = (-beta * m.energy(&[x, y])).exp();
                num += w * x;
                den += w;
            }
        }
        let oracle = num / den;

        let n = 400;
        let (xs, _) = sample_well_initials(&m, &rc, 0.5, n, 1e-4, beta, 10_000, 11).unwrap();
        let mean = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|x| (x[0] - mean) * (x[0] - mean)).sum::<f64>()
            / (n - 1) as f64)
            .sqrt();
        let se = sd / (n as f64).sqrt();
        assert!(
            (mean - oracle).abs() < 4.0 * se,
            "mean {mean} vs oracle {oracle} (se {se})"
        );
    }

    #[test]
    fn doubling_the_stride_is_statistically_neutral() {
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi1();
        let n = 150;
        let run = |stride: u64, seed: u64| {
            let (xs, _) =
                sample_well_initials(&m, &rc, 0.5, n, 1e-4, 3.0, stride, seed).unwrap();
            let mean = xs.iter().map(|x| x[0]).sum::<f64>() / n as f64;
            let sd = (xs
                .iter()
                .map(|x| (x[0] - mean) * (x[0] - mean))
                .sum::<f64>()
                / (n - 1) as f64)
                .sqrt();
            (mean, sd / (n as f64).sqrt())
        };
        let (m1, se1) = run(5_000, 3);
        let (m2, se2) = run(10_000, 3);
        assert!(
            (m1 - m2).abs() < 2.0 * (se1 * se1 + se2 * se2).sqrt(),
            "{m1} vs {m2}"
        );
    }

    #[test]
    fn residence_ci_shrinks_like_inverse_sqrt_n() {
        // Cheap reduced-dynamics surrogate at beta = 1 (low barrier, fast
        // exits); the 1/sqrt(n) law is dynamics-independent.
        let t = xi1_analytic_table(1.0);
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi1();
        let initials: Vec<Vec<f64>> = (0..800).map(|_| vec![1.0, 0.0]).collect();
        let run = |n: usize| {
            residence_time_study(
                &m,
                &rc,
                Some(&t),
                &initials,
                0.5,
                n,
                1e-3,
                1.0,
                99,
                DynamicsKind::Effective,
            )
            .unwrap()
        };
        let small = run(200);
        let large = run(800);
        assert!(small.mean_tau > 0.0 && small.half_ci > 0.0);
        let ratio = large.half_ci / small.half_ci;
        assert!((0.4..=0.6).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn residence_requires_enough_initials() {
        let t = xi1_analytic_table(1.0);
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi1();
        let initials = vec![vec![1.0, 0.0]; 5];
        let r = residence_time_study(
            &m,
            &rc,
            Some(&t),
            &initials,
            0.5,
            10,
            1e-3,
            1.0,
            0,
            DynamicsKind::Effective,
        );
        assert!(matches!(r, Err(CgError::InsufficientSamples { .. })));
    }

    #[test]
    fn pathwise_deviation_vanishes_at_t_zero() {
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi1();
        let t = xi1_analytic_table(3.0);
        let r = pathwise_single(&m, &rc, &t, &[1.0, 0.0], 0.01, 0.0, 1e-4, 3.0, 8, 10, 1)
            .unwrap();
        assert_eq!(r.sup_rms, 0.0);
    }

    #[test]
    fn tv_distance_bounds_and_self_distance() {
        let a: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let (d, edges) = tv_distance(&a, &a, 50);
        assert_eq!(d, 0.0);
        assert_eq!(edges.len(), 51);
        let b: Vec<f64> = a.iter().map(|x| x + 100.0).collect();
        let (d, _) = tv_distance(&a, &b, 50);
        assert!((d - 2.0).abs() < 1e-12); // disjoint supports
    }

    #[test]
    fn marginal_noise_floor_for_same_law_ensembles() {
        // Two independent reduced ensembles with the same initial law: the
        // TV distance is pure sampling noise, about sqrt(bins/n).
        let t = xi1_analytic_table(3.0);
        let n = 10_000;
        let run = |seed: u64| -> Vec<f64> {
            (0..n)
                .into_par_iter()
                .map(|i| {
                    let mut noise = NoiseStream::new(seed, i as u64);
                    let mut state = ReducedState { y: 1.0, t: 0.0 };
                    let dt = 1e-3_f64;
                    for _ in 0..1000 {
                        let db = dt.sqrt() * noise.standard_normal();
                        em_step_reduced(&t, &mut state, dt, 3.0, db).unwrap();
                    }
                    state.y
                })
                .collect()
        };
        let a = run(1);
        let same = run(1);
        let (d0, _) = tv_distance(&a, &same, 50);
        assert_eq!(d0, 0.0);
        let b = run(2);
        let (d, _) = tv_distance(&a, &b, 50);
        assert!(d > 0.0 && d < 0.1, "noise floor {d}");
    }

    #[test]
    fn marginal_study_rejects_small_ensembles() {
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi1();
        let t = xi1_analytic_table(3.0);
        let initials = vec![vec![1.0, 0.0]; 50];
        let r = marginal_study(&m, &rc, &t, &initials, &[0.5], 50, 50, 1e-3, 3.0, 1);
        assert!(matches!(r, Err(CgError::Config(_))));
    }

    #[test]
    fn orthogonality_of_the_builtin_coordinates() {
        let m = builtin_doublewell(0.01).unwrap();
        let zs = [-0.6, -0.3, 0.0, 0.3, 0.6];
        let u2 = condition_cs1_check(&m, &builtin_xi2(), &zs).unwrap();
        assert!(u2 < 1e-10, "u2 = {u2:e}");
        // u = 2x on {q = 0}: x = z for xi1, so max over zs is 1.2
        let u1 = condition_cs1_check(&m, &builtin_xi1(), &zs).unwrap();
        assert!((u1 - 1.2).abs() < 1e-6, "u1 = {u1}");
        assert!(u1 > 0.0);
    }

    #[test]
    fn orthogonality_of_the_threeatom_angle() {
        let (m3, theta) = builtin_threeatom(1e-3, 1.0, 1.187, 208.0).unwrap();
        let zs = [0.9, 1.0, 1.187, 1.3];
        let u = condition_cs1_check(&m3, &theta, &zs).unwrap();
        assert!(u < 1e-6, "u = {u:e}");
    }
}
