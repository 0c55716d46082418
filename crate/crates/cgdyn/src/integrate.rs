//! Euler-Maruyama integrators for the full, effective and free-energy
//! dynamics, plus the shared-noise coupling used for pathwise comparison.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::conditional::CoefficientTable;
use crate::error::CgError;
use crate::geometry;
use crate::model::{Configuration, ModelSpec, ReactionCoordinate};

/// Any coordinate beyond this magnitude aborts the trajectory instead of
/// poisoning ensemble statistics.
pub const DIVERGENCE_BOUND: f64 = 1e6;

/// Seeded, reproducible Gaussian-increment source.
///
/// Built on ChaCha, a counter-based generator: the same `(seed, stream_id)`
/// reproduces the identical sequence bit-for-bit regardless of thread
/// scheduling, and distinct stream ids give independent sequences. One
/// stream per trajectory keeps ensemble results independent of the worker
/// count.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    stream_id: u64,
    counter: u64,
    rng: ChaCha12Rng,
}

impl NoiseStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        NoiseStream {
            seed,
            stream_id,
            counter: 0,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of normals drawn so far.
    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        self.counter += 1;
        StandardNormal.sample(&mut self.rng)
    }

    #[inline]
    pub fn fill_standard_normal(&mut self, out: &mut [f64]) {
        for v in out.iter_mut() {
            *v = self.standard_normal();
        }
    }
}

/// Full-system state.
#[derive(Debug, Clone)]
pub struct FullState {
    pub x: Configuration,
    pub t: f64,
}

/// Reduced (one-dimensional) state.
#[derive(Debug, Clone, Copy)]
pub struct ReducedState {
    pub y: f64,
    pub t: f64,
}

/// Euler-Maruyama stepper for `dX = -grad V dt + sqrt(2/beta) dW`.
///
/// Owns its scratch buffers so the hot loop stays allocation-free.
pub struct FullDynamics<'a> {
    model: &'a ModelSpec,
    dt: f64,
    sqrt_dt: f64,
    /// `sqrt(2 / beta)`, the noise scale applied to a variance-`dt` increment.
    noise_scale: f64,
    grad: Vec<f64>,
    increment: Vec<f64>,
    step_index: u64,
}

impl<'a> FullDynamics<'a> {
    pub fn new(model: &'a ModelSpec, dt: f64, beta: f64) -> Self {
        assert!(dt > 0.0 && beta > 0.0);
        let n = model.dimension();
        FullDynamics {
            model,
            dt,
            sqrt_dt: dt.sqrt(),
            noise_scale: (2.0 / beta).sqrt(),
            grad: vec![0.0; n],
            increment: vec![0.0; n],
            step_index: 0,
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps_taken(&self) -> u64 {
        self.step_index
    }

    /// One step drawing fresh normals from `noise`.
    #[inline]
    pub fn step(&mut self, state: &mut FullState, noise: &mut NoiseStream) -> Result<(), CgError> {
        noise.fill_standard_normal(&mut self.increment);
        for v in self.increment.iter_mut() {
            *v *= self.sqrt_dt;
        }
        let dw = std::mem::take(&mut self.increment);
        let r = self.step_with_increment(state, &dw);
        self.increment = dw;
        r
    }

    /// One step driven by a supplied Brownian increment `dw` (one entry per
    /// coordinate, each of variance `dt`). Used by the shared-noise coupling.
    #[inline]
    pub fn step_with_increment(
        &mut self,
        state: &mut FullState,
        dw: &[f64],
    ) -> Result<(), CgError> {
        self.model.gradient_into(&state.x, &mut self.grad);
        for i in 0..state.x.len() {
            state.x[i] += -self.dt * self.grad[i] + self.noise_scale * dw[i];
        }
        state.t += self.dt;
        self.step_index += 1;
        for &v in &state.x {
            if !v.is_finite() {
                return Err(CgError::NonFinite {
                    step: self.step_index,
                    what: "full-state coordinate (dt too large for the stiffness?)".to_string(),
                });
            }
            if v.abs() > DIVERGENCE_BOUND {
                return Err(CgError::Diverged {
                    step: self.step_index,
                    bound: DIVERGENCE_BOUND,
                });
            }
        }
        Ok(())
    }
}

/// One step of the effective dynamics
/// `y' = y + b(y) dt + sqrt(2/beta) sigma(y) dB`, with `dB` a Gaussian
/// increment of variance `dt` (fresh or projected).
#[inline]
pub fn em_step_reduced(
    table: &CoefficientTable,
    state: &mut ReducedState,
    dt: f64,
    beta: f64,
    db: f64,
) -> Result<(), CgError> {
    let (b, sigma, _) = table.interpolate(state.y);
    state.y += b * dt + (2.0 / beta).sqrt() * sigma * db;
    state.t += dt;
    guard_reduced(state)
}

/// One step of the free-energy dynamics `y' = y - A'(y) dt + sqrt(2/beta) dB`.
#[inline]
pub fn em_step_freeenergy(
    aprime: impl Fn(f64) -> f64,
    state: &mut ReducedState,
    dt: f64,
    beta: f64,
    db: f64,
) -> Result<(), CgError> {
    state.y += -aprime(state.y) * dt + (2.0 / beta).sqrt() * db;
    state.t += dt;
    guard_reduced(state)
}

#[inline]
fn guard_reduced(state: &ReducedState) -> Result<(), CgError> {
    if !state.y.is_finite() {
        return Err(CgError::NonFinite {
            step: 0,
            what: "reduced state".to_string(),
        });
    }
    if state.y.abs() > DIVERGENCE_BOUND {
        return Err(CgError::Diverged {
            step: 0,
            bound: DIVERGENCE_BOUND,
        });
    }
    Ok(())
}

/// One recorded sample of a coupled pair of trajectories.
#[derive(Debug, Clone, Copy)]
pub struct CoupledSample {
    pub t: f64,
    /// `xi(X_t)` along the full dynamics.
    pub xi: f64,
    /// `y_t` along the effective dynamics driven by the projected noise.
    pub y: f64,
}

/// Advance the full dynamics and the effective dynamics with the *same*
/// noise realization: at each step the full-space increment `dW` is projected
/// onto `grad xi / |grad xi|` at the current full state and fed to the
/// reduced stepper. `y_0 = xi(x_0)`.
pub fn coupled_run(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    table: &CoefficientTable,
    x0: &[f64],
    t_final: f64,
    dt: f64,
    beta: f64,
    noise: &mut NoiseStream,
    stride: usize,
) -> Result<Vec<CoupledSample>, CgError> {
    let n = model.dimension();
    let n_steps = (t_final / dt).round() as u64;
    let mut full = FullDynamics::new(model, dt, beta);
    let mut fs = FullState {
        x: x0.to_vec(),
        t: 0.0,
    };
    let mut rs = ReducedState {
        y: rc.value(x0),
        t: 0.0,
    };
    let mut dw = vec![0.0; n];
    let mut grad = vec![0.0; n];
    let stride = stride.max(1);
    let mut out = Vec::with_capacity(n_steps as usize / stride + 2);
    out.push(CoupledSample {
        t: 0.0,
        xi: rs.y,
        y: rs.y,
    });
    for step in 1..=n_steps {
        noise.fill_standard_normal(&mut dw);
        for v in dw.iter_mut() {
            *v *= dt.sqrt();
        }
        // Projection uses the pre-step full state.
        rc.gradient_into(&fs.x, &mut grad);
        let gn = geometry::norm(&grad);
        if !(gn > 1e-12) {
            return Err(CgError::VanishingGradient);
        }
        let db = geometry::dot(&grad, &dw) / gn;
        full.step_with_increment(&mut fs, &dw)?;
        em_step_reduced(table, &mut rs, dt, beta, db)?;
        if step % stride as u64 == 0 || step == n_steps {
            out.push(CoupledSample {
                t: fs.t,
                xi: rc.value(&fs.x),
                y: rs.y,
            });
        }
    }
    Ok(out)
}
