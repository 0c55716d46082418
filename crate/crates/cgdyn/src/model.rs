//! Catalog of potentials and reaction coordinates.
//!
//! Every model ships analytic gradients (and Hessians) so that the
//! differential operators in [`crate::geometry`] never have to fall back to
//! finite differences for the builtins. User models may omit the Hessian;
//! consumers then use central differences with step `1e-4`.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::CgError;

/// A point of the full-system state space, dimensionless positions.
pub type Configuration = Vec<f64>;

type EnergyFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
type FieldFn = dyn Fn(&[f64], &mut [f64]) + Send + Sync;
type ChartFn = dyn Fn(f64, f64) -> Configuration + Send + Sync;
type PointFn = dyn Fn(f64) -> Configuration + Send + Sync;

/// Potential energy with derivatives and named parameters.
///
/// Immutable after construction; cheap to clone and safe to share across
/// worker threads.
#[derive(Clone)]
pub struct ModelSpec {
    name: String,
    dimension: usize,
    energy: Arc<EnergyFn>,
    gradient: Arc<FieldFn>,
    /// Row-major `n x n` second derivatives, when available analytically.
    hessian: Option<Arc<FieldFn>>,
    params: BTreeMap<String, f64>,
    /// Axis-aligned box on which the model is meant to be sampled/tested.
    sampling_box: Vec<(f64, f64)>,
    /// A reference configuration in the right-hand well (local minimum).
    equilibrium: Configuration,
}

impl fmt::Debug for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpec")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("params", &self.params)
            .finish()
    }
}

impl ModelSpec {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn sampling_box(&self) -> &[(f64, f64)] {
        &self.sampling_box
    }

    pub fn equilibrium(&self) -> &[f64] {
        &self.equilibrium
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        (self.energy)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out);
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dimension];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    /// Row-major Hessian; central differences of the gradient (step `1e-4`)
    /// when no analytic Hessian was supplied.
    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dimension;
        debug_assert_eq!(out.len(), n * n);
        match &self.hessian {
            Some(h) => h(x, out),
            None => fd_jacobian_of(&*self.gradient, x, out, FD_HESS_STEP),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dimension * self.dimension];
        self.hessian_into(x, &mut h);
        h
    }
}

/// Scalar field with gradient; used for the stiff constraint terms `q`.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    value: Arc<EnergyFn>,
    gradient: Arc<FieldFn>,
}

impl ScalarField {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out);
    }

    pub fn gradient(&self, x: &[f64], n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n];
        self.gradient_into(x, &mut g);
        g
    }
}

/// Scalar reaction coordinate `xi` with derivatives and, for 2D models, a
/// one-parameter chart `(z, s) -> x` of the level set `Sigma_z`.
#[derive(Clone)]
pub struct ReactionCoordinate {
    name: String,
    dimension: usize,
    value: Arc<EnergyFn>,
    gradient: Arc<FieldFn>,
    hessian: Option<Arc<FieldFn>>,
    levelset_param: Option<Arc<ChartFn>>,
    /// Admissible range of the chart parameter `s`.
    chart_range: (f64, f64),
    /// A point on `Sigma_z`, for models without a chart (constrained MC seed).
    level_point: Option<Arc<PointFn>>,
    /// The stiff fields `q` used by the orthogonality checks.
    constraint_fields: Vec<ScalarField>,
    /// Recorded [H1] bounds `0 < m <= |grad xi| <= M` on the sampling box.
    grad_bounds: (f64, f64),
}

impl fmt::Debug for ReactionCoordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReactionCoordinate")
            .field("name", &self.name)
            .field("dimension", &self.dimension)
            .field("grad_bounds", &self.grad_bounds)
            .finish()
    }
}

impl ReactionCoordinate {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }

    pub fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (self.gradient)(x, out);
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dimension];
        self.gradient_into(x, &mut g);
        g
    }

    pub fn has_hessian(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn hessian_into(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dimension;
        debug_assert_eq!(out.len(), n * n);
        match &self.hessian {
            Some(h) => h(x, out),
            None => fd_jacobian_of(&*self.gradient, x, out, FD_HESS_STEP),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; self.dimension * self.dimension];
        self.hessian_into(x, &mut h);
        h
    }

    pub fn has_chart(&self) -> bool {
        self.levelset_param.is_some()
    }

    pub fn chart(&self, z: f64, s: f64) -> Result<Configuration, CgError> {
        match &self.levelset_param {
            Some(c) => Ok(c(z, s)),
            None => Err(CgError::MissingChart),
        }
    }

    pub fn chart_range(&self) -> (f64, f64) {
        self.chart_range
    }

    /// Some point on `Sigma_z`: from the chart when present, otherwise from
    /// the model-specific `level_point` closure.
    pub fn point_on_level(&self, z: f64) -> Result<Configuration, CgError> {
        if let Some(p) = &self.level_point {
            return Ok(p(z));
        }
        self.chart(z, 0.5 * (self.chart_range.0 + self.chart_range.1))
    }

    pub fn constraint_fields(&self) -> &[ScalarField] {
        &self.constraint_fields
    }

    /// Recorded [H1] bounds `(m, M)`.
    pub fn grad_bounds(&self) -> (f64, f64) {
        self.grad_bounds
    }
}

const FD_HESS_STEP: f64 = 1e-4;

fn fd_jacobian_of(field: &FieldFn, x: &[f64], out: &mut [f64], h: f64) {
    let n = x.len();
    let mut xp = x.to_vec();
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for j in 0..n {
        xp[j] = x[j] + h;
        field(&xp, &mut gp);
        xp[j] = x[j] - h;
        field(&xp, &mut gm);
        xp[j] = x[j];
        for i in 0..n {
            out[i * n + j] = (gp[i] - gm[i]) / (2.0 * h);
        }
    }
}

/// Two-dimensional double-well potential
/// `V(x, y) = (x^2 - 1)^2 + (x^2 + y - 1)^2 / epsilon`,
/// with minima at `(+-1, 0)` and a saddle point at `(0, 1)`.
pub fn builtin_doublewell(epsilon: f64) -> Result<ModelSpec, CgError> {
    if epsilon <= 0.0 {
        return Err(CgError::Model(format!(
            "doublewell: epsilon must be positive, got {epsilon}"
        )));
    }
    let eps = epsilon;
    let energy = move |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        let q = x * x + y - 1.0;
        let d = x * x - 1.0;
        d * d + q * q / eps
    };
    let gradient = move |p: &[f64], g: &mut [f64]| {
        let (x, y) = (p[0], p[1]);
        let q = x * x + y - 1.0;
        g[0] = 4.0 * x * (x * x - 1.0) + 4.0 * x * q / eps;
        g[1] = 2.0 * q / eps;
    };
    let hessian = move |p: &[f64], h: &mut [f64]| {
        let (x, y) = (p[0], p[1]);
        let q = x * x + y - 1.0;
        h[0] = 12.0 * x * x - 4.0 + (4.0 * q + 8.0 * x * x) / eps;
        h[1] = 4.0 * x / eps;
        h[2] = 4.0 * x / eps;
        h[3] = 2.0 / eps;
    };
    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), epsilon);
    Ok(ModelSpec {
        name: "doublewell".to_string(),
        dimension: 2,
        energy: Arc::new(energy),
        gradient: Arc::new(gradient),
        hessian: Some(Arc::new(hessian)),
        params,
        sampling_box: vec![(-2.0, 2.0), (-2.0, 2.0)],
        equilibrium: vec![1.0, 0.0],
    })
}

fn doublewell_constraint() -> ScalarField {
    ScalarField {
        name: "q".to_string(),
        value: Arc::new(|p: &[f64]| p[0] * p[0] + p[1] - 1.0),
        gradient: Arc::new(|p: &[f64], g: &mut [f64]| {
            g[0] = 2.0 * p[0];
            g[1] = 1.0;
        }),
    }
}

/// `xi_1(x, y) = x`; unit gradient, so the effective dynamics built on it
/// coincides with the free-energy dynamics.
pub fn builtin_xi1() -> ReactionCoordinate {
    ReactionCoordinate {
        name: "xi1".to_string(),
        dimension: 2,
        value: Arc::new(|p: &[f64]| p[0]),
        gradient: Arc::new(|_p: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            g[1] = 0.0;
        }),
        hessian: Some(Arc::new(|_p: &[f64], h: &mut [f64]| h.fill(0.0))),
        levelset_param: Some(Arc::new(|z: f64, s: f64| vec![z, s])),
        // Level sets of xi1 are vertical lines; the Boltzmann weight sits
        // near y = 1 - z^2, which for |z| <= 3 needs s down to -8.
        chart_range: (-10.0, 2.5),
        level_point: None,
        constraint_fields: vec![doublewell_constraint()],
        grad_bounds: (1.0, 1.0),
    }
}

/// `xi_2(x, y) = x exp(-2y)`; satisfies `grad xi_2 . grad q = 0` for the
/// double-well constraint `q = x^2 + y - 1`.
pub fn builtin_xi2() -> ReactionCoordinate {
    ReactionCoordinate {
        name: "xi2".to_string(),
        dimension: 2,
        value: Arc::new(|p: &[f64]| p[0] * (-2.0 * p[1]).exp()),
        gradient: Arc::new(|p: &[f64], g: &mut [f64]| {
            let e = (-2.0 * p[1]).exp();
            g[0] = e;
            g[1] = -2.0 * p[0] * e;
        }),
        hessian: Some(Arc::new(|p: &[f64], h: &mut [f64]| {
            let e = (-2.0 * p[1]).exp();
            h[0] = 0.0;
            h[1] = -2.0 * e;
            h[2] = -2.0 * e;
            h[3] = 4.0 * p[0] * e;
        })),
        levelset_param: Some(Arc::new(|z: f64, s: f64| vec![z * (2.0 * s).exp(), s])),
        chart_range: (-2.5, 2.5),
        level_point: None,
        constraint_fields: vec![doublewell_constraint()],
        // On [-2,2]^2: |grad xi2| = exp(-2y) sqrt(1 + 4x^2).
        grad_bounds: ((-4.0f64).exp(), 4.0f64.exp() * 17.0f64.sqrt()),
    }
}

/// Three two-dimensional particles with stiff bonds and a soft bond angle.
///
/// Rigid-body motion is removed by pinning `r_2 = 0` and `r_1 . e_y = 0`, so
/// the state is `(r_1x, r_3x, r_3y)` and
/// `V = (q_1^2 + q_3^2) / (2 eps) + k_theta (theta - theta_0)^2 / 2`
/// with `q_1 = |r_1| - l_0`, `q_3 = |r_3| - l_0` and `theta` the bond angle.
///
/// Configurations with `|r_1| = 0` or `|r_3| = 0` have an undefined angle;
/// evaluations there yield NaN, which downstream consumers reject.
pub fn builtin_threeatom(
    epsilon: f64,
    l0: f64,
    theta0: f64,
    ktheta: f64,
) -> Result<(ModelSpec, ReactionCoordinate), CgError> {
    for (name, v) in [
        ("epsilon", epsilon),
        ("l0", l0),
        ("theta0", theta0),
        ("ktheta", ktheta),
    ] {
        if v <= 0.0 {
            return Err(CgError::Model(format!(
                "threeatom: {name} must be positive, got {v}"
            )));
        }
    }

    let theta = |p: &[f64]| -> f64 {
        let (r1x, r3x, r3y) = (p[0], p[1], p[2]);
        if r1x.abs() < 1e-12 || (r3x * r3x + r3y * r3y) < 1e-24 {
            return f64::NAN;
        }
        (r1x * r3y).atan2(r1x * r3x)
    };
    // theta does not depend on the bond length r1x.
    let theta_grad = |p: &[f64], g: &mut [f64]| {
        let (r3x, r3y) = (p[1], p[2]);
        let rho2 = r3x * r3x + r3y * r3y;
        g[0] = 0.0;
        g[1] = -r3y / rho2;
        g[2] = r3x / rho2;
    };
    let theta_hess = |p: &[f64], h: &mut [f64]| {
        let (x, y) = (p[1], p[2]);
        let rho2 = x * x + y * y;
        let rho4 = rho2 * rho2;
        h.fill(0.0);
        h[4] = 2.0 * x * y / rho4;
        h[5] = (y * y - x * x) / rho4;
        h[7] = h[5];
        h[8] = -2.0 * x * y / rho4;
    };

    let eps = epsilon;
    let energy = move |p: &[f64]| {
        let q1 = p[0].abs() - l0;
        let rho = (p[1] * p[1] + p[2] * p[2]).sqrt();
        let q3 = rho - l0;
        let th = theta(p);
        (q1 * q1 + q3 * q3) / (2.0 * eps) + 0.5 * ktheta * (th - theta0) * (th - theta0)
    };
    let gradient = move |p: &[f64], g: &mut [f64]| {
        let q1 = p[0].abs() - l0;
        let rho = (p[1] * p[1] + p[2] * p[2]).sqrt();
        let q3 = rho - l0;
        let th = theta(p);
        let rho2 = rho * rho;
        let soft = ktheta * (th - theta0);
        g[0] = q1 * p[0].signum() / eps;
        g[1] = q3 * p[1] / (rho * eps) + soft * (-p[2] / rho2);
        g[2] = q3 * p[2] / (rho * eps) + soft * (p[1] / rho2);
    };
    let hessian = move |p: &[f64], h: &mut [f64]| {
        let (x, y) = (p[1], p[2]);
        let rho2 = x * x + y * y;
        let rho = rho2.sqrt();
        let q3 = rho - l0;
        let th = theta(p);
        let soft = ktheta * (th - theta0);
        let (nx, ny) = (x / rho, y / rho);
        // grad q3 = n, hess q3 = (I - n n^T) / rho
        let (gtx, gty) = (-y / rho2, x / rho2);
        h.fill(0.0);
        h[0] = 1.0 / eps; // q1 term, hess |r1x| = 0 away from 0
        h[4] = (nx * nx + q3 * (1.0 - nx * nx) / rho) / eps
            + ktheta * gtx * gtx
            + soft * (2.0 * x * y / (rho2 * rho2));
        h[5] = (nx * ny - q3 * nx * ny / rho) / eps
            + ktheta * gtx * gty
            + soft * ((y * y - x * x) / (rho2 * rho2));
        h[7] = h[5];
        h[8] = (ny * ny + q3 * (1.0 - ny * ny) / rho) / eps
            + ktheta * gty * gty
            + soft * (-2.0 * x * y / (rho2 * rho2));
    };

    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), epsilon);
    params.insert("l0".to_string(), l0);
    params.insert("theta0".to_string(), theta0);
    params.insert("ktheta".to_string(), ktheta);

    let equilibrium = vec![l0, l0 * theta0.cos(), l0 * theta0.sin()];
    let model = ModelSpec {
        name: "threeatom".to_string(),
        dimension: 3,
        energy: Arc::new(energy),
        gradient: Arc::new(gradient),
        hessian: Some(Arc::new(hessian)),
        params,
        // Keep clear of the angle singularities at |r1| = 0 and |r3| = 0.
        sampling_box: vec![(0.6, 1.4), (-0.2, 1.2), (0.4, 1.4)],
        equilibrium,
    };

    let q1 = ScalarField {
        name: "q1".to_string(),
        value: Arc::new(move |p: &[f64]| p[0].abs() - l0),
        gradient: Arc::new(|p: &[f64], g: &mut [f64]| {
            g[0] = p[0].signum();
            g[1] = 0.0;
            g[2] = 0.0;
        }),
    };
    let q3 = ScalarField {
        name: "q3".to_string(),
        value: Arc::new(move |p: &[f64]| (p[1] * p[1] + p[2] * p[2]).sqrt() - l0),
        gradient: Arc::new(|p: &[f64], g: &mut [f64]| {
            let rho = (p[1] * p[1] + p[2] * p[2]).sqrt();
            g[0] = 0.0;
            g[1] = p[1] / rho;
            g[2] = p[2] / rho;
        }),
    };

    let rc = ReactionCoordinate {
        name: "theta".to_string(),
        dimension: 3,
        value: Arc::new(theta),
        gradient: Arc::new(theta_grad),
        hessian: Some(Arc::new(theta_hess)),
        levelset_param: None,
        chart_range: (0.0, 0.0),
        level_point: Some(Arc::new(move |z: f64| {
            vec![l0, l0 * z.cos(), l0 * z.sin()]
        })),
        constraint_fields: vec![q1, q3],
        // |grad theta| = 1 / |r3|, with |r3| in [0.45, 1.6] on the box.
        grad_bounds: (0.6, 2.3),
    };

    Ok((model, rc))
}

/// Stiff-channel test case `V(x, y) = V_0(x, y) + Omega(x)^2 y^2 / eps`
/// with `V_0(x, y) = (x^2 - 1)^2 + x y`, `Omega(x) = 2 + sin x` and the
/// reaction coordinate `xi(x, y) = x`.
///
/// As `eps -> 0` the effective drift converges to the closed-form limit
/// [`omega_limit_drift`].
pub fn builtin_omega_testcase(
    epsilon: f64,
) -> Result<(ModelSpec, ReactionCoordinate), CgError> {
    if epsilon <= 0.0 {
        return Err(CgError::Model(format!(
            "omega: epsilon must be positive, got {epsilon}"
        )));
    }
    let eps = epsilon;
    let energy = move |p: &[f64]| {
        let (x, y) = (p[0], p[1]);
        let om = 2.0 + x.sin();
        let d = x * x - 1.0;
        d * d + x * y + om * om * y * y / eps
    };
    let gradient = move |p: &[f64], g: &mut [f64]| {
        let (x, y) = (p[0], p[1]);
        let om = 2.0 + x.sin();
        let omp = x.cos();
        g[0] = 4.0 * x * (x * x - 1.0) + y + 2.0 * om * omp * y * y / eps;
        g[1] = x + 2.0 * om * om * y / eps;
    };
    let hessian = move |p: &[f64], h: &mut [f64]| {
        let (x, y) = (p[0], p[1]);
        let om = 2.0 + x.sin();
        let omp = x.cos();
        let ompp = -x.sin();
        h[0] = 12.0 * x * x - 4.0 + 2.0 * y * y * (omp * omp + om * ompp) / eps;
        h[1] = 1.0 + 4.0 * om * omp * y / eps;
        h[2] = h[1];
        h[3] = 2.0 * om * om / eps;
    };
    let mut params = BTreeMap::new();
    params.insert("epsilon".to_string(), epsilon);
    let model = ModelSpec {
        name: "omega".to_string(),
        dimension: 2,
        energy: Arc::new(energy),
        gradient: Arc::new(gradient),
        hessian: Some(Arc::new(hessian)),
        params,
        sampling_box: vec![(-2.0, 2.0), (-0.5, 0.5)],
        equilibrium: vec![1.0, 0.0],
    };

    let q = ScalarField {
        name: "q".to_string(),
        value: Arc::new(|p: &[f64]| (2.0 + p[0].sin()) * p[1]),
        gradient: Arc::new(|p: &[f64], g: &mut [f64]| {
            g[0] = p[0].cos() * p[1];
            g[1] = 2.0 + p[0].sin();
        }),
    };
    let rc = ReactionCoordinate {
        name: "x".to_string(),
        dimension: 2,
        value: Arc::new(|p: &[f64]| p[0]),
        gradient: Arc::new(|_p: &[f64], g: &mut [f64]| {
            g[0] = 1.0;
            g[1] = 0.0;
        }),
        hessian: Some(Arc::new(|_p: &[f64], h: &mut [f64]| h.fill(0.0))),
        levelset_param: Some(Arc::new(|z: f64, s: f64| vec![z, s])),
        chart_range: (-2.0, 2.0),
        level_point: None,
        constraint_fields: vec![q],
        grad_bounds: (1.0, 1.0),
    };
    Ok((model, rc))
}

/// Closed-form limit drift of the effective dynamics for
/// [`builtin_omega_testcase`]:
/// `b_lim(a) = -d/dx V_0(a, 0) - Omega'(a) / (beta Omega(a))`.
pub fn omega_limit_drift(alpha: f64, beta: f64) -> f64 {
    let v0x = 4.0 * alpha * (alpha * alpha - 1.0);
    let om = 2.0 + alpha.sin();
    let omp = alpha.cos();
    -v0x - omp / (beta * om)
}

/// Resolve a `(model, reaction coordinate)` pair from config names.
///
/// Recognized models: `doublewell` (rc `xi1` or `xi2`), `threeatom`
/// (rc `theta`), `omega` (rc `x`).
pub fn from_names(
    model_name: &str,
    rc_name: &str,
    params: &BTreeMap<String, f64>,
) -> Result<(ModelSpec, ReactionCoordinate), CgError> {
    let get = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
    match model_name {
        "doublewell" => {
            let model = builtin_doublewell(get("epsilon", 0.01))?;
            let rc = match rc_name {
                "xi1" => builtin_xi1(),
                "xi2" => builtin_xi2(),
                other => {
                    return Err(CgError::Config(format!(
                        "unknown reaction coordinate `{other}` for doublewell (expected xi1 or xi2)"
                    )))
                }
            };
            Ok((model, rc))
        }
        "threeatom" => {
            if rc_name != "theta" {
                return Err(CgError::Config(format!(
                    "unknown reaction coordinate `{rc_name}` for threeatom (expected theta)"
                )));
            }
            builtin_threeatom(
                get("epsilon", 1e-3),
                get("l0", 1.0),
                get("theta0", 1.187),
                get("ktheta", 208.0),
            )
        }
        "omega" => {
            if rc_name != "x" {
                return Err(CgError::Config(format!(
                    "unknown reaction coordinate `{rc_name}` for omega (expected x)"
                )));
            }
            builtin_omega_testcase(get("epsilon", 1e-3))
        }
        other => Err(CgError::Config(format!("unknown model `{other}`"))),
    }
}
