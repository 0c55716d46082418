//! Differential operators built from the reaction coordinate: the local mean
//! force, the drift integrand of the effective dynamics, and the projection
//! of full-space noise onto the gradient direction.

use crate::error::CgError;
use crate::model::{ModelSpec, ReactionCoordinate};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// First- and second-order data of `xi` at one point.
#[derive(Debug, Clone)]
pub struct DerivativeBundle {
    pub grad_xi: Vec<f64>,
    pub grad_norm: f64,
    pub laplacian_xi: f64,
    /// `div(grad xi / |grad xi|^2)`.
    pub div_grad_over_sq: f64,
}

impl DerivativeBundle {
    /// Evaluate at `x`. Errors when `|grad xi|` vanishes ([H1] violation).
    pub fn compute(rc: &ReactionCoordinate, x: &[f64]) -> Result<Self, CgError> {
        let n = rc.dimension();
        let g = rc.gradient(x);
        let gn2 = dot(&g, &g);
        if !(gn2 > 1e-24) {
            return Err(CgError::VanishingGradient);
        }
        let h = rc.hessian(x);
        let mut lap = 0.0;
        for i in 0..n {
            lap += h[i * n + i];
        }
        // div(grad xi / |grad xi|^2)
        //   = lap(xi)/|grad|^2 - 2 (grad^T H grad)/|grad|^4
        let mut ghg = 0.0;
        for i in 0..n {
            for j in 0..n {
                ghg += g[i] * h[i * n + j] * g[j];
            }
        }
        Ok(DerivativeBundle {
            grad_norm: gn2.sqrt(),
            laplacian_xi: lap,
            div_grad_over_sq: lap / gn2 - 2.0 * ghg / (gn2 * gn2),
            grad_xi: g,
        })
    }
}

/// Local mean force
/// `F = grad V . grad xi / |grad xi|^2 - div(grad xi / |grad xi|^2) / beta`;
/// its conditional average over `Sigma_z` is the mean force `A'(z)`.
pub fn local_mean_force(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    x: &[f64],
    beta: f64,
) -> Result<f64, CgError> {
    let b = DerivativeBundle::compute(rc, x)?;
    let gv = model.gradient(x);
    let gn2 = b.grad_norm * b.grad_norm;
    Ok(dot(&gv, &b.grad_xi) / gn2 - b.div_grad_over_sq / beta)
}

/// Drift integrand of the effective dynamics:
/// `-grad V . grad xi + lap(xi) / beta`.
pub fn drift_integrand(
    model: &ModelSpec,
    rc: &ReactionCoordinate,
    x: &[f64],
    beta: f64,
) -> f64 {
    let n = rc.dimension();
    let g = rc.gradient(x);
    let gv = model.gradient(x);
    let h = rc.hessian(x);
    let mut lap = 0.0;
    for i in 0..n {
        lap += h[i * n + i];
    }
    -dot(&gv, &g) + lap / beta
}

/// Project a full-space Brownian increment onto the unit gradient direction:
/// `dB = (grad xi / |grad xi|)(x) . dW`.
pub fn project_noise(
    rc: &ReactionCoordinate,
    x: &[f64],
    dw: &[f64],
) -> Result<f64, CgError> {
    let g = rc.gradient(x);
    let gn = norm(&g);
    if !(gn > 1e-12) {
        return Err(CgError::VanishingGradient);
    }
    Ok(dot(&g, dw) / gn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{builtin_doublewell, builtin_xi1, builtin_xi2};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    // Independent finite-difference route for div(grad xi / |grad xi|^2).
    fn fd_div_term(rc: &ReactionCoordinate, x: &[f64]) -> f64 {
        let n = rc.dimension();
        let h = 1e-5;
        let field = |p: &[f64], i: usize| {
            let g = rc.gradient(p);
            g[i] / dot(&g, &g)
        };
        let mut xp = x.to_vec();
        let mut div = 0.0;
        for i in 0..n {
            xp[i] = x[i] + h;
            let fp = field(&xp, i);
            xp[i] = x[i] - h;
            let fm = field(&xp, i);
            xp[i] = x[i];
            div += (fp - fm) / (2.0 * h);
        }
        div
    }

    fn fd_laplacian(rc: &ReactionCoordinate, x: &[f64]) -> f64 {
        let h = 1e-5;
        let mut xp = x.to_vec();
        let mut lap = 0.0;
        let f0 = rc.value(x);
        for i in 0..x.len() {
            xp[i] = x[i] + h;
            let fp = rc.value(&xp);
            xp[i] = x[i] - h;
            let fm = rc.value(&xp);
            xp[i] = x[i];
            lap += (fp - 2.0 * f0 + fm) / (h * h);
        }
        lap
    }

    #[test]
    fn local_mean_force_at_minimum() {
        // |grad xi1| = 1 kills the divergence term; the minimum kills grad V.
        let m = builtin_doublewell(0.01).unwrap();
        let f = local_mean_force(&m, &builtin_xi1(), &[1.0, 0.0], 3.0).unwrap();
        assert!(f.abs() < 1e-14);
    }

    #[test]
    fn local_mean_force_direct_substitution() {
        // xi1, doublewell at (0.5, 0.5), eps = 0.01:
        // F = dV/dx = 4*0.5*(0.25-1) + (4*0.5/0.01)*(0.25+0.5-1) = -51.5
        let m = builtin_doublewell(0.01).unwrap();
        let f = local_mean_force(&m, &builtin_xi1(), &[0.5, 0.5], 1.0).unwrap();
        assert!((f + 51.5).abs() < 1e-10, "F = {f}");
    }

    #[test]
    fn local_mean_force_matches_fd_oracle() {
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi2();
        let beta = 3.0;
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..100 {
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let f = local_mean_force(&m, &rc, &x, beta).unwrap();
            let g = rc.gradient(&x);
            let gv = m.gradient(&x);
            let oracle = dot(&gv, &g) / dot(&g, &g) - fd_div_term(&rc, &x) / beta;
            let scale = f.abs().max(1.0);
            assert!((f - oracle).abs() < 1e-4 * scale, "{f} vs {oracle} at {x:?}");
        }
    }

    #[test]
    fn drift_integrand_at_saddle() {
        // xi2 at (0, 1): lap xi2 = 4x e^{-2y} = 0 and grad V(0,1) = 0.
        let m = builtin_doublewell(0.01).unwrap();
        let d = drift_integrand(&m, &builtin_xi2(), &[0.0, 1.0], 3.0);
        assert!(d.abs() < 1e-14);
    }

    #[test]
    fn drift_integrand_matches_fd_oracle() {
        let m = builtin_doublewell(0.01).unwrap();
        let rc = builtin_xi2();
        let beta = 3.0;
        let mut rng = StdRng::seed_from_u64(29);
        for _ in 0..100 {
            let x = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let d = drift_integrand(&m, &rc, &x, beta);
            let g = rc.gradient(&x);
            let gv = m.gradient(&x);
            let oracle = -dot(&gv, &g) + fd_laplacian(&rc, &x) / beta;
            let scale = d.abs().max(1.0);
            assert!((d - oracle).abs() < 1e-4 * scale, "{d} vs {oracle} at {x:?}");
        }
    }

    #[test]
    fn projection_values() {
        // grad xi2(0,0) = (1, 0); grad xi1 = (1, 0) everywhere.
        let xi2 = builtin_xi2();
        assert!((project_noise(&xi2, &[0.0, 0.0], &[0.7, -0.3]).unwrap() - 0.7).abs() < 1e-15);
        let xi1 = builtin_xi1();
        assert!((project_noise(&xi1, &[0.4, 1.3], &[0.7, -0.3]).unwrap() - 0.7).abs() < 1e-15);
    }

    #[test]
    fn projection_is_isometric_on_gradient_direction() {
        let xi2 = builtin_xi2();
        let x = [0.8, -0.4];
        let g = xi2.gradient(&x);
        let gn = norm(&g);
        let unit: Vec<f64> = g.iter().map(|v| v / gn).collect();
        assert!((project_noise(&xi2, &x, &unit).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_preserves_variance() {
        use rand_distr::{Distribution, StandardNormal};
        let xi2 = builtin_xi2();
        let x = [0.8, -0.4];
        let mut rng = StdRng::seed_from_u64(41);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let dw = [
                StandardNormal.sample(&mut rng),
                StandardNormal.sample(&mut rng),
            ];
            let b = project_noise(&xi2, &x, &dw).unwrap();
            s += b;
            s2 += b * b;
        }
        let var = s2 / n as f64 - (s / n as f64).powi(2);
        assert!((0.995..=1.005).contains(&var), "var = {var}");
    }

    #[test]
    fn vanishing_gradient_is_rejected() {
        // theta of the three-atom model has zero r1x-component only; build a
        // degenerate rc instead: xi2 gradient never vanishes, so use a point
        // where a constant coordinate map would. DerivativeBundle rejects
        // gradient norms below 1e-12.
        let (_, rc) = crate::model::builtin_threeatom(1e-3, 1.0, 1.187, 208.0).unwrap();
        // At huge |r3| the gradient 1/|r3| is tiny but nonzero; scale to zero.
        let far = [1.0, 1e13, 0.0];
        assert!(matches!(
            DerivativeBundle::compute(&rc, &far),
            Err(CgError::VanishingGradient)
        ));
    }
}
