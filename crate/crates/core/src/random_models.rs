//! Seeded samplers for uniform, phi-perturbed and Gaussian-smoothed instances.
//!
//! All samplers use ChaCha8 with one stream per point: stream `2i` drives the
//! coordinates (or noise) of point `i` and stream `2i + 1` its anchor. Output
//! therefore depends only on the seed and the parameters, not on sampling
//! order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Instance, Metric, Point};

fn point_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn check_shape(n: usize, d: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::invalid(format!("need n >= 3 points, got {n}")));
    }
    if d < 2 {
        return Err(Error::invalid(format!("need dimension d >= 2, got {d}")));
    }
    Ok(())
}

fn unit_coords(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

/// `n` i.i.d. uniform points on `[0,1]^d` under the Euclidean metric.
pub fn sample_uniform(n: usize, d: usize, seed: u64) -> Result<Instance> {
    check_shape(n, d)?;
    let points = (0..n)
        .map(|i| Point::new(unit_coords(&mut point_stream(seed, 2 * i as u64), d)))
        .collect::<Result<Vec<_>>>()?;
    Instance::new(format!("uniform-n{n}-d{d}-s{seed}"), Metric::EUCLIDEAN, points)
}

/// Side length of the axis-parallel cube of volume `1/phi` in `d` dimensions.
pub fn subcube_side(phi: f64, d: usize) -> f64 {
    phi.powf(-1.0 / d as f64)
}

/// Parameters of a phi-bounded density family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub phi: f64,
    pub d: usize,
    pub anchors: Option<Vec<Vec<f64>>>,
}

/// Point `i` is uniform on a cube of side `phi^(-1/d)` centred at its anchor
/// and shifted as little as needed to stay inside `[0,1]^d`; its density is
/// exactly `phi` on that cube.
///
/// Without explicit anchors each anchor is drawn uniformly from `[0,1]^d`.
pub fn sample_phi_perturbed(
    n: usize,
    d: usize,
    phi: f64,
    seed: u64,
    anchors: Option<&[Vec<f64>]>,
) -> Result<Instance> {
    check_shape(n, d)?;
    if !(phi >= 1.0) || !phi.is_finite() {
        return Err(Error::invalid(format!("phi must be a finite value >= 1, got {phi}")));
    }
    if let Some(a) = anchors {
        if a.len() != n {
            return Err(Error::SizeMismatch {
                expected: n,
                found: a.len(),
            });
        }
        if let Some(bad) = a.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                left: d,
                right: bad.len(),
            });
        }
    }
    let side = subcube_side(phi, d);
    let points = (0..n)
        .map(|i| {
            let anchor = match anchors {
                Some(a) => a[i].clone(),
                None => unit_coords(&mut point_stream(seed, 2 * i as u64 + 1), d),
            };
            let u = unit_coords(&mut point_stream(seed, 2 * i as u64), d);
            let coords = anchor
                .iter()
                .zip(&u)
                .map(|(&c, &u)| {
                    let lo = (c - side / 2.0).clamp(0.0, 1.0 - side);
                    (lo + side * u).clamp(0.0, 1.0)
                })
                .collect();
            Point::new(coords)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(
        format!("phi{phi}-n{n}-d{d}-s{seed}"),
        Metric::EUCLIDEAN,
        points,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub sigma: f64,
    pub alpha: f64,
    pub truncated: bool,
}

impl SmoothingParams {
    pub fn new(sigma: f64, alpha: f64, truncated: bool) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
        }
        if !(alpha >= 1.0) || !alpha.is_finite() {
            return Err(Error::invalid(format!("alpha must be >= 1, got {alpha}")));
        }
        Ok(Self {
            sigma,
            alpha,
            truncated,
        })
    }
}

/// Adds `N(0, sigma^2)` noise to every coordinate (conditioned on
/// `[-alpha, alpha]` by rejection when truncated), then maps the cube
/// `[-alpha, 1 + alpha]^d` affinely onto `[0,1]^d`.
pub fn sample_smoothed_gaussian(
    base: &[Point],
    params: &SmoothingParams,
    seed: u64,
) -> Result<Instance> {
    let params = SmoothingParams::new(params.sigma, params.alpha, params.truncated)?;
    if base.len() < 3 {
        return Err(Error::invalid(format!(
            "need at least 3 base points, got {}",
            base.len()
        )));
    }
    let d = base[0].dim();
    let scale = 1.0 + 2.0 * params.alpha;
    let points = base
        .iter()
        .enumerate()
        .map(|(i, p)| {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    left: d,
                    right: p.dim(),
                });
            }
            if p.coords().iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(Error::invalid(format!("base point {i} lies outside [0,1]^{d}")));
            }
            let mut rng = point_stream(seed, 2 * i as u64);
            let coords = p
                .coords()
                .iter()
                .map(|&c| {
                    let z = gaussian_offset(&mut rng, &params);
                    (c + z + params.alpha) / scale
                })
                .collect();
            Point::new(coords)
        })
        .collect::<Result<Vec<_>>>()?;
    Instance::new(
        format!(
            "gauss-s{}-a{}{}-n{}-s{seed}",
            params.sigma,
            params.alpha,
            if params.truncated { "t" } else { "" },
            base.len()
        ),
        Metric::EUCLIDEAN,
        points,
    )
}

pub(crate) fn gaussian_offset(rng: &mut ChaCha8Rng, params: &SmoothingParams) -> f64 {
    loop {
        let z: f64 = rng.sample::<f64, _>(StandardNormal) * params.sigma;
        if !params.truncated || z.abs() <= params.alpha {
            return z;
        }
    }
}

/// Density bound of the perturbed points before rescaling.
///
/// Untruncated: `(1/(sqrt(2 pi) sigma))^d`. Truncated (requires `sigma <= 1`):
/// the per-coordinate bound `(1/(sigma sqrt(2 pi))) / (1 - sigma exp(-alpha^2/(2 sigma^2)))`
/// raised to the `d`-th power.
pub fn phi_of_gaussian(params: &SmoothingParams, d: usize) -> Result<f64> {
    let SmoothingParams {
        sigma,
        alpha,
        truncated,
    } = *params;
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    let peak = 1.0 / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let per_coord = if truncated {
        if sigma > 1.0 {
            return Err(Error::OutOfDomain(format!(
                "the truncated density bound needs sigma <= 1, got {sigma}"
            )));
        }
        peak / (1.0 - sigma * (-alpha * alpha / (2.0 * sigma * sigma)).exp())
    } else {
        peak
    };
    Ok(per_coord.powi(d as i32))
}

/// Density bound after mapping `[-alpha, 1 + alpha]^d` onto the unit cube:
/// [`phi_of_gaussian`] times `(2 alpha + 1)^d`.
pub fn phi_of_gaussian_rescaled(params: &SmoothingParams, d: usize) -> Result<f64> {
    Ok(phi_of_gaussian(params, d)? * (2.0 * params.alpha + 1.0).powi(d as i32))
}
