//! Gaussian radial-basis-function approximator with online weight adaptation.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec2};

/// `psi_k(z) = exp(-|z - mu_k|^2 / eta^2)`, weights combine the basis into
/// one or more outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RbfModel {
    /// Row-major `count x input_dim`.
    centers: Vec<f64>,
    input_dim: usize,
    width: f64,
    /// Row-major `count x outputs`.
    weights: Vec<f64>,
    outputs: usize,
    leakage: f64,
    gain: f64,
    assumed_error_bound: f64,
}

/// Network shape and adaptation constants as they appear in configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RbfParams {
    pub count: usize,
    pub center_min: f64,
    pub center_max: f64,
    pub width: f64,
    pub leakage: f64,
    #[serde(default)]
    pub assumed_error_bound: f64,
}

impl RbfParams {
    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            return Err(Error::config("rbf.count", "need at least one basis function"));
        }
        if !(self.width.is_finite() && self.width > 0.0) {
            return Err(Error::config("rbf.width", "width must be > 0"));
        }
        if !(self.center_min.is_finite() && self.center_max.is_finite())
            || self.center_max < self.center_min
        {
            return Err(Error::config("rbf.center_max", "center range must be finite and ordered"));
        }
        if !(self.leakage.is_finite() && self.leakage >= 0.0) {
            return Err(Error::config("rbf.leakage", "leakage must be >= 0"));
        }
        if !(self.assumed_error_bound.is_finite() && self.assumed_error_bound >= 0.0) {
            return Err(Error::config("rbf.assumed_error_bound", "must be >= 0"));
        }
        Ok(())
    }

    /// Evenly spaced centers over `[center_min, center_max]`.
    pub fn centers(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![0.5 * (self.center_min + self.center_max)];
        }
        let step = (self.center_max - self.center_min) / (self.count - 1) as f64;
        (0..self.count)
            .map(|k| self.center_min + step * k as f64)
            .collect()
    }
}

impl RbfModel {
    /// Zero-weight model over arbitrary centers (`centers[k]` is one point).
    pub fn new(centers: &[Vec<f64>], width: f64, outputs: usize, gain: f64, leakage: f64) -> Result<Self> {
        let input_dim = centers
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Argument("RBF model needs at least one center".into()))?;
        if input_dim == 0 || centers.iter().any(|c| c.len() != input_dim) {
            return Err(Error::Argument("RBF centers must share a nonzero dimension".into()));
        }
        if !(width.is_finite() && width > 0.0) {
            return Err(Error::Argument(format!("RBF width must be > 0, got {width}")));
        }
        if outputs == 0 {
            return Err(Error::Argument("RBF model needs at least one output".into()));
        }
        if !(gain.is_finite() && gain > 0.0) || !(leakage.is_finite() && leakage >= 0.0) {
            return Err(Error::Argument("RBF gain must be > 0 and leakage >= 0".into()));
        }
        Ok(RbfModel {
            centers: centers.iter().flatten().copied().collect(),
            input_dim,
            width,
            weights: vec![0.0; centers.len() * outputs],
            outputs,
            leakage,
            gain,
            assumed_error_bound: 0.0,
        })
    }

    /// Scalar-input, scalar-output network from configuration.
    pub fn scalar(params: &RbfParams, gain: f64) -> Result<Self> {
        params.validate()?;
        let centers: Vec<Vec<f64>> = params.centers().into_iter().map(|c| vec![c]).collect();
        let mut model = RbfModel::new(&centers, params.width, 1, gain, params.leakage)?;
        model.assumed_error_bound = params.assumed_error_bound;
        Ok(model)
    }

    pub fn count(&self) -> usize {
        self.centers.len() / self.input_dim
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn center(&self, k: usize) -> &[f64] {
        &self.centers[k * self.input_dim..(k + 1) * self.input_dim]
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn assumed_error_bound(&self) -> f64 {
        self.assumed_error_bound
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: &[f64]) -> Result<()> {
        if weights.len() != self.weights.len() {
            return Err(Error::Argument(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        self.weights.copy_from_slice(weights);
        Ok(())
    }

    /// Frobenius norm of the weight matrix.
    pub fn weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum::<f64>().sqrt()
    }

    pub fn basis(&self, z: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.count()];
        self.basis_into(z, &mut out);
        out
    }

    pub fn basis_into(&self, z: &[f64], out: &mut [f64]) {
        debug_assert_eq!(z.len(), self.input_dim);
        let inv_w2 = 1.0 / (self.width * self.width);
        for (k, slot) in out.iter_mut().enumerate() {
            let d2: f64 = self
                .center(k)
                .iter()
                .zip(z)
                .map(|(c, x)| (x - c) * (x - c))
                .sum();
            *slot = (-d2 * inv_w2).exp();
        }
    }

    pub fn predict(&self, z: &[f64]) -> Vec<f64> {
        self.predict_from_basis(&self.basis(z))
    }

    /// `weights^T * basis` for precomputed basis values.
    pub fn predict_from_basis(&self, basis: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.outputs];
        for (k, psi) in basis.iter().enumerate() {
            let row = &self.weights[k * self.outputs..(k + 1) * self.outputs];
            for (o, w) in out.iter_mut().zip(row) {
                *o += w * psi;
            }
        }
        out
    }

    /// Leakage-modified gradient step
    /// `W <- W + dt * gain * (basis * modulation^T - leakage * W)`.
    pub fn adapt(&mut self, basis: &[f64], modulation: &[f64], dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(Error::Argument(format!("dt must be positive, got {dt}")));
        }
        if basis.len() != self.count() || modulation.len() != self.outputs {
            return Err(Error::Argument("basis/modulation shape mismatch".into()));
        }
        let k = dt * self.gain;
        for (row, psi) in self.weights.chunks_exact_mut(self.outputs).zip(basis) {
            for (w, m) in row.iter_mut().zip(modulation) {
                *w += k * (psi * m - self.leakage * *w);
            }
        }
        if self.weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::numerical(f64::NAN, "RBF weights are not finite"));
        }
        Ok(())
    }

    /// Value-returning form of [`RbfModel::adapt`].
    pub fn adapted(&self, basis: &[f64], modulation: &[f64], dt: f64) -> Result<Self> {
        let mut next = self.clone();
        next.adapt(basis, modulation, dt)?;
        Ok(next)
    }
}

/// One independent scalar network per axis, each fed its own velocity component.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisNetworks {
    pub axes: [RbfModel; 2],
}

/// Basis values of both axis networks at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisBasis(pub [Vec<f64>; 2]);

impl AxisNetworks {
    pub fn new(params: &RbfParams, gain: f64) -> Result<Self> {
        let model = RbfModel::scalar(params, gain)?;
        Ok(AxisNetworks {
            axes: [model.clone(), model],
        })
    }

    pub fn basis(&self, velocity: &Vec2) -> AxisBasis {
        AxisBasis([
            self.axes[0].basis(&[velocity.x]),
            self.axes[1].basis(&[velocity.y]),
        ])
    }

    pub fn predict(&self, basis: &AxisBasis) -> Vec2 {
        Vec2::new(
            self.axes[0].predict_from_basis(&basis.0[0])[0],
            self.axes[1].predict_from_basis(&basis.0[1])[0],
        )
    }

    pub fn adapt(&mut self, basis: &AxisBasis, modulation: &Vec2, dt: f64) -> Result<()> {
        self.axes[0].adapt(&basis.0[0], &[modulation.x], dt)?;
        self.axes[1].adapt(&basis.0[1], &[modulation.y], dt)
    }

    pub fn weight_norm(&self) -> f64 {
        self.axes[0].weight_norm().hypot(self.axes[1].weight_norm())
    }
}
