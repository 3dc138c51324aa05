use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Autocovariance `r(τ)` of a centered stationary process, with a display name.
#[derive(Clone)]
pub struct Autocovariance {
    name: String,
    r: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl Autocovariance {
    pub fn new(name: impl Into<String>, r: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), r: Arc::new(r) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `r(|τ|)`.
    pub fn at(&self, tau: f64) -> f64 {
        (self.r)(tau.abs())
    }
}

impl fmt::Debug for Autocovariance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("Autocovariance").field(&self.name).finish()
    }
}

/// The Gaussian processes the simulators know how to sample exactly.
#[derive(Debug, Clone)]
pub enum CovarianceModel {
    /// Standard fBm with `Cov = (|t|^α + |s|^α − |t−s|^α)/2`, Hurst index α/2.
    Fbm { alpha: f64 },
    /// Centered stationary process with unit variance.
    Stationary(Autocovariance),
    /// `B(s) − s·B(1)` on `[0,1]`.
    BrownianBridge,
    /// `B(t+1) − B(t)`, autocovariance `max(1−|τ|, 0)`.
    Slepian,
    /// Autocovariance `exp(−|τ|)`.
    OrnsteinUhlenbeck,
}

pub fn slepian_acov(tau: f64) -> f64 {
    (1.0 - tau.abs()).max(0.0)
}

pub fn ou_acov(tau: f64) -> f64 {
    (-tau.abs()).exp()
}

pub fn fbm_cov(alpha: f64, s: f64, t: f64) -> f64 {
    0.5 * (s.abs().powf(alpha) + t.abs().powf(alpha) - (t - s).abs().powf(alpha))
}

/// Autocovariance of fBm increments over steps of length `dt` at integer lag `k`.
pub fn fgn_acov(alpha: f64, dt: f64, k: usize) -> f64 {
    let k = k as f64;
    let p = |x: f64| x.abs().powf(alpha);
    0.5 * dt.powf(alpha) * (p(k + 1.0) - 2.0 * p(k) + p(k - 1.0))
}

impl CovarianceModel {
    /// `exp(−λ|τ|)·cos(ωτ)`: a stationary model whose autocovariance has an
    /// interior minimum on `[0,1]` for suitable `(λ, ω)`.
    pub fn damped_cosine(lambda: f64, omega: f64) -> Self {
        CovarianceModel::Stationary(Autocovariance::new(format!("damped-cosine(λ={lambda},ω={omega})"), move |tau| {
            (-lambda * tau.abs()).exp() * (omega * tau).cos()
        }))
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            CovarianceModel::Fbm { alpha } => {
                if !(*alpha > 0.0 && *alpha <= 2.0) {
                    return Err(Error::InvalidModel(format!("fbm exponent {alpha} outside (0,2]")));
                }
            }
            CovarianceModel::Stationary(r) => {
                let r0 = r.at(0.0);
                if (r0 - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidModel(format!("{}: r(0) = {r0}, expected 1", r.name())));
                }
            }
            _ => {}
        }
        Ok(())
    }

    pub fn is_stationary(&self) -> bool {
        matches!(self, CovarianceModel::Stationary(_) | CovarianceModel::Slepian | CovarianceModel::OrnsteinUhlenbeck)
    }

    /// Autocovariance for the stationary kinds.
    pub fn autocovariance(&self, tau: f64) -> Option<f64> {
        match self {
            CovarianceModel::Stationary(r) => Some(r.at(tau)),
            CovarianceModel::Slepian => Some(slepian_acov(tau)),
            CovarianceModel::OrnsteinUhlenbeck => Some(ou_acov(tau)),
            _ => None,
        }
    }

    /// `Cov(X(s), X(t))`.
    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        match self {
            CovarianceModel::Fbm { alpha } => fbm_cov(*alpha, s, t),
            CovarianceModel::BrownianBridge => s.min(t) - s * t,
            other => other.autocovariance(t - s).expect("stationary kind"),
        }
    }

    pub fn name(&self) -> String {
        match self {
            CovarianceModel::Fbm { alpha } => format!("fbm(α={alpha})"),
            CovarianceModel::Stationary(r) => r.name().to_string(),
            CovarianceModel::BrownianBridge => "brownian-bridge".into(),
            CovarianceModel::Slepian => "slepian".into(),
            CovarianceModel::OrnsteinUhlenbeck => "ornstein-uhlenbeck".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fgn_lags_telescope_to_fbm_variance() {
        // Var B(n dt) = Σ_{i,j<n} γ(|i−j|) must equal (n dt)^α.
        for &alpha in &[0.4, 1.0, 1.7] {
            let dt = 0.1;
            let n: usize = 12;
            let mut var = 0.0;
            for i in 0..n {
                for j in 0..n {
                    var += fgn_acov(alpha, dt, i.abs_diff(j));
                }
            }
            assert!((var - (n as f64 * dt).powf(alpha)).abs() < 1e-12);
        }
        assert!(fgn_acov(1.0, 0.5, 3).abs() < 1e-16);
        assert!((fgn_acov(1.0, 0.5, 0) - 0.5).abs() < 1e-16);
    }

    #[test]
    fn model_covariances() {
        assert_eq!(CovarianceModel::Slepian.covariance(0.0, 0.25), 0.75);
        assert_eq!(CovarianceModel::Slepian.covariance(0.0, 1.5), 0.0);
        assert!((CovarianceModel::OrnsteinUhlenbeck.covariance(2.0, 1.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(CovarianceModel::BrownianBridge.covariance(0.5, 0.5), 0.25);
        let fbm = CovarianceModel::Fbm { alpha: 0.8 };
        let want = (0.3f64.powf(0.8) + 0.7f64.powf(0.8) - 0.4f64.powf(0.8)) / 2.0;
        assert!((fbm.covariance(0.3, 0.7) - want).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(CovarianceModel::Fbm { alpha: 2.0 }.validate().is_ok());
        assert!(CovarianceModel::Fbm { alpha: 2.1 }.validate().is_err());
        assert!(CovarianceModel::Fbm { alpha: 0.0 }.validate().is_err());
        let bad = CovarianceModel::Stationary(Autocovariance::new("half", |t| 0.5 * (-t).exp()));
        assert!(bad.validate().is_err());
        assert!(CovarianceModel::damped_cosine(1.0, 3.0).validate().is_ok());
    }
}
