use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, Scalar};

const SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplerKind {
    Uniform,
    /// `p_i` proportional to `L_i`
    Lipschitz,
    /// `p_i` proportional to `M_i / alpha_i`
    Optimal,
}

impl SamplerKind {
    pub fn name(self) -> &'static str {
        match self {
            SamplerKind::Uniform => "uniform",
            SamplerKind::Lipschitz => "lipschitz",
            SamplerKind::Optimal => "optimal",
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SamplerKind::Uniform),
            "lipschitz" => Ok(SamplerKind::Lipschitz),
            "optimal" => Ok(SamplerKind::Optimal),
            _ => Err(Error::Config(format!("unknown sampler '{s}'"))),
        }
    }
}

/// Strictly positive block probabilities summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDistribution {
    p: Vec<f64>,
}

impl BlockDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.is_empty() {
            return Err(invalid("distribution needs at least one block"));
        }
        if let Some(v) = p.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!(
                "block probabilities must be positive, got {v}"
            )));
        }
        let s = compensated_sum(p.iter().copied());
        if (s - 1.0).abs() > SUM_TOL {
            return Err(invalid(format!("probabilities sum to {s}")));
        }
        Ok(Self { p })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("distribution needs at least one block"));
        }
        Ok(Self {
            p: vec![1.0 / n as f64; n],
        })
    }

    /// Normalizes positive weights.
    pub fn proportional<T: Scalar>(weights: &[T]) -> Result<Self> {
        let w: Vec<f64> = weights.iter().map(|v| v.to_f64_lossy()).collect();
        if let Some(v) = w.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
            return Err(invalid(format!(
                "sampling weights must be positive, got {v}"
            )));
        }
        let total = compensated_sum(w.iter().copied());
        Self::new(w.into_iter().map(|v| v / total).collect())
    }

    pub fn lipschitz<T: Scalar>(lipschitz: &[T]) -> Result<Self> {
        Self::proportional(lipschitz)
    }

    /// `p_i = (M_i / alpha_i) / sum_j (M_j / alpha_j)`.
    pub fn optimal<T: Scalar>(m: &[T], alpha_bar: &[T]) -> Result<Self> {
        if m.len() != alpha_bar.len() {
            return Err(invalid("M and alpha have different lengths"));
        }
        if let Some(a) = alpha_bar
            .iter()
            .find(|a| !(**a > T::zero() && **a <= T::one()))
        {
            return Err(invalid(format!("step bounds must lie in (0, 1], got {a}")));
        }
        let w: Vec<T> = m.iter().zip(alpha_bar).map(|(&m, &a)| m / a).collect();
        Self::proportional(&w)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.p.iter().copied().fold(f64::INFINITY, f64::min)
    }
}
