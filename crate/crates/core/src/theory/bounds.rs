use crate::error::{invalid, Result};

/// Parameters entering the rate bounds, one entry per block where indexed.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryParams {
    pub m: Vec<f64>,
    pub big_m: Vec<f64>,
    pub lipschitz: Vec<f64>,
    pub p: Vec<f64>,
    /// Step-size lower bounds `alpha_bar_i` in `(0, 1]`.
    pub alpha_bar: Vec<f64>,
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
    pub mu: Option<f64>,
    pub r0: Option<f64>,
    /// `F(x0) - F*`.
    pub gap0: Option<f64>,
}

impl TheoryParams {
    /// Unit-step randomized BCD: `H_i = L_i I`, exact solves, unit steps, `gamma = 1`.
    pub fn rcd_unit(lipschitz: &[f64], p: &[f64]) -> Self {
        Self {
            m: lipschitz.to_vec(),
            big_m: lipschitz.to_vec(),
            lipschitz: lipschitz.to_vec(),
            p: p.to_vec(),
            alpha_bar: vec![1.0; lipschitz.len()],
            eta: 0.0,
            gamma: 1.0,
            beta: 0.5,
            mu: None,
            r0: None,
            gap0: None,
        }
    }

    /// Guaranteed Armijo step bounds `min{1, 2 beta (1 - gamma) m_i / (L_i (1 + sqrt(eta)))}`.
    pub fn with_line_search_steps(mut self) -> Self {
        self.alpha_bar = self
            .m
            .iter()
            .zip(&self.lipschitz)
            .map(|(&m, &l)| {
                (2.0 * self.beta * (1.0 - self.gamma) * m / (l * (1.0 + self.eta.sqrt()))).min(1.0)
            })
            .collect();
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.p.len();
        if n == 0
            || [
                self.m.len(),
                self.big_m.len(),
                self.lipschitz.len(),
                self.alpha_bar.len(),
            ]
            .iter()
            .any(|&l| l != n)
        {
            return Err(invalid("theory parameters have inconsistent lengths"));
        }
        for i in 0..n {
            if !(self.m[i] > 0.0 && self.m[i] <= self.big_m[i]) {
                return Err(invalid(format!("block {i}: need 0 < m <= M")));
            }
            if !(self.alpha_bar[i] > 0.0 && self.alpha_bar[i] <= 1.0) {
                return Err(invalid(format!("block {i}: step bound outside (0, 1]")));
            }
            if !(self.p[i] > 0.0) {
                return Err(invalid(format!("block {i}: probability must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.eta) || !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid("need eta in [0, 1) and gamma in (0, 1]"));
        }
        Ok(())
    }

    pub fn blocks(&self) -> usize {
        self.p.len()
    }

    /// `min_i alpha_bar_i p_i`.
    pub fn pi_bar(&self) -> f64 {
        self.alpha_bar
            .iter()
            .zip(&self.p)
            .map(|(a, p)| a * p)
            .fold(f64::INFINITY, f64::min)
    }

    /// `||P^{-1} A^{-1} M|| = max_i M_i / (alpha_bar_i p_i)`.
    pub fn weighted_norm(&self) -> f64 {
        (0..self.blocks())
            .map(|i| self.big_m[i] / (self.alpha_bar[i] * self.p[i]))
            .fold(0.0, f64::max)
    }

    fn progress(&self) -> f64 {
        (1.0 - self.eta) * self.gamma
    }
}

/// Early linear phase: per-iteration factor and the phase-change index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EarlyLinear {
    pub factor: f64,
    pub k0_bar: Option<u64>,
}

/// `1 - (1 - eta) gamma pi_bar / 2`, and `k0_bar` when `gap0` and `R0` are known.
pub fn early_linear(params: &TheoryParams) -> EarlyLinear {
    let pi = params.pi_bar();
    let factor = 1.0 - params.progress() * pi / 2.0;
    let k0_bar = match (params.gap0, params.r0) {
        (Some(gap0), Some(r0)) => {
            let threshold = params.weighted_norm() * pi * r0 * r0;
            let num = (gap0 / threshold).ln();
            let den = (2.0 / (2.0 - params.progress() * pi)).ln();
            let k = if den > 0.0 {
                (num / den).max(0.0).ceil()
            } else {
                f64::INFINITY
            };
            k.is_finite().then_some(k as u64)
        }
        _ => None,
    };
    EarlyLinear { factor, k0_bar }
}

/// `2 ||P^{-1} A^{-1} M|| R0^2 / (2N + (1 - eta) gamma (k - k0))`.
pub fn sublinear_bound(params: &TheoryParams, r0: f64, k: u64, k0: u64) -> f64 {
    let steps = k.saturating_sub(k0) as f64;
    2.0 * params.weighted_norm() * r0 * r0
        / (2.0 * params.blocks() as f64 + params.progress() * steps)
}

/// Quadratic-growth rate `rho` with `K = ||P^{-1} A^{-1} M||` and `pi = pi_bar`.
pub fn linear_growth_rho(params: &TheoryParams, mu: f64) -> f64 {
    let k = params.weighted_norm();
    let pi = params.pi_bar();
    if mu / (2.0 * k * pi) <= 1.0 {
        mu / (4.0 * k)
    } else {
        pi * (1.0 - pi * k / mu)
    }
}

pub fn linear_growth_factor(params: &TheoryParams, mu: f64) -> f64 {
    1.0 - params.progress() * linear_growth_rho(params, mu)
}

/// Optimal-set strong convexity rate `(1/pi + K/mu)^{-1}`.
pub fn linear_ossc_rho(params: &TheoryParams, mu: f64) -> f64 {
    1.0 / (1.0 / params.pi_bar() + params.weighted_norm() / mu)
}

pub fn linear_ossc_factor(params: &TheoryParams, mu: f64) -> f64 {
    1.0 - params.progress() * linear_ossc_rho(params, mu)
}

/// Short-step BCD under optimal-set strong convexity: `1 - (1 - eta)(1 + 1/mu)^{-1} / (N L)`,
/// with `L = L_max` (uniform) or `L_avg` (Lipschitz sampling).
pub fn short_step_ossc_factor(blocks: usize, l: f64, mu: f64, eta: f64) -> f64 {
    1.0 - (1.0 - eta) / (1.0 + 1.0 / mu) / (blocks as f64 * l)
}

/// Iteration count `N L / ((1 - eta) mu) log(1/eps)` with `L = L_max` or `L_avg`.
pub fn complexity_ossc(blocks: usize, l: f64, mu: f64, eta: f64, eps: f64) -> f64 {
    blocks as f64 * l / ((1.0 - eta) * mu) * (1.0 / eps).ln()
}

/// Bound on `min_k |E[alpha Q]|` after `T + 1` iterations.
pub fn nonconvex_q_bound(gap0: f64, gamma: f64, t: u64) -> f64 {
    gap0 / (gamma * (t as f64 + 1.0))
}

/// `(1 + 1/m + sqrt(1 - 2/M + 1/m^2)) / 2 * M`, relating `||G_i||` to `||d_i*||`.
pub fn step_multiplier(m: f64, big_m: f64) -> f64 {
    let root = (1.0 - 2.0 / big_m + 1.0 / (m * m)).max(0.0).sqrt();
    (1.0 + 1.0 / m + root) / 2.0 * big_m
}

/// Bound on `min_k E ||G_k||^2` for the line-search method after `T + 1` iterations.
pub fn nonconvex_g_bound(params: &TheoryParams, gap0: f64, t: u64) -> f64 {
    let worst = (0..params.blocks())
        .map(|i| {
            let (m, big_m) = (params.m[i], params.big_m[i]);
            let root = (1.0 - 2.0 / big_m + 1.0 / (m * m)).max(0.0).sqrt();
            let s = 1.0 + 1.0 / m + root;
            big_m * big_m * s * s / (params.p[i] * params.alpha_bar[i] * m)
        })
        .fold(0.0, f64::max);
    gap0 / (2.0 * params.progress() * (t as f64 + 1.0)) * worst
}

/// Bound on `min_k E ||G_k||^2` for unit-step BCD: `2 gap0 / ((1 - eta)(T + 1)) max_i L_i / p_i`.
pub fn rcd_g_bound(lipschitz: &[f64], p: &[f64], eta: f64, gap0: f64, t: u64) -> f64 {
    let worst = lipschitz
        .iter()
        .zip(p)
        .map(|(l, p)| l / p)
        .fold(0.0, f64::max);
    2.0 * gap0 / ((1.0 - eta) * (t as f64 + 1.0)) * worst
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(l: &[f64]) -> TheoryParams {
        TheoryParams::rcd_unit(l, &vec![1.0 / l.len() as f64; l.len()])
    }

    #[test]
    fn uniform_early_factor() {
        assert_eq!(early_linear(&uniform(&[1.0; 4])).factor, 0.875);
    }

    #[test]
    fn lipschitz_early_factor() {
        let l = [1.0, 1.0, 1.0, 5.0];
        let p: Vec<f64> = l.iter().map(|v| v / 8.0).collect();
        // L_min / (2 N L_avg) = 1 / 16
        assert!(
            (early_linear(&TheoryParams::rcd_unit(&l, &p)).factor - (1.0 - 1.0 / 16.0)).abs()
                < 1e-15
        );
    }

    #[test]
    fn eta_one_stalls() {
        let mut p = uniform(&[1.0; 3]);
        p.eta = 1.0;
        assert_eq!(early_linear(&p).factor, 1.0);
    }

    #[test]
    fn sublinear_at_k0() {
        let single = uniform(&[3.0]);
        assert!(
            (sublinear_bound(&single, 1.5, 7, 7) - single.weighted_norm() * 2.25).abs() < 1e-12
        );
        let p = uniform(&[2.0, 3.0]);
        assert!((sublinear_bound(&p, 1.5, 7, 7) - p.weighted_norm() * 2.25 / 2.0).abs() < 1e-12);
        assert!(sublinear_bound(&p, 1.5, 8, 7) < sublinear_bound(&p, 1.5, 7, 7));
    }

    #[test]
    fn growth_rho_continuous_at_switch() {
        let p = uniform(&[2.0, 3.0]);
        let k = p.weighted_norm();
        let pi = p.pi_bar();
        let mu = 2.0 * k * pi;
        assert!((linear_growth_rho(&p, mu) - pi / 2.0).abs() < 1e-15);
        assert!((linear_growth_rho(&p, mu * (1.0 + 1e-9)) - pi / 2.0).abs() < 1e-9);
    }

    #[test]
    fn ossc_simple_values() {
        let mut p = TheoryParams::rcd_unit(&[1.0], &[1.0]);
        p.big_m = vec![3.0];
        assert!((linear_ossc_rho(&p, 3.0) - 0.5).abs() < 1e-15);
        assert!((linear_ossc_rho(&p, 1e15) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_metric_factor() {
        let p = TheoryParams::rcd_unit(&[1.0], &[1.0]);
        assert_eq!(nonconvex_g_bound(&p, 1.0, 0), 4.0 / 2.0);
    }

    #[test]
    fn step_multiplier_identity_case() {
        for k in 1..200 {
            let c = k as f64 / 20.0;
            assert!((step_multiplier(c, c) - c.max(1.0)).abs() < 1e-12 * c.max(1.0));
        }
    }

    #[test]
    fn validate_catches_bad_params() {
        let mut p = uniform(&[1.0, 2.0]);
        assert!(p.validate().is_ok());
        p.alpha_bar[0] = 0.0;
        assert!(p.validate().is_err());
    }
}
