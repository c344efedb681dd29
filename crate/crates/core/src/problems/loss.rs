use crate::error::{invalid, Error, Result};
use crate::scalar::{compensated_sum, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    /// `C/2 (z - b)^2`
    Squared,
    /// `C max(0, 1 - b z)^2`, labels in `{-1, +1}`
    SquaredHinge,
    /// `C (z - b)^2 / (1 + (z - b)^2)`, nonconvex
    Biweight,
}

impl LossKind {
    pub fn is_convex(self) -> bool {
        !matches!(self, LossKind::Biweight)
    }

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Squared => "squared",
            LossKind::SquaredHinge => "squared-hinge",
            LossKind::Biweight => "biweight",
        }
    }
}

impl std::str::FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" | "lasso" => Ok(LossKind::Squared),
            "squared-hinge" | "squared_hinge" => Ok(LossKind::SquaredHinge),
            "biweight" => Ok(LossKind::Biweight),
            _ => Err(Error::Config(format!("unknown loss '{s}'"))),
        }
    }
}

/// Row-separable loss `g(z) = sum_r g_r(z_r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableLoss<T> {
    kind: LossKind,
    c: T,
    labels: Vec<T>,
}

impl<T: Scalar> SeparableLoss<T> {
    pub fn new(kind: LossKind, c: T, labels: Vec<T>) -> Result<Self> {
        if !(c > T::zero() && c.is_finite()) {
            return Err(invalid(format!("loss weight C must be positive, got {c}")));
        }
        if kind == LossKind::SquaredHinge {
            if let Some(b) = labels.iter().find(|b| b.abs() != T::one()) {
                return Err(invalid(format!(
                    "squared hinge needs labels in {{-1, +1}}, found {b}"
                )));
            }
        }
        Ok(Self { kind, c, labels })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn weight(&self) -> T {
        self.c
    }

    pub fn labels(&self) -> &[T] {
        &self.labels
    }

    /// Upper bound on every row's (generalized) second derivative.
    pub fn curvature_bound(&self) -> T {
        match self.kind {
            LossKind::Squared => self.c,
            LossKind::SquaredHinge | LossKind::Biweight => T::lit(2.0) * self.c,
        }
    }

    #[inline]
    pub fn row_value(&self, r: usize, z: T) -> T {
        let b = self.labels[r];
        match self.kind {
            LossKind::Squared => {
                let t = z - b;
                T::lit(0.5) * self.c * t * t
            }
            LossKind::SquaredHinge => {
                let m = (T::one() - b * z).max(T::zero());
                self.c * m * m
            }
            LossKind::Biweight => {
                let t = z - b;
                let t2 = t * t;
                self.c * t2 / (T::one() + t2)
            }
        }
    }

    #[inline]
    pub fn row_grad(&self, r: usize, z: T) -> T {
        let b = self.labels[r];
        match self.kind {
            LossKind::Squared => self.c * (z - b),
            LossKind::SquaredHinge => {
                let m = (T::one() - b * z).max(T::zero());
                -T::lit(2.0) * self.c * b * m
            }
            LossKind::Biweight => {
                let t = z - b;
                let s = T::one() + t * t;
                T::lit(2.0) * self.c * t / (s * s)
            }
        }
    }

    /// `g_r(z + h) - g_r(z)` without cancellation between the two values.
    #[inline]
    pub fn row_change(&self, r: usize, z: T, h: T) -> T {
        let b = self.labels[r];
        let two = T::lit(2.0);
        match self.kind {
            LossKind::Squared => self.c * h * (z - b + h / two),
            LossKind::SquaredHinge => {
                let m0 = T::one() - b * z;
                let m1 = T::one() - b * (z + h);
                if m0 > T::zero() && m1 > T::zero() {
                    -self.c * b * h * (m0 + m1)
                } else {
                    self.row_value(r, z + h) - self.row_value(r, z)
                }
            }
            LossKind::Biweight => {
                let t0 = z - b;
                let t1 = t0 + h;
                self.c * h * (t0 + t0 + h) / ((T::one() + t1 * t1) * (T::one() + t0 * t0))
            }
        }
    }

    /// Scale of the rounding error in [`row_change`](Self::row_change).
    #[inline]
    pub fn row_change_noise(&self, r: usize, z: T, h: T) -> T {
        let b = self.labels[r];
        h.abs()
            * (self.row_grad(r, z).abs() + self.curvature_bound() * (z.abs() + b.abs() + h.abs()))
    }

    /// Raw second derivative; negative values are possible for the biweight loss.
    #[inline]
    pub fn row_curvature(&self, r: usize, z: T) -> T {
        let b = self.labels[r];
        match self.kind {
            LossKind::Squared => self.c,
            LossKind::SquaredHinge => {
                if T::one() - b * z > T::zero() {
                    T::lit(2.0) * self.c
                } else {
                    T::zero()
                }
            }
            LossKind::Biweight => {
                let t2 = (z - b) * (z - b);
                let s = T::one() + t2;
                -T::lit(2.0) * self.c * (T::lit(3.0) * t2 - T::one()) / (s * s * s)
            }
        }
    }

    /// Curvature used for metrics: `max(g_r'', 0)`.
    #[inline]
    pub fn row_metric_curvature(&self, r: usize, z: T) -> T {
        self.row_curvature(r, z).max(T::zero())
    }

    pub fn eval(&self, z: &[T]) -> Result<T> {
        self.check(z)?;
        Ok(compensated_sum(
            z.iter().enumerate().map(|(r, &v)| self.row_value(r, v)),
        ))
    }

    pub fn grad(&self, z: &[T]) -> Result<Vec<T>> {
        self.check(z)?;
        Ok(z.iter()
            .enumerate()
            .map(|(r, &v)| self.row_grad(r, v))
            .collect())
    }

    /// Clamped per-row curvature.
    pub fn curv_diag(&self, z: &[T]) -> Result<Vec<T>> {
        self.check(z)?;
        Ok(z.iter()
            .enumerate()
            .map(|(r, &v)| self.row_metric_curvature(r, v))
            .collect())
    }

    fn check(&self, z: &[T]) -> Result<()> {
        if z.len() != self.labels.len() {
            return Err(invalid(format!(
                "z has length {}, expected {}",
                z.len(),
                self.labels.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("loss argument"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(kind: LossKind, b: f64) -> SeparableLoss<f64> {
        SeparableLoss::new(kind, 1.0, vec![b]).unwrap()
    }

    #[test]
    fn biweight_at_zero_residual() {
        let l = one(LossKind::Biweight, 0.0);
        assert_eq!(l.row_value(0, 0.0), 0.0);
        assert_eq!(l.row_grad(0, 0.0), 0.0);
        assert_eq!(l.row_curvature(0, 0.0), 2.0);
    }

    #[test]
    fn biweight_at_unit_residual() {
        let l = one(LossKind::Biweight, 0.0);
        assert_eq!(l.row_value(0, 1.0), 0.5);
        assert_eq!(l.row_curvature(0, 1.0), -0.5);
        assert_eq!(l.curv_diag(&[1.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn inactive_hinge() {
        let l = one(LossKind::SquaredHinge, 1.0);
        assert_eq!(l.row_value(0, 2.0), 0.0);
        assert_eq!(l.row_grad(0, 2.0), 0.0);
        assert_eq!(l.row_curvature(0, 2.0), 0.0);
        assert_eq!(l.row_curvature(0, 1.0), 0.0);
    }

    #[test]
    fn curvature_bound_dominates() {
        for kind in [
            LossKind::Squared,
            LossKind::SquaredHinge,
            LossKind::Biweight,
        ] {
            let l = SeparableLoss::new(kind, 3.0, vec![1.0]).unwrap();
            for k in -400..400 {
                let z = k as f64 / 40.0;
                assert!(l.row_curvature(0, z) <= l.curvature_bound() + 1e-12);
            }
        }
    }

    #[test]
    fn derivatives_match_differences() {
        for kind in [
            LossKind::Squared,
            LossKind::SquaredHinge,
            LossKind::Biweight,
        ] {
            let l = one(kind, -1.0);
            for &z in &[-2.3, -0.4, 0.7, 1.9] {
                let h = 1e-6;
                let fd = (l.row_value(0, z + h) - l.row_value(0, z - h)) / (2.0 * h);
                assert!((fd - l.row_grad(0, z)).abs() < 1e-6, "{kind:?} grad at {z}");
                let fd2 = (l.row_grad(0, z + h) - l.row_grad(0, z - h)) / (2.0 * h);
                assert!(
                    (fd2 - l.row_curvature(0, z)).abs() < 1e-5,
                    "{kind:?} curv at {z}"
                );
            }
        }
    }

    #[test]
    fn row_change_matches_difference() {
        for kind in [
            LossKind::Squared,
            LossKind::SquaredHinge,
            LossKind::Biweight,
        ] {
            let l = one(kind, 1.0);
            for &(z, h) in &[(0.3, 0.2), (-1.0, 2.5), (0.9, 0.2), (2.0, -0.5)] {
                let direct = l.row_value(0, z + h) - l.row_value(0, z);
                assert!(
                    (l.row_change(0, z, h) - direct).abs() < 1e-14,
                    "{kind:?} {z} {h}"
                );
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SeparableLoss::new(LossKind::Squared, 0.0, vec![1.0]).is_err());
        assert!(SeparableLoss::new(LossKind::SquaredHinge, 1.0, vec![0.5]).is_err());
        let l = one(LossKind::Squared, 0.0);
        assert!(l.eval(&[f64::NAN]).is_err());
    }
}
