//! Scalar hyperbolic fluxes `f(u)` and Riemann wave-speed bounds.

use alloc::format;
use alloc::string::ToString;
use core::fmt;

use crate::error::{Error, Result};
use crate::math::powi;

/// Shape of `f`, which decides how [`FluxModel::lambda_max`] bounds wave speeds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convexity {
    Convex,
    Concave,
    General,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    /// `3u²`, the conservative form of `6u ∂x u`.
    Kdv6,
    /// `u²/2`.
    Burgers,
    /// `a·u`.
    Linear(f64),
    /// `u^p / p`.
    Poly(i32),
    /// `u + u^p`.
    LinearPlusPoly(i32),
}

/// Number of samples of `|f'|` used for fluxes without a convexity guarantee.
const ENVELOPE_SAMPLES: usize = 64;
/// Safety factor applied to the sampled envelope.
const ENVELOPE_INFLATION: f64 = 1.1;

/// A built-in scalar flux together with its derivative and the entropy flux
/// `q` paired with `η(u) = u²/2` (`q' = u f'`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxModel {
    kind: Kind,
}

impl FluxModel {
    pub fn kdv6() -> Self {
        Self { kind: Kind::Kdv6 }
    }

    pub fn burgers() -> Self {
        Self {
            kind: Kind::Burgers,
        }
    }

    pub fn linear(a: f64) -> Result<Self> {
        if !a.is_finite() {
            return Err(Error::InvalidInput(format!(
                "linear flux speed {a} is not finite"
            )));
        }
        Ok(Self {
            kind: Kind::Linear(a),
        })
    }

    /// `u^p / p` for integer `p ≥ 1`.
    pub fn poly(p: i32) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            kind: Kind::Poly(p),
        })
    }

    /// `u + u^p` for integer `p ≥ 1`.
    pub fn linear_plus_poly(p: i32) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self {
            kind: Kind::LinearPlusPoly(p),
        })
    }

    /// Looks a flux up by name: `kdv6`, `burgers`, `linear` (speed `a`),
    /// `poly_p` and `linear_plus_poly` (exponent `p`).
    pub fn builtin(name: &str, params: &[f64]) -> Result<Self> {
        let want = |n: usize| -> Result<()> {
            if params.len() == n {
                Ok(())
            } else {
                Err(Error::InvalidInput(format!(
                    "flux `{name}` takes {n} parameter(s), got {}",
                    params.len()
                )))
            }
        };
        let exponent = || -> Result<i32> {
            let p = params[0];
            if libm::trunc(p) != p || !(1.0..=64.0).contains(&p) {
                return Err(Error::InvalidInput(format!(
                    "flux exponent {p} is not an integer in 1..=64"
                )));
            }
            Ok(p as i32)
        };
        match name {
            "kdv6" => want(0).map(|_| Self::kdv6()),
            "burgers" => want(0).map(|_| Self::burgers()),
            "linear" => {
                want(1)?;
                Self::linear(params[0])
            }
            "poly_p" => {
                want(1)?;
                Self::poly(exponent()?)
            }
            "linear_plus_poly" => {
                want(1)?;
                Self::linear_plus_poly(exponent()?)
            }
            _ => Err(Error::UnknownName(name.to_string())),
        }
    }

    /// Parses the textual form produced by `Display`, e.g. `kdv6` or `poly_p(3)`.
    pub fn parse(spec: &str) -> Result<Self> {
        let spec = spec.trim();
        match spec.split_once('(') {
            None => Self::builtin(spec, &[]),
            Some((name, rest)) => {
                let inner = rest.strip_suffix(')').ok_or_else(|| {
                    Error::InvalidInput(format!("unbalanced parentheses in `{spec}`"))
                })?;
                let value: f64 = inner
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad flux parameter `{inner}`")))?;
                Self::builtin(name.trim(), &[value])
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            Kind::Kdv6 => "kdv6",
            Kind::Burgers => "burgers",
            Kind::Linear(_) => "linear",
            Kind::Poly(_) => "poly_p",
            Kind::LinearPlusPoly(_) => "linear_plus_poly",
        }
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Kdv6 => 3.0 * u * u,
            Kind::Burgers => 0.5 * u * u,
            Kind::Linear(a) => a * u,
            Kind::Poly(p) => powi(u, p) / p as f64,
            Kind::LinearPlusPoly(p) => u + powi(u, p),
        }
    }

    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Kdv6 => 6.0 * u,
            Kind::Burgers => u,
            Kind::Linear(a) => a,
            Kind::Poly(p) => powi(u, p - 1),
            Kind::LinearPlusPoly(p) => 1.0 + p as f64 * powi(u, p - 1),
        }
    }

    /// Entropy flux for `η(u) = u²/2`, normalized by `q(0) = 0`.
    #[inline]
    pub fn entropy_flux(&self, u: f64) -> f64 {
        match self.kind {
            Kind::Kdv6 => 2.0 * u * u * u,
            Kind::Burgers => u * u * u / 3.0,
            Kind::Linear(a) => 0.5 * a * u * u,
            Kind::Poly(p) => powi(u, p + 1) / (p + 1) as f64,
            Kind::LinearPlusPoly(p) => 0.5 * u * u + p as f64 * powi(u, p + 1) / (p + 1) as f64,
        }
    }

    pub fn convexity(&self) -> Convexity {
        match self.kind {
            Kind::Kdv6 | Kind::Burgers | Kind::Linear(_) => Convexity::Convex,
            Kind::Poly(p) | Kind::LinearPlusPoly(p) if p <= 2 || p % 2 == 0 => Convexity::Convex,
            _ => Convexity::General,
        }
    }

    /// Global bound on `|f'|` when one exists.
    pub fn lipschitz_hint(&self) -> Option<f64> {
        match self.kind {
            Kind::Linear(a) => Some(a.abs()),
            Kind::Poly(1) => Some(1.0),
            Kind::LinearPlusPoly(1) => Some(2.0),
            _ => None,
        }
    }

    /// Upper bound on the largest wave speed of the Riemann problem with
    /// left state `ul` and right state `ur`.
    pub fn lambda_max(&self, ul: f64, ur: f64) -> Result<f64> {
        let lambda = match self.convexity() {
            Convexity::Convex | Convexity::Concave => {
                let mut l = self.deriv(ul).abs().max(self.deriv(ur).abs());
                if ul != ur {
                    let s = (self.eval(ur) - self.eval(ul)) / (ur - ul);
                    l = l.max(s.abs());
                }
                l
            }
            Convexity::General => {
                let (lo, hi) = if ul <= ur { (ul, ur) } else { (ur, ul) };
                let mut l: f64 = 0.0;
                for k in 0..ENVELOPE_SAMPLES {
                    let x = lo + (hi - lo) * k as f64 / (ENVELOPE_SAMPLES - 1) as f64;
                    l = l.max(self.deriv(x).abs());
                }
                l * ENVELOPE_INFLATION
            }
        };
        if lambda.is_finite() {
            Ok(lambda)
        } else {
            Err(Error::FluxDefect(format!(
                "{self}: wave speed is {lambda} for states ({ul}, {ur})"
            )))
        }
    }
}

fn check_exponent(p: i32) -> Result<()> {
    if (1..=64).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "flux exponent {p} not in 1..=64"
        )))
    }
}

impl fmt::Display for FluxModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Kind::Kdv6 | Kind::Burgers => f.write_str(self.name()),
            Kind::Linear(a) => write!(f, "linear({a})"),
            Kind::Poly(p) | Kind::LinearPlusPoly(p) => write!(f, "{}({p})", self.name()),
        }
    }
}

impl core::str::FromStr for FluxModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

/// Names accepted by [`FluxModel::builtin`].
pub const BUILTIN_NAMES: [&str; 5] = ["kdv6", "burgers", "linear", "poly_p", "linear_plus_poly"];

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn all() -> [FluxModel; 7] {
        [
            FluxModel::kdv6(),
            FluxModel::burgers(),
            FluxModel::linear(-1.5).unwrap(),
            FluxModel::poly(3).unwrap(),
            FluxModel::poly(4).unwrap(),
            FluxModel::linear_plus_poly(2).unwrap(),
            FluxModel::linear_plus_poly(3).unwrap(),
        ]
    }

    #[test]
    fn builtin_values() {
        let k = FluxModel::builtin("kdv6", &[]).unwrap();
        assert_eq!((k.eval(2.0), k.deriv(2.0)), (12.0, 12.0));
        let b = FluxModel::builtin("burgers", &[]).unwrap();
        assert_eq!((b.eval(1.0), b.deriv(1.0)), (0.5, 1.0));
        let p = FluxModel::builtin("poly_p", &[3.0]).unwrap();
        assert!((p.eval(2.0) - 8.0 / 3.0).abs() < 1e-15);
        assert_eq!(p.deriv(2.0), 4.0);
    }

    #[test]
    fn unknown_and_malformed_names() {
        assert_eq!(
            FluxModel::builtin("euler", &[]),
            Err(Error::UnknownName("euler".into()))
        );
        assert!(FluxModel::builtin("linear", &[]).is_err());
        assert!(FluxModel::builtin("poly_p", &[2.5]).is_err());
        assert!(FluxModel::parse("poly_p(3").is_err());
    }

    #[test]
    fn display_parse_round_trip() {
        for f in all() {
            let text = alloc::format!("{f}");
            assert_eq!(FluxModel::parse(&text).unwrap(), f, "{text}");
        }
    }

    #[test]
    fn riemann_examples() {
        let k = FluxModel::kdv6();
        assert_eq!(k.lambda_max(0.0, 2.0).unwrap(), 12.0);
        assert_eq!(k.lambda_max(1.5, 1.5).unwrap(), 9.0);
        assert_eq!(FluxModel::burgers().lambda_max(2.0, -2.0).unwrap(), 2.0);
    }

    #[test]
    fn non_finite_speed_is_a_defect() {
        let p = FluxModel::poly(9).unwrap();
        assert!(matches!(
            p.lambda_max(1e300, 0.0),
            Err(Error::FluxDefect(_))
        ));
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for f in all() {
            for &u in &[-1.3, -0.2, 0.0, 0.7, 1.9] {
                let h = 1e-6;
                let fd = (f.eval(u + h) - f.eval(u - h)) / (2.0 * h);
                assert!(
                    (fd - f.deriv(u)).abs() < 1e-6 * (1.0 + fd.abs()),
                    "{f} at {u}"
                );
                let qd = (f.entropy_flux(u + h) - f.entropy_flux(u - h)) / (2.0 * h);
                assert!(
                    (qd - u * f.deriv(u)).abs() < 1e-6 * (1.0 + qd.abs()),
                    "{f} q' at {u}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn lambda_is_symmetric_and_dominates_endpoints(ul in -3.0..3.0f64, ur in -3.0..3.0f64) {
            for f in all() {
                let l = f.lambda_max(ul, ur).unwrap();
                prop_assert_eq!(l, f.lambda_max(ur, ul).unwrap());
                prop_assert!(l >= f.deriv(ul).abs() && l >= f.deriv(ur).abs());
            }
        }

        #[test]
        fn convex_bound_dominates_dense_samples(ul in -3.0..3.0f64, ur in -3.0..3.0f64) {
            for f in all() {
                if f.convexity() != Convexity::Convex {
                    continue;
                }
                let l = f.lambda_max(ul, ur).unwrap();
                for k in 0..=1000 {
                    let u = ul + (ur - ul) * k as f64 / 1000.0;
                    prop_assert!(f.deriv(u).abs() <= l * (1.0 + 1e-14));
                }
                // spot check of the convexity flag
                let mut prev = f64::NEG_INFINITY;
                for k in 0..=50 {
                    let d = f.deriv(-3.0 + 6.0 * k as f64 / 50.0);
                    prop_assert!(d >= prev - 1e-12);
                    prev = d;
                }
            }
        }
    }
}
