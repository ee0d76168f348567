//! Named benchmark problems: initial data, exact solutions and defaults.

use crate::error::{Error, Result};
use crate::flux::FluxModel;
use crate::math::{cos, cosh, sech, sqrt};

/// A benchmark problem with its customary discretization defaults.
#[derive(Debug, Clone, Copy)]
pub struct Scenario {
    pub name: &'static str,
    pub domain: (f64, f64),
    pub flux: FluxModel,
    pub epsilon: f64,
    pub t0: f64,
    pub t_final: f64,
    pub num_cells: usize,
    pub degree: usize,
    pub scheme: &'static str,
    pub cfl: f64,
    initial: fn(f64) -> f64,
    exact: Option<fn(f64, f64) -> f64>,
}

pub const SCENARIO_NAMES: [&str; 4] = ["single_soliton", "two_soliton", "three_soliton", "zabusky"];

fn single_soliton_exact(t: f64, x: f64) -> f64 {
    let s = sech(x - 4.0 * t);
    2.0 * s * s
}

fn two_soliton_exact(t: f64, x: f64) -> f64 {
    let num = 3.0 + 4.0 * cosh(2.0 * x - 8.0 * t) + cosh(4.0 * x - 64.0 * t);
    let den = 3.0 * cosh(x - 28.0 * t) + cosh(3.0 * x - 36.0 * t);
    12.0 * num / (den * den)
}

fn three_soliton_initial(x: f64) -> f64 {
    let a = sech(sqrt(2.0) * x);
    let b = sech(x - 7.0);
    let c = sech((x - 15.0) / sqrt(2.0));
    4.0 * a * a + 2.0 * b * b + c * c
}

fn zabusky_initial(x: f64) -> f64 {
    cos(core::f64::consts::PI * x)
}

impl Scenario {
    pub fn get(name: &str) -> Result<Self> {
        let s = match name.trim() {
            "single_soliton" => Self {
                name: "single_soliton",
                domain: (-10.0, 10.0),
                flux: FluxModel::kdv6(),
                epsilon: 1.0,
                t0: 0.0,
                t_final: 0.5,
                num_cells: 512,
                degree: 2,
                scheme: "imex33",
                cfl: 0.25,
                initial: |x| single_soliton_exact(0.0, x),
                exact: Some(single_soliton_exact),
            },
            "two_soliton" => Self {
                name: "two_soliton",
                domain: (-10.0, 20.0),
                flux: FluxModel::kdv6(),
                epsilon: 1.0,
                t0: 0.0,
                t_final: 0.5,
                num_cells: 512,
                degree: 2,
                scheme: "imex33",
                cfl: 0.25,
                initial: |x| two_soliton_exact(0.0, x),
                exact: Some(two_soliton_exact),
            },
            "three_soliton" => Self {
                name: "three_soliton",
                domain: (-5.0, 45.0),
                flux: FluxModel::kdv6(),
                epsilon: 1.0,
                t0: 0.0,
                t_final: 5.0,
                num_cells: 1024,
                degree: 1,
                scheme: "imex33",
                cfl: 0.25,
                initial: three_soliton_initial,
                exact: None,
            },
            "zabusky" => Self {
                name: "zabusky",
                domain: (0.0, 2.0),
                flux: FluxModel::burgers(),
                epsilon: 0.022 * 0.022,
                t0: 0.0,
                t_final: 3.6 / core::f64::consts::PI,
                num_cells: 1024,
                degree: 1,
                scheme: "imex33",
                cfl: 0.25,
                initial: zabusky_initial,
                exact: None,
            },
            other => return Err(Error::UnknownName(other.into())),
        };
        Ok(s)
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Exact solution, when one is known.
    pub fn exact(&self, t: f64, x: f64) -> Option<f64> {
        self.exact.map(|f| f(t, x))
    }

    /// Initial data at time `t0`: the exact solution there if known,
    /// otherwise the stated profile.
    pub fn initial_value(&self, t0: f64, x: f64) -> f64 {
        match self.exact {
            Some(f) => f(t0, x),
            None => (self.initial)(x),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stated_point_values() {
        let s = Scenario::get("single_soliton").unwrap();
        assert_eq!(s.exact(0.0, 0.0), Some(2.0));
        let two = Scenario::get("two_soliton").unwrap();
        assert!((two.exact(0.0, 0.0).unwrap() - 6.0).abs() < 1e-14);
        let z = Scenario::get("zabusky").unwrap();
        assert!(z.initial_value(0.0, 0.5).abs() < 1e-15);
        assert!((z.epsilon - 4.84e-4).abs() < 1e-18);
        assert!(!z.has_exact());
    }

    #[test]
    fn two_soliton_starts_as_single_profile() {
        // At t = 0 the closed form reduces to 6 sech²(x).
        let two = Scenario::get("two_soliton").unwrap();
        for k in -40..=40 {
            let x = k as f64 * 0.25;
            let s = sech(x);
            let want = 6.0 * s * s;
            assert!(
                (two.initial_value(0.0, x) - want).abs() < 1e-13 * want.max(1.0),
                "{x}"
            );
        }
    }

    #[test]
    fn exact_solutions_satisfy_the_pde() {
        // Richardson-extrapolated centered differences of u_t + (3u²)_x + u_xxx.
        fn residual(u: &dyn Fn(f64, f64) -> f64, t: f64, x: f64, h: f64) -> (f64, f64) {
            // Time scales are up to 16x faster than space scales.
            let ht = h / 16.0;
            let ut = (u(t + ht, x) - u(t - ht, x)) / (2.0 * ht);
            let f = |x: f64| 3.0 * u(t, x) * u(t, x);
            let fx = (f(x + h) - f(x - h)) / (2.0 * h);
            let uxxx = (u(t, x + 2.0 * h) - 2.0 * u(t, x + h) + 2.0 * u(t, x - h)
                - u(t, x - 2.0 * h))
                / (2.0 * h * h * h);
            (ut + fx + uxxx, ut.abs() + fx.abs() + uxxx.abs())
        }
        for name in ["single_soliton", "two_soliton"] {
            let s = Scenario::get(name).unwrap();
            let u = |t: f64, x: f64| s.exact(t, x).unwrap();
            for &(t, x) in &[(0.0, 0.3), (0.1, -1.2), (0.25, 2.0), (-0.3, 0.7)] {
                let (r1, scale) = residual(&u, t, x, 4e-3);
                let (r2, _) = residual(&u, t, x, 2e-3);
                let r = (4.0 * r2 - r1) / 3.0;
                assert!(r.abs() < 1e-6 * (scale + 1.0), "{name} at ({t}, {x}): {r}");
            }
        }
    }

    #[test]
    fn unknown_name_is_rejected() {
        assert_eq!(
            Scenario::get("four_soliton").unwrap_err(),
            Error::UnknownName("four_soliton".into())
        );
        for n in SCENARIO_NAMES {
            assert_eq!(Scenario::get(n).unwrap().name, n);
        }
    }
}
