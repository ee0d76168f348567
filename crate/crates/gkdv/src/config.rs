//! Plain `key = value` run configuration.
//!
//! Every file names a scenario first; the scenario supplies defaults and
//! the remaining keys override them. [`RunConfig::emit`] writes every key,
//! so `parse(emit(c)) == c`.

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use gkdv_core::dispersive::MassMode;
use gkdv_core::driver::{HyperbolicMode, SolverConfig, DEFAULT_TAU_RUNGS};
use gkdv_core::hyperbolic::HighOrderViscosityPolicy;
use gkdv_core::scenario::Scenario;
use gkdv_core::study::RunSpec;
use gkdv_core::tableau::Registry;
use gkdv_core::FluxModel;

/// High-order graph viscosity: none, or `ψ d^L` with a uniform `ψ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PsiPolicy {
    Zero,
    Uniform(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scenario: String,
    pub domain: (f64, f64),
    pub num_cells: usize,
    pub degree: usize,
    pub flux: FluxModel,
    pub epsilon: f64,
    /// `None` means `1 / (b − a)`.
    pub c_stab: Option<f64>,
    pub scheme: String,
    pub cfl: f64,
    pub t0: f64,
    pub t_final: f64,
    pub snapshots: Vec<f64>,
    pub mass_mode: MassMode,
    pub output_dir: PathBuf,
    pub hyperbolic: HyperbolicMode,
    pub psi: PsiPolicy,
    pub tau_max: Option<f64>,
    pub efficient: bool,
    pub tau_rungs: Option<u32>,
    pub relax_bounds: bool,
    /// Extra tableau registry merged over the bundled one.
    pub registry: Option<PathBuf>,
}

/// Keys in emission order.
pub const KEYS: [&str; 21] = [
    "scenario",
    "domain",
    "num_cells",
    "degree",
    "flux",
    "epsilon",
    "c_stab",
    "scheme",
    "cfl",
    "t0",
    "t_final",
    "snapshots",
    "mass_mode",
    "output_dir",
    "limiter",
    "psi",
    "tau_max",
    "efficient",
    "tau_rungs",
    "relax_bounds",
    "registry",
];

impl RunConfig {
    pub fn for_scenario(name: &str) -> Result<Self> {
        let s = Scenario::get(name)?;
        Ok(Self {
            scenario: s.name.to_string(),
            domain: s.domain,
            num_cells: s.num_cells,
            degree: s.degree,
            flux: s.flux,
            epsilon: s.epsilon,
            c_stab: None,
            scheme: s.scheme.to_string(),
            cfl: s.cfl,
            t0: s.t0,
            t_final: s.t_final,
            snapshots: Vec::new(),
            mass_mode: MassMode::Consistent,
            output_dir: PathBuf::from("out"),
            hyperbolic: HyperbolicMode::Limited,
            psi: PsiPolicy::Zero,
            tau_max: None,
            efficient: false,
            tau_rungs: Some(DEFAULT_TAU_RUNGS),
            relax_bounds: true,
            registry: None,
        })
    }

    /// Parses a configuration file. `scenario` must be present.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", lineno + 1))?;
            pairs.push((lineno + 1, k.trim().to_string(), v.trim().to_string()));
        }
        let scenario = pairs
            .iter()
            .find(|(_, k, _)| k == "scenario")
            .map(|(_, _, v)| v.clone())
            .ok_or_else(|| anyhow!("missing `scenario` key"))?;
        let mut cfg = Self::for_scenario(&scenario)?;
        for (lineno, k, v) in pairs {
            if k != "scenario" {
                cfg.set(&k, &v).with_context(|| format!("line {lineno}"))?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key {
            "scenario" => {
                if v != self.scenario {
                    bail!("`scenario` cannot be overridden; start from a config for `{v}`");
                }
            }
            "domain" => {
                let (a, b) = v
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .split_once(',')
                    .ok_or_else(|| anyhow!("domain must be `a, b`"))?;
                self.domain = (num(a)?, num(b)?);
            }
            "num_cells" => self.num_cells = v.parse().context("num_cells")?,
            "degree" => self.degree = v.parse().context("degree")?,
            "flux" => self.flux = v.parse()?,
            "epsilon" => self.epsilon = num(v)?,
            "c_stab" => self.c_stab = opt(v, num)?,
            "scheme" => self.scheme = v.to_string(),
            "cfl" => self.cfl = num(v)?,
            "t0" => self.t0 = num(v)?,
            "t_final" => self.t_final = num(v)?,
            "snapshots" => {
                self.snapshots = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(num)
                    .collect::<Result<_>>()?;
            }
            "mass_mode" => self.mass_mode = MassMode::parse(v)?,
            "output_dir" => self.output_dir = PathBuf::from(v),
            "limiter" => {
                self.hyperbolic = match v {
                    "on" => HyperbolicMode::Limited,
                    "off" => HyperbolicMode::HighOrder,
                    other => HyperbolicMode::parse(other)
                        .map_err(|_| anyhow!("limiter must be on, off or low_order"))?,
                }
            }
            "psi" => {
                self.psi = match v {
                    "zero" => PsiPolicy::Zero,
                    other => PsiPolicy::Uniform(num(other)?),
                }
            }
            "tau_max" => self.tau_max = opt(v, num)?,
            "efficient" => self.efficient = flag(v)?,
            "tau_rungs" => self.tau_rungs = opt(v, |s| s.parse().context("tau_rungs"))?,
            "relax_bounds" => self.relax_bounds = flag(v)?,
            "registry" => self.registry = opt(v, |s| Ok(PathBuf::from(s)))?,
            other => bail!("unknown key `{other}`"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.domain.0,
            self.domain.1,
            self.epsilon,
            self.cfl,
            self.t0,
            self.t_final,
        ];
        if finite.iter().any(|v| !v.is_finite()) || self.snapshots.iter().any(|v| !v.is_finite()) {
            bail!("physical parameters must be finite");
        }
        if !(self.domain.1 > self.domain.0) {
            bail!("domain must satisfy a < b");
        }
        if !(self.t_final > self.t0) {
            bail!("t_final must exceed t0");
        }
        if let PsiPolicy::Uniform(p) = self.psi {
            if !(0.0..=1.0).contains(&p) {
                bail!("psi must lie in [0, 1]");
            }
        }
        self.solver_config()?.validate()?;
        Ok(())
    }

    /// Writes every key; the result parses back to `self`.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let o = |v: Option<String>| v.unwrap_or_else(|| "none".into());
        for key in KEYS {
            let value = match key {
                "scenario" => self.scenario.clone(),
                "domain" => format!("{:?}, {:?}", self.domain.0, self.domain.1),
                "num_cells" => self.num_cells.to_string(),
                "degree" => self.degree.to_string(),
                "flux" => self.flux.to_string(),
                "epsilon" => format!("{:?}", self.epsilon),
                "c_stab" => o(self.c_stab.map(|v| format!("{v:?}"))),
                "scheme" => self.scheme.clone(),
                "cfl" => format!("{:?}", self.cfl),
                "t0" => format!("{:?}", self.t0),
                "t_final" => format!("{:?}", self.t_final),
                "snapshots" => self
                    .snapshots
                    .iter()
                    .map(|v| format!("{v:?}"))
                    .collect::<Vec<_>>()
                    .join(", "),
                "mass_mode" => self.mass_mode.name().to_string(),
                "output_dir" => self.output_dir.display().to_string(),
                "limiter" => match self.hyperbolic {
                    HyperbolicMode::Limited => "on".into(),
                    HyperbolicMode::HighOrder => "off".into(),
                    HyperbolicMode::LowOrder => "low_order".into(),
                },
                "psi" => match self.psi {
                    PsiPolicy::Zero => "zero".into(),
                    PsiPolicy::Uniform(p) => format!("{p:?}"),
                },
                "tau_max" => o(self.tau_max.map(|v| format!("{v:?}"))),
                "efficient" => self.efficient.to_string(),
                "tau_rungs" => o(self.tau_rungs.map(|v| v.to_string())),
                "relax_bounds" => self.relax_bounds.to_string(),
                "registry" => o(self.registry.as_ref().map(|p| p.display().to_string())),
                _ => unreachable!(),
            };
            let _ = writeln!(s, "{key} = {value}");
        }
        s
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let length = self.domain.1 - self.domain.0;
        let mut c = SolverConfig::new(self.flux, self.epsilon, length);
        if let Some(cs) = self.c_stab {
            c.c_stab = cs;
        }
        c.mass_mode = self.mass_mode;
        c.hyperbolic = self.hyperbolic;
        c.cfl = self.cfl;
        c.tau_max = self.tau_max;
        c.efficient = self.efficient;
        c.tau_rungs = self.tau_rungs;
        c.relax_bounds = self.relax_bounds;
        c.viscosity = match self.psi {
            PsiPolicy::Zero => HighOrderViscosityPolicy::Zero,
            PsiPolicy::Uniform(p) => {
                let dofs = self.num_cells * self.degree;
                HighOrderViscosityPolicy::scaled(vec![p; dofs])?
            }
        };
        Ok(c)
    }

    /// Bundled tableaux, extended by the configured registry file.
    pub fn registry(&self) -> Result<Registry> {
        let mut reg = Registry::bundled();
        if let Some(path) = &self.registry {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading tableau registry {}", path.display()))?;
            reg.extend_from_text(&text)?;
        }
        Ok(reg)
    }

    pub fn run_spec(&self) -> Result<RunSpec> {
        let scenario = Scenario::get(&self.scenario)?;
        let pair = self.registry()?.get(&self.scheme)?.clone();
        let mut spec = RunSpec::from_scenario(scenario, pair);
        spec.domain = self.domain;
        spec.num_cells = self.num_cells;
        spec.degree = self.degree;
        spec.config = self.solver_config()?;
        spec.t0 = self.t0;
        spec.t_final = self.t_final;
        Ok(spec)
    }
}

fn num(s: &str) -> Result<f64> {
    let v = s.trim();
    gkdv_core::tableau::parse_number(v).ok_or_else(|| anyhow!("`{v}` is not a number"))
}

fn opt<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Option<T>> {
    if s == "none" {
        Ok(None)
    } else {
        f(s).map(Some)
    }
}

fn flag(s: &str) -> Result<bool> {
    match s {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        other => bail!("`{other}` is not a boolean"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_scenario_round_trips() {
        for name in gkdv_core::scenario::SCENARIO_NAMES {
            let c = RunConfig::for_scenario(name).unwrap();
            assert_eq!(RunConfig::parse(&c.emit()).unwrap(), c);
        }
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# sweep\nscenario = single_soliton\nnum_cells = 64 # coarse\nlimiter = low_order\nsnapshots = 0.1, 0.2\npsi = 0.5\nc_stab = 0.25\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.num_cells, 64);
        assert_eq!(c.hyperbolic, HyperbolicMode::LowOrder);
        assert_eq!(c.snapshots, vec![0.1, 0.2]);
        assert_eq!(c.psi, PsiPolicy::Uniform(0.5));
        assert_eq!(c.solver_config().unwrap().c_stab, 0.25);
        assert_eq!(RunConfig::parse(&c.emit()).unwrap(), c);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(RunConfig::parse("num_cells = 3").is_err());
        assert!(RunConfig::parse("scenario = nope").is_err());
        assert!(RunConfig::parse("scenario = zabusky\ncolour = red").is_err());
        assert!(RunConfig::parse("scenario = zabusky\nt_final = 0").is_err());
        assert!(RunConfig::parse("scenario = zabusky\nepsilon = inf").is_err());
        assert!(RunConfig::parse("scenario = zabusky\npsi = 2").is_err());
        assert!(RunConfig::parse("scenario = zabusky\ncfl = 1.5").is_err());
        assert!(RunConfig::parse("scenario = zabusky\nnum_cells").is_err());
    }

    #[test]
    fn default_c_stab_is_inverse_length() {
        let mut c = RunConfig::for_scenario("two_soliton").unwrap();
        assert_eq!(c.solver_config().unwrap().c_stab, 1.0 / 30.0);
        c.set("domain", "(-15, 15)").unwrap();
        assert_eq!(c.solver_config().unwrap().c_stab, 1.0 / 30.0);
        c.set("domain", "-20, 20").unwrap();
        assert_eq!(c.solver_config().unwrap().c_stab, 1.0 / 40.0);
    }
}
