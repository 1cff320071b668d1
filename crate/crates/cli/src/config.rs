//! Flat `key = value` run configuration.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use pflow::exactsol::beta_critical;
use pflow::plaplacian::{Method, PlapConfig};
use pflow::steppers::{Model, StepConfig};
use pflow::transport::Scheme;
use pflow::PExponent;
use serde::Serialize;

use crate::error::CliError;

/// Key reference printed by `pflow run --help`.
pub const KEYS_HELP: &str = "\
Config file: one `key = value` per line, `#` starts a comment.

  model            required: euler | euler-damped | pns-gamma2 | pns-momentum |
                   diffusion | geodesic | poisson
  p                required: exponent, > 1
  grid.nx          required: points in x, >= 8
  grid.ny          default grid.nx
  grid.Lx          default 2π
  grid.Ly          default grid.Lx
  gamma            default p (2 for pns-gamma2); must lie in (1, p + 1)
  nu               default 0
  eps_mollifier    default 0
  delta_reg        default 1e-8
  tol              default 1e-10 (elliptic relative residual)
  cfl              default 0.5, in (0, 0.9]
  t_end            default 1, > 0
  output_every     default 0.1, > 0
  scheme           default semi-lagrangian | upwind3
  initial          default gaussian-vortex | radial-steady | taylor-green |
                   random-seeded(SEED) | from-file(PATH)
  out_dir          default out
  track_curve      default true: circulation on a circle of radius
                   0.2·min(Lx, Ly) about the centre
  diffusion.m      default 1
  diffusion.d      default 1 (1 or 2)
  diffusion.sigma  default 0.05: width of the unit-mass initial Gaussian
  geodesic.n       default 16: particles per side of the unit square
  geodesic.vx      default 1
  geodesic.vy      default 0
  geodesic.shear   default 0: adds shear·(y - 1/2) to vx
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Euler,
    EulerDamped,
    PnsGamma2,
    PnsMomentum,
    Diffusion,
    Geodesic,
    Poisson,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Euler,
        ModelKind::EulerDamped,
        ModelKind::PnsGamma2,
        ModelKind::PnsMomentum,
        ModelKind::Diffusion,
        ModelKind::Geodesic,
        ModelKind::Poisson,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Euler => "euler",
            ModelKind::EulerDamped => "euler-damped",
            ModelKind::PnsGamma2 => "pns-gamma2",
            ModelKind::PnsMomentum => "pns-momentum",
            ModelKind::Diffusion => "diffusion",
            ModelKind::Geodesic => "geodesic",
            ModelKind::Poisson => "poisson",
        }
    }

    /// Stepper model of the flow families.
    pub fn flow_model(self) -> Option<Model> {
        match self {
            ModelKind::Euler => Some(Model::Inviscid),
            ModelKind::EulerDamped => Some(Model::Damped),
            ModelKind::PnsGamma2 => Some(Model::Gamma2),
            ModelKind::PnsMomentum => Some(Model::MomentumGammaP),
            _ => None,
        }
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = ModelKind::ALL.iter().map(|m| m.name()).collect();
                format!("unknown model `{s}` (expected one of {})", names.join(", "))
            })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialSpec {
    GaussianVortex,
    RadialSteady,
    TaylorGreen,
    RandomSeeded(u64),
    FromFile(String),
}

impl FromStr for InitialSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaussian-vortex" => return Ok(InitialSpec::GaussianVortex),
            "radial-steady" => return Ok(InitialSpec::RadialSteady),
            "taylor-green" => return Ok(InitialSpec::TaylorGreen),
            _ => {}
        }
        let call = |name: &str| {
            s.strip_prefix(name)
                .and_then(|r| r.strip_prefix('('))
                .and_then(|r| r.strip_suffix(')'))
        };
        if let Some(arg) = call("random-seeded") {
            return arg
                .trim()
                .parse()
                .map(InitialSpec::RandomSeeded)
                .map_err(|_| {
                    format!("random-seeded expects an unsigned integer seed, got `{arg}`")
                });
        }
        if let Some(arg) = call("from-file") {
            let path = arg.trim();
            if path.is_empty() {
                return Err("from-file expects a path".into());
            }
            return Ok(InitialSpec::FromFile(path.to_string()));
        }
        Err(format!(
            "unknown initial condition `{s}` (expected gaussian-vortex, radial-steady, taylor-green, \
             random-seeded(SEED) or from-file(PATH))"
        ))
    }
}

impl fmt::Display for InitialSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialSpec::GaussianVortex => f.write_str("gaussian-vortex"),
            InitialSpec::RadialSteady => f.write_str("radial-steady"),
            InitialSpec::TaylorGreen => f.write_str("taylor-green"),
            InitialSpec::RandomSeeded(seed) => write!(f, "random-seeded({seed})"),
            InitialSpec::FromFile(path) => write!(f, "from-file({path})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Ly")]
    pub ly: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffusionSpec {
    pub m: f64,
    pub d: u32,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeodesicSpec {
    pub n: usize,
    pub vx: f64,
    pub vy: f64,
    pub shear: f64,
}

/// A fully resolved and validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub model: ModelKind,
    pub p: f64,
    pub gamma: f64,
    pub nu: f64,
    pub eps_mollifier: f64,
    pub delta_reg: f64,
    pub tol: f64,
    pub grid: GridSpec,
    pub cfl: f64,
    pub t_end: f64,
    pub output_every: f64,
    #[serde(serialize_with = "display")]
    pub scheme: Scheme,
    #[serde(serialize_with = "display")]
    pub initial: InitialSpec,
    pub out_dir: String,
    pub track_curve: bool,
    pub diffusion: DiffusionSpec,
    pub geodesic: GeodesicSpec,
}

fn display<T: fmt::Display, S: serde::Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

const KEYS: [&str; 25] = [
    "model",
    "p",
    "gamma",
    "nu",
    "eps_mollifier",
    "delta_reg",
    "tol",
    "grid.nx",
    "grid.ny",
    "grid.Lx",
    "grid.Ly",
    "cfl",
    "t_end",
    "output_every",
    "scheme",
    "initial",
    "out_dir",
    "track_curve",
    "diffusion.m",
    "diffusion.d",
    "diffusion.sigma",
    "geodesic.n",
    "geodesic.vx",
    "geodesic.vy",
    "geodesic.shear",
];

/// Raw entries keyed by name, with the line each came from.
struct Entries(HashMap<&'static str, (usize, String)>);

impl Entries {
    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, CliError>
    where
        T::Err: fmt::Display,
    {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse().map(Some).map_err(|e| CliError::Parse {
                line: *line,
                message: format!("`{key}`: {e}"),
            }),
        }
    }

    fn required<T: FromStr>(&self, key: &'static str) -> Result<T, CliError>
    where
        T::Err: fmt::Display,
    {
        self.get(key)?.ok_or_else(|| invalid(key, "is required"))
    }

    fn real(&self, key: &'static str) -> Result<Option<f64>, CliError> {
        self.get::<f64>(key)
    }
}

fn invalid(key: &str, constraint: impl Into<String>) -> CliError {
    CliError::Validation {
        key: key.to_string(),
        constraint: constraint.into(),
    }
}

fn check(ok: bool, key: &str, constraint: &str) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(invalid(key, constraint))
    }
}

fn split_line(raw: &str) -> &str {
    match raw.find('#') {
        Some(i) => &raw[..i],
        None => raw,
    }
}

/// Parse and validate a config. Unknown and repeated keys are errors.
pub fn parse_config(text: &str) -> Result<SimConfig, CliError> {
    let mut entries = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = split_line(raw).trim();
        if body.is_empty() {
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            return Err(CliError::Parse {
                line,
                message: format!("expected `key = value`, got `{body}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
            return Err(CliError::Parse {
                line,
                message: format!("unknown key `{key}`"),
            });
        };
        if value.is_empty() {
            return Err(CliError::Parse {
                line,
                message: format!("`{key}` has no value"),
            });
        }
        if let Some((first, _)) = entries.get(known) {
            return Err(CliError::Parse {
                line,
                message: format!("duplicate key `{key}` (first set on line {first})"),
            });
        }
        entries.insert(known, (line, value.to_string()));
    }
    resolve(&Entries(entries))
}

fn resolve(e: &Entries) -> Result<SimConfig, CliError> {
    let model: ModelKind = e.required("model")?;
    let p: f64 = e.required("p")?;
    check(p > 1.0 && p.is_finite(), "p", "must be a finite number > 1")?;
    let nx: usize = e.required("grid.nx")?;
    let ny = e.get("grid.ny")?.unwrap_or(nx);
    let lx = e.real("grid.Lx")?.unwrap_or(std::f64::consts::TAU);
    let ly = e.real("grid.Ly")?.unwrap_or(lx);
    let default_gamma = if model == ModelKind::PnsGamma2 {
        2.0
    } else {
        p
    };
    let cfg = SimConfig {
        model,
        p,
        gamma: e.real("gamma")?.unwrap_or(default_gamma),
        nu: e.real("nu")?.unwrap_or(0.0),
        eps_mollifier: e.real("eps_mollifier")?.unwrap_or(0.0),
        delta_reg: e.real("delta_reg")?.unwrap_or(PlapConfig::default().delta),
        tol: e.real("tol")?.unwrap_or(PlapConfig::default().tol),
        grid: GridSpec { nx, ny, lx, ly },
        cfl: e.real("cfl")?.unwrap_or(0.5),
        t_end: e.real("t_end")?.unwrap_or(1.0),
        output_every: e.real("output_every")?.unwrap_or(0.1),
        scheme: e.get("scheme")?.unwrap_or_default(),
        initial: e.get("initial")?.unwrap_or(InitialSpec::GaussianVortex),
        out_dir: e.get("out_dir")?.unwrap_or_else(|| "out".to_string()),
        track_curve: e.get("track_curve")?.unwrap_or(true),
        diffusion: DiffusionSpec {
            m: e.real("diffusion.m")?.unwrap_or(1.0),
            d: e.get("diffusion.d")?.unwrap_or(1),
            sigma: e.real("diffusion.sigma")?.unwrap_or(0.05),
        },
        geodesic: GeodesicSpec {
            n: e.get("geodesic.n")?.unwrap_or(16),
            vx: e.real("geodesic.vx")?.unwrap_or(1.0),
            vy: e.real("geodesic.vy")?.unwrap_or(0.0),
            shear: e.real("geodesic.shear")?.unwrap_or(0.0),
        },
    };
    cfg.validate()?;
    Ok(cfg)
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        let p = self.p;
        check(p > 1.0 && p.is_finite(), "p", "must be a finite number > 1")?;
        check(
            self.gamma > 1.0 && self.gamma < p + 1.0,
            "gamma",
            &format!(
                "must lie in (1, p + 1) = (1, {}) for the scaling exponent to exist",
                p + 1.0
            ),
        )?;
        match self.model {
            ModelKind::PnsGamma2 => {
                check(self.gamma == 2.0, "gamma", "pns-gamma2 requires gamma = 2")?
            }
            ModelKind::PnsMomentum => {
                check(self.gamma == p, "gamma", "pns-momentum requires gamma = p")?
            }
            _ => {}
        }
        let nonneg =
            |v: f64, key: &str| check(v >= 0.0 && v.is_finite(), key, "must be finite and >= 0");
        nonneg(self.nu, "nu")?;
        nonneg(self.eps_mollifier, "eps_mollifier")?;
        nonneg(self.delta_reg, "delta_reg")?;
        check(
            self.tol > 0.0 && self.tol < 1.0,
            "tol",
            "must lie in (0, 1)",
        )?;
        check(self.grid.nx >= 8, "grid.nx", "must be >= 8")?;
        check(self.grid.ny >= 8, "grid.ny", "must be >= 8")?;
        check(
            self.grid.lx > 0.0 && self.grid.lx.is_finite(),
            "grid.Lx",
            "must be finite and > 0",
        )?;
        check(
            self.grid.ly > 0.0 && self.grid.ly.is_finite(),
            "grid.Ly",
            "must be finite and > 0",
        )?;
        check(
            self.cfl > 0.0 && self.cfl <= 0.9,
            "cfl",
            "must lie in (0, 0.9]",
        )?;
        check(
            self.t_end > 0.0 && self.t_end.is_finite(),
            "t_end",
            "must be finite and > 0",
        )?;
        check(
            self.output_every > 0.0 && self.output_every.is_finite(),
            "output_every",
            "must be finite and > 0",
        )?;
        check(!self.out_dir.is_empty(), "out_dir", "must not be empty")?;
        match self.model {
            ModelKind::Diffusion => {
                let d = self.diffusion;
                check(d.d == 1 || d.d == 2, "diffusion.d", "must be 1 or 2")?;
                check(
                    d.m > 0.0 && d.m.is_finite(),
                    "diffusion.m",
                    "must be finite and > 0",
                )?;
                check(
                    d.sigma > 0.0 && d.sigma.is_finite(),
                    "diffusion.sigma",
                    "must be finite and > 0",
                )?;
                beta_critical(p, d.m, d.d).map_err(|_| {
                    invalid(
                        "diffusion.m",
                        "m(p - 1) - 1 + p/d must be > 0 for a self-similar solution",
                    )
                })?;
            }
            ModelKind::Geodesic => {
                let g = self.geodesic;
                check(g.n >= 1, "geodesic.n", "must be >= 1")?;
                check(self.t_end <= 1.0, "t_end", "geodesic time runs over [0, 1]")?;
                for (v, key) in [
                    (g.vx, "geodesic.vx"),
                    (g.vy, "geodesic.vy"),
                    (g.shear, "geodesic.shear"),
                ] {
                    check(v.is_finite(), key, "must be finite")?;
                }
            }
            _ => {}
        }
        if let Some(model) = self.model.flow_model() {
            self.step_config_for(model)
                .map_err(|e| invalid("model", e.to_string()))?;
        }
        Ok(())
    }

    pub fn plap_config(&self) -> PlapConfig {
        PlapConfig {
            delta: self.delta_reg,
            tol: self.tol,
            max_iter: 200,
            method: Method::NewtonLS,
        }
    }

    fn step_config_for(&self, model: Model) -> pflow::Result<StepConfig> {
        let cfg = StepConfig {
            p: PExponent::new(self.p)?,
            gamma: self.gamma,
            nu: self.nu,
            eps: self.eps_mollifier,
            cfl: self.cfl,
            plap: self.plap_config(),
            scheme: self.scheme,
            model,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Stepper configuration of a flow model, `None` for the other families.
    pub fn step_config(&self) -> Option<StepConfig> {
        self.model
            .flow_model()
            .and_then(|m| self.step_config_for(m).ok())
    }

    /// Canonical text form; [`parse_config`] maps it back to `self`.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        put("model", self.model.to_string());
        put("p", format!("{:?}", self.p));
        put("gamma", format!("{:?}", self.gamma));
        put("nu", format!("{:?}", self.nu));
        put("eps_mollifier", format!("{:?}", self.eps_mollifier));
        put("delta_reg", format!("{:?}", self.delta_reg));
        put("tol", format!("{:?}", self.tol));
        put("grid.nx", self.grid.nx.to_string());
        put("grid.ny", self.grid.ny.to_string());
        put("grid.Lx", format!("{:?}", self.grid.lx));
        put("grid.Ly", format!("{:?}", self.grid.ly));
        put("cfl", format!("{:?}", self.cfl));
        put("t_end", format!("{:?}", self.t_end));
        put("output_every", format!("{:?}", self.output_every));
        put("scheme", self.scheme.to_string());
        put("initial", self.initial.to_string());
        put("out_dir", self.out_dir.clone());
        put("track_curve", self.track_curve.to_string());
        put("diffusion.m", format!("{:?}", self.diffusion.m));
        put("diffusion.d", self.diffusion.d.to_string());
        put("diffusion.sigma", format!("{:?}", self.diffusion.sigma));
        put("geodesic.n", self.geodesic.n.to_string());
        put("geodesic.vx", format!("{:?}", self.geodesic.vx));
        put("geodesic.vy", format!("{:?}", self.geodesic.vy));
        put("geodesic.shear", format!("{:?}", self.geodesic.shear));
        s
    }
}
