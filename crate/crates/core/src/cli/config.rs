//! Run configuration: one JSON document, overridden field by field by flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::euclid::IntertwinerParams;
use crate::expr::{parse, Expr};
use crate::integrability::{preset_table1, EtaVariant};
use crate::numerics::Grid1D;
use crate::potentials::cartesian_inputs;

/// A number or a list of numbers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumOrVec {
    Num(f64),
    Vec(Vec<f64>),
}

impl NumOrVec {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            NumOrVec::Num(x) => vec![*x],
            NumOrVec::Vec(v) => v.clone(),
        }
    }

    fn scalar(&self, what: &str) -> Result<f64, CliError> {
        match self.to_vec().as_slice() {
            [x] => Ok(*x),
            v => Err(CliError::Config(format!("{what} must be a single number, got {v:?}"))),
        }
    }
}

/// Rotation part: `c12` alone (n = 2), `(c1, c2, c3)` (n = 3), the upper
/// triangle row by row, or the full antisymmetric matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CSpec {
    Num(f64),
    Vec(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: NumOrVec,
    pub hi: NumOrVec,
    /// nodes per axis
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedSpec {
    Eigen(usize),
    Closed { phi: String, lambda: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub b: Vec<f64>,
    #[serde(default)]
    pub b1: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Option<String>,
    #[serde(alias = "dimension")]
    pub n: Option<usize>,
    pub a: Option<Vec<f64>>,
    pub c: Option<CSpec>,
    pub preset: Option<usize>,
    pub family: Option<String>,
    pub f: Option<String>,
    pub h: Option<String>,
    pub g: Option<String>,
    #[serde(rename = "V", alias = "xi_potential")]
    pub calv: Option<String>,
    #[serde(rename = "H", alias = "rho_potential")]
    pub calh: Option<String>,
    pub phi: Option<String>,
    pub p0: Option<f64>,
    pub b: Option<NumOrVec>,
    pub b1: Option<f64>,
    pub kind: Option<u8>,
    pub eta: Option<EtaVariant>,
    /// 1-based `(i, j)` with `η = L_i/L_j` for the general builder
    pub pair: Option<[usize; 2]>,
    pub energy: Option<f64>,
    pub grid: Option<GridSpec>,
    pub rho_grid: Option<GridSpec>,
    pub k: Option<usize>,
    pub level: Option<usize>,
    pub level_plus: Option<usize>,
    pub m: Option<f64>,
    pub seeds: Option<Vec<SeedSpec>>,
    pub tolerance: Option<f64>,
    pub min_order: Option<f64>,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub cells: Option<Vec<usize>>,
    pub center: Option<Vec<f64>>,
    pub width: Option<f64>,
    pub sigma: Option<f64>,
    pub symmetry: Option<bool>,
    pub corrupt: Option<f64>,
    pub sweep: Option<SweepSpec>,
    pub points: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($dst:expr, $src:expr, $($f:ident),* $(,)?) => {
        $( if $src.$f.is_some() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::from_json(&text)
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(&mut self, top: &RunConfig) {
        overlay!(
            self, top, command, n, a, c, preset, family, f, h, g, calv, calh, phi, p0, b, b1, kind, eta,
            pair, energy, grid, rho_grid, k, level, level_plus, m, seeds, tolerance, min_order, samples,
            seed, cells, center, width, sigma, symmetry, corrupt, sweep, points, out,
        );
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(1e-6)
    }

    pub fn min_order(&self) -> f64 {
        self.min_order.unwrap_or(1.8)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(1)
    }

    pub fn k(&self) -> usize {
        self.k.unwrap_or(4)
    }

    pub fn b_scalar(&self) -> Result<f64, CliError> {
        self.b.as_ref().map_or(Ok(0.0), |b| b.scalar("b"))
    }

    pub fn b1(&self) -> f64 {
        self.b1.unwrap_or(0.0)
    }

    pub fn eta_variant(&self) -> EtaVariant {
        self.eta.unwrap_or(EtaVariant::Eta)
    }

    /// Parameters from the preset row or from `n`, `a`, `c`.
    pub fn params(&self) -> Result<IntertwinerParams, CliError> {
        if let Some(row) = self.preset {
            if self.a.is_some() || self.c.is_some() {
                return Err(CliError::Config("give either a preset or a, c, not both".into()));
            }
            return preset_table1(row)
                .map(|p| p.params)
                .map_err(|e| CliError::Config(e.to_string()));
        }
        let a = self
            .a
            .clone()
            .ok_or_else(|| CliError::Config("missing a (or a preset row)".into()))?;
        let n = self.n.unwrap_or(a.len());
        if a.len() != n {
            return Err(CliError::Config(format!("a has {} entries, n = {n}", a.len())));
        }
        let c = self.c.clone().unwrap_or(CSpec::Vec(vec![]));
        let bad = |e: crate::euclid::ParamsError| CliError::Config(e.to_string());
        let upper = |v: &[f64]| -> Result<IntertwinerParams, CliError> {
            if v.len() != n * (n - 1) / 2 {
                return Err(CliError::Config(format!(
                    "c needs {} upper-triangle entries for n = {n}, got {}",
                    n * (n - 1) / 2,
                    v.len()
                )));
            }
            let mut entries = Vec::new();
            let mut it = v.iter();
            for j in 0..n {
                for k in j + 1..n {
                    entries.push(((j, k), *it.next().expect("length checked")));
                }
            }
            IntertwinerParams::from_upper(n, a.clone(), &entries).map_err(bad)
        };
        match (&c, n) {
            (CSpec::Num(v), 2) => Ok(IntertwinerParams::two_d(a[0], a[1], *v)),
            (CSpec::Vec(v), 3) if v.len() == 3 => Ok(IntertwinerParams::three_d([a[0], a[1], a[2]], [v[0], v[1], v[2]])),
            (CSpec::Vec(v), _) => upper(v),
            (CSpec::Num(v), _) => upper(&[*v]),
            (CSpec::Matrix(m), _) => IntertwinerParams::new(n, a.clone(), m.clone()).map_err(bad),
        }
    }

    /// `(a1, a2, c)` for the planar builders.
    pub fn planar(&self) -> Result<(f64, f64, f64), CliError> {
        let p = self.params()?;
        if p.n() != 2 {
            return Err(CliError::Config(format!("this family needs n = 2, got n = {}", p.n())));
        }
        Ok((p.a()[0], p.a()[1], p.c_at(0, 1)))
    }

    /// Box for the Cartesian commands, `count` nodes per axis including both ends.
    pub fn sample_box(&self, n: usize) -> Result<(Vec<f64>, Vec<f64>, usize), CliError> {
        let g = self.grid.clone().unwrap_or(GridSpec {
            lo: NumOrVec::Num(-1.0),
            hi: NumOrVec::Num(1.0),
            n: 11,
        });
        let widen = |v: &NumOrVec, what: &str| -> Result<Vec<f64>, CliError> {
            match v.to_vec() {
                s if s.len() == 1 => Ok(vec![s[0]; n]),
                s if s.len() == n => Ok(s),
                s => Err(CliError::Config(format!("grid.{what} has {} entries, n = {n}", s.len()))),
            }
        };
        let lo = widen(&g.lo, "lo")?;
        let hi = widen(&g.hi, "hi")?;
        if g.n < 2 || lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
            return Err(CliError::Config("grid needs n >= 2 and hi > lo on every axis".into()));
        }
        Ok((lo, hi, g.n))
    }

    pub fn line_grid(&self, spec: Option<&GridSpec>, default: (f64, f64, usize)) -> Result<Grid1D, CliError> {
        let (lo, hi, n) = match spec {
            Some(g) => (g.lo.scalar("grid.lo")?, g.hi.scalar("grid.hi")?, g.n),
            None => default,
        };
        Grid1D::new(lo, hi, n).map_err(|e| CliError::Config(e.to_string()))
    }
}

/// Parses `src` for `field`, allowing only `vars`.
pub fn expr(field: &str, src: &str, vars: &[&str]) -> Result<Expr, CliError> {
    parse(src, vars).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

pub fn required<'a>(v: &'a Option<String>, field: &str) -> Result<&'a str, CliError> {
    v.as_deref().ok_or_else(|| CliError::Config(format!("missing {field}")))
}

/// Cartesian variable names for `n` plus `extra`.
pub fn cartesian_with(n: usize, extra: &[&str]) -> Vec<String> {
    let mut v = cartesian_inputs(n);
    v.extend(extra.iter().map(|s| s.to_string()));
    v
}

/// `1,2,3` → numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

/// `1` → scalar, `0,0,1` → vector, `0,1;-1,0` → matrix.
pub fn parse_c(s: &str) -> Result<CSpec, String> {
    if s.contains(';') {
        return s.split(';').map(parse_list).collect::<Result<_, _>>().map(CSpec::Matrix);
    }
    let v = parse_list(s)?;
    Ok(if v.len() == 1 { CSpec::Num(v[0]) } else { CSpec::Vec(v) })
}

/// `b=-1,0,1;b1=0,0.5`.
pub fn parse_sweep(s: &str) -> Result<SweepSpec, String> {
    let mut out = SweepSpec::default();
    for part in s.split(';').filter(|p| !p.trim().is_empty()) {
        let (key, vals) = part.split_once('=').ok_or_else(|| format!("expected key=values in {part:?}"))?;
        let vals = parse_list(vals)?;
        match key.trim() {
            "b" => out.b = vals,
            "b1" => out.b1 = vals,
            k => return Err(format!("unknown sweep key {k:?} (expected b or b1)")),
        }
    }
    Ok(out)
}

/// `0,0,1` → eigen-index seeds.
pub fn parse_seeds(s: &str) -> Result<Vec<SeedSpec>, String> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<usize>().map(SeedSpec::Eigen).map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

pub fn parse_grid(s: &str) -> Result<GridSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts.as_slice() else {
        return Err(format!("expected lo:hi:n, got {s:?}"));
    };
    let num = |t: &str| -> Result<NumOrVec, String> {
        let v = parse_list(t)?;
        Ok(if v.len() == 1 { NumOrVec::Num(v[0]) } else { NumOrVec::Vec(v) })
    };
    Ok(GridSpec {
        lo: num(lo)?,
        hi: num(hi)?,
        n: n.trim().parse().map_err(|e| format!("{n:?}: {e}"))?,
    })
}
