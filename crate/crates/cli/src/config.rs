//! JSON run configurations. Unknown keys are rejected everywhere.

use clab::bounds::{self, CatalogEntry, Setting};
use clab::calculus::{ManifoldDescriptor, PolyFunction};
use clab::discrete::{FiniteProductSpace, IsingSpec};
use clab::samplers::MeasureDescriptor;
use clab::tensor::Tensor;
use clab::{Error, Result};
use serde::Deserialize;

/// Observable given as a general polynomial or by shorthand.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionSpec {
    Poly(PolyFunction),
    /// `⟨a, x⟩`.
    Linear(Vec<f64>),
    /// `xᵀAx + offset`.
    Quadratic {
        matrix: Vec<Vec<f64>>,
        #[serde(default)]
        offset: f64,
    },
}

impl FunctionSpec {
    pub fn build(&self) -> Result<PolyFunction> {
        match self {
            FunctionSpec::Poly(p) => Ok(p.clone()),
            FunctionSpec::Linear(a) => {
                if a.is_empty() {
                    return Err(Error::Shape("empty coefficient vector".into()));
                }
                Ok(PolyFunction::linear(a))
            }
            FunctionSpec::Quadratic { matrix, offset } => {
                let n = matrix.len();
                if n == 0 || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Shape("matrix must be square and nonempty".into()));
                }
                let a = nalgebra::DMatrix::from_fn(n, n, |i, j| matrix[i][j]);
                PolyFunction::quadratic_form(&a)?.add(&PolyFunction::constant(n, *offset))
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum SettingSpec {
    Catalog(CatalogSetting),
    Explicit(Setting),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogSetting {
    pub catalog: CatalogEntry,
    pub d: u32,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub positive_part_only: bool,
}

impl SettingSpec {
    pub fn build(&self) -> Result<Setting> {
        match self {
            SettingSpec::Explicit(s) => {
                s.validate()?;
                Ok(s.clone())
            }
            SettingSpec::Catalog(c) => {
                let mut s = bounds::setting_catalog(&c.catalog, c.d)?;
                s.gamma = c.gamma;
                s.positive_part_only = c.positive_part_only;
                s.validate()?;
                Ok(s)
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    List(Vec<f64>),
    Range(GridRange),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridRange {
    pub from: f64,
    pub to: f64,
    pub points: usize,
}

/// Largest grid accepted from a config.
pub const MAX_GRID_POINTS: usize = 1 << 20;

impl GridSpec {
    pub fn build(&self) -> Result<Vec<f64>> {
        let grid = match self {
            GridSpec::List(v) => v.clone(),
            GridSpec::Range(r) => {
                if r.points < 2 || r.points > MAX_GRID_POINTS || !(r.to > r.from) {
                    return Err(Error::InvalidParameter(
                        "range grid needs 2+ points and from < to".into(),
                    ));
                }
                (0..r.points)
                    .map(|i| r.from + (r.to - r.from) * i as f64 / (r.points - 1) as f64)
                    .collect()
            }
        };
        if grid.is_empty() || grid.len() > MAX_GRID_POINTS || grid.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "grid values must be finite and nonnegative".into(),
            ));
        }
        Ok(grid)
    }
}

/// Where values come from: sampled measures or enumerated finite spaces.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Measure(MeasureDescriptor),
    Space(FiniteProductSpace),
    Ising(IsingSpec),
    /// Uniform `{±1}ⁿ`.
    Rademacher(usize),
}

impl SourceSpec {
    pub fn space(&self) -> Result<Option<FiniteProductSpace>> {
        Ok(match self {
            SourceSpec::Measure(_) => None,
            SourceSpec::Space(s) => Some(s.clone()),
            SourceSpec::Ising(i) => Some(i.build()?),
            SourceSpec::Rademacher(n) => Some(FiniteProductSpace::rademacher(*n)?),
        })
    }

    pub fn finite_space(&self) -> Result<FiniteProductSpace> {
        self.space()?
            .ok_or_else(|| Error::InvalidParameter("this check needs an enumerable finite space".into()))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormsConfig {
    #[serde(default)]
    pub tensor: Option<Tensor>,
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    #[serde(default)]
    pub points: Vec<Vec<f64>>,
    #[serde(default = "default_orders")]
    pub orders: Vec<usize>,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn default_orders() -> Vec<usize> {
    vec![1]
}

fn default_q() -> f64 {
    2.0
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundConfig {
    Tail {
        setting: SettingSpec,
        levels: Vec<f64>,
        grid: GridSpec,
    },
    Hw {
        setting: SettingSpec,
        hs: f64,
        op: f64,
        grid: GridSpec,
    },
    Chaos {
        ew: Vec<f64>,
        a: f64,
        b: f64,
        sigma2: f64,
        #[serde(default)]
        two_sided: bool,
        grid: GridSpec,
    },
    Moments {
        terms: Vec<(f64, f64)>,
        r0: f64,
        grid: GridSpec,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub source: SourceSpec,
    #[serde(default)]
    pub count: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
    /// Write the binary layout instead of text; needs `--out`.
    #[serde(default)]
    pub binary: bool,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum VerifyConfig {
    Tail {
        source: SourceSpec,
        function: FunctionSpec,
        setting: SettingSpec,
        /// Computed when absent.
        #[serde(default)]
        levels: Option<Vec<f64>>,
        grid: GridSpec,
        #[serde(default)]
        mean: Option<f64>,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        delta: Option<f64>,
    },
    Hw {
        source: SourceSpec,
        function: FunctionSpec,
        setting: SettingSpec,
        hs: f64,
        op: f64,
        grid: GridSpec,
        #[serde(default)]
        mean: Option<f64>,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default)]
        delta: Option<f64>,
    },
    Moments {
        source: SourceSpec,
        function: FunctionSpec,
        setting: SettingSpec,
        #[serde(default)]
        levels: Option<Vec<f64>>,
        r: Vec<f64>,
        #[serde(default)]
        mean: Option<f64>,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
    },
    ExpMoment {
        source: SourceSpec,
        function: FunctionSpec,
        setting: SettingSpec,
        #[serde(default)]
        levels: Option<Vec<f64>>,
    },
    Dlsi {
        source: SourceSpec,
        /// Defaults to the constant derived from the dependence profile.
        #[serde(default)]
        sigma2: Option<f64>,
        #[serde(default = "default_budget")]
        budget: usize,
        #[serde(default)]
        seed: Option<u64>,
    },
    FiniteDifference {
        manifold: ManifoldDescriptor,
        function: FunctionSpec,
        /// Sampled from `measure` when empty.
        #[serde(default)]
        points: Vec<Vec<f64>>,
        #[serde(default)]
        measure: Option<MeasureDescriptor>,
        #[serde(default)]
        samples: Option<usize>,
        #[serde(default)]
        seed: Option<u64>,
        #[serde(default = "default_h")]
        h: f64,
    },
}

fn default_budget() -> usize {
    8
}

fn default_h() -> f64 {
    1e-4
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteConfig {
    pub source: SourceSpec,
    #[serde(default)]
    pub function: Option<FunctionSpec>,
    /// Flat configuration indices; all configurations when empty.
    #[serde(default)]
    pub points: Vec<usize>,
    /// Also dump 𝔥-tensors of these orders.
    #[serde(default)]
    pub orders: Vec<usize>,
}

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Decode(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_hits_endpoints() {
        let g = parse::<GridSpec>(r#"{"from": 1, "to": 3, "points": 5}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(g, vec![1.0, 1.5, 2.0, 2.5, 3.0]);
    }

    #[test]
    fn bad_grids_rejected() {
        for text in [
            r#"[]"#,
            r#"[-1]"#,
            r#"{"from": 2, "to": 1, "points": 3}"#,
            r#"{"from": 0, "to": 1, "points": 1}"#,
        ] {
            assert!(parse::<GridSpec>(text).unwrap().build().is_err(), "{text}");
        }
    }

    #[test]
    fn quadratic_shorthand_matches_matrix() {
        let f = parse::<FunctionSpec>(r#"{"quadratic": {"matrix": [[1, 2], [0, 3]], "offset": 1}}"#)
            .unwrap()
            .build()
            .unwrap();
        // 1 + x² + 2xy + 3y² at (1, -1)
        assert!((f.eval(&[1.0, -1.0]).unwrap() - 3.0).abs() < 1e-14);
        assert!(parse::<FunctionSpec>(r#"{"quadratic": {"matrix": [[1, 2]]}}"#)
            .unwrap()
            .build()
            .is_err());
    }

    #[test]
    fn catalog_and_explicit_settings_agree() {
        let a = parse::<SettingSpec>(r#"{"catalog": {"tag": "lsi", "sigma2": 1.0}, "d": 2}"#)
            .unwrap()
            .build()
            .unwrap();
        let b = parse::<SettingSpec>(r#"{"p": 2, "r0": 2, "L": 1, "sigma": 1, "d": 2}"#)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(a.c(), b.c());
        assert_eq!(a.big_c(), b.big_c());
    }

    #[test]
    fn measure_source_is_not_enumerable() {
        let s = parse::<SourceSpec>(r#"{"measure": {"kind": "gaussian", "n": 2}}"#).unwrap();
        assert!(s.finite_space().is_err());
        assert_eq!(
            parse::<SourceSpec>(r#"{"rademacher": 3}"#)
                .unwrap()
                .finite_space()
                .unwrap()
                .size(),
            8
        );
    }
}
