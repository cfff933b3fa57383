//! Declarative experiment configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::model::{InitRule, ModelParams, Profile, RateFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    LlnSweep,
    BlowupSweep,
    DominationCheck,
    SchemeOrder,
    BdHitting,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::LlnSweep,
        Preset::BlowupSweep,
        Preset::DominationCheck,
        Preset::SchemeOrder,
        Preset::BdHitting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::LlnSweep => "lln-sweep",
            Preset::BlowupSweep => "blowup-sweep",
            Preset::DominationCheck => "domination-check",
            Preset::SchemeOrder => "scheme-order",
            Preset::BdHitting => "bd-hitting",
        }
    }

    /// The configuration shipped in `configs/`.
    pub fn default_config(self) -> ExperimentConfig {
        let text = match self {
            Preset::LlnSweep => include_str!("../../configs/lln-sweep.toml"),
            Preset::BlowupSweep => include_str!("../../configs/blowup-sweep.toml"),
            Preset::DominationCheck => include_str!("../../configs/domination-check.toml"),
            Preset::SchemeOrder => include_str!("../../configs/scheme-order.toml"),
            Preset::BdHitting => include_str!("../../configs/bd-hitting.toml"),
        };
        ExperimentConfig::from_toml(text).expect("shipped config parses")
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// How the particles-per-site scale grows with the number of sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EllRule {
    /// `ell = round(N^a)`; `a = 1` is `"n"`, `a = 3/4` is `"n^3/4"`.
    Power(f64),
    /// `ell = c` for every `N`. Parsed so that it can be refused with a
    /// diagnostic.
    Constant(u64),
    /// `ell = round(c log N)`. Refused for the same reason.
    Log(f64),
}

impl EllRule {
    pub fn ell(&self, n: usize) -> u64 {
        let n = n as f64;
        let raw = match *self {
            EllRule::Power(a) => n.powf(a),
            EllRule::Constant(c) => c as f64,
            EllRule::Log(c) => c * n.ln(),
        };
        (raw.round() as u64).max(1)
    }

    /// The limit theorem needs `ell(N) / log N -> infinity`.
    pub fn check_growth(&self) -> Result<(), HarnessError> {
        match self {
            EllRule::Power(a) if *a > 0.0 => Ok(()),
            _ => Err(HarnessError::EllTooSlow(format!(
                "ell schedule \"{self}\" does not grow faster than log N; the density field only \
                 converges when ell(N) / log N -> infinity (e.g. ell = N or ell = N^3/4)"
            ))),
        }
    }
}

impl FromStr for EllRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let s = s.trim().to_ascii_lowercase();
        let bad = || format!("unknown ell rule {s:?}; expected n, n^a, n^p/q, const:c or log:c");
        if s == "n" {
            return Ok(EllRule::Power(1.0));
        }
        if let Some(exp) = s.strip_prefix("n^") {
            let a = match exp.split_once('/') {
                Some((p, q)) => {
                    let p: f64 = p.parse().map_err(|_| bad())?;
                    let q: f64 = q.parse().map_err(|_| bad())?;
                    p / q
                }
                None => exp.parse().map_err(|_| bad())?,
            };
            return Ok(EllRule::Power(a));
        }
        if let Some(c) = s.strip_prefix("const:") {
            return c.parse().map(EllRule::Constant).map_err(|_| bad());
        }
        if let Some(c) = s.strip_prefix("log:") {
            return c.parse().map(EllRule::Log).map_err(|_| bad());
        }
        Err(bad())
    }
}

impl fmt::Display for EllRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EllRule::Power(a) if *a == 1.0 => write!(f, "n"),
            EllRule::Power(a) if *a == 0.75 => write!(f, "n^3/4"),
            EllRule::Power(a) => write!(f, "n^{a}"),
            EllRule::Constant(c) => write!(f, "const:{c}"),
            EllRule::Log(c) => write!(f, "log:{c}"),
        }
    }
}

/// A rate function given inline or as a two-column `x,value` CSV file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RateSelection {
    File { table_csv: PathBuf },
    Inline(RateFunction),
}

impl RateSelection {
    pub fn resolve(&self, base: &Path) -> Result<RateFunction, HarnessError> {
        match self {
            RateSelection::Inline(f) => Ok(f.clone()),
            RateSelection::File { table_csv } => Ok(RateFunction::table_from_csv(base.join(table_csv))?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub birth: RateSelection,
    #[serde(default = "zero_rate")]
    pub death: RateSelection,
    pub profile: Profile,
    #[serde(default)]
    pub init_rule: InitRule,
}

fn zero_rate() -> RateSelection {
    RateSelection::Inline(RateFunction::zero())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlnSection {
    /// Final time; must lie below the blow-up time of the equation.
    pub t_end: f64,
    /// Number of equally spaced comparison times on `[0, t_end]`.
    pub samples: usize,
    /// Refinement factor of the reference grid.
    #[serde(default = "four")]
    pub reference_factor: usize,
    /// The median distance at the largest N must lie below this value.
    pub band: f64,
    /// Where `band` comes from.
    pub band_note: String,
}

fn four() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlowupSection {
    /// Density at which a run is stopped and the tail correction applied.
    pub m_stop: f64,
    /// Runs that have not exploded by this time count as `+inf`.
    pub t_limit: f64,
    /// Tail widths reported around the blow-up time.
    pub gammas: Vec<f64>,
    /// Tail width whose fractions must be nonincreasing in N.
    pub check_gamma: f64,
    /// Allowed distance of the largest-N median from the blow-up time.
    pub median_window: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationVariant {
    pub name: String,
    pub birth: RateSelection,
    pub death: RateSelection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DominationSection {
    pub variants: Vec<DominationVariant>,
    /// The particle system is stopped at this density; the lower process is
    /// then continued on its own.
    pub m_stop: f64,
    pub t_limit: f64,
    /// Level (in units of `ell N`) from which the analytic tail replaces
    /// simulation of the lower process.
    pub y_cap_level: f64,
    /// Allowed gap between the simulated and analytic mean, in standard errors.
    pub se_factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSection {
    pub t_end: f64,
    #[serde(default = "four")]
    pub reference_factor: usize,
    pub slope_min: f64,
    pub slope_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BdSection {
    /// First-passage samples per chain and state, split evenly into
    /// `replicas` batches.
    pub samples: u64,
    /// States `r` whose passage `r -> r + 1` is simulated.
    pub states: Vec<u64>,
    /// Rate of the constant chain.
    pub lambda: f64,
    pub se_factor: f64,
    pub analytic_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub seed: u64,
    pub replicas: u32,
    #[serde(default)]
    pub n_list: Vec<usize>,
    #[serde(default = "default_ell_rule")]
    pub ell_rule: String,
    /// Output directory; the CLI flag `--out` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lln: Option<LlnSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blowup: Option<BlowupSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domination: Option<DominationSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scheme: Option<SchemeSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bd: Option<BdSection>,
    /// Directory that relative table paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_ell_rule() -> String {
    "n".into()
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let config: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.replicas == 0 {
            return bad("replicas must be at least 1".into());
        }
        if let Some(&n) = self.n_list.iter().find(|&&n| n < 2) {
            return bad(format!("every N must be at least 2, got {n}"));
        }
        self.ell_rule()?;
        let needs = |present: bool, section: &str| {
            if present {
                Ok(())
            } else {
                Err(HarnessError::Config(format!("preset {} needs a [{section}] section", self.preset)))
            }
        };
        let particle = matches!(self.preset, Preset::LlnSweep | Preset::BlowupSweep | Preset::DominationCheck);
        if particle && self.n_list.is_empty() {
            return bad(format!("preset {} needs a nonempty n_list", self.preset));
        }
        match self.preset {
            Preset::LlnSweep => {
                needs(self.model.is_some(), "model")?;
                needs(self.lln.is_some(), "lln")
            }
            Preset::BlowupSweep => {
                needs(self.model.is_some(), "model")?;
                needs(self.blowup.is_some(), "blowup")
            }
            Preset::DominationCheck => {
                needs(self.model.is_some(), "model")?;
                needs(self.domination.is_some(), "domination")
            }
            Preset::SchemeOrder => {
                needs(self.model.is_some(), "model")?;
                needs(self.scheme.is_some(), "scheme")?;
                if self.n_list.len() < 2 {
                    return bad("scheme-order needs at least two grid sizes".into());
                }
                Ok(())
            }
            Preset::BdHitting => needs(self.bd.is_some(), "bd"),
        }
    }

    pub fn ell_rule(&self) -> Result<EllRule, HarnessError> {
        self.ell_rule.parse().map_err(HarnessError::Config)
    }

    /// Model parameters for `n` sites with the configured birth and death
    /// rates replaced by `birth` and `death` when given.
    pub fn params_for(
        &self,
        n: usize,
        birth: Option<&RateSelection>,
        death: Option<&RateSelection>,
    ) -> Result<ModelParams, HarnessError> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| HarnessError::Config("missing [model] section".into()))?;
        let ell = self.ell_rule()?.ell(n);
        let birth = birth.unwrap_or(&model.birth).resolve(&self.base_dir)?;
        let death = death.unwrap_or(&model.death).resolve(&self.base_dir)?;
        Ok(ModelParams::new(n, ell, birth, death, model.profile.clone())?.with_init_rule(model.init_rule))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ell_rules() {
        assert_eq!("n".parse::<EllRule>().unwrap().ell(64), 64);
        assert_eq!("n^3/4".parse::<EllRule>().unwrap().ell(16), 8);
        assert_eq!("n^0.5".parse::<EllRule>().unwrap().ell(64), 8);
        assert_eq!("const:7".parse::<EllRule>().unwrap().ell(1000), 7);
        assert!("n^3/4".parse::<EllRule>().unwrap().check_growth().is_ok());
        assert!("sqrt".parse::<EllRule>().is_err());
        for slow in ["const:100", "log:5", "n^0"] {
            let err = slow.parse::<EllRule>().unwrap().check_growth().unwrap_err();
            assert!(err.to_string().contains("log N"), "{err}");
        }
    }

    #[test]
    fn shipped_configs_parse_and_round_trip() {
        for preset in Preset::ALL {
            let config = preset.default_config();
            assert_eq!(config.preset, preset);
            let again = ExperimentConfig::from_toml(&config.to_toml()).unwrap();
            assert_eq!(again, config);
        }
    }

    #[test]
    fn validation_errors() {
        let mut config = Preset::LlnSweep.default_config();
        config.n_list = vec![1, 8];
        assert!(matches!(config.validate(), Err(HarnessError::Config(_))));
        config.n_list = vec![8];
        config.replicas = 0;
        assert!(config.validate().is_err());
        config.replicas = 1;
        config.lln = None;
        assert!(config.validate().unwrap_err().to_string().contains("[lln]"));
        assert!(ExperimentConfig::from_toml("preset = \"lln-sweep\"\nseed = 1\nreplicas = 1\nbogus = 2").is_err());
    }

    #[test]
    fn table_rates_load_relative_to_config() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("b.csv"), "x,value\n0,0\n1,1\n2,4\n").unwrap();
        let text = r#"
            preset = "lln-sweep"
            seed = 3
            replicas = 1
            n_list = [4]
            [model]
            birth = { table_csv = "b.csv" }
            profile = { shape = "constant", value = 1.0 }
            [lln]
            t_end = 0.1
            samples = 2
            band = 1.0
            band_note = "test"
        "#;
        let path = dir.path().join("c.toml");
        std::fs::write(&path, text).unwrap();
        let config = ExperimentConfig::load(&path).unwrap();
        let params = config.params_for(4, None, None).unwrap();
        assert_eq!(params.birth.eval(1.5), 2.5);
        assert_eq!(params.ell, 4);
    }
}
