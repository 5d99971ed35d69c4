//! Run configuration: a structured TOML file with nested sections, strict
//! about unknown keys, with a recorded default for every field. A previously
//! emitted JSON manifest is also accepted as a config (the embedded raw
//! config text and overrides are replayed), which makes any run exactly
//! reproducible from its manifest.

use anyhow::{anyhow, bail, Context, Result};

use serde::{Deserialize, Serialize};

use rns_core::evans::contour::ContourOptions;
use rns_core::evans::roots::RootFinderOptions;
use rns_core::evans::EvansOptions;
use rns_core::gasdyn::{ignition_energy_from_weight, WaveParams};
use rns_core::profile::DomainSpec;
use rns_core::znd::{calibrate_k, neumann_state};

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub wave: WaveSection,
    pub solver: SolverSection,
    pub evans: EvansSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WaveSection {
    pub e_plus: f64,
    pub q: f64,
    pub activation_energy: f64,
    pub gamma: f64,
    pub nu: f64,
    pub d: f64,
    pub kappa_v: f64,
    pub c_v: f64,
    /// Reaction rate; omitted means "calibrate so the ZND half-reaction
    /// point sits at x = -10".
    pub k: Option<f64>,
    /// Ignition temperature, stated directly ...
    pub t_ig: Option<f64>,
    /// ... or through the convex-combination rule
    /// `e_ig = (1-w) e_plus + w e_mid` with `w` the weight on the
    /// ZND jump energy `e_mid`.
    pub ignition_weight: Option<f64>,
}

impl Default for WaveSection {
    fn default() -> Self {
        Self {
            e_plus: 6.23e-2,
            q: 6.23e-1,
            activation_energy: 3.1,
            gamma: 0.2,
            nu: 0.1,
            d: 0.1,
            kappa_v: 0.1,
            c_v: 1.0,
            k: None,
            t_ig: Some(6.64e-2),
            ignition_weight: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub m_minus: f64,
    pub m_plus: f64,
    pub auto_extend: bool,
    pub max_extensions: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_nodes: usize,
}

impl Default for SolverSection {
    fn default() -> Self {
        Self {
            m_minus: 25.0,
            m_plus: 5.0,
            auto_extend: true,
            max_extensions: 6,
            rel_tol: 1e-6,
            abs_tol: 1e-8,
            max_nodes: 40_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvansSection {
    pub r_inner: f64,
    pub r_outer: f64,
    pub anchor: f64,
    pub rtol: f64,
    pub atol: f64,
    pub initial_nodes: usize,
    pub max_bisect: usize,
    pub target_accuracy: f64,
    /// Abscissa for the `gmat` debug dump.
    pub gmat_x: f64,
    pub gmat_re_lambda: f64,
    pub gmat_im_lambda: f64,
}

impl Default for EvansSection {
    fn default() -> Self {
        Self {
            r_inner: 1e-4,
            r_outer: 10.0,
            anchor: 10.0,
            rtol: 1e-6,
            atol: 1e-8,
            initial_nodes: 128,
            max_bisect: 12,
            target_accuracy: 1e-3,
            gmat_x: 0.0,
            gmat_re_lambda: 1.0,
            gmat_im_lambda: 0.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    /// Tracking grid in activation energy.
    pub e_start: f64,
    pub e_end: f64,
    pub step: f64,
    pub min_step: f64,
    /// Boundary bisection.
    pub side: String,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub abs_err: f64,
    /// Viscosity columns for `boundary`.
    pub nus: Vec<f64>,
    /// Continuation controls of the stability oracle.
    pub base_e_act: f64,
    pub max_continuation_step: f64,
    /// Reference inviscid onset for `delay`.
    pub e_star: f64,
    /// Boundary points consumed by `fit` and `delay`: rows `(nu, E_A)`.
    pub fit_points: Vec<(f64, f64)>,
    pub fit_model: String,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            e_start: 2.0,
            e_end: 7.5,
            step: 0.25,
            min_step: 0.03125,
            side: "lower".into(),
            bracket_lo: 2.0,
            bracket_hi: 3.5,
            abs_err: 0.05,
            nus: vec![0.1],
            base_e_act: 3.0,
            max_continuation_step: 0.5,
            e_star: 2.45,
            fit_points: Vec::new(),
            fit_model: "linear".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

/// How the ignition threshold was fixed, recorded in the manifest: the
/// figure captions are ambiguous between the two readings.
#[derive(Debug, Clone, Serialize)]
pub struct IgnitionConvention {
    pub interpretation: String,
    pub t_ig_resolved: f64,
    pub e_mid: f64,
    pub weight_equivalent: Option<f64>,
}

/// Fully resolved parameters: what the run actually used.
pub struct Resolved {
    pub params: WaveParams,
    pub k_calibrated: bool,
    pub ignition: IgnitionConvention,
    pub domain: DomainSpec,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved> {
        let w = &self.wave;
        let (_, _, e_mid) = neumann_state(w.e_plus, w.gamma).map_err(anyhow::Error::new)?;
        let (t_ig, interpretation, weight_equivalent) = match (w.t_ig, w.ignition_weight) {
            (Some(t), None) => {
                // Also record the weight this temperature corresponds to.
                let weq = if (e_mid - w.e_plus).abs() > 1e-12 {
                    Some((t * w.c_v - w.e_plus) / (e_mid - w.e_plus))
                } else {
                    None
                };
                (t, "direct ignition temperature".to_string(), weq)
            }
            (None, Some(wt)) => {
                let e_ig = ignition_energy_from_weight(w.e_plus, e_mid, wt);
                (
                    e_ig / w.c_v,
                    format!("convex combination with weight {wt} on e_mid"),
                    Some(wt),
                )
            }
            (Some(_), Some(_)) => bail!("set either wave.t_ig or wave.ignition_weight, not both"),
            (None, None) => bail!("one of wave.t_ig or wave.ignition_weight is required"),
        };
        let base = WaveParams::new(
            w.e_plus,
            w.q,
            w.activation_energy,
            w.gamma,
            w.nu,
            w.d,
            w.kappa_v,
            w.k.unwrap_or(1.0),
            t_ig,
            w.c_v,
        )
        .map_err(anyhow::Error::new)?;
        let (params, k_calibrated) = match w.k {
            Some(_) => (base, false),
            None => (
                base.with_k(calibrate_k(&base).map_err(anyhow::Error::new)?),
                true,
            ),
        };
        Ok(Resolved {
            params,
            k_calibrated,
            ignition: IgnitionConvention {
                interpretation,
                t_ig_resolved: t_ig,
                e_mid,
                weight_equivalent,
            },
            domain: DomainSpec {
                m_minus: self.solver.m_minus,
                m_plus: self.solver.m_plus,
                auto_extend: self.solver.auto_extend,
                max_extensions: self.solver.max_extensions,
            },
        })
    }

    pub fn evans_options(&self) -> EvansOptions {
        EvansOptions {
            rtol: self.evans.rtol,
            atol: self.evans.atol,
            anchor: self.evans.anchor,
            ..Default::default()
        }
    }

    pub fn contour_options(&self) -> ContourOptions {
        ContourOptions {
            initial_nodes: self.evans.initial_nodes,
            max_bisect: self.evans.max_bisect,
            ..Default::default()
        }
    }

    pub fn root_options(&self) -> RootFinderOptions {
        let mut o = RootFinderOptions {
            target_accuracy: self.evans.target_accuracy,
            ..Default::default()
        };
        o.contour.initial_nodes = self.evans.initial_nodes.min(64);
        o
    }
}

/// A config file on disk: raw text plus override strings already applied.
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: String,
    pub overrides: Vec<String>,
}

/// Loads TOML, or replays a previously emitted JSON manifest.
pub fn load_config(path: &str, extra_overrides: &[String]) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
    let (raw, mut overrides) = if text.trim_start().starts_with('{') {
        let manifest: serde_json::Value =
            serde_json::from_str(&text).context("parsing manifest JSON")?;
        let raw = manifest
            .get("config_raw")
            .and_then(|v| v.as_str())
            .ok_or_else(|| anyhow!("manifest lacks config_raw"))?
            .to_string();
        let ovr = manifest
            .get("overrides")
            .and_then(|v| v.as_array())
            .map(|a| {
                a.iter()
                    .filter_map(|v| v.as_str().map(String::from))
                    .collect::<Vec<_>>()
            })
            .unwrap_or_default();
        (raw, ovr)
    } else {
        (text, Vec::new())
    };
    overrides.extend_from_slice(extra_overrides);

    let mut value: toml::Value = raw.parse().context("parsing config TOML")?;
    for ov in &overrides {
        apply_override(&mut value, ov)?;
    }
    let config: RunConfig = value.try_into().context("validating config")?;
    Ok(LoadedConfig {
        config,
        raw,
        overrides,
    })
}

/// Applies one `section.key=value` override onto the TOML tree.
fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, val) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override '{spec}' is not key=value"))?;
    let parsed: toml::Value = format!("x = {val}")
        .parse::<toml::Value>()
        .ok()
        .and_then(|t| t.get("x").cloned())
        .unwrap_or_else(|| toml::Value::String(val.to_string()));
    let mut node = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if i + 1 == parts.len() {
            let table = node
                .as_table_mut()
                .ok_or_else(|| anyhow!("override path '{path}' does not address a table"))?;
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow!("override path '{path}' does not address a table"))?;
        node = table
            .entry(part.to_string())
            .or_insert(toml::Value::Table(Default::default()));
    }
    Ok(())
}
