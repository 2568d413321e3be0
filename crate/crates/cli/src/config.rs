//! Experiment configuration: TOML schema, validation, and construction of
//! the lattice objects (grid, time grid, initial fields) a scenario needs.
//!
//! Unknown keys are rejected, every parameter range is validated on load,
//! and the raw config bytes are hashed into every output file so a result
//! can always be traced back to the exact inputs that produced it.

use serde::Deserialize;
use sha2::{Digest, Sha256};

use ymlab::error::{Error, Result};
use ymlab::field::FormField;
use ymlab::grid::Grid;
use ymlab::heat::TimeGrid;
use ymlab::lie::{GroupName, GroupSpec, LieValue};
use ymlab::sampling::{random_sobolev_1form, SeedSplitter};
use ymlab::Real;

/// Version of the config schema this binary understands.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Heatflow,
    Variational,
    Recover,
    Checks,
    Oracle,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Heatflow => "heatflow",
            Scenario::Variational => "variational",
            Scenario::Recover => "recover",
            Scenario::Checks => "checks",
            Scenario::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupChoice {
    U1,
    Su2,
}

impl GroupChoice {
    pub fn spec(self) -> GroupSpec<Real> {
        match self {
            GroupChoice::U1 => GroupSpec::new(GroupName::U1),
            GroupChoice::Su2 => GroupSpec::new(GroupName::Su2),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub l: Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: Real,
    /// Node clustering: 1 selects the uniform grid, values ≥ 2 the
    /// geometric grid t_n = T(n/N)^γ.
    pub gamma: Real,
    pub cfl_safety: Real,
    pub nodes: usize,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    pub a: Real,
    pub b: Real,
}

/// One deterministic Fourier mode amp·sin(2π k·x/L + phase) placed in a
/// single (component, basis) channel.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    pub k: [i64; 3],
    pub component: usize,
    pub basis: usize,
    pub amplitude: Real,
    pub phase: Real,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialData {
    /// Deterministic mode list, identical at every resolution.
    Modes { modes: Vec<ModeSpec> },
    /// Seeded spectral sampler with H^s roughness.
    Random { roughness: Real, amplitude: Real },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksConfig {
    pub hardy_cases: usize,
    pub gfs_cases: usize,
    /// Random fields used to calibrate the Sobolev constant; 0 or a
    /// missing [checks] table means "uncalibrated" and is rejected.
    pub calibration_samples: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<String>,
    pub summary: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Optional; when present it must agree with the subcommand.
    pub scenario: Option<Scenario>,
    pub group: GroupChoice,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub exponents: Exponents,
    /// Recovery time τ; 0 selects the strong recovery from the origin.
    #[serde(default)]
    pub tau: Real,
    /// Optional τ sweep for the recover scenario (overrides `tau`).
    #[serde(default)]
    pub tau_sweep: Vec<Real>,
    pub initial_data: InitialData,
    /// Initial data of the linearized flow; defaults to a seeded H¹ sample.
    #[serde(default)]
    pub variational_data: Option<InitialData>,
    #[serde(default)]
    pub checks: Option<ChecksConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    /// Parse and validate; the error message carries the TOML line/column.
    pub fn parse(text: &str, scenario: Scenario) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("config schema: {e}")))?;
        cfg.validate(scenario)?;
        Ok(cfg)
    }

    fn validate(&self, scenario: Scenario) -> Result<()> {
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if let Some(s) = self.scenario {
            if s != scenario {
                return Err(Error::Config(format!(
                    "config scenario '{}' does not match subcommand '{}'",
                    s.name(),
                    scenario.name()
                )));
            }
        }
        for (name, e) in [("a", self.exponents.a), ("b", self.exponents.b)] {
            if !(0.5..1.0).contains(&e) {
                return Err(Error::Config(format!(
                    "exponent {name} must lie in [1/2, 1), got {e}"
                )));
            }
        }
        if self.uses_spectral(scenario) && !self.grid.n.is_power_of_two() {
            return Err(Error::Config(format!(
                "spectral operations need n to be a power of two, got {}",
                self.grid.n
            )));
        }
        let t = &self.time;
        if !(t.t_end > 0.0) || t.nodes == 0 {
            return Err(Error::Config("time grid needs t_end > 0 and nodes >= 1".into()));
        }
        if !(t.cfl_safety > 0.0 && t.cfl_safety <= 1.0) {
            return Err(Error::Config(format!(
                "cfl_safety must lie in (0, 1], got {}",
                t.cfl_safety
            )));
        }
        if t.gamma != 1.0 && t.gamma < 2.0 {
            return Err(Error::Config(format!(
                "gamma must be 1 (uniform) or >= 2 (geometric), got {}",
                t.gamma
            )));
        }
        for &tau in self.taus().iter() {
            if !(0.0..=t.t_end).contains(&tau) {
                return Err(Error::Config(format!("tau {tau} outside [0, T]")));
            }
        }
        if !self.tau_sweep.is_empty() {
            if self.tau_sweep.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::Config(
                    "tau_sweep must be strictly decreasing".into(),
                ));
            }
            if self.tau_sweep.iter().any(|&x| x <= 0.0) {
                return Err(Error::Config("tau_sweep values must be positive".into()));
            }
        }
        if scenario == Scenario::Checks {
            match &self.checks {
                None => {
                    return Err(Error::Config(
                        "checks scenario needs a [checks] table with calibration_samples".into(),
                    ))
                }
                Some(c) if c.calibration_samples == 0 => {
                    return Err(Error::Config(
                        "gamma is uncalibrated: calibration_samples must be >= 1".into(),
                    ))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Whether the run touches FFT-based paths (sampler, oracle transforms).
    fn uses_spectral(&self, scenario: Scenario) -> bool {
        if scenario == Scenario::Oracle {
            return true;
        }
        let random = |d: &InitialData| matches!(d, InitialData::Random { .. });
        random(&self.initial_data)
            || self.variational_data.as_ref().map_or(
                matches!(scenario, Scenario::Variational | Scenario::Recover),
                random,
            )
    }

    pub fn grid(&self) -> Result<Grid<Real>> {
        Grid::new(self.grid.n, self.grid.l)
    }

    /// Reporting grid with every recovery time merged in as an exact node.
    pub fn time_grid(&self, grid: &Grid<Real>) -> Result<TimeGrid<Real>> {
        let t = &self.time;
        let tg = if t.gamma == 1.0 {
            TimeGrid::uniform(t.t_end, t.nodes, grid, t.cfl_safety)?
        } else {
            TimeGrid::geometric(t.t_end, t.nodes, t.gamma, grid, t.cfl_safety)?
        };
        let taus: Vec<Real> = self.taus().into_iter().filter(|&x| x > 0.0).collect();
        if taus.is_empty() {
            Ok(tg)
        } else {
            tg.with_nodes(&taus)
        }
    }

    /// The recovery times this run reports, largest first.
    pub fn taus(&self) -> Vec<Real> {
        if self.tau_sweep.is_empty() {
            vec![self.tau]
        } else {
            self.tau_sweep.clone()
        }
    }

    /// The connection initial data A₀.
    pub fn initial_connection(
        &self,
        grid: Grid<Real>,
        seeds: &SeedSplitter,
    ) -> Result<FormField<Real>> {
        build_field(&self.initial_data, grid, self.group.spec(), &seeds.child("a0"))
    }

    /// Initial data of the linearized flow (w₀ or v₀).
    pub fn initial_variation(
        &self,
        grid: Grid<Real>,
        seeds: &SeedSplitter,
    ) -> Result<FormField<Real>> {
        let default = InitialData::Random {
            roughness: 1.0,
            amplitude: 1.0,
        };
        let spec = self.variational_data.as_ref().unwrap_or(&default);
        build_field(spec, grid, self.group.spec(), &seeds.child("w0"))
    }
}

fn build_field(
    data: &InitialData,
    grid: Grid<Real>,
    group: GroupSpec<Real>,
    seeds: &SeedSplitter,
) -> Result<FormField<Real>> {
    match data {
        InitialData::Modes { modes } => {
            for m in modes {
                if m.component >= 3 || m.basis >= group.dim {
                    return Err(Error::Config(format!(
                        "mode channel ({}, {}) out of range for the group",
                        m.component, m.basis
                    )));
                }
            }
            let l = grid.l;
            let modes = modes.clone();
            Ok(FormField::from_fn(1, grid, group, move |p, c| {
                let mut coeffs = [0.0; ymlab::lie::MAX_DIM];
                for m in &modes {
                    if m.component == c {
                        let phase = 2.0 * std::f64::consts::PI
                            * (m.k[0] as Real * p[0] / l
                                + m.k[1] as Real * p[1] / l
                                + m.k[2] as Real * p[2] / l)
                            + m.phase;
                        coeffs[m.basis] += m.amplitude * phase.sin();
                    }
                }
                LieValue::from_coeffs(&coeffs)
            }))
        }
        InitialData::Random {
            roughness,
            amplitude,
        } => {
            let mut f = random_sobolev_1form(grid, group, *roughness, seeds);
            f.scale_in_place(*amplitude);
            Ok(f)
        }
    }
}

/// Hex SHA-256 of the raw config bytes; embedded in every output header.
pub fn config_hash(text: &str) -> String {
    let mut h = Sha256::new();
    h.update(text.as_bytes());
    let digest = h.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}
