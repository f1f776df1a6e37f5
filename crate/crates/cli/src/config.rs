//! Scenario file loading.
//!
//! The file is a flat JSON object. Every key is optional; absent keys take
//! the system-parameter defaults below. Unknown keys are rejected.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use owc_rlnc_noma::channel::{LedParams, PdParams, Point3, RoomGeometry};
use owc_rlnc_noma::sim::{AlphaSweep, Fidelity, ScenarioConfig, SicKind};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SicArg {
    Perfect,
    Imperfect,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FidelityArg {
    Bitexact,
    Semianalytic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    /// Room extent (x, y, z), m.
    pub room_size: [f64; 3],
    /// Cell diameter on the user plane, m.
    pub cell_size: f64,
    pub led_power_w: f64,
    pub half_power_angle_deg: f64,
    pub led_position: [f64; 3],
    pub user_height: f64,
    pub responsivity: f64,
    pub users_per_group: usize,
    pub bandwidth_hz: f64,
    pub noise_psd: f64,
    /// Source packets per RLNC frame (K).
    pub packets_per_frame: usize,
    /// Minimum per-group multicast throughput, bit/s/Hz.
    pub min_throughput: f64,
    pub pd_area_m2: f64,
    pub fov_deg: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
    /// Payload bytes per packet (L).
    pub payload_bytes: usize,
    /// Coded packets per frame (N).
    pub coded_packets: usize,
    pub alpha_start: f64,
    pub alpha_stop: f64,
    pub alpha_step: f64,
    pub trials: usize,
    pub seed: u64,
    pub sic: SicArg,
    pub epsilon: f64,
    pub fidelity: FidelityArg,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self::from_scenario(&ScenarioConfig::default())
    }
}

impl FileConfig {
    fn from_scenario(c: &ScenarioConfig) -> Self {
        let p = |p: &Point3| [p.x, p.y, p.z];
        FileConfig {
            room_size: p(&c.geometry.room_size),
            cell_size: 2.0 * c.geometry.cell_radius,
            led_power_w: c.led.power_w,
            half_power_angle_deg: c.led.half_power_angle_deg,
            led_position: p(&c.geometry.led_position),
            user_height: c.geometry.user_height,
            responsivity: c.pd.responsivity,
            users_per_group: c.users_per_group,
            bandwidth_hz: c.bandwidth,
            noise_psd: c.noise_psd,
            packets_per_frame: c.generation_size,
            min_throughput: c.min_throughput,
            pd_area_m2: c.pd.area_m2,
            fov_deg: c.pd.fov_deg,
            filter_gain: c.pd.filter_gain,
            concentrator_gain: c.pd.concentrator_gain,
            payload_bytes: c.payload_len,
            coded_packets: c.coded_packets,
            alpha_start: c.alpha.start,
            alpha_stop: c.alpha.stop,
            alpha_step: c.alpha.step,
            trials: c.trials,
            seed: c.seed,
            sic: match c.sic {
                SicKind::Perfect => SicArg::Perfect,
                SicKind::Imperfect => SicArg::Imperfect,
            },
            epsilon: c.epsilon,
            fidelity: match c.fidelity {
                Fidelity::BitExact => FidelityArg::Bitexact,
                Fidelity::SemiAnalytic => FidelityArg::Semianalytic,
            },
        }
    }

    pub fn to_scenario(&self) -> ScenarioConfig {
        let p = |a: [f64; 3]| Point3::new(a[0], a[1], a[2]);
        ScenarioConfig {
            geometry: RoomGeometry {
                room_size: p(self.room_size),
                led_position: p(self.led_position),
                user_height: self.user_height,
                cell_radius: self.cell_size / 2.0,
            },
            led: LedParams {
                power_w: self.led_power_w,
                half_power_angle_deg: self.half_power_angle_deg,
            },
            pd: PdParams {
                area_m2: self.pd_area_m2,
                fov_deg: self.fov_deg,
                responsivity: self.responsivity,
                filter_gain: self.filter_gain,
                concentrator_gain: self.concentrator_gain,
            },
            users_per_group: self.users_per_group,
            noise_psd: self.noise_psd,
            bandwidth: self.bandwidth_hz,
            generation_size: self.packets_per_frame,
            payload_len: self.payload_bytes,
            coded_packets: self.coded_packets,
            alpha: AlphaSweep {
                start: self.alpha_start,
                stop: self.alpha_stop,
                step: self.alpha_step,
            },
            trials: self.trials,
            seed: self.seed,
            sic: match self.sic {
                SicArg::Perfect => SicKind::Perfect,
                SicArg::Imperfect => SicKind::Imperfect,
            },
            epsilon: self.epsilon,
            fidelity: match self.fidelity {
                FidelityArg::Bitexact => Fidelity::BitExact,
                FidelityArg::Semianalytic => Fidelity::SemiAnalytic,
            },
            min_throughput: self.min_throughput,
        }
    }

    /// One-line JSON echo of the effective configuration.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub alpha_start: Option<f64>,
    pub alpha_stop: Option<f64>,
    pub alpha_step: Option<f64>,
    pub trials: Option<usize>,
    pub sic: Option<SicArg>,
    pub fidelity: Option<FidelityArg>,
    pub redundancy: Option<usize>,
    pub epsilon: Option<f64>,
}

impl Overrides {
    fn apply(&self, c: &mut FileConfig) {
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$target = v; })*
            };
        }
        set!(
            seed => seed,
            alpha_start => alpha_start,
            alpha_stop => alpha_stop,
            alpha_step => alpha_step,
            trials => trials,
            sic => sic,
            fidelity => fidelity,
            redundancy => coded_packets,
            epsilon => epsilon,
        );
    }
}

/// Parse a scenario document, returning the effective file-level view
/// (for echoing) and the validated scenario.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<(FileConfig, ScenarioConfig), CliError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let mut file: FileConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        CliError::Validation(format!("invalid config key `{key}`: {}", e.inner()))
    })?;
    overrides.apply(&mut file);
    let scenario = file.to_scenario();
    scenario.validate()?;
    Ok((file, scenario))
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<(FileConfig, ScenarioConfig), CliError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|e| CliError::Io(p.display().to_string(), e))?,
        None => "{}".to_owned(),
    };
    parse_config(&text, overrides)
}
