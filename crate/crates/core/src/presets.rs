//! Shipped parameter sets: the testbed geometry, the baseline and convex
//! controller settings for the 10 dB and 30 dB identification runs, the
//! step-response settings, and measured location field constants.

use crate::control::{AtlmsParams, BiasModel, ConvexParams, LmsParams, Method, MethodParams, SvsParams};
use crate::experiments::{StepScenario, SysIdScenario};
use crate::magnetics::HelmholtzPair;
use crate::plant::TargetProfile;

pub const TESTBED_PAIR: HelmholtzPair = HelmholtzPair::TESTBED;

/// Location field components (north, east, down) used as constant targets, nT.
pub const LOCATION_FIELD_NT: [f64; 3] = [29_950.1, 21_290.2, -51_917.4];

/// Identification noise level of a parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnrPreset {
    Db10,
    Db30,
}

impl SnrPreset {
    pub fn db(self) -> f64 {
        match self {
            SnrPreset::Db10 => 10.0,
            SnrPreset::Db30 => 30.0,
        }
    }

    /// Nearest shipped set for an arbitrary SNR.
    pub fn nearest(snr_db: f64) -> Self {
        if snr_db < 20.0 {
            SnrPreset::Db10
        } else {
            SnrPreset::Db30
        }
    }
}

/// Convex settings the published tables leave open (σ, φ, C, μb and the
/// clamp on b), chosen per noise level.
pub fn convex_params(snr: SnrPreset) -> ConvexParams {
    let common = ConvexParams {
        sigma: 0.0,
        gamma_o: 0.55,
        t_o: 2,
        b_limit: 4.0,
        bias: BiasModel::Zero,
        ..ConvexParams::default()
    };
    match snr {
        SnrPreset::Db10 => ConvexParams { alpha: 1000.0, beta: 0.08, phi: 0.1, c: 0.05, mu_b: 1.0, ..common },
        SnrPreset::Db30 => ConvexParams { alpha: 500.0, beta: 0.01, phi: 0.1, c: 0.04, mu_b: 30.0, ..common },
    }
}

/// Parameters of `method` for the identification experiment at `snr`.
pub fn sysid_params(method: Method, snr: SnrPreset) -> MethodParams {
    let bias = BiasModel::Zero;
    match (method, snr) {
        (Method::Lms, SnrPreset::Db10) => MethodParams::Lms(LmsParams { mu: 0.01, bias }),
        (Method::Lms, SnrPreset::Db30) => MethodParams::Lms(LmsParams { mu: 0.005, bias }),
        (Method::Svs, SnrPreset::Db10) => MethodParams::Svs(SvsParams { alpha: 6.0, beta: 0.2, bias }),
        (Method::Svs, SnrPreset::Db30) => MethodParams::Svs(SvsParams { alpha: 4.0, beta: 0.15, bias }),
        (Method::Atlms, SnrPreset::Db10) => {
            MethodParams::Atlms(AtlmsParams { alpha: 1000.0, beta: 0.08, m: 1000.0, n_scale: 500.0, bias })
        }
        (Method::Atlms, SnrPreset::Db30) => {
            MethodParams::Atlms(AtlmsParams { alpha: 500.0, beta: 0.01, m: 900.0, n_scale: 500.0, bias })
        }
        (Method::Convex, s) => MethodParams::Convex(convex_params(s)),
    }
}

pub fn sysid_scenario(snr: SnrPreset) -> SysIdScenario {
    SysIdScenario { snr_db: snr.db(), ..SysIdScenario::default() }
}

/// Step-response controllers: the 30 dB baseline settings with a convex
/// controller-2 rate sized for the closed loop.
pub fn step_params(method: Method) -> MethodParams {
    match method {
        Method::Convex => {
            MethodParams::Convex(ConvexParams { c: 0.012, mu_b: 0.1, phi: 0.5, ..convex_params(SnrPreset::Db30) })
        }
        other => sysid_params(other, SnrPreset::Db30),
    }
}

/// Direction of a shipped step profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPreset {
    /// 0 → 120 μT.
    Up,
    /// 120 μT → 0.
    Down,
}

impl StepPreset {
    pub fn name(self) -> &'static str {
        match self {
            StepPreset::Up => "table7-up",
            StepPreset::Down => "table7-down",
        }
    }

    pub fn profile(self) -> TargetProfile {
        match self {
            StepPreset::Up => TargetProfile::zero_to_120ut(STEP_SWITCH_S),
            StepPreset::Down => TargetProfile::from_120ut_to_zero(STEP_SWITCH_S),
        }
    }
}

/// Pre-step phase long enough for every method to settle on the first level.
pub const STEP_SWITCH_S: f64 = 4.0;

pub fn step_scenario(preset: StepPreset, method: Method) -> StepScenario {
    StepScenario::shielded(preset.profile(), step_params(method))
}
