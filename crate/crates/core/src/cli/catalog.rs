use serde_json::{json, Value};

use super::config::Params;

/// The experiment set, one per acceptance criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Experiment {
    FreeBaseline,
    OracleEquivalence,
    Theorem1Sweep,
    ResonanceScan,
    JostResiduals,
    BornConvergence,
    WienerTables,
    HsNormTable,
    KatoBound,
    OscillatoryDecay,
    S0Resonance,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::FreeBaseline,
        Experiment::OracleEquivalence,
        Experiment::Theorem1Sweep,
        Experiment::ResonanceScan,
        Experiment::JostResiduals,
        Experiment::BornConvergence,
        Experiment::WienerTables,
        Experiment::HsNormTable,
        Experiment::KatoBound,
        Experiment::OscillatoryDecay,
        Experiment::S0Resonance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::FreeBaseline => "free-baseline",
            Experiment::OracleEquivalence => "oracle-equivalence",
            Experiment::Theorem1Sweep => "theorem1-sweep",
            Experiment::ResonanceScan => "resonance-scan",
            Experiment::JostResiduals => "jost-residuals",
            Experiment::BornConvergence => "born-convergence",
            Experiment::WienerTables => "wiener-tables",
            Experiment::HsNormTable => "hs-norm-table",
            Experiment::KatoBound => "kato-bound",
            Experiment::OscillatoryDecay => "oscillatory-decay",
            Experiment::S0Resonance => "s0-resonance",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|e| e.name() == name)
    }

    /// Acceptance criterion the experiment's default config decides.
    pub fn criterion(self) -> u8 {
        Self::ALL.iter().position(|e| *e == self).expect("listed") as u8 + 1
    }

    pub fn description(self) -> &'static str {
        match self {
            Experiment::FreeBaseline => "V = 0 spectral kernel against (4πt)^{-1/2} and the free dispersive constant",
            Experiment::OracleEquivalence => "spectral kernel against the finite-difference oracle on the central window",
            Experiment::Theorem1Sweep => "sup of |t|^{1/2}|K| over a time sweep with the large-time growth exponent",
            Experiment::ResonanceScan => "zero-energy classification and bound-state count along a coupling scan",
            Experiment::JostResiduals => "Jost ODE residuals, conjugation symmetry and the support of the Fourier side",
            Experiment::BornConvergence => "ratios of successive Born terms above the energy split",
            Experiment::WienerTables => "uniform bounds of the cut-off Fourier norms and Wronskian ratio norms",
            Experiment::HsNormTable => "weighted Hilbert–Schmidt norms of R0, B and B' with Monte Carlo cross-checks",
            Experiment::KatoBound => "Monte Carlo iterated Kato integrals against (k+1)‖V‖_K^k",
            Experiment::OscillatoryDecay => "decay rates of the cut oscillatory integrals and the two phase integrals",
            Experiment::S0Resonance => "S0 invertibility, coupling scan and cut-off Fourier kernel scaling in 3D",
        }
    }

    /// Default parameters as JSON; every key is optional in a config.
    pub fn default_parameters(self) -> Value {
        Params::default_for(self).to_value()
    }
}

pub fn catalog_json() -> Value {
    Value::Array(
        Experiment::ALL
            .iter()
            .map(|e| {
                json!({
                    "name": e.name(),
                    "acceptance_criterion": e.criterion(),
                    "description": e.description(),
                    "required_keys": ["experiment"],
                    "optional_keys": ["schema_version", "seed"],
                    "parameters": e.default_parameters(),
                })
            })
            .collect(),
    )
}

pub fn catalog_text() -> String {
    let mut s = String::new();
    for e in Experiment::ALL {
        let keys: Vec<String> = match e.default_parameters() {
            Value::Object(m) => m.keys().cloned().collect(),
            _ => Vec::new(),
        };
        s.push_str(&format!("{:<20} criterion {:>2}  {}\n", e.name(), e.criterion(), e.description()));
        s.push_str(&format!("{:<20} keys: experiment (required); {}\n", "", keys.join(", ")));
    }
    s
}
