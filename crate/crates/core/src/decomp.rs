//! The result type shared by all three decompositions.

use serde::Serialize;

use crate::deficiency::{DeficiencyResult, SolverOptions};
use crate::probcore::{JointDist, ShannonSummary};

/// Values in `[-NEG_CLAMP, 0)` are solver noise and are reported as zero.
pub const NEG_CLAMP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasureTag {
    OutputDeficiency,
    InputDeficiency,
    Broja,
}

impl MeasureTag {
    pub fn name(self) -> &'static str {
        match self {
            MeasureTag::OutputDeficiency => "output_deficiency",
            MeasureTag::InputDeficiency => "input_deficiency",
            MeasureTag::Broja => "broja",
        }
    }
}

/// `UI(S;Y\Z)`, `UI(S;Z\Y)`, `SI`, `CI` in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Components {
    pub ui_y: f64,
    pub ui_z: f64,
    pub si: f64,
    pub ci: f64,
}

impl Components {
    fn clamped(self) -> Self {
        let c = |x: f64| {
            if (-NEG_CLAMP..0.0).contains(&x) {
                0.0
            } else {
                x
            }
        };
        Components {
            ui_y: c(self.ui_y),
            ui_z: c(self.ui_z),
            si: c(self.si),
            ci: c(self.ci),
        }
    }

    pub fn total(&self) -> f64 {
        self.ui_y + self.ui_z + self.si + self.ci
    }

    /// Evaluates the four functions from the two deficiencies
    /// `d_yz` (how far `Y` is from being reachable from `Z`) and `d_zy`.
    pub(crate) fn from_deficiencies(sh: &ShannonSummary, d_yz: f64, d_zy: f64) -> Self {
        Components {
            ui_y: d_yz.max(d_zy + sh.i_sy - sh.i_sz),
            ui_z: d_zy.max(d_yz + sh.i_sz - sh.i_sy),
            si: (sh.i_sy - d_yz).min(sh.i_sz - d_zy),
            ci: (sh.i_sy_given_z - d_yz).min(sh.i_sz_given_y - d_zy),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Diagnostics {
    /// Components before clamping.
    pub raw: Option<Components>,
    pub converged: bool,
    pub iterations: usize,
    /// The deficiency solves the decomposition was built from.
    #[serde(skip)]
    pub deficiencies: Vec<(String, DeficiencyResult)>,
    /// Objective per iteration of the main solve (BROJA).
    pub objective_trace: Vec<f64>,
    /// `|UI(S;Z\Y)` derived from the identities minus a direct solve`|`.
    pub cross_check: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub ui_y: f64,
    pub ui_z: f64,
    pub si: f64,
    pub ci: f64,
    pub measure_tag: MeasureTag,
    pub diagnostics: Diagnostics,
}

impl Decomposition {
    pub(crate) fn new(raw: Components, tag: MeasureTag, mut diagnostics: Diagnostics) -> Self {
        let c = raw.clamped();
        diagnostics.raw = Some(raw);
        Decomposition {
            ui_y: c.ui_y,
            ui_z: c.ui_z,
            si: c.si,
            ci: c.ci,
            measure_tag: tag,
            diagnostics,
        }
    }

    pub fn components(&self) -> Components {
        Components {
            ui_y: self.ui_y,
            ui_z: self.ui_z,
            si: self.si,
            ci: self.ci,
        }
    }

    pub fn converged(&self) -> bool {
        self.diagnostics.converged
    }
}

/// Options shared by the decompositions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DecompOptions {
    pub solver: SolverOptions,
    /// Prune zero-mass symbols instead of rejecting them.
    pub drop_null: bool,
}

/// Signed residuals of the defining identities of a decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    /// `UI_y + SI − I(S;Y)`
    pub marginal_y: f64,
    /// `UI_z + SI − I(S;Z)`
    pub marginal_z: f64,
    /// `UI_y + CI − I(S;Y|Z)`
    pub conditional_y: f64,
    /// `UI_z + CI − I(S;Z|Y)`
    pub conditional_z: f64,
    /// Sum of all four minus `I(S;YZ)`.
    pub total: f64,
    /// `I(S;Y) + UI_z − I(S;Z) − UI_y`
    pub consistency: f64,
}

impl IdentityResiduals {
    pub fn of(c: &Components, sh: &ShannonSummary) -> Self {
        IdentityResiduals {
            marginal_y: c.ui_y + c.si - sh.i_sy,
            marginal_z: c.ui_z + c.si - sh.i_sz,
            conditional_y: c.ui_y + c.ci - sh.i_sy_given_z,
            conditional_z: c.ui_z + c.ci - sh.i_sz_given_y,
            total: c.total() - sh.i_s_yz,
            consistency: sh.i_sy + c.ui_z - sh.i_sz - c.ui_y,
        }
    }

    pub fn max_abs(&self) -> f64 {
        [
            self.marginal_y,
            self.marginal_z,
            self.conditional_y,
            self.conditional_z,
            self.total,
            self.consistency,
        ]
        .iter()
        .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Residuals of `d` against the Shannon quantities of `joint`.
pub fn identity_residuals(d: &Decomposition, joint: &JointDist) -> IdentityResiduals {
    IdentityResiduals::of(&d.components(), &ShannonSummary::of(joint))
}
