//! Invariant audit over the numbers stored in a report. Fresh reports and
//! saved ones go through the same code, so a hand-edited report is judged
//! exactly like a computed one. Shannon quantities are always recomputed
//! from the embedded distribution.

use pidkit::decomp::IdentityResiduals;
use pidkit::oracle::{grid_deficiency_oracle, grid_ui_oracle, DeficiencyKind};
use pidkit::probcore::format::parse_json_value;
use pidkit::probcore::{
    forward_pair, validate_joint, JointDist, ShannonSummary, ValidateOptions, Var,
};
use pidkit::{Components, Error};
use serde_json::{Map, Value};

use crate::report::{Report, SCHEMA};

/// Slack for identities and inequalities between solver outputs.
pub const AUDIT_TOL: f64 = 1e-5;
/// Most negative component accepted as nonnegative.
pub const NEG_TOL: f64 = 1e-6;
const UI_STEP: f64 = 0.002;
const DEFICIENCY_STEP: f64 = 0.005;

type Entry = (String, bool, Option<f64>);

#[derive(Default)]
struct Audit {
    entries: Vec<Entry>,
    notes: Vec<String>,
}

impl Audit {
    /// `|residual| ≤ AUDIT_TOL`.
    fn equal(&mut self, name: String, residual: Option<f64>) {
        let r = residual.map(f64::abs);
        self.entries
            .push((name, r.is_some_and(|r| r <= AUDIT_TOL), r));
    }

    /// `lhs ≤ rhs` up to `tol`; the residual is the violation, zero when it holds.
    fn at_most(&mut self, name: String, lhs: Option<f64>, rhs: Option<f64>, tol: f64) {
        let r = lhs.zip(rhs).map(|(a, b)| (a - b).max(0.0));
        self.entries.push((name, r.is_some_and(|r| r <= tol), r));
    }
}

fn num(v: &Value, path: &[&str]) -> Option<f64> {
    path.iter().try_fold(v, |v, k| v.get(k))?.as_f64()
}

fn components(block: &Value) -> Option<Components> {
    Some(Components {
        ui_y: num(block, &["ui_y_bits"])?,
        ui_z: num(block, &["ui_z_bits"])?,
        si: num(block, &["si_bits"])?,
        ci: num(block, &["ci_bits"])?,
    })
}

fn oriented(joint: &JointDist, block: &Value) -> Result<JointDist, Error> {
    match block.get("target").and_then(Value::as_str) {
        Some("Y") => joint.permute([Var::Y, Var::S, Var::Z]),
        _ => Ok(joint.clone()),
    }
}

fn decomposition_checks(a: &mut Audit, name: &str, block: &Value, sh: &ShannonSummary) {
    let c = components(block);
    match c {
        Some(c) => {
            let r = IdentityResiduals::of(&c, sh);
            for (label, x) in [
                ("marginal Y", r.marginal_y),
                ("marginal Z", r.marginal_z),
                ("conditional Y", r.conditional_y),
                ("conditional Z", r.conditional_z),
                ("total", r.total),
            ] {
                a.equal(format!("{name}: identity {label}"), Some(x));
            }
            let min = c.ui_y.min(c.ui_z).min(c.si).min(c.ci);
            a.at_most(
                format!("{name}: nonnegative"),
                Some(-min),
                Some(0.0),
                NEG_TOL,
            );
            let lo_y = sh.i_sy - sh.i_sz;
            let hi_y = sh.i_sy.min(sh.i_sy_given_z);
            a.at_most(
                format!("{name}: UI_Y lower bound"),
                Some(lo_y),
                Some(c.ui_y),
                AUDIT_TOL,
            );
            a.at_most(
                format!("{name}: UI_Y upper bound"),
                Some(c.ui_y),
                Some(hi_y),
                AUDIT_TOL,
            );
            let hi_z = sh.i_sz.min(sh.i_sz_given_y);
            a.at_most(
                format!("{name}: UI_Z lower bound"),
                Some(-lo_y),
                Some(c.ui_z),
                AUDIT_TOL,
            );
            a.at_most(
                format!("{name}: UI_Z upper bound"),
                Some(c.ui_z),
                Some(hi_z),
                AUDIT_TOL,
            );
        }
        None => a
            .entries
            .push((format!("{name}: components present"), false, None)),
    }
    if block.get("deficiencies").is_some() {
        let d_yz = num(block, &["deficiencies", "z_covers_y", "value_bits"]);
        let d_zy = num(block, &["deficiencies", "y_covers_z", "value_bits"]);
        a.at_most(
            format!("{name}: deficiency below UI_Y"),
            d_yz,
            c.map(|c| c.ui_y),
            AUDIT_TOL,
        );
        a.at_most(
            format!("{name}: deficiency below UI_Z"),
            d_zy,
            c.map(|c| c.ui_z),
            AUDIT_TOL,
        );
        if block.get("projected_information_bits").is_some() {
            let p_y = num(block, &["projected_information_bits", "y_onto_z"]);
            let p_z = num(block, &["projected_information_bits", "z_onto_y"]);
            a.equal(
                format!("{name}: projection identity Y"),
                p_y.zip(d_yz).map(|(p, d)| p - (sh.i_sy - d)),
            );
            a.equal(
                format!("{name}: projection identity Z"),
                p_z.zip(d_zy).map(|(p, d)| p - (sh.i_sz - d)),
            );
        }
    }
}

fn skr_checks(a: &mut Audit, skr: &Value, sh: &ShannonSummary, joint: &JointDist) {
    let (lo, hi) = pidkit::secrecy::skr_trivial_bounds(joint);
    let get = |k: &str| num(skr, &[k]);
    a.equal(
        "skr: lower bound recomputed".into(),
        get("lower_trivial_bits").map(|x| x - lo),
    );
    a.equal(
        "skr: upper bound recomputed".into(),
        get("upper_trivial_bits").map(|x| x - hi),
    );
    a.at_most(
        "skr: one-way above forward gap".into(),
        Some(sh.i_sy - sh.i_sz),
        get("one_way_upper_bits"),
        AUDIT_TOL,
    );
    a.at_most(
        "skr: one-way below upper bound".into(),
        get("one_way_upper_bits"),
        Some(hi),
        AUDIT_TOL,
    );
    a.at_most(
        "skr: intrinsic below upper bound".into(),
        get("intrinsic_upper_bits"),
        Some(hi),
        AUDIT_TOL,
    );
    a.at_most(
        "skr: intrinsic above lower bound".into(),
        Some(lo),
        get("intrinsic_upper_bits"),
        AUDIT_TOL,
    );
}

/// Grid-oracle comparisons for target-`S` blocks, where the caps allow.
fn deep_checks(a: &mut Audit, decs: &Map<String, Value>, joint: &JointDist) {
    let mut skipped = Vec::new();
    if let Some(b) = decs
        .get("broja")
        .filter(|b| b.get("target").and_then(Value::as_str) != Some("Y"))
    {
        match grid_ui_oracle(joint, UI_STEP) {
            Ok(g) => a.at_most(
                "deep: broja UI_Y matches grid oracle".into(),
                num(b, &["raw", "ui_y_bits"]).map(|x| (x - g.value).abs()),
                Some(g.resolution_bound),
                0.0,
            ),
            Err(e) => skipped.push(format!("UI oracle ({})", e.code())),
        }
    }
    let pairs = (
        forward_pair(joint, Var::S, Var::Z, false),
        forward_pair(joint, Var::S, Var::Y, false),
        forward_pair(joint, Var::Y, Var::S, false),
        forward_pair(joint, Var::Z, Var::S, false),
    );
    let (Ok((pi, mu)), Ok((_, ka)), Ok((py, kb)), Ok((pz, mb))) = pairs else {
        a.notes
            .push("deep checks skipped: zero-mass symbols".into());
        return;
    };
    let cases = [
        (
            "output",
            "z_covers_y",
            grid_deficiency_oracle(&pi, &mu, &ka, DEFICIENCY_STEP, DeficiencyKind::Output),
        ),
        (
            "output",
            "y_covers_z",
            grid_deficiency_oracle(&pi, &ka, &mu, DEFICIENCY_STEP, DeficiencyKind::Output),
        ),
        (
            "input",
            "z_covers_y",
            grid_deficiency_oracle(&py, &mb, &kb, DEFICIENCY_STEP, DeficiencyKind::Input),
        ),
        (
            "input",
            "y_covers_z",
            grid_deficiency_oracle(&pz, &kb, &mb, DEFICIENCY_STEP, DeficiencyKind::Input),
        ),
    ];
    for (measure, dir, oracle) in cases {
        let block_name = format!("{measure}_deficiency");
        let Some(b) = decs
            .get(&block_name)
            .filter(|b| b.get("target").and_then(Value::as_str) != Some("Y"))
        else {
            continue;
        };
        match oracle {
            Ok(g) => a.at_most(
                format!("deep: {measure} deficiency {dir} matches grid oracle"),
                num(b, &["deficiencies", dir, "value_bits"]).map(|x| (x - g.value).abs()),
                Some(g.resolution_bound),
                0.0,
            ),
            Err(e) => skipped.push(format!("{measure} {dir} oracle ({})", e.code())),
        }
    }
    if !skipped.is_empty() {
        a.notes
            .push(format!("deep checks skipped: {}", skipped.join(", ")));
    }
}

fn run(root: &Map<String, Value>, joint: &JointDist, deep: bool) -> Audit {
    let mut a = Audit::default();
    let empty = Map::new();
    let decs = root
        .get("decompositions")
        .and_then(Value::as_object)
        .unwrap_or(&empty);
    for (name, block) in decs {
        match oriented(joint, block) {
            Ok(j) => decomposition_checks(&mut a, name, block, &ShannonSummary::of(&j)),
            Err(e) => a.notes.push(format!("{name}: {e}")),
        }
    }
    let targets_s = |n: &str| {
        decs.get(n)
            .is_some_and(|b| b.get("target").and_then(Value::as_str) != Some("Y"))
    };
    let broja = decs.get("broja").and_then(components);
    for other in ["output_deficiency", "input_deficiency"] {
        let same_target = decs.get(other).and_then(|b| b.get("target"))
            == decs.get("broja").and_then(|b| b.get("target"));
        if let (Some(c), Some(b), true) = (decs.get(other).and_then(components), broja, same_target)
        {
            a.at_most(
                format!("{other}: UI_Y below broja"),
                Some(c.ui_y),
                Some(b.ui_y),
                AUDIT_TOL,
            );
            a.at_most(
                format!("{other}: UI_Z below broja"),
                Some(c.ui_z),
                Some(b.ui_z),
                AUDIT_TOL,
            );
        }
    }
    if let Some(skr) = root.get("skr") {
        skr_checks(&mut a, skr, &ShannonSummary::of(joint), joint);
        if targets_s("broja") {
            a.equal(
                "skr: one-way equals broja UI_Y".into(),
                num(skr, &["one_way_upper_bits"])
                    .zip(broja)
                    .map(|(x, b)| x - b.ui_y),
            );
        }
    }
    if deep {
        deep_checks(&mut a, decs, joint);
    }
    a
}

/// Audits a freshly computed report in place.
pub fn attach(r: &mut Report, joint: &JointDist, deep: bool) {
    let a = run(r.root(), joint, deep);
    for n in a.notes {
        r.note(n);
    }
    r.audit(a.entries);
}

/// Audits a saved report. The returned report carries the embedded
/// distribution and the audit, not the saved measures.
pub fn check_saved(saved: Value, sha256: &str, deep: bool) -> Result<Report, Error> {
    let schema = saved
        .get("schema")
        .and_then(Value::as_str)
        .unwrap_or_default();
    if schema != SCHEMA {
        return Err(Error::Parse(format!(
            "unsupported report schema `{schema}`"
        )));
    }
    let root = saved.as_object().cloned().unwrap_or_default();
    let joint = validate_joint(parse_json_value(&saved)?, ValidateOptions::default())?;
    let mut options = Map::new();
    options.insert("source".into(), "report".into());
    options.insert("deep".into(), deep.into());
    let mut r = Report::new("check", sha256, &joint, options);
    let a = run(&root, &joint, deep);
    for n in a.notes {
        r.note(n);
    }
    r.audit(a.entries);
    Ok(r)
}
