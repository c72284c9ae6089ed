//! Report assembly. Every block lands both in a sorted JSON tree and in the
//! human-readable table.

use pidkit::broja::decompose_broja;
use pidkit::decomp_input::{decompose_input, projected_information, Projection};
use pidkit::decomp_output::decompose_output;
use pidkit::deficiency::{
    degradation_test, input_deficiency, input_degradation_test, output_deficiency,
    DeficiencyResult, OrderCertificate, ORDER_TOL,
};
use pidkit::probcore::{format, forward_pair, Channel, JointDist, ShannonSummary, Var};
use pidkit::secrecy::skr_report;
use pidkit::{DecompOptions, Decomposition, Error};
use serde_json::{json, Map, Value};

use crate::Direction;

pub const SCHEMA: &str = "pid-report/1";

pub struct Report {
    root: Map<String, Value>,
    lines: Vec<String>,
    converged: bool,
    failures: Vec<String>,
}

fn bits(x: f64) -> String {
    format!("{x:.6} bits")
}

fn row(label: &str, value: impl std::fmt::Display) -> String {
    format!("  {label:<22}{value}")
}

fn channel_json(c: &Channel) -> Value {
    json!({
        "input": c.input().symbols(),
        "output": c.output().symbols(),
        "rows": c.to_rows(),
    })
}

fn channel_lines(c: &Channel) -> Vec<String> {
    let mut out = vec![format!(
        "    {:>8} {}",
        "",
        c.output()
            .symbols()
            .iter()
            .map(|s| format!("{s:>9}"))
            .collect::<String>()
    )];
    for (i, r) in c.rows().enumerate() {
        let cells: String = r.iter().map(|v| format!(" {v:>8.6}")).collect();
        out.push(format!("    {:>8} {cells}", c.input().symbol(i)));
    }
    out
}

fn deficiency_json(d: &DeficiencyResult) -> Value {
    json!({
        "value_bits": d.value,
        "iterations": d.iterations,
        "kkt_residual_bits": d.kkt_residual,
        "converged": d.converged,
        "randomizer": channel_json(&d.randomizer),
    })
}

fn direction_name(d: Direction) -> &'static str {
    match d {
        Direction::ZCoversY => "z_covers_y",
        Direction::YCoversZ => "y_covers_z",
    }
}

pub fn shannon_json(sh: &ShannonSummary) -> Value {
    json!({
        "i_sy_bits": sh.i_sy,
        "i_sz_bits": sh.i_sz,
        "i_sy_given_z_bits": sh.i_sy_given_z,
        "i_sz_given_y_bits": sh.i_sz_given_y,
        "i_s_yz_bits": sh.i_s_yz,
    })
}

impl Report {
    pub fn new(
        command: &str,
        sha256: &str,
        joint: &JointDist,
        options: Map<String, Value>,
    ) -> Self {
        let mut root = Map::new();
        root.insert("schema".into(), SCHEMA.into());
        root.insert("units".into(), "bits".into());
        root.insert("command".into(), command.into());
        root.insert(
            "tool".into(),
            json!({"name": "pidkit", "version": env!("CARGO_PKG_VERSION")}),
        );
        root.insert("input".into(), json!({"sha256": sha256}));
        root.insert("distribution".into(), format::to_json_value(joint));
        root.insert("options".into(), Value::Object(options));
        root.insert("shannon".into(), shannon_json(&ShannonSummary::of(joint)));
        let (ns, ny, nz) = joint.dims();
        let lines = vec![
            format!("pidkit {} {command}", env!("CARGO_PKG_VERSION")),
            format!("input sha256 {sha256}"),
            format!("alphabets |S|={ns} |Y|={ny} |Z|={nz}"),
        ];
        Report {
            root,
            lines,
            converged: true,
            failures: Vec::new(),
        }
    }

    pub fn root(&self) -> &Map<String, Value> {
        &self.root
    }

    pub fn option(&mut self, key: &str, value: impl Into<Value>) {
        if let Some(Value::Object(o)) = self.root.get_mut("options") {
            o.insert(key.into(), value.into());
        }
    }

    pub fn note(&mut self, text: String) {
        self.lines.push(format!("note: {text}"));
        let notes = self
            .root
            .entry("notes")
            .or_insert_with(|| Value::Array(Vec::new()));
        if let Value::Array(a) = notes {
            a.push(text.into());
        }
    }

    fn flag(&mut self, converged: bool) {
        self.converged &= converged;
    }

    fn decomposition(
        &mut self,
        d: &Decomposition,
        label: [&str; 2],
        mut extra: Map<String, Value>,
    ) {
        let [t, o] = label;
        let raw = d.diagnostics.raw.unwrap_or(d.components());
        extra.insert("target".into(), t.into());
        extra.insert("ui_y_bits".into(), d.ui_y.into());
        extra.insert("ui_z_bits".into(), d.ui_z.into());
        extra.insert("si_bits".into(), d.si.into());
        extra.insert("ci_bits".into(), d.ci.into());
        extra.insert("converged".into(), d.converged().into());
        extra.insert("iterations".into(), d.diagnostics.iterations.into());
        extra.insert(
            "raw".into(),
            json!({"ui_y_bits": raw.ui_y, "ui_z_bits": raw.ui_z, "si_bits": raw.si, "ci_bits": raw.ci}),
        );
        let name = d.measure_tag.name();
        let decs = self
            .root
            .entry("decompositions")
            .or_insert_with(|| Value::Object(Map::new()));
        if let Value::Object(m) = decs {
            m.insert(name.into(), Value::Object(extra));
        }
        self.flag(d.converged());
        self.lines.push(format!("measure {name}"));
        self.lines
            .push(row(&format!("UI({t};{o}\\Z)"), bits(d.ui_y)));
        self.lines
            .push(row(&format!("UI({t};Z\\{o})"), bits(d.ui_z)));
        self.lines.push(row(&format!("SI({t};{o},Z)"), bits(d.si)));
        self.lines.push(row(&format!("CI({t};{o},Z)"), bits(d.ci)));
        self.lines.push(row("converged", d.converged()));
    }

    pub fn broja(
        &mut self,
        joint: &JointDist,
        opts: &DecompOptions,
        label: [&str; 2],
    ) -> Result<(), Error> {
        let r = decompose_broja(joint, opts)?;
        let mut extra = Map::new();
        extra.insert("kkt_gap_bits".into(), r.kkt_gap.into());
        extra.insert("margin_residual".into(), r.margin_residual.into());
        if let Some(c) = r.decomposition.diagnostics.cross_check {
            extra.insert("cross_check_bits".into(), c.into());
        }
        self.decomposition(&r.decomposition, label, extra);
        Ok(())
    }

    fn deficiency_pair(d: &Decomposition) -> Map<String, Value> {
        let defs = &d.diagnostics.deficiencies;
        let mut m = Map::new();
        m.insert(
            "deficiencies".into(),
            json!({
                "z_covers_y": deficiency_json(&defs[0].1),
                "y_covers_z": deficiency_json(&defs[1].1),
            }),
        );
        m
    }

    pub fn output(
        &mut self,
        joint: &JointDist,
        opts: &DecompOptions,
        label: [&str; 2],
    ) -> Result<(), Error> {
        let d = decompose_output(joint, opts)?;
        let extra = Self::deficiency_pair(&d);
        self.decomposition(&d, label, extra);
        Ok(())
    }

    pub fn input(
        &mut self,
        joint: &JointDist,
        opts: &DecompOptions,
        label: [&str; 2],
    ) -> Result<(), Error> {
        let d = decompose_input(joint, opts)?;
        let mut extra = Self::deficiency_pair(&d);
        let a = projected_information(joint, Projection::YOntoZ, opts)?.value;
        let b = projected_information(joint, Projection::ZOntoY, opts)?.value;
        extra.insert(
            "projected_information_bits".into(),
            json!({"y_onto_z": a, "z_onto_y": b}),
        );
        self.decomposition(&d, label, extra);
        Ok(())
    }

    fn deficiency_block(&mut self, kind: &str, direction: Direction, d: &DeficiencyResult) {
        let mut v = deficiency_json(d);
        v["kind"] = kind.into();
        v["direction"] = direction_name(direction).into();
        self.root.insert("deficiency".into(), v);
        self.flag(d.converged);
        self.lines.push(format!(
            "{kind} deficiency, {}",
            direction_name(direction).replace('_', " ")
        ));
        self.lines.push(row("value", bits(d.value)));
        self.lines.push(row("iterations", d.iterations));
        self.lines
            .push(row("kkt_residual", format!("{:.6e}", d.kkt_residual)));
        self.lines.push(row("converged", d.converged));
        self.lines.push("  randomizer".into());
        self.lines.extend(channel_lines(&d.randomizer));
    }

    pub fn output_deficiency(
        &mut self,
        joint: &JointDist,
        opts: &DecompOptions,
        dir: Direction,
    ) -> Result<(), Error> {
        let (pi, mu) = forward_pair(joint, Var::S, Var::Z, opts.drop_null)?;
        let (_, kappa) = forward_pair(joint, Var::S, Var::Y, opts.drop_null)?;
        let d = match dir {
            Direction::ZCoversY => output_deficiency(&pi, &mu, &kappa, &opts.solver)?,
            Direction::YCoversZ => output_deficiency(&pi, &kappa, &mu, &opts.solver)?,
        };
        self.deficiency_block("output", dir, &d);
        Ok(())
    }

    pub fn input_deficiency(
        &mut self,
        joint: &JointDist,
        opts: &DecompOptions,
        dir: Direction,
    ) -> Result<(), Error> {
        let (py, kb) = forward_pair(joint, Var::Y, Var::S, opts.drop_null)?;
        let (pz, mb) = forward_pair(joint, Var::Z, Var::S, opts.drop_null)?;
        let d = match dir {
            Direction::ZCoversY => input_deficiency(&py, &mb, &kb, &opts.solver)?,
            Direction::YCoversZ => input_deficiency(&pz, &kb, &mb, &opts.solver)?,
        };
        self.deficiency_block("input", dir, &d);
        Ok(())
    }

    pub fn blackwell(
        &mut self,
        joint: &JointDist,
        input_side: bool,
        dir: Direction,
        drop_null: bool,
    ) -> Result<(), Error> {
        let cert: OrderCertificate = if input_side {
            let (py, kb) = forward_pair(joint, Var::Y, Var::S, drop_null)?;
            let (pz, mb) = forward_pair(joint, Var::Z, Var::S, drop_null)?;
            match dir {
                Direction::ZCoversY => input_degradation_test(&mb, &kb, &py, ORDER_TOL)?,
                Direction::YCoversZ => input_degradation_test(&kb, &mb, &pz, ORDER_TOL)?,
            }
        } else {
            let (pi, mu) = forward_pair(joint, Var::S, Var::Z, drop_null)?;
            let (_, kappa) = forward_pair(joint, Var::S, Var::Y, drop_null)?;
            match dir {
                Direction::ZCoversY => degradation_test(&mu, &kappa, &pi, ORDER_TOL)?,
                Direction::YCoversZ => degradation_test(&kappa, &mu, &pi, ORDER_TOL)?,
            }
        };
        let mode = if input_side {
            "input_degraded"
        } else {
            "degradation"
        };
        let mut v = json!({
            "mode": mode,
            "direction": direction_name(dir),
            "holds": cert.holds,
            "l1_gap": cert.l1_gap,
        });
        self.lines.push(format!(
            "{} test, {}",
            mode.replace('_', "-"),
            direction_name(dir).replace('_', " ")
        ));
        self.lines.push(row("holds", cert.holds));
        self.lines
            .push(row("l1_gap", format!("{:.6}", cert.l1_gap)));
        if let (true, Some(lam)) = (cert.holds, &cert.randomizer) {
            v["randomizer"] = channel_json(lam);
            self.lines.push("  randomizer".into());
            self.lines.extend(channel_lines(lam));
        }
        self.root.insert("blackwell".into(), v);
        Ok(())
    }

    pub fn skr(
        &mut self,
        joint: &JointDist,
        restarts: usize,
        opts: &DecompOptions,
    ) -> Result<(), Error> {
        let r = skr_report(joint, restarts, opts)?;
        let adversary = format!("{:?}", r.active_adversary);
        self.root.insert(
            "skr".into(),
            json!({
                "lower_trivial_bits": r.lower_trivial,
                "upper_trivial_bits": r.upper_trivial,
                "one_way_upper_bits": r.one_way_upper_ui,
                "intrinsic_upper_bits": r.intrinsic_upper,
                "simulatable_y_by_z": r.simulatable_y_by_z,
                "simulatable_s_by_z": r.simulatable_s_by_z,
                "active_adversary": adversary,
            }),
        );
        self.lines.push("secret key rate".into());
        self.lines
            .push(row("lower (trivial)", bits(r.lower_trivial)));
        self.lines
            .push(row("upper (trivial)", bits(r.upper_trivial)));
        self.lines
            .push(row("one-way upper", bits(r.one_way_upper_ui)));
        self.lines
            .push(row("intrinsic upper", bits(r.intrinsic_upper)));
        self.lines
            .push(row("Y simulatable by Z", r.simulatable_y_by_z));
        self.lines
            .push(row("S simulatable by Z", r.simulatable_s_by_z));
        self.lines.push(row("active_adversary", adversary));
        Ok(())
    }

    /// Records audit outcomes; `residual` is `None` when the inputs were
    /// missing from the report.
    pub fn audit(&mut self, entries: Vec<(String, bool, Option<f64>)>) {
        let mut list = Vec::with_capacity(entries.len());
        self.lines.push("audit".into());
        for (name, pass, residual) in entries {
            let shown = residual.map_or("missing".to_string(), |r| format!("{r:.2e}"));
            self.lines.push(format!(
                "  {} {name:<48} residual {shown}",
                if pass { "PASS" } else { "FAIL" }
            ));
            if !pass {
                self.failures.push(format!("{name} (residual {shown})"));
            }
            list.push(json!({"invariant": name, "pass": pass, "residual": residual}));
        }
        self.root.insert("audit".into(), Value::Array(list));
    }

    pub fn failed_invariants(&self) -> &[String] {
        &self.failures
    }

    pub fn converged(&self) -> bool {
        self.converged
    }

    pub fn to_json(&self) -> String {
        let mut root = self.root.clone();
        root.insert("converged".into(), self.converged.into());
        format::write_value(&Value::Object(root))
    }

    pub fn to_table(&self) -> String {
        let mut out = self.lines.join("\n");
        out.push('\n');
        if !self.converged {
            out.push_str("NOT CONVERGED: results above are the last iterates\n");
        }
        out
    }
}
