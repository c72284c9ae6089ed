//! Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Runs without the libtest harness so the lines are
//! always printed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use common::*;
use pidkit::broja::{
    decompose_broja, ipf_projection, polytope, tensor, transport_margins, ui_broja, IpfOptions,
};
use pidkit::decomp::identity_residuals;
use pidkit::decomp_input::{decompose_input, projected_information, Projection};
use pidkit::decomp_output::decompose_output;
use pidkit::deficiency::{degradation_test, input_deficiency, output_deficiency, ORDER_TOL};
use pidkit::oracle::{
    grid_deficiency_oracle, grid_ui_oracle, random_channel, random_decision_problem, random_joint,
    random_prior, DeficiencyKind, InstanceSpec,
};
use pidkit::probcore::{
    compose, forward_pair, mutual_info, optimal_risk, JointDist, ShannonSummary, Var,
};
use pidkit::secrecy::{active_adversary_assessment, intrinsic_information, ActiveAdversary};
use pidkit::DecompOptions;
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn opts() -> DecompOptions {
    DecompOptions::default()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn close(name: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    ensure((got - want).abs() <= tol, || {
        format!("{name} = {got:.9}, expected {want} ± {tol:e}")
    })
}

fn ui(j: &JointDist) -> f64 {
    ui_broja(j, Var::Y, &opts()).unwrap().decomposition.ui_y
}

fn c1() -> Outcome {
    let j = fixture("ex1a");
    let d = decompose_broja(&j, &opts())
        .map_err(|e| e.to_string())?
        .decomposition;
    close(
        "I(S;YZ)",
        mutual_info(&j, &[Var::S], &[Var::Y, Var::Z]),
        2.0,
        1e-4,
    )?;
    close("SI", d.si, 1.5, 1e-4)?;
    close("CI", d.ci, 0.5, 1e-4)?;
    close("UI(S;Y\\Z)", d.ui_y, 0.0, 1e-4)?;
    Ok(format!("SI={:.6} CI={:.6} UI={:.6}", d.si, d.ci, d.ui_y))
}

fn c2() -> Outcome {
    let j = fixture("ex1b");
    let d = decompose_broja(&j, &opts())
        .map_err(|e| e.to_string())?
        .decomposition;
    close(
        "I(S;YZ)",
        mutual_info(&j, &[Var::S], &[Var::Y, Var::Z]),
        2.0,
        1e-4,
    )?;
    close("SI", d.si, 0.5, 1e-4)?;
    close("CI", d.ci, 0.5, 1e-4)?;
    close("UI(S;Y\\Z)", d.ui_y, 1.0, 1e-4)?;
    Ok(format!("SI={:.6} CI={:.6} UI={:.6}", d.si, d.ci, d.ui_y))
}

fn c3() -> Outcome {
    let v = intrinsic_information(&fixture("ex1a"), 16, &opts()).map_err(|e| e.to_string())?;
    close("I(S;Y↓Z) on the first toy distribution", v, 1.5, 1e-3)?;
    Ok(format!("{v:.6}"))
}

fn c4() -> Outcome {
    let j = fixture("erase");
    let u = ui(&j);
    close("UI(S;Y\\Z)", u, 1.0 / 6.0, 1e-4)?;
    let (py, kb) = forward_pair(&j, Var::Y, Var::S, false).unwrap();
    let (pz, mb) = forward_pair(&j, Var::Z, Var::S, false).unwrap();
    let a = input_deficiency(&py, &mb, &kb, &opts().solver)
        .unwrap()
        .value;
    let b = input_deficiency(&pz, &kb, &mb, &opts().solver)
        .unwrap()
        .value;
    close("δ_i(μ̄,κ̄)", a, 0.0, 1e-6)?;
    close("δ_i(κ̄,μ̄)", b, 0.0, 1e-6)?;
    let (pi, ky) = forward_pair(&j, Var::S, Var::Y, false).unwrap();
    let (_, kz) = forward_pair(&j, Var::S, Var::Z, false).unwrap();
    let cert = degradation_test(&ky, &kz, &pi, ORDER_TOL).unwrap();
    ensure(cert.holds, || {
        format!("Z is not a garbling of Y (gap {:e})", cert.l1_gap)
    })?;
    Ok(format!(
        "UI={u:.6} δ_i=({a:.1e},{b:.1e}) gap={:.1e}",
        cert.l1_gap
    ))
}

fn c5() -> Outcome {
    let j = fixture("gisin");
    let d = decompose_broja(&j, &opts()).unwrap().decomposition;
    close("SI", d.si, 0.02, 0.005)?;
    close("CI", d.ci, 0.55, 0.005)?;
    let uy = ui(&j);
    let us = ui_broja(&j, Var::S, &opts()).unwrap().decomposition.ui_y;
    ensure(uy <= 1e-4 && us <= 1e-4, || {
        format!("UI(S;Y\\Z)={uy:e}, UI(Y;S\\Z)={us:e}")
    })?;
    let verdict = active_adversary_assessment(&j, &opts());
    ensure(verdict == ActiveAdversary::ZeroRate, || {
        format!("{verdict:?}")
    })?;
    Ok(format!(
        "SI={:.6} CI={:.6} UI=({uy:.1e},{us:.1e}) {verdict:?}",
        d.si, d.ci
    ))
}

fn c6() -> Outcome {
    for (name, want) in [("xor", [0.0, 0.0, 0.0, 1.0]), ("rdn", [0.0, 0.0, 1.0, 0.0])] {
        let j = fixture(name);
        let all = [
            decompose_broja(&j, &opts()).unwrap().decomposition,
            decompose_output(&j, &opts()).unwrap(),
            decompose_input(&j, &opts()).unwrap(),
        ];
        for d in all {
            let got = [d.ui_y, d.ui_z, d.si, d.ci];
            for (g, w) in got.iter().zip(want) {
                ensure((g - w).abs() <= 1e-5, || {
                    format!("{name} {}: {got:?}", d.measure_tag.name())
                })?;
            }
        }
    }
    Ok("XOR (0,0,0,1), RDN (0,0,1,0) under all measures".into())
}

fn c7() -> Outcome {
    let mut r = rng(7);
    let mut worst = [0.0f64; 5];
    for i in 0..500 {
        let j = random_sized(&mut r, 2, 3);
        let sh = ShannonSummary::of(&j);
        let b = decompose_broja(&j, &opts())
            .map_err(|e| format!("joint {i}: {e}"))?
            .decomposition;
        let o = decompose_output(&j, &opts()).unwrap();
        let n = decompose_input(&j, &opts()).unwrap();
        for d in [&b, &o, &n] {
            let res = identity_residuals(d, &j).max_abs();
            worst[0] = worst[0].max(res);
            ensure(res <= 1e-5, || {
                format!(
                    "joint {i} {}: identity residual {res:e}",
                    d.measure_tag.name()
                )
            })?;
            let min = d.ui_y.min(d.ui_z).min(d.si).min(d.ci);
            worst[1] = worst[1].min(min);
            ensure(min >= -1e-6, || {
                format!(
                    "joint {i} {}: negative component {min:e}",
                    d.measure_tag.name()
                )
            })?;
            let lo = sh.i_sy - sh.i_sz - 1e-6;
            let hi = sh.i_sy.min(sh.i_sy_given_z) + 1e-6;
            ensure(lo <= d.ui_y && d.ui_y <= hi, || {
                format!(
                    "joint {i} {}: UI {} outside [{lo}, {hi}]",
                    d.measure_tag.name(),
                    d.ui_y
                )
            })?;
        }
        let proj = projected_information(&j, Projection::YOntoZ, &opts())
            .unwrap()
            .value;
        let (py, kb) = forward_pair(&j, Var::Y, Var::S, false).unwrap();
        let (_, mb) = forward_pair(&j, Var::Z, Var::S, false).unwrap();
        let d_i = input_deficiency(&py, &mb, &kb, &opts().solver)
            .unwrap()
            .value;
        let p11 = (proj - (sh.i_sy - d_i)).abs();
        worst[2] = worst[2].max(p11);
        ensure(p11 <= 1e-5, || {
            format!("joint {i}: projected information off by {p11:e}")
        })?;
        let d_o = o.diagnostics.deficiencies[0].1.value;
        let sandwich = [d_o - o.ui_y, o.ui_y - b.ui_y, d_i - n.ui_y, n.ui_y - b.ui_y];
        let s = sandwich.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        worst[3] = worst[3].max(s);
        ensure(s <= 1e-5, || {
            format!("joint {i}: sandwich violated by {s:e} {sandwich:?}")
        })?;
    }
    Ok(format!(
        "500 joints; max identity residual {:.1e}, min component {:.1e}, projection identity gap {:.1e}, sandwich slack {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn c8() -> Outcome {
    let mut ratio = [0.0f64; 3];
    for seed in 0..100 {
        let j = random_joint(InstanceSpec::new(2, 2, 2, 8_000 + seed));
        let u = ui_broja(&j, Var::Y, &opts()).unwrap();
        let raw = u.decomposition.diagnostics.raw.unwrap().ui_y;
        let g = grid_ui_oracle(&j, 0.002).unwrap();
        let e = (raw - g.value).abs();
        ratio[0] = ratio[0].max(e / g.resolution_bound);
        ensure(e <= g.resolution_bound, || {
            format!(
                "seed {seed}: UI {raw} vs grid {} ± {}",
                g.value, g.resolution_bound
            )
        })?;

        let (pi, mu) = forward_pair(&j, Var::S, Var::Z, false).unwrap();
        let (_, ka) = forward_pair(&j, Var::S, Var::Y, false).unwrap();
        let (py, kb) = forward_pair(&j, Var::Y, Var::S, false).unwrap();
        let (pz, mb) = forward_pair(&j, Var::Z, Var::S, false).unwrap();
        let cases = [
            (
                output_deficiency(&pi, &mu, &ka, &opts().solver),
                grid_deficiency_oracle(&pi, &mu, &ka, 0.005, DeficiencyKind::Output),
            ),
            (
                output_deficiency(&pi, &ka, &mu, &opts().solver),
                grid_deficiency_oracle(&pi, &ka, &mu, 0.005, DeficiencyKind::Output),
            ),
            (
                input_deficiency(&py, &mb, &kb, &opts().solver),
                grid_deficiency_oracle(&py, &mb, &kb, 0.005, DeficiencyKind::Input),
            ),
            (
                input_deficiency(&pz, &kb, &mb, &opts().solver),
                grid_deficiency_oracle(&pz, &kb, &mb, 0.005, DeficiencyKind::Input),
            ),
        ];
        for (k, (d, g)) in cases.into_iter().enumerate() {
            let (d, g) = (d.unwrap(), g.unwrap());
            let e = (d.value - g.value).abs();
            ratio[1 + k / 2] = ratio[1 + k / 2].max(e / g.resolution_bound);
            ensure(e <= g.resolution_bound, || {
                format!(
                    "seed {seed} case {k}: solver {} vs grid {} ± {}",
                    d.value, g.value, g.resolution_bound
                )
            })?;
        }
    }
    Ok(format!(
        "100 instances; worst error / bound: UI {:.3}, output {:.3}, input {:.3}",
        ratio[0], ratio[1], ratio[2]
    ))
}

fn c9() -> Outcome {
    let mut r = rng(9);
    let mut slack = f64::INFINITY;
    for i in 0..200 {
        let ns = r.random_range(2..=4);
        let (ny, nz) = (r.random_range(2..=4), r.random_range(2..=4));
        let pi = random_prior(ns, r.random());
        let mu = random_channel(ns, nz, r.random());
        // Mix a garbling of μ with noise so that small deficiencies occur too.
        let lam = random_channel(nz, ny, r.random());
        let noise = random_channel(ns, ny, r.random());
        let t: f64 = r.random_range(0.0..1.0f64).powi(3);
        let garbled = compose(&lam, &mu).unwrap();
        let rows: Vec<f64> = garbled
            .as_flat()
            .iter()
            .zip(noise.as_flat())
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        let kappa = channel(ns, ny, rows);
        let d = output_deficiency(&pi, &mu, &kappa, &opts().solver)
            .unwrap()
            .value;
        let dp = random_decision_problem(&pi, r.random_range(2..=4), r.random());
        let gap = optimal_risk(&dp, &mu).unwrap() - optimal_risk(&dp, &kappa).unwrap();
        let bound = (d.max(0.0) * std::f64::consts::LN_2 / 2.0).sqrt() * dp.loss_norm() + 1e-6;
        slack = slack.min(bound - gap);
        ensure(gap <= bound, || {
            format!("tuple {i}: risk gap {gap} > bound {bound} (δ_o = {d})")
        })?;
    }
    Ok(format!("200 tuples; min slack {slack:.3e}"))
}

fn member_of(r: &mut impl Rng, p: &JointDist) -> JointDist {
    let (ns, ny, nz) = p.dims();
    let mut t = Vec::with_capacity(ns * ny * nz);
    for s in 0..ns {
        let w: f64 = (0..ny)
            .flat_map(|y| (0..nz).map(move |z| (y, z)))
            .map(|(y, z)| p.get(s, y, z))
            .sum();
        let a: Vec<f64> = (0..ny)
            .map(|y| (0..nz).map(|z| p.get(s, y, z)).sum::<f64>() / w)
            .collect();
        let b: Vec<f64> = (0..nz)
            .map(|z| (0..ny).map(|y| p.get(s, y, z)).sum::<f64>() / w)
            .collect();
        let base = random_stochastic(r, 1, ny * nz);
        let q = ipf_projection(&base, &a, &b, &IpfOptions::default()).unwrap();
        t.extend(q.iter().map(|v| v * w));
    }
    JointDist::new(p.s().clone(), p.y().clone(), p.z().clone(), t).unwrap()
}

fn c10() -> Outcome {
    let mut r = rng(10);
    let (mut worst_res, mut worst_ratio) = (0.0f64, 0.0f64);
    for i in 0..1000 {
        let p = random_sized(&mut r, 2, 3);
        let q = member_of(&mut r, &p);
        let t = r.random_range(0.0..1.0);
        let (p2, _) = perturb(&mut r, &p, t);
        let q2 = transport_margins(&q, &p, &p2).map_err(|e| format!("triple {i}: {e}"))?;
        let res = polytope(&p2).margin_residual(&q2);
        let moved = q.l1_distance(&q2).unwrap();
        let allowed = 5.0 * p.l1_distance(&p2).unwrap() + 1e-12;
        worst_res = worst_res.max(res);
        worst_ratio = worst_ratio.max(moved / allowed);
        ensure(res <= 1e-9, || {
            format!("triple {i}: margin residual {res:e}")
        })?;
        ensure(q2.table().iter().all(|&v| v >= 0.0), || {
            format!("triple {i}: negative mass")
        })?;
        ensure(moved <= allowed, || {
            format!("triple {i}: moved {moved} > {allowed}")
        })?;
    }
    Ok(format!(
        "1000 triples; max residual {worst_res:.1e}, max ‖Q−Q′‖/5‖P−P′‖ {worst_ratio:.3}"
    ))
}

fn c11() -> Outcome {
    let mut r = rng(11);
    let mut worst = [f64::NEG_INFINITY; 5];
    let names = [
        "local op on S",
        "local op on Y",
        "side information",
        "public communication",
        "range restriction",
    ];
    for i in 0..200 {
        let j = random_sized(&mut r, 2, 3);
        let base = ui(&j);
        let k = r.random_range(2..=3);
        let ns = j.dims().0;
        let f: Vec<usize> = (0..ns).map(|_| r.random_range(0..k)).collect();
        let candidates = [
            (ui(&garble_s(&mut r, &j, k)), base),
            (ui(&garble_y(&mut r, &j, k)), base),
            (ui(&side_information(&mut r, &j, k)), base),
            (ui(&public_announcement(&j, &f, k)), base),
        ];
        for (m, (after, before)) in candidates.into_iter().enumerate() {
            worst[m] = worst[m].max(after - before);
            ensure(after <= before + 1e-5, || {
                format!("instance {i}, {}: {before} -> {after}", names[m])
            })?;
        }
        // Range restriction: refined pair ((S,S′),(Y,Y′)) against (S,Y).
        let fine = random_joint(InstanceSpec::new(ns * 2, 4, j.dims().2, r.random()));
        let coarse = restrict_range(&fine, 2, 2);
        let (uf, uc) = (ui(&fine), ui(&coarse));
        worst[4] = worst[4].max(uc - uf);
        ensure(uc <= uf + 1e-5, || {
            format!("instance {i}, range restriction: refined {uf} < coarse {uc}")
        })?;
    }
    let summary: Vec<String> = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect();
    Ok(format!(
        "200 instances each; max increase: {}",
        summary.join(", ")
    ))
}

fn c12() -> Outcome {
    let mut r = rng(12);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let a = random_joint(InstanceSpec::new(2, 2, 2, r.random()));
        let b = random_joint(InstanceSpec::new(2, 2, 2, r.random()));
        let t = tensor(&a, &b).unwrap();
        let e = (ui(&t) - ui(&a) - ui(&b)).abs();
        worst = worst.max(e);
        ensure(e <= 2e-5, || format!("pair {i}: additivity error {e:e}"))?;
    }
    Ok(format!("50 pairs; max error {worst:.1e}"))
}

fn c13() -> Outcome {
    let mut r = rng(13);
    let mut slack = f64::INFINITY;
    for i in 0..200 {
        let p = random_sized(&mut r, 2, 3);
        let t = r.random_range(0.0..0.2f64);
        let (p2, eps) = perturb(&mut r, &p, t);
        let h = binary_entropy((2.5 * eps).min(0.5));
        let (ns, ny, _) = p.dims();
        let envelope = 2.0 * h + 2.5 * eps * (ns.min(ny) as f64).log2() + 1e-5;
        let (u1, u2) = (ui(&p), ui(&p2));
        let diff = (u2 - u1).abs();
        slack = slack.min(envelope - diff);
        ensure(diff <= envelope, || {
            format!("pair {i}: |ΔUI| = {diff} > {envelope} (ε = {eps})")
        })?;
    }
    Ok(format!("200 pairs; min slack {slack:.3e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("first toy distribution, BROJA values", c1),
        ("second toy distribution, BROJA values", c2),
        ("intrinsic information of the first toy distribution", c3),
        ("erasure counterexample", c4),
        ("Gisin distribution", c5),
        ("XOR and RDN under all measures", c6),
        ("property suite on random joints", c7),
        ("oracle equivalence", c8),
        ("risk bound from the output deficiency", c9),
        ("margin transport", c10),
        ("monotonicity suite", c11),
        ("additivity under tensor products", c12),
        ("asymptotic continuity envelope", c13),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into()))
        });
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name} ({secs:.2}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name} ({secs:.2}s): {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
