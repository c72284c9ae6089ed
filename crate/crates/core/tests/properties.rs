mod common;

use common::*;
use pidkit::broja::{decompose_broja, polytope, tensor, transport_margins, ui_broja};
use pidkit::decomp::identity_residuals;
use pidkit::decomp_input::{decompose_input, si_red};
use pidkit::decomp_output::decompose_output;
use pidkit::deficiency::{
    degradation_test, input_deficiency, input_degradation_test, output_deficiency, ORDER_TOL,
};
use pidkit::oracle::{
    random_channel, random_decision_problem, random_joint, random_prior, InstanceSpec,
};
use pidkit::probcore::{
    compose, cond_mutual_info, entropy, forward_pair, kl, mutual_info, optimal_risk, Alphabet,
    JointDist, Prior, ShannonSummary, Var,
};
use pidkit::DecompOptions;
use proptest::prelude::*;

const LN2: f64 = std::f64::consts::LN_2;

fn opts() -> DecompOptions {
    DecompOptions::default()
}

fn joint() -> impl Strategy<Value = JointDist> {
    (2usize..=3, 2usize..=3, 2usize..=3, any::<u64>())
        .prop_map(|(a, b, c, seed)| random_joint(InstanceSpec::new(a, b, c, seed)))
}

/// Joint in which `Y` is a garbling of `Z` given nothing else: `S − Z − Y`.
fn markov_joint() -> impl Strategy<Value = JointDist> {
    (2usize..=3, 2usize..=3, 2usize..=3, any::<u64>()).prop_map(|(ns, ny, nz, seed)| {
        let pi = random_prior(ns, seed);
        let mu = random_channel(ns, nz, seed ^ 1);
        let lam = random_channel(nz, ny, seed ^ 2);
        joint_from_fn(ns, ny, nz, |s, y, z| {
            pi.mass()[s] * mu.get(s, z) * lam.get(z, y)
        })
    })
}

fn channels() -> impl Strategy<Value = (Prior, pidkit::probcore::Channel, pidkit::probcore::Channel)>
{
    (2usize..=3, 2usize..=3, 2usize..=3, any::<u64>()).prop_map(|(ns, ny, nz, seed)| {
        (
            random_prior(ns, seed),
            random_channel(ns, nz, seed ^ 3),
            random_channel(ns, ny, seed ^ 4),
        )
    })
}

fn ui(j: &JointDist) -> f64 {
    ui_broja(j, Var::Y, &opts()).unwrap().decomposition.ui_y
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shannon_basics(j in joint()) {
        let i_sy = mutual_info(&j, &[Var::S], &[Var::Y]);
        prop_assert!((i_sy - mutual_info(&j, &[Var::Y], &[Var::S])).abs() < 1e-12);
        let sh = ShannonSummary::of(&j);
        prop_assert!((sh.i_sy + sh.i_sz_given_y - sh.i_s_yz).abs() < 1e-12);
        prop_assert!((sh.i_sz + sh.i_sy_given_z - sh.i_s_yz).abs() < 1e-12);
        prop_assert!(entropy(&j.marginal(&[Var::S])) <= (j.dims().0 as f64).log2() + 1e-12);
        let pi = Prior::new(j.s().clone(), j.marginal(&[Var::S])).unwrap();
        prop_assert!(kl(&pi, &Prior::uniform(j.s().clone())).unwrap() >= 0.0);
    }

    #[test]
    fn output_deficiency_contract((pi, mu, kappa) in channels()) {
        let d = output_deficiency(&pi, &mu, &kappa, &opts().solver).unwrap();
        prop_assert!(d.converged && d.value >= 0.0);
        prop_assert!(d.randomizer.stochasticity_defect() < 1e-9);
        for w in d.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        // Pinsker and Jensen: the KL deficiency dominates the squared L1 gap.
        let cert = degradation_test(&mu, &kappa, &pi, ORDER_TOL).unwrap();
        prop_assert!(d.value + 1e-9 >= cert.l1_gap.powi(2) / (2.0 * LN2));
        if cert.holds {
            prop_assert!(d.value <= 1e-6);
        }
    }

    #[test]
    fn garblings_have_zero_deficiency_and_lose_every_game((pi, mu, _k) in channels(), seed in any::<u64>()) {
        let lam = random_channel(mu.n_out(), 3, seed);
        let kappa = compose(&lam, &mu).unwrap();
        let cert = degradation_test(&mu, &kappa, &pi, ORDER_TOL).unwrap();
        prop_assert!(cert.holds);
        let rebuilt = compose(cert.randomizer.as_ref().unwrap(), &mu).unwrap();
        let err: f64 = rebuilt.as_flat().iter().zip(kappa.as_flat()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-7);
        prop_assert!(output_deficiency(&pi, &mu, &kappa, &opts().solver).unwrap().value <= 1e-6);
        for k in 0..20u64 {
            let dp = random_decision_problem(&pi, 2 + (k as usize % 3), seed.wrapping_add(k));
            prop_assert!(optimal_risk(&dp, &kappa).unwrap() >= optimal_risk(&dp, &mu).unwrap() - 1e-9);
        }
    }

    #[test]
    fn input_deficiency_contract((pi, mu, kappa) in channels(), seed in any::<u64>()) {
        // Reverse orientation: channels into S from Y and from Z.
        let ns = pi.len();
        let mu_bar = random_channel(mu.n_out(), ns, seed);
        let kappa_bar = random_channel(kappa.n_out(), ns, seed ^ 9);
        let py = random_prior(kappa.n_out(), seed ^ 5);
        let d = input_deficiency(&py, &mu_bar, &kappa_bar, &opts().solver).unwrap();
        prop_assert!(d.converged && d.value >= 0.0);
        for w in d.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
        let cert = input_degradation_test(&mu_bar, &kappa_bar, &py, ORDER_TOL).unwrap();
        prop_assert!(d.value + 1e-9 >= cert.l1_gap.powi(2) / (2.0 * LN2));
        // A pre-processed μ̄ is always reachable.
        let lam = random_channel(kappa.n_out(), mu.n_out(), seed ^ 7);
        let reachable = compose(&mu_bar, &lam).unwrap();
        prop_assert!(input_deficiency(&py, &mu_bar, &reachable, &opts().solver).unwrap().value <= 1e-6);
        prop_assert!(input_degradation_test(&mu_bar, &reachable, &py, ORDER_TOL).unwrap().holds);
    }

    #[test]
    fn broja_contract(j in joint()) {
        let r = ui_broja(&j, Var::Y, &opts()).unwrap();
        prop_assert!(r.converged);
        prop_assert!(polytope(&j).margin_residual(&r.q_star) <= 1e-8);
        let v = cond_mutual_info(&r.q_star, &[Var::S], &[Var::Y], &[Var::Z]);
        prop_assert!((v - r.decomposition.diagnostics.raw.unwrap().ui_y).abs() <= 1e-6);
        for w in r.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn measure_ordering(j in joint()) {
        let b = decompose_broja(&j, &opts()).unwrap().decomposition;
        let o = decompose_output(&j, &opts()).unwrap();
        let n = decompose_input(&j, &opts()).unwrap();
        for d in [&b, &o, &n] {
            prop_assert!(identity_residuals(d, &j).max_abs() <= 1e-6);
        }
        prop_assert!(b.ui_y >= o.ui_y - 1e-6 && b.ui_y >= n.ui_y - 1e-6);
        prop_assert!(b.si <= o.si + 1e-6 && b.si <= n.si + 1e-6);
        prop_assert!((si_red(&j, &opts()).unwrap() - n.si).abs() <= 1e-6);
        // The unique information controls how far Y is from a garbling of Z.
        let (pi, mu) = forward_pair(&j, Var::S, Var::Z, false).unwrap();
        let (_, kappa) = forward_pair(&j, Var::S, Var::Y, false).unwrap();
        let cert = degradation_test(&mu, &kappa, &pi, ORDER_TOL).unwrap();
        prop_assert!(cert.l1_gap <= (2.0 * LN2 * (b.ui_y + 1e-9)).sqrt() + 1e-9);
    }

    #[test]
    fn markov_chains_have_no_unique_information(j in markov_joint()) {
        let (pi, mu) = forward_pair(&j, Var::S, Var::Z, false).unwrap();
        let (_, kappa) = forward_pair(&j, Var::S, Var::Y, false).unwrap();
        prop_assert!(degradation_test(&mu, &kappa, &pi, ORDER_TOL).unwrap().holds);
        prop_assert!(output_deficiency(&pi, &mu, &kappa, &opts().solver).unwrap().value <= 1e-7);
        prop_assert!(decompose_output(&j, &opts()).unwrap().ui_y <= 1e-6);
        prop_assert!(ui(&j) <= 1e-6);
    }

    #[test]
    fn decompositions_only_see_pair_marginals(j in joint()) {
        // Re-couple Y and Z given S without touching the (S,Y), (S,Z) marginals.
        let (ns, ny, nz) = j.dims();
        let q = joint_from_fn(ns, ny, nz, |s, y, z| {
            let py: f64 = (0..nz).map(|z| j.get(s, y, z)).sum();
            let pz: f64 = (0..ny).map(|y| j.get(s, y, z)).sum();
            let w: f64 = (0..ny).flat_map(|y| (0..nz).map(move |z| (y, z))).map(|(y, z)| j.get(s, y, z)).sum();
            py * pz / w
        });
        prop_assert!(polytope(&j).contains(&q));
        let (a, b) = (decompose_output(&j, &opts()).unwrap(), decompose_output(&q, &opts()).unwrap());
        prop_assert!((a.ui_y - b.ui_y).abs() <= 1e-6 && (a.si - b.si).abs() <= 1e-6);
        prop_assert!((ui(&j) - ui(&q)).abs() <= 1e-6);
    }

    #[test]
    fn transport_lands_in_the_new_polytope(j in joint(), seed in any::<u64>(), t in 0.0f64..1.0) {
        let mut r = rng(seed);
        let q = ui_broja(&j, Var::Y, &opts()).unwrap().q_star;
        let (p2, _) = perturb(&mut r, &j, t);
        let q2 = transport_margins(&q, &j, &p2).unwrap();
        prop_assert!(polytope(&p2).margin_residual(&q2) <= 1e-9);
        prop_assert!(q.l1_distance(&q2).unwrap() <= 5.0 * j.l1_distance(&p2).unwrap() + 1e-12);
        prop_assert_eq!(transport_margins(&q, &j, &j).unwrap(), q);
    }

    #[test]
    fn tensor_with_point_mass_keeps_values(j in joint()) {
        let one = Alphabet::range(1);
        let point = JointDist::new(one.clone(), one.clone(), one, vec![1.0]).unwrap();
        let t = tensor(&j, &point).unwrap();
        prop_assert_eq!(t.table(), j.table());
        prop_assert!((ui(&t) - ui(&j)).abs() <= 1e-9);
    }

    #[test]
    fn swapping_y_and_z_swaps_unique_informations(j in joint()) {
        let a = decompose_broja(&j, &opts()).unwrap().decomposition;
        let b = decompose_broja(&j.swap_yz(), &opts()).unwrap().decomposition;
        prop_assert!((a.ui_y - b.ui_z).abs() <= 1e-6 && (a.si - b.si).abs() <= 1e-6 && (a.ci - b.ci).abs() <= 1e-6);
    }
}
