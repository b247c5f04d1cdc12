//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Built with `harness = false` so the lines always reach the test output.
//! The process exits nonzero if any criterion fails.

use std::process::ExitCode;

use rand::Rng;

use picorr::harness::gen;
use picorr::harness::{verify, TheoremId, TrialConfig, VerificationReport};
use picorr::numerics::{partial_isometry_conditions, pseudoinverse, CMatrix, Tolerance, C64};
use picorr::{powers, products, wold, CovariantRep};

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        summary: summary.into(),
    }
}

fn run(id: TheoremId, trials: usize, seed: u64, falsify: bool) -> VerificationReport {
    let tol = Tolerance::default();
    let cfg = TrialConfig::for_theorem(id, seed, trials);
    verify(id, &cfg, &tol, falsify).expect("verification run")
}

fn brief(r: &VerificationReport) -> String {
    format!(
        "{} x{}: {} violations, {} skips, max residual {:.1e}",
        r.theorem_id, r.trials_run, r.equivalence_violations, r.hypothesis_skips, r.max_residual
    )
}

fn clean(r: &VerificationReport) -> bool {
    r.equivalence_violations == 0 && r.hypothesis_skips == 0
}

fn six_way() -> Outcome {
    let tol = Tolerance::default();
    let mut rng = gen::stream_rng(1, 0, 0);
    let mut disagreements = 0;
    let mut wrong = 0;
    for i in 0..1000 {
        let rows = rng.random_range(1..=8);
        let cols = rng.random_range(1..=8);
        let forced = i < 500;
        let m = if forced {
            gen::forced_pi_matrix(&mut rng, rows, cols)
        } else {
            gen::contractive_matrix(&mut rng, rows, cols)
        };
        let c = partial_isometry_conditions(&m, &tol).expect("conditions");
        if !c.unanimous() {
            disagreements += 1;
        } else if c.holds[0] != forced {
            wrong += 1;
        }
    }
    outcome(
        disagreements == 0 && wrong == 0,
        format!("1000 matrices: {disagreements} disagreements, {wrong} wrong verdicts"),
    )
}

fn fro(m: &CMatrix) -> f64 {
    m.norm()
}

fn penrose() -> Outcome {
    let tol = Tolerance::default();
    let mut rng = gen::stream_rng(2, 0, 0);
    let mut worst = 0.0_f64;
    let mut deficient = 0;
    for _ in 0..500 {
        let rows = rng.random_range(1..=12);
        let cols = rng.random_range(1..=12);
        let full = rows.min(cols);
        let rank = rng.random_range(0..=full);
        if rank < full {
            deficient += 1;
        }
        let m = gen::gaussian(&mut rng, rows, rank) * gen::gaussian(&mut rng, rank, cols);
        let p = pseudoinverse(&m, &tol).expect("pseudoinverse");
        let mp = &m * &p;
        let pm = &p * &m;
        let scale = fro(&m).max(f64::MIN_POSITIVE);
        let r = [
            fro(&(&mp * &m - &m)),
            fro(&(&pm * &p - &p)),
            fro(&(mp.adjoint() - &mp)),
            fro(&(pm.adjoint() - &pm)),
        ];
        let rel = r.iter().fold(0.0_f64, |a, &x| a.max(x)) / scale.max(1.0);
        worst = worst.max(rel);
    }
    outcome(
        worst <= 1e-10,
        format!("500 matrices ({deficient} rank-deficient): worst Penrose residual / ||M|| = {worst:.1e}"),
    )
}

fn hand_pair() -> (CovariantRep, CovariantRep) {
    let tol = Tolerance::default();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let v1 = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    let v2 = CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(s, 0.0),
            C64::new(0.0, 0.0),
            C64::new(s, 0.0),
            C64::new(0.0, 0.0),
        ],
    );
    (
        CovariantRep::scalar_row(vec![v1], &tol).expect("rep"),
        CovariantRep::scalar_row(vec![v2], &tol).expect("rep"),
    )
}

fn product_commuting() -> Outcome {
    let r = run(TheoremId::ProductCommuting, 500, 3, false);
    let (a, b) = hand_pair();
    let c = products::commuting_projection_test(&a, &b).expect("hand pair");
    let hand = a.is_partial_isometric()
        && b.is_partial_isometric()
        && !c.product_is_pi
        && !c.projections_commute;
    outcome(
        clean(&r) && hand,
        format!(
            "{}; hand pair: product PI {}, projections commute {} (commutator {:.3})",
            brief(&r),
            c.product_is_pi,
            c.projections_commute,
            c.commutator_norm
        ),
    )
}

fn product_chain() -> Outcome {
    let r = run(TheoremId::ProductChain, 200, 4, false);
    outcome(clean(&r), brief(&r))
}

fn product_pinv() -> Outcome {
    let r = run(TheoremId::ProductPinv, 200, 5, false);
    outcome(clean(&r) && r.max_residual <= 1e-8, brief(&r))
}

fn defect_dilation() -> Outcome {
    let r = run(TheoremId::DefectDilation, 300, 6, false);
    outcome(clean(&r), brief(&r))
}

fn chain_and_powers() -> Outcome {
    let rs = [
        run(TheoremId::ChainRange, 500, 7, false),
        run(TheoremId::PowerChain, 500, 7, false),
        run(TheoremId::PowerStep, 500, 7, false),
    ];
    outcome(
        rs.iter().all(clean),
        rs.iter().map(brief).collect::<Vec<_>>().join("; "),
    )
}

fn regular() -> Outcome {
    let rs = [
        run(TheoremId::GenInverseKernel, 100, 8, false),
        run(TheoremId::RegularPower, 100, 8, false),
    ];
    outcome(
        rs.iter().all(clean),
        rs.iter().map(brief).collect::<Vec<_>>().join("; "),
    )
}

fn weighted_shifts() -> Outcome {
    let r = run(TheoremId::WeightedShift, 100, 9, false);
    outcome(clean(&r), brief(&r))
}

fn root() -> Outcome {
    let tol = Tolerance::default();
    let rs = [
        run(TheoremId::Root, 300, 10, false),
        run(TheoremId::KernelEquality, 300, 10, false),
        run(TheoremId::RootOrthogonality, 300, 10, false),
    ];
    let mut v = CMatrix::zeros(2, 2);
    v[(0, 1)] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let rep = CovariantRep::scalar_row(vec![v], &tol).expect("rep");
    let hand = powers::root_criterion(&rep, 2).expect("root criterion");
    let gupta = powers::gupta_criterion(&rep, 2).expect("kernel criterion");
    let rejected = hand.applicability.is_applicable()
        && !hand.cond_a
        && !hand.rep_is_pi
        && !gupta.applicability.is_applicable();
    outcome(
        rs.iter().all(|r| r.equivalence_violations == 0) && rs[0].hypothesis_skips == 0 && rejected,
        format!(
            "{}; [[0, 1/sqrt2], [0, 0]]: cond_a {}, PI {}, kernel criterion applicable {}",
            rs.iter().map(brief).collect::<Vec<_>>().join("; "),
            hand.cond_a,
            hand.rep_is_pi,
            gupta.applicability.is_applicable()
        ),
    )
}

fn wold_fixtures() -> Outcome {
    let tol = Tolerance::default();
    let mut built = 0;
    let mut failures = Vec::new();
    let mut worst = 0.0_f64;
    let mut trial = 0;
    while built < 100 {
        let mut rng = gen::stream_rng(11, trial, 0);
        trial += 1;
        let fixture = if trial % 3 == 0 {
            let n = rng.random_range(1..=2);
            let d = rng.random_range(1..=4);
            let a = gen::surjective_scalar_rep(&mut rng, n, d, true, &tol);
            let extra = rng.random_range(1..=3);
            let u: Vec<CMatrix> = (0..n)
                .map(|_| {
                    gen::random_isometry(&mut rng, extra, extra)
                        * C64::new(1.0 / (n as f64).sqrt(), 0.0)
                })
                .collect();
            // a row of n scaled unitaries is a co-isometry onto C^extra
            let b = CovariantRep::scalar_row(u, &tol);
            match (a, b) {
                (Ok(a), Ok(b)) => CovariantRep::direct_sum(&[&a, &b]),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        } else {
            let a = gen::regular_graph_rep(&mut rng, 5, true, &tol);
            let b = gen::regular_graph_rep(&mut rng, 4, true, &tol);
            match (a, b) {
                (Ok(a), Ok(b)) => CovariantRep::direct_sum(&[&a, &b]),
                (Err(e), _) | (_, Err(e)) => Err(e),
            }
        };
        let Ok(rep) = fixture else { continue };
        built += 1;
        let pi = rep.is_partial_isometric();
        let regular = powers::is_regular(&rep).expect("regularity");
        let w = wold::wold_decompose_unchecked(&rep, rep.h_dim()).expect("decomposition");
        for f in [&w.primal, &w.dual] {
            worst = worst
                .max(f.direct_sum_residual)
                .max(f.orthogonality_residual);
        }
        worst = worst.max(w.dual_distance);
        let ok = pi
            && regular
            && w.primal.direct_sum_residual <= 1e-8
            && w.primal.orthogonality_residual <= 1e-8
            && w.dual.direct_sum_residual <= 1e-8
            && w.dual.orthogonality_residual <= 1e-8
            && w.forms_coincide
            && w.dual_distance <= 1e-8;
        if !ok {
            failures.push(format!(
                "fixture {} (pi {pi}, regular {regular})",
                trial - 1
            ));
        }
    }
    let cov = run(TheoremId::Wold, 100, 11, false);
    outcome(
        failures.is_empty() && cov.equivalence_violations == 0,
        format!(
            "100 direct-sum fixtures: {} failures {:?}, worst residual {worst:.1e}; {}",
            failures.len(),
            failures.iter().take(3).collect::<Vec<_>>(),
            brief(&cov)
        ),
    )
}

fn falsification() -> Outcome {
    let r = run(TheoremId::ProductCommuting, 100, 12, true);
    let first = r.counterexamples.iter().map(|c| c.trial).min();
    let tol = Tolerance::default();
    let replays = r.counterexamples.iter().all(|c| {
        picorr::harness::replay(r.theorem_id, &c.instance, &r.config, &tol, true)
            .map(|d| d.is_some())
            .unwrap_or(false)
    });
    outcome(
        first.is_some() && replays,
        format!(
            "claim \"{}\": {} counterexamples in 100 trials, first at trial {:?}, all replay: {replays}",
            r.statement, r.equivalence_violations, first
        ),
    )
}

fn determinism() -> Outcome {
    let serialize = |threads: usize, id: TheoremId, falsify: bool| {
        let trials = if id == TheoremId::WeightedShift {
            12
        } else {
            60
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool");
        pool.install(|| serde_json::to_string(&run(id, trials, 13, falsify)).expect("json"))
    };
    let max = std::thread::available_parallelism()
        .map_or(8, |n| n.get())
        .max(8);
    let mut identical = true;
    for (id, falsify) in [
        (TheoremId::ProductCommuting, true),
        (TheoremId::PowerChain, false),
        (TheoremId::Root, false),
        (TheoremId::WeightedShift, true),
    ] {
        let one = serialize(1, id, falsify);
        identical &= one == serialize(max, id, falsify) && one == serialize(max, id, falsify);
    }
    outcome(
        identical,
        format!("4 statements, 1 vs {max} threads, repeated: byte-identical {identical}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 13] = [
        ("six-way partial isometry equivalence", six_way),
        ("Moore-Penrose residuals", penrose),
        (
            "product PI iff range projections commute",
            product_commuting,
        ),
        (
            "chain product conditions agree stage by stage",
            product_chain,
        ),
        (
            "product pseudoinverse equals reversed chain iff PI",
            product_pinv,
        ),
        ("defect dilation PI iff first factor PI", defect_dilation),
        (
            "kernel chain, range invariance and power PI",
            chain_and_powers,
        ),
        (
            "generalized inverse inclusion and regular power PI",
            regular,
        ),
        ("weighted shift kernels and PI criterion", weighted_shifts),
        ("root criterion", root),
        ("Wold decomposition", wold_fixtures),
        ("falsification sanity", falsification),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let started = std::time::Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {} [{:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.summary,
            started.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
