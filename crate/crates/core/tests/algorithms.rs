use stopstare::bounds::ONE_MINUS_INV_E;
use stopstare::dssa::dssa;
use stopstare::harness::{generate, guarantee_trial, SyntheticSpec};
use stopstare::oracle::{exact_opt, mc_influence, ExactTable};
use stopstare::sampling::RngStream;
use stopstare::ssa::ssa;
use stopstare::tvm::run_plain;
use stopstare::{Algo, Graph, Model, StopReason, StopStareConfig};

fn er(n: usize, p: f64, seed: u64) -> Graph {
    generate(&SyntheticSpec::erdos_renyi(n, p, seed)).unwrap()
}

#[test]
fn seeds_are_k_distinct_nodes() {
    let g = er(250, 0.02, 12);
    for model in [Model::IC, Model::LT] {
        for algo in [Algo::Ssa, Algo::Dssa] {
            for k in [1, 7, 30] {
                let cfg = StopStareConfig::new(&g, k, 0.2, model).with_seed(k as u64);
                let r = run_plain(&g, &cfg, algo).unwrap();
                let mut s = r.seeds.clone();
                s.sort_unstable();
                s.dedup();
                assert_eq!(s.len(), k, "{algo} {model} k={k}");
                assert!(s.iter().all(|&v| (v as usize) < g.n()));
                assert!(r.pool_items >= r.rr_count_main);
            }
        }
    }
}

#[test]
fn estimates_agree_with_simulation() {
    let g = er(300, 0.015, 4);
    let mut rng = RngStream::new(99, 0).rng();
    for model in [Model::IC, Model::LT] {
        for algo in [Algo::Ssa, Algo::Dssa] {
            let cfg = StopStareConfig::new(&g, 10, 0.1, model).with_seed(5);
            let r = run_plain(&g, &cfg, algo).unwrap();
            let mc = mc_influence(&g, &r.seeds, model, 20_000, &mut rng).unwrap();
            let rel = (r.est_influence - mc.mean).abs() / mc.mean;
            assert!(
                rel < 0.1,
                "{algo} {model}: estimate {} vs simulated {}",
                r.est_influence,
                mc.mean
            );
        }
    }
}

#[test]
fn guarantee_holds_on_several_small_graphs() {
    for graph_seed in [2, 3, 5, 8] {
        let g = er(8, 0.3, graph_seed);
        if g.m() > 22 {
            continue;
        }
        for model in [Model::IC, Model::LT] {
            for algo in [Algo::Ssa, Algo::Dssa] {
                let r = guarantee_trial(&g, 2, 0.3, 0.2, algo, model, 40, 77).unwrap();
                assert!(r.holds(), "graph {graph_seed} {algo} {model}: {r:?}");
            }
        }
    }
}

#[test]
fn small_instance_solutions_are_near_optimal() {
    let g = er(7, 0.35, 21);
    for model in [Model::IC, Model::LT] {
        let table = ExactTable::build(&g, 2, model).unwrap();
        let opt = exact_opt(&g, 2, model).unwrap().opt;
        for algo in [Algo::Ssa, Algo::Dssa] {
            for seed in 0..10 {
                let cfg = StopStareConfig::new(&g, 2, 0.2, model).with_seed(seed);
                let r = run_plain(&g, &cfg, algo).unwrap();
                let got = table.lookup(&r.seeds).unwrap();
                assert!(
                    got >= (ONE_MINUS_INV_E - 0.2) * opt,
                    "{algo} {model}: {got} vs OPT {opt}"
                );
            }
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    let g = er(400, 0.01, 6);
    for model in [Model::IC, Model::LT] {
        for algo in [Algo::Ssa, Algo::Dssa] {
            let base = StopStareConfig::new(&g, 8, 0.15, model).with_seed(31);
            let mut a = run_plain(&g, &base, algo).unwrap();
            let mut b = run_plain(&g, &base.clone().with_threads(4), algo).unwrap();
            a.wall_ms = 0.0;
            b.wall_ms = 0.0;
            assert_eq!(a, b, "{algo} {model}");
        }
    }
}

#[test]
fn ssa_trace_is_consistent() {
    let g = er(300, 0.015, 9);
    let out = ssa(
        &g,
        &StopStareConfig::new(&g, 5, 0.1, Model::LT).with_seed(2),
    )
    .unwrap();
    let first = out.caps.lambda.ceil() as usize;
    for (i, it) in out.trace.iter().enumerate() {
        assert_eq!(it.t as usize, i + 1);
        assert_eq!(it.pool_size, first << it.t);
        assert_eq!(it.passed_c1, it.coverage as f64 >= out.lambda1);
        assert_eq!(it.estimate.is_some(), it.passed_c1);
        assert!(!it.passed_c2 || it.passed_c1);
    }
    let last = out.trace.last().unwrap();
    assert_eq!(out.result.rr_count_main, last.pool_size as u64);
    assert_eq!(out.result.seeds, last.seeds);
    let verify: u64 = out
        .trace
        .iter()
        .filter_map(|t| t.estimate.map(|e| e.draws))
        .sum();
    assert_eq!(out.result.rr_count_verify, verify);
    match out.result.stop_reason {
        StopReason::ConditionsMet => assert!(last.passed_c2),
        StopReason::CapReached => assert!(last.pool_size as f64 >= out.caps.n_max),
    }
}

#[test]
fn dssa_trace_is_consistent() {
    let g = er(300, 0.015, 9);
    let out = dssa(
        &g,
        &StopStareConfig::new(&g, 5, 0.1, Model::IC).with_seed(2),
    )
    .unwrap();
    for it in &out.trace {
        assert_eq!(it.pool_half_size as u64, out.window << (it.t - 1));
        assert_eq!(it.epsilons.is_some(), it.passed_d1);
        if let Some(e) = it.epsilons {
            assert_eq!(it.passed_d2, e.eps_t <= 0.1);
        }
    }
    let last = out.trace.last().unwrap();
    assert_eq!(out.result.rr_count_main, 2 * last.pool_half_size as u64);
    assert_eq!(out.result.rr_count_verify, 0);
    assert_eq!(out.result.iterations as usize, out.trace.len());
}

#[test]
fn cap_is_reached_when_precision_is_unattainable() {
    // On a 3-node cycle N_max is tiny, so the cap stops SSA before the
    // stopping conditions certify eps = 0.1.
    let g = generate(&SyntheticSpec::cycle(3, 0.5)).unwrap();
    let out = ssa(&g, &StopStareConfig::new(&g, 2, 0.1, Model::LT)).unwrap();
    assert_eq!(out.result.stop_reason, StopReason::CapReached);
    assert!(out.result.rr_count_main as f64 >= out.caps.n_max);
}
