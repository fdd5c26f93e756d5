mod common;

use common::*;
use metapath_core::oracle::{build_position_matrix, chain_product, densify};
use metapath_core::{compose_metapath_graphs, generate_split, generate_vanilla, EnumStrategy};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (u64, usize, usize, f64, usize, bool)> {
    (
        any::<u64>(),
        1usize..25,
        1usize..4,
        0.0f64..0.25,
        1usize..5,
        any::<bool>(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vanilla_matches_brute_force((seed, n, t, density, l, augment) in instance()) {
        let mut r = rng(seed);
        let mut g = random_graph(&mut r, n, t, density);
        if augment {
            g = g.add_self_edges().unwrap();
        }
        let table = random_table(&mut r, l, g.num_edge_types());
        let want = brute_force(&g, &table, l);
        for strategy in [EnumStrategy::DepthFirst, EnumStrategy::LevelByLevel] {
            let mg = generate_vanilla(&g, &table, l, strategy).unwrap();
            prop_assert_eq!(compare_maps(&to_map(&mg), &want, 1e-12), None);
        }
    }

    #[test]
    fn strategies_agree_bitwise((seed, n, t, density, l, _a) in instance()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, t, density).add_self_edges().unwrap();
        let table = random_table(&mut r, l + 1, g.num_edge_types());
        let a = generate_vanilla(&g, &table, l + 1, EnumStrategy::DepthFirst).unwrap();
        let b = generate_vanilla(&g, &table, l + 1, EnumStrategy::LevelByLevel).unwrap();
        prop_assert!(a.same_structure(&b));
        for (x, y) in a.edge_weights().iter().zip(b.edge_weights()) {
            prop_assert!(rel_err(*x, *y) <= 1e-12);
        }
    }

    #[test]
    fn split_matches_vanilla((seed, n, t, density, l, augment) in instance()) {
        let l = l + 1;
        let mut r = rng(seed);
        let mut g = random_graph(&mut r, n, t, density);
        if augment {
            g = g.add_self_edges().unwrap();
        }
        let table = random_table(&mut r, l, g.num_edge_types());
        let vanilla = generate_vanilla(&g, &table, l, EnumStrategy::LevelByLevel).unwrap();
        let split = generate_split(&g, &table, l, EnumStrategy::LevelByLevel).unwrap();
        prop_assert_eq!(compare_maps(&to_map(&split.mg), &to_map(&vanilla), 1e-9), None);
        let again = compose_metapath_graphs(&split.mg1, &split.mg2).unwrap();
        prop_assert_eq!(again, split.mg);
    }

    #[test]
    fn symbolic_size_matches_reach((seed, n, t, density, l, augment) in instance()) {
        let mut r = rng(seed);
        let mut g = random_graph(&mut r, n, t, density);
        if augment {
            g = g.add_self_edges().unwrap();
        }
        prop_assert_eq!(g.symbolic_metapath_size(l).unwrap(), brute_force_reach(&g, l));
    }

    #[test]
    fn dense_chain_matches((seed, n, t, density, l, _a) in instance()) {
        let mut r = rng(seed);
        let g = random_graph(&mut r, n, t, density).add_self_edges().unwrap();
        let table = random_table(&mut r, l, g.num_edge_types());
        let mats: Vec<_> = (1..=l).map(|p| build_position_matrix(&g, &table, p).unwrap()).collect();
        let dense = chain_product(&mats).unwrap();
        let sparse = densify(&generate_vanilla(&g, &table, l, EnumStrategy::LevelByLevel).unwrap()).unwrap();
        for i in 0..n {
            for j in 0..n {
                prop_assert!(rel_err(sparse.get(i, j), dense.get(i, j)) <= 1e-10);
            }
        }
    }
}

#[test]
fn fig1_both_routes() {
    let g = fig1_graph();
    let table = fig1_table();
    let want: EdgeMap = [((0, 2), 7.0), ((0, 4), 2.0)].into_iter().collect();
    let vanilla = generate_vanilla(&g, &table, 2, EnumStrategy::DepthFirst).unwrap();
    assert_eq!(to_map(&vanilla), want);
    let split = generate_split(&g, &table, 2, EnumStrategy::LevelByLevel).unwrap();
    assert_eq!(to_map(&split.mg), want);
}

#[test]
fn thread_count_does_not_change_results() {
    let mut r = rng(5);
    let g = random_graph(&mut r, 60, 3, 0.15).add_self_edges().unwrap();
    let table = random_table(&mut r, 4, g.num_edge_types());
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    generate_vanilla(&g, &table, 4, EnumStrategy::LevelByLevel).unwrap(),
                    generate_split(&g, &table, 4, EnumStrategy::DepthFirst)
                        .unwrap()
                        .mg,
                )
            })
    };
    assert_eq!(run(1), run(4));
}
