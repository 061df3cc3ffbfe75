use proptest::prelude::*;
use spectral_reach::commute::{commute, CommuteMethod};
use spectral_reach::envgrid::discretize_continuous;
use spectral_reach::replearn::geodesic_matrix;
use spectral_reach::spectral::{embed_dist, ra_laprep};
use spectral_reach::{build_graph, eig_sym, parse_maze, zoo, Cell, MazeSpec};

/// Mazes up to 6x5 interior cells with random walls and at least one floor
/// cell.
fn maze_strategy() -> impl Strategy<Value = MazeSpec> {
    (1usize..=6, 1usize..=5)
        .prop_flat_map(|(w, h)| (Just(w), Just(h), prop::collection::vec(prop::bool::weighted(0.75), w * h)))
        .prop_filter_map("no floor", |(w, h, open)| {
            let (width, height) = (w + 2, h + 2);
            let mut cells = vec![Cell::Wall; width * height];
            for y in 0..h {
                for x in 0..w {
                    if open[y * w + x] {
                        cells[(y + 1) * width + x + 1] = Cell::Floor;
                    }
                }
            }
            MazeSpec::from_cells(width, height, cells).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn render_round_trips(maze in maze_strategy()) {
        prop_assert_eq!(parse_maze(&maze.render_text()).unwrap(), maze);
    }

    #[test]
    fn laplacian_is_symmetric_with_zero_row_sums(maze in maze_strategy()) {
        let g = build_graph(&maze);
        let l = g.laplacian();
        prop_assert_eq!(&l, &l.transpose());
        for r in l.row_iter() {
            prop_assert_eq!(r.sum(), 0.0);
        }
        prop_assert_eq!(g.volume(), 2.0 * g.edge_count() as f64);
    }

    #[test]
    fn geodesics_satisfy_triangle_inequality(maze in maze_strategy()) {
        let geo = geodesic_matrix(&build_graph(&maze));
        let n = geo.nrows();
        for a in 0..n {
            prop_assert_eq!(geo[(a, a)], 0.0);
            for b in 0..n {
                prop_assert_eq!(geo[(a, b)], geo[(b, a)]);
                for c in 0..n {
                    prop_assert!(geo[(a, c)] <= geo[(a, b)] + geo[(b, c)]);
                }
            }
        }
    }

    #[test]
    fn full_ra_distance_gives_commute_time(maze in maze_strategy()) {
        let g = build_graph(&maze);
        prop_assume!(g.is_connected() && g.n_states() >= 2);
        let basis = eig_sym(&g.laplacian()).unwrap();
        let e = ra_laprep(&basis, g.n_states()).unwrap();
        let n = commute(&g, CommuteMethod::Solve, None).unwrap();
        for s in 0..g.n_states() {
            for t in 0..s {
                let via_embedding = g.volume() * embed_dist(&e, s, t).powi(2);
                prop_assert!((via_embedding - n.get(s, t)).abs() <= 1e-8 * n.get(s, t));
            }
        }
    }
}

#[test]
fn continuous_a_discretizes_to_hand_count() {
    let cm = zoo::load_continuous("continuous_a").unwrap();
    // resolution 1: the wall column blocks the 13 centers strictly inside it;
    // the centers just above and below sit exactly one radius away and stay open
    let coarse = discretize_continuous(&cm, 1.0).unwrap();
    assert_eq!((coarse.width(), coarse.height()), (17, 17));
    assert_eq!(coarse.n_states(), 15 * 15 - 13);
    assert!(build_graph(&coarse).is_connected());
    // resolution 2: four center columns within a radius of the wall, 28 rows each
    let fine = discretize_continuous(&cm, 2.0).unwrap();
    assert_eq!(fine.n_states(), 30 * 30 - 4 * 28);
}
