use gamecx::behavioral::{cara_utility, logit_choice, predict, solve_qre, QreOptions};
use gamecx::data::{aggregate_trials, undo_permutation, Choice, Dataset, GameRecord, TrialRecord};
use gamecx::features::compute_features;
use gamecx::fitting::{completeness, evaluate, CompletenessBounds, Metrics};
use gamecx::game::{AsPayoffs, Action, GameMatrix, Payoffs, Permutation, Role};
use gamecx::lasso::{kkt_violation, lasso_fit, lambda_max, LassoOptions};
use gamecx::model::{ModelSpec, Params};
use gamecx::solvers::{dominance_category, mixed_nash, pure_nash, PureEquilibrium};
use gamecx::stats::pearson_r;
use gamecx::tree::{Node, RegressionTree, TreeOptions};
use proptest::prelude::*;

fn payoffs4(max: i32) -> impl Strategy<Value = [i32; 4]> {
    prop::array::uniform4(1..=max)
}

fn game(max: i32) -> impl Strategy<Value = GameMatrix> {
    (payoffs4(max), payoffs4(max)).prop_map(|(r, c)| GameMatrix::unchecked("p", r, c))
}

fn distinct4() -> impl Strategy<Value = [i32; 4]> {
    Just([1, 2, 3, 4]).prop_shuffle().prop_flat_map(|order| {
        (1..=12i32, 1..=12i32, 1..=12i32, 1..=12i32).prop_map(move |(s0, s1, s2, s3)| {
            let steps = [s0, s1, s2, s3];
            let mut v = [0; 4];
            for (i, &o) in order.iter().enumerate() {
                v[i] = steps[..o as usize].iter().sum();
            }
            v
        })
    })
}

fn strict_game() -> impl Strategy<Value = GameMatrix> {
    (distinct4(), distinct4()).prop_map(|(r, c)| GameMatrix::unchecked("s", r, c))
}

fn permutation() -> impl Strategy<Value = Permutation> {
    (any::<bool>(), any::<bool>()).prop_map(|(r, c)| Permutation { swap_rows: r, swap_cols: c })
}

fn role() -> impl Strategy<Value = Role> {
    prop_oneof![Just(Role::Row), Just(Role::Col)]
}

fn specs() -> Vec<ModelSpec> {
    let mut out = vec![ModelSpec::nash(), ModelSpec::qre(), ModelSpec::qre().with_belief().with_risk()];
    for k in 0..=3 {
        out.push(ModelSpec::level_k(k));
        out.push(ModelSpec::level_k(k).with_belief().with_risk());
    }
    out.push(ModelSpec::level_mixture([0.1, 0.4, 0.3, 0.2]).with_belief().with_risk());
    out
}

fn flip_action(a: Action, p: Permutation) -> Action {
    let swap = match a {
        Action::A | Action::B => p.swap_rows,
        Action::C | Action::D => p.swap_cols,
    };
    match (a, swap) {
        (_, false) => a,
        (Action::A, true) => Action::B,
        (Action::B, true) => Action::A,
        (Action::C, true) => Action::D,
        (Action::D, true) => Action::C,
    }
}

fn brute_force_nash(g: &GameMatrix) -> Vec<PureEquilibrium> {
    let mut out = Vec::new();
    let (r, c) = (g.row, g.col);
    // cells (A,C),(A,D),(B,C),(B,D)
    for (i, (ra, ca)) in [(Action::A, Action::C), (Action::A, Action::D), (Action::B, Action::C), (Action::B, Action::D)]
        .into_iter()
        .enumerate()
    {
        let row_alt = i ^ 2;
        let col_alt = i ^ 1;
        if r[i] >= r[row_alt] && c[i] >= c[col_alt] {
            out.push(PureEquilibrium { row_action: ra, col_action: ca });
        }
    }
    out
}

fn sorted(mut v: Vec<PureEquilibrium>) -> Vec<(u8, u8)> {
    let key = |a: Action| a as u8;
    let mut k: Vec<(u8, u8)> = v.drain(..).map(|e| (key(e.row_action), key(e.col_action))).collect();
    k.sort();
    k
}

fn translate(p: &Payoffs, role: Role, shift: f64) -> Payoffs {
    match role {
        Role::Row => Payoffs::new(p.row.map(|v| v + shift), p.col),
        Role::Col => Payoffs::new(p.row, p.col.map(|v| v + shift)),
    }
}

/// Pure level-k action of `role` (true = first action) when every step has a
/// strict best response.
fn pure_level(g: &Payoffs, role: Role, k: u8) -> Option<bool> {
    let own = g.own(role);
    let belief = if k == 1 {
        0.5
    } else {
        match pure_level(g, role.opponent(), k - 1)? {
            true => 1.0,
            false => 0.0,
        }
    };
    let first = own[0] * belief + own[1] * (1.0 - belief);
    let second = own[2] * belief + own[3] * (1.0 - belief);
    if first == second {
        None
    } else {
        Some(first > second)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn permutations_form_a_klein_group(g in game(50), p in permutation(), q in permutation()) {
        prop_assert_eq!(g.apply_permutation(p).apply_permutation(q), g.apply_permutation(p.compose(q)));
        prop_assert_eq!(g.apply_permutation(p).apply_permutation(p), g.clone());
        prop_assert_eq!(p.compose(q), q.compose(p));
    }

    #[test]
    fn transpose_is_an_involution(g in game(50)) {
        prop_assert_eq!(g.transpose_perspective().transpose_perspective(), g);
    }

    #[test]
    fn row_graph_ignores_column_swap(g in strict_game()) {
        let t = g.classify_topology().unwrap();
        let swapped = g.apply_permutation(Permutation::COLS).classify_topology().unwrap();
        prop_assert_eq!(t.row_graph, swapped.row_graph);
        let rows = g.apply_permutation(Permutation::ROWS).classify_topology().unwrap();
        prop_assert_eq!(t.col_graph, rows.col_graph);
    }

    #[test]
    fn pure_nash_matches_brute_force(g in game(3)) {
        prop_assert_eq!(sorted(pure_nash(&g)), sorted(brute_force_nash(&g)));
    }

    #[test]
    fn pure_nash_is_permutation_equivariant(g in game(6), p in permutation()) {
        let image: Vec<PureEquilibrium> = pure_nash(&g)
            .into_iter()
            .map(|e| PureEquilibrium { row_action: flip_action(e.row_action, p), col_action: flip_action(e.col_action, p) })
            .collect();
        prop_assert_eq!(sorted(pure_nash(&g.apply_permutation(p))), sorted(image));
    }

    #[test]
    fn mixed_equilibrium_makes_both_indifferent(g in game(50)) {
        if let Some(m) = mixed_nash(&g).interior() {
            let [a, b, c, d] = g.row.map(f64::from);
            let [x, y, z, w] = g.col.map(f64::from);
            let q = m.q_c;
            let p = m.p_a;
            prop_assert!(((a * q + b * (1.0 - q)) - (c * q + d * (1.0 - q))).abs() < 1e-12);
            prop_assert!(((x * p + z * (1.0 - p)) - (y * p + w * (1.0 - p))).abs() < 1e-12);
        }
    }

    #[test]
    fn dominance_category_is_invariant(g in game(10), p in permutation()) {
        let cat = dominance_category(&g);
        prop_assert_eq!(dominance_category(&g.apply_permutation(p)), cat);
        prop_assert_eq!(dominance_category(&g.transpose_perspective()), cat);
    }

    #[test]
    fn logit_reflection_is_exact(delta in -100.0f64..100.0, eta in 0.0f64..10.0) {
        prop_assert_eq!(logit_choice(-delta, eta), 1.0 - logit_choice(delta, eta));
    }

    #[test]
    fn predictions_are_relabeling_equivariant(
        g in strict_game(),
        r in role(),
        es in 0.01f64..2.0,
        eo in 0.01f64..2.0,
        alpha in 0.0f64..0.2,
    ) {
        let params = Params::new(es, eo, alpha);
        for spec in specs() {
            let Ok(base) = predict(&spec, &params, &g, r) else { continue };
            for p in [Permutation::ROWS, Permutation::COLS, Permutation::BOTH] {
                let got = predict(&spec, &params, &g.apply_permutation(p), r).unwrap();
                let want = if p.flips(r) { 1.0 - base } else { base };
                prop_assert!((got - want).abs() < 1e-12, "{:?} {:?}: {} vs {}", spec, p, got, want);
            }
        }
    }

    #[test]
    fn risk_neutral_predictions_ignore_translation(
        g in strict_game(),
        r in role(),
        who in role(),
        shift in -20.0f64..20.0,
        es in 0.01f64..1.0,
        eo in 0.01f64..1.0,
    ) {
        let params = Params::new(es, eo, 0.0);
        let p = g.payoffs();
        let moved = translate(&p, who, shift);
        for spec in specs() {
            let spec = ModelSpec { use_risk: false, ..spec };
            let Ok(base) = predict(&spec, &params, &p, r) else { continue };
            let got = predict(&spec, &params, &moved, r).unwrap();
            prop_assert!((got - base).abs() < 1e-9, "{:?}: {} vs {}", spec, got, base);
        }
    }

    #[test]
    fn scale_trades_off_with_precision(
        g in strict_game(),
        r in role(),
        lambda in 0.1f64..10.0,
        es in 0.01f64..1.0,
        eo in 0.01f64..1.0,
    ) {
        let params = Params::new(es, eo, 0.0);
        let scaled_params = Params::new(es / lambda, eo / lambda, 0.0);
        let p = g.payoffs();
        let scaled = p.map(|v| v * lambda);
        for spec in specs() {
            let spec = ModelSpec { use_risk: false, ..spec };
            let Ok(base) = predict(&spec, &params, &p, r) else { continue };
            let got = predict(&spec, &scaled_params, &scaled, r).unwrap();
            prop_assert!((got - base).abs() < 1e-9, "{:?}: {} vs {}", spec, got, base);
        }
    }

    #[test]
    fn high_precision_level_k_is_best_response(g in game(50), r in role(), k in 1u8..=3) {
        if let Some(first) = pure_level(&g.payoffs(), r, k) {
            let p = predict(&ModelSpec::level_k(k), &Params::eta(1e3), &g, r).unwrap();
            let want = if first { 1.0 } else { 0.0 };
            prop_assert!((p - want).abs() < 1e-9);
        }
    }

    #[test]
    fn qre_solution_is_a_fixed_point(
        g in game(50),
        r in role(),
        es in 0.01f64..3.0,
        eo in 0.01f64..3.0,
        alpha in 0.0f64..0.1,
    ) {
        let params = Params::new(es, eo, alpha);
        let opts = QreOptions::default();
        let s = solve_qre(&g, r, &params, &opts);
        prop_assert!(s.converged);
        let eu = |own: [f64; 4], q: f64| {
            let u = own.map(|x| cara_utility(x, alpha));
            (u[0] * q + u[1] * (1.0 - q)) - (u[2] * q + u[3] * (1.0 - q))
        };
        let p = g.payoffs();
        let (mine, theirs) = match r {
            Role::Row => (s.p_a, s.q_c),
            Role::Col => (s.q_c, s.p_a),
        };
        let own = p.own(r);
        let opp = p.own(r.opponent());
        prop_assert!((mine - logit_choice(eu(own, theirs), es)).abs() <= opts.tol);
        prop_assert!((theirs - logit_choice(eu(opp, mine), eo)).abs() <= opts.tol);
    }

    #[test]
    fn cara_is_increasing(x in 0.0f64..50.0, dx in 0.01f64..10.0, alpha in 0.0f64..1.0) {
        let (lo, hi) = (cara_utility(x, alpha), cara_utility(x + dx, alpha));
        prop_assert!(hi >= lo);
        if alpha * (x + dx) < 30.0 {
            prop_assert!(hi > lo);
        }
    }

    #[test]
    fn completeness_is_monotone(
        mse in 0.01f64..0.05,
        r2 in 0.2f64..0.9,
        dm in 0.0f64..0.01,
        dr in 0.0f64..0.1,
        r2_only in any::<bool>(),
    ) {
        let bounds = CompletenessBounds::new(Metrics { mse: 0.06, r2: 0.0 }, Metrics { mse: 0.007, r2: 0.92 }).unwrap();
        let worse = completeness(Metrics { mse, r2 }, &bounds, r2_only);
        let better = completeness(Metrics { mse: mse - dm * 0.5, r2: r2 + dr * 0.5 }, &bounds, r2_only);
        prop_assert!(better >= worse);
    }

    #[test]
    fn evaluation_ignores_record_order(
        values in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 3..30),
        seed in any::<u64>(),
    ) {
        let records: Vec<GameRecord> = values
            .iter()
            .enumerate()
            .map(|(i, (t, _))| GameRecord::new(GameMatrix::unchecked(format!("g{i}"), [1, 2, 3, 4], [4, 3, 2, 1]), Role::Row, 5, *t))
            .collect();
        let preds: Vec<f64> = values.iter().map(|v| v.1).collect();
        let data = Dataset::new(records.clone()).unwrap();
        let mut order: Vec<usize> = (0..values.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let shuffled = Dataset::new(order.iter().map(|&i| records[i].clone()).collect()).unwrap();
        let shuffled_preds: Vec<f64> = order.iter().map(|&i| preds[i]).collect();
        if let (Ok(a), Ok(b)) = (evaluate(&preds, &data), evaluate(&shuffled_preds, &shuffled)) {
            prop_assert!((a.mse - b.mse).abs() < 1e-12);
            prop_assert!((a.r2 - b.r2).abs() < 1e-9);
        }
    }

    #[test]
    fn asymmetry_vanishes_exactly_for_symmetric_games(g in game(50)) {
        let f = compute_features(&g);
        let [a, b, c, d] = g.row;
        let symmetric = g.col == [a, c, b, d];
        prop_assert_eq!(f.Asymmetry == 0.0, symmetric);
        prop_assert!(f.Dissimilarity_self >= 0.0 && f.Dissimilarity_other >= 0.0);
    }

    #[test]
    fn features_follow_the_perspective(g in game(50)) {
        let f = compute_features(&g);
        let t = compute_features(&g.transpose_perspective());
        prop_assert_eq!(t, f.swap_roles());
    }

    #[test]
    fn lasso_satisfies_kkt(
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 8..40),
        beta in prop::collection::vec(-2.0f64..2.0, 4),
        frac in 0.0f64..1.2,
    ) {
        let y: Vec<f64> = rows.iter().enumerate().map(|(i, r)| {
            r.iter().zip(&beta).map(|(x, b)| x * b).sum::<f64>() + ((i * 7919) % 13) as f64 * 0.05
        }).collect();
        let lmax = lambda_max(&rows, &y).unwrap();
        let lambda = frac * lmax;
        let fit = lasso_fit(&rows, &y, lambda, &LassoOptions::default()).unwrap();
        prop_assert!(kkt_violation(&rows, &y, &fit, lambda).unwrap() < 1e-6);
    }

    #[test]
    fn tree_is_shallow_and_every_split_helps(
        rows in prop::collection::vec(prop::collection::vec(0i32..4, 3), 10..80),
        noise in prop::collection::vec(-1.0f64..1.0, 80),
    ) {
        let x: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| *v as f64).collect()).collect();
        let y: Vec<f64> = x.iter().zip(&noise).map(|(r, n)| r[0] * 0.3 - r[2] + n).collect();
        let t = RegressionTree::fit(&x, &y, &TreeOptions::default()).unwrap();
        prop_assert!(t.depth() <= 3);
        fn check(n: &Node) -> bool {
            match n {
                Node::Leaf { .. } => true,
                Node::Split { gain, left, right, .. } => *gain > 0.0 && check(left) && check(right),
            }
        }
        prop_assert!(check(&t.root));
    }

    #[test]
    fn pearson_ignores_positive_affine_maps(
        pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if let Ok(base) = pearson_r(&x, &y) {
            let xs: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            let c = pearson_r(&xs, &y).unwrap();
            prop_assert!((c.r - base.r).abs() < 1e-9);
        }
    }

    #[test]
    fn undoing_a_permutation_is_an_involution(p in permutation(), first in any::<bool>()) {
        let c = if first { Choice::First } else { Choice::Second };
        prop_assert_eq!(undo_permutation(undo_permutation(c, p), p), c);
    }

    #[test]
    fn aggregation_ignores_trial_order(
        raw in prop::collection::vec((0usize..3, 0usize..4, any::<bool>(), any::<bool>(), any::<bool>(), 200u32..5000), 6..60),
        rotate in 0usize..60,
    ) {
        let games = vec![
            GameMatrix::unchecked("g1", [30, 10, 40, 20], [30, 40, 10, 20]),
            GameMatrix::unchecked("g2", [1, 2, 3, 4], [4, 3, 2, 1]),
            GameMatrix::unchecked("g3", [9, 5, 7, 1], [2, 8, 6, 3]),
        ];
        let trials: Vec<TrialRecord> = raw
            .iter()
            .map(|&(game, who, col, sr, sc, rt)| TrialRecord {
                participant_id: format!("s{who}"),
                game_id: games[game].id.clone(),
                role: if col { Role::Col } else { Role::Row },
                permutation: Permutation { swap_rows: sr, swap_cols: sc },
                choice: if rt % 3 == 0 { Choice::First } else { Choice::Second },
                rt_ms: rt,
                confidence: Some(f64::from(rt % 7) / 6.0),
            })
            .collect();
        let mut moved = trials.clone();
        let k = rotate % moved.len();
        moved.rotate_left(k);
        moved.reverse();
        let a = aggregate_trials(&trials, &games).unwrap();
        let b = aggregate_trials(&moved, &games).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(&x.game.id, &y.game.id);
            prop_assert_eq!(x.role, y.role);
            prop_assert_eq!(x.n, y.n);
            prop_assert!((x.p_first - y.p_first).abs() < 1e-15);
            let close = |u: Option<f64>, v: Option<f64>| match (u, v) {
                (Some(u), Some(v)) => (u - v).abs() < 1e-12,
                (None, None) => true,
                _ => false,
            };
            prop_assert!(close(x.rt_norm, y.rt_norm));
            prop_assert!(close(x.conf_norm, y.conf_norm));
        }
    }
}

#[test]
fn pure_nash_exhaustive_scan_over_three_levels() {
    let mut checked = 0;
    for code in 0..3usize.pow(8) {
        let mut v = [0i32; 8];
        let mut c = code;
        for x in &mut v {
            *x = (c % 3) as i32 + 1;
            c /= 3;
        }
        let g = GameMatrix::unchecked("e", [v[0], v[1], v[2], v[3]], [v[4], v[5], v[6], v[7]]);
        assert_eq!(sorted(pure_nash(&g)), sorted(brute_force_nash(&g)), "{g:?}");
        checked += 1;
    }
    assert_eq!(checked, 6561);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn nelder_mead_never_ends_above_its_start(
        games in prop::collection::vec((strict_game(), 0.05f64..0.95), 6..14),
        eta in 0.01f64..1.0,
        k in 1u8..=3,
    ) {
        use gamecx::fitting::{nelder_mead_fit, FitOptions};
        let records: Vec<GameRecord> = games
            .into_iter()
            .enumerate()
            .map(|(i, (g, p))| GameRecord::new(GameMatrix { id: format!("g{i}"), ..g }, Role::Row, 10, p))
            .collect();
        let data = Dataset::new(records).unwrap();
        let spec = ModelSpec::level_k(k).with_risk();
        let init = Params::new(eta, eta, 0.01);
        let at_init: f64 = data
            .records
            .iter()
            .map(|r| {
                let e = predict(&spec, &init, &r.game, r.role).unwrap() - r.p_first;
                e * e
            })
            .sum::<f64>()
            / data.len() as f64;
        let fit = nelder_mead_fit(&spec, &data, &init, 3, &FitOptions { starts: 2, ..Default::default() }).unwrap();
        prop_assert!(fit.train_mse <= at_init + 1e-15);
    }
}
