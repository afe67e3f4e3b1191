//! Context-invariant behavioral models: CARA utility, logit quantal response,
//! level-k beliefs, level mixtures and the logit QRE.
//!
//! The building blocks are generic over [`Scalar`] so the same code yields
//! plain predictions (`f64`) and forward-mode derivatives with respect to
//! `eta_self`, `eta_other` and `alpha` ([`Dual`](crate::scalar::Dual)).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{AsPayoffs, Payoffs, Role};
use crate::model::{ModelSpec, Params, Structure};
use crate::scalar::Scalar;
use crate::solvers;

/// Below this `alpha` the CARA utility is evaluated by its Taylor series.
const CARA_SERIES_BELOW: f64 = 1e-8;

/// `U(x) = (1 - e^{-αx}) / α`, equal to `x` at `α = 0`.
pub fn cara_utility<T: Scalar>(x: f64, alpha: T) -> T {
    let a = alpha.value();
    if a.abs() < CARA_SERIES_BELOW {
        // x - αx²/2 + α²x³/6
        T::cst(x) - alpha.scale(x * x / 2.0) + (alpha * alpha).scale(x * x * x / 6.0)
    } else {
        -(alpha.scale(-x)).expm1() / alpha
    }
}

/// Probability of the first action: logistic of `eta * delta_eu`.
pub fn logit_choice<T: Scalar>(delta_eu: T, eta: T) -> T {
    (eta * delta_eu).logistic()
}

/// Believed probability that the opponent plays their first action.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Belief {
    pub p_first: f64,
}

impl Belief {
    pub fn uniform() -> Self {
        Belief { p_first: 0.5 }
    }
}

fn utilities<T: Scalar>(own: [f64; 4], alpha: T) -> [T; 4] {
    own.map(|x| cara_utility(x, alpha))
}

/// Expected utilities of (first, second) action given own utilities laid out
/// as `[1 vs 1, 1 vs 2, 2 vs 1, 2 vs 2]`.
fn eu_pair<T: Scalar>(u: &[T; 4], belief: T) -> (T, T) {
    let other = T::cst(1.0) - belief;
    (belief * u[0] + other * u[1], belief * u[2] + other * u[3])
}

fn delta_eu<T: Scalar>(u: &[T; 4], belief: T) -> T {
    let (first, second) = eu_pair(u, belief);
    first - second
}

/// Expected CARA utilities of `role`'s two actions under `belief`.
pub fn expected_utilities(g: &impl AsPayoffs, role: Role, belief: Belief, alpha: f64) -> (f64, f64) {
    let u = utilities(g.payoffs().own(role), alpha);
    eu_pair(&u, belief.p_first)
}

/// Utilities of both players, each in their own perspective.
struct Utilities<T> {
    row: [T; 4],
    col: [T; 4],
}

impl<T: Scalar> Utilities<T> {
    fn new(p: &Payoffs, alpha: T) -> Self {
        Utilities { row: utilities(p.own(Role::Row), alpha), col: utilities(p.own(Role::Col), alpha) }
    }

    fn of(&self, role: Role) -> &[T; 4] {
        match role {
            Role::Row => &self.row,
            Role::Col => &self.col,
        }
    }
}

/// Beliefs of a level-`k` player for each role, `k = 0..=3`. Level 0 and 1
/// expect a uniformly random opponent; level `k` expects the opponent's
/// quantal response (precision `eta_other`) at level `k - 1`.
fn level_beliefs<T: Scalar>(u: &Utilities<T>, eta_other: T) -> [[T; 2]; 4] {
    let half = T::cst(0.5);
    let mut beliefs = [[half; 2]; 4];
    for k in 2..4 {
        for (i, role) in [Role::Row, Role::Col].into_iter().enumerate() {
            let opp = role.opponent();
            let opp_belief = beliefs[k - 1][1 - i];
            beliefs[k][i] = logit_choice(delta_eu(u.of(opp), opp_belief), eta_other);
        }
    }
    beliefs
}

fn role_index(role: Role) -> usize {
    match role {
        Role::Row => 0,
        Role::Col => 1,
    }
}

/// Level-`k` belief of `role` about the opponent's first action.
pub fn level_k_belief(g: &impl AsPayoffs, role: Role, k: u8, eta_other: f64, alpha: f64) -> Belief {
    let k = k.min(crate::model::MAX_LEVEL) as usize;
    let u = Utilities::new(&g.payoffs(), alpha);
    Belief { p_first: level_beliefs(&u, eta_other)[k][role_index(role)] }
}

/// Level-`k` quantal-response predictions for `k = 0..=3`; level 0 plays
/// uniformly.
pub fn level_predictions<T: Scalar>(p: &Payoffs, role: Role, eta_self: T, eta_other: T, alpha: T) -> [T; 4] {
    let u = Utilities::new(p, alpha);
    let beliefs = level_beliefs(&u, eta_other);
    let own = u.of(role);
    let i = role_index(role);
    let mut out = [T::cst(0.5); 4];
    for k in 1..4 {
        out[k] = logit_choice(delta_eu(own, beliefs[k][i]), eta_self);
    }
    out
}

/// QRE by a fixed number of damped iterations from uniform play. Used where
/// a differentiable approximation is needed.
pub fn qre_unrolled<T: Scalar>(
    p: &Payoffs,
    role: Role,
    eta_self: T,
    eta_other: T,
    alpha: T,
    iterations: usize,
) -> T {
    let u = Utilities::new(p, alpha);
    let own = u.of(role);
    let opp = u.of(role.opponent());
    let mut mine = T::cst(0.5);
    let mut theirs = T::cst(0.5);
    for _ in 0..iterations {
        let next_mine = logit_choice(delta_eu(own, theirs), eta_self);
        let next_theirs = logit_choice(delta_eu(opp, mine), eta_other);
        mine = (mine + next_mine).scale(0.5);
        theirs = (theirs + next_theirs).scale(0.5);
    }
    mine
}

/// Solver settings for the logit QRE.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QreOptions {
    pub tol: f64,
    /// Cap on reduced-gap evaluations.
    pub max_iter: usize,
    /// Continuation steps from zero precision.
    pub steps: usize,
}

impl Default for QreOptions {
    fn default() -> Self {
        QreOptions { tol: 1e-10, max_iter: 10_000, steps: 32 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QreSolution {
    /// Row player's probability of `A`.
    pub p_a: f64,
    /// Column player's probability of `C`.
    pub q_c: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

struct QreMaps {
    own: [f64; 4],
    opp: [f64; 4],
    eta_self: f64,
    eta_other: f64,
}

impl QreMaps {
    fn mine(&self, theirs: f64) -> f64 {
        logit_choice(delta_eu(&self.own, theirs), self.eta_self)
    }
    fn theirs(&self, mine: f64) -> f64 {
        logit_choice(delta_eu(&self.opp, mine), self.eta_other)
    }
    fn residual(&self, mine: f64, theirs: f64) -> f64 {
        (mine - self.mine(theirs)).abs().max((theirs - self.theirs(mine)).abs())
    }
    /// One-dimensional reduction in the opponent's probability.
    fn gap(&self, theirs: f64) -> f64 {
        self.theirs(self.mine(theirs)) - theirs
    }
    fn scaled(&self, t: f64) -> QreMaps {
        QreMaps { own: self.own, opp: self.opp, eta_self: self.eta_self * t, eta_other: self.eta_other * t }
    }
}

/// Logit QRE of the game from `role`'s point of view: `role` responds with
/// `eta_self`, the opponent with `eta_other`. Follows the principal branch:
/// both precisions are scaled up from zero (where play is uniform) and the
/// fixed point is re-solved from the previous one at each step, then refined
/// to full precision.
pub fn solve_qre(g: &impl AsPayoffs, role: Role, params: &Params, opts: &QreOptions) -> QreSolution {
    let p = g.payoffs();
    let maps = QreMaps {
        own: utilities(p.own(role), params.alpha),
        opp: utilities(p.own(role.opponent()), params.alpha),
        eta_self: params.eta_self,
        eta_other: params.eta_other,
    };
    let steps = opts.steps.max(1);
    let mut theirs = 0.5;
    let mut iterations = 0;
    for k in 1..steps {
        let t = k as f64 / steps as f64;
        theirs = refine_root(&maps.scaled(t), theirs, 1e-9, &mut iterations);
    }
    theirs = refine_root(&maps, theirs, 0.0, &mut iterations);
    let mine = maps.mine(theirs);
    let residual = maps.residual(mine, theirs);
    let (p_a, q_c) = match role {
        Role::Row => (mine, theirs),
        Role::Col => (theirs, mine),
    };
    let converged = residual <= opts.tol && iterations <= opts.max_iter;
    QreSolution { p_a, q_c, residual, iterations, converged }
}

/// Bracket the nearest root of the reduced gap in the direction its sign
/// points, then bisect until the bracket is narrower than `width`.
fn refine_root(maps: &QreMaps, start: f64, width: f64, evals: &mut usize) -> f64 {
    let mut gap = |x: f64| {
        *evals += 1;
        maps.gap(x)
    };
    let start = start.clamp(0.0, 1.0);
    let h0 = gap(start);
    if h0 == 0.0 {
        return start;
    }
    let up = h0 > 0.0;
    let mut step = h0.abs().max(1e-12);
    let mut inner = start;
    let mut outer;
    loop {
        outer = if up { (start + step).min(1.0) } else { (start - step).max(0.0) };
        let h = gap(outer);
        if (h > 0.0) != up || h == 0.0 || outer == 0.0 || outer == 1.0 {
            if h == 0.0 || (h > 0.0) == up {
                return outer;
            }
            break;
        }
        inner = outer;
        step *= 2.0;
    }
    let (mut lo, mut hi) = if up { (inner, outer) } else { (outer, inner) };
    let lo_positive = gap(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo < width {
            break;
        }
        let h = gap(mid);
        if h == 0.0 {
            return mid;
        }
        if (h > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if gap(lo).abs() <= gap(hi).abs() {
        lo
    } else {
        hi
    }
}

/// QRE probabilities `(p_A, q_C)`; fails if the residual stays above `tol`.
pub fn predict_qre(
    g: &impl AsPayoffs,
    role: Role,
    params: &Params,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, f64)> {
    let sol = solve_qre(g, role, params, &QreOptions { tol, max_iter, ..QreOptions::default() });
    if sol.converged {
        Ok((sol.p_a, sol.q_c))
    } else {
        Err(Error::NoConvergence { iterations: sol.iterations, residual: sol.residual })
    }
}

/// Nash prediction for `role`: the share of pure equilibria in which `role`
/// plays its first action, or the interior mixed equilibrium when there is
/// no pure one.
pub fn predict_nash(g: &impl AsPayoffs, role: Role) -> Result<f64> {
    let p = g.payoffs();
    let pure = solvers::pure_nash(&p);
    if !pure.is_empty() {
        let hits = pure
            .iter()
            .filter(|e| match role {
                Role::Row => e.row_action.is_first(),
                Role::Col => e.col_action.is_first(),
            })
            .count();
        return Ok(hits as f64 / pure.len() as f64);
    }
    let m = solvers::mixed_nash(&p).interior().ok_or(Error::NoEquilibrium)?;
    Ok(match role {
        Role::Row => m.p_a,
        Role::Col => m.q_c,
    })
}

/// Probability that `role` plays its first action under `spec`.
pub fn predict(spec: &ModelSpec, params: &Params, g: &impl AsPayoffs, role: Role) -> Result<f64> {
    spec.validate()?;
    let p = g.payoffs();
    let eff = params.effective(spec);
    match spec.structure {
        Structure::Nash => predict_nash(&p, role),
        Structure::LevelKQr => {
            let k = spec.k.unwrap_or(1) as usize;
            Ok(level_predictions(&p, role, eff.eta_self, eff.eta_other, eff.alpha)[k])
        }
        Structure::LevelMixtureQr => {
            let w = spec.level_weights.unwrap_or([0.25; 4]);
            let preds = level_predictions(&p, role, eff.eta_self, eff.eta_other, eff.alpha);
            Ok(w.iter().zip(preds).map(|(w, p)| w * p).sum())
        }
        Structure::Qre => {
            let sol = solve_qre(&p, role, &eff, &QreOptions::default());
            if !sol.converged {
                return Err(Error::NoConvergence { iterations: sol.iterations, residual: sol.residual });
            }
            Ok(match role {
                Role::Row => sol.p_a,
                Role::Col => sol.q_c,
            })
        }
    }
}

/// Expected-utility gap of `role`'s first over second action for a level-1
/// player (uniform belief), risk neutral unless `alpha > 0`.
pub fn level1_delta_eu(g: &impl AsPayoffs, role: Role, alpha: f64) -> f64 {
    let (first, second) = expected_utilities(g, role, Belief::uniform(), alpha);
    first - second
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameMatrix;

    fn pd() -> GameMatrix {
        GameMatrix::new("pd", [30, 10, 40, 20], [30, 40, 10, 20]).unwrap()
    }
    fn pennies() -> GameMatrix {
        GameMatrix::new("mp", [10, 1, 1, 10], [1, 10, 10, 1]).unwrap()
    }
    fn coordination() -> GameMatrix {
        GameMatrix::new("co", [10, 1, 1, 5], [5, 1, 1, 10]).unwrap()
    }

    #[test]
    fn cara_values() {
        assert_eq!(cara_utility(17.0, 0.0), 17.0);
        assert_eq!(cara_utility(0.0, 0.5), 0.0);
        let want = (1.0 - (-1.0f64).exp()) / 0.1;
        assert!((cara_utility(10.0, 0.1) - want).abs() < 1e-12);
        assert!((cara_utility(10.0, 0.1) - 6.321206).abs() < 1e-6);
    }

    #[test]
    fn cara_is_continuous_across_series_threshold() {
        for &x in &[1.0, 25.0, 50.0] {
            for &a in &[CARA_SERIES_BELOW * 0.999, CARA_SERIES_BELOW * 1.001] {
                let series = x - a * x * x / 2.0 + a * a * x * x * x / 6.0;
                let closed = -(-a * x).exp_m1() / a;
                let u = cara_utility(x, a);
                assert!((u - series).abs() < 1e-12 * x && (u - closed).abs() < 1e-12 * x, "{x} {a}: {u}");
            }
        }
    }

    #[test]
    fn logit_values() {
        assert_eq!(logit_choice(0.0, 3.0), 0.5);
        assert!((logit_choice(3f64.ln(), 1.0) - 0.75).abs() < 1e-15);
        let want = 1.0 / (1.0 + 10f64.exp());
        assert!((logit_choice(-10.0, 1.0) - want).abs() < 1e-15);
        assert!((logit_choice(-10.0, 1.0) - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn expected_utility_examples() {
        assert_eq!(expected_utilities(&pd(), Role::Row, Belief::uniform(), 0.0), (20.0, 30.0));
        let (a, b) = expected_utilities(&pd(), Role::Row, Belief { p_first: 1.0 }, 0.1);
        assert_eq!((a, b), (cara_utility(30.0, 0.1), cara_utility(40.0, 0.1)));
        let flat = GameMatrix::new("f", [7, 7, 7, 7], [1, 2, 3, 4]).unwrap();
        let (a, b) = expected_utilities(&flat, Role::Row, Belief { p_first: 0.3 }, 0.05);
        assert_eq!(a, b);
    }

    #[test]
    fn level_k_beliefs() {
        assert_eq!(level_k_belief(&pd(), Role::Row, 1, 1.0, 0.0).p_first, 0.5);
        let b = level_k_belief(&pd(), Role::Row, 2, 1.0, 0.0).p_first;
        assert!((b - 1.0 / (1.0 + 10f64.exp())).abs() < 1e-15);
        assert_eq!(level_k_belief(&pd(), Role::Row, 2, 0.0, 0.0).p_first, 0.5);
    }

    #[test]
    fn predictions() {
        let spec = ModelSpec::level_k(1);
        let p = predict(&spec, &Params::eta(1.0), &pd(), Role::Row).unwrap();
        assert!((p - 1.0 / (1.0 + 10f64.exp())).abs() < 1e-15);
        for spec in [ModelSpec::level_k(2).with_belief().with_risk(), ModelSpec::qre()] {
            assert_eq!(predict(&spec, &Params::new(0.0, 0.3, 0.02), &pd(), Role::Row).unwrap(), 0.5);
        }
        let mix = ModelSpec::level_mixture([1.0, 0.0, 0.0, 0.0]);
        assert_eq!(predict(&mix, &Params::eta(2.0), &pd(), Role::Col).unwrap(), 0.5);
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let mut spec = ModelSpec::level_k(1);
        spec.level_weights = Some([0.0, 1.0, 0.0, 0.0]);
        assert!(matches!(predict(&spec, &Params::eta(1.0), &pd(), Role::Row), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn nash_predictions() {
        assert_eq!(predict_nash(&pd(), Role::Row).unwrap(), 0.0);
        assert_eq!(predict_nash(&coordination(), Role::Row).unwrap(), 0.5);
        assert_eq!(predict_nash(&pennies(), Role::Row).unwrap(), 0.5);
    }

    #[test]
    fn qre_examples() {
        for eta in [0.01, 0.3, 1.0, 10.0, 100.0] {
            let (p, q) = predict_qre(&pennies(), Role::Row, &Params::eta(eta), 1e-10, 10_000).unwrap();
            assert!((p - 0.5).abs() < 1e-12 && (q - 0.5).abs() < 1e-12, "eta {eta}: {p} {q}");
        }
        let (p, q) = predict_qre(&coordination(), Role::Row, &Params::eta(0.0), 1e-10, 10_000).unwrap();
        assert_eq!((p, q), (0.5, 0.5));
        let (p, q) = predict_qre(&pd(), Role::Row, &Params::eta(5.0), 1e-10, 10_000).unwrap();
        assert!(p < 1e-12 && q < 1e-12);
    }

    #[test]
    fn qre_satisfies_fixed_point_with_belief_noise() {
        let params = Params::new(0.4, 2.0, 0.03);
        for role in [Role::Row, Role::Col] {
            let sol = solve_qre(&coordination(), role, &params, &QreOptions::default());
            assert!(sol.converged && sol.residual <= 1e-10);
        }
    }

    #[test]
    fn large_precision_approaches_best_response() {
        // level-1 row in PD best-responds with B
        let p = predict(&ModelSpec::level_k(1), &Params::eta(1e6), &pd(), Role::Row).unwrap();
        assert_eq!(p, 0.0);
        let p = predict(&ModelSpec::level_k(2), &Params::eta(1e6), &coordination(), Role::Row).unwrap();
        // level-1 column in the coordination game plays D (5.5 vs 3), so level 2 plays B
        assert_eq!(p, 0.0);
    }

    #[test]
    fn qre_branch_is_stable_under_payoff_scaling() {
        let g = GameMatrix::unchecked("s", [6, 5, 1, 12], [10, 3, 13, 18]);
        let base = predict(&ModelSpec::qre(), &Params::new(0.780658532742566, 0.07194234135273912, 0.0), &g, Role::Row).unwrap();
        let lambda = 7.560238590644294;
        let scaled = g.payoffs().map(|v| v * lambda);
        let params = Params::new(0.780658532742566 / lambda, 0.07194234135273912 / lambda, 0.0);
        let got = predict(&ModelSpec::qre(), &params, &scaled, Role::Row).unwrap();
        assert!((got - base).abs() < 1e-9, "{got} vs {base}");
    }

    #[test]
    fn unrolled_qre_matches_solver_when_contracting() {
        let params = Params::new(0.05, 0.05, 0.0);
        let sol = solve_qre(&coordination(), Role::Row, &params, &QreOptions::default());
        let unrolled = qre_unrolled(&coordination().payoffs(), Role::Row, 0.05, 0.05, 0.0, 200);
        assert!((sol.p_a - unrolled).abs() < 1e-10);
    }
}
