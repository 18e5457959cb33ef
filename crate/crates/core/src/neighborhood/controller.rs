//! Q-learning control of the makespan-search budget.
//!
//! An action picks θ from [`THETA_LEVELS`]; the search then gets
//! `ceil(θ · S · N · M)` move credits. States classify the objective change
//! produced by the search. Exploration follows a decay law: with
//! `ε = (1/3)^(t / RunTime)` the greedy action is taken when a uniform draw
//! does not exceed `ε`, otherwise a uniformly random one.

use rand::Rng;

use crate::scalar::Scalar;

pub const THETA_LEVELS: [f64; 5] = [0.2, 0.3, 0.4, 0.5, 0.6];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum SearchState {
    /// Makespan improved, TEC did not.
    MakespanGain,
    /// TEC improved, makespan did not.
    TecGain,
    /// Neither improved.
    NoGain,
    /// Both improved.
    BothGain,
}

impl SearchState {
    pub const ALL: [SearchState; 4] = [
        SearchState::MakespanGain,
        SearchState::TecGain,
        SearchState::NoGain,
        SearchState::BothGain,
    ];

    /// Classifies `Δf1 = makespan_after - makespan_before` and `Δf2` likewise for TEC.
    pub fn classify<F: Scalar>(d_makespan: i64, d_tec: F) -> Self {
        match (d_makespan < 0, d_tec < F::zero()) {
            (true, false) => SearchState::MakespanGain,
            (false, true) => SearchState::TecGain,
            (false, false) => SearchState::NoGain,
            (true, true) => SearchState::BothGain,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Number of move credits for a θ level.
pub fn nei_time(theta: f64, n_stages: usize, n_jobs: usize, n_machines: usize) -> u64 {
    ((theta * (n_stages * n_jobs * n_machines) as f64).ceil() as u64).max(1)
}

#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct QController<F = f64> {
    q: [[F; 5]; 4],
    alpha: F,
    gamma: F,
    rewards: [F; 4],
}

impl<F: Scalar> QController<F> {
    /// Zero Q-table with rewards 6, 6, 0, 10 for the four states.
    pub fn new(alpha: F, gamma: F) -> Self {
        QController {
            q: [[F::zero(); 5]; 4],
            alpha,
            gamma,
            rewards: [F::lit(6.0), F::lit(6.0), F::zero(), F::lit(10.0)],
        }
    }

    pub fn q(&self, state: SearchState, action: usize) -> F {
        self.q[state.index()][action]
    }

    pub fn table(&self) -> &[[F; 5]; 4] {
        &self.q
    }

    pub fn reward(&self, state: SearchState) -> F {
        self.rewards[state.index()]
    }

    /// `(1/3)^progress` with progress = elapsed / RunTime clamped to [0, 1].
    pub fn epsilon(progress: F) -> F {
        let p = progress.max(F::zero()).min(F::one());
        F::lit(1.0 / 3.0).powf(p)
    }

    /// Highest-Q action of `state`; ties go to the smallest θ.
    pub fn greedy(&self, state: SearchState) -> usize {
        let row = &self.q[state.index()];
        let mut best = 0;
        for a in 1..row.len() {
            if row[a] > row[best] {
                best = a;
            }
        }
        best
    }

    /// Action index into [`THETA_LEVELS`].
    pub fn select<R: Rng>(&self, state: SearchState, progress: F, rng: &mut R) -> usize {
        let eps = Self::epsilon(progress);
        let draw = F::lit(rng.gen::<f64>());
        if draw > eps {
            rng.gen_range(0..THETA_LEVELS.len())
        } else {
            self.greedy(state)
        }
    }

    /// Observes the search outcome, updates `Q(state, action)` and returns the next state.
    pub fn update(&mut self, state: SearchState, action: usize, d_makespan: i64, d_tec: F) -> SearchState {
        let next = SearchState::classify(d_makespan, d_tec);
        let best_next = self.q[next.index()].iter().copied().fold(F::neg_infinity(), F::max);
        let r = self.rewards[next.index()];
        let q = &mut self.q[state.index()][action];
        *q += self.alpha * (r + self.gamma * best_next - *q);
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn epsilon_end_points() {
        assert_eq!(QController::<f64>::epsilon(0.0), 1.0);
        assert!((QController::<f64>::epsilon(1.0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((QController::<f32>::epsilon(1.0) - 1.0 / 3.0).abs() < 1e-6);
    }

    #[test]
    fn greedy_at_start_and_tie_rule() {
        let c = QController::<f64>::new(0.1, 0.9);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(c.select(SearchState::NoGain, 0.0, &mut rng), 0);
        }
        assert_eq!(THETA_LEVELS[c.greedy(SearchState::BothGain)], 0.2);
    }

    #[test]
    fn first_update_with_top_reward() {
        let mut c = QController::<f64>::new(0.1, 0.9);
        let next = c.update(SearchState::NoGain, 2, -3, -1.5);
        assert_eq!(next, SearchState::BothGain);
        assert_eq!(c.q(SearchState::NoGain, 2), 1.0);
    }

    #[test]
    fn zero_reward_leaves_zero_table() {
        let mut c = QController::<f64>::new(0.1, 0.9);
        assert_eq!(c.update(SearchState::NoGain, 0, 0, 0.0), SearchState::NoGain);
        assert_eq!(c, QController::new(0.1, 0.9));
    }

    #[test]
    fn classify_sign_patterns() {
        assert_eq!(SearchState::classify(-1, 0.0), SearchState::MakespanGain);
        assert_eq!(SearchState::classify(0, -0.5), SearchState::TecGain);
        assert_eq!(SearchState::classify(2, 3.0), SearchState::NoGain);
        assert_eq!(SearchState::classify(-2, -3.0), SearchState::BothGain);
    }

    #[test]
    fn nei_time_rounds_up() {
        assert_eq!(nei_time(0.2, 3, 20, 10), 120);
        assert_eq!(nei_time(0.3, 1, 1, 1), 1);
    }
}
