//! Episode execution, paired Monte Carlo replication, regret metrics and the
//! executable bound checks.

mod checks;
mod dkw;
mod episode;
mod monte_carlo;
mod regret;
mod slope;

pub use checks::{
    check_lemma2, check_price_error_bound, check_quantile_chain, tolerance, BoundChecks, CheckOutcome, Kappas,
};
pub use dkw::{concentration_rate, dkw_experiment, tail_bound, DkwCell};
pub use episode::{
    info_lower_bounds, run_episode, run_episode_on, EpisodeTrace, Experiment, PeriodRecord, RunningQuantile,
    ShockPath,
};
pub use monte_carlo::{
    mse_decay_check, run_monte_carlo, MonteCarloOptions, MonteCarloSummary, PolicySummary, ReplicationFailure,
    THREADS_ENV,
};
pub use regret::{realized_regret, revenue_gap, RegretSeries};
pub use slope::{loglog_slope, SlopeFit};
