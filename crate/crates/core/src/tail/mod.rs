//! Order statistics, kernel tail-index estimators, second-order parameter
//! estimation, extreme quantile estimators and their asymptotic constants.

pub mod asymptotics;
pub mod estimators;
pub mod kernel;
pub mod quantile;
pub mod sample;
pub mod second_order;

pub use asymptotics::{
    ab_kernel, ab_optimal_misspecified, av_dependent_optimal, av_iid, av_kernel, covariance_r,
    Dependence, VarianceComparison,
};
pub use estimators::{
    gamma_dhmz, gamma_kernel, gamma_optimal_unbiased, gamma_optimal_unbiased_by_mixture, hill,
    moment, GammaFlag, GammaMethod, TailIndexEstimate,
};
pub use kernel::{mixture_weight, Kernel};
pub use quantile::{
    estimate_a, quantile_dhmz, quantile_unbiased, quantile_weissman, QuantileEstimate,
    QuantileMethod, QuantileWarning,
};
pub use sample::{build_tail_sample, OrderStatistics, TailSample};
pub use second_order::{
    k_rho_cap, rho_estimate, rho_from_s, s_statistic, select_k_rho, select_k_rho_sorted,
    xi_from_rho_hat, SecondOrderEstimate, XiChoice,
};
