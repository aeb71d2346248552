//! Fixtures shared by the benchmarks.

use cavlab::chart::NU_CR;
use cavlab::kernel::GridSpec;
use cavlab::mesh::{DomainSpec, Mesh};
use cavlab::solver::{Solution, SolverConfig};

/// Coarse kernel grid that builds in well under a second.
pub fn small_grid() -> GridSpec {
    GridSpec {
        nu_points: 61,
        xi_linear: 11,
        xi_log: 10,
        xi_max_factor: 50.0,
    }
}

pub fn nu_star() -> f64 {
    NU_CR / 2.0
}

/// Default obstacle mesh at spacing `h` with the far-field state.
pub fn obstacle_case(h: f64) -> (Mesh, SolverConfig, Solution) {
    let mesh = Mesh::build(&DomainSpec::default().with_h(h)).expect("mesh");
    let cfg = SolverConfig::default();
    let start = Solution::far_field(&mesh, &cfg, cfg.epsilons[0]).expect("far field");
    (mesh, cfg, start)
}
