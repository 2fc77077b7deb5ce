//! Reference configurations at `x = 0.5`, `mu = 2`.
//!
//! Along `x = 0.5` the genus-0 configuration first fails its sign conditions
//! at `t ≈ 0.27315` ([`FIRST_BREAK_T`]). The pre-break fixture sits well
//! before that; the post-break fixture sits far enough past it that the
//! genus-2 branch stays nondegenerate for every `mu` in `[1, 3]`.
//!
//! The seeds are the converged branchpoints rounded to 12 digits; one Newton
//! step restores full accuracy.

use num_complex::Complex64;

use crate::error::Result;
use crate::modulation::{newton_solve, SolveReport};
use crate::params::{ProblemParams, Tolerances};
use crate::radical::BranchpointSet;

type C64 = Complex64;

pub const FIRST_BREAK_T: f64 = 0.2731515;

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub params: ProblemParams,
    pub seed: BranchpointSet,
}

impl Fixture {
    /// Same fixture with another `mu`; the seed is kept (Newton or a sweep
    /// has to carry it over).
    pub fn at_mu(&self, mu: f64) -> Result<Self> {
        Ok(Self { params: ProblemParams::new(self.params.x, self.params.t, mu, self.params.genus)?, ..self.clone() })
    }

    pub fn solve(&self, tols: &Tolerances) -> Result<SolveReport> {
        newton_solve(&self.seed, &self.params, tols)
    }
}

/// Genus 0 at `(x, t, mu) = (0.5, 0.1, 2)`.
pub fn pre_break() -> Fixture {
    Fixture {
        name: "pre-break",
        params: ProblemParams { x: 0.5, t: 0.1, mu: 2.0, genus: 0 },
        seed: BranchpointSet::new(vec![C64::new(0.764416128690, 0.853302000340)]).expect("valid seed"),
    }
}

/// Genus 2 at `(x, t, mu) = (0.5, 0.45, 2)`.
pub fn post_break() -> Fixture {
    Fixture {
        name: "post-break",
        params: ProblemParams { x: 0.5, t: 0.45, mu: 2.0, genus: 2 },
        seed: BranchpointSet::new(vec![
            C64::new(1.012784419412, 0.185435303161),
            C64::new(-0.350172545190, 0.912258632309),
            C64::new(-1.038957035668, 0.400259397343),
        ])
        .expect("valid seed"),
    }
}

/// Genus-0 seed for the post-break point; it converges, but to a
/// configuration that violates the sign conditions.
pub fn post_break_genus_zero_seed() -> BranchpointSet {
    BranchpointSet::new(vec![C64::new(0.8, 0.7)]).expect("valid seed")
}
