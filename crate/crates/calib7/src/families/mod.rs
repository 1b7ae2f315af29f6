//! Explicit families: the profile curve, the round sphere, surface bundles over adapted
//! bases (the k = 1 member over the round sphere is the SU(2)-invariant example), and
//! the fixture curves used by the tests and the command line.

mod bundle;
pub mod fixtures;
mod profile;
mod round;

pub use bundle::{
    base_adaptation_residual, hl_implicit_residual, n2_plane_lift, round_bundle_map, surface_bundle,
    verification_framing, BaseSample, BundleBase, BundleComponent, BundlePiece, RoundS2Grid, SurfaceBundle,
    ADAPT_TOL_ANALYTIC, ADAPT_TOL_FD,
};
pub use fixtures::{
    binormal_fixture, fiber_curve, fiber_fixture, random_lift, ProductLift, su3_generator, HomogeneousTorus, LineFamily,
};
pub use profile::{
    default_intervals, implicit_residual, profile_derivative, profile_point, w_from_z, Branch, ProfileBranch,
    ProfileCurve, ProfileSample, ASYMPTOTE_SLOPE, SINGULAR_EPS,
};
pub use round::{
    gudermannian, round_generators, round_s2_conformal_lift, round_s2_frame_field, RoundS2, POLE_TOL,
};
