// `ALL` is for the timed acceptance run
#[allow(dead_code)]
mod properties;

macro_rules! property_tests {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = properties::$name() {
                    panic!("{e}");
                }
            }
        )*
    };
}

property_tests!(
    reflection_involution,
    measurement_round_trip,
    turn_radius_invariance,
    scatterer_speed_invariance,
    jacobian_matches_finite_differences,
    cubature_linear_exactness,
    prune_merge_mass_bookkeeping,
    merge_matches_moments,
    gospa_matches_brute_force,
    fusion_weights_normalize,
    msm_symmetry,
);
