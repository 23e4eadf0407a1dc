mod common;

const CASES: u32 = 64;

macro_rules! property_tests {
    ($($name:ident),* $(,)?) => {
        $(
            #[test]
            fn $name() {
                if let Err(e) = common::$name(CASES) {
                    panic!("{e}");
                }
            }
        )*
    };
}

property_tests!(
    symmetry,
    definiteness,
    linearity,
    rigid_body_count,
    orthogonality,
    schur_complement,
    mac_bounds_and_scale,
    likelihood_sign,
    prior_sign,
    argmax_consistency,
    gradient_continuity,
    mesh_convergence,
);
