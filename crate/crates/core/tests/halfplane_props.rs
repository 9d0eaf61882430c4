//! Property tests for upper half-plane geometry and the SL2(Z) action.

use num_complex::Complex64;
use polarlab::halfplane::{
    automorphy, enumerate_shell, mobius_apply, reduce_to_fd, sl2z_equivalent, x_coord, x_inverse, ModMatrix, ShellSpec,
    UHPoint,
};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = UHPoint> {
    (-3.0f64..3.0, 0.05f64..4.0).prop_map(|(x, y)| UHPoint::new(x, y).unwrap())
}

/// Matrices drawn from the first few shells.
fn matrix() -> impl Strategy<Value = ModMatrix> {
    (1u32..=5, any::<prop::sample::Index>()).prop_map(|(n, i)| {
        let shell = enumerate_shell(ShellSpec { max_entry: n });
        shell[i.index(shell.len())]
    })
}

/// `(az + b)/(cz + d)` evaluated directly from the entries.
fn mobius_oracle(m: &ModMatrix, z: UHPoint) -> Complex64 {
    let (a, b, c, d) = m.entries();
    let z = Complex64::new(z.x(), z.y());
    (z * a as f64 + b as f64) / (z * c as f64 + d as f64)
}

proptest! {
    #[test]
    fn action_matches_entries(m in matrix(), z in point()) {
        let w = mobius_apply(&m, z);
        let oracle = mobius_oracle(&m, z);
        prop_assert!((w.z() - oracle).norm() <= 1e-12 * (1.0 + oracle.norm()));
    }

    #[test]
    fn imaginary_part_scales_by_automorphy(m in matrix(), z in point()) {
        let w = mobius_apply(&m, z);
        let expect = z.y() / automorphy(&m, z).norm_sqr();
        prop_assert!((w.y() - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn action_is_compatible_with_products(g in matrix(), h in matrix(), z in point()) {
        let lhs = mobius_apply(&(g * h), z);
        let rhs = mobius_apply(&g, mobius_apply(&h, z));
        prop_assert!((lhs.z() - rhs.z()).norm() <= 1e-9 * (1.0 + lhs.z().norm()));
    }

    #[test]
    fn reduction_lands_in_the_domain(z in point()) {
        let (w, g) = reduce_to_fd(z);
        prop_assert!(w.x() >= -0.5 - 1e-12 && w.x() < 0.5 + 1e-12);
        prop_assert!(w.z().norm() >= 1.0 - 1e-12);
        let moved = mobius_oracle(&g, z);
        prop_assert!((moved - w.z()).norm() <= 1e-9 * (1.0 + w.z().norm()));
    }

    #[test]
    fn orbit_points_are_equivalent(m in matrix(), z in point()) {
        prop_assert!(sl2z_equivalent(z, mobius_apply(&m, z), 1e-8));
    }

    #[test]
    fn elliptic_coordinate_round_trips(c in point(), z in point()) {
        let x = x_coord(c, z);
        prop_assert!(x.norm() < 1.0);
        let back = x_inverse(c, x).unwrap();
        prop_assert!((back.z() - z.z()).norm() <= 1e-9 * (1.0 + z.z().norm()));
    }

    #[test]
    fn shell_matrices_have_unit_determinant(n in 1u32..=12) {
        for m in enumerate_shell(ShellSpec { max_entry: n }).iter() {
            let (a, b, c, d) = m.entries();
            prop_assert_eq!(a * d - b * c, 1);
            prop_assert_eq!(m.max_entry(), n as i64);
        }
    }
}
