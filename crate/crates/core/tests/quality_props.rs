use nalgebra::{Point3, Rotation3, Vector3};
use proptest::prelude::*;
use quadsmooth::quality::QualityReport;
use quadsmooth::{gamma_quality, lambda_quality, Metric};

fn coord() -> impl Strategy<Value = f64> {
    -10.0..10.0f64
}

fn point() -> impl Strategy<Value = Point3<f64>> {
    (coord(), coord(), coord()).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn planar_point() -> impl Strategy<Value = Point3<f64>> {
    (coord(), coord()).prop_map(|(x, y)| Point3::new(x, y, 0.0))
}

/// Rotation about a random axis, uniform scale and translation.
fn similarity() -> impl Strategy<Value = (Rotation3<f64>, f64, Vector3<f64>)> {
    (point(), -3.1..3.1f64, 0.1..10.0f64, point()).prop_filter_map(
        "zero axis",
        |(axis, angle, s, t)| {
            let axis = axis.coords;
            (axis.norm() > 1e-3).then(|| {
                (
                    Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle),
                    s,
                    t.coords,
                )
            })
        },
    )
}

type QualityFn = fn(Point3<f64>, Point3<f64>, Point3<f64>, Point3<f64>) -> f64;

fn check_invariance(
    f: QualityFn,
    q: [Point3<f64>; 4],
    (r, s, t): (Rotation3<f64>, f64, Vector3<f64>),
) {
    let base = f(q[0], q[1], q[2], q[3]);
    let m = q.map(|p| Point3::from(r * p.coords * s + t));
    let moved = f(m[0], m[1], m[2], m[3]);
    assert!((base - moved).abs() < 1e-10, "{base} vs {moved}");
    let cyc = f(q[1], q[2], q[3], q[0]);
    assert!((base - cyc).abs() < 1e-10, "{base} vs cyclic {cyc}");
}

proptest! {
    #[test]
    fn lambda_invariant(q in prop::array::uniform4(planar_point()), sim in similarity()) {
        check_invariance(lambda_quality, q, sim);
    }

    #[test]
    fn gamma_invariant(q in prop::array::uniform4(point()), sim in similarity()) {
        check_invariance(gamma_quality, q, sim);
    }

    #[test]
    fn qualities_in_unit_interval(q in prop::array::uniform4(point())) {
        for v in [lambda_quality(q[0], q[1], q[2], q[3]), gamma_quality(q[0], q[1], q[2], q[3])] {
            prop_assert!(v.is_finite() && (0.0..=1.0 + 1e-12).contains(&v), "{v}");
        }
    }

    #[test]
    fn mse_zero_iff_all_equal(values in prop::collection::vec(0.0..=1.0f64, 1..40), spread in any::<bool>()) {
        let values = if spread { values } else { vec![values[0]; values.len()] };
        let all_equal = values.iter().all(|&v| v == values[0]);
        let r = QualityReport::from_values(values, Metric::Lambda, 0).unwrap();
        prop_assert_eq!(r.mse == 0.0, all_equal);
        prop_assert_eq!(r.histogram.iter().sum::<usize>(), r.per_element.len());
    }
}

#[test]
fn unit_square_and_degenerate() {
    let p = |x, y| Point3::new(x, y, 0.0);
    assert!((lambda_quality(p(0., 0.), p(1., 0.), p(1., 1.), p(0., 1.)) - 1.0).abs() < 1e-12);
    assert_eq!(
        lambda_quality(p(0., 0.), p(1., 0.), p(2., 0.), p(0., 1.)),
        0.0
    );
}
