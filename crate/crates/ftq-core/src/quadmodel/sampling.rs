//! Uniform random rotation sampling.

use nalgebra::{Quaternion, UnitQuaternion};
use rand::Rng;

/// Draw a rotation uniformly distributed on SO(3).
///
/// Subgroup construction from three independent uniform variates: a uniform
/// planar rotation lifted to the sphere, giving a quaternion uniform on S^3.
pub fn random_unit_quaternion<R: Rng + ?Sized>(rng: &mut R) -> UnitQuaternion<f64> {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen();
    let u3: f64 = rng.gen();
    let two_pi = std::f64::consts::TAU;
    let a = (1.0 - u1).sqrt();
    let b = u1.sqrt();
    let q = Quaternion::new(
        a * (two_pi * u2).sin(),
        a * (two_pi * u2).cos(),
        b * (two_pi * u3).sin(),
        b * (two_pi * u3).cos(),
    );
    UnitQuaternion::new_unchecked(q)
}

/// Rotation angle of a unit quaternion in [0, pi].
pub fn rotation_angle(q: &UnitQuaternion<f64>) -> f64 {
    2.0 * q.w.abs().clamp(0.0, 1.0).acos()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn samples_have_unit_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let q = random_unit_quaternion(&mut rng);
            assert!((q.as_ref().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn same_seed_same_sample() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            assert_eq!(random_unit_quaternion(&mut a), random_unit_quaternion(&mut b));
        }
    }

    #[test]
    fn mean_rotation_angle_matches_uniform_law() {
        // E[theta] for uniform rotations is pi/2 + 2/pi.
        let expected = std::f64::consts::FRAC_PI_2 + 2.0 / std::f64::consts::PI;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = 100_000;
        let mean = (0..n)
            .map(|_| rotation_angle(&random_unit_quaternion(&mut rng)))
            .sum::<f64>()
            / n as f64;
        assert!((mean - expected).abs() < 0.01, "mean {mean} vs {expected}");
    }
}
