use super::pairwise::bearing_angle;
use super::EngineError;
use crate::geom::Vec3;
use crate::resample::FrameStore;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FovStats {
    /// Share of counted poses with the target inside the view cone.
    pub fraction: f64,
    pub inside: usize,
    pub samples: usize,
    /// Poses located exactly on the target, which have no bearing.
    pub skipped: usize,
}

/// How often `target` lies within `half_angle` radians of users' view
/// directions, over every pose in the store.
pub fn fov_containment(store: &FrameStore, target: Vec3, half_angle: f64) -> Result<FovStats, EngineError> {
    if !(half_angle > 0.0 && half_angle < PI) {
        return Err(EngineError::InvalidParameter { name: "half_angle", value: half_angle.to_string() });
    }
    if !target.is_finite() {
        return Err(EngineError::InvalidParameter { name: "target", value: format!("{target:?}") });
    }
    let (mut inside, mut samples, mut skipped) = (0, 0, 0);
    for (_, _, pose) in store.poses() {
        match bearing_angle(pose.position, pose.direction, target) {
            Some(angle) => {
                samples += 1;
                if angle <= half_angle {
                    inside += 1;
                }
            }
            None => skipped += 1,
        }
    }
    if samples == 0 {
        return Err(EngineError::Empty("no poses with a bearing to the target"));
    }
    Ok(FovStats { fraction: inside as f64 / samples as f64, inside, samples, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::Quat;
    use crate::resample::{FrameClock, Pose};
    use proptest::prelude::*;

    fn store(poses: &[(Vec3, Vec3)]) -> FrameStore {
        let clock = FrameClock::new(1_000, 0).unwrap();
        let mut s = FrameStore::new("hall", clock);
        for (i, &(p, d)) in poses.iter().enumerate() {
            let pose = Pose { position: p, direction: d, orientation: Quat::IDENTITY, source_ts: 0 };
            s.insert(0, format!("u{i:02}"), pose).unwrap();
        }
        s
    }

    fn ring(facing_sign: f64) -> FrameStore {
        let target = Vec3::new(0.0, 1.5, 0.0);
        let poses: Vec<_> = (0..12)
            .map(|k| {
                let a = k as f64 * PI / 6.0;
                let p = Vec3::new(4.0 * a.cos(), 0.0, 4.0 * a.sin());
                (p, (target - p).normalized().unwrap() * facing_sign)
            })
            .collect();
        store(&poses)
    }

    #[test]
    fn facing_target_and_away() {
        let t = Vec3::new(0.0, 1.5, 0.0);
        assert_eq!(fov_containment(&ring(1.0), t, PI / 4.0).unwrap().fraction, 1.0);
        assert_eq!(fov_containment(&ring(-1.0), t, PI / 4.0).unwrap().fraction, 0.0);
    }

    #[test]
    fn user_on_target_is_skipped() {
        let t = Vec3::new(1.0, 0.0, 1.0);
        let s = store(&[(t, Vec3::new(1.0, 0.0, 0.0)), (Vec3::ZERO, t.normalized().unwrap())]);
        let stats = fov_containment(&s, t, 0.1).unwrap();
        assert_eq!((stats.samples, stats.skipped, stats.inside), (1, 1, 1));
    }

    #[test]
    fn parameter_errors() {
        let t = Vec3::ZERO;
        assert!(fov_containment(&ring(1.0), t, 0.0).is_err());
        assert!(fov_containment(&ring(1.0), t, PI).is_err());
        assert!(fov_containment(&ring(1.0), Vec3::new(f64::NAN, 0.0, 0.0), 1.0).is_err());
        assert!(matches!(fov_containment(&store(&[]), t, 1.0), Err(EngineError::Empty(_))));
    }

    proptest! {
        #[test]
        fn monotone_in_half_angle(yaws in prop::collection::vec(-PI..PI, 1..40), a in 0.01f64..3.1, b in 0.01f64..3.1) {
            let poses: Vec<_> = yaws.iter().enumerate()
                .map(|(i, &y)| (Vec3::new(i as f64, 0.0, 0.0), Vec3::new(y.cos(), 0.0, y.sin())))
                .collect();
            let s = store(&poses);
            let t = Vec3::new(3.0, 0.0, 7.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(fov_containment(&s, t, lo).unwrap().fraction <= fov_containment(&s, t, hi).unwrap().fraction);
        }
    }
}
