use super::EngineError;
use serde::{Deserialize, Serialize};
use std::fmt;

/// Hall's interpersonal distance bands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProxemicZone {
    Intimate,
    Personal,
    Social,
    Public,
}

impl ProxemicZone {
    pub const ALL: [ProxemicZone; 4] = [
        ProxemicZone::Intimate,
        ProxemicZone::Personal,
        ProxemicZone::Social,
        ProxemicZone::Public,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProxemicZone::Intimate => "intimate",
            ProxemicZone::Personal => "personal",
            ProxemicZone::Social => "social",
            ProxemicZone::Public => "public",
        }
    }
}

impl fmt::Display for ProxemicZone {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Upper edges of the intimate, personal and social bands, in meters.
/// Each band is half-open: `[lower, upper)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneBoundaries {
    pub intimate: f64,
    pub personal: f64,
    pub social: f64,
}

impl Default for ZoneBoundaries {
    fn default() -> Self {
        ZoneBoundaries { intimate: 0.45, personal: 1.2, social: 3.6 }
    }
}

impl ZoneBoundaries {
    pub fn new(intimate: f64, personal: f64, social: f64) -> Result<Self, EngineError> {
        let b = ZoneBoundaries { intimate, personal, social };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<(), EngineError> {
        let ordered = 0.0 < self.intimate && self.intimate < self.personal && self.personal < self.social;
        if ordered && self.social.is_finite() {
            Ok(())
        } else {
            Err(EngineError::InvalidParameter {
                name: "zone boundaries",
                value: format!("{}/{}/{}", self.intimate, self.personal, self.social),
            })
        }
    }

    pub fn edges(&self) -> [f64; 3] {
        [self.intimate, self.personal, self.social]
    }

    pub fn classify(&self, distance: f64) -> Result<ProxemicZone, EngineError> {
        if distance.is_nan() || distance < 0.0 {
            return Err(EngineError::InvalidDistance(distance));
        }
        Ok(if distance < self.intimate {
            ProxemicZone::Intimate
        } else if distance < self.personal {
            ProxemicZone::Personal
        } else if distance < self.social {
            ProxemicZone::Social
        } else {
            ProxemicZone::Public
        })
    }
}

/// Classifies a distance with the default boundaries (0.45 m, 1.2 m, 3.6 m).
pub fn classify_zone(distance: f64) -> Result<ProxemicZone, EngineError> {
    ZoneBoundaries::default().classify(distance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ProxemicZone::*;

    #[test]
    fn examples() {
        assert_eq!(classify_zone(0.30).unwrap(), Intimate);
        assert_eq!(classify_zone(0.45).unwrap(), Personal);
        assert_eq!(classify_zone(5.0).unwrap(), Public);
        assert_eq!(classify_zone(f64::INFINITY).unwrap(), Public);
    }

    #[test]
    fn negative_and_nan_distances_are_errors() {
        assert!(matches!(classify_zone(-0.1), Err(EngineError::InvalidDistance(_))));
        assert!(classify_zone(f64::NAN).is_err());
    }

    #[test]
    fn configurable_intimate_edge() {
        let b = ZoneBoundaries::new(0.5, 1.2, 3.6).unwrap();
        assert_eq!(b.classify(0.47).unwrap(), Intimate);
        assert!(ZoneBoundaries::new(1.0, 0.5, 3.6).is_err());
    }
}
