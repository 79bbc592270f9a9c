use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ramp {
    /// White through yellow and orange to dark red.
    #[default]
    Heat,
    /// Black to white.
    Gray,
    /// White to dark blue.
    Blues,
}

const HEAT: [(f64, [u8; 3]); 5] = [
    (0.0, [255, 255, 255]),
    (0.25, [255, 237, 160]),
    (0.5, [254, 178, 76]),
    (0.75, [240, 59, 32]),
    (1.0, [128, 0, 38]),
];
const GRAY: [(f64, [u8; 3]); 2] = [(0.0, [0, 0, 0]), (1.0, [255, 255, 255])];
const BLUES: [(f64, [u8; 3]); 3] = [(0.0, [247, 251, 255]), (0.5, [107, 174, 214]), (1.0, [8, 48, 107])];

impl Ramp {
    pub const ALL: [Ramp; 3] = [Ramp::Heat, Ramp::Gray, Ramp::Blues];

    pub fn name(self) -> &'static str {
        match self {
            Ramp::Heat => "heat",
            Ramp::Gray => "gray",
            Ramp::Blues => "blues",
        }
    }

    fn stops(self) -> &'static [(f64, [u8; 3])] {
        match self {
            Ramp::Heat => &HEAT,
            Ramp::Gray => &GRAY,
            Ramp::Blues => &BLUES,
        }
    }

    /// Colour at `t`, clamped to `[0, 1]`, by linear interpolation between stops.
    pub fn rgb(self, t: f64) -> [u8; 3] {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let stops = self.stops();
        let k = stops.windows(2).position(|w| t <= w[1].0).unwrap_or(stops.len() - 2);
        let ((t0, c0), (t1, c1)) = (stops[k], stops[k + 1]);
        let f = (t - t0) / (t1 - t0);
        let mut out = [0u8; 3];
        for i in 0..3 {
            out[i] = (c0[i] as f64 + (c1[i] as f64 - c0[i] as f64) * f).round() as u8;
        }
        out
    }

    pub fn hex(self, t: f64) -> String {
        let [r, g, b] = self.rgb(t);
        format!("#{r:02x}{g:02x}{b:02x}")
    }
}

impl FromStr for Ramp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ramp::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| format!("unknown colour ramp `{s}` (expected heat, gray or blues)"))
    }
}
