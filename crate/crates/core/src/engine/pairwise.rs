use super::EngineError;
use crate::geom::Vec3;
use crate::resample::Frame;

/// Dense row-major `n x n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SquareMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Clone> SquareMatrix<T> {
    pub fn filled(n: usize, value: T) -> Self {
        SquareMatrix { n, data: vec![value; n * n] }
    }
}

impl<T> SquareMatrix<T> {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: T) {
        self.data[i * self.n + j] = value;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }
}

/// Distance and ego-bearing angle matrices for one frame.
///
/// `angle[i][j]` is the angle between user i's view direction and the line
/// from i to j: 0 when i looks straight at j, pi when j is directly behind.
/// It is `None` on the diagonal and for coincident positions.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMatrices {
    pub frame_index: u64,
    pub users: Vec<String>,
    pub distance: SquareMatrix<f64>,
    pub angle: SquareMatrix<Option<f64>>,
}

/// Gaze-to-bearing angle from a viewer at `from` looking along `direction`
/// to the point `to`. `None` when the two points coincide.
pub fn bearing_angle(from: Vec3, direction: Vec3, to: Vec3) -> Option<f64> {
    let bearing = (to - from).normalized()?;
    Some(direction.dot(bearing).clamp(-1.0, 1.0).acos())
}

pub fn pairwise_points(
    positions: &[Vec3],
    directions: &[Vec3],
) -> Result<(SquareMatrix<f64>, SquareMatrix<Option<f64>>), EngineError> {
    if positions.len() != directions.len() {
        return Err(EngineError::DimensionMismatch {
            left: positions.len(),
            right: directions.len(),
        });
    }
    let n = positions.len();
    let mut distance = SquareMatrix::filled(n, 0.0);
    let mut angle = SquareMatrix::filled(n, None);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = positions[i].distance(positions[j]);
            distance.set(i, j, d);
            distance.set(j, i, d);
        }
        for j in 0..n {
            if i != j {
                angle.set(i, j, bearing_angle(positions[i], directions[i], positions[j]));
            }
        }
    }
    Ok((distance, angle))
}

/// Pairwise matrices for the users of one frame, in user-id order.
pub fn pairwise(frame_index: u64, frame: &Frame) -> Result<PairwiseMatrices, EngineError> {
    if frame.is_empty() {
        return Err(EngineError::Empty("frame has no users"));
    }
    let users: Vec<String> = frame.keys().cloned().collect();
    let positions: Vec<Vec3> = frame.values().map(|p| p.position).collect();
    let directions: Vec<Vec3> = frame.values().map(|p| p.direction).collect();
    let (distance, angle) = pairwise_points(&positions, &directions)?;
    Ok(PairwiseMatrices { frame_index, users, distance, angle })
}
