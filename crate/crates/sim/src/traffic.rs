//! Poisson traffic on the two-direction highway segment.

use isac_core::CartesianPose;
use nalgebra::Vector2;
use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};

use crate::config::TrafficConfig;

/// One vehicle's passage through the segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub id: u64,
    /// Time the vehicle crosses its entry edge (s); negative for vehicles
    /// already on the road when the run starts.
    pub time: f64,
    /// `+1` travels toward increasing x, `−1` toward decreasing x.
    pub direction: i8,
    pub speed: f64,
    /// Lateral offset from the centerline (m).
    pub lane_y: f64,
}

impl Arrival {
    pub fn departure(&self, road: &TrafficConfig) -> f64 {
        self.time + road.length() / self.speed
    }

    pub fn is_active(&self, t: f64, road: &TrafficConfig) -> bool {
        self.time <= t && t < self.departure(road)
    }

    /// Exact straight-line pose at time `t`.
    pub fn pose(&self, t: f64, road: &TrafficConfig) -> CartesianPose<f64> {
        let dir = f64::from(self.direction);
        let entry = if self.direction > 0 {
            road.road_start_x
        } else {
            road.road_end_x
        };
        let x = entry + dir * self.speed * (t - self.time);
        CartesianPose::new(Vector2::new(x, self.lane_y), self.speed, Vector2::new(dir, 0.0))
    }
}

/// Gaussian speed redrawn until it exceeds the configured minimum.
pub fn draw_speed<R: Rng + ?Sized>(road: &TrafficConfig, rng: &mut R) -> f64 {
    if road.speed_std == 0.0 {
        return road.speed_mean;
    }
    let normal = Normal::new(road.speed_mean, road.speed_std).expect("validated spread");
    loop {
        let v = normal.sample(rng);
        if v > road.speed_min {
            return v;
        }
    }
}

pub fn draw_lane<R: Rng + ?Sized>(road: &TrafficConfig, rng: &mut R) -> f64 {
    let half = road.road_width / 2.0;
    rng.random_range(-half..half)
}

/// Arrival schedule over `[0, duration)` with independent Poisson streams
/// per direction, sorted by arrival time.
pub fn generate_traffic<R: Rng + ?Sized>(road: &TrafficConfig, duration: f64, rng: &mut R) -> Vec<Arrival> {
    let mut out = Vec::new();
    if road.rate_per_direction > 0.0 {
        let gap = Exp::new(road.rate_per_direction).expect("positive rate");
        for direction in [1i8, -1] {
            let mut t = gap.sample(rng);
            while t < duration {
                out.push(Arrival {
                    id: 0,
                    time: t,
                    direction,
                    speed: draw_speed(road, rng),
                    lane_y: draw_lane(road, rng),
                });
                t += gap.sample(rng);
            }
        }
    }
    out.sort_by(|a, b| a.time.total_cmp(&b.time).then(b.direction.cmp(&a.direction)));
    for (i, a) in out.iter_mut().enumerate() {
        a.id = i as u64;
    }
    out
}

/// `k` vehicles already spread over the road at time zero, uniformly in
/// position, direction and lane.
pub fn populate<R: Rng + ?Sized>(road: &TrafficConfig, k: usize, rng: &mut R) -> Vec<Arrival> {
    place_vehicles(road, k, road.length(), rng)
}

/// Like [`populate`] but every vehicle starts within `span` metres of its
/// entry edge, so it stays on the road for at least `(length − span) / speed`.
pub fn place_vehicles<R: Rng + ?Sized>(road: &TrafficConfig, k: usize, span: f64, rng: &mut R) -> Vec<Arrival> {
    (0..k)
        .map(|i| {
            let direction = if rng.random_bool(0.5) { 1 } else { -1 };
            let speed = draw_speed(road, rng);
            let travelled = rng.random_range(0.0..span.min(road.length()));
            Arrival {
                id: i as u64,
                time: -travelled / speed,
                direction,
                speed,
                lane_y: draw_lane(road, rng),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rate_is_empty() {
        let road = TrafficConfig {
            rate_per_direction: 0.0,
            ..Default::default()
        };
        assert!(generate_traffic(&road, 100.0, &mut ChaCha8Rng::seed_from_u64(0)).is_empty());
    }

    #[test]
    fn poses_stay_on_road_while_active() {
        let road = TrafficConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for a in generate_traffic(&road, 20.0, &mut rng) {
            assert!(a.speed > road.speed_min);
            let mid = 0.5 * (a.time + a.departure(&road));
            let p = a.pose(mid, &road).position;
            assert!(p.x > road.road_start_x && p.x < road.road_end_x);
            assert!(p.y.abs() <= road.road_width / 2.0);
        }
    }
}
