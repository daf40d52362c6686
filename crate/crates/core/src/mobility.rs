//! Shortest-path map-based movement.
//!
//! A host repeatedly picks a random destination waypoint, walks the shortest
//! road path to it at a random speed, pauses for a random time and repeats.

use rand::Rng;

use crate::map::{MapError, MapGraph, Point};

/// One trip between two waypoints followed by a pause.
#[derive(Debug, Clone, PartialEq)]
pub struct MovementLeg {
    pub from_wp: usize,
    pub to_wp: usize,
    pub path: Vec<usize>,
    pub speed: f64,
    pub depart_at: f64,
    pub pause_after: f64,
    vertices: Vec<Point>,
    /// Cumulative distance at each vertex; `cumulative[0] == 0`.
    cumulative: Vec<f64>,
}

impl MovementLeg {
    pub fn new(
        graph: &MapGraph,
        path: Vec<usize>,
        speed: f64,
        depart_at: f64,
        pause_after: f64,
    ) -> Self {
        let vertices: Vec<Point> = path.iter().map(|&i| graph.waypoint(i)).collect();
        let mut cumulative = Vec::with_capacity(vertices.len());
        let mut acc = 0.0;
        cumulative.push(acc);
        for w in vertices.windows(2) {
            acc += w[0].distance(&w[1]);
            cumulative.push(acc);
        }
        Self {
            from_wp: path[0],
            to_wp: *path.last().expect("non-empty path"),
            path,
            speed,
            depart_at,
            pause_after,
            vertices,
            cumulative,
        }
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    pub fn arrival_at(&self) -> f64 {
        self.depart_at + self.length() / self.speed
    }

    /// Time at which the pause ends and the next leg departs.
    pub fn end_at(&self) -> f64 {
        self.arrival_at() + self.pause_after
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    /// Position at time `t`, clamped to the final waypoint after arrival.
    pub fn position_at(&self, t: f64) -> Point {
        let travelled = self.speed * (t - self.depart_at).max(0.0);
        if travelled >= self.length() {
            return *self.vertices.last().expect("non-empty path");
        }
        // first vertex whose cumulative distance exceeds `travelled`
        let seg = self.cumulative.partition_point(|&c| c <= travelled);
        let (start, end) = (self.vertices[seg - 1], self.vertices[seg]);
        let seg_len = self.cumulative[seg] - self.cumulative[seg - 1];
        let frac = (travelled - self.cumulative[seg - 1]) / seg_len;
        Point::new(
            start.x + (end.x - start.x) * frac,
            start.y + (end.y - start.y) * frac,
        )
    }
}

/// Draws the next leg from `current_wp`: uniform destination among the other
/// waypoints, uniform speed and pause from their inclusive ranges.
pub fn plan_next_leg<R: Rng + ?Sized>(
    graph: &MapGraph,
    current_wp: usize,
    rng: &mut R,
    speed_range: (f64, f64),
    pause_range: (f64, f64),
    depart_at: f64,
) -> Result<MovementLeg, MapError> {
    let n = graph.len();
    if n < 2 {
        return Err(MapError::TooSmall);
    }
    if current_wp >= n {
        return Err(MapError::BadWaypoint(current_wp));
    }
    let mut dest = rng.gen_range(0..n - 1);
    if dest >= current_wp {
        dest += 1;
    }
    let speed = rng.gen_range(speed_range.0..=speed_range.1);
    let pause = rng.gen_range(pause_range.0..=pause_range.1);
    let path = graph.shortest_path(current_wp, dest)?;
    Ok(MovementLeg::new(graph, path, speed, depart_at, pause))
}

/// Per-host movement state: the current leg plus the host's own random
/// stream.
#[derive(Debug, Clone)]
pub struct Walker<R> {
    leg: MovementLeg,
    rng: R,
    speed_range: (f64, f64),
    pause_range: (f64, f64),
}

impl<R: Rng> Walker<R> {
    /// Spawns at a uniformly chosen waypoint and plans the first leg at t=0.
    pub fn spawn(
        graph: &MapGraph,
        mut rng: R,
        speed_range: (f64, f64),
        pause_range: (f64, f64),
    ) -> Result<Self, MapError> {
        let start = rng.gen_range(0..graph.len());
        let leg = plan_next_leg(graph, start, &mut rng, speed_range, pause_range, 0.0)?;
        Ok(Self {
            leg,
            rng,
            speed_range,
            pause_range,
        })
    }

    /// Advances to time `t`, planning new legs as earlier ones finish.
    pub fn position(&mut self, graph: &MapGraph, t: f64) -> Result<Point, MapError> {
        while t >= self.leg.end_at() {
            let depart = self.leg.end_at();
            self.leg = plan_next_leg(
                graph,
                self.leg.to_wp,
                &mut self.rng,
                self.speed_range,
                self.pause_range,
                depart,
            )?;
        }
        Ok(self.leg.position_at(t))
    }

    pub fn leg(&self) -> &MovementLeg {
        &self.leg
    }
}
