//! Manhattan-grid mobility: vehicles drive along horizontal and vertical
//! roads spaced evenly over the area and pick a new direction at each
//! intersection.

use rand::Rng;
use rand_chacha::ChaCha20Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Heading {
    East,
    West,
    North,
    South,
}

impl Heading {
    fn unit(self) -> (f64, f64) {
        match self {
            Heading::East => (1.0, 0.0),
            Heading::West => (-1.0, 0.0),
            Heading::North => (0.0, 1.0),
            Heading::South => (0.0, -1.0),
        }
    }

    fn left(self) -> Self {
        match self {
            Heading::East => Heading::North,
            Heading::North => Heading::West,
            Heading::West => Heading::South,
            Heading::South => Heading::East,
        }
    }

    fn right(self) -> Self {
        self.left().left().left()
    }

    fn back(self) -> Self {
        self.left().left()
    }

    pub fn is_horizontal(self) -> bool {
        matches!(self, Heading::East | Heading::West)
    }
}

#[derive(Clone, Debug)]
pub struct Grid {
    pub width: f64,
    pub height: f64,
    pub blocks_x: u32,
    pub blocks_y: u32,
}

/// A point on the road network.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoadPosition {
    pub x: f64,
    pub y: f64,
    /// Road index; horizontal roads are numbered by row, vertical by column.
    pub road: u32,
    pub horizontal: bool,
}

impl Grid {
    pub fn spacing(&self) -> (f64, f64) {
        (self.width / self.blocks_x as f64, self.height / self.blocks_y as f64)
    }

    /// Total road length in meters.
    pub fn road_length(&self) -> f64 {
        (self.blocks_y + 1) as f64 * self.width + (self.blocks_x + 1) as f64 * self.height
    }

    pub fn area_km2(&self) -> f64 {
        self.width * self.height / 1e6
    }

    /// Uniform over total road length.
    pub fn random_position<R: Rng + ?Sized>(&self, rng: &mut R) -> RoadPosition {
        let (sx, sy) = self.spacing();
        let horizontal_len = (self.blocks_y + 1) as f64 * self.width;
        let u = rng.random::<f64>() * self.road_length();
        if u < horizontal_len {
            let road = ((u / self.width) as u32).min(self.blocks_y);
            RoadPosition {
                x: rng.random::<f64>() * self.width,
                y: road as f64 * sy,
                road,
                horizontal: true,
            }
        } else {
            let road = (((u - horizontal_len) / self.height) as u32).min(self.blocks_x);
            RoadPosition {
                x: road as f64 * sx,
                y: rng.random::<f64>() * self.height,
                road,
                horizontal: false,
            }
        }
    }

    fn can_leave(&self, x: f64, y: f64, h: Heading) -> bool {
        const EPS: f64 = 1e-6;
        match h {
            Heading::East => x < self.width - EPS,
            Heading::West => x > EPS,
            Heading::North => y < self.height - EPS,
            Heading::South => y > EPS,
        }
    }
}

pub struct Vehicle {
    pub x: f64,
    pub y: f64,
    pub heading: Heading,
    /// Meters per second.
    pub speed: f64,
    rng: ChaCha20Rng,
}

impl Vehicle {
    /// Places a vehicle uniformly on the road network with speed drawn from
    /// `[0.8, 1.2] * mean_speed`.
    pub fn spawn(grid: &Grid, mean_speed_kmh: f64, mut rng: ChaCha20Rng) -> Self {
        let pos = grid.random_position(&mut rng);
        let forward = rng.random::<bool>();
        let heading = match (pos.horizontal, forward) {
            (true, true) => Heading::East,
            (true, false) => Heading::West,
            (false, true) => Heading::North,
            (false, false) => Heading::South,
        };
        let speed = rng.random_range(0.8..=1.2) * mean_speed_kmh / 3.6;
        let mut v = Vehicle {
            x: pos.x,
            y: pos.y,
            heading,
            speed,
            rng,
        };
        if !grid.can_leave(v.x, v.y, v.heading) {
            v.heading = v.heading.back();
        }
        v
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    /// Distance to the next intersection ahead.
    fn to_intersection(&self, grid: &Grid) -> f64 {
        const EPS: f64 = 1e-9;
        let (sx, sy) = grid.spacing();
        match self.heading {
            Heading::East => ((self.x / sx + EPS).floor() + 1.0) * sx - self.x,
            Heading::West => self.x - ((self.x / sx - EPS).ceil() - 1.0) * sx,
            Heading::North => ((self.y / sy + EPS).floor() + 1.0) * sy - self.y,
            Heading::South => self.y - ((self.y / sy - EPS).ceil() - 1.0) * sy,
        }
    }

    /// Straight ahead with probability 1/2, otherwise left or right; never
    /// off the grid, and a U-turn only at a dead end.
    fn turn(&mut self, grid: &Grid) {
        let h = self.heading;
        let options = [(h, 2u32), (h.left(), 1), (h.right(), 1)];
        let valid: Vec<(Heading, u32)> = options
            .into_iter()
            .filter(|(d, _)| grid.can_leave(self.x, self.y, *d))
            .collect();
        if valid.is_empty() {
            self.heading = h.back();
            return;
        }
        let total: u32 = valid.iter().map(|(_, w)| w).sum();
        let mut pick = self.rng.random_range(0..total);
        for (d, w) in valid {
            if pick < w {
                self.heading = d;
                return;
            }
            pick -= w;
        }
    }

    pub fn advance(&mut self, grid: &Grid, dt: f64) {
        let (sx, sy) = grid.spacing();
        let mut remaining = self.speed * dt;
        while remaining > 0.0 {
            let d = self.to_intersection(grid);
            let (ux, uy) = self.heading.unit();
            if remaining < d {
                self.x += ux * remaining;
                self.y += uy * remaining;
                break;
            }
            self.x += ux * d;
            self.y += uy * d;
            // snap onto the intersection to keep coordinates exact
            self.x = (self.x / sx).round() * sx;
            self.y = (self.y / sy).round() * sy;
            remaining -= d;
            self.turn(grid);
        }
    }
}
