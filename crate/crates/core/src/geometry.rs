//! Planar geometry for hexagonal macro layouts.
//!
//! Sites live on a hexagonal lattice with basis vectors `a1 = (d, 0)` and
//! `a2 = (d/2, d*sqrt(3)/2)` where `d` is the inter-site distance. A
//! deployment of `tiers` rings around the centre site has `3t^2 + 3t + 1`
//! sites (1, 7, 19, ...). Geographic wrap-around mirrors the whole cluster
//! on the lattice generated by `t1 = (tiers+1)*a1 + tiers*a2` and its 60
//! degree rotation, which tiles the plane exactly.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn add(&self, other: &Point) -> Point {
        Point::new(self.x + other.x, self.y + other.y)
    }
}

fn lattice_point(u: i64, v: i64, isd: f64) -> Point {
    Point::new(
        u as f64 * isd + v as f64 * isd / 2.0,
        v as f64 * isd * 3f64.sqrt() / 2.0,
    )
}

/// Hex-grid ring index of axial coordinate `(u, v)`.
fn hex_ring(u: i64, v: i64) -> i64 {
    u.abs().max(v.abs()).max((u + v).abs())
}

/// Site positions for a deployment with the given number of tiers,
/// ordered centre-out (ring, then angle) for stable indexing.
pub fn hex_site_positions(tiers: u32, isd: f64) -> Vec<Point> {
    let t = tiers as i64;
    let mut sites: Vec<(i64, f64, Point)> = Vec::new();
    for u in -t..=t {
        for v in -t..=t {
            if hex_ring(u, v) <= t {
                let p = lattice_point(u, v, isd);
                let angle = p.y.atan2(p.x);
                sites.push((hex_ring(u, v), angle, p));
            }
        }
    }
    sites.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.partial_cmp(&b.1).unwrap()));
    sites.into_iter().map(|(_, _, p)| p).collect()
}

/// Cluster translation vectors for geographic wrap-around: the zero offset
/// plus the six nearest mirror-cluster centres.
pub fn wraparound_offsets(tiers: u32, isd: f64) -> Vec<Point> {
    let i = tiers as i64 + 1;
    let j = tiers as i64;
    let t1 = lattice_point(i, j, isd);
    // 60 degree lattice rotation: (u, v) -> (-v, u+v)
    let t2 = lattice_point(-j, i + j, isd);
    vec![
        Point::new(0.0, 0.0),
        t1,
        t2,
        Point::new(t2.x - t1.x, t2.y - t1.y),
        Point::new(-t1.x, -t1.y),
        Point::new(-t2.x, -t2.y),
        Point::new(t1.x - t2.x, t1.y - t2.y),
    ]
}

/// Whether `p` lies in the site hexagon centred at `center`.
///
/// The hexagon has apothem `isd/2` with flat faces toward the six lattice
/// neighbours, so site hexagons tile the plane without gaps.
pub fn point_in_site_hexagon(p: &Point, center: &Point, isd: f64) -> bool {
    let dx = p.x - center.x;
    let dy = p.y - center.y;
    let apothem = isd / 2.0 + 1e-9;
    for k in 0..3 {
        let theta = (k as f64) * 60f64.to_radians();
        let proj = dx * theta.cos() + dy * theta.sin();
        if proj.abs() > apothem {
            return false;
        }
    }
    true
}

/// Whether `p` falls inside the angular wedge of the sector pointing at
/// `azimuth_deg` with the given half-width (degrees).
pub fn in_sector_wedge(p: &Point, center: &Point, azimuth_deg: f64, half_width_deg: f64) -> bool {
    let angle = (p.y - center.y).atan2(p.x - center.x).to_degrees();
    let off = crate::units::wrap_deg(angle - azimuth_deg);
    (-half_width_deg..half_width_deg).contains(&off)
}
