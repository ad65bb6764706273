//! Rotated-rectangle fitting for the tiles scene: per palette color,
//! threshold by nearest palette assignment, take the largest 4-connected
//! component, and fit the minimum-area enclosing rotated rectangle over
//! its convex hull (the optimum has a side collinear with a hull edge).

use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::image::ImageGrid;
use crate::renderers::tiles::{PALETTE, TILE_COUNT};
use std::f64::consts::PI;

/// Max per-channel deviation for a pixel to count as a palette color;
/// blur mixes colors at tile borders, this recovers the interior mass.
const COLOR_TOL: f64 = 0.25;

/// A fitted rectangle in pixel coordinates. `angle` is canonicalized by
/// square symmetry into `[-pi/4, pi/4)`. `found == false` (all fields
/// zero) signals that no pixel passed the color threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FittedRect {
    pub center: (f64, f64),
    pub side: f64,
    pub angle: f64,
    pub found: bool,
}

impl FittedRect {
    pub fn missing() -> Self {
        FittedRect { center: (0.0, 0.0), side: 0.0, angle: 0.0, found: false }
    }
}

fn canonical_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(PI / 2.0);
    if r >= PI / 4.0 {
        r -= PI / 2.0;
    }
    r
}

/// Andrew monotone chain; returns hull vertices in counter-clockwise
/// order without repetition.
pub fn convex_hull(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    if pts.len() <= 2 {
        return pts;
    }
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| {
        (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
    };
    let mut lower: Vec<(f64, f64)> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(f64, f64)> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Minimum-area enclosing rotated rectangle of a point set. Returns
/// (center, extent_u, extent_v, angle of the u axis).
pub fn min_area_rect(points: &[(f64, f64)]) -> Option<((f64, f64), f64, f64, f64)> {
    if points.is_empty() {
        return None;
    }
    let hull = convex_hull(points);
    if hull.len() == 1 {
        return Some((hull[0], 0.0, 0.0, 0.0));
    }
    let mut best: Option<((f64, f64), f64, f64, f64, f64)> = None;
    let n = hull.len();
    for i in 0..n {
        let p = hull[i];
        let q = hull[(i + 1) % n];
        let (ex, ey) = (q.0 - p.0, q.1 - p.1);
        let len = (ex * ex + ey * ey).sqrt();
        if len == 0.0 {
            continue;
        }
        let u = (ex / len, ey / len);
        let v = (-u.1, u.0);
        let mut umin = f64::INFINITY;
        let mut umax = f64::NEG_INFINITY;
        let mut vmin = f64::INFINITY;
        let mut vmax = f64::NEG_INFINITY;
        for &pt in &hull {
            let pu = pt.0 * u.0 + pt.1 * u.1;
            let pv = pt.0 * v.0 + pt.1 * v.1;
            umin = umin.min(pu);
            umax = umax.max(pu);
            vmin = vmin.min(pv);
            vmax = vmax.max(pv);
        }
        let (du, dv) = (umax - umin, vmax - vmin);
        let area = du * dv;
        if best.map_or(true, |b| area < b.4) {
            let cu = (umin + umax) / 2.0;
            let cv = (vmin + vmax) / 2.0;
            let center = (cu * u.0 + cv * v.0, cu * u.1 + cv * v.1);
            best = Some((center, du, dv, u.1.atan2(u.0), area));
        }
    }
    best.map(|(c, du, dv, ang, _)| (c, du, dv, ang))
}

/// Fits one rectangle per palette color. Fully occluded tiles come back
/// with `found == false`.
pub fn fit_rectangles(image: &ImageGrid) -> Result<[FittedRect; TILE_COUNT]> {
    if image.channels != 3 {
        return Err(Error::Config("rectangle fitting expects a 3-channel image".into()));
    }
    let (w, h) = (image.width, image.height);
    // nearest palette color per pixel, within tolerance
    let mut assignment = vec![usize::MAX; w * h];
    for y in 0..h {
        for x in 0..w {
            let px = [image.get(x, y, 0), image.get(x, y, 1), image.get(x, y, 2)];
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (ci, color) in PALETTE.iter().enumerate() {
                let d: f64 = (0..3).map(|c| (px[c] - color[c]).powi(2)).sum();
                if d < best_d {
                    best_d = d;
                    best = ci;
                }
            }
            let color = PALETTE[best];
            let max_dev =
                (0..3).map(|c| (px[c] - color[c]).abs()).fold(0.0f64, f64::max);
            if max_dev <= COLOR_TOL {
                assignment[y * w + x] = best;
            }
        }
    }

    let mut rects = [FittedRect::missing(); TILE_COUNT];
    let mut visited = vec![false; w * h];
    let mut largest: Vec<Vec<(f64, f64)>> = vec![Vec::new(); TILE_COUNT];
    let mut stack = Vec::new();
    for start in 0..w * h {
        let color = assignment[start];
        if color == usize::MAX || visited[start] {
            continue;
        }
        // flood fill one 4-connected component
        let mut component = Vec::new();
        visited[start] = true;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            component.push((x as f64 + 0.5, y as f64 + 0.5));
            let mut try_push = |j: usize| {
                if !visited[j] && assignment[j] == color {
                    visited[j] = true;
                    stack.push(j);
                }
            };
            if x > 0 {
                try_push(i - 1);
            }
            if x + 1 < w {
                try_push(i + 1);
            }
            if y > 0 {
                try_push(i - w);
            }
            if y + 1 < h {
                try_push(i + w);
            }
        }
        if component.len() > largest[color].len() {
            largest[color] = component;
        }
    }

    for (color, comp) in largest.iter().enumerate() {
        if comp.is_empty() {
            continue;
        }
        if let Some((center, du, dv, angle)) = min_area_rect(comp) {
            rects[color] = FittedRect {
                center,
                side: (du + dv) / 2.0,
                angle: canonical_angle(angle),
                found: true,
            };
        }
    }
    Ok(rects)
}

/// Normalizes one tile's fitted rectangle into `[0,1]^4`; missing tiles
/// map to the sentinel (0.5, 0.5, 0.5, 0.5).
pub fn rect_to_feature(
    rects: &[FittedRect; TILE_COUNT],
    tile_index: usize,
    width: usize,
    height: usize,
    max_side: f64,
) -> [f64; 4] {
    let r = &rects[tile_index];
    if !r.found {
        return [0.5; 4];
    }
    [
        (r.center.0 / width as f64).clamp(0.0, 1.0),
        (r.center.1 / height as f64).clamp(0.0, 1.0),
        (r.side / max_side).clamp(0.0, 1.0),
        (r.angle + PI / 4.0) / (PI / 2.0),
    ]
}

/// Feature extractor producing the concatenated per-tile rectangle
/// features (4 per tile, 24 total).
#[derive(Debug, Clone)]
pub struct RectExtractor {
    width: usize,
    height: usize,
    max_side: f64,
}

impl RectExtractor {
    pub fn new(width: usize, height: usize) -> Self {
        // matches the tiles renderer geometry: nearest tile side
        let max_side = 0.3 * width.min(height) as f64;
        RectExtractor { width, height, max_side }
    }

    pub fn max_side(&self) -> f64 {
        self.max_side
    }
}

impl FeatureExtractor for RectExtractor {
    fn len(&self) -> usize {
        4 * TILE_COUNT
    }

    fn extract(&self, image: &ImageGrid) -> Result<Vec<f64>> {
        if image.width != self.width || image.height != self.height {
            return Err(Error::Config(format!(
                "rect extractor configured for {}x{}, got {}x{}",
                self.width, self.height, image.width, image.height
            )));
        }
        let rects = fit_rectangles(image)?;
        let mut out = Vec::with_capacity(self.len());
        for t in 0..TILE_COUNT {
            out.extend_from_slice(&rect_to_feature(&rects, t, self.width, self.height, self.max_side));
        }
        Ok(out)
    }

    fn id(&self) -> String {
        format!("rects:{}:{}", self.width, self.height)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GenerativeModel;
    use crate::renderers::tiles::{theta_from_tiles, tile_params, TilesModel};

    #[test]
    fn axis_aligned_tile_round_trips_through_the_fitter() {
        let model = TilesModel::with_blur(100, 100, 0.02, 0.0);
        let mut tiles = [[0.0; 4]; TILE_COUNT];
        tiles[0] = tile_params(-0.2, 0.1, -0.5, 0.0);
        // park the others in a far corner behind each other
        for t in tiles.iter_mut().skip(1) {
            *t = tile_params(0.85, 0.85, 1.0, 0.0);
        }
        let img = model.render(&theta_from_tiles(&tiles)).unwrap();
        let rects = fit_rectangles(&img).unwrap();
        let r = rects[0];
        assert!(r.found);
        let expected_cx = (-0.2 + 1.0) / 2.0 * 100.0;
        let expected_cy = (0.1 + 1.0) / 2.0 * 100.0;
        let expected_side = model.tile_side_px(-0.5);
        assert!((r.center.0 - expected_cx).abs() < 1.0, "cx {}", r.center.0);
        assert!((r.center.1 - expected_cy).abs() < 1.0, "cy {}", r.center.1);
        assert!((r.side - expected_side).abs() < 2.0, "side {}", r.side);
        assert!(r.angle.abs() < PI / 180.0, "angle {}", r.angle);
    }

    #[test]
    fn rotated_tile_angle_is_recovered() {
        let model = TilesModel::with_blur(100, 100, 0.02, 0.0);
        let mut tiles = [[0.0; 4]; TILE_COUNT];
        let phi = 0.3;
        tiles[0] = tile_params(0.0, 0.0, -0.5, phi);
        for t in tiles.iter_mut().skip(1) {
            *t = tile_params(0.85, 0.85, 1.0, 0.0);
        }
        let img = model.render(&theta_from_tiles(&tiles)).unwrap();
        let rects = fit_rectangles(&img).unwrap();
        assert!(rects[0].found);
        // square symmetry: compare angles modulo pi/2
        let d = (rects[0].angle - phi).rem_euclid(PI / 2.0);
        let d = d.min(PI / 2.0 - d);
        assert!(d < 2.0 * PI / 180.0, "angle {} vs {}", rects[0].angle, phi);
    }

    #[test]
    fn occluded_tile_is_reported_missing() {
        let model = TilesModel::with_blur(100, 100, 0.02, 0.0);
        let mut tiles = [[0.0; 4]; TILE_COUNT];
        tiles[0] = tile_params(0.0, 0.0, -0.5, 0.1);
        tiles[1] = tile_params(0.0, 0.0, 0.5, 0.1); // hidden behind tile 0
        for t in tiles.iter_mut().skip(2) {
            *t = tile_params(-0.85, -0.85, 1.0, 0.0);
        }
        let img = model.render(&theta_from_tiles(&tiles)).unwrap();
        let rects = fit_rectangles(&img).unwrap();
        assert!(rects[0].found);
        assert!(!rects[1].found);
        assert_eq!(
            rect_to_feature(&rects, 1, 100, 100, 30.0),
            [0.5, 0.5, 0.5, 0.5]
        );
    }

    #[test]
    fn min_area_rect_matches_angle_scan_on_rotated_square() {
        // 45 degree rotated square point set
        let mut pts = Vec::new();
        let c = 20.0;
        let half = 8.0;
        for i in -40..=40 {
            for j in -40..=40 {
                let (x, y) = (i as f64 * 0.25, j as f64 * 0.25);
                // rotate by 45 degrees
                let u = (x + y) / std::f64::consts::SQRT_2;
                let v = (-x + y) / std::f64::consts::SQRT_2;
                if u.abs() <= half && v.abs() <= half {
                    pts.push((c + x, c + y));
                }
            }
        }
        let (center, du, dv, angle) = min_area_rect(&pts).unwrap();
        // brute-force oracle: scan 0..90 degrees in 0.01 degree steps
        let mut best_area = f64::INFINITY;
        for k in 0..9000 {
            let a = k as f64 * 0.01 * PI / 180.0;
            let (s, co) = a.sin_cos();
            let mut umin = f64::INFINITY;
            let mut umax = f64::NEG_INFINITY;
            let mut vmin = f64::INFINITY;
            let mut vmax = f64::NEG_INFINITY;
            for &(x, y) in &pts {
                let pu = co * x + s * y;
                let pv = -s * x + co * y;
                umin = umin.min(pu);
                umax = umax.max(pu);
                vmin = vmin.min(pv);
                vmax = vmax.max(pv);
            }
            best_area = best_area.min((umax - umin) * (vmax - vmin));
        }
        let area = du * dv;
        assert!((area - best_area).abs() <= best_area * 1e-3 + 1e-9);
        assert!((center.0 - c).abs() < 0.3 && (center.1 - c).abs() < 0.3);
        let d = (canonical_angle(angle) - PI / 4.0).abs();
        let d = d.min((canonical_angle(angle) + PI / 4.0).abs());
        assert!(d < 0.02, "angle {angle}");
    }

    #[test]
    fn min_area_is_between_hull_area_and_aabb_area() {
        let pts: Vec<(f64, f64)> = (0..200)
            .map(|i| {
                let a = i as f64 * 0.7;
                (10.0 + 5.0 * a.sin() + 0.01 * i as f64, 8.0 + 3.0 * a.cos())
            })
            .collect();
        let (_, du, dv, _) = min_area_rect(&pts).unwrap();
        let rect_area = du * dv;
        // axis-aligned bounding box
        let xmin = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let xmax = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
        let ymin = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let ymax = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let aabb = (xmax - xmin) * (ymax - ymin);
        // shoelace over the hull
        let hull = convex_hull(&pts);
        let mut hull_area = 0.0;
        for i in 0..hull.len() {
            let p = hull[i];
            let q = hull[(i + 1) % hull.len()];
            hull_area += p.0 * q.1 - q.0 * p.1;
        }
        let hull_area = hull_area.abs() / 2.0;
        assert!(rect_area <= aabb + 1e-9);
        assert!(rect_area >= hull_area - 1e-9);
    }

    #[test]
    fn identical_rects_produce_identical_features() {
        let r = FittedRect { center: (50.0, 50.0), side: 20.0, angle: 0.2, found: true };
        let rects = [r; TILE_COUNT];
        let a = rect_to_feature(&rects, 0, 100, 100, 30.0);
        let b = rect_to_feature(&rects, 3, 100, 100, 30.0);
        assert_eq!(a, b);
        assert_eq!(a[0], 0.5);
        assert_eq!(a[1], 0.5);
    }
}
