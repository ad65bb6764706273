//! Cubical-room renderer: a pinhole camera inside the cube `[-1,1]^3`
//! with a point light at the origin, Lambertian walls, and a shared
//! albedo so the image is invariant under the cube's rotation group.
//!
//! The posterior over camera extrinsics is 24-fold symmetric, and the
//! mode-counting diagnostics require the 24 equivalent poses to render
//! *bit-identically*. Floating-point trigonometry alone cannot deliver
//! that, so the renderer pins the image to a canonical representative of
//! the pose's orbit:
//!
//! 1. the group elements are signed permutations, so transforming the
//!    camera position and rotating the basis matrix are exact;
//! 2. the representative is chosen by comparing the transformed positions
//!    (total order on the raw bits), which is identical for every member
//!    of an orbit;
//! 3. the rotated basis is snapped to a `2^-24` grid, absorbing the
//!    last-ulp noise that Euler-angle round-trips introduce between orbit
//!    members;
//! 4. squared distances are summed in sorted order so they are invariant
//!    under coordinate permutations.

use crate::error::{Error, Result};
use crate::image::ImageGrid;
use crate::model::GenerativeModel;
use crate::parallel;
use crate::rng::Prng;
use crate::space::{DimSpec, ParamSpace, ParamVector};
use std::f64::consts::PI;

pub type Mat3 = [[f64; 3]; 3];

/// One element of the cube's rotation group: `out[i] = signs[i] * v[perm[i]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubeRotation {
    pub perm: [usize; 3],
    pub signs: [f64; 3],
}

impl CubeRotation {
    pub fn identity() -> Self {
        CubeRotation { perm: [0, 1, 2], signs: [1.0, 1.0, 1.0] }
    }

    pub fn is_identity(&self) -> bool {
        *self == Self::identity()
    }

    pub fn apply_vec(&self, v: [f64; 3]) -> [f64; 3] {
        [
            self.signs[0] * v[self.perm[0]],
            self.signs[1] * v[self.perm[1]],
            self.signs[2] * v[self.perm[2]],
        ]
    }

    /// Row permutation with sign flips; exact in floating point.
    pub fn apply_matrix(&self, m: &Mat3) -> Mat3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.signs[i] * m[self.perm[i]][j];
            }
        }
        out
    }
}

/// The 24 rotations of the cube (signed permutations with determinant +1),
/// in a fixed order starting with the identity.
pub fn cube_rotations() -> Vec<CubeRotation> {
    const PERMS: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([0, 2, 1], -1.0),
        ([1, 0, 2], -1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([2, 1, 0], -1.0),
    ];
    let mut out = Vec::with_capacity(24);
    for (perm, parity) in PERMS {
        for bits in 0..8u32 {
            let signs = [
                if bits & 1 == 0 { 1.0 } else { -1.0 },
                if bits & 2 == 0 { 1.0 } else { -1.0 },
                if bits & 4 == 0 { 1.0 } else { -1.0 },
            ];
            if parity * signs[0] * signs[1] * signs[2] == 1.0 {
                out.push(CubeRotation { perm, signs });
            }
        }
    }
    // keep the identity first so callers can special-case it
    let id = out.iter().position(|r| r.is_identity()).unwrap();
    out.swap(0, id);
    out
}

/// Intrinsic z-y'-x'' rotation: yaw about world z, then pitch, then roll.
pub fn basis_from_angles(yaw: f64, pitch: f64, roll: f64) -> Mat3 {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

/// Recovers (yaw, pitch, roll) from a rotation matrix. Inverse of
/// [`basis_from_angles`] up to the usual Euler conventions; pitch is
/// reported in `[-pi/2, pi/2]`.
pub fn angles_from_basis(m: &Mat3) -> (f64, f64, f64) {
    let sp = -m[2][0];
    if sp.abs() >= 1.0 - 1e-12 {
        let pitch = if sp > 0.0 { PI / 2.0 } else { -PI / 2.0 };
        let yaw = (-m[0][1]).atan2(m[1][1]);
        (yaw, pitch, 0.0)
    } else {
        let yaw = m[1][0].atan2(m[0][0]);
        let pitch = sp.clamp(-1.0, 1.0).asin();
        let roll = m[2][1].atan2(m[2][2]);
        (yaw, pitch, roll)
    }
}

const GRID: f64 = 16777216.0; // 2^24

/// Snaps every entry to the `2^-24` grid. Entries are in `[-1, 1]`, so
/// the scaling is exact and quantization commutes with sign flips and
/// permutations of entries.
pub fn quantize_basis(m: &Mat3) -> Mat3 {
    let mut out = *m;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v = (*v * GRID).round() / GRID;
        }
    }
    out
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

fn flatten(m: &Mat3) -> [f64; 9] {
    let mut k = [0.0; 9];
    for i in 0..3 {
        k[3 * i..3 * i + 3].copy_from_slice(&m[i]);
    }
    k
}

/// Replaces a pose by the canonical member of its orbit under the cube
/// rotation group: the one with the lexicographically largest transformed
/// position (basis entries break exact position ties). The returned basis
/// is quantized.
pub fn canonical_pose(pos: [f64; 3], basis: Mat3) -> ([f64; 3], Mat3) {
    let mut best_pos = pos;
    let mut best_basis = basis;
    for rot in cube_rotations().iter().skip(1) {
        let p = rot.apply_vec(pos);
        if lex_less(&best_pos, &p)
            || (p == best_pos
                && lex_less(&flatten(&best_basis), &flatten(&rot.apply_matrix(&basis))))
        {
            best_pos = p;
            best_basis = rot.apply_matrix(&basis);
        }
    }
    (best_pos, quantize_basis(&best_basis))
}

/// Camera-extrinsics scene: `theta = (x, y, z, yaw, pitch, roll)`.
pub struct RoomModel {
    width: usize,
    height: usize,
    noise_sigma: f64,
    space: ParamSpace,
}

impl RoomModel {
    pub fn new(width: usize, height: usize, noise_sigma: f64) -> Self {
        let mut dims = vec![DimSpec::linear(-1.0, 1.0); 3];
        dims.extend(vec![DimSpec::wrapped(-PI, PI); 3]);
        let space = ParamSpace::single_block(dims).unwrap();
        RoomModel { width, height, noise_sigma, space }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    fn position_inside(theta: &ParamVector) -> bool {
        theta.values[..3].iter().all(|&x| x > -1.0 && x < 1.0)
    }
}

impl GenerativeModel for RoomModel {
    fn space(&self) -> &ParamSpace {
        &self.space
    }

    fn noise_sigma(&self) -> f64 {
        self.noise_sigma
    }

    fn render(&self, theta: &ParamVector) -> Result<ImageGrid> {
        if theta.len() != 6 {
            return Err(Error::Config(format!("room expects 6 parameters, got {}", theta.len())));
        }
        if !Self::position_inside(theta) {
            return Err(Error::Domain("camera position must be strictly inside the cube".into()));
        }
        let basis = basis_from_angles(theta[3], theta[4], theta[5]);
        let (pos, basis) = canonical_pose([theta[0], theta[1], theta[2]], basis);

        let (w, h) = (self.width, self.height);
        let aspect = w as f64 / h as f64;
        let mut img = ImageGrid::zeros(w, h, 1);
        parallel::for_each_row(&mut img.data, w, |y, row| {
            let v = 1.0 - ((y as f64 + 0.5) / h as f64) * 2.0;
            for (x, px) in row.iter_mut().enumerate() {
                let u = ((x as f64 + 0.5) / w as f64) * 2.0 - 1.0;
                // camera local frame: forward +x, left +y, up +z; 90 deg
                // vertical field of view (tan = 1)
                let dl = [1.0, -u * aspect, v];
                let mut d = [0.0; 3];
                for i in 0..3 {
                    d[i] = basis[i][0] * dl[0] + basis[i][1] * dl[1] + basis[i][2] * dl[2];
                }
                // slab exit: first wall the ray hits from inside
                let mut t = f64::INFINITY;
                for i in 0..3 {
                    if d[i] != 0.0 {
                        let bound = if d[i] > 0.0 { 1.0 } else { -1.0 };
                        let ti = (bound - pos[i]) / d[i];
                        if ti < t {
                            t = ti;
                        }
                    }
                }
                let p = [pos[0] + t * d[0], pos[1] + t * d[1], pos[2] + t * d[2]];
                // |p|^2 summed in sorted order so the value is invariant
                // under coordinate permutations
                let mut sq = [p[0] * p[0], p[1] * p[1], p[2] * p[2]];
                sq.sort_unstable_by(f64::total_cmp);
                let s = sq[0] + sq[1] + sq[2];
                // Lambertian wall lit by the central point light: the
                // incidence cosine is 1/|p| on every wall, falloff 1/(1+d^2)
                *px = 1.0 / (s.sqrt() * (1.0 + s));
            }
        });
        Ok(img)
    }

    fn prior_logpdf(&self, theta: &ParamVector) -> f64 {
        if theta.len() == 6 && Self::position_inside(theta) {
            -self.space.log_volume()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn prior_sample(&self, rng: &mut Prng) -> ParamVector {
        self.space.sample_uniform(rng)
    }

    fn image_shape(&self) -> (usize, usize, usize) {
        (self.width, self.height, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn generic_theta() -> ParamVector {
        ParamVector::new(vec![0.31, -0.42, 0.17, 0.9, 0.35, -1.2])
    }

    #[test]
    fn rotation_group_has_24_elements_with_identity_first() {
        let rots = cube_rotations();
        assert_eq!(rots.len(), 24);
        assert!(rots[0].is_identity());
        // a generic probe vector has trivial stabilizer, so its images
        // under the 24 rotations are pairwise distinct
        let probe = [0.3, 0.5, 0.7];
        let mut images: Vec<[f64; 3]> = rots.iter().map(|r| r.apply_vec(probe)).collect();
        images.sort_by(|a, b| a.partial_cmp(b).unwrap());
        images.dedup();
        assert_eq!(images.len(), 24);
    }

    #[test]
    fn euler_round_trip_is_tight() {
        let (yaw, pitch, roll) = (0.7, -0.4, 2.1);
        let m = basis_from_angles(yaw, pitch, roll);
        let (y2, p2, r2) = angles_from_basis(&m);
        assert!((yaw - y2).abs() < 1e-12);
        assert!((pitch - p2).abs() < 1e-12);
        assert!((roll - r2).abs() < 1e-12);
    }

    #[test]
    fn render_is_deterministic() {
        let model = RoomModel::new(48, 48, 0.02);
        let theta = ParamVector::new(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let a = model.render(&theta).unwrap();
        let b = model.render(&theta).unwrap();
        assert_eq!(a.data, b.data);
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            let t = model.prior_sample(&mut rng);
            assert_eq!(model.render(&t).unwrap().data, model.render(&t).unwrap().data);
        }
    }

    #[test]
    fn output_range_is_unit_interval() {
        let model = RoomModel::new(32, 32, 0.02);
        let mut rng = rng_from_seed(9);
        for _ in 0..20 {
            let t = model.prior_sample(&mut rng);
            let img = model.render(&t).unwrap();
            assert!(img.data.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn boundary_position_is_a_domain_error() {
        let model = RoomModel::new(16, 16, 0.02);
        let theta = ParamVector::new(vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert!(model.render(&theta).is_err());
        assert_eq!(model.prior_logpdf(&theta), f64::NEG_INFINITY);
    }

    #[test]
    fn symmetric_poses_render_bit_identically() {
        let model = RoomModel::new(32, 32, 0.02);
        let theta = generic_theta();
        let reference = model.render(&theta).unwrap();
        let basis = basis_from_angles(theta[3], theta[4], theta[5]);
        let pos = [theta[0], theta[1], theta[2]];
        for rot in cube_rotations() {
            let p = rot.apply_vec(pos);
            let (yaw, pitch, roll) = angles_from_basis(&rot.apply_matrix(&basis));
            let t = ParamVector::new(vec![p[0], p[1], p[2], yaw, pitch, roll]);
            let img = model.render(&t).unwrap();
            assert_eq!(img.data, reference.data, "rotation {:?}", rot);
        }
    }

    #[test]
    fn quarter_roll_rotates_the_pixel_grid() {
        let model = RoomModel::new(64, 64, 0.02);
        let straight = ParamVector::new(vec![0.2, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let rolled = ParamVector::new(vec![0.2, 0.0, 0.0, 0.0, 0.0, PI / 2.0]);
        let a = model.render(&straight).unwrap();
        let b = model.render(&rolled).unwrap();
        let n = 64usize;
        for y in 0..n {
            for x in 0..n {
                // rolling the camera by +pi/2 maps pixel (x, y) of the
                // straight view onto (y, n-1-x) of the rolled view
                let rolled_px = b.get(x, y, 0);
                let straight_px = a.get(n - 1 - y, x, 0);
                assert_eq!(rolled_px, straight_px, "pixel {},{}", x, y);
            }
        }
    }
}
