//! Line-of-sight optical channel between a ceiling LED and upward-facing
//! photodiodes on the user plane, plus user drops and gain-based grouping.

use std::cmp::Ordering;
use std::f64::consts::{LN_2, PI};

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2) + (self.z - other.z).powi(2)).sqrt()
    }
}

/// Room, LED placement and the user plane.
#[derive(Debug, Clone, PartialEq)]
pub struct RoomGeometry {
    /// Room extent (x, y, z) in metres.
    pub room_size: Point3,
    pub led_position: Point3,
    pub user_height: f64,
    /// Radius of the served cell on the user plane, centred under the LED.
    pub cell_radius: f64,
}

impl Default for RoomGeometry {
    fn default() -> Self {
        RoomGeometry {
            room_size: Point3::new(5.0, 5.0, 3.0),
            led_position: Point3::new(2.5, 2.5, 3.0),
            user_height: 0.85,
            cell_radius: 1.8,
        }
    }
}

impl RoomGeometry {
    /// LED height above the user plane.
    pub fn vertical_separation(&self) -> f64 {
        self.led_position.z - self.user_height
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.room_size;
        if !(r.x > 0.0 && r.y > 0.0 && r.z > 0.0) {
            return Err(Error::invalid("room_size", "all dimensions must be positive"));
        }
        if self.user_height < 0.0 {
            return Err(Error::invalid("user_height", "must be non-negative"));
        }
        if self.vertical_separation() <= 0.0 {
            return Err(Error::invalid("led_position", "LED must sit above the user plane"));
        }
        if self.cell_radius <= 0.0 {
            return Err(Error::invalid("cell_size", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedParams {
    /// Average optical output power (W).
    pub power_w: f64,
    /// Half-power semi-angle (degrees).
    pub half_power_angle_deg: f64,
}

impl Default for LedParams {
    fn default() -> Self {
        LedParams {
            power_w: 1.0,
            half_power_angle_deg: 60.0,
        }
    }
}

impl LedParams {
    pub fn lambertian_order(&self) -> Result<f64> {
        lambertian_order(self.half_power_angle_deg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.power_w <= 0.0 {
            return Err(Error::invalid("led_power_w", "must be positive"));
        }
        self.lambertian_order().map(|_| ())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PdParams {
    /// Active area (m^2).
    pub area_m2: f64,
    /// Field of view, half-angle (degrees).
    pub fov_deg: f64,
    /// Responsivity (A/W).
    pub responsivity: f64,
    pub filter_gain: f64,
    pub concentrator_gain: f64,
}

impl Default for PdParams {
    fn default() -> Self {
        PdParams {
            area_m2: 1e-4,
            fov_deg: 35.0,
            responsivity: 0.4,
            filter_gain: 1.0,
            concentrator_gain: 1.0,
        }
    }
}

impl PdParams {
    pub fn validate(&self) -> Result<()> {
        if self.area_m2 <= 0.0 {
            return Err(Error::invalid("pd_area_m2", "must be positive"));
        }
        if !(self.fov_deg > 0.0 && self.fov_deg < 90.0) {
            return Err(Error::invalid("fov_deg", "must lie in (0, 90)"));
        }
        if self.responsivity <= 0.0 {
            return Err(Error::invalid("responsivity", "must be positive"));
        }
        if self.filter_gain <= 0.0 || self.concentrator_gain <= 0.0 {
            return Err(Error::invalid("filter_gain", "optical gains must be positive"));
        }
        Ok(())
    }
}

/// Multicast group membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserGroup {
    /// Group 1: weak users, high-power stream.
    Weak,
    /// Group 2: strong users, low-power stream, decode with SIC.
    Strong,
}

impl UserGroup {
    pub fn id(self) -> u8 {
        match self {
            UserGroup::Weak => 1,
            UserGroup::Strong => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserTerminal {
    pub position: Point3,
    /// Optical DC gain of the LoS path.
    pub gain: f64,
    pub group: Option<UserGroup>,
}

/// `m = -ln 2 / ln(cos half_angle)`.
pub fn lambertian_order(half_angle_deg: f64) -> Result<f64> {
    if !(half_angle_deg > 0.0 && half_angle_deg < 90.0) {
        return Err(Error::invalid(
            "half_power_angle_deg",
            format!("{half_angle_deg} is outside (0, 90)"),
        ));
    }
    Ok(-LN_2 / cos_deg(half_angle_deg).ln())
}

// cos(60 deg) through radians is 0.5000000000000001; keep the exact value.
fn cos_deg(deg: f64) -> f64 {
    if deg == 60.0 {
        0.5
    } else {
        deg.to_radians().cos()
    }
}

/// LoS DC gain for a receiver at `user_xy` on the user plane, pointing
/// straight up (irradiance angle equals incidence angle). Zero outside the
/// photodiode's field of view.
pub fn los_gain(geometry: &RoomGeometry, led: &LedParams, pd: &PdParams, user_xy: (f64, f64)) -> f64 {
    let rx = Point3::new(user_xy.0, user_xy.1, geometry.user_height);
    let d = geometry.led_position.distance(&rx);
    let cos_psi = geometry.vertical_separation() / d;
    if cos_psi < pd.fov_deg.to_radians().cos() {
        return 0.0;
    }
    let m = lambertian_order(led.half_power_angle_deg).expect("validated half-power angle");
    (m + 1.0) * pd.area_m2 / (2.0 * PI * d * d)
        * cos_psi.powf(m)
        * pd.filter_gain
        * pd.concentrator_gain
        * cos_psi
}

/// Radius of the disc users are dropped on: the cell, clipped to the
/// photodiode's FOV footprint.
pub fn sampling_radius(geometry: &RoomGeometry, pd: &PdParams) -> f64 {
    let footprint = geometry.vertical_separation() * pd.fov_deg.to_radians().tan();
    geometry.cell_radius.min(footprint)
}

/// Drop `n` users uniformly over the sampling disc under the LED.
pub fn drop_users<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    geometry: &RoomGeometry,
    led: &LedParams,
    pd: &PdParams,
) -> Vec<UserTerminal> {
    let radius = sampling_radius(geometry, pd);
    let (cx, cy) = (geometry.led_position.x, geometry.led_position.y);
    (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let theta = 2.0 * PI * rng.gen::<f64>();
            let (x, y) = (cx + r * theta.cos(), cy + r * theta.sin());
            UserTerminal {
                position: Point3::new(x, y, geometry.user_height),
                gain: los_gain(geometry, led, pd, (x, y)),
                group: None,
            }
        })
        .collect()
}

/// Split users into the weaker half (group 1) and stronger half (group 2)
/// by channel gain. Ties go by ascending horizontal distance to the LED,
/// then by input order.
pub fn form_groups(
    users: &[UserTerminal],
    led_position: &Point3,
) -> Result<(Vec<UserTerminal>, Vec<UserTerminal>)> {
    if users.len() % 2 != 0 {
        return Err(Error::invalid(
            "users",
            format!("grouping needs an even user count, got {}", users.len()),
        ));
    }
    let radial = |u: &UserTerminal| (u.position.x - led_position.x).hypot(u.position.y - led_position.y);
    let mut order: Vec<usize> = (0..users.len()).collect();
    // stable sort keeps input order as the last tie-break
    order.sort_by(|&a, &b| {
        let (ua, ub) = (&users[a], &users[b]);
        ua.gain
            .partial_cmp(&ub.gain)
            .unwrap_or(Ordering::Equal)
            .then_with(|| radial(ua).partial_cmp(&radial(ub)).unwrap_or(Ordering::Equal))
    });
    let half = users.len() / 2;
    let tag = |idx: &[usize], g: UserGroup| {
        idx.iter()
            .map(|&i| UserTerminal {
                group: Some(g),
                ..users[i].clone()
            })
            .collect::<Vec<_>>()
    };
    Ok((tag(&order[..half], UserGroup::Weak), tag(&order[half..], UserGroup::Strong)))
}

/// Electrical SNR referenced to average optical power `power_w`:
/// `(R h P)^2 / (N0 B)`.
pub fn link_snr(gain: f64, power_w: f64, pd: &PdParams, noise_psd: f64, bandwidth: f64) -> f64 {
    (pd.responsivity * gain * power_w).powi(2) / (noise_psd * bandwidth)
}

/// Noise standard deviation `sqrt(N0 B)`.
pub fn noise_std(noise_psd: f64, bandwidth: f64) -> f64 {
    (noise_psd * bandwidth).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn defaults() -> (RoomGeometry, LedParams, PdParams) {
        (RoomGeometry::default(), LedParams::default(), PdParams::default())
    }

    fn at_radius(r: f64) -> (f64, f64) {
        (2.5 + r, 2.5)
    }

    #[test]
    fn lambertian_order_examples() {
        assert_eq!(lambertian_order(60.0).unwrap(), 1.0);
        assert!((lambertian_order(45.0).unwrap() - 2.0).abs() < 1e-12);
        assert!((lambertian_order(30.0).unwrap() - 4.8188).abs() < 1e-4);
        assert!(lambertian_order(0.0).is_err());
        assert!(lambertian_order(90.0).is_err());
        assert!(lambertian_order(-5.0).is_err());
    }

    #[test]
    fn los_gain_examples() {
        let (g, l, p) = defaults();
        let nadir = los_gain(&g, &l, &p, at_radius(0.0));
        // 2e-4 / (2 pi 2.15^2)
        assert!((nadir - 6.886e-6).abs() / 6.886e-6 < 1e-3, "{nadir}");
        assert_eq!(los_gain(&g, &l, &p, at_radius(1.8)), 0.0);
        let one = los_gain(&g, &l, &p, at_radius(1.0));
        assert!((one - 4.654e-6).abs() / 4.654e-6 < 1e-3, "{one}");
    }

    #[test]
    fn los_gain_monotone_and_fov_cutoff() {
        let (g, l, p) = defaults();
        let edge = g.vertical_separation() * p.fov_deg.to_radians().tan();
        let mut prev = f64::INFINITY;
        for i in 0..=250 {
            let r = i as f64 * 0.01;
            let h = los_gain(&g, &l, &p, at_radius(r));
            assert!(h <= prev);
            assert_eq!(h == 0.0, r > edge + 1e-12, "r = {r}");
            prev = h;
        }
    }

    #[test]
    fn dropped_users_have_positive_gain() {
        let (g, l, p) = defaults();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let users = drop_users(&mut rng, 10_000, &g, &l, &p);
        assert!(users.iter().all(|u| u.gain > 0.0));
        assert!((sampling_radius(&g, &p) - 1.5054).abs() < 1e-4);

        let a = drop_users(&mut ChaCha8Rng::seed_from_u64(2), 10, &g, &l, &p);
        let b = drop_users(&mut ChaCha8Rng::seed_from_u64(2), 10, &g, &l, &p);
        assert_eq!(a, b);
    }

    #[test]
    fn drops_are_uniform_over_the_disc() {
        // (r / R)^2 is Uniform(0, 1) for a uniform disc
        let (g, l, p) = defaults();
        let radius = sampling_radius(&g, &p);
        let n = 100_000;
        let users = drop_users(&mut ChaCha8Rng::seed_from_u64(12), n, &g, &l, &p);
        let mut bins = [0usize; 10];
        for u in &users {
            let r = (u.position.x - 2.5).hypot(u.position.y - 2.5);
            let s = (r / radius).powi(2);
            bins[((s * 10.0) as usize).min(9)] += 1;
        }
        let expect = n as f64 / 10.0;
        let sd = (n as f64 * 0.1 * 0.9).sqrt();
        for b in bins {
            assert!((b as f64 - expect).abs() < 5.0 * sd, "{bins:?}");
        }
    }

    fn user(gain: f64, x: f64) -> UserTerminal {
        UserTerminal {
            position: Point3::new(x, 2.5, 0.85),
            gain,
            group: None,
        }
    }

    #[test]
    fn grouping_examples() {
        let led = Point3::new(2.5, 2.5, 3.0);
        let users: Vec<_> = [3.0, 1.0, 4.0, 2.0].iter().map(|&h| user(h, 2.5)).collect();
        let (g1, g2) = form_groups(&users, &led).unwrap();
        assert_eq!(g1.iter().map(|u| u.gain).collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert_eq!(g2.iter().map(|u| u.gain).collect::<Vec<_>>(), vec![3.0, 4.0]);
        assert!(g1.iter().all(|u| u.group == Some(UserGroup::Weak)));
        assert!(g2.iter().all(|u| u.group == Some(UserGroup::Strong)));

        // equal gains and distances: input order decides
        let users: Vec<_> = (0..4).map(|i| user(1.0, 2.5 + if i % 2 == 0 { 0.1 } else { -0.1 })).collect();
        let (g1, _) = form_groups(&users, &led).unwrap();
        assert_eq!(g1, vec![
            UserTerminal { group: Some(UserGroup::Weak), ..users[0].clone() },
            UserTerminal { group: Some(UserGroup::Weak), ..users[1].clone() },
        ]);

        // equal gains: closer user sorts first
        let users = vec![user(1.0, 3.0), user(1.0, 2.6)];
        let (g1, _) = form_groups(&users, &led).unwrap();
        assert_eq!(g1[0].position.x, 2.6);

        assert!(form_groups(&users[..1], &led).is_err());
    }

    #[test]
    fn grouping_partitions_random_drops() {
        let (g, l, p) = defaults();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let users = drop_users(&mut rng, 10, &g, &l, &p);
            let (g1, g2) = form_groups(&users, &g.led_position).unwrap();
            assert_eq!((g1.len(), g2.len()), (5, 5));
            let max1 = g1.iter().map(|u| u.gain).fold(f64::MIN, f64::max);
            let min2 = g2.iter().map(|u| u.gain).fold(f64::MAX, f64::min);
            assert!(min2 >= max1);
            let mut all: Vec<_> = g1.iter().chain(&g2).map(|u| u.position.x.to_bits()).collect();
            let mut orig: Vec<_> = users.iter().map(|u| u.position.x.to_bits()).collect();
            all.sort_unstable();
            orig.sort_unstable();
            assert_eq!(all, orig);
        }
    }

    #[test]
    fn link_snr_examples() {
        let (g, l, p) = defaults();
        let h = los_gain(&g, &l, &p, at_radius(0.0));
        let snr = link_snr(h, 1.0, &p, 1e-21, 2e7);
        assert!((snr - 379.3).abs() < 0.5, "{snr}");
        assert!((10.0 * snr.log10() - 25.8).abs() < 0.05);
        assert_eq!(link_snr(0.0, 1.0, &p, 1e-21, 2e7), 0.0);
        let ratio = link_snr(2.0 * h, 1.0, &p, 1e-21, 2e7) / snr;
        assert!((ratio - 4.0).abs() < 1e-12);
    }
}
