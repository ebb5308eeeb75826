//! Closed-form polarimetric power delay spectrum of a box-shaped room.
//!
//! The room is described by its volume `V` and wall area `S`. Each wall
//! interaction multiplies the two-element polarimetric power vector by the
//! bounce matrix `A = g/(1+γ) · [[1, γ], [γ, 1]]`. Averaging over a
//! homogeneous mirror-source process yields a PDS governed by two time
//! constants: the Eyring reverberation time `T` and the polarimetric mixing
//! time `T_p`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

/// Box-shaped room.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoomGeometry {
    lx: f64,
    ly: f64,
    lz: f64,
}

impl RoomGeometry {
    pub fn new(lx: f64, ly: f64, lz: f64) -> Result<Self> {
        for (field, v) in [("room.lx", lx), ("room.ly", ly), ("room.lz", lz)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(field, v, "room dimensions must be positive"));
            }
        }
        Ok(Self { lx, ly, lz })
    }

    pub fn dims(&self) -> [f64; 3] {
        [self.lx, self.ly, self.lz]
    }

    pub fn volume(&self) -> f64 {
        self.lx * self.ly * self.lz
    }

    pub fn surface(&self) -> f64 {
        2.0 * (self.lx * self.ly + self.lx * self.lz + self.ly * self.lz)
    }

    pub fn diagonal(&self) -> f64 {
        (self.lx * self.lx + self.ly * self.ly + self.lz * self.lz).sqrt()
    }

    /// `4V/S`, the mean free path between wall interactions.
    pub fn mean_free_path(&self) -> f64 {
        4.0 * self.volume() / self.surface()
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        p.iter().zip(self.dims()).all(|(&x, l)| x > 0.0 && x < l)
    }
}

/// Average wall interaction: power gain `g` and cross-polar leakage `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WallMaterial {
    g: f64,
    gamma: f64,
}

impl WallMaterial {
    pub fn new(g: f64, gamma: f64) -> Result<Self> {
        if !(g > 0.0 && g < 1.0) {
            return Err(Error::param("material.g", g, "must lie in (0, 1)"));
        }
        if !(gamma >= 0.0 && gamma < 1.0) {
            return Err(Error::param("material.gamma", gamma, "must lie in [0, 1)"));
        }
        Ok(Self { g, gamma })
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Second eigenvalue of the leakage matrix, `(1-γ)/(1+γ)`.
    pub fn mixing_eigenvalue(&self) -> f64 {
        (1.0 - self.gamma) / (1.0 + self.gamma)
    }
}

/// Sphere-averaged polarimetric antenna gain `[μ_θ, μ_φ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolGain {
    pub theta: f64,
    pub phi: f64,
}

impl PolGain {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && theta >= 0.0) {
            return Err(Error::param("mu.theta", theta, "must be non-negative"));
        }
        if !(phi.is_finite() && phi >= 0.0) {
            return Err(Error::param("mu.phi", phi, "must be non-negative"));
        }
        Ok(Self { theta, phi })
    }

    /// Lossless antenna `[1-ξ, ξ]`.
    pub fn lossless(xi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&xi) {
            return Err(Error::param("antennas.xi", xi, "must lie in [0, 1]"));
        }
        Ok(Self {
            theta: 1.0 - xi,
            phi: xi,
        })
    }

    pub fn vertical() -> Self {
        Self {
            theta: 1.0,
            phi: 0.0,
        }
    }

    pub fn horizontal() -> Self {
        Self {
            theta: 0.0,
            phi: 1.0,
        }
    }

    /// Same antenna rotated by 90 degrees (entries exchanged).
    pub fn swapped(&self) -> Self {
        Self {
            theta: self.phi,
            phi: self.theta,
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.theta, self.phi]
    }
}

/// Full parameter set of the PDS model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdsParams {
    pub room: RoomGeometry,
    pub material: WallMaterial,
    pub mu_t: PolGain,
    pub mu_r: PolGain,
    wavelength: f64,
    speed_of_light: f64,
}

impl PdsParams {
    pub fn new(
        room: RoomGeometry,
        material: WallMaterial,
        mu_t: PolGain,
        mu_r: PolGain,
        wavelength: f64,
    ) -> Result<Self> {
        if !(wavelength.is_finite() && wavelength > 0.0) {
            return Err(Error::param("wavelength", wavelength, "must be positive"));
        }
        Ok(Self {
            room,
            material,
            mu_t,
            mu_r,
            wavelength,
            speed_of_light: SPEED_OF_LIGHT,
        })
    }

    pub fn with_speed_of_light(mut self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::param("speed_of_light", c, "must be positive"));
        }
        self.speed_of_light = c;
        Ok(self)
    }

    pub fn with_antennas(mut self, mu_t: PolGain, mu_r: PolGain) -> Self {
        self.mu_t = mu_t;
        self.mu_r = mu_r;
        self
    }

    pub fn with_material(mut self, material: WallMaterial) -> Self {
        self.material = material;
        self
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn speed_of_light(&self) -> f64 {
        self.speed_of_light
    }

    /// `μ_r,1 μ_t,1 + μ_r,2 μ_t,2`
    pub fn co_product(&self) -> f64 {
        self.mu_r.theta * self.mu_t.theta + self.mu_r.phi * self.mu_t.phi
    }

    /// `μ_r,1 μ_t,2 + μ_r,2 μ_t,1`
    pub fn cross_product(&self) -> f64 {
        self.mu_r.theta * self.mu_t.phi + self.mu_r.phi * self.mu_t.theta
    }

    /// Ratio of co- to cross-products; `+inf` when the cross-product is zero.
    pub fn antenna_prefactor(&self) -> f64 {
        let cross = self.cross_product();
        if cross == 0.0 {
            f64::INFINITY
        } else {
            self.co_product() / cross
        }
    }

    pub fn reverberation_time(&self) -> f64 {
        reverberation_time(&self.room, &self.material, self.speed_of_light)
    }

    pub fn mixing_time(&self) -> f64 {
        mixing_time(&self.room, &self.material, self.speed_of_light)
    }

    /// `cλ²/2V`, the common scale of every PDS term.
    fn scale(&self) -> f64 {
        self.speed_of_light * self.wavelength * self.wavelength / (2.0 * self.room.volume())
    }
}

/// Fixed transmitter-receiver distance with optional line of sight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceCondition {
    distance: f64,
    pub los: bool,
}

impl DistanceCondition {
    pub fn new(distance: f64, los: bool) -> Result<Self> {
        if !(distance.is_finite() && distance > 0.0) {
            return Err(Error::param("link.distance", distance, "must be positive"));
        }
        Ok(Self { distance, los })
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn delay(&self, speed_of_light: f64) -> f64 {
        self.distance / speed_of_light
    }
}

/// Direct-path Dirac component: `weight · δ(τ - delay)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spike {
    pub delay: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalPds {
    pub density: f64,
    pub spike: Option<Spike>,
}

pub fn bounce_matrix(material: &WallMaterial) -> [[f64; 2]; 2] {
    let s = material.g / (1.0 + material.gamma);
    let off = s * material.gamma;
    [[s, off], [off, s]]
}

/// `A^n` through the eigendecomposition `M = QΛQ⁻¹`, `Q = [[1,1],[1,-1]]/√2`.
///
/// Accepts fractional `n`, which is how the closed form uses it.
pub fn bounce_matrix_power(material: &WallMaterial, n: f64) -> [[f64; 2]; 2] {
    let gn = material.g.powf(n);
    let ln = material.mixing_eigenvalue().powf(n);
    let sum = 0.5 * gn * (1.0 + ln);
    let diff = 0.5 * gn * (1.0 - ln);
    [[sum, diff], [diff, sum]]
}

/// Eyring reverberation time `T = -4V / (c S ln g)`.
pub fn reverberation_time(room: &RoomGeometry, material: &WallMaterial, c: f64) -> f64 {
    -room.mean_free_path() / (c * material.g.ln())
}

/// Polarimetric mixing time `T_p = -4V / (c S ln((1-γ)/(1+γ)))`; `+inf` for `γ = 0`.
pub fn mixing_time(room: &RoomGeometry, material: &WallMaterial, c: f64) -> f64 {
    if material.gamma == 0.0 {
        return f64::INFINITY;
    }
    -room.mean_free_path() / (c * material.mixing_eigenvalue().ln())
}

/// `T_p / T`. Depends on the material only.
pub fn mixing_constant(material: &WallMaterial) -> f64 {
    if material.gamma == 0.0 {
        return f64::INFINITY;
    }
    material.g.ln() / material.mixing_eigenvalue().ln()
}

/// Co- and cross-polar parts of the PDS at delay `tau`.
///
/// The co part carries `(1 + e^{-τ/T_p})` and the cross part
/// `(1 - e^{-τ/T_p})`. Both vanish for `τ < 0`.
pub fn pds_components(tau: f64, p: &PdsParams) -> (f64, f64) {
    if tau < 0.0 {
        return (0.0, 0.0);
    }
    let envelope = p.scale() * (-tau / p.reverberation_time()).exp();
    let mix = (-tau / p.mixing_time()).exp();
    (
        envelope * p.co_product() * (1.0 + mix),
        envelope * p.cross_product() * (1.0 - mix),
    )
}

/// Power delay spectrum for a uniformly placed transmitter, 1/s.
pub fn pds(tau: f64, p: &PdsParams) -> f64 {
    let (co, cross) = pds_components(tau, p);
    co + cross
}

/// Large-delay asymptote, `cλ²e^{-τ/T}/2V · (co-product + cross-product)`.
/// Evaluated for `τ ≥ 0` only.
pub fn pds_asymptote(tau: f64, p: &PdsParams) -> f64 {
    if tau < 0.0 {
        return 0.0;
    }
    p.scale() * (-tau / p.reverberation_time()).exp() * (p.co_product() + p.cross_product())
}

/// `P_co(τ) / P_cross(τ)`. Returns `+inf` for `τ ≤ 0` or a zero cross-product.
pub fn co_cross_ratio(tau: f64, p: &PdsParams) -> f64 {
    if tau <= 0.0 {
        return f64::INFINITY;
    }
    let prefactor = p.antenna_prefactor();
    if prefactor.is_infinite() {
        return f64::INFINITY;
    }
    // coth(x) = 1/tanh(x); tanh(0) = 0 gives +inf for γ = 0.
    prefactor / (tau / (2.0 * p.mixing_time())).tanh()
}

/// Delay-integrated co-to-cross power ratio, `prefactor · (1 + 2 T_p/T)`.
pub fn cpr(p: &PdsParams) -> f64 {
    let prefactor = p.antenna_prefactor();
    if prefactor.is_infinite() || p.material.gamma == 0.0 {
        return f64::INFINITY;
    }
    prefactor * (1.0 + 2.0 * mixing_constant(&p.material))
}

/// PDS conditioned on the transmitter-receiver distance.
///
/// The diffuse density is the unconditioned PDS gated to `τ ≥ d/c`; a LOS
/// link adds a Dirac spike at `d/c` with weight `μ_rᵀμ_t · λ²/(4πd²)`,
/// reported separately from the density.
pub fn pds_conditional(tau: f64, p: &PdsParams, cond: &DistanceCondition) -> ConditionalPds {
    let onset = cond.delay(p.speed_of_light);
    let density = if tau >= onset { pds(tau, p) } else { 0.0 };
    ConditionalPds {
        density,
        spike: direct_spike(p, cond),
    }
}

/// Direct-path spike of a LOS link, `None` in NLOS.
pub fn direct_spike(p: &PdsParams, cond: &DistanceCondition) -> Option<Spike> {
    cond.los.then(|| Spike {
        delay: cond.delay(p.speed_of_light),
        weight: p.co_product() * p.wavelength * p.wavelength
            / (4.0 * PI * cond.distance * cond.distance),
    })
}

/// CPR of the distance-conditioned PDS, integrating over `τ ≥ d/c` and
/// counting the LOS spike as co-polar power.
pub fn cpr_distance(p: &PdsParams, cond: &DistanceCondition) -> f64 {
    let prefactor = p.antenna_prefactor();
    if prefactor.is_infinite() || p.material.gamma == 0.0 {
        return f64::INFINITY;
    }
    let t = p.reverberation_time();
    let tp = p.mixing_time();
    let onset = cond.delay(p.speed_of_light);
    // Tp/(T+Tp) · e^{-d/cTp}: the mixing share of the power arriving after d/c.
    let k = tp / (t + tp) * (-onset / tp).exp();
    let diffuse = (1.0 + k) / (1.0 - k);
    let direct = if cond.los {
        let v = p.room.volume();
        let d = cond.distance;
        v / (2.0 * PI * p.speed_of_light * t * d * d) * (onset / t).exp() / (1.0 - k)
    } else {
        0.0
    };
    prefactor * (direct + diffuse)
}
