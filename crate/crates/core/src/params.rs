//! Model parameters for both model families and the alloy
//! non-dimensionalization pipeline.

use alloc::format;

use crate::error::{Error, Result};

/// Non-dimensional parameters of the pure-melt (thermal) model.
///
/// Lengths are in units of `lambda0`, times in units of `tau0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureMeltParams {
    /// Thermal diffusivity.
    pub d: f64,
    /// Anisotropy strength.
    pub eps4: f64,
    /// Interface width.
    pub lambda0: f64,
    /// Interface relaxation time.
    pub tau0: f64,
    /// Coupling constant of the tilted double well.
    pub xi: f64,
    /// Signed initial undercooling: the value of `u` in the melt at t = 0.
    pub delta: f64,
    /// Anisotropy symmetry order (4 or 6).
    pub fold: u32,
}

impl PureMeltParams {
    /// Four-fold pure melt with unit diffusivity, interface width and time.
    pub fn benchmark() -> Self {
        PureMeltParams {
            d: 1.0,
            eps4: 0.05,
            lambda0: 1.0,
            tau0: 1.0,
            xi: 1.60,
            delta: -0.75,
            fold: 4,
        }
    }

    /// Settings for which the solvability tip velocity 0.0469 is known.
    pub fn tip_validation() -> Self {
        PureMeltParams {
            xi: 1.596,
            delta: -0.65,
            ..Self::benchmark()
        }
    }

    pub fn validate(self) -> Result<Self> {
        positive("D", self.d)?;
        positive("lambda0", self.lambda0)?;
        positive("tau0", self.tau0)?;
        positive("xi", self.xi)?;
        if !self.delta.is_finite() {
            return Err(Error::param("delta", "must be finite"));
        }
        check_eps4(self.eps4)?;
        if self.fold != 4 && self.fold != 6 {
            return Err(Error::param(
                "fold",
                format!("must be 4 or 6, got {}", self.fold),
            ));
        }
        Ok(self)
    }
}

/// Validates a [`PureMeltParams`] and returns it unchanged when accepted.
pub fn validate_pure_melt(p: PureMeltParams) -> Result<PureMeltParams> {
    p.validate()
}

/// Dimensional material data of a dilute binary alloy with a linearized
/// phase diagram (SI units, compositions in wt%).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlloyMaterial {
    pub d_l: f64,
    pub d_s: f64,
    pub k: f64,
    pub eps4: f64,
    pub gibbs_thomson: f64,
    pub m_l: f64,
    pub c0: f64,
    pub g: f64,
    pub v_p: f64,
    pub lambda0: f64,
    pub a1: f64,
    pub a2: f64,
}

impl AlloyMaterial {
    /// Al-4wt.% Cu.
    pub fn al_cu() -> Self {
        AlloyMaterial {
            d_l: 2.4e-9,
            d_s: 1.15e-12,
            k: 0.14,
            eps4: 0.05,
            gibbs_thomson: 2.36e-7,
            m_l: -3.5,
            c0: 4.0,
            g: 3700.0,
            v_p: 1.35e-5,
            lambda0: 1.058e-6,
            a1: 0.8839,
            a2: 0.6267,
        }
    }

    pub fn validate(self) -> Result<Self> {
        positive("D_l", self.d_l)?;
        positive("gibbs_thomson", self.gibbs_thomson)?;
        positive("G", self.g)?;
        positive("lambda0", self.lambda0)?;
        positive("a1", self.a1)?;
        positive("a2", self.a2)?;
        if !(self.d_s >= 0.0 && self.d_s.is_finite()) {
            return Err(Error::param(
                "D_s",
                format!("must be >= 0, got {}", self.d_s),
            ));
        }
        if !(self.k > 0.0 && self.k < 1.0) {
            return Err(Error::param(
                "k",
                format!("must lie in (0, 1), got {}", self.k),
            ));
        }
        if !(self.m_l < 0.0 && self.m_l.is_finite()) {
            return Err(Error::param(
                "m_l",
                format!("must be negative, got {}", self.m_l),
            ));
        }
        positive("c0", self.c0)?;
        if !(self.v_p >= 0.0 && self.v_p.is_finite()) {
            return Err(Error::param(
                "v_p",
                format!("must be >= 0, got {}", self.v_p),
            ));
        }
        check_eps4(self.eps4)?;
        Ok(self)
    }
}

/// Non-dimensional alloy model inputs, derived from an [`AlloyMaterial`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlloyParams {
    /// Chemical capillary length (m).
    pub d0: f64,
    /// Interface width over capillary length.
    pub xi_ratio: f64,
    /// Liquid diffusivity in units of lambda0^2 / tau0.
    pub d_nd: f64,
    pub ds_over_dl: f64,
    /// Pulling velocity in units of lambda0 / tau0.
    pub v_nd: f64,
    /// Thermal length in units of lambda0. Infinite for isothermal growth.
    pub lt_nd: f64,
    /// Characteristic time (s).
    pub tau0: f64,
    /// Coupling constant.
    pub xi: f64,
    pub k: f64,
    pub eps4: f64,
    /// Reference liquid composition (wt%) used to map `u_c` back to `c`.
    pub c_l0: f64,
    pub use_ohno_matsuura: bool,
}

impl AlloyParams {
    /// Drops the frozen-temperature tilt: zero gradient and zero pulling speed.
    pub fn isothermal(self) -> Self {
        AlloyParams {
            v_nd: 0.0,
            lt_nd: f64::INFINITY,
            ..self
        }
    }

    /// Effective diffusivity interpolation `q(phi)` multiplying `d_nd`.
    #[inline]
    pub fn diffusivity_factor(&self, phi: f64) -> f64 {
        if self.use_ohno_matsuura {
            0.5 * (1.0 - phi) + self.k * 0.5 * (1.0 + phi) * self.ds_over_dl
        } else {
            0.5 * (1.0 - phi)
        }
    }

    /// Prefactor of the anti-trapping current.
    #[inline]
    pub fn antitrapping_factor(&self) -> f64 {
        if self.use_ohno_matsuura {
            1.0 - self.k * self.ds_over_dl
        } else {
            1.0
        }
    }

    /// Frozen-temperature tilt `(y - v t) / l_T`.
    #[inline]
    pub fn tilt(&self, y: f64, t: f64) -> f64 {
        (y - self.v_nd * t) / self.lt_nd
    }
}

/// Maps dimensional alloy data onto the non-dimensional model inputs.
pub fn derive_alloy_params(mat: AlloyMaterial) -> Result<AlloyParams> {
    let mat = mat.validate()?;
    let undercooling_range = mat.m_l.abs() * mat.c0 * (1.0 - mat.k);
    let d0 = mat.k * mat.gibbs_thomson / undercooling_range;
    let xi_ratio = mat.lambda0 / d0;
    let xi = mat.a1 * xi_ratio;
    let tau0 = mat.a1 * mat.a2 * xi * mat.lambda0 * mat.lambda0 / mat.d_l;
    let d_nd = mat.d_l * tau0 / (mat.lambda0 * mat.lambda0);
    let v_nd = mat.v_p * tau0 / mat.lambda0;
    let lt_nd = undercooling_range / (mat.k * mat.g * mat.lambda0);
    let params = AlloyParams {
        d0,
        xi_ratio,
        d_nd,
        ds_over_dl: mat.d_s / mat.d_l,
        v_nd,
        lt_nd,
        tau0,
        xi,
        k: mat.k,
        eps4: mat.eps4,
        c_l0: mat.c0,
        use_ohno_matsuura: false,
    };
    if !(params.xi_ratio > 1.0) {
        return Err(Error::param(
            "lambda0",
            format!(
                "interface width must exceed the capillary length (ratio {})",
                xi_ratio
            ),
        ));
    }
    Ok(params)
}

/// Either model family, ready for assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Model {
    PureMelt(PureMeltParams),
    Alloy(AlloyParams),
}

impl Model {
    pub fn eps4(&self) -> f64 {
        match self {
            Model::PureMelt(p) => p.eps4,
            Model::Alloy(p) => p.eps4,
        }
    }

    pub fn fold(&self) -> u32 {
        match self {
            Model::PureMelt(p) => p.fold,
            Model::Alloy(_) => 4,
        }
    }

    pub fn is_alloy(&self) -> bool {
        matches!(self, Model::Alloy(_))
    }
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::param(
            name,
            format!("must be positive and finite, got {v}"),
        ))
    }
}

fn check_eps4(eps4: f64) -> Result<()> {
    if (0.0..1.0 / 3.0).contains(&eps4) {
        Ok(())
    } else {
        Err(Error::param(
            "eps4",
            format!("must lie in [0, 1/3), got {eps4}"),
        ))
    }
}
