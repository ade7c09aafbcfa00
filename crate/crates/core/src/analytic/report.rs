use num_complex::Complex;

use crate::optics::Convention;
use crate::real::Real;

/// Where a report was evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiParams<T> {
    pub aperture: String,
    /// PSF width for Gaussian apertures.
    pub sigma: Option<T>,
    pub separation: T,
    pub coherence: Complex<T>,
    pub convention: Convention,
}

/// The four QFI variants and the transmission probability at one parameter point.
///
/// Per-emitted quantities (`f_em_*`, `transmission`, `transmission_slope`) are divided by
/// the source width `delta`; per-detected ones are absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiReport<T> {
    /// QFI of the full state per emitted photon, per unit `delta`.
    pub f_em_full: T,
    /// QFI of the full state per detected photon.
    pub f_det_full: T,
    /// QFI of the normalized single-photon part per emitted photon, per unit `delta`.
    pub f_em_single: T,
    /// QFI of the normalized single-photon part per detected photon.
    pub f_det_single: T,
    /// Transmission probability per unit `delta`.
    pub transmission: T,
    /// `d transmission / ds`, per unit `delta`.
    pub transmission_slope: T,
    pub params: QfiParams<T>,
}

impl<T: Real> QfiReport<T> {
    /// Same report with per-emitted quantities rescaled to `convention`.
    pub fn with_convention(&self, convention: Convention) -> Self {
        let k = convention.factor::<T>() / self.params.convention.factor::<T>();
        let mut out = self.clone();
        out.f_em_full = self.f_em_full * k;
        out.f_em_single = self.f_em_single * k;
        out.transmission = self.transmission * k;
        out.transmission_slope = self.transmission_slope * k;
        out.params.convention = convention;
        out
    }

    /// The vacuum contribution `(dp3/ds)^2 / p3` to the QFI of the full state for a source
    /// of width `delta` emitting with probability `emission_prob`.
    pub fn vacuum_term(&self, delta: T, emission_prob: T) -> T {
        let p3 = T::one() - emission_prob * delta * self.transmission;
        let dp3 = -emission_prob * delta * self.transmission_slope;
        if p3 > T::zero() {
            dp3 * dp3 / p3
        } else {
            T::zero()
        }
    }

    /// The four QFI values in a fixed order: em full, det full, em single, det single.
    pub fn values(&self) -> [T; 4] {
        [self.f_em_full, self.f_det_full, self.f_em_single, self.f_det_single]
    }

    pub fn is_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite()) && self.transmission.is_finite()
    }

    pub fn to_f64(&self) -> QfiReport<f64> {
        QfiReport {
            f_em_full: self.f_em_full.as_f64(),
            f_det_full: self.f_det_full.as_f64(),
            f_em_single: self.f_em_single.as_f64(),
            f_det_single: self.f_det_single.as_f64(),
            transmission: self.transmission.as_f64(),
            transmission_slope: self.transmission_slope.as_f64(),
            params: QfiParams {
                aperture: self.params.aperture.clone(),
                sigma: self.params.sigma.map(Real::as_f64),
                separation: self.params.separation.as_f64(),
                coherence: Complex::new(self.params.coherence.re.as_f64(), self.params.coherence.im.as_f64()),
                convention: self.params.convention,
            },
        }
    }
}
