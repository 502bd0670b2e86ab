//! Thin wrappers over `libm` so the numerics stay `no_std`.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

/// `(1 - v^2)^{3/2}`, the factor converting momentum rate into acceleration.
#[inline]
pub fn lorentz_32(v: f64) -> f64 {
    let s = 1.0 - v * v;
    s * sqrt(s)
}
