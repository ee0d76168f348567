//! Thin wrappers over `libm` so numerical code reads like `std` code.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn cosh(x: f64) -> f64 {
    libm::cosh(x)
}

#[inline]
pub fn tanh(x: f64) -> f64 {
    libm::tanh(x)
}

/// `1 / cosh(x)`, evaluated without overflow for large `|x|`.
#[inline]
pub fn sech(x: f64) -> f64 {
    let ax = x.abs();
    if ax > 20.0 {
        2.0 * libm::exp(-ax) / (1.0 + libm::exp(-2.0 * ax))
    } else {
        1.0 / libm::cosh(x)
    }
}

#[inline]
pub fn powi(x: f64, n: i32) -> f64 {
    libm::pow(x, n as f64)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn exp2(x: f64) -> f64 {
    libm::exp2(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}
