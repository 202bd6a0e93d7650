//! Thin wrappers over `libm` so the crate builds without `std`.
//!
//! Routing every transcendental through one implementation also keeps results
//! bit-identical across feature combinations.

pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}
