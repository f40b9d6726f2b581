//! Float math routed through `libm` so the crate works without `std` and
//! produces identical results in every build profile.

pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

pub fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

pub fn powf(x: f64, e: f64) -> f64 {
    libm::pow(x, e)
}

pub fn powi(x: f64, e: i32) -> f64 {
    let mut out = 1.0;
    let mut base = if e < 0 { 1.0 / x } else { x };
    let mut n = e.unsigned_abs();
    while n > 0 {
        if n & 1 == 1 {
            out *= base;
        }
        base *= base;
        n >>= 1;
    }
    out
}

pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

pub fn hypot2(a: f64, b: f64) -> f64 {
    libm::hypot(a, b)
}
