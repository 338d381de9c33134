//! Scalar float math that works both with `std` and with `libm` under
//! `no_std`.

#![allow(dead_code)]

macro_rules! forward {
    ($($name:ident => $libm:ident),* $(,)?) => {
        $(
            #[cfg(feature = "std")]
            #[inline(always)]
            pub(crate) fn $name(x: f64) -> f64 {
                f64::$name(x)
            }

            #[cfg(not(feature = "std"))]
            #[inline(always)]
            pub(crate) fn $name(x: f64) -> f64 {
                libm::$libm(x)
            }
        )*
    };
}

forward! {
    abs => fabs,
    atan => atan,
    cos => cos,
    exp => exp,
    floor => floor,
    ln => log,
    round => round,
    sin => sin,
    sqrt => sqrt,
}
