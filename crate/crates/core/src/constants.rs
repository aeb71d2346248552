//! Frozen constants. Generated from `asymptotics::k_series_in_cbrt_nu(9)`;
//! the oracle reproduces `C_FLAT` and `C_L` to within 2e-16 and the
//! `asymptotics` tests re-run it against these values.

/// `3^{1/3}`.
pub const C_SHARP: f64 = 1.442_249_570_307_408_4;
/// Coefficient of `nu` in `k(nu)`.
pub const C_FLAT: f64 = -0.6;
/// Coefficient of `nu^{5/3}` in `k(nu)`, equal to `-87 * 3^{2/3} / 350`.
pub const C_L: f64 = -0.517_049_407_444_330_45;
/// Coefficient of `nu^{7/3}` in `k(nu)`, equal to `-131 * 3^{1/3} / 350`.
pub const C_NEXT: f64 = -0.539_813_410_600_772_85;

/// Regular normalization `c_0 = 3^{1/2} c_sharp^{-3/2} / 4`, which equals 1/4.
pub const C0_CLOSED_FORM: f64 = 0.25;
/// Singular normalization `d_0 = 3^{-1/2} c_sharp^{3/2}`, which equals 1.
pub const D0_CLOSED_FORM: f64 = 1.0;
