//! Adaptive Gauss-Kronrod (7/15) quadrature.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

// Gauss weights for the odd Kronrod nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 48;

/// One 15-point Kronrod estimate on `[a, b]` and its distance to the
/// embedded 7-point Gauss estimate.
fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let centre = (a + b) * half;
    let radius = (b - a) * half;
    let fc = f(centre);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for k in 0..7 {
        let dx = radius * T::lit(XGK[k]);
        let pair = f(centre - dx) + f(centre + dx);
        kronrod = kronrod + pair * T::lit(WGK[k]);
        if k % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[k / 2]);
        }
    }
    (kronrod * radius, ((kronrod - gauss) * radius).abs())
}

fn adapt<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, whole: (T, T), tol: T, depth: u32) -> T {
    let (value, err) = whole;
    // below the rounding floor of the panel further bisection cannot help
    let floor = T::epsilon() * T::lit(50.0) * value.abs();
    if err <= tol.max(floor) || depth >= MAX_DEPTH {
        return value;
    }
    let m = (a + b) * T::lit(0.5);
    let half_tol = tol * T::lit(0.5);
    adapt(f, a, m, gk15(f, a, m), half_tol, depth + 1) + adapt(f, m, b, gk15(f, m, b), half_tol, depth + 1)
}

/// `int_a^b f` to absolute tolerance `tol` by recursive bisection.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    adapt(&f, a, b, gk15(&f, a, b), tol, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        let v = integrate(|x: f64| x.powi(7) - 3.0 * x * x, 0.0, 2.0, 1e-12);
        assert!((v - (32.0 - 8.0)).abs() < 1e-12);
    }

    #[test]
    fn transcendental() {
        let v = integrate(|x: f64| x.exp(), 0.0, 5.0, 1e-12);
        assert!((v - (5f64.exp() - 1.0)).abs() < 1e-10);
        let v = integrate(|x: f64| 1.0 / x, 1.0, 1e6, 1e-10);
        assert!((v - 1e6f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn empty_interval() {
        assert_eq!(integrate(|x: f32| x, 3.0, 3.0, 1e-6), 0.0);
    }
}
