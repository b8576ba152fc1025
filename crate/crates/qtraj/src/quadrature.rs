//! Adaptive Gauss–Kronrod (7/15) integration on finite intervals.
//!
//! Integrands in this crate are Gaussian-dominated, so infinite ranges are
//! truncated by the caller at ±8σ beyond the outermost component.

use crate::scalar::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const INITIAL_PANELS: usize = 32;
const MAX_DEPTH: u32 = 48;

fn gk15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> (T, T) {
    let half = T::lit(0.5);
    let c = half * (a + b);
    let h = half * (b - a);
    let fc = f(c);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = h * T::lit(XGK[j]);
        let s = f(c - dx) + f(c + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * h, (k - g).abs() * h)
}

fn adapt<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T, whole: T, err: T, abs_tol: T, depth: u32) -> T {
    if err <= abs_tol || depth >= MAX_DEPTH {
        return whole;
    }
    let m = T::lit(0.5) * (a + b);
    let (l, el) = gk15(f, a, m);
    let (r, er) = gk15(f, m, b);
    let t = T::lit(0.5) * abs_tol;
    adapt(f, a, m, l, el, t, depth + 1) + adapt(f, m, b, r, er, t, depth + 1)
}

/// Integrates `f` over `[a, b]` to relative tolerance `tol` (measured
/// against the integral of `|f|`).
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> T {
    if a == b {
        return T::zero();
    }
    let n = T::from_usize(INITIAL_PANELS).unwrap();
    let width = (b - a) / n;
    let panels: Vec<(T, T, T, T)> = (0..INITIAL_PANELS)
        .map(|i| {
            let lo = a + width * T::from_usize(i).unwrap();
            let hi = if i + 1 == INITIAL_PANELS { b } else { lo + width };
            let (v, e) = gk15(&f, lo, hi);
            (lo, hi, v, e)
        })
        .collect();
    let scale = panels.iter().fold(T::zero(), |acc, p| acc + gk15(&|x| f(x).abs(), p.0, p.1).0);
    let abs_tol = (tol * scale).max(T::min_positive_value()) / n;
    panels.iter().fold(T::zero(), |acc, &(lo, hi, v, e)| acc + adapt(&f, lo, hi, v, e, abs_tol, 0))
}

/// Iterated integral over a rectangle.
pub fn integrate_2d<T: Real, F: Fn(T, T) -> T>(f: F, xr: (T, T), yr: (T, T), tol: T) -> T {
    integrate(|x| integrate(|y| f(x, y), yr.0, yr.1, tol), xr.0, xr.1, tol)
}

/// Composite 15-point Kronrod rule with `panels` equal panels.
pub fn integrate_fixed<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize) -> T {
    let width = (b - a) / T::from_usize(panels).unwrap();
    (0..panels).fold(T::zero(), |acc, i| {
        let lo = a + width * T::from_usize(i).unwrap();
        acc + gk15(&f, lo, lo + width).0
    })
}

/// Product rule over a box using [`integrate_fixed`] on every axis.
pub fn integrate_3d<T: Real, F: Fn(T, T, T) -> T>(f: F, xr: (T, T), yr: (T, T), zr: (T, T), panels: usize) -> T {
    integrate_fixed(
        |x| integrate_fixed(|y| integrate_fixed(|z| f(x, y, z), zr.0, zr.1, panels), yr.0, yr.1, panels),
        xr.0,
        xr.1,
        panels,
    )
}
