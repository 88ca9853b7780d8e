//! Adaptive quadrature and ODE integration along complex line segments.

use num_complex::Complex64;

use crate::error::{Error, Result};

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
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F>(f: &mut F, a: Complex64, b: Complex64) -> Result<(Complex64, f64)>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let c = (a + b) * 0.5;
    let h = (b - a) * 0.5;
    let fc = f(c)?;
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let d = h * XGK[j];
        let s = f(c - d)? + f(c + d)?;
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    Ok((kron * h, ((kron - gauss) * h).norm()))
}

/// ∫ f(z) dz along the straight segment from `a` to `b`, adaptively
/// bisected until the Gauss/Kronrod difference meets `max(atol, rtol·|I|)`.
pub fn integrate_segment<F>(mut f: F, a: Complex64, b: Complex64, rtol: f64, atol: f64) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut pieces = vec![(a, b, gk15(&mut f, a, b)?)];
    for _ in 0..4000 {
        let total: Complex64 = pieces.iter().map(|p| p.2 .0).sum();
        let err: f64 = pieces.iter().map(|p| p.2 .1).sum();
        if err <= atol.max(rtol * total.norm()) {
            return Ok(total);
        }
        let (k, _) = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.partial_cmp(&y.1 .2 .1).unwrap())
            .unwrap();
        let (pa, pb, _) = pieces.swap_remove(k);
        let m = (pa + pb) * 0.5;
        pieces.push((pa, m, gk15(&mut f, pa, m)?));
        pieces.push((m, pb, gk15(&mut f, m, pb)?));
    }
    Err(Error::NoConvergence(format!("quadrature on [{a}, {b}] exceeded subdivision budget")))
}

/// Sum of segment integrals along a polyline.
pub fn integrate_path<F>(mut f: F, path: &[Complex64], rtol: f64, atol: f64) -> Result<Complex64>
where
    F: FnMut(Complex64) -> Result<Complex64>,
{
    let mut total = Complex64::new(0.0, 0.0);
    for w in path.windows(2) {
        total += integrate_segment(&mut f, w[0], w[1], rtol, atol)?;
    }
    Ok(total)
}

const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates the linear system y' = F(z, y) (state of dimension `N`) along
/// the straight segment from `a` to `b` with an adaptive Dormand–Prince 5(4) pair.
pub fn ode_segment<const N: usize, F>(
    mut rhs: F,
    a: Complex64,
    b: Complex64,
    y0: [Complex64; N],
    rtol: f64,
) -> Result<[Complex64; N]>
where
    F: FnMut(Complex64, &[Complex64; N]) -> Result<[Complex64; N]>,
{
    let dir = b - a;
    let len = dir.norm();
    if len == 0.0 {
        return Ok(y0);
    }
    let mut s = 0.0f64;
    let mut h = 0.01f64;
    let mut y = y0;
    let mut steps = 0usize;
    while s < 1.0 {
        steps += 1;
        if steps > 200_000 {
            return Err(Error::NoConvergence(format!("ODE step budget exhausted between {a} and {b}")));
        }
        h = h.min(1.0 - s);
        let mut k = [[Complex64::new(0.0, 0.0); N]; 7];
        for st in 0..7 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(st) {
                let aij = DP_A[st][j];
                if aij != 0.0 {
                    for n in 0..N {
                        ys[n] += kj[n] * (aij * h);
                    }
                }
            }
            let z = a + dir * (s + DP_C[st] * h);
            let d = rhs(z, &ys)?;
            for n in 0..N {
                k[st][n] = d[n] * dir;
            }
        }
        let mut ynew = y;
        let mut err = 0.0f64;
        for n in 0..N {
            let mut inc = Complex64::new(0.0, 0.0);
            let mut e = Complex64::new(0.0, 0.0);
            for st in 0..7 {
                inc += k[st][n] * DP_B[st];
                e += k[st][n] * DP_E[st];
            }
            ynew[n] += inc * h;
            let sc = rtol * (y[n].norm().max(ynew[n].norm()) + 1e-300) + 1e-300;
            err = err.max((e * h).norm() / sc);
        }
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-14 {
                return Err(Error::NoConvergence(format!("ODE solution blew up near {}", a + dir * s)));
            }
            continue;
        }
        if err <= 1.0 {
            s += h;
            y = ynew;
        }
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
        if h < 1e-14 {
            return Err(Error::NoConvergence(format!("ODE step underflow near {}", a + dir * s)));
        }
    }
    Ok(y)
}

/// [`ode_segment`] chained along a polyline.
pub fn ode_path<const N: usize, F>(mut rhs: F, path: &[Complex64], y0: [Complex64; N], rtol: f64) -> Result<[Complex64; N]>
where
    F: FnMut(Complex64, &[Complex64; N]) -> Result<[Complex64; N]>,
{
    let mut y = y0;
    for w in path.windows(2) {
        y = ode_segment(&mut rhs, w[0], w[1], y, rtol)?;
    }
    Ok(y)
}
