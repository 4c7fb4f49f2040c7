//! Small numeric helpers shared across the crate.

use nalgebra::DMatrix;

/// C² quintic step: 0 at u ≤ 0, 1 at u ≥ 1, first and second derivative
/// vanish at both ends. Max slope 15/8 at u = 1/2.
pub fn smoothstep(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        1.0
    } else {
        u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
    }
}

pub fn smoothstep_d1(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        30.0 * u * u * (1.0 - u) * (1.0 - u)
    }
}

pub fn smoothstep_d2(u: f64) -> f64 {
    if u <= 0.0 || u >= 1.0 {
        0.0
    } else {
        60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)
    }
}

/// ∫₀ᵘ smoothstep, clamped outside [0,1] (value u − 1/2 for u ≥ 1).
pub fn smoothstep_integral(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else if u >= 1.0 {
        u - 0.5
    } else {
        let u4 = u * u * u * u;
        u4 * (2.5 + u * (-3.0 + u))
    }
}

/// 32-point Gauss–Legendre quadrature on [a, b].
pub fn gauss_legendre_32(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    // Nodes/weights for [-1, 1], positive half; mirrored below.
    const X: [f64; 16] = [
        0.048_307_665_687_738_32,
        0.144_471_961_582_796_5,
        0.239_287_362_252_137_1,
        0.331_868_602_282_127_65,
        0.421_351_276_130_635_3,
        0.506_899_908_932_229_4,
        0.587_715_757_240_762_3,
        0.663_044_266_930_215_2,
        0.732_182_118_740_289_7,
        0.794_483_795_967_942_4,
        0.849_367_613_732_569_97,
        0.896_321_155_766_052_1,
        0.934_906_075_937_739_7,
        0.964_762_255_587_506_4,
        0.985_611_511_545_268_3,
        0.997_263_861_849_481_6,
    ];
    const W: [f64; 16] = [
        0.096_540_088_514_727_8,
        0.095_638_720_079_274_86,
        0.093_844_399_080_804_57,
        0.091_173_878_695_763_88,
        0.087_652_093_004_403_8,
        0.083_311_924_226_946_75,
        0.078_193_895_787_070_3,
        0.072_345_794_108_848_51,
        0.065_822_222_776_361_85,
        0.058_684_093_478_535_55,
        0.050_998_059_262_376_176,
        0.042_835_898_022_226_68,
        0.034_273_862_913_021_43,
        0.025_392_065_309_262_06,
        0.016_274_394_730_905_67,
        0.007_018_610_009_470_097,
    ];
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for i in 0..16 {
        let dx = half * X[i];
        acc += W[i] * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

/// Eigenvalues of a symmetric matrix, computed on a normalized copy so that
/// very large or very small scales do not overflow intermediate squares.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let scale = m.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return vec![0.0; m.nrows()];
    }
    let scaled = m.map(|x| x / scale);
    let eig = scaled.symmetric_eigenvalues();
    eig.iter().map(|&l| l * scale).collect()
}

/// Spectral norm (largest |eigenvalue|) of a symmetric matrix.
pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .fold(0.0f64, |a, &l| a.max(l.abs()))
}

/// Smallest eigenvalue of a symmetric matrix.
pub fn lambda_min_sym(m: &DMatrix<f64>) -> f64 {
    symmetric_eigenvalues(m)
        .iter()
        .fold(f64::INFINITY, |a, &l| a.min(l))
}

/// Frobenius norm with overflow-safe scaling.
pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    let scale = m.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return if scale.is_finite() { 0.0 } else { f64::INFINITY };
    }
    let s: f64 = m.iter().map(|&x| (x / scale) * (x / scale)).sum();
    scale * s.sqrt()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

/// Logarithmically spaced grid between a and b (both > 0), n ≥ 2 points.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > 0.0 && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

pub fn lin_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}
