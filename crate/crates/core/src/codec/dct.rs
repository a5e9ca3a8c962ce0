//! Orthonormal 8x8 DCT-II and its inverse, plus zig-zag scan order.

use std::sync::LazyLock;

pub const N: usize = 8;
pub type Block = [f64; N * N];

static BASIS: LazyLock<[[f64; N]; N]> = LazyLock::new(|| {
    let mut c = [[0.0; N]; N];
    for (k, row) in c.iter_mut().enumerate() {
        let a = if k == 0 { (1.0 / N as f64).sqrt() } else { (2.0 / N as f64).sqrt() };
        for (n, v) in row.iter_mut().enumerate() {
            *v = a * ((2 * n + 1) as f64 * k as f64 * std::f64::consts::PI / (2 * N) as f64).cos();
        }
    }
    c
});

/// Zig-zag position -> raster index.
pub const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27,
    20, 13, 6, 7, 14, 21, 28, 35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58,
    59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
];

pub fn forward(input: &Block) -> Block {
    let c = &*BASIS;
    let mut tmp = [0.0; 64];
    // rows
    for y in 0..N {
        for k in 0..N {
            tmp[y * N + k] = (0..N).map(|n| c[k][n] * input[y * N + n]).sum();
        }
    }
    let mut out = [0.0; 64];
    // columns
    for k in 0..N {
        for x in 0..N {
            out[k * N + x] = (0..N).map(|n| c[k][n] * tmp[n * N + x]).sum();
        }
    }
    out
}

pub fn inverse(input: &Block) -> Block {
    let c = &*BASIS;
    let mut tmp = [0.0; 64];
    for n in 0..N {
        for x in 0..N {
            tmp[n * N + x] = (0..N).map(|k| c[k][n] * input[k * N + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..N {
        for n in 0..N {
            out[y * N + n] = (0..N).map(|k| c[k][n] * tmp[y * N + k]).sum();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn zigzag_is_a_permutation() {
        let mut seen = [false; 64];
        for &i in &ZIGZAG {
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert_eq!(&ZIGZAG[..6], &[0, 1, 8, 16, 9, 2]);
    }

    #[test]
    fn dc_of_constant_block() {
        let b = [10.0; 64];
        let f = forward(&b);
        assert!((f[0] - 80.0).abs() < 1e-12);
        assert!(f[1..].iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn matches_direct_definition() {
        // X[u][v] = a(u) a(v) sum x[y][x] cos(..) cos(..), evaluated naively
        let input: Block = std::array::from_fn(|i| ((i * 37) % 23) as f64 - 11.0);
        let f = forward(&input);
        let pi = std::f64::consts::PI;
        let a = |k: usize| if k == 0 { (0.125f64).sqrt() } else { 0.5 };
        for u in 0..8 {
            for v in 0..8 {
                let mut s = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        s += input[y * 8 + x]
                            * ((2 * y + 1) as f64 * u as f64 * pi / 16.0).cos()
                            * ((2 * x + 1) as f64 * v as f64 * pi / 16.0).cos();
                    }
                }
                assert!((f[u * 8 + v] - a(u) * a(v) * s).abs() < 1e-9);
            }
        }
    }

    proptest! {
        #[test]
        fn inverse_undoes_forward(vals in proptest::array::uniform32(-128.0f64..128.0)) {
            let mut b = [0.0; 64];
            b[..32].copy_from_slice(&vals);
            b[32..].copy_from_slice(&vals);
            let r = inverse(&forward(&b));
            for i in 0..64 {
                prop_assert!((r[i] - b[i]).abs() < 1e-9);
            }
            // orthonormal: energy preserved
            let e0: f64 = b.iter().map(|v| v * v).sum();
            let e1: f64 = forward(&b).iter().map(|v| v * v).sum();
            prop_assert!((e0 - e1).abs() <= 1e-9 * (1.0 + e0));
        }
    }
}
