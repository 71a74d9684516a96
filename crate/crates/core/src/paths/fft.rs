//! Iterative radix-2 FFT, enough for circulant embedding on dyadic sizes.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::math::{cos, sin};

/// Twiddle table for forward transforms of a fixed power-of-two length.
#[derive(Debug, Clone)]
pub(crate) struct Fft {
    n: usize,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n.is_power_of_two(), "fft length must be a power of two");
        let half = n / 2;
        let mut c = Vec::with_capacity(half);
        let mut s = Vec::with_capacity(half);
        for k in 0..half {
            let a = -2.0 * PI * k as f64 / n as f64;
            c.push(cos(a));
            s.push(sin(a));
        }
        Self { n, cos: c, sin: s }
    }

    /// In-place forward DFT `X_j = sum_k x_k exp(-2 pi i j k / n)`.
    pub fn forward(&self, re: &mut [f64], im: &mut [f64]) {
        let n = self.n;
        debug_assert!(re.len() == n && im.len() == n);
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                re.swap(i, j);
                im.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let step = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..len / 2 {
                    let (wr, wi) = (self.cos[k * step], self.sin[k * step]);
                    let a = start + k;
                    let b = a + len / 2;
                    let tr = re[b] * wr - im[b] * wi;
                    let ti = re[b] * wi + im[b] * wr;
                    re[b] = re[a] - tr;
                    im[b] = im[a] - ti;
                    re[a] += tr;
                    im[a] += ti;
                }
            }
            len <<= 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matches_naive_dft() {
        let n = 16;
        let x: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64) - 4.5).collect();
        let y: Vec<f64> = (0..n).map(|i| ((i * 13 % 7) as f64) * 0.25).collect();
        let (mut re, mut im) = (x.clone(), y.clone());
        Fft::new(n).forward(&mut re, &mut im);
        for j in 0..n {
            let (mut sr, mut si) = (0.0, 0.0);
            for k in 0..n {
                let a = -2.0 * PI * (j * k) as f64 / n as f64;
                sr += x[k] * cos(a) - y[k] * sin(a);
                si += x[k] * sin(a) + y[k] * cos(a);
            }
            assert!((re[j] - sr).abs() < 1e-10 && (im[j] - si).abs() < 1e-10);
        }
    }

    #[test]
    fn trivial_sizes() {
        let mut re = vec![3.0];
        let mut im = vec![0.0];
        Fft::new(1).forward(&mut re, &mut im);
        assert_eq!(re, [3.0]);
        let mut re = vec![1.0, 2.0];
        let mut im = vec![0.0, 0.0];
        Fft::new(2).forward(&mut re, &mut im);
        assert_eq!(re, [3.0, -1.0]);
    }
}
