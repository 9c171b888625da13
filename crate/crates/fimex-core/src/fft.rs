//! Iterative radix-2 FFT with precomputed twiddle tables.
//!
//! Conventions: `fft_forward` computes the unnormalized DFT with kernel
//! `exp(-2*pi*i*j*k/n)`; `fft_inverse` applies the conjugate kernel and the
//! `1/n` factor, so `fft_inverse(fft_forward(x)) == x` up to roundoff.
//! Plans are cached per transform length.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::Error;

/// Precomputed bit-reversal permutation and twiddle factors for one length.
pub struct FftPlan {
    n: usize,
    // twiddles[s] holds the n/2 factors exp(-2 pi i k / 2^(s+1)) used at stage s
    twiddles: Vec<Vec<Complex64>>,
    bitrev: Vec<usize>,
}

impl FftPlan {
    pub fn new(n: usize) -> Result<Self, Error> {
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidInput(format!(
                "FFT length must be a power of two, got {n}"
            )));
        }
        let stages = n.trailing_zeros() as usize;
        let mut twiddles = Vec::with_capacity(stages);
        for s in 0..stages {
            let m = 1usize << (s + 1);
            let half = m / 2;
            let mut tw = Vec::with_capacity(half);
            for k in 0..half {
                let angle = -2.0 * std::f64::consts::PI * (k as f64) / (m as f64);
                tw.push(Complex64::new(angle.cos(), angle.sin()));
            }
            twiddles.push(tw);
        }
        let mut bitrev = vec![0usize; n];
        for (i, slot) in bitrev.iter_mut().enumerate() {
            *slot = (i.reverse_bits()) >> (usize::BITS as usize - stages);
        }
        Ok(FftPlan { n, twiddles, bitrev })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.n as f64;
        for x in buf.iter_mut() {
            *x *= scale;
        }
    }

    /// Conjugate-kernel transform without the `1/n` factor; turns a
    /// coefficient spectrum into physical samples.
    pub fn inverse_unnormalized(&self, buf: &mut [Complex64]) {
        self.transform(buf, true);
    }

    fn transform(&self, buf: &mut [Complex64], conjugate: bool) {
        assert_eq!(buf.len(), self.n, "buffer length mismatch with plan");
        for i in 0..self.n {
            let j = self.bitrev[i];
            if j > i {
                buf.swap(i, j);
            }
        }
        for (s, tw) in self.twiddles.iter().enumerate() {
            let m = 1usize << (s + 1);
            let half = m / 2;
            for base in (0..self.n).step_by(m) {
                for k in 0..half {
                    let w = if conjugate { tw[k].conj() } else { tw[k] };
                    let t = w * buf[base + k + half];
                    let u = buf[base + k];
                    buf[base + k] = u + t;
                    buf[base + k + half] = u - t;
                }
            }
        }
    }
}

fn plan_cache() -> &'static Mutex<HashMap<usize, Arc<FftPlan>>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<FftPlan>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Fetch (or build) the cached plan for length `n`.
pub fn plan(n: usize) -> Result<Arc<FftPlan>, Error> {
    let mut cache = plan_cache().lock().expect("fft plan cache poisoned");
    if let Some(p) = cache.get(&n) {
        return Ok(p.clone());
    }
    let p = Arc::new(FftPlan::new(n)?);
    cache.insert(n, p.clone());
    Ok(p)
}

/// Unnormalized forward DFT of `buf` in place.
pub fn fft_forward(buf: &mut [Complex64]) -> Result<(), Error> {
    plan(buf.len())?.forward(buf);
    Ok(())
}

/// Inverse DFT of `buf` in place (includes the `1/n` factor).
pub fn fft_inverse(buf: &mut [Complex64]) -> Result<(), Error> {
    plan(buf.len())?.inverse(buf);
    Ok(())
}
