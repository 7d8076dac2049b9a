use super::{Complex, IqVector};
use crate::error::{param, Result};
use rustfft::{Fft, FftPlanner};
use std::fmt;
use std::sync::Arc;

/// Planned N-point transform pair.
///
/// Forward is unnormalized, `X[k] = sum_n x[n] e^{-2j pi n k / N}`; inverse
/// carries the `1/N` factor so that `inverse(forward(x)) == x`.
#[derive(Clone)]
pub struct Dft {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Dft {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Dft").field("n", &self.n).finish()
    }
}

impl Dft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return param("dft size must be positive");
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    fn check(&self, x: &[Complex]) -> Result<()> {
        if x.len() != self.n {
            return param(format!("dft input length {} != {}", x.len(), self.n));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[Complex]) -> Result<IqVector> {
        self.check(x)?;
        let mut buf = x.to_vec();
        self.fwd.process(&mut buf);
        Ok(buf)
    }

    pub fn inverse(&self, x: &[Complex]) -> Result<IqVector> {
        self.check(x)?;
        let mut buf = x.to_vec();
        self.inv.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
        Ok(buf)
    }
}

/// One-shot forward transform of a length-`n` vector.
pub fn forward_dft(x: &[Complex], n: usize) -> Result<IqVector> {
    if x.len() != n {
        return param(format!("dft input length {} != {}", x.len(), n));
    }
    Dft::new(n)?.forward(x)
}

/// One-shot inverse transform of a length-`n` vector.
pub fn inverse_dft(x: &[Complex], n: usize) -> Result<IqVector> {
    if x.len() != n {
        return param(format!("dft input length {} != {}", x.len(), n));
    }
    Dft::new(n)?.inverse(x)
}
