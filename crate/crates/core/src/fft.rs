//! Zero-padded linear convolution through the FFT.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

/// Full linear convolution of `a` and `b` (length `a.len() + b.len() - 1`),
/// evaluated with a power-of-two transform long enough to avoid wrap-around.
pub fn linear_convolution(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let out_len = a.len() + b.len() - 1;
    let len = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);

    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(len, Complex::new(0.0, 0.0));
    let mut fb: Vec<Complex<f64>> = b.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fb.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    inv.process(&mut fa);
    let scale = 1.0 / len as f64;
    fa.truncate(out_len);
    fa.into_iter().map(|z| z.re * scale).collect()
}

/// Autocorrelation sums `r[k] = Σ_i a[i] a[i + k]` for `k = 0..=max_lag`.
pub fn autocorrelation(a: &[f64], max_lag: usize) -> Vec<f64> {
    if a.is_empty() {
        return vec![0.0; max_lag + 1];
    }
    let len = (2 * a.len()).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut fa: Vec<Complex<f64>> = a.iter().map(|&x| Complex::new(x, 0.0)).collect();
    fa.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut fa);
    for z in fa.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    inv.process(&mut fa);
    let scale = 1.0 / len as f64;
    (0..=max_lag)
        .map(|k| if k < a.len() { fa[k].re * scale } else { 0.0 })
        .collect()
}

/// Convolves many signals of a fixed length against one kernel, reusing the
/// kernel spectrum and FFT plans.
pub struct KernelConvolver {
    len: usize,
    kernel_len: usize,
    signal_len: usize,
    spectrum: Vec<Complex<f64>>,
    fwd: std::sync::Arc<dyn rustfft::Fft<f64>>,
    inv: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl KernelConvolver {
    pub fn new(kernel: &[f64], signal_len: usize) -> Self {
        let out_len = kernel.len() + signal_len.max(1) - 1;
        let len = out_len.next_power_of_two();
        let mut planner = FftPlanner::<f64>::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let mut spectrum: Vec<Complex<f64>> = kernel.iter().map(|&x| Complex::new(x, 0.0)).collect();
        spectrum.resize(len, Complex::new(0.0, 0.0));
        fwd.process(&mut spectrum);
        Self { len, kernel_len: kernel.len(), signal_len, spectrum, fwd, inv }
    }

    /// Full linear convolution `kernel * signal`.
    pub fn convolve(&self, signal: &[f64]) -> Vec<f64> {
        assert_eq!(signal.len(), self.signal_len, "signal length differs from plan");
        let mut buf: Vec<Complex<f64>> = signal.iter().map(|&x| Complex::new(x, 0.0)).collect();
        buf.resize(self.len, Complex::new(0.0, 0.0));
        self.fwd.process(&mut buf);
        for (x, y) in buf.iter_mut().zip(&self.spectrum) {
            *x *= *y;
        }
        self.inv.process(&mut buf);
        let scale = 1.0 / self.len as f64;
        buf.truncate(self.kernel_len + self.signal_len - 1);
        buf.into_iter().map(|z| z.re * scale).collect()
    }
}
