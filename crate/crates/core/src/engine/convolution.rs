//! Toroidal 2D convolution through the FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::kernel::KernelImage;

/// Forward/inverse plans for one square lattice size.
#[derive(Clone)]
pub struct Fft2 {
    size: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("size", &self.size).finish()
    }
}

impl Fft2 {
    pub fn new(size: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            size,
            forward: planner.plan_fft_forward(size),
            inverse: planner.plan_fft_inverse(size),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Unnormalized in-place 2D transform of a row-major buffer.
    pub fn transform(&self, data: &mut [Complex64], inverse: bool, scratch: &mut Vec<Complex64>) {
        let plan = if inverse { &self.inverse } else { &self.forward };
        scratch.resize(plan.get_inplace_scratch_len(), Complex64::default());
        // Rows are contiguous, so one call handles all of them.
        plan.process_with_scratch(data, scratch);
        transpose(data, self.size);
        plan.process_with_scratch(data, scratch);
        transpose(data, self.size);
    }

    pub fn forward_real(&self, input: &[f64], scratch: &mut Vec<Complex64>) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = input.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false, scratch);
        buf
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for y in 0..n {
        for x in y + 1..n {
            data.swap(y * n + x, x * n + y);
        }
    }
}

/// Kernel spectra for a fixed lattice, applied to density fields.
#[derive(Clone, Debug)]
pub struct Convolver {
    fft: Fft2,
    spectra: Vec<Vec<Complex64>>,
}

impl Convolver {
    pub fn new(size: usize, kernels: &[KernelImage]) -> Self {
        let fft = Fft2::new(size);
        let mut scratch = Vec::new();
        let spectra = kernels
            .iter()
            .map(|k| fft.forward_real(k.data(), &mut scratch))
            .collect();
        Self { fft, spectra }
    }

    pub fn size(&self) -> usize {
        self.fft.size()
    }

    pub fn kernel_count(&self) -> usize {
        self.spectra.len()
    }

    /// Spectrum of a real field, reusable across kernels reading that field.
    pub fn field_spectrum(&self, field: &[f64]) -> Vec<Complex64> {
        let mut scratch = Vec::with_capacity(field.len());
        self.fft.forward_real(field, &mut scratch)
    }

    /// `(K_kernel * field)` given the field's spectrum, written into `out`.
    pub fn convolve_spectrum(
        &self,
        kernel: usize,
        spectrum: &[Complex64],
        out: &mut [f64],
        work: &mut Vec<Complex64>,
        scratch: &mut Vec<Complex64>,
    ) {
        let k = &self.spectra[kernel];
        work.clear();
        work.extend(spectrum.iter().zip(k).map(|(a, b)| a * b));
        self.fft.transform(work, true, scratch);
        let norm = 1.0 / (self.size() * self.size()) as f64;
        for (o, v) in out.iter_mut().zip(work.iter()) {
            *o = v.re * norm;
        }
    }

    /// Two convolutions for the price of one inverse transform: both
    /// products are spectra of real fields, so they can share the real and
    /// imaginary parts of one buffer.
    #[allow(clippy::too_many_arguments)]
    pub fn convolve_pair(
        &self,
        (kernel_a, spectrum_a): (usize, &[Complex64]),
        (kernel_b, spectrum_b): (usize, &[Complex64]),
        out_a: &mut [f64],
        out_b: &mut [f64],
        work: &mut Vec<Complex64>,
        scratch: &mut Vec<Complex64>,
    ) {
        let (ka, kb) = (&self.spectra[kernel_a], &self.spectra[kernel_b]);
        let i = Complex64::new(0.0, 1.0);
        work.clear();
        work.extend(
            spectrum_a
                .iter()
                .zip(ka)
                .zip(spectrum_b.iter().zip(kb))
                .map(|((sa, a), (sb, b))| sa * a + i * (sb * b)),
        );
        self.fft.transform(work, true, scratch);
        let norm = 1.0 / (self.size() * self.size()) as f64;
        for ((oa, ob), v) in out_a.iter_mut().zip(out_b.iter_mut()).zip(work.iter()) {
            *oa = v.re * norm;
            *ob = v.im * norm;
        }
    }

    pub fn convolve(&self, kernel: usize, field: &[f64]) -> Vec<f64> {
        let spectrum = self.field_spectrum(field);
        let mut out = vec![0.0; field.len()];
        self.convolve_spectrum(kernel, &spectrum, &mut out, &mut Vec::new(), &mut Vec::new());
        out
    }
}
