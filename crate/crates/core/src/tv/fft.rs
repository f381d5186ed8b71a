use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Unitary 2-D DFT on an `N×N` row-major grid: `F⁻¹ = Fᴴ`.
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    col: Vec<Complex64>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            col: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn run(&mut self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        assert_eq!(data.len(), n * n, "grid size mismatch");
        let plan = if inverse { &self.inverse } else { &self.forward };
        // rows are contiguous
        plan.process_with_scratch(data, &mut self.scratch);
        for j in 0..n {
            for i in 0..n {
                self.col[i] = data[i * n + j];
            }
            plan.process_with_scratch(&mut self.col, &mut self.scratch);
            for i in 0..n {
                data[i * n + j] = self.col[i];
            }
        }
        let scale = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= scale;
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.run(data, false);
    }

    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.run(data, true);
    }

    pub fn forward_real(&mut self, data: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = data.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut c);
        c
    }
}
