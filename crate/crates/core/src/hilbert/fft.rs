use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::space::GridSpace;

/// Forward/inverse FFT plans for every axis of a grid.
///
/// The forward transform is unnormalized; `inverse` divides by the point count
/// so that `inverse(forward(x)) == x`.
pub struct GridFft {
    points: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
}

impl GridFft {
    pub fn new(grid: &GridSpace) -> Self {
        let mut planner = FftPlanner::new();
        let points: Vec<usize> = (0..grid.dimension()).map(|a| grid.points(a)).collect();
        let forward = points.iter().map(|&n| planner.plan_fft_forward(n)).collect();
        let inverse = points.iter().map(|&n| planner.plan_fft_inverse(n)).collect();
        Self {
            points,
            forward,
            inverse,
        }
    }

    fn transform(&self, data: &mut [Complex64], plans: &[Arc<dyn Fft<f64>>]) {
        match self.points.len() {
            1 => plans[0].process(data),
            _ => {
                let (nx, ny) = (self.points[0], self.points[1]);
                // rows are contiguous along axis 1
                plans[1].process(data);
                let mut column = vec![Complex64::new(0.0, 0.0); nx];
                for j in 0..ny {
                    for i in 0..nx {
                        column[i] = data[i * ny + j];
                    }
                    plans[0].process(&mut column);
                    for i in 0..nx {
                        data[i * ny + j] = column[i];
                    }
                }
            }
        }
    }

    pub fn forward(&self, data: &mut [Complex64]) {
        self.transform(data, &self.forward);
    }

    pub fn inverse(&self, data: &mut [Complex64]) {
        self.transform(data, &self.inverse);
        let scale = 1.0 / data.len() as f64;
        data.iter_mut().for_each(|z| *z *= scale);
    }
}
