use ndarray::Array2;

use super::Parameters;

/// Adam with L2 weight decay folded into the gradient.
#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    step: i32,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(learning_rate: f64, weight_decay: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay,
            step: 0,
            first: Vec::new(),
            second: Vec::new(),
        }
    }

    /// Applies one update from the accumulated gradients, then clears them.
    pub fn step<M: Parameters + ?Sized>(&mut self, model: &mut M) {
        let mut params = model.params_mut();
        if self.first.is_empty() {
            self.first = params.iter().map(|p| Array2::zeros(p.value.raw_dim())).collect();
            self.second = self.first.clone();
        }
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step);
        let bc2 = 1.0 - self.beta2.powi(self.step);
        for ((p, m), v) in params.iter_mut().zip(&mut self.first).zip(&mut self.second) {
            let wd = self.weight_decay;
            ndarray::Zip::from(&mut p.value)
                .and(&mut p.grad)
                .and(m)
                .and(v)
                .for_each(|w, g, m, v| {
                    let grad = *g + wd * *w;
                    *m = self.beta1 * *m + (1.0 - self.beta1) * grad;
                    *v = self.beta2 * *v + (1.0 - self.beta2) * grad * grad;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *w -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
                    *g = 0.0;
                });
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Param;

    struct Quadratic {
        x: Param,
    }

    impl Parameters for Quadratic {
        fn params(&self) -> Vec<&Param> {
            vec![&self.x]
        }
        fn params_mut(&mut self) -> Vec<&mut Param> {
            vec![&mut self.x]
        }
    }

    #[test]
    fn minimises_a_quadratic() {
        let mut model = Quadratic { x: Param::zeros(1, 2) };
        model.x.value[[0, 0]] = 3.0;
        model.x.value[[0, 1]] = -2.0;
        let mut adam = Adam::new(0.1, 0.0);
        for _ in 0..500 {
            let g = model.x.value.mapv(|v| 2.0 * v);
            model.x.grad.assign(&g);
            adam.step(&mut model);
        }
        assert!(model.x.value.iter().all(|v| v.abs() < 1e-2));
        assert!(model.x.grad.iter().all(|g| *g == 0.0));
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut model = Quadratic { x: Param::zeros(1, 1) };
        model.x.grad[[0, 0]] = 5.0;
        let mut adam = Adam::new(0.01, 0.0);
        adam.step(&mut model);
        assert!((model.x.value[[0, 0]] + 0.01).abs() < 1e-6);
    }
}
