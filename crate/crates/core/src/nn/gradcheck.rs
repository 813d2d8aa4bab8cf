use crate::scalar::Scalar;

use super::Parameterized;

/// Per-block and overall maximum relative error between an analytic gradient
/// and central finite differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub blocks: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

/// Compares `analytic` (same shape as `net`) against central differences of
/// `loss` with step `h`. The relative error of each entry is
/// `|a − n| / max(|a|, |n|, floor)`, so near-zero gradients are judged on an
/// absolute scale.
pub fn grad_check<T, N, F>(net: &N, analytic: &N, loss: F, h: T, floor: T) -> GradCheckReport
where
    T: Scalar,
    N: Parameterized<T> + Clone,
    F: Fn(&N) -> T,
{
    let mut names = Vec::new();
    let mut grads = Vec::new();
    analytic.visit("", &mut |name, b| {
        names.push(name.to_string());
        grads.push(b.to_vec());
    });

    let mut probe = net.clone();
    let mut blocks = Vec::with_capacity(names.len());
    for (bi, name) in names.iter().enumerate() {
        let mut worst = 0.0f64;
        for j in 0..grads[bi].len() {
            let fd = {
                let eval = |probe: &mut N, delta: T| {
                    let mut k = 0;
                    probe.visit_mut("", &mut |_, b| {
                        if k == bi {
                            b[j] += delta;
                        }
                        k += 1;
                    });
                    loss(probe)
                };
                let plus = eval(&mut probe, h);
                let minus = eval(&mut probe, -(h + h));
                eval(&mut probe, h);
                (plus - minus) / (h + h)
            };
            let a = grads[bi][j];
            let denom = a.abs().max(fd.abs()).max(floor);
            worst = worst.max(((a - fd).abs() / denom).as_f64());
        }
        blocks.push((name.clone(), worst));
    }
    let max_rel_error = blocks.iter().map(|b| b.1).fold(0.0, f64::max);
    GradCheckReport { blocks, max_rel_error }
}

#[cfg(test)]
mod tests {
    use super::super::{Activation, DenseLayer, Matrix, Parameterized};
    use super::*;

    fn linear() -> DenseLayer<f64> {
        DenseLayer {
            weight: Matrix::from_vec(2, 3, vec![0.5, -1.0, 0.25, 2.0, 0.0, -0.75]),
            bias: vec![0.1, -0.3],
            activation: Activation::Identity,
        }
    }

    fn analytic(layer: &DenseLayer<f64>, x: &[f64]) -> DenseLayer<f64> {
        let (y, cache) = layer.forward(x).unwrap();
        let mut g = layer.zeroed();
        layer.backward(&cache, &y.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), &mut g).unwrap();
        g
    }

    #[test]
    fn quadratic_loss_is_exact() {
        let layer = linear();
        let x = [1.0, -2.0, 0.5];
        let loss = |l: &DenseLayer<f64>| l.forward(&x).unwrap().0.iter().map(|v| v * v).sum::<f64>();
        let report = grad_check(&layer, &analytic(&layer, &x), loss, 1e-5, 1e-4);
        assert!(report.max_rel_error < 1e-10, "{report:?}");
        assert_eq!(report.blocks[0].0, "weight");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let layer = linear();
        let x = [1.0, -2.0, 0.5];
        let loss = |l: &DenseLayer<f64>| l.forward(&x).unwrap().0.iter().map(|v| v * v).sum::<f64>();
        let mut g = analytic(&layer, &x);
        g.weight.data[1] *= 2.0;
        let report = grad_check(&layer, &g, loss, 1e-5, 1e-4);
        assert!(report.max_rel_error > 0.1);
        assert!(report.blocks[0].1 > 0.1 && report.blocks[1].1 < 1e-8);
    }
}
