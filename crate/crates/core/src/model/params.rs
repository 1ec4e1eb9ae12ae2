use ndarray::{Array1, Array2, ArrayViewD, ArrayViewMutD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HyperParams, Real};

/// Dense layer `x · weight + bias` with `weight: in × out`.
#[derive(Debug, Clone, PartialEq)]
pub struct Affine<F> {
    pub weight: Array2<F>,
    pub bias: Array1<F>,
}

impl<F: Real> Affine<F> {
    pub fn zeros(inp: usize, out: usize) -> Self {
        Affine {
            weight: Array2::zeros((inp, out)),
            bias: Array1::zeros(out),
        }
    }

    fn glorot(inp: usize, out: usize, rng: &mut ChaCha8Rng) -> Self {
        Affine {
            weight: glorot(inp, out, rng),
            bias: Array1::zeros(out),
        }
    }

    pub fn apply(&self, x: &Array2<F>) -> Array2<F> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Stack of affine layers with tanh between them; the last layer is linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<F> {
    pub layers: Vec<Affine<F>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    pub input_proj: Option<Affine<F>>,
    pub w_a: Array2<F>,
    pub w_z: Array2<F>,
    pub u_z: Array2<F>,
    pub b_z: Array1<F>,
    pub w_r: Array2<F>,
    pub u_r: Array2<F>,
    pub b_r: Array1<F>,
    pub w_h: Array2<F>,
    pub u_h: Array2<F>,
    pub b_h: Array1<F>,
    /// Attention gate, squashed by a sigmoid.
    pub f1: Mlp<F>,
    /// Feature transform, squashed by tanh.
    pub f2: Mlp<F>,
    pub classifier: Affine<F>,
}

fn glorot<F: Real>(inp: usize, out: usize, rng: &mut ChaCha8Rng) -> Array2<F> {
    let limit = (6.0 / (inp + out) as f64).sqrt();
    Array2::from_shape_simple_fn((inp, out), || F::of_f64(rng.gen_range(-limit..=limit)))
}

impl<F: Real> ModelParams<F> {
    /// Glorot-uniform weights and zero biases, seeded by `hyper.seed`.
    pub fn init(hyper: &HyperParams, num_classes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed);
        let h = hyper.hidden;
        let input_proj = hyper
            .use_projection
            .then(|| Affine::glorot(hyper.input_dim, h, &mut rng));
        let mut square = || glorot(h, h, &mut rng);
        let (w_a, w_z, u_z, w_r, u_r, w_h, u_h) = (
            square(),
            square(),
            square(),
            square(),
            square(),
            square(),
            square(),
        );
        let mlp = |rng: &mut ChaCha8Rng| Mlp {
            layers: (0..hyper.mlp_depth)
                .map(|_| Affine::glorot(h, h, rng))
                .collect(),
        };
        let f1 = mlp(&mut rng);
        let f2 = mlp(&mut rng);
        let classifier = Affine::glorot(h, num_classes, &mut rng);
        ModelParams {
            input_proj,
            w_a,
            w_z,
            u_z,
            b_z: Array1::zeros(h),
            w_r,
            u_r,
            b_r: Array1::zeros(h),
            w_h,
            u_h,
            b_h: Array1::zeros(h),
            f1,
            f2,
            classifier,
        }
    }

    /// Same shapes, every element zero.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        for (_, mut t) in out.tensors_mut() {
            t.fill(F::zero());
        }
        out
    }

    pub fn hidden(&self) -> usize {
        self.w_a.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.classifier.bias.len()
    }

    pub fn input_dim(&self) -> usize {
        self.input_proj
            .as_ref()
            .map_or(self.hidden(), |p| p.weight.nrows())
    }

    /// Every tensor with a stable name, in a fixed order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, F>)> {
        let mut out: Vec<(String, ArrayViewD<'_, F>)> = Vec::new();
        if let Some(p) = &self.input_proj {
            out.push(("input_proj.weight".into(), p.weight.view().into_dyn()));
            out.push(("input_proj.bias".into(), p.bias.view().into_dyn()));
        }
        out.push(("w_a".into(), self.w_a.view().into_dyn()));
        out.push(("w_z".into(), self.w_z.view().into_dyn()));
        out.push(("u_z".into(), self.u_z.view().into_dyn()));
        out.push(("b_z".into(), self.b_z.view().into_dyn()));
        out.push(("w_r".into(), self.w_r.view().into_dyn()));
        out.push(("u_r".into(), self.u_r.view().into_dyn()));
        out.push(("b_r".into(), self.b_r.view().into_dyn()));
        out.push(("w_h".into(), self.w_h.view().into_dyn()));
        out.push(("u_h".into(), self.u_h.view().into_dyn()));
        out.push(("b_h".into(), self.b_h.view().into_dyn()));
        for (name, mlp) in [("f1", &self.f1), ("f2", &self.f2)] {
            for (i, l) in mlp.layers.iter().enumerate() {
                out.push((format!("{name}.{i}.weight"), l.weight.view().into_dyn()));
                out.push((format!("{name}.{i}.bias"), l.bias.view().into_dyn()));
            }
        }
        out.push((
            "classifier.weight".into(),
            self.classifier.weight.view().into_dyn(),
        ));
        out.push((
            "classifier.bias".into(),
            self.classifier.bias.view().into_dyn(),
        ));
        out
    }

    /// Mutable counterpart of [`ModelParams::tensors`], same order.
    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, F>)> {
        let mut out: Vec<(String, ArrayViewMutD<'_, F>)> = Vec::new();
        if let Some(p) = &mut self.input_proj {
            out.push(("input_proj.weight".into(), p.weight.view_mut().into_dyn()));
            out.push(("input_proj.bias".into(), p.bias.view_mut().into_dyn()));
        }
        out.push(("w_a".into(), self.w_a.view_mut().into_dyn()));
        out.push(("w_z".into(), self.w_z.view_mut().into_dyn()));
        out.push(("u_z".into(), self.u_z.view_mut().into_dyn()));
        out.push(("b_z".into(), self.b_z.view_mut().into_dyn()));
        out.push(("w_r".into(), self.w_r.view_mut().into_dyn()));
        out.push(("u_r".into(), self.u_r.view_mut().into_dyn()));
        out.push(("b_r".into(), self.b_r.view_mut().into_dyn()));
        out.push(("w_h".into(), self.w_h.view_mut().into_dyn()));
        out.push(("u_h".into(), self.u_h.view_mut().into_dyn()));
        out.push(("b_h".into(), self.b_h.view_mut().into_dyn()));
        for (name, mlp) in [("f1", &mut self.f1), ("f2", &mut self.f2)] {
            for (i, l) in mlp.layers.iter_mut().enumerate() {
                out.push((format!("{name}.{i}.weight"), l.weight.view_mut().into_dyn()));
                out.push((format!("{name}.{i}.bias"), l.bias.view_mut().into_dyn()));
            }
        }
        out.push((
            "classifier.weight".into(),
            self.classifier.weight.view_mut().into_dyn(),
        ));
        out.push((
            "classifier.bias".into(),
            self.classifier.bias.view_mut().into_dyn(),
        ));
        out
    }

    pub fn num_elements(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors()
            .iter()
            .all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// Element-type conversion (f32 ⇄ f64).
    pub fn cast<G: Real>(&self) -> ModelParams<G> {
        let m2 = |a: &Array2<F>| a.mapv(|v| G::of_f64(v.as_f64()));
        let m1 = |a: &Array1<F>| a.mapv(|v| G::of_f64(v.as_f64()));
        let aff = |a: &Affine<F>| Affine {
            weight: m2(&a.weight),
            bias: m1(&a.bias),
        };
        let mlp = |m: &Mlp<F>| Mlp {
            layers: m.layers.iter().map(aff).collect(),
        };
        ModelParams {
            input_proj: self.input_proj.as_ref().map(aff),
            w_a: m2(&self.w_a),
            w_z: m2(&self.w_z),
            u_z: m2(&self.u_z),
            b_z: m1(&self.b_z),
            w_r: m2(&self.w_r),
            u_r: m2(&self.u_r),
            b_r: m1(&self.b_r),
            w_h: m2(&self.w_h),
            u_h: m2(&self.u_h),
            b_h: m1(&self.b_h),
            f1: mlp(&self.f1),
            f2: mlp(&self.f2),
            classifier: aff(&self.classifier),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_and_determinism() {
        let hyper = HyperParams {
            input_dim: 7,
            hidden: 5,
            mlp_depth: 2,
            ..Default::default()
        };
        let p: ModelParams<f64> = ModelParams::init(&hyper, 3);
        assert_eq!(p.input_dim(), 7);
        assert_eq!(p.hidden(), 5);
        assert_eq!(p.num_classes(), 3);
        assert_eq!(p.f1.layers.len(), 2);
        assert_eq!(p, ModelParams::init(&hyper, 3));
        let names: Vec<_> = p.tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names.first().unwrap(), "input_proj.weight");
        assert!(names.contains(&"f2.1.bias".to_string()));
        assert_eq!(names.len(), 2 + 10 + 8 + 2);
        let mut q = p.clone();
        assert_eq!(
            q.tensors_mut()
                .into_iter()
                .map(|(n, _)| n)
                .collect::<Vec<_>>(),
            names
        );
    }

    #[test]
    fn glorot_bounds_and_zero_bias() {
        let hyper = HyperParams {
            input_dim: 10,
            hidden: 6,
            ..Default::default()
        };
        let p: ModelParams<f32> = ModelParams::init(&hyper, 2);
        let limit = (6.0f32 / 16.0).sqrt();
        assert!(p
            .input_proj
            .as_ref()
            .unwrap()
            .weight
            .iter()
            .all(|v| v.abs() <= limit));
        assert!(p.b_z.iter().all(|v| *v == 0.0));
        assert!(p.is_finite());
        assert_eq!(
            p.zeros_like()
                .tensors()
                .iter()
                .map(|(_, t)| t.sum())
                .sum::<f32>(),
            0.0
        );
    }

    #[test]
    fn no_projection() {
        let hyper = HyperParams {
            input_dim: 4,
            hidden: 4,
            use_projection: false,
            ..Default::default()
        };
        let p: ModelParams<f64> = ModelParams::init(&hyper, 2);
        assert!(p.input_proj.is_none());
        assert_eq!(p.input_dim(), 4);
        let c: ModelParams<f32> = p.cast();
        assert_eq!(c.cast::<f64>().num_elements(), p.num_elements());
    }
}
