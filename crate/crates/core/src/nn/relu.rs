use super::{missing_forward, Layer, Mode, Shape, Tensor4};
use crate::Result;

/// `max(0, x)`; the subgradient at 0 is 0.
pub struct Relu {
    name: String,
    mask: Option<(Shape, Vec<bool>)>,
}

impl Relu {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            mask: None,
        }
    }
}

impl Layer for Relu {
    fn name(&self) -> &str {
        &self.name
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        Ok(input)
    }

    fn forward(&mut self, x: &Tensor4, _mode: Mode) -> Result<Tensor4> {
        let mask: Vec<bool> = x.as_slice().iter().map(|v| *v > 0.0).collect();
        let out = x.as_slice().iter().map(|v| v.max(0.0)).collect();
        self.mask = Some((x.shape(), mask));
        Ok(Tensor4::from_parts(x.shape(), out))
    }

    fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4> {
        let (shape, mask) = self.mask.as_ref().ok_or_else(|| missing_forward(&self.name))?;
        g_out.expect_shape(*shape, &self.name)?;
        let out = g_out
            .as_slice()
            .iter()
            .zip(mask)
            .map(|(g, &m)| if m { *g } else { 0.0 })
            .collect();
        Ok(Tensor4::from_parts(*shape, out))
    }
}
