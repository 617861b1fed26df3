use super::{missing_forward, Layer, Mode, Shape, Tensor4};
use crate::pooling::{pool_backward, pool_forward, PoolContext, PoolSpec};
use crate::{Execution, RealMatrix, Result};

/// Applies a [`PoolSpec`] independently to every (sample, channel) plane.
pub struct PoolLayer {
    name: String,
    spec: PoolSpec,
    exec: Execution,
    saved: Option<(Shape, Shape, Vec<PoolContext>)>,
}

impl PoolLayer {
    pub fn new(name: impl Into<String>, spec: PoolSpec) -> Self {
        Self {
            name: name.into(),
            spec,
            exec: Execution::default(),
            saved: None,
        }
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn spec(&self) -> &PoolSpec {
        &self.spec
    }
}

fn collect_planes(shape: Shape, planes: Vec<RealMatrix>) -> Tensor4 {
    let mut data = Vec::with_capacity(shape.len());
    for p in planes {
        data.extend_from_slice(p.as_slice());
    }
    Tensor4::from_parts(shape, data)
}

impl Layer for PoolLayer {
    fn name(&self) -> &str {
        &self.name
    }

    fn output_shape(&self, input: Shape) -> Result<Shape> {
        let (h, w) = self.spec.output_dims((input.h, input.w))?;
        Ok(Shape { h, w, ..input })
    }

    fn forward(&mut self, x: &Tensor4, _mode: Mode) -> Result<Tensor4> {
        let in_shape = x.shape();
        let out_shape = self.output_shape(in_shape)?;
        let spec = self.spec;
        let results = self.exec.map(in_shape.n * in_shape.c, |i| {
            let plane = x.plane(i / in_shape.c, i % in_shape.c).to_vec();
            let m = RealMatrix::new(in_shape.h, in_shape.w, plane)?;
            pool_forward(&spec, &m)
        });
        let (planes, ctxs): (Vec<_>, Vec<_>) = results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().unzip();
        self.saved = Some((in_shape, out_shape, ctxs));
        Ok(collect_planes(out_shape, planes))
    }

    fn backward(&mut self, g_out: &Tensor4) -> Result<Tensor4> {
        let (in_shape, out_shape, ctxs) = self.saved.as_ref().ok_or_else(|| missing_forward(&self.name))?;
        g_out.expect_shape(*out_shape, &self.name)?;
        let planes = self.exec.map(ctxs.len(), |i| {
            let g = g_out.plane(i / out_shape.c, i % out_shape.c).to_vec();
            pool_backward(&RealMatrix::new(out_shape.h, out_shape.w, g)?, &ctxs[i])
        });
        Ok(collect_planes(
            *in_shape,
            planes.into_iter().collect::<Result<Vec<_>>>()?,
        ))
    }
}
