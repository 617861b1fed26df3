use super::Param;
use crate::{Error, Result};

/// Adam hyper-parameters plus a step-decay learning-rate schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// The learning rate is divided by this factor...
    pub decay_factor: f64,
    /// ...once every this many epochs.
    pub decay_every: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            decay_factor: 10.0,
            decay_every: 5,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.eps > 0.0
            && self.decay_factor > 0.0
            && self.decay_every > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid optimizer config {self:?}")))
        }
    }

    /// Learning rate for a 1-based epoch number.
    pub fn lr_for_epoch(&self, epoch: usize) -> f64 {
        let decays = epoch.saturating_sub(1) / self.decay_every;
        self.learning_rate / self.decay_factor.powi(decays as i32)
    }
}

/// One bias-corrected Adam update of `param` from its `grad`, at step `t >= 1`.
pub fn adam_step(param: &mut Param, cfg: &OptimizerConfig, lr: f64, t: u64) -> Result<()> {
    let n = param.value.len();
    if param.grad.len() != n || param.m.len() != n || param.v.len() != n {
        return Err(Error::invalid(format!(
            "{}: value/grad/moment lengths {}/{}/{}/{} differ",
            param.name,
            n,
            param.grad.len(),
            param.m.len(),
            param.v.len()
        )));
    }
    if t == 0 {
        return Err(Error::invalid("adam step counter starts at 1"));
    }
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let c1 = 1.0 - b1.powi(t as i32);
    let c2 = 1.0 - b2.powi(t as i32);
    for i in 0..n {
        let g = param.grad[i];
        param.m[i] = b1 * param.m[i] + (1.0 - b1) * g;
        param.v[i] = b2 * param.v[i] + (1.0 - b2) * g * g;
        let m_hat = param.m[i] / c1;
        let v_hat = param.v[i] / c2;
        param.value[i] -= lr * m_hat / (v_hat.sqrt() + cfg.eps);
    }
    Ok(())
}

/// Adam with a shared step counter across parameter groups.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: OptimizerConfig,
    t: u64,
}

impl Adam {
    pub fn new(cfg: OptimizerConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { cfg, t: 0 })
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn step<'a>(&mut self, params: impl IntoIterator<Item = &'a mut Param>, lr: f64) -> Result<()> {
        self.t += 1;
        for p in params {
            adam_step(p, &self.cfg, lr, self.t)?;
        }
        Ok(())
    }
}
