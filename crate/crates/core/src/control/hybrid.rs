//! PD plus model inversion, with limiting and output saturation.

use serde::{Deserialize, Serialize};

use super::backstepping::{
    inversion_control, BacksteppingGains, ControllerMemory, ErrorRate, InversionLimits, Reference,
    VirtualLaws,
};
use super::pd::{pd_control, PdGains};
use crate::error::{Error, Result};
use crate::revnm::RevnmModel;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HybridConfig<T> {
    /// One entry per joint the model predicts.
    pub pd: Vec<PdGains<T>>,
    pub backstepping: Vec<BacksteppingGains<T>>,
    pub u_min: T,
    pub u_max: T,
    pub limits: InversionLimits<T>,
    /// Low-pass time constant of the rate estimates, in control periods.
    pub filter_periods: T,
    pub pd_weight: T,
    pub inversion_weight: T,
    pub inversion_enabled: bool,
    pub error_rate: ErrorRate,
}

impl<T: Scalar> HybridConfig<T> {
    pub fn new(pd: Vec<PdGains<T>>, backstepping: Vec<BacksteppingGains<T>>) -> Self {
        Self {
            pd,
            backstepping,
            u_min: T::lit(-200.0),
            u_max: T::lit(200.0),
            limits: InversionLimits::default(),
            filter_periods: T::lit(5.0),
            pd_weight: T::one(),
            inversion_weight: T::one(),
            inversion_enabled: true,
            error_rate: ErrorRate::Model,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.pd.len() != n {
            return Err(Error::dim("PD gains", n, self.pd.len()));
        }
        if self.backstepping.len() != n {
            return Err(Error::dim("backstepping gains", n, self.backstepping.len()));
        }
        for g in &self.pd {
            g.validate()?;
        }
        for g in &self.backstepping {
            g.validate()?;
        }
        if !(self.u_min < self.u_max && self.u_min.is_finite() && self.u_max.is_finite()) {
            return Err(Error::Config(format!(
                "saturation limits must satisfy u_min < u_max, got [{}, {}]",
                self.u_min, self.u_max
            )));
        }
        for b in [self.limits.feature_margin, self.limits.command, self.limits.output]
            .into_iter()
            .flatten()
        {
            if !(b >= T::zero() && b.is_finite()) {
                return Err(Error::Config(format!("inversion limits must be finite and >= 0, got {b}")));
            }
        }
        if !(self.filter_periods >= T::zero()) {
            return Err(Error::Config("filter_periods must be >= 0".into()));
        }
        if !(self.pd_weight.is_finite() && self.inversion_weight.is_finite()) {
            return Err(Error::Config("blend weights must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HybridOutput<T> {
    pub u_pd: Vec<T>,
    pub u_inv: Vec<T>,
    /// Weighted sum before saturation.
    pub u_pre: Vec<T>,
    pub u: Vec<T>,
    pub laws: Vec<VirtualLaws<T>>,
    pub warm: bool,
}

/// One tick of the hybrid law:
/// `u = sat(w_pd·PD(e, ė) + w_inv·u_inv, [u_min, u_max])` with
/// `e = x1ref − x1`, `ė = x2ref − x2`.
pub fn hybrid_control<T: Scalar>(
    m: &RevnmModel<T>,
    h: &[T],
    refs: &[Reference<T>],
    cfg: &HybridConfig<T>,
    mem: &ControllerMemory<T>,
    dt: T,
) -> Result<(HybridOutput<T>, ControllerMemory<T>)> {
    let n = m.outputs().len();
    cfg.validate(n)?;
    if refs.len() != n {
        return Err(Error::dim("references", n, refs.len()));
    }
    let (inv, next) = if cfg.inversion_enabled {
        let (o, next) = inversion_control(
            m,
            h,
            refs,
            &cfg.backstepping,
            cfg.error_rate,
            &cfg.limits,
            mem,
            dt,
            cfg.filter_periods * dt,
        )?;
        (Some(o), next)
    } else {
        (None, mem.clone())
    };
    let mut out = HybridOutput {
        u_pd: vec![T::zero(); n],
        u_inv: vec![T::zero(); n],
        u_pre: vec![T::zero(); n],
        u: vec![T::zero(); n],
        laws: inv.as_ref().map(|o| o.laws.clone()).unwrap_or_default(),
        warm: inv.as_ref().is_some_and(|o| o.warm),
    };
    for i in 0..n {
        let [x1, x2, _] = m.state_of(h, i);
        out.u_pd[i] = pd_control(refs[i].x1 - x1, refs[i].x2 - x2, &cfg.pd[i]);
        if let Some(o) = &inv {
            out.u_inv[i] = o.u[i];
        }
        let pre = if cfg.inversion_enabled {
            cfg.pd_weight * out.u_pd[i] + cfg.inversion_weight * out.u_inv[i]
        } else {
            out.u_pd[i]
        };
        out.u_pre[i] = pre;
        out.u[i] = pre.max(cfg.u_min).min(cfg.u_max);
    }
    Ok((out, next))
}

/// Stateful wrapper owning the memory of one controller instance.
#[derive(Debug, Clone)]
pub struct HybridController<T> {
    pub cfg: HybridConfig<T>,
    pub dt: T,
    mem: ControllerMemory<T>,
}

impl<T: Scalar> HybridController<T> {
    pub fn new(cfg: HybridConfig<T>, n: usize, dt: T) -> Result<Self> {
        cfg.validate(n)?;
        Ok(Self {
            cfg,
            dt,
            mem: ControllerMemory::cold(n),
        })
    }

    pub fn memory(&self) -> &ControllerMemory<T> {
        &self.mem
    }

    pub fn step(&mut self, m: &RevnmModel<T>, h: &[T], refs: &[Reference<T>]) -> Result<HybridOutput<T>> {
        let (out, next) = hybrid_control(m, h, refs, &self.cfg, &self.mem, self.dt)?;
        self.mem = next;
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::revnm::FeatureLayout;

    fn model() -> RevnmModel<f64> {
        RevnmModel::zero(FeatureLayout::new(1, 0), vec![0], 4).unwrap()
    }

    fn cfg() -> HybridConfig<f64> {
        HybridConfig::new(vec![PdGains::boom()], vec![BacksteppingGains::uniform(2.0)])
    }

    #[test]
    fn zero_terms_give_zero() {
        let mut c = HybridController::new(cfg(), 1, 0.02).unwrap();
        for _ in 0..5 {
            let o = c.step(&model(), &[0.0; 3], &[Reference::default()]).unwrap();
            assert_eq!(o.u, vec![0.0]);
        }
    }

    #[test]
    fn saturates_at_limits() {
        let mut c = cfg();
        c.inversion_enabled = false;
        c.pd[0] = PdGains::new(500.0, 0.0).unwrap();
        let r = [Reference {
            x1: 1.0,
            ..Default::default()
        }];
        let (o, _) = hybrid_control(&model(), &[0.0; 3], &r, &c, &ControllerMemory::cold(1), 0.02).unwrap();
        assert_eq!(o.u_pre, vec![500.0]);
        assert_eq!(o.u, vec![200.0]);
    }

    #[test]
    fn disabled_inversion_is_pure_pd() {
        let mut c = cfg();
        c.inversion_enabled = false;
        let r = [Reference {
            x1: 0.3,
            x2: 0.1,
            ..Default::default()
        }];
        let mut mem = ControllerMemory::cold(1);
        for _ in 0..5 {
            let (o, next) = hybrid_control(&model(), &[0.1, -0.2, 0.4], &r, &c, &mem, 0.02).unwrap();
            assert_eq!(o.u[0], pd_control(0.2, 0.3, &c.pd[0]));
            mem = next;
        }
    }

    #[test]
    fn invalid_limits_rejected() {
        let mut c = cfg();
        c.u_min = 1.0;
        c.u_max = -1.0;
        assert!(c.validate(1).is_err());
    }
}
