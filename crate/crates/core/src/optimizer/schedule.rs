use serde::{Deserialize, Serialize};

use super::pso::SwarmConfig;

/// Inertia weight as a function of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InertiaSchedule {
    /// `(w_ini - w_end - 0.2) * exp(1 / (1 + 7 t / t_max))`
    Nonlinear { w_ini: f64, w_end: f64 },
    Constant(f64),
}

impl InertiaSchedule {
    pub fn at(&self, t: usize, t_max: usize) -> f64 {
        match *self {
            InertiaSchedule::Nonlinear { w_ini, w_end } => {
                let frac = t as f64 / t_max as f64;
                (w_ini - w_end - 0.2) * (1.0 / (1.0 + 7.0 * frac)).exp()
            }
            InertiaSchedule::Constant(w) => w,
        }
    }
}

/// Cognitive and social learning factors `(c1, c2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LearningSchedule {
    /// `c1 = c_end + (c_ini - c_end) ((t_max - t) / t_max)^1.2`, and `c2` the
    /// mirror image `c_end + (c_ini - c_end) (t / t_max)^1.2`.
    Normalized { c_ini: f64, c_end: f64 },
    /// `c_end + (c_ini - c_end) ((t_max - t) / t)^1.2` for `c1` and the
    /// reciprocal ratio for `c2`, both clamped to `[c_end, c_ini]`.
    Literal { c_ini: f64, c_end: f64 },
    Constant(f64),
}

const EXPONENT: f64 = 1.2;

impl LearningSchedule {
    pub fn at(&self, t: usize, t_max: usize) -> (f64, f64) {
        let (t, t_max) = (t as f64, t_max as f64);
        match *self {
            LearningSchedule::Normalized { c_ini, c_end } => {
                let span = c_ini - c_end;
                let c1 = c_end + span * ((t_max - t) / t_max).powf(EXPONENT);
                let c2 = c_end + span * (t / t_max).powf(EXPONENT);
                (c1, c2)
            }
            LearningSchedule::Literal { c_ini, c_end } => {
                let span = c_ini - c_end;
                let raw1 = c_end + span * ((t_max - t) / t).powf(EXPONENT);
                let raw2 = c_end + span * (t / (t_max - t)).powf(EXPONENT);
                let clamp = |c: f64| if c.is_nan() { c_ini } else { c.clamp(c_end, c_ini) };
                (clamp(raw1), clamp(raw2))
            }
            LearningSchedule::Constant(c) => (c, c),
        }
    }
}

/// Inertia weight of `cfg`'s variant at iteration `t`.
pub fn inertia_weight(t: usize, cfg: &SwarmConfig) -> f64 {
    cfg.inertia_schedule().at(t, cfg.t_max)
}

/// Learning factors of `cfg`'s variant at iteration `t`.
pub fn learning_factors(t: usize, cfg: &SwarmConfig) -> (f64, f64) {
    cfg.learning_schedule().at(t, cfg.t_max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::Variant;

    fn dpso() -> SwarmConfig {
        SwarmConfig { variant: Variant::Dpso, ..Default::default() }
    }

    #[test]
    fn inertia_endpoints() {
        let cfg = dpso();
        assert!((inertia_weight(0, &cfg) - 0.3 * std::f64::consts::E).abs() < 1e-12);
        assert!((inertia_weight(0, &cfg) - 0.8155).abs() < 1e-4);
        assert!((inertia_weight(cfg.t_max, &cfg) - 0.3 * (1.0f64 / 8.0).exp()).abs() < 1e-12);
        assert!((inertia_weight(cfg.t_max, &cfg) - 0.3399).abs() < 1e-4);
    }

    #[test]
    fn inertia_strictly_decreasing() {
        let cfg = dpso();
        let w: Vec<f64> = (0..=cfg.t_max).map(|t| inertia_weight(t, &cfg)).collect();
        assert!(w.windows(2).all(|p| p[1] < p[0]));
    }

    #[test]
    fn learning_endpoints_and_crossing() {
        let cfg = dpso();
        let (c1, c2) = learning_factors(cfg.t_max, &cfg);
        assert_eq!(c1, cfg.c_end);
        assert_eq!(c2, cfg.c_ini);
        let (c1, c2) = learning_factors(0, &cfg);
        assert_eq!(c1, cfg.c_ini);
        assert_eq!(c2, cfg.c_end);
        let (c1, c2) = learning_factors(cfg.t_max / 2, &cfg);
        assert!((c1 - c2).abs() < 1e-15);
        for t in 1..cfg.t_max {
            let (a1, a2) = learning_factors(t, &cfg);
            let (b1, b2) = learning_factors(t + 1, &cfg);
            assert!(b1 < a1 && b2 > a2);
        }
    }

    #[test]
    fn literal_form_is_clamped() {
        let s = LearningSchedule::Literal { c_ini: 2.5, c_end: 0.5 };
        assert_eq!(s.at(1, 200).0, 2.5);
        assert_eq!(s.at(200, 200), (0.5, 2.5));
        assert_eq!(s.at(100, 200), (2.5, 2.5));
        let (c1, c2) = s.at(190, 200);
        assert!(c1 > 0.5 && c1 < 2.5 && c2 == 2.5);
        assert_eq!(s.at(0, 200), (2.5, 0.5));
    }

    #[test]
    fn static_variants() {
        let cfg = SwarmConfig { variant: Variant::Pso, ..Default::default() };
        assert_eq!(inertia_weight(17, &cfg), cfg.static_w);
        assert_eq!(learning_factors(17, &cfg), (cfg.static_c, cfg.static_c));
        let dw = SwarmConfig { variant: Variant::Dwpso, ..Default::default() };
        assert_eq!(learning_factors(3, &dw), (dw.static_c, dw.static_c));
        assert_ne!(inertia_weight(3, &dw), dw.static_w);
        let dc = SwarmConfig { variant: Variant::Dcpso, ..Default::default() };
        assert_eq!(inertia_weight(3, &dc), dc.static_w);
    }
}
