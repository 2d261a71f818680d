//! Defining functions `ρ` with `Ω = {ρ < 0}` and condensers built from them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{Algebra, Coords, GroupPoint};
use crate::error::{Error, Result};

pub trait DefiningFunction: Send + Sync {
    fn eval(&self, p: &[f64]) -> f64;

    /// Coordinate gradient; central differences unless overridden.
    fn gradient(&self, p: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        let mut q = p.to_vec();
        (0..p.len())
            .map(|i| {
                q[i] = p[i] + h;
                let up = self.eval(&q);
                q[i] = p[i] - h;
                let down = self.eval(&q);
                q[i] = p[i];
                (up - down) / (2.0 * h)
            })
            .collect()
    }

    fn contains(&self, p: &[f64]) -> bool {
        self.eval(p) < 0.0
    }
}

/// Adapter for closures.
pub struct FnRegion<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Send + Sync> DefiningFunction for FnRegion<F> {
    fn eval(&self, p: &[f64]) -> f64 {
        (self.0)(p)
    }
}

/// Serializable region presets.
///
/// Gauge-based shapes are level sets of functions homogeneous of degree one
/// (strictly starshaped about the identity) except `dented-gauge-ball`,
/// which removes a gauge ball straddling the boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RegionSpec {
    /// `|c⁻¹ ∘ p| < radius`.
    GaugeBall {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Coordinate box `lo < u < hi`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// `|D p| < radius` with `D` a diagonal coordinate scaling.
    AnisotropicGaugeBall { radius: f64, scales: Vec<f64> },
    /// `|p| (1 + amplitude · u_c / |p|^{layer(c)}) < radius`.
    ModulatedGaugeBall {
        radius: f64,
        amplitude: f64,
        coordinate: usize,
    },
    /// Gauge ball with the gauge ball `|c⁻¹ ∘ p| < dent_radius` removed.
    DentedGaugeBall {
        radius: f64,
        dent_center: Vec<f64>,
        dent_radius: f64,
    },
}

impl RegionSpec {
    pub fn gauge_ball(radius: f64) -> Self {
        RegionSpec::GaugeBall {
            radius,
            center: None,
        }
    }

    pub fn build(&self, alg: Arc<Algebra>) -> Result<Region> {
        let n = alg.dim();
        let check_len = |v: &[f64], what: &str| {
            if v.len() != n {
                Err(Error::Config(format!(
                    "{what} has {} coordinates, algebra has {n}",
                    v.len()
                )))
            } else {
                Ok(())
            }
        };
        let positive = |x: f64, what: &str| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {x}")))
            }
        };
        match self {
            RegionSpec::GaugeBall { radius, center } => {
                positive(*radius, "radius")?;
                if let Some(c) = center {
                    check_len(c, "center")?;
                }
            }
            RegionSpec::Box { lo, hi } => {
                check_len(lo, "lo")?;
                check_len(hi, "hi")?;
                if lo.iter().zip(hi).any(|(a, b)| a >= b) {
                    return Err(Error::Config("box needs lo < hi on every axis".into()));
                }
            }
            RegionSpec::AnisotropicGaugeBall { radius, scales } => {
                positive(*radius, "radius")?;
                check_len(scales, "scales")?;
                for s in scales {
                    positive(*s, "scale")?;
                }
            }
            RegionSpec::ModulatedGaugeBall {
                radius,
                amplitude,
                coordinate,
            } => {
                positive(*radius, "radius")?;
                if *coordinate >= n {
                    return Err(Error::Config(format!(
                        "coordinate {coordinate} out of range"
                    )));
                }
                if !amplitude.is_finite() {
                    return Err(Error::Config("amplitude must be finite".into()));
                }
            }
            RegionSpec::DentedGaugeBall {
                radius,
                dent_center,
                dent_radius,
            } => {
                positive(*radius, "radius")?;
                positive(*dent_radius, "dent_radius")?;
                check_len(dent_center, "dent_center")?;
            }
        }
        Ok(Region {
            alg,
            spec: self.clone(),
        })
    }

    /// Per-axis half-widths of a coordinate box containing the region.
    pub fn half_widths(&self, alg: &Algebra) -> Vec<f64> {
        let ball = |radius: f64| -> Vec<f64> {
            let g = alg.gauge();
            (0..alg.dim())
                .map(|s| {
                    let layer = alg.layer_of(s);
                    let w = g.weights()[layer - 1];
                    radius.powi(layer as i32) * w.powf(-(layer as f64) / g.exponent() as f64)
                })
                .collect()
        };
        match self {
            RegionSpec::GaugeBall { radius, center } => {
                // A translated ball: bound its points through the group law.
                let base = ball(*radius);
                match center {
                    None => base,
                    Some(c) => corner_bound(alg, c, &base),
                }
            }
            RegionSpec::Box { lo, hi } => lo
                .iter()
                .zip(hi)
                .map(|(a, b)| a.abs().max(b.abs()))
                .collect(),
            RegionSpec::AnisotropicGaugeBall { radius, scales } => ball(*radius)
                .iter()
                .zip(scales)
                .map(|(b, s)| b / s)
                .collect(),
            RegionSpec::ModulatedGaugeBall {
                radius,
                amplitude,
                coordinate,
            } => {
                // 1 + a φ ≥ 1 − |a| sup|φ|, and sup|φ| ≤ w^{-layer/E}.
                let g = alg.gauge();
                let layer = alg.layer_of(*coordinate);
                let sup = g.weights()[layer - 1].powf(-(layer as f64) / g.exponent() as f64);
                let floor = (1.0 - amplitude.abs() * sup).max(0.05);
                ball(radius / floor)
            }
            RegionSpec::DentedGaugeBall { radius, .. } => ball(*radius),
        }
    }
}

fn corner_bound(alg: &Algebra, c: &[f64], half: &[f64]) -> Vec<f64> {
    let n = alg.dim();
    let mut out = vec![0.0f64; n];
    for mask in 0..(1usize << n) {
        let corner: Vec<f64> = (0..n)
            .map(|i| {
                if mask >> i & 1 == 1 {
                    half[i]
                } else {
                    -half[i]
                }
            })
            .collect();
        let q = alg.bch_raw(c, &corner);
        for i in 0..n {
            // Group law is polynomial; pad generously for the non-corner extremes.
            out[i] = out[i].max(q[i].abs() * 1.25);
        }
    }
    out
}

/// A built region: spec plus the algebra it lives in.
#[derive(Clone, Debug)]
pub struct Region {
    alg: Arc<Algebra>,
    spec: RegionSpec,
}

impl Region {
    pub fn spec(&self) -> &RegionSpec {
        &self.spec
    }

    pub fn algebra(&self) -> &Arc<Algebra> {
        &self.alg
    }

    fn translated_gauge(&self, center: &[f64], p: &[f64]) -> f64 {
        let neg: Coords = center.iter().map(|x| -x).collect();
        self.alg.gauge_of(&self.alg.bch_raw(&neg, p))
    }
}

impl DefiningFunction for Region {
    fn eval(&self, p: &[f64]) -> f64 {
        let alg = &self.alg;
        match &self.spec {
            RegionSpec::GaugeBall { radius, center } => match center {
                None => alg.gauge_of(p) - radius,
                Some(c) => self.translated_gauge(c, p) - radius,
            },
            RegionSpec::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(x, (a, b))| (a - x).max(x - b))
                .fold(f64::NEG_INFINITY, f64::max),
            RegionSpec::AnisotropicGaugeBall { radius, scales } => {
                let q: Coords = p.iter().zip(scales).map(|(x, s)| x * s).collect();
                alg.gauge_of(&q) - radius
            }
            RegionSpec::ModulatedGaugeBall {
                radius,
                amplitude,
                coordinate,
            } => {
                let g = alg.gauge_of(p);
                if g == 0.0 {
                    return -radius;
                }
                let layer = alg.layer_of(*coordinate) as i32;
                g * (1.0 + amplitude * p[*coordinate] / g.powi(layer)) - radius
            }
            RegionSpec::DentedGaugeBall {
                radius,
                dent_center,
                dent_radius,
            } => {
                let outer = alg.gauge_of(p) - radius;
                let dent = dent_radius - self.translated_gauge(dent_center, p);
                outer.max(dent)
            }
        }
    }
}

/// Serializable condenser description: outer set Ω₀, inner set Ω₁ and the
/// star center `p₀ ∈ Ω₁`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CondenserSpec {
    pub outer: RegionSpec,
    pub inner: RegionSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<f64>>,
}

impl CondenserSpec {
    /// Concentric gauge balls `B(e, inner_radius) ⊂ B(e, outer_radius)`.
    pub fn gauge_balls(inner_radius: f64, outer_radius: f64) -> Self {
        CondenserSpec {
            outer: RegionSpec::gauge_ball(outer_radius),
            inner: RegionSpec::gauge_ball(inner_radius),
            center: None,
        }
    }

    pub fn build(&self, alg: Arc<Algebra>) -> Result<Condenser> {
        let n = alg.dim();
        let center = match &self.center {
            None => GroupPoint::identity(n),
            Some(c) if c.len() == n => GroupPoint::new(c),
            Some(c) => {
                return Err(Error::Config(format!(
                    "center has {} coordinates, algebra has {n}",
                    c.len()
                )))
            }
        };
        let outer = self.outer.build(alg.clone())?;
        let inner = self.inner.build(alg.clone())?;
        if !inner.contains(&center) {
            return Err(Error::Precondition(
                "star center p0 must lie in the inner set".into(),
            ));
        }
        if !outer.contains(&center) {
            return Err(Error::Precondition(
                "star center p0 must lie in the outer set".into(),
            ));
        }
        Ok(Condenser {
            alg,
            spec: self.clone(),
            outer,
            inner,
            center,
        })
    }
}

#[derive(Clone, Debug)]
pub struct Condenser {
    pub alg: Arc<Algebra>,
    pub spec: CondenserSpec,
    pub outer: Region,
    pub inner: Region,
    pub center: GroupPoint,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;

    fn heis() -> Arc<Algebra> {
        Arc::new(Algebra::new(AlgebraSpec::heisenberg(1)).unwrap())
    }

    #[test]
    fn gauge_ball_half_widths() {
        let g = heis();
        let w = RegionSpec::gauge_ball(1.0).half_widths(&g);
        assert!((w[0] - 1.0).abs() < 1e-15);
        assert!((w[2] - 0.25).abs() < 1e-15);
        let r = RegionSpec::gauge_ball(1.0).build(g.clone()).unwrap();
        assert!(r.eval(&[0.0, 0.0, 0.2499]) < 0.0);
        assert!(r.eval(&[0.0, 0.0, 0.2501]) > 0.0);
    }

    #[test]
    fn condenser_needs_center_inside() {
        let g = heis();
        let mut spec = CondenserSpec::gauge_balls(0.4, 1.0);
        spec.center = Some(vec![0.6, 0.0, 0.0]);
        assert!(matches!(spec.build(g.clone()), Err(Error::Precondition(_))));
        assert!(CondenserSpec::gauge_balls(0.4, 1.0).build(g).is_ok());
    }

    #[test]
    fn dent_removes_points() {
        let g = heis();
        let r = RegionSpec::DentedGaugeBall {
            radius: 1.0,
            dent_center: vec![0.85, 0.0, 0.0],
            dent_radius: 0.25,
        }
        .build(g)
        .unwrap();
        assert!(!r.contains(&[0.85, 0.0, 0.0]));
        assert!(r.contains(&[0.5, 0.0, 0.0]));
        assert!(r.contains(&[-0.85, 0.0, 0.0]));
    }

    #[test]
    fn invalid_specs_rejected() {
        let g = heis();
        assert!(RegionSpec::gauge_ball(-1.0).build(g.clone()).is_err());
        assert!(RegionSpec::Box {
            lo: vec![0.0; 3],
            hi: vec![0.0; 3]
        }
        .build(g.clone())
        .is_err());
        assert!(RegionSpec::ModulatedGaugeBall {
            radius: 1.0,
            amplitude: 0.1,
            coordinate: 7
        }
        .build(g)
        .is_err());
    }

    #[test]
    fn region_json_tags() {
        let spec: RegionSpec =
            serde_json::from_str(r#"{"shape": "gauge-ball", "radius": 0.4}"#).unwrap();
        assert_eq!(spec, RegionSpec::gauge_ball(0.4));
    }
}
