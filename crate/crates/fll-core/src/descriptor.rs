//! Function descriptor files: a small JSON vocabulary for building evaluable
//! scalar fields (`phi`, `affine`, `compose`, `mcshane`, `pwa`), plus CSV
//! export of sampled traces.

use crate::boxdim::format_g17;
use crate::field::ScalarField;
use crate::holder::{
    compose, AffineFunction, AuxiliaryFunction, HolderError, McShaneExtension, PhiFunction,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error(transparent)]
    Holder(#[from] HolderError),
    #[error("descriptor parse error: {0}")]
    Parse(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FunctionDescriptor {
    Phi {
        n: u32,
        m: u32,
        #[serde(default)]
        depth: Option<u32>,
    },
    Affine {
        gradient: Vec<f64>,
        offset: f64,
    },
    Compose {
        n: u32,
        m: u32,
        gradient: Vec<f64>,
        offset: f64,
        #[serde(default)]
        tolerance: Option<f64>,
    },
    Mcshane {
        samples: Vec<(Vec<f64>, f64)>,
        c: f64,
        alpha: f64,
    },
    Pwa {
        base: Box<FunctionDescriptor>,
        origin: Vec<f64>,
        extent: f64,
        mesh: f64,
        c_target: f64,
        alpha: f64,
    },
}

/// A built field together with sampling defaults for certification.
pub struct LoadedFunction {
    pub field: Box<dyn ScalarField + Send>,
    pub dim: usize,
    /// Natural sampling cube (origin, extent).
    pub domain: (Vec<f64>, f64),
    /// Hölder exponent suggested by the construction, when one exists.
    pub default_alpha: Option<f64>,
}

impl FunctionDescriptor {
    pub fn from_json(text: &str) -> Result<Self, DescriptorError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn build(&self) -> Result<LoadedFunction, DescriptorError> {
        match self {
            FunctionDescriptor::Phi { n, m, depth } => {
                let aux = AuxiliaryFunction::new(*n, *m)?;
                let phi = match depth {
                    Some(d) => PhiFunction::with_depth(aux, *d),
                    None => PhiFunction::new(aux),
                };
                Ok(LoadedFunction {
                    field: Box::new(phi),
                    dim: 1,
                    domain: (vec![0.0], 1.0),
                    default_alpha: Some(aux.alpha()),
                })
            }
            FunctionDescriptor::Affine { gradient, offset } => {
                let f = AffineFunction::new(gradient.clone(), *offset);
                let dim = gradient.len();
                Ok(LoadedFunction {
                    field: Box::new(f),
                    dim,
                    domain: (vec![0.0; dim], 1.0),
                    default_alpha: Some(1.0),
                })
            }
            FunctionDescriptor::Compose {
                n,
                m,
                gradient,
                offset,
                tolerance,
            } => {
                let aux = AuxiliaryFunction::new(*n, *m)?;
                let h = AffineFunction::new(gradient.clone(), *offset);
                let dim = gradient.len();
                let g = compose(aux, h, tolerance.unwrap_or(1e-12));
                Ok(LoadedFunction {
                    field: Box::new(g),
                    dim,
                    domain: (vec![0.0; dim], 1.0),
                    default_alpha: Some(aux.alpha()),
                })
            }
            FunctionDescriptor::Mcshane { samples, c, alpha } => {
                let ext = McShaneExtension::new(samples, *c, *alpha)?;
                let dim = samples[0].0.len();
                // cube enclosing the samples with unit margin
                let mut lo = vec![f64::INFINITY; dim];
                let mut hi = vec![f64::NEG_INFINITY; dim];
                for (p, _) in samples {
                    for j in 0..dim {
                        lo[j] = lo[j].min(p[j]);
                        hi[j] = hi[j].max(p[j]);
                    }
                }
                let extent = hi
                    .iter()
                    .zip(&lo)
                    .map(|(h, l)| h - l)
                    .fold(0.0f64, f64::max)
                    + 2.0;
                let origin = lo.iter().map(|l| l - 1.0).collect();
                Ok(LoadedFunction {
                    field: Box::new(ext),
                    dim,
                    domain: (origin, extent),
                    default_alpha: Some(*alpha),
                })
            }
            FunctionDescriptor::Pwa {
                base,
                origin,
                extent,
                mesh,
                c_target,
                alpha,
            } => {
                let inner = base.build()?;
                let pwa = crate::holder::pwa_approximate(
                    inner.field.as_ref(),
                    origin,
                    *extent,
                    *mesh,
                    *c_target,
                    *alpha,
                )?;
                Ok(LoadedFunction {
                    field: Box::new(pwa),
                    dim: origin.len(),
                    domain: (origin.clone(), *extent),
                    default_alpha: Some(*alpha),
                })
            }
        }
    }
}

/// Sample trace CSV: columns x_0,…,x_{p−1},value.
pub fn trace_csv<F: ScalarField + ?Sized>(f: &F, points: &[Vec<f64>]) -> String {
    let dim = f.dim();
    let mut header: Vec<String> = (0..dim).map(|j| format!("x_{j}")).collect();
    header.push("value".into());
    let mut out = header.join(",");
    out.push('\n');
    for x in points {
        let mut row: Vec<String> = x.iter().map(|v| format_g17(*v)).collect();
        row.push(format_g17(f.value(x)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
