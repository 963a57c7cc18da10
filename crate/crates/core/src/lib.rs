pub mod error;
pub mod linalg;
pub mod real;

pub use error::{Error, Result};
pub use real::{Real, C};
pub mod model;
pub mod spectral;
pub mod amplitudes;
pub mod twophoton;
pub mod quadrature;
pub mod scattering;
pub mod oracle;
pub mod acceptance;

/// `f64` instantiations of the generic core.
pub type Complex = C<f64>;
pub type Matrix = linalg::CMatrix<f64>;
pub type LambdaAtom = model::LambdaAtomParams<f64>;
pub type CavityModel = model::GenericCavityModel<f64>;
pub type Eigensystem = spectral::BiorthEigensystem<f64>;
pub type ModelSpectra = spectral::Spectra<f64>;
pub type SingleAmplitudes = amplitudes::SingleKernel<f64>;
pub type Kernel = twophoton::TwoPhotonKernel<f64>;
