//! B-spline geometry: basis evaluation, curve sampling, control-polygon
//! subdivision, least-squares fitting, cross-section lofting and contour
//! classification with Hu moments and k-means.

pub mod basis;
pub mod contours;
pub mod curve;
pub mod error;
pub mod fitting;
pub mod io;
pub mod phantom;
pub mod subdivision;
pub mod surface;

pub use basis::{BasisConvention, BasisIndex, KnotVector};
pub use curve::{BSplineCurve, ControlPoint, CurveSet};
pub use error::{Error, Result};
pub use fitting::{ControlSolution, FitProblem};
pub use subdivision::{ControlPolygon, RefinementMask};
pub use surface::{QuadMesh, TensorSurface};
