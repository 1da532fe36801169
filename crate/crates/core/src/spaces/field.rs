use crate::mesh::Point;
use std::fmt;
use std::sync::Arc;

/// Analytic vector field `Ω → R²`.
///
/// `degree` is set when the field is a polynomial of at most that degree, which
/// lets callers pick exact quadrature. `radial_kinks` lists radii `r` such
/// that the field is smooth on either side of the circle `|x| = r` but not
/// across it; oscillation integrals split there.
#[derive(Clone)]
pub struct VectorField {
    f: Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>,
    pub degree: Option<usize>,
    pub radial_kinks: Vec<f64>,
}

impl VectorField {
    pub fn new(f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        VectorField {
            f: Arc::new(f),
            degree: None,
            radial_kinks: Vec::new(),
        }
    }

    pub fn polynomial(degree: usize, f: impl Fn(Point) -> [f64; 2] + Send + Sync + 'static) -> Self {
        VectorField {
            f: Arc::new(f),
            degree: Some(degree),
            radial_kinks: Vec::new(),
        }
    }

    pub fn with_radial_kinks(mut self, radii: &[f64]) -> Self {
        self.radial_kinks = radii.to_vec();
        self
    }

    pub fn zero() -> Self {
        Self::polynomial(0, |_| [0.0, 0.0])
    }

    pub fn constant(v: [f64; 2]) -> Self {
        Self::polynomial(0, move |_| v)
    }

    #[inline]
    pub fn eval(&self, p: Point) -> [f64; 2] {
        (self.f)(p)
    }

    /// Pointwise difference `self - other`.
    pub fn minus(&self, other: &VectorField) -> VectorField {
        let a = self.clone();
        let b = other.clone();
        let degree = match (a.degree, b.degree) {
            (Some(x), Some(y)) => Some(x.max(y)),
            _ => None,
        };
        let mut radial_kinks = a.radial_kinks.clone();
        radial_kinks.extend(b.radial_kinks.iter().filter(|r| !a.radial_kinks.contains(r)));
        VectorField {
            f: Arc::new(move |p| {
                let u = a.eval(p);
                let v = b.eval(p);
                [u[0] - v[0], u[1] - v[1]]
            }),
            degree,
            radial_kinks,
        }
    }
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("degree", &self.degree)
            .field("radial_kinks", &self.radial_kinks)
            .finish()
    }
}

/// Analytic scalar field `Ω → R`.
#[derive(Clone)]
pub struct ScalarField {
    f: Arc<dyn Fn(Point) -> f64 + Send + Sync>,
    pub degree: Option<usize>,
}

impl ScalarField {
    pub fn new(f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            f: Arc::new(f),
            degree: None,
        }
    }

    pub fn polynomial(degree: usize, f: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        ScalarField {
            f: Arc::new(f),
            degree: Some(degree),
        }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        (self.f)(p)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("degree", &self.degree).finish()
    }
}
