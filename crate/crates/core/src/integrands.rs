//! Built-in test integrands on `[0,1)^D` with known integrals, selectable by
//! name.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub trait Integrand: Send + Sync {
    fn name(&self) -> &'static str;

    fn description(&self) -> &'static str;

    fn eval(&self, x: &[f64]) -> f64;

    /// `int_[0,1)^D f`, when known in closed form.
    fn exact(&self, dim: usize) -> Option<f64>;
}

/// `f = 1`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Constant;

impl Integrand for Constant {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn description(&self) -> &'static str {
        "f(x) = 1"
    }

    fn eval(&self, _x: &[f64]) -> f64 {
        1.0
    }

    fn exact(&self, _dim: usize) -> Option<f64> {
        Some(1.0)
    }
}

/// `f = prod x_t`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Product;

impl Integrand for Product {
    fn name(&self) -> &'static str {
        "product"
    }

    fn description(&self) -> &'static str {
        "f(x) = prod_t x_t"
    }

    fn eval(&self, x: &[f64]) -> f64 {
        x.iter().product()
    }

    fn exact(&self, dim: usize) -> Option<f64> {
        Some(0.5f64.powi(dim as i32))
    }
}

/// Genz product peak `prod 1 / (c^-2 + (x_t - w)^2)` with fixed `c`, `w`.
#[derive(Debug, Clone, Copy)]
pub struct ProductPeak {
    pub c: f64,
    pub w: f64,
}

impl Default for ProductPeak {
    fn default() -> Self {
        ProductPeak { c: 2.0, w: 0.5 }
    }
}

impl Integrand for ProductPeak {
    fn name(&self) -> &'static str {
        "product-peak"
    }

    fn description(&self) -> &'static str {
        "f(x) = prod_t 1 / (c^-2 + (x_t - w)^2), c = 2, w = 1/2"
    }

    fn eval(&self, x: &[f64]) -> f64 {
        let inv = self.c.powi(-2);
        x.iter().map(|&v| 1.0 / (inv + (v - self.w).powi(2))).product()
    }

    fn exact(&self, dim: usize) -> Option<f64> {
        let one = self.c * ((self.c * (1.0 - self.w)).atan() + (self.c * self.w).atan());
        Some(one.powi(dim as i32))
    }
}

/// Genz oscillatory `cos(2 pi w + a sum x_t)` with fixed `a`, `w`.
#[derive(Debug, Clone, Copy)]
pub struct Oscillatory {
    pub a: f64,
    pub w: f64,
}

impl Default for Oscillatory {
    fn default() -> Self {
        Oscillatory { a: 1.0, w: 0.25 }
    }
}

impl Integrand for Oscillatory {
    fn name(&self) -> &'static str {
        "oscillatory"
    }

    fn description(&self) -> &'static str {
        "f(x) = cos(2 pi w + a sum_t x_t), a = 1, w = 1/4"
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (2.0 * PI * self.w + self.a * x.iter().sum::<f64>()).cos()
    }

    fn exact(&self, dim: usize) -> Option<f64> {
        // Re( e^{i 2 pi w} * ((e^{i a} - 1) / (i a))^D ).
        let (s, c) = self.a.sin_cos();
        let (re1, im1) = (s / self.a, (1.0 - c) / self.a);
        let mut re = (2.0 * PI * self.w).cos();
        let mut im = (2.0 * PI * self.w).sin();
        for _ in 0..dim {
            let r = re * re1 - im * im1;
            im = re * im1 + im * re1;
            re = r;
        }
        Some(re)
    }
}

/// Integrands registered by name.
#[derive(Clone)]
pub struct IntegrandRegistry {
    entries: BTreeMap<&'static str, Arc<dyn Integrand>>,
}

impl IntegrandRegistry {
    pub fn empty() -> Self {
        IntegrandRegistry { entries: BTreeMap::new() }
    }

    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        r.register(Arc::new(Constant));
        r.register(Arc::new(Product));
        r.register(Arc::new(ProductPeak::default()));
        r.register(Arc::new(Oscillatory::default()));
        r
    }

    /// Replaces any integrand registered under the same name.
    pub fn register(&mut self, f: Arc<dyn Integrand>) {
        self.entries.insert(f.name(), f);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn Integrand>> {
        self.entries.get(name).cloned().ok_or_else(|| Error::UnknownStrategy {
            kind: "integrand",
            name: name.to_string(),
            available: self.names().join(", "),
        })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.keys().copied().collect()
    }
}

impl Default for IntegrandRegistry {
    fn default() -> Self {
        Self::with_defaults()
    }
}

impl fmt::Debug for IntegrandRegistry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.names()).finish()
    }
}
