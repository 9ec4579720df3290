use std::ops::AddAssign;

/// Arithmetic performed by an oracle run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounter {
    pub multiplies: u64,
    pub adds: u64,
    pub transcendentals: u64,
}

impl OpCounter {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.multiplies += 1;
        a * b
    }

    #[inline]
    pub fn add(&mut self, a: f64, b: f64) -> f64 {
        self.adds += 1;
        a + b
    }

    /// `acc + a·b`, charged as one multiply and one add.
    #[inline]
    pub fn mac(&mut self, acc: f64, a: f64, b: f64) -> f64 {
        self.multiplies += 1;
        self.adds += 1;
        acc + a * b
    }

    #[inline]
    pub fn exp(&mut self, x: f64) -> f64 {
        self.transcendentals += 1;
        x.exp()
    }

    /// Ops under the analytic convention: a transcendental costs `w`.
    pub fn weighted(&self, w: u64) -> u64 {
        self.multiplies + self.adds + w * self.transcendentals
    }
}

impl AddAssign for OpCounter {
    fn add_assign(&mut self, rhs: Self) {
        self.multiplies += rhs.multiplies;
        self.adds += rhs.adds;
        self.transcendentals += rhs.transcendentals;
    }
}
