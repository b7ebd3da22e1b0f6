use nalgebra::DVector;

/// Desired actuated trajectory and its first two derivatives at `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefPoint {
    pub q: DVector<f64>,
    pub qd: DVector<f64>,
    pub qdd: DVector<f64>,
}

pub trait ReferenceSignal: Send + Sync {
    fn at(&self, t: f64) -> RefPoint;
}

/// `offset + amplitude sin(frequency t)` on a single actuated coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sinusoid {
    pub amplitude: f64,
    pub frequency: f64,
    pub offset: f64,
}

impl ReferenceSignal for Sinusoid {
    fn at(&self, t: f64) -> RefPoint {
        let (a, w) = (self.amplitude, self.frequency);
        let (s, c) = (w * t).sin_cos();
        RefPoint {
            q: DVector::from_element(1, self.offset + a * s),
            qd: DVector::from_element(1, a * w * c),
            qdd: DVector::from_element(1, -a * w * w * s),
        }
    }
}

/// Holds the actuated coordinates at a fixed position.
#[derive(Debug, Clone, PartialEq)]
pub struct Hold(pub DVector<f64>);

impl ReferenceSignal for Hold {
    fn at(&self, _t: f64) -> RefPoint {
        let z = DVector::zeros(self.0.len());
        RefPoint { q: self.0.clone(), qd: z.clone(), qdd: z }
    }
}
