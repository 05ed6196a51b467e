//! Spring and damper force laws and their scaling.
//!
//! Sign conventions, fixed for the whole crate:
//!
//! * Damper input `v` is the relative velocity `ż_body − ż_wheel`; positive
//!   is extension (rebound). A damper law returns the resisting force in the
//!   same sense, so a linear damper is `F = c·v`.
//! * Spring input `x` is compression; the returned force is the push the
//!   spring exerts on the masses it separates. Under static load `W` the
//!   operating compression solves `F(x*) = W`.
//!
//! Curves may be stored normalized (peak |force| = 1) with the physical
//! magnitude folded in through [`Characteristic::with_magnitude`]; the
//! optimizer's design variable is the [`ScaledCharacteristic::scale`].

mod fit;

pub use fit::{fit_damper_curve, DamperFit};

use crate::error::{ensure_finite, Error, Result};
use crate::io::parse_table;

/// Linear stiffness (N/m) or damping rate (N·s/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearLaw {
    coefficient: f64,
}

impl LinearLaw {
    pub fn new(coefficient: f64) -> Result<Self> {
        if !(coefficient.is_finite() && coefficient > 0.0) {
            return Err(Error::Domain(format!(
                "linear coefficient must be positive and finite, got {coefficient}"
            )));
        }
        Ok(Self { coefficient })
    }

    pub fn coefficient(&self) -> f64 {
        self.coefficient
    }
}

/// Exponential damper law `F(v) = A·e^(−k·v) + B·e^(q·v)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DamperCurve {
    pub a: f64,
    pub k: f64,
    pub b: f64,
    pub q: f64,
}

impl DamperCurve {
    pub fn new(a: f64, k: f64, b: f64, q: f64) -> Result<Self> {
        for (name, value) in [("A", a), ("k", k), ("B", b), ("q", q)] {
            ensure_finite(name, value)?;
        }
        Ok(Self { a, k, b, q })
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        self.a * (-self.k * v).exp() + self.b * (self.q * v).exp()
    }

    pub fn params(&self) -> [f64; 4] {
        [self.a, self.k, self.b, self.q]
    }
}

/// Piecewise-linear spring law from a lookup table.
#[derive(Debug, Clone, PartialEq)]
pub struct SpringTable {
    deflection: Vec<f64>,
    force: Vec<f64>,
}

impl SpringTable {
    pub fn new(deflection: Vec<f64>, force: Vec<f64>) -> Result<Self> {
        if deflection.len() != force.len() {
            return Err(Error::Input(format!(
                "spring table columns differ in length ({} vs {})",
                deflection.len(),
                force.len()
            )));
        }
        if deflection.len() < 2 {
            return Err(Error::InsufficientData(
                "spring table needs at least 2 rows".into(),
            ));
        }
        for (&x, &f) in deflection.iter().zip(&force) {
            ensure_finite("table deflection", x)?;
            ensure_finite("table force", f)?;
        }
        if deflection.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input(
                "spring table deflections must be strictly increasing".into(),
            ));
        }
        if force.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Input(
                "spring table forces must be non-decreasing".into(),
            ));
        }
        Ok(Self { deflection, force })
    }

    /// Parses two numeric columns (deflection, force); `#` starts a comment.
    pub fn from_text(text: &str) -> Result<Self> {
        let (x, f) = two_columns(text)?;
        Self::new(x, f)
    }

    pub fn deflection(&self) -> &[f64] {
        &self.deflection
    }

    pub fn force(&self) -> &[f64] {
        &self.force
    }

    /// Interpolated force; outside the table the nearest end segment is
    /// extended linearly.
    pub fn eval(&self, x: f64) -> f64 {
        let xs = &self.deflection;
        let n = xs.len();
        // index of the segment [i, i+1] used for x
        let i = match xs.partition_point(|&xi| xi <= x) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let (x0, x1) = (xs[i], xs[i + 1]);
        let (f0, f1) = (self.force[i], self.force[i + 1]);
        if x == x0 {
            return f0;
        }
        if x == x1 {
            return f1;
        }
        f0 + (f1 - f0) * (x - x0) / (x1 - x0)
    }

    fn scaled_forces(&self, factor: f64) -> Self {
        Self {
            deflection: self.deflection.clone(),
            force: self.force.iter().map(|f| f * factor).collect(),
        }
    }
}

/// Unscaled force law.
#[derive(Debug, Clone, PartialEq)]
pub enum Characteristic {
    Linear(LinearLaw),
    Exponential(DamperCurve),
    Table(SpringTable),
}

impl Characteristic {
    #[inline]
    pub fn eval(&self, input: f64) -> f64 {
        match self {
            Characteristic::Linear(law) => law.coefficient * input,
            Characteristic::Exponential(curve) => curve.eval(input),
            Characteristic::Table(table) => table.eval(input),
        }
    }

    pub fn is_spring_law(&self) -> bool {
        !matches!(self, Characteristic::Exponential(_))
    }

    pub fn is_damper_law(&self) -> bool {
        !matches!(self, Characteristic::Table(_))
    }

    /// Multiplies the stored law by a physical magnitude, e.g. to turn a
    /// normalized curve into newtons.
    pub fn with_magnitude(&self, magnitude: f64) -> Result<Self> {
        if !(magnitude.is_finite() && magnitude > 0.0) {
            return Err(Error::Domain(format!(
                "curve magnitude must be positive, got {magnitude}"
            )));
        }
        Ok(match self {
            Characteristic::Linear(law) => {
                Characteristic::Linear(LinearLaw::new(law.coefficient * magnitude)?)
            }
            Characteristic::Exponential(c) => Characteristic::Exponential(DamperCurve::new(
                c.a * magnitude,
                c.k,
                c.b * magnitude,
                c.q,
            )?),
            Characteristic::Table(t) => Characteristic::Table(t.scaled_forces(magnitude)),
        })
    }
}

/// A force law multiplied by a dimensionless scaling coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCharacteristic {
    base: Characteristic,
    scale: f64,
}

/// Wraps `base` with scaling coefficient `c`.
pub fn scale_characteristic(base: Characteristic, c: f64) -> Result<ScaledCharacteristic> {
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Domain(format!(
            "scaling coefficient must be positive and finite, got {c}"
        )));
    }
    Ok(ScaledCharacteristic { base, scale: c })
}

impl ScaledCharacteristic {
    pub fn unscaled(base: Characteristic) -> Self {
        Self { base, scale: 1.0 }
    }

    pub fn linear(coefficient: f64) -> Result<Self> {
        Ok(Self::unscaled(Characteristic::Linear(LinearLaw::new(
            coefficient,
        )?)))
    }

    pub fn base(&self) -> &Characteristic {
        &self.base
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Same base law with a different scaling coefficient.
    pub fn with_scale(&self, c: f64) -> Result<Self> {
        scale_characteristic(self.base.clone(), c)
    }

    #[inline]
    pub fn force(&self, input: f64) -> f64 {
        self.scale * self.base.eval(input)
    }

    pub fn damper_force(&self, v: f64) -> Result<f64> {
        if !self.base.is_damper_law() {
            return Err(Error::Input("a spring table is not a damper law".into()));
        }
        ensure_finite("damper velocity", v)?;
        let f = self.force(v);
        ensure_finite("damper force", f)?;
        Ok(f)
    }

    pub fn spring_force(&self, x: f64) -> Result<f64> {
        if !self.base.is_spring_law() {
            return Err(Error::Input(
                "an exponential damper curve is not a spring law".into(),
            ));
        }
        ensure_finite("spring deflection", x)?;
        Ok(self.force(x))
    }

    /// `F(op + dx) − F(op)`; exact for linear laws.
    #[inline]
    pub fn increment(&self, op: f64, dx: f64) -> f64 {
        match &self.base {
            Characteristic::Linear(law) => self.scale * law.coefficient * dx,
            _ => self.force(op + dx) - self.force(op),
        }
    }

    /// Samples the scaled law on `n` evenly spaced inputs over `[lo, hi]`.
    pub fn tabulate(&self, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let u = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (u, self.force(u))
            })
            .collect()
    }
}

/// Reads (input, force) pairs from two-column text.
pub fn read_samples(text: &str) -> Result<Vec<(f64, f64)>> {
    let (x, f) = two_columns(text)?;
    Ok(x.into_iter().zip(f).collect())
}

fn two_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows = parse_table(text)?;
    let mut x = Vec::with_capacity(rows.len());
    let mut f = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        if row.len() != 2 {
            return Err(Error::Parse(format!(
                "row {}: expected 2 columns, found {}",
                i + 1,
                row.len()
            )));
        }
        x.push(row[0]);
        f.push(row[1]);
    }
    Ok((x, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_table() -> SpringTable {
        SpringTable::new(vec![-0.1, 0.0, 0.1], vec![-1000.0, 0.0, 1200.0]).unwrap()
    }

    #[test]
    fn damper_force_at_zero_is_a_plus_b() {
        let c = scale_characteristic(
            Characteristic::Exponential(DamperCurve::new(1.0, 1.0, -1.0, 1.0).unwrap()),
            1.0,
        )
        .unwrap();
        assert_eq!(c.damper_force(0.0).unwrap(), 0.0);
    }

    #[test]
    fn linear_damper_scales() {
        let c = scale_characteristic(
            Characteristic::Linear(LinearLaw::new(1500.0).unwrap()),
            2.0,
        )
        .unwrap();
        assert_eq!(c.damper_force(0.3).unwrap(), 2.0 * 1500.0 * 0.3);
    }

    #[test]
    fn damper_force_reference_value() {
        // 100·e^-2 + 50·e from a 30-digit evaluation.
        let expected = 149.447_619_746_613_53_f64;
        let c = ScaledCharacteristic::unscaled(Characteristic::Exponential(
            DamperCurve::new(100.0, 2.0, 50.0, 1.0).unwrap(),
        ));
        let f = c.damper_force(1.0).unwrap();
        assert!((f - expected).abs() < 1e-9, "{f}");
    }

    #[test]
    fn damper_rejects_non_finite_velocity() {
        let c = ScaledCharacteristic::linear(1000.0).unwrap();
        assert!(matches!(c.damper_force(f64::NAN), Err(Error::Input(_))));
        assert!(matches!(c.spring_force(f64::INFINITY), Err(Error::Input(_))));
    }

    #[test]
    fn kind_checks() {
        let table = ScaledCharacteristic::unscaled(Characteristic::Table(example_table()));
        assert!(table.damper_force(0.1).is_err());
        let damper = ScaledCharacteristic::unscaled(Characteristic::Exponential(
            DamperCurve::new(-1.0, 1.0, 1.0, 1.0).unwrap(),
        ));
        assert!(damper.spring_force(0.1).is_err());
    }

    #[test]
    fn spring_table_examples() {
        let c = ScaledCharacteristic::unscaled(Characteristic::Table(example_table()));
        assert_eq!(c.spring_force(0.0).unwrap(), 0.0);
        assert!((c.spring_force(0.05).unwrap() - 600.0).abs() < 1e-9);
        // end-segment slope 12000 N/m: 1200 + 12000·0.1
        assert!((c.spring_force(0.2).unwrap() - 2400.0).abs() < 1e-9);
        // and below the table: -1000 + 10000·(-0.1)
        assert!((c.spring_force(-0.2).unwrap() + 2000.0).abs() < 1e-9);
    }

    #[test]
    fn table_validation() {
        assert!(SpringTable::new(vec![0.0], vec![0.0]).is_err());
        assert!(SpringTable::new(vec![0.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(SpringTable::new(vec![0.0, 1.0], vec![1.0, 0.0]).is_err());
        assert!(SpringTable::new(vec![0.0, 1.0], vec![0.0]).is_err());
        assert!(SpringTable::new(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
    }

    #[test]
    fn table_from_text() {
        let t = SpringTable::from_text("# x F\n-0.1 -1000\n0 0\n\n0.1, 1200 # end\n").unwrap();
        assert_eq!(t, example_table());
        assert!(SpringTable::from_text("0 1 2\n1 2 3\n").is_err());
    }

    #[test]
    fn scale_rejects_non_positive() {
        let base = Characteristic::Linear(LinearLaw::new(1.0).unwrap());
        assert!(scale_characteristic(base.clone(), 0.0).is_err());
        assert!(scale_characteristic(base.clone(), -1.0).is_err());
        assert!(scale_characteristic(base, f64::NAN).is_err());
        assert!(LinearLaw::new(0.0).is_err());
    }

    #[test]
    fn scale_identity_and_double() {
        let base = Characteristic::Table(example_table());
        let one = scale_characteristic(base.clone(), 1.0).unwrap();
        let two = scale_characteristic(base.clone(), 2.0).unwrap();
        for i in -20..=20 {
            let x = i as f64 * 0.01;
            assert_eq!(one.force(x), base.eval(x));
            assert_eq!(two.force(x), 2.0 * base.eval(x));
        }
        // zero crossing preserved
        assert_eq!(two.force(0.0), 0.0);
    }

    #[test]
    fn increment_matches_difference() {
        let c = ScaledCharacteristic::unscaled(Characteristic::Table(example_table()))
            .with_scale(1.7)
            .unwrap();
        let d = c.increment(0.05, 0.02);
        assert!((d - (c.force(0.07) - c.force(0.05))).abs() < 1e-12);
        let lin = ScaledCharacteristic::linear(20000.0).unwrap();
        assert_eq!(lin.increment(0.1, -1.0), -20000.0);
    }

    #[test]
    fn magnitude_folds_into_base() {
        let t = Characteristic::Table(example_table()).with_magnitude(3.0).unwrap();
        assert!((t.eval(0.1) - 3600.0).abs() < 1e-9);
        let d = Characteristic::Exponential(DamperCurve::new(1.0, 2.0, 3.0, 4.0).unwrap())
            .with_magnitude(2.0)
            .unwrap();
        assert!((d.eval(0.0) - 8.0).abs() < 1e-12);
        assert!(Characteristic::Table(example_table()).with_magnitude(0.0).is_err());
    }

    fn arb_characteristic() -> impl Strategy<Value = Characteristic> {
        prop_oneof![
            (1.0..1e5f64).prop_map(|c| Characteristic::Linear(LinearLaw::new(c).unwrap())),
            (-500.0..500.0f64, 0.1..5.0f64, -500.0..500.0f64, 0.1..5.0f64).prop_map(
                |(a, k, b, q)| Characteristic::Exponential(DamperCurve::new(a, k, b, q).unwrap())
            ),
            proptest::collection::vec(0.0..1000.0f64, 2..8).prop_map(|steps| {
                let x: Vec<f64> = (0..steps.len()).map(|i| i as f64 * 0.05 - 0.1).collect();
                let f: Vec<f64> = steps
                    .iter()
                    .scan(-100.0, |acc, s| {
                        *acc += s;
                        Some(*acc)
                    })
                    .collect();
                Characteristic::Table(SpringTable::new(x, f).unwrap())
            }),
        ]
    }

    proptest! {
        #[test]
        fn scaling_homogeneity(base in arb_characteristic(), c in 1e-3..1e3f64,
                               inputs in proptest::collection::vec(-1.0..1.0f64, 1000)) {
            let scaled = scale_characteristic(base.clone(), c).unwrap();
            for u in inputs {
                let expected = c * base.eval(u);
                prop_assert_eq!(scaled.force(u), expected);
            }
        }

        #[test]
        fn table_exact_at_nodes_and_continuous(base in arb_characteristic()) {
            if let Characteristic::Table(t) = &base {
                for (x, f) in t.deflection().iter().zip(t.force()) {
                    prop_assert_eq!(t.eval(*x), *f);
                    let eps = 1e-9;
                    prop_assert!((t.eval(x - eps) - f).abs() < 1e-3);
                    prop_assert!((t.eval(x + eps) - f).abs() < 1e-3);
                }
            }
        }

        #[test]
        fn damper_curve_finite_over_range(a in -1e4..1e4f64, k in 0.5..5.0f64,
                                          b in -1e4..1e4f64, q in 0.5..5.0f64,
                                          v in -2.0..2.0f64) {
            let c = DamperCurve::new(a, k, b, q).unwrap();
            prop_assert!(c.eval(v).is_finite());
        }
    }
}
