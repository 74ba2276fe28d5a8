//! Rényi budget curves: one nonnegative ε(α) per tracked order.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::orders::OrderSet;

/// A map α → ε(α) (nats) over an [`OrderSet`].
///
/// Budgets, spends, caps and bounds are all curves; arithmetic between
/// curves over different order sets is an error.
#[derive(Clone, Debug, PartialEq)]
pub struct RdpCurve {
    orders: OrderSet,
    eps: Vec<f64>,
}

impl RdpCurve {
    pub fn new(orders: OrderSet, eps: Vec<f64>) -> Result<Self> {
        if eps.len() != orders.len() {
            return Err(Error::LengthMismatch {
                orders: orders.len(),
                eps: eps.len(),
            });
        }
        if let Some(&bad) = eps.iter().find(|e| !e.is_finite() || **e < 0.0) {
            return Err(Error::InvalidEpsilon(bad));
        }
        Ok(RdpCurve { orders, eps })
    }

    pub fn zeros(orders: &OrderSet) -> Self {
        RdpCurve {
            orders: orders.clone(),
            eps: vec![0.0; orders.len()],
        }
    }

    /// The same ε at every order (a pure-DP-style budget).
    pub fn constant(orders: &OrderSet, eps: f64) -> Result<Self> {
        Self::new(orders.clone(), vec![eps; orders.len()])
    }

    /// Build a curve by evaluating `f` at every order.
    pub fn from_fn(orders: &OrderSet, f: impl FnMut(f64) -> f64) -> Result<Self> {
        Self::new(orders.clone(), orders.iter().map(f).collect())
    }

    pub fn orders(&self) -> &OrderSet {
        &self.orders
    }

    pub fn values(&self) -> &[f64] {
        &self.eps
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `(α, ε(α))` pairs in increasing α.
    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.orders.iter().zip(self.eps.iter().copied())
    }

    /// ε at a tracked order.
    pub fn get(&self, alpha: f64) -> Result<f64> {
        self.orders
            .index_of(alpha)
            .map(|i| self.eps[i])
            .ok_or(Error::UnknownOrder(alpha))
    }

    pub fn is_zero(&self) -> bool {
        self.eps.iter().all(|&e| e == 0.0)
    }

    pub fn ensure_same_orders(&self, other: &RdpCurve) -> Result<()> {
        if self.orders.same_as(&other.orders) {
            Ok(())
        } else {
            Err(Error::OrderSetMismatch)
        }
    }

    pub fn ensure_orders(&self, orders: &OrderSet) -> Result<()> {
        if self.orders.same_as(orders) {
            Ok(())
        } else {
            Err(Error::OrderSetMismatch)
        }
    }

    /// Pointwise sum (RDP composition).
    pub fn add(&self, other: &RdpCurve) -> Result<RdpCurve> {
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &RdpCurve) -> Result<()> {
        self.ensure_same_orders(other)?;
        for (lhs, rhs) in self.eps.iter_mut().zip(&other.eps) {
            *lhs += rhs;
        }
        Ok(())
    }

    /// Pointwise `max(0, self - other)`.
    pub fn saturating_sub(&self, other: &RdpCurve) -> Result<RdpCurve> {
        self.ensure_same_orders(other)?;
        let eps = self
            .eps
            .iter()
            .zip(&other.eps)
            .map(|(a, b)| (a - b).max(0.0))
            .collect();
        Ok(RdpCurve {
            orders: self.orders.clone(),
            eps,
        })
    }

    /// Multiply every ε by a nonnegative factor (n-fold composition of the
    /// same mechanism, or the σ-homogeneity of Gaussian curves).
    pub fn scale(&self, factor: f64) -> Result<RdpCurve> {
        Self::new(
            self.orders.clone(),
            self.eps.iter().map(|e| e * factor).collect(),
        )
    }

    /// True when `self(α) >= other(α)` at every order.
    pub fn dominates(&self, other: &RdpCurve) -> Result<bool> {
        self.ensure_same_orders(other)?;
        Ok(self.eps.iter().zip(&other.eps).all(|(a, b)| a >= b))
    }
}

#[derive(Serialize, Deserialize)]
struct CurveRepr {
    orders: OrderSet,
    eps: Vec<f64>,
}

impl Serialize for RdpCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        CurveRepr {
            orders: self.orders.clone(),
            eps: self.eps.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RdpCurve {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = CurveRepr::deserialize(deserializer)?;
        RdpCurve::new(repr.orders, repr.eps).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(orders: &[f64]) -> OrderSet {
        OrderSet::new(orders.to_vec()).unwrap()
    }

    #[test]
    fn pointwise_addition() {
        let s = set(&[2.0]);
        let a = RdpCurve::new(s.clone(), vec![0.4]).unwrap();
        let b = RdpCurve::new(s.clone(), vec![0.5]).unwrap();
        assert_eq!(a.add(&b).unwrap().values(), &[0.9]);

        let s = set(&[2.0, 4.0]);
        let a = RdpCurve::new(s.clone(), vec![0.1, 0.2]).unwrap();
        let b = RdpCurve::new(s.clone(), vec![0.3, 0.4]).unwrap();
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.get(2.0).unwrap(), 0.1 + 0.3);
        assert_eq!(sum.get(4.0).unwrap(), 0.2 + 0.4);
        assert!((sum.get(2.0).unwrap() - 0.4).abs() < 1e-15);
        assert!((sum.get(4.0).unwrap() - 0.6).abs() < 1e-15);

        assert_eq!(a.add(&RdpCurve::zeros(&s)).unwrap(), a);
    }

    #[test]
    fn mismatched_orders_are_rejected() {
        let a = RdpCurve::zeros(&set(&[2.0]));
        let b = RdpCurve::zeros(&set(&[4.0]));
        assert!(matches!(a.add(&b), Err(Error::OrderSetMismatch)));
        // equal contents, distinct allocations
        let c = RdpCurve::zeros(&set(&[2.0]));
        assert!(a.add(&c).is_ok());
    }

    #[test]
    fn validation() {
        let s = set(&[2.0, 4.0]);
        assert!(matches!(
            RdpCurve::new(s.clone(), vec![1.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            RdpCurve::new(s.clone(), vec![1.0, -0.1]),
            Err(Error::InvalidEpsilon(_))
        ));
        assert!(RdpCurve::new(s.clone(), vec![1.0, f64::NAN]).is_err());
        assert!(RdpCurve::new(s, vec![0.0, 0.0]).unwrap().is_zero());
    }

    #[test]
    fn remaining_style_subtraction_clamps() {
        let s = set(&[2.0, 4.0]);
        let cap = RdpCurve::new(s.clone(), vec![1.0, 1.0]).unwrap();
        let spent = RdpCurve::new(s, vec![0.25, 3.0]).unwrap();
        assert_eq!(cap.saturating_sub(&spent).unwrap().values(), &[0.75, 0.0]);
    }

    #[test]
    fn json_schema_uses_parallel_arrays() {
        let curve = RdpCurve::new(set(&[2.0, 32.0]), vec![0.1, 1.0 / 3.0]).unwrap();
        let text = serde_json::to_string(&curve).unwrap();
        assert_eq!(text, r#"{"orders":[2.0,32.0],"eps":[0.1,0.3333333333333333]}"#);
        let back: RdpCurve = serde_json::from_str(&text).unwrap();
        assert_eq!(back.values()[1].to_bits(), (1.0f64 / 3.0).to_bits());
        assert!(serde_json::from_str::<RdpCurve>(r#"{"orders":[2.0],"eps":[-1.0]}"#).is_err());
        assert!(serde_json::from_str::<RdpCurve>(r#"{"orders":[2.0],"eps":[1.0,2.0]}"#).is_err());
    }
}
