//! Finite sets of Rényi orders.
//!
//! Every accountant in the crate tracks its budget at a fixed, finite set of
//! orders α > 1. The cardinality of the set enters the union-bound terms of
//! the odometer, so it is kept small and explicit.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// A nonempty, strictly increasing list of Rényi orders, each > 1.
///
/// Cloning is cheap: the orders live behind an `Arc` so curves over the same
/// set share one allocation.
#[derive(Clone)]
pub struct OrderSet {
    orders: Arc<[f64]>,
}

impl OrderSet {
    pub fn new(orders: impl Into<Vec<f64>>) -> Result<Self> {
        let orders = orders.into();
        if orders.is_empty() {
            return Err(Error::EmptyOrderSet);
        }
        for &alpha in &orders {
            if !alpha.is_finite() || alpha <= 1.0 {
                return Err(Error::InvalidOrder(alpha));
            }
        }
        for pair in orders.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::UnsortedOrders {
                    prev: pair[0],
                    next: pair[1],
                });
            }
        }
        Ok(OrderSet {
            orders: orders.into(),
        })
    }

    /// Single-order set, the setting of the scalar filter and odometer.
    pub fn singleton(alpha: f64) -> Result<Self> {
        Self::new(vec![alpha])
    }

    /// `{1.25, 1.5, ..., 9.75, 10} ∪ {16, 32}`: 38 orders.
    pub fn default_set() -> Self {
        let mut orders: Vec<f64> = (5..=40).map(|quarter| quarter as f64 * 0.25).collect();
        orders.extend([16.0, 32.0]);
        Self::new(orders).expect("default order set is well formed")
    }

    /// `{2^i : i = 1..=ceil(log2(n²))}`, the order set matching a minimum
    /// accounting granularity of 1/n² for a dataset of size `n`.
    pub fn granularity(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGranularity(n));
        }
        let n_sq = (n as u128) * (n as u128);
        // ceil(log2(n²)) computed on integers
        let top = 128 - (n_sq - 1).leading_zeros();
        let orders: Vec<f64> = (1..=top).map(|i| 2f64.powi(i as i32)).collect();
        Self::new(orders)
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.orders
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.orders.iter().copied()
    }

    pub fn min(&self) -> f64 {
        self.orders[0]
    }

    pub fn max(&self) -> f64 {
        self.orders[self.orders.len() - 1]
    }

    /// Position of `alpha` in the set (exact match).
    pub fn index_of(&self, alpha: f64) -> Option<usize> {
        self.orders
            .binary_search_by(|probe| probe.total_cmp(&alpha))
            .ok()
    }

    pub fn contains(&self, alpha: f64) -> bool {
        self.index_of(alpha).is_some()
    }

    pub(crate) fn same_as(&self, other: &OrderSet) -> bool {
        Arc::ptr_eq(&self.orders, &other.orders) || self.orders == other.orders
    }
}

impl PartialEq for OrderSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_as(other)
    }
}

impl fmt::Debug for OrderSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.orders.iter()).finish()
    }
}

impl Serialize for OrderSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.orders.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OrderSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let orders = Vec::<f64>::deserialize(deserializer)?;
        OrderSet::new(orders).map_err(serde::de::Error::custom)
    }
}
