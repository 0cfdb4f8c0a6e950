//! Travel times between physical nodes.

use crate::error::{Error, Result};
use crate::instance::{CostSpec, Instance};

/// Dense travel-time table over the physical nodes of an instance
/// (agent starts, pickups, deliveries, stations, depots).
#[derive(Debug, Clone, PartialEq)]
pub struct CostTable {
    n: usize,
    data: Vec<f64>,
}

impl CostTable {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Cost(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            data.extend_from_slice(row);
        }
        for i in 0..n {
            data[i * n + i] = 0.0;
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.data[from * self.n + to]
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(0.0, f64::max)
    }
}

/// Derives the travel time between every pair of physical nodes.
///
/// Euclidean mode assumes a speed of 1 m/s and converts seconds into the
/// document's time unit. Matrix mode passes entries through unchanged.
pub fn derive_costs(instance: &Instance) -> Result<CostTable> {
    let n = instance.num_physical_nodes();
    match &instance.costs {
        CostSpec::Matrix { matrix } => {
            if matrix.len() != n {
                return Err(Error::Cost(format!("matrix has {} rows, instance has {n} nodes", matrix.len())));
            }
            CostTable::from_rows(matrix)
        }
        CostSpec::Euclidean => {
            let positions = instance.physical_positions();
            let per_second = 1.0 / instance.meta.time_unit.seconds();
            let mut data = vec![0.0; n * n];
            for i in 0..n {
                let a = positions[i].ok_or_else(|| Error::Cost(format!("physical node {i} has no coordinate")))?;
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let b = positions[j].ok_or_else(|| Error::Cost(format!("physical node {j} has no coordinate")))?;
                    data[i * n + j] = a.distance(&b) * per_second;
                }
            }
            Ok(CostTable { n, data })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::minimal;
    use crate::instance::{Point, TimeUnit};
    use proptest::prelude::*;

    #[test]
    fn three_four_five_at_unit_speed() {
        let mut inst = minimal();
        inst.agents[0].start = Some(Point::new(0.0, 0.0));
        inst.requests[0].pickup = Some(Point::new(3.0, 4.0));
        let costs = derive_costs(&inst).unwrap();
        assert_eq!(costs.get(0, 1), 5.0);
        assert_eq!(costs.get(1, 0), 5.0);
    }

    #[test]
    fn minutes_divide_by_sixty() {
        let mut inst = minimal();
        inst.meta.time_unit = TimeUnit::Minutes;
        inst.requests[0].pickup = Some(Point::new(3.0, 4.0));
        let costs = derive_costs(&inst).unwrap();
        assert!((costs.get(0, 1) - 5.0 / 60.0).abs() < 1e-15);
    }

    #[test]
    fn self_cost_is_zero() {
        let costs = derive_costs(&minimal()).unwrap();
        for i in 0..costs.len() {
            assert_eq!(costs.get(i, i), 0.0);
        }
    }

    #[test]
    fn matrix_mode_passes_entries_through() {
        let mut inst = minimal();
        let mut m = vec![vec![1.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 0.0;
        }
        m[2][1] = 7.5;
        inst.costs = CostSpec::Matrix { matrix: m };
        let costs = derive_costs(&inst).unwrap();
        assert_eq!(costs.get(2, 1), 7.5);
        assert_eq!(costs.get(1, 2), 1.0);
    }

    #[test]
    fn matrix_dimension_mismatch() {
        let mut inst = minimal();
        inst.costs = CostSpec::Matrix { matrix: vec![vec![0.0; 3]; 3] };
        assert!(matches!(derive_costs(&inst), Err(Error::Cost(_))));
    }

    #[test]
    fn missing_coordinate() {
        let mut inst = minimal();
        inst.depots[0].pos = None;
        assert!(matches!(derive_costs(&inst), Err(Error::Cost(_))));
    }

    proptest! {
        #[test]
        fn euclidean_is_symmetric_metric(coords in proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 4)) {
            let mut inst = minimal();
            inst.agents[0].start = Some(Point::new(coords[0].0, coords[0].1));
            inst.requests[0].pickup = Some(Point::new(coords[1].0, coords[1].1));
            inst.requests[0].delivery = Some(Point::new(coords[2].0, coords[2].1));
            inst.depots[0].pos = Some(Point::new(coords[3].0, coords[3].1));
            let c = derive_costs(&inst).unwrap();
            for i in 0..4 {
                for j in 0..4 {
                    prop_assert_eq!(c.get(i, j), c.get(j, i));
                    for k in 0..4 {
                        prop_assert!(c.get(i, k) <= c.get(i, j) + c.get(j, k) + 1e-9);
                    }
                }
            }
        }
    }
}
