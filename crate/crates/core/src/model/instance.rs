use super::{Cost, ModelError};

/// Immutable CVRP problem data. Vertex 0 is the depot, customers are `1..=n`.
#[derive(Debug, Clone)]
pub struct Instance {
    name: String,
    coords: Vec<(f64, f64)>,
    demands: Vec<i64>,
    capacity: i64,
    vehicle_hint: Option<usize>,
    dist: Vec<Cost>,
}

impl Instance {
    /// Builds an instance from depot-first coordinates and demands.
    pub fn new(
        name: impl Into<String>,
        coords: Vec<(f64, f64)>,
        demands: Vec<i64>,
        capacity: i64,
    ) -> Result<Self, ModelError> {
        let name = name.into();
        if coords.len() < 2 {
            return Err(ModelError::Invalid("instance needs a depot and at least one customer".into()));
        }
        if coords.len() != demands.len() {
            return Err(ModelError::Invalid(format!(
                "{} coordinates but {} demands",
                coords.len(),
                demands.len()
            )));
        }
        if capacity <= 0 {
            return Err(ModelError::Invalid(format!("capacity must be positive, got {capacity}")));
        }
        if demands[0] != 0 {
            return Err(ModelError::Invalid("depot demand must be zero".into()));
        }
        for (i, &(x, y)) in coords.iter().enumerate() {
            if !x.is_finite() || !y.is_finite() {
                return Err(ModelError::Invalid(format!("vertex {i} has non-finite coordinates")));
            }
        }
        for (i, &q) in demands.iter().enumerate().skip(1) {
            if q < 0 {
                return Err(ModelError::Invalid(format!("customer {i} has negative demand {q}")));
            }
            if q > capacity {
                return Err(ModelError::Invalid(format!(
                    "customer {i} demand {q} exceeds vehicle capacity {capacity}"
                )));
            }
        }

        let size = coords.len();
        let mut dist = vec![0; size * size];
        for i in 0..size {
            for j in (i + 1)..size {
                let d = euclidean_rounded(coords[i], coords[j]);
                dist[i * size + j] = d;
                dist[j * size + i] = d;
            }
        }
        let vehicle_hint = vehicle_hint_from_name(&name);
        Ok(Self { name, coords, demands, capacity, vehicle_hint, dist })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of customers.
    pub fn n(&self) -> usize {
        self.coords.len() - 1
    }

    /// Number of vertices including the depot.
    pub fn size(&self) -> usize {
        self.coords.len()
    }

    pub fn capacity(&self) -> i64 {
        self.capacity
    }

    pub fn vehicle_hint(&self) -> Option<usize> {
        self.vehicle_hint
    }

    pub fn coord(&self, v: usize) -> (f64, f64) {
        self.coords[v]
    }

    pub fn demand(&self, v: usize) -> i64 {
        self.demands[v]
    }

    pub fn total_demand(&self) -> i64 {
        self.demands.iter().sum()
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> Cost {
        self.dist[i * self.coords.len() + j]
    }

    /// Row-major `(n+1) x (n+1)` distance matrix.
    pub fn distance_matrix(&self) -> &[Cost] {
        &self.dist
    }

    pub fn max_distance(&self) -> Cost {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    pub fn max_demand(&self) -> i64 {
        self.demands.iter().copied().max().unwrap_or(0)
    }

    /// Customers sorted by distance from `v` (excluding `v` and the depot), truncated to `k`.
    pub fn nearest_customers(&self, v: usize, k: usize) -> Vec<usize> {
        let mut others: Vec<usize> = (1..self.size()).filter(|&w| w != v).collect();
        others.sort_by_key(|&w| (self.distance(v, w), w));
        others.truncate(k);
        others
    }
}

/// Nearest-integer Euclidean distance (CVRPLIB `nint`).
pub fn euclidean_rounded(a: (f64, f64), b: (f64, f64)) -> Cost {
    let dx = a.0 - b.0;
    let dy = a.1 - b.1;
    (dx * dx + dy * dy).sqrt().round() as Cost
}

/// Route-count hint from a CVRPLIB name such as `X-n101-k25`.
fn vehicle_hint_from_name(name: &str) -> Option<usize> {
    let idx = name.rfind("-k")?;
    let digits: String = name[idx + 2..].chars().take_while(|c| c.is_ascii_digit()).collect();
    digits.parse().ok()
}
