use crate::cage::CageMesh;
use crate::linalg::Vec3;
use crate::real::Real;

/// Adaptive subdivision parameters for the per-triangle weight integral.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureSpec {
    /// Uniform 4-to-1 refinement levels applied before adapting.
    pub depth: usize,
    /// Target relative error of the integral.
    pub tolerance: f64,
    /// Deepest refinement level any cell may reach.
    pub max_depth: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            depth: 2,
            tolerance: 1e-6,
            max_depth: 18,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult<V> {
    pub value: V,
    /// Sum of local error estimates, relative to the magnitude of the integral.
    pub error_estimate: f64,
    pub converged: bool,
}

/// Integration cell in barycentric coordinates of the parent triangle.
#[derive(Clone, Copy)]
struct Cell {
    b: [[f64; 3]; 3],
    level: usize,
}

impl Cell {
    fn centroid(&self) -> [f64; 3] {
        std::array::from_fn(|k| (self.b[0][k] + self.b[1][k] + self.b[2][k]) / 3.0)
    }

    fn children(&self) -> [Cell; 4] {
        let mid = |a: usize, c: usize| -> [f64; 3] { std::array::from_fn(|k| 0.5 * (self.b[a][k] + self.b[c][k])) };
        let (m01, m12, m20) = (mid(0, 1), mid(1, 2), mid(2, 0));
        let level = self.level + 1;
        [
            Cell {
                b: [self.b[0], m01, m20],
                level,
            },
            Cell {
                b: [m01, self.b[1], m12],
                level,
            },
            Cell {
                b: [m20, m12, self.b[2]],
                level,
            },
            Cell {
                b: [m01, m12, m20],
                level,
            },
        ]
    }
}

struct Integrand {
    p: [[f64; 3]; 3],
    eta: [f64; 3],
    normal: [f64; 3],
    area: f64,
}

impl Integrand {
    /// `φ(x) ((p(x) − η)·n) / |p(x) − η|⁴` for the three hat functions.
    fn eval(&self, b: [f64; 3]) -> [f64; 3] {
        let r: [f64; 3] =
            std::array::from_fn(|k| b[0] * self.p[0][k] + b[1] * self.p[1][k] + b[2] * self.p[2][k] - self.eta[k]);
        let r2 = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
        let cosine = r[0] * self.normal[0] + r[1] * self.normal[1] + r[2] * self.normal[2];
        let s = cosine / (r2 * r2);
        [b[0] * s, b[1] * s, b[2] * s]
    }

    /// Centroid rule on a cell; cells have area `area / 4^level`.
    fn centroid_rule(&self, cell: &Cell) -> [f64; 3] {
        let a = self.area / 4f64.powi(cell.level as i32);
        self.eval(cell.centroid()).map(|v| v * a)
    }
}

fn add(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

fn uniform(cell: Cell, levels: usize) -> Vec<Cell> {
    let mut cells = vec![cell];
    for _ in 0..levels {
        cells = cells.iter().flat_map(|c| c.children()).collect();
    }
    cells
}

/// Integrates all three per-vertex weights of triangle `t` at once.
///
/// The composite centroid rule has an error expansion in even powers of the
/// cell size, so the Richardson combination `(4·fine − coarse)/3` of a cell
/// and its four children is fourth-order accurate. A cell is accepted when
/// that combination agrees with the same combination one level further down
/// to within its area share of the tolerance; otherwise its children are
/// refined, reusing the values already computed.
pub fn quadrature_triangle_weights<T: Real>(
    cage: &CageMesh<T>,
    t: usize,
    eta: &Vec3<T>,
    rule: &QuadratureSpec,
) -> QuadratureResult<[f64; 3]> {
    let p = cage.triangle_positions(t).map(|v| v.to_f64());
    let e1: [f64; 3] = std::array::from_fn(|k| p[1][k] - p[0][k]);
    let e2: [f64; 3] = std::array::from_fn(|k| p[2][k] - p[0][k]);
    let cr = [
        e1[1] * e2[2] - e1[2] * e2[1],
        e1[2] * e2[0] - e1[0] * e2[2],
        e1[0] * e2[1] - e1[1] * e2[0],
    ];
    let twice = (cr[0] * cr[0] + cr[1] * cr[1] + cr[2] * cr[2]).sqrt();
    let f = Integrand {
        p,
        eta: eta.to_f64(),
        normal: cr.map(|c| c / twice),
        area: 0.5 * twice,
    };

    let root = Cell {
        b: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        level: 0,
    };
    let cells = uniform(root, rule.depth.max(1));
    let rough = cells.iter().fold([0.0; 3], |s, c| add(s, f.centroid_rule(c)));
    let scale = rough.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let abs_tol = rule.tolerance * scale;

    let extrapolate =
        |coarse: [f64; 3], fine: [f64; 3]| -> [f64; 3] { std::array::from_fn(|k| (4.0 * fine[k] - coarse[k]) / 3.0) };
    let mut total = [0.0; 3];
    let mut err = 0.0;
    let mut converged = true;
    // (cell, centroid rule on the cell, centroid rule on each child)
    let mut stack: Vec<(Cell, [f64; 3], [[f64; 3]; 4])> = cells
        .into_iter()
        .map(|c| (c, f.centroid_rule(&c), c.children().map(|k| f.centroid_rule(&k))))
        .collect();
    while let Some((cell, coarse, kids)) = stack.pop() {
        let children = cell.children();
        let grandkids: [[[f64; 3]; 4]; 4] = children.map(|k| k.children().map(|g| f.centroid_rule(&g)));
        let own = extrapolate(coarse, kids.iter().fold([0.0; 3], |s, v| add(s, *v)));
        let refined = (0..4).fold([0.0; 3], |s, k| {
            add(
                s,
                extrapolate(kids[k], grandkids[k].iter().fold([0.0; 3], |a, v| add(a, *v))),
            )
        });
        let local = (0..3).map(|k| (refined[k] - own[k]).abs()).fold(0.0, f64::max);
        let share = abs_tol / 4f64.powi(cell.level as i32);
        if local <= share || cell.level + 2 >= rule.max_depth {
            if local > share {
                converged = false;
            }
            total = add(total, refined);
            err += local;
        } else {
            stack.extend((0..4).map(|k| (children[k], kids[k], grandkids[k])));
        }
    }
    let magnitude = total.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    QuadratureResult {
        value: total,
        error_estimate: err / magnitude,
        converged,
    }
}

/// Weight of local vertex `i` of triangle `t`.
pub fn quadrature_weight<T: Real>(
    cage: &CageMesh<T>,
    t: usize,
    i: usize,
    eta: &Vec3<T>,
    rule: &QuadratureSpec,
) -> QuadratureResult<f64> {
    let r = quadrature_triangle_weights(cage, t, eta, rule);
    QuadratureResult {
        value: r.value[i],
        error_estimate: r.error_estimate,
        converged: r.converged,
    }
}

/// Normalized coordinates of every cage vertex by quadrature.
pub fn quadrature_coordinates<T: Real>(
    cage: &CageMesh<T>,
    eta: &Vec3<T>,
    rule: &QuadratureSpec,
) -> QuadratureResult<Vec<f64>> {
    let mut w = vec![0.0; cage.num_vertices()];
    let mut err = 0.0f64;
    let mut converged = true;
    for t in 0..cage.num_triangles() {
        let r = quadrature_triangle_weights(cage, t, eta, rule);
        for (k, &v) in cage.triangles()[t].iter().enumerate() {
            w[v] += r.value[k];
        }
        err = err.max(r.error_estimate);
        converged &= r.converged;
    }
    let total: f64 = w.iter().sum();
    QuadratureResult {
        value: w.iter().map(|x| x / total).collect(),
        error_estimate: err,
        converged,
    }
}
