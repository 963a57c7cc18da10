//! Real-line integrals of rational functions times e^{−iωq} by residues.
//!
//! Near-coincident poles are summed together with a small circle quadrature
//! instead of individual residues, which would cancel catastrophically.

use num_complex::Complex64;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pole {
    pub z: Complex64,
    pub r: Complex64,
    /// Side of the real axis; set explicitly for ±i0 poles on the axis.
    pub upper: bool,
}

impl Pole {
    pub fn off_axis(z: Complex64, r: Complex64) -> Self {
        assert!(z.im != 0.0, "pole on the real axis needs an explicit side");
        Self { z, r, upper: z.im > 0.0 }
    }
}

/// c + Σ r/(q − z).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Rational {
    pub constant: Complex64,
    pub poles: Vec<Pole>,
}

impl Rational {
    pub fn eval(&self, q: Complex64) -> Complex64 {
        self.poles.iter().fold(self.constant, |acc, p| acc + p.r / (q - p.z))
    }
}

const CIRCLE_POINTS: usize = 64;
const LINK: f64 = 0.3;

/// ∫_ℝ Π f_m(q) · e^{−iωq} dq. The product must decay at least like 1/q²
/// (like 1/q when ω ≠ 0).
pub fn integrate_line(factors: &[Rational], omega: f64) -> Complex64 {
    let all: Vec<(usize, Pole)> =
        factors.iter().enumerate().flat_map(|(m, f)| f.poles.iter().map(move |p| (m, *p))).collect();
    let upper = if omega != 0.0 {
        omega < 0.0
    } else {
        let n_up = all.iter().filter(|(_, p)| p.upper).count();
        2 * n_up <= all.len()
    };
    let chosen: Vec<usize> = (0..all.len()).filter(|&i| all[i].1.upper == upper).collect();
    let total = |q: Complex64| -> Complex64 {
        let mut v = (Complex64::new(0.0, -omega) * q).exp();
        for f in factors {
            v *= f.eval(q);
        }
        v
    };

    // union-find over poles in the closing half-plane
    let mut parent: Vec<usize> = (0..chosen.len()).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    for a in 0..chosen.len() {
        for b in a + 1..chosen.len() {
            let (pa, pb) = (all[chosen[a]].1, all[chosen[b]].1);
            let scale = pa.z.im.abs().min(pb.z.im.abs());
            if (pa.z - pb.z).norm() <= LINK * scale {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                parent[ra] = rb;
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_of = vec![usize::MAX; chosen.len()];
    for a in 0..chosen.len() {
        let r = find(&mut parent, a);
        if root_of[r] == usize::MAX {
            root_of[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[root_of[r]].push(chosen[a]);
    }

    // grow clusters until each is well separated from every other pole;
    // absorbing a pole merges its whole cluster so nothing is counted twice
    let mut singles = vec![false; clusters.len()];
    loop {
        let crowded = clusters.iter().enumerate().find_map(|(ci, m)| {
            if m.len() < 2 || singles[ci] {
                return None;
            }
            let (_, spread, nearest) = cluster_shape(&all, m);
            nearest.filter(|&(_, gap)| spread >= 0.25 * gap).map(|(i, _)| (ci, i))
        });
        let Some((ci, i)) = crowded else { break };
        let same_side = all[i].1.upper == upper && all[i].1.z.im != 0.0;
        match clusters.iter().position(|m| m.contains(&i)) {
            Some(cj) if same_side => {
                let moved = std::mem::take(&mut clusters[cj]);
                let single = singles[cj];
                clusters[ci].extend(moved);
                singles[ci] |= single;
                clusters.remove(cj);
                singles.remove(cj);
            }
            _ => singles[ci] = true,
        }
    }

    let mut sum = Complex64::new(0.0, 0.0);
    for (members, single) in clusters.iter().zip(&singles) {
        if members.len() == 1 || *single {
            // pole pairs straddling the axis cannot be enclosed together
            for &k in members {
                sum += single_residue(factors, all[k].0, &all[k].1, omega);
            }
            continue;
        }
        let (c, spread, nearest) = cluster_shape(&all, members);
        let rho = match nearest {
            Some((_, gap)) => (spread.max(1e-3 * gap) * gap).sqrt(),
            None => 4.0 * spread.max(1e-300),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..CIRCLE_POINTS {
            let e = Complex64::from_polar(rho, 2.0 * PI * (j as f64 + 0.5) / CIRCLE_POINTS as f64);
            acc += total(c + e) * e;
        }
        sum += acc / CIRCLE_POINTS as f64;
    }
    let sign = if upper { 1.0 } else { -1.0 };
    Complex64::new(0.0, 2.0 * PI * sign) * sum
}

fn single_residue(factors: &[Rational], m: usize, p: &Pole, omega: f64) -> Complex64 {
    let mut v = p.r * (Complex64::new(0.0, -omega) * p.z).exp();
    for (j, f) in factors.iter().enumerate() {
        if j != m {
            v *= f.eval(p.z);
        }
    }
    v
}

/// Centre, radius and nearest outside pole (index, distance) of a cluster.
fn cluster_shape(all: &[(usize, Pole)], members: &[usize]) -> (Complex64, f64, Option<(usize, f64)>) {
    let n = members.len() as f64;
    let c = members.iter().map(|&i| all[i].1.z).sum::<Complex64>() / n;
    let spread = members.iter().map(|&i| (all[i].1.z - c).norm()).fold(0.0, f64::max);
    let nearest = (0..all.len())
        .filter(|i| !members.contains(i))
        .map(|i| (i, (all[i].1.z - c).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1));
    (c, spread, nearest)
}
