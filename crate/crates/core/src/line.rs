//! Quantum walks on the line with two or three barrier coins: transfer
//! matrices, closed-form transmission, and the equivalent graph with tails.
//!
//! The walk is `Ũ = SC` on `ℓ²(ℤ; ℂ²)`, with `C(x) = I` away from the barrier
//! positions. A stationary state `(Ũ - z)φ = 0` satisfies
//! `(φ₁(x), φ₂(x+1)) = T_z(x) (φ₁(x-1), φ₂(x))`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use thiserror::Error;

use crate::coins::{unitarity_residual, CoinFamily, UNITARITY_TOL};
use crate::graph::{ArcSpec, GraphWithTails, TailSpec};
use crate::models::WalkFamily;

pub type Coin = Matrix2<Complex64>;

/// `|C₁₁|` at or below this makes the transfer matrix undefined.
pub const CORNER_TOL: f64 = 1e-14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LineError {
    #[error("coin at x = {0} has a vanishing (1,1) entry")]
    ZeroCorner(i64),
    #[error("barrier positions must start at 0 and increase strictly: {0:?}")]
    BadPositions(Vec<i64>),
    #[error("{coins} coins for {positions} positions")]
    CountMismatch { coins: usize, positions: usize },
    #[error("expected {expected} barriers, got {got}")]
    WrongBarrierCount { expected: usize, got: usize },
    #[error("coin at x = {position} not unitary (residual {residual:.3e})")]
    NotUnitary { position: i64, residual: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BarrierSpec {
    positions: Vec<i64>,
    coins: Vec<Coin>,
}

/// Closed-form line scattering data. `T = |Π C₁₁ / a|²`, `R = |b / a|²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineScattering {
    pub transmission: f64,
    pub reflection: f64,
    pub a: Complex64,
    pub b: Complex64,
}

/// `[[√(1-r²), r], [-r, √(1-r²)]]`.
pub fn rotation_coin(r: f64) -> Coin {
    let c = (1.0 - r * r).sqrt();
    Coin::new(
        Complex64::new(c, 0.0),
        Complex64::new(r, 0.0),
        Complex64::new(-r, 0.0),
        Complex64::new(c, 0.0),
    )
}

/// Rotation coin with `C₁₁ = e^{-c/eps}`, an exponentially thick barrier.
pub fn tunnel_coin(c: f64, eps: f64) -> Coin {
    let small = if eps > 0.0 { (-c / eps).exp() } else { 0.0 };
    let big = if eps > 0.0 { (-(-2.0 * c / eps).exp_m1()).sqrt() } else { 1.0 };
    Coin::new(
        Complex64::new(small, 0.0),
        Complex64::new(big, 0.0),
        Complex64::new(-big, 0.0),
        Complex64::new(small, 0.0),
    )
}

pub fn transfer_matrix(coin: &Coin, z: Complex64) -> Result<Coin, LineError> {
    let c11 = coin[(0, 0)];
    if c11.norm() <= CORNER_TOL {
        return Err(LineError::ZeroCorner(0));
    }
    let det = coin.determinant();
    Ok(Coin::new(z, -coin[(0, 1)], coin[(1, 0)], det / z) / c11)
}

impl BarrierSpec {
    pub fn new(positions: Vec<i64>, coins: Vec<Coin>) -> Result<Self, LineError> {
        if positions.first() != Some(&0) || positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(LineError::BadPositions(positions));
        }
        if coins.len() != positions.len() {
            return Err(LineError::CountMismatch {
                coins: coins.len(),
                positions: positions.len(),
            });
        }
        for (&x, c) in positions.iter().zip(&coins) {
            let m = DMatrix::from_column_slice(2, 2, c.as_slice());
            let residual = unitarity_residual(&m);
            if residual > UNITARITY_TOL {
                return Err(LineError::NotUnitary { position: x, residual });
            }
            if c[(0, 0)].norm() <= CORNER_TOL {
                return Err(LineError::ZeroCorner(x));
            }
        }
        Ok(BarrierSpec { positions, coins })
    }

    pub fn positions(&self) -> &[i64] {
        &self.positions
    }

    pub fn coins(&self) -> &[Coin] {
        &self.coins
    }

    fn expect(&self, n: usize) -> Result<(), LineError> {
        if self.positions.len() != n {
            return Err(LineError::WrongBarrierCount {
                expected: n,
                got: self.positions.len(),
            });
        }
        Ok(())
    }

    pub fn double_barrier(&self, z: Complex64) -> Result<LineScattering, LineError> {
        self.expect(2)?;
        let (c, d) = (&self.coins[0], &self.coins[1]);
        let x0 = self.positions[1] as i32;
        let zz = z.powi(2 * x0);
        let a = zz - c[(1, 0)] * d[(0, 1)];
        let b = d[(1, 0)] * zz + c[(1, 0)] * d.determinant();
        Ok(LineScattering {
            transmission: (c[(0, 0)] * d[(0, 0)] / a).norm_sqr(),
            reflection: (b / a).norm_sqr(),
            a,
            b,
        })
    }

    /// Nonzero resonances: the `2x₀` roots of `λ^{2x₀} = C(0)₂₁ C(x₀)₁₂`.
    pub fn double_barrier_resonances(&self) -> Result<Vec<Complex64>, LineError> {
        self.expect(2)?;
        let w = self.coins[0][(1, 0)] * self.coins[1][(0, 1)];
        let m = 2 * self.positions[1] as usize;
        let r = w.norm().powf(1.0 / m as f64);
        Ok((0..m)
            .map(|k| Complex64::from_polar(r, (w.arg() + 2.0 * PI * k as f64) / m as f64))
            .collect())
    }

    /// Points of the unit circle where `T = 1` if the barriers are balanced:
    /// the roots of `z^{2x₀} = -C(0)₂₁ det C(x₀) / C(x₀)₂₁`.
    pub fn double_barrier_peaks(&self) -> Result<Vec<Complex64>, LineError> {
        self.expect(2)?;
        let (c, d) = (&self.coins[0], &self.coins[1]);
        let w = -c[(1, 0)] * d.determinant() / d[(1, 0)];
        let m = 2 * self.positions[1] as usize;
        Ok((0..m)
            .map(|k| Complex64::from_polar(1.0, (w.arg() + 2.0 * PI * k as f64) / m as f64))
            .collect())
    }

    /// `|C(0)₂₁ / C(x₀)₁₂|^{1/2} |C(x₀)₂₂ / C(0)₁₁|`, equal to one for a
    /// symmetric resonant state.
    pub fn double_barrier_symmetry(&self) -> Result<f64, LineError> {
        self.expect(2)?;
        let (c, d) = (&self.coins[0], &self.coins[1]);
        Ok((c[(1, 0)] / d[(0, 1)]).norm().sqrt() * (d[(1, 1)] / c[(0, 0)]).norm())
    }

    pub fn triple_barrier(&self, z: Complex64) -> Result<LineScattering, LineError> {
        self.expect(3)?;
        let (c0, c1, c2) = (&self.coins[0], &self.coins[1], &self.coins[2]);
        let x0 = self.positions[1] as i32;
        let x1 = self.positions[2] as i32;
        let a = z.powi(x1 + 1)
            - c1[(1, 0)] * c2[(0, 1)] * z.powi(2 * x0 - x1 + 1)
            - c0[(1, 0)] * c1[(0, 1)] * z.powi(x1 - 2 * x0 + 1)
            - c0[(1, 0)] * c2[(0, 1)] * c1.determinant() * z.powi(1 - x1);
        let b = c2[(1, 0)] * z.powi(x1) + c1[(1, 0)] * c2.determinant() * z.powi(2 * x0 - x1)
            - c0[(1, 0)] * c1[(0, 1)] * c2[(1, 0)] * z.powi(x1 - 2 * x0)
            + c0[(1, 0)] * (c1 * c2).determinant() * z.powi(-x1);
        let top = c0[(0, 0)] * c1[(0, 0)] * c2[(0, 0)];
        Ok(LineScattering {
            transmission: (top / a).norm_sqr(),
            reflection: (b / a).norm_sqr(),
            a,
            b,
        })
    }

    /// Transmission from the closed form matching the number of barriers.
    pub fn closed_form(&self, z: Complex64) -> Result<LineScattering, LineError> {
        match self.positions.len() {
            2 => self.double_barrier(z),
            3 => self.triple_barrier(z),
            n => Err(LineError::WrongBarrierCount { expected: 2, got: n }),
        }
    }

    /// The equivalent graph with two tails. Barrier sites are single vertices
    /// of degree two; free sites between barriers split into `L(x)` and
    /// `R(x)` of degree one with trivial coins. Tail 1 enters at `a_R(0)` and
    /// leaves at `a_L(-1)`; tail 2 enters at `a_L(x_last)` and leaves at
    /// `a_R(x_last + 1)`.
    pub fn to_graph(&self) -> WalkFamily {
        let last = *self.positions.last().expect("at least one barrier");
        let barrier = |x: i64| self.positions.binary_search(&x).ok();
        let left = |x: i64| if barrier(x).is_some() { format!("x{x}") } else { format!("L{x}") };
        let right = |x: i64| if barrier(x).is_some() { format!("x{x}") } else { format!("R{x}") };

        let mut vertices = Vec::new();
        for x in 0..=last {
            if barrier(x).is_some() {
                vertices.push(format!("x{x}"));
            } else {
                vertices.push(left(x));
                vertices.push(right(x));
            }
        }
        let mut arcs = Vec::new();
        for x in 0..last {
            arcs.push(ArcSpec::new(&format!("aL{x}"), &left(x + 1), &left(x)));
        }
        for x in 1..=last {
            arcs.push(ArcSpec::new(&format!("aR{x}"), &right(x - 1), &right(x)));
        }
        let ins = [
            TailSpec::named(1, &right(0), "aR0"),
            TailSpec::named(2, &left(last), &format!("aL{last}")),
        ];
        let outs = [
            TailSpec::named(1, &left(0), "aL-1"),
            TailSpec::named(2, &right(last), &format!("aR{}", last + 1)),
        ];
        let graph = GraphWithTails::build(&vertices, &arcs, &ins, &outs).expect("line graph is balanced");

        let mut coins = Vec::with_capacity(graph.vertex_count());
        for v in graph.vertices() {
            let name = graph.vertex_name(v);
            let Some(x) = name.strip_prefix('x').and_then(|s| s.parse::<i64>().ok()) else {
                coins.push(DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)));
                continue;
            };
            let c = &self.coins[barrier(x).expect("barrier vertex")];
            // coin columns (a_L(x), a_R(x)), rows (a_L(x-1), a_R(x+1))
            let col_of = |arc: &str| if arc == format!("aL{x}") { 0 } else { 1 };
            let row_of = |arc: &str| if arc == format!("aL{}", x - 1) { 0 } else { 1 };
            let ins = graph.in_slots(v);
            let outs = graph.out_slots(v);
            let m = DMatrix::from_fn(2, 2, |i, j| {
                c[(row_of(&graph.arc(outs[i]).name), col_of(&graph.arc(ins[j]).name))]
            });
            coins.push(m);
        }
        let coins = CoinFamily::constant(&graph, &coins).expect("coin shapes match degrees");
        WalkFamily::new(graph, coins)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn symmetric_db() -> BarrierSpec {
        let coin = Coin::new(c(0.6, 0.0), c(0.8, 0.0), c(-0.8, 0.0), c(0.6, 0.0));
        BarrierSpec::new(vec![0, 1], vec![coin, coin]).unwrap()
    }

    #[test]
    fn identity_transfer() {
        let z = Complex64::from_polar(1.0, 0.3);
        let t = transfer_matrix(&Coin::identity(), z).unwrap();
        assert!((t - Coin::new(z, c(0.0, 0.0), c(0.0, 0.0), 1.0 / z)).norm() < 1e-15);
        let reflect = Coin::new(c(0.0, 0.0), c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 0.0));
        assert!(matches!(transfer_matrix(&reflect, z), Err(LineError::ZeroCorner(_))));
    }

    #[test]
    fn transfer_recursion_solves_the_eigen_equation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let z = Complex64::from_polar(1.0, 0.77);
        let coins: Vec<Coin> = (0..5)
            .map(|_| {
                let u = crate::models::haar_unitary(2, &mut rng);
                Coin::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)])
            })
            .collect();
        // phi1[x + 1] = φ₁(x), phi2[x + 1] = φ₂(x) for x = -1..=5
        let mut phi1 = vec![c(0.0, 0.0); 7];
        let mut phi2 = vec![c(0.0, 0.0); 7];
        phi1[0] = c(rng.random(), rng.random());
        phi2[1] = c(rng.random(), rng.random());
        for x in 0..5usize {
            let t = transfer_matrix(&coins[x], z).unwrap();
            let next = t * nalgebra::Vector2::new(phi1[x], phi2[x + 1]);
            phi1[x + 1] = next[0];
            phi2[x + 2] = next[1];
        }
        for x in 0..5usize {
            let cx = &coins[x];
            let here = nalgebra::Vector2::new(phi1[x + 1], phi2[x + 1]);
            let image = cx * here;
            assert!((z * phi1[x] - image[0]).norm() < 1e-12);
            assert!((z * phi2[x + 2] - image[1]).norm() < 1e-12);
        }
    }

    #[test]
    fn symmetric_double_barrier() {
        let s = symmetric_db();
        for z in [Complex64::i(), -Complex64::i()] {
            assert!((s.double_barrier(z).unwrap().transmission - 1.0).abs() < 1e-12);
        }
        let mut res = s.double_barrier_resonances().unwrap();
        res.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((res[0] - c(0.0, -0.8)).norm() < 1e-12);
        assert!((res[1] - c(0.0, 0.8)).norm() < 1e-12);
        assert!((s.double_barrier_symmetry().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn peaks_are_radial_projections_of_resonances() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let u = crate::models::haar_unitary(2, &mut rng);
            let v = crate::models::haar_unitary(2, &mut rng);
            let c0 = Coin::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
            let c1 = Coin::new(v[(0, 0)], v[(0, 1)], v[(1, 0)], v[(1, 1)]);
            let lhs = (-c0[(1, 0)] * c1.determinant() / c1[(1, 0)]).arg();
            let rhs = (c0[(1, 0)] * c1[(0, 1)]).arg();
            let diff = (lhs - rhs).rem_euclid(2.0 * PI);
            assert!(diff.min(2.0 * PI - diff) < 1e-10);
        }
    }

    #[test]
    fn triple_barrier_example() {
        let spec = BarrierSpec::new(
            vec![0, 2, 3],
            vec![rotation_coin(0.5), rotation_coin(0.4), rotation_coin(0.75)],
        )
        .unwrap();
        let r = spec.triple_barrier(Complex64::i()).unwrap();
        assert!((r.transmission - 1.0).abs() < 1e-10);
        assert!(r.reflection < 1e-20);
        let off = BarrierSpec::new(
            vec![0, 2, 3],
            vec![rotation_coin(0.5), rotation_coin(0.41), rotation_coin(0.75)],
        )
        .unwrap();
        assert!(off.triple_barrier(Complex64::i()).unwrap().reflection > 0.0);
    }

    #[test]
    fn closed_forms_conserve_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let r: Vec<f64> = (0..3).map(|_| rng.random_range(-0.95..0.95)).collect();
            let spec = BarrierSpec::new(vec![0, 2, 5], r.iter().map(|&x| rotation_coin(x)).collect()).unwrap();
            let db = BarrierSpec::new(vec![0, 3], vec![rotation_coin(r[0]), rotation_coin(r[1])]).unwrap();
            let z = Complex64::from_polar(1.0, rng.random_range(0.0..2.0 * PI));
            let t = spec.triple_barrier(z).unwrap();
            assert!((t.transmission + t.reflection - 1.0).abs() < 1e-10);
            let d = db.double_barrier(z).unwrap();
            assert!((d.transmission + d.reflection - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(BarrierSpec::new(vec![1, 2], vec![Coin::identity(); 2]).is_err());
        assert!(BarrierSpec::new(vec![0, 0], vec![Coin::identity(); 2]).is_err());
        assert!(BarrierSpec::new(vec![0, 1], vec![Coin::identity()]).is_err());
        let bad = Coin::new(c(1.0, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(1.0, 0.0));
        assert!(matches!(
            BarrierSpec::new(vec![0, 1], vec![bad, Coin::identity()]),
            Err(LineError::NotUnitary { .. })
        ));
    }

    #[test]
    fn graph_shape() {
        let spec = BarrierSpec::new(
            vec![0, 2, 3],
            vec![rotation_coin(0.5), rotation_coin(0.4), rotation_coin(0.75)],
        )
        .unwrap();
        let fam = spec.to_graph();
        assert_eq!(fam.graph.tail_count(), 2);
        assert_eq!(fam.graph.interior_arc_count(), 6);
        assert_eq!(fam.graph.vertex_count(), 5);
    }
}
