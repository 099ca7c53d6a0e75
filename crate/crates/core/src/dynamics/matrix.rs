use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Dense 3×3 complex matrix in the basis (|1⟩, |2⟩, |3⟩).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat3(pub [[Complex64; 3]; 3]);

impl Default for Mat3 {
    fn default() -> Self {
        Mat3::zero()
    }
}

impl Mat3 {
    pub const fn zero() -> Self {
        Mat3([[ZERO; 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Mat3::zero();
        for i in 0..3 {
            m.0[i][i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    /// `|a⟩⟨b|` for basis indices `a`, `b` (0-based).
    pub fn unit(a: usize, b: usize) -> Self {
        let mut m = Mat3::zero();
        m.0[a][b] = Complex64::new(1.0, 0.0);
        m
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i].conj();
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = *self;
        for row in &mut m.0 {
            for x in row {
                *x *= s;
            }
        }
        m
    }

    /// `self + s·other`
    pub fn add_scaled(&self, other: &Mat3, s: f64) -> Self {
        let mut m = *self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] += other.0[i][j] * s;
            }
        }
        m
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flat_map(|r| r.iter())
            .fold(0.0, |acc, x| acc.max(x.norm()))
    }

    /// `‖A − A†‖∞` over entries.
    pub fn hermiticity_error(&self) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..3 {
            e = e.max(self.0[i][i].im.abs() * 2.0);
            for j in (i + 1)..3 {
                e = e.max((self.0[i][j] - self.0[j][i].conj()).norm());
            }
        }
        e
    }

    /// Replace `A` by `(A + A†)/2`.
    pub fn symmetrize(&mut self) {
        for i in 0..3 {
            self.0[i][i].im = 0.0;
            for j in (i + 1)..3 {
                let avg = (self.0[i][j] + self.0[j][i].conj()) * 0.5;
                self.0[i][j] = avg;
                self.0[j][i] = avg.conj();
            }
        }
    }

    /// `[A, B] = AB − BA`
    pub fn commutator(&self, other: &Mat3) -> Self {
        *self * *other - *other * *self
    }

    /// Whether `A + tol·I` admits a Cholesky factorization, i.e. every
    /// eigenvalue of the Hermitian part is above `-tol`.
    #[allow(clippy::needless_range_loop)]
    pub fn is_positive_within(&self, tol: f64) -> bool {
        let mut a = *self;
        a.symmetrize();
        for i in 0..3 {
            a.0[i][i].re += tol;
        }
        let mut l = [[ZERO; 3]; 3];
        for j in 0..3 {
            let mut d = a.0[j][j].re;
            for k in 0..j {
                d -= l[j][k].norm_sqr();
            }
            if !(d > 0.0) {
                return false;
            }
            let djj = d.sqrt();
            l[j][j] = Complex64::new(djj, 0.0);
            for i in (j + 1)..3 {
                let mut s = a.0[i][j];
                for k in 0..j {
                    s -= l[i][k] * l[j][k].conj();
                }
                l[i][j] = s / djj;
            }
        }
        true
    }
}

impl Index<(usize, usize)> for Mat3 {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.0[i][j]
    }
}

impl IndexMut<(usize, usize)> for Mat3 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.0[i][j]
    }
}

impl Add for Mat3 {
    type Output = Mat3;

    fn add(self, rhs: Mat3) -> Mat3 {
        self.add_scaled(&rhs, 1.0)
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        *self = *self + rhs;
    }
}

impl Sub for Mat3 {
    type Output = Mat3;

    fn sub(self, rhs: Mat3) -> Mat3 {
        self.add_scaled(&rhs, -1.0)
    }
}

impl Mul for Mat3 {
    type Output = Mat3;

    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut m = Mat3::zero();
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][0] * rhs.0[0][j]
                    + self.0[i][1] * rhs.0[1][j]
                    + self.0[i][2] * rhs.0[2][j];
            }
        }
        m
    }
}
