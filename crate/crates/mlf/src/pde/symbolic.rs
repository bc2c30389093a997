//! Scalar values carrying exact first and second derivatives w.r.t. the
//! spatial coordinates (d ≤ 3). Used to express exact solutions once and
//! derive source terms and boundary data from them instead of hand-typing
//! the differentiated formulas.

/// Value with exact gradient and Hessian; fixed-capacity for d ≤ 3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymVal {
    pub dim: usize,
    pub v: f64,
    pub g: [f64; 3],
    pub h: [f64; 9], // row-major d×d in the top-left corner
}

impl SymVal {
    pub fn constant(v: f64, dim: usize) -> Self {
        SymVal {
            dim,
            v,
            g: [0.0; 3],
            h: [0.0; 9],
        }
    }

    /// The coordinate `x_i` as a function of x.
    pub fn var(x: &[f64], i: usize) -> Self {
        let mut s = SymVal::constant(x[i], x.len());
        s.g[i] = 1.0;
        s
    }

    pub fn laplacian(&self) -> f64 {
        (0..self.dim).map(|p| self.h[p * 3 + p]).sum()
    }

    pub fn grad(&self) -> &[f64] {
        &self.g[..self.dim]
    }

    /// Chain rule through a scalar map with derivatives `f′`, `f″` at `self.v`.
    fn chain(&self, f: f64, fp: f64, fpp: f64) -> Self {
        let mut out = SymVal::constant(f, self.dim);
        for p in 0..self.dim {
            out.g[p] = fp * self.g[p];
        }
        for p in 0..self.dim {
            for q in 0..self.dim {
                out.h[p * 3 + q] = fp * self.h[p * 3 + q] + fpp * self.g[p] * self.g[q];
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }

    pub fn sin(&self) -> Self {
        self.chain(self.v.sin(), self.v.cos(), -self.v.sin())
    }

    pub fn cos(&self) -> Self {
        self.chain(self.v.cos(), -self.v.sin(), -self.v.cos())
    }

    pub fn atan(&self) -> Self {
        let den = 1.0 + self.v * self.v;
        self.chain(self.v.atan(), 1.0 / den, -2.0 * self.v / (den * den))
    }

    pub fn squared(&self) -> Self {
        *self * *self
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = *self;
        out.v *= k;
        for g in out.g.iter_mut() {
            *g *= k;
        }
        for h in out.h.iter_mut() {
            *h *= k;
        }
        out
    }
}

impl std::ops::Add for SymVal {
    type Output = SymVal;
    fn add(self, rhs: SymVal) -> SymVal {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = self;
        out.v += rhs.v;
        for (a, b) in out.g.iter_mut().zip(rhs.g) {
            *a += b;
        }
        for (a, b) in out.h.iter_mut().zip(rhs.h) {
            *a += b;
        }
        out
    }
}

impl std::ops::Sub for SymVal {
    type Output = SymVal;
    fn sub(self, rhs: SymVal) -> SymVal {
        self + rhs.scale(-1.0)
    }
}

impl std::ops::Mul for SymVal {
    type Output = SymVal;
    fn mul(self, rhs: SymVal) -> SymVal {
        debug_assert_eq!(self.dim, rhs.dim);
        let mut out = SymVal::constant(self.v * rhs.v, self.dim);
        for p in 0..self.dim {
            out.g[p] = self.g[p] * rhs.v + self.v * rhs.g[p];
        }
        for p in 0..self.dim {
            for q in 0..self.dim {
                out.h[p * 3 + q] = self.h[p * 3 + q] * rhs.v
                    + self.v * rhs.h[p * 3 + q]
                    + self.g[p] * rhs.g[q]
                    + rhs.g[p] * self.g[q];
            }
        }
        out
    }
}

impl std::ops::Neg for SymVal {
    type Output = SymVal;
    fn neg(self) -> SymVal {
        self.scale(-1.0)
    }
}
