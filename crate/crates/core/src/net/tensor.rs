use super::real::Real;

/// Dense `(channels, height, width)` array, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<R> {
    pub c: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<R>,
}

impl<R: Real> Tensor<R> {
    pub fn zeros(c: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            h,
            w,
            data: vec![R::zero(); c * h * w],
        }
    }

    /// Panics if `data.len() != c * h * w`.
    pub fn from_vec(c: usize, h: usize, w: usize, data: Vec<R>) -> Self {
        assert_eq!(data.len(), c * h * w, "tensor data length");
        Self { c, h, w, data }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.c, self.h, self.w)
    }

    pub fn plane(&self) -> usize {
        self.h * self.w
    }

    pub fn channel(&self, c: usize) -> &[R] {
        let p = self.plane();
        &self.data[c * p..(c + 1) * p]
    }

    pub fn at(&self, c: usize, y: usize, x: usize) -> R {
        self.data[(c * self.h + y) * self.w + x]
    }

    /// Rolls every channel by `k` columns (periodic in width).
    pub fn roll_lon(&self, k: isize) -> Self {
        let mut out = Self::zeros(self.c, self.h, self.w);
        let w = self.w as isize;
        for c in 0..self.c {
            for y in 0..self.h {
                for x in 0..self.w {
                    let dst = (x as isize + k).rem_euclid(w) as usize;
                    out.data[(c * self.h + y) * self.w + dst] = self.at(c, y, x);
                }
            }
        }
        out
    }

    pub fn map<S: Real>(&self, f: impl Fn(R) -> S) -> Tensor<S> {
        Tensor {
            c: self.c,
            h: self.h,
            w: self.w,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}
