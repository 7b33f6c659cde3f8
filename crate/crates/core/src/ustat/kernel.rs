use crate::scalar::Real;

/// Tail behaviour of `h(X_1, ..., X_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail<T> {
    /// `sup h - inf h <= range`.
    Bounded { range: T },
    /// Sub-Gaussian with variance proxy `tau`.
    SubGaussian { tau: T },
}

/// A symmetric kernel of fixed degree over points of type `X`.
///
/// `eval` receives exactly `degree()` arguments and must not depend on their
/// order.
pub trait Kernel<X, T: Real>: Sync {
    fn degree(&self) -> usize;
    fn tail(&self) -> Tail<T>;
    fn eval(&self, args: &[&X]) -> T;
}

/// Kernel backed by a closure.
#[derive(Clone)]
pub struct FnKernel<F> {
    degree: usize,
    tail_kind: TailSpec,
    f: F,
}

#[derive(Debug, Clone, Copy)]
enum TailSpec {
    Bounded(f64),
    SubGaussian(f64),
}

impl<F> FnKernel<F> {
    pub fn bounded(degree: usize, range: f64, f: F) -> Self {
        Self { degree, tail_kind: TailSpec::Bounded(range), f }
    }

    pub fn sub_gaussian(degree: usize, tau: f64, f: F) -> Self {
        Self { degree, tail_kind: TailSpec::SubGaussian(tau), f }
    }
}

impl<X, T, F> Kernel<X, T> for FnKernel<F>
where
    T: Real,
    F: Fn(&[&X]) -> T + Sync,
{
    fn degree(&self) -> usize {
        self.degree
    }

    fn tail(&self) -> Tail<T> {
        match self.tail_kind {
            TailSpec::Bounded(c) => Tail::Bounded { range: T::lit(c) },
            TailSpec::SubGaussian(t) => Tail::SubGaussian { tau: T::lit(t) },
        }
    }

    fn eval(&self, args: &[&X]) -> T {
        (self.f)(args)
    }
}

impl<X, T: Real, K: Kernel<X, T> + ?Sized> Kernel<X, T> for &K {
    fn degree(&self) -> usize {
        (**self).degree()
    }
    fn tail(&self) -> Tail<T> {
        (**self).tail()
    }
    fn eval(&self, args: &[&X]) -> T {
        (**self).eval(args)
    }
}

/// Kernel that projects another kernel's output onto `[lo, hi]`.
pub struct Clipped<K, T> {
    pub inner: K,
    pub lo: T,
    pub hi: T,
}

impl<X, T: Real, K: Kernel<X, T>> Kernel<X, T> for Clipped<K, T> {
    fn degree(&self) -> usize {
        self.inner.degree()
    }

    fn tail(&self) -> Tail<T> {
        Tail::Bounded { range: self.hi - self.lo }
    }

    fn eval(&self, args: &[&X]) -> T {
        let v = self.inner.eval(args);
        if v < self.lo {
            self.lo
        } else if v > self.hi {
            self.hi
        } else {
            v
        }
    }
}
