"""
Linear operator algebra with exact adjoints

Every operator maps numpy arrays of a declared domain shape to arrays of a declared
codomain shape. Vectors are 1-D arrays, images are 2-D arrays; the inner product is
the canonical one (trace inner product on matrices).
"""

from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np
from scipy import ndimage

from ..exceptions import DimensionError


@dataclass(frozen=True)
class Shape:
    """Shape of a vector space element: vector(n) or matrix(m, n)"""

    dims: Tuple[int, ...]

    def __post_init__(self):
        if len(self.dims) not in (1, 2):
            raise ValueError(f"Only vector and matrix shapes are supported, got {self.dims}")
        if any(int(d) < 1 for d in self.dims):
            raise ValueError(f"All dimensions must be >= 1, got {self.dims}")
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))

    @classmethod
    def vector(cls, n: int) -> "Shape":
        return cls((n,))

    @classmethod
    def matrix(cls, m: int, n: int) -> "Shape":
        return cls((m, n))

    @classmethod
    def of(cls, x: np.ndarray) -> "Shape":
        return cls(tuple(np.shape(x)))

    @property
    def kind(self) -> str:
        return "vector" if len(self.dims) == 1 else "matrix"

    @property
    def size(self) -> int:
        return int(np.prod(self.dims))

    def zeros(self) -> np.ndarray:
        return np.zeros(self.dims)

    def __str__(self) -> str:
        return f"{self.kind}{self.dims}"


ShapeLike = Union[Shape, int, Tuple[int, ...]]


def as_shape(shape: ShapeLike) -> Shape:
    if isinstance(shape, Shape):
        return shape
    if isinstance(shape, (int, np.integer)):
        return Shape.vector(int(shape))
    return Shape(tuple(shape))


def inner(a: np.ndarray, b: np.ndarray) -> float:
    """Canonical inner product; trace inner product for matrices"""
    return float(np.vdot(np.ravel(a), np.ravel(b)))


class LinearMap(ABC):
    """Abstract linear operator with forward and adjoint application"""

    def __init__(self, domain: ShapeLike, codomain: ShapeLike):
        self.domain = as_shape(domain)
        self.codomain = as_shape(codomain)

    def apply(self, x: np.ndarray) -> np.ndarray:
        """Forward application A x"""
        x = np.asarray(x, dtype=float)
        if x.shape != self.domain.dims:
            raise DimensionError(self.domain, Shape.of(x), f"{type(self).__name__}.apply")
        return self._apply(x)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Adjoint application A* y"""
        y = np.asarray(y, dtype=float)
        if y.shape != self.codomain.dims:
            raise DimensionError(self.codomain, Shape.of(y), f"{type(self).__name__}.adjoint")
        return self._adjoint(y)

    @abstractmethod
    def _apply(self, x: np.ndarray) -> np.ndarray:
        pass

    @abstractmethod
    def _adjoint(self, y: np.ndarray) -> np.ndarray:
        pass

    def __matmul__(self, other: "LinearMap") -> "LinearMap":
        return compose(self, other)

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.domain} -> {self.codomain})"


class DenseMap(LinearMap):
    """Explicit matrix acting on vectors"""

    def __init__(self, matrix: np.ndarray):
        matrix = np.array(matrix, dtype=float)
        if matrix.ndim != 2:
            raise ValueError("Dense operators need a 2-D matrix")
        super().__init__(matrix.shape[1], matrix.shape[0])
        self.matrix = matrix
        self.matrix.setflags(write=False)

    def _apply(self, x):
        return self.matrix @ x

    def _adjoint(self, y):
        return self.matrix.T @ y

    def as_matrix(self) -> np.ndarray:
        return self.matrix

    def column_norms_squared(self) -> np.ndarray:
        return np.einsum("ij,ij->j", self.matrix, self.matrix)


class IdentityMap(LinearMap):
    """Identity on any vector or matrix space"""

    def __init__(self, shape: ShapeLike):
        shape = as_shape(shape)
        super().__init__(shape, shape)

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class DiagonalMap(LinearMap):
    """Elementwise scaling by fixed weights"""

    def __init__(self, weights: np.ndarray):
        weights = np.array(weights, dtype=float)
        shape = Shape.of(weights)
        super().__init__(shape, shape)
        self.weights = weights
        self.weights.setflags(write=False)

    @property
    def is_positive(self) -> bool:
        return bool(np.all(self.weights > 0))

    def _apply(self, x):
        return self.weights * x

    def _adjoint(self, y):
        return self.weights * y


class MaskMap(LinearMap):
    """Keeps the entries selected by a boolean pattern and stacks them into a vector"""

    def __init__(self, keep: np.ndarray):
        keep = np.array(keep, dtype=bool)
        n_kept = int(keep.sum())
        if n_kept < 1:
            raise ValueError("Mask must keep at least one entry")
        super().__init__(Shape.of(keep), n_kept)
        self.keep = keep
        self.keep.setflags(write=False)

    def _apply(self, x):
        return x[self.keep]

    def _adjoint(self, y):
        out = np.zeros(self.domain.dims)
        out[self.keep] = y
        return out


def _fold_symmetric(z: np.ndarray, k: int, axis: int) -> np.ndarray:
    # Transpose of numpy's "symmetric" padding along one axis.
    z = np.moveaxis(z, axis, 0)
    n = z.shape[0] - 2 * k
    out = z[k:k + n].copy()
    out[:k] += z[:k][::-1]
    out[n - k:] += z[n + k:][::-1]
    return np.moveaxis(out, 0, axis)


class Blur2DMap(LinearMap):
    """Uniform (2k+1)x(2k+1) blur with reflective (half-sample symmetric) boundary"""

    def __init__(self, shape: ShapeLike, half_width: int):
        shape = as_shape(shape)
        if shape.kind != "matrix":
            raise ValueError("Blur operators act on matrices")
        half_width = int(half_width)
        if half_width < 0:
            raise ValueError("Kernel half-width must be >= 0")
        if half_width > min(shape.dims):
            raise ValueError(f"Kernel half-width {half_width} exceeds image size {shape.dims}")
        super().__init__(shape, shape)
        self.half_width = half_width
        width = 2 * half_width + 1
        self.kernel = np.full((width, width), 1.0 / width ** 2)

    def _apply(self, x):
        k = self.half_width
        if k == 0:
            return x.copy()
        padded = np.pad(x, k, mode="symmetric")
        blurred = ndimage.convolve(padded, self.kernel, mode="constant", cval=0.0)
        return blurred[k:-k, k:-k]

    def _adjoint(self, y):
        k = self.half_width
        if k == 0:
            return y.copy()
        # correlation is the adjoint of the valid convolution; then undo the padding
        spread = ndimage.correlate(np.pad(y, k, mode="constant"), self.kernel,
                                   mode="constant", cval=0.0)
        return _fold_symmetric(_fold_symmetric(spread, k, axis=0), k, axis=1)


class ScaledMap(LinearMap):
    """c * inner"""

    def __init__(self, c: float, inner_op: LinearMap):
        super().__init__(inner_op.domain, inner_op.codomain)
        self.c = float(c)
        self.inner = inner_op

    def _apply(self, x):
        return self.c * self.inner._apply(x)

    def _adjoint(self, y):
        return self.c * self.inner._adjoint(y)


class CompositionMap(LinearMap):
    """outer o inner"""

    def __init__(self, outer: LinearMap, inner_op: LinearMap):
        if inner_op.codomain != outer.domain:
            raise DimensionError(outer.domain, inner_op.codomain, "composition")
        super().__init__(inner_op.domain, outer.codomain)
        self.outer = outer
        self.inner = inner_op

    def _apply(self, x):
        return self.outer._apply(self.inner._apply(x))

    def _adjoint(self, y):
        return self.inner._adjoint(self.outer._adjoint(y))


def compose(outer: LinearMap, inner_op: LinearMap) -> LinearMap:
    """Operator x -> outer(inner(x)); the adjoint composes in reverse order"""
    return CompositionMap(outer, inner_op)


def scale(c: float, op: LinearMap) -> LinearMap:
    return ScaledMap(c, op)


def adjoint_consistency(op: LinearMap, trials: int = 20, seed: int = 0) -> float:
    """
    Largest relative defect of the adjoint identity over random trials

    Returns max |<Ax, y> - <x, A*y>| / (1 + |<Ax, y>|) for reproducible random x, y.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.RandomState(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(op.domain.dims)
        y = rng.standard_normal(op.codomain.dims)
        lhs = inner(op.apply(x), y)
        rhs = inner(x, op.adjoint(y))
        worst = max(worst, abs(lhs - rhs) / (1.0 + abs(lhs)))
    return worst
