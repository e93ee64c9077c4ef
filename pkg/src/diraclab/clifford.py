"""Real Clifford algebra with generators that square to -1.

Basis blades are encoded as bitmasks: bit i set means generator e_{i+1} is
present, and a blade's generators are always kept in increasing index order.
The empty mask is the scalar unit. Products carry a sign from reordering
generators into canonical order plus a factor -1 for every repeated generator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .errors import InvalidArgumentError

__all__ = ["Blade", "Multivector", "blade_mul", "mv_mul", "embed_vector"]


@dataclass(frozen=True)
class Blade:
    """A basis blade of the algebra on d generators."""

    mask: int
    d: int

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgumentError(f"need at least one generator, got d={self.d}")
        if not 0 <= self.mask < (1 << self.d):
            raise InvalidArgumentError(
                f"blade mask {self.mask} out of range for d={self.d}"
            )

    @property
    def grade(self) -> int:
        return self.mask.bit_count()


def _reorder_sign(a: int, b: int) -> int:
    """Sign from moving the generators of mask b past those of mask a.

    Counts, for every generator in a, how many generators of b it must jump
    over to reach canonical (increasing) order in the concatenation a then b.
    """
    count = 0
    a >>= 1
    while a:
        count += (a & b).bit_count()
        a >>= 1
    return -1 if count % 2 else 1


def blade_mul(a: Blade, b: Blade) -> tuple[int, Blade]:
    """Product of two basis blades: (sign, resulting blade).

    Repeated generators annihilate in pairs, each contributing a factor -1.
    """
    if a.d != b.d:
        raise InvalidArgumentError(f"blade dimensions differ: {a.d} vs {b.d}")
    sign = _reorder_sign(a.mask, b.mask)
    if (a.mask & b.mask).bit_count() % 2:
        sign = -sign
    return sign, Blade(a.mask ^ b.mask, a.d)


class Multivector:
    """A finite real combination of basis blades, stored sparsely by mask."""

    __slots__ = ("d", "coeffs")

    def __init__(self, d: int, coeffs: Mapping[int, float] | None = None):
        if d < 1:
            raise InvalidArgumentError(f"need at least one generator, got d={d}")
        self.d = d
        self.coeffs: dict[int, float] = {}
        if coeffs:
            for mask, c in coeffs.items():
                if not 0 <= mask < (1 << d):
                    raise InvalidArgumentError(
                        f"blade mask {mask} out of range for d={d}"
                    )
                if c != 0.0:
                    self.coeffs[int(mask)] = float(c)

    @classmethod
    def scalar(cls, d: int, value: float) -> "Multivector":
        return cls(d, {0: value})

    @classmethod
    def basis_vector(cls, d: int, j: int) -> "Multivector":
        """The generator e_j, 1-based."""
        if not 1 <= j <= d:
            raise InvalidArgumentError(f"generator index {j} out of range 1..{d}")
        return cls(d, {1 << (j - 1): 1.0})

    def component(self, mask: int) -> float:
        return self.coeffs.get(mask, 0.0)

    def grade_part(self, k: int) -> "Multivector":
        return Multivector(
            self.d, {m: c for m, c in self.coeffs.items() if m.bit_count() == k}
        )

    def norm(self) -> float:
        """Euclidean norm of the coefficient vector."""
        return sum(c * c for c in self.coeffs.values()) ** 0.5

    def _check_same(self, other: "Multivector"):
        if not isinstance(other, Multivector):
            raise InvalidArgumentError(f"expected Multivector, got {type(other)!r}")
        if self.d != other.d:
            raise InvalidArgumentError(
                f"multivector dimensions differ: {self.d} vs {other.d}"
            )

    def __add__(self, other: "Multivector") -> "Multivector":
        self._check_same(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0.0) + c
        return Multivector(self.d, out)

    def __sub__(self, other: "Multivector") -> "Multivector":
        self._check_same(other)
        out = dict(self.coeffs)
        for m, c in other.coeffs.items():
            out[m] = out.get(m, 0.0) - c
        return Multivector(self.d, out)

    def __neg__(self) -> "Multivector":
        return Multivector(self.d, {m: -c for m, c in self.coeffs.items()})

    def scale(self, value: float) -> "Multivector":
        return Multivector(self.d, {m: value * c for m, c in self.coeffs.items()})

    def __mul__(self, other: "Multivector") -> "Multivector":
        return mv_mul(self, other)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Multivector)
            and self.d == other.d
            and self.coeffs == other.coeffs
        )

    def approx_equal(self, other: "Multivector", tol: float = 1e-12) -> bool:
        self._check_same(other)
        masks = set(self.coeffs) | set(other.coeffs)
        return all(abs(self.component(m) - other.component(m)) <= tol for m in masks)

    def __repr__(self) -> str:
        if not self.coeffs:
            return f"Multivector(d={self.d}, 0)"
        parts = []
        for m in sorted(self.coeffs):
            gens = "".join(f"e{i + 1}" for i in range(self.d) if m >> i & 1) or "1"
            parts.append(f"{self.coeffs[m]!r}*{gens}")
        return f"Multivector(d={self.d}, {' + '.join(parts)})"

    def to_json_obj(self) -> dict:
        return {
            "d": self.d,
            "terms": [{"mask": m, "c": self.coeffs[m]} for m in sorted(self.coeffs)],
        }

    @classmethod
    def from_json_obj(cls, obj: Mapping) -> "Multivector":
        try:
            d = int(obj["d"])
            coeffs = {int(t["mask"]): float(t["c"]) for t in obj["terms"]}
        except (KeyError, TypeError) as exc:
            raise InvalidArgumentError(f"malformed multivector object: {exc}") from exc
        return cls(d, coeffs)


def mv_mul(x: Multivector, y: Multivector) -> Multivector:
    """Bilinear extension of the blade product."""
    x._check_same(y)
    out: dict[int, float] = {}
    for ma, ca in x.coeffs.items():
        for mb, cb in y.coeffs.items():
            sign = _reorder_sign(ma, mb)
            if (ma & mb).bit_count() % 2:
                sign = -sign
            m = ma ^ mb
            out[m] = out.get(m, 0.0) + sign * ca * cb
    return Multivector(x.d, out)


def embed_vector(coords: Iterable[float]) -> Multivector:
    """Grade-one element sum_j coords[j] e_{j+1}."""
    coords = list(coords)
    if not coords:
        raise InvalidArgumentError("empty coordinate vector")
    return Multivector(len(coords), {1 << i: float(c) for i, c in enumerate(coords)})
