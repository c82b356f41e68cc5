# moebius_map.py
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from CGM_Engine.calculus.jets import Jet, jet_einsum
from CGM_Engine.exceptions import MoebiusValidityError
from CGM_Engine.messages import MoebiusMessages, format_message
from CGM_Engine.tolerance_rules import MoebiusRules

TRANSLATION = "translation"
ROTATION = "rotation"
DILATION = "dilation"
INVERSION = "inversion"

PRIMITIVES = (TRANSLATION, ROTATION, DILATION, INVERSION)


def _lightcone(Z: np.ndarray):
    """Split a vector of R^{6,1} into (z, s, p) with s = z7 - z6 and p = z7 + z6."""
    return Z[:5], Z[6] - Z[5], Z[6] + Z[5]


def _assemble(z, s, p) -> np.ndarray:
    return np.concatenate([z, [(p - s) / 2.0, (p + s) / 2.0]])


def _matrix(fn) -> np.ndarray:
    return np.stack([fn(e) for e in np.eye(7)], axis=1)


class MoebiusPrimitive:
    def __init__(self, kind: str, value: Any):
        if kind not in PRIMITIVES:
            raise ValueError(format_message(MoebiusMessages.UNKNOWN_PRIMITIVE, kind=kind))
        self._kind = kind
        if kind == DILATION:
            factor = float(value)
            if not factor > 0:
                raise ValueError(format_message(MoebiusMessages.BAD_DILATION, factor=factor))
            self._value = factor
        elif kind == ROTATION:
            O = np.asarray(value, dtype=float)
            residual = float(np.max(np.abs(O.T @ O - np.eye(5)))) if O.shape == (5, 5) else np.inf
            if residual > 1e-10 or np.linalg.det(O) < 0:
                raise ValueError(format_message(MoebiusMessages.BAD_ROTATION, residual=residual))
            self._value = O
        else:
            vector = np.asarray(value, dtype=float).ravel()
            if vector.shape != (5,):
                key = "translation" if kind == TRANSLATION else "center"
                raise ValueError(MoebiusRules.ERRORS[key])
            self._value = vector

    @property
    def kind(self) -> str:
        return self._kind

    @property
    def value(self):
        return self._value.copy() if isinstance(self._value, np.ndarray) else self._value

    @property
    def orientation(self) -> int:
        """+1 for orientation preserving primitives, -1 for inversions"""
        return -1 if self._kind == INVERSION else 1

    def apply(self, x: Jet) -> Jet:
        """Apply the primitive to a jet of points of R^5."""
        if self._kind == TRANSLATION:
            return x + self._value
        if self._kind == DILATION:
            return self._value * x
        if self._kind == ROTATION:
            return jet_einsum("a,ba->b", x, self._value)
        shifted = x - self._value
        return shifted * jet_einsum("a,a->", shifted, shifted).reciprocal() + self._value

    def apply_points(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.apply(Jet.constant(x, 0)).value

    def lorentz_matrix(self) -> np.ndarray:
        """Linear map of R^{6,1} carrying null lifts (and conformal Gauss maps) of x to those of the image."""
        if self._kind == TRANSLATION:
            v = self._value

            def fn(Z):
                z, s, p = _lightcone(Z)
                return _assemble(z + v * s, s, p + 2.0 * v @ z + (v @ v) * s)

        elif self._kind == DILATION:
            lam = self._value

            def fn(Z):
                z, s, p = _lightcone(Z)
                return _assemble(z, s / lam, lam * p)

        elif self._kind == ROTATION:
            O = self._value

            def fn(Z):
                z, s, p = _lightcone(Z)
                return _assemble(O @ z, s, p)

        else:
            to_origin = MoebiusPrimitive(TRANSLATION, -self._value).lorentz_matrix()
            back = MoebiusPrimitive(TRANSLATION, self._value).lorentz_matrix()
            reflection = np.eye(7)
            reflection[5, 5] = -1.0
            return back @ reflection @ to_origin
        return _matrix(fn)

    def to_dict(self) -> Dict[str, Any]:
        value = self._value.tolist() if isinstance(self._value, np.ndarray) else self._value
        return {"kind": self._kind, "value": value}

    def __repr__(self):
        return f"MoebiusPrimitive({self._kind}={self.to_dict()['value']})"


class MoebiusMap:
    """Composition of primitives, applied left to right."""

    def __init__(self, primitives: Optional[Sequence[MoebiusPrimitive]] = None):
        self._primitives: List[MoebiusPrimitive] = list(primitives or [])

    @property
    def primitives(self) -> List[MoebiusPrimitive]:
        """Get primitives list (read-only)"""
        return self._primitives.copy()

    @property
    def is_identity(self) -> bool:
        return not self._primitives

    @property
    def orientation(self) -> int:
        sign = 1
        for primitive in self._primitives:
            sign *= primitive.orientation
        return sign

    def add_primitive(self, kind: str, value: Any) -> "MoebiusMap":
        """Append a primitive and return self for chaining"""
        self._primitives.append(MoebiusPrimitive(kind, value))
        return self

    def then(self, other: "MoebiusMap") -> "MoebiusMap":
        """The map x -> other(self(x))"""
        return MoebiusMap(self._primitives + other.primitives)

    def apply(self, x: Jet) -> Jet:
        for primitive in self._primitives:
            x = primitive.apply(x)
        return x

    def apply_points(self, x: np.ndarray) -> np.ndarray:
        return self.apply(Jet.constant(np.atleast_2d(np.asarray(x, dtype=float)), 0)).value

    def check_valid(self, x: np.ndarray, nodes: Optional[np.ndarray] = None) -> None:
        """Raise MoebiusValidityError when an inversion centre comes within the validity radius of a point.

        Args:
            x: points of R^5 on the surface, shape (n, 5)
            nodes: parameter points reported with the error (defaults to x)
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        nodes = x if nodes is None else np.atleast_2d(nodes)
        for primitive in self._primitives:
            if primitive.kind == INVERSION:
                distance = np.linalg.norm(x - primitive.value, axis=1)
                bad = distance < MoebiusRules.INVERSION_RADIUS
                if np.any(bad):
                    k = int(np.argmax(bad))
                    node = nodes[k].tolist()
                    raise MoebiusValidityError(
                        format_message(
                            MoebiusMessages.INVERSION_TOO_CLOSE,
                            center=primitive.value.tolist(),
                            radius=MoebiusRules.INVERSION_RADIUS,
                            node=node,
                        ),
                        node=node,
                    )
            x = primitive.apply_points(x)

    def lorentz_matrix(self) -> np.ndarray:
        M = np.eye(7)
        for primitive in self._primitives:
            M = primitive.lorentz_matrix() @ M
        return M

    @classmethod
    def from_cli(cls, text: str) -> "MoebiusMap":
        """Parse 'dilation:2', 'translation:1,0,0,0,0', 'inversion:8,0,0,0,0' or 'rotation:i,j,angle',
        several joined with '+'."""
        m = cls()
        for part in filter(None, (p.strip() for p in text.split("+"))):
            kind, _, rest = part.partition(":")
            values = [float(x) for x in rest.split(",") if x.strip()]
            if kind == DILATION:
                m.add_primitive(DILATION, values[0] if values else 1.0)
            elif kind == ROTATION:
                if len(values) != 3:
                    raise ValueError("rotation expects i,j,angle")
                i, j, angle = int(values[0]), int(values[1]), values[2]
                O = np.eye(5)
                O[i, i] = O[j, j] = np.cos(angle)
                O[i, j], O[j, i] = -np.sin(angle), np.sin(angle)
                m.add_primitive(ROTATION, O)
            else:
                m.add_primitive(kind, values)
        return m

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MoebiusMap":
        return cls([MoebiusPrimitive(p["kind"], p["value"]) for p in data.get("primitives", [])])

    def to_dict(self) -> Dict[str, Any]:
        return {"primitives": [p.to_dict() for p in self._primitives]}

    def __repr__(self):
        return f"MoebiusMap({' -> '.join(p.kind for p in self._primitives) or 'identity'})"
