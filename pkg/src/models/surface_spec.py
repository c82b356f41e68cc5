# surface_spec.py
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from CGM_Engine.exceptions import SurfaceValidationError
from CGM_Engine.messages import SurfaceMessages, format_message

SPHERE = "sphere"
TORUS = "torus"
PERTURBED_SPHERE = "perturbed-sphere"
PATCH_R2XS2 = "patch-r2xs2"
PATCH_RXS3 = "patch-rxs3"
CUSTOM = "custom"

KINDS = (SPHERE, TORUS, PERTURBED_SPHERE, PATCH_R2XS2, PATCH_RXS3, CUSTOM)

# max |p| of each perturbation polynomial on the unit sphere
PERTURBATIONS = {"x1x2": 0.5, "x1": 1.0, "x5": 1.0, "x1x1-x2x2": 1.0}

# |amplitude| * max|p| must stay below this for the radial graph
PERTURBATION_LIMIT = 0.5
TORUS_AMPLITUDE_LIMIT = 0.5


class CustomChartSpec:
    """A user supplied chart: evaluator on jets plus its parameter box."""

    def __init__(
        self,
        evaluator: Callable,
        lower: Sequence[float],
        upper: Sequence[float],
        axis_rules: Sequence[str] = ("legendre",) * 4,
        euler_characteristic: Optional[int] = None,
        closed: bool = False,
        name: str = "custom",
    ):
        if not callable(evaluator):
            raise TypeError("Custom chart evaluator must be callable")
        self.evaluator = evaluator
        self.lower = tuple(float(x) for x in lower)
        self.upper = tuple(float(x) for x in upper)
        self.axis_rules = tuple(axis_rules)
        self.euler_characteristic = euler_characteristic
        self.closed = bool(closed)
        self.name = name

    def __repr__(self):
        return f"CustomChartSpec(name='{self.name}', closed={self.closed})"


class SurfaceSpec:
    def __init__(
        self,
        kind: str,
        radius: float = 1.0,
        center: Optional[Sequence[float]] = None,
        major_radius: float = 2.0,
        minor_radius: float = 1.0,
        amplitude: float = 0.0,
        perturbation: str = "x1x2",
        length: float = 1.0,
        normal_sign: int = 1,
        custom: Optional[CustomChartSpec] = None,
    ):
        self.kind = kind
        self._radius = float(radius)
        self.center = center if center is not None else (0.0,) * 5
        self._major_radius = float(major_radius)
        self._minor_radius = float(minor_radius)
        self._amplitude = float(amplitude)
        self._perturbation = perturbation
        self._length = float(length)
        self.normal_sign = normal_sign
        self._custom = custom

    # Properties (Getters/Setters)
    @property
    def kind(self) -> str:
        """Get surface kind"""
        return self._kind

    @kind.setter
    def kind(self, value: str) -> None:
        """Set surface kind with validation"""
        if value not in KINDS:
            raise SurfaceValidationError(format_message(SurfaceMessages.UNKNOWN_KIND, kind=value))
        self._kind = value

    @property
    def center(self) -> np.ndarray:
        """Get centre (copy)"""
        return self._center.copy()

    @center.setter
    def center(self, value: Sequence[float]) -> None:
        """Set centre with validation"""
        center = np.asarray(value, dtype=float).ravel()
        if center.shape != (5,):
            raise SurfaceValidationError(format_message(SurfaceMessages.CENTER_DIMENSION, count=center.size))
        self._center = center

    @property
    def normal_sign(self) -> int:
        """Get orientation flag (+1 keeps the catalog orientation, -1 flips it)"""
        return self._normal_sign

    @normal_sign.setter
    def normal_sign(self, value: int) -> None:
        if value not in (1, -1):
            raise SurfaceValidationError("Normal sign must be +1 or -1")
        self._normal_sign = int(value)

    @property
    def radius(self) -> float:
        return self._radius

    @property
    def major_radius(self) -> float:
        return self._major_radius

    @property
    def minor_radius(self) -> float:
        return self._minor_radius

    @property
    def amplitude(self) -> float:
        return self._amplitude

    @property
    def perturbation(self) -> str:
        return self._perturbation

    @property
    def length(self) -> float:
        return self._length

    @property
    def custom(self) -> Optional[CustomChartSpec]:
        return self._custom

    @property
    def is_closed(self) -> bool:
        if self._kind == CUSTOM:
            return self._custom is not None and self._custom.closed
        return self._kind in (SPHERE, TORUS, PERTURBED_SPHERE)

    @property
    def label(self) -> str:
        """Short human readable identifier used in logs and reports"""
        if self._kind == SPHERE:
            return f"sphere(r={self._radius:g})"
        if self._kind == TORUS:
            extra = f", amp={self._amplitude:g}" if self._amplitude else ""
            return f"torus(R={self._major_radius:g}, a={self._minor_radius:g}{extra})"
        if self._kind == PERTURBED_SPHERE:
            return f"perturbed-sphere(r={self._radius:g}, eps={self._amplitude:g}, p={self._perturbation})"
        if self._kind in (PATCH_R2XS2, PATCH_RXS3):
            return f"{self._kind}(L={self._length:g})"
        return self._custom.name if self._custom else CUSTOM

    def validate(self) -> None:
        """Check the parameter invariants of the kind; raises SurfaceValidationError."""
        kind = self._kind
        if kind in (SPHERE, PERTURBED_SPHERE):
            _positive("radius", self._radius)
        if kind == PERTURBED_SPHERE:
            if self._perturbation not in PERTURBATIONS:
                raise SurfaceValidationError(
                    format_message(
                        SurfaceMessages.UNKNOWN_PERTURBATION,
                        pid=self._perturbation,
                        choices=", ".join(PERTURBATIONS),
                    )
                )
            if abs(self._amplitude) * PERTURBATIONS[self._perturbation] >= PERTURBATION_LIMIT:
                limit = PERTURBATION_LIMIT / PERTURBATIONS[self._perturbation]
                raise SurfaceValidationError(
                    format_message(SurfaceMessages.AMPLITUDE_TOO_LARGE, amplitude=self._amplitude, limit=limit)
                )
        if kind == TORUS:
            _positive("major radius", self._major_radius)
            _positive("minor radius", self._minor_radius)
            if abs(self._amplitude) >= TORUS_AMPLITUDE_LIMIT:
                raise SurfaceValidationError(
                    format_message(
                        SurfaceMessages.AMPLITUDE_TOO_LARGE,
                        amplitude=self._amplitude,
                        limit=TORUS_AMPLITUDE_LIMIT,
                    )
                )
            if self._major_radius <= self._minor_radius * (1.0 + abs(self._amplitude)):
                raise SurfaceValidationError(
                    format_message(
                        SurfaceMessages.TORUS_NOT_EMBEDDED,
                        R=self._major_radius,
                        a=self._minor_radius,
                        amplitude=self._amplitude,
                    )
                )
        if kind in (PATCH_R2XS2, PATCH_RXS3):
            _positive("length", self._length)
        if kind == CUSTOM and self._custom is None:
            raise SurfaceValidationError("Custom surface needs a CustomChartSpec")

    @classmethod
    def from_cli(cls, text: str, normal_sign: int = 1) -> "SurfaceSpec":
        """Parse 'sphere[:r]', 'torus[:R,a[,amp]]', 'perturbed-sphere[:r,eps,pid]',
        'patch-r2xs2[:L]' or 'patch-rxs3[:L]'."""
        kind, _, rest = text.strip().partition(":")
        args = [x.strip() for x in rest.split(",")] if rest else []
        try:
            if kind == SPHERE:
                return cls(SPHERE, radius=float(args[0]) if args else 1.0, normal_sign=normal_sign)
            if kind == TORUS:
                values = [float(x) for x in args]
                R, a, amp = (values + [2.0, 1.0, 0.0][len(values):])[:3]
                return cls(TORUS, major_radius=R, minor_radius=a, amplitude=amp, normal_sign=normal_sign)
            if kind == PERTURBED_SPHERE:
                r = float(args[0]) if len(args) > 0 else 1.0
                eps = float(args[1]) if len(args) > 1 else 0.05
                pid = args[2] if len(args) > 2 else "x1x2"
                return cls(PERTURBED_SPHERE, radius=r, amplitude=eps, perturbation=pid, normal_sign=normal_sign)
            if kind in (PATCH_R2XS2, PATCH_RXS3):
                return cls(kind, length=float(args[0]) if args else 1.0, normal_sign=normal_sign)
        except ValueError as e:
            raise SurfaceValidationError(f"Cannot parse surface '{text}': {e}") from e
        raise SurfaceValidationError(format_message(SurfaceMessages.UNKNOWN_KIND, kind=kind))

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SurfaceSpec":
        if data.get("kind") == CUSTOM:
            raise SurfaceValidationError(SurfaceMessages.CUSTOM_FROM_CONFIG)
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        """Convert SurfaceSpec to dictionary"""
        data = {"kind": self._kind, "normal_sign": self._normal_sign}
        if self._kind in (SPHERE, PERTURBED_SPHERE):
            data["radius"] = self._radius
            data["center"] = self._center.tolist()
        if self._kind == PERTURBED_SPHERE:
            data["amplitude"] = self._amplitude
            data["perturbation"] = self._perturbation
        if self._kind == TORUS:
            data.update(major_radius=self._major_radius, minor_radius=self._minor_radius, amplitude=self._amplitude)
        if self._kind in (PATCH_R2XS2, PATCH_RXS3):
            data["length"] = self._length
        if self._kind == CUSTOM:
            data["name"] = self.label
        return data

    def __repr__(self):
        return f"SurfaceSpec({self.label}, normal_sign={self._normal_sign:+d})"


def _positive(name: str, value: float) -> None:
    if not value > 0:
        raise SurfaceValidationError(format_message(SurfaceMessages.NON_POSITIVE, name=name, value=value))
