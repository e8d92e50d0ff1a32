"""
Data models for acmcli.
"""
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Any

from .errors import InvalidDataError

DEFAULT_TOL = 1e-10

# Rows of the KO-dimension sign table, indexed by n mod 8: (eps, eps', eps'').
KO_TABLE: Dict[int, Tuple[int, int, Optional[int]]] = {
    0: (1, 1, 1),
    1: (1, -1, None),
    2: (-1, 1, -1),
    3: (-1, 1, None),
    4: (-1, 1, 1),
    5: (-1, -1, None),
    6: (1, 1, -1),
    7: (1, 1, None),
}


@dataclass(frozen=True)
class KOSignature:
    """Signs (eps, eps', eps'') of a real structure and the KO-dimension they fix."""
    n: int
    eps: int
    eps_prime: int
    eps_double_prime: Optional[int] = None

    def __post_init__(self) -> None:
        if KO_TABLE.get(self.n % 8) != (self.eps, self.eps_prime, self.eps_double_prime):
            raise InvalidDataError(
                f"signs ({self.eps}, {self.eps_prime}, {self.eps_double_prime}) "
                f"do not match KO-dimension {self.n}"
            )

    @classmethod
    def from_n(cls, n: int) -> "KOSignature":
        eps, eps_prime, eps_double_prime = KO_TABLE[n % 8]
        return cls(n % 8, eps, eps_prime, eps_double_prime)

    @staticmethod
    def match(eps: int, eps_prime: int, eps_double_prime: Optional[int]) -> Optional[int]:
        """Return the KO-dimension whose row equals the given signs, or None."""
        for n, row in KO_TABLE.items():
            if row == (eps, eps_prime, eps_double_prime):
                return n
        return None

    @property
    def even(self) -> bool:
        return self.eps_double_prime is not None


@dataclass(frozen=True)
class Slot:
    """One copy H_ij^alpha of V_i (x) conj(V_j) inside H_F (labels are 1-based)."""
    i: int
    j: int
    copy: int


@dataclass(frozen=True)
class KrajewskiData:
    """Combinatorial data of a finite real spectral triple.

    dims are the summand sizes N_i, pairs the multiset K (1-based labels, repeated
    for multiplicity), grading one sign per slot in sorted slot order.
    """
    dims: Tuple[int, ...]
    pairs: Tuple[Tuple[int, int], ...]
    ko: KOSignature
    grading: Optional[Tuple[int, ...]] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        object.__setattr__(self, "pairs", tuple((int(i), int(j)) for i, j in self.pairs))
        if self.grading is None and self.ko.eps_double_prime == 1:
            object.__setattr__(self, "grading", tuple(1 for _ in self.pairs))
        elif self.grading is not None:
            object.__setattr__(self, "grading", tuple(int(s) for s in self.grading))
        self.validate()

    @property
    def multiplicities(self) -> Counter:
        return Counter(self.pairs)

    @property
    def slots(self) -> List[Slot]:
        """Slots sorted by (i, j, copy)."""
        result: List[Slot] = []
        for (i, j), m in sorted(self.multiplicities.items()):
            result.extend(Slot(i, j, alpha) for alpha in range(m))
        return result

    @property
    def slot_sizes(self) -> List[int]:
        return [self.dims[s.i - 1] * self.dims[s.j - 1] for s in self.slots]

    @property
    def dim_h(self) -> int:
        return sum(self.slot_sizes)

    @property
    def even(self) -> bool:
        return self.grading is not None

    def partner(self, index: int) -> int:
        """Index of the slot that J maps slot `index` onto."""
        slots = self.slots
        s = slots[index]
        if s.i != s.j:
            return slots.index(Slot(s.j, s.i, s.copy))
        if self.ko.eps == 1:
            return index
        return slots.index(Slot(s.i, s.i, s.copy ^ 1))

    def validate(self) -> None:
        """Raise InvalidDataError unless every structural invariant holds."""
        if not self.dims or any(n < 1 for n in self.dims):
            raise InvalidDataError("dims must be a non-empty sequence of positive integers")
        labels = range(1, len(self.dims) + 1)
        for i, j in self.pairs:
            if i not in labels or j not in labels:
                raise InvalidDataError(f"pair ({i}, {j}) refers to an unknown summand")
        m = self.multiplicities
        for (i, j), count in m.items():
            if m.get((j, i), 0) != count:
                raise InvalidDataError(f"multiplicity of ({i}, {j}) differs from ({j}, {i})")
        if {i for i, _ in self.pairs} != set(labels) or {j for _, j in self.pairs} != set(labels):
            raise InvalidDataError("projection of K onto a factor is not surjective (action not faithful)")
        if self.ko.eps == -1:
            odd = [i for (i, j), count in m.items() if i == j and count % 2]
            if odd:
                raise InvalidDataError(f"J^2 = -1 needs even diagonal multiplicities, got odd m_ii for i in {odd}")
        if not self.ko.even:
            if self.grading is not None:
                raise InvalidDataError(f"KO-dimension {self.ko.n} is odd and takes no grading")
            return
        if self.grading is None:
            raise InvalidDataError(f"KO-dimension {self.ko.n} needs an explicit grading")
        if len(self.grading) != len(self.pairs):
            raise InvalidDataError(f"grading has {len(self.grading)} signs for {len(self.pairs)} slots")
        if any(s not in (1, -1) for s in self.grading):
            raise InvalidDataError("grading signs must be +1 or -1")
        for k in range(len(self.pairs)):
            if self.grading[self.partner(k)] != self.ko.eps_double_prime * self.grading[k]:
                raise InvalidDataError(
                    f"grading of slot {k} and its J-partner violate J gamma = eps'' gamma J"
                )


@dataclass
class Check:
    """One named verification with its largest residual."""
    name: str
    residual: float
    passed: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "residual": float(self.residual), "passed": bool(self.passed)}


@dataclass
class Report:
    """Named checks plus free-form details; passes iff every check passes."""
    title: str
    checks: List[Check] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)

    def add(self, name: str, residual: float, tol: float) -> Check:
        check = Check(name=name, residual=float(residual), passed=bool(residual <= tol))
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "title": self.title,
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "details": self.details,
        }
