"""Process tags for the four one-dimensional Markov processes used everywhere.

BM      standard Brownian motion on R
BESQ    squared Bessel process of index nu > -1 on [0, infinity)
BES     Bessel process of index nu > -1 on [0, infinity)
RW      simple symmetric random walk on Z, discrete time
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import DomainError

_TAGS = ("BM", "BESQ", "BES", "RW")


@dataclass(frozen=True)
class ProcessKind:
    """Tagged process selector.

    ``c`` is the constant of the moment-matching integral transform that
    turns monomials into the process's polynomial martingales: ``i`` for BM
    and ``-1`` for BESQ.  It is undefined for the other kinds.
    """

    tag: str
    nu: float | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise DomainError(f"unknown process tag {self.tag!r}")
        if self.tag in ("BESQ", "BES"):
            if self.nu is None or self.nu <= -1.0:
                raise DomainError(f"{self.tag} requires an index nu > -1")
        elif self.nu is not None:
            raise DomainError(f"{self.tag} takes no index")

    @property
    def c(self) -> complex:
        if self.tag == "BM":
            return 1j
        if self.tag == "BESQ":
            return -1.0
        raise DomainError(f"transform constant undefined for {self.tag}")

    @property
    def discrete(self) -> bool:
        return self.tag == "RW"

    def __str__(self):
        if self.nu is not None:
            return f"{self.tag}({self.nu})"
        return self.tag


def bm() -> ProcessKind:
    return ProcessKind("BM")


def besq(nu: float) -> ProcessKind:
    return ProcessKind("BESQ", float(nu))


def bes(nu: float) -> ProcessKind:
    return ProcessKind("BES", float(nu))


def rw() -> ProcessKind:
    return ProcessKind("RW")


def process_from_dict(d: dict) -> ProcessKind:
    """Parse ``{"kind": "BESQ", "nu": 0.5}`` style dictionaries."""
    kind = d.get("kind")
    if kind in ("BM", "RW"):
        return ProcessKind(kind)
    if kind in ("BESQ", "BES"):
        if "nu" not in d:
            raise DomainError(f"process {kind} needs field 'nu'")
        return ProcessKind(kind, float(d["nu"]))
    raise DomainError(f"unknown process kind {kind!r}")


def process_to_dict(p: ProcessKind) -> dict:
    d = {"kind": p.tag}
    if p.nu is not None:
        d["nu"] = p.nu
    return d
