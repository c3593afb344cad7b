"""Protograph container and the plain-text protograph format.

File layout::

    m n
    <m rows of n multiplicities>
    <n role characters: s (always transmitted / old node) or p (parity)>
    <n puncture flags: 0 or 1>
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

ROLES = ("s", "p")


class ProtographError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Protograph:
    base: np.ndarray
    roles: tuple[str, ...]
    punctured: np.ndarray = None
    check_labels: tuple[str, ...] | None = field(default=None, compare=False)
    var_labels: tuple[str, ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        base = np.array(self.base, dtype=np.int64)
        if base.ndim != 2 or base.size == 0:
            raise ProtographError("base matrix must be a non-empty 2-D array")
        if (base < 0).any():
            raise ProtographError("negative edge multiplicity")
        if (base.sum(axis=1) == 0).any():
            raise ProtographError("all-zero row in base matrix")
        if (base.sum(axis=0) == 0).any():
            raise ProtographError("all-zero column in base matrix")
        m, n = base.shape
        roles = tuple(self.roles)
        if len(roles) != n or any(r not in ROLES for r in roles):
            raise ProtographError(f"need {n} roles drawn from {ROLES}")
        punct = (np.zeros(n, dtype=bool) if self.punctured is None
                 else np.array(self.punctured, dtype=bool))
        if punct.shape != (n,):
            raise ProtographError("puncture mask length mismatch")
        for name, labels, size in (("check", self.check_labels, m),
                                   ("var", self.var_labels, n)):
            if labels is not None and len(labels) != size:
                raise ProtographError(f"{name} label count mismatch")
        base.setflags(write=False)
        punct.setflags(write=False)
        object.__setattr__(self, "base", base)
        object.__setattr__(self, "roles", roles)
        object.__setattr__(self, "punctured", punct)

    @property
    def num_checks(self) -> int:
        return self.base.shape[0]

    @property
    def num_vars(self) -> int:
        return self.base.shape[1]

    @property
    def num_info(self) -> int:
        return self.num_vars - self.num_checks

    @property
    def parity_vars(self) -> list[int]:
        return [j for j, r in enumerate(self.roles) if r == "p"]

    @property
    def num_transmitted(self) -> int:
        return int(self.num_vars - self.punctured.sum())

    @property
    def rate(self) -> float:
        """Code rate with the current puncture mask applied."""
        return self.num_info / self.num_transmitted

    @property
    def design_rate(self) -> float:
        return self.num_info / self.num_vars

    def with_punctured(self, mask: Sequence[bool]) -> "Protograph":
        return Protograph(self.base, self.roles, np.asarray(mask, dtype=bool),
                          self.check_labels, self.var_labels)

    def unpunctured(self) -> "Protograph":
        return self.with_punctured(np.zeros(self.num_vars, dtype=bool))

    def permute_vars(self, perm: Sequence[int]) -> "Protograph":
        perm = list(perm)
        labels = None if self.var_labels is None else tuple(self.var_labels[j] for j in perm)
        return Protograph(self.base[:, perm], tuple(self.roles[j] for j in perm),
                          self.punctured[perm], self.check_labels, labels)

    def __eq__(self, other):
        if not isinstance(other, Protograph):
            return NotImplemented
        return (self.base.shape == other.base.shape
                and np.array_equal(self.base, other.base)
                and self.roles == other.roles
                and np.array_equal(self.punctured, other.punctured))

    def __hash__(self):
        return hash((self.base.tobytes(), self.base.shape, self.roles,
                     self.punctured.tobytes()))

    def to_text(self) -> str:
        m, n = self.base.shape
        lines = [f"{m} {n}"]
        lines += [" ".join(str(int(x)) for x in row) for row in self.base]
        lines.append(" ".join(self.roles))
        lines.append(" ".join("1" if p else "0" for p in self.punctured))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Protograph":
        rows = [ln.split() for ln in text.splitlines() if ln.strip()]
        try:
            m, n = (int(x) for x in rows[0])
            base = [[int(x) for x in r] for r in rows[1:1 + m]]
            roles = rows[1 + m]
            flags = rows[2 + m]
        except (IndexError, ValueError) as exc:
            raise ProtographError(f"malformed protograph text: {exc}") from None
        if len(rows) != m + 3 or any(len(r) != n for r in base):
            raise ProtographError("protograph text has inconsistent dimensions")
        if any(f not in ("0", "1") for f in flags):
            raise ProtographError("puncture flags must be 0 or 1")
        return cls(np.array(base), tuple(roles), np.array([f == "1" for f in flags]))


def read_protograph(path) -> Protograph:
    return Protograph.from_text(Path(path).read_text())


def write_protograph(g: Protograph, path) -> None:
    Path(path).write_text(g.to_text())


def expand_edges(base: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """One (check, var) entry per edge; parallel edges appear repeatedly."""
    rows, cols = np.nonzero(base)
    reps = base[rows, cols]
    return np.repeat(rows, reps), np.repeat(cols, reps)

