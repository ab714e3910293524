"""Phase-space evaluation grids: 1-d slices and rectangular lattices.

The CLI text forms are `q:A:B:STEPS@p=C` (slice along q at fixed p, and
the symmetric p-form) and `qA:qB:qN,pA:pB:pN` (lattice, q-major point
order).
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Either a line slice (axis + fixed other coordinate) or a lattice.

    For kind='slice', (start, stop, num) runs along `axis` with the other
    coordinate pinned at `fixed`.  For kind='lattice' the q range is
    (start, stop, num), the p range (p_start, p_stop, p_num), and points
    iterate q-major.
    """

    kind: str
    axis: str = "q"
    start: float = 0.0
    stop: float = 0.0
    num: int = 1
    fixed: float = 0.0
    p_start: float = 0.0
    p_stop: float = 0.0
    p_num: int = 1

    def __post_init__(self):
        if self.kind not in ("slice", "lattice"):
            raise ValueError(f"unknown grid kind {self.kind!r}")
        if self.axis not in ("q", "p"):
            raise ValueError("slice axis must be 'q' or 'p'")
        if self.num < 1 or self.p_num < 1:
            raise ValueError("grids need at least one point per axis")

    @classmethod
    def line(cls, axis, start, stop, num, at=0.0):
        return cls("slice", axis=axis, start=float(start), stop=float(stop),
                   num=int(num), fixed=float(at))

    @classmethod
    def lattice(cls, q_range, p_range):
        qa, qb, qn = q_range
        pa, pb, pn = p_range
        return cls("lattice", start=float(qa), stop=float(qb), num=int(qn),
                   p_start=float(pa), p_stop=float(pb), p_num=int(pn))

    def points(self):
        """All (q, p) evaluation points as an (n, 2) array, in output order."""
        if self.kind == "slice":
            run = np.linspace(self.start, self.stop, self.num)
            pinned = np.full(self.num, self.fixed)
            cols = (run, pinned) if self.axis == "q" else (pinned, run)
            return np.column_stack(cols)
        qs = np.linspace(self.start, self.stop, self.num)
        ps = np.linspace(self.p_start, self.p_stop, self.p_num)
        QQ, PP = np.meshgrid(qs, ps, indexing="ij")
        return np.column_stack([QQ.ravel(), PP.ravel()])

    def __len__(self):
        return self.num * (self.p_num if self.kind == "lattice" else 1)


def parse_slice(text):
    """Parse `q:A:B:STEPS@p=C` or `p:A:B:STEPS@q=C`."""
    try:
        head, _, tail = text.partition("@")
        axis, a, b, steps = head.split(":")
        other_axis, _, fixed = tail.partition("=")
        if {axis, other_axis} != {"q", "p"}:
            raise ValueError("slice must name both q and p exactly once")
        return GridSpec.line(axis, float(a), float(b), int(steps), at=float(fixed))
    except ValueError as exc:
        raise ValueError(f"cannot parse slice {text!r}: {exc}") from exc


def parse_lattice(text):
    """Parse `qA:qB:qN,pA:pB:pN`."""
    try:
        q_part, p_part = text.split(",")
        qa, qb, qn = q_part.split(":")
        pa, pb, pn = p_part.split(":")
        return GridSpec.lattice((float(qa), float(qb), int(qn)),
                                (float(pa), float(pb), int(pn)))
    except ValueError as exc:
        raise ValueError(f"cannot parse grid {text!r}: {exc}") from exc
