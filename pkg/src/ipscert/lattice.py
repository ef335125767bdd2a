"""Finite periodic lattice Z_L^d with flattened site indices."""

from dataclasses import dataclass
from itertools import product


@dataclass(frozen=True)
class Lattice:
    d: int
    L: int

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("lattice dimension must be >= 1")
        if self.L < 2:
            raise ValueError("lattice side must be >= 2")

    @property
    def n_sites(self):
        return self.L ** self.d

    def coords(self, index):
        out = []
        for _ in range(self.d):
            index, r = divmod(index, self.L)
            out.append(r)
        return tuple(out)

    def index(self, coords):
        idx = 0
        for c in reversed(coords):
            idx = idx * self.L + (c % self.L)
        return idx

    def sites(self):
        return range(self.n_sites)

    def shift(self, index, offset):
        c = self.coords(index)
        return self.index(tuple(a + b for a, b in zip(c, offset)))

    def norm1(self, index):
        """Torus l1 distance from the origin."""
        return sum(min(c, self.L - c) for c in self.coords(index))

    def all_coords(self):
        return product(range(self.L), repeat=self.d)

    @classmethod
    def parse(cls, text):
        """Parse "d,L"."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 2:
            raise ValueError(f"lattice must look like 'd,L', got {text!r}")
        return cls(int(parts[0]), int(parts[1]))
