"""
Matrix product state with scale accounting.

Sites are rank-3 arrays (left bond, physical 2, right bond). The state is
only ever contracted against non-negative boundary vectors, so overall
positive factors are pulled out into `log_scale` to keep entries near unit
size.
"""
import logging
import math
from typing import List, Optional, Sequence

import numpy as np

from harmony.core.errors import NumericalError

logger = logging.getLogger(__name__)

# singular values below this fraction of the largest are numerically zero
RANK_EPS = 1e-14


class MpsState:
    def __init__(self):
        self.sites: List[np.ndarray] = []
        self.labels: List[int] = []
        self.log_scale = 0.0
        self.vanished = False
        self.max_bond = 1
        self.truncation_error = 0.0

    def __len__(self) -> int:
        return len(self.sites)

    def copy(self) -> "MpsState":
        other = MpsState()
        other.sites = [s.copy() for s in self.sites]
        other.labels = list(self.labels)
        other.log_scale = self.log_scale
        other.vanished = self.vanished
        other.max_bond = self.max_bond
        other.truncation_error = self.truncation_error
        return other

    def bond_dimensions(self) -> List[int]:
        return [s.shape[2] for s in self.sites[:-1]]

    def position(self, label: int) -> int:
        return self.labels.index(label)

    def append_site(self, label: int, vector: Sequence[float]) -> None:
        """Product a new site onto the right end."""
        self.sites.append(np.asarray(vector, dtype=np.float64).reshape(1, 2, 1))
        self.labels.append(label)

    def apply_parity(self, positions: Sequence[int], target: int) -> None:
        """
        Constrain the XOR of the physical values at `positions` to `target`.

        The constraint is an MPO of bond dimension 2 carrying the running
        parity from the leftmost to the rightmost constrained site; sites in
        between that are not constrained just pass the parity along.
        """
        if self.vanished:
            return
        positions = sorted(set(positions))
        if not positions:
            if target:
                self.vanished = True
            return
        lo, hi = positions[0], positions[-1]
        inside = set(positions)

        if lo == hi:
            site = self.sites[lo].copy()
            site[:, 1 - target, :] = 0.0
            self.sites[lo] = site
            return

        for i in range(lo, hi + 1):
            a_ = self.sites[i]
            dl, _, dr = a_.shape
            if i == lo:
                out = np.zeros((dl, 2, dr, 2))
                out[:, 0, :, 0] = a_[:, 0, :]
                out[:, 1, :, 1] = a_[:, 1, :]
                self.sites[i] = out.reshape(dl, 2, dr * 2)
            elif i == hi:
                out = np.zeros((dl, 2, 2, dr))
                for parity in (0, 1):
                    s = parity ^ target
                    out[:, parity, s, :] = a_[:, s, :]
                self.sites[i] = out.reshape(dl * 2, 2, dr)
            else:
                out = np.zeros((dl, 2, 2, dr, 2))
                for parity in (0, 1):
                    for s in (0, 1):
                        carried = parity ^ s if i in inside else parity
                        out[:, parity, s, :, carried] = a_[:, s, :]
                self.sites[i] = out.reshape(dl * 2, 2, dr * 2)

    def trace_out(self, position: int) -> None:
        """Sum a site over its physical value and absorb it into a neighbour."""
        site = self.sites.pop(position)
        self.labels.pop(position)
        summed = site[:, 0, :] + site[:, 1, :]
        if position > 0:
            self.sites[position - 1] = np.einsum("asb,bc->asc", self.sites[position - 1], summed)
        elif self.sites:
            self.sites[0] = np.einsum("ab,bsc->asc", summed, self.sites[0])
        else:
            scalar = float(summed[0, 0])
            if scalar > 0.0 and math.isfinite(scalar):
                self.log_scale += math.log(scalar)
            else:
                self.vanished = True

    def compress(self, chi: Optional[int] = None, cutoff: float = 0.0) -> None:
        """
        QR sweep to the right, then truncating SVD sweep back to the left.

        Keeps at most `chi` singular values per bond (all when None) and drops
        those below max(cutoff, RANK_EPS) relative to the largest.
        """
        if self.vanished or not self.sites:
            return
        if chi is not None and chi < 1:
            raise ValueError(f"bond dimension must be >= 1, got {chi}")
        n = len(self.sites)
        for i in range(n - 1):
            dl, _, dr = self.sites[i].shape
            q, r = np.linalg.qr(self.sites[i].reshape(dl * 2, dr))
            self.sites[i] = q.reshape(dl, 2, q.shape[1])
            self.sites[i + 1] = np.einsum("ab,bsc->asc", r, self.sites[i + 1])
        if not self._rescale(n - 1):
            return

        relative = max(cutoff, RANK_EPS)
        for i in range(n - 1, 0, -1):
            dl, _, dr = self.sites[i].shape
            u, s, vh = np.linalg.svd(self.sites[i].reshape(dl, 2 * dr), full_matrices=False)
            if s.size == 0 or s[0] <= 0.0:
                self.vanished = True
                return
            keep = int(np.count_nonzero(s > relative * s[0]))
            if chi is not None:
                keep = min(keep, chi)
            keep = max(keep, 1)
            self.truncation_error += float(np.sum(s[keep:] ** 2) / np.sum(s ** 2))
            self.sites[i] = vh[:keep].reshape(keep, 2, dr)
            self.sites[i - 1] = np.einsum("asb,bc->asc", self.sites[i - 1], u[:, :keep] * s[:keep])
            self.max_bond = max(self.max_bond, keep)
        self._rescale(0)

    def _rescale(self, position: int) -> bool:
        norm = float(np.linalg.norm(self.sites[position]))
        if not math.isfinite(norm):
            raise NumericalError("matrix product state entries overflowed")
        if norm == 0.0:
            self.vanished = True
            return False
        self.sites[position] = self.sites[position] / norm
        self.log_scale += math.log(norm)
        return True

    def open_last(self) -> np.ndarray:
        """Contract every site with (1, 1) except the rightmost, whose physical index stays open."""
        if self.vanished or not self.sites:
            return np.zeros(2)
        env = np.ones(1)
        for site in self.sites[:-1]:
            env = env @ (site[:, 0, :] + site[:, 1, :])
        last = self.sites[-1]
        return np.array([env @ last[:, 0, 0], env @ last[:, 1, 0]])
