"""Secret sharing over return-point pairs with star-shaped reconstruction.

The secret is split into one share per unordered pair {i, j} of return
points.  The shares incident to point i (its "star") form an authorized set,
so whichever return point ends up holding its star can rebuild the secret.
No two stars are disjoint, which is exactly the no-cloning condition such an
access structure must satisfy.

Supported constructions:

* N = 2: the single share is the secret register itself.
* N = 3: the three pair shares carry a 2-of-3 qutrit threshold code,
  |s> -> 3^{-1/2} sum_j |j, j+s, j+2s>  (indices mod 3).
  Qubit secrets are embedded into the qutrit code space and projected back
  after reconstruction.
* N >= 4 has no verified construction here and is reported as unsupported.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .statevec import Arena, trace_distance

PairLabel = tuple[int, int]

SUPPORTED_POINT_COUNTS = (1, 2, 3)
SUPPORTED_SECRET_DIMS = (2, 3)


class UnsupportedSchemeError(ValueError):
    """No verified construction exists for the requested layout."""


@dataclass(frozen=True)
class AccessStructure:
    n_points: int
    share_labels: tuple[PairLabel, ...]
    minimal_authorized: tuple[frozenset[PairLabel], ...]

    def star(self, i: int) -> frozenset[PairLabel]:
        return self.minimal_authorized[i]

    def is_authorized(self, labels: Sequence[PairLabel]) -> bool:
        held = set(labels)
        return any(star <= held for star in self.minimal_authorized)

    def no_disjoint_authorized_sets(self) -> bool:
        return all(
            s1 & s2
            for s1, s2 in itertools.combinations(self.minimal_authorized, 2)
        )

    def monotone(self) -> bool:
        # monotonicity is by construction (authorization = superset of a
        # minimal set); checked explicitly over all label subsets
        for size in range(len(self.share_labels) + 1):
            for subset in itertools.combinations(self.share_labels, size):
                if self.is_authorized(subset):
                    for extra in self.share_labels:
                        if not self.is_authorized(tuple(subset) + (extra,)):
                            return False
        return True


def star_structure(n_points: int) -> AccessStructure:
    """All C(N,2) pair labels with the N stars as minimal authorized sets."""
    if n_points < 2:
        raise ValueError(f"need at least 2 points, got {n_points}")
    labels = tuple(itertools.combinations(range(n_points), 2))
    stars = tuple(
        frozenset(lbl for lbl in labels if i in lbl) for i in range(n_points)
    )
    return AccessStructure(n_points, labels, stars)


@dataclass
class ShareBundle:
    n_points: int
    secret_dim: int
    share_dim: int
    construction: str
    registers: dict[PairLabel, tuple[int, ...]]  # pair label -> arena handles

    def star_registers(self, i: int) -> list[tuple[PairLabel, tuple[int, ...]]]:
        return [
            (lbl, regs)
            for lbl, regs in sorted(self.registers.items())
            if i in lbl
        ]


def _check_supported(n_points: int, secret_dim: int) -> None:
    if secret_dim not in SUPPORTED_SECRET_DIMS:
        raise UnsupportedSchemeError(f"no construction for secret dimension {secret_dim}")
    if n_points not in SUPPORTED_POINT_COUNTS and n_points != 1:
        raise UnsupportedSchemeError(
            f"no verified share construction for {n_points} return points; "
            "supported: 2 or 3"
        )


_EMBED_2_IN_3 = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], dtype=np.complex128)


def _threshold_encoding_isometry() -> np.ndarray:
    """Column s holds the code word 3^{-1/2} sum_j |j, j+s, j+2s>."""
    iso = np.zeros((27, 3), dtype=np.complex128)
    for s in range(3):
        for j in range(3):
            idx = (j * 3 + (j + s) % 3) * 3 + (j + 2 * s) % 3
            iso[idx, s] = 1.0 / math.sqrt(3)
    return iso


def reconstruction_unitary(pos_a: int, pos_b: int) -> np.ndarray:
    """Basis permutation on code share positions (pos_a, pos_b) in {0,1,2}.

    Share values obey x_k = j + k*s (mod 3); the map sends |x_a, x_b> to
    |s, x_m> where m is the missing position, leaving the secret clean in the
    first register and the second maximally entangled with the missing share.
    """
    if pos_a == pos_b:
        raise ValueError("share positions must differ")
    m = ({0, 1, 2} - {pos_a, pos_b}).pop()
    inv = pow(pos_b - pos_a, -1, 3)
    mat = np.zeros((9, 9), dtype=np.complex128)
    for xa in range(3):
        for xb in range(3):
            s = (inv * (xb - xa)) % 3
            j = (xa - pos_a * s) % 3
            t = (j + m * s) % 3
            mat[s * 3 + t, xa * 3 + xb] = 1.0
    return mat


def encode_star(arena: Arena, secret_reg: int, n_points: int) -> ShareBundle:
    """Split the secret register into pair-labelled shares inside the arena.

    The secret register handle is consumed for N = 3 (replaced by the three
    share registers); for N = 2 the single share is the secret register.
    """
    secret_dim = arena.dimension_of(secret_reg)
    _check_supported(n_points, secret_dim)
    if n_points == 1:
        # degenerate: no pairs; the "bundle" is the secret itself
        return ShareBundle(1, secret_dim, secret_dim, "direct", {})
    if n_points == 2:
        return ShareBundle(2, secret_dim, secret_dim, "identity", {(0, 1): (secret_reg,)})
    # n_points == 3
    reg = secret_reg
    if secret_dim == 2:
        reg = arena.apply_isometry(reg, _EMBED_2_IN_3, (3,))[0]
    shares = arena.apply_isometry(reg, _threshold_encoding_isometry(), (3, 3, 3))
    labels = list(itertools.combinations(range(3), 2))  # (0,1), (0,2), (1,2)
    registers = {lbl: (shares[pos],) for pos, lbl in enumerate(labels)}
    return ShareBundle(3, secret_dim, 3, "pair_threshold_2of3", registers)


def reconstruct_from(
    arena: Arena,
    registers: dict[PairLabel, tuple[int, ...]],
    n_points: int,
    star_index: int,
    secret_dim: int,
) -> int:
    """Rebuild the secret from the star of ``star_index`` and return its
    register handle.  Only registers of that star are touched."""
    _check_supported(n_points, secret_dim)
    if n_points == 2:
        (regs,) = [regs for lbl, regs in registers.items() if star_index in lbl]
        return regs[0]
    labels = list(itertools.combinations(range(3), 2))
    star = [lbl for lbl in labels if star_index in lbl]
    missing = [lbl for lbl in registers if lbl not in star]
    if len(star) != 2 or any(lbl not in registers for lbl in star):
        raise ValueError(f"star {star_index} shares not all present: {sorted(registers)}")
    pos = {lbl: labels.index(lbl) for lbl in labels}
    lbl_a, lbl_b = star
    reg_a = registers[lbl_a][0]
    reg_b = registers[lbl_b][0]
    arena.apply_unitary([reg_a, reg_b], reconstruction_unitary(pos[lbl_a], pos[lbl_b]))
    if secret_dim == 2:
        arena.truncate_register(reg_a, 2)
    return reg_a


def reconstruct_star(arena: Arena, bundle: ShareBundle, star_index: int) -> int:
    return reconstruct_from(
        arena, bundle.registers, bundle.n_points, star_index, bundle.secret_dim
    )


@dataclass(frozen=True)
class SchemeReport:
    n_points: int
    secret_dim: int
    trials: int
    ok: bool
    min_fidelity: float
    max_share_leak: Optional[float]  # None when secrecy check is vacuous
    notes: tuple[str, ...] = ()
    failures: tuple[str, ...] = ()


def validate_scheme(
    n_points: int,
    secret_dim: int,
    trials: int,
    rng: Optional[np.random.Generator] = None,
) -> SchemeReport:
    """Exercise the construction on random secrets.

    Checks: every star reconstructs with fidelity ~1; for the pure N = 3
    construction each single share's reduced state is independent of the
    secret; the star access structure satisfies the no-cloning condition.
    """
    _check_supported(n_points, secret_dim)
    if n_points < 2:
        raise ValueError("scheme validation needs at least 2 points")
    rng = rng if rng is not None else np.random.default_rng()
    failures: list[str] = []
    notes: list[str] = []

    structure = star_structure(n_points)
    if not structure.no_disjoint_authorized_sets():
        failures.append("two disjoint authorized sets exist")

    min_fidelity = 1.0
    share_states: dict[PairLabel, list[np.ndarray]] = {
        lbl: [] for lbl in structure.share_labels
    }
    for _ in range(trials):
        amps = rng.normal(size=secret_dim) + 1j * rng.normal(size=secret_dim)
        amps = amps / np.linalg.norm(amps)
        for star_index in range(n_points):
            arena = Arena(rng)
            secret = arena.new_register(secret_dim, amps)
            bundle = encode_star(arena, secret, n_points)
            if star_index == 0:
                for lbl, regs in bundle.registers.items():
                    share_states[lbl].append(arena.reduced_density_matrix(regs))
            out = reconstruct_star(arena, bundle, star_index)
            fid = arena.register_fidelity(out, amps)
            min_fidelity = min(min_fidelity, fid)
            if fid < 1 - 1e-10:
                failures.append(
                    f"star {star_index} reconstructed with fidelity {fid:.12f}"
                )

    max_leak: Optional[float] = None
    if n_points == 2:
        notes.append(
            "single-share secrecy is vacuous for 2 points: the only share is the secret"
        )
    else:
        max_leak = 0.0
        for lbl, states in share_states.items():
            for rho, sigma in itertools.combinations(states, 2):
                leak = trace_distance(rho, sigma)
                max_leak = max(max_leak, leak)
                if leak > 1e-9:
                    failures.append(
                        f"share {lbl} reduced state varies with the secret "
                        f"(trace distance {leak:.3e})"
                    )
    return SchemeReport(
        n_points,
        secret_dim,
        trials,
        not failures,
        min_fidelity,
        max_leak,
        tuple(notes),
        tuple(failures),
    )
