"""Exact pure-state simulation of mixed-dimension qudit registers.

States are dense complex vectors over an ordered list of registers.  A Bell
measurement removes both measured registers, so positions of the survivors
shift down; the :class:`Arena` wrapper keeps stable handles across removals
and lets independent states live in separate product components, merging two
components only when an operation spans them.

Conventions (omega = exp(2*pi*i/d)):

* generalized Paulis  X|q> = |q+1 mod d>,  Z|q> = omega^q |q>
* Bell basis          |Phi_ab> = d^{-1/2} * sum_q omega^{-aq} |q>|q+b>
* correction for outcome (a, b) is Z^{-a} X^{-b}

With these phases the post-measurement half of a teleportation carries
X^b Z^a |psi>, so teleport followed by the correction is exactly the
identity, with no residual phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

ATOL = 1e-12
MAX_TOTAL_DIMENSION = 1 << 20


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class BellOutcome:
    a: int
    b: int


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over registers of the given dimensions."""

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        amps = np.asarray(self.amplitudes, dtype=np.complex128).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def num_registers(self) -> int:
        return len(self.dims)

    @property
    def total_dimension(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.dims else 1

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.dims if self.dims else (1,))

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


def _product(dims: Iterable[int]) -> int:
    out = 1
    for d in dims:
        out *= int(d)
    return out


def prepare(dims: Sequence[int], amplitudes: Sequence[complex]) -> StateVector:
    """Normalize an amplitude list into a state over the given registers."""
    dims = tuple(int(d) for d in dims)
    if not dims:
        raise SimulationError("at least one register is required")
    for d in dims:
        if d < 2:
            raise SimulationError(f"register dimension {d} < 2")
    total = _product(dims)
    if total > MAX_TOTAL_DIMENSION:
        raise SimulationError(f"total dimension {total} exceeds cap {MAX_TOTAL_DIMENSION}")
    amps = np.asarray(amplitudes, dtype=np.complex128).reshape(-1)
    if amps.size != total:
        raise SimulationError(f"expected {total} amplitudes, got {amps.size}")
    norm = np.linalg.norm(amps)
    if norm <= ATOL:
        raise SimulationError("cannot normalize the zero vector")
    return StateVector(dims, amps / norm)


def basis_state(dims: Sequence[int], values: Sequence[int]) -> StateVector:
    dims = tuple(int(d) for d in dims)
    amps = np.zeros(_product(dims), dtype=np.complex128)
    idx = 0
    for d, v in zip(dims, values):
        if not 0 <= v < d:
            raise SimulationError(f"basis value {v} out of range for dimension {d}")
        idx = idx * d + v
    amps[idx] = 1.0
    return StateVector(dims, amps)


def product_state(a: StateVector, b: StateVector) -> StateVector:
    dims = a.dims + b.dims
    if _product(dims) > MAX_TOTAL_DIMENSION:
        raise SimulationError("tensor product exceeds the total dimension cap")
    return StateVector(dims, np.kron(a.amplitudes, b.amplitudes))


def bell_pair(d: int) -> StateVector:
    """Maximally entangled pair d^{-1/2} sum_q |q>|q> on two d-level registers."""
    if d < 2:
        raise SimulationError(f"bell pair needs dimension >= 2, got {d}")
    amps = np.zeros(d * d, dtype=np.complex128)
    for q in range(d):
        amps[q * d + q] = 1.0 / math.sqrt(d)
    return StateVector((d, d), amps)


def pauli_x_power(d: int, k: int) -> np.ndarray:
    """Cyclic shift X^k with X|q> = |q+1 mod d>."""
    mat = np.zeros((d, d), dtype=np.complex128)
    for q in range(d):
        mat[(q + k) % d, q] = 1.0
    return mat


def pauli_z_power(d: int, k: int) -> np.ndarray:
    """Phase Z^k with Z|q> = omega^q |q>."""
    omega = np.exp(2j * np.pi / d)
    return np.diag(omega ** (np.arange(d) * (k % d)))


def apply_unitary(state: StateVector, regs: Sequence[int], matrix: np.ndarray) -> StateVector:
    """Apply a unitary over the listed registers, in the listed order."""
    regs = [int(r) for r in regs]
    if len(set(regs)) != len(regs):
        raise SimulationError("registers must be distinct")
    dims = state.dims
    block = _product(dims[r] for r in regs)
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (block, block):
        raise SimulationError(f"matrix shape {matrix.shape} does not act on dimension {block}")
    tensor = state.tensor()
    rest = [i for i in range(len(dims)) if i not in regs]
    moved = np.transpose(tensor, regs + rest)
    flat = moved.reshape(block, -1)
    out = matrix @ flat
    out = out.reshape([dims[r] for r in regs] + [dims[i] for i in rest])
    inverse = np.argsort(regs + rest)
    restored = np.transpose(out, inverse)
    return StateVector(dims, restored.reshape(-1))


def apply_isometry(
    state: StateVector, reg: int, matrix: np.ndarray, new_dims: Sequence[int]
) -> StateVector:
    """Replace one register by several via an isometry (shape prod(new_dims) x d).

    The new registers take the old register's position, in order.
    """
    new_dims = tuple(int(d) for d in new_dims)
    d = state.dims[reg]
    matrix = np.asarray(matrix, dtype=np.complex128)
    if matrix.shape != (_product(new_dims), d):
        raise SimulationError(
            f"isometry shape {matrix.shape} does not map dimension {d} to {new_dims}"
        )
    if not np.allclose(matrix.conj().T @ matrix, np.eye(d), atol=1e-10):
        raise SimulationError("matrix is not an isometry")
    tensor = state.tensor()
    moved = np.moveaxis(tensor, reg, 0)
    flat = moved.reshape(d, -1)
    out = (matrix @ flat).reshape(new_dims + moved.shape[1:])
    out = np.moveaxis(out, tuple(range(len(new_dims))), tuple(range(reg, reg + len(new_dims))))
    dims = state.dims[:reg] + new_dims + state.dims[reg + 1 :]
    return StateVector(dims, out.reshape(-1))


def apply_correction(state: StateVector, reg: int, outcome: BellOutcome) -> StateVector:
    """Undo the Pauli frame left by a teleportation outcome: Z^{-a} X^{-b}."""
    d = state.dims[reg]
    if not (0 <= outcome.a < d and 0 <= outcome.b < d):
        raise SimulationError(f"outcome {outcome} out of range for dimension {d}")
    mat = pauli_z_power(d, -outcome.a) @ pauli_x_power(d, -outcome.b)
    return apply_unitary(state, [reg], mat)


def _bell_projected(state: StateVector, reg_a: int, reg_b: int) -> np.ndarray:
    """Stack of unnormalized post-measurement tensors, indexed [a, b, rest...]."""
    if reg_a == reg_b:
        raise SimulationError("bell measurement needs two distinct registers")
    d = state.dims[reg_a]
    if state.dims[reg_b] != d:
        raise SimulationError(
            f"register dimensions differ: {d} vs {state.dims[reg_b]}"
        )
    tensor = state.tensor()
    moved = np.moveaxis(tensor, (reg_a, reg_b), (0, 1))
    rest_shape = moved.shape[2:]
    omega = np.exp(2j * np.pi / d)
    # <Phi_ab|psi> = d^{-1/2} sum_q omega^{+aq} psi[q, q+b, ...]
    fourier = omega ** (np.outer(np.arange(d), np.arange(d))) / math.sqrt(d)
    out = np.empty((d, d) + rest_shape, dtype=np.complex128)
    for b in range(d):
        diag = np.stack([moved[q, (q + b) % d] for q in range(d)], axis=0)
        out[:, b] = np.tensordot(fourier, diag, axes=(1, 0))
    return out


def bell_outcome_distribution(state: StateVector, reg_a: int, reg_b: int) -> np.ndarray:
    """Exact (d x d) outcome probabilities of the generalized Bell measurement."""
    proj = _bell_projected(state, reg_a, reg_b)
    d = proj.shape[0]
    flat = proj.reshape(d, d, -1)
    return np.real(np.einsum("abk,abk->ab", flat, flat.conj()))


def bell_measure(
    state: StateVector, reg_a: int, reg_b: int, rng: np.random.Generator
) -> tuple[BellOutcome, StateVector]:
    """Sample a generalized Bell measurement of two equal-dimension registers.

    Returns the outcome and the renormalized state with both registers
    removed; remaining registers keep their relative order.
    """
    proj = _bell_projected(state, reg_a, reg_b)
    d = proj.shape[0]
    flat = proj.reshape(d * d, -1)
    probs = np.real(np.einsum("ik,ik->i", flat, flat.conj()))
    probs = np.clip(probs, 0.0, None)
    total = probs.sum()
    if not math.isclose(total, 1.0, abs_tol=1e-9):
        raise SimulationError(f"outcome probabilities sum to {total}, state not normalized")
    idx = int(rng.choice(d * d, p=probs / total))
    a, b = divmod(idx, d)
    post = flat[idx]
    norm = np.linalg.norm(post)
    if norm <= ATOL:
        raise SimulationError("sampled an outcome of vanishing probability")
    new_dims = tuple(dim for i, dim in enumerate(state.dims) if i not in (reg_a, reg_b))
    return BellOutcome(a, b), StateVector(new_dims, post / norm)


def teleport(
    state: StateVector, src: int, pair: tuple[int, int], rng: np.random.Generator
) -> tuple[BellOutcome, StateVector]:
    """Bell-measure (src, pair[0]); the payload moves to pair[1] up to the
    Pauli correction named by the outcome."""
    if state.dims[src] != state.dims[pair[0]] or state.dims[src] != state.dims[pair[1]]:
        raise SimulationError("teleport needs source and pair of equal dimension")
    return bell_measure(state, src, pair[0], rng)


def reduced_density_matrix(state: StateVector, regs: Sequence[int]) -> np.ndarray:
    """Partial trace onto the listed registers (in the listed order)."""
    regs = [int(r) for r in regs]
    tensor = state.tensor()
    rest = [i for i in range(len(state.dims)) if i not in regs]
    moved = np.transpose(tensor, regs + rest)
    keep = _product(state.dims[r] for r in regs)
    flat = moved.reshape(keep, -1)
    return flat @ flat.conj().T


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Half the nuclear norm of the difference of two density matrices."""
    eigs = np.linalg.eigvalsh(rho - sigma)
    return 0.5 * float(np.abs(eigs).sum())


def state_fidelity(a: StateVector, b: StateVector) -> float:
    """|<a|b>| for equal register layouts (global phase quotiented out)."""
    if a.dims != b.dims:
        raise SimulationError(f"incomparable layouts {a.dims} vs {b.dims}")
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)))


def register_fidelity(state: StateVector, reg: int, target: Sequence[complex]) -> float:
    """sqrt(<t|rho|t>) of one register against a pure target vector."""
    target = np.asarray(target, dtype=np.complex128).reshape(-1)
    rho = reduced_density_matrix(state, [reg])
    if rho.shape[0] != target.size:
        raise SimulationError("target dimension does not match the register")
    val = np.real(np.vdot(target, rho @ target))
    return float(math.sqrt(max(val, 0.0)))


def truncate_register(state: StateVector, reg: int, new_dim: int, atol: float = 1e-9) -> StateVector:
    """Drop the upper levels of one register; amplitude outside must be ~0."""
    d = state.dims[reg]
    if not 2 <= new_dim <= d:
        raise SimulationError(f"cannot truncate dimension {d} to {new_dim}")
    tensor = state.tensor()
    moved = np.moveaxis(tensor, reg, 0)
    outside = float(np.linalg.norm(moved[new_dim:]))
    if outside > atol:
        raise SimulationError(
            f"register holds amplitude {outside:.3e} above level {new_dim - 1}"
        )
    kept = np.moveaxis(moved[:new_dim], 0, reg)
    dims = state.dims[:reg] + (new_dim,) + state.dims[reg + 1 :]
    norm = np.linalg.norm(kept)
    return StateVector(dims, kept.reshape(-1) / norm)


class Arena:
    """Stable register handles over a set of independent product components.

    Registers allocated together live in one component; operations spanning
    two components merge them first.  Measurements delete the measured
    registers, with positions of the survivors maintained internally.
    """

    def __init__(self, rng: Optional[np.random.Generator] = None) -> None:
        self._rng = rng if rng is not None else np.random.default_rng()
        self._components: dict[int, StateVector] = {}
        self._location: dict[int, tuple[int, int]] = {}  # handle -> (component, axis)
        self._next_handle = 0
        self._next_component = 0

    # -- bookkeeping ------------------------------------------------------

    def _new_handles(self, component: int, count: int) -> list[int]:
        handles = list(range(self._next_handle, self._next_handle + count))
        self._next_handle += count
        existing = sum(1 for loc in self._location.values() if loc[0] == component)
        for i, h in enumerate(handles):
            self._location[h] = (component, existing + i)
        return handles

    def _component_handles(self, component: int) -> list[int]:
        pairs = [(axis, h) for h, (c, axis) in self._location.items() if c == component]
        return [h for _, h in sorted(pairs)]

    def _merge(self, comp_a: int, comp_b: int) -> int:
        if comp_a == comp_b:
            return comp_a
        state = product_state(self._components[comp_a], self._components[comp_b])
        offset = len(self._components[comp_a].dims)
        for h in self._component_handles(comp_b):
            _, axis = self._location[h]
            self._location[h] = (comp_a, axis + offset)
        self._components[comp_a] = state
        del self._components[comp_b]
        return comp_a

    def _merge_all(self, handles: Sequence[int]) -> int:
        comps = []
        for h in handles:
            c = self._location[h][0]
            if c not in comps:
                comps.append(c)
        target = comps[0]
        for c in comps[1:]:
            target = self._merge(target, c)
        return target

    def _remove_axes(self, component: int, axes: Sequence[int]) -> None:
        removed = sorted(axes)
        for h in [h for h, (c, ax) in self._location.items() if c == component]:
            _, ax = self._location[h]
            if ax in removed:
                del self._location[h]
            else:
                shift = sum(1 for r in removed if r < ax)
                self._location[h] = (component, ax - shift)
        if not self._components[component].dims:
            del self._components[component]

    def dimension_of(self, handle: int) -> int:
        comp, axis = self._location[handle]
        return self._components[comp].dims[axis]

    def total_dimension(self) -> int:
        return _product(s.total_dimension for s in self._components.values())

    # -- allocation -------------------------------------------------------

    def new_register(self, dim: int, amplitudes: Optional[Sequence[complex]] = None) -> int:
        state = (
            basis_state((dim,), (0,))
            if amplitudes is None
            else prepare((dim,), amplitudes)
        )
        comp = self._next_component
        self._next_component += 1
        self._components[comp] = state
        return self._new_handles(comp, 1)[0]

    def new_bell_pair(self, dim: int) -> tuple[int, int]:
        comp = self._next_component
        self._next_component += 1
        self._components[comp] = bell_pair(dim)
        h = self._new_handles(comp, 2)
        return h[0], h[1]

    # -- operations -------------------------------------------------------

    def bell_measure(self, reg_a: int, reg_b: int) -> BellOutcome:
        comp = self._merge_all([reg_a, reg_b])
        ax_a = self._location[reg_a][1]
        ax_b = self._location[reg_b][1]
        outcome, state = bell_measure(self._components[comp], ax_a, ax_b, self._rng)
        self._components[comp] = state
        self._remove_axes(comp, [ax_a, ax_b])
        return outcome

    def teleport(self, src: int, pair: tuple[int, int]) -> BellOutcome:
        """Consume ``src`` and ``pair[0]``; the payload is afterwards held by
        ``pair[1]`` pending the Pauli correction for the returned outcome."""
        if self.dimension_of(src) != self.dimension_of(pair[0]) or self.dimension_of(
            src
        ) != self.dimension_of(pair[1]):
            raise SimulationError("teleport needs source and pair of equal dimension")
        return self.bell_measure(src, pair[0])

    def apply_unitary(self, regs: Sequence[int], matrix: np.ndarray) -> None:
        comp = self._merge_all(list(regs))
        axes = [self._location[r][1] for r in regs]
        self._components[comp] = apply_unitary(self._components[comp], axes, matrix)

    def apply_correction(self, reg: int, outcome: BellOutcome) -> None:
        comp, axis = self._location[reg]
        self._components[comp] = apply_correction(self._components[comp], axis, outcome)

    def apply_isometry(self, reg: int, matrix: np.ndarray, new_dims: Sequence[int]) -> list[int]:
        """Replace ``reg`` by fresh registers; returns their handles."""
        comp, axis = self._location[reg]
        self._components[comp] = apply_isometry(
            self._components[comp], axis, matrix, new_dims
        )
        extra = len(new_dims) - 1
        del self._location[reg]
        for h, (c, ax) in list(self._location.items()):
            if c == comp and ax > axis:
                self._location[h] = (c, ax + extra)
        handles = list(range(self._next_handle, self._next_handle + len(new_dims)))
        self._next_handle += len(new_dims)
        for i, h in enumerate(handles):
            self._location[h] = (comp, axis + i)
        return handles

    def truncate_register(self, reg: int, new_dim: int) -> None:
        comp, axis = self._location[reg]
        self._components[comp] = truncate_register(self._components[comp], axis, new_dim)

    # -- inspection -------------------------------------------------------

    def reduced_density_matrix(self, regs: Sequence[int]) -> np.ndarray:
        comp = self._merge_all(list(regs))
        axes = [self._location[r][1] for r in regs]
        return reduced_density_matrix(self._components[comp], axes)

    def register_fidelity(self, reg: int, target: Sequence[complex]) -> float:
        comp, axis = self._location[reg]
        return register_fidelity(self._components[comp], axis, target)

    def component_state(self, reg: int) -> tuple[StateVector, int]:
        """The component holding ``reg`` and the register's axis within it."""
        comp, axis = self._location[reg]
        return self._components[comp], axis
