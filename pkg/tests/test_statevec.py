import math

import numpy as np
import pytest

from summoning import statevec as sv


def random_state(rng, d):
    amps = rng.normal(size=d) + 1j * rng.normal(size=d)
    return amps / np.linalg.norm(amps)


def bell_vector(d, a, b):
    """Independent construction of the measurement basis used by the tests."""
    omega = np.exp(2j * np.pi / d)
    vec = np.zeros(d * d, dtype=complex)
    for q in range(d):
        vec[q * d + (q + b) % d] = omega ** (-a * q) / math.sqrt(d)
    return vec


def dense_partial_trace(amps, dims, keep):
    """Oracle partial trace, written against the flat vector directly."""
    tensor = np.asarray(amps).reshape(dims)
    rest = [i for i in range(len(dims)) if i not in keep]
    moved = np.transpose(tensor, list(keep) + rest)
    k = int(np.prod([dims[i] for i in keep]))
    flat = moved.reshape(k, -1)
    return flat @ flat.conj().T


class TestPrepare:
    def test_basis_state(self):
        state = sv.prepare((2,), [1, 0])
        assert np.allclose(state.amplitudes, [1, 0])

    def test_uniform_qutrit_normalized(self):
        state = sv.prepare((3,), [1, 1, 1])
        assert np.allclose(state.amplitudes, np.ones(3) / math.sqrt(3))

    def test_length_must_match_product(self):
        with pytest.raises(sv.SimulationError):
            sv.prepare((2, 3), [1, 0, 0])
        assert sv.prepare((2, 3), [1, 0, 0, 0, 0, 0]).total_dimension == 6

    def test_zero_vector_rejected(self):
        with pytest.raises(sv.SimulationError):
            sv.prepare((2,), [0, 0])

    def test_dimension_cap(self):
        with pytest.raises(sv.SimulationError):
            sv.prepare((2,) * 21, np.zeros(2**21))


class TestBellPair:
    @pytest.mark.parametrize("d", [2, 3])
    def test_amplitudes(self, d):
        state = sv.bell_pair(d)
        expected = np.zeros(d * d)
        expected[[q * d + q for q in range(d)]] = 1 / math.sqrt(d)
        assert np.allclose(state.amplitudes, expected)

    @pytest.mark.parametrize("d", [2, 3])
    def test_reduced_states_maximally_mixed(self, d):
        state = sv.bell_pair(d)
        for reg in (0, 1):
            rho = dense_partial_trace(state.amplitudes, state.dims, [reg])
            assert sv.trace_distance(rho, np.eye(d) / d) <= 1e-12

    def test_rejects_small_dimension(self):
        with pytest.raises(sv.SimulationError):
            sv.bell_pair(1)


class TestBellMeasurement:
    def test_fresh_pair_gives_zero_outcome(self):
        for d in (2, 3):
            dist = sv.bell_outcome_distribution(sv.bell_pair(d), 0, 1)
            assert abs(dist[0, 0] - 1.0) <= 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_teleport_outcomes_uniform(self, d):
        rng = np.random.default_rng(2)
        joint = sv.product_state(
            sv.prepare((d,), random_state(rng, d)), sv.bell_pair(d)
        )
        dist = sv.bell_outcome_distribution(joint, 0, 1)
        assert np.all(np.abs(dist - 1 / d**2) <= 1e-12)
        assert abs(dist.sum() - 1.0) <= 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_distribution_matches_projector_oracle(self, d):
        rng = np.random.default_rng(3)
        amps = rng.normal(size=d * d * d) + 1j * rng.normal(size=d * d * d)
        state = sv.prepare((d, d, d), amps)
        dist = sv.bell_outcome_distribution(state, 0, 1)
        for a in range(d):
            for b in range(d):
                proj = np.kron(np.outer(bell_vector(d, a, b), bell_vector(d, a, b).conj()), np.eye(d))
                expected = np.real(state.amplitudes.conj() @ proj @ state.amplitudes)
                assert abs(dist[a, b] - expected) <= 1e-12

    def test_outcome_labels_in_range(self):
        rng = np.random.default_rng(4)
        seen = set()
        for _ in range(64):
            joint = sv.product_state(
                sv.prepare((2,), random_state(rng, 2)), sv.bell_pair(2)
            )
            outcome, post = sv.bell_measure(joint, 0, 1, rng)
            seen.add((outcome.a, outcome.b))
            assert post.dims == (2,)
        assert seen <= {(a, b) for a in range(2) for b in range(2)}

    def test_dimension_mismatch(self):
        state = sv.prepare((2, 3), np.ones(6))
        with pytest.raises(sv.SimulationError):
            sv.bell_measure(state, 0, 1, np.random.default_rng(0))

    def test_seeded_measurement_reproducible(self):
        def sample(seed):
            rng = np.random.default_rng(seed)
            outcomes = []
            for _ in range(20):
                joint = sv.product_state(
                    sv.prepare((3,), random_state(rng, 3)), sv.bell_pair(3)
                )
                out, _ = sv.bell_measure(joint, 0, 1, rng)
                outcomes.append((out.a, out.b))
            return outcomes

        assert sample(99) == sample(99)


class TestCorrections:
    def test_zero_outcome_is_identity(self):
        rng = np.random.default_rng(5)
        state = sv.prepare((3,), random_state(rng, 3))
        fixed = sv.apply_correction(state, 0, sv.BellOutcome(0, 0))
        assert sv.state_fidelity(fixed, state) >= 1 - 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_teleport_then_correct_is_identity(self, d):
        rng = np.random.default_rng(6)
        for _ in range(100):
            target = random_state(rng, d)
            joint = sv.product_state(sv.prepare((d,), target), sv.bell_pair(d))
            outcome, post = sv.bell_measure(joint, 0, 1, rng)
            fixed = sv.apply_correction(post, 0, outcome)
            assert sv.state_fidelity(fixed, sv.prepare((d,), target)) >= 1 - 1e-12

    @pytest.mark.parametrize("d", [2, 3])
    def test_corrections_compose_up_to_phase(self, d):
        for a in range(d):
            for b in range(d):
                whole = sv.pauli_z_power(d, -a) @ sv.pauli_x_power(d, -b)
                split = sv.pauli_x_power(d, -b) @ sv.pauli_z_power(d, -a)
                ratio = split @ whole.conj().T
                phase = ratio[0, 0]
                assert abs(abs(phase) - 1) <= 1e-12
                assert np.allclose(ratio, phase * np.eye(d), atol=1e-12)


class TestTeleportChains:
    def test_two_chained_teleports(self):
        rng = np.random.default_rng(7)
        arena = sv.Arena(rng)
        target = random_state(rng, 3)
        src = arena.new_register(3, target)
        hop1 = arena.new_bell_pair(3)
        hop2 = arena.new_bell_pair(3)
        o1 = arena.teleport(src, hop1)
        o2 = arena.teleport(hop1[1], hop2)
        arena.apply_correction(hop2[1], o2)
        arena.apply_correction(hop2[1], o1)
        assert arena.register_fidelity(hop2[1], target) >= 1 - 1e-12

    def test_entanglement_swapping(self):
        rng = np.random.default_rng(8)
        arena = sv.Arena(rng)
        left = arena.new_bell_pair(3)
        right = arena.new_bell_pair(3)
        outcome = arena.teleport(left[1], right)
        arena.apply_correction(right[1], outcome)
        rho = arena.reduced_density_matrix([left[0]])
        assert sv.trace_distance(rho, np.eye(3) / 3) <= 1e-12
        # the swapped pair is again maximally entangled
        joint = arena.reduced_density_matrix([left[0], right[1]])
        expected = np.outer(sv.bell_pair(3).amplitudes, sv.bell_pair(3).amplitudes.conj())
        assert sv.trace_distance(joint, expected) <= 1e-12

    def test_teleport_dimension_check(self):
        rng = np.random.default_rng(9)
        arena = sv.Arena(rng)
        src = arena.new_register(2)
        pair = arena.new_bell_pair(3)
        with pytest.raises(sv.SimulationError):
            arena.teleport(src, pair)


class TestNormAndUnitaries:
    def test_norm_drift_over_long_sequences(self):
        rng = np.random.default_rng(10)
        state = sv.prepare((3, 3), random_state(rng, 9))
        for _ in range(1000):
            k = int(rng.integers(0, 3))
            reg = int(rng.integers(0, 2))
            mat = sv.pauli_z_power(3, k) @ sv.pauli_x_power(3, int(rng.integers(0, 3)))
            state = sv.apply_unitary(state, [reg], mat)
        assert abs(state.norm() - 1.0) <= 1e-12

    def test_apply_unitary_register_order_matters(self):
        cnot = np.eye(4)[[0, 1, 3, 2]]
        state = sv.basis_state((2, 2), (0, 1))
        flipped = sv.apply_unitary(state, [1, 0], cnot)  # control is register 1
        assert np.allclose(flipped.amplitudes, sv.basis_state((2, 2), (1, 1)).amplitudes)

    def test_isometry_expands_register(self):
        embed = np.array([[1, 0], [0, 1], [0, 0]], dtype=complex)
        state = sv.prepare((2,), [0.6, 0.8])
        bigger = sv.apply_isometry(state, 0, embed, (3,))
        assert bigger.dims == (3,)
        assert np.allclose(bigger.amplitudes, [0.6, 0.8, 0.0])

    def test_truncate_register(self):
        state = sv.prepare((3,), [0.6, 0.8, 0.0])
        small = sv.truncate_register(state, 0, 2)
        assert small.dims == (2,)
        assert np.allclose(small.amplitudes, [0.6, 0.8])

    def test_truncate_rejects_populated_levels(self):
        state = sv.prepare((3,), [0.6, 0.0, 0.8])
        with pytest.raises(sv.SimulationError):
            sv.truncate_register(state, 0, 2)


class TestArenaBookkeeping:
    def test_components_stay_separate_until_needed(self):
        arena = sv.Arena(np.random.default_rng(0))
        a = arena.new_register(2)
        b = arena.new_register(2)
        sa, _ = arena.component_state(a)
        sb, _ = arena.component_state(b)
        assert sa.dims == (2,) and sb.dims == (2,)

    def test_positions_survive_removals(self):
        rng = np.random.default_rng(1)
        arena = sv.Arena(rng)
        target = random_state(rng, 2)
        keep = arena.new_register(2, target)
        p1 = arena.new_bell_pair(2)
        p2 = arena.new_bell_pair(2)
        # merge everything into one component, then delete the middle pair
        arena.apply_unitary([keep, p1[0], p2[0]], np.eye(8))
        arena.bell_measure(p1[0], p1[1])
        assert arena.register_fidelity(keep, target) >= 1 - 1e-12
        assert arena.dimension_of(p2[0]) == 2
