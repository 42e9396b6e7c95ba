"""Tests for the time-domain solver, ringdown runs and band structure."""

import math

import numpy as np
import pytest

from app.core.errors import ConfigRejectedError, InstabilityError, MemoryBudgetError
from app.dal.artifacts import encode_record
from app.schemas.geometry import GeometrySpec, preset
from app.schemas.simulation import (
    Axis,
    Boundaries,
    BoundaryKind,
    DipoleSource,
    FieldComponent,
    FluxPlane,
    Probe,
    SimulationConfig,
)
from app.services.analysis import harmonic_inversion
from app.services.geometry import rasterize, rasterize_unit_cell
from app.services.oracles import (
    bragg_stack_grid,
    dipole_radiated_energy,
    quarter_wave_stack,
    transfer_matrix_reflectance,
    transmission_spectrum,
    yee_dispersion_frequency,
)
from app.services.solver import (
    SimulationState,
    SourceWaveform,
    band_structure,
    plane_slice,
    run_ringdown,
    snapshot_fields,
)
from app.services.solver.state import H_COMPONENTS
from tests.conftest import vacuum_grid

PERIODIC = BoundaryKind.PERIODIC


def step_energy(state: SimulationState) -> float:
    lagged = {c: state.fields[c].copy() for c in H_COMPONENTS}
    state.step()
    return state.energy(lagged)


def trace(state: SimulationState, component: str, index: tuple[int, int, int], steps: int) -> np.ndarray:
    series = np.empty(steps)
    for n in range(steps):
        state.step()
        series[n] = state.fields[component][index]
    return series


class TestSimulationState:
    """Tests for the leapfrog update itself."""

    def test_zero_fields_stay_zero(self):
        """Without sources an empty grid never leaves zero."""
        grid = vacuum_grid((20, 20, 20))
        config = SimulationConfig(cell_size_nm=10.0, pml_cells=8, steps=1)
        state = SimulationState(grid, config)

        for _ in range(30):
            state.step()

        for name, f in state.fields.items():
            assert not np.any(f), name

    def test_closed_box_conserves_energy(self):
        """The leapfrog energy of a perfectly conducting box is invariant."""
        grid = vacuum_grid((10, 10, 10))
        for eps in (grid.eps_x, grid.eps_y, grid.eps_z):
            eps[3:7, 2:6, 4:8] = 5.76
        pec = BoundaryKind.PEC
        config = SimulationConfig(cell_size_nm=10.0, boundaries=Boundaries(x=pec, y=pec, z=pec), steps=1)
        state = SimulationState(grid, config)
        rng = np.random.default_rng(3)
        for c in ("ex", "ey", "ez"):
            state.fields[c][:] = rng.standard_normal(grid.shape)
        state.fields["ey"][0], state.fields["ez"][0] = 0.0, 0.0
        state.fields["ex"][:, 0], state.fields["ez"][:, 0] = 0.0, 0.0
        state.fields["ex"][:, :, 0], state.fields["ey"][:, :, 0] = 0.0, 0.0

        initial = step_energy(state)
        for _ in range(300):
            final = step_energy(state)

        assert initial > 0
        assert abs(final - initial) / initial < 1e-9

    @pytest.mark.slow
    def test_closed_box_energy_long_run(self):
        """Energy drift stays below 1e-3 over 10^4 steps."""
        grid = vacuum_grid((10, 10, 10))
        pec = BoundaryKind.PEC
        config = SimulationConfig(cell_size_nm=10.0, boundaries=Boundaries(x=pec, y=pec, z=pec), steps=1)
        state = SimulationState(grid, config)
        state.fields["ez"][5, 5, 5] = 1.0
        state.fields["ex"][4, 6, 3] = -0.5

        initial = step_energy(state)
        for _ in range(10_000):
            final = step_energy(state)

        assert abs(final - initial) / initial < 1e-3

    def test_plane_wave_follows_grid_dispersion(self):
        """A standing wave along z oscillates at the discrete dispersion frequency."""
        n, m = 40, 4
        k = 2.0 * math.pi * m / n
        grid = vacuum_grid((1, 1, n), origin_nm=(0.0, 0.0, 0.0))
        config = SimulationConfig(
            cell_size_nm=10.0, boundaries=Boundaries(x=PERIODIC, y=PERIODIC, z=PERIODIC), steps=1
        )
        state = SimulationState(grid, config)
        state.fields["ex"][0, 0, :] = np.cos(k * np.arange(n))
        expected = yee_dispersion_frequency((0.0, 0.0, k), state.dt) / (2.0 * math.pi)

        series = trace(state, "ex", (0, 0, 0), 2000)
        modes = harmonic_inversion(series, state.dt, (0.5 * expected, 1.5 * expected))

        assert len(modes) == 1
        assert modes[0].frequency == pytest.approx(expected, rel=1e-6)

    def test_oblique_wave_follows_grid_dispersion(self):
        """A diagonal standing wave in the xy plane obeys the same relation."""
        n = 8
        kx = ky = 2.0 * math.pi / n
        grid = vacuum_grid((n, n, 1), origin_nm=(0.0, 0.0, 0.0))
        config = SimulationConfig(
            cell_size_nm=10.0, boundaries=Boundaries(x=PERIODIC, y=PERIODIC, z=PERIODIC), steps=1
        )
        state = SimulationState(grid, config)
        i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        state.fields["ez"][:, :, 0] = np.cos(kx * i + ky * j)
        expected = yee_dispersion_frequency((kx, ky, 0.0), state.dt) / (2.0 * math.pi)

        series = trace(state, "ez", (0, 0, 0), 2000)
        modes = harmonic_inversion(series, state.dt, (0.5 * expected, 1.5 * expected))

        assert len(modes) == 1
        assert modes[0].frequency == pytest.approx(expected, rel=1e-6)

    def test_under_resolved_source_rejected(self):
        """A source wavelength below ten cells in the medium is refused."""
        grid = vacuum_grid((20, 20, 20), eps=5.76)
        source = DipoleSource(position_nm=(0.0, 0.0, 0.0), wavelength_nm=200.0)
        config = SimulationConfig(cell_size_nm=10.0, pml_cells=8, steps=1, sources=(source,))

        with pytest.raises(ConfigRejectedError):
            SimulationState(grid, config)

    def test_cell_size_mismatch_rejected(self):
        """The configured cell size must match the grid."""
        with pytest.raises(ConfigRejectedError):
            SimulationState(vacuum_grid((20, 20, 20)), SimulationConfig(cell_size_nm=5.0, pml_cells=8, steps=1))

    def test_non_finite_field_aborts(self):
        """A NaN in any component stops the run at the next finiteness check."""
        config = SimulationConfig(cell_size_nm=10.0, pml_cells=8, steps=1, check_interval=1)
        state = SimulationState(vacuum_grid((20, 20, 20)), config)
        state.fields["hz"][10, 10, 10] = np.nan

        with pytest.raises(InstabilityError):
            state.step()

    def test_waveform_shuts_off_four_widths_after_peak(self):
        """The envelope peaks at four widths and the source is silent from eight widths on."""
        source = DipoleSource(position_nm=(0.0, 0.0, 0.0), wavelength_nm=200.0, fractional_bandwidth=0.5)
        waveform = SourceWaveform.from_source(source, 10.0)

        assert waveform.frequency == pytest.approx(0.05)
        assert waveform.peak_time == pytest.approx(4.0 * waveform.width)
        assert waveform.shutoff_time == pytest.approx(waveform.peak_time + 4.0 * waveform.width)
        assert waveform(waveform.shutoff_time + 1.0) == 0.0
        assert waveform(waveform.peak_time) == pytest.approx(0.0, abs=1e-12)


class TestMirrorBoundaries:
    """Tests for the symmetry-plane boundary kinds."""

    def _run(self, kind: BoundaryKind) -> np.ndarray:
        grid = vacuum_grid((20, 20, 20), origin_nm=(0.0, -100.0, -100.0))
        config = SimulationConfig(
            cell_size_nm=10.0,
            pml_cells=8,
            boundaries=Boundaries(x=kind),
            steps=120,
            sources=(DipoleSource(position_nm=(0.0, 0.0, 0.0), polarization=Axis.Y, wavelength_nm=200.0),),
            probes=(Probe(component=FieldComponent.EY, position_nm=(30.0, 0.0, 20.0), name="ey"),),
        )
        return run_ringdown(grid, config).probes["ey"]

    def test_odd_mirror_suppresses_tangential_source(self):
        """A tangential dipole on a conducting mirror radiates nothing."""
        assert not np.any(self._run(BoundaryKind.MIRROR_ODD))

    def test_even_mirror_keeps_tangential_source(self):
        """The same dipole on a magnetic mirror does radiate."""
        assert np.max(np.abs(self._run(BoundaryKind.MIRROR_EVEN))) > 0.0

    def test_y_mirror_rejected(self):
        """The beam has no symmetry plane normal to y."""
        with pytest.raises(ValueError):
            Boundaries(y=BoundaryKind.MIRROR_EVEN)


class TestRunRingdown:
    """Tests for ringdown runs."""

    def _config(self, threads: int = 1, steps: int = 150) -> SimulationConfig:
        return SimulationConfig(
            cell_size_nm=10.0,
            pml_cells=8,
            steps=steps,
            threads=threads,
            sources=(DipoleSource(position_nm=(10.0, 0.0, 0.0), polarization=Axis.Y, wavelength_nm=200.0),),
            probes=(
                Probe(component=FieldComponent.EY, position_nm=(30.0, 20.0, -10.0), name="ey"),
                Probe(component=FieldComponent.HX, position_nm=(0.0, -20.0, 30.0), name="hx"),
            ),
            flux_planes=(FluxPlane(name="up", axis=Axis.Z, position_nm=40.0),),
        )

    def test_record_shape(self):
        """Every series holds one sample per step."""
        record = run_ringdown(vacuum_grid((30, 30, 30)), self._config())

        assert record.steps == 150
        assert record.probes["ey"].shape == (150,)
        assert record.flux["up"].shape == (150,)
        assert record.shutoff_step == 150
        assert len(record.config_hash) == 16

    def test_identical_across_thread_counts(self):
        """One and three worker threads produce byte-identical records."""
        grid = vacuum_grid((30, 30, 30))

        single = run_ringdown(grid, self._config(threads=1), run_hash="determinism")
        threaded = run_ringdown(grid, self._config(threads=3), run_hash="determinism")

        np.testing.assert_array_equal(single.probes["ey"], threaded.probes["ey"])
        assert encode_record(single) == encode_record(threaded)

    def test_run_without_probes_rejected(self):
        """A run must sample something."""
        config = self._config().model_copy(update={"probes": ()})

        with pytest.raises(ConfigRejectedError):
            run_ringdown(vacuum_grid((30, 30, 30)), config)

    def test_probe_outside_grid_rejected(self):
        """A probe beyond the grid is rejected at registration."""
        probe = Probe(component=FieldComponent.EX, position_nm=(0.0, 0.0, 5000.0))
        config = self._config().model_copy(update={"probes": (probe,)})

        with pytest.raises(ConfigRejectedError):
            run_ringdown(vacuum_grid((30, 30, 30)), config)

    def test_flux_plane_inside_absorber_rejected(self):
        """A flux plane inside the absorbing layer is rejected."""
        plane = FluxPlane(name="edge", axis=Axis.Z, position_nm=140.0)
        config = self._config().model_copy(update={"flux_planes": (plane,)})

        with pytest.raises(ConfigRejectedError):
            run_ringdown(vacuum_grid((30, 30, 30)), config)

    def test_memory_budget_refusal(self):
        """A run over the budget is refused before stepping."""
        with pytest.raises(MemoryBudgetError):
            run_ringdown(vacuum_grid((30, 30, 30)), self._config(), memory_budget_bytes=1 << 20)

    def test_absorber_reflection_below_threshold(self):
        """A normal-incidence pulse returns less than 1e-4 of its power."""
        def pulse(nz: int, origin_z: float) -> np.ndarray:
            grid = vacuum_grid((1, 1, nz), origin_nm=(0.0, 0.0, origin_z))
            config = SimulationConfig(
                cell_size_nm=10.0,
                boundaries=Boundaries(x=PERIODIC, y=PERIODIC),
                steps=900,
                sources=(
                    DipoleSource(
                        position_nm=(5.0, 0.0, 1000.0),
                        polarization=Axis.X,
                        wavelength_nm=200.0,
                        fractional_bandwidth=0.5,
                    ),
                ),
                probes=(Probe(component=FieldComponent.EX, position_nm=(5.0, 0.0, 1500.0), name="ex"),),
            )
            return run_ringdown(grid, config).probes["ex"]

        bounded = pulse(200, 0.0)
        reference = pulse(1400, -6000.0)
        reflected = bounded - reference

        assert np.max(reflected**2) / np.max(reference**2) < 1e-4

    def test_bragg_stack_matches_transfer_matrix(self):
        """Quarter-wave stack transmission follows the transfer-matrix oracle in the stopband."""
        design = 48.0
        layers = quarter_wave_stack(2.4, 1.5, design, pairs=4)
        stack = bragg_stack_grid(layers, leading_cells=200, trailing_cells=200)
        empty = vacuum_grid(stack.shape, cell_size_nm=1.0, origin_nm=(0.0, 0.0, 0.0))
        config = SimulationConfig(
            cell_size_nm=1.0,
            boundaries=Boundaries(x=PERIODIC, y=PERIODIC),
            steps=6000,
            sources=(
                DipoleSource(
                    position_nm=(0.5, 0.0, 60.0),
                    polarization=Axis.X,
                    wavelength_nm=design,
                    fractional_bandwidth=0.3,
                ),
            ),
            probes=(Probe(component=FieldComponent.EX, position_nm=(0.5, 0.0, 352.0), name="t"),),
        )
        frequencies = np.linspace(0.92, 1.08, 9) / design

        transmitted = run_ringdown(stack, config).probes["t"]
        reference = run_ringdown(empty, config).probes["t"]
        measured = transmission_spectrum(transmitted, reference, config.courant, frequencies)
        expected = 1.0 - transfer_matrix_reflectance(layers, 1.0 / frequencies)

        np.testing.assert_allclose(measured, expected, atol=0.02)

    @pytest.mark.slow
    def test_dipole_energy_matches_free_space(self):
        """Energy left in the grid after the source stops matches the free-space dipole."""
        grid = vacuum_grid((120, 120, 120))
        source = DipoleSource(
            position_nm=(0.0, 0.0, 0.0), polarization=Axis.Z, wavelength_nm=200.0, fractional_bandwidth=0.5
        )
        config = SimulationConfig(cell_size_nm=10.0, steps=1, sources=(source,))
        state = SimulationState(grid, config)
        expected = dipole_radiated_energy(SourceWaveform.from_source(source, 10.0))

        while state.time < 55.0:
            energy = step_energy(state)
        state.close()

        assert energy == pytest.approx(expected, rel=0.05)


class TestReciprocity:
    """Swapping source and receiver in vacuum leaves the received signal unchanged."""

    def _received(self, source_nm, probe_nm) -> np.ndarray:
        config = SimulationConfig(
            cell_size_nm=10.0,
            pml_cells=8,
            steps=200,
            sources=(DipoleSource(position_nm=source_nm, polarization=Axis.Y, wavelength_nm=200.0),),
            probes=(Probe(component=FieldComponent.EY, position_nm=probe_nm, name="rx"),),
        )
        return run_ringdown(vacuum_grid((30, 30, 30)), config).probes["rx"]

    def test_swapped_positions_agree(self):
        """Both directions give the same series to 1e-6 of its peak."""
        a, b = (10.0, 0.0, 0.0), (40.0, 20.0, -30.0)

        forward = self._received(a, b)
        backward = self._received(b, a)

        peak = np.max(np.abs(forward))
        assert peak > 0
        assert np.max(np.abs(forward - backward)) <= 1e-6 * peak


class TestParityDecoupling:
    """A source on the x = 0 plane excites only the matching parity."""

    def test_y_dipole_has_no_odd_part(self):
        """Ey sampled at +x and -x has an odd part below 1e-8 of the even part in energy."""
        offsets = [(30.0, 0.0, 0.0), (20.0, 10.0, -20.0), (50.0, -30.0, 10.0)]
        probes = []
        for n, (x, y, z) in enumerate(offsets):
            probes.append(Probe(component=FieldComponent.EY, position_nm=(x, y, z), name=f"plus{n}"))
            probes.append(Probe(component=FieldComponent.EY, position_nm=(-x, y, z), name=f"minus{n}"))
        config = SimulationConfig(
            cell_size_nm=10.0,
            pml_cells=8,
            steps=200,
            sources=(DipoleSource(position_nm=(0.0, 0.0, 0.0), polarization=Axis.Y, wavelength_nm=200.0),),
            probes=tuple(probes),
        )

        record = run_ringdown(vacuum_grid((30, 30, 30)), config)

        even = odd = 0.0
        for n in range(len(offsets)):
            plus, minus = record.probes[f"plus{n}"], record.probes[f"minus{n}"]
            even += float(np.sum((0.5 * (plus + minus)) ** 2))
            odd += float(np.sum((0.5 * (plus - minus)) ** 2))
        assert even > 0
        assert odd <= 1e-8 * even


class TestSnapshots:
    """Tests for plane snapshots."""

    def test_zero_state_snapshot_is_zero(self):
        """A fresh state snapshots to zero arrays with matching coordinates."""
        grid = vacuum_grid((24, 20, 18))
        state = SimulationState(grid, SimulationConfig(cell_size_nm=10.0, pml_cells=8, steps=1))

        snapshot = snapshot_fields(state, Axis.Y, 0.0)

        assert snapshot.index == 10
        assert set(snapshot.fields) == {"ex", "ey", "ez", "hx", "hy", "hz"}
        for f in snapshot.fields.values():
            assert f.shape == (24, 18)
            assert not np.any(f)
        assert snapshot.coordinates[0].shape == (24,)
        assert snapshot.coordinates[1].shape == (18,)

    def test_plane_outside_grid_rejected(self):
        """A plane beyond the grid is rejected."""
        grid = vacuum_grid((24, 20, 18))
        state = SimulationState(grid, SimulationConfig(cell_size_nm=10.0, pml_cells=8, steps=1))

        with pytest.raises(ConfigRejectedError):
            snapshot_fields(state, Axis.Z, 1.0e4)

    def test_permittivity_plane_reproduces_grooves(self):
        """The permittivity of the y = h/2 plane is the rasterized groove pattern."""
        spec = GeometrySpec.model_validate(
            {
                "lattice_constant_a": 100.0,
                "defect_spacing_D": 90.0,
                "beam_height_H": 100.0,
                "beam_width_W": 200.0,
                "beam_length_L": 600.0,
                "groove_width_Wx": 40.0,
                "groove_length_Wz": 100.0,
                "groove_depth_h": 50.0,
                "clearance_below_Hs": 1000.0,
                "clearance_side_Ws": 1000.0,
                "grooves_per_side": 2,
            }
        )
        grid = rasterize(spec, cell_size=10.0, padding=100.0)
        state = SimulationState(grid, SimulationConfig(cell_size_nm=10.0, steps=1))

        snapshot = snapshot_fields(state, Axis.Y, spec.groove_depth_h / 2)

        np.testing.assert_array_equal(snapshot.eps["ex"], grid.eps_x[:, snapshot.index, :])
        assert snapshot.eps["ex"][20, 44] == 1.0
        assert snapshot.eps["ex"][20, 40] == pytest.approx(5.76)

    def test_plane_slice_copies(self):
        """Slices are copies, not views of the live arrays."""
        grid = vacuum_grid((20, 16, 12))
        fields = {"ex": np.zeros(grid.shape)}

        snapshot = plane_slice(fields, grid, Axis.X, 0.0)
        fields["ex"][10] = 1.0

        assert not np.any(snapshot.fields["ex"])


class TestBandStructure:
    """Tests for Bloch band extraction."""

    def test_vacuum_cell_follows_grid_dispersion(self):
        """An empty periodic cell at k = 0.5 pi/a has its lowest band on the dispersion relation."""
        cells_per_a = 20
        cell = vacuum_grid((4, 4, cells_per_a), origin_nm=(0.0, 0.0, 0.0))
        k_cells = 0.5 * math.pi / cells_per_a
        expected = yee_dispersion_frequency((0.0, 0.0, k_cells), 0.5) / (2.0 * math.pi) * cells_per_a

        (point,) = band_structure(cell, [0.5], bands=1, transverse=PERIODIC)

        assert not point.shortfall
        assert point.frequencies[0] == pytest.approx(expected, rel=1e-3)
        assert expected == pytest.approx(0.25, rel=1e-3)

    def test_invalid_range_rejected(self):
        """The search band must be ordered and positive."""
        with pytest.raises(ValueError):
            band_structure(vacuum_grid((4, 4, 20)), [0.5], frequency_range=(0.5, 0.2))

    @pytest.mark.slow
    def test_grooves_raise_zone_edge_band(self):
        """At k = pi/a the grooved beam's lowest band sits above the grooveless one, below the light line."""
        grooved = rasterize_unit_cell(preset("table1-base"), cells_per_a=10, padding=210.0)
        plain = rasterize_unit_cell(preset("grooveless"), cells_per_a=10, padding=210.0)

        (with_grooves,) = band_structure(grooved, [1.0], bands=1)
        (without,) = band_structure(plain, [1.0], bands=1)

        assert with_grooves.frequencies and without.frequencies
        assert with_grooves.frequencies[0] > without.frequencies[0]
        assert without.frequencies[0] < 0.5
