"""Scenario orchestration behind the command-line subcommands.

Each ``*_scenario`` function reads what it needs from a validated
:class:`Scenario`, writes its artifacts into ``scenario.output.directory``
and returns an :class:`Outcome` listing them.
"""

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
from pydantic import ValidationError

from app.core.config import config_hash
from app.core.errors import AnalysisError, ConfigRejectedError, InvalidInputError, NanobeamError
from app.core.logging import logger
from app.dal import artifacts
from app.schemas.analysis import ParitySector
from app.schemas.geometry import GeometrySpec, GridRegion, PresetName
from app.schemas.scenario import GeometrySection, OutputSection, Scenario, SweepParameter
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
from app.services import analysis, spectra
from app.services.catalog import catalog_modes
from app.services.geometry import DielectricGrid, estimate_memory, rasterize, rasterize_unit_cell
from app.services.solver import RingdownRecord, band_structure, plane_slice, run_ringdown

# Measured resonances (nm, Q) used for the synthetic spectrum
SYNTHETIC_PEAKS = ((605.4, 87.0), (616.9, 213.0), (627.4, 221.0), (638.6, 170.0), (649.6, 87.0))
SYNTHETIC_AMPLITUDE = 1000.0
SYNTHETIC_BACKGROUND = 50.0
SYNTHETIC_NOISE = 0.01
SYNTHETIC_RANGE_NM = (560.0, 680.0)
SYNTHETIC_STEP_NM = 0.05

TAPER_RATIO = 0.9
QUADRANT_IMAGES = 4

MODE_COLUMNS = (
    "sector",
    "parity",
    "wavelength_nm",
    "quality_factor",
    "mode_volume_nm3",
    "mode_volume_norm",
    "purcell_factor",
    "zpl_detuning_nm",
    "amplitude",
    "refractive_index",
    "low_confidence",
    "q_capped",
)


@dataclass
class Outcome:
    """Artifacts written by one subcommand and whether any of them is flagged."""

    artifacts: list[Path] = field(default_factory=list)
    flagged: bool = False
    modes: list[analysis.ResonantMode] = field(default_factory=list)


@dataclass(frozen=True)
class SectorResult:
    label: str
    record: RingdownRecord
    modes: list[analysis.ResonantMode]
    flux: analysis.FluxRatio | None = None
    flux_failed: bool = False
    snapshots: dict[str, Any] = field(default_factory=dict)


def scenario_hash(scenario: Scenario) -> str:
    """Hash of every scenario value that can change results.

    The output section and the thread count are left out.
    """
    neutral = scenario.model_copy(
        update={"output": OutputSection(), "run": scenario.run.model_copy(update={"threads": 1})}
    )
    return config_hash(neutral)


def _out(scenario: Scenario, name: str) -> Path:
    return scenario.output.directory / name


def _cell_size(spec: GeometrySpec, scenario: Scenario) -> float:
    return spec.lattice_constant_a / scenario.grid.cells_per_a


def build_grid(scenario: Scenario, spec: GeometrySpec | None = None) -> DielectricGrid:
    """Rasterize the scenario geometry on its full or quadrant grid.

    Raises:
        ConfigRejectedError: If the grid section asks for a unit cell.
        MemoryBudgetError: If the grid would not fit the budget.
    """
    spec = spec or scenario.geometry.resolve()
    if scenario.grid.region is GridRegion.UNIT_CELL:
        raise ConfigRejectedError("grid.region 'unit-cell' is only used by the bands subcommand")
    return rasterize(
        spec,
        _cell_size(spec, scenario),
        scenario.grid.padding_nm,
        region=scenario.grid.region,
        absorbing_cells=scenario.run.pml_cells,
        memory_budget_bytes=scenario.grid.memory_budget_bytes,
    )


def rasterize_scenario(scenario: Scenario) -> Outcome:
    """Write the permittivity grid, the resolved geometry and two ε planes."""
    spec = scenario.geometry.resolve()
    grid = build_grid(scenario, spec)
    run_hash = scenario_hash(scenario)
    written = [
        artifacts.write_grid(_out(scenario, "grid.raw"), grid, run_hash),
        artifacts.atomic_write_text(_out(scenario, "geometry.json"), spec.model_dump_json(indent=2) + "\n"),
        artifacts.write_plane(_out(scenario, "eps-xz.raw"), plane_slice({}, grid, Axis.Y, 0.5 * spec.groove_depth_h), run_hash),
        artifacts.write_plane(_out(scenario, "eps-xy.raw"), plane_slice({}, grid, Axis.Z, 0.0), run_hash),
    ]
    logger.info("Rasterized scenario", extra={"config_hash": run_hash, "shape": grid.shape})
    return Outcome(artifacts=written)


def _sectors(scenario: Scenario) -> list[tuple[str, ParitySector | None, Boundaries]]:
    if scenario.grid.region is GridRegion.FULL:
        return [("full", None, Boundaries())]
    plan = []
    for sector in scenario.run.sectors:
        x, z = sector.boundaries
        plan.append((sector.value, sector, Boundaries(x=x, y=BoundaryKind.ABSORBING, z=z)))
    return plan


def _source_point(scenario: Scenario) -> tuple[float, float, float]:
    return tuple(float(v) for v in scenario.run.source_offset_nm)  # type: ignore[return-value]


def _probes(scenario: Scenario) -> tuple[Probe, ...]:
    """Probes at the source and at two points away from it, off every mirror plane."""
    ox, oy, oz = _source_point(scenario)
    sites = ((ox, oy, oz), (2.0 * ox, 0.5 * oy, 3.0 * oz), (0.5 * ox, 1.5 * oy, 2.0 * oz))
    polarized = FieldComponent(f"e{scenario.run.polarization.value}")
    components = (polarized, FieldComponent.EX if polarized is not FieldComponent.EX else FieldComponent.EZ)
    return tuple(
        Probe(component=c, position_nm=site, name=f"{c.value}{i}")
        for i, site in enumerate(sites)
        for c in components
    )


def _flux_planes(spec: GeometrySpec, scenario: Scenario, cell: float) -> tuple[FluxPlane, ...]:
    """Planes half-way between the beam and the absorbing layer, above and below."""
    margin = 0.5 * (scenario.grid.padding_nm - scenario.run.pml_cells * cell)
    return (
        FluxPlane(name="up", axis=Axis.Y, position_nm=-margin, outward=-1),
        FluxPlane(name="down", axis=Axis.Y, position_nm=spec.beam_height_H + margin, outward=1),
    )


def _config(scenario: Scenario, spec: GeometrySpec, grid: DielectricGrid, boundaries: Boundaries) -> SimulationConfig:
    run = scenario.run
    source = DipoleSource(
        position_nm=_source_point(scenario),
        polarization=run.polarization,
        wavelength_nm=run.wavelength_nm,
        fractional_bandwidth=run.fractional_bandwidth,
    )
    return SimulationConfig(
        cell_size_nm=grid.cell_size_nm,
        courant=run.courant,
        pml_cells=run.pml_cells,
        boundaries=boundaries,
        steps=run.steps,
        sources=(source,),
        probes=_probes(scenario),
        flux_planes=_flux_planes(spec, scenario, grid.cell_size_nm) if scenario.analysis.monitors else (),
        threads=run.threads,
    )


def _dft_capacity(grid: DielectricGrid, config: SimulationConfig, budget: int, wanted: int) -> int:
    count = wanted
    while count > 0 and estimate_memory(grid.shape, config.boundaries.is_complex, count) > budget:
        count -= 1
    return count


def _hy_label(ey_sector: ParitySector) -> str:
    """H_y parity of a mode whose E_y has the given parity."""
    return "".join("O" if c == "E" else "E" for c in ey_sector.value)


def _mode_fields(
    scenario: Scenario,
    spec: GeometrySpec,
    grid: DielectricGrid,
    config: SimulationConfig,
    modes: list[analysis.ResonantMode],
    run_hash: str,
) -> tuple[list[analysis.ResonantMode], dict[str, Any]]:
    """Second pass: frequency-domain fields, mode volumes, parity of full-domain modes and snapshots."""
    budget = scenario.grid.memory_budget_bytes
    keep = _dft_capacity(grid, config, budget, len(modes))
    if keep < len(modes):
        logger.warning("Mode-field pass limited by memory budget", extra={"modes": len(modes), "kept": keep})
    if keep == 0:
        return modes, {}
    strongest = sorted(modes, key=lambda m: -abs(m.amplitude))[:keep]
    wavelengths = tuple(sorted(m.wavelength_nm for m in strongest))
    record = run_ringdown(grid, config.model_copy(update={"dft_wavelengths_nm": wavelengths}), budget, run_hash)

    images = QUADRANT_IMAGES if grid.region is GridRegion.QUADRANT else 1
    source_y = _source_point(scenario)[1]
    updated, snapshots = [], {}
    for index, mode in enumerate(modes):
        fields = record.dft_fields.get(mode.wavelength_nm)
        if fields is None:
            updated.append(mode)
            continue
        eps = {c: grid.eps(c) for c in fields}
        try:
            volume = analysis.mode_volume(
                fields, eps, grid.cell_size_nm, mode.wavelength_nm, spec.refractive_index_n, symmetry_factor=images
            )
        except AnalysisError as e:
            logger.warning("No mode volume", extra={"wavelength_nm": mode.wavelength_nm, "error": str(e)})
            updated.append(mode)
            continue
        mode = replace(mode, mode_volume_nm3=volume.volume, mode_volume_norm=volume.normalized)
        if grid.region is GridRegion.FULL:
            j = grid.index_of("ey", _source_point(scenario))[1]
            plane = fields["ey"][:, j, :]
            if np.any(plane):
                verdict = analysis.classify_parity(plane[1:, 1:], scenario.analysis.parity_tolerance)
                if verdict.sector is not None:
                    mode = replace(mode, parity=_hy_label(verdict.sector))
        updated.append(mode)
        snapshots[f"{index}-xz"] = plane_slice(fields, grid, Axis.Y, source_y)
        snapshots[f"{index}-xy"] = plane_slice(fields, grid, Axis.Z, 0.0)
    return updated, snapshots


def simulate(
    scenario: Scenario,
    spec: GeometrySpec | None = None,
    run_hash: str | None = None,
    grid: DielectricGrid | None = None,
) -> list[SectorResult]:
    """Ringdown, mode extraction and mode-field pass for every requested sector."""
    spec = spec or scenario.geometry.resolve()
    run_hash = run_hash or scenario_hash(scenario)
    grid = grid if grid is not None else build_grid(scenario, spec)
    results = []
    for label, sector, boundaries in _sectors(scenario):
        config = _config(scenario, spec, grid, boundaries)
        record = run_ringdown(grid, config, scenario.grid.memory_budget_bytes, run_hash)
        modes = analysis.modes_from_record(
            record, scenario.analysis.band_nm, spec.refractive_index_n, scenario.analysis.min_quality
        )
        if sector is not None:
            modes = [replace(m, parity=sector.value) for m in modes]
        flux, flux_failed = None, False
        if config.flux_planes:
            try:
                flux = analysis.flux_ratio(record)
            except AnalysisError as e:
                logger.warning("Flux ratio unavailable", extra={"sector": label, "error": str(e)})
                flux_failed = True
        snapshots: dict[str, Any] = {}
        if scenario.run.mode_fields and modes:
            modes, snapshots = _mode_fields(scenario, spec, grid, config, modes, run_hash)
        logger.info("Sector finished", extra={"sector": label, "modes": len(modes)})
        results.append(
            SectorResult(label=label, record=record, modes=modes, flux=flux, flux_failed=flux_failed, snapshots=snapshots)
        )
    return results


def _mode_row(label: str, mode: analysis.ResonantMode) -> list[object]:
    return [
        label,
        mode.parity,
        mode.wavelength_nm,
        mode.quality_factor,
        mode.mode_volume_nm3,
        mode.mode_volume_norm,
        mode.purcell_factor,
        analysis.zpl_detuning(mode.wavelength_nm),
        abs(mode.amplitude),
        mode.refractive_index,
        int(mode.low_confidence),
        int(mode.q_capped),
    ]


def _preset_name(scenario: Scenario) -> str | None:
    return scenario.geometry.preset.value if scenario.geometry.preset else None


def run_scenario(scenario: Scenario) -> Outcome:
    """Simulate every sector and write grid, records, mode table, flux table and snapshots.

    The outcome is flagged when no mode was found, any mode is flagged, or a
    flux ratio could not be formed.
    """
    spec = scenario.geometry.resolve()
    run_hash = scenario_hash(scenario)
    logger.info("Running scenario", extra={"config_hash": run_hash, "name": scenario.name})
    grid = build_grid(scenario, spec)
    results = simulate(scenario, spec, run_hash, grid)

    written = [artifacts.write_grid(_out(scenario, "grid.raw"), grid, run_hash)]
    rows, modes = [], []
    for result in results:
        written.append(artifacts.write_record(_out(scenario, f"record-{result.label}.raw"), result.record))
        for key, snapshot in result.snapshots.items():
            u_e = analysis.energy_density(snapshot.fields, None, snapshot.eps).electric
            path = _out(scenario, f"mode-{result.label}-{key}.raw")
            written.append(artifacts.write_plane(path, snapshot, run_hash, extra={"u_e": u_e}))
        for mode in result.modes:
            rows.append(_mode_row(result.label, mode))
            modes.append(mode)
    rows.sort(key=lambda r: (r[2], r[0]))
    written.append(artifacts.write_csv(_out(scenario, "modes.csv"), MODE_COLUMNS, rows, run_hash))

    flux_failed = any(r.flux_failed for r in results)
    if scenario.analysis.monitors:
        flux_rows = [
            [r.label, r.flux.up_energy, r.flux.down_energy, r.flux.ratio, int(r.flux.flagged)]
            if r.flux
            else [r.label, None, None, None, 1]
            for r in results
        ]
        written.append(
            artifacts.write_csv(
                _out(scenario, "flux.csv"), ("sector", "up_energy", "down_energy", "ratio", "flagged"), flux_rows, run_hash
            )
        )
        flux_failed = flux_failed or any(r.flux is not None and r.flux.flagged for r in results)

    if scenario.output.catalog:
        catalog_modes(run_hash, "run", modes, _preset_name(scenario))

    flagged = not modes or any(m.flagged for m in modes) or flux_failed
    logger.info("Scenario finished", extra={"config_hash": run_hash, "modes": len(modes), "flagged": flagged})
    return Outcome(artifacts=written, flagged=flagged, modes=modes)


def bands_scenario(scenario: Scenario) -> Outcome:
    """Band diagram of one mirror period, optionally against the grooveless beam."""
    spec = scenario.geometry.resolve()
    section, run = scenario.bands, scenario.run
    structures = {"grooved": spec}
    if section.compare_grooveless:
        structures["grooveless"] = GeometrySpec.model_validate(
            {**spec.model_dump(), "grooves_per_side": 0, "taper": ()}
        )
    rows, flagged = [], False
    for name, structure in structures.items():
        cell = rasterize_unit_cell(
            structure,
            scenario.grid.cells_per_a,
            scenario.grid.padding_nm,
            absorbing_cells=run.pml_cells,
            memory_budget_bytes=scenario.grid.memory_budget_bytes,
        )
        points = band_structure(
            cell,
            list(section.k_list),
            bands=section.bands,
            frequency_range=section.frequency_range,
            ringdown_steps=section.ringdown_steps,
            courant=run.courant,
            pml_cells=run.pml_cells,
            threads=run.threads,
        )
        for point in points:
            flagged = flagged or point.shortfall
            light_line = 0.5 * point.k
            for band, frequency in enumerate(point.frequencies):
                rows.append([name, point.k, band, frequency, light_line, int(frequency < light_line)])
    path = artifacts.write_csv(
        _out(scenario, "bands.csv"),
        ("structure", "k_pi_per_a", "band", "frequency_c_per_a", "light_line", "below_light_line"),
        rows,
        scenario_hash(scenario),
    )
    return Outcome(artifacts=[path], flagged=flagged)


def _optional(value: str) -> float | None:
    return float(value) if value else None


def read_mode_table(path: Path) -> list[tuple[str, analysis.ResonantMode]]:
    """Modes (with their sector label) from a ``modes.csv`` written by :func:`run_scenario`.

    Raises:
        InvalidInputError: If the table does not exist.
    """
    if not path.exists():
        raise InvalidInputError(f"{path} not found; run the 'run' subcommand first")
    table = []
    for row in artifacts.read_csv(path):
        mode = analysis.ResonantMode(
            wavelength_nm=float(row["wavelength_nm"]),
            quality_factor=float(row["quality_factor"]),
            amplitude=complex(float(row["amplitude"])),
            refractive_index=float(row["refractive_index"]),
            parity=row["parity"] or None,
            mode_volume_nm3=_optional(row["mode_volume_nm3"]),
            mode_volume_norm=_optional(row["mode_volume_norm"]),
            low_confidence=row["low_confidence"] == "1",
            q_capped=row["q_capped"] == "1",
        )
        table.append((row["sector"], mode))
    return table


def analyze_scenario(scenario: Scenario) -> Outcome:
    """Coupling and readout figures for every mode of the mode table."""
    section = scenario.analysis
    rows, flagged = [], False
    for label, mode in read_mode_table(_out(scenario, "modes.csv")):
        if mode.mode_volume_nm3 is None:
            flagged = True
            continue
        coupling = analysis.coupling_assessment(
            mode.quality_factor, mode.mode_volume_nm3, mode.wavelength_nm, section.gamma_perp, section.coupling_margin
        )
        purcell = mode.purcell_factor
        budget = analysis.photon_budget(purcell, section.collection_gain, section.window_ns)
        rows.append(
            [
                label,
                mode.parity,
                mode.wavelength_nm,
                mode.quality_factor,
                mode.mode_volume_norm,
                purcell,
                coupling.rabi_frequency,
                coupling.cavity_decay,
                coupling.gamma_perp,
                coupling.characteristic_volume_nm3,
                int(coupling.strong_coupling),
                int(coupling.passes_q_gate),
                analysis.readout_visibility(purcell, section.collection_gain),
                budget.bright_mean,
                budget.dim_mean,
                budget.contrast,
            ]
        )
        flagged = flagged or mode.flagged
    path = artifacts.write_csv(
        _out(scenario, "figures.csv"),
        (
            "sector",
            "parity",
            "wavelength_nm",
            "quality_factor",
            "mode_volume_norm",
            "purcell_factor",
            "rabi_frequency",
            "cavity_decay",
            "gamma_perp",
            "characteristic_volume_nm3",
            "strong_coupling",
            "passes_q_gate",
            "readout_improvement",
            "bright_mean",
            "dim_mean",
            "contrast",
        ),
        rows,
        scenario_hash(scenario),
    )
    return Outcome(artifacts=[path], flagged=flagged or not rows)


def synthetic_spectrum(seed: int) -> spectra.Spectrum:
    """Five measured resonances on a flat background with 1% noise."""
    lo, hi = SYNTHETIC_RANGE_NM
    wavelengths = np.arange(lo, hi + 0.5 * SYNTHETIC_STEP_NM, SYNTHETIC_STEP_NM)
    peaks = [(center, center / q, SYNTHETIC_AMPLITUDE) for center, q in SYNTHETIC_PEAKS]
    return spectra.synthesize_spectrum(
        peaks, wavelengths, background=SYNTHETIC_BACKGROUND, noise_fraction=SYNTHETIC_NOISE, seed=seed
    )


def _measured_spectrum(scenario: Scenario, written: list[Path]) -> spectra.Spectrum:
    """The spectrum file, or for scan files the position with the brightest first window."""
    path = scenario.spectrum.path
    rows = artifacts.read_spectrum_csv(path)
    if rows.shape[1] == 3 and np.unique(rows[:, 2]).size > 1:
        scan = spectra.load_scan(path)
        profile = spectra.scan_profile(scan, scenario.spectrum.windows)
        table = [[p, *values] for p, values in zip(profile.positions_um, profile.peak_intensity)]
        columns = ("position_um", *(f"peak_{lo:g}_{hi:g}" for lo, hi in profile.windows))
        written.append(artifacts.write_csv(_out(scenario, "scan.csv"), columns, table, scenario_hash(scenario)))
        return scan[int(np.argmax(profile.peak_intensity[:, 0]))]
    return spectra.load_spectrum(path)


def fit_scenario(scenario: Scenario, synthetic: bool = False) -> Outcome:
    """Fit Lorentzians to the measured (or synthetic) spectrum and write ``peaks.csv``."""
    section = scenario.spectrum
    written: list[Path] = []
    if synthetic:
        spectrum = synthetic_spectrum(scenario.seed)
        written.append(
            artifacts.write_csv(
                _out(scenario, "synthetic-spectrum.csv"),
                ("wavelength_nm", "intensity"),
                zip(spectrum.wavelengths.tolist(), spectrum.intensities.tolist()),
                scenario_hash(scenario),
            )
        )
    elif section.path is None:
        raise InvalidInputError("spectrum.path is required unless a synthetic spectrum is requested")
    else:
        spectrum = _measured_spectrum(scenario, written)
    if section.reference is not None:
        reference = section.reference if isinstance(section.reference, int) else spectra.load_spectrum(section.reference)
        spectrum = spectra.subtract_background(spectrum, reference)
    peaks = spectra.fit_lorentzians(spectrum, section.windows, section.peaks_per_window)
    rows = [
        [
            p.center_nm,
            p.center_err,
            p.fwhm_nm,
            p.fwhm_err,
            p.quality_factor,
            p.quality_factor_err,
            p.amplitude,
            p.background,
            p.window[0],
            p.window[1],
            p.residual_norm,
            int(p.flagged),
        ]
        for p in peaks
    ]
    written.append(
        artifacts.write_csv(
            _out(scenario, "peaks.csv"),
            (
                "center_nm",
                "center_err",
                "fwhm_nm",
                "fwhm_err",
                "quality_factor",
                "quality_factor_err",
                "amplitude",
                "background",
                "window_lo",
                "window_hi",
                "residual_norm",
                "flagged",
            ),
            rows,
            scenario_hash(scenario),
        )
    )
    return Outcome(artifacts=written, flagged=any(p.flagged for p in peaks))


def compare_scenario(scenario: Scenario) -> Outcome:
    """Pair calculated and measured resonances into a comparison table."""
    peaks_path = _out(scenario, "peaks.csv")
    if not peaks_path.exists():
        raise InvalidInputError(f"{peaks_path} not found; run the 'fit' subcommand first")
    modes = [mode for _, mode in read_mode_table(_out(scenario, "modes.csv"))]
    measured = {float(row["center_nm"]): row for row in artifacts.read_csv(peaks_path)}
    calculated = {mode.wavelength_nm: mode for mode in modes}
    matching = spectra.match_modes(list(measured), modes)
    rows = [
        [
            pair.parity,
            pair.calculated_nm,
            pair.measured_nm,
            pair.deviation_nm,
            calculated[pair.calculated_nm].quality_factor,
            float(measured[pair.measured_nm]["quality_factor"]),
        ]
        for pair in matching.pairs
    ]
    run_hash = scenario_hash(scenario)
    written = [
        artifacts.write_csv(
            _out(scenario, "comparison.csv"),
            ("parity", "calculated_nm", "measured_nm", "deviation_nm", "q_calculated", "q_measured"),
            rows,
            run_hash,
        ),
        artifacts.write_json(
            _out(scenario, "comparison.json"),
            {
                "config_hash": run_hash,
                "pairs": len(matching.pairs),
                "max_deviation_nm": matching.max_deviation,
                "mean_deviation_nm": matching.mean_deviation,
                "trend_slope": matching.trend_slope,
            },
        ),
    ]
    return Outcome(artifacts=written, flagged=not matching.pairs)


def sweep_point(scenario: Scenario, value: Any) -> Scenario:
    """The scenario at one point of its sweep axis.

    Raises:
        pydantic.ValidationError: If the point is not a valid geometry section.
    """
    sweep = scenario.sweep
    if sweep is None:
        raise ConfigRejectedError("scenario has no sweep section")
    geometry = scenario.geometry
    params = dict(geometry.params)
    if sweep.parameter is SweepParameter.PRESET:
        section = GeometrySection(preset=PresetName(value))
    elif sweep.parameter is SweepParameter.DEFECT_RATIO:
        section = GeometrySection(preset=geometry.preset, params={**params, "defect_spacing_D": f"{float(value)!r}a"})
    elif sweep.parameter is SweepParameter.HEIGHT_RATIO:
        section = GeometrySection(preset=geometry.preset, params={**params, "beam_height_H": f"{float(value)!r}a"})
    elif sweep.parameter is SweepParameter.TAPER_COUNT:
        count = int(value)
        base = geometry.resolve()
        section = GeometrySection(
            preset=geometry.preset,
            params={
                **params,
                "taper": [f"{TAPER_RATIO}a"] * count,
                "grooves_per_side": max(base.grooves_per_side, count // 2 + 1),
            },
        )
    else:
        section = GeometrySection(preset=geometry.preset, params={**params, sweep.field_name: value})
    return scenario.model_copy(update={"geometry": section, "sweep": None})


SWEEP_COLUMNS = (
    "point",
    "parameter",
    "value",
    "status",
    "reason",
    "sector",
    "parity",
    "wavelength_nm",
    "quality_factor",
    "mode_volume_nm3",
    "mode_volume_norm",
    "purcell_factor",
    "low_confidence",
)


def sweep_scenario(scenario: Scenario) -> Outcome:
    """Simulate every point of the sweep axis; failed points become flagged rows."""
    sweep = scenario.sweep
    if sweep is None:
        raise ConfigRejectedError("scenario has no sweep section")
    rows, flagged = [], False
    for point, value in enumerate(sweep.values):
        prefix = [point, sweep.field_name or sweep.parameter.value, str(value)]
        try:
            variant = sweep_point(scenario, value)
            variant_hash = scenario_hash(variant)
            results = simulate(variant, run_hash=variant_hash)
        except (NanobeamError, ValidationError, ValueError) as e:
            logger.warning("Sweep point failed", extra={"point": point, "value": str(value), "error": str(e)})
            rows.append([*prefix, "failed", str(e).splitlines()[0], *[None] * 8])
            flagged = True
            continue
        modes = [(r.label, m) for r in results for m in r.modes]
        if scenario.output.catalog:
            catalog_modes(variant_hash, "sweep", [m for _, m in modes], _preset_name(variant))
        if not modes:
            rows.append([*prefix, "no-modes", None, *[None] * 8])
            flagged = True
            continue
        for label, mode in sorted(modes, key=lambda item: item[1].wavelength_nm):
            rows.append(
                [
                    *prefix,
                    "ok",
                    None,
                    label,
                    mode.parity,
                    mode.wavelength_nm,
                    mode.quality_factor,
                    mode.mode_volume_nm3,
                    mode.mode_volume_norm,
                    mode.purcell_factor,
                    int(mode.flagged),
                ]
            )
            flagged = flagged or mode.flagged
    path = artifacts.write_csv(_out(scenario, "sweep.csv"), SWEEP_COLUMNS, rows, scenario_hash(scenario))
    logger.info("Sweep finished", extra={"points": len(sweep.values), "rows": len(rows), "flagged": flagged})
    return Outcome(artifacts=[path], flagged=flagged)
