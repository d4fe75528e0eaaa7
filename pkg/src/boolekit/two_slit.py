"""Two-slit screen statistics and the additivity check that fails for waves.

Three preparation contexts share one screen-position grid: slit 1 open,
slit 2 open, both open. If each detected particle went through one slit or
the other with fixed probabilities 1/2, the both-open distribution would be
the average of the single-slit ones; the per-bin deficit

    delta(s) = p12(s) - (p1(s) + p2(s)) / 2

measures the failure of that rule. For Fraunhofer single-slit envelopes
with a cos^2 interference factor the deficit is an order-one effect, and at
the interference nulls the both-open probability drops essentially to zero
even though both single-slit distributions are large there.

All distributions here are ensemble statements about many detections; no
time averaging over a single particle's history is involved anywhere.
Intensities are evaluated at bin centers and normalized over the grid, so
each context is an ordinary finite probability table ready for the same
counter-based sampler the other protocols use.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ._jsonio import dump_json_file, load_json_file
from .errors import EmptyResultError, ShapeError, ValidationError
from .rng import check_seed, cumulative_thresholds, sample_indices

TAG_SLIT1 = "slit1-only"
TAG_SLIT2 = "slit2-only"
TAG_BOTH = "both-open"

DEFAULT_BINS = 401
DEFAULT_SPAN = 10.0
DEFAULT_ADDITIVITY_TOL = 1e-9
FAR_FIELD_RATIO = 10.0


@dataclass(frozen=True)
class SlitGeometry:
    """Fraunhofer two-slit layout.

    slit_width and separation share units with wavelength; span is the
    half-width of the screen window in units of the fringe spacing
    wavelength * screen_distance / separation, so the default window covers
    span fringes on either side of the axis.
    """

    slit_width: float
    separation: float
    wavelength: float
    screen_distance: float
    bins: int = DEFAULT_BINS
    span: float = DEFAULT_SPAN

    def __post_init__(self):
        for name in ("slit_width", "separation", "wavelength", "screen_distance", "span"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise ValidationError(f"{name} must be a positive finite number")
            object.__setattr__(self, name, float(value))
        if isinstance(self.bins, bool) or not isinstance(self.bins, int):
            raise ValidationError("bins must be an integer")
        if self.bins < 3:
            raise ValidationError("need at least 3 screen bins")
        if self.separation <= self.slit_width:
            raise ValidationError(
                "slit separation must exceed the slit width for two distinct slits"
            )
        if self.screen_distance < FAR_FIELD_RATIO * self.separation:
            warnings.warn(
                "screen distance is within an order of magnitude of the slit "
                "separation; the far-field expressions are questionable here",
                stacklevel=2,
            )

    @property
    def fringe_spacing(self) -> float:
        return self.wavelength * self.screen_distance / self.separation

    @property
    def positions(self) -> np.ndarray:
        """Bin-center screen coordinates, exactly symmetric about zero."""
        half = self.span * self.fringe_spacing
        step = 2.0 * half / (self.bins - 1)
        return (np.arange(self.bins) - (self.bins - 1) / 2.0) * step


@dataclass(frozen=True, eq=False)
class SlitContext:
    """One preparation: a tag, the shared grid, and a normalized table."""

    tag: str
    positions: np.ndarray
    distribution: np.ndarray

    def __post_init__(self):
        if self.tag not in (TAG_SLIT1, TAG_SLIT2, TAG_BOTH):
            raise ValidationError(f"unknown context tag {self.tag!r}")
        if self.positions.shape != self.distribution.shape:
            raise ShapeError("positions and distribution must share a shape")
        if np.any(self.distribution < 0):
            raise ValidationError("distribution entries must be nonnegative")


def _envelope(geometry: SlitGeometry, s: np.ndarray, center: float) -> np.ndarray:
    # np.sinc is sin(pi x)/(pi x), so the argument is a (s - center) / (lambda L)
    arg = geometry.slit_width * (s - center) / (
        geometry.wavelength * geometry.screen_distance
    )
    return np.sinc(arg) ** 2


def build_contexts(geometry: SlitGeometry) -> tuple[SlitContext, SlitContext, SlitContext]:
    """The three screen distributions on the shared grid.

    Single-slit contexts carry the diffraction envelope centered on their
    slit; the both-open context carries the on-axis envelope modulated by
    the cos^2 interference factor.
    """
    s = geometry.positions
    lam_l = geometry.wavelength * geometry.screen_distance
    half = geometry.separation / 2.0
    i1 = _envelope(geometry, s, +half)
    i2 = _envelope(geometry, s, -half)
    i12 = _envelope(geometry, s, 0.0) * np.cos(
        math.pi * geometry.separation * s / lam_l
    ) ** 2
    contexts = []
    for tag, intensity in ((TAG_SLIT1, i1), (TAG_SLIT2, i2), (TAG_BOTH, i12)):
        total = float(intensity.sum())
        if not (total > 0 and math.isfinite(total)):
            raise ValidationError(f"{tag}: intensity pattern is degenerate")
        contexts.append(SlitContext(tag, s, intensity / total))
    return tuple(contexts)


@dataclass(frozen=True, eq=False)
class AdditivityReport:
    """Per-bin deficit of the one-slit-or-the-other mixing rule.

    classical_additive is True only when every |deficit| falls within
    tolerance; deficits always sum to zero because all three tables are
    normalized.
    """

    positions: np.ndarray
    deficits: np.ndarray
    max_abs_deficit: float
    classical_additive: bool
    tolerance: float


def additivity_report(
    slit1: SlitContext,
    slit2: SlitContext,
    both: SlitContext,
    *,
    tolerance: float = DEFAULT_ADDITIVITY_TOL,
) -> AdditivityReport:
    tags = (slit1.tag, slit2.tag, both.tag)
    if tags != (TAG_SLIT1, TAG_SLIT2, TAG_BOTH):
        raise ShapeError(f"contexts must arrive as ({TAG_SLIT1}, {TAG_SLIT2}, {TAG_BOTH}), got {tags}")
    if not (
        slit1.positions.shape == slit2.positions.shape == both.positions.shape
        and np.array_equal(slit1.positions, slit2.positions)
        and np.array_equal(slit1.positions, both.positions)
    ):
        raise ShapeError("contexts do not share one screen grid")
    deficits = both.distribution - (slit1.distribution + slit2.distribution) / 2.0
    max_abs = float(np.abs(deficits).max())
    return AdditivityReport(
        positions=slit1.positions,
        deficits=deficits,
        max_abs_deficit=max_abs,
        classical_additive=bool(max_abs <= tolerance),
        tolerance=float(tolerance),
    )


def sample_screen_hits(
    context: SlitContext, runs: int, seed: int, *, threads: int = 1
) -> np.ndarray:
    """Histogram of simulated detections over the context's bins.

    Counter-based sampling: bit-identical for a given (seed, runs),
    independent of chunking. threads is accepted for symmetry with the other
    runners; the histogram is a single reduction either way.
    """
    if isinstance(runs, bool) or not isinstance(runs, int):
        raise ValidationError(f"runs must be an integer, got {runs!r}")
    if runs < 1:
        raise EmptyResultError(f"runs must be >= 1, got {runs}")
    check_seed(seed)
    thresholds = cumulative_thresholds(list(context.distribution))
    counts = np.zeros(len(context.distribution), dtype=np.int64)
    chunk = 1 << 18
    for start in range(0, runs, chunk):
        stop = min(start + chunk, runs)
        ks = np.arange(start, stop, dtype=np.uint64)
        idx = sample_indices(thresholds, seed, ks)
        counts += np.bincount(idx, minlength=len(counts))
    return counts


def write_report_csv(report: AdditivityReport, contexts, path) -> None:
    """Columns s,p1,p2,p12,deficit; floats via repr so rereads are exact."""
    slit1, slit2, both = contexts
    path = Path(path)
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["s", "p1", "p2", "p12", "deficit"])
        for s, p1, p2, p12, d in zip(
            report.positions.tolist(),
            slit1.distribution.tolist(),
            slit2.distribution.tolist(),
            both.distribution.tolist(),
            report.deficits.tolist(),
        ):
            writer.writerow([repr(s), repr(p1), repr(p2), repr(p12), repr(d)])


# --- geometry files -----------------------------------------------------------

_GEOMETRY_KEYS = {
    "a": "slit_width",
    "d": "separation",
    "lambda": "wavelength",
    "L": "screen_distance",
    "bins": "bins",
    "span": "span",
}


def geometry_to_dict(geometry: SlitGeometry) -> dict:
    return {
        "a": geometry.slit_width,
        "d": geometry.separation,
        "lambda": geometry.wavelength,
        "L": geometry.screen_distance,
        "bins": geometry.bins,
        "span": geometry.span,
    }


def geometry_from_dict(data) -> SlitGeometry:
    if not isinstance(data, dict):
        raise ValidationError("geometry document must be a JSON object")
    unknown = set(data) - set(_GEOMETRY_KEYS)
    if unknown:
        raise ValidationError(f"unknown geometry keys: {sorted(unknown)}")
    missing = {"a", "d", "lambda", "L"} - set(data)
    if missing:
        raise ValidationError(f"geometry document is missing keys: {sorted(missing)}")
    kwargs = {_GEOMETRY_KEYS[k]: v for k, v in data.items()}
    return SlitGeometry(**kwargs)


def load_geometry(path) -> SlitGeometry:
    return geometry_from_dict(load_json_file(path))


def save_geometry(geometry: SlitGeometry, path) -> None:
    dump_json_file(Path(path), geometry_to_dict(geometry))


def default_geometry() -> SlitGeometry:
    """Wide slits, wider separation, far screen: a = 10 wavelengths,
    d = 20 wavelengths, L = 1000 wavelengths."""
    return SlitGeometry(
        slit_width=10.0,
        separation=20.0,
        wavelength=1.0,
        screen_distance=1000.0,
    )
