"""Model files in, reports and scan tables out.

A model file is JSON::

    {
      "name": "optional label",
      "hopping":   [{"s": [1, 0, 0], "re": -1.0, "im": 0.0}, ...],
      "hopping_2": [...],
      "potential": [{"s": [0, 0, 0], "value": -3.0}, ...]
    }

``hopping_2`` (the second particle) defaults to ``hopping``. Missing conjugate
partners are filled in; present ones must match. Problems are reported as
:class:`~sill.errors.ModelValidationError` with the JSON path of the offending
entry, or with line and column for syntax errors. Potential entries are
mirrored the same way; a warning names the sites that were added.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, TextIO

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from sill.birman_schwinger import OneParticleModel
from sill.config import DEFAULT_TOLERANCES
from sill.errors import ModelValidationError
from sill.lattice_model import HoppingCoefficients
from sill.two_particle import TwoParticleModel

if TYPE_CHECKING:
    from collections.abc import Iterable

    from sill.config import Tolerances
    from sill.two_particle import ScanRow

__all__ = [
    "SCAN_HEADER",
    "LoadedModel",
    "ModelFile",
    "format_float",
    "load_model",
    "parse_model",
    "write_json",
    "write_scan_csv",
]

logger = logging.getLogger(__name__)

SCAN_HEADER = (
    "k1",
    "k2",
    "k3",
    "e_min",
    "e_max",
    "p_k1",
    "p_k2",
    "p_k3",
    "m_k",
    "gap",
    "n_below",
    "gamma",
)

Site = tuple[int, int, int]


class HoppingEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    s: Site
    re: float
    im: float = 0.0


class PotentialEntry(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    s: Site
    value: float


class ModelFile(BaseModel):
    """Schema of a model file."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str | None = None
    hopping: list[HoppingEntry] = Field(min_length=1)
    hopping_2: list[HoppingEntry] | None = None
    potential: list[PotentialEntry] = Field(default_factory=list)


@dataclass(frozen=True)
class LoadedModel:
    """Validated coefficients of a model file."""

    name: str | None
    hopping: HoppingCoefficients
    hopping_2: HoppingCoefficients
    potential: HoppingCoefficients
    source: str

    def one_particle(self, *, tolerances: Tolerances = DEFAULT_TOLERANCES) -> OneParticleModel:
        """``hopping`` plus ``potential`` as a one-particle model."""
        return OneParticleModel.from_hoppings(self.hopping, self.potential, tolerances=tolerances)

    def two_particle(self, *, tolerances: Tolerances = DEFAULT_TOLERANCES) -> TwoParticleModel:
        """Two particles with ``hopping`` and ``hopping_2`` interacting through ``potential``."""
        return TwoParticleModel.from_hoppings(
            self.hopping, self.hopping_2, self.potential, tolerances=tolerances
        )


def _path(loc: tuple[str | int, ...]) -> str:
    parts = []
    for item in loc:
        parts.append(f"[{item}]" if isinstance(item, int) else f".{item}")
    return "$" + "".join(parts)


def _hopping(entries: list[HoppingEntry], field_name: str) -> HoppingCoefficients:
    try:
        return HoppingCoefficients.from_entries(
            [(entry.s, complex(entry.re, entry.im)) for entry in entries]
        )
    except ModelValidationError as exc:
        raise ModelValidationError(str(exc), location=_path((field_name,))) from exc


def _potential(entries: list[PotentialEntry], source: str) -> HoppingCoefficients:
    given = {entry.s for entry in entries}
    try:
        potential = HoppingCoefficients.from_entries([(entry.s, entry.value) for entry in entries])
    except ModelValidationError as exc:
        raise ModelValidationError(f"{source}: {exc}", location="$.potential") from exc
    mirrored = sorted(site for site in potential.entries if site not in given)
    if mirrored:
        logger.warning(
            "%s: potential entries mirrored to %s so that v_hat(-s) = v_hat(s); "
            "list them explicitly to silence this warning",
            source,
            mirrored,
        )
    return potential


def parse_model(text: str, source: str = "<string>") -> LoadedModel:
    """Parse and validate model-file JSON.

    Raises:
        ModelValidationError: On malformed JSON, schema violations or inconsistent
            conjugate pairs.
    """
    try:
        raw: Any = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelValidationError(
            f"{source}: invalid JSON: {exc.msg}", line=exc.lineno, column=exc.colno
        ) from exc

    try:
        spec = ModelFile.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ModelValidationError(
            f"{source}: {first['msg']}", location=_path(tuple(first["loc"]))
        ) from exc

    hopping = _hopping(spec.hopping, "hopping")
    hopping_2 = hopping if spec.hopping_2 is None else _hopping(spec.hopping_2, "hopping_2")
    potential = _potential(spec.potential, source)

    for field_name, coefficients in (("hopping", hopping), ("hopping_2", hopping_2)):
        try:
            coefficients.require_hermitian()
        except ModelValidationError as exc:
            raise ModelValidationError(f"{source}: {exc}", location=_path((field_name,))) from exc

    logger.debug(
        "loaded model %s: %d hopping, %d potential coefficients",
        spec.name or source,
        len(hopping),
        len(potential),
    )
    return LoadedModel(spec.name, hopping, hopping_2, potential, source)


def load_model(path: str | Path) -> LoadedModel:
    """Read and validate a model file.

    Raises:
        ModelValidationError: If the file cannot be read or fails validation.

    Example:
        >>> from sill.io import load_model
        >>> model = load_model("tests/data/std_laplacian_mu0.json")  # doctest: +SKIP
        >>> model.one_particle().threshold  # doctest: +SKIP
        0.0
    """
    target = Path(path)
    try:
        text = target.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelValidationError(f"cannot read model file {target}: {exc}") from exc
    return parse_model(text, source=str(target))


def write_json(data: dict[str, Any], path: str | Path) -> Path:
    """Write a report as indented JSON; floats keep their shortest round-trip form."""
    target = Path(path)
    target.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")
    return target


def format_float(value: float) -> str:
    """Twelve significant digits, the precision of every CSV column."""
    return f"{value:.12g}"


def write_scan_csv(rows: Iterable[ScanRow], out: TextIO) -> int:
    """Write fiber-scan rows in input order; failed rows carry ``FAILED`` after ``k``.

    Returns:
        The number of rows written.
    """
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(SCAN_HEADER)
    count = 0
    for row in rows:
        k = [format_float(x) for x in row.k]
        if row.failed:
            writer.writerow([*k, *(["FAILED"] * (len(SCAN_HEADER) - 3))])
        else:
            writer.writerow(
                [
                    *k,
                    format_float(row.e_min),
                    format_float(row.e_max),
                    *(format_float(x) for x in row.p_k),
                    format_float(row.m_k),
                    format_float(row.gap),
                    str(row.n_below),
                    format_float(row.gamma),
                ]
            )
        count += 1
    return count
