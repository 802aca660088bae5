"""State-definition documents: flat key-value text files describing a CvState.

Schema (one `key = value` pair per line, '#' comments allowed)::

    family  = ghz_like | w_like | indicator | annihilated_ghz
    sigma   = <float>            # ghz_like, w_like, annihilated_ghz
    epsilon = <float>            # all families
    shift   = <float >= 0>       # w_like displacement
    beta    = <float>            # indicator anchor half-width
    p       = <float in [0, 1]>  # pure-state weight
    noise   = gaussian | box     # required when p < 1
    delta   = <float>            # noise width, required when p < 1

There is deliberately no expression language: every family is finitely
parameterized, and scans sweep these keys numerically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .states import CONVENTIONS, CvState, DiagonalNoise, build_family_state

FAMILIES = ("ghz_like", "w_like", "indicator", "annihilated_ghz")

_FAMILY_PARAMS = {
    "ghz_like": ("sigma", "epsilon"),
    "w_like": ("sigma", "epsilon", "shift"),
    "indicator": ("beta", "epsilon"),
    "annihilated_ghz": ("sigma", "epsilon"),
}

SWEEPABLE = ("p", "epsilon", "delta", "sigma", "shift", "beta", "x0")


class StateDocumentError(ValueError):
    """Schema violation in a state-definition document, with location info."""


@dataclass
class StateSpecDocument:
    family: str
    params: dict[str, float]
    p: float
    noise_kind: str | None = None
    noise_delta: float | None = None
    source: str = "<memory>"

    def with_updates(self, updates: dict[str, float]) -> "StateSpecDocument":
        params = dict(self.params)
        p = self.p
        delta = self.noise_delta
        for key, value in updates.items():
            if key == "p":
                p = value
            elif key == "delta":
                delta = value
            elif key in _FAMILY_PARAMS[self.family]:
                params[key] = value
            elif key == "x0":
                continue  # probe parameter, not a state parameter
            else:
                raise StateDocumentError(
                    f"parameter {key!r} does not apply to family {self.family!r}"
                )
        return StateSpecDocument(self.family, params, p, self.noise_kind, delta, self.source)

    def build(self) -> CvState:
        pure = build_family_state(self.family, **self.params)
        noise = None
        if self.noise_kind is not None:
            if self.noise_delta is None:
                raise StateDocumentError("noise requires a width 'delta'")
            noise = DiagonalNoise(self.noise_kind, self.noise_delta)
        try:
            return CvState(p=self.p, pure=pure, noise=noise)
        except ValueError as exc:
            raise StateDocumentError(str(exc)) from exc


def parse_state_document(text: str, source: str = "<memory>") -> StateSpecDocument:
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise StateDocumentError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in entries:
            raise StateDocumentError(f"{source}:{lineno}: duplicate key {key!r}")
        entries[key] = value

    family = entries.pop("family", None)
    if family is None:
        raise StateDocumentError(f"{source}: missing required key 'family'")
    if family not in FAMILIES:
        raise StateDocumentError(
            f"{source}: unknown family {family!r}; expected one of {', '.join(FAMILIES)}"
        )

    def take_float(key: str, required: bool) -> float | None:
        if key not in entries:
            if required:
                raise StateDocumentError(f"{source}: field {key!r} is required for {family}")
            return None
        raw = entries.pop(key)
        try:
            return float(raw)
        except ValueError as exc:
            raise StateDocumentError(f"{source}: field {key!r} is not a number: {raw!r}") from exc

    params = {}
    for name in _FAMILY_PARAMS[family]:
        params[name] = take_float(name, required=True)
    p = take_float("p", required=True)
    if p is None or not 0.0 <= p <= 1.0:
        raise StateDocumentError(f"{source}: p must lie in [0, 1]")

    noise_kind = entries.pop("noise", None)
    noise_delta = take_float("delta", required=False)
    if noise_kind is not None and noise_kind not in ("gaussian", "box"):
        raise StateDocumentError(f"{source}: noise must be 'gaussian' or 'box', got {noise_kind!r}")
    if p < 1.0 and (noise_kind is None or noise_delta is None):
        raise StateDocumentError(f"{source}: p < 1 requires 'noise' and 'delta'")
    if noise_kind is not None and noise_delta is None:
        raise StateDocumentError(f"{source}: 'noise' given without 'delta'")

    if entries:
        stray = ", ".join(sorted(entries))
        raise StateDocumentError(f"{source}: unknown field(s): {stray}")

    doc = StateSpecDocument(family, params, p, noise_kind, noise_delta, source)
    doc.build()  # validate positivity constraints eagerly
    return doc


def load_state_document(path: str | Path) -> StateSpecDocument:
    path = Path(path)
    return parse_state_document(path.read_text(), source=str(path))


def conventions_block() -> dict[str, str]:
    return dict(CONVENTIONS)
