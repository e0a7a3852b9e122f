"""Flat ``key=value`` run configuration with a fixed schema.

Values are layered: built-in defaults, then a config file, then command-line
overrides.  Unknown keys are rejected.
"""

from __future__ import annotations

from pathlib import Path

from .adjoint import ObjectiveWeights
from .synth import SynthSpec
from .vip import BoxBounds, VipConfig

__all__ = ["SCHEMA", "RunConfig", "ConfigError"]


class ConfigError(ValueError):
    pass


def _bool(text: str) -> bool:
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _opt_float(text):
    if text is None or str(text).strip().lower() in ("", "none", "auto"):
        return None
    return float(text)


# key -> (parser, default, help)
SCHEMA: dict[str, tuple] = {
    # domain and grids
    "x_min": (float, -1.0, "left/bottom corner of the square domain"),
    "x_max": (float, 1.0, "right/top corner of the square domain"),
    "n_fine": (int, 400, "nodes per axis of the data-generation grid"),
    "n_coarse": (int, 150, "nodes per axis of the reconstruction grid"),
    # phantom
    "phantom": (str, "disk", "disk | heartlung | shepplogan"),
    "sigma_b": (_opt_float, None, "background sigma (auto: phantom default)"),
    "mu_b": (_opt_float, None, "background mu (auto: phantom default)"),
    # data
    "g1": (float, 1.0, "first boundary illumination"),
    "g2": (float, 2.0, "second boundary illumination"),
    "noise": (float, 0.0, "multiplicative Gaussian noise level"),
    "seed": (int, 0, "noise seed"),
    # objective
    "alpha1": (float, 1.0, "misfit weight, illumination 1"),
    "alpha2": (float, 1.0, "misfit weight, illumination 2"),
    "xi1": (float, 0.01, "H1 weight on sigma"),
    "xi2": (float, 0.01, "H1 weight on mu"),
    "gamma1": (float, 0.1, "L1 weight on sigma"),
    "gamma2": (float, 0.1, "L1 weight on mu"),
    "misfit_norm": (str, "euclidean", "euclidean (plain nodal sum) | weighted (h^2 sum)"),
    # optimiser
    "theta": (float, 0.3, "inertia"),
    "c1": (float, 1.9, "step numerator, < 2"),
    "c2": (float, 0.1, "step regulariser, > 0"),
    "growth": (float, 2.0, "backtracking growth factor n"),
    "L0": (float, 1.0, "initial Lipschitz estimate"),
    "k": (float, 1.0, "complementarity scaling"),
    "tol": (float, 1e-4, "stopping tolerance on ||E1|| + ||E2||"),
    "max_iter": (int, 500, "VIP iteration cap"),
    "max_backtracks": (int, 60, "backtracking cap per iteration"),
    "box_lower": (float, 0.01, "lower bound as a multiple of the background"),
    "box_upper": (float, 50.0, "upper bound as a multiple of the background"),
    # forward solver
    "picard_tol": (float, 1e-10, "Picard update-norm tolerance"),
    "picard_max_iter": (int, 100, "Picard iteration cap"),
    "adjoint_form": (str, "derivative", "derivative | printed"),
    # reporting
    "write_csv": (_bool, False, "also write x,y,value CSV next to each TPF"),
}


class RunConfig:
    """Validated mapping of schema keys to typed values."""

    def __init__(self, values: dict | None = None):
        self._values = {k: spec[1] for k, spec in SCHEMA.items()}
        if values:
            self.update(values)

    @classmethod
    def layered(cls, path=None, overrides: dict | None = None) -> RunConfig:
        cfg = cls()
        if path is not None:
            cfg.update(cls.parse_file(path))
        if overrides:
            cfg.update(overrides)
        return cfg

    @staticmethod
    def parse_file(path) -> dict[str, str]:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        out = {}
        for lineno, raw in enumerate(path.read_text().splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, _, value = line.partition("=")
            out[key.strip()] = value.strip()
        return out

    @staticmethod
    def parse_assignments(items) -> dict[str, str]:
        out = {}
        for item in items or ():
            if "=" not in item:
                raise ConfigError(f"expected key=value, got {item!r}")
            key, _, value = item.partition("=")
            out[key.strip()] = value.strip()
        return out

    def update(self, values: dict) -> None:
        for key, raw in values.items():
            if key not in SCHEMA:
                raise ConfigError(f"unknown configuration key {key!r}")
            parser = SCHEMA[key][0]
            try:
                self._values[key] = raw if raw is None and parser is _opt_float else parser(raw)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        self._check()

    def _check(self) -> None:
        v = self._values
        if v["phantom"] not in ("disk", "heartlung", "shepplogan"):
            raise ConfigError(f"unknown phantom {v['phantom']!r}; choose from disk, heartlung, shepplogan")
        if v["misfit_norm"] not in ("euclidean", "weighted"):
            raise ConfigError("misfit_norm must be 'euclidean' or 'weighted'")
        if v["adjoint_form"] not in ("derivative", "printed"):
            raise ConfigError("adjoint_form must be 'derivative' or 'printed'")
        if not v["x_max"] > v["x_min"]:
            raise ConfigError("x_max must exceed x_min")

    def __getitem__(self, key):
        return self._values[key]

    def as_dict(self) -> dict:
        return dict(self._values)

    def dump(self) -> str:
        lines = []
        for key, (_, default, help_) in SCHEMA.items():
            lines.append(f"# {help_}")
            lines.append(f"{key}={self._fmt(self._values[key])}")
        return "\n".join(lines) + "\n"

    @staticmethod
    def _fmt(value) -> str:
        if value is None:
            return "auto"
        if isinstance(value, bool):
            return "true" if value else "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)

    def write(self, path) -> None:
        Path(path).write_text(self.dump())

    # typed views -----------------------------------------------------------------

    def backgrounds(self) -> tuple[float, float]:
        from .phantoms import DEFAULT_BACKGROUNDS

        sb, mb = DEFAULT_BACKGROUNDS[self["phantom"]]
        return (
            sb if self["sigma_b"] is None else self["sigma_b"],
            mb if self["mu_b"] is None else self["mu_b"],
        )

    def weights(self) -> ObjectiveWeights:
        v = self._values
        return ObjectiveWeights(v["alpha1"], v["alpha2"], v["xi1"], v["xi2"], v["gamma1"], v["gamma2"])

    def vip(self) -> VipConfig:
        v = self._values
        return VipConfig(
            v["theta"], v["c1"], v["c2"], v["growth"], v["L0"], v["k"], v["tol"], v["max_iter"], v["max_backtracks"]
        )

    def bounds(self) -> BoxBounds:
        sb, mb = self.backgrounds()
        return BoxBounds.around(sb, mb, self["box_lower"], self["box_upper"])

    def synth(self) -> SynthSpec:
        v = self._values
        return SynthSpec(v["n_fine"], v["n_coarse"], v["g1"], v["g2"], v["noise"], v["seed"])
