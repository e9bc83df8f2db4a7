"""Experiment configuration: a line-oriented key/value format with sections.

The grammar is INI-style (parsed by `configparser`): `[section]` headers,
`key = value` lines, `#`/`;` comments.  Vectors are whitespace-separated
floats; matrices separate rows with `;`.  See README for the full grammar
and defaults.  Experiments are plain files so runs are diffable artifacts.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import problems
from .errors import ConfigurationError
from .dynamics import IntegratorConfig
from .schedules import ConstantDamping, Hyperbolic, PolynomialDamping, with_modified_nu

PROBLEM_KINDS = ("quadratic", "flat_quadratic", "l1_denoise")
FAMILY_KINDS = ("constant", "hyperbolic", "polynomial")
VARIANT_KINDS = ("auto", "standard", "symmetric")
FIT_MODELS = ("exponential", "polynomial")
OUTPUT_FORMATS = ("csv", "json")


def _parse_vector(raw: str, where: str) -> np.ndarray:
    try:
        vec = np.array([float(tok) for tok in raw.split()], dtype=float)
    except ValueError as exc:
        raise ConfigurationError(f"{where}: expected whitespace-separated floats, got {raw!r}") from exc
    if vec.size == 0:
        raise ConfigurationError(f"{where}: empty vector")
    return vec


def _parse_matrix(raw: str, where: str) -> np.ndarray:
    rows = [r.strip() for r in raw.split(";") if r.strip()]
    mat = [_parse_vector(r, where) for r in rows]
    if len({row.size for row in mat}) != 1:
        raise ConfigurationError(f"{where}: ragged matrix rows")
    return np.vstack(mat)


@dataclass
class ExperimentConfig:
    """Validated experiment description; `build_*` construct the live objects."""

    problem_kind: str
    problem_params: dict
    family_kind: str
    family_params: dict
    nu_dot_factor: float
    t0: Optional[float]
    t_end: float
    step: float
    record_stride: int
    variant: str
    tol_mono_scale: float
    bound_rel_tol: float
    integral_rel_tol: float
    x0: Optional[np.ndarray]
    v0: Optional[np.ndarray]
    fit: Optional[dict]
    smoothing: Optional[dict]
    out_dir: str
    formats: tuple
    seed: int
    grid_num: int = 1001
    raw: dict = field(default_factory=dict)

    def build_problem(self) -> problems.ProblemSpec:
        p = self.problem_params
        if self.problem_kind == "quadratic":
            return problems.quadratic(p["Q"], p["b"])
        if self.problem_kind == "flat_quadratic":
            return problems.flat_quadratic(p["A"], p["b"])
        return problems.l1_denoise(p["y"], p["w"])

    def build_family(self):
        fp = self.family_params
        if self.family_kind == "constant":
            base = ConstantDamping(fp["D"], fp["sigma"])
        elif self.family_kind == "hyperbolic":
            base = Hyperbolic(fp["sigma"])
        else:
            base = PolynomialDamping(fp["C"])
        if self.nu_dot_factor != 1.0:
            return with_modified_nu(base, factor=self.nu_dot_factor)
        return base

    def build_integrator(self, family) -> IntegratorConfig:
        t0 = family.default_t0 if self.t0 is None else self.t0
        return IntegratorConfig(
            t0=t0, t_end=self.t_end, step=self.step, record_stride=self.record_stride
        )

    def initial_point(self, dim: int):
        x0 = np.ones(dim) if self.x0 is None else self.x0
        v0 = np.zeros(dim) if self.v0 is None else self.v0
        if x0.shape != (dim,) or v0.shape != (dim,):
            raise ConfigurationError(
                f"[initial]: x0/v0 must have length {dim} (problem dimension)"
            )
        return x0, v0


def load_config(path: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            parser.read_file(fh, source=path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigurationError(f"config parse error: {exc}") from exc

    def need(section: str) -> configparser.SectionProxy:
        if not parser.has_section(section):
            raise ConfigurationError(f"missing required section [{section}]")
        return parser[section]

    def get_float(section, key, default=None, required=False):
        if parser.has_option(section, key):
            try:
                return parser.getfloat(section, key)
            except ValueError as exc:
                raise ConfigurationError(f"[{section}].{key}: not a number") from exc
        if required:
            raise ConfigurationError(f"[{section}].{key} is required")
        return default

    def get_int(section, key, default):
        if parser.has_option(section, key):
            try:
                return parser.getint(section, key)
            except ValueError as exc:
                raise ConfigurationError(f"[{section}].{key}: not an integer") from exc
        return default

    prob = need("problem")
    kind = prob.get("kind", "").strip()
    if kind not in PROBLEM_KINDS:
        raise ConfigurationError(
            f"[problem].kind must be one of {PROBLEM_KINDS}, got {kind!r}"
        )
    params: dict = {}
    if kind == "quadratic":
        if "q_diag" in prob:
            params["Q"] = np.diag(_parse_vector(prob["q_diag"], "[problem].q_diag"))
        elif "q_rows" in prob:
            params["Q"] = _parse_matrix(prob["q_rows"], "[problem].q_rows")
        else:
            raise ConfigurationError("[problem]: quadratic needs q_diag or q_rows")
        n = params["Q"].shape[0]
        params["b"] = (
            _parse_vector(prob["b"], "[problem].b") if "b" in prob else np.zeros(n)
        )
    elif kind == "flat_quadratic":
        if "a_rows" not in prob:
            raise ConfigurationError("[problem]: flat_quadratic needs a_rows")
        params["A"] = _parse_matrix(prob["a_rows"], "[problem].a_rows")
        params["b"] = (
            _parse_vector(prob["b"], "[problem].b")
            if "b" in prob
            else np.zeros(params["A"].shape[0])
        )
    else:
        if "y" not in prob:
            raise ConfigurationError("[problem]: l1_denoise needs y")
        params["y"] = _parse_vector(prob["y"], "[problem].y")
        params["w"] = get_float("problem", "w", default=1.0)

    sched = need("schedule")
    family_kind = sched.get("family", "").strip()
    if family_kind not in FAMILY_KINDS:
        raise ConfigurationError(
            f"[schedule].family must be one of {FAMILY_KINDS}, got {family_kind!r}"
        )
    fparams: dict = {}
    if family_kind == "constant":
        fparams["D"] = get_float("schedule", "d", required=True)
        fparams["sigma"] = get_float("schedule", "sigma", required=True)
    elif family_kind == "hyperbolic":
        fparams["sigma"] = get_float("schedule", "sigma", required=True)
    else:
        fparams["C"] = get_float("schedule", "c", required=True)
    nu_dot_factor = get_float("schedule", "nu_dot_factor", default=1.0)

    need("integrator")
    t_end = get_float("integrator", "t_end", required=True)
    step = get_float("integrator", "step", default=1e-3)
    if step <= 0:
        raise ConfigurationError("[integrator].step must be positive")
    record_stride = get_int("integrator", "record_stride", 10)
    if record_stride < 1:
        raise ConfigurationError("[integrator].record_stride must be >= 1")
    t0 = get_float("integrator", "t0", default=None)

    variant = "auto"
    tol_mono_scale = 1e-8
    bound_rel_tol = 1e-6
    integral_rel_tol = 1e-3
    if parser.has_section("lyapunov"):
        variant = parser["lyapunov"].get("variant", "auto").strip()
        if variant not in VARIANT_KINDS:
            raise ConfigurationError(
                f"[lyapunov].variant must be one of {VARIANT_KINDS}, got {variant!r}"
            )
        tol_mono_scale = get_float("lyapunov", "tol_mono_scale", default=1e-8)
        bound_rel_tol = get_float("lyapunov", "bound_rel_tol", default=1e-6)
        integral_rel_tol = get_float("lyapunov", "integral_rel_tol", default=1e-3)
        for label, v in (
            ("tol_mono_scale", tol_mono_scale),
            ("bound_rel_tol", bound_rel_tol),
            ("integral_rel_tol", integral_rel_tol),
        ):
            if v <= 0:
                raise ConfigurationError(f"[lyapunov].{label} must be positive")

    x0 = v0 = None
    if parser.has_section("initial"):
        if "x0" in parser["initial"]:
            x0 = _parse_vector(parser["initial"]["x0"], "[initial].x0")
        if "v0" in parser["initial"]:
            v0 = _parse_vector(parser["initial"]["v0"], "[initial].v0")

    fit = None
    if parser.has_section("fit"):
        model = parser["fit"].get("model", "").strip()
        if model not in FIT_MODELS:
            raise ConfigurationError(f"[fit].model must be one of {FIT_MODELS}")
        fit = {"model": model}
        if "window" in parser["fit"]:
            win = _parse_vector(parser["fit"]["window"], "[fit].window")
            if win.size != 2 or win[0] >= win[1]:
                raise ConfigurationError("[fit].window must be two increasing floats")
            fit["window"] = (float(win[0]), float(win[1]))
        fit["predicted"] = get_float("fit", "predicted", default=None)
        fit["required"] = get_float("fit", "required", default=None)

    smoothing = None
    if parser.has_section("smoothing"):
        approx = parser["smoothing"].get("approximation", "huber_l1").strip()
        if approx != "huber_l1":
            raise ConfigurationError(
                f"[smoothing].approximation: only 'huber_l1' is shipped, got {approx!r}"
            )
        kind_s = parser["smoothing"].get("kind", "exponential").strip()
        if kind_s not in ("exponential", "polynomial"):
            raise ConfigurationError("[smoothing].kind must be exponential or polynomial")
        eps = get_float("smoothing", "epsilon", default=0.5)
        if eps <= 0:
            raise ConfigurationError("[smoothing].epsilon must be positive")
        smoothing = {"approximation": approx, "kind": kind_s, "epsilon": eps}
        if kind == "quadratic" or kind == "flat_quadratic":
            raise ConfigurationError(
                "[smoothing] is only supported with the l1_denoise problem"
            )

    out_dir = "out"
    formats = ("csv", "json")
    if parser.has_section("output"):
        out_dir = parser["output"].get("directory", "out").strip()
        if "formats" in parser["output"]:
            fmts = tuple(parser["output"]["formats"].split())
            for f in fmts:
                if f not in OUTPUT_FORMATS:
                    raise ConfigurationError(f"[output].formats: unknown format {f!r}")
            formats = fmts

    seed = 0
    if parser.has_section("experiment"):
        seed = get_int("experiment", "seed", 0)
    grid_num = get_int("integrator", "grid_num", 1001)

    return ExperimentConfig(
        problem_kind=kind,
        problem_params=params,
        family_kind=family_kind,
        family_params=fparams,
        nu_dot_factor=nu_dot_factor,
        t0=t0,
        t_end=t_end,
        step=step,
        record_stride=record_stride,
        variant=variant,
        tol_mono_scale=tol_mono_scale,
        bound_rel_tol=bound_rel_tol,
        integral_rel_tol=integral_rel_tol,
        x0=x0,
        v0=v0,
        fit=fit,
        smoothing=smoothing,
        out_dir=out_dir,
        formats=formats,
        seed=seed,
        grid_num=grid_num,
        raw={s: dict(parser[s]) for s in parser.sections()},
    )
