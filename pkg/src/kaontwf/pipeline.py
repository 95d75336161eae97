"""End-to-end study: curves, synthetic WWA data, eps fit and model verdicts."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

import numpy as np

from . import asymmetry, events, fit
from .errors import ConfigError, KaonTwfError, ValidationError
from .io import write_json
from .params import CONFIG_KEYS, KaonPhysics, load_physics, read_config
from .states import Channel, Flavor, Model, TwfVariant

STUDY_KEYS = ("twf_variant", "n_per_flavor", "seed", "bin_t_min", "bin_t_max", "bin_width",
              "curve_t_max", "curve_points", "t_max", "threads")
WINDOWS = {"1_10": (1.0, 10.0), "10_40": (10.0, 40.0)}


class StageError(KaonTwfError):
    """A pipeline stage failed; ``original`` is the underlying error."""

    def __init__(self, stage: str, original: Exception):
        super().__init__(f"stage {stage!r} failed: {original}")
        self.stage = stage
        self.original = original


@dataclass(frozen=True)
class StudyConfig:
    physics: KaonPhysics = field(default_factory=KaonPhysics.default)
    twf_variant: TwfVariant = TwfVariant.MATCHED_LARGE_T
    n_per_flavor: int = 1_000_000
    seed: int = 0
    bin_t_min: float = 1.0
    bin_t_max: float = 20.0
    bin_width: float = 1.0
    curve_t_max: float = 40.0
    curve_points: int = 801
    t_max: float | None = None
    threads: int = 1

    def __post_init__(self):
        object.__setattr__(self, "twf_variant", TwfVariant.parse(self.twf_variant))
        if self.n_per_flavor < 1:
            raise ConfigError("n_per_flavor must be >= 1", field="n_per_flavor")
        if not 0 <= self.bin_t_min < self.bin_t_max:
            raise ConfigError("need 0 <= bin_t_min < bin_t_max", field="bin_t_min")
        if not self.bin_width > 0:
            raise ConfigError("bin_width must be positive", field="bin_width")
        if self.curve_t_max < 40.0:
            raise ConfigError("curve_t_max must cover [0, 40] tau_S", field="curve_t_max")
        if self.curve_points < 2:
            raise ConfigError("curve_points must be >= 2", field="curve_points")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1", field="threads")

    @property
    def bin_edges(self) -> np.ndarray:
        n = int(round((self.bin_t_max - self.bin_t_min) / self.bin_width))
        if n < 1:
            raise ConfigError("bin window holds no bin", field="bin_width")
        return self.bin_t_min + self.bin_width * np.arange(n + 1)

    @property
    def twf_model(self) -> Model:
        return Model.twf(self.twf_variant)

    def to_config(self) -> dict:
        cfg = dict(self.physics.to_config())
        cfg.update({"twf_variant": self.twf_variant.value, "n_per_flavor": self.n_per_flavor,
                    "seed": self.seed, "bin_t_min": self.bin_t_min, "bin_t_max": self.bin_t_max,
                    "bin_width": self.bin_width, "curve_t_max": self.curve_t_max,
                    "curve_points": self.curve_points,
                    "t_max": "auto" if self.t_max is None else self.t_max,
                    "threads": self.threads})
        return cfg


def load_study_config(source=None, **overrides) -> StudyConfig:
    """Study settings from a key-value file or mapping; physics keys default if absent."""
    if source is None:
        doc: Mapping = {}
    elif isinstance(source, Mapping):
        doc = dict(source)
    else:
        doc = read_config(source)
    unknown = set(doc) - set(CONFIG_KEYS) - set(STUDY_KEYS) - {"defaults"}
    if unknown:
        raise ConfigError(f"unknown field(s): {', '.join(sorted(unknown))}", field=sorted(unknown)[0])
    kwargs = {"physics": load_physics(doc, use_defaults=True)}
    casts = {"n_per_flavor": int, "seed": int, "curve_points": int, "threads": int,
             "bin_t_min": float, "bin_t_max": float, "bin_width": float, "curve_t_max": float}
    for key, cast in casts.items():
        if key in doc:
            try:
                kwargs[key] = cast(float(doc[key])) if cast is int else cast(doc[key])
            except (TypeError, ValueError):
                raise ConfigError(f"field {key!r} must be a number, got {doc[key]!r}", field=key) from None
    if "twf_variant" in doc:
        try:
            kwargs["twf_variant"] = TwfVariant.parse(doc["twf_variant"])
        except ValidationError as exc:
            raise ConfigError(str(exc), field="twf_variant") from None
    if "t_max" in doc and str(doc["t_max"]).strip().lower() != "auto":
        try:
            kwargs["t_max"] = float(doc["t_max"])
        except ValueError:
            raise ConfigError(f"field 't_max' must be a number or 'auto'", field="t_max") from None
    cfg = StudyConfig(**kwargs)
    overrides = {k: v for k, v in overrides.items() if v is not None}
    return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class StudyReport:
    config: dict
    curves: dict[str, asymmetry.AsymmetryCurve]
    limits: dict[str, dict[str, float]]
    discrepancies: dict[str, dict]
    binned: events.BinnedAsymmetry
    fit_result: fit.FitResult
    chi2: dict[str, fit.ModelChi2]
    verdicts: dict[str, str]
    output_dir: Path | None = None

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "curves": {"wwa": "wwa_curve.csv", "twf": "twf_curve.csv"},
            "limits": self.limits,
            "discrepancy": self.discrepancies,
            "binned_asymmetry": {"bin_edges": self.binned.bin_edges, "values": self.binned.values,
                                 "sigma": self.binned.sigma, "counts_k0": self.binned.counts_k0,
                                 "counts_k0bar": self.binned.counts_k0bar},
            "fit": self.fit_result.to_dict(),
            "model_chi2": {k: v.to_dict() for k, v in self.chi2.items()},
            "verdict": self.verdicts,
        }


def _stage(name, func, *args, **kwargs):
    try:
        return func(*args, **kwargs)
    except KaonTwfError as exc:
        raise StageError(name, exc) from exc


def _disc(d: asymmetry.Discrepancy) -> dict:
    return {"max_abs_diff": d.max_abs_diff, "argmax_t": d.argmax_t}


def _curves_and_limits(cfg: StudyConfig):
    p = cfg.physics
    curves = {tag: asymmetry.curve(model, 0.0, cfg.curve_t_max, cfg.curve_points, p)
              for tag, model in (("wwa", Model.WWA), ("twf", cfg.twf_model))}
    limits = {}
    for tag, model in (("wwa", Model.WWA), ("twf", cfg.twf_model)):
        limits[tag] = {"small_t": asymmetry.small_t_limit(model, p),
                       "large_t": asymmetry.large_t_limit(model, p)}
    other = asymmetry.curve(Model.twf(TwfVariant.MATCHED_THREE_PION
                                      if cfg.twf_variant is TwfVariant.MATCHED_LARGE_T
                                      else TwfVariant.MATCHED_LARGE_T),
                            0.0, cfg.curve_t_max, cfg.curve_points, p)
    disc = {f"wwa_vs_twf_{k}": _disc(asymmetry.discrepancy(curves["wwa"], curves["twf"], w))
            for k, w in WINDOWS.items()}
    disc["twf_variants_10_40"] = _disc(asymmetry.discrepancy(curves["twf"], other, WINDOWS["10_40"]))
    return curves, limits, disc


def _generate(cfg: StudyConfig):
    out = {}
    for k, flavor in enumerate((Flavor.K0, Flavor.K0BAR)):
        sampler = events.EventSampler(Model.WWA, flavor, cfg.physics, (Channel.TWO_PION,), cfg.t_max)
        # flavors get distinct, seed-derived streams
        seed = int(np.random.SeedSequence([cfg.seed, k]).generate_state(1)[0])
        out[flavor] = sampler.draw(cfg.n_per_flavor, seed, cfg.threads, normalization="production")
    return out


def run_study(cfg: StudyConfig, out_dir=None) -> StudyReport:
    """Run every stage; write artifacts to ``out_dir`` when given.

    WWA is the data-generating truth. Both WWA and the configured T.W.F.
    variant are then scored against the synthetic data with no free
    parameters; a model is falsified when its n_sigma exceeds 5.
    """
    curves, limits, disc = _stage("curves", _curves_and_limits, cfg)
    samples = _stage("generate", _generate, cfg)
    binned = _stage("bin", events.bin_asymmetry, samples[Flavor.K0], samples[Flavor.K0BAR],
                    cfg.bin_edges)
    fit_result = _stage("fit", fit.fit_epsilon, binned, cfg.physics)
    chi2 = {tag: _stage("chi2", fit.model_chi2, model, binned, cfg.physics)
            for tag, model in (("wwa", Model.WWA), ("twf", cfg.twf_model))}
    verdicts = {tag: fit.verdict(c.n_sigma) for tag, c in chi2.items()}
    report = StudyReport(cfg.to_config(), curves, limits, disc, binned, fit_result, chi2, verdicts,
                         Path(out_dir) if out_dir is not None else None)
    if out_dir is not None:
        _stage("write", _write, report, samples)
    return report


def _write(report: StudyReport, samples) -> None:
    out = report.output_dir
    out.mkdir(parents=True, exist_ok=True)
    asymmetry.write_curve_csv(report.curves["wwa"], out / "wwa_curve.csv")
    asymmetry.write_curve_csv(report.curves["twf"], out / "twf_curve.csv")
    for flavor, name in ((Flavor.K0, "events_k0.csv"), (Flavor.K0BAR, "events_k0bar.csv")):
        events.write_events_csv(samples[flavor], out / name, config=report.config)
    fit.write_fit_json(report.fit_result, out / "fit.json")
    write_json(out / "report.json", report.to_dict())
