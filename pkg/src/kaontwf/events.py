"""Monte Carlo decay events and binned count asymmetries.

Events are drawn from the normalized joint density over (decay time,
channel) restricted to [0, t_max]. The channel is chosen from the exact
channel masses, the time by inverse-CDF on a tabulated grid with linear
interpolation.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

from .asymmetry import model_rate_law
from .errors import ConfigError, ValidationError
from .io import read_csv, read_json, write_csv, write_json
from .params import KaonPhysics, load_physics
from .states import Channel, Flavor, Model
from . import twf

MIN_T_MAX = 40.0
MAX_TAIL = 1e-3
# automatic t_max is the first candidate leaving less than this outside the window
AUTO_TAIL = 1e-4
T_MAX_CANDIDATES = (40.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0, 20000.0)
GRID_POINTS = 10_000
# half the table nodes resolve the short-lived part
SPLIT_T = 60.0
N_STREAMS = 8
NORMALIZATIONS = ("decays", "production")


class DecayEvent(NamedTuple):
    time: float
    channel: Channel
    initial: Flavor
    model_tag: str


def supported_channels(model, physics: KaonPhysics) -> tuple[Channel, ...]:
    """Channels with a defined rate law under ``model``."""
    model = Model.parse(model)
    hadronic = (Channel.TWO_PION, Channel.THREE_PION)
    leptonic = (Channel.SEMILEPTONIC_PLUS, Channel.SEMILEPTONIC_MINUS)
    if model.is_twf and not twf.constrain(physics, model.variant).is_cp_conserving:
        return hadronic
    return hadronic + leptonic


def _time_table(t_max: float) -> np.ndarray:
    if t_max <= SPLIT_T:
        return np.linspace(0.0, t_max, GRID_POINTS)
    half = GRID_POINTS // 2
    early = np.linspace(0.0, SPLIT_T, half)
    late = np.linspace(SPLIT_T, t_max, GRID_POINTS - half + 1)[1:]
    return np.concatenate([early, late])


class EventSampler:
    """Tabulated joint (time, channel) distribution for one preparation."""

    def __init__(self, model, initial, physics: KaonPhysics, channels=None, t_max=None):
        self.model = Model.parse(model)
        self.initial = Flavor.parse(initial)
        if self.initial not in (Flavor.K0, Flavor.K0BAR):
            raise ValidationError("events are generated for K0 or K0bar only")
        self.physics = physics
        allowed = supported_channels(self.model, physics)
        if channels is None:
            channels = allowed
        channels = tuple(dict.fromkeys(Channel.parse(c) for c in channels))
        if not channels:
            raise ValidationError("at least one channel is required")
        for c in channels:
            if c not in allowed:
                raise ValidationError(f"channel {c.value} is not defined for model {self.model.value}")
        self.channels = channels
        self.laws = [model_rate_law(self.model, self.initial, c, physics) for c in channels]
        self.total_mass = float(sum(law.integral(0.0, np.inf) for law in self.laws))
        if not self.total_mass > 0:
            raise ValidationError("selected channels carry no decay probability")
        if t_max is None:
            t_max = next((c for c in T_MAX_CANDIDATES if self.tail_mass(c) <= AUTO_TAIL),
                         T_MAX_CANDIDATES[-1])
        t_max = float(t_max)
        if not t_max >= MIN_T_MAX:
            raise ConfigError(f"t_max must be >= {MIN_T_MAX} tau_S, got {t_max}", field="t_max")
        tail = self.tail_mass(t_max)
        if tail > MAX_TAIL:
            raise ConfigError(
                f"t_max={t_max} leaves {tail:.3g} of the decay probability outside the window "
                f"(limit {MAX_TAIL})", field="t_max")
        self.t_max = t_max
        self.grid = _time_table(t_max)
        cdfs = np.array([law.integral(0.0, self.grid) for law in self.laws])
        self.cdf_tables = np.maximum.accumulate(cdfs, axis=1)
        self.channel_mass = self.cdf_tables[:, -1]
        self.window_mass = float(self.channel_mass.sum())

    def tail_mass(self, t_max: float) -> float:
        return float(sum(law.integral(t_max, np.inf) for law in self.laws)) / self.total_mass

    @property
    def channel_fractions(self) -> np.ndarray:
        return self.channel_mass / self.window_mass

    def cdf(self, t):
        """Analytic time-marginal CDF within the window."""
        t = np.clip(np.asarray(t, dtype=float), 0.0, self.t_max)
        return sum(law.integral(0.0, t) for law in self.laws) / self.window_mass

    def _draw_stream(self, n: int, seed_seq, produced: bool) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(seed_seq)
        if produced:
            # n kaons produced; only decays into the selected channels inside the window are kept
            n = int(rng.binomial(n, self.window_mass))
        u = rng.random(n) * self.window_mass
        edges = np.concatenate([[0.0], np.cumsum(self.channel_mass)])
        codes = np.clip(np.searchsorted(edges, u, side="right") - 1, 0, len(self.channels) - 1)
        times = np.empty(n)
        for k in range(len(self.channels)):
            sel = codes == k
            times[sel] = np.interp(u[sel] - edges[k], self.cdf_tables[k], self.grid)
        return times, codes

    def draw(self, n: int, seed: int, workers: int = 1, n_streams: int = N_STREAMS,
             normalization: str = "decays") -> EventSet:
        """Draw events; identical for a given seed whatever ``workers`` is.

        With ``normalization="decays"`` exactly ``n`` events are returned.
        With ``"production"``, ``n`` kaons are produced and each yields an
        event with its probability of decaying into the selected channels
        within [0, t_max], so per-flavor counts follow the unnormalized rates.
        """
        if n < 1:
            raise ValidationError("n must be >= 1")
        if workers < 1:
            raise ValidationError("workers must be >= 1")
        if normalization not in NORMALIZATIONS:
            raise ValidationError(f"normalization must be one of {NORMALIZATIONS}")
        produced = normalization == "production"
        if produced and self.window_mass > 1.0 + 1e-12:
            raise ValidationError(
                f"selected channels integrate to {self.window_mass:.6g} > 1 decay per kaon")
        seeds = np.random.SeedSequence(seed).spawn(n_streams)
        sizes = [n // n_streams + (i < n % n_streams) for i in range(n_streams)]
        jobs = [(s, ss) for s, ss in zip(sizes, seeds) if s > 0]
        if workers == 1:
            parts = [self._draw_stream(s, ss, produced) for s, ss in jobs]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(lambda job: self._draw_stream(*job, produced), jobs))
        times = np.concatenate([p[0] for p in parts])
        codes = np.concatenate([p[1] for p in parts])
        order = np.lexsort((codes, times))
        meta = {"model": self.model.value, "initial": self.initial.value, "n": int(n),
                "seed": int(seed), "t_max": self.t_max, "normalization": normalization,
                "channels": [c.value for c in self.channels],
                "physics": self.physics.to_config()}
        return EventSet(times[order], codes[order], self.channels, self.initial,
                        self.model.value, meta)


@dataclass(frozen=True)
class EventSet:
    """Array-backed event list; iterating yields :class:`DecayEvent`."""

    times: np.ndarray
    channel_codes: np.ndarray
    channels: tuple[Channel, ...]
    initial: Flavor
    model_tag: str
    metadata: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return self.times.size

    def __getitem__(self, i) -> DecayEvent:
        return DecayEvent(float(self.times[i]), self.channels[int(self.channel_codes[i])],
                          self.initial, self.model_tag)

    def __iter__(self) -> Iterator[DecayEvent]:
        for i in range(len(self)):
            yield self[i]

    def times_for(self, channel) -> np.ndarray:
        channel = Channel.parse(channel)
        if channel not in self.channels:
            return np.empty(0)
        return self.times[self.channel_codes == self.channels.index(channel)]

    def channel_counts(self) -> dict[Channel, int]:
        counts = np.bincount(self.channel_codes, minlength=len(self.channels))
        return {c: int(k) for c, k in zip(self.channels, counts)}


def sample(model, initial, n: int, seed: int, t_max=None, physics: KaonPhysics | None = None,
           channels=None, workers: int = 1, normalization: str = "decays") -> EventSet:
    """Draw ``n`` decay events of a kaon prepared as ``initial``.

    See :meth:`EventSampler.draw` for ``normalization``.

    ``t_max=None`` picks the shortest standard window leaving < 1e-4 of the
    probability outside it. Raises ``ConfigError`` if t_max < 40 or the
    truncated mass exceeds 1e-3.
    """
    physics = physics or KaonPhysics.default()
    return EventSampler(model, initial, physics, channels, t_max).draw(
        n, seed, workers, normalization=normalization)


@dataclass(frozen=True)
class BinnedAsymmetry:
    bin_edges: np.ndarray
    values: np.ndarray
    sigma: np.ndarray
    counts_k0: np.ndarray
    counts_k0bar: np.ndarray
    channel: Channel = Channel.TWO_PION
    norm_window: tuple[float, float] | None = None
    norm_channels: tuple[Channel, ...] | None = None

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        n = edges.size - 1
        arrays = {k: np.asarray(getattr(self, k), dtype=float)
                  for k in ("values", "sigma", "counts_k0", "counts_k0bar")}
        if n < 1 or any(a.shape != (n,) for a in arrays.values()):
            raise ValidationError("per-bin arrays must have one entry per bin")
        object.__setattr__(self, "bin_edges", edges)
        for k, a in arrays.items():
            object.__setattr__(self, k, a)

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])

    @property
    def empty(self) -> np.ndarray:
        return (self.counts_k0 + self.counts_k0bar) == 0

    @property
    def usable(self) -> np.ndarray:
        return ~self.empty & (self.sigma > 0) & np.isfinite(self.values)

    @classmethod
    def from_values(cls, bin_edges, values, sigma, channel=Channel.TWO_PION,
                    norm_window=None, norm_channels=None) -> BinnedAsymmetry:
        """Data with given values and errors (counts are set to 1 as placeholders)."""
        values = np.asarray(values, dtype=float)
        ones = np.ones_like(values)
        return cls(bin_edges, values, np.broadcast_to(np.asarray(sigma, dtype=float), values.shape),
                   ones, ones, Channel.parse(channel), norm_window, norm_channels)

    def with_sigma(self, sigma) -> BinnedAsymmetry:
        return BinnedAsymmetry(self.bin_edges, self.values, np.broadcast_to(sigma, self.values.shape),
                               self.counts_k0, self.counts_k0bar, self.channel,
                               self.norm_window, self.norm_channels)

    def subset(self, mask) -> BinnedAsymmetry:
        """Contiguous selection of bins (``mask`` must select adjacent bins)."""
        idx = np.flatnonzero(mask)
        if idx.size == 0 or np.any(np.diff(idx) != 1):
            raise ValidationError("subset must select a contiguous, non-empty run of bins")
        edges = self.bin_edges[idx[0]: idx[-1] + 2]
        return BinnedAsymmetry(edges, self.values[idx], self.sigma[idx], self.counts_k0[idx],
                               self.counts_k0bar[idx], self.channel, self.norm_window,
                               self.norm_channels)


def binomial_sigma(n_k0, n_k0bar) -> np.ndarray:
    """sqrt((1 - A^2) / N) with zero counts floored at 1, so sigma > 0 whenever N > 0."""
    n = np.asarray(n_k0, dtype=float)
    nbar = np.asarray(n_k0bar, dtype=float)
    total = n + nbar
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = 2.0 * np.sqrt(np.maximum(n, 1) * np.maximum(nbar, 1)) / total ** 1.5
    return np.where(total > 0, sig, np.nan)


def _window_from(meta_a: dict, meta_b: dict):
    if not meta_a or not meta_b:
        return None, None
    for key in ("n", "model", "physics", "t_max", "channels", "normalization"):
        if key in meta_a and key in meta_b and meta_a[key] != meta_b[key]:
            raise ValidationError(f"datasets differ in {key!r}; they must share n, model and physics")
    if "t_max" not in meta_a or meta_a.get("normalization") == "production":
        return None, None
    chans = tuple(Channel.parse(c) for c in meta_a.get("channels", ()))
    return (0.0, float(meta_a["t_max"])), chans or None


def bin_asymmetry(events_k0: EventSet, events_k0bar: EventSet, bin_edges,
                  channel=Channel.TWO_PION) -> BinnedAsymmetry:
    """Per-bin (Nbar - N) / (Nbar + N) with binomial errors.

    Empty bins get value and sigma NaN and are flagged in ``.empty``.
    """
    edges = np.asarray(bin_edges, dtype=float)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValidationError("bin edges must be strictly increasing with >= 2 entries")
    if events_k0.initial is not Flavor.K0 or events_k0bar.initial is not Flavor.K0BAR:
        raise ValidationError("expected a K0 sample and a K0bar sample, in that order")
    channel = Channel.parse(channel)
    window, chans = _window_from(events_k0.metadata, events_k0bar.metadata)
    n, _ = np.histogram(events_k0.times_for(channel), edges)
    nbar, _ = np.histogram(events_k0bar.times_for(channel), edges)
    total = n + nbar
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(total > 0, (nbar - n) / total, np.nan)
    return BinnedAsymmetry(edges, values, binomial_sigma(n, nbar), n, nbar, channel, window, chans)


def write_events_csv(events: EventSet, path, config: dict | None = None) -> Path:
    """Event CSV plus ``<stem>.json`` sidecar echoing seed and configuration."""
    path = Path(path)
    write_csv(path, ["time_over_tau_s", "channel", "initial_flavor"],
              [events.times, [events.channels[k].value for k in events.channel_codes],
               [events.initial.value] * len(events)])
    sidecar = dict(events.metadata)
    if config:
        sidecar["config"] = config
    write_json(path.with_suffix(".json"), sidecar)
    return path


def read_events_csv(path) -> EventSet:
    path = Path(path)
    header, rows = read_csv(path)
    if header != ["time_over_tau_s", "channel", "initial_flavor"]:
        raise ValidationError(f"{path}: unexpected event header {header}")
    sidecar = path.with_suffix(".json")
    meta = read_json(sidecar) if sidecar.exists() else {}
    if rows:
        flavors = {r[2] for r in rows}
        if len(flavors) != 1:
            raise ValidationError(f"{path}: mixed initial flavors")
        initial = Flavor.parse(flavors.pop())
    else:
        initial = Flavor.parse(meta.get("initial", "K0"))
    chans = tuple(Channel.parse(c) for c in meta.get("channels", ())) or \
        tuple(dict.fromkeys(Channel.parse(r[1]) for r in rows))
    index = {c: i for i, c in enumerate(chans)}
    times = np.array([float(r[0]) for r in rows])
    codes = np.array([index[Channel.parse(r[1])] for r in rows], dtype=int)
    return EventSet(times, codes, chans, initial, meta.get("model", "unknown"), meta)


def physics_from_metadata(meta: dict) -> KaonPhysics:
    if "physics" not in meta:
        raise ConfigError("event sidecar carries no physics configuration", field="physics")
    return load_physics(meta["physics"])
