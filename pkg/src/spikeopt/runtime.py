"""Execution substrate: run configurations, the two drivers, traces, and cost models.

A run wires n units (five cooperating sub-processes each) to three
coordination processes plus two row-update collectors. The deterministic
driver sweeps every process in a fixed order once per step, so equal seeds
give bit-identical traces. The concurrent driver runs every process as a
thread exchanging messages over capacity-1 latest-wins channels; progress is
paced only by each core waiting for its own selector's reply.
"""

from __future__ import annotations

import threading
import time
import warnings
from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import List, Optional, Sequence, Tuple

import numpy as np

from . import coordination, dynamics, heuristics, transform, unit
from .channels import Closed, Mailbox, Slot
from .problem import (
    BENCHMARK_NAMES,
    ObjectiveFunction,
    SearchDomain,
    default_domain,
    make_benchmark,
)

__all__ = [
    "ConfigError",
    "RunAbort",
    "UnitSpec",
    "RunConfig",
    "RunTrace",
    "Snapshots",
    "PowerEstimate",
    "ScalingCell",
    "ScalingResult",
    "run",
    "estimate_power",
    "measure_scaling",
]

MODES = ("det", "async")
LOG_LEVELS = ("summary", "trace", "full-state")
SPIKE_TOPOLOGIES = ("ring", "full")
INFO_TOPOLOGIES = ("random_m", "full")

# energy cost model: reported per-event costs for a digital neuromorphic chip,
# 23.6 pJ per synaptic event plus 89.7 pJ per neuron per step (update + spike)
_PJ_PER_SYNAPSE = 23.6
_PJ_PER_NEURON_STEP = 89.7

_MAX_STORED_EVENTS = 1000


class ConfigError(ValueError):
    """Malformed or inconsistent run configuration."""


class RunAbort(RuntimeError):
    """A process failed mid-run; carries the partial trace for diagnosis."""

    def __init__(self, diagnostic: str, trace: Optional["RunTrace"] = None):
        super().__init__(diagnostic)
        self.diagnostic = diagnostic
        self.trace = trace


# ---------------------------------------------------------------------------
# configuration


@dataclass
class UnitSpec:
    """Serializable description of one unit's behaviour."""

    model: str = "linear"
    integrator: str = "rk4"
    dt: float = 0.01
    model_params: dict = field(default_factory=dict)
    alpha: float = 1.0
    xref: str = transform.SELF_GLOBAL_AVERAGE
    xref_weights: Optional[list] = None
    condition: str = "weighted_minkowski"
    condition_params: dict = field(default_factory=dict)
    threshold: str = "global_self_gap"
    alpha_thr: float = 1.0
    rule: str = "de_rand"
    rule_params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "dynamics": {
                "model": self.model,
                "integrator": self.integrator,
                "dt": self.dt,
                "params": dict(self.model_params),
            },
            "transform": {
                "alpha": self.alpha,
                "xref": self.xref,
                "weights": self.xref_weights,
            },
            "spike": {
                "condition": self.condition,
                "condition_params": dict(self.condition_params),
                "threshold": self.threshold,
                "alpha_thr": self.alpha_thr,
                "rule": self.rule,
                "rule_params": dict(self.rule_params),
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "UnitSpec":
        try:
            dyn = data.get("dynamics", {})
            tra = data.get("transform", {})
            spk = data.get("spike", {})
            return cls(
                model=dyn.get("model", "linear"),
                integrator=dyn.get("integrator", "rk4"),
                dt=float(dyn.get("dt", 0.01)),
                model_params=dict(dyn.get("params", {})),
                alpha=float(tra.get("alpha", 1.0)),
                xref=tra.get("xref", transform.SELF_GLOBAL_AVERAGE),
                xref_weights=tra.get("weights"),
                condition=spk.get("condition", "weighted_minkowski"),
                condition_params=dict(spk.get("condition_params", {})),
                threshold=spk.get("threshold", "global_self_gap"),
                alpha_thr=float(spk.get("alpha_thr", 1.0)),
                rule=spk.get("rule", "de_rand"),
                rule_params=dict(spk.get("rule_params", {})),
            )
        except (TypeError, AttributeError) as exc:
            raise ConfigError(f"malformed unit section: {exc}") from exc


@dataclass
class RunConfig:
    """Full description of one experiment run."""

    problem_name: str = "sphere"
    dimension: int = 2
    n: int = 30
    budget: int = 2000
    seed: int = 0
    mode: str = "det"
    log: str = "trace"
    spike_topology: str = "ring"
    info_topology: str = "random_m"
    info_m: Optional[int] = 10
    units: List[UnitSpec] = field(default_factory=lambda: [UnitSpec()])

    def __post_init__(self):
        if self.problem_name not in BENCHMARK_NAMES:
            raise ConfigError(f"unknown problem {self.problem_name!r}")
        if self.dimension < 1:
            raise ConfigError("dimension must be >= 1")
        if self.n < 2:
            raise ConfigError("need at least 2 units")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.log not in LOG_LEVELS:
            raise ConfigError(f"log must be one of {LOG_LEVELS}")
        if self.spike_topology not in SPIKE_TOPOLOGIES:
            raise ConfigError(f"spike topology must be one of {SPIKE_TOPOLOGIES}")
        if self.info_topology not in INFO_TOPOLOGIES:
            raise ConfigError(f"info topology must be one of {INFO_TOPOLOGIES}")
        if not self.units:
            raise ConfigError("at least one unit spec is required")

    def unit_spec_for(self, i: int) -> UnitSpec:
        """Hybrid populations cycle through the listed specs."""
        return self.units[i % len(self.units)]

    def to_dict(self) -> dict:
        return {
            "problem": {"name": self.problem_name, "dimension": self.dimension},
            "n": self.n,
            "budget": self.budget,
            "seed": self.seed,
            "mode": self.mode,
            "log": self.log,
            "topology": {
                "spike": self.spike_topology,
                "info": self.info_topology,
                "m": self.info_m,
            },
            "units": [u.to_dict() for u in self.units],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        try:
            problem = data.get("problem", {})
            topo = data.get("topology", {})
            if "units" in data:
                units = [UnitSpec.from_dict(u) for u in data["units"]]
            elif "unit" in data:
                units = [UnitSpec.from_dict(data["unit"])]
            else:
                units = [UnitSpec()]
            return cls(
                problem_name=problem.get("name", "sphere"),
                dimension=int(problem.get("dimension", 2)),
                n=int(data.get("n", 30)),
                budget=int(data.get("budget", 2000)),
                seed=int(data.get("seed", 0)),
                mode=data.get("mode", "det"),
                log=data.get("log", "trace"),
                spike_topology=topo.get("spike", "ring"),
                info_topology=topo.get("info", "random_m"),
                info_m=topo.get("m", 10),
                units=units,
            )
        except (TypeError, KeyError) as exc:
            raise ConfigError(f"malformed config: {exc}") from exc


# ---------------------------------------------------------------------------
# traces


@dataclass
class Snapshots:
    """Full-state capture for replaying firing decisions."""

    x: np.ndarray  # (budget+1, n, d)
    v_pre: np.ndarray  # (budget+1, n, d, 2), nan at step 0
    v_post: np.ndarray  # (budget+1, n, d, 2), nan at step 0
    theta: np.ndarray  # (budget+1, n, d), nan at step 0
    s: np.ndarray  # (budget+1, n, d) bool
    model_traces: np.ndarray  # (n,), nan for non-linear cores


@dataclass
class RunTrace:
    """Logged output of one run, indexed by logical step (0 .. budget)."""

    config: dict
    mode: str
    f_g: np.ndarray
    eps_f: np.ndarray
    unit_best: np.ndarray
    spikes: np.ndarray
    wall_ms: np.ndarray
    evaluations: int
    optimum_value: Optional[float]
    event_count: int = 0
    events: List[str] = field(default_factory=list)
    snapshots: Optional[Snapshots] = None

    @property
    def steps(self) -> int:
        return self.f_g.size - 1

    @property
    def final_f_g(self) -> float:
        return float(self.f_g[-1])

    @property
    def final_eps(self) -> float:
        return float(self.eps_f[-1])


class _Tracer:
    """Collects per-(unit, step) records; safe for concurrent writers."""

    def __init__(self, n: int, budget: int, d: int, full_state: bool):
        self.n = n
        self.budget = budget
        self.unit_best = np.full((budget + 1, n), np.nan)
        self.spikes = np.zeros((budget + 1, n), dtype=np.int64)
        self.wall = np.zeros((budget + 1, n))
        self.snapshots: Optional[Snapshots] = None
        if full_state:
            shape = (budget + 1, n, d)
            self.snapshots = Snapshots(
                x=np.full(shape, np.nan),
                v_pre=np.full(shape + (2,), np.nan),
                v_post=np.full(shape + (2,), np.nan),
                theta=np.full(shape, np.nan),
                s=np.zeros(shape, dtype=bool),
                model_traces=np.full(n, np.nan),
            )
        self._lock = threading.Lock()

    def record_best(self, i: int, t: int, f_p: float) -> None:
        with self._lock:
            self.unit_best[t, i] = f_p

    def record_core(self, i: int, t: int, state: unit.UnitState, wall_s: float) -> None:
        with self._lock:
            self.spikes[t, i] = int(state.s.sum())
            self.wall[t, i] = wall_s * 1000.0
            if self.snapshots is not None:
                self.snapshots.x[t, i] = state.x
                self.snapshots.s[t, i] = state.s
                if state.v_pre is not None:
                    self.snapshots.v_pre[t, i] = state.v_pre
                    self.snapshots.v_post[t, i] = state.neuro_states
                    self.snapshots.theta[t, i] = state.theta

    def record_x0(self, i: int, x0: np.ndarray) -> None:
        if self.snapshots is not None:
            with self._lock:
                self.snapshots.x[0, i] = x0

    def build(
        self,
        cfg: RunConfig,
        objective: ObjectiveFunction,
        events: List[str],
        event_count: int,
        wall_rows: Optional[np.ndarray] = None,
    ) -> RunTrace:
        filled = self.unit_best.copy()
        # per-unit running best, then the population running minimum per step
        for t in range(1, filled.shape[0]):
            stale = np.isnan(filled[t])
            filled[t, stale] = filled[t - 1, stale]
        with warnings.catch_warnings():
            # partial traces may hold all-nan rows; the nan simply propagates
            warnings.simplefilter("ignore", RuntimeWarning)
            f_g = np.fmin.accumulate(np.nanmin(filled, axis=1))
        opt = objective.optimum_value
        eps = f_g - opt if opt is not None else np.full_like(f_g, np.nan)
        if wall_rows is None:
            with np.errstate(invalid="ignore"):
                wall_rows = self.wall.mean(axis=1)
        return RunTrace(
            config=cfg.to_dict(),
            mode=cfg.mode,
            f_g=f_g,
            eps_f=eps,
            unit_best=filled,
            spikes=self.spikes,
            wall_ms=wall_rows,
            evaluations=objective.evaluation_count,
            optimum_value=opt,
            event_count=event_count,
            events=events[:_MAX_STORED_EVENTS],
            snapshots=self.snapshots,
        )


# ---------------------------------------------------------------------------
# materialisation


@dataclass
class _BuiltUnit:
    core_state: unit.UnitState
    selector_state: unit.UnitState
    params: unit.UnitParams


@dataclass
class _Built:
    cfg: RunConfig
    domain: SearchDomain
    objective: ObjectiveFunction
    spike_topology: coordination.SpikeTopology
    info_topology: coordination.InfoTopology
    units: List[_BuiltUnit]


def _build_model(spec: UnitSpec, rng: np.random.Generator) -> dynamics.DynamicsModel:
    params = dict(spec.model_params)
    if spec.model == "linear":
        if "A" in params:
            return dynamics.LinearModel(A=np.asarray(params["A"], dtype=float))
        return dynamics.random_linear_model(rng, params.get("stability", "random"))
    if spec.model == "izhikevich":
        base = dynamics.REGULAR_SPIKING
        return dynamics.IzhikevichModel(
            a=params.get("a", base.a),
            b=params.get("b", base.b),
            c=params.get("c", base.c),
            d=params.get("d", base.d),
            i_syn=params.get("i_syn", base.i_syn),
        )
    if spec.model == "lif":
        return dynamics.LIFModel(
            tau_m=params.get("tau_m", 10.0),
            v_rest=params.get("v_rest", -65.0),
            v_th=params.get("v_th", 30.0),
            i_syn=params.get("i_syn", 0.0),
        )
    raise ConfigError(f"unknown dynamics model {spec.model!r}")


def _build_unit(
    i: int,
    spec: UnitSpec,
    cfg: RunConfig,
    domain: SearchDomain,
) -> _BuiltUnit:
    d = cfg.dimension
    init_rng = np.random.default_rng([cfg.seed, i, 0])
    model_rng = np.random.default_rng([cfg.seed, i, 1])
    rule_rngs = [np.random.default_rng([cfg.seed, i, 2, j]) for j in range(d)]

    core_state = unit.init_unit_state(i, domain, init_rng)
    selector_state = unit.UnitState(
        unit_id=i,
        x=core_state.x.copy(),
        p=core_state.p.copy(),
        f_p=np.inf,
        s=np.zeros(d, dtype=bool),
        a=np.zeros(d, dtype=bool),
        neuro_states=np.zeros((d, 2)),
        retained_noise=core_state.retained_noise.copy(),
    )

    model = _build_model(spec, model_rng)
    tp = transform.TransformParams(
        gain=spec.alpha,
        retained_noise=core_state.retained_noise,
        reference_strategy=spec.xref,
        weights=None if spec.xref_weights is None else np.asarray(spec.xref_weights),
    )
    thr = heuristics.ThresholdRule(variant=spec.threshold, alpha_thr=spec.alpha_thr)
    cond = heuristics.SpikeCondition(variant=spec.condition, **spec.condition_params)
    rule_kwargs = dict(spec.rule_params)
    rule_kwargs.setdefault("sigma", 0.05 * float(np.mean(domain.width)))
    rule = heuristics.SpikeRule(variant=spec.rule, **rule_kwargs)

    try:
        params = unit.UnitParams(
            model=model,
            integrator=spec.integrator,
            dt=spec.dt,
            transform=tp,
            threshold_rule=thr,
            condition=cond,
            rule=rule,
            rule_rngs=rule_rngs,
        )
    except ValueError as exc:
        raise ConfigError(f"unit {i}: {exc}") from exc
    return _BuiltUnit(core_state=core_state, selector_state=selector_state, params=params)


def _build(cfg: RunConfig) -> _Built:
    domain = default_domain(cfg.dimension)
    objective = make_benchmark(cfg.problem_name, cfg.dimension, seed=cfg.seed)

    try:
        if cfg.spike_topology == "ring":
            spike_topo = coordination.build_ring(cfg.n)
        else:
            spike_topo = coordination.build_full_spike(cfg.n)
        if cfg.info_topology == "full":
            info_topo = coordination.build_full_info(cfg.n)
        else:
            m = cfg.info_m if cfg.info_m is not None else min(10, cfg.n - 1)
            topo_rng = np.random.default_rng([cfg.seed, 3])
            info_topo = coordination.build_random_info(cfg.n, m, topo_rng)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    try:
        units = [
            _build_unit(i, cfg.unit_spec_for(i), cfg, domain) for i in range(cfg.n)
        ]
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return _Built(
        cfg=cfg,
        domain=domain,
        objective=objective,
        spike_topology=spike_topo,
        info_topology=info_topo,
        units=units,
    )


# ---------------------------------------------------------------------------
# deterministic driver


def _gather_events(built: _Built) -> Tuple[List[str], int]:
    events: List[str] = []
    count = 0
    for bu in built.units:
        count += len(bu.core_state.events)
        for msg in bu.core_state.events[: _MAX_STORED_EVENTS - len(events)]:
            events.append(f"unit {bu.core_state.unit_id}: {msg}")
    return events, count


def _run_deterministic(built: _Built) -> RunTrace:
    cfg = built.cfg
    n, d, budget = cfg.n, cfg.dimension, cfg.budget
    tracer = _Tracer(n, budget, d, full_state=(cfg.log == "full-state"))
    if tracer.snapshots is not None:
        tracer.snapshots.model_traces[:] = [
            np.nan if bu.params.model_trace is None else bu.params.model_trace
            for bu in built.units
        ]

    gbest = coordination.GlobalBest()
    # latches: values delivered at the end of the previous sweep
    A_latch = np.zeros((n, d), dtype=bool)
    a_latch = [np.zeros(d, dtype=bool) for _ in range(n)]
    g_latch: Optional[Tuple[np.ndarray, float]] = None
    sel_latch: List[Optional[Tuple[np.ndarray, float]]] = [None] * n
    recv_latch: List[Optional[Tuple[np.ndarray, np.ndarray]]] = [None] * n
    S_matrix = np.zeros((n, d), dtype=bool)
    P_matrix = np.zeros((n, d))
    f_vec = np.full(n, np.inf)
    have_P = False

    wall_rows = np.zeros(budget + 1)

    def sweep(t: int) -> None:
        nonlocal A_latch, g_latch, have_P
        spikes_now: List[np.ndarray] = []
        xs_now: List[np.ndarray] = []
        # spiking cores
        for bu in built.units:
            state = bu.core_state
            if t == 0:
                s_i, x_i = state.s, state.x
                tracer.record_x0(state.unit_id, state.x)
            else:
                p_latched = sel_latch[state.unit_id]
                g_val, f_g_val = g_latch if g_latch is not None else (None, None)
                pn = recv_latch[state.unit_id]
                inputs = unit.CoreInputs(
                    a=a_latch[state.unit_id],
                    g=g_val,
                    f_g=f_g_val,
                    p=p_latched[0],
                    f_p=p_latched[1],
                    P_n=None if pn is None else pn[0],
                    f_pn=None if pn is None else pn[1],
                )
                t0 = time.perf_counter()
                s_i, x_i = unit.spiking_core_step(state, bu.params, built.domain, inputs)
                tracer.record_core(state.unit_id, t, state, time.perf_counter() - t0)
            spikes_now.append(s_i)
            xs_now.append(x_i)
        # spiking handlers and senders
        a_new = []
        for bu, s_i in zip(built.units, spikes_now):
            row, a_i = unit.spiking_handler_step(bu.core_state, s_i, A_latch)
            S_matrix[row[0]] = row[1]
            a_new.append(a_i)
        for bu in built.units:
            latched = sel_latch[bu.core_state.unit_id]
            if latched is not None:
                p_row, f_row = unit.sender_step(bu.core_state, latched[0], latched[1])
                P_matrix[p_row[0]] = p_row[1]
                f_vec[f_row[0]] = f_row[1]
                have_P = True
        # tensor contraction, neighbour manager, high-level selector
        A_next = coordination.tensor_contract(built.spike_topology, S_matrix)
        nm_out = (
            coordination.neighbour_manager_step(built.info_topology, P_matrix, f_vec)
            if have_P
            else None
        )
        g_next = (
            coordination.high_level_selector_step(gbest, P_matrix, f_vec)
            if have_P
            else None
        )
        # selectors
        for bu, x_i in zip(built.units, xs_now):
            p_i, f_p_i = unit.selector_step(bu.selector_state, x_i, built.objective)
            sel_latch[bu.core_state.unit_id] = (p_i.copy(), f_p_i)
            tracer.record_best(bu.core_state.unit_id, t, f_p_i)
        # receivers and delivery
        if nm_out is not None:
            for bu in built.units:
                recv_latch[bu.core_state.unit_id] = unit.receiver_step(
                    bu.core_state, nm_out[0], nm_out[1]
                )
        for i in range(n):
            a_latch[i] = a_new[i]
        A_latch = A_next
        if g_next is not None:
            g_latch = (g_next[0].copy(), g_next[1])

    try:
        for t in range(budget + 1):
            t0 = time.perf_counter()
            sweep(t)
            wall_rows[t] = (time.perf_counter() - t0) * 1000.0
    except Exception as exc:  # noqa: BLE001 - any process failure aborts the run
        events, count = _gather_events(built)
        partial = tracer.build(cfg, built.objective, events, count, wall_rows)
        raise RunAbort(str(exc), partial) from exc

    events, count = _gather_events(built)
    return tracer.build(cfg, built.objective, events, count, wall_rows)


# ---------------------------------------------------------------------------
# concurrent driver


class _AsyncRun:
    """Owns the channels, threads, and failure handling of one concurrent run."""

    def __init__(self, built: _Built):
        self.built = built
        cfg = built.cfg
        n, d = cfg.n, cfg.dimension
        self.tracer = _Tracer(n, cfg.budget, d, full_state=(cfg.log == "full-state"))
        if self.tracer.snapshots is not None:
            self.tracer.snapshots.model_traces[:] = [
                np.nan if bu.params.model_trace is None else bu.params.model_trace
                for bu in built.units
            ]
        self.stop = threading.Event()
        self.done = threading.Event()
        self.errors: List[str] = []
        self._err_lock = threading.Lock()
        self._selectors_left = n

        self.x_slots = [Slot(f"x[{i}]") for i in range(n)]
        self.reply_slots = [Slot(f"p[{i}]") for i in range(n)]
        self.s_slots = [Slot(f"s[{i}]") for i in range(n)]
        self.a_slots = [Slot(f"a[{i}]") for i in range(n)]
        self.recv_slots = [Slot(f"pn[{i}]") for i in range(n)]
        self.sender_slots = [Slot(f"send[{i}]") for i in range(n)]
        self.spike_mailbox = Mailbox("spikes")
        self.best_mailbox = Mailbox("bests")
        self.S_slot = Slot("S")
        self.P_slot = Slot("P")
        self.A_bcast = Slot("A")
        self.g_bcast = Slot("g")
        self.nm_bcast = Slot("Pn")
        self.threads: List[threading.Thread] = []

    # -- failure plumbing

    def fail(self, where: str, exc: Exception) -> None:
        with self._err_lock:
            self.errors.append(f"{where}: {exc!r}")
        self.stop.set()
        self.done.set()

    def _selector_finished(self) -> None:
        with self._err_lock:
            self._selectors_left -= 1
            if self._selectors_left == 0:
                self.done.set()

    def close_all(self) -> None:
        for slot in (
            *self.x_slots,
            *self.reply_slots,
            *self.s_slots,
            *self.a_slots,
            *self.recv_slots,
            *self.sender_slots,
            self.S_slot,
            self.P_slot,
            self.A_bcast,
            self.g_bcast,
            self.nm_bcast,
        ):
            slot.close()
        self.spike_mailbox.close()
        self.best_mailbox.close()

    # -- actor loops

    def core_loop(self, bu: _BuiltUnit) -> None:
        cfg = self.built.cfg
        i = bu.core_state.unit_id
        try:
            self.tracer.record_x0(i, bu.core_state.x)
            self.s_slots[i].put(bu.core_state.s.copy())
            self.x_slots[i].put((0, bu.core_state.x.copy()))
            last_reply = 0
            for t in range(1, cfg.budget + 1):
                reply, last_reply = self.reply_slots[i].get_fresh(last_reply)
                _, p_val, f_p_val = reply
                a_val, _ = self.a_slots[i].peek()
                g_pair, _ = self.g_bcast.peek()
                pn_pair, _ = self.recv_slots[i].peek()
                inputs = unit.CoreInputs(
                    a=a_val,
                    g=None if g_pair is None else g_pair[0],
                    f_g=None if g_pair is None else g_pair[1],
                    p=p_val,
                    f_p=f_p_val,
                    P_n=None if pn_pair is None else pn_pair[0],
                    f_pn=None if pn_pair is None else pn_pair[1],
                )
                t0 = time.perf_counter()
                s_i, x_i = unit.spiking_core_step(
                    bu.core_state, bu.params, self.built.domain, inputs
                )
                self.tracer.record_core(i, t, bu.core_state, time.perf_counter() - t0)
                self.s_slots[i].put(s_i.copy())
                self.x_slots[i].put((t, x_i.copy()))
                if self.stop.is_set():
                    return
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001 - reported as run abort
            self.fail(f"core {i}", exc)

    def selector_loop(self, bu: _BuiltUnit) -> None:
        cfg = self.built.cfg
        i = bu.selector_state.unit_id
        try:
            last = 0
            for _ in range(cfg.budget + 1):
                (t, x), last = self.x_slots[i].get_fresh(last)
                p, f_p = unit.selector_step(bu.selector_state, x, self.built.objective)
                self.tracer.record_best(i, t, f_p)
                self.reply_slots[i].put((t, p.copy(), f_p))
                self.sender_slots[i].put((t, p.copy(), f_p))
            self._selector_finished()
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail(f"selector {i}", exc)

    def handler_loop(self, i: int) -> None:
        state = SimpleNamespace(unit_id=i)
        n, d = self.built.cfg.n, self.built.cfg.dimension
        zero_A = np.zeros((n, d), dtype=bool)
        try:
            last = 0
            while not self.stop.is_set():
                s, last = self.s_slots[i].get_fresh(last)
                A_val, _ = self.A_bcast.peek()
                row, a = unit.spiking_handler_step(
                    state, s, zero_A if A_val is None else A_val
                )
                self.spike_mailbox.put(i, row[1])
                self.a_slots[i].put(a)
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail(f"handler {i}", exc)

    def sender_loop(self, i: int) -> None:
        state = SimpleNamespace(unit_id=i)
        try:
            last = 0
            while not self.stop.is_set():
                (t, p, f_p), last = self.sender_slots[i].get_fresh(last)
                p_row, f_row = unit.sender_step(state, p, f_p)
                self.best_mailbox.put(i, (p_row[1], f_row[1]))
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail(f"sender {i}", exc)

    def receiver_loop(self, i: int) -> None:
        state = SimpleNamespace(unit_id=i)
        try:
            last = 0
            while not self.stop.is_set():
                (pn, fn), last = self.nm_bcast.get_fresh(last)
                self.recv_slots[i].put(unit.receiver_step(state, pn, fn))
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail(f"receiver {i}", exc)

    def spike_collector_loop(self) -> None:
        n, d = self.built.cfg.n, self.built.cfg.dimension
        S = np.zeros((n, d), dtype=bool)
        seen = np.zeros(n, dtype=bool)
        try:
            while not self.stop.is_set():
                for sender, s in self.spike_mailbox.drain():
                    S[sender] = s
                    seen[sender] = True
                if seen.all():
                    self.S_slot.put(S.copy())
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail("spike collector", exc)

    def best_collector_loop(self) -> None:
        n, d = self.built.cfg.n, self.built.cfg.dimension
        P = np.zeros((n, d))
        f = np.full(n, np.inf)
        seen = np.zeros(n, dtype=bool)
        try:
            while not self.stop.is_set():
                for sender, (p, f_p) in self.best_mailbox.drain():
                    P[sender] = p
                    f[sender] = f_p
                    seen[sender] = True
                if seen.all():
                    self.P_slot.put((P.copy(), f.copy()))
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail("best collector", exc)

    def contraction_loop(self) -> None:
        try:
            last = 0
            while not self.stop.is_set():
                S, last = self.S_slot.get_fresh(last)
                self.A_bcast.put(coordination.tensor_contract(self.built.spike_topology, S))
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail("tensor contraction", exc)

    def neighbour_loop(self) -> None:
        try:
            last = 0
            while not self.stop.is_set():
                (P, f), last = self.P_slot.get_fresh(last)
                self.nm_bcast.put(
                    coordination.neighbour_manager_step(self.built.info_topology, P, f)
                )
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail("neighbour manager", exc)

    def selector_high_loop(self) -> None:
        gbest = coordination.GlobalBest()
        try:
            last = 0
            while not self.stop.is_set():
                (P, f), last = self.P_slot.get_fresh(last)
                g, f_g = coordination.high_level_selector_step(gbest, P, f)
                self.g_bcast.put((g.copy(), f_g))
        except Closed:
            pass
        except Exception as exc:  # noqa: BLE001
            self.fail("high-level selector", exc)

    # -- orchestration

    def execute(self, timeout_s: Optional[float]) -> RunTrace:
        cfg = self.built.cfg
        for bu in self.built.units:
            i = bu.core_state.unit_id
            self.threads.append(threading.Thread(target=self.core_loop, args=(bu,)))
            self.threads.append(threading.Thread(target=self.selector_loop, args=(bu,)))
            self.threads.append(threading.Thread(target=self.handler_loop, args=(i,)))
            self.threads.append(threading.Thread(target=self.sender_loop, args=(i,)))
            self.threads.append(threading.Thread(target=self.receiver_loop, args=(i,)))
        for target in (
            self.spike_collector_loop,
            self.best_collector_loop,
            self.contraction_loop,
            self.neighbour_loop,
            self.selector_high_loop,
        ):
            self.threads.append(threading.Thread(target=target))

        for th in self.threads:
            th.daemon = True
            th.start()

        finished = self.done.wait(timeout_s)
        timed_out = not finished
        self.stop.set()
        self.close_all()
        for th in self.threads:
            th.join(timeout=5.0)

        events, count = _gather_events(self.built)
        trace = self.tracer.build(cfg, self.built.objective, events, count)
        if timed_out:
            raise RunAbort(f"concurrent run timed out after {timeout_s} s", trace)
        if self.errors:
            raise RunAbort("; ".join(self.errors), trace)
        return trace


# ---------------------------------------------------------------------------
# public entry points


def run(config: RunConfig, timeout_s: Optional[float] = None) -> RunTrace:
    """Execute a configured run and return its trace.

    ``timeout_s`` only applies to the concurrent mode; expiry aborts the run
    with the partial trace attached to the raised ``RunAbort``.
    """
    built = _build(config)
    if config.mode == "det":
        return _run_deterministic(built)
    return _AsyncRun(built).execute(timeout_s)


@dataclass(frozen=True)
class PowerEstimate:
    """Per-step energy and average power under the event-cost model."""

    n_syn: int
    e_step_joules: float
    p_avg_watts: float


def estimate_power(n: int, d: int, m: int, dt_sim_s: float) -> PowerEstimate:
    """Upper-bound energy/power for one step of an n-unit, d-dimension run.

    Counts ``n (n-1) m d`` synaptic events plus one update-and-spike budget per
    unit, then averages the per-step energy over the simulation time step.
    """
    if n < 1 or d < 1 or m < 0 or dt_sim_s <= 0.0:
        raise ValueError("n, d must be >= 1, m >= 0, dt_sim_s > 0")
    n_syn = n * (n - 1) * m * d
    e_step = (_PJ_PER_SYNAPSE * n_syn + _PJ_PER_NEURON_STEP * n) * 1e-12
    return PowerEstimate(n_syn=n_syn, e_step_joules=e_step, p_avg_watts=e_step / dt_sim_s)


@dataclass
class ScalingCell:
    """Aggregated per-step-per-unit runtime for one (n, d) configuration."""

    n: int
    d: int
    samples_ms: List[float]

    @property
    def mean_ms(self) -> float:
        return float(np.mean(self.samples_ms))

    @property
    def std_ms(self) -> float:
        return float(np.std(self.samples_ms))

    @property
    def cv(self) -> float:
        mean = self.mean_ms
        return self.std_ms / mean if mean > 0 else np.inf


@dataclass
class ScalingResult:
    cells: List[ScalingCell]
    slope_vs_n: float
    slope_vs_d: float

    def as_rows(self) -> List[dict]:
        return [
            {
                "n": c.n,
                "d": c.d,
                "mean_ms": c.mean_ms,
                "std_ms": c.std_ms,
                "cv": c.cv,
            }
            for c in self.cells
        ]


def measure_scaling(configs: Sequence[RunConfig], repeats: int = 7) -> ScalingResult:
    """Time each configuration ``repeats`` times and fit runtime against n and d.

    The metric is mean wall-clock per step per unit. Repeats are interleaved
    across configurations so slow machine phases spread evenly over cells.
    """
    if len(configs) < 2:
        raise ValueError("need at least two configurations to compare")
    cells = [ScalingCell(n=c.n, d=c.dimension, samples_ms=[]) for c in configs]
    for _ in range(repeats):
        for cfg, cell in zip(configs, cells):
            t0 = time.perf_counter()
            trace = run(cfg)
            elapsed_ms = (time.perf_counter() - t0) * 1000.0
            cell.samples_ms.append(elapsed_ms / (trace.steps * cfg.n))
    means = np.array([c.mean_ms for c in cells])
    ns = np.array([c.n for c in cells], dtype=float)
    ds = np.array([c.d for c in cells], dtype=float)
    slope_n = float(np.polyfit(ns, means, 1)[0]) if np.unique(ns).size > 1 else 0.0
    slope_d = float(np.polyfit(ds, means, 1)[0]) if np.unique(ds).size > 1 else 0.0
    return ScalingResult(cells=cells, slope_vs_n=slope_n, slope_vs_d=slope_d)
