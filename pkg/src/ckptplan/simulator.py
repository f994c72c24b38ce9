"""Discrete-event simulation of replicated, inter-dependent processes with checkpointing.

Two semantics are available.

``model_mode``
    All processes advance in synchronized super-steps of length ``tc``.  A
    super-step succeeds when every process has a replica surviving the
    whole interval.  Success costs ``tc + ts``, failure costs ``tc``, and
    dead replicas are replaced at the interval boundary.  This matches the
    assumptions of the analytic overhead model.

``volpex_mode``
    Request-driven protocol.  Every replica sends a StoreCheckpoint request
    after each unit of work; the server records it only if it is newer than
    the stored checkpoint and more than ``tc`` seconds have passed since the
    last recorded save.  A saving replica is blocked for ``ts`` seconds.
    Failures are noticed ``heartbeat_timeout`` seconds late.  A process with
    no surviving replica is restarted at once from its latest checkpoint;
    otherwise the replacement waits for the next recorded checkpoint of a
    survivor.  Processes exchange data every work unit, so a replica may
    start unit ``k + 1`` only once every other process has produced unit
    ``k`` (produced values stay available on the server after a failure).
"""

from __future__ import annotations

import csv
import enum
import heapq
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import BudgetExceeded, InputError, WorkNotDivisible
from .failure_model import ExponentialFailureModel, sample_time_to_failure
from .overhead import JobSpec

TRACE_HEADER = ("time_s", "event", "process", "replica", "detail")

# equal-time ordering: failure < request < restart
_FAIL, _UNIT, _SAVE_DONE, _DETECT, _SPAWN = 0, 1, 2, 3, 4

# attempts drawn per vectorized block in model_mode
_MODEL_BLOCK = 256
# replica draws allowed before monte_carlo_overhead switches to skip-ahead
MC_DRAW_BUDGET = 2e8
_MC_CHUNK = 1 << 16


class Mode(str, enum.Enum):
    MODEL = "model_mode"
    VOLPEX = "volpex_mode"


@dataclass(frozen=True)
class SimConfig:
    """Simulation parameters.

    ``failure_model=None`` disables failures.  ``total_work`` counts work
    units per process, each taking ``quantum_time`` seconds on a client of
    unit speed.  ``budget_factor`` caps simulated time at that multiple of
    the failure-free completion time.
    """

    spec: JobSpec
    tc: float
    ts: float
    failure_model: ExponentialFailureModel | None
    total_work: int
    quantum_time: float = 1.0
    heartbeat_timeout: float = 60.0
    mode: Mode = Mode.VOLPEX
    speed_spread: float = 0.0
    budget_factor: float = 1e4

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        if not (self.tc > 0 and math.isfinite(self.tc)):
            raise InputError(f"tc must be > 0, got {self.tc}")
        if not (self.ts >= 0 and math.isfinite(self.ts)):
            raise InputError(f"ts must be >= 0, got {self.ts}")
        if int(self.total_work) != self.total_work or self.total_work < 1:
            raise InputError(f"total_work must be an integer >= 1, got {self.total_work}")
        if not (self.quantum_time > 0 and math.isfinite(self.quantum_time)):
            raise InputError(f"quantum_time must be > 0, got {self.quantum_time}")
        if not self.heartbeat_timeout >= 0:
            raise InputError(f"heartbeat_timeout must be >= 0, got {self.heartbeat_timeout}")
        if not 0 <= self.speed_spread < 1:
            raise InputError(f"speed_spread must lie in [0, 1), got {self.speed_spread}")
        if not self.budget_factor > 0:
            raise InputError("budget_factor must be > 0")

    def with_tc(self, tc):
        return replace(self, tc=tc)

    def intervals(self) -> int:
        """Number of super-steps in model_mode."""
        k = self.total_work * self.quantum_time / self.tc
        kr = round(k)
        if kr < 1 or abs(k - kr) > 1e-9 * max(1.0, k):
            raise WorkNotDivisible(
                f"total work {self.total_work * self.quantum_time:g}s is not a whole "
                f"number of {self.tc:g}s intervals")
        return int(kr)

    def failure_free_time(self) -> float:
        if self.mode is Mode.MODEL:
            return self.intervals() * (self.tc + self.ts)
        return self.total_work * self.quantum_time / (1.0 - self.speed_spread)


@dataclass
class ReplicaState:
    process_id: int
    replica_id: int
    work_done: int
    speed: float
    next_failure_at: float
    alive: bool = True
    detected: bool = False
    busy: bool = False      # a unit or a save is in flight
    waiting: bool = False   # blocked on another process's output


@dataclass
class ServerCheckpointState:
    """Last recorded checkpoint per process; ``None`` time means never saved."""

    last_saved_number: list
    last_saved_time: list

    @classmethod
    def fresh(cls, n):
        return cls([0] * n, [None] * n)


@dataclass
class SimResult:
    completion_time: float
    checkpoints_saved: int = 0
    requests_ignored: int = 0
    failures: int = 0
    work_lost: int = 0
    per_process_trace: list | None = None
    work_credited: int = 0

    @property
    def requests(self):
        return self.checkpoints_saved + self.requests_ignored


class Decision(str, enum.Enum):
    SAVE = "save"
    IGNORE = "ignore"


def accept_checkpoint(server: ServerCheckpointState, process_id: int,
                      requested_number: int, now: float, tc: float) -> Decision:
    """Apply the server's StoreCheckpoint rule, updating ``server`` on a save.

    A request is recorded only when it is newer than the stored checkpoint
    and strictly more than ``tc`` seconds have passed since the last save.
    """
    if requested_number < 0:
        raise InputError("requested checkpoint number must be >= 0")
    last_t = server.last_saved_time[process_id]
    elapsed = math.inf if last_t is None else now - last_t
    if requested_number > server.last_saved_number[process_id] and elapsed > tc:
        server.last_saved_number[process_id] = requested_number
        server.last_saved_time[process_id] = now
        return Decision.SAVE
    return Decision.IGNORE


def _rng(seed):
    # anything with a ``random(size)`` method can stand in for a Generator
    if isinstance(seed, np.random.Generator) or hasattr(seed, "random"):
        return seed
    return np.random.default_rng(seed)


# --------------------------------------------------------------------------
# model mode
# --------------------------------------------------------------------------

def _run_model(config: SimConfig, rng, trace):
    n, r = config.spec.n, config.spec.r
    tc, ts = config.tc, config.ts
    k_target = config.intervals()
    cap = config.budget_factor * config.failure_free_time()
    units_per_interval = config.tc / config.quantum_time

    if config.failure_model is None:
        if trace is not None:
            for i in range(k_target):
                trace.append(((i + 1) * (tc + ts), "interval_ok", -1, -1, str(i + 1)))
        return SimResult(k_target * (tc + ts), checkpoints_saved=k_target * n,
                         work_credited=n * config.total_work)

    elapsed = 0.0
    successes = failed_steps = failures = 0
    while successes < k_target:
        times = sample_time_to_failure(config.failure_model, rng, (_MODEL_BLOCK, n, r))
        survived = times > tc
        step_ok = survived.any(axis=2).all(axis=1)
        dead_per_step = r * n - survived.sum(axis=(1, 2))
        for j in range(_MODEL_BLOCK):
            failures += int(dead_per_step[j])
            if step_ok[j]:
                successes += 1
                elapsed += tc + ts
                event = "interval_ok"
            else:
                failed_steps += 1
                elapsed += tc
                event = "interval_fail"
            if trace is not None:
                trace.append((elapsed, event, -1, -1, str(successes)))
            if elapsed > cap:
                raise BudgetExceeded(f"simulated time passed the cap of {cap:g}s")
            if successes == k_target:
                break
    lost = failed_steps * units_per_interval * n
    return SimResult(elapsed, checkpoints_saved=k_target * n, failures=failures,
                     work_lost=int(round(lost)), work_credited=n * config.total_work)


# --------------------------------------------------------------------------
# volpex mode
# --------------------------------------------------------------------------

class _VolpexRun:
    def __init__(self, config: SimConfig, rng, trace):
        self.c = config
        self.rng = rng
        self.trace = trace
        n = config.spec.n
        self.n = n
        self.server = ServerCheckpointState.fresh(n)
        self.frontier = [0] * n
        self.done = [False] * n
        self.n_done = 0
        self.pending = [0] * n
        self.replicas = [[] for _ in range(n)]
        self.waiting = []
        self.heap = []
        self.seq = 0
        self.next_replica_id = [0] * n
        self.result = SimResult(completion_time=math.nan)
        self.cap = config.budget_factor * config.failure_free_time()

    # -- plumbing -----------------------------------------------------------
    def push(self, t, kind, payload):
        self.seq += 1
        heapq.heappush(self.heap, (t, kind, self.seq, payload))

    def log(self, t, event, rep, detail=""):
        if self.trace is not None:
            self.trace.append((t, event, rep.process_id, rep.replica_id, detail))

    def spawn(self, pid, start, now, reason):
        c = self.c
        s = c.speed_spread
        speed = 1.0 if s == 0 else float(self.rng.uniform(1.0 - s, 1.0 + s))
        if c.failure_model is None:
            fail_at = math.inf
        else:
            fail_at = now + sample_time_to_failure(c.failure_model, self.rng)
        rid = self.next_replica_id[pid]
        self.next_replica_id[pid] += 1
        rep = ReplicaState(pid, rid, start, speed, fail_at)
        self.replicas[pid].append(rep)
        if fail_at < math.inf:
            self.push(fail_at, _FAIL, rep)
        self.log(now, reason, rep, str(start))
        self.try_start(rep, now)
        return rep

    def ready(self, rep):
        need = rep.work_done
        pid = rep.process_id
        f = self.frontier
        for j in range(self.n):
            if j != pid and f[j] < need:
                return False
        return True

    def try_start(self, rep, now):
        if not rep.alive or self.done[rep.process_id]:
            return
        if self.ready(rep):
            rep.busy = True
            self.push(now + self.c.quantum_time / rep.speed, _UNIT, rep)
        else:
            rep.waiting = True
            self.waiting.append(rep)

    def wake(self, now):
        if not self.waiting:
            return
        still = []
        woken = []
        for rep in self.waiting:
            if not rep.alive or self.done[rep.process_id]:
                rep.waiting = False
            elif self.ready(rep):
                rep.waiting = False
                woken.append(rep)
            else:
                still.append(rep)
        self.waiting = still
        for rep in woken:
            self.try_start(rep, now)

    def presumed_alive(self, pid):
        return [x for x in self.replicas[pid] if not x.detected]

    # -- event handlers -----------------------------------------------------
    def on_unit(self, rep, now):
        if not rep.alive or self.done[rep.process_id]:
            return
        rep.busy = False
        pid = rep.process_id
        rep.work_done += 1
        res = self.result
        if rep.work_done > self.frontier[pid]:
            self.frontier[pid] = rep.work_done
            advanced = True
        else:
            advanced = False

        decision = accept_checkpoint(self.server, pid, rep.work_done, now, self.c.tc)
        if decision is Decision.SAVE:
            res.checkpoints_saved += 1
            self.log(now, "save", rep, str(rep.work_done))
        else:
            res.requests_ignored += 1
            self.log(now, "ignore", rep, str(rep.work_done))

        if rep.work_done >= self.c.total_work:
            self.finish_process(pid, now)
            if advanced:
                self.wake(now)
            return

        if decision is Decision.SAVE:
            rep.busy = True
            self.push(now + self.c.ts, _SAVE_DONE, rep)
            for _ in range(self.pending[pid]):
                self.push(now + self.c.ts, _SPAWN, (pid, rep.work_done))
            self.pending[pid] = 0
        else:
            self.try_start(rep, now)
        if advanced:
            self.wake(now)

    def on_save_done(self, rep, now):
        if not rep.alive or self.done[rep.process_id]:
            return
        rep.busy = False
        self.try_start(rep, now)

    def on_fail(self, rep, now):
        if not rep.alive or self.done[rep.process_id]:
            return
        rep.alive = False
        rep.busy = False
        self.result.failures += 1
        self.log(now, "fail", rep, str(rep.work_done))
        self.push(now + self.c.heartbeat_timeout, _DETECT, rep)

    def on_detect(self, rep, now):
        pid = rep.process_id
        if self.done[pid]:
            return
        rep.detected = True
        self.replicas[pid].remove(rep)
        self.log(now, "detect", rep)
        if self.presumed_alive(pid):
            self.pending[pid] += 1
        else:
            start = self.server.last_saved_number[pid]
            self.result.work_lost += self.frontier[pid] - start
            self.spawn(pid, start, now, "restart")

    def on_spawn(self, payload, now):
        pid, start = payload
        if self.done[pid]:
            return
        self.result.work_lost += max(0, self.frontier[pid] - start)
        self.spawn(pid, start, now, "replace")

    def finish_process(self, pid, now):
        self.done[pid] = True
        self.n_done += 1
        for x in self.replicas[pid]:
            x.busy = False
        if self.trace is not None:
            self.trace.append((now, "process_done", pid, -1, str(self.c.total_work)))

    # -- main loop ----------------------------------------------------------
    def run(self):
        for pid in range(self.n):
            for _ in range(self.c.spec.r):
                self.spawn(pid, 0, 0.0, "start")
        heap = self.heap
        handlers = {
            _UNIT: self.on_unit,
            _SAVE_DONE: self.on_save_done,
            _FAIL: self.on_fail,
            _DETECT: self.on_detect,
            _SPAWN: self.on_spawn,
        }
        while self.n_done < self.n:
            if not heap:
                raise RuntimeError("event queue drained before completion")
            t, kind, _, payload = heapq.heappop(heap)
            if t > self.cap:
                raise BudgetExceeded(f"simulated time passed the cap of {self.cap:g}s")
            handlers[kind](payload, t)
            if self.n_done == self.n:
                self.result.completion_time = t
        self.result.work_credited = sum(self.frontier)
        return self.result


def run(config: SimConfig, seed=None, trace: bool = False) -> SimResult:
    """Simulate one job to completion.

    The result is fully determined by ``(config, seed)``.  With
    ``trace=True`` the event list ``(time_s, event, process, replica,
    detail)`` is attached as ``per_process_trace``.
    """
    rng = _rng(seed)
    events = [] if trace else None
    if config.mode is Mode.MODEL:
        result = _run_model(config, rng, events)
    else:
        result = _VolpexRun(config, rng, events).run()
    result.per_process_trace = events
    return result


def monte_carlo_overhead(config: SimConfig, trials: int, seed=None) -> float:
    """Mean simulated time to complete one super-step, over ``trials`` super-steps.

    Uses model-mode semantics.  Each trial repeats the interval until every
    process keeps a replica alive through it, drawing each replica's
    survival independently.  When the expected number of replica draws
    exceeds ``MC_DRAW_BUDGET`` the retry count of each trial is drawn in one
    step from a geometric law whose per-attempt success is the product over
    processes of one minus the product over replicas of the failure chance.
    """
    if trials < 1:
        raise InputError("trials must be >= 1")
    tc, ts = config.tc, config.ts
    n, r = config.spec.n, config.spec.r
    rng = _rng(seed)
    if config.failure_model is None:
        return tc + ts
    p = math.exp(-config.failure_model.rate * tc)
    per_process = -np.expm1(np.sum(np.log1p(-np.full(r, p))))
    attempt_ok = float(np.exp(np.sum(np.log(np.full(n, per_process)))))
    expected_draws = trials * n * r / attempt_ok if attempt_ok > 0 else math.inf

    if expected_draws > MC_DRAW_BUDGET:
        attempts = rng.geometric(attempt_ok, size=trials)
        return float(np.mean(attempts * tc + ts))

    total = 0.0
    left = trials
    while left:
        m = min(left, _MC_CHUNK)
        left -= m
        active = m
        attempts = 0
        while active:
            # one attempt for every still-unfinished trial
            ok = (rng.random((active, n, r)) < p).any(axis=2).all(axis=1)
            attempts += active
            active -= int(ok.sum())
        total += attempts * tc + m * ts
    return total / trials


# --------------------------------------------------------------------------
# traces
# --------------------------------------------------------------------------

def check_server_invariants(trace, tc: float) -> list[str]:
    """Return violations of the server rules found in a volpex_mode trace."""
    last = {}
    problems = []
    for t, event, pid, _rid, detail in trace:
        if event != "save":
            continue
        number = int(detail)
        if pid in last:
            t0, n0 = last[pid]
            if number <= n0:
                problems.append(f"process {pid}: save {number} at {t} not after {n0}")
            if t - t0 < tc:
                problems.append(f"process {pid}: saves at {t0} and {t} closer than {tc}")
        last[pid] = (t, number)
    return problems


def write_trace(path, trace) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_HEADER)
        for t, event, pid, rid, detail in trace:
            w.writerow([repr(float(t)), event, pid, rid, detail])
