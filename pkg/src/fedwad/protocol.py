"""Federated Wasserstein distance between two clients through a coordinator.

Neither client ever ships raw data. Each round k the coordinator broadcasts a
surrogate measure xi^(k-1); each client answers with an interpolating measure
between its local data and xi (moving fraction t_k of the way back toward its
data) plus, when the reporting policy asks, the distance W_p(local, xi^(k-1))
it computed along the way; the coordinator then interpolates between the two
replies to form xi^(k). The additive objective

    A(k) = W(mu, xi_mu) + W(xi_mu, xi) + W(xi, xi_nu) + W(xi_nu, nu)

never increases under exact interpolation and converges to W_p(mu, nu); the
reported distance is the sum of the two clients' last reports.

The per-round t schedule and the xi^(0) support are pinned by seeds, so every
party derives the same values independently and a run is reproducible bit for
bit, in process or over TCP.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import (
    CollinearMeansError,
    ConfigError,
    DimensionMismatchError,
    InvalidTError,
    UnsupportedExponentError,
)
from .geodesics import gaussian_interp, gaussian_w2, interp_approx, interp_exact
from .measures import DiscreteMeasure, GaussianMeasure, new_discrete, new_gaussian
from .netproto import HEADER_LEN, encode_hello_options, measure_blob_len
from .ot_core import cost_matrix, solve_exact

log = logging.getLogger("fedwad.protocol")

INTERP_MODES = ("exact", "approx")
REPORT_POLICIES = ("last_round_only", "every_round")


# -- run configuration ---------------------------------------------------------

@dataclass(frozen=True)
class FixedT:
    """Same interpolation parameter every round. Must sit strictly inside
    (0, 1): the endpoints would freeze the iteration."""

    value: float = 0.5

    def __post_init__(self):
        if not (math.isfinite(self.value) and 0.0 < self.value < 1.0):
            raise InvalidTError(f"fixed t must lie in (0, 1), got {self.value!r}")


@dataclass(frozen=True)
class UniformT:
    """Per-round t drawn i.i.d. uniform from [lo, hi]; the seed pins the
    schedule so the coordinator and both clients derive identical values."""

    lo: float = 0.25
    hi: float = 0.75
    seed: int = 0

    def __post_init__(self):
        ok = (math.isfinite(self.lo) and math.isfinite(self.hi)
              and 0.0 < self.lo <= self.hi < 1.0)
        if not ok:
            raise InvalidTError(f"uniform t bounds must satisfy 0 < lo <= hi < 1, "
                                f"got [{self.lo!r}, {self.hi!r}]")
        if self.seed < 0:
            raise ConfigError("t schedule seed must be nonnegative")


def draw_t_schedule(policy, rounds: int):
    """The full t_1..t_K list; identical on every party by construction."""
    if isinstance(policy, FixedT):
        return [policy.value] * rounds
    if isinstance(policy, UniformT):
        rng = np.random.default_rng(policy.seed)
        return rng.uniform(policy.lo, policy.hi, rounds).tolist()
    raise ConfigError(f"unknown t policy {policy!r}")


@dataclass(frozen=True)
class GaussianInit:
    """xi^(0) atoms drawn standard normal, centered on the midpoint of the
    announced coordinate ranges and scaled to a quarter of the box width per
    coordinate."""

    seed: int = 0


@dataclass(frozen=True)
class BoxInit:
    """xi^(0) atoms drawn uniformly inside the announced coordinate box."""

    seed: int = 0


@dataclass(frozen=True)
class ProvidedInit:
    """Caller supplies xi^(0) directly."""

    measure: DiscreteMeasure


@dataclass(frozen=True)
class FedConfig:
    rounds: int = 10
    interp_mode: str = "approx"
    support_size: int = 10
    t_policy: object = field(default_factory=FixedT)
    xi0_policy: object = field(default_factory=GaussianInit)
    report_policy: str = "last_round_only"
    stop_tol: float | None = None
    p: int = 2

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError(f"rounds must be >= 1, got {self.rounds}")
        if self.support_size < 1:
            raise ConfigError(f"support_size must be >= 1, got {self.support_size}")
        if self.interp_mode not in INTERP_MODES:
            raise ConfigError(f"interp_mode must be one of {INTERP_MODES}, "
                              f"got {self.interp_mode!r}")
        if self.report_policy not in REPORT_POLICIES:
            raise ConfigError(f"report_policy must be one of {REPORT_POLICIES}, "
                              f"got {self.report_policy!r}")
        if self.p not in (1, 2):
            raise UnsupportedExponentError(f"p must be 1 or 2, got {self.p!r}")
        if not isinstance(self.t_policy, (FixedT, UniformT)):
            raise ConfigError(f"t_policy must be FixedT or UniformT, got {self.t_policy!r}")
        if not isinstance(self.xi0_policy, (GaussianInit, BoxInit, ProvidedInit)):
            raise ConfigError("xi0_policy must be GaussianInit, BoxInit or ProvidedInit, "
                              f"got {self.xi0_policy!r}")
        if self.stop_tol is not None:
            if not (math.isfinite(self.stop_tol) and self.stop_tol > 0):
                raise ConfigError(f"stop_tol must be positive, got {self.stop_tol!r}")
            # the stop rule reads A(k), which needs exact geodesics and
            # per-round distance reports to mean anything
            if self.interp_mode != "exact" or self.report_policy != "every_round":
                raise ConfigError("stop_tol requires interp_mode='exact' and "
                                  "report_policy='every_round'")


@dataclass(frozen=True)
class ClientOptions:
    """The slice of FedConfig a client needs; this is what HELLO carries."""

    interp_mode: str
    report_policy: str
    p: int
    rounds: int
    t_policy: object

    @classmethod
    def from_config(cls, config: FedConfig):
        return cls(interp_mode=config.interp_mode, report_policy=config.report_policy,
                   p=config.p, rounds=config.rounds, t_policy=config.t_policy)


# -- one step of either party --------------------------------------------------

def client_step(local: DiscreteMeasure, xi: DiscreteMeasure, t: float, *,
                mode: str = "exact", p: int = 2, report: bool = True):
    """One client round: solve W_p(local, xi), interpolate toward xi at t.

    Returns (interpolant, distance), with distance None unless report is
    set; rounds that do not report hand the coordinator nothing beyond the
    interpolant. The transport plan is solved once and reused for both
    outputs, so p=1 interpolation rides a p=1-optimal plan.
    """
    C = cost_matrix(local, xi, p=p)
    plan = solve_exact(local.weights, xi.weights, C)
    if mode == "exact":
        interp = interp_exact(local, xi, t, plan=plan)
    else:
        interp = interp_approx(local, xi, t, plan=plan)
    if not report:
        return interp, None
    return interp, (plan.objective ** 0.5 if p == 2 else plan.objective)


def server_step(xi_mu: DiscreteMeasure, xi_nu: DiscreteMeasure, t: float, *,
                mode: str = "exact", p: int = 2):
    """Coordinator round: interpolate between the two replies at t.

    Returns (xi_new, W_p(xi_mu, xi_nu))."""
    C = cost_matrix(xi_mu, xi_nu, p=p)
    plan = solve_exact(xi_mu.weights, xi_nu.weights, C)
    dist = plan.objective ** 0.5 if p == 2 else plan.objective
    if mode == "exact":
        xi_new = interp_exact(xi_mu, xi_nu, t, plan=plan)
    else:
        xi_new = interp_approx(xi_mu, xi_nu, t, plan=plan)
    return xi_new, dist


# -- coordinator ---------------------------------------------------------------

class LocalClient:
    """In-process stand-in for a remote client.

    Runs the same client_step arithmetic a serve_client process would (the
    codec round-trips doubles bit-exactly, so skipping the encode/decode pair
    changes nothing) and counts the frame bytes the exchange would have put
    on the wire, handshake and DONE included, so byte accounting agrees with
    a TCP run of the same configuration exactly.
    """

    def __init__(self, measure: DiscreteMeasure):
        self._local = measure
        self._options = None
        self._ts = None
        self._pending = {}
        self.bytes_sent = 0
        self.bytes_received = 0
        self.measure_bytes = 0

    def start(self, options: ClientOptions):
        self._options = options
        self._ts = draw_t_schedule(options.t_policy, options.rounds)
        # handshake frames a TCP run would carry: options out, hello back
        self.bytes_sent += HEADER_LEN + len(encode_hello_options(options))
        self.bytes_received += HEADER_LEN + 6 + 16 * self._local.d
        lo, hi = self._local.coordinate_range()
        return self._local.d, lo, hi

    def send_xi(self, round_no: int, xi: DiscreteMeasure):
        blob = measure_blob_len(xi.n, xi.d)
        self.bytes_sent += HEADER_LEN + 4 + blob  # XI_BROADCAST frame
        self.measure_bytes += blob
        self._pending[round_no] = xi

    def recv_reply(self, round_no: int):
        xi = self._pending.pop(round_no)
        opts = self._options
        want = (opts.report_policy == "every_round" or round_no >= opts.rounds)
        interp, report = client_step(self._local, xi, self._ts[round_no - 1],
                                     mode=opts.interp_mode, p=opts.p, report=want)
        blob = measure_blob_len(interp.n, interp.d)
        self.bytes_received += HEADER_LEN + 4 + blob + 9  # INTERP_REPLY frame
        self.measure_bytes += blob
        return interp, report

    def finish(self, distance: float):
        self.bytes_sent += HEADER_LEN + 8  # DONE frame

    def close(self):
        pass


@dataclass(frozen=True)
class RoundRecord:
    """Per-round trajectory row.

    The four legs are the geodesic split of A(k); they come from the three
    solves the round already performs, scaled by the constant-speed identity
    (W(mu, xi_mu^k) = t_k * W(mu, xi^(k-1)), and so on). Under exact
    interpolation these equal the directly-solved leg distances to float
    precision; under approximate interpolation they are the geodesic-
    consistent estimates. Client legs are None in rounds without a distance
    report, and a_value with them.
    """

    round: int
    t: float
    w_mu_ximu: float | None
    w_ximu_xi: float
    w_xi_xinu: float
    w_xinu_nu: float | None
    a_value: float | None


@dataclass(frozen=True)
class FedResult:
    distance: float
    trajectory: tuple
    xi_final: DiscreteMeasure
    rounds_run: int
    bytes_exchanged: int  # every frame byte moved on both links
    measure_bytes: int    # measure blob bytes only: 4 blobs per round

    @property
    def a_values(self):
        return [r.a_value for r in self.trajectory]


def trajectory_to_csv(result: FedResult) -> str:
    lines = ["round,t,w_mu_ximu,w_ximu_xi,w_xi_xinu,w_xinu_nu,a_value"]
    for r in result.trajectory:
        cells = [str(r.round), repr(r.t)]
        for v in (r.w_mu_ximu, r.w_ximu_xi, r.w_xi_xinu, r.w_xinu_nu, r.a_value):
            cells.append("" if v is None else repr(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _initial_xi(config: FedConfig, d: int, lo, hi) -> DiscreteMeasure:
    pol = config.xi0_policy
    if isinstance(pol, ProvidedInit):
        if pol.measure.d != d:
            raise DimensionMismatchError(
                f"provided xi0 has d={pol.measure.d}, clients announced d={d}")
        return pol.measure
    s = config.support_size
    rng = np.random.default_rng(pol.seed)
    if isinstance(pol, GaussianInit):
        center = 0.5 * (lo + hi)
        scale = 0.25 * (hi - lo)
        pts = center + rng.standard_normal((s, d)) * scale
    else:
        pts = lo + rng.random((s, d)) * (hi - lo)
    return new_discrete(pts)


def coordinate(handle_mu, handle_nu, config: FedConfig) -> FedResult:
    """Drive a full run over two client handles (in-process or remote).

    This function sees only handles: the raw datasets never reach it, which
    is the privacy argument in structural form. Both broadcasts go out before
    either reply is read, so remote clients compute concurrently.
    """
    opts = ClientOptions.from_config(config)
    d_mu, lo_mu, hi_mu = handle_mu.start(opts)
    d_nu, lo_nu, hi_nu = handle_nu.start(opts)
    if d_mu != d_nu:
        raise DimensionMismatchError(f"clients disagree on dimension: {d_mu} vs {d_nu}")
    lo = np.minimum(lo_mu, lo_nu)
    hi = np.maximum(hi_mu, hi_nu)
    xi = _initial_xi(config, d_mu, lo, hi)
    ts = draw_t_schedule(config.t_policy, config.rounds)

    trajectory = []
    dist_mu = dist_nu = None
    prev_a = None
    rounds_run = 0
    for k in range(1, config.rounds + 1):
        t = ts[k - 1]
        handle_mu.send_xi(k, xi)
        handle_nu.send_xi(k, xi)
        xi_mu, d_mu_k = handle_mu.recv_reply(k)
        xi_nu, d_nu_k = handle_nu.recv_reply(k)
        xi, w_mid = server_step(xi_mu, xi_nu, t, mode=config.interp_mode, p=config.p)
        rounds_run = k

        leg2 = t * w_mid
        leg3 = (1.0 - t) * w_mid
        if d_mu_k is not None:
            dist_mu, dist_nu = d_mu_k, d_nu_k
            leg1 = t * d_mu_k
            leg4 = t * d_nu_k
            a_k = leg1 + leg2 + leg3 + leg4
        else:
            leg1 = leg4 = a_k = None
        trajectory.append(RoundRecord(k, t, leg1, leg2, leg3, leg4, a_k))
        log.debug("round %d: t=%.4f mid=%.6g A=%s", k, t, w_mid, a_k)

        if (config.stop_tol is not None and a_k is not None and prev_a is not None
                and abs(a_k - prev_a) < config.stop_tol):
            log.info("A stalled (|%.3g - %.3g| < %g), stopping after round %d",
                     a_k, prev_a, config.stop_tol, k)
            break
        prev_a = a_k

    if dist_mu is None or dist_nu is None:
        raise ConfigError("run ended without a distance report from the clients")
    distance = dist_mu + dist_nu
    handle_mu.finish(distance)
    handle_nu.finish(distance)

    bytes_exchanged = (handle_mu.bytes_sent + handle_mu.bytes_received
                       + handle_nu.bytes_sent + handle_nu.bytes_received)
    measure_bytes = handle_mu.measure_bytes + handle_nu.measure_bytes
    return FedResult(distance=distance, trajectory=tuple(trajectory), xi_final=xi,
                     rounds_run=rounds_run, bytes_exchanged=bytes_exchanged,
                     measure_bytes=measure_bytes)


def run_fedwad(mu: DiscreteMeasure, nu: DiscreteMeasure,
               config: FedConfig | None = None) -> FedResult:
    """Federated W_p between two in-process datasets."""
    config = config or FedConfig()
    return coordinate(LocalClient(mu), LocalClient(nu), config)


# -- analytic Gaussian special case ---------------------------------------------

@dataclass(frozen=True)
class GaussianRound:
    round: int
    xi: GaussianMeasure
    xi_mu: GaussianMeasure
    xi_nu: GaussianMeasure
    residual: float          # W2(xi^(k), xi*)
    implied_distance: float  # 2 * W2(xi_mu^(k), xi_nu^(k))


@dataclass(frozen=True)
class GaussianFedResult:
    distance: float
    xi_star: GaussianMeasure
    xi0_residual: float
    rounds: tuple


def _collinear(m_mu, m_nu, m_xi0) -> bool:
    v1 = m_nu - m_mu
    v2 = m_xi0 - m_mu
    n1 = float(np.linalg.norm(v1))
    n2 = float(np.linalg.norm(v2))
    if n1 == 0.0 or n2 == 0.0:
        return True
    # Gram determinant: n1^2 n2^2 sin^2(angle)
    gram = n1 * n1 * n2 * n2 - float(v1 @ v2) ** 2
    return math.sqrt(max(gram, 0.0)) <= 1e-9 * n1 * n2


def run_fedwad_gaussian(g_mu: GaussianMeasure, g_nu: GaussianMeasure,
                        xi0: GaussianMeasure, rounds: int = 10) -> GaussianFedResult:
    """Closed-form run for Gaussians sharing one covariance, at t = 1/2.

    All interpolants stay Gaussian with the same covariance, so each round is
    a mean recursion: m_xi^(k) = (m_mu + m_nu)/4 + ... = m* /2 + m_xi^(k-1)/2
    with m* the midpoint of the data means. The deviation from m* therefore
    halves every round, and since halving a float vector is exact, residuals
    are computed off the deviation directly: the ratio W2(xi^(k), xi*) /
    W2(xi^(k-1), xi*) is 0.5 without rounding error. For every k >= 1 the
    client interpolant means differ by exactly (m_mu - m_nu)/2, so twice
    their W2 recovers ||m_mu - m_nu|| = W2(mu, nu) after a single round.

    Configurations whose three means are collinear (this includes d=1 and
    m_mu == m_nu) are rejected: the support-based protocol needs the initial
    surrogate off the data geodesic.
    """
    if rounds < 1:
        raise ConfigError(f"rounds must be >= 1, got {rounds}")
    if _collinear(g_mu.mean, g_nu.mean, xi0.mean):
        raise CollinearMeansError("means of mu, nu and xi0 are collinear")
    xi_star = gaussian_interp(g_mu, g_nu, 0.5)  # also checks covariance equality
    gaussian_interp(g_mu, xi0, 0.5)             # covariance check against xi0

    cov = g_mu.covariance
    half_gap = 0.5 * (g_mu.mean - g_nu.mean)
    implied = 2.0 * float(np.linalg.norm(half_gap))
    dev = xi0.mean - xi_star.mean
    xi0_residual = float(np.linalg.norm(dev))

    recs = []
    m_prev = xi0.mean
    for k in range(1, rounds + 1):
        xi_mu = new_gaussian(0.5 * (g_mu.mean + m_prev), cov)
        xi_nu = new_gaussian(0.5 * (g_nu.mean + m_prev), cov)
        dev = 0.5 * dev  # exact in floating point
        m_k = xi_star.mean + dev
        xi_k = new_gaussian(m_k, cov)
        recs.append(GaussianRound(round=k, xi=xi_k, xi_mu=xi_mu, xi_nu=xi_nu,
                                  residual=float(np.linalg.norm(dev)),
                                  implied_distance=implied))
        m_prev = m_k
    return GaussianFedResult(distance=implied, xi_star=xi_star,
                             xi0_residual=xi0_residual, rounds=tuple(recs))
