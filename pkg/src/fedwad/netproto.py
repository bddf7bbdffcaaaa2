"""Binary wire protocol and TCP transport for remote runs.

Frame layout (all integers little-endian):

    magic "FWD1" | msg_type u8 | payload_len u32 | payload

Measure blob: n u32, d u32, then n*d point doubles row-major, then n weight
doubles; total 8 + 8*n*(d+1) bytes. Message payloads:

    HELLO        0x01  version u16, d u32, coordinate range 2*d doubles
                       (d lows then d highs). The coordinator's greeting is
                       the same shape with d=0 followed by an options blob:
                       mode u8, report u8, p u8, rounds u32, t_tag u8,
                       then t f64 (fixed) or lo f64, hi f64, seed u64
                       (uniform). Clients re-derive the per-round t schedule
                       from these options, so broadcasts stay minimal.
    XI_BROADCAST 0x02  round u32, measure blob
    INTERP_REPLY 0x03  round u32, measure blob, has_distance u8, distance f64
    DONE         0x04  distance f64
    ERROR        0x7F  code u16, utf-8 message

Clients listen; the coordinator dials. One connection serves one run.
Doubles cross the wire as IEEE-754 bit patterns, so a decoded measure is
bit-identical to the encoded one and remote runs reproduce in-process
arithmetic exactly.
"""

from __future__ import annotations

import logging
import socket
import struct
import threading

import numpy as np

from .errors import (
    BadMagicError,
    DimensionMismatchError,
    NonFiniteValueError,
    TransportError,
    TruncatedError,
    VersionMismatchError,
    WeightInvariantViolatedError,
)
from .measures import DiscreteMeasure, _readonly

log = logging.getLogger("fedwad.netproto")

MAGIC = b"FWD1"
VERSION = 1
HEADER_LEN = 9  # magic + type byte + payload length

MSG_HELLO = 0x01
MSG_XI_BROADCAST = 0x02
MSG_INTERP_REPLY = 0x03
MSG_DONE = 0x04
MSG_ERROR = 0x7F

ERR_VERSION = 0x0001
ERR_MALFORMED = 0x0002
ERR_DIMENSION = 0x0003
ERR_INTERNAL = 0x0004

_MODES = ("exact", "approx")
_REPORTS = ("last_round_only", "every_round")


# -- primitive helpers --------------------------------------------------------

def _take(buf: bytes, offset: int, count: int):
    end = offset + count
    if end > len(buf):
        raise TruncatedError(f"need {count} bytes at offset {offset}, have {len(buf) - offset}")
    return buf[offset:end], end


def measure_blob_len(n: int, d: int) -> int:
    return 8 + 8 * n * (d + 1)


def encode_measure(m: DiscreteMeasure) -> bytes:
    parts = [struct.pack("<II", m.n, m.d)]
    parts.append(np.ascontiguousarray(m.points, dtype="<f8").tobytes())
    parts.append(np.ascontiguousarray(m.weights, dtype="<f8").tobytes())
    return b"".join(parts)


def decode_measure(buf: bytes, offset: int = 0):
    """Parse one measure blob; returns (measure, next_offset)."""
    head, offset = _take(buf, offset, 8)
    n, d = struct.unpack("<II", head)
    if n < 1 or d < 1:
        raise TruncatedError(f"measure blob header claims n={n}, d={d}")
    raw_pts, offset = _take(buf, offset, 8 * n * d)
    raw_w, offset = _take(buf, offset, 8 * n)
    pts = np.frombuffer(raw_pts, dtype="<f8").reshape(n, d)
    w = np.frombuffer(raw_w, dtype="<f8")
    if not np.isfinite(w).all() or (w < 0).any() or abs(float(w.sum()) - 1.0) > 1e-9:
        raise WeightInvariantViolatedError("decoded weights are not a probability vector")
    if not np.isfinite(pts).all():
        raise NonFiniteValueError("decoded points contain NaN or Inf")
    return DiscreteMeasure(_readonly(pts), _readonly(w)), offset


def encode_frame(msg_type: int, payload: bytes) -> bytes:
    return MAGIC + struct.pack("<BI", msg_type, len(payload)) + payload


def decode_frame(buf: bytes, offset: int = 0):
    """Parse one frame; returns (msg_type, payload, next_offset). Never reads
    past the declared payload length."""
    head, body_start = _take(buf, offset, HEADER_LEN)
    if head[:4] != MAGIC:
        raise BadMagicError(f"bad frame magic {head[:4]!r}")
    msg_type, plen = struct.unpack("<BI", head[4:])
    payload, offset = _take(buf, body_start, plen)
    return msg_type, payload, offset


# -- message payloads ----------------------------------------------------------

def encode_hello_client(d: int, lo, hi) -> bytes:
    return (struct.pack("<HI", VERSION, d)
            + np.ascontiguousarray(lo, dtype="<f8").tobytes()
            + np.ascontiguousarray(hi, dtype="<f8").tobytes())


def decode_hello_client(payload: bytes):
    head, offset = _take(payload, 0, 6)
    version, d = struct.unpack("<HI", head)
    if version != VERSION:
        raise VersionMismatchError(f"peer speaks version {version}, expected {VERSION}")
    if d < 1:
        raise TruncatedError("client hello carries no dimension")
    raw_lo, offset = _take(payload, offset, 8 * d)
    raw_hi, offset = _take(payload, offset, 8 * d)
    if offset != len(payload):
        raise TruncatedError("trailing bytes after client hello")
    return d, np.frombuffer(raw_lo, dtype="<f8"), np.frombuffer(raw_hi, dtype="<f8")


def encode_hello_options(options) -> bytes:
    # coordinator greeting: pinned hello shape with d=0, then the run options
    from .protocol import FixedT, UniformT  # local import to avoid a cycle

    body = struct.pack("<HI", VERSION, 0)
    body += struct.pack("<BBBI", _MODES.index(options.interp_mode),
                        _REPORTS.index(options.report_policy),
                        options.p, options.rounds)
    tp = options.t_policy
    if isinstance(tp, FixedT):
        body += struct.pack("<Bd", 0, tp.value)
    elif isinstance(tp, UniformT):
        body += struct.pack("<BddQ", 1, tp.lo, tp.hi, tp.seed)
    else:
        raise TypeError(f"unknown t policy {tp!r}")
    return body


def decode_hello_options(payload: bytes):
    from .protocol import ClientOptions, FixedT, UniformT

    head, offset = _take(payload, 0, 6)
    version, d = struct.unpack("<HI", head)
    if version != VERSION:
        raise VersionMismatchError(f"peer speaks version {version}, expected {VERSION}")
    if d != 0:
        raise TruncatedError("coordinator hello must carry d=0")
    head, offset = _take(payload, offset, 7)
    mode_i, report_i, p, rounds = struct.unpack("<BBBI", head)
    if mode_i >= len(_MODES) or report_i >= len(_REPORTS):
        raise TruncatedError("coordinator hello carries unknown enum values")
    tag_b, offset = _take(payload, offset, 1)
    if tag_b[0] == 0:
        raw, offset = _take(payload, offset, 8)
        tp = FixedT(struct.unpack("<d", raw)[0])
    elif tag_b[0] == 1:
        raw, offset = _take(payload, offset, 24)
        lo, hi, seed = struct.unpack("<ddQ", raw)
        tp = UniformT(lo, hi, int(seed))
    else:
        raise TruncatedError(f"unknown t policy tag {tag_b[0]}")
    if offset != len(payload):
        raise TruncatedError("trailing bytes after coordinator hello")
    return ClientOptions(interp_mode=_MODES[mode_i], report_policy=_REPORTS[report_i],
                         p=int(p), rounds=int(rounds), t_policy=tp)


def encode_xi_broadcast(round_no: int, xi: DiscreteMeasure) -> bytes:
    return struct.pack("<I", round_no) + encode_measure(xi)


def decode_xi_broadcast(payload: bytes):
    head, offset = _take(payload, 0, 4)
    (round_no,) = struct.unpack("<I", head)
    measure, offset = decode_measure(payload, offset)
    if offset != len(payload):
        raise TruncatedError("trailing bytes after xi broadcast")
    return round_no, measure


def encode_interp_reply(round_no: int, interp: DiscreteMeasure, distance) -> bytes:
    has = distance is not None
    return (struct.pack("<I", round_no) + encode_measure(interp)
            + struct.pack("<Bd", 1 if has else 0, distance if has else 0.0))


def decode_interp_reply(payload: bytes):
    head, offset = _take(payload, 0, 4)
    (round_no,) = struct.unpack("<I", head)
    measure, offset = decode_measure(payload, offset)
    tail, offset = _take(payload, offset, 9)
    has, dist = struct.unpack("<Bd", tail)
    if offset != len(payload):
        raise TruncatedError("trailing bytes after interp reply")
    return round_no, measure, (dist if has else None)


def encode_done(distance: float) -> bytes:
    return struct.pack("<d", distance)


def decode_done(payload: bytes) -> float:
    if len(payload) != 8:
        raise TruncatedError(f"done payload must be 8 bytes, got {len(payload)}")
    return struct.unpack("<d", payload)[0]


def encode_error(code: int, message: str) -> bytes:
    return struct.pack("<H", code) + message.encode("utf-8")


def decode_error(payload: bytes):
    head, offset = _take(payload, 0, 2)
    (code,) = struct.unpack("<H", head)
    return code, payload[offset:].decode("utf-8", errors="replace")


# -- socket plumbing -----------------------------------------------------------

def _recv_exact(sock, count, what):
    chunks = []
    got = 0
    while got < count:
        try:
            chunk = sock.recv(count - got)
        except OSError as exc:
            raise TransportError(f"recv failed while reading {what}: {exc}") from exc
        if not chunk:
            raise TransportError(f"connection closed while reading {what}")
        chunks.append(chunk)
        got += len(chunk)
    return b"".join(chunks)


def read_frame(sock, what="frame"):
    head = _recv_exact(sock, HEADER_LEN, what)
    if head[:4] != MAGIC:
        raise BadMagicError(f"bad frame magic {head[:4]!r}")
    msg_type, plen = struct.unpack("<BI", head[4:])
    payload = _recv_exact(sock, plen, what) if plen else b""
    return msg_type, payload, HEADER_LEN + plen


def send_frame(sock, msg_type, payload):
    frame = encode_frame(msg_type, payload)
    try:
        sock.sendall(frame)
    except OSError as exc:
        raise TransportError(f"send failed: {exc}") from exc
    return len(frame)


def _parse_address(address: str):
    host, sep, port = address.rpartition(":")
    if not sep:
        raise ValueError(f"address must be host:port, got {address!r}")
    return host, int(port)


# -- client side ---------------------------------------------------------------

def serve_client(bind_address: str, local: DiscreteMeasure, *, ready=None,
                 timeout=None) -> float | None:
    """Host one side's data for a single remote run.

    Binds, accepts one coordinator connection, answers the handshake, then
    serves client_step for every XI_BROADCAST until DONE. Returns the final
    distance from DONE, or None if the coordinator reported an error.
    `ready`, if given, is an event set once the socket is listening (used by
    in-process tests to avoid races); the actual bound address is stored on
    it as `ready.address`, which matters when binding port 0.
    """
    from .protocol import client_step, draw_t_schedule

    host, port = _parse_address(bind_address)
    srv = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    srv.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        srv.bind((host, port))
        srv.listen(1)
        if ready is not None:
            bh, bp = srv.getsockname()[:2]
            ready.address = f"{bh}:{bp}"
            ready.set()
        if timeout is not None:
            srv.settimeout(timeout)
        conn, peer = srv.accept()
    finally:
        srv.close()

    log.info("client serving %s (n=%d, d=%d), coordinator %s",
             bind_address, local.n, local.d, peer)
    lo, hi = local.coordinate_range()
    try:
        with conn:
            if timeout is not None:
                conn.settimeout(timeout)
            msg_type, payload, _ = read_frame(conn, "hello")
            if msg_type != MSG_HELLO:
                send_frame(conn, MSG_ERROR, encode_error(ERR_MALFORMED, "expected HELLO"))
                return None
            try:
                options = decode_hello_options(payload)
            except VersionMismatchError as exc:
                send_frame(conn, MSG_ERROR, encode_error(ERR_VERSION, str(exc)))
                return None
            send_frame(conn, MSG_HELLO, encode_hello_client(local.d, lo, hi))
            ts = draw_t_schedule(options.t_policy, options.rounds)
            while True:
                msg_type, payload, _ = read_frame(conn, "broadcast")
                if msg_type == MSG_DONE:
                    return decode_done(payload)
                if msg_type == MSG_ERROR:
                    code, message = decode_error(payload)
                    log.warning("coordinator error 0x%04x: %s", code, message)
                    return None
                if msg_type != MSG_XI_BROADCAST:
                    send_frame(conn, MSG_ERROR,
                               encode_error(ERR_MALFORMED, f"unexpected type 0x{msg_type:02x}"))
                    return None
                round_no, xi = decode_xi_broadcast(payload)
                if xi.d != local.d:
                    send_frame(conn, MSG_ERROR,
                               encode_error(ERR_DIMENSION, f"xi has d={xi.d}, data has d={local.d}"))
                    return None
                t = ts[round_no - 1]
                want = (options.report_policy == "every_round"
                        or round_no >= options.rounds)
                interp, report = client_step(local, xi, t, mode=options.interp_mode,
                                             p=options.p, report=want)
                send_frame(conn, MSG_INTERP_REPLY,
                           encode_interp_reply(round_no, interp, report))
    except (TruncatedError, BadMagicError, WeightInvariantViolatedError) as exc:
        log.warning("malformed traffic from coordinator: %s", exc)
        try:
            send_frame(conn, MSG_ERROR, encode_error(ERR_MALFORMED, str(exc)))
        except TransportError:
            pass
        return None


class RemoteClient:
    """Coordinator-side handle for one TCP client. Mirrors the in-process
    handle interface: start / send_xi / recv_reply / finish / close."""

    def __init__(self, address: str, timeout=30.0):
        self.address = address
        self.timeout = timeout
        self.sock = None
        self.bytes_sent = 0
        self.bytes_received = 0
        self.measure_bytes = 0

    def start(self, options):
        host, port = _parse_address(self.address)
        try:
            self.sock = socket.create_connection((host, port), timeout=self.timeout)
        except OSError as exc:
            raise TransportError(f"cannot reach client at {self.address}: {exc}") from exc
        self.bytes_sent += send_frame(self.sock, MSG_HELLO, encode_hello_options(options))
        msg_type, payload, nbytes = read_frame(self.sock, "hello reply")
        self.bytes_received += nbytes
        if msg_type == MSG_ERROR:
            code, message = decode_error(payload)
            raise TransportError(f"client {self.address} refused: 0x{code:04x} {message}")
        if msg_type != MSG_HELLO:
            raise TransportError(f"client {self.address} sent 0x{msg_type:02x} instead of HELLO")
        d, lo, hi = decode_hello_client(payload)
        return d, lo, hi

    def send_xi(self, round_no: int, xi: DiscreteMeasure):
        payload = encode_xi_broadcast(round_no, xi)
        try:
            self.bytes_sent += send_frame(self.sock, MSG_XI_BROADCAST, payload)
        except TransportError as exc:
            raise TransportError(f"round {round_no}: {exc}") from exc
        self.measure_bytes += measure_blob_len(xi.n, xi.d)

    def recv_reply(self, round_no: int):
        try:
            msg_type, payload, nbytes = read_frame(self.sock, f"round {round_no} reply")
        except TransportError as exc:
            raise TransportError(f"round {round_no}: {exc}") from exc
        self.bytes_received += nbytes
        if msg_type == MSG_ERROR:
            code, message = decode_error(payload)
            raise TransportError(
                f"round {round_no}: client {self.address} error 0x{code:04x} {message}")
        if msg_type != MSG_INTERP_REPLY:
            raise TransportError(f"round {round_no}: unexpected type 0x{msg_type:02x}")
        got_round, interp, dist = decode_interp_reply(payload)
        if got_round != round_no:
            raise TransportError(f"round {round_no}: reply labeled round {got_round}")
        self.measure_bytes += measure_blob_len(interp.n, interp.d)
        return interp, dist

    def finish(self, distance: float):
        if self.sock is not None:
            try:
                self.bytes_sent += send_frame(self.sock, MSG_DONE, encode_done(distance))
            except TransportError:
                pass

    def abort(self, code: int, message: str):
        if self.sock is not None:
            try:
                self.bytes_sent += send_frame(self.sock, MSG_ERROR, encode_error(code, message))
            except TransportError:
                pass

    def close(self):
        if self.sock is not None:
            self.sock.close()
            self.sock = None


def run_remote_fedwad(mu_address: str, nu_address: str, config, timeout=30.0):
    """Run FedWaD against two serve_client endpoints. Same arithmetic as the
    in-process runner; returns the same FedResult shape."""
    from .protocol import coordinate

    handle_mu = RemoteClient(mu_address, timeout=timeout)
    handle_nu = RemoteClient(nu_address, timeout=timeout)
    try:
        return coordinate(handle_mu, handle_nu, config)
    finally:
        handle_mu.close()
        handle_nu.close()


def serve_client_in_thread(bind_address: str, local: DiscreteMeasure, timeout=30.0):
    """Spawn serve_client on a daemon thread; returns (thread, result_box,
    bound_address). Pass port 0 to let the OS pick; bound_address reports the
    real port. The box gets the DONE distance (or exception) once the run
    ends."""
    ready = threading.Event()
    box = {}

    def target():
        try:
            box["distance"] = serve_client(bind_address, local, ready=ready,
                                           timeout=timeout)
        except Exception as exc:  # surfaced by tests
            box["error"] = exc

    thread = threading.Thread(target=target, daemon=True)
    thread.start()
    if not ready.wait(timeout):
        raise TransportError(f"client never started listening on {bind_address}")
    return thread, box, ready.address
