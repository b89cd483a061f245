"""Client for external prediction backends over line-delimited JSON.

A backend is either a companion process speaking the protocol on its
standard streams or a local TCP endpoint. Frames are single lines of
JSON, UTF-8 encoded:

    request:   {"kind": "predict", "id": N, "task": ..., "texts": [...]}
    response:  {"kind": "result", "id": N, "labels": [[...], ...],
                "scores": [[...], ...]}
    handshake: {"kind": "hello"}  ->  {"kind": "ready", "tasks": [...]}
    error:     {"kind": "error", "id": N, "message": "..."}

Request ids strictly increase per connection and responses arrive in
request order; any deviation is a protocol violation. ``labels[i]`` is
the predicted label set for ``texts[i]``, surfaced verbatim;
``scores[i]`` carries one number per task label in the task's canonical
label order (a single probability for the binary task).

Requests are serialized per connection. For parallelism, open several
clients.
"""

from __future__ import annotations

import json
import os
import selectors
import shlex
import socket
import subprocess
import time
from dataclasses import dataclass

from . import LABELS_BY_TASK, TASKS

_MAX_LINE_REPR = 200  # offending-line excerpt length in error messages


class BackendError(Exception):
    pass


class BackendTimeout(BackendError):
    pass


class BackendProtocolError(BackendError):
    """The backend sent something outside the protocol."""

    def __init__(self, message: str, line: str | None = None):
        if line is not None:
            excerpt = line if len(line) <= _MAX_LINE_REPR else line[:_MAX_LINE_REPR] + "..."
            message = f"{message}; offending line: {excerpt!r}"
        super().__init__(message)
        self.line = line


class BackendReportedError(BackendError):
    """The backend answered with an error frame."""


@dataclass(frozen=True)
class ExternalBackendRef:
    """Where a backend lives and which task it serves.

    Exactly one of `command` (argv for a companion process) and `address`
    ((host, port) for TCP) must be set.
    """

    task: str
    command: tuple[str, ...] | None = None
    address: tuple[str, int] | None = None
    timeout: float = 60.0

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"unknown task {self.task!r}")
        if (self.command is None) == (self.address is None):
            raise ValueError("exactly one of command and address must be given")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")

    @classmethod
    def parse(cls, endpoint: str, task: str, timeout: float = 60.0) -> ExternalBackendRef:
        """`tcp://host:port` for a network endpoint, anything else is a
        command line to spawn.
        """
        if endpoint.startswith("tcp://"):
            rest = endpoint[len("tcp://"):]
            host, sep, port = rest.rpartition(":")
            if not sep or not host or not port.isdigit():
                raise ValueError(f"bad TCP endpoint {endpoint!r} (expected tcp://host:port)")
            return cls(task=task, address=(host, int(port)), timeout=timeout)
        argv = tuple(shlex.split(endpoint))
        if not argv:
            raise ValueError("empty backend command")
        return cls(task=task, command=argv, timeout=timeout)


class _ProcessChannel:
    """Line transport over a child process's stdin/stdout."""

    def __init__(self, argv: tuple[str, ...]):
        try:
            self._proc = subprocess.Popen(
                list(argv), stdin=subprocess.PIPE, stdout=subprocess.PIPE
            )
        except OSError as exc:
            raise BackendError(f"cannot start backend {argv[0]!r}: {exc}") from exc
        self._buf = bytearray()
        self._sel = selectors.DefaultSelector()
        self._sel.register(self._proc.stdout, selectors.EVENT_READ)
        os.set_blocking(self._proc.stdout.fileno(), False)

    def send_line(self, line: bytes) -> None:
        try:
            self._proc.stdin.write(line + b"\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BackendError(f"backend process closed its input: {exc}") from exc

    def recv_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        while True:
            idx = self._buf.find(b"\n")
            if idx >= 0:
                line = bytes(self._buf[:idx])
                del self._buf[: idx + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendTimeout(f"no response within {timeout:g}s")
            if not self._sel.select(remaining):
                raise BackendTimeout(f"no response within {timeout:g}s")
            chunk = self._proc.stdout.read(65536)
            if chunk is None:
                continue
            if chunk == b"":
                code = self._proc.poll()
                raise BackendError(
                    "backend process closed its output"
                    + (f" (exit code {code})" if code is not None else "")
                )
            self._buf.extend(chunk)

    def close(self) -> None:
        self._sel.close()
        if self._proc.stdin and not self._proc.stdin.closed:
            try:
                self._proc.stdin.close()
            except OSError:
                pass
        try:
            self._proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()
        if self._proc.stdout:
            self._proc.stdout.close()


class _SocketChannel:
    """Line transport over a TCP connection."""

    def __init__(self, address: tuple[str, int], timeout: float):
        try:
            self._sock = socket.create_connection(address, timeout=timeout)
        except OSError as exc:
            raise BackendError(f"cannot connect to {address[0]}:{address[1]}: {exc}") from exc
        self._buf = bytearray()

    def send_line(self, line: bytes) -> None:
        try:
            self._sock.sendall(line + b"\n")
        except OSError as exc:
            raise BackendError(f"backend connection lost: {exc}") from exc

    def recv_line(self, timeout: float) -> bytes:
        deadline = time.monotonic() + timeout
        while True:
            idx = self._buf.find(b"\n")
            if idx >= 0:
                line = bytes(self._buf[:idx])
                del self._buf[: idx + 1]
                return line
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise BackendTimeout(f"no response within {timeout:g}s")
            self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(65536)
            except socket.timeout:
                raise BackendTimeout(f"no response within {timeout:g}s") from None
            except OSError as exc:
                raise BackendError(f"backend connection lost: {exc}") from exc
            if chunk == b"":
                raise BackendError("backend closed the connection")
            self._buf.extend(chunk)

    def close(self) -> None:
        try:
            self._sock.close()
        except OSError:
            pass


class BackendClient:
    """Connects to one backend, performs the handshake, serializes
    predict requests with strictly increasing ids.

    Usable as a context manager; satisfies the stage-predictor interface
    (`predict(texts)` returning label sets and score dicts).
    """

    def __init__(self, ref: ExternalBackendRef):
        self.ref = ref
        self._channel: _ProcessChannel | _SocketChannel | None = None
        self._next_id = 1
        self.served_tasks: tuple[str, ...] = ()

    def __enter__(self) -> BackendClient:
        self.connect()
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()

    def connect(self) -> None:
        if self._channel is not None:
            return
        if self.ref.command is not None:
            self._channel = _ProcessChannel(self.ref.command)
        else:
            self._channel = _SocketChannel(self.ref.address, self.ref.timeout)
        try:
            frame = self._round_trip({"kind": "hello"})
        except BackendError:
            self.close()
            raise
        if frame.get("kind") != "ready" or not isinstance(frame.get("tasks"), list):
            self.close()
            raise BackendProtocolError(
                "handshake did not return a ready frame", json.dumps(frame)
            )
        self.served_tasks = tuple(str(t) for t in frame["tasks"])
        if self.ref.task not in self.served_tasks:
            self.close()
            raise BackendError(
                f"backend does not serve task {self.ref.task!r} "
                f"(serves: {', '.join(self.served_tasks) or 'none'})"
            )

    def close(self) -> None:
        if self._channel is not None:
            self._channel.close()
            self._channel = None

    def _round_trip(self, request: dict) -> dict:
        if self._channel is None:
            raise BackendError("client is not connected")
        self._channel.send_line(json.dumps(request).encode("utf-8"))
        raw = self._channel.recv_line(self.ref.timeout)
        text = raw.decode("utf-8", errors="replace")
        try:
            frame = json.loads(text)
        except json.JSONDecodeError:
            raise BackendProtocolError("response is not valid JSON", text) from None
        if not isinstance(frame, dict):
            raise BackendProtocolError("response is not a JSON object", text)
        return frame

    def predict(self, texts: list[str]) -> tuple[list[frozenset[str]], list[dict[str, float]]]:
        """One result per input text, in order."""
        if self._channel is None:
            self.connect()
        request_id = self._next_id
        self._next_id += 1
        frame = self._round_trip(
            {"kind": "predict", "id": request_id, "task": self.ref.task, "texts": list(texts)}
        )
        line = json.dumps(frame)
        if frame.get("kind") == "error":
            raise BackendReportedError(str(frame.get("message", "backend error")))
        if frame.get("kind") != "result":
            raise BackendProtocolError(f"unexpected frame kind {frame.get('kind')!r}", line)
        if frame.get("id") != request_id:
            raise BackendProtocolError(
                f"response id {frame.get('id')!r} does not match request id {request_id}", line
            )
        labels = frame.get("labels")
        scores = frame.get("scores")
        task_labels = LABELS_BY_TASK[self.ref.task]
        if not _is_label_matrix(labels, len(texts)):
            raise BackendProtocolError(
                f"labels must be {len(texts)} lists of strings", line
            )
        if not _is_score_matrix(scores, len(texts), len(task_labels)):
            raise BackendProtocolError(
                f"scores must be {len(texts)} lists of {len(task_labels)} numbers", line
            )
        label_sets = [frozenset(row) for row in labels]
        score_dicts = [
            {name: float(value) for name, value in zip(task_labels, row)} for row in scores
        ]
        return label_sets, score_dicts


def _is_label_matrix(value, n_rows: int) -> bool:
    return (
        isinstance(value, list)
        and len(value) == n_rows
        and all(
            isinstance(row, list) and all(isinstance(x, str) for x in row) for row in value
        )
    )


def _is_score_matrix(value, n_rows: int, n_cols: int) -> bool:
    return (
        isinstance(value, list)
        and len(value) == n_rows
        and all(
            isinstance(row, list)
            and len(row) == n_cols
            and all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in row)
            for row in value
        )
    )


def external_predict(
    ref: ExternalBackendRef, texts: list[str]
) -> tuple[list[frozenset[str]], list[dict[str, float]]]:
    """One-shot convenience: connect, handshake, predict, close."""
    with BackendClient(ref) as client:
        return client.predict(texts)
