"""Wire-protocol client against a scriptable stub process."""

from __future__ import annotations

import subprocess
import time

import pytest

from conftest import STUB_BACKEND
from crisistriage.backend import (
    BackendClient,
    BackendError,
    BackendProtocolError,
    BackendReportedError,
    BackendTimeout,
    ExternalBackendRef,
    external_predict,
)


def stub_ref(python_exe, task="informative", timeout=10.0, **opts):
    cmd = [python_exe, str(STUB_BACKEND), "--task", task]
    for key, val in opts.items():
        cmd += [f"--{key.replace('_', '-')}", str(val)]
    return ExternalBackendRef(task=task, command=tuple(cmd), timeout=timeout)


class TestRefParsing:
    def test_tcp_and_command_forms(self):
        r = ExternalBackendRef.parse("tcp://10.0.0.5:9000", "aid", 3.0)
        assert r.address == ("10.0.0.5", 9000)
        assert r.command is None
        r = ExternalBackendRef.parse("python3 serve.py --flag", "intent", 3.0)
        assert r.command == ("python3", "serve.py", "--flag")
        assert r.address is None

    def test_bad_endpoints_rejected(self):
        for bad in ["tcp://nohost", "tcp://h:xx", ""]:
            with pytest.raises(ValueError):
                ExternalBackendRef.parse(bad, "informative", 3.0)
        with pytest.raises(ValueError):
            ExternalBackendRef(task="stance", command=("x",))
        with pytest.raises(ValueError):
            ExternalBackendRef(task="informative", command=("x",), address=("h", 1))


class TestHappyPath:
    def test_informative_echo(self, python_exe):
        ref = stub_ref(python_exe, labels="informative", score=0.75)
        with BackendClient(ref) as client:
            labels, scores = client.predict(["a", "b", "c"])
        assert labels == [frozenset({"informative"})] * 3
        assert scores == [{"informative": 0.75}] * 3

    def test_multilabel_task_scores_keyed_by_label(self, python_exe):
        ref = stub_ref(python_exe, task="intent", labels="need;supply")
        with BackendClient(ref) as client:
            labels, scores = client.predict(["x"])
        assert labels == [frozenset({"need", "supply"})]
        assert set(scores[0]) == {"need", "supply"}

    def test_empty_label_rows_and_empty_batch(self, python_exe):
        ref = stub_ref(python_exe, labels="")
        with BackendClient(ref) as client:
            labels, scores = client.predict(["just one"])
            assert labels == [frozenset()]
            assert client.predict([]) == ([], [])

    def test_many_requests_on_one_connection(self, python_exe):
        # the stub rejects ids that do not increase from 1, so three clean
        # round trips prove the client numbers requests correctly
        ref = stub_ref(python_exe, labels="informative")
        with BackendClient(ref) as client:
            for _ in range(3):
                labels, _ = client.predict(["t"])
                assert labels == [frozenset({"informative"})]

    def test_contains_mode_labels_by_text(self, python_exe):
        ref = stub_ref(python_exe, task="aid", mode="contains")
        with BackendClient(ref) as client:
            labels, _ = client.predict(["send food and water", "shelter please", "nothing"])
        assert labels[0] == frozenset({"food"})
        assert labels[1] == frozenset({"shelter"})
        assert labels[2] == frozenset()

    def test_one_shot_helper(self, python_exe):
        ref = stub_ref(python_exe, labels="informative")
        labels, scores = external_predict(ref, ["x", "y"])
        assert labels == [frozenset({"informative"})] * 2

    def test_over_tcp(self, python_exe):
        proc = subprocess.Popen(
            [python_exe, str(STUB_BACKEND), "--task", "informative",
             "--labels", "informative", "--listen", "127.0.0.1:0"],
            stdout=subprocess.PIPE, text=True,
        )
        try:
            port = int(proc.stdout.readline().split()[1])
            ref = ExternalBackendRef.parse(f"tcp://127.0.0.1:{port}", "informative", 10.0)
            labels, _ = external_predict(ref, ["hello"])
            assert labels == [frozenset({"informative"})]
        finally:
            proc.kill()
            proc.wait()


class TestFailures:
    def test_wrong_id_is_a_protocol_error(self, python_exe):
        ref = stub_ref(python_exe, mode="bad-id", labels="informative")
        with BackendClient(ref) as client, pytest.raises(BackendProtocolError) as exc:
            client.predict(["x"])
        assert "offending line" in str(exc.value)

    def test_error_frame_surfaces_backend_message(self, python_exe):
        ref = stub_ref(python_exe, mode="error")
        with BackendClient(ref) as client, pytest.raises(BackendReportedError, match="exploded"):
            client.predict(["x"])

    def test_non_json_reply(self, python_exe):
        ref = stub_ref(python_exe, mode="garbage")
        with BackendClient(ref) as client, pytest.raises(BackendProtocolError):
            client.predict(["x"])

    def test_wrong_label_row_count(self, python_exe):
        ref = stub_ref(python_exe, mode="short", labels="informative")
        with BackendClient(ref) as client, pytest.raises(BackendProtocolError):
            client.predict(["x", "y"])

    def test_wrong_score_row_width(self, python_exe):
        ref = stub_ref(python_exe, mode="badscore", labels="informative")
        with BackendClient(ref) as client, pytest.raises(BackendProtocolError):
            client.predict(["x"])

    def test_silent_backend_times_out(self, python_exe):
        ref = stub_ref(python_exe, mode="silent", timeout=1.0)
        start = time.monotonic()
        with BackendClient(ref) as client, pytest.raises(BackendTimeout):
            client.predict(["x"])
        assert time.monotonic() - start < 5.0

    def test_broken_handshake(self, python_exe):
        ref = stub_ref(python_exe, mode="no-ready")
        with pytest.raises(BackendProtocolError):
            BackendClient(ref).connect()

    def test_task_not_served(self, python_exe):
        ref = stub_ref(python_exe, task="informative", tasks="intent,aid")
        with pytest.raises(BackendError, match="serve"):
            BackendClient(ref).connect()

    def test_backend_that_exits_early(self, python_exe):
        ref = ExternalBackendRef(
            task="informative",
            command=(python_exe, "-c", "pass"),
            timeout=5.0,
        )
        with pytest.raises(BackendError):
            BackendClient(ref).connect()
