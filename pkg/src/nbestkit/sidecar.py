"""Client for external scorer processes speaking the line protocol.

The sidecar contract over stdin/stdout, one JSON document per line:

    sidecar -> first line   "scorer-protocol/1 <model identifier>"
    client  -> request      {"id": "q1", "text": "..."}
    sidecar -> response     {"id": "q1", "logprob": -12.3, "token_count": 5}
                        or  {"id": "q1", "error": "message"}

Responses come back in request order, exactly one per request.  The
client validates the handshake before sending anything, applies a read
timeout to every response, and turns a dead or silent process into a
ScorerError instead of hanging.  Candidate text is normalized here,
with the scorer-side profile, because the sidecar scores exactly the
bytes it receives.
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading

from .errors import ScorerError
from .normalize import LM_PROFILE, NormalizationProfile, normalize

__all__ = ["PROTOCOL_VERSION", "handshake_line", "SidecarScorer"]

PROTOCOL_VERSION = 1
_PREFIX = "scorer-protocol/"


def handshake_line(model_id: str) -> str:
    """The exact first line a conforming sidecar must print."""
    return f"{_PREFIX}{PROTOCOL_VERSION} {model_id}"


class SidecarScorer:
    """Launches a scorer subprocess and proxies score() calls to it.

    Safe for concurrent use: a lock keeps each request/response pair
    atomic, so interleaved callers cannot cross wires.
    """

    def __init__(
        self,
        command: str,
        profile: NormalizationProfile = LM_PROFILE,
        startup_timeout: float = 30.0,
        read_timeout: float = 30.0,
    ):
        self.profile = profile
        self.read_timeout = read_timeout
        self._lock = threading.Lock()
        self._counter = 0
        argv = shlex.split(command)
        if not argv:
            raise ScorerError("empty scorer command")
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError as exc:
            raise ScorerError(f"cannot launch scorer {argv[0]!r}: {exc}") from exc
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._pump, daemon=True)
        self._reader.start()
        self.model_id = self._handshake(startup_timeout)

    def _pump(self):
        # reader thread: decouples pipe reads so timeouts work portably
        for line in self._proc.stdout:
            self._lines.put(line)
        self._lines.put(None)

    def _read_line(self, timeout: float, what: str) -> str:
        try:
            line = self._lines.get(timeout=timeout)
        except queue.Empty:
            self._kill()
            raise ScorerError(f"scorer produced no {what} within {timeout:g}s") from None
        if line is None:
            # EOF: the process closed stdout; give it a moment to finish
            # exiting so the real return code makes it into the message
            try:
                code = self._proc.wait(timeout=2)
            except subprocess.TimeoutExpired:
                code = self._proc.poll()
            raise ScorerError(f"scorer exited (code {code}) before sending {what}")
        return line.rstrip("\n")

    def _handshake(self, timeout: float) -> str:
        line = self._read_line(timeout, "handshake")
        if not line.startswith(_PREFIX):
            self._kill()
            raise ScorerError(f"unexpected handshake {line!r}")
        version, _, model_id = line[len(_PREFIX):].partition(" ")
        if version != str(PROTOCOL_VERSION):
            self._kill()
            raise ScorerError(
                f"scorer speaks protocol version {version!r}, need {PROTOCOL_VERSION}"
            )
        if not model_id.strip():
            self._kill()
            raise ScorerError("handshake is missing the model identifier")
        return model_id.strip()

    def score(self, text: str) -> tuple[float, int]:
        with self._lock:
            self._counter += 1
            request_id = f"q{self._counter}"
            payload = json.dumps(
                {"id": request_id, "text": normalize(text, self.profile)},
                ensure_ascii=False,
            )
            try:
                self._proc.stdin.write(payload + "\n")
                self._proc.stdin.flush()
            except (OSError, ValueError) as exc:
                raise ScorerError(f"scorer pipe closed: {exc}") from exc
            line = self._read_line(self.read_timeout, f"response to {request_id}")
        try:
            response = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ScorerError(f"scorer sent invalid JSON: {line!r}") from exc
        if not isinstance(response, dict) or response.get("id") != request_id:
            raise ScorerError(
                f"out-of-order response: expected id {request_id!r}, got {line!r}"
            )
        if "error" in response:
            raise ScorerError(f"scorer reported: {response['error']}")
        logprob = response.get("logprob")
        token_count = response.get("token_count")
        if not isinstance(logprob, (int, float)) or isinstance(logprob, bool):
            raise ScorerError(f"scorer sent a non-numeric logprob: {line!r}")
        if not isinstance(token_count, int) or isinstance(token_count, bool) or token_count < 1:
            raise ScorerError(f"scorer sent an invalid token_count: {line!r}")
        return float(logprob), token_count

    def _kill(self):
        if self._proc.poll() is None:
            self._proc.kill()
            self._proc.wait()

    def close(self):
        """Shut the subprocess down; idempotent."""
        try:
            if self._proc.stdin and not self._proc.stdin.closed:
                self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            self._kill()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()
