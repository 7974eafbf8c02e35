"""The request loop.

Line protocol, single-threaded, order-preserving:

    handshake:  {"schema_arity": <int>, "protocol": 1}
    request:    {"id": <int>, "instances": [[<number>, ...], ...]}
    response:   {"id": <int>, "labels": [0|1, ...]}
    on error:   {"id": <int or null>, "error": "<message>"}

A malformed line produces an error response and the loop continues; only
EOF (or socket shutdown) ends a session.
"""

from __future__ import annotations

import json
import socket

import numpy as np

from .loaders import ServedModel


def _handle_line(model: ServedModel, line: str) -> str:
    request_id = None
    try:
        obj = json.loads(line)
        if not isinstance(obj, dict):
            raise ValueError("request must be a JSON object")
        request_id = obj.get("id")
        instances = obj["instances"]
        X = np.asarray(instances, dtype=float)
        if X.ndim != 2:
            raise ValueError("instances must be a list of rows")
        if X.shape[1] != model.arity:
            raise ValueError(
                f"expected rows of width {model.arity}, got {X.shape[1]}"
            )
        labels = model.predict_labels(X)
        return json.dumps({"id": request_id, "labels": labels})
    except Exception as exc:  # crash isolation: always answer, never die
        return json.dumps({"id": request_id, "error": str(exc)})


def _session(model: ServedModel, reader, writer) -> None:
    writer(json.dumps({"schema_arity": model.arity, "protocol": 1}) + "\n")
    for line in reader:
        if not line.strip():
            continue
        writer(_handle_line(model, line) + "\n")


def serve_stdio(model: ServedModel, stdin, stdout) -> None:
    def write(text: str):
        stdout.write(text)
        stdout.flush()

    _session(model, stdin, write)


def serve_tcp(model: ServedModel, port: int, host: str = "127.0.0.1", log=None) -> None:
    """Accept connections one at a time, a full session each."""
    with socket.create_server((host, port)) as server:
        if log:
            log(f"listening on {host}:{server.getsockname()[1]}")
        while True:
            conn, peer = server.accept()
            if log:
                log(f"session from {peer[0]}:{peer[1]}")
            with conn, conn.makefile("rw", encoding="utf-8", newline="\n") as fh:
                def write(text: str):
                    fh.write(text)
                    fh.flush()

                try:
                    _session(model, fh, write)
                except (BrokenPipeError, ConnectionResetError):
                    pass
