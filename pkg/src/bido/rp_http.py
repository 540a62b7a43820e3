"""HTTP/JSON face of the mock relying party, plus the matching client.

Endpoints (all POST, all binary fields base64url):
    /register/challenge  {}                                -> {challenge}
    /register/complete   {auth_data, attestation}          -> {cred_id}
    /auth/challenge      {cred_id?}                        -> {challenge, allow_credentials}
    /auth/complete       {cred_id, signed_challenge, challenge} -> {accepted, sign_count}

Errors come back as HTTP 400 with {error: <code>, detail: <message>} where
the code is the exception class name (ChallengeReplayed, BadAttestation,
UnknownCredential, ...).
"""

from __future__ import annotations

import json
import threading
import time
import urllib.error
import urllib.request
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .errors import BidoError
from .keymat import Signature
from .protocol import (
    AssertionMessage,
    Challenge,
    ChallengePurpose,
    RegistrationMessage,
    RelyingParty,
    b64url_decode,
    b64url_encode,
)


class RpRequestHandler(BaseHTTPRequestHandler):
    rp: RelyingParty  # set by make_server

    # silence per-request stderr logging
    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send_json(self, status: int, doc: dict) -> None:
        body = json.dumps(doc).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length) if length else b"{}"
        doc = json.loads(raw.decode("utf-8")) if raw.strip() else {}
        if not isinstance(doc, dict):
            raise ValueError("request body must be a JSON object")
        return doc

    def do_POST(self):  # noqa: N802 - stdlib naming
        try:
            doc = self._read_json()
            if self.path == "/register/challenge":
                challenge = self.rp.issue_challenge(ChallengePurpose.REGISTRATION)
                self._send_json(200, {"challenge": b64url_encode(challenge.nonce)})
            elif self.path == "/register/complete":
                msg = RegistrationMessage(
                    auth_data=b64url_decode(doc["auth_data"]),
                    attestation=Signature.from_bytes(b64url_decode(doc["attestation"])),
                )
                record = self.rp.register(msg)
                self._send_json(200, {"cred_id": b64url_encode(record.cred_id)})
            elif self.path == "/auth/challenge":
                cred_id = b64url_decode(doc["cred_id"]) if doc.get("cred_id") else None
                allowed = self.rp.allow_credentials(cred_id)
                challenge = self.rp.issue_challenge(ChallengePurpose.AUTHENTICATION)
                self._send_json(
                    200,
                    {
                        "challenge": b64url_encode(challenge.nonce),
                        "allow_credentials": [b64url_encode(c) for c in allowed],
                    },
                )
            elif self.path == "/auth/complete":
                msg = AssertionMessage(
                    cred_id=b64url_decode(doc["cred_id"]),
                    signed_challenge=Signature.from_bytes(b64url_decode(doc["signed_challenge"])),
                )
                record = self.rp.finish_auth(msg, b64url_decode(doc["challenge"]))
                self._send_json(200, {"accepted": True, "sign_count": record.sign_count})
            else:
                self._send_json(404, {"error": "NotFound", "detail": self.path})
        except BidoError as exc:
            self._send_json(400, {"error": type(exc).__name__, "detail": str(exc)})
        except (KeyError, ValueError, json.JSONDecodeError) as exc:
            self._send_json(400, {"error": "BadRequest", "detail": str(exc)})


def make_server(rp: RelyingParty, host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    handler = type("BoundRpHandler", (RpRequestHandler,), {"rp": rp})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(rp: RelyingParty, host: str, port: int) -> None:
    server = make_server(rp, host, port)
    addr = server.server_address
    print(f"relying party listening on http://{addr[0]}:{addr[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()


class BackgroundRpServer:
    """Context manager running the RP server on a daemon thread (tests)."""

    def __init__(self, rp: RelyingParty, host: str = "127.0.0.1"):
        self.server = make_server(rp, host, 0)
        self.url = f"http://{self.server.server_address[0]}:{self.server.server_address[1]}"
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    def __enter__(self) -> "BackgroundRpServer":
        self._thread.start()
        return self

    def __exit__(self, *exc_info) -> None:
        self.server.shutdown()
        self.server.server_close()
        self._thread.join(timeout=5)


# ---------------------------------------------------------------------------
# Client helpers
# ---------------------------------------------------------------------------

class RpHttpError(BidoError):
    """Error response from the RP service."""

    def __init__(self, code: str, detail: str):
        super().__init__(f"{code}: {detail}")
        self.code = code
        self.detail = detail


def _post(url: str, path: str, doc: dict) -> dict:
    body = json.dumps(doc).encode("utf-8")
    req = urllib.request.Request(
        url.rstrip("/") + path, data=body, headers={"Content-Type": "application/json"}
    )
    try:
        with urllib.request.urlopen(req) as resp:
            return json.loads(resp.read().decode("utf-8"))
    except urllib.error.HTTPError as exc:
        payload = exc.read().decode("utf-8", errors="replace")
        try:
            parsed = json.loads(payload)
            raise RpHttpError(parsed.get("error", "Unknown"), parsed.get("detail", payload)) from exc
        except json.JSONDecodeError:
            raise RpHttpError("HTTP%d" % exc.code, payload) from exc


def fetch_registration_challenge(url: str) -> Challenge:
    doc = _post(url, "/register/challenge", {})
    return Challenge(
        nonce=b64url_decode(doc["challenge"]),
        purpose=ChallengePurpose.REGISTRATION,
        issued_at=time.time(),
    )


def submit_registration(url: str, msg: RegistrationMessage) -> bytes:
    doc = _post(
        url,
        "/register/complete",
        {
            "auth_data": b64url_encode(msg.auth_data),
            "attestation": b64url_encode(msg.attestation.to_bytes()),
        },
    )
    return b64url_decode(doc["cred_id"])


def fetch_auth_challenge(url: str, cred_id: bytes | None = None) -> tuple[Challenge, list[bytes]]:
    doc = _post(url, "/auth/challenge", {"cred_id": b64url_encode(cred_id)} if cred_id else {})
    challenge = Challenge(
        nonce=b64url_decode(doc["challenge"]),
        purpose=ChallengePurpose.AUTHENTICATION,
        issued_at=time.time(),
    )
    return challenge, [b64url_decode(c) for c in doc["allow_credentials"]]


def submit_assertion(url: str, msg: AssertionMessage, challenge_nonce: bytes) -> bool:
    doc = _post(
        url,
        "/auth/complete",
        {
            "cred_id": b64url_encode(msg.cred_id),
            "signed_challenge": b64url_encode(msg.signed_challenge.to_bytes()),
            "challenge": b64url_encode(challenge_nonce),
        },
    )
    return bool(doc["accepted"])
