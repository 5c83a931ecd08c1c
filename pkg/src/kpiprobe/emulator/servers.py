"""CPE emulator: serves the dashboard, AT endpoint and TM socket for one
device profile, all driven by one shared scenario clock."""

from __future__ import annotations

import logging
import secrets
import socketserver
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from urllib.parse import parse_qs, urlsplit

from ..atcmd import CRLF, AtDialect
from ..clock import SystemClock
from ..errors import ProtocolViolation
from ..tm import L3_REPORT_COMMAND, FrameReader
from .profiles import DeviceProfile, Interface, UnsupportedCommandBehavior, compose_snapshot
from .render import encode_l3_report, render_debug_lines, render_sgcellinfoex_lines, render_web_page
from .scenario import ScenarioModel

log = logging.getLogger("kpiprobe.emulator")

# Extra L3 parameters the report exposes beyond the promoted KPI subset.
L3_EXTRAS = {"SSB_IDX": "4", "MCS": "27", "BER": "0.00"}

_AT_RENDERERS = {
    AtDialect.DEBUG: render_debug_lines,
    AtDialect.SGCELLINFOEX: render_sgcellinfoex_lines,
}


def render_response(interface: Interface, profile: DeviceProfile, t: float,
                    model: ScenarioModel):
    """The body an interface serves at scenario time t: HTML text for the
    dashboard, payload+terminator text for AT, an encoded frame for TM."""
    snapshot = compose_snapshot(interface, profile, t, model)
    if interface is Interface.WEB:
        return render_web_page(snapshot)
    if interface is Interface.AT:
        lines = _AT_RENDERERS[profile.at.at_dialect](snapshot)
        return "\r\n".join(lines + ["OK"]) + "\r\n"
    return encode_l3_report(snapshot, extras=L3_EXTRAS).encode()


class CpeEmulator:
    """One emulated CPE with its three concurrently served interfaces.

    Content is a pure function of (scenario time, profile, model), so the
    listeners need no shared locking beyond the clock.
    """

    def __init__(self, profile: DeviceProfile, model: ScenarioModel, clock=None,
                 host: str = "127.0.0.1", web_port: int = 0, at_port: int = 0,
                 tm_port: int = 0):
        self.profile = profile
        self.model = model
        self.clock = clock or SystemClock()
        self.host = host
        self._requested_ports = (web_port, at_port, tm_port)
        self._servers: list = []
        self._threads: list[threading.Thread] = []
        self._t0 = 0.0
        self._sessions: set[str] = set()
        self.web_port = 0
        self.at_port = 0
        self.tm_port = 0

    # -- scenario sampling ------------------------------------------------

    def scenario_time(self) -> float:
        return max(0.0, self.clock.now() - self._t0)

    def snapshot(self, interface: Interface):
        return compose_snapshot(interface, self.profile, self.scenario_time(), self.model)

    def _latency(self, interface: Interface) -> None:
        latency = self.profile.interface_profile(interface).response_latency
        if latency > 0:
            time.sleep(latency)

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        web_port, at_port, tm_port = self._requested_ports
        emulator = self

        class WebHandler(BaseHTTPRequestHandler):
            def log_message(self, fmt, *args):
                log.debug("web %s " + fmt, self.client_address[0], *args)

            def _send(self, code: int, body: str, headers: dict[str, str] | None = None):
                payload = body.encode("utf-8")
                self.send_response(code)
                self.send_header("Content-Type", "text/html; charset=utf-8")
                self.send_header("Content-Length", str(len(payload)))
                for key, value in (headers or {}).items():
                    self.send_header(key, value)
                self.end_headers()
                self.wfile.write(payload)

            def do_POST(self):
                if urlsplit(self.path).path != "/login":
                    self._send(404, "not found")
                    return
                length = int(self.headers.get("Content-Length", "0"))
                form = parse_qs(self.rfile.read(length).decode("utf-8"))
                user = form.get("user", [""])[0]
                password = form.get("pass", [""])[0]
                profile = emulator.profile
                if user == (profile.web_username or "") and password == (profile.web_password or ""):
                    token = secrets.token_hex(8)
                    emulator._sessions.add(token)
                    self._send(200, "<html><body>ok</body></html>",
                               {"Set-Cookie": f"session={token}; Path=/"})
                else:
                    self._send(403, "<html><body>login failed</body></html>")

            def do_GET(self):
                if urlsplit(self.path).path != "/status":
                    self._send(404, "not found")
                    return
                if emulator.profile.web_username is not None and not self._authed():
                    self._send(401, "<html><body>login required</body></html>")
                    return
                emulator._latency(Interface.WEB)
                self._send(200, render_web_page(emulator.snapshot(Interface.WEB)))

            def _authed(self) -> bool:
                cookies = self.headers.get("Cookie", "")
                for part in cookies.split(";"):
                    name, _, value = part.strip().partition("=")
                    if name == "session" and value in emulator._sessions:
                        return True
                return False

        class AtHandler(socketserver.StreamRequestHandler):
            def handle(self):
                supported = emulator.profile.at.at_dialect
                behavior = emulator.profile.at.unsupported_command_behavior
                while True:
                    line = self.rfile.readline()
                    if not line:
                        return
                    command = line.decode("utf-8", errors="replace").strip()
                    if not command:
                        continue
                    if command == supported.command:
                        emulator._latency(Interface.AT)
                        payload = render_response(Interface.AT, emulator.profile,
                                                  emulator.scenario_time(), emulator.model)
                        self.wfile.write(payload.encode("utf-8"))
                    elif command in (d.command for d in AtDialect):
                        if behavior is UnsupportedCommandBehavior.ERROR:
                            self.wfile.write(b"ERROR" + CRLF)
                        # SILENT: the unsupported command generates no response
                    else:
                        self.wfile.write(b"ERROR" + CRLF)

        class TmHandler(socketserver.StreamRequestHandler):
            def handle(self):
                reader = FrameReader()
                while True:
                    data = self.request.recv(4096)
                    if not data:
                        return
                    try:
                        frames = reader.feed(data)
                    except ProtocolViolation:
                        return  # corrupt stream: drop the connection
                    for frame in frames:
                        if frame.command != L3_REPORT_COMMAND:
                            log.debug("tm: ignoring command 0x%04X", frame.command)
                            continue
                        emulator._latency(Interface.TM)
                        snapshot = emulator.snapshot(Interface.TM)
                        self.wfile.write(encode_l3_report(snapshot, extras=L3_EXTRAS).encode())

        class _TcpServer(socketserver.ThreadingTCPServer):
            allow_reuse_address = True
            daemon_threads = True

        web_server = ThreadingHTTPServer((self.host, web_port), WebHandler)
        web_server.daemon_threads = True
        at_server = _TcpServer((self.host, at_port), AtHandler)
        tm_server = _TcpServer((self.host, tm_port), TmHandler)

        self._servers = [web_server, at_server, tm_server]
        self.web_port = web_server.server_address[1]
        self.at_port = at_server.server_address[1]
        self.tm_port = tm_server.server_address[1]
        self._t0 = self.clock.now()

        for server in self._servers:
            thread = threading.Thread(target=server.serve_forever, daemon=True)
            thread.start()
            self._threads.append(thread)
        log.info(
            "emulator %s serving web=%d at=%d tm=%d",
            self.profile.device, self.web_port, self.at_port, self.tm_port,
        )

    def stop(self) -> None:
        for server in self._servers:
            server.shutdown()
            server.server_close()
        self._servers = []
        self._threads = []

    def __enter__(self) -> "CpeEmulator":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()

    @property
    def web_base_url(self) -> str:
        return f"http://{self.host}:{self.web_port}"
