import logging
import socket
from typing import Optional, Tuple

from pydantic import BaseModel

from config import config
from errors import ConfigError, ConnectError, ProtocolError, TransportError
from .protocol import ErrorResponse, Message, recv_message, send_message

logger = logging.getLogger("adstest")


def parse_endpoint(endpoint: str) -> Tuple[str, int]:
    """'host:port' -> (host, port)."""
    host, sep, port = endpoint.rpartition(":")
    if not sep or not host or not port.isdigit():
        raise ConfigError(f"Invalid endpoint '{endpoint}', expected host:port")
    return host, int(port)


class FramedClient:
    """Blocking request/reply client over one persistent connection."""

    def __init__(self, endpoint: str, timeout: Optional[float] = None,
                 max_payload: Optional[int] = None):
        self.endpoint = endpoint
        self.host, self.port = parse_endpoint(endpoint)
        self.timeout = config.server.timeout if timeout is None else timeout
        self.max_payload = config.server.max_payload if max_payload is None else max_payload
        self._sock: Optional[socket.socket] = None

    def connect(self) -> None:
        if self._sock is not None:
            return
        try:
            self._sock = socket.create_connection((self.host, self.port), timeout=self.timeout)
        except OSError as e:
            raise ConnectError(f"Cannot connect to {self.endpoint}: {e}") from e
        self._sock.settimeout(self.timeout)
        logger.debug(f"Connected to {self.endpoint}")

    def request(self, message: BaseModel) -> Message:
        """Send one message and block until its reply arrives."""
        self.connect()
        try:
            send_message(self._sock, message, self.max_payload)
            reply = recv_message(self._sock, self.max_payload)
        except TransportError:
            # The stream position is unknown after a failure
            self.close()
            raise
        if isinstance(reply, ErrorResponse):
            raise ProtocolError(f"Remote error from {self.endpoint}: {reply.message}")
        return reply

    def close(self) -> None:
        if self._sock is not None:
            try:
                self._sock.close()
            finally:
                self._sock = None

    def __enter__(self) -> "FramedClient":
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
