"""Length-prefixed JSON wire protocol.

Every message is a 4-byte big-endian payload length followed by a UTF-8 JSON
object. Images travel as base64 PPM (P6), masks as base64 PGM (P5).
"""

import asyncio
import base64
import json
import socket
import struct
from typing import List, Literal, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from augmentation.params import AugmentParams
from config import config
from core.codecs import decode_pgm, decode_ppm, encode_pgm, encode_ppm
from core.types import Image, SemanticMask
from errors import CodecError, ProtocolError, TransportError, TransportTimeout

PROTOCOL_VERSION = 1
HEADER = struct.Struct("!I")


class ViewPayload(BaseModel):
    width: int
    height: int
    ppm_base64: str

    @classmethod
    def from_image(cls, image: Image) -> "ViewPayload":
        return cls(width=image.width, height=image.height,
                   ppm_base64=base64.b64encode(encode_ppm(image)).decode("ascii"))

    def to_image(self) -> Image:
        try:
            image = decode_ppm(base64.b64decode(self.ppm_base64, validate=True))
        except (ValueError, CodecError) as e:
            raise ProtocolError(f"Bad view payload: {e}") from e
        if (image.width, image.height) != (self.width, self.height):
            raise ProtocolError(f"View declares {self.width}x{self.height} but carries "
                                f"{image.width}x{image.height}")
        return image


def mask_to_payload(mask: SemanticMask) -> str:
    return base64.b64encode(encode_pgm(mask)).decode("ascii")


def mask_from_payload(data: str) -> SemanticMask:
    try:
        return decode_pgm(base64.b64decode(data, validate=True))
    except (ValueError, CodecError) as e:
        raise ProtocolError(f"Bad mask payload: {e}") from e


class _Message(BaseModel):
    model_config = ConfigDict(extra="forbid")

    version: int = PROTOCOL_VERSION
    frame_id: int = 0


class AugmentRequest(_Message):
    type: Literal["augment"] = "augment"
    strategy: str
    domain: str
    params: AugmentParams = Field(default_factory=AugmentParams)
    preserved: Optional[List[int]] = None
    views: List[ViewPayload]
    masks: List[str] = Field(default_factory=list)


class AugmentResponse(_Message):
    type: Literal["augment_result"] = "augment_result"
    views: List[ViewPayload]
    elapsed_ms: float
    seed_used: int
    gt_valid: Optional[bool] = None
    # Server clock (time.time()) when the request was read and the reply sent
    received_ts: Optional[float] = None
    replied_ts: Optional[float] = None


class AgentActRequest(_Message):
    type: Literal["agent_act"] = "agent_act"
    views: List[ViewPayload]


class AgentActResponse(_Message):
    type: Literal["agent_action"] = "agent_action"
    steering_target: float
    throttle: float
    elapsed_ms: float = 0.0
    received_ts: Optional[float] = None
    replied_ts: Optional[float] = None


class ErrorResponse(_Message):
    type: Literal["error"] = "error"
    message: str


Message = Union[AugmentRequest, AugmentResponse, AgentActRequest, AgentActResponse, ErrorResponse]

_TYPES = {
    "augment": AugmentRequest,
    "augment_result": AugmentResponse,
    "agent_act": AgentActRequest,
    "agent_action": AgentActResponse,
    "error": ErrorResponse,
}


def encode_message(message: BaseModel, max_payload: int = config.server.max_payload) -> bytes:
    payload = message.model_dump_json().encode("utf-8")
    if len(payload) > max_payload:
        raise ProtocolError(f"Message of {len(payload)} bytes exceeds the {max_payload}-byte limit")
    return HEADER.pack(len(payload)) + payload


def decode_message(payload: bytes) -> Message:
    try:
        data = json.loads(payload.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ProtocolError(f"Malformed frame: {e}") from e
    if not isinstance(data, dict):
        raise ProtocolError("Malformed frame: payload is not a JSON object")
    version = data.get("version")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(f"Protocol version mismatch: got {version}, expected {PROTOCOL_VERSION}")
    kind = _TYPES.get(data.get("type"))
    if kind is None:
        raise ProtocolError(f"Unknown message type '{data.get('type')}'")
    try:
        return kind.model_validate(data)
    except ValidationError as e:
        raise ProtocolError(f"Invalid {data.get('type')} message: {e}") from e


def _recv_exactly(sock: socket.socket, n: int) -> bytes:
    buf = bytearray()
    while len(buf) < n:
        try:
            chunk = sock.recv(n - len(buf))
        except socket.timeout as e:
            raise TransportTimeout("Timed out waiting for the peer") from e
        except OSError as e:
            raise TransportError(f"Connection failed: {e}") from e
        if not chunk:
            raise TransportError("Connection closed by peer")
        buf.extend(chunk)
    return bytes(buf)


def send_message(sock: socket.socket, message: BaseModel,
                 max_payload: int = config.server.max_payload) -> None:
    data = encode_message(message, max_payload)
    try:
        sock.sendall(data)
    except socket.timeout as e:
        raise TransportTimeout("Timed out sending to the peer") from e
    except OSError as e:
        raise TransportError(f"Connection failed: {e}") from e


def recv_message(sock: socket.socket, max_payload: int = config.server.max_payload) -> Message:
    (length,) = HEADER.unpack(_recv_exactly(sock, HEADER.size))
    if length > max_payload:
        raise ProtocolError(f"Incoming frame of {length} bytes exceeds the {max_payload}-byte limit")
    return decode_message(_recv_exactly(sock, length))


async def read_message(reader: asyncio.StreamReader,
                       max_payload: int = config.server.max_payload) -> Optional[Message]:
    """Next message from an asyncio stream, or None on a clean EOF between frames."""
    try:
        header = await reader.readexactly(HEADER.size)
    except asyncio.IncompleteReadError as e:
        if not e.partial:
            return None
        raise ProtocolError("Truncated frame header") from e
    (length,) = HEADER.unpack(header)
    if length > max_payload:
        raise ProtocolError(f"Incoming frame of {length} bytes exceeds the {max_payload}-byte limit")
    try:
        payload = await reader.readexactly(length)
    except asyncio.IncompleteReadError as e:
        raise ProtocolError("Truncated frame payload") from e
    return decode_message(payload)


async def write_message(writer: asyncio.StreamWriter, message: BaseModel,
                        max_payload: int = config.server.max_payload) -> None:
    writer.write(encode_message(message, max_payload))
    await writer.drain()
