"""Reference augmentation (and optional agent) server over the framed JSON protocol.

Each connection is served strictly in order: the next request is read only
after the previous reply was written. Connections are served concurrently.
"""

import asyncio
import logging
import threading
import time
from dataclasses import dataclass
from typing import Dict, List, Optional

from agents import Agent, AgentSpec, build_agent
from augmentation.domains import get_domain
from augmentation.strategies import augment
from config import config
from core.types import Frame, View
from errors import AdsTestError
from .protocol import (
    AgentActRequest,
    AgentActResponse,
    AugmentRequest,
    AugmentResponse,
    ErrorResponse,
    Message,
    ViewPayload,
    mask_from_payload,
    read_message,
    write_message,
)

logger = logging.getLogger("adstest")


@dataclass
class ServedRecord:
    connection: int
    frame_id: int
    type: str
    received_ts: float
    replied_ts: float


class ReferenceServer:
    def __init__(self, host: Optional[str] = None, port: Optional[int] = None,
                 latency_ms: float = 0.0, agent_spec: Optional[AgentSpec] = None,
                 max_payload: Optional[int] = None):
        self.host = host or config.server.host
        self.port = config.server.port if port is None else port
        self.latency_s = latency_ms / 1000.0
        self.agent_spec = agent_spec
        self.max_payload = max_payload or config.server.max_payload
        self.served: List[ServedRecord] = []
        self._server: Optional[asyncio.AbstractServer] = None
        self._connections = 0

    @property
    def endpoint(self) -> str:
        return f"{self.host}:{self.port}"

    def _augment(self, request: AugmentRequest) -> AugmentResponse:
        domain = get_domain(request.domain)
        masks = [mask_from_payload(m) for m in request.masks]
        images = [v.to_image() for v in request.views]
        if masks and len(masks) != len(images):
            raise AdsTestError(f"Got {len(masks)} masks for {len(images)} views")
        views = tuple(
            View(name=f"view{i}", image=image, mask=masks[i] if masks else None)
            for i, image in enumerate(images)
        )
        result = augment(Frame(step=request.frame_id, views=views), request.strategy, domain,
                         request.params, request.preserved)
        return AugmentResponse(
            frame_id=request.frame_id,
            views=[ViewPayload.from_image(img) for img in result.images],
            elapsed_ms=result.elapsed_ms,
            seed_used=result.seed_used,
            gt_valid=result.gt_valid,
        )

    def _act(self, agent: Agent, request: AgentActRequest) -> AgentActResponse:
        start = time.perf_counter()
        views = tuple(View(name=f"view{i}", image=v.to_image()) for i, v in enumerate(request.views))
        command = agent.act(Frame(step=request.frame_id, views=views))
        return AgentActResponse(frame_id=request.frame_id, steering_target=command.steering_target,
                                throttle=command.throttle,
                                elapsed_ms=(time.perf_counter() - start) * 1000.0)

    async def _dispatch(self, message: Message, agent: Optional[Agent]) -> Message:
        start = time.perf_counter()
        if isinstance(message, AugmentRequest):
            reply = await asyncio.to_thread(self._augment, message)
        elif isinstance(message, AgentActRequest):
            if agent is None:
                raise AdsTestError("This server does not host an agent")
            reply = await asyncio.to_thread(self._act, agent, message)
        else:
            raise AdsTestError(f"Unexpected message type '{message.type}'")
        if self.latency_s > 0:
            await asyncio.sleep(self.latency_s)
        reply.elapsed_ms = (time.perf_counter() - start) * 1000.0
        return reply

    async def handle(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        self._connections += 1
        connection = self._connections
        peer = writer.get_extra_info("peername")
        logger.info(f"Connection {connection} from {peer}")
        agent = build_agent(self.agent_spec) if self.agent_spec is not None else None
        try:
            while True:
                try:
                    message = await read_message(reader, self.max_payload)
                except AdsTestError as e:
                    logger.error(f"Connection {connection}: {e}")
                    await write_message(writer, ErrorResponse(frame_id=0, message=str(e)))
                    break
                if message is None:
                    break
                received = time.time()
                try:
                    reply = await self._dispatch(message, agent)
                except Exception as e:
                    logger.error(f"Connection {connection}, frame {message.frame_id}: {e}")
                    reply = ErrorResponse(frame_id=message.frame_id, message=str(e))
                replied = time.time()
                if not isinstance(reply, ErrorResponse):
                    reply.received_ts = received
                    reply.replied_ts = replied
                await write_message(writer, reply, self.max_payload)
                self.served.append(ServedRecord(connection, message.frame_id, message.type, received, replied))
                logger.debug(f"Connection {connection}: {message.type} frame {message.frame_id} "
                             f"in {(replied - received) * 1000.0:.1f} ms")
        except (ConnectionError, asyncio.IncompleteReadError) as e:
            logger.warning(f"Connection {connection} dropped: {e}")
        finally:
            if agent is not None:
                agent.close()
            writer.close()
            try:
                await writer.wait_closed()
            except ConnectionError:
                pass
            logger.info(f"Connection {connection} closed")

    async def start(self) -> asyncio.AbstractServer:
        self._server = await asyncio.start_server(self.handle, self.host, self.port)
        # Port 0 asks the OS for a free port
        self.port = self._server.sockets[0].getsockname()[1]
        logger.info(f"Serving on {self.endpoint} (latency {self.latency_s * 1000.0:.0f} ms, "
                    f"agent {self.agent_spec.kind if self.agent_spec else 'none'})")
        return self._server

    async def serve_forever(self) -> None:
        server = await self.start()
        async with server:
            await server.serve_forever()


class BackgroundServer:
    """Runs a ReferenceServer on its own event loop thread."""

    def __init__(self, server: ReferenceServer):
        self.server = server
        self._loop = asyncio.new_event_loop()
        self._thread = threading.Thread(target=self._loop.run_forever, daemon=True)
        self._started: Dict[str, asyncio.AbstractServer] = {}

    @property
    def endpoint(self) -> str:
        return self.server.endpoint

    def start(self) -> "BackgroundServer":
        self._thread.start()
        future = asyncio.run_coroutine_threadsafe(self.server.start(), self._loop)
        self._started["server"] = future.result(timeout=10)
        return self

    def stop(self) -> None:
        server = self._started.pop("server", None)
        if server is not None:
            async def _close():
                server.close()
                if hasattr(server, "close_clients"):
                    server.close_clients()
                try:
                    await asyncio.wait_for(server.wait_closed(), timeout=2)
                except asyncio.TimeoutError:
                    logger.warning("Server stopped with connections still open")
            asyncio.run_coroutine_threadsafe(_close(), self._loop).result(timeout=10)
        self._loop.call_soon_threadsafe(self._loop.stop)
        self._thread.join(timeout=10)
        self._loop.close()

    def __enter__(self) -> "BackgroundServer":
        return self.start()

    def __exit__(self, exc_type, exc, tb):
        self.stop()
