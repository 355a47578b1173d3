"""Gateway backends: a deterministic scripted double and a live HTTP client.

Both expose the same complete() contract: given a conversation, return the
next assistant message plus the exact usage delta for that single call.
The gateway never mutates the caller's conversation; history growth is
owned by the caller.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

import httpx

from pocsmith.gateway.messages import ChatMessage, ToolCallRequest, validate_conversation
from pocsmith.gateway.pricing import CallUsage, PriceTable

logger = logging.getLogger(__name__)

BASE_URL_ENV = "POCSMITH_BASE_URL"
API_KEY_ENV = "POCSMITH_API_KEY"
DEFAULT_BASE_URL = "https://openrouter.ai/api/v1"

MAX_TRANSPORT_RETRIES = 2
RETRY_BACKOFF_SECONDS = 1.0


class GatewayError(Exception):
    """Base class for gateway failures."""


class TransportError(GatewayError):
    """Network-level fault; retryable."""


class ProviderError(GatewayError):
    """Provider refusal or malformed response; never retried."""


class UnknownModelError(GatewayError):
    """model_id not registered in the price table."""


class ScriptExhaustedError(GatewayError):
    """The scripted backend was asked for more turns than it holds."""


class Gateway(Protocol):
    def complete(
        self,
        conversation: Sequence[ChatMessage],
        model_id: str,
        *,
        temperature: float = 0.0,
        seed: int = 1615315,
        available_tools: Sequence[dict[str, Any]] = (),
    ) -> tuple[ChatMessage, CallUsage]: ...


def _check_preconditions(
    conversation: Sequence[ChatMessage], model_id: str, prices: PriceTable
) -> None:
    if not conversation:
        raise ValueError("conversation must be non-empty")
    validate_conversation(conversation)
    if model_id not in prices:
        raise UnknownModelError(f"model {model_id!r} not in price table")


@dataclass(frozen=True)
class ScriptStep:
    """One canned assistant turn with its declared token usage."""

    message: ChatMessage
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self) -> None:
        if self.message.role != "assistant":
            raise ValueError("script steps must be assistant messages")


class ScriptedGateway:
    """Replays a fixed script of assistant turns; the deterministic test double.

    Costs are computed from the same price table as the live backend, so
    budget enforcement behaves identically under test.
    """

    def __init__(self, script: Sequence[ScriptStep], prices: PriceTable | None = None) -> None:
        if not script:
            raise ValueError("script must be non-empty")
        self._script = list(script)
        self._cursor = 0
        self._prices = prices or PriceTable.bundled()

    @property
    def remaining_steps(self) -> int:
        return len(self._script) - self._cursor

    def complete(
        self,
        conversation: Sequence[ChatMessage],
        model_id: str,
        *,
        temperature: float = 0.0,
        seed: int = 1615315,
        available_tools: Sequence[dict[str, Any]] = (),
    ) -> tuple[ChatMessage, CallUsage]:
        _check_preconditions(conversation, model_id, self._prices)
        if self._cursor >= len(self._script):
            raise ScriptExhaustedError(
                f"script exhausted after {len(self._script)} steps"
            )
        step = self._script[self._cursor]
        self._cursor += 1
        offered = {t["function"]["name"] for t in available_tools}
        for call in step.message.tool_calls:
            if call.tool_name not in offered:
                raise ProviderError(
                    f"scripted step {self._cursor} calls {call.tool_name!r}, "
                    f"which is not among the offered tools"
                )
        usage = self._prices.usage_for(model_id, step.input_tokens, step.output_tokens)
        return step.message, usage

    @staticmethod
    def from_file(path: str | Path, prices: PriceTable | None = None) -> "ScriptedGateway":
        """Load a script from JSON.

        Schema: {"steps": [{"content": str,
                            "tool_calls": [{"id"?, "tool_name", "arguments"}],
                            "input_tokens"?, "output_tokens"?}]}.
        A string argument value of the form {"$file": "rel/path"} is replaced
        by the contents of that file, resolved against the script's directory.
        """
        path = Path(path)
        data = json.loads(path.read_text())
        steps = []
        for index, raw in enumerate(data["steps"]):
            calls = []
            for call_index, call in enumerate(raw.get("tool_calls", ())):
                arguments = {
                    key: _resolve_file_ref(value, path.parent)
                    for key, value in call.get("arguments", {}).items()
                }
                calls.append(
                    ToolCallRequest(
                        id=call.get("id", f"call_{index + 1}_{call_index + 1}"),
                        tool_name=call["tool_name"],
                        arguments=arguments,
                    )
                )
            if "content_file" in raw:
                content = (path.parent / raw["content_file"]).read_text()
            else:
                content = raw.get("content", "")
            steps.append(
                ScriptStep(
                    message=ChatMessage.assistant(content, calls),
                    input_tokens=raw.get("input_tokens", 0),
                    output_tokens=raw.get("output_tokens", 0),
                )
            )
        return ScriptedGateway(steps, prices=prices)


def _resolve_file_ref(value: Any, base_dir: Path) -> Any:
    if isinstance(value, dict) and set(value) == {"$file"}:
        return (base_dir / value["$file"]).read_text()
    return value


@dataclass
class HttpGateway:
    """Chat-completions client for the OpenRouter/OpenAI JSON dialect."""

    prices: PriceTable = field(default_factory=PriceTable.bundled)
    base_url: str | None = None
    api_key: str | None = None
    timeout_seconds: float = 300.0
    retry_backoff_seconds: float = RETRY_BACKOFF_SECONDS
    transport: httpx.BaseTransport | None = None  # injectable for tests

    def __post_init__(self) -> None:
        self.base_url = (self.base_url or os.environ.get(BASE_URL_ENV) or DEFAULT_BASE_URL).rstrip("/")
        self.api_key = self.api_key or os.environ.get(API_KEY_ENV)
        self._client = httpx.Client(
            timeout=self.timeout_seconds,
            transport=self.transport,
        )

    def complete(
        self,
        conversation: Sequence[ChatMessage],
        model_id: str,
        *,
        temperature: float = 0.0,
        seed: int = 1615315,
        available_tools: Sequence[dict[str, Any]] = (),
    ) -> tuple[ChatMessage, CallUsage]:
        _check_preconditions(conversation, model_id, self.prices)
        body: dict[str, Any] = {
            "model": model_id,
            "messages": [m.to_wire() for m in conversation],
            "temperature": temperature,
            "seed": seed,
        }
        if available_tools:
            body["tools"] = list(available_tools)
        response = self._post_with_retries(body)
        return self._parse_response(response, model_id, available_tools)

    def _post_with_retries(self, body: dict[str, Any]) -> dict[str, Any]:
        url = f"{self.base_url}/chat/completions"
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        last_error: Exception | None = None
        for attempt in range(1 + MAX_TRANSPORT_RETRIES):
            try:
                response = self._client.post(url, json=body, headers=headers)
            except httpx.HTTPError as exc:
                last_error = exc
                logger.warning("transport failure (attempt %d): %s", attempt + 1, exc)
                if attempt < MAX_TRANSPORT_RETRIES:
                    time.sleep(self.retry_backoff_seconds)
                continue
            if response.status_code in (429,) or response.status_code >= 500:
                last_error = TransportError(f"HTTP {response.status_code}")
                if attempt < MAX_TRANSPORT_RETRIES:
                    time.sleep(self.retry_backoff_seconds)
                continue
            if response.status_code != 200:
                raise ProviderError(f"HTTP {response.status_code}: {response.text[:500]}")
            try:
                return response.json()
            except json.JSONDecodeError as exc:
                raise ProviderError(f"non-JSON response body: {exc}") from exc
        raise TransportError(f"transport failed after {1 + MAX_TRANSPORT_RETRIES} attempts: {last_error}")

    def _parse_response(
        self,
        payload: dict[str, Any],
        model_id: str,
        available_tools: Sequence[dict[str, Any]],
    ) -> tuple[ChatMessage, CallUsage]:
        try:
            wire = payload["choices"][0]["message"]
            message = ChatMessage.from_wire({**wire, "role": "assistant"})
            usage_block = payload.get("usage") or {}
            input_tokens = int(usage_block.get("prompt_tokens", 0))
            output_tokens = int(usage_block.get("completion_tokens", 0))
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderError(f"malformed completion payload: {exc}") from exc
        offered = {t["function"]["name"] for t in available_tools}
        for call in message.tool_calls:
            if call.tool_name not in offered:
                raise ProviderError(f"model called unknown tool {call.tool_name!r}")
        usage = self.prices.usage_for(model_id, input_tokens, output_tokens)
        return message, usage
