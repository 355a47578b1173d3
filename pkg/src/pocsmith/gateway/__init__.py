"""Chat-completions gateway: wire types, pricing, scripted and HTTP backends."""

from pocsmith.gateway.backends import (
    Gateway,
    GatewayError,
    HttpGateway,
    ProviderError,
    ScriptedGateway,
    ScriptExhaustedError,
    ScriptStep,
    TransportError,
    UnknownModelError,
)
from pocsmith.gateway.messages import ChatMessage, ToolCallRequest, UsageRecord, validate_conversation
from pocsmith.gateway.pricing import CallUsage, ModelPrice, PriceTable, compute_cost

__all__ = [
    "CallUsage",
    "ChatMessage",
    "Gateway",
    "GatewayError",
    "HttpGateway",
    "ModelPrice",
    "PriceTable",
    "ProviderError",
    "ScriptExhaustedError",
    "ScriptStep",
    "ScriptedGateway",
    "ToolCallRequest",
    "TransportError",
    "UnknownModelError",
    "UsageRecord",
    "compute_cost",
    "validate_conversation",
]
