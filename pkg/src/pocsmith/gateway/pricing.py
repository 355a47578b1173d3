"""Per-model pricing and client-side cost accounting.

Costs are computed locally from a price table rather than trusted from the
provider, in exact decimal arithmetic: the run-level budget cutoff is an
exact comparison, not a float tolerance.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from importlib import resources
from pathlib import Path
from typing import Any

MILLION = Decimal(1_000_000)


class PricingError(ValueError):
    """Price table missing, malformed, or queried for an unknown model."""


@dataclass(frozen=True)
class ModelPrice:
    model_id: str
    usd_per_million_input_tokens: Decimal
    usd_per_million_output_tokens: Decimal
    context_window_tokens: int

    def __post_init__(self) -> None:
        for value in (self.usd_per_million_input_tokens, self.usd_per_million_output_tokens):
            if not value.is_finite() or value < 0:
                raise PricingError(f"{self.model_id}: prices must be finite and >= 0")
        if self.context_window_tokens <= 0:
            raise PricingError(f"{self.model_id}: context window must be positive")


@dataclass(frozen=True)
class CallUsage:
    """Token counts and exact cost of a single model call."""

    input_tokens: int
    output_tokens: int
    cost_usd: Decimal


def compute_cost(input_tokens: int, output_tokens: int, price: ModelPrice) -> Decimal:
    """Exact USD cost of one call under the given per-million-token prices."""
    if input_tokens < 0 or output_tokens < 0:
        raise PricingError("token counts must be nonnegative")
    return (
        Decimal(input_tokens) * price.usd_per_million_input_tokens
        + Decimal(output_tokens) * price.usd_per_million_output_tokens
    ) / MILLION


class PriceTable:
    """Model prices keyed by model_id, loaded from a JSON config."""

    def __init__(self, prices: dict[str, ModelPrice]) -> None:
        self._prices = dict(prices)

    def __contains__(self, model_id: str) -> bool:
        return model_id in self._prices

    def get(self, model_id: str) -> ModelPrice:
        try:
            return self._prices[model_id]
        except KeyError:
            raise PricingError(f"model {model_id!r} not in price table") from None

    def model_ids(self) -> list[str]:
        return sorted(self._prices)

    def usage_for(self, model_id: str, input_tokens: int, output_tokens: int) -> CallUsage:
        cost = compute_cost(input_tokens, output_tokens, self.get(model_id))
        return CallUsage(input_tokens=input_tokens, output_tokens=output_tokens, cost_usd=cost)

    @staticmethod
    def from_json(data: dict[str, Any]) -> "PriceTable":
        try:
            models = data["models"]
        except KeyError:
            raise PricingError("price table missing 'models' section") from None
        prices = {}
        for model_id, entry in models.items():
            prices[model_id] = ModelPrice(
                model_id=model_id,
                usd_per_million_input_tokens=Decimal(str(entry["usd_per_million_input_tokens"])),
                usd_per_million_output_tokens=Decimal(str(entry["usd_per_million_output_tokens"])),
                context_window_tokens=int(entry["context_window_tokens"]),
            )
        return PriceTable(prices)

    @staticmethod
    def load(path: str | Path) -> "PriceTable":
        return PriceTable.from_json(json.loads(Path(path).read_text()))

    @staticmethod
    def bundled() -> "PriceTable":
        """The price table shipped with the package."""
        text = resources.files("pocsmith").joinpath("data/model_prices.json").read_text()
        return PriceTable.from_json(json.loads(text))
