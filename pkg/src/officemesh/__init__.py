"""officemesh: plug & play multi-agent middleware over a shared typed bus,
with STRIPS planning, contract-net allocation, and a deterministic
smart-office simulation."""

__version__ = "0.1.0"
