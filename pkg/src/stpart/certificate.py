"""Certificates: a claim, how it was checked, and the verdict."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field


@dataclass
class Certificate:
    claim: str
    method: str
    verdict: str  # "holds" | "violated" | "conservative"
    detail: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == "holds"

    def record(self) -> dict:
        return asdict(self)


def check(claim: str, method: str, value: bool, **detail) -> Certificate:
    return Certificate(claim, method, "holds" if value else "violated", detail)


class CertificateError(RuntimeError):
    """A certificate required by a construction failed."""

    def __init__(self, cert: Certificate):
        super().__init__(f"{cert.claim}: {cert.verdict} ({cert.method})")
        self.certificate = cert
