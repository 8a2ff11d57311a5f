"""Memory-trace violation reports."""

from typing import List, Optional

from pydantic import BaseModel, Field


class Violation(BaseModel):
    clock: int = Field(..., description="Global clock index")
    block_cycle: int
    memory: str
    layer: int
    slot: int
    bank: int
    rule: str
    accesses: List[str] = Field(default_factory=list, description="Conflicting accesses, one line each")


class ViolationReport(BaseModel):
    block_cycles: int
    clocks_per_block_cycle: int
    accesses_checked: int
    interleavers_clash_free: bool = True
    violation_count: int = 0
    violations: List[Violation] = Field(default_factory=list, description="First violations found, capped")

    @property
    def clean(self) -> bool:
        return self.violation_count == 0 and self.interleavers_clash_free

    @property
    def first(self) -> Optional[Violation]:
        return self.violations[0] if self.violations else None
