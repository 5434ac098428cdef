from pydantic import BaseModel
from typing import List, Optional, Dict, Any


class RunResponse(BaseModel):
    kind: str
    report: Dict[str, Any]
    warnings: List[str] = []
    rows: List[Dict[str, Any]] = []


class CheckSchema(BaseModel):
    name: str
    passed: bool
    detail: Optional[str] = None


class SelftestResponse(BaseModel):
    passed: bool
    checks: List[CheckSchema]
