from __future__ import annotations

import logging
from typing import Callable, Iterable, List, Optional, TypeVar

from joblib import Parallel, delayed

from qhx.core.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def fan_out(func: Callable[[T], R], items: Iterable[T], n_jobs: Optional[int] = None) -> List[R]:
    """Map ``func`` over ``items`` on a thread pool; results keep the input order."""
    items = list(items)
    workers = min(n_jobs or get_settings().threads, get_settings().threads, max(len(items), 1))
    if workers <= 1:
        return [func(item) for item in items]
    logger.debug("fanning %d tasks over %d threads", len(items), workers)
    return Parallel(n_jobs=workers, prefer="threads")(delayed(func)(item) for item in items)
