"""Tests for the asynchronous fiber scan."""

import asyncio
import io

import pytest

from sill.io import write_scan_csv
from sill.torus_grid import make_grid
from sill.two_particle import ScanRow, TwoParticleModel, fiber_scan, fiber_scan_async

K_LIST = [(0.0, 0.0, 0.0), (3.141592653589793, 0.0, 0.0), (1.0, -0.5, 0.25)]


def _csv(rows: list[ScanRow]) -> str:
    out = io.StringIO()
    write_scan_csv(rows, out)
    return out.getvalue()


class TestFiberScanAsync:
    """Tests for fiber_scan_async()."""

    @pytest.mark.asyncio
    async def test_same_as_sync(self, deep_pair: TwoParticleModel) -> None:
        """The async scan produces the same table as the blocking one."""
        grid = make_grid(6)
        rows = await fiber_scan_async(deep_pair, K_LIST, grid, jobs=2)
        assert _csv(rows) == _csv(fiber_scan(deep_pair, K_LIST, grid))

    @pytest.mark.asyncio
    async def test_input_order(self, deep_pair: TwoParticleModel) -> None:
        """Rows come back in the order of the requested k."""
        rows = await fiber_scan_async(deep_pair, K_LIST, make_grid(6), jobs=3)
        assert [row.k for row in rows] == K_LIST
        assert all(not row.failed for row in rows)

    @pytest.mark.asyncio
    async def test_concurrent_scans(self, free_pair: TwoParticleModel) -> None:
        """Several scans can share one event loop."""
        grid = make_grid(4)
        first, second = await asyncio.gather(
            fiber_scan_async(free_pair, K_LIST[:2], grid),
            fiber_scan_async(free_pair, K_LIST[:2], grid),
        )
        assert _csv(first) == _csv(second)
        assert all(row.n_below == 0 for row in first)

    @pytest.mark.asyncio
    async def test_empty_k_list(self, free_pair: TwoParticleModel) -> None:
        """No k-points, no rows."""
        assert await fiber_scan_async(free_pair, [], make_grid(4)) == []
