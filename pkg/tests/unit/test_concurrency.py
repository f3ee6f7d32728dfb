import time

import pytest

from lfdeblur.utils.concurrency import gather_bounded


@pytest.mark.asyncio
async def test_gather_bounded_preserves_input_order():
    """Results follow the input order even when later items finish first."""
    def work(item):
        time.sleep(0.01 * (5 - item))
        return item * item

    results = await gather_bounded(work, [1, 2, 3, 4], jobs=4)

    assert results == [1, 4, 9, 16]


@pytest.mark.asyncio
async def test_gather_bounded_limits_concurrency():
    active = []
    peak = []

    def work(item):
        active.append(item)
        peak.append(len(active))
        time.sleep(0.02)
        active.remove(item)
        return item

    await gather_bounded(work, list(range(6)), jobs=2)

    assert max(peak) <= 2


@pytest.mark.asyncio
async def test_gather_bounded_rejects_zero_jobs():
    with pytest.raises(ValueError):
        await gather_bounded(lambda item: item, [1], jobs=0)
