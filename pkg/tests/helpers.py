"""Shared stream generators and book builders."""

from __future__ import annotations

import numpy as np

from lobsim.orderbook import Order, OrderBook, Side


def make_stream(
    rng: np.random.Generator,
    n_orders: int,
    orders_per_step: int = 5,
    center_tick: int = 1000,
    sigma_ticks: float = 6.0,
    size_mean: float = 8.0,
    lifetime_mean: float = 60.0,
):
    """Random order stream as (step, id, side, limit, shares, expires)."""
    steps = 1 + np.arange(n_orders) // orders_per_step
    buys = rng.random(n_orders) < 0.5
    limits = np.maximum(
        1, center_tick + np.rint(rng.normal(0.0, sigma_ticks, n_orders)).astype(int)
    )
    shares = np.maximum(1, np.rint(rng.exponential(size_mean, n_orders)).astype(int))
    lifetimes = np.maximum(
        1, np.ceil(rng.exponential(lifetime_mean, n_orders)).astype(int)
    )
    return [
        (int(steps[i]), i + 1, Side.BUY if buys[i] else Side.SELL,
         int(limits[i]), int(shares[i]), int(steps[i] + lifetimes[i]))
        for i in range(n_orders)
    ]


def build_random_book(
    rng: np.random.Generator,
    n_orders: int = 40,
    center_tick: int = 1000,
    sigma_ticks: float = 8.0,
    size_mean: float = 10.0,
    tick_size: float = 0.1,
) -> OrderBook:
    """Book with resting depth on both sides and no crossed levels."""
    book = OrderBook(tick_size)
    next_id = 1
    for _ in range(n_orders):
        if rng.random() < 0.5:
            side = Side.BUY
            limit = center_tick - 1 - int(abs(rng.normal(0.0, sigma_ticks)))
        else:
            side = Side.SELL
            limit = center_tick + 1 + int(abs(rng.normal(0.0, sigma_ticks)))
        shares = max(1, int(round(rng.exponential(size_mean))))
        book.submit(
            Order(next_id, 0, side, max(1, limit), shares, 0, 10**9), step=0
        )
        next_id += 1
    return book
