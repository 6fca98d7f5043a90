# Copyright 2026 The saedrift Authors
# SPDX-License-Identifier: Apache-2.0
"""Pure-Python SplitMix64 stream mirroring the documented generator."""

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next_u64(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def uniform01(self):
        return (self.next_u64() >> 11) * 2.0 ** -53

    def uniform(self, lo, hi):
        return lo + (hi - lo) * self.uniform01()

    def next_below(self, n):
        accept_below = (1 << 64) - ((1 << 64) % n)
        x = self.next_u64()
        while x >= accept_below:
            x = self.next_u64()
        return x % n
