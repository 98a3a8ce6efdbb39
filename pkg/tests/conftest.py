import math
import struct

import numpy as np
import pytest

ACCEPTANCE_LINES = []


def dct_by_summation(x):
    """Orthonormal DCT-II by direct O(n^2) summation."""
    x = np.asarray(x, dtype=float)
    n = x.size
    t = np.arange(n)
    out = np.empty(n)
    for j in range(n):
        s = math.sqrt((1.0 if j == 0 else 2.0) / n)
        out[j] = s * np.sum(x * np.cos(math.pi * (2 * t + 1) * j / (2 * n)))
    return out


def idct_by_summation(theta):
    theta = np.asarray(theta, dtype=float)
    n = theta.size
    j = np.arange(n)
    scale = np.where(j == 0, math.sqrt(1.0 / n), math.sqrt(2.0 / n))
    out = np.empty(n)
    for t in range(n):
        out[t] = np.sum(scale * theta * np.cos(math.pi * (2 * t + 1) * j / (2 * n)))
    return out


def wav_bytes(samples, rate=48000, channels=1, bits=16, fmt_tag=1, extra_chunk=False):
    """Hand-assembled RIFF/WAVE file."""
    data = struct.pack(f"<{len(samples)}h", *samples) if bits == 16 else bytes(samples)
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_tag, channels, rate, rate * block, block, bits)
    chunks = b"fmt " + struct.pack("<I", len(fmt)) + fmt
    if extra_chunk:
        info = b"INFOtest"
        chunks += b"LIST" + struct.pack("<I", len(info)) + info
    chunks += b"data" + struct.pack("<I", len(data)) + data
    return b"RIFF" + struct.pack("<I", 4 + len(chunks)) + b"WAVE" + chunks


@pytest.fixture
def write_wav(tmp_path):
    def _write(samples, name="x.wav", **kw):
        path = tmp_path / name
        path.write_bytes(wav_bytes(samples, **kw))
        return path

    return _write


def sparse_instance(seed, n, m, k):
    """Gaussian A with an exactly k-sparse theta* on a uniform random support."""
    gen = np.random.default_rng(seed)
    A = gen.standard_normal((m, n))
    theta = np.zeros(n)
    support = np.sort(gen.choice(n, k, replace=False))
    theta[support] = gen.standard_normal(k)
    return A, theta, support


def record_acceptance(number, description, passed, detail):
    ACCEPTANCE_LINES.append(f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {description} ({detail})")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
