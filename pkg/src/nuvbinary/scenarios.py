"""Builders for the two bundled scenarios.

``dac``
    Third-order analog low-pass filter driven by a binary stream, asked to
    follow a slowly varying waveform (digital-to-analog conversion).
``flappy``
    Point mass falling under gravity, where ``u_k = 1`` adds a fixed vertical
    impulse; the position must pass near a handful of checkpoints.

Both targets are synthetic.  The DAC waveform is a sum of two slow tones under
a raised-cosine fade-in (the filter starts at rest).  The flappy checkpoints
are sampled from the trajectory of a planted three-flap schedule, so a binary
input that passes all of them exists.
"""

from __future__ import annotations

import numpy as np

from .model import Levels, LtiModel, Scenario, Target, simulate

DAC_A = [[0.7967, -6.3978, -94.2123],
         [0.0027, 0.9902, -0.1467],
         [0.0, 0.0030, 0.9999]]
DAC_B = [0.0027, 0.0, 0.0]
DAC_C = [[0.0, 0.0, 35037.9]]

FLAPPY_FLAPS = (11, 103, 193)
FLAPPY_CHECKPOINTS = (12, 38, 57, 100, 112, 146, 180, 192, 217, 229)


def dac_waveform(K=450, fade=60):
    k = np.arange(1, K + 1)
    env = np.where(k < fade, 0.5 * (1 - np.cos(np.pi * k / fade)), 1.0)
    return env * (0.45 + 0.2 * np.sin(2 * np.pi * k / 150) + 0.1 * np.sin(2 * np.pi * k / 55 + 1.0))


def dac(K=450, s2=0.045, max_iters=50_000):
    model = LtiModel(DAC_A, DAC_B, DAC_C)
    return Scenario(model, Target(dac_waveform(K)), Levels(0.0, 1.0), s2=s2, method="em",
                    max_iters=max_iters, tol_convergence=1e-12, name="dac")


def flappy_model(m=0.5, T=0.1, g=0.25):
    return LtiModel([[1.0, T], [0.0, 1.0]], [0.0, 1.0 / m], [[1.0, 0.0]],
                    d=[0.0, -T * g], x0=[0.0, 0.0])


def flappy(K=250, s2=0.1, max_iters=30_000):
    model = flappy_model()
    u = np.zeros(K)
    u[list(FLAPPY_FLAPS)] = 1.0
    y = simulate(model, u)[1][:, 0]
    ybreve = np.zeros(K)
    w = np.zeros(K)
    cps = list(FLAPPY_CHECKPOINTS)
    ybreve[cps] = np.round(y[cps], 2)
    w[cps] = 1.0
    return Scenario(model, Target(ybreve, w), Levels(0.0, 1.0), s2=s2, method="em",
                    max_iters=max_iters, tol_convergence=1e-10, name="flappy")


BUILDERS = {"dac": dac, "flappy": flappy}
