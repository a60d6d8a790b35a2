"""Compiled episode rollouts.

Every episode in a batch runs through the same scalar code path, so a batch
of one and a batch of many give bitwise-identical per-episode results.
"""

import math

import numpy as np
from numba import njit

GRAVITY = 9.8
CART_MASS = 1.0
FORCE_MAG = 10.0
TAU = 0.02
THETA_LIMIT = 0.2095
X_LIMIT = 2.4


@njit(cache=True)
def mlp(params, n_in, n_hid, n_out, obs, hidden, out):
    k = 0
    for h in range(n_hid):
        s = 0.0
        for i in range(n_in):
            s += params[k] * obs[i]
            k += 1
        s += params[k]
        k += 1
        hidden[h] = math.tanh(s)
    for o in range(n_out):
        s = 0.0
        for h in range(n_hid):
            s += params[k] * hidden[h]
            k += 1
        s += params[k]
        k += 1
        out[o] = math.tanh(s)


@njit(cache=True)
def cartpole_derivs(theta_dot, sin_t, cos_t, force, half_len, pole_mass):
    total = CART_MASS + pole_mass
    pml = pole_mass * half_len
    temp = (force + pml * theta_dot * theta_dot * sin_t) / total
    theta_acc = (GRAVITY * sin_t - cos_t * temp) / (
        half_len * (4.0 / 3.0 - pole_mass * cos_t * cos_t / total))
    x_acc = temp - pml * theta_acc * cos_t / total
    return x_acc, theta_acc


@njit(cache=True)
def cartpole_rollouts(params, param_index, n_hid, half_len, pole_mass, init, cap,
                      out_steps, out_early):
    """Run one episode per row of ``init``.

    ``params[param_index[b]]`` drives episode ``b``. Reward equals the number
    of steps after which the state is still inside the bounds.
    """
    n_ep = init.shape[0]
    obs = np.empty(4)
    hidden = np.empty(n_hid)
    act = np.empty(1)
    for b in range(n_ep):
        p = params[param_index[b]]
        x = init[b, 0]
        x_dot = init[b, 1]
        theta = init[b, 2]
        theta_dot = init[b, 3]
        lh = half_len[b]
        mp = pole_mass[b]
        steps = 0
        early = False
        for _ in range(cap):
            obs[0] = x
            obs[1] = x_dot
            obs[2] = theta
            obs[3] = theta_dot
            mlp(p, 4, n_hid, 1, obs, hidden, act)
            force = FORCE_MAG * act[0]
            x_acc, theta_acc = cartpole_derivs(theta_dot, math.sin(theta), math.cos(theta),
                                               force, lh, mp)
            x = x + TAU * x_dot
            x_dot = x_dot + TAU * x_acc
            theta = theta + TAU * theta_dot
            theta_dot = theta_dot + TAU * theta_acc
            if not (math.isfinite(x) and math.isfinite(x_dot)
                    and math.isfinite(theta) and math.isfinite(theta_dot)):
                early = True
                break
            if abs(x) > X_LIMIT or abs(theta) > THETA_LIMIT:
                early = True
                break
            steps += 1
        out_steps[b] = steps
        out_early[b] = early


@njit(cache=True)
def switch_rollouts(params, param_index, n_hid, gain, start, step_scale, cap, out_reward):
    n_ep = gain.shape[0]
    obs = np.empty(1)
    hidden = np.empty(n_hid)
    act = np.empty(1)
    for b in range(n_ep):
        p = params[param_index[b]]
        pos = start
        total = 0.0
        for _ in range(cap):
            obs[0] = pos
            mlp(p, 1, n_hid, 1, obs, hidden, act)
            pos = pos + step_scale * gain[b] * act[0]
            total += 1.0 - min(1.0, pos * pos)
        out_reward[b] = total
