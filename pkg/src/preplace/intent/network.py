"""Recurrent-convolutional heatmap predictor.

A GRU encodes the streaming 28-feature input; the decoder projects the
hidden state to a small channel grid, upsamples it with one transposed
convolution (stride 2, 3x4 kernel, padding 1), crops to the target grid,
collapses channels with a 1x1 convolution, and squashes through a sigmoid.
Forward and backward passes are written directly in numpy (float64) so the
full training path is self-contained and finite-difference checkable.
"""

from __future__ import annotations

import numpy as np

from ..grid import GridSpec, Heatmap

KERNEL_X = 3
KERNEL_Y = 4
STRIDE = 2
PAD = 1


class DimensionMismatch(ValueError):
    """Model input does not match the declared input width."""


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _upsample_slices(n_in: int, n_out: int, offset: int):
    """Input/output index arrays for one kernel offset of the upsampler."""
    i = np.arange(n_in)
    o = STRIDE * i + offset - PAD
    mask = (o >= 0) & (o < n_out)
    return i[mask], o[mask]


class IntentModel:
    """Trainable placement-intent predictor over a fixed grid."""

    VERSION = 1
    PARAM_ORDER = (
        "W_z", "W_r", "W_h", "U_z", "U_r", "U_h", "b_z", "b_r", "b_h",
        "W_p", "b_p", "K_t", "b_t", "w_o", "b_o",
    )

    def __init__(
        self,
        grid: GridSpec,
        input_dim: int = 28,
        hidden_dim: int = 64,
        channels: int = 16,
        out_channels: int = 8,
        seed: int = 0,
        params: dict[str, np.ndarray] | None = None,
    ):
        self.grid = grid
        self.input_dim = input_dim
        self.hidden_dim = hidden_dim
        self.channels = channels
        self.out_channels = out_channels
        # smallest projection grid whose upsampled size covers n x m;
        # the decoder crops the excess after the transposed convolution
        self.proj_x = (grid.n + 2) // 2
        self.proj_y = (grid.m + 1) // 2
        self.up_x = (self.proj_x - 1) * STRIDE - 2 * PAD + KERNEL_X
        self.up_y = (self.proj_y - 1) * STRIDE - 2 * PAD + KERNEL_Y
        assert self.up_x >= grid.n and self.up_y >= grid.m
        self._slices = {
            (a, b): (
                _upsample_slices(self.proj_x, self.up_x, a),
                _upsample_slices(self.proj_y, self.up_y, b),
            )
            for a in range(KERNEL_X)
            for b in range(KERNEL_Y)
        }
        self.params = params if params is not None else self._init_params(seed)

    def _init_params(self, seed: int) -> dict[str, np.ndarray]:
        rng = np.random.default_rng(seed)
        h, d = self.hidden_dim, self.input_dim
        c0, c1 = self.channels, self.out_channels
        proj = c0 * self.proj_x * self.proj_y

        def u(shape, fan_in):
            s = 1.0 / np.sqrt(fan_in)
            return rng.uniform(-s, s, size=shape)

        return {
            "W_z": u((h, d), d), "W_r": u((h, d), d), "W_h": u((h, d), d),
            "U_z": u((h, h), h), "U_r": u((h, h), h), "U_h": u((h, h), h),
            "b_z": np.zeros(h), "b_r": np.zeros(h), "b_h": np.zeros(h),
            "W_p": u((proj, h), h), "b_p": np.zeros(proj),
            "K_t": u((c0, c1, KERNEL_X, KERNEL_Y), c0 * KERNEL_X * KERNEL_Y),
            "b_t": np.zeros(c1),
            "w_o": u((c1,), c1), "b_o": np.zeros(()),
        }

    def init_hidden(self) -> np.ndarray:
        return np.zeros(self.hidden_dim)

    # -- forward -------------------------------------------------------

    def _gru_step(self, x: np.ndarray, h_prev: np.ndarray):
        p = self.params
        z = _sigmoid(p["W_z"] @ x + p["U_z"] @ h_prev + p["b_z"])
        r = _sigmoid(p["W_r"] @ x + p["U_r"] @ h_prev + p["b_r"])
        uh = p["U_h"] @ h_prev
        c = np.tanh(p["W_h"] @ x + r * uh + p["b_h"])
        h = (1.0 - z) * c + z * h_prev
        return h, z, r, c, uh

    def _decode(self, hs: np.ndarray):
        """Hidden states (T, H) -> heatmaps (T, n, m) plus decode cache."""
        p = self.params
        t_len = hs.shape[0]
        d = hs @ p["W_p"].T + p["b_p"]
        dd = d.reshape(t_len, self.channels, self.proj_x, self.proj_y)
        up = np.zeros((t_len, self.out_channels, self.up_x, self.up_y))
        for (a, b), ((ix, ox), (jy, oy)) in self._slices.items():
            if ix.size == 0 or jy.size == 0:
                continue
            contrib = np.einsum(
                "tcij,cd->tdij", dd[:, :, ix[:, None], jy[None, :]],
                p["K_t"][:, :, a, b],
            )
            up[:, :, ox[:, None], oy[None, :]] += contrib
        up += p["b_t"][None, :, None, None]
        crop = up[:, :, : self.grid.n, : self.grid.m]
        logits = np.einsum("tcxy,c->txy", crop, p["w_o"]) + p["b_o"]
        preds = _sigmoid(logits)
        return preds, (dd, crop)

    def forward(self, x: np.ndarray, hidden: np.ndarray | None = None):
        """One streaming step: (Heatmap, next hidden). hidden=None resets."""
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise DimensionMismatch(
                f"input shape {x.shape}, expected ({self.input_dim},)"
            )
        h_prev = self.init_hidden() if hidden is None else hidden
        h, *_ = self._gru_step(x, h_prev)
        preds, _ = self._decode(h[None, :])
        return Heatmap(self.grid, preds[0]), h

    def forward_sequence(self, xs: np.ndarray):
        """Full-trajectory forward with caches for backpropagation.

        xs: (T, input_dim); returns (preds (T, n, m), cache).
        """
        xs = np.asarray(xs, dtype=np.float64)
        if xs.ndim != 2 or xs.shape[1] != self.input_dim:
            raise DimensionMismatch(f"sequence shape {xs.shape}")
        t_len = xs.shape[0]
        h = self.init_hidden()
        hs = np.empty((t_len, self.hidden_dim))
        h_prevs = np.empty_like(hs)
        zs = np.empty_like(hs)
        rs = np.empty_like(hs)
        cs = np.empty_like(hs)
        uhs = np.empty_like(hs)
        for t in range(t_len):
            h_prevs[t] = h
            h, zs[t], rs[t], cs[t], uhs[t] = self._gru_step(xs[t], h)
            hs[t] = h
        preds, dec_cache = self._decode(hs)
        cache = (xs, hs, h_prevs, zs, rs, cs, uhs, preds, dec_cache)
        return preds, cache

    # -- backward ------------------------------------------------------

    def backward_sequence(self, cache, d_preds: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss wrt every parameter.

        d_preds: dLoss/dpreds with preds the sigmoid outputs, shape (T, n, m).
        """
        p = self.params
        xs, hs, h_prevs, zs, rs, cs, uhs, preds, (dd, crop) = cache
        t_len = xs.shape[0]
        g = {name: np.zeros_like(p[name]) for name in self.PARAM_ORDER}

        # decoder
        d_logits = d_preds * preds * (1.0 - preds)
        g["b_o"] = np.sum(d_logits)
        g["w_o"] = np.einsum("txy,tcxy->c", d_logits, crop)
        d_crop = d_logits[:, None, :, :] * p["w_o"][None, :, None, None]
        d_up = np.zeros((t_len, self.out_channels, self.up_x, self.up_y))
        d_up[:, :, : self.grid.n, : self.grid.m] = d_crop
        g["b_t"] = d_up.sum(axis=(0, 2, 3))
        d_dd = np.zeros_like(dd)
        for (a, b), ((ix, ox), (jy, oy)) in self._slices.items():
            if ix.size == 0 or jy.size == 0:
                continue
            d_up_ab = d_up[:, :, ox[:, None], oy[None, :]]
            dd_ab = dd[:, :, ix[:, None], jy[None, :]]
            g["K_t"][:, :, a, b] = np.einsum("tcij,tdij->cd", dd_ab, d_up_ab)
            d_dd[:, :, ix[:, None], jy[None, :]] += np.einsum(
                "tdij,cd->tcij", d_up_ab, p["K_t"][:, :, a, b]
            )
        d_proj = d_dd.reshape(t_len, -1)
        g["W_p"] = d_proj.T @ hs
        g["b_p"] = d_proj.sum(axis=0)
        d_hs = d_proj @ p["W_p"]

        # backpropagation through time
        d_h_next = np.zeros(self.hidden_dim)
        for t in range(t_len - 1, -1, -1):
            dh = d_hs[t] + d_h_next
            z, r, c, uh = zs[t], rs[t], cs[t], uhs[t]
            x, h_prev = xs[t], h_prevs[t]
            dz = dh * (h_prev - c)
            dc = dh * (1.0 - z)
            dh_prev = dh * z
            da_c = dc * (1.0 - c * c)
            g["W_h"] += np.outer(da_c, x)
            g["b_h"] += da_c
            g["U_h"] += np.outer(da_c * r, h_prev)
            dh_prev += p["U_h"].T @ (da_c * r)
            dr = da_c * uh
            da_z = dz * z * (1.0 - z)
            g["W_z"] += np.outer(da_z, x)
            g["U_z"] += np.outer(da_z, h_prev)
            g["b_z"] += da_z
            dh_prev += p["U_z"].T @ da_z
            da_r = dr * r * (1.0 - r)
            g["W_r"] += np.outer(da_r, x)
            g["U_r"] += np.outer(da_r, h_prev)
            g["b_r"] += da_r
            dh_prev += p["U_r"].T @ da_r
            d_h_next = dh_prev
        return g

    # -- introspection --------------------------------------------------

    def header(self) -> dict:
        """Shape metadata for the on-disk container."""
        return {
            "format_version": self.VERSION,
            "input_dim": self.input_dim,
            "hidden_dim": self.hidden_dim,
            "channels": self.channels,
            "out_channels": self.out_channels,
            "grid": {
                "n": self.grid.n,
                "m": self.grid.m,
                "cell_size": self.grid.cell_size,
                "origin": list(self.grid.origin),
            },
            "params": [
                {"name": name, "shape": list(self.params[name].shape)}
                for name in self.PARAM_ORDER
            ],
        }
