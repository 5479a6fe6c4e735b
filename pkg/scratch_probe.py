"""Scratch probe: estimator recovery on synthetic scenes (not shipped)."""
import time

import numpy as np

from uwform import imgcore, formation, estimation


def z_xramp(rng, size, lo, hi):
    xx = np.tile(np.linspace(0, 1, size), (size, 1))
    return imgcore.RangeMap(lo + (hi - lo) * xx)


def z_vramp(rng, size, lo, hi, eps=0.18):
    xx = np.tile(np.linspace(-1, 1, size), (size, 1))
    v = np.sqrt(xx**2 + eps**2)
    v = (v - v.min()) / (v.max() - v.min())
    return imgcore.RangeMap(lo + (hi - lo) * v)


def z_diag_eq(rng, size, lo, hi):
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    base = xx + 0.8 * yy
    flat = base.reshape(-1)
    ranks = np.empty_like(flat)
    ranks[np.argsort(flat, kind="stable")] = np.arange(flat.size)
    eq = (ranks / (flat.size - 1)).reshape(base.shape)
    return imgcore.RangeMap(lo + (hi - lo) * eq)


def make_texture(rng, size, mu, dark_frac=0.08):
    """Per-channel texture with local mean mu_c plus near-black pixels."""
    mu = np.asarray(mu, dtype=float)
    checker = np.indices((size, size)).sum(axis=0) % 2 * 2.0 - 1.0
    out = np.empty((size, size, 3))
    for c in range(3):
        u = rng.uniform(0.6, 1.0, size=(size, size))
        out[:, :, c] = mu[c] / (1 - dark_frac) * (1.0 + 0.35 * checker * u)
    dark = rng.random((size, size)) < dark_frac
    out[dark] = rng.uniform(0.0, 0.005, size=(int(dark.sum()), 3))
    return imgcore.LinearImage(np.clip(out, 0.0, 1.0))


def veil_params(rng, z, uniform_beta=True):
    if uniform_beta:
        bd = rng.uniform(0.15, 0.3)
        beta_d = np.array([bd, bd, bd])
        w = np.ones(3)
        mu = np.full(3, 0.5)
    else:
        z_med = float(np.median(z.data))
        beta_d = np.sort(rng.uniform(0.15, 0.3, 3))[::-1].copy()
        spread = beta_d.max() - beta_d.min()
        max_spread = 0.33 / z_med  # keep W >= ~0.72 so mu <= ~0.7
        if spread > max_spread:
            beta_d = beta_d.min() + (beta_d - beta_d.min()) * max_spread / spread
        w = np.exp(-(beta_d - beta_d.min()) * z_med)
        w /= w.max()
        mu = 1.0 / (2.0 * w)
    params = formation.WaterParams(
        B_inf=rng.uniform(0.15, 0.55, 3),
        beta_B=rng.uniform(0.2, 0.6, 3),
        beta_D=formation.AttenuationModel.constant(beta_d),
        white_point=w,
    )
    return params, mu


def recovery_report(J, z, true_params, config):
    I, _ = formation.synthesize(J, z, true_params)
    t0 = time.time()
    est, comps = estimation.estimate_water_params(I, z, config)
    dt = time.time() - t0
    rel_binf = np.abs(est.B_inf - true_params.B_inf) / true_params.B_inf
    rel_bb = np.abs(est.beta_B - true_params.beta_B) / true_params.beta_B
    zv = z.data[z.data >= config.z_eps]
    edges = np.linspace(zv.min(), zv.max(), config.n_bins + 1)
    centers = 0.5 * (edges[:-1] + edges[1:])
    est_beta = est.beta_D.evaluate(centers)
    true_beta = true_params.beta_D.evaluate(centers)
    rel_att = np.abs(est_beta - true_beta) / true_beta
    w_err = np.abs(est.white_point - true_params.white_point)
    return dict(
        rel_binf=rel_binf.max(), rel_bb=rel_bb.max(),
        rel_att=rel_att.max(), w_err=w_err.max(), dt=dt,
    )


def main():
    config = estimation.EstimationConfig()
    for zmaker, zname, lo, hi in (
        (z_xramp, "xramp[3,9]", 3.0, 9.0),
        (z_vramp, "vramp[2.5,9.5]", 2.5, 9.5),
        (z_diag_eq, "diag_eq[3,9]", 3.0, 9.0),
        (z_vramp, "vramp[2,9]", 2.0, 9.0),
    ):
        for uniform in (True, False):
            rng = np.random.default_rng(11)
            worst = dict(rel_binf=0, rel_bb=0, rel_att=0, w_err=0, dt=0)
            for i in range(5):
                z = zmaker(rng, 64, lo, hi)
                p, mu = veil_params(rng, z, uniform)
                J = make_texture(rng, 64, mu)
                r = recovery_report(J, z, p, config)
                for k in worst:
                    worst[k] = max(worst[k], r[k])
            kind = "uniform" if uniform else "manifold"
            print(
                f"{zname:16s} {kind:8s} worst: B_inf {worst['rel_binf']*100:5.1f}%  "
                f"beta_B {worst['rel_bb']*100:5.1f}%  att {worst['rel_att']*100:5.1f}%  "
                f"W {worst['w_err']:.3f}  ({worst['dt']:.2f}s)"
            )


if __name__ == "__main__":
    main()
