"""End-to-end smoke checks for the python module.

Run with PYTHONPATH holding both the built extension and python/. Everything
here is deterministic; any failure raises.
"""

import math
import tempfile

import numpy as np

import lfdeblur as lf


def scene(rng, U=3, V=3, X=24, Y=22):
    return rng.uniform(size=(U, V, X, Y, 3))


def main():
    rng = np.random.default_rng(11)
    a = scene(rng)

    # slicing agrees with plain numpy indexing
    assert np.array_equal(lf.sai(a, 1, 2), a[1, 2])
    assert np.array_equal(lf.micro_lens(a, 4, 5), a[:, :, 4, 5])
    assert np.array_equal(lf.epi(a, "horizontal", 1, 7), a[1, :, :, 7])
    assert np.array_equal(lf.epi(a, "vertical", 2, 6), a[:, 2, 6, :])

    # scene IO round-trips exactly after 8-bit quantization
    q = np.round(a * 255.0) / 255.0
    with tempfile.TemporaryDirectory() as d:
        lf.save_scene(q, d)
        back = lf.load_scene(d)
    assert np.array_equal(back, q)

    # trajectories are seeded: same seed same path, first pose is rest
    t1 = lf.sample_trajectory(9, 3, 0.8, 0.0, 6)
    t2 = lf.sample_trajectory(9, 3, 0.8, 0.0, 6)
    t3 = lf.sample_trajectory(10, 3, 0.8, 0.0, 6)
    assert t1.poses[0].is_identity()
    assert all(p.tx == q.tx and p.ty == q.ty for p, q in zip(t1.poses, t2.poses))
    assert any(p.tx != q.tx for p, q in zip(t1.poses, t3.poses))

    # zero motion reproduces the (clamped) input bit for bit
    still = lf.sample_trajectory(1, 3, 0.0, 0.0, 4)
    assert np.array_equal(lf.synthesize_blur(a, still, 1.0), a)

    # real motion blurs: the blurred copy scores worse against the sharp one
    blur = lf.synthesize_blur(a, t1, 1.5)
    assert blur.shape == a.shape
    assert lf.psnr(blur, a) < 30.0

    # metric identities
    assert math.isinf(lf.psnr(a, a))
    v = a[0, 0]
    assert abs(lf.ncc(2.5 * v + 0.3, v) - 1.0) < 1e-9
    g = np.mean(v, axis=2, keepdims=True)
    assert lf.ssim_gray(g, g) == 1.0
    assert lf.lmse_gray(2.0 * g, g) < 1e-12
    m = lf.evaluate_pair(a, a)
    assert math.isinf(m["psnr"]) and m["ssim"] == 1.0 and m["lmse"] == 0.0

    # parameter budget: stock model, and the attention head ablation delta
    full = lf.ModelConfig()
    rep = lf.count_params(full)
    assert rep["total"] == sum(rep["rows"].values())
    flat = lf.ModelConfig()
    flat.use_dpva = False
    flat.use_ape = False
    assert lf.count_params(flat)["total"] < rep["total"]

    # errors surface as the package exception
    for bad in (
        lambda: lf.epi(a, "diagonal", 0, 0),
        lambda: lf.sample_trajectory(1, 4, 1.0, 1.0, 5),
        lambda: lf.lmse_gray(g[:10, :10], g[:10, :10]),
        lambda: lf.checkpoint_config(__file__),
    ):
        try:
            bad()
        except lf.LfdeblurError:
            pass
        else:
            raise AssertionError("expected LfdeblurError")

    print("python smoke: ok")


if __name__ == "__main__":
    main()
