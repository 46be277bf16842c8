"""End-to-end smoke test of the `cvgs` extension module on a tiny scene."""

import math
import sys
import tempfile
from pathlib import Path

import cvgs


def main() -> int:
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        manifest = cvgs.generate_scene(
            tmp / "scene",
            width=64, height=32, supersample=1,
            ground_train=6, aerial_train=4, held_out=2, init_points=150, seed=3,
        )
        scene = cvgs.Scene.load(manifest)
        ground = scene.view_ids("ground_train")
        assert len(ground) == 6 and len(scene.view_ids("aerial_train")) == 4
        cam = scene.camera(ground[0])
        assert (cam.width, cam.height) == (64, 32)

        cfg = cvgs.TrainConfig(iterations=30, densify_start=10, densify_interval=10)
        field, trace = scene.train("ground", cfg)
        assert len(trace) == 30 and all(math.isfinite(t) for t in trace)
        assert len(field) > 0 and len(field.params(0)) == 14

        ckpt = tmp / "ground.gsuc"
        field.save(ckpt)
        again = cvgs.GaussianField.load(ckpt)
        color, alpha, depth = again.render(cam, scene.sky)
        assert len(color) == 64 * 32 * 3 and len(alpha) == len(depth) == 64 * 32
        assert color == field.render(cam, scene.sky)[0]

        gt = scene.image(ground[0])
        p = cvgs.psnr(64, 32, color, gt)
        s = cvgs.ssim(64, 32, color, gt)
        assert math.isfinite(p) and -1.0 <= s <= 1.0
        held_psnr, held_ssim = scene.evaluate(field, "held_out")
        assert math.isfinite(held_psnr)

        mean, var = cvgs.ensemble_mean_var(1, 1, [[0.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        assert mean == [0.5] * 3 and var == [0.25] * 3
        fused = cvgs.fuse_variance(1, 1, var)
        assert abs(fused[0] - math.log(1.25)) < 1e-6
        (w,) = cvgs.normalize([[0.0, 1.0, 4.0]], 2.0)
        assert all(0.0 <= v <= 1.0 for v in w)

        try:
            scene.train("uc", cfg)
        except ValueError:
            pass
        else:
            raise AssertionError("uc without weights should fail")

        print(f"ok: {len(field)} gaussians, train-view psnr {p:.2f}, held-out psnr {held_psnr:.2f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
