"""The complete try-on pipeline on a synthetic scene.

Runs warp -> parse -> fusion in both eval and train modes (train blurs
the limb region of the coarse result before refinement), prints the
self-supervised loss report, and saves every intermediate.
"""

from pathlib import Path

import numpy as np

from vton import (
    PipelineConfig,
    TryOnModel,
    fileio,
    make_scene,
    make_training_sample,
    run_pipeline,
    training_losses,
)

OUT = Path(__file__).parent / "out" / "02"


def main():
    scene = make_scene(seed=5, height=96, width=64)
    kp = scene.keypoint_map()
    # seed 11 makes the untrained parse stage predict some arm pixels,
    # so the limb-aware branch visibly participates
    model = TryOnModel(PipelineConfig(height=96, width=64, seed=11))
    OUT.mkdir(parents=True, exist_ok=True)

    bundle = run_pipeline(model, scene.cloth, scene.cloth_mask, kp, scene.parsing,
                          scene.person, mode="eval")
    print("stage timings (ms):", {k: round(v, 1) for k, v in bundle.stage_ms.items()})

    fileio.save_image(OUT / "person_masked.png", bundle.person_masked)
    fileio.save_parsing(OUT / "parsing_pred.png", bundle.parsing_pred)
    fileio.save_image(OUT / "cloth_warped.png", bundle.cloth_warped)
    fileio.save_image(OUT / "limb_map.png", bundle.limb_map)
    fileio.save_image(OUT / "coarse.png", bundle.coarse)
    fileio.save_image(OUT / "fine.png", bundle.fine)

    sample = make_training_sample(scene.person, scene.parsing, kp, scene.cloth, scene.cloth_mask)
    report = training_losses(model, bundle, sample)
    print("self-supervised losses:")
    for name, value in report.items():
        print(f"  {name:24s} {value:.6f}")

    trained_view = run_pipeline(model, scene.cloth, scene.cloth_mask, kp, scene.parsing,
                                scene.person, mode="train")
    changed = np.abs(trained_view.fine - bundle.fine).max()
    arm_px = int((trained_view.limb_map.sum(axis=0) > 0).sum())
    print(f"predicted arm region: {arm_px} px; train-mode limb blur shifts the "
          f"refined image by up to {changed:.2e}")
    print(f"wrote {OUT}")


if __name__ == "__main__":
    main()
