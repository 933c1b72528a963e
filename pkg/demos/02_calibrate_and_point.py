"""Calibrate, train the screen regressor, then drive the cursor.

The simulated user looks at nine shrinking markers; each marker completes
once the gaze has held steady through every shrink step.  The recorded
vectors train a 6-32-16-2 network, which the cursor engine then uses with
0.2 s smoothing, a 15 px dead zone and nearest-target activation.
"""

import math

import numpy as np

from gazebench import calib, nnmap
from gazebench.cursor import CursorConfig, GazeSample, Target, TargetLayout, run_engine
from gazebench.geometry import HeadPose, synthetic_eye_vectors

model = calib.SyntheticGazeModel()
ds = calib.run_calibration_sim(model, noise_std=0.5, seed=3)
print(f"calibration: {len(ds)} rows from {len(set(ds.markers.tolist()))} markers")

net = nnmap.train(nnmap.init_network(nnmap.NetworkSpec(6, (32, 16), 2), seed=3), ds, nnmap.TrainConfig(seed=3))
r = net.report
print(f"training stopped by {r.rule} after {r.epochs} epochs (loss {r.loss:.2e}, R^2 {r.r2:.4f})")

rng = np.random.default_rng(4)
errors = []
for x in np.linspace(120, 680, 5):
    for y in np.linspace(90, 510, 5):
        pred = nnmap.forward(net, model.sample((x, y), model.random_pose(rng), 0.5, rng))
        errors.append(math.dist(pred, (x, y)))
print(f"held-out 5x5 grid: RMS error {math.sqrt(np.mean(np.square(errors))):.1f} px, worst {max(errors):.1f} px")

layout = TargetLayout([Target(k, c, 80) for k, c in enumerate([(200, 150), (600, 150), (400, 300), (200, 450), (600, 450)])])
goal = (600, 450)
samples = []
for i in range(40):
    pose = HeadPose(*rng.normal(0, 3, 3))
    left, right = synthetic_eye_vectors(model.world_point(goal), pose)
    samples.append((GazeSample(i / 100, left, right), pose))
events = run_engine(samples, net, CursorConfig(adaptive=True), layout)
last = events[-1]
print(f"looking at {goal} with a wobbling head: cursor at ({last.cursor_px[0]:.0f}, {last.cursor_px[1]:.0f}), "
      f"{last.kind.value} target {last.target_id}")

sweep = calib.block_calibration_sweep(model, seed=5, noise_std=2.0)
train, val, test = calib.split_dataset(sweep, seed=5)
clf = nnmap.train(nnmap.init_network(nnmap.NetworkSpec(3, (256, 128), 9, nnmap.CLASSIFICATION), seed=5),
                  train, nnmap.TrainConfig(seed=5), holdout=test)
print(f"nine-block classifier: test accuracy {clf.report.accuracy:.3f} after {clf.report.epochs} epoch(s)")
