"""Cursor path efficiency around the task axis.

Every trace is expressed relative to the straight line from the start button
to the target; the seven measures then describe how the path wanders around
that line.
"""

from gazebench import fitts, pathmetrics

axis = pathmetrics.TaskAxis((0, 0), (10, 0), 2)
zigzag = [(0, 1), (1, -1), (2, 1), (3, -1)]
print("zigzag:", pathmetrics.efficiency_metrics(zigzag, axis).as_dict())

for jitter in (0.0, 3.0, 12.0):
    op = fitts.OperatorModel(jitter_px=jitter)
    results = fitts.simulate_session(op, seed=1, adaptive=False)
    reports = [pathmetrics.efficiency_metrics(r.xy, pathmetrics.TaskAxis(r.source_px, r.target_px, r.spec.width_px))
               for r in results]
    mean = pathmetrics.mean_reports(reports)
    print(f"jitter {jitter:4.1f} px: " + " ".join(f"{k}={v:.2f}" for k, v in mean.items()))
