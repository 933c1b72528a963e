"""Auditing where a wearable tracker lost the gaze.

A recording is generated with a known mix of frames: fully tracked,
fully lost and mixed.  The audit re-derives that mix from timestamps alone,
groups the lost samples into clusters and asks whether the user was looking
toward the edge of the tracking range just before or after each loss.
"""

from gazebench import tracelab

rec = tracelab.synthesize_recording(500, 300, 200, n_clusters=12, n_flagged=10, seed=9)
report = tracelab.audit_report(rec.gaze, rec.frames, lambda ref: tracelab.eye_image(rec.intensities[ref]),
                               intensity_threshold=131)
print(tracelab.format_report(report))

# The stricter reading needs both coordinates out of band at once.
strict = tracelab.audit_report(rec.gaze, rec.frames, criterion="both")
print(f"flagged clusters: {report.n_flagged} with 'either', {strict.n_flagged} with 'both'")
