"""A synthetic pointing session, with and without nearest-target activation.

The operator model obeys MT = a + b*ID plus noise.  Replaying the very same
traces with activation on selects as soon as the intended target becomes the
nearest one, so the movement part of MT shrinks and with it the dependence on
ID.
"""

from gazebench import fitts

op = fitts.OperatorModel(sigma_ms=120.0)
results = fitts.simulate_session(op, seed=6, repetitions=6)
half = len(results) // 2
base, adaptive = fitts.summarize_session(results[:half]), fitts.summarize_session(results[half:])

print(f"{'ID (bits)':>9} {'MT plain':>9} {'MT adapt':>9} {'TP plain':>9} {'TP adapt':>9}")
for a, b in zip(base.rows, adaptive.rows):
    print(f"{a.id_bits:9.3f} {a.mean_mt_ms:9.0f} {b.mean_mt_ms:9.0f} {a.throughput_bps:9.3f} {b.throughput_bps:9.3f}")
print(f"plain:    MT = {base.intercept_ms:.0f} + {base.slope_ms_per_bit:.0f}*ID ms, r = {base.pearson_r:.3f}")
print(f"adaptive: MT = {adaptive.intercept_ms:.0f} + {adaptive.slope_ms_per_bit:.0f}*ID ms, r = {adaptive.pearson_r:.3f}")

t = fitts.paired_t_test([r.movement_time_ms for r in results[:half]], [r.movement_time_ms for r in results[half:]])
print(f"paired t-test on per-trial MT: t({t.df}) = {t.t:.2f}, p = {t.p_value:.2g}, d = {t.cohens_d:.2f}")

noiseless = fitts.summarize_session(fitts.simulate_session(fitts.OperatorModel(sigma_ms=0, jitter_px=0, click_spread=0),
                                                           seed=6, adaptive=False))
print(f"noiseless operator: r = {noiseless.pearson_r:.12f}")
