# Learn the split and the two pair weights from a single trajectory.
import numpy as np

from gossip_blocks import five_node_model, run_five_node
from gossip_blocks.harness import run_seeds

run = run_five_node(seed=3, steps=10 ** 5, log_every=5000)
run.detector.labels  # community of each agent, up to relabeling
run.last_wrong  # last step with a wrong partition
run.detector.w_s_hat, run.detector.w_d_hat  # true: 0.05, 7/240

trace = run.trace
np.c_[trace.t, trace.accuracy, trace.w_s_hat][:8]

# longer runs tighten the weight estimates
runs = run_seeds(lambda s: run_five_node(s, steps=10 ** 6, log_every=10 ** 5), range(5))
err = [abs(r.detector.w_s_hat - five_node_model().w_s) for r in runs]
np.median(err)

if __name__ == "__main__":
    print("labels:", run.detector.labels, "last wrong step:", run.last_wrong)
    print("w_s_hat, w_d_hat:", run.detector.w_s_hat, run.detector.w_d_hat)
    print("median |w_s_hat - w_s| at 1e6 steps:", np.median(err))
